//! Reference tokenizers for merge dictionaries.
//!
//! Two textual semantics are implemented. [`tokenize_hf`] applies rules
//! strictly in priority order, merging the leftmost adjacent pair for the
//! current rule until the rule no longer applies (the merge-list semantics
//! of HuggingFace-style tokenizers). [`tokenize_sp`] re-selects the highest
//! priority applicable rule after every single merge and applies it at its
//! leftmost occurrence (SentencePiece-style). The two coincide on proper
//! dictionaries in which every rule mints a new token. A duplicate output
//! breaks the coincidence: with [b≀a, ba≀ba, b≀ba, bba≀ba, bbaba≀b,
//! b≀baba], the last rule rebuilds `bbaba` after the pass for `bbaba≀b`
//! has already finished, so on "bbabab" the pass-based semantics stop at
//! bbaba≀b while re-selection merges on to a single token.
//!
//! [`tokenize_hf`] exists twice: [`tokenize_hf_reference`] is a direct,
//! quadratic rendering of the textual rule that rescans from the start
//! after every merge, and [`tokenize_hf`] is a linked-list version doing
//! one pass per rule. The two are kept in lockstep by tests; the reference
//! version is the ground truth.

use crate::core::{Dictionary, ImproperRule, OutOfAlphabet, Token, Tokenization};

use thiserror::Error;

/// Why an input could not be tokenized.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum TokenizeError {
    #[error("dictionary is not proper: {0}")]
    Improper(#[from] ImproperRule),
    #[error(transparent)]
    OutOfAlphabet(#[from] OutOfAlphabet),
}

fn checked_symbols(d: &Dictionary, w: &str) -> Result<Vec<char>, TokenizeError> {
    d.check_proper()?;
    let mut symbols = Vec::with_capacity(w.len());
    for (position, symbol) in w.chars().enumerate() {
        if !d.sigma().contains(&symbol) {
            return Err(OutOfAlphabet { position, symbol }.into());
        }
        symbols.push(symbol);
    }
    Ok(symbols)
}

/// Direct rendering of the merge-list semantics: for each rule in priority
/// order, while the pair occurs, merge its leftmost occurrence and rescan
/// from the start. Quadratic; used as the ground truth for [`tokenize_hf`].
pub fn tokenize_hf_reference(d: &Dictionary, w: &str) -> Result<Tokenization, TokenizeError> {
    let symbols = checked_symbols(d, w)?;
    let mut toks: Vec<String> = symbols.iter().map(|c| c.to_string()).collect();
    for rule in d.rules() {
        loop {
            let hit = (0..toks.len().saturating_sub(1))
                .find(|&i| toks[i] == rule.left.text() && toks[i + 1] == rule.right.text());
            match hit {
                Some(i) => {
                    let right = toks.remove(i + 1);
                    toks[i].push_str(&right);
                }
                None => break,
            }
        }
    }
    Ok(toks.into_iter().map(Token::new).collect())
}

/// Merge-list tokenization over a doubly-linked list of symbol ranges: one
/// left-to-right pass per rule.
///
/// A single pass suffices because a merge can only create pairs involving
/// the merged token, which is strictly longer than either rule side and so
/// can never be half of the same rule's pair.
pub fn tokenize_hf(d: &Dictionary, w: &str) -> Result<Tokenization, TokenizeError> {
    let symbols = checked_symbols(d, w)?;
    let n = symbols.len();
    if n == 0 {
        return Ok(Tokenization::new());
    }
    // Node i covers symbols[start[i]..end[i]]; `next` threads live nodes.
    // Node 0 is always the list head: merges only ever unlink the right
    // partner of a pair.
    let start: Vec<usize> = (0..n).collect();
    let mut end: Vec<usize> = (1..=n).collect();
    let mut next: Vec<usize> = (1..=n).collect(); // n = past-the-end sentinel

    for rule in d.rules() {
        let left: Vec<char> = rule.left.symbols().collect();
        let right: Vec<char> = rule.right.symbols().collect();
        let matches = |s: usize, e: usize, pat: &[char]| {
            e - s == pat.len() && symbols[s..e] == *pat
        };
        let mut cur = 0;
        while cur < n && next[cur] < n {
            let nxt = next[cur];
            if matches(start[cur], end[cur], &left) && matches(start[nxt], end[nxt], &right) {
                end[cur] = end[nxt];
                next[cur] = next[nxt];
            }
            cur = next[cur];
        }
    }

    let mut out = Tokenization::new();
    let mut cur = 0;
    while cur < n {
        out.push(Token::new(symbols[start[cur]..end[cur]].iter().collect::<String>()));
        cur = next[cur];
    }
    Ok(out)
}

/// Re-ranking semantics: repeatedly pick the highest-priority rule that has
/// an adjacent occurrence anywhere in the current tokenization and merge
/// its leftmost occurrence; stop when no rule applies.
pub fn tokenize_sp(d: &Dictionary, w: &str) -> Result<Tokenization, TokenizeError> {
    let symbols = checked_symbols(d, w)?;
    let mut toks: Vec<String> = symbols.iter().map(|c| c.to_string()).collect();
    loop {
        let mut hit = None;
        'rules: for rule in d.rules() {
            for i in 0..toks.len().saturating_sub(1) {
                if toks[i] == rule.left.text() && toks[i + 1] == rule.right.text() {
                    hit = Some(i);
                    break 'rules;
                }
            }
        }
        match hit {
            Some(i) => {
                let right = toks.remove(i + 1);
                toks[i].push_str(&right);
            }
            None => break,
        }
    }
    Ok(toks.into_iter().map(Token::new).collect())
}

/// Every sequence of tokens from `gamma` whose projection is `w`, in a
/// deterministic order (depth-first, tokens tried in `gamma` order).
/// Intended for short inputs; the count can grow exponentially in `|w|`.
pub fn all_tokenizations(gamma: &[Token], w: &str) -> Vec<Tokenization> {
    let symbols: Vec<char> = w.chars().collect();
    let n = symbols.len();
    let gamma_syms: Vec<Vec<char>> = gamma.iter().map(|t| t.symbols().collect()).collect();

    // reachable[i]: the suffix starting at i can be covered by gamma tokens.
    let mut reachable = vec![false; n + 1];
    reachable[n] = true;
    for i in (0..n).rev() {
        reachable[i] = gamma_syms.iter().any(|g| {
            i + g.len() <= n && symbols[i..i + g.len()] == **g && reachable[i + g.len()]
        });
    }
    if !reachable[0] {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut acc: Vec<usize> = Vec::new();
    fn rec(
        i: usize,
        symbols: &[char],
        gamma: &[Token],
        gamma_syms: &[Vec<char>],
        reachable: &[bool],
        acc: &mut Vec<usize>,
        out: &mut Vec<Tokenization>,
    ) {
        let n = symbols.len();
        if i == n {
            out.push(acc.iter().map(|&g| gamma[g].clone()).collect());
            return;
        }
        for (gi, g) in gamma_syms.iter().enumerate() {
            if i + g.len() <= n && symbols[i..i + g.len()] == **g && reachable[i + g.len()] {
                acc.push(gi);
                rec(i + g.len(), symbols, gamma, gamma_syms, reachable, acc, out);
                acc.pop();
            }
        }
    }
    rec(0, &symbols, gamma, &gamma_syms, &reachable, &mut acc, &mut out);
    out
}
