//! Alphabets, tokens, tokenizations, and merge dictionaries.
//!
//! The base alphabet is a set of Unicode scalar values. A [`Token`] is a
//! nonempty string over the base alphabet; a [`Tokenization`] is a sequence
//! of tokens, kept distinct from the string it projects to (see
//! [`Tokenization::project`]). A [`Dictionary`] is an ordered list of merge
//! rules whose priority is their position; the base alphabet is inferred
//! from the rule tokens, and callers may declare extra symbols on top.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

/// A base symbol: one Unicode scalar value.
pub type Symbol = char;

/// A nonempty string over the base alphabet, used as a transition label and
/// as the unit of tokenizer output.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Token(String);

impl Token {
    /// Creates a token. Panics if `text` is empty.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        assert!(!text.is_empty(), "token text must be nonempty");
        Token(text)
    }

    /// Creates a token, returning `None` for empty text.
    pub fn try_new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        if text.is_empty() {
            None
        } else {
            Some(Token(text))
        }
    }

    pub fn text(&self) -> &str {
        &self.0
    }

    /// Number of base symbols (Unicode scalar values) in the token.
    pub fn symbol_count(&self) -> usize {
        self.0.chars().count()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.chars()
    }

    /// The token formed by concatenating `self` and `other`.
    pub fn concat(&self, other: &Token) -> Token {
        Token(format!("{}{}", self.0, other.0))
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A sequence of tokens. The empty sequence is allowed and projects to the
/// empty string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Tokenization(Vec<Token>);

impl Tokenization {
    pub fn new() -> Self {
        Tokenization(Vec::new())
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        Tokenization(tokens)
    }

    pub fn push(&mut self, t: Token) {
        self.0.push(t);
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }

    /// Concatenation of the token texts (the underlying string).
    pub fn project(&self) -> String {
        self.0.iter().map(Token::text).collect()
    }

    /// Length of the longest common prefix with `other`, counted in tokens.
    pub fn common_prefix_len(&self, other: &Tokenization) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }
}

impl FromIterator<Token> for Tokenization {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        Tokenization(iter.into_iter().collect())
    }
}

impl IntoIterator for Tokenization {
    type Item = Token;
    type IntoIter = std::vec::IntoIter<Token>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a Tokenization {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Tokenization {
    /// Debug-friendly rendering with tokens joined by `|`. Not parseable;
    /// the stream formats used for interchange escape token text properly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(t.text())?;
        }
        Ok(())
    }
}

/// One merge rule: adjacent occurrences of `left` and `right` fuse into the
/// single token `left · right`. Lower `priority` applies earlier.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MergeRule {
    pub left: Token,
    pub right: Token,
    /// Position in the dictionary; 0 is the highest priority.
    pub priority: usize,
}

impl MergeRule {
    /// The token produced by this rule.
    pub fn merged(&self) -> Token {
        self.left.concat(&self.right)
    }
}

/// Which side of a merge rule a diagnostic refers to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Witness that a dictionary is not proper: `token` on the given `side` of
/// rule `rule_index` is not produced by any earlier rule.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("rule {rule_index}: {side} token `{token}` is not produced by any earlier rule")]
pub struct ImproperRule {
    pub rule_index: usize,
    pub side: Side,
    pub token: Token,
}

/// An input symbol outside the base alphabet, with its 0-based character
/// position.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
#[error("symbol `{symbol}` at position {position} is outside the base alphabet")]
pub struct OutOfAlphabet {
    pub position: usize,
    pub symbol: Symbol,
}

/// Escaping applied to token text in the textual formats.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EscapeMode {
    /// Dictionary files: `\s` space, `\\` backslash, `\n` newline.
    Dictionary,
    /// Token stream records: dictionary escapes plus `\t` tab.
    Stream,
}

/// Malformed escape sequence in token text.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum EscapeError {
    #[error("unknown escape `\\{0}`")]
    Unknown(char),
    #[error("dangling backslash at end of token")]
    Dangling,
}

/// Escapes token text for the given format.
pub fn escape_token_text(text: &str, mode: EscapeMode) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\n' => out.push_str("\\n"),
            '\t' if mode == EscapeMode::Stream => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

/// Reverses [`escape_token_text`].
pub fn unescape_token_text(raw: &str, mode: EscapeMode) -> Result<String, EscapeError> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('s') => out.push(' '),
            Some('n') => out.push('\n'),
            Some('t') if mode == EscapeMode::Stream => out.push('\t'),
            Some(other) => return Err(EscapeError::Unknown(other)),
            None => return Err(EscapeError::Dangling),
        }
    }
    Ok(out)
}

/// Error from parsing a dictionary file or constructing a dictionary from
/// rule pairs. Line numbers are 1-based and count every line of the input,
/// including a skipped header.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum DictionaryError {
    #[error("line {line}: expected two space-separated fields")]
    Malformed { line: usize },
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("line {line}: {source}")]
    Escape { line: usize, source: EscapeError },
    #[error("line {line}: duplicate rule")]
    DuplicateRule { line: usize },
    #[error("rule {index}: duplicate of an earlier rule")]
    DuplicatePair { index: usize },
}

/// An ordered merge dictionary with its derived alphabets.
///
/// `sigma` is the set of all symbols occurring in any rule token plus any
/// symbols added via [`Dictionary::add_symbols`]. `gamma` lists every usable
/// token: one single-symbol token per element of sigma, then each rule's
/// merged token in rule order (first occurrence kept when two rules produce
/// the same text).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dictionary {
    rules: Vec<MergeRule>,
    sigma: BTreeSet<Symbol>,
    gamma: Vec<Token>,
}

impl Dictionary {
    /// Builds a dictionary from `(left, right)` pairs in priority order.
    /// Rejects an exact duplicate of an earlier pair; two rules may still
    /// produce the same merged token from different splits.
    pub fn new(pairs: impl IntoIterator<Item = (Token, Token)>) -> Result<Self, DictionaryError> {
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut rules = Vec::new();
        for (priority, (left, right)) in pairs.into_iter().enumerate() {
            if !seen.insert((left.text().to_string(), right.text().to_string())) {
                return Err(DictionaryError::DuplicatePair { index: priority });
            }
            rules.push(MergeRule { left, right, priority });
        }
        let mut d = Dictionary { rules, sigma: BTreeSet::new(), gamma: Vec::new() };
        d.rederive();
        Ok(d)
    }

    /// Parses the dictionary file format: UTF-8 text, an optional first line
    /// beginning with `#` which is skipped, then one rule per nonempty line
    /// as `<left> <right>` with exactly one separating space. Token text is
    /// unescaped with [`EscapeMode::Dictionary`].
    pub fn parse(text: &str) -> Result<Self, DictionaryError> {
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if idx == 0 && line.starts_with('#') {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 2 {
                return Err(DictionaryError::Malformed { line: lineno });
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(DictionaryError::EmptyToken { line: lineno });
            }
            let unescape = |raw: &str| {
                unescape_token_text(raw, EscapeMode::Dictionary)
                    .map_err(|source| DictionaryError::Escape { line: lineno, source })
            };
            let left = Token::new(unescape(fields[0])?);
            let right = Token::new(unescape(fields[1])?);
            if !seen.insert((left.text().to_string(), right.text().to_string())) {
                return Err(DictionaryError::DuplicateRule { line: lineno });
            }
            let priority = rules.len();
            rules.push(MergeRule { left, right, priority });
        }
        let mut d = Dictionary { rules, sigma: BTreeSet::new(), gamma: Vec::new() };
        d.rederive();
        Ok(d)
    }

    /// Serializes to the dictionary file format (no header line). Parsing
    /// the result reproduces the same rules; extra declared symbols are not
    /// representable in the format and are dropped.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&escape_token_text(rule.left.text(), EscapeMode::Dictionary));
            out.push(' ');
            out.push_str(&escape_token_text(rule.right.text(), EscapeMode::Dictionary));
            out.push('\n');
        }
        out
    }

    /// Declares extra base symbols beyond those occurring in rule tokens.
    pub fn add_symbols(&mut self, symbols: impl IntoIterator<Item = Symbol>) {
        self.sigma.extend(symbols);
        self.rederive_gamma();
    }

    fn rederive(&mut self) {
        for rule in &self.rules {
            self.sigma.extend(rule.left.symbols());
            self.sigma.extend(rule.right.symbols());
        }
        self.rederive_gamma();
    }

    fn rederive_gamma(&mut self) {
        let mut gamma: Vec<Token> = self.sigma.iter().map(|&c| Token::new(c.to_string())).collect();
        let mut seen: HashSet<String> = gamma.iter().map(|t| t.text().to_string()).collect();
        for rule in &self.rules {
            let merged = rule.merged();
            if seen.insert(merged.text().to_string()) {
                gamma.push(merged);
            }
        }
        self.gamma = gamma;
    }

    pub fn rules(&self) -> &[MergeRule] {
        &self.rules
    }

    /// Number of rules.
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn sigma(&self) -> &BTreeSet<Symbol> {
        &self.sigma
    }

    pub fn gamma(&self) -> &[Token] {
        &self.gamma
    }

    pub fn contains_token(&self, text: &str) -> bool {
        self.gamma.iter().any(|t| t.text() == text)
    }

    /// Longest token length in symbols; 0 for an empty alphabet.
    pub fn max_token_len(&self) -> usize {
        self.gamma.iter().map(Token::symbol_count).max().unwrap_or(0)
    }

    /// The dictionary made of the first `n` rules, keeping the full base
    /// alphabet (including symbols that only occur in later rules).
    pub fn prefix(&self, n: usize) -> Dictionary {
        let mut d = Dictionary {
            rules: self.rules[..n.min(self.rules.len())].to_vec(),
            sigma: self.sigma.clone(),
            gamma: Vec::new(),
        };
        d.rederive_gamma();
        d
    }

    /// Checks properness: every rule side of two or more symbols must be the
    /// merged token of a strictly earlier rule. Returns the first offending
    /// rule (scanning rules in order, left side before right).
    pub fn check_proper(&self) -> Result<(), ImproperRule> {
        let mut produced: HashSet<&str> = HashSet::new();
        let mut merged_texts: Vec<String> = Vec::with_capacity(self.rules.len());
        for rule in &self.rules {
            merged_texts.push(rule.merged().text().to_string());
        }
        for (j, rule) in self.rules.iter().enumerate() {
            for (side, token) in [(Side::Left, &rule.left), (Side::Right, &rule.right)] {
                if token.symbol_count() > 1 && !produced.contains(token.text()) {
                    return Err(ImproperRule { rule_index: j, side, token: token.clone() });
                }
            }
            produced.insert(&merged_texts[j]);
        }
        Ok(())
    }

    pub fn is_proper(&self) -> bool {
        self.check_proper().is_ok()
    }

    /// The tokenization with one single-symbol token per input symbol.
    pub fn base_tokenization(&self, w: &str) -> Result<Tokenization, OutOfAlphabet> {
        let mut tokens = Vec::new();
        for (position, symbol) in w.chars().enumerate() {
            if !self.sigma.contains(&symbol) {
                return Err(OutOfAlphabet { position, symbol });
            }
            tokens.push(Token::new(symbol.to_string()));
        }
        Ok(Tokenization(tokens))
    }
}
