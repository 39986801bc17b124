//! Building token automata by applying dictionary merges.
//!
//! The pipeline starts from a base automaton whose labels are the
//! single-symbol tokens of a string language (the universal language or a
//! compiled [`StringDfa`]), then applies each dictionary rule in priority
//! order. One merge step rewires the automaton so that wherever `u` could
//! previously be followed by `v`, the combined token is read instead, and
//! the split reading `u | v` stops being available; strings keep exactly
//! one surviving tokenization, the one the dictionary itself produces.
//!
//! Each step adds one fresh state per middle state of a `u v` path, so
//! state growth is bounded by the locality degree of the base automaton;
//! [`audit_merge`] checks the exact growth ledger of a step.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automaton::{InvarianceWitness, StateProvenance, TokenDfa};
use crate::core::{Dictionary, MergeRule, Token};
use crate::regex::{self, Ast, StringDfa};

/// The string language a token automaton is built from.
#[derive(Clone, Copy)]
pub enum Language<'a> {
    /// Every string over the dictionary alphabet.
    Universal,
    /// The language of a character automaton.
    Dfa(&'a StringDfa),
}

/// Construction failure.
#[derive(Debug, Error)]
pub enum BuildError {
    #[error("the alphabet is empty")]
    EmptyAlphabet,
    #[error("merge of rule {rule_index} left two token boundaries for one string")]
    InvarianceBroken { rule_index: usize, witness: Box<InvarianceWitness> },
    #[error("merge of rule {rule_index} violated its growth ledger")]
    AuditFailed { rule_index: usize, audit: Box<MergeAudit> },
}

/// Options for [`build_token_dfa`].
#[derive(Clone, Copy, Default)]
pub struct BuildOptions {
    /// Re-check context invariance and the growth ledger after every
    /// merge; failures abort the build.
    pub validate: bool,
    /// Drop dead states after the last merge.
    pub trim: bool,
}

/// The base automaton: same shape as the string language, every label a
/// single-symbol token.
pub fn base_token_dfa(lang: Language<'_>, d: &Dictionary) -> Result<TokenDfa, BuildError> {
    match lang {
        Language::Universal => {
            if d.sigma().is_empty() {
                return Err(BuildError::EmptyAlphabet);
            }
            let mut dfa = TokenDfa::new(1, 0);
            dfa.set_final(0, true);
            for &c in d.sigma() {
                let id = dfa.intern_token(Token::new(c.to_string()));
                dfa.set_transition(0, id, 0);
            }
            Ok(dfa)
        }
        Language::Dfa(m) => {
            let m = m.trim();
            let mut dfa = TokenDfa::new(m.num_states(), m.initial());
            for s in 0..m.num_states() {
                dfa.set_final(s, m.is_final(s));
                for (c, to) in m.transitions_from(s) {
                    let id = dfa.intern_token(Token::new(c.to_string()));
                    dfa.set_transition(s, id, to);
                }
            }
            Ok(dfa)
        }
    }
}

/// Applies one merge rule to the automaton in place.
///
/// With `u` and `v` the rule sides and `uv` their concatenation:
/// every two-step path `s1 -u-> s2 -v-> s3` gains a shortcut
/// `s1 -uv-> s3`; every middle state `s2` is copied to a fresh state
/// carrying all its outgoing transitions except `v` (and except `uv` too
/// when `u = v`); finally every `u` transition into a middle state,
/// including those out of the fresh copies, is redirected to the copy.
/// The redirect is what forbids reading the pair as `u | v` afterwards,
/// while the copies keep every other continuation alive.
///
/// A rule with no `u v` path anywhere leaves the automaton untouched;
/// in particular `uv` is not added to the alphabet.
pub fn apply_merge_in_place(dfa: &mut TokenDfa, rule: &MergeRule, rule_index: usize) {
    let (Some(uid), Some(vid)) =
        (dfa.token_id(rule.left.text()), dfa.token_id(rule.right.text()))
    else {
        return;
    };
    let n0 = dfa.num_states();
    let mut middle: BTreeSet<usize> = BTreeSet::new();
    for s1 in 0..n0 {
        if let Some(s2) = dfa.transition(s1, uid) {
            if dfa.transition(s2, vid).is_some() {
                middle.insert(s2);
            }
        }
    }
    if middle.is_empty() {
        return;
    }

    let merged = dfa.intern_token(rule.merged());
    for s1 in 0..n0 {
        if let Some(s2) = dfa.transition(s1, uid) {
            if let Some(s3) = dfa.transition(s2, vid) {
                dfa.set_transition(s1, merged, s3);
            }
        }
    }

    let mut fresh: Vec<(usize, usize)> = Vec::with_capacity(middle.len());
    for &s2 in &middle {
        let f = dfa.add_state();
        dfa.set_final(f, dfa.is_final(s2));
        dfa.set_provenance(f, Some(StateProvenance { source: s2, rule_index }));
        let outgoing: Vec<(usize, usize)> = dfa.transitions_from(s2).collect();
        for (t, to) in outgoing {
            if t == vid || (uid == vid && t == merged) {
                continue;
            }
            dfa.set_transition(f, t, to);
        }
        fresh.push((s2, f));
    }

    // Fresh states can themselves have u transitions into middle states,
    // so the redirect sweeps the grown state set.
    for s in 0..dfa.num_states() {
        if let Some(to) = dfa.transition(s, uid) {
            if let Ok(i) = fresh.binary_search_by_key(&to, |&(old, _)| old) {
                dfa.set_transition(s, uid, fresh[i].1);
            }
        }
    }
}

/// Pure counterpart of [`apply_merge_in_place`].
pub fn apply_merge(dfa: &TokenDfa, rule: &MergeRule, rule_index: usize) -> TokenDfa {
    let mut out = dfa.clone();
    apply_merge_in_place(&mut out, rule, rule_index);
    out
}

/// Growth ledger of one merge step, comparing the automaton before and
/// after.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MergeAudit {
    pub rule_index: usize,
    /// Middle states of the step: targets of `u` with an outgoing `v`.
    pub middle_count: usize,
    pub states_before: usize,
    pub states_after: usize,
    /// Tokens of the old alphabet, the merged token aside, whose
    /// incoming-image size changed, as (token, size before, size after).
    /// Must be empty.
    pub e_set_mismatches: Vec<(Token, usize, usize)>,
    /// Incoming-image size of the merged token before the step: zero
    /// unless an earlier rule already minted the same token.
    pub e_merged_before: usize,
    /// Incoming-image size of the merged token afterwards.
    pub e_merged_after: usize,
    /// Incoming-image size of the right side before; bounds the growth of
    /// the merged token's image, since new merged-token edges only ever
    /// target old right-side targets.
    pub e_right_before: usize,
}

impl MergeAudit {
    /// All four growth relations hold: states grew by exactly the middle
    /// count, every other token kept its image size, and the merged
    /// token's image grew by at most the old right-side image. When the
    /// merged token is new, the last relation is the plain bound by the
    /// old right-side image.
    pub fn holds(&self) -> bool {
        self.states_after == self.states_before + self.middle_count
            && self.e_set_mismatches.is_empty()
            && self.e_merged_after <= self.e_merged_before + self.e_right_before
    }
}

/// Audits one merge step given snapshots from before and after it.
pub fn audit_merge(
    before: &TokenDfa,
    after: &TokenDfa,
    rule: &MergeRule,
    rule_index: usize,
) -> MergeAudit {
    let middle_count = before
        .e_set_with_continuation(&rule.left, &rule.right)
        .len();
    let merged = rule.merged();
    let e_set_mismatches = before
        .alphabet()
        .iter()
        .filter(|t| t.text() != merged.text())
        .filter_map(|t| {
            let b = before.e_set(t).len();
            let a = after.e_set(t).len();
            (a != b).then(|| (t.clone(), b, a))
        })
        .collect();
    MergeAudit {
        rule_index,
        middle_count,
        states_before: before.num_states(),
        states_after: after.num_states(),
        e_set_mismatches,
        e_merged_before: before.e_set(&merged).len(),
        e_merged_after: after.e_set(&merged).len(),
        e_right_before: before.e_set(&rule.right).len(),
    }
}

/// Builds the token automaton of a string language under a dictionary:
/// the base automaton with every rule applied in priority order.
pub fn build_token_dfa(
    lang: Language<'_>,
    d: &Dictionary,
    opts: BuildOptions,
) -> Result<TokenDfa, BuildError> {
    let mut dfa = base_token_dfa(lang, d)?;
    for (i, rule) in d.rules().iter().enumerate() {
        if opts.validate {
            let before = dfa.clone();
            apply_merge_in_place(&mut dfa, rule, i);
            let audit = audit_merge(&before, &dfa, rule, i);
            if !audit.holds() {
                return Err(BuildError::AuditFailed { rule_index: i, audit: Box::new(audit) });
            }
            if let Some(witness) = dfa.context_invariance_witness() {
                return Err(BuildError::InvarianceBroken {
                    rule_index: i,
                    witness: Box::new(witness),
                });
            }
        } else {
            apply_merge_in_place(&mut dfa, rule, i);
        }
    }
    if opts.trim {
        dfa = dfa.trim();
    }
    Ok(dfa)
}

/// Token automaton for the streams whose underlying string contains a
/// match of `ast` anywhere. `extra_sigma` widens the alphabet beyond the
/// dictionary's own symbols.
pub fn search_token_dfa(
    ast: &Ast,
    d: &Dictionary,
    extra_sigma: &BTreeSet<char>,
    opts: BuildOptions,
) -> Result<TokenDfa, BuildError> {
    let sigma: BTreeSet<char> = d.sigma().iter().chain(extra_sigma.iter()).copied().collect();
    if sigma.is_empty() {
        return Err(BuildError::EmptyAlphabet);
    }
    let search = regex::compile_search_ast(ast, &sigma);
    build_token_dfa(Language::Dfa(&search), d, opts)
}
