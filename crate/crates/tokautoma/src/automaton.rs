//! Deterministic automata whose transition labels are tokens.
//!
//! A token DFA reads a sequence of tokens, not a string: two runs may
//! consume the same underlying string while disagreeing on where the token
//! boundaries lie. [`TokenDfa::context_invariance_witness`] decides whether
//! that can happen anywhere in the automaton. The remaining analyses cover
//! language equivalence with shortest counterexamples, image sets of token
//! sequences and the locality degree built on them, streaming acceptance,
//! and a sliding-window validity check for degree-1 automata.
//!
//! Automata serialize to a canonical JSON document: equal automata produce
//! byte-identical text.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{Token, Tokenization};

/// Dense 0-based state index.
pub type StateId = usize;
/// Dense 0-based index into an automaton's token alphabet.
pub type TokenId = usize;

/// Where a state copied by the merge construction came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct StateProvenance {
    /// State this one was copied from.
    pub source: StateId,
    /// Index of the dictionary rule whose application created it.
    pub rule_index: usize,
}

/// A deterministic finite automaton over a token alphabet.
///
/// Transitions form a partial map: at most one target per (state, token).
/// States are dense indices; the token alphabet is an ordered list of
/// distinct tokens addressed by [`TokenId`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TokenDfa {
    alphabet: Vec<Token>,
    token_ids: HashMap<Token, TokenId>,
    delta: Vec<std::collections::BTreeMap<TokenId, StateId>>,
    initial: StateId,
    finals: Vec<bool>,
    provenance: Vec<Option<StateProvenance>>,
}

impl TokenDfa {
    /// An automaton with `num_states` states, no tokens, no transitions,
    /// and no accepting states.
    pub fn new(num_states: usize, initial: StateId) -> Self {
        assert!(initial < num_states, "initial state {initial} out of range");
        TokenDfa {
            alphabet: Vec::new(),
            token_ids: HashMap::new(),
            delta: vec![Default::default(); num_states],
            initial,
            finals: vec![false; num_states],
            provenance: vec![None; num_states],
        }
    }

    /// Adds `token` to the alphabet if absent; returns its id.
    pub fn intern_token(&mut self, token: Token) -> TokenId {
        if let Some(&id) = self.token_ids.get(token.text()) {
            return id;
        }
        let id = self.alphabet.len();
        self.alphabet.push(token.clone());
        self.token_ids.insert(token, id);
        id
    }

    pub fn add_state(&mut self) -> StateId {
        self.delta.push(Default::default());
        self.finals.push(false);
        self.provenance.push(None);
        self.delta.len() - 1
    }

    pub fn set_final(&mut self, state: StateId, is_final: bool) {
        self.finals[state] = is_final;
    }

    pub fn set_provenance(&mut self, state: StateId, p: Option<StateProvenance>) {
        self.provenance[state] = p;
    }

    /// Inserts or overwrites the transition `(from, token) -> to`.
    pub fn set_transition(&mut self, from: StateId, token: TokenId, to: StateId) {
        assert!(from < self.delta.len() && to < self.delta.len(), "state out of range");
        assert!(token < self.alphabet.len(), "token id out of range");
        self.delta[from].insert(token, to);
    }

    pub fn remove_transition(&mut self, from: StateId, token: TokenId) {
        self.delta[from].remove(&token);
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|m| m.len()).sum()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, state: StateId) -> bool {
        self.finals[state]
    }

    /// Accepting states in ascending order.
    pub fn finals(&self) -> Vec<StateId> {
        (0..self.num_states()).filter(|&s| self.finals[s]).collect()
    }

    pub fn alphabet(&self) -> &[Token] {
        &self.alphabet
    }

    pub fn token(&self, id: TokenId) -> &Token {
        &self.alphabet[id]
    }

    pub fn token_id(&self, text: &str) -> Option<TokenId> {
        self.token_ids.get(text).copied()
    }

    pub fn transition(&self, from: StateId, token: TokenId) -> Option<StateId> {
        self.delta.get(from).and_then(|m| m.get(&token).copied())
    }

    /// Outgoing transitions of `state` in ascending token id order.
    pub fn transitions_from(
        &self,
        state: StateId,
    ) -> impl Iterator<Item = (TokenId, StateId)> + '_ {
        self.delta[state].iter().map(|(&t, &s)| (t, s))
    }

    pub fn provenance(&self, state: StateId) -> Option<StateProvenance> {
        self.provenance[state]
    }

    /// Follows the transitions for each token of `t` starting at `from`.
    /// Returns the state reached, or `None` as soon as a step is undefined
    /// (including tokens outside the alphabet).
    ///
    /// Panics if `from` is not a state of the automaton.
    pub fn run(&self, from: StateId, t: &Tokenization) -> Option<StateId> {
        assert!(from < self.num_states(), "unknown state id {from}");
        let mut state = from;
        for token in t {
            let id = self.token_id(token.text())?;
            state = self.transition(state, id)?;
        }
        Some(state)
    }

    /// True iff the run from the initial state over `t` ends in an
    /// accepting state.
    pub fn accepts(&self, t: &Tokenization) -> bool {
        self.run(self.initial, t).is_some_and(|s| self.finals[s])
    }

    /// Removes states that are unreachable from the initial state or from
    /// which no accepting state can be reached. The initial state is always
    /// kept so the result stays well formed; the language is unchanged.
    pub fn trim(&self) -> TokenDfa {
        let n = self.num_states();
        let mut forward = vec![false; n];
        let mut queue = VecDeque::from([self.initial]);
        forward[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.transitions_from(s) {
                if !forward[t] {
                    forward[t] = true;
                    queue.push_back(t);
                }
            }
        }

        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for s in 0..n {
            for (_, t) in self.transitions_from(s) {
                reverse[t].push(s);
            }
        }
        let mut backward = vec![false; n];
        let mut queue: VecDeque<StateId> =
            (0..n).filter(|&s| self.finals[s]).inspect(|&s| backward[s] = true).collect();
        while let Some(s) = queue.pop_front() {
            for &p in &reverse[s] {
                if !backward[p] {
                    backward[p] = true;
                    queue.push_back(p);
                }
            }
        }

        let keep: Vec<StateId> = (0..n)
            .filter(|&s| (forward[s] && backward[s]) || s == self.initial)
            .collect();
        let mut renum: HashMap<StateId, StateId> = HashMap::new();
        for (new, &old) in keep.iter().enumerate() {
            renum.insert(old, new);
        }

        let mut out = TokenDfa::new(keep.len(), renum[&self.initial]);
        out.alphabet = self.alphabet.clone();
        out.token_ids = self.token_ids.clone();
        for (new, &old) in keep.iter().enumerate() {
            out.finals[new] = self.finals[old];
            out.provenance[new] = self.provenance[old];
            for (tok, to) in self.transitions_from(old) {
                if let Some(&to_new) = renum.get(&to) {
                    out.delta[new].insert(tok, to_new);
                }
            }
        }
        out
    }

    /// The set `{delta(q, token) : q in states}` for defined transitions.
    /// A token outside the alphabet has an empty image.
    pub fn image(&self, states: &BTreeSet<StateId>, token: &Token) -> BTreeSet<StateId> {
        match self.token_id(token.text()) {
            None => BTreeSet::new(),
            Some(id) => states.iter().filter_map(|&s| self.transition(s, id)).collect(),
        }
    }

    fn all_states(&self) -> BTreeSet<StateId> {
        (0..self.num_states()).collect()
    }

    /// States with an incoming `u` transition from anywhere.
    pub fn e_set(&self, u: &Token) -> BTreeSet<StateId> {
        self.image(&self.all_states(), u)
    }

    /// Members of the `u` image that also have an outgoing `v` transition.
    pub fn e_set_with_continuation(&self, u: &Token, v: &Token) -> BTreeSet<StateId> {
        let vid = self.token_id(v.text());
        self.e_set(u)
            .into_iter()
            .filter(|&s| vid.is_some_and(|v| self.transition(s, v).is_some()))
            .collect()
    }

    /// Members of the `u` image with no outgoing `v` transition.
    pub fn e_set_without_continuation(&self, u: &Token, v: &Token) -> BTreeSet<StateId> {
        let with: BTreeSet<StateId> = self.e_set_with_continuation(u, v);
        self.e_set(u).into_iter().filter(|s| !with.contains(s)).collect()
    }
}

/// Default cap on the number of distinct image sets explored by
/// [`TokenDfa::dloc`].
pub const DLOC_SET_CAP: usize = 1 << 20;

/// Result of a locality degree computation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dloc {
    /// Largest image-set size over token sequences of the requested length.
    pub value: usize,
    /// A sequence achieving the maximum; `None` only when the alphabet is
    /// empty and the length is positive, so no sequence exists.
    pub witness: Option<Tokenization>,
}

/// The image-set exploration outgrew its cap; no verdict was produced.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
#[error("locality analysis exceeded the cap of {cap} distinct image sets")]
pub struct DlocCapExceeded {
    pub cap: usize,
}

impl TokenDfa {
    /// Degree of `k`-locality: the maximum, over token sequences of length
    /// `k`, of the number of states reachable by reading the sequence from
    /// anywhere. Computed by iterating distinct image sets of the full
    /// state set; `cap` bounds how many distinct sets may be explored.
    ///
    /// Length 0 is an extension: the image of the empty sequence is the
    /// whole state set, so the value is the state count.
    pub fn dloc(&self, k: usize, cap: usize) -> Result<Dloc, DlocCapExceeded> {
        if k == 0 {
            return Ok(Dloc { value: self.num_states(), witness: Some(Tokenization::new()) });
        }
        let mut level: Vec<(BTreeSet<StateId>, Vec<TokenId>)> = vec![(self.all_states(), vec![])];
        let mut explored = 1usize;
        for _ in 0..k {
            let mut next: Vec<(BTreeSet<StateId>, Vec<TokenId>)> = Vec::new();
            let mut seen: HashSet<Vec<StateId>> = HashSet::new();
            for (set, path) in &level {
                for id in 0..self.alphabet.len() {
                    let img: BTreeSet<StateId> =
                        set.iter().filter_map(|&s| self.transition(s, id)).collect();
                    let key: Vec<StateId> = img.iter().copied().collect();
                    if seen.insert(key) {
                        explored += 1;
                        if explored > cap {
                            return Err(DlocCapExceeded { cap });
                        }
                        let mut path = path.clone();
                        path.push(id);
                        next.push((img, path));
                    }
                }
            }
            level = next;
        }
        match level.iter().max_by_key(|(set, _)| set.len()) {
            None => Ok(Dloc { value: 0, witness: None }),
            Some((set, path)) => Ok(Dloc {
                value: set.len(),
                witness: Some(path.iter().map(|&id| self.alphabet[id].clone()).collect()),
            }),
        }
    }
}

/// Two runs that read the same string with different token sequences.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InvarianceWitness {
    pub start_a: StateId,
    pub tokens_a: Tokenization,
    pub start_b: StateId,
    pub tokens_b: Tokenization,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct CiKey {
    p: StateId,
    q: StateId,
    /// Unread tail of the ahead run's last token; empty means aligned.
    pending: String,
    /// When pending is nonempty: true if run A (from `p`'s side) is ahead.
    left_ahead: bool,
}

struct CiNode {
    key: CiKey,
    parent: Option<usize>,
    step_a: Option<TokenId>,
    step_b: Option<TokenId>,
}

impl TokenDfa {
    /// True iff no two runs anywhere in the automaton read the same string
    /// with different token sequences.
    pub fn is_context_invariant(&self) -> bool {
        self.context_invariance_witness().is_none()
    }

    /// Searches for two runs (from any pair of start states, including a
    /// state paired with itself) that consume the same string but disagree
    /// on token boundaries. Returns `None` when no such pair exists.
    ///
    /// The search walks configurations `(p, q, pending)` where `pending` is
    /// the suffix of the ahead run's last token that the behind run has not
    /// yet consumed; `pending` is always a proper suffix of some token, so
    /// the space is finite. Two runs disagree for the first time by reading
    /// tokens of different lengths, and a violation is complete exactly
    /// when the behind run later realigns (`pending` consumed in full).
    pub fn context_invariance_witness(&self) -> Option<InvarianceWitness> {
        let n = self.num_states();
        let mut arena: Vec<CiNode> = Vec::new();
        let mut visited: HashSet<CiKey> = HashSet::new();
        let mut queue: VecDeque<usize> = VecDeque::new();

        for p in 0..n {
            for q in 0..n {
                let key = CiKey { p, q, pending: String::new(), left_ahead: true };
                if visited.insert(key.clone()) {
                    arena.push(CiNode { key, parent: None, step_a: None, step_b: None });
                    queue.push_back(arena.len() - 1);
                }
            }
        }

        while let Some(idx) = queue.pop_front() {
            let CiKey { p, q, pending, .. } = arena[idx].key.clone();
            if pending.is_empty() {
                // Aligned: both runs advance by one token each; the tokens
                // must spell the same continuation, so one is a prefix of
                // the other.
                for (ta, pa) in self.transitions_from(p) {
                    for (tb, qb) in self.transitions_from(q) {
                        let sa = self.alphabet[ta].text();
                        let sb = self.alphabet[tb].text();
                        let key = if ta == tb {
                            CiKey { p: pa, q: qb, pending: String::new(), left_ahead: true }
                        } else if let Some(rest) = sa.strip_prefix(sb) {
                            CiKey { p: pa, q: qb, pending: rest.to_string(), left_ahead: true }
                        } else if let Some(rest) = sb.strip_prefix(sa) {
                            CiKey { p: pa, q: qb, pending: rest.to_string(), left_ahead: false }
                        } else {
                            continue;
                        };
                        if visited.insert(key.clone()) {
                            arena.push(CiNode {
                                key,
                                parent: Some(idx),
                                step_a: Some(ta),
                                step_b: Some(tb),
                            });
                            queue.push_back(arena.len() - 1);
                        }
                    }
                }
            } else {
                let left_ahead = arena[idx].key.left_ahead;
                // Only the behind run moves until it has consumed `pending`.
                let behind = if left_ahead { q } else { p };
                for (tb, sb_to) in self.transitions_from(behind) {
                    let text = self.alphabet[tb].text();
                    let (step_a, step_b) = if left_ahead {
                        (None, Some(tb))
                    } else {
                        (Some(tb), None)
                    };
                    if text == pending {
                        // Realigned with diverged token boundaries.
                        let (p2, q2) = if left_ahead { (p, sb_to) } else { (sb_to, q) };
                        arena.push(CiNode {
                            key: CiKey { p: p2, q: q2, pending: String::new(), left_ahead },
                            parent: Some(idx),
                            step_a,
                            step_b,
                        });
                        return Some(self.reconstruct_witness(&arena, arena.len() - 1));
                    }
                    let key = if let Some(rest) = pending.strip_prefix(text) {
                        let (p2, q2) = if left_ahead { (p, sb_to) } else { (sb_to, q) };
                        CiKey { p: p2, q: q2, pending: rest.to_string(), left_ahead }
                    } else if let Some(rest) = text.strip_prefix(pending.as_str()) {
                        // The behind run overshoots and becomes the ahead one.
                        let (p2, q2) = if left_ahead { (p, sb_to) } else { (sb_to, q) };
                        CiKey { p: p2, q: q2, pending: rest.to_string(), left_ahead: !left_ahead }
                    } else {
                        continue;
                    };
                    if visited.insert(key.clone()) {
                        arena.push(CiNode { key, parent: Some(idx), step_a, step_b });
                        queue.push_back(arena.len() - 1);
                    }
                }
            }
        }
        None
    }

    fn reconstruct_witness(&self, arena: &[CiNode], last: usize) -> InvarianceWitness {
        let mut tokens_a = Vec::new();
        let mut tokens_b = Vec::new();
        let mut cursor = Some(last);
        let mut root = last;
        while let Some(i) = cursor {
            if let Some(t) = arena[i].step_a {
                tokens_a.push(self.alphabet[t].clone());
            }
            if let Some(t) = arena[i].step_b {
                tokens_b.push(self.alphabet[t].clone());
            }
            root = i;
            cursor = arena[i].parent;
        }
        tokens_a.reverse();
        tokens_b.reverse();
        let witness = InvarianceWitness {
            start_a: arena[root].key.p,
            tokens_a: tokens_a.into_iter().collect(),
            start_b: arena[root].key.q,
            tokens_b: tokens_b.into_iter().collect(),
        };
        debug_assert_eq!(
            witness.tokens_a.project(),
            witness.tokens_b.project(),
            "witness runs must read the same string"
        );
        debug_assert_ne!(witness.tokens_a, witness.tokens_b);
        debug_assert!(self.run(witness.start_a, &witness.tokens_a).is_some());
        debug_assert!(self.run(witness.start_b, &witness.tokens_b).is_some());
        witness
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

impl TokenDfa {
    /// True iff both automata accept the same set of tokenizations. The
    /// alphabets are unioned: a token absent from one side simply has no
    /// transitions there.
    pub fn equivalent(&self, other: &TokenDfa) -> bool {
        self.inequivalence_witness(other).is_none()
    }

    /// Returns a shortest tokenization accepted by exactly one of the two
    /// automata, or `None` if their languages are equal.
    ///
    /// Implemented as breadth-first exploration of the sink-completed
    /// product over the union alphabet, with union-find merging of state
    /// pairs already known to have to agree. The first disagreeing pair
    /// popped lies at the minimal distinguishing depth, so the counterexample
    /// is shortest.
    pub fn inequivalence_witness(&self, other: &TokenDfa) -> Option<Tokenization> {
        let union: Vec<&Token> = {
            let mut m: std::collections::BTreeMap<&str, &Token> = Default::default();
            for t in &self.alphabet {
                m.insert(t.text(), t);
            }
            for t in &other.alphabet {
                m.insert(t.text(), t);
            }
            m.into_values().collect()
        };

        // Sink-completed transition tables: state `n` is the dead sink.
        let table = |dfa: &TokenDfa| -> Vec<Vec<StateId>> {
            let n = dfa.num_states();
            let mut t = vec![vec![n; union.len()]; n + 1];
            for (uid, tok) in union.iter().enumerate() {
                if let Some(tid) = dfa.token_id(tok.text()) {
                    for (row, trow) in t.iter_mut().enumerate().take(n) {
                        if let Some(to) = dfa.transition(row, tid) {
                            trow[uid] = to;
                        }
                    }
                }
            }
            t
        };
        let ta = table(self);
        let tb = table(other);
        let (na, nb) = (self.num_states(), other.num_states());
        let fin_a = |s: StateId| s < na && self.finals[s];
        let fin_b = |s: StateId| s < nb && other.finals[s];

        let mut uf = UnionFind::new(na + 1 + nb + 1);
        let offset = na + 1;

        struct Node {
            a: StateId,
            b: StateId,
            parent: Option<usize>,
            uid: usize,
        }
        let mut arena: Vec<Node> =
            vec![Node { a: self.initial, b: other.initial, parent: None, uid: 0 }];
        let mut queue: VecDeque<usize> = VecDeque::from([0]);

        while let Some(idx) = queue.pop_front() {
            let (a, b) = (arena[idx].a, arena[idx].b);
            if !uf.union(a, offset + b) {
                continue;
            }
            if fin_a(a) != fin_b(b) {
                let mut tokens = Vec::new();
                let mut cursor = idx;
                while let Some(parent) = arena[cursor].parent {
                    tokens.push(union[arena[cursor].uid].clone());
                    cursor = parent;
                }
                tokens.reverse();
                return Some(tokens.into_iter().collect());
            }
            for uid in 0..union.len() {
                arena.push(Node { a: ta[a][uid], b: tb[b][uid], parent: Some(idx), uid });
                queue.push_back(arena.len() - 1);
            }
        }
        None
    }
}

/// Per-token verdict of a [`StreamMatcher`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct StreamStatus {
    /// Some run from the initial state is still live.
    pub alive: bool,
    /// The live run currently sits in an accepting state.
    pub accepting: bool,
}

/// Single-pass cursor over a token stream: constant work per token.
/// Once dead, the matcher stays dead.
pub struct StreamMatcher<'a> {
    dfa: &'a TokenDfa,
    state: Option<StateId>,
}

impl<'a> StreamMatcher<'a> {
    pub fn feed(&mut self, token: &Token) -> StreamStatus {
        if let Some(s) = self.state {
            self.state = self
                .dfa
                .token_id(token.text())
                .and_then(|id| self.dfa.transition(s, id));
        }
        self.status()
    }

    pub fn status(&self) -> StreamStatus {
        StreamStatus {
            alive: self.state.is_some(),
            accepting: self.state.is_some_and(|s| self.dfa.finals[s]),
        }
    }
}

/// Why a sliding-window validation could not run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum WindowError {
    /// The automaton's locality degree at the requested width is not 1.
    #[error("window validation requires locality degree 1, found {dloc}")]
    NotDegreeOne { dloc: usize },
    /// The degree could not be established under the default set cap.
    #[error("window validation precondition check overflowed: {0}")]
    CheckOverflow(DlocCapExceeded),
}

impl TokenDfa {
    /// Creates a streaming matcher positioned at the initial state.
    pub fn match_stream(&self) -> StreamMatcher<'_> {
        StreamMatcher { dfa: self, state: Some(self.initial) }
    }

    /// Sliding-window validity check, defined for automata whose locality
    /// degree at `k` is exactly 1: the stream passes iff its first token
    /// has a transition out of the initial state and every window of
    /// `k + 1` consecutive tokens labels a run somewhere in the automaton.
    /// Tokens outside the alphabet fail the check.
    pub fn window_validate<'t>(
        &self,
        k: usize,
        tokens: impl IntoIterator<Item = &'t Token>,
    ) -> Result<bool, WindowError> {
        let degree = self.dloc(k, DLOC_SET_CAP).map_err(WindowError::CheckOverflow)?;
        if degree.value != 1 {
            return Err(WindowError::NotDegreeOne { dloc: degree.value });
        }

        let mut window: VecDeque<TokenId> = VecDeque::with_capacity(k + 2);
        let mut known: HashMap<Vec<TokenId>, bool> = HashMap::new();
        let mut first = true;
        for token in tokens {
            let Some(id) = self.token_id(token.text()) else {
                return Ok(false);
            };
            if first {
                first = false;
                if self.transition(self.initial, id).is_none() {
                    return Ok(false);
                }
            }
            window.push_back(id);
            if window.len() == k + 1 {
                let key: Vec<TokenId> = window.iter().copied().collect();
                let ok = *known.entry(key).or_insert_with(|| {
                    let mut states = self.all_states();
                    for &id in &window {
                        states = states.iter().filter_map(|&s| self.transition(s, id)).collect();
                        if states.is_empty() {
                            break;
                        }
                    }
                    !states.is_empty()
                });
                if !ok {
                    return Ok(false);
                }
                window.pop_front();
            }
        }
        Ok(true)
    }
}

/// On-disk JSON shape. Field order is the serialization order; transitions
/// are emitted sorted by (from, token, to), so equal automata are
/// byte-identical.
#[derive(Serialize, Deserialize)]
struct AutomatonDoc {
    alphabet: Vec<String>,
    states: usize,
    initial: usize,
    finals: Vec<usize>,
    transitions: Vec<(usize, usize, usize)>,
    metadata: serde_json::Value,
}

/// A malformed automaton document.
#[derive(Debug, Error)]
pub enum AutomatonFormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("alphabet entry {0} is empty")]
    EmptyToken(usize),
    #[error("alphabet entry {0} duplicates an earlier token")]
    DuplicateToken(usize),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("token index {0} out of range")]
    TokenOutOfRange(usize),
    #[error("duplicate transition from state {from} on token {token}")]
    NondeterministicTransition { from: usize, token: usize },
}

impl TokenDfa {
    /// Canonical JSON text: pretty-printed with sorted transition and final
    /// lists. Copy provenance, if any, travels in `metadata.fresh` as
    /// `[state, source, rule_index]` triples.
    pub fn to_json(&self) -> String {
        let fresh: Vec<(usize, usize, usize)> = (0..self.num_states())
            .filter_map(|s| self.provenance[s].map(|p| (s, p.source, p.rule_index)))
            .collect();
        let metadata = if fresh.is_empty() {
            serde_json::json!({})
        } else {
            serde_json::json!({ "fresh": fresh })
        };
        let doc = AutomatonDoc {
            alphabet: self.alphabet.iter().map(|t| t.text().to_string()).collect(),
            states: self.num_states(),
            initial: self.initial,
            finals: self.finals(),
            transitions: (0..self.num_states())
                .flat_map(|s| self.transitions_from(s).map(move |(t, to)| (s, t, to)))
                .collect(),
            metadata,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("automaton serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<TokenDfa, AutomatonFormatError> {
        let doc: AutomatonDoc = serde_json::from_str(text)?;
        if doc.initial >= doc.states {
            return Err(AutomatonFormatError::StateOutOfRange(doc.initial));
        }
        let mut dfa = TokenDfa::new(doc.states, doc.initial);
        for (i, text) in doc.alphabet.iter().enumerate() {
            let token =
                Token::try_new(text.clone()).ok_or(AutomatonFormatError::EmptyToken(i))?;
            if dfa.token_ids.contains_key(token.text()) {
                return Err(AutomatonFormatError::DuplicateToken(i));
            }
            dfa.intern_token(token);
        }
        for &f in &doc.finals {
            if f >= doc.states {
                return Err(AutomatonFormatError::StateOutOfRange(f));
            }
            dfa.finals[f] = true;
        }
        for &(from, token, to) in &doc.transitions {
            if from >= doc.states {
                return Err(AutomatonFormatError::StateOutOfRange(from));
            }
            if to >= doc.states {
                return Err(AutomatonFormatError::StateOutOfRange(to));
            }
            if token >= dfa.alphabet.len() {
                return Err(AutomatonFormatError::TokenOutOfRange(token));
            }
            if dfa.delta[from].contains_key(&token) {
                return Err(AutomatonFormatError::NondeterministicTransition { from, token });
            }
            dfa.delta[from].insert(token, to);
        }
        if let Some(fresh) = doc.metadata.get("fresh").and_then(|v| v.as_array()) {
            for entry in fresh {
                let fields: Vec<usize> = entry
                    .as_array()
                    .map(|a| {
                        a.iter()
                            .filter_map(serde_json::Value::as_u64)
                            .map(|x| x as usize)
                            .collect()
                    })
                    .unwrap_or_default();
                if let Ok([s, src, rule]) = <[usize; 3]>::try_from(fields) {
                    if s < doc.states {
                        dfa.provenance[s] =
                            Some(StateProvenance { source: src, rule_index: rule });
                    }
                }
            }
        }
        Ok(dfa)
    }

    /// Relabels tokens into sorted text order and states into breadth-first
    /// discovery order from the initial state (unreachable states keep
    /// their relative order at the end). Copy provenance is dropped.
    /// Isomorphic automata produce identical canonical forms.
    pub fn canonical(&self) -> TokenDfa {
        let mut sorted: Vec<(String, TokenId)> = self
            .alphabet
            .iter()
            .enumerate()
            .map(|(i, t)| (t.text().to_string(), i))
            .collect();
        sorted.sort();
        let mut new_tid = vec![0usize; sorted.len()];
        for (new, (_, old)) in sorted.iter().enumerate() {
            new_tid[*old] = new;
        }

        let n = self.num_states();
        let mut order: Vec<StateId> = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            let mut out: Vec<(usize, StateId)> =
                self.transitions_from(s).map(|(t, to)| (new_tid[t], to)).collect();
            out.sort();
            for (_, to) in out {
                if !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        for s in 0..n {
            if !seen[s] {
                order.push(s);
            }
        }
        let mut renum = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            renum[old] = new;
        }

        let mut out = TokenDfa::new(n, renum[self.initial]);
        for (text, _) in &sorted {
            out.intern_token(Token::new(text.clone()));
        }
        for old in 0..n {
            out.finals[renum[old]] = self.finals[old];
            for (t, to) in self.transitions_from(old) {
                out.delta[renum[old]].insert(new_tid[t], renum[to]);
            }
        }
        out
    }
}
