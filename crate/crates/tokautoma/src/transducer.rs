//! Finite-state transducers from characters to tokens.
//!
//! [`build_transducer`] unrolls each token transition of a [`TokenDfa`]
//! into a character chain that emits the token on its last step, giving a
//! possibly input-nondeterministic machine whose accepting runs on a
//! string output its tokenizations. [`Transducer::check_functional`]
//! decides whether that machine realizes a function, with explicit
//! counterexamples. [`determinize`] turns a functional machine into a
//! [`SubseqTransducer`]: deterministic on input, one output per step plus
//! a final output per accepting state, computing the same function in a
//! single left-to-right pass.
//!
//! [`build_tokenizer`] chains the whole pipeline: dictionary to automaton
//! to transducer to deterministic tokenizer.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{TokenDfa, TokenId};
use crate::construction::{build_token_dfa, BuildError, BuildOptions, Language};
use crate::core::{Dictionary, Token, Tokenization};

/// A nondeterministic transducer: edges consume one input character and
/// emit a token sequence; accepting states carry a final output.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transducer {
    alphabet: Vec<Token>,
    delta: Vec<Vec<(char, Vec<TokenId>, usize)>>,
    initial: usize,
    final_output: Vec<Option<Vec<TokenId>>>,
}

impl Transducer {
    pub fn new(num_states: usize, initial: usize) -> Self {
        assert!(initial < num_states, "initial state {initial} out of range");
        Transducer {
            alphabet: Vec::new(),
            delta: vec![Vec::new(); num_states],
            initial,
            final_output: vec![None; num_states],
        }
    }

    pub fn add_state(&mut self) -> usize {
        self.delta.push(Vec::new());
        self.final_output.push(None);
        self.delta.len() - 1
    }

    /// Adds `token` to the output alphabet if absent; returns its id.
    pub fn intern_token(&mut self, token: Token) -> TokenId {
        if let Some(id) = self.alphabet.iter().position(|t| t == &token) {
            return id;
        }
        self.alphabet.push(token);
        self.alphabet.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, input: char, output: Vec<TokenId>, to: usize) {
        assert!(from < self.delta.len() && to < self.delta.len(), "state out of range");
        assert!(output.iter().all(|&t| t < self.alphabet.len()), "output token out of range");
        self.delta[from].push((input, output, to));
    }

    pub fn set_final_output(&mut self, state: usize, output: Option<Vec<TokenId>>) {
        self.final_output[state] = output;
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_edges(&self) -> usize {
        self.delta.iter().map(|v| v.len()).sum()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn alphabet(&self) -> &[Token] {
        &self.alphabet
    }

    pub fn final_output(&self, state: usize) -> Option<&[TokenId]> {
        self.final_output[state].as_deref()
    }

    pub fn edges_from(&self, state: usize) -> &[(char, Vec<TokenId>, usize)] {
        &self.delta[state]
    }

    /// Every output of an accepting run on `w`. Enumerates runs directly;
    /// test-sized inputs only.
    pub fn outputs(&self, w: &str) -> BTreeSet<Tokenization> {
        fn visit(
            t: &Transducer,
            state: usize,
            chars: &[char],
            acc: &mut Vec<TokenId>,
            out: &mut BTreeSet<Tokenization>,
        ) {
            match chars.split_first() {
                None => {
                    if let Some(f) = &t.final_output[state] {
                        let total = acc.iter().chain(f.iter());
                        out.insert(total.map(|&id| t.alphabet[id].clone()).collect());
                    }
                }
                Some((&c, rest)) => {
                    for (ec, eo, eto) in &t.delta[state] {
                        if *ec == c {
                            let mark = acc.len();
                            acc.extend(eo);
                            visit(t, *eto, rest, acc, out);
                            acc.truncate(mark);
                        }
                    }
                }
            }
        }
        let chars: Vec<char> = w.chars().collect();
        let mut out = BTreeSet::new();
        visit(self, self.initial, &chars, &mut Vec::new(), &mut out);
        out
    }

    /// Drops states unreachable from the initial state or unable to reach
    /// an accepting state; the initial state is always kept.
    pub fn trim(&self) -> Transducer {
        let n = self.num_states();
        let mut forward = vec![false; n];
        let mut queue = VecDeque::from([self.initial]);
        forward[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for &(_, _, to) in &self.delta[s] {
                if !forward[to] {
                    forward[to] = true;
                    queue.push_back(to);
                }
            }
        }
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            for &(_, _, to) in &self.delta[s] {
                reverse[to].push(s);
            }
        }
        let mut backward = vec![false; n];
        let mut queue: VecDeque<usize> =
            (0..n).filter(|&s| self.final_output[s].is_some()).collect();
        for &s in &queue {
            backward[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &reverse[s] {
                if !backward[p] {
                    backward[p] = true;
                    queue.push_back(p);
                }
            }
        }

        let keep: Vec<usize> =
            (0..n).filter(|&s| (forward[s] && backward[s]) || s == self.initial).collect();
        let mut renum: HashMap<usize, usize> = HashMap::new();
        for (new, &old) in keep.iter().enumerate() {
            renum.insert(old, new);
        }
        let mut out = Transducer::new(keep.len(), renum[&self.initial]);
        out.alphabet = self.alphabet.clone();
        for (new, &old) in keep.iter().enumerate() {
            out.final_output[new] = self.final_output[old].clone();
            for (c, o, to) in &self.delta[old] {
                if let Some(&to_new) = renum.get(to) {
                    out.delta[new].push((*c, o.clone(), to_new));
                }
            }
        }
        out
    }
}

/// Unrolls a token automaton into a character transducer: a transition
/// labeled by a k-symbol token becomes a k-step chain emitting the token
/// on the final step. Accepting states emit nothing extra at the end.
pub fn build_transducer(dfa: &TokenDfa) -> Transducer {
    let mut t = Transducer::new(dfa.num_states(), dfa.initial());
    for token in dfa.alphabet() {
        t.intern_token(token.clone());
    }
    for s in 0..dfa.num_states() {
        if dfa.is_final(s) {
            t.set_final_output(s, Some(Vec::new()));
        }
        for (tid, to) in dfa.transitions_from(s) {
            let symbols: Vec<char> = dfa.token(tid).symbols().collect();
            let mut cur = s;
            for (i, &c) in symbols.iter().enumerate() {
                let last = i + 1 == symbols.len();
                let next = if last { to } else { t.add_state() };
                t.add_edge(cur, c, if last { vec![tid] } else { Vec::new() }, next);
                cur = next;
            }
        }
    }
    t
}

/// Two accepting runs on one input with different outputs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FunctionalityWitness {
    pub input: String,
    pub output_a: Tokenization,
    pub output_b: Tokenization,
}

/// Verdict of [`Transducer::check_functional`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Functionality {
    /// No input has two distinct outputs.
    Functional,
    NotFunctional(Box<FunctionalityWitness>),
    /// The search hit its delay or configuration bound before settling.
    InconclusiveAtBound { delay_bound: usize, config_cap: usize },
}

/// Default one-sided delay bound for functionality checking.
pub const DELAY_BOUND: usize = 64;
/// Default cap on visited configurations for functionality checking.
pub const CONFIG_CAP: usize = 1 << 20;

struct PairGraph {
    /// Pairs reachable from the initial pair and able to reach an
    /// accepting pair.
    live: HashSet<(usize, usize)>,
    /// First hop of a path to an accepting pair: input char, both
    /// outputs, successor pair.
    next_hop: HashMap<(usize, usize), (char, Vec<TokenId>, Vec<TokenId>, (usize, usize))>,
}

impl Transducer {
    fn pair_graph(&self) -> PairGraph {
        let start = (self.initial, self.initial);
        let mut reachable: HashSet<(usize, usize)> = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        let mut reverse: HashMap<(usize, usize), Vec<((usize, usize), char, Vec<TokenId>, Vec<TokenId>)>> =
            HashMap::new();
        while let Some((p, q)) = queue.pop_front() {
            for (ca, oa, pa) in &self.delta[p] {
                for (cb, ob, qb) in &self.delta[q] {
                    if ca != cb {
                        continue;
                    }
                    let succ = (*pa, *qb);
                    reverse
                        .entry(succ)
                        .or_default()
                        .push(((p, q), *ca, oa.clone(), ob.clone()));
                    if reachable.insert(succ) {
                        queue.push_back(succ);
                    }
                }
            }
        }

        let mut live: HashSet<(usize, usize)> = HashSet::new();
        let mut next_hop = HashMap::new();
        let mut queue: VecDeque<(usize, usize)> = reachable
            .iter()
            .filter(|&&(p, q)| {
                self.final_output[p].is_some() && self.final_output[q].is_some()
            })
            .copied()
            .collect();
        for &pair in &queue {
            live.insert(pair);
        }
        while let Some(pair) = queue.pop_front() {
            for (pred, c, oa, ob) in reverse.get(&pair).into_iter().flatten() {
                if live.insert(*pred) {
                    next_hop.insert(*pred, (*c, oa.clone(), ob.clone(), pair));
                    queue.push_back(*pred);
                }
            }
        }
        PairGraph { live, next_hop }
    }

    /// Decides whether the transducer realizes a function: at most one
    /// output per input string.
    ///
    /// Runs a product search carrying the outstanding output difference
    /// between two runs. Two runs whose outputs become incomparable at a
    /// pair that can still reach joint acceptance are a violation, as is a
    /// residual difference surviving into a jointly accepting pair. A
    /// one-sided difference longer than `delay_bound`, or more than
    /// `config_cap` visited configurations, stops the search without a
    /// verdict unless a violation is found anyway.
    pub fn check_functional(&self, delay_bound: usize, config_cap: usize) -> Functionality {
        let t = self.trim();
        let graph = t.pair_graph();
        let start = (t.initial, t.initial);
        if !graph.live.contains(&start) {
            // No input is jointly accepted twice, vacuously a function
            // (the trimmed machine accepts nothing at all).
            return Functionality::Functional;
        }

        struct Node {
            p: usize,
            q: usize,
            da: Vec<TokenId>,
            db: Vec<TokenId>,
            parent: Option<usize>,
            step: Option<(char, Vec<TokenId>, Vec<TokenId>)>,
        }
        let rebuild = |arena: &Vec<Node>, mut idx: usize| {
            let mut input = Vec::new();
            let mut out_a: Vec<TokenId> = Vec::new();
            let mut out_b: Vec<TokenId> = Vec::new();
            loop {
                if let Some((c, oa, ob)) = &arena[idx].step {
                    input.push(*c);
                    out_a.extend(oa.iter().rev());
                    out_b.extend(ob.iter().rev());
                }
                match arena[idx].parent {
                    Some(parent) => idx = parent,
                    None => break,
                }
            }
            input.reverse();
            out_a.reverse();
            out_b.reverse();
            (input.into_iter().collect::<String>(), out_a, out_b)
        };
        let witness = |t: &Transducer,
                       arena: &Vec<Node>,
                       idx: usize,
                       completion: Option<(usize, usize)>| {
            let (mut input, mut out_a, mut out_b) = rebuild(arena, idx);
            let (mut p, mut q) = (arena[idx].p, arena[idx].q);
            if let Some(pair) = completion {
                debug_assert_eq!((p, q), pair);
                while let Some((c, oa, ob, succ)) = graph.next_hop.get(&(p, q)) {
                    input.push(*c);
                    out_a.extend(oa);
                    out_b.extend(ob);
                    (p, q) = *succ;
                }
            }
            out_a.extend(t.final_output[p].as_deref().unwrap_or_default());
            out_b.extend(t.final_output[q].as_deref().unwrap_or_default());
            let decode =
                |ids: &[TokenId]| ids.iter().map(|&i| t.alphabet[i].clone()).collect();
            Functionality::NotFunctional(Box::new(FunctionalityWitness {
                input,
                output_a: decode(&out_a),
                output_b: decode(&out_b),
            }))
        };

        let mut arena: Vec<Node> = vec![Node {
            p: start.0,
            q: start.1,
            da: Vec::new(),
            db: Vec::new(),
            parent: None,
            step: None,
        }];
        let mut visited: HashSet<(usize, usize, Vec<TokenId>, Vec<TokenId>)> =
            HashSet::from([(start.0, start.1, Vec::new(), Vec::new())]);
        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        let mut hit_bound = false;

        while let Some(idx) = queue.pop_front() {
            let (p, q) = (arena[idx].p, arena[idx].q);

            if let (Some(fa), Some(fb)) = (&t.final_output[p], &t.final_output[q]) {
                let total_a: Vec<TokenId> =
                    arena[idx].da.iter().chain(fa.iter()).copied().collect();
                let total_b: Vec<TokenId> =
                    arena[idx].db.iter().chain(fb.iter()).copied().collect();
                if total_a != total_b {
                    return witness(&t, &arena, idx, None);
                }
            }

            let edges_p = t.delta[p].clone();
            let edges_q = t.delta[q].clone();
            for (ca, oa, pa) in &edges_p {
                for (cb, ob, qb) in &edges_q {
                    if ca != cb || !graph.live.contains(&(*pa, *qb)) {
                        continue;
                    }
                    let mut na: Vec<TokenId> =
                        arena[idx].da.iter().chain(oa.iter()).copied().collect();
                    let mut nb: Vec<TokenId> =
                        arena[idx].db.iter().chain(ob.iter()).copied().collect();
                    let common = na.iter().zip(nb.iter()).take_while(|(x, y)| x == y).count();
                    na.drain(..common);
                    nb.drain(..common);
                    if !na.is_empty() && !nb.is_empty() {
                        // Outputs disagree at a fixed position and the pair
                        // can still reach joint acceptance.
                        arena.push(Node {
                            p: *pa,
                            q: *qb,
                            da: na,
                            db: nb,
                            parent: Some(idx),
                            step: Some((*ca, oa.clone(), ob.clone())),
                        });
                        return witness(&t, &arena, arena.len() - 1, Some((*pa, *qb)));
                    }
                    if na.len().max(nb.len()) > delay_bound || visited.len() >= config_cap {
                        hit_bound = true;
                        continue;
                    }
                    let key = (*pa, *qb, na.clone(), nb.clone());
                    if visited.insert(key) {
                        arena.push(Node {
                            p: *pa,
                            q: *qb,
                            da: na,
                            db: nb,
                            parent: Some(idx),
                            step: Some((*ca, oa.clone(), ob.clone())),
                        });
                        queue.push_back(arena.len() - 1);
                    }
                }
            }
        }
        if hit_bound {
            Functionality::InconclusiveAtBound { delay_bound, config_cap }
        } else {
            Functionality::Functional
        }
    }
}

/// A subsequential transducer: deterministic on input, one token sequence
/// emitted per step, plus a final output on each accepting state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubseqTransducer {
    alphabet: Vec<Token>,
    input_alphabet: BTreeSet<char>,
    delta: Vec<BTreeMap<char, (usize, Vec<TokenId>)>>,
    initial: usize,
    final_output: Vec<Option<Vec<TokenId>>>,
}

impl SubseqTransducer {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|m| m.len()).sum()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn input_alphabet(&self) -> &BTreeSet<char> {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &[Token] {
        &self.alphabet
    }

    pub fn final_output(&self, state: usize) -> Option<&[TokenId]> {
        self.final_output[state].as_deref()
    }

    pub fn transitions_from(
        &self,
        state: usize,
    ) -> impl Iterator<Item = (char, usize, &[TokenId])> + '_ {
        self.delta[state].iter().map(|(&c, (to, out))| (c, *to, out.as_slice()))
    }

    /// The longest pending output: how far emission may lag behind input.
    pub fn max_final_output_len(&self) -> usize {
        self.final_output.iter().flatten().map(Vec::len).max().unwrap_or(0)
    }

    /// Runs the machine over `w`: emitted outputs concatenated with the
    /// final output of the end state. `None` when a step is undefined or
    /// the end state does not accept.
    pub fn transduce(&self, w: &str) -> Option<Tokenization> {
        let mut state = self.initial;
        let mut out: Vec<TokenId> = Vec::new();
        for c in w.chars() {
            let (to, emitted) = self.delta[state].get(&c)?;
            out.extend(emitted);
            state = *to;
        }
        let f = self.final_output[state].as_ref()?;
        Some(out.iter().chain(f.iter()).map(|&id| self.alphabet[id].clone()).collect())
    }
}

/// Determinization failure.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum DeterminizeError {
    /// Two runs on one input force two different outputs.
    #[error("the transducer does not realize a function")]
    NotFunctional,
    /// Some pending output outgrew `cap`: the realized function does not
    /// have bounded variation, or the cap is too small.
    #[error("a pending output exceeded {cap} tokens")]
    PendingCapExceeded { cap: usize },
    /// The subset space outgrew `cap`.
    #[error("determinization exceeded {cap} subsets")]
    SubsetCapExceeded { cap: usize },
}

/// Default cap on the number of determinization subsets.
pub const SUBSET_CAP: usize = 1 << 16;

/// Longest common prefix length of two id sequences.
fn lcp_len(a: &[TokenId], b: &[TokenId]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

/// Determinizes a functional transducer into a subsequential one.
///
/// Subsets pair reached states with their pending output, the part not
/// yet emitted because parallel runs still disagree on it; each step
/// emits the longest prefix shared by every pending. The input is trimmed
/// first, which makes two pendings on one state a genuine functionality
/// violation rather than an artifact of dead runs.
pub fn determinize(
    input: &Transducer,
    pending_cap: usize,
    subset_cap: usize,
) -> Result<SubseqTransducer, DeterminizeError> {
    let t = input.trim();
    type Subset = Vec<(usize, Vec<TokenId>)>;

    let chars: BTreeSet<char> = (0..t.num_states())
        .flat_map(|s| t.delta[s].iter().map(|&(c, _, _)| c))
        .collect();

    let start: Subset = vec![(t.initial, Vec::new())];
    let mut ids: HashMap<Subset, usize> = HashMap::from([(start.clone(), 0)]);
    let mut subsets: Vec<Subset> = vec![start];
    let mut delta: Vec<BTreeMap<char, (usize, Vec<TokenId>)>> = vec![BTreeMap::new()];
    let mut final_output: Vec<Option<Vec<TokenId>>> = Vec::new();

    let finality = |subset: &Subset| -> Result<Option<Vec<TokenId>>, DeterminizeError> {
        let mut total: Option<Vec<TokenId>> = None;
        for (s, pend) in subset {
            if let Some(f) = &t.final_output[*s] {
                let candidate: Vec<TokenId> = pend.iter().chain(f.iter()).copied().collect();
                match &total {
                    None => total = Some(candidate),
                    Some(existing) if *existing != candidate => {
                        return Err(DeterminizeError::NotFunctional)
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(total)
    };
    final_output.push(finality(&subsets[0])?);

    let mut work = 0usize;
    while work < subsets.len() {
        for &c in &chars {
            let mut grouped: BTreeMap<usize, Vec<TokenId>> = BTreeMap::new();
            for (s, pend) in &subsets[work] {
                for (ec, eo, eto) in &t.delta[*s] {
                    if *ec != c {
                        continue;
                    }
                    let cand: Vec<TokenId> = pend.iter().chain(eo.iter()).copied().collect();
                    match grouped.get(eto) {
                        None => {
                            grouped.insert(*eto, cand);
                        }
                        Some(existing) if *existing != cand => {
                            // Same state, same input, two pendings: their
                            // completions coincide, so outputs diverge.
                            return Err(DeterminizeError::NotFunctional);
                        }
                        Some(_) => {}
                    }
                }
            }
            if grouped.is_empty() {
                continue;
            }
            let emit_len = grouped
                .values()
                .map(Vec::as_slice)
                .reduce(|a, b| &a[..lcp_len(a, b)])
                .map(<[TokenId]>::len)
                .unwrap_or(0);
            let emitted: Vec<TokenId> =
                grouped.values().next().unwrap()[..emit_len].to_vec();
            let subset: Subset = grouped
                .into_iter()
                .map(|(s, pend)| (s, pend[emit_len..].to_vec()))
                .collect();
            if subset.iter().any(|(_, pend)| pend.len() > pending_cap) {
                return Err(DeterminizeError::PendingCapExceeded { cap: pending_cap });
            }
            let id = match ids.get(&subset) {
                Some(&id) => id,
                None => {
                    if subsets.len() >= subset_cap {
                        return Err(DeterminizeError::SubsetCapExceeded { cap: subset_cap });
                    }
                    let id = subsets.len();
                    ids.insert(subset.clone(), id);
                    final_output.push(finality(&subset)?);
                    subsets.push(subset);
                    delta.push(BTreeMap::new());
                    id
                }
            };
            delta[work].insert(c, (id, emitted));
        }
        work += 1;
    }

    Ok(SubseqTransducer {
        alphabet: t.alphabet.clone(),
        input_alphabet: chars,
        delta,
        initial: 0,
        final_output,
    })
}

/// Pipeline failure of [`build_tokenizer`].
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Determinize(#[from] DeterminizeError),
}

/// Pending-output cap used when determinizing a tokenizer for `d`: a
/// dictionary-sized multiple of the longest token, plus slack.
pub fn pending_cap_for(d: &Dictionary) -> usize {
    2 * d.len() * d.max_token_len().max(1) + 8
}

/// Builds the one-pass tokenizer of a dictionary: the token automaton of
/// the universal language, unrolled to characters and determinized. The
/// result maps every string over the alphabet to its tokenization.
pub fn build_tokenizer(d: &Dictionary) -> Result<SubseqTransducer, PipelineError> {
    let dfa = build_token_dfa(Language::Universal, d, BuildOptions::default())?;
    let t = build_transducer(&dfa);
    Ok(determinize(&t, pending_cap_for(d), SUBSET_CAP)?)
}

/// On-disk JSON shape: field order fixed, transitions sorted, so equal
/// transducers serialize byte-identically.
#[derive(Serialize, Deserialize)]
struct TransducerDoc {
    input_alphabet: Vec<String>,
    output_alphabet: Vec<String>,
    states: usize,
    initial: usize,
    transitions: Vec<(usize, String, Vec<usize>, usize)>,
    final_outputs: BTreeMap<String, Vec<usize>>,
}

/// A malformed transducer document.
#[derive(Debug, Error)]
pub enum TransducerFormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output alphabet entry {0} is empty")]
    EmptyToken(usize),
    #[error("output alphabet entry {0} duplicates an earlier token")]
    DuplicateToken(usize),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("token index {0} out of range")]
    TokenOutOfRange(usize),
    #[error("transition input {0:?} is not a single character")]
    BadInputSymbol(String),
    #[error("duplicate transition from state {from} on {symbol:?}")]
    DuplicateTransition { from: usize, symbol: char },
    #[error("final output key {0:?} is not a state number")]
    BadFinalKey(String),
}

impl SubseqTransducer {
    pub fn to_json(&self) -> String {
        let doc = TransducerDoc {
            input_alphabet: self.input_alphabet.iter().map(|c| c.to_string()).collect(),
            output_alphabet: self.alphabet.iter().map(|t| t.text().to_string()).collect(),
            states: self.num_states(),
            initial: self.initial,
            transitions: (0..self.num_states())
                .flat_map(|s| {
                    self.delta[s]
                        .iter()
                        .map(move |(&c, (to, out))| (s, c.to_string(), out.clone(), *to))
                })
                .collect(),
            final_outputs: (0..self.num_states())
                .filter_map(|s| {
                    self.final_output[s].as_ref().map(|f| (s.to_string(), f.clone()))
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("transducer serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<SubseqTransducer, TransducerFormatError> {
        let doc: TransducerDoc = serde_json::from_str(text)?;
        if doc.initial >= doc.states {
            return Err(TransducerFormatError::StateOutOfRange(doc.initial));
        }
        let mut alphabet: Vec<Token> = Vec::new();
        for (i, text) in doc.output_alphabet.iter().enumerate() {
            let token =
                Token::try_new(text.clone()).ok_or(TransducerFormatError::EmptyToken(i))?;
            if alphabet.contains(&token) {
                return Err(TransducerFormatError::DuplicateToken(i));
            }
            alphabet.push(token);
        }
        let mut out = SubseqTransducer {
            alphabet,
            input_alphabet: BTreeSet::new(),
            delta: vec![BTreeMap::new(); doc.states],
            initial: doc.initial,
            final_output: vec![None; doc.states],
        };
        for (from, symbol, output, to) in &doc.transitions {
            let mut chars = symbol.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(TransducerFormatError::BadInputSymbol(symbol.clone()));
            };
            if *from >= doc.states {
                return Err(TransducerFormatError::StateOutOfRange(*from));
            }
            if *to >= doc.states {
                return Err(TransducerFormatError::StateOutOfRange(*to));
            }
            for &tid in output {
                if tid >= out.alphabet.len() {
                    return Err(TransducerFormatError::TokenOutOfRange(tid));
                }
            }
            if out.delta[*from].contains_key(&c) {
                return Err(TransducerFormatError::DuplicateTransition { from: *from, symbol: c });
            }
            out.delta[*from].insert(c, (*to, output.clone()));
            out.input_alphabet.insert(c);
        }
        for (key, output) in &doc.final_outputs {
            let state: usize = key
                .parse()
                .map_err(|_| TransducerFormatError::BadFinalKey(key.clone()))?;
            if state >= doc.states {
                return Err(TransducerFormatError::StateOutOfRange(state));
            }
            for &tid in output {
                if tid >= out.alphabet.len() {
                    return Err(TransducerFormatError::TokenOutOfRange(tid));
                }
            }
            out.final_output[state] = Some(output.clone());
        }
        for c in doc.input_alphabet {
            let mut chars = c.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                out.input_alphabet.insert(c);
            }
        }
        Ok(out)
    }
}
