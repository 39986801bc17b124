//! A small regular-expression engine for describing string languages.
//!
//! Supported syntax: literals, concatenation, alternation `|`, grouping
//! `(...)`, repetition `*` `+` `?`, character classes `[abc]` / `[a-z]` /
//! `[^...]`, the any-character dot `.`, and backslash escapes for the
//! metacharacters. Patterns compile through a Thompson construction and
//! subset determinization into a [`StringDfa`] over a caller-supplied
//! alphabet; `.` and negated classes range over that alphabet.
//!
//! [`reference_match`] is a deliberately naive enumerator of match end
//! positions, exponential in the worst case. It exists as an independent
//! oracle for the compiled automata and is used heavily by the tests.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

/// A deterministic automaton over characters. Transitions are partial;
/// a missing transition rejects.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StringDfa {
    delta: Vec<BTreeMap<char, usize>>,
    initial: usize,
    finals: Vec<bool>,
}

impl StringDfa {
    pub fn new(num_states: usize, initial: usize) -> Self {
        assert!(initial < num_states, "initial state {initial} out of range");
        StringDfa { delta: vec![BTreeMap::new(); num_states], initial, finals: vec![false; num_states] }
    }

    pub fn add_state(&mut self) -> usize {
        self.delta.push(BTreeMap::new());
        self.finals.push(false);
        self.delta.len() - 1
    }

    pub fn set_final(&mut self, state: usize, is_final: bool) {
        self.finals[state] = is_final;
    }

    pub fn set_transition(&mut self, from: usize, symbol: char, to: usize) {
        assert!(from < self.delta.len() && to < self.delta.len(), "state out of range");
        self.delta[from].insert(symbol, to);
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|m| m.len()).sum()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.finals[state]
    }

    pub fn transition(&self, from: usize, symbol: char) -> Option<usize> {
        self.delta.get(from).and_then(|m| m.get(&symbol).copied())
    }

    pub fn transitions_from(&self, state: usize) -> impl Iterator<Item = (char, usize)> + '_ {
        self.delta[state].iter().map(|(&c, &s)| (c, s))
    }

    pub fn run(&self, from: usize, input: &str) -> Option<usize> {
        let mut state = from;
        for c in input.chars() {
            state = self.transition(state, c)?;
        }
        Some(state)
    }

    pub fn accepts(&self, input: &str) -> bool {
        self.run(self.initial, input).is_some_and(|s| self.finals[s])
    }

    /// Drops states that are unreachable or cannot reach an accepting
    /// state; the initial state is always kept.
    pub fn trim(&self) -> StringDfa {
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
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            for (_, t) in self.transitions_from(s) {
                reverse[t].push(s);
            }
        }
        let mut backward = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| self.finals[s]).collect();
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
        let mut out = StringDfa::new(keep.len(), renum[&self.initial]);
        for (new, &old) in keep.iter().enumerate() {
            out.finals[new] = self.finals[old];
            for (c, to) in self.transitions_from(old) {
                if let Some(&to_new) = renum.get(&to) {
                    out.delta[new].insert(c, to_new);
                }
            }
        }
        out
    }
}

/// Pattern syntax tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Ast {
    /// Matches the empty string.
    Empty,
    Literal(char),
    /// `.`: any single character of the alphabet.
    Any,
    Class { negated: bool, ranges: Vec<(char, char)> },
    Concat(Box<Ast>, Box<Ast>),
    Alt(Box<Ast>, Box<Ast>),
    Star(Box<Ast>),
    Plus(Box<Ast>),
    Optional(Box<Ast>),
}

/// A malformed pattern. Positions are 0-based character offsets.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum PatternError {
    #[error("unexpected ')' at position {0}")]
    UnexpectedCloseParen(usize),
    #[error("unclosed group opened at position {0}")]
    UnclosedGroup(usize),
    #[error("unclosed character class opened at position {0}")]
    UnclosedClass(usize),
    #[error("empty character class at position {0}")]
    EmptyClass(usize),
    #[error("invalid class range {0}-{1}")]
    InvalidRange(char, char),
    #[error("repetition operator at position {0} has nothing to repeat")]
    DanglingRepeat(usize),
    #[error("pattern ends with a dangling escape")]
    DanglingEscape,
    #[error("unsupported escape '\\{0}'")]
    UnknownEscape(char),
}

const METACHARS: &[char] = &['(', ')', '[', ']', '*', '+', '?', '|', '.', '\\', '-', '^'];

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn alternation(&mut self) -> Result<Ast, PatternError> {
        let mut node = self.concat()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            node = Ast::Alt(Box::new(node), Box::new(self.concat()?));
        }
        Ok(node)
    }

    fn concat(&mut self) -> Result<Ast, PatternError> {
        let mut parts: Vec<Ast> = Vec::new();
        loop {
            match self.peek() {
                None | Some('|') | Some(')') => break,
                Some('*' | '+' | '?') => return Err(PatternError::DanglingRepeat(self.pos)),
                Some(_) => parts.push(self.repeat()?),
            }
        }
        Ok(parts
            .into_iter()
            .reduce(|a, b| Ast::Concat(Box::new(a), Box::new(b)))
            .unwrap_or(Ast::Empty))
    }

    fn repeat(&mut self) -> Result<Ast, PatternError> {
        let mut node = self.atom()?;
        while let Some(op @ ('*' | '+' | '?')) = self.peek() {
            self.pos += 1;
            node = match op {
                '*' => Ast::Star(Box::new(node)),
                '+' => Ast::Plus(Box::new(node)),
                _ => Ast::Optional(Box::new(node)),
            };
        }
        Ok(node)
    }

    fn atom(&mut self) -> Result<Ast, PatternError> {
        match self.peek() {
            Some('(') => {
                let open = self.pos;
                self.pos += 1;
                let inner = self.alternation()?;
                if self.peek() == Some(')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(PatternError::UnclosedGroup(open))
                }
            }
            Some('[') => self.class(),
            Some('.') => {
                self.pos += 1;
                Ok(Ast::Any)
            }
            Some('\\') => {
                self.pos += 1;
                match self.bump() {
                    None => Err(PatternError::DanglingEscape),
                    Some(c) if METACHARS.contains(&c) => Ok(Ast::Literal(c)),
                    Some(c) => Err(PatternError::UnknownEscape(c)),
                }
            }
            Some(c) => {
                self.pos += 1;
                Ok(Ast::Literal(c))
            }
            None => unreachable!("concat stops at end of input"),
        }
    }

    fn class(&mut self) -> Result<Ast, PatternError> {
        let open = self.pos;
        self.pos += 1;
        let negated = if self.peek() == Some('^') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut ranges: Vec<(char, char)> = Vec::new();
        loop {
            match self.peek() {
                None => return Err(PatternError::UnclosedClass(open)),
                Some(']') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    let lo = self.class_char(open)?;
                    // A '-' is a range only with a bound on both sides;
                    // first or last in the class it is a literal.
                    if self.peek() == Some('-')
                        && self.peek_at(1).is_some()
                        && self.peek_at(1) != Some(']')
                    {
                        self.pos += 1;
                        let hi = self.class_char(open)?;
                        if hi < lo {
                            return Err(PatternError::InvalidRange(lo, hi));
                        }
                        ranges.push((lo, hi));
                    } else {
                        ranges.push((lo, lo));
                    }
                }
            }
        }
        if ranges.is_empty() {
            return Err(PatternError::EmptyClass(open));
        }
        Ok(Ast::Class { negated, ranges })
    }

    fn class_char(&mut self, open: usize) -> Result<char, PatternError> {
        match self.bump() {
            None => Err(PatternError::UnclosedClass(open)),
            Some('\\') => match self.bump() {
                None => Err(PatternError::DanglingEscape),
                Some(c) if METACHARS.contains(&c) => Ok(c),
                Some(c) => Err(PatternError::UnknownEscape(c)),
            },
            Some(c) => Ok(c),
        }
    }
}

/// Parses a pattern into its syntax tree.
pub fn parse(pattern: &str) -> Result<Ast, PatternError> {
    let mut p = Parser { chars: pattern.chars().collect(), pos: 0 };
    let ast = p.alternation()?;
    match p.peek() {
        None => Ok(ast),
        Some(')') => Err(PatternError::UnexpectedCloseParen(p.pos)),
        Some(c) => unreachable!("alternation stops only at ')' or end, found {c:?}"),
    }
}

#[derive(Clone, Debug)]
enum CharMatcher {
    Lit(char),
    Any,
    Class { negated: bool, ranges: Vec<(char, char)> },
}

impl CharMatcher {
    fn matches(&self, c: char) -> bool {
        match self {
            CharMatcher::Lit(l) => *l == c,
            CharMatcher::Any => true,
            CharMatcher::Class { negated, ranges } => {
                ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi) != *negated
            }
        }
    }
}

/// Nondeterministic automaton with epsilon moves and one accepting state.
struct Nfa {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<(CharMatcher, usize)>>,
    start: usize,
    accept: usize,
}

struct NfaBuilder {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<(CharMatcher, usize)>>,
}

impl NfaBuilder {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    fn edge(&mut self, m: CharMatcher) -> (usize, usize) {
        let s = self.state();
        let t = self.state();
        self.edges[s].push((m, t));
        (s, t)
    }

    fn fragment(&mut self, ast: &Ast) -> (usize, usize) {
        match ast {
            Ast::Empty => {
                let s = self.state();
                let t = self.state();
                self.eps[s].push(t);
                (s, t)
            }
            Ast::Literal(c) => self.edge(CharMatcher::Lit(*c)),
            Ast::Any => self.edge(CharMatcher::Any),
            Ast::Class { negated, ranges } => {
                self.edge(CharMatcher::Class { negated: *negated, ranges: ranges.clone() })
            }
            Ast::Concat(a, b) => {
                let (s1, t1) = self.fragment(a);
                let (s2, t2) = self.fragment(b);
                self.eps[t1].push(s2);
                (s1, t2)
            }
            Ast::Alt(a, b) => {
                let s = self.state();
                let t = self.state();
                let (s1, t1) = self.fragment(a);
                let (s2, t2) = self.fragment(b);
                self.eps[s].push(s1);
                self.eps[s].push(s2);
                self.eps[t1].push(t);
                self.eps[t2].push(t);
                (s, t)
            }
            Ast::Star(a) => {
                let s = self.state();
                let t = self.state();
                let (s1, t1) = self.fragment(a);
                self.eps[s].push(s1);
                self.eps[s].push(t);
                self.eps[t1].push(s1);
                self.eps[t1].push(t);
                (s, t)
            }
            Ast::Plus(a) => {
                let (s1, t1) = self.fragment(a);
                let t = self.state();
                self.eps[t1].push(s1);
                self.eps[t1].push(t);
                (s1, t)
            }
            Ast::Optional(a) => {
                let s = self.state();
                let t = self.state();
                let (s1, t1) = self.fragment(a);
                self.eps[s].push(s1);
                self.eps[s].push(t);
                self.eps[t1].push(t);
                (s, t)
            }
        }
    }
}

fn to_nfa(ast: &Ast) -> Nfa {
    let mut b = NfaBuilder { eps: Vec::new(), edges: Vec::new() };
    let (start, accept) = b.fragment(ast);
    Nfa { eps: b.eps, edges: b.edges, start, accept }
}

fn closure(nfa: &Nfa, set: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = set.clone();
    let mut queue: VecDeque<usize> = out.iter().copied().collect();
    while let Some(s) = queue.pop_front() {
        for &t in &nfa.eps[s] {
            if out.insert(t) {
                queue.push_back(t);
            }
        }
    }
    out
}

fn nfa_to_dfa(nfa: &Nfa, sigma: &BTreeSet<char>) -> StringDfa {
    let start = closure(nfa, &BTreeSet::from([nfa.start]));
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut subsets: Vec<BTreeSet<usize>> = vec![start.clone()];
    ids.insert(start.iter().copied().collect(), 0);
    let mut dfa = StringDfa::new(1, 0);
    dfa.set_final(0, start.contains(&nfa.accept));

    let mut work = 0usize;
    while work < subsets.len() {
        let subset = subsets[work].clone();
        for &c in sigma {
            let moved: BTreeSet<usize> = subset
                .iter()
                .flat_map(|&s| {
                    nfa.edges[s]
                        .iter()
                        .filter(move |(m, _)| m.matches(c))
                        .map(|&(_, to)| to)
                })
                .collect();
            if moved.is_empty() {
                continue;
            }
            let closed = closure(nfa, &moved);
            let key: Vec<usize> = closed.iter().copied().collect();
            let id = *ids.entry(key).or_insert_with(|| {
                let id = dfa.add_state();
                dfa.set_final(id, closed.contains(&nfa.accept));
                subsets.push(closed.clone());
                id
            });
            dfa.set_transition(work, c, id);
        }
        work += 1;
    }
    dfa
}

/// Compiles a syntax tree into a trimmed deterministic automaton over
/// `sigma`. `.` and negated classes match within `sigma` only.
pub fn compile_ast(ast: &Ast, sigma: &BTreeSet<char>) -> StringDfa {
    nfa_to_dfa(&to_nfa(ast), sigma).trim()
}

/// Parses and compiles a pattern for exact (whole-string) matching.
pub fn compile(pattern: &str, sigma: &BTreeSet<char>) -> Result<StringDfa, PatternError> {
    Ok(compile_ast(&parse(pattern)?, sigma))
}

/// Compiles a pattern into an automaton for the strings that contain a
/// match anywhere, by padding the pattern with alphabet loops on both
/// sides.
pub fn compile_search(pattern: &str, sigma: &BTreeSet<char>) -> Result<StringDfa, PatternError> {
    Ok(compile_search_ast(&parse(pattern)?, sigma))
}

pub fn compile_search_ast(ast: &Ast, sigma: &BTreeSet<char>) -> StringDfa {
    let mut b = NfaBuilder { eps: Vec::new(), edges: Vec::new() };
    let prefix = b.state();
    let suffix = b.state();
    for &c in sigma {
        b.edges[prefix].push((CharMatcher::Lit(c), prefix));
        b.edges[suffix].push((CharMatcher::Lit(c), suffix));
    }
    let (s, t) = b.fragment(ast);
    b.eps[prefix].push(s);
    b.eps[t].push(suffix);
    let nfa = Nfa { eps: b.eps, edges: b.edges, start: prefix, accept: suffix };
    nfa_to_dfa(&nfa, sigma).trim()
}

/// All positions where a match of `ast` that starts at `start` can end.
/// Plain recursive enumeration, exponential in the worst case; kept as an
/// oracle for the compiled automata.
fn match_ends(ast: &Ast, s: &[char], start: usize) -> BTreeSet<usize> {
    match ast {
        Ast::Empty => BTreeSet::from([start]),
        Ast::Literal(c) => match s.get(start) {
            Some(x) if x == c => BTreeSet::from([start + 1]),
            _ => BTreeSet::new(),
        },
        Ast::Any => {
            if start < s.len() {
                BTreeSet::from([start + 1])
            } else {
                BTreeSet::new()
            }
        }
        Ast::Class { negated, ranges } => match s.get(start) {
            Some(&x) if ranges.iter().any(|&(lo, hi)| lo <= x && x <= hi) != *negated => {
                BTreeSet::from([start + 1])
            }
            _ => BTreeSet::new(),
        },
        Ast::Concat(a, b) => match_ends(a, s, start)
            .into_iter()
            .flat_map(|mid| match_ends(b, s, mid))
            .collect(),
        Ast::Alt(a, b) => {
            let mut out = match_ends(a, s, start);
            out.extend(match_ends(b, s, start));
            out
        }
        Ast::Optional(a) => {
            let mut out = BTreeSet::from([start]);
            out.extend(match_ends(a, s, start));
            out
        }
        Ast::Star(a) => iterate_closure(a, s, BTreeSet::from([start])),
        Ast::Plus(a) => iterate_closure(a, s, match_ends(a, s, start)),
    }
}

/// Expands `seed` with repeated applications of `ast` until no new end
/// position appears. Positions never exceed the input length, so this
/// terminates.
fn iterate_closure(ast: &Ast, s: &[char], seed: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = seed;
    let mut frontier: Vec<usize> = out.iter().copied().collect();
    while let Some(pos) = frontier.pop() {
        for end in match_ends(ast, s, pos) {
            if out.insert(end) {
                frontier.push(end);
            }
        }
    }
    out
}

/// Whole-string match by direct enumeration.
pub fn reference_match(ast: &Ast, input: &str) -> bool {
    let chars: Vec<char> = input.chars().collect();
    match_ends(ast, &chars, 0).contains(&chars.len())
}

/// Substring match by direct enumeration from every start position.
pub fn reference_search(ast: &Ast, input: &str) -> bool {
    let chars: Vec<char> = input.chars().collect();
    (0..=chars.len()).any(|i| !match_ends(ast, &chars, i).is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sigma_ab() -> BTreeSet<char> {
        BTreeSet::from(['a', 'b'])
    }

    /// All strings over {a, b} up to the given length.
    fn strings_ab(max_len: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut level = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &level {
                for c in ['a', 'b'] {
                    let mut s2 = s.clone();
                    s2.push(c);
                    next.push(s2);
                }
            }
            out.extend(next.iter().cloned());
            level = next;
        }
        out
    }

    #[test]
    fn parse_rejects_malformed_patterns() {
        assert_eq!(parse(")"), Err(PatternError::UnexpectedCloseParen(0)));
        assert_eq!(parse("a)"), Err(PatternError::UnexpectedCloseParen(1)));
        assert_eq!(parse("(a"), Err(PatternError::UnclosedGroup(0)));
        assert_eq!(parse("[ab"), Err(PatternError::UnclosedClass(0)));
        assert_eq!(parse("a[]"), Err(PatternError::EmptyClass(1)));
        assert_eq!(parse("[z-a]"), Err(PatternError::InvalidRange('z', 'a')));
        assert_eq!(parse("*a"), Err(PatternError::DanglingRepeat(0)));
        assert_eq!(parse("a|*"), Err(PatternError::DanglingRepeat(2)));
        assert_eq!(parse("a\\"), Err(PatternError::DanglingEscape));
        assert_eq!(parse("\\q"), Err(PatternError::UnknownEscape('q')));
    }

    #[test]
    fn parse_accepts_edge_cases() {
        assert_eq!(parse(""), Ok(Ast::Empty));
        // An empty alternative is the empty string.
        assert_eq!(
            parse("a|"),
            Ok(Ast::Alt(Box::new(Ast::Literal('a')), Box::new(Ast::Empty)))
        );
        // Stacked repetition operators are allowed.
        assert!(parse("a**").is_ok());
        // '-' first or last in a class is a literal.
        assert_eq!(
            parse("[-a]"),
            Ok(Ast::Class { negated: false, ranges: vec![('-', '-'), ('a', 'a')] })
        );
        assert_eq!(
            parse("[a-]"),
            Ok(Ast::Class { negated: false, ranges: vec![('a', 'a'), ('-', '-')] })
        );
        assert_eq!(parse("\\*"), Ok(Ast::Literal('*')));
    }

    #[test]
    fn compiled_dfa_matches_handpicked_strings() {
        let sigma = sigma_ab();
        let d = compile("(a|b)*abb", &sigma).unwrap();
        assert!(d.accepts("abb"));
        assert!(d.accepts("aabb"));
        assert!(d.accepts("babb"));
        assert!(!d.accepts("ab"));
        assert!(!d.accepts(""));

        let d = compile("a*", &sigma).unwrap();
        assert!(d.accepts(""));
        assert!(d.accepts("aaa"));
        assert!(!d.accepts("ab"));
    }

    #[test]
    fn literal_chain_compiles_small() {
        let sigma: BTreeSet<char> = BTreeSet::from(['a', 'b', 'c']);
        let d = compile("abc", &sigma).unwrap();
        assert_eq!(d.num_states(), 4);
        assert_eq!(d.num_transitions(), 3);
        assert!(d.accepts("abc"));
        assert!(!d.accepts("ab"));
    }

    #[test]
    fn classes_and_dot() {
        let sigma: BTreeSet<char> = BTreeSet::from(['a', 'b', 'c', 'd', 'x']);
        let d = compile("[a-c]x", &sigma).unwrap();
        for good in ["ax", "bx", "cx"] {
            assert!(d.accepts(good), "{good} should match");
        }
        assert!(!d.accepts("dx"));

        let d = compile("[^ab]", &sigma).unwrap();
        assert!(d.accepts("c"));
        assert!(!d.accepts("a"));

        let d = compile(".b", &sigma).unwrap();
        for good in ["ab", "bb", "xb"] {
            assert!(d.accepts(good), "{good} should match");
        }
        assert!(!d.accepts("b"));
    }

    #[test]
    fn fixed_patterns_agree_with_reference() {
        let sigma = sigma_ab();
        let patterns =
            ["", "a", "(a|b)*abb", "a*b+", "a?b?", "(ab)+", "[ab]*a[ab]", "a|", "(a|b)(a|b)"];
        for pattern in patterns {
            let ast = parse(pattern).unwrap();
            let dfa = compile_ast(&ast, &sigma);
            for w in strings_ab(6) {
                assert_eq!(
                    dfa.accepts(&w),
                    reference_match(&ast, &w),
                    "pattern {pattern:?} on {w:?}"
                );
            }
        }
    }

    #[test]
    fn search_automaton_finds_substrings() {
        let sigma = sigma_ab();
        let d = compile_search("ab", &sigma).unwrap();
        assert!(d.accepts("ab"));
        assert!(d.accepts("aab"));
        assert!(d.accepts("abbb"));
        assert!(!d.accepts("ba"));
        assert!(!d.accepts(""));

        for pattern in ["ab", "a+b", "(a|b)b"] {
            let ast = parse(pattern).unwrap();
            let dfa = compile_search_ast(&ast, &sigma);
            for w in strings_ab(6) {
                assert_eq!(
                    dfa.accepts(&w),
                    reference_search(&ast, &w),
                    "pattern {pattern:?} on {w:?}"
                );
            }
        }
    }

    #[test]
    fn nullable_pattern_search_matches_everything() {
        let sigma = sigma_ab();
        let d = compile_search("a*", &sigma).unwrap();
        assert!(d.accepts(""));
        assert!(d.accepts("bbb"));
    }

    fn arb_ast() -> impl Strategy<Value = Ast> {
        let leaf = prop_oneof![
            Just(Ast::Empty),
            prop_oneof![Just('a'), Just('b')].prop_map(Ast::Literal),
            Just(Ast::Any),
            (
                any::<bool>(),
                prop::collection::vec(
                    prop_oneof![Just(('a', 'a')), Just(('b', 'b')), Just(('a', 'b'))],
                    1..3
                )
            )
                .prop_map(|(negated, ranges)| Ast::Class { negated, ranges }),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Ast::Concat(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Ast::Alt(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Ast::Star(Box::new(a))),
                inner.clone().prop_map(|a| Ast::Plus(Box::new(a))),
                inner.prop_map(|a| Ast::Optional(Box::new(a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // The compiled automaton and the naive enumerator must agree on
        // every short string, for both exact and substring matching.
        #[test]
        fn compilation_agrees_with_reference(ast in arb_ast()) {
            let sigma = sigma_ab();
            let exact = compile_ast(&ast, &sigma);
            let search = compile_search_ast(&ast, &sigma);
            for w in strings_ab(5) {
                prop_assert_eq!(exact.accepts(&w), reference_match(&ast, &w), "exact on {:?}", w);
                prop_assert_eq!(search.accepts(&w), reference_search(&ast, &w), "search on {:?}", w);
            }
        }

        #[test]
        fn trim_preserves_string_language(ast in arb_ast()) {
            let sigma = sigma_ab();
            let d = nfa_to_dfa(&to_nfa(&ast), &sigma);
            let t = d.trim();
            for w in strings_ab(5) {
                prop_assert_eq!(d.accepts(&w), t.accepts(&w));
            }
        }
    }
}
