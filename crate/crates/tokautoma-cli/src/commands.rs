//! One function per subcommand, plus the shared loading and reporting
//! helpers. Every function returns the process exit code or a [`Failure`]
//! destined for stderr.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use tokautoma::automaton::{StateId, TokenDfa, TokenId, DLOC_SET_CAP};
use tokautoma::bpe::tokenize_hf;
use tokautoma::construction::{
    build_token_dfa, search_token_dfa, BuildError, BuildOptions, Language,
};
use tokautoma::core::{escape_token_text, Dictionary, EscapeMode, Token, Tokenization};
use tokautoma::regex::{self, Ast};
use tokautoma::transducer::build_tokenizer;

use crate::vocab::Vocab;
use crate::{stream, CmdResult, Failure, Mode, EXIT_DATA, EXIT_IMPROPER, EXIT_OK};

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_dictionary(path: &Path, sigma: &str) -> Result<Dictionary, Failure> {
    let text = read_file(path)?;
    let mut d = Dictionary::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    d.add_symbols(sigma.chars());
    Ok(d)
}

fn require_proper(d: &Dictionary, path: &Path) -> Result<(), Failure> {
    d.check_proper().map_err(|e| Failure {
        code: EXIT_IMPROPER,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_automaton(path: &Path) -> Result<TokenDfa, Failure> {
    let text = read_file(path)?;
    TokenDfa::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Parses a pattern and rejects literals the alphabet cannot spell. Classes
/// and `.` are interpreted relative to the alphabet, so only literals can
/// name a foreign symbol.
fn checked_pattern(pattern: &str, sigma: &BTreeSet<char>) -> Result<Ast, Failure> {
    let ast =
        regex::parse(pattern).map_err(|e| Failure::usage(format!("pattern: {e}")))?;
    if let Some(c) = literal_outside(&ast, sigma) {
        return Err(Failure::usage(format!(
            "pattern literal `{}` is outside the alphabet",
            printable(c)
        )));
    }
    Ok(ast)
}

fn literal_outside(ast: &Ast, sigma: &BTreeSet<char>) -> Option<char> {
    match ast {
        Ast::Empty | Ast::Any | Ast::Class { .. } => None,
        Ast::Literal(c) => (!sigma.contains(c)).then_some(*c),
        Ast::Concat(a, b) | Ast::Alt(a, b) => {
            literal_outside(a, sigma).or_else(|| literal_outside(b, sigma))
        }
        Ast::Star(a) | Ast::Plus(a) | Ast::Optional(a) => literal_outside(a, sigma),
    }
}

fn printable(c: char) -> String {
    escape_token_text(&c.to_string(), EscapeMode::Stream)
}

fn build_failure(e: BuildError) -> Failure {
    match &e {
        BuildError::EmptyAlphabet => Failure::usage(e.to_string()),
        BuildError::InvarianceBroken { witness, .. } => Failure::internal(format!(
            "{e}\n  run A from state {}: {}\n  run B from state {}: {}",
            witness.start_a, witness.tokens_a, witness.start_b, witness.tokens_b
        )),
        BuildError::AuditFailed { audit, .. } => Failure::internal(format!(
            "{e}\n  states {} -> {} with {} middle states, merged-token image {} \
             against carried {} plus right-side {}, {} old tokens changed image size",
            audit.states_before,
            audit.states_after,
            audit.middle_count,
            audit.e_merged_after,
            audit.e_merged_before,
            audit.e_right_before,
            audit.e_set_mismatches.len()
        )),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build(
    dict: &Path,
    universal: bool,
    lang: Option<&str>,
    out: Option<&Path>,
    validate: bool,
    trim: bool,
    sigma: &str,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let d = load_dictionary(dict, sigma)?;
    require_proper(&d, dict)?;
    let opts = BuildOptions { validate, trim };
    let built = if universal {
        build_token_dfa(Language::Universal, &d, opts)
    } else {
        let Some(pattern) = lang else {
            return Err(Failure::usage("one of --universal or --lang is required"));
        };
        let ast = checked_pattern(pattern, d.sigma())?;
        let lang_dfa = regex::compile_ast(&ast, d.sigma());
        build_token_dfa(Language::Dfa(&lang_dfa), &d, opts)
    };
    let dfa = built.map_err(build_failure)?;
    let json = dfa.to_json();
    match out {
        Some(path) => fs::write(path, &json)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => stdout.write_all(json.as_bytes())?,
    }
    let degree = dfa.dloc(1, DLOC_SET_CAP).map_err(|e| Failure::internal(e.to_string()))?;
    writeln!(stderr, "states: {}", dfa.num_states())?;
    writeln!(stderr, "transitions: {}", dfa.num_transitions())?;
    writeln!(stderr, "dloc(1): {}", degree.value)?;
    Ok(EXIT_OK)
}

pub(crate) fn tokenize(
    dict: &Path,
    mode: Mode,
    ids: bool,
    vocab: Option<&Path>,
    sigma: &str,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
) -> CmdResult {
    let d = load_dictionary(dict, sigma)?;
    require_proper(&d, dict)?;
    let vocab = match vocab {
        Some(path) => Some(
            Vocab::from_json(&read_file(path)?)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    if ids && vocab.is_none() {
        return Err(Failure::usage("--ids requires --vocab"));
    }
    let machine = match mode {
        Mode::Oracle => None,
        Mode::Transducer => Some(
            build_tokenizer(&d)
                .map_err(|e| Failure::internal(format!("tokenizer construction failed: {e}")))?,
        ),
    };
    for (i, line) in stdin.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if let Some((col, c)) = line.chars().enumerate().find(|(_, c)| !d.sigma().contains(c)) {
            return Err(Failure::data(format!(
                "line {line_no}, column {}: symbol `{}` is outside the alphabet",
                col + 1,
                printable(c)
            )));
        }
        let t = match &machine {
            Some(m) => m
                .transduce(&line)
                .ok_or_else(|| Failure::internal(format!("tokenizer died on line {line_no}")))?,
            None => tokenize_hf(&d, &line)
                .map_err(|e| Failure::internal(format!("line {line_no}: {e}")))?,
        };
        let rendered = match (ids, &vocab) {
            (true, Some(v)) => render_ids(&t, v, line_no)?,
            _ => stream::format_record(t.tokens()),
        };
        writeln!(stdout, "{rendered}")?;
    }
    Ok(EXIT_OK)
}

fn render_ids(t: &Tokenization, v: &Vocab, line_no: usize) -> Result<String, Failure> {
    let mut parts = Vec::with_capacity(t.len());
    for tok in t.iter() {
        let id = v.id(tok.text()).ok_or_else(|| {
            Failure::data(format!(
                "line {line_no}: token `{}` is not in the vocabulary",
                escape_token_text(tok.text(), EscapeMode::Stream)
            ))
        })?;
        parts.push(id.to_string());
    }
    Ok(parts.join(" "))
}

/// Where a record failed validation.
enum Violation {
    At { index: usize, reason: &'static str },
    AtEnd,
}

pub(crate) fn validate(
    aut: &Path,
    window: bool,
    k: usize,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
) -> CmdResult {
    let dfa = load_automaton(aut)?;
    if window {
        let degree = dfa.dloc(k, DLOC_SET_CAP).map_err(|e| Failure::internal(e.to_string()))?;
        if degree.value != 1 {
            return Err(Failure::usage(format!(
                "window validation needs locality degree 1 at width {k}, found {}",
                degree.value
            )));
        }
    }
    let mut memo: HashMap<Vec<TokenId>, bool> = HashMap::new();
    for (i, line) in stdin.lines().enumerate() {
        let record_no = i + 1;
        let line = line?;
        let tokens = stream::parse_record(&line)
            .map_err(|e| Failure::data(format!("record {record_no}: {e}")))?;
        let verdict = if window {
            window_verdict(&dfa, k, &tokens, &mut memo)
        } else {
            run_verdict(&dfa, &tokens)
        };
        match verdict {
            None => {}
            Some(Violation::At { index, reason }) => {
                writeln!(stdout, "record {record_no}: reject at index {index} ({reason})")?;
                return Ok(EXIT_DATA);
            }
            Some(Violation::AtEnd) => {
                writeln!(stdout, "record {record_no}: reject at end (not accepting)")?;
                return Ok(EXIT_DATA);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Runs the automaton over the record; 1-based index of the first dead or
/// unknown token, or the end marker when the run survives without
/// accepting.
fn run_verdict(dfa: &TokenDfa, tokens: &[Token]) -> Option<Violation> {
    let mut m = dfa.match_stream();
    for (i, tok) in tokens.iter().enumerate() {
        let reason = if dfa.token_id(tok.text()).is_none() {
            "unknown token"
        } else {
            "no transition"
        };
        if !m.feed(tok).alive {
            return Some(Violation::At { index: i + 1, reason });
        }
    }
    if m.status().accepting {
        None
    } else {
        Some(Violation::AtEnd)
    }
}

/// Sliding-window counterpart of [`run_verdict`], sound for automata of
/// locality degree 1 at `k`: the first token must leave the initial state,
/// every window of k + 1 tokens must label a run somewhere, and the image
/// of the final k tokens, a single state by the degree, must accept.
fn window_verdict(
    dfa: &TokenDfa,
    k: usize,
    tokens: &[Token],
    memo: &mut HashMap<Vec<TokenId>, bool>,
) -> Option<Violation> {
    let mut ids = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        match dfa.token_id(tok.text()) {
            Some(id) => ids.push(id),
            None => return Some(Violation::At { index: i + 1, reason: "unknown token" }),
        }
    }
    if ids.len() <= k {
        return run_verdict(dfa, tokens);
    }
    if dfa.transition(dfa.initial(), ids[0]).is_none() {
        return Some(Violation::At { index: 1, reason: "no transition" });
    }
    for (start, win) in ids.windows(k + 1).enumerate() {
        let ok = *memo
            .entry(win.to_vec())
            .or_insert_with(|| !fold_all(dfa, win).is_empty());
        if !ok {
            return Some(Violation::At { index: start + k + 1, reason: "dead window" });
        }
    }
    let end = fold_all(dfa, &ids[ids.len() - k..]);
    debug_assert_eq!(end.len(), 1);
    if end.iter().next().is_some_and(|&s| dfa.is_final(s)) {
        None
    } else {
        Some(Violation::AtEnd)
    }
}

/// States reachable by reading `ids` from anywhere in the automaton.
fn fold_all(dfa: &TokenDfa, ids: &[TokenId]) -> BTreeSet<StateId> {
    let mut states: BTreeSet<StateId> = (0..dfa.num_states()).collect();
    for &id in ids {
        states = states.iter().filter_map(|&s| dfa.transition(s, id)).collect();
        if states.is_empty() {
            break;
        }
    }
    states
}

pub(crate) fn equiv(
    dict: &Path,
    dict2: &Path,
    sigma: &str,
    stdout: &mut dyn Write,
) -> CmdResult {
    let mut d1 = load_dictionary(dict, sigma)?;
    let mut d2 = load_dictionary(dict2, sigma)?;
    require_proper(&d1, dict)?;
    require_proper(&d2, dict2)?;
    let union: BTreeSet<char> = d1.sigma().union(d2.sigma()).copied().collect();
    if union.is_empty() {
        // Both tokenizers have the empty string as their whole domain.
        writeln!(stdout, "equivalent")?;
        return Ok(EXIT_OK);
    }
    d1.add_symbols(union.iter().copied());
    d2.add_symbols(union.iter().copied());
    let a1 = build_token_dfa(Language::Universal, &d1, BuildOptions::default())
        .map_err(build_failure)?;
    let a2 = build_token_dfa(Language::Universal, &d2, BuildOptions::default())
        .map_err(build_failure)?;
    match a1.inequivalence_witness(&a2) {
        None => {
            writeln!(stdout, "equivalent")?;
            Ok(EXIT_OK)
        }
        Some(t) => {
            let w = t.project();
            let t1 = tokenize_hf(&d1, &w).map_err(|e| Failure::internal(e.to_string()))?;
            let t2 = tokenize_hf(&d2, &w).map_err(|e| Failure::internal(e.to_string()))?;
            writeln!(stdout, "inequivalent")?;
            writeln!(stdout, "witness: {}", escape_token_text(&w, EscapeMode::Stream))?;
            writeln!(stdout, "dict1: {t1}")?;
            writeln!(stdout, "dict2: {t2}")?;
            Ok(EXIT_DATA)
        }
    }
}

pub(crate) fn search(
    dict: &Path,
    pattern: &str,
    sigma: &str,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
) -> CmdResult {
    let d = load_dictionary(dict, sigma)?;
    require_proper(&d, dict)?;
    let ast = checked_pattern(pattern, d.sigma())?;
    let opts = BuildOptions { validate: false, trim: true };
    let dfa = search_token_dfa(&ast, &d, &BTreeSet::new(), opts).map_err(build_failure)?;
    for (i, line) in stdin.lines().enumerate() {
        let record_no = i + 1;
        let line = line?;
        let tokens = stream::parse_record(&line)
            .map_err(|e| Failure::data(format!("record {record_no}: {e}")))?;
        let mut m = dfa.match_stream();
        for tok in &tokens {
            m.feed(tok);
        }
        writeln!(stdout, "{}", if m.status().accepting { "match" } else { "no-match" })?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct StatsDoc {
    states: usize,
    transitions: usize,
    finals: usize,
    context_invariant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    invariance_witness: Option<WitnessDoc>,
    dloc: Vec<DlocDoc>,
}

#[derive(Serialize)]
struct WitnessDoc {
    start_a: usize,
    tokens_a: Vec<String>,
    start_b: usize,
    tokens_b: Vec<String>,
}

#[derive(Serialize)]
struct DlocDoc {
    k: usize,
    value: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<String>>,
}

fn token_texts(t: &Tokenization) -> Vec<String> {
    t.iter().map(|tok| tok.text().to_string()).collect()
}

pub(crate) fn stats(aut: &Path, k_max: usize, json: bool, stdout: &mut dyn Write) -> CmdResult {
    let dfa = load_automaton(aut)?;
    let witness = dfa.context_invariance_witness();
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let d = dfa.dloc(k, DLOC_SET_CAP).map_err(|e| Failure::internal(e.to_string()))?;
        rows.push((k, d));
    }
    if json {
        let doc = StatsDoc {
            states: dfa.num_states(),
            transitions: dfa.num_transitions(),
            finals: dfa.finals().len(),
            context_invariant: witness.is_none(),
            invariance_witness: witness.as_ref().map(|w| WitnessDoc {
                start_a: w.start_a,
                tokens_a: token_texts(&w.tokens_a),
                start_b: w.start_b,
                tokens_b: token_texts(&w.tokens_b),
            }),
            dloc: rows
                .iter()
                .map(|(k, d)| DlocDoc {
                    k: *k,
                    value: d.value,
                    witness: d.witness.as_ref().map(token_texts),
                })
                .collect(),
        };
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| Failure::internal(e.to_string()))?;
        text.push('\n');
        stdout.write_all(text.as_bytes())?;
    } else {
        writeln!(stdout, "states: {}", dfa.num_states())?;
        writeln!(stdout, "transitions: {}", dfa.num_transitions())?;
        writeln!(stdout, "finals: {}", dfa.finals().len())?;
        match &witness {
            None => writeln!(stdout, "context-invariant: yes")?,
            Some(w) => {
                writeln!(stdout, "context-invariant: no")?;
                writeln!(stdout, "  run A from state {}: {}", w.start_a, w.tokens_a)?;
                writeln!(stdout, "  run B from state {}: {}", w.start_b, w.tokens_b)?;
            }
        }
        for (k, d) in &rows {
            match &d.witness {
                Some(w) if !w.is_empty() => {
                    writeln!(stdout, "dloc({k}): {} (witness: {w})", d.value)?
                }
                _ => writeln!(stdout, "dloc({k}): {}", d.value)?,
            }
        }
    }
    Ok(EXIT_OK)
}
