//! Command surface tests: every subcommand in process through [`run`],
//! plus a few process-level checks of the installed binary.

use std::io::{Cursor, Write as _};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use clap::Parser;
use tempfile::TempDir;

use tokautoma::automaton::TokenDfa;
use tokautoma::core::{Token, Tokenization};
use tokautoma_cli::{run, Cli};

fn write_file(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path
}

/// Parses argv and runs it against an in-memory stdin, returning
/// (exit code, stdout, stderr).
fn exec(args: &[&str], stdin: &str) -> (i32, String, String) {
    let cli = Cli::try_parse_from(args).unwrap();
    let mut input = Cursor::new(stdin.as_bytes().to_vec());
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(cli, &mut input, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn parse_code(args: &[&str]) -> i32 {
    let cli = Cli::try_parse_from(args).unwrap();
    let mut input = Cursor::new(Vec::new());
    let mut out = Vec::new();
    let mut err = Vec::new();
    run(cli, &mut input, &mut out, &mut err)
}

fn toks(texts: &[&str]) -> Tokenization {
    texts.iter().map(|t| Token::new(*t)).collect()
}

/// Chain of two `a` edges; locality degree 2 at width 1.
fn wide_chain_json() -> String {
    let mut a = TokenDfa::new(3, 0);
    a.set_final(2, true);
    let id = a.intern_token(Token::new("a"));
    a.set_transition(0, id, 1);
    a.set_transition(1, id, 2);
    a.to_json()
}

/// Chain reading `abc` with a `bc` shortcut: two runs for one string.
fn ambiguous_chain_json() -> String {
    let mut a = TokenDfa::new(5, 0);
    a.set_final(3, true);
    a.set_final(4, true);
    for (from, label, to) in [(0, "a", 1), (1, "b", 2), (2, "c", 3), (1, "bc", 4)] {
        let id = a.intern_token(Token::new(label));
        a.set_transition(from, id, to);
    }
    a.to_json()
}

#[test]
fn build_writes_automaton_and_summary() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let out = dir.path().join("a2.json");
    let args =
        ["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal", "--out"];
    let (code, stdout, stderr) =
        exec(&[&args[..], &[out.to_str().unwrap()]].concat(), "");
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    assert_eq!(stderr, "states: 3\ntransitions: 9\ndloc(1): 1\n");

    let text = std::fs::read_to_string(&out).unwrap();
    let dfa = TokenDfa::from_json(&text).unwrap();
    assert_eq!(dfa.num_states(), 3);
    assert!(dfa.accepts(&toks(&["aa", "aa", "a"])));
    assert!(!dfa.accepts(&toks(&["a", "a"])));

    // Identical input produces a byte-identical file.
    let out2 = dir.path().join("a2-again.json");
    exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal", "--out",
          out2.to_str().unwrap()],
        "",
    );
    assert_eq!(text, std::fs::read_to_string(&out2).unwrap());
}

#[test]
fn build_without_out_prints_the_document() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\n");
    let (code, stdout, _) =
        exec(&["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal"], "");
    assert_eq!(code, 0);
    let dfa = TokenDfa::from_json(&stdout).unwrap();
    assert_eq!(dfa.num_states(), 2);
}

#[test]
fn build_error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let improper = write_file(&dir, "improper.dict", "aa a\n");
    let malformed = write_file(&dir, "malformed.dict", "a b c\n");
    let duplicate = write_file(&dir, "dup.dict", "a a\na a\n");
    let empty = write_file(&dir, "empty.dict", "");
    let missing = dir.path().join("missing.dict");

    let build = |path: &std::path::Path, extra: &[&str]| {
        let mut args =
            vec!["tokautoma", "build", "--dict", path.to_str().unwrap(), "--universal"];
        args.extend_from_slice(extra);
        exec(&args, "")
    };

    let (code, _, stderr) = build(&improper, &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("improper.dict") && stderr.contains("rule 0"));
    assert_eq!(build(&malformed, &[]).0, 1);
    assert_eq!(build(&duplicate, &[]).0, 1);
    assert_eq!(build(&missing, &[]).0, 1);
    let (code, _, stderr) = build(&empty, &[]);
    assert_eq!(code, 1);
    assert!(stderr.contains("alphabet is empty"));
    // The same dictionary works once symbols are declared.
    assert_eq!(build(&empty, &["--sigma", "a"]).0, 0);
}

#[test]
fn build_lang_restricts_the_accepted_streams() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\n");
    let out = dir.path().join("aa.json");
    let (code, _, _) = exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--lang", "aa", "--out",
          out.to_str().unwrap()],
        "",
    );
    assert_eq!(code, 0);
    let dfa = TokenDfa::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(dfa.accepts(&toks(&["aa"])));
    assert!(!dfa.accepts(&toks(&["a", "a"])));
    assert!(!dfa.accepts(&toks(&["a"])));
    assert!(!dfa.accepts(&Tokenization::new()));

    // A pattern literal the alphabet cannot spell is a usage error.
    let (code, _, stderr) = exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--lang", "az"],
        "",
    );
    assert_eq!(code, 1);
    assert!(stderr.contains("pattern literal `z`"));
}

#[test]
fn tokenize_modes_agree_including_empty_lines() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let input = "aaaaa\n\nbaab\n";
    let (code_t, out_t, _) =
        exec(&["tokautoma", "tokenize", "--dict", dict.to_str().unwrap()], input);
    let (code_o, out_o, _) = exec(
        &["tokautoma", "tokenize", "--dict", dict.to_str().unwrap(), "--mode", "oracle"],
        input,
    );
    assert_eq!((code_t, code_o), (0, 0));
    assert_eq!(out_t, "aa\taa\ta\n\nb\taa\tb\n");
    assert_eq!(out_t, out_o);
}

#[test]
fn tokenize_ids_mode_uses_the_vocabulary() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let vocab = write_file(&dir, "v.json", r#"["a", "b", "aa", "ba"]"#);
    let (code, stdout, _) = exec(
        &["tokautoma", "tokenize", "--dict", dict.to_str().unwrap(), "--ids", "--vocab",
          vocab.to_str().unwrap()],
        "aaaaa\nbab\n",
    );
    assert_eq!(code, 0);
    assert_eq!(stdout, "2 2 0\n3 1\n");

    let sparse = write_file(&dir, "sparse.json", r#"["a"]"#);
    let (code, _, stderr) = exec(
        &["tokautoma", "tokenize", "--dict", dict.to_str().unwrap(), "--ids", "--vocab",
          sparse.to_str().unwrap()],
        "aa\n",
    );
    assert_eq!(code, 3);
    assert!(stderr.contains("not in the vocabulary"));
}

#[test]
fn tokenize_rejects_foreign_symbols_with_position() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let (code, _, stderr) =
        exec(&["tokautoma", "tokenize", "--dict", dict.to_str().unwrap()], "aa\nabz\n");
    assert_eq!(code, 3);
    assert!(stderr.contains("line 2, column 3"));
    assert!(stderr.contains("`z`"));
}

#[test]
fn validate_accepts_and_rejects_with_indices() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let aut = dir.path().join("a2.json");
    exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal", "--out",
          aut.to_str().unwrap()],
        "",
    );
    let aut = aut.to_str().unwrap();

    for extra in [&[][..], &["--window"][..]] {
        let argv = [&["tokautoma", "validate", "--aut", aut][..], extra].concat();
        // Accepted streams and the empty record are silent successes.
        let (code, stdout, _) = exec(&argv, "aa\taa\ta\nb\taa\tb\n\n");
        assert_eq!((code, stdout.as_str()), (0, ""), "mode {extra:?}");

        let (code, stdout, _) = exec(&argv, "aa\taa\ta\na\ta\n");
        assert_eq!(code, 3);
        assert!(stdout.starts_with("record 2: reject at index 2"), "got {stdout:?}");

        let (code, stdout, _) = exec(&argv, "aa\tzz\n");
        assert_eq!(code, 3);
        assert_eq!(stdout, "record 1: reject at index 2 (unknown token)\n");
    }
}

#[test]
fn validate_reports_non_accepting_ends() {
    let dir = TempDir::new().unwrap();
    // No rules: the automaton is the language itself over base tokens.
    let dict = write_file(&dir, "d.dict", "");
    let aut = dir.path().join("astarb.json");
    let (code, _, _) = exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--sigma", "ab", "--lang",
          "a*b", "--out", aut.to_str().unwrap()],
        "",
    );
    assert_eq!(code, 0);
    for extra in [&[][..], &["--window"][..]] {
        let args =
            [&["tokautoma", "validate", "--aut", aut.to_str().unwrap()][..], extra].concat();
        let (code, stdout, _) = exec(&args, "a\ta\tb\n");
        assert_eq!((code, stdout.as_str()), (0, ""), "mode {extra:?}");
        let (code, stdout, _) = exec(&args, "a\ta\n");
        assert_eq!(code, 3, "mode {extra:?}");
        assert_eq!(stdout, "record 1: reject at end (not accepting)\n");
    }
}

#[test]
fn validate_window_needs_degree_one() {
    let dir = TempDir::new().unwrap();
    let aut = write_file(&dir, "chain.json", &wide_chain_json());
    let (code, _, stderr) = exec(
        &["tokautoma", "validate", "--aut", aut.to_str().unwrap(), "--window"],
        "a\n",
    );
    assert_eq!(code, 1);
    assert!(stderr.contains("locality degree 1"));
    // Full mode has no such precondition.
    let (code, _, _) =
        exec(&["tokautoma", "validate", "--aut", aut.to_str().unwrap()], "a\ta\n");
    assert_eq!(code, 0);
}

#[test]
fn validate_rejects_malformed_records() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\n");
    let aut = dir.path().join("a.json");
    exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal", "--out",
          aut.to_str().unwrap()],
        "",
    );
    let (code, _, stderr) = exec(
        &["tokautoma", "validate", "--aut", aut.to_str().unwrap()],
        "aa\na\\q\n",
    );
    assert_eq!(code, 3);
    assert!(stderr.contains("record 2"));
}

#[test]
fn equiv_reports_witness_with_both_tokenizations() {
    let dir = TempDir::new().unwrap();
    let d1 = write_file(&dir, "d1.dict", "a a\n");
    let d2 = write_file(&dir, "d2.dict", "a a\naa aa\n");
    let (code, stdout, _) = exec(
        &["tokautoma", "equiv", "--dict", d1.to_str().unwrap(), "--dict2",
          d2.to_str().unwrap()],
        "",
    );
    assert_eq!(code, 3);
    assert_eq!(stdout, "inequivalent\nwitness: aaaa\ndict1: aa|aa\ndict2: aaaa\n");
}

#[test]
fn equiv_accepts_independent_reorderings() {
    let dir = TempDir::new().unwrap();
    let d1 = write_file(&dir, "d1.dict", "a b\nc d\n");
    let d2 = write_file(&dir, "d2.dict", "c d\na b\n");
    let (code, stdout, _) = exec(
        &["tokautoma", "equiv", "--dict", d1.to_str().unwrap(), "--dict2",
          d2.to_str().unwrap()],
        "",
    );
    assert_eq!((code, stdout.as_str()), (0, "equivalent\n"));

    // Symbols present in only one dictionary still distinguish functions
    // via their base tokens, so equivalence is judged over the union.
    let d3 = write_file(&dir, "d3.dict", "a b\nc d\nab c\n");
    let (code, stdout, _) = exec(
        &["tokautoma", "equiv", "--dict", d1.to_str().unwrap(), "--dict2",
          d3.to_str().unwrap()],
        "",
    );
    assert_eq!(code, 3);
    assert!(stdout.starts_with("inequivalent\nwitness: abc\n"), "got {stdout:?}");
}

#[test]
fn equiv_requires_proper_dictionaries() {
    let dir = TempDir::new().unwrap();
    let d1 = write_file(&dir, "d1.dict", "a a\n");
    let bad = write_file(&dir, "bad.dict", "aa a\n");
    let (code, _, stderr) = exec(
        &["tokautoma", "equiv", "--dict", d1.to_str().unwrap(), "--dict2",
          bad.to_str().unwrap()],
        "",
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("bad.dict"));
}

#[test]
fn match_reports_each_record() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "kit.dict", "i t\na k\nit a\n");
    // `akita` tokenizes as ak|ita; the match crosses the token boundary.
    let input = "ak\tita\na\nzz\n";
    let (code, stdout, _) = exec(
        &["tokautoma", "match", "--dict", dict.to_str().unwrap(), "--pattern", "kit"],
        input,
    );
    assert_eq!(code, 0);
    assert_eq!(stdout, "match\nno-match\nno-match\n");

    // A pattern over the whole language matches every valid record.
    let (_, stdout, _) = exec(
        &["tokautoma", "match", "--dict", dict.to_str().unwrap(), "--pattern", ".*"],
        input,
    );
    assert_eq!(stdout, "match\nmatch\nno-match\n");
}

#[test]
fn stats_text_report() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let aut = dir.path().join("a2.json");
    exec(
        &["tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal", "--out",
          aut.to_str().unwrap()],
        "",
    );
    let (code, stdout, _) = exec(
        &["tokautoma", "stats", "--aut", aut.to_str().unwrap(), "--k", "2"],
        "",
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("states: 3\n"));
    assert!(stdout.contains("finals: 3\n"));
    assert!(stdout.contains("context-invariant: yes\n"));
    assert!(stdout.contains("dloc(1): 1"));
    assert!(stdout.contains("dloc(2): 1"));
}

#[test]
fn stats_json_report_and_witnesses() {
    let dir = TempDir::new().unwrap();
    let aut = write_file(&dir, "chain.json", &ambiguous_chain_json());
    let (code, stdout, _) = exec(
        &["tokautoma", "stats", "--aut", aut.to_str().unwrap(), "--json"],
        "",
    );
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["states"], 5);
    assert_eq!(doc["context_invariant"], false);
    let witness = &doc["invariance_witness"];
    let project = |key: &str| {
        witness[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect::<String>()
    };
    assert_eq!(project("tokens_a"), project("tokens_b"));
    assert_ne!(witness["tokens_a"], witness["tokens_b"]);
    assert_eq!(doc["dloc"].as_array().unwrap().len(), 1);

    let (_, text, _) = exec(&["tokautoma", "stats", "--aut", aut.to_str().unwrap()], "");
    assert!(text.contains("context-invariant: no\n"));
    assert!(text.contains("run A from state"));
}

#[test]
fn binary_level_basics() {
    let bin = env!("CARGO_BIN_EXE_tokautoma");
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert!(ok.status.success());
    let version = Command::new(bin).arg("--version").output().unwrap();
    assert!(version.status.success());
    assert!(String::from_utf8_lossy(&version.stdout).starts_with("tokautoma"));
    let bad = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));

    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\nb a\n");
    let mut child = Command::new(bin)
        .args(["tokenize", "--dict", dict.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.as_mut().unwrap().write_all(b"aaaaa\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "aa\taa\ta\n");
}

#[test]
fn in_process_misuse_is_reported_not_panicked() {
    let dir = TempDir::new().unwrap();
    let dict = write_file(&dir, "d.dict", "a a\n");
    // Bypassing the clap argument group must still fail cleanly.
    let code = parse_code(&[
        "tokautoma", "tokenize", "--dict", dict.to_str().unwrap(), "--mode", "oracle",
    ]);
    assert_eq!(code, 0);
    let cli = Cli::try_parse_from([
        "tokautoma", "build", "--dict", dict.to_str().unwrap(), "--universal",
    ]);
    assert!(cli.is_ok());
    assert!(Cli::try_parse_from(["tokautoma", "build", "--dict", "x"]).is_err());
    assert!(Cli::try_parse_from(["tokautoma", "tokenize", "--ids", "--dict", "x"]).is_err());
}
