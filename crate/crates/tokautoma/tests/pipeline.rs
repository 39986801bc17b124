//! End-to-end flows across the library: dictionary to automaton to
//! transducer, checked against the reference tokenizers on seeded corpora.

use std::collections::BTreeSet;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tokautoma::automaton::{TokenDfa, DLOC_SET_CAP};
use tokautoma::bpe::{tokenize_hf, tokenize_sp};
use tokautoma::construction::{
    apply_merge_in_place, base_token_dfa, build_token_dfa, BuildOptions, Language,
};
use tokautoma::core::{Dictionary, Token, Tokenization};
use tokautoma::regex;
use tokautoma::transducer::build_tokenizer;

/// A proper dictionary grown by pairing tokens seen so far. Each rule
/// mints a new token, the setting in which the two reference tokenizers
/// coincide.
fn random_dict(rng: &mut ChaCha8Rng, sigma: &str, max_rules: usize, max_len: usize) -> Dictionary {
    let mut gamma: Vec<String> = sigma.chars().map(String::from).collect();
    let mut pairs: Vec<(Token, Token)> = Vec::new();
    let target = rng.random_range(0..=max_rules);
    for _ in 0..max_rules * 4 {
        if pairs.len() == target {
            break;
        }
        let left = gamma.choose(rng).unwrap().clone();
        let right = gamma.choose(rng).unwrap().clone();
        let merged = format!("{left}{right}");
        if merged.len() > max_len || gamma.contains(&merged) {
            continue;
        }
        pairs.push((Token::new(left), Token::new(right)));
        gamma.push(merged);
    }
    let mut d = Dictionary::new(pairs).unwrap();
    d.add_symbols(sigma.chars());
    d
}

fn random_string(rng: &mut ChaCha8Rng, sigma: &str, max_len: usize) -> String {
    let chars: Vec<char> = sigma.chars().collect();
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| chars.choose(rng).unwrap()).collect()
}

/// Strings of bounded length spelled by accepted runs.
fn projected_strings(dfa: &TokenDfa, max_chars: usize) -> BTreeSet<String> {
    fn visit(dfa: &TokenDfa, state: usize, sofar: &str, max: usize, out: &mut BTreeSet<String>) {
        if dfa.is_final(state) {
            out.insert(sofar.to_string());
        }
        for (t, to) in dfa.transitions_from(state) {
            let label = dfa.token(t).text();
            if sofar.len() + label.len() <= max {
                visit(dfa, to, &format!("{sofar}{label}"), max, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    visit(dfa, dfa.initial(), "", max_chars, &mut out);
    out
}

#[test]
fn merges_preserve_pattern_languages_step_by_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let patterns = ["(a|b)*", "a*b*", "(ab)*a?", "b(a|b)*b|a*"];
    for _ in 0..30 {
        let d = random_dict(&mut rng, "ab", 4, 4);
        let pattern = patterns.choose(&mut rng).unwrap();
        let lang = regex::compile(pattern, d.sigma()).unwrap();
        let mut dfa = base_token_dfa(Language::Dfa(&lang), &d).unwrap();
        let mut spelled = projected_strings(&dfa, 5);
        for (i, rule) in d.rules().iter().enumerate() {
            apply_merge_in_place(&mut dfa, rule, i);
            let now = projected_strings(&dfa, 5);
            assert_eq!(now, spelled, "step {i} of {pattern:?} changed the language");
            spelled = now;
        }
        // The surviving tokenization of each string in the language is the
        // dictionary's own.
        for w in &spelled {
            assert!(dfa.accepts(&tokenize_hf(&d, w).unwrap()), "{w:?} lost its stream");
        }
    }
}

#[test]
fn tokenizer_agrees_with_both_references_across_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..50 {
        let sigma = ["ab", "abc"][round % 2];
        let d = random_dict(&mut rng, sigma, 6, 5);
        let tok = build_tokenizer(&d).unwrap();
        for _ in 0..20 {
            let w = random_string(&mut rng, sigma, 14);
            let expected = tokenize_hf(&d, &w).unwrap();
            assert_eq!(tokenize_sp(&d, &w).unwrap(), expected, "references split on {w:?}");
            assert_eq!(tok.transduce(&w), Some(expected), "transducer split on {w:?}");
        }
    }
}

#[test]
fn window_validation_matches_acceptance_on_degree_one_automata() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut checked = 0;
    for _ in 0..60 {
        let d = random_dict(&mut rng, "ab", 5, 4);
        let a = build_token_dfa(Language::Universal, &d, BuildOptions::default()).unwrap();
        if a.dloc(1, DLOC_SET_CAP).unwrap().value != 1 {
            continue;
        }
        checked += 1;
        for _ in 0..40 {
            // Half canonical streams, half arbitrary token soup.
            let t: Tokenization = if rng.random_bool(0.5) {
                tokenize_hf(&d, &random_string(&mut rng, "ab", 10)).unwrap()
            } else {
                let len = rng.random_range(0..=6);
                (0..len).map(|_| a.alphabet().choose(&mut rng).unwrap().clone()).collect()
            };
            // Every state of a universal build accepts, so acceptance is
            // exactly "the stream labels a run from the start".
            assert_eq!(
                a.window_validate(1, t.tokens()).unwrap(),
                a.accepts(&t),
                "window and run disagree on {t}"
            );
        }
    }
    assert!(checked >= 10, "corpus produced too few degree-one automata: {checked}");
}

#[test]
fn independent_rule_reorderings_build_equivalent_automata() {
    let mut a = Dictionary::parse("a b\nc d\n").unwrap();
    let mut b = Dictionary::parse("c d\na b\n").unwrap();
    a.add_symbols("abcd".chars());
    b.add_symbols("abcd".chars());
    let built_a = build_token_dfa(Language::Universal, &a, BuildOptions::default()).unwrap();
    let built_b = build_token_dfa(Language::Universal, &b, BuildOptions::default()).unwrap();
    assert!(built_a.equivalent(&built_b));

    // Swapping dependent rules changes the tokenizer.
    let c = Dictionary::parse("a a\naa a\n").unwrap();
    let d = Dictionary::parse("aa a\na a\n").unwrap();
    let built_c = build_token_dfa(Language::Universal, &c, BuildOptions::default()).unwrap();
    let built_d = build_token_dfa(Language::Universal, &d, BuildOptions::default()).unwrap();
    let witness = built_c.inequivalence_witness(&built_d).expect("languages differ");
    assert_ne!(built_c.accepts(&witness), built_d.accepts(&witness));
}

#[test]
fn locality_degree_never_grows_along_a_build() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..25 {
        let d = random_dict(&mut rng, "ab", 5, 4);
        let mut dfa = base_token_dfa(Language::Universal, &d).unwrap();
        let mut prev: Vec<usize> = (1..=3)
            .map(|k| dfa.dloc(k, DLOC_SET_CAP).unwrap().value)
            .collect();
        for (i, rule) in d.rules().iter().enumerate() {
            apply_merge_in_place(&mut dfa, rule, i);
            let now: Vec<usize> =
                (1..=3).map(|k| dfa.dloc(k, DLOC_SET_CAP).unwrap().value).collect();
            for k in 0..3 {
                assert!(
                    now[k] <= prev[k],
                    "step {i} grew the degree at {}: {} -> {}",
                    k + 1,
                    prev[k],
                    now[k]
                );
            }
            assert_eq!(now[0], prev[0], "step {i} changed the degree at 1");
            prev = now;
        }
    }
}

#[test]
fn rebuilt_artifacts_are_byte_identical() {
    let d = Dictionary::parse("a a\nb a\naa b\n").unwrap();
    let once = build_token_dfa(Language::Universal, &d, BuildOptions::default()).unwrap();
    let twice = build_token_dfa(Language::Universal, &d, BuildOptions::default()).unwrap();
    assert_eq!(once.to_json(), twice.to_json());
    let tok_once = build_tokenizer(&d).unwrap();
    let tok_twice = build_tokenizer(&d).unwrap();
    assert_eq!(tok_once.to_json(), tok_twice.to_json());
}
