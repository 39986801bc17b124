//! Deterministic automata and subsequential transducers over BPE token
//! streams.
//!
//! A merge dictionary turns every string into one canonical token
//! sequence. This crate treats that process with automata machinery:
//!
//! - [`core`]: tokens, tokenizations, merge rules, dictionaries and their
//!   text format, properness checking.
//! - [`bpe`]: reference tokenizers (priority-pass and highest-priority
//!   semantics, which agree on proper dictionaries that mint a new token
//!   per rule) and exhaustive enumeration of segmentations.
//! - [`automaton`]: DFAs whose transition labels are tokens, with language
//!   equivalence, locality degree, context-invariance checking, streaming
//!   matching, and a canonical JSON format.
//! - [`regex`]: a small pattern engine compiling to character DFAs, with a
//!   naive matcher kept as an oracle.
//! - [`construction`]: building the token automaton of a string language
//!   under a dictionary by applying one merge at a time, with per-step
//!   growth audits.
//! - [`transducer`]: unrolling token automata into character-to-token
//!   transducers, deciding functionality, and determinizing into one-pass
//!   tokenizers.

pub mod automaton;
pub mod bpe;
pub mod construction;
pub mod core;
pub mod regex;
pub mod transducer;

pub use crate::automaton::TokenDfa;
pub use crate::core::{Dictionary, MergeRule, Token, Tokenization};
pub use crate::transducer::SubseqTransducer;
