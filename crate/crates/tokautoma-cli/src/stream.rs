//! Token stream records: one record per line, tokens separated by a single
//! tab, token text escaped as in dictionary files plus `\t` for tab.

use thiserror::Error;

use tokautoma::core::{escape_token_text, unescape_token_text, EscapeError, EscapeMode, Token};

/// A field of a record that does not decode to a token. Indices are 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum RecordError {
    #[error("token {index}: {source}")]
    Escape { index: usize, source: EscapeError },
    #[error("token {index} is empty")]
    EmptyToken { index: usize },
}

/// Renders one record line, without the trailing newline.
pub fn format_record(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| escape_token_text(t.text(), EscapeMode::Stream))
        .collect::<Vec<_>>()
        .join("\t")
}

/// Decodes one record line. An empty line is the empty record.
pub fn parse_record(line: &str) -> Result<Vec<Token>, RecordError> {
    if line.is_empty() {
        return Ok(Vec::new());
    }
    line.split('\t')
        .enumerate()
        .map(|(i, field)| {
            let index = i + 1;
            let text = unescape_token_text(field, EscapeMode::Stream)
                .map_err(|source| RecordError::Escape { index, source })?;
            Token::try_new(text).ok_or(RecordError::EmptyToken { index })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(texts: &[&str]) -> Vec<Token> {
        texts.iter().map(|t| Token::new(*t)).collect()
    }

    #[test]
    fn round_trips_plain_tokens() {
        let tokens = toks(&["aa", "b", "abc"]);
        let line = format_record(&tokens);
        assert_eq!(line, "aa\tb\tabc");
        assert_eq!(parse_record(&line).unwrap(), tokens);
    }

    #[test]
    fn escapes_whitespace_inside_tokens() {
        let tokens = vec![Token::new("a b"), Token::new("c\td"), Token::new("\\")];
        let line = format_record(&tokens);
        assert_eq!(line, "a\\sb\tc\\td\t\\\\");
        assert_eq!(parse_record(&line).unwrap(), tokens);
    }

    #[test]
    fn empty_line_is_the_empty_record() {
        assert_eq!(format_record(&[]), "");
        assert_eq!(parse_record("").unwrap(), Vec::new());
    }

    #[test]
    fn rejects_bad_fields() {
        assert_eq!(
            parse_record("aa\t\tb"),
            Err(RecordError::EmptyToken { index: 2 })
        );
        assert!(matches!(
            parse_record("a\\qb"),
            Err(RecordError::Escape { index: 1, .. })
        ));
        assert!(matches!(
            parse_record("ok\tbad\\"),
            Err(RecordError::Escape { index: 2, .. })
        ));
    }
}
