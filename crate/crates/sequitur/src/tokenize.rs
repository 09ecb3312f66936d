//! Tokenization of raw bytes into dense token ids, and the table that maps
//! them back.
//!
//! Ids are assigned in first-appearance order, so the same input always
//! yields the same id sequence. Every mode is exactly reversible:
//! byte/char/word tokens concatenate back to the input, and line mode keeps
//! the trailing fragment (possibly empty) as a token so that joining with
//! newlines restores the original bytes.

use std::collections::HashMap;

/// How raw bytes are split into tokens.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum TokenMode {
    /// Each byte is a token. Accepts arbitrary binary input.
    #[default]
    Byte,
    /// Each Unicode scalar value is a token.
    Char,
    /// Maximal runs of non-whitespace are tokens; so is each whitespace run.
    Word,
    /// Each line without its terminator is a token.
    Line,
}

impl TokenMode {
    pub fn name(self) -> &'static str {
        match self {
            TokenMode::Byte => "byte",
            TokenMode::Char => "char",
            TokenMode::Word => "word",
            TokenMode::Line => "line",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "byte" => Some(TokenMode::Byte),
            "char" => Some(TokenMode::Char),
            "word" => Some(TokenMode::Word),
            "line" => Some(TokenMode::Line),
            _ => None,
        }
    }
}

/// Invalid input for the chosen mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum TokenizeError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
}

use crate::grammar::TokenId;

/// Bijection between token ids and the distinct token byte strings, in
/// first-appearance order.
#[derive(Clone, Debug)]
pub struct TokenTable {
    mode: TokenMode,
    entries: Vec<Vec<u8>>,
    ids: HashMap<Vec<u8>, TokenId>,
}

impl TokenTable {
    pub fn new(mode: TokenMode) -> Self {
        TokenTable { mode, entries: Vec::new(), ids: HashMap::new() }
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    /// Number of distinct tokens.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Id for the token, assigning the next dense id on first appearance.
    pub fn intern(&mut self, token: &[u8]) -> TokenId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = TokenId(self.entries.len() as u32);
        self.entries.push(token.to_vec());
        self.ids.insert(token.to_vec(), id);
        id
    }

    /// Token bytes for an id.
    pub fn bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.entries.get(id.0 as usize).map(Vec::as_slice)
    }

    /// All tokens in id order.
    pub fn entries(&self) -> impl Iterator<Item = &[u8]> {
        self.entries.iter().map(Vec::as_slice)
    }

    /// Joins a token sequence back into bytes per this table's mode.
    pub fn detokenize(&self, tokens: &[TokenId]) -> Vec<u8> {
        let mut out = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            if self.mode == TokenMode::Line && i > 0 {
                out.push(b'\n');
            }
            if let Some(bytes) = self.bytes(*t) {
                out.extend_from_slice(bytes);
            }
        }
        out
    }
}

/// Splits `bytes` per `mode`, interning each token.
pub fn tokenize(bytes: &[u8], mode: TokenMode) -> Result<(Vec<TokenId>, TokenTable), TokenizeError> {
    let mut table = TokenTable::new(mode);
    let mut tokens = Vec::new();
    match mode {
        TokenMode::Byte => {
            for b in bytes {
                tokens.push(table.intern(std::slice::from_ref(b)));
            }
        }
        TokenMode::Char => {
            let text = as_utf8(bytes)?;
            let mut buf = [0u8; 4];
            for c in text.chars() {
                tokens.push(table.intern(c.encode_utf8(&mut buf).as_bytes()));
            }
        }
        TokenMode::Word => {
            let text = as_utf8(bytes)?;
            let mut rest = text;
            while let Some(first) = rest.chars().next() {
                let in_space = first.is_whitespace();
                let split = rest
                    .char_indices()
                    .find(|(_, c)| c.is_whitespace() != in_space)
                    .map(|(i, _)| i)
                    .unwrap_or(rest.len());
                tokens.push(table.intern(rest[..split].as_bytes()));
                rest = &rest[split..];
            }
        }
        TokenMode::Line => {
            let text = as_utf8(bytes)?;
            if !text.is_empty() {
                for line in text.split('\n') {
                    tokens.push(table.intern(line.as_bytes()));
                }
            }
        }
    }
    Ok((tokens, table))
}

fn as_utf8(bytes: &[u8]) -> Result<&str, TokenizeError> {
    std::str::from_utf8(bytes).map_err(|e| TokenizeError::InvalidUtf8 { offset: e.valid_up_to() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_mode_assigns_dense_first_appearance_ids() {
        let (tokens, table) = tokenize(b"abcdbc", TokenMode::Char).unwrap();
        assert_eq!(tokens.len(), 6);
        assert_eq!(table.len(), 4);
        assert_eq!(tokens[0], TokenId(0));
        assert_eq!(tokens[4], TokenId(1)); // second b reuses b's id
        assert_eq!(table.bytes(TokenId(3)), Some(&b"d"[..]));
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        for mode in [TokenMode::Byte, TokenMode::Char, TokenMode::Word, TokenMode::Line] {
            let (tokens, table) = tokenize(b"", mode).unwrap();
            assert!(tokens.is_empty(), "{mode:?}");
            assert!(table.is_empty(), "{mode:?}");
        }
    }

    #[test]
    fn word_mode_keeps_whitespace_runs() {
        let (tokens, table) = tokenize(b"ab ab", TokenMode::Word).unwrap();
        assert_eq!(tokens.len(), 3);
        assert_eq!(tokens[0], tokens[2]);
        assert_eq!(table.bytes(tokens[1]), Some(&b" "[..]));
        // two distinct non-space tokens never appear; table = {ab, " "}
        assert_eq!(table.len(), 2);

        let (tokens, table) = tokenize("a  b\t\nc".as_bytes(), TokenMode::Word).unwrap();
        assert_eq!(table.detokenize(&tokens), "a  b\t\nc".as_bytes());
    }

    #[test]
    fn byte_mode_accepts_arbitrary_bytes() {
        let data = [0u8, 255, 1, 0, 255];
        let (tokens, table) = tokenize(&data, TokenMode::Byte).unwrap();
        assert_eq!(tokens.len(), 5);
        assert_eq!(table.len(), 3);
        assert_eq!(table.detokenize(&tokens), data);
    }

    #[test]
    fn non_byte_modes_report_utf8_offset() {
        let data = [b'o', b'k', 0xff, b'x'];
        for mode in [TokenMode::Char, TokenMode::Word, TokenMode::Line] {
            assert_eq!(
                tokenize(&data, mode).err(),
                Some(TokenizeError::InvalidUtf8 { offset: 2 }),
                "{mode:?}"
            );
        }
    }

    #[test]
    fn line_mode_round_trips_with_and_without_trailing_newline() {
        for text in ["abc\ndef\n", "abc\ndef", "\n", "abc\n\nabc", ""] {
            let (tokens, table) = tokenize(text.as_bytes(), TokenMode::Line).unwrap();
            assert_eq!(table.detokenize(&tokens), text.as_bytes(), "{text:?}");
        }
        let (tokens, _) = tokenize(b"abc\ndef\n", TokenMode::Line).unwrap();
        assert_eq!(tokens.len(), 3); // "abc", "def", ""
    }

    #[test]
    fn char_mode_round_trips_multibyte_text() {
        let text = "héllo wörld\n日本語";
        let (tokens, table) = tokenize(text.as_bytes(), TokenMode::Char).unwrap();
        assert_eq!(table.detokenize(&tokens), text.as_bytes());
    }
}
