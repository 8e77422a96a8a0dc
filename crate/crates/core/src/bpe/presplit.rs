//! Built-in pre-splitter: merges never cross the pieces produced here.
//!
//! Pieces are letter runs (any script), digit runs, single punctuation or
//! symbol characters, and whitespace runs. A single ASCII space directly
//! before a non-whitespace piece is attached to that piece as a prefix.

pub const PRESPLIT_VERSION: &str = "presplit-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Digit,
    Space,
    Other,
}

fn class(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Digit
    } else {
        Class::Other
    }
}

/// Iterator over the pieces of `text`; their concatenation is `text`.
pub fn split(text: &str) -> Pieces<'_> {
    Pieces { text, pos: 0 }
}

pub struct Pieces<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Pieces<'a> {
    /// End of the run of `cls` characters starting at byte `from`.
    fn run_end(&self, from: usize, cls: Class) -> usize {
        self.text[from..]
            .char_indices()
            .find(|&(_, c)| class(c) != cls)
            .map_or(self.text.len(), |(i, _)| from + i)
    }

    /// End of the non-space piece whose first char starts at `from`.
    fn piece_end(&self, from: usize) -> usize {
        let c = self.text[from..].chars().next().expect("non-empty");
        match class(c) {
            Class::Other => from + c.len_utf8(),
            cls => self.run_end(from, cls),
        }
    }
}

impl<'a> Iterator for Pieces<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let start = self.pos;
        let first = self.text[start..].chars().next()?;
        let end = if class(first) == Class::Space {
            let ws_end = self.run_end(start, Class::Space);
            let ends_in_space = self.text.as_bytes()[ws_end - 1] == b' ';
            if ws_end < self.text.len() && ends_in_space {
                if ws_end - 1 > start {
                    // leave the final space for the next piece
                    ws_end - 1
                } else {
                    self.piece_end(ws_end)
                }
            } else {
                ws_end
            }
        } else {
            self.piece_end(start)
        };
        self.pos = end;
        Some(&self.text[start..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pieces(text: &str) -> Vec<&str> {
        split(text).collect()
    }

    #[test]
    fn words_carry_leading_space() {
        assert_eq!(pieces("aaab aaab ab"), ["aaab", " aaab", " ab"]);
        assert_eq!(pieces("שלום עולם"), ["שלום", " עולם"]);
    }

    #[test]
    fn digits_punctuation_and_whitespace() {
        assert_eq!(pieces("abc123, x"), ["abc", "123", ",", " x"]);
        assert_eq!(pieces("a  b"), ["a", " ", " b"]);
        assert_eq!(pieces("a\n b"), ["a", "\n", " b"]);
        assert_eq!(pieces("a\nb"), ["a", "\n", "b"]);
        assert_eq!(pieces("end  "), ["end", "  "]);
        assert_eq!(pieces(" !?"), [" !", "?"]);
        assert_eq!(pieces("ok 🙂"), ["ok", " 🙂"]);
    }

    #[test]
    fn empty_text_has_no_pieces() {
        assert!(pieces("").is_empty());
    }

    proptest! {
        #[test]
        fn pieces_concatenate_to_input(text in "\\PC{0,40}") {
            let joined: String = split(&text).collect();
            prop_assert_eq!(joined, text.clone());
            prop_assert!(split(&text).all(|p| !p.is_empty()));
        }
    }
}
