//! Printable stand-ins for the 256 byte values.
//!
//! Bytes that are already visible, non-space Latin-1 characters map to
//! themselves; the rest are shifted to `U+0100` and up in byte order. This
//! is the same table GPT-2 style byte-level tokenizers ship, so merges files
//! stay human-readable and never contain a literal space.

use std::collections::HashMap;
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct ByteAlphabet {
    byte_to_symbol: [char; 256],
    symbol_to_byte: HashMap<char, u8>,
}

fn is_direct(b: u8) -> bool {
    matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}

impl ByteAlphabet {
    fn build() -> Self {
        let mut byte_to_symbol = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..=255u8 {
            byte_to_symbol[b as usize] = if is_direct(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + shifted).expect("valid code point");
                shifted += 1;
                c
            };
        }
        let symbol_to_byte = byte_to_symbol
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect();
        ByteAlphabet {
            byte_to_symbol,
            symbol_to_byte,
        }
    }

    pub fn get() -> &'static ByteAlphabet {
        static ALPHABET: OnceLock<ByteAlphabet> = OnceLock::new();
        ALPHABET.get_or_init(ByteAlphabet::build)
    }

    pub fn symbol(&self, byte: u8) -> char {
        self.byte_to_symbol[byte as usize]
    }

    pub fn byte(&self, symbol: char) -> Option<u8> {
        self.symbol_to_byte.get(&symbol).copied()
    }

    /// Symbol string for a byte sequence.
    pub fn encode(&self, bytes: &[u8]) -> String {
        bytes.iter().map(|&b| self.symbol(b)).collect()
    }

    /// Byte sequence for a symbol string; `None` if any char is not a symbol.
    pub fn decode(&self, symbols: &str) -> Option<Vec<u8>> {
        symbols.chars().map(|c| self.byte(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bijection_over_all_bytes() {
        let alphabet = ByteAlphabet::get();
        let mut seen = std::collections::HashSet::new();
        for b in 0..=255u8 {
            let c = alphabet.symbol(b);
            assert!(!c.is_whitespace() && !c.is_control(), "byte {b} -> {c:?}");
            assert!(seen.insert(c));
            assert_eq!(alphabet.byte(c), Some(b));
        }
    }

    #[test]
    fn familiar_symbols() {
        let alphabet = ByteAlphabet::get();
        assert_eq!(alphabet.symbol(b'a'), 'a');
        assert_eq!(alphabet.symbol(b' '), 'Ġ');
        assert_eq!(alphabet.symbol(b'\n'), 'Ċ');
        let hebrew = "שלום".as_bytes();
        assert_eq!(alphabet.decode(&alphabet.encode(hebrew)).unwrap(), hebrew);
    }
}
