//! Significance symbols and their fixed prefix code.

use super::bits::{BitReader, BitWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Significant, positive.
    P,
    /// Significant, negative.
    N,
    /// Isolated zero: insignificant with a significant descendant.
    Z,
    /// Zero-tree root.
    T,
    /// End of a dominant pass.
    Sep,
}

impl Symbol {
    pub const ALL: [Symbol; 5] = [Symbol::T, Symbol::Z, Symbol::N, Symbol::P, Symbol::Sep];

    /// `(code, length)`.
    pub const fn code(self) -> (u32, u32) {
        match self {
            Symbol::T => (0b0, 1),
            Symbol::Z => (0b10, 2),
            Symbol::N => (0b110, 3),
            Symbol::P => (0b1110, 4),
            Symbol::Sep => (0b1111, 4),
        }
    }

    pub fn code_str(self) -> String {
        let (code, n) = self.code();
        format!("{code:0width$b}", width = n as usize)
    }

    pub fn letter(self) -> char {
        match self {
            Symbol::P => 'p',
            Symbol::N => 'n',
            Symbol::Z => 'z',
            Symbol::T => 't',
            Symbol::Sep => '|',
        }
    }
}

pub fn write_symbol(w: &mut BitWriter, s: Symbol) -> bool {
    let (code, n) = s.code();
    w.push_bits(code, n)
}

/// Reads one symbol. `None` at end of data, including a code cut short.
pub fn read_symbol(r: &mut BitReader<'_>) -> Option<Symbol> {
    let mut ones = 0;
    while ones < 4 {
        if !r.read()? {
            break;
        }
        ones += 1;
    }
    Some(match ones {
        0 => Symbol::T,
        1 => Symbol::Z,
        2 => Symbol::N,
        3 => Symbol::P,
        _ => Symbol::Sep,
    })
}

pub fn huffman_encode(symbols: &[Symbol]) -> (Vec<u8>, usize) {
    let mut w = BitWriter::new();
    for &s in symbols {
        write_symbol(&mut w, s);
    }
    w.into_parts()
}

/// Decodes until the data runs out; a trailing partial code is dropped.
pub fn huffman_decode(bytes: &[u8], len: usize) -> Vec<Symbol> {
    let mut r = BitReader::new(bytes, len);
    std::iter::from_fn(|| read_symbol(&mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bit_string(symbols: &[Symbol]) -> String {
        let (bytes, len) = huffman_encode(symbols);
        (0..len).map(|i| if bytes[i / 8] & (0x80 >> (i % 8)) != 0 { '1' } else { '0' }).collect()
    }

    #[test]
    fn table_codes() {
        assert_eq!(bit_string(&[Symbol::T]), "0");
        assert_eq!(bit_string(&[Symbol::Z]), "10");
        assert_eq!(bit_string(&[Symbol::N]), "110");
        assert_eq!(bit_string(&[Symbol::P]), "1110");
        assert_eq!(bit_string(&[Symbol::Sep]), "1111");
        assert_eq!(bit_string(&[Symbol::P, Symbol::N]), "1110110");
    }

    #[test]
    fn prefix_free() {
        for a in Symbol::ALL {
            for b in Symbol::ALL {
                if a != b {
                    assert!(!b.code_str().starts_with(&a.code_str()), "{a:?} prefixes {b:?}");
                }
            }
        }
    }

    #[test]
    fn sep_mid_stream_and_truncated_tail() {
        let (bytes, len) = huffman_encode(&[Symbol::Z, Symbol::Sep, Symbol::T, Symbol::P]);
        assert_eq!(huffman_decode(&bytes, len), vec![Symbol::Z, Symbol::Sep, Symbol::T, Symbol::P]);
        // cut the final P to "11"
        assert_eq!(huffman_decode(&bytes, len - 2), vec![Symbol::Z, Symbol::Sep, Symbol::T]);
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        prop_oneof![Just(Symbol::P), Just(Symbol::N), Just(Symbol::Z), Just(Symbol::T)]
    }

    proptest! {
        #[test]
        fn round_trip(symbols in prop::collection::vec(arb_symbol(), 0..200)) {
            let (bytes, len) = huffman_encode(&symbols);
            prop_assert_eq!(huffman_decode(&bytes, len), symbols);
        }
    }
}
