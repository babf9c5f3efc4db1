//! MSB-first bit buffers.

/// Appends bits MSB-first. With a cap, bits beyond the cap are dropped, so a
/// capped writer always holds a prefix of what an uncapped one would.
#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
    cap: Option<usize>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// `cap = 0` means unlimited.
    pub fn with_cap(cap: usize) -> Self {
        BitWriter {
            cap: (cap > 0).then_some(cap),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.cap.is_some_and(|c| self.len >= c)
    }

    /// Returns false once the cap has been reached.
    #[inline]
    pub fn push(&mut self, bit: bool) -> bool {
        if self.is_full() {
            return false;
        }
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[self.len / 8] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
        true
    }

    /// Writes the low `n` bits of `code`, most significant first.
    pub fn push_bits(&mut self, code: u32, n: u32) -> bool {
        (0..n).rev().all(|i| self.push(code >> i & 1 == 1))
    }

    pub fn into_parts(self) -> (Vec<u8>, usize) {
        (self.bytes, self.len)
    }
}

/// Reads at most `len` bits from a byte buffer.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], len: usize) -> Self {
        BitReader {
            bytes,
            len: len.min(bytes.len() * 8),
            pos: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.len - self.pos
    }

    #[inline]
    pub fn read(&mut self) -> Option<bool> {
        if self.pos >= self.len {
            return None;
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }
}
