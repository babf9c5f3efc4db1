//! The `.hxc` container: a fixed big-endian header and the payload bits.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HXC1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SbHex,
    BbHex,
    Ezw,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::SbHex, Scheme::BbHex, Scheme::Ezw];

    pub fn byte(self) -> u8 {
        match self {
            Scheme::SbHex => 0,
            Scheme::BbHex => 1,
            Scheme::Ezw => 2,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Scheme::SbHex),
            1 => Ok(Scheme::BbHex),
            2 => Ok(Scheme::Ezw),
            _ => Err(Error::format(format!("unknown scheme byte {b}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SbHex => "sbhex",
            Scheme::BbHex => "bbhex",
            Scheme::Ezw => "ezw",
        }
    }

    pub fn is_hex(self) -> bool {
        self != Scheme::Ezw
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbhex" => Ok(Scheme::SbHex),
            "bbhex" => Ok(Scheme::BbHex),
            "ezw" => Ok(Scheme::Ezw),
            _ => Err(Error::Unsupported(format!("scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Header plus payload of an embedded stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeStream {
    pub scheme: Scheme,
    pub tree_rows: u16,
    pub tree_cols: u16,
    /// Hexagonal: samples per row. Cartesian: image width.
    pub orig_width: u16,
    /// Hexagonal: hexagonal rows. Cartesian: image height.
    pub orig_rows: u16,
    pub levels: u8,
    /// One exponent, or one per band for the per-band scheme.
    pub exponents: Vec<i8>,
    pub payload: Vec<u8>,
    pub bit_len: usize,
}

impl CodeStream {
    /// Number of samples in the source grid, the denominator of bits per pixel.
    pub fn sample_count(&self) -> usize {
        self.orig_width as usize * self.orig_rows as usize
    }

    pub fn bpp(&self) -> f64 {
        self.bit_len as f64 / self.sample_count() as f64
    }

    /// The first `bits` payload bits (all of them if `bits` is 0 or larger).
    pub fn truncated(&self, bits: usize) -> CodeStream {
        if bits == 0 || bits >= self.bit_len {
            return self.clone();
        }
        let mut payload = self.payload[..bits.div_ceil(8)].to_vec();
        if !bits.is_multiple_of(8) {
            *payload.last_mut().unwrap() &= 0xFFu8 << (8 - bits % 8);
        }
        CodeStream {
            payload,
            bit_len: bits,
            ..self.clone()
        }
    }

    pub fn header_len(&self) -> usize {
        4 + 1 + 1 + 8 + 1 + if self.scheme == Scheme::BbHex { 1 + self.exponents.len() } else { 1 } + 4
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut h = Vec::with_capacity(self.header_len());
        h.extend_from_slice(MAGIC);
        h.push(VERSION);
        h.push(self.scheme.byte());
        for v in [self.tree_rows, self.tree_cols, self.orig_width, self.orig_rows] {
            h.extend_from_slice(&v.to_be_bytes());
        }
        h.push(self.levels);
        if self.scheme == Scheme::BbHex {
            let n = u8::try_from(self.exponents.len()).map_err(|_| Error::format("too many bands"))?;
            h.push(n);
            h.extend(self.exponents.iter().map(|&e| e as u8));
        } else {
            if self.exponents.len() != 1 {
                return Err(Error::format("single-tree stream needs exactly one exponent"));
            }
            h.push(self.exponents[0] as u8);
        }
        let bits = u32::try_from(self.bit_len).map_err(|_| Error::format("payload too long"))?;
        h.extend_from_slice(&bits.to_be_bytes());
        w.write_all(&h)?;
        w.write_all(&self.payload[..self.bit_len.div_ceil(8)])?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = Vec::new();
        self.write_to(&mut v)?;
        Ok(v)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 15];
        read_exact(&mut r, &mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::format("not an HXC stream (bad magic)"));
        }
        if head[4] != VERSION {
            return Err(Error::format(format!("unsupported HXC version {}", head[4])));
        }
        let scheme = Scheme::from_byte(head[5])?;
        let be = |i: usize| u16::from_be_bytes([head[i], head[i + 1]]);
        let (tree_rows, tree_cols, orig_width, orig_rows) = (be(6), be(8), be(10), be(12));
        let levels = head[14];
        let mut one = [0u8; 1];
        read_exact(&mut r, &mut one)?;
        let exponents = if scheme == Scheme::BbHex {
            let mut e = vec![0u8; one[0] as usize];
            read_exact(&mut r, &mut e)?;
            e.into_iter().map(|b| b as i8).collect()
        } else {
            vec![one[0] as i8]
        };
        let mut len = [0u8; 4];
        read_exact(&mut r, &mut len)?;
        let bit_len = u32::from_be_bytes(len) as usize;
        let mut payload = vec![0u8; bit_len.div_ceil(8)];
        read_exact(&mut r, &mut payload)?;
        if tree_rows == 0 || tree_cols == 0 || orig_width == 0 || orig_rows == 0 || levels == 0 {
            return Err(Error::format("zero dimension in header"));
        }
        Ok(CodeStream {
            scheme,
            tree_rows,
            tree_cols,
            orig_width,
            orig_rows,
            levels,
            exponents,
            payload,
            bit_len,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format("stream ends inside the header or payload"),
        _ => Error::Io(e),
    })
}

pub(crate) fn dim16(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::dims(format!("{what} {v} does not fit the stream header")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(scheme: Scheme) -> CodeStream {
        CodeStream {
            scheme,
            tree_rows: 512,
            tree_cols: 512,
            orig_width: 256,
            orig_rows: 512,
            levels: 6,
            exponents: if scheme == Scheme::BbHex { vec![12, -1, -128, 3] } else { vec![-1] },
            payload: vec![0xAB, 0xCD, 0xE0],
            bit_len: 19,
        }
    }

    #[test]
    fn header_layout() {
        let b = sample(Scheme::SbHex).to_bytes().unwrap();
        assert_eq!(&b[..4], b"HXC1");
        assert_eq!(b[4], 1);
        assert_eq!(b[5], 0);
        assert_eq!(&b[6..8], &[2, 0]);
        assert_eq!(&b[10..12], &[1, 0]);
        assert_eq!(b[14], 6);
        assert_eq!(b[15], 0xFF);
        assert_eq!(&b[16..20], &[0, 0, 0, 19]);
        assert_eq!(b.len(), 20 + 3);
        assert_eq!(sample(Scheme::SbHex).header_len(), 20);
    }

    #[test]
    fn round_trip_and_errors() {
        for s in Scheme::ALL {
            let cs = sample(s);
            let b = cs.to_bytes().unwrap();
            assert_eq!(CodeStream::from_bytes(&b).unwrap(), cs);
            let mut bad = b.clone();
            bad[0] = b'X';
            assert!(matches!(CodeStream::from_bytes(&bad), Err(Error::Format(_))));
            let mut bad = b.clone();
            bad[4] = 9;
            assert!(CodeStream::from_bytes(&bad).is_err());
            assert!(CodeStream::from_bytes(&b[..b.len() - 1]).is_err());
        }
    }

    #[test]
    fn truncation_masks_trailing_bits() {
        let cs = sample(Scheme::Ezw);
        let t = cs.truncated(10);
        assert_eq!(t.bit_len, 10);
        assert_eq!(t.payload, vec![0xAB, 0xC0]);
        assert_eq!(cs.truncated(0), cs);
        assert_eq!(cs.truncated(100), cs);
    }

    #[test]
    fn bits_per_pixel() {
        let mut cs = sample(Scheme::SbHex);
        cs.bit_len = 131072;
        assert_eq!(cs.bpp(), 1.0);
        cs.bit_len = 0;
        assert_eq!(cs.bpp(), 0.0);
    }
}
