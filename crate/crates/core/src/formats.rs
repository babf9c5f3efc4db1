//! File containers: netpbm rasters in, binary PGM out, and the `.hexi`
//! hexagonal image.

use std::io::{Read, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::lattice::{valid_columns, IndexMap};
use crate::resample::{rgb_to_y, CartImage, RgbImage};

pub const HEXI_MAGIC: &[u8; 4] = b"HEXI";
pub const HEXI_VERSION: u8 = 1;
/// Samples stored as big-endian `f64`.
pub const HEXI_F64: u8 = 0;

/// A decoded netpbm raster.
#[derive(Debug, Clone)]
pub enum Raster {
    Gray(CartImage),
    Rgb(RgbImage),
}

impl Raster {
    /// Gray rasters pass through unchanged; colour rasters go through BT.601 luma.
    pub fn luma(self) -> CartImage {
        match self {
            Raster::Gray(g) => g,
            Raster::Rgb(rgb) => rgb_to_y(&rgb),
        }
    }
}

/// Decodes PGM or PPM, plain or binary. 16-bit samples are scaled to 0..255.
pub fn read_netpbm(bytes: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm).map_err(|e| Error::format(format!("netpbm: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(match img {
        DynamicImage::ImageLuma8(g) => Raster::Gray(CartImage::from_vec(h, w, g.into_raw().into_iter().map(f64::from).collect())),
        DynamicImage::ImageLuma16(g) => Raster::Gray(CartImage::from_vec(
            h,
            w,
            g.into_raw().into_iter().map(|v| f64::from(v) / 257.0).collect(),
        )),
        DynamicImage::ImageRgb8(c) => Raster::Rgb(RgbImage::new(h, w, c.into_raw().chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect())?),
        DynamicImage::ImageRgb16(c) => Raster::Rgb(RgbImage::new(
            h,
            w,
            c.into_raw()
                .chunks_exact(3)
                .map(|p| [p[0], p[1], p[2]].map(|v| (f64::from(v) / 257.0).round() as u8))
                .collect(),
        )?),
        other => return Err(Error::Unsupported(format!("netpbm color type {:?}", other.color()))),
    })
}

pub fn load_luma(path: impl AsRef<Path>) -> Result<CartImage> {
    Ok(read_netpbm(&std::fs::read(path)?)?.luma())
}

/// Writes binary 8-bit PGM, rounding and clamping to 0..255.
pub fn write_pgm(img: &CartImage, w: impl Write) -> Result<()> {
    let bytes: Vec<u8> = img.as_slice().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
    PnmEncoder::new(w)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&bytes, img.cols() as u32, img.rows() as u32, ExtendedColorType::L8)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            e => Error::format(format!("pgm: {e}")),
        })
}

pub fn save_pgm(img: &CartImage, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pgm(img, &mut f)?;
    f.flush()?;
    Ok(())
}

/// A hexagonal image with its sampling interval. Only valid cells are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HexImage {
    pub map: IndexMap,
    pub h: f64,
}

impl HexImage {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let width = u16::try_from(self.map.width()).map_err(|_| Error::dims("width exceeds 65535"))?;
        let rows = u16::try_from(self.map.rows()).map_err(|_| Error::dims("rows exceed 65535"))?;
        let mut buf = Vec::with_capacity(18 + 8 * self.map.sample_count());
        buf.extend_from_slice(HEXI_MAGIC);
        buf.push(HEXI_VERSION);
        buf.extend_from_slice(&width.to_be_bytes());
        buf.extend_from_slice(&rows.to_be_bytes());
        buf.extend_from_slice(&self.h.to_be_bytes());
        buf.push(HEXI_F64);
        for v in self.map.valid_samples() {
            buf.extend_from_slice(&v.to_be_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = vec![];
        self.write_to(&mut v)?;
        Ok(v)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 18];
        r.read_exact(&mut head).map_err(eof)?;
        if &head[..4] != HEXI_MAGIC {
            return Err(Error::format("not a HEXI file (bad magic)"));
        }
        if head[4] != HEXI_VERSION {
            return Err(Error::format(format!("unsupported HEXI version {}", head[4])));
        }
        let width = u16::from_be_bytes([head[5], head[6]]) as usize;
        let rows = u16::from_be_bytes([head[7], head[8]]) as usize;
        let h = f64::from_be_bytes(head[9..17].try_into().unwrap());
        if head[17] != HEXI_F64 {
            return Err(Error::Unsupported(format!("HEXI sample format {}", head[17])));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::format(format!("HEXI sampling interval {h}")));
        }
        let mut map = IndexMap::new(width, rows)?;
        let mut sample = [0u8; 8];
        for row in 0..rows {
            for c in valid_columns(row, width) {
                r.read_exact(&mut sample).map_err(eof)?;
                map.set(row, c, f64::from_be_bytes(sample));
            }
        }
        if r.read(&mut sample)? != 0 {
            return Err(Error::format("trailing bytes after HEXI samples"));
        }
        Ok(HexImage { map, h })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

fn eof(e: std::io::Error) -> Error {
    match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format("file ends early"),
        _ => Error::Io(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_binary_pgm_agree() {
        let plain = b"P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n";
        let binary = [b"P5\n3 2\n255\n".as_slice(), &[0, 10, 20, 30, 40, 255]].concat();
        let a = read_netpbm(plain).unwrap().luma();
        let b = read_netpbm(&binary).unwrap().luma();
        assert_eq!(a, b);
        assert_eq!(a.dims(), (2, 3));
        assert_eq!(a[(1, 2)], 255.0);
    }

    #[test]
    fn sixteen_bit_pgm_is_rescaled() {
        let bytes = [b"P5\n2 1\n65535\n".as_slice(), &[0xFF, 0xFF, 0x01, 0x01]].concat();
        let g = read_netpbm(&bytes).unwrap().luma();
        assert_eq!(g.as_slice(), &[255.0, 1.0]);
    }

    #[test]
    fn white_ppm_is_studio_white() {
        let bytes = [b"P6\n2 2\n255\n".as_slice(), &[255; 12]].concat();
        let y = read_netpbm(&bytes).unwrap().luma();
        assert!(y.as_slice().iter().all(|&v| (v - 235.0).abs() < 1e-12));
    }

    #[test]
    fn pgm_write_round_trips_integers() {
        let img = CartImage::from_fn(4, 5, |r, c| (r * 50 + c) as f64);
        let mut buf = vec![];
        write_pgm(&img, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5"));
        assert_eq!(read_netpbm(&buf).unwrap().luma(), img);
        let clipped = write_and_read(&CartImage::from_vec(1, 3, vec![-4.0, 127.6, 300.0]));
        assert_eq!(clipped.as_slice(), &[0.0, 128.0, 255.0]);
    }

    fn write_and_read(img: &CartImage) -> CartImage {
        let mut buf = vec![];
        write_pgm(img, &mut buf).unwrap();
        read_netpbm(&buf).unwrap().luma()
    }

    #[test]
    fn garbage_is_a_format_error() {
        assert!(matches!(read_netpbm(b"P7 nope"), Err(Error::Format(_))));
    }

    fn sample_hexi() -> HexImage {
        let map = IndexMap::from_fn(5, 4, |r, c| (r * 10 + c) as f64 + 0.25).unwrap();
        HexImage { map, h: 0.5 }
    }

    #[test]
    fn hexi_layout() {
        let b = sample_hexi().to_bytes().unwrap();
        assert_eq!(&b[..4], b"HEXI");
        assert_eq!(b[4], 1);
        assert_eq!(&b[5..9], &[0, 5, 0, 4]);
        assert_eq!(&b[9..17], &0.5f64.to_be_bytes());
        assert_eq!(b[17], 0);
        assert_eq!(b.len(), 18 + 8 * 20);
        assert_eq!(&b[18..26], &0.25f64.to_be_bytes());
    }

    #[test]
    fn hexi_round_trip_is_bit_exact() {
        let h = sample_hexi();
        let b = h.to_bytes().unwrap();
        let back = HexImage::from_bytes(&b).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.to_bytes().unwrap(), b);
    }

    #[test]
    fn hexi_rejects_bad_headers() {
        let b = sample_hexi().to_bytes().unwrap();
        let mut bad = b.clone();
        bad[1] = b'X';
        assert!(matches!(HexImage::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(matches!(HexImage::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = b.clone();
        bad[17] = 1;
        assert!(matches!(HexImage::from_bytes(&bad), Err(Error::Unsupported(_))));
        assert!(HexImage::from_bytes(&b[..b.len() - 3]).is_err());
        let mut long = b.clone();
        long.push(0);
        assert!(HexImage::from_bytes(&long).is_err());
    }
}
