//! End-to-end rate-distortion runs: one source sampled onto a hexagonal and a
//! Cartesian grid over the same box, coded, decoded and compared on the
//! Cartesian grid.

use serde::{Deserialize, Serialize};

use crate::coder::{decode_bbhex, decode_ezw_cart, decode_sbhex, encode_bbhex, encode_ezw_cart, encode_sbhex, Encoded, Scheme};
use crate::error::Result;
use crate::grid::Grid;
use crate::lattice::IndexMap;
use crate::metrics::{psnr, ssim, RdPoint};
use crate::resample::{CartImage, SharedGeometry, Synthetic};
use crate::wavelet::{Db2Bank, FilterBank};

pub const HEX_WIDTH: usize = 256;
pub const HEX_ROWS: usize = 512;
pub const CART_SIZE: usize = 362;

/// Where an experiment's pixels come from.
#[derive(Debug, Clone)]
pub enum Source {
    Synthetic(Synthetic),
    Image(CartImage),
}

impl Source {
    fn geometry(&self, hex_width: usize, hex_rows: usize, cart: usize) -> SharedGeometry {
        match self {
            Source::Synthetic(_) => SharedGeometry::for_synthetic(hex_width, hex_rows, cart, cart),
            Source::Image(img) => SharedGeometry::for_image(img, hex_width, hex_rows, cart, cart),
        }
    }
}

/// A source prepared on both grids, with the hexagonal original already
/// resampled onto the comparison grid.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub geometry: SharedGeometry,
    pub hex: IndexMap,
    pub cart: CartImage,
    pub hex_reference: CartImage,
}

impl Prepared {
    pub fn new(source: &Source, hex_width: usize, hex_rows: usize, cart: usize) -> Result<Self> {
        let geometry = source.geometry(hex_width, hex_rows, cart);
        let (hex, cart) = match source {
            Source::Synthetic(s) => (geometry.hex(s)?, geometry.cart(s)?),
            Source::Image(img) => (geometry.hex(img)?, geometry.cart(img)?),
        };
        let hex_reference = geometry.hex_to_cart(&hex)?;
        Ok(Prepared {
            geometry,
            hex,
            cart,
            hex_reference,
        })
    }

    /// The default grids: 256 x 512 hexagonal, 362 x 362 Cartesian.
    pub fn standard(source: &Source) -> Result<Self> {
        Self::new(source, HEX_WIDTH, HEX_ROWS, CART_SIZE)
    }

    pub fn sample_count(&self, scheme: Scheme) -> usize {
        if scheme.is_hex() {
            self.hex.sample_count()
        } else {
            self.cart.rows() * self.cart.cols()
        }
    }

    /// Payload budget for a target rate; 0 (unlimited) for a non-positive rate.
    pub fn budget(&self, scheme: Scheme, bpp: f64) -> usize {
        if bpp > 0.0 {
            ((bpp * self.sample_count(scheme) as f64).floor() as usize).max(1)
        } else {
            0
        }
    }

    pub fn encode(&self, scheme: Scheme, levels: usize, budget_bits: usize, bank: &FilterBank, db2: &Db2Bank) -> Result<Encoded> {
        match scheme {
            Scheme::SbHex => encode_sbhex(&self.hex, levels, budget_bits, bank),
            Scheme::BbHex => encode_bbhex(&self.hex, levels, budget_bits, bank),
            Scheme::Ezw => encode_ezw_cart(&self.cart, levels, budget_bits, db2),
        }
    }

    /// Decodes and returns the reconstruction and reference on the comparison grid.
    pub fn reconstruct(&self, enc: &Encoded, bank: &FilterBank, db2: &Db2Bank) -> Result<(Grid, &Grid)> {
        let s = &enc.stream;
        Ok(match s.scheme {
            Scheme::SbHex => (self.geometry.hex_to_cart(&decode_sbhex(s, 0, bank)?)?, &self.hex_reference),
            Scheme::BbHex => (self.geometry.hex_to_cart(&decode_bbhex(s, 0, bank)?)?, &self.hex_reference),
            Scheme::Ezw => (decode_ezw_cart(s, 0, db2)?, &self.cart),
        })
    }

    /// Encodes at `bpp` (unlimited if 0), decodes and measures.
    pub fn rd_point(&self, scheme: Scheme, levels: usize, bpp: f64, bank: &FilterBank, db2: &Db2Bank) -> Result<(RdPoint, Encoded)> {
        let enc = self.encode(scheme, levels, self.budget(scheme, bpp), bank, db2)?;
        let (rec, reference) = self.reconstruct(&enc, bank, db2)?;
        let point = RdPoint {
            bpp: enc.stream.bpp(),
            psnr: psnr(reference, &rec)?,
            ssim: ssim(reference, &rec)?,
        };
        Ok((point, enc))
    }
}

/// One row of a sweep. Failures are recorded rather than aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub image: String,
    pub scheme: String,
    pub target_bpp: f64,
    pub bpp: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub error: Option<String>,
}

/// Every (image, scheme, rate) combination, evaluated in parallel. Rows come
/// back in input order.
pub fn sweep(
    images: &[(String, Source)],
    schemes: &[Scheme],
    bpps: &[f64],
    levels: usize,
    bank: &FilterBank,
) -> Vec<SweepRow> {
    use rayon::prelude::*;
    let db2 = Db2Bank::new();
    let prepared: Vec<Result<Prepared>> = images.par_iter().map(|(_, s)| Prepared::standard(s)).collect();
    let jobs: Vec<(usize, Scheme, f64)> = (0..images.len())
        .flat_map(|i| schemes.iter().flat_map(move |&s| bpps.iter().map(move |&b| (i, s, b))))
        .collect();
    jobs.par_iter()
        .map(|&(i, scheme, target)| {
            let mut row = SweepRow {
                image: images[i].0.clone(),
                scheme: scheme.name().to_string(),
                target_bpp: target,
                bpp: None,
                psnr: None,
                ssim: None,
                error: None,
            };
            let result = match &prepared[i] {
                Ok(p) => p.rd_point(scheme, levels, target, bank, &db2).map(|r| r.0),
                Err(e) => Err(crate::error::Error::Unsupported(e.to_string())),
            };
            match result {
                Ok(pt) => {
                    row.bpp = Some(pt.bpp);
                    row.psnr = Some(pt.psnr);
                    row.ssim = Some(pt.ssim);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep_csv(r: impl std::io::Read) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_err))
        .collect()
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Format(format!("csv: {e}"))
}
