//! Embedded zerotree coders.
//!
//! * SBHex codes the whole hexagonal pyramid as one spiral tree.
//! * BBHex codes every sub-band as its own small spiral tree. Passes are
//!   interleaved: for each threshold, bands are visited coarse to fine.
//! * EZW codes a Cartesian Daubechies-4 pyramid with the classic quadtree.
//!
//! Every scheme spends its budget strictly in stream order, so a stream
//! encoded at budget `b` is the first `b` bits of the unlimited stream.

pub mod bits;
pub mod engine;
pub mod stream;
pub mod symbol;
pub mod tree;

use std::collections::HashMap;

pub use engine::{initial_threshold, threshold_exponent, PassStats, EMPTY_EXPONENT, MIN_EXPONENT};
pub use stream::{CodeStream, Scheme};
pub use symbol::{huffman_decode, huffman_encode, Symbol};
pub use tree::CodingTree;

use bits::{BitReader, BitWriter};
use engine::{decode_tree, encode_tree, PassEnd, TreeDecoder, TreeEncoder};
use stream::dim16;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::IndexMap;
use crate::sot::{spiral_map, spiral_unmap, SpiralTree};
use crate::wavelet::{dhwt_forward, dhwt_inverse, dwt2_forward, dwt2_inverse, round_up, Db2Bank, FilterBank, Pyramid};

/// A stream and the per-pass counts gathered while producing it.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub stream: CodeStream,
    pub stats: Vec<PassStats>,
}

/// Coefficients recovered from a stream, before the inverse transform.
#[derive(Debug, Clone)]
pub struct DecodedPyramid {
    pub pyramid: Pyramid,
    pub stats: Vec<PassStats>,
}

fn header(scheme: Scheme, pyr: &Pyramid, exponents: Vec<i8>) -> Result<CodeStream> {
    let (rows, cols) = pyr.padded_dims();
    Ok(CodeStream {
        scheme,
        tree_rows: dim16(rows, "tree rows")?,
        tree_cols: dim16(cols, "tree cols")?,
        orig_width: dim16(pyr.orig_width, "width")?,
        orig_rows: dim16(pyr.orig_rows, "rows")?,
        levels: u8::try_from(pyr.levels).map_err(|_| Error::dims("too many levels"))?,
        exponents,
        payload: vec![],
        bit_len: 0,
    })
}

fn finish(mut stream: CodeStream, w: BitWriter, stats: Vec<PassStats>) -> Encoded {
    let (payload, bit_len) = w.into_parts();
    stream.payload = payload;
    stream.bit_len = bit_len;
    Encoded { stream, stats }
}

fn expect_scheme(stream: &CodeStream, scheme: Scheme) -> Result<()> {
    if stream.scheme != scheme {
        return Err(Error::format(format!("stream holds {}, expected {}", stream.scheme, scheme)));
    }
    Ok(())
}

/// Padded array dims a hexagonal stream must declare.
fn hex_tree_dims(stream: &CodeStream) -> Result<(usize, usize)> {
    let map = IndexMap::new(stream.orig_width as usize, stream.orig_rows as usize)?;
    let q = 1usize << (stream.levels as usize + 1);
    let dims = (round_up(map.rows(), q), round_up(map.cols(), q));
    if dims != (stream.tree_rows as usize, stream.tree_cols as usize) {
        return Err(Error::format(format!(
            "header tree {}x{} inconsistent with a {}x{} hexagonal map",
            stream.tree_rows, stream.tree_cols, stream.orig_width, stream.orig_rows
        )));
    }
    Ok(dims)
}

pub fn encode_sbhex_pyramid(pyr: &Pyramid, budget_bits: usize) -> Result<Encoded> {
    let tree = spiral_map(pyr)?;
    let coding = CodingTree::dilation(tree.rows(), tree.cols())?;
    let e = threshold_exponent(tree.data.as_slice());
    let mut w = BitWriter::with_cap(budget_bits);
    let mut stats = vec![];
    encode_tree(&coding, tree.data.as_slice(), e, &mut w, &mut stats);
    Ok(finish(header(Scheme::SbHex, pyr, vec![e])?, w, stats))
}

pub fn decode_sbhex_pyramid(stream: &CodeStream) -> Result<DecodedPyramid> {
    expect_scheme(stream, Scheme::SbHex)?;
    let (rows, cols) = hex_tree_dims(stream)?;
    let coding = CodingTree::dilation(rows, cols)?;
    let mut r = BitReader::new(&stream.payload, stream.bit_len);
    let mut stats = vec![];
    let data = decode_tree(&coding, stream.exponents[0], &mut r, &mut stats)?;
    let tree = SpiralTree {
        levels: stream.levels as usize,
        data: Grid::from_vec(rows, cols, data),
        orig_width: stream.orig_width as usize,
        orig_rows: stream.orig_rows as usize,
    };
    Ok(DecodedPyramid {
        pyramid: spiral_unmap(&tree)?,
        stats,
    })
}

/// Transforms and codes a hexagonal map as one spiral tree.
pub fn encode_sbhex(map: &IndexMap, levels: usize, budget_bits: usize, bank: &FilterBank) -> Result<Encoded> {
    encode_sbhex_pyramid(&dhwt_forward(map, levels, bank)?, budget_bits)
}

/// Decodes the first `budget_bits` bits (all if 0) of an SBHex stream.
pub fn decode_sbhex(stream: &CodeStream, budget_bits: usize, bank: &FilterBank) -> Result<IndexMap> {
    dhwt_inverse(&decode_sbhex_pyramid(&stream.truncated(budget_bits))?.pyramid, bank)
}

/// Small-tree cache keyed by band dims.
fn band_trees(dims: impl Iterator<Item = (usize, usize)>) -> Result<HashMap<(usize, usize), CodingTree>> {
    let mut trees = HashMap::new();
    for d in dims {
        if let std::collections::hash_map::Entry::Vacant(v) = trees.entry(d) {
            v.insert(CodingTree::dilation(d.0, d.1)?);
        }
    }
    Ok(trees)
}

/// A band whose exponent is below the pass threshold writes nothing; all of
/// its cells are implicitly one zero-tree.
fn dormant(e: i32, band: usize, cells: usize, end_bit: usize) -> PassStats {
    PassStats {
        threshold: 2f64.powi(e),
        band: Some(band),
        zerotree_cells: cells,
        end_bit,
        ..PassStats::default()
    }
}

pub fn encode_bbhex_pyramid(pyr: &Pyramid, budget_bits: usize) -> Result<Encoded> {
    let bands = pyr.bands();
    let trees = band_trees(bands.iter().map(|b| b.dims()))?;
    let exps: Vec<i8> = bands.iter().map(|b| threshold_exponent(b.as_slice())).collect();
    let mut encoders: Vec<TreeEncoder> = bands
        .iter()
        .map(|b| TreeEncoder::new(&trees[&b.dims()], b.as_slice()))
        .collect();
    let mut w = BitWriter::with_cap(budget_bits);
    let mut stats = vec![];
    if let Some(top) = exps.iter().filter(|&&e| e != EMPTY_EXPONENT).max() {
        'passes: for e in (MIN_EXPONENT..=*top as i32).rev() {
            for (k, enc) in encoders.iter_mut().enumerate() {
                if exps[k] == EMPTY_EXPONENT || e > exps[k] as i32 {
                    stats.push(dormant(e, k, bands[k].as_slice().len(), w.len()));
                    continue;
                }
                let ok = enc.write_pass(2f64.powi(e), &mut w, &mut stats);
                stats.last_mut().unwrap().band = Some(k);
                if !ok {
                    break 'passes;
                }
            }
        }
    }
    Ok(finish(header(Scheme::BbHex, pyr, exps)?, w, stats))
}

pub fn decode_bbhex_pyramid(stream: &CodeStream) -> Result<DecodedPyramid> {
    expect_scheme(stream, Scheme::BbHex)?;
    let (rows, cols) = hex_tree_dims(stream)?;
    let levels = stream.levels as usize;
    let mut pyr = Pyramid::zeros(levels, rows, cols, stream.orig_width as usize, stream.orig_rows as usize);
    let exps = &stream.exponents;
    if exps.len() != 1 + 3 * levels {
        return Err(Error::format(format!("{} band exponents for {levels} levels", exps.len())));
    }
    let dims: Vec<(usize, usize)> = pyr.bands().iter().map(|b| b.dims()).collect();
    let trees = band_trees(dims.iter().copied())?;
    let mut decoders: Vec<TreeDecoder> = dims.iter().map(|d| TreeDecoder::new(&trees[d])).collect();
    let mut r = BitReader::new(&stream.payload, stream.bit_len);
    let mut stats = vec![];
    if let Some(top) = exps.iter().filter(|&&e| e != EMPTY_EXPONENT).max() {
        'passes: for e in (MIN_EXPONENT..=*top as i32).rev() {
            for (k, dec) in decoders.iter_mut().enumerate() {
                if exps[k] == EMPTY_EXPONENT || e > exps[k] as i32 {
                    stats.push(dormant(e, k, dims[k].0 * dims[k].1, r.position()));
                    continue;
                }
                let end = dec.read_pass(2f64.powi(e), &mut r, &mut stats)?;
                stats.last_mut().unwrap().band = Some(k);
                if end == PassEnd::Truncated {
                    break 'passes;
                }
            }
        }
    }
    for (band, dec) in pyr.bands_mut().into_iter().zip(&decoders) {
        band.as_mut_slice().copy_from_slice(&dec.reconstruction());
    }
    Ok(DecodedPyramid { pyramid: pyr, stats })
}

/// Transforms and codes each sub-band of a hexagonal map as its own tree.
pub fn encode_bbhex(map: &IndexMap, levels: usize, budget_bits: usize, bank: &FilterBank) -> Result<Encoded> {
    encode_bbhex_pyramid(&dhwt_forward(map, levels, bank)?, budget_bits)
}

pub fn decode_bbhex(stream: &CodeStream, budget_bits: usize, bank: &FilterBank) -> Result<IndexMap> {
    dhwt_inverse(&decode_bbhex_pyramid(&stream.truncated(budget_bits))?.pyramid, bank)
}

pub fn encode_ezw_pyramid(pyr: &Pyramid, budget_bits: usize) -> Result<Encoded> {
    let packed = pyr.to_mallat();
    let coding = CodingTree::mallat(packed.rows(), packed.cols(), pyr.levels)?;
    let e = threshold_exponent(packed.as_slice());
    let mut w = BitWriter::with_cap(budget_bits);
    let mut stats = vec![];
    encode_tree(&coding, packed.as_slice(), e, &mut w, &mut stats);
    Ok(finish(header(Scheme::Ezw, pyr, vec![e])?, w, stats))
}

pub fn decode_ezw_pyramid(stream: &CodeStream) -> Result<DecodedPyramid> {
    expect_scheme(stream, Scheme::Ezw)?;
    let levels = stream.levels as usize;
    let q = 1usize << levels;
    let (rows, cols) = (round_up(stream.orig_rows as usize, q), round_up(stream.orig_width as usize, q));
    if (rows, cols) != (stream.tree_rows as usize, stream.tree_cols as usize) {
        return Err(Error::format("header tree dims inconsistent with the image size"));
    }
    let coding = CodingTree::mallat(rows, cols, levels)?;
    let mut r = BitReader::new(&stream.payload, stream.bit_len);
    let mut stats = vec![];
    let data = decode_tree(&coding, stream.exponents[0], &mut r, &mut stats)?;
    let pyramid = Pyramid::from_mallat(
        &Grid::from_vec(rows, cols, data),
        levels,
        stream.orig_width as usize,
        stream.orig_rows as usize,
    )?;
    Ok(DecodedPyramid { pyramid, stats })
}

/// Transforms and codes a Cartesian image with the classic zerotree coder.
pub fn encode_ezw_cart(img: &Grid, levels: usize, budget_bits: usize, bank: &Db2Bank) -> Result<Encoded> {
    encode_ezw_pyramid(&dwt2_forward(img, levels, bank)?, budget_bits)
}

pub fn decode_ezw_cart(stream: &CodeStream, budget_bits: usize, bank: &Db2Bank) -> Result<Grid> {
    dwt2_inverse(&decode_ezw_pyramid(&stream.truncated(budget_bits))?.pyramid, bank)
}

/// Codes an already transformed pyramid with `scheme`.
pub fn encode_pyramid(scheme: Scheme, pyr: &Pyramid, budget_bits: usize) -> Result<Encoded> {
    match scheme {
        Scheme::SbHex => encode_sbhex_pyramid(pyr, budget_bits),
        Scheme::BbHex => encode_bbhex_pyramid(pyr, budget_bits),
        Scheme::Ezw => encode_ezw_pyramid(pyr, budget_bits),
    }
}

/// Recovers the coefficient pyramid of any stream.
pub fn decode_pyramid(stream: &CodeStream) -> Result<DecodedPyramid> {
    match stream.scheme {
        Scheme::SbHex => decode_sbhex_pyramid(stream),
        Scheme::BbHex => decode_bbhex_pyramid(stream),
        Scheme::Ezw => decode_ezw_pyramid(stream),
    }
}
