//! Multilevel wavelet transforms: the non-separable hexagonal transform on
//! index maps and the separable Daubechies-4 baseline on Cartesian rasters.
//!
//! Both transforms are periodic. Hexagonal maps are zero padded on the right
//! and bottom to multiples of `2^(L+1)` so that every level, including the
//! coarse band, has even dimensions.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::IndexMap;

pub const FILTER_SIZE: usize = 7;
const ORIGIN: i64 = 3;
/// Periodization margin; one full filter diameter.
pub const MARGIN: usize = 7;
pub const DEFAULT_LEVELS: usize = 6;
pub const FILTER_ENV: &str = "HEXZ_FILTER_FILE";

const BUILTIN_BANK: &str = include_str!("../filters/dhwt_second_order.txt");

/// Four analysis and four synthesis filters stored as 7x7 index maps. Entry
/// `(row, col)` is the tap at lattice offset `k = (col - 3, row - 3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub analysis: [Grid; 4],
    pub synthesis: [Grid; 4],
}

impl FilterBank {
    /// The bank shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_BANK).expect("builtin filter bank is well formed")
    }

    /// The bank named by `HEXZ_FILTER_FILE`, or the builtin one.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(FILTER_ENV) {
            Some(path) => Self::from_file(path),
            None => Ok(Self::builtin()),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses eight whitespace-separated 7x7 blocks; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(8 * 49);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::format(format!("bad filter tap {tok:?}")))?;
                if !v.is_finite() {
                    return Err(Error::format(format!("non-finite filter tap {tok:?}")));
                }
                values.push(v);
            }
        }
        if values.len() != 8 * 49 {
            return Err(Error::format(format!("filter file holds {} taps, expected 392", values.len())));
        }
        let block = |i: usize| Grid::from_vec(FILTER_SIZE, FILTER_SIZE, values[i * 49..(i + 1) * 49].to_vec());
        Ok(FilterBank {
            analysis: [block(0), block(1), block(2), block(3)],
            synthesis: [block(4), block(5), block(6), block(7)],
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, f) in ["analysis", "synthesis"]
            .iter()
            .flat_map(|n| (0..4).map(move |i| (n, i)))
            .zip(self.analysis.iter().chain(self.synthesis.iter()))
        {
            s.push_str(&format!("# {} {}\n", name.0, name.1));
            for r in 0..FILTER_SIZE {
                let row: Vec<String> = f.row(r).iter().map(|v| format!("{v:>8}")).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }
}

/// Rotates a 7x7 index-map filter by 2*pi/3 about its origin. The lattice map
/// is `k -> (-k2, k1 - k2)`. Taps that would leave the 7x7 support make the
/// rotation unrepresentable.
pub fn rotate_filter(f: &Grid) -> Option<Grid> {
    let mut out = Grid::zeros(FILTER_SIZE, FILTER_SIZE);
    for (dr, dc, v) in taps(f) {
        let (k1, k2) = (dc, dr);
        let (n1, n2) = (-k2, k1 - k2);
        if n1.abs() > ORIGIN || n2.abs() > ORIGIN {
            return None;
        }
        out[((n2 + ORIGIN) as usize, (n1 + ORIGIN) as usize)] = v;
    }
    Some(out)
}

/// Non-zero taps as `(drow, dcol, value)` offsets from the origin.
fn taps(f: &Grid) -> Vec<(i64, i64, f64)> {
    let mut out = vec![];
    for r in 0..f.rows() {
        for c in 0..f.cols() {
            let v = f[(r, c)];
            if v != 0.0 {
                out.push((r as i64 - ORIGIN, c as i64 - ORIGIN, v));
            }
        }
    }
    out
}

/// Periodic extension by `margin` cells on every side. An odd-length axis is
/// first made even by repeating its last sample.
pub fn periodize(src: &Grid, margin: usize) -> Grid {
    let (rows, cols) = src.dims();
    let er = rows + rows % 2;
    let ec = cols + cols % 2;
    let m = margin as i64;
    Grid::from_fn(er + 2 * margin, ec + 2 * margin, |r, c| {
        let rr = (r as i64 - m).rem_euclid(er as i64) as usize;
        let cc = (c as i64 - m).rem_euclid(ec as i64) as usize;
        src[(rr.min(rows - 1), cc.min(cols - 1))]
    })
}

/// One-dimensional periodize, mainly for documentation and tests.
pub fn periodize_1d(x: &[f64], margin: usize) -> Vec<f64> {
    let g = periodize(&Grid::from_vec(1, x.len(), x.to_vec()), margin);
    g.row(margin).to_vec()
}

/// Coefficient pyramid. `details[0]` is the finest level; each entry holds
/// the three detail bands of that level.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub levels: usize,
    pub coarse: Grid,
    pub details: Vec<[Grid; 3]>,
    /// Hexagonal: samples per row. Cartesian: image width.
    pub orig_width: usize,
    /// Hexagonal: hexagonal rows. Cartesian: image height.
    pub orig_rows: usize,
}

impl Pyramid {
    /// All-zero pyramid over a `rows x cols` padded array.
    pub fn zeros(levels: usize, rows: usize, cols: usize, orig_width: usize, orig_rows: usize) -> Pyramid {
        Pyramid {
            levels,
            coarse: Grid::zeros(rows >> levels, cols >> levels),
            details: (1..=levels)
                .map(|l| {
                    let (h, w) = (rows >> l, cols >> l);
                    [Grid::zeros(h, w), Grid::zeros(h, w), Grid::zeros(h, w)]
                })
                .collect(),
            orig_width,
            orig_rows,
        }
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        let s = 1 << self.levels;
        (self.coarse.rows() * s, self.coarse.cols() * s)
    }

    /// Detail band `band` (0..3) at `level` (1 = finest).
    pub fn detail(&self, level: usize, band: usize) -> &Grid {
        &self.details[level - 1][band]
    }

    pub fn detail_mut(&mut self, level: usize, band: usize) -> &mut Grid {
        &mut self.details[level - 1][band]
    }

    pub fn coefficient_count(&self) -> usize {
        let (r, c) = self.padded_dims();
        r * c
    }

    pub fn zeros_like(&self) -> Pyramid {
        Pyramid {
            levels: self.levels,
            coarse: Grid::zeros(self.coarse.rows(), self.coarse.cols()),
            details: self
                .details
                .iter()
                .map(|l| l.clone().map(|g| Grid::zeros(g.rows(), g.cols())))
                .collect(),
            orig_width: self.orig_width,
            orig_rows: self.orig_rows,
        }
    }

    /// All bands in coarse-to-fine order: coarse, then `D1..D3` of each level
    /// from `L` down to 1.
    pub fn bands(&self) -> Vec<&Grid> {
        let mut out = vec![&self.coarse];
        for l in (1..=self.levels).rev() {
            out.extend(self.details[l - 1].iter());
        }
        out
    }

    pub fn bands_mut(&mut self) -> Vec<&mut Grid> {
        let mut out = vec![&mut self.coarse];
        for lvl in self.details.iter_mut().rev() {
            out.extend(lvl.iter_mut());
        }
        out
    }

    /// Packs the pyramid into one array in the usual nested-quadrant layout:
    /// coarse top-left, then `D1` top-right, `D2` bottom-left, `D3`
    /// bottom-right at each level.
    pub fn to_mallat(&self) -> Grid {
        let (rows, cols) = self.padded_dims();
        let mut out = Grid::zeros(rows, cols);
        out.put_block(0, 0, &self.coarse);
        for l in 1..=self.levels {
            let [d1, d2, d3] = &self.details[l - 1];
            let (h, w) = d1.dims();
            out.put_block(0, w, d1);
            out.put_block(h, 0, d2);
            out.put_block(h, w, d3);
        }
        out
    }

    pub fn from_mallat(packed: &Grid, levels: usize, orig_width: usize, orig_rows: usize) -> Result<Pyramid> {
        let (rows, cols) = packed.dims();
        let s = 1 << levels;
        if levels == 0 || rows % s != 0 || cols % s != 0 {
            return Err(Error::dims(format!("{rows}x{cols} array cannot hold {levels} levels")));
        }
        let mut details = Vec::with_capacity(levels);
        for l in 1..=levels {
            let (h, w) = (rows >> l, cols >> l);
            details.push([packed.block(0, w, h, w), packed.block(h, 0, h, w), packed.block(h, w, h, w)]);
        }
        Ok(Pyramid {
            levels,
            coarse: packed.block(0, 0, rows >> levels, cols >> levels),
            details,
            orig_width,
            orig_rows,
        })
    }
}

/// Rounds `n` up to a multiple of `m`.
pub fn round_up(n: usize, m: usize) -> usize {
    n.div_ceil(m) * m
}

fn check_levels(levels: usize, rows: usize, cols: usize) -> Result<()> {
    if levels == 0 || levels > 16 || (1usize << levels) > rows.min(cols) {
        return Err(Error::TooManyLevels { levels, rows, cols });
    }
    Ok(())
}

/// One analysis level: periodize, filter with every analysis filter, keep
/// even samples.
pub fn analysis_step(f: &Grid, bank: &FilterBank) -> [Grid; 4] {
    let (rows, cols) = f.dims();
    debug_assert!(rows % 2 == 0 && cols % 2 == 0);
    let p = periodize(f, MARGIN);
    let m = MARGIN as i64;
    bank.analysis.clone().map(|filter| {
        let t = taps(&filter);
        Grid::from_fn(rows / 2, cols / 2, |i, j| {
            let (r0, c0) = (2 * i as i64 + m, 2 * j as i64 + m);
            t.iter()
                .map(|&(dr, dc, v)| v * p[((r0 - dr) as usize, (c0 - dc) as usize)])
                .sum()
        })
    })
}

/// One synthesis level: upsample each band, periodize, filter with the
/// matching synthesis filter and sum.
pub fn synthesis_step(bands: [&Grid; 4], bank: &FilterBank) -> Grid {
    let (h, w) = bands[0].dims();
    let (rows, cols) = (2 * h, 2 * w);
    let m = MARGIN as i64;
    let mut out = Grid::zeros(rows, cols);
    for (band, filter) in bands.iter().zip(bank.synthesis.iter()) {
        let mut up = Grid::zeros(rows, cols);
        for i in 0..h {
            for j in 0..w {
                up[(2 * i, 2 * j)] = band[(i, j)];
            }
        }
        let p = periodize(&up, MARGIN);
        let t = taps(filter);
        for r in 0..rows {
            for c in 0..cols {
                let (r0, c0) = (r as i64 + m, c as i64 + m);
                let mut acc = 0.0;
                for &(dr, dc, v) in &t {
                    acc += v * p[((r0 - dr) as usize, (c0 - dc) as usize)];
                }
                out[(r, c)] += acc;
            }
        }
    }
    out
}

/// Forward hexagonal transform to `levels` levels.
pub fn dhwt_forward(map: &IndexMap, levels: usize, bank: &FilterBank) -> Result<Pyramid> {
    check_levels(levels, map.rows(), map.cols())?;
    let q = 1 << (levels + 1);
    let mut f = map.grid().padded(round_up(map.rows(), q), round_up(map.cols(), q));
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let [c, d1, d2, d3] = analysis_step(&f, bank);
        details.push([d1, d2, d3]);
        f = c;
    }
    Ok(Pyramid {
        levels,
        coarse: f,
        details,
        orig_width: map.width(),
        orig_rows: map.rows(),
    })
}

fn check_pyramid(pyr: &Pyramid) -> Result<()> {
    if pyr.levels == 0 || pyr.details.len() != pyr.levels {
        return Err(Error::dims(format!("pyramid declares {} levels, holds {}", pyr.levels, pyr.details.len())));
    }
    let mut dims = pyr.coarse.dims();
    for l in (1..=pyr.levels).rev() {
        for band in &pyr.details[l - 1] {
            if band.dims() != dims {
                return Err(Error::dims(format!("level {l} band is {:?}, expected {dims:?}", band.dims())));
            }
        }
        dims = (dims.0 * 2, dims.1 * 2);
    }
    Ok(())
}

/// Inverse hexagonal transform; crops the padding and zeroes the triangles.
pub fn dhwt_inverse(pyr: &Pyramid, bank: &FilterBank) -> Result<IndexMap> {
    check_pyramid(pyr)?;
    let mut map = IndexMap::new(pyr.orig_width, pyr.orig_rows)?;
    let (pr, pc) = pyr.padded_dims();
    if pr < map.rows() || pc < map.cols() {
        return Err(Error::dims("pyramid smaller than its source map"));
    }
    let mut f = pyr.coarse.clone();
    for l in (1..=pyr.levels).rev() {
        let [d1, d2, d3] = &pyr.details[l - 1];
        f = synthesis_step([&f, d1, d2, d3], bank);
    }
    map = IndexMap::from_grid(map.width(), map.rows(), &f)?;
    Ok(map)
}

/// Orthonormal Daubechies filters with four taps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Db2Bank {
    pub analysis_lo: [f64; 4],
    pub analysis_hi: [f64; 4],
    pub synthesis_lo: [f64; 4],
    pub synthesis_hi: [f64; 4],
}

impl Db2Bank {
    pub fn new() -> Self {
        let s3 = 3f64.sqrt();
        let d = 4.0 * 2f64.sqrt();
        let h = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        let g = [h[3], -h[2], h[1], -h[0]];
        Db2Bank {
            analysis_lo: h,
            analysis_hi: g,
            synthesis_lo: h,
            synthesis_hi: g,
        }
    }
}

impl Default for Db2Bank {
    fn default() -> Self {
        Self::new()
    }
}

fn dwt1_forward(x: &[f64], lo: &[f64; 4], hi: &[f64; 4], a: &mut [f64], d: &mut [f64]) {
    let n = x.len();
    for m in 0..n / 2 {
        let (mut sa, mut sd) = (0.0, 0.0);
        for k in 0..4 {
            let v = x[(2 * m + k) % n];
            sa += lo[k] * v;
            sd += hi[k] * v;
        }
        a[m] = sa;
        d[m] = sd;
    }
}

fn dwt1_inverse(a: &[f64], d: &[f64], lo: &[f64; 4], hi: &[f64; 4], x: &mut [f64]) {
    let n = 2 * a.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    for m in 0..a.len() {
        for k in 0..4 {
            x[(2 * m + k) % n] += lo[k] * a[m] + hi[k] * d[m];
        }
    }
}

/// Applies `f` to every row (`axis = 1`) or column (`axis = 0`) of `g`.
fn along_axis(g: &mut Grid, axis: usize, mut f: impl FnMut(&[f64], &mut [f64])) {
    let (rows, cols) = g.dims();
    if axis == 1 {
        let mut out = vec![0.0; cols];
        for r in 0..rows {
            f(g.row(r), &mut out);
            g.row_mut(r).copy_from_slice(&out);
        }
    } else {
        let mut col = vec![0.0; rows];
        let mut out = vec![0.0; rows];
        for c in 0..cols {
            for r in 0..rows {
                col[r] = g[(r, c)];
            }
            f(&col, &mut out);
            for r in 0..rows {
                g[(r, c)] = out[r];
            }
        }
    }
}

/// Forward separable transform. Each axis is zero padded to a multiple of
/// `2^levels`. Bands per level: `D1` horizontal high-pass, `D2` vertical
/// high-pass, `D3` both.
pub fn dwt2_forward(img: &Grid, levels: usize, bank: &Db2Bank) -> Result<Pyramid> {
    check_levels(levels, img.rows(), img.cols())?;
    let q = 1 << levels;
    let mut f = img.padded(round_up(img.rows(), q), round_up(img.cols(), q));
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (rows, cols) = f.dims();
        let (h, w) = (rows / 2, cols / 2);
        let split = |x: &[f64], out: &mut [f64]| {
            let half = x.len() / 2;
            let (a, d) = out.split_at_mut(half);
            dwt1_forward(x, &bank.analysis_lo, &bank.analysis_hi, a, d);
        };
        along_axis(&mut f, 1, split);
        along_axis(&mut f, 0, split);
        details.push([f.block(0, w, h, w), f.block(h, 0, h, w), f.block(h, w, h, w)]);
        f = f.block(0, 0, h, w);
    }
    Ok(Pyramid {
        levels,
        coarse: f,
        details,
        orig_width: img.cols(),
        orig_rows: img.rows(),
    })
}

pub fn dwt2_inverse(pyr: &Pyramid, bank: &Db2Bank) -> Result<Grid> {
    check_pyramid(pyr)?;
    let mut f = pyr.coarse.clone();
    for l in (1..=pyr.levels).rev() {
        let [d1, d2, d3] = &pyr.details[l - 1];
        let (h, w) = f.dims();
        let mut g = Grid::zeros(2 * h, 2 * w);
        g.put_block(0, 0, &f);
        g.put_block(0, w, d1);
        g.put_block(h, 0, d2);
        g.put_block(h, w, d3);
        let merge = |x: &[f64], out: &mut [f64]| {
            let half = x.len() / 2;
            dwt1_inverse(&x[..half], &x[half..], &bank.synthesis_lo, &bank.synthesis_hi, out);
        };
        along_axis(&mut g, 0, merge);
        along_axis(&mut g, 1, merge);
        f = g;
    }
    if f.rows() < pyr.orig_rows || f.cols() < pyr.orig_width {
        return Err(Error::dims("pyramid smaller than its source image"));
    }
    Ok(f.block(0, 0, pyr.orig_rows, pyr.orig_width))
}
