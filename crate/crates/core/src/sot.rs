//! Spatial-orientation trees for hexagonal coefficient arrays.
//!
//! The spiral tree places the coarse band at the centre of an `R x C` array
//! and each finer level in a concentric ring around it, so that parent-child
//! links become a dilation about the array centre: with centred coordinates
//! `y = r - R/2`, cell `y` has children `2y` and `2y + 1` along each axis.
//! All coordinates here are 0-based.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::wavelet::Pyramid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quadrant {
    Tl,
    Tr,
    Bl,
    Br,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::Tl, Quadrant::Tr, Quadrant::Bl, Quadrant::Br];

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::Tl => "tl",
            Quadrant::Tr => "tr",
            Quadrant::Bl => "bl",
            Quadrant::Br => "br",
        }
    }

    /// `(row, col)` block offsets of the quadrant, in units of one quadrant.
    pub fn offset(self) -> (usize, usize) {
        match self {
            Quadrant::Tl => (0, 0),
            Quadrant::Tr => (0, 1),
            Quadrant::Bl => (1, 0),
            Quadrant::Br => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotBand {
    Coarse,
    /// Detail band `band` (1..=3) at `level` (1 = finest).
    Detail { level: usize, band: usize },
}

/// One rectangular region of the spiral tree and the band quadrant it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub band: SlotBand,
    pub quadrant: Quadrant,
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    pub fn contains(&self, r: usize, c: usize) -> bool {
        (self.row0..self.row0 + self.rows).contains(&r) && (self.col0..self.col0 + self.cols).contains(&c)
    }
}

/// Ring positions on the 4x4 grid of a level, per quadrant: `(corner,
/// horizontal edge, vertical edge)` holding `D2`, `D1` and `D3`.
const RING: [(Quadrant, [(usize, usize); 3]); 4] = [
    (Quadrant::Tl, [(0, 0), (0, 1), (1, 0)]),
    (Quadrant::Tr, [(0, 3), (0, 2), (1, 3)]),
    (Quadrant::Bl, [(3, 0), (3, 1), (2, 0)]),
    (Quadrant::Br, [(3, 3), (3, 2), (2, 3)]),
];

/// Band number (1..=3) stored at each of the three ring positions above.
const RING_BANDS: [usize; 3] = [2, 1, 3];

fn check_tree_dims(rows: usize, cols: usize, levels: usize) -> Result<()> {
    let q = 1usize << (levels + 1);
    if levels == 0 || rows == 0 || cols == 0 || !rows.is_multiple_of(q) || !cols.is_multiple_of(q) {
        return Err(Error::dims(format!("{rows}x{cols} spiral tree needs dims divisible by 2^{}", levels + 1)));
    }
    Ok(())
}

/// Every region of the spiral layout for an `rows x cols` tree.
pub fn slot_table(rows: usize, cols: usize, levels: usize) -> Result<Vec<Slot>> {
    check_tree_dims(rows, cols, levels)?;
    let mut slots = Vec::with_capacity(4 + 12 * levels);
    for level in 1..=levels {
        let (br, bc) = (rows >> (level + 1), cols >> (level + 1));
        let (r_off, c_off) = ((rows - 4 * br) / 2, (cols - 4 * bc) / 2);
        for (quadrant, positions) in RING {
            for ((i, j), band) in positions.into_iter().zip(RING_BANDS) {
                slots.push(Slot {
                    band: SlotBand::Detail { level, band },
                    quadrant,
                    row0: r_off + i * br,
                    col0: c_off + j * bc,
                    rows: br,
                    cols: bc,
                });
            }
        }
    }
    let (br, bc) = (rows >> (levels + 1), cols >> (levels + 1));
    for quadrant in Quadrant::ALL {
        let (qi, qj) = quadrant.offset();
        slots.push(Slot {
            band: SlotBand::Coarse,
            quadrant,
            row0: rows / 2 - br + qi * br,
            col0: cols / 2 - bc + qj * bc,
            rows: br,
            cols: bc,
        });
    }
    Ok(slots)
}

/// Wavelet coefficients rearranged into the spiral layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralTree {
    pub levels: usize,
    pub data: Grid,
    pub orig_width: usize,
    pub orig_rows: usize,
}

impl SpiralTree {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }
}

fn band_of(pyr: &Pyramid, band: SlotBand) -> &Grid {
    match band {
        SlotBand::Coarse => &pyr.coarse,
        SlotBand::Detail { level, band } => pyr.detail(level, band - 1),
    }
}

pub fn spiral_map(pyr: &Pyramid) -> Result<SpiralTree> {
    let (rows, cols) = pyr.padded_dims();
    let slots = slot_table(rows, cols, pyr.levels)?;
    let mut data = Grid::zeros(rows, cols);
    for s in &slots {
        let (qi, qj) = s.quadrant.offset();
        let src = band_of(pyr, s.band);
        let block = src.block(qi * s.rows, qj * s.cols, s.rows, s.cols);
        data.put_block(s.row0, s.col0, &block);
    }
    Ok(SpiralTree {
        levels: pyr.levels,
        data,
        orig_width: pyr.orig_width,
        orig_rows: pyr.orig_rows,
    })
}

pub fn spiral_unmap(tree: &SpiralTree) -> Result<Pyramid> {
    let (rows, cols) = tree.data.dims();
    let slots = slot_table(rows, cols, tree.levels)?;
    let mut pyr = Pyramid::zeros(tree.levels, rows, cols, tree.orig_width, tree.orig_rows);
    for s in &slots {
        let (qi, qj) = s.quadrant.offset();
        let block = tree.data.block(s.row0, s.col0, s.rows, s.cols);
        let dst = match s.band {
            SlotBand::Coarse => &mut pyr.coarse,
            SlotBand::Detail { level, band } => pyr.detail_mut(level, band - 1),
        };
        dst.put_block(qi * s.rows, qj * s.cols, &block);
    }
    Ok(pyr)
}

/// Ring walk directions `(drow, dcol)`, clockwise on screen.
pub const SCAN_DIRECTIONS: [(i64, i64); 6] = [(1, 0), (0, -1), (-1, -1), (-1, 0), (0, 1), (1, 1)];

/// Centre-out hexagonal spiral visiting every cell of an `rows x cols` array
/// once. Cells outside the array are skipped.
pub fn hex_scan_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let total = rows * cols;
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let (sr, sc) = (rows.div_ceil(2) as i64 - 1, cols.div_ceil(2) as i64 - 1);
    let (ri, ci) = (rows as i64, cols as i64);
    let emit = |r: i64, c: i64, out: &mut Vec<(usize, usize)>| {
        if (0..ri).contains(&r) && (0..ci).contains(&c) {
            out.push((r as usize, c as usize));
        }
    };
    emit(sr, sc, &mut out);
    let mut m = 1i64;
    while out.len() < total {
        let (mut r, mut c) = (sr, sc + m);
        emit(r, c, &mut out);
        for (k, (dr, dc)) in SCAN_DIRECTIONS.iter().enumerate() {
            for step in 0..m {
                // The final step closes the ring on its start cell.
                if k == 5 && step == m - 1 {
                    break;
                }
                r += dr;
                c += dc;
                emit(r, c, &mut out);
            }
        }
        m += 1;
    }
    out
}

/// The four cells at the centre of the array; each roots one quadrant.
pub fn quadrant_roots(rows: usize, cols: usize) -> Result<[(usize, usize); 4]> {
    if rows < 2 || cols < 2 || !rows.is_multiple_of(2) || !cols.is_multiple_of(2) {
        return Err(Error::dims(format!("quadrant roots need even dims, got {rows}x{cols}")));
    }
    let (r, c) = (rows / 2, cols / 2);
    Ok([(r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)])
}

fn is_root(r: usize, c: usize, rows: usize, cols: usize) -> bool {
    (rows / 2 - 1..=rows / 2).contains(&r) && (cols / 2 - 1..=cols / 2).contains(&c)
}

/// Dilation children of a cell, restricted to the array. Leaves return an
/// empty list.
pub fn children_of(r: usize, c: usize, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    quadrant_roots(rows, cols)?;
    if r >= rows || c >= cols {
        return Err(Error::dims(format!("({r}, {c}) outside {rows}x{cols}")));
    }
    if is_root(r, c, rows, cols) {
        return Err(Error::QuadrantRoot(r, c));
    }
    Ok(dilation_children(r, c, rows, cols).collect())
}

/// Children under the dilation rule without the root check.
pub(crate) fn dilation_children(r: usize, c: usize, rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    let r0 = 2 * r as i64 - (rows / 2) as i64;
    let c0 = 2 * c as i64 - (cols / 2) as i64;
    [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().filter_map(move |(dr, dc)| {
        let (cr, cc) = (r0 + dr, c0 + dc);
        if (0..rows as i64).contains(&cr) && (0..cols as i64).contains(&cc) && (cr, cc) != (r as i64, c as i64) {
            Some((cr as usize, cc as usize))
        } else {
            None
        }
    })
}

/// Every cell of a root's quadrant except the root.
pub fn root_descendants(root: (usize, usize), rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    let roots = quadrant_roots(rows, cols)?;
    let q = roots
        .iter()
        .position(|&x| x == root)
        .ok_or(Error::NotARoot(root.0, root.1))?;
    let (qi, qj) = Quadrant::ALL[q].offset();
    let (h, w) = (rows / 2, cols / 2);
    let mut out = Vec::with_capacity(h * w - 1);
    for r in qi * h..(qi + 1) * h {
        for c in qj * w..(qj + 1) * w {
            if (r, c) != root {
                out.push((r, c));
            }
        }
    }
    Ok(out)
}

/// Children of any cell, roots included: a root's children are its
/// dilation block minus itself.
pub fn tree_children(r: usize, c: usize, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    dilation_children(r, c, rows, cols).collect()
}
