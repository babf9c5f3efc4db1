//! Hexagonal lattice geometry and the rectangular index map that stores it.
//!
//! A lattice site is addressed by an integer vector `k = (k1, k2)` and sits at
//! `h * V * k` where `V = [v1 v2]`, `v1 = (1, 0)` and `v2 = (-1/2, sqrt(3)/2)`.
//! The index map stores site `k` at row `k2`, column `k1`. Rows are shifted by
//! `floor(r / 2)` columns so that a rectangular patch of the plane becomes a
//! sheared parallelogram in the array, with zero-padded triangles on either
//! side.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// The generator of the hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeBasis {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
    pub h: f64,
}

impl LatticeBasis {
    pub fn new(h: f64) -> Self {
        LatticeBasis {
            v1: [1.0, 0.0],
            v2: [-0.5, SQRT3_2],
            h,
        }
    }

    pub fn det(&self) -> f64 {
        self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0]
    }

    pub fn point(&self, k: [i64; 2]) -> [f64; 2] {
        lattice_point(k, self.h)
    }
}

/// Position of lattice site `k = (k1, k2)` for sampling interval `h`.
#[inline]
pub fn lattice_point(k: [i64; 2], h: f64) -> [f64; 2] {
    let (k1, k2) = (k[0] as f64, k[1] as f64);
    [h * (k1 - 0.5 * k2), h * SQRT3_2 * k2]
}

/// `(drow, dcol)` offsets of the six nearest neighbours in the index map.
pub const HEX_OFFSETS: [(i64, i64); 6] = [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1)];

/// The six neighbours of `(r, c)`. No bounds clamping.
pub fn hex_neighbors(r: i64, c: i64) -> [(i64, i64); 6] {
    HEX_OFFSETS.map(|(dr, dc)| (r + dr, c + dc))
}

/// Columns of row `r` that hold image samples.
#[inline]
pub fn valid_columns(r: usize, width: usize) -> Range<usize> {
    let start = r / 2;
    start..start + width
}

/// Hexagonal raster stored as a sheared parallelogram inside a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    width: usize,
    data: Grid,
}

impl IndexMap {
    /// Zero-filled map for `rows` hexagonal rows of `width` samples each.
    pub fn new(width: usize, rows: usize) -> Result<Self> {
        if width == 0 || rows == 0 {
            return Err(Error::dims(format!("index map needs width, rows >= 1 (got {width}x{rows})")));
        }
        let cols = width + (rows - 1) / 2;
        Ok(IndexMap {
            width,
            data: Grid::zeros(rows, cols),
        })
    }

    /// Builds a map whose valid cells are `f(r, c)`.
    pub fn from_fn(width: usize, rows: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut map = Self::new(width, rows)?;
        for r in 0..rows {
            for c in valid_columns(r, width) {
                map.data[(r, c)] = f(r, c);
            }
        }
        Ok(map)
    }

    /// Takes the valid cells of `grid` (which must have at least the map's
    /// shape) and zeroes everything else.
    pub fn from_grid(width: usize, rows: usize, grid: &Grid) -> Result<Self> {
        let map = Self::new(width, rows)?;
        if grid.rows() < map.rows() || grid.cols() < map.cols() {
            return Err(Error::dims(format!(
                "grid {}x{} smaller than index map {}x{}",
                grid.rows(),
                grid.cols(),
                map.rows(),
                map.cols()
            )));
        }
        Self::from_fn(width, rows, |r, c| grid[(r, c)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn sample_count(&self) -> usize {
        self.width * self.rows()
    }

    #[inline]
    pub fn is_valid(&self, r: usize, c: usize) -> bool {
        r < self.rows() && valid_columns(r, self.width).contains(&c)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[(r, c)]
    }

    /// Writes a sample. Writes outside the parallelogram are ignored so the
    /// padded triangles stay zero.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        if self.is_valid(r, c) {
            self.data[(r, c)] = v;
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.data
    }

    /// Valid samples in row-major order.
    pub fn valid_samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows()).flat_map(move |r| valid_columns(r, self.width).map(move |c| self.data[(r, c)]))
    }

    /// Lattice vector of cell `(r, c)`.
    pub fn lattice_vector(r: usize, c: usize) -> [i64; 2] {
        [c as i64, r as i64]
    }

    pub fn max_abs_diff(&self, other: &IndexMap) -> f64 {
        self.data.max_abs_diff(&other.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(p: [f64; 2]) -> f64 {
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    #[test]
    fn basis_constants() {
        let b = LatticeBasis::new(1.0);
        assert_eq!(b.v1, [1.0, 0.0]);
        assert!((b.v2[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((b.det().abs() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_point_examples() {
        assert_eq!(lattice_point([0, 0], 1.0), [0.0, 0.0]);
        assert_eq!(lattice_point([1, 0], 1.0), [1.0, 0.0]);
        let p = lattice_point([0, 1], 1.0);
        assert_eq!(p[0], -0.5);
        assert!((p[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn index_map_shapes() {
        let m = IndexMap::new(2, 2).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        let m = IndexMap::new(4, 4).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 5));
        let m = IndexMap::new(256, 512).unwrap();
        assert_eq!((m.rows(), m.cols()), (512, 511));
        assert!(IndexMap::new(0, 3).is_err());
        assert!(IndexMap::new(3, 0).is_err());
    }

    #[test]
    fn index_map_4x4_matches_enumeration() {
        // The parallelogram spans exactly the columns used by the lattice
        // vectors of a 4-row, 4-wide rectangular patch.
        let mut max_c = 0;
        for r in 0..4 {
            for c in valid_columns(r, 4) {
                max_c = max_c.max(c);
            }
        }
        assert_eq!(max_c + 1, IndexMap::new(4, 4).unwrap().cols());
    }

    #[test]
    fn valid_column_examples() {
        assert_eq!(valid_columns(0, 256), 0..256);
        assert_eq!(valid_columns(5, 4), 2..6);
        assert_eq!(valid_columns(511, 256), 255..511);
    }

    #[test]
    fn neighbour_offsets_are_unit_length() {
        let n = hex_neighbors(0, 0);
        assert_eq!(n, [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1)]);
        for (dr, dc) in HEX_OFFSETS {
            let p = lattice_point([dc, dr], 1.0);
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        // Enumerating all small offsets recovers exactly the six above.
        let mut unit = vec![];
        for dr in -2..=2 {
            for dc in -2..=2 {
                if (norm(lattice_point([dc, dr], 1.0)) - 1.0).abs() < 1e-9 {
                    unit.push((dr, dc));
                }
            }
        }
        unit.sort();
        let mut expected = HEX_OFFSETS.to_vec();
        expected.sort();
        assert_eq!(unit, expected);
        assert!((norm(lattice_point([-1, 1], 1.0)) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rows_two_apart_are_vertical_translates() {
        let h = 0.7;
        for r in 2..20usize {
            for c in valid_columns(r, 8) {
                let a = lattice_point([c as i64, r as i64], h);
                let b = lattice_point([c as i64 - 1, r as i64 - 2], h);
                assert!((a[0] - b[0]).abs() < 1e-12);
                assert!((a[1] - b[1] - h * 3f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallelogram_cells_are_distinct_points() {
        let m = IndexMap::new(6, 7).unwrap();
        let mut pts = vec![];
        for r in 0..m.rows() {
            for c in valid_columns(r, m.width()) {
                pts.push(lattice_point(IndexMap::lattice_vector(r, c), 1.0));
            }
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!(norm([pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]]) > 0.5);
            }
        }
    }

    #[test]
    fn writes_outside_parallelogram_are_dropped() {
        let mut m = IndexMap::new(3, 5).unwrap();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                m.set(r, c, 7.0);
            }
        }
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let expect = if valid_columns(r, 3).contains(&c) { 7.0 } else { 0.0 };
                assert_eq!(m.get(r, c), expect);
            }
        }
        assert_eq!(m.valid_samples().count(), 15);
    }
}
