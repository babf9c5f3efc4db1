//! Coefficient forests with a fixed scan order, the shape every coder walks.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sot::{hex_scan_order, quadrant_roots, tree_children};

/// A forest over the cells of a `rows x cols` array, stored as flat child
/// lists, plus the order in which a dominant pass visits cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingTree {
    rows: usize,
    cols: usize,
    scan: Vec<u32>,
    child_start: Vec<u32>,
    child_list: Vec<u32>,
    /// Every cell, parents before children.
    topo: Vec<u32>,
}

impl CodingTree {
    /// Builds a tree from a child function. Fails unless every cell has at
    /// most one parent and is reachable from a parentless cell.
    pub fn from_children(
        rows: usize,
        cols: usize,
        scan: Vec<(usize, usize)>,
        mut children: impl FnMut(usize, usize) -> Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = rows * cols;
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::dims(format!("cannot build a coding tree over {rows}x{cols}")));
        }
        if scan.len() != n {
            return Err(Error::dims("scan order does not cover the array"));
        }
        let mut child_start = Vec::with_capacity(n + 1);
        let mut child_list = Vec::with_capacity(n);
        let mut parents = vec![0u8; n];
        child_start.push(0);
        for r in 0..rows {
            for c in 0..cols {
                for (cr, cc) in children(r, c) {
                    let k = cr * cols + cc;
                    parents[k] = parents[k].saturating_add(1);
                    child_list.push(k as u32);
                }
                child_start.push(child_list.len() as u32);
            }
        }
        if parents.iter().any(|&p| p > 1) {
            return Err(Error::dims("child relation is not a forest"));
        }
        let mut topo = Vec::with_capacity(n);
        let mut queue: VecDeque<u32> = (0..n as u32).filter(|&i| parents[i as usize] == 0).collect();
        while let Some(i) = queue.pop_front() {
            topo.push(i);
            let (a, b) = (child_start[i as usize] as usize, child_start[i as usize + 1] as usize);
            queue.extend(&child_list[a..b]);
        }
        if topo.len() != n {
            return Err(Error::dims("child relation has a cycle"));
        }
        let scan = scan.into_iter().map(|(r, c)| (r * cols + c) as u32).collect();
        Ok(CodingTree {
            rows,
            cols,
            scan,
            child_start,
            child_list,
            topo,
        })
    }

    /// Spiral dilation tree scanned centre-out along the hexagonal spiral.
    pub fn dilation(rows: usize, cols: usize) -> Result<Self> {
        quadrant_roots(rows, cols)?;
        Self::from_children(rows, cols, hex_scan_order(rows, cols), |r, c| tree_children(r, c, rows, cols))
    }

    /// Classic zerotree over a nested-quadrant pyramid layout, scanned in
    /// Morton order.
    pub fn mallat(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        let s = 1 << levels;
        if levels == 0 || !rows.is_multiple_of(s) || !cols.is_multiple_of(s) {
            return Err(Error::dims(format!("{rows}x{cols} cannot hold {levels} levels")));
        }
        let (h0, w0) = (rows >> levels, cols >> levels);
        Self::from_children(rows, cols, morton_order(rows, cols), |r, c| mallat_children(r, c, rows, cols, h0, w0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scan(&self) -> &[u32] {
        &self.scan
    }

    pub fn topo(&self) -> &[u32] {
        &self.topo
    }

    #[inline]
    pub fn children(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.child_list[self.child_start[i] as usize..self.child_start[i + 1] as usize]
    }

    /// All descendants of `i` (not including `i`).
    pub fn descendants(&self, i: u32) -> Vec<u32> {
        let mut out = vec![];
        let mut stack = self.children(i).to_vec();
        while let Some(j) = stack.pop() {
            out.push(j);
            stack.extend_from_slice(self.children(j));
        }
        out
    }
}

/// Zerotree children in the nested-quadrant layout with an `h0 x w0` coarse
/// band.
pub fn mallat_children(r: usize, c: usize, rows: usize, cols: usize, h0: usize, w0: usize) -> Vec<(usize, usize)> {
    if r < h0 && c < w0 {
        return vec![(r, c + w0), (r + h0, c), (r + h0, c + w0)];
    }
    if 2 * r >= rows || 2 * c >= cols {
        return vec![];
    }
    vec![(2 * r, 2 * c), (2 * r, 2 * c + 1), (2 * r + 1, 2 * c), (2 * r + 1, 2 * c + 1)]
}

/// Z-order over the array; cells outside are skipped.
pub fn morton_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let side = rows.max(cols).next_power_of_two();
    let mut out = Vec::with_capacity(rows * cols);
    for z in 0..side * side {
        let (r, c) = (compact_bits(z >> 1), compact_bits(z));
        if r < rows && c < cols {
            out.push((r, c));
        }
    }
    out
}

/// Gathers the even-position bits of `x`.
fn compact_bits(x: usize) -> usize {
    let mut out = 0;
    let mut bit = 0;
    let mut x = x;
    while x != 0 {
        out |= (x & 1) << bit;
        x >>= 2;
        bit += 1;
    }
    out
}
