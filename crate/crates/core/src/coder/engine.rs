//! Dominant and refinement passes over one coding tree.
//!
//! Encoder and decoder keep identical state: which cells are significant,
//! the subordinate list in discovery order, and the per-pass zero-tree flags.
//! A pass on the wire is the dominant symbols with any trailing run of `T`
//! removed, then `SEP`, then one refinement bit per subordinate entry.

use super::bits::{BitReader, BitWriter};
use super::symbol::{read_symbol, write_symbol, Symbol};
use super::tree::CodingTree;
use crate::error::{Error, Result};

/// Exponent of the last pass threshold (`T = 1/2`). Stopping here bounds the
/// error of every real-valued coefficient by one half.
pub const MIN_EXPONENT: i32 = -1;

/// Header marker for a tree with no non-zero coefficient.
pub const EMPTY_EXPONENT: i8 = i8::MIN;

/// `floor(log2(max |c|))`, or [`EMPTY_EXPONENT`] for an all-zero input.
pub fn threshold_exponent(coeffs: &[f64]) -> i8 {
    let m = coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    if m == 0.0 || !m.is_finite() {
        return EMPTY_EXPONENT;
    }
    let mut e = m.log2().floor() as i32;
    while 2f64.powi(e) > m {
        e -= 1;
    }
    while 2f64.powi(e + 1) <= m {
        e += 1;
    }
    e.clamp(i8::MIN as i32 + 1, i8::MAX as i32) as i8
}

/// `2^floor(log2(max |c|))`; `None` for an all-zero input.
pub fn initial_threshold(coeffs: &[f64]) -> Option<f64> {
    match threshold_exponent(coeffs) {
        EMPTY_EXPONENT => None,
        e => Some(2f64.powi(e as i32)),
    }
}

/// Counts for one dominant pass (one band of one pass for per-band coders).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PassStats {
    pub threshold: f64,
    /// Band index for per-band coders.
    pub band: Option<usize>,
    pub p: usize,
    pub n: usize,
    pub z: usize,
    /// `T` symbols actually written, after the trailing strip.
    pub t: usize,
    /// Cells covered by zero-trees: roots plus every flagged descendant that
    /// was not already significant.
    pub zerotree_cells: usize,
    pub refinement_bits: usize,
    /// Payload length when the pass finished.
    pub end_bit: usize,
}

impl PassStats {
    pub fn dominant_symbols(&self) -> usize {
        self.p + self.n + self.z + self.t
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cell: u32,
    negative: bool,
    low: f64,
    width: f64,
}

#[derive(Debug, Clone)]
struct State {
    significant: Vec<bool>,
    zerotree: Vec<bool>,
    subordinate: Vec<Entry>,
}

impl State {
    fn new(n: usize) -> Self {
        State {
            significant: vec![false; n],
            zerotree: vec![false; n],
            subordinate: vec![],
        }
    }

    fn insignificant_count(&self) -> usize {
        self.significant.iter().filter(|&&s| !s).count()
    }

    fn discover(&mut self, cell: u32, negative: bool, t: f64) {
        self.significant[cell as usize] = true;
        self.subordinate.push(Entry {
            cell,
            negative,
            low: t,
            width: t,
        });
    }

    /// Flags every descendant of `root`. Flagged subtrees are always whole, so
    /// an already flagged child needs no further descent.
    fn flag_subtree(&mut self, tree: &CodingTree, root: u32) {
        let mut stack: Vec<u32> = tree.children(root).to_vec();
        while let Some(j) = stack.pop() {
            if self.zerotree[j as usize] {
                continue;
            }
            self.zerotree[j as usize] = true;
            stack.extend_from_slice(tree.children(j));
        }
    }
}

/// Encoder for one tree of coefficients.
pub struct TreeEncoder<'a> {
    tree: &'a CodingTree,
    coeffs: &'a [f64],
    state: State,
    subtree_max: Vec<f64>,
}

impl<'a> TreeEncoder<'a> {
    pub fn new(tree: &'a CodingTree, coeffs: &'a [f64]) -> Self {
        assert_eq!(tree.len(), coeffs.len(), "coefficient count must match the tree");
        TreeEncoder {
            tree,
            coeffs,
            state: State::new(coeffs.len()),
            subtree_max: vec![0.0; coeffs.len()],
        }
    }

    /// Largest magnitude among descendants that are not yet significant.
    fn update_subtree_max(&mut self) {
        for &i in self.tree.topo().iter().rev() {
            let mut m = 0.0f64;
            for &j in self.tree.children(i) {
                let own = if self.state.significant[j as usize] {
                    0.0
                } else {
                    self.coeffs[j as usize].abs()
                };
                m = m.max(own).max(self.subtree_max[j as usize]);
            }
            self.subtree_max[i as usize] = m;
        }
    }

    /// Dominant pass at threshold `t`, with trailing `T`s already removed.
    pub fn dominant_pass(&mut self, t: f64) -> (Vec<Symbol>, PassStats) {
        self.update_subtree_max();
        let mut stats = PassStats {
            threshold: t,
            ..Default::default()
        };
        let open = self.state.insignificant_count();
        self.state.zerotree.iter_mut().for_each(|f| *f = false);
        let mut symbols = Vec::new();
        for &i in self.tree.scan() {
            let k = i as usize;
            if self.state.zerotree[k] || self.state.significant[k] {
                continue;
            }
            let c = self.coeffs[k];
            let s = if c.abs() >= t {
                self.state.discover(i, c < 0.0, t);
                if c < 0.0 {
                    Symbol::N
                } else {
                    Symbol::P
                }
            } else if self.subtree_max[k] < t {
                self.state.flag_subtree(self.tree, i);
                Symbol::T
            } else {
                Symbol::Z
            };
            symbols.push(s);
        }
        while symbols.last() == Some(&Symbol::T) {
            symbols.pop();
        }
        for s in &symbols {
            match s {
                Symbol::P => stats.p += 1,
                Symbol::N => stats.n += 1,
                Symbol::Z => stats.z += 1,
                Symbol::T => stats.t += 1,
                Symbol::Sep => {}
            }
        }
        stats.zerotree_cells = open - stats.p - stats.n - stats.z;
        (symbols, stats)
    }

    /// One refinement bit per subordinate entry, in discovery order.
    pub fn refinement_pass(&mut self) -> Vec<bool> {
        let coeffs = self.coeffs;
        self.state
            .subordinate
            .iter_mut()
            .map(|e| {
                let a = coeffs[e.cell as usize].abs();
                e.width /= 2.0;
                let bit = a - e.low >= e.width;
                if bit {
                    e.low += e.width;
                }
                bit
            })
            .collect()
    }

    /// Runs a full pass and writes it. Returns false once the writer is full.
    pub fn write_pass(&mut self, t: f64, w: &mut BitWriter, stats: &mut Vec<PassStats>) -> bool {
        let (symbols, mut st) = self.dominant_pass(t);
        let mut ok = symbols.iter().all(|&s| write_symbol(w, s)) && write_symbol(w, Symbol::Sep);
        if ok {
            let bits = self.refinement_pass();
            st.refinement_bits = bits.len();
            ok = bits.into_iter().all(|b| w.push(b));
        }
        st.end_bit = w.len();
        stats.push(st);
        ok
    }
}

/// Outcome of reading one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassEnd {
    Complete,
    /// The payload ran out; everything after is implicitly absent.
    Truncated,
}

/// Decoder for one tree; mirrors [`TreeEncoder`].
pub struct TreeDecoder<'a> {
    tree: &'a CodingTree,
    state: State,
}

impl<'a> TreeDecoder<'a> {
    pub fn new(tree: &'a CodingTree) -> Self {
        TreeDecoder {
            tree,
            state: State::new(tree.len()),
        }
    }

    pub fn read_pass(&mut self, t: f64, r: &mut BitReader<'_>, stats: &mut Vec<PassStats>) -> Result<PassEnd> {
        let mut st = PassStats {
            threshold: t,
            ..Default::default()
        };
        let open = self.state.insignificant_count();
        self.state.zerotree.iter_mut().for_each(|f| *f = false);
        let mut sep_seen = false;
        let mut end = PassEnd::Complete;
        for &i in self.tree.scan() {
            let k = i as usize;
            if self.state.zerotree[k] || self.state.significant[k] {
                continue;
            }
            match read_symbol(r) {
                None => {
                    end = PassEnd::Truncated;
                    break;
                }
                Some(Symbol::Sep) => {
                    sep_seen = true;
                    break;
                }
                Some(Symbol::P) => {
                    st.p += 1;
                    self.state.discover(i, false, t);
                }
                Some(Symbol::N) => {
                    st.n += 1;
                    self.state.discover(i, true, t);
                }
                Some(Symbol::Z) => st.z += 1,
                Some(Symbol::T) => {
                    st.t += 1;
                    self.state.flag_subtree(self.tree, i);
                }
            }
        }
        if end == PassEnd::Complete && !sep_seen {
            match read_symbol(r) {
                None => end = PassEnd::Truncated,
                Some(Symbol::Sep) => {}
                Some(s) => return Err(Error::format(format!("expected end of pass, found {s:?}"))),
            }
        }
        st.zerotree_cells = open - st.p - st.n - st.z;
        if end == PassEnd::Complete {
            for e in self.state.subordinate.iter_mut() {
                let Some(bit) = r.read() else {
                    end = PassEnd::Truncated;
                    break;
                };
                e.width /= 2.0;
                if bit {
                    e.low += e.width;
                }
                st.refinement_bits += 1;
            }
        }
        st.end_bit = r.position();
        stats.push(st);
        Ok(end)
    }

    /// Reconstructed coefficients: significant cells at the midpoint of their
    /// uncertainty interval, everything else zero.
    pub fn reconstruction(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.tree.len()];
        for e in &self.state.subordinate {
            let v = e.low + e.width / 2.0;
            out[e.cell as usize] = if e.negative { -v } else { v };
        }
        out
    }
}

/// Encodes one tree with passes from `2^exponent` down to `2^MIN_EXPONENT`.
pub fn encode_tree(tree: &CodingTree, coeffs: &[f64], exponent: i8, w: &mut BitWriter, stats: &mut Vec<PassStats>) {
    if exponent == EMPTY_EXPONENT {
        return;
    }
    let mut enc = TreeEncoder::new(tree, coeffs);
    for e in (MIN_EXPONENT..=exponent as i32).rev() {
        if !enc.write_pass(2f64.powi(e), w, stats) {
            break;
        }
    }
}

pub fn decode_tree(tree: &CodingTree, exponent: i8, r: &mut BitReader<'_>, stats: &mut Vec<PassStats>) -> Result<Vec<f64>> {
    let mut dec = TreeDecoder::new(tree);
    if exponent != EMPTY_EXPONENT {
        for e in (MIN_EXPONENT..=exponent as i32).rev() {
            if dec.read_pass(2f64.powi(e), r, stats)? == PassEnd::Truncated {
                break;
            }
        }
    }
    Ok(dec.reconstruction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference dominant pass: tests every descendant set from scratch.
    fn brute_dominant(tree: &CodingTree, coeffs: &[f64], sig_at_start: &[bool], t: f64) -> Vec<Symbol> {
        let n = coeffs.len();
        let mut flagged = vec![false; n];
        let mut sig = sig_at_start.to_vec();
        let mut out = vec![];
        for &i in tree.scan() {
            let k = i as usize;
            if flagged[k] || sig[k] {
                continue;
            }
            let d = tree.descendants(i);
            if coeffs[k].abs() >= t {
                sig[k] = true;
                out.push(if coeffs[k] < 0.0 { Symbol::N } else { Symbol::P });
            } else if d.iter().all(|&j| sig_at_start[j as usize] || coeffs[j as usize].abs() < t) {
                for j in d {
                    flagged[j as usize] = true;
                }
                out.push(Symbol::T);
            } else {
                out.push(Symbol::Z);
            }
        }
        while out.last() == Some(&Symbol::T) {
            out.pop();
        }
        out
    }

    fn random_tree_coeffs(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mag: f64 = rng.gen_range(0.0..6.0);
                let v = 2f64.powf(mag) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
                if rng.gen_bool(0.4) {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(initial_threshold(&[57.0, -3.0]), Some(32.0));
        assert_eq!(initial_threshold(&[0.0, -64.0]), Some(64.0));
        assert_eq!(initial_threshold(&[1.0]), Some(1.0));
        assert_eq!(initial_threshold(&[0.3]), Some(0.25));
        assert_eq!(initial_threshold(&[0.0, 0.0]), None);
    }

    #[test]
    fn dominant_pass_matches_brute_force() {
        for (tree, seed) in [
            (CodingTree::dilation(8, 8).unwrap(), 1),
            (CodingTree::dilation(16, 8).unwrap(), 2),
            (CodingTree::mallat(16, 16, 2).unwrap(), 3),
        ] {
            let coeffs = random_tree_coeffs(seed, tree.len());
            let mut enc = TreeEncoder::new(&tree, &coeffs);
            let mut sig = vec![false; coeffs.len()];
            for e in (0..6).rev() {
                let t = 2f64.powi(e);
                let expect = brute_dominant(&tree, &coeffs, &sig, t);
                let (got, _) = enc.dominant_pass(t);
                assert_eq!(got, expect, "seed {seed} T={t}");
                enc.refinement_pass();
                for (k, s) in sig.iter_mut().enumerate() {
                    *s |= coeffs[k].abs() >= t;
                }
            }
        }
    }

    #[test]
    fn single_negative_root() {
        let tree = CodingTree::dilation(8, 8).unwrap();
        let mut coeffs = vec![0.0; 64];
        coeffs[3 * 8 + 3] = -40.0;
        let mut enc = TreeEncoder::new(&tree, &coeffs);
        let (s, st) = enc.dominant_pass(32.0);
        // The scan starts at that root; the other roots are zero-trees and
        // are stripped as trailing T symbols.
        assert_eq!(s, vec![Symbol::N]);
        assert_eq!((st.n, st.p, st.z), (1, 0, 0));
        assert_eq!(st.zerotree_cells, 63);
    }

    #[test]
    fn all_zero_tree_is_empty() {
        let tree = CodingTree::dilation(8, 8).unwrap();
        let coeffs = vec![0.0; 64];
        let mut enc = TreeEncoder::new(&tree, &coeffs);
        assert!(enc.dominant_pass(1.0).0.is_empty());
        assert_eq!(threshold_exponent(&coeffs), EMPTY_EXPONENT);
    }

    #[test]
    fn refinement_examples() {
        let tree = CodingTree::dilation(4, 4).unwrap();
        let mut coeffs = vec![0.0; 16];
        coeffs[5] = 57.0;
        coeffs[6] = 40.0;
        let mut enc = TreeEncoder::new(&tree, &coeffs);
        let mut w = BitWriter::new();
        let mut stats = vec![];
        enc.write_pass(32.0, &mut w, &mut stats);
        let bits = {
            let e = &enc.state.subordinate;
            e.iter().map(|e| (e.cell, e.low)).collect::<Vec<_>>()
        };
        // 57 -> upper half [48, 64); 40 -> lower half [32, 48)
        assert!(bits.contains(&(5, 48.0)) && bits.contains(&(6, 32.0)));
        let (bytes, len) = w.into_parts();
        let mut dec = TreeDecoder::new(&tree);
        let mut r = BitReader::new(&bytes, len);
        assert_eq!(dec.read_pass(32.0, &mut r, &mut vec![]).unwrap(), PassEnd::Complete);
        let rec = dec.reconstruction();
        assert_eq!(rec[5], 56.0);
        assert_eq!(rec[6], 40.0);
        assert!((57.0 - rec[5]).abs() <= 32.0 / 4.0);
    }

    #[test]
    fn round_trip_converges_and_prefixes_are_embedded() {
        let tree = CodingTree::dilation(16, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..256).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let e = threshold_exponent(&coeffs);
        let mut w = BitWriter::new();
        encode_tree(&tree, &coeffs, e, &mut w, &mut vec![]);
        let (bytes, len) = w.into_parts();
        let full = decode_tree(&tree, e, &mut BitReader::new(&bytes, len), &mut vec![]).unwrap();
        let err = coeffs.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 0.5, "{err}");
        for b in [1, 7, 100, len / 3, len - 1] {
            let mut wb = BitWriter::with_cap(b);
            encode_tree(&tree, &coeffs, e, &mut wb, &mut vec![]);
            let (bb, lb) = wb.into_parts();
            assert_eq!(lb, b);
            let a = decode_tree(&tree, e, &mut BitReader::new(&bb, lb), &mut vec![]).unwrap();
            let p = decode_tree(&tree, e, &mut BitReader::new(&bytes, b), &mut vec![]).unwrap();
            assert_eq!(a, p);
        }
    }

    #[test]
    fn decoder_stats_match_encoder() {
        let tree = CodingTree::mallat(16, 16, 2).unwrap();
        let coeffs = random_tree_coeffs(4, 256);
        let e = threshold_exponent(&coeffs);
        let mut w = BitWriter::new();
        let mut es = vec![];
        encode_tree(&tree, &coeffs, e, &mut w, &mut es);
        let (bytes, len) = w.into_parts();
        let mut ds = vec![];
        decode_tree(&tree, e, &mut BitReader::new(&bytes, len), &mut ds).unwrap();
        assert_eq!(es, ds);
    }
}
