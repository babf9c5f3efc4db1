//! Distortion and rate measures, per-pass symbol statistics and the Hill
//! curve used to summarise rate-distortion scatter.

use serde::{Deserialize, Serialize};

use crate::coder::{decode_pyramid, CodeStream, PassStats};
use crate::error::{Error, Result};
use crate::grid::Grid;

pub const PSNR_CAP: f64 = 99.0;
pub const PEAK: f64 = 255.0;

fn same_dims(a: &Grid, b: &Grid) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(format!("images differ in size: {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

pub fn mse(a: &Grid, b: &Grid) -> Result<f64> {
    same_dims(a, b)?;
    let n = a.as_slice().len() as f64;
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// Peak signal-to-noise ratio for 8-bit data, capped at [`PSNR_CAP`].
pub fn psnr(a: &Grid, b: &Grid) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (PEAK * PEAK / m).log10()).min(PSNR_CAP))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable window average over every position where the window fits.
fn filter_valid(g: &Grid, w: &[f64; SSIM_WINDOW]) -> Grid {
    let (rows, cols) = g.dims();
    let (vr, vc) = (rows + 1 - SSIM_WINDOW, cols + 1 - SSIM_WINDOW);
    let horiz = Grid::from_fn(rows, vc, |r, c| (0..SSIM_WINDOW).map(|k| w[k] * g[(r, c + k)]).sum());
    Grid::from_fn(vr, vc, |r, c| (0..SSIM_WINDOW).map(|k| w[k] * horiz[(r + k, c)]).sum())
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// `K1 = 0.01`, `K2 = 0.03`, dynamic range 255, over the valid region.
pub fn ssim(a: &Grid, b: &Grid) -> Result<f64> {
    same_dims(a, b)?;
    if a.rows() < SSIM_WINDOW || a.cols() < SSIM_WINDOW {
        return Err(Error::dims(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images")));
    }
    let w = gaussian_window();
    let prod = |x: &Grid, y: &Grid| Grid::from_vec(x.rows(), x.cols(), x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p * q).collect());
    let mu_a = filter_valid(a, &w);
    let mu_b = filter_valid(b, &w);
    let e_aa = filter_valid(&prod(a, a), &w);
    let e_bb = filter_valid(&prod(b, b), &w);
    let e_ab = filter_valid(&prod(a, b), &w);
    let n = mu_a.as_slice().len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a.as_slice()[i], mu_b.as_slice()[i]);
        let va = e_aa.as_slice()[i] - ma * ma;
        let vb = e_bb.as_slice()[i] - mb * mb;
        let cov = e_ab.as_slice()[i] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2)) / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    Ok(total / n as f64)
}

/// Payload bits per source sample.
pub fn bpp(stream: &CodeStream) -> f64 {
    stream.bpp()
}

/// One rate-distortion measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub bpp: f64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-pass statistics recovered by replaying the decoder over a stream.
pub fn symbol_histogram(stream: &CodeStream) -> Result<Vec<PassStats>> {
    Ok(decode_pyramid(stream)?.stats)
}

/// Sums per-band entries that share a threshold, giving one row per pass.
pub fn merge_by_threshold(stats: &[PassStats]) -> Vec<PassStats> {
    let mut out: Vec<PassStats> = vec![];
    for s in stats {
        match out.iter_mut().find(|o| o.threshold == s.threshold) {
            Some(o) => {
                o.p += s.p;
                o.n += s.n;
                o.z += s.z;
                o.t += s.t;
                o.zerotree_cells += s.zerotree_cells;
                o.refinement_bits += s.refinement_bits;
                o.end_bit = o.end_bit.max(s.end_bit);
            }
            None => out.push(PassStats { band: None, ..*s }),
        }
    }
    out
}

/// Cells covered by zero-trees in each pass.
pub fn zero_tree_coverage(stream: &CodeStream) -> Result<Vec<usize>> {
    Ok(merge_by_threshold(&symbol_histogram(stream)?)
        .iter()
        .map(|s| s.zerotree_cells)
        .collect())
}

/// `y_max / (1 + (ec50 / x)^n)`.
pub fn hill(x: f64, y_max: f64, ec50: f64, n: f64) -> f64 {
    y_max / (1.0 + (ec50 / x).powf(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillFit {
    pub y_max: f64,
    pub ec50: f64,
    pub n: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// False when the data cannot pin down `ec50` and `n` (constant `y`);
    /// both are then NaN.
    pub identifiable: bool,
}

impl HillFit {
    pub fn eval(&self, x: f64) -> f64 {
        if self.identifiable {
            hill(x, self.y_max, self.ec50, self.n)
        } else {
            self.y_max
        }
    }
}

/// Closed-form best `y_max` for fixed `(ec50, n)` and the resulting SSE.
fn profile(xs: &[f64], ys: &[f64], ec50: f64, n: f64) -> (f64, f64) {
    let g: Vec<f64> = xs.iter().map(|&x| hill(x, 1.0, ec50, n)).collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let ym = if gg > 0.0 { g.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / gg } else { 0.0 };
    let sse = g.iter().zip(ys).map(|(a, y)| (ym * a - y).powi(2)).sum();
    (ym, sse)
}

/// Least-squares Hill fit: log-spaced grid search over `(ec50, n)` with the
/// closed-form `y_max`, then damped Gauss-Newton on `(y_max, ln ec50, ln n)`.
pub fn hill_fit(points: &[(f64, f64)]) -> Result<HillFit> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("Hill fit needs 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Degenerate("Hill fit needs finite points with x > 0".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let y0 = ys[0];
    if ys.iter().all(|&y| y == y0) {
        return Ok(HillFit {
            y_max: y0,
            ec50: f64::NAN,
            n: f64::NAN,
            residual: 0.0,
            identifiable: false,
        });
    }
    let (xmin, xmax) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    const GRID: usize = 120;
    let (lo_e, hi_e) = ((xmin / 100.0).ln(), (xmax * 100.0).ln());
    let (lo_n, hi_n) = (0.05f64.ln(), 20f64.ln());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..GRID {
        let le = lo_e + (hi_e - lo_e) * i as f64 / (GRID - 1) as f64;
        for j in 0..GRID {
            let ln = lo_n + (hi_n - lo_n) * j as f64 / (GRID - 1) as f64;
            let (_, sse) = profile(&xs, &ys, le.exp(), ln.exp());
            if sse < best.0 {
                best = (sse, le, ln);
            }
        }
    }
    let (_, mut le, mut ln) = best;
    let mut ym = profile(&xs, &ys, le.exp(), ln.exp()).0;
    let sse_of = |ym: f64, le: f64, ln: f64| -> f64 { xs.iter().zip(&ys).map(|(&x, &y)| (hill(x, ym, le.exp(), ln.exp()) - y).powi(2)).sum() };
    let mut sse = sse_of(ym, le, ln);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Jacobian of the model w.r.t. (ym, ln ec50, ln n).
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&x, &y) in xs.iter().zip(&ys) {
            let (e, n) = (le.exp(), ln.exp());
            let q = (e / x).powf(n);
            let d = 1.0 + q;
            let f = ym / d;
            let lq = (e / x).ln();
            let jac = [1.0 / d, -ym * q * n / (d * d), -ym * q * lq * n / (d * d)];
            let res = y - f;
            for a in 0..3 {
                jtr[a] += jac[a] * res;
                for b in 0..3 {
                    jtj[a][b] += jac[a] * jac[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * (1.0 + jtj[a][a]);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let cand = (ym + step[0], le + step[1], ln + step[2]);
            let s = sse_of(cand.0, cand.1, cand.2);
            if s.is_finite() && s <= sse {
                let gain = sse - s;
                (ym, le, ln, sse) = (cand.0, cand.1, cand.2, s);
                lambda = (lambda / 10.0).max(1e-15);
                improved = gain > 0.0;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || sse == 0.0 {
            break;
        }
    }
    Ok(HillFit {
        y_max: ym,
        ec50: le.exp(),
        n: ln.exp(),
        residual: (sse / xs.len() as f64).sqrt(),
        identifiable: true,
    })
}

/// Solves a 3x3 system by Cramer's rule.
fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, rows: usize, cols: usize) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_fn(rows, cols, |_, _| rng.gen_range(0.0..255.0))
    }

    #[test]
    fn psnr_examples() {
        let a = random_image(1, 20, 30);
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
        let b = a.map(|v| v + 1.0);
        assert!((psnr(&a, &b).unwrap() - 48.130_803_608_679_1).abs() < 1e-9);
        let c = random_image(2, 20, 30);
        let direct = {
            let mut s = 0.0;
            for r in 0..20 {
                for k in 0..30 {
                    s += (a[(r, k)] - c[(r, k)]).powi(2);
                }
            }
            10.0 * (255.0f64.powi(2) / (s / 600.0)).log10()
        };
        assert!((psnr(&a, &c).unwrap() - direct).abs() < 1e-9);
        assert_eq!(psnr(&a, &c).unwrap(), psnr(&c, &a).unwrap());
        assert!(psnr(&a, &Grid::zeros(3, 3)).is_err());
    }

    /// Straightforward per-window SSIM.
    fn ssim_reference(a: &Grid, b: &Grid) -> f64 {
        let half = 5.0f64;
        let mut w = vec![vec![0.0; 11]; 11];
        let mut s = 0.0;
        for (i, row) in w.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let d2 = (i as f64 - half).powi(2) + (j as f64 - half).powi(2);
                *v = (-d2 / 4.5).exp();
                s += *v;
            }
        }
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let mut total = 0.0;
        let mut count = 0;
        for r in 0..=a.rows() - 11 {
            for c in 0..=a.cols() - 11 {
                let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wt = w[i][j] / s;
                        let (x, y) = (a[(r + i, c + j)], b[(r + i, c + j)]);
                        ma += wt * x;
                        mb += wt * y;
                        aa += wt * x * x;
                        bb += wt * y * y;
                        ab += wt * x * y;
                    }
                }
                let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_examples() {
        let a = random_image(3, 24, 30);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let inv = a.map(|v| 255.0 - v);
        assert!(ssim(&a, &inv).unwrap() < 1.0);
        let b = Grid::from_fn(24, 30, |r, c| a[(r, c)] * 0.8 + ((r + c) % 7) as f64);
        let s = ssim(&a, &b).unwrap();
        assert!((s - ssim_reference(&a, &b)).abs() < 1e-10);
        assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(ssim(&Grid::zeros(10, 10), &Grid::zeros(10, 10)).is_err());
    }

    #[test]
    fn hill_recovers_noise_free_parameters() {
        let xs: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, hill(x, 0.95, 0.4, 2.0))).collect();
        let f = hill_fit(&pts).unwrap();
        assert!((f.y_max - 0.95).abs() < 1e-6, "{f:?}");
        assert!((f.ec50 - 0.4).abs() < 1e-6);
        assert!((f.n - 2.0).abs() < 1e-6);
        assert!((f.eval(f.ec50) - f.y_max / 2.0).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 1..100 {
            let v = f.eval(i as f64 * 0.03);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn hill_degenerate_inputs() {
        let f = hill_fit(&[(0.1, 0.5), (0.2, 0.5), (0.3, 0.5)]).unwrap();
        assert!(!f.identifiable && f.y_max == 0.5 && f.ec50.is_nan());
        assert!(hill_fit(&[(0.1, 0.5), (0.2, 0.6)]).is_err());
        assert!(hill_fit(&[(0.0, 0.5), (0.2, 0.6), (0.3, 0.7)]).is_err());
    }

    #[test]
    fn merge_sums_bands() {
        let a = PassStats { threshold: 4.0, band: Some(0), p: 1, z: 2, zerotree_cells: 5, ..Default::default() };
        let b = PassStats { threshold: 4.0, band: Some(3), n: 1, t: 3, zerotree_cells: 7, ..Default::default() };
        let c = PassStats { threshold: 2.0, band: Some(0), p: 4, ..Default::default() };
        let m = merge_by_threshold(&[a, b, c]);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].p, m[0].n, m[0].z, m[0].t, m[0].zerotree_cells), (1, 1, 2, 3, 12));
        assert_eq!(m[1].p, 4);
    }
}
