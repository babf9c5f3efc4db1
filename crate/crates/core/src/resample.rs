//! Moving images between Cartesian rasters, analytic test patterns and the
//! hexagonal index map.
//!
//! Every resampler works in a frame centred on a shared bounding box: the
//! hexagonal grid, the Cartesian comparison grid and the source all place the
//! box centre at their own origin, so the same content lands on both grids.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::{lattice_point, valid_columns, IndexMap, SQRT3_2};

/// Cartesian grayscale raster; row index grows downwards.
pub type CartImage = Grid;

/// 8-bit interleaved RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::dims(format!("RGB buffer of {} pixels for {height}x{width}", data.len())));
        }
        Ok(RgbImage { height, width, data })
    }
}

/// Studio-range BT.601 luma of an 8-bit RGB image, in `[16, 235]`.
pub fn rgb_to_y(img: &RgbImage) -> CartImage {
    Grid::from_vec(img.height, img.width, img.data.iter().map(|&px| luma(px)).collect())
}

#[inline]
pub fn luma([r, g, b]: [u8; 3]) -> f64 {
    16.0 + (65.481 * r as f64 + 128.553 * g as f64 + 24.966 * b as f64) / 255.0
}

const KEYS_A: f64 = -0.5;

/// Keys cubic convolution kernel with `a = -1/2`.
#[inline]
pub fn keys_kernel(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((KEYS_A + 2.0) * t - (KEYS_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((KEYS_A * t - 5.0 * KEYS_A) * t + 8.0 * KEYS_A) * t - 4.0 * KEYS_A
    } else {
        0.0
    }
}

/// Bicubic sample at column `x`, row `y` (pixel centres on integers). Indices
/// outside the image are clamped to the edge.
pub fn keys_bicubic_sample(img: &CartImage, x: f64, y: f64) -> f64 {
    let (rows, cols) = img.dims();
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let wx = [keys_kernel(fx + 1.0), keys_kernel(fx), keys_kernel(fx - 1.0), keys_kernel(fx - 2.0)];
    let wy = [keys_kernel(fy + 1.0), keys_kernel(fy), keys_kernel(fy - 1.0), keys_kernel(fy - 2.0)];
    let clamp = |v: f64, n: usize| v.max(0.0).min((n - 1) as f64) as usize;
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        if *wyj == 0.0 {
            continue;
        }
        let r = clamp(y0 + j as f64 - 1.0, rows);
        let mut row_acc = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            let c = clamp(x0 + i as f64 - 1.0, cols);
            row_acc += wxi * img[(r, c)];
        }
        acc += wyj * row_acc;
    }
    acc
}

/// Something that can be sampled at an offset from its centre.
pub trait Field: Sync {
    /// Value at `(dx, dy)` relative to the centre, or `None` outside the domain.
    fn sample(&self, dx: f64, dy: f64) -> Option<f64>;
}

impl Field for Grid {
    fn sample(&self, dx: f64, dy: f64) -> Option<f64> {
        const EPS: f64 = 1e-9;
        let x = (self.cols() as f64 - 1.0) / 2.0 + dx;
        let y = (self.rows() as f64 - 1.0) / 2.0 + dy;
        if x < -EPS || y < -EPS || x > self.cols() as f64 - 1.0 + EPS || y > self.rows() as f64 - 1.0 + EPS {
            return None;
        }
        Some(keys_bicubic_sample(self, x, y))
    }
}

/// Analytic test patterns defined on the plane, nominally viewed on `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synthetic {
    Chirp,
    Checkerboard,
}

pub const CHIRP_ALPHA: f64 = 40.0;
pub const CHECKER_RING: f64 = 0.125;
pub const CHECKER_SECTOR: f64 = PI / 8.0;

impl Synthetic {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Synthetic::Chirp => 127.5 * (1.0 + (CHIRP_ALPHA * (x * x + y * y)).cos()),
            Synthetic::Checkerboard => {
                let rho = (x * x + y * y).sqrt();
                let mut theta = y.atan2(x);
                if theta < 0.0 {
                    theta += 2.0 * PI;
                }
                let idx = (rho / CHECKER_RING).floor() as i64 + (theta / CHECKER_SECTOR).floor() as i64;
                if idx.rem_euclid(2) == 0 {
                    255.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Synthetic::Chirp => "chirp",
            Synthetic::Checkerboard => "checkerboard",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "chirp" => Some(Synthetic::Chirp),
            "checkerboard" => Some(Synthetic::Checkerboard),
            _ => None,
        }
    }

    /// `n x n` raster with pixel centres spanning `[-1, 1]` inclusive.
    pub fn raster(self, n: usize) -> Result<CartImage> {
        if n < 8 {
            return Err(Error::dims(format!("synthetic raster needs n >= 8, got {n}")));
        }
        let step = 2.0 / (n - 1) as f64;
        Ok(Grid::from_fn(n, n, |r, c| self.eval(-1.0 + c as f64 * step, -1.0 + r as f64 * step)))
    }
}

impl Field for Synthetic {
    fn sample(&self, dx: f64, dy: f64) -> Option<f64> {
        Some(self.eval(dx, dy))
    }
}

pub fn gen_chirp(n: usize) -> Result<CartImage> {
    Synthetic::Chirp.raster(n)
}

pub fn gen_checkerboard(n: usize) -> Result<CartImage> {
    Synthetic::Checkerboard.raster(n)
}

/// Interior rectangle of a hexagonal grid: the region every row spans.
/// Coordinates are lattice coordinates with cell `(0, 0)` at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexBox {
    pub width: f64,
    pub height: f64,
}

impl HexBox {
    pub fn of(width: usize, rows: usize, h: f64) -> Self {
        HexBox {
            width: (width as f64 - 1.5) * h,
            height: (rows as f64 - 1.0) * SQRT3_2 * h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width / 2.0, self.height / 2.0)
    }
}

/// Largest `h` for which the whole `width x rows` point cloud fits inside a
/// centred `2 * half_w` by `2 * half_h` region.
pub fn fit_hex_spacing(width: usize, rows: usize, half_w: f64, half_h: f64) -> f64 {
    let hx = 2.0 * half_w / (width as f64 - 0.5);
    let hy = if rows > 1 {
        2.0 * half_h / ((rows - 1) as f64 * SQRT3_2)
    } else {
        f64::INFINITY
    };
    hx.min(hy)
}

/// Samples `field` on a `width x rows` hexagonal grid whose interior box is
/// centred on the field's origin.
pub fn resample_to_hex(field: &dyn Field, width: usize, rows: usize, h: f64) -> Result<IndexMap> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::dims(format!("sampling interval must be positive, got {h}")));
    }
    let (bcx, bcy) = HexBox::of(width, rows, h).center();
    let mut map = IndexMap::new(width, rows)?;
    for r in 0..rows {
        for c in valid_columns(r, width) {
            let [x, y] = lattice_point(IndexMap::lattice_vector(r, c), h);
            let (dx, dy) = (x - bcx, y - bcy);
            let v = field.sample(dx, dy).ok_or(Error::BoundingBoxOverflow { x: dx, y: dy })?;
            map.set(r, c, v);
        }
    }
    Ok(map)
}

/// Samples `field` on an `out_h x out_w` Cartesian grid whose outermost pixel
/// centres sit on the edges of the centred `2 * half_w` by `2 * half_h` box.
pub fn resample_to_cart(field: &dyn Field, out_h: usize, out_w: usize, half_w: f64, half_h: f64) -> Result<CartImage> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::dims("empty Cartesian output"));
    }
    let mut out = Grid::zeros(out_h, out_w);
    for i in 0..out_h {
        let dy = axis_position(i, out_h, half_h);
        for j in 0..out_w {
            let dx = axis_position(j, out_w, half_w);
            out[(i, j)] = field.sample(dx, dy).ok_or(Error::BoundingBoxOverflow { x: dx, y: dy })?;
        }
    }
    Ok(out)
}

#[inline]
fn axis_position(i: usize, n: usize, half: f64) -> f64 {
    if n == 1 {
        0.0
    } else {
        -half + 2.0 * half * i as f64 / (n - 1) as f64
    }
}

/// Piecewise-linear (Courant element) interpolation of the map at lattice
/// coordinates `(x, y)`.
pub fn hex_interpolate(map: &IndexMap, h: f64, x: f64, y: f64) -> Result<f64> {
    const EPS: f64 = 1e-9;
    let k2 = y / (SQRT3_2 * h);
    let k1 = x / h + 0.5 * k2;
    let outside = || Error::OutsideCoverage { x, y };
    if k2 < -EPS || k2 > (map.rows() - 1) as f64 + EPS {
        return Err(outside());
    }
    // Snap onto the upper row when sitting on the last row so the triangle
    // stays inside the map.
    let r0 = (k2.floor().max(0.0) as usize).min(map.rows().saturating_sub(2));
    let v = (k2 - r0 as f64).clamp(0.0, 1.0);
    let c0f = k1.floor();
    let mut u = k1 - c0f;
    let mut c0 = c0f as i64;
    if u > 1.0 - EPS && u < 1.0 + EPS {
        u = 0.0;
        c0 += 1;
    }
    let at = |r: usize, c: i64| -> Result<f64> {
        if c < 0 || !map.is_valid(r, c as usize) {
            return Err(outside());
        }
        Ok(map.get(r, c as usize))
    };
    if map.rows() == 1 {
        // Degenerate single row: linear along the row.
        let a = at(0, c0)?;
        if u < EPS {
            return Ok(a);
        }
        return Ok((1.0 - u) * a + u * at(0, c0 + 1)?);
    }
    let (r1, c1) = (r0 + 1, c0 + 1);
    if u >= v {
        // Triangle (0,0), (1,0), (1,1) in (k1, k2) offsets.
        let w00 = 1.0 - u;
        let w10 = u - v;
        let w11 = v;
        Ok(weighted(&[(w00, r0, c0), (w10, r0, c1), (w11, r1, c1)], at)?)
    } else {
        // Triangle (0,0), (0,1), (1,1).
        let w00 = 1.0 - v;
        let w01 = v - u;
        let w11 = u;
        Ok(weighted(&[(w00, r0, c0), (w01, r1, c0), (w11, r1, c1)], at)?)
    }
}

fn weighted(terms: &[(f64, usize, i64)], at: impl Fn(usize, i64) -> Result<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for &(w, r, c) in terms {
        // Vertices with zero weight may legitimately sit outside the map.
        if w.abs() < 1e-12 {
            continue;
        }
        acc += w * at(r, c)?;
    }
    Ok(acc)
}

/// Resamples the map onto an `out_h x out_w` Cartesian grid covering its
/// interior box, using barycentric interpolation on the lattice triangles.
pub fn hex_to_cart(map: &IndexMap, h: f64, out_h: usize, out_w: usize) -> Result<CartImage> {
    if map.width() < 2 || map.rows() < 2 {
        return Err(Error::dims("hex_to_cart needs at least a 2x2 hexagonal grid"));
    }
    let bx = HexBox::of(map.width(), map.rows(), h);
    let (half_w, half_h) = (bx.width / 2.0, bx.height / 2.0);
    let mut out = Grid::zeros(out_h, out_w);
    for i in 0..out_h {
        let y = half_h + axis_position(i, out_h, half_h);
        for j in 0..out_w {
            let x = half_w + axis_position(j, out_w, half_w);
            out[(i, j)] = hex_interpolate(map, h, x, y)?;
        }
    }
    Ok(out)
}

/// Paired hexagonal and Cartesian grids over one bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedGeometry {
    pub hex_width: usize,
    pub hex_rows: usize,
    pub h: f64,
    pub cart_rows: usize,
    pub cart_cols: usize,
    /// Half extents of the box in field units.
    pub half_w: f64,
    pub half_h: f64,
}

impl SharedGeometry {
    /// Fits the hexagonal grid inside a centred region of the field, then uses
    /// the hex grid's interior box for the Cartesian grid.
    pub fn fit(hex_width: usize, hex_rows: usize, cart_rows: usize, cart_cols: usize, avail_half_w: f64, avail_half_h: f64) -> Self {
        let h = fit_hex_spacing(hex_width, hex_rows, avail_half_w, avail_half_h);
        let bx = HexBox::of(hex_width, hex_rows, h);
        SharedGeometry {
            hex_width,
            hex_rows,
            h,
            cart_rows,
            cart_cols,
            half_w: bx.width / 2.0,
            half_h: bx.height / 2.0,
        }
    }

    /// Geometry for an analytic pattern viewed on `[-1, 1]^2`.
    pub fn for_synthetic(hex_width: usize, hex_rows: usize, cart_rows: usize, cart_cols: usize) -> Self {
        Self::fit(hex_width, hex_rows, cart_rows, cart_cols, 1.0, 1.0)
    }

    /// Geometry for a Cartesian source raster.
    pub fn for_image(img: &CartImage, hex_width: usize, hex_rows: usize, cart_rows: usize, cart_cols: usize) -> Self {
        let half_w = (img.cols() as f64 - 1.0) / 2.0;
        let half_h = (img.rows() as f64 - 1.0) / 2.0;
        Self::fit(hex_width, hex_rows, cart_rows, cart_cols, half_w, half_h)
    }

    /// Geometry implied by an existing hexagonal grid: the Cartesian grid
    /// covers its interior box.
    pub fn for_hex(hex_width: usize, hex_rows: usize, h: f64, cart_rows: usize, cart_cols: usize) -> Self {
        let bx = HexBox::of(hex_width, hex_rows, h);
        SharedGeometry {
            hex_width,
            hex_rows,
            h,
            cart_rows,
            cart_cols,
            half_w: bx.width / 2.0,
            half_h: bx.height / 2.0,
        }
    }

    pub fn hex(&self, field: &dyn Field) -> Result<IndexMap> {
        resample_to_hex(field, self.hex_width, self.hex_rows, self.h)
    }

    pub fn cart(&self, field: &dyn Field) -> Result<CartImage> {
        resample_to_cart(field, self.cart_rows, self.cart_cols, self.half_w, self.half_h)
    }

    /// Resamples a hexagonal reconstruction onto the comparison grid.
    pub fn hex_to_cart(&self, map: &IndexMap) -> Result<CartImage> {
        hex_to_cart(map, self.h, self.cart_rows, self.cart_cols)
    }
}
