//! Image-domain calculus: grids, discrete gradients, total variation and its
//! smoothed variants, blur kernels, quality metrics, noise, and PGM I/O.
//!
//! Pixels are stored row-major. The discrete gradient at pixel `(i, j)` pairs
//! a downward difference `x[i][j] - x[i+1][j]` with a rightward difference
//! `x[i][j] - x[i][j+1]`; on the last row only the rightward component exists,
//! on the last column only the downward one, and the bottom-right corner has
//! no gradient. Total variation sums the Euclidean norms of these per-pixel
//! pairs (isotropic coupling).

mod kernel;
mod pgm;
mod ssim;
mod synth;

pub use kernel::{blur_operator_norm, convolve, convolve_adjoint, disk_kernel, identity_kernel};
pub use pgm::{pgm_read, pgm_write, pgm_write_ascii, PgmError};
pub use ssim::{ssim, SsimError};
pub use synth::{
    add_gaussian_noise, gaussian_noise_vec, piecewise_signal, synthetic_image, textured_image,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    Empty,
    #[error("expected {expected} values for a {rows}x{cols} grid, got {got}")]
    SizeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("grid values must be finite")]
    NonFinite,
}

/// Dense row-major image with `f64` intensities (nominally in `[0, 1]`,
/// but intermediate iterates may leave that range).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::Empty);
        }
        if data.len() != rows * cols {
            return Err(GridError::SizeMismatch {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !crate::vecmath::all_finite(&data) {
            return Err(GridError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "grid must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced invalid grid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets a flat vector as a grid with this grid's shape.
    pub fn same_shape(&self, data: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.rows, self.cols, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Discrete gradient field of an `m x n` grid: downward differences form an
/// `(m-1) x n` block, rightward differences an `m x (n-1)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    rows: usize,
    cols: usize,
    vertical: Vec<f64>,
    horizontal: Vec<f64>,
}

impl GradField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Self {
            rows,
            cols,
            vertical: vec![0.0; (rows - 1) * cols],
            horizontal: vec![0.0; rows * (cols - 1)],
        }
    }

    /// Shape of the underlying image, not of the difference blocks.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i + 1 < self.rows);
        self.vertical[i * self.cols + j]
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j + 1 < self.cols);
        self.horizontal[i * (self.cols - 1) + j]
    }

    #[inline]
    pub fn set_v(&mut self, i: usize, j: usize, val: f64) {
        debug_assert!(i + 1 < self.rows);
        self.vertical[i * self.cols + j] = val;
    }

    #[inline]
    pub fn set_h(&mut self, i: usize, j: usize, val: f64) {
        debug_assert!(j + 1 < self.cols);
        self.horizontal[i * (self.cols - 1) + j] = val;
    }

    pub fn vertical(&self) -> &[f64] {
        &self.vertical
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.horizontal
    }

    pub fn vertical_mut(&mut self) -> &mut [f64] {
        &mut self.vertical
    }

    pub fn horizontal_mut(&mut self) -> &mut [f64] {
        &mut self.horizontal
    }

    /// Euclidean norm of the per-pixel pair at `(i, j)`; missing boundary
    /// components count as zero, so the bottom-right corner returns 0.
    #[inline]
    pub fn pixel_norm(&self, i: usize, j: usize) -> f64 {
        let dv = if i + 1 < self.rows { self.v(i, j) } else { 0.0 };
        let dh = if j + 1 < self.cols { self.h(i, j) } else { 0.0 };
        (dv * dv + dh * dh).sqrt()
    }
}

/// Forward differences of `x` (downward and rightward), zero-free boundary
/// handling by omission: last-row and last-column components do not exist.
pub fn grad(x: &ImageGrid) -> GradField {
    let (m, n) = (x.rows(), x.cols());
    let mut g = GradField::zeros(m, n);
    for i in 0..m.saturating_sub(1) {
        for j in 0..n {
            g.set_v(i, j, x.get(i, j) - x.get(i + 1, j));
        }
    }
    for i in 0..m {
        for j in 0..n.saturating_sub(1) {
            g.set_h(i, j, x.get(i, j) - x.get(i, j + 1));
        }
    }
    g
}

/// Adjoint of [`grad`] under the flat Euclidean inner products:
/// `<grad(x), p> = <x, grad_adjoint(p)>` for every `x` and `p`.
pub fn grad_adjoint(p: &GradField) -> ImageGrid {
    let (m, n) = (p.rows(), p.cols());
    let mut out = ImageGrid::zeros(m, n);
    for i in 0..m.saturating_sub(1) {
        for j in 0..n {
            let val = p.v(i, j);
            *out.at_mut(i, j) += val;
            *out.at_mut(i + 1, j) -= val;
        }
    }
    for i in 0..m {
        for j in 0..n.saturating_sub(1) {
            let val = p.h(i, j);
            *out.at_mut(i, j) += val;
            *out.at_mut(i, j + 1) -= val;
        }
    }
    out
}

impl ImageGrid {
    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Isotropic total variation: the sum of per-pixel gradient norms.
pub fn tv(x: &ImageGrid) -> f64 {
    let g = grad(x);
    let mut acc = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            acc += g.pixel_norm(i, j);
        }
    }
    acc
}

/// Smoothed total variation `sum phi(|grad x|)` for a concave rescaling
/// `phi`. With the identity rescaling this equals [`tv`].
pub fn tv_phi(x: &ImageGrid, phi: &PhiFamily) -> f64 {
    let g = grad(x);
    let mut acc = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            acc += phi.eval(g.pixel_norm(i, j));
        }
    }
    acc
}

/// Gradient of `x -> tv(x) - tv_phi(x, phi)`.
///
/// The difference is smooth even across pixels with vanishing gradient: with
/// `psi(r) = r - phi(r)` one has `psi'(0) = 0`, so the per-pixel scaling
/// `psi'(r)/r` extends continuously by 0 at `r = 0`.
pub fn tv_minus_phi_gradient(x: &ImageGrid, phi: &PhiFamily) -> ImageGrid {
    let g = grad(x);
    let mut scaled = GradField::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let r = g.pixel_norm(i, j);
            if r == 0.0 {
                continue;
            }
            let scale = (1.0 - phi.deriv(r)) / r;
            if i + 1 < x.rows() {
                scaled.set_v(i, j, scale * g.v(i, j));
            }
            if j + 1 < x.cols() {
                scaled.set_h(i, j, scale * g.h(i, j));
            }
        }
    }
    grad_adjoint(&scaled)
}

#[derive(Debug, Error)]
pub enum PhiError {
    #[error("scale parameter must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("unknown rescaling family '{0}' (expected log, rat, atan, or exp)")]
    UnknownKind(String),
}

/// Concave rescaling families for smoothed total variation.
///
/// Every family satisfies `phi(0) = 0`, `phi'(0) = 1`, `0 < phi'(r) <= 1`,
/// and `phi(r) <= r` on `r >= 0`; larger scale parameters flatten the
/// penalty faster, which preserves strong edges better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// `log(1 + a r) / a`
    Log,
    /// `r / (1 + a r / 2)`
    Rational,
    /// `(atan((1 + a r)/sqrt 3) - pi/6) / (a sqrt 3 / 4)`
    Atan,
    /// `(1 - exp(-a r)) / a`
    Exp,
}

impl std::str::FromStr for PhiKind {
    type Err = PhiError;

    fn from_str(s: &str) -> Result<Self, PhiError> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(PhiKind::Log),
            "rat" | "rational" => Ok(PhiKind::Rational),
            "atan" => Ok(PhiKind::Atan),
            "exp" => Ok(PhiKind::Exp),
            other => Err(PhiError::UnknownKind(other.to_string())),
        }
    }
}

impl std::fmt::Display for PhiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PhiKind::Log => "log",
            PhiKind::Rational => "rat",
            PhiKind::Atan => "atan",
            PhiKind::Exp => "exp",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiFamily {
    kind: PhiKind,
    a: f64,
}

impl PhiFamily {
    pub fn new(kind: PhiKind, a: f64) -> Result<Self, PhiError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(PhiError::BadScale(a));
        }
        Ok(Self { kind, a })
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.a
    }

    /// `phi(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let a = self.a;
        match self.kind {
            PhiKind::Log => (1.0 + a * r).ln() / a,
            PhiKind::Rational => r / (1.0 + a * r / 2.0),
            PhiKind::Atan => {
                let sqrt3 = 3.0_f64.sqrt();
                (((1.0 + a * r) / sqrt3).atan() - std::f64::consts::FRAC_PI_6) / (a * sqrt3 / 4.0)
            }
            PhiKind::Exp => (1.0 - (-a * r).exp()) / a,
        }
    }

    /// `phi'(r)` for `r >= 0`; equals 1 at `r = 0` for every family.
    pub fn deriv(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let a = self.a;
        match self.kind {
            PhiKind::Log => 1.0 / (1.0 + a * r),
            PhiKind::Rational => {
                let d = 1.0 + a * r / 2.0;
                1.0 / (d * d)
            }
            PhiKind::Atan => 4.0 / (a * a * r * r + 2.0 * a * r + 4.0),
            PhiKind::Exp => (-a * r).exp(),
        }
    }
}
