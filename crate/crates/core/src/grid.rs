//! Periodic tensor grid over one cell of the reference cylinder, with the
//! Fourier machinery used by every other module.
//!
//! A cell is `[0, a) x [0, 2pi)` in the axial coordinate `x` and the angle
//! `theta`. Values are stored row-major with the axial index as the row.
//! Spectral coefficients are kept in FFT order, so row `j` holds axial
//! wavenumber `m = j` for `j < Nx/2` and `m = j - Nx` otherwise (and the same
//! for columns). They are normalized so that
//!
//! ```text
//! rho(x, theta) = sum_{m,n} c(m, n) exp(2 pi i m x / a) exp(i n theta)
//! c(m, n) ~ 1/(2 pi a) * integral of rho exp(-2 pi i m x / a) exp(-i n theta)
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Absolute floor used when deciding whether a spectral field is real.
const REALNESS_TOL: f64 = 1e-9;

struct Plans {
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    t_fwd: Arc<dyn Fft<f64>>,
    t_inv: Arc<dyn Fft<f64>>,
    /// `2 pi m / a` per FFT row and `n` per FFT column.
    kx: Vec<f64>,
    kt: Vec<f64>,
    /// Two-thirds band membership per row and per column.
    band_x: Vec<bool>,
    band_t: Vec<bool>,
}

/// Uniform periodic grid on one axial period of `C_r`.
#[derive(Clone)]
pub struct Grid {
    a: f64,
    r: f64,
    nx: usize,
    ntheta: usize,
    plans: Arc<Plans>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.r == other.r && self.nx == other.nx && self.ntheta == other.ntheta
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("a", &self.a)
            .field("r", &self.r)
            .field("nx", &self.nx)
            .field("ntheta", &self.ntheta)
            .finish()
    }
}

/// Signed wavenumber of FFT index `idx` on a length-`n` axis.
pub fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// FFT index of signed wavenumber `k` on a length-`n` axis.
pub fn fft_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

impl Grid {
    pub fn new(a: f64, r: f64, nx: usize, ntheta: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidGrid(format!("axial period must be positive, got {a}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {r}")));
        }
        for (name, n) in [("Nx", nx), ("Ntheta", ntheta)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} must be even and at least 8, got {n}"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            x_fwd: planner.plan_fft_forward(nx),
            x_inv: planner.plan_fft_inverse(nx),
            t_fwd: planner.plan_fft_forward(ntheta),
            t_inv: planner.plan_fft_inverse(ntheta),
            kx: (0..nx).map(|j| 2.0 * PI * wavenumber(j, nx) as f64 / a).collect(),
            kt: (0..ntheta).map(|k| wavenumber(k, ntheta) as f64).collect(),
            band_x: (0..nx).map(|j| 3 * wavenumber(j, nx).unsigned_abs() as usize <= nx).collect(),
            band_t: (0..ntheta).map(|k| 3 * wavenumber(k, ntheta).unsigned_abs() as usize <= ntheta).collect(),
        };
        Ok(Grid { a, r, nx, ntheta, plans: Arc::new(plans) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ntheta)
    }

    pub fn dx(&self) -> f64 {
        self.a / self.nx as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    /// Trapezoid weight of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dtheta()
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.a / self.nx as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.ntheta as f64
    }

    /// Same discretization with a different reference radius.
    pub fn with_radius(&self, r: f64) -> Result<Grid> {
        Grid::new(self.a, r, self.nx, self.ntheta)
    }

    /// Physical axial frequency `2 pi m / a` for FFT row `j`.
    pub fn kx(&self, j: usize) -> f64 {
        self.plans.kx[j]
    }

    /// Angular wavenumber `n` for FFT column `k`.
    pub fn ktheta(&self, k: usize) -> f64 {
        self.plans.kt[k]
    }

    pub(crate) fn is_x_nyquist(&self, j: usize) -> bool {
        j == self.nx / 2
    }

    pub(crate) fn is_theta_nyquist(&self, k: usize) -> bool {
        k == self.ntheta / 2
    }

    fn fft2(&self, data: &mut Array2<Complex64>, inverse: bool) {
        let (nx, nt) = (self.nx, self.ntheta);
        let (px, pt) = if inverse {
            (&self.plans.x_inv, &self.plans.t_inv)
        } else {
            (&self.plans.x_fwd, &self.plans.t_fwd)
        };
        let scratch_len = px.get_inplace_scratch_len().max(pt.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        let buf = data.as_slice_mut().expect("standard layout");
        pt.process_with_scratch(buf, &mut scratch);
        let mut cols = vec![Complex64::new(0.0, 0.0); nx * nt];
        for (j, row) in buf.chunks_exact(nt).enumerate() {
            for (k, &v) in row.iter().enumerate() {
                cols[k * nx + j] = v;
            }
        }
        px.process_with_scratch(&mut cols, &mut scratch);
        for (j, row) in buf.chunks_exact_mut(nt).enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = cols[k * nx + j];
            }
        }
    }

    /// Normalized forward transform of real samples.
    pub(crate) fn forward(&self, values: &Array2<f64>) -> Array2<Complex64> {
        let scale = 1.0 / (self.nx * self.ntheta) as f64;
        let mut c = Array2::from_shape_vec(
            values.dim(),
            values.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect(),
        )
        .expect("shape matches");
        self.fft2(&mut c, false);
        c
    }

    /// Forward transforms of two real fields with one complex transform.
    pub(crate) fn forward_pair(
        &self,
        u: &Array2<f64>,
        v: &Array2<f64>,
    ) -> (Array2<Complex64>, Array2<Complex64>) {
        let scale = 1.0 / (self.nx * self.ntheta) as f64;
        let mut z = Array2::from_shape_vec(
            u.dim(),
            u.iter().zip(v.iter()).map(|(&a, &b)| Complex64::new(a * scale, b * scale)).collect(),
        )
        .expect("shape matches");
        self.fft2(&mut z, false);
        let (nx, nt) = (self.nx, self.ntheta);
        let mut cu = Array2::zeros((nx, nt));
        let mut cv = Array2::zeros((nx, nt));
        for j in 0..nx {
            let jm = (nx - j) % nx;
            for k in 0..nt {
                let km = (nt - k) % nt;
                let p = z[[j, k]];
                let q = z[[jm, km]].conj();
                cu[[j, k]] = (p + q) * 0.5;
                cv[[j, k]] = Complex64::new(0.0, -0.5) * (p - q);
            }
        }
        (cu, cv)
    }

    pub(crate) fn inverse_complex(&self, coeffs: &Array2<Complex64>) -> Array2<Complex64> {
        let mut c = coeffs.as_standard_layout().into_owned();
        self.fft2(&mut c, true);
        c
    }

    /// Inverse transform keeping only the real part.
    pub(crate) fn inverse_real(&self, coeffs: &Array2<Complex64>) -> Array2<f64> {
        self.inverse_complex(coeffs).mapv(|z| z.re)
    }

    /// Inverse transforms of two conjugate-symmetric spectra with one complex transform.
    pub(crate) fn inverse_real_pair(
        &self,
        cu: &Array2<Complex64>,
        cv: &Array2<Complex64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z = Array2::from_shape_vec(
            cu.dim(),
            cu.iter().zip(cv.iter()).map(|(&a, &b)| a + i * b).collect(),
        )
        .expect("shape matches");
        self.fft2(&mut z, true);
        (z.mapv(|w| w.re), z.mapv(|w| w.im))
    }
}

/// Real samples of a height function (or any scalar field) on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    grid: Grid,
    values: Array2<f64>,
}

impl HeightField {
    pub fn new(grid: &Grid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch { expected: grid.shape(), got: values.dim() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::from_raw(grid, values))
    }

    pub(crate) fn from_raw(grid: &Grid, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), grid.shape());
        HeightField { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(j, k)| f(grid.x(j), grid.theta(k)));
        Self::from_raw(grid, values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(grid, Array2::from_elem(grid.shape(), c))
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[[j, k]]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.mean().unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.mapv(f))
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &HeightField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.values.clone();
        Zip::from(&mut out).and(&other.values).for_each(|a, &b| *a = f(*a, b));
        Ok(Self::from_raw(&self.grid, out))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &HeightField) -> Result<Self> {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Sup norm of the pointwise difference; infinite when grids differ.
    pub fn max_abs_diff(&self, other: &HeightField) -> f64 {
        if self.grid != other.grid {
            return f64::INFINITY;
        }
        Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0, |m, &a, &b| m.max((a - b).abs()))
    }

    /// Largest variation along theta over all axial rows.
    pub fn theta_variation(&self) -> f64 {
        self.values
            .rows()
            .into_iter()
            .map(|row| {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Fourier coefficients of a field, in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.dim() != grid.shape() {
            return Err(Error::ShapeMismatch { expected: grid.shape(), got: coeffs.dim() });
        }
        Ok(SpectralField { grid: grid.clone(), coeffs })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpectralField { grid: grid.clone(), coeffs: Array2::zeros(grid.shape()) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `(m, n)`; wavenumbers wrap modulo the grid size.
    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        self.coeffs[[fft_index(m, self.grid.nx), fft_index(n, self.grid.ntheta)]]
    }

    pub fn set_coeff(&mut self, m: i64, n: i64, value: Complex64) {
        let idx = [fft_index(m, self.grid.nx), fft_index(n, self.grid.ntheta)];
        self.coeffs[idx] = value;
    }

    /// Apply `f(m, n, c)` to every coefficient.
    pub fn map_modes(&self, f: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let (nx, nt) = self.grid.shape();
        let coeffs = Array2::from_shape_fn(self.coeffs.dim(), |(j, k)| {
            f(wavenumber(j, nx), wavenumber(k, nt), self.coeffs[[j, k]])
        });
        SpectralField { grid: self.grid.clone(), coeffs }
    }

    /// `sum |c|^2`, which equals the grid mean of `rho^2` for real fields.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn to_spectral(f: &HeightField) -> SpectralField {
    SpectralField { grid: f.grid.clone(), coeffs: f.grid.forward(&f.values) }
}

/// Inverse transform; rejects coefficient sets that do not describe a real field.
pub fn to_physical(c: &SpectralField) -> Result<HeightField> {
    let z = c.grid.inverse_complex(&c.coeffs);
    let scale = z.iter().fold(1.0_f64, |m, v| m.max(v.re.abs()));
    let residue = z.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
    if residue > REALNESS_TOL * scale {
        return Err(Error::NotConjugateSymmetric { residue });
    }
    HeightField::new(&c.grid, z.mapv(|v| v.re))
}

/// `(i k)^order`, zero at the Nyquist index for odd orders.
fn axis_multipliers(k: &[f64], order: usize) -> Vec<Complex64> {
    let n = k.len();
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][order % 4];
    k.iter()
        .enumerate()
        .map(|(idx, &kv)| {
            if order % 2 == 1 && idx == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                i_pow * kv.powi(order as i32)
            }
        })
        .collect()
}

pub(crate) fn derivative_coeffs(
    grid: &Grid,
    coeffs: &Array2<Complex64>,
    bx: usize,
    bt: usize,
) -> Array2<Complex64> {
    if bx == 0 && bt == 0 {
        return coeffs.clone();
    }
    let mx = axis_multipliers(&grid.plans.kx, bx);
    let mt = axis_multipliers(&grid.plans.kt, bt);
    let mut out = coeffs.clone();
    for (mut row, &fx) in out.rows_mut().into_iter().zip(&mx) {
        for (z, &ft) in row.iter_mut().zip(&mt) {
            *z *= fx * ft;
        }
    }
    out
}

/// Spectral `d_x^bx d_theta^bt` with total order at most four.
pub fn spectral_derivative(c: &SpectralField, bx: usize, bt: usize) -> Result<SpectralField> {
    if bx + bt > 4 {
        return Err(Error::DerivativeOrder(bx + bt));
    }
    Ok(SpectralField { grid: c.grid.clone(), coeffs: derivative_coeffs(&c.grid, &c.coeffs, bx, bt) })
}

/// Physical-space derivative of a real field.
pub fn derivative(f: &HeightField, bx: usize, bt: usize) -> Result<HeightField> {
    let d = spectral_derivative(&to_spectral(f), bx, bt)?;
    Ok(HeightField::from_raw(&f.grid, f.grid.inverse_real(&d.coeffs)))
}

fn whole_cells(s: f64, h: f64) -> Option<i64> {
    let cells = s / h;
    let rounded = cells.round();
    ((cells - rounded).abs() <= 1e-12 * rounded.abs().max(1.0)).then_some(rounded as i64)
}

/// Samples of `rho(x + s, theta)`.
///
/// Whole-cell shifts are index rotations; other shifts use phase factors,
/// with the Nyquist row treated as a cosine so the result stays real.
pub fn shift_x(f: &HeightField, s: f64) -> HeightField {
    let grid = &f.grid;
    if let Some(cells) = whole_cells(s, grid.dx()) {
        let nx = grid.nx as i64;
        let values = Array2::from_shape_fn(grid.shape(), |(j, k)| {
            f.values[[(j as i64 + cells).rem_euclid(nx) as usize, k]]
        });
        return HeightField::from_raw(grid, values);
    }
    let mut c = grid.forward(&f.values);
    for ((j, _), z) in c.indexed_iter_mut() {
        let phase = grid.kx(j) * s;
        *z *= if grid.is_x_nyquist(j) {
            Complex64::new(phase.cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, phase)
        };
    }
    HeightField::from_raw(grid, grid.inverse_real(&c))
}

/// Samples of `rho(x, theta + phi)`; the angular analogue of [`shift_x`].
pub fn shift_theta(f: &HeightField, phi: f64) -> HeightField {
    let grid = &f.grid;
    if let Some(cells) = whole_cells(phi, grid.dtheta()) {
        let nt = grid.ntheta as i64;
        let values = Array2::from_shape_fn(grid.shape(), |(j, k)| {
            f.values[[j, (k as i64 + cells).rem_euclid(nt) as usize]]
        });
        return HeightField::from_raw(grid, values);
    }
    let mut c = grid.forward(&f.values);
    for ((_, k), z) in c.indexed_iter_mut() {
        let phase = grid.ktheta(k) * phi;
        *z *= if grid.is_theta_nyquist(k) {
            Complex64::new(phase.cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, phase)
        };
    }
    HeightField::from_raw(grid, grid.inverse_real(&c))
}

/// Samples of `rho(-x, theta)`: the permutation `j -> (Nx - j) mod Nx`.
pub fn reflect_x(f: &HeightField) -> HeightField {
    let nx = f.grid.nx;
    let values = Array2::from_shape_fn(f.grid.shape(), |(j, k)| f.values[[(nx - j) % nx, k]]);
    HeightField::from_raw(&f.grid, values)
}

pub(crate) fn dealias_coeffs(grid: &Grid, coeffs: &mut Array2<Complex64>) {
    let zero = Complex64::new(0.0, 0.0);
    for (mut row, &keep_row) in coeffs.rows_mut().into_iter().zip(&grid.plans.band_x) {
        if !keep_row {
            row.fill(zero);
            continue;
        }
        for (z, &keep) in row.iter_mut().zip(&grid.plans.band_t) {
            if !keep {
                *z = zero;
            }
        }
    }
}

/// Two-thirds rule: zero every mode with `|m| > Nx/3` or `|n| > Ntheta/3`.
pub fn dealias(c: &SpectralField) -> SpectralField {
    let mut coeffs = c.coeffs.clone();
    dealias_coeffs(&c.grid, &mut coeffs);
    SpectralField { grid: c.grid.clone(), coeffs }
}

/// Physical-space convenience wrapper around [`dealias`].
pub fn dealias_field(f: &HeightField) -> HeightField {
    let mut c = f.grid.forward(&f.values);
    dealias_coeffs(&f.grid, &mut c);
    HeightField::from_raw(&f.grid, f.grid.inverse_real(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(nx: usize, nt: usize) -> Grid {
        Grid::new(2.0 * PI, 1.0, nx, nt).unwrap()
    }

    #[test]
    fn grid_nodes_and_validation() {
        let g = Grid::new(2.0 * PI, 2.0, 64, 64).unwrap();
        assert_abs_diff_eq!(g.x(5), 5.0 * PI / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.x(63), 63.0 * PI / 32.0, epsilon = 1e-15);
        assert!(Grid::new(2.0 * PI, 1.0, 8, 8).is_ok());
        assert!(Grid::new(2.0 * PI, 1.0, 7, 8).is_err());
        assert!(Grid::new(2.0 * PI, 1.0, 8, 6).is_err());
        assert!(Grid::new(0.0, 1.0, 8, 8).is_err());
        assert!(Grid::new(1.0, -1.0, 8, 8).is_err());
    }

    #[test]
    fn constant_and_cosine_coefficients() {
        let g = grid(16, 16);
        let c = to_spectral(&HeightField::constant(&g, 1.0));
        assert_abs_diff_eq!(c.coeff(0, 0).re, 1.0, epsilon = 1e-15);
        assert!(c.energy() - 1.0 < 1e-14);

        let c = to_spectral(&HeightField::from_fn(&g, |_, t| t.cos()));
        assert_abs_diff_eq!(c.coeff(0, 1).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.coeff(0, -1).re, 0.5, epsilon = 1e-15);
        let rest: f64 = c.energy() - 0.5;
        assert!(rest.abs() < 1e-14);
    }

    #[test]
    fn constant_coefficient_inverts_to_constant() {
        let g = grid(8, 8);
        let mut c = SpectralField::zeros(&g);
        c.set_coeff(0, 0, Complex64::new(2.5, 0.0));
        let f = to_physical(&c).unwrap();
        assert!(f.values().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn asymmetric_coefficients_rejected() {
        let g = grid(8, 8);
        let mut c = SpectralField::zeros(&g);
        c.set_coeff(1, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(to_physical(&c), Err(Error::NotConjugateSymmetric { .. })));
    }

    #[test]
    fn derivative_examples() {
        let g = Grid::new(3.0, 1.3, 32, 32).unwrap();
        let k = 2.0 * PI / 3.0;
        let d = derivative(&HeightField::from_fn(&g, |_, t| t.cos()), 0, 1).unwrap();
        let want = HeightField::from_fn(&g, |_, t| -t.sin());
        assert!(d.max_abs_diff(&want) < 1e-14);

        let d = derivative(&HeightField::from_fn(&g, |x, _| (k * x).sin()), 2, 0).unwrap();
        let want = HeightField::from_fn(&g, |x, _| -k * k * (k * x).sin());
        assert!(d.max_abs_diff(&want) < 1e-13 * k * k);

        assert!(matches!(
            spectral_derivative(&to_spectral(&want), 3, 2),
            Err(Error::DerivativeOrder(5))
        ));
    }

    #[test]
    fn nyquist_zeroed_only_for_odd_orders() {
        let g = grid(8, 8);
        let nyq = HeightField::from_fn(&g, |x, _| (4.0 * x).cos());
        assert!(derivative(&nyq, 1, 0).unwrap().sup_norm() < 1e-14);
        assert!(derivative(&nyq, 3, 0).unwrap().sup_norm() < 1e-14);
        let d2 = derivative(&nyq, 2, 0).unwrap();
        assert!(d2.max_abs_diff(&nyq.map(|v| -16.0 * v)) < 1e-12);
    }

    #[test]
    fn shifts_and_reflections() {
        let g = Grid::new(5.0, 1.0, 16, 8).unwrap();
        let k = 2.0 * PI / 5.0;
        let f = HeightField::from_fn(&g, |x, t| (k * x).cos() + 0.3 * (2.0 * t).sin());
        assert!(shift_x(&f, 5.0).max_abs_diff(&f) < 1e-15);

        let c = HeightField::from_fn(&g, |x, _| (k * x).cos());
        let s = shift_x(&c, 5.0 / 4.0);
        assert!(s.max_abs_diff(&HeightField::from_fn(&g, |x, _| -(k * x).sin())) < 1e-14);
        // off-grid shift goes through the phase factors
        let s = shift_x(&c, 0.37);
        assert!(s.max_abs_diff(&HeightField::from_fn(&g, |x, _| (k * (x + 0.37)).cos())) < 1e-13);

        let konst = HeightField::constant(&g, 0.7);
        assert!(shift_x(&konst, 0.123).max_abs_diff(&konst) < 1e-15);

        assert!(reflect_x(&c).max_abs_diff(&c) < 1e-15);
        let sn = HeightField::from_fn(&g, |x, _| (k * x).sin());
        assert!(reflect_x(&sn).max_abs_diff(&sn.map(|v| -v)) < 1e-15);
    }

    #[test]
    fn dealias_keeps_low_band_and_kills_nyquist() {
        let g = grid(64, 64);
        let low = HeightField::from_fn(&g, |x, t| (2.0 * x).cos() * (t).sin() + (x - 2.0 * t).cos());
        assert!(dealias_field(&low).max_abs_diff(&low) < 1e-14);
        let nyq = HeightField::from_fn(&g, |x, _| (32.0 * x).cos());
        assert!(dealias_field(&nyq).sup_norm() < 1e-14);
    }
}
