//! The linearization `DG(0)` at the reference cylinder.
//!
//! `DG(0) = -(d_x^2 + r^-2 d_theta^2)(d_x^2 + r^-2 d_theta^2 + r^-2)` acts on the
//! Fourier mode `(m, n)` as multiplication by `-q (q - r^-2)` with
//! `q = (2 pi m / a)^2 + n^2 / r^2`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{wavenumber, Grid, HeightField};

/// Eigenvalue of `DG(0)` for the mode `e^{2 pi i m x / a} e^{i n theta}`.
pub fn eigenvalue(m: i64, n: i64, r: f64, a: f64) -> f64 {
    let k = 2.0 * PI * m as f64 / a;
    let q = k * k + (n * n) as f64 / (r * r);
    -q * (q - 1.0 / (r * r))
}

/// `(0, 0)` and `(0, +-1)`: constants and the two axis translations.
pub fn is_kernel_mode(m: i64, n: i64) -> bool {
    m == 0 && n.abs() <= 1
}

/// Multiplier of `DG(0)` at every FFT index of `grid`.
pub fn dg0_multiplier(grid: &Grid) -> Array2<f64> {
    let (nx, nt) = grid.shape();
    Array2::from_shape_fn((nx, nt), |(j, k)| {
        eigenvalue(wavenumber(j, nx), wavenumber(k, nt), grid.r(), grid.a())
    })
}

fn apply_multiplier(h: &HeightField, f: impl Fn(f64) -> f64) -> HeightField {
    let grid = h.grid();
    let mult = dg0_multiplier(grid);
    let mut c = grid.forward(h.values());
    c.zip_mut_with(&mult, |c, &l| *c *= f(l));
    HeightField::from_raw(grid, grid.inverse_real(&c))
}

/// `DG(0)` with its multiplier table cached, for repeated application on one grid.
#[derive(Clone, Debug)]
pub struct Dg0 {
    grid: Grid,
    mult: Array2<f64>,
}

impl Dg0 {
    pub fn new(grid: &Grid) -> Self {
        Dg0 { grid: grid.clone(), mult: dg0_multiplier(grid) }
    }

    /// `max |lambda|` over the modes of the grid.
    pub fn norm(&self) -> f64 {
        self.mult.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    pub fn apply(&self, h: &HeightField) -> Result<HeightField> {
        if h.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut c = self.grid.forward(h.values());
        c.zip_mut_with(&self.mult, |c, &l| *c *= l);
        Ok(HeightField::from_raw(&self.grid, self.grid.inverse_real(&c)))
    }
}

/// `DG(0) h` through its Fourier multiplier.
pub fn apply_dg0(h: &HeightField) -> HeightField {
    apply_multiplier(h, |l| l)
}

/// Exact solution `e^{t DG(0)} h` of the linearized flow.
pub fn linear_propagator(h: &HeightField, t: f64) -> Result<HeightField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("propagation time {t} must be >= 0")));
    }
    Ok(apply_multiplier(h, |l| (l * t).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeFlag {
    Kernel,
    Neutral,
    Unstable,
    Stable,
}

impl ModeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeFlag::Kernel => "kernel",
            ModeFlag::Neutral => "neutral",
            ModeFlag::Unstable => "unstable",
            ModeFlag::Stable => "stable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumEntry {
    pub m: i64,
    pub n: i64,
    pub lambda: f64,
    /// Number of entries in the table sharing this eigenvalue.
    pub multiplicity: usize,
    pub flag: ModeFlag,
}

fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// All modes with `|m| <= mmax`, `|n| <= nmax`, sorted by decreasing eigenvalue.
pub fn spectrum_table(r: f64, a: f64, mmax: u32, nmax: u32) -> Result<Vec<SpectrumEntry>> {
    if mmax < 1 || nmax < 1 {
        return Err(Error::InvalidParameter("mmax and nmax must be at least 1".into()));
    }
    if !(r > 0.0 && a > 0.0) {
        return Err(Error::InvalidParameter(format!("r = {r} and a = {a} must be positive")));
    }
    let (mmax, nmax) = (mmax as i64, nmax as i64);
    let mut entries = Vec::new();
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            let lambda = eigenvalue(m, n, r, a);
            let flag = if is_kernel_mode(m, n) {
                ModeFlag::Kernel
            } else if same_eigenvalue(lambda, 0.0) {
                ModeFlag::Neutral
            } else if lambda > 0.0 {
                ModeFlag::Unstable
            } else {
                ModeFlag::Stable
            };
            entries.push(SpectrumEntry { m, n, lambda, multiplicity: 0, flag });
        }
    }
    entries.sort_by(|p, q| {
        q.lambda
            .partial_cmp(&p.lambda)
            .unwrap_or(Ordering::Equal)
            .then((p.m.abs(), p.n.abs(), p.m, p.n).cmp(&(q.m.abs(), q.n.abs(), q.m, q.n)))
    });
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && same_eigenvalue(entries[end].lambda, entries[start].lambda) {
            end += 1;
        }
        for e in &mut entries[start..end] {
            e.multiplicity = end - start;
        }
        start = end;
    }
    Ok(entries)
}

/// Orthogonal projection onto `span{1, cos theta, sin theta}` in `L2([0,a] x [0,2pi])`.
#[derive(Clone, Debug)]
pub struct KernelProjection {
    pub c0: f64,
    pub c_cos: f64,
    pub c_sin: f64,
    pub remainder: HeightField,
}

pub fn kernel_projection(h: &HeightField) -> KernelProjection {
    let grid = h.grid();
    let w = grid.cell_area();
    let a = grid.a();
    let (mut s0, mut sc, mut ss) = (0.0, 0.0, 0.0);
    for ((_, k), &v) in h.values().indexed_iter() {
        let th = grid.theta(k);
        s0 += v;
        sc += v * th.cos();
        ss += v * th.sin();
    }
    let c0 = s0 * w / (2.0 * PI * a);
    let c_cos = sc * w / (PI * a);
    let c_sin = ss * w / (PI * a);
    let remainder = HeightField::from_raw(
        grid,
        Array2::from_shape_fn(grid.shape(), |(j, k)| {
            let th = grid.theta(k);
            h.get(j, k) - c0 - c_cos * th.cos() - c_sin * th.sin()
        }),
    );
    KernelProjection { c0, c_cos, c_sin, remainder }
}

/// `DG(0) h` assembled from spectral derivatives instead of the multiplier.
pub fn apply_dg0_by_derivatives(h: &HeightField) -> HeightField {
    let grid = h.grid();
    let c = grid.forward(h.values());
    let r2 = 1.0 / (grid.r() * grid.r());
    let d = |bx, bt| crate::grid::derivative_coeffs(grid, &c, bx, bt);
    let (d40, d22, d04, d20, d02) = (d(4, 0), d(2, 2), d(0, 4), d(2, 0), d(0, 2));
    let out = Array2::from_shape_fn(grid.shape(), |ix| {
        let v: Complex64 = d40[ix] + d22[ix] * (2.0 * r2) + d04[ix] * (r2 * r2) + d20[ix] * r2
            + d02[ix] * (r2 * r2);
        -v
    });
    HeightField::from_raw(grid, grid.inverse_real(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_anchors() {
        let a = 2.0 * PI;
        assert_eq!(eigenvalue(0, 0, 1.3, a), 0.0);
        assert!((eigenvalue(1, 0, 2.0, a) + 0.75).abs() < 1e-15);
        assert!((eigenvalue(1, 0, 0.8, a) - 0.5625).abs() < 1e-14);
        assert!(eigenvalue(1, 0, 1.0, a).abs() < 1e-15);
        assert!(eigenvalue(0, 1, 0.7, a).abs() < 1e-15);
        assert!((eigenvalue(1, 0, 0.8, PI) - eigenvalue(2, 0, 0.8, 2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn apply_examples() {
        let g = Grid::new(2.0 * PI, 2.0, 16, 16).unwrap();
        let cos_t = HeightField::from_fn(&g, |_, t| t.cos());
        assert!(apply_dg0(&cos_t).sup_norm() < 1e-12);
        assert!(apply_dg0(&HeightField::constant(&g, 1.0)).sup_norm() < 1e-12);
        let cos_x = HeightField::from_fn(&g, |x, _| x.cos());
        let want = cos_x.map(|v| -0.75 * v);
        assert!(apply_dg0(&cos_x).max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn multiplier_matches_derivatives() {
        let g = Grid::new(3.0, 1.3, 16, 16).unwrap();
        let h = HeightField::from_fn(&g, |x, t| (2.0 * PI * x / 3.0).sin() * (2.0 * t).cos() + 0.3 * t.sin());
        let a = apply_dg0(&h);
        let b = apply_dg0_by_derivatives(&h);
        assert!(a.max_abs_diff(&b) <= 1e-12 * a.sup_norm());
    }

    #[test]
    fn table_examples() {
        let t = spectrum_table(2.0, 2.0 * PI, 2, 2).unwrap();
        assert_eq!(t.len(), 25);
        assert!(t.windows(2).all(|w| w[0].lambda >= w[1].lambda));
        let top: Vec<_> = t.iter().take(3).map(|e| (e.m, e.n, e.flag)).collect();
        assert!(top.iter().all(|&(m, n, f)| is_kernel_mode(m, n) && f == ModeFlag::Kernel));
        assert_eq!(t[0].multiplicity, 3);
        assert!(t.iter().skip(3).all(|e| e.lambda < 0.0));
        let e = t.iter().find(|e| e.m == 1 && e.n == 0).unwrap();
        // (0, +-2) share the eigenvalue of (+-1, 0) at r = 2
        assert!((e.lambda + 0.75).abs() < 1e-15 && e.multiplicity == 4);

        let t = spectrum_table(1.0, 2.0 * PI, 2, 2).unwrap();
        let e = t.iter().find(|e| e.m == 1 && e.n == 0).unwrap();
        assert_eq!(e.flag, ModeFlag::Neutral);

        let t = spectrum_table(0.8, 2.0 * PI, 2, 2).unwrap();
        assert_eq!(t[0].flag, ModeFlag::Unstable);
        assert!((t[0].lambda - 0.5625).abs() < 1e-14);
        assert!(spectrum_table(0.8, 2.0 * PI, 0, 2).is_err());
    }

    #[test]
    fn projection_examples() {
        let g = Grid::new(2.0 * PI, 1.0, 16, 16).unwrap();
        let p = kernel_projection(&HeightField::from_fn(&g, |_, t| 3.0 + 2.0 * t.cos()));
        assert!((p.c0 - 3.0).abs() < 1e-14 && (p.c_cos - 2.0).abs() < 1e-14 && p.c_sin.abs() < 1e-14);
        assert!(p.remainder.sup_norm() < 1e-14);

        let h = HeightField::from_fn(&g, |x, _| x.cos());
        let p = kernel_projection(&h);
        assert!(p.c0.abs() < 1e-15 && p.c_cos.abs() < 1e-15 && p.c_sin.abs() < 1e-15);
        assert!(p.remainder.max_abs_diff(&h) < 1e-15);

        let p = kernel_projection(&HeightField::from_fn(&g, |_, t| t.cos().powi(2)));
        let want = HeightField::from_fn(&g, |_, t| 0.5 * (2.0 * t).cos());
        assert!((p.c0 - 0.5).abs() < 1e-15 && p.c_cos.abs() < 1e-15 && p.c_sin.abs() < 1e-15);
        assert!(p.remainder.max_abs_diff(&want) < 1e-15);
        let again = kernel_projection(&p.remainder);
        assert!(again.c0.abs() < 1e-15 && again.c_cos.abs() < 1e-15);
    }

    #[test]
    fn propagator_examples() {
        let g = Grid::new(2.0 * PI, 2.0, 16, 16).unwrap();
        let cos_t = HeightField::from_fn(&g, |_, t| t.cos());
        assert!(linear_propagator(&cos_t, 3.0).unwrap().max_abs_diff(&cos_t) < 1e-15);
        let cos_x = HeightField::from_fn(&g, |x, _| x.cos());
        let want = cos_x.map(|v| (-0.75f64).exp() * v);
        assert!(linear_propagator(&cos_x, 1.0).unwrap().max_abs_diff(&want) < 1e-15);
        let h = HeightField::from_fn(&g, |x, t| (x + 2.0 * t).sin());
        assert!(linear_propagator(&h, 0.0).unwrap().max_abs_diff(&h) < 1e-15);
        assert!(linear_propagator(&h, -1.0).is_err());
    }
}
