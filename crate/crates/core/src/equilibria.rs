//! Offset cylinders `C(ybar, zbar, rbar)` written as height functions over `C_r`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;

use crate::diagnostics::volume;
use crate::error::{Error, Result};
use crate::grid::{to_spectral, Grid, HeightField};

pub const FIT_MAX_ITER: usize = 50;
pub const FIT_STEP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CylinderFit {
    pub ybar: f64,
    pub zbar: f64,
    pub rbar: f64,
    /// Sup-norm misfit over the whole grid.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn in_domain(ybar: f64, zbar: f64, rbar: f64) -> bool {
    rbar > 0.0 && ybar * ybar + zbar * zbar < rbar * rbar
}

#[inline]
fn profile(ybar: f64, zbar: f64, rbar: f64, r: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let w = s * ybar - c * zbar;
    c * ybar + s * zbar + (rbar * rbar - w * w).sqrt() - r
}

/// Height of the cylinder with axis through `(ybar, zbar)` and radius `rbar`.
pub fn cylinder_height(ybar: f64, zbar: f64, rbar: f64, grid: &Grid) -> Result<HeightField> {
    if !in_domain(ybar, zbar, rbar) {
        return Err(Error::CylinderDomain { offset_sq: ybar * ybar + zbar * zbar, rbar });
    }
    Ok(HeightField::from_fn(grid, |_, t| profile(ybar, zbar, rbar, grid.r(), t)))
}

/// Radius of the cylinder enclosing volume `vol` per period `a`.
pub fn predicted_radius(vol: f64, a: f64) -> Result<f64> {
    if !(vol > 0.0 && a > 0.0) {
        return Err(Error::InvalidParameter(format!("volume {vol} and period {a} must be positive")));
    }
    Ok((vol / (PI * a)).sqrt())
}

fn sup_misfit(rho: &HeightField, p: &Vector3<f64>) -> f64 {
    let grid = rho.grid();
    let prof: Vec<f64> = (0..grid.ntheta()).map(|k| profile(p[0], p[1], p[2], grid.r(), grid.theta(k))).collect();
    rho.values()
        .indexed_iter()
        .fold(0.0, |m, ((_, k), &v)| f64::max(m, (v - prof[k]).abs()))
}

/// Least-squares offset cylinder closest to `rho` by Gauss-Newton.
///
/// The model does not depend on `x`, so the full least-squares problem reduces
/// to fitting the `x`-average of `rho` as a function of `theta`.
pub fn fit_cylinder(rho: &HeightField) -> Result<CylinderFit> {
    let grid = rho.grid();
    let r = grid.r();
    let (nx, nt) = grid.shape();
    let mean_profile: Vec<f64> = (0..nt)
        .map(|k| rho.values().column(k).sum() / nx as f64)
        .collect();
    let c1 = to_spectral(rho).coeff(0, 1);
    let mut p = Vector3::new(2.0 * c1.re, -2.0 * c1.im, predicted_radius(volume(rho), grid.a())?);
    if !in_domain(p[0], p[1], p[2]) {
        p[0] = 0.0;
        p[1] = 0.0;
    }

    let thetas: Vec<(f64, f64)> = (0..nt).map(|k| grid.theta(k).sin_cos()).collect();
    let sum_sq = |p: &Vector3<f64>| -> f64 {
        thetas
            .iter()
            .zip(&mean_profile)
            .map(|(&(s, c), &y)| {
                let w = s * p[0] - c * p[1];
                let e = c * p[0] + s * p[1] + (p[2] * p[2] - w * w).sqrt() - r - y;
                e * e
            })
            .sum()
    };

    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITER {
        iterations += 1;
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for (&(s, c), &y) in thetas.iter().zip(&mean_profile) {
            let w = s * p[0] - c * p[1];
            let root = (p[2] * p[2] - w * w).sqrt();
            let res = c * p[0] + s * p[1] + root - r - y;
            let jac = Vector3::new(c - w * s / root, s + w * c / root, p[2] / root);
            jtj += jac * jac.transpose();
            jtr += jac * res;
        }
        let Some(delta) = jtj.lu().solve(&(-jtr)) else {
            break;
        };
        let current = sum_sq(&p);
        let mut step = delta;
        let mut next = p + step;
        let mut halvings = 0;
        while !(in_domain(next[0], next[1], next[2]) && sum_sq(&next) <= current * (1.0 + 1e-12) + 1e-300)
            && halvings < 40
        {
            step /= 2.0;
            next = p + step;
            halvings += 1;
        }
        if halvings == 40 {
            converged = step.amax() <= FIT_STEP_TOL * p.amax().max(1.0);
            break;
        }
        p = next;
        if step.amax() <= FIT_STEP_TOL * p.amax().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(CylinderFit {
        ybar: p[0],
        zbar: p[1],
        rbar: p[2],
        residual: sup_misfit(rho, &p),
        iterations,
        converged,
    })
}

/// Sample the circle equation `((r+rho) cos t - ybar)^2 + ((r+rho) sin t - zbar)^2 - rbar^2`.
pub fn circle_equation_defect(rho: &HeightField, ybar: f64, zbar: f64, rbar: f64) -> HeightField {
    let grid = rho.grid();
    let out = Array2::from_shape_fn(grid.shape(), |(j, k)| {
        let rr = grid.r() + rho.get(j, k);
        let (s, c) = grid.theta(k).sin_cos();
        (rr * c - ybar).powi(2) + (rr * s - zbar).powi(2) - rbar * rbar
    });
    HeightField::from_raw(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: f64) -> Grid {
        Grid::new(2.0 * PI, r, 32, 64).unwrap()
    }

    #[test]
    fn height_examples() {
        let g = grid(1.5);
        assert!(cylinder_height(0.0, 0.0, 1.5, &g).unwrap().sup_norm() < 1e-15);
        let h = cylinder_height(0.0, 0.0, 1.9, &g).unwrap();
        assert!(h.max_abs_diff(&HeightField::constant(&g, 0.4)) < 1e-15);
        let h = cylinder_height(0.1, -0.05, 1.3, &g).unwrap();
        assert!(circle_equation_defect(&h, 0.1, -0.05, 1.3).sup_norm() < 1e-12);
        assert!(matches!(cylinder_height(1.0, 1.0, 1.3, &g), Err(Error::CylinderDomain { .. })));
    }

    #[test]
    fn radius_examples() {
        let a = 2.0 * PI;
        assert!((predicted_radius(PI * 1.7 * 1.7 * a, a).unwrap() - 1.7).abs() < 1e-15);
        assert!((predicted_radius(8.0 * PI * PI, a).unwrap() - 2.0).abs() < 1e-15);
        let g = grid(1.5);
        let h = cylinder_height(0.1, -0.05, 1.3, &g).unwrap();
        assert!((predicted_radius(volume(&h), a).unwrap() - 1.3).abs() < 1e-10);
        assert!(predicted_radius(0.0, a).is_err());
    }

    #[test]
    fn fit_examples() {
        let g = grid(1.5);
        let h = cylinder_height(0.1, -0.05, 1.3, &g).unwrap();
        let f = fit_cylinder(&h).unwrap();
        assert!(f.converged);
        assert!((f.ybar - 0.1).abs() < 1e-10 && (f.zbar + 0.05).abs() < 1e-10 && (f.rbar - 1.3).abs() < 1e-10);
        assert!(f.residual <= 1e-10);

        let f = fit_cylinder(&HeightField::zeros(&g)).unwrap();
        assert!(f.ybar.abs() < 1e-15 && f.zbar.abs() < 1e-15 && (f.rbar - 1.5).abs() < 1e-15);
        assert!(f.residual < 1e-15);

        let h = HeightField::from_fn(&g, |x, _| 0.01 * x.cos());
        let f = fit_cylinder(&h).unwrap();
        assert!((f.rbar - 1.5).abs() < 1e-4);
        assert!((f.residual - 0.01).abs() < 1e-4);
    }
}
