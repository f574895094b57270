//! Self-checks behind `sdflow verify`: each group evaluates one family of
//! identities on an `n x n` grid and reports PASS or FAIL.
//!
//! Tolerances scale with the resolution:
//!
//! | n      | equilibrium residual | dissipation rel. | volume drift |
//! |--------|----------------------|------------------|--------------|
//! | >= 32  | 1e-8                 | 1e-6             | 1e-6         |
//! | 16     | 1e-5                 | 1e-3             | 1e-6         |
//! | 8      | 1e-3                 | 1e-3             | 1e-5         |
//!
//! Spectral exactness (1e-12 relative to the operator norm), the linearization slope (>= 1.9) and the
//! symbol bound (slack 1e-10) do not depend on `n`.

use std::f64::consts::PI;
use std::fmt;

use crate::config::{random_field, Boundary};
use crate::diagnostics::{dvol_dt, volume};
use crate::equilibria::cylinder_height;
use crate::error::Result;
use crate::flow::{run, FlowParams};
use crate::geometry::SurfaceOperator;
use crate::grid::{Grid, HeightField};
use crate::linearization::{apply_dg0, dg0_multiplier, eigenvalue, is_kernel_mode, Dg0};

pub const GROUPS: [&str; 6] = ["spectral", "equilibria", "conservation", "dissipation", "linearization", "symbol"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Grid size in both directions.
    pub n: usize,
    /// Flip the sign of `DG(0)`; a negative control for the checks that use it.
    pub negate_dg0: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n: 32, negate_dg0: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub spectral_rel: f64,
    pub equilibrium: f64,
    pub dissipation_rel: f64,
    pub volume_drift: f64,
    pub area_slack: f64,
    pub slope: f64,
    pub symbol_slack: f64,
}

pub fn tolerances(n: usize) -> Tolerances {
    let (equilibrium, dissipation_rel, volume_drift) = match n {
        n if n >= 32 => (1e-8, 1e-6, 1e-6),
        n if n >= 16 => (1e-5, 1e-3, 1e-6),
        _ => (1e-3, 1e-3, 1e-5),
    };
    Tolerances {
        spectral_rel: 1e-12,
        equilibrium,
        dissipation_rel,
        volume_drift,
        area_slack: 1e-9,
        slope: 1.9,
        symbol_slack: 1e-10,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for GroupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<14} {}", self.name, self.detail)
    }
}

/// Run every group concurrently; reports come back in [`GROUPS`] order.
pub fn run_all(opts: VerifyOptions) -> Vec<GroupReport> {
    std::thread::scope(|s| {
        let handles: Vec<_> = GROUPS.iter().map(|&g| s.spawn(move || run_group(g, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("verify group panicked")).collect()
    })
}

/// Run one group by name. Evaluation errors count as failures.
pub fn run_group(name: &'static str, opts: VerifyOptions) -> GroupReport {
    let tol = tolerances(opts.n);
    let result = match name {
        "spectral" => spectral(opts, &tol),
        "equilibria" => equilibria(opts, &tol),
        "conservation" => conservation(opts, &tol),
        "dissipation" => dissipation(opts, &tol),
        "linearization" => linearization(opts, &tol),
        "symbol" => symbol(opts, &tol),
        _ => Ok((false, format!("unknown group {name:?}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    GroupReport { name, passed, detail }
}

fn dg0(h: &HeightField, opts: VerifyOptions) -> HeightField {
    let d = apply_dg0(h);
    if opts.negate_dg0 {
        d.map(|v| -v)
    } else {
        d
    }
}

/// `cos(2 pi m x / a + n theta)` sampled on `g`.
pub fn plane_wave(g: &Grid, m: i64, n: i64) -> HeightField {
    let k = 2.0 * PI * m as f64 / g.a();
    let ex: Vec<(f64, f64)> = (0..g.nx()).map(|j| (k * g.x(j)).sin_cos()).collect();
    let et: Vec<(f64, f64)> = (0..g.ntheta()).map(|l| (n as f64 * g.theta(l)).sin_cos()).collect();
    let values = ndarray::Array2::from_shape_fn(g.shape(), |(j, l)| {
        let ((sx, cx), (st, ct)) = (ex[j], et[l]);
        cx * ct - sx * st
    });
    HeightField::new(g, values).expect("finite samples")
}

fn grid(n: usize, r: f64) -> Result<Grid> {
    Grid::new(2.0 * PI, r, n, n)
}

/// Mode errors are measured against the operator norm `max |lambda|` of `DG(0)` on
/// the grid: rounding in the forward transform leaks `O(1e-16)` into every mode
/// and the largest multipliers amplify that leak.
fn spectral(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let mmax = (opts.n as i64 / 2 - 1).min(8);
    let mut worst: f64 = 0.0;
    for r in [0.8, 1.0, 1.5, 2.0] {
        let g = grid(opts.n, r)?;
        let norm = dg0_multiplier(&g).iter().fold(0.0, |m: f64, l| m.max(l.abs()));
        for m in -mmax..=mmax {
            for n in -mmax..=mmax {
                let c = plane_wave(&g, m, n);
                let lam = eigenvalue(m, n, r, g.a());
                worst = worst.max(dg0(&c, opts).max_abs_diff(&c.map(|v| lam * v)) / norm);
            }
        }
    }
    let (kernel, spurious) = null_modes(&grid(opts.n, 1.5)?, opts)?;
    let passed = worst <= tol.spectral_rel && kernel == 3 && spurious == 0;
    Ok((passed, format!("max relative mode error {worst:.2e}, kernel modes {kernel}, other null modes {spurious}")))
}

/// Count the modes `cos(m x + n theta)` below the Nyquist index that `DG(0)`
/// annihilates, split into the expected kernel and anything else.
pub fn null_modes(g: &Grid, opts: VerifyOptions) -> Result<(usize, usize)> {
    let op = Dg0::new(g);
    let tol = 1e-12 * op.norm();
    let (mx, mt) = (g.nx() as i64 / 2 - 1, g.ntheta() as i64 / 2 - 1);
    let (mut kernel, mut spurious) = (0, 0);
    // (m, n) and (-m, -n) give the same field, so each pair is applied once.
    for m in 0..=mx {
        for n in -mt..=mt {
            if m == 0 && n < 0 {
                continue;
            }
            let labels = if m == 0 && n == 0 { 1 } else { 2 };
            let d = op.apply(&plane_wave(g, m, n))?;
            let d = if opts.negate_dg0 { d.map(|v| -v) } else { d };
            if d.sup_norm() <= tol {
                if is_kernel_mode(m, n) {
                    kernel += labels;
                } else {
                    spurious += labels;
                }
            }
        }
    }
    Ok((kernel, spurious))
}

fn equilibria(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let g = grid(opts.n, 1.5)?;
    let op = SurfaceOperator::default();
    let mut worst: f64 = 0.0;
    for (y, z, rb) in [(0.1, -0.05, 1.2), (0.05, 0.0, 1.5), (0.0, 0.1, 1.6)] {
        let rho = cylinder_height(y, z, rb, &g)?;
        worst = worst.max(op.evolution_operator(&rho)?.sup_norm());
    }
    Ok((worst <= tol.equilibrium, format!("max |G| on offset cylinders {worst:.2e}")))
}

fn conservation(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let g = grid(opts.n, 1.5)?;
    let rho0 = HeightField::from_fn(&g, |x, t| 0.01 * (x.cos() * t.cos() + 0.5 * (2.0 * x).sin()));
    let op = SurfaceOperator::default();
    let rate = dvol_dt(&rho0, &op.evolution_operator(&rho0)?).abs();
    let params = FlowParams { t_end: 1.0, output_every: 1, ..Default::default() };
    let out = run(&rho0, params)?;
    let v0 = volume(&rho0);
    let a0 = out.series[0].area;
    let drift = out.series.iter().map(|s| ((s.volume - v0) / v0).abs()).fold(0.0, f64::max);
    let rise = out.series.windows(2).map(|w| w[1].area - w[0].area).fold(f64::NEG_INFINITY, f64::max);
    let passed = drift <= tol.volume_drift && rise <= tol.area_slack * a0 && rate <= 1e-12 * v0;
    Ok((passed, format!("volume drift {drift:.2e}, largest area rise {rise:.2e}, dV/dt {rate:.2e}")))
}

fn dissipation(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let g = grid(opts.n, 1.5)?;
    let op = SurfaceOperator::default();
    let mut worst: f64 = 0.0;
    let mut max_rate = f64::NEG_INFINITY;
    for seed in 0..3 {
        let f = random_field(&g, seed, 3, Boundary::Periodic);
        let rho = f.map(|v| 0.1 * v / f.sup_norm());
        let (rel, rate) = chain_rule_mismatch(&op, &rho)?;
        worst = worst.max(rel);
        max_rate = max_rate.max(rate);
    }
    let passed = worst <= tol.dissipation_rel && max_rate <= 0.0;
    Ok((passed, format!("chain rule mismatch {worst:.2e}, largest dA/dt {max_rate:.3e}")))
}

/// Relative gap between the dissipation formula and a central difference of
/// the area along `G(rho)`, and the formula value.
pub fn chain_rule_mismatch(op: &SurfaceOperator, rho: &HeightField) -> Result<(f64, f64)> {
    let h = 1e-4 / rho.grid().r();
    let g = op.evolution_operator(rho)?;
    let step = h / g.sup_norm().max(1e-300);
    let fd = (op.area(&rho.add_scaled(step, &g)?)? - op.area(&rho.add_scaled(-step, &g)?)?) / (2.0 * step);
    let formula = op.da_dt(rho)?;
    Ok(((fd - formula).abs() / formula.abs().max(1e-300), formula))
}

fn linearization(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let g = grid(opts.n, 1.5)?;
    let directions = [
        HeightField::from_fn(&g, |x, t| x.cos() * t.cos() + 0.5 * (2.0 * x).sin()),
        HeightField::from_fn(&g, |x, t| (2.0 * t).cos() + 0.3 * (x - t).sin()),
        HeightField::from_fn(&g, |x, t| (x + 2.0 * t).sin() - 0.2 * (2.0 * x).cos()),
    ];
    let mut slopes = Vec::new();
    for h in &directions {
        slopes.push(linearization_slope(&SurfaceOperator::default(), h, |h| dg0(h, opts))?);
    }
    let worst = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((worst >= tol.slope, format!("observed orders {slopes:.2?}")))
}

/// Least-squares slope of `log ||(G(eps h) - G(-eps h))/(2 eps) - L h||` against
/// `log eps` for `eps in {1e-2, 1e-3, 1e-4}`.
pub fn linearization_slope(
    op: &SurfaceOperator,
    h: &HeightField,
    lin: impl Fn(&HeightField) -> HeightField,
) -> Result<f64> {
    let lh = lin(h);
    let mut pts = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let gp = op.evolution_operator(&h.map(|v| eps * v))?;
        let gm = op.evolution_operator(&h.map(|v| -eps * v))?;
        let fd = gp.zip_with(&gm, |p, m| (p - m) / (2.0 * eps))?;
        pts.push((f64::ln(eps), fd.max_abs_diff(&lh).max(1e-300).ln()));
    }
    Ok(fit_slope(&pts))
}

/// Least-squares slope through `(x, y)` pairs.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn symbol(opts: VerifyOptions, tol: &Tolerances) -> Result<(bool, String)> {
    let g = grid(opts.n, 1.5)?;
    let op = SurfaceOperator::default();
    let mut worst = f64::INFINITY;
    let mut c1 = f64::INFINITY;
    for seed in 10..13 {
        let f = random_field(&g, seed, 3, Boundary::Periodic);
        let rho = f.map(|v| 0.3 * v / f.sup_norm());
        worst = worst.min(symbol_margin(&op, &rho, 32)?);
        c1 = c1.min(op.ellipticity_bounds(&rho)?.0);
    }
    let passed = worst >= -tol.symbol_slack && c1 > 0.0;
    Ok((passed, format!("min symbol - bound {worst:.2e}, c1 {c1:.3e}")))
}

/// Smallest `principal_symbol - symbol_lower_bound` over the grid and
/// `directions` equally spaced unit vectors.
pub fn symbol_margin(op: &SurfaceOperator, rho: &HeightField, directions: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for i in 0..directions {
        let phi = 2.0 * PI * i as f64 / directions as f64;
        let xi = [phi.cos(), phi.sin()];
        let s = op.principal_symbol(rho, xi)?;
        let b = op.symbol_lower_bound(rho, xi)?;
        worst = worst.min(s.zip_with(&b, |s, b| s - b)?.min());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tolerance_table() {
        assert_eq!(tolerances(64).equilibrium, 1e-8);
        assert_eq!(tolerances(16).equilibrium, 1e-5);
        assert!(tolerances(8).dissipation_rel > tolerances(32).dissipation_rel);
    }

    #[test]
    fn unknown_group_fails() {
        assert!(!run_group("nope", VerifyOptions::default()).passed);
    }
}
