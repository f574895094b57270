//! Neumann conditions `rho_x = rho_xxx = 0` at `x = 0` and `x = a`.
//!
//! A field on `[0, a]` is extended evenly to a `2a`-periodic field and run
//! through the periodic solver. Reflection symmetry is preserved by the flow,
//! so the restriction of the periodic solution solves the Neumann problem.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array2};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::flow::{FlowParams, Integrator, RunOutcome, StepInfo};
use crate::grid::{reflect_x, Grid, HeightField};

/// Allowed asymmetry for [`restrict`], relative to `max(1, sup|rho|)`.
pub const RESTRICT_TOL: f64 = 1e-10;
/// Allowed asymmetry along a Neumann run.
pub const DRIFT_TOL: f64 = 1e-8;
/// Steps between symmetry re-projections in [`run_neumann`].
pub const SYMMETRIZE_EVERY: usize = 100;
/// Number of top cosine modes used by [`check_neumann`].
const TAIL_MODES: usize = 8;

/// Samples on `[0, a]` including both ends: `Nh + 1` rows, `x_j = j a / Nh`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeumannField {
    ext: Grid,
    values: Array2<f64>,
}

impl NeumannField {
    /// `ext` is the `2a`-periodic grid the field extends to.
    pub fn new(ext: &Grid, values: Array2<f64>) -> Result<Self> {
        let expected = (ext.nx() / 2 + 1, ext.ntheta());
        if values.dim() != expected {
            return Err(Error::ShapeMismatch { expected, got: values.dim() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(NeumannField { ext: ext.clone(), values })
    }

    pub fn from_fn(ext: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nh = ext.nx() / 2;
        let values = Array2::from_shape_fn((nh + 1, ext.ntheta()), |(j, k)| f(ext.x(j), ext.theta(k)));
        NeumannField { ext: ext.clone(), values }
    }

    /// Half-domain grid for `a` with `nh` intervals, extended to `2a` with `2 nh` samples.
    pub fn extended_grid(a: f64, r: f64, nh: usize, ntheta: usize) -> Result<Grid> {
        Grid::new(2.0 * a, r, 2 * nh, ntheta)
    }

    pub fn extended(&self) -> &Grid {
        &self.ext
    }

    /// Length `a` of the restricted cylinder.
    pub fn a(&self) -> f64 {
        0.5 * self.ext.a()
    }

    pub fn nh(&self) -> usize {
        self.ext.nx() / 2
    }

    pub fn x(&self, j: usize) -> f64 {
        self.ext.x(j)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &NeumannField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Even `2a`-periodic extension: row `j` of the result is row `j` for `j <= Nh`
/// and row `2 Nh - j` otherwise.
pub fn even_extend(f: &NeumannField) -> HeightField {
    let nh = f.nh();
    let values = Array2::from_shape_fn(f.ext.shape(), |(j, k)| {
        let src = if j <= nh { j } else { 2 * nh - j };
        f.values[[src, k]]
    });
    HeightField::new(&f.ext, values).expect("finite by construction")
}

/// `max |rho - reflect_x(rho)|`.
pub fn asymmetry(rho: &HeightField) -> f64 {
    rho.max_abs_diff(&reflect_x(rho))
}

/// Samples on `[0, a]` of a reflection-symmetric periodic field.
pub fn restrict(rho: &HeightField) -> Result<NeumannField> {
    let asym = asymmetry(rho);
    if asym > RESTRICT_TOL * rho.sup_norm().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let nh = rho.grid().nx() / 2;
    Ok(NeumannField { ext: rho.grid().clone(), values: rho.values().slice(s![..=nh, ..]).to_owned() })
}

/// Boundary derivative magnitudes, maximized over `theta`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NeumannCheck {
    pub d1_0: f64,
    pub d3_0: f64,
    pub d1_a: f64,
    pub d3_a: f64,
}

impl NeumannCheck {
    pub fn max(&self) -> f64 {
        self.d1_0.max(self.d3_0).max(self.d1_a).max(self.d3_a)
    }
}

/// One-sided estimates of `f_x` and `f_xxx` at both ends.
///
/// Derivative jumps of the even extension at `x = 0` and `x = a` set the
/// algebraic tail of its cosine coefficients. With `N = 2 Nh` samples and
/// `A_j(k) = f^(j)(a) (-1)^k - f^(j)(0)`, the sampled coefficients obey
///
/// ```text
/// E_k = (1/a) [ A_1(k) (a/pi)^2 S_2(k) - A_3(k) (a/pi)^4 S_4(k) ] + smooth part
/// S_2 = (pi/N)^2 csc^2(pi k/N),  S_4 = (pi/N)^4 (csc^4(pi k/N) - (2/3) csc^2(pi k/N))
/// ```
///
/// and the four boundary values are fitted by least squares to the top
/// modes, where the smooth part of a resolved field has decayed.
pub fn check_neumann(f: &NeumannField) -> NeumannCheck {
    let ext = even_extend(f);
    let n = ext.grid().nx();
    let a = f.a();
    let modes: Vec<usize> = ((n / 2 + 1).saturating_sub(TAIL_MODES)..=n / 2).collect();
    let mut design = DMatrix::<f64>::zeros(modes.len(), 4);
    for (row, &k) in modes.iter().enumerate() {
        let csc2 = 1.0 / (PI * k as f64 / n as f64).sin().powi(2);
        let h = PI / n as f64;
        let s2 = h * h * csc2;
        let s4 = h.powi(4) * (csc2 * csc2 - 2.0 / 3.0 * csc2);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c1 = (a / PI).powi(2) * s2 / a;
        let c3 = (a / PI).powi(4) * s4 / a;
        // unknowns: f'(0), f'(a), f'''(0), f'''(a)
        design[(row, 0)] = -c1;
        design[(row, 1)] = sign * c1;
        design[(row, 2)] = c3;
        design[(row, 3)] = -sign * c3;
    }
    let scales: Vec<f64> = (0..4).map(|c| design.column(c).norm()).collect();
    for (c, &sc) in scales.iter().enumerate() {
        design.column_mut(c).scale_mut(1.0 / sc);
    }
    let svd = design.clone().svd(true, true);

    let mut out = NeumannCheck { d1_0: 0.0, d3_0: 0.0, d1_a: 0.0, d3_a: 0.0 };
    for col in ext.values().columns() {
        let rhs = DVector::from_iterator(
            modes.len(),
            modes.iter().map(|&k| {
                col.iter()
                    .enumerate()
                    .map(|(j, &v)| v * (2.0 * PI * (j * k % n) as f64 / n as f64).cos())
                    .sum::<f64>()
                    / n as f64
            }),
        );
        let sol = svd.solve(&rhs, 1e-14).expect("svd computed with u and v");
        let est: Vec<f64> = (0..4).map(|c| (sol[c] / scales[c]).abs()).collect();
        out.d1_0 = out.d1_0.max(est[0]);
        out.d1_a = out.d1_a.max(est[1]);
        out.d3_0 = out.d3_0.max(est[2]);
        out.d3_a = out.d3_a.max(est[3]);
    }
    out
}

/// A Neumann run: the periodic outcome on the extended cell plus restricted states.
#[derive(Clone, Debug)]
pub struct NeumannOutcome {
    /// Outcome of the periodic run; its series is rescaled to the half cell.
    pub outcome: RunOutcome,
    pub final_half: NeumannField,
    /// Largest `check_neumann(...).max() / sup_norm` seen at any accepted step.
    pub max_boundary_ratio: f64,
    pub max_asymmetry: f64,
}

/// What a Neumann observer sees after each accepted step.
pub struct NeumannStep<'a> {
    pub info: &'a StepInfo<'a>,
    pub half: &'a NeumannField,
    pub check: NeumannCheck,
}

/// Run the flow for `rho0` with Neumann conditions through its even extension.
pub fn run_neumann(rho0: &NeumannField, params: FlowParams) -> Result<NeumannOutcome> {
    run_neumann_with(rho0, params, |_| Ok(()))
}

pub fn run_neumann_with(
    rho0: &NeumannField,
    params: FlowParams,
    mut observer: impl FnMut(&NeumannStep) -> Result<()>,
) -> Result<NeumannOutcome> {
    let params = FlowParams { symmetrize_every: Some(SYMMETRIZE_EVERY), ..params };
    let integrator = Integrator::new(&rho0.ext, params)?;
    let ext0 = even_extend(rho0);
    let mut max_ratio: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    let mut outcome = integrator.run_with(&ext0, |info| {
        let drift = asymmetry(info.rho);
        max_asym = max_asym.max(drift);
        if drift > DRIFT_TOL {
            return Err(Error::SymmetryDrift { t: info.t, drift });
        }
        let nh = info.rho.grid().nx() / 2;
        let half = NeumannField {
            ext: info.rho.grid().clone(),
            values: info.rho.values().slice(s![..=nh, ..]).to_owned(),
        };
        let check = check_neumann(&half);
        let sup = info.rho.sup_norm();
        if sup > 0.0 {
            max_ratio = max_ratio.max(check.max() / sup);
        }
        observer(&NeumannStep { info, half: &half, check })
    })?;
    for row in &mut outcome.series {
        *row = half_cell(row);
    }
    let st = &mut outcome.final_state.stats;
    st.volume *= 0.5;
    st.area *= 0.5;
    let nh = rho0.nh();
    let final_half = NeumannField {
        ext: rho0.ext.clone(),
        values: outcome.final_state.rho.values().slice(s![..=nh, ..]).to_owned(),
    };
    Ok(NeumannOutcome { outcome, final_half, max_boundary_ratio: max_ratio, max_asymmetry: max_asym })
}

fn half_cell(row: &DiagnosticsRow) -> DiagnosticsRow {
    DiagnosticsRow {
        volume: 0.5 * row.volume,
        area: 0.5 * row.area,
        da_dt_formula: 0.5 * row.da_dt_formula,
        ..*row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext() -> Grid {
        NeumannField::extended_grid(PI, 1.5, 32, 16).unwrap()
    }

    #[test]
    fn extension_examples() {
        let g = ext();
        let f = NeumannField::from_fn(&g, |x, t| x.cos() * (1.0 + 0.5 * t.sin()));
        let e = even_extend(&f);
        let want = HeightField::from_fn(&g, |x, t| x.cos() * (1.0 + 0.5 * t.sin()));
        assert!(e.max_abs_diff(&want) < 1e-14);
        let c = even_extend(&NeumannField::from_fn(&g, |_, _| 0.7));
        assert!(c.max_abs_diff(&HeightField::constant(&g, 0.7)) < 1e-15);
        assert_eq!(asymmetry(&e), 0.0);
        assert_eq!(restrict(&e).unwrap(), f);
    }

    #[test]
    fn restrict_rejects_odd_fields() {
        let g = ext();
        let odd = HeightField::from_fn(&g, |x, t| x.sin() * t.cos());
        assert!(matches!(restrict(&odd), Err(Error::NotSymmetric { .. })));
        let cyl = crate::equilibria::cylinder_height(0.1, 0.0, 1.3, &g).unwrap();
        assert!(restrict(&cyl).is_ok());
    }

    #[test]
    fn check_examples() {
        let g = ext();
        let c = check_neumann(&NeumannField::from_fn(&g, |x, _| x.cos()));
        assert!(c.max() < 1e-8, "{c:?}");
        let c = check_neumann(&NeumannField::from_fn(&g, |_, _| 2.5));
        assert!(c.max() < 1e-8, "{c:?}");
        let c = check_neumann(&NeumannField::from_fn(&g, |x, _| x * x));
        assert!((c.d1_a - 2.0 * PI).abs() < 1e-8, "{c:?}");
        assert!(c.d1_0 < 1e-8 && c.d3_0 < 1e-6 && c.d3_a < 1e-6, "{c:?}");
    }

    #[test]
    fn constant_state_is_stationary() {
        let g = ext();
        let f = NeumannField::from_fn(&g, |_, _| 0.2);
        let params = FlowParams { t_end: 0.5, ..Default::default() };
        let out = run_neumann(&f, params).unwrap();
        assert!(out.final_half.max_abs_diff(&f) < 1e-14);
    }
}
