//! Time integration of `rho_t = G(rho)`.
//!
//! The stiff flat-state part `L = DG(0)` is treated implicitly and the rest
//! explicitly. Writing `N(rho) = G(rho) - kappa L rho`, the first-order step is
//!
//! ```text
//! (1 - dt kappa lambda) rho_hat' = rho_hat + dt N_hat(rho)
//! ```
//!
//! per Fourier mode. The optional second-order scheme is the variable-step
//! semi-implicit BDF2 with the nonlinearity extrapolated from the last two
//! levels. Step sizes come from step doubling and a PI controller.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::Serialize;

use crate::diagnostics::{volume, DiagnosticsRow};
use crate::equilibria::{fit_cylinder, CylinderFit};
use crate::error::{Error, Result};
use crate::geometry::SurfaceOperator;
use crate::grid::{dealias_coeffs, reflect_x, Grid, HeightField};
use crate::linearization::dg0_multiplier;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex1,
    Bdf2,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Imex1 => 1,
            Scheme::Bdf2 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowParams {
    pub scheme: Scheme,
    pub kappa: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub tol_step: f64,
    pub tol_residual: f64,
    pub tol_fit: f64,
    pub t_end: f64,
    /// Fixed steps of `dt0` when false.
    pub adaptive: bool,
    /// Record a diagnostics row every this many accepted steps.
    pub output_every: usize,
    /// Average with the `x`-reflection every this many steps.
    pub symmetrize_every: Option<usize>,
    pub max_steps: Option<usize>,
    pub operator: SurfaceOperator,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            scheme: Scheme::Imex1,
            kappa: 1.0,
            dt0: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.1,
            tol_step: 1e-8,
            tol_residual: 1e-9,
            tol_fit: 1e-6,
            t_end: 50.0,
            adaptive: true,
            output_every: 10,
            symmetrize_every: None,
            max_steps: None,
            operator: SurfaceOperator::default(),
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt0", self.dt0),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("tol_step", self.tol_step),
            ("tol_residual", self.tol_residual),
            ("tol_fit", self.tol_fit),
            ("t_end", self.t_end),
            ("kappa", self.kappa),
            ("clearance", self.operator.clearance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(Error::InvalidParameter("dt_min exceeds dt_max".into()));
        }
        if self.output_every == 0 || self.symmetrize_every == Some(0) {
            return Err(Error::InvalidParameter("sampling strides must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub volume: f64,
    pub area: f64,
    pub min_clearance: f64,
    pub sup_norm: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub rho: HeightField,
    pub dt: f64,
    pub stats: Stats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Event {
    Converged,
    MaxTime,
    Blowup,
    MinRadiusViolation,
    StepCollapse,
}

impl Event {
    pub fn is_failure(self) -> bool {
        !matches!(self, Event::Converged | Event::MaxTime)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Event::Converged => "Converged",
            Event::MaxTime => "MaxTime",
            Event::Blowup => "Blowup",
            Event::MinRadiusViolation => "MinRadiusViolation",
            Event::StepCollapse => "StepCollapse",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub event: Event,
    pub final_state: FlowState,
    pub fit: Option<CylinderFit>,
    pub series: Vec<DiagnosticsRow>,
    pub accepted: usize,
    pub rejected: usize,
}

/// What an observer sees after every accepted step (and once for the initial state).
pub struct StepInfo<'a> {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub rho: &'a HeightField,
    /// `||G(rho)||_inf`, NaN when `G` could not be evaluated.
    pub residual: f64,
}

/// PI step-size controller for an error estimate from step doubling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepController {
    pub order: u32,
    pub tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    err_prev: f64,
}

const SAFETY: f64 = 0.95;
const GROWTH_MAX: f64 = 5.0;
const SHRINK_MIN: f64 = 0.2;

impl StepController {
    pub fn new(order: u32, tol: f64, dt_min: f64, dt_max: f64) -> Self {
        StepController { order, tol, dt_min, dt_max, err_prev: tol }
    }

    /// Next step size after a step of size `dt` with error estimate `err`.
    pub fn propose(&self, dt: f64, err: f64) -> f64 {
        adapt_dt(dt, err, self.err_prev, self.tol, self.order, self.dt_min, self.dt_max)
    }

    pub fn accept(&mut self, err: f64) {
        self.err_prev = err.max(1e-3 * self.tol);
    }
}

/// `dt * 0.95 (tol/err)^(1/(2(p+1))) (err_prev/tol)^(0.1/(p+1))`, factor in `[0.2, 5]`,
/// result in `[dt_min, dt_max]`; `err = 0` gives `dt_max`.
pub fn adapt_dt(dt: f64, err: f64, err_prev: f64, tol: f64, order: u32, dt_min: f64, dt_max: f64) -> f64 {
    if err == 0.0 {
        return dt_max;
    }
    let p1 = order as f64 + 1.0;
    let factor = SAFETY * (tol / err).powf(0.5 / p1) * (err_prev / tol).powf(0.1 / p1);
    let factor = if factor.is_finite() { factor.clamp(SHRINK_MIN, GROWTH_MAX) } else { SHRINK_MIN };
    (dt * factor).clamp(dt_min, dt_max)
}

/// One time level: physical values, spectrum, and the explicit part `N_hat`.
#[derive(Clone)]
struct Level {
    rho: HeightField,
    rho_hat: Array2<Complex64>,
    n_hat: Array2<Complex64>,
    residual: f64,
}

pub struct Integrator {
    params: FlowParams,
    /// `kappa * lambda(m, n)`.
    stiff: Array2<f64>,
    grid: Grid,
}

enum Advance {
    Accepted { next: HeightField, mid: Option<Level>, err: f64, dt: f64 },
    Rejected,
}

impl Integrator {
    pub fn new(grid: &Grid, params: FlowParams) -> Result<Self> {
        params.validate()?;
        let stiff = dg0_multiplier(grid).mapv(|l| params.kappa * l);
        Ok(Integrator { params, stiff, grid: grid.clone() })
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    /// Largest step keeping `1 - dt kappa lambda >= 1/2` for every growing mode.
    pub fn dt_bound(&self) -> f64 {
        let lmax = self.stiff.iter().cloned().fold(0.0, f64::max);
        if lmax > 0.0 {
            0.5 / lmax
        } else {
            f64::INFINITY
        }
    }

    fn filtered(&self, rho: &HeightField) -> Result<HeightField> {
        if !self.params.operator.dealias {
            return Ok(rho.clone());
        }
        let mut c = self.grid.forward(rho.values());
        dealias_coeffs(&self.grid, &mut c);
        HeightField::new(&self.grid, self.grid.inverse_real(&c))
    }

    fn level(&self, rho: HeightField) -> Result<Level> {
        let g = self.params.operator.evaluation(&rho)?;
        let (rho_hat, mut n_hat) = self.grid.forward_pair(rho.values(), g.values());
        Zip::from(&mut n_hat).and(&rho_hat).and(&self.stiff).for_each(|n, &r, &s| *n -= r * s);
        Ok(Level { residual: g.sup_norm(), rho, rho_hat, n_hat })
    }

    fn solve(&self, mut rhs: Array2<Complex64>, a0: f64, dt: f64) -> Result<HeightField> {
        Zip::from(&mut rhs).and(&self.stiff).for_each(|c, &s| *c /= a0 - dt * s);
        if self.params.operator.dealias {
            dealias_coeffs(&self.grid, &mut rhs);
        }
        HeightField::new(&self.grid, self.grid.inverse_real(&rhs))
    }

    fn step_from(&self, cur: &Level, prev: Option<(&Level, f64)>, dt: f64) -> Result<HeightField> {
        match (self.params.scheme, prev) {
            (Scheme::Bdf2, Some((prev, dt_prev))) => {
                let w = dt / dt_prev;
                let a0 = (1.0 + 2.0 * w) / (1.0 + w);
                let a1 = -(1.0 + w);
                let a2 = w * w / (1.0 + w);
                let mut rhs = Array2::zeros(cur.rho_hat.dim());
                Zip::from(&mut rhs)
                    .and(&cur.rho_hat)
                    .and(&prev.rho_hat)
                    .and(&cur.n_hat)
                    .and(&prev.n_hat)
                    .for_each(|o, &r1, &r0, &n1, &n0| {
                        *o = -r1 * a1 - r0 * a2 + (n1 * (1.0 + w) - n0 * w) * dt;
                    });
                self.solve(rhs, a0, dt)
            }
            _ => {
                let mut rhs = cur.rho_hat.clone();
                Zip::from(&mut rhs).and(&cur.n_hat).for_each(|o, &n| *o += n * dt);
                self.solve(rhs, 1.0, dt)
            }
        }
    }

    /// One first-order IMEX step from `rho`.
    pub fn imex_step(&self, rho: &HeightField, dt: f64) -> Result<HeightField> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let cur = self.level(rho.clone())?;
        let mut rhs = cur.rho_hat.clone();
        Zip::from(&mut rhs).and(&cur.n_hat).for_each(|o, &n| *o += n * dt);
        self.solve(rhs, 1.0, dt)
    }

    fn advance(&self, cur: &Level, prev: Option<(&Level, f64)>, dt: f64) -> Advance {
        if !self.params.adaptive {
            return match self.step_from(cur, prev, dt) {
                Ok(next) => Advance::Accepted { next, mid: None, err: 0.0, dt },
                Err(_) => Advance::Rejected,
            };
        }
        let trial = || -> Result<(HeightField, Level, f64)> {
            let full = self.step_from(cur, prev, dt)?;
            let h1 = self.step_from(cur, prev, 0.5 * dt)?;
            let mid = self.level(h1)?;
            let h2 = self.step_from(&mid, Some((cur, 0.5 * dt)), 0.5 * dt)?;
            let err = full.max_abs_diff(&h2);
            Ok((h2, mid, err))
        };
        match trial() {
            Ok((next, mid, err)) if err.is_finite() => Advance::Accepted { next, mid: Some(mid), err, dt },
            _ => Advance::Rejected,
        }
    }

    /// Integrate from `rho0` until an event, calling `observer` on every accepted state.
    pub fn run_with(
        &self,
        rho0: &HeightField,
        mut observer: impl FnMut(&StepInfo) -> Result<()>,
    ) -> Result<RunOutcome> {
        let p = &self.params;
        let op = &p.operator;
        if rho0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let rho = self.filtered(rho0)?;
        op.require_clearance(&rho)?;
        let mut cur = self.level(rho)?;
        let mut prev: Option<(Level, f64)> = None;
        let mut controller = StepController::new(p.scheme.order(), p.tol_step, p.dt_min, p.dt_max.min(self.dt_bound()));
        let mut dt = p.dt0.clamp(p.dt_min, controller.dt_max);
        let mut t = 0.0;
        let (mut accepted, mut rejected) = (0usize, 0usize);
        let mut series = vec![DiagnosticsRow::compute(op, t, &cur.rho, cur.residual)?];
        observer(&StepInfo { step: 0, t, dt, rho: &cur.rho, residual: cur.residual })?;
        let mut fit = None;
        let r = self.grid.r();

        let event = loop {
            if cur.residual <= p.tol_residual {
                let f = fit_cylinder(&cur.rho)?;
                if f.converged && f.residual <= p.tol_fit {
                    fit = Some(f);
                    break Event::Converged;
                }
            }
            if t >= p.t_end * (1.0 - 1e-14) || p.max_steps.is_some_and(|m| accepted >= m) {
                break Event::MaxTime;
            }
            let dt_try = dt.min(p.t_end - t);
            let prev_ref = prev.as_ref().map(|(l, h)| (l, *h));
            match self.advance(&cur, prev_ref, dt_try) {
                Advance::Accepted { err, .. } if err > p.tol_step => {
                    rejected += 1;
                    dt = controller.propose(dt_try, err).min(0.9 * dt_try);
                    if dt_try <= p.dt_min {
                        break Event::StepCollapse;
                    }
                    dt = dt.max(p.dt_min);
                }
                Advance::Rejected => {
                    if !p.adaptive {
                        break Event::Blowup;
                    }
                    rejected += 1;
                    if dt_try <= p.dt_min {
                        break Event::StepCollapse;
                    }
                    dt = (SHRINK_MIN * dt_try).max(p.dt_min);
                }
                Advance::Accepted { next, mid, err, dt: used } => {
                    t += used;
                    accepted += 1;
                    if p.adaptive {
                        let proposal = controller.propose(used, err);
                        controller.accept(err);
                        // a step shortened to land on t_end says nothing about the next one
                        dt = if used < dt { dt.max(proposal) } else { proposal };
                    }
                    let mut next = next;
                    if !next.is_finite() || next.sup_norm() > 10.0 * r {
                        cur.rho = next;
                        break Event::Blowup;
                    }
                    if r + next.min() <= op.clearance * r {
                        cur.rho = next;
                        break Event::MinRadiusViolation;
                    }
                    let symmetrize = p.symmetrize_every.is_some_and(|k| accepted % k == 0);
                    if symmetrize {
                        let refl = reflect_x(&next);
                        next = next.zip_with(&refl, |u, v| 0.5 * (u + v))?;
                    }
                    let level = match self.level(next.clone()) {
                        Ok(l) => l,
                        Err(Error::Clearance { .. }) => {
                            cur.rho = next;
                            break Event::MinRadiusViolation;
                        }
                        Err(_) => {
                            cur.rho = next;
                            break Event::Blowup;
                        }
                    };
                    let old = std::mem::replace(&mut cur, level);
                    prev = match (p.scheme, mid) {
                        (Scheme::Imex1, _) => None,
                        (Scheme::Bdf2, Some(mid)) if !symmetrize => Some((mid, 0.5 * used)),
                        (Scheme::Bdf2, None) if !symmetrize => Some((old, used)),
                        // history is stale after re-projection; restart with a one-step scheme
                        (Scheme::Bdf2, _) => None,
                    };
                    observer(&StepInfo { step: accepted, t, dt: used, rho: &cur.rho, residual: cur.residual })?;
                    if accepted % p.output_every == 0 {
                        series.push(DiagnosticsRow::compute(op, t, &cur.rho, cur.residual)?);
                    }
                }
            }
        };

        let residual = if cur.rho.is_finite() { cur.residual } else { f64::NAN };
        let last_t = series.last().map(|row| row.t);
        let stats = match DiagnosticsRow::compute(op, t, &cur.rho, residual) {
            Ok(row) => {
                if last_t != Some(t) {
                    series.push(row);
                }
                Stats {
                    volume: row.volume,
                    area: row.area,
                    min_clearance: row.min_clearance,
                    sup_norm: row.sup_norm,
                    residual: row.residual,
                }
            }
            Err(_) => Stats {
                volume: volume(&cur.rho),
                area: f64::NAN,
                min_clearance: r + cur.rho.min(),
                sup_norm: cur.rho.sup_norm(),
                residual,
            },
        };
        Ok(RunOutcome {
            event,
            final_state: FlowState { t, rho: cur.rho, dt, stats },
            fit,
            series,
            accepted,
            rejected,
        })
    }

    pub fn run(&self, rho0: &HeightField) -> Result<RunOutcome> {
        self.run_with(rho0, |_| Ok(()))
    }
}

impl SurfaceOperator {
    /// `G(rho)` as used by the integrator, rejecting non-finite results.
    pub(crate) fn evaluation(&self, rho: &HeightField) -> Result<HeightField> {
        let g = self.evolution_operator(rho)?;
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::NonFinite)
        }
    }
}

/// Run the flow from `rho0` with `params`.
pub fn run(rho0: &HeightField, params: FlowParams) -> Result<RunOutcome> {
    Integrator::new(rho0.grid(), params)?.run(rho0)
}
