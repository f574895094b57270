//! Enclosed volume, surface area and the area dissipation rate over one period cell.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::SurfaceOperator;
use crate::grid::HeightField;

/// `(1/2) int (r + rho)^2 dtheta dx` by the periodic trapezoid rule.
pub fn volume(rho: &HeightField) -> f64 {
    let grid = rho.grid();
    let r = grid.r();
    0.5 * grid.cell_area() * rho.values().iter().map(|&v| (r + v) * (r + v)).sum::<f64>()
}

/// `int (r + rho) rho_t dtheta dx`.
pub fn dvol_dt(rho: &HeightField, rhodot: &HeightField) -> f64 {
    let grid = rho.grid();
    let r = grid.r();
    let s: f64 = rho.values().iter().zip(rhodot.values()).map(|(&p, &d)| (r + p) * d).sum();
    s * grid.cell_area()
}

impl SurfaceOperator {
    /// `int sqrt(gdet) dtheta dx`.
    pub fn area(&self, rho: &HeightField) -> Result<f64> {
        let gdet = self.metric_det(rho)?;
        Ok(rho.grid().cell_area() * gdet.values().iter().map(|g| g.sqrt()).sum::<f64>())
    }

    /// Rate of change of the area along the flow, `-int Q(H_x, H_theta) / sqrt(gdet)` with
    /// `Q = ((r+rho)^2 + rho_t^2) H_x^2 - 2 rho_x rho_t H_x H_t + (1 + rho_x^2) H_t^2`.
    pub fn da_dt(&self, rho: &HeightField) -> Result<f64> {
        self.dissipation(rho, true)
    }

    /// `-int ((r+rho)^2 H_x^2 + H_theta^2) / sqrt(gdet)`, an upper bound for [`Self::da_dt`].
    pub fn da_dt_bound(&self, rho: &HeightField) -> Result<f64> {
        self.dissipation(rho, false)
    }

    fn dissipation(&self, rho: &HeightField, full: bool) -> Result<f64> {
        self.require_clearance(rho)?;
        let cf = self.curvature_fields(rho);
        let jet = &cf.jet;
        let mut s = 0.0;
        for ((j, k), &rr) in jet.rr.indexed_iter() {
            let (px, pt) = (jet.px[[j, k]], jet.pt[[j, k]]);
            let (hx, ht) = (cf.hx[[j, k]], cf.ht[[j, k]]);
            let gdet = rr * rr * (1.0 + px * px) + pt * pt;
            let q = if full {
                (rr * rr + pt * pt) * hx * hx - 2.0 * px * pt * hx * ht + (1.0 + px * px) * ht * ht
            } else {
                rr * rr * hx * hx + ht * ht
            };
            s += q / gdet.sqrt();
        }
        Ok(-s * rho.grid().cell_area())
    }
}

pub fn area(rho: &HeightField) -> Result<f64> {
    SurfaceOperator::default().area(rho)
}

pub fn da_dt(rho: &HeightField) -> Result<f64> {
    SurfaceOperator::default().da_dt(rho)
}

/// One sample of the diagnostic time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub volume: f64,
    pub area: f64,
    pub da_dt_formula: f64,
    pub min_clearance: f64,
    pub sup_norm: f64,
    pub residual: f64,
}

impl DiagnosticsRow {
    pub const HEADER: &'static str = "t,volume,area,dA_dt_formula,min_clearance,sup_norm,residual";

    /// `residual` is `||G(rho)||_inf`, passed in since the caller usually has it already.
    pub fn compute(op: &SurfaceOperator, t: f64, rho: &HeightField, residual: f64) -> Result<Self> {
        Ok(DiagnosticsRow {
            t,
            volume: volume(rho),
            area: op.area(rho)?,
            da_dt_formula: op.da_dt(rho)?,
            min_clearance: rho.grid().r() + rho.min(),
            sup_norm: rho.sup_norm(),
            residual,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t, self.volume, self.area, self.da_dt_formula, self.min_clearance, self.sup_norm, self.residual
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn volume_and_area_examples() {
        let a = 2.0 * PI;
        let g = Grid::new(a, 2.0, 16, 16).unwrap();
        let zero = HeightField::zeros(&g);
        assert!((volume(&zero) - 8.0 * PI * PI).abs() < 1e-12);
        assert!((area(&zero).unwrap() - 2.0 * PI * 2.0 * a).abs() < 1e-12);
        let c = HeightField::constant(&g, 0.3);
        assert!((volume(&c) - PI * 2.3 * 2.3 * a).abs() < 1e-12);
        assert!((area(&c).unwrap() - 2.0 * PI * 2.3 * a).abs() < 1e-12);
    }

    #[test]
    fn rates_examples() {
        let g = Grid::new(2.0 * PI, 1.0, 16, 16).unwrap();
        let zero = HeightField::zeros(&g);
        let one = HeightField::constant(&g, 1.0);
        assert!((dvol_dt(&zero, &one) - 2.0 * PI * 2.0 * PI).abs() < 1e-12);
        assert_eq!(dvol_dt(&one, &zero), 0.0);
        assert!(da_dt(&HeightField::constant(&g, 0.2)).unwrap().abs() < 1e-25);
        let rho = HeightField::from_fn(&g, |x, t| 0.1 * x.cos() * t.sin());
        let d = da_dt(&rho).unwrap();
        assert!(d < 0.0);
        assert!(d <= SurfaceOperator::default().da_dt_bound(&rho).unwrap() + 1e-10);
    }

    #[test]
    fn csv_row_round_trips() {
        let row = DiagnosticsRow {
            t: 0.1,
            volume: PI,
            area: 1.0 / 3.0,
            da_dt_formula: -1e-300,
            min_clearance: 2.0,
            sup_norm: 0.0,
            residual: 7.25e-11,
        };
        let parsed: Vec<f64> = row.to_csv().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1, PI, 1.0 / 3.0, -1e-300, 2.0, 0.0, 7.25e-11]);
    }
}
