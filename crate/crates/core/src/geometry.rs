//! Geometry of the graph surface `Gamma(rho) = {p + rho(p) nu(p)}` over the
//! reference cylinder and the surface diffusion operator `G(rho)`.
//!
//! With `R = r + rho` the induced metric is
//!
//! ```text
//! g11 = 1 + rho_x^2,  g12 = rho_x rho_theta,  g22 = R^2 + rho_theta^2
//! gdet = R^2 (1 + rho_x^2) + rho_theta^2
//! ```
//!
//! and `G(rho) = (1/R) { d_x[(g22 H_x - g12 H_theta)/sqrt(gdet)]
//!                     + d_theta[(g11 H_theta - g12 H_x)/sqrt(gdet)] }`.
//!
//! Derivatives are spectral; products are formed pointwise. With dealiasing
//! enabled, the input, the curvature and the two fluxes are truncated to the
//! two-thirds band before they are differentiated. The final division by `R`
//! is left unfiltered so that `(r + rho) G(rho)` is an exact divergence and the
//! enclosed volume is conserved to rounding for band-limited `rho`.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dealias_coeffs, derivative_coeffs, Grid, HeightField};

/// Number of unit directions used by [`SurfaceOperator::ellipticity_bounds`].
pub const SYMBOL_DIRECTIONS: usize = 64;

/// Evaluation options shared by all geometric operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceOperator {
    /// Apply the two-thirds rule to products.
    pub dealias: bool,
    /// Required clearance from the axis as a fraction of `r`: `rho > eps - r`
    /// with `eps = clearance * r`.
    pub clearance: f64,
}

impl Default for SurfaceOperator {
    fn default() -> Self {
        SurfaceOperator { dealias: true, clearance: 1e-3 }
    }
}

/// Pointwise geometric fields of one height function.
#[derive(Clone, Debug)]
pub struct GeometryBundle {
    pub gdet: HeightField,
    pub mean_curvature: HeightField,
    pub g11: HeightField,
    pub g12: HeightField,
    pub g22: HeightField,
    pub ii11: HeightField,
    pub ii12: HeightField,
    pub ii22: HeightField,
    pub derivs: Derivatives,
}

/// All spectral derivatives `d_x^i d_theta^j rho` with `i + j <= 4`.
#[derive(Clone, Debug)]
pub struct Derivatives {
    fields: Vec<HeightField>,
}

impl Derivatives {
    fn slot(bx: usize, bt: usize) -> usize {
        let order = bx + bt;
        order * (order + 1) / 2 + bt
    }

    pub fn get(&self, bx: usize, bt: usize) -> Result<&HeightField> {
        if bx + bt > 4 {
            return Err(Error::DerivativeOrder(bx + bt));
        }
        Ok(&self.fields[Self::slot(bx, bt)])
    }
}

/// The five fourth-order coefficients of the quasilinear part `A(rho)`.
#[derive(Clone, Debug)]
pub struct PrincipalCoefficients {
    pub b40: HeightField,
    pub b31: HeightField,
    pub b22: HeightField,
    pub b13: HeightField,
    pub b04: HeightField,
}

/// Third-order coefficients of `A(rho)`; they depend on derivatives up to order two.
#[derive(Clone, Debug)]
pub struct ThirdOrderCoefficients {
    pub b30: HeightField,
    pub b21: HeightField,
    pub b12: HeightField,
    pub b03: HeightField,
}

/// `G(rho) = -A(rho) rho + F(rho)` with `A(rho) rho = sum_{|beta| = 3,4} b_beta d^beta rho`.
#[derive(Clone, Debug)]
pub struct QuasilinearSplit {
    pub principal: PrincipalCoefficients,
    pub third: ThirdOrderCoefficients,
    pub a_rho: HeightField,
    pub remainder: HeightField,
}

/// Filtered height function and its derivatives up to second order.
pub(crate) struct SecondJet {
    pub rr: Array2<f64>,
    pub px: Array2<f64>,
    pub pt: Array2<f64>,
    pub pxx: Array2<f64>,
    pub pxt: Array2<f64>,
    pub ptt: Array2<f64>,
}

/// Gradient of the curvature, plus the jet it came from.
pub(crate) struct CurvatureFields {
    pub jet: SecondJet,
    pub hx: Array2<f64>,
    pub ht: Array2<f64>,
}

#[inline]
fn metric(rr: f64, px: f64, pt: f64) -> (f64, f64, f64, f64) {
    let g11 = 1.0 + px * px;
    let g12 = px * pt;
    let g22 = rr * rr + pt * pt;
    (g11, g12, g22, rr * rr * g11 + pt * pt)
}

#[inline]
fn curvature_at(rr: f64, px: f64, pt: f64, pxx: f64, pxt: f64, ptt: f64) -> f64 {
    let (g11, g12, g22, gdet) = metric(rr, px, pt);
    let sg = gdet.sqrt();
    (pt * pt - rr * (g22 * pxx + g11 * ptt - 2.0 * g12 * pxt)) / (gdet * sg) + 1.0 / sg
}

/// Third-order coefficients `(b30, b21, b12, b03)` at one point.
///
/// Obtained by expanding the evolution operator symbolically and collecting
/// the coefficients of the third derivatives; they are affine in the second
/// derivatives.
#[inline]
fn third_order_at(rr: f64, p: f64, q: f64, rxx: f64, rxt: f64, rtt: f64) -> [f64; 4] {
    let (p2, q2, r2) = (p * p, q * q, rr * rr);
    let gdet = p2 * r2 + q2 + r2;
    let g3 = gdet * gdet * gdet;
    let s = q2 + r2;
    let a1 = 3.0 * p2 * q2 * r2 + p2 * r2 * r2 - 2.0 * q2 * q2 - q2 * r2 + r2 * r2;
    let a2 = 4.0 * p2 * r2 - q2 - r2;
    let a3 = 2.0 * p2 * p2 * r2 - 3.0 * p2 * q2 + p2 * r2 - q2 - r2;
    let a4 = p2 * r2 - 4.0 * q2 + r2;
    let b30 = (4.0 * q * s * a2 * rxt - 10.0 * p * r2 * s * s * rxx - 2.0 * p * a1 * rtt
        - 2.0 * p * rr * (p2 * q2 * r2 - p2 * r2 * r2 - 4.0 * q2 * q2 - 5.0 * q2 * r2 - r2 * r2))
        / g3;
    let b21 = (-12.0 * p * rr * a1 * rxt
        + 6.0 * q * rr * s * a2 * rxx
        + 6.0 * q * rr * a3 * rtt
        + 2.0 * q
            * (2.0 * p2 * p2 * r2 * r2 - 11.0 * p2 * q2 * r2 + p2 * r2 * r2 + 2.0 * q2 * q2 + q2 * r2
                - r2 * r2))
        / (rr * g3);
    let b12 = (12.0 * q * rr * a3 * rxt
        - 6.0 * p * rr * (p2 + 1.0) * a4 * rtt
        - 6.0 * p * rr * a1 * rxx
        - 2.0 * p
            * (p2 * p2 * r2 * r2 - 10.0 * p2 * q2 * r2 + 2.0 * p2 * r2 * r2 + 4.0 * q2 * q2
                - 10.0 * q2 * r2
                + r2 * r2))
        / (rr * g3);
    let b03 = (-10.0 * q * rr * (p2 + 1.0) * (p2 + 1.0) * rtt
        - 4.0 * p * rr * (p2 + 1.0) * a4 * rxt
        + 2.0 * q * rr * a3 * rxx
        - 2.0 * q * (p2 + 1.0) * (3.0 * p2 * r2 - 2.0 * q2 + 3.0 * r2))
        / (rr * g3);
    [b30, b21, b12, b03]
}

impl SurfaceOperator {
    pub fn new(dealias: bool) -> Self {
        SurfaceOperator { dealias, ..Default::default() }
    }

    fn require_positive(rho: &HeightField) -> Result<()> {
        let min_radius = rho.grid().r() + rho.min();
        if min_radius > 0.0 {
            Ok(())
        } else {
            Err(Error::Clearance { min_radius, required: 0.0 })
        }
    }

    /// Enforce `min(r + rho) > clearance * r`.
    pub fn require_clearance(&self, rho: &HeightField) -> Result<()> {
        let r = rho.grid().r();
        let min_radius = r + rho.min();
        let required = self.clearance * r;
        if min_radius > required {
            Ok(())
        } else {
            Err(Error::Clearance { min_radius, required })
        }
    }

    fn spectrum(&self, grid: &Grid, values: &Array2<f64>) -> Array2<Complex64> {
        let mut c = grid.forward(values);
        if self.dealias {
            dealias_coeffs(grid, &mut c);
        }
        c
    }

    fn deriv(grid: &Grid, c: &Array2<Complex64>, bx: usize, bt: usize) -> Array2<f64> {
        grid.inverse_real(&derivative_coeffs(grid, c, bx, bt))
    }

    fn spectrum_pair(
        &self,
        grid: &Grid,
        u: &Array2<f64>,
        v: &Array2<f64>,
    ) -> (Array2<Complex64>, Array2<Complex64>) {
        let (mut cu, mut cv) = grid.forward_pair(u, v);
        if self.dealias {
            dealias_coeffs(grid, &mut cu);
            dealias_coeffs(grid, &mut cv);
        }
        (cu, cv)
    }

    /// Two derivatives of one spectrum, back in physical space.
    fn deriv_pair(grid: &Grid, c: &Array2<Complex64>, a: (usize, usize), b: (usize, usize)) -> (Array2<f64>, Array2<f64>) {
        grid.inverse_real_pair(&derivative_coeffs(grid, c, a.0, a.1), &derivative_coeffs(grid, c, b.0, b.1))
    }

    pub(crate) fn second_jet(&self, rho: &HeightField) -> SecondJet {
        let grid = rho.grid();
        let c = self.spectrum(grid, rho.values());
        let (rho_f, px) = if self.dealias {
            Self::deriv_pair(grid, &c, (0, 0), (1, 0))
        } else {
            (rho.values().clone(), Self::deriv(grid, &c, 1, 0))
        };
        let (pt, pxx) = Self::deriv_pair(grid, &c, (0, 1), (2, 0));
        let (pxt, ptt) = Self::deriv_pair(grid, &c, (1, 1), (0, 2));
        SecondJet { rr: rho_f.mapv(|v| grid.r() + v), px, pt, pxx, pxt, ptt }
    }

    fn curvature_from_jet(jet: &SecondJet) -> Array2<f64> {
        let mut h = Array2::zeros(jet.rr.dim());
        for ((j, k), v) in h.indexed_iter_mut() {
            *v = curvature_at(
                jet.rr[[j, k]],
                jet.px[[j, k]],
                jet.pt[[j, k]],
                jet.pxx[[j, k]],
                jet.pxt[[j, k]],
                jet.ptt[[j, k]],
            );
        }
        h
    }

    pub(crate) fn curvature_fields(&self, rho: &HeightField) -> CurvatureFields {
        let grid = rho.grid();
        let jet = self.second_jet(rho);
        let h = Self::curvature_from_jet(&jet);
        let ch = self.spectrum(grid, &h);
        let (hx, ht) = Self::deriv_pair(grid, &ch, (1, 0), (0, 1));
        CurvatureFields { jet, hx, ht }
    }

    /// `d_x[(g22 f_x - g12 f_t)/sqrt(gdet)] + d_t[(g11 f_t - g12 f_x)/sqrt(gdet)]`.
    fn divergence(&self, grid: &Grid, jet: &SecondJet, fx: &Array2<f64>, ft: &Array2<f64>) -> Array2<f64> {
        let shape = jet.rr.dim();
        let mut flux_x = Array2::zeros(shape);
        let mut flux_t = Array2::zeros(shape);
        for ((j, k), &rr) in jet.rr.indexed_iter() {
            let (g11, g12, g22, gdet) = metric(rr, jet.px[[j, k]], jet.pt[[j, k]]);
            let sg = gdet.sqrt();
            let (fx, ft) = (fx[[j, k]], ft[[j, k]]);
            flux_x[[j, k]] = (g22 * fx - g12 * ft) / sg;
            flux_t[[j, k]] = (g11 * ft - g12 * fx) / sg;
        }
        let (c1, c2) = self.spectrum_pair(grid, &flux_x, &flux_t);
        let mut div = derivative_coeffs(grid, &c1, 1, 0);
        Zip::from(&mut div).and(&derivative_coeffs(grid, &c2, 0, 1)).for_each(|a, &b| *a += b);
        grid.inverse_real(&div)
    }

    /// `gdet = (r + rho)^2 (1 + rho_x^2) + rho_theta^2`.
    pub fn metric_det(&self, rho: &HeightField) -> Result<HeightField> {
        Self::require_positive(rho)?;
        let jet = self.second_jet(rho);
        let mut out = Array2::zeros(jet.rr.dim());
        Zip::from(&mut out).and(&jet.rr).and(&jet.px).and(&jet.pt).for_each(|o, &rr, &px, &pt| {
            *o = metric(rr, px, pt).3;
        });
        Ok(HeightField::from_raw(rho.grid(), out))
    }

    /// Mean curvature (sum of principal curvatures, outward normal), `1/r` on `C_r`.
    pub fn mean_curvature(&self, rho: &HeightField) -> Result<HeightField> {
        Self::require_positive(rho)?;
        let jet = self.second_jet(rho);
        Ok(HeightField::from_raw(rho.grid(), Self::curvature_from_jet(&jet)))
    }

    /// Laplace-Beltrami operator of `Gamma(rho)` applied to `f`.
    pub fn surface_laplacian(&self, rho: &HeightField, f: &HeightField) -> Result<HeightField> {
        Self::require_positive(rho)?;
        if rho.grid() != f.grid() {
            return Err(Error::GridMismatch);
        }
        let grid = rho.grid();
        let jet = self.second_jet(rho);
        let cf = self.spectrum(grid, f.values());
        let (fx, ft) = Self::deriv_pair(grid, &cf, (1, 0), (0, 1));
        let mut out = self.divergence(grid, &jet, &fx, &ft);
        Zip::from(&mut out).and(&jet.rr).and(&jet.px).and(&jet.pt).for_each(|o, &rr, &px, &pt| {
            *o /= metric(rr, px, pt).3.sqrt();
        });
        Ok(HeightField::from_raw(grid, out))
    }

    /// The surface diffusion operator `G(rho)`, so that the flow reads `rho_t = G(rho)`.
    pub fn evolution_operator(&self, rho: &HeightField) -> Result<HeightField> {
        self.require_clearance(rho)?;
        let grid = rho.grid();
        let cf = self.curvature_fields(rho);
        let mut out = self.divergence(grid, &cf.jet, &cf.hx, &cf.ht);
        Zip::from(&mut out).and(&cf.jet.rr).for_each(|o, &rr| *o /= rr);
        Ok(HeightField::from_raw(grid, out))
    }

    /// Metric, curvature and the cached derivatives of `rho`.
    pub fn bundle(&self, rho: &HeightField) -> Result<GeometryBundle> {
        Self::require_positive(rho)?;
        let grid = rho.grid();
        let c = self.spectrum(grid, rho.values());
        let mut fields = Vec::with_capacity(15);
        for order in 0..=4 {
            for bt in 0..=order {
                let bx = order - bt;
                let v = if order == 0 && !self.dealias {
                    rho.values().clone()
                } else {
                    Self::deriv(grid, &c, bx, bt)
                };
                fields.push(HeightField::from_raw(grid, v));
            }
        }
        let derivs = Derivatives { fields };
        let shape = grid.shape();
        let mut out: Vec<Array2<f64>> = (0..8).map(|_| Array2::zeros(shape)).collect();
        let d = |bx, bt| derivs.get(bx, bt).expect("order <= 4").values();
        for j in 0..shape.0 {
            for k in 0..shape.1 {
                let rr = grid.r() + d(0, 0)[[j, k]];
                let (px, pt) = (d(1, 0)[[j, k]], d(0, 1)[[j, k]]);
                let (pxx, pxt, ptt) = (d(2, 0)[[j, k]], d(1, 1)[[j, k]], d(0, 2)[[j, k]]);
                let (g11, g12, g22, gdet) = metric(rr, px, pt);
                let sg = gdet.sqrt();
                let vals = [
                    gdet,
                    curvature_at(rr, px, pt, pxx, pxt, ptt),
                    g11,
                    g12,
                    g22,
                    rr * pxx / sg,
                    (rr * pxt - px * pt) / sg,
                    (rr * (ptt - rr) - 2.0 * pt * pt) / sg,
                ];
                for (o, v) in out.iter_mut().zip(vals) {
                    o[[j, k]] = v;
                }
            }
        }
        let mut it = out.into_iter().map(|v| HeightField::from_raw(grid, v));
        let mut next = || it.next().expect("eight fields");
        Ok(GeometryBundle {
            gdet: next(),
            mean_curvature: next(),
            g11: next(),
            g12: next(),
            g22: next(),
            ii11: next(),
            ii12: next(),
            ii22: next(),
            derivs,
        })
    }

    /// `b_(4,0) ... b_(0,4)` of the quasilinear part.
    pub fn principal_coefficients(&self, rho: &HeightField) -> Result<PrincipalCoefficients> {
        self.require_clearance(rho)?;
        let jet = self.second_jet(rho);
        let shape = jet.rr.dim();
        let mut b: [Array2<f64>; 5] = std::array::from_fn(|_| Array2::zeros(shape));
        for ((j, k), &rr) in jet.rr.indexed_iter() {
            let (g11, g12, g22, gdet) = metric(rr, jet.px[[j, k]], jet.pt[[j, k]]);
            let g2 = gdet * gdet;
            b[0][[j, k]] = g22 * g22 / g2;
            b[1][[j, k]] = -4.0 * g12 * g22 / g2;
            b[2][[j, k]] = (2.0 * g22 * g11 + 4.0 * g12 * g12) / g2;
            b[3][[j, k]] = -4.0 * g12 * g11 / g2;
            b[4][[j, k]] = g11 * g11 / g2;
        }
        let grid = rho.grid();
        let [b40, b31, b22, b13, b04] = b.map(|v| HeightField::from_raw(grid, v));
        Ok(PrincipalCoefficients { b40, b31, b22, b13, b04 })
    }

    pub fn third_order_coefficients(&self, rho: &HeightField) -> Result<ThirdOrderCoefficients> {
        self.require_clearance(rho)?;
        let jet = self.second_jet(rho);
        let shape = jet.rr.dim();
        let mut b: [Array2<f64>; 4] = std::array::from_fn(|_| Array2::zeros(shape));
        for ((j, k), &rr) in jet.rr.indexed_iter() {
            let vals = third_order_at(
                rr,
                jet.px[[j, k]],
                jet.pt[[j, k]],
                jet.pxx[[j, k]],
                jet.pxt[[j, k]],
                jet.ptt[[j, k]],
            );
            for (o, v) in b.iter_mut().zip(vals) {
                o[[j, k]] = v;
            }
        }
        let grid = rho.grid();
        let [b30, b21, b12, b03] = b.map(|v| HeightField::from_raw(grid, v));
        Ok(ThirdOrderCoefficients { b30, b21, b12, b03 })
    }

    /// Split `G(rho) = -A(rho) rho + F(rho)`, with `F` defined as `G + A(rho) rho`.
    pub fn quasilinear_split(&self, rho: &HeightField) -> Result<QuasilinearSplit> {
        let principal = self.principal_coefficients(rho)?;
        let third = self.third_order_coefficients(rho)?;
        let g = self.evolution_operator(rho)?;
        let grid = rho.grid();
        let c = self.spectrum(grid, rho.values());
        let terms: [(&HeightField, usize, usize); 9] = [
            (&principal.b40, 4, 0),
            (&principal.b31, 3, 1),
            (&principal.b22, 2, 2),
            (&principal.b13, 1, 3),
            (&principal.b04, 0, 4),
            (&third.b30, 3, 0),
            (&third.b21, 2, 1),
            (&third.b12, 1, 2),
            (&third.b03, 0, 3),
        ];
        let mut a_rho = Array2::zeros(grid.shape());
        for (coef, bx, bt) in terms {
            let d = Self::deriv(grid, &c, bx, bt);
            Zip::from(&mut a_rho).and(coef.values()).and(&d).for_each(|o, &b, &d| *o += b * d);
        }
        let remainder = &a_rho + g.values();
        Ok(QuasilinearSplit {
            principal,
            third,
            a_rho: HeightField::from_raw(grid, a_rho),
            remainder: HeightField::from_raw(grid, remainder),
        })
    }

    /// `sum_{j+k=4} b_(j,k) xi_1^j xi_2^k` at every grid point.
    pub fn principal_symbol(&self, rho: &HeightField, xi: [f64; 2]) -> Result<HeightField> {
        let b = self.principal_coefficients(rho)?;
        Ok(symbol_from_coefficients(&b, xi))
    }

    /// `(1/gdet^2) (g22 xi_1^2 + g11 xi_2^2 - 2 g12 xi_1 xi_2)^2`, the factored symbol.
    pub fn symbol_quadratic_form(&self, rho: &HeightField, xi: [f64; 2]) -> Result<HeightField> {
        self.pointwise_symbol(rho, |rr, px, pt| {
            let (g11, g12, g22, gdet) = metric(rr, px, pt);
            let q = g22 * xi[0] * xi[0] + g11 * xi[1] * xi[1] - 2.0 * g12 * xi[0] * xi[1];
            q * q / (gdet * gdet)
        })
    }

    /// `(1/gdet^2) ((r + rho)^2 xi_1^2 + xi_2^2)^2`, the uniform lower bound of the symbol.
    pub fn symbol_lower_bound(&self, rho: &HeightField, xi: [f64; 2]) -> Result<HeightField> {
        self.pointwise_symbol(rho, |rr, px, pt| {
            let gdet = metric(rr, px, pt).3;
            let q = rr * rr * xi[0] * xi[0] + xi[1] * xi[1];
            q * q / (gdet * gdet)
        })
    }

    fn pointwise_symbol(&self, rho: &HeightField, f: impl Fn(f64, f64, f64) -> f64) -> Result<HeightField> {
        self.require_clearance(rho)?;
        let jet = self.second_jet(rho);
        let mut out = Array2::zeros(jet.rr.dim());
        Zip::from(&mut out).and(&jet.rr).and(&jet.px).and(&jet.pt).for_each(|o, &rr, &px, &pt| {
            *o = f(rr, px, pt);
        });
        Ok(HeightField::from_raw(rho.grid(), out))
    }

    /// Extremes of the principal symbol over the grid and
    /// [`SYMBOL_DIRECTIONS`] equally spaced unit directions.
    pub fn ellipticity_bounds(&self, rho: &HeightField) -> Result<(f64, f64)> {
        let b = self.principal_coefficients(rho)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..SYMBOL_DIRECTIONS {
            let phi = 2.0 * PI * i as f64 / SYMBOL_DIRECTIONS as f64;
            let s = symbol_from_coefficients(&b, [phi.cos(), phi.sin()]);
            lo = lo.min(s.min());
            hi = hi.max(s.max());
        }
        Ok((lo, hi))
    }

    /// Normal velocity `V = (r + rho) rho_t / sqrt(gdet)` of the moving surface.
    pub fn normal_velocity(&self, rho: &HeightField, rhodot: &HeightField) -> Result<HeightField> {
        Self::require_positive(rho)?;
        if rho.grid() != rhodot.grid() {
            return Err(Error::GridMismatch);
        }
        let jet = self.second_jet(rho);
        let mut out = rhodot.values().clone();
        Zip::from(&mut out).and(&jet.rr).and(&jet.px).and(&jet.pt).for_each(|o, &rr, &px, &pt| {
            *o *= rr / metric(rr, px, pt).3.sqrt();
        });
        Ok(HeightField::from_raw(rho.grid(), out))
    }
}

fn symbol_from_coefficients(b: &PrincipalCoefficients, xi: [f64; 2]) -> HeightField {
    let (x1, x2) = (xi[0], xi[1]);
    let w = [
        x1.powi(4),
        x1.powi(3) * x2,
        x1 * x1 * x2 * x2,
        x1 * x2.powi(3),
        x2.powi(4),
    ];
    let mut out = b.b40.values() * w[0];
    for (coef, wi) in [&b.b31, &b.b22, &b.b13, &b.b04].into_iter().zip(&w[1..]) {
        out.scaled_add(*wi, coef.values());
    }
    HeightField::from_raw(b.b40.grid(), out)
}

// Free-function forms with default options.

pub fn metric_det(rho: &HeightField) -> Result<HeightField> {
    SurfaceOperator::default().metric_det(rho)
}

pub fn mean_curvature(rho: &HeightField) -> Result<HeightField> {
    SurfaceOperator::default().mean_curvature(rho)
}

pub fn surface_laplacian(rho: &HeightField, f: &HeightField) -> Result<HeightField> {
    SurfaceOperator::default().surface_laplacian(rho, f)
}

pub fn evolution_operator(rho: &HeightField) -> Result<HeightField> {
    SurfaceOperator::default().evolution_operator(rho)
}

pub fn principal_coefficients(rho: &HeightField) -> Result<PrincipalCoefficients> {
    SurfaceOperator::default().principal_coefficients(rho)
}

pub fn principal_symbol(rho: &HeightField, xi: [f64; 2]) -> Result<HeightField> {
    SurfaceOperator::default().principal_symbol(rho, xi)
}

pub fn ellipticity_bounds(rho: &HeightField) -> Result<(f64, f64)> {
    SurfaceOperator::default().ellipticity_bounds(rho)
}

pub fn normal_velocity(rho: &HeightField, rhodot: &HeightField) -> Result<HeightField> {
    SurfaceOperator::default().normal_velocity(rho, rhodot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid(r: f64) -> Grid {
        Grid::new(2.0 * PI, r, 32, 32).unwrap()
    }

    #[test]
    fn flat_state_values() {
        let g = grid(1.7);
        let zero = HeightField::zeros(&g);
        assert!(metric_det(&zero).unwrap().max_abs_diff(&HeightField::constant(&g, 1.7 * 1.7)) < 1e-15);
        let h = mean_curvature(&zero).unwrap();
        assert!(h.max_abs_diff(&HeightField::constant(&g, 1.0 / 1.7)) < 1e-15);
        assert!(evolution_operator(&zero).unwrap().sup_norm() < 1e-15);

        let c = HeightField::constant(&g, 0.4);
        let h = mean_curvature(&c).unwrap();
        assert!(h.max_abs_diff(&HeightField::constant(&g, 1.0 / 2.1)) < 1e-14);
        assert!(evolution_operator(&c).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn metric_det_examples() {
        let (r, eps) = (1.3, 0.2);
        let g = grid(r);
        let rho = HeightField::from_fn(&g, |_, t| eps * t.cos());
        let want = HeightField::from_fn(&g, |_, t| {
            (r + eps * t.cos()).powi(2) + (eps * t.sin()).powi(2)
        });
        assert!(metric_det(&rho).unwrap().max_abs_diff(&want) < 1e-13);

        let rho = HeightField::from_fn(&g, |x, _| eps * x.sin());
        let want = HeightField::from_fn(&g, |x, _| {
            (r + eps * x.sin()).powi(2) * (1.0 + (eps * x.cos()).powi(2))
        });
        assert!(metric_det(&rho).unwrap().max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn clearance_is_enforced() {
        let g = grid(1.0);
        let rho = HeightField::constant(&g, -1.0);
        assert!(matches!(metric_det(&rho), Err(Error::Clearance { .. })));
        let rho = HeightField::constant(&g, -0.9995);
        assert!(metric_det(&rho).is_ok());
        assert!(matches!(evolution_operator(&rho), Err(Error::Clearance { .. })));
    }

    #[test]
    fn flat_principal_coefficients() {
        let r = 1.6;
        let g = grid(r);
        let b = principal_coefficients(&HeightField::zeros(&g)).unwrap();
        let near = |f: &HeightField, v: f64| f.max_abs_diff(&HeightField::constant(&g, v)) < 1e-15;
        assert!(near(&b.b40, 1.0));
        assert!(near(&b.b31, 0.0));
        assert!(near(&b.b22, 2.0 / (r * r)));
        assert!(near(&b.b13, 0.0));
        assert!(near(&b.b04, 1.0 / r.powi(4)));
    }

    #[test]
    fn coefficient_ratio_identity() {
        let g = grid(1.2);
        let rho = HeightField::from_fn(&g, |x, t| 0.2 * (x + t).sin() + 0.1 * (2.0 * t - x).cos());
        let op = SurfaceOperator::default();
        let b = op.principal_coefficients(&rho).unwrap();
        let bundle = op.bundle(&rho).unwrap();
        let px = bundle.derivs.get(1, 0).unwrap();
        let pt = bundle.derivs.get(0, 1).unwrap();
        for ((j, k), &b40) in b.b40.values().indexed_iter() {
            let ratio = b.b31.get(j, k) / b40;
            let want = -4.0 * px.get(j, k) * pt.get(j, k) / bundle.g22.get(j, k);
            assert!((ratio - want).abs() < 1e-12);
            assert!(b40 * b.b04.get(j, k) >= 0.0);
        }
    }

    #[test]
    fn flat_symbol_and_ellipticity() {
        let g = grid(2.0);
        let zero = HeightField::zeros(&g);
        assert!((principal_symbol(&zero, [1.0, 0.0]).unwrap().max() - 1.0).abs() < 1e-15);
        assert!((principal_symbol(&zero, [0.0, 1.0]).unwrap().max() - 1.0 / 16.0).abs() < 1e-15);
        let (c1, c2) = ellipticity_bounds(&zero).unwrap();
        assert!((c1 - 1.0 / 16.0).abs() < 1e-14 && (c2 - 1.0).abs() < 1e-14);

        let g1 = grid(1.0);
        let (c1, c2) = ellipticity_bounds(&HeightField::zeros(&g1)).unwrap();
        assert!((c1 - 1.0).abs() < 1e-14 && (c2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normal_velocity_examples() {
        let (r, eps) = (1.4, 0.15);
        let g = grid(r);
        let zero = HeightField::zeros(&g);
        let one = HeightField::constant(&g, 1.0);
        assert!(normal_velocity(&zero, &one).unwrap().max_abs_diff(&one) < 1e-15);
        assert!(normal_velocity(&zero, &zero).unwrap().sup_norm() == 0.0);

        let rho = HeightField::from_fn(&g, |_, t| eps * t.cos());
        let rhodot = HeightField::from_fn(&g, |_, t| t.cos());
        let want = HeightField::from_fn(&g, |_, t| {
            let rr = r + eps * t.cos();
            rr * t.cos() / (rr * rr + (eps * t.sin()).powi(2)).sqrt()
        });
        assert!(normal_velocity(&rho, &rhodot).unwrap().max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn second_fundamental_form_of_flat_cylinder() {
        let g = grid(2.0);
        let b = SurfaceOperator::default().bundle(&HeightField::zeros(&g)).unwrap();
        assert!(b.ii11.sup_norm() < 1e-15 && b.ii12.sup_norm() < 1e-15);
        assert!(b.ii22.max_abs_diff(&HeightField::constant(&g, -2.0)) < 1e-15);
    }
}
