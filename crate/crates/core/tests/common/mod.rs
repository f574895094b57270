//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use sdflow::config::{random_field, Boundary};
use sdflow::grid::derivative;
use sdflow::{Grid, HeightField};

/// Highest total degree kept by [`Jet`].
pub const DEG: usize = 4;

/// Truncated bivariate Taylor polynomial `sum c[i][j] x^i theta^j`, `i + j <= DEG`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [[f64; DEG + 1]; DEG + 1],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [[0.0; DEG + 1]; DEG + 1];
        c[0][0] = v;
        Jet { c }
    }

    /// Jet of a function from its partial derivatives `d[i][j] = f_{x^i theta^j}`.
    pub fn from_derivatives(d: &[[f64; DEG + 1]; DEG + 1]) -> Self {
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        let mut c = [[0.0; DEG + 1]; DEG + 1];
        for i in 0..=DEG {
            for j in 0..=DEG - i {
                c[i][j] = d[i][j] / (fact[i] * fact[j]);
            }
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.c.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    pub fn dx(&self) -> Self {
        let mut out = Jet::constant(0.0);
        for i in 1..=DEG {
            for j in 0..=DEG - i {
                out.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        out
    }

    pub fn dtheta(&self) -> Self {
        let mut out = Jet::constant(0.0);
        for i in 0..=DEG {
            for j in 1..=DEG - i {
                out.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        out
    }

    /// `f(self)` from the derivatives `f^(k)(a0) = derivs[k]` at the constant term.
    fn compose(&self, derivs: [f64; DEG + 1]) -> Self {
        let mut u = *self;
        u.c[0][0] = 0.0;
        let mut out = Jet::constant(derivs[0]);
        let mut pow = Jet::constant(1.0);
        let mut fact = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1) {
            pow = pow * u;
            fact *= k as f64;
            out = out + pow.scale(d / fact);
        }
        out
    }

    /// `self^p` for a positive constant term.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut derivs = [0.0; DEG + 1];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef * a.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(derivs)
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    pub fn div(self, other: Jet) -> Self {
        self * other.recip()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for i in 0..=DEG {
            for j in 0..=DEG {
                self.c[i][j] += o.c[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(0.0);
        for i1 in 0..=DEG {
            for j1 in 0..=DEG - i1 {
                let a = self.c[i1][j1];
                if a == 0.0 {
                    continue;
                }
                let room = DEG - i1 - j1;
                for i2 in 0..=room {
                    for j2 in 0..=room - i2 {
                        out.c[i1 + i2][j1 + j2] += a * o.c[i2][j2];
                    }
                }
            }
        }
        out
    }
}

/// `G` at a point from the 4-jet of `rho` there, by direct expansion of
/// `(1/R) [d_x P + d_theta Q]` in jet arithmetic.
pub fn g_from_jet(r: f64, rho: Jet) -> f64 {
    let rr = rho + Jet::constant(r);
    let (px, pt) = (rho.dx(), rho.dtheta());
    let (pxx, pxt, ptt) = (px.dx(), px.dtheta(), pt.dtheta());
    let one = Jet::constant(1.0);
    let g11 = one + px * px;
    let g12 = px * pt;
    let g22 = rr * rr + pt * pt;
    let gdet = rr * rr * g11 + pt * pt;
    let num = pt * pt - rr * (g22 * pxx + g11 * ptt - (g12 * pxt).scale(2.0));
    let h = num * gdet.powf(-1.5) + gdet.powf(-0.5);
    let (hx, ht) = (h.dx(), h.dtheta());
    let s = gdet.powf(-0.5);
    let p = (g22 * hx - g12 * ht) * s;
    let q = (g11 * ht - g12 * hx) * s;
    (p.dx() + q.dtheta()).div(rr).value()
}

/// All partial derivatives of `rho` up to total order 4, spectrally.
pub fn derivative_table(rho: &HeightField) -> Vec<Vec<HeightField>> {
    (0..=DEG)
        .map(|i| (0..=DEG - i).map(|j| derivative(rho, i, j).unwrap()).collect())
        .collect()
}

pub fn jet_at(table: &[Vec<HeightField>], j: usize, k: usize) -> Jet {
    let mut d = [[0.0; DEG + 1]; DEG + 1];
    for (i, row) in table.iter().enumerate() {
        for (l, f) in row.iter().enumerate() {
            d[i][l] = f.get(j, k);
        }
    }
    Jet::from_derivatives(&d)
}

/// Smooth random field with `sup |rho| = amp` and modes up to `band`.
pub fn smooth_field(g: &Grid, seed: u64, band: u32, amp: f64) -> HeightField {
    let f = random_field(g, seed, band, Boundary::Periodic);
    f.map(|v| amp * v / f.sup_norm())
}

pub fn grid(r: f64, n: usize) -> Grid {
    Grid::new(2.0 * PI, r, n, n).unwrap()
}

/// Fourth-order central difference of periodic samples along one axis.
pub fn fd4(f: &HeightField, axis: usize) -> HeightField {
    let g = f.grid();
    let (nx, nt) = g.shape();
    let h = if axis == 0 { g.dx() } else { g.dtheta() };
    let v = f.values();
    let at = |j: isize, k: isize| v[[j.rem_euclid(nx as isize) as usize, k.rem_euclid(nt as isize) as usize]];
    let values = ndarray::Array2::from_shape_fn((nx, nt), |(j, k)| {
        let (j, k) = (j as isize, k as isize);
        let s = |o: isize| if axis == 0 { at(j + o, k) } else { at(j, k + o) };
        (-s(2) + 8.0 * s(1) - 8.0 * s(-1) + s(-2)) / (12.0 * h)
    });
    HeightField::new(g, values).unwrap()
}
