use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape {got:?} does not match grid {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("coefficients are not conjugate symmetric (imaginary residue {residue:e})")]
    NotConjugateSymmetric { residue: f64 },

    #[error("derivative order {0} exceeds 4")]
    DerivativeOrder(usize),

    #[error("surface not admissible: min(r + rho) = {min_radius:e}, required > {required:e}")]
    Clearance { min_radius: f64, required: f64 },

    #[error("offset cylinder outside its domain: ybar^2 + zbar^2 = {offset_sq:e} with rbar = {rbar:e}")]
    CylinderDomain { offset_sq: f64, rbar: f64 },

    #[error("field is not reflection symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("grids do not match")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reflection symmetry drifted by {drift:e} at t = {t}")]
    SymmetryDrift { t: f64, drift: f64 },
}
