//! Truncated q-series on the `q^{1/48}` lattice and weighted multivariate
//! polynomials over them.

mod multi;
mod series;

pub use multi::{ms_coeff, ms_exp, Monomial, MultiSeries, Var};
pub use series::{
    coeff_at, q_log_deriv, qs_add, qs_div, qs_exp, qs_mul, qs_sub, QSeries, EXACT, UNIT,
};
