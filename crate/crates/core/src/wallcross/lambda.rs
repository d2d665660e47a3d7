use std::collections::BTreeMap;

use crate::arith::{factorial, Cyc8, Rational};
use crate::error::{Error, Result};
use crate::forms::BaseForms;
use crate::qseries::{ms_coeff, ms_exp, qs_div, MultiSeries, QSeries, Var, EXACT};

/// Degree caps for `L, Q, x, t` (weights 1, 2, 2, 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LambdaCaps {
    pub l: u32,
    pub q: u32,
    pub x: u32,
    pub t: u32,
    /// Cap on `l + 2k + 2r + b`.
    pub weight: u32,
}

impl LambdaCaps {
    pub fn new(l: u32, q: u32, x: u32, t: u32) -> Self {
        LambdaCaps {
            l,
            q,
            x,
            t,
            weight: l + 2 * q + 2 * x + t,
        }
    }

    pub fn with_weight(mut self, weight: u32) -> Self {
        self.weight = weight;
        self
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Truncation making every coefficient valid through exponent `upto` (1/48 units).
    pub fn trunc_for(&self, upto: i64) -> i64 {
        let deg = (self.l + 2 * self.q + 2 * self.x).min(self.weight);
        upto + 12 * (i64::from(deg) + 3) + 96
    }
}

/// The series multiplying `L, Q, x, t` in the exponent of Λ, and the prefactor.
/// Exposed so tests can perturb one ingredient.
#[derive(Clone, Debug)]
pub struct LambdaInputs {
    pub l_coef: QSeries,
    pub q_coef: QSeries,
    pub x_coef: QSeries,
    pub t_coef: QSeries,
    pub prefactor: QSeries,
}

impl LambdaInputs {
    pub fn new(sigma: i64, trunc: i64) -> Result<Self> {
        crate::forms::check_trunc(trunc)?;
        let f = BaseForms::cached(trunc);
        Ok(LambdaInputs {
            l_coef: f.inv_f.clone(),
            q_coef: f.quad.scale_rational(&Rational::new(-1, 2)),
            x_coef: f.point.scale_rational(&Rational::from(-3)),
            t_coef: qs_div(&QSeries::one(EXACT), &f.theta)?,
            prefactor: f.prefactor(sigma)?,
        })
    }
}

fn lambda_vars(caps: LambdaCaps) -> Vec<Var> {
    vec![
        Var::new("L", 1).capped(caps.l),
        Var::new("Q", 2).capped(caps.q),
        Var::new("x", 2).capped(caps.x),
        Var::new("t", 1).capped(caps.t),
    ]
}

/// `exp(L/f - (Q/2)(2G₂(2τ)+e₃(2τ))/f² - 3x e₃(2τ)/f² + t/θ) θ^σ f Δ(2τ)²/(Δ(τ)Δ(4τ))`.
pub fn build_lambda(caps: LambdaCaps, sigma: i64, trunc: i64) -> Result<MultiSeries> {
    build_lambda_from(&LambdaInputs::new(sigma, trunc)?, caps)
}

pub fn build_lambda_from(inp: &LambdaInputs, caps: LambdaCaps) -> Result<MultiSeries> {
    let mut expo = MultiSeries::zero(lambda_vars(caps), caps.weight());
    expo.set(vec![1, 0, 0, 0], inp.l_coef.clone());
    expo.set(vec![0, 1, 0, 0], inp.q_coef.clone());
    expo.set(vec![0, 0, 1, 0], inp.x_coef.clone());
    expo.set(vec![0, 0, 0, 1], inp.t_coef.clone());
    Ok(ms_exp(&expo)?.mul_series(&inp.prefactor))
}

/// `P(l,k,r,b,w) = l!k!r!b!·[L^l Q^k x^r t^b q^w] Λ`, with `w` in quarter units.
/// Negative indices read as zero; individual values can be overridden for
/// mutation tests.
#[derive(Clone, Debug)]
pub struct PTable {
    caps: LambdaCaps,
    sigma: i64,
    lambda: MultiSeries,
    overrides: BTreeMap<(i64, i64, i64, i64, i64), Cyc8>,
}

impl PTable {
    /// Λ built so that every `P` with `w ≤ max_w_quarters/4` is available.
    pub fn new(caps: LambdaCaps, sigma: i64, max_w_quarters: i64) -> Result<Self> {
        let trunc = caps.trunc_for(12 * max_w_quarters);
        Ok(PTable {
            caps,
            sigma,
            lambda: build_lambda(caps, sigma, trunc)?,
            overrides: BTreeMap::new(),
        })
    }

    pub fn caps(&self) -> LambdaCaps {
        self.caps
    }

    pub fn sigma(&self) -> i64 {
        self.sigma
    }

    pub fn lambda(&self) -> &MultiSeries {
        &self.lambda
    }

    pub fn set_override(&mut self, idx: (i64, i64, i64, i64, i64), value: Cyc8) {
        self.overrides.insert(idx, value);
    }

    pub fn get(&self, l: i64, k: i64, r: i64, b: i64, w_quarters: i64) -> Result<Cyc8> {
        if l < 0 || k < 0 || r < 0 || b < 0 {
            return Ok(Cyc8::zero());
        }
        if let Some(v) = self.overrides.get(&(l, k, r, b, w_quarters)) {
            return Ok(v.clone());
        }
        let c = self.caps;
        if l > i64::from(c.l)
            || k > i64::from(c.q)
            || r > i64::from(c.x)
            || b > i64::from(c.t)
            || l + 2 * k + 2 * r + b > i64::from(c.weight)
        {
            return Err(Error::Invalid(format!(
                "P({l},{k},{r},{b},·) is beyond the built caps"
            )));
        }
        let mono = [l as u32, k as u32, r as u32, b as u32];
        let v = ms_coeff(&self.lambda, &mono).coeff_at(12 * w_quarters)?;
        let norm =
            factorial(mono[0]) * factorial(mono[1]) * factorial(mono[2]) * factorial(mono[3]);
        Ok(v.scale(&norm))
    }
}

/// Stand-alone `P(l,k,r,b,w)` with `w = w_quarters/4`.
pub fn p_coefficient(
    l: u32,
    k: u32,
    r: u32,
    b: u32,
    w_quarters: i64,
    sigma_base: i64,
) -> Result<Cyc8> {
    let caps = LambdaCaps::new(l, k, r, b);
    PTable::new(caps, sigma_base, w_quarters.max(0))?.get(
        i64::from(l),
        i64::from(k),
        i64::from(r),
        i64::from(b),
        w_quarters,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::qs_mul;
    use crate::wallcross::{delta_eval, CycleData};

    #[test]
    fn lambda_at_origin_is_prefactor() {
        let caps = LambdaCaps::new(2, 1, 1, 1);
        let t = 400;
        let lam = build_lambda(caps, -1, t).unwrap();
        let pre = BaseForms::cached(t).prefactor(-1).unwrap();
        let c = ms_coeff(&lam, &[0, 0, 0, 0]);
        assert_eq!(c.first_difference(&pre, c.valid_to()).unwrap(), None);
    }

    #[test]
    fn l_derivative_is_division_by_f() {
        let caps = LambdaCaps::new(3, 1, 1, 1);
        let t = 400;
        let lam = build_lambda(caps, 0, t).unwrap();
        let inv_f = BaseForms::cached(t).inv_f.clone();
        let d = lam.derivative(0, 1);
        for mono in lam.monomials().into_iter().filter(|m| m[0] < caps.l) {
            let lhs = ms_coeff(&d, &mono);
            let rhs = qs_mul(&ms_coeff(&lam, &mono), &inv_f);
            let upto = lhs.valid_to().min(rhs.valid_to());
            assert_eq!(lhs.first_difference(&rhs, upto).unwrap(), None, "{mono:?}");
        }
    }

    #[test]
    fn t_coefficient_is_theta_inverse() {
        let caps = LambdaCaps::new(1, 1, 0, 2);
        let t = 300;
        let lam = build_lambda(caps, 2, t).unwrap();
        let inv_theta = qs_div(&QSeries::one(EXACT), &BaseForms::cached(t).theta).unwrap();
        let lhs = ms_coeff(&lam, &[1, 0, 0, 1]);
        let rhs = qs_mul(&ms_coeff(&lam, &[1, 0, 0, 0]), &inv_theta);
        let upto = lhs.valid_to().min(rhs.valid_to());
        assert_eq!(lhs.first_difference(&rhs, upto).unwrap(), None);
    }

    #[test]
    fn p_matches_known_delta() {
        // δ_{F-3G}((2Ǧ)³) = 1 with L = 1: P(3,0,0,0,-3/2)·3!/3! = 1
        assert_eq!(p_coefficient(3, 0, 0, 0, -6, 0).unwrap(), Cyc8::one());
        let d = delta_eval(
            -6,
            0,
            &CycleData::rational(Rational::one(), Rational::zero()),
            3,
        )
        .unwrap();
        assert_eq!(d.get(&[3], 0), Cyc8::one());
    }

    #[test]
    fn p_support() {
        let caps = LambdaCaps::new(4, 2, 1, 1);
        let pt = PTable::new(caps, 0, 8).unwrap();
        for l in 0..=4i64 {
            for k in 0..=2 {
                for r in 0..=1 {
                    let n = l + 2 * k + 2 * r;
                    for w in -20..=8 {
                        let v = pt.get(l, k, r, 0, w).unwrap();
                        let on_lattice = (w + n + 3).rem_euclid(4) == 0 && w >= -(n + 3);
                        if !on_lattice {
                            assert!(v.is_zero(), "P({l},{k},{r},0,{w}/4)");
                        }
                    }
                }
            }
        }
        // positive-w support is genuinely present
        assert!(!pt.get(0, 0, 0, 0, 1).unwrap().is_zero());
        assert_eq!(pt.get(-1, 0, 0, 0, -3).unwrap(), Cyc8::zero());
    }

    #[test]
    fn lambda_origin_coefficients() {
        // λ = q^{-3/4}(1 + 22q + …) at σ = 0
        let pt = PTable::new(LambdaCaps::new(0, 0, 0, 0), 0, 4).unwrap();
        assert_eq!(pt.get(0, 0, 0, 0, -3).unwrap(), Cyc8::one());
        assert_eq!(pt.get(0, 0, 0, 0, 1).unwrap(), Cyc8::from_int(22));
    }
}
