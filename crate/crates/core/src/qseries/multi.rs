use std::collections::BTreeMap;

use crate::arith::{factorial, Rational};
use crate::error::{Error, Result};

use super::series::{qs_add, qs_mul, QSeries, EXACT};

/// A formal variable with its weight and an optional degree cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub weight: u32,
    pub max_degree: Option<u32>,
}

impl Var {
    pub fn new(name: impl Into<String>, weight: u32) -> Self {
        assert!(weight > 0, "variable weights are positive");
        Var {
            name: name.into(),
            weight,
            max_degree: None,
        }
    }

    pub fn capped(mut self, max_degree: u32) -> Self {
        self.max_degree = Some(max_degree);
        self
    }
}

/// Exponent tuple, one entry per variable.
pub type Monomial = Vec<u32>;

/// Polynomial in weighted variables with `QSeries` coefficients, truncated at
/// total weight `weight_cap` and at each variable's degree cap.
///
/// Absent monomials are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries {
    vars: Vec<Var>,
    weight_cap: u32,
    terms: BTreeMap<Monomial, QSeries>,
}

impl MultiSeries {
    pub fn zero(vars: Vec<Var>, weight_cap: u32) -> Self {
        MultiSeries {
            vars,
            weight_cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(vars: Vec<Var>, weight_cap: u32) -> Self {
        let mut m = Self::zero(vars, weight_cap);
        let z = vec![0; m.vars.len()];
        m.terms.insert(z, QSeries::one(EXACT));
        m
    }

    /// The constant polynomial `c`.
    pub fn constant(vars: Vec<Var>, weight_cap: u32, c: QSeries) -> Self {
        let mut m = Self::zero(vars, weight_cap);
        let z = vec![0; m.vars.len()];
        m.set(z, c);
        m
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn weight_cap(&self) -> u32 {
        self.weight_cap
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn weight(&self, m: &[u32]) -> u32 {
        m.iter().zip(&self.vars).map(|(e, v)| e * v.weight).sum()
    }

    /// Whether the monomial survives the weight and degree caps.
    pub fn admits(&self, m: &[u32]) -> bool {
        m.len() == self.vars.len()
            && self.weight(m) <= self.weight_cap
            && m.iter()
                .zip(&self.vars)
                .all(|(e, v)| v.max_degree.is_none_or(|d| *e <= d))
    }

    /// Stores `c` at `m`; silently dropped if `m` is beyond the caps.
    pub fn set(&mut self, m: Monomial, c: QSeries) {
        if self.admits(&m) {
            self.terms.insert(m, c);
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: &QSeries) {
        if !self.admits(&m) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => *old = qs_add(old, c),
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &QSeries)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every admissible monomial, in lexicographic order.
    pub fn monomials(&self) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.vars.len()];
        self.enumerate(0, 0, &mut cur, &mut out);
        out
    }

    fn enumerate(&self, i: usize, w: u32, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if i == self.vars.len() {
            out.push(cur.clone());
            return;
        }
        let v = &self.vars[i];
        let mut e = 0;
        while w + e * v.weight <= self.weight_cap && v.max_degree.is_none_or(|d| e <= d) {
            cur[i] = e;
            self.enumerate(i + 1, w + e * v.weight, cur, out);
            e += 1;
        }
        cur[i] = 0;
    }

    fn same_shape(&self, other: &MultiSeries) {
        assert_eq!(
            self.vars, other.vars,
            "MultiSeries over different variables"
        );
    }

    pub fn add(&self, other: &MultiSeries) -> MultiSeries {
        self.same_shape(other);
        let mut out = self.clone();
        out.weight_cap = self.weight_cap.min(other.weight_cap);
        out.terms.retain(|m, _| {
            m.iter()
                .zip(&self.vars)
                .map(|(e, v)| e * v.weight)
                .sum::<u32>()
                <= other.weight_cap
        });
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn mul(&self, other: &MultiSeries) -> MultiSeries {
        self.same_shape(other);
        let mut out = MultiSeries::zero(self.vars.clone(), self.weight_cap.min(other.weight_cap));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                if out.admits(&m) {
                    out.add_term(m, &qs_mul(ca, cb));
                }
            }
        }
        out
    }

    /// Multiply every coefficient by the series `c`.
    pub fn mul_series(&self, c: &QSeries) -> MultiSeries {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = qs_mul(v, c);
        }
        out
    }

    /// Apply `f` to every coefficient.
    pub fn map_coeffs(&self, mut f: impl FnMut(&QSeries) -> QSeries) -> MultiSeries {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = f(v);
        }
        out
    }

    /// Formal partial derivative of the given order in variable `var`.
    pub fn derivative(&self, var: usize, order: u32) -> MultiSeries {
        let mut out = MultiSeries::zero(self.vars.clone(), self.weight_cap);
        for (m, c) in &self.terms {
            if m[var] < order {
                continue;
            }
            let mut falling = Rational::one();
            for j in 0..order {
                falling = falling * Rational::from(i64::from(m[var] - j));
            }
            let mut nm = m.clone();
            nm[var] -= order;
            out.terms.insert(nm, c.scale_rational(&falling));
        }
        out
    }

    /// Largest exponent (in 1/48 units) through which every stored coefficient is valid.
    pub fn valid_to(&self) -> i64 {
        self.terms
            .values()
            .map(QSeries::valid_to)
            .min()
            .unwrap_or(EXACT)
    }
}

/// `Σ a^k/k!`, computed as the product over terms of `exp(c·X^m)`.
pub fn ms_exp(a: &MultiSeries) -> Result<MultiSeries> {
    let zero: Monomial = vec![0; a.vars.len()];
    let mut out = MultiSeries::unit(a.vars.clone(), a.weight_cap);
    for (m, c) in &a.terms {
        if *m == zero {
            if c.is_zero() {
                continue;
            }
            return Err(Error::ConstantPartPresent);
        }
        let mut factor = MultiSeries::unit(a.vars.clone(), a.weight_cap);
        let mut power = QSeries::one(EXACT);
        let mut j = 1u32;
        loop {
            let mj: Monomial = m.iter().map(|e| e * j).collect();
            if !factor.admits(&mj) {
                break;
            }
            power = qs_mul(&power, c);
            factor.set(mj, power.scale_rational(&factorial(j).recip()));
            j += 1;
        }
        out = out.mul(&factor);
    }
    Ok(out)
}

/// Coefficient of the monomial `m`; zero when absent.
pub fn ms_coeff(a: &MultiSeries, m: &[u32]) -> QSeries {
    a.terms.get(m).cloned().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Cyc8;

    fn zx() -> Vec<Var> {
        vec![Var::new("z", 1), Var::new("x", 2)]
    }

    fn series(c: &[i64]) -> QSeries {
        QSeries::from_coeffs(48, c.iter().map(|&n| Cyc8::from_int(n)).collect(), 480)
    }

    #[test]
    fn exp_of_zero_is_unit() {
        let z = MultiSeries::zero(zx(), 6);
        assert_eq!(ms_exp(&z).unwrap(), MultiSeries::unit(zx(), 6));
    }

    #[test]
    fn exp_taylor_coefficients() {
        let c = series(&[1, 2, 3]);
        let d = series(&[0, 5]);
        let mut a = MultiSeries::zero(zx(), 4);
        a.set(vec![1, 0], c.clone());
        a.set(vec![0, 1], d.clone());
        let e = ms_exp(&a).unwrap();
        let z2 = ms_coeff(&e, &[2, 0]);
        let want = qs_mul(&c, &c).scale_rational(&Rational::new(1, 2));
        assert_eq!(z2.first_difference(&want, 480).unwrap(), None);
        let zx = ms_coeff(&e, &[1, 1]);
        assert_eq!(zx.first_difference(&qs_mul(&c, &d), 480).unwrap(), None);
        assert!(!e.admits(&[5, 0]));
        assert!(ms_coeff(&e, &[5, 0]).is_zero());
    }

    #[test]
    fn constant_part_rejected() {
        let mut a = MultiSeries::zero(zx(), 4);
        a.set(vec![0, 0], series(&[1]));
        assert_eq!(ms_exp(&a), Err(Error::ConstantPartPresent));
    }

    #[test]
    fn unit_and_absent_coefficients() {
        let u = MultiSeries::unit(zx(), 4);
        assert_eq!(ms_coeff(&u, &[0, 0]), QSeries::one(EXACT));
        assert!(ms_coeff(&u, &[1, 1]).is_zero());
    }

    #[test]
    fn derivative_and_caps() {
        let vars = vec![Var::new("L", 1).capped(3), Var::new("t", 1).capped(1)];
        let mut a = MultiSeries::zero(vars.clone(), 10);
        a.set(vec![3, 1], series(&[1]));
        a.set(vec![4, 0], series(&[1]));
        assert_eq!(a.len(), 1);
        let d = a.derivative(0, 2);
        assert_eq!(ms_coeff(&d, &[1, 1]), series(&[6]));
        assert_eq!(a.monomials().len(), 8);
    }
}
