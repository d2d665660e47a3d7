use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{cyc8_mul_acc, Cyc8, Rational};
use crate::error::{Error, Result};

/// Exponent lattice: every exponent is an integer multiple of `1/UNIT`.
pub const UNIT: i64 = 48;

/// `valid_to` value marking a series that is exact (a finite Laurent polynomial).
pub const EXACT: i64 = 1 << 60;

fn vt_shift(vt: i64, by: i64) -> i64 {
    if vt >= EXACT {
        EXACT
    } else {
        (vt + by).min(EXACT)
    }
}

/// Truncated Laurent series in `q^{1/48}` with `Cyc8` coefficients.
///
/// `coeffs[j]` is the coefficient of `q^{(lo+j)/48}`. Coefficients past the
/// stored tail are zero up to `valid_to`; nothing is known above `valid_to`.
/// A nonzero series has a nonzero first and last stored coefficient. The
/// zero series stores nothing and has `lo = valid_to + 1`, its order of vanishing.
#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    lo: i64,
    valid_to: i64,
    coeffs: Vec<Cyc8>,
}

impl QSeries {
    pub fn zero(valid_to: i64) -> Self {
        QSeries {
            lo: vt_shift(valid_to, 1),
            valid_to,
            coeffs: Vec::new(),
        }
    }

    pub fn one(valid_to: i64) -> Self {
        Self::monomial(Cyc8::one(), 0, valid_to)
    }

    /// `c·q^{e/48}` known through `valid_to`.
    pub fn monomial(c: Cyc8, e: i64, valid_to: i64) -> Self {
        Self::from_coeffs(e, vec![c], valid_to)
    }

    pub fn constant(c: Cyc8, valid_to: i64) -> Self {
        Self::monomial(c, 0, valid_to)
    }

    pub fn from_coeffs(lo: i64, coeffs: Vec<Cyc8>, valid_to: i64) -> Self {
        let mut s = QSeries {
            lo,
            valid_to,
            coeffs,
        };
        s.normalize();
        s
    }

    /// Builds from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms<I>(terms: I, valid_to: i64) -> Self
    where
        I: IntoIterator<Item = (i64, Cyc8)>,
    {
        let mut terms: Vec<(i64, Cyc8)> = terms
            .into_iter()
            .filter(|(e, c)| *e <= valid_to && !c.is_zero())
            .collect();
        if terms.is_empty() {
            return Self::zero(valid_to);
        }
        terms.sort_by_key(|(e, _)| *e);
        let lo = terms[0].0;
        let hi = terms.last().unwrap().0;
        let mut coeffs = vec![Cyc8::zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            coeffs[(e - lo) as usize] += &c;
        }
        Self::from_coeffs(lo, coeffs, valid_to)
    }

    fn normalize(&mut self) {
        let keep = if self.valid_to < self.lo {
            0
        } else {
            ((self.valid_to - self.lo + 1) as usize).min(self.coeffs.len())
        };
        self.coeffs.truncate(keep);
        while self.coeffs.last().is_some_and(Cyc8::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.lo = vt_shift(self.valid_to, 1);
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
    }

    /// Lowest exponent with a nonzero coefficient, or `valid_to + 1` for zero.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn valid_to(&self) -> i64 {
        self.valid_to
    }

    pub fn is_exact(&self) -> bool {
        self.valid_to >= EXACT
    }

    /// Stored coefficients starting at `lo`.
    pub fn coeffs(&self) -> &[Cyc8] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&Cyc8> {
        self.coeffs.first()
    }

    /// Highest exponent holding a stored coefficient.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// Exact coefficient of `q^{e/48}`.
    pub fn coeff_at(&self, e: i64) -> Result<Cyc8> {
        if e > self.valid_to {
            return Err(Error::BeyondTruncation {
                requested: e,
                valid_to: self.valid_to,
            });
        }
        Ok(self.coeff_ref(e).cloned().unwrap_or_default())
    }

    fn coeff_ref(&self, e: i64) -> Option<&Cyc8> {
        if e < self.lo {
            return None;
        }
        self.coeffs.get((e - self.lo) as usize)
    }

    /// Nonzero `(exponent, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Cyc8)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(j, c)| (self.lo + j as i64, c))
    }

    /// Forget everything above `valid_to`.
    pub fn truncate(&self, valid_to: i64) -> QSeries {
        let mut s = self.clone();
        if valid_to < s.valid_to {
            s.valid_to = valid_to;
            s.normalize();
        }
        s
    }

    /// Multiply by `q^{e/48}`.
    pub fn shift(&self, e: i64) -> QSeries {
        if self.is_zero() {
            return QSeries::zero(vt_shift(self.valid_to, e));
        }
        QSeries {
            lo: self.lo + e,
            valid_to: vt_shift(self.valid_to, e),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: &Cyc8) -> QSeries {
        if c.is_zero() {
            return QSeries::zero(self.valid_to);
        }
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        QSeries::from_coeffs(self.lo, coeffs, self.valid_to)
    }

    pub fn scale_rational(&self, r: &Rational) -> QSeries {
        let coeffs = self.coeffs.iter().map(|x| x.scale(r)).collect();
        QSeries::from_coeffs(self.lo, coeffs, self.valid_to)
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            lo: self.lo,
            valid_to: self.valid_to,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// `self^e`; negative powers go through `qs_div`.
    pub fn pow(&self, e: i64) -> Result<QSeries> {
        if e < 0 {
            let p = self.pow(-e)?;
            return qs_div(&QSeries::one(EXACT), &p);
        }
        let mut acc = QSeries::one(EXACT);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = qs_mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = qs_mul(&base, &base);
            }
        }
        Ok(acc)
    }

    /// `q d/dq`: `c·q^{k/48} ↦ (k/48)·c·q^{k/48}`.
    pub fn q_deriv(&self) -> QSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c.scale(&Rational::new(self.lo + j as i64, UNIT)))
            .collect();
        QSeries::from_coeffs(self.lo, coeffs, self.valid_to)
    }

    /// First exponent `≤ upto` where the two series differ, or `None` if they
    /// agree through `upto`. Fails if either is not valid through `upto`.
    pub fn first_difference(&self, other: &QSeries, upto: i64) -> Result<Option<i64>> {
        let vt = self.valid_to.min(other.valid_to);
        if upto > vt {
            return Err(Error::BeyondTruncation {
                requested: upto,
                valid_to: vt,
            });
        }
        let diff = qs_sub(self, other);
        let first = diff.terms().map(|(e, _)| e).find(|&e| e <= upto);
        Ok(first)
    }
}

impl Default for QSeries {
    fn default() -> Self {
        QSeries::zero(EXACT)
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QSeries[")?;
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})q^({e}/48)")?;
        }
        if self.is_exact() {
            write!(f, "]")
        } else {
            write!(f, " + O(q^({}/48))]", self.valid_to + 1)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QSeriesJson {
    unit: i64,
    lo: i64,
    valid_to: i64,
    coeffs: Vec<Cyc8>,
}

impl Serialize for QSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QSeriesJson {
            unit: UNIT,
            lo: self.lo,
            valid_to: self.valid_to,
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = QSeriesJson::deserialize(d)?;
        if j.unit != UNIT {
            return Err(serde::de::Error::custom(format!(
                "unsupported unit {}",
                j.unit
            )));
        }
        Ok(QSeries::from_coeffs(j.lo, j.coeffs, j.valid_to))
    }
}

fn combine(a: &QSeries, b: &QSeries, negate_b: bool) -> QSeries {
    let vt = a.valid_to.min(b.valid_to);
    let lo = a.lo.min(b.lo);
    if a.is_zero() && b.is_zero() {
        return QSeries::zero(vt);
    }
    let hi = a.hi().max(b.hi()).min(vt);
    if hi < lo {
        return QSeries::zero(vt);
    }
    let mut coeffs = vec![Cyc8::zero(); (hi - lo + 1) as usize];
    for (e, c) in a.terms().take_while(|(e, _)| *e <= hi) {
        coeffs[(e - lo) as usize] += c;
    }
    for (e, c) in b.terms().take_while(|(e, _)| *e <= hi) {
        if negate_b {
            coeffs[(e - lo) as usize] -= c;
        } else {
            coeffs[(e - lo) as usize] += c;
        }
    }
    QSeries::from_coeffs(lo, coeffs, vt)
}

/// Pointwise sum, valid through the smaller of the two bounds.
pub fn qs_add(a: &QSeries, b: &QSeries) -> QSeries {
    combine(a, b, false)
}

pub fn qs_sub(a: &QSeries, b: &QSeries) -> QSeries {
    combine(a, b, true)
}

/// Cauchy product. Known through `min(a.valid_to + b.lo, b.valid_to + a.lo)`.
pub fn qs_mul(a: &QSeries, b: &QSeries) -> QSeries {
    let vt = vt_shift(a.valid_to, b.lo).min(vt_shift(b.valid_to, a.lo));
    if a.is_zero() || b.is_zero() {
        return QSeries::zero(vt);
    }
    let lo = a.lo + b.lo;
    if vt < lo {
        return QSeries::zero(vt);
    }
    let full = a.coeffs.len() + b.coeffs.len() - 1;
    let len = full.min((vt - lo + 1) as usize);
    let nz_b: Vec<(usize, &Cyc8)> = b
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let mut out = vec![Cyc8::zero(); len];
    for (i, ai) in a.coeffs.iter().enumerate() {
        if i >= len {
            break;
        }
        if ai.is_zero() {
            continue;
        }
        for &(j, bj) in &nz_b {
            let k = i + j;
            if k >= len {
                break;
            }
            cyc8_mul_acc(&mut out[k], ai, bj);
        }
    }
    QSeries::from_coeffs(lo, out, vt)
}

/// Quotient `a/b`; the leading coefficient of `b` must be a unit.
pub fn qs_div(a: &QSeries, b: &QSeries) -> Result<QSeries> {
    let b0 = b.leading().ok_or(Error::ZeroLeading)?;
    let b0_inv = b0.inv().ok_or(Error::ZeroLeading)?;
    // b^{-1} = q^{-b.lo}(...) known to relative precision b.valid_to - b.lo
    let inv_vt = if b.is_exact() && b.coeffs.len() == 1 {
        EXACT
    } else {
        vt_shift(b.valid_to, -2 * b.lo)
    };
    let vt = vt_shift(a.valid_to, -b.lo).min(vt_shift(inv_vt, a.lo));
    if a.is_zero() {
        return Ok(QSeries::zero(vt));
    }
    let lo = a.lo - b.lo;
    if vt < lo {
        return Ok(QSeries::zero(vt));
    }
    let exact_len = if b.coeffs.len() == 1 {
        Some(a.coeffs.len())
    } else {
        None
    };
    let mut len = (vt - lo + 1).min(i64::MAX / 2) as usize;
    if let Some(l) = exact_len {
        len = len.min(l);
    }
    assert!(
        len < 1 << 26,
        "qs_div: unbounded result; divide exact series only by monomials"
    );
    let nz_b: Vec<(usize, &Cyc8)> = b
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let b0_rat = b0_inv.is_rational().then(|| b0_inv.coeffs()[0].clone());
    let mut out: Vec<Cyc8> = Vec::with_capacity(len);
    for n in 0..len {
        let mut acc = a.coeffs.get(n).cloned().unwrap_or_default();
        for &(i, bi) in &nz_b {
            if i > n {
                break;
            }
            let c = &out[n - i];
            if c.is_zero() {
                continue;
            }
            acc -= &(bi * c);
        }
        let v = match &b0_rat {
            Some(r) => acc.scale(r),
            None => &acc * &b0_inv,
        };
        out.push(v);
    }
    Ok(QSeries::from_coeffs(lo, out, vt))
}

/// `Σ a^k/k!` for a series of strictly positive valuation.
pub fn qs_exp(a: &QSeries) -> Result<QSeries> {
    if a.is_zero() {
        return Ok(QSeries::one(a.valid_to));
    }
    if a.lo <= 0 {
        return Err(Error::NonPositiveValuation(a.lo));
    }
    assert!(
        !a.is_exact(),
        "qs_exp of an exact polynomial needs a truncation"
    );
    // n·E_n = Σ_k k·a_k·E_{n-k}, from q d/dq E = (q d/dq a)·E
    let len = (a.valid_to + 1) as usize;
    let nz: Vec<(usize, Cyc8)> = a
        .terms()
        .map(|(e, c)| (e as usize, c.scale(&Rational::from(e))))
        .collect();
    let mut out = vec![Cyc8::zero(); len];
    out[0] = Cyc8::one();
    for n in 1..len {
        let mut acc = Cyc8::zero();
        for (k, kc) in &nz {
            if *k > n {
                break;
            }
            let prev = &out[n - k];
            if !prev.is_zero() {
                cyc8_mul_acc(&mut acc, kc, prev);
            }
        }
        out[n] = acc.scale(&Rational::new(1, n as i64));
    }
    Ok(QSeries::from_coeffs(0, out, a.valid_to))
}

/// `q·dlog_q(a) = (q d/dq a)/a`.
pub fn q_log_deriv(a: &QSeries) -> Result<QSeries> {
    if a.is_zero() {
        return Err(Error::ZeroLeading);
    }
    qs_div(&a.q_deriv(), a)
}

/// Coefficient of `q^{e/48}`; zero below the leading exponent.
pub fn coeff_at(a: &QSeries, e: i64) -> Result<Cyc8> {
    a.coeff_at(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(e: i64, vt: i64) -> QSeries {
        QSeries::monomial(Cyc8::one(), e, vt)
    }

    fn c(n: i64) -> Cyc8 {
        Cyc8::from_int(n)
    }

    #[test]
    fn add_cancels_and_identity() {
        let a = q(12, 480);
        let s = qs_add(&a, &a.neg());
        assert!(s.is_zero());
        assert_eq!(s.valid_to(), 480);
        assert_eq!(qs_add(&a, &QSeries::zero(EXACT)), a);
    }

    #[test]
    fn mul_monomials_and_bounds() {
        let p = qs_mul(&q(12, 480), &q(12, 480));
        assert_eq!(p.lo(), 24);
        assert_eq!(p.valid_to(), 492);
        assert_eq!(p.coeff_at(24).unwrap(), Cyc8::one());
        let one = QSeries::one(EXACT);
        let a = QSeries::from_coeffs(-48, vec![c(1), c(0), c(3)], 100);
        assert_eq!(qs_mul(&a, &one), a);
    }

    #[test]
    fn div_inverts_mul() {
        let a = QSeries::from_coeffs(0, vec![c(1), c(-1)], EXACT);
        let b = QSeries::from_coeffs(0, vec![c(1), c(2), c(0), c(5)], 200);
        let ab = qs_mul(&a, &b);
        let back = qs_div(&ab, &b).unwrap();
        assert_eq!(back.first_difference(&a, back.valid_to()).unwrap(), None);
        let half = qs_div(&q(24, EXACT), &q(12, EXACT)).unwrap();
        assert_eq!(half, q(12, EXACT));
        assert_eq!(qs_div(&a, &QSeries::zero(100)), Err(Error::ZeroLeading));
    }

    #[test]
    fn exp_of_q() {
        let e = qs_exp(&q(48, 48 * 4)).unwrap();
        assert_eq!(e.coeff_at(0).unwrap(), c(1));
        assert_eq!(e.coeff_at(48).unwrap(), c(1));
        assert_eq!(e.coeff_at(96).unwrap(), Cyc8::from(Rational::new(1, 2)));
        assert_eq!(e.coeff_at(144).unwrap(), Cyc8::from(Rational::new(1, 6)));
        assert_eq!(e.coeff_at(47).unwrap(), Cyc8::zero());
        assert!(matches!(
            e.coeff_at(48 * 4 + 1),
            Err(Error::BeyondTruncation { .. })
        ));
        assert_eq!(qs_exp(&QSeries::zero(96)).unwrap(), QSeries::one(96));
        assert!(matches!(
            qs_exp(&q(0, 96)),
            Err(Error::NonPositiveValuation(0))
        ));
    }

    #[test]
    fn log_deriv_of_monomial() {
        let d = q_log_deriv(&q(12, 480)).unwrap();
        assert_eq!(d.coeff_at(0).unwrap(), Cyc8::from(Rational::new(1, 4)));
        assert_eq!(d.lo(), 0);
    }

    #[test]
    fn coeff_below_lo_is_zero() {
        let a = q(12, 480);
        assert_eq!(coeff_at(&a, -100).unwrap(), Cyc8::zero());
    }

    #[test]
    fn pow_negative() {
        let a = QSeries::from_coeffs(0, vec![c(1), c(1)], 100);
        let inv = a.pow(-2).unwrap();
        let back = qs_mul(&inv, &a.pow(2).unwrap());
        assert_eq!(
            back.first_difference(&QSeries::one(EXACT), 100).unwrap(),
            None
        );
    }

    #[test]
    fn json_shape() {
        let a = QSeries::from_coeffs(-3, vec![c(1), c(0), c(2)], 10);
        let js = serde_json::to_value(&a).unwrap();
        assert_eq!(js["unit"], 48);
        assert_eq!(js["lo"], -3);
        assert_eq!(js["valid_to"], 10);
        let back: QSeries = serde_json::from_value(js).unwrap();
        assert_eq!(back, a);
    }
}
