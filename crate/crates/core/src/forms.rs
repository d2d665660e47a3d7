//! The named modular forms as truncated q-series, and the identity suite that
//! cross-checks independent constructions of them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{Cyc8, Rational};
use crate::error::Result;
use crate::qseries::{q_log_deriv, qs_add, qs_div, qs_mul, qs_sub, QSeries, UNIT};
use crate::report::Report;

/// One factor `η(m·τ)^power`, with the scale `m = half_scale / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EtaFactor {
    pub half_scale: u32,
    pub power: i32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotientSpec {
    pub factors: Vec<EtaFactor>,
}

impl EtaQuotientSpec {
    /// Factors given as `(2·scale, power)`.
    pub fn new(factors: &[(u32, i32)]) -> Self {
        assert!(!factors.is_empty(), "empty eta quotient");
        let factors = factors
            .iter()
            .map(|&(half_scale, power)| {
                assert!(half_scale > 0, "eta scale must be positive");
                EtaFactor { half_scale, power }
            })
            .collect();
        EtaQuotientSpec { factors }
    }

    /// Leading exponent `Σ m·e/24` in 1/48 units.
    pub fn leading_exponent(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| i64::from(f.half_scale) * i64::from(f.power))
            .sum()
    }
}

/// `q^{Σ m e/24} ∏_factors ∏_{n>0} (1 - q^{m n})^e`, exact through `trunc`.
pub fn eta_quotient(spec: &EtaQuotientSpec, trunc: i64) -> QSeries {
    let lead = spec.leading_exponent();
    if trunc < lead {
        return QSeries::zero(trunc);
    }
    // the product lives on the q^{1/2} lattice: index j is exponent j/2 = 24j/48
    let jmax = ((trunc - lead) / 24) as usize;
    let mut c = vec![BigInt::zero(); jmax + 1];
    c[0] = BigInt::one();
    for f in &spec.factors {
        let step = f.half_scale as usize;
        let mut s = step;
        while s <= jmax {
            if f.power > 0 {
                for _ in 0..f.power {
                    for j in (s..=jmax).rev() {
                        let t = c[j - s].clone();
                        c[j] -= t;
                    }
                }
            } else {
                for _ in 0..(-f.power) {
                    for j in s..=jmax {
                        let t = c[j - s].clone();
                        c[j] += t;
                    }
                }
            }
            s += step;
        }
    }
    QSeries::from_terms(
        c.into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, v)| (lead + 24 * j as i64, Cyc8::from(Rational::from(v)))),
        trunc,
    )
}

/// `Δ(mτ) = η(mτ)^24` for integer `m`.
pub fn discriminant(m: u32, trunc: i64) -> QSeries {
    eta_quotient(&EtaQuotientSpec::new(&[(2 * m, 24)]), trunc)
}

/// `θ(τ) = Σ_{n∈Z} q^{n²}`.
pub fn theta(trunc: i64) -> QSeries {
    let mut terms = vec![(0, Cyc8::one())];
    let mut n = 1i64;
    while n * n * UNIT <= trunc {
        terms.push((n * n * UNIT, Cyc8::from_int(2)));
        n += 1;
    }
    QSeries::from_terms(terms, trunc)
}

/// `η(2τ)³` from the Jacobi sum `Σ (-1)^n (n+1/2) q^{(n+1/2)²}`.
pub fn eta2_cubed(trunc: i64) -> QSeries {
    // n and -n-1 contribute equally, so sum n ≥ 0 with weight (-1)^n (2n+1)
    let mut terms = Vec::new();
    let mut n = 0i64;
    while 12 * (2 * n + 1).pow(2) <= trunc {
        let sign = if n % 2 == 0 { 1 } else { -1 };
        terms.push((12 * (2 * n + 1).pow(2), Cyc8::from_int(sign * (2 * n + 1))));
        n += 1;
    }
    QSeries::from_terms(terms, trunc)
}

/// `σ_k(n)` for `1 ≤ n ≤ nmax` (index 0 unused); `odd_only` restricts to odd divisors.
pub fn divisor_sums(k: u32, nmax: usize, odd_only: bool) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); nmax + 1];
    for d in 1..=nmax {
        if odd_only && d % 2 == 0 {
            continue;
        }
        let dk = BigInt::from(d).pow(k);
        let mut m = d;
        while m <= nmax {
            out[m] += &dk;
            m += d;
        }
    }
    out
}

/// `G₂(2τ) = -1/24 + Σ σ₁(n) q^{2n}`.
pub fn g2_2tau(trunc: i64) -> QSeries {
    let nmax = (trunc.max(0) / (2 * UNIT)) as usize;
    let sig = divisor_sums(1, nmax, false);
    let mut terms = vec![(0, Cyc8::from(Rational::new(-1, 24)))];
    for (n, s) in sig.into_iter().enumerate().skip(1) {
        terms.push((2 * UNIT * n as i64, Cyc8::from(Rational::from(s))));
    }
    QSeries::from_terms(terms, trunc)
}

/// `e₃(2τ) = 1/12 + 2 Σ (-1)^n σ₁^{odd}(n) q^n`.
///
/// The alternating sign is what makes `q dlog θ = -2G₂(2τ) - e₃(2τ)` hold;
/// with all signs positive the identity already fails at `q¹`.
pub fn e3_2tau(trunc: i64) -> QSeries {
    let nmax = (trunc.max(0) / UNIT) as usize;
    let sig = divisor_sums(1, nmax, true);
    let mut terms = vec![(0, Cyc8::from(Rational::new(1, 12)))];
    for (n, s) in sig.into_iter().enumerate().skip(1) {
        let c = if n % 2 == 0 { s * 2 } else { s * -2 };
        terms.push((UNIT * n as i64, Cyc8::from(Rational::from(c))));
    }
    QSeries::from_terms(terms, trunc)
}

/// `f(τ) = η(2τ)³/θ(τ)`.
pub fn f_form(trunc: i64) -> QSeries {
    qs_div(&eta2_cubed(trunc), &theta(trunc)).expect("θ has leading coefficient 1")
}

/// `G̃_{4k}(τ) = Σ_{d odd} (-1)^{(d-1)/2} σ_{4k-1}(d) q^{d/4}`.
pub fn g_tilde_4k(k: u32, trunc: i64) -> QSeries {
    assert!(k > 0, "k must be positive");
    let dmax = (trunc.max(0) / 12) as usize;
    let sig = divisor_sums(4 * k - 1, dmax, false);
    let terms = sig
        .into_iter()
        .enumerate()
        .filter(|(d, _)| d % 2 == 1)
        .map(|(d, s)| {
            let s = if (d - 1) / 2 % 2 == 0 { s } else { -s };
            (12 * d as i64, Cyc8::from(Rational::from(s)))
        });
    QSeries::from_terms(terms, trunc)
}

/// `Δ(2τ)²/(Δ(τ)Δ(4τ))`, built directly as an eta quotient.
pub fn disc_ratio(trunc: i64) -> QSeries {
    eta_quotient(&EtaQuotientSpec::new(&[(4, 48), (2, -24), (8, -24)]), trunc)
}

/// `φ = f(τ/2)² = (η(τ/2)η(2τ)/η(τ))⁴`.
pub fn phi(trunc: i64) -> QSeries {
    eta_quotient(&EtaQuotientSpec::new(&[(1, 4), (4, 4), (2, -4)]), trunc)
}

/// Base forms shared by the wall-crossing pipelines, all valid through `trunc`
/// or as far as their construction from forms valid through `trunc` allows.
#[derive(Clone, Debug)]
pub struct BaseForms {
    pub trunc: i64,
    pub theta: QSeries,
    pub eta2_cubed: QSeries,
    pub f: QSeries,
    pub inv_f: QSeries,
    pub g2_2tau: QSeries,
    pub e3_2tau: QSeries,
    /// `(2G₂(2τ) + e₃(2τ))/f²`
    pub quad: QSeries,
    /// `e₃(2τ)/f²`
    pub point: QSeries,
    /// `Δ(2τ)²/(Δ(τ)Δ(4τ))`
    pub disc_ratio: QSeries,
}

/// Smallest truncation at which `f` and `1/f` have a known leading term.
pub const MIN_TRUNC: i64 = UNIT;

/// Rejects truncations too small to build the base forms.
pub fn check_trunc(trunc: i64) -> Result<()> {
    if trunc < MIN_TRUNC {
        return Err(crate::error::Error::BeyondTruncation {
            requested: MIN_TRUNC,
            valid_to: trunc,
        });
    }
    Ok(())
}

impl BaseForms {
    /// Panics below [`MIN_TRUNC`]; fallible callers go through [`check_trunc`].
    pub fn build(trunc: i64) -> Self {
        let theta = theta(trunc);
        let eta2_cubed = eta2_cubed(trunc);
        let f = qs_div(&eta2_cubed, &theta).expect("θ(0) = 1");
        let inv_f =
            qs_div(&QSeries::one(crate::qseries::EXACT), &f).expect("f has leading coefficient 1");
        let g2 = g2_2tau(trunc);
        let e3 = e3_2tau(trunc);
        let f2 = qs_mul(&f, &f);
        let two_g2 = g2.scale_rational(&Rational::from(2));
        let quad = qs_div(&qs_add(&two_g2, &e3), &f2).expect("f² has a unit leading coefficient");
        let point = qs_div(&e3, &f2).expect("f² has a unit leading coefficient");
        BaseForms {
            trunc,
            theta,
            eta2_cubed,
            f,
            inv_f,
            g2_2tau: g2,
            e3_2tau: e3,
            quad,
            point,
            disc_ratio: disc_ratio(trunc),
        }
    }

    /// Memoized per truncation; the cache is invisible apart from speed.
    pub fn cached(trunc: i64) -> Arc<BaseForms> {
        static CACHE: OnceLock<Mutex<HashMap<i64, Arc<BaseForms>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().unwrap().get(&trunc) {
            return Arc::clone(b);
        }
        let built = Arc::new(BaseForms::build(trunc));
        cache.lock().unwrap().entry(trunc).or_insert(built).clone()
    }

    /// `θ^σ · f · Δ(2τ)²/(Δ(τ)Δ(4τ))`.
    pub fn prefactor(&self, sigma: i64) -> Result<QSeries> {
        let theta_pow = self.theta.pow(sigma)?;
        Ok(qs_mul(&qs_mul(&theta_pow, &self.f), &self.disc_ratio))
    }
}

/// Independent constructions compared by [`identity_suite`]. Fields are public
/// so tests can perturb one input and watch the suite catch it.
#[derive(Clone, Debug)]
pub struct IdentityInputs {
    pub theta: QSeries,
    pub eta2_cubed_sum: QSeries,
    pub eta_1: QSeries,
    pub eta_2: QSeries,
    pub eta_4: QSeries,
    pub g2_2tau: QSeries,
    pub e3_2tau: QSeries,
    pub delta_1: QSeries,
    pub delta_2: QSeries,
    pub delta_4: QSeries,
}

/// Extra range built beyond the checked one; inverting `Δ(τ)Δ(4τ)` costs about 5.
const IDENTITY_MARGIN: i64 = 8 * UNIT;

impl IdentityInputs {
    pub fn build(trunc: i64) -> Self {
        let t = trunc + IDENTITY_MARGIN;
        let eta = |m: u32| eta_quotient(&EtaQuotientSpec::new(&[(2 * m, 1)]), t);
        IdentityInputs {
            theta: theta(t),
            eta2_cubed_sum: eta2_cubed(t),
            eta_1: eta(1),
            eta_2: eta(2),
            eta_4: eta(4),
            g2_2tau: g2_2tau(t),
            e3_2tau: e3_2tau(t),
            delta_1: discriminant(1, t),
            delta_2: discriminant(2, t),
            delta_4: discriminant(4, t),
        }
    }
}

fn compare(report: &mut Report, name: &str, lhs: Result<QSeries>, rhs: Result<QSeries>, upto: i64) {
    let outcome = lhs.and_then(|l| rhs.and_then(|r| l.first_difference(&r, upto)));
    match outcome {
        Ok(None) => report.push(
            name,
            true,
            format!("through q^{}", Rational::new(upto, UNIT)),
        ),
        Ok(Some(e)) => report.push(
            name,
            false,
            format!("first mismatch at q^{}", Rational::new(e, UNIT)),
        ),
        Err(err) => report.push(name, false, err.to_string()),
    }
}

/// Checks the five classical identities plus `f¹² = Δ(τ)Δ(4τ)/Δ(2τ)` and
/// `Δ(2τ)/f¹¹ = f Δ(2τ)²/(Δ(τ)Δ(4τ))` coefficientwise through `trunc`.
pub fn identity_suite(trunc: i64) -> Report {
    check_identities(&IdentityInputs::build(trunc), trunc)
}

pub fn check_identities(inp: &IdentityInputs, trunc: i64) -> Report {
    let mut rep = Report::new("identities");
    let eta2_prod = || inp.eta_2.pow(3);
    compare(
        &mut rep,
        "(1) eta(2tau)^3 = Jacobi sum",
        eta2_prod(),
        Ok(inp.eta2_cubed_sum.clone()),
        trunc,
    );

    let theta_eta = || -> Result<QSeries> {
        let num = inp.eta_2.pow(5)?;
        let den = qs_mul(&inp.eta_1.pow(2)?, &inp.eta_4.pow(2)?);
        qs_div(&num, &den)
    };
    compare(
        &mut rep,
        "(2) theta = eta(2t)^5/(eta(t)^2 eta(4t)^2)",
        Ok(inp.theta.clone()),
        theta_eta(),
        trunc,
    );

    let f = || qs_div(&inp.eta2_cubed_sum, &inp.theta);
    let f_eta = || -> Result<QSeries> {
        let num = qs_mul(&inp.eta_1.pow(2)?, &inp.eta_4.pow(2)?);
        qs_div(&num, &inp.eta_2.pow(2)?)
    };
    compare(
        &mut rep,
        "(3) f = eta(t)^2 eta(4t)^2/eta(2t)^2",
        f(),
        f_eta(),
        trunc,
    );

    let minus_two_g2 = inp.g2_2tau.scale_rational(&Rational::from(-2));
    compare(
        &mut rep,
        "(4) q dlog eta(2tau) = -2 G2(2tau)",
        q_log_deriv(&inp.eta_2),
        Ok(minus_two_g2.clone()),
        trunc,
    );
    compare(
        &mut rep,
        "(5) q dlog theta = -2 G2(2tau) - e3(2tau)",
        q_log_deriv(&inp.theta),
        Ok(qs_sub(&minus_two_g2, &inp.e3_2tau)),
        trunc,
    );

    let f12 = || f()?.pow(12);
    let d_quot = || qs_div(&qs_mul(&inp.delta_1, &inp.delta_4), &inp.delta_2);
    compare(
        &mut rep,
        "f^12 = Delta(t) Delta(4t)/Delta(2t)",
        f12(),
        d_quot(),
        trunc,
    );

    let lhs = || qs_div(&inp.delta_2, &f()?.pow(11)?);
    let rhs = || -> Result<QSeries> {
        let ratio = qs_div(
            &qs_mul(&inp.delta_2, &inp.delta_2),
            &qs_mul(&inp.delta_1, &inp.delta_4),
        )?;
        Ok(qs_mul(&f()?, &ratio))
    };
    compare(
        &mut rep,
        "Delta(2t)/f^11 = f Delta(2t)^2/(Delta(t) Delta(4t))",
        lhs(),
        rhs(),
        trunc,
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> Cyc8 {
        Cyc8::from_int(n)
    }

    #[test]
    fn discriminant_first_terms() {
        // brute-force oracle: expand q ∏_{n≤3}(1-q^n)^24 by repeated multiplication
        let mut poly = [0i64; 4];
        poly[0] = 1;
        for n in 1..=3usize {
            for _ in 0..24 {
                for j in (n..4).rev() {
                    poly[j] -= poly[j - n];
                }
            }
        }
        let d = discriminant(1, 4 * UNIT);
        assert_eq!(poly[..3], [1, -24, 252]);
        for (j, want) in poly.iter().enumerate() {
            assert_eq!(d.coeff_at(UNIT * (j as i64 + 1)).unwrap(), int(*want));
        }
        assert_eq!(d.lo(), UNIT);
    }

    #[test]
    fn eta2_cubed_product_matches_sum() {
        let t = 30 * UNIT;
        let prod = eta_quotient(&EtaQuotientSpec::new(&[(4, 3)]), t);
        assert_eq!(prod.first_difference(&eta2_cubed(t), t).unwrap(), None);
    }

    #[test]
    fn phi_leading_term() {
        let p = phi(4 * UNIT);
        assert_eq!(p.lo(), 12);
        assert_eq!(p.leading().unwrap(), &Cyc8::one());
        assert_eq!(
            EtaQuotientSpec::new(&[(1, 4), (4, 4), (2, -4)]).leading_exponent(),
            12
        );
    }

    #[test]
    fn theta_terms() {
        let th = theta(10 * UNIT);
        assert_eq!(th.coeff_at(0).unwrap(), int(1));
        assert_eq!(th.coeff_at(UNIT).unwrap(), int(2));
        assert_eq!(th.coeff_at(2 * UNIT).unwrap(), int(0));
        assert_eq!(th.coeff_at(4 * UNIT).unwrap(), int(2));
        assert_eq!(th.coeff_at(9 * UNIT).unwrap(), int(2));
    }

    #[test]
    fn g2_and_e3_terms() {
        let g2 = g2_2tau(10 * UNIT);
        assert_eq!(g2.coeff_at(0).unwrap(), Cyc8::from(Rational::new(-1, 24)));
        assert_eq!(g2.coeff_at(2 * UNIT).unwrap(), int(1));
        assert_eq!(g2.coeff_at(4 * UNIT).unwrap(), int(3));
        assert!(g2.terms().all(|(e, _)| e % (2 * UNIT) == 0));
        let e3 = e3_2tau(10 * UNIT);
        assert_eq!(e3.coeff_at(0).unwrap(), Cyc8::from(Rational::new(1, 12)));
        assert_eq!(e3.coeff_at(UNIT).unwrap(), int(-2));
        assert_eq!(e3.coeff_at(2 * UNIT).unwrap(), int(2));
        assert_eq!(e3.coeff_at(3 * UNIT).unwrap(), int(-8));
        assert!(e3.terms().all(|(e, _)| e % UNIT == 0 && e >= 0));
    }

    #[test]
    fn f_leading_term() {
        let f = f_form(5 * UNIT);
        assert_eq!(f.lo(), 12);
        assert_eq!(f.leading().unwrap(), &Cyc8::one());
    }

    #[test]
    fn g_tilde_terms() {
        let g = g_tilde_4k(1, 10 * UNIT);
        assert_eq!(g.lo(), 12);
        assert_eq!(g.coeff_at(12).unwrap(), int(1));
        assert_eq!(g.coeff_at(36).unwrap(), int(-28));
        assert_eq!(g.coeff_at(60).unwrap(), int(126));
        assert!(g.terms().all(|(e, _)| e % 24 == 12));
    }

    #[test]
    fn identities_hold_short_range() {
        let rep = identity_suite(UNIT);
        assert!(rep.all_passed(), "{rep}");
        assert_eq!(rep.checks.len(), 7);
    }

    #[test]
    fn perturbed_theta_is_caught() {
        let t = 6 * UNIT;
        let mut inp = IdentityInputs::build(t);
        let bump = QSeries::monomial(int(1), 5 * UNIT, inp.theta.valid_to());
        inp.theta = qs_add(&inp.theta, &bump);
        let rep = check_identities(&inp, t);
        let c = rep
            .find("(2) theta = eta(2t)^5/(eta(t)^2 eta(4t)^2)")
            .unwrap();
        assert!(!c.passed);
        assert!(c.detail.contains("q^5/1"), "{}", c.detail);
    }

    #[test]
    fn unsigned_e3_breaks_theta_log_derivative() {
        let t = 6 * UNIT;
        let mut inp = IdentityInputs::build(t);
        let tt = inp.e3_2tau.valid_to();
        let sig = divisor_sums(1, (tt / UNIT) as usize, true);
        let mut terms = vec![(0, Cyc8::from(Rational::new(1, 12)))];
        for (n, s) in sig.into_iter().enumerate().skip(1) {
            terms.push((UNIT * n as i64, Cyc8::from(Rational::from(s * 2))));
        }
        inp.e3_2tau = QSeries::from_terms(terms, tt);
        let rep = check_identities(&inp, t);
        let c = rep
            .find("(5) q dlog theta = -2 G2(2tau) - e3(2tau)")
            .unwrap();
        assert!(!c.passed);
        assert!(c.detail.contains("q^1/1"), "{}", c.detail);
    }

    #[test]
    fn f_is_eta_over_theta() {
        let t = 8 * UNIT;
        let lhs = qs_mul(&eta2_cubed(t), &theta(t).pow(-1).unwrap());
        assert_eq!(lhs.first_difference(&f_form(t), t).unwrap(), None);
    }
}
