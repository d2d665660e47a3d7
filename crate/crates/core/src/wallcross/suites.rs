use std::collections::BTreeMap;

use crate::arith::{factorial, Cyc8, Rational};
use crate::error::{Error, Result};
use crate::forms::{discriminant, g_tilde_4k, phi, BaseForms};
use crate::qseries::{ms_coeff, qs_div, qs_mul, qs_sub, MultiSeries, QSeries};
use crate::report::Report;

use super::lambda::{build_lambda, LambdaCaps, PTable};
use super::{auto_trunc, CycleData, DeltaTable, GSeries};

fn q4(n: i64) -> Rational {
    Rational::new(n, 1)
}

/// Index range for the recursion suite; `w` in quarter units. `P` is only
/// meaningful for `w < 0`, which is the default upper end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecursionGrid {
    /// Bound on `l + 2k + 2r`.
    pub max_weight: u32,
    pub max_b: u32,
    pub min_w: i64,
    pub max_w: i64,
}

impl Default for RecursionGrid {
    fn default() -> Self {
        RecursionGrid {
            max_weight: 8,
            max_b: 2,
            min_w: -25,
            max_w: -1,
        }
    }
}

impl RecursionGrid {
    /// Caps of a Λ holding every `P` the four recursions touch on this grid.
    pub fn caps(&self) -> LambdaCaps {
        let w = self.max_weight;
        LambdaCaps::new(w + 3, w / 2 + 1, w / 2 + 1, self.max_b + 1)
            .with_weight(w + 3 + self.max_b + 1)
    }
}

/// Accumulates pass/fail counts and the first failing index for one named check.
struct Tally {
    name: String,
    checked: usize,
    first_failure: Option<String>,
    error: Option<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            name: name.to_string(),
            checked: 0,
            first_failure: None,
            error: None,
        }
    }

    fn record(&mut self, outcome: Result<bool>, at: impl FnOnce() -> String) {
        match outcome {
            Ok(true) => self.checked += 1,
            Ok(false) => {
                self.checked += 1;
                if self.first_failure.is_none() {
                    self.first_failure = Some(at());
                }
            }
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(format!("{} at {}", e, at()));
                }
            }
        }
    }

    fn finish(self, rep: &mut Report) {
        match (self.error, self.first_failure) {
            (Some(e), _) => rep.push(self.name, false, e),
            (None, Some(f)) => rep.push(self.name, false, format!("first failure at {f}")),
            (None, None) => rep.push(self.name, true, format!("{} cases", self.checked)),
        }
    }
}

/// `(0)_s`–`(3)_s` on the closed-form `P`, built from Λ with signature `sigma`.
pub fn recursion_suite(grid: RecursionGrid, sigma: i64) -> Result<Report> {
    let table = PTable::new(grid.caps(), sigma, grid.max_w)?;
    Ok(check_recursions(&table, grid))
}

pub fn check_recursions(p: &PTable, grid: RecursionGrid) -> Report {
    let caps = p.caps();
    // below this every P in the table vanishes
    let floor = -(i64::from(caps.weight) + 3);
    let mut t0 = Tally::new("(0)_s P(l,k,r,b,w) = sum_n P(l,k,r,b+1,w-n^2)");
    let mut t1 = Tally::new("(1)_s P(l,k,r,b,w) = sum_n (-1)^n (n+1/2) P(l+1,k,r,b+1,w-(n+1/2)^2)");
    let mut t2 =
        Tally::new("(2)_s sum_n n^2 P(l,k,r,b+1,w-n^2) = 2 sum_n P(l-2,k+1,r,b+1,w-n^2), l >= 2");
    let mut t2_low = Tally::new("(2)_s at l < 2 against zero-padded P");
    let mut t3 = Tally::new(
        "(3)_s P(l,k,r+1,b,w) = sum_n (-1)^(n+1) ((n+1/2)^3 P(l+3,..) - 6(n+1/2) P(l+1,k+1,..))",
    );
    let mw = i64::from(grid.max_weight);
    for l in 0..=mw {
        for k in 0..=(mw - l) / 2 {
            for r in 0..=(mw - l - 2 * k) / 2 {
                for b in 0..=i64::from(grid.max_b) {
                    for w in grid.min_w..=grid.max_w {
                        let at = || format!("(l,k,r,b,w) = ({l},{k},{r},{b},{w}/4)");
                        t0.record(rec0(p, l, k, r, b, w, floor), at);
                        t1.record(rec1(p, l, k, r, b, w, floor), at);
                        // the blowup relation behind (2)_s only reaches l ≥ 2; below that the
                        // extreme-wall values of δ(p^r ·) make the left side nonzero
                        if l >= 2 {
                            t2.record(rec2(p, l, k, r, b, w, floor), at);
                        } else {
                            t2_low.record(rec2(p, l, k, r, b, w, floor), at);
                        }
                        if l + 2 * k + 2 * (r + 1) <= mw {
                            t3.record(rec3(p, l, k, r, b, w, floor), at);
                        }
                    }
                }
            }
        }
    }
    let mut rep = Report::new("recursions");
    t0.finish(&mut rep);
    t1.finish(&mut rep);
    t2.finish(&mut rep);
    t2_low.finish(&mut rep);
    t3.finish(&mut rep);
    rep
}

/// Integer `n` with `w - 4n² ≥ floor`, i.e. all terms of a `Σ_n f(w - n²)` that can be nonzero.
fn square_shifts(w: i64, floor: i64) -> impl Iterator<Item = i64> {
    let mut top = 0;
    while w - 4 * (top + 1) * (top + 1) >= floor {
        top += 1;
    }
    -top..=top
}

/// `n ≥ 0` with `w - (2n+1)² ≥ floor`; `n` and `-n-1` give the same shift.
fn odd_shifts(w: i64, floor: i64) -> impl Iterator<Item = i64> {
    (0..).take_while(move |n| w - (2 * n + 1) * (2 * n + 1) >= floor)
}

fn rec0(p: &PTable, l: i64, k: i64, r: i64, b: i64, w: i64, floor: i64) -> Result<bool> {
    let mut rhs = Cyc8::zero();
    for n in square_shifts(w, floor) {
        rhs += &p.get(l, k, r, b + 1, w - 4 * n * n)?;
    }
    Ok(p.get(l, k, r, b, w)? == rhs)
}

fn rec1(p: &PTable, l: i64, k: i64, r: i64, b: i64, w: i64, floor: i64) -> Result<bool> {
    let mut rhs = Cyc8::zero();
    for n in odd_shifts(w, floor) {
        // (-1)^n (n+1/2) for n and -n-1 coincide, hence the factor 2
        let c = if n % 2 == 0 { 2 * n + 1 } else { -(2 * n + 1) };
        rhs += &p
            .get(l + 1, k, r, b + 1, w - (2 * n + 1).pow(2))?
            .scale(&q4(c));
    }
    Ok(p.get(l, k, r, b, w)? == rhs)
}

fn rec2(p: &PTable, l: i64, k: i64, r: i64, b: i64, w: i64, floor: i64) -> Result<bool> {
    let mut lhs = Cyc8::zero();
    let mut rhs = Cyc8::zero();
    for n in square_shifts(w, floor) {
        let ws = w - 4 * n * n;
        lhs += &p.get(l, k, r, b + 1, ws)?.scale(&q4(n * n));
        rhs += &p.get(l - 2, k + 1, r, b + 1, ws)?.scale(&q4(2));
    }
    Ok(lhs == rhs)
}

fn rec3(p: &PTable, l: i64, k: i64, r: i64, b: i64, w: i64, floor: i64) -> Result<bool> {
    let mut rhs = Cyc8::zero();
    for n in odd_shifts(w, floor) {
        let ws = w - (2 * n + 1).pow(2);
        let h = Rational::new(2 * n + 1, 2);
        // (-1)^{n+1} h^3 and (-1)^{n+1} h are both invariant under n ↦ -n-1
        let sign = if n % 2 == 0 { -2 } else { 2 };
        let a = p.get(l + 3, k, r, b + 1, ws)?.scale(&(h.pow(3) * q4(sign)));
        let c = p
            .get(l + 1, k + 1, r, b + 1, ws)?
            .scale(&(h * q4(-6 * sign)));
        rhs += &a;
        rhs += &c;
    }
    Ok(p.get(l, k, r + 1, b, w)? == rhs)
}

/// Series appearing as coefficients in `(0)_d`–`(3)_d`.
#[derive(Clone, Debug)]
pub struct DiffeqForms {
    pub theta: QSeries,
    pub eta2_cubed: QSeries,
    pub q_d_theta: QSeries,
    pub q_d_eta2_cubed: QSeries,
}

impl DiffeqForms {
    pub fn new(trunc: i64) -> Self {
        let b = BaseForms::cached(trunc);
        DiffeqForms {
            theta: b.theta.clone(),
            eta2_cubed: b.eta2_cubed.clone(),
            q_d_theta: b.theta.q_deriv(),
            q_d_eta2_cubed: b.eta2_cubed.q_deriv(),
        }
    }
}

/// Differential equations for Λ with caps `caps`, compared through exponent `upto` (1/48 units).
pub fn diffeq_suite(caps: LambdaCaps, sigma: i64, upto: i64) -> Result<Report> {
    let trunc = caps.trunc_for(upto);
    let lam = build_lambda(caps, sigma, trunc)?;
    Ok(check_diffeqs(&lam, &DiffeqForms::new(trunc), upto, false))
}

const L: usize = 0;
const QV: usize = 1;
const X: usize = 2;
const T: usize = 3;

fn shifted(m: &[u32], shift: [u32; 4]) -> Vec<u32> {
    m.iter().zip(shift).map(|(a, b)| a + b).collect()
}

/// Each equation is checked on every monomial whose shifted sources are all inside
/// the built caps. `printed_sign` flips the sign of `(3)_d` to the variant that
/// keeps `+(q d/dq η(2τ)³)`; it exists so a test can show that variant fails.
pub fn check_diffeqs(
    lam: &MultiSeries,
    forms: &DiffeqForms,
    upto: i64,
    printed_sign: bool,
) -> Report {
    let d_t = lam.derivative(T, 1);
    let d_lt = d_t.derivative(L, 1);
    let d_q = lam.derivative(QV, 1);
    let d_ll = lam.derivative(L, 2);
    let d_x = lam.derivative(X, 1);
    let d_lllt = d_lt.derivative(L, 2);
    let d_lqt = d_lt.derivative(QV, 1);

    let mut rep = Report::new("diffeq");
    let mut run = |name: &str, shifts: &[[u32; 4]], eq: &dyn Fn(&[u32]) -> (QSeries, QSeries)| {
        let mut tally = Tally::new(name);
        for m in lam.monomials() {
            if !shifts.iter().all(|s| lam.admits(&shifted(&m, *s))) {
                continue;
            }
            let (lhs, rhs) = eq(&m);
            let outcome = lhs.first_difference(&rhs, upto).map(|d| d.is_none());
            tally.record(outcome, || format!("monomial {m:?}"));
        }
        tally.finish(&mut rep);
    };

    run("(0)_d theta dt Lambda = Lambda", &[[0, 0, 0, 1]], &|m| {
        (qs_mul(&forms.theta, &ms_coeff(&d_t, m)), ms_coeff(lam, m))
    });
    run(
        "(1)_d eta(2tau)^3 dL dt Lambda = Lambda",
        &[[1, 0, 0, 1]],
        &|m| {
            (
                qs_mul(&forms.eta2_cubed, &ms_coeff(&d_lt, m)),
                ms_coeff(lam, m),
            )
        },
    );
    run(
        "(2)_d 2 theta dQ Lambda = (q d/dq theta) dL^2 Lambda",
        &[[0, 1, 0, 0], [2, 0, 0, 0]],
        &|m| {
            (
                qs_mul(&forms.theta, &ms_coeff(&d_q, m)).scale_rational(&q4(2)),
                qs_mul(&forms.q_d_theta, &ms_coeff(&d_ll, m)),
            )
        },
    );
    let name3 = if printed_sign {
        "(3)_d dx Lambda = (q d/dq eta^3) dL^3 dt Lambda - 6 eta^3 dL dQ dt Lambda"
    } else {
        "(3)_d dx Lambda = -(q d/dq eta^3) dL^3 dt Lambda + 6 eta^3 dL dQ dt Lambda"
    };
    run(name3, &[[0, 0, 1, 0], [3, 0, 0, 1], [1, 1, 0, 1]], &|m| {
        let a = qs_mul(&forms.q_d_eta2_cubed, &ms_coeff(&d_lllt, m));
        let b = qs_mul(&forms.eta2_cubed, &ms_coeff(&d_lqt, m)).scale_rational(&q4(6));
        let rhs = if printed_sign {
            qs_sub(&a, &b)
        } else {
            qs_sub(&b, &a)
        };
        (ms_coeff(&d_x, m), rhs)
    });
    rep
}

/// Half-integers `m/2` shifting ξ by `mE` with `ξ² - m² ≥ -(cap + 3)`.
fn blowup_shifts(xi_sq: i64, cap: u32) -> Vec<i64> {
    let bound = i64::from(cap) + 3;
    let mut top = 0;
    while xi_sq - (top + 1) * (top + 1) >= -bound {
        top += 1;
    }
    (-top..=top).collect()
}

fn exceptional(base: &CycleData, m: i64) -> CycleData {
    // (ξ + mE)/2 · Ě = -m/2 and Q(Ě) = -1
    base.clone().with_cycle(
        "w",
        Cyc8::from(Rational::new(-m, 2)),
        Cyc8::from_int(-1),
        Some(3),
    )
}

/// Blowup identities relating main-theorem residues on X (signature σ) to those
/// on the blowup (signature σ-1), for one class with `ξ/2·α = half`, `Q(α) = quad`.
pub fn blowup_consistency_at(
    xi_sqs: &[i64],
    sigma: i64,
    degree_cap: u32,
    half: &Rational,
    quad: &Rational,
) -> Result<Report> {
    let cap = degree_cap;
    let base = CycleData::rational(half.clone(), quad.clone());
    let g_x = GSeries::for_residues(sigma, &base, cap, -1)?;
    let max_xi = *xi_sqs
        .iter()
        .max()
        .ok_or_else(|| Error::Invalid("no xi^2 given".into()))?;
    if max_xi >= 0 {
        return Err(Error::NonNegativeXiSq(max_xi));
    }
    let mut hat: BTreeMap<i64, GSeries> = BTreeMap::new();
    for m in blowup_shifts(max_xi, cap + 1) {
        hat.insert(
            m,
            GSeries::build(
                sigma - 1,
                &exceptional(&base, m),
                cap + 1,
                auto_trunc(0, cap + 1),
            )?,
        );
    }
    let lam_caps =
        LambdaCaps::new(cap + 1, cap.div_ceil(2), cap.div_ceil(2), 1).with_weight(cap + 2);
    let ptab = PTable::new(lam_caps, sigma, 0)?;

    let label = format!("alpha=({half},{quad}), sigma={sigma}");
    let mut ta = Tally::new(&format!(
        "(1)_r delta_xi(a) = sum_n (-1)^(n-1) delta_(xi+(2n+1)E)(E a) [{label}]"
    ));
    let mut tb = Tally::new(&format!(
        "(3)_r delta_xi(p b) = sum_n (-1)^n delta_(xi+(2n+1)E)(E^3 b) [{label}]"
    ));
    let mut tc = Tally::new(&format!(
        "(0)_r delta_xi(a) = sum_n delta_(xi+2nE)(a) [{label}]"
    ));
    let mut td = Tally::new(&format!("(2)_r sum_n delta_(xi+2nE)(E^2 b) = 0 [{label}]"));
    let mut te = Tally::new(&format!("combinatorial lemma vs P(l,k,r,1,w) [{label}]"));

    for &xi_sq in xi_sqs {
        let tx = g_x.residue_table(xi_sq)?;
        let mut shifted: BTreeMap<i64, DeltaTable> = BTreeMap::new();
        for m in blowup_shifts(xi_sq, cap + 1) {
            shifted.insert(m, hat[&m].residue_table(xi_sq - m * m)?);
        }
        let get = |m: i64, a: u32, j: u32, r: u32| -> Cyc8 {
            shifted
                .get(&m)
                .map(|t| t.get(&[a, j], r))
                .unwrap_or_default()
        };
        let at = |a: u32, r: u32| move || format!("xi^2={xi_sq}, a={a}, r={r}");
        for a in 0..=cap {
            for r in 0..=(cap - a) / 2 {
                let lhs = tx.get(&[a], r);
                // odd shifts m = 2n+1: sign (-1)^{n-1}
                let mut rhs = Cyc8::zero();
                for (&m, _) in shifted.iter().filter(|(m, _)| m.rem_euclid(2) == 1) {
                    let n = (m - 1) / 2;
                    let v = get(m, a, 1, r);
                    if (n - 1).rem_euclid(2) == 0 {
                        rhs += &v;
                    } else {
                        rhs -= &v;
                    }
                }
                ta.record(Ok(lhs == rhs), at(a, r));

                let mut rhs0 = Cyc8::zero();
                for (&m, _) in shifted.iter().filter(|(m, _)| m.rem_euclid(2) == 0) {
                    rhs0 += &get(m, a, 0, r);
                }
                tc.record(Ok(lhs == rhs0), at(a, r));

                if a + 2 * r + 2 <= cap {
                    let lhs_p = tx.get(&[a], r + 1);
                    let mut rhs3 = Cyc8::zero();
                    for (&m, _) in shifted.iter().filter(|(m, _)| m.rem_euclid(2) == 1) {
                        let n = (m - 1) / 2;
                        let v = get(m, a, 3, r);
                        if n.rem_euclid(2) == 0 {
                            rhs3 += &v;
                        } else {
                            rhs3 -= &v;
                        }
                    }
                    tb.record(Ok(lhs_p == rhs3), at(a, r));

                    let mut sum2 = Cyc8::zero();
                    for (&m, _) in shifted.iter().filter(|(m, _)| m.rem_euclid(2) == 0) {
                        sum2 += &get(m, a, 2, r);
                    }
                    td.record(Ok(sum2.is_zero()), at(a, r));
                }
            }
        }

        for (&m, table) in &shifted {
            let w = xi_sq - m * m;
            for j in 0..=3u32 {
                for a in 0..=(cap + 1).saturating_sub(j) {
                    for r in 0..=(cap + 1 - j - a) / 2 {
                        let direct = table.get(&[a, j], r);
                        let via = lemma_value(&ptab, half, quad, m, j, a, r, w);
                        let outcome = via.map(|v| v == direct);
                        te.record(outcome, || {
                            format!("xi^2={xi_sq}, m={m}, j={j}, a={a}, r={r}")
                        });
                    }
                }
            }
        }
    }

    let mut rep = Report::new("blowup");
    ta.finish(&mut rep);
    tb.finish(&mut rep);
    tc.finish(&mut rep);
    td.finish(&mut rep);
    te.finish(&mut rep);
    Ok(rep)
}

/// `δ_{ξ+mE}(Ě^j α^a p^r)` from `P` via
/// `Σ_{s+2t=j} (m/2)^s (-1)^{s+t} j!/(s!t!) Σ_{l+2k=a} a!/(l!k!) P(l+s,k+t,r,1,w) λ^l μ^k`.
#[allow(clippy::too_many_arguments)]
fn lemma_value(
    p: &PTable,
    half: &Rational,
    quad: &Rational,
    m: i64,
    j: u32,
    a: u32,
    r: u32,
    w_quarters: i64,
) -> Result<Cyc8> {
    let mut total = Cyc8::zero();
    for t in 0..=j / 2 {
        let s = j - 2 * t;
        let sign = if (s + t).is_multiple_of(2) { 1 } else { -1 };
        let outer = Rational::new(m, 2).pow(s as i32)
            * factorial(j)
            * factorial(s).recip()
            * factorial(t).recip()
            * q4(sign);
        for k in 0..=a / 2 {
            let l = a - 2 * k;
            let pv = p.get(
                i64::from(l + s),
                i64::from(k + t),
                i64::from(r),
                1,
                w_quarters,
            )?;
            if pv.is_zero() {
                continue;
            }
            let inner = factorial(a)
                * factorial(l).recip()
                * factorial(k).recip()
                * half.pow(l as i32)
                * quad.pow(k as i32);
            total += &pv.scale(&(&outer * &inner));
        }
    }
    Ok(total)
}

/// The α test points used by [`blowup_consistency`].
pub const BLOWUP_TEST_POINTS: [(i64, i64, i64, i64); 3] =
    [(1, 1, 0, 1), (3, 2, -2, 1), (-2, 3, 5, 7)];

/// [`blowup_consistency_at`] at three fixed rational classes.
pub fn blowup_consistency(xi_sq: i64, sigma: i64, degree_cap: u32) -> Result<Report> {
    if xi_sq >= 0 {
        return Err(Error::NonNegativeXiSq(xi_sq));
    }
    let mut rep = Report::new("blowup");
    for (hn, hd, qn, qd) in BLOWUP_TEST_POINTS {
        rep.extend(blowup_consistency_at(
            &[xi_sq],
            sigma,
            degree_cap,
            &Rational::new(hn, hd),
            &Rational::new(qn, qd),
        )?);
    }
    Ok(rep)
}

/// `[q⁰] G̃_{4k} Δ / φ^{2k+5}`.
pub fn h_k_residue(k: u32, trunc: Option<i64>) -> Result<Cyc8> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let pw = i64::from(2 * k + 5);
    // φ^{2k+5} starts at 12(2k+5); inverting it costs twice that
    let t = trunc.unwrap_or(24 * pw + 96);
    let num = qs_mul(&g_tilde_4k(k, t), &discriminant(1, t));
    let den = phi(t).pow(pw)?;
    let h = qs_div(&num, &den)?;
    h.coeff_at(0)
}
