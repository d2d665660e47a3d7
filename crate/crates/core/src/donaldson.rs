//! Donaldson invariants of P² from wall-crossing on its one-point blowup, and
//! the vanishing of signed wall sums on P¹×P¹.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{factorial, i_pow, rational_part, sqrt_i_pow, Cyc8, Rational};
use crate::error::{Error, Result};
use crate::forms::BaseForms;
use crate::qseries::{ms_coeff, ms_exp, MultiSeries, Var};
use crate::report::Report;
use crate::wallcross::{auto_trunc, CycleData, DeltaTable, GSeries};
use crate::walls::{
    defines_wall_type, walls_P1xP1, walls_blowupP2_e, walls_blowupP2_h, Lattice, WallClass,
};

pub const CONVENTION: &str = "paper-positive-leading-term";

/// First Chern class of the bundles on P².
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum C1 {
    H,
    Zero,
}

impl C1 {
    /// Degrees carrying invariants satisfy `N ≡ residue (mod 4)`.
    pub fn support_residue(self) -> u32 {
        match self {
            C1::H => 0,
            C1::Zero => 1,
        }
    }

    pub fn supports(self, n: u32) -> bool {
        n % 4 == self.support_residue()
    }
}

impl fmt::Display for C1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            C1::H => "H",
            C1::Zero => "0",
        })
    }
}

impl FromStr for C1 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(C1::H),
            "0" => Ok(C1::Zero),
            _ => Err(Error::Parse(format!("c1 must be H or 0, got {s:?}"))),
        }
    }
}

impl Serialize for C1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for C1 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// `ε(c₁, ξ, N) = (5N + 3 + ξ² + (ξ - c₁)²)/4`.
pub fn epsilon(lat: &Lattice, c1: &[i64], xi: &WallClass, n: u32) -> Result<i64> {
    let diff: Vec<i64> = xi.coords.iter().zip(c1).map(|(a, b)| a - b).collect();
    let num = 5 * i64::from(n) + 3 + xi.xi_sq(lat) + lat.square(&diff);
    if num.rem_euclid(4) != 0 {
        return Err(Error::NonIntegral(format!(
            "epsilon numerator {num} for xi = {:?}, c1 = {c1:?}, N = {n}",
            xi.coords
        )));
    }
    Ok(num / 4)
}

/// `Φ_{c₁,N}(Ȟ^{N-2r} p^r)` for all `N ≤ max_degree`, zeros included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantTable {
    pub c1: C1,
    pub max_degree: u32,
    pub entries: BTreeMap<(u32, u32), Rational>,
    pub trunc_used: i64,
}

impl InvariantTable {
    fn empty(c1: C1, max_degree: u32, trunc_used: i64) -> Self {
        let mut entries = BTreeMap::new();
        for n in 0..=max_degree {
            for r in 0..=n / 2 {
                entries.insert((n, r), Rational::zero());
            }
        }
        InvariantTable {
            c1,
            max_degree,
            entries,
            trunc_used,
        }
    }

    pub fn get(&self, n: u32, r: u32) -> Rational {
        self.entries
            .get(&(n, r))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Entries off the congruence class, which must all vanish.
    pub fn support_violations(&self) -> Vec<(u32, u32)> {
        self.entries
            .iter()
            .filter(|((n, _), v)| !self.c1.supports(*n) && !v.is_zero())
            .map(|(k, _)| *k)
            .collect()
    }

    /// Keys on which two tables differ, ignoring truncation metadata.
    pub fn differences(&self, other: &InvariantTable) -> Vec<(u32, u32)> {
        let keys: std::collections::BTreeSet<_> =
            self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter()
            .filter(|(n, r)| self.get(*n, *r) != other.get(*n, *r))
            .copied()
            .collect()
    }

    /// Aligned text rendering of the supported degrees.
    pub fn to_table_string(&self) -> String {
        let mut out = format!("c1 = {}\n{:>4} {:>4}  value\n", self.c1, "N", "r");
        for ((n, r), v) in &self.entries {
            if self.c1.supports(*n) {
                out.push_str(&format!("{n:>4} {r:>4}  {v}\n"));
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    #[serde(rename = "N")]
    n: u32,
    r: u32,
    value: Rational,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    c1: C1,
    max_degree: u32,
    trunc_used: i64,
    entries: Vec<EntryJson>,
    convention: String,
}

impl Serialize for InvariantTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableJson {
            c1: self.c1,
            max_degree: self.max_degree,
            trunc_used: self.trunc_used,
            entries: self
                .entries
                .iter()
                .map(|((n, r), v)| EntryJson {
                    n: *n,
                    r: *r,
                    value: v.clone(),
                })
                .collect(),
            convention: CONVENTION.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for InvariantTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TableJson::deserialize(d)?;
        if j.convention != CONVENTION {
            return Err(serde::de::Error::custom(format!(
                "unknown convention {:?}",
                j.convention
            )));
        }
        Ok(InvariantTable {
            c1: j.c1,
            max_degree: j.max_degree,
            trunc_used: j.trunc_used,
            entries: j
                .entries
                .into_iter()
                .map(|e| ((e.n, e.r), e.value))
                .collect(),
        })
    }
}

/// `e_n(z, x) = exp((n/2)√i z/f - i(z²/2)(2G₂+e₃)/f² - 3ix e₃/f²) Δ(2τ)²/(Δ(τ)Δ(4τ))`.
fn e_n_series(n: i64, forms: &BaseForms, max_degree: u32) -> Result<MultiSeries> {
    let vars = vec![Var::new("z", 1), Var::new("x", 2)];
    let mut expo = MultiSeries::zero(vars, max_degree);
    let sq = Cyc8::s();
    let i = Cyc8::i();
    expo.set(
        vec![1, 0],
        forms.inv_f.scale(&sq.scale(&Rational::new(n, 2))),
    );
    expo.set(
        vec![2, 0],
        forms.quad.scale(&i.scale(&Rational::new(-1, 2))),
    );
    expo.set(vec![0, 1], forms.point.scale(&i.scale(&Rational::from(-3))));
    Ok(ms_exp(&expo)?.mul_series(&forms.disc_ratio))
}

/// The lattice terms `(n, a)` and their weights for one of the two closed sums.
struct ClosedSum {
    /// `n > 0` of the right parity.
    n_start: i64,
    /// `a` has parity opposite to `n` and `a > n`.
    bound: i64,
    with_f: bool,
    weight: fn(i64, i64) -> Cyc8,
}

fn weight_h(n: i64, _a: i64) -> Cyc8 {
    // (-1)^{(n+1)/2}
    Cyc8::from_int(if ((n + 1) / 2) % 2 == 0 { 1 } else { -1 })
}

fn weight_0(_n: i64, a: i64) -> Cyc8 {
    // (-1)^{(a-1)/2} a/(2√i), with 1/√i = √i^7
    let sign = if ((a - 1) / 2) % 2 == 0 { 1 } else { -1 };
    sqrt_i_pow(7).scale(&Rational::new(sign * a, 2))
}

fn closed_sum(c1: C1, max_degree: u32, trunc: Option<i64>) -> Result<InvariantTable> {
    let spec = match c1 {
        C1::H => ClosedSum {
            n_start: 1,
            bound: i64::from(max_degree) + 3,
            with_f: true,
            weight: weight_h,
        },
        C1::Zero => ClosedSum {
            n_start: 2,
            bound: i64::from(max_degree) + 4,
            with_f: false,
            weight: weight_0,
        },
    };
    let t = trunc.unwrap_or_else(|| auto_trunc(0, max_degree + 1));
    crate::forms::check_trunc(t)?;
    closed_sum_from(&BaseForms::cached(t), c1, spec, max_degree)
}

fn closed_sum_from(
    forms: &BaseForms,
    c1: C1,
    spec: ClosedSum,
    max_degree: u32,
) -> Result<InvariantTable> {
    let t = forms.trunc;
    let mut acc: BTreeMap<(u32, u32), Cyc8> = BTreeMap::new();

    let series_for = |n: i64| -> Result<MultiSeries> {
        let e = e_n_series(n, forms, max_degree)?;
        Ok(if spec.with_f {
            e.mul_series(&forms.f)
        } else {
            e
        })
    };
    let shell_is_zero = |s: &MultiSeries, n: i64, a: i64| -> Result<bool> {
        for mono in s.monomials() {
            if !ms_coeff(s, &mono)
                .coeff_at(-12 * (a * a - n * n))?
                .is_zero()
            {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mut n = spec.n_start;
    // the smallest a² - n² for a given n is (n+1)² - n² = 2n + 1
    while 2 * n < spec.bound {
        let s = series_for(n)?;
        let mut a = n + 1;
        while a * a - n * n <= spec.bound {
            let w = (spec.weight)(n, a);
            let exponent = -12 * (a * a - n * n);
            for deg in 0..=max_degree {
                for r in 0..=deg / 2 {
                    let c = ms_coeff(&s, &[deg - 2 * r, r]).coeff_at(exponent)?;
                    if c.is_zero() {
                        continue;
                    }
                    let norm = factorial(deg - 2 * r) * factorial(r);
                    let term = &w * &c.scale(&norm);
                    *acc.entry((deg, r)).or_default() += &term;
                }
            }
            a += 2;
        }
        if !shell_is_zero(&s, n, a)? {
            return Err(Error::Invalid(format!(
                "closed sum: term (n, a) = ({n}, {a}) past the bound is nonzero"
            )));
        }
        n += 2;
    }
    if !shell_is_zero(&series_for(n)?, n, n + 1)? {
        return Err(Error::Invalid(format!(
            "closed sum: first excluded n = {n} contributes"
        )));
    }

    let mut table = InvariantTable::empty(c1, max_degree, t);
    for (k, v) in acc {
        table.entries.insert(k, rational_part(&v)?);
    }
    Ok(table)
}

/// `Φ^{P²}_H` from `res_{q=0} Σ_{n odd, a even > n} (-1)^{(n+1)/2} q^{(a²-n²)/4} e_n f`.
pub fn phi_p2_h(max_degree: u32) -> Result<InvariantTable> {
    closed_sum(C1::H, max_degree, None)
}

/// `Φ^{P²}_0` from `res_{q=0} Σ_{n even > 0, a odd > n} (-1)^{(a-1)/2} q^{(a²-n²)/4} a/(2√i) e_n`.
pub fn phi_p2_0(max_degree: u32) -> Result<InvariantTable> {
    closed_sum(C1::Zero, max_degree, None)
}

/// Either closed sum with an explicit base truncation (1/48 units).
pub fn phi_p2_with(c1: C1, max_degree: u32, trunc: Option<i64>) -> Result<InvariantTable> {
    closed_sum(c1, max_degree, trunc)
}

/// The same invariants assembled wall by wall on `Y = P²#P̄²` from residue tables:
/// `Σ_{ξ ∈ W_h} √i^{(ξ²+3)+(ξ-H)²} δ_ξ(exp(-√i Ȟz + ipx))` for `c₁ = H`, and
/// `Σ_{ξ ∈ W_e} √i^{(ξ²+3)+(ξ-E)²} δ_ξ(-√i Ě exp(-√i Ȟz + ipx))` in degree `N+1` for `c₁ = 0`.
pub fn phi_via_wallsum(c1: C1, max_degree: u32) -> Result<InvariantTable> {
    phi_via_wallsum_with(c1, max_degree, None)
}

pub fn phi_via_wallsum_with(c1: C1, max_degree: u32, trunc: Option<i64>) -> Result<InvariantTable> {
    let lat = Lattice::diagonal(2);
    let h = [1, 0];
    let e = [0, 1];
    let minus_sqrt_i = sqrt_i_pow(5);
    let cap = match c1 {
        C1::H => max_degree,
        C1::Zero => max_degree + 1,
    };
    let t = trunc.unwrap_or_else(|| auto_trunc(0, cap));
    let mut series: BTreeMap<(i64, i64), GSeries> = BTreeMap::new();
    let mut tables: BTreeMap<Vec<i64>, DeltaTable> = BTreeMap::new();
    let mut acc: BTreeMap<(u32, u32), Cyc8> = BTreeMap::new();

    for deg in 0..=max_degree {
        let (walls, reference) = match c1 {
            C1::H => (walls_blowupP2_h(deg), h),
            C1::Zero => (walls_blowupP2_e(deg + 1), e),
        };
        for xi in walls {
            let xh = lat.pairing(&xi.coords, &h);
            let xe = lat.pairing(&xi.coords, &e);
            let diff: Vec<i64> = xi
                .coords
                .iter()
                .zip(reference)
                .map(|(a, b)| a - b)
                .collect();
            let sign = sqrt_i_pow(xi.xi_sq + 3 + lat.square(&diff));
            let key = match c1 {
                C1::H => (xh, 0),
                C1::Zero => (xh, xe),
            };
            if let std::collections::btree_map::Entry::Vacant(e) = series.entry(key) {
                let z_half = minus_sqrt_i.scale(&Rational::new(xh, 2));
                let mut cyc = CycleData::single(z_half, Cyc8::i());
                if c1 == C1::Zero {
                    cyc = cyc.with_cycle(
                        "w",
                        minus_sqrt_i.scale(&Rational::new(xe, 2)),
                        -&Cyc8::i(),
                        Some(1),
                    );
                }
                e.insert(GSeries::build(0, &cyc, cap, t)?);
            }
            if !tables.contains_key(&xi.coords) {
                tables.insert(xi.coords.clone(), series[&key].residue_table(xi.xi_sq)?);
            }
            let table = &tables[&xi.coords];
            for r in 0..=deg / 2 {
                let z_deg = deg - 2 * r;
                let d = match c1 {
                    C1::H => table.get(&[z_deg], r),
                    C1::Zero => table.get(&[z_deg, 1], r),
                };
                if d.is_zero() {
                    continue;
                }
                let term = &(&sign * &i_pow(i64::from(r))) * &d;
                *acc.entry((deg, r)).or_default() += &term;
            }
        }
    }

    let mut table = InvariantTable::empty(c1, max_degree, t);
    for (k, v) in acc {
        table.entries.insert(k, rational_part(&v)?);
    }
    Ok(table)
}

/// `(-1)^{k+1} Σ_{ξ ∈ W(F,G)} (-1)^{ε(F+G,ξ,4k-1)} δ_ξ((2Ǧ)^{4k-1})` on `P¹×P¹` for one `k`.
pub fn qin_sum(k: u32, trunc: Option<i64>) -> Result<Rational> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let lat = Lattice::hyperbolic(0);
    let c1 = [1, 1];
    let g = [0, 1];
    let deg = 4 * k - 1;
    let t = trunc.unwrap_or_else(|| auto_trunc(0, deg));
    let mut series: BTreeMap<i64, GSeries> = BTreeMap::new();
    let mut total = Cyc8::zero();
    for xi in walls_P1xP1(deg) {
        debug_assert!(defines_wall_type(xi.xi_sq, deg));
        // ξ/2 · 2G = ξ·G, and Q(2G) = 0
        let half = lat.pairing(&xi.coords, &g);
        if let std::collections::btree_map::Entry::Vacant(e) = series.entry(half) {
            let cyc = CycleData::rational(Rational::from(half), Rational::zero());
            e.insert(GSeries::build(0, &cyc, deg, t)?);
        }
        let d = series[&half].residue_table(xi.xi_sq)?.get(&[deg], 0);
        let eps = epsilon(&lat, &c1, &xi, deg)?;
        if eps.rem_euclid(2) == 0 {
            total += &d;
        } else {
            total -= &d;
        }
    }
    let v = rational_part(&total)?;
    Ok(if k % 2 == 1 { v } else { -v })
}

/// The signed wall sums for `k = 1..=k_max`, each of which must vanish.
pub fn qin_vanishing(k_max: u32) -> Result<Report> {
    qin_vanishing_with(k_max, None)
}

pub fn qin_vanishing_with(k_max: u32, trunc: Option<i64>) -> Result<Report> {
    let mut rep = Report::new("qin");
    for k in 1..=k_max {
        let v = qin_sum(k, trunc)?;
        rep.push(
            format!(
                "signed wall sum over W(F,G) of delta((2G)^{}) = 0, k = {k}",
                4 * k - 1
            ),
            v.is_zero(),
            format!("sum = {v}, {} walls", walls_P1xP1(4 * k - 1).len()),
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_examples() {
        let p = Lattice::hyperbolic(0);
        let xi = p.class(vec![1, -3]);
        assert_eq!(epsilon(&p, &[1, 1], &xi, 3).unwrap(), 3);
        // (-1)^{k+1+ε} = (-1)^{n+m} for ξ = (2n-1)F - (2m-1)G
        for k in 1..=3u32 {
            for w in walls_P1xP1(4 * k - 1) {
                let (n, m) = ((w.coords[0] + 1) / 2, (-w.coords[1] + 1) / 2);
                let e = epsilon(&p, &[1, 1], &w, 4 * k - 1).unwrap();
                assert_eq!(
                    (i64::from(k) + 1 + e).rem_euclid(2),
                    (n + m).rem_euclid(2),
                    "{w:?}"
                );
            }
        }
        let y = Lattice::diagonal(2);
        // H - 2E: ξ² = -3, a wall of type 4
        let xi = y.class(vec![1, -2]);
        assert_eq!(epsilon(&y, &[1, 0], &xi, 4).unwrap(), (20 + 3 - 3 - 4) / 4);
        assert!(matches!(
            epsilon(&y, &[1, 0], &xi, 2),
            Err(Error::NonIntegral(_))
        ));
    }

    #[test]
    fn closed_sum_weights_match_wall_signs() {
        let y = Lattice::diagonal(2);
        for n in (1..12i64).step_by(2) {
            for a in ((n + 1)..14).step_by(2) {
                let xi = y.class(vec![n, -a]);
                let d = y.square(&[n - 1, -a]);
                assert_eq!(sqrt_i_pow(xi.xi_sq + 3 + d), weight_h(n, a), "n={n} a={a}");
            }
        }
        // i^{a+2} times the √i a/2 produced by d/dw equals (-1)^{(a-1)/2} a/(2√i)
        for n in (2..12i64).step_by(2) {
            for a in ((n + 1)..15).step_by(2) {
                let xi = y.class(vec![n, -a]);
                let d = y.square(&[n, -(a + 1)]);
                let wall = sqrt_i_pow(xi.xi_sq + 3 + d);
                assert_eq!(wall, i_pow(a + 2), "n={n} a={a}");
                let from_derivative = &wall * &Cyc8::s().scale(&Rational::new(a, 2));
                assert_eq!(from_derivative, weight_0(n, a), "n={n} a={a}");
            }
        }
    }

    #[test]
    fn p2_h_small() {
        let t = phi_p2_h(8).unwrap();
        assert!(t.support_violations().is_empty());
        // degree 0 has the single extreme wall H - 2E with δ = 1 and weight √i^{-4}
        assert_eq!(
            walls_blowupP2_h(0),
            vec![Lattice::diagonal(2).class(vec![1, -2])]
        );
        assert_eq!(t.get(0, 0), Rational::from(-1));
        let w = phi_via_wallsum(C1::H, 8).unwrap();
        assert_eq!(t.differences(&w), vec![]);
    }

    #[test]
    fn p2_zero_small() {
        let t = phi_p2_0(9).unwrap();
        assert!(t.support_violations().is_empty());
        assert!(t.entries.iter().any(|((n, _), v)| *n == 9 && !v.is_zero()));
        let w = phi_via_wallsum(C1::Zero, 9).unwrap();
        assert_eq!(t.differences(&w), vec![]);
    }

    #[test]
    fn qin_small() {
        assert!(qin_sum(1, None).unwrap().is_zero());
        assert!(qin_sum(2, None).unwrap().is_zero());
    }

    #[test]
    fn json_round_trip() {
        let t = phi_p2_h(4).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"convention\":\"paper-positive-leading-term\""));
        assert!(s.contains("\"N\":4"));
        let back: InvariantTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
