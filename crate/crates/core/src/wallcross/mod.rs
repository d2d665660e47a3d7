//! The generating function g^X_ξ, wall-crossing terms as residues, the closed
//! form of Λ_X, and the suites cross-checking them.

mod lambda;
mod suites;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{factorial, Cyc8, Rational};
use crate::error::{Error, Result};
use crate::forms::BaseForms;
use crate::qseries::{ms_coeff, ms_exp, Monomial, MultiSeries, QSeries, Var, UNIT};

pub use lambda::{
    build_lambda, build_lambda_from, p_coefficient, LambdaCaps, LambdaInputs, PTable,
};
pub use suites::{
    blowup_consistency, blowup_consistency_at, check_diffeqs, check_recursions, diffeq_suite,
    h_k_residue, recursion_suite, DiffeqForms, RecursionGrid, BLOWUP_TEST_POINTS,
};

/// Classes `α_i` entering `exp(Σ α_i z_i + p x)`, described by `ξ/2·α_i` and `Q(α_i, α_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleData {
    pub names: Vec<String>,
    pub half_pairings: Vec<Cyc8>,
    pub gram: Vec<Vec<Cyc8>>,
    /// Optional per-variable degree caps; a derivative of order k only needs cap k.
    pub max_degrees: Vec<Option<u32>>,
}

impl CycleData {
    pub fn new(names: Vec<String>, half_pairings: Vec<Cyc8>, gram: Vec<Vec<Cyc8>>) -> Result<Self> {
        let m = names.len();
        if half_pairings.len() != m || gram.len() != m || gram.iter().any(|r| r.len() != m) {
            return Err(Error::Invalid("cycle data dimensions disagree".into()));
        }
        if (0..m).any(|i| (0..i).any(|j| gram[i][j] != gram[j][i])) {
            return Err(Error::Invalid("gram matrix is not symmetric".into()));
        }
        Ok(CycleData {
            names,
            half_pairings,
            gram,
            max_degrees: vec![None; m],
        })
    }

    /// One class `α` with `ξ/2·α = half` and `Q(α) = quad`.
    pub fn single(half: Cyc8, quad: Cyc8) -> Self {
        CycleData::new(vec!["z".into()], vec![half], vec![vec![quad]])
            .expect("1x1 data is consistent")
    }

    pub fn rational(half: Rational, quad: Rational) -> Self {
        CycleData::single(Cyc8::from(half), Cyc8::from(quad))
    }

    /// Adds an orthogonal class, e.g. the exceptional class of a blowup.
    pub fn with_cycle(
        mut self,
        name: &str,
        half: Cyc8,
        quad: Cyc8,
        max_degree: Option<u32>,
    ) -> Self {
        for row in &mut self.gram {
            row.push(Cyc8::zero());
        }
        let mut last = vec![Cyc8::zero(); self.names.len()];
        last.push(quad);
        self.gram.push(last);
        self.names.push(name.to_string());
        self.half_pairings.push(half);
        self.max_degrees.push(max_degree);
        self
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.half_pairings.iter().all(Cyc8::is_rational)
            && self.gram.iter().flatten().all(Cyc8::is_rational)
    }
}

/// Base-form truncation large enough for residues at `target` (1/48 units)
/// in all degrees up to `degree_cap`.
pub fn auto_trunc(target: i64, degree_cap: u32) -> i64 {
    target.max(0) + 12 * (i64::from(degree_cap) + 3) + 2 * UNIT
}

/// `g^X_ξ` in the variables `z_1..z_m, x` through total weight `weight_cap`.
pub fn build_g(sigma: i64, cycles: &CycleData, weight_cap: u32, trunc: i64) -> Result<MultiSeries> {
    crate::forms::check_trunc(trunc)?;
    let forms = BaseForms::cached(trunc);
    build_g_from(&forms, sigma, cycles, weight_cap)
}

fn build_g_from(
    forms: &BaseForms,
    sigma: i64,
    cycles: &CycleData,
    weight_cap: u32,
) -> Result<MultiSeries> {
    let m = cycles.len();
    let mut vars: Vec<Var> = cycles
        .names
        .iter()
        .zip(&cycles.max_degrees)
        .map(|(n, cap)| {
            let v = Var::new(n.clone(), 1);
            match cap {
                Some(d) => v.capped(*d),
                None => v,
            }
        })
        .collect();
    vars.push(Var::new("x", 2));
    let mut expo = MultiSeries::zero(vars.clone(), weight_cap);
    let unit = |i: usize| {
        let mut e = vec![0u32; m + 1];
        e[i] += 1;
        e
    };
    for i in 0..m {
        let h = &cycles.half_pairings[i];
        if !h.is_zero() {
            expo.set(unit(i), forms.inv_f.scale(h));
        }
        for j in i..m {
            let g = &cycles.gram[i][j];
            if g.is_zero() {
                continue;
            }
            let mut e = unit(i);
            e[j] += 1;
            // the diagonal carries Q(α_i)/2, each off-diagonal pair appears twice
            let c = if i == j {
                g.scale(&Rational::new(-1, 2))
            } else {
                -g
            };
            expo.set(e, forms.quad.scale(&c));
        }
    }
    expo.set(unit(m), forms.point.scale_rational(&Rational::from(-3)));
    let g = ms_exp(&expo)?;
    Ok(g.mul_series(&forms.prefactor(sigma)?))
}

/// A built `g^X_ξ` from which residues at several `ξ²` can be read off.
#[derive(Clone, Debug)]
pub struct GSeries {
    pub sigma: i64,
    pub cycles: CycleData,
    pub degree_cap: u32,
    pub trunc: i64,
    pub g: MultiSeries,
}

impl GSeries {
    pub fn build(sigma: i64, cycles: &CycleData, degree_cap: u32, trunc: i64) -> Result<Self> {
        Ok(GSeries {
            sigma,
            cycles: cycles.clone(),
            degree_cap,
            trunc,
            g: build_g(sigma, cycles, degree_cap, trunc)?,
        })
    }

    /// Builds with a truncation covering every `ξ² ≤ max_xi_sq`.
    pub fn for_residues(
        sigma: i64,
        cycles: &CycleData,
        degree_cap: u32,
        max_xi_sq: i64,
    ) -> Result<Self> {
        Self::build(
            sigma,
            cycles,
            degree_cap,
            auto_trunc(12 * max_xi_sq, degree_cap),
        )
    }

    /// `a!·r!·[z^a x^r q^{ξ²/4}] g` for every monomial, with the wall congruence enforced.
    pub fn residue_table(&self, xi_sq: i64) -> Result<DeltaTable> {
        let m = self.cycles.len();
        let target = 12 * xi_sq;
        let mut entries = BTreeMap::new();
        for mono in self.g.monomials() {
            let r = mono[m];
            let zs: Monomial = mono[..m].to_vec();
            let n_deg: u32 = zs.iter().sum::<u32>() + 2 * r;
            let c = ms_coeff(&self.g, &mono).coeff_at(target)?;
            let mut norm = factorial(r);
            for a in &zs {
                norm = norm * factorial(*a);
            }
            let value = c.scale(&norm);
            let n3 = i64::from(n_deg) + 3;
            let in_type = (n3 + xi_sq).rem_euclid(4) == 0 && xi_sq >= -n3;
            if !in_type && !value.is_zero() {
                return Err(Error::CongruenceViolation {
                    xi_sq,
                    degree: n_deg,
                    value: value.to_string(),
                });
            }
            entries.insert((zs, r), value);
        }
        Ok(DeltaTable {
            xi_sq,
            sigma: self.sigma,
            degree_cap: self.degree_cap,
            trunc_used: self.trunc,
            names: self.cycles.names.clone(),
            entries,
        })
    }
}

/// Residue table of `q^{-ξ²/4} g^X_ξ` for any `ξ²`, including `ξ² ≥ 0` where it
/// carries no geometric meaning. `trunc = None` sizes the truncation automatically.
pub fn residue_table(
    xi_sq: i64,
    sigma: i64,
    cycles: &CycleData,
    degree_cap: u32,
    trunc: Option<i64>,
) -> Result<DeltaTable> {
    let t = trunc.unwrap_or_else(|| auto_trunc(12 * xi_sq, degree_cap));
    GSeries::build(sigma, cycles, degree_cap, t)?.residue_table(xi_sq)
}

/// `δ^X_ξ(α^a p^r)` for all `a + 2r ≤ degree_cap`.
pub fn delta_eval(
    xi_sq: i64,
    sigma: i64,
    cycles: &CycleData,
    degree_cap: u32,
) -> Result<DeltaTable> {
    delta_eval_with(xi_sq, sigma, cycles, degree_cap, None)
}

pub fn delta_eval_with(
    xi_sq: i64,
    sigma: i64,
    cycles: &CycleData,
    degree_cap: u32,
    trunc: Option<i64>,
) -> Result<DeltaTable> {
    if xi_sq >= 0 {
        return Err(Error::NonNegativeXiSq(xi_sq));
    }
    residue_table(xi_sq, sigma, cycles, degree_cap, trunc)
}

/// Values `δ_{ξ,N}(α_1^{a_1}⋯ p^r)` keyed by `(a, r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaTable {
    pub xi_sq: i64,
    pub sigma: i64,
    pub degree_cap: u32,
    pub trunc_used: i64,
    pub names: Vec<String>,
    pub entries: BTreeMap<(Monomial, u32), Cyc8>,
}

impl DeltaTable {
    /// Zero when the monomial was not computed.
    pub fn get(&self, a: &[u32], r: u32) -> Cyc8 {
        self.entries
            .get(&(a.to_vec(), r))
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_rational(&self) -> bool {
        self.entries.values().all(Cyc8::is_rational)
    }
}

#[derive(Serialize, Deserialize)]
struct DeltaEntryJson {
    a: Vec<u32>,
    r: u32,
    value: Cyc8,
}

#[derive(Serialize, Deserialize)]
struct DeltaTableJson {
    xi_sq: i64,
    sigma: i64,
    degree_cap: u32,
    trunc_used: i64,
    names: Vec<String>,
    entries: Vec<DeltaEntryJson>,
}

impl Serialize for DeltaTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DeltaTableJson {
            xi_sq: self.xi_sq,
            sigma: self.sigma,
            degree_cap: self.degree_cap,
            trunc_used: self.trunc_used,
            names: self.names.clone(),
            entries: self
                .entries
                .iter()
                .map(|((a, r), v)| DeltaEntryJson {
                    a: a.clone(),
                    r: *r,
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeltaTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DeltaTableJson::deserialize(d)?;
        Ok(DeltaTable {
            xi_sq: j.xi_sq,
            sigma: j.sigma,
            degree_cap: j.degree_cap,
            trunc_used: j.trunc_used,
            names: j.names,
            entries: j
                .entries
                .into_iter()
                .map(|e| ((e.a, e.r), e.value))
                .collect(),
        })
    }
}

/// Coefficient-level view used by the suites: `[mono] g` as a series.
pub fn g_coefficient(g: &MultiSeries, mono: &[u32]) -> QSeries {
    ms_coeff(g, mono)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn known_p1xp1_value() {
        let t = delta_eval(-6, 0, &CycleData::rational(r(1, 1), r(0, 1)), 3).unwrap();
        assert_eq!(t.get(&[3], 0), Cyc8::one());
    }

    #[test]
    fn constant_coefficient_valuation() {
        let g = build_g(0, &CycleData::rational(r(1, 1), r(0, 1)), 4, 400).unwrap();
        let c = ms_coeff(&g, &[0, 0]);
        assert_eq!(c.lo(), -36);
        assert_eq!(c.leading().unwrap(), &Cyc8::one());
        for (mono, s) in g.terms() {
            let n = i64::from(mono[0] + 2 * mono[1]);
            assert!(s.lo() >= -12 * (n + 3), "{mono:?}");
            assert!(
                s.terms().all(|(e, _)| (e + 12 * (n + 3)) % 48 == 0),
                "{mono:?}"
            );
        }
    }

    #[test]
    fn zero_pairing_reduces_to_point_exponential() {
        let t = 300;
        let g = build_g(1, &CycleData::rational(r(0, 1), r(0, 1)), 4, t).unwrap();
        let forms = BaseForms::cached(t);
        let pre = forms.prefactor(1).unwrap();
        let x1 = ms_coeff(&g, &[0, 1]);
        let want = crate::qseries::qs_mul(&pre, &forms.point.scale_rational(&Rational::from(-3)));
        let upto = x1.valid_to().min(want.valid_to());
        assert_eq!(x1.first_difference(&want, upto).unwrap(), None);
        assert!(ms_coeff(&g, &[1, 0]).is_zero());
    }

    #[test]
    fn off_diagonal_gram_coefficient() {
        let t = 300;
        let c = Cyc8::from_int(5);
        let cyc = CycleData::new(
            vec!["z1".into(), "z2".into()],
            vec![Cyc8::zero(), Cyc8::zero()],
            vec![vec![Cyc8::zero(), c.clone()], vec![c, Cyc8::zero()]],
        )
        .unwrap();
        let g = build_g(0, &cyc, 2, t).unwrap();
        let forms = BaseForms::cached(t);
        let want = crate::qseries::qs_mul(
            &forms.prefactor(0).unwrap(),
            &forms.quad.scale_rational(&Rational::from(-5)),
        );
        let got = ms_coeff(&g, &[1, 1, 0]);
        let upto = got.valid_to().min(want.valid_to());
        assert_eq!(got.first_difference(&want, upto).unwrap(), None);
    }

    #[test]
    fn zero_dimensional_wall_gives_power_of_pairing() {
        for n in 0..6u32 {
            let xi_sq = -(i64::from(n) + 3);
            let lam = r(3, 2);
            let t = delta_eval(xi_sq, 0, &CycleData::rational(lam.clone(), r(0, 1)), n).unwrap();
            assert_eq!(t.get(&[n], 0), Cyc8::from(lam.pow(n as i32)), "N={n}");
        }
    }

    #[test]
    fn congruence_zeros() {
        let t = delta_eval(-5, 1, &CycleData::rational(r(2, 3), r(-1, 1)), 6).unwrap();
        for ((a, rr), v) in &t.entries {
            let n = a[0] + 2 * rr;
            if (n as i64 + 3 - 5).rem_euclid(4) != 0 || n + 3 < 5 {
                assert!(v.is_zero());
            }
        }
        assert!(t.is_rational());
    }

    #[test]
    fn nonnegative_xi_sq_rejected() {
        let cyc = CycleData::rational(r(1, 1), r(0, 1));
        assert_eq!(delta_eval(0, 0, &cyc, 3), Err(Error::NonNegativeXiSq(0)));
        assert!(residue_table(1, 0, &cyc, 3, None).is_ok());
    }

    #[test]
    fn truncation_stability() {
        let cyc = CycleData::rational(r(-2, 3), r(5, 7));
        let a = delta_eval_with(-7, -1, &cyc, 6, None).unwrap();
        let b = delta_eval_with(-7, -1, &cyc, 6, Some(a.trunc_used + 480)).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn too_small_truncation_is_reported() {
        let cyc = CycleData::rational(r(1, 1), r(0, 1));
        let e = delta_eval_with(-6, 0, &cyc, 3, Some(0));
        assert!(matches!(e, Err(Error::BeyondTruncation { .. })), "{e:?}");
        // forms are buildable but the requested exponent is past the truncation
        let e = residue_table(40, 0, &cyc, 3, Some(60));
        assert!(matches!(e, Err(Error::BeyondTruncation { .. })), "{e:?}");
    }

    #[test]
    fn json_round_trip() {
        let t = delta_eval(-6, 0, &CycleData::rational(r(1, 1), r(0, 1)), 3).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: DeltaTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
