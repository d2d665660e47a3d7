//! Intersection lattices with b₊ = 1 and enumeration of walls of a given type.

use serde::{Deserialize, Serialize};

use crate::arith::Rational;
use crate::error::{Error, Result};

/// Integral symmetric bilinear form of signature `(1, rank-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    gram: Vec<Vec<i64>>,
}

impl Lattice {
    /// `⟨1⟩ ⊕ ⟨-1⟩^{rank-1}`, e.g. `H, E₁, …` on a blown-up plane.
    pub fn diagonal(rank: usize) -> Self {
        assert!(rank >= 1, "rank must be positive");
        let gram = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        if i != j {
                            0
                        } else if i == 0 {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect()
            })
            .collect();
        Lattice { gram }
    }

    /// The hyperbolic plane `F² = G² = 0, F·G = 1`, followed by `extra` copies of `⟨-1⟩`.
    pub fn hyperbolic(extra: usize) -> Self {
        let rank = 2 + extra;
        let mut gram = vec![vec![0; rank]; rank];
        gram[0][1] = 1;
        gram[1][0] = 1;
        for (i, row) in gram.iter_mut().enumerate().skip(2) {
            row[i] = -1;
        }
        Lattice { gram }
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn pairing(&self, a: &[i64], b: &[i64]) -> i64 {
        assert_eq!(a.len(), self.rank());
        assert_eq!(b.len(), self.rank());
        let mut s = 0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                s += ai * self.gram[i][j] * bj;
            }
        }
        s
    }

    pub fn square(&self, a: &[i64]) -> i64 {
        self.pairing(a, a)
    }

    pub fn class(&self, coords: Vec<i64>) -> WallClass {
        let xi_sq = self.square(&coords);
        WallClass { coords, xi_sq }
    }
}

/// An integral class ξ together with its cached square.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WallClass {
    pub coords: Vec<i64>,
    pub xi_sq: i64,
}

impl WallClass {
    pub fn xi_sq(&self, lat: &Lattice) -> i64 {
        debug_assert_eq!(self.xi_sq, lat.square(&self.coords), "stale xi_sq");
        self.xi_sq
    }
}

/// ξ defines a wall of type N: `N + 3 + ξ² ≡ 0 (mod 4)` and `-(N+3) ≤ ξ² < 0`.
pub fn defines_wall_type(xi_sq: i64, n: u32) -> bool {
    let n3 = i64::from(n) + 3;
    (n3 + xi_sq).rem_euclid(4) == 0 && -n3 <= xi_sq && xi_sq < 0
}

fn sorted(mut v: Vec<WallClass>) -> Vec<WallClass> {
    v.sort_by(|a, b| a.coords.cmp(&b.coords));
    v
}

/// `{(2n-1)H - 2aE : a ≥ n > 0}` of type N on `P²#P̄²`, coordinates `(H, E)`.
#[allow(non_snake_case)]
pub fn walls_blowupP2_h(n_deg: u32) -> Vec<WallClass> {
    let lat = Lattice::diagonal(2);
    let bound = i64::from(n_deg) + 3;
    let mut out = Vec::new();
    let mut n = 1i64;
    // ξ² = (2n-1)² - 4a² ≤ (2n-1)² - 4n² < 0, and ξ² ≥ -bound forces 4n - 1 ≤ bound
    while 4 * n - 1 <= bound {
        let mut a = n;
        while (2 * n - 1).pow(2) - 4 * a * a >= -bound {
            let xi_sq = (2 * n - 1).pow(2) - 4 * a * a;
            if defines_wall_type(xi_sq, n_deg) {
                out.push(lat.class(vec![2 * n - 1, -2 * a]));
            }
            a += 1;
        }
        n += 1;
    }
    sorted(out)
}

/// `{2nH - (2a-1)E : a > n > 0}` of type N on `P²#P̄²`.
#[allow(non_snake_case)]
pub fn walls_blowupP2_e(n_deg: u32) -> Vec<WallClass> {
    let lat = Lattice::diagonal(2);
    let bound = i64::from(n_deg) + 3;
    let mut out = Vec::new();
    let mut n = 1i64;
    // smallest |ξ²| for given n is at a = n+1: (2n+1)² - 4n² = 4n + 1
    while 4 * n < bound {
        let mut a = n + 1;
        while 4 * n * n - (2 * a - 1).pow(2) >= -bound {
            let xi_sq = 4 * n * n - (2 * a - 1).pow(2);
            if defines_wall_type(xi_sq, n_deg) {
                out.push(lat.class(vec![2 * n, -(2 * a - 1)]));
            }
            a += 1;
        }
        n += 1;
    }
    sorted(out)
}

/// `{(2n-1)F - (2m-1)G : n, m > 0}` of type N on `P¹×P¹`, coordinates `(F, G)`.
#[allow(non_snake_case)]
pub fn walls_P1xP1(n_deg: u32) -> Vec<WallClass> {
    let lat = Lattice::hyperbolic(0);
    let bound = i64::from(n_deg) + 3;
    let mut out = Vec::new();
    let mut x = 1i64;
    while 2 * x <= bound {
        let mut y = 1i64;
        while 2 * x * y <= bound {
            if defines_wall_type(-2 * x * y, n_deg) {
                out.push(lat.class(vec![x, -y]));
            }
            y += 2;
        }
        x += 2;
    }
    sorted(out)
}

fn rat(n: i64) -> Rational {
    Rational::from(n)
}

/// Inverse of a positive definite integral matrix, exactly.
#[allow(clippy::needless_range_loop)]
fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v = &*v * &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for j in 0..2 * n {
                    let d = &factor * &a[col][j];
                    a[r][j] -= &d;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Largest integer `x ≥ 0` with `x² ≤ r`.
fn isqrt_floor(r: &Rational) -> i64 {
    if r.is_negative() {
        return 0;
    }
    let mut x = r.to_f64().unwrap_or(0.0).sqrt().floor() as i64;
    while Rational::from(x * x) > *r {
        x -= 1;
    }
    while Rational::from((x + 1) * (x + 1)) <= *r {
        x += 1;
    }
    x
}

/// All ξ of type N with `ξ ≡ parity (mod 2)` and `ξ·A₋ < 0 < ξ·A₊`, sorted by coordinates.
///
/// The search box comes from projecting onto the hyperbolic plane spanned by
/// the endpoints (bounding `ξ·A₋`, `ξ·A₊`) and then bounding the positive
/// definite form `-ξ² + 2(ξ·h)²/h²` with `h = A₋ + A₊`. One extra shell
/// around the box is scanned and must be empty.
pub fn enumerate_walls(
    lat: &Lattice,
    parity: &[i64],
    n_deg: u32,
    a_minus: &[i64],
    a_plus: &[i64],
) -> Result<Vec<WallClass>> {
    let rank = lat.rank();
    if parity.len() != rank || a_minus.len() != rank || a_plus.len() != rank {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    let a = lat.square(a_minus);
    let b = lat.square(a_plus);
    let c = lat.pairing(a_minus, a_plus);
    let det = a * b - c * c;
    if a < 0 || b < 0 || c <= 0 || det >= 0 {
        return Err(Error::UnboundedSearch(format!(
            "endpoints with squares {a}, {b} and pairing {c} do not bound the search"
        )));
    }
    let n3 = i64::from(n_deg) + 3;
    // 2c|u|v ≤ (N+3)|det| with |u|, v ≥ 1
    let uv_bound = Rational::new(n3 * (-det), 2 * c);
    let h: Vec<i64> = a_minus.iter().zip(a_plus).map(|(x, y)| x + y).collect();
    let h_sq = lat.square(&h);
    let hv: Vec<i64> = (0..rank)
        .map(|i| (0..rank).map(|j| lat.gram[i][j] * h[j]).sum())
        .collect();
    let k_max = rat(n3) + &uv_bound * &uv_bound * Rational::new(2, h_sq);
    let m: Vec<Vec<Rational>> = (0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| Rational::from(-lat.gram[i][j]) + Rational::new(2 * hv[i] * hv[j], h_sq))
                .collect()
        })
        .collect();
    let minv = invert(&m).ok_or_else(|| Error::UnboundedSearch("degenerate majorant".into()))?;
    let bounds: Vec<i64> = (0..rank)
        .map(|i| isqrt_floor(&(&k_max * &minv[i][i])))
        .collect();

    let admissible = |x: &[i64]| -> bool {
        x.iter()
            .zip(parity)
            .all(|(v, p)| (v - p).rem_euclid(2) == 0)
            && defines_wall_type(lat.square(x), n_deg)
            && lat.pairing(x, a_minus) < 0
            && lat.pairing(x, a_plus) > 0
    };

    let mut out = Vec::new();
    let mut x: Vec<i64> = bounds.iter().map(|b| -b - 1).collect();
    loop {
        let inner = x.iter().zip(&bounds).all(|(v, b)| v.abs() <= *b);
        if admissible(&x) {
            if !inner {
                return Err(Error::UnboundedSearch(format!(
                    "solution {x:?} on the boundary shell"
                )));
            }
            out.push(lat.class(x.clone()));
        }
        let mut i = rank;
        loop {
            if i == 0 {
                return Ok(sorted(out));
            }
            i -= 1;
            if x[i] < bounds[i] + 1 {
                x[i] += 1;
                break;
            }
            x[i] = -bounds[i] - 1;
        }
    }
}

/// Built-in geometries, with the endpoints used for their closed-form wall sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// `P¹×P¹` with `A₋ = F`, `A₊ = G`.
    P1xP1,
    /// `P²#P̄²` with `A₋ = H - E`, `A₊ = H`.
    BlowupP2,
}

impl Geometry {
    pub fn lattice(self) -> Lattice {
        match self {
            Geometry::P1xP1 => Lattice::hyperbolic(0),
            Geometry::BlowupP2 => Lattice::diagonal(2),
        }
    }

    pub fn endpoints(self) -> (Vec<i64>, Vec<i64>) {
        match self {
            Geometry::P1xP1 => (vec![1, 0], vec![0, 1]),
            Geometry::BlowupP2 => (vec![1, -1], vec![1, 0]),
        }
    }

    pub fn enumerate(self, parity: &[i64], n_deg: u32) -> Result<Vec<WallClass>> {
        let (am, ap) = self.endpoints();
        enumerate_walls(&self.lattice(), parity, n_deg, &am, &ap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(v: &[WallClass]) -> Vec<Vec<i64>> {
        v.iter().map(|w| w.coords.clone()).collect()
    }

    #[test]
    fn wall_type_arithmetic() {
        assert!(defines_wall_type(-6, 3));
        assert!(defines_wall_type(-2, 3));
        assert!(defines_wall_type(-3, 0));
        assert!(defines_wall_type(-3, 4));
        assert!(!defines_wall_type(-3, 2));
        assert!(!defines_wall_type(-8, 4));
        assert!(defines_wall_type(-4, 1));
        assert!(!defines_wall_type(-8, 1));
        assert!(!defines_wall_type(0, 1));
        assert!(!defines_wall_type(4, 1));
    }

    #[test]
    fn p1xp1_degree_three() {
        assert_eq!(
            coords(&walls_P1xP1(3)),
            vec![vec![1, -3], vec![1, -1], vec![3, -1]]
        );
        let g = Geometry::P1xP1.enumerate(&[1, 1], 3).unwrap();
        assert_eq!(coords(&g), coords(&walls_P1xP1(3)));
        assert!(Geometry::P1xP1.enumerate(&[0, 1], 3).unwrap().is_empty());
    }

    #[test]
    fn p1xp1_symmetric() {
        for n in 0..20 {
            let w = coords(&walls_P1xP1(n));
            let mut swapped: Vec<Vec<i64>> = w.iter().map(|c| vec![-c[1], -c[0]]).collect();
            swapped.sort();
            assert_eq!(w, swapped);
        }
    }

    #[test]
    fn blowup_h_walls() {
        assert!(coords(&walls_blowupP2_h(0)).contains(&vec![1, -2]));
        assert!(coords(&walls_blowupP2_h(4)).contains(&vec![1, -2]));
        assert!(walls_blowupP2_h(2).is_empty());
        for n in 0..25 {
            for w in walls_blowupP2_h(n) {
                assert_eq!(w.coords[0].rem_euclid(2), 1);
                assert_eq!(w.coords[1].rem_euclid(2), 0);
            }
        }
    }

    #[test]
    fn blowup_e_walls() {
        assert!(coords(&walls_blowupP2_e(2)).contains(&vec![2, -3]));
        assert!(!coords(&walls_blowupP2_e(1)).contains(&vec![2, -3]));
        for w in walls_blowupP2_e(14) {
            assert_eq!(w.coords[0].rem_euclid(2), 0);
            assert_eq!(w.coords[1].rem_euclid(2), 1);
        }
    }

    #[test]
    fn closed_forms_match_enumerator() {
        for n in 0..=25 {
            let h = Geometry::BlowupP2.enumerate(&[1, 0], n).unwrap();
            assert_eq!(coords(&h), coords(&walls_blowupP2_h(n)), "h, N={n}");
            let e = Geometry::BlowupP2.enumerate(&[0, 1], n).unwrap();
            assert_eq!(coords(&e), coords(&walls_blowupP2_e(n)), "e, N={n}");
            let fg = Geometry::P1xP1.enumerate(&[1, 1], n).unwrap();
            assert_eq!(coords(&fg), coords(&walls_P1xP1(n)), "f+g, N={n}");
        }
    }

    #[test]
    fn unbounded_endpoints_rejected() {
        let lat = Lattice::diagonal(2);
        let r = enumerate_walls(&lat, &[1, 0], 4, &[1, 0], &[1, 0]);
        assert!(matches!(r, Err(Error::UnboundedSearch(_))));
        let r = enumerate_walls(&lat, &[1, 0], 4, &[0, 1], &[1, 0]);
        assert!(matches!(r, Err(Error::UnboundedSearch(_))));
    }

    #[test]
    fn three_dimensional_lattice_bounded() {
        // P²#2P̄² with endpoints H - E₁ and H
        let lat = Lattice::diagonal(3);
        let w = enumerate_walls(&lat, &[1, 0, 0], 8, &[1, -1, 0], &[1, 0, 0]).unwrap();
        assert!(!w.is_empty());
        for c in &w {
            assert!(defines_wall_type(c.xi_sq(&lat), 8));
        }
    }
}
