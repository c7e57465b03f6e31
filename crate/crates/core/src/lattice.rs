//! The lattices `Γ(l₁,d₁,l₂,d₂) = {m ∈ ℤ[i] : d₁ | m*l₁, d₂ | m*l₂}`.
//!
//! Each prime `p | d_j` imposes one linear congruence on `(re m, im m)`. When `p` divides
//! both `d₁` and `d₂` the two congruences coincide exactly when `p | Im(l₁·l̄₂)`, which gives
//! the index `Δ = d₁d₂ / gcd(d₁, d₂, |Im(l₁·l̄₂)|)`.

use crate::arith::{self, crt, inv_mod};
use crate::error::{domain, FiError, Result};
use crate::gaussian::{enumerate_annulus, for_each_annulus, is_primitive, star_wide, GaussianInt};
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest `d_j` accepted; keeps `Δ` and every intermediate product inside `i64`.
pub const MAX_MODULUS: u64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarLattice {
    pub l1: GaussianInt,
    pub d1: u64,
    pub l2: GaussianInt,
    pub d2: u64,
    pub delta: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub b1: GaussianInt,
    pub b2: GaussianInt,
}

impl LatticeBasis {
    /// `re(b₁)·im(b₂) − im(b₁)·re(b₂)`.
    pub fn det(&self) -> i128 {
        self.b1.re as i128 * self.b2.im as i128 - self.b1.im as i128 * self.b2.re as i128
    }

    /// `λ₁b₁ + λ₂b₂`, or `None` on overflow.
    pub fn combine(&self, l1: i64, l2: i64) -> Option<GaussianInt> {
        let re = (l1 as i128) * self.b1.re as i128 + (l2 as i128) * self.b2.re as i128;
        let im = (l1 as i128) * self.b1.im as i128 + (l2 as i128) * self.b2.im as i128;
        Some(GaussianInt::new(i64::try_from(re).ok()?, i64::try_from(im).ok()?))
    }
}

pub fn lattice_new(l1: GaussianInt, d1: u64, l2: GaussianInt, d2: u64) -> Result<StarLattice> {
    for (l, d) in [(l1, d1), (l2, d2)] {
        if l.is_zero() || !is_primitive(l)? {
            return domain(format!("{l} is not primitive"));
        }
        if d == 0 || d > MAX_MODULUS || !arith::is_squarefree(d) {
            return domain(format!("d = {d} must be squarefree in [1, 2^30]"));
        }
    }
    let im = l1.im_mul_conj(l2).unsigned_abs();
    let g = (d1 as u128).gcd(&(d2 as u128)).gcd(&im);
    let delta = (d1 as u128 * d2 as u128 / g) as u64;
    Ok(StarLattice { l1, d1, l2, d2, delta })
}

impl StarLattice {
    pub fn contains(&self, m: GaussianInt) -> bool {
        star_wide(m, self.l1).rem_euclid(self.d1 as i128) == 0
            && star_wide(m, self.l2).rem_euclid(self.d2 as i128) == 0
    }

    /// Upper-triangular basis `(x, y), (0, c)` with `x·c = Δ`.
    pub fn hermite_basis(&self) -> Result<LatticeBasis> {
        let conds = [(self.l1, self.d1 as i64), (self.l2, self.d2 as i64)];
        // Smallest c > 0 with (0, c) ∈ Γ.
        let c = conds
            .iter()
            .map(|&(l, d)| d / d.gcd(&l.im))
            .fold(1i64, |acc, t| acc.lcm(&t));
        let x = self.delta as i64 / c;
        // Each prime p | c has some condition with p | d and p ∤ im(l): solve for y mod p.
        let mut residues = Vec::new();
        for (p, _) in arith::factorize(c as u64) {
            let p = p as i64;
            let &(l, _) = conds
                .iter()
                .find(|&&(l, d)| d % p == 0 && l.im.rem_euclid(p) != 0)
                .ok_or_else(|| FiError::Assertion(format!("no congruence pins y mod {p}")))?;
            let inv = inv_mod(l.im, p).expect("im(l) is a unit mod p");
            let y = (-(x as i128 % p as i128) * (l.re as i128 % p as i128) % p as i128 * inv as i128)
                .rem_euclid(p as i128);
            residues.push((y as i64, p));
        }
        let (y, _) = crt(&residues).ok_or_else(|| FiError::Range("CRT overflow".into()))?;
        let basis = LatticeBasis { b1: GaussianInt::new(x, y), b2: GaussianInt::new(0, c) };
        if !self.contains(basis.b1) || !self.contains(basis.b2) || basis.det() != self.delta as i128 {
            return Err(FiError::Assertion(format!("Hermite basis {basis:?} is not a basis of Γ")));
        }
        Ok(basis)
    }
}

fn dot(a: GaussianInt, b: GaussianInt) -> i128 {
    a.re as i128 * b.re as i128 + a.im as i128 * b.im as i128
}

fn sub_mul(a: GaussianInt, k: i128, b: GaussianInt) -> Result<GaussianInt> {
    let re = a.re as i128 - k * b.re as i128;
    let im = a.im as i128 - k * b.im as i128;
    match (i64::try_from(re), i64::try_from(im)) {
        (Ok(re), Ok(im)) => Ok(GaussianInt::new(re, im)),
        _ => Err(FiError::Range("overflow during reduction".into())),
    }
}

/// Lagrange–Gauss reduction followed by a canonical choice: `b₁` is the lexicographically
/// largest shortest vector, `b₂` the lexicographically largest shortest vector completing it.
pub fn reduced_basis(lat: &StarLattice) -> Result<LatticeBasis> {
    let LatticeBasis { mut b1, mut b2 } = lat.hermite_basis()?;
    if b1.norm() > b2.norm() {
        std::mem::swap(&mut b1, &mut b2);
    }
    loop {
        let n1 = b1.norm() as i128;
        let k = div_round(dot(b1, b2), n1);
        b2 = sub_mul(b2, k, b1)?;
        if b2.norm() >= b1.norm() {
            break;
        }
        std::mem::swap(&mut b1, &mut b2);
    }
    // Shortest vectors of a reduced basis have coefficients in {−1, 0, 1}.
    let small: Vec<GaussianInt> = (-1..=1i64)
        .flat_map(|a| (-1..=1i64).map(move |b| (a, b)))
        .filter(|&(a, b)| (a, b) != (0, 0))
        .filter_map(|(a, b)| LatticeBasis { b1, b2 }.combine(a, b))
        .collect();
    let n1 = b1.norm();
    let c1 = *small.iter().filter(|v| v.norm() == n1).max().expect("b1 is a candidate");
    let c2 = small
        .iter()
        .filter(|&&v| (LatticeBasis { b1: c1, b2: v }).det().unsigned_abs() == lat.delta as u128)
        .min_by(|u, v| u.norm().cmp(&v.norm()).then(v.cmp(u)))
        .copied()
        .expect("b2 is a candidate");
    Ok(LatticeBasis { b1: c1, b2: c2 })
}

fn div_round(a: i128, b: i128) -> i128 {
    let (q, r) = (a.div_euclid(b), a.rem_euclid(b));
    if 2 * r >= b {
        q + 1
    } else {
        q
    }
}

/// `[ℤ[i] : Γ]` by counting members in the square `[0, L)²`, `L = lcm(d₁, d₂)`.
pub fn brute_force_index(lat: &StarLattice) -> Result<u64> {
    let l = lat.d1.lcm(&lat.d2);
    if l > 20_000 {
        return Err(FiError::Capacity(format!("brute-force index over a {l}² square")));
    }
    let hits: u64 = (0..l as i64)
        .into_par_iter()
        .map(|re| (0..l as i64).filter(|&im| lat.contains(GaussianInt::new(re, im))).count() as u64)
        .sum();
    Ok(l * l / hits)
}

/// Smallest nonzero norm in `Γ` by scanning the disc of Hermite radius.
pub fn brute_force_shortest(lat: &StarLattice) -> Result<u128> {
    let bound = (2.0 / 3f64.sqrt() * lat.delta as f64).ceil() as u64 + 1;
    let mut best = u128::MAX;
    for_each_annulus(0, bound, |m| {
        if lat.contains(m) {
            best = best.min(m.norm());
        }
    })?;
    Ok(best)
}

/// The set `𝔏` of `(λ₁, λ₂)` with `M < |λ₁b₁ + λ₂b₂|² ≤ M_hi`, grouped into rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusPoints {
    /// Lattice points in lexicographic `(re, im)` order.
    pub points: Vec<GaussianInt>,
    /// `𝔏₂`: every `λ₂` whose row is nonempty, ascending.
    pub l2_set: Vec<i64>,
    /// `𝔏₁(λ₂)` as at most two disjoint closed intervals of `λ₁`.
    pub l1_rows: BTreeMap<i64, Vec<(i64, i64)>>,
}

impl AnnulusPoints {
    pub fn row_len(&self, l2: i64) -> u64 {
        self.l1_rows
            .get(&l2)
            .map_or(0, |r| r.iter().map(|&(a, b)| (b - a + 1) as u64).sum())
    }
}

struct RowQuad {
    a: i128,
    b: i128,
    c: i128,
}

impl RowQuad {
    fn q(&self, l1: i128, l2: i128) -> i128 {
        self.a * l1 * l1 + 2 * self.b * l1 * l2 + self.c * l2 * l2
    }

    /// Closed interval of `λ₁` with `Q(λ₁, λ₂) ≤ bound`, if any.
    fn within(&self, l2: i128, bound: i128, det2: i128) -> Option<(i64, i64)> {
        let disc = self.a * bound - l2 * l2 * det2;
        if disc < 0 {
            return None;
        }
        let centre = -(self.b * l2) as f64 / self.a as f64;
        let half = (disc as f64).sqrt() / self.a as f64;
        let mut lo = (centre - half).ceil() as i128;
        let mut hi = (centre + half).floor() as i128;
        while self.q(lo - 1, l2) <= bound {
            lo -= 1;
        }
        while lo <= hi && self.q(lo, l2) > bound {
            lo += 1;
        }
        while self.q(hi + 1, l2) <= bound {
            hi += 1;
        }
        while hi >= lo && self.q(hi, l2) > bound {
            hi -= 1;
        }
        (lo <= hi).then_some((lo as i64, hi as i64))
    }
}

pub fn annulus_lattice_points(lat: &StarLattice, basis: &LatticeBasis, m: u64, m_hi: u64) -> Result<AnnulusPoints> {
    if m >= m_hi {
        return domain(format!("annulus needs M < M_hi, got ({m}, {m_hi}]"));
    }
    let quad = RowQuad {
        a: basis.b1.norm() as i128,
        b: dot(basis.b1, basis.b2),
        c: basis.b2.norm() as i128,
    };
    let det2 = basis.det() * basis.det();
    if det2 != (lat.delta as i128).pow(2) {
        return domain("basis does not span Γ");
    }
    // Q ≤ M_hi forces λ₂²Δ² ≤ |b₁|²·M_hi.
    let reach = arith::isqrt_u128((quad.a * m_hi as i128 / det2) as u128) as i64 + 1;
    let rows: Vec<(i64, Vec<(i64, i64)>)> = (-reach..=reach)
        .into_par_iter()
        .filter_map(|l2| {
            let (lo, hi) = quad.within(l2 as i128, m_hi as i128, det2)?;
            let row = match quad.within(l2 as i128, m as i128, det2) {
                None => vec![(lo, hi)],
                Some((ilo, ihi)) => [(lo, ilo - 1), (ihi + 1, hi)].into_iter().filter(|(a, b)| a <= b).collect(),
            };
            (!row.is_empty()).then_some((l2, row))
        })
        .collect();
    let mut points = Vec::new();
    for (l2, row) in &rows {
        for &(a, b) in row {
            for l1 in a..=b {
                points.push(basis.combine(l1, *l2).ok_or_else(|| FiError::Range("point overflow".into()))?);
            }
        }
    }
    points.sort_unstable();
    Ok(AnnulusPoints {
        points,
        l2_set: rows.iter().map(|r| r.0).collect(),
        l1_rows: rows.into_iter().collect(),
    })
}

/// The oracle: every `m` in the annulus that passes the membership test.
pub fn annulus_direct(lat: &StarLattice, m: u64, m_hi: u64) -> Result<Vec<GaussianInt>> {
    Ok(enumerate_annulus(m, m_hi)?.into_iter().filter(|&p| lat.contains(p)).collect())
}

/// Sum of `τ(|v₁*v₂|)` over `V₁ < |v₁|² ≤ 2V₁`, `V₂ < |v₂|² ≤ 2V₂` with `v₁*v₂ ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorPairSum {
    pub sum: u64,
    pub pairs: u64,
    /// `sum / (V₁V₂·log(V₁V₂))`.
    pub ratio: f64,
}

pub fn divisor_pair_sum(v1: u64, v2: u64) -> Result<DivisorPairSum> {
    if v1 == 0 || v2 == 0 || v1 > 1 << 20 || v2 > 1 << 20 {
        return domain("divisor pair sum needs 1 ≤ V ≤ 2^20");
    }
    let a = enumerate_annulus(v1, 2 * v1)?;
    let b = enumerate_annulus(v2, 2 * v2)?;
    // |v₁*v₂| ≤ |v₁||v₂| ≤ 2√(V₁V₂).
    let top = 2 * arith::isqrt(v1 * v2) as usize + 2;
    let mut tau = vec![0u32; top + 1];
    for d in 1..=top {
        for k in (d..=top).step_by(d) {
            tau[k] += 1;
        }
    }
    let (sum, pairs) = a
        .par_iter()
        .map(|&x| {
            let mut s = 0u64;
            let mut c = 0u64;
            for &y in &b {
                let st = star_wide(x, y).unsigned_abs() as usize;
                if st != 0 {
                    s += tau[st] as u64;
                    c += 1;
                }
            }
            (s, c)
        })
        .reduce(|| (0, 0), |p, q| (p.0 + q.0, p.1 + q.1));
    let vv = v1 as f64 * v2 as f64;
    Ok(DivisorPairSum { sum, pairs, ratio: sum as f64 / (vv * vv.ln()) })
}
