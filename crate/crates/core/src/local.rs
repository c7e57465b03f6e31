//! Local densities: `χ`, `ψ`, `ψ′`, `ψ₀`, `ϱ_l(q,a)`, `Ξ(q,a)` and the Euler product `H`.

use crate::arith::{self, factorize};
use crate::error::{domain, FiError, Result};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

pub type Rational = Ratio<i128>;

/// `H` from the Euler product truncated at `10⁷`; the tail beyond is below `3·10⁻⁷`.
pub const REFERENCE_H: f64 = 2.156_410_344_768_322;

/// Default cutoff for the `ψ(l)` Euler product.
pub const DEFAULT_PSI_CUTOFF: u64 = 1_000_000;

/// Non-principal character modulo 4.
pub fn chi(n: i64) -> i8 {
    match n.rem_euclid(4) {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

fn chi_u(p: u64) -> i128 {
    chi((p % 4) as i64) as i128
}

/// `ψ′(q) = ∏_{p|q} (1 − χ(p)/(p−1))⁻¹`.
pub fn psi_prime(q: u64) -> Rational {
    factorize(q)
        .iter()
        .fold(Rational::one(), |acc, &(p, _)| {
            let p = p as i128;
            let c = chi_u(p as u64);
            acc * Rational::new(p - 1, p - 1 - c)
        })
}

/// `ψ₀` on squarefree `r`: multiplicative with `ψ₀(p) = χ(p)/(p−1−χ(p))`; zero off squarefree.
pub fn psi0(r: u64) -> Rational {
    let f = factorize(r);
    if f.iter().any(|&(_, e)| e > 1) {
        return Rational::zero();
    }
    f.iter().fold(Rational::one(), |acc, &(p, _)| {
        let c = chi_u(p);
        acc * Rational::new(c, p as i128 - 1 - c)
    })
}

fn h_factor(p: u64) -> f64 {
    let c = chi_u(p) as f64;
    let p = p as f64;
    1.0 - c / ((p - 1.0) * (p - c))
}

/// Output of [`psi_factors`].
#[derive(Clone, Debug, PartialEq)]
pub struct PsiFactors {
    /// `ψ(l) = ∏_{p∤l}(1 − χ(p)/(p−1))`.
    pub psi_l: f64,
    /// Multiplicative bound on the truncation: the true value lies in `psi_l·[e^{−t}, e^{t}]`.
    pub psi_l_tail: f64,
    pub psi_prime_q: Rational,
    /// `ψ₀(r)` for every squarefree `r | q`, so that `Σ_r ψ₀(r) = ψ′(q)`.
    pub psi0_table: BTreeMap<u64, Rational>,
}

/// `ψ(l)` to the given tail tolerance, `ψ′(q)` and the `ψ₀` table on divisors of `q`.
///
/// The product for `ψ(l)` converges conditionally, so it is rewritten as
/// `L(1,χ)⁻¹·∏_{p|l}(1 − χ(p)/p)⁻¹·∏_{p∤l} (1 − χ(p)/((p−1)(p−χ(p))))`
/// with `L(1,χ) = π/4`; the last product converges absolutely with tail `≤ 1/cutoff`.
pub fn psi_factors(l: u64, q: u64, cutoff: u64, tail_tol: f64) -> Result<PsiFactors> {
    if l == 0 || q == 0 {
        return domain("psi_factors needs l, q ≥ 1");
    }
    if cutoff < 3 || 1.0 / cutoff as f64 > tail_tol {
        return Err(FiError::Domain(format!(
            "cutoff {cutoff} gives tail bound {} above tolerance {tail_tol}",
            1.0 / cutoff as f64
        )));
    }
    let lf = factorize(l);
    let mut psi = 4.0 / std::f64::consts::PI;
    for &(p, _) in &lf {
        psi /= 1.0 - chi_u(p) as f64 / p as f64;
    }
    for p in arith::primes_up_to(cutoff) {
        if l % p != 0 {
            psi *= h_factor(p);
        }
    }
    let mut table = BTreeMap::new();
    let qp: Vec<u64> = factorize(q).into_iter().map(|(p, _)| p).collect();
    for mask in 0u32..(1 << qp.len()) {
        let r: u64 = (0..qp.len()).filter(|i| mask >> i & 1 == 1).map(|i| qp[i]).product();
        table.insert(r, psi0(r));
    }
    Ok(PsiFactors {
        psi_l: psi,
        psi_l_tail: 1.0 / cutoff as f64,
        psi_prime_q: psi_prime(q),
        psi0_table: table,
    })
}

/// `ϱ_l(q,a) = #{k mod q : k² + l² ≡ a}`.
pub fn rho_density(l: i64, q: u64, a: i64) -> u64 {
    let q128 = q as i128;
    let target = (a as i128).rem_euclid(q128);
    let l2 = (l as i128 * l as i128).rem_euclid(q128);
    (0..q as i128)
        .filter(|&k| (k * k + l2) % q128 == target)
        .count() as u64
}

fn legendre(a: i64, p: u64) -> i128 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    if arith::pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// `Ξ(p^e, a)` for a prime power, from the closed forms at odd `p` and the hand values at 2.
fn xi_prime_power(p: u64, e: u32, a: i64) -> Rational {
    if p == 2 {
        let r = a.rem_euclid(4);
        return match (e, r) {
            (1, 1) | (1, 3) => Rational::one(),
            (_, 1) => Rational::from_integer(2),
            _ => Rational::zero(),
        };
    }
    let leg = legendre(a, p);
    if leg == 0 {
        return Rational::zero();
    }
    let c = chi_u(p);
    Rational::one() - Rational::new(leg, p as i128 - 1 - c)
}

/// Evaluator of `Ξ(q,a)` by multiplicativity and power-blindness, caching factorizations
/// and the prime-power factors.
#[derive(Debug, Default)]
pub struct XiEvaluator {
    factors: RwLock<HashMap<u64, Vec<(u64, u32)>>>,
    local: RwLock<HashMap<(u64, u32, i64), Rational>>,
}

impl XiEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    fn factor(&self, q: u64) -> Vec<(u64, u32)> {
        if let Some(f) = self.factors.read().unwrap().get(&q) {
            return f.clone();
        }
        let f = factorize(q);
        self.factors.write().unwrap().insert(q, f.clone());
        f
    }

    pub fn xi(&self, q: u64, a: i64) -> Result<Rational> {
        if q == 0 {
            return domain("xi needs q ≥ 1");
        }
        let mut acc = Rational::one();
        for (p, e) in self.factor(q) {
            let key_e = if p == 2 { e.min(2) } else { 1 };
            let key = (p, key_e, a.rem_euclid(if p == 2 { 4 } else { p as i64 }));
            let cached = self.local.read().unwrap().get(&key).copied();
            let v = match cached {
                Some(v) => v,
                None => {
                    let v = xi_prime_power(p, e, a);
                    self.local.write().unwrap().insert(key, v);
                    v
                }
            };
            if v.is_zero() {
                return Ok(v);
            }
            acc *= v;
        }
        Ok(acc)
    }

    pub fn psi_prime(&self, q: u64) -> Rational {
        psi_prime(q)
    }

    pub fn psi0(&self, r: u64) -> Rational {
        psi0(r)
    }
}

/// `Ξ(q,a)` via the factored evaluator.
pub fn xi(q: u64, a: i64) -> Result<Rational> {
    XiEvaluator::new().xi(q, a)
}

/// `Ξ(q,a)` straight from the definition `ψ′(q)/φ(q)·Σ_{c mod q, (c,q)=1} ϱ_c(q,a)`.
pub fn xi_brute_force(q: u64, a: i64) -> Result<Rational> {
    if q == 0 {
        return domain("xi needs q ≥ 1");
    }
    if q > 10_000 {
        return Err(FiError::Capacity(format!("brute-force Ξ limited to q ≤ 10⁴, got {q}")));
    }
    if (a.rem_euclid(q as i64) as u64).gcd(&q) != 1 {
        return Ok(Rational::zero());
    }
    let s: u64 = (0..q as i64)
        .filter(|&c| (c as u64).gcd(&q) == 1)
        .map(|c| rho_density(c, q, a))
        .sum();
    Ok(psi_prime(q) * Rational::new(s as i128, arith::euler_phi(q) as i128))
}

/// `Ξ(q,a)` for every `a mod q` at once, still from the definition.
pub fn xi_brute_force_all(q: u64) -> Vec<Rational> {
    let qu = q as usize;
    let mut sq = vec![0u64; qu];
    let mut csq = vec![0u64; qu];
    for k in 0..q {
        let s = ((k as u128 * k as u128) % q as u128) as usize;
        sq[s] += 1;
        if k.gcd(&q) == 1 {
            csq[s] += 1;
        }
    }
    let mut counts = vec![0u64; qu];
    for (s, &ns) in sq.iter().enumerate().filter(|(_, &n)| n > 0) {
        for (t, &nt) in csq.iter().enumerate().filter(|(_, &n)| n > 0) {
            counts[(s + t) % qu] += ns * nt;
        }
    }
    let scale = psi_prime(q) / Rational::from_integer(arith::euler_phi(q) as i128);
    (0..q)
        .map(|a| {
            if a.gcd(&q) != 1 {
                Rational::zero()
            } else {
                scale * Rational::from_integer(counts[a as usize] as i128)
            }
        })
        .collect()
}

/// Result of [`euler_H`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerProduct {
    pub value: f64,
    /// Absolute bound on `|H − value|`.
    pub tail_bound: f64,
}

/// `H = 2∏_p (1 − χ(p)/((p−1)(p−χ(p))))` truncated at `p_limit`.
///
/// For `p > P` each factor has `|log| ≤ 2/p²`, and `Σ_{odd n>P} 2/n² ≤ 1/P`.
#[allow(non_snake_case)]
pub fn euler_H(p_limit: u64) -> Result<EulerProduct> {
    if p_limit < 3 {
        return domain("euler_H needs p_limit ≥ 3");
    }
    let primes = crate::primes::sieve_range(0, p_limit)?;
    let logs = primes
        .primes()
        .par_chunks(1 << 14)
        .map(|ps| {
            let mut acc = arith::FixedSum::default();
            for &p in ps {
                acc.add(h_factor(p).ln());
            }
            acc
        })
        .reduce(arith::FixedSum::default, arith::FixedSum::merge);
    let value = 2.0 * logs.value().exp();
    let tail = 1.0 / p_limit as f64;
    Ok(EulerProduct { value, tail_bound: value * tail.exp_m1() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Small,
    Large,
}

/// Greedy search for `q ≤ Q` with `Ξ(q,a)` far from 1.
///
/// `Large` multiplies in 4 (where `Ξ(4,1) = 2`) and then primes `p ≡ 3 mod 4` at a
/// non-residue class (factor `1 + 1/p`). `Small` multiplies primes `p ≡ 1 mod 4` at
/// `a = 1` (factor `1 − 1/(p−2)`). The class `a` is assembled by CRT.
pub fn xi_extremes(q_max: u64, dir: Direction) -> Result<(u64, i64, Rational)> {
    if q_max < 2 {
        return domain("xi_extremes needs Q ≥ 2");
    }
    let mut q = 1u64;
    let mut parts: Vec<(i64, i64)> = Vec::new();
    if dir == Direction::Large && q_max >= 4 {
        q = 4;
        parts.push((1, 4));
    }
    let mut p = 2;
    loop {
        p += 1;
        if !arith::is_prime_u64(p) {
            continue;
        }
        let wanted = match dir {
            Direction::Large => p % 4 == 3,
            Direction::Small => p % 4 == 1,
        };
        if !wanted {
            continue;
        }
        match q.checked_mul(p) {
            Some(v) if v <= q_max => q = v,
            _ => break,
        }
        let r = match dir {
            Direction::Large => (1..p as i64).find(|&r| legendre(r, p) == -1).unwrap(),
            Direction::Small => 1,
        };
        parts.push((r, p as i64));
    }
    if q == 1 {
        // Q too small for any admissible prime: fall back to the best class mod 2 or 3.
        q = q_max.min(3);
    }
    let (a, _) = arith::crt(&parts).unwrap_or((1, 1));
    let ev = XiEvaluator::new();
    let mut best = (a.max(1), ev.xi(q, a.max(1))?);
    if parts.is_empty() {
        for cand in 1..q as i64 {
            let v = ev.xi(q, cand)?;
            let better = match dir {
                Direction::Large => v > best.1,
                Direction::Small => v < best.1 && !v.is_zero(),
            };
            if better {
                best = (cand, v);
            }
        }
    }
    Ok((q, best.0, best.1))
}

/// Decimal rendering of a rational.
pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Exact text form: `n` for integers, `n/d` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom().abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn chi_values() {
        assert_eq!((chi(5), chi(7), chi(6), chi(-1)), (1, -1, 0, -1));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_prime(3), r(2, 3));
        assert_eq!(psi_prime(2), r(1, 1));
        assert_eq!(psi0(5), r(1, 3));
        let f = psi_factors(1, 15, 100_000, 1e-4).unwrap();
        let total: Rational = f.psi0_table.values().copied().sum();
        assert_eq!(total, f.psi_prime_q);
        assert!(psi_factors(1, 1, 10, 1e-4).is_err());
    }

    #[test]
    fn psi_matches_direct_partial_product() {
        // The direct product over p ≤ 10⁶ oscillates with amplitude about 1/√P.
        let direct: f64 = arith::primes_up_to(1_000_000)
            .iter()
            .filter(|&&p| 21 % p != 0)
            .map(|&p| 1.0 - chi_u(p) as f64 / (p as f64 - 1.0))
            .product();
        let acc = psi_factors(21, 1, 1_000_000, 1e-5).unwrap().psi_l;
        assert!((direct - acc).abs() < 5e-3, "{direct} vs {acc}");
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_density(1, 3, 1), 1);
        assert_eq!(rho_density(1, 3, 2), 2);
        assert_eq!(rho_density(0, 2, 1), 1);
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(2, 1).unwrap(), r(1, 1));
        assert_eq!(xi(4, 3).unwrap(), r(0, 1));
        assert_eq!(xi(3, 1).unwrap(), r(2, 3));
        assert_eq!(xi(3, 2).unwrap(), r(4, 3));
        assert_eq!(xi(4, 1).unwrap(), r(2, 1));
        for (a, v) in [(1, r(2, 3)), (2, r(4, 3)), (3, r(4, 3)), (4, r(2, 3))] {
            assert_eq!(xi(5, a).unwrap(), v);
        }
        assert_eq!(xi(8, 5).unwrap(), r(2, 1));
        assert_eq!(xi(8, 7).unwrap(), r(0, 1));
    }

    #[test]
    fn xi_matches_definition_small() {
        for q in 1..=300u64 {
            let all = xi_brute_force_all(q);
            for a in 0..q {
                assert_eq!(xi(q, a as i64).unwrap(), all[a as usize], "q={q} a={a}");
            }
        }
        for (q, a) in [(12, 5), (45, 7), (97, 3)] {
            assert_eq!(xi_brute_force(q, a).unwrap(), xi_brute_force_all(q as u64)[a as usize]);
        }
    }

    #[test]
    fn prime_class_sums() {
        for p in arith::primes_up_to(100) {
            let s: Rational = (1..p as i64).map(|a| xi_brute_force(p, a).unwrap()).sum();
            assert_eq!(s, Rational::from_integer(p as i128 - 1), "p = {p}");
        }
    }

    #[test]
    fn euler_h_examples() {
        assert!((euler_H(3).unwrap().value - 2.25).abs() < 1e-15);
        assert!((euler_H(5).unwrap().value - 2.109375).abs() < 1e-15);
        let h = euler_H(10_000_000).unwrap();
        assert!(h.tail_bound < 1e-6);
        assert!((h.value - REFERENCE_H).abs() < 1e-13, "{:.17}", h.value);
    }

    #[test]
    fn extremes() {
        assert_eq!(xi_extremes(3, Direction::Large).unwrap(), (3, 2, r(4, 3)));
        assert_eq!(xi_extremes(5, Direction::Small).unwrap(), (5, 1, r(2, 3)));
        let (q, a, v) = xi_extremes(1_000_000, Direction::Large).unwrap();
        assert_eq!(q, 4 * 3 * 7 * 11 * 19 * 23);
        assert_eq!(xi(q, a).unwrap(), v);
        assert!(to_f64(&v) > 2.0);
        let (q, a, v) = xi_extremes(1_000_000, Direction::Small).unwrap();
        assert_eq!(xi(q, a).unwrap(), v);
        assert_eq!((q, a), (5 * 13 * 17 * 29, 1));
        assert_eq!(v, r(1456, 2673));
    }

    #[test]
    fn rational_format() {
        assert_eq!(format_rational(&r(0, 1)), "0");
        assert_eq!(format_rational(&r(4, 3)), "4/3");
    }
}
