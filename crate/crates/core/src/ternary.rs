//! Sums of three FI primes, three-term progressions of FI primes, the W-tricked sequence
//! `Λ^Λ_{W,b}` and empirical `L^q` moments of its exponential sum.
//!
//! Every FI prime is `1 (mod 4)` (`k² + l²` with `l` prime is odd only when `l = 2` or `k`
//! is even), so only `x ≡ 3 (mod 4)` can be a sum of three.

use crate::arith;
use crate::error::{domain, FiError, Result};
use crate::local;
use crate::primes::{self, FI_CONVENTION_MULTIPLIER};
use num_integer::Integer;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

/// Largest limit accepted by the scans.
pub const TERNARY_CAP: u64 = 200_000_000;

/// Bitset over `[0, len)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    fn new(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)], len }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// `self |= other << shift`, truncated to `len`.
    fn or_shifted(&mut self, other: &Bits, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        let n = self.words.len();
        for i in (ws..n).rev() {
            let src = i - ws;
            let mut v = other.words.get(src).copied().unwrap_or(0) << bs;
            if bs > 0 && src > 0 {
                v |= other.words.get(src - 1).copied().unwrap_or(0) >> (64 - bs);
            }
            self.words[i] |= v;
        }
        let tail = self.len % 64;
        if tail > 0 {
            self.words[n - 1] &= (1u64 << tail) - 1;
        }
    }
}

/// The FI primes up to `limit`, as a sorted list and a bitset.
#[derive(Clone, Debug)]
pub struct FiPrimeSet {
    limit: u64,
    primes: Vec<u64>,
    bits: Bits,
}

impl FiPrimeSet {
    pub fn new(limit: u64) -> Result<Self> {
        if limit > TERNARY_CAP {
            return Err(FiError::Capacity(format!("FI prime set capped at {TERNARY_CAP}, got {limit}")));
        }
        Self::from_primes(limit, primes::fi_primes_up_to(limit)?)
    }

    /// Wraps an externally produced list, e.g. from the on-disk cache.
    pub fn from_primes(limit: u64, primes: Vec<u64>) -> Result<Self> {
        let mut bits = Bits::new(limit as usize + 1);
        for w in primes.windows(2) {
            if w[0] >= w[1] {
                return domain("FI prime list must be strictly increasing");
            }
        }
        for &p in &primes {
            if p > limit {
                return domain(format!("FI prime {p} beyond limit {limit}"));
            }
            bits.set(p as usize);
        }
        Ok(FiPrimeSet { limit, primes, bits })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn contains(&self, n: u64) -> bool {
        self.bits.get(n as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationWitness {
    pub x: u64,
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
}

impl RepresentationWitness {
    /// Rechecks ordering, the sum, primality and the FI property of each part.
    pub fn validate(&self) -> bool {
        self.p1 <= self.p2
            && self.p2 <= self.p3
            && self.p1 + self.p2 + self.p3 == self.x
            && [self.p1, self.p2, self.p3].iter().all(|&p| primes::is_fi_prime(p))
    }
}

/// The witness with the smallest `p₁`, then the smallest `p₂`.
pub fn find_representation(x: u64, set: &FiPrimeSet) -> Result<Option<RepresentationWitness>> {
    if x < 3 {
        return domain("x must be at least 3");
    }
    if set.limit() < x {
        return Err(FiError::Capacity(format!("FI prime set covers {} < {x}", set.limit())));
    }
    for &p1 in set.primes().iter().take_while(|&&p| 3 * p <= x) {
        let r = x - p1;
        for &p2 in set.primes().iter().skip_while(|&&p| p < p1).take_while(|&&p| 2 * p <= r) {
            if set.contains(r - p2) {
                return Ok(Some(RepresentationWitness { x, p1, p2, p3: r - p2 }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanStrategy {
    /// Sumsets `P+P` and `P+P+P` as shifted bitsets.
    Bitset,
    /// For each `x` and `p₁`, a two-pointer walk over the sorted list for `x − p₁`.
    TwoPointer,
    /// Triple loop over the list; only for small `X`.
    Brute,
}

/// Sorted `x ≡ 3 (mod 4)`, `3 ≤ x ≤ X`, that are not a sum of three FI primes.
pub fn scan_exceptions(limit: u64) -> Result<Vec<u64>> {
    scan_exceptions_with(limit, ScanStrategy::Bitset)
}

pub fn scan_exceptions_with(limit: u64, strategy: ScanStrategy) -> Result<Vec<u64>> {
    if limit < 3 {
        return domain("scan needs X ≥ 3");
    }
    let set = FiPrimeSet::new(limit)?;
    scan_exceptions_in(&set, limit, strategy)
}

pub fn scan_exceptions_in(set: &FiPrimeSet, limit: u64, strategy: ScanStrategy) -> Result<Vec<u64>> {
    if set.limit() < limit {
        return Err(FiError::Capacity(format!("FI prime set covers {} < {limit}", set.limit())));
    }
    let candidates = (3..=limit).step_by(4);
    let ps = set.primes();
    Ok(match strategy {
        ScanStrategy::Bitset => {
            let len = limit as usize + 1;
            let mut base = Bits::new(len);
            for &p in ps {
                base.set(p as usize);
            }
            let two = sumset(&base, ps, len);
            let three = sumset(&two, ps, len);
            candidates.filter(|&x| !three.get(x as usize)).collect()
        }
        ScanStrategy::TwoPointer => {
            let xs: Vec<u64> = candidates.collect();
            xs.into_par_iter().filter(|&x| !two_pointer_hit(ps, x)).collect()
        }
        ScanStrategy::Brute => {
            if limit > 5000 {
                return Err(FiError::Capacity("brute-force scan is limited to X ≤ 5000".into()));
            }
            let mut hit = vec![false; limit as usize + 1];
            for &a in ps {
                for &b in ps.iter().filter(|&&b| b >= a) {
                    for &c in ps.iter().filter(|&&c| c >= b) {
                        if a + b + c <= limit {
                            hit[(a + b + c) as usize] = true;
                        }
                    }
                }
            }
            candidates.filter(|&x| !hit[x as usize]).collect()
        }
    })
}

fn sumset(a: &Bits, ps: &[u64], len: usize) -> Bits {
    ps.par_chunks(64)
        .fold(
            || Bits::new(len),
            |mut acc, chunk| {
                for &p in chunk {
                    acc.or_shifted(a, p as usize);
                }
                acc
            },
        )
        .reduce(
            || Bits::new(len),
            |mut x, y| {
                for (o, w) in x.words.iter_mut().zip(y.words) {
                    *o |= w;
                }
                x
            },
        )
}

fn two_pointer_hit(ps: &[u64], x: u64) -> bool {
    for &p1 in ps.iter().take_while(|&&p| 3 * p <= x) {
        let r = x - p1;
        let (mut i, mut j) = (0usize, ps.partition_point(|&p| p <= r));
        while j > 0 && i < j {
            let s = ps[i] + ps[j - 1];
            if s == r {
                return true;
            }
            if s < r {
                i += 1;
            } else {
                j -= 1;
            }
        }
    }
    false
}

/// All `(p, p+d, p+2d)`, `d > 0`, of FI primes `≤ X` passing `filter`, ordered by `(p, d)`.
pub fn find_3aps(limit: u64, filter: Option<&(dyn Fn(u64) -> bool + Sync)>) -> Result<Vec<(u64, u64, u64)>> {
    if limit < 5 {
        return domain("3AP search needs X ≥ 5");
    }
    let set = FiPrimeSet::new(limit)?;
    Ok(find_3aps_in(&set, limit, filter))
}

pub fn find_3aps_in(set: &FiPrimeSet, limit: u64, filter: Option<&(dyn Fn(u64) -> bool + Sync)>) -> Vec<(u64, u64, u64)> {
    let keep = |p: u64| p <= limit && filter.is_none_or(|f| f(p));
    let ps: Vec<u64> = set.primes().iter().copied().filter(|&p| keep(p)).collect();
    ps.par_iter()
        .enumerate()
        .flat_map_iter(|(i, &p)| {
            let ps = &ps;
            ps[i + 1..].iter().filter_map(move |&m| {
                let r = 2 * m - p;
                (r <= limit && set.contains(r) && keep(r)).then_some((p, m, r))
            })
        })
        .collect()
}

/// `Λ^Λ_{W,b}(n) = (φ(W)/(Ξ(W,b)·W·R·H))·Λ^Λ(Wn+b)` for `1 ≤ n ≤ N = ⌊x/W⌋`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WTrickedSequence {
    pub x: u64,
    pub w: f64,
    #[serde(rename = "W")]
    pub big_w: u64,
    pub b: u64,
    pub n: u64,
    pub normalization: f64,
    /// `values[i]` is the value at `n = i + 1`.
    pub values: Vec<f64>,
    pub mean: f64,
}

/// `w = 0.1·log log x`.
pub fn default_w(x: u64) -> f64 {
    0.1 * (x as f64).ln().ln()
}

/// `W = 2·Π_{p≤w} p`.
pub fn w_modulus(w: f64) -> Result<u64> {
    let mut big_w: u64 = 2;
    for p in arith::primes_up_to(w.max(0.0).floor() as u64) {
        big_w = big_w.checked_mul(p).ok_or_else(|| FiError::Range(format!("W overflows for w = {w}")))?;
    }
    Ok(big_w)
}

/// Builds the sequence with `w = 0.1·log log x` unless `w_override` is given.
pub fn wtrick_build(x: u64, b: u64, w_override: Option<f64>) -> Result<WTrickedSequence> {
    let w = w_override.unwrap_or_else(|| default_w(x));
    wtrick_build_with_modulus(x, b, w, w_modulus(w)?)
}

pub fn wtrick_build_with_modulus(x: u64, b: u64, w: f64, big_w: u64) -> Result<WTrickedSequence> {
    if big_w == 0 || b == 0 || b >= big_w || b.gcd(&big_w) != 1 || b % 4 != 1 {
        return domain(format!("b = {b} must lie in [1, W), be coprime to W = {big_w} and be 1 (mod 4)"));
    }
    let n = x / big_w;
    let xi = local::to_f64(&local::xi(big_w, b as i64)?);
    if xi == 0.0 {
        return domain(format!("Ξ({big_w}, {b}) = 0"));
    }
    let normalization = arith::euler_phi(big_w) as f64 / (xi * big_w as f64 * FI_CONVENTION_MULTIPLIER * local::REFERENCE_H);
    let table = primes::lambda_lambda_table(big_w * n + b)?;
    let values: Vec<f64> = (1..=n).map(|k| normalization * table[(big_w * k + b) as usize]).collect();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    Ok(WTrickedSequence { x, w, big_w, b, n, normalization, values, mean })
}

/// Result of [`lq_moment`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqMoment {
    /// `G⁻¹·Σ_j |S(j/G)|^q`.
    pub moment: f64,
    /// `moment / N^{q−1}`.
    pub ratio: f64,
    /// `Σ|values|²`, which the `q = 2` moment must reproduce.
    pub l2: f64,
    pub grid: usize,
}

/// `∫₀¹|Σ_{n≤N} v_n e(γn)|^q dγ` as a Riemann sum on `grid ≥ 4N` points, evaluated by FFT.
/// `q = 2` is accepted as the Parseval gate.
pub fn lq_moment(seq: &WTrickedSequence, q: f64, grid: usize) -> Result<LqMoment> {
    lq_moment_values(&seq.values, q, grid)
}

pub fn lq_moment_values(values: &[f64], q: f64, grid: usize) -> Result<LqMoment> {
    if !(2.0..3.0).contains(&q) {
        return domain(format!("q must lie in [2, 3), got {q}"));
    }
    let n = values.len();
    if grid < 4 * n.max(1) {
        return domain(format!("grid {grid} is coarser than 4N = {}", 4 * n));
    }
    // values[i] sits at n = i + 1; the shift is a unit phase and does not change |S|.
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); grid];
    for (slot, &v) in buf.iter_mut().zip(values) {
        *slot = Complex::new(v, 0.0);
    }
    FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    let moment = buf.iter().map(|z| z.norm().powf(q)).sum::<f64>() / grid as f64;
    Ok(LqMoment {
        moment,
        ratio: moment / (n.max(1) as f64).powf(q - 1.0),
        l2: values.iter().map(|v| v * v).sum(),
        grid,
    })
}
