//! Segmented prime sieving, the von Mangoldt function and Fouvry–Iwaniec primes.
//!
//! A Fouvry–Iwaniec (FI) prime is a prime `p = k² + l²` with `k ≥ 1` and `l` prime.
//! Representations are ordered pairs, so `13 = 2² + 3² = 3² + 2²` counts twice.

use crate::arith::{self, isqrt, FixedSum};
use crate::error::{domain, FiError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

/// Default bound on the bitset plus base-prime storage of a single sieve, in numbers covered.
pub const DEFAULT_SIEVE_CAP: u64 = 1 << 34;

/// Largest `x` accepted by [`fi_weighted_count`].
pub const FI_COUNT_CAP: u64 = 2_000_000_000;

/// Ratio `Σ_{n≤x} Λ^Λ(n) / (H·x)` observed under the ordered `k ≥ 1` convention.
/// Counting `k` over all of `ℤ \ {0}` doubles every term and gives ratio 1.
pub const FI_CONVENTION_MULTIPLIER: f64 = 0.5;

const SEGMENT_WORDS: usize = 1 << 12;

/// Primality bitset over `(lo, hi]`.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    lo: u64,
    hi: u64,
    bits: Vec<u64>,
}

impl PrimeTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains(&self, n: u64) -> bool {
        n > self.lo && n <= self.hi
    }

    /// Primality of `n ∈ (lo, hi]`. Panics outside the range.
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(self.contains(n), "{n} outside ({}, {}]", self.lo, self.hi);
        let i = (n - self.lo - 1) as usize;
        self.bits[i >> 6] >> (i & 63) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let base = self.lo + 1;
        self.bits.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(base + wi as u64 * 64 + b)
            })
        })
    }

    pub fn primes(&self) -> Vec<u64> {
        self.iter().collect()
    }
}

/// Sieves `(lo, hi]` with the default capacity.
pub fn sieve_range(lo: u64, hi: u64) -> Result<PrimeTable> {
    sieve_range_with_cap(lo, hi, DEFAULT_SIEVE_CAP)
}

/// Segmented sieve of Eratosthenes over `(lo, hi]`; segments run in parallel.
pub fn sieve_range_with_cap(lo: u64, hi: u64, cap: u64) -> Result<PrimeTable> {
    if lo >= hi || hi > 1 << 63 {
        return domain(format!("sieve_range needs 0 ≤ lo < hi ≤ 2^63, got ({lo}, {hi})"));
    }
    let root = isqrt(hi);
    let span = hi - lo;
    if span.saturating_add(root) > cap {
        return Err(FiError::Capacity(format!(
            "sieve of ({lo}, {hi}] needs {} slots, cap is {cap}",
            span.saturating_add(root)
        )));
    }
    let base = arith::primes_up_to(root);
    let words = span.div_ceil(64) as usize;
    let mut bits = vec![u64::MAX; words];
    let tail = span % 64;
    if tail != 0 {
        bits[words - 1] = (1u64 << tail) - 1;
    }
    bits.par_chunks_mut(SEGMENT_WORDS)
        .enumerate()
        .for_each(|(ci, chunk)| {
            let start = lo + 1 + (ci * SEGMENT_WORDS * 64) as u64;
            let end = (start + chunk.len() as u64 * 64 - 1).min(hi);
            let clear = |chunk: &mut [u64], n: u64| {
                let i = (n - start) as usize;
                chunk[i >> 6] &= !(1u64 << (i & 63));
            };
            for n in start..=end.min(1) {
                clear(chunk, n);
            }
            for &p in &base {
                if p * p > end {
                    break;
                }
                let mut m = (p * p).max(start.div_ceil(p) * p);
                while m <= end {
                    clear(chunk, m);
                    m += p;
                }
            }
        });
    Ok(PrimeTable { lo, hi, bits })
}

/// `n = k² + l²` with `k ≥ 1` and `l` prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FiDecomposition {
    pub k: u64,
    pub l: u64,
}

/// All FI representations of `n`, sorted by `l`.
pub fn fi_decompositions(n: u64) -> Vec<FiDecomposition> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let kmax = isqrt(n - 1);
    for k in 1..=kmax {
        let r = n - k * k;
        let l = isqrt(r);
        if l * l == r && arith::is_prime_u64(l) {
            out.push(FiDecomposition { k, l });
        }
    }
    out.sort_by_key(|d| d.l);
    out
}

pub fn is_fi_prime(p: u64) -> bool {
    arith::is_prime_u64(p) && !fi_decompositions(p).is_empty()
}

/// `Λ(n) = log p` if `n = p^j`, else 0.
pub fn von_mangoldt(n: u64) -> f64 {
    arith::prime_power_base(n).map_or(0.0, |p| (p as f64).ln())
}

/// `Λ^Λ(n) = Λ(n)·Σ_{n=k²+l²} log l`.
pub fn lambda_lambda(n: u64) -> f64 {
    let lam = von_mangoldt(n);
    if lam == 0.0 {
        return 0.0;
    }
    fi_decompositions(n)
        .iter()
        .map(|d| lam * (d.l as f64).ln())
        .sum()
}

/// Von Mangoldt lookup on `[1, limit]` backed by a prime bitset plus the sparse set of
/// higher prime powers.
#[derive(Debug, Clone)]
pub struct VonMangoldtTable {
    primes: PrimeTable,
    powers: HashMap<u64, f64>,
}

impl VonMangoldtTable {
    pub fn new(limit: u64) -> Result<Self> {
        let primes = sieve_range(0, limit.max(2))?;
        let mut powers = HashMap::new();
        for p in arith::primes_up_to(isqrt(limit)) {
            let lp = (p as f64).ln();
            let mut q = p * p;
            while q <= limit {
                powers.insert(q, lp);
                match q.checked_mul(p) {
                    Some(v) => q = v,
                    None => break,
                }
            }
        }
        Ok(VonMangoldtTable { primes, powers })
    }

    pub fn limit(&self) -> u64 {
        self.primes.hi()
    }

    pub fn primes(&self) -> &PrimeTable {
        &self.primes
    }

    pub fn get(&self, n: u64) -> f64 {
        if n < 2 {
            0.0
        } else if self.primes.is_prime(n) {
            (n as f64).ln()
        } else {
            self.powers.get(&n).copied().unwrap_or(0.0)
        }
    }
}

/// Result of [`fi_weighted_count`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiCount {
    pub x: u64,
    /// `Σ_{n≤x} Λ^Λ(n)`.
    pub sum: f64,
    /// The Euler product `H` used for the ratio.
    pub h: f64,
    /// `sum / (H·x)`.
    pub ratio: f64,
    /// Number of `(k, l)` pairs visited.
    pub pairs: u64,
}

/// `Σ_{n≤x} Λ^Λ(n)` by iterating over pairs `(k, l)` with `k² + l² ≤ x`.
pub fn fi_weighted_count(x: u64) -> Result<FiCount> {
    let h = crate::local::REFERENCE_H;
    if x < 2 {
        return Ok(FiCount { x, sum: 0.0, h, ratio: 0.0, pairs: 0 });
    }
    if x > FI_COUNT_CAP {
        return Err(FiError::Capacity(format!("fi_weighted_count cap is {FI_COUNT_CAP}, got {x}")));
    }
    let lam = VonMangoldtTable::new(x)?;
    let (sum, pairs) = fi_pair_sum(&lam, x);
    let sum = sum.value();
    Ok(FiCount { x, sum, h, ratio: sum / (h * x as f64), pairs })
}

fn fi_pair_sum(lam: &VonMangoldtTable, x: u64) -> (FixedSum, u64) {
    let ls = arith::primes_up_to(isqrt(x - 1));
    ls.par_iter()
        .map(|&l| {
            let ll = (l as f64).ln();
            let mut acc = FixedSum::default();
            let mut pairs = 0;
            let mut k = 1u64;
            while k * k + l * l <= x {
                let v = lam.get(k * k + l * l);
                if v != 0.0 {
                    acc.add(v * ll);
                }
                pairs += 1;
                k += 1;
            }
            (acc, pairs)
        })
        .reduce(|| (FixedSum::default(), 0), |a, b| (a.0.merge(b.0), a.1 + b.1))
}

/// Same sum by iterating over `n ≤ x`; an oracle for the pair iteration.
pub fn fi_weighted_count_by_n(x: u64) -> f64 {
    let mut acc = FixedSum::default();
    for n in 2..=x {
        let lam = von_mangoldt(n);
        if lam == 0.0 {
            continue;
        }
        for d in fi_decompositions(n) {
            acc.add(lam * (d.l as f64).ln());
        }
    }
    acc.value()
}

/// `Λ^Λ(n)` for every `n ≤ x`, indexed by `n`. Contributions to one `n` are added in
/// increasing order of the prime leg, so the table does not depend on thread count.
pub fn lambda_lambda_table(x: u64) -> Result<Vec<f64>> {
    if x > FI_COUNT_CAP / 10 {
        return Err(FiError::Capacity(format!("Λ^Λ table is capped at {}, got {x}", FI_COUNT_CAP / 10)));
    }
    let mut out = vec![0.0; x as usize + 1];
    if x < 2 {
        return Ok(out);
    }
    let lam = VonMangoldtTable::new(x)?;
    for l in arith::primes_up_to(isqrt(x - 1)) {
        let ll = (l as f64).ln();
        let mut k = 1u64;
        while k * k + l * l <= x {
            let n = k * k + l * l;
            let v = lam.get(n);
            if v != 0.0 {
                out[n as usize] += v * ll;
            }
            k += 1;
        }
    }
    Ok(out)
}

/// Sorted FI primes `≤ limit`.
pub fn fi_primes_up_to(limit: u64) -> Result<Vec<u64>> {
    if limit < 5 {
        return Ok(Vec::new());
    }
    let table = sieve_range(0, limit)?;
    let mut hit = vec![false; limit as usize + 1];
    for l in arith::primes_up_to(isqrt(limit - 1)) {
        let mut k = 1u64;
        while k * k + l * l <= limit {
            let n = k * k + l * l;
            if table.is_prime(n) {
                hit[n as usize] = true;
            }
            k += 1;
        }
    }
    Ok(hit
        .iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(n, _)| n as u64)
        .collect())
}

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Path of the cached FI prime list for `limit` inside `dir`.
pub fn fi_cache_path(dir: &Path, limit: u64) -> PathBuf {
    dir.join(format!("fi-primes-v{CACHE_FORMAT_VERSION}-{limit}.txt"))
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn render_cache(limit: u64, primes: &[u64]) -> String {
    let mut s = format!("fi-cache v{CACHE_FORMAT_VERSION} {limit}\n");
    for p in primes {
        s.push_str(&p.to_string());
        s.push('\n');
    }
    s
}

fn parse_cache(text: &str, limit: u64) -> Option<Vec<u64>> {
    let mut lines = text.lines();
    if lines.next()? != format!("fi-cache v{CACHE_FORMAT_VERSION} {limit}") {
        return None;
    }
    lines.map(|l| l.parse().ok()).collect()
}

/// Loads the FI primes `≤ limit` from `dir`, rebuilding the file when it is missing, its
/// header does not match, or its `.sha256` sidecar disagrees with the contents.
pub fn load_or_build_fi_primes(dir: &Path, limit: u64) -> Result<Vec<u64>> {
    let path = fi_cache_path(dir, limit);
    let sidecar = path.with_extension("txt.sha256");
    if let (Ok(body), Ok(sum)) = (fs::read(&path), fs::read_to_string(&sidecar)) {
        if sum.trim() == sha256_hex(&body) {
            if let Some(v) = std::str::from_utf8(&body).ok().and_then(|t| parse_cache(t, limit)) {
                return Ok(v);
            }
        }
    }
    let primes = fi_primes_up_to(limit)?;
    let body = render_cache(limit, &primes);
    fs::create_dir_all(dir)?;
    fs::write(&path, &body)?;
    fs::write(&sidecar, format!("{}\n", sha256_hex(body.as_bytes())))?;
    Ok(primes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_table_matches_pointwise() {
        let t = lambda_lambda_table(5000).unwrap();
        for n in 0..=5000u64 {
            assert!((t[n as usize] - lambda_lambda(n)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sieve_range(0, 30).unwrap().primes(), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(sieve_range(1_000_000, 1_000_100).unwrap().primes().contains(&1_000_003));
        assert_eq!(sieve_range(0, 1).unwrap().count(), 0);
        assert!(sieve_range(5, 5).is_err());
        assert!(matches!(sieve_range_with_cap(0, 1000, 10), Err(FiError::Capacity(_))));
    }

    #[test]
    fn sieve_matches_trial_division() {
        let t = sieve_range(0, 100_000).unwrap();
        for n in 1..=100_000 {
            assert_eq!(t.is_prime(n), arith::factorize(n) == vec![(n, 1)], "n = {n}");
        }
        let t = sieve_range(999_999_000_000, 999_999_300_000).unwrap();
        for n in (999_999_000_001..=999_999_300_000).step_by(7) {
            assert_eq!(t.is_prime(n), arith::is_prime_u64(n));
        }
    }

    #[test]
    fn decompositions() {
        assert_eq!(
            fi_decompositions(13),
            vec![FiDecomposition { k: 3, l: 2 }, FiDecomposition { k: 2, l: 3 }]
        );
        assert!(fi_decompositions(17).is_empty());
        assert!(fi_decompositions(4).is_empty());
        assert!(is_fi_prime(5));
        assert!(!is_fi_prime(17));
        assert!(!is_fi_prime(3));
    }

    #[test]
    fn lambda_lambda_examples() {
        let v = lambda_lambda(13);
        assert!((v - 13f64.ln() * (3f64.ln() + 2f64.ln())).abs() < 1e-12);
        assert_eq!(lambda_lambda(6), 0.0);
        assert_eq!(lambda_lambda(17), 0.0);
        // 25 = 4² + 3², a prime power with a prime leg
        assert!((lambda_lambda(25) - 5f64.ln() * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn small_weighted_counts() {
        // 8 = 2² + 2² and 25 = 4² + 3² are prime powers with a prime leg
        let expect = [5, 8, 13, 25, 29].iter().map(|&n| lambda_lambda(n)).sum::<f64>();
        let got = fi_weighted_count(30).unwrap().sum;
        assert!((got - expect).abs() < 1e-12);
        assert_eq!(fi_weighted_count(1).unwrap().sum, 0.0);
    }

    #[test]
    fn pair_iteration_equals_n_iteration() {
        for x in [2, 10, 100, 1000, 12_345, 100_000] {
            assert_eq!(fi_weighted_count(x).unwrap().sum, fi_weighted_count_by_n(x), "x = {x}");
        }
    }

    #[test]
    fn only_one_mod_four_primes() {
        let t = sieve_range(0, 100_000).unwrap();
        for p in t.iter() {
            if lambda_lambda(p) != 0.0 {
                assert_eq!(p % 4, 1, "p = {p}");
            }
        }
    }

    #[test]
    fn fi_prime_list() {
        let v = fi_primes_up_to(60).unwrap();
        assert_eq!(v, vec![5, 13, 29, 41, 53]);
        let all = fi_primes_up_to(20_000).unwrap();
        let brute: Vec<u64> = (2..=20_000).filter(|&n| is_fi_prime(n)).collect();
        assert_eq!(all, brute);
    }

    #[test]
    fn cache_roundtrip_and_repair() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_build_fi_primes(dir.path(), 1000).unwrap();
        let path = fi_cache_path(dir.path(), 1000);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("fi-cache v1 1000\n5\n13\n"));
        fs::write(&path, "fi-cache v1 1000\n7\n").unwrap();
        let b = load_or_build_fi_primes(dir.path(), 1000).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }
}
