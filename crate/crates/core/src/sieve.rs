//! Beta-sieve weights, the composed sieve `θ± = θ_I±·θ_II±`, the linear-sieve functions,
//! Pan's switching inequality and the majorant `Λ⁺(n,x)`.
//!
//! A squarefree `d = p₁⋯p_n` with `p₁ > ⋯ > p_n` lies in `𝒟⁺(D,β)` when
//! `p₁⋯p_m·p_m^β < D` for every odd `m`, and in `𝒟⁻(D,β)` when the same holds for every
//! even `m`. The weight is `λ_d = μ(d)` on the support and 0 elsewhere.

use crate::arith::{self, SpfTable};
use crate::error::{domain, FiError, Result};
use crate::primes;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Default cap on materialized support sizes.
pub const WEIGHT_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn checks(self, m: usize) -> bool {
        match self {
            Sign::Plus => m % 2 == 1,
            Sign::Minus => m % 2 == 0,
        }
    }
}

/// `v·p^β < D` with `v` the running product; exact in integers when `β` is integral.
fn below_level(v: u128, p: u64, beta: f64, level: f64) -> bool {
    if beta.fract() == 0.0 && beta >= 0.0 && level < 1.7e38 {
        let mut acc = Some(v);
        for _ in 0..beta as u32 {
            acc = acc.and_then(|a| a.checked_mul(p as u128));
        }
        return match acc {
            Some(a) => a < level.ceil() as u128,
            None => false,
        };
    }
    (v as f64).ln() + beta * (p as f64).ln() < level.ln()
}

/// One-signed beta-sieve: level `D`, parameter `β`, sifting primes in `(lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SieveWeightSet {
    pub level: f64,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
}

impl SieveWeightSet {
    /// All sifting primes must lie below `D`, which keeps every support element `d < D`.
    pub fn new(level: f64, beta: f64, lo: f64, hi: f64, sign: Sign) -> Result<Self> {
        if !(level >= 1.0) || !(beta >= 0.0) {
            return domain(format!("sieve needs D ≥ 1 and β ≥ 0, got D={level}, β={beta}"));
        }
        if hi.floor() >= 2.0 && largest_prime_at_most(hi.floor() as u64).is_some_and(|p| p as f64 > lo && p as f64 >= level) {
            return domain(format!("sifting range reaches {hi} but the level is only {level}"));
        }
        Ok(SieveWeightSet { level, beta, lo, hi, sign })
    }

    pub fn in_range(&self, p: u64) -> bool {
        let pf = p as f64;
        pf > self.lo && pf <= self.hi
    }

    /// Membership of the squarefree `d` given by its primes in strictly decreasing order.
    pub fn contains_desc(&self, desc: &[u64]) -> bool {
        let mut prod: u128 = 1;
        for (i, &p) in desc.iter().enumerate() {
            prod *= p as u128;
            if self.sign.checks(i + 1) && !below_level(prod, p, self.beta, self.level) {
                return false;
            }
        }
        true
    }

    /// `λ_d`.
    pub fn weight(&self, d: u64) -> i8 {
        if d == 0 {
            return 0;
        }
        let f = arith::factorize(d);
        if f.iter().any(|&(p, e)| e > 1 || !self.in_range(p)) {
            return 0;
        }
        let desc: Vec<u64> = f.iter().rev().map(|&(p, _)| p).collect();
        if self.contains_desc(&desc) {
            if desc.len() % 2 == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }

    /// `θ(n) = Σ_{d|n} λ_d` given the distinct primes of `n` (any order, any range).
    pub fn theta_from_primes(&self, n_primes: &[u64]) -> i64 {
        let mut ps: Vec<u64> = n_primes.iter().copied().filter(|&p| self.in_range(p)).collect();
        ps.sort_unstable_by(|a, b| b.cmp(a));
        self.dfs(&ps, 0, 1, 0)
    }

    fn dfs(&self, ps: &[u64], start: usize, prod: u128, m: usize) -> i64 {
        let sgn = if m % 2 == 0 { 1 } else { -1 };
        let mut total = sgn;
        for i in start..ps.len() {
            let p = ps[i];
            let next = prod * p as u128;
            if self.sign.checks(m + 1) && !below_level(next, p, self.beta, self.level) {
                // larger primes sit earlier in `ps`; smaller ones may still pass
                continue;
            }
            total += self.dfs(ps, i + 1, next, m + 1);
        }
        total
    }

    pub fn theta(&self, n: u64) -> i64 {
        self.theta_from_primes(&arith::distinct_prime_factors(n))
    }

    /// Materialized map `d ↦ λ_d` over the support.
    pub fn materialize(&self, cap: usize) -> Result<BTreeMap<u64, i8>> {
        let ps: Vec<u64> = if self.hi >= 2.0 {
            arith::primes_up_to(self.hi.floor() as u64)
                .into_iter()
                .filter(|&p| self.in_range(p))
                .collect()
        } else {
            Vec::new()
        };
        let mut out = BTreeMap::new();
        out.insert(1, 1);
        // ascending list; walk downward so that the prefix is decreasing
        let mut stack: Vec<(usize, u128, usize)> = vec![(ps.len(), 1, 0)];
        while let Some((below, prod, m)) = stack.pop() {
            for i in (0..below).rev() {
                let p = ps[i];
                let next = prod * p as u128;
                if self.sign.checks(m + 1) && !below_level(next, p, self.beta, self.level) {
                    continue;
                }
                let d = u64::try_from(next).map_err(|_| FiError::Range("sieve modulus overflow".into()))?;
                out.insert(d, if (m + 1) % 2 == 0 { 1 } else { -1 });
                if out.len() > cap {
                    return Err(FiError::Capacity(format!("sieve support exceeds {cap}")));
                }
                stack.push((i, next, m + 1));
            }
        }
        Ok(out)
    }
}

fn largest_prime_at_most(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&p| arith::is_prime_u64(p))
}

/// Both signs of a beta-sieve.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSieveWeights {
    pub plus: SieveWeightSet,
    pub minus: SieveWeightSet,
}

/// Beta-sieve of level `D` on primes in `(lo, hi]`.
pub fn beta_sieve_weights(level: f64, beta: f64, lo: f64, hi: f64) -> Result<BetaSieveWeights> {
    Ok(BetaSieveWeights {
        plus: SieveWeightSet::new(level, beta, lo, hi, Sign::Plus)?,
        minus: SieveWeightSet::new(level, beta, lo, hi, Sign::Minus)?,
    })
}

/// `θ±(n; D, D₀, z, z₀) = θ_I±(n; D₀, P(z₀))·θ_II±(n; D, P(z, z₀))`, with `β = 10` for the
/// preliminary stage and `β = 2` for the main stage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedSieve {
    pub stage1: BetaSieveWeights,
    pub stage2: BetaSieveWeights,
    pub z: f64,
}

impl ComposedSieve {
    pub fn new(level: f64, level0: f64, z: f64, z0: f64) -> Result<Self> {
        Ok(ComposedSieve {
            stage1: beta_sieve_weights(level0, 10.0, 0.0, z0)?,
            stage2: beta_sieve_weights(level, 2.0, z0, z)?,
            z,
        })
    }

    pub fn theta_from_primes(&self, ps: &[u64], sign: Sign) -> i64 {
        let (a, b) = match sign {
            Sign::Plus => (&self.stage1.plus, &self.stage2.plus),
            Sign::Minus => (&self.stage1.minus, &self.stage2.minus),
        };
        a.theta_from_primes(ps) * b.theta_from_primes(ps)
    }

    pub fn theta(&self, n: u64, sign: Sign) -> i64 {
        self.theta_from_primes(&arith::distinct_prime_factors(n), sign)
    }

    /// `1_{(n, P(z)) = 1}`.
    pub fn indicator_from_primes(&self, ps: &[u64]) -> i64 {
        ps.iter().all(|&p| p as f64 > self.z) as i64
    }
}

/// Parameters of the majorant at a given `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorantParams {
    pub x: f64,
    pub xi: f64,
    pub xi1: f64,
    pub delta0: f64,
    /// `exp((log x)^{1/3})`, or `√z₁` when that value would not lie below `z₁`.
    pub z0: f64,
    pub d0: f64,
    pub d1: f64,
    pub z1: f64,
    pub z: f64,
    /// Whether `z₀` was lowered to `√z₁`.
    pub z0_clamped: bool,
}

pub const XI: f64 = 0.265;
pub const XI1: f64 = 0.183;
pub const DELTA0: f64 = 1e-7;

impl MajorantParams {
    pub fn new(x: f64) -> Result<Self> {
        Self::with(x, XI, XI1, DELTA0)
    }

    pub fn with(x: f64, xi: f64, xi1: f64, delta0: f64) -> Result<Self> {
        if !(x >= 16.0) || !(0.0 < xi1 && xi1 < xi && xi < 2.0 / 3.0) {
            return domain(format!("bad majorant parameters x={x}, ξ={xi}, ξ₁={xi1}"));
        }
        let lx = x.ln();
        let z1 = x.powf(xi1 / 2.0);
        let z = x.powf(xi / 2.0);
        let mut z0 = lx.cbrt().exp();
        let d0 = lx.powf(2.0 / 3.0).exp();
        let d1 = x.powf(1.0 / 3.0 - delta0);
        let clamped = z0 >= z1;
        if clamped {
            z0 = z1.sqrt();
        }
        let p = MajorantParams { x, xi, xi1, delta0, z0, d0, d1, z1, z, z0_clamped: clamped };
        if !(p.z0 < p.z1 && p.z1 < p.z && p.z0 < p.d0 && p.z1 < p.d1) {
            return domain(format!("majorant parameter ordering fails at x={x}"));
        }
        Ok(p)
    }

    pub fn log_sqrt_x(&self) -> f64 {
        0.5 * self.x.ln()
    }

    /// Sieve used by `ω₁` and, at level `D₁/p`, by `ω₂`.
    pub fn inner_sieve(&self, level: f64) -> Result<ComposedSieve> {
        ComposedSieve::new(level, self.d0, self.z1, self.z0)
    }

    /// Sieve used by `Ω`.
    pub fn outer_sieve(&self) -> Result<ComposedSieve> {
        let level = self.x.powf(0.5 - self.delta0);
        let zz = self.x.powf(0.5 - 2.0 * self.delta0);
        ComposedSieve::new(level, self.d0, zz, self.z0)
    }

    /// Mid-range primes `z₁ ≤ p < z`.
    pub fn mid_primes(&self) -> Vec<u64> {
        arith::primes_up_to(self.z.ceil() as u64)
            .into_iter()
            .filter(|&p| p as f64 >= self.z1 && (p as f64) < self.z)
            .collect()
    }
}

/// `θ±(n)` of the composed sieve with levels `(D₁, D₀)` and ranges `(z₁, z₀)`, or a
/// different main level when `level_override` is given.
pub fn composed_theta(n: u64, params: &MajorantParams, sign: Sign, level_override: Option<f64>) -> Result<i64> {
    if n == 0 {
        return domain("composed_theta needs n ≥ 1");
    }
    Ok(params.inner_sieve(level_override.unwrap_or(params.d1))?.theta(n, sign))
}

/// Upper linear-sieve function `F(s)` for `s ∈ [1, 5]`.
#[allow(non_snake_case)]
pub fn linear_sieve_F(s: f64) -> Result<f64> {
    if !(1.0..=5.0).contains(&s) {
        return Err(FiError::Range(format!("F(s) implemented on [1,5], got {s}")));
    }
    let base = 2.0 * EULER_GAMMA.exp() / s;
    if s <= 3.0 {
        return Ok(base);
    }
    let f = |t: f64| (t - 1.0).ln() / t;
    Ok(base * (1.0 + crate::quad::adaptive_simpson(&f, 2.0, s - 1.0, 1e-12).value))
}

/// Lower linear-sieve function `f(s) = 2e^γ·log(s−1)/s` for `s ∈ [2, 4]`.
pub fn linear_sieve_f(s: f64) -> Result<f64> {
    if !(2.0..=4.0).contains(&s) {
        return Err(FiError::Range(format!("f(s) implemented on [2,4], got {s}")));
    }
    Ok(2.0 * EULER_GAMMA.exp() / s * (s - 1.0).ln())
}

/// Both sides of Pan's inequality for one squarefree `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanEvaluation {
    /// `ρ(l, z)`.
    pub lhs: i64,
    /// Twice the right-hand side, an integer.
    pub rhs_twice: i64,
    /// Number of prime factors of `l` in `[z₁, z)`.
    pub r: usize,
}

impl PanEvaluation {
    pub fn holds(&self) -> bool {
        2 * self.lhs <= self.rhs_twice
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_twice as f64 / 2.0
    }
}

fn rho_primes(ps: &[u64], z: f64) -> i64 {
    ps.iter().all(|&p| p as f64 > z) as i64
}

/// Evaluates `ρ(l,z) ≤ ρ(l,z₁) − ½Σ_{p|l} ρ(l/p,z₁) + ½Σ_{p₁<p₂<p₃, p₁p₂p₃|l} ρ(l/(p₁p₂p₃),p₁)`
/// with all `p, p_i ∈ [z₁, z)`.
pub fn pan_evaluate(l: u64, params: &MajorantParams) -> Result<PanEvaluation> {
    if l == 0 || !arith::is_squarefree(l) {
        return domain(format!("Pan's inequality needs squarefree l ≥ 1, got {l}"));
    }
    if (l as f64) > params.x.sqrt() * (1.0 + 1e-12) {
        return domain(format!("Pan's inequality needs l ≤ √x, got {l}"));
    }
    Ok(pan_from_primes(&arith::distinct_prime_factors(l), params))
}

fn pan_from_primes(ps: &[u64], params: &MajorantParams) -> PanEvaluation {
    let (z, z1) = (params.z, params.z1);
    let mid: Vec<u64> = ps.iter().copied().filter(|&p| p as f64 >= z1 && (p as f64) < z).collect();
    let without = |skip: &[u64]| -> Vec<u64> { ps.iter().copied().filter(|p| !skip.contains(p)).collect() };
    let mut rhs = 2 * rho_primes(ps, z1);
    for &p in &mid {
        rhs -= rho_primes(&without(&[p]), z1);
    }
    for (i, &a) in mid.iter().enumerate() {
        for (j, &b) in mid.iter().enumerate().skip(i + 1) {
            for &c in mid.iter().skip(j + 1) {
                rhs += rho_primes(&without(&[a, b, c]), a as f64);
            }
        }
    }
    PanEvaluation { lhs: rho_primes(ps, z), rhs_twice: rhs, r: mid.len() }
}

/// `true` iff Pan's inequality holds at `l`.
pub fn pan_inequality_check(l: u64, params: &MajorantParams) -> Result<bool> {
    Ok(pan_evaluate(l, params)?.holds())
}

/// The components `ω₁, ω₂, ω₃` and the correction `E₂` at one `l`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MajorantWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub e2: f64,
}

impl MajorantWeights {
    pub fn total(&self) -> f64 {
        self.w1 + self.w2 + self.w3 + self.e2
    }
}

/// Evaluator for `ω_i`, `Ω` and `Λ⁺` at fixed parameters.
#[derive(Clone, Debug)]
pub struct Majorant {
    pub params: MajorantParams,
    inner: ComposedSieve,
    outer: ComposedSieve,
    mid: Vec<u64>,
    /// `x^{1/2−2δ₀}`, below which prime powers go to `E₃`.
    e3_limit: f64,
}

impl Majorant {
    pub fn new(params: MajorantParams) -> Result<Self> {
        Ok(Majorant {
            inner: params.inner_sieve(params.d1)?,
            outer: params.outer_sieve()?,
            mid: params.mid_primes(),
            e3_limit: params.x.powf(0.5 - 2.0 * params.delta0),
            params,
        })
    }

    /// Weights at `l` from its factorization as `(p, e)` pairs.
    pub fn weights_from_factors(&self, f: &[(u64, u32)]) -> Result<MajorantWeights> {
        let p = &self.params;
        let ls = p.log_sqrt_x();
        let ps: Vec<u64> = f.iter().map(|&(q, _)| q).collect();
        let w1 = self.inner.theta_from_primes(&ps, Sign::Plus) as f64 * ls;
        let mut s2 = 0i64;
        for &(q, e) in f {
            let qf = q as f64;
            if qf >= p.z1 && qf < p.z {
                let sieve = p.inner_sieve(p.d1 / qf)?;
                let rest: Vec<u64> = if e > 1 { ps.clone() } else { ps.iter().copied().filter(|&r| r != q).collect() };
                s2 += sieve.theta_from_primes(&rest, Sign::Minus);
            }
        }
        let w2 = -0.5 * ls * s2 as f64;
        let mid: Vec<(u64, u32)> = f.iter().copied().filter(|&(q, _)| self.mid.binary_search(&q).is_ok()).collect();
        let mut c3 = 0i64;
        for i in 0..mid.len() {
            for j in i + 1..mid.len() {
                for k in j + 1..mid.len() {
                    let p1 = mid[i].0;
                    let trio = [mid[i].0, mid[j].0, mid[k].0];
                    let rough = f.iter().all(|&(q, e)| {
                        let left = if trio.contains(&q) { e - 1 } else { e };
                        left == 0 || q > p1
                    });
                    c3 += rough as i64;
                }
            }
        }
        let w3 = 0.5 * ls * c3 as f64;
        let lam = if f.len() == 1 { (f[0].0 as f64).ln() } else { 0.0 };
        let e1 = if f.len() == 1 && (f[0].0 as f64) < p.z { lam } else { 0.0 };
        let square_big = f.iter().any(|&(q, e)| e >= 2 && q as f64 >= p.z1);
        let e2 = e1 + if square_big { (lam - e1 - w1 - w2 - w3).max(0.0) } else { 0.0 };
        Ok(MajorantWeights { w1, w2, w3, e2 })
    }

    pub fn weights(&self, l: u64) -> Result<MajorantWeights> {
        if l == 0 {
            return domain("weights need l ≥ 1");
        }
        self.weights_from_factors(&arith::factorize(l))
    }

    /// `Ω(n) = θ⁺(n; x^{1/2−δ₀}, D₀, x^{1/2−2δ₀}, z₀)·log x`.
    pub fn omega_outer(&self, n: u64) -> f64 {
        self.outer.theta(n, Sign::Plus) as f64 * self.params.x.ln()
    }

    /// `E₃(n) = Λ(n)` when `n` is a power of a prime below `x^{1/2−2δ₀}`.
    pub fn e3(&self, n: u64) -> f64 {
        match arith::prime_power_base(n) {
            Some(p) if (p as f64) < self.e3_limit => (p as f64).ln(),
            _ => 0.0,
        }
    }
}

/// `Λ⁺(n,x)` split into its four parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MajorantValue {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub e: f64,
}

impl MajorantValue {
    pub fn total(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda3 + self.e
    }
}

/// Precomputed weights for every `l ≤ √x`, for bulk evaluation of `Λ⁺`.
#[derive(Clone, Debug)]
pub struct MajorantTable {
    pub majorant: Majorant,
    weights: Vec<MajorantWeights>,
}

impl MajorantTable {
    pub fn new(params: MajorantParams) -> Result<Self> {
        let majorant = Majorant::new(params)?;
        let lmax = arith::isqrt(params.x as u64);
        let spf = SpfTable::new(lmax.max(2));
        let mut weights = vec![MajorantWeights::default(); lmax as usize + 1];
        for l in 1..=lmax {
            weights[l as usize] = majorant.weights_from_factors(&spf.factorize(l))?;
        }
        Ok(MajorantTable { majorant, weights })
    }

    pub fn weights(&self, l: u64) -> MajorantWeights {
        self.weights[l as usize]
    }

    /// `Λ⁺(n,x)` for `n ≤ x`, summing over `n = k² + l²` with `k, l ≥ 1`.
    pub fn assemble(&self, n: u64) -> Result<MajorantValue> {
        if n == 0 || n as f64 > self.majorant.params.x {
            return domain(format!("Λ⁺(n,x) needs 1 ≤ n ≤ x, got {n}"));
        }
        let (mut s1, mut s2, mut s3, mut se2) = (0.0, 0.0, 0.0, 0.0);
        let mut k = 1u64;
        while k * k < n {
            let r = n - k * k;
            let l = arith::isqrt(r);
            if l * l == r {
                let w = self.weights[l as usize];
                s1 += w.w1;
                s2 += w.w2;
                s3 += w.w3;
                se2 += w.e2;
            }
            k += 1;
        }
        let lam = primes::von_mangoldt(n);
        let (omega, e3) = if s3 != 0.0 {
            (self.majorant.omega_outer(n), self.majorant.e3(n))
        } else {
            (0.0, 0.0)
        };
        Ok(MajorantValue {
            lambda1: lam * s1,
            lambda2: lam * s2,
            lambda3: omega * s3,
            e: lam * se2 + e3 * s3,
        })
    }
}

/// `(ω₁, ω₂, ω₃)` at `l`.
pub fn majorant_weights(l: u64, params: &MajorantParams) -> Result<(f64, f64, f64)> {
    let w = Majorant::new(*params)?.weights(l)?;
    Ok((w.w1, w.w2, w.w3))
}

/// `Ω(n, x)`.
pub fn majorant_omega(n: u64, params: &MajorantParams) -> Result<f64> {
    Ok(Majorant::new(*params)?.omega_outer(n))
}

/// `Λ⁺(n, x)`.
pub fn assemble_majorant(n: u64, params: &MajorantParams) -> Result<f64> {
    Ok(MajorantTable::new(*params)?.assemble(n)?.total())
}
