//! Exponential sums: `S₀`, weighted sums over a residue class, major/minor arcs, Type I
//! sums, the Type II lattice sum, sums over a minimum, and the DFI dissection.

use crate::arith::{self, FixedSum, SpfTable};
use crate::error::{domain, FiError, Result};
use crate::gaussian::GaussianInt;
use crate::lattice::{annulus_direct, annulus_lattice_points, reduced_basis, StarLattice};
use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Arc exponent used in the asymptotic argument; far too large for any computable `x`.
pub const ASYMPTOTIC_A_M: f64 = 1e5;
/// Arc exponent for desk-scale runs, small enough that `𝔐` is a proper subset of `[0, 1]`.
pub const DESK_A_M: f64 = 2.0;
/// Largest `x` accepted by the Type I sum.
pub const TYPE1_CAP: u64 = 100_000_000;
/// Largest support accepted by [`dfi_decompose`].
pub const DFI_CAP: usize = 10_000_000;
/// The absolute constant in the DFI remainder, calibrated on [`dfi_reference_instance`]:
/// there `X·G(z)²` times the level term alone already exceeds the residual, so `c = 0`.
pub const DFI_C: f64 = 0.0;

const CHUNK: u64 = 1 << 15;

/// `e(t) = exp(2πit)`, reducing `t` modulo 1 first.
pub fn e(t: f64) -> Complex64 {
    let f = t - t.floor();
    let (s, c) = (std::f64::consts::TAU * f).sin_cos();
    Complex64::new(c, s)
}

/// Distance from `t` to the nearest integer.
pub fn dist_to_int(t: f64) -> f64 {
    (t - t.round()).abs()
}

/// `S₀(γ, N) = Σ_{1≤n≤N} e(γn)` in closed form.
pub fn s0(gamma: f64, n: u64) -> Complex64 {
    if dist_to_int(gamma) < 1e-15 {
        return Complex64::new(n as f64, 0.0);
    }
    let eg = e(gamma);
    eg * (e(gamma * n as f64) - 1.0) / (eg - 1.0)
}

/// `Σ_{1≤n≤T} f(Wn + b)·e(γn)`, summed in fixed chunks so the result is thread-count independent.
pub fn weighted_expsum(f: &(dyn Fn(u64) -> f64 + Sync), gamma: f64, t: u64, w: u64, b: u64) -> Result<Complex64> {
    if w == 0 || b == 0 || b > w {
        return domain(format!("weighted sum needs 1 ≤ b ≤ W, got b={b}, W={w}"));
    }
    let chunks: Vec<Complex64> = (0..t.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK + 1;
            let hi = ((c + 1) * CHUNK).min(t);
            (lo..=hi).map(|n| f(w * n + b) * e(gamma * n as f64)).sum()
        })
        .collect();
    Ok(chunks.iter().sum())
}

/// Major arcs around `a/q` for `q ≤ (log x)^{A_M}`, each of radius `(log x)^{A_M}/x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDecomposition {
    pub x: f64,
    pub a_m: f64,
    pub q_max: u64,
    pub radius: f64,
    /// `(q, a)` sorted by centre `a/q`, including both `0/1` and `1/1`.
    pub arcs: Vec<(u64, u64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcClass {
    Major { q: u64, a: u64 },
    Minor,
}

/// Cap on the number of arcs; `Σ_{q≤Q} φ(q) ≈ 0.3·Q²`.
pub const ARC_Q_CAP: u64 = 20_000;

impl ArcDecomposition {
    pub fn new(x: f64, a_m: f64) -> Result<Self> {
        if !(x > std::f64::consts::E) || !(a_m > 0.0) {
            return domain("arcs need x > e and A_M > 0");
        }
        let scale = x.ln().powf(a_m);
        if scale > ARC_Q_CAP as f64 {
            return Err(FiError::Capacity(format!("(log x)^A_M = {scale:e} exceeds the arc cap {ARC_Q_CAP}")));
        }
        let q_max = scale.floor() as u64;
        let mut arcs = vec![(1, 0), (1, 1)];
        for q in 2..=q_max {
            arcs.extend((1..q).filter(|a| a.gcd(&q) == 1).map(|a| (q, a)));
        }
        arcs.sort_by(|l, r| (l.1 * r.0).cmp(&(r.1 * l.0)));
        Ok(ArcDecomposition { x, a_m, q_max, radius: scale / x, arcs })
    }

    /// Whether consecutive arcs overlap.
    pub fn disjoint(&self) -> bool {
        self.arcs.windows(2).all(|w| {
            let gap = w[1].1 as f64 / w[1].0 as f64 - w[0].1 as f64 / w[0].0 as f64;
            gap > 2.0 * self.radius
        })
    }

    /// Total measure of `𝔐 ∩ [0, 1]` when the arcs are disjoint.
    pub fn major_measure(&self) -> f64 {
        (self.arcs.len() as f64 - 1.0) * 2.0 * self.radius
    }

    /// The arc containing `γ ∈ [0, 1]`, the one with smallest `q` if several do.
    pub fn classify(&self, gamma: f64) -> Result<ArcClass> {
        if !(0.0..=1.0).contains(&gamma) {
            return domain(format!("classify needs γ ∈ [0, 1], got {gamma}"));
        }
        let idx = self.arcs.partition_point(|&(q, a)| (a as f64 / q as f64) < gamma);
        let lo = idx.saturating_sub(1);
        let mut best: Option<(u64, u64)> = None;
        // Arcs are sorted by centre; look outward until centres leave the radius.
        let near = |i: usize| {
            let (q, a) = self.arcs[i];
            (gamma - a as f64 / q as f64).abs() <= self.radius
        };
        let mut consider = |i: usize| {
            let (q, a) = self.arcs[i];
            if best.is_none_or(|b| q < b.0) {
                best = Some((q, a));
            }
        };
        let mut i = idx;
        while i < self.arcs.len() && near(i) {
            consider(i);
            i += 1;
        }
        let mut j = lo as isize;
        while j >= 0 && j as usize != idx && near(j as usize) {
            consider(j as usize);
            j -= 1;
        }
        Ok(best.map_or(ArcClass::Minor, |(q, a)| ArcClass::Major { q, a }))
    }
}

/// Which phase the Type I sum attaches to `dn = k² + l²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Type1Phase {
    /// `e(γn)` with `n` the cofactor of `d`.
    Cofactor,
    /// `e(γ·dn)`.
    Product,
}

/// Prime-leg representations `m = k² + l²` (`k ≥ 1`, `l` prime) for every `m ≤ x`, in CSR form.
struct RepIndex {
    start: Vec<u32>,
    legs: Vec<u32>,
}

impl RepIndex {
    fn new(x: u64) -> Self {
        let ls = arith::primes_up_to(arith::isqrt(x.saturating_sub(1)));
        let mut count = vec![0u32; x as usize + 2];
        for &l in &ls {
            let mut k = 1;
            while k * k + l * l <= x {
                count[(k * k + l * l) as usize + 1] += 1;
                k += 1;
            }
        }
        for i in 1..count.len() {
            count[i] += count[i - 1];
        }
        let mut fill = count.clone();
        let mut legs = vec![0u32; *count.last().unwrap() as usize];
        for &l in &ls {
            let mut k = 1;
            while k * k + l * l <= x {
                let m = (k * k + l * l) as usize;
                legs[fill[m] as usize] = l as u32;
                fill[m] += 1;
                k += 1;
            }
        }
        RepIndex { start: count, legs }
    }

    fn legs(&self, m: u64) -> &[u32] {
        &self.legs[self.start[m as usize] as usize..self.start[m as usize + 1] as usize]
    }
}

/// `Σ_{d≤D_I} |Σ_{dn≤x, dn≡b (W)} Σ_{dn=k²+l²} ω(l)·e(γ·phase)|`.
pub fn type1_sum(
    gamma: f64,
    d_i: u64,
    omega: &(dyn Fn(u64) -> f64 + Sync),
    w: u64,
    b: u64,
    x: u64,
    phase: Type1Phase,
) -> Result<f64> {
    if x > TYPE1_CAP {
        return Err(FiError::Capacity(format!("type1_sum cap is {TYPE1_CAP}, got {x}")));
    }
    if w == 0 {
        return domain("W must be positive");
    }
    if d_i == 0 || x < 2 {
        return Ok(0.0);
    }
    let reps = RepIndex::new(x);
    let per_d: Vec<f64> = (1..=d_i.min(x))
        .into_par_iter()
        .map(|d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 1..=x / d {
                let m = d * n;
                if m % w != b % w {
                    continue;
                }
                let legs = reps.legs(m);
                if legs.is_empty() {
                    continue;
                }
                let weight: f64 = legs.iter().map(|&l| omega(l as u64)).sum();
                let t = match phase {
                    Type1Phase::Cofactor => n,
                    Type1Phase::Product => m,
                };
                acc += weight * e(gamma * t as f64);
            }
            acc.norm()
        })
        .collect();
    Ok(per_d.iter().sum())
}

/// The Type II lattice sum `Σ_{M<|m|²≤M_hi, m∈Γ} e(ξ|m|²)` evaluated two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type2Sum {
    pub value: Complex64,
    pub direct: Complex64,
    pub points: u64,
    pub basis_secs: f64,
    pub direct_secs: f64,
}

fn fixed_phase_sum(xi: f64, pts: impl Iterator<Item = GaussianInt>) -> (Complex64, u64) {
    let (mut re, mut im, mut n) = (FixedSum::default(), FixedSum::default(), 0);
    for m in pts {
        let z = e(xi * m.norm() as f64);
        re.add(z.re);
        im.add(z.im);
        n += 1;
    }
    (Complex64::new(re.value(), im.value()), n)
}

/// Both paths accumulate in exact fixed point, so they agree bit for bit whenever they visit
/// the same points; disagreement is reported as an assertion failure.
pub fn type2_lattice_sum(xi: f64, lat: &StarLattice, m: u64, m_hi: u64) -> Result<Type2Sum> {
    let t = Instant::now();
    let basis = reduced_basis(lat)?;
    let ann = annulus_lattice_points(lat, &basis, m, m_hi)?;
    let (value, points) = fixed_phase_sum(xi, ann.points.iter().copied());
    let basis_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (direct, _) = fixed_phase_sum(xi, annulus_direct(lat, m, m_hi)?.into_iter());
    let direct_secs = t.elapsed().as_secs_f64();
    if value != direct {
        return Err(FiError::Assertion(format!("Type II paths disagree: {value} vs {direct}")));
    }
    Ok(Type2Sum { value, direct, points, basis_secs, direct_secs })
}

/// `Σ_{0<j≤J} min{K, ‖mult·(a/q)·j‖⁻¹}` in exact residue arithmetic.
pub fn min_sum_rational(a: i64, q: u64, j_max: u64, k: f64, mult: i64) -> Result<f64> {
    if q == 0 || j_max == 0 || !(k > 0.0) {
        return domain("min_sum needs q ≥ 1, J ≥ 1, K > 0");
    }
    let step = ((a as i128 * mult as i128).rem_euclid(q as i128)) as u64;
    let mut t = 0u64;
    let mut acc = 0.0;
    for _ in 0..j_max {
        t = (t + step) % q;
        let r = t.min(q - t);
        acc += if r == 0 { k } else { k.min(q as f64 / r as f64) };
    }
    Ok(acc)
}

/// Best rational approximation with denominator `≤ q_max`, by continued fractions.
fn rational_approx(g: f64, q_max: u64) -> (i64, u64) {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1u64, 0u64);
    let mut x = g;
    for _ in 0..64 {
        let a = x.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as u64 * k1 + k0);
        if k2 > q_max {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a;
        if frac < 1e-18 {
            break;
        }
        x = 1.0 / frac;
    }
    (h1, k1.max(1))
}

/// `Σ_{0<j≤J} min{K, ‖mult·γ·j‖⁻¹}`. A `γ` within `10⁻¹⁵` of a fraction with denominator
/// at most `10⁶` is evaluated exactly as that fraction.
pub fn min_sum(gamma: f64, j_max: u64, k: f64, mult: i64) -> Result<f64> {
    if j_max == 0 || !(k > 0.0) || !gamma.is_finite() {
        return domain("min_sum needs J ≥ 1, K > 0 and finite γ");
    }
    let (a, q) = rational_approx(gamma, 1_000_000);
    if (gamma - a as f64 / q as f64).abs() < 1e-15 {
        return min_sum_rational(a, q, j_max, k, mult);
    }
    Ok((1..=j_max)
        .map(|j| {
            let d = dist_to_int(mult as f64 * gamma * j as f64);
            if d == 0.0 {
                k
            } else {
                k.min(1.0 / d)
            }
        })
        .sum())
}

/// The classical bound `(J/q + 1)(K + q·log q)`.
pub fn min_sum_bound(q: u64, j_max: u64, k: f64) -> f64 {
    (j_max as f64 / q as f64 + 1.0) * (k + q as f64 * (q as f64).ln())
}

/// Parameters of the DFI dissection; must satisfy `3 ≤ K ≤ U₁ < U₂ < z < D_I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfiParams {
    pub z: f64,
    pub u1: f64,
    pub u2: f64,
    pub d_i: f64,
    pub k: u32,
}

impl DfiParams {
    pub fn validate(&self) -> Result<()> {
        let k = self.k as f64;
        if !(3.0 <= k && k <= self.u1 && self.u1 < self.u2 && self.u2 < self.z && self.z < self.d_i) {
            return domain(format!("DFI needs 3 ≤ K ≤ U₁ < U₂ < z < D_I, got {self:?}"));
        }
        Ok(())
    }

    /// `y_k = U₂(U₁/U₂)^{k/K}`.
    pub fn y(&self, k: u32) -> f64 {
        self.u2 * (self.u1 / self.u2).powf(k as f64 / self.k as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfiDecomposition {
    /// `S(𝒞, z)`.
    pub s: Complex64,
    /// `Σ_{d|P(z), d<D_I}^{U₁} μ(d)|𝒞_d|`.
    pub type1: Complex64,
    /// `Σ_{y_{k+1}≤p<y_k<q<z} S(𝒞_{pq}, y_k)` for `k = 0..K`.
    pub bands: Vec<Complex64>,
    /// `Σ_{U₂≤p<q<z} S(𝒞_{pq}, p)`.
    pub sieved_tail: Complex64,
    /// `S − tail − type1 − Σ bands`.
    pub residual: Complex64,
    /// Smallest `X` with `Σ_{d|n}|c(n)| ≤ X/d` for all `d`.
    pub x_const: f64,
    /// `G(z) = Π_{p<z}(1 + 1/p)`.
    pub g: f64,
    /// `2^{−log(D_I/z)/log U₁}`.
    pub level_term: f64,
    /// `K⁻¹·log U₂`.
    pub band_term: f64,
}

impl DfiDecomposition {
    /// `X·G(z)²·(2^{−log(D_I/z)/log U₁} + c·K⁻¹·log U₂)`.
    pub fn bound(&self, c: f64) -> f64 {
        self.x_const * self.g * self.g * (self.level_term + c * self.band_term)
    }

    pub fn within_bound(&self, c: f64) -> bool {
        self.residual.norm() <= self.bound(c)
    }

    /// Smallest `c ≥ 0` for which the residual fits.
    pub fn calibrate_c(&self) -> f64 {
        let need = self.residual.norm() / (self.x_const * self.g * self.g) - self.level_term;
        (need / self.band_term).max(0.0)
    }
}

/// Squarefree `d | P(z)`, `d < D_I`, with at most one prime factor `≥ U₁`, paired with `μ(d)`.
fn type1_moduli(primes: &[u64], u1: f64, d_i: f64) -> Vec<(u64, i8)> {
    fn go(primes: &[u64], i: usize, d: u64, mu: i8, big: bool, u1: f64, d_i: f64, out: &mut Vec<(u64, i8)>) {
        out.push((d, mu));
        for j in i..primes.len() {
            let p = primes[j];
            if (d * p) as f64 >= d_i {
                break;
            }
            let is_big = p as f64 >= u1;
            if big && is_big {
                continue;
            }
            go(primes, j + 1, d * p, -mu, big || is_big, u1, d_i, out);
        }
    }
    let mut out = Vec::new();
    go(primes, 0, 1, 1, false, u1, d_i, &mut out);
    out
}

/// The dissection of `S(𝒞, z)` into a Type I part, `K` Type II bands and the sieved tail.
/// `c[n]` is the sequence at `n`; `c[0]` is ignored.
pub fn dfi_decompose(c: &[Complex64], params: DfiParams) -> Result<DfiDecomposition> {
    params.validate()?;
    if c.len() > DFI_CAP {
        return Err(FiError::Capacity(format!("DFI support {} exceeds {DFI_CAP}", c.len())));
    }
    let n_max = c.len().saturating_sub(1) as u64;
    let spf = SpfTable::new(n_max.max(2));
    let lpf = |m: u64| if m == 1 { u64::MAX } else { spf.spf(m) };
    let at = |n: u64| c[n as usize];
    let zeta = Complex64::new(0.0, 0.0);
    // Σ_{m ≤ n_max/d, lpf(m) ≥ y} c(dm).
    let rough_sum = |d: u64, y: f64| -> Complex64 {
        (1..=n_max / d).filter(|&m| lpf(m) as f64 >= y).map(|m| at(d * m)).sum()
    };

    let s = rough_sum(1, params.z);
    let zp: Vec<u64> = arith::primes_up_to(params.z.ceil() as u64).into_iter().filter(|&p| (p as f64) < params.z).collect();

    let mut sieved_tail = zeta;
    for (i, &p) in zp.iter().enumerate() {
        if (p as f64) < params.u2 {
            continue;
        }
        for &q in &zp[i + 1..] {
            if p * q > n_max {
                break;
            }
            sieved_tail += rough_sum(p * q, p as f64);
        }
    }

    let mut type1 = zeta;
    for (d, mu) in type1_moduli(&zp, params.u1, params.d_i) {
        if d <= n_max {
            let cd: Complex64 = (1..=n_max / d).map(|m| at(d * m)).sum();
            type1 += mu as f64 * cd;
        }
    }

    let mut bands = Vec::with_capacity(params.k as usize);
    for k in 0..params.k {
        let (yk, yk1) = (params.y(k), params.y(k + 1));
        let mut acc = zeta;
        for &p in zp.iter().filter(|&&p| p as f64 >= yk1 && (p as f64) < yk) {
            for &q in zp.iter().filter(|&&q| q as f64 > yk) {
                if p * q > n_max {
                    break;
                }
                acc += rough_sum(p * q, yk);
            }
        }
        bands.push(acc);
    }

    let residual = s - sieved_tail - type1 - bands.iter().sum::<Complex64>();
    let x_const = (1..=n_max)
        .map(|d| d as f64 * (1..=n_max / d).map(|m| at(d * m).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let g = zp.iter().map(|&p| 1.0 + 1.0 / p as f64).product();
    Ok(DfiDecomposition {
        s,
        type1,
        bands,
        sieved_tail,
        residual,
        x_const,
        g,
        level_term: 2f64.powf(-(params.d_i / params.z).ln() / params.u1.ln()),
        band_term: params.u2.ln() / params.k as f64,
    })
}

/// The instance on which [`DFI_C`] was calibrated: the indicator of `[1, 10⁵]`.
pub fn dfi_reference_instance() -> (Vec<Complex64>, DfiParams) {
    let n = 100_000usize;
    let mut c = vec![Complex64::new(1.0, 0.0); n + 1];
    c[0] = Complex64::new(0.0, 0.0);
    let params = DfiParams { z: 200.0, u1: 5.0, u2: (n as f64).cbrt(), d_i: 2000.0, k: 3 };
    (c, params)
}
