//! The Buchstab function `ℬ(u)`, rough numbers and `B(t,z) = ℬ(log t/log z)/log z`.
//!
//! `ℬ(u) = 0` for `u < 1`, `1/u` on `[1,2]`, and `(uℬ(u))′ = ℬ(u−1)` beyond. The table
//! stores `G(u) = uℬ(u)` on the grid `u_j = 2 + j·h` with `h = 1/n`, so `u_j − 1` is always
//! a grid point and each step integrates already-known values.

use crate::arith;
use crate::error::{domain, FiError, Result};
use crate::quad;
use rayon::prelude::*;
use std::sync::OnceLock;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_U_MAX: f64 = 10.0;

/// Tabulated `ℬ` on `[2, u_max]` with cubic Hermite evaluation between nodes.
#[derive(Clone, Debug)]
pub struct BuchstabInterpolant {
    n: usize,
    h: f64,
    u_max: f64,
    values: Vec<f64>,
    continuation: bool,
}

impl BuchstabInterpolant {
    /// Builds the table with step `h` (rounded to `1/round(1/h)`) up to `u_max`.
    pub fn new(h: f64, u_max: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) || !(u_max >= 3.0) {
            return domain(format!("need 0 < h ≤ 1/2 and u_max ≥ 3, got h={h}, u_max={u_max}"));
        }
        let n = (1.0 / h).round() as usize;
        let h = 1.0 / n as f64;
        let steps = ((u_max - 2.0) * n as f64).ceil() as usize;
        let mut g = Vec::with_capacity(steps + 1);
        let mut b = Vec::with_capacity(steps + 1);
        g.push(1.0);
        b.push(0.5);
        // ℬ(w) and one-sided ℬ′(w) for w = v − 1 with v on the grid.
        let at = |b: &[f64], w_idx: isize| -> f64 {
            if w_idx >= 0 {
                b[w_idx as usize]
            } else {
                1.0 / (2.0 + w_idx as f64 * h)
            }
        };
        for j in 0..steps {
            let ua = 2.0 + j as f64 * h;
            let ub = ua + h;
            let ia = j as isize - n as isize;
            let ib = ia + 1;
            let fa = at(&b, ia);
            let fb = at(&b, ib);
            let wa = ua - 1.0;
            let wb = ub - 1.0;
            // right-limit of ℬ′ at the left end, left-limit at the right end
            let da = if ia < 0 { -1.0 / (wa * wa) } else { (at(&b, ia - n as isize) - fa) / wa };
            let db = if ib <= 0 { -1.0 / (wb * wb) } else { (at(&b, ib - n as isize) - fb) / wb };
            let integral = 0.5 * h * (fa + fb) + h * h / 12.0 * (da - db);
            let gn = g[j] + integral;
            g.push(gn);
            b.push(gn / ub);
        }
        Ok(BuchstabInterpolant { n, h, u_max: 2.0 + steps as f64 * h, values: b, continuation: false })
    }

    /// Allows evaluation beyond `u_max` by building a larger table for each such call.
    pub fn with_continuation(mut self, on: bool) -> Self {
        self.continuation = on;
        self
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Grid value `ℬ(2 + j·h)`.
    pub fn node(&self, j: usize) -> f64 {
        self.values[j]
    }

    fn b_node_or_closed(&self, idx: isize) -> f64 {
        if idx >= 0 {
            self.values[idx as usize]
        } else {
            let u = 2.0 + idx as f64 * self.h;
            if u >= 1.0 {
                1.0 / u
            } else {
                0.0
            }
        }
    }

    /// `ℬ(u)`; closed forms below 3, table interpolation above.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return domain("ℬ(u) needs finite u");
        }
        if u < 1.0 {
            return Ok(0.0);
        }
        if u <= 2.0 {
            return Ok(1.0 / u);
        }
        if u < 3.0 {
            return Ok((1.0 + (u - 1.0).ln()) / u);
        }
        if u > self.u_max {
            if !self.continuation {
                return Err(FiError::Range(format!(
                    "ℬ({u}) beyond table end {} with continuation disabled",
                    self.u_max
                )));
            }
            let bigger = BuchstabInterpolant::new(self.h, (2.0 * u).max(u + 2.0))?;
            return bigger.eval(u);
        }
        let t = (u - 2.0) * self.n as f64;
        let mut j = t.floor() as usize;
        if j >= self.values.len() - 1 {
            j = self.values.len() - 2;
        }
        let s = t - j as f64;
        let (u0, u1) = (2.0 + j as f64 * self.h, 2.0 + (j + 1) as f64 * self.h);
        let n = self.n as isize;
        let b0 = self.values[j];
        let b1 = self.values[j + 1];
        let d0 = (self.b_node_or_closed(j as isize - n) - b0) / u0;
        let d1 = (self.b_node_or_closed(j as isize + 1 - n) - b1) / u1;
        let h = self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * b0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * b1
            + (s3 - s2) * h * d1)
    }

    /// `ℬ′(u) = (ℬ(u−1) − ℬ(u))/u` for `u > 2`, `−1/u²` on `(1, 2)`.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        if u < 1.0 {
            return Ok(0.0);
        }
        if u < 2.0 {
            return Ok(-1.0 / (u * u));
        }
        Ok((self.eval(u - 1.0)? - self.eval(u)?) / u)
    }
}

fn default_interpolant() -> &'static BuchstabInterpolant {
    static B: OnceLock<BuchstabInterpolant> = OnceLock::new();
    B.get_or_init(|| BuchstabInterpolant::new(DEFAULT_STEP, DEFAULT_U_MAX).expect("default grid"))
}

/// `ℬ(u)` from the shared default table (step `10⁻⁴`, `u ≤ 10`).
#[allow(non_snake_case)]
pub fn buchstab_B(u: f64) -> Result<f64> {
    default_interpolant().eval(u)
}

pub fn default_buchstab() -> &'static BuchstabInterpolant {
    default_interpolant()
}

/// `ρ(n,z) = 1` iff every prime factor of `n` exceeds `z`.
pub fn rough_indicator(n: u64, z: f64) -> u8 {
    arith::factorize(n).iter().all(|&(p, _)| p as f64 > z) as u8
}

/// `1` iff every prime factor of `n` is at least `p`.
fn rough_from(n: u64, p: u64) -> u8 {
    arith::factorize(n).iter().all(|&(q, _)| q >= p) as u8
}

/// `B(t,z) = ℬ(log t/log z)/log z`.
pub fn b_tz(t: f64, z: f64) -> Result<f64> {
    if t <= 1.0 {
        return Ok(0.0);
    }
    let lz = z.ln();
    Ok(buchstab_B(t.ln() / lz)? / lz)
}

/// Output of [`rough_count`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoughCount {
    pub exact: u64,
    pub predicted: f64,
    /// `false` when `z < T^{0.1}`, where the integral prediction is not meaningful.
    pub reliable: bool,
}

/// Counts `n ≤ T` with `ρ(n,z) = 1` and compares with `∫₀^T B(t,z) dt`.
pub fn rough_count(t_max: u64, z: f64) -> Result<RoughCount> {
    if !(z >= 2.0) || z > t_max as f64 {
        return domain(format!("rough_count needs 2 ≤ z ≤ T, got z={z}, T={t_max}"));
    }
    let exact = rough_exact(t_max, z)?;
    let u_top = (t_max as f64).ln() / z.ln();
    let reliable = z >= (t_max as f64).powf(0.1);
    let wide;
    let interp = if u_top <= DEFAULT_U_MAX {
        default_interpolant()
    } else {
        wide = BuchstabInterpolant::new(DEFAULT_STEP, u_top.ceil() + 1.0)?;
        &wide
    };
    let f = |u: f64| interp.eval(u).unwrap_or(0.0) * z.powf(u);
    let mut breaks = vec![1.0];
    let mut k = 2.0;
    while k < u_top {
        breaks.push(k);
        k += 1.0;
    }
    breaks.push(u_top);
    let predicted = quad::gauss_breaks(&f, &breaks, 64, quad::gl16());
    Ok(RoughCount { exact, predicted, reliable })
}

fn rough_exact(t_max: u64, z: f64) -> Result<u64> {
    const SEG: u64 = 1 << 20;
    let primes = arith::primes_up_to(z.floor() as u64);
    let segs = t_max.div_ceil(SEG);
    Ok((0..segs)
        .into_par_iter()
        .map(|s| {
            let lo = s * SEG + 1;
            let hi = ((s + 1) * SEG).min(t_max);
            let mut alive = vec![true; (hi - lo + 1) as usize];
            for &p in &primes {
                let mut m = lo.div_ceil(p) * p;
                while m <= hi {
                    alive[(m - lo) as usize] = false;
                    m += p;
                }
            }
            alive.iter().filter(|&&a| a).count() as u64
        })
        .sum())
}

/// Checks `ρ(n,z) = ρ(n,w) + Σ_{z<p≤w, p|n} ρ⁺(n/p, p)` for one `n`, where `ρ⁺(m,p)`
/// asks that every prime factor of `m` be at least `p`.
///
/// With the strict reading `ρ(n/p, p)` the identity fails once the least prime factor
/// `p ∈ (z, w]` divides `n` twice, e.g. `n = 25`, `z = 3`, `w = 50`.
pub fn buchstab_identity_check(n: u64, z: f64, w: f64) -> Result<bool> {
    if !(z < w) || n == 0 {
        return domain("buchstab_identity_check needs n ≥ 1 and z < w");
    }
    let lhs = rough_indicator(n, z) as i64;
    let mut rhs = rough_indicator(n, w) as i64;
    for (p, _) in arith::factorize(n) {
        let pf = p as f64;
        if pf > z && pf <= w {
            rhs += rough_from(n / p, p) as i64;
        }
    }
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(buchstab_B(0.5).unwrap(), 0.0);
        assert!((buchstab_B(1.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((buchstab_B(2.5).unwrap() - 0.562186).abs() < 1e-6);
        assert!(buchstab_B(11.0).is_err());
    }

    #[test]
    fn table_reproduces_closed_form_on_two_three() {
        let b = default_buchstab();
        for j in 0..=10_000 {
            let u = 2.0 + j as f64 * 1e-4;
            let closed = (1.0 + (u - 1.0).ln()) / u;
            assert!((b.node(j) - closed).abs() < 1e-12, "u={u}");
        }
        assert!((b.node(0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bounds_and_limit() {
        let b = default_buchstab();
        for j in 0..=800 {
            let u = 1.0 + j as f64 * 0.01;
            let v = b.eval(u).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        // ℬ(u) → e^{−γ} = 0.561459...
        assert!((b.eval(9.9).unwrap() - 0.561459483566885).abs() < 1e-6);
    }

    #[test]
    fn continuation() {
        let b = BuchstabInterpolant::new(1e-3, 4.0).unwrap().with_continuation(true);
        assert!((b.eval(6.0).unwrap() - default_buchstab().eval(6.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn grid_halving() {
        let a = BuchstabInterpolant::new(1e-3, 6.0).unwrap();
        let b = BuchstabInterpolant::new(5e-4, 6.0).unwrap();
        for j in 0..=300 {
            let u = 3.0 + j as f64 * 0.01;
            assert!((a.eval(u).unwrap() - b.eval(u).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn derivative_relation() {
        let b = default_buchstab();
        let mut k = 0;
        for i in 0..400 {
            let u = 2.005 + i as f64 * 0.01;
            if (u - u.round()).abs() < 0.01 {
                continue;
            }
            let eps = 1e-5;
            let fd = (b.eval(u + eps).unwrap() - b.eval(u - eps).unwrap()) / (2.0 * eps);
            let d = b.derivative(u).unwrap();
            assert!((fd - d).abs() <= 1e-4 * d.abs().max(1e-3), "u={u}: {fd} vs {d}");
            k += 1;
        }
        assert!(k >= 100);
    }

    #[test]
    fn derivative_bound_for_b_tz() {
        let z = 50.0f64;
        for i in 1..200 {
            let t = 60.0 * 1.03f64.powi(i);
            let near_knot = [z, z * z, z * z * z].iter().any(|k| (t / k - 1.0).abs() < 1e-3);
            if near_knot {
                continue;
            }
            let eps = t * 1e-7;
            let fd = (b_tz(t + eps, z).unwrap() - b_tz(t - eps, z).unwrap()) / (2.0 * eps);
            let bound = 1.0 / (t * t.ln() * z.ln());
            assert!(fd.abs() <= bound * (1.0 + 1e-6), "t={t}");
        }
    }

    #[test]
    fn rough_examples() {
        assert_eq!(rough_indicator(7, 5.0), 1);
        assert_eq!(rough_indicator(15, 4.0), 0);
        assert_eq!(rough_indicator(1, 100.0), 1);
        assert_eq!(rough_count(100, 10.0).unwrap().exact, 22);
        assert_eq!(rough_count(1000, 1000.0).unwrap().exact, 1);
        assert!(!rough_count(1_000_000, 3.0).unwrap().reliable);
    }

    #[test]
    fn rough_count_prediction() {
        let r = rough_count(1_000_000, 1000.0).unwrap();
        assert_eq!(r.exact, 78331);
        assert!((r.predicted / r.exact as f64 - 1.0).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn identity() {
        assert!(buchstab_identity_check(30, 2.0, 5.0).unwrap());
        assert!(buchstab_identity_check(1, 2.0, 100.0).unwrap());
        for n in 1..=20_000 {
            assert!(buchstab_identity_check(n, 3.0, 50.0).unwrap(), "n={n}");
        }
    }
}
