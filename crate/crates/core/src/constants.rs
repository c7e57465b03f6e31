//! The three density integrals bounding `C_i·C′_i` and their sum `α⁺`.
//!
//! With `a = 2/3 − 2δ₀`:
//! - `c1 = (2/a)·(1 + ∫₂^{a/ξ₁−1} log(t−1)/t dt)`,
//! - `c2 = −∫_{ξ₁}^{ξ} log((a−t)/ξ₁ − 1) / (t(a−t)) dt`,
//! - `c3 = (2/(1−2δ₀))·∫∫∫_{ξ₁≤β₁≤β₂≤β₃≤ξ} ℬ((1−β₁−β₂−β₃)/β₁) / (β₁²β₂β₃)`.

use crate::buchstab::BuchstabInterpolant;
use crate::error::{domain, FiError, Result};
use crate::quad::{self, adaptive_simpson, QuadratureResult};
use crate::sieve::MajorantParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Upper bound the headline constant must respect.
pub const ALPHA_PLUS_BOUND: f64 = 2.9739;
/// Lower sanity band for `α⁺`.
pub const ALPHA_PLUS_FLOOR: f64 = 2.85;
/// Density of the lower-bound sieve used against the majorant.
pub const ALPHA_MINUS: f64 = 0.999;
/// Default Gauss–Legendre panels per smooth piece in `c3`.
pub const DEFAULT_C3_PANELS: usize = 4;

const SIMPSON_TOL: f64 = 1e-10;

/// Which integrand `c1` uses. `AsPrinted` reads the numerator as `log t − 1` and exists only
/// so the regression test can show it is wrong.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum C1Integrand {
    Corrected,
    AsPrinted,
}

fn level(delta0: f64) -> f64 {
    2.0 / 3.0 - 2.0 * delta0
}

pub fn c1_bound(xi1: f64, delta0: f64) -> Result<QuadratureResult> {
    c1_bound_with(xi1, delta0, C1Integrand::Corrected)
}

pub fn c1_bound_with(xi1: f64, delta0: f64, integrand: C1Integrand) -> Result<QuadratureResult> {
    if !(xi1 > 0.0 && xi1 < 2.0 / 3.0) || !(0.0..1.0 / 3.0).contains(&delta0) {
        return domain(format!("c1 needs 0 < ξ₁ < 2/3 and 0 ≤ δ₀ < 1/3, got ξ₁={xi1}, δ₀={delta0}"));
    }
    let a = level(delta0);
    let s = a / xi1;
    let prefactor = 2.0 / a;
    if s <= 3.0 {
        return Ok(QuadratureResult { value: prefactor, error_estimate: 0.0, grid: 0 });
    }
    let f: Box<dyn Fn(f64) -> f64> = match integrand {
        C1Integrand::Corrected => Box::new(|t: f64| (t - 1.0).ln() / t),
        C1Integrand::AsPrinted => Box::new(|t: f64| (t.ln() - 1.0) / t),
    };
    let r = adaptive_simpson(&*f, 2.0, s - 1.0, SIMPSON_TOL);
    Ok(QuadratureResult {
        value: prefactor * (1.0 + r.value),
        error_estimate: prefactor * r.error_estimate,
        grid: r.grid,
    })
}

pub fn c2_bound(xi1: f64, xi: f64, delta0: f64) -> Result<QuadratureResult> {
    if !(xi1 > 0.0 && xi >= xi1) {
        return domain(format!("c2 needs 0 < ξ₁ ≤ ξ, got ξ₁={xi1}, ξ={xi}"));
    }
    let a = level(delta0);
    if (a - xi) / xi1 - 1.0 <= 0.0 {
        return domain(format!("c2: log argument (a−ξ)/ξ₁ − 1 ≤ 0 at ξ={xi}, ξ₁={xi1}"));
    }
    let f = |t: f64| ((a - t) / xi1 - 1.0).ln() / (t * (a - t));
    let r = adaptive_simpson(&f, xi1, xi, SIMPSON_TOL);
    Ok(QuadratureResult { value: -r.value, error_estimate: r.error_estimate, grid: r.grid })
}

fn c3_check(xi1: f64, xi: f64, delta0: f64, b: &BuchstabInterpolant) -> Result<()> {
    if !(xi1 > 0.0 && xi >= xi1 && xi < 1.0 / 3.0) || !(0.0..0.5).contains(&delta0) {
        return domain(format!("c3 needs 0 < ξ₁ ≤ ξ < 1/3, got ξ₁={xi1}, ξ={xi}"));
    }
    let u_top = (1.0 - 3.0 * xi1) / xi1;
    if u_top > b.u_max() {
        return Err(FiError::Range(format!("c3 needs ℬ up to {u_top}, table ends at {}", b.u_max())));
    }
    Ok(())
}

/// Sorted breakpoints inside `(lo, hi)` plus both ends.
fn breaks(lo: f64, hi: f64, inner: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v = vec![lo, hi];
    v.extend(inner.into_iter().filter(|&p| p > lo && p < hi));
    v.sort_by(f64::total_cmp);
    v
}

fn c3_nested(xi1: f64, xi: f64, b: &BuchstabInterpolant, panels: usize) -> f64 {
    let rule = quad::gl16();
    // ℬ((1−β₁−β₂−β₃)/β₁) is non-smooth where the argument is an integer k.
    let kmax = ((1.0 - 3.0 * xi1) / xi1).floor().max(1.0) as usize;
    let ks: Vec<f64> = (1..=kmax).map(|k| k as f64).collect();
    let inner = |b1: f64, b2: f64| -> f64 {
        let g = |b3: f64| b.eval((1.0 - b1 - b2 - b3) / b1).unwrap_or(f64::NAN) / b3;
        let br = breaks(b2, xi, ks.iter().map(|k| 1.0 - (k + 1.0) * b1 - b2));
        quad::gauss_breaks(&g, &br, panels, rule) / (b1 * b1 * b2)
    };
    let middle = |b1: f64| -> f64 {
        let g = |b2: f64| inner(b1, b2);
        let br = breaks(
            b1,
            xi,
            ks.iter().flat_map(|k| [(1.0 - (k + 1.0) * b1) / 2.0, 1.0 - (k + 1.0) * b1 - xi]),
        );
        quad::gauss_breaks(&g, &br, panels, rule)
    };
    let outer = breaks(
        xi1,
        xi,
        ks.iter().flat_map(|k| [1.0 / (k + 3.0), (1.0 - 2.0 * xi) / (k + 1.0), (1.0 - xi) / (k + 2.0)]),
    );
    // Parallel over outer pieces and panels; each piece is summed in a fixed order.
    let h_rule: Vec<(f64, f64)> = rule.0.iter().copied().zip(rule.1.iter().copied()).collect();
    let cells: Vec<(f64, f64)> = outer
        .windows(2)
        .filter(|w| w[1] > w[0])
        .flat_map(|w| {
            let h = (w[1] - w[0]) / panels as f64;
            (0..panels).map(move |j| (w[0] + j as f64 * h, h))
        })
        .collect();
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|&(lo, h)| {
            let c = lo + 0.5 * h;
            0.5 * h * h_rule.iter().map(|&(x, w)| w * middle(c + 0.5 * h * x)).sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// `c3` by nested Gauss–Legendre split at every kink of the Buchstab argument. The error
/// estimate is the change from `panels` to `2·panels`.
pub fn c3_bound(xi1: f64, xi: f64, delta0: f64, b: &BuchstabInterpolant) -> Result<QuadratureResult> {
    c3_bound_with_panels(xi1, xi, delta0, b, DEFAULT_C3_PANELS)
}

pub fn c3_bound_with_panels(
    xi1: f64,
    xi: f64,
    delta0: f64,
    b: &BuchstabInterpolant,
    panels: usize,
) -> Result<QuadratureResult> {
    c3_check(xi1, xi, delta0, b)?;
    if panels == 0 {
        return domain("c3 needs at least one panel");
    }
    let pre = 2.0 / (1.0 - 2.0 * delta0);
    if xi == xi1 {
        return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, grid: panels as u64 });
    }
    let coarse = pre * c3_nested(xi1, xi, b, panels);
    let fine = pre * c3_nested(xi1, xi, b, 2 * panels);
    if !fine.is_finite() {
        return Err(FiError::Assertion("c3 quadrature produced a non-finite value".into()));
    }
    Ok(QuadratureResult { value: fine, error_estimate: (fine - coarse).abs(), grid: 2 * panels as u64 })
}

fn c3_midpoint_raw(xi1: f64, xi: f64, b: &BuchstabInterpolant, n: usize) -> f64 {
    let h = (xi - xi1) / n as f64;
    let mid = |i: usize| xi1 + (i as f64 + 0.5) * h;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b1 = mid(i);
            let mut row = 0.0;
            for j in i..n {
                let b2 = mid(j);
                for k in j..n {
                    let b3 = mid(k);
                    // Diagonal cells hold half (or a sixth) of the ordered region.
                    let w = match (i == j, j == k) {
                        (true, true) => 1.0 / 6.0,
                        (true, false) | (false, true) => 0.5,
                        _ => 1.0,
                    };
                    let u = (1.0 - b1 - b2 - b3) / b1;
                    row += w * b.eval(u).unwrap_or(f64::NAN) / (b1 * b1 * b2 * b3);
                }
            }
            row
        })
        .collect();
    rows.iter().sum::<f64>() * h * h * h
}

/// `c3` on an `n³` midpoint grid masked to the ordered simplex, with one Richardson step
/// against the `n/2` grid. Slow and low order; kept as an independent check on [`c3_bound`].
pub fn c3_bound_midpoint(xi1: f64, xi: f64, delta0: f64, b: &BuchstabInterpolant, n: usize) -> Result<QuadratureResult> {
    c3_check(xi1, xi, delta0, b)?;
    if n < 2 || n % 2 == 1 {
        return domain("midpoint grid must be even and at least 2");
    }
    let pre = 2.0 / (1.0 - 2.0 * delta0);
    let half = c3_midpoint_raw(xi1, xi, b, n / 2);
    let full = c3_midpoint_raw(xi1, xi, b, n);
    let rich = (4.0 * full - half) / 3.0;
    Ok(QuadratureResult { value: pre * rich, error_estimate: pre * (rich - full).abs(), grid: n as u64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaPlus {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha_plus: f64,
}

/// The three components and their sum, with no band check.
pub fn alpha_components(xi1: f64, xi: f64, delta0: f64, b: &BuchstabInterpolant, panels: usize) -> Result<AlphaPlus> {
    let c1 = c1_bound(xi1, delta0)?.value;
    let c2 = c2_bound(xi1, xi, delta0)?.value;
    let c3 = c3_bound_with_panels(xi1, xi, delta0, b, panels)?.value;
    Ok(AlphaPlus { c1, c2, c3, alpha_plus: c1 + c2 + c3 })
}

/// `α⁺` at the parameters of `params`, failing unless `2.85 < α⁺ ≤ 2.9739` and `α⁺ < 3α⁻`.
pub fn alpha_plus(params: &MajorantParams) -> Result<AlphaPlus> {
    let a = alpha_components(
        params.xi1,
        params.xi,
        params.delta0,
        crate::buchstab::default_buchstab(),
        DEFAULT_C3_PANELS,
    )?;
    if !(a.alpha_plus > ALPHA_PLUS_FLOOR && a.alpha_plus <= ALPHA_PLUS_BOUND && a.alpha_plus < 3.0 * ALPHA_MINUS) {
        return Err(FiError::Assertion(format!(
            "α⁺ = {} outside ({ALPHA_PLUS_FLOOR}, {ALPHA_PLUS_BOUND}]",
            a.alpha_plus
        )));
    }
    Ok(a)
}
