//! Gaussian integers `ℤ[i]` and the star product `m*l = Re(m·l̄)`.

use crate::error::{domain, FiError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Element `re + im·i` of `ℤ[i]`. The derived ordering is lexicographic in `(re, im)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

impl GaussianInt {
    pub const ZERO: GaussianInt = GaussianInt { re: 0, im: 0 };
    pub const ONE: GaussianInt = GaussianInt { re: 1, im: 0 };
    pub const I: GaussianInt = GaussianInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussianInt { re, im }
    }

    /// `|m|² = re² + im²`. Cannot overflow for `i64` components.
    pub fn norm(self) -> u128 {
        let a = self.re.unsigned_abs() as u128;
        let b = self.im.unsigned_abs() as u128;
        a * a + b * b
    }

    /// Euclidean length `|m|`.
    pub fn abs(self) -> f64 {
        (self.norm() as f64).sqrt()
    }

    pub fn conj(self) -> Self {
        GaussianInt::new(self.re, -self.im)
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn checked_mul(self, o: GaussianInt) -> Result<GaussianInt> {
        let re = (self.re as i128) * (o.re as i128) - (self.im as i128) * (o.im as i128);
        let im = (self.re as i128) * (o.im as i128) + (self.im as i128) * (o.re as i128);
        match (i64::try_from(re), i64::try_from(im)) {
            (Ok(re), Ok(im)) => Ok(GaussianInt::new(re, im)),
            _ => Err(FiError::Range(format!("product {self} * {o} overflows i64"))),
        }
    }

    pub fn checked_add(self, o: GaussianInt) -> Result<GaussianInt> {
        match (self.re.checked_add(o.re), self.im.checked_add(o.im)) {
            (Some(re), Some(im)) => Ok(GaussianInt::new(re, im)),
            _ => Err(FiError::Range(format!("sum {self} + {o} overflows i64"))),
        }
    }

    pub fn scale(self, k: i64) -> Result<GaussianInt> {
        match (self.re.checked_mul(k), self.im.checked_mul(k)) {
            (Some(re), Some(im)) => Ok(GaussianInt::new(re, im)),
            _ => Err(FiError::Range(format!("{k}·{self} overflows i64"))),
        }
    }

    /// Imaginary part of `self · conj(o)`.
    pub fn im_mul_conj(self, o: GaussianInt) -> i128 {
        (self.im as i128) * (o.re as i128) - (self.re as i128) * (o.im as i128)
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}-{}i", self.re, -(self.im as i128))
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Star product in full width; exact for all `i64` inputs.
pub fn star_wide(m: GaussianInt, l: GaussianInt) -> i128 {
    (m.re as i128) * (l.re as i128) + (m.im as i128) * (l.im as i128)
}

/// `m*l = re(m)·re(l) + im(m)·im(l)`, with a range error when the result leaves `i64`.
pub fn star(m: GaussianInt, l: GaussianInt) -> Result<i64> {
    i64::try_from(star_wide(m, l))
        .map_err(|_| FiError::Range(format!("star({m}, {l}) overflows i64")))
}

/// `gcd(|re|, |im|) = 1`. Zero has no meaningful primitivity.
pub fn is_primitive(m: GaussianInt) -> Result<bool> {
    if m.is_zero() {
        return domain("is_primitive(0) is undefined");
    }
    Ok(num_integer::gcd(m.re.unsigned_abs(), m.im.unsigned_abs()) == 1)
}

/// Calls `f` on every `m` with `lo < |m|² ≤ hi`, in lexicographic `(re, im)` order.
pub fn for_each_annulus(lo: u64, hi: u64, mut f: impl FnMut(GaussianInt)) -> Result<()> {
    if lo >= hi {
        return domain(format!("annulus needs M < M_hi, got ({lo}, {hi})"));
    }
    let r = crate::arith::isqrt(hi);
    if r > i64::MAX as u64 / 2 {
        return Err(FiError::Range("annulus radius too large".into()));
    }
    let r = r as i64;
    for re in -r..=r {
        let re2 = (re as i128 * re as i128) as u64;
        let im_max = crate::arith::isqrt(hi - re2) as i64;
        let im_min = if lo < re2 {
            0
        } else {
            crate::arith::isqrt(lo - re2) as i64 + 1
        };
        if im_min > im_max {
            continue;
        }
        for im in (im_min..=im_max).rev() {
            f(GaussianInt::new(re, -im));
        }
        for im in im_min.max(1)..=im_max {
            if im_min == 0 && im == 0 {
                continue;
            }
            f(GaussianInt::new(re, im));
        }
    }
    Ok(())
}

/// Every nonzero `m` with `M < |m|² ≤ M_hi`, each once, lexicographic in `(re, im)`.
pub fn enumerate_annulus(lo: u64, hi: u64) -> Result<Vec<GaussianInt>> {
    let mut out = Vec::new();
    for_each_annulus(lo, hi, |m| out.push(m))?;
    Ok(out)
}
