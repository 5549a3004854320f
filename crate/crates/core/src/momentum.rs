//! The alpha-power momentum family and its bookkeeping quantities.
//!
//! The momentum coefficient at iteration `k` is
//!
//! ```text
//! (k-1)^alpha / (k^alpha + r k^(alpha-1))
//! ```
//!
//! which reduces to the classical `(k-1)/(k+r)` at `alpha = 1`. The helpers
//! `a1`, `a2`, `b` and `tau` are the coefficient combinations that appear in
//! the Lyapunov energies.
//!
//! Powers use an exact `powi` path for integer exponents and
//! `exp(e * ln k)` otherwise, with `0^0 = 1`.

use crate::error::{Error, Result};

/// `base^exp` for `base >= 0`.
pub(crate) fn power(base: f64, exp: f64) -> f64 {
    if exp == exp.trunc() && exp.abs() <= 1024.0 {
        return base.powi(exp as i32);
    }
    if base == 0.0 {
        return if exp > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (exp * base.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumParams {
    pub alpha: f64,
    pub r: f64,
}

impl MomentumParams {
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!("r must be finite, got {r}")));
        }
        Ok(Self { alpha, r })
    }

    /// The `r = 2 alpha + 1` rule used in the reference experiments.
    pub fn with_default_r(alpha: f64) -> Result<Self> {
        Self::new(alpha, 2.0 * alpha + 1.0)
    }

    /// Rate certificates are only claimed for `r > 2 alpha`.
    pub fn is_certifiable(&self) -> bool {
        self.r > 2.0 * self.alpha
    }

    pub fn coeff(&self, k: usize) -> Result<f64> {
        coeff(self, k)
    }

    pub fn monotone_z_coeff(&self, k: usize) -> Result<f64> {
        monotone_z_coeff(self, k)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidIndex { k, min: 1 })
    } else {
        Ok(())
    }
}

fn positive_denominator(k: usize, alpha: f64, r: f64) -> Result<f64> {
    let den = b(k, alpha, r)?;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateDenominator { k, value: den });
    }
    Ok(den)
}

/// Momentum coefficient `(k-1)^alpha / B(k, alpha, r)`.
pub fn coeff(p: &MomentumParams, k: usize) -> Result<f64> {
    check_k(k)?;
    let den = positive_denominator(k, p.alpha, p.r)?;
    Ok(power((k - 1) as f64, p.alpha) / den)
}

/// Coefficient on `z_{k-1} - x_k` in the monotone extrapolation:
/// `((k-1)^alpha + r (k-1)^(alpha-1)) / B(k, alpha, r)`.
pub fn monotone_z_coeff(p: &MomentumParams, k: usize) -> Result<f64> {
    check_k(k)?;
    if k == 1 && p.alpha < 1.0 {
        return Err(Error::SingularCoefficient { k, alpha: p.alpha });
    }
    let den = positive_denominator(k, p.alpha, p.r)?;
    let km1 = (k - 1) as f64;
    Ok((power(km1, p.alpha) + p.r * power(km1, p.alpha - 1.0)) / den)
}

fn lower_power(k: usize, alpha: f64) -> Result<f64> {
    check_k(k)?;
    if k == 1 && alpha < 1.0 {
        return Err(Error::SingularCoefficient { k, alpha });
    }
    Ok(power((k - 1) as f64, alpha - 1.0))
}

/// `A1(k, alpha) = k^(alpha-1) - (k-1)^(alpha-1)`.
pub fn a1(k: usize, alpha: f64) -> Result<f64> {
    let lower = lower_power(k, alpha)?;
    Ok(power(k as f64, alpha - 1.0) - lower)
}

/// `A2(k, alpha) = k^(alpha-1) + (k-1)^(alpha-1)`.
pub fn a2(k: usize, alpha: f64) -> Result<f64> {
    let lower = lower_power(k, alpha)?;
    Ok(power(k as f64, alpha - 1.0) + lower)
}

/// `B(k, alpha, r) = k^alpha + r k^(alpha-1)`.
pub fn b(k: usize, alpha: f64, r: f64) -> Result<f64> {
    check_k(k)?;
    let kf = k as f64;
    Ok(power(kf, alpha) + r * power(kf, alpha - 1.0))
}

/// Potential-energy weight `tau(k) = k^alpha B(k, alpha, r)`.
pub fn tau(k: usize, alpha: f64, r: f64) -> Result<f64> {
    Ok(power(k as f64, alpha) * b(k, alpha, r)?)
}
