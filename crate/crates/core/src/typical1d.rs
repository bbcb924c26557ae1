//! Exact law of the typical-cell distance on the line.
//!
//! The typical cell of a nucleus at the origin is `[-R₁, R₂]` with independent
//! half-gaps `R₁, R₂ ~ Exp(2λ)`; the functions here work with the ordered pair.

use crate::error::{invalid, Result};
use crate::quad::{integrate, integrate_2d};
use crate::specfun::exp_integral_e1;

/// Ordered half-gaps `r1 ≤ r2` of the typical cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedGaps {
    pub r1: f64,
    pub r2: f64,
}

impl OrderedGaps {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 >= 0.0) || !(r2 >= r1) {
            return invalid(format!("need 0 <= r1 <= r2, got ({r1}, {r2})"));
        }
        Ok(Self { r1, r2 })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return invalid(format!("intensity must be finite and > 0, got {lambda}"));
    }
    Ok(())
}

/// Joint density of the ordered half-gaps; zero off the wedge `r1 ≤ r2`.
pub fn joint_pdf_ordered(r1: f64, r2: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r1 >= 0.0) || !(r2 >= 0.0) {
        return invalid(format!("half-gaps must be >= 0, got ({r1}, {r2})"));
    }
    if r1 > r2 {
        return Ok(0.0);
    }
    Ok(8.0 * lambda * lambda * (-2.0 * lambda * (r1 + r2)).exp())
}

/// CDF of the distance to a uniform point of `[-r1, r2]`.
pub fn cond_cdf_1d(r: f64, g: &OrderedGaps) -> Result<f64> {
    if !(r >= 0.0) {
        return invalid(format!("distance must be >= 0, got {r}"));
    }
    let OrderedGaps { r1, r2 } = *g;
    if r1 + r2 == 0.0 {
        return Ok(if r > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(if r <= r1 {
        2.0 * r / (r1 + r2)
    } else if r <= r2 {
        (r + r1) / (r1 + r2)
    } else {
        1.0
    })
}

/// Closed-form CDF `1 − e^{−2λr} + 2λr e^{−2λr} − 4λ²r² E₁(2λr)`.
pub fn typical1d_cdf(r: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r >= 0.0) {
        return invalid(format!("distance must be >= 0, got {r}"));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let x = 2.0 * lambda * r;
    let e = (-x).exp();
    // 1 − e^{−x} loses digits for small x
    let v = -(-x).exp_m1() + x * e - x * x * exp_integral_e1(x)?;
    Ok(v.clamp(0.0, 1.0))
}

pub fn typical1d_pdf(r: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r > 0.0) {
        return if r == 0.0 {
            Ok(4.0 * lambda)
        } else {
            invalid("distance must be >= 0")
        };
    }
    let x = 2.0 * lambda * r;
    // d/dx of the closed form: 2e^{−x} − 2x E₁(x)
    Ok(2.0 * lambda * (2.0 * (-x).exp() - 2.0 * x * exp_integral_e1(x)?))
}

/// `E[R_o^n]` by quadrature of `n r^{n-1} (1 − F(r))`.
pub fn typical1d_moment(n: u32, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if n < 1 {
        return invalid("moment order must be >= 1");
    }
    let top = 40.0 / lambda;
    let q = integrate(
        |r| n as f64 * r.powi(n as i32 - 1) * (1.0 - typical1d_cdf(r, lambda).unwrap_or(1.0)),
        0.0,
        top,
        1e-13 / lambda.powi(n as i32).min(1.0),
    )?;
    Ok(q.value)
}

/// The three deconditioning integrals over the ordered wedge, evaluated by
/// direct two-dimensional quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconditioningIntegrals {
    /// Both half-gaps below `r`.
    pub int1: f64,
    /// `r1 ≤ r < r2`.
    pub int2: f64,
    /// `r < r1 ≤ r2`.
    pub int3: f64,
    pub total: f64,
    pub error: f64,
}

/// `1 + e^{−4λr} − 2e^{−2λr}`.
pub fn int1_closed(r: f64, lambda: f64) -> f64 {
    let e = (-2.0 * lambda * r).exp_m1();
    e * e
}

pub fn deconditioning_integrals(r: f64, lambda: f64) -> Result<DeconditioningIntegrals> {
    check_lambda(lambda)?;
    if !(r > 0.0) {
        return invalid(format!("distance must be > 0, got {r}"));
    }
    let l2 = 8.0 * lambda * lambda;
    let w = move |r1: f64, r2: f64| l2 * (-2.0 * lambda * (r1 + r2)).exp();
    // weight below 1e-16 of its peak
    let top = r + 16.0 * std::f64::consts::LN_10 / (2.0 * lambda);
    let tol = 1e-13;
    // outer variable r2, inner r1
    let i1 = integrate_2d(|r2, r1| w(r1, r2), 0.0, r, |_| 0.0, |r2| r2, tol)?;
    let i2 = integrate_2d(|r2, r1| (r + r1) / (r1 + r2) * w(r1, r2), r, top, |_| 0.0, |_| r, tol)?;
    let i3 = integrate_2d(|r2, r1| 2.0 * r / (r1 + r2) * w(r1, r2), r, top, |_| r, |r2| r2, tol)?;
    Ok(DeconditioningIntegrals {
        int1: i1.value,
        int2: i2.value,
        int3: i3.value,
        total: i1.value + i2.value + i3.value,
        error: i1.error + i2.error + i3.error,
    })
}
