//! Distance from the nucleus to a uniform point of the cell containing the
//! origin (the 0-cell). Its law is the contact-distance law of the PPP.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::specfun::{dim_constants, gamma};

/// Dimension and intensity of the underlying Poisson point process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        if d < 1 {
            return invalid("dimension must be >= 1");
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("intensity must be finite and > 0, got {lambda}"));
        }
        Ok(Self { d, lambda })
    }

    pub fn kappa(&self) -> f64 {
        dim_constants(self.d).expect("validated dimension").kappa
    }

    /// `λ κ_d`, the mean number of points per unit `r^d`.
    pub fn rate(&self) -> f64 {
        self.lambda * self.kappa()
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return invalid(format!("distance must be >= 0, got {r}"));
    }
    Ok(())
}

pub fn contact_cdf(r: f64, m: &ModelParams) -> Result<f64> {
    check_r(r)?;
    Ok(-(-m.rate() * r.powi(m.d as i32)).exp_m1())
}

pub fn contact_pdf(r: f64, m: &ModelParams) -> Result<f64> {
    check_r(r)?;
    let d = m.d as i32;
    let rate = m.rate();
    Ok(rate * m.d as f64 * r.powi(d - 1) * (-rate * r.powi(d)).exp())
}

pub fn contact_quantile(p: f64, m: &ModelParams) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return invalid(format!("quantile level must be in [0, 1), got {p}"));
    }
    Ok((-(-p).ln_1p() / m.rate()).powf(1.0 / m.d as f64))
}

/// `E[R̃_o^n] = Γ(1 + n/d) / (λ κ_d)^{n/d}`.
pub fn zerocell_moment(n: u32, m: &ModelParams) -> Result<f64> {
    if n < 1 {
        return invalid("moment order must be >= 1");
    }
    let e = n as f64 / m.d as f64;
    Ok(gamma(1.0 + e) / m.rate().powf(e))
}
