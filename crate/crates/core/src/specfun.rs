//! Special functions and per-dimension constants.
//!
//! Gamma values always go through the log-gamma kernel so that constants stay
//! finite across the dimensions used by the moment tables (d up to ~10 and
//! beyond).

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma(x).exp()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Complete beta function B(a, b).
pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// Volume and surface constants of the unit ball in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimConstants {
    pub d: usize,
    /// Volume of the unit ball.
    pub kappa: f64,
    /// Surface area of the unit sphere, `d * kappa`.
    pub chi: f64,
    /// `Γ(d/2+1) / (Γ(1/2) Γ((d+1)/2))`, the normalizer of `sin^d` on `[0, π]`.
    pub alpha: f64,
    /// Pair-angle constant of the second volume moment; `None` for `d = 1`.
    pub c_d2: Option<f64>,
}

/// Unit-ball volume `π^{d/2} / Γ(d/2 + 1)` for real `d >= 0`.
pub(crate) fn ball_volume(d: f64) -> f64 {
    (0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0)).exp()
}

pub fn dim_constants(d: usize) -> Result<DimConstants> {
    if d < 1 {
        return invalid(format!("dimension must be >= 1, got {d}"));
    }
    let df = d as f64;
    let kappa = ball_volume(df);
    let chi = df * kappa;
    let alpha = (ln_gamma(0.5 * df + 1.0) - ln_gamma(0.5) - ln_gamma(0.5 * (df + 1.0))).exp();
    let c_d2 = (d >= 2).then(|| {
        // d! / (2 (d-2)!) = d (d-1) / 2
        let pairs = 0.5 * df * (df - 1.0);
        pairs * kappa * ball_volume(df - 1.0) / (ball_volume(2.0) * ball_volume(1.0))
    });
    Ok(DimConstants {
        d,
        kappa,
        chi,
        alpha,
        c_d2,
    })
}

fn check_beta_args(z: f64, a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return invalid(format!("incomplete beta argument z={z} outside [0,1]"));
    }
    if !(a > 0.0) || !(b > 0.0) {
        return invalid(format!("incomplete beta parameters must be positive (a={a}, b={b})"));
    }
    Ok(())
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence {
        what: "incomplete beta continued fraction",
        achieved: f64::NAN,
    })
}

/// Regularized incomplete beta `I_z(a, b)`.
pub fn reg_inc_beta(z: f64, a: f64, b: f64) -> Result<f64> {
    check_beta_args(z, a, b)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * z.ln() + b * (-z).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp();
    if z < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, z)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - z)? / b)
    }
}

/// Unnormalized incomplete beta `B_z(a, b) = I_z(a, b) B(a, b)`.
pub fn inc_beta(z: f64, a: f64, b: f64) -> Result<f64> {
    Ok(reg_inc_beta(z, a, b)? * beta(a, b))
}

/// Exponential integral `E₁(z) = ∫_z^∞ e^{-t}/t dt` for `z > 0`.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return invalid(format!("E1 requires a finite positive argument, got {z}"));
    }
    if z <= 1.0 {
        // -γ - ln z - Σ (-z)^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -z / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        return Ok(-EULER_GAMMA - z.ln() - sum);
    }
    let mut b = z + 1.0;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h * (-z).exp());
        }
    }
    Err(Error::NonConvergence {
        what: "E1 continued fraction",
        achieved: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_dimension_constants() {
        let c1 = dim_constants(1).unwrap();
        assert!((c1.kappa - 2.0).abs() < 1e-14 && (c1.chi - 2.0).abs() < 1e-14);
        assert!(c1.c_d2.is_none());
        let c2 = dim_constants(2).unwrap();
        assert!((c2.kappa - PI).abs() < 1e-14 && (c2.chi - 2.0 * PI).abs() < 1e-13);
        let c3 = dim_constants(3).unwrap();
        assert!((c3.kappa - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((c3.chi - 4.0 * PI).abs() < 1e-13);
        assert!(dim_constants(0).is_err());
    }

    #[test]
    fn alpha_normalizes_sin_power() {
        for d in 1..=12 {
            let c = dim_constants(d).unwrap();
            assert!(c.alpha > 0.0);
            let total = integrate(|t: f64| t.sin().powi(d as i32), 0.0, PI, 1e-13).unwrap();
            assert!((c.alpha * total.value - 1.0).abs() < 1e-11, "d={d}");
        }
    }

    #[test]
    fn chi_is_d_kappa() {
        for d in 1..=12 {
            let c = dim_constants(d).unwrap();
            assert!((c.chi - d as f64 * c.kappa).abs() <= 4.0 * f64::EPSILON * c.chi);
        }
    }

    #[test]
    fn pair_constant_matches_sphere_areas() {
        // 4π C_{d,2} is the measure of ordered direction pairs per unit sin^{d-2} u du.
        for d in 2..=12 {
            let c = dim_constants(d).unwrap();
            let lower = dim_constants(d - 1).unwrap();
            let lhs = 4.0 * PI * c.c_d2.unwrap();
            assert!((lhs - c.chi * lower.chi).abs() < 1e-11 * lhs, "d={d}");
        }
    }

    #[test]
    fn inc_beta_edges() {
        assert_eq!(reg_inc_beta(0.0, 2.5, 0.5).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 2.5, 0.5).unwrap(), 1.0);
        for &z in &[0.05, 0.3, 0.5, 0.77, 0.99] {
            assert!((reg_inc_beta(z, 1.0, 1.0).unwrap() - z).abs() < 1e-14);
        }
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn inc_beta_symmetry_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let z: f64 = rng.random();
            let a = rng.random_range(0.05..12.0);
            let b = rng.random_range(0.05..12.0);
            let lhs = reg_inc_beta(z, a, b).unwrap();
            let rhs = 1.0 - reg_inc_beta(1.0 - z, b, a).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "z={z} a={a} b={b}");
            assert!(lhs.is_finite());
        }
    }

    #[test]
    fn inc_beta_matches_statrs_and_quadrature() {
        let cases = [(0.2, 0.5, 0.5), (0.7, 1.5, 0.5), (0.4, 4.5, 2.0), (0.93, 0.5, 5.5)];
        for &(z, a, b) in &cases {
            let ours = reg_inc_beta(z, a, b).unwrap();
            let theirs = statrs::function::beta::beta_reg(a, b, z);
            assert!((ours - theirs).abs() < 1e-12, "{z} {a} {b}");
        }
        // integrand smooth for a, b >= 1
        let (z, a, b) = (0.6, 2.5, 3.0);
        let q = integrate(|t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0), 0.0, z, 1e-14).unwrap();
        assert!((inc_beta(z, a, b).unwrap() - q.value).abs() < 1e-12);
    }

    #[test]
    fn inc_beta_monotone_in_z() {
        let mut prev = 0.0;
        for i in 0..=400 {
            let z = i as f64 / 400.0;
            let v = reg_inc_beta(z, 0.5, 1.5).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    fn e1_by_quadrature(z: f64) -> f64 {
        // substitute t = z + s to keep the integrand bounded
        integrate(|s: f64| (-(z + s)).exp() / (z + s), 0.0, 60.0, 1e-14)
            .unwrap()
            .value
    }

    #[test]
    fn e1_reference_value() {
        let oracle = e1_by_quadrature(1.0);
        assert!((oracle - 0.219_383_934_395_520_3).abs() < 1e-10);
        assert!((exp_integral_e1(1.0).unwrap() - oracle).abs() < 1e-12);
        for &z in &[0.01, 0.3, 0.999, 1.001, 2.5, 7.0, 20.0] {
            let v = exp_integral_e1(z).unwrap();
            assert!((v - e1_by_quadrature(z)).abs() < 1e-10 * v.max(1e-6), "z={z}");
        }
    }

    #[test]
    fn e1_envelope_and_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..=500 {
            let z = i as f64 * 0.04;
            let v = exp_integral_e1(z).unwrap();
            let lower = 0.5 * (-z).exp() * (1.0 + 2.0 / z).ln();
            let upper = (-z).exp() * (1.0 + 1.0 / z).ln();
            assert!(lower <= v * (1.0 + 1e-14) && v <= upper * (1.0 + 1e-14), "z={z}");
            assert!(v < prev);
            prev = v;
        }
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
    }

    #[test]
    fn e1_antiderivative_identity() {
        let (a, x) = (2.0_f64, 0.7_f64);
        let lhs = integrate(|t: f64| exp_integral_e1(a * t).unwrap(), x, 40.0, 1e-13)
            .unwrap()
            .value;
        let rhs = (-a * x).exp() / a - x * exp_integral_e1(a * x).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }
}
