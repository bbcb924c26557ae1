//! Second-order volume moments of the typical cell and the correction factor
//! `ρ_d` of the approximate typical-cell distance law.
//!
//! All triple integrals are taken in volume coordinates `s = κ_d v^d`. The
//! union volume is homogeneous of degree one in `(s₁, s₂)`, so with
//! `s₁ = t s₂` the radial integral is elementary and only the `(t, u)`
//! integral over `[0, 1] × [0, π]` is done numerically.

use std::cell::Cell;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::union_volume;
use crate::quad::{integrate, integrate_2d};
use crate::specfun::{dim_constants, gamma, DimConstants};
use crate::zerocell::ModelParams;

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub d: usize,
    pub lambda: f64,
    /// `E[υ_d(V_o)²]`.
    pub ev2: f64,
    pub var_v: f64,
    pub rho: f64,
    /// Integrand evaluations spent.
    pub evaluations: usize,
    /// Absolute error estimate of `ev2`.
    pub error: f64,
}

/// Union volume of the two balls through the origin whose own volumes are
/// `t` and `1`, centers at angle `u`.
fn unit_union(t: f64, u: f64, c: &DimConstants) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let inv_d = 1.0 / c.d as f64;
    let v1 = (t / c.kappa).powf(inv_d);
    let v2 = (1.0 / c.kappa).powf(inv_d);
    union_volume(v1, v2, u, c.d).expect("valid two-ball input")
}

/// `χ_d χ_{d-1} / (d κ_d)²`: the pair-measure constant in volume coordinates.
fn pair_weight(c: &DimConstants) -> f64 {
    let chi_lower = if c.d == 1 {
        2.0
    } else {
        dim_constants(c.d - 1).unwrap().chi
    };
    c.chi * chi_lower / (c.d as f64 * c.kappa).powi(2)
}

/// `1 − (1 + a) e^{−a}`.
fn radial_inner(a: f64) -> f64 {
    if a < 0.05 {
        // Σ_{k≥2} (−1)^k (k−1) a^k / k!
        let mut term = a * a / 2.0;
        let mut sum = 0.0;
        for k in 2..14 {
            sum += (k - 1) as f64 * term;
            term *= -a / (k + 1) as f64;
        }
        sum
    } else {
        -(-a).exp_m1() - a * (-a).exp()
    }
}

/// `(1 + b) e^{−b}`.
fn radial_outer(b: f64) -> f64 {
    if b.is_infinite() {
        0.0
    } else {
        (1.0 + b) * (-b).exp()
    }
}

/// Integrates `kernel(t, u, Ũ(t, u)) · 2 sin^{d−2}u / Ũ²` with the pair
/// weight applied. In `d = 1` the angle takes the values 0 and π with
/// weight 2 each, which the pair weight already accounts for.
fn pair_integral<K>(c: &DimConstants, tol: f64, evals: &Cell<usize>, kernel: K) -> Result<(f64, f64)>
where
    K: Fn(f64, f64) -> f64,
{
    let w = pair_weight(c);
    let f = |t: f64, u: f64| {
        evals.set(evals.get() + 1);
        let big_u = unit_union(t, u, c);
        2.0 * kernel(t, big_u) / (big_u * big_u)
    };
    let rel_tol = tol / w;
    if c.d == 1 {
        let mut value = 0.0;
        let mut error = 0.0;
        for u in [0.0, PI] {
            let q = integrate(|t| f(t, u), 0.0, 1.0, 0.5 * rel_tol)?;
            value += 0.5 * q.value;
            error += 0.5 * q.error;
        }
        return Ok((w * value, w * error));
    }
    let sin_pow = c.d as i32 - 2;
    let q = integrate_2d(
        |u, t| u.sin().powi(sin_pow) * f(t, u),
        0.0,
        PI,
        |_| 0.0,
        |_| 1.0,
        rel_tol,
    )?;
    Ok((w * q.value, w * q.error))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be > 0, got {tol}"));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("radius must be finite and >= 0, got {r}"));
    }
    Ok(())
}

fn second_moment_report(m: &ModelParams, tol: f64) -> Result<MomentReport> {
    check_tol(tol)?;
    let c = dim_constants(m.d)?;
    let evals = Cell::new(0);
    let l2 = m.lambda * m.lambda;
    // value at λ = 1; E[V²] scales as λ⁻²
    let (unit, err) = pair_integral(&c, tol * l2, &evals, |_, _| 1.0)?;
    let ev2 = unit / l2;
    let var_v = ev2 - 1.0 / l2;
    Ok(MomentReport {
        d: m.d,
        lambda: m.lambda,
        ev2,
        var_v,
        rho: unit,
        evaluations: evals.get(),
        error: err / l2,
    })
}

/// `E[υ_d(V_o)²]`, absolute tolerance `tol`.
pub fn second_moment_cell_volume(m: &ModelParams, tol: f64) -> Result<f64> {
    Ok(second_moment_report(m, tol)?.ev2)
}

/// Full report including `Var[υ_d(V_o)]` and `ρ_d`.
pub fn moment_report(m: &ModelParams, tol: f64) -> Result<MomentReport> {
    second_moment_report(m, tol)
}

/// First and second moments of `υ_d(B_r(o) ∩ V_o)`.
pub fn intersection_moments(r: f64, m: &ModelParams, tol: f64) -> Result<(f64, f64)> {
    check_r(r)?;
    check_tol(tol)?;
    let c = dim_constants(m.d)?;
    let x = m.lambda * c.kappa * r.powi(m.d as i32);
    let m1 = -(-x).exp_m1() / m.lambda;
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let l2 = m.lambda * m.lambda;
    let evals = Cell::new(0);
    // the larger volume s₂ runs over [0, κ r^d]
    let (v, _) = pair_integral(&c, tol * l2, &evals, |_, big_u| radial_inner(x * big_u))?;
    Ok((m1, v / l2))
}

/// `Cov[υ_d(B_r(o) ∩ V_o), υ_d(V_o)]` as the sum of the variance term, the
/// exponential term and the `[0, r]²` and `[r, ∞)²` integrals, the two
/// integrals sharing one quadrature.
pub fn covariance_ball_cell(r: f64, m: &ModelParams, tol: f64) -> Result<f64> {
    check_r(r)?;
    check_tol(tol)?;
    let c = dim_constants(m.d)?;
    let l2 = m.lambda * m.lambda;
    let x = m.lambda * c.kappa * r.powi(m.d as i32);
    let evals = Cell::new(0);
    // ½Var = ½(full − λ⁻²); full, inner and outer integrands combined
    let (v, _) = pair_integral(&c, tol * l2, &evals, |t, big_u| {
        let a = x * big_u;
        let outer = if t > 0.0 { radial_outer(a / t) } else { 0.0 };
        0.5 * (1.0 + radial_inner(a) - outer)
    })?;
    let e = (-x).exp();
    Ok((v - 0.5 - 0.5 * (1.0 - 2.0 * e)) / l2)
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallRadiusReport {
    pub radii: Vec<f64>,
    /// `Cov(r) / r^d` at each radius.
    pub ratios: Vec<f64>,
    pub strictly_decreasing: bool,
    pub positive: bool,
}

pub fn small_radius_check(m: &ModelParams, radii: &[f64], tol: f64) -> Result<SmallRadiusReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|&r| !(r > 0.0)) {
        return invalid("radii must be positive and strictly decreasing");
    }
    let ratios = radii
        .iter()
        .map(|&r| Ok(covariance_ball_cell(r, m, tol)? / r.powi(m.d as i32)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SmallRadiusReport {
        radii: radii.to_vec(),
        strictly_decreasing: ratios.windows(2).all(|w| w[1] < w[0]),
        positive: ratios.iter().all(|&v| v > 0.0),
        ratios,
    })
}

/// `ρ_d = 1 + λ² Var[υ_d(V_o)]`, checked at a second intensity.
pub fn rho(m: &ModelParams, tol: f64) -> Result<f64> {
    let a = second_moment_report(m, tol)?;
    let other = ModelParams::new(m.d, 2.0 * m.lambda)?;
    let b = second_moment_report(&other, tol)?;
    let rho_a = 1.0 + a.var_v * m.lambda * m.lambda;
    let rho_b = 1.0 + b.var_v * other.lambda * other.lambda;
    let scale = (m.lambda * m.lambda).max(1.0) * 4.0;
    if (rho_a - rho_b).abs() > 10.0 * tol * scale + 1e-12 {
        return Err(Error::NonConvergence {
            what: "intensity invariance of rho",
            achieved: (rho_a - rho_b).abs(),
        });
    }
    Ok(rho_a)
}

fn check_rho(rho_val: f64) -> Result<()> {
    if !(rho_val >= 1.0) || !rho_val.is_finite() {
        return invalid(format!("correction factor must be finite and >= 1, got {rho_val}"));
    }
    Ok(())
}

/// `1 − exp(−ρ λ κ_d r^d)`.
pub fn approx_typical_cdf(r: f64, m: &ModelParams, rho_val: f64) -> Result<f64> {
    check_r(r)?;
    check_rho(rho_val)?;
    Ok(-(-rho_val * m.rate() * r.powi(m.d as i32)).exp_m1())
}

/// `Γ(1 + n/d) / (ρ λ κ_d)^{n/d}`.
pub fn approx_typical_moment(n: u32, m: &ModelParams, rho_val: f64) -> Result<f64> {
    if n < 1 {
        return invalid("moment order must be >= 1");
    }
    check_rho(rho_val)?;
    let e = n as f64 / m.d as f64;
    Ok(gamma(1.0 + e) / (rho_val * m.rate()).powf(e))
}

pub fn approx_typical_variance(m: &ModelParams, rho_val: f64) -> Result<f64> {
    let m1 = approx_typical_moment(1, m, rho_val)?;
    Ok(approx_typical_moment(2, m, rho_val)? - m1 * m1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;
    use crate::zerocell::contact_cdf;

    fn mp(d: usize, lambda: f64) -> ModelParams {
        ModelParams::new(d, lambda).unwrap()
    }

    #[test]
    fn radial_helpers() {
        for &a in &[1e-6, 1e-3, 0.049, 0.051, 0.7, 5.0] {
            // ∫₀^1 s e^{−a s} ds · a² = 1 − (1 + a) e^{−a}
            let q = GaussLegendre::new(30).integrate(|s| a * a * s * (-a * s).exp(), 0.0, 1.0);
            assert!((radial_inner(a) - q).abs() < 1e-14 * q.max(1e-300) + 1e-17, "a={a}");
        }
        assert_eq!(radial_outer(f64::INFINITY), 0.0);
        assert_eq!(radial_outer(0.0), 1.0);
    }

    #[test]
    fn line_second_moment() {
        // cell length ~ Gamma(2, 2λ): E = 1/λ, Var = 1/(2λ²)
        let v = second_moment_cell_volume(&mp(1, 1.0), 1e-10).unwrap();
        assert!((v - 1.5).abs() < 1e-9);
        let v = second_moment_cell_volume(&mp(1, 2.0), 1e-10).unwrap();
        assert!((v - 1.5 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn intensity_scaling() {
        let a = second_moment_cell_volume(&mp(2, 1.0), 1e-9).unwrap();
        let b = second_moment_cell_volume(&mp(2, 3.0), 1e-9).unwrap();
        assert!((b - a / 9.0).abs() < 1e-8);
        let rep = moment_report(&mp(2, 1.0), 1e-9).unwrap();
        assert!(rep.ev2 >= 1.0 && rep.var_v >= 0.0 && rep.rho >= 1.0);
        assert!((rep.rho - 1.285).abs() < 0.02);
    }

    /// Brute-force triple integral in ball radii with truncation, the
    /// unreduced form of the second moment.
    fn direct_second_moment(d: usize) -> f64 {
        let c = dim_constants(d).unwrap();
        let vmax = (16.0 * std::f64::consts::LN_10 / c.kappa).powf(1.0 / d as f64);
        let gl = GaussLegendre::new(40);
        let chi_lower = dim_constants(d - 1).unwrap().chi;
        let mut total = 0.0;
        // split radii at a few panels to follow the exponential decay
        let edges: Vec<f64> = (0..=8).map(|i| vmax * (i as f64 / 8.0).powi(2)).collect();
        for w1 in edges.windows(2) {
            for w2 in edges.windows(2) {
                for (v1, a1) in gl.mapped(w1[0], w1[1]) {
                    for (v2, a2) in gl.mapped(w2[0], w2[1]) {
                        let inner = gl.integrate(
                            |u| (-union_volume(v1, v2, u, d).unwrap()).exp() * u.sin().powi(d as i32 - 2),
                            0.0,
                            PI,
                        );
                        total += a1 * a2 * (v1 * v2).powi(d as i32 - 1) * inner;
                    }
                }
            }
        }
        c.chi * chi_lower * total
    }

    #[test]
    fn reduced_integral_matches_direct_triple_integral() {
        for d in [2, 3] {
            let reduced = second_moment_cell_volume(&mp(d, 1.0), 1e-9).unwrap();
            let direct = direct_second_moment(d);
            assert!((reduced - direct).abs() < 1e-4, "d={d}: {reduced} vs {direct}");
        }
    }

    #[test]
    fn intersection_moment_limits() {
        let m = mp(2, 1.0);
        assert_eq!(intersection_moments(0.0, &m, 1e-9).unwrap(), (0.0, 0.0));
        let full = second_moment_cell_volume(&m, 1e-10).unwrap();
        let (m1, m2) = intersection_moments(6.0, &m, 1e-10).unwrap();
        assert!((m1 - 1.0).abs() < 1e-12);
        assert!((m2 - full).abs() < 1e-8);
        for &r in &[0.1, 0.3, 0.6, 1.0] {
            let (m1, m2) = intersection_moments(r, &m, 1e-10).unwrap();
            assert!(m2 >= m1 * m1);
            // A ≤ κ r^d pointwise
            assert!(m2 <= (PI * r * r).powi(2) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn covariance_limits() {
        for d in [1, 2, 3] {
            let m = mp(d, 1.0);
            let var = moment_report(&m, 1e-10).unwrap().var_v;
            let c0 = covariance_ball_cell(0.0, &m, 1e-10).unwrap();
            assert!(c0.abs() < 1e-6 * var, "d={d} c0={c0}");
            let big = covariance_ball_cell(20.0, &m, 1e-10).unwrap();
            assert!((big / var - 1.0).abs() < 1e-6, "d={d} big={big} var={var}");
        }
        let m = mp(2, 1.0);
        let var = moment_report(&m, 1e-10).unwrap().var_v;
        let mid = covariance_ball_cell(0.5, &m, 1e-10).unwrap();
        assert!(mid > 0.0 && mid < var);
    }

    #[test]
    fn covariance_equals_mixed_moment_identity() {
        // Cov(A, V) = E[A²] + E[A (V − A)] − E[A] E[V]; the strip term is
        // the full integral minus the two diagonal blocks, halved
        let m = mp(2, 1.0);
        let c = dim_constants(2).unwrap();
        for &r in &[0.2, 0.7] {
            let x = c.kappa * r * r;
            let evals = Cell::new(0);
            let (outer, _) = pair_integral(
                &c,
                1e-11,
                &evals,
                |t, u| if t > 0.0 { radial_outer(x * u / t) } else { 0.0 },
            )
            .unwrap();
            let full = second_moment_cell_volume(&m, 1e-11).unwrap();
            let (m1, m2) = intersection_moments(r, &m, 1e-11).unwrap();
            let strip = 0.5 * (full - m2 - outer);
            let cov = m2 + strip - m1;
            assert!((cov - covariance_ball_cell(r, &m, 1e-11).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn small_radius_ratios_shrink() {
        for d in [1, 2] {
            let rep = small_radius_check(&mp(d, 1.0), &[0.2, 0.1, 0.05], 1e-11).unwrap();
            assert!(rep.strictly_decreasing, "d={d}: {:?}", rep.ratios);
            assert!(rep.positive, "d={d}: {:?}", rep.ratios);
        }
        assert!(small_radius_check(&mp(2, 1.0), &[0.1, 0.2], 1e-9).is_err());
    }

    #[test]
    fn rho_examples() {
        assert!((rho(&mp(1, 1.0), 1e-10).unwrap() - 1.5).abs() < 1e-8);
        assert!((rho(&mp(2, 1.0), 1e-8).unwrap() - 1.285).abs() < 0.02);
        assert!((rho(&mp(10, 1.0), 1e-8).unwrap() - 1.018).abs() < 0.02);
        let a = rho(&mp(3, 1.0), 1e-8).unwrap();
        let b = rho(&mp(3, 3.0), 1e-8).unwrap();
        assert!((a - b).abs() < 2e-8);
    }

    #[test]
    fn rho_decreases_with_dimension() {
        let vals: Vec<f64> = (1..=10).map(|d| rho(&mp(d, 1.0), 1e-8).unwrap()).collect();
        assert!(vals.iter().all(|&v| v >= 1.0));
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn approximate_law_examples() {
        let m = mp(2, 1.0);
        assert_eq!(approx_typical_cdf(0.0, &m, 1.3).unwrap(), 0.0);
        for &r in &[0.1, 0.5, 1.2] {
            assert!((approx_typical_cdf(r, &m, 1.0).unwrap() - contact_cdf(r, &m).unwrap()).abs() < 1e-15);
            assert!(approx_typical_cdf(r, &m, 1.285).unwrap() >= contact_cdf(r, &m).unwrap());
        }
        let m1 = mp(1, 1.0);
        assert!((approx_typical_moment(1, &m1, 1.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((approx_typical_moment(1, &m, 1.285).unwrap() - 0.442).abs() < 2e-3);
        assert!((approx_typical_variance(&m, 1.285).unwrap() - 0.053).abs() < 5e-4);
        assert!(approx_typical_cdf(0.5, &m, 0.9).is_err());
        assert!(approx_typical_moment(0, &m, 1.2).is_err());
    }
}
