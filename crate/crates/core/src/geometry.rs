//! Hyperspherical coordinates, spherical caps and the volume of the union of
//! two balls that both pass through the origin.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::quad::GaussLegendre;
use crate::specfun::{dim_constants, reg_inc_beta};

/// A point in hyperspherical coordinates.
///
/// Convention: `x₁ = r cos a₁`, `x_n = r sin a₁ ⋯ sin a_{n-1} cos a_n` for
/// `1 < n < d`, and `x_d = r sin a₁ ⋯ sin a_{d-1}`. The first `d-2` angles lie
/// in `[0, π]`, the last one in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    pub radius: f64,
    pub angles: Vec<f64>,
}

impl PolarPoint {
    pub fn new(radius: f64, angles: Vec<f64>) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return invalid(format!("polar radius must be finite and >= 0, got {radius}"));
        }
        let last = angles.len().saturating_sub(1);
        for (i, &a) in angles.iter().enumerate() {
            let ok = if i == last {
                (0.0..2.0 * PI).contains(&a)
            } else {
                (0.0..=PI).contains(&a)
            };
            if !ok {
                return invalid(format!("angle {i} = {a} out of range"));
            }
        }
        Ok(Self { radius, angles })
    }

    pub fn dim(&self) -> usize {
        self.angles.len() + 1
    }

    /// Inverse of [`polar_to_cartesian`] for `d >= 2`.
    pub fn from_cartesian(x: &[f64]) -> Result<Self> {
        let d = x.len();
        if d < 2 {
            return invalid("polar coordinates need d >= 2");
        }
        let radius = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut angles = Vec::with_capacity(d - 1);
        // tail[n] = ‖(x_n, …, x_d)‖
        let mut tail = vec![0.0; d + 1];
        for n in (0..d).rev() {
            tail[n] = (tail[n + 1] * tail[n + 1] + x[n] * x[n]).sqrt();
        }
        for n in 0..d - 2 {
            angles.push(if tail[n] == 0.0 {
                0.0
            } else {
                (x[n] / tail[n]).clamp(-1.0, 1.0).acos()
            });
        }
        let mut last = x[d - 1].atan2(x[d - 2]);
        if last < 0.0 {
            last += 2.0 * PI;
        }
        if last >= 2.0 * PI {
            last = 0.0;
        }
        angles.push(last);
        Ok(Self { radius, angles })
    }
}

pub fn polar_to_cartesian(p: &PolarPoint, d: usize) -> Result<Vec<f64>> {
    if d < 1 || p.angles.len() != d - 1 {
        return invalid(format!(
            "polar point has {} angles, dimension {d} needs {}",
            p.angles.len(),
            d.saturating_sub(1)
        ));
    }
    let mut out = Vec::with_capacity(d);
    let mut sin_prod = p.radius;
    for &a in &p.angles {
        out.push(sin_prod * a.cos());
        sin_prod *= a.sin();
    }
    out.push(sin_prod);
    Ok(out)
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Euclidean distance between two points given in polar form.
pub fn pair_distance(y: &PolarPoint, x: &PolarPoint, d: usize) -> Result<f64> {
    let a = polar_to_cartesian(y, d)?;
    let b = polar_to_cartesian(x, d)?;
    Ok(dist_sq(&a, &b).sqrt())
}

/// `1 - (t/R)²` computed as `(R-t)(R+t)/R²`.
pub(crate) fn one_minus_ratio_sq(t: f64, radius: f64) -> f64 {
    ((radius - t) * (radius + t) / (radius * radius)).clamp(0.0, 1.0)
}

/// Surface area of the spherical cap cut from the sphere of radius
/// `ball_radius` by a hyperplane at distance `cap_base_distance` from the
/// center.
pub fn cap_surface_area(d: usize, ball_radius: f64, cap_base_distance: f64) -> Result<f64> {
    if d < 2 {
        return invalid("cap surface needs d >= 2");
    }
    if !(ball_radius > 0.0) {
        return invalid(format!("ball radius must be positive, got {ball_radius}"));
    }
    if !(0.0..=ball_radius).contains(&cap_base_distance) {
        return invalid(format!(
            "cap base distance {cap_base_distance} outside [0, {ball_radius}]"
        ));
    }
    let c = dim_constants(d)?;
    let x = one_minus_ratio_sq(cap_base_distance, ball_radius);
    let frac = reg_inc_beta(x, 0.5 * (d as f64 - 1.0), 0.5)?;
    Ok(0.5 * c.chi * ball_radius.powi(d as i32 - 1) * frac)
}

/// Solved split of the angle `π - u` between the two ball caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBallGeometry {
    pub v1: f64,
    pub v2: f64,
    pub u: f64,
    pub psi1: f64,
    pub psi2: f64,
}

fn check_two_ball(v1: f64, v2: f64, u: f64) -> Result<()> {
    if !(v1 >= 0.0) || !(v2 >= 0.0) || !v1.is_finite() || !v2.is_finite() {
        return invalid(format!("ball radii must be finite and >= 0 (v1={v1}, v2={v2})"));
    }
    if !(0.0..=PI).contains(&u) {
        return invalid(format!("center angle {u} outside [0, π]"));
    }
    if v1 + v2 <= 0.0 {
        return invalid("at least one ball radius must be positive");
    }
    Ok(())
}

/// Solves `ψ₁ + ψ₂ = π - u`, `v₁ sin ψ₁ = v₂ sin ψ₂` by bisection.
pub fn psi_split(v1: f64, v2: f64, u: f64) -> Result<TwoBallGeometry> {
    check_two_ball(v1, v2, u)?;
    let span = PI - u;
    let done = |psi1: f64| TwoBallGeometry {
        v1,
        v2,
        u,
        psi1,
        psi2: span - psi1,
    };
    if span <= 0.0 {
        return Ok(done(0.0));
    }
    if v1 == 0.0 {
        return Ok(done(span));
    }
    if v2 == 0.0 {
        return Ok(done(0.0));
    }
    if u == 0.0 {
        // internally tangent balls: the smaller one is swallowed
        let psi1 = match v1.partial_cmp(&v2).unwrap() {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Less => PI,
            std::cmp::Ordering::Equal => 0.5 * PI,
        };
        return Ok(done(psi1));
    }
    let f = |p: f64| v1 * p.sin() - v2 * (span - p).sin();
    let (mut lo, mut hi) = (0.0, span);
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NonBracketing("psi split"));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(done(0.5 * (lo + hi)))
}

/// `α_d ∫₀^ψ sin^d t dt`: the fraction of a d-ball lying in the cap whose
/// half-angle (seen from the ball center) is `ψ ∈ [0, π]`.
pub fn sin_power_fraction(psi: f64, d: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&psi) {
        return invalid(format!("cap half-angle {psi} outside [0, π]"));
    }
    let a = 0.5 * (d as f64 + 1.0);
    let (small, flip) = if psi <= 0.5 * PI {
        (psi, false)
    } else {
        (PI - psi, true)
    };
    let s = small.sin();
    let half = 0.5 * reg_inc_beta((s * s).min(1.0), a, 0.5)?;
    Ok(if flip { 1.0 - half } else { half })
}

/// Volume of `B_{v1}(c₁) ∪ B_{v2}(c₂)` where both balls pass through the
/// origin and `∠(c₁, o, c₂) = u`, via the split angles of [`psi_split`].
pub fn union_volume(v1: f64, v2: f64, u: f64, d: usize) -> Result<f64> {
    let c = dim_constants(d)?;
    let g = psi_split(v1, v2, u)?;
    let b1 = c.kappa * v1.powi(d as i32);
    let b2 = c.kappa * v2.powi(d as i32);
    let out = b1 * (1.0 - sin_power_fraction(g.psi1, d)?) + b2 * (1.0 - sin_power_fraction(g.psi2, d)?);
    Ok(out.clamp(b1.max(b2), b1 + b2))
}

fn cap_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(48))
}

/// Fraction of a unit d-ball beyond a hyperplane at signed distance `t`
/// from its center, by quadrature of the `sin^d` profile.
fn cap_fraction_quadrature(t: f64, d: usize, alpha: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let theta = t.acos();
    let rule = cap_rule();
    // split at π/2 so each panel sees a monotone profile
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [theta.min(0.5 * PI), theta] {
        if hi > lo {
            total += rule.integrate(|s| s.sin().powi(d as i32), lo, hi);
            lo = hi;
        }
    }
    alpha * total
}

/// Same quantity as [`union_volume`] computed by inclusion-exclusion with the
/// lens volume obtained from the center distance.
pub fn union_volume_lens(v1: f64, v2: f64, u: f64, d: usize) -> Result<f64> {
    check_two_ball(v1, v2, u)?;
    let c = dim_constants(d)?;
    let b1 = c.kappa * v1.powi(d as i32);
    let b2 = c.kappa * v2.powi(d as i32);
    let delta = (v1 * v1 + v2 * v2 - 2.0 * v1 * v2 * u.cos()).max(0.0).sqrt();
    if delta <= (v1 - v2).abs() {
        return Ok(b1.max(b2));
    }
    if delta >= v1 + v2 {
        return Ok(b1 + b2);
    }
    // signed distances from each center to the radical hyperplane
    let a1 = (delta * delta + v1 * v1 - v2 * v2) / (2.0 * delta);
    let a2 = delta - a1;
    let lens = b1 * cap_fraction_quadrature(a1 / v1, d, c.alpha) + b2 * cap_fraction_quadrature(a2 / v2, d, c.alpha);
    Ok(b1 + b2 - lens)
}
