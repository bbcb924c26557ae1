//! Exact typical-cell distance law through domain configurations.
//!
//! Given `k` PPP points in `B_{2ℓ}(o)`, their midpoints with the origin are
//! uniform in `B_ℓ(o)` and determine `V_o ∩ B_ℓ(o)`. The CDF of the distance
//! to a uniform point of that set is averaged over configurations and mixed
//! over the Poisson law of `k`.

use log::{info, warn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{norm_sq, pair_distance, PolarPoint};
use crate::rng::{substream, tag};
use crate::simulate::{farthest_point_quantile, uniform_in_shell, McEstimate};
use crate::zerocell::ModelParams;

/// Midpoints conditioning the typical cell inside `B_ℓ(o)`.
///
/// Points are stored in Cartesian form so that `d = 1` keeps the side of
/// the origin; [`DomainConfiguration::polar`] gives the polar view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainConfiguration {
    pub ell: f64,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
}

impl DomainConfiguration {
    pub fn new(ell: f64, d: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(ell > 0.0) {
            return invalid(format!("conditioning radius must be > 0, got {ell}"));
        }
        for p in &points {
            if p.len() != d {
                return invalid("configuration point has wrong dimension");
            }
            if norm_sq(p).sqrt() > ell * (1.0 + 1e-12) {
                return invalid("configuration point outside B_ell");
            }
        }
        Ok(Self { ell, d, points })
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn polar(&self) -> Result<Vec<PolarPoint>> {
        self.points.iter().map(|p| PolarPoint::from_cartesian(p)).collect()
    }

    /// `(l², x)` pairs sorted by `l`.
    fn sorted(&self) -> Vec<(f64, &[f64])> {
        let mut v: Vec<(f64, &[f64])> = self.points.iter().map(|p| (norm_sq(p), p.as_slice())).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

/// Sample counts, truncation and seed for the configuration integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McBudget {
    pub outer_configs: usize,
    pub inner_points: usize,
    /// `None` picks the smallest `k` whose Poisson upper tail is below
    /// `tail_tol`.
    pub k_max: Option<usize>,
    pub seed: u64,
    pub tail_tol: f64,
}

impl Default for McBudget {
    fn default() -> Self {
        Self {
            outer_configs: 1000,
            inner_points: 500,
            k_max: None,
            seed: 1,
            tail_tol: 1e-6,
        }
    }
}

impl McBudget {
    pub fn validate(&self) -> Result<()> {
        if self.outer_configs == 0 || self.inner_points == 0 {
            return invalid("budget counts must be >= 1");
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return invalid(format!("tail tolerance must be in (0, 1), got {}", self.tail_tol));
        }
        Ok(())
    }
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell > 0.0) || !ell.is_finite() {
        return invalid(format!("conditioning radius must be finite and > 0, got {ell}"));
    }
    Ok(())
}

pub fn sample_domain_config<R: Rng>(m: &ModelParams, ell: f64, k: usize, rng: &mut R) -> Result<DomainConfiguration> {
    check_ell(ell)?;
    let points = (0..k).map(|_| uniform_in_shell(rng, m.d, 0.0, ell)).collect();
    Ok(DomainConfiguration { ell, d: m.d, points })
}

/// One for a probe `y` that the midpoint `x̃` does not cut off: either
/// `‖x̃‖ > ‖y‖`, or `y` is strictly nearer to the origin than to `2x̃`.
pub fn indicator_d(y: &PolarPoint, cfg_point: &PolarPoint, d: usize) -> Result<bool> {
    if cfg_point.radius > y.radius {
        return Ok(true);
    }
    let far = PolarPoint {
        radius: 2.0 * cfg_point.radius,
        angles: cfg_point.angles.clone(),
    };
    Ok(pair_distance(y, &far, d)? > y.radius)
}

/// Cartesian form of the indicator product over a configuration sorted by
/// `l²`: `‖y − 2x̃‖ > ‖y‖ ⇔ l² > ⟨x̃, y⟩`.
fn passes(y: &[f64], sorted: &[(f64, &[f64])]) -> bool {
    let r2 = norm_sq(y);
    for &(l2, x) in sorted {
        if l2 > r2 {
            return true;
        }
        let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        if l2 <= xy {
            return false;
        }
    }
    true
}

/// Monte Carlo estimate of `υ_d(V_o(C) ∩ B_z(o))` from `inner_points`
/// uniform probes of `B_z(o)`.
pub fn g_k_volume<R: Rng>(z: f64, cfg: &DomainConfiguration, inner_points: usize, rng: &mut R) -> Result<McEstimate> {
    if !(z >= 0.0 && z <= cfg.ell) {
        return invalid(format!("z = {z} outside [0, {}]", cfg.ell));
    }
    if inner_points == 0 {
        return invalid("need at least one probe");
    }
    let ball = crate::specfun::dim_constants(cfg.d)?.kappa * z.powi(cfg.d as i32);
    let sorted = cfg.sorted();
    let hits = (0..inner_points)
        .filter(|_| passes(&uniform_in_shell(rng, cfg.d, 0.0, z), &sorted))
        .count();
    let n = inner_points as f64;
    let f = hits as f64 / n;
    Ok(McEstimate {
        value: ball * f,
        std_error: ball * (f * (1.0 - f) / n).sqrt(),
        trials: inner_points,
    })
}

const MAX_PROBE_DOUBLINGS: u32 = 16;

/// Sorted distances of the probes of `B_ℓ(o)` that land in the cell. When
/// none does, the same configuration gets a doubled set of fresh probes from
/// a retry stream.
fn passing_norms(m: &ModelParams, ell: f64, k: usize, j: u64, b: &McBudget) -> Result<(Vec<f64>, bool)> {
    let mut rng: ChaCha8Rng = substream(b.seed, &[tag::CONFIG, k as u64, j]);
    let cfg = sample_domain_config(m, ell, k, &mut rng)?;
    let sorted = cfg.sorted();
    for attempt in 0..=MAX_PROBE_DOUBLINGS {
        if attempt > 0 {
            rng = substream(b.seed, &[tag::CONFIG, k as u64, j, tag::RETRY, attempt as u64]);
        }
        let mut norms: Vec<f64> = (0..b.inner_points << attempt)
            .filter_map(|_| {
                let y = uniform_in_shell(&mut rng, m.d, 0.0, ell);
                passes(&y, &sorted).then(|| norm_sq(&y).sqrt())
            })
            .collect();
        if !norms.is_empty() {
            norms.sort_by(|a, c| a.total_cmp(c));
            return Ok((norms, attempt > 0));
        }
    }
    Err(Error::Budget(format!(
        "configuration {j} with k = {k}: no probe in the cell after retries; raise inner_points"
    )))
}

/// Conditional CDF and its per-configuration statistics on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalCurve {
    pub k: usize,
    pub z: Vec<f64>,
    pub cdf: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `∫₀^ℓ (1 − F_k)`.
    pub mean: f64,
    pub mean_std_error: f64,
    pub retried: usize,
}

fn check_grid(z: &[f64], ell: f64) -> Result<()> {
    if z.iter().any(|&v| !(v >= 0.0 && v <= ell)) {
        return invalid(format!("grid values must lie in [0, {ell}]"));
    }
    Ok(())
}

pub fn conditional_cdf_curve(z: &[f64], k: usize, m: &ModelParams, ell: f64, b: &McBudget) -> Result<ConditionalCurve> {
    check_ell(ell)?;
    b.validate()?;
    check_grid(z, ell)?;
    let df = m.d as f64;
    if k == 0 {
        // B_ℓ is the whole conditioned cell
        return Ok(ConditionalCurve {
            k,
            z: z.to_vec(),
            cdf: z.iter().map(|&v| (v / ell).powf(df)).collect(),
            std_error: vec![0.0; z.len()],
            mean: ell * df / (df + 1.0),
            mean_std_error: 0.0,
            retried: 0,
        });
    }
    let per_config: Vec<(Vec<f64>, bool)> = (0..b.outer_configs as u64)
        .into_par_iter()
        .map(|j| {
            let (norms, retried) = passing_norms(m, ell, k, j, b)?;
            let n = norms.len() as f64;
            let mut row: Vec<f64> = z
                .iter()
                .map(|&v| {
                    if v >= ell {
                        1.0
                    } else {
                        norms.partition_point(|&x| x <= v) as f64 / n
                    }
                })
                .collect();
            row.push(norms.iter().sum::<f64>() / n);
            Ok((row, retried))
        })
        .collect::<Result<_>>()?;
    let n = per_config.len() as f64;
    let width = z.len() + 1;
    let mut sum = vec![0.0; width];
    let mut sum2 = vec![0.0; width];
    for (row, _) in &per_config {
        for i in 0..width {
            sum[i] += row[i];
            sum2[i] += row[i] * row[i];
        }
    }
    let se = |i: usize| {
        let mu = sum[i] / n;
        if n > 1.0 {
            ((sum2[i] / n - mu * mu).max(0.0) / (n - 1.0)).sqrt()
        } else {
            0.0
        }
    };
    let nz = z.len();
    Ok(ConditionalCurve {
        k,
        z: z.to_vec(),
        cdf: (0..nz).map(|i| sum[i] / n).collect(),
        std_error: (0..nz).map(se).collect(),
        mean: sum[nz] / n,
        mean_std_error: se(nz),
        retried: per_config.iter().filter(|r| r.1).count(),
    })
}

/// Conditional CDF at a single `z`, as an estimate with standard error.
pub fn conditional_cdf(z: f64, k: usize, m: &ModelParams, ell: f64, b: &McBudget) -> Result<McEstimate> {
    let c = conditional_cdf_curve(&[z], k, m, ell, b)?;
    Ok(McEstimate {
        value: c.cdf[0],
        std_error: c.std_error[0],
        trials: b.outer_configs,
    })
}

/// Poisson probabilities `P(K = k)` for `k = 0..=k_max`, with the mass
/// left beyond `k_max`.
pub fn poisson_weights(mean: f64, k_max: usize) -> (Vec<f64>, f64) {
    let mut w = Vec::with_capacity(k_max + 1);
    let mut ln_p = -mean;
    for k in 0..=k_max {
        if k > 0 {
            ln_p += mean.ln() - (k as f64).ln();
        }
        w.push(ln_p.exp());
    }
    let tail = (1.0 - w.iter().sum::<f64>()).max(0.0);
    (w, tail)
}

/// Smallest `k` with `P(K > k) < tail_tol`.
pub fn poisson_k_max(mean: f64, tail_tol: f64) -> usize {
    let mut ln_p = -mean;
    let mut cdf = ln_p.exp();
    let mut k = 0usize;
    while 1.0 - cdf >= tail_tol && k < 100_000 {
        k += 1;
        ln_p += mean.ln() - (k as f64).ln();
        cdf += ln_p.exp();
    }
    k
}

/// Mean number of PPP points in `B_{2ℓ}(o)`.
pub fn config_count_mean(m: &ModelParams, ell: f64) -> f64 {
    m.rate() * (2.0 * ell).powi(m.d as i32)
}

/// 0.99-quantile of the farthest boundary distance of the typical cell when
/// known in closed form or from the literature.
pub fn reference_ell(m: &ModelParams) -> Option<f64> {
    match m.d {
        // circumradius max(R₁, R₂) of two Exp(2λ) half-gaps
        1 => Some(-(1.0 - 0.99f64.sqrt()).ln() / (2.0 * m.lambda)),
        2 => Some(1.6 / m.lambda.sqrt()),
        _ => None,
    }
}

/// Conditioning radius and how it was chosen.
#[derive(Debug, Clone, Serialize)]
pub struct EllChoice {
    pub ell: f64,
    pub source: String,
}

/// The reference radius when known, else the empirical 0.99-quantile of the
/// simulated farthest boundary distance.
pub fn default_ell(m: &ModelParams, samples: usize, seed: u64) -> Result<EllChoice> {
    if let Some(ell) = reference_ell(m) {
        return Ok(EllChoice {
            ell,
            source: "reference 0.99-quantile of the farthest boundary distance".into(),
        });
    }
    let ell = farthest_point_quantile(m, 0.99, samples, seed)?;
    Ok(EllChoice {
        ell,
        source: format!("simulated 0.99-quantile of the farthest boundary distance ({samples} cells)"),
    })
}

/// Mixture curve with its truncation metadata.
#[derive(Debug, Clone, Serialize)]
pub struct ExactCurve {
    pub z: Vec<f64>,
    pub cdf: Vec<f64>,
    pub std_error: Vec<f64>,
    pub mean: f64,
    pub mean_std_error: f64,
    pub ell: f64,
    pub k_max: usize,
    pub poisson_mean: f64,
    /// Poisson mass beyond `k_max`; bounds the truncation error of each value.
    pub tail_mass: f64,
    pub retried: usize,
    pub budget: McBudget,
}

pub fn typical_cdf_exact_curve(z: &[f64], m: &ModelParams, ell: f64, b: &McBudget) -> Result<ExactCurve> {
    check_ell(ell)?;
    b.validate()?;
    check_grid(z, ell)?;
    if let Some(reference) = reference_ell(m) {
        if ell < reference {
            warn!("ell = {ell} is below the 0.99-quantile {reference:.4} of the farthest boundary distance; the cell is often cut off");
        }
    }
    let mu = config_count_mean(m, ell);
    let k_max = b.k_max.unwrap_or_else(|| poisson_k_max(mu, b.tail_tol));
    let (w, tail) = poisson_weights(mu, k_max);
    let mut cdf = vec![0.0; z.len()];
    let mut var = vec![0.0; z.len()];
    let (mut mean, mut mean_var) = (0.0, 0.0);
    let mut retried = 0;
    for (k, &wk) in w.iter().enumerate() {
        let c = conditional_cdf_curve(z, k, m, ell, b)?;
        for i in 0..z.len() {
            cdf[i] += wk * c.cdf[i];
            var[i] += wk * wk * c.std_error[i] * c.std_error[i];
        }
        mean += wk * c.mean;
        mean_var += wk * wk * c.mean_std_error * c.mean_std_error;
        retried += c.retried;
    }
    if retried > 0 {
        info!("{retried} configurations needed a fresh probe set");
    }
    // the truncated mass is assigned to the empirical part of the mixture
    let norm = 1.0 - tail;
    Ok(ExactCurve {
        z: z.to_vec(),
        cdf: cdf.iter().map(|v| (v / norm).clamp(0.0, 1.0)).collect(),
        std_error: var.iter().map(|v| v.sqrt() / norm).collect(),
        mean: mean / norm,
        mean_std_error: mean_var.sqrt() / norm,
        ell,
        k_max,
        poisson_mean: mu,
        tail_mass: tail,
        retried,
        budget: *b,
    })
}

/// Single-point version of [`typical_cdf_exact_curve`].
pub fn typical_cdf_exact(z: f64, m: &ModelParams, ell: f64, b: &McBudget) -> Result<McEstimate> {
    let c = typical_cdf_exact_curve(&[z], m, ell, b)?;
    Ok(McEstimate {
        value: c.cdf[0],
        std_error: c.std_error[0],
        trials: b.outer_configs,
    })
}

/// `∫₀^ℓ (1 − F(z)) dz`, integrated exactly over each configuration's
/// empirical step function.
pub fn typical_mean_exact(m: &ModelParams, ell: f64, b: &McBudget) -> Result<McEstimate> {
    let c = typical_cdf_exact_curve(&[], m, ell, b)?;
    Ok(McEstimate {
        value: c.mean,
        std_error: c.mean_std_error,
        trials: b.outer_configs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polar_to_cartesian;
    use crate::typical1d::typical1d_moment;
    use crate::zerocell::{contact_cdf, zerocell_moment};
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn mp(d: usize, lambda: f64) -> ModelParams {
        ModelParams::new(d, lambda).unwrap()
    }

    fn small_budget() -> McBudget {
        McBudget {
            outer_configs: 200,
            inner_points: 200,
            ..McBudget::default()
        }
    }

    #[test]
    fn config_sampling_moments() {
        let m = mp(3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_domain_config(&m, 1.6, 0, &mut rng).unwrap().k(), 0);
        let cfg = sample_domain_config(&m, 1.6, 100_000, &mut rng).unwrap();
        let ell3 = 1.6f64.powi(3);
        let rd: Vec<f64> = cfg.points.iter().map(|p| norm_sq(p).sqrt().powi(3)).collect();
        let mean = rd.iter().sum::<f64>() / 1e5;
        // r^d uniform on [0, ℓ^d]
        assert!((mean - ell3 / 2.0).abs() < 3.0 * ell3 / (12f64.sqrt() * 1e5f64.sqrt()));
        for axis in 0..3 {
            let dir = cfg.points.iter().map(|p| p[axis] / norm_sq(p).sqrt()).sum::<f64>() / 1e5;
            // each direction coordinate has variance 1/d
            assert!(dir.abs() < 3.0 * (1.0 / 3.0 / 1e5f64).sqrt());
        }
        assert!(DomainConfiguration::new(1.0, 2, vec![vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn indicator_examples() {
        let y = PolarPoint::new(0.8, vec![0.3]).unwrap();
        let far = PolarPoint::new(1.0, vec![2.0]).unwrap();
        assert!(indicator_d(&y, &far, 2).unwrap());
        // collinear midpoint at 0.5 cuts off y at 0.8
        let on_axis = PolarPoint::new(0.5, vec![0.3]).unwrap();
        assert!(!indicator_d(&y, &on_axis, 2).unwrap());
        let opposite = PolarPoint::new(0.5, vec![0.3 + PI]).unwrap();
        assert!(indicator_d(&y, &opposite, 2).unwrap());
    }

    #[test]
    fn cartesian_indicator_agrees_with_polar() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2, 3, 5] {
            for _ in 0..2000 {
                let y = uniform_in_shell(&mut rng, d, 0.0, 1.5);
                let x = uniform_in_shell(&mut rng, d, 0.0, 1.5);
                let (py, px) = (
                    PolarPoint::from_cartesian(&y).unwrap(),
                    PolarPoint::from_cartesian(&x).unwrap(),
                );
                let cfg = DomainConfiguration::new(1.5, d, vec![x.clone()]).unwrap();
                assert_eq!(passes(&y, &cfg.sorted()), indicator_d(&py, &px, d).unwrap());
                let back = polar_to_cartesian(&px, d).unwrap();
                assert!(crate::geometry::dist_sq(&back, &x) < 1e-20);
            }
        }
    }

    #[test]
    fn g_k_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let empty = DomainConfiguration::new(1.6, 2, vec![]).unwrap();
        let v = g_k_volume(1.2, &empty, 100, &mut rng).unwrap();
        assert!((v.value - PI * 1.44).abs() < 1e-12 && v.std_error == 0.0);
        let far = DomainConfiguration::new(1.6, 2, vec![vec![0.0, 1.5], vec![-1.4, 0.0]]).unwrap();
        assert!((g_k_volume(1.2, &far, 100, &mut rng).unwrap().value - PI * 1.44).abs() < 1e-12);
        // unit disc minus the segment beyond the line y₁ = 0.5
        let one = DomainConfiguration::new(1.6, 2, vec![vec![0.5, 0.0]]).unwrap();
        let segment = (0.5f64).acos() - 0.5 * (0.75f64).sqrt();
        let oracle = PI - segment;
        let est = g_k_volume(1.0, &one, 400_000, &mut rng).unwrap();
        assert!(
            (est.value - oracle).abs() < 4.0 * est.std_error,
            "{} vs {oracle}",
            est.value
        );
    }

    #[test]
    fn adding_a_point_never_grows_the_cell() {
        let m = mp(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let cfg = sample_domain_config(&m, 1.6, 6, &mut rng).unwrap();
            let mut bigger = cfg.clone();
            bigger.points.push(uniform_in_shell(&mut rng, 2, 0.0, 1.6));
            let (s, sb) = (cfg.sorted(), bigger.sorted());
            for _ in 0..500 {
                let y = uniform_in_shell(&mut rng, 2, 0.0, 1.6);
                assert!(!passes(&y, &sb) || passes(&y, &s));
            }
        }
    }

    #[test]
    fn conditional_cdf_examples() {
        let m = mp(2, 1.0);
        let b = small_budget();
        for &z in &[0.0, 0.4, 1.1] {
            let c = conditional_cdf(z, 0, &m, 1.6, &b).unwrap();
            assert_eq!(c.value, (z / 1.6f64).powi(2));
        }
        assert_eq!(conditional_cdf(1.6, 7, &m, 1.6, &b).unwrap().value, 1.0);
        let grid: Vec<f64> = (0..=32).map(|i| 0.05 * i as f64).collect();
        let c = conditional_cdf_curve(&grid, 12, &m, 1.6, &b).unwrap();
        assert!(c.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!(conditional_cdf(1.7, 3, &m, 1.6, &b).is_err());
    }

    #[test]
    fn poisson_helpers() {
        let (w, tail) = poisson_weights(3.0, 200);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && tail < 1e-12);
        assert!((w[2] - 4.5 * (-3.0f64).exp()).abs() < 1e-15);
        let k = poisson_k_max(32.2, 1e-6);
        let (_, tail) = poisson_weights(32.2, k);
        assert!(tail < 1e-6);
        let (_, tail_before) = poisson_weights(32.2, k - 1);
        assert!(tail_before >= 1e-6 - 1e-12);
    }

    #[test]
    fn exact_curve_properties() {
        let m = mp(2, 1.0);
        let b = small_budget();
        let grid: Vec<f64> = (0..=16).map(|i| 0.1 * i as f64).collect();
        let c = typical_cdf_exact_curve(&grid, &m, 1.6, &b).unwrap();
        assert_eq!(c.cdf[0], 0.0);
        assert!(c.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!(c.tail_mass < b.tail_tol);
        for (i, &z) in grid.iter().enumerate() {
            assert!(c.cdf[i] >= contact_cdf(z, &m).unwrap() - 4.0 * c.std_error[i] - 1e-12);
        }
        assert!(c.mean <= zerocell_moment(1, &m).unwrap());
        let again = typical_cdf_exact_curve(&grid, &m, 1.6, &b).unwrap();
        assert_eq!(c.cdf, again.cdf);
    }

    #[test]
    fn line_mean_matches_closed_form() {
        let m = mp(1, 1.0);
        let b = McBudget {
            outer_configs: 400,
            inner_points: 400,
            ..McBudget::default()
        };
        let est = typical_mean_exact(&m, 4.0, &b).unwrap();
        let exact = typical1d_moment(1, 1.0).unwrap();
        assert!((est.value - exact).abs() < 0.01, "{} vs {exact}", est.value);
    }

    #[test]
    fn reference_radius() {
        let r = reference_ell(&mp(1, 1.0)).unwrap();
        assert!(((1.0 - (-2.0 * r).exp()).powi(2) - 0.99).abs() < 1e-12);
        assert!((reference_ell(&mp(2, 4.0)).unwrap() - 0.8).abs() < 1e-15);
        assert!(reference_ell(&mp(3, 1.0)).is_none());
    }
}
