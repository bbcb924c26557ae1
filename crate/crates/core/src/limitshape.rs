//! Coverage of the sphere `∂B_{R+ε}(o)` by the spherical caps of the bisector
//! half-spaces, given the inradius `R` of the typical cell.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::one_minus_ratio_sq;
use crate::quad::integrate;
use crate::rng::{substream, tag};
pub use crate::simulate::McEstimate;
use crate::specfun::{beta, dim_constants, reg_inc_beta};

/// Inradius `r`, annulus width `eps`, dimension and intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InballCondition {
    pub r: f64,
    pub eps: f64,
    pub d: usize,
    /// May be zero (empty annulus).
    pub lambda: f64,
}

impl InballCondition {
    pub fn new(r: f64, eps: f64, d: usize, lambda: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return invalid(format!("inradius must be finite and > 0, got {r}"));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return invalid(format!("annulus width must be finite and > 0, got {eps}"));
        }
        if d < 2 {
            return invalid("cap coverage needs d >= 2");
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return invalid(format!("intensity must be finite and >= 0, got {lambda}"));
        }
        Ok(Self { r, eps, d, lambda })
    }

    fn outer(&self) -> f64 {
        self.r + self.eps
    }

    /// `1 − R²/(R+ε)²` without cancellation.
    fn x(&self) -> f64 {
        let c = self.outer();
        self.eps * (2.0 * self.r + self.eps) / (c * c)
    }

    /// `(R+ε)^d − R^d`.
    fn shell(&self) -> f64 {
        let d = self.d as f64;
        self.r.powf(d) * (d * (self.eps / self.r).ln_1p()).exp_m1()
    }

    fn a(&self) -> f64 {
        0.5 * (self.d as f64 - 1.0)
    }
}

/// Mean of the number `K` of PPP points in the annulus `A(2R, 2ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum AnnulusCount {
    /// `λ κ_d ((2R+2ε)^d − (2R)^d)`, the volume of the annulus that `K`
    /// counts.
    #[default]
    Annulus,
    /// `λ κ_d ((R+ε)^d − R^d)`, the volume of the midpoint annulus.
    MidpointAnnulus,
}

impl AnnulusCount {
    pub fn mean(self, c: &InballCondition) -> f64 {
        let kappa = dim_constants(c.d).expect("d >= 2").kappa;
        let base = c.lambda * kappa * c.shell();
        match self {
            AnnulusCount::Annulus => base * 2f64.powi(c.d as i32),
            AnnulusCount::MidpointAnnulus => base,
        }
    }
}

/// `(l^d − R^d) / ((R+ε)^d − R^d)` for `R ≤ l ≤ R+ε`.
pub fn annulus_radius_cdf(l: f64, c: &InballCondition) -> Result<f64> {
    if !(l >= c.r && l <= c.outer()) {
        return invalid(format!("radius {l} outside [{}, {}]", c.r, c.outer()));
    }
    let d = c.d as f64;
    let num = c.r.powf(d) * (d * ((l - c.r) / c.r).ln_1p()).exp_m1();
    Ok((num / c.shell()).clamp(0.0, 1.0))
}

/// Below this `1 − R²/(R+ε)²` the closed form loses more digits than the
/// leading-order series.
const SERIES_SWITCH: f64 = 1e-8;

/// Probability that a uniform point of `∂B_{R+ε}(o)` lies in the cap of one
/// midpoint uniform in the annulus `A(R, ε)`.
pub fn cap_hit_probability(c: &InballCondition) -> Result<f64> {
    let a = c.a();
    let x = c.x();
    let b_half = beta(a, 0.5);
    if x < SERIES_SWITCH {
        return Ok(0.5 * (2.0 * c.eps / c.outer()).powf(a) / (a * (a + 1.0) * b_half));
    }
    let d = c.d as f64;
    // divide both terms by (R+ε)^d to keep the magnitudes near one
    let ratio = (c.r / c.outer()).powf(d);
    let big = reg_inc_beta(x, a, a + 1.0)? * beta(a, a + 1.0) / b_half;
    let small = ratio * reg_inc_beta(x, a, 0.5)?;
    let shell_rel = -(d * (-c.eps / c.outer()).ln_1p()).exp_m1();
    Ok(((big - small) / (2.0 * shell_rel)).max(0.0))
}

/// The same probability as the one-dimensional integral over the midpoint
/// radius, before the incomplete-beta reduction.
pub fn cap_hit_probability_quadrature(c: &InballCondition, tol: f64) -> Result<f64> {
    let d = c.d as f64;
    let a = c.a();
    let outer = c.outer();
    let q = integrate(
        |l| reg_inc_beta(one_minus_ratio_sq(l, outer), a, 0.5).unwrap_or(f64::NAN) * (l / outer).powf(d - 1.0),
        c.r,
        outer,
        tol * c.eps,
    )?;
    // d/(2 shell) ∫ I l^{d−1} dl with l^{d−1} scaled by (R+ε)^{d−1}
    let shell_rel = c.shell() / outer.powf(d);
    Ok(d * q.value / (2.0 * shell_rel * outer))
}

/// `½ I_{1−R²/(R+ε)²}((d−1)/2, ½)`: the cap of the inradius-defining point.
pub fn cap0_hit_probability(c: &InballCondition) -> Result<f64> {
    Ok(0.5 * reg_inc_beta(c.x(), c.a(), 0.5)?)
}

/// `h(R, ε) = 2((R+ε)^d − R^d) p`.
pub fn h(c: &InballCondition) -> Result<f64> {
    Ok(2.0 * c.shell() * cap_hit_probability(c)?)
}

/// Probability that a uniform point of `∂B_{R+ε}(o)` is outside the cell.
pub fn q_probability(c: &InballCondition) -> Result<f64> {
    q_probability_with(c, AnnulusCount::default())
}

pub fn q_probability_with(c: &InballCondition, count: AnnulusCount) -> Result<f64> {
    let p0 = cap0_hit_probability(c)?;
    let p = cap_hit_probability(c)?;
    // E[(1−p)^K] = exp(−μ p) for Poisson K
    let q = 1.0 - (1.0 - p0) * (-count.mean(c) * p).exp();
    Ok(q.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub d: usize,
    pub eps: f64,
    pub r_grid: Vec<f64>,
    pub h: Vec<f64>,
    /// Least-squares slope of `log h` against `log R`.
    pub slope: f64,
    pub strictly_increasing: bool,
}

pub fn h_growth_diagnostic(d: usize, eps: f64, r_grid: &[f64]) -> Result<GrowthReport> {
    if r_grid.len() < 2 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("R grid must hold at least two increasing values");
    }
    if r_grid[r_grid.len() - 1] / r_grid[0] < 100.0 {
        return invalid("R grid must span at least two decades");
    }
    let hs = r_grid
        .iter()
        .map(|&r| h(&InballCondition::new(r, eps, d, 1.0)?))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = hs.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonConvergence {
            what: "h(R, eps) lost all precision",
            achieved: r_grid[bad],
        });
    }
    let xs: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = hs.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(GrowthReport {
        d,
        eps,
        r_grid: r_grid.to_vec(),
        strictly_increasing: hs.windows(2).all(|w| w[1] > w[0]),
        h: hs,
        slope: sxy / sxx,
    })
}

fn random_unit<R: Rng>(rng: &mut R, d: usize, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut().take(d) {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

fn midpoint_radius<R: Rng>(rng: &mut R, c: &InballCondition) -> f64 {
    // inverse of the annulus radius CDF
    let d = c.d as f64;
    let u: f64 = rng.random();
    let rd = c.r.powf(d);
    (rd + u * c.shell()).powf(1.0 / d)
}

/// A uniform point of `∂B_{R+ε}(o)` is tested against the inradius cap and
/// the caps of midpoints of the PPP points in `A(2R, 2ε)`. With `fixed_k`
/// the number of annulus points is `k` instead of a Poisson draw.
pub fn coverage_mc(c: &InballCondition, fixed_k: Option<usize>, trials: usize, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let d = c.d;
    let outer = c.outer();
    let poisson = if fixed_k.is_none() && c.lambda > 0.0 {
        Some(Poisson::new(AnnulusCount::Annulus.mean(c)).map_err(|e| Error::InvalidArgument(e.to_string()))?)
    } else {
        None
    };
    let mut rng = substream(seed, &[tag::CAPS]);
    let mut y = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..trials {
        random_unit(&mut rng, d, &mut y);
        // inradius-defining midpoint on the first axis at distance R
        let mut covered = outer * y[0] >= c.r;
        let k = match (fixed_k, &poisson) {
            (Some(k), _) => k,
            (None, Some(p)) => p.sample(&mut rng) as usize,
            (None, None) => 0,
        };
        for _ in 0..k {
            let l = midpoint_radius(&mut rng, c);
            random_unit(&mut rng, d, &mut dir);
            if !covered {
                let proj: f64 = y.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() * outer;
                covered = proj >= l;
            }
        }
        hits += covered as usize;
    }
    let n = trials as f64;
    let v = hits as f64 / n;
    Ok(McEstimate {
        value: v,
        std_error: (v * (1.0 - v) / n).sqrt(),
        trials,
    })
}
