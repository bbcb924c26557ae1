//! Monte Carlo oracle: Poisson point processes, Voronoi cell membership,
//! uniform points in the typical cell and in the 0-cell, and empirical CDFs.

use std::collections::BinaryHeap;

use log::debug;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, tag};
use crate::zerocell::ModelParams;

/// Poisson points in the ball `B_W(o)`.
#[derive(Debug, Clone, Serialize)]
pub struct PppSample {
    pub window_radius: f64,
    pub points: Vec<Vec<f64>>,
    pub intensity: f64,
}

/// Tuning of the cell samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    /// Initial window radius in units of `(λκ_d)^{-1/d}`.
    pub window_factor: f64,
    pub max_expansions: u32,
    /// Relative gap at which circumradius refinement stops.
    pub bound_gap: f64,
    /// Candidate draws per accepted point before giving up.
    pub max_rejections: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            window_factor: 4.0,
            max_expansions: 12,
            bound_gap: 0.02,
            max_rejections: 10_000_000,
        }
    }
}

pub(crate) fn unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            return v.into_iter().map(|x| x * inv).collect();
        }
    }
}

/// Uniform point in the shell `r_in ≤ ‖x‖ ≤ r_out`.
pub(crate) fn uniform_in_shell<R: Rng>(rng: &mut R, d: usize, r_in: f64, r_out: f64) -> Vec<f64> {
    let df = d as f64;
    let (a, b) = (r_in.powf(df), r_out.powf(df));
    let u: f64 = rng.random();
    let r = (a + u * (b - a)).powf(1.0 / df);
    let mut v = unit_vector(rng, d);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    Ok(p.sample(rng) as usize)
}

pub fn sample_ppp<R: Rng>(m: &ModelParams, window_radius: f64, rng: &mut R) -> Result<PppSample> {
    if !(window_radius > 0.0) || !window_radius.is_finite() {
        return invalid(format!("window radius must be finite and > 0, got {window_radius}"));
    }
    let mut s = PppSample {
        window_radius: 0.0,
        points: Vec::new(),
        intensity: m.lambda,
    };
    s.extend(m, window_radius, rng)?;
    Ok(s)
}

impl PppSample {
    /// Adds the points of an independent PPP in `B_W'(o) \ B_W(o)`.
    pub fn extend<R: Rng>(&mut self, m: &ModelParams, new_radius: f64, rng: &mut R) -> Result<()> {
        if !(new_radius > self.window_radius) {
            return invalid("window can only grow");
        }
        let d = m.d;
        let vol = m.kappa() * (new_radius.powi(d as i32) - self.window_radius.powi(d as i32));
        let k = poisson_count(rng, m.lambda * vol)?;
        for _ in 0..k {
            self.points
                .push(uniform_in_shell(rng, d, self.window_radius, new_radius));
        }
        self.window_radius = new_radius;
        Ok(())
    }
}

/// True iff no point of `ppp` is strictly closer to `y` than the origin.
pub fn in_typical_cell(y: &[f64], ppp: &PppSample) -> Result<bool> {
    let ny2: f64 = y.iter().map(|v| v * v).sum();
    if 2.0 * ny2.sqrt() > ppp.window_radius {
        return Err(Error::WindowTooSmall {
            window: ppp.window_radius,
            required: 2.0 * ny2.sqrt(),
        });
    }
    Ok(ppp.points.iter().all(|x| {
        let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let xx: f64 = x.iter().map(|a| a * a).sum();
        // ‖x − y‖² < ‖y‖²  ⇔  ‖x‖² < 2⟨x, y⟩
        xx >= 2.0 * xy
    }))
}

/// Monte Carlo estimate with standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Bounds on the circumradius (farthest boundary distance from the nucleus).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusBounds {
    pub lower: f64,
    /// Infinite when the cell is unbounded given the known points.
    pub upper: f64,
}

/// The Voronoi cell of a nucleus at the origin against a finite point set.
#[derive(Debug, Clone)]
struct CellGeometry {
    d: usize,
    /// Row-major, sorted by norm.
    pts: Vec<f64>,
    norms: Vec<f64>,
}

struct Patch {
    upper: f64,
    axis: usize,
    sign: f64,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl Eq for Patch {}
impl PartialOrd for Patch {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Patch {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

const MAX_PATCHES: usize = 200_000;

impl CellGeometry {
    fn new(d: usize, points: impl Iterator<Item = Vec<f64>>) -> Self {
        let mut v: Vec<(f64, Vec<f64>)> = points
            .map(|p| (p.iter().map(|x| x * x).sum::<f64>().sqrt(), p))
            .filter(|(n, _)| *n > 0.0)
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let norms = v.iter().map(|(n, _)| *n).collect();
        let pts = v.into_iter().flat_map(|(_, p)| p).collect();
        Self { d, pts, norms }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.pts[i * self.d..(i + 1) * self.d]
    }

    fn contains(&self, y: &[f64]) -> bool {
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, &nx) in self.norms.iter().enumerate() {
            if nx > 2.0 * ny {
                break;
            }
            let x = self.point(i);
            let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            if nx * nx < 2.0 * xy {
                return false;
            }
        }
        true
    }

    /// Distance from the origin to the cell boundary along unit `u`.
    fn ray(&self, u: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &nx) in self.norms.iter().enumerate() {
            // the bisector of x lies at distance ≥ ‖x‖/2
            if 0.5 * nx >= best {
                break;
            }
            let xu: f64 = self.point(i).iter().zip(u).map(|(a, b)| a * b).sum();
            if xu > 0.0 {
                best = best.min(nx * nx / (2.0 * xu));
            }
        }
        best
    }

    fn patch_direction(&self, axis: usize, sign: f64, center: &[f64]) -> (Vec<f64>, f64) {
        let mut p = Vec::with_capacity(self.d);
        let mut j = 0;
        for k in 0..self.d {
            if k == axis {
                p.push(sign);
            } else {
                p.push(center[j]);
                j += 1;
            }
        }
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        p.iter_mut().for_each(|x| *x /= n);
        (p, n)
    }

    /// Upper bound of the ray length over all directions within angle
    /// `delta` of unit `u`.
    fn patch_upper(&self, u: &[f64], delta: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &nx) in self.norms.iter().enumerate() {
            if 0.5 * nx >= best {
                break;
            }
            let cos_t = (self.point(i).iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / nx).clamp(-1.0, 1.0);
            let ang = cos_t.acos() + delta;
            if ang < 0.5 * std::f64::consts::PI {
                best = best.min(nx / (2.0 * ang.cos()));
            }
        }
        best
    }

    fn make_patch(&self, axis: usize, sign: f64, center: Vec<f64>, half: Vec<f64>, lower: &mut f64) -> Patch {
        let (u, pn) = self.patch_direction(axis, sign, &center);
        let h = half.iter().map(|x| x * x).sum::<f64>().sqrt();
        let delta = (h / pn).min(1.0).asin();
        *lower = lower.max(self.ray(&u));
        Patch {
            upper: self.patch_upper(&u, delta),
            axis,
            sign,
            center,
            half,
        }
    }

    /// Branch-and-bound over direction patches on the faces of the cube
    /// `[-1, 1]^d`, stopping once the largest patch bound is within
    /// `gap` (relative) of the best ray found.
    fn circumradius(&self, gap: f64) -> RadiusBounds {
        let d = self.d;
        let mut lower: f64 = 0.0;
        let mut heap = BinaryHeap::new();
        for axis in 0..d {
            for sign in [-1.0, 1.0] {
                let p = self.make_patch(axis, sign, vec![0.0; d - 1], vec![1.0; d - 1], &mut lower);
                heap.push(p);
            }
        }
        let mut patches = heap.len();
        while let Some(top) = heap.pop() {
            if lower.is_infinite() {
                return RadiusBounds {
                    lower,
                    upper: f64::INFINITY,
                };
            }
            if top.upper <= lower * (1.0 + gap) || top.half.is_empty() {
                return RadiusBounds {
                    lower,
                    upper: top.upper.max(lower),
                };
            }
            if patches >= MAX_PATCHES {
                return RadiusBounds {
                    lower,
                    upper: top.upper,
                };
            }
            let (k, &w) = top
                .half
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            for s in [-0.5, 0.5] {
                let mut center = top.center.clone();
                center[k] += s * w;
                let mut half = top.half.clone();
                half[k] = 0.5 * w;
                heap.push(self.make_patch(top.axis, top.sign, center, half, &mut lower));
            }
            patches += 2;
        }
        RadiusBounds { lower, upper: lower }
    }

    fn sample_uniform(&self, radius: f64, rng: &mut ChaCha8Rng, max_rejections: u64) -> Result<Vec<f64>> {
        for _ in 0..max_rejections {
            let y = uniform_in_shell(rng, self.d, 0.0, radius);
            if self.contains(&y) {
                return Ok(y);
            }
        }
        Err(Error::Budget(format!(
            "no accepted point after {max_rejections} candidates in a ball of radius {radius}"
        )))
    }
}

fn initial_window(m: &ModelParams, o: &SimOptions) -> f64 {
    o.window_factor * m.rate().powf(-1.0 / m.d as f64)
}

/// Typical cell whose bounding radius is certified against all PPP points.
fn certified_typical_cell(
    m: &ModelParams,
    o: &SimOptions,
    gap: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(CellGeometry, RadiusBounds)> {
    let mut ppp = sample_ppp(m, initial_window(m, o), rng)?;
    for expansion in 0..=o.max_expansions {
        let cell = CellGeometry::new(m.d, ppp.points.iter().cloned());
        let b = cell.circumradius(gap);
        // points beyond W have bisectors beyond W/2
        if b.upper.is_finite() && 2.0 * b.upper <= ppp.window_radius {
            return Ok((cell, b));
        }
        if expansion < o.max_expansions {
            debug!("typical cell not contained in window {}; doubling", ppp.window_radius);
            let w = 2.0 * ppp.window_radius;
            ppp.extend(m, w, rng)?;
        }
    }
    Err(Error::Containment {
        expansions: o.max_expansions as usize,
        window: ppp.window_radius,
    })
}

/// Uniform point of the typical cell; returns its distance to the nucleus.
fn typical_draw(m: &ModelParams, o: &SimOptions, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (cell, b) = certified_typical_cell(m, o, o.bound_gap, rng)?;
    let y = cell.sample_uniform(b.upper, rng, o.max_rejections)?;
    Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// One draw from the 0-cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCellDraw {
    /// Distance from the uniform point to the nucleus.
    pub distance: f64,
    /// Distance from the origin to the nucleus.
    pub nucleus_norm: f64,
}

fn zerocell_draw(m: &ModelParams, o: &SimOptions, rng: &mut ChaCha8Rng) -> Result<ZeroCellDraw> {
    let mut ppp = sample_ppp(m, initial_window(m, o), rng)?;
    for expansion in 0..=o.max_expansions {
        let nearest = ppp
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.iter().map(|x| x * x).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((idx, n2)) = nearest {
            let xo = ppp.points[idx].clone();
            let rel = ppp
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, p)| p.iter().zip(&xo).map(|(a, b)| a - b).collect());
            let cell = CellGeometry::new(m.d, rel);
            let b = cell.circumradius(o.bound_gap);
            let xo_norm = n2.sqrt();
            if b.upper.is_finite() && xo_norm + 2.0 * b.upper <= ppp.window_radius {
                let y = cell.sample_uniform(b.upper, rng, o.max_rejections)?;
                return Ok(ZeroCellDraw {
                    distance: y.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    nucleus_norm: xo_norm,
                });
            }
        }
        if expansion < o.max_expansions {
            let w = 2.0 * ppp.window_radius;
            ppp.extend(m, w, rng)?;
        }
    }
    Err(Error::Containment {
        expansions: o.max_expansions as usize,
        window: ppp.window_radius,
    })
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return invalid("sample count must be >= 1");
    }
    Ok(())
}

/// `n` distances from the nucleus to a uniform point of the typical cell.
/// Sample `i` uses its own substream, so the output does not depend on the
/// number of worker threads.
pub fn sample_typical_distance(m: &ModelParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_typical_distance_with(m, n, seed, &SimOptions::default())
}

pub fn sample_typical_distance_with(m: &ModelParams, n: usize, seed: u64, o: &SimOptions) -> Result<Vec<f64>> {
    check_n(n)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| typical_draw(m, o, &mut substream(seed, &[tag::TYPICAL, i])))
        .collect()
}

pub fn sample_zerocell(m: &ModelParams, n: usize, seed: u64) -> Result<Vec<ZeroCellDraw>> {
    check_n(n)?;
    let o = SimOptions::default();
    (0..n as u64)
        .into_par_iter()
        .map(|i| zerocell_draw(m, &o, &mut substream(seed, &[tag::ZEROCELL, i])))
        .collect()
}

/// `n` distances from the nucleus of the 0-cell to a uniform point of it.
pub fn sample_zerocell_distance(m: &ModelParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_zerocell(m, n, seed)?.into_iter().map(|z| z.distance).collect())
}

/// Circumradii of `n` independent typical cells, each bracketed to
/// relative width `1e-6` (the lower end is returned).
pub fn sample_circumradius(m: &ModelParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_n(n)?;
    let o = SimOptions::default();
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[tag::FARTHEST, i]);
            Ok(certified_typical_cell(m, &o, 1e-6, &mut rng)?.1.lower)
        })
        .collect()
}

/// Empirical `q`-quantile of the distance from the nucleus to the farthest
/// point of the typical cell.
pub fn farthest_point_quantile(m: &ModelParams, q: f64, n: usize, seed: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return invalid(format!("quantile level must be in [0, 1), got {q}"));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let e = EmpiricalCdf::new(sample_circumradius(m, n, seed)?)?;
    Ok(e.quantile(q))
}

/// Sorted sample with step-function CDF.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return invalid("empirical CDF needs at least one sample");
        }
        if samples.iter().any(|v| v.is_nan()) {
            return invalid("samples contain NaN");
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Smallest sample with `eval ≥ q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mu = self.mean();
        self.sorted.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64
    }
}

/// `sup_x |F_n(x) − F(x)|`, evaluated at both sides of every jump.
pub fn ks_statistic<F: Fn(f64) -> f64>(e: &EmpiricalCdf, cdf: F) -> f64 {
    let n = e.len() as f64;
    e.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic `sup_x |F_n(x) − G_m(x)|`.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a.sorted[i].min(b.sorted[j]);
        while i < a.len() && a.sorted[i] <= x {
            i += 1;
        }
        while j < b.len() && b.sorted[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}
