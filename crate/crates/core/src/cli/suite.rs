//! Acceptance checks shared by `pv-distance validate` and the acceptance
//! test target. Every tolerance is a named constant below.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::{cmd_contact_cdf, cmd_limit_shape, cmd_typical_cdf, BudgetArgs, Method};
use crate::curve::{DistributionCurve, GridSpec};
use crate::error::Result;
use crate::geometry::{union_volume, union_volume_lens};
use crate::limitshape::{
    cap_hit_probability, cap_hit_probability_quadrature, h_growth_diagnostic, q_probability_with, AnnulusCount,
    InballCondition,
};
use crate::moments::{
    approx_typical_moment, approx_typical_variance, covariance_ball_cell, moment_report, rho, small_radius_check,
};
use crate::rng::{substream, tag};
use crate::simulate::{ks_statistic, sample_typical_distance, sample_zerocell_distance, EmpiricalCdf};
use crate::typical1d::{deconditioning_integrals, int1_closed, typical1d_cdf, typical1d_moment};
use crate::typicalexact::{typical_cdf_exact_curve, ExactCurve, McBudget};
use crate::zerocell::{contact_cdf, zerocell_moment, ModelParams};

pub const ALL: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Reference `ρ_d`, `d = 1..=10`.
pub const RHO_REF: [f64; 10] = [1.500, 1.285, 1.171, 1.128, 1.079, 1.062, 1.043, 1.032, 1.029, 1.018];
pub const MEAN_APPROX_REF: [f64; 10] = [0.333, 0.442, 0.524, 0.591, 0.648, 0.698, 0.745, 0.789, 0.829, 0.862];
pub const VAR_APPROX_REF: [f64; 10] = [0.111, 0.053, 0.036, 0.028, 0.022, 0.018, 0.015, 0.013, 0.012, 0.011];
pub const MEAN_EXACT_REF: [f64; 3] = [0.305, 0.445, 0.529];

pub const RHO_QUAD_TOL: f64 = 1e-8;
pub const RHO_REF_TOL: f64 = 0.02;
pub const APPROX_TOL: f64 = 0.005;
pub const D1_EXACT_TOL: f64 = 0.002;
pub const EXACT_TOL: f64 = 0.01;
pub const ELL_D2: f64 = 1.6;
pub const ZEROCELL_MEAN_REF: f64 = 0.5;
pub const ZEROCELL_CLOSED_TOL: f64 = 1e-12;
pub const ZEROCELL_SIM_TOL: f64 = 0.005;
pub const SIM_SAMPLES: usize = 100_000;
pub const D3_MEAN_SAMPLES: usize = 20_000;
pub const KS_TOL: f64 = 0.01;
pub const SUP_GAP_TOL: f64 = 0.02;
pub const DECONDITIONING_TOL: f64 = 1e-6;
pub const INT1_TOL: f64 = 1e-12;
pub const CAP_HIT_TOL: f64 = 1e-8;
pub const CAP_HIT_QUAD_TOL: f64 = 1e-12;
pub const CAP_HIT_CASES: usize = 100;
pub const UNION_REL_TOL: f64 = 1e-6;
pub const UNION_CASES: usize = 1000;
pub const HIT_CASES: usize = 20;
pub const HIT_SAMPLES: usize = 200_000;
pub const HIT_SIGMAS: f64 = 3.0;
pub const COV_QUAD_TOL: f64 = 1e-10;
pub const COV_ZERO_REL: f64 = 1e-6;
pub const COV_LARGE_R: f64 = 8.0;
pub const COV_LARGE_BAND: (f64, f64) = (0.99, 1.01);
pub const SMALL_RADII: [f64; 3] = [0.2, 0.1, 0.05];
pub const SMALL_RADIUS_QUAD_TOL: f64 = 1e-11;
pub const Q_GRID: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
pub const Q_EPS: f64 = 0.1;
pub const Q_FINAL_MIN: f64 = 0.999;
pub const SLOPE_GRID: [f64; 4] = [10.0, 100.0, 1000.0, 10000.0];
pub const SLOPE_TOL: f64 = 0.1;
pub const CURVE_SLACK: f64 = 1e-12;
pub const BAND_SIGMAS: f64 = 3.0;
/// DKW band level for an empirical CDF.
pub const DKW_ALPHA: f64 = 1e-3;
pub const RHO_LAMBDA_ALT: f64 = 2.5;
pub const RHO_INVARIANCE_TOL: f64 = 1e-6;
pub const DETERMINISM_SAMPLES: usize = 2000;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub ks_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            ks_tol: KS_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Part {
    pub label: String,
    pub measured: String,
    pub target: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub parts: Vec<Part>,
    pub seconds: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| {
                format!(
                    "{} {} [{} vs {}]",
                    if p.passed { "ok" } else { "FAIL" },
                    p.label,
                    p.measured,
                    p.target
                )
            })
            .collect();
        format!(
            "{} criterion {:>2} {} ({:.1}s): {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            parts.join("; ")
        )
    }

    pub fn part(&self, label: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.label == label)
    }
}

fn part(label: impl Into<String>, measured: impl Into<String>, target: impl Into<String>, passed: bool) -> Part {
    Part {
        label: label.into(),
        measured: measured.into(),
        target: target.into(),
        passed,
    }
}

fn within(label: impl Into<String>, value: f64, reference: f64, tol: f64) -> Part {
    part(
        label,
        format!("{value:.6}"),
        format!("{reference} ± {tol}"),
        (value - reference).abs() <= tol,
    )
}

fn below(label: impl Into<String>, value: f64, bound: f64) -> Part {
    part(label, format!("{value:.3e}"), format!("< {bound:e}"), value < bound)
}

fn failed(label: impl Into<String>, e: &crate::error::Error) -> Part {
    part(label, format!("error: {e}"), "no error", false)
}

fn mp(d: usize) -> ModelParams {
    ModelParams::new(d, 1.0).expect("valid model")
}

/// Runs criteria by number, caching the expensive samples they share.
pub struct Suite {
    pub cfg: SuiteConfig,
    rho: HashMap<usize, f64>,
    typical: HashMap<(usize, usize), EmpiricalCdf>,
    zerocell: HashMap<usize, EmpiricalCdf>,
    exact_d2: Option<ExactCurve>,
}

impl Suite {
    pub fn new(cfg: SuiteConfig) -> Self {
        Self {
            cfg,
            rho: HashMap::new(),
            typical: HashMap::new(),
            zerocell: HashMap::new(),
            exact_d2: None,
        }
    }

    pub fn run(&mut self, id: u32) -> Result<Criterion> {
        let t = Instant::now();
        let (title, parts) = match id {
            1 => ("rho row", self.c1()),
            2 => ("approximate mean and variance rows", self.c2()),
            3 => ("exact mean row", self.c3()),
            4 => ("0-cell mean anchor", self.c4()),
            5 => ("oracle equivalence", self.c5()),
            6 => ("line deconditioning integrals", self.c6()),
            7 => ("cap-hit closed form", self.c7()),
            8 => ("two-ball union volume", self.c8()),
            9 => ("covariance limits", self.c9()),
            10 => ("inball sphericity grid", self.c10()),
            11 => ("property suite", self.c11()),
            other => return crate::error::invalid(format!("no criterion {other}")),
        };
        Ok(Criterion {
            id,
            title,
            parts,
            seconds: t.elapsed().as_secs_f64(),
        })
    }

    fn rho_d(&mut self, d: usize) -> Result<f64> {
        if let Some(&v) = self.rho.get(&d) {
            return Ok(v);
        }
        let v = rho(&mp(d), RHO_QUAD_TOL)?;
        self.rho.insert(d, v);
        Ok(v)
    }

    fn typical_sample(&mut self, d: usize, n: usize) -> Result<&EmpiricalCdf> {
        if !self.typical.contains_key(&(d, n)) {
            let e = EmpiricalCdf::new(sample_typical_distance(&mp(d), n, self.cfg.seed)?)?;
            self.typical.insert((d, n), e);
        }
        Ok(&self.typical[&(d, n)])
    }

    fn zerocell_sample(&mut self, d: usize) -> Result<&EmpiricalCdf> {
        if !self.zerocell.contains_key(&d) {
            let e = EmpiricalCdf::new(sample_zerocell_distance(&mp(d), SIM_SAMPLES, self.cfg.seed)?)?;
            self.zerocell.insert(d, e);
        }
        Ok(&self.zerocell[&d])
    }

    fn exact_grid() -> Vec<f64> {
        (0..=160).map(|i| i as f64 * ELL_D2 / 160.0).collect()
    }

    fn exact_curve_d2(&mut self) -> Result<&ExactCurve> {
        if self.exact_d2.is_none() {
            let b = McBudget {
                seed: self.cfg.seed,
                ..McBudget::default()
            };
            self.exact_d2 = Some(typical_cdf_exact_curve(&Self::exact_grid(), &mp(2), ELL_D2, &b)?);
        }
        Ok(self.exact_d2.as_ref().unwrap())
    }

    fn c1(&mut self) -> Vec<Part> {
        (1..=10)
            .map(|d| match self.rho_d(d) {
                Ok(v) => within(format!("d={d}"), v, RHO_REF[d - 1], RHO_REF_TOL),
                Err(e) => failed(format!("d={d}"), &e),
            })
            .collect()
    }

    fn c2(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        for d in 1..=10 {
            let m = mp(d);
            let r = self
                .rho_d(d)
                .and_then(|r| Ok((approx_typical_moment(1, &m, r)?, approx_typical_variance(&m, r)?)));
            match r {
                Ok((mean, var)) => {
                    parts.push(within(format!("mean d={d}"), mean, MEAN_APPROX_REF[d - 1], APPROX_TOL));
                    parts.push(within(format!("var d={d}"), var, VAR_APPROX_REF[d - 1], APPROX_TOL));
                }
                Err(e) => parts.push(failed(format!("d={d}"), &e)),
            }
        }
        parts
    }

    fn c3(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        match typical1d_moment(1, 1.0) {
            Ok(v) => parts.push(within("d=1 closed form", v, MEAN_EXACT_REF[0], D1_EXACT_TOL)),
            Err(e) => parts.push(failed("d=1 closed form", &e)),
        }
        match self.exact_curve_d2() {
            Ok(c) => parts.push(within("d=2 configurations", c.mean, MEAN_EXACT_REF[1], EXACT_TOL)),
            Err(e) => parts.push(failed("d=2 configurations", &e)),
        }
        match self.typical_sample(2, SIM_SAMPLES) {
            Ok(e) => parts.push(within("d=2 simulation", e.mean(), MEAN_EXACT_REF[1], EXACT_TOL)),
            Err(e) => parts.push(failed("d=2 simulation", &e)),
        }
        match self.typical_sample(3, D3_MEAN_SAMPLES) {
            Ok(e) => parts.push(within("d=3 simulation", e.mean(), MEAN_EXACT_REF[2], EXACT_TOL)),
            Err(e) => parts.push(failed("d=3 simulation", &e)),
        }
        parts
    }

    fn c4(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        match zerocell_moment(1, &mp(2)) {
            Ok(v) => parts.push(within("closed form", v, ZEROCELL_MEAN_REF, ZEROCELL_CLOSED_TOL)),
            Err(e) => parts.push(failed("closed form", &e)),
        }
        match self.zerocell_sample(2) {
            Ok(e) => parts.push(within("simulation", e.mean(), ZEROCELL_MEAN_REF, ZEROCELL_SIM_TOL)),
            Err(e) => parts.push(failed("simulation", &e)),
        }
        parts
    }

    fn c5(&mut self) -> Vec<Part> {
        let ks_tol = self.cfg.ks_tol;
        let mut parts = Vec::new();
        for d in 1..=3 {
            let m = mp(d);
            let label = format!("0-cell KS d={d}");
            match self.zerocell_sample(d) {
                Ok(e) => parts.push(below(
                    label,
                    ks_statistic(e, |r| contact_cdf(r, &m).unwrap_or(f64::NAN)),
                    ks_tol,
                )),
                Err(e) => parts.push(failed(label, &e)),
            }
        }
        match self.typical_sample(1, SIM_SAMPLES) {
            Ok(e) => parts.push(below(
                "typical KS d=1",
                ks_statistic(e, |r| typical1d_cdf(r, 1.0).unwrap_or(f64::NAN)),
                ks_tol,
            )),
            Err(e) => parts.push(failed("typical KS d=1", &e)),
        }
        let gap = self
            .exact_curve_d2()
            .map(|c| (c.z.clone(), c.cdf.clone()))
            .and_then(|(z, f)| {
                let e = self.typical_sample(2, SIM_SAMPLES)?;
                Ok(z.iter()
                    .zip(&f)
                    .map(|(&r, &v)| (e.eval(r) - v).abs())
                    .fold(0.0, f64::max))
            });
        match gap {
            Ok(g) => parts.push(below("configurations vs simulation sup gap d=2", g, SUP_GAP_TOL)),
            Err(e) => parts.push(failed("configurations vs simulation sup gap d=2", &e)),
        }
        parts
    }

    fn c6(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        for r in [0.1, 0.5, 1.0, 2.0] {
            let res = deconditioning_integrals(r, 1.0).and_then(|a| Ok((a, typical1d_cdf(r, 1.0)?)));
            match res {
                Ok((a, closed)) => {
                    parts.push(below(
                        format!("r={r} total"),
                        (a.total - closed).abs(),
                        DECONDITIONING_TOL,
                    ));
                    parts.push(below(
                        format!("r={r} first integral"),
                        (a.int1 - int1_closed(r, 1.0)).abs(),
                        INT1_TOL,
                    ));
                }
                Err(e) => parts.push(failed(format!("r={r}"), &e)),
            }
        }
        parts
    }

    fn c7(&mut self) -> Vec<Part> {
        let mut rng = substream(self.cfg.seed, &[tag::CHECKS, 7]);
        let mut worst: f64 = 0.0;
        for _ in 0..CAP_HIT_CASES {
            let d = rng.random_range(2..=10);
            let r = 10f64.powf(rng.random_range(-1.0..2.0));
            let eps = 10f64.powf(rng.random_range(-2.0..1.0));
            let res = InballCondition::new(r, eps, d, 1.0).and_then(|c| {
                Ok((
                    cap_hit_probability(&c)?,
                    cap_hit_probability_quadrature(&c, CAP_HIT_QUAD_TOL)?,
                ))
            });
            match res {
                Ok((p, q)) => worst = worst.max((p - q).abs()),
                Err(e) => return vec![failed(format!("d={d} R={r:.3} eps={eps:.3}"), &e)],
            }
        }
        vec![below(
            format!("max |closed - quadrature| over {CAP_HIT_CASES} cases"),
            worst,
            CAP_HIT_TOL,
        )]
    }

    fn c8(&mut self) -> Vec<Part> {
        let mut rng = substream(self.cfg.seed, &[tag::CHECKS, 8]);
        let mut worst: f64 = 0.0;
        for _ in 0..UNION_CASES {
            let d = rng.random_range(1..=10);
            let v1 = rng.random_range(0.01..3.0);
            let v2 = rng.random_range(0.01..3.0);
            let u = rng.random_range(0.0..PI);
            match union_volume(v1, v2, u, d).and_then(|a| Ok((a, union_volume_lens(v1, v2, u, d)?))) {
                Ok((a, b)) => worst = worst.max((a - b).abs() / b),
                Err(e) => return vec![failed("union volume", &e)],
            }
        }
        let mut parts = vec![below(
            format!("max relative gap over {UNION_CASES} cases"),
            worst,
            UNION_REL_TOL,
        )];
        let mut worst_z: f64 = 0.0;
        for i in 0..HIT_CASES {
            let mut rng = substream(self.cfg.seed, &[tag::CHECKS, 8, i as u64]);
            let d = rng.random_range(2..=4);
            let v1 = rng.random_range(0.2..2.0);
            let v2 = rng.random_range(0.2..2.0);
            let u = rng.random_range(0.0..PI);
            let c1: Vec<f64> = (0..d).map(|k| if k == 0 { v1 } else { 0.0 }).collect();
            let c2: Vec<f64> = (0..d)
                .map(|k| match k {
                    0 => v2 * u.cos(),
                    1 => v2 * u.sin(),
                    _ => 0.0,
                })
                .collect();
            let half = 2.0 * v1.max(v2);
            let inside =
                |p: &[f64], c: &[f64], v: f64| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < v * v;
            let mut p = vec![0.0; d];
            let mut hits = 0usize;
            for _ in 0..HIT_SAMPLES {
                p.iter_mut().for_each(|x| *x = rng.random_range(-half..half));
                if inside(&p, &c1, v1) || inside(&p, &c2, v2) {
                    hits += 1;
                }
            }
            let boxv = (2.0 * half).powi(d as i32);
            let f = hits as f64 / HIT_SAMPLES as f64;
            let est = boxv * f;
            let se = boxv * (f * (1.0 - f) / HIT_SAMPLES as f64).sqrt();
            match union_volume(v1, v2, u, d) {
                Ok(v) => worst_z = worst_z.max((est - v).abs() / se),
                Err(e) => return vec![failed("hit test", &e)],
            }
        }
        parts.push(part(
            format!("max |z| of hit-test estimates over {HIT_CASES} cases"),
            format!("{worst_z:.2}"),
            format!("<= {HIT_SIGMAS}"),
            worst_z <= HIT_SIGMAS,
        ));
        parts
    }

    fn c9(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        for d in 1..=3 {
            let m = mp(d);
            let res = moment_report(&m, COV_QUAD_TOL).and_then(|rep| {
                Ok((
                    rep.var_v,
                    covariance_ball_cell(0.0, &m, COV_QUAD_TOL)?,
                    covariance_ball_cell(COV_LARGE_R, &m, COV_QUAD_TOL)?,
                ))
            });
            match res {
                Ok((var, c0, big)) => {
                    parts.push(below(format!("|Cov(0)|/Var d={d}"), c0.abs() / var, COV_ZERO_REL));
                    let ratio = big / var;
                    parts.push(part(
                        format!("Cov({COV_LARGE_R})/Var d={d}"),
                        format!("{ratio:.8}"),
                        format!("in [{}, {}]", COV_LARGE_BAND.0, COV_LARGE_BAND.1),
                        ratio >= COV_LARGE_BAND.0 && ratio <= COV_LARGE_BAND.1,
                    ));
                }
                Err(e) => parts.push(failed(format!("d={d}"), &e)),
            }
        }
        for d in [1, 2] {
            match small_radius_check(&mp(d), &SMALL_RADII, SMALL_RADIUS_QUAD_TOL) {
                Ok(rep) => parts.push(part(
                    format!("Cov(r)/r^d on {SMALL_RADII:?} d={d}"),
                    format!("{:.6?}", rep.ratios),
                    "positive, strictly decreasing",
                    rep.strictly_decreasing && rep.positive,
                )),
                Err(e) => parts.push(failed(format!("small-r ratios d={d}"), &e)),
            }
        }
        parts
    }

    fn c10(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        let q = |count| {
            Q_GRID
                .iter()
                .map(|&r| q_probability_with(&InballCondition::new(r, Q_EPS, 2, 1.0)?, count))
                .collect::<Result<Vec<f64>>>()
        };
        match q(AnnulusCount::Annulus).and_then(|a| Ok((a, q(AnnulusCount::MidpointAnnulus)?))) {
            Ok((qs, reference)) => {
                let last = qs[qs.len() - 1];
                parts.push(part(
                    format!("Q_2(R, {Q_EPS}) on {Q_GRID:?}"),
                    format!("{qs:.6?} (reference count: {reference:.6?})"),
                    format!("increasing, final > {Q_FINAL_MIN}"),
                    qs.windows(2).all(|w| w[1] > w[0]) && last > Q_FINAL_MIN,
                ));
            }
            Err(e) => parts.push(failed("Q grid", &e)),
        }
        for d in [2, 3] {
            match h_growth_diagnostic(d, Q_EPS, &SLOPE_GRID) {
                Ok(g) => parts.push(within(
                    format!("h slope d={d}"),
                    g.slope,
                    0.5 * (d as f64 + 1.0),
                    SLOPE_TOL,
                )),
                Err(e) => parts.push(failed(format!("h slope d={d}"), &e)),
            }
        }
        parts
    }

    fn c11(&mut self) -> Vec<Part> {
        let mut parts = Vec::new();
        let grid = GridSpec::new(0.0, 2.0, 201).expect("valid grid");
        let budget = BudgetArgs {
            seed: self.cfg.seed,
            samples: DETERMINISM_SAMPLES,
            inner_samples: 200,
            ell: None,
            kmax: None,
            tail_tol: 1e-6,
        };

        let mut curves: Vec<(String, Result<DistributionCurve>)> = Vec::new();
        for d in 1..=3 {
            curves.push((format!("contact d={d}"), cmd_contact_cdf(&mp(d), &grid)));
            curves.push((
                format!("approx d={d}"),
                cmd_typical_cdf(Method::Approx, &mp(d), &budget, &grid),
            ));
        }
        curves.push((
            "d1-closed".into(),
            cmd_typical_cdf(Method::D1Closed, &mp(1), &budget, &grid),
        ));
        curves.push((
            "simulate d=2".into(),
            cmd_typical_cdf(Method::Simulate, &mp(2), &budget, &grid),
        ));
        let exact_small = BudgetArgs {
            samples: 200,
            ell: Some(ELL_D2),
            ..budget.clone()
        };
        curves.push((
            "exact d=2".into(),
            cmd_typical_cdf(Method::Exact, &mp(2), &exact_small, &grid),
        ));
        curves.push((
            "limit-shape d=2".into(),
            cmd_limit_shape(2, 1.0, Q_EPS, AnnulusCount::Annulus, &Q_GRID),
        ));
        let bad: Vec<String> = curves
            .iter()
            .filter(|(_, c)| !c.as_ref().is_ok_and(|c| c.is_cdf_like(CURVE_SLACK)))
            .map(|(n, _)| n.clone())
            .collect();
        parts.push(part(
            format!("{} emitted curves monotone in [0, 1]", curves.len()),
            if bad.is_empty() {
                "all".to_string()
            } else {
                format!("violations: {bad:?}")
            },
            "all",
            bad.is_empty(),
        ));

        // 0-cell law below the typical law
        let m1 = mp(1);
        let d1_worst = (1..=400)
            .map(|i| {
                let r = i as f64 * 0.01;
                Ok(contact_cdf(r, &m1)? - typical1d_cdf(r, 1.0)?)
            })
            .collect::<Result<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max));
        match d1_worst {
            Ok(w) => parts.push(part(
                "dominance d=1 closed forms",
                format!("max F_0 - F = {w:.2e}"),
                "<= 1e-15",
                w <= 1e-15,
            )),
            Err(e) => parts.push(failed("dominance d=1", &e)),
        }
        let m2 = mp(2);
        match self.exact_curve_d2() {
            Ok(c) => {
                let worst = c
                    .z
                    .iter()
                    .zip(c.cdf.iter().zip(&c.std_error))
                    .map(|(&r, (&f, &se))| (contact_cdf(r, &m2).unwrap_or(f64::NAN) - f - BAND_SIGMAS * se).max(0.0))
                    .fold(0.0, f64::max);
                parts.push(part(
                    "dominance d=2 configurations",
                    format!("max excess over {BAND_SIGMAS}σ band = {worst:.2e}"),
                    "0",
                    worst <= 0.0,
                ));
            }
            Err(e) => parts.push(failed("dominance d=2 configurations", &e)),
        }
        match self.typical_sample(2, SIM_SAMPLES) {
            Ok(e) => {
                let band = ((2.0 / DKW_ALPHA).ln() / (2.0 * e.len() as f64)).sqrt();
                let worst = e
                    .values()
                    .iter()
                    .map(|&r| contact_cdf(r, &m2).unwrap_or(f64::NAN) - e.eval(r) - band)
                    .fold(0.0, f64::max);
                parts.push(part(
                    "dominance d=2 simulation",
                    format!("max excess over DKW band {band:.4} = {worst:.2e}"),
                    "0",
                    worst <= 0.0,
                ));
            }
            Err(e) => parts.push(failed("dominance d=2 simulation", &e)),
        }

        let rhos: Result<Vec<f64>> = (1..=10).map(|d| self.rho_d(d)).collect();
        match rhos {
            Ok(v) => {
                let ok = v.iter().all(|&x| x >= 1.0) && v.windows(2).all(|w| w[1] < w[0]);
                parts.push(part("rho >= 1 and decreasing in d", format!("{v:.5?}"), "true", ok));
            }
            Err(e) => parts.push(failed("rho ordering", &e)),
        }
        let inv = [2, 5]
            .iter()
            .map(|&d| Ok((self.rho_d(d)? - rho(&ModelParams::new(d, RHO_LAMBDA_ALT)?, RHO_QUAD_TOL)?).abs()))
            .collect::<Result<Vec<f64>>>();
        match inv {
            Ok(v) => parts.push(below(
                format!("rho(λ=1) vs rho(λ={RHO_LAMBDA_ALT}) d=2,5"),
                v.into_iter().fold(0.0, f64::max),
                RHO_INVARIANCE_TOL,
            )),
            Err(e) => parts.push(failed("rho invariance", &e)),
        }

        let seed = self.cfg.seed;
        let det = (|| -> Result<bool> {
            let a = sample_typical_distance(&m2, DETERMINISM_SAMPLES, seed)?;
            let b = sample_typical_distance(&m2, DETERMINISM_SAMPLES, seed)?;
            let za = sample_zerocell_distance(&m2, DETERMINISM_SAMPLES / 4, seed)?;
            let zb = sample_zerocell_distance(&m2, DETERMINISM_SAMPLES / 4, seed)?;
            let eb = McBudget {
                outer_configs: 100,
                inner_points: 100,
                seed,
                ..McBudget::default()
            };
            let grid = Self::exact_grid();
            let ea = typical_cdf_exact_curve(&grid, &m2, ELL_D2, &eb)?;
            let ec = typical_cdf_exact_curve(&grid, &m2, ELL_D2, &eb)?;
            Ok(a == b && za == zb && ea.cdf == ec.cdf && ea.mean == ec.mean)
        })();
        match det {
            Ok(same) => parts.push(part("fixed-seed reruns bit-identical", format!("{same}"), "true", same)),
            Err(e) => parts.push(failed("determinism", &e)),
        }
        parts
    }
}
