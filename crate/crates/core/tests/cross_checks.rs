use proptest::prelude::*;
use pv_distance::moments::{approx_typical_cdf, approx_typical_moment};
use pv_distance::simulate::{ks_statistic, sample_typical_distance, sample_zerocell, EmpiricalCdf};
use pv_distance::typical1d::{typical1d_cdf, typical1d_moment};
use pv_distance::typicalexact::{typical_mean_exact, McBudget};
use pv_distance::zerocell::{contact_cdf, zerocell_moment, ModelParams};

#[test]
fn line_simulation_matches_closed_form() {
    let m = ModelParams::new(1, 2.0).unwrap();
    let e = EmpiricalCdf::new(sample_typical_distance(&m, 20_000, 3).unwrap()).unwrap();
    // 1.63/√n is the 1% KS critical value
    let ks = ks_statistic(&e, |r| typical1d_cdf(r, 2.0).unwrap());
    assert!(ks < 1.63 / (20_000f64).sqrt(), "{ks}");
    let exact = typical1d_moment(1, 2.0).unwrap();
    assert!((e.mean() - exact).abs() < 4.0 * (e.variance() / 2e4).sqrt());
}

#[test]
fn zerocell_nucleus_distance_is_contact_law() {
    // the origin is a uniform point of its own cell
    let m = ModelParams::new(2, 1.0).unwrap();
    let draws = sample_zerocell(&m, 5000, 4).unwrap();
    let e = EmpiricalCdf::new(draws.iter().map(|z| z.nucleus_norm).collect()).unwrap();
    assert!(ks_statistic(&e, |r| contact_cdf(r, &m).unwrap()) < 1.63 / 5000f64.sqrt());
    let mean = draws.iter().map(|z| z.distance).sum::<f64>() / 5000.0;
    assert!((mean - zerocell_moment(1, &m).unwrap()).abs() < 0.02);
}

#[test]
fn configuration_integral_agrees_with_simulation_in_3d() {
    let m = ModelParams::new(3, 1.0).unwrap();
    let b = McBudget {
        outer_configs: 300,
        inner_points: 300,
        ..McBudget::default()
    };
    let exact = typical_mean_exact(&m, 1.4, &b).unwrap();
    let e = EmpiricalCdf::new(sample_typical_distance(&m, 4000, 5).unwrap()).unwrap();
    let se = (exact.std_error.powi(2) + e.variance() / 4000.0).sqrt();
    assert!(
        (exact.value - e.mean()).abs() < 4.0 * se,
        "{} vs {}",
        exact.value,
        e.mean()
    );
}

proptest! {
    #[test]
    fn approx_law_scales_contact_law(d in 1usize..8, lambda in 0.1f64..5.0, r in 0.0f64..2.0, rho in 1.0f64..1.6) {
        let m = ModelParams::new(d, lambda).unwrap();
        let a = approx_typical_cdf(r, &m, rho).unwrap();
        // ρ rescales the intensity
        let scaled = ModelParams::new(d, lambda * rho).unwrap();
        prop_assert!((a - contact_cdf(r, &scaled).unwrap()).abs() < 1e-13);
        prop_assert!(a >= contact_cdf(r, &m).unwrap() - 1e-15);
        let mean = approx_typical_moment(1, &m, rho).unwrap();
        prop_assert!(mean <= zerocell_moment(1, &m).unwrap() * (1.0 + 1e-12));
    }
}
