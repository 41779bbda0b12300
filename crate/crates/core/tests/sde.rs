use fblab::drift::{constant_drift, hardy_drift, zero_drift};
use fblab::mollifier::build_regularized_drift_within;
use fblab::rational::rat;
use fblab::sde::{blowup_probe, blowup_sweep, euler_maruyama, weak_compare, EnsembleSpec, PdeConfig, PdeMethod, TerminalFunction};
use fblab::Error;

#[test]
fn brownian_moments() {
    let spec = EnsembleSpec::new(zero_drift(3), vec![0.0; 3], 1.0, 0.05, 20_000, 11);
    let sq = euler_maruyama(&spec, &TerminalFunction::NormSquared).unwrap();
    assert!((sq.mean - 6.0).abs() < 3.0 * sq.std_err, "{} ± {}", sq.mean, sq.std_err);
    let x = euler_maruyama(&spec, &TerminalFunction::Coordinate(0)).unwrap();
    assert!(x.mean.abs() < 3.0 * x.std_err);
    for k in 0..3 {
        // variance 2T per coordinate; the sample variance has relative SE ≈ √(2/n)
        assert!((sq.terminal_variance[k] / 2.0 - 1.0).abs() < 3.0 * (2.0f64 / 20_000.0).sqrt());
    }
}

#[test]
fn constant_drift_shifts_the_mean() {
    let c = vec![0.7, -0.3];
    let spec = EnsembleSpec::new(constant_drift(c.clone()), vec![1.0, 2.0], 2.0, 0.1, 10_000, 5);
    for k in 0..2 {
        let s = euler_maruyama(&spec, &TerminalFunction::Coordinate(k)).unwrap();
        let expected = spec.x0[k] - c[k] * 2.0;
        assert!((s.mean - expected).abs() < 3.0 * s.std_err, "{k}: {} vs {expected}", s.mean);
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let base = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let drift = build_regularized_drift_within(&base, 2, 0.04, Some(12.0)).unwrap();
    let spec = EnsembleSpec::new(drift, vec![0.5, 0.0, 0.2], 0.5, 0.01, 3000, 42);
    let f = TerminalFunction::Gaussian { amplitude: 1.0, center: vec![0.0; 3], width: 1.0 };
    let a = euler_maruyama(&spec, &f).unwrap();
    let b = euler_maruyama(&spec, &f).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    let mut other = spec.clone();
    other.seed = 43;
    assert_ne!(euler_maruyama(&other, &f).unwrap().mean, a.mean);
}

#[test]
fn singular_drift_is_rejected() {
    let spec = EnsembleSpec::new(hardy_drift::<f64>(3, &rat(1, 4)).unwrap(), vec![1.0, 0.0, 0.0], 1.0, 0.1, 10, 1);
    assert!(matches!(euler_maruyama(&spec, &TerminalFunction::NormSquared), Err(Error::UnboundedDrift)));
    let uneven = EnsembleSpec::new(zero_drift::<f64>(3), vec![0.0; 3], 1.0, 0.3, 10, 1);
    assert!(euler_maruyama(&uneven, &TerminalFunction::NormSquared).is_err());
}

fn small_pde() -> PdeConfig {
    PdeConfig { r_max: 10.0, n_r: 1000, half_width: 7.0, n_cartesian: 56 }
}

#[test]
fn weak_comparison_heat_and_shift() {
    let f = TerminalFunction::Gaussian { amplitude: 1.0, center: vec![0.2, -0.1, 0.0], width: 1.0 };
    let spec = EnsembleSpec::new(zero_drift(3), vec![0.5, 0.0, 0.0], 1.0, 0.05, 20_000, 3);
    let rep = weak_compare(&spec, &f, &small_pde()).unwrap();
    assert_eq!(rep.method, PdeMethod::RadialShifted);
    // the Gaussian heat flow is explicit: (1 + 4T/w²)^{-3/2} e^{-|y|²/(w² + 4T)}
    let y2: f64 = 0.3f64 * 0.3 + 0.1 * 0.1;
    let exact = 5.0f64.powf(-1.5) * (-y2 / 5.0).exp();
    assert!((rep.pde_value - exact).abs() < 1e-4, "{} vs {exact}", rep.pde_value);
    assert!(rep.sde_bias < 1e-12);
    assert!(rep.passed && rep.discrepancy <= 3.0 * rep.std_err + rep.pde_err, "{rep:?}");

    let c = vec![0.5, 0.0, -0.25];
    let spec = EnsembleSpec::new(constant_drift(c), vec![0.5, 0.0, 0.0], 1.0, 0.05, 20_000, 4);
    let rep = weak_compare(&spec, &f, &small_pde()).unwrap();
    let y2: f64 = 0.2f64 * 0.2 + 0.1 * 0.1 + 0.25 * 0.25;
    let exact = 5.0f64.powf(-1.5) * (-y2 / 5.0).exp();
    assert!((rep.pde_value - exact).abs() < 1e-4);
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn weak_comparison_mollified_hardy() {
    let base = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let drift = build_regularized_drift_within(&base, 2, 0.04, Some(12.0)).unwrap();
    let f = TerminalFunction::Gaussian { amplitude: 1.0, center: vec![0.0; 3], width: 1.0 };
    let spec = EnsembleSpec::new(drift, vec![1.0, 0.0, 0.0], 1.0, 0.01, 20_000, 8);
    let rep = weak_compare(&spec, &f, &small_pde()).unwrap();
    assert_eq!(rep.method, PdeMethod::Radial);
    assert!(rep.passed, "{rep:?}");
    // the attracting drift keeps more mass near the origin than the heat flow
    let heat = 5.0f64.powf(-1.5) * (-1.0f64 / 5.0).exp();
    assert!(rep.pde_value > heat);
}

#[test]
fn weak_comparison_on_the_full_grid() {
    let drift = fblab::drift::bump_drift(vec![0.8, -0.4], vec![0.3, 0.0], 1.0).unwrap();
    let f = TerminalFunction::Gaussian { amplitude: 1.0, center: vec![0.0, 0.5], width: 1.0 };
    let spec = EnsembleSpec::new(drift, vec![0.4, 0.0], 0.5, 0.01, 20_000, 9);
    let rep = weak_compare(&spec, &f, &PdeConfig { n_cartesian: 112, ..small_pde() }).unwrap();
    assert_eq!(rep.method, PdeMethod::Cartesian);
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn blowup_probe_limits() {
    // points are polar for Brownian motion in d = 3
    let row = blowup_probe(3, &rat(0, 1), &[0.05, 0.0, 0.0], 1e-3, 1.0, 1e-3, 2000, 7).unwrap();
    assert!(row.hit_fraction < 0.05, "{row:?}");
    let far = blowup_probe(3, &rat(16, 1), &[5.0, 0.0, 0.0], 1e-3, 0.1, 1e-3, 2000, 7).unwrap();
    assert_eq!(far.hits, 0);
    assert!(blowup_probe(3, &rat(16, 1), &[0.0; 3], 1e-3, 1.0, 1e-3, 10, 7).is_err());
}

#[test]
fn blowup_sweep_increases_with_delta() {
    let deltas = [rat(16, 1), rat(36, 1), rat(49, 1)];
    let sweep = blowup_sweep(3, &deltas, &[0.05, 0.0, 0.0], 1e-3, 1.0, 1e-3, 2000, 21).unwrap();
    assert!(sweep.strictly_increasing, "{:?}", sweep.rows);
    let csv = sweep.to_csv();
    assert!(csv.starts_with("delta,hit_fraction,n_paths,dt\n16,"));
    assert_eq!(csv.lines().count(), 4);
}
