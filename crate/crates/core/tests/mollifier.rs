use std::f64::consts::PI;

use fblab::drift::{constant_drift, custom_radial_drift, hardy_drift, CustomRadial, DriftKind, GClass, SmoothField};
use fblab::mollifier::{
    build_regularized_drift, heat_mollify, l2_distance, mollify_g, select_epsilons, sup_norm_bound, Axis,
    DistanceGrid, GriddedField, MollifyAxes,
};
use fblab::rational::rat;
use fblab::Error;

fn heat_kernel(s: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * PI * s).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * s)).exp()
}

/// `E_ε 1_{B(0,n)}` in three dimensions, from the odd extension of `r u`.
fn ball_indicator_3d(n: f64, eps: f64, r: f64) -> f64 {
    let s = 2.0 * eps.sqrt();
    0.5 * (libm::erf((n - r) / s) + libm::erf((n + r) / s))
        + (eps / PI).sqrt() / r * ((-(n + r).powi(2) / (4.0 * eps)).exp() - (-(n - r).powi(2) / (4.0 * eps)).exp())
}

#[test]
fn gaussian_density_advances_by_epsilon() {
    let (s, eps) = (0.05, 0.02);
    let ax = Axis::span(-3.5f64, 3.5, 71);
    for dim in 1..=3usize {
        let f = GriddedField::sample(None, vec![ax; dim], |_, x| heat_kernel(s, x));
        let g = heat_mollify(&f, eps, MollifyAxes::Space).unwrap();
        let exact = GriddedField::sample(None, vec![ax; dim], |_, x| heat_kernel(s + eps, x));
        let err = g.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6 * exact.max_abs(), "dim {dim}: {err}");
    }
}

#[test]
fn unit_mass_on_plateaus() {
    let eps = 0.01;
    let ax = Axis::span(-4.0f64, 4.0, 321);
    let f = GriddedField::sample(None, vec![ax], |_, x| if x[0].abs() <= 2.5 { 1.0 } else { 0.0 });
    let g = heat_mollify(&f, eps, MollifyAxes::Space).unwrap();
    for i in 0..ax.len {
        let x = ax.node(i);
        if x.abs() < 2.5 - 8.2 * eps.sqrt() {
            assert!((g.values[i] - 1.0).abs() < 1e-8, "{x}: {}", g.values[i]);
        }
    }
}

#[test]
fn space_time_factorizes() {
    let eps = 0.01;
    let t = Axis::span(-2.5f64, 2.5, 101);
    let x = Axis::span(-3.0, 3.0, 121);
    let f = GriddedField::sample(Some(t), vec![x, x], |tau, y| {
        (-(tau * tau) * 8.0).exp() * (-(y[0] - 0.2).powi(2) * 6.0 - y[1] * y[1] * 4.0).exp() * (1.0 + y[0] * tau)
    });
    let both = heat_mollify(&f, eps, MollifyAxes::SpaceTime).unwrap();
    let space_then_time = heat_mollify(&heat_mollify(&f, eps, MollifyAxes::Space).unwrap(), eps, MollifyAxes::Time).unwrap();
    let time_then_space = heat_mollify(&heat_mollify(&f, eps, MollifyAxes::Time).unwrap(), eps, MollifyAxes::Space).unwrap();
    for (a, b) in both.values.iter().zip(&space_then_time.values) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in both.values.iter().zip(&time_then_space.values) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn margin_and_resolution_errors() {
    let ax = Axis::span(-1.0f64, 1.0, 41);
    let f = GriddedField::sample(None, vec![ax], |_, _| 1.0);
    assert!(matches!(heat_mollify(&f, 0.01, MollifyAxes::Space), Err(Error::Margin { .. })));
    let coarse = Axis::span(-3.0f64, 3.0, 7);
    let f = GriddedField::sample(None, vec![coarse], |_, x| (-x[0] * x[0]).exp());
    assert!(matches!(heat_mollify(&f, 0.01, MollifyAxes::Space), Err(Error::Unresolved { .. })));
    assert!(heat_mollify(&f, 0.01, MollifyAxes::Time).is_err());
}

#[test]
fn constant_base_matches_the_ball_indicator_closed_form() {
    let (n, eps) = (1usize, 0.01);
    let b = build_regularized_drift(&constant_drift(vec![0.5, 0.0, 0.0]), n, eps).unwrap();
    let DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { profile, .. }) = &b.kind else {
        panic!("unexpected kind")
    };
    for &r in &[0.05, 0.3, 0.7, 0.95, 1.0, 1.1, 1.3] {
        let exact = ball_indicator_3d(n as f64, eps, r);
        assert!((profile.eval(r) - exact).abs() < 1e-7, "r = {r}: {} vs {exact}", profile.eval(r));
    }
}

#[test]
fn linear_base_matches_closed_form() {
    // E(y 1_B)(x) = x m(x) + 2ε ∇m(x)
    let (n, eps) = (1usize, 0.01);
    let base = custom_radial_drift(3, CustomRadial::Power { coeff: 1.0, power: 1.0 }, rat(0, 1), GClass::Zero).unwrap();
    let b = build_regularized_drift(&base, n, eps).unwrap();
    let p = b.radial_profile().unwrap();
    for &r in &[0.02, 0.3, 0.8, 1.0, 1.2] {
        let h = 1e-5;
        let dm = (ball_indicator_3d(1.0, eps, r + h) - ball_indicator_3d(1.0, eps, r - h)) / (2.0 * h);
        let exact = r * ball_indicator_3d(1.0, eps, r) + 2.0 * eps * dm;
        let got = p.smooth.eval(r);
        assert!((got - exact).abs() < 1e-7, "r = {r}: {got} vs {exact}");
    }
}

#[test]
fn higher_dimensions_preserve_linear_fields_inside() {
    let base = custom_radial_drift(5, CustomRadial::Power { coeff: 1.0f64, power: 1.0 }, rat(0, 1), GClass::Zero).unwrap();
    let b = build_regularized_drift(&base, 2, 0.01).unwrap();
    let p = b.radial_profile().unwrap();
    for &r in &[0.1, 0.5, 1.0] {
        assert!((p.smooth.eval(r) - r).abs() < 1e-8, "{r}");
    }
}

#[test]
fn hardy_member_is_bounded_smooth_and_localized() {
    let hardy = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let eps = 0.01;
    let b = build_regularized_drift(&hardy, 2, eps).unwrap();
    assert_eq!(b.kind_name(), "bounded_smooth");
    assert_eq!(b.delta, rat(9, 25));
    assert!(b.g.is_zero());
    let at0 = b.eval(1.0, &[0.0, 0.0, 0.0]).unwrap();
    assert!(at0.iter().all(|v| v.is_finite()));
    let far = b.eval(1.0, &[2.0 + 10.0 * eps.sqrt(), 0.0, 0.0]).unwrap();
    assert!(far[0].abs() < 1e-12);
    // away from the origin and the truncation, E_ε b ≈ b + εΔb = c/r - 2cε/r³
    let mid = b.eval(1.0, &[1.0, 0.0, 0.0]).unwrap();
    assert!((mid[0] - (0.3 - 0.006)).abs() < 2e-4, "{}", mid[0]);
}

#[test]
fn sup_norm_scales_like_inverse_root_epsilon() {
    let hardy = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let mut scaled = Vec::new();
    for &eps in &[0.04, 0.01, 0.0025] {
        let b = build_regularized_drift(&hardy, 2, eps).unwrap();
        let sup = b.sup_norm().unwrap();
        assert!(sup <= sup_norm_bound(&hardy, eps).unwrap());
        scaled.push(sup * eps.sqrt());
    }
    for w in scaled.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn g_mollification() {
    assert_eq!(mollify_g::<f64>(&GClass::Zero, 0.01).unwrap(), GClass::Zero);
    assert_eq!(mollify_g(&GClass::Constant(2.0), 0.01).unwrap(), GClass::Constant(2.0));
    let g = GClass::tabulated(vec![0.0f64, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
    let gn = mollify_g(&g, 0.01).unwrap();
    // mass ε/2 leaks to negative times from the ramp at t = 0
    let (a, b) = (gn.integral(10.0), g.integral(10.0));
    assert!((a - (b - 0.005)).abs() < 1e-4, "{a} {b}");
    assert!((gn.eval(0.5) - 0.5).abs() < 1e-3);
}

#[test]
fn huge_tolerance_gives_dyadic_scales() {
    let hardy = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let grid = DistanceGrid { r_max: 1.0, n_r: 100, t_max: 0.5, n_t: 8, exclusion: 0.05 };
    let s = select_epsilons(&hardy, &grid, 1e30, 4).unwrap();
    assert_eq!(s.epsilons, vec![0.5, 0.25, 0.125, 0.0625]);
}

#[test]
fn selected_scales_meet_the_criterion() {
    let hardy = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let grid = DistanceGrid { r_max: 1.5, n_r: 300, t_max: 1.0, n_t: 32, exclusion: 0.05 };
    let tol = 2.0;
    let s = select_epsilons(&hardy, &grid, tol, 3).unwrap();
    for (i, (e, dist)) in s.epsilons.iter().zip(&s.distances).enumerate() {
        assert!(*dist <= tol * 0.5f64.powi(i as i32 + 1));
        assert!(i == 0 || *e < s.epsilons[i - 1]);
    }
}

#[test]
fn distance_to_the_base_shrinks_with_epsilon() {
    let hardy = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
    let grid = DistanceGrid { r_max: 1.5, n_r: 300, t_max: 1.0, n_t: 32, exclusion: 0.05 };
    let d: Vec<f64> = [0.02, 0.005, 0.00125]
        .iter()
        .map(|&e| l2_distance(&hardy, &build_regularized_drift(&hardy, 2, e).unwrap(), 2, &grid).unwrap())
        .collect();
    assert!(d[1] < d[0] && d[2] < d[1], "{d:?}");
}
