use fblab::drift::{constant_drift, hardy_drift, zero_drift, FormBoundedDrift};
use fblab::grid::{Boundary, CartesianGrid, RadialGrid, SpaceGrid};
use fblab::mollifier::build_regularized_drift_within;
use fblab::pde::{
    approximation_cauchy_check, heat_gaussian, radial_initial, solve_cartesian, solve_radial, verify_gradient_bound,
    CauchyConfig, Scheme, SolveOptions, VerificationStatus,
};
use fblab::rational::{parse_rational, rat};
use fblab::Error;

fn radial_heat_error(n_r: usize, scheme: Scheme) -> f64 {
    let grid = RadialGrid::new(3, 12.0, n_r).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp(), None);
    let dr = grid.dr();
    let t = 0.25;
    let sol = solve_radial(&zero_drift(3), &h, &grid, 0.0, t, 0.25 * dr * dr, scheme, &SolveOptions::new(4.0)).unwrap();
    let last = sol.snapshots.last().unwrap();
    assert!((last.tau - t).abs() < 1e-12);
    grid.nodes()
        .iter()
        .zip(&last.values)
        .map(|(r, u)| (u - heat_gaussian(3, t, *r)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn radial_heat_second_order() {
    let e1 = radial_heat_error(240, Scheme::Imex);
    let e2 = radial_heat_error(480, Scheme::Imex);
    let e3 = radial_heat_error(960, Scheme::Imex);
    println!("radial errors {e1:e} {e2:e} {e3:e} ratios {} {}", e1 / e2, e2 / e3);
    assert!(e1 < 1e-3);
    assert!((3.5..=4.5).contains(&(e2 / e3)));
    let c1 = radial_heat_error(240, Scheme::CrankNicolson);
    let c2 = radial_heat_error(480, Scheme::CrankNicolson);
    println!("cn errors {c1:e} {c2:e} ratio {}", c1 / c2);
    assert!(c2 < c1 && c1 < 1e-3);
}

fn cartesian_heat_error(n: usize) -> f64 {
    let grid = CartesianGrid::<f64>::new(3, 6.0, n, Boundary::Dirichlet).unwrap();
    let h: Vec<f64> = (0..grid.len()).map(|i| (-grid.radius(i).powi(2)).exp()).collect();
    let dx = grid.dx();
    let t = 0.25;
    let sol = solve_cartesian(&zero_drift(3), &h, &grid, 0.0, t, 0.25 * dx * dx, &SolveOptions::new(4.0)).unwrap();
    let last = sol.snapshots.last().unwrap();
    (0..grid.len())
        .map(|i| (last.values[i] - heat_gaussian(3, t, grid.radius(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn cartesian_heat_second_order() {
    let e1 = cartesian_heat_error(48);
    let e2 = cartesian_heat_error(96);
    println!("cartesian errors {e1:e} {e2:e} ratio {}", e1 / e2);
    assert!((3.5..=4.5).contains(&(e1 / e2)));
}

#[test]
fn effective_hardy_coefficient() {
    let b = hardy_drift::<f64>(3, &rat(36, 100)).unwrap();
    let p = b.radial_profile().unwrap();
    assert!(((3.0 - 1.0) - p.singular_coeff - 1.7).abs() < 1e-14);
    // the singular solve runs and stays within the data range
    let grid = RadialGrid::new(3, 8.0, 400).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp(), Some(4.0));
    let dr = grid.dr();
    let sol = solve_radial(&b, &h, &grid, 0.0, 0.2, 0.25 * dr * dr, Scheme::Imex, &SolveOptions::new(3.0)).unwrap();
    assert!(sol.stats.maximum_principle_holds());
    assert!(sol.trace.i_q.iter().zip(&sol.trace.j_q).all(|(i, j)| i >= j));
}

#[test]
fn maximum_principle_and_decay_without_drift() {
    let grid = RadialGrid::new(3, 8.0, 200).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp() * (1.0 + (3.0 * r).cos()) / 2.0, Some(4.0));
    let dr = grid.dr();
    let sol = solve_radial(&zero_drift(3), &h, &grid, 0.0, 0.3, 0.25 * dr * dr, Scheme::Imex, &SolveOptions::new(4.0)).unwrap();
    assert!(sol.stats.min_value >= 0.0);
    assert!(sol.stats.maximum_principle_holds());
    let tr = &sol.trace;
    for k in 0..tr.len() {
        assert_eq!(tr.x_q[k], 0.0);
        assert!(tr.i_q[k] >= tr.j_q[k]);
        assert!(tr.sup_norm[k] <= tr.sup_norm[0]);
    }
    for k in 1..tr.len() - 1 {
        let dn = tr.dnorm_dt(k) / 4.0;
        assert!(dn <= 0.0);
        let rhs = -tr.i_q[k] - 2.0 * tr.j_q[k];
        assert!((dn - rhs).abs() <= 0.05 * rhs.abs(), "{k}: {dn} vs {rhs}");
    }
}

#[test]
fn constant_drift_translates() {
    let c: Vec<f64> = vec![0.8, -0.4];
    let grid = CartesianGrid::<f64>::new(2, 10.0, 320, Boundary::Dirichlet).unwrap();
    let h: Vec<f64> = (0..grid.len()).map(|i| (-grid.radius(i).powi(2)).exp()).collect();
    let dx = grid.dx();
    let t: f64 = 0.5;
    let sol = solve_cartesian(&constant_drift(c.clone()), &h, &grid, 0.0, t, 0.25 * dx * dx, &SolveOptions::new(3.0)).unwrap();
    let last = sol.snapshots.last().unwrap();
    let err = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let r2 = (p[0] - c[0] * t).powi(2) + (p[1] - c[1] * t).powi(2);
            let s = 1.0 + 4.0 * t;
            (last.values[i] - (-r2 / s).exp() / s).abs()
        })
        .fold(0.0, f64::max);
    println!("translation error {err:e}");
    assert!(err < 5e-3);
    assert!(sol.stats.maximum_principle_holds());
}

#[test]
fn errors_are_reported() {
    let grid = RadialGrid::new(3, 8.0, 100).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp(), Some(4.0));
    let res = solve_radial(&zero_drift(3), &h, &grid, 0.0, 0.1, 0.01, Scheme::Imex, &SolveOptions::new(3.0));
    assert!(matches!(res, Err(Error::Stability(_))));
    let bump = fblab::drift::bump_drift(vec![1.0, 0.0, 0.0], vec![0.0; 3], 1.0).unwrap();
    let res = solve_radial(&bump, &h, &grid, 0.0, 0.1, 1e-4, Scheme::Imex, &SolveOptions::new(3.0));
    assert!(matches!(res, Err(Error::NotRadial)));
    let cg = CartesianGrid::new(3, 2.0, 8, Boundary::Dirichlet).unwrap();
    let hc = vec![0.0; cg.len()];
    let hardy: FormBoundedDrift<f64> = hardy_drift(3, &rat(36, 100)).unwrap();
    let res = solve_cartesian(&hardy, &hc, &cg, 0.0, 0.1, 1e-3, &SolveOptions::new(3.0));
    assert!(matches!(res, Err(Error::UnboundedDrift)));
}

fn mollified_hardy_run(n_r: usize, dt: f64) -> fblab::pde::Solution<f64, RadialGrid<f64>> {
    let q = parse_rational("145/48").unwrap();
    let base = hardy_drift::<f64>(3, &rat(36, 100)).unwrap();
    let b = build_regularized_drift_within(&base, 2, 0.01, Some(9.0)).unwrap();
    let grid = RadialGrid::new(3, 8.0, n_r).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp(), Some(4.0));
    solve_radial(&b, &h, &grid, 0.0, 0.5, dt, Scheme::Imex, &SolveOptions::new(fblab::rational::to_f64(&q))).unwrap()
}

#[test]
fn mollified_hardy_identity_and_bound() {
    let coarse = mollified_hardy_run(400, 1e-4);
    let fine = mollified_hardy_run(800, 2.5e-5);
    let r1 = coarse.trace.max_interior_residual();
    let r2 = fine.trace.max_interior_residual();
    println!("identity residual {r1:e} {r2:e} order {}", (r1 / r2).log2());
    assert!((r1 / r2).log2() >= 1.0);
    for sol in [&coarse, &fine] {
        assert!(sol.stats.maximum_principle_holds() && sol.stats.min_value >= 0.0);
        assert!(sol.trace.i_q.iter().zip(&sol.trace.j_q).all(|(i, j)| i >= j));
        assert!(sol.trace.all_finite());
    }
    let base = hardy_drift::<f64>(3, &rat(36, 100)).unwrap();
    let report = verify_gradient_bound(&fine.trace, &parse_rational("145/48").unwrap(), &rat(36, 100), &base).unwrap();
    println!(
        "kappa {} max increase {:e} excess {:e} c1 {} lhs {} rhs {}",
        report.kappa,
        report.max_relative_increase,
        report.max_differential_excess,
        report.c1,
        report.integral_bound_lhs,
        report.integral_bound_rhs
    );
    assert_eq!(report.status, VerificationStatus::Passed);
}

#[test]
fn inadmissible_bound_is_skipped() {
    let sol = mollified_hardy_run(200, 4e-4);
    let base = hardy_drift::<f64>(3, &rat(36, 100)).unwrap();
    let q = parse_rational("145/48").unwrap();
    let report = verify_gradient_bound(&sol.trace, &q, &rat(1, 1), &base).unwrap();
    assert_eq!(report.status, VerificationStatus::Inadmissible);
}

#[test]
fn bounded_base_has_zero_cauchy_distances() {
    let grid = RadialGrid::new(3, 6.0, 120).unwrap();
    let h = radial_initial(&grid, |r: f64| (-r * r).exp(), Some(3.0));
    let table =
        approximation_cauchy_check(&zero_drift::<f64>(3), &h, &grid, 0.2, &[2, 3, 4], 4.0, &CauchyConfig::default()).unwrap();
    assert!(table.rows.iter().all(|r| r.lr_distance == 0.0 && r.sup_distance == 0.0));
    let base = hardy_drift::<f64>(3, &rat(36, 100)).unwrap();
    assert!(approximation_cauchy_check(&base, &h, &grid, 0.2, &[2, 3], 1.2, &CauchyConfig::default()).is_err());
}
