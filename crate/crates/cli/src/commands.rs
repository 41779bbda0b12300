//! Subcommand key tables and runners.

use serde_json::{json, Value};

use fblab::acceptance;
use fblab::admissibility::{ratio_table, ratio_table_csv, report};
use fblab::drift::FormBoundedDrift;
use fblab::formbound::{estimate_form_bound, form_bound_csv, hardy_near_optimizers, radial_packets, random_bumps, TimeGrid};
use fblab::grid::{Boundary, CartesianGrid, LogRadialGrid, RadialGrid, SpaceGrid};
use fblab::mollifier::{build_regularized_drift_within, l2_distance, select_epsilons, sup_norm_bound, DistanceGrid};
use fblab::moser::{build_schedule_with_delta, schedule_csv, schedule_limits, verify_schedule};
use fblab::pde::{
    approximation_cauchy_check, radial_initial, smooth_cutoff, solve_cartesian, solve_radial, stable_dt_radial,
    verify_gradient_bound, CauchyConfig, Scheme, SolveOptions,
};
use fblab::rational::{fmt_rational, to_f64, Rational};
use fblab::scalar::Field;
use fblab::sde::{blowup_sweep, weak_compare, EnsembleSpec, PdeConfig, TerminalFunction};
use fblab::{Error, Result};

use crate::config::{key, Key, Resolved};
use crate::report::Writer;

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: Vec<Key>,
    pub stochastic: bool,
}

const DRIFT: [Key; 13] = [
    key("drift.kind", Some("hardy"), "zero, constant, bump, hardy, power or table"),
    key("drift.d", Some("3"), "dimension"),
    key("drift.delta", None, "form-bound constant (rational)"),
    key("drift.g", None, "g class: zero, constant:<v> or table:<t,..>;<v,..>"),
    key("drift.vector", None, "constant or bump amplitude, comma separated"),
    key("drift.center", None, "bump center"),
    key("drift.width", None, "bump width"),
    key("drift.coeff", None, "power-law coefficient"),
    key("drift.power", None, "power-law exponent"),
    key("drift.table_r", None, "radial table nodes"),
    key("drift.table_v", None, "radial table values"),
    key("mollify.n", None, "regularize with b_n (truncation index)"),
    key("mollify.eps", None, "regularization scale epsilon_n"),
];

fn with_drift(extra: &[Key]) -> Vec<Key> {
    DRIFT.iter().chain(extra).copied().collect()
}

pub fn commands() -> Vec<Command> {
    let radial_solve = [
        key("grid", Some("radial"), "radial or cartesian"),
        key("r_max", Some("8"), "outer radius of the radial grid"),
        key("n_r", Some("800"), "radial cells"),
        key("half_width", Some("6"), "Cartesian box half width"),
        key("n", Some("64"), "Cartesian cells per axis"),
        key("boundary", Some("dirichlet"), "dirichlet or periodic (Cartesian)"),
        key("init.amplitude", Some("1"), "initial Gaussian amplitude"),
        key("init.width", Some("1"), "initial Gaussian width"),
        key("cutoff", Some("auto"), "initial cutoff radius, auto (half the domain) or none"),
        key("s", Some("0"), "start time"),
        key("t", Some("0.5"), "end time"),
        key("dt", Some("auto"), "time step or auto (largest stable)"),
        key("scheme", Some("imex"), "imex or crank_nicolson (radial)"),
        key("q", Some("145/48"), "exponent of the tracked functionals"),
        key("stride", Some("1"), "trace every this many steps"),
    ];
    vec![
        Command {
            name: "admissibility",
            about: "Constraint margins and constants for (d, q, delta)",
            keys: vec![
                key("d", None, "dimension"),
                key("q", None, "exponent q (rational)"),
                key("delta", None, "form-bound constant (rational)"),
                key("mu", None, "parameter mu of the high-dimensional cap"),
            ],
            stochastic: false,
        },
        Command {
            name: "figure1",
            about: "Ratio of the new to the old constant over a range of dimensions",
            keys: vec![key("d_range", Some("5:15"), "dimensions a:b"), key("eps", Some("1"), "offsets q = d + eps, comma separated")],
            stochastic: false,
        },
        Command {
            name: "formbound",
            about: "Empirical form-bound constant over a test-function family",
            keys: with_drift(&[
                key("grid", Some("log"), "log, radial or cartesian"),
                key("r_min", Some("1e-9"), "inner radius of the log grid"),
                key("r_max", Some("1"), "outer radius"),
                key("n", Some("2000"), "grid cells"),
                key("t", Some("1"), "time span"),
                key("n_t", Some("2"), "time nodes"),
                key("etas", Some("0.05,0.1,0.2,0.4"), "near-optimizer exponents (empty for none)"),
                key("shells", Some("0.1:0.05,0.3:0.1"), "radial Gaussian shells center:width"),
                key("bumps", Some("0"), "random bump members (needs --seed)"),
                key("tol", Some("0.02"), "relative tolerance above delta"),
            ]),
            stochastic: false,
        },
        Command {
            name: "mollify",
            about: "A member of the regularizing sequence and its distance to the base",
            keys: with_drift(&[
                key("n", Some("2"), "truncation index"),
                key("eps", Some("0.01"), "scale epsilon_n"),
                key("r_max", Some("2"), "radius of the profile table and distance grid"),
                key("n_r", Some("400"), "radial nodes"),
                key("t_eval", Some("1"), "time at which the profile is tabulated"),
                key("t_max", Some("1"), "time span of the distance grid"),
                key("n_t", Some("32"), "time nodes of the distance grid"),
                key("exclusion", Some("0.05"), "excluded radius around the origin"),
                key("schedule_tol", None, "also select epsilon_1..epsilon_{schedule_n} for this tolerance"),
                key("schedule_n", Some("3"), "length of the selected schedule"),
            ]),
            stochastic: false,
        },
        Command { name: "solve", about: "Solve the PDE and trace the gradient functionals", keys: with_drift(&radial_solve), stochastic: false },
        Command {
            name: "verify-thm1",
            about: "Check the gradient bound along a radial solve",
            keys: with_drift(&[radial_solve.as_slice(), &[key("delta", None, "delta of the bound (default drift.delta)")]].concat()),
            stochastic: false,
        },
        Command {
            name: "cauchy",
            about: "Distances between solutions for consecutive regularizations",
            keys: with_drift(&[
                key("r_max", Some("8"), "outer radius"),
                key("n_r", Some("800"), "radial cells"),
                key("cutoff", Some("4"), "initial cutoff radius"),
                key("init.width", Some("1"), "initial Gaussian width"),
                key("t", Some("0.5"), "end time"),
                key("n_list", Some("2,3,4,5"), "indices n"),
                key("r", Some("4"), "Lebesgue exponent of the distance"),
                key("eps0", Some("0.16"), "epsilon_n = eps0 2^-n"),
                key("dt", Some("1e-4"), "largest time step"),
                key("samples", Some("51"), "comparison times"),
            ]),
            stochastic: false,
        },
        Command {
            name: "moser",
            about: "Moser exponent schedule",
            keys: vec![
                key("d", None, "dimension"),
                key("q", None, "exponent q > d"),
                key("r0", Some("2"), "starting exponent"),
                key("k", Some("3"), "parameter k > 2"),
                key("n", Some("20"), "schedule length"),
                key("delta", None, "form-bound constant (default 1/d^2)"),
            ],
            stochastic: false,
        },
        Command {
            name: "sde-compare",
            about: "Ensemble mean against the PDE value",
            keys: with_drift(&[
                key("x0", Some("1,0,0"), "starting point"),
                key("horizon", Some("1"), "final time T"),
                key("dt", Some("1e-3"), "step"),
                key("n_paths", Some("100000"), "paths"),
                key("f.amplitude", Some("1"), "terminal Gaussian amplitude"),
                key("f.center", None, "terminal Gaussian center (default origin)"),
                key("f.width", Some("1"), "terminal Gaussian width"),
                key("pde.r_max", Some("10"), "radial PDE domain"),
                key("pde.n_r", Some("2000"), "radial PDE cells"),
                key("pde.half_width", Some("6"), "Cartesian PDE half width"),
                key("pde.n", Some("96"), "Cartesian PDE cells per axis"),
            ]),
            stochastic: true,
        },
        Command {
            name: "blowup",
            about: "Hitting fractions of a small ball under the Hardy drift",
            keys: vec![
                key("d", Some("3"), "dimension"),
                key("deltas", Some("16,36,49"), "values of delta"),
                key("x0", Some("0.05,0,0"), "starting point"),
                key("rho", Some("1e-3"), "target radius"),
                key("horizon", Some("1"), "final time"),
                key("dt", Some("1e-4"), "step"),
                key("n_paths", Some("10000"), "paths"),
            ],
            stochastic: true,
        },
        Command {
            name: "accept",
            about: "Run the acceptance suite",
            keys: vec![key("criteria", Some("1,2,3,4,5,6,7,8,9,10,11,12"), "criteria to run")],
            stochastic: false,
        },
    ]
}

/// Failures of a run; acceptance failures map to their own exit code.
pub enum RunError {
    Validation(Error),
    Io(std::io::Error),
    AcceptanceFailed,
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Validation(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Io(std::io::Error::other(e))
    }
}

type Run = std::result::Result<(), RunError>;

pub fn run(name: &str, cfg: &Resolved, out: &mut Writer<'_>, seed: Option<u64>) -> Run {
    match name {
        "admissibility" => admissibility(cfg, out),
        "figure1" => figure1(cfg, out),
        "formbound" => formbound(cfg, out, seed),
        "mollify" => mollify(cfg, out),
        "solve" => solve(cfg, out, false),
        "verify-thm1" => solve(cfg, out, true),
        "cauchy" => cauchy(cfg, out),
        "moser" => moser(cfg, out),
        "sde-compare" => sde_compare(cfg, out, seed.expect("seed checked by the caller")),
        "blowup" => blowup(cfg, out, seed.expect("seed checked by the caller")),
        "accept" => accept(cfg, out),
        other => Err(Error::Config(format!("unknown subcommand {other}")).into()),
    }
}

fn admissibility(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let mu = cfg.opt("mu").map(fblab::rational::parse_rational).transpose()?;
    let rep = report(cfg.get("d")?, &cfg.rational("q")?, &cfg.rational("delta")?, mu.as_ref())?;
    out.json("admissibility.json", serde_json::to_value(&rep)?)?;
    Ok(())
}

fn figure1(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let (a, b) = cfg.range("d_range")?;
    let eps = cfg.str("eps")?.split(',').map(str::trim).collect::<Vec<_>>();
    for e in eps {
        let rows = ratio_table(a, b, &fblab::rational::parse_rational(e)?)?;
        let name = if cfg.str("eps")?.contains(',') { format!("figure1_eps_{e}.csv") } else { "figure1.csv".into() };
        out.csv(&name.replace('/', "_"), &ratio_table_csv(&rows))?;
    }
    Ok(())
}

/// The configured drift, regularized when `mollify.n` is given.
fn drift(cfg: &Resolved, r_max: Option<f64>) -> Result<(FormBoundedDrift<f64>, FormBoundedDrift<f64>)> {
    let base = FormBoundedDrift::<f64>::from_config(cfg.lookup())?;
    let member = match (cfg.get_opt::<usize>("mollify.n")?, cfg.get_opt::<f64>("mollify.eps")?) {
        (Some(n), Some(eps)) => build_regularized_drift_within(&base, n, eps, r_max)?,
        (None, None) => base.clone(),
        _ => return Err(Error::Config("mollify.n and mollify.eps go together".into())),
    };
    Ok((base, member))
}

fn formbound(cfg: &Resolved, out: &mut Writer<'_>, seed: Option<u64>) -> Run {
    let (b, _) = drift(cfg, None)?;
    let times = TimeGrid::uniform(cfg.get::<f64>("t")?, cfg.get("n_t")?)?;
    let n: usize = cfg.get("n")?;
    let r_max: f64 = cfg.get("r_max")?;
    let etas: Vec<f64> = if cfg.opt("etas").is_some() { cfg.list("etas")? } else { Vec::new() };
    let shells: Vec<(f64, f64)> = match cfg.opt("shells") {
        None => Vec::new(),
        Some(s) => s
            .split(',')
            .map(|p| {
                let (c, w) = p.split_once(':').ok_or_else(|| Error::Parse(format!("shell {p:?} is not center:width")))?;
                Ok((c.trim().parse().map_err(|_| Error::Parse(c.into()))?, w.trim().parse().map_err(|_| Error::Parse(w.into()))?))
            })
            .collect::<Result<_>>()?,
    };
    let bumps: usize = cfg.get("bumps")?;
    if bumps > 0 && seed.is_none() {
        return Err(Error::Config("random bumps need --seed".into()).into());
    }
    fn family<G: SpaceGrid<f64>>(
        g: &G,
        times: &TimeGrid<f64>,
        etas: &[f64],
        shells: &[(f64, f64)],
        bumps: usize,
        seed: Option<u64>,
        r_in: f64,
        r_max: f64,
    ) -> fblab::formbound::TestFunctionFamily<f64> {
        let mut fam = fblab::formbound::TestFunctionFamily::new("");
        if !etas.is_empty() {
            fam.extend(hardy_near_optimizers(g, times, etas, r_in, r_max / 2.0));
        }
        if !shells.is_empty() {
            fam.extend(radial_packets(g, times, shells));
        }
        if bumps > 0 {
            fam.extend(random_bumps(g, times, bumps, r_max, seed.unwrap_or(0)));
        }
        fam
    }
    let d = b.d;
    let est = match cfg.str("grid")? {
        "log" => {
            let r_min: f64 = cfg.get("r_min")?;
            let g = LogRadialGrid::new(d, r_min, r_max, n)?;
            estimate_form_bound(&b, &family(&g, &times, &etas, &shells, bumps, seed, 2.0 * r_min, r_max), &g, &times)?
        }
        "radial" => {
            let g = RadialGrid::new(d, r_max, n)?;
            estimate_form_bound(&b, &family(&g, &times, &etas, &shells, bumps, seed, 2.0 * g.dr(), r_max), &g, &times)?
        }
        "cartesian" => {
            let g = CartesianGrid::new(d, r_max, n, Boundary::Dirichlet)?;
            estimate_form_bound(&b, &family(&g, &times, &etas, &shells, bumps, seed, 2.0 * g.dx(), r_max), &g, &times)?
        }
        other => return Err(Error::Config(format!("unknown grid {other:?}")).into()),
    };
    let delta = to_f64(&b.delta);
    let tol: f64 = cfg.get("tol")?;
    out.csv("formbound.csv", &form_bound_csv(&est))?;
    out.json(
        "formbound.json",
        json!({
            "delta_hat": est.delta_hat,
            "delta": delta,
            "within_tolerance": est.delta_hat <= delta * (1.0 + tol),
            "members": est.rows.len(),
        }),
    )?;
    Ok(())
}

fn mollify(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let base = FormBoundedDrift::<f64>::from_config(cfg.lookup())?;
    let n: usize = cfg.get("n")?;
    let eps: f64 = cfg.get("eps")?;
    let r_max: f64 = cfg.get("r_max")?;
    let n_r: usize = cfg.get("n_r")?;
    let t_eval: f64 = cfg.get("t_eval")?;
    let member = build_regularized_drift_within(&base, n, eps, Some(r_max + 1.0))?;
    let mut table = String::from("r,base_x1,member_x1\n");
    let d = base.d;
    for i in 1..=n_r {
        let r = r_max * i as f64 / n_r as f64;
        let mut x = vec![0.0; d];
        x[0] = r;
        let b0 = base.eval(t_eval, &x)?[0];
        let b1 = member.eval(t_eval, &x)?[0];
        table.push_str(&format!("{r},{b0},{b1}\n"));
    }
    out.csv("mollify.csv", &table)?;
    let grid = DistanceGrid {
        r_max,
        n_r,
        t_max: cfg.get("t_max")?,
        n_t: cfg.get("n_t")?,
        exclusion: cfg.get("exclusion")?,
    };
    let mut result = json!({
        "n": n,
        "epsilon": eps,
        "sup_norm": member.sup_norm()?,
        "sup_bound": sup_norm_bound(&base, eps)?,
        "l2_distance": l2_distance(&base, &member, n, &grid)?,
    });
    if let Some(tol) = cfg.get_opt::<f64>("schedule_tol")? {
        let s = select_epsilons(&base, &grid, tol, cfg.get("schedule_n")?)?;
        result["schedule"] = json!({ "epsilons": s.epsilons, "distances": s.distances });
    }
    out.json("mollify.json", result)?;
    Ok(())
}

fn cutoff_radius(cfg: &Resolved, domain: f64) -> Result<Option<f64>> {
    match cfg.str("cutoff")? {
        "auto" => Ok(Some(domain / 2.0)),
        "none" => Ok(None),
        _ => cfg.get("cutoff").map(Some),
    }
}

fn solve(cfg: &Resolved, out: &mut Writer<'_>, verify: bool) -> Run {
    let q_rat = cfg.rational("q")?;
    let q = to_f64(&q_rat);
    let s: f64 = cfg.get("s")?;
    let t: f64 = cfg.get("t")?;
    let stride: usize = cfg.get("stride")?;
    let amp: f64 = cfg.get("init.amplitude")?;
    let width: f64 = cfg.get("init.width")?;
    let opts = SolveOptions::new(q).stride(stride);
    let grid_kind = cfg.str("grid")?;
    if verify && grid_kind != "radial" {
        return Err(Error::Config("verify-thm1 runs on the radial grid".into()).into());
    }
    let (base, b) = drift(cfg, Some(cfg.get::<f64>("r_max")?.max(cfg.get::<f64>("half_width")? * 2f64.sqrt() * 2.0) + 1.0))?;
    let (trace, stats, final_csv) = match grid_kind {
        "radial" => {
            let r_max: f64 = cfg.get("r_max")?;
            let grid = RadialGrid::new(b.d, r_max, cfg.get("n_r")?)?;
            let h = radial_initial(&grid, |r: f64| amp * (-(r / width).powi(2)).exp(), cutoff_radius(cfg, r_max)?);
            let dt = match cfg.str("dt")? {
                "auto" => stable_dt_radial(&b, &grid)?,
                _ => cfg.get("dt")?,
            };
            let scheme: Scheme = cfg.get("scheme")?;
            let sol = solve_radial(&b, &h, &grid, s, t, dt, scheme, &opts)?;
            let last = sol.snapshots.last().expect("final snapshot");
            let mut csv = String::from("r,u\n");
            for (r, u) in grid.nodes().iter().zip(&last.values) {
                csv.push_str(&format!("{r},{u}\n"));
            }
            (sol.trace, sol.stats, csv)
        }
        "cartesian" => {
            let l: f64 = cfg.get("half_width")?;
            let boundary = match cfg.str("boundary")? {
                "dirichlet" => Boundary::Dirichlet,
                "periodic" => Boundary::Periodic,
                other => return Err(Error::Config(format!("unknown boundary {other:?}")).into()),
            };
            let grid = CartesianGrid::new(b.d, l, cfg.get("n")?, boundary)?;
            let cut = cutoff_radius(cfg, l)?;
            let h: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let r = grid.radius(i);
                    amp * (-(r / width).powi(2)).exp() * cut.map_or(1.0, |c| smooth_cutoff(r, c))
                })
                .collect();
            let dx = grid.dx();
            let dt = match cfg.str("dt")? {
                "auto" => {
                    let sup = b.sup_norm()?;
                    let mut dt = 0.25 * dx * dx;
                    if sup > 0.0 {
                        dt = dt.min(0.45 * dx / ((b.d as f64).sqrt() * sup));
                    }
                    dt
                }
                _ => cfg.get("dt")?,
            };
            let sol = solve_cartesian(&b, &h, &grid, s, t, dt, &opts)?;
            let last = sol.snapshots.last().expect("final snapshot");
            let mut csv = (0..b.d).map(|k| format!("x{k},")).collect::<String>() + "u\n";
            for (i, u) in last.values.iter().enumerate() {
                for x in grid.point(i) {
                    csv.push_str(&format!("{x},"));
                }
                csv.push_str(&format!("{u}\n"));
            }
            (sol.trace, sol.stats, csv)
        }
        other => return Err(Error::Config(format!("unknown grid {other:?}")).into()),
    };
    out.csv("trace.csv", &trace.to_csv())?;
    out.csv("solution.csv", &final_csv)?;
    let mut result = json!({
        "stats": stats,
        "maximum_principle": stats.maximum_principle_holds(),
        "max_interior_residual": trace.max_interior_residual(),
        "dt_term_integral": trace.dt_term_integral(),
    });
    if verify {
        let delta = match cfg.opt("delta") {
            Some(_) => cfg.rational("delta")?,
            None => base.delta.clone(),
        };
        let rep = verify_gradient_bound(&trace, &q_rat, &delta, &base)?;
        result["verification"] = serde_json::to_value(&rep)?;
        out.json("verify_thm1.json", result)?;
    } else {
        out.json("solve.json", result)?;
    }
    Ok(())
}

fn cauchy(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let base = FormBoundedDrift::<f64>::from_config(cfg.lookup())?;
    let grid = RadialGrid::new(base.d, cfg.get::<f64>("r_max")?, cfg.get("n_r")?)?;
    let width: f64 = cfg.get("init.width")?;
    let h = radial_initial(&grid, |r: f64| (-(r / width).powi(2)).exp(), Some(cfg.get("cutoff")?));
    let config = CauchyConfig { eps0: cfg.get("eps0")?, dt: cfg.get("dt")?, samples: cfg.get("samples")? };
    let table = approximation_cauchy_check(&base, &h, &grid, cfg.get("t")?, &cfg.list::<usize>("n_list")?, cfg.get("r")?, &config)?;
    out.csv("cauchy.csv", &table.to_csv())?;
    out.json("cauchy.json", serde_json::to_value(&table)?)?;
    Ok(())
}

fn moser(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let d: usize = cfg.get("d")?;
    let delta = match cfg.opt("delta") {
        Some(_) => cfg.rational("delta")?,
        None => Rational::new(1.into(), ((d * d) as i64).into()),
    };
    let s = build_schedule_with_delta(d, &cfg.rational("q")?, &cfg.rational("r0")?, cfg.get("k")?, cfg.get("n")?, &delta)?;
    let lim = schedule_limits(&s);
    let v = verify_schedule(&s);
    out.csv("moser.csv", &schedule_csv(&s))?;
    out.json(
        "moser.json",
        json!({
            "beta": s.beta.render(),
            "t": s.t_frak.render(),
            "x": s.x.render(),
            "x_prime": s.x_prime.render(),
            "r1": s.r_seq.first().map(|r| r.render()),
            "alpha_bound": fmt_rational(&lim.alpha_bound),
            "gamma_lower": fmt_rational(&lim.gamma_lower),
            "gamma_upper": fmt_rational(&lim.gamma_upper),
            "alpha_bound_f64": lim.alpha_bound.approx(),
            "gamma_lower_f64": lim.gamma_lower.approx(),
            "log_gamma_bound": lim.log_gamma_bound,
            "verification": v,
        }),
    )?;
    Ok(())
}

fn sde_compare(cfg: &Resolved, out: &mut Writer<'_>, seed: u64) -> Run {
    let pde = PdeConfig {
        r_max: cfg.get("pde.r_max")?,
        n_r: cfg.get("pde.n_r")?,
        half_width: cfg.get("pde.half_width")?,
        n_cartesian: cfg.get("pde.n")?,
    };
    let (_, b) = drift(cfg, Some(pde.r_max.max(pde.half_width * 2.0) + 2.0))?;
    let x0: Vec<f64> = cfg.list("x0")?;
    let center = match cfg.opt("f.center") {
        Some(_) => cfg.list("f.center")?,
        None => vec![0.0; b.d],
    };
    let f = TerminalFunction::Gaussian { amplitude: cfg.get("f.amplitude")?, center, width: cfg.get("f.width")? };
    let spec = EnsembleSpec::new(b, x0, cfg.get("horizon")?, cfg.get("dt")?, cfg.get("n_paths")?, seed);
    let rep = weak_compare(&spec, &f, &pde)?;
    out.json("sde_compare.json", serde_json::to_value(&rep)?)?;
    Ok(())
}

fn blowup(cfg: &Resolved, out: &mut Writer<'_>, seed: u64) -> Run {
    let sweep = blowup_sweep(
        cfg.get("d")?,
        &cfg.rationals("deltas")?,
        &cfg.list::<f64>("x0")?,
        cfg.get("rho")?,
        cfg.get("horizon")?,
        cfg.get("dt")?,
        cfg.get("n_paths")?,
        seed,
    )?;
    out.csv("blowup.csv", &sweep.to_csv())?;
    out.json("blowup.json", serde_json::to_value(&sweep)?)?;
    Ok(())
}

fn accept(cfg: &Resolved, out: &mut Writer<'_>) -> Run {
    let ids: Vec<u8> = cfg.list("criteria")?;
    if ids.iter().any(|i| !(1..=12).contains(i)) {
        return Err(Error::Config("criteria are numbered 1 to 12".into()).into());
    }
    let mut lines = String::new();
    let mut all = true;
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run_criterion(id);
        println!("{o}");
        lines.push_str(&format!("{o}\n"));
        all &= o.passed;
        for (name, body) in &o.artifacts {
            if name.ends_with(".json") {
                let v: Value = serde_json::from_str(body)?;
                out.json(&format!("accept_{name}"), v)?;
            } else {
                out.csv(&format!("accept_{name}"), body)?;
            }
        }
        outcomes.push(o);
    }
    out.text("acceptance.txt", &lines)?;
    out.json("acceptance.json", serde_json::to_value(&outcomes)?)?;
    if all {
        Ok(())
    } else {
        Err(RunError::AcceptanceFailed)
    }
}
