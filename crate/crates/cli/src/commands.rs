use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use warpnls::gauge::{backward_transport, forward_transport};
use warpnls::lab::{probe_grid, reports_to_csv, run_suite, Suite};
use warpnls::solver::{conserved_quantities, exact_plane_wave};
use warpnls::spectral::{inverse_transform, lp_space_norm, sobolev_norm};
use warpnls::warp::{phase_step, propagate};
use warpnls::xsb::{cutoff, xsb_g_norm, xtilde_g_norm, CutoffSpec};
use warpnls::{
    build_reduction, picard_duhamel, split_step, SpaceTimeField, TauGrid, TimeGrid, TimeWarp,
    TorusGrid,
};

use crate::config::{Method, RunConfig};
use crate::CliError;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(body).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    fn metadata(&self) -> serde_json::Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config.hash(),
        })
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Plain-text dump: one `t k0 k1 re im` line per coefficient above the
/// round-off floor `1e-13·max|û|` of its slice.
fn trajectory_text(traj: &SpaceTimeField) -> String {
    let grid = traj.grid();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# modes {:?} lengths {:?}",
        grid.mode_counts(),
        grid.lengths()
    );
    let _ = writeln!(
        out,
        "# t k0 k1 re im (coefficients below 1e-13 of the slice maximum omitted)"
    );
    for (j, slice) in traj.slices().iter().enumerate() {
        let t = traj.times().node(j);
        let floor = 1e-13 * slice.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        for (k, c) in slice.iter() {
            if c.norm() > floor {
                let _ = writeln!(out, "{t:e} {} {} {:e} {:e}", k[0], k[1], c.re, c.im);
            }
        }
    }
    out
}

pub fn reduce(ctx: &Context) -> Result<(), CliError> {
    let coefficients = ctx.config.coefficients()?;
    let (resolution, tol) = ctx.config.reduce_resolution()?;
    let red = build_reduction(&coefficients, resolution, tol)?;
    let original = TorusGrid::square(red.dim(), 64)?;
    let probe = warpnls::FourierField::from_modes(original, |k| {
        if k[0].abs() <= 4 && k[1].abs() <= 4 {
            Complex64::new(1.0 / (1 + k[0].abs() + k[1].abs()) as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let back = backward_transport(&forward_transport(&probe, &red)?, &red, &original)?;
    let roundtrip = back.difference(&probe)?.l2_norm() / probe.l2_norm();
    let phi = red.phi();
    let beta = red.beta();
    let mut table = String::from("# axis y alpha(y) phi(y)\n");
    for (j, axis) in red.axes().iter().enumerate() {
        let l = axis.circumference();
        for i in 0..64 {
            let y = l * i as f64 / 64.0;
            let _ = writeln!(table, "{j} {y:e} {:e} {:e}", axis.alpha(y)?, axis.phi(y)?);
        }
    }
    let summary = json!({
        "metadata": ctx.metadata(),
        "coefficients": coefficients.iter().map(|c| c.label()).collect::<Vec<_>>(),
        "circumferences": red.axes().iter().map(|a| a.circumference()).collect::<Vec<_>>(),
        "grid": red.grid().mode_counts(),
        "phi_range": [phi.iter().cloned().fold(f64::INFINITY, f64::min), phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)],
        "beta_range": [beta.iter().cloned().fold(f64::INFINITY, f64::min), beta.iter().cloned().fold(f64::NEG_INFINITY, f64::max)],
        "beta_mean": red.beta_mean(),
        "roundtrip_error": roundtrip,
    });
    ctx.json("reduce.json", &summary)?;
    ctx.write("reduce_table.txt", &table)?;
    println!(
        "reduced circumferences {:?}, roundtrip error {roundtrip:.2e}",
        red.axes()
            .iter()
            .map(|a| a.circumference())
            .collect::<Vec<_>>()
    );
    Ok(())
}

fn output_grid(config: &RunConfig) -> Result<TimeGrid, CliError> {
    let (t0, t1, n) = config.output_times()?;
    Ok(TimeGrid::new(t0, t1, n)?)
}

pub fn propagate_cmd(ctx: &Context) -> Result<(), CliError> {
    let warp = ctx.config.warp()?;
    let u0 = ctx.config.datum()?;
    let times = output_grid(&ctx.config)?;
    warp.validate(times.start(), times.end())?;
    let traj = SpaceTimeField::from_fn(*u0.grid(), times, |t| propagate(&u0, &warp, t, 0.0))?;
    ctx.write("trajectory.txt", &trajectory_text(&traj))?;
    ctx.json(
        "propagate.json",
        &json!({
            "metadata": ctx.metadata(),
            "warp": warp.label(),
            "grid": u0.grid().mode_counts(),
            "nodes": times.len(),
            "l2_norm": u0.l2_norm(),
        }),
    )?;
    println!(
        "propagated {} nodes on grid {:?}",
        times.len(),
        u0.grid().mode_counts()
    );
    Ok(())
}

pub fn solve(ctx: &Context) -> Result<(), CliError> {
    let problem = ctx.config.problem()?;
    let u0 = ctx.config.datum()?;
    let solve = ctx.config.solve_config()?;
    let mut summary = json!({
        "metadata": ctx.metadata(),
        "problem": {
            "dim": problem.dim(),
            "power": problem.power(),
            "warp": problem.warp().label(),
            "coupling": problem.coupling(),
        },
        "grid": u0.grid().mode_counts(),
    });
    let traj = match ctx.config.method()? {
        Method::SplitStep => {
            let times = output_grid(&ctx.config)?;
            let traj = split_step(&problem, &u0, &times, solve.dt_warped)?;
            summary["method"] = json!("split_step");
            summary["dt_warped"] = json!(solve.dt_warped);
            traj
        }
        Method::Picard => {
            let outcome = picard_duhamel(&problem, &u0, &solve)?;
            summary["method"] = json!("picard");
            summary["iterations"] =
                serde_json::to_value(&outcome.report).map_err(|e| CliError::Io(e.to_string()))?;
            thin(
                &outcome.trajectory,
                solve.delta,
                ctx.config.output_times()?.2,
            )?
        }
    };
    if let Ok(c) = conserved_quantities(&traj, &problem) {
        let drift = c
            .iter()
            .map(|q| (q.mass - c[0].mass).abs() / c[0].mass.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        summary["mass_drift"] = json!(drift);
    }
    if ctx.config.get("problem.datum") == "plane" {
        let amplitude = Complex64::new(ctx.config.amplitude()?, 0.0);
        if let Ok(wave) = exact_plane_wave(u0.grid(), ctx.config.plane_mode()?, amplitude, &problem)
        {
            let error = traj
                .slices()
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let exact = wave.sample(traj.times().node(j));
                    s.difference(&exact).map(|d| d.l2_norm() / exact.l2_norm())
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            summary["plane_wave_error"] = json!(error);
        }
    }
    ctx.write("trajectory.txt", &trajectory_text(&traj))?;
    ctx.json("solve.json", &summary)?;
    println!(
        "solved {} output nodes on grid {:?}",
        traj.times().len(),
        u0.grid().mode_counts()
    );
    Ok(())
}

/// Keeps about `nodes` equally spaced lattice nodes of the plateau `[-δ, δ]`.
fn thin(traj: &SpaceTimeField, delta: f64, nodes: usize) -> Result<SpaceTimeField, CliError> {
    let times = traj.times();
    let inside: Vec<usize> = (0..times.len())
        .filter(|&j| times.node(j).abs() <= delta + 1e-12)
        .collect();
    let intervals = inside.len() - 1;
    let target = (intervals / nodes.saturating_sub(1).max(2)).max(1);
    let stride = (target..=intervals / 2)
        .find(|s| intervals % (2 * s) == 0)
        .unwrap_or(1);
    let picked: Vec<usize> = inside.iter().copied().step_by(stride).collect();
    let grid = TimeGrid::new(
        times.node(inside[0]),
        times.node(inside[intervals]),
        picked.len(),
    )?;
    Ok(SpaceTimeField::new(
        *traj.grid(),
        grid,
        picked.iter().map(|&j| traj.slice(j).clone()).collect(),
    )?)
}

pub fn verify(ctx: &Context, suite: &str) -> Result<(), CliError> {
    let suite = Suite::parse(suite)?;
    let lab = ctx.config.lab()?;
    let reports = run_suite(suite, &lab)?;
    ctx.write(
        &format!("verify_{}.csv", suite.label()),
        &reports_to_csv(&reports)?,
    )?;
    ctx.json(
        &format!("verify_{}.json", suite.label()),
        &json!({ "metadata": ctx.metadata(), "suite": suite.label(), "reports": reports }),
    )?;
    let mut failed = Vec::new();
    for report in &reports {
        for check in &report.checks {
            println!(
                "{} {}: {} = {:e} ({})",
                if check.passed { "PASS" } else { "FAIL" },
                report.suite,
                check.name,
                check.value,
                check.threshold
            );
            if !check.passed {
                failed.push(format!("{}: {}", report.suite, check.name));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "failed checks: {}",
            failed.join("; ")
        )))
    }
}

pub fn norms(ctx: &Context) -> Result<(), CliError> {
    let (s, b, p, delta) = ctx.config.norm_params()?;
    let warp = ctx.config.warp()?;
    let u0 = ctx.config.datum()?;
    let (t0, t1) = (-2.0 * delta, 2.0 * delta);
    warp.validate(t0, t1)?;
    let lambda = u0.active_frequency_sq();
    let taus = TauGrid::resolved(warp.measure(t0, t1), lambda)?;
    let times = TimeGrid::with_max_step(t0, t1, phase_step(&warp, t0, t1, lambda, taus.tau_max()))?;
    let spec = CutoffSpec::new(delta)?;
    let u = SpaceTimeField::from_fn(*u0.grid(), times, |t| {
        propagate(&u0, &warp, t, 0.0).scaled(Complex64::new(cutoff(t, &spec), 0.0))
    })?;
    let summary = json!({
        "metadata": ctx.metadata(),
        "datum": ctx.config.get("problem.datum"),
        "grid": u0.grid().mode_counts(),
        "h_s": sobolev_norm(&u0, s),
        "l_p": lp_space_norm(&inverse_transform(&u0), p, u0.grid())?,
        "x_sb_g_of_localized_free_evolution": xsb_g_norm(&u, s, b, &warp, &taus)?,
        "xtilde_sb_g_of_localized_free_evolution": xtilde_g_norm(&u, s, b, &warp, &taus)?,
        "params": { "s": s, "b": b, "p": p, "delta": delta },
        "lattice": { "n_t": times.len(), "n_tau": taus.len(), "tau_max": taus.tau_max() },
    });
    ctx.json("norms.json", &summary)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(())
}

/// Resolved numeric plan without running anything.
pub fn describe(config: &RunConfig) -> Result<String, CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "[configuration]");
    out.push_str(&config.canonical());
    let _ = writeln!(out, "\n[problem]");
    let grid = config.grid()?;
    let u0 = config.datum()?;
    let problem = config.problem()?;
    let solve = config.solve_config()?;
    let (t0, t1, n) = config.output_times()?;
    let _ = writeln!(
        out,
        "grid {:?}, datum radius {}",
        grid.mode_counts(),
        u0.active_radius()
    );
    let _ = writeln!(
        out,
        "split step: output {n} nodes on [{t0}, {t1}], warped step {}",
        solve.dt_warped
    );
    let (p0, p1) = (-2.0 * solve.delta, 2.0 * solve.delta);
    let warp = problem.warp();
    let lambda = grid.max_frequency_sq();
    let taus = TauGrid::resolved(warp.measure(p0, p1), lambda)?;
    let times = TimeGrid::with_max_step(p0, p1, phase_step(warp, p0, p1, lambda, taus.tau_max()))?;
    let _ = writeln!(
        out,
        "picard lattice [{p0}, {p1}]: n_t = {}, n_tau = {}, tau_max = {}",
        times.len(),
        taus.len(),
        taus.tau_max()
    );
    let lab = config.lab()?;
    let _ = writeln!(out, "\n[experiments]");
    for w in &lab.substitution_warps {
        let warp = TimeWarp::parse(w)?;
        for &n in &lab.substitution_ns {
            let g = TorusGrid::dealiased(2, n, 4)?;
            let steps = TimeGrid::resolved(lab.window.0, lab.window.1, &warp, (n * n) as f64)?;
            let _ = writeln!(
                out,
                "substitution {} N={n}: grid {:?}, n_t = {}",
                warp.label(),
                g.mode_counts(),
                steps.len()
            );
        }
    }
    let identity = TimeWarp::identity();
    for &n in &lab.growth_ns {
        let g = TorusGrid::dealiased(2, n, 4)?;
        let steps = TimeGrid::resolved(0.0, 2.0 * std::f64::consts::PI, &identity, (n * n) as f64)?;
        let _ = writeln!(
            out,
            "growth N={n}: grid {:?}, n_t = {}",
            g.mode_counts(),
            steps.len()
        );
    }
    let bw = TimeWarp::parse(&lab.bilinear_warp)?;
    for &n1 in &lab.bilinear_n1s {
        let g = TorusGrid::dealiased(2, n1 + lab.bilinear_n2, 2)?;
        let steps = TimeGrid::resolved(lab.window.0, lab.window.1, &bw, (n1 * n1) as f64)?;
        let _ = writeln!(
            out,
            "bilinear N1={n1} N2={}: grid {:?}, n_t = {}",
            lab.bilinear_n2,
            g.mode_counts(),
            steps.len()
        );
    }
    let xw = TimeWarp::parse(&lab.xsb_warp)?;
    let (x0, x1) = (-4.0 * lab.delta, 4.0 * lab.delta);
    let xt = TauGrid::resolved(xw.measure(x0, x1), 16.0)?;
    let xs = TimeGrid::with_max_step(x0, x1, phase_step(&xw, x0, x1, 16.0, xt.tau_max()))?;
    let _ = writeln!(
        out,
        "xsb probes: grid {:?}, n_t = {}, n_tau = {}, tau_max = {}",
        probe_grid()?.mode_counts(),
        xs.len(),
        xt.len(),
        xt.tau_max()
    );
    Ok(out)
}
