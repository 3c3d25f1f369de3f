//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Tolerances are pinned here, independently of the
//! thresholds the library reports use.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use warpnls::gauge::{backward_transport, forward_transport};
use warpnls::lab::{
    fit_exponent, gauge_convergence, plancherel_identities, reports_to_csv, reports_to_json,
    run_suite, ExperimentReport, LabConfig, Suite,
};
use warpnls::solver::{conserved_quantities, exact_plane_wave, split_step};
use warpnls::{
    build_reduction, picard_duhamel, CoefficientFunction, Error, FourierField, ProblemSpec,
    SolveConfig, TimeCoefficient, TimeGrid, TimeWarp, TorusGrid,
};

const PLANCHEREL_TOL: f64 = 1e-5;
const SUBSTITUTION_TOL: f64 = 1e-5;
const GROWTH_EXPONENT_MAX: f64 = 0.35;
const BILINEAR_EXPONENT_MAX: f64 = 0.1;
const DELTA_EXPONENT_BAND: f64 = 0.1;
const REDUCTION_TOL: f64 = 1e-12;
const ROUNDTRIP_TOL: f64 = 1e-8;
const GAUGE_ORDER_MIN: f64 = 2.0;
const PLANE_WAVE_TOL: f64 = 1e-6;
const MASS_DRIFT_TOL: f64 = 1e-9;
const ENERGY_ORDER: (f64, f64) = (1.8, 2.2);
const PICARD_ORACLE_TOL: f64 = 1e-4;
const NORM_IDENTITY_TOL: f64 = 1e-4;
const DEGENERACY_TOL: f64 = 1e-10;

struct Outcome {
    id: usize,
    title: &'static str,
    passed: bool,
    seconds: f64,
    budget: f64,
    detail: String,
}

impl Outcome {
    fn line(&self) -> String {
        let within = self.seconds < self.budget;
        let budget = if self.budget.is_finite() {
            format!("budget {:.0} s", self.budget)
        } else {
            "no budget".to_string()
        };
        format!(
            "{} criterion {:>2} {:<34} {:>7.1} s ({}) {}",
            if self.passed && within {
                "PASS"
            } else {
                "FAIL"
            },
            self.id,
            self.title,
            self.seconds,
            budget,
            self.detail
        )
    }

    fn ok(&self) -> bool {
        self.passed && self.seconds < self.budget
    }
}

fn report<'a>(reports: &'a [ExperimentReport], suite: &str) -> &'a ExperimentReport {
    reports
        .iter()
        .find(|r| r.suite == suite)
        .unwrap_or_else(|| panic!("suite {suite} missing"))
}

fn check_value(report: &ExperimentReport, name: &str) -> f64 {
    report
        .check(name)
        .unwrap_or_else(|| panic!("check {name} missing from {}", report.suite))
        .value
}

/// Independent brute force over all quadruples of `B(0,N)`.
fn lattice_oracle(n: i64) -> (u64, u64) {
    let ball: Vec<(i64, i64)> = (-n..=n)
        .flat_map(|a| (-n..=n).map(move |b| (a, b)))
        .filter(|(a, b)| a * a + b * b <= n * n)
        .collect();
    let mut count = 0;
    for p in &ball {
        for q in &ball {
            for r in &ball {
                for s in &ball {
                    if p.0 + q.0 == r.0 + s.0
                        && p.1 + q.1 == r.1 + s.1
                        && p.0 * p.0 + p.1 * p.1 + q.0 * q.0 + q.1 * q.1
                            == r.0 * r.0 + r.1 * r.1 + s.0 * s.0 + s.1 * s.1
                    {
                        count += 1;
                    }
                }
            }
        }
    }
    (count, ball.len() as u64)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for warp in [TimeWarp::cubic(), TimeWarp::power(2.0).unwrap()] {
        worst = worst.max(plancherel_identities(&warp).unwrap().worst());
    }
    Outcome {
        id: 1,
        title: "modified-transform Plancherel",
        passed: worst < PLANCHEREL_TOL,
        seconds: start.elapsed().as_secs_f64(),
        budget: 5.0,
        detail: format!("worst relative deviation {worst:.2e}"),
    }
}

fn criterion_2(reports: &[ExperimentReport]) -> Outcome {
    let r = report(reports, "substitution");
    let worst = r
        .rows
        .iter()
        .map(|row| (row.lhs - row.rhs).abs() / row.rhs)
        .fold(0.0, f64::max);
    Outcome {
        id: 2,
        title: "substitution identity",
        passed: r.rows.len() == 27 && worst < SUBSTITUTION_TOL,
        seconds: r.wall_time,
        budget: 120.0,
        detail: format!("{} cells, worst deviation {worst:.2e}", r.rows.len()),
    }
}

fn criterion_3(reports: &[ExperimentReport]) -> Outcome {
    let r = report(reports, "growth");
    let mut exact = true;
    let mut points = Vec::new();
    for row in &r.rows {
        points.push((row.n1 as f64, row.ratio));
        if row.n1 <= 8 {
            let (count, ball) = lattice_oracle(row.n1 as i64);
            let recovered = row.ratio.powi(4) * 2.0 * PI * (ball * ball) as f64;
            exact &= (recovered - count as f64).abs() < 1e-6 * count as f64;
        }
    }
    let ns: Vec<usize> = r.rows.iter().map(|row| row.n1).collect();
    let fit = fit_exponent(&points).unwrap();
    Outcome {
        id: 3,
        title: "L4 growth exponent",
        passed: ns == [4, 8, 16, 32] && exact && fit.exponent < GROWTH_EXPONENT_MAX,
        seconds: r.wall_time,
        budget: 300.0,
        detail: format!(
            "exponent {:.4}, lattice oracle {}",
            fit.exponent,
            if exact { "matched" } else { "mismatch" }
        ),
    }
}

fn criterion_4(reports: &[ExperimentReport]) -> Outcome {
    let r = report(reports, "bilinear");
    let points: Vec<(f64, f64)> = r
        .rows
        .iter()
        .filter(|row| row.experiment == "bilinear" && row.n2 == 2)
        .map(|row| (row.n1 as f64, row.ratio))
        .collect();
    let fit = fit_exponent(&points).unwrap();
    Outcome {
        id: 4,
        title: "bilinear min-dependence",
        passed: points.len() == 4 && fit.exponent <= BILINEAR_EXPONENT_MAX,
        seconds: r.wall_time,
        budget: 300.0,
        detail: format!("exponent in N1 {:.4}", fit.exponent),
    }
}

fn criterion_5(reports: &[ExperimentReport]) -> Outcome {
    let r = report(reports, "xsb");
    let b = 17.0 / 32.0;
    let points: Vec<(f64, f64)> = r
        .rows
        .iter()
        .filter(|row| row.experiment == "delta-scaling" && row.warp == "cubic")
        .map(|row| (2.0 * row.delta.powi(3) / 3.0, row.ratio))
        .collect();
    let fit = fit_exponent(&points).unwrap();
    let target = 0.5 - b;
    Outcome {
        id: 5,
        title: "delta-scaling of free evolution",
        passed: points.len() >= 3 && (fit.exponent - target).abs() <= DELTA_EXPONENT_BAND,
        seconds: r.wall_time,
        budget: 120.0,
        detail: format!("exponent {:.4} vs {target:.4}", fit.exponent),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let four = build_reduction(&[CoefficientFunction::constant(4.0).unwrap()], 64, 1e-13).unwrap();
    let degenerate = (four.axes()[0].circumference() - PI).abs()
        + four
            .phi()
            .iter()
            .chain(four.beta().iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max);
    let a = [CoefficientFunction::cosine(2.0, 1.0).unwrap()];
    let red = build_reduction(&a, 256, 1e-13).unwrap();
    let grid = TorusGrid::square(1, 64).unwrap();
    let mut roundtrip: f64 = 0.0;
    for top in 1..=8i64 {
        let u0 = FourierField::from_modes(grid, |k| {
            if k[0].abs() <= top {
                Complex64::new(1.0 / (1.0 + k[0].abs() as f64), 0.3 * k[0] as f64 / 8.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let back = backward_transport(&forward_transport(&u0, &red).unwrap(), &red, &grid).unwrap();
        roundtrip = roundtrip.max(back.difference(&u0).unwrap().l2_norm() / u0.l2_norm());
    }
    Outcome {
        id: 6,
        title: "reduction degeneracy and roundtrip",
        passed: degenerate < REDUCTION_TOL && roundtrip < ROUNDTRIP_TOL,
        seconds: start.elapsed().as_secs_f64(),
        budget: 10.0,
        detail: format!("constant-4 deviation {degenerate:.1e}, roundtrip {roundtrip:.1e}"),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let a = [CoefficientFunction::cosine(2.0, 1.0).unwrap()];
    let grid = TorusGrid::square(1, 128).unwrap();
    let u0 = FourierField::from_modes(grid, |k| {
        let r = k[0].abs() as f64;
        if r <= 3.0 {
            Complex64::new(0.25 * 2.0 * PI * (-r).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let steps = [0.005, 0.0025, 0.00125, 0.000625];
    let (runs, fit) = gauge_convergence(&a, 5, &u0, 128, 0.2, &steps).unwrap();
    let pairwise: Vec<f64> = runs
        .windows(2)
        .map(|w| (w[0].residual / w[1].residual).log2())
        .collect();
    let decreasing = runs.windows(2).all(|w| w[1].residual < w[0].residual);
    Outcome {
        id: 7,
        title: "gauge-covariant solve order",
        passed: decreasing && fit.exponent >= GAUGE_ORDER_MIN,
        seconds: start.elapsed().as_secs_f64(),
        budget: 180.0,
        detail: format!(
            "fitted order {:.3}, pairwise {}",
            fit.exponent,
            pairwise
                .iter()
                .map(|o| format!("{o:.2}"))
                .collect::<Vec<_>>()
                .join("/")
        ),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut wave_error: f64 = 0.0;
    let mut mass_drift: f64 = 0.0;
    let mut orders = Vec::new();
    for (dim, power, mode) in [(2usize, 3u32, [2, 1]), (1, 5, [3, 0])] {
        let problem =
            ProblemSpec::new(dim, power, TimeWarp::cubic(), TimeCoefficient::Warp).unwrap();
        let grid = TorusGrid::dealiased(dim, 4, power as usize).unwrap();
        let wave = exact_plane_wave(&grid, mode, Complex64::new(0.8, 0.3), &problem).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 21).unwrap();
        let traj = split_step(&problem, &wave.sample(0.0), &times, 1e-3).unwrap();
        for (j, &t) in times.nodes().iter().enumerate() {
            let exact = wave.sample(t);
            wave_error = wave_error
                .max(traj.slice(j).difference(&exact).unwrap().l2_norm() / exact.l2_norm());
        }
        let u0 = FourierField::from_modes(grid, |k| {
            let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            if r2 <= 4.0 {
                Complex64::new(0.6 * (-r2 / 2.0).exp(), 0.1 * k[0] as f64) * grid.volume()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut drifts = Vec::new();
        for dt in [0.002, 0.001, 0.0005, 0.00025] {
            let times = TimeGrid::new(0.0, 1.0, 11).unwrap();
            let c = conserved_quantities(&split_step(&problem, &u0, &times, dt).unwrap(), &problem)
                .unwrap();
            for q in &c {
                mass_drift = mass_drift.max((q.mass - c[0].mass).abs() / c[0].mass);
            }
            let energy = c
                .iter()
                .map(|q| (q.energy - c[0].energy).abs() / c[0].energy.abs())
                .fold(0.0, f64::max);
            drifts.push((dt, energy));
        }
        orders.push(fit_exponent(&drifts).unwrap().exponent);
    }
    let orders_ok = orders
        .iter()
        .all(|o| (ENERGY_ORDER.0..=ENERGY_ORDER.1).contains(o));
    Outcome {
        id: 8,
        title: "exact solutions and conservation",
        passed: wave_error < PLANE_WAVE_TOL && mass_drift < MASS_DRIFT_TOL && orders_ok,
        seconds: start.elapsed().as_secs_f64(),
        budget: 60.0,
        detail: format!(
            "plane-wave error {wave_error:.1e}, mass drift {mass_drift:.1e}, energy orders {:.2}/{:.2}",
            orders[0], orders[1]
        ),
    }
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let problem = ProblemSpec::new(2, 3, TimeWarp::cubic(), TimeCoefficient::Warp).unwrap();
    let grid = TorusGrid::dealiased(2, 2, 3).unwrap();
    let u0 = FourierField::from_modes(grid, |k| {
        let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if r2 <= 2.0 {
            Complex64::new(0.3 * grid.volume() * (-r2).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let config = SolveConfig::default();
    let outcome = picard_duhamel(&problem, &u0, &config).unwrap();
    let converged = outcome.report.converged && outcome.report.iterations.len() <= 12;
    let times = outcome.trajectory.times();
    let inside: Vec<usize> = (0..times.len())
        .filter(|&j| times.node(j).abs() <= config.delta + 1e-12)
        .collect();
    let window = TimeGrid::new(
        times.node(inside[0]),
        times.node(*inside.last().unwrap()),
        inside.len(),
    )
    .unwrap();
    let oracle = split_step(&problem, &u0, &window, config.dt_warped / 10.0).unwrap();
    let agreement = inside
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            outcome
                .trajectory
                .slice(j)
                .difference(oracle.slice(i))
                .unwrap()
                .l2_norm()
        })
        .fold(0.0, f64::max);
    let medium = FourierField::plane_wave(grid, [1, 0], Complex64::new(4.0, 0.0)).unwrap();
    let small_delta = SolveConfig {
        delta: 0.005,
        ..SolveConfig::default()
    };
    let small_ok = picard_duhamel(&problem, &medium, &small_delta).is_ok();
    let scaled = SolveConfig {
        delta: 0.5,
        ..SolveConfig::default()
    };
    let fired = matches!(
        picard_duhamel(&problem, &medium, &scaled),
        Err(Error::ContractionFailure { .. })
    );
    Outcome {
        id: 9,
        title: "contraction solver",
        passed: converged && agreement < PICARD_ORACLE_TOL && small_ok && fired,
        seconds: start.elapsed().as_secs_f64(),
        budget: 300.0,
        detail: format!(
            "{} iterations, oracle gap {agreement:.1e}, delta x100 {}",
            outcome.report.iterations.len(),
            if fired {
                "fails to contract"
            } else {
                "did not fail"
            }
        ),
    }
}

fn criterion_10(reports: &[ExperimentReport]) -> Outcome {
    let r = report(reports, "identities");
    let worst = r
        .rows
        .iter()
        .filter(|row| row.experiment == "norm-identity")
        .map(|row| (row.ratio - 1.0).abs())
        .fold(0.0, f64::max);
    let degeneracy = check_value(r, "identity-warp degeneracy");
    Outcome {
        id: 10,
        title: "norm identity",
        passed: worst < NORM_IDENTITY_TOL && degeneracy < DEGENERACY_TOL,
        seconds: r.wall_time,
        budget: 120.0,
        detail: format!("worst deviation {worst:.1e}, identity-warp degeneracy {degeneracy:.1e}"),
    }
}

fn criterion_11(first: &[ExperimentReport], config: &LabConfig) -> Outcome {
    let start = Instant::now();
    let second = run_suite(Suite::All, config).unwrap();
    let csv_same = reports_to_csv(first).unwrap() == reports_to_csv(&second).unwrap();
    let json_same = reports_to_json(first).unwrap() == reports_to_json(&second).unwrap();
    Outcome {
        id: 11,
        title: "determinism",
        passed: csv_same && json_same,
        seconds: start.elapsed().as_secs_f64(),
        budget: f64::INFINITY,
        detail: format!("csv identical {csv_same}, json identical {json_same}"),
    }
}

#[test]
fn acceptance_criteria() {
    let config = LabConfig::default();
    let reports = run_suite(Suite::All, &config).unwrap();
    let outcomes = vec![
        criterion_1(),
        criterion_2(&reports),
        criterion_3(&reports),
        criterion_4(&reports),
        criterion_5(&reports),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(&reports),
        criterion_11(&reports, &config),
    ];
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.ok()).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
