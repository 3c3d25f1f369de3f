//! Nonlinear solvers for the time-degenerate Schrödinger equation
//!
//! ```text
//! i∂_t u + g'(t) Δu = g'(t) h(t) (w(x)|u|^{p-1}u + β(x) u),
//! ```
//!
//! where `h ≡ 1` for the `g'`-variant, `h = f/g'` for the scaled variant, and
//! the weight `w` and potential `β` come from a gauge reduction (both trivial
//! otherwise). In warped time `t' = g(t)` the equation is autonomous up to
//! `h`, which the split-step solver exploits. The Picard solver iterates the
//! time-localized Duhamel map in the `X̃^{s,b}_g` metric.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::Reduction;
use crate::quadrature::cumulative;
use crate::spectral::{
    forward_transform, inverse_transform, sobolev_norm, FourierField, Mode, TorusGrid,
};
use crate::warp::{phase_step, propagate, propagate_by, TauGrid, TimeGrid, TimeWarp};
use crate::xsb::{cutoff, xtilde_g_norm, CutoffSpec, SpaceTimeField};

/// Bounded time profile `h` of the scaled variant, `f = g'·h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TimeProfile {
    Const(f64),
    /// `c0 + c1 t`.
    Affine(f64, f64),
    /// `e^{rate·t}`.
    Exp(f64),
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const(c) => c,
            TimeProfile::Affine(c0, c1) => c0 + c1 * t,
            TimeProfile::Exp(r) => (r * t).exp(),
        }
    }

    /// Parses `const:c`, `affine:c0,c1` or `exp:rate`.
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let bad = || Error::UnknownLabel {
            label: label.into(),
            reason: "expected const:<c>, affine:<c0>,<c1> or exp:<rate>".into(),
        };
        let (kind, rest) = label.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind, nums.as_slice()) {
            ("const", [c]) => Ok(TimeProfile::Const(*c)),
            ("affine", [a, b]) => Ok(TimeProfile::Affine(*a, *b)),
            ("exp", [r]) => Ok(TimeProfile::Exp(*r)),
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TimeProfile::Const(c) => format!("const:{c}"),
            TimeProfile::Affine(a, b) => format!("affine:{a},{b}"),
            TimeProfile::Exp(r) => format!("exp:{r}"),
        }
    }
}

/// Time coefficient multiplying the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeCoefficient {
    /// `g'(t)`, matching the dispersion.
    Warp,
    /// `f = g'·h` with a bounded profile `h`.
    Scaled(TimeProfile),
    /// Constant one; only meaningful with the identity warp.
    Unit,
}

/// Equation data for the solvers.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    dim: usize,
    power: u32,
    warp: TimeWarp,
    coefficient: TimeCoefficient,
    potential: Option<Vec<f64>>,
    weight: Option<Vec<f64>>,
    coupling: f64,
}

impl ProblemSpec {
    /// Validates `(dim, power)` against the supported pairs `(2, 3)` and
    /// `(1, 5)` and the compatibility of the time coefficient with the warp.
    pub fn new(
        dim: usize,
        power: u32,
        warp: TimeWarp,
        coefficient: TimeCoefficient,
    ) -> Result<Self> {
        if !matches!((dim, power), (2, 3) | (1, 5)) {
            return Err(Error::param(
                "problem",
                format!("(dim, power) = ({dim}, {power}) is not supported; use (2, 3) or (1, 5)"),
            ));
        }
        if coefficient == TimeCoefficient::Unit && !warp.is_identity() {
            return Err(Error::param(
                "coefficient",
                "a unit time coefficient makes f/g' unbounded for a degenerate warp",
            ));
        }
        Ok(ProblemSpec {
            dim,
            power,
            warp,
            coefficient,
            potential: None,
            weight: None,
            coupling: 1.0,
        })
    }

    /// The reduced problem `i∂_t w + Δw = e^{-(p-1)Φ}|w|^{p-1}w + βw`.
    pub fn reduced(red: &Reduction, power: u32) -> Result<Self> {
        let mut spec = Self::new(
            red.dim(),
            power,
            TimeWarp::identity(),
            TimeCoefficient::Unit,
        )?;
        spec.potential = Some(red.beta());
        spec.weight = Some(red.weight(power));
        Ok(spec)
    }

    /// Scales the nonlinearity; zero gives the linear equation.
    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn warp(&self) -> &TimeWarp {
        &self.warp
    }

    pub fn coefficient(&self) -> TimeCoefficient {
        self.coefficient
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    pub fn weight(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }

    /// `h(t)` in original time.
    fn profile(&self, t: f64) -> f64 {
        match self.coefficient {
            TimeCoefficient::Scaled(p) => p.eval(t),
            _ => 1.0,
        }
    }

    fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::param(
                "grid",
                format!(
                    "problem is {}-dimensional, grid is {}",
                    self.dim,
                    grid.dim()
                ),
            ));
        }
        for (name, field) in [("potential", &self.potential), ("weight", &self.weight)] {
            if let Some(v) = field {
                if v.len() != grid.len() {
                    return Err(Error::param(name, "samples do not match the grid"));
                }
            }
        }
        Ok(())
    }

    fn check_profile(&self, t0: f64, t1: f64) -> Result<()> {
        if let TimeCoefficient::Scaled(p) = self.coefficient {
            let bounded =
                (0..=1000).all(|i| p.eval(t0 + (t1 - t0) * i as f64 / 1000.0).is_finite());
            if !bounded {
                return Err(Error::param(
                    "coefficient",
                    "f/g' must stay bounded on the window",
                ));
            }
        }
        Ok(())
    }

    /// Pointwise right-hand side `h(t)(coupling·w|v|^{p-1}v + βv)`.
    fn nonlinearity(&self, samples: &mut [Complex64], t: f64) {
        let h = self.profile(t) * self.coupling;
        let p1 = self.power as i32 - 1;
        for (i, v) in samples.iter_mut().enumerate() {
            let w = self.weight.as_ref().map_or(1.0, |w| w[i]);
            let beta = self.potential.as_ref().map_or(0.0, |b| b[i]);
            *v *= h * w * v.norm().powi(p1) + beta;
        }
    }

    /// Exact flow of `i∂_{t'} v = (h·coupling·w|v|^{p-1} + β) v` over `tau`.
    fn phase_flow(&self, samples: &mut [Complex64], tau: f64, h: f64) {
        let p1 = self.power as i32 - 1;
        for (i, v) in samples.iter_mut().enumerate() {
            let w = self.weight.as_ref().map_or(1.0, |w| w[i]);
            let beta = self.potential.as_ref().map_or(0.0, |b| b[i]);
            let rate = h * self.coupling * w * v.norm().powi(p1) + beta;
            *v *= Complex64::from_polar(1.0, -tau * rate);
        }
    }
}

/// Smallest `N` such that coefficients outside the box `max_j |k_j| ≤ N`
/// carry at most a `1e-10` fraction of the amplitude.
pub fn effective_radius(field: &FourierField) -> usize {
    let total: f64 = field.coeffs().iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0;
    }
    let mut by_radius: Vec<(usize, f64)> = field
        .iter()
        .map(|(k, c)| {
            (
                k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize,
                c.norm_sqr(),
            )
        })
        .collect();
    by_radius.sort_by_key(|&(r, _)| std::cmp::Reverse(r));
    let mut tail = 0.0;
    for (r, e) in by_radius {
        tail += e;
        if tail > 1e-20 * total {
            return r;
        }
    }
    0
}

fn check_alias(grid: &TorusGrid, u0: &FourierField, power: u32) -> Result<()> {
    let n = effective_radius(u0);
    if !grid.resolves(n, power as usize) {
        return Err(Error::Resolution(format!(
            "grid {:?} cannot resolve degree-{power} products of data with radius {n}; need at least {} points per axis",
            grid.mode_counts(),
            (power as usize + 1) * n + 1
        )));
    }
    Ok(())
}

/// Strang splitting in warped time. The nonlinear half steps are exact
/// phase rotations, the linear step is the exact multiplier. Output is
/// sampled on `times`; negative times are integrated backwards from zero.
pub fn split_step(
    problem: &ProblemSpec,
    u0: &FourierField,
    times: &TimeGrid,
    dt_warped: f64,
) -> Result<SpaceTimeField> {
    let grid = *u0.grid();
    problem.check_grid(&grid)?;
    problem.check_profile(times.start().min(0.0), times.end().max(0.0))?;
    if !(dt_warped > 0.0) {
        return Err(Error::param(
            "dt",
            format!("warped time step must be positive, got {dt_warped}"),
        ));
    }
    check_alias(&grid, u0, problem.power)?;
    let warp = &problem.warp;
    let peak = inverse_transform(u0)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let h_max = (0..=1000)
        .map(|i| {
            problem
                .profile(times.start() + (times.end() - times.start()) * i as f64 / 1000.0)
                .abs()
        })
        .fold(0.0, f64::max);
    let w_max = problem
        .weight
        .as_ref()
        .map_or(1.0, |w| w.iter().cloned().fold(0.0, f64::max));
    let b_max = problem
        .potential
        .as_ref()
        .map_or(0.0, |b| b.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let rate = problem.coupling.abs() * h_max * w_max * peak.powi(problem.power as i32 - 1) + b_max;
    if dt_warped * rate > PI / 4.0 {
        return Err(Error::Resolution(format!(
            "dt = {dt_warped} resolves the nonlinear phase rate {rate:.3e} with fewer than 8 steps per period"
        )));
    }
    let profile_at = |s: f64| problem.profile(warp.g_inverse(s));
    let nodes = times.nodes();
    let mut slices: Vec<Option<FourierField>> = vec![None; nodes.len()];
    for forward in [true, false] {
        let mut order: Vec<usize> = (0..nodes.len())
            .filter(|&i| {
                if forward {
                    nodes[i] >= 0.0
                } else {
                    nodes[i] < 0.0
                }
            })
            .collect();
        if !forward {
            order.reverse();
        }
        let mut state = u0.clone();
        let mut current = 0.0;
        for i in order {
            let target = warp.g(nodes[i]);
            let span = target - current;
            let steps = (span.abs() / dt_warped * (1.0 - 1e-12)).ceil() as usize;
            if steps > 0 {
                let h = span / steps as f64;
                for n in 0..steps {
                    let a = current + n as f64 * h;
                    strang_step(
                        problem,
                        &mut state,
                        h,
                        profile_at(a + 0.25 * h),
                        profile_at(a + 0.75 * h),
                    );
                }
            }
            current = target;
            slices[i] = Some(state.clone());
        }
    }
    SpaceTimeField::new(
        grid,
        *times,
        slices
            .into_iter()
            .map(|s| s.expect("every node visited"))
            .collect(),
    )
}

fn strang_step(problem: &ProblemSpec, state: &mut FourierField, h: f64, first: f64, second: f64) {
    let grid = *state.grid();
    let mut samples = inverse_transform(state);
    problem.phase_flow(&mut samples, 0.5 * h, first);
    let mid = forward_transform(&grid, &samples).expect("grid sizes agree");
    let moved = propagate_by(&mid, h);
    let mut samples = inverse_transform(&moved);
    problem.phase_flow(&mut samples, 0.5 * h, second);
    *state = forward_transform(&grid, &samples).expect("grid sizes agree");
}

/// Closed-form plane wave `A e^{i(k·x - θ(t))}` with
/// `θ(t) = g(t)(|k|_L² + coupling·|A|^{p-1})`.
#[derive(Clone, Debug)]
pub struct PlaneWave {
    grid: TorusGrid,
    mode: Mode,
    amplitude: Complex64,
    rate: f64,
    warp: TimeWarp,
}

impl PlaneWave {
    pub fn theta(&self, t: f64) -> f64 {
        self.warp.g(t) * self.rate
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn sample(&self, t: f64) -> FourierField {
        let a = self.amplitude * Complex64::from_polar(1.0, -self.theta(t));
        FourierField::plane_wave(self.grid, self.mode, a).expect("mode checked at construction")
    }

    pub fn trajectory(&self, times: &TimeGrid) -> SpaceTimeField {
        SpaceTimeField::from_fn(self.grid, *times, |t| self.sample(t))
            .expect("slices share the grid")
    }
}

/// Exact plane-wave solution of the `g'`-variant problem.
pub fn exact_plane_wave(
    grid: &TorusGrid,
    mode: Mode,
    amplitude: Complex64,
    problem: &ProblemSpec,
) -> Result<PlaneWave> {
    if problem.coefficient != TimeCoefficient::Warp
        || problem.potential.is_some()
        || problem.weight.is_some()
    {
        return Err(Error::param(
            "problem",
            "plane waves solve the g'-variant without potential or weight",
        ));
    }
    problem.check_grid(grid)?;
    grid.index_of(mode).ok_or_else(|| Error::ModeOutOfRange {
        mode,
        range: format!("{:?}", grid.mode_counts()),
    })?;
    let rate = grid.frequency_sq(mode)
        + problem.coupling * amplitude.norm().powi(problem.power as i32 - 1);
    Ok(PlaneWave {
        grid: *grid,
        mode,
        amplitude,
        rate,
        warp: problem.warp.clone(),
    })
}

/// Mass and warped-time energy of one slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conserved {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
}

/// Mass `‖u‖²` and energy
/// `∫ ½|∇u|² + coupling/(p+1)·w|u|^{p+1} + ½β|u|²` along a trajectory.
pub fn conserved_quantities(
    traj: &SpaceTimeField,
    problem: &ProblemSpec,
) -> Result<Vec<Conserved>> {
    if matches!(problem.coefficient, TimeCoefficient::Scaled(_)) {
        return Err(Error::param(
            "problem",
            "the scaled variant has no conserved energy",
        ));
    }
    let grid = *traj.grid();
    problem.check_grid(&grid)?;
    let p = problem.power as f64;
    Ok(traj
        .slices()
        .iter()
        .enumerate()
        .map(|(j, slice)| {
            let mass = slice.l2_norm().powi(2);
            let kinetic: f64 = slice
                .iter()
                .map(|(k, c)| grid.frequency_sq(k) * c.norm_sqr())
                .sum::<f64>()
                / grid.volume();
            let samples = inverse_transform(slice);
            let cell = grid.cell_volume();
            let potential: f64 = samples
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let w = problem.weight.as_ref().map_or(1.0, |w| w[i]);
                    let beta = problem.potential.as_ref().map_or(0.0, |b| b[i]);
                    let a2 = v.norm_sqr();
                    problem.coupling / (p + 1.0) * w * a2.powf(0.5 * (p + 1.0)) + 0.5 * beta * a2
                })
                .sum::<f64>()
                * cell;
            Conserved {
                t: traj.times().node(j),
                mass,
                energy: 0.5 * kinetic + potential,
            }
        })
        .collect())
}

/// Parameters of the contraction argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Spatial regularity `s`.
    pub s: f64,
    /// `b = 1/2 + ε`, `b' = 1/2 - 4ε`.
    pub eps: f64,
    /// Half-width `δ` of the plateau of `χ_I`.
    pub delta: f64,
    /// Ball constant; calibrated on a probe set when absent.
    pub c_prime: Option<f64>,
    pub max_iter: usize,
    /// Relative tolerance on successive differences.
    pub tol: f64,
    /// Step of the split-step solver in warped time.
    pub dt_warped: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            s: 0.0,
            eps: 1.0 / 32.0,
            delta: 0.5,
            c_prime: None,
            max_iter: 12,
            tol: 1e-10,
            dt_warped: 1e-3,
        }
    }
}

impl SolveConfig {
    pub fn b(&self) -> f64 {
        0.5 + self.eps
    }

    pub fn b_prime(&self) -> f64 {
        0.5 - 4.0 * self.eps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0 / 16.0) {
            return Err(Error::param(
                "eps",
                format!("{} lies outside the admissible range (0, 1/16), so b = 1/2 + eps leaves (1/2, 9/16)", self.eps),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(
                "delta",
                format!("{} lies outside (0, 1)", self.delta),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.dt_warped > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if let Some(c) = self.c_prime {
            if !(c > 0.0) {
                return Err(Error::param("c_prime", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one Picard iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `X̃^{s,b}_g` norm of the difference to the previous iterate.
    pub difference: f64,
    /// `X̃^{s,b}_g` norm of the iterate.
    pub norm: f64,
}

/// Full record of a Picard run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationReport {
    pub iterations: Vec<IterationRecord>,
    /// Ratio of the last two successive differences.
    pub contraction_factor: Option<f64>,
    pub radius: f64,
    pub c_prime: f64,
    pub b: f64,
    pub b_prime: f64,
    pub n_t: usize,
    pub n_tau: usize,
    pub tau_max: f64,
    pub converged: bool,
}

/// Result of a converged Picard run.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    /// Fixed point on `[-2δ, 2δ]`; it solves the equation on `[-δ, δ]`.
    pub trajectory: SpaceTimeField,
    pub report: IterationReport,
}

struct DuhamelMap<'a> {
    problem: &'a ProblemSpec,
    grid: TorusGrid,
    times: TimeGrid,
    chi: Vec<f64>,
    free: Vec<FourierField>,
    origin: usize,
}

impl DuhamelMap<'_> {
    /// `χ S(t)u0 - i χ(t) ∫_0^t S(t,s) g'(s) F(χu)(s) ds`.
    fn apply(&self, u: &[FourierField]) -> Vec<FourierField> {
        let warp = &self.problem.warp;
        let grid = self.grid;
        let nodes = self.times.nodes();
        let integrand: Vec<Vec<Complex64>> = nodes
            .par_iter()
            .enumerate()
            .map(|(j, &t)| {
                let mut samples = inverse_transform(&u[j]);
                let scale = self.chi[j];
                for v in samples.iter_mut() {
                    *v *= scale;
                }
                self.problem.nonlinearity(&mut samples, t);
                let mut f = forward_transform(&grid, &samples).expect("grid sizes agree");
                let gt = warp.g(t);
                let gp = warp.g_prime(t);
                f.apply_multiplier(|k| Complex64::from_polar(gp, gt * grid.frequency_sq(k)));
                f.into_coeffs()
            })
            .collect();
        let n_modes = grid.len();
        let h = self.times.step();
        let mut integrals = vec![vec![Complex64::new(0.0, 0.0); n_modes]; nodes.len()];
        let mut series = vec![Complex64::new(0.0, 0.0); nodes.len()];
        for m in 0..n_modes {
            if integrand
                .iter()
                .all(|row| row[m] == Complex64::new(0.0, 0.0))
            {
                continue;
            }
            for (s, row) in series.iter_mut().zip(&integrand) {
                *s = row[m];
            }
            for (j, v) in cumulative(&series, self.origin, h).into_iter().enumerate() {
                integrals[j][m] = v;
            }
        }
        nodes
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let gt = warp.g(t);
                let mut out = self.free[j].clone();
                for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
                    let k = grid.mode_of(i);
                    let duhamel = Complex64::new(0.0, -1.0)
                        * integrals[j][i]
                        * Complex64::from_polar(1.0, -gt * grid.frequency_sq(k));
                    *c = self.chi[j] * (*c + duhamel);
                }
                out
            })
            .collect()
    }
}

/// Probe data used to calibrate `C'`: three plane waves and a smooth bell.
fn calibration_probes(grid: &TorusGrid) -> Vec<FourierField> {
    let one = Complex64::new(1.0, 0.0);
    let mut probes = Vec::new();
    let candidates: [Mode; 3] = if grid.dim() == 2 {
        [[0, 0], [1, 0], [1, 1]]
    } else {
        [[0, 0], [1, 0], [2, 0]]
    };
    for k in candidates {
        if let Ok(p) = FourierField::plane_wave(*grid, k, one) {
            probes.push(p);
        }
    }
    probes.push(FourierField::from_modes(*grid, |k| {
        let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if r2 <= 4.0 {
            Complex64::new((-r2 / 2.0).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }));
    probes
}

/// Picard iteration of the Duhamel map on `[-2δ, 2δ]`.
///
/// Converges when the successive difference drops below `tol` times the
/// iterate norm. Fails with [`Error::ContractionFailure`] when an iterate
/// leaves the ball of radius `R = 2C'δ^{1/2-b}‖u0‖_{H^s}` or the differences
/// grow three times in a row, and with [`Error::NotConverged`] after
/// `max_iter` iterations.
pub fn picard_duhamel(
    problem: &ProblemSpec,
    u0: &FourierField,
    config: &SolveConfig,
) -> Result<PicardOutcome> {
    config.validate()?;
    let grid = *u0.grid();
    problem.check_grid(&grid)?;
    let delta = config.delta;
    let (t0, t1) = (-2.0 * delta, 2.0 * delta);
    problem.check_profile(t0, t1)?;
    check_alias(&grid, u0, problem.power)?;
    let warp = &problem.warp;
    let lambda = grid.max_frequency_sq();
    let taus = TauGrid::resolved(warp.measure(t0, t1), lambda)?;
    let times = TimeGrid::with_max_step(t0, t1, phase_step(warp, t0, t1, lambda, taus.tau_max()))?;
    let origin = times
        .index_of(0.0)
        .expect("symmetric lattice contains zero");
    let spec = CutoffSpec::new(delta)?;
    let chi: Vec<f64> = times.nodes().iter().map(|&t| cutoff(t, &spec)).collect();
    let (s, b) = (config.s, config.b());
    let scale = delta.powf(0.5 - b);
    let localized_free = |phi: &FourierField| -> Result<SpaceTimeField> {
        let slices = times
            .nodes()
            .iter()
            .zip(&chi)
            .map(|(&t, &c)| propagate(phi, warp, t, 0.0).scaled(Complex64::new(c, 0.0)))
            .collect();
        SpaceTimeField::new(grid, times, slices)
    };
    let c_prime = match config.c_prime {
        Some(c) => c,
        None => {
            let mut worst: f64 = 0.0;
            for probe in calibration_probes(&grid) {
                let lhs = xtilde_g_norm(&localized_free(&probe)?, s, b, warp, &taus)?;
                worst = worst.max(lhs / (scale * sobolev_norm(&probe, s)));
            }
            2.0 * worst
        }
    };
    let radius = 2.0 * c_prime * scale * sobolev_norm(u0, s);
    let mut report = IterationReport {
        radius,
        c_prime,
        b,
        b_prime: config.b_prime(),
        n_t: times.len(),
        n_tau: taus.len(),
        tau_max: taus.tau_max(),
        ..IterationReport::default()
    };
    let free: Vec<FourierField> = localized_free(u0)?.into_slices();
    let map = DuhamelMap {
        problem,
        grid,
        times,
        chi,
        free,
        origin,
    };
    let mut current = vec![FourierField::zeros(grid); times.len()];
    let mut growth_streak = 0;
    for iteration in 1..=config.max_iter {
        let next = map.apply(&current);
        let diff_slices = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a.difference(b))
            .collect::<Result<Vec<_>>>()?;
        let difference = xtilde_g_norm(
            &SpaceTimeField::new(grid, times, diff_slices)?,
            s,
            b,
            warp,
            &taus,
        )?;
        let next_field = SpaceTimeField::new(grid, times, next)?;
        let norm = xtilde_g_norm(&next_field, s, b, warp, &taus)?;
        if let Some(prev) = report.iterations.last() {
            report.contraction_factor =
                (prev.difference > 0.0).then(|| difference / prev.difference);
            growth_streak = if difference > prev.difference {
                growth_streak + 1
            } else {
                0
            };
        }
        report.iterations.push(IterationRecord {
            iteration,
            difference,
            norm,
        });
        log::debug!("picard iteration {iteration}: difference {difference:.3e}, norm {norm:.3e}, radius {radius:.3e}");
        if !norm.is_finite() || norm > radius * (1.0 + 1e-12) {
            return Err(Error::ContractionFailure {
                reason: format!("iterate {iteration} has norm {norm:.3e} outside the ball of radius {radius:.3e}"),
                report: Box::new(report),
            });
        }
        if growth_streak >= 3 {
            return Err(Error::ContractionFailure {
                reason: "successive differences grew three times in a row".into(),
                report: Box::new(report),
            });
        }
        current = next_field.into_slices();
        if difference <= config.tol * norm || (difference == 0.0 && norm == 0.0) {
            report.converged = true;
            return Ok(PicardOutcome {
                trajectory: SpaceTimeField::new(grid, times, current)?,
                report,
            });
        }
    }
    Err(Error::NotConverged {
        max_iter: config.max_iter,
        report: Box::new(report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cubic_problem() -> ProblemSpec {
        ProblemSpec::new(2, 3, TimeWarp::cubic(), TimeCoefficient::Warp).unwrap()
    }

    #[test]
    fn problem_validation() {
        assert!(ProblemSpec::new(2, 5, TimeWarp::identity(), TimeCoefficient::Warp).is_err());
        assert!(ProblemSpec::new(1, 5, TimeWarp::cubic(), TimeCoefficient::Unit).is_err());
        assert!(ProblemSpec::new(1, 5, TimeWarp::identity(), TimeCoefficient::Unit).is_ok());
        assert_eq!(
            TimeProfile::parse("affine:1,0.5").unwrap(),
            TimeProfile::Affine(1.0, 0.5)
        );
        assert!(TimeProfile::parse("affine:1").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolveConfig::default();
        assert_eq!(c.b(), 17.0 / 32.0);
        assert_eq!(c.b_prime(), 3.0 / 8.0);
        c.validate().unwrap();
        c.eps = 0.1;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("(0, 1/16)"), "{msg}");
        c.eps = 0.03;
        c.delta = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn plane_wave_phase() {
        let grid = TorusGrid::square(2, 16).unwrap();
        let free =
            exact_plane_wave(&grid, [2, 1], Complex64::new(0.0, 0.0), &cubic_problem()).unwrap();
        assert_relative_eq!(
            free.theta(1.2),
            5.0 * 1.2f64.powi(3) / 3.0,
            max_relative = 1e-14
        );
        let flat =
            exact_plane_wave(&grid, [0, 0], Complex64::new(0.7, 0.0), &cubic_problem()).unwrap();
        assert_relative_eq!(flat.theta(0.9), 0.729 / 3.0 * 0.49, max_relative = 1e-13);
        let wave =
            exact_plane_wave(&grid, [2, 1], Complex64::new(1.0, 0.0), &cubic_problem()).unwrap();
        assert_relative_eq!(wave.theta(1.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_split_step_is_propagation() {
        let grid = TorusGrid::square(2, 16).unwrap();
        let u0 = FourierField::from_modes(grid, |k| {
            if k[0].abs() + k[1].abs() <= 3 {
                Complex64::new(1.0 / (1.0 + (k[0] * k[0]) as f64), 0.2 * k[1] as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let problem = cubic_problem().with_coupling(0.0);
        let times = TimeGrid::new(-1.0, 1.0, 9).unwrap();
        let traj = split_step(&problem, &u0, &times, 1e-2).unwrap();
        for (j, t) in times.nodes().into_iter().enumerate() {
            let exact = propagate(&u0, problem.warp(), t, 0.0);
            assert!(traj.slice(j).difference(&exact).unwrap().l2_norm() < 1e-12 * u0.l2_norm());
        }
    }

    #[test]
    fn zero_datum_is_a_fixed_point() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let out = picard_duhamel(
            &cubic_problem(),
            &FourierField::zeros(grid),
            &SolveConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.iterations.len(), 1);
        assert!(out.report.converged);
        assert!(out.trajectory.slices().iter().all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn large_step_rejected() {
        let grid = TorusGrid::square(2, 16).unwrap();
        let u0 = FourierField::plane_wave(grid, [1, 0], Complex64::new(3.0, 0.0)).unwrap();
        let times = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            split_step(&cubic_problem(), &u0, &times, 0.5),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn alias_contract_enforced() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let u0 = FourierField::plane_wave(grid, [3, 0], Complex64::new(0.1, 0.0)).unwrap();
        let times = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            split_step(&cubic_problem(), &u0, &times, 0.01),
            Err(Error::Resolution(_))
        ));
    }
}
