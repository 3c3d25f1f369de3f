//! Numerical experiments on Strichartz-type and Bourgain-space estimates.
//!
//! Every experiment produces [`ReportRow`]s holding a left-hand side, a
//! right-hand side and their ratio. Inequalities are exercised as ratio
//! sweeps over fixed probe sets; identities are checked against a
//! tolerance. Suites bundle rows, exponent fits and named checks into an
//! [`ExperimentReport`].

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{
    backward_transport, build_reduction, forward_transport, residual_original, CoefficientFunction,
};
use crate::quadrature::cumulative;
use crate::rng::{cell_key, SplitMix};
use crate::solver::{split_step, ProblemSpec};
use crate::spectral::{
    inverse_transform, lp_power_sum, sobolev_norm, FourierField, Mode, TorusGrid,
};
use crate::warp::{
    evolved_samples, h_pb_g_norm, modified_fourier, phase_step, propagate, TauGrid, TimeGrid,
    TimeWarp,
};
use crate::xsb::{
    cutoff, mixed_sobolev_norm, xsb_g_norm, xsb_norm, xtilde_g_norm, CutoffSpec, SpaceTimeField,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Shape of the Fourier coefficients of a datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// All coefficients one on `B(0,N)`.
    Dirichlet,
    /// Unit-modulus coefficients with seeded phases on `B(0,N)`.
    RandomPhase,
    /// The single mode `(N, 0)`.
    SingleMode,
    /// `e^{-|k|²/N²}` on `B(0,N)`.
    GaussianBell,
}

/// A family of band-limited data `φ_N` with `supp φ̂_N ⊆ B(0,N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DatumFamily {
    pub kind: FamilyKind,
    pub seed: u64,
}

impl DatumFamily {
    pub fn new(kind: FamilyKind, seed: u64) -> Self {
        DatumFamily { kind, seed }
    }

    pub fn parse(label: &str, seed: u64) -> Result<Self> {
        let kind = match label.trim() {
            "dirichlet" => FamilyKind::Dirichlet,
            "random_phase" => FamilyKind::RandomPhase,
            "single_mode" => FamilyKind::SingleMode,
            "gaussian_bell" => FamilyKind::GaussianBell,
            other => {
                return Err(Error::UnknownLabel {
                    label: other.into(),
                    reason: "expected dirichlet, random_phase, single_mode or gaussian_bell".into(),
                })
            }
        };
        Ok(DatumFamily { kind, seed })
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            FamilyKind::Dirichlet => "dirichlet",
            FamilyKind::RandomPhase => "random_phase",
            FamilyKind::SingleMode => "single_mode",
            FamilyKind::GaussianBell => "gaussian_bell",
        }
    }

    /// The datum `φ_N = Σ c_k e^{ik·x}` on `grid`.
    pub fn datum(&self, grid: &TorusGrid, n: usize) -> Result<FourierField> {
        let r = n as i64;
        let rng = SplitMix::new(self.seed, cell_key(&format!("{}/{n}", self.label())));
        let mut field = FourierField::zeros(*grid);
        let span = if grid.dim() == 2 { r } else { 0 };
        for k0 in -r..=r {
            for k1 in -span..=span {
                if k0 * k0 + k1 * k1 > r * r {
                    continue;
                }
                let c = match self.kind {
                    FamilyKind::Dirichlet => Complex64::new(1.0, 0.0),
                    FamilyKind::RandomPhase => {
                        let index = ((k0 + r) * (2 * r + 1) + (k1 + r)) as u64;
                        Complex64::from_polar(1.0, 2.0 * PI * rng.uniform_at(index))
                    }
                    FamilyKind::SingleMode => {
                        if [k0, k1] == [r, 0] {
                            Complex64::new(1.0, 0.0)
                        } else {
                            continue;
                        }
                    }
                    FamilyKind::GaussianBell => {
                        let width = (n.max(1) as f64).powi(2);
                        Complex64::new((-((k0 * k0 + k1 * k1) as f64) / width).exp(), 0.0)
                    }
                };
                let mode: Mode = [k0, k1];
                if grid.index_of(mode).is_none() || grid.is_nyquist(mode) {
                    return Err(Error::Resolution(format!(
                        "grid {:?} cannot hold B(0,{n})",
                        grid.mode_counts()
                    )));
                }
                field.set(mode, c * grid.volume())?;
            }
        }
        Ok(field)
    }
}

/// One measured line of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub warp: String,
    pub family: String,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub p: f64,
    pub s: f64,
    pub b: f64,
    pub bprime: f64,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub seed: u64,
    pub status: String,
}

impl ReportRow {
    fn new(experiment: &str, warp: &TimeWarp, family: &str, lhs: f64, rhs: f64) -> Self {
        ReportRow {
            experiment: experiment.into(),
            warp: warp.label().into(),
            family: family.into(),
            n1: 0,
            n2: 0,
            p: 0.0,
            s: 0.0,
            b: 0.0,
            bprime: 0.0,
            delta: 0.0,
            lhs,
            rhs,
            ratio: lhs / rhs,
            seed: 0,
            status: "measured".into(),
        }
    }
}

/// Least-squares fit of `log ratio` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the fitted line in log space.
    pub residual: f64,
}

/// Fits `ratio ≈ C x^exponent` through `(x, ratio)` pairs.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::param(
            "rows",
            format!("need at least 3 rows to fit, got {}", points.len()),
        ));
    }
    for (row, &(x, ratio)) in points.iter().enumerate() {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::NonPositiveRatio { row, ratio });
        }
        if !(x > 0.0) {
            return Err(Error::param(
                "abscissa",
                format!("row {row} has nonpositive abscissa {x}"),
            ));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::param("abscissa", "all rows share one abscissa"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExponentFit {
        exponent,
        intercept,
        residual,
    })
}

/// `∫_I g'(t) ‖S(t)φ‖^p_{L^p} dt` by Simpson quadrature on a lattice obeying
/// the phase-resolution rule, together with that lattice.
fn weighted_lp_integral(
    phi: &FourierField,
    warp: &TimeWarp,
    window: (f64, f64),
    p: u32,
) -> Result<(f64, TimeGrid)> {
    warp.validate(window.0, window.1)?;
    let times = TimeGrid::resolved(window.0, window.1, warp, phi.active_frequency_sq())?;
    let grid = *phi.grid();
    let values: Vec<f64> = times
        .nodes()
        .par_iter()
        .map_init(Vec::new, |buf, &t| {
            evolved_samples(phi, warp.g(t), buf);
            warp.g_prime(t) * lp_power_sum(buf, p as f64, &grid)
        })
        .collect();
    let total = values
        .iter()
        .zip(times.simpson_weights())
        .map(|(v, w)| v * w)
        .sum();
    Ok((total, times))
}

fn check_lp_grid(grid: &TorusGrid, n: usize, p: u32) -> Result<()> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::param(
            "p",
            format!("spectrally exact L^p needs an even exponent, got {p}"),
        ));
    }
    if !grid.resolves(n, p as usize) {
        return Err(Error::Resolution(format!(
            "grid {:?} does not resolve L^{p} of data in B(0,{n})",
            grid.mode_counts()
        )));
    }
    Ok(())
}

/// `‖g'^{1/p} S(t)φ_N‖_{L^p(I×T²)}` against `‖φ_N‖_{H^{s_rhs}}`.
pub fn measure_linear(
    warp: &TimeWarp,
    n: usize,
    p: u32,
    family: &DatumFamily,
    window: (f64, f64),
    s_rhs: f64,
) -> Result<ReportRow> {
    let grid = TorusGrid::dealiased(2, n.max(1), p as usize)?;
    check_lp_grid(&grid, n, p)?;
    let phi = family.datum(&grid, n)?;
    let (integral, _) = weighted_lp_integral(&phi, warp, window, p)?;
    let lhs = integral.powf(1.0 / p as f64);
    let rhs = sobolev_norm(&phi, s_rhs);
    let mut row = ReportRow::new("linear", warp, family.label(), lhs, rhs);
    row.n1 = n;
    row.p = p as f64;
    row.s = s_rhs;
    row.seed = family.seed;
    Ok(row)
}

/// Outcome of comparing a weighted integral with its reparameterization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubstitutionCheck {
    /// `∫_I g'(t)‖S(t)φ‖^p dt`.
    pub weighted: f64,
    /// `∫_{g(I)} ‖e^{it'Δ}φ‖^p dt'`.
    pub reparameterized: f64,
    pub deviation: f64,
    pub passed: bool,
}

/// Relative tolerance of the substitution identity.
pub const SUBSTITUTION_TOLERANCE: f64 = 1e-5;

/// Compares the weighted space-time integral on `I` with the unweighted one
/// on `g(I)`, each on its own resolved lattice.
pub fn verify_substitution(
    warp: &TimeWarp,
    n: usize,
    p: u32,
    family: &DatumFamily,
    window: (f64, f64),
) -> Result<SubstitutionCheck> {
    let grid = TorusGrid::dealiased(2, n.max(1), p as usize)?;
    check_lp_grid(&grid, n, p)?;
    let phi = family.datum(&grid, n)?;
    let (weighted, _) = weighted_lp_integral(&phi, warp, window, p)?;
    let identity = TimeWarp::identity();
    let (reparameterized, _) =
        weighted_lp_integral(&phi, &identity, (warp.g(window.0), warp.g(window.1)), p)?;
    let deviation = (weighted - reparameterized).abs() / reparameterized.abs();
    Ok(SubstitutionCheck {
        weighted,
        reparameterized,
        deviation,
        passed: deviation < SUBSTITUTION_TOLERANCE,
    })
}

/// `‖g'^{1/2} S(t)φ_{N1} S(t)φ_{N2}‖_{L²(I×T²)}` against the product of
/// the `L²` norms.
pub fn measure_bilinear(
    warp: &TimeWarp,
    n1: usize,
    n2: usize,
    family: &DatumFamily,
    window: (f64, f64),
) -> Result<ReportRow> {
    warp.validate(window.0, window.1)?;
    let grid = TorusGrid::dealiased(2, n1 + n2, 2)?;
    let first = family.datum(&grid, n1)?;
    let second = family.datum(&grid, n2)?;
    let lambda = first
        .active_frequency_sq()
        .max(second.active_frequency_sq());
    let times = TimeGrid::resolved(window.0, window.1, warp, lambda)?;
    let values: Vec<f64> = times
        .nodes()
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(a, b), &t| {
                evolved_samples(&first, warp.g(t), a);
                evolved_samples(&second, warp.g(t), b);
                let sum: f64 = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x * y).norm_sqr())
                    .sum();
                warp.g_prime(t) * sum * grid.cell_volume()
            },
        )
        .collect();
    let integral: f64 = values
        .iter()
        .zip(times.simpson_weights())
        .map(|(v, w)| v * w)
        .sum();
    let lhs = integral.sqrt();
    let rhs = first.l2_norm() * second.l2_norm();
    let mut row = ReportRow::new("bilinear", warp, family.label(), lhs, rhs);
    row.n1 = n1;
    row.n2 = n2;
    row.p = 2.0;
    row.seed = family.seed;
    Ok(row)
}

/// Number of `(k1,k2,k3,k4) ∈ B(0,N)⁴` with `k1+k2 = k3+k4` and
/// `|k1|²+|k2|² = |k3|²+|k4|²`.
pub fn count_resonant_quadruples(n: usize) -> u64 {
    let r = n as i64;
    let ball: Vec<[i64; 2]> = (-r..=r)
        .flat_map(|a| (-r..=r).map(move |b| [a, b]))
        .filter(|k| k[0] * k[0] + k[1] * k[1] <= r * r)
        .collect();
    let mut count = 0u64;
    for k1 in &ball {
        for k2 in &ball {
            let sum = [k1[0] + k2[0], k1[1] + k2[1]];
            let energy = k1[0] * k1[0] + k1[1] * k1[1] + k2[0] * k2[0] + k2[1] * k2[1];
            for k3 in &ball {
                let k4 = [sum[0] - k3[0], sum[1] - k3[1]];
                if k4[0] * k4[0] + k4[1] * k4[1] > r * r {
                    continue;
                }
                if k3[0] * k3[0] + k3[1] * k3[1] + k4[0] * k4[0] + k4[1] * k4[1] == energy {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Lattice points of `B(0,N) ⊂ ℤ²`.
pub fn ball_size(n: usize) -> u64 {
    let r = n as i64;
    (-r..=r)
        .map(|a| (-r..=r).filter(|b| a * a + b * b <= r * r).count() as u64)
        .sum()
}

/// The estimates exercised by [`verify_xsb_inequality`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimate {
    /// `‖χ_I g' S(t)u0‖_{X^{s,b}_g} ≲ δ^{1/2-b}‖u0‖_{H^s}`.
    FreeEvolution,
    /// `‖ψ g' ∫_0^t g'(s) S(t,s) w ds‖_{X^{s,b}_g} ≲ ‖g' w‖_{X^{s,b-1}_g}`.
    Duhamel,
    /// `‖χ_I g'|u|²u‖_{X^{s,b-1}_g} ≲ ‖χ_I g'u‖²_{X^{s,b'}_g}‖χ_I g'u‖_{X^{s,b}_g}`.
    Cubic,
    /// `‖χ_I g'u‖_{X^{s,b'}_g} ≲ δ^{(b-b')/8}‖g'u‖_{X^{s,b}_g}`.
    Localization,
    /// `‖g' χ_I v1 χ_I v2 χ_I v3‖_{X^{s,b-1}_g}` against one `b` and two `b'` norms.
    Trilinear,
    /// `‖uf‖_{X^{s,b}} ≲ ‖f‖_{H^{1,b}}‖u‖_{X^{s,b}}`.
    TimeMultiplier,
    /// `‖χh χu1 χu2 χu3‖_{X^{s,b-1}} ≲ ‖χh‖_{H^{p1}_t H^{s1}_x}‖χu1‖_{X^{s,b}}‖χu2‖_{X^{s,b'}}‖χu3‖_{X^{s,b'}}`.
    Quadrilinear,
    /// `‖χu1 χu2‖_{X^{s,b-1}} ≲ ‖χu1‖_{X^{s,b}}‖χu2‖_{X^{s,b'}}`.
    Bilinear,
    /// `‖χ_I β‖_{X^{s,b}} ≲ δ^{1/2-b}‖β‖_{H^{s+2b}}`.
    Potential,
    /// `‖g'fu‖_{X^{s,b}_g} ≲ ‖g'f‖_{H^{1,b}_g}‖g'u‖_{X^{s,b}_g}`.
    WarpedMultiplier,
    /// `‖g'χ_I β‖_{X^{s,b}_g} ≲ ‖g'χ_I‖_{H^{2,b}_g}‖β‖_{H^{s+2b}}`.
    WarpedPotential,
    /// `‖g' χu1 χu2‖_{X^{s,b-1}_g} ≲ ‖g'χu1‖_{X^{s,b}_g}‖g'χu2‖_{X^{s,b'}_g}`.
    WarpedBilinear,
    /// Warped quadrilinear estimate with `u1, u2` in `X^{s,b}_g` and `u3` in `X^{s,b'}_g`.
    WarpedQuadrilinear,
    /// `‖χ g'^{1/4} u‖_{L⁴} ≲ N^{s1}‖χ g'u‖_{X^{0,b1}_g}` for `supp û ⊆ B(0,N)`.
    WeightedL4,
}

impl Estimate {
    pub const ALL: [Estimate; 14] = [
        Estimate::FreeEvolution,
        Estimate::Duhamel,
        Estimate::Cubic,
        Estimate::Localization,
        Estimate::Trilinear,
        Estimate::TimeMultiplier,
        Estimate::Quadrilinear,
        Estimate::Bilinear,
        Estimate::Potential,
        Estimate::WarpedMultiplier,
        Estimate::WarpedPotential,
        Estimate::WarpedBilinear,
        Estimate::WarpedQuadrilinear,
        Estimate::WeightedL4,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Estimate::FreeEvolution => "free",
            Estimate::Duhamel => "duhamel",
            Estimate::Cubic => "cubic",
            Estimate::Localization => "localization",
            Estimate::Trilinear => "trilinear",
            Estimate::TimeMultiplier => "multiplier",
            Estimate::Quadrilinear => "quadrilinear",
            Estimate::Bilinear => "bilinear",
            Estimate::Potential => "potential",
            Estimate::WarpedMultiplier => "g-multiplier",
            Estimate::WarpedPotential => "g-potential",
            Estimate::WarpedBilinear => "g-bilinear",
            Estimate::WarpedQuadrilinear => "g-quadrilinear",
            Estimate::WeightedL4 => "weighted-l4",
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.label() == label.trim())
            .ok_or_else(|| Error::UnknownLabel {
                label: label.into(),
                reason: format!(
                    "expected one of {}",
                    Self::ALL
                        .iter()
                        .map(|e| e.label())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            })
    }

    /// Estimates stated for the standard transform, evaluated with the
    /// identity warp whatever warp the caller selects.
    fn is_standard(&self) -> bool {
        matches!(
            self,
            Estimate::TimeMultiplier
                | Estimate::Quadrilinear
                | Estimate::Bilinear
                | Estimate::Potential
        )
    }
}

/// Exponents shared by the space-time estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XsbParams {
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    /// Plateau half-width of `χ_I`.
    pub delta: f64,
    /// Time regularity `p1 > 1/2` of the quadrilinear weight.
    pub p1: f64,
    /// Space regularity `s1 > 1` of the quadrilinear weight.
    pub s1: f64,
    /// Exponents of the weighted `L⁴` estimate: `b1 > 1/4`, `s1 > 1 - 2b1`.
    pub l4_b1: f64,
    pub l4_s1: f64,
}

impl XsbParams {
    /// Parameters for `ε`: `b = 1/2+ε`, `b' = 1/2-4ε`, `p1 = 1/2+ε`,
    /// `s1 = 1+ε`, with `b1 = 3/8` and `s1 = 3/10` for the `L⁴` estimate.
    pub fn from_eps(eps: f64, s: f64, delta: f64) -> Self {
        XsbParams {
            s,
            b: 0.5 + eps,
            b_prime: 0.5 - 4.0 * eps,
            delta,
            p1: 0.5 + eps,
            s1: 1.0 + eps,
            l4_b1: 0.375,
            l4_s1: 0.3,
        }
    }
}

/// Shared lattices for the probe-based estimates.
struct Workspace {
    warp: TimeWarp,
    grid: TorusGrid,
    times: TimeGrid,
    taus: TauGrid,
    chi: Vec<f64>,
    psi: Vec<f64>,
}

/// Probes live in `B(0,1)`; quadrilinear products reach `|k| ≤ 4`.
const PROBE_RADIUS: usize = 1;
const PRODUCT_ORDER: usize = 4;

impl Workspace {
    fn new(warp: &TimeWarp, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::param("delta", "must be positive"));
        }
        let grid = TorusGrid::dealiased(2, PROBE_RADIUS, PRODUCT_ORDER)?;
        let (t0, t1) = (-4.0 * delta, 4.0 * delta);
        warp.validate(t0, t1)?;
        let lambda = ((PRODUCT_ORDER * PROBE_RADIUS).pow(2)) as f64;
        let taus = TauGrid::resolved(warp.measure(t0, t1), lambda)?;
        let times =
            TimeGrid::with_max_step(t0, t1, phase_step(warp, t0, t1, lambda, taus.tau_max()))?;
        let inner = CutoffSpec::new(delta)?;
        let outer = CutoffSpec::new(2.0 * delta)?;
        let nodes = times.nodes();
        Ok(Workspace {
            warp: warp.clone(),
            grid,
            chi: nodes.iter().map(|&t| cutoff(t, &inner)).collect(),
            psi: nodes.iter().map(|&t| cutoff(t, &outer)).collect(),
            times,
            taus,
        })
    }

    fn free(&self, phi: &FourierField) -> Result<SpaceTimeField> {
        SpaceTimeField::from_fn(self.grid, self.times, |t| {
            propagate(phi, &self.warp, t, 0.0)
        })
    }

    fn constant(&self, f: &FourierField) -> Result<SpaceTimeField> {
        SpaceTimeField::from_fn(self.grid, self.times, |_| f.clone())
    }

    fn times_profile(&self, u: &SpaceTimeField, profile: &[f64]) -> SpaceTimeField {
        let h = self.times.step();
        let t0 = self.times.start();
        u.scale_in_time(|t| Complex64::new(profile[((t - t0) / h).round() as usize], 0.0))
    }

    fn chi(&self, u: &SpaceTimeField) -> SpaceTimeField {
        self.times_profile(u, &self.chi)
    }

    fn psi(&self, u: &SpaceTimeField) -> SpaceTimeField {
        self.times_profile(u, &self.psi)
    }

    fn g_prime(&self, u: &SpaceTimeField) -> SpaceTimeField {
        u.scale_in_time(|t| Complex64::new(self.warp.g_prime(t), 0.0))
    }

    fn x(&self, u: &SpaceTimeField, s: f64, b: f64) -> Result<f64> {
        xsb_g_norm(u, s, b, &self.warp, &self.taus)
    }

    fn product(&self, factors: &[&SpaceTimeField]) -> Result<SpaceTimeField> {
        SpaceTimeField::combine(factors, |v| v.iter().product())
    }

    /// `ψ(t) ∫_0^t S(t,s) F(s) ds` mode by mode.
    fn duhamel(&self, forcing: &SpaceTimeField) -> Result<SpaceTimeField> {
        let origin = self
            .times
            .index_of(0.0)
            .ok_or_else(|| Error::param("times", "lattice must contain t = 0"))?;
        let nodes = self.times.nodes();
        let h = self.times.step();
        let mut slices = vec![FourierField::zeros(self.grid); nodes.len()];
        let mut series = vec![ZERO; nodes.len()];
        for idx in 0..self.grid.len() {
            let k2 = self.grid.frequency_sq(self.grid.mode_of(idx));
            for (j, &t) in nodes.iter().enumerate() {
                series[j] = forcing.slice(j).coeffs()[idx]
                    * Complex64::from_polar(1.0, self.warp.g(t) * k2);
            }
            if series.iter().all(|c| *c == ZERO) {
                continue;
            }
            for (j, v) in cumulative(&series, origin, h).into_iter().enumerate() {
                let phase = Complex64::from_polar(1.0, -self.warp.g(nodes[j]) * k2);
                slices[j].coeffs_mut()[idx] = v * phase * self.psi[j];
            }
        }
        SpaceTimeField::new(self.grid, self.times, slices)
    }

    fn rows_meta(&self, row: &mut ReportRow, params: &XsbParams) {
        row.s = params.s;
        row.b = params.b;
        row.bprime = params.b_prime;
        row.delta = params.delta;
    }
}

/// A seeded probe datum.
#[derive(Clone, Debug)]
pub struct Probe {
    pub label: String,
    pub datum: FourierField,
    pub radius: usize,
}

/// Twelve probes in `B(0,1)`: four plane waves, four Gaussian bells of
/// widths `1/2, 1, 2, 4` and four random-phase data.
pub fn probe_set(grid: &TorusGrid, seed: u64) -> Result<Vec<Probe>> {
    let one = Complex64::new(1.0, 0.0);
    let mut probes = Vec::new();
    for k in [[0, 0], [1, 0], [0, 1], [-1, 0]] {
        probes.push(Probe {
            label: format!("plane({},{})", k[0], k[1]),
            datum: FourierField::plane_wave(*grid, k, one)?,
            radius: PROBE_RADIUS,
        });
    }
    for width in [0.5, 1.0, 2.0, 4.0] {
        let mut f = FourierField::zeros(*grid);
        for k in [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]] {
            let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            f.set(k, one * (-r2 / (width * width)).exp() * grid.volume())?;
        }
        probes.push(Probe {
            label: format!("bell(w={width})"),
            datum: f,
            radius: PROBE_RADIUS,
        });
    }
    for i in 0..4 {
        let family = DatumFamily::new(
            FamilyKind::RandomPhase,
            SplitMix::new(seed, cell_key(&format!("probe/{i}"))).at(0),
        );
        probes.push(Probe {
            label: format!("random_phase#{i}"),
            datum: family.datum(grid, PROBE_RADIUS)?,
            radius: PROBE_RADIUS,
        });
    }
    Ok(probes)
}

/// Fixed spatial weight `h(x) = 1 + cos(x1)/2` of the quadrilinear estimates.
fn quadrilinear_weight(grid: &TorusGrid) -> Result<FourierField> {
    let mut h = FourierField::zeros(*grid);
    h.set([0, 0], Complex64::new(grid.volume(), 0.0))?;
    h.set([1, 0], Complex64::new(0.25 * grid.volume(), 0.0))?;
    h.set([-1, 0], Complex64::new(0.25 * grid.volume(), 0.0))?;
    Ok(h)
}

/// Time profile `f(t) = ψ(t)(1 + g(t)/2)` of the multiplier estimates.
fn multiplier_profile(ws: &Workspace) -> Vec<f64> {
    ws.times
        .nodes()
        .iter()
        .zip(&ws.psi)
        .map(|(&t, p)| p * (1.0 + 0.5 * ws.warp.g(t)))
        .collect()
}

fn complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Factor of the quadrilinear estimate; `Unit` stands for the constant one
/// and contributes a unit norm.
enum Factor<'a> {
    Unit,
    Field(&'a SpaceTimeField),
}

/// Quadrilinear estimate in the standard spaces; `h` enters already
/// localized and its norm is the mixed `H^{p1}_t H^{s1}_x` norm.
fn quadrilinear_sides(
    ws: &Workspace,
    params: &XsbParams,
    h: Factor<'_>,
    u1: &SpaceTimeField,
    u2: &SpaceTimeField,
    u3: Factor<'_>,
) -> Result<(f64, f64)> {
    let mut factors: Vec<&SpaceTimeField> = Vec::new();
    if let Factor::Field(f) = h {
        factors.push(f);
    }
    factors.push(u1);
    factors.push(u2);
    if let Factor::Field(f) = u3 {
        factors.push(f);
    }
    let lhs = ws.x(&ws.product(&factors)?, params.s, params.b - 1.0)?;
    let h_norm = match h {
        Factor::Unit => 1.0,
        Factor::Field(f) => mixed_sobolev_norm(f, params.s1, params.p1, &ws.warp, &ws.taus)?,
    };
    let u3_norm = match u3 {
        Factor::Unit => 1.0,
        Factor::Field(f) => ws.x(f, params.s, params.b_prime)?,
    };
    let rhs =
        h_norm * ws.x(u1, params.s, params.b)? * ws.x(u2, params.s, params.b_prime)? * u3_norm;
    Ok((lhs, rhs))
}

fn estimate_sides(
    ws: &Workspace,
    estimate: Estimate,
    probe: &Probe,
    params: &XsbParams,
) -> Result<(f64, f64)> {
    let (s, b, bp, delta) = (params.s, params.b, params.b_prime, params.delta);
    let phi = &probe.datum;
    let u = ws.free(phi)?;
    match estimate {
        Estimate::FreeEvolution => {
            let lhs = ws.x(&ws.g_prime(&ws.chi(&u)), s, b)?;
            Ok((lhs, delta.powf(0.5 - b) * sobolev_norm(phi, s)))
        }
        Estimate::Duhamel => {
            let forcing = ws.g_prime(&ws.chi(&u));
            let integral = ws.duhamel(&forcing)?;
            let lhs = ws.x(&ws.g_prime(&integral), s, b)?;
            Ok((lhs, ws.x(&forcing, s, b - 1.0)?))
        }
        Estimate::Cubic => {
            let cu = ws.chi(&u);
            let cubic = SpaceTimeField::combine(&[&u], |v| v[0] * v[0].norm_sqr())?;
            let lhs = ws.x(&ws.g_prime(&ws.chi(&cubic)), s, b - 1.0)?;
            let gcu = ws.g_prime(&cu);
            Ok((lhs, ws.x(&gcu, s, bp)?.powi(2) * ws.x(&gcu, s, b)?))
        }
        Estimate::Localization => {
            let lhs = ws.x(&ws.g_prime(&ws.chi(&u)), s, bp)?;
            let rhs = delta.powf((b - bp) / 8.0) * ws.x(&ws.g_prime(&ws.psi(&u)), s, b)?;
            Ok((lhs, rhs))
        }
        Estimate::Trilinear => {
            let cu = ws.chi(&u);
            let lhs = ws.x(&ws.g_prime(&ws.product(&[&cu, &cu, &cu])?), s, b - 1.0)?;
            let gcu = ws.g_prime(&cu);
            Ok((lhs, ws.x(&gcu, s, b)? * ws.x(&gcu, s, bp)?.powi(2)))
        }
        Estimate::TimeMultiplier => {
            let cu = ws.chi(&u);
            let f = multiplier_profile(ws);
            let lhs = ws.x(&ws.times_profile(&cu, &f), s, b)?;
            let f_norm = h_pb_g_norm(&complex(&f), &ws.times, 1.0, b, &ws.warp, &ws.taus)?;
            Ok((lhs, f_norm * ws.x(&cu, s, b)?))
        }
        Estimate::Quadrilinear => {
            let ch = ws.chi(&ws.constant(&quadrilinear_weight(&ws.grid)?)?);
            let cu = ws.chi(&u);
            quadrilinear_sides(ws, params, Factor::Field(&ch), &cu, &cu, Factor::Field(&cu))
        }
        Estimate::Bilinear => {
            let cu = ws.chi(&u);
            let lhs = ws.x(
                &SpaceTimeField::combine(&[&cu, &cu], |v| v[0] * v[1])?,
                s,
                b - 1.0,
            )?;
            Ok((lhs, ws.x(&cu, s, b)? * ws.x(&cu, s, bp)?))
        }
        Estimate::Potential => {
            let lhs = ws.x(&ws.chi(&ws.constant(phi)?), s, b)?;
            Ok((lhs, delta.powf(0.5 - b) * sobolev_norm(phi, s + 2.0 * b)))
        }
        Estimate::WarpedMultiplier => {
            let gcu = ws.g_prime(&ws.chi(&u));
            let f = multiplier_profile(ws);
            let lhs = ws.x(&ws.times_profile(&gcu, &f), s, b)?;
            let gf: Vec<f64> = ws
                .times
                .nodes()
                .iter()
                .zip(&f)
                .map(|(&t, f)| ws.warp.g_prime(t) * f)
                .collect();
            let f_norm = h_pb_g_norm(&complex(&gf), &ws.times, 1.0, b, &ws.warp, &ws.taus)?;
            Ok((lhs, f_norm * ws.x(&gcu, s, b)?))
        }
        Estimate::WarpedPotential => {
            let lhs = ws.x(&ws.g_prime(&ws.chi(&ws.constant(phi)?)), s, b)?;
            let gchi: Vec<f64> = ws
                .times
                .nodes()
                .iter()
                .zip(&ws.chi)
                .map(|(&t, c)| ws.warp.g_prime(t) * c)
                .collect();
            let chi_norm = h_pb_g_norm(&complex(&gchi), &ws.times, 2.0, b, &ws.warp, &ws.taus)?;
            Ok((lhs, chi_norm * sobolev_norm(phi, s + 2.0 * b)))
        }
        Estimate::WarpedBilinear => {
            let cu = ws.chi(&u);
            let lhs = ws.x(&ws.g_prime(&ws.product(&[&cu, &cu])?), s, b - 1.0)?;
            let gcu = ws.g_prime(&cu);
            Ok((lhs, ws.x(&gcu, s, b)? * ws.x(&gcu, s, bp)?))
        }
        Estimate::WarpedQuadrilinear => {
            let ch = ws.chi(&ws.constant(&quadrilinear_weight(&ws.grid)?)?);
            let cu = ws.chi(&u);
            let lhs = ws.x(&ws.g_prime(&ws.product(&[&ch, &cu, &cu, &cu])?), s, b - 1.0)?;
            let h_norm =
                mixed_sobolev_norm(&ws.g_prime(&ch), params.s1, params.p1, &ws.warp, &ws.taus)?;
            let gcu = ws.g_prime(&cu);
            let (nb, nbp) = (ws.x(&gcu, s, b)?, ws.x(&gcu, s, bp)?);
            Ok((lhs, h_norm * nb * nb * nbp))
        }
        Estimate::WeightedL4 => {
            let chi4 = ws.chi.iter().map(|c| c.powi(4)).collect::<Vec<_>>();
            let w = ws.times.simpson_weights();
            let integral: f64 = u
                .slices()
                .iter()
                .enumerate()
                .map(|(j, slice)| {
                    let t = ws.times.node(j);
                    w[j] * chi4[j]
                        * ws.warp.g_prime(t)
                        * lp_power_sum(&inverse_transform(slice), 4.0, &ws.grid)
                })
                .sum();
            let rhs = (probe.radius.max(1) as f64).powf(params.l4_s1)
                * ws.x(&ws.g_prime(&ws.chi(&u)), 0.0, params.l4_b1)?;
            Ok((integral.powf(0.25), rhs))
        }
    }
}

/// Evaluates one estimate on one probe and returns the report row.
pub fn verify_xsb_inequality(
    estimate: Estimate,
    probe: &Probe,
    params: &XsbParams,
    warp: &TimeWarp,
) -> Result<ReportRow> {
    let effective = if estimate.is_standard() {
        TimeWarp::identity()
    } else {
        warp.clone()
    };
    let ws = Workspace::new(&effective, params.delta)?;
    check_probe(&ws, probe)?;
    xsb_row(&ws, estimate, probe, params)
}

fn check_probe(ws: &Workspace, probe: &Probe) -> Result<()> {
    if probe.datum.grid() != &ws.grid || probe.datum.active_radius() > PROBE_RADIUS {
        return Err(Error::Resolution(format!(
            "probe {} must live in B(0,{PROBE_RADIUS}) on the workspace grid",
            probe.label
        )));
    }
    Ok(())
}

fn xsb_row(
    ws: &Workspace,
    estimate: Estimate,
    probe: &Probe,
    params: &XsbParams,
) -> Result<ReportRow> {
    let (lhs, rhs) = estimate_sides(ws, estimate, probe, params)?;
    let mut row = ReportRow::new(estimate.label(), &ws.warp, &probe.label, lhs, rhs);
    row.n1 = probe.radius;
    ws.rows_meta(&mut row, params);
    row.status = if row.ratio.is_finite() && row.ratio > 0.0 {
        "bounded".into()
    } else {
        "fail".into()
    };
    Ok(row)
}

/// Grid used by [`probe_set`] for the inequality sweeps.
pub fn probe_grid() -> Result<TorusGrid> {
    TorusGrid::dealiased(2, PROBE_RADIUS, PRODUCT_ORDER)
}

/// `‖χ_I g' S(t)u0‖_{X^{s,b}_g}/‖u0‖_{H^s}` against the warped plateau
/// measure `|g([-δ, δ])|` for each `δ`, with the fitted exponent.
pub fn delta_scaling(
    warp: &TimeWarp,
    u0: &FourierField,
    s: f64,
    b: f64,
    deltas: &[f64],
) -> Result<(Vec<ReportRow>, ExponentFit)> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &delta in deltas {
        let (t0, t1) = (-2.0 * delta, 2.0 * delta);
        warp.validate(t0, t1)?;
        let lambda = u0.active_frequency_sq();
        let taus = TauGrid::resolved(warp.measure(t0, t1), lambda)?;
        let times =
            TimeGrid::with_max_step(t0, t1, phase_step(warp, t0, t1, lambda, taus.tau_max()))?;
        let spec = CutoffSpec::new(delta)?;
        let u = SpaceTimeField::from_fn(*u0.grid(), times, |t| {
            propagate(u0, warp, t, 0.0)
                .scaled(Complex64::new(cutoff(t, &spec) * warp.g_prime(t), 0.0))
        })?;
        let lhs = xsb_g_norm(&u, s, b, warp, &taus)?;
        let rhs = sobolev_norm(u0, s);
        let measure = warp.measure(-delta, delta);
        let mut row = ReportRow::new("delta-scaling", warp, "plane", lhs, rhs);
        row.s = s;
        row.b = b;
        row.delta = delta;
        points.push((measure, row.ratio));
        rows.push(row);
    }
    let fit = fit_exponent(&points)?;
    Ok((rows, fit))
}

/// Relative deviation between the `Quadrilinear` path with unit `h` and
/// `u3` and the direct `Bilinear` path, for one probe.
pub fn bilinear_two_path(probe: &Probe, params: &XsbParams) -> Result<f64> {
    let ws = Workspace::new(&TimeWarp::identity(), params.delta)?;
    check_probe(&ws, probe)?;
    let cu = ws.chi(&ws.free(&probe.datum)?);
    let (lq, rq) = quadrilinear_sides(&ws, params, Factor::Unit, &cu, &cu, Factor::Unit)?;
    let (lb, rb) = estimate_sides(&ws, Estimate::Bilinear, probe, params)?;
    Ok(((lq / rq) - (lb / rb)).abs() / (lb / rb))
}

/// Ratio of the time-multiplier estimate for `f ≡ 1`, where `f̂ = 2πδ`
/// gives `‖1‖_{H^{1,b}} = 1` in closed form and `uf = u`.
pub fn unit_multiplier_ratio(probe: &Probe, params: &XsbParams) -> Result<f64> {
    let ws = Workspace::new(&TimeWarp::identity(), params.delta)?;
    check_probe(&ws, probe)?;
    let cu = ws.chi(&ws.free(&probe.datum)?);
    let product = cu.scale_in_time(|_| Complex64::new(1.0, 0.0));
    let lhs = ws.x(&product, params.s, params.b)?;
    Ok(lhs / (1.0 * ws.x(&cu, params.s, params.b)?))
}

/// The three transform identities on the substituted Gaussian probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlancherelCheck {
    /// `‖ũ‖_{L²_τ}` against `‖u/√g'‖_{L²_t}`.
    pub weighted_norm: f64,
    /// `F̃(∂_t u)` against `-iτ F̃(g'u)`, relative `L²_τ` distance.
    pub derivative: f64,
    /// `‖F̃(√g' u)‖_{L²_τ}` against `‖u‖_{L²_t}`.
    pub unweighted_norm: f64,
}

impl PlancherelCheck {
    pub fn worst(&self) -> f64 {
        self.weighted_norm
            .max(self.derivative)
            .max(self.unweighted_norm)
    }
}

/// Checks the transform identities with `dτ/2π`-normalized norms on
/// `u = g' e^{-g²/2}` (and `e^{-g²/2}` for the derivative identity).
pub fn plancherel_identities(warp: &TimeWarp) -> Result<PlancherelCheck> {
    let t1 = warp.g_inverse(9.5);
    let t0 = warp.g_inverse(-9.5);
    warp.validate(t0, t1)?;
    let taus = TauGrid::new(10.0, 801)?;
    let times =
        TimeGrid::with_max_step(t0, t1, phase_step(warp, t0, t1, 0.0, 8.0 * taus.tau_max()))?;
    let nodes = times.nodes();
    let tw = times.simpson_weights();
    let sw = taus.simpson_weights();
    let l2_tau = |v: &[Complex64]| {
        (v.iter()
            .zip(&sw)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            / (2.0 * PI))
            .sqrt()
    };
    let l2_t = |v: &[Complex64]| {
        v.iter()
            .zip(&tw)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let gauss = |t: f64| (-warp.g(t).powi(2) / 2.0).exp();
    let u: Vec<Complex64> = nodes
        .iter()
        .map(|&t| Complex64::new(warp.g_prime(t) * gauss(t), 0.0))
        .collect();
    let ut = modified_fourier(&u, warp, &times, &taus)?;
    let scaled: Vec<Complex64> = nodes
        .iter()
        .map(|&t| Complex64::new(warp.g_prime(t).sqrt() * gauss(t), 0.0))
        .collect();
    let a = l2_tau(&ut);
    let weighted_norm = (a - l2_t(&scaled)).abs() / a;
    let smooth: Vec<Complex64> = nodes
        .iter()
        .map(|&t| Complex64::new(gauss(t), 0.0))
        .collect();
    let derivative_samples: Vec<Complex64> = nodes
        .iter()
        .map(|&t| Complex64::new(-warp.g(t) * warp.g_prime(t) * gauss(t), 0.0))
        .collect();
    let lhs = modified_fourier(&derivative_samples, warp, &times, &taus)?;
    let weighted: Vec<Complex64> = smooth
        .iter()
        .zip(&nodes)
        .map(|(v, &t)| v * warp.g_prime(t))
        .collect();
    let rhs: Vec<Complex64> = modified_fourier(&weighted, warp, &times, &taus)?
        .iter()
        .enumerate()
        .map(|(m, v)| Complex64::new(0.0, -taus.node(m)) * v)
        .collect();
    let diff: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let derivative = l2_tau(&diff) / l2_tau(&rhs);
    let root: Vec<Complex64> = scaled
        .iter()
        .zip(&nodes)
        .map(|(v, &t)| v * warp.g_prime(t).sqrt())
        .collect();
    let c = l2_tau(&modified_fourier(&root, warp, &times, &taus)?);
    let unweighted_norm = (c - l2_t(&scaled)).abs() / c;
    Ok(PlancherelCheck {
        weighted_norm,
        derivative,
        unweighted_norm,
    })
}

/// `‖g'u‖_{X^{s,b}_g}` against `‖u∘g⁻¹‖_{X^{s,b}}` for
/// `u = χ_I(t)(1 + g(t)/2) S(t)φ`, returning the row.
pub fn norm_identity(
    warp: &TimeWarp,
    probe: &Probe,
    s: f64,
    b: f64,
    delta: f64,
) -> Result<ReportRow> {
    let ws = Workspace::new(warp, delta)?;
    check_probe(&ws, probe)?;
    let u = ws.free(&probe.datum)?;
    let u = ws
        .psi(&u)
        .scale_in_time(|t| Complex64::new(1.0 + 0.5 * warp.g(t), 0.0));
    let lhs = xtilde_g_norm(&u, s, b, warp, &ws.taus)?;
    let (g0, g1) = (warp.g(ws.times.start()), warp.g(ws.times.end()));
    let lambda = ((PRODUCT_ORDER * PROBE_RADIUS).pow(2)) as f64;
    let identity = TimeWarp::identity();
    let step = phase_step(&identity, g0, g1, lambda, ws.taus.tau_max()) / 4.0;
    let n = TimeGrid::with_max_step(g0, g1, step)?.len();
    let reparameterized = u.reparameterize(warp, n)?;
    let rhs = xsb_norm(&reparameterized, s, b, &ws.taus)?;
    let mut row = ReportRow::new("norm-identity", warp, &probe.label, lhs, rhs);
    row.n1 = probe.radius;
    row.s = s;
    row.b = b;
    row.delta = delta;
    Ok(row)
}

/// Identity-warp degeneracies: the warped, tilde and standard norms of one
/// field, and the warped and standard transforms of one time series.
pub fn identity_degeneracy(probe: &Probe, s: f64, b: f64, delta: f64) -> Result<f64> {
    let id = TimeWarp::identity();
    let ws = Workspace::new(&id, delta)?;
    check_probe(&ws, probe)?;
    let u = ws.chi(&ws.free(&probe.datum)?);
    let plain = xsb_norm(&u, s, b, &ws.taus)?;
    let warped = xsb_g_norm(&u, s, b, &id, &ws.taus)?;
    let tilde = xtilde_g_norm(&u, s, b, &id, &ws.taus)?;
    let mut worst = ((plain - warped).abs()).max((plain - tilde).abs()) / plain;
    let series: Vec<Complex64> = ws.chi.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let standard: Vec<Complex64> = ws
        .taus
        .nodes()
        .iter()
        .map(|&tau| {
            ws.times
                .nodes()
                .iter()
                .zip(ws.times.simpson_weights())
                .zip(&series)
                .map(|((&t, w), v)| v * w * Complex64::from_polar(1.0, tau * t))
                .sum::<Complex64>()
        })
        .collect();
    let warped_series = modified_fourier(&series, &id, &ws.times, &ws.taus)?;
    let scale = standard.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, c) in standard.iter().zip(&warped_series) {
        worst = worst.max((a - c).norm() / scale);
    }
    Ok(worst)
}

/// Original-equation residual of the gauge pipeline at one step size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeRun {
    pub dt: f64,
    pub residual: f64,
}

/// Solves `i∂_t u + Σ a_j ∂²_j u = |u|^{p-1}u` by transporting `u0` to the
/// reduced torus, running the split-step solver with output at every step
/// and transporting back; measures the residual for each step size.
pub fn gauge_convergence(
    coefficients: &[CoefficientFunction],
    power: u32,
    u0: &FourierField,
    resolution: usize,
    horizon: f64,
    steps: &[f64],
) -> Result<(Vec<GaugeRun>, ExponentFit)> {
    let red = build_reduction(coefficients, resolution, 1e-13)?;
    let w0 = forward_transport(u0, &red)?;
    let problem = ProblemSpec::reduced(&red, power)?;
    let target = *u0.grid();
    let mut runs = Vec::new();
    for &dt in steps {
        let intervals = (horizon / dt).round() as usize;
        if intervals < 4
            || intervals % 2 != 0
            || ((intervals as f64) * dt - horizon).abs() > 1e-9 * horizon
        {
            return Err(Error::param(
                "dt",
                format!("{dt} must divide the horizon {horizon} into an even count"),
            ));
        }
        let times = TimeGrid::new(0.0, horizon, intervals + 1)?;
        let reduced = split_step(&problem, &w0, &times, dt)?;
        let slices = reduced
            .slices()
            .iter()
            .map(|w| backward_transport(w, &red, &target))
            .collect::<Result<Vec<_>>>()?;
        let u = SpaceTimeField::new(target, times, slices)?;
        runs.push(GaugeRun {
            dt,
            residual: residual_original(&u, coefficients, power, 1.0)?,
        });
    }
    let fit = fit_exponent(&runs.iter().map(|r| (r.dt, r.residual)).collect::<Vec<_>>())?;
    Ok((runs, fit))
}

/// A named pass/fail check with the measured value and its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("< {limit:e}"),
            passed: value < limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }
}

/// A named exponent fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRecord {
    pub name: String,
    pub fit: ExponentFit,
}

/// Run metadata attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub version: String,
    pub seed: u64,
    pub resolutions: Vec<String>,
    pub notes: Vec<String>,
}

/// Output of one suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub suite: String,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<FitRecord>,
    pub checks: Vec<Check>,
    pub metadata: ReportMetadata,
    #[serde(skip)]
    pub wall_time: f64,
}

impl ExperimentReport {
    fn new(suite: &str, seed: u64) -> Self {
        ExperimentReport {
            suite: suite.into(),
            rows: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            metadata: ReportMetadata {
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                resolutions: Vec::new(),
                notes: Vec::new(),
            },
            wall_time: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }
}

/// Available suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Substitution,
    Growth,
    Bilinear,
    Xsb,
    Identities,
    All,
}

impl Suite {
    pub fn parse(label: &str) -> Result<Self> {
        match label.trim() {
            "substitution" => Ok(Suite::Substitution),
            "growth" => Ok(Suite::Growth),
            "bilinear" => Ok(Suite::Bilinear),
            "xsb" => Ok(Suite::Xsb),
            "identities" => Ok(Suite::Identities),
            "all" => Ok(Suite::All),
            other => Err(Error::UnknownLabel {
                label: other.into(),
                reason: "expected substitution, growth, bilinear, xsb, identities or all".into(),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Suite::Substitution => "substitution",
            Suite::Growth => "growth",
            Suite::Bilinear => "bilinear",
            Suite::Xsb => "xsb",
            Suite::Identities => "identities",
            Suite::All => "all",
        }
    }

    fn members(&self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Substitution,
                Suite::Growth,
                Suite::Bilinear,
                Suite::Xsb,
                Suite::Identities,
            ],
            other => vec![*other],
        }
    }
}

/// Experiment matrix of the suites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabConfig {
    pub seed: u64,
    pub substitution_warps: Vec<String>,
    pub substitution_families: Vec<String>,
    pub substitution_ns: Vec<usize>,
    pub window: (f64, f64),
    pub growth_ns: Vec<usize>,
    /// Largest `N` cross-checked against lattice counting.
    pub growth_oracle_max: usize,
    pub bilinear_warp: String,
    pub bilinear_n1s: Vec<usize>,
    pub bilinear_n2: usize,
    pub bilinear_diagonal: Vec<usize>,
    pub eps: f64,
    pub s: f64,
    pub delta: f64,
    pub xsb_warp: String,
    pub delta_sweep: Vec<f64>,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            seed: 20240601,
            substitution_warps: vec!["identity".into(), "cubic".into(), "power:alpha=2".into()],
            substitution_families: vec![
                "dirichlet".into(),
                "random_phase".into(),
                "gaussian_bell".into(),
            ],
            substitution_ns: vec![4, 8, 16],
            window: (0.0, 1.0),
            growth_ns: vec![4, 8, 16, 32],
            growth_oracle_max: 8,
            bilinear_warp: "cubic".into(),
            bilinear_n1s: vec![8, 16, 32, 64],
            bilinear_n2: 2,
            bilinear_diagonal: vec![2, 4, 8, 16],
            eps: 1.0 / 32.0,
            s: 0.5,
            delta: 0.25,
            xsb_warp: "cubic".into(),
            delta_sweep: vec![0.1, 0.2, 0.4],
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0 / 16.0) {
            return Err(Error::param(
                "eps",
                format!("{} lies outside the admissible range (0, 1/16)", self.eps),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(
                "delta",
                format!("{} lies outside (0, 1)", self.delta),
            ));
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::param("window", "start must precede end"));
        }
        for w in self
            .substitution_warps
            .iter()
            .chain([&self.bilinear_warp, &self.xsb_warp])
        {
            TimeWarp::parse(w)?;
        }
        for f in &self.substitution_families {
            DatumFamily::parse(f, self.seed)?;
        }
        for (name, list) in [
            ("growth_ns", &self.growth_ns),
            ("bilinear_n1s", &self.bilinear_n1s),
            ("bilinear_diagonal", &self.bilinear_diagonal),
        ] {
            if list.len() < 3 {
                return Err(Error::param(
                    "rows",
                    format!("{name} needs at least 3 entries to fit"),
                ));
            }
        }
        if self.delta_sweep.len() < 3 || self.delta_sweep.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(Error::param(
                "delta_sweep",
                "needs at least 3 values in (0, 1)",
            ));
        }
        Ok(())
    }

    fn params(&self) -> XsbParams {
        XsbParams::from_eps(self.eps, self.s, self.delta)
    }
}

/// Runs a suite; `All` runs every suite in a fixed order.
pub fn run_suite(suite: Suite, config: &LabConfig) -> Result<Vec<ExperimentReport>> {
    config.validate()?;
    suite
        .members()
        .into_iter()
        .map(|s| {
            let start = Instant::now();
            let mut report = match s {
                Suite::Substitution => substitution_suite(config),
                Suite::Growth => growth_suite(config),
                Suite::Bilinear => bilinear_suite(config),
                Suite::Xsb => xsb_suite(config),
                Suite::Identities => identities_suite(config),
                Suite::All => unreachable!("expanded by members"),
            }?;
            report.wall_time = start.elapsed().as_secs_f64();
            log::info!("suite {} finished in {:.1} s", s.label(), report.wall_time);
            Ok(report)
        })
        .collect()
}

fn substitution_suite(config: &LabConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("substitution", config.seed);
    let mut cells = Vec::new();
    for w in &config.substitution_warps {
        for f in &config.substitution_families {
            for &n in &config.substitution_ns {
                cells.push((w.clone(), f.clone(), n));
            }
        }
    }
    let results: Vec<Result<ReportRow>> = cells
        .par_iter()
        .map(|(w, f, n)| {
            let warp = TimeWarp::parse(w)?;
            let family = DatumFamily::parse(f, config.seed)?;
            let check = verify_substitution(&warp, *n, 4, &family, config.window)?;
            let mut row = ReportRow::new(
                "substitution",
                &warp,
                family.label(),
                check.weighted,
                check.reparameterized,
            );
            row.n1 = *n;
            row.p = 4.0;
            row.seed = config.seed;
            row.status = if check.passed { "pass" } else { "fail" }.into();
            Ok(row)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in results {
        let row = r?;
        worst = worst.max((row.ratio - 1.0).abs());
        report.rows.push(row);
    }
    report.checks.push(Check::below(
        "max relative deviation",
        worst,
        SUBSTITUTION_TOLERANCE,
    ));
    report.metadata.resolutions.push(format!(
        "time step min(1/(8 max g' Lambda), |I|/64); grid dealiased for L^4, ns {:?}",
        config.substitution_ns
    ));
    Ok(report)
}

fn growth_suite(config: &LabConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("growth", config.seed);
    let warp = TimeWarp::identity();
    let family = DatumFamily::new(FamilyKind::Dirichlet, config.seed);
    let window = (0.0, 2.0 * PI);
    let rows: Vec<Result<ReportRow>> = config
        .growth_ns
        .iter()
        .map(|&n| {
            let mut row = measure_linear(&warp, n, 4, &family, window, 0.0)?;
            row.experiment = "growth".into();
            Ok(row)
        })
        .collect();
    let mut points = Vec::new();
    for r in rows {
        let mut row = r?;
        if row.n1 <= config.growth_oracle_max {
            let count = count_resonant_quadruples(row.n1) as f64;
            let ball = ball_size(row.n1) as f64;
            let expected = (count / (2.0 * PI * ball * ball)).powf(0.25);
            let deviation = (row.ratio - expected).abs() / expected;
            let recovered = row.ratio.powi(4) * 2.0 * PI * ball * ball;
            report.checks.push(Check::below(
                format!(
                    "lattice count N={} (oracle {count}, measured {recovered:.6})",
                    row.n1
                ),
                deviation,
                1e-9,
            ));
            row.status = if deviation < 1e-9 { "pass" } else { "fail" }.into();
        }
        points.push((row.n1 as f64, row.ratio));
        report.rows.push(row);
    }
    let fit = fit_exponent(&points)?;
    report
        .checks
        .push(Check::below("L4 growth exponent", fit.exponent, 0.35));
    report.fits.push(FitRecord {
        name: "dirichlet L4 ratio vs N".into(),
        fit,
    });
    report
        .metadata
        .resolutions
        .push("window [0, 2pi], identity warp, p = 4".into());
    Ok(report)
}

fn bilinear_suite(config: &LabConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("bilinear", config.seed);
    let warp = TimeWarp::parse(&config.bilinear_warp)?;
    let family = DatumFamily::new(FamilyKind::Dirichlet, config.seed);
    let mut points = Vec::new();
    for &n1 in &config.bilinear_n1s {
        let row = measure_bilinear(&warp, n1, config.bilinear_n2, &family, config.window)?;
        points.push((n1 as f64, row.ratio));
        report.rows.push(row);
    }
    let fit = fit_exponent(&points)?;
    report.checks.push(Check::below(
        "exponent in N1 at fixed N2",
        fit.exponent,
        0.1 + 1e-12,
    ));
    report.fits.push(FitRecord {
        name: format!("ratio vs N1 at N2 = {}", config.bilinear_n2),
        fit,
    });
    let mut diagonal = Vec::new();
    for &n in &config.bilinear_diagonal {
        let mut row = measure_bilinear(&warp, n, n, &family, config.window)?;
        row.experiment = "bilinear-diagonal".into();
        diagonal.push((n as f64, row.ratio));
        report.rows.push(row);
    }
    let fit = fit_exponent(&diagonal)?;
    report.fits.push(FitRecord {
        name: "ratio vs N at N1 = N2".into(),
        fit,
    });
    report
        .checks
        .push(Check::below("diagonal exponent", fit.exponent, 0.5));
    report
        .metadata
        .resolutions
        .push(format!("window {:?}, warp {}", config.window, warp.label()));
    Ok(report)
}

fn xsb_suite(config: &LabConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("xsb", config.seed);
    let params = config.params();
    let warp = TimeWarp::parse(&config.xsb_warp)?;
    let grid = probe_grid()?;
    let probes = probe_set(&grid, config.seed)?;
    let warped = Workspace::new(&warp, params.delta)?;
    let standard = Workspace::new(&TimeWarp::identity(), params.delta)?;
    report.metadata.resolutions.push(format!(
        "probe grid {:?}; warped lattice n_t = {}, n_tau = {}, tau_max = {:.1}; standard lattice n_t = {}, n_tau = {}",
        grid.mode_counts(),
        warped.times.len(),
        warped.taus.len(),
        warped.taus.tau_max(),
        standard.times.len(),
        standard.taus.len()
    ));
    report.metadata.notes.push(format!(
        "weighted L4 exponents b1 = {}, s1 = {} satisfy both b1 > (1 - min(s1, 1/2))/2 and 1/4 < b1, s1 > 1 - 2 b1",
        params.l4_b1, params.l4_s1
    ));
    let cells: Vec<(Estimate, usize)> = Estimate::ALL
        .iter()
        .flat_map(|&e| (0..probes.len()).map(move |i| (e, i)))
        .collect();
    let rows: Vec<Result<ReportRow>> = cells
        .par_iter()
        .map(|&(e, i)| {
            let ws = if e.is_standard() { &standard } else { &warped };
            xsb_row(ws, e, &probes[i], &params)
        })
        .collect();
    for row in rows {
        report.rows.push(row?);
    }
    for e in Estimate::ALL {
        let max = report
            .rows
            .iter()
            .filter(|r| r.experiment == e.label())
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        let bounded = max.is_finite() && max > 0.0;
        report.checks.push(Check {
            name: format!("max ratio {}", e.label()),
            value: max,
            threshold: "finite".into(),
            passed: bounded,
        });
    }
    let target = 0.5 - params.b;
    let plane = FourierField::plane_wave(grid, [1, 0], Complex64::new(1.0, 0.0))?;
    let mut sweep = vec![warp.clone()];
    if !warp.is_identity() {
        sweep.push(TimeWarp::identity());
    }
    for w in sweep {
        let (rows, fit) = delta_scaling(&w, &plane, params.s, params.b, &config.delta_sweep)?;
        report.rows.extend(rows);
        if w.label() == warp.label() {
            report.checks.push(Check::within(
                format!("delta exponent ({})", w.label()),
                fit.exponent,
                target - 0.1,
                target + 0.1,
            ));
        }
        report.fits.push(FitRecord {
            name: format!("free evolution vs |g([-delta, delta])| ({})", w.label()),
            fit,
        });
    }
    let mut two_path: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for probe in &probes {
        two_path = two_path.max(bilinear_two_path(probe, &params)?);
        unit = unit.max((unit_multiplier_ratio(probe, &params)? - 1.0).abs());
    }
    report
        .checks
        .push(Check::below("bilinear two-path deviation", two_path, 1e-8));
    report
        .checks
        .push(Check::below("unit multiplier deviation", unit, 1e-12));
    Ok(report)
}

fn identities_suite(config: &LabConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("identities", config.seed);
    let params = config.params();
    for w in [TimeWarp::cubic(), TimeWarp::power(2.0)?] {
        let check = plancherel_identities(&w)?;
        let mut row = ReportRow::new("plancherel", &w, "gaussian", check.worst(), 1.0);
        row.status = if check.worst() < 1e-5 { "pass" } else { "fail" }.into();
        report.rows.push(row);
        report.checks.push(Check::below(
            format!("transform identities ({})", w.label()),
            check.worst(),
            1e-5,
        ));
    }
    let grid = probe_grid()?;
    let probes = probe_set(&grid, config.seed)?;
    let warps = [TimeWarp::cubic(), TimeWarp::power(2.0)?];
    let cells: Vec<(usize, usize)> = (0..warps.len())
        .flat_map(|w| (0..probes.len()).map(move |p| (w, p)))
        .collect();
    let rows: Vec<Result<ReportRow>> = cells
        .par_iter()
        .map(|&(w, p)| norm_identity(&warps[w], &probes[p], params.s, params.b, params.delta))
        .collect();
    let mut worst: f64 = 0.0;
    for row in rows {
        let mut row = row?;
        let deviation = (row.ratio - 1.0).abs();
        row.status = if deviation < 1e-4 { "pass" } else { "fail" }.into();
        worst = worst.max(deviation);
        report.rows.push(row);
    }
    report
        .checks
        .push(Check::below("norm identity deviation", worst, 1e-4));
    let mut degeneracy: f64 = 0.0;
    for probe in &probes {
        degeneracy = degeneracy.max(identity_degeneracy(
            probe,
            params.s,
            params.b,
            params.delta,
        )?);
    }
    report
        .checks
        .push(Check::below("identity-warp degeneracy", degeneracy, 1e-10));
    Ok(report)
}

/// Writes the rows of several reports as one CSV table.
pub fn reports_to_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for report in reports {
        for row in &report.rows {
            writer
                .serialize(row)
                .map_err(|e| Error::param("csv", e.to_string()))?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::param("csv", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::param("csv", e.to_string()))
}

/// JSON summary of several reports.
pub fn reports_to_json(reports: &[ExperimentReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::param("json", e.to_string()))
}
