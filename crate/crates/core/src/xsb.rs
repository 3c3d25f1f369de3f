//! Space-time fields, smooth time cutoffs and the Bourgain-type norms.
//!
//! All norms share one engine: each active spatial mode is transformed in
//! time (standard or subordinate to a warp), weighted by `⟨τ - |k|²⟩^{2b}`
//! (or `⟨τ⟩^{2b}` for mixed Sobolev norms) and summed with the spatial weight
//! `(1+|k|_L)^{2s}`. The normalization `dτ/2π · dx/∏L` makes
//! `‖u‖_{X^{0,0}} = ‖u‖_{L²_{t,x}}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauge::{pullback, Reduction};
use crate::quadrature::interpolate_uniform;
use crate::spectral::{
    check_same_grid, forward_transform, inverse_transform, FourierField, Mode, TorusGrid,
    ACTIVE_THRESHOLD,
};
use crate::warp::{check_support, TauGrid, TimeGrid, TimeWarp};

/// A trajectory of [`FourierField`]s on a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: TorusGrid,
    times: TimeGrid,
    slices: Vec<FourierField>,
}

impl SpaceTimeField {
    pub fn new(grid: TorusGrid, times: TimeGrid, slices: Vec<FourierField>) -> Result<Self> {
        if slices.len() != times.len() {
            return Err(Error::SizeMismatch {
                expected: times.len(),
                actual: slices.len(),
            });
        }
        for slice in &slices {
            check_same_grid(&grid, slice.grid())?;
        }
        Ok(SpaceTimeField {
            grid,
            times,
            slices,
        })
    }

    /// Samples `rule(t)` at every node.
    pub fn from_fn(
        grid: TorusGrid,
        times: TimeGrid,
        rule: impl Fn(f64) -> FourierField + Sync,
    ) -> Result<Self> {
        let slices: Vec<FourierField> = times.nodes().par_iter().map(|&t| rule(t)).collect();
        Self::new(grid, times, slices)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn slice(&self, i: usize) -> &FourierField {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[FourierField] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<FourierField> {
        self.slices
    }

    /// Multiplies the slice at time `t` by `factor(t)`.
    pub fn scale_in_time(&self, factor: impl Fn(f64) -> Complex64) -> Self {
        let slices = self
            .slices
            .iter()
            .enumerate()
            .map(|(i, s)| s.scaled(factor(self.times.node(i))))
            .collect();
        SpaceTimeField {
            grid: self.grid,
            times: self.times,
            slices,
        }
    }

    /// Pointwise combination of several fields on a shared lattice,
    /// evaluated in physical space at every node.
    pub fn combine(
        fields: &[&SpaceTimeField],
        op: impl Fn(&[Complex64]) -> Complex64 + Sync,
    ) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::param("fields", "need at least one field"))?;
        for f in fields {
            check_same_grid(&first.grid, &f.grid)?;
            if f.times != first.times {
                return Err(Error::param(
                    "times",
                    "fields live on different time lattices",
                ));
            }
        }
        let grid = first.grid;
        let slices: Vec<FourierField> = (0..first.times.len())
            .into_par_iter()
            .map(|j| {
                let samples: Vec<Vec<Complex64>> = fields
                    .iter()
                    .map(|f| inverse_transform(&f.slices[j]))
                    .collect();
                let mut args = vec![Complex64::new(0.0, 0.0); fields.len()];
                let out: Vec<Complex64> = (0..grid.len())
                    .map(|m| {
                        for (a, s) in args.iter_mut().zip(&samples) {
                            *a = s[m];
                        }
                        op(&args)
                    })
                    .collect();
                forward_transform(&grid, &out).expect("grid sizes agree")
            })
            .collect();
        Self::new(grid, first.times, slices)
    }

    /// Largest active `|k|_L²` over all slices.
    pub fn active_frequency_sq(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.active_frequency_sq())
            .fold(0.0, f64::max)
    }

    /// Space-time `L²` norm by Simpson quadrature in time.
    pub fn l2_norm(&self) -> f64 {
        self.slices
            .iter()
            .zip(self.times.simpson_weights())
            .map(|(s, w)| w * s.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Resamples `u(g^{-1}(t'), x)` on a uniform lattice of `n` nodes over
    /// `g([t0, t1])` by degree-8 barycentric interpolation in `t`.
    pub fn reparameterize(&self, warp: &TimeWarp, n: usize) -> Result<Self> {
        let target = TimeGrid::new(warp.g(self.times.start()), warp.g(self.times.end()), n)?;
        let originals = warp.g_inverse_lattice(&target.nodes());
        let nt = self.times.len();
        let h = self.times.step();
        let t0 = self.times.start();
        let mut slices = vec![FourierField::zeros(self.grid); n];
        let mut series = vec![Complex64::new(0.0, 0.0); nt];
        for idx in 0..self.grid.len() {
            for (j, s) in self.slices.iter().enumerate() {
                series[j] = s.coeffs()[idx];
            }
            if series.iter().all(|c| c.norm() == 0.0) {
                continue;
            }
            for (slice, &t) in slices.iter_mut().zip(&originals) {
                slice.coeffs_mut()[idx] = interpolate_uniform(t0, h, &series, t);
            }
        }
        Self::new(self.grid, target, slices)
    }
}

/// Smooth cutoff `χ_I(t) = ψ(t/δ)`, equal to 1 on `[-δ, δ]` and supported in
/// `[-2δ, 2δ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec {
    delta: f64,
}

impl CutoffSpec {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(
                "delta",
                format!("half-width must be positive, got {delta}"),
            ));
        }
        Ok(CutoffSpec { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

fn glue(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Evaluates the cutoff profile: `ψ(x) = 1` for `|x| ≤ 1`, `0` for `|x| ≥ 2`,
/// and `h(2-|x|)/(h(2-|x|)+h(|x|-1))` in between with `h(u) = e^{-1/u}`.
pub fn cutoff(t: f64, spec: &CutoffSpec) -> f64 {
    let x = (t / spec.delta).abs();
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let a = glue(2.0 - x);
        a / (a + glue(x - 1.0))
    }
}

/// Where the `τ`-weight is centred.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauCenter {
    /// `⟨τ - |k|_L²⟩`, the Bourgain weight.
    Paraboloid,
    /// `⟨τ⟩`, giving the mixed Sobolev norm `H^b_t H^s_x`.
    Origin,
}

struct ActiveModes {
    modes: Vec<Mode>,
    freq_sq: Vec<f64>,
    /// Simpson-weighted samples, node-major: `data[j * count + a]`.
    data: Vec<Complex64>,
}

fn collect_active(u: &SpaceTimeField, scale: &[f64]) -> ActiveModes {
    let grid = u.grid;
    let peak = u
        .slices
        .iter()
        .flat_map(|s| s.coeffs().iter().map(|c| c.norm()))
        .fold(0.0, f64::max);
    let mut indices = Vec::new();
    if peak > 0.0 {
        for idx in 0..grid.len() {
            let m = u
                .slices
                .iter()
                .map(|s| s.coeffs()[idx].norm())
                .fold(0.0, f64::max);
            if m > ACTIVE_THRESHOLD * peak {
                indices.push(idx);
            }
        }
    }
    let count = indices.len();
    let mut data = vec![Complex64::new(0.0, 0.0); count * u.slices.len()];
    for (j, s) in u.slices.iter().enumerate() {
        for (a, &idx) in indices.iter().enumerate() {
            data[j * count + a] = s.coeffs()[idx] * scale[j];
        }
    }
    let modes: Vec<Mode> = indices.iter().map(|&i| grid.mode_of(i)).collect();
    let freq_sq = modes.iter().map(|&k| grid.frequency_sq(k)).collect();
    ActiveModes {
        modes,
        freq_sq,
        data,
    }
}

const TAU_CHUNK: usize = 64;

/// Per-mode weighted `τ`-integrals `∫ w(τ,k) |ũ_k(τ)|² dτ` for the active modes.
fn weighted_tau_integrals(
    active: &ActiveModes,
    phases: &[f64],
    taus: &TauGrid,
    weight: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<f64> {
    let count = active.modes.len();
    if count == 0 {
        return Vec::new();
    }
    let tau_w = taus.simpson_weights();
    let dtau = taus.step();
    let chunks: Vec<usize> = (0..taus.len()).step_by(TAU_CHUNK).collect();
    let partials: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + TAU_CHUNK).min(taus.len());
            let mut acc = vec![0.0; count];
            let mut row = vec![Complex64::new(0.0, 0.0); count];
            let tau0 = taus.node(start);
            let mut kernel: Vec<Complex64> = phases
                .iter()
                .map(|&p| Complex64::from_polar(1.0, tau0 * p))
                .collect();
            let stepper: Vec<Complex64> = phases
                .iter()
                .map(|&p| Complex64::from_polar(1.0, dtau * p))
                .collect();
            for m in start..end {
                row.iter_mut().for_each(|r| *r = Complex64::new(0.0, 0.0));
                for (j, e) in kernel.iter().enumerate() {
                    let base = &active.data[j * count..(j + 1) * count];
                    for (r, c) in row.iter_mut().zip(base) {
                        *r += e * c;
                    }
                }
                let tau = taus.node(m);
                for a in 0..count {
                    acc[a] += tau_w[m] * weight(tau, active.freq_sq[a]) * row[a].norm_sqr();
                }
                for (e, s) in kernel.iter_mut().zip(&stepper) {
                    *e *= s;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; count];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Shared engine for every space-time norm in this module.
pub fn spacetime_norm(
    u: &SpaceTimeField,
    s: f64,
    b: f64,
    warp: &TimeWarp,
    taus: &TauGrid,
    center: TauCenter,
) -> Result<f64> {
    let times = u.times;
    let weights = times.simpson_weights();
    warn_on_leakage(u);
    let active = collect_active(u, &weights);
    let phases: Vec<f64> = times.nodes().iter().map(|&t| warp.g(t)).collect();
    let integrals = weighted_tau_integrals(&active, &phases, taus, |tau, k2| match center {
        TauCenter::Paraboloid => (1.0 + (tau - k2).abs()).powf(2.0 * b),
        TauCenter::Origin => (1.0 + tau * tau).powf(b),
    });
    let sum: f64 = integrals
        .iter()
        .zip(&active.freq_sq)
        .map(|(v, k2)| (1.0 + k2.sqrt()).powf(2.0 * s) * v)
        .sum();
    Ok((sum / (2.0 * PI * u.grid.volume())).sqrt())
}

fn warn_on_leakage(u: &SpaceTimeField) {
    let first = u.slices.first().map_or(0.0, |s| s.l2_norm());
    let last = u.slices.last().map_or(0.0, |s| s.l2_norm());
    let peak = u.slices.iter().map(|s| s.l2_norm()).fold(0.0, f64::max);
    check_support(
        &[
            Complex64::new(first, 0.0),
            Complex64::new(peak, 0.0),
            Complex64::new(last, 0.0),
        ],
        "space-time norm",
    );
}

/// `‖u‖_{X^{s,b}}` with the standard time transform.
pub fn xsb_norm(u: &SpaceTimeField, s: f64, b: f64, taus: &TauGrid) -> Result<f64> {
    spacetime_norm(u, s, b, &TimeWarp::identity(), taus, TauCenter::Paraboloid)
}

/// `‖u‖_{X^{s,b}_g}` with the transform subordinate to `warp`.
pub fn xsb_g_norm(
    u: &SpaceTimeField,
    s: f64,
    b: f64,
    warp: &TimeWarp,
    taus: &TauGrid,
) -> Result<f64> {
    spacetime_norm(u, s, b, warp, taus, TauCenter::Paraboloid)
}

/// `‖u‖_{X̃^{s,b}_g} = ‖g' u‖_{X^{s,b}_g}`.
pub fn xtilde_g_norm(
    u: &SpaceTimeField,
    s: f64,
    b: f64,
    warp: &TimeWarp,
    taus: &TauGrid,
) -> Result<f64> {
    if warp.is_identity() {
        return xsb_g_norm(u, s, b, warp, taus);
    }
    let weighted = u.scale_in_time(|t| Complex64::new(warp.g_prime(t), 0.0));
    xsb_g_norm(&weighted, s, b, warp, taus)
}

/// Mixed Sobolev norm `‖u‖_{H^b_t H^s_x}` (weights `⟨τ⟩^{2b}` and
/// `(1+|k|)^{2s}`), with the time transform subordinate to `warp`.
pub fn mixed_sobolev_norm(
    u: &SpaceTimeField,
    s: f64,
    b: f64,
    warp: &TimeWarp,
    taus: &TauGrid,
) -> Result<f64> {
    spacetime_norm(u, s, b, warp, taus, TauCenter::Origin)
}

/// Which twisted space [`twisted_norm`] measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwistedSpace {
    /// `X^{s,b}_Φ`: `e^Φ u ∈ X^{s,b}`.
    Phi,
    /// `X^{s,b}_{g,Φ}`: `e^Φ u ∈ X^{s,b}_g`.
    WarpPhi,
    /// `X^{s,b}_{Φ,α̃}`: `(e^Φ u)∘α̃ ∈ X^{s,b}`.
    PhiAlpha,
    /// `X^{s,b}_{g,Φ,α̃}`: `(e^Φ u)∘α̃ ∈ X^{s,b}_g`.
    WarpPhiAlpha,
    /// `X̃^{s,b}_{g,Φ,α̃}`: `g'(e^Φ u)∘α̃ ∈ X^{s,b}_g`.
    TildeWarpPhiAlpha,
}

impl TwistedSpace {
    fn needs_warp(self) -> bool {
        matches!(
            self,
            Self::WarpPhi | Self::WarpPhiAlpha | Self::TildeWarpPhiAlpha
        )
    }

    fn needs_alpha(self) -> bool {
        matches!(
            self,
            Self::PhiAlpha | Self::WarpPhiAlpha | Self::TildeWarpPhiAlpha
        )
    }
}

/// Norm in a gauge-twisted space.
///
/// `phi` holds gauge samples on the grid where the base norm is taken: the
/// grid of `u`, or the reduced grid of `alpha_map` for the pulled-back
/// spaces. The pullback evaluates `u` at `α(y)` by Fourier summation.
#[allow(clippy::too_many_arguments)]
pub fn twisted_norm(
    u: &SpaceTimeField,
    s: f64,
    b: f64,
    phi: Option<&[f64]>,
    alpha_map: Option<&Reduction>,
    warp: Option<&TimeWarp>,
    space: TwistedSpace,
    taus: &TauGrid,
) -> Result<f64> {
    let mut missing = Vec::new();
    if phi.is_none() {
        missing.push("gauge samples phi".to_string());
    }
    if space.needs_alpha() && alpha_map.is_none() {
        missing.push("reduction alpha_map".to_string());
    }
    if space.needs_warp() && warp.is_none() {
        missing.push("time warp".to_string());
    }
    if !missing.is_empty() {
        return Err(Error::MissingComponents(missing));
    }
    let phi = phi.expect("checked above");
    let pulled = match alpha_map {
        Some(red) if space.needs_alpha() => {
            let slices = u
                .slices
                .iter()
                .map(|s| pullback(s, red))
                .collect::<Result<Vec<_>>>()?;
            SpaceTimeField::new(*red.grid(), u.times, slices)?
        }
        _ => u.clone(),
    };
    let grid = pulled.grid;
    if phi.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: phi.len(),
        });
    }
    let gauge: Vec<f64> = phi.iter().map(|p| p.exp()).collect();
    let twisted_slices = pulled
        .slices
        .iter()
        .map(|s| {
            let samples: Vec<Complex64> = inverse_transform(s)
                .iter()
                .zip(&gauge)
                .map(|(v, e)| v * e)
                .collect();
            forward_transform(&grid, &samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let twisted = SpaceTimeField::new(grid, u.times, twisted_slices)?;
    match space {
        TwistedSpace::Phi | TwistedSpace::PhiAlpha => xsb_norm(&twisted, s, b, taus),
        TwistedSpace::WarpPhi | TwistedSpace::WarpPhiAlpha => {
            xsb_g_norm(&twisted, s, b, warp.expect("checked above"), taus)
        }
        TwistedSpace::TildeWarpPhiAlpha => {
            xtilde_g_norm(&twisted, s, b, warp.expect("checked above"), taus)
        }
    }
}

/// Per-mode transforms `ũ_k(τ)` for every active mode, for diagnostics.
pub fn mode_transforms(
    u: &SpaceTimeField,
    warp: &TimeWarp,
    taus: &TauGrid,
) -> Vec<(Mode, Vec<Complex64>)> {
    let weights = u.times.simpson_weights();
    let active = collect_active(u, &weights);
    let phases: Vec<f64> = u.times.nodes().iter().map(|&t| warp.g(t)).collect();
    let count = active.modes.len();
    let mut out: Vec<(Mode, Vec<Complex64>)> = active
        .modes
        .iter()
        .map(|&k| (k, Vec::with_capacity(taus.len())))
        .collect();
    for m in 0..taus.len() {
        let tau = taus.node(m);
        let mut row = vec![Complex64::new(0.0, 0.0); count];
        for (j, &p) in phases.iter().enumerate() {
            let e = Complex64::from_polar(1.0, tau * p);
            for (a, r) in row.iter_mut().enumerate() {
                *r += e * active.data[j * count + a];
            }
        }
        for (a, r) in row.into_iter().enumerate() {
            out[a].1.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_profile() {
        let spec = CutoffSpec::new(0.5).unwrap();
        assert_eq!(cutoff(0.3, &spec), 1.0);
        assert_eq!(cutoff(-0.5, &spec), 1.0);
        assert_eq!(cutoff(1.0, &spec), 0.0);
        assert_eq!(cutoff(-1.7, &spec), 0.0);
        assert_relative_eq!(cutoff(0.75, &spec), 0.5, epsilon = 1e-15);
        for i in 0..200 {
            let v = cutoff(-1.2 + 0.012 * i as f64, &spec);
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(CutoffSpec::new(0.0).is_err());
    }

    fn bump_field(grid: TorusGrid, times: TimeGrid, mode: Mode) -> SpaceTimeField {
        let spec = CutoffSpec::new(0.4).unwrap();
        SpaceTimeField::from_fn(grid, times, |t| {
            let mut f = FourierField::zeros(grid);
            f.set(
                mode,
                Complex64::new(1.0 + 0.5 * t, 0.3 * t) * cutoff(t, &spec) * grid.volume(),
            )
            .unwrap();
            f
        })
        .unwrap()
    }

    #[test]
    fn tensor_factorization() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 1025).unwrap();
        let u = bump_field(grid, times, [1, 2]);
        let taus = TauGrid::new(80.0, 1601).unwrap();
        let (s, b) = (0.7, 0.6);
        let norm = xsb_norm(&u, s, b, &taus).unwrap();
        let spec = CutoffSpec::new(0.4).unwrap();
        let h: Vec<Complex64> = times
            .nodes()
            .iter()
            .map(|&t| Complex64::new(1.0 + 0.5 * t, 0.3 * t) * cutoff(t, &spec))
            .collect();
        let id = TimeWarp::identity();
        let hh = crate::warp::modified_fourier(&h, &id, &times, &taus).unwrap();
        let w = taus.simpson_weights();
        let int: f64 = hh
            .iter()
            .enumerate()
            .map(|(m, v)| w[m] * (1.0 + (taus.node(m) - 5.0).abs()).powf(2.0 * b) * v.norm_sqr())
            .sum::<f64>()
            / (2.0 * PI);
        let expected = (1.0 + 5f64.sqrt()).powf(s) * int.sqrt() * (4.0 * PI * PI).sqrt();
        assert_relative_eq!(norm, expected, max_relative = 1e-10);
    }

    #[test]
    fn zero_weights_give_l2() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 513).unwrap();
        let u = bump_field(grid, times, [2, -1]);
        let taus = TauGrid::resolved(2.0, u.active_frequency_sq()).unwrap();
        assert_relative_eq!(
            xsb_norm(&u, 0.0, 0.0, &taus).unwrap(),
            u.l2_norm(),
            max_relative = 1e-5
        );
    }

    #[test]
    fn identity_warp_degeneracy() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 257).unwrap();
        let u = bump_field(grid, times, [1, 1]);
        let taus = TauGrid::new(40.0, 321).unwrap();
        let id = TimeWarp::identity();
        let a = xsb_norm(&u, 0.5, 0.53, &taus).unwrap();
        let b = xsb_g_norm(&u, 0.5, 0.53, &id, &taus).unwrap();
        let c = xtilde_g_norm(&u, 0.5, 0.53, &id, &taus).unwrap();
        assert!((a - b).abs() <= 1e-10 * a && (a - c).abs() <= 1e-10 * a);
    }

    #[test]
    fn twisted_reports_missing_pieces() {
        let grid = TorusGrid::square(1, 8).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 65).unwrap();
        let u = bump_field(grid, times, [1, 0]);
        let taus = TauGrid::new(20.0, 161).unwrap();
        match twisted_norm(
            &u,
            0.0,
            0.5,
            None,
            None,
            None,
            TwistedSpace::TildeWarpPhiAlpha,
            &taus,
        ) {
            Err(Error::MissingComponents(list)) => assert_eq!(list.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
        let zero = vec![0.0; grid.len()];
        let base = xsb_norm(&u, 0.0, 0.5, &taus).unwrap();
        let twisted = twisted_norm(
            &u,
            0.0,
            0.5,
            Some(&zero),
            None,
            None,
            TwistedSpace::Phi,
            &taus,
        )
        .unwrap();
        assert_relative_eq!(twisted, base, max_relative = 1e-12);
        let shifted = vec![0.3; grid.len()];
        let twisted = twisted_norm(
            &u,
            0.0,
            0.5,
            Some(&shifted),
            None,
            None,
            TwistedSpace::Phi,
            &taus,
        )
        .unwrap();
        assert_relative_eq!(twisted, 0.3f64.exp() * base, max_relative = 1e-12);
    }
}
