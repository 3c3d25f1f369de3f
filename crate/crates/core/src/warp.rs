//! Time reparameterizations, the transform subordinate to a warp, and the
//! warped solution operator.
//!
//! A [`TimeWarp`] bundles `g`, `g'` and `g^{-1}`. Every time integral in the
//! crate runs on a uniform [`TimeGrid`] with Simpson weights, and every
//! frequency integral on a symmetric [`TauGrid`].
//!
//! Conventions: the transform subordinate to `g` is
//! `ũ(τ) = ∫ e^{i g(t) τ} u(t) dt` and its inverse is
//! `u(t) = g'(t)/(2π) ∫ e^{-i g(t) τ} v(τ) dτ`. With this sign the free
//! evolution `e^{-i g(t)|k|²}` concentrates on `τ = |k|²`, and
//! `F̃(∂_t u) = (-iτ) F̃(g' u)`. Frequency integrals carry the measure
//! `dτ/2π`, which makes the Plancherel identities hold without extra factors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{composite_weights, simpson_weights};
use crate::spectral::{inverse_in_place, FourierField};
use crate::xsb::SpaceTimeField;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum WarpKind {
    Identity,
    Power(f64),
    Custom {
        g: Arc<ScalarFn>,
        g_prime: Arc<ScalarFn>,
        alpha: f64,
    },
}

/// A time reparameterization `t' = g(t)` with `g(0) = 0`.
#[derive(Clone)]
pub struct TimeWarp {
    kind: WarpKind,
    label: String,
}

impl fmt::Debug for TimeWarp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeWarp")
            .field("label", &self.label)
            .finish()
    }
}

impl TimeWarp {
    /// `g(t) = t`, the non-degenerate baseline.
    pub fn identity() -> Self {
        TimeWarp {
            kind: WarpKind::Identity,
            label: "identity".into(),
        }
    }

    /// `g(t) = t³/3`.
    pub fn cubic() -> Self {
        TimeWarp {
            kind: WarpKind::Power(3.0),
            label: "cubic".into(),
        }
    }

    /// `g(t) = sign(t)|t|^α/α` with `g'(t) = |t|^{α-1}`, for `α ≥ 1`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::param(
                "alpha",
                format!("power warp needs alpha >= 1, got {alpha}"),
            ));
        }
        Ok(TimeWarp {
            kind: WarpKind::Power(alpha),
            label: format!("power:alpha={alpha}"),
        })
    }

    /// A user-supplied warp. The inverse is computed numerically.
    pub fn custom(
        label: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth_exponent: f64,
    ) -> Self {
        TimeWarp {
            kind: WarpKind::Custom {
                g: Arc::new(g),
                g_prime: Arc::new(g_prime),
                alpha: growth_exponent,
            },
            label: label.into(),
        }
    }

    /// Parses `identity`, `cubic` or `power:alpha=<value>`.
    pub fn parse(label: &str) -> Result<Self> {
        let trimmed = label.trim();
        match trimmed {
            "identity" => Ok(Self::identity()),
            "cubic" => Ok(Self::cubic()),
            _ => {
                let alpha = trimmed
                    .strip_prefix("power:alpha=")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::UnknownLabel {
                        label: trimmed.into(),
                        reason: "expected identity, cubic or power:alpha=<value>".into(),
                    })?;
                Self::power(alpha)
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, WarpKind::Identity)
    }

    /// Growth exponent `α` with `|g^{(j)}(t)| ≲ (1+|t|)^{α-j}`.
    pub fn growth_exponent(&self) -> f64 {
        match &self.kind {
            WarpKind::Identity => 1.0,
            WarpKind::Power(a) => *a,
            WarpKind::Custom { alpha, .. } => *alpha,
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        match &self.kind {
            WarpKind::Identity => t,
            WarpKind::Power(a) => {
                if *a == 3.0 {
                    t * t * t / 3.0
                } else {
                    t.signum() * t.abs().powf(*a) / a
                }
            }
            WarpKind::Custom { g, .. } => g(t),
        }
    }

    pub fn g_prime(&self, t: f64) -> f64 {
        match &self.kind {
            WarpKind::Identity => 1.0,
            WarpKind::Power(a) => {
                if *a == 3.0 {
                    t * t
                } else {
                    t.abs().powf(a - 1.0)
                }
            }
            WarpKind::Custom { g_prime, .. } => g_prime(t),
        }
    }

    pub fn g_inverse(&self, tau: f64) -> f64 {
        match &self.kind {
            WarpKind::Identity => tau,
            WarpKind::Power(a) => {
                if *a == 3.0 {
                    (3.0 * tau).cbrt()
                } else {
                    tau.signum() * (a * tau.abs()).powf(1.0 / a)
                }
            }
            WarpKind::Custom { g, g_prime, .. } => {
                invert_monotone(g.as_ref(), g_prime.as_ref(), tau, None)
            }
        }
    }

    /// Inverse on a sorted lattice of values. Custom warps warm-start each
    /// Newton solve from the previous root.
    pub fn g_inverse_lattice(&self, values: &[f64]) -> Vec<f64> {
        match &self.kind {
            WarpKind::Custom { g, g_prime, .. } => {
                let mut prev = None;
                values
                    .iter()
                    .map(|&v| {
                        let x = invert_monotone(g.as_ref(), g_prime.as_ref(), v, prev);
                        prev = Some(x);
                        x
                    })
                    .collect()
            }
            _ => values.iter().map(|&v| self.g_inverse(v)).collect(),
        }
    }

    /// `g(t1) - g(t0)`, the length of the image window.
    pub fn measure(&self, t0: f64, t1: f64) -> f64 {
        self.g(t1) - self.g(t0)
    }

    /// Maximum of `|g'|` over `[t0, t1]`.
    pub fn max_g_prime(&self, t0: f64, t1: f64) -> f64 {
        match &self.kind {
            WarpKind::Identity => 1.0,
            WarpKind::Power(a) => t0.abs().max(t1.abs()).powf(a - 1.0),
            WarpKind::Custom { g_prime, .. } => (0..=1000)
                .map(|i| g_prime(t0 + (t1 - t0) * i as f64 / 1000.0).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Checks the structural invariants on the working interval `[t0, t1]`:
    /// `g(0) = 0`, strict monotonicity on 10³ points, inversion to `1e-10`
    /// and agreement of `g'` with centred differences to `1e-6` relative.
    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        if !(t0 < t1) {
            return Err(Error::param(
                "window",
                format!("need t0 < t1, got [{t0}, {t1}]"),
            ));
        }
        if self.g(0.0).abs() > 1e-14 {
            return Err(Error::param(
                "warp",
                format!("g(0) = {} is not zero", self.g(0.0)),
            ));
        }
        let samples: Vec<f64> = (0..1000)
            .map(|i| t0 + (t1 - t0) * i as f64 / 999.0)
            .collect();
        let values: Vec<f64> = samples.iter().map(|&t| self.g(t)).collect();
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param(
                "warp",
                "g is not strictly increasing on the window",
            ));
        }
        let scale = self.max_g_prime(t0, t1);
        for i in 0..100 {
            let t = t0 + (t1 - t0) * (i as f64 + 0.5) / 100.0;
            let roundtrip = self.g(self.g_inverse(self.g(t)));
            if (roundtrip - self.g(t)).abs() > 1e-10 {
                return Err(Error::param(
                    "warp",
                    format!(
                        "g(g^-1(s)) misses s by {} at t = {t}",
                        roundtrip - self.g(t)
                    ),
                ));
            }
            let e = 1e-5 * t.abs().max(1.0) * (t1 - t0).min(1.0);
            let fd = (self.g(t + e) - self.g(t - e)) / (2.0 * e);
            let exact = self.g_prime(t);
            if (fd - exact).abs() > 1e-6 * exact.abs().max(1e-3 * scale) {
                return Err(Error::param(
                    "warp",
                    format!("g' disagrees with finite differences at t = {t}"),
                ));
            }
        }
        Ok(())
    }
}

fn invert_monotone(g: &ScalarFn, g_prime: &ScalarFn, target: f64, guess: Option<f64>) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) > target {
        lo *= 2.0;
    }
    while g(hi) < target {
        hi *= 2.0;
    }
    let mut x = guess
        .filter(|x| *x > lo && *x < hi)
        .unwrap_or(0.5 * (lo + hi));
    for _ in 0..200 {
        let f = g(x) - target;
        if f.abs() <= 1e-12 * target.abs().max(1.0) {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = g_prime(x);
        let newton = x - f / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Uniform time lattice with an odd number of nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::param(
                "time window",
                format!("need finite t0 < t1, got [{t0}, {t1}]"),
            ));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::param(
                "n_t",
                format!("needs an odd count of at least 3, got {n}"),
            ));
        }
        Ok(TimeGrid { t0, t1, n })
    }

    /// Coarsest lattice on `[t0, t1]` whose step does not exceed `max_step`.
    pub fn with_max_step(t0: f64, t1: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::param(
                "time step",
                format!("must be positive, got {max_step}"),
            ));
        }
        let mut intervals = ((t1 - t0) / max_step * (1.0 - 1e-12)).ceil().max(2.0) as usize;
        if intervals % 2 == 1 {
            intervals += 1;
        }
        Self::new(t0, t1, intervals + 1)
    }

    /// Lattice obeying the phase-resolution rule for fields whose largest
    /// active `|k|²` is `lambda`.
    pub fn resolved(t0: f64, t1: f64, warp: &TimeWarp, lambda: f64) -> Result<Self> {
        Self::with_max_step(t0, t1, phase_step(warp, t0, t1, lambda, 0.0))
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.t1
        } else {
            self.t0 + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node equal to `t` up to a relative tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.step();
        let i = x.round();
        if (x - i).abs() < 1e-8 && i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn simpson_weights(&self) -> Vec<f64> {
        simpson_weights(self.n, self.step())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 - 1e-12 && t <= self.t1 + 1e-12
    }
}

/// Largest time step allowed by the phase-resolution rule
/// `Δt ≤ min(1/(8 max|g'| Λ), (t1-t0)/64)`. A positive `tau_max` adds the
/// constraint `Δt ≤ 1/(max|g'| τ_max)`: at least `2π` nodes per period of
/// every kernel `e^{iτg(t)}` with `|τ| ≤ τ_max`.
pub fn phase_step(warp: &TimeWarp, t0: f64, t1: f64, lambda: f64, tau_max: f64) -> f64 {
    let gp = warp.max_g_prime(t0, t1).max(1e-300);
    let mut step = (t1 - t0) / 64.0;
    if lambda > 0.0 {
        step = step.min(1.0 / (8.0 * gp * lambda));
    }
    if tau_max > 0.0 {
        step = step.min(1.0 / (gp * tau_max));
    }
    step
}

/// Symmetric frequency lattice on `[-τ_max, τ_max]` with an odd node count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauGrid {
    tau_max: f64,
    n: usize,
}

impl TauGrid {
    pub fn new(tau_max: f64, n: usize) -> Result<Self> {
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(Error::param(
                "tau_max",
                format!("must be positive, got {tau_max}"),
            ));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::param(
                "n_tau",
                format!("needs an odd count of at least 3, got {n}"),
            ));
        }
        Ok(TauGrid { tau_max, n })
    }

    /// Truncation rule `τ_max = 4Λ + 40/G`, `Δτ ≤ 1/(2G)`, where `G` is the
    /// length of the warped time window.
    pub fn resolved(window_measure: f64, lambda: f64) -> Result<Self> {
        if !(window_measure > 0.0) {
            return Err(Error::param(
                "window",
                "warped window must have positive length",
            ));
        }
        let tau_max = 4.0 * lambda + 40.0 / window_measure;
        let dtau = 1.0 / (2.0 * window_measure);
        let mut intervals = (2.0 * tau_max / dtau).ceil() as usize;
        if intervals % 2 == 1 {
            intervals += 1;
        }
        Self::new(tau_max, intervals.max(2) + 1)
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        2.0 * self.tau_max / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.tau_max + i as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn simpson_weights(&self) -> Vec<f64> {
        simpson_weights(self.n, self.step())
    }
}

/// Emits a warning when the first or last sample is not negligible.
pub(crate) fn check_support(values: &[Complex64], context: &str) -> bool {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = values
        .first()
        .map_or(0.0, |v| v.norm())
        .max(values.last().map_or(0.0, |v| v.norm()));
    let leaked = peak > 0.0 && edge > 1e-12 * peak.max(1.0);
    if leaked {
        log::warn!("support leakage in {context}: endpoint magnitude {edge:.3e} (peak {peak:.3e})");
    }
    leaked
}

/// Transform subordinate to `g`, `ũ(τ) = ∫ e^{i g(t) τ} u(t) dt`, by Simpson
/// quadrature at every node of `taus`.
pub fn modified_fourier(
    u: &[Complex64],
    warp: &TimeWarp,
    times: &TimeGrid,
    taus: &TauGrid,
) -> Result<Vec<Complex64>> {
    if u.len() != times.len() {
        return Err(Error::SizeMismatch {
            expected: times.len(),
            actual: u.len(),
        });
    }
    check_support(u, "modified_fourier");
    let w = times.simpson_weights();
    let phases: Vec<f64> = times.nodes().iter().map(|&t| warp.g(t)).collect();
    let weighted: Vec<Complex64> = u.iter().zip(&w).map(|(u, w)| u * w).collect();
    Ok((0..taus.len())
        .map(|m| {
            let tau = taus.node(m);
            phases
                .iter()
                .zip(&weighted)
                .map(|(&p, v)| v * Complex64::from_polar(1.0, tau * p))
                .sum()
        })
        .collect())
}

/// Inverse transform `u(t) = g'(t)/(2π) ∫ e^{-i g(t) τ} v(τ) dτ`.
pub fn inverse_modified_fourier(
    v: &[Complex64],
    warp: &TimeWarp,
    taus: &TauGrid,
    times: &TimeGrid,
) -> Result<Vec<Complex64>> {
    if v.len() != taus.len() {
        return Err(Error::SizeMismatch {
            expected: taus.len(),
            actual: v.len(),
        });
    }
    check_support(v, "inverse_modified_fourier");
    let w = taus.simpson_weights();
    let weighted: Vec<Complex64> = v.iter().zip(&w).map(|(v, w)| v * w).collect();
    Ok(times
        .nodes()
        .iter()
        .map(|&t| {
            let p = warp.g(t);
            let sum: Complex64 = weighted
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -taus.node(m) * p))
                .sum();
            sum * (warp.g_prime(t) / (2.0 * PI))
        })
        .collect())
}

/// `‖f‖_{H^{p,b}_g} = (∫ ⟨τ⟩^{pb} |f̃(τ)|^p dτ/2π)^{1/p}` with `⟨τ⟩ = (1+τ²)^{1/2}`.
pub fn h_pb_g_norm(
    f: &[Complex64],
    times: &TimeGrid,
    p: f64,
    b: f64,
    warp: &TimeWarp,
    taus: &TauGrid,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param("p", format!("must be at least 1, got {p}")));
    }
    let transformed = modified_fourier(f, warp, times, taus)?;
    let w = taus.simpson_weights();
    let sum: f64 = transformed
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let tau = taus.node(m);
            w[m] * (1.0 + tau * tau).powf(0.5 * p * b) * v.norm().powf(p)
        })
        .sum();
    Ok((sum / (2.0 * PI)).powf(1.0 / p))
}

/// Solution operator `S(t,s)`: multiplies `φ̂(k)` by `e^{-i(g(t)-g(s))|k|_L²}`.
pub fn propagate(phi: &FourierField, warp: &TimeWarp, t: f64, s: f64) -> FourierField {
    propagate_by(phi, warp.g(t) - warp.g(s))
}

/// Free evolution over a warped-time increment.
pub(crate) fn propagate_by(phi: &FourierField, warped_increment: f64) -> FourierField {
    let grid = *phi.grid();
    let mut out = phi.clone();
    if warped_increment != 0.0 {
        for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                *c *= Complex64::from_polar(
                    1.0,
                    -warped_increment * grid.frequency_sq(grid.mode_of(idx)),
                );
            }
        }
    }
    out
}

/// Samples of `e^{-iθΔ}`-evolved `φ` written into `out`.
pub(crate) fn evolved_samples(phi: &FourierField, warped_increment: f64, out: &mut Vec<Complex64>) {
    let grid = *phi.grid();
    out.clear();
    out.extend(phi.coeffs().iter().enumerate().map(|(idx, &c)| {
        if c == Complex64::new(0.0, 0.0) {
            c
        } else {
            c * Complex64::from_polar(
                1.0,
                -warped_increment * grid.frequency_sq(grid.mode_of(idx)),
            )
        }
    }));
    inverse_in_place(&grid, out);
}

/// `S(t,0)φ + ∫_0^t S(t,s) f(s) ds`, with the integral evaluated mode by
/// mode on the forcing lattice. Both `0` and `t` must be lattice nodes.
pub fn duhamel(
    phi: &FourierField,
    forcing: &SpaceTimeField,
    warp: &TimeWarp,
    t: f64,
) -> Result<FourierField> {
    let times = forcing.times();
    let outside = || Error::TimeOutOfWindow {
        t,
        t0: times.start(),
        t1: times.end(),
    };
    let i_end = times.index_of(t).ok_or_else(outside)?;
    let i_zero = times.index_of(0.0).ok_or(Error::TimeOutOfWindow {
        t: 0.0,
        t0: times.start(),
        t1: times.end(),
    })?;
    crate::spectral::check_same_grid(phi.grid(), forcing.grid())?;
    let grid = *phi.grid();
    let (lo, hi) = (i_zero.min(i_end), i_zero.max(i_end));
    let sign = if i_end >= i_zero { 1.0 } else { -1.0 };
    let weights = composite_weights(hi - lo, times.step());
    let gt = warp.g(t);
    let mut out = propagate(phi, warp, t, 0.0);
    for (offset, w) in weights.iter().enumerate() {
        let j = lo + offset;
        let gs = warp.g(times.node(j));
        let slice = forcing.slice(j);
        let factor = sign * w;
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            let k = grid.mode_of(i);
            let f = slice.coeffs()[i];
            if f != Complex64::new(0.0, 0.0) {
                *c += f * Complex64::from_polar(factor, -(gt - gs) * grid.frequency_sq(k));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use approx::assert_relative_eq;

    fn gaussian_taus() -> TauGrid {
        TauGrid::new(12.0, 1201).unwrap()
    }

    #[test]
    fn labels_parse() {
        assert!(TimeWarp::parse("identity").unwrap().is_identity());
        assert_eq!(TimeWarp::parse("cubic").unwrap().growth_exponent(), 3.0);
        assert_eq!(
            TimeWarp::parse("power:alpha=2").unwrap().growth_exponent(),
            2.0
        );
        assert!(TimeWarp::parse("power:alpha=0.5").is_err());
        assert!(TimeWarp::parse("spline").is_err());
    }

    #[test]
    fn builtin_warps_validate() {
        for w in [
            TimeWarp::identity(),
            TimeWarp::cubic(),
            TimeWarp::power(2.0).unwrap(),
            TimeWarp::power(4.5).unwrap(),
        ] {
            w.validate(-2.0, 2.0).unwrap();
        }
    }

    #[test]
    fn custom_warp_inverts() {
        let w = TimeWarp::custom("sinh", |t: f64| t.sinh() - t, |t: f64| t.cosh() - 1.0, 3.0);
        w.validate(-1.5, 1.5).unwrap();
        let lattice: Vec<f64> = (0..20).map(|i| -0.4 + 0.04 * i as f64).collect();
        for (v, x) in lattice.iter().zip(w.g_inverse_lattice(&lattice)) {
            assert!((w.g(x) - v).abs() < 1e-11);
        }
    }

    #[test]
    fn non_monotone_warp_rejected() {
        let w = TimeWarp::custom("bad", |t: f64| t.sin(), |t: f64| t.cos(), 1.0);
        assert!(w.validate(-3.0, 3.0).is_err());
    }

    #[test]
    fn identity_transform_matches_gaussian_pair() {
        let times = TimeGrid::new(-10.0, 10.0, 2001).unwrap();
        let u: Vec<Complex64> = times
            .nodes()
            .iter()
            .map(|t| Complex64::new((-t * t / 2.0).exp(), 0.0))
            .collect();
        let taus = gaussian_taus();
        let ut = modified_fourier(&u, &TimeWarp::identity(), &times, &taus).unwrap();
        for (m, v) in ut.iter().enumerate() {
            let tau = taus.node(m);
            assert!(
                (v - Complex64::new((2.0 * PI).sqrt() * (-tau * tau / 2.0).exp(), 0.0)).norm()
                    < 1e-6
            );
        }
    }

    #[test]
    fn cubic_transform_of_substituted_gaussian() {
        let warp = TimeWarp::cubic();
        let times = TimeGrid::new(-3.2, 3.2, 8001).unwrap();
        let u: Vec<Complex64> = times
            .nodes()
            .iter()
            .map(|&t| Complex64::new(warp.g_prime(t) * (-warp.g(t).powi(2) / 2.0).exp(), 0.0))
            .collect();
        let taus = gaussian_taus();
        let ut = modified_fourier(&u, &warp, &times, &taus).unwrap();
        for (m, v) in ut.iter().enumerate() {
            let tau = taus.node(m);
            assert!(
                (v - Complex64::new((2.0 * PI).sqrt() * (-tau * tau / 2.0).exp(), 0.0)).norm()
                    < 1e-6
            );
        }
        let back = inverse_modified_fourier(&ut, &warp, &taus, &times).unwrap();
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).norm() < 1e-4);
        }
    }

    #[test]
    fn hpb_plancherel_and_monotone() {
        let times = TimeGrid::new(-10.0, 10.0, 2001).unwrap();
        let f: Vec<Complex64> = times
            .nodes()
            .iter()
            .map(|&t| {
                Complex64::new(
                    (-t * t / 2.0).exp() * (1.0 + 0.3 * t),
                    0.2 * t * (-t * t).exp(),
                )
            })
            .collect();
        let taus = gaussian_taus();
        let id = TimeWarp::identity();
        let l2: f64 = f
            .iter()
            .zip(times.simpson_weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(
            h_pb_g_norm(&f, &times, 2.0, 0.0, &id, &taus).unwrap(),
            l2,
            max_relative = 1e-5
        );
        let mut prev = 0.0;
        for b in [-0.5, 0.0, 0.25, 0.5, 1.0] {
            let n = h_pb_g_norm(&f, &times, 2.0, b, &id, &taus).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn propagate_examples() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let phi =
            FourierField::from_modes(grid, |k| Complex64::new(k[0] as f64, 1.0 - k[1] as f64));
        let warp = TimeWarp::cubic();
        assert_eq!(propagate(&phi, &warp, 0.7, 0.7), phi);
        let mut one = FourierField::zeros(grid);
        one.set([1, 1], Complex64::new(1.0, 0.0)).unwrap();
        let out = propagate(&one, &warp, 1.0, 0.0);
        assert!((out.get([1, 1]) - Complex64::from_polar(1.0, -2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn duhamel_constant_forcing() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let times = TimeGrid::new(0.0, 1.0, 2001).unwrap();
        let c = Complex64::new(0.7, -0.2);
        let mut slice = FourierField::zeros(grid);
        slice.set([2, 1], c).unwrap();
        let forcing = SpaceTimeField::new(grid, times, vec![slice; times.len()]).unwrap();
        let warp = TimeWarp::identity();
        for &t in &[1.0, 0.5, 0.0005] {
            let out = duhamel(&FourierField::zeros(grid), &forcing, &warp, t).unwrap();
            let k2 = 5.0;
            let exact = c * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -t * k2))
                / Complex64::new(0.0, k2);
            assert!((out.get([2, 1]) - exact).norm() < 1e-8, "t={t}");
        }
        assert!(duhamel(&FourierField::zeros(grid), &forcing, &warp, 1.5).is_err());
    }

    #[test]
    fn duhamel_backwards_in_time() {
        let grid = TorusGrid::square(1, 8).unwrap();
        let times = TimeGrid::new(-1.0, 1.0, 2001).unwrap();
        let c = Complex64::new(1.0, 0.5);
        let mut slice = FourierField::zeros(grid);
        slice.set([1, 0], c).unwrap();
        let forcing = SpaceTimeField::new(grid, times, vec![slice; times.len()]).unwrap();
        let t = -0.6;
        let out = duhamel(
            &FourierField::zeros(grid),
            &forcing,
            &TimeWarp::identity(),
            t,
        )
        .unwrap();
        let exact = c * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -t))
            / Complex64::new(0.0, 1.0);
        assert!((out.get([1, 0]) - exact).norm() < 1e-8);
    }

    #[test]
    fn resolution_rules() {
        let warp = TimeWarp::cubic();
        let grid = TimeGrid::resolved(0.0, 1.0, &warp, 32.0).unwrap();
        assert!(grid.step() <= 1.0 / 256.0 + 1e-15);
        assert_eq!(grid.len() % 2, 1);
        let taus = TauGrid::resolved(1.0, 10.0).unwrap();
        assert_eq!(taus.tau_max(), 80.0);
        assert!(taus.step() <= 0.5);
    }
}
