//! Torus grids, discrete Fourier analysis and spatial norms.
//!
//! A [`TorusGrid`] describes a one- or two-dimensional torus with per-axis
//! circumference `L_j` and `M_j` collocation points. A [`FourierField`] stores
//! the modal coefficients of a function on that grid. Coefficients follow the
//! continuous convention
//!
//! ```text
//! û(k) = ∫ e^{-i k·x} u(x) dx,      u(x) = (1/∏L_j) Σ_k e^{i k·x} û(k),
//! ```
//!
//! with dual frequency `2πk_j/L_j`, so that the constant function 1 has
//! `û(0) = ∏L_j`. Frequencies live in the symmetric range `[-M_j/2, M_j/2)`
//! and are stored internally in FFT order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Integer frequency index. The second entry is zero on one-dimensional grids.
pub type Mode = [i64; 2];

/// Relative threshold below which a coefficient counts as inactive.
pub const ACTIVE_THRESHOLD: f64 = 1e-13;

/// Uniform collocation grid on a flat torus of dimension one or two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusGrid {
    dim: usize,
    lengths: [f64; 2],
    modes: [usize; 2],
}

impl TorusGrid {
    /// Builds a grid from per-axis circumferences and point counts.
    pub fn new(lengths: &[f64], modes: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
        }
        if modes.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: modes.len(),
            });
        }
        for (&l, &m) in lengths.iter().zip(modes) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::param(
                    "circumference",
                    format!("must be positive, got {l}"),
                ));
            }
            if m < 4 || m % 2 != 0 {
                return Err(Error::param(
                    "modes",
                    format!("must be even and at least 4, got {m}"),
                ));
            }
        }
        let mut grid = TorusGrid {
            dim,
            lengths: [2.0 * PI; 2],
            modes: [1; 2],
        };
        grid.lengths[..dim].copy_from_slice(lengths);
        grid.modes[..dim].copy_from_slice(modes);
        Ok(grid)
    }

    /// The square torus `(ℝ/2πℤ)^dim` with `m` points per axis.
    pub fn square(dim: usize, m: usize) -> Result<Self> {
        Self::new(&vec![2.0 * PI; dim], &vec![m; dim])
    }

    /// Square torus sized by the anti-aliasing contract for data with modes
    /// up to `n` and products of order `q`.
    pub fn dealiased(dim: usize, n: usize, q: usize) -> Result<Self> {
        Self::square(dim, alias_free_size(n, q))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn modes(&self, axis: usize) -> usize {
        self.modes[axis]
    }

    pub fn mode_counts(&self) -> &[usize] {
        &self.modes[..self.dim]
    }

    /// Total number of collocation points.
    pub fn len(&self) -> usize {
        self.modes[0] * self.modes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `∏ L_j/M_j` attached to each collocation point.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim)
            .map(|j| self.lengths[j] / self.modes[j] as f64)
            .product()
    }

    /// Torus volume `∏ L_j`.
    pub fn volume(&self) -> f64 {
        self.lengths[..self.dim].iter().product()
    }

    /// Collocation point for a flat storage index.
    pub fn point(&self, index: usize) -> [f64; 2] {
        let (i0, i1) = (index / self.modes[1], index % self.modes[1]);
        let x0 = i0 as f64 * self.lengths[0] / self.modes[0] as f64;
        let x1 = if self.dim == 2 {
            i1 as f64 * self.lengths[1] / self.modes[1] as f64
        } else {
            0.0
        };
        [x0, x1]
    }

    /// Frequency carried by a flat storage index.
    pub fn mode_of(&self, index: usize) -> Mode {
        let (i0, i1) = (index / self.modes[1], index % self.modes[1]);
        let k0 = signed_index(i0, self.modes[0]);
        let k1 = if self.dim == 2 {
            signed_index(i1, self.modes[1])
        } else {
            0
        };
        [k0, k1]
    }

    /// Storage index of a frequency, or `None` when it lies outside the grid.
    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        let i0 = storage_index(mode[0], self.modes[0])?;
        let i1 = if self.dim == 2 {
            storage_index(mode[1], self.modes[1])?
        } else if mode[1] == 0 {
            0
        } else {
            return None;
        };
        Some(i0 * self.modes[1] + i1)
    }

    /// `|k|_L^2 = Σ_j (2πk_j/L_j)^2` without range checks.
    pub fn frequency_sq(&self, mode: Mode) -> f64 {
        (0..self.dim)
            .map(|j| {
                let w = 2.0 * PI * mode[j] as f64 / self.lengths[j];
                w * w
            })
            .sum()
    }

    /// True when a frequency sits on the Nyquist line of some axis.
    pub fn is_nyquist(&self, mode: Mode) -> bool {
        (0..self.dim).any(|j| mode[j] == -(self.modes[j] as i64 / 2))
    }

    /// Largest `|k|_L^2` representable on the grid.
    pub fn max_frequency_sq(&self) -> f64 {
        let corner = [self.modes[0] as i64 / 2, self.modes[1] as i64 / 2];
        self.frequency_sq(corner)
    }

    /// True when every axis satisfies `M_j ≥ (q+1)n + 1`.
    pub fn resolves(&self, n: usize, q: usize) -> bool {
        self.mode_counts().iter().all(|&m| m > (q + 1) * n)
    }

    /// Same grid with a different number of points per axis.
    pub fn with_modes(&self, modes: &[usize]) -> Result<Self> {
        Self::new(self.lengths(), modes)
    }
}

fn signed_index(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

fn storage_index(k: i64, m: usize) -> Option<usize> {
    let half = (m / 2) as i64;
    if k < -half || k >= half {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + m as i64) as usize)
    }
}

/// Smallest power of two `≥ (q+1)n + 2`, the grid size that makes products
/// of order `q` of fields with modes up to `n` alias free.
pub fn alias_free_size(n: usize, q: usize) -> usize {
    ((q + 1) * n + 2).next_power_of_two().max(4)
}

/// Modal coefficients of a function on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(grid: TorusGrid) -> Self {
        FourierField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Wraps raw coefficients given in storage order.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(FourierField { grid, coeffs })
    }

    /// Builds a field from a rule `mode -> û(mode)`. Nyquist modes are zeroed.
    pub fn from_modes(grid: TorusGrid, mut rule: impl FnMut(Mode) -> Complex64) -> Self {
        let coeffs = (0..grid.len())
            .map(|i| {
                let mode = grid.mode_of(i);
                if grid.is_nyquist(mode) {
                    Complex64::new(0.0, 0.0)
                } else {
                    rule(mode)
                }
            })
            .collect();
        FourierField { grid, coeffs }
    }

    /// The plane wave `amplitude · e^{ik·x}`.
    pub fn plane_wave(grid: TorusGrid, mode: Mode, amplitude: Complex64) -> Result<Self> {
        let mut field = Self::zeros(grid);
        field.set(mode, amplitude * grid.volume())?;
        Ok(field)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `mode`, zero outside the grid range.
    pub fn get(&self, mode: Mode) -> Complex64 {
        self.grid
            .index_of(mode)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, mode: Mode, value: Complex64) -> Result<()> {
        let index = self
            .grid
            .index_of(mode)
            .ok_or_else(|| out_of_range(mode, &self.grid))?;
        self.coeffs[index] = value;
        Ok(())
    }

    /// Iterates over `(mode, coefficient)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.grid.mode_of(i), c))
    }

    /// Multiplies every coefficient by `multiplier(mode)`.
    pub fn apply_multiplier(&mut self, mut multiplier: impl FnMut(Mode) -> Complex64) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c *= multiplier(self.grid.mode_of(i));
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += factor · other`.
    pub fn axpy(&mut self, factor: Complex64, other: &FourierField) -> Result<()> {
        check_same_grid(&self.grid, &other.grid)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
        Ok(())
    }

    /// `self - other`.
    pub fn difference(&self, other: &FourierField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// `L²` norm computed from the coefficients.
    pub fn l2_norm(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    /// `L²` inner product `∫ u conj(v) dx`.
    pub fn inner(&self, other: &FourierField) -> Result<Complex64> {
        check_same_grid(&self.grid, &other.grid)?;
        let sum: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(sum / self.grid.volume())
    }

    /// Largest `|k|_L²` over modes whose magnitude exceeds
    /// [`ACTIVE_THRESHOLD`] times the largest coefficient.
    pub fn active_frequency_sq(&self) -> f64 {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.iter()
            .filter(|(_, c)| c.norm() > ACTIVE_THRESHOLD * peak)
            .map(|(k, _)| self.grid.frequency_sq(k))
            .fold(0.0, f64::max)
    }

    /// Largest `max_j |k_j|` over active modes.
    pub fn active_radius(&self) -> usize {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0;
        }
        self.iter()
            .filter(|(_, c)| c.norm() > ACTIVE_THRESHOLD * peak)
            .map(|(k, _)| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Copies the overlapping frequencies onto another grid of the same
    /// circumferences (zero padding or truncation).
    pub fn resample(&self, target: TorusGrid) -> Result<Self> {
        if target.dim() != self.grid.dim() || target.lengths() != self.grid.lengths() {
            return Err(Error::param(
                "grid",
                "resampling needs equal circumferences",
            ));
        }
        let mut out = FourierField::zeros(target);
        for (i, &c) in self.coeffs.iter().enumerate() {
            let mode = self.grid.mode_of(i);
            if self.grid.is_nyquist(mode) {
                continue;
            }
            if let Some(j) = target.index_of(mode) {
                if !target.is_nyquist(mode) {
                    out.coeffs[j] = c;
                }
            }
        }
        Ok(out)
    }

    /// Zeroes the Nyquist line of every axis.
    pub fn zero_nyquist(&mut self) {
        for i in 0..self.coeffs.len() {
            if self.grid.is_nyquist(self.grid.mode_of(i)) {
                self.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn out_of_range(mode: Mode, grid: &TorusGrid) -> Error {
    let range = grid
        .mode_counts()
        .iter()
        .map(|&m| format!("[{}, {})", -(m as i64) / 2, m / 2))
        .collect::<Vec<_>>()
        .join(" x ");
    Error::ModeOutOfRange { mode, range }
}

pub(crate) fn check_same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a != b {
        return Err(Error::param("grid", "fields live on different grids"));
    }
    Ok(())
}

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static COLUMNS: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Unnormalized multidimensional DFT in place (`inverse` flips the sign).
fn dft_in_place(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let (m0, m1) = (grid.modes[0], grid.modes[1]);
    if grid.dim == 1 {
        plan(m0, inverse).process(data);
        return;
    }
    plan(m1, inverse).process(data);
    COLUMNS.with(|cell| {
        let mut columns = cell.borrow_mut();
        columns.resize(data.len(), Complex64::new(0.0, 0.0));
        for i0 in 0..m0 {
            for i1 in 0..m1 {
                columns[i1 * m0 + i0] = data[i0 * m1 + i1];
            }
        }
        plan(m0, inverse).process(&mut columns[..data.len()]);
        for i1 in 0..m1 {
            for i0 in 0..m0 {
                data[i0 * m1 + i1] = columns[i1 * m0 + i0];
            }
        }
    });
}

/// Collocation samples to modal coefficients,
/// `û(k) = ∏(L_j/M_j) Σ_m e^{-2πi k·m/M} u_m`.
pub fn forward_transform(grid: &TorusGrid, samples: &[Complex64]) -> Result<FourierField> {
    if samples.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    let mut coeffs = samples.to_vec();
    dft_in_place(grid, &mut coeffs, false);
    let w = grid.cell_volume();
    for c in &mut coeffs {
        *c *= w;
    }
    Ok(FourierField {
        grid: *grid,
        coeffs,
    })
}

/// Modal coefficients to collocation samples,
/// `u(x_m) = (1/∏L_j) Σ_k e^{i k·x_m} û(k)`.
pub fn inverse_transform(field: &FourierField) -> Vec<Complex64> {
    let mut samples = field.coeffs.clone();
    inverse_in_place(&field.grid, &mut samples);
    samples
}

/// [`inverse_transform`] on a buffer already holding the coefficients.
pub(crate) fn inverse_in_place(grid: &TorusGrid, data: &mut [Complex64]) {
    dft_in_place(grid, data, true);
    let w = 1.0 / grid.volume();
    for s in data {
        *s *= w;
    }
}

/// Symbol of the Laplacian, `-Σ_j (2πk_j/L_j)²`.
pub fn laplacian_symbol(mode: Mode, grid: &TorusGrid) -> Result<f64> {
    grid.index_of(mode)
        .ok_or_else(|| out_of_range(mode, grid))?;
    Ok(-grid.frequency_sq(mode))
}

/// Sobolev norm `(Σ_k (1+|k|_L)^{2s} |û(k)|² / ∏L_j)^{1/2}`.
///
/// At `s = 0` this is the `L²` norm of the sampled function.
pub fn sobolev_norm(field: &FourierField, s: f64) -> f64 {
    let grid = field.grid;
    let sum: f64 = field
        .iter()
        .map(|(k, c)| (1.0 + grid.frequency_sq(k).sqrt()).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (sum / grid.volume()).sqrt()
}

/// Spatial Lebesgue norm `(Σ_m |u(x_m)|^p ∏(L_j/M_j))^{1/p}`.
pub fn lp_space_norm(samples: &[Complex64], p: f64, grid: &TorusGrid) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param(
            "p",
            format!("Lebesgue exponent must be at least 1, got {p}"),
        ));
    }
    if samples.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    Ok(lp_power_sum(samples, p, grid).powf(1.0 / p))
}

/// `Σ_m |u(x_m)|^p ∏(L_j/M_j)`, the unrooted spatial integral.
pub(crate) fn lp_power_sum(samples: &[Complex64], p: f64, grid: &TorusGrid) -> f64 {
    let sum: f64 = if p == 2.0 {
        samples.iter().map(|u| u.norm_sqr()).sum()
    } else if p == 4.0 {
        samples.iter().map(|u| u.norm_sqr() * u.norm_sqr()).sum()
    } else {
        samples.iter().map(|u| u.norm().powf(p)).sum()
    };
    sum * grid.cell_volume()
}

/// Frequency window used by [`project`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrequencyBox {
    /// Ball `|k| ≤ N` in integer frequency units.
    Ball(u64),
    /// Box `|k_j| ≤ bounds[j]` in integer frequency units.
    Box([u64; 2]),
}

impl FrequencyBox {
    pub fn contains(&self, mode: Mode) -> bool {
        match *self {
            FrequencyBox::Ball(n) => {
                let r2 = (mode[0] * mode[0] + mode[1] * mode[1]) as u64;
                r2 <= n * n
            }
            FrequencyBox::Box(b) => {
                mode[0].unsigned_abs() <= b[0] && mode[1].unsigned_abs() <= b[1]
            }
        }
    }
}

/// Zeroes every coefficient outside `window`.
pub fn project(field: &FourierField, window: FrequencyBox) -> FourierField {
    let mut out = field.clone();
    out.apply_multiplier(|k| {
        if window.contains(k) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    out
}

/// Spectral second derivative along one axis. Nyquist modes are dropped.
pub fn second_derivative(field: &FourierField, axis: usize) -> FourierField {
    let grid = field.grid;
    let mut out = field.clone();
    out.apply_multiplier(|k| {
        if grid.is_nyquist(k) {
            return Complex64::new(0.0, 0.0);
        }
        let w = 2.0 * PI * k[axis] as f64 / grid.length(axis);
        Complex64::new(-w * w, 0.0)
    });
    out
}

/// Spectral first derivative along one axis. Nyquist modes are dropped.
pub fn first_derivative(field: &FourierField, axis: usize) -> FourierField {
    let grid = field.grid;
    let mut out = field.clone();
    out.apply_multiplier(|k| {
        if grid.is_nyquist(k) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, 2.0 * PI * k[axis] as f64 / grid.length(axis))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_maps_to_volume() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let field = forward_transform(&grid, &vec![c(1.0); grid.len()]).unwrap();
        for (k, v) in field.iter() {
            let expected = if k == [0, 0] { 4.0 * PI * PI } else { 0.0 };
            assert!((v - c(expected)).norm() < 1e-12, "{k:?} {v}");
        }
        let back = inverse_transform(&field);
        assert!(back.iter().all(|u| (u - c(1.0)).norm() < 1e-12));
    }

    #[test]
    fn single_mode_samples() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let samples: Vec<_> = (0..grid.len())
            .map(|i| Complex64::from_polar(1.0, grid.point(i)[0]))
            .collect();
        let field = forward_transform(&grid, &samples).unwrap();
        for (k, v) in field.iter() {
            let expected = if k == [1, 0] { 4.0 * PI * PI } else { 0.0 };
            assert!((v - c(expected)).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_mode_inverse() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let mut field = FourierField::zeros(grid);
        field.set([1, 1], c(4.0 * PI * PI)).unwrap();
        let samples = inverse_transform(&field);
        for (i, u) in samples.iter().enumerate() {
            let x = grid.point(i);
            assert!((u - Complex64::from_polar(1.0, x[0] + x[1])).norm() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let grid = TorusGrid::square(1, 8).unwrap();
        assert!(matches!(
            forward_transform(&grid, &[c(1.0); 7]),
            Err(Error::SizeMismatch {
                expected: 8,
                actual: 7
            })
        ));
    }

    #[test]
    fn laplacian_examples() {
        let g2 = TorusGrid::square(2, 8).unwrap();
        assert_eq!(laplacian_symbol([1, 0], &g2).unwrap(), -1.0);
        assert_relative_eq!(
            laplacian_symbol([2, 1], &g2).unwrap(),
            -5.0,
            epsilon = 1e-14
        );
        let g1 = TorusGrid::new(&[PI], &[8]).unwrap();
        assert_relative_eq!(
            laplacian_symbol([1, 0], &g1).unwrap(),
            -4.0,
            epsilon = 1e-14
        );
        assert!(laplacian_symbol([4, 0], &g1).is_err());
        assert!(laplacian_symbol([-4, 0], &g1).is_ok());
    }

    #[test]
    fn sobolev_single_mode() {
        let grid = TorusGrid::square(2, 16).unwrap();
        let field = FourierField::plane_wave(grid, [3, 4], c(1.0)).unwrap();
        let mass = field.l2_norm();
        assert_relative_eq!(mass, 2.0 * PI, epsilon = 1e-12);
        let unit = field.scaled(c(1.0 / mass));
        assert_relative_eq!(sobolev_norm(&unit, 1.0), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn lp_examples() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let ones = vec![c(1.0); grid.len()];
        assert_relative_eq!(
            lp_space_norm(&ones, 4.0, &grid).unwrap(),
            (4.0 * PI * PI).powf(0.25),
            epsilon = 1e-12
        );
        let wave: Vec<_> = (0..grid.len())
            .map(|i| Complex64::from_polar(1.0, grid.point(i)[0]))
            .collect();
        for p in [1.0, 3.0, 6.5] {
            assert_relative_eq!(
                lp_space_norm(&wave, p, &grid).unwrap(),
                (4.0 * PI * PI).powf(1.0 / p),
                max_relative = 1e-12
            );
        }
        let g1 = TorusGrid::square(1, 8).unwrap();
        let u: Vec<_> = (0..8)
            .map(|i| c(1.0) + Complex64::from_polar(1.0, g1.point(i)[0]))
            .collect();
        assert_relative_eq!(
            lp_space_norm(&u, 2.0, &g1).unwrap(),
            (2.0 * PI * 2.0).sqrt(),
            epsilon = 1e-12
        );
        assert!(lp_space_norm(&u, 0.5, &g1).is_err());
    }

    #[test]
    fn projection_examples() {
        let grid = TorusGrid::square(2, 8).unwrap();
        let field = FourierField::from_modes(grid, |k| c(1.0 + (k[0] * 3 + k[1]) as f64));
        let mean_only = project(&field, FrequencyBox::Ball(0));
        for (k, v) in mean_only.iter() {
            if k != [0, 0] {
                assert_eq!(v, c(0.0));
            }
        }
        assert_eq!(mean_only.get([0, 0]), field.get([0, 0]));
        assert_eq!(project(&field, FrequencyBox::Ball(6)), field);
    }

    #[test]
    fn dealiased_sizes() {
        assert_eq!(alias_free_size(8, 4), 64);
        assert_eq!(alias_free_size(4, 4), 32);
        assert_eq!(alias_free_size(1, 5), 8);
        assert!(TorusGrid::dealiased(2, 8, 4).unwrap().resolves(8, 4));
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(&[1.0], &[6]).is_ok());
        assert!(TorusGrid::new(&[1.0], &[5]).is_err());
        assert!(TorusGrid::new(&[1.0], &[2]).is_err());
        assert!(TorusGrid::new(&[-1.0], &[8]).is_err());
        assert!(TorusGrid::new(&[1.0, 1.0, 1.0], &[8, 8, 8]).is_err());
    }

    #[test]
    fn derivatives_of_a_wave() {
        let grid = TorusGrid::new(&[PI, 2.0 * PI], &[16, 16]).unwrap();
        let field = FourierField::plane_wave(grid, [3, -2], c(1.0)).unwrap();
        let d2 = second_derivative(&field, 0);
        assert_relative_eq!(
            d2.get([3, -2]).re,
            -36.0 * field.get([3, -2]).re,
            max_relative = 1e-14
        );
        let d1 = first_derivative(&field, 1);
        assert_relative_eq!(
            d1.get([3, -2]).im,
            -2.0 * field.get([3, -2]).re,
            max_relative = 1e-14
        );
    }
}
