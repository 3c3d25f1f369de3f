//! Change of variables and gauge transform for variable coefficients.
//!
//! For `i∂_t u + Σ_j a_j(x_j) ∂²_{x_j} u = |u|^{p-1}u` on the square torus,
//! each axis gets the map `A_j(x) = ∫_0^x a_j^{-1/2}` with inverse `α_j`, so
//! that `α_j' = (a_j∘α_j)^{1/2}` and the reduced torus has circumference
//! `L_j = A_j(2π)`. With the gauge `Φ(y) = Σ_j -¼ ln(a_j(α_j(y_j))/a_j(0))`
//! the function `w = e^Φ u∘α` solves
//!
//! ```text
//! i∂_t w + Δ_y w = e^{-(p-1)Φ} |w|^{p-1} w + β w,    β = ΔΦ + |∇Φ|².
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    first_derivative, forward_transform, inverse_transform, lp_space_norm, second_derivative,
    FourierField, TorusGrid,
};
use crate::xsb::SpaceTimeField;

/// Number of samples used to check positivity of a coefficient.
pub const POSITIVITY_SAMPLES: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
enum CoefficientKind {
    Const(f64),
    Cos {
        a0: f64,
        a1: f64,
    },
    /// Trigonometric interpolant `Σ_k c_k e^{ikx}` over `|k| < n/2`.
    Sampled {
        coeffs: Vec<Complex64>,
        n: usize,
    },
}

/// A strictly positive `2π`-periodic coefficient `a(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFunction {
    kind: CoefficientKind,
    label: String,
}

impl CoefficientFunction {
    pub fn constant(c: f64) -> Result<Self> {
        Self::checked(CoefficientKind::Const(c), format!("const:{c}"))
    }

    /// `a0 + a1 cos x`.
    pub fn cosine(a0: f64, a1: f64) -> Result<Self> {
        Self::checked(CoefficientKind::Cos { a0, a1 }, format!("cos:{a0},{a1}"))
    }

    /// Trigonometric interpolant of `2^k` equispaced samples on `[0, 2π)`.
    pub fn sampled(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::param(
                "coefficient table",
                format!("needs 2^k >= 4 samples, got {n}"),
            ));
        }
        let grid = TorusGrid::square(1, n)?;
        let samples: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let field = forward_transform(&grid, &samples)?;
        let coeffs: Vec<Complex64> = field.coeffs().iter().map(|c| c / (2.0 * PI)).collect();
        let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let tail: f64 = (0..n)
            .filter(|&i| grid.mode_of(i)[0].unsigned_abs() as usize >= n / 4)
            .map(|i| coeffs[i].norm_sqr())
            .sum();
        if tail > 1e-10 * total {
            return Err(Error::Resolution(format!(
                "coefficient table is under-resolved: Fourier tail holds {:.2e} of the mass",
                tail / total
            )));
        }
        Self::checked(CoefficientKind::Sampled { coeffs, n }, format!("table:{n}"))
    }

    /// Parses `const:c` or `cos:a0,a1`.
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let bad = |reason: &str| Error::UnknownLabel {
            label: label.into(),
            reason: reason.into(),
        };
        if let Some(v) = label.strip_prefix("const:") {
            let c = v
                .trim()
                .parse::<f64>()
                .map_err(|_| bad("const:<value> expects a number"))?;
            return Self::constant(c);
        }
        if let Some(v) = label.strip_prefix("cos:") {
            let parts: Vec<f64> = v
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("cos:<a0>,<a1> expects two numbers"))?;
            if parts.len() != 2 {
                return Err(bad("cos:<a0>,<a1> expects two numbers"));
            }
            return Self::cosine(parts[0], parts[1]);
        }
        Err(bad("expected const:<c>, cos:<a0>,<a1> or a sampled table"))
    }

    /// Reads a plain-text table, one sample per line. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_table(text: &str) -> Result<Self> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>().map_err(|_| Error::UnknownLabel {
                    label: l.into(),
                    reason: "table lines must hold one number".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::sampled(&values)
    }

    fn checked(kind: CoefficientKind, label: String) -> Result<Self> {
        let f = CoefficientFunction { kind, label };
        let min = f.sampled_min();
        if !(min > 0.0) {
            return Err(Error::NonPositiveCoefficient { min });
        }
        Ok(f)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, CoefficientKind::Const(_))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            CoefficientKind::Const(c) => *c,
            CoefficientKind::Cos { a0, a1 } => a0 + a1 * x.cos(),
            CoefficientKind::Sampled { coeffs, n } => {
                let half = (*n / 2) as i64;
                let mut sum = coeffs[0].re;
                for k in 1..half {
                    let c = coeffs[k as usize];
                    sum += 2.0 * (c * Complex64::from_polar(1.0, k as f64 * x)).re;
                }
                sum
            }
        }
    }

    /// Minimum over [`POSITIVITY_SAMPLES`] equispaced points.
    pub fn sampled_min(&self) -> f64 {
        (0..POSITIVITY_SAMPLES)
            .map(|i| self.eval(2.0 * PI * i as f64 / POSITIVITY_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sampled_max(&self) -> f64 {
        (0..POSITIVITY_SAMPLES)
            .map(|i| self.eval(2.0 * PI * i as f64 / POSITIVITY_SAMPLES as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reduction data for one axis.
#[derive(Clone, Debug)]
pub struct AxisReduction {
    coefficient: CoefficientFunction,
    circumference: f64,
    /// `(k, c_k)` for `k ≥ 1`, Fourier coefficients of `a^{-1/2}`.
    series: Vec<(f64, Complex64)>,
    a_zero: f64,
    tol: f64,
}

impl AxisReduction {
    fn build(coefficient: &CoefficientFunction, fine: usize, tol: f64) -> Result<Self> {
        let grid = TorusGrid::square(1, fine)?;
        let samples: Vec<Complex64> = (0..fine)
            .map(|i| Complex64::new(coefficient.eval(grid.point(i)[0]).powf(-0.5), 0.0))
            .collect();
        let field = forward_transform(&grid, &samples)?;
        let mean = field.get([0, 0]).re / (2.0 * PI);
        let mut series = Vec::new();
        for k in 1..(fine / 2) as i64 {
            let c = field.get([k, 0]) / (2.0 * PI);
            if c.norm() / k as f64 > 1e-18 * mean {
                series.push((k as f64, c));
            }
        }
        Ok(AxisReduction {
            coefficient: coefficient.clone(),
            circumference: 2.0 * PI * mean,
            series,
            a_zero: coefficient.eval(0.0),
            tol,
        })
    }

    pub fn coefficient(&self) -> &CoefficientFunction {
        &self.coefficient
    }

    /// `L = A(2π) = ∫_0^{2π} a^{-1/2}`.
    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    /// `A(x) = ∫_0^x a(s)^{-1/2} ds` for any real `x`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let mut sum = self.circumference / (2.0 * PI) * x;
        for &(k, c) in &self.series {
            let e = Complex64::from_polar(1.0, k * x) - 1.0;
            sum += 2.0 * (c * e / Complex64::new(0.0, k)).re;
        }
        sum
    }

    /// `α = A^{-1}`, extended quasi-periodically: `α(y + L) = α(y) + 2π`.
    pub fn alpha(&self, y: f64) -> Result<f64> {
        let l = self.circumference;
        let wraps = (y / l).floor();
        let target = y - wraps * l;
        let (mut lo, mut hi) = (0.0f64, 2.0 * PI);
        let mut x = target * 2.0 * PI / l;
        let mut residual = f64::INFINITY;
        for _ in 0..100 {
            let f = self.cumulative(x) - target;
            residual = f.abs();
            if residual <= self.tol {
                return Ok(x + 2.0 * PI * wraps);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f * self.coefficient.eval(x).sqrt();
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        Err(Error::InversionFailed {
            tol: self.tol,
            worst: residual,
        })
    }

    /// `α'(y) = a(α(y))^{1/2}`.
    pub fn alpha_prime(&self, y: f64) -> Result<f64> {
        Ok(self.coefficient.eval(self.alpha(y)?).sqrt())
    }

    /// `φ(y) = -½ ln(α'(y)/α'(0))`.
    pub fn phi(&self, y: f64) -> Result<f64> {
        Ok(-0.25 * (self.coefficient.eval(self.alpha(y)?) / self.a_zero).ln())
    }

    /// `φ(A(x)) = -¼ ln(a(x)/a(0))`, exact on the original torus.
    pub fn phi_at_original(&self, x: f64) -> f64 {
        -0.25 * (self.coefficient.eval(x) / self.a_zero).ln()
    }
}

/// The full reduction: per-axis maps, gauge, potential and reduced grid.
#[derive(Clone, Debug)]
pub struct Reduction {
    axes: Vec<AxisReduction>,
    grid: TorusGrid,
    /// `α_j(y_m)` on the reduced lattice of each axis.
    alpha_nodes: Vec<Vec<f64>>,
    phi_axis: Vec<Vec<f64>>,
    beta_axis: Vec<Vec<f64>>,
}

/// Builds the reduction for per-axis coefficients on a reduced grid with
/// `resolution` points per axis. `tol` bounds the inversion residual of `A`.
pub fn build_reduction(
    coefficients: &[CoefficientFunction],
    resolution: usize,
    tol: f64,
) -> Result<Reduction> {
    let dim = coefficients.len();
    if !(1..=2).contains(&dim) {
        return Err(Error::param(
            "coefficients",
            format!("need one per axis (1 or 2), got {dim}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    for a in coefficients {
        let min = a.sampled_min();
        if !(min > 0.0) {
            return Err(Error::NonPositiveCoefficient { min });
        }
    }
    let fine = (1usize << 12).max(4 * resolution).next_power_of_two();
    let axes = coefficients
        .iter()
        .map(|a| AxisReduction::build(a, fine, tol))
        .collect::<Result<Vec<_>>>()?;
    let lengths: Vec<f64> = axes.iter().map(|a| a.circumference).collect();
    let grid = TorusGrid::new(&lengths, &vec![resolution; dim])?;
    let mut alpha_nodes = Vec::new();
    let mut phi_axis = Vec::new();
    let mut beta_axis = Vec::new();
    for (j, axis) in axes.iter().enumerate() {
        let line = TorusGrid::new(&[axis.circumference], &[resolution])?;
        let ys: Vec<f64> = (0..resolution)
            .map(|m| m as f64 * lengths[j] / resolution as f64)
            .collect();
        let alphas = ys
            .iter()
            .map(|&y| axis.alpha(y))
            .collect::<Result<Vec<_>>>()?;
        let phis: Vec<f64> = if axis.coefficient.is_constant() {
            vec![0.0; resolution]
        } else {
            alphas
                .iter()
                .map(|&x| -0.25 * (axis.coefficient.eval(x) / axis.a_zero).ln())
                .collect()
        };
        let field = forward_transform(
            &line,
            &phis
                .iter()
                .map(|&p| Complex64::new(p, 0.0))
                .collect::<Vec<_>>(),
        )?;
        let d1 = inverse_transform(&first_derivative(&field, 0));
        let d2 = inverse_transform(&second_derivative(&field, 0));
        let betas: Vec<f64> = d1
            .iter()
            .zip(&d2)
            .map(|(a, b)| b.re + a.re * a.re)
            .collect();
        alpha_nodes.push(alphas);
        phi_axis.push(phis);
        beta_axis.push(betas);
    }
    Ok(Reduction {
        axes,
        grid,
        alpha_nodes,
        phi_axis,
        beta_axis,
    })
}

impl Reduction {
    pub fn axes(&self) -> &[AxisReduction] {
        &self.axes
    }

    /// Grid of the reduced torus with circumferences `L_j`.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn tensor_sum(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let (i0, i1) = (i / self.grid.modes(1), i % self.grid.modes(1));
                parts[0][i0] + if self.dim() == 2 { parts[1][i1] } else { 0.0 }
            })
            .collect()
    }

    /// `Φ` on the reduced grid.
    pub fn phi(&self) -> Vec<f64> {
        self.tensor_sum(&self.phi_axis)
    }

    /// `β = ΔΦ + |∇Φ|²` on the reduced grid.
    pub fn beta(&self) -> Vec<f64> {
        self.tensor_sum(&self.beta_axis)
    }

    /// Nonlinear weight `e^{-(p-1)Φ}` on the reduced grid.
    pub fn weight(&self, power: u32) -> Vec<f64> {
        self.phi()
            .iter()
            .map(|p| (-(power as f64 - 1.0) * p).exp())
            .collect()
    }

    /// Average of `β` over the reduced torus.
    pub fn beta_mean(&self) -> f64 {
        let beta = self.beta();
        beta.iter().sum::<f64>() / beta.len() as f64
    }
}

/// Direct Fourier evaluation matrix `E[m][k] = e^{i ω_k p_m}` over the
/// non-Nyquist modes of an axis with `modes` points and circumference `length`.
fn evaluation_matrix(points: &[f64], modes: usize, length: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(points.len() * modes);
    for &p in points {
        for i in 0..modes {
            let k = if i < modes / 2 {
                i as i64
            } else {
                i as i64 - modes as i64
            };
            if k == -(modes as i64 / 2) {
                out.push(Complex64::new(0.0, 0.0));
            } else {
                out.push(Complex64::from_polar(1.0, 2.0 * PI * k as f64 * p / length));
            }
        }
    }
    out
}

/// Evaluates `field` at the tensor product of per-axis point lists.
fn evaluate_separable(field: &FourierField, points: &[Vec<f64>]) -> Vec<Complex64> {
    let grid = field.grid();
    let m0 = grid.modes(0);
    let e0 = evaluation_matrix(&points[0], m0, grid.length(0));
    let scale = 1.0 / grid.volume();
    if grid.dim() == 1 {
        return (0..points[0].len())
            .map(|p| {
                let row = &e0[p * m0..(p + 1) * m0];
                row.iter()
                    .zip(field.coeffs())
                    .map(|(e, c)| e * c)
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
    }
    let m1 = grid.modes(1);
    let e1 = evaluation_matrix(&points[1], m1, grid.length(1));
    let (n0, n1) = (points[0].len(), points[1].len());
    // Stage one: contract axis 0 for every k1.
    let mut partial = vec![Complex64::new(0.0, 0.0); n0 * m1];
    for p0 in 0..n0 {
        let row = &e0[p0 * m0..(p0 + 1) * m0];
        for (i0, e) in row.iter().enumerate() {
            if *e == Complex64::new(0.0, 0.0) {
                continue;
            }
            let coeffs = &field.coeffs()[i0 * m1..(i0 + 1) * m1];
            let target = &mut partial[p0 * m1..(p0 + 1) * m1];
            for (t, c) in target.iter_mut().zip(coeffs) {
                *t += e * c;
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n0 * n1];
    for p0 in 0..n0 {
        let src = &partial[p0 * m1..(p0 + 1) * m1];
        for p1 in 0..n1 {
            let row = &e1[p1 * m1..(p1 + 1) * m1];
            out[p0 * n1 + p1] = row.iter().zip(src).map(|(e, c)| e * c).sum::<Complex64>() * scale;
        }
    }
    out
}

/// Rejects fields whose outer spectral band carries more than a `1e-9`
/// amplitude fraction, the signature of an under-resolved transport.
fn check_resolved(field: &FourierField, context: &str) -> Result<()> {
    let grid = field.grid();
    let total: f64 = field.coeffs().iter().map(|c| c.norm_sqr()).sum();
    let outer: f64 = field
        .iter()
        .filter(|(k, _)| {
            (0..grid.dim()).any(|j| k[j].unsigned_abs() as usize > grid.modes(j) * 3 / 8)
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    if total > 0.0 && outer > 1e-18 * total {
        return Err(Error::Resolution(format!(
            "{context}: grid with {:?} points leaves {:.2e} of the amplitude in the outer band",
            grid.mode_counts(),
            (outer / total).sqrt()
        )));
    }
    Ok(())
}

fn check_original(field: &FourierField, red: &Reduction) -> Result<()> {
    let grid = field.grid();
    if grid.dim() != red.dim() {
        return Err(Error::param(
            "grid",
            "field and reduction dimensions differ",
        ));
    }
    if grid.lengths().iter().any(|&l| (l - 2.0 * PI).abs() > 1e-12) {
        return Err(Error::param(
            "grid",
            "original fields must live on the square torus",
        ));
    }
    Ok(())
}

/// `u∘α` on the reduced grid, without the gauge factor.
pub fn pullback(u0: &FourierField, red: &Reduction) -> Result<FourierField> {
    check_original(u0, red)?;
    let values = evaluate_separable(u0, &red.alpha_nodes);
    forward_transform(red.grid(), &values)
}

/// `w0(y) = e^{Φ(y)} u0(α(y))`.
pub fn forward_transport(u0: &FourierField, red: &Reduction) -> Result<FourierField> {
    check_original(u0, red)?;
    let values = evaluate_separable(u0, &red.alpha_nodes);
    let phi = red.phi();
    let samples: Vec<Complex64> = values.iter().zip(&phi).map(|(v, p)| v * p.exp()).collect();
    let out = forward_transform(red.grid(), &samples)?;
    check_resolved(&out, "forward transport")?;
    Ok(out)
}

/// `u(x) = e^{-Φ(A(x))} w(A(x))` on the square-torus grid `target`.
pub fn backward_transport(
    w: &FourierField,
    red: &Reduction,
    target: &TorusGrid,
) -> Result<FourierField> {
    if w.grid() != red.grid() {
        return Err(Error::param(
            "grid",
            "field does not live on the reduced grid",
        ));
    }
    let probe = FourierField::zeros(*target);
    check_original(&probe, red)?;
    let mut points = Vec::new();
    let mut gauge = Vec::new();
    for (j, axis) in red.axes.iter().enumerate() {
        let xs: Vec<f64> = (0..target.modes(j))
            .map(|m| m as f64 * 2.0 * PI / target.modes(j) as f64)
            .collect();
        points.push(xs.iter().map(|&x| axis.cumulative(x)).collect::<Vec<_>>());
        gauge.push(
            xs.iter()
                .map(|&x| (-axis.phi_at_original(x)).exp())
                .collect::<Vec<_>>(),
        );
    }
    let values = evaluate_separable(w, &points);
    let m1 = target.modes(1);
    let samples: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let g = gauge[0][i / m1]
                * if red.dim() == 2 {
                    gauge[1][i % m1]
                } else {
                    1.0
                };
            v * g
        })
        .collect();
    let out = forward_transform(target, &samples)?;
    check_resolved(&out, "backward transport")?;
    Ok(out)
}

/// Residual of `i∂_t u + Σ_j a_j ∂²_{x_j} u - coupling·|u|^{p-1}u` on the
/// interior nodes (fourth-order centred differences in time), maximized
/// over time of the spatial `L²` norm.
pub fn residual_original(
    u: &SpaceTimeField,
    coefficients: &[CoefficientFunction],
    power: u32,
    coupling: f64,
) -> Result<f64> {
    let n = u.times().len();
    if n < 5 {
        return Err(Error::param(
            "n_t",
            format!("residual needs at least 5 time nodes, got {n}"),
        ));
    }
    let grid = *u.grid();
    if coefficients.len() != grid.dim() {
        return Err(Error::SizeMismatch {
            expected: grid.dim(),
            actual: coefficients.len(),
        });
    }
    let a_samples: Vec<Vec<f64>> = coefficients
        .iter()
        .enumerate()
        .map(|(j, a)| {
            (0..grid.modes(j))
                .map(|m| a.eval(m as f64 * grid.length(j) / grid.modes(j) as f64))
                .collect()
        })
        .collect();
    let h = u.times().step();
    let m1 = grid.modes(1);
    let mut worst: f64 = 0.0;
    for j in 2..n - 2 {
        let s = |i: usize| u.slice(i).coeffs();
        let dt: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                (-s(j + 2)[i] + 8.0 * s(j + 1)[i] - 8.0 * s(j - 1)[i] + s(j - 2)[i]) / (12.0 * h)
            })
            .collect();
        let dt = inverse_transform(&FourierField::from_coeffs(grid, dt)?);
        let values = inverse_transform(u.slice(j));
        let mut residual: Vec<Complex64> = dt
            .iter()
            .zip(&values)
            .map(|(d, v)| {
                Complex64::new(0.0, 1.0) * d - coupling * v * v.norm().powi(power as i32 - 1)
            })
            .collect();
        for axis in 0..grid.dim() {
            let d2 = inverse_transform(&second_derivative(u.slice(j), axis));
            for (i, (r, d)) in residual.iter_mut().zip(&d2).enumerate() {
                let idx = if axis == 0 { i / m1 } else { i % m1 };
                *r += a_samples[axis][idx] * d;
            }
        }
        worst = worst.max(lp_space_norm(&residual, 2.0, &grid)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_parsing_and_positivity() {
        assert_eq!(
            CoefficientFunction::parse("const:4").unwrap().eval(1.0),
            4.0
        );
        assert_relative_eq!(
            CoefficientFunction::parse("cos:2,1").unwrap().eval(0.0),
            3.0
        );
        assert!(matches!(
            CoefficientFunction::parse("cos:1,2"),
            Err(Error::NonPositiveCoefficient { .. })
        ));
        assert!(CoefficientFunction::constant(-1.0).is_err());
        assert!(CoefficientFunction::parse("poly:1").is_err());
    }

    #[test]
    fn sampled_table_matches_closed_form() {
        let text: String = (0..64)
            .map(|i| format!("{}\n", 2.0 + (2.0 * PI * i as f64 / 64.0).cos()))
            .collect();
        let a = CoefficientFunction::from_table(&text).unwrap();
        for x in [0.1, 1.3, 4.0] {
            assert_relative_eq!(a.eval(x), 2.0 + f64::cos(x), epsilon = 1e-12);
        }
        assert!(CoefficientFunction::sampled(&[1.0; 6]).is_err());
        let rough: Vec<f64> = (0..16)
            .map(|i| if i % 2 == 0 { 1.0 } else { 2.0 })
            .collect();
        assert!(CoefficientFunction::sampled(&rough).is_err());
    }

    #[test]
    fn unit_coefficient_is_trivial() {
        let red = build_reduction(
            &vec![CoefficientFunction::constant(1.0).unwrap(); 2],
            16,
            1e-13,
        )
        .unwrap();
        assert_relative_eq!(red.grid().length(0), 2.0 * PI, epsilon = 1e-12);
        assert!(red.phi().iter().all(|p| p.abs() < 1e-12));
        assert!(red.beta().iter().all(|b| b.abs() < 1e-12));
        for m in 0..16 {
            let y = m as f64 * 2.0 * PI / 16.0;
            assert!((red.axes()[0].alpha(y).unwrap() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_four_halves_the_torus() {
        let red =
            build_reduction(&[CoefficientFunction::constant(4.0).unwrap()], 16, 1e-13).unwrap();
        let axis = &red.axes()[0];
        assert_relative_eq!(axis.circumference(), PI, epsilon = 1e-12);
        for y in [0.1, 0.7, 2.0, 3.0] {
            assert!((axis.alpha(y).unwrap() - 2.0 * y).abs() < 1e-12);
            assert!((axis.alpha_prime(y).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!(red
            .phi()
            .iter()
            .chain(red.beta().iter())
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scaled_wave_transports_to_first_mode() {
        let red =
            build_reduction(&[CoefficientFunction::constant(4.0).unwrap()], 16, 1e-13).unwrap();
        let grid = TorusGrid::square(1, 16).unwrap();
        let u0 = FourierField::plane_wave(grid, [1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let w0 = forward_transport(&u0, &red).unwrap();
        for (k, c) in w0.iter() {
            let expected = if k == [1, 0] { PI } else { 0.0 };
            assert!(
                (c - Complex64::new(expected, 0.0)).norm() < 1e-12,
                "{k:?} {c}"
            );
        }
        let back = backward_transport(&w0, &red, &grid).unwrap();
        assert!(back.difference(&u0).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn unit_coefficient_transport_is_identity() {
        let red = build_reduction(
            &vec![CoefficientFunction::constant(1.0).unwrap(); 2],
            16,
            1e-13,
        )
        .unwrap();
        let grid = TorusGrid::square(2, 16).unwrap();
        let u0 = FourierField::from_modes(grid, |k| {
            if k[0].abs() <= 3 && k[1].abs() <= 3 {
                Complex64::new(
                    1.0 / (1 + k[0].abs() + k[1].abs()) as f64,
                    k[0] as f64 * 0.1,
                )
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let w0 = forward_transport(&u0, &red).unwrap();
        assert!(
            w0.difference(&u0.resample(*red.grid()).unwrap())
                .unwrap()
                .l2_norm()
                < 1e-12
        );
    }

    #[test]
    fn residual_needs_five_nodes() {
        let grid = TorusGrid::square(1, 8).unwrap();
        let times = crate::warp::TimeGrid::new(0.0, 1.0, 3).unwrap();
        let u = SpaceTimeField::new(grid, times, vec![FourierField::zeros(grid); 3]).unwrap();
        let a = [CoefficientFunction::constant(1.0).unwrap()];
        assert!(residual_original(&u, &a, 3, 1.0).is_err());
        let times = crate::warp::TimeGrid::new(0.0, 1.0, 9).unwrap();
        let u = SpaceTimeField::new(grid, times, vec![FourierField::zeros(grid); 9]).unwrap();
        assert_eq!(residual_original(&u, &a, 3, 1.0).unwrap(), 0.0);
    }
}
