//! Uniform-lattice quadrature and interpolation rules.

use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Composite Simpson weights for `n` nodes (odd) with spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n >= 3 && n % 2 == 1);
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Weights over `intervals` consecutive intervals of width `h`.
///
/// Even counts use composite Simpson. Odd counts of at least three finish
/// with the 3/8 rule on the last three intervals. A single interval falls
/// back to the trapezoid rule.
pub fn composite_weights(intervals: usize, h: f64) -> Vec<f64> {
    match intervals {
        0 => vec![0.0],
        1 => vec![h / 2.0, h / 2.0],
        m if m % 2 == 0 => simpson_weights(m + 1, h),
        m => {
            let mut w = if m > 3 {
                simpson_weights(m - 2, h)
            } else {
                vec![0.0]
            };
            w.extend_from_slice(&[0.0; 3]);
            let tail = [3.0, 9.0, 9.0, 3.0].map(|c| c * h / 8.0);
            let start = m - 3;
            for (i, t) in tail.iter().enumerate() {
                w[start + i] += t;
            }
            w
        }
    }
}

/// Running integrals `∫_{t_origin}^{t_j} f` on a uniform lattice.
///
/// Even offsets accumulate Simpson panels. Odd offsets add one interval
/// integrated by the cubic through the four nearest nodes, so every entry
/// is fourth-order accurate.
pub fn cumulative<T>(values: &[T], origin: usize, h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    let n = values.len();
    let mut out = vec![T::default(); n];
    for direction in [1i64, -1] {
        let sign = direction as f64;
        let mut even = T::default();
        let mut d = 1i64;
        loop {
            let j = origin as i64 + direction * d;
            if j < 0 || j >= n as i64 {
                break;
            }
            let prev = origin as i64 + direction * (d - 1);
            let step = single_interval(values, prev as usize, j as usize, h) * sign;
            if d % 2 == 1 {
                out[j as usize] = even + step;
            } else {
                let mid = values[prev as usize];
                let a = values[(origin as i64 + direction * (d - 2)) as usize];
                let b = values[j as usize];
                even = even + (a + mid * 4.0 + b) * (sign * h / 3.0);
                out[j as usize] = even;
            }
            d += 1;
        }
    }
    out
}

/// `∫_{t_a}^{t_b} f` over one interval (`b = a ± 1`), oriented from `a` to `b`
/// up to the sign applied by the caller, using a four-node cubic.
fn single_interval<T>(values: &[T], a: usize, b: usize, h: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let (lo, hi) = (a.min(b), a.max(b));
    let n = values.len();
    if n < 4 {
        return (values[lo] + values[hi]) * (h / 2.0);
    }
    if lo >= 1 && hi + 1 < n {
        let c = h / 24.0;
        values[lo - 1] * (-c)
            + values[lo] * (13.0 * c)
            + values[hi] * (13.0 * c)
            + values[hi + 1] * (-c)
    } else if lo == 0 {
        let c = h / 24.0;
        values[0] * (9.0 * c) + values[1] * (19.0 * c) + values[2] * (-5.0 * c) + values[3] * c
    } else {
        let c = h / 24.0;
        values[hi - 3] * c
            + values[hi - 2] * (-5.0 * c)
            + values[hi - 1] * (19.0 * c)
            + values[hi] * (9.0 * c)
    }
}

/// Stencil width of the barycentric interpolant (degree 8).
pub const INTERPOLATION_POINTS: usize = 9;

/// Degree-8 barycentric interpolation of samples on the uniform lattice
/// `t0 + i h`, using the nine nodes nearest to `t`.
pub fn interpolate_uniform(t0: f64, h: f64, values: &[Complex64], t: f64) -> Complex64 {
    let n = values.len();
    let width = INTERPOLATION_POINTS.min(n);
    let x = (t - t0) / h;
    let centre = x.round() as i64;
    let start = (centre - (width as i64) / 2).clamp(0, (n - width) as i64) as usize;
    let local = x - start as f64;
    let mut binom = 1.0;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..width {
        let diff = local - j as f64;
        if diff.abs() < 1e-14 {
            return values[start + j];
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * binom / diff;
        num += values[start + j] * w;
        den += w;
        binom = binom * (width - 1 - j) as f64 / (j + 1) as f64;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_integrates_cubics() {
        let n = 11;
        let h = 0.1;
        let w = simpson_weights(n, h);
        let s: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(3)).sum();
        assert_relative_eq!(s, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn composite_handles_odd_counts() {
        for m in [1usize, 2, 3, 5, 8] {
            let h = 1.0 / m as f64;
            let w = composite_weights(m, h);
            assert_eq!(w.len(), m + 1);
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(i, w)| w * (i as f64 * h).powi(2))
                .sum();
            let exact = 1.0 / 3.0;
            let tol = if m == 1 { 0.2 } else { 1e-13 };
            assert!((s - exact).abs() < tol, "m={m} s={s}");
        }
    }

    #[test]
    fn cumulative_is_exact_for_cubics() {
        let n = 13;
        let h = 0.25;
        let origin = 5;
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let big_f = |t: f64| t - t * t + 0.125 * t.powi(4);
        let values: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
        let out = cumulative(&values, origin, h);
        let t0 = origin as f64 * h;
        for (j, v) in out.iter().enumerate() {
            let exact = big_f(j as f64 * h) - big_f(t0);
            assert!((v - exact).abs() < 1e-12, "j={j} {v} {exact}");
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let h = 0.1;
        let values: Vec<Complex64> = (0..30)
            .map(|i| {
                let t = i as f64 * h;
                Complex64::new(t.powi(8) - 3.0 * t, t.powi(2))
            })
            .collect();
        for &t in &[0.03, 1.234, 2.87, 2.9] {
            let v = interpolate_uniform(0.0, h, &values, t);
            assert_relative_eq!(
                v.re,
                t.powi(8) - 3.0 * t,
                max_relative = 1e-10,
                epsilon = 1e-10
            );
            assert_relative_eq!(v.im, t * t, max_relative = 1e-10);
        }
    }
}
