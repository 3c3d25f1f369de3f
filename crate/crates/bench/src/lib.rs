//! Fixtures shared by the benchmarks.

use warpnls::lab::{DatumFamily, FamilyKind};
use warpnls::{FourierField, TorusGrid};

/// Gaussian-bell datum supported in `B(0, n)` on the grid dealiased for `power`.
pub fn bell(dim: usize, n: usize, power: usize) -> FourierField {
    let grid = TorusGrid::dealiased(dim, n, power).expect("valid grid");
    DatumFamily::new(FamilyKind::GaussianBell, 0)
        .datum(&grid, n)
        .expect("bell datum")
}
