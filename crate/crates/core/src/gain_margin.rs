//! Robust gain margin certificate.
//!
//! Closing the loop around the plant family `lambda / (z - 1)`,
//! `lambda in [m, L]`, with a proper compensator places every pole inside
//! `|z| < rho` exactly when a two-point Nevanlinna-Pick problem is solvable.
//! The sensitivity `S(z) = (1 + (m+L)/2 P(z) K(z))^-1` must avoid the
//! forbidden set `G`, satisfy `S(1) = 0` and `S(inf) = 1`; the conformal map
//! `theta` sends the complement of `G` onto the unit disk, turning those
//! constraints into interpolation data `s(0) = theta(1)` and
//! `s(rho) = theta(0) = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::method_spec::FunctionClass;

/// `(sqrt(L) - sqrt(m)) / (sqrt(L) + sqrt(m))`.
pub fn rho_star(fc: &FunctionClass) -> f64 {
    let (sm, sl) = (fc.m().sqrt(), fc.big_l().sqrt());
    (sl - sm) / (sl + sm)
}

/// `(-inf, 2m/(m-L)] U [2L/(L-m), +inf)`; empty when `m = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForbiddenSet {
    pub left_bound: f64,
    pub right_bound: f64,
}

impl ForbiddenSet {
    pub fn new(fc: &FunctionClass) -> Self {
        let (m, big_l) = (fc.m(), fc.big_l());
        if fc.is_degenerate() {
            ForbiddenSet { left_bound: f64::NEG_INFINITY, right_bound: f64::INFINITY }
        } else {
            ForbiddenSet { left_bound: 2.0 * m / (m - big_l), right_bound: 2.0 * big_l / (big_l - m) }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x <= self.left_bound || x >= self.right_bound
    }

    pub fn contains_complex(&self, z: Complex64) -> bool {
        z.im == 0.0 && self.contains(z.re)
    }
}

/// Conformal map from the complement of the forbidden set onto the open
/// unit disk, using the principal square root.
pub fn theta(z: Complex64, fc: &FunctionClass) -> Result<Complex64> {
    if ForbiddenSet::new(fc).contains_complex(z) || !z.is_finite() {
        return Err(Error::OutsideDomain(z));
    }
    let (m, big_l) = (fc.m(), fc.big_l());
    let num = Complex64::new(1.0, 0.0) - z * ((big_l - m) / (2.0 * big_l));
    let den = Complex64::new(1.0, 0.0) - z * ((m - big_l) / (2.0 * m));
    let root = (num / den).sqrt();
    Ok((1.0 - root) / (1.0 + root))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginProblem {
    pub fc: FunctionClass,
    /// Target pole radius.
    pub rho: f64,
}

impl MarginProblem {
    pub fn new(fc: FunctionClass, rho: f64) -> Result<Self> {
        if rho > 0.0 && rho < 1.0 {
            Ok(MarginProblem { fc, rho })
        } else {
            Err(Error::InvalidRadius(rho))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub pick_matrix: [[f64; 2]; 2],
    pub first_minor: f64,
    pub determinant: f64,
    pub rho: f64,
    pub rho_star: f64,
}

/// Pick-matrix test for the data `s(0) = rho*`, `s(rho) = 0`.
///
/// The matrix is `[[1 - rho*^2, 1], [1, 1/(1 - rho^2)]]`; it is positive
/// definite iff both leading minors are positive. The determinant is
/// evaluated in the factored form `(rho - rho*)(rho + rho*)/(1 - rho^2)` so
/// its sign is exact at the boundary `rho = rho*`.
pub fn pick_feasible(problem: &MarginProblem) -> FeasibilityReport {
    let target = rho_star(&problem.fc);
    let rho = problem.rho;
    let first_minor = 1.0 - target * target;
    let corner = 1.0 / (1.0 - rho * rho);
    let determinant = (rho - target) * (rho + target) / (1.0 - rho * rho);
    FeasibilityReport {
        feasible: first_minor > 0.0 && determinant > 0.0,
        pick_matrix: [[first_minor, 1.0], [1.0, corner]],
        first_minor,
        determinant,
        rho,
        rho_star: target,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub rho: f64,
    pub pick_feasible: bool,
    pub above_rho_star: bool,
}

impl EquivalenceRow {
    pub fn agrees(&self) -> bool {
        self.pick_feasible == self.above_rho_star
    }
}

/// Both sides of "feasible iff rho > rho*" at each grid radius.
pub fn margin_equivalence_check(fc: &FunctionClass, rho_grid: &[f64]) -> Result<Vec<EquivalenceRow>> {
    let target = rho_star(fc);
    rho_grid
        .iter()
        .map(|&rho| {
            let report = pick_feasible(&MarginProblem::new(*fc, rho)?);
            Ok(EquivalenceRow { rho, pick_feasible: report.feasible, above_rho_star: rho > target })
        })
        .collect()
}
