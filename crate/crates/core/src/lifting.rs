//! Linear-system form of a method applied to a quadratic.
//!
//! Stacking the last `k + 1` iterates into `X_t = [x_{t-k}; ...; x_t]` turns
//! the recurrence into a Lur'e system `X_{t+1} = A X_t + B U_t`,
//! `Y_t = C X_t`, `U_t = -grad f(Y_t)` with `A = A0 (x) I_n`,
//! `B = B0 (x) I_n` and `C = [C_l; ...; C_0] (x) I_n`. For a quadratic with
//! Hessian `H` the shifted state obeys `X_{t+1} = (A0 (x) I - (B0 (x) H) C) X_t`,
//! and an orthogonal change of coordinates splits that matrix into one
//! `(k+1) x (k+1)` companion block `A0 - lambda N` per eigenvalue `lambda`
//! of `H`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::method_spec::{FunctionClass, Method};

/// Structural matrices of the lifted system and the numerator coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    /// `(k+1) x (k+1)` shift structure with the momentum row at the bottom.
    pub a0: DMatrix<f64>,
    /// `(k+1) x (l+1)` gradient injection; only the last row is nonzero.
    pub b0: DMatrix<f64>,
    /// Output rows `C_j`, stored for `j = l` down to `0`.
    pub c_rows: Vec<DVector<f64>>,
    /// `n_0, ..., n_k`: coefficients of `alpha(z) * gamma(z)`.
    pub n_coeffs: Vec<f64>,
    /// Momentum coefficients, kept for the compensator denominator.
    pub beta: Vec<f64>,
}

impl LiftedSystem {
    /// Memory depth `k`.
    pub fn depth(&self) -> usize {
        self.beta.len()
    }

    /// The `N` matrix: zero except for the last row `n_k, ..., n_0`.
    pub fn numerator_matrix(&self) -> DMatrix<f64> {
        let size = self.depth() + 1;
        let mut n = DMatrix::zeros(size, size);
        for (col, &v) in self.n_coeffs.iter().rev().enumerate() {
            n[(size - 1, col)] = v;
        }
        n
    }

    /// `C_l; ...; C_0` stacked into an `(l+1) x (k+1)` matrix.
    pub fn output_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_rows(&self.c_rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
    }
}

/// Ratio of two real polynomials, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalFunction {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl RationalFunction {
    pub fn is_proper(&self) -> bool {
        degree(&self.numerator) <= degree(&self.denominator)
    }

    /// `1 + gain * self * other`, kept over the common denominator.
    pub fn unity_feedback(&self, other: &RationalFunction, gain: f64) -> RationalFunction {
        let den = poly_mul(&self.denominator, &other.denominator);
        let loop_num: Vec<f64> =
            poly_mul(&self.numerator, &other.numerator).iter().map(|c| gain * c).collect();
        RationalFunction { numerator: poly_add(&den, &loop_num), denominator: den }
    }
}

/// A quadratic `f(x) = 0.5 (x - x*)' H (x - x*) + f0` whose Hessian
/// spectrum lies inside a declared [`FunctionClass`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticInstance {
    hessian: DMatrix<f64>,
    minimizer: DVector<f64>,
    offset: f64,
    class: FunctionClass,
}

impl QuadraticInstance {
    pub fn new(
        hessian: DMatrix<f64>,
        minimizer: DVector<f64>,
        offset: f64,
        class: FunctionClass,
    ) -> Result<Self> {
        let n = minimizer.len();
        if n == 0 || hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "hessian is {}x{}, minimizer has length {}",
                hessian.nrows(),
                hessian.ncols(),
                n
            )));
        }
        if hessian.iter().chain(minimizer.iter()).any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidQuadratic("non-finite entries".into()));
        }
        let asym = (&hessian - hessian.transpose()).abs().max();
        if asym > 1e-12 * hessian.abs().max().max(1.0) {
            return Err(Error::InvalidQuadratic(format!("hessian not symmetric (max |H - H'| = {asym:e})")));
        }
        let slack = 1e-9 * class.big_l();
        let eig = SymmetricEigen::new(hessian.clone()).eigenvalues;
        if let Some(bad) = eig.iter().find(|&&v| v < class.m() - slack || v > class.big_l() + slack) {
            return Err(Error::InvalidQuadratic(format!(
                "hessian eigenvalue {bad} outside [{}, {}]",
                class.m(),
                class.big_l()
            )));
        }
        Ok(QuadraticInstance { hessian, minimizer, offset, class })
    }

    pub fn dim(&self) -> usize {
        self.minimizer.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn class(&self) -> &FunctionClass {
        &self.class
    }

    /// Hessian eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = SymmetricEigen::new(self.hessian.clone()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * (x - &self.minimizer)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.minimizer;
        0.5 * d.dot(&(&self.hessian * &d)) + self.offset
    }
}

/// `n_j = sum_{nu <= j} alpha_nu gamma_{j - nu}` for `j = 0..=k`, with
/// out-of-range coefficients read as zero.
pub fn convolve_numerator(method: &Method) -> Vec<f64> {
    let (alpha, gamma) = (method.alpha(), method.gamma());
    (0..=method.k())
        .map(|j| {
            (0..=j)
                .map(|nu| {
                    let a = alpha.get(nu).copied().unwrap_or(0.0);
                    let g = gamma.get(j - nu).copied().unwrap_or(0.0);
                    a * g
                })
                .sum()
        })
        .collect()
}

pub fn build_structure(method: &Method) -> LiftedSystem {
    let (k, l) = (method.k(), method.l());
    let beta = method.beta();
    let size = k + 1;

    let mut a0 = DMatrix::zeros(size, size);
    for row in 0..k {
        a0[(row, row + 1)] = 1.0;
    }
    // -beta_{k-1}, beta_{k-1} - beta_{k-2}, ..., beta_1 - beta_0, 1 + beta_0
    a0[(k, 0)] = -beta[k - 1];
    for col in 1..k {
        a0[(k, col)] = beta[k - col] - beta[k - col - 1];
    }
    a0[(k, k)] += 1.0 + beta[0];

    let mut b0 = DMatrix::zeros(size, l + 1);
    for (col, &a) in method.alpha().iter().rev().enumerate() {
        b0[(k, col)] = a;
    }

    // C_j = [0 (l-j) | gamma_{k-l} ... gamma_0 | 0 (j)]
    let c_rows = (0..=l)
        .rev()
        .map(|j| {
            let mut row = DVector::zeros(size);
            for (offset, &g) in method.gamma().iter().rev().enumerate() {
                row[l - j + offset] = g;
            }
            row
        })
        .collect();

    LiftedSystem { a0, b0, c_rows, n_coeffs: convolve_numerator(method), beta: beta.to_vec() }
}

/// `A0 - lambda N`, a companion matrix whose last row carries the
/// coefficients of the closed-loop characteristic polynomial.
pub fn companion_matrix(system: &LiftedSystem, lambda: f64) -> DMatrix<f64> {
    &system.a0 - system.numerator_matrix() * lambda
}

/// Monic coefficients (descending) of `(z - 1) D(z) + lambda N(z)` where
/// `D(z) = z^k - sum beta_j z^{k-j-1}` and `N(z) = sum n_j z^{k-j}`.
pub fn characteristic_polynomial(system: &LiftedSystem, lambda: f64) -> Vec<f64> {
    let open_loop = poly_mul(&[1.0, -1.0], &denominator_coeffs(system));
    let mut shifted = vec![0.0];
    shifted.extend(system.n_coeffs.iter().map(|n| lambda * n));
    poly_add(&open_loop, &shifted)
}

/// Plant `P(z) = 1/(z - 1)` and compensator `K(z) = N(z)/D(z)`.
pub fn transfer_functions(system: &LiftedSystem) -> (RationalFunction, RationalFunction) {
    let plant = RationalFunction { numerator: vec![1.0], denominator: vec![1.0, -1.0] };
    let compensator = RationalFunction {
        numerator: system.n_coeffs.clone(),
        denominator: denominator_coeffs(system),
    };
    (plant, compensator)
}

/// The full `(k+1)n x (k+1)n` matrix `A0 (x) I - (B0 (x) H) C`.
pub fn build_lifted_matrix(method: &Method, quadratic: &QuadraticInstance) -> Result<DMatrix<f64>> {
    let system = build_structure(method);
    let n = quadratic.dim();
    let hessian = quadratic.hessian();
    let identity = DMatrix::<f64>::identity(n, n);
    let c = system.output_matrix().kronecker(&identity);
    let bh = system.b0.kronecker(hessian);
    if bh.ncols() != c.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "B0 (x) H has {} columns but C has {} rows",
            bh.ncols(),
            c.nrows()
        )));
    }
    Ok(system.a0.kronecker(&identity) - bh * c)
}

fn denominator_coeffs(system: &LiftedSystem) -> Vec<f64> {
    let mut d = Vec::with_capacity(system.depth() + 1);
    d.push(1.0);
    d.extend(system.beta.iter().map(|b| -b));
    d
}

fn degree(p: &[f64]) -> usize {
    p.iter().position(|&c| c != 0.0).map_or(0, |lead| p.len() - 1 - lead)
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two descending-power polynomials, aligned at the constant term.
pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len().max(b.len());
    let pad = |p: &[f64]| std::iter::repeat_n(0.0, len - p.len()).chain(p.iter().copied()).collect::<Vec<_>>();
    pad(a).iter().zip(pad(b)).map(|(x, y)| x + y).collect()
}
