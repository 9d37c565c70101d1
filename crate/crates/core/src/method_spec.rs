//! Fixed-parameter first-order methods.
//!
//! A method with memory depth `k` and `l + 1` gradient evaluations per step
//! iterates
//!
//! ```text
//! x_{t+1} = x_t + sum_{j<k} beta_j (x_{t-j} - x_{t-j-1}) - sum_{j<=l} alpha_j grad f(y_{t-j})
//! y_t     = sum_{nu<=k-l} gamma_nu x_{t-nu}
//! ```
//!
//! The coefficients never change with `t`. [`MethodSpec`] is an unchecked
//! candidate (what a JSON file deserializes into); [`Method`] is a spec that
//! passed [`validate`] and is what the analysis routines accept.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::QuadraticInstance;

/// Absolute tolerance on `sum(gamma) = 1` for user-supplied coefficients.
pub const GAMMA_SUM_TOLERANCE: f64 = 1e-12;

/// Raw coefficient tuple `(k, l, alpha, beta, gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub k: usize,
    pub l: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MemoryDepthZero,
    GradientCountExceedsDepth { k: usize, l: usize },
    WrongLength { field: &'static str, expected: usize, got: usize },
    NonFinite { field: &'static str, index: usize },
    AlphaSumZero,
    GammaSumNotOne { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MemoryDepthZero => write!(f, "memory depth k must be at least 1"),
            Violation::GradientCountExceedsDepth { k, l } => {
                write!(f, "l = {l} exceeds k = {k} (need l <= k)")
            }
            Violation::WrongLength { field, expected, got } => {
                write!(f, "{field} has length {got}, expected {expected}")
            }
            Violation::NonFinite { field, index } => {
                write!(f, "{field}[{index}] is not finite")
            }
            Violation::AlphaSumZero => {
                write!(f, "sum of alpha is zero (gradient coefficients must not sum to 0)")
            }
            Violation::GammaSumNotOne { sum } => {
                write!(f, "gamma does not sum to 1 (sum = {sum})")
            }
        }
    }
}

/// Outcome of [`validate`]: the list of violated invariants, empty when the
/// candidate is a well-formed method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every structural and fixed-point invariant of a candidate method.
pub fn validate(spec: &MethodSpec) -> Validation {
    let mut violations = Vec::new();
    if spec.k == 0 {
        violations.push(Violation::MemoryDepthZero);
    }
    if spec.l > spec.k {
        violations.push(Violation::GradientCountExceedsDepth { k: spec.k, l: spec.l });
    }

    let expected = [
        ("alpha", &spec.alpha, spec.l + 1),
        ("beta", &spec.beta, spec.k),
        ("gamma", &spec.gamma, spec.k.saturating_sub(spec.l) + 1),
    ];
    let mut lengths_ok = violations.is_empty();
    for (field, values, len) in expected {
        // a short gamma means its trailing coefficients are zero
        let fits = match field {
            "gamma" => (1..=len).contains(&values.len()),
            _ => values.len() == len,
        };
        if !fits {
            lengths_ok = false;
            violations.push(Violation::WrongLength { field, expected: len, got: values.len() });
        }
    }

    let mut finite = true;
    for (field, values, _) in expected {
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                finite = false;
                violations.push(Violation::NonFinite { field, index });
            }
        }
    }

    if finite && !spec.alpha.is_empty() && spec.alpha.iter().sum::<f64>() == 0.0 {
        violations.push(Violation::AlphaSumZero);
    }
    if finite && lengths_ok {
        let sum: f64 = spec.gamma.iter().sum();
        if (sum - 1.0).abs() > GAMMA_SUM_TOLERANCE {
            violations.push(Violation::GammaSumNotOne { sum });
        }
    }
    Validation { violations }
}

/// A method whose coefficients satisfy every [`MethodSpec`] invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Method(MethodSpec);

impl Method {
    /// Validate `spec`; a short `gamma` is zero-padded to `k - l + 1` entries.
    pub fn new(mut spec: MethodSpec) -> Result<Self> {
        let validation = validate(&spec);
        if validation.is_ok() {
            spec.gamma.resize(spec.k - spec.l + 1, 0.0);
            Ok(Method(spec))
        } else {
            Err(Error::InvalidMethod(validation.violations))
        }
    }

    pub fn spec(&self) -> &MethodSpec {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.k
    }

    pub fn l(&self) -> usize {
        self.0.l
    }

    pub fn alpha(&self) -> &[f64] {
        &self.0.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.0.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.0.gamma
    }

    /// Advance the recurrence by one step.
    ///
    /// `history` holds `x_{t-k}, ..., x_t` (oldest first). Every `y_{t-j}`
    /// the step needs reaches back at most to `x_{t-k}`, so no values before
    /// the window are required.
    pub fn step<G>(&self, history: &[DVector<f64>], grad: G) -> Result<DVector<f64>>
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let k = self.k();
        if history.len() != k + 1 {
            return Err(Error::DimensionMismatch(format!(
                "history holds {} iterates, method needs k + 1 = {}",
                history.len(),
                k + 1
            )));
        }
        let n = history[k].len();
        if history.iter().any(|x| x.len() != n) {
            return Err(Error::DimensionMismatch("history iterates differ in length".into()));
        }
        // x_{t-i}
        let back = |i: usize| &history[k - i];

        let mut next = back(0).clone();
        for (j, &b) in self.beta().iter().enumerate() {
            if b != 0.0 {
                next += (back(j) - back(j + 1)) * b;
            }
        }
        for (j, &a) in self.alpha().iter().enumerate() {
            let mut y = DVector::zeros(n);
            for (nu, &g) in self.gamma().iter().enumerate() {
                y.axpy(g, back(j + nu), 1.0);
            }
            next.axpy(-a, &grad(&y), 1.0);
        }
        Ok(next)
    }
}

impl TryFrom<MethodSpec> for Method {
    type Error = Error;

    fn try_from(spec: MethodSpec) -> Result<Self> {
        Method::new(spec)
    }
}

/// The quadratic class `Q_{m,L}`: Hessian spectrum inside `[m, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionClass {
    m: f64,
    #[serde(rename = "L")]
    big_l: f64,
}

impl FunctionClass {
    pub fn new(m: f64, big_l: f64) -> Result<Self> {
        if m.is_finite() && big_l.is_finite() && m > 0.0 && m <= big_l {
            Ok(FunctionClass { m, big_l })
        } else {
            Err(Error::InvalidFunctionClass { m, big_l })
        }
    }

    /// Strong-convexity modulus (smallest admissible Hessian eigenvalue).
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Largest admissible Hessian eigenvalue.
    pub fn big_l(&self) -> f64 {
        self.big_l
    }

    pub fn is_degenerate(&self) -> bool {
        self.m == self.big_l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    GradientDescent,
    HeavyBall,
    Nesterov,
    TripleMomentum,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::GradientDescent,
        Preset::HeavyBall,
        Preset::Nesterov,
        Preset::TripleMomentum,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::GradientDescent => "gradient-descent",
            Preset::HeavyBall => "heavy-ball",
            Preset::Nesterov => "nesterov",
            Preset::TripleMomentum => "triple-momentum",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Instantiate a named method with its standard tuning for `fc`.
///
/// The last `gamma` entry is always `1 - (sum of the others)` so the
/// fixed-point condition holds in floating point.
///
/// The triple-momentum coefficients follow Van Scoy, Freeman and Lynch
/// (2018): with `r = 1 - sqrt(m/L)`, `alpha = (1 + r)/L`,
/// `beta = r^2/(2 - r)` and `y_t = (1 + g) x_t - g x_{t-1}` where
/// `g = r^2/((1 + r)(2 - r))`.
pub fn preset(preset: Preset, fc: &FunctionClass) -> Method {
    let (m, big_l) = (fc.m(), fc.big_l());
    let (sm, sl) = (m.sqrt(), big_l.sqrt());
    let (alpha, beta, gamma0) = match preset {
        Preset::GradientDescent => (2.0 / (m + big_l), 0.0, 1.0),
        Preset::HeavyBall => {
            let rate = crate::gain_margin::rho_star(fc);
            (4.0 / ((sl + sm) * (sl + sm)), rate * rate, 1.0)
        }
        Preset::Nesterov => {
            let q = (m / big_l).sqrt();
            let beta = (1.0 - q) / (1.0 + q);
            (1.0 / big_l, beta, 1.0 + beta)
        }
        Preset::TripleMomentum => {
            let r = 1.0 - (m / big_l).sqrt();
            let g = r * r / ((1.0 + r) * (2.0 - r));
            ((1.0 + r) / big_l, r * r / (2.0 - r), 1.0 + g)
        }
    };
    let spec = MethodSpec {
        k: 1,
        l: 0,
        alpha: vec![alpha],
        beta: vec![beta],
        gamma: vec![gamma0, 1.0 - gamma0],
    };
    Method::new(spec).expect("preset coefficients satisfy every method invariant")
}

/// Distance from `x*` after one step started from the stationary history
/// `x_{t-k} = ... = x_t = x*`. Zero up to roundoff for every valid method.
pub fn fixed_point_residual(method: &Method, quadratic: &QuadraticInstance) -> Result<f64> {
    let x_star = quadratic.minimizer();
    let history = vec![x_star.clone(); method.k() + 1];
    let next = method.step(&history, |y| quadratic.gradient(y))?;
    Ok((next - x_star).norm())
}
