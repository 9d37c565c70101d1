//! Direct simulation on quadratic instances and empirical rate estimates.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lifting::{build_structure, QuadraticInstance};
use crate::method_spec::{FunctionClass, Method};
use crate::spectral::spectral_radius_at;

/// Distances below this are treated as exact convergence.
pub const DISTANCE_FLOOR: f64 = 1e-300;
/// Distances above this are treated as blow-up.
pub const DISTANCE_CEILING: f64 = 1e300;
pub const MIN_ESTIMATOR_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumPolicy {
    /// Eigenvalues alternate between `m` and `L`.
    #[default]
    Endpoints,
    /// Uniform on `[m, L]` with one eigenvalue pinned to each end.
    Uniform,
}

impl FromStr for SpectrumPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "endpoints" => Ok(SpectrumPolicy::Endpoints),
            "uniform" => Ok(SpectrumPolicy::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown spectrum policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    /// `||x_t - x*||` for `t = 0..=truncated_at`.
    pub distances: Vec<f64>,
    pub empirical_r: f64,
    pub predicted_r: f64,
    pub truncated_at: usize,
}

impl SimulationTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "distance"])?;
        for (t, d) in self.distances.iter().enumerate() {
            writer.write_record([t.to_string(), d.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Random quadratic `0.5 (x - x*)' T' Lambda T (x - x*)` with a seeded
/// orthogonal `T`, `Lambda` chosen by `spectrum`, and `x*` standard normal.
/// A one-dimensional instance gets the single eigenvalue `m`.
pub fn make_quadratic(n: usize, fc: &FunctionClass, seed: u64, spectrum: SpectrumPolicy) -> Result<QuadraticInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, big_l) = (fc.m(), fc.big_l());
    let eigenvalues: Vec<f64> = match spectrum {
        SpectrumPolicy::Endpoints => (0..n).map(|i| if i % 2 == 0 { m } else { big_l }).collect(),
        SpectrumPolicy::Uniform => {
            let dist = Uniform::new_inclusive(m, big_l).expect("m <= L");
            let mut v: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            v[0] = m;
            if n > 1 {
                v[1] = big_l;
            }
            v
        }
    };

    let gaussian: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = gaussian.qr().q();
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues));
    let h: DMatrix<f64> = q.transpose() * lambda * &q;
    let hessian = (&h + h.transpose()) * 0.5;
    let minimizer: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    QuadraticInstance::new(hessian, minimizer, 0.0, *fc)
}

/// Iterate `method` on `quadratic` from `history` (`x_{-k}, ..., x_0`,
/// oldest first) for up to `steps` steps.
///
/// The run stops early once the distance to `x*` drops below
/// [`DISTANCE_FLOOR`] or leaves the finite range. When the trace converged
/// exactly before the estimator has enough points the empirical rate is 0.
pub fn run(method: &Method, quadratic: &QuadraticInstance, history: Vec<DVector<f64>>, steps: usize) -> Result<SimulationTrace> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if history.len() != method.k() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "history holds {} iterates, method needs k + 1 = {}",
            history.len(),
            method.k() + 1
        )));
    }
    if let Some(bad) = history.iter().find(|x| x.len() != quadratic.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "iterate has length {}, quadratic has dimension {}",
            bad.len(),
            quadratic.dim()
        )));
    }

    // Iterate the offsets x_t - x*. Since gamma sums to one the recurrence is
    // translation invariant, and offsets keep full relative precision far
    // below the rounding level of ||x*||.
    let x_star = quadratic.minimizer();
    let hessian = quadratic.hessian();
    let mut window: Vec<DVector<f64>> = history.iter().map(|x| x - x_star).collect();
    let mut distances = vec![window[window.len() - 1].norm()];
    let mut converged = distances[0] < DISTANCE_FLOOR;
    let mut blew_up = !usable(distances[0]) && !converged;
    while !converged && !blew_up && distances.len() <= steps {
        let next = method.step(&window, |e| hessian * e)?;
        let d = next.norm();
        distances.push(d);
        converged = d < DISTANCE_FLOOR;
        blew_up = !converged && !usable(d);
        window.remove(0);
        window.push(next);
    }
    let truncated_at = distances.len() - 1;

    let system = build_structure(method);
    let predicted_r = quadratic
        .eigenvalues()
        .into_iter()
        .map(|lambda| spectral_radius_at(&system, lambda))
        .fold(0.0, f64::max);

    let empirical_r = match estimate_r_factor(&distances) {
        Ok(r) => r,
        Err(Error::TooFewPoints { .. }) if converged => 0.0,
        Err(e) => return Err(e),
    };
    Ok(SimulationTrace { distances, empirical_r, predicted_r, truncated_at })
}

/// History made of `x0` repeated `k + 1` times.
pub fn constant_history(method: &Method, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    vec![x0.clone(); method.k() + 1]
}

fn usable(d: f64) -> bool {
    d.is_finite() && (DISTANCE_FLOOR..=DISTANCE_CEILING).contains(&d)
}

/// Finite-sample surrogate for `limsup ||x_t - x*||^(1/t)`.
///
/// Takes the first unbroken run of usable distances (inside the floor and
/// ceiling), keeps its last half and fits `log d_t = a + b t + c ln t` by
/// least squares, returning `exp(b)`. The `ln t` column absorbs the
/// polynomial factor that a defective (repeated) dominant root puts in front
/// of the geometric decay.
pub fn estimate_r_factor(distances: &[f64]) -> Result<f64> {
    let start = distances.iter().position(|&d| usable(d)).unwrap_or(distances.len());
    let len = distances[start..].iter().take_while(|&&d| usable(d)).count();
    if len < MIN_ESTIMATOR_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_ESTIMATOR_POINTS, got: len });
    }
    let tail: Vec<(f64, f64)> = (start + len / 2..start + len)
        .map(|t| (t as f64, distances[t].ln()))
        .collect();

    let count = tail.len() as f64;
    let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_log_t = tail.iter().map(|p| p.0.ln()).sum::<f64>() / count;
    let design = DMatrix::from_fn(tail.len(), 3, |row, col| match col {
        0 => 1.0,
        1 => tail[row].0 - mean_t,
        _ => tail[row].0.ln() - mean_log_t,
    });
    let rhs = DVector::from_iterator(tail.len(), tail.iter().map(|p| p.1));
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("rate regression failed: {e}")))?;
    Ok(coeffs[1].exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::method_spec::{preset, Preset};

    fn class(m: f64, big_l: f64) -> FunctionClass {
        FunctionClass::new(m, big_l).unwrap()
    }

    #[test]
    fn estimator_on_geometric_sequence() {
        let d: Vec<f64> = (0..=200).map(|t| 0.5f64.powi(t)).collect();
        assert!((estimate_r_factor(&d).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimator_on_defective_profile() {
        let d: Vec<f64> = (0..=500).map(|t| t as f64 * 0.5f64.powi(t)).collect();
        assert!((estimate_r_factor(&d).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn estimator_on_oscillating_profile() {
        let d: Vec<f64> = (0..=200).map(|t| 0.9f64.powi(t) * (1.0 + 0.5 * (-1f64).powi(t))).collect();
        assert!((estimate_r_factor(&d).unwrap() - 0.9).abs() < 1e-2);
    }

    #[test]
    fn estimator_needs_twenty_points() {
        let d: Vec<f64> = (0..19).map(|t| 0.5f64.powi(t)).collect();
        assert!(matches!(estimate_r_factor(&d), Err(Error::TooFewPoints { got: 19, .. })));
        assert!(estimate_r_factor(&[0.0; 40]).is_err());
    }

    #[test]
    fn one_dimensional_degenerate_instance() {
        for policy in [SpectrumPolicy::Endpoints, SpectrumPolicy::Uniform] {
            let q = make_quadratic(1, &class(4.0, 4.0), 17, policy).unwrap();
            assert!((q.hessian()[(0, 0)] - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoint_instance_has_exact_spectrum() {
        let q = make_quadratic(2, &class(1.0, 9.0), 5, SpectrumPolicy::Endpoints).unwrap();
        let eig = q.eigenvalues();
        assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[1] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_instance_realizes_class_bounds() {
        let q = make_quadratic(10, &class(1.0, 9.0), 3, SpectrumPolicy::Uniform).unwrap();
        let eig = q.eigenvalues();
        assert!(eig.iter().all(|&v| (1.0 - 1e-12..=9.0 + 1e-12).contains(&v)));
        assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[9] - 9.0).abs() < 1e-12);
    }

    fn diag_instance(fc: FunctionClass) -> QuadraticInstance {
        QuadraticInstance::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 9.0])), DVector::zeros(2), 0.0, fc)
            .unwrap()
    }

    #[test]
    fn heavy_ball_run_matches_rate() {
        let fc = class(1.0, 9.0);
        let hb = preset(Preset::HeavyBall, &fc);
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let trace = run(&hb, &diag_instance(fc), constant_history(&hb, &x0), 500).unwrap();
        assert!((trace.predicted_r - 0.5).abs() < 1e-7);
        assert!((trace.empirical_r - 0.5).abs() < 0.02);
        assert_eq!(trace.truncated_at, 500);
    }

    #[test]
    fn gradient_descent_run_matches_rate() {
        let fc = class(1.0, 9.0);
        let gd = preset(Preset::GradientDescent, &fc);
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let trace = run(&gd, &diag_instance(fc), constant_history(&gd, &x0), 500).unwrap();
        assert!((trace.predicted_r - 0.8).abs() < 1e-12);
        assert!((trace.empirical_r - 0.8).abs() < 0.02);
    }

    #[test]
    fn start_at_minimizer_stays_there() {
        let fc = class(1.0, 9.0);
        let nag = preset(Preset::Nesterov, &fc);
        let q = make_quadratic(3, &fc, 2, SpectrumPolicy::Endpoints).unwrap();
        let trace = run(&nag, &q, constant_history(&nag, q.minimizer()), 50).unwrap();
        assert!(trace.distances.iter().all(|&d| d == 0.0));
        assert_eq!(trace.empirical_r, 0.0);
    }

    #[test]
    fn run_rejects_mismatched_history() {
        let fc = class(1.0, 9.0);
        let hb = preset(Preset::HeavyBall, &fc);
        let q = diag_instance(fc);
        let x = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(matches!(run(&hb, &q, constant_history(&hb, &x), 10), Err(Error::DimensionMismatch(_))));
        assert!(matches!(run(&hb, &q, vec![DVector::zeros(2)], 10), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn csv_export_has_header() {
        let trace = SimulationTrace { distances: vec![1.0, 0.5], empirical_r: 0.5, predicted_r: 0.5, truncated_at: 1 };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,distance\n0,1\n1,0.5\n");
    }
}
