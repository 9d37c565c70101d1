//! Spectral radii of the companion blocks and the worst case over `[m, L]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain_margin::rho_star;
use crate::lifting::{build_structure, characteristic_polynomial, LiftedSystem};
use crate::method_spec::{FunctionClass, Method, MethodSpec};

/// Margin allowed below the lower bound when certifying sampled methods.
pub const LOWER_BOUND_SLACK: f64 = 1e-8;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// All complex roots (with multiplicity) of a real polynomial given in
/// descending powers, computed as eigenvalues of its companion matrix.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs.first().ok_or(Error::InvalidPolynomial("no coefficients"))?;
    if coeffs.len() < 2 {
        return Err(Error::InvalidPolynomial("degree must be at least 1"));
    }
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidPolynomial("leading coefficient is zero"));
    }
    let degree = coeffs.len() - 1;
    if degree == 1 {
        return Ok(vec![Complex64::new(-coeffs[1] / lead, 0.0)]);
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for (i, c) in coeffs[1..].iter().enumerate() {
        companion[(0, i)] = -c / lead;
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

/// Radius of the smallest origin-centred disk holding every root.
pub fn spectral_radius_of_polynomial(coeffs: &[f64]) -> Result<f64> {
    Ok(polynomial_roots(coeffs)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Spectral radius of the companion block at Hessian eigenvalue `lambda`.
pub fn spectral_radius_at(system: &LiftedSystem, lambda: f64) -> f64 {
    spectral_radius_of_polynomial(&characteristic_polynomial(system, lambda))
        .expect("characteristic polynomial is monic of degree k + 1 >= 2")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub grid_points: usize,
    /// Grid values closer than this are treated as one plateau when
    /// picking local maxima to refine.
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { grid_points: 2001, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSample {
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub worst_rho: f64,
    pub argmax_lambda: f64,
    pub rho_star: f64,
    pub gap: f64,
    pub converging: bool,
    pub sweep: Vec<SweepSample>,
}

/// `sup_{lambda in [m, L]}` of the companion spectral radius.
///
/// The radius is evaluated on a uniform grid, then every local grid maximum
/// (plateaus collapsed, endpoints included) is refined by golden-section
/// search on its neighbouring bracket until the bracket is narrower than
/// `1e-12 (L - m)`. The radius is not smooth where roots collide, so no
/// derivative information is used.
pub fn worst_case_rho(method: &Method, fc: &FunctionClass, opts: &SweepOptions) -> RateReport {
    sweep_and_refine(&build_structure(method), fc, opts, false)
}

fn sweep_and_refine(system: &LiftedSystem, fc: &FunctionClass, opts: &SweepOptions, stop_if_diverging: bool) -> RateReport {
    let (m, big_l) = (fc.m(), fc.big_l());
    let target = rho_star(fc);
    let points = if fc.is_degenerate() { 1 } else { opts.grid_points.max(2) };
    let width = big_l - m;
    let lambda_at = |i: usize| {
        if i + 1 == points {
            big_l
        } else {
            m + width * i as f64 / (points - 1).max(1) as f64
        }
    };

    let sweep: Vec<SweepSample> = (0..points)
        .into_par_iter()
        .map(|i| {
            let lambda = lambda_at(i);
            SweepSample { lambda, rho: spectral_radius_at(system, lambda) }
        })
        .collect();

    let mut best = sweep.iter().copied().fold(sweep[0], |b, s| if s.rho > b.rho { s } else { b });
    let skip_refine = points == 1 || (stop_if_diverging && best.rho >= 1.0);
    if !skip_refine {
        let min_bracket = 1e-12 * width;
        for i in local_maxima(&sweep, opts.tolerance) {
            let lo = sweep[i.saturating_sub(1)].lambda;
            let hi = sweep[(i + 1).min(points - 1)].lambda;
            let found = golden_section_max(|x| spectral_radius_at(system, x), lo, hi, min_bracket);
            if found.rho > best.rho {
                best = found;
            }
        }
    }

    RateReport {
        worst_rho: best.rho,
        argmax_lambda: best.lambda,
        rho_star: target,
        gap: best.rho - target,
        converging: best.rho < 1.0,
        sweep,
    }
}

/// Indices of local maxima of the sampled curve. Runs of consecutive
/// samples that differ by at most `tolerance` count as one plateau and
/// contribute only their largest sample.
fn local_maxima(sweep: &[SweepSample], tolerance: f64) -> Vec<usize> {
    let n = sweep.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && (sweep[end + 1].rho - sweep[end].rho).abs() <= tolerance {
            end += 1;
        }
        let peak = (start..=end).fold(start, |p, i| if sweep[i].rho > sweep[p].rho { i } else { p });
        let left_ok = start == 0 || sweep[start - 1].rho < sweep[peak].rho;
        let right_ok = end + 1 == n || sweep[end + 1].rho < sweep[peak].rho;
        if left_ok && right_ok {
            out.push(peak);
        }
        start = end + 1;
    }
    out
}

/// Golden-section search for a maximum on `[lo, hi]`; returns the best
/// point evaluated, including the bracket ends.
fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, min_bracket: f64) -> SweepSample {
    let mut best = SweepSample { lambda: lo, rho: f(lo) };
    let consider = |lambda: f64, rho: f64, best: &mut SweepSample| {
        if rho > best.rho {
            *best = SweepSample { lambda, rho };
        }
    };
    let f_hi = f(hi);
    consider(hi, f_hi, &mut best);

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);
    while hi - lo > min_bracket {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            consider(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            consider(x2, f2, &mut best);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub samples: usize,
    pub converging: usize,
    pub min_worst_rho: Option<f64>,
    /// Coefficients of the fastest converging sample.
    pub best_method: Option<MethodSpec>,
    pub rho_star: f64,
    /// `min_worst_rho - rho_star`.
    pub margin: Option<f64>,
}

impl LowerBoundReport {
    /// True unless some converging sample beat `rho_star` by more than
    /// [`LOWER_BOUND_SLACK`]. Vacuously true with no converging samples.
    pub fn holds(&self) -> bool {
        self.margin.is_none_or(|m| m >= -LOWER_BOUND_SLACK)
    }
}

/// Draw the `index`-th random method of the stream identified by `seed`.
///
/// `k` is uniform on `1..=4` and `l` uniform on `0..=k`. Every `alpha_j` and
/// `beta_j` is uniform on `[-1, 1]`; `alpha` is redrawn while
/// `|sum alpha| < 1e-3`. The `gamma_nu` are uniform on `[-1, 1]` and then
/// shifted by a common amount so they sum to one.
pub fn sample_method(seed: u64, index: u64) -> Method {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let k = rng.random_range(1..=4usize);
    let l = rng.random_range(0..=k);
    let mut uniform = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let beta = uniform(k);
    let mut alpha = uniform(l + 1);
    while alpha.iter().sum::<f64>().abs() < 1e-3 {
        alpha = uniform(l + 1);
    }
    let mut gamma = uniform(k - l + 1);
    let shift = (gamma.iter().sum::<f64>() - 1.0) / gamma.len() as f64;
    gamma.iter_mut().for_each(|g| *g -= shift);
    let last = gamma.len() - 1;
    gamma[last] = 1.0 - gamma[..last].iter().sum::<f64>();
    Method::new(MethodSpec { k, l, alpha, beta, gamma }).expect("sampled coefficients are valid")
}

/// Sample `samples` random methods and report the fastest worst-case rate
/// among those that converge on the whole class.
pub fn certify_lower_bound(samples: usize, fc: &FunctionClass, seed: u64, opts: &SweepOptions) -> LowerBoundReport {
    let converged = converging_samples(0..samples as u64, fc, seed, opts);
    summarize(samples, converged, fc)
}

/// Keep drawing (in index order) until `target` sampled methods converge or
/// `max_samples` have been drawn. The report covers exactly the prefix of
/// the sample stream that was needed, so it does not depend on scheduling.
pub fn certify_lower_bound_until(
    target: usize,
    max_samples: usize,
    fc: &FunctionClass,
    seed: u64,
    opts: &SweepOptions,
) -> LowerBoundReport {
    const CHUNK: u64 = 8192;
    let mut converged = Vec::new();
    let mut drawn = 0u64;
    while converged.len() < target && drawn < max_samples as u64 {
        let end = (drawn + CHUNK).min(max_samples as u64);
        converged.extend(converging_samples(drawn..end, fc, seed, opts));
        drawn = end;
    }
    if converged.len() > target {
        converged.truncate(target);
        drawn = converged.last().map_or(drawn, |c| c.0 + 1);
    }
    summarize(drawn as usize, converged, fc)
}

fn converging_samples(
    indices: std::ops::Range<u64>,
    fc: &FunctionClass,
    seed: u64,
    opts: &SweepOptions,
) -> Vec<(u64, MethodSpec, f64)> {
    indices
        .into_par_iter()
        .filter_map(|i| {
            let method = sample_method(seed, i);
            let system = build_structure(&method);
            if diverges_somewhere(&system, fc) {
                return None;
            }
            let report = sweep_and_refine(&system, fc, opts, true);
            report.converging.then(|| (i, method.spec().clone(), report.worst_rho))
        })
        .collect()
}

/// Cheap rejection: a radius of at least one at any of a few probe points
/// already rules out convergence on the class.
fn diverges_somewhere(system: &LiftedSystem, fc: &FunctionClass) -> bool {
    const PROBES: usize = 16;
    let (m, big_l) = (fc.m(), fc.big_l());
    std::iter::once(big_l)
        .chain(std::iter::once(m))
        .chain((1..PROBES).map(|i| m + (big_l - m) * i as f64 / PROBES as f64))
        .any(|lambda| spectral_radius_at(system, lambda) >= 1.0)
}

fn summarize(samples: usize, converged: Vec<(u64, MethodSpec, f64)>, fc: &FunctionClass) -> LowerBoundReport {
    let target = rho_star(fc);
    let best = converged.iter().fold(None::<&(u64, MethodSpec, f64)>, |b, r| match b {
        Some(b) if b.2 <= r.2 => Some(b),
        _ => Some(r),
    });
    LowerBoundReport {
        samples,
        converging: converged.len(),
        min_worst_rho: best.map(|b| b.2),
        best_method: best.map(|b| b.1.clone()),
        rho_star: target,
        margin: best.map(|b| b.2 - target),
    }
}
