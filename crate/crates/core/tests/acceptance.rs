//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use momentum_margin::spectral::{certify_lower_bound_until, LOWER_BOUND_SLACK};
use momentum_margin::{
    build_lifted_matrix, build_structure, characteristic_polynomial, companion_matrix, fixed_point_residual,
    make_quadratic, pick_feasible, polynomial_roots, preset, rho_star, run, simulation::constant_history, theta,
    transfer_functions, worst_case_rho, FunctionClass, MarginProblem, Preset, QuadraticInstance, SpectrumPolicy,
    SweepOptions,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

const CLASSES: [(f64, f64); 3] = [(1.0, 9.0), (1.0, 100.0), (2.0, 50.0)];

fn class(m: f64, big_l: f64) -> FunctionClass {
    FunctionClass::new(m, big_l).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rho_star_values() -> Outcome {
    let a = rho_star(&class(1.0, 9.0));
    let b = rho_star(&class(1.0, 100.0));
    check(
        (a - 0.5).abs() <= 1e-15 && (b - 9.0 / 11.0).abs() <= 1e-15,
        format!("rho*(1,9) = {a}, rho*(1,100) = {b}"),
    )
}

fn heavy_ball_tightness() -> Outcome {
    let mut worst: f64 = 0.0;
    for (m, big_l) in CLASSES {
        let fc = class(m, big_l);
        let report = worst_case_rho(&preset(Preset::HeavyBall, &fc), &fc, &SweepOptions::default());
        worst = worst.max((report.worst_rho - rho_star(&fc)).abs());
    }
    check(worst <= 1e-6, format!("max |worst_rho - rho*| = {worst:e} over 3 classes"))
}

fn lower_bound_sampling() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (m, big_l)) in CLASSES.into_iter().enumerate() {
        let fc = class(m, big_l);
        let report = certify_lower_bound_until(1000, 20_000_000, &fc, 7 + i as u64, &SweepOptions::default());
        let margin = report.margin.unwrap_or(f64::NAN);
        ok &= report.converging == 1000 && margin >= -LOWER_BOUND_SLACK;
        lines.push(format!(
            "({m},{big_l}): {} converging of {} drawn, min worst_rho {:.6} vs rho* {:.6}",
            report.converging,
            report.samples,
            report.min_worst_rho.unwrap_or(f64::NAN),
            report.rho_star
        ));
    }
    check(ok, lines.join("; "))
}

fn pick_equivalence() -> Outcome {
    let mut rng = rng(4);
    let mut disagreements = 0;
    let mut tested = 0;
    while tested < 500 {
        let fc = random_class(&mut rng, 1e4);
        let rho: f64 = rng.random_range(1e-6..1.0 - 1e-6);
        let target = rho_star(&fc);
        if (rho - target).abs() <= 1e-12 {
            continue;
        }
        tested += 1;
        let feasible = pick_feasible(&MarginProblem::new(fc, rho).unwrap()).feasible;
        if feasible != (rho > target) {
            disagreements += 1;
        }
    }
    check(disagreements == 0, format!("{disagreements} disagreements in {tested} triples"))
}

fn conformal_identities() -> Outcome {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    let mut zero_exact = true;
    for _ in 0..100 {
        let fc = random_class(&mut rng, 1e6);
        zero_exact &= theta(Complex64::new(0.0, 0.0), &fc).unwrap() == Complex64::new(0.0, 0.0);
        let t1 = theta(Complex64::new(1.0, 0.0), &fc).unwrap();
        worst = worst.max((t1 - Complex64::new(rho_star(&fc), 0.0)).norm());
    }
    check(zero_exact && worst <= 1e-12, format!("theta(0) exact: {zero_exact}, max |theta(1) - rho*| = {worst:e}"))
}

fn block_diagonalization() -> Outcome {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let method = random_method(&mut rng, 4);
        let fc = random_class(&mut rng, 100.0);
        let n = rng.random_range(1..=8);
        let q = make_quadratic(n, &fc, 1000 + trial, SpectrumPolicy::Uniform).unwrap();
        let lifted = eigenvalues(&build_lifted_matrix(&method, &q).unwrap());
        let system = build_structure(&method);
        let blocks: Vec<Complex64> =
            q.eigenvalues().into_iter().flat_map(|lambda| eigenvalues(&companion_matrix(&system, lambda))).collect();
        worst = worst.max(multiset_distance(&lifted, &blocks));
    }
    check(worst <= 1e-8, format!("max eigenvalue mismatch {worst:e} over 50 pairs"))
}

fn characteristic_consistency() -> Outcome {
    let mut rng = rng(7);
    let (mut coeff_err, mut root_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let method = random_method(&mut rng, 5);
        let lambda: f64 = rng.random_range(-10.0..10.0);
        let system = build_structure(&method);
        let poly = characteristic_polynomial(&system, lambda);
        let oracle = faddeev_leverrier(&companion_matrix(&system, lambda));
        coeff_err = poly.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(coeff_err, f64::max);

        let (p, k) = transfer_functions(&system);
        let closed = p.unity_feedback(&k, lambda);
        let lead = closed.numerator[0];
        let monic: Vec<f64> = closed.numerator.iter().map(|c| c / lead).collect();
        let a = polynomial_roots(&monic).unwrap();
        let b = polynomial_roots(&poly).unwrap();
        root_err = root_err.max(multiset_distance(&a, &b));
    }
    check(
        coeff_err <= 1e-10 && root_err <= 1e-9,
        format!("max coefficient error {coeff_err:e}, max zero mismatch {root_err:e} over 100 pairs"),
    )
}

fn empirical_rate_matches_spectrum() -> Outcome {
    let fc = class(1.0, 9.0);
    let mut worst: f64 = 0.0;
    let mut heavy_ball_worst: f64 = 0.0;
    for p in Preset::ALL {
        let method = preset(p, &fc);
        for seed in 0..10u64 {
            let q = make_quadratic(10, &fc, seed, SpectrumPolicy::Endpoints).unwrap();
            let mut rng = rng(100 + seed);
            let offset: DVector<f64> = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
            let x0 = q.minimizer() + offset;
            let trace = run(&method, &q, constant_history(&method, &x0), 500).unwrap();
            worst = worst.max((trace.empirical_r - trace.predicted_r).abs());
            if p == Preset::HeavyBall {
                heavy_ball_worst = heavy_ball_worst.max((trace.empirical_r - 0.5).abs());
            }
        }
    }
    check(
        worst <= 0.02 && heavy_ball_worst <= 0.02,
        format!("max |empirical - predicted| = {worst:e}, heavy-ball max |empirical - 0.5| = {heavy_ball_worst:e}"),
    )
}

fn minimizer_is_fixed_point() -> Outcome {
    let mut rng = rng(9);
    let mut worst_ratio: f64 = 0.0;
    for trial in 0..100 {
        let method = random_method(&mut rng, 5);
        let fc = random_class(&mut rng, 1e3);
        let n = rng.random_range(1..=8);
        let base = make_quadratic(n, &fc, 5000 + trial, SpectrumPolicy::Uniform).unwrap();
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let q = QuadraticInstance::new(base.hessian().clone(), base.minimizer() * scale, 1.0, fc).unwrap();
        let residual = fixed_point_residual(&method, &q).unwrap();
        worst_ratio = worst_ratio.max(residual / (1e-10 * (1.0 + q.minimizer().norm())));
    }
    check(worst_ratio <= 1.0, format!("max residual / (1e-10 (1 + |x*|)) = {worst_ratio:.3e} over 100 pairs"))
}

fn gradient_descent_closed_form() -> Outcome {
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let fc = random_class(&mut rng, 1e3);
        let (m, big_l) = (fc.m(), fc.big_l());
        let step = 2.0 / (m + big_l);
        // |1 - step * lambda| is maximized at an endpoint
        let oracle = (1.0 - step * m).abs().max((1.0 - step * big_l).abs());
        assert!((oracle - (big_l - m) / (big_l + m)).abs() < 1e-12);
        let report = worst_case_rho(&preset(Preset::GradientDescent, &fc), &fc, &SweepOptions::default());
        worst = worst.max((report.worst_rho - oracle).abs());
    }
    check(worst <= 1e-9, format!("max |worst_rho - (L-m)/(L+m)| = {worst:e} over 20 classes"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1  optimal rate values", rho_star_values),
        ("AC2  heavy-ball tightness", heavy_ball_tightness),
        ("AC3  random-method lower bound", lower_bound_sampling),
        ("AC4  Pick test equivalence", pick_equivalence),
        ("AC5  conformal map identities", conformal_identities),
        ("AC6  block diagonalization", block_diagonalization),
        ("AC7  characteristic polynomial", characteristic_consistency),
        ("AC8  empirical vs spectral rate", empirical_rate_matches_spectrum),
        ("AC9  fixed point", minimizer_is_fixed_point),
        ("AC10 gradient descent closed form", gradient_descent_closed_form),
    ];
    let mut failures = 0;
    for (name, criterion) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(criterion).unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  ({elapsed:.2}s)  {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}  ({elapsed:.2}s)  {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
