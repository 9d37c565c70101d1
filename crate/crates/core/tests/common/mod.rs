//! Test-only oracles, independent of the library's computation paths.
#![allow(dead_code)]

use momentum_margin::{FunctionClass, Method, MethodSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Characteristic polynomial `det(zI - A)` (monic, descending powers) by the
/// Faddeev-LeVerrier recursion.
pub fn faddeev_leverrier(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let identity = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &identity * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Largest distance in a greedy nearest-neighbour pairing of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets differ in size");
    let mut unused: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (idx, d) = unused
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        worst = worst.max(d);
        unused.swap_remove(idx);
    }
    worst
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    a.complex_eigenvalues().iter().copied().collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid method with memory depth up to `max_k`; coefficients
/// uniform on [-1, 1] with gamma shifted onto the affine constraint.
pub fn random_method(rng: &mut ChaCha8Rng, max_k: usize) -> Method {
    let k = rng.random_range(1..=max_k);
    let l = rng.random_range(0..=k);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let beta = draw(k);
    let mut alpha = draw(l + 1);
    while alpha.iter().sum::<f64>().abs() < 1e-3 {
        alpha = draw(l + 1);
    }
    let mut gamma = draw(k - l + 1);
    let last = gamma.len() - 1;
    gamma[last] = 1.0 - gamma[..last].iter().sum::<f64>();
    Method::new(MethodSpec { k, l, alpha, beta, gamma }).unwrap()
}

/// Random class with `L/m` log-uniform on `[1, max_ratio]`.
pub fn random_class(rng: &mut ChaCha8Rng, max_ratio: f64) -> FunctionClass {
    let m = 10f64.powf(rng.random_range(-2.0..2.0));
    let ratio = max_ratio.powf(rng.random_range(0.0..1.0));
    FunctionClass::new(m, m * ratio).unwrap()
}
