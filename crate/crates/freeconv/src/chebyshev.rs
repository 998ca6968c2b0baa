//! Chebyshev series on an interval.
//!
//! The smooth factor of a Jacobi-type measure is stored as coefficients of a
//! Chebyshev expansion h(x) = sum_k c_k T_k(u), u = (2x - a - b)/(b - a).
//! This module provides evaluation (Clenshaw recurrence), interpolation on
//! Chebyshev-Lobatto points, and an adaptive fit for constructing factors
//! like the 1/x of the Marchenko-Pastur density.

/// Evaluate sum_k coeffs[k] T_k(u) for u in [-1, 1] by the Clenshaw
/// recurrence. An empty coefficient list evaluates to zero.
pub fn clenshaw(coeffs: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().rev() {
        let b0 = 2.0 * u * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    // Clenshaw for T_k: value = b1 - u*b2 after absorbing the halved T_0 term;
    // with the plain convention used here the correction is u*b2 removed once.
    b1 - u * b2
}

/// Map x in [lower, upper] to the reference coordinate u in [-1, 1].
pub fn to_reference(x: f64, lower: f64, upper: f64) -> f64 {
    (2.0 * x - lower - upper) / (upper - lower)
}

/// Evaluate a Chebyshev series given on [lower, upper] at the point x.
pub fn eval_on(coeffs: &[f64], lower: f64, upper: f64, x: f64) -> f64 {
    clenshaw(coeffs, to_reference(x, lower, upper))
}

/// The n Chebyshev-Lobatto points cos(pi*j/(n-1)), j = 0..n, in descending
/// order (from +1 to -1). Requires n >= 2.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let big_n = (n - 1) as f64;
    (0..n)
        .map(|j| (std::f64::consts::PI * j as f64 / big_n).cos())
        .collect()
}

/// Interpolate samples taken at the n Lobatto points (descending order, as
/// produced by [`lobatto_points`]) into Chebyshev coefficients.
///
/// This is the type-I discrete cosine transform written out directly; the
/// n^2 cost only matters at construction time, never in the evaluation hot
/// path.
pub fn lobatto_to_coeffs(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 2);
    let big_n = (n - 1) as f64;
    let mut coeffs = vec![0.0; n];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.5 * (samples[0] + if k % 2 == 0 { samples[n - 1] } else { -samples[n - 1] });
        for (j, &s) in samples.iter().enumerate().take(n - 1).skip(1) {
            acc += s * (std::f64::consts::PI * (k * j) as f64 / big_n).cos();
        }
        *c = 2.0 * acc / big_n;
    }
    // The plain Clenshaw convention above expects the k = 0 coefficient at
    // full weight and the k = n-1 coefficient at half weight.
    coeffs[0] *= 0.5;
    coeffs[n - 1] *= 0.5;
    coeffs
}

/// Fit f on [lower, upper] adaptively, doubling the node count until the
/// trailing coefficients fall below `tol` relative to the largest one, up to
/// `max_n` points. Returns the truncated coefficient list.
pub fn fit_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    tol: f64,
    max_n: usize,
) -> Vec<f64> {
    let mut n = 17;
    loop {
        let pts = lobatto_points(n);
        let samples: Vec<f64> = pts
            .iter()
            .map(|&u| f(0.5 * (lower + upper) + 0.5 * (upper - lower) * u))
            .collect();
        let coeffs = lobatto_to_coeffs(&samples);
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let tail = coeffs[n - 3..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if tail <= tol * scale || n >= max_n {
            // Drop negligible trailing coefficients before returning.
            let cut = coeffs
                .iter()
                .rposition(|c| c.abs() > tol * scale)
                .unwrap_or(0);
            return coeffs[..=cut].to_vec();
        }
        n = 2 * n - 1;
    }
}
