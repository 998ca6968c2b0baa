//! Independent ground truth for validating the engine.
//!
//! Two kinds of oracle live here. [`ClosedFormFamily`] carries the classical
//! laws whose Stieltjes transforms are known in closed form (semicircle,
//! arcsine, Marchenko-Pastur); they are evaluated directly from branch-safe
//! algebra, sharing no code with the quadrature-based engine. [`rmt_sample`]
//! generates eigenvalues of A + U B U* with deterministic diagonals and a
//! Haar unitary U, the random-matrix model whose large-n spectrum the free
//! convolution describes; [`distance_ks`] compares such a spectrum with an
//! engine density grid through the Kolmogorov-Smirnov statistic.
//!
//! Randomness comes from seeded ChaCha8 streams (one stream per sample), so
//! every spectrum is reproducible from `(n_matrix, n_samples, seed)` alone.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::measure::JacobiMeasure;

/// A law with closed-form Stieltjes transform, density and support.
///
/// All families are centered (mean zero), matching the convention of
/// [`JacobiMeasure`]; for Marchenko-Pastur this means the standard law
/// shifted left by its mean 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormFamily {
    Semicircle { variance: f64 },
    Arcsine { radius: f64 },
    MarchenkoPastur { ratio: f64 },
}

/// Principal square root of each factor separately. The product
/// sqrt(z - a) * sqrt(z - b) picks the branch of sqrt((z-a)(z-b)) that is
/// analytic off [a, b] and behaves like +z at large |z|, which is the branch
/// every closed form below needs.
fn edge_root(z: Complex64, a: f64, b: f64) -> Complex64 {
    (z - a).sqrt() * (z - b).sqrt()
}

impl ClosedFormFamily {
    pub fn semicircle(variance: f64) -> Self {
        assert!(variance > 0.0);
        ClosedFormFamily::Semicircle { variance }
    }

    pub fn arcsine(radius: f64) -> Self {
        assert!(radius > 0.0);
        ClosedFormFamily::Arcsine { radius }
    }

    pub fn marchenko_pastur(ratio: f64) -> Self {
        assert!(0.0 < ratio && ratio < 1.0);
        ClosedFormFamily::MarchenkoPastur { ratio }
    }

    /// Support interval (closed) of the law.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ClosedFormFamily::Semicircle { variance } => {
                let r = 2.0 * variance.sqrt();
                (-r, r)
            }
            ClosedFormFamily::Arcsine { radius } => (-radius, radius),
            ClosedFormFamily::MarchenkoPastur { ratio } => {
                let s = ratio.sqrt();
                // Centered: the standard support shifted by the mean 1.
                ((1.0 - s) * (1.0 - s) - 1.0, (1.0 + s) * (1.0 + s) - 1.0)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ClosedFormFamily::Semicircle { variance } => variance,
            ClosedFormFamily::Arcsine { radius } => 0.5 * radius * radius,
            ClosedFormFamily::MarchenkoPastur { ratio } => ratio,
        }
    }

    /// Closed-form Stieltjes transform, valid off the closed support.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        match *self {
            ClosedFormFamily::Semicircle { variance } => {
                let t = variance;
                let r = 2.0 * t.sqrt();
                (-z + edge_root(z, -r, r)) / (2.0 * t)
            }
            ClosedFormFamily::Arcsine { radius } => -1.0 / edge_root(z, -radius, radius),
            ClosedFormFamily::MarchenkoPastur { ratio } => {
                let l = ratio;
                // Standard (uncentered) transform evaluated at z + 1.
                let zu = z + 1.0;
                let s = l.sqrt();
                let lo = (1.0 - s) * (1.0 - s);
                let hi = (1.0 + s) * (1.0 + s);
                ((1.0 - l - zu) + edge_root(zu, lo, hi)) / (2.0 * l * zu)
            }
        }
    }

    /// Closed-form density (zero outside the open support interval).
    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo || x >= hi {
            return 0.0;
        }
        match *self {
            ClosedFormFamily::Semicircle { variance } => {
                let t = variance;
                (4.0 * t - x * x).sqrt() / (2.0 * std::f64::consts::PI * t)
            }
            ClosedFormFamily::Arcsine { radius } => {
                1.0 / (std::f64::consts::PI * (radius * radius - x * x).sqrt())
            }
            ClosedFormFamily::MarchenkoPastur { ratio } => {
                let xu = x + 1.0;
                let (lo_u, hi_u) = (lo + 1.0, hi + 1.0);
                ((xu - lo_u) * (hi_u - xu)).sqrt()
                    / (2.0 * std::f64::consts::PI * ratio * xu)
            }
        }
    }
}

/// Pooled eigenvalues of repeated draws of A + U B U*, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    eigenvalues: Vec<f64>,
    n_matrix: usize,
    n_samples: usize,
    seed: u64,
}

/// Metadata sidecar for a spectrum export.
#[derive(Debug, Serialize)]
struct SpectrumMeta {
    n_matrix: usize,
    n_samples: usize,
    seed: u64,
}

impl EmpiricalSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_matrix(&self) -> usize {
        self.n_matrix
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical variance around the empirical mean.
    pub fn variance(&self) -> f64 {
        let n = self.eigenvalues.len() as f64;
        let mean = self.eigenvalues.iter().sum::<f64>() / n;
        self.eigenvalues.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n
    }

    /// Single-column CSV with header `eigenvalue`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(24 * self.eigenvalues.len() + 16);
        out.push_str("eigenvalue\n");
        for e in &self.eigenvalues {
            out.push_str(&format!("{e:.16e}\n"));
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumMeta {
            n_matrix: self.n_matrix,
            n_samples: self.n_samples,
            seed: self.seed,
        })
        .expect("spectrum metadata serialization")
    }
}

/// A Haar-distributed unitary matrix: QR of a complex Ginibre matrix with
/// the R diagonal's phases folded into Q.
fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let ginibre = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Without this normalization QR is only unique up to phases and Q is
    // not Haar distributed.
    for j in 0..n {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Eigenvalues of A + U B U* for one Haar draw, with A = diag(a), B = diag(b).
fn one_sample(a: &[f64], b: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = a.len();
    let u = haar_unitary(n, rng);
    let d_b = DVector::from_iterator(n, b.iter().map(|&x| Complex64::new(x, 0.0)));
    let mut m = &u * DMatrix::from_diagonal(&d_b) * u.adjoint();
    for i in 0..n {
        m[(i, i)] += Complex64::new(a[i], 0.0);
    }
    // Hermitize against rounding before the symmetric eigensolver.
    let m = (m.adjoint() + &m) * Complex64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

/// Draws `n_samples` spectra of A + U B U* where A and B hold the midpoint
/// quantiles of the two measures and U is a fresh Haar unitary per sample.
///
/// Deterministic: sample k uses ChaCha8 stream k+1 of the given seed, so
/// results do not depend on scheduling, and the same seed reproduces the
/// same spectrum.
pub fn rmt_sample(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    n_matrix: usize,
    n_samples: usize,
    seed: u64,
) -> Result<EmpiricalSpectrum> {
    if n_matrix < 2 {
        return Err(Error::Invalid(format!(
            "n_matrix must be at least 2, got {n_matrix}"
        )));
    }
    if n_samples < 1 {
        return Err(Error::Invalid(format!(
            "n_samples must be at least 1, got {n_samples}"
        )));
    }

    // Deterministic diagonals from midpoint quantiles, so the Haar unitary
    // is the only source of randomness.
    let quantiles = |mu: &JacobiMeasure| -> Result<Vec<f64>> {
        (1..=n_matrix)
            .map(|j| mu.quantile((j as f64 - 0.5) / n_matrix as f64))
            .collect()
    };
    let a = quantiles(mu_a)?;
    let b = quantiles(mu_b)?;

    let mut eigenvalues: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            one_sample(&a, &b, &mut rng)
        })
        .collect();
    eigenvalues.sort_by(|p, q| p.total_cmp(q));

    Ok(EmpiricalSpectrum {
        eigenvalues,
        n_matrix,
        n_samples,
        seed,
    })
}

/// Kolmogorov-Smirnov distance between an empirical spectrum and the
/// distribution function carried by a density grid, the grid CDF being
/// extended by 0 to the left of the support and by the total mass to the
/// right.
pub fn distance_ks(spectrum: &EmpiricalSpectrum, grid: &DensityGrid) -> f64 {
    let m = spectrum.eigenvalues.len();
    let mut sup = 0.0f64;
    for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
        let f = grid.cdf_extended(e);
        let below = i as f64 / m as f64;
        let above = (i + 1) as f64 / m as f64;
        sup = sup.max((f - below).abs()).max((f - above).abs());
    }
    sup
}
