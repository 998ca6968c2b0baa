//! Jacobi-type probability measures and their Stieltjes-analytic kernels.
//!
//! A measure here has a density of the form
//!
//! ```text
//!     d mu(x) = (1/Z) (x - a)^{t_minus} (b - x)^{t_plus} h(x) dx
//! ```
//!
//! on a single interval [a, b], with edge exponents in (-1, 1) and a smooth
//! strictly positive factor h given by its Chebyshev coefficients on [a, b].
//! Measures are normalized and centered at construction: the interval is
//! translated so the mean is zero, which is the convention every downstream
//! transform assumes.
//!
//! All analytic kernels (Stieltjes transform, its derivatives, the
//! reciprocal Cauchy transform F = -1/m, and the weighted integrals used by
//! the subordination solver) reduce to integrals of smooth-times-endpoint-
//! singular integrands. Far from the support these are handled by a cached
//! ladder of Gauss-Jacobi rules of doubling order; once the evaluation point
//! comes within a small fraction of the support half-width the integrand
//! develops a near-pole and the code switches to tanh-sinh quadrature split
//! at the projection of the pole onto the interval.

use num_complex::Complex64;
use once_cell::sync::OnceCell;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::chebyshev;
use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh_complex, tanh_sinh_table, QuadratureRule};

/// Orders of the cached quadrature ladder. Evaluation walks up the ladder
/// until two consecutive levels agree to [`LADDER_TOL`].
const LADDER: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// Relative agreement required between consecutive ladder levels.
const LADDER_TOL: f64 = 1e-12;

/// Relative tolerance handed to tanh-sinh refinement on the near path.
const NEAR_TOL: f64 = 5e-14;

/// Fraction of the support half-width below which a real evaluation point
/// leaves the Gauss-Jacobi ladder for the cached tanh-sinh tables. Real
/// points must reach the 1e-12 support floor, far beyond any polynomial
/// rule, and the cached tables make the early handoff free.
const NEAR_FACTOR_REAL: f64 = 5e-2;

/// Minimal per-node geometric decay, ln of the Bernstein ellipse radius
/// through the evaluation point, for a complex point to stay on the
/// ladder. The ladder error at n nodes is about rho^(-2n), so the n = 2048
/// rung certifies 1e-12 agreement with its successor once ln rho exceeds
/// 34.5 / 4096; the factor-two margin here puts the certifying pair one
/// level lower. The radius, not the euclidean distance, is the right
/// yardstick: a pole at height d above the middle of the support has
/// ln rho ~ d / halfwidth, while above an endpoint ln rho ~ sqrt(2 d /
/// halfwidth), so shallow points near the corners are far easier for the
/// ladder than the same distance mid-interval.
const MIN_LADDER_DECAY: f64 = 1.7e-2;

/// Hard floor on the distance from an evaluation point to the support.
/// Below this the kernels lose all relative accuracy in f64.
pub const SUPPORT_DISTANCE_FLOOR: f64 = 1e-12;

type Cache = [OnceCell<QuadratureRule>; LADDER.len()];

/// A bulk Gauss-Jacobi level with the smooth factor premultiplied into the
/// weights, so ladder evaluation is one kernel call per node.
#[derive(Debug, Clone)]
struct BulkLevel {
    nodes: Vec<f64>,
    /// weight_k * h(x_k); the power-law envelope is part of the rule.
    wh: Vec<f64>,
}

type BulkCache = [OnceCell<BulkLevel>; LADDER.len()];

/// One cached tanh-sinh node of the real-axis near path: distances to the
/// support endpoints and the quadrature weight with the full measure density
/// folded in, so an evaluation is one kernel call per node.
#[derive(Debug, Clone, Copy)]
struct NearNode {
    da: f64,
    db: f64,
    wdens: f64,
}

fn empty_bulk_cache() -> BulkCache {
    [(); LADDER.len()].map(|_| OnceCell::new())
}

fn empty_cache() -> Cache {
    [(); LADDER.len()].map(|_| OnceCell::new())
}

/// Walks the quadrature ladder until two consecutive levels agree to
/// [`LADDER_TOL`] in relative terms, returning the finer value.
fn ladder_limit<G: Fn(usize) -> f64>(eval: G) -> Result<f64> {
    let mut prev = eval(0);
    let mut defect = f64::INFINITY;
    for level in 1..LADDER.len() {
        let cur = eval(level);
        defect = (cur - prev).abs() / cur.abs().max(1e-300);
        if defect <= LADDER_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        iterations: LADDER.len() as u64,
        residual: defect,
        tol: LADDER_TOL,
    })
}

/// A centered, normalized Jacobi-type measure on a single interval.
#[derive(Debug, Clone)]
pub struct JacobiMeasure {
    lower: f64,
    upper: f64,
    t_minus: f64,
    t_plus: f64,
    /// Chebyshev coefficients of h on [lower, upper].
    smooth_coeffs: Vec<f64>,
    /// Normalization Z, fixed at construction.
    norm: f64,
    /// Translation applied at construction to center the measure.
    shift: f64,
    /// Gauss-Jacobi rules on [lower, upper] with the measure's own exponents
    /// and the smooth factor folded into the weights.
    bulk_rules: BulkCache,
    /// Reference rules with exponents (0, t_minus): left-edge partial masses.
    left_rules: Cache,
    /// Reference rules with exponents (t_plus, 0): right-edge partial masses.
    right_rules: Cache,
    /// Tanh-sinh levels on [lower, upper] with the density at the nodes,
    /// for real-axis evaluation close to the support.
    near_levels: OnceCell<Vec<Vec<NearNode>>>,
    variance: OnceCell<f64>,
}

impl PartialEq for JacobiMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
            && self.upper == other.upper
            && self.t_minus == other.t_minus
            && self.t_plus == other.t_plus
            && self.smooth_coeffs == other.smooth_coeffs
            && self.norm == other.norm
            && self.shift == other.shift
    }
}

impl JacobiMeasure {
    /// Builds a measure from raw parameters, then normalizes and centers it.
    ///
    /// `smooth_coeffs` are Chebyshev coefficients of h on [lower, upper]
    /// (centering translates them to the shifted interval unchanged, since a
    /// translation maps Chebyshev expansions to Chebyshev expansions with
    /// the same coefficients). Fails if the interval is degenerate, an
    /// exponent leaves (-1, 1), or h is not strictly positive.
    pub fn new(
        lower: f64,
        upper: f64,
        t_minus: f64,
        t_plus: f64,
        smooth_coeffs: Vec<f64>,
    ) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || !(lower < upper) {
            return Err(Error::DegenerateSupport { lower, upper });
        }
        for (name, t) in [("t_minus", t_minus), ("t_plus", t_plus)] {
            if !t.is_finite() || t <= -1.0 || t >= 1.0 {
                return Err(Error::ExponentOutOfRange {
                    name: name.to_string(),
                    value: t,
                });
            }
        }
        if smooth_coeffs.is_empty() || smooth_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(
                "smooth factor needs at least one finite Chebyshev coefficient".to_string(),
            ));
        }

        // Positivity of h, checked on a Chebyshev-Lobatto grid dense enough
        // to resolve the expansion plus a margin between grid points.
        let n_check = (8 * smooth_coeffs.len() + 1).max(513);
        let mut h_min = f64::INFINITY;
        for j in 0..n_check {
            let u = (std::f64::consts::PI * j as f64 / (n_check - 1) as f64).cos();
            let h = chebyshev::clenshaw(&smooth_coeffs, u);
            if h < h_min {
                h_min = h;
            }
        }
        if !(h_min > 0.0) {
            return Err(Error::NonPositiveSmoothFactor { min: h_min });
        }

        let mut measure = JacobiMeasure {
            lower,
            upper,
            t_minus,
            t_plus,
            smooth_coeffs,
            norm: 1.0,
            shift: 0.0,
            bulk_rules: empty_bulk_cache(),
            left_rules: empty_cache(),
            right_rules: empty_cache(),
            near_levels: OnceCell::new(),
            variance: OnceCell::new(),
        };
        let mass = measure.ladder_real(|_| 1.0)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Invalid(format!(
                "total mass of the unnormalized density came out as {mass}"
            )));
        }
        measure.norm = mass;
        let mut mean = measure.moment(1)?;
        // Snap means at quadrature noise level to zero so symmetric inputs
        // stay exactly symmetric.
        if mean.abs() <= 1e-13 * (upper - lower) {
            mean = 0.0;
        }

        // Translate so the mean sits at the origin. Z and the Chebyshev
        // coefficients are translation invariant.
        Ok(JacobiMeasure {
            lower: lower - mean,
            upper: upper - mean,
            shift: -mean,
            bulk_rules: empty_bulk_cache(),
            left_rules: empty_cache(),
            right_rules: empty_cache(),
            near_levels: OnceCell::new(),
            variance: OnceCell::new(),
            ..measure
        })
    }

    /// Semicircle law with the given variance: exponents (1/2, 1/2) on
    /// [-2 sqrt(t), 2 sqrt(t)], constant smooth factor.
    pub fn semicircle(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Invalid(format!(
                "semicircle variance must be positive and finite, got {variance}"
            )));
        }
        let r = 2.0 * variance.sqrt();
        Self::new(-r, r, 0.5, 0.5, vec![1.0])
    }

    /// Arcsine law on [-r, r]: exponents (-1/2, -1/2), constant smooth
    /// factor.
    pub fn arcsine(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Invalid(format!(
                "arcsine radius must be positive and finite, got {radius}"
            )));
        }
        Self::new(-radius, radius, -0.5, -0.5, vec![1.0])
    }

    /// Marchenko-Pastur law with aspect ratio in (0, 1), centered. On its
    /// support [(1-sqrt(r))^2, (1+sqrt(r))^2] the density is
    /// sqrt((x - l-)(l+ - x)) / (2 pi r x), which is Jacobi type with
    /// exponents (1/2, 1/2) and smooth factor proportional to 1/x.
    pub fn marchenko_pastur(ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && 0.0 < ratio && ratio < 1.0) {
            return Err(Error::Invalid(format!(
                "Marchenko-Pastur ratio must lie in (0, 1), got {ratio}"
            )));
        }
        let s = ratio.sqrt();
        let lo = (1.0 - s) * (1.0 - s);
        let hi = (1.0 + s) * (1.0 + s);
        // 1/x is analytic on [lo, hi] (lo > 0), so the Chebyshev fit
        // converges geometrically; the tolerance is near machine precision.
        let coeffs = chebyshev::fit_adaptive(|x| 1.0 / x, lo, hi, 1e-15, 4097);
        Self::new(lo, hi, 0.5, 0.5, coeffs)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn t_minus(&self) -> f64 {
        self.t_minus
    }

    pub fn t_plus(&self) -> f64 {
        self.t_plus
    }

    pub fn smooth_coeffs(&self) -> &[f64] {
        &self.smooth_coeffs
    }

    /// Normalization constant Z of the unnormalized density.
    pub fn norm_const(&self) -> f64 {
        self.norm
    }

    /// Translation that was applied to center the measure (new = old + shift).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    /// The smooth factor h at x.
    pub fn smooth_factor(&self, x: f64) -> f64 {
        chebyshev::eval_on(&self.smooth_coeffs, self.lower, self.upper, x)
    }

    /// Density of the measure at x (zero outside the open support interval).
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.lower || x >= self.upper {
            return 0.0;
        }
        (x - self.lower).powf(self.t_minus)
            * (self.upper - x).powf(self.t_plus)
            * self.smooth_factor(x)
            / self.norm
    }

    /// Distance from z to the support interval.
    pub fn support_distance(&self, z: Complex64) -> f64 {
        let dx = if z.re < self.lower {
            self.lower - z.re
        } else if z.re > self.upper {
            z.re - self.upper
        } else {
            0.0
        };
        dx.hypot(z.im)
    }

    /// Rejects evaluation points on or too close to the support.
    fn check_point(&self, z: Complex64) -> Result<()> {
        if !z.is_finite() {
            return Err(Error::Invalid(format!("non-finite evaluation point {z}")));
        }
        let dist = self.support_distance(z);
        if z.im == 0.0 && self.lower <= z.re && z.re <= self.upper {
            return Err(Error::EvaluationOnSupport {
                x: z.re,
                lower: self.lower,
                upper: self.upper,
            });
        }
        if dist < SUPPORT_DISTANCE_FLOOR {
            return Err(Error::TooCloseToSupport {
                dist,
                floor: SUPPORT_DISTANCE_FLOOR,
            });
        }
        Ok(())
    }

    fn near_support(&self, z: Complex64) -> bool {
        if z.im == 0.0 {
            return self.support_distance(z) < NEAR_FACTOR_REAL * self.halfwidth();
        }
        // Bernstein ellipse radius of z relative to the support interval.
        // The square root has two reciprocal branches; taking the modulus
        // of whichever lands outside the unit circle is branch-safe.
        let u = (2.0 * z - Complex64::new(self.lower + self.upper, 0.0)) / (self.upper - self.lower);
        let s = (u * u - 1.0).sqrt();
        let rho = (u + s).norm().max((u - s).norm());
        rho.ln() < MIN_LADDER_DECAY
    }

    /// Gauss-Jacobi rule for the bulk integrals, built on demand with the
    /// smooth factor evaluated into the weights once.
    fn bulk_rule(&self, level: usize) -> &BulkLevel {
        self.bulk_rules[level].get_or_init(|| {
            let rule = QuadratureRule::gauss_jacobi(LADDER[level], self.t_plus, self.t_minus)
                .mapped(self.lower, self.upper, self.t_plus, self.t_minus);
            let wh = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&x, &w)| w * self.smooth_factor(x))
                .collect();
            BulkLevel {
                nodes: rule.nodes().to_vec(),
                wh,
            }
        })
    }

    /// Integrates g against the measure itself with the ladder, i.e.
    /// (1/Z) * int (x-a)^{t-} (b-x)^{t+} h(x) g(x) dx, for complex g.
    ///
    /// Convergence is judged relative to the L1 mass of the integrand, not
    /// to the value itself: integrals that vanish by symmetry (odd moments
    /// of a centered measure) would otherwise never pass a plain relative
    /// test, while for one-signed integrands the two notions coincide.
    fn ladder_complex<G: Fn(f64) -> Complex64>(&self, g: G) -> Result<Complex64> {
        let eval = |level: usize| {
            let rule = self.bulk_rule(level);
            let mut total = Complex64::new(0.0, 0.0);
            let mut l1 = 0.0f64;
            for (&x, &wh) in rule.nodes.iter().zip(&rule.wh) {
                let v = g(x) * wh;
                total += v;
                l1 += v.norm();
            }
            (total, l1)
        };
        let (mut prev, _) = eval(0);
        let mut defect = f64::INFINITY;
        for level in 1..LADDER.len() {
            let (cur, l1) = eval(level);
            defect = (cur - prev).norm() / l1.max(1e-300);
            if defect <= LADDER_TOL {
                return Ok(cur / self.norm);
            }
            prev = cur;
        }
        Err(Error::NoConvergence {
            iterations: LADDER.len() as u64,
            residual: defect,
            tol: LADDER_TOL,
        })
    }

    fn ladder_real<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        self.ladder_complex(|x| Complex64::new(g(x), 0.0)).map(|v| v.re)
    }

    /// Near-support integral of kernel(x, x - Re z) against the measure,
    /// split at the projection of z onto the support so the sample points
    /// cluster around the near-pole. The kernel receives x - Re z computed
    /// without cancellation.
    fn near_integral<K: Fn(f64, f64) -> Complex64>(&self, re: f64, kernel: K) -> Complex64 {
        let (a, b) = (self.lower, self.upper);
        let x0 = re.clamp(a, b);
        let mut total = Complex64::new(0.0, 0.0);
        if x0 > a {
            // Left piece [a, x0]: x = x0 - db, so x - re = (x0 - re) - db.
            total += tanh_sinh_complex(a, x0, NEAR_TOL, |x, da, db| {
                let dbx = (b - x0) + db;
                let w = da.powf(self.t_minus) * dbx.powf(self.t_plus) * self.smooth_factor(x);
                kernel(x, (x0 - re) - db) * w
            });
        }
        if x0 < b {
            // Right piece [x0, b]: x = x0 + da, so x - re = (x0 - re) + da.
            total += tanh_sinh_complex(x0, b, NEAR_TOL, |x, da, db| {
                let dax = (x0 - a) + da;
                let w = dax.powf(self.t_minus) * db.powf(self.t_plus) * self.smooth_factor(x);
                kernel(x, (x0 - re) + da) * w
            });
        }
        total / self.norm
    }

    /// The tanh-sinh levels of [`near_integral`](Self::near_integral)
    /// specialized to a real evaluation point outside the support, where
    /// the split at the projection degenerates and the rule covers the
    /// whole interval. The density values at the nodes do not depend on
    /// the evaluation point, so they are computed once.
    fn near_real_levels(&self) -> &[Vec<NearNode>] {
        self.near_levels.get_or_init(|| {
            let r = 0.5 * (self.upper - self.lower);
            tanh_sinh_table()
                .iter()
                .map(|level| {
                    level
                        .iter()
                        .filter_map(|node| {
                            let da = r * node.dm;
                            let db = r * node.dp;
                            let x = if node.dm >= node.dp {
                                self.upper - db
                            } else {
                                self.lower + da
                            };
                            let wdens = da.powf(self.t_minus)
                                * db.powf(self.t_plus)
                                * self.smooth_factor(x)
                                * (r * node.w)
                                / self.norm;
                            (wdens.is_finite() && wdens != 0.0)
                                .then_some(NearNode { da, db, wdens })
                        })
                        .collect()
                })
                .collect()
        })
    }

    /// Stieltjes transform at a real point near (but outside) the support,
    /// from the cached node table. The integrand is single-signed there, so
    /// per-level relative agreement is a sound stopping rule.
    fn near_real_m(&self, w: f64) -> f64 {
        let left = w < self.lower;
        let gap = if left { self.lower - w } else { w - self.upper };
        let mut h = 1.0;
        let mut cum = 0.0;
        let mut total = f64::INFINITY;
        for (lvl, level) in self.near_real_levels().iter().enumerate() {
            if lvl > 0 {
                h *= 0.5;
            }
            for node in level {
                let dx = if left { gap + node.da } else { -(gap + node.db) };
                cum += node.wdens / dx;
            }
            let refined = cum * h;
            let err = (refined - total).abs();
            let done = err <= NEAR_TOL * refined.abs().max(1e-300);
            total = refined;
            if done {
                break;
            }
        }
        total
    }

    /// m, m' and m'' at a real point near the support, fused into a single
    /// adaptive pass over the cached nodes.
    fn near_real_m123(&self, w: f64) -> (f64, f64, f64) {
        let left = w < self.lower;
        let gap = if left { self.lower - w } else { w - self.upper };
        let mut h = 1.0;
        let mut cum = (0.0, 0.0, 0.0);
        let mut total = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for (lvl, level) in self.near_real_levels().iter().enumerate() {
            if lvl > 0 {
                h *= 0.5;
            }
            for node in level {
                let dx = if left { gap + node.da } else { -(gap + node.db) };
                let r = node.wdens / dx;
                let r2 = r / dx;
                cum.0 += r;
                cum.1 += r2;
                cum.2 += 2.0 * r2 / dx;
            }
            let refined = (cum.0 * h, cum.1 * h, cum.2 * h);
            let done = (refined.0 - total.0).abs() <= NEAR_TOL * refined.0.abs().max(1e-300)
                && (refined.1 - total.1).abs() <= NEAR_TOL * refined.1.abs().max(1e-300)
                && (refined.2 - total.2).abs() <= NEAR_TOL * refined.2.abs().max(1e-300);
            total = refined;
            if done {
                break;
            }
        }
        total
    }

    /// Stieltjes transform m(z) = int d mu(x) / (x - z).
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        self.check_point(z)?;
        if self.near_support(z) {
            if z.im == 0.0 {
                return Ok(Complex64::new(self.near_real_m(z.re), 0.0));
            }
            let im = z.im;
            Ok(self.near_integral(z.re, |_x, dx| 1.0 / Complex64::new(dx, -im)))
        } else {
            self.ladder_complex(|x| 1.0 / (x - z))
        }
    }

    /// Stieltjes transform together with its first two derivatives,
    /// m^(k)(z) = k! int d mu(x) / (x - z)^{k+1}.
    fn stieltjes_with_derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
        self.check_point(z)?;
        if self.near_support(z) {
            if z.im == 0.0 {
                let (m, m1, m2) = self.near_real_m123(z.re);
                return Ok((m.into(), m1.into(), m2.into()));
            }
            let im = z.im;
            let m = self.near_integral(z.re, |_x, dx| 1.0 / Complex64::new(dx, -im));
            let m1 = self.near_integral(z.re, |_x, dx| {
                let d = Complex64::new(dx, -im);
                1.0 / (d * d)
            });
            let m2 = self.near_integral(z.re, |_x, dx| {
                let d = Complex64::new(dx, -im);
                2.0 / (d * d * d)
            });
            Ok((m, m1, m2))
        } else {
            let m = self.ladder_complex(|x| 1.0 / (x - z))?;
            let m1 = self.ladder_complex(|x| {
                let d = x - z;
                1.0 / (d * d)
            })?;
            let m2 = self.ladder_complex(|x| {
                let d = x - z;
                2.0 / (d * d * d)
            })?;
            Ok((m, m1, m2))
        }
    }

    /// Reciprocal Cauchy transform F(z) = -1/m(z).
    pub fn reciprocal_f(&self, z: Complex64) -> Result<Complex64> {
        Ok(-1.0 / self.stieltjes(z)?)
    }

    /// F, F' and F'' at z, from the Stieltjes transform and its
    /// derivatives: F' = m'/m^2 and F'' = m''/m^2 - 2 m'^2 / m^3.
    pub fn f_derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
        let (m, m1, m2) = self.stieltjes_with_derivatives(z)?;
        let f = -1.0 / m;
        let f1 = m1 / (m * m);
        let f2 = m2 / (m * m) - 2.0 * m1 * m1 / (m * m * m);
        Ok((f, f1, f2))
    }

    /// Real-axis value of the Stieltjes transform outside the support.
    pub fn stieltjes_real(&self, w: f64) -> Result<f64> {
        Ok(self.stieltjes(Complex64::new(w, 0.0))?.re)
    }

    /// Real-axis F, F', F'' outside the support.
    pub fn f_derivatives_real(&self, w: f64) -> Result<(f64, f64, f64)> {
        let (f, f1, f2) = self.f_derivatives(Complex64::new(w, 0.0))?;
        Ok((f.re, f1.re, f2.re))
    }

    /// The weighted square integral I(w) = int d mu(x) / |x - w|^2.
    pub fn i_integral(&self, w: Complex64) -> Result<f64> {
        self.check_point(w)?;
        let im = w.im;
        if self.near_support(w) {
            if im == 0.0 {
                // On the real axis I coincides with m'.
                return Ok(self.near_real_m123(w.re).1);
            }
            Ok(self
                .near_integral(w.re, |_x, dx| {
                    Complex64::new(1.0 / (dx * dx + im * im), 0.0)
                })
                .re)
        } else {
            self.ladder_real(|x| {
                let dx = x - w.re;
                1.0 / (dx * dx + im * im)
            })
        }
    }

    /// The contraction indicator I-hat(w) = |m(w)|^{-2} Im m(w) / Im w - 1
    /// for complex w, and F'(w) - 1 on the real axis (its boundary value).
    ///
    /// I-hat is the I-integral of the reciprocal measure of mu at w; the
    /// subordination fixed-point map is a strict contraction wherever the
    /// product of the two I-hats is below one.
    pub fn i_hat(&self, w: Complex64) -> Result<f64> {
        self.check_point(w)?;
        if w.im != 0.0 {
            let m = self.stieltjes(w)?;
            Ok(m.im / (m.norm_sqr() * w.im) - 1.0)
        } else {
            let (_, f1, _) = self.f_derivatives_real(w.re)?;
            Ok(f1 - 1.0)
        }
    }

    /// k-th raw moment int x^k d mu(x).
    pub fn moment(&self, k: u32) -> Result<f64> {
        self.ladder_real(|x| x.powi(k as i32))
    }

    /// Variance of the measure. The mean is zero by construction, so this
    /// is the second raw moment.
    pub fn variance(&self) -> f64 {
        *self
            .variance
            .get_or_init(|| self.moment(2).expect("second moment of a compactly supported measure"))
    }

    /// Reference rule with exponents (0, t_minus) for left partial masses.
    fn left_rule(&self, level: usize) -> &QuadratureRule {
        self.left_rules[level]
            .get_or_init(|| QuadratureRule::gauss_jacobi(LADDER[level], 0.0, self.t_minus))
    }

    /// Reference rule with exponents (t_plus, 0) for right partial masses.
    fn right_rule(&self, level: usize) -> &QuadratureRule {
        self.right_rules[level]
            .get_or_init(|| QuadratureRule::gauss_jacobi(LADDER[level], self.t_plus, 0.0))
    }

    /// mu([a, x]) by a ladder of mapped reference rules. Only the singular
    /// endpoint factor at a is folded into the rule; the rest of the
    /// density is analytic on [a, x] whenever x stays left of b.
    fn cdf_from_left(&self, x: f64) -> Result<f64> {
        let a = self.lower;
        let half = 0.5 * (x - a);
        // int_a^x (s-a)^{t-} g(s) ds with s = a + half (1+u):
        // = half^{t-+1} int_{-1}^1 (1+u)^{t-} g(s(u)) du.
        let scale = half.powf(self.t_minus + 1.0);
        let g = |s: f64| (self.upper - s).powf(self.t_plus) * self.smooth_factor(s) / self.norm;
        let eval = |rule: &QuadratureRule| {
            let mut sum = 0.0;
            for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
                sum += w * g(a + half * (1.0 + u));
            }
            scale * sum
        };
        ladder_limit(|level| eval(self.left_rule(level)))
    }

    /// mu([x, b]), mirrored version of [`Self::cdf_from_left`].
    fn cdf_from_right(&self, x: f64) -> Result<f64> {
        let b = self.upper;
        let half = 0.5 * (b - x);
        let scale = half.powf(self.t_plus + 1.0);
        let g = |s: f64| (s - self.lower).powf(self.t_minus) * self.smooth_factor(s) / self.norm;
        let eval = |rule: &QuadratureRule| {
            let mut sum = 0.0;
            for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
                sum += w * g(x + half * (1.0 + u));
            }
            scale * sum
        };
        ladder_limit(|level| eval(self.right_rule(level)))
    }

    /// Distribution function mu((-inf, x]). Clamps to 0 and 1 outside the
    /// support. Integration always runs from the nearer endpoint so the
    /// integrand stays analytic on the integration interval.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Invalid(format!("non-finite cdf argument {x}")));
        }
        if x <= self.lower {
            return Ok(0.0);
        }
        if x >= self.upper {
            return Ok(1.0);
        }
        if x <= 0.5 * (self.lower + self.upper) {
            self.cdf_from_left(x)
        } else {
            Ok((1.0 - self.cdf_from_right(x)?).clamp(0.0, 1.0))
        }
    }

    /// Quantile function: the x with mu((-inf, x]) = q, for q in (0, 1).
    /// Bisection on the distribution function; the density may vanish or
    /// blow up at the edges, so no derivative-based refinement is used.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q.is_finite() && 0.0 < q && q < 1.0) {
            return Err(Error::QuantileFailure { q });
        }
        let (mut lo, mut hi) = (self.lower, self.upper);
        let tol = 1e-13 * self.halfwidth();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            let c = self.cdf(mid)?;
            if c < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::QuantileFailure { q })
    }

    /// The serializable description of this measure.
    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::Jacobi {
            support: [self.lower, self.upper],
            t_minus: self.t_minus,
            t_plus: self.t_plus,
            smooth_cheb: self.smooth_coeffs.clone(),
        }
    }
}

/// Parsed description of an input measure.
///
/// The JSON form is tagged by a `"type"` field: `"jacobi"` takes the raw
/// interval, exponents and Chebyshev coefficients, while `"semicircle"`,
/// `"arcsine"` and `"marchenko_pastur"` are closed-form shorthands taking a
/// single parameter. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Jacobi {
        support: [f64; 2],
        t_minus: f64,
        t_plus: f64,
        smooth_cheb: Vec<f64>,
    },
    Semicircle {
        variance: f64,
    },
    Arcsine {
        radius: f64,
    },
    MarchenkoPastur {
        ratio: f64,
    },
}

impl MeasureSpec {
    /// Parses a measure description from JSON, rejecting unknown fields.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Spec(format!("measure is not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    /// Same as [`Self::from_json`] for an already parsed JSON value.
    pub fn from_value(value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Spec("measure must be a JSON object".to_string()))?;
        let kind = obj
            .get("type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Spec("measure needs a string \"type\" field".to_string()))?;

        // The tag has been consumed; hand the remaining fields to a strict
        // per-variant deserializer so typos are reported, not ignored.
        let mut rest = obj.clone();
        rest.remove("type");
        let rest = serde_json::Value::Object(rest);
        let fail = |e: serde_json::Error| Error::Spec(format!("in measure of type {kind:?}: {e}"));

        match kind {
            "jacobi" => {
                #[derive(serde::Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Raw {
                    support: [f64; 2],
                    t_minus: f64,
                    t_plus: f64,
                    #[serde(default = "default_smooth")]
                    smooth_cheb: Vec<f64>,
                }
                fn default_smooth() -> Vec<f64> {
                    vec![1.0]
                }
                let raw: Raw = serde_json::from_value(rest).map_err(fail)?;
                Ok(MeasureSpec::Jacobi {
                    support: raw.support,
                    t_minus: raw.t_minus,
                    t_plus: raw.t_plus,
                    smooth_cheb: raw.smooth_cheb,
                })
            }
            "semicircle" => {
                #[derive(serde::Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Raw {
                    variance: f64,
                }
                let raw: Raw = serde_json::from_value(rest).map_err(fail)?;
                Ok(MeasureSpec::Semicircle {
                    variance: raw.variance,
                })
            }
            "arcsine" => {
                #[derive(serde::Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Raw {
                    radius: f64,
                }
                let raw: Raw = serde_json::from_value(rest).map_err(fail)?;
                Ok(MeasureSpec::Arcsine { radius: raw.radius })
            }
            "marchenko_pastur" => {
                #[derive(serde::Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Raw {
                    ratio: f64,
                }
                let raw: Raw = serde_json::from_value(rest).map_err(fail)?;
                Ok(MeasureSpec::MarchenkoPastur { ratio: raw.ratio })
            }
            other => Err(Error::Spec(format!(
                "unknown measure type {other:?} (expected jacobi, semicircle, arcsine or marchenko_pastur)"
            ))),
        }
    }

    /// Builds the actual measure (normalized and centered).
    pub fn build(&self) -> Result<JacobiMeasure> {
        match self {
            MeasureSpec::Jacobi {
                support,
                t_minus,
                t_plus,
                smooth_cheb,
            } => JacobiMeasure::new(support[0], support[1], *t_minus, *t_plus, smooth_cheb.clone()),
            MeasureSpec::Semicircle { variance } => JacobiMeasure::semicircle(*variance),
            MeasureSpec::Arcsine { radius } => JacobiMeasure::arcsine(*radius),
            MeasureSpec::MarchenkoPastur { ratio } => JacobiMeasure::marchenko_pastur(*ratio),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure spec serialization")
    }
}

impl Serialize for MeasureSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MeasureSpec::Jacobi {
                support,
                t_minus,
                t_plus,
                smooth_cheb,
            } => {
                let mut s = serializer.serialize_struct("MeasureSpec", 5)?;
                s.serialize_field("type", "jacobi")?;
                s.serialize_field("support", support)?;
                s.serialize_field("t_minus", t_minus)?;
                s.serialize_field("t_plus", t_plus)?;
                s.serialize_field("smooth_cheb", smooth_cheb)?;
                s.end()
            }
            MeasureSpec::Semicircle { variance } => {
                let mut s = serializer.serialize_struct("MeasureSpec", 2)?;
                s.serialize_field("type", "semicircle")?;
                s.serialize_field("variance", variance)?;
                s.end()
            }
            MeasureSpec::Arcsine { radius } => {
                let mut s = serializer.serialize_struct("MeasureSpec", 2)?;
                s.serialize_field("type", "arcsine")?;
                s.serialize_field("radius", radius)?;
                s.end()
            }
            MeasureSpec::MarchenkoPastur { ratio } => {
                let mut s = serializer.serialize_struct("MeasureSpec", 2)?;
                s.serialize_field("type", "marchenko_pastur")?;
                s.serialize_field("ratio", ratio)?;
                s.end()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ClosedFormFamily;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn semicircle_unit() -> JacobiMeasure {
        JacobiMeasure::semicircle(1.0).unwrap()
    }

    #[test]
    fn construction_validates_inputs() {
        assert!(matches!(
            JacobiMeasure::new(1.0, 1.0, 0.5, 0.5, vec![1.0]),
            Err(Error::DegenerateSupport { .. })
        ));
        assert!(matches!(
            JacobiMeasure::new(2.0, 1.0, 0.5, 0.5, vec![1.0]),
            Err(Error::DegenerateSupport { .. })
        ));
        assert!(matches!(
            JacobiMeasure::new(-1.0, 1.0, 1.0, 0.5, vec![1.0]),
            Err(Error::ExponentOutOfRange { .. })
        ));
        assert!(matches!(
            JacobiMeasure::new(-1.0, 1.0, 0.5, -1.0, vec![1.0]),
            Err(Error::ExponentOutOfRange { .. })
        ));
        // h(x) = x changes sign on [-1, 1].
        assert!(matches!(
            JacobiMeasure::new(-1.0, 1.0, 0.5, 0.5, vec![0.0, 1.0]),
            Err(Error::NonPositiveSmoothFactor { .. })
        ));
        assert!(JacobiMeasure::new(-1.0, 1.0, 0.5, 0.5, vec![]).is_err());
    }

    #[test]
    fn normalization_constants_match_closed_forms() {
        // Semicircle t = 1: Z = int_{-2}^{2} sqrt(4 - x^2) dx = 2 pi.
        let sc = semicircle_unit();
        assert_relative_eq!(sc.norm_const(), 2.0 * std::f64::consts::PI, max_relative = 1e-13);
        assert_eq!(sc.shift(), 0.0);

        // Arcsine: Z = pi for any radius.
        let arc = JacobiMeasure::arcsine(1.7).unwrap();
        assert_relative_eq!(arc.norm_const(), std::f64::consts::PI, max_relative = 1e-13);

        // Uniform on [0, 1] centers to [-1/2, 1/2].
        let uni = JacobiMeasure::new(0.0, 1.0, 0.0, 0.0, vec![1.0]).unwrap();
        assert_relative_eq!(uni.norm_const(), 1.0, max_relative = 1e-13);
        assert_abs_diff_eq!(uni.shift(), -0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(uni.lower(), -0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(uni.upper(), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn centering_kills_the_mean() {
        let cases = [
            JacobiMeasure::new(0.0, 3.0, -0.3, 0.7, vec![1.0, 0.25, 0.0, 0.125]).unwrap(),
            JacobiMeasure::marchenko_pastur(0.25).unwrap(),
            JacobiMeasure::new(-5.0, -1.0, 0.5, -0.5, vec![2.0, -0.4]).unwrap(),
        ];
        for m in &cases {
            let mean = m.moment(1).unwrap();
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10 * m.halfwidth());
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let sc = semicircle_unit();
        assert_relative_eq!(sc.moment(2).unwrap(), 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(sc.moment(3).unwrap(), 0.0, epsilon = 1e-12);
        // Catalan number C_2 = 2 for the fourth semicircle moment.
        assert_relative_eq!(sc.moment(4).unwrap(), 2.0, max_relative = 1e-12);

        let arc = JacobiMeasure::arcsine(2.0).unwrap();
        assert_relative_eq!(arc.moment(2).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(arc.variance(), 2.0, max_relative = 1e-12);

        // Marchenko-Pastur with ratio r has variance r after centering.
        let mp = JacobiMeasure::marchenko_pastur(0.5).unwrap();
        assert_relative_eq!(mp.variance(), 0.5, max_relative = 1e-11);
    }

    #[test]
    fn stieltjes_matches_semicircle_oracle() {
        let sc = semicircle_unit();
        let oracle = ClosedFormFamily::semicircle(1.0);
        let points = [
            Complex64::new(0.0, 1.0),
            Complex64::new(1.5, 0.5),
            Complex64::new(-2.0, 2.0),
            Complex64::new(0.3, 1e-2),
            Complex64::new(2.0000001, 1e-5),
            Complex64::new(-3.0, 0.0),
            Complex64::new(2.5, 0.0),
            Complex64::new(0.0, 1e3),
        ];
        for &z in &points {
            let got = sc.stieltjes(z).unwrap();
            let want = oracle.stieltjes(z);
            assert_relative_eq!(got.re, want.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(got.im, want.im, max_relative = 1e-10, epsilon = 1e-12);
        }
        // Spot value: m(i) = i (sqrt(5) - 1) / 2.
        let m_i = sc.stieltjes(Complex64::new(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(m_i.re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(m_i.im, 0.6180339887498949, max_relative = 1e-12);
    }

    #[test]
    fn stieltjes_matches_arcsine_oracle() {
        let arc = JacobiMeasure::arcsine(2.0).unwrap();
        let oracle = ClosedFormFamily::arcsine(2.0);
        for &z in &[
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.25),
            Complex64::new(-2.1, 1e-4),
            Complex64::new(3.0, 0.0),
        ] {
            let got = arc.stieltjes(z).unwrap();
            let want = oracle.stieltjes(z);
            assert_relative_eq!(got.re, want.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(got.im, want.im, max_relative = 1e-10, epsilon = 1e-12);
        }
        let m_i = arc.stieltjes(Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(m_i.im, 0.4472135954999579, max_relative = 1e-12);
    }

    #[test]
    fn stieltjes_matches_marchenko_pastur_oracle() {
        let mp = JacobiMeasure::marchenko_pastur(0.25).unwrap();
        let oracle = ClosedFormFamily::marchenko_pastur(0.25);
        for &z in &[
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.1),
            Complex64::new(-1.2, 0.0),
            Complex64::new(1.3, 1e-3),
        ] {
            let got = mp.stieltjes(z).unwrap();
            let want = oracle.stieltjes(z);
            assert_relative_eq!(got.re, want.re, max_relative = 1e-9, epsilon = 1e-11);
            assert_relative_eq!(got.im, want.im, max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    #[test]
    fn stieltjes_is_herglotz_and_symmetric() {
        let m = JacobiMeasure::new(-1.0, 2.0, -0.4, 0.6, vec![1.0, 0.3, 0.1]).unwrap();
        for &z in &[
            Complex64::new(0.3, 0.7),
            Complex64::new(-2.0, 0.01),
            Complex64::new(4.0, 3.0),
        ] {
            let v = m.stieltjes(z).unwrap();
            assert!(v.im > 0.0, "Im m({z}) = {} should be positive", v.im);
            // m(conj(z)) = conj(m(z)) extended by reflection.
            let v_bar = m.stieltjes(z.conj()).unwrap();
            assert_relative_eq!(v_bar.re, v.re, max_relative = 1e-12);
            assert_relative_eq!(v_bar.im, -v.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn reciprocal_f_spot_values() {
        let sc = semicircle_unit();
        // F(i) = -1/m(i) = i (sqrt(5) + 1) / 2.
        let f_i = sc.reciprocal_f(Complex64::new(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(f_i.re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(f_i.im, 1.618033988749895, max_relative = 1e-12);
        // F(-3) = -1/m(-3) with m(-3) = (3 - sqrt(5))/2.
        let f_m3 = sc.reciprocal_f(Complex64::new(-3.0, 0.0)).unwrap();
        assert_relative_eq!(f_m3.re, -2.618033988749895, max_relative = 1e-12);
        assert_abs_diff_eq!(f_m3.im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn f_derivatives_match_implicit_semicircle_formulas() {
        // For the unit semicircle m^2 + w m + 1 = 0, so m' = -m / (2m + w)
        // and F - w = m, giving closed forms for F' and F''.
        let sc = semicircle_unit();
        for &w in &[-3.0, -2.2, 2.0 + 1.0 / 2.0_f64.sqrt(), 4.5] {
            let m = sc.stieltjes_real(w).unwrap();
            let m1 = -m / (2.0 * m + w);
            let m2 = -2.0 * m1 * (1.0 + m1) / (2.0 * m + w);
            let (f, f1, f2) = sc.f_derivatives_real(w).unwrap();
            assert_relative_eq!(f, w + m, max_relative = 1e-11);
            assert_relative_eq!(f1, 1.0 + m1, max_relative = 1e-10);
            assert_relative_eq!(f2, m2, max_relative = 1e-8, epsilon = 1e-12);
        }
    }

    #[test]
    fn f_prime_spot_values_on_real_axis() {
        let sc = semicircle_unit();
        // At w = -3/sqrt(2): m = 1/sqrt(2), F' - 1 = m' = 1 exactly.
        let w = -3.0 / 2.0_f64.sqrt();
        let (_, f1, _) = sc.f_derivatives_real(w).unwrap();
        assert_relative_eq!(f1 - 1.0, 1.0, max_relative = 1e-10);
        assert_relative_eq!(sc.i_hat(Complex64::new(w, 0.0)).unwrap(), 1.0, max_relative = 1e-10);

        // At w = -(6 + sqrt(2))/2 the same quantities drop to about 0.0939.
        let w = -(6.0 + 2.0_f64.sqrt()) / 2.0;
        let m = sc.stieltjes_real(w).unwrap();
        let want = -m / (2.0 * m + w);
        let (_, f1, _) = sc.f_derivatives_real(w).unwrap();
        assert_relative_eq!(f1 - 1.0, want, max_relative = 1e-10);
        // Closed form (4 sqrt(2) - 5) / 7.
        assert_relative_eq!(want, 0.09383632135605438, max_relative = 1e-12);
    }

    #[test]
    fn i_integral_and_i_hat_spot_values() {
        let sc = semicircle_unit();
        // On the imaginary axis I(w) = Im m / Im w.
        let w = Complex64::new(0.0, 2.3660254037844386);
        let m = sc.stieltjes(w).unwrap();
        let i_val = sc.i_integral(w).unwrap();
        assert_relative_eq!(i_val, m.im / w.im, max_relative = 1e-11);
        assert_relative_eq!(i_val, 0.15470053837925146, max_relative = 1e-8);

        // I-hat of the semicircle at the same point: for sigma_1 the hat
        // measure is again sigma_1, so I-hat(w) = I(w) - 1 ... no: it is
        // the I-integral of the hat measure, which for sigma_1 equals
        // Im m-hat / Im w with m-hat = m. Both routes must agree.
        let i_hat = sc.i_hat(w).unwrap();
        assert_relative_eq!(i_hat, m.im / (m.norm_sqr() * w.im) - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn i_hat_tends_to_variance_over_eta_squared() {
        let m = JacobiMeasure::new(-2.0, 1.0, 0.3, -0.2, vec![1.0, -0.2]).unwrap();
        let eta = 1e3;
        let i_hat = m.i_hat(Complex64::new(0.0, eta)).unwrap();
        assert_relative_eq!(i_hat * eta * eta, m.variance(), max_relative = 1e-2);
    }

    #[test]
    fn hat_measure_mass_is_the_variance() {
        // F(z) - z is the Stieltjes transform of a positive measure whose
        // mass is the variance: -Re[(i eta)(F(i eta) - i eta)] -> Var(mu).
        let cases = [
            semicircle_unit(),
            JacobiMeasure::arcsine(1.0).unwrap(),
            JacobiMeasure::new(-1.0, 3.0, -0.5, 0.25, vec![1.0, 0.2, 0.05]).unwrap(),
        ];
        for m in &cases {
            let eta = 1e4;
            let z = Complex64::new(0.0, eta);
            let f = m.reciprocal_f(z).unwrap();
            let mass = -(z * (f - z)).re;
            assert_relative_eq!(mass, m.variance(), max_relative = 1e-6);
        }
    }

    #[test]
    fn near_and_far_paths_agree_at_the_threshold() {
        let m = JacobiMeasure::new(-1.0, 2.0, -0.4, 0.6, vec![1.0, 0.3, 0.1]).unwrap();
        let r = m.halfwidth();
        let x = 0.5 * (m.lower() + m.upper());
        // Above mid-interval the dispatch boundary sits at height
        // hw * sinh(ln rho); straddle it and check continuity.
        let v_edge = r * MIN_LADDER_DECAY.sinh();
        let v1 = m.stieltjes(Complex64::new(x, v_edge * 0.999)).unwrap();
        let v2 = m.stieltjes(Complex64::new(x, v_edge * 1.001)).unwrap();
        assert!((v1 - v2).norm() < 1e-2 * v1.norm());

        // Just outside the handoff, pit the two paths against each other
        // at the same point: the dispatch picks the ladder, the split
        // tanh-sinh rule has no trouble this far out.
        let z = Complex64::new(x, v_edge * 1.1);
        let im = z.im;
        let far = m.stieltjes(z).unwrap();
        let near = m.near_integral(z.re, |_x, dx| 1.0 / Complex64::new(dx, -im));
        assert!(
            (near - far).norm() <= 1e-9 * far.norm(),
            "mid-interval path mismatch {:e}",
            (near - far).norm() / far.norm()
        );

        // A shallow point by the right corner: euclidean distance under
        // 1e-3 hw, yet the ellipse radius keeps it on the ladder.
        let z = Complex64::new(m.upper() + 4e-4 * r, 4e-4 * r);
        let im = z.im;
        let far = m.stieltjes(z).unwrap();
        let near = m.near_integral(z.re, |_x, dx| 1.0 / Complex64::new(dx, -im));
        assert!(
            (near - far).norm() <= 1e-9 * far.norm(),
            "corner path mismatch {:e}",
            (near - far).norm() / far.norm()
        );

        // And directly: evaluate one near-support point against a ladder
        // evaluation pushed through at a safely resolvable distance.
        let z = Complex64::new(m.upper() + 1e-5 * r, 0.0);
        let near = m.stieltjes(z).unwrap();
        let (_, f1, _) = m.f_derivatives(z).unwrap();
        // Right of the support every x - z is negative, so m < 0 there.
        assert!(near.re < 0.0);
        assert!(f1.re > 1.0, "F' > 1 just outside the support, got {}", f1.re);
    }

    #[test]
    fn support_guards_fire() {
        let m = semicircle_unit();
        assert!(matches!(
            m.stieltjes(Complex64::new(0.5, 0.0)),
            Err(Error::EvaluationOnSupport { .. })
        ));
        assert!(matches!(
            m.stieltjes(Complex64::new(2.0, 0.0)),
            Err(Error::EvaluationOnSupport { .. })
        ));
        assert!(matches!(
            m.stieltjes(Complex64::new(0.0, 1e-14)),
            Err(Error::TooCloseToSupport { .. })
        ));
        assert!(matches!(
            m.stieltjes(Complex64::new(2.0 + 1e-15, 0.0)),
            Err(Error::TooCloseToSupport { .. })
        ));
        // Just outside the floor is fine.
        assert!(m.stieltjes(Complex64::new(0.0, 1e-9)).is_ok());
    }

    #[test]
    fn cdf_and_quantile_are_consistent() {
        let sc = semicircle_unit();
        assert_abs_diff_eq!(sc.cdf(0.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(sc.cdf(-2.5).unwrap(), 0.0);
        assert_eq!(sc.cdf(2.5).unwrap(), 1.0);
        // Closed form: cdf(x) = 1/2 + x sqrt(4 - x^2) / (4 pi) + asin(x/2) / pi.
        for &x in &[-1.5f64, -0.3, 0.2, 1.9] {
            let want = 0.5
                + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI)
                + (x / 2.0).asin() / std::f64::consts::PI;
            assert_abs_diff_eq!(sc.cdf(x).unwrap(), want, epsilon = 1e-12);
        }
        for &q in &[0.01, 0.25, 0.5, 0.9, 0.999] {
            let x = sc.quantile(q).unwrap();
            assert_abs_diff_eq!(sc.cdf(x).unwrap(), q, epsilon = 1e-10);
        }
        assert!(matches!(sc.quantile(0.0), Err(Error::QuantileFailure { .. })));
        assert!(matches!(sc.quantile(1.2), Err(Error::QuantileFailure { .. })));

        // Uniform distribution: cdf is affine, quantile too.
        let uni = JacobiMeasure::new(0.0, 1.0, 0.0, 0.0, vec![1.0]).unwrap();
        assert_abs_diff_eq!(uni.cdf(0.25).unwrap(), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(uni.quantile(0.1).unwrap(), -0.4, epsilon = 1e-11);
    }

    #[test]
    fn density_integrates_to_one_against_cdf() {
        let m = JacobiMeasure::new(-2.0, 1.0, 0.7, -0.3, vec![1.0, 0.1, 0.2]).unwrap();
        // Interior consistency of the two cdf branches at the midpoint.
        let mid = 0.5 * (m.lower() + m.upper());
        let left = m.cdf(mid - 1e-9).unwrap();
        let right = m.cdf(mid + 1e-9).unwrap();
        assert_abs_diff_eq!(left, right, epsilon = 1e-8);
        // Total mass reaches one continuously at the right edge.
        let eps = 1e-9 * m.halfwidth();
        assert!(m.cdf(m.upper() - eps).unwrap() > 1.0 - 1e-3);
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let examples = [
            r#"{"type":"semicircle","variance":2.0}"#,
            r#"{"type":"arcsine","radius":1.5}"#,
            r#"{"type":"marchenko_pastur","ratio":0.25}"#,
            r#"{"type":"jacobi","support":[-1.0,2.0],"t_minus":-0.4,"t_plus":0.6,"smooth_cheb":[1.0,0.3]}"#,
        ];
        for text in examples {
            let spec = MeasureSpec::from_json(text).unwrap();
            let again = MeasureSpec::from_json(&spec.to_json()).unwrap();
            assert_eq!(spec, again);
            spec.build().unwrap();
        }

        // Missing smooth_cheb defaults to a constant factor.
        let spec = MeasureSpec::from_json(
            r#"{"type":"jacobi","support":[0.0,1.0],"t_minus":0.0,"t_plus":0.0}"#,
        )
        .unwrap();
        assert_eq!(
            spec,
            MeasureSpec::Jacobi {
                support: [0.0, 1.0],
                t_minus: 0.0,
                t_plus: 0.0,
                smooth_cheb: vec![1.0],
            }
        );

        // Unknown fields and unknown types are rejected.
        assert!(MeasureSpec::from_json(r#"{"type":"semicircle","variance":1.0,"radius":2.0}"#).is_err());
        assert!(MeasureSpec::from_json(r#"{"type":"gaussian","variance":1.0}"#).is_err());
        assert!(MeasureSpec::from_json(r#"[1,2,3]"#).is_err());
        assert!(MeasureSpec::from_json(r#"{"variance":1.0}"#).is_err());

        // Parameter range errors surface at build time.
        assert!(MeasureSpec::from_json(r#"{"type":"semicircle","variance":-1.0}"#)
            .unwrap()
            .build()
            .is_err());
        assert!(MeasureSpec::from_json(r#"{"type":"marchenko_pastur","ratio":1.5}"#)
            .unwrap()
            .build()
            .is_err());
    }

    #[test]
    fn shorthand_constructors_match_explicit_jacobi_forms() {
        let sc = semicircle_unit();
        let explicit = JacobiMeasure::new(-2.0, 2.0, 0.5, 0.5, vec![1.0]).unwrap();
        assert_eq!(sc, explicit);

        let mp = JacobiMeasure::marchenko_pastur(0.25).unwrap();
        let oracle = ClosedFormFamily::marchenko_pastur(0.25);
        let (lo, hi) = oracle.support();
        // Both sides center: original support was [0.25, 2.25] with mean 1.
        assert_relative_eq!(mp.shift(), -1.0, max_relative = 1e-10);
        assert_relative_eq!(mp.lower(), lo, max_relative = 1e-10);
        assert_relative_eq!(mp.upper(), hi, max_relative = 1e-10);
        for &x in &[-0.6, -0.2, 0.0, 0.4, 1.1] {
            assert_relative_eq!(
                mp.density(x),
                oracle.density(x),
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
    }
}
