//! Support interval and square-root edge data of the free convolution.
//!
//! Outside the support both subordination functions are real, and the
//! product
//!
//! ```text
//!     f(E) = (F_a'(omega_b(E)) - 1) (F_b'(omega_a(E)) - 1)
//! ```
//!
//! is strictly below one; it reaches one exactly at the support edges. The
//! locator marches inward from the ends of a bracketing domain until the
//! real-axis solve fails or f crosses one, bisects the crossing down to a
//! small window, sharpens it with a guarded secant on f - 1, and finally
//! polishes in omega-space: with v(w) = F_b^{-1}(F_a(w)) the edge is a
//! critical point of
//!
//! ```text
//!     ztilde(w) = w - F_a(w) + v(w),
//! ```
//!
//! the inverse of omega_b restricted to the real exterior, and Newton on
//! ztilde'(w) = 0 lands on the edge to quadrature accuracy. The identity
//! ztilde'(w) = (1 - f) / F_b'(v) makes the two formulations agree exactly:
//! the certificate f equals one at the critical point.
//!
//! The edge energy is E = ztilde(w*), and the curvature ztilde''(w*) gives
//! the square-root coefficient of omega_b there; swapping the roles of the
//! two measures at the same critical pair gives omega_a's coefficient. The
//! density then opens as rho(E + u) ~ (gamma_b / pi) I_a(w*) sqrt(u) with
//! I_a the squared-distance integral of mu_a.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::JacobiMeasure;
use crate::subordination::{solve_real_capped, solve_real_outside, Domain, SubordinationPoint};

/// Number of coarse march steps across the bracketing domain.
const MARCH_STEPS: usize = 64;

/// Width to which the marching bracket is bisected before the secant stage.
const BISECT_WIDTH: f64 = 1e-6;

const BISECT_MAX: usize = 90;
const SECANT_MAX: usize = 60;
const POLISH_MAX: usize = 16;

/// Iteration budget for bracketing probes. Energies inside the support can
/// only fail, and without a cap each failure would cost the solver's full
/// iteration limit; exterior probes converge far below this budget.
const PROBE_ITER: usize = 3_000;

/// Support interval of the free convolution with edge data at both ends.
///
/// Index 0 of each pair belongs to the lower edge E_-, index 1 to the upper
/// edge E_+. `omega_alpha` and `omega_beta` are the real boundary values of
/// the subordination functions at the edges; `gamma_alpha` and `gamma_beta`
/// the coefficients of their square-root expansions,
/// |omega(E) - omega(edge)| = gamma sqrt(|E - edge|) + O(|E - edge|).
/// `edge_residuals` reports |f - 1| of the certificate at each edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportResult {
    pub e_minus: f64,
    pub e_plus: f64,
    pub omega_alpha: [f64; 2],
    pub omega_beta: [f64; 2],
    pub gamma_alpha: [f64; 2],
    pub gamma_beta: [f64; 2],
    pub edge_residuals: [f64; 2],
}

impl Serialize for SupportResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Pair {
            alpha: [f64; 2],
            beta: [f64; 2],
        }
        let mut s = serializer.serialize_struct("SupportResult", 5)?;
        s.serialize_field("E_minus", &self.e_minus)?;
        s.serialize_field("E_plus", &self.e_plus)?;
        s.serialize_field(
            "omega",
            &Pair {
                alpha: self.omega_alpha,
                beta: self.omega_beta,
            },
        )?;
        s.serialize_field(
            "gamma",
            &Pair {
                alpha: self.gamma_alpha,
                beta: self.gamma_beta,
            },
        )?;
        s.serialize_field("edge_residuals", &self.edge_residuals)?;
        s.end()
    }
}

impl SupportResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("support result serialization")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

impl Side {
    /// Unit direction pointing from outside the support toward it.
    fn inward(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// The edge certificate at a real energy outside the support: the solved
/// subordination point together with
/// f(E) = (F_a'(omega_b) - 1)(F_b'(omega_a) - 1).
///
/// `init` warm-starts the real-axis solve with a nearby omega_b value.
pub fn edge_function(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    e: f64,
    init: Option<f64>,
) -> Result<(f64, SubordinationPoint)> {
    let point = solve_real_outside(mu_a, mu_b, e, init)?;
    let f = certificate(mu_a, mu_b, &point)?;
    Ok((f, point))
}

fn certificate(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    point: &SubordinationPoint,
) -> Result<f64> {
    let (_, fa1, _) = mu_a.f_derivatives_real(point.omega_beta.re)?;
    let (_, fb1, _) = mu_b.f_derivatives_real(point.omega_alpha.re)?;
    Ok((fa1 - 1.0) * (fb1 - 1.0))
}

/// Locates the support interval [E_-, E_+] of mu_a boxplus mu_b and the
/// square-root edge coefficients at both ends.
///
/// `tol_e` is the energy tolerance of the secant stage; the final edge
/// values come from the omega-space polish and are limited by quadrature
/// accuracy rather than by `tol_e`.
pub fn find_support(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    tol_e: f64,
) -> Result<SupportResult> {
    if !(tol_e.is_finite() && tol_e > 0.0) {
        return Err(Error::Invalid(format!(
            "edge tolerance must be positive and finite, got {tol_e}"
        )));
    }
    let domain = Domain::new(mu_a, mu_b);
    let left = locate_edge(mu_a, mu_b, Side::Left, &domain, tol_e)?;
    let right = locate_edge(mu_a, mu_b, Side::Right, &domain, tol_e)?;
    if !(left.e < right.e) {
        return Err(Error::DegenerateSupport {
            lower: left.e,
            upper: right.e,
        });
    }
    Ok(SupportResult {
        e_minus: left.e,
        e_plus: right.e,
        omega_alpha: [left.v, right.v],
        omega_beta: [left.w, right.w],
        gamma_alpha: [left.gamma_alpha, right.gamma_alpha],
        gamma_beta: [left.gamma_beta, right.gamma_beta],
        edge_residuals: [left.residual, right.residual],
    })
}

/// One fully resolved edge.
struct Edge {
    e: f64,
    /// omega_b at the edge (critical point of ztilde).
    w: f64,
    /// omega_a at the edge, the matching value v = F_b^{-1}(F_a(w)).
    v: f64,
    gamma_beta: f64,
    gamma_alpha: f64,
    residual: f64,
}

/// A good (outside, certificate below one) sample of the edge function.
struct Sample {
    e: f64,
    f: f64,
    point: SubordinationPoint,
}

fn locate_edge(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    side: Side,
    domain: &Domain,
    tol_e: f64,
) -> Result<Edge> {
    let inward = side.inward();
    let start = match side {
        Side::Left => domain.e_lo,
        Side::Right => domain.e_hi,
    };
    let step = (domain.e_hi - domain.e_lo) / MARCH_STEPS as f64;

    // Coarse march until the solve fails or the certificate crosses one.
    let (f0, p0) = edge_function(mu_a, mu_b, start, None)?;
    if f0 >= 1.0 {
        return Err(Error::BracketFailure {
            what: format!(
                "certificate already at {f0:.6} on the domain boundary E = {start}"
            ),
        });
    }
    let mut good = Sample {
        e: start,
        f: f0,
        point: p0,
    };
    let mut prev_good: Option<Sample> = None;
    let mut bad: Option<f64> = None;
    for k in 1..=MARCH_STEPS {
        let e = start + inward * step * k as f64;
        match probe(mu_a, mu_b, e, &good)? {
            Probe::Good(s) => {
                prev_good = Some(std::mem::replace(&mut good, s));
            }
            Probe::Inside(_) => {
                bad = Some(e);
                break;
            }
        }
    }
    let mut bad = bad.ok_or_else(|| Error::BracketFailure {
        what: format!("no support edge crossing found while marching {side:?} across the domain"),
    })?;

    // Bisection on the predicate "real solve succeeds with f < 1".
    for _ in 0..BISECT_MAX {
        if (bad - good.e).abs() <= BISECT_WIDTH {
            break;
        }
        let mid = 0.5 * (good.e + bad);
        match probe(mu_a, mu_b, mid, &good)? {
            Probe::Good(s) => {
                prev_good = Some(std::mem::replace(&mut good, s));
            }
            Probe::Inside(_) => bad = mid,
        }
    }

    // Guarded secant on g = f - 1, falling back to bisection whenever the
    // step leaves the bracket or the inside probe yields no usable value.
    let mut pair_prev = match prev_good {
        Some(s) => (s.e, s.f - 1.0),
        None => {
            let e = good.e - inward * (bad - good.e).abs().max(BISECT_WIDTH);
            let (f, _) = edge_function(mu_a, mu_b, e, Some(good.point.omega_beta.re))?;
            (e, f - 1.0)
        }
    };
    let mut pair = (good.e, good.f - 1.0);
    for _ in 0..SECANT_MAX {
        if (bad - good.e).abs() <= tol_e {
            break;
        }
        let (e0, g0) = pair_prev;
        let (e1, g1) = pair;
        let mut cand = if (g1 - g0).abs() > 0.0 {
            e1 - g1 * (e1 - e0) / (g1 - g0)
        } else {
            f64::NAN
        };
        let strictly_inside = cand.is_finite()
            && (cand - good.e) * inward > 0.0
            && (bad - cand) * inward > 0.0;
        if !strictly_inside {
            cand = 0.5 * (good.e + bad);
        }
        match probe(mu_a, mu_b, cand, &good)? {
            Probe::Good(s) => {
                pair_prev = pair;
                pair = (s.e, s.f - 1.0);
                good = s;
            }
            Probe::Inside(f) => {
                bad = cand;
                if let Some(f) = f {
                    pair_prev = pair;
                    pair = (cand, f - 1.0);
                }
            }
        }
    }

    polish_edge(mu_a, mu_b, side, &good)
}

enum Probe {
    /// Solvable with certificate below one; the energy is outside.
    Good(Sample),
    /// The energy lies inside the support: either the real solve left the
    /// axis, or it converged with a certificate at or above one. The
    /// certificate value is carried along when it exists.
    Inside(Option<f64>),
}

fn probe(mu_a: &JacobiMeasure, mu_b: &JacobiMeasure, e: f64, warm: &Sample) -> Result<Probe> {
    let solved = solve_real_capped(mu_a, mu_b, e, Some(warm.point.omega_beta.re), PROBE_ITER)
        .and_then(|point| {
            let f = certificate(mu_a, mu_b, &point)?;
            Ok((f, point))
        });
    match solved {
        Ok((f, point)) if f < 1.0 => Ok(Probe::Good(Sample { e, f, point })),
        Ok((f, _)) => Ok(Probe::Inside(Some(f))),
        Err(Error::LeftRealAxis { .. }) | Err(Error::NoConvergence { .. }) => {
            Ok(Probe::Inside(None))
        }
        Err(other) => Err(other),
    }
}

/// Newton in omega-space on ztilde'(w) = 0 from the best outside sample,
/// then the edge energy, curvatures and square-root coefficients.
fn polish_edge(
    mu_a: &JacobiMeasure,
    mu_b: &JacobiMeasure,
    side: Side,
    seed: &Sample,
) -> Result<Edge> {
    let mut w = seed.point.omega_beta.re;
    let mut v = seed.point.omega_alpha.re;
    for _ in 0..POLISH_MAX {
        let fa = mu_a.f_derivatives_real(w)?;
        v = invert_f_real(mu_b, fa.0, v, side)?;
        let fb = mu_b.f_derivatives_real(v)?;
        let zp = 1.0 - fa.1 + fa.1 / fb.1;
        let z2 = ztilde_second(fa.1, fa.2, fb.1, fb.2);
        if !(z2.is_finite() && z2 != 0.0) {
            return Err(Error::NonNegativeSecondDerivative { value: 0.0 });
        }
        let step = zp / z2;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    // Resynchronize the pair and certify at the final critical point.
    let fa = mu_a.f_derivatives_real(w)?;
    v = invert_f_real(mu_b, fa.0, v, side)?;
    let fb = mu_b.f_derivatives_real(v)?;
    let e = w + v - fa.0;
    let residual = ((fa.1 - 1.0) * (fb.1 - 1.0) - 1.0).abs();

    let gamma_beta = gamma_from_curvature(ztilde_second(fa.1, fa.2, fb.1, fb.2), side)?;
    // Same critical pair with the roles of the measures exchanged: the
    // curvature of v -> v - F_b(v) + F_a^{-1}(F_b(v)) gives omega_a's
    // square-root coefficient.
    let gamma_alpha = gamma_from_curvature(ztilde_second(fb.1, fb.2, fa.1, fa.2), side)?;

    Ok(Edge {
        e,
        w,
        v,
        gamma_beta,
        gamma_alpha,
        residual,
    })
}

/// Second derivative of ztilde(w) = w - F_a(w) + F_b^{-1}(F_a(w)) at a
/// point where v = F_b^{-1}(F_a(w)), in terms of the one-sided derivatives
/// F_a', F_a'' at w and F_b', F_b'' at v. Differentiating v'(w) = F_a'/F_b'
/// once more gives
///
/// ```text
///     ztilde'' = -F_a'' (1 - 1/F_b') - F_b'' (F_a')^2 / (F_b')^3.
/// ```
fn ztilde_second(fa1: f64, fa2: f64, fb1: f64, fb2: f64) -> f64 {
    -fa2 * (1.0 - 1.0 / fb1) - fb2 * fa1 * fa1 / (fb1 * fb1 * fb1)
}

/// Square-root coefficient from the edge curvature. ztilde has a maximum in
/// w at a left edge and a minimum at a right edge; orienting the curvature
/// so a healthy square-root edge is negative, gamma = sqrt(-2 / curvature).
fn gamma_from_curvature(z2: f64, side: Side) -> Result<f64> {
    let oriented = match side {
        Side::Left => z2,
        Side::Right => -z2,
    };
    if !(oriented < 0.0) {
        return Err(Error::NonNegativeSecondDerivative { value: oriented });
    }
    Ok((-2.0 / oriented).sqrt())
}

/// Solves F_mu(v) = y for v on the real exterior ray of mu's support on the
/// given side. F is strictly increasing there (F' = 1 + I_hat > 1), so the
/// root is bracketed by geometric steps in the distance to the support
/// endpoint and then pinned by safeguarded Newton.
fn invert_f_real(mu: &JacobiMeasure, y: f64, guess: f64, side: Side) -> Result<f64> {
    let (a, b) = mu.support();
    let scale = mu.halfwidth();
    let edge = match side {
        Side::Left => a,
        Side::Right => b,
    };
    let to_v = |delta: f64| match side {
        Side::Left => edge - delta,
        Side::Right => edge + delta,
    };
    let mut delta = match side {
        Side::Left => a - guess,
        Side::Right => guess - b,
    };
    if !(delta > 0.0) {
        delta = 1e-6 * scale;
    }

    let eval = |v: f64| -> Result<(f64, f64)> {
        let (f, f1, _) = mu.f_derivatives_real(v)?;
        Ok((f - y, f1))
    };

    let out_of_range = || Error::BracketFailure {
        what: format!("no preimage under F on the {side:?} exterior ray"),
    };

    // Walk delta geometrically until two probes straddle the root of
    // g(v) = F(v) - y. Whether a too-small g calls for stepping toward or
    // away from the support endpoint depends on the side.
    let (g0, _) = eval(to_v(delta))?;
    if g0 == 0.0 {
        return Ok(to_v(delta));
    }
    let toward = match side {
        Side::Left => g0 < 0.0,
        Side::Right => g0 > 0.0,
    };
    let mut v_neg = f64::NAN; // g < 0
    let mut v_pos = f64::NAN; // g > 0
    if g0 < 0.0 {
        v_neg = to_v(delta);
    } else {
        v_pos = to_v(delta);
    }
    for _ in 0..220 {
        delta = if toward { 0.5 * delta } else { 2.0 * delta };
        if !toward && delta > 1e12 * scale.max(1.0) {
            return Err(out_of_range());
        }
        let g = match eval(to_v(delta)) {
            Ok((g, _)) => g,
            // Probing against the support guard: y is beyond the
            // reachable part of the ray.
            Err(Error::TooCloseToSupport { .. }) | Err(Error::EvaluationOnSupport { .. })
                if toward =>
            {
                return Err(out_of_range());
            }
            Err(other) => return Err(other),
        };
        if g == 0.0 {
            return Ok(to_v(delta));
        }
        if g < 0.0 {
            v_neg = to_v(delta);
        } else {
            v_pos = to_v(delta);
        }
        if v_neg.is_finite() && v_pos.is_finite() {
            break;
        }
    }
    if !(v_neg.is_finite() && v_pos.is_finite()) {
        return Err(out_of_range());
    }

    // Safeguarded Newton inside the bracket; F' > 1 keeps steps modest.
    let mut v = 0.5 * (v_neg + v_pos);
    for _ in 0..80 {
        let (g, f1) = eval(v)?;
        if g < 0.0 {
            v_neg = v;
        } else {
            v_pos = v;
        }
        if g.abs() <= 1e-15 * (1.0 + y.abs()) {
            return Ok(v);
        }
        let mut next = v - g / f1;
        let (lo, hi) = (v_neg.min(v_pos), v_neg.max(v_pos));
        if !(next > lo && next < hi) {
            next = 0.5 * (v_neg + v_pos);
        }
        if (next - v).abs() <= f64::EPSILON * (1.0 + v.abs()) {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn semicircle(variance: f64) -> JacobiMeasure {
        JacobiMeasure::semicircle(variance).unwrap()
    }

    #[test]
    fn equal_semicircles_hit_closed_forms() {
        // sigma_1 boxplus sigma_1 is the semicircle of variance 2 on
        // [-2 sqrt(2), 2 sqrt(2)]; the subordination functions coincide and
        // omega(E_+) = 3/sqrt(2), gamma = 2^(-3/4) at both edges.
        let sc = semicircle(1.0);
        let sup = find_support(&sc, &sc, 1e-10).unwrap();

        let e_edge = 2.0 * 2.0f64.sqrt();
        assert_abs_diff_eq!(sup.e_minus, -e_edge, epsilon = 1e-10);
        assert_abs_diff_eq!(sup.e_plus, e_edge, epsilon = 1e-10);

        let omega_edge = 3.0 / 2.0f64.sqrt();
        for (omega, want) in [
            (sup.omega_beta[0], -omega_edge),
            (sup.omega_beta[1], omega_edge),
            (sup.omega_alpha[0], -omega_edge),
            (sup.omega_alpha[1], omega_edge),
        ] {
            assert_abs_diff_eq!(omega, want, epsilon = 1e-9);
        }

        let gamma = 2.0f64.powf(-0.75);
        for g in sup
            .gamma_alpha
            .iter()
            .chain(sup.gamma_beta.iter())
        {
            assert_relative_eq!(*g, gamma, max_relative = 1e-8);
        }
        assert!(sup.edge_residuals.iter().all(|r| *r <= 1e-10));
    }

    #[test]
    fn unequal_semicircles_hit_closed_forms() {
        // Variances t = 1 and s = 4: the convolution is the semicircle of
        // variance 5. With T = t + s,
        //     omega_b(E_+) = (2t + s)/sqrt(T),   gamma_b = s T^(-3/4),
        //     omega_a(E_+) = (t + 2s)/sqrt(T),   gamma_a = t T^(-3/4).
        let (t, s) = (1.0, 4.0);
        let big_t: f64 = t + s;
        let mu_a = semicircle(t);
        let mu_b = semicircle(s);
        let sup = find_support(&mu_a, &mu_b, 1e-10).unwrap();

        let e_edge = 2.0 * big_t.sqrt();
        assert_abs_diff_eq!(sup.e_plus, e_edge, epsilon = 1e-9);
        assert_abs_diff_eq!(sup.e_minus, -e_edge, epsilon = 1e-9);

        let root_t = big_t.sqrt();
        assert_abs_diff_eq!(sup.omega_beta[1], (2.0 * t + s) / root_t, epsilon = 1e-8);
        assert_abs_diff_eq!(sup.omega_alpha[1], (t + 2.0 * s) / root_t, epsilon = 1e-8);
        assert_abs_diff_eq!(sup.omega_beta[0], -(2.0 * t + s) / root_t, epsilon = 1e-8);
        assert_abs_diff_eq!(sup.omega_alpha[0], -(t + 2.0 * s) / root_t, epsilon = 1e-8);

        let scale = big_t.powf(-0.75);
        for k in 0..2 {
            assert_relative_eq!(sup.gamma_beta[k], s * scale, max_relative = 1e-7);
            assert_relative_eq!(sup.gamma_alpha[k], t * scale, max_relative = 1e-7);
        }
        assert!(sup.edge_residuals.iter().all(|r| *r <= 1e-10));
    }

    #[test]
    fn symmetric_inputs_give_mirror_symmetric_edges() {
        let mu_a = semicircle(1.0);
        let mu_b = JacobiMeasure::arcsine(1.5).unwrap();
        let sup = find_support(&mu_a, &mu_b, 1e-10).unwrap();

        assert_abs_diff_eq!(sup.e_minus, -sup.e_plus, epsilon = 1e-9);
        assert_abs_diff_eq!(sup.omega_beta[0], -sup.omega_beta[1], epsilon = 1e-8);
        assert_abs_diff_eq!(sup.omega_alpha[0], -sup.omega_alpha[1], epsilon = 1e-8);
        assert_relative_eq!(sup.gamma_beta[0], sup.gamma_beta[1], max_relative = 1e-7);
        assert_relative_eq!(sup.gamma_alpha[0], sup.gamma_alpha[1], max_relative = 1e-7);
        assert!(sup.edge_residuals.iter().all(|r| *r <= 1e-9));

        // The edges sit inside the sum of the supports but outside the
        // wider factor's support.
        assert!(sup.e_plus < mu_a.upper() + mu_b.upper());
        assert!(sup.e_plus > mu_a.upper().max(mu_b.upper()));
    }

    #[test]
    fn certificate_value_at_a_closed_form_point() {
        // sigma_1 boxplus sigma_1 at E = -4: omega = -(6 + sqrt(2))/2 and
        // F'(omega) - 1 = (4 sqrt(2) - 5)/7 for each factor, so
        // f(-4) = ((4 sqrt(2) - 5)/7)^2.
        let sc = semicircle(1.0);
        let (f, point) = edge_function(&sc, &sc, -4.0, None).unwrap();
        let expected = (4.0 * 2.0f64.sqrt() - 5.0) / 7.0;
        assert_relative_eq!(f, expected * expected, max_relative = 1e-9);
        assert_abs_diff_eq!(
            point.omega_beta.re,
            -(6.0 + 2.0f64.sqrt()) / 2.0,
            epsilon = 1e-10
        );

        // Warm starting from a nearby value changes nothing.
        let (f_warm, _) = edge_function(&sc, &sc, -4.0, Some(point.omega_beta.re - 0.05)).unwrap();
        assert_relative_eq!(f, f_warm, max_relative = 1e-12);
    }

    #[test]
    fn certificate_grows_toward_the_edge_and_has_no_outside_roots() {
        let mu_a = JacobiMeasure::new(-1.0, 1.4, -0.3, 0.4, vec![1.0, 0.2]).unwrap();
        let mu_b = JacobiMeasure::marchenko_pastur(0.25).unwrap();
        let sup = find_support(&mu_a, &mu_b, 1e-10).unwrap();

        // Approaching E_- from outside, f increases monotonically to 1.
        let mut prev = -f64::INFINITY;
        let mut warm = None;
        for k in (1..=6).rev() {
            let e = sup.e_minus - 10.0f64.powi(-(7 - k));
            let (f, p) = edge_function(&mu_a, &mu_b, e, warm).unwrap();
            assert!(f > prev, "certificate not increasing at E = {e}");
            assert!(f < 1.0);
            prev = f;
            warm = Some(p.omega_beta.re);
        }
        assert!(prev > 0.9, "certificate should approach 1, got {prev}");

        // No spurious crossings anywhere outside the located support.
        let domain = Domain::new(&mu_a, &mu_b);
        for k in 0..30 {
            let t = k as f64 / 29.0;
            let e = domain.e_lo + t * (sup.e_minus - 0.05 - domain.e_lo);
            let (f, _) = edge_function(&mu_a, &mu_b, e, None).unwrap();
            assert!(f < 1.0, "spurious certificate crossing at E = {e}");
            let e = domain.e_hi + t * (sup.e_plus + 0.05 - domain.e_hi);
            let (f, _) = edge_function(&mu_a, &mu_b, e, None).unwrap();
            assert!(f < 1.0, "spurious certificate crossing at E = {e}");
        }
    }

    #[test]
    fn omega_obeys_the_square_root_expansion() {
        let mu_a = semicircle(1.0);
        let mu_b = JacobiMeasure::marchenko_pastur(0.25).unwrap();
        let sup = find_support(&mu_a, &mu_b, 1e-12).unwrap();

        // |omega_b(E_- - s) - (omega_b(E_-) - gamma_b sqrt(s))| = O(s).
        let mut warm = None;
        for &s in &[1e-4, 1e-6, 1e-8] {
            let point = solve_real_outside(&mu_a, &mu_b, sup.e_minus - s, warm).unwrap();
            let fitted = sup.omega_beta[0] - sup.gamma_beta[0] * s.sqrt();
            let err = (point.omega_beta.re - fitted).abs();
            assert!(
                err <= 20.0 * s + 1e-12,
                "sqrt law violated at s = {s:e}: err = {err:e}"
            );
            let fitted_a = sup.omega_alpha[0] - sup.gamma_alpha[0] * s.sqrt();
            let err_a = (point.omega_alpha.re - fitted_a).abs();
            assert!(
                err_a <= 20.0 * s + 1e-12,
                "sqrt law violated for omega_a at s = {s:e}: err = {err_a:e}"
            );
            warm = Some(point.omega_beta.re);
        }
    }

    #[test]
    fn edges_stay_strictly_outside_the_factor_supports() {
        // The subordination boundary values at the edges keep a positive
        // distance from the factor supports for every edge exponent mix.
        let cases = [
            (-0.5, -0.5),
            (0.0, 0.5),
            (0.5, -0.5),
        ];
        for &(ta, tb) in &cases {
            let mu_a = JacobiMeasure::new(-1.0, 1.0, ta, tb, vec![1.0]).unwrap();
            let mu_b = JacobiMeasure::new(-0.8, 1.2, tb, ta, vec![1.0, 0.1]).unwrap();
            let sup = find_support(&mu_a, &mu_b, 1e-9).unwrap();
            assert!(sup.e_minus < sup.e_plus);
            // omega_b feeds mu_a's transforms, omega_a feeds mu_b's.
            assert!(sup.omega_beta[0] < mu_a.lower());
            assert!(sup.omega_beta[1] > mu_a.upper());
            assert!(sup.omega_alpha[0] < mu_b.lower());
            assert!(sup.omega_alpha[1] > mu_b.upper());
            assert!(sup.gamma_alpha.iter().all(|g| *g > 0.0));
            assert!(sup.gamma_beta.iter().all(|g| *g > 0.0));
            assert!(sup.edge_residuals.iter().all(|r| *r <= 1e-8));
        }
    }

    #[test]
    fn serialization_layout() {
        let sc = semicircle(1.0);
        let sup = find_support(&sc, &sc, 1e-10).unwrap();
        let json: serde_json::Value = serde_json::from_str(&sup.to_json()).unwrap();
        assert!(json["E_minus"].is_f64());
        assert!(json["E_plus"].is_f64());
        assert_eq!(json["omega"]["alpha"].as_array().unwrap().len(), 2);
        assert_eq!(json["omega"]["beta"].as_array().unwrap().len(), 2);
        assert_eq!(json["gamma"]["alpha"].as_array().unwrap().len(), 2);
        assert_eq!(json["gamma"]["beta"].as_array().unwrap().len(), 2);
        assert_eq!(json["edge_residuals"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let sc = semicircle(1.0);
        assert!(matches!(
            find_support(&sc, &sc, 0.0),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            find_support(&sc, &sc, f64::NAN),
            Err(Error::Invalid(_))
        ));
    }
}
