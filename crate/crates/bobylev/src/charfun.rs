//! Characteristic functions, symmetric difference operators, and the norm
//! family built on them.
//!
//! The k-th symmetric difference of a characteristic function φ admits two
//! equal expressions: a cosine combination `Σ_j c_{k,j} Re φ(jξ)` with
//! closed-form coefficients, and the measure-side average
//! `∫ sin^{2k}(v·ξ/2) dF(v)`. Both are implemented
//! ([`symmetric_difference`], [`symmetric_difference_direct`]) and their
//! agreement is one of the crate's acceptance checks.
//!
//! On top of the difference operator sit three kinds of norms between
//! characteristic functions φ, ψ:
//!
//! * [`sup_ratio_norm`] — `sup_ξ |φ(ξ)−ψ(ξ)| / |ξ|^β`, approximated from
//!   below on a logarithmic grid of radii times a fixed direction set;
//! * [`difference_integral_norm`] — `∫ |Δ^k φ − Δ^k ψ| / |ξ|^{d+2k−2+α} dξ`,
//!   whose finiteness against ψ ≡ 1 encodes a finite moment of order
//!   `2k−2+α`;
//! * [`real_integral_norm`] — `∫ |Re φ − Re ψ| / |ξ|^{d+α} dξ`, the k = 1
//!   variant up to a factor of two.
//!
//! The combined distances [`moment_distance`] and [`real_moment_distance`]
//! add a sup-ratio term (plus an ε-power) to the integral norms.

use num_complex::Complex64;

use crate::measures::{check_order_params, DiscreteMeasure};
use crate::quad::{IntegralEstimate, QuadSpec, WeightedIntegral};
use crate::{Error, Result};

/// Largest supported difference order; binomials up to C(32, 16) are exact
/// in f64 and the alternating sums stay cancellation-free in this range.
pub const MAX_DIFF_ORDER: u32 = 16;

/// Coefficients (c_{k,0}, ..., c_{k,k}) of the expansion of
/// `sin^{2k}(x/2)` into `Σ_j c_{k,j} cos(jx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCoefficients {
    k: u32,
    c: Vec<f64>,
}

impl DifferenceCoefficients {
    /// Closed form: `c_{k,0} = 2^{-2k} C(2k,k)`,
    /// `c_{k,j} = (-1)^j 2^{-2k+1} C(2k,k+j)` for j >= 1.
    pub fn new(k: u32) -> Result<Self> {
        if !(1..=MAX_DIFF_ORDER).contains(&k) {
            return Err(Error::ParamDomain(format!(
                "difference order k = {k} outside supported range 1..={MAX_DIFF_ORDER}"
            )));
        }
        let two_k = 2 * k as u64;
        let scale = (2.0f64).powi(-2 * k as i32);
        let mut c = Vec::with_capacity(k as usize + 1);
        c.push(scale * binomial(two_k, k as u64) as f64);
        for j in 1..=k as u64 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            c.push(sign * 2.0 * scale * binomial(two_k, k as u64 + j) as f64);
        }
        Ok(DifferenceCoefficients { k, c })
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Evaluate the cosine combination `Σ_j c_j cos(j x)`.
    pub fn cos_sum(&self, x: f64) -> f64 {
        // Chebyshev recurrence on cos(jx) keeps this O(k) with one cosine.
        let c1 = x.cos();
        let mut prev = 1.0;
        let mut cur = c1;
        let mut acc = self.c[0];
        for &cj in &self.c[1..] {
            acc += cj * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        acc
    }
}

/// Exact integer binomial via the multiplicative recurrence.
fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A characteristic function: an evaluator ξ ∈ R^d → C with φ(0) = 1 and
/// |φ| <= 1, realized analytically (from a measure, a Gaussian, the constant
/// one) or by interpolation on a solver grid.
pub trait CharFun: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, xi: &[f64]) -> Complex64;

    /// φ(ξ) − 1, evaluated without cancellation where the backing
    /// representation allows it. Norms of φ − ψ go through this so that
    /// values near ξ = 0 keep full relative accuracy.
    fn eval_minus_one(&self, xi: &[f64]) -> Complex64 {
        self.eval(xi) - Complex64::new(1.0, 0.0)
    }

    /// Radius of the ball on which the evaluator is defined; analytic
    /// representations return infinity, grid-backed ones their extent.
    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// Smallest radius at which values carry full relative accuracy;
    /// grid-backed evaluators report their spacing, analytic ones zero.
    fn resolution_floor(&self) -> f64 {
        0.0
    }
}

/// Characteristic function of a discrete measure:
/// `φ(ξ) = Σ_i w_i e^{-i v_i·ξ}`.
#[derive(Debug, Clone)]
pub struct MeasureCharFun {
    measure: DiscreteMeasure,
}

impl MeasureCharFun {
    pub fn new(measure: &DiscreteMeasure) -> Self {
        MeasureCharFun {
            measure: measure.clone(),
        }
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }
}

impl CharFun for MeasureCharFun {
    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (pt, w) in self.measure.iter() {
            let t: f64 = pt.iter().zip(xi).map(|(v, x)| v * x).sum();
            re += w * t.cos();
            im -= w * t.sin();
        }
        Complex64::new(re, im)
    }

    fn eval_minus_one(&self, xi: &[f64]) -> Complex64 {
        // e^{-it} - 1 = -2 sin²(t/2) - i sin t, stable for small t.
        let mut re = 0.0;
        let mut im = 0.0;
        for (pt, w) in self.measure.iter() {
            let t: f64 = pt.iter().zip(xi).map(|(v, x)| v * x).sum();
            let s = (0.5 * t).sin();
            re -= 2.0 * w * s * s;
            im -= w * t.sin();
        }
        Complex64::new(re, im)
    }
}

/// The constant characteristic function φ ≡ 1 (a unit mass at the origin).
#[derive(Debug, Clone, Copy)]
pub struct UnitCharFun {
    pub dim: usize,
}

impl CharFun for UnitCharFun {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _xi: &[f64]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn eval_minus_one(&self, _xi: &[f64]) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// An isotropic Gaussian `φ(ξ) = e^{-a|ξ|²}` (the equilibrium family).
#[derive(Debug, Clone, Copy)]
pub struct GaussianCharFun {
    pub dim: usize,
    pub a: f64,
}

impl CharFun for GaussianCharFun {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        Complex64::new((-self.a * r2).exp(), 0.0)
    }

    fn eval_minus_one(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        Complex64::new((-self.a * r2).exp_m1(), 0.0)
    }
}

/// k-th symmetric difference `Δ^k φ(ξ) = Σ_j c_{k,j} Re φ(jξ)`.
///
/// Fails when the scaled argument `kξ` leaves the evaluator's domain
/// (grid-backed characteristic functions only).
pub fn symmetric_difference(phi: &dyn CharFun, k: u32, xi: &[f64]) -> Result<f64> {
    let coeffs = DifferenceCoefficients::new(k)?;
    let limit = phi.domain_radius();
    if limit.is_finite() {
        let r: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if k as f64 * r > limit {
            return Err(Error::OutOfDomain {
                requested: k as f64 * r,
                limit,
            });
        }
    }
    let mut buf = [0.0f64; 8];
    let use_stack = xi.len() <= 8;
    let mut heap;
    let scaled: &mut [f64] = if use_stack {
        &mut buf[..xi.len()]
    } else {
        heap = vec![0.0; xi.len()];
        &mut heap
    };
    let mut acc = coeffs.coefficients()[0];
    for (j, &cj) in coeffs.coefficients().iter().enumerate().skip(1) {
        for (s, x) in scaled.iter_mut().zip(xi) {
            *s = j as f64 * x;
        }
        acc += cj * phi.eval(scaled).re;
    }
    Ok(acc)
}

/// Same cosine combination written through φ − 1:
/// `Δ^k φ(ξ) = Σ_{j>=1} c_{k,j} Re(φ(jξ) − 1)` (the j = 0 term vanishes and
/// the coefficients sum to zero). Going through [`CharFun::eval_minus_one`]
/// keeps the alternating sum cancellation-free near ξ = 0, which the
/// weighted integrals depend on. Callers guarantee `k|ξ|` stays inside the
/// evaluator's domain.
pub fn symmetric_difference_stable(
    phi: &dyn CharFun,
    coeffs: &DifferenceCoefficients,
    xi: &[f64],
) -> f64 {
    let mut buf = [0.0f64; 8];
    let use_stack = xi.len() <= 8;
    let mut heap;
    let scaled: &mut [f64] = if use_stack {
        &mut buf[..xi.len()]
    } else {
        heap = vec![0.0; xi.len()];
        &mut heap
    };
    let mut acc = 0.0;
    for (j, &cj) in coeffs.coefficients().iter().enumerate().skip(1) {
        for (s, x) in scaled.iter_mut().zip(xi) {
            *s = j as f64 * x;
        }
        acc += cj * phi.eval_minus_one(scaled).re;
    }
    acc
}

/// The measure-side expression of the same quantity,
/// `∫ sin^{2k}(v·ξ/2) dF(v)`.
pub fn symmetric_difference_direct(f: &DiscreteMeasure, k: u32, xi: &[f64]) -> Result<f64> {
    if !(1..=MAX_DIFF_ORDER).contains(&k) {
        return Err(Error::ParamDomain(format!(
            "difference order k = {k} outside supported range 1..={MAX_DIFF_ORDER}"
        )));
    }
    if xi.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: xi.len(),
        });
    }
    Ok(f.iter()
        .map(|(pt, w)| {
            let t: f64 = pt.iter().zip(xi).map(|(v, x)| v * x).sum();
            w * (0.5 * t).sin().powi(2 * k as i32)
        })
        .sum())
}

/// Fast path for measure-backed evaluators: same cosine combination as
/// [`symmetric_difference`], with one cosine per support point and a
/// Chebyshev recurrence over j. Used inside quadrature loops.
pub fn symmetric_difference_measure(
    f: &DiscreteMeasure,
    coeffs: &DifferenceCoefficients,
    xi: &[f64],
) -> f64 {
    let c = coeffs.coefficients();
    let mut acc = 0.0;
    for (pt, w) in f.iter() {
        let t: f64 = pt.iter().zip(xi).map(|(v, x)| v * x).sum();
        let c1 = t.cos();
        let mut prev = 1.0;
        let mut cur = c1;
        let mut per_point = c[0];
        for &cj in &c[1..] {
            per_point += cj * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        acc += w * per_point;
    }
    acc
}

/// Grid of evaluation points for sup-type norms: logarithmically spaced
/// radii times a fixed set of directions. The resulting supremum is a lower
/// bound of the true one.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub radial_min: f64,
    pub radial_max: f64,
    pub radial_points: usize,
    pub directions: Vec<Vec<f64>>,
}

impl GridSpec {
    /// Default grid for dimension d: 400 radii in [1e-6, 1e3]; directions are
    /// the signed axes plus (for d = 3) the normalized cube edge and corner
    /// directions, 26 in total.
    pub fn default_for_dim(dim: usize) -> Self {
        GridSpec {
            radial_min: 1e-6,
            radial_max: 1e3,
            radial_points: 400,
            directions: direction_set(dim),
        }
    }

    /// Explicit list of radii (geometric spacing).
    pub fn radii(&self) -> Vec<f64> {
        assert!(self.radial_points >= 2);
        let log_lo = self.radial_min.ln();
        let log_hi = self.radial_max.ln();
        (0..self.radial_points)
            .map(|i| {
                let t = i as f64 / (self.radial_points - 1) as f64;
                (log_lo + t * (log_hi - log_lo)).exp()
            })
            .collect()
    }
}

/// Signed axes for every dimension; edge and corner diagonals for d <= 3.
pub fn direction_set(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for j in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[j] = sign;
            dirs.push(v);
        }
    }
    match dim {
        1 => {}
        2 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for sx in [1.0f64, -1.0] {
                for sy in [1.0f64, -1.0] {
                    dirs.push(vec![sx * s, sy * s]);
                }
            }
        }
        3 => {
            let e = std::f64::consts::FRAC_1_SQRT_2;
            // 12 edge directions (two nonzero coordinates)
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                for si in [1.0f64, -1.0] {
                    for sj in [1.0f64, -1.0] {
                        let mut v = vec![0.0; 3];
                        v[i] = si * e;
                        v[j] = sj * e;
                        dirs.push(v);
                    }
                }
            }
            // 8 corner directions
            let c = 1.0 / 3.0f64.sqrt();
            for sx in [1.0f64, -1.0] {
                for sy in [1.0f64, -1.0] {
                    for sz in [1.0f64, -1.0] {
                        dirs.push(vec![sx * c, sy * c, sz * c]);
                    }
                }
            }
        }
        _ => {
            let c = 1.0 / (dim as f64).sqrt();
            dirs.push(vec![c; dim]);
            dirs.push(vec![-c; dim]);
        }
    }
    dirs
}

fn check_same_dim(phi: &dyn CharFun, psi: &dyn CharFun) -> Result<usize> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: psi.dim(),
        });
    }
    Ok(phi.dim())
}

/// Grid approximation of `sup_ξ |φ(ξ) − ψ(ξ)| / |ξ|^β`, a lower bound of the
/// true supremum. Points outside either evaluator's domain are skipped.
pub fn sup_ratio_norm(
    phi: &dyn CharFun,
    psi: &dyn CharFun,
    beta: f64,
    grid: &GridSpec,
) -> Result<f64> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::ParamDomain(format!(
            "beta = {beta} must lie in (0, 2]"
        )));
    }
    let dim = check_same_dim(phi, psi)?;
    if grid.directions.is_empty() || grid.radial_points == 0 {
        return Err(Error::ParamDomain("empty evaluation grid".into()));
    }
    let limit = phi.domain_radius().min(psi.domain_radius());
    let mut sup: f64 = 0.0;
    let mut xi = vec![0.0; dim];
    for r in grid.radii() {
        if r > limit {
            break;
        }
        let wr = r.powf(-beta);
        for dir in &grid.directions {
            for (x, o) in xi.iter_mut().zip(dir) {
                *x = r * o;
            }
            let d = phi.eval_minus_one(&xi) - psi.eval_minus_one(&xi);
            sup = sup.max(d.norm() * wr);
        }
    }
    Ok(sup)
}

/// `∫ |Δ^k φ − Δ^k ψ| / |ξ|^{d+2k−2+α} dξ` by the graded radial x spherical
/// product rule.
///
/// For analytic evaluators the integral runs to `quad.radial_max` with the
/// region beyond charged to the error estimate; for grid-backed evaluators it
/// runs over the resolved ball `|ξ| <= domain/k` and is reported as such (no
/// unresolvable tail is charged).
pub fn difference_integral_norm(
    phi: &dyn CharFun,
    psi: &dyn CharFun,
    k: u32,
    alpha: f64,
    quad: &QuadSpec,
) -> Result<IntegralEstimate> {
    check_order_params(k, alpha)?;
    let dim = check_same_dim(phi, psi)?;
    let order = 2.0 * k as f64 - 2.0 + alpha;
    let limit = phi.domain_radius().min(psi.domain_radius());
    let (r_max, sup_bound) = if limit.is_finite() {
        ((limit / k as f64).min(quad.radial_max), None)
    } else {
        (quad.radial_max, Some(2.0))
    };
    let coeffs = DifferenceCoefficients::new(k)?;
    let wi = WeightedIntegral {
        dim,
        moment_order: order,
        head_exponent: 1.0 - alpha,
        sup_bound,
        r_max,
        r_min: phi.resolution_floor().max(psi.resolution_floor()),
    };
    let est = wi.eval(
        |xi| {
            let a = symmetric_difference_stable(phi, &coeffs, xi);
            let b = symmetric_difference_stable(psi, &coeffs, xi);
            (a - b).abs()
        },
        quad,
    );
    Ok(est)
}

/// `∫ |Re φ − Re ψ| / |ξ|^{d+α} dξ`, the real-part integral norm.
pub fn real_integral_norm(
    phi: &dyn CharFun,
    psi: &dyn CharFun,
    alpha: f64,
    quad: &QuadSpec,
) -> Result<IntegralEstimate> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::ParamDomain(format!(
            "alpha = {alpha} must lie in (0, 2)"
        )));
    }
    let dim = check_same_dim(phi, psi)?;
    let limit = phi.domain_radius().min(psi.domain_radius());
    let (r_max, sup_bound) = if limit.is_finite() {
        (limit.min(quad.radial_max), None)
    } else {
        (quad.radial_max, Some(2.0))
    };
    let wi = WeightedIntegral {
        dim,
        moment_order: alpha,
        head_exponent: 1.0 - alpha,
        sup_bound,
        r_max,
        r_min: phi.resolution_floor().max(psi.resolution_floor()),
    };
    let est = wi.eval(
        |xi| (phi.eval_minus_one(xi).re - psi.eval_minus_one(xi).re).abs(),
        quad,
    );
    Ok(est)
}

/// Combined distance: integral norm of order (k, α) plus the β sup-ratio
/// norm. Parameter domain: `0 < β < α` when k = 1, `0 < β < 2` when k >= 2.
pub fn moment_distance(
    phi: &dyn CharFun,
    psi: &dyn CharFun,
    k: u32,
    alpha: f64,
    beta: f64,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<f64> {
    if k == 1 {
        if !(beta > 0.0 && beta < alpha) {
            return Err(Error::ParamDomain(format!(
                "k = 1 requires 0 < beta < alpha, got beta = {beta}, alpha = {alpha}"
            )));
        }
    } else if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::ParamDomain(format!(
            "k >= 2 requires beta in (0, 2), got beta = {beta}"
        )));
    }
    let integral = difference_integral_norm(phi, psi, k, alpha, quad)?;
    let sup = sup_ratio_norm(phi, psi, beta, grid)?;
    Ok(integral.value + sup)
}

/// Real-part distance with an ε-power stabilizer:
/// real integral norm + sup-ratio norm + (sup-ratio norm)^ε,
/// for `0 < β < α < 2` and `0 < ε < 1`.
pub fn real_moment_distance(
    phi: &dyn CharFun,
    psi: &dyn CharFun,
    alpha: f64,
    beta: f64,
    eps: f64,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<f64> {
    if !(0.0 < beta && beta < alpha && alpha < 2.0) {
        return Err(Error::ParamDomain(format!(
            "need 0 < beta < alpha < 2, got beta = {beta}, alpha = {alpha}"
        )));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::ParamDomain(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    let integral = real_integral_norm(phi, psi, alpha, quad)?;
    let sup = sup_ratio_norm(phi, psi, beta, grid)?;
    Ok(integral.value + sup + sup.powf(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use proptest::test_runner::Config as ProptestConfig;

    fn pair_e1() -> DiscreteMeasure {
        DiscreteMeasure::symmetric_pair(vec![1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn coefficient_spot_values() {
        let c1 = DifferenceCoefficients::new(1).unwrap();
        assert_eq!(c1.coefficients(), &[0.5, -0.5]);

        let c2 = DifferenceCoefficients::new(2).unwrap();
        assert_eq!(c2.coefficients(), &[3.0 / 8.0, -0.5, 1.0 / 8.0]);

        // k = 3 frozen from the symbolic expansion of sin^6(x/2)
        let c3 = DifferenceCoefficients::new(3).unwrap();
        assert_eq!(
            c3.coefficients(),
            &[5.0 / 16.0, -15.0 / 32.0, 3.0 / 16.0, -1.0 / 32.0]
        );

        assert!(DifferenceCoefficients::new(0).is_err());
        assert!(DifferenceCoefficients::new(17).is_err());
    }

    #[test]
    fn coefficient_sum_rules() {
        for k in 1..=MAX_DIFF_ORDER {
            let c = DifferenceCoefficients::new(k).unwrap();
            let sum: f64 = c.coefficients().iter().sum();
            let alt: f64 = c
                .coefficients()
                .iter()
                .enumerate()
                .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
                .sum();
            assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(alt, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn expansion_identity_dense() {
        for k in 1..=MAX_DIFF_ORDER {
            let c = DifferenceCoefficients::new(k).unwrap();
            for i in 0..200 {
                let x = -10.0 + 20.0 * (i as f64 / 199.0);
                let lhs = c.cos_sum(x);
                let rhs = (0.5 * x).sin().powi(2 * k as i32);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn charfun_eval_examples() {
        let origin = DiscreteMeasure::dirac(vec![0.0; 3]).unwrap();
        let phi = MeasureCharFun::new(&origin);
        for xi in [[0.0, 0.0, 0.0], [1.0, 2.0, -0.5]] {
            let v = phi.eval(&xi);
            assert_relative_eq!(v.re, 1.0);
            assert_abs_diff_eq!(v.im, 0.0);
        }

        let phi = MeasureCharFun::new(&pair_e1());
        for t in [0.0, 0.5, 2.0, -3.0] {
            let v = phi.eval(&[t, 0.0, 0.0]);
            assert_relative_eq!(v.re, t.cos(), max_relative = 1e-14);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
        let v = phi.eval(&[std::f64::consts::PI, 0.0, 0.0]);
        assert_relative_eq!(v.re, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn charfun_modulus_bounded() {
        let f = DiscreteMeasure::new(
            3,
            vec![
                vec![0.3, -1.0, 2.0],
                vec![1.5, 0.2, -0.7],
                vec![0.0, 0.0, 0.0],
            ],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let phi = MeasureCharFun::new(&f);
        for i in 0..100 {
            let t = i as f64 * 0.37;
            let xi = [t.sin() * 3.0, (t * 1.7).cos() * 2.0, t * 0.1];
            assert!(phi.eval(&xi).norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn difference_examples() {
        let one = UnitCharFun { dim: 3 };
        for k in [1, 2, 3] {
            assert_abs_diff_eq!(
                symmetric_difference(&one, k, &[0.7, -0.3, 0.1]).unwrap(),
                0.0,
                epsilon = 1e-14
            );
        }

        let phi = MeasureCharFun::new(&pair_e1());
        for k in [1u32, 2, 3] {
            for t in [0.3, 1.0, 2.5, 5.0] {
                let d = symmetric_difference(&phi, k, &[t, 0.0, 0.0]).unwrap();
                assert_abs_diff_eq!(d, (0.5 * t).sin().powi(2 * k as i32), epsilon = 1e-13);
            }
            // ξ = 0
            assert_abs_diff_eq!(
                symmetric_difference(&phi, k, &[0.0, 0.0, 0.0]).unwrap(),
                0.0,
                epsilon = 1e-14
            );
        }

        // direct form: ξ = π e1, k = 2 on the pair gives sin²(π/2)^2 = 1
        let d =
            symmetric_difference_direct(&pair_e1(), 2, &[std::f64::consts::PI, 0.0, 0.0]).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn expansion_identity_random(k in 1u32..=16, x in -10.0f64..10.0) {
            let c = DifferenceCoefficients::new(k).unwrap();
            let lhs = c.cos_sum(x);
            let rhs = (0.5 * x).sin().powi(2 * k as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn dual_difference_formulas_agree(
            k in 1u32..=3,
            seed in proptest::collection::vec(-2.0f64..2.0, 2 * 4),
            xi in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let points: Vec<Vec<f64>> = seed.chunks(2).map(|c| vec![c[0], c[1], c[0] - c[1]]).collect();
            let weights = vec![1.0; points.len()];
            let f = DiscreteMeasure::new(3, points, weights).unwrap();
            let phi = MeasureCharFun::new(&f);
            let a = symmetric_difference(&phi, k, &xi).unwrap();
            let b = symmetric_difference_direct(&f, k, &xi).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "a = {a}, b = {b}");
            // range and evenness
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a));
            let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
            let c = symmetric_difference(&phi, k, &neg).unwrap();
            prop_assert!((a - c).abs() <= 1e-12);
            // fast measure path matches
            let coeffs = DifferenceCoefficients::new(k).unwrap();
            let d = symmetric_difference_measure(&f, &coeffs, &xi);
            prop_assert!((a - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let grid = GridSpec::default_for_dim(3);
        let phi = MeasureCharFun::new(&pair_e1());
        let one = UnitCharFun { dim: 3 };

        // φ = ψ
        assert_abs_diff_eq!(sup_ratio_norm(&phi, &phi, 1.0, &grid).unwrap(), 0.0);

        // sup (1 − cos t)/t² = 1/2 toward t → 0; a grid reaching 1e-6 sees it
        // to 1e-6 thanks to the cancellation-free evaluation path.
        let v = sup_ratio_norm(&phi, &one, 2.0, &grid).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-6);
        assert!(v <= 0.5 + 1e-12, "grid sup must stay a lower bound");

        // boundedness of ‖φ − 1‖_β for a measure with finite β-moment
        let v = sup_ratio_norm(&phi, &one, 1.0, &grid).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn integral_norm_zero_for_equal_arguments() {
        let phi = MeasureCharFun::new(&pair_e1());
        let est = difference_integral_norm(&phi, &phi, 2, 0.5, &QuadSpec::coarse()).unwrap();
        assert_abs_diff_eq!(est.value, 0.0, epsilon = 1e-14);
        assert!(est.converged);
    }

    #[test]
    fn real_integral_norm_is_twice_k1_norm() {
        let phi = MeasureCharFun::new(&pair_e1());
        let one = UnitCharFun { dim: 3 };
        let quad = QuadSpec::coarse();
        let tilde = real_integral_norm(&phi, &one, 0.8, &quad).unwrap();
        let k1 = difference_integral_norm(&phi, &one, 1, 0.8, &quad).unwrap();
        assert_relative_eq!(tilde.value, 2.0 * k1.value, max_relative = 1e-10);
        // Remark-style coincidence: both finite together
        assert!(tilde.value.is_finite() && k1.value.is_finite());
    }

    #[test]
    fn integral_norm_scaling_law() {
        // F_λ(v) = F(v/λ) multiplies the norm against ψ ≡ 1 by λ^{2k-2+α}
        let lambda = 2.0;
        let (k, alpha) = (2u32, 0.5);
        let base = pair_e1();
        let scaled = DiscreteMeasure::symmetric_pair(vec![lambda, 0.0, 0.0]).unwrap();
        let one = UnitCharFun { dim: 3 };
        let quad = QuadSpec::default();
        let n0 =
            difference_integral_norm(&MeasureCharFun::new(&base), &one, k, alpha, &quad).unwrap();
        let n1 =
            difference_integral_norm(&MeasureCharFun::new(&scaled), &one, k, alpha, &quad).unwrap();
        let expected = lambda.powf(2.0 * k as f64 - 2.0 + alpha);
        assert_relative_eq!(n1.value / n0.value, expected, max_relative = 1e-2);
    }

    #[test]
    fn distance_parameter_domains() {
        let phi = MeasureCharFun::new(&pair_e1());
        let one = UnitCharFun { dim: 3 };
        let grid = GridSpec::default_for_dim(3);
        let quad = QuadSpec::coarse();
        // k = 1 needs beta < alpha
        assert!(moment_distance(&phi, &one, 1, 0.5, 0.9, &grid, &quad).is_err());
        assert!(moment_distance(&phi, &one, 1, 1.5, 0.9, &grid, &quad).is_ok());
        // k = 2 allows beta in (0, 2)
        assert!(moment_distance(&phi, &one, 2, 0.5, 1.9, &grid, &quad).is_ok());
        assert!(moment_distance(&phi, &one, 2, 0.5, 2.0, &grid, &quad).is_err());
        // eps domain
        assert!(real_moment_distance(&phi, &one, 1.5, 0.5, 0.0, &grid, &quad).is_err());
        assert!(real_moment_distance(&phi, &one, 1.5, 0.5, 0.5, &grid, &quad).is_ok());
    }

    #[test]
    fn triangle_inequality_on_measure_triples() {
        // Positive quadrature of a pointwise triangle inequality: holds up to
        // rounding for any fixed mesh.
        let quad = QuadSpec::coarse();
        let grid = GridSpec::default_for_dim(1);
        let ms: Vec<DiscreteMeasure> = vec![
            DiscreteMeasure::symmetric_pair(vec![1.0]).unwrap(),
            DiscreteMeasure::symmetric_pair(vec![0.5]).unwrap(),
            DiscreteMeasure::new(
                1,
                vec![vec![2.0], vec![-1.0], vec![-1.0 + 1e-9]],
                vec![0.4, 0.3, 0.3],
            )
            .unwrap()
            .center(),
        ];
        let cfs: Vec<MeasureCharFun> = ms.iter().map(MeasureCharFun::new).collect();
        let d = |a: &MeasureCharFun, b: &MeasureCharFun| {
            moment_distance(a, b, 2, 0.5, 1.0, &grid, &quad).unwrap()
        };
        let d01 = d(&cfs[0], &cfs[1]);
        let d12 = d(&cfs[1], &cfs[2]);
        let d02 = d(&cfs[0], &cfs[2]);
        assert!(d02 <= d01 + d12 + 1e-10, "{d02} vs {d01} + {d12}");
        assert!(d01 <= d02 + d12 + 1e-10);
    }

    #[test]
    fn integral_norm_of_unit_pair_equals_moment_constant() {
        // ‖φ − 1‖ at (k, α) for the unit two-point measure equals
        // c_{α,3,∞,k}: the moment is one, so the exact identity collapses to
        // the constant itself. Two independent public routes must agree.
        let pair = pair_e1();
        let one = UnitCharFun { dim: 3 };
        let quad = QuadSpec::default();
        let norm =
            difference_integral_norm(&MeasureCharFun::new(&pair), &one, 2, 0.0, &quad).unwrap();
        let c = crate::moments::moment_constant(0.0, 3, f64::INFINITY, 2, &quad).unwrap();
        assert_relative_eq!(norm.value, c.value, max_relative = 5e-3);
    }

    #[test]
    fn eps_distance_composes_its_parts() {
        let phi = MeasureCharFun::new(&pair_e1());
        let one = UnitCharFun { dim: 3 };
        let grid = GridSpec::default_for_dim(3);
        let quad = QuadSpec::coarse();
        let (alpha, beta, eps) = (1.5, 0.5, 0.5);
        let total = real_moment_distance(&phi, &one, alpha, beta, eps, &grid, &quad).unwrap();
        let tilde = real_integral_norm(&phi, &one, alpha, &quad).unwrap().value;
        let sup = sup_ratio_norm(&phi, &one, beta, &grid).unwrap();
        assert_relative_eq!(total, tilde + sup + sup.powf(eps), max_relative = 1e-12);
        // identical arguments give zero
        assert_abs_diff_eq!(
            real_moment_distance(&phi, &phi, alpha, beta, eps, &grid, &quad).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn triangle_inequality_random_triples(
            r1 in 0.3f64..2.0,
            r2 in 0.3f64..2.0,
            r3 in 0.3f64..2.0,
        ) {
            let quad = QuadSpec::coarse();
            let grid = GridSpec::default_for_dim(1);
            let cfs: Vec<MeasureCharFun> = [r1, r2, r3]
                .iter()
                .map(|&r| MeasureCharFun::new(&DiscreteMeasure::symmetric_pair(vec![r]).unwrap()))
                .collect();
            let d = |a: &MeasureCharFun, b: &MeasureCharFun| {
                moment_distance(a, b, 2, 0.5, 1.0, &grid, &quad).unwrap()
            };
            let d01 = d(&cfs[0], &cfs[1]);
            let d12 = d(&cfs[1], &cfs[2]);
            let d02 = d(&cfs[0], &cfs[2]);
            prop_assert!(d02 <= d01 + d12 + 1e-10);
            prop_assert!(d01 <= d02 + d12 + 1e-10);
            prop_assert!(d12 <= d01 + d02 + 1e-10);
        }
    }

    #[test]
    fn embedding_sanity_on_grid() {
        // For 2 >= α >= β > 0, finiteness of ‖φ−1‖_α on the grid implies
        // finiteness of ‖φ−1‖_β there.
        let phi = MeasureCharFun::new(&pair_e1());
        let one = UnitCharFun { dim: 3 };
        let grid = GridSpec::default_for_dim(3);
        let va = sup_ratio_norm(&phi, &one, 2.0, &grid).unwrap();
        let vb = sup_ratio_norm(&phi, &one, 1.0, &grid).unwrap();
        let vc = sup_ratio_norm(&phi, &one, 0.5, &grid).unwrap();
        assert!(va.is_finite() && vb.is_finite() && vc.is_finite());
    }
}
