//! Angular collision cross sections b(cos θ) on (0, π/2], including the
//! grazing singularity b ~ K θ^{-(2+ν)}, their symmetrization, the
//! integrability index, and the rate constant λ_β that governs the
//! Lipschitz-in-time estimate of the solver.
//!
//! All θ-integrals here share one graded quadrature: geometric cells refined
//! toward θ = 0 where the kernel blows up, an optional hard cutoff θ_min with
//! an analytic remainder bound, and a two-level convergence check.

use crate::quad::{geometric_cells, GaussLegendre};
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Functional form of the cross section.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossSectionForm {
    /// b ≡ c.
    Constant(f64),
    /// b(cos θ) = K θ^{-(2+ν)}: the simplest member of the admissible
    /// grazing class (smooth factor s ≡ 1).
    Grazing { nu: f64, strength: f64 },
    /// Piecewise-linear table of (θ, b) samples.
    Tabulated { thetas: Vec<f64>, values: Vec<f64> },
    /// b(θ) + b(π − θ), produced by [`CrossSection::symmetrize`].
    Symmetrized(Box<CrossSection>),
}

/// An angular cross section with its domain end (π/2 after symmetrization,
/// π for raw input kernels) and an optional angular cutoff below which the
/// kernel is treated as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub form: CrossSectionForm,
    /// Kernel vanishes for θ < theta_min (0 disables the cutoff).
    pub theta_min: f64,
    /// Upper end of the θ-domain.
    pub domain_end: f64,
}

impl CrossSection {
    /// Constant kernel on (0, π/2].
    pub fn constant(c: f64) -> Self {
        CrossSection {
            form: CrossSectionForm::Constant(c),
            theta_min: 0.0,
            domain_end: FRAC_PI_2,
        }
    }

    /// Grazing kernel K θ^{-(2+ν)} on (0, π/2], 0 < ν < 2.
    pub fn grazing(nu: f64, strength: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 2.0) {
            return Err(Error::ParamDomain(format!("nu = {nu} must lie in (0, 2)")));
        }
        if !(strength > 0.0) {
            return Err(Error::ParamDomain(
                "grazing strength K must be positive".into(),
            ));
        }
        Ok(CrossSection {
            form: CrossSectionForm::Grazing { nu, strength },
            theta_min: 0.0,
            domain_end: FRAC_PI_2,
        })
    }

    /// Tabulated kernel; θ samples must be strictly increasing and positive.
    pub fn tabulated(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.len() != values.len() || thetas.len() < 2 {
            return Err(Error::ParamDomain(
                "table needs >= 2 matching samples".into(),
            ));
        }
        if !thetas.windows(2).all(|w| w[0] < w[1]) || thetas[0] <= 0.0 {
            return Err(Error::ParamDomain(
                "table angles must be increasing and positive".into(),
            ));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::ParamDomain(
                "table values must be finite and nonnegative".into(),
            ));
        }
        let end = thetas.last().copied().unwrap().min(PI);
        Ok(CrossSection {
            form: CrossSectionForm::Tabulated { thetas, values },
            theta_min: 0.0,
            domain_end: end.max(FRAC_PI_2),
        })
    }

    /// Same kernel considered on (0, π), for feeding [`Self::symmetrize`].
    pub fn over_full_range(mut self) -> Self {
        self.domain_end = PI;
        self
    }

    /// Apply an angular cutoff: the kernel is zero below `theta_min`.
    pub fn with_cutoff(mut self, theta_min: f64) -> Self {
        self.theta_min = theta_min.max(0.0);
        self
    }

    /// Grazing exponent ν, for forms that have one.
    pub fn grazing_exponent(&self) -> Option<f64> {
        match &self.form {
            CrossSectionForm::Grazing { nu, .. } => Some(*nu),
            CrossSectionForm::Symmetrized(inner) => inner.grazing_exponent(),
            _ => None,
        }
    }

    fn raw_eval(&self, theta: f64) -> f64 {
        match &self.form {
            CrossSectionForm::Constant(c) => *c,
            CrossSectionForm::Grazing { nu, strength } => strength * theta.powf(-(2.0 + nu)),
            CrossSectionForm::Tabulated { thetas, values } => {
                if theta <= thetas[0] {
                    values[0]
                } else if theta >= *thetas.last().unwrap() {
                    *values.last().unwrap()
                } else {
                    let idx = thetas.partition_point(|&t| t < theta) - 1;
                    let (t0, t1) = (thetas[idx], thetas[idx + 1]);
                    let s = (theta - t0) / (t1 - t0);
                    values[idx] * (1.0 - s) + values[idx + 1] * s
                }
            }
            CrossSectionForm::Symmetrized(inner) => {
                // Inner kernel lives on (0, π); contributions beyond its
                // domain are extended by zero.
                let a = if theta <= inner.domain_end {
                    inner.raw_eval_cut(theta)
                } else {
                    0.0
                };
                let mirrored = PI - theta;
                let b = if mirrored <= inner.domain_end {
                    inner.raw_eval_cut(mirrored)
                } else {
                    0.0
                };
                a + b
            }
        }
    }

    fn raw_eval_cut(&self, theta: f64) -> f64 {
        if theta < self.theta_min {
            0.0
        } else {
            self.raw_eval(theta)
        }
    }

    /// Kernel value at θ. Errors outside (0, domain_end]; returns 0 below an
    /// active cutoff.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= self.domain_end + 1e-15) {
            return Err(Error::ParamDomain(format!(
                "theta = {theta} outside the kernel domain (0, {}]",
                self.domain_end
            )));
        }
        Ok(self.raw_eval_cut(theta))
    }

    /// Symmetrized kernel [b(θ) + b(π − θ)] restricted to (0, π/2]. Kernels
    /// already restricted to (0, π/2] are extended by zero beyond it, which
    /// makes the operation idempotent.
    pub fn symmetrize(&self) -> Self {
        if self.domain_end <= FRAC_PI_2 + 1e-12 {
            // π − θ >= π/2 lies outside the stored domain: extension by zero
            // reproduces the kernel itself.
            return self.clone();
        }
        match &self.form {
            CrossSectionForm::Constant(c) => CrossSection {
                form: CrossSectionForm::Constant(2.0 * c),
                theta_min: self.theta_min,
                domain_end: FRAC_PI_2,
            },
            _ => CrossSection {
                form: CrossSectionForm::Symmetrized(Box::new(self.clone())),
                theta_min: 0.0,
                domain_end: FRAC_PI_2,
            },
        }
    }

    /// Graded two-level integral of f(θ)·b(θ)·sin θ over the kernel domain.
    /// Returns (value, level_disagreement).
    fn weighted_theta_integral<F: Fn(f64) -> f64>(
        &self,
        f: F,
        floor: f64,
        ratio: f64,
        gl_points: usize,
    ) -> (f64, f64) {
        let lo = self.theta_min.max(floor).min(FRAC_PI_2);
        let hi = FRAC_PI_2;
        if lo >= hi {
            return (0.0, 0.0);
        }
        let integrand = |theta: f64| self.raw_eval_cut(theta) * f(theta) * theta.sin();
        let coarse = graded_integral(&integrand, lo, hi, ratio, gl_points);
        let fine = graded_integral(&integrand, lo, hi, ratio.sqrt(), gl_points + 2);
        (fine, (fine - coarse).abs())
    }
}

fn graded_integral<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    ratio: f64,
    gl_points: usize,
) -> f64 {
    let gl = GaussLegendre::new(gl_points);
    geometric_cells(lo, hi, ratio)
        .iter()
        .map(|&(a, b)| gl.mapped(a, b).map(|(x, w)| w * f(x)).sum::<f64>())
        .sum()
}

/// Result of the integrability test
/// `∫ sin^{α0}(θ/2) b(cos θ) sin θ dθ < ∞`.
#[derive(Debug, Clone, Copy)]
pub struct IntegrabilityIndex {
    pub finite: bool,
    pub value: f64,
}

/// Check the angular integrability condition at exponent `α0 ∈ (0, 2)`:
/// quadrature at two refinement depths must agree within 1%, and the grazing
/// analytic form must additionally satisfy ν < α0 (the two agree on every
/// admissible kernel; the analytic criterion guards the quadrature).
pub fn integrability_index(b: &CrossSection, alpha0: f64) -> Result<IntegrabilityIndex> {
    if !(0.0 < alpha0 && alpha0 < 2.0) {
        return Err(Error::ParamDomain(format!(
            "alpha0 = {alpha0} must lie in (0, 2)"
        )));
    }
    let f = |theta: f64| (0.5 * theta).sin().powf(alpha0);
    // Two depths that differ in how far toward θ = 0 they resolve: a
    // divergent integral keeps growing, a convergent one stabilizes.
    let (shallow, _) = b.weighted_theta_integral(f, 1e-10, 1.2, 6);
    let (deep, _) = b.weighted_theta_integral(f, 1e-13, 1.1, 8);
    let agree = (deep - shallow).abs() <= 0.01 * deep.abs().max(1e-300);
    let finite = match b.grazing_exponent() {
        Some(nu) if b.theta_min == 0.0 => agree && nu < alpha0,
        _ => agree,
    };
    Ok(IntegrabilityIndex {
        finite,
        value: deep,
    })
}

/// The rate constant
/// `λ_β = ∫_0^{π/2} b(cos θ) (sin^β(θ/2) + cos^β(θ/2) − 1) sin θ dθ`.
#[derive(Debug, Clone, Copy)]
pub struct RateConstant {
    pub value: f64,
    /// Analytic bound on the mass below the resolved floor.
    pub remainder_bound: f64,
    /// Set when the remainder bound exceeds 5% of the value (β barely above
    /// the grazing exponent).
    pub ill_conditioned: bool,
}

/// Cancellation-free bracket sin^β(θ/2) + cos^β(θ/2) − 1, written as
/// (s^β − s²) + c²((c²)^{(β−2)/2} − 1) with c² = 1 − s². Both terms vanish
/// identically at β = 2, so λ_2 = 0 holds to round-off even against a
/// divergent kernel weight.
fn beta_bracket(theta: f64, beta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    let s2 = s * s;
    let c2 = 1.0 - s2;
    let term1 = s2.powf(0.5 * beta) - s2;
    // c² >= 1/2 on (0, π/2], so the logarithm is always safe here
    let term2 = c2 * (0.5 * (beta - 2.0) * c2.ln()).exp_m1();
    term1 + term2
}

/// Compute λ_β for `β ∈ (0, 2]`. For the grazing form the integral only
/// converges for β > ν; β <= ν is reported as divergent.
pub fn lambda_beta(b: &CrossSection, beta: f64) -> Result<RateConstant> {
    if !(0.0 < beta && beta <= 2.0) {
        return Err(Error::ParamDomain(format!(
            "beta = {beta} must lie in (0, 2]"
        )));
    }
    if let Some(nu) = b.grazing_exponent() {
        if b.theta_min == 0.0 && beta <= nu {
            return Err(Error::ParamDomain(format!(
                "lambda_beta diverges: beta = {beta} <= nu = {nu} with no cutoff"
            )));
        }
    }
    let floor = 1e-12;
    let (value, disagreement) =
        b.weighted_theta_integral(|t| beta_bracket(t, beta), floor, 1.15, 6);
    let remainder_bound = match b.grazing_exponent() {
        Some(nu) if b.theta_min < floor => {
            // below the floor the integrand is <= K θ^{β-1-ν} (since the
            // bracket is <= sin^β(θ/2) <= (θ/2)^β and sin θ <= θ)
            let strength = match &b.form {
                CrossSectionForm::Grazing { strength, .. } => *strength,
                _ => 1.0,
            };
            strength * floor.powf(beta - nu) / (beta - nu)
        }
        _ => 0.0,
    };
    let scale = value.abs().max(1e-300);
    Ok(RateConstant {
        value,
        remainder_bound: remainder_bound + disagreement,
        ill_conditioned: remainder_bound > 0.05 * scale,
    })
}

/// Precomputed θ-mesh for the collision integrals: node angles with their
/// half-angle sines/cosines and the combined weight w·b(cos θ)·sin θ.
/// Immutable once built; shared read-only across solver threads.
#[derive(Debug, Clone)]
pub struct ThetaMesh {
    pub nodes: Vec<ThetaNode>,
}

#[derive(Debug, Clone, Copy)]
pub struct ThetaNode {
    pub theta: f64,
    pub cos_half: f64,
    pub sin_half: f64,
    /// Quadrature weight times b(cos θ) sin θ.
    pub w_b_sin: f64,
}

impl ThetaMesh {
    /// Graded mesh over [max(floor, cutoff), π/2]. `cells_ratio` controls the
    /// geometric grading, `gl_points` the rule order per cell.
    pub fn new(b: &CrossSection, floor: f64, cells_ratio: f64, gl_points: usize) -> Self {
        let lo = b.theta_min.max(floor).min(FRAC_PI_2);
        let hi = FRAC_PI_2;
        let mut nodes = Vec::new();
        if lo < hi {
            let gl = GaussLegendre::new(gl_points);
            for (a, c) in geometric_cells(lo, hi, cells_ratio) {
                for (theta, w) in gl.mapped(a, c) {
                    nodes.push(ThetaNode {
                        theta,
                        cos_half: (0.5 * theta).cos(),
                        sin_half: (0.5 * theta).sin(),
                        w_b_sin: w * b.raw_eval_cut(theta) * theta.sin(),
                    });
                }
            }
        }
        ThetaMesh { nodes }
    }

    /// Total collision rate Λ = 2π ∫ b sin θ dθ over the meshed range.
    pub fn total_rate(&self) -> f64 {
        2.0 * PI * self.nodes.iter().map(|n| n.w_b_sin).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Adaptive Simpson oracle, independent of the graded-mesh machinery.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let s = |l: f64, r: f64| {
            let mid = 0.5 * (l + r);
            (r - l) / 6.0 * (f(l) + 4.0 * f(mid) + f(r))
        };
        let whole = s(a, b);
        let halves = s(a, m) + s(m, b);
        if depth == 0 || (whole - halves).abs() <= 15.0 * tol {
            halves + (halves - whole) / 15.0
        } else {
            simpson(f, a, m, 0.5 * tol, depth - 1) + simpson(f, m, b, 0.5 * tol, depth - 1)
        }
    }

    #[test]
    fn constant_kernel_eval() {
        let b = CrossSection::constant(1.0);
        assert_relative_eq!(b.eval(FRAC_PI_2 * 0.5).unwrap(), 1.0);
        assert!(b.eval(FRAC_PI_2).unwrap().is_finite());
        assert!(b.eval(0.0).is_err());
        assert!(b.eval(2.0).is_err());
        let cut = b.with_cutoff(0.1);
        assert_eq!(cut.eval(0.05).unwrap(), 0.0);
        assert_relative_eq!(cut.eval(0.2).unwrap(), 1.0);
    }

    #[test]
    fn grazing_asymptote() {
        let b = CrossSection::grazing(0.7, 2.5).unwrap();
        for theta in [1e-3, 1e-4] {
            let ratio = b.eval(theta).unwrap() * theta.powf(2.7) / 2.5;
            assert_relative_eq!(ratio, 1.0, max_relative = 0.01);
        }
        assert!(b.eval(FRAC_PI_2).unwrap().is_finite());
        assert!(CrossSection::grazing(2.5, 1.0).is_err());
    }

    #[test]
    fn symmetrize_constant_and_idempotence() {
        let raw = CrossSection::constant(1.0).over_full_range();
        let sym = raw.symmetrize();
        assert_eq!(sym.domain_end, FRAC_PI_2);
        assert_relative_eq!(sym.eval(0.3).unwrap(), 2.0);
        // already restricted: symmetrize again is the identity
        let twice = sym.symmetrize();
        assert_relative_eq!(twice.eval(0.3).unwrap(), sym.eval(0.3).unwrap());

        let pi2_only = CrossSection::constant(3.0);
        assert_eq!(pi2_only.symmetrize(), pi2_only);
    }

    #[test]
    fn symmetrize_keeps_grazing_exponent() {
        let raw = CrossSection::grazing(0.5, 1.0).unwrap().over_full_range();
        let sym = raw.symmetrize();
        // the mirrored term is bounded near zero, so θ^{2+ν} b_sym(θ) → K
        for theta in [1e-3, 1e-5] {
            let scaled = sym.eval(theta).unwrap() * theta.powf(2.5);
            assert_relative_eq!(scaled, 1.0, max_relative = 1e-2);
        }
        assert_eq!(sym.grazing_exponent(), Some(0.5));
    }

    #[test]
    fn integrability_constant_matches_oracle() {
        let b = CrossSection::constant(1.0);
        for alpha0 in [0.5, 1.0, 1.5] {
            let idx = integrability_index(&b, alpha0).unwrap();
            assert!(idx.finite);
            let oracle = simpson(
                |t: f64| (0.5 * t).sin().powf(alpha0) * t.sin(),
                1e-12,
                FRAC_PI_2,
                1e-12,
                40,
            );
            assert_relative_eq!(idx.value, oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn integrability_matches_analytic_criterion() {
        for nu in [0.5, 1.0, 1.5] {
            for alpha0 in [0.75, 1.25] {
                let b = CrossSection::grazing(nu, 1.0).unwrap();
                let idx = integrability_index(&b, alpha0).unwrap();
                assert_eq!(idx.finite, nu < alpha0, "nu = {nu}, alpha0 = {alpha0}");
            }
        }
    }

    #[test]
    fn integrability_monotone_in_alpha0() {
        let b = CrossSection::grazing(0.9, 1.0).unwrap();
        let coarse = integrability_index(&b, 0.8).unwrap();
        let finer = integrability_index(&b, 1.2).unwrap();
        assert!(!coarse.finite && finer.finite);
    }

    #[test]
    fn lambda_two_vanishes_to_roundoff() {
        for b in [
            CrossSection::constant(1.0),
            CrossSection::grazing(0.5, 1.0).unwrap(),
        ] {
            let l2 = lambda_beta(&b, 2.0).unwrap();
            assert!(l2.value.abs() <= 1e-12, "lambda_2 = {}", l2.value);
        }
    }

    #[test]
    fn lambda_one_constant_kernel() {
        // closed form: ∫ (sin(θ/2)+cos(θ/2)−1) sinθ dθ over [0, π/2] = 1/3
        let b = CrossSection::constant(1.0);
        let l1 = lambda_beta(&b, 1.0).unwrap();
        assert_relative_eq!(l1.value, 1.0 / 3.0, max_relative = 1e-9);
        // adaptive oracle agrees
        let oracle = simpson(
            |t: f64| ((0.5 * t).sin() + (0.5 * t).cos() - 1.0) * t.sin(),
            1e-12,
            FRAC_PI_2,
            1e-13,
            40,
        );
        assert_relative_eq!(l1.value, oracle, max_relative = 1e-8);
    }

    #[test]
    fn lambda_grazing_finite_positive() {
        let b = CrossSection::grazing(0.5, 1.0).unwrap();
        let l1 = lambda_beta(&b, 1.0).unwrap();
        assert!(l1.value > 0.0);
        assert!(l1.remainder_bound <= 1e-3 * l1.value);
        assert!(!l1.ill_conditioned);
        // divergent below the exponent
        assert!(lambda_beta(&b, 0.4).is_err());
    }

    #[test]
    fn lambda_nonincreasing_in_beta() {
        let b = CrossSection::grazing(0.5, 1.0).unwrap();
        let betas = [0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
        let mut prev = f64::INFINITY;
        for &beta in &betas {
            let l = lambda_beta(&b, beta).unwrap();
            assert!(l.value >= -1e-12, "lambda_{beta} = {}", l.value);
            assert!(l.value <= prev + 1e-10);
            prev = l.value;
        }
    }

    #[test]
    fn cutoff_monotone_convergence() {
        let uncut = lambda_beta(&CrossSection::grazing(0.5, 1.0).unwrap(), 1.0)
            .unwrap()
            .value;
        let mut prev = 0.0;
        for theta_min in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let b = CrossSection::grazing(0.5, 1.0)
                .unwrap()
                .with_cutoff(theta_min);
            let v = lambda_beta(&b, 1.0).unwrap().value;
            assert!(v >= prev - 1e-12);
            assert!(v <= uncut + 1e-9);
            prev = v;
        }
        assert_relative_eq!(prev, uncut, max_relative = 1e-3);
    }

    #[test]
    fn tabulated_kernel_interpolates_and_integrates() {
        // table sampling b(θ) = 1 + θ: linear interpolation is exact
        let thetas: Vec<f64> = (1..=40).map(|i| i as f64 * FRAC_PI_2 / 40.0).collect();
        let values: Vec<f64> = thetas.iter().map(|t| 1.0 + t).collect();
        let b = CrossSection::tabulated(thetas, values).unwrap();
        assert_relative_eq!(b.eval(0.7).unwrap(), 1.7, max_relative = 1e-12);
        // constant extrapolation below the first sample
        assert_relative_eq!(b.eval(1e-3).unwrap(), 1.0 + FRAC_PI_2 / 40.0);
        // a bounded kernel is integrable at every exponent and has λ_2 = 0
        assert!(integrability_index(&b, 0.3).unwrap().finite);
        assert!(lambda_beta(&b, 2.0).unwrap().value.abs() <= 1e-12);
        assert!(lambda_beta(&b, 1.0).unwrap().value > 0.0);
        // malformed tables are rejected
        assert!(CrossSection::tabulated(vec![0.2, 0.1], vec![1.0, 1.0]).is_err());
        assert!(CrossSection::tabulated(vec![0.1, 0.2], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn theta_mesh_total_rate() {
        // constant kernel: Λ = 2π ∫_0^{π/2} sinθ dθ = 2π
        let b = CrossSection::constant(1.0);
        let mesh = ThetaMesh::new(&b, 1e-6, 1.2, 6);
        assert_relative_eq!(mesh.total_rate(), 2.0 * PI, max_relative = 1e-9);
        // cutoff grazing: rate matches the analytic integral of θ^{-2.5}...
        // checked against the oracle
        let b = CrossSection::grazing(0.5, 1.0).unwrap().with_cutoff(1e-2);
        let mesh = ThetaMesh::new(&b, 1e-6, 1.15, 6);
        let oracle = simpson(|t: f64| t.powf(-2.5) * t.sin(), 1e-2, FRAC_PI_2, 1e-12, 40);
        assert_relative_eq!(mesh.total_rate(), 2.0 * PI * oracle, max_relative = 1e-7);
    }
}
