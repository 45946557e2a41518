//! Quadrature engine for the weighted integrals behind every norm and
//! moment bound in this crate.
//!
//! All of them have the shape
//!
//! ```text
//!   ∫_{R^d} g(ξ) / |ξ|^{d+m} dξ  =  ∫_0^∞ r^{-(m+1)} ( ∫_{S^{d-1}} g(rω) dω ) dr
//! ```
//!
//! with `g ≥ 0` bounded and `m > 0`, integrable at both ends: near zero the
//! integrand behaves like a positive power of `r`, at infinity it decays like
//! `r^{-(m+1)}`. A geometric radial mesh refined toward `r = 0` handles both
//! regimes; the sphere factor uses a product Gauss-Legendre rule in `cos θ`
//! times a uniform azimuth rule. Truncation beyond `r_max` and the unresolved
//! head below `r_min` are bounded analytically and charged to the error
//! estimate, never to the value.

use rayon::prelude::*;

/// Configuration of the radial x spherical product quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    /// Smallest resolved radius of the graded mesh.
    pub radial_min: f64,
    /// Truncation radius. Finite-ball integrals may override it downward.
    pub radial_max: f64,
    /// Geometric cell ratio of the mesh (refining toward zero).
    pub grading_ratio: f64,
    /// Gauss-Legendre points per radial cell.
    pub gl_points: usize,
    /// Polar (cos θ) Gauss-Legendre nodes of the sphere rule, d = 3 only.
    pub sphere_nodes_polar: usize,
    /// Uniform azimuth nodes of the sphere rule, d >= 2 only.
    pub sphere_nodes_azimuth: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            radial_min: 1e-10,
            radial_max: 64.0,
            grading_ratio: 1.15,
            gl_points: 4,
            sphere_nodes_polar: 24,
            sphere_nodes_azimuth: 48,
        }
    }
}

impl QuadSpec {
    /// A cheaper spec for property tests and smoke checks.
    pub fn coarse() -> Self {
        QuadSpec {
            radial_min: 1e-8,
            radial_max: 32.0,
            grading_ratio: 1.3,
            gl_points: 4,
            sphere_nodes_polar: 12,
            sphere_nodes_azimuth: 24,
        }
    }

    /// The refined companion used for the two-level convergence estimate.
    fn refined(&self) -> Self {
        QuadSpec {
            radial_min: self.radial_min,
            radial_max: self.radial_max,
            grading_ratio: self.grading_ratio.sqrt(),
            gl_points: self.gl_points,
            sphere_nodes_polar: self.sphere_nodes_polar + self.sphere_nodes_polar / 2,
            sphere_nodes_azimuth: self.sphere_nodes_azimuth + self.sphere_nodes_azimuth / 2,
        }
    }
}

/// Result of a two-level quadrature: `value` is the fine level, `est_error`
/// collects the level disagreement plus the analytic head and tail bounds.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: f64,
    pub est_error: f64,
    /// Refinable part of the error: level disagreement plus head
    /// extrapolation uncertainty, without the analytic tail bound.
    pub refinement_gap: f64,
    pub converged: bool,
}

impl IntegralEstimate {
    fn assemble(fine: f64, coarse: f64, head_unc: f64, tail: f64) -> Self {
        let refinement_gap = (fine - coarse).abs() + head_unc;
        let est_error = refinement_gap + tail;
        // Convergence is about the refinement levels (and the head
        // extrapolation) agreeing; the analytic tail bound is charged to
        // est_error but cannot be refined away, so it does not veto.
        let converged = refinement_gap <= (5e-3 * fine.abs()).max(1e-12);
        IntegralEstimate {
            value: fine,
            est_error,
            refinement_gap,
            converged,
        }
    }
}

/// Parameters of one weighted integral `∫ g(ξ)/|ξ|^{d+m} dξ`.
pub struct WeightedIntegral {
    /// Ambient dimension d.
    pub dim: usize,
    /// Moment order m in the weight `|ξ|^{-(d+m)}`.
    pub moment_order: f64,
    /// Power q such that the radial integrand behaves like `r^q` near zero;
    /// used for the analytic head extrapolation below the resolved floor.
    pub head_exponent: f64,
    /// Uniform bound on |g| when the domain is all of R^d; `None` means the
    /// integral runs over a finite ball and no tail is charged.
    pub sup_bound: Option<f64>,
    /// Ball radius (finite-ball case) or truncation radius.
    pub r_max: f64,
    /// Resolution floor of the integrand (0 for analytic evaluators;
    /// grid-backed characteristic functions pass their spacing here).
    pub r_min: f64,
}

impl WeightedIntegral {
    /// Evaluate with a two-level refinement; `g` is sampled at full vectors
    /// `ξ = r ω`.
    ///
    /// The integration window adapts on both ends. Below the floor the
    /// integrand is extrapolated by its leading power (charging half the
    /// correction to the error); the floor itself never goes below the
    /// radius where float rounding of `g` (absolute level ~ r²·1e-16 for
    /// stable difference evaluations) would pollute the weighted integral.
    /// For full-space integrals the truncation radius is pushed out until
    /// the analytic tail bound is small, and that bound is charged to the
    /// error estimate.
    pub fn eval<G>(&self, g: G, quad: &QuadSpec) -> IntegralEstimate
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let m = self.moment_order;
        let r_hi = match self.sup_bound {
            Some(gmax) => {
                let target = (2.0 * gmax * surface_measure(self.dim) / (m * 1e-3)).powf(1.0 / m);
                self.r_max.max(target).min(1e9)
            }
            None => self.r_max,
        };
        // Floor below which rounding noise of the integrand would dominate
        // the weight r^{-(m+1)}.
        let noise_floor = if m > 2.1 {
            ((m - 2.0) * 1e7).powf(-1.0 / (m - 2.0))
        } else {
            0.0
        };
        let r_lo = quad
            .radial_min
            .max(noise_floor)
            .max(self.r_min)
            .min(r_hi * 0.5);

        let coarse = self.one_level(&g, quad, r_lo, r_hi);
        let fine_spec = quad.refined();
        let fine = self.one_level(&g, &fine_spec, r_lo, r_hi);

        // Head: integrand ~ C r^q on [0, r_lo]. The exponent is fitted from
        // two resolved samples (falling back to the nominal one when the
        // samples do not support a fit), which makes the extrapolation exact
        // for a pure power; the spread between fitted and nominal heads is
        // charged as uncertainty.
        let f1 = self.radial_integrand(&g, &fine_spec, r_lo);
        let f2 = self.radial_integrand(&g, &fine_spec, 2.0 * r_lo);
        let q_nominal = self.head_exponent;
        let q_fit = if f1 > 0.0 && f2 > 0.0 {
            (f2 / f1).log2().clamp(-0.95, 8.0)
        } else {
            q_nominal
        };
        let head_of = |q: f64| f1 * r_lo / (q + 1.0).max(0.05);
        let head = head_of(q_fit);
        let head_unc = 0.05 * head.abs() + 0.5 * (head - head_of(q_nominal)).abs();
        let tail = match self.sup_bound {
            Some(gmax) => gmax * surface_measure(self.dim) * r_hi.powf(-m) / m,
            None => 0.0,
        };
        IntegralEstimate::assemble(fine + head, coarse + head, head_unc, tail)
    }

    fn one_level<G>(&self, g: &G, quad: &QuadSpec, r_lo: f64, r_hi: f64) -> f64
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let cells = geometric_cells(r_lo, r_hi, quad.grading_ratio);
        let gl = GaussLegendre::new(quad.gl_points);
        let sphere = SphereRule::new(self.dim, quad);
        let weight_pow = -(self.moment_order + 1.0);

        let partial: Vec<f64> = cells
            .par_iter()
            .map(|&(a, b)| {
                let mut acc = 0.0;
                for (x, w) in gl.mapped(a, b) {
                    acc += w * x.powf(weight_pow) * sphere.integrate(x, g);
                }
                acc
            })
            .collect();
        partial.iter().sum()
    }

    fn radial_integrand<G>(&self, g: &G, quad: &QuadSpec, r: f64) -> f64
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let sphere = SphereRule::new(self.dim, quad);
        r.powf(-(self.moment_order + 1.0)) * sphere.integrate(r, g)
    }
}

/// Surface measure of the unit sphere S^{d-1} (counting measure for d = 1).
pub fn surface_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        d => {
            // Γ-free recurrence: |S^{d-1}| = 2π |S^{d-3}|.
            2.0 * std::f64::consts::PI * surface_measure(d - 2)
        }
    }
}

/// Geometric cells from `r_lo` to `r_hi` with boundaries shrinking toward
/// zero by `ratio`.
pub fn geometric_cells(r_lo: f64, r_hi: f64, ratio: f64) -> Vec<(f64, f64)> {
    assert!(ratio > 1.0, "grading ratio must exceed 1");
    assert!(r_lo > 0.0 && r_hi > r_lo);
    let mut bounds = vec![r_hi];
    let mut r = r_hi;
    while r / ratio > r_lo {
        r /= ratio;
        bounds.push(r);
    }
    bounds.push(r_lo);
    let mut cells: Vec<(f64, f64)> = bounds.windows(2).map(|w| (w[1], w[0])).collect();
    cells.reverse();
    cells
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to the interval [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrate `f` over [a, b] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, d)
}

/// Product quadrature over S^{d-1}. For d = 1 this degenerates to the two
/// points ±1, for d = 2 to a uniform circle rule.
pub struct SphereRule {
    /// Per-node direction and weight; directions are unit vectors of length d.
    nodes: Vec<(Vec<f64>, f64)>,
    dim: usize,
}

impl SphereRule {
    pub fn new(dim: usize, quad: &QuadSpec) -> Self {
        let mut nodes = Vec::new();
        match dim {
            1 => {
                nodes.push((vec![1.0], 1.0));
                nodes.push((vec![-1.0], 1.0));
            }
            2 => {
                let m = quad.sphere_nodes_azimuth.max(4);
                let w = 2.0 * std::f64::consts::PI / m as f64;
                for j in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    nodes.push((vec![phi.cos(), phi.sin()], w));
                }
            }
            3 => {
                let gl = GaussLegendre::new(quad.sphere_nodes_polar.max(2));
                let m = quad.sphere_nodes_azimuth.max(4);
                let waz = 2.0 * std::f64::consts::PI / m as f64;
                for (&t, &wt) in gl.nodes().iter().zip(gl.weights()) {
                    let s = (1.0 - t * t).max(0.0).sqrt();
                    for j in 0..m {
                        let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                        nodes.push((vec![s * phi.cos(), s * phi.sin(), t], wt * waz));
                    }
                }
            }
            d => panic!("sphere rule not implemented for dimension {d}"),
        }
        SphereRule { nodes, dim }
    }

    /// ∫_{S^{d-1}} g(rω) dω by the product rule.
    pub fn integrate<G: Fn(&[f64]) -> f64>(&self, r: f64, g: &G) -> f64 {
        let mut xi = vec![0.0; self.dim];
        let mut acc = 0.0;
        for (omega, w) in &self.nodes {
            for (x, o) in xi.iter_mut().zip(omega) {
                *x = r * o;
            }
            acc += w * g(&xi);
        }
        acc
    }
}
