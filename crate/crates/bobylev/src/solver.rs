//! Time integration of the Fourier-transformed collision equation for
//! Maxwellian molecules.
//!
//! Two modes share the angular machinery from [`crate::kernels`]:
//!
//! * **isotropic** — for radial φ(ξ) = ψ(|ξ|) the sphere integral collapses
//!   to a 1D θ-integral, because the post-collisional arguments have radii
//!   `|ξ| cos(θ/2)` and `|ξ| sin(θ/2)` and the azimuth contributes a factor
//!   2π. This is the precision workhorse: a 512-point radial grid with
//!   monotone-cubic interpolation.
//! * **grid3d** — general complex φ on a uniform cube, σ-sphere integration
//!   with the polar axis along ξ, trilinear (or tricubic) reads of φ(ξ±).
//!   Validates generality at interpolation-limited accuracy.
//!
//! The time integrator is the classical 4-stage explicit rule; φ(0) = 1 is
//! re-pinned after every step so mass is conserved exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfun::CharFun;
use crate::kernels::{CrossSection, ThetaMesh};
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// Interpolation order for off-grid reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpOrder {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Isotropic,
    Grid3d,
}

/// Full solver configuration; defaults match the documented desk-scale setup.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub t_final: f64,
    pub dt: f64,
    pub mode: SolverMode,
    /// Target number of θ nodes of the collision mesh.
    pub theta_nodes: usize,
    /// Azimuth nodes of the σ-sphere rule (grid3d only).
    pub azimuth_nodes: usize,
    /// Mesh floor for kernels without a hard cutoff.
    pub theta_floor: f64,
    /// Off-grid interpolation; `None` picks the per-mode default
    /// (monotone cubic radially, trilinear on the 3D grid).
    pub interp_order: Option<InterpOrder>,
    pub xi_max: f64,
    /// Points per axis of the 3D grid; must be odd so ξ = 0 is a node.
    pub grid_n: usize,
    pub r_max: f64,
    pub radial_points: usize,
    /// Number of recorded output times (evenly spaced over [0, T]).
    pub output_points: usize,
    pub allow_unstable: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_final: 1.0,
            dt: 0.02,
            mode: SolverMode::Isotropic,
            theta_nodes: 64,
            azimuth_nodes: 16,
            theta_floor: 1e-7,
            interp_order: None,
            xi_max: 8.0,
            grid_n: 33,
            r_max: 40.0,
            radial_points: 512,
            output_points: 9,
            allow_unstable: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::ParamDomain("dt must be positive".into()));
        }
        if self.t_final < 0.0 {
            return Err(Error::ParamDomain("t_final must be nonnegative".into()));
        }
        if self.mode == SolverMode::Grid3d && self.grid_n.is_multiple_of(2) {
            return Err(Error::ParamDomain(
                "grid_n must be odd so that ξ = 0 is a node".into(),
            ));
        }
        if self.output_points < 2 {
            return Err(Error::ParamDomain("need at least two output points".into()));
        }
        Ok(())
    }

    pub fn radial_interp(&self) -> InterpOrder {
        self.interp_order.unwrap_or(InterpOrder::Cubic)
    }

    pub fn grid_interp(&self) -> InterpOrder {
        self.interp_order.unwrap_or(InterpOrder::Linear)
    }

    /// Collision θ-mesh for this configuration and kernel.
    pub fn theta_mesh(&self, b: &CrossSection) -> ThetaMesh {
        let lo = b
            .theta_min
            .max(self.theta_floor)
            .min(std::f64::consts::FRAC_PI_2);
        let hi = std::f64::consts::FRAC_PI_2;
        let gl = 4usize;
        let cells = (self.theta_nodes / gl).max(1);
        let ratio = (hi / lo).powf(1.0 / cells as f64).max(1.0 + 1e-6);
        ThetaMesh::new(b, self.theta_floor, ratio, gl)
    }
}

/// Radial profile samples ψ(r_i) on the uniform grid r_i = i·r_max/(n−1).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub r_max: f64,
    pub values: Vec<f64>,
}

impl RadialState {
    pub fn spacing(&self) -> f64 {
        self.r_max / (self.values.len() - 1) as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// A radial evaluator: either grid samples with an interpolation rule, or an
/// analytic profile evaluated exactly (the Gaussian family). The collision
/// right-hand side is generic over this, which is what lets the Gaussian
/// stationarity check run at round-off level.
pub enum RadialProfile {
    Sampled(RadialState),
    Gaussian { a: f64 },
}

impl RadialProfile {
    pub fn prepared(&self, order: InterpOrder) -> PreparedRadial<'_> {
        match self {
            RadialProfile::Sampled(state) => {
                PreparedRadial::Grid(RadialInterp::new(&state.values, state.spacing(), order))
            }
            RadialProfile::Gaussian { a } => PreparedRadial::Gaussian { a: *a },
        }
    }
}

/// Interpolant over uniform radial samples. Cubic means Hermite with
/// Fritsch-Carlson limited slopes (monotone); the slope at r = 0 is pinned to
/// zero by even symmetry.
pub struct RadialInterp<'a> {
    values: &'a [f64],
    h: f64,
    slopes: Option<Vec<f64>>,
}

impl<'a> RadialInterp<'a> {
    pub fn new(values: &'a [f64], h: f64, order: InterpOrder) -> Self {
        let slopes = match order {
            InterpOrder::Linear => None,
            InterpOrder::Cubic => Some(monotone_slopes(values, h)),
        };
        RadialInterp { values, h, slopes }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.values.len();
        let u = (r / self.h).clamp(0.0, (n - 1) as f64);
        let i = (u as usize).min(n - 2);
        let t = u - i as f64;
        match &self.slopes {
            None => self.values[i] * (1.0 - t) + self.values[i + 1] * t,
            Some(m) => {
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (m[i] * self.h, m[i + 1] * self.h);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * m0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * m1
            }
        }
    }
}

/// Limited slopes on a uniform grid. Base estimates are 4th-order central
/// differences (the energy read-out near r = 0 divides interpolation error
/// by h², so 2nd-order slopes would cost two orders of conservation
/// accuracy); the profile is even about r = 0, pinning the left slope to
/// zero, and the Fritsch-Carlson limiter is applied on top so monotone data
/// stay monotone.
fn monotone_slopes(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n - 1];
    for i in 0..n - 1 {
        d[i] = (values[i + 1] - values[i]) / h;
    }
    let mut m = vec![0.0; n];
    m[0] = 0.0;
    // even extension: value at -h is values[1], at -2h is values[2]
    let at = |i: i64| -> f64 { values[i.unsigned_abs() as usize] };
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else if i + 2 < n {
            let ii = i as i64;
            m[i] = (-at(ii + 2) + 8.0 * at(ii + 1) - 8.0 * at(ii - 1) + at(ii - 2)) / (12.0 * h);
        } else {
            m[i] = 0.5 * (d[i - 1] + d[i]);
        }
    }
    m[n - 1] = d[n - 2];
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * a * d[i];
                m[i + 1] = tau * b * d[i];
            }
        }
    }
    m
}

pub enum PreparedRadial<'a> {
    Grid(RadialInterp<'a>),
    Gaussian {
        a: f64,
    },
    /// Analytic Gaussian mixture Σ w_i e^{-a_i r²}: a non-stationary but
    /// exactly evaluable radial profile, used for cross-mode comparisons.
    Mixture {
        parts: Vec<(f64, f64)>,
    },
}

impl PreparedRadial<'_> {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            PreparedRadial::Grid(interp) => interp.eval(r),
            PreparedRadial::Gaussian { a } => (-a * r * r).exp(),
            PreparedRadial::Mixture { parts } => {
                parts.iter().map(|(w, a)| w * (-a * r * r).exp()).sum()
            }
        }
    }
}

/// Isotropic collision right-hand side at radius r:
/// `2π ∫ b(cos θ) [ψ(r cos(θ/2)) ψ(r sin(θ/2)) − ψ(r)] sin θ dθ`.
/// `psi_r` is the value at r itself (grid value when available, so the base
/// point carries no interpolation error).
pub fn collision_rhs_iso(psi: &PreparedRadial, psi_r: f64, r: f64, mesh: &ThetaMesh) -> f64 {
    let mut acc = 0.0;
    for node in &mesh.nodes {
        let gain = psi.eval(r * node.cos_half) * psi.eval(r * node.sin_half);
        acc += node.w_b_sin * (gain - psi_r);
    }
    2.0 * std::f64::consts::PI * acc
}

fn radial_rhs_all(state: &RadialState, mesh: &ThetaMesh, order: InterpOrder, out: &mut [f64]) {
    let interp = RadialInterp::new(&state.values, state.spacing(), order);
    let h = state.spacing();
    let chunks: Vec<f64> = (0..state.values.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let r = i as f64 * h;
            let mut acc = 0.0;
            for node in &mesh.nodes {
                let gain = interp.eval(r * node.cos_half) * interp.eval(r * node.sin_half);
                acc += node.w_b_sin * (gain - state.values[i]);
            }
            2.0 * std::f64::consts::PI * acc
        })
        .collect();
    out.copy_from_slice(&chunks);
}

/// Complex field on a uniform, origin-centered cube of side 2·xi_max with
/// `n` points per axis (n odd). Hermitian symmetry φ(−ξ) = conj φ(ξ) is
/// enforced after every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3D {
    pub n: usize,
    pub xi_max: f64,
    pub data: Vec<Complex64>,
}

impl Grid3D {
    pub fn spacing(&self) -> f64 {
        2.0 * self.xi_max / (self.n - 1) as f64
    }

    pub fn axis_value(&self, i: usize) -> f64 {
        -self.xi_max + i as f64 * self.spacing()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn center_index(&self) -> usize {
        let c = (self.n - 1) / 2;
        self.index(c, c, c)
    }

    /// Value at the grid node offset from the center by (dx, dy, dz) steps.
    pub fn at_offset(&self, dx: i64, dy: i64, dz: i64) -> Complex64 {
        let c = ((self.n - 1) / 2) as i64;
        self.data[self.index((c + dx) as usize, (c + dy) as usize, (c + dz) as usize)]
    }

    /// Grid of Gaussian samples e^{-a|ξ|²}.
    pub fn sample_gaussian(n: usize, xi_max: f64, a: f64) -> Self {
        Self::sample(n, xi_max, |xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            Complex64::new((-a * r2).exp(), 0.0)
        })
    }

    /// Grid sampled from an arbitrary evaluator.
    pub fn sample<F: Fn(&[f64]) -> Complex64>(n: usize, xi_max: f64, f: F) -> Self {
        let mut g = Grid3D {
            n,
            xi_max,
            data: vec![Complex64::default(); n * n * n],
        };
        for ix in 0..n {
            let x = g.axis_value(ix);
            for iy in 0..n {
                let y = g.axis_value(iy);
                for iz in 0..n {
                    let z = g.axis_value(iz);
                    let idx = g.index(ix, iy, iz);
                    g.data[idx] = f(&[x, y, z]);
                }
            }
        }
        g
    }

    fn enforce_hermitian(&mut self) {
        let n = self.n;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let i = self.index(ix, iy, iz);
                    let j = self.index(n - 1 - ix, n - 1 - iy, n - 1 - iz);
                    if i < j {
                        let avg = 0.5 * (self.data[i] + self.data[j].conj());
                        self.data[i] = avg;
                        self.data[j] = avg.conj();
                    } else if i == j {
                        self.data[i] = Complex64::new(self.data[i].re, 0.0);
                    }
                }
            }
        }
    }

    /// Linear indices and coordinates of the evolved points (|ξ| <= xi_max).
    /// Cube corners beyond the inscribed ball stay frozen.
    fn active_points(&self) -> Vec<(usize, [f64; 3], f64)> {
        let mut pts = Vec::new();
        for ix in 0..self.n {
            let x = self.axis_value(ix);
            for iy in 0..self.n {
                let y = self.axis_value(iy);
                for iz in 0..self.n {
                    let z = self.axis_value(iz);
                    let r = (x * x + y * y + z * z).sqrt();
                    if r <= self.xi_max {
                        pts.push((self.index(ix, iy, iz), [x, y, z], r));
                    }
                }
            }
        }
        pts
    }
}

/// Off-grid reads of a [`Grid3D`], trilinear or tricubic (Catmull-Rom).
pub struct GridInterp<'a> {
    grid: &'a Grid3D,
    order: InterpOrder,
}

impl<'a> GridInterp<'a> {
    pub fn new(grid: &'a Grid3D, order: InterpOrder) -> Self {
        GridInterp { grid, order }
    }

    pub fn eval(&self, xi: &[f64; 3]) -> Complex64 {
        match self.order {
            InterpOrder::Linear => self.trilinear(xi),
            InterpOrder::Cubic => self.tricubic(xi),
        }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.grid.n;
        let u = ((x + self.grid.xi_max) / self.grid.spacing()).clamp(0.0, (n - 1) as f64);
        let i = (u as usize).min(n - 2);
        (i, u - i as f64)
    }

    fn trilinear(&self, xi: &[f64; 3]) -> Complex64 {
        let (i, tx) = self.locate(xi[0]);
        let (j, ty) = self.locate(xi[1]);
        let (k, tz) = self.locate(xi[2]);
        let g = self.grid;
        let mut acc = Complex64::default();
        for (dx, wx) in [(0usize, 1.0 - tx), (1, tx)] {
            for (dy, wy) in [(0usize, 1.0 - ty), (1, ty)] {
                let w_xy = wx * wy;
                for (dz, wz) in [(0usize, 1.0 - tz), (1, tz)] {
                    acc += w_xy * wz * g.data[g.index(i + dx, j + dy, k + dz)];
                }
            }
        }
        acc
    }

    fn tricubic(&self, xi: &[f64; 3]) -> Complex64 {
        let g = self.grid;
        let n = g.n as i64;
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0f64; 4]; 3];
        for axis in 0..3 {
            let (i, t) = self.locate(xi[axis]);
            let t2 = t * t;
            let t3 = t2 * t;
            w[axis] = [
                0.5 * (-t3 + 2.0 * t2 - t),
                0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                0.5 * (t3 - t2),
            ];
            for (s, di) in (-1i64..=2).enumerate() {
                idx[axis][s] = (i as i64 + di).clamp(0, n - 1) as usize;
            }
        }
        let mut acc = Complex64::default();
        for a in 0..4 {
            for b in 0..4 {
                let wab = w[0][a] * w[1][b];
                for c in 0..4 {
                    acc += wab * w[2][c] * g.data[g.index(idx[0][a], idx[1][b], idx[2][c])];
                }
            }
        }
        acc
    }
}

/// σ-sphere collision right-hand side at a single point ξ:
/// `∫_{S²} b(ξ·σ/|ξ|) (φ(ξ⁺)φ(ξ⁻) − φ(ξ)) dσ` with
/// `ξ± = ξ/2 ± (|ξ|/2)σ`. The polar axis is ξ/|ξ|; azimuth is a uniform
/// rule with `azimuth_nodes` points. Both |ξ±| <= |ξ|, so all reads stay in
/// the resolved ball.
pub fn collision_rhs_3d(
    phi: &GridInterp,
    phi_xi: Complex64,
    xi: &[f64; 3],
    mesh: &ThetaMesh,
    azimuth_nodes: usize,
) -> Complex64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    if r == 0.0 {
        // φ(0)φ(0) − φ(0) with φ(0) pinned to one
        return Complex64::default();
    }
    let axis = [xi[0] / r, xi[1] / r, xi[2] / r];
    let (u, w) = orthonormal_frame(&axis);
    let m = azimuth_nodes.max(4);
    let waz = 2.0 * std::f64::consts::PI / m as f64;
    let half = [0.5 * xi[0], 0.5 * xi[1], 0.5 * xi[2]];
    let hr = 0.5 * r;
    let mut acc = Complex64::default();
    for node in &mesh.nodes {
        let cos_t = node.cos_half * node.cos_half - node.sin_half * node.sin_half;
        let sin_t = 2.0 * node.sin_half * node.cos_half;
        let mut acc_az = Complex64::default();
        for j in 0..m {
            let phi_az = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            let (s_az, c_az) = phi_az.sin_cos();
            let mut plus = [0.0; 3];
            let mut minus = [0.0; 3];
            for d in 0..3 {
                let sigma_d = cos_t * axis[d] + sin_t * (c_az * u[d] + s_az * w[d]);
                plus[d] = half[d] + hr * sigma_d;
                minus[d] = half[d] - hr * sigma_d;
            }
            acc_az += phi.eval(&plus) * phi.eval(&minus) - phi_xi;
        }
        // w_b_sin already folds b(cos θ) sin θ and the θ-weight
        acc += node.w_b_sin * waz * acc_az;
    }
    acc
}

fn orthonormal_frame(axis: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    // cross with the least-aligned coordinate axis
    let pick = if axis[0].abs() <= axis[1].abs() && axis[0].abs() <= axis[2].abs() {
        [1.0, 0.0, 0.0]
    } else if axis[1].abs() <= axis[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut u = [
        axis[1] * pick[2] - axis[2] * pick[1],
        axis[2] * pick[0] - axis[0] * pick[2],
        axis[0] * pick[1] - axis[1] * pick[0],
    ];
    let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    for x in &mut u {
        *x /= nu;
    }
    let w = [
        axis[1] * u[2] - axis[2] * u[1],
        axis[2] * u[0] - axis[0] * u[2],
        axis[0] * u[1] - axis[1] * u[0],
    ];
    (u, w)
}

/// One solver state, either mode.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverState {
    Radial(RadialState),
    Grid(Grid3D),
}

/// Initial datum: a discrete measure or an analytic Gaussian profile
/// e^{−a|ξ|²}.
pub enum InitialData {
    Measure(DiscreteMeasure),
    Gaussian { a: f64 },
}

/// Sample the initial characteristic function onto the configured state.
/// Isotropic mode requires the measure's characteristic function to depend
/// on |ξ| only, verified on sample directions to 1e-10.
pub fn init_state(initial: &InitialData, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    match (initial, cfg.mode) {
        (InitialData::Gaussian { a }, SolverMode::Isotropic) => {
            let n = cfg.radial_points;
            let h = cfg.r_max / (n - 1) as f64;
            let values = (0..n)
                .map(|i| (-a * (i as f64 * h).powi(2)).exp())
                .collect();
            Ok(SolverState::Radial(RadialState {
                r_max: cfg.r_max,
                values,
            }))
        }
        (InitialData::Gaussian { a }, SolverMode::Grid3d) => {
            let a = *a;
            let g = Grid3D::sample(cfg.grid_n, cfg.xi_max, |xi| {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Complex64::new((-a * r2).exp(), 0.0)
            });
            Ok(SolverState::Grid(g))
        }
        (InitialData::Measure(f), SolverMode::Isotropic) => {
            let phi = crate::charfun::MeasureCharFun::new(f);
            check_isotropy(&phi, f.dim(), cfg.r_max)?;
            let n = cfg.radial_points;
            let h = cfg.r_max / (n - 1) as f64;
            let mut e1 = vec![0.0; f.dim()];
            let values = (0..n)
                .map(|i| {
                    e1[0] = i as f64 * h;
                    phi.eval(&e1).re
                })
                .collect();
            Ok(SolverState::Radial(RadialState {
                r_max: cfg.r_max,
                values,
            }))
        }
        (InitialData::Measure(f), SolverMode::Grid3d) => {
            if f.dim() != 3 {
                return Err(Error::DimensionMismatch {
                    expected: 3,
                    got: f.dim(),
                });
            }
            let phi = crate::charfun::MeasureCharFun::new(f);
            Ok(SolverState::Grid(Grid3D::sample(
                cfg.grid_n,
                cfg.xi_max,
                |xi| phi.eval(xi),
            )))
        }
    }
}

fn check_isotropy(phi: &dyn CharFun, dim: usize, r_max: f64) -> Result<()> {
    let dirs = crate::charfun::direction_set(dim);
    for frac in [0.013, 0.11, 0.37, 0.71] {
        let r = frac * r_max;
        let mut reference = None;
        for dir in &dirs {
            let xi: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let v = phi.eval(&xi);
            if v.im.abs() > 1e-10 {
                return Err(Error::NotIsotropic(format!(
                    "Im φ = {:.3e} at |ξ| = {r:.3}",
                    v.im
                )));
            }
            match reference {
                None => reference = Some(v.re),
                Some(r0) => {
                    if (v.re - r0).abs() > 1e-10 {
                        return Err(Error::NotIsotropic(format!(
                            "direction spread {:.3e} at |ξ| = {r:.3}",
                            (v.re - r0).abs()
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// A computed trajectory: states sampled at evenly spaced output times.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SolverState>,
    /// Total collision rate Λ of the meshed kernel.
    pub rate: f64,
    pub grid_interp: InterpOrder,
    pub radial_interp: InterpOrder,
}

/// Advance one step of the classical 4-stage scheme; re-pins φ(0) = 1 and
/// (grid mode) restores Hermitian symmetry.
pub fn step(state: &mut SolverState, mesh: &ThetaMesh, cfg: &SolverConfig, dt: f64) {
    match state {
        SolverState::Radial(s) => {
            let n = s.values.len();
            let order = cfg.radial_interp();
            let mut k1 = vec![0.0; n];
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            let mut tmp = s.clone();
            radial_rhs_all(s, mesh, order, &mut k1);
            stage_radial(&mut tmp, s, &k1, 0.5 * dt);
            radial_rhs_all(&tmp, mesh, order, &mut k2);
            stage_radial(&mut tmp, s, &k2, 0.5 * dt);
            radial_rhs_all(&tmp, mesh, order, &mut k3);
            stage_radial(&mut tmp, s, &k3, dt);
            radial_rhs_all(&tmp, mesh, order, &mut k4);
            for i in 0..n {
                s.values[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            s.values[0] = 1.0;
        }
        SolverState::Grid(g) => {
            let order = cfg.grid_interp();
            let active = g.active_points();
            let rhs = |grid: &Grid3D| -> Vec<Complex64> {
                let interp = GridInterp::new(grid, order);
                active
                    .par_iter()
                    .map(|(idx, xi, _)| {
                        collision_rhs_3d(&interp, grid.data[*idx], xi, mesh, cfg.azimuth_nodes)
                    })
                    .collect()
            };
            let k1 = rhs(g);
            let mut tmp = g.clone();
            stage_grid(&mut tmp, g, &active, &k1, 0.5 * dt);
            let k2 = rhs(&tmp);
            stage_grid(&mut tmp, g, &active, &k2, 0.5 * dt);
            let k3 = rhs(&tmp);
            stage_grid(&mut tmp, g, &active, &k3, dt);
            let k4 = rhs(&tmp);
            for (slot, (idx, _, _)) in active.iter().enumerate() {
                g.data[*idx] += dt / 6.0 * (k1[slot] + 2.0 * k2[slot] + 2.0 * k3[slot] + k4[slot]);
            }
            let c = g.center_index();
            g.data[c] = Complex64::new(1.0, 0.0);
            g.enforce_hermitian();
        }
    }
}

fn stage_radial(dst: &mut RadialState, base: &RadialState, k: &[f64], scale: f64) {
    for ((d, b), ki) in dst.values.iter_mut().zip(&base.values).zip(k) {
        *d = b + scale * ki;
    }
}

fn stage_grid(
    dst: &mut Grid3D,
    base: &Grid3D,
    active: &[(usize, [f64; 3], f64)],
    k: &[Complex64],
    scale: f64,
) {
    dst.data.copy_from_slice(&base.data);
    for (slot, (idx, _, _)) in active.iter().enumerate() {
        dst.data[*idx] = base.data[*idx] + scale * k[slot];
    }
}

/// Integrate the Cauchy problem and sample the trajectory at
/// `cfg.output_points` evenly spaced times. Refuses configurations violating
/// the stability heuristic dt·Λ <= 0.5 unless overridden.
pub fn solve(initial: &InitialData, b: &CrossSection, cfg: &SolverConfig) -> Result<Trajectory> {
    let mesh = cfg.theta_mesh(b);
    let rate = mesh.total_rate();
    if cfg.dt * rate > 0.5 && !cfg.allow_unstable {
        return Err(Error::Stability(cfg.dt * rate));
    }
    let mut state = init_state(initial, cfg)?;

    let segments = cfg.output_points - 1;
    let base_steps = (cfg.t_final / cfg.dt).ceil().max(1.0) as usize;
    let steps = base_steps.div_ceil(segments) * segments;
    let dt = cfg.t_final / steps as f64;
    let record_every = steps / segments;

    let mut times = Vec::with_capacity(cfg.output_points);
    let mut states = Vec::with_capacity(cfg.output_points);
    times.push(0.0);
    states.push(state.clone());
    for s in 1..=steps {
        step(&mut state, &mesh, cfg, dt);
        if s.is_multiple_of(record_every) {
            times.push(s as f64 * dt);
            states.push(state.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        rate,
        grid_interp: cfg.grid_interp(),
        radial_interp: cfg.radial_interp(),
    })
}

/// Conserved quantities read from a state near ξ = 0: mass is φ(0),
/// momentum and energy come from 4th-order central differences of Im φ and
/// Re φ (the radial mode interprets ψ as a 3D radial profile).
#[derive(Debug, Clone, Copy)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
}

pub fn conserved_quantities(state: &SolverState) -> Conserved {
    match state {
        SolverState::Radial(s) => {
            let h = s.spacing();
            let psi = &s.values;
            // even extension: ψ(−x) = ψ(x)
            let second = (-2.0 * psi[2] + 32.0 * psi[1] - 30.0 * psi[0]) / (12.0 * h * h);
            Conserved {
                mass: psi[0],
                momentum: [0.0; 3],
                energy: -3.0 * second,
            }
        }
        SolverState::Grid(g) => {
            let h = g.spacing();
            let mass = g.at_offset(0, 0, 0).re;
            let mut momentum = [0.0; 3];
            let mut energy = 0.0;
            for (d, slot) in momentum.iter_mut().enumerate() {
                let off = |s: i64| match d {
                    0 => g.at_offset(s, 0, 0),
                    1 => g.at_offset(0, s, 0),
                    _ => g.at_offset(0, 0, s),
                };
                let der1 =
                    (-off(2).im + 8.0 * off(1).im - 8.0 * off(-1).im + off(-2).im) / (12.0 * h);
                *slot = -der1;
                let der2 = (-off(2).re + 16.0 * off(1).re - 30.0 * off(0).re + 16.0 * off(-1).re
                    - off(-2).re)
                    / (12.0 * h * h);
                energy -= der2;
            }
            Conserved {
                mass,
                momentum,
                energy,
            }
        }
    }
}

/// Largest |φ| over the resolved state.
pub fn sup_abs(state: &SolverState) -> f64 {
    match state {
        SolverState::Radial(s) => s.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        SolverState::Grid(g) => g
            .active_points()
            .iter()
            .map(|(idx, _, _)| g.data[*idx].norm())
            .fold(0.0, f64::max),
    }
}

/// Qualitative tail-decay proxy sup |ξ|^4 |φ(ξ)| over the outer quarter of
/// the resolved radii.
pub fn tail_decay_proxy(state: &SolverState) -> f64 {
    match state {
        SolverState::Radial(s) => {
            let n = s.values.len();
            (3 * n / 4..n)
                .map(|i| s.radius(i).powi(4) * s.values[i].abs())
                .fold(0.0, f64::max)
        }
        SolverState::Grid(g) => g
            .active_points()
            .iter()
            .filter(|(_, _, r)| *r >= 0.75 * g.xi_max)
            .map(|(idx, _, r)| r.powi(4) * g.data[*idx].norm())
            .fold(0.0, f64::max),
    }
}

/// Characteristic-function view of a solver state (dimension 3, domain
/// limited to the resolved radii). Lets the norm and diagnostic machinery
/// run on trajectory states directly; the interpolant is prepared once at
/// construction.
pub enum StateCharFun<'a> {
    Radial {
        interp: RadialInterp<'a>,
        r_max: f64,
        spacing: f64,
    },
    Grid {
        interp: GridInterp<'a>,
        xi_max: f64,
        spacing: f64,
    },
}

impl<'a> StateCharFun<'a> {
    pub fn new(state: &'a SolverState, radial_order: InterpOrder, grid_order: InterpOrder) -> Self {
        match state {
            SolverState::Radial(s) => StateCharFun::Radial {
                interp: RadialInterp::new(&s.values, s.spacing(), radial_order),
                r_max: s.r_max,
                spacing: s.spacing(),
            },
            SolverState::Grid(g) => StateCharFun::Grid {
                interp: GridInterp::new(g, grid_order),
                xi_max: g.xi_max,
                spacing: g.spacing(),
            },
        }
    }
}

impl CharFun for StateCharFun<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        match self {
            StateCharFun::Radial { interp, .. } => {
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                Complex64::new(interp.eval(r), 0.0)
            }
            StateCharFun::Grid { interp, .. } => {
                let p = [xi[0], xi[1], xi[2]];
                interp.eval(&p)
            }
        }
    }

    fn domain_radius(&self) -> f64 {
        match self {
            StateCharFun::Radial { r_max, .. } => *r_max,
            StateCharFun::Grid { xi_max, .. } => *xi_max,
        }
    }

    fn resolution_floor(&self) -> f64 {
        match self {
            StateCharFun::Radial { spacing, .. } => 0.5 * spacing,
            StateCharFun::Grid { spacing, .. } => 0.5 * spacing,
        }
    }
}

impl Trajectory {
    pub fn charfun(&self, idx: usize) -> StateCharFun<'_> {
        StateCharFun::new(&self.states[idx], self.radial_interp, self.grid_interp)
    }
}

/// One rung of a cross-mode refinement ladder: 3D grid resolution plus the
/// angular rule used for both modes' collision integrals.
#[derive(Debug, Clone, Copy)]
pub struct CrossModeProbe {
    pub grid_n: usize,
    pub theta_nodes: usize,
    pub azimuth_nodes: usize,
}

/// Max-abs disagreement between the 3D collision right-hand side (grid
/// sampled, tricubic reads) and the isotropic reduction (analytic profile,
/// reference-quality θ-mesh) for the non-stationary radial profile
/// `0.5 e^{-a|ξ|²} + 0.5 e^{-4a|ξ|²}`, one value per probe.
pub fn cross_mode_disagreement(a: f64, probes: &[CrossModeProbe]) -> Result<Vec<f64>> {
    let parts = [(0.5, a), (0.5, 4.0 * a)];
    let xi_max = 3.2 / f64::sqrt(a).min(1.0);
    let kernel = CrossSection::constant(1.0);
    let profile = PreparedRadial::Mixture {
        parts: parts.to_vec(),
    };
    let reference_mesh = ThetaMesh::new(&kernel, 1e-9, 1.02, 6);
    let eval_profile = |r2: f64| -> f64 { parts.iter().map(|(w, aa)| w * (-aa * r2).exp()).sum() };

    let dirs: [[f64; 3]; 4] = [
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
        ],
        [
            0.577_350_269_189_625_8,
            0.577_350_269_189_625_8,
            0.577_350_269_189_625_8,
        ],
    ];
    let radii: Vec<f64> = (1..=6).map(|i| 0.12 * i as f64 * xi_max).collect();

    let mut out = Vec::with_capacity(probes.len());
    for probe in probes {
        if probe.grid_n % 2 == 0 {
            return Err(Error::ParamDomain("probe grid_n must be odd".into()));
        }
        let grid = Grid3D::sample(probe.grid_n, xi_max, |xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            Complex64::new(eval_profile(r2), 0.0)
        });
        let interp = GridInterp::new(&grid, InterpOrder::Cubic);
        let cells = (probe.theta_nodes / 4).max(1);
        let ratio = (std::f64::consts::FRAC_PI_2 / 1e-7)
            .powf(1.0 / cells as f64)
            .max(1.0 + 1e-6);
        let mesh = ThetaMesh::new(&kernel, 1e-7, ratio, 4);
        let mut worst: f64 = 0.0;
        for &r in &radii {
            let iso = collision_rhs_iso(&profile, eval_profile(r * r), r, &reference_mesh);
            for dir in &dirs {
                let xi = [r * dir[0], r * dir[1], r * dir[2]];
                let v3 = collision_rhs_3d(
                    &interp,
                    Complex64::new(eval_profile(r * r), 0.0),
                    &xi,
                    &mesh,
                    probe.azimuth_nodes,
                );
                worst = worst.max((v3.re - iso).abs().max(v3.im.abs()));
            }
        }
        out.push(worst);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Binary state dump
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 8] = b"BOBYGRID";

/// Serialize trajectory states: magic, version (u32), mode (u8: 0 radial,
/// 1 grid3d), 3 reserved bytes, n (u64: radial length or points per axis),
/// extent (f64: r_max or xi_max), state count (u64), then per state the time
/// (f64) followed by the payload (radial: n values; grid: n³ re/im pairs).
/// All numbers little-endian 8-byte floats or fixed-width integers.
pub fn write_states(traj: &Trajectory, out: &mut Vec<u8>) -> Result<()> {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    let (mode, n, extent) = match &traj.states[0] {
        SolverState::Radial(s) => (0u8, s.values.len() as u64, s.r_max),
        SolverState::Grid(g) => (1u8, g.n as u64, g.xi_max),
    };
    out.push(mode);
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&extent.to_le_bytes());
    out.extend_from_slice(&(traj.states.len() as u64).to_le_bytes());
    for (t, state) in traj.times.iter().zip(&traj.states) {
        out.extend_from_slice(&t.to_le_bytes());
        match state {
            SolverState::Radial(s) => {
                for v in &s.values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            SolverState::Grid(g) => {
                for v in &g.data {
                    out.extend_from_slice(&v.re.to_le_bytes());
                    out.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
    }
    Ok(())
}

pub fn read_states(bytes: &[u8]) -> Result<Trajectory> {
    let mut cur = 0usize;
    let take = |cur: &mut usize, len: usize| -> Result<&[u8]> {
        if *cur + len > bytes.len() {
            return Err(Error::Format("truncated state dump".into()));
        }
        let s = &bytes[*cur..*cur + len];
        *cur += len;
        Ok(s)
    };
    let f64_at = |cur: &mut usize| -> Result<f64> {
        Ok(f64::from_le_bytes(take(cur, 8)?.try_into().unwrap()))
    };
    if take(&mut cur, 8)? != MAGIC {
        return Err(Error::Format("bad magic, not a state dump".into()));
    }
    let version = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap());
    if version != 1 {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let mode = take(&mut cur, 1)?[0];
    take(&mut cur, 3)?;
    let n = u64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap()) as usize;
    let extent = f64_at(&mut cur)?;
    let count = u64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap()) as usize;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(f64_at(&mut cur)?);
        match mode {
            0 => {
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    values.push(f64_at(&mut cur)?);
                }
                states.push(SolverState::Radial(RadialState {
                    r_max: extent,
                    values,
                }));
            }
            1 => {
                let mut data = Vec::with_capacity(n * n * n);
                for _ in 0..n * n * n {
                    let re = f64_at(&mut cur)?;
                    let im = f64_at(&mut cur)?;
                    data.push(Complex64::new(re, im));
                }
                states.push(SolverState::Grid(Grid3D {
                    n,
                    xi_max: extent,
                    data,
                }));
            }
            m => return Err(Error::Format(format!("unknown mode byte {m}"))),
        }
    }
    Ok(Trajectory {
        times,
        states,
        rate: f64::NAN,
        grid_interp: InterpOrder::Linear,
        radial_interp: InterpOrder::Cubic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CrossSection;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn const_mesh(cfg: &SolverConfig) -> ThetaMesh {
        cfg.theta_mesh(&CrossSection::constant(1.0))
    }

    fn two_point_1d() -> DiscreteMeasure {
        DiscreteMeasure::symmetric_pair(vec![1.0]).unwrap()
    }

    #[test]
    fn gaussian_stationarity_isotropic_analytic() {
        let cfg = SolverConfig::default();
        let mesh = const_mesh(&cfg);
        let rate = mesh.total_rate();
        for a in [0.1, 1.0, 10.0] {
            let psi = PreparedRadial::Gaussian { a };
            let mut worst: f64 = 0.0;
            for i in 0..200 {
                let r = i as f64 * 0.2;
                let rhs = collision_rhs_iso(&psi, (-a * r * r).exp(), r, &mesh);
                worst = worst.max(rhs.abs());
            }
            assert!(worst <= 1e-10 * rate, "a = {a}: worst = {worst:.3e}");
        }
    }

    #[test]
    fn rhs_iso_trivial_cases() {
        let cfg = SolverConfig::default();
        let mesh = const_mesh(&cfg);
        // ψ ≡ 1
        let flat = RadialState {
            r_max: 40.0,
            values: vec![1.0; 512],
        };
        let profile = RadialProfile::Sampled(flat.clone());
        let prepared = profile.prepared(InterpOrder::Cubic);
        for r in [0.0, 1.0, 17.3] {
            assert_abs_diff_eq!(
                collision_rhs_iso(&prepared, 1.0, r, &mesh),
                0.0,
                epsilon = 1e-13
            );
        }
        // r = 0 on any profile
        let psi = PreparedRadial::Gaussian { a: 1.0 };
        assert_abs_diff_eq!(
            collision_rhs_iso(&psi, 1.0, 0.0, &mesh),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn isotropy_check_accepts_even_1d_rejects_3d_pair() {
        let cfg = SolverConfig::default();
        assert!(init_state(&InitialData::Measure(two_point_1d()), &cfg).is_ok());
        let pair3 = DiscreteMeasure::symmetric_pair(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            init_state(&InitialData::Measure(pair3), &cfg),
            Err(Error::NotIsotropic(_))
        ));
        let skewed = DiscreteMeasure::dirac(vec![1.0]).unwrap();
        assert!(matches!(
            init_state(&InitialData::Measure(skewed), &cfg),
            Err(Error::NotIsotropic(_))
        ));
    }

    #[test]
    fn conserved_quantities_examples() {
        // 3D two-point pair: mass 1, momentum 0, energy ~ 1
        let pair3 = DiscreteMeasure::symmetric_pair(vec![1.0, 0.0, 0.0]).unwrap();
        let cfg = SolverConfig {
            mode: SolverMode::Grid3d,
            ..SolverConfig::default()
        };
        let state = init_state(&InitialData::Measure(pair3), &cfg).unwrap();
        let c = conserved_quantities(&state);
        assert_relative_eq!(c.mass, 1.0, max_relative = 1e-12);
        assert!(c.momentum.iter().all(|m| m.abs() < 1e-12));
        assert_relative_eq!(c.energy, 1.0, max_relative = 1e-3);

        // Gaussian on the grid: energy 6a
        let a = 0.25;
        let state = init_state(&InitialData::Gaussian { a }, &cfg).unwrap();
        let c = conserved_quantities(&state);
        assert_relative_eq!(c.energy, 6.0 * a, max_relative = 5e-3);

        // point mass at the origin
        let origin = DiscreteMeasure::dirac(vec![0.0; 3]).unwrap();
        let state = init_state(&InitialData::Measure(origin), &cfg).unwrap();
        let c = conserved_quantities(&state);
        assert_relative_eq!(c.mass, 1.0);
        assert!(c.momentum.iter().all(|m| m.abs() < 1e-14));
        assert_abs_diff_eq!(c.energy, 0.0, epsilon = 1e-12);

        // radial Gaussian: energy 6a as well (stencil bias ~ h⁴ψ⁽⁶⁾/30)
        let cfg = SolverConfig::default();
        let state = init_state(&InitialData::Gaussian { a }, &cfg).unwrap();
        let c = conserved_quantities(&state);
        assert_relative_eq!(c.energy, 6.0 * a, max_relative = 1e-5);
    }

    #[test]
    fn stability_guard() {
        let cfg = SolverConfig {
            dt: 1.0,
            ..SolverConfig::default()
        };
        let err = solve(
            &InitialData::Gaussian { a: 1.0 },
            &CrossSection::constant(1.0),
            &cfg,
        );
        assert!(matches!(err, Err(Error::Stability(_))));
        let cfg = SolverConfig {
            dt: 1.0,
            allow_unstable: true,
            t_final: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve(
            &InitialData::Gaussian { a: 1.0 },
            &CrossSection::constant(1.0),
            &cfg
        )
        .is_ok());
    }

    #[test]
    fn two_point_isotropic_conservation_short() {
        let cfg = SolverConfig {
            t_final: 0.25,
            dt: 0.05,
            ..SolverConfig::default()
        };
        let traj = solve(
            &InitialData::Measure(two_point_1d()),
            &CrossSection::constant(1.0),
            &cfg,
        )
        .unwrap();
        let c0 = conserved_quantities(&traj.states[0]);
        let c1 = conserved_quantities(traj.states.last().unwrap());
        assert_eq!(c1.mass, 1.0);
        assert!((c1.energy - c0.energy).abs() / c0.energy <= 2e-3);
        for state in &traj.states {
            assert!(sup_abs(state) <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn temporal_order_is_fourth() {
        let run = |dt: f64| {
            let cfg = SolverConfig {
                t_final: 0.4,
                dt,
                radial_points: 128,
                r_max: 20.0,
                ..SolverConfig::default()
            };
            let traj = solve(
                &InitialData::Measure(two_point_1d()),
                &CrossSection::constant(1.0),
                &cfg,
            )
            .unwrap();
            match traj.states.last().unwrap() {
                SolverState::Radial(s) => s.values.clone(),
                _ => unreachable!(),
            }
        };
        let a = run(0.05);
        let b = run(0.025);
        let c = run(0.0125);
        let d1 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let d2 = b
            .iter()
            .zip(&c)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let order = (d1 / d2).log2();
        assert!(
            (order - 4.0).abs() <= 0.5,
            "observed order {order:.2} (d1 = {d1:.3e}, d2 = {d2:.3e})"
        );
    }

    #[test]
    fn cross_mode_agreement_for_isotropic_data() {
        // Gaussian far from equilibrium shape is stationary, so compare the
        // modes on a non-Gaussian radial profile: a radial two-atom profile
        // sampled from sinc-type data is not available as a measure, so use
        // the Gaussian but with different width against an anisotropy-free
        // comparison of the general 3D path vs the reduction.
        let a = 0.5;
        let cfg3 = SolverConfig {
            mode: SolverMode::Grid3d,
            grid_n: 49,
            xi_max: 4.0,
            theta_nodes: 32,
            azimuth_nodes: 32,
            interp_order: Some(InterpOrder::Cubic),
            ..SolverConfig::default()
        };
        let g = match init_state(&InitialData::Gaussian { a }, &cfg3).unwrap() {
            SolverState::Grid(g) => g,
            _ => unreachable!(),
        };
        let mesh = cfg3.theta_mesh(&CrossSection::constant(1.0));
        let interp = GridInterp::new(&g, InterpOrder::Cubic);
        // both modes must agree that the Gaussian is stationary
        let mut worst: f64 = 0.0;
        for r in [0.5, 1.0, 2.0, 3.0] {
            let v3 = collision_rhs_3d(
                &interp,
                Complex64::new((-a * r * r).exp(), 0.0),
                &[r, 0.0, 0.0],
                &mesh,
                cfg3.azimuth_nodes,
            );
            let psi = PreparedRadial::Gaussian { a };
            let v1 = collision_rhs_iso(&psi, (-a * r * r).exp(), r, &mesh);
            worst = worst.max((v3.re - v1).abs().max(v3.im.abs()));
        }
        assert!(worst <= 2e-3, "cross-mode disagreement {worst:.3e}");
    }

    #[test]
    fn anisotropic_gaussian_has_nonzero_rhs() {
        let cfg = SolverConfig {
            mode: SolverMode::Grid3d,
            grid_n: 33,
            xi_max: 4.0,
            ..SolverConfig::default()
        };
        let g = Grid3D::sample(cfg.grid_n, cfg.xi_max, |xi| {
            Complex64::new(
                (-(1.5 * xi[0] * xi[0] + 0.5 * xi[1] * xi[1] + xi[2] * xi[2])).exp(),
                0.0,
            )
        });
        let mesh = cfg.theta_mesh(&CrossSection::constant(1.0));
        let interp = GridInterp::new(&g, InterpOrder::Linear);
        let xi = [1.0, 0.5, 0.0];
        let phi_xi = Complex64::new((-(1.5 * 1.0 + 0.5 * 0.25f64)).exp(), 0.0);
        let v = collision_rhs_3d(&interp, phi_xi, &xi, &mesh, cfg.azimuth_nodes);
        assert!(v.norm() > 1e-3, "rhs = {v}");
    }

    #[test]
    fn hermitian_symmetry_and_mass_along_3d_run() {
        let pair3 = DiscreteMeasure::new(
            3,
            vec![vec![1.0, 0.3, 0.0], vec![-1.0, -0.3, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let cfg = SolverConfig {
            mode: SolverMode::Grid3d,
            grid_n: 17,
            xi_max: 4.0,
            t_final: 0.1,
            dt: 0.05,
            theta_nodes: 16,
            azimuth_nodes: 8,
            output_points: 2,
            ..SolverConfig::default()
        };
        let traj = solve(
            &InitialData::Measure(pair3),
            &CrossSection::constant(1.0),
            &cfg,
        )
        .unwrap();
        let g = match traj.states.last().unwrap() {
            SolverState::Grid(g) => g,
            _ => unreachable!(),
        };
        assert_eq!(g.data[g.center_index()], Complex64::new(1.0, 0.0));
        for ix in 0..g.n {
            for iy in 0..g.n {
                for iz in 0..g.n {
                    let v = g.data[g.index(ix, iy, iz)];
                    let m = g.data[g.index(g.n - 1 - ix, g.n - 1 - iy, g.n - 1 - iz)];
                    assert!((v - m.conj()).norm() < 1e-12);
                }
            }
        }
        let c = conserved_quantities(traj.states.last().unwrap());
        assert!(c.momentum.iter().all(|m| m.abs() < 1e-9));
    }

    #[test]
    fn rhs_3d_vanishes_on_the_unit_charfun() {
        let g = Grid3D::sample(17, 4.0, |_| Complex64::new(1.0, 0.0));
        let cfg = SolverConfig::default();
        let mesh = cfg.theta_mesh(&CrossSection::constant(1.0));
        let interp = GridInterp::new(&g, InterpOrder::Linear);
        for xi in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, -1.0, 2.0]] {
            let v = collision_rhs_3d(&interp, Complex64::new(1.0, 0.0), &xi, &mesh, 8);
            assert!(v.norm() <= 1e-13, "rhs = {v}");
        }
    }

    #[test]
    fn state_charfun_refuses_out_of_domain_differences() {
        let state = SolverState::Radial(RadialState {
            r_max: 10.0,
            values: vec![1.0; 64],
        });
        let cf = StateCharFun::new(&state, InterpOrder::Cubic, InterpOrder::Linear);
        // k|ξ| = 12 exceeds the resolved radius 10
        let err = crate::charfun::symmetric_difference(&cf, 2, &[6.0, 0.0, 0.0]);
        assert!(matches!(err, Err(Error::OutOfDomain { .. })));
        assert!(crate::charfun::symmetric_difference(&cf, 2, &[4.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn binary_dump_round_trip() {
        let cfg = SolverConfig {
            t_final: 0.1,
            dt: 0.05,
            radial_points: 64,
            r_max: 10.0,
            output_points: 3,
            ..SolverConfig::default()
        };
        let traj = solve(
            &InitialData::Measure(two_point_1d()),
            &CrossSection::constant(1.0),
            &cfg,
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_states(&traj, &mut bytes).unwrap();
        let back = read_states(&bytes).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
        assert!(read_states(&bytes[..40]).is_err());
    }

    #[test]
    fn interpolation_reproduces_smooth_profiles() {
        let n = 101;
        let h = 10.0 / (n - 1) as f64;
        let values: Vec<f64> = (0..n)
            .map(|i| (-0.3 * (i as f64 * h).powi(2)).exp())
            .collect();
        let interp = RadialInterp::new(&values, h, InterpOrder::Cubic);
        let mut worst: f64 = 0.0;
        for j in 0..1000 {
            let r = j as f64 * 10.0 / 999.0;
            worst = worst.max((interp.eval(r) - (-0.3 * r * r).exp()).abs());
        }
        assert!(worst < 5e-5, "cubic interp error {worst:.2e}");
    }
}
