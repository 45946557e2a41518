//! Flat key-value run configuration.
//!
//! The format is one `section.key = value` per line, `#` starts a comment.
//! Unknown keys are hard errors so that a typo in a tolerance-critical
//! setting cannot silently fall back to a default. Every parameter-domain
//! constraint of the downstream modules is validated before any computation
//! starts.

use std::collections::HashMap;

use crate::kernels::CrossSection;
use crate::measures::DiscreteMeasure;
use crate::quad::QuadSpec;
use crate::solver::{InitialData, InterpOrder, SolverConfig, SolverMode};
use crate::{Error, Result};

/// Initial datum selection.
#[derive(Debug, Clone)]
pub enum InitialSpec {
    Gaussian {
        a: f64,
    },
    /// The dim-1 symmetric two-point measure at ±radius (radial profile
    /// cos(radius·r) in the isotropic mode).
    TwoPoint {
        radius: f64,
    },
    MeasurePath(String),
    MeasureInline(DiscreteMeasure),
}

impl InitialSpec {
    pub fn load(&self) -> Result<InitialData> {
        Ok(match self {
            InitialSpec::Gaussian { a } => InitialData::Gaussian { a: *a },
            InitialSpec::TwoPoint { radius } => {
                InitialData::Measure(DiscreteMeasure::symmetric_pair(vec![*radius])?)
            }
            InitialSpec::MeasurePath(path) => {
                let text = std::fs::read_to_string(path)?;
                InitialData::Measure(DiscreteMeasure::from_text(&text)?)
            }
            InitialSpec::MeasureInline(m) => InitialData::Measure(m.clone()),
        })
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        match self.load()? {
            InitialData::Measure(m) => Ok(m),
            InitialData::Gaussian { .. } => Err(Error::Config(
                "this subcommand needs a discrete measure, not a Gaussian profile".into(),
            )),
        }
    }
}

/// Diagnostic parameters shared by the charfun/diagnose paths.
#[derive(Debug, Clone)]
pub struct DiagParams {
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub tol: f64,
    pub betas: Vec<f64>,
}

/// Moment-check parameters.
#[derive(Debug, Clone)]
pub struct MomentParams {
    pub ks: Vec<u32>,
    pub alphas: Vec<f64>,
    pub radii: Vec<f64>,
    pub tol: f64,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub initial: InitialSpec,
    pub kernel: CrossSection,
    pub solver: SolverConfig,
    pub quad: QuadSpec,
    pub grid_radial_min: f64,
    pub grid_radial_max: f64,
    pub grid_radial_points: usize,
    pub diag: DiagParams,
    pub moments: MomentParams,
    pub lambda_betas: Vec<f64>,
    pub out_dir: String,
    pub binary_dump: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            initial: InitialSpec::TwoPoint { radius: 1.0 },
            kernel: CrossSection::constant(1.0),
            solver: SolverConfig::default(),
            quad: QuadSpec::default(),
            grid_radial_min: 1e-6,
            grid_radial_max: 1e3,
            grid_radial_points: 400,
            diag: DiagParams {
                k: 2,
                alpha: 0.5,
                beta: 1.0,
                eps: 0.5,
                tol: 0.05,
                betas: vec![1.0, 1.5, 2.0],
            },
            moments: MomentParams {
                ks: vec![2, 3],
                alphas: vec![0.0, 0.5, 1.5],
                radii: vec![0.5, 1.0, 2.0],
                tol: 0.01,
            },
            lambda_betas: vec![0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
            out_dir: "out".into(),
            binary_dump: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, String> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut entries: HashMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut take = |key: &str| entries.remove(key);

        // --- initial datum ---
        let kind = take("initial.kind").unwrap_or_else(|| "two_point".into());
        let gaussian_a = parse_opt_f64(take("initial.gaussian_a"), "initial.gaussian_a")?;
        let radius = parse_opt_f64(take("initial.two_point_radius"), "initial.two_point_radius")?;
        let measure_path = take("initial.measure_path");
        let measure_inline = take("initial.measure_inline");
        cfg.initial = match kind.as_str() {
            "gaussian" => InitialSpec::Gaussian {
                a: gaussian_a.unwrap_or(1.0),
            },
            "two_point" => InitialSpec::TwoPoint {
                radius: radius.unwrap_or(1.0),
            },
            "measure" => {
                if let Some(p) = measure_path {
                    InitialSpec::MeasurePath(p)
                } else if let Some(inline) = measure_inline {
                    let text = inline.replace(';', "\n");
                    InitialSpec::MeasureInline(DiscreteMeasure::from_text(&text)?)
                } else {
                    return Err(Error::Config(
                        "initial.kind = measure needs initial.measure_path or initial.measure_inline"
                            .into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "initial.kind = {other} (expected gaussian | two_point | measure)"
                )))
            }
        };

        // --- kernel ---
        let form = take("kernel.form").unwrap_or_else(|| "constant".into());
        let constant = parse_opt_f64(take("kernel.constant"), "kernel.constant")?;
        let nu = parse_opt_f64(take("kernel.nu"), "kernel.nu")?;
        let strength = parse_opt_f64(take("kernel.K"), "kernel.K")?;
        let theta_min = parse_opt_f64(take("kernel.theta_min"), "kernel.theta_min")?;
        cfg.kernel = match form.as_str() {
            "constant" => CrossSection::constant(constant.unwrap_or(1.0)),
            "grazing" => CrossSection::grazing(nu.unwrap_or(0.5), strength.unwrap_or(1.0))?,
            other => {
                return Err(Error::Config(format!(
                    "kernel.form = {other} (expected constant | grazing)"
                )))
            }
        };
        if let Some(t) = theta_min {
            cfg.kernel = cfg.kernel.with_cutoff(t);
        }

        // --- solver ---
        if let Some(v) = take("solver.mode") {
            cfg.solver.mode = match v.as_str() {
                "isotropic" => SolverMode::Isotropic,
                "grid3d" => SolverMode::Grid3d,
                other => {
                    return Err(Error::Config(format!(
                        "solver.mode = {other} (expected isotropic | grid3d)"
                    )))
                }
            };
        }
        set_f64(
            &mut cfg.solver.t_final,
            take("solver.t_final"),
            "solver.t_final",
        )?;
        set_f64(&mut cfg.solver.dt, take("solver.dt"), "solver.dt")?;
        set_usize(
            &mut cfg.solver.theta_nodes,
            take("solver.theta_nodes"),
            "solver.theta_nodes",
        )?;
        set_usize(
            &mut cfg.solver.azimuth_nodes,
            take("solver.azimuth_nodes"),
            "solver.azimuth_nodes",
        )?;
        set_f64(
            &mut cfg.solver.theta_floor,
            take("solver.theta_floor"),
            "solver.theta_floor",
        )?;
        if let Some(v) = take("solver.interp_order") {
            cfg.solver.interp_order = match v.as_str() {
                "linear" => Some(InterpOrder::Linear),
                "cubic" => Some(InterpOrder::Cubic),
                "default" => None,
                other => {
                    return Err(Error::Config(format!(
                        "solver.interp_order = {other} (expected linear | cubic | default)"
                    )))
                }
            };
        }
        set_f64(
            &mut cfg.solver.xi_max,
            take("solver.xi_max"),
            "solver.xi_max",
        )?;
        set_usize(
            &mut cfg.solver.grid_n,
            take("solver.grid_n"),
            "solver.grid_n",
        )?;
        set_f64(&mut cfg.solver.r_max, take("solver.r_max"), "solver.r_max")?;
        set_usize(
            &mut cfg.solver.radial_points,
            take("solver.radial_points"),
            "solver.radial_points",
        )?;
        set_usize(
            &mut cfg.solver.output_points,
            take("solver.output_points"),
            "solver.output_points",
        )?;
        set_bool(
            &mut cfg.solver.allow_unstable,
            take("solver.allow_unstable"),
            "solver.allow_unstable",
        )?;
        set_bool(
            &mut cfg.binary_dump,
            take("solver.binary_dump"),
            "solver.binary_dump",
        )?;

        // --- quadrature and sup-norm grid ---
        set_f64(
            &mut cfg.quad.radial_min,
            take("quad.radial_min"),
            "quad.radial_min",
        )?;
        set_f64(
            &mut cfg.quad.radial_max,
            take("quad.radial_max"),
            "quad.radial_max",
        )?;
        set_f64(
            &mut cfg.quad.grading_ratio,
            take("quad.grading_ratio"),
            "quad.grading_ratio",
        )?;
        set_usize(
            &mut cfg.quad.gl_points,
            take("quad.gl_points"),
            "quad.gl_points",
        )?;
        set_usize(
            &mut cfg.quad.sphere_nodes_polar,
            take("quad.sphere_nodes_polar"),
            "quad.sphere_nodes_polar",
        )?;
        set_usize(
            &mut cfg.quad.sphere_nodes_azimuth,
            take("quad.sphere_nodes_azimuth"),
            "quad.sphere_nodes_azimuth",
        )?;
        set_f64(
            &mut cfg.grid_radial_min,
            take("grid.radial_min"),
            "grid.radial_min",
        )?;
        set_f64(
            &mut cfg.grid_radial_max,
            take("grid.radial_max"),
            "grid.radial_max",
        )?;
        set_usize(
            &mut cfg.grid_radial_points,
            take("grid.radial_points"),
            "grid.radial_points",
        )?;

        // --- diagnostics ---
        set_u32(&mut cfg.diag.k, take("diag.k"), "diag.k")?;
        set_f64(&mut cfg.diag.alpha, take("diag.alpha"), "diag.alpha")?;
        set_f64(&mut cfg.diag.beta, take("diag.beta"), "diag.beta")?;
        set_f64(&mut cfg.diag.eps, take("diag.eps"), "diag.eps")?;
        set_f64(&mut cfg.diag.tol, take("diag.tol"), "diag.tol")?;
        if let Some(v) = take("diag.betas") {
            cfg.diag.betas = parse_f64_list(&v, "diag.betas")?;
        }

        // --- moment checks ---
        if let Some(v) = take("moments.ks") {
            cfg.moments.ks = parse_f64_list(&v, "moments.ks")?
                .into_iter()
                .map(|x| x as u32)
                .collect();
        }
        if let Some(v) = take("moments.alphas") {
            cfg.moments.alphas = parse_f64_list(&v, "moments.alphas")?;
        }
        if let Some(v) = take("moments.radii") {
            cfg.moments.radii = parse_f64_list(&v, "moments.radii")?;
        }
        set_f64(&mut cfg.moments.tol, take("moments.tol"), "moments.tol")?;

        if let Some(v) = take("lambda.betas") {
            cfg.lambda_betas = parse_f64_list(&v, "lambda.betas")?;
        }
        if let Some(v) = take("out.dir") {
            cfg.out_dir = v;
        }

        if let Some(key) = entries.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-module validation of every parameter-domain constraint.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        crate::measures::check_order_params(self.diag.k, self.diag.alpha)
            .map_err(|e| Error::Config(format!("diag.k/diag.alpha: {e}")))?;
        if self.diag.k == 1 {
            if !(self.diag.beta > 0.0 && self.diag.beta < self.diag.alpha) {
                return Err(Error::Config(
                    "diag.beta must lie in (0, alpha) for k = 1".into(),
                ));
            }
        } else if !(self.diag.beta > 0.0 && self.diag.beta < 2.0) {
            return Err(Error::Config("diag.beta must lie in (0, 2)".into()));
        }
        if !(self.diag.eps > 0.0 && self.diag.eps < 1.0) {
            return Err(Error::Config("diag.eps must lie in (0, 1)".into()));
        }
        for &b in &self.diag.betas {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::Config(format!(
                    "diag.betas entry {b} outside (0, 2]"
                )));
            }
        }
        for &k in &self.moments.ks {
            for &alpha in &self.moments.alphas {
                crate::measures::check_order_params(k, alpha)
                    .map_err(|e| Error::Config(format!("moments.ks/alphas: {e}")))?;
            }
        }
        for &r in &self.moments.radii {
            if !(r > 0.0) {
                return Err(Error::Config(format!(
                    "moments.radii entry {r} must be positive"
                )));
            }
        }
        for &b in &self.lambda_betas {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::Config(format!(
                    "lambda.betas entry {b} outside (0, 2]"
                )));
            }
        }
        if !(self.grid_radial_min > 0.0 && self.grid_radial_max > self.grid_radial_min) {
            return Err(Error::Config(
                "grid radial range must be positive and increasing".into(),
            ));
        }
        if self.grid_radial_points < 2 {
            return Err(Error::Config(
                "grid.radial_points must be at least 2".into(),
            ));
        }
        if !(self.quad.grading_ratio > 1.0) {
            return Err(Error::Config("quad.grading_ratio must exceed 1".into()));
        }
        Ok(())
    }

    /// Sup-norm grid for a given ambient dimension.
    pub fn grid_spec(&self, dim: usize) -> crate::charfun::GridSpec {
        crate::charfun::GridSpec {
            radial_min: self.grid_radial_min,
            radial_max: self.grid_radial_max,
            radial_points: self.grid_radial_points,
            directions: crate::charfun::direction_set(dim),
        }
    }
}

fn parse_opt_f64(v: Option<String>, key: &str) -> Result<Option<f64>> {
    v.map(|s| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: `{s}` is not a number")))
    })
    .transpose()
}

fn set_f64(slot: &mut f64, v: Option<String>, key: &str) -> Result<()> {
    if let Some(x) = parse_opt_f64(v, key)? {
        *slot = x;
    }
    Ok(())
}

fn set_usize(slot: &mut usize, v: Option<String>, key: &str) -> Result<()> {
    if let Some(s) = v {
        *slot = s
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{key}: `{s}` is not an integer")))?;
    }
    Ok(())
}

fn set_u32(slot: &mut u32, v: Option<String>, key: &str) -> Result<()> {
    if let Some(s) = v {
        *slot = s
            .parse::<u32>()
            .map_err(|_| Error::Config(format!("{key}: `{s}` is not an integer")))?;
    }
    Ok(())
}

fn set_bool(slot: &mut bool, v: Option<String>, key: &str) -> Result<()> {
    if let Some(s) = v {
        *slot = match s.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Config(format!("{key}: `{other}` is not true/false"))),
        };
    }
    Ok(())
}

fn parse_f64_list(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: `{t}` is not a number")))
        })
        .collect()
}
