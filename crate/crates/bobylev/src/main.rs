//! Command-line front end: one subcommand per module, flat-file
//! configuration, deterministic CSV output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bobylev::charfun::{
    difference_integral_norm, moment_distance, real_integral_norm, real_moment_distance,
    sup_ratio_norm, DifferenceCoefficients, MeasureCharFun, UnitCharFun,
};
use bobylev::config::RunConfig;
use bobylev::diagnostics::{continuity_beta_check, continuity_mk_check, moment_trace};
use bobylev::kernels::lambda_beta;
use bobylev::moments::moment_bound_reports;
use bobylev::report::{fmt_f64, Csv};
use bobylev::solver::{
    conserved_quantities, read_states, solve, sup_abs, tail_decay_proxy, write_states, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "bobylev",
    about = "Moment characterization of probability measures and a Fourier-space \
             collision solver for Maxwellian molecules",
    version
)]
struct Cli {
    /// Path to a flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory (overrides out.dir from the config).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the randomized generators of `verify`.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the symmetric-difference coefficients of order k as CSV.
    Coeffs {
        #[arg(long)]
        k: u32,
    },
    /// Evaluate norms of the configured measure's characteristic function.
    Charfun,
    /// Emit moment-bound report rows for the configured measure.
    Moments,
    /// Print the rate constants λ_β for the configured kernel.
    Lambda,
    /// Integrate the collision equation; write trajectory CSV (and optional
    /// binary state dump).
    Solve,
    /// Run continuity and moment diagnostics on a stored or fresh trajectory.
    Diagnose {
        /// Binary state dump to diagnose instead of solving afresh.
        #[arg(long)]
        trajectory: Option<String>,
    },
    /// Run the acceptance suite and print one pass/fail line per criterion.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> bobylev::Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }

    match cli.command {
        Command::Coeffs { k } => {
            let coeffs = DifferenceCoefficients::new(k)?;
            let mut csv = Csv::new("k,j,c");
            for (j, &c) in coeffs.coefficients().iter().enumerate() {
                csv.row(&[k.to_string(), j.to_string(), fmt_f64(c)]);
            }
            print!("{}", csv.finish());
            Ok(ExitCode::SUCCESS)
        }
        Command::Charfun => {
            let text = charfun_csv(&cfg)?;
            write_out(&cfg.out_dir, "charfun.csv", &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Moments => {
            let text = moments_csv(&cfg)?;
            write_out(&cfg.out_dir, "moments.csv", &text)?;
            print!("{text}");
            let failed = text.lines().skip(1).any(|l| l.ends_with("false"));
            Ok(if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Lambda => {
            let mut csv = Csv::new("beta,value,remainder_bound,ill_conditioned");
            for &beta in &cfg.lambda_betas {
                let l = lambda_beta(&cfg.kernel, beta)?;
                csv.row(&[
                    fmt_f64(beta),
                    fmt_f64(l.value),
                    fmt_f64(l.remainder_bound),
                    l.ill_conditioned.to_string(),
                ]);
            }
            let text = csv.finish();
            write_out(&cfg.out_dir, "lambda.csv", &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve => {
            let traj = solve(&cfg.initial.load()?, &cfg.kernel, &cfg.solver)?;
            let text = trajectory_csv(&traj);
            write_out(&cfg.out_dir, "trajectory.csv", &text)?;
            if cfg.binary_dump {
                let mut bytes = Vec::new();
                write_states(&traj, &mut bytes)?;
                std::fs::create_dir_all(&cfg.out_dir)?;
                std::fs::write(Path::new(&cfg.out_dir).join("states.bin"), bytes)?;
            }
            println!(
                "wrote {} ({} states, rate Λ = {})",
                PathBuf::from(&cfg.out_dir).join("trajectory.csv").display(),
                traj.states.len(),
                fmt_f64(traj.rate)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { trajectory } => {
            let traj = match trajectory {
                Some(path) => read_states(&std::fs::read(path)?)?,
                None => solve(&cfg.initial.load()?, &cfg.kernel, &cfg.solver)?,
            };
            let (text, all_pass) = diagnose_csv(&cfg, &traj)?;
            write_out(&cfg.out_dir, "diagnostics.csv", &text)?;
            print!("{text}");
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Verify => {
            let outcomes = bobylev::verify::run_all(cli.seed);
            let mut all = true;
            for o in &outcomes {
                println!("{}", o.line());
                all &= o.pass;
            }
            println!(
                "{} of {} criteria passed",
                outcomes.iter().filter(|o| o.pass).count(),
                outcomes.len()
            );
            Ok(if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn write_out(dir: &str, file: &str, text: &str) -> bobylev::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(Path::new(dir).join(file), text)?;
    Ok(())
}

fn charfun_csv(cfg: &RunConfig) -> bobylev::Result<String> {
    let measure = cfg.initial.measure()?;
    let phi = MeasureCharFun::new(&measure);
    let one = UnitCharFun { dim: measure.dim() };
    let grid = cfg.grid_spec(measure.dim());
    let (k, alpha, beta, eps) = (cfg.diag.k, cfg.diag.alpha, cfg.diag.beta, cfg.diag.eps);

    let mut csv = Csv::new("name,k,alpha,beta,value,est_error");
    // summaries of φ and Δ^k over the evaluation grid
    {
        use bobylev::charfun::{symmetric_difference, CharFun};
        let mut sup_abs: f64 = 0.0;
        let mut sup_delta: f64 = 0.0;
        for r in grid.radii() {
            for dir in &grid.directions {
                let xi: Vec<f64> = dir.iter().map(|d| d * r).collect();
                sup_abs = sup_abs.max(phi.eval(&xi).norm());
                sup_delta = sup_delta.max(symmetric_difference(&phi, k, &xi)?);
            }
        }
        csv.row(&[
            "charfun_sup_abs".into(),
            "0".into(),
            fmt_f64(f64::NAN),
            fmt_f64(f64::NAN),
            fmt_f64(sup_abs),
            fmt_f64(0.0),
        ]);
        csv.row(&[
            "difference_sup".into(),
            k.to_string(),
            fmt_f64(f64::NAN),
            fmt_f64(f64::NAN),
            fmt_f64(sup_delta),
            fmt_f64(0.0),
        ]);
    }
    let sup = sup_ratio_norm(&phi, &one, beta, &grid)?;
    csv.row(&[
        "sup_ratio".into(),
        "0".into(),
        fmt_f64(f64::NAN),
        fmt_f64(beta),
        fmt_f64(sup),
        fmt_f64(0.0),
    ]);
    let mk = difference_integral_norm(&phi, &one, k, alpha, &cfg.quad)?;
    csv.row(&[
        "difference_integral".into(),
        k.to_string(),
        fmt_f64(alpha),
        fmt_f64(f64::NAN),
        fmt_f64(mk.value),
        fmt_f64(mk.est_error),
    ]);
    if alpha > 0.0 {
        let tilde = real_integral_norm(&phi, &one, alpha, &cfg.quad)?;
        csv.row(&[
            "real_integral".into(),
            "1".into(),
            fmt_f64(alpha),
            fmt_f64(f64::NAN),
            fmt_f64(tilde.value),
            fmt_f64(tilde.est_error),
        ]);
    }
    let dis = moment_distance(&phi, &one, k, alpha, beta, &grid, &cfg.quad)?;
    csv.row(&[
        "moment_distance".into(),
        k.to_string(),
        fmt_f64(alpha),
        fmt_f64(beta),
        fmt_f64(dis),
        fmt_f64(f64::NAN),
    ]);
    if beta < alpha && alpha < 2.0 {
        let d = real_moment_distance(&phi, &one, alpha, beta, eps, &grid, &cfg.quad)?;
        csv.row(&[
            "real_moment_distance".into(),
            "1".into(),
            fmt_f64(alpha),
            fmt_f64(beta),
            fmt_f64(d),
            fmt_f64(f64::NAN),
        ]);
    }
    Ok(csv.finish())
}

fn moments_csv(cfg: &RunConfig) -> bobylev::Result<String> {
    let measure = cfg.initial.measure()?;
    let mut csv = Csv::new("k,alpha,d,R,moment_lhs,fourier_rhs,constant,holds");
    for &k in &cfg.moments.ks {
        for &alpha in &cfg.moments.alphas {
            let rows = moment_bound_reports(
                &measure,
                k,
                alpha,
                &cfg.moments.radii,
                &cfg.quad,
                cfg.moments.tol,
            )?;
            for r in rows {
                csv.row(&[
                    r.k.to_string(),
                    fmt_f64(r.alpha),
                    r.dim.to_string(),
                    fmt_f64(r.r),
                    fmt_f64(r.lhs),
                    fmt_f64(r.rhs),
                    fmt_f64(r.constant),
                    r.holds.to_string(),
                ]);
            }
        }
    }
    Ok(csv.finish())
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut csv =
        Csv::new("t,mass,momentum_x,momentum_y,momentum_z,energy,sup_abs_phi,tail_decay_proxy");
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let c = conserved_quantities(state);
        csv.row(&[
            fmt_f64(*t),
            fmt_f64(c.mass),
            fmt_f64(c.momentum[0]),
            fmt_f64(c.momentum[1]),
            fmt_f64(c.momentum[2]),
            fmt_f64(c.energy),
            fmt_f64(sup_abs(state)),
            fmt_f64(tail_decay_proxy(state)),
        ]);
    }
    csv.finish()
}

fn diagnose_csv(cfg: &RunConfig, traj: &Trajectory) -> bobylev::Result<(String, bool)> {
    let mut csv = Csv::new("check,k,alpha,beta,s,t,lhs,rhs,ratio,pass");
    let mut all_pass = true;
    for &beta in &cfg.diag.betas {
        let rep = continuity_beta_check(traj, beta, &cfg.kernel, cfg.diag.tol)?;
        all_pass &= rep.all_pass;
        for p in &rep.pairs {
            csv.row(&[
                "continuity_beta".into(),
                "0".into(),
                fmt_f64(f64::NAN),
                fmt_f64(beta),
                fmt_f64(p.s),
                fmt_f64(p.t),
                fmt_f64(p.lhs),
                fmt_f64(p.rhs),
                fmt_f64(p.ratio),
                p.pass.to_string(),
            ]);
        }
    }
    let q = continuity_mk_check(traj, cfg.diag.k, cfg.diag.alpha, &cfg.quad)?;
    for (s, t, norm, quotient) in &q.pairs {
        csv.row(&[
            "mk_quotient".into(),
            cfg.diag.k.to_string(),
            fmt_f64(cfg.diag.alpha),
            fmt_f64(f64::NAN),
            fmt_f64(*s),
            fmt_f64(*t),
            fmt_f64(*norm),
            fmt_f64(*quotient),
            fmt_f64(quotient / q.max_quotient.max(1e-300)),
            "true".into(),
        ]);
    }
    for p in moment_trace(traj, cfg.diag.k, cfg.diag.alpha, &cfg.quad)? {
        let bounded = p.value.is_finite();
        all_pass &= bounded;
        csv.row(&[
            "moment_trace".into(),
            cfg.diag.k.to_string(),
            fmt_f64(cfg.diag.alpha),
            fmt_f64(f64::NAN),
            fmt_f64(p.t),
            fmt_f64(p.t),
            fmt_f64(p.value),
            fmt_f64(p.domain_hi),
            fmt_f64(0.0),
            bounded.to_string(),
        ]);
    }
    Ok((csv.finish(), all_pass))
}
