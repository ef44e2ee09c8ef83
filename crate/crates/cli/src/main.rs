use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqg_core::acceptance::{run_all, run_criterion, Scale, CRITERIA};
use sqg_core::diagnostics::{linf_oversampled, twin_run_compare, Recorder};
use sqg_core::fractional::{
    lambda_power, lambda_semigroup, lambda_singular, SemigroupQuadrature, SingularKernel,
};
use sqg_core::io::{
    format_config, load_config, parse_config, write_snapshot, RunManifest, TelemetryWriter,
};
use sqg_core::solver::{Solver, SolverError};
use sqg_core::transform::{synthesize, PointEvaluator};
use sqg_core::{InitialCondition, SimulationState, SolverConfig, SpectralField, UnitVector};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sqg",
    version,
    about = "Critical SQG on the sphere: simulate, verify, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory, writing telemetry and snapshots.
    Run(RunArgs),
    /// Run the verification suite; exits 1 if any criterion fails.
    Verify(VerifyArgs),
    /// Tabulate semigroup and singular-integral errors against the spectral operator.
    Operators(OperatorArgs),
    /// Compare two runs that differ in resolution or viscosity.
    Twin(TwinArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any configuration key (repeatable): --set KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "l-max")]
    l_max: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dealias: Option<f64>,
    #[arg(long = "sample-every")]
    sample_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{s}'"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags: [(&str, Option<String>); 8] = [
            ("L_max", self.l_max.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| v.to_string())),
            ("t_end", self.t_end.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("nu", self.nu.map(|v| v.to_string())),
            ("dealias_fraction", self.dealias.map(|v| v.to_string())),
            ("sample_every", self.sample_every.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        out.extend(
            flags
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v))),
        );
        Ok(out)
    }

    fn load(&self) -> Result<SolverConfig, String> {
        let ov = self.overrides()?;
        let c = match &self.config {
            Some(p) => load_config(p, &ov),
            None => parse_config("", &ov),
        };
        c.map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Initial condition: zonal:L | random:LO:HI:AMP[:SEED] | pair:SEP:WIDTH:AMP.
    #[arg(long, default_value = "random:1:8:0.5")]
    ic: InitialCondition,
    /// Output directory for telemetry.csv, snapshots and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a snapshot at every sample (final snapshot is always written).
    #[arg(long)]
    snapshots: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced run sizes; tolerances unchanged.
    #[arg(long)]
    quick: bool,
    /// Run only these criteria (e.g. --only 1 --only 3a).
    #[arg(long)]
    only: Vec<String>,
}

#[derive(Args)]
struct OperatorArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    degree: usize,
    /// Order m of the test field Re Y_lm.
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Quadrature degrees for the singular integral, ascending.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    levels: Vec<usize>,
}

#[derive(Args)]
struct TwinArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "random:1:8:0.5:4")]
    ic: InitialCondition,
    /// Degree of the second run (defaults to twice the first).
    #[arg(long = "l-max-b")]
    l_max_b: Option<usize>,
    /// Viscosity of the second run (defaults to the first).
    #[arg(long = "nu-b")]
    nu_b: Option<f64>,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::InitialCondition(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

fn io_fail(e: impl std::fmt::Display) -> Failure {
    Failure::Check(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Operators(a) => cmd_operators(a),
        Command::Twin(a) => cmd_twin(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

/// Exact solution for zonal data, where the nonlinear term vanishes.
fn zonal_exact(solver: &Solver, degree: usize, t: f64) -> SpectralField {
    SpectralField::zonal(solver.config().lmax, degree)
        .scaled((-solver.decay_rate(degree) * t).exp())
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let config = a.config.load().map_err(Failure::Usage)?;
    let solver = Solver::new(config.clone())?;
    let theta = a.ic.build(config.lmax, config.seed)?;
    let recorder = Recorder::new(config.lmax, config.alpha).map_err(io_fail)?;
    let mut manifest = RunManifest::new(config.clone(), a.ic.to_string());
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(io_fail)?;
        fs::write(dir.join("config.txt"), format_config(&config)).map_err(io_fail)?;
    }
    let mut telemetry = match &a.out {
        Some(dir) => Some(
            TelemetryWriter::new(BufWriter::new(
                fs::File::create(dir.join("telemetry.csv")).map_err(io_fail)?,
            ))
            .map_err(io_fail)?,
        ),
        None => None,
    };
    let mut snapshots = Vec::new();
    let mut last = None;
    let end = solver.run_from(SimulationState::new(theta), &mut |s| {
        let r = recorder
            .record(s)
            .map_err(|e| SolverError::Sink(e.to_string()))?;
        if let Some(w) = telemetry.as_mut() {
            w.write(&r).map_err(|e| SolverError::Sink(e.to_string()))?;
        }
        if let (true, Some(dir)) = (a.snapshots, &a.out) {
            let p = dir.join(format!("snapshot_{:08}.sqg", s.step_index));
            write_snapshot(&p, s, config.alpha).map_err(|e| SolverError::Sink(e.to_string()))?;
            snapshots.push(p);
        }
        last = Some(r);
        Ok(())
    });
    let end = match end {
        Ok(s) => s,
        Err(SolverError::Cfl { cfl, limit, state }) => {
            if let Some(dir) = &a.out {
                let _ = write_snapshot(&dir.join("cfl_failure.sqg"), &state, config.alpha);
            }
            return Err(Failure::Check(format!(
                "CFL guard violated at t = {} (step {}): {cfl:.4} > {limit}",
                state.time, state.step_index
            )));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = telemetry {
        w.into_inner().map_err(io_fail)?;
    }
    if let Some(dir) = &a.out {
        let final_path = dir.join("final.sqg");
        write_snapshot(&final_path, &end, config.alpha).map_err(io_fail)?;
        for p in [dir.join("config.txt"), dir.join("telemetry.csv")]
            .iter()
            .chain(&snapshots)
            .chain([&final_path])
        {
            manifest.add_file(dir, p).map_err(io_fail)?;
        }
        manifest.end_time = sqg_core::io::unix_now();
        fs::write(dir.join("manifest.json"), manifest.to_json()).map_err(io_fail)?;
    }
    let r = last.expect("final sample is always recorded");
    println!(
        "t = {}  steps = {}  l2 = {:.6e}  linf = {:.6e}  grad_sup = {:.6e}",
        end.time, end.step_index, r.l2, r.linf, r.grad_sup
    );
    if let InitialCondition::ZonalHarmonic { degree } = a.ic {
        let exact = zonal_exact(&solver, degree, end.time);
        let err = synthesize(&(&end.theta - &exact), solver.grid())
            .map_err(io_fail)?
            .max_abs();
        println!("final error vs exact zonal solution: {err:.3e}");
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    for id in &a.only {
        if !CRITERIA.contains(&id.as_str()) {
            return Err(Failure::Usage(format!(
                "unknown criterion '{id}'; known: {}",
                CRITERIA.join(", ")
            )));
        }
    }
    let results = if a.only.is_empty() {
        run_all(scale)
    } else {
        a.only
            .iter()
            .filter_map(|id| run_criterion(id, scale))
            .collect()
    };
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed: {}", failed.join(", "))))
    }
}

fn cmd_operators(a: OperatorArgs) -> Result<(), Failure> {
    if a.order > a.degree || a.degree == 0 {
        return Err(Failure::Usage(
            "need 0 <= order <= degree and degree >= 1".into(),
        ));
    }
    if !(a.alpha > 0.0 && a.alpha < 2.0) {
        return Err(Failure::Usage("alpha must lie in (0, 2)".into()));
    }
    let f = SpectralField::real_part_of_mode(a.degree, a.degree, a.order);
    let exact = lambda_power(&f, a.alpha).map_err(io_fail)?;
    let scale = linf_oversampled(&exact, 4).map_err(io_fail)?;
    let pts: Vec<UnitVector> = (0..a.points)
        .map(|i| {
            // golden-angle spiral
            let z = 1.0 - (2.0 * i as f64 + 1.0) / a.points as f64;
            UnitVector::from_spherical(z.acos(), 2.399_963_229_728_653 * i as f64)
        })
        .collect();
    let mut ev = PointEvaluator::new(a.degree);
    let want: Vec<f64> = pts.iter().map(|x| ev.eval(&exact, x)).collect();
    let rel = |vals: &[f64]| {
        vals.iter()
            .zip(&want)
            .map(|(v, w)| (v - w).abs() / scale)
            .fold(0.0, f64::max)
    };
    println!(
        "Re Y_{}{} alpha = {}, {} points, errors relative to sup|spectral|",
        a.degree, a.order, a.alpha, a.points
    );
    println!(
        "{:>6} {:>14} {:>10} {:>14}",
        "quad_L", "singular", "log_nodes", "semigroup"
    );
    for (i, &ql) in a.levels.iter().enumerate() {
        if ql < 2 * a.degree {
            return Err(Failure::Usage(format!(
                "quadrature degree {ql} below twice the field degree"
            )));
        }
        let k = SingularKernel::standard(a.alpha, ql).map_err(io_fail)?;
        let sing: Vec<f64> = pts
            .iter()
            .map(|x| lambda_singular(&f, x, &k))
            .collect::<Result<_, _>>()
            .map_err(io_fail)?;
        let nodes = 100usize << i;
        let q = SemigroupQuadrature::new(1e-10, 50.0, nodes)
            .and_then(|q| q.calibrated(a.alpha))
            .map_err(io_fail)?;
        let semi: Vec<f64> = pts
            .iter()
            .map(|x| lambda_semigroup(&f, x, a.alpha, &q))
            .collect::<Result<_, _>>()
            .map_err(io_fail)?;
        println!(
            "{ql:>6} {:>14.6e} {nodes:>10} {:>14.6e}",
            rel(&sing),
            rel(&semi)
        );
    }
    Ok(())
}

fn cmd_twin(a: TwinArgs) -> Result<(), Failure> {
    let ca = a.config.load().map_err(Failure::Usage)?;
    let cb = SolverConfig {
        lmax: a.l_max_b.unwrap_or(2 * ca.lmax),
        nu: a.nu_b.unwrap_or(ca.nu),
        ..ca.clone()
    };
    cb.validate()?;
    let r = twin_run_compare(&ca, &cb, &a.ic).map_err(|e| Failure::Usage(e.to_string()))?;
    println!(
        "A: L = {}, nu = {}   B: L = {}, nu = {}",
        ca.lmax, ca.nu, cb.lmax, cb.nu
    );
    println!("K = {:.6}  floor = {:.6e}", r.k_rate, r.floor);
    println!("{:>10} {:>14} {:>14}", "t", "distance", "envelope");
    for ((t, d), e) in r.times.iter().zip(&r.distances).zip(&r.envelope) {
        println!("{t:>10.4} {d:>14.6e} {e:>14.6e}");
    }
    if r.within_envelope {
        println!("within Gronwall envelope");
        Ok(())
    } else {
        Err(Failure::Check(
            "distance exceeded the Gronwall envelope".into(),
        ))
    }
}
