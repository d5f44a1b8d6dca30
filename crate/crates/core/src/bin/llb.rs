//! Thin command-line front end over the library.

use clap::{Args, Parser, Subcommand};
use llb_sav::config::{parse_config, RunConfig, PRESET_NAMES};
use llb_sav::diagnostics::energy_records;
use llb_sav::fem::assemble_mass_stiffness;
use llb_sav::io::{
    emit_energy_csv, emit_field_vtk, emit_rate_csv, format_rate_summary,
};
use llb_sav::mesh::build_structured;
use llb_sav::selftest::run_selftests;
use llb_sav::sparse::SolverKind;
use llb_sav::stepper::{run, Scheme};
use llb_sav::study::{run_study, Coupling, StudySpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "llb", about = "SAV finite-element solver for the LLB equation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and emit diagnostics.
    Run(CommonArgs),
    /// Run a mesh-refinement convergence study.
    Study(CommonArgs),
    /// List the built-in experiment presets.
    Presets,
    /// Run the invariant self-test suite.
    Check,
}

#[derive(Args)]
struct CommonArgs {
    /// Built-in preset: simulation1 or simulation2.
    #[arg(long)]
    preset: Option<String>,
    /// Key-value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cells per side of the (base) mesh.
    #[arg(long)]
    n: Option<usize>,
    /// Time step size.
    #[arg(long)]
    k: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Time scheme: euler or bdf2.
    #[arg(long)]
    scheme: Option<String>,
    /// Number of mesh levels for a study.
    #[arg(long)]
    levels: Option<usize>,
    /// Time-step coupling for a study: fixed or proportional:<c>.
    #[arg(long)]
    coupling: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Linear solver: lu or gmres.
    #[arg(long)]
    solver: Option<String>,
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &args.preset {
        cfg.apply_preset(p).map_err(|e| e.to_string())?;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(k) = args.k {
        cfg.k = k;
        if matches!(cfg.coupling, Coupling::FixedK { .. }) {
            cfg.coupling = Coupling::FixedK { k };
        }
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    if let Some(s) = &args.scheme {
        cfg.scheme = match s.as_str() {
            "euler" => Scheme::Euler,
            "bdf2" => Scheme::Bdf2,
            _ => return Err(format!("unknown scheme `{s}` (expected euler or bdf2)")),
        };
    }
    if let Some(l) = args.levels {
        cfg.levels = l;
    }
    if let Some(c) = &args.coupling {
        cfg.coupling = if c == "fixed" {
            Coupling::FixedK { k: cfg.k }
        } else if let Some(cc) = c.strip_prefix("proportional:") {
            let cc: f64 = cc
                .parse()
                .map_err(|e| format!("bad coupling constant `{cc}`: {e}"))?;
            Coupling::Proportional { c: cc }
        } else {
            return Err(format!(
                "unknown coupling `{c}` (expected fixed or proportional:<c>)"
            ));
        };
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = &args.solver {
        cfg.solver = match s.as_str() {
            "lu" => SolverKind::Lu,
            "gmres" => SolverKind::Gmres,
            _ => return Err(format!("unknown solver `{s}` (expected lu or gmres)")),
        };
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn cmd_run(args: &CommonArgs) -> Result<(), String> {
    let cfg = build_config(args)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.out_dir.display()))?;
    let mesh = build_structured(cfg.domain, cfg.n).map_err(|e| e.to_string())?;
    let ops = assemble_mass_stiffness(mesh);
    let init = cfg.initial;
    let traj = run(
        |x, y| init.value(x, y),
        |x, y| init.gradient(x, y),
        &ops,
        &cfg.scheme_config(),
    )
    .map_err(|e| e.to_string())?;

    if cfg.emit_energy_csv {
        let records =
            energy_records(&traj, cfg.scheme, &cfg.coeff, &ops).map_err(|e| e.to_string())?;
        let path = cfg.out_dir.join("energy.csv");
        emit_energy_csv(&records, &path).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    if cfg.vtk_stride > 0 {
        for state in &traj.states {
            if state.step_index % cfg.vtk_stride == 0 {
                let path = cfg.out_dir.join(format!("field_{:06}.vtk", state.step_index));
                emit_field_vtk(&state.u, &ops.mesh, &path).map_err(|e| e.to_string())?;
            }
        }
        println!("wrote field snapshots to {}", cfg.out_dir.display());
    }
    let last = traj.states.last().expect("trajectory has an initial state");
    println!(
        "done: {} steps to t = {:.6}, r = {:.6e}",
        traj.states.len() - 1,
        last.t,
        last.r
    );
    Ok(())
}

fn cmd_study(args: &CommonArgs) -> Result<(), String> {
    let cfg = build_config(args)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.out_dir.display()))?;
    let spec = StudySpec {
        domain: cfg.domain,
        base_n: cfg.n,
        levels: cfg.levels,
        coupling: cfg.coupling,
        scheme: cfg.scheme,
        coeff: cfg.coeff,
        initial: cfg.initial,
        t_end: cfg.t_end,
        solver: cfg.solver,
        tol: cfg.tol,
        bdf2_init: cfg.bdf2_init,
    };
    let report = run_study(&spec).map_err(|e| e.to_string())?;
    print!("{}", format_rate_summary(&report));
    if cfg.emit_rate_csv {
        let path = cfg.out_dir.join("rates.csv");
        emit_rate_csv(&report, &path).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_presets() {
    for name in PRESET_NAMES {
        let mut cfg = RunConfig::default();
        cfg.apply_preset(name).expect("built-in preset");
        let c = cfg.coeff;
        println!(
            "{name}: gamma={}, alpha={}, sigma={}, kappa={}, mu={}, u0={}",
            c.gamma, c.alpha, c.sigma, c.kappa, c.mu, cfg.initial
        );
    }
}

fn cmd_check() -> Result<(), String> {
    let mut failures = 0;
    for r in run_selftests() {
        println!(
            "{} {} ({})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        Err(format!("{failures} self-test(s) failed"))
    } else {
        println!("all self-tests passed");
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Study(args) => cmd_study(args),
        Command::Presets => {
            cmd_presets();
            Ok(())
        }
        Command::Check => cmd_check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
