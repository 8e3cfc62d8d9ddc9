//! `asgs`: run one configuration or a refinement sweep of the manufactured problem.

use std::path::PathBuf;
use std::process::ExitCode;

use asgs_core::harness::config::RunSpec;
use asgs_core::harness::convergence::{convergence_study, ConvergenceRow};
use asgs_core::harness::norms::compute_errors;
use asgs_core::harness::{table, vtk};
use asgs_core::{Exec, Mesh, Solver};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "asgs",
    version,
    about = "Stabilized P1 solver for power-law flow with coupled transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration and write the final fields.
    Solve(Options),
    /// Run a refinement sweep and write the error table.
    Convergence(Options),
}

#[derive(Args, Default)]
struct Options {
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// galerkin, asgs-static or asgs-dynamic
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    re: Option<f64>,
    #[arg(long)]
    power_index: Option<f64>,
    /// 1 (backward Euler) or 0 (Crank-Nicolson)
    #[arg(long)]
    theta: Option<f64>,
    /// one-way or strong
    #[arg(long)]
    coupling: Option<String>,
    /// subdivisions per side for `solve`
    #[arg(long)]
    grid: Option<usize>,
    /// comma-separated subdivisions for `convergence`
    #[arg(long)]
    levels: Option<String>,
    /// time step; defaults to 1/grid on each level
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// picard (iterate coefficients to convergence) or lagged (one solve per step)
    #[arg(long)]
    linearization: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    /// CSV table (convergence) or error summary (solve)
    #[arg(long)]
    out: Option<PathBuf>,
    /// VTK file with the final-time fields
    #[arg(long)]
    fields_out: Option<PathBuf>,
}

impl Options {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut kv = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k, v));
            }
        };
        push("method", self.method.clone());
        push("re", self.re.map(|v| v.to_string()));
        push("power-index", self.power_index.map(|v| v.to_string()));
        push("theta", self.theta.map(|v| v.to_string()));
        push("coupling", self.coupling.clone());
        push("grid", self.grid.map(|v| v.to_string()));
        push("levels", self.levels.clone());
        push("dt", self.dt.map(|v| v.to_string()));
        push("t-final", self.t_final.map(|v| v.to_string()));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("linearization", self.linearization.clone());
        push("c1", self.c1.map(|v| v.to_string()));
        push("c2", self.c2.map(|v| v.to_string()));
        push("c3", self.c3.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push(
            "fields-out",
            self.fields_out.as_ref().map(|p| p.display().to_string()),
        );
        kv
    }

    fn spec(&self) -> Result<RunSpec, Box<dyn std::error::Error>> {
        let mut spec = RunSpec::default();
        if let Some(path) = &self.config {
            spec.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            spec.set(k, &v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn print_rows(rows: &[ConvergenceRow]) {
    let roc = |r: Option<f64>| r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    println!(
        "{:>8} {:>5} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6}",
        "dt", "1/h", "e_u", "RoC", "e_c", "RoC", "e_p", "RoC", "total", "RoC"
    );
    for r in rows {
        println!(
            "{:>8.5} {:>5} {:>10.3e} {:>6} {:>10.3e} {:>6} {:>10.3e} {:>6} {:>10.3e} {:>6}",
            r.dt,
            r.inv_h,
            r.e_u,
            roc(r.roc_u),
            r.e_c,
            roc(r.roc_c),
            r.e_p,
            roc(r.roc_p),
            r.total,
            roc(r.roc_total)
        );
    }
}

fn solve(spec: &RunSpec) -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Mesh::unit_square(spec.grid)?;
    let cfg = spec.solver_config(spec.dt_for(spec.grid));
    let solver = Solver::new(&mesh, spec.params(), cfg.clone())?;
    let run = solver.run()?;
    let report = compute_errors(&mesh, &run.states, cfg.dt, cfg.theta, Exec::Parallel)?;
    println!(
        "{} n={} dt={} steps={}: e_u={:.5e} e_c={:.5e} e_p={:.5e} total={:.5e}",
        cfg.method,
        spec.grid,
        cfg.dt,
        run.states.len() - 1,
        report.e_u,
        report.e_c,
        report.e_p,
        report.total
    );
    let fields = spec
        .fields_out
        .clone()
        .unwrap_or_else(|| PathBuf::from("fields.vtk"));
    let last = run.states.last().expect("a run holds the initial state");
    vtk::write_vtk_file(&fields, &mesh, last)?;
    log::info!("wrote {}", fields.display());
    if let Some(out) = &spec.out {
        let row = ConvergenceRow {
            dt: cfg.dt,
            inv_h: spec.grid,
            e_u: report.e_u,
            roc_u: None,
            e_c: report.e_c,
            roc_c: None,
            e_p: report.e_p,
            roc_p: None,
            total: report.total,
            roc_total: None,
        };
        table::write_table_file(out, &[row])?;
    }
    Ok(())
}

fn convergence(spec: &RunSpec) -> Result<(), Box<dyn std::error::Error>> {
    let levels = spec.study_levels();
    let cfg = spec.solver_config(levels[0].dt);
    let out = spec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("convergence.csv"));
    match convergence_study(&levels, &cfg, &spec.params(), Exec::Sequential) {
        Ok(rows) => {
            print_rows(&rows);
            table::write_table_file(&out, &rows)?;
            if let Some(fields) = &spec.fields_out {
                let n = *spec.levels.last().expect("levels are non-empty");
                let mesh = Mesh::unit_square(n)?;
                let run =
                    Solver::new(&mesh, spec.params(), spec.solver_config(spec.dt_for(n)))?.run()?;
                vtk::write_vtk_file(fields, &mesh, run.states.last().expect("initial state"))?;
            }
            Ok(())
        }
        Err(e) => {
            if !e.rows.is_empty() {
                print_rows(&e.rows);
                table::write_table_file(&out, &e.rows)?;
                eprintln!("partial table written to {}", out.display());
            }
            Err(e.into())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => o.spec().and_then(|s| solve(&s)),
        Command::Convergence(o) => o.spec().and_then(|s| convergence(&s)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
