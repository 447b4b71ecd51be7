//! Command line for the strip laboratory: direct solves, boundary-operator
//! probes, almost-periodic data tooling, and the homogenization sweep.

use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use striplab::config::RunConfig;
use striplab::homog::{report_to_json, run_sweep, EpsilonSweep};
use striplab::io;
use striplab::solver::{solve_dirichlet, solve_neumann};
use striplab::verify::{run_check, StructuralCheck};
use striplab::{
    assemble_linear_dtn_matrix, find_almost_periods, round_to_torus, slice_periodic, BoundaryField,
    DtnOperator,
};

#[derive(Parser)]
#[command(name = "striplab", version, about = "Boundary operators and Neumann homogenization on a periodic strip")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one Dirichlet or Neumann problem and write the bulk field.
    Solve(SolveCmd),
    /// Apply or probe the Dirichlet-to-Neumann operator.
    Dtn(DtnCmd),
    /// Almost-periodic data tooling.
    Ap(ApCmd),
    /// Run the oscillation-scale sweep and write the report.
    Homogenize(HomogCmd),
}

#[derive(Args)]
struct SolveCmd {
    /// dirichlet | neumann
    #[arg(long)]
    problem: String,
    #[arg(long)]
    config: PathBuf,
    /// Output CSV for the bulk field.
    #[arg(long)]
    out: PathBuf,
    /// Boundary data as a field CSV; defaults to the configured `g_file`
    /// polynomial sampled on the grid.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct DtnCmd {
    #[arg(long)]
    config: PathBuf,
    /// Apply the operator to a boundary field CSV.
    #[arg(long)]
    apply: Option<PathBuf>,
    /// Assemble the linear kernel matrix.
    #[arg(long, default_value_t = false)]
    assemble_kernel: bool,
    /// Comma-separated structural check ids (e.g. 3.1,3.4,3.9) or `all`.
    #[arg(long)]
    verify_lemmas: Option<String>,
    /// Random trials per structural check.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// JSON report path for the structural checks.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Output CSV (applied field or kernel matrix).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApCmd {
    #[command(subcommand)]
    cmd: ApSub,
}

#[derive(Subcommand)]
enum ApSub {
    /// Restrict a lattice-periodic ambient polynomial to a tilted hyperplane.
    Slice {
        /// CSV of `amplitude,m_1,m_2[,m_3],phase` integer-frequency terms.
        #[arg(long)]
        input: PathBuf,
        /// Unit normal, comma separated.
        #[arg(long)]
        nu: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Round frequencies onto the torus lattice of a given period.
    Round {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, name = "L")]
        period: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan for almost periods.
    Periods {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        window: f64,
        /// JSON output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct HomogCmd {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-scale boundary trace CSVs.
    #[arg(long)]
    fields_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn load_config(path: &Path) -> Result<RunConfig, AnyError> {
    Ok(RunConfig::parse(&std::fs::read_to_string(path)?)?)
}

fn boundary_from_config(cfg: &RunConfig, grid: striplab::StripGrid) -> Result<BoundaryField, AnyError> {
    let g_path = cfg.g_file()?;
    let poly = io::read_trig_csv(&mut BufReader::new(File::open(g_path)?))?;
    Ok(BoundaryField::from_fn(grid, |x, z| poly.eval(&[x, z])))
}

fn run(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.cmd {
        Cmd::Solve(c) => {
            let cfg = load_config(&c.config)?;
            let grid = cfg.grid()?;
            let op = cfg.operator()?;
            let scfg = cfg.solve_config()?;
            let data = match &c.data {
                Some(p) => io::read_boundary_csv(&mut BufReader::new(File::open(p)?))?,
                None => boundary_from_config(&cfg, grid)?,
            };
            let result = match c.problem.as_str() {
                "dirichlet" => solve_dirichlet(&op, grid, &data, &scfg)?,
                "neumann" => solve_neumann(&op, grid, &data, &scfg)?,
                other => return Err(format!("unknown problem {other:?}").into()),
            };
            eprintln!(
                "{} iterations, residual {:.3e}, converged: {}",
                result.iterations, result.final_residual, result.converged
            );
            let mut w = BufWriter::new(File::create(&c.out)?);
            io::write_bulk_csv(&mut w, &result.field)?;
            Ok(if result.converged { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Dtn(c) => run_dtn(c),
        Cmd::Ap(c) => run_ap(c.cmd),
        Cmd::Homogenize(c) => run_homogenize(c),
    }
}

fn run_dtn(c: DtnCmd) -> Result<ExitCode, AnyError> {
    let cfg = load_config(&c.config)?;
    let grid = cfg.grid()?;
    let op = cfg.operator()?;
    let scfg = cfg.solve_config()?;
    let dtn = DtnOperator::new(op.clone(), grid, scfg.clone());

    if let Some(field_path) = &c.apply {
        let phi = io::read_boundary_csv(&mut BufReader::new(File::open(field_path)?))?;
        let out = dtn.apply(&phi)?;
        match &c.out {
            Some(p) => io::write_boundary_csv(&mut BufWriter::new(File::create(p)?), &out)?,
            None => io::write_boundary_csv(&mut std::io::stdout().lock(), &out)?,
        }
        return Ok(ExitCode::SUCCESS);
    }

    if c.assemble_kernel {
        let est = assemble_linear_dtn_matrix(&dtn)?;
        eprintln!(
            "zeroth order {:.6e}, offdiag min {:.3e}, symmetry defect {:.3e}, decay exponent {:.3}",
            est.zeroth_order, est.offdiag_min, est.symmetry_defect, est.decay_fit_exponent
        );
        let out = c.out.ok_or("--assemble-kernel needs --out")?;
        io::write_kernel_csv(&mut BufWriter::new(File::create(&out)?), &est.matrix)?;
        return Ok(ExitCode::SUCCESS);
    }

    if let Some(list) = &c.verify_lemmas {
        let checks: Vec<StructuralCheck> = if list.trim() == "all" {
            StructuralCheck::all().to_vec()
        } else {
            list.split(',')
                .map(|id| {
                    StructuralCheck::from_id(id).ok_or_else(|| format!("unknown check id {id:?}"))
                })
                .collect::<Result<_, _>>()?
        };
        let mut report = serde_json::Map::new();
        let mut all_pass = true;
        for check in checks {
            let outcome = run_check(check, &op, grid, &scfg, c.seeds, 1)?;
            println!(
                "{} {} max_defect {:.3e} tolerance {:.3e} {}",
                outcome.id,
                outcome.description,
                outcome.max_defect,
                outcome.tolerance,
                if outcome.pass { "pass" } else { "FAIL" }
            );
            all_pass &= outcome.pass;
            report.insert(
                outcome.id.clone(),
                serde_json::json!({
                    "max_defect": outcome.max_defect,
                    "tolerance": outcome.tolerance,
                    "pass": outcome.pass,
                }),
            );
        }
        if let Some(p) = &c.report {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "{}", serde_json::to_string_pretty(&serde_json::Value::Object(report))?)?;
        }
        return Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }

    Err("dtn needs one of --apply, --assemble-kernel, --verify-lemmas".into())
}

fn run_ap(cmd: ApSub) -> Result<ExitCode, AnyError> {
    match cmd {
        ApSub::Slice { input, nu, out } => {
            let ambient = io::read_lattice_csv(&mut BufReader::new(File::open(&input)?))?;
            let nu: Vec<f64> = nu
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()?;
            let sliced = slice_periodic(&ambient, &nu)?;
            io::write_trig_csv(&mut BufWriter::new(File::create(&out)?), &sliced)?;
            Ok(ExitCode::SUCCESS)
        }
        ApSub::Round { input, period, out } => {
            let poly = io::read_trig_csv(&mut BufReader::new(File::open(&input)?))?;
            let (rounded, err) = round_to_torus(&poly, period)?;
            println!("rounding_error {err:.6e}");
            io::write_trig_csv(&mut BufWriter::new(File::create(&out)?), &rounded)?;
            Ok(ExitCode::SUCCESS)
        }
        ApSub::Periods { input, delta, window, out } => {
            let poly = io::read_trig_csv(&mut BufReader::new(File::open(&input)?))?;
            let search = find_almost_periods(&poly, delta, window)?;
            let value = serde_json::json!({
                "delta": delta,
                "window": window,
                "scan_step": search.scan_step,
                "sparse": search.sparse,
                "count": search.records.len(),
                "periods": search.records.iter().map(|r| serde_json::json!({
                    "tau": if poly.dim() == 1 { serde_json::json!(r.tau[0]) } else { serde_json::json!(r.tau) },
                    "defect": r.defect,
                })).collect::<Vec<_>>(),
            });
            match out {
                Some(p) => writeln!(
                    BufWriter::new(File::create(&p)?),
                    "{}",
                    serde_json::to_string_pretty(&value)?
                )?,
                None => println!("{}", serde_json::to_string_pretty(&value)?),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_homogenize(c: HomogCmd) -> Result<ExitCode, AnyError> {
    let cfg = load_config(&c.config)?;
    let base_grid = cfg.grid()?;
    let op = cfg.operator()?;
    let scfg = cfg.solve_config()?;
    let poly = io::read_trig_csv(&mut BufReader::new(File::open(cfg.g_file()?)?))?;
    let sweep = EpsilonSweep {
        epsilons: cfg.epsilons()?,
        base_grid,
        g: poly,
        op,
        refine_with_eps: cfg.refine_with_eps()?,
    };
    let report = run_sweep(&sweep, &scfg)?;
    for r in &report.records {
        eprintln!(
            "eps {:.5}: osc {:.4e} mean {:+.6e} dtn_defect {:.2e} iters {}{}",
            r.eps,
            r.osc_v,
            r.mean_v,
            r.dtn_defect,
            r.iterations,
            if r.converged { "" } else { " (NOT CONVERGED)" }
        );
    }
    eprintln!(
        "Ibar0 raw {:+.6e} extrapolated {:+.6e} gbar {:+.6e}",
        report.ibar0_raw, report.ibar0_extrapolated, report.gbar
    );
    if let Some(dir) = &c.fields_dir {
        std::fs::create_dir_all(dir)?;
        for r in &report.records {
            let path = dir.join(format!("v_eps_{}.csv", r.eps));
            io::write_boundary_csv(&mut BufWriter::new(File::create(&path)?), &r.v)?;
        }
        if let Some(u) = &report.final_bulk {
            let path = dir.join("u_finest.csv");
            io::write_bulk_csv(&mut BufWriter::new(File::create(&path)?), u)?;
        }
    }
    let json = report_to_json(&report, &cfg.source);
    writeln!(BufWriter::new(File::create(&c.out)?), "{}", serde_json::to_string_pretty(&json)?)?;
    Ok(if report.pass.all() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
