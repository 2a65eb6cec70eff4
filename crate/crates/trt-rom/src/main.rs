//! Command-line pipeline driver.
//!
//! Thin argument handling around the library: each subcommand reads and
//! writes one run directory under the output root, so a full pipeline is
//! run-fom, make-basis, run-rom (and run-baseline), then compare. Exit code
//! 2 flags configuration or usage problems, 1 anything that failed while
//! running.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Arg, Command};

use trt_rom::baselines::{run_baseline, BaselineKind};
use trt_rom::compare::{ErrorReport, Trajectory};
use trt_rom::fom::run_fom;
use trt_rom::persist;
use trt_rom::pod::{select_rank, stage_bases};
use trt_rom::rom::run_rom;
use trt_rom::{Error, RunConfig};

/// Truncation thresholds tabulated by make-basis for rank studies.
const EPSILON_SWEEP: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

fn main() {
    let code = match run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn cli() -> Command {
    let config = Arg::new("config")
        .long("config")
        .value_name("FILE")
        .global(true)
        .help("Run configuration file (defaults describe the benchmark)");
    let out = Arg::new("out")
        .long("out")
        .value_name("DIR")
        .global(true)
        .help("Output root (overrides TRTROM_OUT and the configured dir)");
    Command::new("trt-rom")
        .about("1D multigroup thermal radiative transfer: full-order and reduced-order runs")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(config)
        .arg(out)
        .subcommand(Command::new("run-fom").about("Run the full-order model and store snapshots"))
        .subcommand(
            Command::new("make-basis")
                .about("Build one basis per stage from stored snapshots"),
        )
        .subcommand(
            Command::new("run-rom")
                .about("Run the reduced-order model from stored bases")
                .arg(
                    Arg::new("epsilon")
                        .long("epsilon")
                        .value_name("EPS")
                        .help("Singular-tail truncation threshold (defaults to [rom] epsilon)"),
                ),
        )
        .subcommand(
            Command::new("run-baseline")
                .about("Run a classic closure model (p1 or fld)")
                .arg(
                    Arg::new("model")
                        .long("model")
                        .value_name("MODEL")
                        .help("p1 or fld (defaults to [baseline] model)"),
                ),
        )
        .subcommand(
            Command::new("compare")
                .about("Report errors of one run directory against another")
                .arg(
                    Arg::new("reference")
                        .long("reference")
                        .value_name("DIR")
                        .required(true)
                        .help("Run directory holding the reference fields"),
                )
                .arg(
                    Arg::new("candidate")
                        .long("candidate")
                        .value_name("DIR")
                        .required(true)
                        .help("Run directory to judge"),
                )
                .arg(
                    Arg::new("report")
                        .long("report")
                        .value_name("DIR")
                        .help("Where to write errors.csv and aggregates.csv (default: candidate)"),
                ),
        )
}

fn run() -> trt_rom::Result<()> {
    let matches = cli().get_matches();
    let cfg = match matches.get_one::<String>("config") {
        Some(path) => RunConfig::load(Path::new(path))?,
        None => RunConfig::default(),
    };
    let out_root = matches
        .get_one::<String>("out")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("TRTROM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());

    match matches.subcommand() {
        Some(("run-fom", _)) => cmd_run_fom(&cfg, &out_root),
        Some(("make-basis", _)) => cmd_make_basis(&cfg, &out_root),
        Some(("run-rom", sub)) => {
            let epsilon = match sub.get_one::<String>("epsilon") {
                Some(raw) => raw
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("--epsilon: cannot parse {raw:?}")))?,
                None => cfg.epsilon,
            };
            cmd_run_rom(&cfg, &out_root, epsilon)
        }
        Some(("run-baseline", sub)) => {
            let model = match sub.get_one::<String>("model") {
                Some(raw) => BaselineKind::parse(raw)
                    .ok_or_else(|| Error::Config(format!("--model: unknown model {raw:?}")))?,
                None => cfg.model,
            };
            cmd_run_baseline(&cfg, &out_root, model)
        }
        Some(("compare", sub)) => {
            let reference = PathBuf::from(sub.get_one::<String>("reference").expect("required"));
            let candidate = PathBuf::from(sub.get_one::<String>("candidate").expect("required"));
            let report = sub
                .get_one::<String>("report")
                .map(PathBuf::from)
                .unwrap_or_else(|| candidate.clone());
            cmd_compare(&reference, &candidate, &report)
        }
        _ => unreachable!("subcommand is required"),
    }
}

fn ensure_dir(dir: &Path) -> trt_rom::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Write the shared run triple: history, temperature series, energy series.
fn write_run(
    dir: &Path,
    mesh: &trt_rom::grid::SpatialMesh,
    rows: &[persist::HistoryRow],
    trajectory: &Trajectory,
) -> trt_rom::Result<()> {
    persist::write_history(&dir.join("history.csv"), rows)?;
    persist::write_series(&dir.join("temperature.csv"), mesh, &trajectory.times, &trajectory.temperature)?;
    persist::write_series(&dir.join("energy.csv"), mesh, &trajectory.times, &trajectory.energy)?;
    Ok(())
}

fn cmd_run_fom(cfg: &RunConfig, out_root: &Path) -> trt_rom::Result<()> {
    let problem = cfg.problem()?;
    let control = cfg.control();
    let dir = out_root.join("fom");
    ensure_dir(&dir)?;
    let started = Instant::now();
    let result = run_fom(&problem, &control)?;
    let elapsed = started.elapsed().as_secs_f64();
    let sweeps: usize = result.records.iter().map(|r| r.outer_iters).sum();
    let worst = result.records.iter().map(|r| r.balance_residual).fold(0.0f64, f64::max);
    write_run(&dir, &problem.mesh, &persist::history_rows_fom(&result), &Trajectory::from_fom(&result))?;
    persist::write_snapshots(&dir.join("snapshots.bin"), &problem, &result.snapshots)?;
    println!(
        "full-order: {} steps in {elapsed:.2} s ({sweeps} sweeps, worst balance residual {worst:.2e}) -> {}",
        result.records.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_make_basis(cfg: &RunConfig, out_root: &Path) -> trt_rom::Result<()> {
    let problem = cfg.problem()?;
    let snapshots = persist::read_snapshots(&out_root.join("fom").join("snapshots.bin"), &problem)?;
    let dir = out_root.join("basis");
    ensure_dir(&dir)?;
    let started = Instant::now();
    let bases = stage_bases(&problem, &snapshots)?;
    let elapsed = started.elapsed().as_secs_f64();
    for (s, basis) in bases.iter().enumerate() {
        persist::write_basis(&dir.join(persist::basis_file_name(s)), &problem, s, basis)?;
    }
    persist::write_singular_values(&dir.join("singular_values.csv"), &bases)?;
    persist::write_ranks_vs_epsilon(&dir.join("ranks_vs_epsilon.csv"), &bases, &EPSILON_SWEEP)?;
    let ranks: Vec<String> = bases.iter().map(|b| b.rank().to_string()).collect();
    println!(
        "bases: stage ranks [{}] in {elapsed:.2} s -> {}",
        ranks.join(", "),
        dir.display()
    );
    Ok(())
}

fn cmd_run_rom(cfg: &RunConfig, out_root: &Path, epsilon: f64) -> trt_rom::Result<()> {
    let problem = cfg.problem()?;
    let control = cfg.control();
    let basis_dir = out_root.join("basis");
    let mut bases = Vec::with_capacity(problem.time.n_stages());
    for s in 0..problem.time.n_stages() {
        bases.push(persist::read_basis(&basis_dir.join(persist::basis_file_name(s)), &problem, s)?);
    }
    let dir = out_root.join("rom");
    ensure_dir(&dir)?;
    let started = Instant::now();
    let result = run_rom(&problem, &bases, epsilon, &control)?;
    let elapsed = started.elapsed().as_secs_f64();
    write_run(&dir, &problem.mesh, &persist::history_rows_rom(&result), &Trajectory::from_rom(&result))?;
    persist::write_rom_details(&dir.join("rom_details.csv"), &result)?;
    persist::write_transitions(&dir.join("transitions.csv"), &result)?;
    let ranks: Vec<String> = (0..problem.time.n_stages())
        .map(|s| select_rank(bases[s].singular_values(), epsilon).to_string())
        .collect();
    println!(
        "reduced-order: epsilon {epsilon:e}, stage ranks [{}], {} steps in {elapsed:.2} s -> {}",
        ranks.join(", "),
        result.records.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_run_baseline(cfg: &RunConfig, out_root: &Path, model: BaselineKind) -> trt_rom::Result<()> {
    let problem = cfg.problem()?;
    let control = cfg.control();
    let dir = out_root.join(format!("baseline-{}", model.name()));
    ensure_dir(&dir)?;
    let started = Instant::now();
    let result = run_baseline(&problem, model, &control)?;
    let elapsed = started.elapsed().as_secs_f64();
    write_run(
        &dir,
        &problem.mesh,
        &persist::history_rows_baseline(&result),
        &Trajectory::from_baseline(&result),
    )?;
    println!(
        "baseline {}: {} steps in {elapsed:.2} s -> {}",
        model.name(),
        result.records.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_compare(reference: &Path, candidate: &Path, report_dir: &Path) -> trt_rom::Result<()> {
    let reference_run = Trajectory::from_run_dir(reference)?;
    let candidate_run = Trajectory::from_run_dir(candidate)?;
    let report = ErrorReport::between(&reference_run, &candidate_run)?;
    ensure_dir(report_dir)?;
    report.write_errors_csv(&report_dir.join("errors.csv"))?;
    report.write_aggregates_csv(&report_dir.join("aggregates.csv"))?;
    println!(
        "compare: temperature max {:.3e} integral {:.3e}; energy max {:.3e} integral {:.3e} -> {}",
        report.max_temperature_error(),
        report.integrated_temperature_error(),
        report.max_energy_error(),
        report.integrated_energy_error(),
        report_dir.display()
    );
    Ok(())
}
