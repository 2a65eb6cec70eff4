//! The whole pipeline at benchmark scale: full-order transport on the 6 cm
//! slab, stage bases from its snapshots, the projected model at a practical
//! cutoff, and both classical closures on the same grid. Prints the error
//! tables the smaller examples only sketch. Expect a minute or two of wall
//! time; pass an output directory to also dump every run as CSV.

use std::path::Path;

use trt_rom::baselines::{run_baseline, BaselineKind};
use trt_rom::compare::{ErrorReport, Trajectory};
use trt_rom::fom::{run_fom, IterationControl, Problem};
use trt_rom::pod::{select_rank, stage_bases};
use trt_rom::rom::run_rom;

fn main() {
    let problem = Problem::benchmark().expect("benchmark setup is valid");
    let control = IterationControl::default();
    let out = std::env::args().nth(1);

    let started = std::time::Instant::now();
    let fom = run_fom(&problem, &control).expect("full-order run");
    println!(
        "full order: {} steps, {} unknowns, {:.1} s",
        fom.records.len(),
        problem.transport().layout().len(),
        started.elapsed().as_secs_f64()
    );

    let bases = stage_bases(&problem, &fom.snapshots).expect("stage bases");
    println!("\nstage  snapshots  numerical rank  rank at eps 1e-5");
    for (s, basis) in bases.iter().enumerate() {
        let (first, last) = problem.time.stage_steps(s);
        println!(
            "{:>5}  {:>9}  {:>14}  {:>16}",
            s,
            last - first + 1,
            basis.rank(),
            select_rank(basis.singular_values(), 1e-5)
        );
    }

    let epsilon = 1e-5;
    let rom = run_rom(&problem, &bases, epsilon, &control).expect("reduced run");
    let p1 = run_baseline(&problem, BaselineKind::P1, &control).expect("p1 run");
    let fld = run_baseline(&problem, BaselineKind::FluxLimited, &control).expect("fld run");

    let reference = Trajectory::from_fom(&fom);
    let report_of = |candidate: &Trajectory| {
        ErrorReport::between(&reference, candidate).expect("grids match")
    };
    let reports = [
        ("projected model", report_of(&Trajectory::from_rom(&rom))),
        ("p1 closure", report_of(&Trajectory::from_baseline(&p1))),
        ("flux-limited", report_of(&Trajectory::from_baseline(&fld))),
    ];

    println!("\nrelative L2 temperature error against transport:");
    println!("model            t=0.6 ns    t=1.0 ns    t=3.0 ns    max         integrated");
    for (name, report) in &reports {
        println!(
            "{name:<15}  {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}",
            report.at_time(0.6).0,
            report.at_time(1.0).0,
            report.at_time(3.0).0,
            report.max_temperature_error(),
            report.integrated_temperature_error()
        );
    }

    let rom_max = reports[0].1.max_temperature_error();
    let p1_max = reports[1].1.max_temperature_error();
    println!(
        "\nthe projected model at eps = {epsilon:.0e} sits {:.0}x below the p1 closure",
        p1_max / rom_max
    );

    if let Some(dir) = out {
        dump(Path::new(&dir), &problem, &fom, &bases, &rom, &p1, &fld).expect("write output");
        println!("runs written under {dir}");
    }
}

/// The same directory layout the command-line driver produces.
fn dump(
    root: &Path,
    problem: &Problem,
    fom: &trt_rom::fom::FomResult,
    bases: &[trt_rom::pod::PodBasis],
    rom: &trt_rom::rom::RomResult,
    p1: &trt_rom::baselines::BaselineResult,
    fld: &trt_rom::baselines::BaselineResult,
) -> trt_rom::Result<()> {
    use trt_rom::persist;

    let times: Vec<f64> =
        (0..=problem.time.n_steps()).map(|k| problem.time.time(k)).collect();
    let with_initial = |initial: &[f64], rows: Vec<&[f64]>| -> Vec<Vec<f64>> {
        std::iter::once(initial.to_vec()).chain(rows.into_iter().map(<[f64]>::to_vec)).collect()
    };

    let fom_dir = root.join("fom");
    std::fs::create_dir_all(&fom_dir)?;
    persist::write_history(&fom_dir.join("history.csv"), &persist::history_rows_fom(fom))?;
    persist::write_series(
        &fom_dir.join("temperature.csv"),
        &problem.mesh,
        &times,
        &with_initial(
            &fom.initial_temperature,
            fom.records.iter().map(|r| r.temperature.as_slice()).collect(),
        ),
    )?;
    persist::write_snapshots(&fom_dir.join("snapshots.bin"), problem, &fom.snapshots)?;

    let basis_dir = root.join("basis");
    std::fs::create_dir_all(&basis_dir)?;
    for (s, basis) in bases.iter().enumerate() {
        persist::write_basis(&basis_dir.join(persist::basis_file_name(s)), problem, s, basis)?;
    }
    persist::write_singular_values(&basis_dir.join("singular_values.csv"), bases)?;

    let rom_dir = root.join("rom");
    std::fs::create_dir_all(&rom_dir)?;
    persist::write_history(&rom_dir.join("history.csv"), &persist::history_rows_rom(rom))?;
    persist::write_rom_details(&rom_dir.join("rom_details.csv"), rom)?;
    persist::write_transitions(&rom_dir.join("transitions.csv"), rom)?;

    for (result, sub) in [(p1, "baseline-p1"), (fld, "baseline-fld")] {
        let dir = root.join(sub);
        std::fs::create_dir_all(&dir)?;
        persist::write_history(&dir.join("history.csv"), &persist::history_rows_baseline(result))?;
    }
    Ok(())
}
