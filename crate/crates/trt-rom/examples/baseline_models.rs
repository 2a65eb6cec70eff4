//! The two classical closures against the transport answer on one slab. P1
//! pins the Eddington factor at one third; flux-limited diffusion caps the
//! Fick flux at the streaming bound. Both misplace the heat front by whole
//! cells, which is the gap the projected model closes.

use trt_rom::baselines::{run_baseline, BaselineKind};
use trt_rom::compare::{ErrorReport, Trajectory};
use trt_rom::fom::{run_fom, Problem};
use trt_rom::RunConfig;

fn front(problem: &Problem, temperature: &[f64], threshold: f64) -> f64 {
    temperature
        .iter()
        .rposition(|&t| t > threshold)
        .map(|i| problem.mesh.center(i))
        .unwrap_or(0.0)
}

fn main() {
    let mut cfg = RunConfig::default();
    cfg.slab_length = 2.4;
    cfg.n_cells = 24;
    cfg.n_angles_per_half = 2;
    cfg.t_end = 1.0;
    cfg.stage_splits = vec![0.2, 0.5];
    let problem = cfg.problem().expect("configuration is consistent");
    let control = cfg.control();

    let fom = run_fom(&problem, &control).expect("transport run");
    let p1 = run_baseline(&problem, BaselineKind::P1, &control).expect("p1 run");
    let fld = run_baseline(&problem, BaselineKind::FluxLimited, &control).expect("fld run");

    // Track the half-drive front, the rightmost cell past 0.5 keV.
    let half = 0.5 * cfg.drive_temperature;
    println!("time(ns)  front(cm): transport  p1     fld    T[0](keV): transport  p1      fld");
    for (k, rec) in fom.records.iter().enumerate().step_by(10) {
        let (tp, tf) = (&p1.records[k].temperature, &fld.records[k].temperature);
        println!(
            "{:>8.2}  {:>20.3}  {:>5.3}  {:>5.3}  {:>21.4}  {:>6.4}  {:>6.4}",
            rec.time,
            front(&problem, &rec.temperature, half),
            front(&problem, tp, half),
            front(&problem, tf, half),
            rec.temperature[0],
            tp[0],
            tf[0]
        );
    }

    let reference = Trajectory::from_fom(&fom);
    println!();
    for (name, traj) in
        [("p1 ", Trajectory::from_baseline(&p1)), ("fld", Trajectory::from_baseline(&fld))]
    {
        let report = ErrorReport::between(&reference, &traj).expect("grids match");
        println!(
            "{name}: max T error {:.3e}, max E error {:.3e}, integrated T error {:.3e}",
            report.max_temperature_error(),
            report.max_energy_error(),
            report.integrated_temperature_error()
        );
    }
}
