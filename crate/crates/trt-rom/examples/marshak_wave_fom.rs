//! Full-order run of the benchmark slab: a 1 keV black body drives a Marshak
//! wave into a cold slab. Prints the temperature front as it advances and a
//! compact iteration summary per printed step.

use trt_rom::fom::{run_fom, IterationControl, Problem};

fn main() {
    let mut problem = Problem::benchmark().expect("benchmark setup is valid");
    // Keep the example quick: march to 1 ns instead of the full 6 ns.
    problem.time = trt_rom::grid::TimeGrid::new(0.02, 1.0, &[0.3]).expect("time grid");

    let started = std::time::Instant::now();
    let result = run_fom(&problem, &IterationControl::default()).expect("full-order run");
    let elapsed = started.elapsed().as_secs_f64();

    println!("step  time(ns)  outer  inner  balance    T[0]     T[mid]   front(cm)");
    for rec in result.records.iter().step_by(5) {
        let nx = rec.temperature.len();
        // Front position: rightmost cell heated past 10x the initial state.
        let front = rec
            .temperature
            .iter()
            .rposition(|&t| t > 10.0 * problem.t_initial)
            .map(|i| problem.mesh.center(i))
            .unwrap_or(0.0);
        println!(
            "{:>4}  {:>8.3}  {:>5}  {:>5}  {:.2e}  {:.5}  {:.5}  {:.3}",
            rec.step,
            rec.time,
            rec.outer_iters,
            rec.inner_iters_total,
            rec.balance_residual,
            rec.temperature[0],
            rec.temperature[nx / 2],
            front
        );
    }
    let total_outer: usize = result.records.iter().map(|r| r.outer_iters).sum();
    let total_inner: usize = result.records.iter().map(|r| r.inner_iters_total).sum();
    println!(
        "\n{} steps in {elapsed:.2} s ({total_outer} sweeps, {total_inner} ladder cycles)",
        result.records.len()
    );
}
