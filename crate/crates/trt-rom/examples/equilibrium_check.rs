//! Physics layer in isolation: the group opacity spectrum, the Planck
//! emission split across groups, and a slab pinned at equilibrium by
//! black-body walls that match the material temperature. Fifty time steps
//! should leave the temperature at roundoff distance from where it started.

use trt_rom::fom::{run_fom, IterationControl, Problem};
use trt_rom::grid::TimeGrid;
use trt_rom::physics::{equilibrium_intensities, planck_group_intensities, planck_integral};
use trt_rom::transport::BoundarySpec;
use trt_rom::{LIGHT_SPEED, RADIATION_CONSTANT};

fn main() {
    let mut problem = Problem::benchmark().expect("benchmark setup is valid");
    let t_eq = 0.5;

    let b = planck_group_intensities(&problem.groups, t_eq, problem.a_r);
    let total: f64 = b.iter().sum();
    println!("spectrum at T = {t_eq} keV");
    println!("group  bounds (keV)          kappa (1/cm)  Planck fraction");
    for g in 0..problem.groups.n_groups() {
        let (lo, hi) = problem.groups.bounds(g);
        let kappa = problem.opacity.group(&problem.groups, g, t_eq);
        println!(
            "{:>5}  [{:>6.3}, {:>8.3})  {:>12.4e}  {:>15.10}",
            g,
            lo,
            hi,
            kappa,
            b[g] / total
        );
    }
    // The group sum telescopes: adding the Planck fraction below the first
    // group edge recovers the grey level exactly.
    let grey = LIGHT_SPEED * RADIATION_CONSTANT * t_eq.powi(4) / (4.0 * std::f64::consts::PI);
    let lo = problem.groups.bounds(0).0;
    let below = grey * planck_integral(lo / t_eq) / planck_integral(50.0);
    println!("sum of group intensities  {total:.15e}");
    println!("plus below-range sliver   {:.15e}", total + below);
    println!("grey level c a T^4 / 4pi  {grey:.15e}");
    assert!(((total + below) - grey).abs() < 1e-12 * grey);

    // Pin both walls at the material temperature and march. Emission and
    // absorption cancel cell by cell, so nothing should move.
    let eq = equilibrium_intensities(&problem.groups, t_eq, problem.a_r);
    problem.bc = BoundarySpec::new(eq.clone(), eq);
    problem.t_initial = t_eq;
    problem.time = TimeGrid::new(0.02, 1.0, &[0.5]).expect("time grid");

    let result = run_fom(&problem, &IterationControl::default()).expect("equilibrium run");
    let mut drift = 0.0f64;
    for rec in &result.records {
        for &t in &rec.temperature {
            drift = drift.max((t - t_eq).abs() / t_eq);
        }
    }
    let worst_balance =
        result.records.iter().map(|r| r.balance_residual).fold(0.0f64, f64::max);
    println!(
        "\n{} steps: max |T - T_eq| / T_eq = {drift:.3e}, worst balance residual {worst_balance:.3e}",
        result.records.len()
    );
    assert!(drift < 1e-10, "the equilibrium state is a fixed point of the scheme");
}
