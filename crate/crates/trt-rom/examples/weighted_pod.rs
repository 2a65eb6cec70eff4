//! Snapshot compression study: march a reduced slab, split the history into
//! time stages, and decompose each stage block under the weighted inner
//! product. Prints the singular value decay per stage, the rank every cutoff
//! selects, and checks the two identities the bases are built around:
//! weighted orthonormality of the modes and the tail formula that equates
//! the reconstruction error with the discarded singular values.

use trt_rom::fom::run_fom;
use trt_rom::grid::{weighted_dot, weighted_norm, PhaseSpaceLayout};
use trt_rom::pod::{select_rank, PodBasis};
use trt_rom::RunConfig;

fn main() {
    let mut cfg = RunConfig::default();
    cfg.slab_length = 2.4;
    cfg.n_cells = 24;
    cfg.n_angles_per_half = 2;
    cfg.t_end = 1.0;
    cfg.stage_splits = vec![0.2, 0.5];
    let problem = cfg.problem().expect("configuration is consistent");

    println!("collecting {} snapshots...", problem.time.n_steps());
    let fom = run_fom(&problem, &cfg.control()).expect("full-order run");
    let bases = trt_rom::pod::stage_bases(&problem, &fom.snapshots).expect("stage bases");

    let sweep = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
    println!("\nstage  cols  kept  sigma_1     sigma_kept  ranks at eps = 1e-2 .. 1e-10");
    for (s, basis) in bases.iter().enumerate() {
        let (first, last) = problem.time.stage_steps(s);
        let sigma = basis.singular_values();
        let ranks: Vec<usize> = sweep.iter().map(|&e| select_rank(sigma, e)).collect();
        println!(
            "{:>5}  {:>4}  {:>4}  {:>10.4e}  {:>10.4e}  {:?}",
            s,
            last - first + 1,
            basis.rank(),
            sigma[0],
            sigma[basis.rank() - 1],
            ranks
        );
    }

    println!("\nleading singular values, normalized to sigma_1:");
    for (s, basis) in bases.iter().enumerate() {
        let sigma = basis.singular_values();
        let head: Vec<String> =
            sigma.iter().take(8).map(|&v| format!("{:.2e}", v / sigma[0])).collect();
        println!("stage {s}: {}", head.join("  "));
    }

    let layout = PhaseSpaceLayout::new(
        problem.groups.n_groups(),
        problem.quad.n_dirs(),
        problem.mesh.n_cells(),
    );
    let weights = layout.weight_diagonal(&problem.mesh, &problem.quad);

    // Identity 1: the modes are orthonormal under W, not under the plain
    // Euclidean product.
    let mut worst_gram = 0.0f64;
    for basis in &bases {
        for a in 0..basis.rank() {
            for b in a..basis.rank() {
                let expect = if a == b { 1.0 } else { 0.0 };
                let got = weighted_dot(&weights, basis.mode(a), basis.mode(b));
                worst_gram = worst_gram.max((got - expect).abs());
            }
        }
    }
    println!("\nmax |U^T W U - I| over all stages: {worst_gram:.3e}");

    // Identity 2: truncating to rank r leaves exactly the discarded tail,
    // sum_n dt ||s_n - P_r s_n||_W^2 = sum_(k >= r) sigma_k^2.
    println!("truncation tail identity at eps = 1e-4:");
    for (s, basis) in bases.iter().enumerate() {
        let r = select_rank(basis.singular_values(), 1e-4);
        let (first, last) = problem.time.stage_steps(s);
        let residual: f64 = (first..=last)
            .map(|step| {
                let snap = &fom.snapshots[step - 1];
                let replay = basis.reconstruct(&basis.project(&weights, snap, r));
                let diff: Vec<f64> =
                    snap.iter().zip(&replay).map(|(a, b)| a - b).collect();
                problem.time.dt() * weighted_norm(&weights, &diff).powi(2)
            })
            .sum();
        let tail: f64 =
            basis.singular_values()[r..].iter().map(|v| v * v).sum();
        println!("stage {s}: rank {r:>2}, residual {residual:.6e}, tail {tail:.6e}");
        check_close(residual, tail, basis);
    }
}

fn check_close(residual: f64, tail: f64, basis: &PodBasis) {
    let scale: f64 = basis.singular_values().iter().map(|v| v * v).sum();
    assert!(
        (residual - tail).abs() <= 1e-10 * scale,
        "tail identity violated: {residual} vs {tail}"
    );
}
