//! Galerkin-reduced transport inside the unchanged nonlinear ladder.
//!
//! The reduced model replaces the transport sweep with a small dense solve
//! for basis coordinates: the backward-Euler transport operator is projected
//! onto a per-stage snapshot basis under the phase-space inner product W.
//! The streaming projection and boundary load are fixed per stage; the
//! absorption projection is reassembled from per-(group, cell) Gram blocks as
//! the opacity follows the temperature. The reconstructed intensity feeds the
//! same closure extraction and inner ladder the full-order model uses.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::fom::{inner_ladder, relative_change, IterationControl, Problem};
use crate::grid::{weighted_dot, weighted_norm, PhaseSpaceLayout, CORNERS};
use crate::loqd::LowOrderState;
use crate::moments::AngularMoments;
use crate::physics::MaterialFields;
use crate::pod::{select_rank, PodBasis};
use crate::transport::Transport;
use crate::{Error, Result, LIGHT_SPEED};

/// Projected transport operator for one stage at a fixed rank.
pub struct ReducedStage {
    rank: usize,
    n_dof: usize,
    n_groups: usize,
    n_cells: usize,
    /// Truncated modes, column-major n_dof x rank.
    modes: Vec<f64>,
    /// Streaming projection U^T W L U, rank x rank.
    streaming: DMatrix<f64>,
    /// Per-(group, cell) Gram blocks U^T W 1_{g,i} U in packed upper-triangle
    /// form, block-major; the opacity-weighted sum of these is the absorption
    /// projection. Their plain sum is the identity.
    gram: Vec<f64>,
    /// Per-(group, cell) isotropic load vectors U^T W 1_{g,i}, block-major;
    /// the emission-weighted sum is the reduced emission source.
    load: Vec<f64>,
    /// Projected boundary inflow source, fixed over the stage.
    bc_load: DVector<f64>,
}

fn tri_len(rank: usize) -> usize {
    rank * (rank + 1) / 2
}

impl ReducedStage {
    /// Project the operators onto the leading `rank` modes of `basis`.
    pub fn build(
        transport: &Transport,
        weights: &[f64],
        basis: &PodBasis,
        rank: usize,
        bc: &crate::transport::BoundarySpec,
    ) -> Result<Self> {
        let layout = *transport.layout();
        let n_dof = layout.len();
        if basis.n_dof() != n_dof {
            return Err(Error::Numerical(format!(
                "basis length {} does not match phase space {}",
                basis.n_dof(),
                n_dof
            )));
        }
        if rank == 0 || rank > basis.rank() {
            return Err(Error::Numerical(format!(
                "rank {rank} outside basis rank 1..={}",
                basis.rank()
            )));
        }
        let mut modes = Vec::with_capacity(rank * n_dof);
        for k in 0..rank {
            modes.extend_from_slice(basis.mode(k));
        }
        let mode = |k: usize| &modes[k * n_dof..(k + 1) * n_dof];

        let mut streaming = DMatrix::<f64>::zeros(rank, rank);
        for b in 0..rank {
            let image = transport.apply_streaming(mode(b));
            for a in 0..rank {
                streaming[(a, b)] = weighted_dot(weights, mode(a), &image);
            }
        }

        let n_groups = layout.n_groups;
        let n_cells = layout.n_cells;
        let n_dirs = layout.n_dirs;
        let block = tri_len(rank);
        let mut gram = vec![0.0; n_groups * n_cells * block];
        let mut load = vec![0.0; n_groups * n_cells * rank];
        let mut entries = Vec::with_capacity(n_dirs * CORNERS);
        for g in 0..n_groups {
            for i in 0..n_cells {
                entries.clear();
                for m in 0..n_dirs {
                    for corner in 0..CORNERS {
                        let e = layout.flat_index(g, m, i, corner);
                        entries.push((e, weights[e]));
                    }
                }
                let gb = (g * n_cells + i) * block;
                let lb = (g * n_cells + i) * rank;
                let mut p = 0;
                for a in 0..rank {
                    let ua = mode(a);
                    let mut s = 0.0;
                    for &(e, w) in &entries {
                        s += w * ua[e];
                    }
                    load[lb + a] = s;
                    for b in a..rank {
                        let ub = mode(b);
                        let mut s = 0.0;
                        for &(e, w) in &entries {
                            s += w * ua[e] * ub[e];
                        }
                        gram[gb + p] = s;
                        p += 1;
                    }
                }
            }
        }

        // Boundary inflow: the prescribed intensity enters the first upwind
        // corner equation scaled by |mu| / h, exactly as in the full source.
        let mesh = transport.mesh();
        let mut q_bc = vec![0.0; n_dof];
        for g in 0..n_groups {
            for (m, mu, _) in transport.quadrature().directions() {
                if mu > 0.0 {
                    let h = mesh.width(0) / 2.0;
                    q_bc[layout.flat_index(g, m, 0, 0)] = mu / h * bc.left(g);
                } else {
                    let h = mesh.width(n_cells - 1) / 2.0;
                    q_bc[layout.flat_index(g, m, n_cells - 1, 1)] = -mu / h * bc.right(g);
                }
            }
        }
        let bc_load =
            DVector::from_iterator(rank, (0..rank).map(|k| weighted_dot(weights, mode(k), &q_bc)));

        Ok(Self {
            rank,
            n_dof,
            n_groups,
            n_cells,
            modes,
            streaming,
            gram,
            load,
            bc_load,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k * self.n_dof..(k + 1) * self.n_dof]
    }

    /// Reduced backward-Euler matrix (1/(c dt)) I + U^T W (L + K(T)) U.
    pub fn system(&self, mat: &MaterialFields, dt: f64) -> DMatrix<f64> {
        let r = self.rank;
        let mut m = self.streaming.clone();
        let inv_cdt = 1.0 / (LIGHT_SPEED * dt);
        for a in 0..r {
            m[(a, a)] += inv_cdt;
        }
        let block = tri_len(r);
        for g in 0..self.n_groups {
            for i in 0..self.n_cells {
                let kappa = mat.kappa(g, i);
                let gb = (g * self.n_cells + i) * block;
                let mut p = 0;
                for a in 0..r {
                    for b in a..r {
                        let v = kappa * self.gram[gb + p];
                        m[(a, b)] += v;
                        if a != b {
                            m[(b, a)] += v;
                        }
                        p += 1;
                    }
                }
            }
        }
        m
    }

    /// Reduced source: projected emission plus boundary load plus the time
    /// term (1/(c dt)) lambda_prev.
    pub fn rhs(&self, mat: &MaterialFields, lambda_prev: &DVector<f64>, dt: f64) -> DVector<f64> {
        let r = self.rank;
        let mut q = self.bc_load.clone();
        let inv_cdt = 1.0 / (LIGHT_SPEED * dt);
        q.axpy(inv_cdt, lambda_prev, 1.0);
        for g in 0..self.n_groups {
            for i in 0..self.n_cells {
                let emission = mat.emission(g, i);
                if emission == 0.0 {
                    continue;
                }
                let lb = (g * self.n_cells + i) * r;
                for a in 0..r {
                    q[a] += emission * self.load[lb + a];
                }
            }
        }
        q
    }

    /// Expand reduced coordinates to a phase-space intensity.
    pub fn reconstruct(&self, lambda: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dof];
        for k in 0..self.rank {
            let c = lambda[k];
            if c == 0.0 {
                continue;
            }
            for (o, &u) in out.iter_mut().zip(self.mode(k)) {
                *o += c * u;
            }
        }
        out
    }

    /// W-orthogonal projection of a phase-space vector onto the stage basis.
    pub fn project(&self, weights: &[f64], v: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.rank,
            (0..self.rank).map(|k| weighted_dot(weights, self.mode(k), v)),
        )
    }
}

/// Everything recorded about one reduced time step.
#[derive(Debug, Clone)]
pub struct RomStepRecord {
    pub step: usize,
    pub time: f64,
    pub stage: usize,
    pub rank: usize,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub balance_residual: f64,
    pub negative_count: usize,
    pub condition_estimate: f64,
    pub wall_ms: f64,
    pub temperature: Vec<f64>,
    pub grey_energy: Vec<f64>,
}

/// Basis handoff bookkeeping: the W-relative residual of re-projecting the
/// running intensity when a stage (or the initial state) enters its basis.
#[derive(Debug, Clone)]
pub struct StageTransition {
    pub step: usize,
    pub stage: usize,
    pub rank: usize,
    pub projection_residual: f64,
}

/// Reduced-order run output.
#[derive(Debug)]
pub struct RomResult {
    pub records: Vec<RomStepRecord>,
    pub transitions: Vec<StageTransition>,
    pub initial_temperature: Vec<f64>,
    pub initial_grey_energy: Vec<f64>,
    pub final_state: LowOrderState,
}

/// March the reduced model over the problem's time grid with one basis per
/// stage, truncated by the singular-tail threshold `epsilon`.
pub fn run_rom(
    problem: &Problem,
    bases: &[PodBasis],
    epsilon: f64,
    control: &IterationControl,
) -> Result<RomResult> {
    if bases.len() != problem.time.n_stages() {
        return Err(Error::Numerical(format!(
            "{} bases for {} stages",
            bases.len(),
            problem.time.n_stages()
        )));
    }
    let tr = problem.transport();
    let lo = problem.low_order();
    let layout = PhaseSpaceLayout::new(
        problem.groups.n_groups(),
        problem.quad.n_dirs(),
        problem.mesh.n_cells(),
    );
    let weights = layout.weight_diagonal(&problem.mesh, &problem.quad);
    let nx = problem.mesh.n_cells();
    let dt = problem.time.dt();

    let mut temperature = vec![problem.t_initial; nx];
    let mut lo_state =
        LowOrderState::equilibrium(&problem.groups, problem.t_initial, problem.a_r, nx);
    let (initial_grey_energy, _) = lo_state.grey_totals();
    let initial_temperature = temperature.clone();

    let mut current: Option<ReducedStage> = None;
    let mut current_stage = usize::MAX;
    let mut lambda = DVector::<f64>::zeros(0);
    let mut records = Vec::with_capacity(problem.time.n_steps());
    let mut transitions = Vec::new();

    for step in 1..=problem.time.n_steps() {
        let started = Instant::now();
        let stage = problem.time.stage_of_step(step);
        if stage != current_stage {
            // Express the running intensity in the incoming basis. The first
            // stage picks up the initial condition.
            let carried = match &current {
                Some(old) => old.reconstruct(&lambda),
                None => problem.initial_intensity(),
            };
            let rank = select_rank(bases[stage].singular_values(), epsilon);
            let next = ReducedStage::build(&tr, &weights, &bases[stage], rank, &problem.bc)?;
            lambda = next.project(&weights, &carried);
            let replayed = next.reconstruct(&lambda);
            let diff: Vec<f64> = carried.iter().zip(&replayed).map(|(a, b)| a - b).collect();
            let norm = weighted_norm(&weights, &carried);
            let residual =
                if norm > 0.0 { weighted_norm(&weights, &diff) / norm } else { 0.0 };
            transitions.push(StageTransition {
                step,
                stage,
                rank,
                projection_residual: residual,
            });
            current = Some(next);
            current_stage = stage;
        }
        let reduced = current.as_ref().expect("stage operator built");

        let outcome = advance_rom_step(
            problem,
            &tr,
            &lo,
            reduced,
            control,
            dt,
            &lambda,
            &lo_state,
            &temperature,
        )?;
        lambda = outcome.lambda;
        lo_state = outcome.state;
        temperature = outcome.temperature;
        records.push(RomStepRecord {
            step,
            time: problem.time.time(step),
            stage,
            rank: reduced.rank(),
            outer_iters: outcome.outer_iters,
            inner_iters_total: outcome.inner_iters_total,
            balance_residual: outcome.balance_residual,
            negative_count: outcome.negative_count,
            condition_estimate: outcome.condition_estimate,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            temperature: temperature.clone(),
            grey_energy: outcome.grey_energy,
        });
    }
    Ok(RomResult {
        records,
        transitions,
        initial_temperature,
        initial_grey_energy,
        final_state: lo_state,
    })
}

struct RomStepOutcome {
    lambda: DVector<f64>,
    state: LowOrderState,
    temperature: Vec<f64>,
    grey_energy: Vec<f64>,
    outer_iters: usize,
    inner_iters_total: usize,
    balance_residual: f64,
    negative_count: usize,
    condition_estimate: f64,
}

/// One backward-Euler step of the reduced model: the outer loop solves the
/// projected transport equation instead of sweeping, reconstructs the
/// intensity for closures, and runs the shared inner ladder.
#[allow(clippy::too_many_arguments)]
fn advance_rom_step(
    problem: &Problem,
    tr: &Transport,
    lo: &crate::loqd::LowOrder,
    reduced: &ReducedStage,
    control: &IterationControl,
    dt: f64,
    lambda_prev: &DVector<f64>,
    lo_prev: &LowOrderState,
    t_prev: &[f64],
) -> Result<RomStepOutcome> {
    let i_prev = reduced.reconstruct(lambda_prev);
    let mut t_latest = t_prev.to_vec();
    let mut e_latest = {
        let (e, _) = lo_prev.grey_totals();
        e
    };
    let mut inner_total = 0;
    for k in 1..=control.max_outer {
        let mat =
            MaterialFields::evaluate(&problem.groups, &problem.opacity, problem.a_r, &t_latest);
        let system = reduced.system(&mat, dt);
        let rhs = reduced.rhs(&mat, lambda_prev, dt);
        let lu = system.lu();
        let condition_estimate = {
            let diag = lu.u().diagonal();
            let mut lo_d = f64::INFINITY;
            let mut hi_d: f64 = 0.0;
            for v in diag.iter() {
                let a = v.abs();
                lo_d = lo_d.min(a);
                hi_d = hi_d.max(a);
            }
            if lo_d > 0.0 { hi_d / lo_d } else { f64::INFINITY }
        };
        let lambda = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("reduced transport system is singular".into()))?;
        let intensity = reduced.reconstruct(&lambda);
        let mo = AngularMoments::from_intensity(tr, &intensity, &problem.bc);
        let outcome = inner_ladder(
            lo,
            &problem.groups,
            &problem.opacity,
            problem.eos,
            problem.a_r,
            dt,
            lo_prev,
            t_prev,
            &t_latest,
            mo.eddington_slice(),
            mo.closures_left(),
            mo.closures_right(),
            control,
        )?;
        inner_total += outcome.iters;
        let dt_rel = relative_change(&outcome.temperature, &t_latest);
        let de_rel = relative_change(&outcome.grey_energy, &e_latest);
        t_latest = outcome.temperature;
        e_latest = outcome.grey_energy;
        if dt_rel < control.tol_temperature && de_rel < control.tol_energy {
            let balance = tr.energy_balance_residual(&mat, dt, &intensity, &i_prev, &problem.bc);
            return Ok(RomStepOutcome {
                negative_count: tr.count_negative(&intensity),
                lambda,
                state: outcome.state,
                temperature: t_latest,
                grey_energy: e_latest,
                outer_iters: k,
                inner_iters_total: inner_total,
                balance_residual: balance,
                condition_estimate,
            });
        }
    }
    Err(Error::Numerical(format!(
        "reduced time step did not converge in {} outer iterations",
        control.max_outer
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{run_fom, tiny_problem};
    use crate::pod::{build_basis, stage_bases};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random W-orthonormal basis on the tiny problem's phase space.
    fn random_basis(problem: &Problem, n_snaps: usize, seed: u64) -> (PodBasis, Vec<f64>) {
        let layout = PhaseSpaceLayout::new(
            problem.groups.n_groups(),
            problem.quad.n_dirs(),
            problem.mesh.n_cells(),
        );
        let weights = layout.weight_diagonal(&problem.mesh, &problem.quad);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snaps: Vec<Vec<f64>> = (0..n_snaps)
            .map(|_| (0..layout.len()).map(|_| rng.gen_range(0.1..2.0)).collect())
            .collect();
        let basis = build_basis(&snaps, &weights, &vec![1.0; n_snaps]).unwrap();
        (basis, weights)
    }

    #[test]
    fn gram_blocks_sum_to_the_identity() {
        let p = tiny_problem();
        let tr = p.transport();
        let (basis, weights) = random_basis(&p, 6, 3);
        let stage = ReducedStage::build(&tr, &weights, &basis, basis.rank(), &p.bc).unwrap();
        let r = stage.rank();
        let block = tri_len(r);
        let blocks = stage.gram.len() / block;
        let mut total = vec![0.0; block];
        for q in 0..blocks {
            for (t, v) in total.iter_mut().zip(&stage.gram[q * block..(q + 1) * block]) {
                *t += v;
            }
        }
        let mut p_idx = 0;
        for a in 0..r {
            for b in a..r {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (total[p_idx] - expect).abs() < 1e-12,
                    "sum of Gram blocks at ({a},{b}) = {}",
                    total[p_idx]
                );
                p_idx += 1;
            }
        }
    }

    #[test]
    fn reduced_operator_matches_the_projected_operator() {
        let p = tiny_problem();
        let tr = p.transport();
        let (basis, weights) = random_basis(&p, 5, 11);
        let stage = ReducedStage::build(&tr, &weights, &basis, basis.rank(), &p.bc).unwrap();
        let r = stage.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let t_field: Vec<f64> = (0..p.mesh.n_cells()).map(|_| rng.gen_range(0.05..1.0)).collect();
        let mat = MaterialFields::evaluate(&p.groups, &p.opacity, p.a_r, &t_field);
        let dt = 0.02;
        let lambda = DVector::from_iterator(r, (0..r).map(|_| rng.gen_range(-1.0..1.0)));

        // Dense route: expand, apply the full operators, project back.
        let full = stage.reconstruct(&lambda);
        let streamed = tr.apply_streaming(&full);
        let removed = tr.apply_removal(&mat, &full);
        let scaled: Vec<f64> = full.iter().map(|v| v / (LIGHT_SPEED * dt)).collect();
        let total: Vec<f64> = streamed
            .iter()
            .zip(&removed)
            .zip(&scaled)
            .map(|((a, b), c)| a + b + c)
            .collect();
        let projected = stage.project(&weights, &total);

        let reduced = stage.system(&mat, dt) * &lambda;
        for a in 0..r {
            assert!(
                (projected[a] - reduced[a]).abs() <= 1e-10 * reduced[a].abs().max(1.0),
                "row {a}: dense {} vs reduced {}",
                projected[a],
                reduced[a]
            );
        }
    }

    #[test]
    fn reduced_source_matches_the_projected_source() {
        let p = tiny_problem();
        let tr = p.transport();
        let (basis, weights) = random_basis(&p, 4, 41);
        let stage = ReducedStage::build(&tr, &weights, &basis, basis.rank(), &p.bc).unwrap();
        let t_field = vec![0.4; p.mesh.n_cells()];
        let mat = MaterialFields::evaluate(&p.groups, &p.opacity, p.a_r, &t_field);
        let dt = 0.02;

        let full = tr.assemble_source(&mat, &p.bc);
        let expect = stage.project(&weights, &full);
        let got = stage.rhs(&mat, &DVector::zeros(stage.rank()), dt);
        for a in 0..stage.rank() {
            assert!(
                (expect[a] - got[a]).abs() <= 1e-12 * expect[a].abs().max(1e-12),
                "row {a}: projected {} vs assembled {}",
                expect[a],
                got[a]
            );
        }
    }

    #[test]
    fn projection_then_reconstruction_is_idempotent_on_the_span() {
        let p = tiny_problem();
        let tr = p.transport();
        let (basis, weights) = random_basis(&p, 5, 57);
        let stage = ReducedStage::build(&tr, &weights, &basis, basis.rank(), &p.bc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lambda =
            DVector::from_iterator(stage.rank(), (0..stage.rank()).map(|_| rng.gen_range(-1.0..1.0)));
        let v = stage.reconstruct(&lambda);
        let back = stage.project(&weights, &v);
        for a in 0..stage.rank() {
            assert!((back[a] - lambda[a]).abs() < 1e-11, "coordinate {a} drifted");
        }
    }

    #[test]
    fn full_rank_reduction_replays_the_full_order_run() {
        // With every mode kept, each converged full-order step lies in the
        // span of its stage basis, so the reduced fixed point coincides with
        // the full-order one up to the projection of the initial state.
        let p = tiny_problem();
        let control = IterationControl::default();
        let fom = run_fom(&p, &control).unwrap();
        let bases = stage_bases(&p, &fom.snapshots).unwrap();
        let rom = run_rom(&p, &bases, 0.0, &control).unwrap();

        assert_eq!(rom.records.len(), fom.records.len());
        assert_eq!(rom.transitions.len(), 2);
        assert_eq!(rom.transitions[0].rank, 2);
        assert_eq!(rom.transitions[1].rank, 2);
        for (fr, rr) in fom.records.iter().zip(&rom.records) {
            for (i, (&tf, &tr_)) in fr.temperature.iter().zip(&rr.temperature).enumerate() {
                let rel = (tf - tr_).abs() / tf.abs();
                assert!(
                    rel < 2e-4,
                    "step {} cell {i}: full {tf} vs reduced {tr_} ({rel:.2e})",
                    fr.step
                );
            }
        }
        // The final step must agree much more tightly: the initial-state
        // projection transient has been absorbed.
        let last_f = fom.records.last().unwrap();
        let last_r = rom.records.last().unwrap();
        for (i, (&tf, &tr_)) in last_f.temperature.iter().zip(&last_r.temperature).enumerate() {
            let rel = (tf - tr_).abs() / tf.abs();
            assert!(rel < 1e-5, "final step cell {i}: {tf} vs {tr_} ({rel:.2e})");
        }
    }

    #[test]
    fn rank_one_reduction_still_marches_stably() {
        let p = tiny_problem();
        let control = IterationControl::default();
        let fom = run_fom(&p, &control).unwrap();
        let bases = stage_bases(&p, &fom.snapshots).unwrap();
        // A huge threshold forces rank 1 in every stage.
        let rom = run_rom(&p, &bases, 0.9, &control).unwrap();
        for rec in &rom.records {
            assert_eq!(rec.rank, 1);
            assert!(rec.temperature.iter().all(|t| t.is_finite() && *t > 0.0));
            assert!(rec.condition_estimate.is_finite());
        }
    }

    #[test]
    fn rejects_mismatched_bases() {
        let p = tiny_problem();
        let (basis, _) = random_basis(&p, 3, 1);
        // One basis for a two-stage grid.
        assert!(run_rom(&p, &[basis], 1e-6, &IterationControl::default()).is_err());
        let tr = p.transport();
        let (short, weights) = random_basis(&p, 3, 2);
        assert!(ReducedStage::build(&tr, &weights, &short, 5, &p.bc).is_err());
        assert!(ReducedStage::build(&tr, &weights, &short, 0, &p.bc).is_err());
    }
}
