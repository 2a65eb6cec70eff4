//! Full-order time stepping: transport sweeps closed by the low-order ladder.
//!
//! Each time step runs an outer iteration that re-evaluates opacities at the
//! latest temperature, sweeps the transport equation, extracts closures, and
//! then cycles the inner ladder (multigroup moments, grey collapse, grey
//! system coupled to the material balance) until the temperature and total
//! radiation energy stop moving. The converged intensities are kept as
//! snapshots for basis building.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::grid::{AngularQuadrature, SpatialMesh, TimeGrid};
use crate::loqd::{LowOrder, LowOrderState};
use crate::moments::{AngularMoments, BoundaryClosure, GreyData};
use crate::physics::{Eos, GroupStructure, MaterialFields, OpacityModel};
use crate::transport::{BoundarySpec, Transport};
use crate::{Error, Result};

/// Complete description of one slab problem: geometry, discretization,
/// material model, boundary drive, and the staged time grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: SpatialMesh,
    pub quad: AngularQuadrature,
    pub groups: GroupStructure,
    pub opacity: OpacityModel,
    pub eos: Eos,
    pub a_r: f64,
    pub bc: BoundarySpec,
    pub t_initial: f64,
    pub time: TimeGrid,
}

impl Problem {
    /// The radiative shock-free benchmark this crate is organized around: a
    /// 6 cm slab, 60 cells, 8 directions, 17 groups spanning 0.1 keV to 20 keV
    /// plus an open tail, driven from the left by a 1 keV black body against
    /// a cold (1 eV) slab, stepped at 0.02 ns to 6 ns with snapshot stages
    /// split at 0.3 ns and 1.2 ns.
    pub fn benchmark() -> Result<Self> {
        let groups = GroupStructure::default_17();
        let a_r = crate::RADIATION_CONSTANT;
        let drive = 1.0;
        Ok(Self {
            mesh: SpatialMesh::uniform(6.0, 60)?,
            quad: AngularQuadrature::double_gauss_legendre(4)?,
            bc: BoundarySpec::blackbody_vacuum(&groups, drive, a_r),
            groups,
            opacity: OpacityModel::PhotonEnergyCubed { coefficient: 27.0 },
            eos: Eos::linear(0.5917 * a_r * drive.powi(3))?,
            a_r,
            t_initial: 1e-3,
            time: TimeGrid::new(0.02, 6.0, &[0.3, 1.2])?,
        })
    }

    pub fn transport(&self) -> Transport {
        Transport::new(self.mesh.clone(), self.quad.clone(), self.groups.n_groups())
    }

    pub fn low_order(&self) -> LowOrder {
        LowOrder::new(self.mesh.clone())
    }

    /// Equilibrium intensity field at the initial temperature.
    pub fn initial_intensity(&self) -> Vec<f64> {
        let eq =
            crate::physics::equilibrium_intensities(&self.groups, self.t_initial, self.a_r);
        let tr = self.transport();
        let layout = *tr.layout();
        let mut field = vec![0.0; layout.len()];
        for e in 0..layout.len() {
            let (g, ..) = layout.unflatten(e);
            field[e] = eq[g];
        }
        field
    }
}

/// Convergence knobs of the nested iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationControl {
    pub tol_temperature: f64,
    pub tol_energy: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for IterationControl {
    fn default() -> Self {
        Self { tol_temperature: 1e-12, tol_energy: 1e-12, max_outer: 200, max_inner: 1000 }
    }
}

/// Everything recorded about one converged time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub balance_residual: f64,
    pub negative_count: usize,
    pub wall_ms: f64,
    pub temperature: Vec<f64>,
    pub grey_energy: Vec<f64>,
}

/// Full-order run output: per-step records plus the intensity snapshots the
/// basis construction consumes (one per step, initial state excluded).
#[derive(Debug)]
pub struct FomResult {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Vec<f64>>,
    pub initial_temperature: Vec<f64>,
    pub initial_grey_energy: Vec<f64>,
    pub final_state: LowOrderState,
}

/// Anderson mixing for the lagged-coefficient temperature cycle.
///
/// The plain cycle stalls two ways at steep wave fronts: a slowly decaying
/// smooth mode, and an opacity flip-flop whose fixed point is locally
/// repelling. Damped mixing stabilises the flip-flop while the least-squares
/// combination of recent residual differences extrapolates the slow modes.
pub(crate) struct AndersonAccelerator {
    depth: usize,
    beta: f64,
    prev_input: Option<Vec<f64>>,
    prev_residual: Option<Vec<f64>>,
    input_steps: VecDeque<Vec<f64>>,
    residual_steps: VecDeque<Vec<f64>>,
}

impl AndersonAccelerator {
    pub(crate) fn new() -> Self {
        Self {
            depth: 3,
            beta: 0.5,
            prev_input: None,
            prev_residual: None,
            input_steps: VecDeque::new(),
            residual_steps: VecDeque::new(),
        }
    }

    /// Next input for the cycle, given the current input and its raw output.
    pub(crate) fn advance(&mut self, input: &[f64], output: &[f64]) -> Vec<f64> {
        let residual: Vec<f64> = output.iter().zip(input).map(|(o, i)| o - i).collect();
        if let (Some(px), Some(pr)) = (&self.prev_input, &self.prev_residual) {
            self.input_steps
                .push_back(input.iter().zip(px).map(|(a, b)| a - b).collect());
            self.residual_steps
                .push_back(residual.iter().zip(pr).map(|(a, b)| a - b).collect());
            if self.input_steps.len() > self.depth {
                self.input_steps.pop_front();
                self.residual_steps.pop_front();
            }
        }
        self.prev_input = Some(input.to_vec());
        self.prev_residual = Some(residual.clone());

        let mut next: Vec<f64> = input
            .iter()
            .zip(residual.iter())
            .map(|(&x, &r)| x + self.beta * r)
            .collect();
        let k = self.residual_steps.len();
        if k == 0 {
            return next;
        }
        // Least-squares weights of the stored residual differences against the
        // current residual, with a small ridge so collinear history is inert
        // instead of explosive.
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            for j in i..k {
                let dot: f64 = self.residual_steps[i]
                    .iter()
                    .zip(self.residual_steps[j].iter())
                    .map(|(a, b)| a * b)
                    .sum();
                gram[(i, j)] = dot;
                gram[(j, i)] = dot;
            }
            rhs[i] = self.residual_steps[i]
                .iter()
                .zip(residual.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        let ridge = 1e-10 * gram.diagonal().max().max(f64::MIN_POSITIVE);
        for i in 0..k {
            gram[(i, i)] += ridge;
        }
        let Some(chol) = gram.cholesky() else {
            self.input_steps.clear();
            self.residual_steps.clear();
            return next;
        };
        let gamma = chol.solve(&rhs);
        for (j, g) in gamma.iter().enumerate() {
            for ((n, &dx), &dr) in next
                .iter_mut()
                .zip(self.input_steps[j].iter())
                .zip(self.residual_steps[j].iter())
            {
                *n -= g * (dx + self.beta * dr);
            }
        }
        // The extrapolation must not leave the physical range; fall back to
        // the damped step cell by cell.
        for ((n, &x), &r) in next.iter_mut().zip(input).zip(residual.iter()) {
            if !(*n > 0.0) {
                *n = x + self.beta * r;
            }
        }
        next
    }
}

/// Outcome of one pass of the inner ladder.
pub(crate) struct LadderOutcome {
    pub state: LowOrderState,
    pub grey_energy: Vec<f64>,
    pub temperature: Vec<f64>,
    pub iters: usize,
}

/// The inner ladder: cycle multigroup moments, grey collapse, and the grey
/// system coupled to the material balance until temperature and total
/// radiation energy settle. Closures and Eddington factors stay fixed; the
/// opacities and emission follow the moving temperature.
#[allow(clippy::too_many_arguments)]
pub(crate) fn inner_ladder(
    low_order: &LowOrder,
    groups: &GroupStructure,
    opacity: &OpacityModel,
    eos: Eos,
    a_r: f64,
    dt: f64,
    lo_prev: &LowOrderState,
    t_prev: &[f64],
    t_start: &[f64],
    eddington: &[f64],
    closures_left: &[BoundaryClosure],
    closures_right: &[BoundaryClosure],
    control: &IterationControl,
) -> Result<LadderOutcome> {
    let (e_prev_grey, f_prev_grey) = lo_prev.grey_totals();
    let mut t_latest = t_start.to_vec();
    let mut e_latest = e_prev_grey.clone();
    let mut accel = AndersonAccelerator::new();
    for s in 1..=control.max_inner {
        let mat = MaterialFields::evaluate(groups, opacity, a_r, &t_latest);
        let state =
            low_order.solve_multigroup(&mat, dt, lo_prev, eddington, closures_left, closures_right);
        let grey = GreyData::collapse(
            &mat,
            a_r,
            &t_latest,
            state.energy_slice(),
            state.flux_slice(),
            eddington,
            closures_left,
            closures_right,
        );
        let sol = low_order.solve_grey_coupled(
            &grey,
            eos,
            a_r,
            dt,
            &e_prev_grey,
            &f_prev_grey,
            t_prev,
            &t_latest,
        )?;
        let dt_rel = relative_change(&sol.temperature, &t_latest);
        let de_rel = relative_change(&sol.energy, &e_latest);
        if dt_rel < control.tol_temperature && de_rel < control.tol_energy {
            return Ok(LadderOutcome {
                state,
                grey_energy: sol.energy,
                temperature: sol.temperature,
                iters: s,
            });
        }
        t_latest = accel.advance(&t_latest, &sol.temperature);
        e_latest = sol.energy;
    }
    Err(Error::Numerical(format!(
        "inner moment ladder did not settle in {} cycles",
        control.max_inner
    )))
}

/// March the full-order model across the whole time grid.
pub fn run_fom(problem: &Problem, control: &IterationControl) -> Result<FomResult> {
    let tr = problem.transport();
    let lo = problem.low_order();
    let nx = problem.mesh.n_cells();
    let n_steps = problem.time.n_steps();
    let dt = problem.time.dt();

    let mut temperature = vec![problem.t_initial; nx];
    let mut intensity = problem.initial_intensity();
    let mut lo_state =
        LowOrderState::equilibrium(&problem.groups, problem.t_initial, problem.a_r, nx);
    let (initial_grey_energy, _) = lo_state.grey_totals();
    let initial_temperature = temperature.clone();

    let mut records = Vec::with_capacity(n_steps);
    let mut snapshots = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let started = Instant::now();
        let outcome = advance_step(
            problem, &tr, &lo, control, dt, &intensity, &lo_state, &temperature,
        )?;
        intensity = outcome.intensity;
        lo_state = outcome.state;
        temperature = outcome.temperature;
        records.push(StepRecord {
            step,
            time: problem.time.time(step),
            outer_iters: outcome.outer_iters,
            inner_iters_total: outcome.inner_iters_total,
            balance_residual: outcome.balance_residual,
            negative_count: outcome.negative_count,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            temperature: temperature.clone(),
            grey_energy: outcome.grey_energy,
        });
        snapshots.push(intensity.clone());
    }
    Ok(FomResult {
        records,
        snapshots,
        initial_temperature,
        initial_grey_energy,
        final_state: lo_state,
    })
}

pub(crate) struct StepOutcome {
    pub intensity: Vec<f64>,
    pub state: LowOrderState,
    pub temperature: Vec<f64>,
    pub grey_energy: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub balance_residual: f64,
    pub negative_count: usize,
}

/// One backward-Euler step of the full-order model.
#[allow(clippy::too_many_arguments)]
fn advance_step(
    problem: &Problem,
    tr: &Transport,
    lo: &LowOrder,
    control: &IterationControl,
    dt: f64,
    i_prev: &[f64],
    lo_prev: &LowOrderState,
    t_prev: &[f64],
) -> Result<StepOutcome> {
    let mut t_latest = t_prev.to_vec();
    let mut e_latest = {
        let (e, _) = lo_prev.grey_totals();
        e
    };
    let mut inner_total = 0;
    for k in 1..=control.max_outer {
        let mat = MaterialFields::evaluate(&problem.groups, &problem.opacity, problem.a_r, &t_latest);
        let swept = tr.sweep(&mat, dt, i_prev, &problem.bc);
        let mo = AngularMoments::from_intensity(tr, &swept, &problem.bc);
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
            let balance = tr.energy_balance_residual(&mat, dt, &swept, i_prev, &problem.bc);
            return Ok(StepOutcome {
                negative_count: tr.count_negative(&swept),
                intensity: swept,
                state: outcome.state,
                temperature: t_latest,
                grey_energy: e_latest,
                outer_iters: k,
                inner_iters_total: inner_total,
                balance_residual: balance,
            });
        }
    }
    Err(Error::Numerical(format!(
        "time step did not converge in {} outer iterations",
        control.max_outer
    )))
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (&a, &b) in new.iter().zip(old) {
        diff += (a - b) * (a - b);
        norm += a * a;
    }
    if norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff / norm).sqrt()
    }
}

/// Small driven two-stage problem shared by solver tests: coarse groups,
/// short slab, four steps. Cheap enough for exhaustive checks.
#[cfg(test)]
pub(crate) fn tiny_problem() -> Problem {
    use crate::RADIATION_CONSTANT;
    let groups = GroupStructure::new(vec![0.1, 0.5, 2.0, 8.0, f64::INFINITY]).unwrap();
    let a_r = RADIATION_CONSTANT;
    Problem {
        mesh: SpatialMesh::uniform(1.0, 8).unwrap(),
        quad: AngularQuadrature::double_gauss_legendre(2).unwrap(),
        bc: BoundarySpec::blackbody_vacuum(&groups, 1.0, a_r),
        groups,
        opacity: OpacityModel::PhotonEnergyCubed { coefficient: 27.0 },
        eos: Eos::linear(0.5917 * a_r).unwrap(),
        a_r,
        t_initial: 1e-3,
        time: TimeGrid::new(0.02, 0.08, &[0.04]).unwrap(),
    }
}
