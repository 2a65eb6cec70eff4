//! Classic reference models the reduced-order results are judged against.
//!
//! Both baselines keep the exact material coupling, group structure, and
//! time stepping of the main solver and change only the radiation closure:
//! the P1 model fixes the Eddington factor at 1/3 with Marshak boundary
//! conditions, and the flux-limited diffusion model replaces the first
//! moment equation with a limited Fick law per group. Neither sees any
//! transport information, so their errors show what the closure alone costs.

use std::time::Instant;

use crate::fom::{
    inner_ladder, relative_change, AndersonAccelerator, IterationControl, Problem,
};
use crate::loqd::{solve_material_balance, solve_tridiagonal, LowOrderState};
use crate::moments::BoundaryClosure;
use crate::physics::MaterialFields;
use crate::{Result, LIGHT_SPEED};

/// Which closure replaces the transport solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Multigroup P1: Eddington factor 1/3, flux memory retained, Marshak
    /// boundary conditions.
    P1,
    /// Multigroup flux-limited diffusion: algebraic limited Fick flux,
    /// Marshak boundary conditions.
    FluxLimited,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::P1 => "p1",
            BaselineKind::FluxLimited => "fld",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "p1" => Some(BaselineKind::P1),
            "fld" => Some(BaselineKind::FluxLimited),
            _ => None,
        }
    }
}

/// One converged baseline time step.
#[derive(Debug, Clone)]
pub struct BaselineStepRecord {
    pub step: usize,
    pub time: f64,
    pub iters: usize,
    pub balance_residual: f64,
    pub wall_ms: f64,
    pub temperature: Vec<f64>,
    pub grey_energy: Vec<f64>,
}

/// Baseline run output.
#[derive(Debug)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub records: Vec<BaselineStepRecord>,
    pub initial_temperature: Vec<f64>,
    pub initial_grey_energy: Vec<f64>,
}

/// Marshak condition per group: F = 2 F_in -/+ (c/2) E_cell. Doubling the
/// inflow against the half-range outflow keeps an isotropic equilibrium
/// field flux-free, the same consistency the transport closures have.
fn marshak_closures(problem: &Problem) -> (Vec<BoundaryClosure>, Vec<BoundaryClosure>) {
    let ng = problem.groups.n_groups();
    let mut left = Vec::with_capacity(ng);
    let mut right = Vec::with_capacity(ng);
    for g in 0..ng {
        let mut f_in_l = 0.0;
        let mut f_in_r = 0.0;
        for (_, mu, w) in problem.quad.directions() {
            if mu > 0.0 {
                f_in_l += w * mu * problem.bc.left(g);
            } else {
                f_in_r += w * mu * problem.bc.right(g);
            }
        }
        left.push(BoundaryClosure { f_in: 2.0 * f_in_l, ratio: -0.5 });
        right.push(BoundaryClosure { f_in: 2.0 * f_in_r, ratio: 0.5 });
    }
    (left, right)
}

/// Combined radiation-plus-material balance over the whole slab for one
/// step, relative to the magnitudes involved. Both baselines close their
/// steps consistently, so this stays near round-off.
#[allow(clippy::too_many_arguments)]
fn conservation_residual(
    problem: &Problem,
    dt: f64,
    e_new: &[f64],
    e_prev: &[f64],
    t_new: &[f64],
    t_prev: &[f64],
    flux_left: f64,
    flux_right: f64,
) -> f64 {
    let cv = problem.eos.heat_capacity();
    let mut stored = 0.0;
    let mut magnitude = 0.0;
    for i in 0..problem.mesh.n_cells() {
        let dx = problem.mesh.width(i);
        let radiation = dx * (e_new[i] - e_prev[i]) / dt;
        let material = dx * cv * (t_new[i] - t_prev[i]) / dt;
        stored += radiation + material;
        magnitude += radiation.abs() + material.abs();
    }
    let through = flux_right - flux_left;
    let scale = magnitude.max(through.abs()).max(f64::MIN_POSITIVE);
    (stored + through).abs() / scale
}

/// March a baseline over the problem's time grid.
pub fn run_baseline(
    problem: &Problem,
    kind: BaselineKind,
    control: &IterationControl,
) -> Result<BaselineResult> {
    let nx = problem.mesh.n_cells();
    let ng = problem.groups.n_groups();
    let dt = problem.time.dt();
    let lo = problem.low_order();
    let (closures_left, closures_right) = marshak_closures(problem);
    let third = vec![1.0 / 3.0; ng * nx];

    let mut temperature = vec![problem.t_initial; nx];
    let mut state =
        LowOrderState::equilibrium(&problem.groups, problem.t_initial, problem.a_r, nx);
    let (initial_grey_energy, _) = state.grey_totals();
    let initial_temperature = temperature.clone();

    let mut records = Vec::with_capacity(problem.time.n_steps());
    for step in 1..=problem.time.n_steps() {
        let started = Instant::now();
        let (e_prev_grey, _) = state.grey_totals();
        let (next_state, next_t, iters) = match kind {
            BaselineKind::P1 => {
                let outcome = inner_ladder(
                    &lo,
                    &problem.groups,
                    &problem.opacity,
                    problem.eos,
                    problem.a_r,
                    dt,
                    &state,
                    &temperature,
                    &temperature,
                    &third,
                    &closures_left,
                    &closures_right,
                    control,
                )?;
                (outcome.state, outcome.temperature, outcome.iters)
            }
            BaselineKind::FluxLimited => flux_limited_step(
                problem,
                control,
                dt,
                &state,
                &temperature,
                &closures_left,
                &closures_right,
            )?,
        };
        let (e_new_grey, f_new_grey) = next_state.grey_totals();
        let balance = conservation_residual(
            problem,
            dt,
            &e_new_grey,
            &e_prev_grey,
            &next_t,
            &temperature,
            f_new_grey[0],
            f_new_grey[nx],
        );
        state = next_state;
        temperature = next_t;
        records.push(BaselineStepRecord {
            step,
            time: problem.time.time(step),
            iters,
            balance_residual: balance,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            temperature: temperature.clone(),
            grey_energy: e_new_grey,
        });
    }
    Ok(BaselineResult { kind, records, initial_temperature, initial_grey_energy })
}

/// One backward-Euler flux-limited diffusion step. The limited diffusion
/// coefficient lags one cycle behind the energy iterate; the material
/// balance is solved exactly per cell with the emission spectrum frozen at
/// the cycle's temperature, and the temperature cycle is Anderson-mixed
/// like the main solver's ladder.
fn flux_limited_step(
    problem: &Problem,
    control: &IterationControl,
    dt: f64,
    prev: &LowOrderState,
    t_prev: &[f64],
    closures_left: &[BoundaryClosure],
    closures_right: &[BoundaryClosure],
) -> Result<(LowOrderState, Vec<f64>, usize)> {
    let nx = problem.mesh.n_cells();
    let ng = problem.groups.n_groups();
    let mesh = &problem.mesh;
    let cv_dt = problem.eos.heat_capacity() / dt;

    let mut t_latest = t_prev.to_vec();
    let mut e_lag = prev.energy_slice().to_vec();
    let mut e_total_latest = vec![0.0; nx];
    for g in 0..ng {
        for i in 0..nx {
            e_total_latest[i] += e_lag[g * nx + i];
        }
    }
    let mut accel = AndersonAccelerator::new();

    for cycle in 1..=control.max_inner {
        let mat =
            MaterialFields::evaluate(&problem.groups, &problem.opacity, problem.a_r, &t_latest);
        let mut energy = vec![0.0; ng * nx];
        let mut flux = vec![0.0; ng * (nx + 1)];
        for g in 0..ng {
            // Limited diffusion coefficient per interior face from the lagged
            // energies: d = c * lambda / kappa with lambda = 1/sqrt(9 + r^2),
            // r = |grad E| / (kappa E). Written as c e / sqrt(9 (kappa e)^2 +
            // grad^2) so the free-streaming limit kappa -> 0 stays finite and
            // |F| <= c E holds by construction.
            let mut a = vec![0.0; nx + 1];
            for j in 1..nx {
                let span = mesh.face_span(j);
                let grad = (e_lag[g * nx + j] - e_lag[g * nx + j - 1]) / span;
                let kf = 0.5 * (mat.kappa(g, j - 1) + mat.kappa(g, j));
                let ef = 0.5 * (e_lag[g * nx + j - 1] + e_lag[g * nx + j]);
                let denom = (9.0 * (kf * ef) * (kf * ef) + grad * grad).sqrt();
                let d = if denom > 0.0 {
                    LIGHT_SPEED * ef / denom
                } else {
                    LIGHT_SPEED / (3.0 * kf.max(f64::MIN_POSITIVE))
                };
                a[j] = d / span;
            }
            // Marshak faces: eliminate the face energy between the boundary
            // condition and the one-sided Fick flux over the half cell, which
            // caps the boundary flux by the inflow itself.
            let d_left = LIGHT_SPEED / (3.0 * mat.kappa(g, 0));
            let gamma_left = LIGHT_SPEED * mesh.width(0) / (4.0 * d_left);
            let beta_left = 0.5 * LIGHT_SPEED / (1.0 + gamma_left);
            let alpha_left = closures_left[g].f_in / (1.0 + gamma_left);
            let d_right = LIGHT_SPEED / (3.0 * mat.kappa(g, nx - 1));
            let gamma_right = LIGHT_SPEED * mesh.width(nx - 1) / (4.0 * d_right);
            let beta_right = 0.5 * LIGHT_SPEED / (1.0 + gamma_right);
            let alpha_right = closures_right[g].f_in / (1.0 + gamma_right);

            let mut lower = vec![0.0; nx];
            let mut diag = vec![0.0; nx];
            let mut upper = vec![0.0; nx];
            let mut rhs = vec![0.0; nx];
            for i in 0..nx {
                let dx = mesh.width(i);
                diag[i] = dx * (1.0 / dt + LIGHT_SPEED * mat.kappa(g, i));
                rhs[i] = dx
                    * (4.0 * std::f64::consts::PI * mat.kappa(g, i) * mat.planck(g, i)
                        + prev.energy(g, i) / dt);
                if i + 1 < nx {
                    diag[i] += a[i + 1];
                    upper[i] = -a[i + 1];
                } else {
                    diag[i] += beta_right;
                    rhs[i] -= alpha_right;
                }
                if i > 0 {
                    diag[i] += a[i];
                    lower[i] = -a[i];
                } else {
                    diag[i] += beta_left;
                    rhs[i] += alpha_left;
                }
            }
            let e_g = solve_tridiagonal(&lower, &diag, &upper, &rhs);
            flux[g * (nx + 1)] = alpha_left - beta_left * e_g[0];
            flux[g * (nx + 1) + nx] = alpha_right + beta_right * e_g[nx - 1];
            for j in 1..nx {
                flux[g * (nx + 1) + j] = -a[j] * (e_g[j] - e_g[j - 1]);
            }
            energy[g * nx..(g + 1) * nx].copy_from_slice(&e_g);
        }

        let mut t_new = vec![0.0; nx];
        let mut e_total = vec![0.0; nx];
        for i in 0..nx {
            let mut absorbed = 0.0;
            for g in 0..ng {
                absorbed += mat.kappa(g, i) * energy[g * nx + i];
                e_total[i] += energy[g * nx + i];
            }
            absorbed *= LIGHT_SPEED;
            // Emission coefficient frozen at the cycle's spectrum: coef * T^4
            // reproduces 4 pi sum(kappa_g B_g) exactly at T = t_latest.
            let quartic = t_latest[i].powi(4);
            let emis_coef = if quartic > 0.0 {
                4.0 * std::f64::consts::PI * mat.kappa_planck_sum(i) / quartic
            } else {
                0.0
            };
            t_new[i] = solve_material_balance(cv_dt, t_prev[i], emis_coef, absorbed)?;
        }

        let dt_rel = relative_change(&t_new, &t_latest);
        let de_rel = relative_change(&e_total, &e_total_latest);
        if dt_rel < control.tol_temperature && de_rel < control.tol_energy {
            return Ok((LowOrderState::new(ng, nx, energy, flux), t_new, cycle));
        }
        // Mix temperature and the lagged energies as one iterate: the slow
        // mode lives in their coupling, so accelerating T alone leaves the
        // limiter relaxing at the raw Picard rate. Extrapolation may
        // overshoot, so pin energies at zero and temperatures positive.
        let mut joint_in = t_latest.clone();
        joint_in.extend_from_slice(&e_lag);
        let mut joint_out = t_new.clone();
        joint_out.extend_from_slice(&energy);
        let mixed = accel.advance(&joint_in, &joint_out);
        t_latest.clone_from_slice(&mixed[..nx]);
        for t in &mut t_latest {
            *t = t.max(f64::MIN_POSITIVE);
        }
        e_lag.clear();
        e_lag.extend(mixed[nx..].iter().map(|&e| e.max(0.0)));
        e_total_latest = e_total;
    }
    Err(crate::Error::Numerical(format!(
        "flux-limited diffusion step did not converge in {} cycles",
        control.max_inner
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::tiny_problem;
    use crate::grid::{AngularQuadrature, SpatialMesh, TimeGrid};
    use crate::physics::{
        equilibrium_energy_densities, Eos, GroupStructure, OpacityModel,
    };
    use crate::transport::BoundarySpec;
    use crate::RADIATION_CONSTANT;

    /// Slab in equilibrium with identical black bodies on both sides.
    fn equilibrium_problem(t: f64) -> Problem {
        let groups = GroupStructure::new(vec![0.1, 0.5, 2.0, 8.0, f64::INFINITY]).unwrap();
        let a_r = RADIATION_CONSTANT;
        let eq = crate::physics::equilibrium_intensities(&groups, t, a_r);
        Problem {
            mesh: SpatialMesh::uniform(1.0, 6).unwrap(),
            quad: AngularQuadrature::double_gauss_legendre(2).unwrap(),
            bc: BoundarySpec::new(eq.clone(), eq),
            groups,
            opacity: OpacityModel::PhotonEnergyCubed { coefficient: 27.0 },
            eos: Eos::linear(0.3).unwrap(),
            a_r,
            t_initial: t,
            time: TimeGrid::new(0.02, 0.06, &[]).unwrap(),
        }
    }

    #[test]
    fn both_baselines_hold_an_equilibrium_slab() {
        let t = 0.7;
        let p = equilibrium_problem(t);
        let e_eq: f64 =
            equilibrium_energy_densities(&p.groups, t, RADIATION_CONSTANT).iter().sum();
        for kind in [BaselineKind::P1, BaselineKind::FluxLimited] {
            let out = run_baseline(&p, kind, &IterationControl::default()).unwrap();
            for rec in &out.records {
                for i in 0..p.mesh.n_cells() {
                    assert!(
                        (rec.temperature[i] - t).abs() < 1e-10 * t,
                        "{} step {} cell {i}: T = {}",
                        kind.name(),
                        rec.step,
                        rec.temperature[i]
                    );
                    assert!(
                        (rec.grey_energy[i] - e_eq).abs() < 1e-10 * e_eq,
                        "{} step {} cell {i}: E = {}",
                        kind.name(),
                        rec.step,
                        rec.grey_energy[i]
                    );
                }
            }
        }
    }

    #[test]
    fn driven_slab_heats_from_the_left_under_both_baselines() {
        let p = tiny_problem();
        for kind in [BaselineKind::P1, BaselineKind::FluxLimited] {
            let out = run_baseline(&p, kind, &IterationControl::default()).unwrap();
            let last = out.records.last().unwrap();
            assert!(
                last.temperature[0] > 10.0 * p.t_initial,
                "{}: left cell stayed cold: {}",
                kind.name(),
                last.temperature[0]
            );
            assert!(
                last.temperature[0] > last.temperature[p.mesh.n_cells() - 1],
                "{}: no left-to-right gradient",
                kind.name()
            );
            for rec in &out.records {
                assert!(
                    rec.balance_residual < 1e-8,
                    "{} step {}: balance {}",
                    kind.name(),
                    rec.step,
                    rec.balance_residual
                );
                assert!(rec.temperature.iter().all(|v| v.is_finite() && *v > 0.0));
            }
        }
    }

    #[test]
    fn limited_flux_never_exceeds_the_streaming_bound() {
        let p = tiny_problem();
        let control = IterationControl::default();
        let dt = p.time.dt();
        let mut state =
            LowOrderState::equilibrium(&p.groups, p.t_initial, p.a_r, p.mesh.n_cells());
        let mut temperature = vec![p.t_initial; p.mesh.n_cells()];
        let (cl, cr) = marshak_closures(&p);
        for _ in 0..3 {
            let (next, t_new, _) =
                flux_limited_step(&p, &control, dt, &state, &temperature, &cl, &cr).unwrap();
            for g in 0..p.groups.n_groups() {
                for j in 1..p.mesh.n_cells() {
                    let cap = LIGHT_SPEED * 0.5 * (next.energy(g, j - 1) + next.energy(g, j));
                    assert!(
                        next.flux(g, j).abs() <= cap * (1.0 + 1e-12),
                        "group {g} face {j}: |F| = {} caps at {cap}",
                        next.flux(g, j).abs()
                    );
                }
            }
            state = next;
            temperature = t_new;
        }
    }

    #[test]
    fn baseline_names_round_trip() {
        for kind in [BaselineKind::P1, BaselineKind::FluxLimited] {
            assert_eq!(BaselineKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(BaselineKind::parse("unknown"), None);
    }
}
