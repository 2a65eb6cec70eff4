//! Low-order moment solvers closed by transport data.
//!
//! Both systems discretize the radiation energy and flux moments with
//! backward-Euler time stepping and finite volumes. The face flux is
//! eliminated analytically, which leaves one tridiagonal solve per group in
//! the scaled variable y = f E; the closure ratios at the boundaries have the
//! signs that keep those systems diagonally dominant. The grey system adds
//! the material energy balance and solves the coupled nonlinear pair by
//! Newton linearization of the emission term with an exact per-cell quartic
//! temperature update.

use crate::grid::SpatialMesh;
use crate::moments::{BoundaryClosure, GreyData};
use crate::physics::{Eos, GroupStructure, MaterialFields};
use crate::{Error, Result, LIGHT_SPEED};

/// Group energy densities (cells) and fluxes (faces) at one time level.
#[derive(Debug, Clone)]
pub struct LowOrderState {
    n_groups: usize,
    n_cells: usize,
    energy: Vec<f64>,
    flux: Vec<f64>,
}

impl LowOrderState {
    pub fn new(n_groups: usize, n_cells: usize, energy: Vec<f64>, flux: Vec<f64>) -> Self {
        assert_eq!(energy.len(), n_groups * n_cells);
        assert_eq!(flux.len(), n_groups * (n_cells + 1));
        Self { n_groups, n_cells, energy, flux }
    }

    /// Equilibrium radiation field at a uniform temperature: E_g = 4 pi B_g / c
    /// in every cell, zero flux everywhere.
    pub fn equilibrium(groups: &GroupStructure, t: f64, a_r: f64, n_cells: usize) -> Self {
        let e_g = crate::physics::equilibrium_energy_densities(groups, t, a_r);
        let ng = groups.n_groups();
        let mut energy = vec![0.0; ng * n_cells];
        for g in 0..ng {
            for i in 0..n_cells {
                energy[g * n_cells + i] = e_g[g];
            }
        }
        Self { n_groups: ng, n_cells, energy, flux: vec![0.0; ng * (n_cells + 1)] }
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn energy(&self, g: usize, i: usize) -> f64 {
        self.energy[g * self.n_cells + i]
    }

    pub fn flux(&self, g: usize, j: usize) -> f64 {
        self.flux[g * (self.n_cells + 1) + j]
    }

    pub fn energy_slice(&self) -> &[f64] {
        &self.energy
    }

    pub fn flux_slice(&self) -> &[f64] {
        &self.flux
    }

    /// Group-summed energy (cells) and flux (faces).
    pub fn grey_totals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut e = vec![0.0; self.n_cells];
        let mut f = vec![0.0; self.n_cells + 1];
        for g in 0..self.n_groups {
            for i in 0..self.n_cells {
                e[i] += self.energy(g, i);
            }
            for j in 0..=self.n_cells {
                f[j] += self.flux(g, j);
            }
        }
        (e, f)
    }
}

/// Converged output of the grey solve: radiation energy, face flux, and the
/// material temperature consistent with both.
#[derive(Debug, Clone)]
pub struct GreySolution {
    pub energy: Vec<f64>,
    pub flux: Vec<f64>,
    pub temperature: Vec<f64>,
    pub newton_iters: usize,
}

/// Shared tridiagonal machinery for the moment systems on one mesh.
#[derive(Debug, Clone)]
pub struct LowOrder {
    mesh: SpatialMesh,
}

impl LowOrder {
    pub fn new(mesh: SpatialMesh) -> Self {
        Self { mesh }
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    /// One backward-Euler step of the multigroup moment system. Emission is
    /// evaluated from `mat` (explicit in temperature); Eddington factors and
    /// boundary closures come from the latest transport sweep.
    pub fn solve_multigroup(
        &self,
        mat: &MaterialFields,
        dt: f64,
        prev: &LowOrderState,
        eddington: &[f64],
        closures_left: &[BoundaryClosure],
        closures_right: &[BoundaryClosure],
    ) -> LowOrderState {
        let nx = self.mesh.n_cells();
        let ng = mat.n_groups();
        debug_assert_eq!(prev.n_cells(), nx);
        debug_assert_eq!(prev.n_groups(), ng);
        let mut energy = vec![0.0; ng * nx];
        let mut flux = vec![0.0; ng * (nx + 1)];
        let mut removal = vec![0.0; nx];
        let mut kappa_face = vec![0.0; nx + 1];
        let mut source = vec![0.0; nx];
        for g in 0..ng {
            for i in 0..nx {
                removal[i] = LIGHT_SPEED * mat.kappa(g, i);
                source[i] = 4.0 * std::f64::consts::PI * mat.kappa(g, i) * mat.planck(g, i)
                    + prev.energy(g, i) / dt;
            }
            kappa_face[0] = mat.kappa(g, 0);
            kappa_face[nx] = mat.kappa(g, nx - 1);
            for j in 1..nx {
                kappa_face[j] = 0.5 * (mat.kappa(g, j - 1) + mat.kappa(g, j));
            }
            let f_prev: Vec<f64> = (0..=nx).map(|j| prev.flux(g, j)).collect();
            let (e_g, f_g) = self.solve_closed_system(
                dt,
                &removal,
                &eddington[g * nx..(g + 1) * nx],
                &kappa_face,
                None,
                closures_left[g],
                closures_right[g],
                &source,
                &f_prev,
            );
            energy[g * nx..(g + 1) * nx].copy_from_slice(&e_g);
            flux[g * (nx + 1)..(g + 1) * (nx + 1)].copy_from_slice(&f_g);
        }
        LowOrderState::new(ng, nx, energy, flux)
    }

    /// One backward-Euler step of the grey system with the temperature held
    /// fixed: a single linear solve. Exists so the collapsed system can be
    /// checked against the summed multigroup solution.
    pub fn solve_grey_frozen(
        &self,
        grey: &GreyData,
        a_r: f64,
        dt: f64,
        e_prev: &[f64],
        f_prev: &[f64],
        t_field: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let nx = self.mesh.n_cells();
        let mut removal = vec![0.0; nx];
        let mut source = vec![0.0; nx];
        for i in 0..nx {
            removal[i] = LIGHT_SPEED * grey.kappa_e[i];
            source[i] = LIGHT_SPEED * grey.emission_ratio[i] * a_r * t_field[i].powi(4)
                + e_prev[i] / dt;
        }
        self.solve_closed_system(
            dt,
            &removal,
            &grey.f_bar,
            &grey.kappa_r,
            Some(&grey.eta),
            grey.closure_left,
            grey.closure_right,
            &source,
            f_prev,
        )
    }

    /// One backward-Euler step of the grey system coupled to the material
    /// energy balance. The emission c kappa_hat a T^4 is Newton-linearized
    /// about the current temperature iterate; each pass solves the resulting
    /// linear radiation system and then recovers the temperature cell by cell
    /// from the exact (quartic) balance. kappa_hat stays frozen at the state
    /// the grey coefficients were collapsed from.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_grey_coupled(
        &self,
        grey: &GreyData,
        eos: Eos,
        a_r: f64,
        dt: f64,
        e_prev: &[f64],
        f_prev: &[f64],
        t_prev: &[f64],
        t_start: &[f64],
    ) -> Result<GreySolution> {
        let nx = self.mesh.n_cells();
        let cv_dt = eos.heat_capacity() / dt;
        let mut t_star = t_start.to_vec();
        let mut e_old = e_prev.to_vec();
        let mut removal = vec![0.0; nx];
        let mut source = vec![0.0; nx];
        const MAX_PASSES: usize = 100;
        const TOL: f64 = 1e-13;
        for pass in 1..=MAX_PASSES {
            for i in 0..nx {
                let emis = LIGHT_SPEED * grey.emission_ratio[i] * a_r;
                let absorb = LIGHT_SPEED * grey.kappa_e[i];
                let t3 = t_star[i].powi(3);
                let theta = cv_dt + 4.0 * emis * t3;
                // T(E) = alpha + beta E from the linearized balance; the
                // emitted part proportional to E moves into the removal term,
                // which stays nonnegative by construction.
                let alpha =
                    (cv_dt * t_prev[i] - emis * t3 * t_star[i] + 4.0 * emis * t3 * t_star[i])
                        / theta;
                removal[i] = absorb * cv_dt / theta;
                source[i] = emis * t3 * t_star[i] + 4.0 * emis * t3 * (alpha - t_star[i])
                    + e_prev[i] / dt;
            }
            let (e_new, f_new) = self.solve_closed_system(
                dt,
                &removal,
                &grey.f_bar,
                &grey.kappa_r,
                Some(&grey.eta),
                grey.closure_left,
                grey.closure_right,
                &source,
                f_prev,
            );
            let mut t_new = vec![0.0; nx];
            for i in 0..nx {
                let emis = LIGHT_SPEED * grey.emission_ratio[i] * a_r;
                let absorbed = LIGHT_SPEED * grey.kappa_e[i] * e_new[i];
                t_new[i] = solve_material_balance(cv_dt, t_prev[i], emis, absorbed)?;
            }
            let dt_rel = relative_change(&t_new, &t_star);
            let de_rel = relative_change(&e_new, &e_old);
            t_star = t_new;
            e_old = e_new;
            if dt_rel < TOL && de_rel < TOL {
                return Ok(GreySolution {
                    energy: e_old,
                    flux: f_new,
                    temperature: t_star,
                    newton_iters: pass,
                });
            }
        }
        Err(Error::Numerical(format!(
            "grey radiation-material coupling did not converge in {MAX_PASSES} passes"
        )))
    }

    /// Assemble and solve one group-like moment system with the face flux
    /// eliminated. Works in y = f E so the tridiagonal matrix is strictly
    /// diagonally dominant; returns energies and reconstructed face fluxes.
    /// `source` is the full volumetric source including the E_prev / dt
    /// memory; `eta` adds the spectral drift term of the grey system.
    #[allow(clippy::too_many_arguments)]
    fn solve_closed_system(
        &self,
        dt: f64,
        removal: &[f64],
        eddington: &[f64],
        kappa_face: &[f64],
        eta: Option<&[f64]>,
        closure_left: BoundaryClosure,
        closure_right: BoundaryClosure,
        source: &[f64],
        f_prev: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let nx = self.mesh.n_cells();
        debug_assert_eq!(f_prev.len(), nx + 1);
        let tau = 1.0 / (LIGHT_SPEED * dt);

        // Face elimination data (interior faces 1..nx): F_j = g_mem - a (y_j -
        // y_{j-1}) - (eta / d) (E_{j-1} + E_j) / 2.
        let mut a = vec![0.0; nx + 1];
        let mut d_face = vec![0.0; nx + 1];
        let mut g_mem = vec![0.0; nx + 1];
        for j in 1..nx {
            d_face[j] = tau + kappa_face[j];
            a[j] = LIGHT_SPEED / (d_face[j] * self.mesh.face_span(j));
            g_mem[j] = tau * f_prev[j] / d_face[j];
        }

        let mut lower = vec![0.0; nx];
        let mut diag = vec![0.0; nx];
        let mut upper = vec![0.0; nx];
        let mut rhs = vec![0.0; nx];
        for i in 0..nx {
            let dx = self.mesh.width(i);
            let f_i = eddington[i];
            diag[i] = dx * (1.0 / dt + removal[i]) / f_i;
            rhs[i] = dx * source[i];
            if i + 1 < nx {
                let j = i + 1;
                diag[i] += a[j];
                upper[i] = -a[j];
                rhs[i] -= g_mem[j];
                if let Some(eta) = eta {
                    diag[i] -= eta[j] / (2.0 * d_face[j] * f_i);
                    upper[i] -= eta[j] / (2.0 * d_face[j] * eddington[i + 1]);
                }
            } else {
                diag[i] += LIGHT_SPEED * closure_right.ratio / f_i;
                rhs[i] -= closure_right.f_in;
            }
            if i > 0 {
                let j = i;
                diag[i] += a[j];
                lower[i] = -a[j];
                rhs[i] += g_mem[j];
                if let Some(eta) = eta {
                    diag[i] += eta[j] / (2.0 * d_face[j] * f_i);
                    lower[i] += eta[j] / (2.0 * d_face[j] * eddington[i - 1]);
                }
            } else {
                diag[i] -= LIGHT_SPEED * closure_left.ratio / f_i;
                rhs[i] += closure_left.f_in;
            }
        }
        let y = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        let energy: Vec<f64> = (0..nx).map(|i| y[i] / eddington[i]).collect();

        let mut flux = vec![0.0; nx + 1];
        flux[0] = closure_left.f_in + LIGHT_SPEED * closure_left.ratio * energy[0];
        flux[nx] = closure_right.f_in + LIGHT_SPEED * closure_right.ratio * energy[nx - 1];
        for j in 1..nx {
            flux[j] = g_mem[j] - a[j] * (y[j] - y[j - 1]);
            if let Some(eta) = eta {
                flux[j] -= eta[j] / d_face[j] * 0.5 * (energy[j - 1] + energy[j]);
            }
        }
        (energy, flux)
    }
}

/// Thomas elimination for a tridiagonal system; lower[i] multiplies x[i-1],
/// upper[i] multiplies x[i+1]. The moment systems keep the pivots safely
/// away from zero, so no pivoting is needed.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    x[0] = rhs[0] / diag[0];
    for i in 1..n {
        let pivot = diag[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Exact temperature update from one cell's material energy balance:
///   cv_dt (T - t_prev) + emis_coef T^4 = absorbed.
/// The left side is strictly increasing for T >= 0, so the nonnegative root
/// is unique; Newton with iterates clamped at zero, bisection as a fallback.
pub(crate) fn solve_material_balance(
    cv_dt: f64,
    t_prev: f64,
    emis_coef: f64,
    absorbed: f64,
) -> Result<f64> {
    let g = |t: f64| cv_dt * (t - t_prev) + emis_coef * t.powi(4) - absorbed;
    if g(0.0) > 0.0 {
        return Err(Error::Numerical(format!(
            "material balance has no nonnegative temperature (t_prev {t_prev}, absorbed {absorbed})"
        )));
    }
    let mut t = t_prev.max(0.0);
    for _ in 0..100 {
        let val = g(t);
        let slope = cv_dt + 4.0 * emis_coef * t.powi(3);
        let step = val / slope;
        let next = (t - step).max(0.0);
        if (next - t).abs() <= 1e-14 * next.max(1e-300) {
            return Ok(next);
        }
        t = next;
    }
    // Newton stalled; bracket and bisect.
    let mut hi = t_prev.max(1e-6);
    let mut guard = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Numerical("material balance root is unbounded".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
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
