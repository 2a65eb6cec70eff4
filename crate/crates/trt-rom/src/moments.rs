//! Angular moments of the intensity and the closure data they induce.
//!
//! The low-order solvers never see intensities. They see group energy
//! densities (cells), group fluxes (faces), Eddington factors (cells), and
//! boundary closures of the form F_b = F_in + c * ratio * E_cell, all
//! computed here from a swept intensity field. The grey collapse averages
//! those group quantities into one-group coefficients whose weighted sums
//! reproduce the multigroup sums identically.

use crate::physics::MaterialFields;
use crate::transport::{BoundarySpec, Transport};
use crate::LIGHT_SPEED;

/// Face flux closure F_b = f_in + c * ratio * E_cell against the adjacent
/// cell energy density. At a left boundary ratio <= 0, at a right boundary
/// ratio >= 0, which keeps the low-order systems diagonally dominant.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryClosure {
    pub f_in: f64,
    pub ratio: f64,
}

/// Group moments and closures extracted from one intensity field.
#[derive(Debug, Clone)]
pub struct AngularMoments {
    n_groups: usize,
    n_cells: usize,
    energy: Vec<f64>,
    flux: Vec<f64>,
    eddington: Vec<f64>,
    closure_left: Vec<BoundaryClosure>,
    closure_right: Vec<BoundaryClosure>,
    factor_left: Vec<f64>,
    factor_right: Vec<f64>,
}

impl AngularMoments {
    pub fn from_intensity(tr: &Transport, i_field: &[f64], bc: &BoundarySpec) -> Self {
        let layout = *tr.layout();
        let quad = tr.quadrature();
        let ng = layout.n_groups;
        let nx = layout.n_cells;
        let mut energy = vec![0.0; ng * nx];
        let mut flux = vec![0.0; ng * (nx + 1)];
        let mut eddington = vec![0.0; ng * nx];
        let mut closure_left = Vec::with_capacity(ng);
        let mut closure_right = Vec::with_capacity(ng);
        let mut factor_left = Vec::with_capacity(ng);
        let mut factor_right = Vec::with_capacity(ng);

        for g in 0..ng {
            for i in 0..nx {
                let mut zeroth = 0.0;
                let mut second = 0.0;
                for (m, mu, w) in quad.directions() {
                    let mean = 0.5
                        * (i_field[layout.flat_index(g, m, i, 0)]
                            + i_field[layout.flat_index(g, m, i, 1)]);
                    zeroth += w * mean;
                    second += w * mu * mu * mean;
                }
                energy[g * nx + i] = zeroth / LIGHT_SPEED;
                eddington[g * nx + i] = if zeroth > 0.0 { second / zeroth } else { 1.0 / 3.0 };
            }
            for j in 0..=nx {
                let mut first = 0.0;
                for (m, mu, w) in quad.directions() {
                    first += w * mu * tr.face_intensity(i_field, bc, g, m, j);
                }
                flux[g * (nx + 1) + j] = first;
            }

            // Outflow-split closures: the incoming half comes from the
            // prescribed boundary spectrum, the outgoing half is tied to the
            // boundary cell energy density through the transport solution.
            let mut f_in_l = 0.0;
            let mut f_out_l = 0.0;
            let mut f_in_r = 0.0;
            let mut f_out_r = 0.0;
            for (m, mu, w) in quad.directions() {
                if mu > 0.0 {
                    f_in_l += w * mu * bc.left(g);
                    f_out_r += w * mu * tr.face_intensity(i_field, bc, g, m, nx);
                } else {
                    f_out_l += w * mu * tr.face_intensity(i_field, bc, g, m, 0);
                    f_in_r += w * mu * bc.right(g);
                }
            }
            let e_first = energy[g * nx];
            let e_last = energy[g * nx + nx - 1];
            let ratio_l = if e_first > 0.0 {
                (f_out_l / (LIGHT_SPEED * e_first)).min(0.0)
            } else {
                -0.5
            };
            let ratio_r = if e_last > 0.0 {
                (f_out_r / (LIGHT_SPEED * e_last)).max(0.0)
            } else {
                0.5
            };
            closure_left.push(BoundaryClosure { f_in: f_in_l, ratio: ratio_l });
            closure_right.push(BoundaryClosure { f_in: f_in_r, ratio: ratio_r });

            // Full boundary ratios F/(cE) built from face intensities; these
            // are diagnostics of how anisotropic the boundary field is.
            factor_left.push(Self::face_ratio(tr, i_field, bc, g, 0, 0.5));
            factor_right.push(Self::face_ratio(tr, i_field, bc, g, nx, -0.5));
        }

        Self {
            n_groups: ng,
            n_cells: nx,
            energy,
            flux,
            eddington,
            closure_left,
            closure_right,
            factor_left,
            factor_right,
        }
    }

    fn face_ratio(
        tr: &Transport,
        i_field: &[f64],
        bc: &BoundarySpec,
        g: usize,
        j: usize,
        fallback: f64,
    ) -> f64 {
        let mut zeroth = 0.0;
        let mut first = 0.0;
        for (m, mu, w) in tr.quadrature().directions() {
            let v = tr.face_intensity(i_field, bc, g, m, j);
            zeroth += w * v;
            first += w * mu * v;
        }
        if zeroth > 0.0 {
            first / zeroth
        } else {
            fallback
        }
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Group energy density in cell i.
    pub fn energy(&self, g: usize, i: usize) -> f64 {
        self.energy[g * self.n_cells + i]
    }

    /// Group flux at face j (0..=n_cells).
    pub fn flux(&self, g: usize, j: usize) -> f64 {
        self.flux[g * (self.n_cells + 1) + j]
    }

    /// Eddington factor in cell i; 1/3 where the field vanishes.
    pub fn eddington(&self, g: usize, i: usize) -> f64 {
        self.eddington[g * self.n_cells + i]
    }

    pub fn energy_slice(&self) -> &[f64] {
        &self.energy
    }

    pub fn flux_slice(&self) -> &[f64] {
        &self.flux
    }

    pub fn eddington_slice(&self) -> &[f64] {
        &self.eddington
    }

    pub fn closure_left(&self, g: usize) -> BoundaryClosure {
        self.closure_left[g]
    }

    pub fn closure_right(&self, g: usize) -> BoundaryClosure {
        self.closure_right[g]
    }

    pub fn closures_left(&self) -> &[BoundaryClosure] {
        &self.closure_left
    }

    pub fn closures_right(&self) -> &[BoundaryClosure] {
        &self.closure_right
    }

    /// Flux-to-energy ratio F/(cE) of the full boundary face field.
    pub fn boundary_factor_left(&self, g: usize) -> f64 {
        self.factor_left[g]
    }

    pub fn boundary_factor_right(&self, g: usize) -> f64 {
        self.factor_right[g]
    }
}

/// One-group coefficients collapsed from multigroup low-order data. Every
/// average is defined so that the weighted identity it encodes holds exactly:
/// kappa_e * sum(E_g) = sum(kappa_g E_g) and so on.
#[derive(Debug, Clone)]
pub struct GreyData {
    /// Absorption-weighted opacity per cell (energy-density weights).
    pub kappa_e: Vec<f64>,
    /// Emission-weighted opacity per cell (Planck weights).
    pub kappa_b: Vec<f64>,
    /// Emission coefficient per cell: 4 pi sum(kappa_g B_g) / (c a T^4).
    /// Multiplying c a T^4 by it reproduces the multigroup emission exactly,
    /// including the part of the spectrum the group structure truncates.
    pub emission_ratio: Vec<f64>,
    /// Flux-weighted opacity per face.
    pub kappa_r: Vec<f64>,
    /// Energy-weighted Eddington factor per cell.
    pub f_bar: Vec<f64>,
    /// Residual spectral drift per face: sum((kappa_g^f - kappa_r) F_g) / e_tilde.
    pub eta: Vec<f64>,
    /// Face-interpolated total energy density used to normalize eta.
    pub e_tilde: Vec<f64>,
    /// Total energy density per cell (sum over groups).
    pub energy: Vec<f64>,
    /// Total flux per face (sum over groups).
    pub flux: Vec<f64>,
    pub closure_left: BoundaryClosure,
    pub closure_right: BoundaryClosure,
}

impl GreyData {
    /// Collapse multigroup data to grey coefficients. `energy` is group-major
    /// over cells, `flux` group-major over faces, `eddington` group-major over
    /// cells; closures are per group.
    pub fn collapse(
        mat: &MaterialFields,
        a_r: f64,
        t_field: &[f64],
        energy: &[f64],
        flux: &[f64],
        eddington: &[f64],
        closure_left: &[BoundaryClosure],
        closure_right: &[BoundaryClosure],
    ) -> Self {
        let ng = mat.n_groups();
        let nx = mat.n_cells();
        debug_assert_eq!(energy.len(), ng * nx);
        debug_assert_eq!(flux.len(), ng * (nx + 1));
        debug_assert_eq!(eddington.len(), ng * nx);

        let face_kappa = |g: usize, j: usize| -> f64 {
            if j == 0 {
                mat.kappa(g, 0)
            } else if j == nx {
                mat.kappa(g, nx - 1)
            } else {
                0.5 * (mat.kappa(g, j - 1) + mat.kappa(g, j))
            }
        };

        let mut kappa_e = vec![0.0; nx];
        let mut kappa_b = vec![0.0; nx];
        let mut emission_ratio = vec![0.0; nx];
        let mut f_bar = vec![0.0; nx];
        let mut energy_total = vec![0.0; nx];
        for i in 0..nx {
            let mut e_sum = 0.0;
            let mut ke_sum = 0.0;
            let mut fe_sum = 0.0;
            for g in 0..ng {
                let e = energy[g * nx + i];
                e_sum += e;
                ke_sum += mat.kappa(g, i) * e;
                fe_sum += eddington[g * nx + i] * e;
            }
            energy_total[i] = e_sum;
            let b_sum = mat.planck_sum(i);
            let kb_sum = mat.kappa_planck_sum(i);
            kappa_b[i] = if b_sum > 0.0 { kb_sum / b_sum } else { 0.0 };
            kappa_e[i] = if e_sum > 0.0 { ke_sum / e_sum } else { kappa_b[i] };
            f_bar[i] = if e_sum > 0.0 { fe_sum / e_sum } else { 1.0 / 3.0 };
            let quartic = a_r * t_field[i].powi(4);
            emission_ratio[i] = if quartic > 0.0 {
                4.0 * std::f64::consts::PI * kb_sum / (LIGHT_SPEED * quartic)
            } else {
                kappa_b[i]
            };
        }

        let mut kappa_r = vec![0.0; nx + 1];
        let mut eta = vec![0.0; nx + 1];
        let mut e_tilde = vec![0.0; nx + 1];
        let mut flux_total = vec![0.0; nx + 1];
        for j in 0..=nx {
            let mut fa_sum = 0.0;
            let mut kfa_sum = 0.0;
            let mut f_sum = 0.0;
            for g in 0..ng {
                let f = flux[g * (nx + 1) + j];
                fa_sum += f.abs();
                kfa_sum += face_kappa(g, j) * f.abs();
                f_sum += f;
            }
            flux_total[j] = f_sum;
            kappa_r[j] = if fa_sum > 0.0 {
                kfa_sum / fa_sum
            } else if j == 0 {
                kappa_e[0]
            } else if j == nx {
                kappa_e[nx - 1]
            } else {
                0.5 * (kappa_e[j - 1] + kappa_e[j])
            };
            e_tilde[j] = if j == 0 {
                energy_total[0]
            } else if j == nx {
                energy_total[nx - 1]
            } else {
                0.5 * (energy_total[j - 1] + energy_total[j])
            };
            if e_tilde[j] > 0.0 {
                let mut drift = 0.0;
                for g in 0..ng {
                    drift += (face_kappa(g, j) - kappa_r[j]) * flux[g * (nx + 1) + j];
                }
                eta[j] = drift / e_tilde[j];
            }
        }

        // Collapse the boundary closures with the adjacent-cell group
        // energies as weights so the summed closure relation is preserved.
        let collapse_side = |closures: &[BoundaryClosure], cell: usize, fallback: f64| {
            let mut f_in = 0.0;
            let mut weighted = 0.0;
            let mut weight = 0.0;
            for (g, cl) in closures.iter().enumerate() {
                f_in += cl.f_in;
                weighted += cl.ratio * energy[g * nx + cell];
                weight += energy[g * nx + cell];
            }
            let ratio = if weight > 0.0 { weighted / weight } else { fallback };
            BoundaryClosure { f_in, ratio }
        };
        let closure_l = collapse_side(closure_left, 0, -0.5);
        let closure_r = collapse_side(closure_right, nx - 1, 0.5);

        Self {
            kappa_e,
            kappa_b,
            emission_ratio,
            kappa_r,
            f_bar,
            eta,
            e_tilde,
            energy: energy_total,
            flux: flux_total,
            closure_left: closure_l,
            closure_right: closure_r,
        }
    }
}
