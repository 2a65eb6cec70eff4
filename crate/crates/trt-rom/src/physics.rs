//! Material model: spectral opacity, group-averaged opacity, Planck group
//! integrals, and the linear equation of state.
//!
//! Photon energies and temperatures are in keV, lengths in cm, times in ns,
//! energy densities in jerk/cm^3.

use std::sync::OnceLock;

use crate::grid::gauss_legendre;
use crate::{Error, Result, LIGHT_SPEED};

/// pi^4/15 = full dimensionless Planck integral over (0, inf).
pub const PLANCK_INTEGRAL_TOTAL: f64 = 6.493939402266829;

/// Photon-energy group boundaries in keV: strictly increasing, first >= 0,
/// last may be +inf (semi-infinite tail group).
#[derive(Debug, Clone)]
pub struct GroupStructure {
    boundaries: Vec<f64>,
}

impl GroupStructure {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::Config("group boundaries need at least 2 entries".into()));
        }
        if boundaries[0] < 0.0 || boundaries[0].is_nan() {
            return Err(Error::Config(format!(
                "first group boundary must be >= 0, got {}",
                boundaries[0]
            )));
        }
        for k in 1..boundaries.len() {
            if !(boundaries[k] > boundaries[k - 1]) {
                return Err(Error::Config(format!(
                    "group boundaries must be strictly increasing, got {} after {}",
                    boundaries[k],
                    boundaries[k - 1]
                )));
            }
            if boundaries[k].is_infinite() && k != boundaries.len() - 1 {
                return Err(Error::Config("only the last group boundary may be infinite".into()));
            }
        }
        let last = boundaries.len() - 1;
        if boundaries[last].is_infinite() && boundaries[last - 1] <= 0.0 {
            return Err(Error::Config(
                "a semi-infinite last group needs a positive lower boundary".into(),
            ));
        }
        Ok(Self { boundaries })
    }

    /// n_finite boundaries logarithmically spaced over [lo, hi] followed by a
    /// semi-infinite tail group [hi, inf).
    pub fn log_spaced_with_tail(lo: f64, hi: f64, n_finite: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!(
                "log-spaced group range needs 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n_finite < 2 {
            return Err(Error::Config("log-spaced groups need at least 2 boundaries".into()));
        }
        let ratio = hi / lo;
        let mut boundaries: Vec<f64> = (0..n_finite)
            .map(|i| lo * ratio.powf(i as f64 / (n_finite - 1) as f64))
            .collect();
        boundaries[n_finite - 1] = hi;
        boundaries.push(f64::INFINITY);
        Self::new(boundaries)
    }

    /// Default 17-group structure: 0.1 to 20 keV log-spaced (16 finite groups)
    /// plus the tail group [20, inf).
    pub fn default_17() -> Self {
        Self::log_spaced_with_tail(0.1, 20.0, 17).expect("default group structure is valid")
    }

    pub fn n_groups(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn bounds(&self, g: usize) -> (f64, f64) {
        (self.boundaries[g], self.boundaries[g + 1])
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }
}

/// Dimensionless Planck integral F(x) = int_0^x u^3/(e^u - 1) du, computed
/// from the exponential series F(x) = pi^4/15 - sum_k e^{-kx} (x^3/k
/// + 3 x^2/k^2 + 6 x/k^3 + 6/k^4). The truncation sits well below the
/// nonlinear iteration tolerances so emission stays smooth under them.
pub fn planck_integral(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "planck_integral needs x >= 0, got {x}");
    if x == 0.0 {
        return 0.0;
    }
    // e^{-kx} underflows past any relative threshold: the integral is total.
    if x >= 50.0 {
        return PLANCK_INTEGRAL_TOTAL;
    }
    let q = (-x).exp();
    let x2 = x * x;
    let x3 = x2 * x;
    let mut qk = 1.0;
    let mut tail = 0.0;
    for k in 1..=200_000u32 {
        qk *= q;
        let kf = k as f64;
        let term = qk * (((x3 * kf + 3.0 * x2) * kf + 6.0 * x) * kf + 6.0) / (kf * kf * kf * kf);
        tail += term;
        if term < 1e-14 * tail {
            break;
        }
    }
    PLANCK_INTEGRAL_TOTAL - tail
}

/// Group-integrated Planck intensities B_g(T) for every group, normalized so
/// that sum_g 4 pi B_g = c a_R T^4 when the groups span (0, inf). The sum
/// telescopes through per-boundary integrals, so the normalization is exact
/// for full-span structures regardless of series truncation.
pub fn planck_group_intensities(groups: &GroupStructure, t: f64, a_r: f64) -> Vec<f64> {
    debug_assert!(t > 0.0, "Planckian needs T > 0, got {t}");
    let scale = LIGHT_SPEED * a_r * t.powi(4) / (4.0 * std::f64::consts::PI) / PLANCK_INTEGRAL_TOTAL;
    let f: Vec<f64> = groups
        .boundaries()
        .iter()
        .map(|&b| if b.is_infinite() { PLANCK_INTEGRAL_TOTAL } else { planck_integral(b / t) })
        .collect();
    (0..groups.n_groups()).map(|g| scale * (f[g + 1] - f[g])).collect()
}

/// Isotropic equilibrium intensity level per group, 2 pi B_g(T): the fixed
/// point of emission = absorption in the transport equation.
pub fn equilibrium_intensities(groups: &GroupStructure, t: f64, a_r: f64) -> Vec<f64> {
    planck_group_intensities(groups, t, a_r)
        .into_iter()
        .map(|b| 2.0 * std::f64::consts::PI * b)
        .collect()
}

/// Equilibrium radiation energy density per group, 4 pi B_g / c; sums to
/// a_R T^4 times the group-structure Planck fraction.
pub fn equilibrium_energy_densities(groups: &GroupStructure, t: f64, a_r: f64) -> Vec<f64> {
    planck_group_intensities(groups, t, a_r)
        .into_iter()
        .map(|b| 4.0 * std::f64::consts::PI * b / LIGHT_SPEED)
        .collect()
}

/// Spectral opacity model kappa_nu(T) in 1/cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpacityModel {
    /// kappa = C / (h nu)^3 * (1 - e^{-h nu / T}): cold-limit C/(h nu)^3 with
    /// stimulated-emission-style temperature correction.
    PhotonEnergyCubed { coefficient: f64 },
    /// Temperature- and frequency-independent opacity (testing and limits).
    Constant(f64),
}

impl OpacityModel {
    /// Spectral opacity at photon energy hnu (keV) and temperature t (keV).
    /// The T -> 0 limit of the cubed law is C/(h nu)^3.
    pub fn spectral(&self, hnu: f64, t: f64) -> f64 {
        match *self {
            OpacityModel::PhotonEnergyCubed { coefficient } => {
                debug_assert!(hnu > 0.0, "spectral opacity needs h nu > 0");
                let correction = if t <= 0.0 { 1.0 } else { -(-hnu / t).exp_m1() };
                coefficient / (hnu * hnu * hnu) * correction
            }
            OpacityModel::Constant(k) => k,
        }
    }

    /// Planck-weighted group average kappa_g = int_g kappa B dnu / int_g B dnu
    /// with a fixed 16-point Gauss-Legendre rule per group. The semi-infinite
    /// tail group is mapped to (0, 1] by the substitution s = hnu_lo / hnu.
    pub fn group(&self, groups: &GroupStructure, g: usize, t: f64) -> f64 {
        if let OpacityModel::Constant(k) = *self {
            return k;
        }
        debug_assert!(t > 0.0, "group opacity needs T > 0, got {t}");
        let (lo, hi) = groups.bounds(g);
        let (nodes, weights) = gl16();
        // The weight is rescaled by e^{+lo/t}, the group's largest Planck
        // factor. The common factor cancels in the ratio, and the sums stay
        // in well-scaled arithmetic for cold cells where the raw Planckian
        // would move through denormals and quantize the average.
        let x_ref = lo / t;
        let mut num = 0.0;
        let mut den = 0.0;
        if hi.is_infinite() {
            // int_lo^inf f(h) dh = int_0^1 f(lo/s) lo/s^2 ds
            for k in 0..16 {
                let s = 0.5 * (nodes[k] + 1.0);
                let w = 0.5 * weights[k];
                let h = lo / s;
                let jac = lo / (s * s);
                let b = planck_shape_scaled(h, t, x_ref);
                num += w * jac * self.spectral(h, t) * b;
                den += w * jac * b;
            }
        } else {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for k in 0..16 {
                let h = mid + half * nodes[k];
                let w = half * weights[k];
                let b = planck_shape_scaled(h, t, x_ref);
                num += w * self.spectral(h, t) * b;
                den += w * b;
            }
        }
        if den == 0.0 {
            // The Planckian decays across the group faster than the scaled
            // weights can resolve: the average concentrates at the lower
            // edge, the largest opacity.
            return self.spectral(if lo > 0.0 { lo } else { hi.min(1.0) }, t);
        }
        num / den
    }

    /// Group averages for all groups at one temperature.
    pub fn groups(&self, groups: &GroupStructure, t: f64) -> Vec<f64> {
        (0..groups.n_groups()).map(|g| self.group(groups, g, t)).collect()
    }
}

/// Planck spectral shape (h nu)^3 / (e^{h nu / T} - 1) rescaled by e^{x_ref},
/// x_ref <= h nu / T. Callers pick one x_ref per weighted integral so ratios
/// of these stay fully resolved however cold the material is.
fn planck_shape_scaled(hnu: f64, t: f64, x_ref: f64) -> f64 {
    let x = hnu / t;
    let cubed = hnu * hnu * hnu;
    cubed * (x_ref - x).exp() / -(-x).exp_m1()
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Per-cell group opacities and Planck intensities evaluated at a
/// temperature field; the shared material input of the transport sweep, the
/// low-order solvers, and the energy-balance update.
#[derive(Debug, Clone)]
pub struct MaterialFields {
    n_cells: usize,
    n_groups: usize,
    /// kappa_g(T_i), group-major [g * n_cells + i].
    kappa: Vec<f64>,
    /// B_g(T_i), group-major.
    planck: Vec<f64>,
}

impl MaterialFields {
    pub fn evaluate(
        groups: &GroupStructure,
        model: &OpacityModel,
        a_r: f64,
        t_field: &[f64],
    ) -> Self {
        let n_cells = t_field.len();
        let n_groups = groups.n_groups();
        let mut kappa = vec![0.0; n_groups * n_cells];
        let mut planck = vec![0.0; n_groups * n_cells];
        for (i, &t) in t_field.iter().enumerate() {
            let b = planck_group_intensities(groups, t, a_r);
            for g in 0..n_groups {
                kappa[g * n_cells + i] = model.group(groups, g, t);
                planck[g * n_cells + i] = b[g];
            }
        }
        Self { n_cells, n_groups, kappa, planck }
    }

    /// Injects raw group-major kappa and Planck tables; lets tests pin
    /// averaging kernels with exact rational inputs.
    #[cfg(test)]
    pub(crate) fn from_raw(
        n_groups: usize,
        n_cells: usize,
        kappa: Vec<f64>,
        planck: Vec<f64>,
    ) -> Self {
        assert_eq!(kappa.len(), n_groups * n_cells);
        assert_eq!(planck.len(), n_groups * n_cells);
        Self { n_cells, n_groups, kappa, planck }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    #[inline]
    pub fn kappa(&self, g: usize, i: usize) -> f64 {
        self.kappa[g * self.n_cells + i]
    }

    #[inline]
    pub fn planck(&self, g: usize, i: usize) -> f64 {
        self.planck[g * self.n_cells + i]
    }

    /// Isotropic emission source 2 pi kappa_g B_g per corner unknown.
    #[inline]
    pub fn emission(&self, g: usize, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.kappa(g, i) * self.planck(g, i)
    }

    /// sum_g kappa_g B_g at cell i (grey emission weight).
    pub fn kappa_planck_sum(&self, i: usize) -> f64 {
        (0..self.n_groups).map(|g| self.kappa(g, i) * self.planck(g, i)).sum()
    }

    /// sum_g B_g at cell i.
    pub fn planck_sum(&self, i: usize) -> f64 {
        (0..self.n_groups).map(|g| self.planck(g, i)).sum()
    }
}

/// Linear equation of state: material energy density eps = c_v T with
/// constant heat capacity c_v (jerk/cm^3/keV).
#[derive(Debug, Clone, Copy)]
pub struct Eos {
    cv: f64,
}

impl Eos {
    pub fn linear(cv: f64) -> Result<Self> {
        if !(cv > 0.0) || !cv.is_finite() {
            return Err(Error::Config(format!("heat capacity must be positive, got {cv}")));
        }
        Ok(Self { cv })
    }

    pub fn heat_capacity(&self) -> f64 {
        self.cv
    }

    pub fn energy_density(&self, t: f64) -> f64 {
        self.cv * t
    }

    pub fn temperature(&self, eps: f64) -> f64 {
        eps / self.cv
    }
}
