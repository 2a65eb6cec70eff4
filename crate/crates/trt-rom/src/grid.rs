//! Slab mesh, angular quadrature, time grid, and phase-space layout.

use crate::{Error, Result};

/// Corners per cell in the corner-balance spatial discretization.
pub const CORNERS: usize = 2;

/// Uniform partition of the slab [0, X].
#[derive(Debug, Clone)]
pub struct SpatialMesh {
    length: f64,
    widths: Vec<f64>,
    faces: Vec<f64>,
}

impl SpatialMesh {
    pub fn uniform(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!(
                "domain_length must be positive and finite, got {length}"
            )));
        }
        if cells == 0 {
            return Err(Error::Config("cells must be at least 1".into()));
        }
        let dx = length / cells as f64;
        let widths = vec![dx; cells];
        let faces = (0..=cells).map(|j| j as f64 * dx).collect();
        Ok(Self { length, widths, faces })
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self, i: usize) -> f64 {
        self.widths[i]
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Position of face j, j in 0..=n_cells.
    pub fn face(&self, j: usize) -> f64 {
        self.faces[j]
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.faces[i] + self.faces[i + 1])
    }

    /// Distance between adjacent cell centers, used in face-difference
    /// stencils; j must be an interior face (1..n_cells).
    pub fn face_span(&self, j: usize) -> f64 {
        0.5 * (self.widths[j - 1] + self.widths[j])
    }
}

/// Double Gauss-Legendre quadrature on [-1, 1]: an n-point Gauss-Legendre
/// rule mapped onto each half-range. Weights sum to 2; directions are stored
/// in ascending order of mu, negatives first.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    mu: Vec<f64>,
    w: Vec<f64>,
}

impl AngularQuadrature {
    pub fn double_gauss_legendre(n_per_half: usize) -> Result<Self> {
        if n_per_half == 0 {
            return Err(Error::Config("quadrature order must be at least 1 per half-range".into()));
        }
        let (nodes, weights) = gauss_legendre(n_per_half);
        let mut mu = Vec::with_capacity(2 * n_per_half);
        let mut w = Vec::with_capacity(2 * n_per_half);
        // Map x in [-1,1] to mu = (1+x)/2 in [0,1]; half-range weights w/2 sum to 1.
        for k in (0..n_per_half).rev() {
            mu.push(-(1.0 + nodes[k]) / 2.0);
            w.push(weights[k] / 2.0);
        }
        for k in 0..n_per_half {
            mu.push((1.0 + nodes[k]) / 2.0);
            w.push(weights[k] / 2.0);
        }
        Ok(Self { mu, w })
    }

    pub fn n_dirs(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self, m: usize) -> f64 {
        self.mu[m]
    }

    pub fn weight(&self, m: usize) -> f64 {
        self.w[m]
    }

    pub fn directions(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.mu.len()).map(|m| (m, self.mu[m], self.w[m]))
    }
}

/// Nodes (ascending) and weights of the n-point Gauss-Legendre rule on [-1,1],
/// by Newton iteration on the Legendre polynomial.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Standard initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Uniform backward-Euler time grid with stage windows for snapshot
/// partitioning. Stage boundaries must coincide with step edges.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
    /// Last step index (1-based, inclusive) of each stage; final entry = n_steps.
    stage_end_steps: Vec<usize>,
}

/// Tolerance (ns) for matching stage boundaries and the end time to step edges.
const EDGE_TOLERANCE: f64 = 1e-12;

impl TimeGrid {
    pub fn new(dt: f64, t_end: f64, stage_bounds: &[f64]) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive and finite, got {dt}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive and finite, got {t_end}")));
        }
        let n_steps = (t_end / dt).round() as usize;
        if n_steps == 0 || (n_steps as f64 * dt - t_end).abs() > EDGE_TOLERANCE {
            return Err(Error::Config(format!(
                "t_end = {t_end} is not a whole number of steps of dt = {dt}"
            )));
        }
        let mut stage_end_steps = Vec::new();
        let mut prev = 0usize;
        for &b in stage_bounds {
            let n = (b / dt).round() as usize;
            if (n as f64 * dt - b).abs() > EDGE_TOLERANCE {
                return Err(Error::Config(format!(
                    "stage boundary {b} ns does not align with a step edge (dt = {dt} ns)"
                )));
            }
            if n <= prev || n >= n_steps {
                return Err(Error::Config(format!(
                    "stage boundary {b} ns must be strictly inside (0, t_end) and ascending"
                )));
            }
            stage_end_steps.push(n);
            prev = n;
        }
        stage_end_steps.push(n_steps);
        Ok(Self { dt, n_steps, stage_end_steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Time at the end of step n (n = 0 is the initial time).
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn n_stages(&self) -> usize {
        self.stage_end_steps.len()
    }

    /// Stage index of step n (1-based step).
    pub fn stage_of_step(&self, n: usize) -> usize {
        debug_assert!(n >= 1 && n <= self.n_steps);
        self.stage_end_steps.iter().position(|&e| n <= e).expect("step within grid")
    }

    /// 1-based inclusive step range [first, last] of stage s.
    pub fn stage_steps(&self, s: usize) -> (usize, usize) {
        let first = if s == 0 { 1 } else { self.stage_end_steps[s - 1] + 1 };
        (first, self.stage_end_steps[s])
    }
}

/// Flat indexing of the phase-space vector: group-major, then angle, then
/// cell, then corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSpaceLayout {
    pub n_groups: usize,
    pub n_dirs: usize,
    pub n_cells: usize,
}

impl PhaseSpaceLayout {
    pub fn new(n_groups: usize, n_dirs: usize, n_cells: usize) -> Self {
        Self { n_groups, n_dirs, n_cells }
    }

    /// Total number of unknowns D = Ng * Nmu * Nx * 2.
    pub fn len(&self) -> usize {
        self.n_groups * self.n_dirs * self.n_cells * CORNERS
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn flat_index(&self, g: usize, m: usize, i: usize, corner: usize) -> usize {
        debug_assert!(g < self.n_groups && m < self.n_dirs && i < self.n_cells && corner < CORNERS);
        ((g * self.n_dirs + m) * self.n_cells + i) * CORNERS + corner
    }

    /// Inverse of flat_index: (group, direction, cell, corner).
    pub fn unflatten(&self, e: usize) -> (usize, usize, usize, usize) {
        let corner = e % CORNERS;
        let rest = e / CORNERS;
        let i = rest % self.n_cells;
        let rest = rest / self.n_cells;
        let m = rest % self.n_dirs;
        let g = rest / self.n_dirs;
        (g, m, i, corner)
    }

    /// Diagonal of the phase-space inner-product weight W: entry w_m * dx_i / 2
    /// for every (group, direction, cell, corner). Its trace is Ng * 2 * X.
    pub fn weight_diagonal(&self, mesh: &SpatialMesh, quad: &AngularQuadrature) -> Vec<f64> {
        assert_eq!(mesh.n_cells(), self.n_cells, "mesh does not match layout");
        assert_eq!(quad.n_dirs(), self.n_dirs, "quadrature does not match layout");
        let mut w = vec![0.0; self.len()];
        for g in 0..self.n_groups {
            for m in 0..self.n_dirs {
                for i in 0..self.n_cells {
                    let v = quad.weight(m) * mesh.width(i) / 2.0;
                    for corner in 0..CORNERS {
                        w[self.flat_index(g, m, i, corner)] = v;
                    }
                }
            }
        }
        w
    }
}

/// Weighted inner product <a, b>_W = sum_e W_e a_e b_e.
pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), a.len());
    debug_assert_eq!(w.len(), b.len());
    let mut s = 0.0;
    for e in 0..w.len() {
        s += w[e] * a[e] * b[e];
    }
    s
}

/// Weighted norm ||a||_W.
pub fn weighted_norm(w: &[f64], a: &[f64]) -> f64 {
    weighted_dot(w, a, a).sqrt()
}
