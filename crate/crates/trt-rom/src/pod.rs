//! Weighted proper orthogonal decomposition of intensity snapshots.
//!
//! Snapshots are columns of a matrix A. The basis is the left singular family
//! of W^{1/2} A D^{1/2}, pulled back by W^{-1/2}: W is the diagonal
//! phase-space inner product (angular weight times half cell width per corner
//! unknown) and D holds one positive weight per snapshot (its time step
//! width). The returned modes are W-orthonormal, so Galerkin projection under
//! W needs no extra mass matrix.

use nalgebra::DMatrix;

use crate::fom::Problem;
use crate::grid::weighted_dot;
use crate::{Error, Result};

/// W-orthonormal snapshot basis with its singular spectrum.
#[derive(Debug, Clone)]
pub struct PodBasis {
    n_dof: usize,
    rank: usize,
    /// Column-major mode table, n_dof x rank.
    modes: Vec<f64>,
    /// Singular values of the weighted snapshot matrix, descending, one per
    /// retained mode.
    singular_values: Vec<f64>,
}

impl PodBasis {
    /// Rebuild a basis from stored parts (the on-disk readers use this).
    pub(crate) fn from_parts(
        n_dof: usize,
        modes: Vec<f64>,
        singular_values: Vec<f64>,
    ) -> Result<Self> {
        let rank = singular_values.len();
        if modes.len() != n_dof * rank {
            return Err(Error::Format(format!(
                "mode table holds {} values, expected {} x {}",
                modes.len(),
                n_dof,
                rank
            )));
        }
        Ok(Self { n_dof, rank, modes, singular_values })
    }

    /// Phase-space length of each mode.
    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Number of retained modes: every strictly positive singular value of
    /// the weighted snapshot matrix keeps its mode.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Mode k as a contiguous slice.
    pub fn mode(&self, k: usize) -> &[f64] {
        assert!(k < self.rank, "mode {k} out of range (rank {})", self.rank);
        &self.modes[k * self.n_dof..(k + 1) * self.n_dof]
    }

    /// Expand reduced coordinates into a phase-space vector: sum_k c_k U_k.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        assert!(coords.len() <= self.rank, "more coordinates than modes");
        let mut out = vec![0.0; self.n_dof];
        for (k, &c) in coords.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &u) in out.iter_mut().zip(self.mode(k)) {
                *o += c * u;
            }
        }
        out
    }

    /// W-orthogonal projection of a phase-space vector onto the leading r
    /// modes: coords_k = <U_k, v>_W.
    pub fn project(&self, weights: &[f64], v: &[f64], r: usize) -> Vec<f64> {
        assert!(r <= self.rank, "rank {r} exceeds basis rank {}", self.rank);
        (0..r).map(|k| weighted_dot(weights, self.mode(k), v)).collect()
    }
}

/// Build the weighted basis from snapshot columns.
///
/// `weights` is the diagonal of W (one entry per phase-space unknown) and
/// `snapshot_weights` one positive scalar per snapshot. Every strictly
/// positive singular value is retained, so the rank generically equals the
/// column count; late modes carry solver noise and it is the caller's job to
/// pick a working rank through `select_rank`. Dropping them here would make
/// deep tolerances unreachable: the noise tail is exactly what a rank sweep
/// down to machine precision has to see. Each mode's largest-magnitude entry
/// is made positive so the decomposition is reproducible run to run.
pub fn build_basis(
    snapshots: &[Vec<f64>],
    weights: &[f64],
    snapshot_weights: &[f64],
) -> Result<PodBasis> {
    let n = snapshots.len();
    if n == 0 {
        return Err(Error::Numerical("basis needs at least one snapshot".into()));
    }
    let d = weights.len();
    if snapshot_weights.len() != n {
        return Err(Error::Numerical(format!(
            "{} snapshots but {} snapshot weights",
            n,
            snapshot_weights.len()
        )));
    }
    for (j, col) in snapshots.iter().enumerate() {
        if col.len() != d {
            return Err(Error::Numerical(format!(
                "snapshot {} has length {}, weight diagonal has {}",
                j,
                col.len(),
                d
            )));
        }
    }
    if weights.iter().any(|&w| !(w > 0.0)) || snapshot_weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Numerical("inner-product weights must be positive".into()));
    }

    let root_w: Vec<f64> = weights.iter().map(|&w| w.sqrt()).collect();
    let mut scaled = DMatrix::<f64>::zeros(d, n);
    for (j, col) in snapshots.iter().enumerate() {
        let root_dt = snapshot_weights[j].sqrt();
        for (e, &v) in col.iter().enumerate() {
            scaled[(e, j)] = root_w[e] * v * root_dt;
        }
    }

    let svd = scaled.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let sigma_max = svd.singular_values[order[0]];
    if !(sigma_max > 0.0) {
        return Err(Error::Numerical("snapshot matrix is zero".into()));
    }

    let mut modes = Vec::new();
    let mut singular_values = Vec::new();
    for &k in &order {
        let sigma = svd.singular_values[k];
        if sigma <= 0.0 {
            break;
        }
        let start = modes.len();
        modes.extend(u.column(k).iter().zip(root_w.iter()).map(|(&v, &rw)| v / rw));
        let column = &mut modes[start..];
        let mut lead = 0;
        for (e, v) in column.iter().enumerate() {
            if v.abs() > column[lead].abs() {
                lead = e;
            }
        }
        if column[lead] < 0.0 {
            for v in column.iter_mut() {
                *v = -*v;
            }
        }
        singular_values.push(sigma);
    }
    let rank = singular_values.len();
    Ok(PodBasis { n_dof: d, rank, modes, singular_values })
}

/// One basis per time stage from a full-order snapshot sequence (snapshot j
/// is the converged intensity of step j + 1). Snapshot weights are the step
/// widths; the phase-space weight diagonal comes from the problem grids.
pub fn stage_bases(problem: &Problem, snapshots: &[Vec<f64>]) -> Result<Vec<PodBasis>> {
    if snapshots.len() != problem.time.n_steps() {
        return Err(Error::Numerical(format!(
            "{} snapshots for a grid of {} steps",
            snapshots.len(),
            problem.time.n_steps()
        )));
    }
    let layout = crate::grid::PhaseSpaceLayout::new(
        problem.groups.n_groups(),
        problem.quad.n_dirs(),
        problem.mesh.n_cells(),
    );
    let weights = layout.weight_diagonal(&problem.mesh, &problem.quad);
    let dt = problem.time.dt();
    (0..problem.time.n_stages())
        .map(|s| {
            let (first, last) = problem.time.stage_steps(s);
            let cols = &snapshots[first - 1..last];
            build_basis(cols, &weights, &vec![dt; cols.len()])
        })
        .collect()
}

/// Smallest rank whose discarded singular tail falls below `epsilon` in the
/// relative root-sum-square sense; at least one mode is always kept.
pub fn select_rank(singular_values: &[f64], epsilon: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return singular_values.len().min(1);
    }
    let budget = epsilon * epsilon * total;
    let mut tail = 0.0;
    // tail(r) = sum of squares of the modes r.. ; scan from the back.
    let mut rank = singular_values.len();
    for (r, s) in singular_values.iter().enumerate().rev() {
        let with = tail + s * s;
        if with <= budget {
            tail = with;
            rank = r;
        } else {
            break;
        }
    }
    rank.max(1)
}
