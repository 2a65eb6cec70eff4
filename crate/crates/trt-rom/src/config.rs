//! Run configuration files: a small sectioned key = value format.
//!
//! Every field defaults to the benchmark problem, so an empty file is a
//! valid configuration and a file overrides only what it names. Unknown
//! sections, unknown keys, and malformed values are reported with the line
//! number and the offending key rather than silently ignored.

use std::path::{Path, PathBuf};

use crate::baselines::BaselineKind;
use crate::fom::{IterationControl, Problem};
use crate::grid::{AngularQuadrature, SpatialMesh, TimeGrid};
use crate::physics::{Eos, GroupStructure, OpacityModel};
use crate::transport::BoundarySpec;
use crate::{Error, Result, RADIATION_CONSTANT};

/// Everything a command-line run needs, resolved against defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    // [problem]
    pub slab_length: f64,
    pub n_cells: usize,
    pub n_angles_per_half: usize,
    /// Explicit group edges; None selects the default 17-group structure.
    /// The final edge may be `inf` for an open tail group.
    pub group_edges: Option<Vec<f64>>,
    pub drive_temperature: f64,
    pub initial_temperature: f64,
    pub opacity_coefficient: f64,
    /// Explicit heat capacity; None ties it to the drive temperature the way
    /// the benchmark does.
    pub heat_capacity: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub stage_splits: Vec<f64>,
    // [iteration]
    pub tol_temperature: f64,
    pub tol_energy: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    // [rom]
    pub epsilon: f64,
    // [baseline]
    pub model: BaselineKind,
    // [output]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let control = IterationControl::default();
        Self {
            slab_length: 6.0,
            n_cells: 60,
            n_angles_per_half: 4,
            group_edges: None,
            drive_temperature: 1.0,
            initial_temperature: 1e-3,
            opacity_coefficient: 27.0,
            heat_capacity: None,
            dt: 0.02,
            t_end: 6.0,
            stage_splits: vec![0.3, 1.2],
            tol_temperature: control.tol_temperature,
            tol_energy: control.tol_energy,
            max_outer: control.max_outer,
            max_inner: control.max_inner,
            epsilon: 1e-5,
            model: BaselineKind::P1,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::Config(format!("line {line_no}: unterminated section")));
                };
                section = name.trim().to_string();
                if !matches!(
                    section.as_str(),
                    "problem" | "iteration" | "rom" | "baseline" | "output"
                ) {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown section [{section}]"
                    )));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line_no}: expected key = value, got {line:?}"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(Error::Config(format!(
                    "line {line_no}: key {key:?} appears before any section"
                )));
            }
            cfg.apply(&section, key, value)
                .map_err(|e| Error::Config(format!("line {line_no}: {e}")))?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let bad = |what: &str| format!("key {key:?}: cannot parse {value:?} as {what}");
        let float = |v: &str| v.parse::<f64>().map_err(|_| bad("a number"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| bad("a count"));
        match (section, key) {
            ("problem", "slab_length") => self.slab_length = float(value)?,
            ("problem", "n_cells") => self.n_cells = count(value)?,
            ("problem", "n_angles_per_half") => self.n_angles_per_half = count(value)?,
            ("problem", "group_edges") => {
                let mut edges = Vec::new();
                for part in value.split(',') {
                    let part = part.trim();
                    if part.eq_ignore_ascii_case("inf") {
                        edges.push(f64::INFINITY);
                    } else {
                        edges.push(float(part)?);
                    }
                }
                self.group_edges = Some(edges);
            }
            ("problem", "drive_temperature") => self.drive_temperature = float(value)?,
            ("problem", "initial_temperature") => self.initial_temperature = float(value)?,
            ("problem", "opacity_coefficient") => self.opacity_coefficient = float(value)?,
            ("problem", "heat_capacity") => self.heat_capacity = Some(float(value)?),
            ("problem", "dt") => self.dt = float(value)?,
            ("problem", "t_end") => self.t_end = float(value)?,
            ("problem", "stage_splits") => {
                self.stage_splits = value
                    .split(',')
                    .map(|p| float(p.trim()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            ("iteration", "tol_temperature") => self.tol_temperature = float(value)?,
            ("iteration", "tol_energy") => self.tol_energy = float(value)?,
            ("iteration", "max_outer") => self.max_outer = count(value)?,
            ("iteration", "max_inner") => self.max_inner = count(value)?,
            ("rom", "epsilon") => self.epsilon = float(value)?,
            ("baseline", "model") => {
                self.model = BaselineKind::parse(value)
                    .ok_or_else(|| format!("key {key:?}: unknown model {value:?}"))?;
            }
            ("output", "dir") => self.out_dir = PathBuf::from(value),
            _ => return Err(format!("unknown key {key:?} in section [{section}]")),
        }
        Ok(())
    }

    /// Materialize the problem this configuration describes.
    pub fn problem(&self) -> Result<Problem> {
        let groups = match &self.group_edges {
            Some(edges) => GroupStructure::new(edges.clone())?,
            None => GroupStructure::default_17(),
        };
        let a_r = RADIATION_CONSTANT;
        let cv = self
            .heat_capacity
            .unwrap_or(0.5917 * a_r * self.drive_temperature.powi(3));
        Ok(Problem {
            mesh: SpatialMesh::uniform(self.slab_length, self.n_cells)?,
            quad: AngularQuadrature::double_gauss_legendre(self.n_angles_per_half)?,
            bc: BoundarySpec::blackbody_vacuum(&groups, self.drive_temperature, a_r),
            groups,
            opacity: OpacityModel::PhotonEnergyCubed { coefficient: self.opacity_coefficient },
            eos: Eos::linear(cv)?,
            a_r,
            t_initial: self.initial_temperature,
            time: TimeGrid::new(self.dt, self.t_end, &self.stage_splits)?,
        })
    }

    pub fn control(&self) -> IterationControl {
        IterationControl {
            tol_temperature: self.tol_temperature,
            tol_energy: self.tol_energy,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_benchmark() {
        let cfg = RunConfig::parse("").unwrap();
        let p = cfg.problem().unwrap();
        let reference = Problem::benchmark().unwrap();
        assert_eq!(p.mesh.n_cells(), reference.mesh.n_cells());
        assert_eq!(p.groups.n_groups(), reference.groups.n_groups());
        assert_eq!(p.time.n_steps(), reference.time.n_steps());
        assert_eq!(p.time.n_stages(), 3);
        assert_eq!(cfg.epsilon, 1e-5);
    }

    #[test]
    fn overrides_land_where_they_point() {
        let text = "
# a scaled-down run
[problem]
slab_length = 2.0
n_cells = 10        # trailing comment
group_edges = 0.2, 1.0, inf
dt = 0.01
t_end = 0.1
stage_splits = 0.05
heat_capacity = 0.4

[iteration]
max_outer = 7

[rom]
epsilon = 1e-3

[baseline]
model = fld

[output]
dir = scratch/run1
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.n_cells, 10);
        assert_eq!(cfg.group_edges.as_deref(), Some(&[0.2, 1.0, f64::INFINITY][..]));
        assert_eq!(cfg.max_outer, 7);
        assert_eq!(cfg.epsilon, 1e-3);
        assert_eq!(cfg.model, BaselineKind::FluxLimited);
        assert_eq!(cfg.out_dir, PathBuf::from("scratch/run1"));
        let p = cfg.problem().unwrap();
        assert_eq!(p.groups.n_groups(), 2);
        assert_eq!(p.time.n_steps(), 10);
        assert_eq!(p.time.n_stages(), 2);
        assert_eq!(p.eos.heat_capacity(), 0.4);
    }

    #[test]
    fn errors_carry_the_line_and_key() {
        let e = RunConfig::parse("[problem]\nn_cells = sixty").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("n_cells"), "{msg}");

        let e = RunConfig::parse("[problem]\nwavelength = 3").unwrap_err();
        assert!(e.to_string().contains("wavelength"), "{e}");

        let e = RunConfig::parse("[mystery]\n").unwrap_err();
        assert!(e.to_string().contains("mystery"), "{e}");

        let e = RunConfig::parse("n_cells = 3").unwrap_err();
        assert!(e.to_string().contains("before any section"), "{e}");

        let e = RunConfig::parse("[baseline]\nmodel = p2").unwrap_err();
        assert!(e.to_string().contains("p2"), "{e}");
    }
}
