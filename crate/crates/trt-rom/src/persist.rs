//! On-disk formats: a binary container for phase-space matrices and the CSV
//! tables downstream plotting reads.
//!
//! The binary container stores snapshot sets and bases with the full problem
//! fingerprint baked in, so a file produced under one discretization or
//! drive cannot be silently consumed under another. CSV numbers are written
//! with Rust's shortest round-trip formatting: reading a column back yields
//! bit-identical values.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use crate::baselines::BaselineResult;
use crate::fom::{FomResult, Problem};
use crate::grid::{SpatialMesh, CORNERS};
use crate::physics::OpacityModel;
use crate::pod::PodBasis;
use crate::rom::RomResult;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"TRTROM01";
const KIND_SNAPSHOTS: i64 = 0;
const KIND_BASIS: i64 = 1;

/// FNV-1a 64-bit running hash.
fn fnv(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(0x100000001b3);
    }
}

fn fnv_f64(hash: &mut u64, v: f64) {
    fnv(hash, &v.to_bits().to_le_bytes());
}

fn fnv_u64(hash: &mut u64, v: u64) {
    fnv(hash, &v.to_le_bytes());
}

/// Identity of a problem for file compatibility: discretization, time grid,
/// material model, and boundary drive. Two problems with equal fingerprints
/// produce interchangeable snapshot and basis files.
pub fn problem_fingerprint(problem: &Problem) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    fnv(&mut h, b"geometry");
    fnv_u64(&mut h, problem.groups.n_groups() as u64);
    fnv_u64(&mut h, problem.quad.n_dirs() as u64);
    fnv_u64(&mut h, problem.mesh.n_cells() as u64);
    fnv_u64(&mut h, CORNERS as u64);
    for &w in problem.mesh.widths() {
        fnv_f64(&mut h, w);
    }
    for m in 0..problem.quad.n_dirs() {
        fnv_f64(&mut h, problem.quad.mu(m));
        fnv_f64(&mut h, problem.quad.weight(m));
    }
    for &b in problem.groups.boundaries() {
        fnv_f64(&mut h, b);
    }
    fnv(&mut h, b"time");
    fnv_f64(&mut h, problem.time.dt());
    fnv_u64(&mut h, problem.time.n_steps() as u64);
    fnv_u64(&mut h, problem.time.n_stages() as u64);
    for s in 0..problem.time.n_stages() {
        fnv_u64(&mut h, problem.time.stage_steps(s).1 as u64);
    }
    fnv(&mut h, b"material");
    match problem.opacity {
        OpacityModel::PhotonEnergyCubed { coefficient } => {
            fnv_u64(&mut h, 0);
            fnv_f64(&mut h, coefficient);
        }
        OpacityModel::Constant(v) => {
            fnv_u64(&mut h, 1);
            fnv_f64(&mut h, v);
        }
    }
    fnv_f64(&mut h, problem.eos.heat_capacity());
    fnv_f64(&mut h, problem.a_r);
    fnv_f64(&mut h, problem.t_initial);
    fnv(&mut h, b"drive");
    for g in 0..problem.groups.n_groups() {
        fnv_f64(&mut h, problem.bc.left(g));
        fnv_f64(&mut h, problem.bc.right(g));
    }
    h
}

fn write_container(
    path: &Path,
    problem: &Problem,
    kind: i64,
    stage: i64,
    column_scalars: &[f64],
    columns: impl Iterator<Item = f64>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    for v in [
        kind,
        problem.groups.n_groups() as i64,
        problem.quad.n_dirs() as i64,
        problem.mesh.n_cells() as i64,
        CORNERS as i64,
        column_scalars.len() as i64,
        stage,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&problem_fingerprint(problem).to_le_bytes())?;
    for &s in column_scalars {
        out.write_all(&s.to_le_bytes())?;
    }
    for v in columns {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed container header plus borrowed payload bytes.
struct Container<'a> {
    kind: i64,
    n_columns: usize,
    stage: i64,
    column_scalars: Vec<f64>,
    payload: &'a [u8],
    n_dof: usize,
}

/// Read a whole input file, naming it in any failure. A missing file gets
/// the configuration exit path: it means the producing step never ran.
fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Config(format!(
                "{}: not found (run the step that produces it first)",
                path.display()
            ))
        } else {
            Error::Format(format!("{}: {e}", path.display()))
        }
    })
}

fn read_word(bytes: &[u8], at: &mut usize) -> Option<[u8; 8]> {
    let end = *at + 8;
    let word = bytes.get(*at..end)?.try_into().ok()?;
    *at = end;
    Some(word)
}

fn parse_container<'a>(bytes: &'a [u8], path: &Path, problem: &Problem) -> Result<Container<'a>> {
    let whine = |what: &str| Error::Format(format!("{}: {what}", path.display()));
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(whine("not a phase-space container (bad magic)"));
    }
    let mut at = 8;
    let mut header = [0i64; 7];
    for slot in &mut header {
        *slot = i64::from_le_bytes(read_word(bytes, &mut at).ok_or_else(|| whine("truncated header"))?);
    }
    let [kind, n_groups, n_dirs, n_cells, corners, n_columns, stage] = header;
    let dims_ok = n_groups == problem.groups.n_groups() as i64
        && n_dirs == problem.quad.n_dirs() as i64
        && n_cells == problem.mesh.n_cells() as i64
        && corners == CORNERS as i64;
    if !dims_ok {
        return Err(whine(&format!(
            "phase space {n_groups}g x {n_dirs}d x {n_cells}c x {corners} does not match the problem"
        )));
    }
    if n_columns < 0 {
        return Err(whine("negative column count"));
    }
    let fingerprint =
        u64::from_le_bytes(read_word(bytes, &mut at).ok_or_else(|| whine("truncated header"))?);
    if fingerprint != problem_fingerprint(problem) {
        return Err(whine(
            "file was produced under a different problem (fingerprint mismatch)",
        ));
    }
    let n_columns = n_columns as usize;
    let n_dof = problem.groups.n_groups() * problem.quad.n_dirs() * problem.mesh.n_cells() * CORNERS;
    let scalars_end = at + 8 * n_columns;
    let payload_end = scalars_end + 8 * n_dof * n_columns;
    if payload_end != bytes.len() {
        return Err(whine(&format!(
            "expected {} bytes of data, found {}",
            payload_end,
            bytes.len()
        )));
    }
    let column_scalars = bytes[at..scalars_end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Container {
        kind,
        n_columns,
        stage,
        column_scalars,
        payload: &bytes[scalars_end..payload_end],
        n_dof,
    })
}

fn payload_column(c: &Container, j: usize) -> Vec<f64> {
    c.payload[8 * j * c.n_dof..8 * (j + 1) * c.n_dof]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

/// Store converged per-step intensities (one column per time step).
pub fn write_snapshots(path: &Path, problem: &Problem, snapshots: &[Vec<f64>]) -> Result<()> {
    if snapshots.len() != problem.time.n_steps() {
        return Err(Error::Format(format!(
            "{} snapshots for {} steps",
            snapshots.len(),
            problem.time.n_steps()
        )));
    }
    let scalars = vec![problem.time.dt(); snapshots.len()];
    write_container(
        path,
        problem,
        KIND_SNAPSHOTS,
        -1,
        &scalars,
        snapshots.iter().flat_map(|s| s.iter().copied()),
    )
}

pub fn read_snapshots(path: &Path, problem: &Problem) -> Result<Vec<Vec<f64>>> {
    let bytes = read_input(path)?;
    let c = parse_container(&bytes, path, problem)?;
    if c.kind != KIND_SNAPSHOTS {
        return Err(Error::Format(format!(
            "{}: expected a snapshot set, found kind {}",
            path.display(),
            c.kind
        )));
    }
    if c.n_columns != problem.time.n_steps() {
        return Err(Error::Format(format!(
            "{}: {} snapshot columns for {} steps",
            path.display(),
            c.n_columns,
            problem.time.n_steps()
        )));
    }
    Ok((0..c.n_columns).map(|j| payload_column(&c, j)).collect())
}

/// Store one stage's basis (modes as columns, singular values as scalars).
pub fn write_basis(path: &Path, problem: &Problem, stage: usize, basis: &PodBasis) -> Result<()> {
    write_container(
        path,
        problem,
        KIND_BASIS,
        stage as i64,
        basis.singular_values(),
        (0..basis.rank()).flat_map(|k| basis.mode(k).iter().copied()),
    )
}

pub fn read_basis(path: &Path, problem: &Problem, stage: usize) -> Result<PodBasis> {
    let bytes = read_input(path)?;
    let c = parse_container(&bytes, path, problem)?;
    if c.kind != KIND_BASIS {
        return Err(Error::Format(format!(
            "{}: expected a basis, found kind {}",
            path.display(),
            c.kind
        )));
    }
    if c.stage != stage as i64 {
        return Err(Error::Format(format!(
            "{}: basis is for stage {}, expected stage {stage}",
            path.display(),
            c.stage
        )));
    }
    let mut modes = Vec::with_capacity(c.n_dof * c.n_columns);
    for j in 0..c.n_columns {
        modes.extend(payload_column(&c, j));
    }
    PodBasis::from_parts(c.n_dof, modes, c.column_scalars)
}

/// Conventional per-stage basis file name.
pub fn basis_file_name(stage: usize) -> String {
    format!("basis_stage{stage}.bin")
}

/// One line of the iteration history table.
#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub step: usize,
    pub time: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub balance_residual: f64,
    pub negative_count: usize,
    pub wall_ms: f64,
}

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "step,time,outer_iters,inner_iters_total,balance_residual,negative_count,wall_ms"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step, r.time, r.outer_iters, r.inner_iters_total, r.balance_residual,
            r.negative_count, r.wall_ms
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn history_rows_fom(result: &FomResult) -> Vec<HistoryRow> {
    result
        .records
        .iter()
        .map(|r| HistoryRow {
            step: r.step,
            time: r.time,
            outer_iters: r.outer_iters,
            inner_iters_total: r.inner_iters_total,
            balance_residual: r.balance_residual,
            negative_count: r.negative_count,
            wall_ms: r.wall_ms,
        })
        .collect()
}

pub fn history_rows_rom(result: &RomResult) -> Vec<HistoryRow> {
    result
        .records
        .iter()
        .map(|r| HistoryRow {
            step: r.step,
            time: r.time,
            outer_iters: r.outer_iters,
            inner_iters_total: r.inner_iters_total,
            balance_residual: r.balance_residual,
            negative_count: r.negative_count,
            wall_ms: r.wall_ms,
        })
        .collect()
}

pub fn history_rows_baseline(result: &BaselineResult) -> Vec<HistoryRow> {
    result
        .records
        .iter()
        .map(|r| HistoryRow {
            step: r.step,
            time: r.time,
            outer_iters: 1,
            inner_iters_total: r.iters,
            balance_residual: r.balance_residual,
            negative_count: 0,
            wall_ms: r.wall_ms,
        })
        .collect()
}

/// Cell-field time series (temperature or energy): one row per time level
/// including the initial one, one column per cell labeled by its center.
pub fn write_series(
    path: &Path,
    mesh: &SpatialMesh,
    times: &[f64],
    fields: &[Vec<f64>],
) -> Result<()> {
    if times.len() != fields.len() {
        return Err(Error::Format(format!(
            "{} time levels but {} field rows",
            times.len(),
            fields.len()
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "time")?;
    for i in 0..mesh.n_cells() {
        write!(out, ",x={}", mesh.center(i))?;
    }
    writeln!(out)?;
    for (t, row) in times.iter().zip(fields) {
        if row.len() != mesh.n_cells() {
            return Err(Error::Format(format!(
                "field row holds {} cells, mesh has {}",
                row.len(),
                mesh.n_cells()
            )));
        }
        write!(out, "{t}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a series written by [`write_series`]: times and per-time cell rows.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = String::from_utf8(read_input(path)?)
        .map_err(|_| Error::Format(format!("{}: not a text file", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty series file", path.display())))?;
    let n_cols = header.split(',').count();
    if n_cols < 2 || !header.starts_with("time") {
        return Err(Error::Format(format!("{}: not a series file", path.display())));
    }
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(n_cols - 1);
        let mut parts = line.split(',');
        let t = parts
            .next()
            .and_then(|p| p.parse::<f64>().ok())
            .ok_or_else(|| {
                Error::Format(format!("{}: bad time on data line {}", path.display(), idx + 1))
            })?;
        for p in parts {
            row.push(p.parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "{}: bad value {p:?} on data line {}",
                    path.display(),
                    idx + 1
                ))
            })?);
        }
        if row.len() != n_cols - 1 {
            return Err(Error::Format(format!(
                "{}: data line {} holds {} cells, header names {}",
                path.display(),
                idx + 1,
                row.len(),
                n_cols - 1
            )));
        }
        times.push(t);
        fields.push(row);
    }
    Ok((times, fields))
}

/// Singular spectra of all stages in one table.
pub fn write_singular_values(path: &Path, bases: &[PodBasis]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "stage,index,sigma")?;
    for (s, basis) in bases.iter().enumerate() {
        for (k, sigma) in basis.singular_values().iter().enumerate() {
            writeln!(out, "{s},{k},{sigma}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Selected rank per stage over a sweep of truncation thresholds.
pub fn write_ranks_vs_epsilon(path: &Path, bases: &[PodBasis], epsilons: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "epsilon,stage,rank")?;
    for &eps in epsilons {
        for (s, basis) in bases.iter().enumerate() {
            let r = crate::pod::select_rank(basis.singular_values(), eps);
            writeln!(out, "{eps},{s},{r}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Per-step reduced-model diagnostics.
pub fn write_rom_details(path: &Path, result: &RomResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "step,time,stage,rank,condition_estimate")?;
    for r in &result.records {
        writeln!(out, "{},{},{},{},{}", r.step, r.time, r.stage, r.rank, r.condition_estimate)?;
    }
    out.flush()?;
    Ok(())
}

/// Basis handoff diagnostics: projection residual at each stage entry.
pub fn write_transitions(path: &Path, result: &RomResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "step,stage,rank,projection_residual")?;
    for t in &result.transitions {
        writeln!(out, "{},{},{},{}", t.step, t.stage, t.rank, t.projection_residual)?;
    }
    out.flush()?;
    Ok(())
}
