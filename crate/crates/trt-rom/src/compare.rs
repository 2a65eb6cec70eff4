//! Error reports between two runs on the same time grid.
//!
//! Every driver (full-order, reduced, baseline) produces the same trajectory
//! shape: temperature and total radiation energy per cell at every time
//! level including the initial one. Reports reduce the per-time field
//! difference to a relative Euclidean norm over cells, plus a maximum and a
//! time-integrated aggregate per quantity.

use std::path::Path;

use crate::baselines::BaselineResult;
use crate::fom::FomResult;
use crate::persist::read_series;
use crate::rom::RomResult;
use crate::{Error, Result};

/// Cell fields over time, including the initial level.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub temperature: Vec<Vec<f64>>,
    pub energy: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_fom(result: &FomResult) -> Self {
        let mut times = vec![0.0];
        let mut temperature = vec![result.initial_temperature.clone()];
        let mut energy = vec![result.initial_grey_energy.clone()];
        for r in &result.records {
            times.push(r.time);
            temperature.push(r.temperature.clone());
            energy.push(r.grey_energy.clone());
        }
        Self { times, temperature, energy }
    }

    pub fn from_rom(result: &RomResult) -> Self {
        let mut times = vec![0.0];
        let mut temperature = vec![result.initial_temperature.clone()];
        let mut energy = vec![result.initial_grey_energy.clone()];
        for r in &result.records {
            times.push(r.time);
            temperature.push(r.temperature.clone());
            energy.push(r.grey_energy.clone());
        }
        Self { times, temperature, energy }
    }

    pub fn from_baseline(result: &BaselineResult) -> Self {
        let mut times = vec![0.0];
        let mut temperature = vec![result.initial_temperature.clone()];
        let mut energy = vec![result.initial_grey_energy.clone()];
        for r in &result.records {
            times.push(r.time);
            temperature.push(r.temperature.clone());
            energy.push(r.grey_energy.clone());
        }
        Self { times, temperature, energy }
    }

    /// Load the temperature.csv / energy.csv pair a run directory holds.
    pub fn from_run_dir(dir: &Path) -> Result<Self> {
        let (t_times, temperature) = read_series(&dir.join("temperature.csv"))?;
        let (e_times, energy) = read_series(&dir.join("energy.csv"))?;
        if t_times != e_times {
            return Err(Error::Format(format!(
                "{}: temperature and energy series disagree on times",
                dir.display()
            )));
        }
        Ok(Self { times: t_times, temperature, energy })
    }
}

/// Relative Euclidean difference over cells; exact zero when both vanish.
fn relative_l2(reference: &[f64], candidate: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (&r, &c) in reference.iter().zip(candidate) {
        diff += (c - r) * (c - r);
        norm += r * r;
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

/// Per-time relative errors of a candidate run against a reference.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub temperature_error: Vec<f64>,
    pub energy_error: Vec<f64>,
}

impl ErrorReport {
    pub fn between(reference: &Trajectory, candidate: &Trajectory) -> Result<Self> {
        if reference.times.len() != candidate.times.len() {
            return Err(Error::Format(format!(
                "runs hold {} and {} time levels",
                reference.times.len(),
                candidate.times.len()
            )));
        }
        let span = reference.times.last().copied().unwrap_or(0.0).abs().max(1.0);
        for (a, b) in reference.times.iter().zip(&candidate.times) {
            if (a - b).abs() > 1e-12 * span {
                return Err(Error::Format(format!(
                    "runs disagree on time levels ({a} vs {b})"
                )));
            }
        }
        let mut temperature_error = Vec::with_capacity(reference.times.len());
        let mut energy_error = Vec::with_capacity(reference.times.len());
        for n in 0..reference.times.len() {
            if reference.temperature[n].len() != candidate.temperature[n].len() {
                return Err(Error::Format(format!(
                    "time level {n}: cell counts differ ({} vs {})",
                    reference.temperature[n].len(),
                    candidate.temperature[n].len()
                )));
            }
            temperature_error.push(relative_l2(&reference.temperature[n], &candidate.temperature[n]));
            energy_error.push(relative_l2(&reference.energy[n], &candidate.energy[n]));
        }
        Ok(Self { times: reference.times.clone(), temperature_error, energy_error })
    }

    pub fn max_temperature_error(&self) -> f64 {
        self.temperature_error.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_energy_error(&self) -> f64 {
        self.energy_error.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// Time-integrated error: sum of err_n * (t_n - t_{n-1}).
    fn integrate(times: &[f64], errors: &[f64]) -> f64 {
        let mut total = 0.0;
        for n in 1..times.len() {
            total += errors[n] * (times[n] - times[n - 1]);
        }
        total
    }

    pub fn integrated_temperature_error(&self) -> f64 {
        Self::integrate(&self.times, &self.temperature_error)
    }

    pub fn integrated_energy_error(&self) -> f64 {
        Self::integrate(&self.times, &self.energy_error)
    }

    /// Error at the time level closest to `t`.
    pub fn at_time(&self, t: f64) -> (f64, f64) {
        let n = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - t).abs().partial_cmp(&(*b - t).abs()).expect("finite times")
            })
            .map(|(n, _)| n)
            .expect("nonempty report");
        (self.temperature_error[n], self.energy_error[n])
    }

    pub fn write_errors_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("time,temperature_error,energy_error\n");
        for n in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.times[n], self.temperature_error[n], self.energy_error[n]
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn write_aggregates_csv(&self, path: &Path) -> Result<()> {
        let out = format!(
            "quantity,max_error,time_integrated_error\n\
             temperature,{},{}\n\
             energy,{},{}\n",
            self.max_temperature_error(),
            self.integrated_temperature_error(),
            self.max_energy_error(),
            self.integrated_energy_error()
        );
        std::fs::write(path, out)?;
        Ok(())
    }
}
