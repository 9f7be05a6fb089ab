//! Output files of a run.
//!
//! - `metrics.csv`: `step,time,rmse,es` over the full state (model units)
//! - `metrics_<block>.csv`: same columns for a component block (Lorenz
//!   `x`, `y`, `z`; SRSW `height` in metres)
//! - `band_<probe>.csv`: `step,truth,mean,mean_minus_std,mean_plus_std,min,max`
//! - `obs.csv`: `time_index,z0,z1,...` (SRSW heights as metres of anomaly)
//! - `trace.json`: array of tempering traces, one per assimilation time
//! - `config.json`: the configuration that produced the run
//!
//! A truth-only run writes `truth.csv` or `truth/step_NNNNN.bin` instead of
//! the metrics and band files.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filter::TemperingTrace;
use crate::obs::{write_obs_csv, Observation};
use crate::srsw::io::write_snapshot;

use super::config::ExperimentConfig;
use super::run::RunMetrics;
use super::setup::{Experiment, Truth};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub time: f64,
    pub rmse: f64,
    pub es: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub step: usize,
    pub truth: f64,
    pub mean: f64,
    pub mean_minus_std: f64,
    pub mean_plus_std: f64,
    pub min: f64,
    pub max: f64,
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn finish(w: csv::Writer<BufWriter<File>>) -> Result<(), HarnessError> {
    let mut inner = w.into_inner().map_err(|e| e.into_error())?;
    inner.flush()?;
    Ok(())
}

fn write_metrics(path: &Path, m: &RunMetrics, rmse: &[f64], es: &[f64]) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "time", "rmse", "es"]).map_err(std::io::Error::from)?;
    for i in 0..rmse.len() {
        w.write_record([m.steps[i].to_string(), f(m.times[i]), f(rmse[i]), f(es[i])])
            .map_err(std::io::Error::from)?;
    }
    finish(w)
}

/// Writes every output file of `m` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, m: &RunMetrics) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    write_metrics(&dir.join("metrics.csv"), m, &m.rmse, &m.es)?;
    for s in &m.series {
        write_metrics(&dir.join(format!("metrics_{}.csv", s.name)), m, &s.rmse, &s.es)?;
    }
    for b in &m.bands {
        let mut w = csv_writer(&dir.join(format!("band_{}.csv", b.name)))?;
        w.write_record(["step", "truth", "mean", "mean_minus_std", "mean_plus_std", "min", "max"])
            .map_err(std::io::Error::from)?;
        for i in 0..b.mean.len() {
            w.write_record([
                m.steps[i].to_string(),
                f(b.truth[i]),
                f(b.mean[i]),
                f(b.mean[i] - b.std[i]),
                f(b.mean[i] + b.std[i]),
                f(b.min[i]),
                f(b.max[i]),
            ])
            .map_err(std::io::Error::from)?;
        }
        finish(w)?;
    }
    write_obs_csv(BufWriter::new(File::create(dir.join("obs.csv"))?), &m.obs)?;
    std::fs::write(
        dir.join("trace.json"),
        serde_json::to_string_pretty(&m.traces).expect("trace serialises"),
    )?;
    std::fs::write(dir.join("config.json"), cfg.to_json())?;
    Ok(())
}

/// Writes a truth run: `truth.csv` (`step,time,x0,...`) for the Lorenz
/// model, one raw snapshot per step under `truth/` for SRSW, plus `obs.csv`
/// and `config.json`.
pub fn write_truth(dir: &Path, exp: &Experiment, truth: &Truth) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    if let Some(m) = exp.srsw() {
        let sub = dir.join("truth");
        std::fs::create_dir_all(&sub)?;
        for (k, x) in truth.states.iter().enumerate() {
            write_snapshot(&sub.join(format!("step_{k:05}.bin")), m.grid(), x, k)?;
        }
    } else {
        let mut w = csv_writer(&dir.join("truth.csv"))?;
        let d = exp.truth0().len();
        let mut header = vec!["step".to_string(), "time".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(std::io::Error::from)?;
        for (k, x) in truth.states.iter().enumerate() {
            let mut row = vec![k.to_string(), f(exp.time_of(k))];
            row.extend(x.iter().map(|v| f(*v)));
            w.write_record(&row).map_err(std::io::Error::from)?;
        }
        finish(w)?;
    }
    let (off, scale) = exp.obs_output_map();
    let obs: Vec<Observation> = truth
        .obs
        .iter()
        .map(|o| Observation {
            time_index: o.time_index,
            values: o.values.iter().map(|v| (v - off) * scale).collect(),
        })
        .collect();
    write_obs_csv(BufWriter::new(File::create(dir.join("obs.csv"))?), &obs)?;
    std::fs::write(dir.join("config.json"), exp.config().to_json())?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(std::io::Error::from)?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| HarnessError::Invalid(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    read_rows(path)
}

pub fn read_band_csv(path: &Path) -> Result<Vec<BandRow>, HarnessError> {
    read_rows(path)
}

pub fn read_traces(path: &Path) -> Result<Vec<TemperingTrace>, HarnessError> {
    let s = std::fs::read_to_string(path)?;
    serde_json::from_str(&s).map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))
}

/// Re-checks a finished output directory: the config parses, metrics are
/// non-negative with one row per step, and every trace satisfies the
/// tempering invariants. Returns the number of traces checked.
pub fn check_output_dir(dir: &Path) -> Result<usize, HarnessError> {
    let cfg = ExperimentConfig::load(&dir.join("config.json"))?;
    let rows = read_metrics_csv(&dir.join("metrics.csv"))?;
    if rows.len() != cfg.steps {
        return Err(HarnessError::Invalid(format!(
            "metrics.csv has {} rows, expected {}",
            rows.len(),
            cfg.steps
        )));
    }
    if let Some(r) = rows.iter().find(|r| !(r.rmse >= 0.0 && r.es >= 0.0)) {
        return Err(HarnessError::Invalid(format!("negative or NaN metric at step {}", r.step)));
    }
    let traces = read_traces(&dir.join("trace.json"))?;
    let n = cfg.filter.n_particles;
    for t in &traces {
        t.check_invariants(n, cfg.filter.ess_threshold, cfg.filter.bisection_tol)
            .map_err(HarnessError::Invalid)?;
    }
    Ok(traces.len())
}
