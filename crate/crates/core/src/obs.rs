//! Observation operators and Gaussian likelihoods.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ensemble::{pairwise_sum, StateVector};
use crate::error::ConfigError;
use crate::filter::LogLikelihood;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObsOperator {
    /// `H(x) = x`
    Identity,
    /// `H(x) = (x_0^2, x_1, x_2, ...)`
    SquareFirst,
    /// `H(x) = (x_0^2, x_1^2, ...)`
    SquareAll,
    /// `H(x) = (x_{i_1}, x_{i_2}, ...)`
    Select { indices: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsModel {
    pub operator: ObsOperator,
    pub obs_error_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time_index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ObsError {
    #[error("observation index {index} outside state of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("observation has {got} values, operator produces {expected}")]
    Length { expected: usize, got: usize },
    #[error("observation file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ObsModel {
    pub fn new(operator: ObsOperator, obs_error_std: f64) -> Self {
        Self {
            operator,
            obs_error_std,
        }
    }

    pub fn validate(&self, state_dim: usize) -> Result<(), ConfigError> {
        if !(self.obs_error_std > 0.0 && self.obs_error_std.is_finite()) {
            return Err(ConfigError::new("obs_error_std", "must be positive"));
        }
        if let ObsOperator::Select { indices } = &self.operator {
            if indices.is_empty() {
                return Err(ConfigError::new("obs.indices", "no observation sites"));
            }
            let mut seen = indices.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != indices.len() {
                return Err(ConfigError::new("obs.indices", "duplicate index"));
            }
            if let Some(i) = indices.iter().find(|&&i| i >= state_dim) {
                return Err(ConfigError::new(
                    "obs.indices",
                    format!("index {i} >= state dimension {state_dim}"),
                ));
            }
        }
        Ok(())
    }

    /// Observation dimension `d_Z` for a state of dimension `state_dim`.
    pub fn obs_dim(&self, state_dim: usize) -> usize {
        match &self.operator {
            ObsOperator::Select { indices } => indices.len(),
            _ => state_dim,
        }
    }

    pub fn apply(&self, x: &StateVector) -> Result<Vec<f64>, ObsError> {
        Ok(match &self.operator {
            ObsOperator::Identity => x.to_vec(),
            ObsOperator::SquareFirst => {
                let mut v = x.to_vec();
                if let Some(first) = v.first_mut() {
                    *first *= *first;
                }
                v
            }
            ObsOperator::SquareAll => x.iter().map(|v| v * v).collect(),
            ObsOperator::Select { indices } => indices
                .iter()
                .map(|&i| {
                    x.get(i).copied().ok_or(ObsError::IndexOutOfRange {
                        index: i,
                        dim: x.len(),
                    })
                })
                .collect::<Result<_, _>>()?,
        })
    }

    /// `H(truth) + obs_error_std * V`, `V ~ N(0, I)`.
    pub fn synthesize(
        &self,
        truth: &StateVector,
        time_index: usize,
        rng: &mut RngStream,
    ) -> Result<Observation, ObsError> {
        let mut values = self.apply(truth)?;
        for v in &mut values {
            *v += self.obs_error_std * rng.normal();
        }
        Ok(Observation { time_index, values })
    }

    /// Gaussian log-density of `z` given state `x`, constant included.
    pub fn log_likelihood(&self, x: &StateVector, z: &Observation) -> Result<f64, ObsError> {
        let hx = self.apply(x)?;
        if hx.len() != z.values.len() {
            return Err(ObsError::Length {
                expected: hx.len(),
                got: z.values.len(),
            });
        }
        let s2 = self.obs_error_std * self.obs_error_std;
        let sq: Vec<f64> = hx
            .iter()
            .zip(&z.values)
            .map(|(h, v)| (v - h) * (v - h))
            .collect();
        let d = hx.len() as f64;
        Ok(-0.5 * pairwise_sum(&sq) / s2 - 0.5 * d * (2.0 * std::f64::consts::PI * s2).ln())
    }
}

/// An observation model bound to one observation, usable by the filter.
#[derive(Debug, Clone, Copy)]
pub struct ObsLikelihood<'a> {
    pub model: &'a ObsModel,
    pub obs: &'a Observation,
}

impl LogLikelihood for ObsLikelihood<'_> {
    fn log_likelihood(&self, x: &StateVector) -> f64 {
        self.model.log_likelihood(x, self.obs).unwrap_or(f64::NAN)
    }
}

/// Writes observations as CSV: `time_index,z0,z1,...`.
pub fn write_obs_csv<W: Write>(w: W, obs: &[Observation]) -> Result<(), ObsError> {
    let d = obs.first().map_or(0, |o| o.values.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["time_index".to_string()];
    header.extend((0..d).map(|k| format!("z{k}")));
    out.write_record(&header).map_err(csv_err)?;
    for o in obs {
        let mut rec = vec![o.time_index.to_string()];
        rec.extend(o.values.iter().map(|v| format!("{v:?}")));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> ObsError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ObsError::Io(io),
        other => ObsError::Parse {
            line,
            reason: format!("{other:?}"),
        },
    }
}

pub fn read_obs_csv<R: Read>(r: R) -> Result<Vec<Observation>, ObsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("time_index") {
        return Err(ObsError::Parse {
            line: 1,
            reason: "header must start with time_index".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse_err = |reason: String| ObsError::Parse { line, reason };
        let time_index = rec[0].parse::<usize>().map_err(|e| parse_err(e.to_string()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>().map_err(|e| parse_err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Observation { time_index, values });
    }
    Ok(out)
}
