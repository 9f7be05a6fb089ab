//! The forecast/analysis loop and its metrics.

use rayon::prelude::*;

use crate::ensemble::{pairwise_sum, Ensemble, NoiseIncrement, StateVector};
use crate::filter::{assimilate, AnalysisKey, ForecastWindow, TemperingTrace};
use crate::obs::{ObsLikelihood, Observation};
use crate::rng::{Purpose, RngStream};

use super::config::ExperimentConfig;
use super::output::write_outputs;
use super::setup::{Block, Experiment, Probe};
use super::HarnessError;

/// RMSE and spread of one block of components, one value per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub name: String,
    pub rmse: Vec<f64>,
    pub es: Vec<f64>,
}

/// Truth and ensemble summary of one probed component, one value per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Band {
    pub name: String,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Everything a run produces. Per-step vectors cover steps `1..=steps`
/// (fewer when the run failed part way).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub name: String,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// Full-state RMSE and ES in model units.
    pub rmse: Vec<f64>,
    pub es: Vec<f64>,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub traces: Vec<TemperingTrace>,
    /// Observations in output units (see [`Experiment::obs_output_map`]).
    pub obs: Vec<Observation>,
}

impl RunMetrics {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn band(&self, name: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.name == name)
    }
}

/// Mean of `v` over the last `n` entries.
pub fn tail_mean(v: &[f64], n: usize) -> f64 {
    let t = &v[v.len().saturating_sub(n)..];
    pairwise_sum(t) / t.len() as f64
}

fn mean_var(particles: &[StateVector], k: usize, buf: &mut Vec<f64>) -> (f64, f64) {
    let n = particles.len() as f64;
    // shifted by the first particle so identical particles give an exact mean
    let x0 = particles[0][k];
    buf.clear();
    buf.extend(particles.iter().map(|p| p[k] - x0));
    let mean = x0 + pairwise_sum(buf) / n;
    buf.clear();
    buf.extend(particles.iter().map(|p| p[k]));
    for v in buf.iter_mut() {
        *v = (*v - mean) * (*v - mean);
    }
    (mean, pairwise_sum(buf) / (n - 1.0))
}

/// `RMSE = sqrt(mean_k (xbar_k - truth_k)^2)`, `ES = sqrt(mean_k s_k^2)` over
/// components `start..end`, with `s_k^2` the unbiased ensemble variance.
pub fn rmse_es(particles: &[StateVector], truth: &[f64], start: usize, end: usize) -> (f64, f64) {
    let mut buf = Vec::with_capacity(particles.len());
    let mut sq = Vec::with_capacity(end - start);
    let mut var = Vec::with_capacity(end - start);
    for k in start..end {
        let (m, v) = mean_var(particles, k, &mut buf);
        sq.push((m - truth[k]) * (m - truth[k]));
        var.push(v);
    }
    let d = (end - start) as f64;
    ((pairwise_sum(&sq) / d).sqrt(), (pairwise_sum(&var) / d).sqrt())
}

struct Recorder {
    m: RunMetrics,
    blocks: Vec<Block>,
    probes: Vec<Probe>,
}

impl Recorder {
    fn new(exp: &Experiment) -> Self {
        let blocks = exp.blocks();
        let probes = exp.probes();
        let m = RunMetrics {
            name: exp.config().name.clone(),
            series: blocks
                .iter()
                .map(|b| Series {
                    name: b.name.clone(),
                    ..Default::default()
                })
                .collect(),
            bands: probes
                .iter()
                .map(|p| Band {
                    name: p.name.clone(),
                    ..Default::default()
                })
                .collect(),
            ..Default::default()
        };
        Self { m, blocks, probes }
    }

    fn record(&mut self, exp: &Experiment, step: usize, particles: &[StateVector], truth: &StateVector) {
        let m = &mut self.m;
        m.steps.push(step);
        m.times.push(exp.time_of(step));
        let (r, e) = rmse_es(particles, truth, 0, truth.len());
        m.rmse.push(r);
        m.es.push(e);
        for (b, s) in self.blocks.iter().zip(&mut m.series) {
            let (r, e) = rmse_es(particles, truth, b.start, b.end);
            s.rmse.push(b.scale * r);
            s.es.push(b.scale * e);
        }
        let mut buf = Vec::with_capacity(particles.len());
        for (p, band) in self.probes.iter().zip(&mut m.bands) {
            let (mean, var) = mean_var(particles, p.index, &mut buf);
            let (lo, hi) = particles.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x[p.index]), hi.max(x[p.index]))
            });
            band.truth.push(p.read(truth));
            band.mean.push((mean - p.offset) * p.scale);
            band.std.push(var.sqrt() * p.scale);
            band.min.push((lo - p.offset) * p.scale);
            band.max.push((hi - p.offset) * p.scale);
        }
    }
}

/// Runs the twin experiment. On failure the metrics gathered so far are
/// returned alongside the error.
pub fn run(exp: &Experiment) -> (RunMetrics, Option<HarnessError>) {
    let mut rec = Recorder::new(exp);
    let err = run_into(exp, &mut rec).err();
    (rec.m, err)
}

fn run_into(exp: &Experiment, rec: &mut Recorder) -> Result<(), HarnessError> {
    let cfg = exp.config();
    let model = exp.model();
    let truth = exp.generate_truth()?;
    let (off, scale) = exp.obs_output_map();
    rec.m.obs = truth
        .obs
        .iter()
        .map(|o| Observation {
            time_index: o.time_index,
            values: o.values.iter().map(|v| (v - off) * scale).collect(),
        })
        .collect();

    let mut particles = exp.init_ensemble()?;
    let mut window = ForecastWindow::new(particles.clone());
    for k in 1..=cfg.steps {
        let moved: Vec<Result<(StateVector, NoiseIncrement), _>> = particles
            .par_iter()
            .enumerate()
            .map(|(l, x)| {
                let mut r = RngStream::keyed(cfg.ensemble_seed, l as u64, k as u64, Purpose::ModelNoise);
                let w = model.sample_noise(&mut r);
                model.step(x, &w).map(|y| (y, w))
            })
            .collect();
        for (l, res) in moved.into_iter().enumerate() {
            let (y, w) = res.map_err(|source| HarnessError::Model { step: k, source })?;
            particles[l] = y;
            window.paths[l].push(w);
        }

        if let Some(z) = truth.obs_at(k, cfg.assimilation_interval) {
            if cfg.assimilate {
                let forecast = Ensemble::uniform(std::mem::take(&mut particles), k)
                    .map_err(|source| HarnessError::Filter { step: k, source })?;
                let lik = ObsLikelihood {
                    model: exp.obs_model(),
                    obs: z,
                };
                let key = AnalysisKey {
                    seed: cfg.ensemble_seed,
                    step: k as u64,
                };
                let (analysis, trace) = assimilate(&forecast, &mut window, model, &lik, &cfg.filter, key)
                    .map_err(|source| {
                        if let Some(t) = source.trace() {
                            rec.m.traces.push(t.clone());
                        }
                        HarnessError::Filter { step: k, source }
                    })?;
                log::info!(
                    "{}: step {k}, {} tempering stages",
                    cfg.name,
                    trace.stages.len()
                );
                rec.m.traces.push(trace);
                particles = analysis.into_particles();
            }
            window.reset(&particles);
        }
        rec.record(exp, k, &particles, &truth.states[k]);
    }
    Ok(())
}

/// Builds, runs and (when `cfg.output_dir` is set) writes all output files.
/// Partial outputs are flushed before a failure is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunMetrics, HarnessError> {
    let exp = Experiment::new(cfg.clone())?;
    let (m, err) = run(&exp);
    if let Some(dir) = &cfg.output_dir {
        write_outputs(dir, cfg, &m)?;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;
    use crate::harness::ModelConfig;

    #[test]
    fn rmse_es_small_example() {
        let ps = vec![StateVector(vec![1.0, 0.0]), StateVector(vec![3.0, 0.0])];
        let (r, e) = rmse_es(&ps, &[0.0, 1.0], 0, 2);
        // means (2, 0), errors (2, -1), variances (2, 0)
        assert!((r - (2.5f64).sqrt()).abs() < 1e-15);
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_start_without_noise_has_zero_rmse() {
        let mut c = preset("lorenz-standard").unwrap();
        let ModelConfig::Lorenz63 { params, .. } = &mut c.model else { panic!() };
        params.model_error_std = 0.0;
        c.initial_uncertainty = 0.0;
        c.steps = 100;
        let (m, err) = run(&Experiment::new(c).unwrap());
        assert!(err.is_none(), "{err:?}");
        assert_eq!(m.rmse.len(), 100);
        assert!(m.rmse.iter().all(|r| *r == 0.0));
        assert!(m.es.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn metric_lengths() {
        let mut c = preset("lorenz-standard").unwrap();
        c.steps = 60;
        let (m, err) = run(&Experiment::new(c).unwrap());
        assert!(err.is_none());
        assert_eq!(m.steps, (1..=60).collect::<Vec<_>>());
        assert_eq!(m.traces.len(), 3);
        assert_eq!(m.obs.len(), 3);
        assert_eq!(m.series.len(), 3);
        assert!(m.bands.iter().all(|b| b.mean.len() == 60));
        assert!(m.rmse.iter().chain(&m.es).all(|v| *v >= 0.0));
    }
}
