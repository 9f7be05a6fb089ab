//! Model construction, truth runs and initial ensembles.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;

use crate::ensemble::{ForwardModel, StateVector};
use crate::lorenz63::Lorenz63;
use crate::noise_spectral::{SpectralGenerator, SpectralNoiseSpec};
use crate::obs::{ObsModel, ObsOperator, Observation};
use crate::rng::{Purpose, RngStream};
use crate::srsw::{geostrophic_init, Srsw, SrswNoise, SrswScales};

use super::config::{ExperimentConfig, ModelConfig, ObsConfig, SrswSetup};
use super::HarnessError;

/// A scalar read off the state for band output: `(x[index] - offset) * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub index: usize,
    pub offset: f64,
    pub scale: f64,
}

impl Probe {
    pub fn read(&self, x: &[f64]) -> f64 {
        (x[self.index] - self.offset) * self.scale
    }
}

/// A block of state components summarised by its own RMSE and spread.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub end: usize,
    pub scale: f64,
}

struct SrswParts {
    model: Srsw,
    scales: SrswScales,
    /// Unit-std balanced field generator for initial perturbations.
    field: SpectralGenerator,
    p_truth0: Vec<f64>,
    sites: Vec<usize>,
}

enum Kind {
    Lorenz(Lorenz63),
    Srsw(Box<SrswParts>),
}

/// A validated configuration with its model, observation operator and
/// initial truth built.
pub struct Experiment {
    cfg: ExperimentConfig,
    kind: Kind,
    obs_model: ObsModel,
    truth0: StateVector,
}

/// Truth trajectory (steps `0..=steps`) and its observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub states: Vec<StateVector>,
    pub obs: Vec<Observation>,
}

impl Truth {
    /// Observation at `step`, if one was taken.
    pub fn obs_at(&self, step: usize, interval: usize) -> Option<&Observation> {
        if step == 0 || step % interval != 0 {
            return None;
        }
        self.obs.get(step / interval - 1)
    }
}

fn srsw_parts(cfg: &ExperimentConfig, s: &SrswSetup) -> Result<(SrswParts, ObsModel), HarnessError> {
    let params = s.scales.params(s.nx, s.ny, s.dt_s)?;
    let g = params.grid;
    let ppm = s.scales.pressure_per_metre();
    let spec = |amp: f64| {
        SpectralNoiseSpec::extended(
            g.nx,
            g.ny,
            g.dx,
            g.dy,
            s.noise.extend_x,
            s.noise.extend_y,
            s.noise.sigma,
            amp,
            s.noise.balance,
        )
    };
    let noise = if s.noise.amplitude_m > 0.0 {
        Some(SrswNoise {
            generator: Arc::new(SpectralGenerator::new(spec(s.noise.amplitude_m)?)?),
            unit_scale: ppm,
        })
    } else {
        None
    };
    let field = SpectralGenerator::new(spec(1.0)?)?;
    let model = Srsw::new(params, noise)?;

    // zonal jet: height falls by jet_m from the southern to the northern wall
    let ly = g.ly();
    let mut bump = RngStream::keyed(cfg.truth_seed, 0, 0, Purpose::TruthInit);
    let perturb = field.sample_scalar_field(&mut bump);
    let mut p_truth0 = vec![0.0; g.n_centres()];
    for j in 0..g.ny {
        let eta = -0.5 * s.jet_m * (PI * (g.y_centre(j) - 0.5 * ly) / ly).sin();
        for i in 0..g.nx {
            let k = g.idx(i, j);
            p_truth0[k] = ppm * (s.scales.depth_m + eta + s.truth_perturbation_m * perturb[k]);
        }
    }

    let (_, _, o3) = g.offsets();
    let (sites, obs_model) = match &cfg.obs {
        ObsConfig::HeightSites {
            count,
            site_seed,
            obs_error_m,
        } => {
            let mut r = RngStream::keyed(*site_seed, 0, 0, Purpose::ObsSites);
            let mut cells = index::sample(&mut r, g.n_centres(), *count).into_vec();
            cells.sort_unstable();
            let op = ObsOperator::Select {
                indices: cells.iter().map(|c| o3 + c).collect(),
            };
            (cells, ObsModel::new(op, s.scales.height_from_m(*obs_error_m)))
        }
        ObsConfig::Operator {
            operator,
            obs_error_std,
        } => (Vec::new(), ObsModel::new(operator.clone(), *obs_error_std)),
    };
    Ok((
        SrswParts {
            model,
            scales: s.scales,
            field,
            p_truth0,
            sites,
        },
        obs_model,
    ))
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let (kind, obs_model, truth0) = match &cfg.model {
            ModelConfig::Lorenz63 {
                params,
                initial_state,
            } => {
                let ObsConfig::Operator {
                    operator,
                    obs_error_std,
                } = &cfg.obs
                else {
                    unreachable!("validated")
                };
                (
                    Kind::Lorenz(Lorenz63::new(*params)?),
                    ObsModel::new(operator.clone(), *obs_error_std),
                    StateVector(initial_state.to_vec()),
                )
            }
            ModelConfig::Srsw(s) => {
                let (parts, obs_model) = srsw_parts(&cfg, s)?;
                let truth0 = geostrophic_init(&parts.p_truth0, parts.model.params())
                    .map_err(|source| HarnessError::Model { step: 0, source })?;
                (Kind::Srsw(Box::new(parts)), obs_model, truth0)
            }
        };
        Ok(Self {
            cfg,
            kind,
            obs_model,
            truth0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn model(&self) -> &dyn ForwardModel {
        match &self.kind {
            Kind::Lorenz(m) => m,
            Kind::Srsw(p) => &p.model,
        }
    }

    /// The SRSW model, when this is an SRSW experiment.
    pub fn srsw(&self) -> Option<&Srsw> {
        match &self.kind {
            Kind::Srsw(p) => Some(&p.model),
            Kind::Lorenz(_) => None,
        }
    }

    pub fn obs_model(&self) -> &ObsModel {
        &self.obs_model
    }

    pub fn truth0(&self) -> &StateVector {
        &self.truth0
    }

    /// Observed SRSW cells (empty for Lorenz).
    pub fn sites(&self) -> &[usize] {
        match &self.kind {
            Kind::Srsw(p) => &p.sites,
            Kind::Lorenz(_) => &[],
        }
    }

    /// Physical time of `step` (model units for Lorenz, seconds for SRSW).
    pub fn time_of(&self, step: usize) -> f64 {
        match &self.cfg.model {
            ModelConfig::Lorenz63 { params, .. } => step as f64 * params.dt,
            ModelConfig::Srsw(s) => step as f64 * s.dt_s,
        }
    }

    /// Affine map from model observation values to the units written to
    /// `obs.csv`: metres of height anomaly for SRSW, unchanged for Lorenz.
    pub fn obs_output_map(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Lorenz(_) => (0.0, 1.0),
            Kind::Srsw(p) => (1.0, p.scales.depth_m),
        }
    }

    /// Components written as band files.
    pub fn probes(&self) -> Vec<Probe> {
        match &self.kind {
            Kind::Lorenz(_) => ["x", "y", "z"]
                .iter()
                .enumerate()
                .map(|(k, n)| Probe {
                    name: (*n).into(),
                    index: k,
                    offset: 0.0,
                    scale: 1.0,
                })
                .collect(),
            Kind::Srsw(p) => {
                let g = p.model.grid();
                let (_, _, o3) = g.offsets();
                let h = |name: &str, cell: usize| Probe {
                    name: name.into(),
                    index: o3 + cell,
                    offset: 1.0,
                    scale: p.scales.depth_m,
                };
                let mut v = Vec::new();
                if let Some(&c) = p.sites.first() {
                    v.push(h("h_site0", c));
                }
                v.push(h("h_centre", g.idx(g.nx / 2, g.ny / 2)));
                v
            }
        }
    }

    /// Component blocks with their own metrics files.
    pub fn blocks(&self) -> Vec<Block> {
        match &self.kind {
            Kind::Lorenz(_) => ["x", "y", "z"]
                .iter()
                .enumerate()
                .map(|(k, n)| Block {
                    name: (*n).into(),
                    start: k,
                    end: k + 1,
                    scale: 1.0,
                })
                .collect(),
            Kind::Srsw(p) => {
                let g = p.model.grid();
                let (_, _, o3) = g.offsets();
                vec![Block {
                    name: "height".into(),
                    start: o3,
                    end: g.state_dim(),
                    scale: p.scales.depth_m,
                }]
            }
        }
    }

    /// One seeded model path from the initial truth with observations at
    /// every multiple of the assimilation interval.
    pub fn generate_truth(&self) -> Result<Truth, HarnessError> {
        let model = self.model();
        let seed = self.cfg.truth_seed;
        let mut states = Vec::with_capacity(self.cfg.steps + 1);
        let mut obs = Vec::new();
        states.push(self.truth0.clone());
        for k in 1..=self.cfg.steps {
            let w = model.sample_noise(&mut RngStream::keyed(seed, 0, k as u64, Purpose::TruthNoise));
            let x = model
                .step(states.last().unwrap(), &w)
                .map_err(|source| HarnessError::Model { step: k, source })?;
            if k % self.cfg.assimilation_interval == 0 {
                let mut r = RngStream::keyed(seed, 0, k as u64, Purpose::ObsNoise);
                obs.push(self.obs_model.synthesize(&x, k, &mut r)?);
            }
            states.push(x);
        }
        Ok(Truth { states, obs })
    }

    /// Particle `l` of the initial ensemble. Lorenz: truth plus independent
    /// Gaussian perturbations per component. SRSW: truth pressure plus one
    /// unit-std balanced spectral field scaled to the initial uncertainty,
    /// then geostrophically initialised.
    pub fn init_particle(&self, l: usize) -> Result<StateVector, HarnessError> {
        let std = self.cfg.initial_uncertainty;
        let mut r = RngStream::keyed(self.cfg.ensemble_seed, l as u64, 0, Purpose::Init);
        match &self.kind {
            Kind::Lorenz(_) => Ok(StateVector(
                self.truth0.iter().map(|t| t + std * r.normal()).collect(),
            )),
            Kind::Srsw(p) => {
                if std == 0.0 {
                    return Ok(self.truth0.clone());
                }
                let k = std * p.scales.pressure_per_metre();
                let f = p.field.sample_scalar_field(&mut r);
                let p0: Vec<f64> = p.p_truth0.iter().zip(&f).map(|(a, b)| a + k * b).collect();
                geostrophic_init(&p0, p.model.params())
                    .map_err(|source| HarnessError::Model { step: 0, source })
            }
        }
    }

    pub fn init_ensemble(&self) -> Result<Vec<StateVector>, HarnessError> {
        self.init_ensemble_of(self.cfg.filter.n_particles)
    }

    pub fn init_ensemble_of(&self, n: usize) -> Result<Vec<StateVector>, HarnessError> {
        (0..n).into_par_iter().map(|l| self.init_particle(l)).collect()
    }
}
