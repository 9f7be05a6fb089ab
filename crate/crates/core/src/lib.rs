//! Particle filtering with adaptive tempering and MCMC jittering, plus the
//! two test models it is exercised on: a stochastic Lorenz '63 system and a
//! rotating shallow water solver driven by transport noise.

pub mod ensemble;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lorenz63;
pub mod noise_spectral;
pub mod obs;
pub mod rng;
pub mod scalar;
pub mod srsw;

pub use ensemble::{ensemble_mean, mix_noise, Ensemble, ForwardModel, NoiseIncrement, StateVector};
pub use error::{ConfigError, FilterError, ModelError};
pub use rng::{Purpose, RngStream, StreamKey};
