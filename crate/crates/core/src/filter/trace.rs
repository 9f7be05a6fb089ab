use serde::{Deserialize, Serialize};

/// One tempering stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub delta_phi: f64,
    /// Cumulative temperature after this stage.
    pub phi: f64,
    pub ess_pre: f64,
    pub ess_post: f64,
    /// `None` when no particle was jittered.
    pub accept_rate: Option<f64>,
    pub duplicates: usize,
    #[serde(default)]
    pub proposals: usize,
    #[serde(default)]
    pub rejected_nonfinite: usize,
    #[serde(skip)]
    pub ancestors: Vec<usize>,
}

/// Tempering record of one assimilation time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TemperingTrace {
    pub step: u64,
    pub stages: Vec<StageRecord>,
}

impl TemperingTrace {
    pub fn total_phi(&self) -> f64 {
        self.stages.iter().map(|s| s.delta_phi).sum()
    }

    /// Checks the schedule invariants: positive increments, strictly
    /// increasing cumulative temperature, increments summing to exactly one,
    /// pre-resampling ESS at least `threshold - tol`, post-resampling ESS
    /// equal to `n`.
    pub fn check_invariants(&self, n: usize, threshold: f64, tol: f64) -> Result<(), String> {
        if self.stages.is_empty() {
            return Err(format!("step {}: empty trace", self.step));
        }
        let mut prev = 0.0;
        for (r, s) in self.stages.iter().enumerate() {
            if s.delta_phi <= 0.0 {
                return Err(format!("step {} stage {r}: dphi = {}", self.step, s.delta_phi));
            }
            if s.phi <= prev {
                return Err(format!("step {} stage {r}: phi not increasing", self.step));
            }
            prev = s.phi;
            if s.ess_pre < threshold - tol {
                return Err(format!(
                    "step {} stage {r}: ess {} below {}",
                    self.step,
                    s.ess_pre,
                    threshold - tol
                ));
            }
            if s.ess_post != n as f64 {
                return Err(format!("step {} stage {r}: post-resample ess {}", self.step, s.ess_post));
            }
        }
        let total = self.total_phi();
        if total != 1.0 {
            return Err(format!("step {}: increments sum to {total:e}", self.step));
        }
        if prev != 1.0 {
            return Err(format!("step {}: final phi {prev}", self.step));
        }
        Ok(())
    }
}
