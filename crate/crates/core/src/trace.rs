//! Chain output: retained states plus per-step bookkeeping.

use std::time::Duration;

use crate::samplers::{KernelKind, SamplerConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// 1-based step index within the full chain.
    pub iter: usize,
    pub x: Vec<f64>,
    pub log_pi: f64,
    pub stage1_accept: bool,
    pub stage2_accept: bool,
    pub expensive_eval: bool,
}

/// Evaluation and acceptance totals over a whole run, burn-in included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub steps: u64,
    pub stage1_accepts: u64,
    pub stage2_accepts: u64,
    pub expensive_evals: u64,
    pub cheap_evals: u64,
    pub eval_failures: u64,
}

impl Counters {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.stage2_accepts as f64 / self.steps as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub kernel: KernelKind,
    pub dim: usize,
    pub rows: Vec<TraceRow>,
    /// Sampling time only.
    pub wall: Duration,
    pub counters: Counters,
    pub config: SamplerConfig,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn wall_minutes(&self) -> f64 {
        self.wall.as_secs_f64() / 60.0
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|r| r.x.as_slice())
    }

    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.x[i]).collect()
    }

    pub fn log_pi_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.log_pi).collect()
    }

    /// Every `k`-th retained row; wall time and counters are kept.
    pub fn thinned(&self, k: usize) -> Trace {
        assert!(k >= 1, "thinning must be at least 1");
        Trace {
            rows: self.rows.iter().step_by(k).cloned().collect(),
            ..self.clone()
        }
    }
}
