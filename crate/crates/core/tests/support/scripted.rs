//! Oracle double that replays fixed count vectors and records every request.

use std::sync::Mutex;

use dist_align::{BackendKind, FrequencyVector, Oracle, OracleConfig, Result, WeightVector};

pub struct ScriptedOracle {
    n: usize,
    replies: Vec<Vec<u64>>,
    log: Mutex<Vec<(Vec<f64>, u64)>>,
}

impl ScriptedOracle {
    /// Replies are served in order; the last one repeats.
    pub fn new(replies: Vec<Vec<u64>>) -> Self {
        let n = replies[0].len();
        Self { n, replies, log: Mutex::new(Vec::new()) }
    }

    pub fn constant(counts: Vec<u64>) -> Self {
        Self::new(vec![counts])
    }

    pub fn calls(&self) -> Vec<(Vec<f64>, u64)> {
        self.log.lock().unwrap().clone()
    }
}

impl Oracle<f64> for ScriptedOracle {
    fn arity(&self) -> usize {
        self.n
    }

    fn backend(&self) -> BackendKind {
        BackendKind::SoftmaxSim
    }

    fn evaluate(&self, a: &WeightVector<f64>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        let mut log = self.log.lock().unwrap();
        let reply = self.replies[log.len().min(self.replies.len() - 1)].clone();
        log.push((a.as_slice().to_vec(), cfg.seed));
        FrequencyVector::new(reply)
    }
}
