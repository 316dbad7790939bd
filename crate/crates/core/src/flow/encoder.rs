//! Fixed-weight recurrent encoder for displacement histories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HiddenState, PlannerError};
use crate::geom::Vec2;
use crate::world::AgentId;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub dim: usize,
    pub seed: u64,
    pub weight_scale: f64,
    /// Only the most recent `history_len` displacements are encoded.
    pub history_len: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            seed: 0,
            weight_scale: 0.1,
            history_len: 8,
        }
    }
}

/// `h ← tanh(W_h·h + W_x·d)` with weights fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEncoder {
    dim: usize,
    history_len: usize,
    /// D×D, row-major.
    recurrent: Vec<f64>,
    /// D×2, row-major.
    input: Vec<f64>,
}

impl HistoryEncoder {
    /// Draws weights once from uniform(−scale, scale) on the seeded stream.
    pub fn new(cfg: &EncoderConfig) -> Result<Self, PlannerError> {
        if cfg.dim == 0 {
            return Err(PlannerError::ZeroDimension);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let s = cfg.weight_scale;
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if s > 0.0 { rng.random_range(-s..s) } else { 0.0 })
                .collect()
        };
        let recurrent = draw(cfg.dim * cfg.dim);
        let input = draw(cfg.dim * 2);
        Ok(Self {
            dim: cfg.dim,
            history_len: cfg.history_len.max(1),
            recurrent,
            input,
        })
    }

    pub fn from_weights(
        dim: usize,
        history_len: usize,
        recurrent: Vec<f64>,
        input: Vec<f64>,
    ) -> Result<Self, PlannerError> {
        if dim == 0 {
            return Err(PlannerError::ZeroDimension);
        }
        if recurrent.len() != dim * dim || input.len() != dim * 2 {
            return Err(PlannerError::WeightCount {
                expected: dim * dim + dim * 2,
                found: recurrent.len() + input.len(),
            });
        }
        Ok(Self {
            dim,
            history_len: history_len.max(1),
            recurrent,
            input,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn recurrent_weights(&self) -> &[f64] {
        &self.recurrent
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input
    }

    pub fn encode(&self, displacements: &[Vec2], agent: AgentId, timestamp: i64) -> Result<HiddenState, PlannerError> {
        if displacements.is_empty() {
            return Err(PlannerError::EmptyHistory(agent));
        }
        let d = self.dim;
        let recent = &displacements[displacements.len().saturating_sub(self.history_len)..];
        let mut h = vec![0.0; d];
        let mut next = vec![0.0; d];
        for step in recent {
            for (r, out) in next.iter_mut().enumerate() {
                let row = &self.recurrent[r * d..(r + 1) * d];
                let acc: f64 = row.iter().zip(&h).map(|(w, x)| w * x).sum();
                let inp = self.input[2 * r] * step.x + self.input[2 * r + 1] * step.y;
                *out = (acc + inp).tanh();
            }
            std::mem::swap(&mut h, &mut next);
        }
        Ok(HiddenState {
            agent,
            timestamp,
            values: h,
        })
    }
}

/// Builds the encoder for `cfg` and encodes one sequence.
pub fn encode_history(displacements: &[Vec2], cfg: &EncoderConfig) -> Result<HiddenState, PlannerError> {
    HistoryEncoder::new(cfg)?.encode(displacements, AgentId(0), 0)
}
