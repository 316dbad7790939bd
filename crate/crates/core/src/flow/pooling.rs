//! Group pooling: heading-weighted, group-masked aggregation of the other
//! agents' hidden states, reduced by element-wise maximum, and the decoder
//! input built from it.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{HiddenState, PlannerError};
use crate::groups::GroupAssignment;
use crate::world::AgentId;

/// Pooled vector for `target`.
///
/// Each other agent contributes `I[same group] · cos(θ_target − θ_j) · h_j`;
/// masked agents contribute a zero row. The result is the element-wise
/// maximum over all other agents, or the zero vector when there are none.
pub fn group_pool(
    target: AgentId,
    hidden: &BTreeMap<AgentId, HiddenState>,
    headings: &BTreeMap<AgentId, f64>,
    assignment: &GroupAssignment,
) -> Result<Vec<f64>, PlannerError> {
    let own = hidden.get(&target).ok_or(PlannerError::MissingHidden(target))?;
    let dim = own.values.len();
    let own_heading = *headings.get(&target).ok_or(PlannerError::MissingHeading(target))?;

    let mut pooled: Option<Vec<f64>> = None;
    for (&j, h) in hidden {
        if j == target {
            continue;
        }
        if h.values.len() != dim {
            return Err(PlannerError::DimensionMismatch {
                agent: j,
                expected: dim,
                found: h.values.len(),
            });
        }
        if h.timestamp != own.timestamp {
            return Err(PlannerError::TimestampMismatch {
                agent: j,
                expected: own.timestamp,
                found: h.timestamp,
            });
        }
        let heading = *headings.get(&j).ok_or(PlannerError::MissingHeading(j))?;
        let acc = pooled.get_or_insert_with(|| vec![f64::NEG_INFINITY; dim]);
        if assignment.together(target, j) {
            let weight = (own_heading - heading).cos();
            for (a, v) in acc.iter_mut().zip(&h.values) {
                *a = a.max(weight * v);
            }
        } else {
            for a in acc.iter_mut() {
                *a = a.max(0.0);
            }
        }
    }
    Ok(pooled.unwrap_or_else(|| vec![0.0; dim]))
}

/// Decoder input `[pooled ∥ own ∥ noise]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledEmbedding {
    pub pooled: Vec<f64>,
    pub concatenated: Vec<f64>,
    pub noise_dim: usize,
}

/// Appends `noise_dim` standard-normal draws from the generator seeded with
/// `noise_seed`. `noise_dim = 0` gives the deterministic embedding.
pub fn concat_embedding(
    pooled: &[f64],
    own: &HiddenState,
    noise_dim: usize,
    noise_seed: u64,
) -> Result<PooledEmbedding, PlannerError> {
    if pooled.len() != own.values.len() {
        return Err(PlannerError::DimensionMismatch {
            agent: own.agent,
            expected: pooled.len(),
            found: own.values.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut concatenated = Vec::with_capacity(2 * pooled.len() + noise_dim);
    concatenated.extend_from_slice(pooled);
    concatenated.extend_from_slice(&own.values);
    concatenated.extend((0..noise_dim).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
    Ok(PooledEmbedding {
        pooled: pooled.to_vec(),
        concatenated,
        noise_dim,
    })
}
