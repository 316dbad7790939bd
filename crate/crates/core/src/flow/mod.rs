//! Social navigation planning: group pooling over encoded motion histories
//! and the flow-following waypoint policy built on top of group inference.

mod encoder;
mod pooling;
mod select;
mod weights;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::groups::{
    infer_groups, smooth_assignment, GroupAssignment, LinearClassifier, MotionHistory, DEFAULT_FEATURE_WINDOW,
    DEFAULT_SMOOTHING_WINDOW,
};
use crate::world::{AgentId, AgentState, Arena};

pub use encoder::{encode_history, EncoderConfig, HistoryEncoder};
pub use pooling::{concat_embedding, group_pool, PooledEmbedding};
pub use select::{compute_waypoint, select_group, FlowParams, GroupFlow, Waypoint, WaypointMode};
pub use weights::{LinearDecoder, PlannerWeights};

/// Encoded motion of one agent at one planner frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub agent: AgentId,
    pub timestamp: i64,
    pub values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("hidden dimension must be at least 1")]
    ZeroDimension,
    #[error("agent {0} has an empty displacement history")]
    EmptyHistory(AgentId),
    #[error("no hidden state for agent {0}")]
    MissingHidden(AgentId),
    #[error("no heading for agent {0}")]
    MissingHeading(AgentId),
    #[error("hidden state of agent {agent} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        agent: AgentId,
        expected: usize,
        found: usize,
    },
    #[error("hidden state of agent {agent} is from frame {found}, expected {expected}")]
    TimestampMismatch { agent: AgentId, expected: i64, found: i64 },
    #[error("embedding has length {found}, decoder expects {expected}")]
    EmbeddingLength { expected: usize, found: usize },
    #[error("expected {expected} weights, found {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight file: {0}")]
    WeightFormat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialPlannerConfig {
    pub hidden_dim: usize,
    pub noise_dim: usize,
    pub weight_scale: f64,
    pub history_len: usize,
    pub feature_window: usize,
    pub smoothing_window: usize,
    pub flow: FlowParams,
}

impl Default for SocialPlannerConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            noise_dim: 8,
            weight_scale: 0.1,
            history_len: 8,
            feature_window: DEFAULT_FEATURE_WINDOW,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            flow: FlowParams::default(),
        }
    }
}

/// Observations accumulated across planner frames.
#[derive(Debug, Clone, Default)]
pub struct TrackerState {
    pub frame: i64,
    pub robot: Option<MotionHistory>,
    pub pedestrians: BTreeMap<AgentId, MotionHistory>,
    pub visible: Vec<AgentId>,
    pub assignments: Vec<GroupAssignment>,
}

/// Output of one planning frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialDecision {
    pub waypoint: Waypoint,
    pub assignment: GroupAssignment,
    pub flows: Vec<GroupFlow>,
    pub followed: Option<GroupFlow>,
    pub embedding: PooledEmbedding,
}

/// Immutable planner: encoder weights, optional decoder, classifier and
/// parameters. Per-frame state lives in [`TrackerState`].
#[derive(Debug, Clone)]
pub struct SocialPlanner {
    pub cfg: SocialPlannerConfig,
    pub classifier: LinearClassifier,
    encoder: HistoryEncoder,
    decoder: Option<LinearDecoder>,
}

impl SocialPlanner {
    pub fn new(
        cfg: SocialPlannerConfig,
        classifier: LinearClassifier,
        encoder_seed: u64,
    ) -> Result<Self, PlannerError> {
        let encoder = HistoryEncoder::new(&EncoderConfig {
            dim: cfg.hidden_dim,
            seed: encoder_seed,
            weight_scale: cfg.weight_scale,
            history_len: cfg.history_len,
        })?;
        Ok(Self {
            cfg,
            classifier,
            encoder,
            decoder: None,
        })
    }

    /// Replaces the seeded encoder and installs the decoder from a weight file.
    pub fn with_weights(mut self, weights: PlannerWeights) -> Self {
        self.cfg.hidden_dim = weights.encoder.dim();
        self.cfg.noise_dim = weights.noise_dim;
        self.encoder = weights.encoder;
        self.decoder = Some(weights.decoder);
        self
    }

    pub fn encoder(&self) -> &HistoryEncoder {
        &self.encoder
    }

    /// Records a new frame of observations and the raw group assignment.
    pub fn observe(&self, tracker: &mut TrackerState, frame: i64, robot: &AgentState, visible: &[AgentState]) {
        let keep = self
            .cfg
            .feature_window
            .max(self.cfg.history_len + 1)
            .max(self.cfg.smoothing_window);
        tracker.frame = frame;
        let rh = tracker.robot.get_or_insert_with(|| MotionHistory::new(robot.id));
        rh.push_state(frame, robot);
        rh.truncate_front(keep);
        for ped in visible {
            let h = tracker
                .pedestrians
                .entry(ped.id)
                .or_insert_with(|| MotionHistory::new(ped.id));
            h.push_state(frame, ped);
            h.truncate_front(keep);
        }
        let horizon = frame - keep as i64;
        tracker
            .pedestrians
            .retain(|_, h| h.samples.last().is_some_and(|s| s.frame > horizon));
        let mut visible_ids: Vec<AgentId> = visible.iter().map(|p| p.id).collect();
        visible_ids.sort_unstable();
        tracker.visible = visible_ids;

        let current: Vec<MotionHistory> = tracker
            .visible
            .iter()
            .filter_map(|id| tracker.pedestrians.get(id).cloned())
            .collect();
        tracker
            .assignments
            .push(infer_groups(&current, &self.classifier, self.cfg.feature_window));
        if tracker.assignments.len() > self.cfg.smoothing_window {
            tracker.assignments.remove(0);
        }
    }

    /// Pure planning step over the tracker contents.
    pub fn plan(
        &self,
        tracker: &TrackerState,
        robot: &AgentState,
        goal: Vec2,
        arena: &Arena,
        noise_seed: u64,
    ) -> Result<SocialDecision, PlannerError> {
        let assignment = smooth_assignment(&tracker.assignments, self.cfg.smoothing_window);
        let window = self.cfg.smoothing_window as i64;
        let latest = |id: AgentId| {
            tracker
                .pedestrians
                .get(&id)
                .and_then(|h| h.samples.last())
                .filter(|s| s.frame == tracker.frame)
                .map(|s| s.position)
        };
        let velocities = |id: AgentId| -> Vec<Vec2> {
            tracker.pedestrians.get(&id).map_or_else(Vec::new, |h| {
                h.samples
                    .iter()
                    .filter(|s| s.frame > tracker.frame - window)
                    .map(|s| s.velocity)
                    .collect()
            })
        };
        let flows = GroupFlow::from_assignment(&assignment, &latest, &velocities);

        let final_approach = robot.position.distance(goal) <= self.cfg.flow.release_distance;
        let followed = if final_approach {
            None
        } else {
            select_group(&flows, robot, goal, &self.cfg.flow).and_then(|id| flows.iter().find(|f| f.id == id).cloned())
        };

        let embedding = self.pooled_embedding(tracker, robot, &assignment, followed.as_ref(), noise_seed)?;
        let mut waypoint = compute_waypoint(robot, goal, followed.as_ref(), self.cfg.flow.lookahead, arena);
        if let Some(dec) = &self.decoder {
            waypoint.position = arena.clamp(waypoint.position + dec.decode(&embedding)?);
        }
        Ok(SocialDecision {
            waypoint,
            assignment,
            flows,
            followed,
            embedding,
        })
    }

    /// Robot-centred pooled embedding. The robot is associated with the
    /// followed group, or stands alone when it follows nobody.
    fn pooled_embedding(
        &self,
        tracker: &TrackerState,
        robot: &AgentState,
        assignment: &GroupAssignment,
        followed: Option<&GroupFlow>,
        noise_seed: u64,
    ) -> Result<PooledEmbedding, PlannerError> {
        let frame = tracker.frame;
        let mut groups = assignment.groups.clone();
        match followed {
            Some(f) => groups[f.id].push(robot.id),
            None => groups.push(vec![robot.id]),
        }
        let with_robot = GroupAssignment::from_groups(groups);

        let robot_hist = tracker.robot.as_ref();
        let robot_at = |f: i64| {
            robot_hist
                .and_then(|h| h.samples.iter().find(|s| s.frame == f))
                .map(|s| s.position)
        };
        let own_steps: Vec<Vec2> = robot_hist
            .map(|h| h.samples.windows(2).map(|w| w[1].position - w[0].position).collect())
            .filter(|v: &Vec<Vec2>| !v.is_empty())
            .unwrap_or_else(|| vec![Vec2::ZERO]);

        let mut hidden = BTreeMap::new();
        let mut headings = BTreeMap::new();
        hidden.insert(robot.id, self.encoder.encode(&own_steps, robot.id, frame)?);
        headings.insert(robot.id, robot.heading);
        for id in &tracker.visible {
            let Some(h) = tracker.pedestrians.get(id) else { continue };
            let Some(last) = h.samples.last().filter(|s| s.frame == frame) else {
                continue;
            };
            let relative: Vec<Vec2> = h
                .samples
                .iter()
                .filter_map(|s| robot_at(s.frame).map(|r| s.position - r))
                .collect();
            if relative.is_empty() {
                continue;
            }
            hidden.insert(*id, self.encoder.encode(&relative, *id, frame)?);
            headings.insert(*id, last.heading);
        }
        let pooled = group_pool(robot.id, &hidden, &headings, &with_robot)?;
        concat_embedding(&pooled, &hidden[&robot.id], self.cfg.noise_dim, noise_seed)
    }
}
