//! Trajectory predictors evaluated by the harness.

use crate::flow::{compute_waypoint, select_group, FlowParams, GroupFlow};
use crate::geom::Vec2;
use crate::groups::{infer_groups, LinearClassifier, MotionHistory};
use crate::world::{AgentId, AgentState, Arena};

use super::metrics::{linear_baseline, linear_fit};

/// What a predictor sees for one window.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    pub target: AgentId,
    /// One position per observed frame.
    pub observed: &'a [Vec2],
    /// Other pedestrians seen during the observation frames.
    pub neighbors: &'a [MotionHistory],
    /// Frame index of the last observation.
    pub last_frame: i64,
    pub frame_period: f64,
}

pub trait Predictor: Sync {
    fn name(&self) -> &'static str;
    fn predict(&self, scene: &Scene<'_>, t_pred: usize) -> Vec<Vec2>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearPredictor;

impl Predictor for LinearPredictor {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn predict(&self, scene: &Scene<'_>, t_pred: usize) -> Vec<Vec2> {
        linear_baseline(scene.observed, t_pred)
    }
}

/// Treats the target as the robot: its goal is the straight-line
/// extrapolation of its observed motion, and each frame it steps toward the
/// waypoint of the flow it would join, at its observed speed.
///
/// Groups come from the neighbors' observed motion; each neighbor keeps its
/// last observed velocity over the prediction horizon.
#[derive(Debug, Clone)]
pub struct FlowPredictor {
    pub classifier: LinearClassifier,
    pub params: FlowParams,
    pub feature_window: usize,
}

impl Default for FlowPredictor {
    fn default() -> Self {
        Self {
            classifier: LinearClassifier::default(),
            params: FlowParams::default(),
            feature_window: crate::groups::DEFAULT_FEATURE_WINDOW,
        }
    }
}

impl Predictor for FlowPredictor {
    fn name(&self) -> &'static str {
        "flow"
    }

    fn predict(&self, scene: &Scene<'_>, t_pred: usize) -> Vec<Vec2> {
        let (slope, last) = linear_fit(scene.observed);
        let goal = last + slope * t_pred as f64;
        let step = slope.norm();
        let velocity = slope / scene.frame_period;

        let present: Vec<MotionHistory> = scene
            .neighbors
            .iter()
            .filter(|h| h.id != scene.target && h.samples.last().is_some_and(|s| s.frame == scene.last_frame))
            .cloned()
            .collect();
        let assignment = infer_groups(&present, &self.classifier, self.feature_window);
        let state = |id: AgentId| {
            present
                .iter()
                .find(|h| h.id == id)
                .and_then(|h| h.samples.last())
                .map(|s| (s.position, s.velocity))
        };

        let open = Arena {
            min: Vec2::new(f64::MIN, f64::MIN),
            max: Vec2::new(f64::MAX, f64::MAX),
        };
        let mut position = last;
        let mut out = Vec::with_capacity(t_pred);
        for k in 1..=t_pred {
            let elapsed = (k - 1) as f64 * scene.frame_period;
            let flows = GroupFlow::from_assignment(&assignment, &|id| state(id).map(|(p, v)| p + v * elapsed), &|id| {
                state(id).map(|(_, v)| v).into_iter().collect()
            });
            let me = AgentState::pedestrian(scene.target.0, position, goal).with_velocity(velocity);
            let followed =
                select_group(&flows, &me, goal, &self.params).and_then(|id| flows.iter().find(|f| f.id == id));
            let waypoint = compute_waypoint(&me, goal, followed, self.params.lookahead, &open);
            let offset = waypoint.position - position;
            let dist = offset.norm();
            if dist > 0.0 {
                position += offset * (step.min(dist) / dist);
            }
            out.push(position);
        }
        out
    }
}
