//! Time-stepped crowd simulation with a navigating robot.

pub mod config;
mod engine;
pub mod export;
pub mod metrics;
pub mod scenarios;

use thiserror::Error;

use crate::flow::{PlannerError, Waypoint};
use crate::geom::Vec2;
use crate::local::{LibraryError, LocalPlan, Pose};
use crate::world::{AgentId, WorldError};

pub use config::{ConfigError, ConfigIssue, NavMode, ScenarioConfig};
pub use engine::{run_scenario, run_with, Simulation};
pub use metrics::{
    audit_clearance, collision_count, disturbance_metric, min_clearance, AgentInfo, ClearanceViolation, CollisionEvent,
    Trajectories,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("non-finite state at step {step} for agent {agent}")]
    NonFinite { step: usize, agent: AgentId },
    #[error("runs do not contain the same pedestrians")]
    AgentMismatch,
}

/// What the robot decided at one planner tick.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerTick {
    pub step: usize,
    pub time: f64,
    pub robot: AgentId,
    pub robot_pose: Pose,
    pub waypoint: Waypoint,
    /// Members of the followed group; empty when none is followed.
    pub followed_members: Vec<AgentId>,
    pub followed_velocity: Option<Vec2>,
    /// Perceived pedestrians and their velocities at planning time.
    pub obstacles: Vec<(AgentId, Vec2)>,
    /// Robot speed used to extrapolate obstacles, when enabled.
    pub extrapolation_speed: Option<f64>,
    pub plan: LocalPlan,
    /// Velocity command at the start of the chosen primitive.
    pub command: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub name: String,
    pub seed: u64,
    pub mode: NavMode,
    pub trajectories: Trajectories,
    pub collision_count: usize,
    pub collisions: Vec<CollisionEvent>,
    pub min_clearance: f64,
    pub path_length: f64,
    pub travel_time: f64,
    pub goal_reached: bool,
    pub disturbance: f64,
    pub ticks: Vec<PlannerTick>,
}

impl SimResult {
    /// Ticks at which a group was followed.
    pub fn follow_ticks(&self) -> impl Iterator<Item = &PlannerTick> {
        self.ticks.iter().filter(|t| !t.followed_members.is_empty())
    }
}
