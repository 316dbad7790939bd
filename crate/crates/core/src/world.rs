//! Agent state, arena bounds and the kinematic integrator shared by every
//! other module.
//!
//! Agents have unit mass, so forces are accelerations. Integration is
//! semi-implicit Euler: velocity first, then position with the new velocity.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{heading_of, Vec2};

/// Below this speed the heading keeps its previous value.
pub const HEADING_SPEED_EPS: f64 = 1e-6;

pub const DEFAULT_V_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Pedestrian,
    Robot,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Pedestrian => "pedestrian",
            AgentKind::Robot => "robot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Radians in (−π, π].
    pub heading: f64,
    pub radius: f64,
    pub desired_speed: f64,
    pub goal: Vec2,
    pub kind: AgentKind,
}

impl AgentState {
    pub fn pedestrian(id: u32, position: Vec2, goal: Vec2) -> Self {
        Self {
            id: AgentId(id),
            position,
            velocity: Vec2::ZERO,
            heading: heading_of(goal - position),
            radius: 0.3,
            desired_speed: 1.34,
            goal,
            kind: AgentKind::Pedestrian,
        }
    }

    pub fn with_velocity(mut self, velocity: Vec2) -> Self {
        self.velocity = velocity;
        if velocity.norm() > HEADING_SPEED_EPS {
            self.heading = heading_of(velocity);
        }
        self
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    pub fn heading_vector(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub min: Vec2,
    pub max: Vec2,
}

impl Arena {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            min: Vec2::ZERO,
            max: Vec2::new(width, height),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Distance from `p` to the nearest edge; negative outside.
    pub fn margin(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}

impl Default for Arena {
    fn default() -> Self {
        Arena::new(10.0, 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLimits {
    pub v_max: f64,
    pub arena: Arena,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            v_max: DEFAULT_V_MAX,
            arena: Arena::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub agents: Vec<AgentState>,
    pub arena: Arena,
}

impl WorldState {
    pub fn new(arena: Arena) -> Self {
        Self {
            time: 0.0,
            agents: Vec::new(),
            arena,
        }
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn robot(&self) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.kind == AgentKind::Robot)
    }

    pub fn pedestrians(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.iter().filter(|a| a.kind == AgentKind::Pedestrian)
    }

    /// Adds an agent, rejecting duplicate ids and positions outside the arena.
    pub fn insert(&mut self, agent: AgentState) -> Result<(), WorldError> {
        if self.agents.iter().any(|a| a.id == agent.id) {
            return Err(WorldError::DuplicateId(agent.id));
        }
        if !agent.position.is_finite() || !self.arena.contains(agent.position) {
            return Err(WorldError::OutsideArena {
                id: agent.id,
                position: agent.position,
            });
        }
        self.agents.push(agent);
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("non-finite force {force} applied to agent {id}")]
    NonFiniteForce { id: AgentId, force: Vec2 },
    #[error("duplicate agent id {0}")]
    DuplicateId(AgentId),
    #[error("agent {id} at {position} lies outside the arena")]
    OutsideArena { id: AgentId, position: Vec2 },
}

/// Advances one agent by `dt` under `force` (an acceleration).
pub fn integrate(state: &AgentState, force: Vec2, dt: f64, limits: &MotionLimits) -> Result<AgentState, WorldError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WorldError::InvalidTimeStep(dt));
    }
    if !force.is_finite() {
        return Err(WorldError::NonFiniteForce { id: state.id, force });
    }
    let velocity = (state.velocity + force * dt).clamp_norm(limits.v_max);
    let position = limits.arena.clamp(state.position + velocity * dt);
    let heading = if velocity.norm() > HEADING_SPEED_EPS {
        heading_of(velocity)
    } else {
        state.heading
    };
    Ok(AgentState {
        position,
        velocity,
        heading,
        ..state.clone()
    })
}
