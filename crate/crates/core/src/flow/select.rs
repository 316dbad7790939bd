//! Flow selection and waypoint generation.

use serde::{Deserialize, Serialize};

use crate::geom::{centroid, Vec2};
use crate::groups::GroupAssignment;
use crate::world::{AgentId, AgentState, Arena};

/// Collective motion of one inferred group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFlow {
    pub id: usize,
    pub members: Vec<AgentId>,
    pub centroid: Vec2,
    pub mean_velocity: Vec2,
}

impl GroupFlow {
    /// Flows for every group in `assignment`: centroid from `positions`,
    /// mean velocity from all `velocity_samples` of the members.
    pub fn from_assignment(
        assignment: &GroupAssignment,
        positions: &dyn Fn(AgentId) -> Option<Vec2>,
        velocity_samples: &dyn Fn(AgentId) -> Vec<Vec2>,
    ) -> Vec<GroupFlow> {
        assignment
            .groups
            .iter()
            .enumerate()
            .filter_map(|(id, members)| {
                let c = centroid(members.iter().filter_map(|&m| positions(m)))?;
                let vels: Vec<Vec2> = members.iter().flat_map(|&m| velocity_samples(m)).collect();
                let mean_velocity = centroid(vels).unwrap_or(Vec2::ZERO);
                Some(GroupFlow {
                    id,
                    members: members.clone(),
                    centroid: c,
                    mean_velocity,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Groups slower than this (m/s) are not flows.
    pub min_flow_speed: f64,
    /// Score penalty per meter of centroid distance.
    pub distance_weight: f64,
    /// Waypoint lookahead, m.
    pub lookahead: f64,
    /// Smallest group size considered a flow.
    pub min_group_size: usize,
    /// Within this distance of the goal the robot leaves any flow, m.
    pub release_distance: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            min_flow_speed: 0.3,
            distance_weight: 0.05,
            lookahead: 3.0,
            min_group_size: 1,
            release_distance: 1.5,
        }
    }
}

/// Picks the group whose flow best matches the robot→goal direction.
///
/// Candidates move at least `min_flow_speed`, head less than 90° away from
/// the goal direction, and have their centroid in the goal-ward half-plane.
/// Score is `cos(angle) − distance_weight · distance`; ties go to the
/// smallest id.
pub fn select_group(flows: &[GroupFlow], robot: &AgentState, goal: Vec2, params: &FlowParams) -> Option<usize> {
    let goal_dir = (goal - robot.position).try_normalize(1e-9)?;
    let mut sorted: Vec<&GroupFlow> = flows.iter().collect();
    sorted.sort_by_key(|f| f.id);
    let mut best: Option<(f64, usize)> = None;
    for flow in sorted {
        if flow.members.len() < params.min_group_size {
            continue;
        }
        let speed = flow.mean_velocity.norm();
        if speed < params.min_flow_speed || speed == 0.0 {
            continue;
        }
        let cos = flow.mean_velocity.dot(goal_dir) / speed;
        if cos <= 0.0 {
            continue;
        }
        let to_centroid = flow.centroid - robot.position;
        if to_centroid.dot(goal_dir) < 0.0 {
            continue;
        }
        let score = cos - params.distance_weight * to_centroid.norm();
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, flow.id));
        }
    }
    best.map(|(_, id)| id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaypointMode {
    Direct,
    Follow,
}

impl WaypointMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WaypointMode::Direct => "direct",
            WaypointMode::Follow => "follow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Vec2,
    pub followed_group: Option<usize>,
    pub mode: WaypointMode,
}

/// Target point for the local planner.
///
/// Following a group aims `lookahead` ahead of its centroid along its flow,
/// with progress along the robot→goal direction kept within [0, distance to
/// goal]. Otherwise the waypoint lies `lookahead` along the straight line to
/// the goal, or on the goal when it is closer than that.
pub fn compute_waypoint(
    robot: &AgentState,
    goal: Vec2,
    followed: Option<&GroupFlow>,
    lookahead: f64,
    arena: &Arena,
) -> Waypoint {
    let to_goal = goal - robot.position;
    let dist = to_goal.norm();
    if let (Some(flow), Some(goal_dir)) = (followed, to_goal.try_normalize(1e-9)) {
        let ahead = flow.mean_velocity.try_normalize(1e-9).unwrap_or(Vec2::ZERO);
        let mut p = flow.centroid + ahead * lookahead;
        let progress = (p - robot.position).dot(goal_dir);
        if progress < 0.0 {
            p -= goal_dir * progress;
        } else if progress > dist {
            p -= goal_dir * (progress - dist);
        }
        return Waypoint {
            position: arena.clamp(p),
            followed_group: Some(flow.id),
            mode: WaypointMode::Follow,
        };
    }
    let position = if dist <= lookahead {
        goal
    } else {
        robot.position + to_goal / dist * lookahead
    };
    Waypoint {
        position: arena.clamp(position),
        followed_group: None,
        mode: WaypointMode::Direct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::AgentKind;
    use proptest::prelude::*;

    fn robot_at(p: Vec2) -> AgentState {
        let mut r = AgentState::pedestrian(100, p, p);
        r.kind = AgentKind::Robot;
        r.radius = 0.4;
        r
    }

    fn flow(id: usize, c: Vec2, v: Vec2) -> GroupFlow {
        GroupFlow {
            id,
            members: vec![AgentId(id as u32 * 3), AgentId(id as u32 * 3 + 1)],
            centroid: c,
            mean_velocity: v,
        }
    }

    fn big_arena() -> Arena {
        Arena {
            min: Vec2::new(-100.0, -100.0),
            max: Vec2::new(100.0, 100.0),
        }
    }

    #[test]
    fn picks_co_moving_over_opposing() {
        let robot = robot_at(Vec2::new(5.0, 1.0));
        let goal = Vec2::new(5.0, 19.0);
        let flows = [
            flow(0, Vec2::new(3.5, 10.0), Vec2::new(0.0, -1.2)),
            flow(1, Vec2::new(6.5, 4.0), Vec2::new(0.0, 1.1)),
        ];
        assert_eq!(select_group(&flows, &robot, goal, &FlowParams::default()), Some(1));
    }

    #[test]
    fn nothing_to_follow() {
        let robot = robot_at(Vec2::ZERO);
        assert_eq!(
            select_group(&[], &robot, Vec2::new(1.0, 0.0), &FlowParams::default()),
            None
        );
        let slow = [flow(0, Vec2::new(2.0, 0.0), Vec2::new(0.2, 0.0))];
        assert_eq!(
            select_group(&slow, &robot, Vec2::new(9.0, 0.0), &FlowParams::default()),
            None
        );
        let behind = [flow(0, Vec2::new(-2.0, 0.0), Vec2::new(1.0, 0.0))];
        assert_eq!(
            select_group(&behind, &robot, Vec2::new(9.0, 0.0), &FlowParams::default()),
            None
        );
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let robot = robot_at(Vec2::ZERO);
        let flows = [
            flow(5, Vec2::new(2.0, 1.0), Vec2::new(1.0, 0.0)),
            flow(2, Vec2::new(2.0, 1.0), Vec2::new(1.0, 0.0)),
        ];
        assert_eq!(
            select_group(&flows, &robot, Vec2::new(9.0, 0.0), &FlowParams::default()),
            Some(2)
        );
    }

    #[test]
    fn direct_waypoints() {
        let robot = robot_at(Vec2::ZERO);
        let w = compute_waypoint(&robot, Vec2::new(10.0, 0.0), None, 3.0, &big_arena());
        assert_eq!(w.position, Vec2::new(3.0, 0.0));
        assert_eq!(w.mode, WaypointMode::Direct);
        let near = compute_waypoint(&robot, Vec2::new(1.0, 0.0), None, 3.0, &big_arena());
        assert_eq!(near.position, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn follow_waypoint_leads_the_group() {
        let robot = robot_at(Vec2::ZERO);
        let f = flow(0, Vec2::new(5.0, 0.0), Vec2::new(1.0, 0.0));
        let w = compute_waypoint(&robot, Vec2::new(20.0, 0.0), Some(&f), 3.0, &big_arena());
        assert_eq!(w.position, Vec2::new(8.0, 0.0));
        assert_eq!(w.mode, WaypointMode::Follow);
        assert_eq!(w.followed_group, Some(0));
    }

    #[test]
    fn follow_waypoint_projected_into_corridor() {
        let robot = robot_at(Vec2::ZERO);
        // Lookahead point would land behind the robot.
        let f = flow(0, Vec2::new(0.5, 2.0), Vec2::new(-1.0, 1.0));
        let w = compute_waypoint(&robot, Vec2::new(20.0, 0.0), Some(&f), 3.0, &big_arena());
        assert!(w.position.x.abs() < 1e-12);
        // ... or past the goal.
        let g = flow(0, Vec2::new(4.0, 1.0), Vec2::new(1.0, 0.0));
        let w = compute_waypoint(&robot, Vec2::new(5.0, 0.0), Some(&g), 3.0, &big_arena());
        assert!((w.position - Vec2::new(5.0, 1.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn direct_mode_makes_progress(
            rx in -50.0..50.0f64, ry in -50.0..50.0f64,
            gx in -50.0..50.0f64, gy in -50.0..50.0f64,
        ) {
            let robot = robot_at(Vec2::new(rx, ry));
            let goal = Vec2::new(gx, gy);
            let before = robot.position.distance(goal);
            prop_assume!(before > 1e-6);
            let w = compute_waypoint(&robot, goal, None, 3.0, &big_arena());
            prop_assert!(w.position.distance(goal) < before);
        }

        #[test]
        fn never_selects_opposing_flow(
            vx in -2.0..2.0f64, vy in -2.0..2.0f64,
            cx in -10.0..10.0f64, cy in -10.0..10.0f64,
            gx in -10.0..10.0f64, gy in -10.0..10.0f64,
        ) {
            let robot = robot_at(Vec2::ZERO);
            let goal = Vec2::new(gx, gy);
            let flows = [flow(0, Vec2::new(cx, cy), Vec2::new(vx, vy))];
            if select_group(&flows, &robot, goal, &FlowParams::default()).is_some() {
                prop_assert!(Vec2::new(vx, vy).dot(goal) > 0.0);
            }
        }
    }
}
