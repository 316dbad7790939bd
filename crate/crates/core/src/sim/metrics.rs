//! Safety and naturalness metrics computed from recorded trajectories.

use crate::geom::Vec2;
use crate::local::{LocalPlan, Pose, TrajectoryLibrary};
use crate::world::{AgentId, AgentKind};

use super::{PlannerTick, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentInfo {
    pub id: AgentId,
    pub kind: AgentKind,
    pub radius: f64,
    /// Scripted group index for pedestrians.
    pub group: Option<usize>,
}

/// Positions of every agent at common timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectories {
    pub times: Vec<f64>,
    pub agents: Vec<AgentInfo>,
    /// `positions[a][t]` is agent `agents[a]` at `times[t]`.
    pub positions: Vec<Vec<Vec2>>,
}

impl Trajectories {
    pub fn index_of(&self, id: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn robot_index(&self) -> Option<usize> {
        self.agents.iter().position(|a| a.kind == AgentKind::Robot)
    }

    pub fn path(&self, id: AgentId) -> Option<&[Vec2]> {
        self.index_of(id).map(|i| self.positions[i].as_slice())
    }

    pub fn path_length(&self, id: AgentId) -> f64 {
        self.path(id)
            .map_or(0.0, |p| p.windows(2).map(|w| w[0].distance(w[1])).sum())
    }
}

/// One maximal interval of robot–pedestrian overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub pedestrian: AgentId,
    pub start: f64,
    pub end: f64,
}

/// Overlap intervals between the robot and each pedestrian, where overlap
/// means center distance below the sum of radii. Events are ordered by
/// pedestrian id, then start time.
pub fn collision_count(traj: &Trajectories) -> (usize, Vec<CollisionEvent>) {
    let Some(r) = traj.robot_index() else {
        return (0, Vec::new());
    };
    let robot = &traj.agents[r];
    let mut events = Vec::new();
    let mut peds: Vec<usize> = (0..traj.agents.len())
        .filter(|&k| traj.agents[k].kind == AgentKind::Pedestrian)
        .collect();
    peds.sort_by_key(|&k| traj.agents[k].id);
    for k in peds {
        let limit = robot.radius + traj.agents[k].radius;
        let mut open: Option<(f64, f64)> = None;
        for (t, &time) in traj.times.iter().enumerate() {
            let overlapping = traj.positions[r][t].distance(traj.positions[k][t]) < limit;
            open = match (open, overlapping) {
                (None, true) => Some((time, time)),
                (Some((s, _)), true) => Some((s, time)),
                (Some((s, e)), false) => {
                    events.push(CollisionEvent {
                        pedestrian: traj.agents[k].id,
                        start: s,
                        end: e,
                    });
                    None
                }
                (None, false) => None,
            };
        }
        if let Some((s, e)) = open {
            events.push(CollisionEvent {
                pedestrian: traj.agents[k].id,
                start: s,
                end: e,
            });
        }
    }
    (events.len(), events)
}

/// Smallest surface gap between the robot and any pedestrian; negative
/// when they overlap, infinite without pedestrians.
pub fn min_clearance(traj: &Trajectories) -> f64 {
    let Some(r) = traj.robot_index() else {
        return f64::INFINITY;
    };
    let rr = traj.agents[r].radius;
    let mut best = f64::INFINITY;
    for (k, info) in traj.agents.iter().enumerate() {
        if info.kind != AgentKind::Pedestrian {
            continue;
        }
        for (a, b) in traj.positions[r].iter().zip(&traj.positions[k]) {
            best = best.min(a.distance(*b) - rr - info.radius);
        }
    }
    best
}

/// Mean over pedestrians of the time-averaged position deviation between a
/// run and its robot-free counterpart, over their common timestamps.
pub fn disturbance_metric(run: &Trajectories, baseline: &Trajectories) -> Result<f64, SimError> {
    let mut ids: Vec<AgentId> = run
        .agents
        .iter()
        .filter(|a| a.kind == AgentKind::Pedestrian)
        .map(|a| a.id)
        .collect();
    let mut base_ids: Vec<AgentId> = baseline
        .agents
        .iter()
        .filter(|a| a.kind == AgentKind::Pedestrian)
        .map(|a| a.id)
        .collect();
    ids.sort_unstable();
    base_ids.sort_unstable();
    if ids != base_ids {
        return Err(SimError::AgentMismatch);
    }
    if ids.is_empty() {
        return Ok(0.0);
    }
    let steps = run.times.len().min(baseline.times.len());
    if steps == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for id in &ids {
        let a = run.path(*id).expect("listed");
        let b = baseline.path(*id).expect("listed");
        let dev: f64 = a[..steps].iter().zip(&b[..steps]).map(|(p, q)| p.distance(*q)).sum();
        total += dev / steps as f64;
    }
    Ok(total / ids.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceViolation {
    pub step: usize,
    pub obstacle: AgentId,
    pub gap: f64,
}

/// Re-checks every followed primitive against the obstacle positions
/// recorded at its planning step.
pub fn audit_clearance(traj: &Trajectories, ticks: &[PlannerTick], lib: &TrajectoryLibrary) -> Vec<ClearanceViolation> {
    let mut out = Vec::new();
    for tick in ticks {
        let LocalPlan::Follow(id) = tick.plan else { continue };
        let Some(prim) = lib.primitive(id) else { continue };
        let start = Pose::new(
            traj.path(tick.robot).map_or(tick.robot_pose.position, |p| p[tick.step]),
            tick.robot_pose.heading,
        );
        for &(obs, velocity) in &tick.obstacles {
            let Some(k) = traj.index_of(obs) else { continue };
            let center = traj.positions[k][tick.step];
            let limit = lib.robot_radius + traj.agents[k].radius + lib.inflation;
            for (local, s) in &prim.poses {
                let c = match tick.extrapolation_speed {
                    Some(v) if v > 0.0 => center + velocity * (s / v),
                    _ => center,
                };
                let gap = start.compose(local).position.distance(c) - limit;
                if gap <= 0.0 {
                    out.push(ClearanceViolation {
                        step: tick.step,
                        obstacle: obs,
                        gap,
                    });
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent(robot: Vec<Vec2>, ped: Vec<Vec2>) -> Trajectories {
        Trajectories {
            times: (0..robot.len()).map(|k| k as f64 * 0.1).collect(),
            agents: vec![
                AgentInfo {
                    id: AgentId(0),
                    kind: AgentKind::Pedestrian,
                    radius: 0.3,
                    group: Some(0),
                },
                AgentInfo {
                    id: AgentId(1),
                    kind: AgentKind::Robot,
                    radius: 0.4,
                    group: None,
                },
            ],
            positions: vec![ped, robot],
        }
    }

    #[test]
    fn never_close_means_no_collisions() {
        let robot = vec![Vec2::ZERO; 20];
        let ped: Vec<Vec2> = (0..20).map(|k| Vec2::new(0.71 + k as f64 * 0.1, 0.0)).collect();
        assert_eq!(collision_count(&two_agent(robot, ped)).0, 0);
    }

    #[test]
    fn one_continuous_overlap_is_one_event() {
        let robot = vec![Vec2::ZERO; 30];
        let ped: Vec<Vec2> = (0..30)
            .map(|k| {
                if (10..20).contains(&k) {
                    Vec2::new(0.5, 0.0)
                } else {
                    Vec2::new(3.0, 0.0)
                }
            })
            .collect();
        let (n, ev) = collision_count(&two_agent(robot, ped));
        assert_eq!(n, 1);
        assert!((ev[0].start - 1.0).abs() < 1e-12);
        assert!((ev[0].end - 1.9).abs() < 1e-12);
    }

    #[test]
    fn separated_overlaps_count_twice() {
        let robot = vec![Vec2::ZERO; 30];
        let ped: Vec<Vec2> = (0..30)
            .map(|k| match k {
                5..=8 | 15..=29 => Vec2::new(0.6, 0.0),
                _ => Vec2::new(2.0, 0.0),
            })
            .collect();
        let (n, ev) = collision_count(&two_agent(robot, ped));
        assert_eq!(n, 2);
        assert!((ev[1].end - 2.9).abs() < 1e-12, "open interval closed at the end");
    }

    #[test]
    fn clearance_is_surface_gap() {
        let robot = vec![Vec2::ZERO; 2];
        let ped = vec![Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!((min_clearance(&two_agent(robot, ped)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn disturbance_of_identical_runs_is_zero() {
        let robot = vec![Vec2::ZERO; 5];
        let ped: Vec<Vec2> = (0..5).map(|k| Vec2::new(k as f64, 1.0)).collect();
        let t = two_agent(robot, ped);
        assert_eq!(disturbance_metric(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn disturbance_requires_same_pedestrians() {
        let robot = vec![Vec2::ZERO; 5];
        let ped = vec![Vec2::ZERO; 5];
        let a = two_agent(robot.clone(), ped.clone());
        let mut b = two_agent(robot, ped);
        b.agents[0].id = AgentId(7);
        assert_eq!(disturbance_metric(&a, &b), Err(SimError::AgentMismatch));
    }
}
