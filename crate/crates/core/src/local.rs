//! Trajectory-library local planner.
//!
//! A fan of constant-curvature arcs is precomputed in the robot frame. Each
//! tick the arcs are placed at the robot pose, any arc passing within the
//! inflated clearance of an obstacle is discarded, and the surviving arc
//! whose endpoint lands nearest the waypoint is followed. Given an arena,
//! arcs that run the robot into its boundary are discarded too. With every
//! arc blocked the robot stops.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::Waypoint;
use crate::geom::{wrap_angle, Vec2};
use crate::world::Arena;

/// Arc-length spacing of the sampled poses, m.
pub const SAMPLE_SPACING: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum LibraryError {
    #[error("curvature count must be odd and at least 3, got {0}")]
    BadCount(usize),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("primitive {id} deviates from its arc by {error} m")]
    Inconsistent { id: usize, error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading }
    }

    /// Maps a pose expressed in this pose's frame into the world frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.position + local.position.rotate(self.heading),
            heading: wrap_angle(self.heading + local.heading),
        }
    }
}

/// Point on a constant-curvature arc starting at the origin heading +x.
pub fn arc_pose(curvature: f64, s: f64) -> Pose {
    if curvature == 0.0 {
        return Pose::new(Vec2::new(s, 0.0), 0.0);
    }
    let theta = curvature * s;
    Pose::new(
        Vec2::new(theta.sin() / curvature, (1.0 - theta.cos()) / curvature),
        wrap_angle(theta),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitive {
    pub id: usize,
    pub curvature: f64,
    pub length: f64,
    /// Robot-frame poses every [`SAMPLE_SPACING`] after the start, always
    /// ending exactly at `length`.
    pub poses: Vec<(Pose, f64)>,
}

impl MotionPrimitive {
    fn build(id: usize, curvature: f64, length: f64) -> Self {
        let n = (length / SAMPLE_SPACING - 1e-9).ceil().max(1.0) as usize;
        let poses = (1..=n)
            .map(|k| {
                let s = if k == n { length } else { k as f64 * SAMPLE_SPACING };
                (arc_pose(curvature, s), s)
            })
            .collect();
        Self {
            id,
            curvature,
            length,
            poses,
        }
    }

    pub fn endpoint(&self) -> Pose {
        self.poses.last().map_or(Pose::new(Vec2::ZERO, 0.0), |(p, _)| *p)
    }

    /// Unit tangent at arc length `s` in the robot frame.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        Vec2::from_angle(self.curvature * s.clamp(0.0, self.length))
    }

    fn max_arc_error(&self) -> f64 {
        self.poses
            .iter()
            .map(|(p, s)| {
                if self.curvature == 0.0 {
                    (p.position.y.abs()).max((p.position.x - s).abs())
                } else {
                    let r = 1.0 / self.curvature;
                    let center = Vec2::new(0.0, r);
                    (p.position.distance(center) - r.abs()).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LibraryParams {
    pub curvature_count: usize,
    pub max_curvature: f64,
    pub length: f64,
    pub inflation: f64,
    pub sensing_radius: f64,
    /// Move obstacles along their velocity over the traversal time.
    pub extrapolate_obstacles: bool,
    /// Discard arcs that run into the arena boundary.
    pub respect_arena: bool,
}

impl Default for LibraryParams {
    fn default() -> Self {
        Self {
            curvature_count: 21,
            max_curvature: 1.0,
            length: 2.5,
            inflation: 0.1,
            sensing_radius: 8.0,
            extrapolate_obstacles: false,
            respect_arena: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLibrary {
    /// Ordered by curvature, ascending.
    pub primitives: Vec<MotionPrimitive>,
    pub robot_radius: f64,
    pub inflation: f64,
}

/// Builds `count` arcs with curvatures evenly spaced in [−max, max].
pub fn build_library(
    count: usize,
    max_curvature: f64,
    length: f64,
    robot_radius: f64,
    inflation: f64,
) -> Result<TrajectoryLibrary, LibraryError> {
    if count < 3 || count.is_multiple_of(2) {
        return Err(LibraryError::BadCount(count));
    }
    for (name, value) in [
        ("max curvature", max_curvature),
        ("length", length),
        ("robot radius", robot_radius),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(LibraryError::NonPositive { name, value });
        }
    }
    if !(inflation.is_finite() && inflation >= 0.0) {
        return Err(LibraryError::NonPositive {
            name: "inflation",
            value: inflation,
        });
    }
    let half = (count - 1) as f64;
    let primitives: Vec<MotionPrimitive> = (0..count)
        .map(|k| {
            let curvature = max_curvature * (2.0 * k as f64 - half) / half;
            MotionPrimitive::build(k, curvature, length)
        })
        .collect();
    for p in &primitives {
        let error = p.max_arc_error();
        if error > 1e-9 {
            return Err(LibraryError::Inconsistent { id: p.id, error });
        }
    }
    Ok(TrajectoryLibrary {
        primitives,
        robot_radius,
        inflation,
    })
}

impl TrajectoryLibrary {
    pub fn from_params(params: &LibraryParams, robot_radius: f64) -> Result<Self, LibraryError> {
        build_library(
            params.curvature_count,
            params.max_curvature,
            params.length,
            robot_radius,
            params.inflation,
        )
    }

    pub fn primitive(&self, id: usize) -> Option<&MotionPrimitive> {
        self.primitives.get(id)
    }

    /// CSV with one row per sample: `id,curvature,x,y,heading`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,curvature,x,y,heading\n");
        for p in &self.primitives {
            for (pose, _) in &p.poses {
                let _ = writeln!(
                    out,
                    "{},{:.6},{:.6},{:.6},{:.6}",
                    p.id, p.curvature, pose.position.x, pose.position.y, pose.heading
                );
            }
        }
        out
    }

    /// Whether any sample of `prim` placed at `start` comes within the
    /// inflated clearance of an obstacle.
    pub fn is_blocked(
        &self,
        prim: &MotionPrimitive,
        start: &Pose,
        obstacles: &[Obstacle],
        timing: Option<f64>,
    ) -> bool {
        prim.poses.iter().any(|(local, s)| {
            let p = start.compose(local).position;
            obstacles.iter().any(|o| {
                let center = match timing {
                    Some(speed) if speed > 0.0 => o.center + o.velocity * (s / speed),
                    _ => o.center,
                };
                p.distance(center) <= self.robot_radius + o.radius + self.inflation
            })
        })
    }

    /// Whether the first `horizon` meters of `prim` bring the robot closer
    /// to the arena edge than its radius, or than it already is when it
    /// starts inside that band.
    pub fn leaves_arena(&self, prim: &MotionPrimitive, start: &Pose, arena: &Arena, horizon: f64) -> bool {
        let limit = self.robot_radius.min(arena.margin(start.position));
        prim.poses
            .iter()
            .skip(1)
            .take_while(|(_, s)| *s <= horizon)
            .any(|(local, _)| arena.margin(start.compose(local).position) < limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
    pub velocity: Vec2,
}

impl Obstacle {
    pub fn fixed(center: Vec2, radius: f64) -> Self {
        Self {
            center,
            radius,
            velocity: Vec2::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalPlan {
    /// Index into the library.
    Follow(usize),
    Stop,
}

/// Chooses the clear arc whose endpoint is nearest the waypoint.
///
/// `extrapolate_at` enables moving obstacles along their velocity, assuming
/// the robot traverses the arc at that speed. Ties on endpoint distance go to
/// the smaller |curvature|, then to the smaller id.
pub fn plan_local(
    lib: &TrajectoryLibrary,
    start: &Pose,
    obstacles: &[Obstacle],
    waypoint: &Waypoint,
    extrapolate_at: Option<f64>,
) -> LocalPlan {
    plan_local_in(lib, start, obstacles, waypoint, extrapolate_at, None)
}

/// [`plan_local`] that also keeps the robot inside `arena` when given. The
/// boundary is checked only as far along each arc as the waypoint is from
/// the robot.
pub fn plan_local_in(
    lib: &TrajectoryLibrary,
    start: &Pose,
    obstacles: &[Obstacle],
    waypoint: &Waypoint,
    extrapolate_at: Option<f64>,
    arena: Option<&Arena>,
) -> LocalPlan {
    let horizon = start.position.distance(waypoint.position);
    let mut best: Option<(f64, f64, usize)> = None;
    for prim in &lib.primitives {
        if lib.is_blocked(prim, start, obstacles, extrapolate_at)
            || arena.is_some_and(|a| lib.leaves_arena(prim, start, a, horizon))
        {
            continue;
        }
        let end = start.compose(&prim.endpoint()).position;
        let key = (end.distance(waypoint.position), prim.curvature.abs(), prim.id);
        if best.is_none_or(|b| key.partial_cmp(&b).is_some_and(|o| o.is_lt())) {
            best = Some(key);
        }
    }
    best.map_or(LocalPlan::Stop, |(_, _, id)| LocalPlan::Follow(id))
}

/// Velocity along the arc's starting tangent at `cruise` speed; zero on stop.
pub fn command_velocity(plan: LocalPlan, lib: &TrajectoryLibrary, heading: f64, cruise: f64) -> Vec2 {
    command_velocity_at(plan, lib, heading, cruise, 0.0)
}

/// Velocity tangent to the arc `s` meters after its start; `heading` is the
/// robot heading when the arc was planned.
pub fn command_velocity_at(plan: LocalPlan, lib: &TrajectoryLibrary, heading: f64, cruise: f64, s: f64) -> Vec2 {
    match plan {
        LocalPlan::Stop => Vec2::ZERO,
        LocalPlan::Follow(id) => match lib.primitive(id) {
            Some(p) => p.tangent_at(s).rotate(heading) * cruise,
            None => Vec2::ZERO,
        },
    }
}
