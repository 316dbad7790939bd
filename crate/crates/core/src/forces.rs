//! Extended social force model.
//!
//! Three contributions act on each pedestrian: a driving term relaxing the
//! velocity toward the goal, exponential pairwise repulsion from non-members,
//! and a three-part group term (gaze turning, attraction to the group
//! centroid, short-range repulsion between members).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geom::{centroid, heading_of, wrap_angle, Vec2};
use crate::world::AgentState;

/// Distance to the goal below which the driving force vanishes.
pub const ARRIVAL_RADIUS: f64 = 0.1;

const COINCIDENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceParams {
    /// Relaxation time, seconds.
    pub tau: f64,
    /// Repulsion strength, m/s².
    pub repulsion_strength: f64,
    /// Repulsion range, m.
    pub repulsion_range: f64,
    pub beta_gaze: f64,
    pub beta_attract: f64,
    pub beta_repel: f64,
    pub group_attract_threshold: f64,
    pub group_repel_dist: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            tau: 0.5,
            repulsion_strength: 2.1,
            repulsion_range: 0.3,
            beta_gaze: 4.0,
            beta_attract: 3.0,
            beta_repel: 1.0,
            group_attract_threshold: 1.5,
            group_repel_dist: 0.8,
        }
    }
}

impl ForceParams {
    /// Names of parameters that are not strictly positive and finite.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        [
            ("tau", self.tau),
            ("repulsion_strength", self.repulsion_strength),
            ("repulsion_range", self.repulsion_range),
            ("beta_gaze", self.beta_gaze),
            ("beta_attract", self.beta_attract),
            ("beta_repel", self.beta_repel),
            ("group_attract_threshold", self.group_attract_threshold),
            ("group_repel_dist", self.group_repel_dist),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .map(|(k, _)| k)
        .collect()
    }

    pub fn repulsion_cap(&self) -> f64 {
        10.0 * self.repulsion_strength
    }
}

/// The three force components acting on one agent and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSet {
    pub driving: Vec2,
    pub repulsive: Vec2,
    pub group: Vec2,
    pub total: Vec2,
}

impl ForceSet {
    pub fn new(driving: Vec2, repulsive: Vec2, group: Vec2) -> Self {
        Self {
            driving,
            repulsive,
            group,
            total: driving + repulsive + group,
        }
    }
}

/// Relaxation toward `desired_speed` along the goal direction.
pub fn driving_force(agent: &AgentState, params: &ForceParams) -> Vec2 {
    match (agent.goal - agent.position).try_normalize(ARRIVAL_RADIUS) {
        Some(dir) => (dir * agent.desired_speed - agent.velocity) / params.tau,
        None => Vec2::ZERO,
    }
}

/// Circular-specification repulsion exerted by `other` on `agent`.
pub fn repulsive_force(agent: &AgentState, other: &AgentState, params: &ForceParams) -> Vec2 {
    let offset = agent.position - other.position;
    let d = offset.norm();
    let cap = params.repulsion_cap();
    if d < COINCIDENT_EPS {
        return Vec2::new(cap, 0.0);
    }
    let magnitude = params.repulsion_strength * ((agent.radius + other.radius - d) / params.repulsion_range).exp();
    offset / d * magnitude.min(cap)
}

/// Cohesion force from the agent's own group members (excluding itself).
pub fn group_force(agent: &AgentState, members: &[AgentState], params: &ForceParams) -> Vec2 {
    let Some(center) = centroid(members.iter().map(|m| m.position)) else {
        return Vec2::ZERO;
    };
    let to_center = center - agent.position;
    let dist = to_center.norm();

    let mut force = Vec2::ZERO;
    if dist > COINCIDENT_EPS {
        // Head turn needed to bring the centroid into a ±90° vision field,
        // at most π/2 when it is straight behind. Scaled by the walking
        // velocity, so it slows a member but never reverses it.
        let bearing = wrap_angle(heading_of(to_center) - agent.heading).abs();
        let alpha = (bearing - FRAC_PI_2).clamp(0.0, FRAC_PI_2);
        force -= agent.velocity * (params.beta_gaze * alpha);
        if dist > params.group_attract_threshold {
            force += to_center / dist * params.beta_attract;
        }
    }
    for m in members {
        let away = agent.position - m.position;
        let d = away.norm();
        if d < params.group_repel_dist {
            let dir = if d < COINCIDENT_EPS {
                Vec2::new(1.0, 0.0)
            } else {
                away / d
            };
            force += dir * params.beta_repel;
        }
    }
    force
}

/// All forces on `agent`. `others` excludes the agent; members of its group
/// in `group_members` are excluded from pairwise repulsion.
pub fn total_force(
    agent: &AgentState,
    others: &[AgentState],
    group_members: &[AgentState],
    params: &ForceParams,
) -> ForceSet {
    let driving = driving_force(agent, params);
    let repulsive = others
        .iter()
        .filter(|o| o.id != agent.id && !group_members.iter().any(|m| m.id == o.id))
        .map(|o| repulsive_force(agent, o, params))
        .sum();
    let group = group_force(agent, group_members, params);
    ForceSet::new(driving, repulsive, group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::AgentId;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn ped(id: u32, x: f64, y: f64) -> AgentState {
        AgentState::pedestrian(id, Vec2::new(x, y), Vec2::new(x + 10.0, y))
    }

    #[test]
    fn driving_from_rest() {
        let mut a = ped(0, 0.0, 0.0);
        a.desired_speed = 1.34;
        let f = driving_force(&a, &ForceParams::default());
        assert!((f.x - 2.68).abs() < 1e-12);
        assert_eq!(f.y, 0.0);
    }

    #[test]
    fn driving_equilibrium_and_arrival() {
        let p = ForceParams::default();
        let a = ped(0, 0.0, 0.0).with_velocity(Vec2::new(1.34, 0.0));
        assert_eq!(driving_force(&a, &p), Vec2::ZERO);
        let mut b = ped(1, 0.0, 0.0);
        b.goal = Vec2::new(0.05, 0.0);
        assert_eq!(driving_force(&b, &p), Vec2::ZERO);
    }

    #[test]
    fn repulsion_at_contact_and_one_range_out() {
        let p = ForceParams::default();
        let a = ped(0, 0.0, 0.0);
        let touching = ped(1, 0.6, 0.0);
        let f = repulsive_force(&a, &touching, &p);
        assert!((f.norm() - 2.1).abs() < 1e-12);
        assert!(f.x < 0.0, "pushes away from the other agent");
        let further = ped(2, 0.9, 0.0);
        let g = repulsive_force(&a, &further, &p);
        assert!((g.norm() - 2.1 / std::f64::consts::E).abs() < 1e-12);
        let far = ped(3, 100.0, 0.0);
        assert!(repulsive_force(&a, &far, &p).norm() < 1e-100);
    }

    #[test]
    fn repulsion_capped_and_coincident_fallback() {
        let p = ForceParams {
            repulsion_range: 0.1,
            ..ForceParams::default()
        };
        let a = ped(0, 0.0, 0.0);
        let close = ped(1, 0.0, 0.01);
        assert!((repulsive_force(&a, &close, &p).norm() - 21.0).abs() < 1e-12);
        let same = ped(2, 0.0, 0.0);
        assert_eq!(repulsive_force(&a, &same, &p), Vec2::new(21.0, 0.0));
    }

    #[test]
    fn singleton_group_has_no_force() {
        assert_eq!(group_force(&ped(0, 0.0, 0.0), &[], &ForceParams::default()), Vec2::ZERO);
    }

    #[test]
    fn agent_at_centroid_facing_flow() {
        // Members symmetric about the agent: centroid coincides with it, so
        // gaze and attraction vanish; members are farther than the repulsion
        // distance.
        let agent = ped(0, 5.0, 5.0).with_velocity(Vec2::new(1.0, 0.0));
        let members = [ped(1, 5.0, 6.0), ped(2, 5.0, 4.0)];
        assert_eq!(group_force(&agent, &members, &ForceParams::default()), Vec2::ZERO);
    }

    #[test]
    fn attraction_when_far_behind() {
        let p = ForceParams::default();
        // Agent 3 m behind the centroid and facing it: α = 0.
        let agent = ped(0, 0.0, 0.0).with_velocity(Vec2::new(1.0, 0.0));
        let members = [ped(1, 3.0, 1.0), ped(2, 3.0, -1.0)];
        let f = group_force(&agent, &members, &p);
        assert!((f - Vec2::new(3.0, 0.0)).norm() < 1e-12);
        // Below the threshold nothing pulls.
        let near = [ped(1, 1.0, 1.0), ped(2, 1.0, -1.0)];
        assert!(group_force(&agent, &near, &p).norm() < 1e-12);
    }

    #[test]
    fn gaze_term_slows_when_centroid_behind() {
        let p = ForceParams::default();
        let agent = ped(0, 0.0, 0.0).with_velocity(Vec2::new(1.0, 0.0));
        // Centroid abeam at 1 m sits on the edge of the vision field.
        let abeam = [ped(1, 0.0, 1.0)];
        assert!(group_force(&agent, &abeam, &p).norm() < 1e-12);
        // Centroid behind-left at 135°: the head turns π/4 past the field edge.
        let behind = [ped(1, -0.7, 0.7)];
        let f = group_force(&agent, &behind, &p);
        assert!((f.x + 4.0 * FRAC_PI_4).abs() < 1e-12);
        assert!(f.y.abs() < 1e-12);
        // Mirror image gives the same braking force.
        let mirrored = [ped(1, -0.7, -0.7)];
        assert!((group_force(&agent, &mirrored, &p) - f).norm() < 1e-12);
        // Straight behind saturates at π/2; at rest there is nothing to brake.
        let straight = [ped(1, -1.0, 0.0)];
        assert!((group_force(&agent, &straight, &p).x + 4.0 * FRAC_PI_2).abs() < 1e-12);
        let resting = ped(0, 0.0, 0.0);
        assert!(group_force(&resting, &straight, &p).norm() < 1e-12);
    }

    #[test]
    fn member_repulsion_inside_personal_distance() {
        let p = ForceParams::default();
        let agent = ped(0, 0.0, 0.0).with_velocity(Vec2::new(0.0, 1.0));
        let members = [ped(1, 0.5, 0.0)];
        let f = group_force(&agent, &members, &p);
        // The member is abeam, so only the 1.0 push toward −x remains.
        assert!((f - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lone_agent_total_is_driving() {
        let p = ForceParams::default();
        let a = ped(0, 0.0, 0.0);
        let set = total_force(&a, &[], &[], &p);
        assert_eq!(set.repulsive, Vec2::ZERO);
        assert_eq!(set.group, Vec2::ZERO);
        assert_eq!(set.total, set.driving);
    }

    #[test]
    fn head_on_pair_is_antisymmetric() {
        let p = ForceParams::default();
        let a = ped(0, 0.0, 0.0).with_velocity(Vec2::new(1.0, 0.0));
        let mut b = ped(1, 1.5, 0.0).with_velocity(Vec2::new(-1.0, 0.0));
        b.goal = Vec2::new(-10.0, 0.0);
        let fa = total_force(&a, std::slice::from_ref(&b), &[], &p).repulsive;
        let fb = total_force(&b, std::slice::from_ref(&a), &[], &p).repulsive;
        assert_eq!(fa, -fb);
    }

    #[test]
    fn members_excluded_from_repulsion() {
        let p = ForceParams::default();
        let a = ped(0, 0.0, 0.0);
        let m = ped(1, 0.5, 0.0);
        let set = total_force(&a, std::slice::from_ref(&m), std::slice::from_ref(&m), &p);
        assert_eq!(set.repulsive, Vec2::ZERO);
        assert_ne!(set.group, Vec2::ZERO);
    }

    #[test]
    fn invalid_params_listed() {
        let p = ForceParams {
            tau: 0.0,
            beta_gaze: -1.0,
            ..ForceParams::default()
        };
        assert_eq!(p.invalid_fields(), vec!["tau", "beta_gaze"]);
    }

    fn arb_agent(id: u32) -> impl Strategy<Value = AgentState> {
        (
            -10.0..10.0f64,
            -10.0..10.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            -10.0..10.0f64,
            -10.0..10.0f64,
        )
            .prop_map(move |(x, y, vx, vy, gx, gy)| {
                let mut a =
                    AgentState::pedestrian(id, Vec2::new(x, y), Vec2::new(gx, gy)).with_velocity(Vec2::new(vx, vy));
                a.id = AgentId(id);
                a
            })
    }

    proptest! {
        #[test]
        fn repulsion_direction_antisymmetric(a in arb_agent(0), b in arb_agent(1)) {
            prop_assume!(a.position.distance(b.position) > 1e-6);
            let p = ForceParams::default();
            let fa = repulsive_force(&a, &b, &p);
            let fb = repulsive_force(&b, &a, &p);
            let na = fa / fa.norm();
            let nb = fb / fb.norm();
            prop_assert!((na + nb).norm() < 1e-12);
        }

        #[test]
        fn repulsion_decreases_with_distance(d in 0.05..5.0f64, extra in 0.01..2.0f64) {
            let p = ForceParams::default();
            let a = ped(0, 0.0, 0.0);
            let near = repulsive_force(&a, &ped(1, d, 0.0), &p).norm();
            let far = repulsive_force(&a, &ped(1, d + extra, 0.0), &p).norm();
            // Strict once outside the capped core.
            if d > 0.6 - 0.3 * 10f64.ln() {
                prop_assert!(far < near);
            } else {
                prop_assert!(far <= near);
            }
        }

        #[test]
        fn driving_bounded(a in arb_agent(0), speed in 0.0..2.0f64) {
            let p = ForceParams::default();
            let mut a = a;
            a.desired_speed = speed;
            let f = driving_force(&a, &p);
            prop_assert!(f.norm() <= (speed + a.velocity.norm()) / p.tau + 1e-9);
        }

        #[test]
        fn group_force_translation_invariant(
            a in arb_agent(0), m1 in arb_agent(1), m2 in arb_agent(2),
            dx in -50.0..50.0f64, dy in -50.0..50.0f64,
        ) {
            let p = ForceParams::default();
            let shift = Vec2::new(dx, dy);
            let moved = |s: &AgentState| {
                let mut t = s.clone();
                t.position += shift;
                t.goal += shift;
                t
            };
            let f0 = group_force(&a, &[m1.clone(), m2.clone()], &p);
            let f1 = group_force(&moved(&a), &[moved(&m1), moved(&m2)], &p);
            prop_assert!((f0 - f1).norm() < 1e-9);
        }

        #[test]
        fn total_is_component_sum(a in arb_agent(0), b in arb_agent(1), c in arb_agent(2)) {
            let p = ForceParams::default();
            let set = total_force(&a, &[b.clone(), c.clone()], std::slice::from_ref(&c), &p);
            prop_assert_eq!(set.total, set.driving + set.repulsive + set.group);
        }
    }
}
