//! Built-in scenario presets in a 10 m × 20 m arena.

use crate::geom::Vec2;

use super::config::{GroupSpec, NavMode, RobotSpec, ScenarioConfig};

fn group(spawn_min: (f64, f64), spawn_max: (f64, f64), goal: (f64, f64), speed: f64) -> GroupSpec {
    GroupSpec {
        members: 3,
        spawn_min: Vec2::new(spawn_min.0, spawn_min.1),
        spawn_max: Vec2::new(spawn_max.0, spawn_max.1),
        goal: Vec2::new(goal.0, goal.1),
        desired_speed: speed,
        ..GroupSpec::default()
    }
}

/// Eighteen pedestrians in six groups of three, each heading a different
/// way. The robot drives from (5, 1) to (5, 19). Group 0 walks the same way
/// in the lane at x ≈ 8, starting a few meters ahead of the robot; group 1
/// walks straight down the robot's line.
pub fn crowd_crossing(seed: u64, mode: NavMode) -> ScenarioConfig {
    ScenarioConfig {
        name: "crowd_crossing".into(),
        seed,
        mode,
        groups: vec![
            group((7.1, 3.6), (8.9, 5.4), (8.0, 19.6), 1.0),
            group((4.0, 14.5), (6.0, 17.0), (5.0, 0.4), 1.2),
            group((0.4, 6.5), (2.4, 8.5), (9.6, 9.5), 1.1),
            group((7.6, 10.5), (9.6, 12.5), (0.4, 11.0), 1.2),
            group((0.4, 12.5), (2.4, 15.0), (9.6, 1.0), 1.0),
            group((7.4, 16.5), (9.6, 19.4), (1.0, 5.0), 1.1),
        ],
        ..ScenarioConfig::default()
    }
}

/// Two groups of three. The robot drives from (3, 1) to (7.5, 17); one
/// group walks the same way in the lane at x ≈ 7.6, the other comes
/// head-on across the robot's straight-line route.
pub fn counterflow(seed: u64, mode: NavMode) -> ScenarioConfig {
    ScenarioConfig {
        name: "counterflow".into(),
        seed,
        mode,
        groups: vec![
            group((6.8, 3.0), (8.4, 4.8), (7.6, 19.7), 1.2),
            group((3.4, 12.5), (5.2, 15.0), (4.0, 0.4), 1.2),
        ],
        robot: RobotSpec {
            start: Vec2::new(3.0, 1.0),
            goal: Vec2::new(7.5, 17.0),
            ..RobotSpec::default()
        },
        ..ScenarioConfig::default()
    }
}

pub fn preset(name: &str, seed: u64, mode: NavMode) -> Option<ScenarioConfig> {
    match name {
        "crowd_crossing" => Some(crowd_crossing(seed, mode)),
        "counterflow" => Some(counterflow(seed, mode)),
        _ => None,
    }
}
