//! Text exports of a run.
//!
//! Trajectories: CSV with header `time,agent_id,kind,x,y`, one row per agent
//! per timestamp, agents in world order. Metrics: `key: value` lines in a
//! fixed order. Floats use Rust's shortest round-trip formatting so output
//! is stable across runs.

use std::fmt::Write;

use super::SimResult;

pub fn trajectories_csv(result: &SimResult) -> String {
    let traj = &result.trajectories;
    let mut out = String::from("time,agent_id,kind,x,y\n");
    for (t, time) in traj.times.iter().enumerate() {
        for (a, info) in traj.agents.iter().enumerate() {
            let p = traj.positions[a][t];
            let _ = writeln!(out, "{:.3},{},{},{},{}", time, info.id, info.kind.as_str(), p.x, p.y);
        }
    }
    out
}

pub fn metrics_summary(result: &SimResult) -> String {
    let follow = result.follow_ticks().count();
    let stops = result
        .ticks
        .iter()
        .filter(|t| t.plan == crate::local::LocalPlan::Stop)
        .count();
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", result.name);
    let _ = writeln!(out, "seed: {}", result.seed);
    let _ = writeln!(out, "mode: {}", result.mode);
    let _ = writeln!(out, "agents: {}", result.trajectories.agents.len());
    let _ = writeln!(out, "steps: {}", result.trajectories.times.len().saturating_sub(1));
    let _ = writeln!(out, "goal_reached: {}", result.goal_reached);
    let _ = writeln!(out, "travel_time: {:.1}", result.travel_time);
    let _ = writeln!(out, "path_length: {}", result.path_length);
    let _ = writeln!(out, "collision_count: {}", result.collision_count);
    let _ = writeln!(out, "min_clearance: {}", result.min_clearance);
    let _ = writeln!(out, "disturbance: {}", result.disturbance);
    let _ = writeln!(out, "planner_ticks: {}", result.ticks.len());
    let _ = writeln!(out, "follow_ticks: {}", follow);
    let _ = writeln!(out, "stop_ticks: {}", stops);
    for (k, ev) in result.collisions.iter().enumerate() {
        let _ = writeln!(out, "collision.{k}: {} {:.1} {:.1}", ev.pedestrian, ev.start, ev.end);
    }
    out
}

type Column = (&'static str, fn(&SimResult) -> String);

/// Side-by-side summary of paired runs that share a seed.
pub fn comparison_summary(with: &SimResult, without: &SimResult) -> String {
    let mut out = String::new();
    let rows: [Column; 6] = [
        ("goal_reached", |r| r.goal_reached.to_string()),
        ("travel_time", |r| format!("{:.1}", r.travel_time)),
        ("path_length", |r| r.path_length.to_string()),
        ("collision_count", |r| r.collision_count.to_string()),
        ("min_clearance", |r| r.min_clearance.to_string()),
        ("disturbance", |r| r.disturbance.to_string()),
    ];
    let _ = writeln!(out, "seed: {}", with.seed);
    for (key, f) in rows {
        let _ = writeln!(out, "{key}.with: {}", f(with));
        let _ = writeln!(out, "{key}.without: {}", f(without));
    }
    out
}
