use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::flow::{compute_waypoint, SocialPlanner, TrackerState, Waypoint};
use crate::forces::total_force;
use crate::geom::{heading_of, Vec2};
use crate::local::{command_velocity_at, plan_local_in, LocalPlan, Obstacle, Pose, TrajectoryLibrary};
use crate::rng::{stream_rng, stream_seed, Stream};
use crate::world::{integrate, AgentId, AgentKind, AgentState, MotionLimits, WorldState};

use super::config::{NavMode, ScenarioConfig};
use super::metrics::{collision_count, disturbance_metric, min_clearance, AgentInfo, Trajectories};
use super::{PlannerTick, SimError, SimResult};

/// A world being stepped under one scenario configuration.
pub struct Simulation {
    cfg: ScenarioConfig,
    world: WorldState,
    infos: Vec<AgentInfo>,
    limits: MotionLimits,
    library: TrajectoryLibrary,
    planner: Option<SocialPlanner>,
    tracker: TrackerState,
    noise: ChaCha8Rng,
    steps: usize,
    arrived: Vec<bool>,
    /// Plan in force, the robot heading when it was made, steps since, and
    /// the speed to drive it at.
    current: (LocalPlan, f64, usize, f64),
    ticks: Vec<PlannerTick>,
    trajectories: Trajectories,
}

impl Simulation {
    /// Spawns pedestrians (and the robot when `with_robot`). Spawn positions
    /// depend only on the seed and the group list.
    pub fn new(cfg: &ScenarioConfig, with_robot: bool) -> Result<Self, SimError> {
        cfg.validate()?;
        let arena = cfg.arena();
        let mut world = WorldState::new(arena);
        let mut infos = Vec::new();
        let mut rng = stream_rng(cfg.seed, Stream::Spawn);

        let mut next_id = 0u32;
        for (g, spec) in cfg.groups.iter().enumerate() {
            let mut spawned: Vec<Vec2> = Vec::new();
            for _ in 0..spec.members {
                let mut p = spec.spawn_min;
                for _ in 0..100 {
                    p = Vec2::new(
                        sample(&mut rng, spec.spawn_min.x, spec.spawn_max.x),
                        sample(&mut rng, spec.spawn_min.y, spec.spawn_max.y),
                    );
                    let clear = world
                        .agents
                        .iter()
                        .map(|a| a.position)
                        .chain(spawned.iter().copied())
                        .chain(std::iter::once(cfg.robot.start))
                        .all(|q| q.distance(p) >= cfg.spawn_separation);
                    if clear {
                        break;
                    }
                }
                spawned.push(p);
            }
            let center = crate::geom::centroid(spawned.iter().copied()).unwrap_or(spec.goal);
            for p in spawned {
                let goal = arena.clamp(spec.goal + (p - center));
                let dir = (goal - p).try_normalize(1e-9).unwrap_or(Vec2::ZERO);
                let mut ped = AgentState::pedestrian(next_id, p, goal).with_velocity(dir * spec.desired_speed);
                ped.radius = spec.radius;
                ped.desired_speed = spec.desired_speed;
                world.insert(ped)?;
                infos.push(AgentInfo {
                    id: AgentId(next_id),
                    kind: AgentKind::Pedestrian,
                    radius: spec.radius,
                    group: Some(g),
                });
                next_id += 1;
            }
        }
        if with_robot {
            let r = &cfg.robot;
            let robot = AgentState {
                id: AgentId(next_id),
                position: r.start,
                velocity: Vec2::ZERO,
                heading: heading_of(r.goal - r.start),
                radius: r.radius,
                desired_speed: r.cruise_speed,
                goal: r.goal,
                kind: AgentKind::Robot,
            };
            world.insert(robot)?;
            infos.push(AgentInfo {
                id: AgentId(next_id),
                kind: AgentKind::Robot,
                radius: r.radius,
                group: None,
            });
        }

        let library = TrajectoryLibrary::from_params(&cfg.local, cfg.robot.radius)?;
        let planner = match (with_robot, cfg.mode) {
            (true, NavMode::WithSocialModel) => Some(SocialPlanner::new(
                cfg.planner.clone(),
                cfg.classifier(),
                stream_seed(cfg.seed, Stream::EncoderWeights),
            )?),
            _ => None,
        };
        let trajectories = Trajectories {
            times: vec![0.0],
            positions: world.agents.iter().map(|a| vec![a.position]).collect(),
            agents: infos.clone(),
        };
        let n = world.agents.len();
        Ok(Self {
            cfg: cfg.clone(),
            world,
            infos,
            limits: MotionLimits {
                v_max: cfg.v_max,
                arena,
            },
            library,
            planner,
            tracker: TrackerState::default(),
            noise: stream_rng(cfg.seed, Stream::PlannerNoise),
            steps: 0,
            arrived: vec![false; n],
            current: (LocalPlan::Stop, 0.0, 0, cfg.robot.cruise_speed),
            ticks: Vec::new(),
            trajectories,
        })
    }

    /// Replaces the seeded planner (e.g. with loaded weights).
    pub fn set_planner(&mut self, planner: SocialPlanner) {
        if self.planner.is_some() {
            self.planner = Some(planner);
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn library(&self) -> &TrajectoryLibrary {
        &self.library
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ticks(&self) -> &[PlannerTick] {
        &self.ticks
    }

    pub fn trajectories(&self) -> &Trajectories {
        &self.trajectories
    }

    fn robot_index(&self) -> Option<usize> {
        self.world.agents.iter().position(|a| a.kind == AgentKind::Robot)
    }

    pub fn robot_arrived(&self) -> bool {
        self.robot_index().is_some_and(|k| self.arrived[k])
    }

    /// Advances the world by one `dt`.
    pub fn step(&mut self) -> Result<(), SimError> {
        let dt = self.cfg.dt;
        let snapshot = self.world.agents.clone();
        let robot_idx = self.robot_index();

        let mut robot_command = None;
        if let Some(r) = robot_idx.filter(|&r| !self.arrived[r]) {
            if self.steps.is_multiple_of(self.cfg.planner_period) {
                self.planner_tick(&snapshot, r)?;
            }
            let (plan, heading, k, speed) = self.current;
            let s = speed * dt * (k as f64 + 0.5);
            robot_command = Some(command_velocity_at(plan, &self.library, heading, speed, s));
            self.current.2 += 1;
        }

        let mut next = snapshot.clone();
        for (i, agent) in snapshot.iter().enumerate() {
            if self.arrived[i] {
                continue;
            }
            let force = match agent.kind {
                AgentKind::Pedestrian => {
                    let group = self.infos[i].group;
                    let others: Vec<AgentState> = snapshot
                        .iter()
                        .enumerate()
                        .filter(|&(j, o)| j != i && (o.kind == AgentKind::Pedestrian || self.cfg.pedestrians_see_robot))
                        .map(|(_, o)| o.clone())
                        .collect();
                    let members: Vec<AgentState> = snapshot
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i && group.is_some() && self.infos[j].group == group)
                        .map(|(_, o)| o.clone())
                        .collect();
                    total_force(agent, &others, &members, &self.cfg.forces).total
                }
                AgentKind::Robot => {
                    let cmd = robot_command.unwrap_or(Vec2::ZERO);
                    (cmd - agent.velocity) / dt
                }
            };
            let mut moved = integrate(agent, force, dt, &self.limits).map_err(|_| SimError::NonFinite {
                step: self.steps,
                agent: agent.id,
            })?;
            if !moved.position.is_finite() || !moved.velocity.is_finite() {
                return Err(SimError::NonFinite {
                    step: self.steps,
                    agent: agent.id,
                });
            }
            let target = match agent.kind {
                AgentKind::Robot => self.cfg.robot.goal,
                AgentKind::Pedestrian => agent.goal,
            };
            if moved.position.distance(target) <= self.cfg.goal_tolerance {
                moved.velocity = Vec2::ZERO;
                self.arrived[i] = true;
            }
            next[i] = moved;
        }

        self.world.agents = next;
        self.steps += 1;
        self.world.time = self.steps as f64 * dt;
        self.trajectories.times.push(self.world.time);
        for (path, a) in self.trajectories.positions.iter_mut().zip(&self.world.agents) {
            path.push(a.position);
        }
        Ok(())
    }

    fn planner_tick(&mut self, snapshot: &[AgentState], r: usize) -> Result<(), SimError> {
        let robot = &snapshot[r];
        let goal = self.cfg.robot.goal;
        let arena = self.world.arena;
        let range = self.cfg.local.sensing_radius;
        let visible: Vec<AgentState> = snapshot
            .iter()
            .filter(|a| a.kind == AgentKind::Pedestrian && a.position.distance(robot.position) <= range)
            .cloned()
            .collect();
        let frame = (self.steps / self.cfg.planner_period) as i64;
        let noise_seed = self.noise.next_u64();

        let (waypoint, followed): (Waypoint, Option<(Vec<AgentId>, Vec2)>) = match &self.planner {
            Some(planner) => {
                planner.observe(&mut self.tracker, frame, robot, &visible);
                let decision = planner.plan(&self.tracker, robot, goal, &arena, noise_seed)?;
                let followed = decision.followed.map(|f| (f.members, f.mean_velocity));
                (decision.waypoint, followed)
            }
            None => (
                compute_waypoint(robot, goal, None, self.cfg.planner.flow.lookahead, &arena),
                None,
            ),
        };

        let obstacles: Vec<Obstacle> = visible
            .iter()
            .map(|a| Obstacle {
                center: a.position,
                radius: a.radius,
                velocity: a.velocity,
            })
            .collect();
        let mut speed = self.cfg.robot.cruise_speed;
        if let (true, Some((_, v))) = (self.cfg.robot.match_flow_speed, &followed) {
            speed = speed.min(v.norm());
        }
        let extrapolation_speed = self.cfg.local.extrapolate_obstacles.then_some(speed);
        let pose = Pose::new(robot.position, robot.heading);
        let bounds = self.cfg.local.respect_arena.then_some(&arena);
        let plan = plan_local_in(&self.library, &pose, &obstacles, &waypoint, extrapolation_speed, bounds);
        self.current = (plan, robot.heading, 0, speed);
        let command = command_velocity_at(plan, &self.library, robot.heading, speed, 0.0);

        let (followed_members, followed_velocity) = match followed {
            Some((m, v)) => (m, Some(v)),
            None => (Vec::new(), None),
        };
        self.ticks.push(PlannerTick {
            step: self.steps,
            time: self.world.time,
            robot: robot.id,
            robot_pose: pose,
            waypoint,
            followed_members,
            followed_velocity,
            obstacles: visible.iter().map(|a| (a.id, a.velocity)).collect(),
            extrapolation_speed,
            plan,
            command,
        });
        Ok(())
    }

    fn into_result(self) -> SimResult {
        let (count, events) = collision_count(&self.trajectories);
        let robot = self.trajectories.robot_index().map(|k| self.trajectories.agents[k].id);
        let goal_reached = self.robot_arrived();
        SimResult {
            name: self.cfg.name.clone(),
            seed: self.cfg.seed,
            mode: self.cfg.mode,
            collision_count: count,
            collisions: events,
            min_clearance: min_clearance(&self.trajectories),
            path_length: robot.map_or(0.0, |id| self.trajectories.path_length(id)),
            travel_time: self.world.time,
            goal_reached,
            disturbance: 0.0,
            ticks: self.ticks,
            trajectories: self.trajectories,
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Steps until the robot reaches its goal or time runs out, then measures
/// disturbance against a robot-free run of the same seed and length.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimResult, SimError> {
    run_with(Simulation::new(cfg, true)?)
}

/// As [`run_scenario`] for an already constructed simulation.
pub fn run_with(mut sim: Simulation) -> Result<SimResult, SimError> {
    let cfg = sim.cfg.clone();
    let max_steps = cfg.max_steps();
    while sim.steps < max_steps && !sim.robot_arrived() {
        sim.step()?;
    }
    let steps = sim.steps;
    let mut result = sim.into_result();

    let mut baseline = Simulation::new(&cfg, false)?;
    while baseline.steps < steps {
        baseline.step()?;
    }
    result.disturbance = disturbance_metric(&result.trajectories, &baseline.trajectories)?;
    Ok(result)
}
