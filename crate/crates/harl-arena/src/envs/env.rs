//! Environment reset and step: the task-agnostic pipeline is
//! action mapping, integration, collision resolution, excursion/knockout
//! checks, task reward, and termination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::rewards::team_reward;
use crate::envs::spec::{agent_count, agent_index, AgentSpec, EnvConfig, TaskTag, TeamSpec};
use crate::envs::state::{EliminationStatus, EnvState, StepEvents};
use crate::error::{ArenaError, Result};
use crate::physics2d::{
    apply_action, clamp_to_rect, integrate_masked, resolve_collisions_masked, ring_excursion,
    wrap_angle, Actuation, ArenaShape, BodyKind, DiscBody, Excursion, Ray, Vec2,
};

/// Immutable environment descriptor: who plays, which task, and the
/// physical and reward configuration.
#[derive(Clone, Debug)]
pub struct Env {
    pub teams: Vec<TeamSpec>,
    pub task: TaskTag,
    pub cfg: EnvConfig,
}

/// Result of one control step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub team_rewards: Vec<f64>,
    pub done: bool,
    /// Present on terminal steps: how the episode ended.
    pub terminal: Option<TerminalSummary>,
}

/// Episode outcome snapshot taken on the terminal step (before auto-reset
/// discards the state).
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalSummary {
    pub elim: EliminationStatus,
    pub block_out: Vec<bool>,
    pub reached: Vec<bool>,
    pub steps: usize,
}

const SPAWN_MARGIN: f64 = 0.1;
const MAX_SPAWN_ATTEMPTS: usize = 10_000;

impl Env {
    pub fn new(teams: Vec<TeamSpec>, task: TaskTag, cfg: EnvConfig) -> Result<Env> {
        crate::envs::spec::validate_teams(&teams)?;
        cfg.validate()?;
        match task {
            TaskTag::SumoAdversarial => {
                if teams.len() != 2 {
                    return Err(ArenaError::Config(format!(
                        "sumo requires exactly 2 teams, got {}",
                        teams.len()
                    )));
                }
                if !matches!(cfg.arena.shape, ArenaShape::Ring { .. }) {
                    return Err(ArenaError::Config("sumo requires a ring arena".into()));
                }
            }
            TaskTag::BlockPush | TaskTag::WalkToPoint => {
                if !matches!(cfg.arena.shape, ArenaShape::Ring { .. }) {
                    return Err(ArenaError::Config(format!(
                        "{} requires a ring arena",
                        task.as_str()
                    )));
                }
            }
            TaskTag::LaserTag => {
                if teams.len() != 2 {
                    return Err(ArenaError::Config("laser tag requires exactly 2 teams".into()));
                }
                if !matches!(cfg.arena.shape, ArenaShape::Rect { .. }) {
                    return Err(ArenaError::Config("laser tag requires a rect arena".into()));
                }
                let flyer_teams = self_flyer_teams(&teams);
                if flyer_teams != vec![false, true] && flyer_teams != vec![true, false] {
                    return Err(ArenaError::Config(
                        "laser tag needs one all-flyer team and one ground team".into(),
                    ));
                }
            }
        }
        Ok(Env { teams, task, cfg })
    }

    pub fn n_agents(&self) -> usize {
        agent_count(&self.teams)
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn agent_specs(&self) -> Vec<&AgentSpec> {
        self.teams.iter().flat_map(|t| t.agents.iter()).collect()
    }

    /// Fresh episode from an explicit seed.
    pub fn reset(&self, seed: u64) -> Result<EnvState> {
        self.reset_from_rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Fresh episode continuing an existing generator stream (used by
    /// auto-reset so respawns stay deterministic and checkpointable).
    pub fn reset_from_rng(&self, mut rng: ChaCha8Rng) -> Result<EnvState> {
        let n_agents = self.n_agents();
        let index = agent_index(&self.teams);
        let specs = self.agent_specs();

        let mut bodies: Vec<DiscBody> = Vec::with_capacity(n_agents * 2);
        for (g, spec) in specs.iter().enumerate() {
            let (team_id, _) = index[g];
            let pos = self.sample_spawn(&mut rng, team_id, spec.radius, &bodies, 2.0)?;
            let mut body = DiscBody::new(spec.kind, pos, spec.radius, spec.mass)?;
            body.heading = wrap_angle(rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI));
            if spec.flyer {
                body.altitude = self.cfg.spawn_altitude;
            }
            bodies.push(body);
        }

        // Task objects: one pushable block per agent in the block-push task.
        if self.task == TaskTag::BlockPush {
            for g in 0..n_agents {
                let pos = self.sample_block_spawn(&mut rng, bodies[g].position, &bodies)?;
                let block = DiscBody::new(
                    BodyKind::Holonomic,
                    pos,
                    self.cfg.block_radius,
                    self.cfg.block_mass,
                )?;
                bodies.push(block);
            }
        }

        let mut state = EnvState {
            bodies,
            arena: self.cfg.arena,
            goals: vec![Vec2::ZERO; n_agents],
            elim: EliminationStatus::new(self.n_teams(), n_agents),
            step: 0,
            rng,
            reached: vec![false; n_agents],
            block_out: vec![false; n_agents],
            last_actions: specs.iter().map(|s| vec![0.0; s.action_dim()]).collect(),
            events: StepEvents::new(n_agents),
            done: false,
        };

        if self.task == TaskTag::WalkToPoint {
            for g in 0..n_agents {
                state.goals[g] = self.sample_goal(&mut state.rng, state.bodies[g].position)?;
            }
        } else {
            self.refresh_goals(&mut state);
        }
        Ok(state)
    }

    fn arena_inset_radius(&self, body_radius: f64) -> Result<f64> {
        match self.cfg.arena.shape {
            ArenaShape::Ring { r_max } => Ok(r_max - body_radius - SPAWN_MARGIN),
            ArenaShape::Rect { .. } => Err(ArenaError::Contract("ring spawn in rect arena".into())),
        }
    }

    fn sample_spawn(
        &self,
        rng: &mut ChaCha8Rng,
        team_id: usize,
        radius: f64,
        placed: &[DiscBody],
        clearance_factor: f64,
    ) -> Result<Vec2> {
        for attempt in 0..MAX_SPAWN_ATTEMPTS {
            // Relax the clearance factor if the arena is too crowded.
            let factor = if attempt < MAX_SPAWN_ATTEMPTS / 2 {
                clearance_factor
            } else {
                1.05
            };
            let candidate = match self.cfg.arena.shape {
                ArenaShape::Ring { .. } => {
                    let r_in = self.arena_inset_radius(radius)?;
                    let r = r_in * rng.gen_range(0.0..1.0f64).sqrt();
                    let theta = if self.task == TaskTag::SumoAdversarial {
                        // Opposite half-disks: team 0 spawns with x < 0.
                        let half = rng.gen_range(0.0..std::f64::consts::PI);
                        if team_id == 0 {
                            half + std::f64::consts::FRAC_PI_2
                        } else {
                            half - std::f64::consts::FRAC_PI_2
                        }
                    } else {
                        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
                    };
                    Vec2::from_angle(theta) * r
                }
                ArenaShape::Rect { width, height } => {
                    let half_w = width * 0.5 - radius - SPAWN_MARGIN;
                    let half_h = height * 0.5 - radius - SPAWN_MARGIN;
                    let x = rng.gen_range(-half_w..=half_w);
                    // Opposite halves of the rect per team.
                    let y = if team_id == 0 {
                        rng.gen_range(-half_h..=-half_h * 0.1)
                    } else {
                        rng.gen_range(half_h * 0.1..=half_h)
                    };
                    Vec2::new(x, y)
                }
            };
            let clear = placed.iter().all(|b| {
                candidate.distance(b.position) >= factor * (radius + b.radius)
            });
            if clear {
                return Ok(candidate);
            }
        }
        Err(ArenaError::Config(
            "could not place agents with required clearance; arena too small".into(),
        ))
    }

    fn sample_block_spawn(
        &self,
        rng: &mut ChaCha8Rng,
        owner_pos: Vec2,
        placed: &[DiscBody],
    ) -> Result<Vec2> {
        let r_in = self.arena_inset_radius(self.cfg.block_radius)?;
        for _ in 0..MAX_SPAWN_ATTEMPTS {
            // Between the owner and the center, with jitter.
            let base = owner_pos * 0.5;
            let jitter = Vec2::new(rng.gen_range(-0.4..=0.4), rng.gen_range(-0.4..=0.4));
            let candidate = (base + jitter).clamp_norm(r_in);
            let clear = placed
                .iter()
                .all(|b| candidate.distance(b.position) >= 1.05 * (self.cfg.block_radius + b.radius));
            if clear {
                return Ok(candidate);
            }
        }
        Err(ArenaError::Config("could not place task blocks".into()))
    }

    fn sample_goal(&self, rng: &mut ChaCha8Rng, agent_pos: Vec2) -> Result<Vec2> {
        let (d_min, d_max) = self.cfg.goal_band;
        let r_in = match self.cfg.arena.shape {
            ArenaShape::Ring { r_max } => r_max - SPAWN_MARGIN,
            ArenaShape::Rect { width, height } => 0.5 * width.min(height) - SPAWN_MARGIN,
        };
        for _ in 0..MAX_SPAWN_ATTEMPTS {
            let d = rng.gen_range(d_min..=d_max);
            let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let candidate = agent_pos + Vec2::from_angle(theta) * d;
            if candidate.norm() <= r_in {
                return Ok(candidate);
            }
        }
        Err(ArenaError::Config(
            "goal_band incompatible with arena size".into(),
        ))
    }

    /// Update per-agent chase targets for tasks whose targets move.
    fn refresh_goals(&self, state: &mut EnvState) {
        let index = agent_index(&self.teams);
        match self.task {
            TaskTag::WalkToPoint => {}
            TaskTag::BlockPush => {
                for g in 0..state.n_agents() {
                    state.goals[g] = state.bodies[state.n_agents() + g].position;
                }
            }
            TaskTag::SumoAdversarial => {
                for (g, &(team_id, _)) in index.iter().enumerate() {
                    let mut best: Option<(f64, Vec2)> = None;
                    for (o, &(other_team, _)) in index.iter().enumerate() {
                        if other_team == team_id || state.elim.eliminated[o] {
                            continue;
                        }
                        let d = state.bodies[g].position.distance(state.bodies[o].position);
                        if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                            best = Some((d, state.bodies[o].position));
                        }
                    }
                    if let Some((_, pos)) = best {
                        state.goals[g] = pos;
                    }
                }
            }
            TaskTag::LaserTag => {
                let offset = self.cfg.flyer_goal_offset_vec();
                for (g, &(team_id, member_id)) in index.iter().enumerate() {
                    let spec = &self.teams[team_id].agents[member_id];
                    if spec.flyer {
                        // Chase a goal at a fixed planar offset from the
                        // paired opponent.
                        let opp_team = 1 - team_id;
                        let n_opp = self.teams[opp_team].agents.len();
                        let paired = member_id % n_opp;
                        let opp_global = index
                            .iter()
                            .position(|&(t, m)| t == opp_team && m == paired)
                            .expect("paired opponent exists");
                        state.goals[g] = state.bodies[opp_global].position + offset;
                    } else {
                        // Ground agents chase the nearest surviving flyer.
                        let mut best: Option<(f64, Vec2)> = None;
                        for (o, &(other_team, _)) in index.iter().enumerate() {
                            if other_team == team_id || state.elim.eliminated[o] {
                                continue;
                            }
                            let d = state.bodies[g].position.distance(state.bodies[o].position);
                            if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                                best = Some((d, state.bodies[o].position));
                            }
                        }
                        if let Some((_, pos)) = best {
                            state.goals[g] = pos;
                        }
                    }
                }
            }
        }
    }

    /// Advance one control step. `actions` carries one entry per agent in
    /// spec order; eliminated agents' entries are ignored.
    pub fn step(&self, state: &mut EnvState, actions: &[Vec<f64>]) -> Result<StepOutcome> {
        if state.done {
            return Err(ArenaError::Contract(
                "episode already finished; reset before stepping".into(),
            ));
        }
        let n_agents = self.n_agents();
        if actions.len() != n_agents {
            return Err(ArenaError::shape("step actions", n_agents, actions.len()));
        }
        let specs = self.agent_specs();
        for (g, (action, spec)) in actions.iter().zip(specs.iter()).enumerate() {
            if action.len() != spec.action_dim() {
                return Err(ArenaError::shape(
                    format!("agent {g} action"),
                    spec.action_dim(),
                    action.len(),
                ));
            }
        }
        state.events.clear();
        for (g, action) in actions.iter().enumerate() {
            state.last_actions[g].copy_from_slice(action);
        }

        // Action mapping. Eliminated agents exert nothing; blocks are
        // unactuated.
        let n_bodies = state.bodies.len();
        let mut actuations = vec![Actuation::ZERO; n_bodies];
        let mut active = vec![true; n_bodies];
        for (g, spec) in specs.iter().enumerate() {
            if state.elim.eliminated[g] {
                active[g] = false;
                continue;
            }
            let planar = &actions[g][..2.min(actions[g].len())];
            let mut act = apply_action(&state.bodies[g], planar, &spec.limits)?;
            if spec.flyer {
                let throttle = actions[g][2].clamp(-1.0, 1.0);
                act.lift = throttle * spec.limits.max_lift;
            }
            actuations[g] = act;
        }

        let dt = self.cfg.reward.dt;
        integrate_masked(&mut state.bodies, &actuations, dt, self.cfg.drag, &active)?;
        resolve_collisions_masked(&mut state.bodies, self.cfg.restitution, &active);
        if let ArenaShape::Rect { width, height } = self.cfg.arena.shape {
            for (i, body) in state.bodies.iter_mut().enumerate() {
                if active[i] {
                    clamp_to_rect(body, width, height);
                }
            }
        }

        state.step += 1;
        self.detect_events(state)?;
        let done = self.check_termination(state);
        state.done = done;

        let mut team_rewards = Vec::with_capacity(self.n_teams());
        for ti in 0..self.n_teams() {
            team_rewards.push(team_reward(state, &self.teams, self.task, &self.cfg, ti, done)?);
        }

        self.refresh_goals(state);
        let terminal = done.then(|| TerminalSummary {
            elim: state.elim.clone(),
            block_out: state.block_out.clone(),
            reached: state.reached.clone(),
            steps: state.step,
        });
        Ok(StepOutcome {
            team_rewards,
            done,
            terminal,
        })
    }

    fn freeze(body: &mut DiscBody) {
        body.velocity = Vec2::ZERO;
        body.angular_velocity = 0.0;
        body.climb_rate = 0.0;
    }

    fn detect_events(&self, state: &mut EnvState) -> Result<()> {
        let n_agents = self.n_agents();
        let index = agent_index(&self.teams);
        match self.task {
            TaskTag::WalkToPoint => {
                for g in 0..n_agents {
                    if !state.reached[g] {
                        let d = state.bodies[g].position.distance(state.goals[g]);
                        if d < self.cfg.reward.reach_radius {
                            state.reached[g] = true;
                            state.events.reached_now[g] = true;
                        }
                    }
                }
            }
            TaskTag::BlockPush => {
                for g in 0..n_agents {
                    if !state.block_out[g] {
                        let block = state.bodies[n_agents + g];
                        if ring_excursion(&block, &state.arena)? == Excursion::Out {
                            state.block_out[g] = true;
                            state.events.block_out_now[g] = true;
                        }
                    }
                    if !state.elim.eliminated[g] {
                        let body = state.bodies[g];
                        if ring_excursion(&body, &state.arena)? == Excursion::Out {
                            state.elim.eliminated[g] = true;
                            state.events.left_ring_now[g] = true;
                            state.elim.team_out[index[g].0] = true;
                            Self::freeze(&mut state.bodies[g]);
                        }
                    }
                }
            }
            TaskTag::SumoAdversarial => {
                for g in 0..n_agents {
                    if state.elim.eliminated[g] {
                        continue;
                    }
                    let body = state.bodies[g];
                    if ring_excursion(&body, &state.arena)? == Excursion::Out {
                        state.elim.eliminated[g] = true;
                        state.events.left_ring_now[g] = true;
                        state.elim.team_out[index[g].0] = true;
                        Self::freeze(&mut state.bodies[g]);
                    }
                }
                if state.elim.team_out.iter().all(|&t| t) {
                    // Every team lost a member in this same step (episodes
                    // end at the first excursion).
                    state.elim.tie = true;
                }
            }
            TaskTag::LaserTag => {
                // Ground agents fire heading-locked rays every step.
                let mut rays: Vec<Ray> = Vec::new();
                for (g, &(team_id, member_id)) in index.iter().enumerate() {
                    let spec = &self.teams[team_id].agents[member_id];
                    if !spec.flyer && !state.elim.eliminated[g] {
                        let body = &state.bodies[g];
                        let origin = body.position + Vec2::from_angle(body.heading) * body.radius;
                        rays.push(Ray::from_heading(origin, body.heading, true));
                    }
                }
                for (g, &(team_id, member_id)) in index.iter().enumerate() {
                    let spec = &self.teams[team_id].agents[member_id];
                    if !spec.flyer || state.elim.eliminated[g] {
                        continue;
                    }
                    let body = state.bodies[g];
                    let downed = body.altitude < self.cfg.arena.min_height;
                    let tagged = body.altitude <= self.cfg.ray_height
                        && rays.iter().any(|ray| {
                            crate::physics2d::point_ray_distance(ray, body.position)
                                .map(|d| d < self.cfg.knockout_radius)
                                .unwrap_or(false)
                        });
                    if downed || tagged {
                        state.elim.eliminated[g] = true;
                        state.events.knocked_out_now[g] = true;
                        state.elim.team_out[team_id] = true;
                        Self::freeze(&mut state.bodies[g]);
                    }
                }
            }
        }
        Ok(())
    }

    fn check_termination(&self, state: &mut EnvState) -> bool {
        let n_agents = self.n_agents();
        let index = agent_index(&self.teams);
        let task_done = match self.task {
            TaskTag::WalkToPoint => state.reached.iter().all(|&r| r),
            TaskTag::BlockPush => (0..n_agents)
                .all(|g| state.block_out[g] || state.elim.eliminated[g]),
            TaskTag::SumoAdversarial => state.elim.team_out.iter().any(|&t| t),
            TaskTag::LaserTag => index
                .iter()
                .enumerate()
                .filter(|(_, (ti, mi))| self.teams[*ti].agents[*mi].flyer)
                .all(|(g, _)| state.elim.eliminated[g]),
        };
        if task_done {
            return true;
        }
        if state.step >= self.cfg.max_episode_len {
            state.elim.timeout = true;
            return true;
        }
        false
    }
}

fn self_flyer_teams(teams: &[TeamSpec]) -> Vec<bool> {
    teams
        .iter()
        .map(|t| t.agents.iter().all(|a| a.flyer))
        .collect()
}
