//! Per-instance environment state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{Reader, Writer};
use crate::envs::spec::TeamSpec;
use crate::error::Result;
use crate::physics2d::{ArenaSpec, BodyKind, DiscBody, Vec2};

/// Team- and agent-level elimination bookkeeping.
///
/// `team_out[i]` records that any member of team `i` has left the arena
/// (latched for the episode). `tie` is set when every team went out in the
/// same step; `timeout` when the episode ended by reaching the maximum
/// length with no eliminator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EliminationStatus {
    pub team_out: Vec<bool>,
    pub tie: bool,
    pub timeout: bool,
    pub eliminated: Vec<bool>,
}

impl EliminationStatus {
    pub fn new(n_teams: usize, n_agents: usize) -> Self {
        EliminationStatus {
            team_out: vec![false; n_teams],
            tie: false,
            timeout: false,
            eliminated: vec![false; n_agents],
        }
    }
}

/// Transition-step event flags; each indicator fires only on the step the
/// underlying condition first becomes true.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepEvents {
    /// Per agent: its block crossed the ring boundary this step.
    pub block_out_now: Vec<bool>,
    /// Per agent: left the ring this step.
    pub left_ring_now: Vec<bool>,
    /// Per agent: reached its goal this step.
    pub reached_now: Vec<bool>,
    /// Per agent: knocked out this step (laser tag).
    pub knocked_out_now: Vec<bool>,
}

impl StepEvents {
    pub fn new(n_agents: usize) -> Self {
        StepEvents {
            block_out_now: vec![false; n_agents],
            left_ring_now: vec![false; n_agents],
            reached_now: vec![false; n_agents],
            knocked_out_now: vec![false; n_agents],
        }
    }

    pub fn clear(&mut self) {
        for v in self
            .block_out_now
            .iter_mut()
            .chain(self.left_ring_now.iter_mut())
            .chain(self.reached_now.iter_mut())
            .chain(self.knocked_out_now.iter_mut())
        {
            *v = false;
        }
    }
}

/// Full state of one environment instance. Bodies hold the agents in spec
/// order followed by task objects (the block, when present).
#[derive(Clone, Debug)]
pub struct EnvState {
    pub bodies: Vec<DiscBody>,
    pub arena: ArenaSpec,
    /// Current chase target per agent; refreshed every step for tasks with
    /// moving targets.
    pub goals: Vec<Vec2>,
    pub elim: EliminationStatus,
    pub step: usize,
    pub rng: ChaCha8Rng,
    /// Walk-to-point: goal-reached latch per agent.
    pub reached: Vec<bool>,
    /// Block-push: per-agent block-out latch.
    pub block_out: Vec<bool>,
    /// Most recent action per agent (used by shaping terms).
    pub last_actions: Vec<Vec<f64>>,
    pub events: StepEvents,
    pub done: bool,
}

impl EnvState {
    /// Number of agent bodies (bodies beyond this index are task objects).
    pub fn n_agents(&self) -> usize {
        self.last_actions.len()
    }

    pub fn body_snapshot(&self) -> Vec<DiscBody> {
        self.bodies.clone()
    }

    pub fn write(&self, w: &mut Writer) {
        w.put_u64(self.bodies.len() as u64);
        for b in &self.bodies {
            w.put_f64(b.position.x);
            w.put_f64(b.position.y);
            w.put_f64(b.velocity.x);
            w.put_f64(b.velocity.y);
            w.put_f64(b.heading);
            w.put_f64(b.angular_velocity);
            w.put_f64(b.altitude);
            w.put_f64(b.climb_rate);
            w.put_f64(b.radius);
            w.put_f64(b.mass);
            w.put_u8(match b.kind {
                BodyKind::Holonomic => 0,
                BodyKind::DifferentialDrive => 1,
                BodyKind::Static => 2,
            });
        }
        w.put_u64(self.goals.len() as u64);
        for g in &self.goals {
            w.put_f64(g.x);
            w.put_f64(g.y);
        }
        w.put_u64(self.elim.team_out.len() as u64);
        for &t in &self.elim.team_out {
            w.put_bool(t);
        }
        w.put_bool(self.elim.tie);
        w.put_bool(self.elim.timeout);
        w.put_u64(self.elim.eliminated.len() as u64);
        for &e in &self.elim.eliminated {
            w.put_bool(e);
        }
        w.put_u64(self.step as u64);
        // ChaCha8 state: seed, stream, counter position.
        w.put_bytes(&self.rng.get_seed());
        w.put_u64(self.rng.get_stream());
        w.put_u128(self.rng.get_word_pos());
        w.put_u64(self.reached.len() as u64);
        for &r in &self.reached {
            w.put_bool(r);
        }
        w.put_u64(self.block_out.len() as u64);
        for &b in &self.block_out {
            w.put_bool(b);
        }
        w.put_u64(self.last_actions.len() as u64);
        for a in &self.last_actions {
            w.put_f64s(a);
        }
        w.put_bool(self.done);
    }

    pub fn read(r: &mut Reader, arena: ArenaSpec, teams: &[TeamSpec]) -> Result<EnvState> {
        let n_bodies = r.get_u64()? as usize;
        let mut bodies = Vec::with_capacity(n_bodies);
        for _ in 0..n_bodies {
            let position = Vec2::new(r.get_f64()?, r.get_f64()?);
            let velocity = Vec2::new(r.get_f64()?, r.get_f64()?);
            let heading = r.get_f64()?;
            let angular_velocity = r.get_f64()?;
            let altitude = r.get_f64()?;
            let climb_rate = r.get_f64()?;
            let radius = r.get_f64()?;
            let mass = r.get_f64()?;
            let kind = match r.get_u8()? {
                0 => BodyKind::Holonomic,
                1 => BodyKind::DifferentialDrive,
                _ => BodyKind::Static,
            };
            let mut b = DiscBody::new(kind, position, radius, mass)?;
            b.velocity = velocity;
            b.heading = heading;
            b.angular_velocity = angular_velocity;
            b.altitude = altitude;
            b.climb_rate = climb_rate;
            bodies.push(b);
        }
        let n_goals = r.get_u64()? as usize;
        let mut goals = Vec::with_capacity(n_goals);
        for _ in 0..n_goals {
            goals.push(Vec2::new(r.get_f64()?, r.get_f64()?));
        }
        let n_teams = r.get_u64()? as usize;
        let mut team_out = Vec::with_capacity(n_teams);
        for _ in 0..n_teams {
            team_out.push(r.get_bool()?);
        }
        let tie = r.get_bool()?;
        let timeout = r.get_bool()?;
        let n_elim = r.get_u64()? as usize;
        let mut eliminated = Vec::with_capacity(n_elim);
        for _ in 0..n_elim {
            eliminated.push(r.get_bool()?);
        }
        let step = r.get_u64()? as usize;
        let seed_bytes = r.get_bytes()?;
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&seed_bytes);
        let stream = r.get_u64()?;
        let word_pos = r.get_u128()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        let n_reached = r.get_u64()? as usize;
        let mut reached = Vec::with_capacity(n_reached);
        for _ in 0..n_reached {
            reached.push(r.get_bool()?);
        }
        let n_blocks = r.get_u64()? as usize;
        let mut block_out = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            block_out.push(r.get_bool()?);
        }
        let n_actions = r.get_u64()? as usize;
        let mut last_actions = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            last_actions.push(r.get_f64s()?);
        }
        let done = r.get_bool()?;
        let n_agents = teams.iter().map(|t| t.agents.len()).sum();
        Ok(EnvState {
            bodies,
            arena,
            goals,
            elim: EliminationStatus {
                team_out,
                tie,
                timeout,
                eliminated,
            },
            step,
            rng,
            reached,
            block_out,
            last_actions,
            events: StepEvents::new(n_agents),
            done,
        })
    }
}
