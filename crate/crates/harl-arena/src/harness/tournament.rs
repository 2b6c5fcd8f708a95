//! Deterministic win-rate tournaments between two policy sets.

use rayon::prelude::*;

use crate::envs::{agent_index, build_observation, Env, ObsContext, TaskTag, TerminalSummary};
use crate::error::{ArenaError, Result};
use crate::harl::PolicyNet;
use crate::seeding::derive_seed;

/// Outcome counts for one side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SideCounts {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
}

/// Tournament result from side A's perspective.
#[derive(Clone, Debug, PartialEq)]
pub struct WinRateReport {
    pub side_a: SideCounts,
    pub side_b: SideCounts,
    pub n_instances: u64,
    pub win_rate: f64,
    pub opponent: String,
}

impl WinRateReport {
    pub fn summary(&self) -> String {
        format!(
            "win_rate={:.4} ({} wins, {} losses, {} ties over {} instances vs {})",
            self.win_rate,
            self.side_a.wins,
            self.side_a.losses,
            self.side_a.ties,
            self.n_instances,
            self.opponent
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    TeamWin(usize),
    Tie,
}

/// Episode result under deterministic (mean-action) policies.
pub struct EpisodeReport {
    pub team_returns: Vec<f64>,
    pub terminal: TerminalSummary,
}

/// Run one episode with mean actions; `policies[g]` drives global agent `g`.
pub fn run_episode(
    env: &Env,
    obs: &ObsContext,
    policies: &[&PolicyNet],
    seed: u64,
) -> Result<EpisodeReport> {
    let index = agent_index(&env.teams);
    if policies.len() != index.len() {
        return Err(ArenaError::shape("episode policies", index.len(), policies.len()));
    }
    let mut state = env.reset(seed)?;
    let mut team_returns = vec![0.0; env.n_teams()];
    loop {
        let mut actions = Vec::with_capacity(index.len());
        for (g, policy) in policies.iter().enumerate() {
            let ob = build_observation(
                &state,
                &env.teams,
                env.task,
                &env.cfg,
                g,
                &obs.layouts[g],
                obs.stage,
            )?;
            actions.push(policy.act_mean(&ob)?);
        }
        let outcome = env.step(&mut state, &actions)?;
        for (ti, r) in outcome.team_rewards.iter().enumerate() {
            team_returns[ti] += r;
        }
        if outcome.done {
            let terminal = outcome.terminal.expect("terminal summary on done");
            return Ok(EpisodeReport {
                team_returns,
                terminal,
            });
        }
    }
}

fn classify(env: &Env, terminal: &TerminalSummary) -> Result<Outcome> {
    match env.task {
        TaskTag::SumoAdversarial => {
            if terminal.elim.tie || terminal.elim.timeout {
                Ok(Outcome::Tie)
            } else if terminal.elim.team_out[1] {
                Ok(Outcome::TeamWin(0))
            } else if terminal.elim.team_out[0] {
                Ok(Outcome::TeamWin(1))
            } else {
                Ok(Outcome::Tie)
            }
        }
        TaskTag::LaserTag => {
            let flyer_team = env
                .teams
                .iter()
                .position(|t| t.agents.iter().all(|a| a.flyer))
                .ok_or_else(|| ArenaError::Contract("no flyer team".into()))?;
            if terminal.elim.timeout {
                // Flyers outlasted the clock.
                Ok(Outcome::TeamWin(flyer_team))
            } else {
                Ok(Outcome::TeamWin(1 - flyer_team))
            }
        }
        _ => Err(ArenaError::Contract(format!(
            "tournaments need an adversarial task, got {}",
            env.task.as_str()
        ))),
    }
}

/// Play `n_instances` deterministic episodes between two learner sides.
///
/// Instances come in mirrored pairs: both instances of a pair share one
/// spawn seed, with the sides swapping team roles, so identical policies
/// score exactly half the decisive episodes each. Outcomes merge by
/// instance index and are deterministic for any worker count.
pub fn run_tournament(
    side_a: &[Vec<PolicyNet>],
    side_b: &[Vec<PolicyNet>],
    env: &Env,
    obs: &ObsContext,
    n_instances: usize,
    seed: u64,
    opponent: impl Into<String>,
) -> Result<WinRateReport> {
    if env.n_teams() != 2 {
        return Err(ArenaError::Config("tournaments are two-team".into()));
    }
    for (side, name) in [(side_a, "a"), (side_b, "b")] {
        if side.len() != 2 {
            return Err(ArenaError::Config(format!(
                "side {name} must provide policies for both team roles"
            )));
        }
        for (ti, team) in env.teams.iter().enumerate() {
            if side[ti].len() != team.agents.len() {
                return Err(ArenaError::Config(format!(
                    "side {name} team {ti}: {} policies for {} agents",
                    side[ti].len(),
                    team.agents.len()
                )));
            }
            for (mi, policy) in side[ti].iter().enumerate() {
                if policy.action_dim() != team.agents[mi].action_dim() {
                    return Err(ArenaError::Config(format!(
                        "side {name} policy {ti}/{mi} action dim mismatch"
                    )));
                }
            }
        }
    }

    let index = agent_index(&env.teams);
    let outcomes: Vec<Outcome> = (0..n_instances)
        .into_par_iter()
        .map(|i| -> Result<Outcome> {
            let pair = (i / 2) as u64;
            let swapped = i % 2 == 1;
            let episode_seed = derive_seed(seed, pair);
            // Map each global agent to the side that controls its team in
            // this instance.
            let policies: Vec<&PolicyNet> = index
                .iter()
                .map(|&(ti, mi)| {
                    let a_controls = (ti == 0) != swapped;
                    if a_controls {
                        &side_a[ti][mi]
                    } else {
                        &side_b[ti][mi]
                    }
                })
                .collect();
            let report = run_episode(env, obs, &policies, episode_seed)?;
            classify(env, &report.terminal)
        })
        .collect::<Result<_>>()?;

    let mut side_a_counts = SideCounts::default();
    let mut side_b_counts = SideCounts::default();
    for (i, outcome) in outcomes.iter().enumerate() {
        let swapped = i % 2 == 1;
        match outcome {
            Outcome::Tie => {
                side_a_counts.ties += 1;
                side_b_counts.ties += 1;
            }
            Outcome::TeamWin(team) => {
                let a_won = (*team == 0) != swapped;
                if a_won {
                    side_a_counts.wins += 1;
                    side_b_counts.losses += 1;
                } else {
                    side_a_counts.losses += 1;
                    side_b_counts.wins += 1;
                }
            }
        }
    }
    Ok(WinRateReport {
        side_a: side_a_counts,
        side_b: side_b_counts,
        n_instances: n_instances as u64,
        win_rate: side_a_counts.wins as f64 / n_instances as f64,
        opponent: opponent.into(),
    })
}
