//! Checkpoint transfer between curriculum stages.

use crate::curriculum::layout::make_layout;
use crate::curriculum::plan::CurriculumPlan;
use crate::error::{ArenaError, Result};
use crate::harness::Checkpoint;

/// Move a checkpoint from one stage to a later one: network parameters are
/// copied verbatim, optimizer moments reset, and stage metadata rewritten.
/// The two stages must share the layout (same total width, and every slot
/// active in the source stage stays active in the target), which the
/// zero-buffer construction guarantees within one plan; a plan with a
/// different width is rejected.
pub fn transfer_checkpoint(
    ckpt: &Checkpoint,
    from_stage: usize,
    to_stage: usize,
    plan: &CurriculumPlan,
) -> Result<Checkpoint> {
    if from_stage >= to_stage {
        return Err(ArenaError::Contract(format!(
            "transfer requires from_stage < to_stage, got {from_stage} -> {to_stage}"
        )));
    }
    if to_stage >= plan.stages.len() {
        return Err(ArenaError::Contract(format!(
            "target stage {to_stage} outside the plan ({} stages)",
            plan.stages.len()
        )));
    }
    if ckpt.stage != from_stage {
        return Err(ArenaError::Contract(format!(
            "checkpoint is at stage {}, not {from_stage}",
            ckpt.stage
        )));
    }

    let config = ckpt.config()?;
    let mut global = 0usize;
    for team in &config.teams {
        for mi in 0..team.agents.len() {
            let layout = make_layout(plan, &config.teams, team.team_id, mi)?;
            let learner_width = ckpt.learners[team.team_id].policies[mi].mlp.in_dim();
            if layout.total_width != learner_width {
                return Err(ArenaError::Contract(format!(
                    "layout width {} incompatible with checkpoint networks ({})",
                    layout.total_width, learner_width
                )));
            }
            let from_active = layout.active_names(from_stage);
            let to_active = layout.active_names(to_stage);
            for name in &from_active {
                if !to_active.contains(name) {
                    return Err(ArenaError::Contract(format!(
                        "slot '{name}' would deactivate between stages"
                    )));
                }
            }
            global += 1;
        }
    }
    let _ = global;

    let mut out = ckpt.clone();
    out.stage = to_stage;
    out.update_in_stage = 0;
    out.stage_evals.clear();
    out.env_states.clear(); // the new stage builds a fresh batch
    out.run_complete = false;
    for learner in out.learners.iter_mut() {
        learner.reset_optimizers();
        learner.frozen = false;
    }
    Ok(out)
}
