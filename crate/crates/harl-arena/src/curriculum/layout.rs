//! Declarative observation slot maps with placeholder-zero padding.

use crate::curriculum::plan::CurriculumPlan;
use crate::envs::{feature_slots, TeamSpec};
use crate::error::{ArenaError, Result};

/// Stage index marking a slot that never activates (the zero-buffer tail).
pub const NEVER_ACTIVE: usize = usize::MAX;

/// One named span of an observation vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub name: String,
    pub width: usize,
    /// First stage index at which this slot carries data; earlier stages
    /// read exact zeros. Slots never deactivate once active.
    pub active_from_stage: usize,
}

/// Ordered slot list with a fixed total width shared by every stage.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationLayout {
    pub slots: Vec<Slot>,
    pub total_width: usize,
}

impl ObservationLayout {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        for (i, a) in slots.iter().enumerate() {
            for b in slots.iter().skip(i + 1) {
                if a.name == b.name {
                    return Err(ArenaError::Config(format!("duplicate slot name '{}'", a.name)));
                }
            }
        }
        let total_width = slots.iter().map(|s| s.width).sum();
        Ok(ObservationLayout { slots, total_width })
    }

    pub fn is_active(&self, slot: &Slot, stage: usize) -> bool {
        slot.active_from_stage != NEVER_ACTIVE && stage >= slot.active_from_stage
    }

    /// Names of the slots active at `stage`, in layout order.
    pub fn active_names(&self, stage: usize) -> Vec<&str> {
        self.slots
            .iter()
            .filter(|s| self.is_active(s, stage))
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Byte offset of each slot in layout order.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.slots.len());
        let mut acc = 0;
        for s in &self.slots {
            out.push(acc);
            acc += s.width;
        }
        out
    }
}

/// Build the layout for one agent across a whole plan: the union of every
/// stage's feature slots (activation recorded as the first stage that uses
/// each slot) followed by the always-zero tail buffer.
pub fn make_layout(
    plan: &CurriculumPlan,
    teams: &[TeamSpec],
    team_id: usize,
    member_id: usize,
) -> Result<ObservationLayout> {
    if plan.stages.is_empty() {
        return Err(ArenaError::Config("curriculum plan needs at least one stage".into()));
    }
    let mut slots: Vec<Slot> = Vec::new();
    for (stage_idx, stage) in plan.stages.iter().enumerate() {
        for (name, width) in feature_slots(stage.task, teams, team_id, member_id)? {
            match slots.iter().find(|s| s.name == name) {
                Some(existing) => {
                    if existing.width != width {
                        return Err(ArenaError::Config(format!(
                            "slot '{name}' width changes between stages ({} vs {width})",
                            existing.width
                        )));
                    }
                }
                None => slots.push(Slot {
                    name,
                    width,
                    active_from_stage: stage_idx,
                }),
            }
        }
    }
    if plan.zero_buffer_width > 0 {
        slots.push(Slot {
            name: "zero_buffer".into(),
            width: plan.zero_buffer_width,
            active_from_stage: NEVER_ACTIVE,
        });
    }
    ObservationLayout::new(slots)
}

/// Assemble a fixed-width observation: active slots are filled from the
/// named features in layout order; inactive and buffer slots are exact
/// zeros. Supplying a feature for an inactive slot, omitting an active one,
/// or naming an unknown slot is a contract error.
pub fn pad_observation(
    features: &[(&str, &[f64])],
    layout: &ObservationLayout,
    stage: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; layout.total_width];
    let mut used = vec![false; features.len()];
    let mut offset = 0;
    for slot in &layout.slots {
        let supplied = features.iter().position(|(name, _)| *name == slot.name);
        if layout.is_active(slot, stage) {
            let idx = supplied.ok_or_else(|| {
                ArenaError::Contract(format!("missing feature for active slot '{}'", slot.name))
            })?;
            let values = features[idx].1;
            if values.len() != slot.width {
                return Err(ArenaError::shape(
                    format!("feature '{}'", slot.name),
                    slot.width,
                    values.len(),
                ));
            }
            out[offset..offset + slot.width].copy_from_slice(values);
            used[idx] = true;
        } else if let Some(idx) = supplied {
            return Err(ArenaError::Contract(format!(
                "feature '{}' supplied for a slot inactive at stage {stage}",
                features[idx].0
            )));
        }
        offset += slot.width;
    }
    if let Some(idx) = used.iter().position(|u| !u) {
        if !layout.slots.iter().any(|s| s.name == features[idx].0) {
            return Err(ArenaError::Contract(format!(
                "feature '{}' does not name any layout slot",
                features[idx].0
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout3() -> ObservationLayout {
        ObservationLayout::new(vec![
            Slot {
                name: "a".into(),
                width: 2,
                active_from_stage: 0,
            },
            Slot {
                name: "b".into(),
                width: 1,
                active_from_stage: 1,
            },
            Slot {
                name: "zero_buffer".into(),
                width: 3,
                active_from_stage: NEVER_ACTIVE,
            },
        ])
        .unwrap()
    }

    #[test]
    fn degenerate_no_active_slots_is_all_zero() {
        let layout = ObservationLayout::new(vec![Slot {
            name: "zero_buffer".into(),
            width: 4,
            active_from_stage: NEVER_ACTIVE,
        }])
        .unwrap();
        let obs = pad_observation(&[], &layout, 0).unwrap();
        assert_eq!(obs, vec![0.0; 4]);
    }

    #[test]
    fn earlier_stage_slots_agree_across_stages() {
        let layout = layout3();
        let s0 = pad_observation(&[("a", &[1.5, -2.0])], &layout, 0).unwrap();
        let s1 = pad_observation(&[("a", &[1.5, -2.0]), ("b", &[9.0])], &layout, 1).unwrap();
        assert_eq!(&s0[0..2], &s1[0..2]);
        assert_eq!(s0[2], 0.0);
        assert_eq!(s1[2], 9.0);
        assert_eq!(&s0[3..6], &[0.0; 3]);
        assert_eq!(&s1[3..6], &[0.0; 3]);
        assert_eq!(s0.len(), s1.len());
    }

    #[test]
    fn inactive_slot_write_is_rejected() {
        let layout = layout3();
        let err = pad_observation(&[("a", &[0.0, 0.0]), ("b", &[1.0])], &layout, 0).unwrap_err();
        assert!(err.to_string().contains("'b'"), "{err}");
    }

    #[test]
    fn missing_active_feature_names_the_slot() {
        let layout = layout3();
        let err = pad_observation(&[("b", &[1.0])], &layout, 1).unwrap_err();
        assert!(err.to_string().contains("'a'"), "{err}");
    }

    #[test]
    fn unknown_feature_is_rejected() {
        let layout = layout3();
        let err =
            pad_observation(&[("a", &[0.0, 0.0]), ("bogus", &[1.0])], &layout, 0).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn duplicate_slot_names_fail_construction() {
        let err = ObservationLayout::new(vec![
            Slot {
                name: "x".into(),
                width: 1,
                active_from_stage: 0,
            },
            Slot {
                name: "x".into(),
                width: 2,
                active_from_stage: 0,
            },
        ])
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
