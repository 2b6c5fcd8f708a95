//! Metrics history and CSV export.
//!
//! `metrics.csv` carries one row per update; `eval.csv` carries one row per
//! evaluation point. The CSVs are the authoritative outputs; the SVG plots
//! are rendered from the same data. No wall-clock values appear anywhere,
//! so identical runs produce byte-identical files.

use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::curriculum::EvalMetrics;
use crate::error::{ArenaError, Result};
use crate::harl::UpdateRecord;

/// Flattened per-update row.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateRow {
    pub update: usize,
    pub stage: usize,
    pub episodes: usize,
    /// Per team: (mean_return, policy_loss, value_loss, entropy, approx_kl,
    /// clip_fraction, frozen).
    pub teams: Vec<TeamRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeamRow {
    pub mean_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub frozen: bool,
}

/// One evaluation point: named metrics at a global update index.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub update: usize,
    pub stage: usize,
    pub metrics: EvalMetrics,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsHistory {
    pub updates: Vec<UpdateRow>,
    pub evals: Vec<EvalRow>,
}

impl MetricsHistory {
    pub fn push_update(&mut self, stage: usize, global_update: usize, record: &UpdateRecord) {
        let teams = record
            .stats
            .teams
            .iter()
            .enumerate()
            .map(|(ti, st)| TeamRow {
                mean_return: record.mean_return[ti],
                policy_loss: st.policy_loss,
                value_loss: st.value_loss,
                entropy: st.entropy,
                approx_kl: st.approx_kl,
                clip_fraction: st.clip_fraction,
                frozen: record.frozen[ti],
            })
            .collect();
        self.updates.push(UpdateRow {
            update: global_update,
            stage,
            episodes: record.episodes,
            teams,
        });
    }

    pub fn push_eval(&mut self, stage: usize, global_update: usize, metrics: EvalMetrics) {
        self.evals.push(EvalRow {
            update: global_update,
            stage,
            metrics,
        });
    }

    /// Win-rate-vs-initial series in eval order.
    pub fn win_rate_series(&self) -> Vec<(usize, f64)> {
        self.evals
            .iter()
            .filter_map(|row| {
                row.metrics
                    .get("win_rate_vs_initial")
                    .map(|v| (row.update, v))
            })
            .collect()
    }

    fn metric_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.evals {
            for (name, _) in &row.metrics.values {
                if !cols.iter().any(|c| c == name) {
                    cols.push(name.clone());
                }
            }
        }
        cols
    }

    pub fn metrics_csv(&self) -> String {
        let n_teams = self.updates.first().map(|r| r.teams.len()).unwrap_or(0);
        let mut out = String::from("update,stage,episodes");
        for t in 0..n_teams {
            out.push_str(&format!(
                ",mean_return_{t},policy_loss_{t},value_loss_{t},entropy_{t},approx_kl_{t},clip_fraction_{t},frozen_{t}"
            ));
        }
        out.push('\n');
        for row in &self.updates {
            out.push_str(&format!("{},{},{}", row.update, row.stage, row.episodes));
            for team in &row.teams {
                out.push_str(&format!(
                    ",{},{},{},{},{},{},{}",
                    team.mean_return,
                    team.policy_loss,
                    team.value_loss,
                    team.entropy,
                    team.approx_kl,
                    team.clip_fraction,
                    team.frozen as u8
                ));
            }
            out.push('\n');
        }
        out
    }

    pub fn eval_csv(&self) -> String {
        let cols = self.metric_columns();
        let mut out = String::from("update,stage");
        for c in &cols {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for row in &self.evals {
            out.push_str(&format!("{},{}", row.update, row.stage));
            for c in &cols {
                match row.metrics.get(c) {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        std::fs::write(dir.join("eval.csv"), self.eval_csv())?;
        Ok(())
    }

    pub fn write(&self, w: &mut Writer) {
        w.put_u64(self.updates.len() as u64);
        for row in &self.updates {
            w.put_u64(row.update as u64);
            w.put_u64(row.stage as u64);
            w.put_u64(row.episodes as u64);
            w.put_u64(row.teams.len() as u64);
            for t in &row.teams {
                w.put_f64(t.mean_return);
                w.put_f64(t.policy_loss);
                w.put_f64(t.value_loss);
                w.put_f64(t.entropy);
                w.put_f64(t.approx_kl);
                w.put_f64(t.clip_fraction);
                w.put_bool(t.frozen);
            }
        }
        w.put_u64(self.evals.len() as u64);
        for row in &self.evals {
            w.put_u64(row.update as u64);
            w.put_u64(row.stage as u64);
            w.put_u64(row.metrics.values.len() as u64);
            for (name, value) in &row.metrics.values {
                w.put_str(name);
                w.put_f64(*value);
            }
        }
    }

    pub fn read(r: &mut Reader) -> Result<MetricsHistory> {
        let n_updates = r.get_u64()? as usize;
        let mut updates = Vec::with_capacity(n_updates);
        for _ in 0..n_updates {
            let update = r.get_u64()? as usize;
            let stage = r.get_u64()? as usize;
            let episodes = r.get_u64()? as usize;
            let n_teams = r.get_u64()? as usize;
            let mut teams = Vec::with_capacity(n_teams);
            for _ in 0..n_teams {
                teams.push(TeamRow {
                    mean_return: r.get_f64()?,
                    policy_loss: r.get_f64()?,
                    value_loss: r.get_f64()?,
                    entropy: r.get_f64()?,
                    approx_kl: r.get_f64()?,
                    clip_fraction: r.get_f64()?,
                    frozen: r.get_bool()?,
                });
            }
            updates.push(UpdateRow {
                update,
                stage,
                episodes,
                teams,
            });
        }
        let n_evals = r.get_u64()? as usize;
        let mut evals = Vec::with_capacity(n_evals);
        for _ in 0..n_evals {
            let update = r.get_u64()? as usize;
            let stage = r.get_u64()? as usize;
            let n = r.get_u64()? as usize;
            let mut metrics = EvalMetrics::default();
            for _ in 0..n {
                let name = r.get_str()?;
                let value = r.get_f64()?;
                metrics.push(name, value);
            }
            evals.push(EvalRow {
                update,
                stage,
                metrics,
            });
        }
        Ok(MetricsHistory { updates, evals })
    }
}

/// Parse a CSV produced by this module back into numeric cells (empty cells
/// become NaN; the `frozen_*` columns parse as 0/1).
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ArenaError::Format("empty csv".into()))?;
    let cols: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|cell| {
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| ArenaError::Format(format!("bad csv cell '{cell}'")))
                }
            })
            .collect::<Result<_>>()?;
        if cells.len() != cols.len() {
            return Err(ArenaError::Format("ragged csv row".into()));
        }
        rows.push(cells);
    }
    Ok((cols, rows))
}
