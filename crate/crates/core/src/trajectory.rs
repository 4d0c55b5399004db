//! The trajectory record every other module consumes.

use serde::{Deserialize, Serialize};

use crate::dirmath::{directions_from_positions, DirectionDeg, Point};
use crate::error::{Error, Result};
use crate::simulate::SimSpec;

/// Where a trajectory set came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Simulated(SimSpec),
    Ingested { source: String },
}

/// Positions and derived headings of every agent over one coordination event.
///
/// Storage is agent-major: `positions[i]` has `n_steps + 1` points and
/// `directions[i]` has `n_steps` headings, where `directions[i][t]` is the
/// heading of the move from `positions[i][t]` to `positions[i][t + 1]`.
/// Agents are addressed by index; `agent_ids` carries their external ids.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySet {
    agent_ids: Vec<u32>,
    positions: Vec<Vec<Point>>,
    directions: Vec<Vec<DirectionDeg>>,
    informed: Vec<usize>,
    pub provenance: Provenance,
}

impl TrajectorySet {
    /// Builds a set from positions, deriving directions. `informed` holds
    /// agent indices (not ids).
    pub fn from_positions(
        agent_ids: Vec<u32>,
        positions: Vec<Vec<Point>>,
        informed: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        if agent_ids.len() != positions.len() {
            return Err(Error::Format(format!(
                "{} agent ids for {} position series",
                agent_ids.len(),
                positions.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::Format("trajectory set has no agents".into()));
        }
        let len = positions[0].len();
        for (i, series) in positions.iter().enumerate() {
            if series.len() != len {
                return Err(Error::Format(format!(
                    "agent {} has {} positions, expected {len}",
                    agent_ids[i],
                    series.len()
                )));
            }
            if let Some(t) = series.iter().position(|p| !p.is_finite()) {
                return Err(Error::NonFinitePosition { agent: i, t });
            }
        }
        if let Some(&bad) = informed.iter().find(|&&i| i >= agent_ids.len()) {
            return Err(Error::Format(format!("informed index {bad} out of range")));
        }
        let directions = directions_from_positions(&positions)?;
        Ok(TrajectorySet {
            agent_ids,
            positions,
            directions,
            informed,
            provenance,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.agent_ids.len()
    }

    /// Number of headings per agent.
    pub fn n_steps(&self) -> usize {
        self.directions[0].len()
    }

    pub fn agent_ids(&self) -> &[u32] {
        &self.agent_ids
    }

    pub fn positions(&self) -> &[Vec<Point>] {
        &self.positions
    }

    pub fn directions(&self) -> &[Vec<DirectionDeg>] {
        &self.directions
    }

    pub fn informed(&self) -> &[usize] {
        &self.informed
    }

    pub fn index_of(&self, agent_id: u32) -> Option<usize> {
        self.agent_ids.iter().position(|&a| a == agent_id)
    }

    /// All agents' positions at step `t`.
    pub fn positions_at(&self, t: usize) -> Vec<Point> {
        self.positions.iter().map(|s| s[t]).collect()
    }

    /// All agents' headings at step `t`.
    pub fn directions_at(&self, t: usize) -> Vec<DirectionDeg> {
        self.directions.iter().map(|s| s[t]).collect()
    }
}

/// Fails with `InconsistentAgents` unless every event carries the same ids.
pub fn check_consistent_agents(events: &[TrajectorySet]) -> Result<()> {
    let Some(first) = events.first() else {
        return Ok(());
    };
    for (k, ev) in events.iter().enumerate().skip(1) {
        if ev.agent_ids != first.agent_ids {
            return Err(Error::InconsistentAgents(format!(
                "event {k} has ids {:?}, event 0 has {:?}",
                ev.agent_ids, first.agent_ids
            )));
        }
    }
    Ok(())
}
