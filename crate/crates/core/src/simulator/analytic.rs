use serde::{Deserialize, Serialize};

use super::{SimError, Workload};
use crate::catalog::builtin_catalog;
use crate::costmodel::resolve_bindings;
use crate::synthesis::PatternInstance;
use crate::system::{InterarrivalModel, SystemModel};

/// First-order closed-form estimate for periodic checkpointing, valid when
/// the checkpoint cost is much smaller than the interval, which is in turn
/// much smaller than the mean time between events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticEstimate {
    Estimate {
        expected_makespan: f64,
        optimal_interval: f64,
        mtbe: f64,
    },
    /// No events occur, so checkpointing only costs time.
    CheckpointingUnnecessary { expected_makespan: f64 },
}

impl AnalyticEstimate {
    pub fn expected_makespan(&self) -> f64 {
        match self {
            AnalyticEstimate::Estimate { expected_makespan, .. }
            | AnalyticEstimate::CheckpointingUnnecessary { expected_makespan } => *expected_makespan,
        }
    }

    pub fn optimal_interval(&self) -> Option<f64> {
        match self {
            AnalyticEstimate::Estimate { optimal_interval, .. } => Some(*optimal_interval),
            AnalyticEstimate::CheckpointingUnnecessary { .. } => None,
        }
    }
}

pub fn analytic_checkpoint_model(
    sys: &SystemModel,
    inst: &PatternInstance,
    w: &Workload,
) -> Result<AnalyticEstimate, SimError> {
    if inst.pattern != "rollback" {
        return Err(SimError::InvalidConfig(format!(
            "the checkpoint model needs a rollback instance, got `{}`",
            inst.pattern
        )));
    }
    if sys.interarrival_model != InterarrivalModel::Exponential {
        return Err(SimError::InvalidConfig("the checkpoint model assumes exponential interarrivals".into()));
    }
    sys.check().map_err(SimError::InvalidConfig)?;
    w.check().map_err(SimError::InvalidConfig)?;
    let b = resolve_bindings(inst, &builtin_catalog())?;
    let (tau, delta, restart) = (b["interval"], b["checkpoint_cost"], b["restart_cost"]);
    if delta >= tau {
        return Err(SimError::InvalidConfig("checkpoint cost must be below the interval".into()));
    }
    let work = w.total_work / w.parallel_efficiency;
    let fault_free = work * (1.0 + delta / tau);
    Ok(match sys.mean_time_between_events() {
        None => AnalyticEstimate::CheckpointingUnnecessary {
            expected_makespan: fault_free,
        },
        Some(m) => AnalyticEstimate::Estimate {
            expected_makespan: fault_free * (1.0 + (tau / 2.0 + restart) / m),
            optimal_interval: (2.0 * delta * m).sqrt(),
            mtbe: m,
        },
    })
}
