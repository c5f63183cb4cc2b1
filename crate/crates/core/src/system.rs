//! The modeled machine: size, fault rates and the fault-to-failure chain.

use serde::{Deserialize, Serialize};

/// Distribution of times between fault arrivals on one node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterarrivalModel {
    #[default]
    Exponential,
    /// Weibull with the given shape; the scale is chosen so the mean matches the node MTBF.
    Weibull { shape: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub node_count: u64,
    /// Fault arrivals per node per hour.
    pub fault_rate_per_node: f64,
    /// Probability that a fault activates into an error.
    pub p_activation: f64,
    /// Probability that an unhandled error reaches the service interface.
    pub p_error_to_failure: f64,
    /// Fraction of node resources holding protected state.
    pub checkpoint_state_fraction: f64,
    #[serde(default)]
    pub interarrival_model: InterarrivalModel,
}

impl SystemModel {
    /// Default machine used to score candidates when a query names none.
    pub fn reference() -> Self {
        Self {
            node_count: 1024,
            fault_rate_per_node: 0.001,
            p_activation: 0.5,
            p_error_to_failure: 0.5,
            checkpoint_state_fraction: 0.25,
            interarrival_model: InterarrivalModel::Exponential,
        }
    }

    /// A single-node system whose mean time between fault arrivals is `mtbe` seconds,
    /// with every fault activating and every error failing the run.
    pub fn fail_stop(mtbe: f64) -> Self {
        Self {
            node_count: 1,
            fault_rate_per_node: 3600.0 / mtbe,
            p_activation: 1.0,
            p_error_to_failure: 1.0,
            checkpoint_state_fraction: 0.25,
            interarrival_model: InterarrivalModel::Exponential,
        }
    }

    /// System-wide mean seconds between fault arrivals; `None` when faults never occur.
    pub fn mean_time_between_events(&self) -> Option<f64> {
        let rate = self.node_count as f64 * self.fault_rate_per_node;
        if rate > 0.0 {
            Some(3600.0 / rate)
        } else {
            None
        }
    }

    /// Mean seconds between fault arrivals on a single node.
    pub fn node_mtbf(&self) -> Option<f64> {
        if self.fault_rate_per_node > 0.0 {
            Some(3600.0 / self.fault_rate_per_node)
        } else {
            None
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.node_count == 0 {
            return Err("node_count must be positive".into());
        }
        if !self.fault_rate_per_node.is_finite() || self.fault_rate_per_node < 0.0 {
            return Err("fault_rate_per_node must be finite and non-negative".into());
        }
        for (name, p) in [
            ("p_activation", self.p_activation),
            ("p_error_to_failure", self.p_error_to_failure),
            ("checkpoint_state_fraction", self.checkpoint_state_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if let InterarrivalModel::Weibull { shape } = self.interarrival_model {
            if !shape.is_finite() || shape <= 0.0 {
                return Err("weibull shape must be finite and positive".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mtbe_is_derived_from_aggregate_rate() {
        let mut s = SystemModel::reference();
        s.node_count = 100;
        s.fault_rate_per_node = 0.036;
        assert!((s.mean_time_between_events().unwrap() - 1000.0).abs() < 1e-9);
        s.fault_rate_per_node = 0.0;
        assert_eq!(s.mean_time_between_events(), None);
        assert!((SystemModel::fail_stop(1000.0).mean_time_between_events().unwrap() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let mut s = SystemModel::reference();
        s.p_activation = 1.5;
        assert!(s.check().is_err());
        let mut s = SystemModel::reference();
        s.interarrival_model = InterarrivalModel::Weibull { shape: 0.0 };
        assert!(s.check().is_err());
    }
}
