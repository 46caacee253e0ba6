use std::fmt;

use thiserror::Error;

use crate::model::{ModelError, NodeId, PrecheckCause, PrecheckFailure};

/// Why no placement exists. This is a domain outcome, not a fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    ClientLinks(Vec<PrecheckFailure>),
    /// A positive demand whose QoS range cannot reach any server.
    QosExhausted { node: NodeId },
    /// A merged bundle alone exceeds the server capacity.
    LeafOverCapacity { leaf: NodeId, weight: u64, capacity: u64 },
    /// Equipping every eligible child still leaves more than `W` on the node.
    Exhausted { node: NodeId },
}

impl Infeasibility {
    /// Short fixed label for reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Infeasibility::ClientLinks(failures) => {
                if failures.iter().any(|f| matches!(f.cause, PrecheckCause::LinkBandwidth { .. })) {
                    "client link bandwidth"
                } else {
                    "client over capacity"
                }
            }
            Infeasibility::QosExhausted { .. } => "qos range",
            Infeasibility::LeafOverCapacity { .. } => "bundle over capacity",
            Infeasibility::Exhausted { .. } => "capacity exhausted",
        }
    }
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::ClientLinks(failures) => {
                let list: Vec<String> = failures.iter().map(ToString::to_string).collect();
                write!(f, "client precheck failed: {}", list.join("; "))
            }
            Infeasibility::QosExhausted { node } => {
                write!(f, "clients of {node} have a QoS range too small to reach any server")
            }
            Infeasibility::LeafOverCapacity { leaf, weight, capacity } => {
                write!(f, "bundle {leaf} carries {weight} requests, above capacity {capacity}")
            }
            Infeasibility::Exhausted { node } => write!(
                f,
                "workload on {node} exceeds capacity even with every eligible child equipped"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error("index {index} out of range for node {node} at depth {depth}")]
    Range { node: NodeId, index: usize, depth: usize },
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

impl SolveError {
    pub fn infeasibility(&self) -> Option<&Infeasibility> {
        match self {
            SolveError::Infeasible(why) => Some(why),
            _ => None,
        }
    }
}
