//! Minimum-cardinality replica placement on tree networks under the
//! Closest access policy, with per-client QoS hop limits, link bandwidth
//! limits and homogeneous server capacity.
//!
//! The solver runs in two passes over a transformed tree (see [`transform`]):
//! a bottom-up pass filling contribution tables ([`dp`]) and a top-down pass
//! reading the placement off those tables ([`placement`]). The [`verifier`]
//! and the exhaustive [`oracle`] are written against the original tree only
//! and are used to check the solver.

pub mod amount;
pub mod document;
pub mod dp;
pub mod error;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod placement;
pub mod transform;
pub mod verifier;

use std::fmt;
use std::str::FromStr;

pub use amount::{Bound, Contribution};
pub use dp::{run_phase1, ContributionTable, NodeTable};
pub use error::{Infeasibility, SolveError};
pub use generator::{fictivize, generate, DualRoleTree, GenConfig, Shape};
pub use model::{
    parse_instance, precheck_client_links, serialize_instance, validate_instance, ModelError,
    NetworkInstance, NodeId, NodeKind, NodeSpec,
};
pub use oracle::{brute_force_min, OracleResult};
pub use placement::{place_replicas, solve, PlacementResult, Solution};
pub use transform::{transform_to_star, StarLeaf, StarTree};
pub use verifier::{verify_placement, FeasibilityReport, Violation, ViolationKind};

/// Bandwidth semantics.
///
/// `PaperLiteral` checks each merged client bundle on its own against every
/// link of its serving path. `Aggregate` sums every flow crossing a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    PaperLiteral,
    Aggregate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PaperLiteral => "paper-literal",
            Mode::Aggregate => "aggregate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-literal" => Ok(Mode::PaperLiteral),
            "aggregate" => Ok(Mode::Aggregate),
            other => Err(format!("unknown mode {other:?} (expected paper-literal or aggregate)")),
        }
    }
}
