//! Bell-scenario data model: behaviors, correlators, Bell expressions and
//! their local bounds.

mod behavior;
mod correlators;
mod expression;
mod local;
mod ns_coords;
mod scenario;

pub use behavior::{min_entropy, Behavior, ValidationReport, EXTERNAL_TOL, INTERNAL_TOL};
pub use correlators::BinaryCorrelators;
pub use expression::BellExpression;
pub use local::{
    local_bound, local_bound_with_cap, DeterministicStrategy, LocalBound, DEFAULT_STRATEGY_CAP,
};
pub use ns_coords::{NsBasis, NsCoord};
pub use scenario::Scenario;
