//! Local priority mechanisms for constrained allocation.

pub mod alpha;
pub mod axioms;
pub mod compare;
pub mod consistency;
pub mod constraint;
pub mod engine;
pub mod enumerate;
pub mod error;
pub mod instance;
pub mod io;
pub mod mechanisms;
pub mod preference;
pub mod render;
pub mod verdict;

pub use alpha::CompromiserAssignment;
pub use consistency::Reading;
pub use constraint::{Constraint, Generator};
pub use engine::{
    is_implementable, is_truncation, marginal, mechanisms_equal, rank_vector, run_lp, tabulate,
    MechanismTable, Outcome, RankVector, Trace, TraceStep,
};
pub use error::{Error, Result};
pub use instance::{diff, AgentSet, Allocation, Instance, ObjectSet, Suballocation};
pub use preference::{Preference, Profile, ProfileSpace};
pub use verdict::{Hypothesis, Report, Verdict, Witness};
