//! Parameter recovery, distance to the solution family and the constrained
//! counterexample search.

pub mod fit;
pub mod optim;
pub mod search;

pub use fit::{distance_to_family, fit_family, FamilyBasis, FamilyDistance, FitResult};
pub use search::{counterexample_search, HistoryEntry, Optimizer, SearchConfig, SearchReport};
