//! Cannings models with variable population size and their scaling limits.

pub mod coalescent;
pub mod error;
pub mod limit;
pub mod offspring;
pub mod profile;
pub mod rng;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use offspring::{MomentReport, OffspringLaw};
pub use profile::{ContinuousProfile, DiscreteProfile, ProfilePair};
pub use tree::{CanningsTree, KPointTree, LatticePath, Vertex};
pub use coalescent::{CoalescentTrace, MarkedTrace};
pub use limit::{LimitSampler, PairRateClock};
