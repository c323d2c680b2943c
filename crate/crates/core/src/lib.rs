//! Valid orderings of subsets of Z_p (all partial sums distinct) and a
//! toolkit for anticoncentration of random subset sums.

pub mod anticonc;
pub mod error;
pub mod fourier;
pub mod oracles;
pub mod ordering;
pub mod repair;
pub mod rng;
pub mod sampling;
pub mod zp;

pub use error::{Error, Result};
pub use ordering::{BadEndpoints, EventFlags, OrderingState};
pub use repair::{construct_valid_ordering, RepairConfig, RepairReport};
pub use zp::{PrimeModulus, Residue};
