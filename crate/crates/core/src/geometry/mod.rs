//! Convex cells, partitions given as point-location oracles, and the small
//! LP routine behind Chebyshev centers.

mod convex;
pub mod lp;
mod partition;

pub use convex::{common_recession_direction, least_constrained_direction, ConvexSet, HPolytope};
pub(crate) use convex::{dot, unit};
pub use partition::{LocateFn, Partition, PartitionFamily};
