//! Hierarchical datacubes over star schemas.
//!
//! Dimensions are strict value trees ([`hierarchy`]); tuples over them form a
//! complete lattice ([`lattice`]). [`cube`] materializes the classic and the
//! hierarchical datacube, and [`closure`] computes the closed cube, a lossless
//! condensed cover that answers any cell query through the closure operator.

pub mod closure;
pub mod cube;
pub mod error;
pub mod hierarchy;
pub mod ingest;
pub mod lattice;
pub mod verify;

#[cfg(test)]
mod testdata;

pub use closure::{closure, naive_query, stats, ClosedCube, CubeStats, QueryAnswer};
pub use cube::{
    cube_classic, cube_hierarchical, cuboid_order, AggregateFn, Cell, CubeRelation, Fact, MeasureSpec, Warehouse,
};
pub use error::{Error, Issue, Result};
pub use hierarchy::{DimensionalTuple, Hierarchy, HierarchyBuilder, NodeId};
pub use lattice::{HTuple, LatticeContext, SizeGuard};
