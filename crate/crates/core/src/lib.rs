//! Skeleton diagrams and sparse topological graphs extracted from voxel
//! distance fields, plus global planners that search them.

pub mod graph;
pub mod io;
pub mod layers;
pub mod medial;
pub mod pipeline;
pub mod planners;
pub mod search;
pub mod spatial;
pub mod thinning;
pub mod voxel;
pub mod world;
