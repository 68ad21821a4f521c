//! Passage-traversing optimal path planning (PTOPP).
//!
//! Preprocesses polygonal/prismatic obstacle maps into sparse passage sets
//! (Delaunay proximity graphs with the Gabriel validity condition) and a
//! Gabriel cell decomposition of the free space, then runs sampling-based
//! optimal planners (RRT*, PRM*) whose path costs optimize traversed
//! passage widths. Passage traversal checks are O(1) per edge via a cell
//! walk over the decomposition.

pub mod cells;
pub mod costs;
pub mod env;
pub mod geom;
pub mod passages;
pub mod plancore;
pub mod planners;
