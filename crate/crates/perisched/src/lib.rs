//! Periodic scheduling of task chains with harmonic periods on dedicated
//! resources: feasibility and degeneracy criteria, first-fit and local
//! search heuristics, a height-divisible 2D packing warm start, a
//! period-focused reoptimization pass, polynomial special cases, and
//! instance generators.

pub mod bench;
pub mod criteria;
pub mod feasibility;
pub mod ffs;
pub mod instgen;
pub mod io;
pub mod matheur;
pub mod model;
pub mod packing;
pub mod render;
pub mod search;
pub mod special;
