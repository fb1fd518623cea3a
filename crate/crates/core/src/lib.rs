#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod error;
pub mod linalg;
pub mod linear_map;
pub mod map;
pub mod maximal_volume;
pub mod measure;
pub mod norm;
mod par;
pub mod polytope;
pub mod region;
pub mod rng;
