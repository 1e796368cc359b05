//! Ground detection, walkable-direction search and 2.5-D object fusion for
//! RGB-D + IMU travel aids.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod direction;
pub mod eval;
pub mod error;
pub mod feedback;
pub mod fusion;
pub mod geometry;
pub mod ground;
pub mod mask;
