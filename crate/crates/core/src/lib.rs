#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ap;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod flex;
pub mod gain;
pub mod geometry;
pub mod group;
pub mod linalg;
