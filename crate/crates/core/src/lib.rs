#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod fault_model;
pub mod forward_op;
pub mod jump_lab;
pub mod kernels;
pub mod numdiff;
pub mod stability_lab;

pub use error::{Error, Result};
