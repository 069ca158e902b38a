//! Command-line and HTTP front ends for the causal-audit toolkit. Both share
//! the operations and serialization in [`api`].

pub mod api;
pub mod cli;
pub mod server;
