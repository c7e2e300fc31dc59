pub mod association;
pub mod config;
pub mod error;
pub mod filter;
pub mod gospa;
pub mod harness;
pub mod io;
pub mod measurement;
pub mod model;
pub mod rng;
pub mod scenario;
