//! Flow sensing of swimmer leg kicks with an artificial lateral line.
//!
//! The crate covers the whole desk-scale pipeline: a surrogate flow simulator
//! for a three-port pressure sensor array ([`flowsim`]), preprocessing and
//! short-time Fourier analysis ([`signal`]), a small neural network engine
//! with explicit backpropagation ([`nn`]), the time/time-frequency fusion
//! network and its baselines ([`models`]), dataset construction ([`data`]),
//! metrics and experiment drivers ([`eval`]) and the experiment
//! configuration used by the command-line front end ([`config`]).

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod flowsim;
pub mod kinematics;
pub mod models;
pub mod nn;
pub mod signal;
pub mod train;

pub use error::{Error, ErrorKind, Result};
