//! Deterministic swarm self-assembly simulator.
//!
//! A swarm of disc robots assembles a user-supplied bitmap figure by
//! hop-count gradient formation and edge-following around the growing
//! structure. Baseline mode reproduces the classic thousand-robot
//! collective-assembly system, including its two simulated human
//! interventions
//! (manual seed placement, manual removal of leftover robots). Extended mode
//! replaces both with distributed machinery: min-ID leader election that
//! seeds the coordinate frame, and quiescence-based surplus detection that
//! tears the swarm down when the figure is full.
//!
//! Every run is deterministic for a given scenario and seed: same trace,
//! same metrics, same event log, byte for byte. Individual runs are
//! sequential by contract; batches (sweeps, oracle suites) parallelize
//! across runs via the `parallel` feature.

pub mod config;
pub mod controller;
pub mod events;
pub mod exec;
pub mod geom;
pub mod metrics;
pub mod placement;
pub mod protocol;
pub mod render;
pub mod rng;
pub mod runner;
pub mod shape;
pub mod trace;
pub mod world;

pub use config::{ConfigError, Placement, ScenarioConfig};
pub use controller::{Controller, ControllerConfig, Mode};
pub use exec::Parallelism;
pub use metrics::{MetricsError, MetricsReport};
pub use protocol::{Gradient, Message, Phase, RobotId};
pub use runner::{run, run_to_dir, ExitStatus, RunError, RunResult};
pub use shape::{load_shape, GridShape, ShapeError};
pub use world::{WorldConfig, WorldState};
