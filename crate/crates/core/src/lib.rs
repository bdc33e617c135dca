//! Distributed leader tracking for networks of Euler-Lagrange agents over
//! directed, switching graphs.
//!
//! The crate covers graph certificates, agent dynamics, the finite-time
//! leader observer, the model-independent control laws, gain design with a
//! checkable ledger, simulation and post-run analysis.

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod observer;
pub mod scenario;
pub mod sign;
pub mod simulation;

pub use controller::GainSet;
pub use design::{design_gains, verify_gains, GainLedger};
pub use dynamics::{AgentModel, LeaderTrajectory, Model, TwoLinkArm, TwoLinkArmParams};
pub use error::{Error, Result};
pub use graph::{laplacian, solve_gamma, DirectedGraph, GammaCertificate, SwitchingSignal};
pub use scenario::{Scenario, ScenarioConfig};
pub use simulation::{run, SimTrace};
