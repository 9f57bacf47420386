//! Safety supervision of a black-box vehicle controller: a supervisor MPC
//! certifies each input by QP feasibility and hands over to a backup MPC
//! when no safe plan remains.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix it to
//! `f64`, which is what the scenario tooling uses.

pub mod disturbance;
pub mod path;
pub mod pursuit;
pub mod qp;
pub mod scalar;
pub mod scenario;
pub mod supervisor;
pub mod vehicle;

pub use scalar::Real;

pub type QpProblem = qp::QpProblem<f64>;
pub type QpOutcome = qp::QpOutcome<f64>;
pub type QpSettings = qp::QpSettings<f64>;
pub type Supervisor = supervisor::Supervisor<f64>;
pub type MpcConfig = supervisor::MpcConfig<f64>;
pub type PolytopeSpec = supervisor::PolytopeSpec<f64>;
pub type Plant = vehicle::Plant<f64>;
pub type PlantState = vehicle::PlantState<f64>;
pub type ErrorState = vehicle::ErrorState<f64>;
pub type RateInput = vehicle::RateInput<f64>;
pub type VehicleParams = vehicle::VehicleParams<f64>;
pub type DiscreteLti = vehicle::DiscreteLti<f64>;
pub type ReferencePath = path::ReferencePath<f64>;
