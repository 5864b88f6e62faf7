//! Spare-UAV fleet sizing for finite-horizon inspection missions.
//!
//! The crate is organised bottom-up: [`scenario`] derives the active fleet
//! size and recovery ratio, [`sizing`] turns them into spare counts,
//! [`geometry`] lays out and routes the sites, [`simengine`] flies one
//! mission, [`stats`] scores batches of missions, and [`harness`] ties the
//! pieces into reproducible experiments.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod scenario;
pub mod simengine;
pub mod sizing;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::Point;
pub use scenario::{DerivedMission, ScenarioConfig};
pub use sizing::{FleetPlan, SizingRule};
