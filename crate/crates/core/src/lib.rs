//! Simulation and optimization toolkit for a multi-antenna downlink assisted
//! by multiple aerial reconfigurable intelligent surfaces (ARISs).
//!
//! The crate models the physical layer (channels, SINR, rates, power, energy
//! efficiency), and solves the joint deployment / element on-off / phase
//! shift / power-control problem by alternating three stages:
//!
//! - successive convex approximation for ARIS placement ([`sca`]),
//! - an actor-critic PPO agent for per-element on/off states and quantized
//!   phase shifts ([`ppo`]),
//! - a whale-optimization search for the BS beamformer ([`woa`]),
//!
//! orchestrated by [`alt`], which also provides the benchmark baselines.

pub mod beamformer;
pub mod channel;
pub mod config;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod ris;
pub mod scenario;

pub mod alt;
pub mod ppo;
pub mod sca;
pub mod woa;

pub use beamformer::Beamformer;
pub use channel::{ChannelRealization, FadingDraws};
pub use config::{NoiseSpec, PowerModel, RewardGuard, ScenarioConfig, UavHoverParams};
pub use constraints::{check_constraints, ConstraintReport};
pub use error::{Error, Result};
pub use geometry::{euclidean_distance, Position3D};
pub use ris::{quantize_phase, RisControl};
pub use scenario::{derive_rng, Scenario};
