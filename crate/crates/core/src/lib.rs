//! Simulation and analytics toolkit for a policy-driven programming tutor.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`datagen`] synthesizes a labeled warm-start set of learner states.
//! 2. [`policy`] trains a two-hidden-layer feedback-selection network on it.
//! 3. [`cohortsim`] deploys the trained policy against a simulated cohort and
//!    logs every turn with its outcomes and composite reward.
//! 4. [`analytics`], [`models`] and [`profiles`] turn the interaction log into
//!    early-signal predictors, temporal-dynamics predictors and latent learner
//!    profiles.
//!
//! Every stochastic step draws from a seeded sub-stream (see [`rng`]) so a
//! run is reproducible bit-for-bit from its seed.

pub mod analytics;
pub mod cohortsim;
pub mod datagen;
pub mod domain;
pub mod error;
pub mod models;
pub mod nested;
pub mod policy;
pub mod profiles;
pub mod rng;

pub use error::{Error, Result};
