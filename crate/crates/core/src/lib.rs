//! Hyperparameter tuning of a small regression network for two objectives:
//! validation loss and agreement between feature-attribution methods
//! (integrated gradients, DeepLIFT, KernelSHAP).
//!
//! The tuner is a sequential model-based optimizer: a Latin hypercube
//! initial design, then a Kriging surrogate minimized by differential
//! evolution to pick each next design. Objectives can be combined by a
//! weighted sum or by Derringer–Suich desirabilities.

pub mod cli;
pub mod config;
pub mod consistency;
pub mod data;
pub mod desirability;
pub mod doe;
pub mod error;
pub mod nn;
pub mod seed;
pub mod surrogate;
pub mod tuner;
pub mod xai;

pub use error::{Error, Result};
