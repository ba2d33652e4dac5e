//! Core of the human-in-the-loop workbench: an event bus with durable
//! storage, forecasting models, active-learning strategies, synthetic data,
//! explanations, decision support, intention safety and the security layer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_learning;
pub mod bus;
pub mod decision;
pub mod exec;
pub mod experiments;
pub mod forecasting;
pub mod intention;
pub mod security;
pub mod simulation;
pub mod types;
pub mod xai;

pub use exec::Exec;
