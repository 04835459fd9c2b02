//! # bsde-core
//!
//! A numerical engine for backward stochastic differential equations (BSDEs)
//! driven by multi-dimensional continuous martingales, applied to bilateral
//! derivative pricing under differential funding rates.
//!
//! The library is organised along the pipeline a pricing run follows:
//!
//! * [`linalg`] — small dense symmetric-matrix utilities (Jacobi
//!   eigendecomposition, matrix square roots, ellipticity constants) used by
//!   the quadratic-variation factorization `⟨M⟩ = ∫ m m* dt`.
//! * [`market`] — the lognormal multi-asset market with a lending rate, an
//!   unsecured borrowing rate and per-asset funding rates; simulates asset
//!   paths and driving-martingale increments under the lending martingale
//!   measure.
//! * [`generators`] — evaluatable BSDE drivers, including the funding-cost
//!   generators, plus randomized Lipschitz certification and the sign
//!   inequality that underpins the price-ordering results.
//! * [`bsde`] — the backward regression Monte Carlo solver, a density-process
//!   oracle for linear drivers, a comparison harness and a stability probe.
//! * [`pricing`] — contracts, hedger/counterparty prices, replicating
//!   strategies and the fair bilateral price interval.
//!
//! ## Determinism
//!
//! Every Monte Carlo loop draws from per-path counter-keyed RNG streams and
//! every parallel reduction folds fixed-size chunks in chunk order, so results
//! are bitwise identical across thread counts and across the `parallel`
//! feature being on or off. See [`exec`] for the execution helpers.

pub mod bsde;
pub mod error;
pub mod exec;
pub mod generators;
pub mod linalg;
pub mod market;
pub mod pricing;

pub use error::{Error, Result};
