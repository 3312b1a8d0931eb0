// SPDX-License-Identifier: Apache-2.0

//! Lyapunov exponents and log-norm variances of products of random SL(2,R)
//! matrices, computed from spectral problems and cross-checked by simulation.

// `!(x > 0.0)` rejects NaN along with the negatives; index loops mirror the
// matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closedform;
pub mod ensembles;
pub mod mellin;
pub mod montecarlo;
pub mod numerics;
pub mod sl2core;
pub mod spectral;
