// SPDX-License-Identifier: Apache-2.0

//! Small numerical kernels shared by the solvers.

pub mod ode;
pub mod quad;
