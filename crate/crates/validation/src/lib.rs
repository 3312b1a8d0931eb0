// SPDX-License-Identifier: Apache-2.0

//! Independent oracles for `sl2rmp` and the acceptance campaign that
//! compares every route against them.

pub mod airy;
pub mod criteria;
pub mod whittaker;
