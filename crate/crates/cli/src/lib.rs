//! Command-line front end for `lfdecouple`.

pub mod commands;
pub mod exit;
pub mod input;
pub mod model;
