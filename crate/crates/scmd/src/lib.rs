//! File formats and command-line front end for `scmd-core`.

pub mod cli;
pub mod io;
