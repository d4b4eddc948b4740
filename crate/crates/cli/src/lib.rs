//! Library backing the `twinseq` binary; the subcommands live here so
//! integration tests can drive them without spawning processes.

pub mod args;
pub mod bench;
pub mod commands;
pub mod compare;
pub mod harness;
