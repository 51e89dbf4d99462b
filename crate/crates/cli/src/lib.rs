//! Command-line front end: scene container format, NPY volumes, frame sources and commands.

pub mod commands;
pub mod container;
pub mod npy;
pub mod source;
