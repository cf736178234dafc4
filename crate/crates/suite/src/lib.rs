//! Host crate for the acceptance run in `tests/acceptance.rs`.
//!
//! It is a separate package so that the long, criterion-by-criterion run
//! comes after every unit and property suite of the workspace.
