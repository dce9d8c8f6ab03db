//! State-file input/output and number formatting shared by the `naqi` binary.

pub mod output;
pub mod state_io;
