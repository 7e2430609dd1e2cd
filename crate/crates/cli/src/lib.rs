//! Runtime composition of the tabletop cooking assistant.

pub mod config;
pub mod live;
pub mod pipeline;
pub mod replay;
pub mod simulate;
pub mod trace;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const TRACE: i32 = 3;
}
