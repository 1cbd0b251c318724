//! File access, parallel execution and the command-line front end for
//! [`floodpass_core`].

pub mod cli;
pub mod files;
pub mod pool;
pub mod report;

pub use files::DirImages;
pub use pool::Pool;
