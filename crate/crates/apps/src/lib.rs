//! Example programs built on `sessio`: a cancellable tak server, a
//! proof-of-work miner, a polygon-clipping pipeline, a parallel downloader
//! and a travel agency over TCP, plus the `parallel` / `pipeline` helpers
//! they share.

pub mod clip;
pub mod download;
pub mod miner;
pub mod parallel;
pub mod tak;
pub mod travel;

pub use parallel::{parallel, pipeline};
