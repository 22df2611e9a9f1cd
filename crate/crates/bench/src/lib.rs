//! Benchmark-only crate; see `benches/pipelines.rs`.
//!
//! Shared fixtures for the benchmark targets live here so the bench file
//! stays focused on measurement setup.

use avc_core::channel::two_state_bsc;
use avc_core::{Avc, Channel};

/// The binary channel pair used across benchmarks.
pub fn bsc_pair() -> Avc {
    two_state_bsc(0.1, 0.3).expect("valid crossovers")
}

/// A deterministic, left-invertible channel with four outputs.
pub fn separating_deterministic() -> Avc {
    Avc::from_tensor(vec![
        vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]],
        vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
    ])
    .expect("valid tensor")
}

/// A mid-size noisy channel for capacity iteration benchmarks.
pub fn noisy_channel() -> Channel {
    Channel::from_rows(vec![
        vec![0.70, 0.10, 0.10, 0.10],
        vec![0.05, 0.80, 0.05, 0.10],
        vec![0.15, 0.05, 0.60, 0.20],
        vec![0.10, 0.10, 0.10, 0.70],
    ])
    .expect("valid rows")
}
