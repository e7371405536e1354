//! Shared fixtures for the kernel benchmarks.
