//! Benchmarks for splitlab live under `benches/`.
