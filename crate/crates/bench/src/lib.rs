//! Criterion benchmarks for the qwalk crate live under `benches/`.
