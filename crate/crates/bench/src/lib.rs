//! Criterion benchmarks for the snqi toolkit live under `benches/`.
