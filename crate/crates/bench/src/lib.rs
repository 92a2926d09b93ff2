//! Criterion benchmarks for the hot paths of `casimir-core`; see `benches/`.
