//! Criterion benchmarks for `fei-core`; see `benches/`.
