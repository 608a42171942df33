//! Criterion benchmarks for `cohtherm-core`; see `benches/`.
