//! Criterion benchmarks for `depnet-core`; see `benches/`.
