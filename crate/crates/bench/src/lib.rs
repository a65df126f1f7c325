//! Criterion benchmarks for `fairmtl-core`; see `benches/`.
