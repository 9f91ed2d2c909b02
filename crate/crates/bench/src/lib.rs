//! Criterion benchmarks for the gapwalk kernels live under `benches/`.
