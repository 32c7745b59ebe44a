//! Criterion benchmarks for the quadrature and representation kernels live in `benches/`.
