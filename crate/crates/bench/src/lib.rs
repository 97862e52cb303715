//! Criterion benchmarks for the geometry, alignment and grasping kernels.
//! Run with `cargo bench -p r2g-bench`.
