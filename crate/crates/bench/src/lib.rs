//! Benchmark-only crate; see `benches/quadrature.rs`. The library target
//! exists so the package builds on its own.
