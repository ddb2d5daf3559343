//! Benchmark-only crate; see `benches/pipeline.rs`. The measured surfaces are
//! the covariant construction, the transfer-operator spectral report, the
//! variational sweep, and windowed local expectations.
