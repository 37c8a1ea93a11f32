//! Criterion benchmark harness; see the `benches/` targets.
