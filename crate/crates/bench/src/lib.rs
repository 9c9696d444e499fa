//! Benchmarks for the analysis pipeline live under `benches/`.
