//! Criterion benchmarks for the learners, the self-training loop and the
//! stylometry pass. See `benches/`.
