//! Shared fixtures for the criterion benchmarks (see `benches/tracker.rs`).

use sdof_core::imaging::Image8;
use sdof_core::synth::{generate_scene, Scene, SceneSpec};

/// A mid-sized scene with default texture and motion parameters.
pub fn benchmark_scene() -> Scene {
    generate_scene(&SceneSpec {
        num_objects: 10,
        num_frames: 12,
        width: 640,
        height: 480,
        seed: 404,
        ..SceneSpec::default()
    })
    .expect("static spec is valid")
}

/// Deterministic full-range noise frame.
pub fn noise_frame(width: usize, height: usize, seed: u64) -> Image8 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Image8::new(width, height, (0..width * height).map(|_| rng.gen()).collect())
        .expect("valid dimensions")
}
