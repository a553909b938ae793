//! Shared fixtures for the criterion benchmarks.

use lofstream_core::{generate, Algo, Dataset, DetectorState, LofParams, SynthRecipe};

/// A baseline detector plus the stream it will consume.
pub struct Fixture {
    pub state: DetectorState,
    pub stream: Dataset,
}

pub fn recipe(n_initial: usize, n_stream: usize) -> SynthRecipe {
    SynthRecipe {
        dim: 2,
        n_initial,
        n_stream,
        outlier_fraction: 0.05,
        outlier_scale: 3.0,
        outlier_shift: 6.0,
        seed: 1234,
    }
}

pub fn dataset_pair(n_initial: usize, n_stream: usize) -> (Dataset, Dataset) {
    generate(&recipe(n_initial, n_stream)).expect("valid recipe")
}

pub fn fixture(algo: Algo, n_initial: usize, n_stream: usize, k: usize) -> Fixture {
    let (initial, stream) = dataset_pair(n_initial, n_stream);
    let state = DetectorState::init(initial, LofParams::new(k).expect("valid k"), algo)
        .expect("baseline fits");
    Fixture { state, stream }
}
