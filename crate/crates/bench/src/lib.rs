//! Seeded fixtures shared by the benchmarks.

use rtann::{synthesize, Dataset, Generator, MlpConfig, SynthSpec};

pub fn fixture(generator: Generator, n: usize) -> Dataset {
    synthesize(&SynthSpec {
        generator,
        n,
        noise_sd: 1.0,
        seed: 7,
    })
    .expect("fixture parameters are valid")
}

/// A short training run; the timings track per-epoch cost, not convergence.
pub fn quick_mlp() -> MlpConfig {
    MlpConfig {
        max_epochs: 200,
        tolerance: 0.0,
        ..MlpConfig::default()
    }
}
