//! Benchmark fixtures shared by the criterion targets in `benches/`.

use sqg_core::{InitialCondition, SpectralField};

/// Seeded band-limited field filling every degree up to `lmax`.
pub fn random_field(lmax: usize, seed: u64) -> SpectralField {
    InitialCondition::RandomBand {
        lo: 1,
        hi: lmax,
        amplitude: 0.5,
        seed: Some(seed),
    }
    .build(lmax, 0)
    .expect("valid preset")
}

/// Degrees used by the transform benchmarks.
pub const TRANSFORM_DEGREES: [usize; 4] = [32, 64, 128, 256];
