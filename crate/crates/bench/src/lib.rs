//! Deterministic fixture builders shared by the bench targets.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statbeam_core::channel::{
    exponential_correlation, random_beamformer, random_spectrum_covariance,
};
use statbeam_core::{Beamformer, BeamformerSet, CovarianceMatrix};

/// One covariance per user, all M x M, with distinct correlation profiles so
/// the design objectives are not degenerate.
pub fn user_covariances(m: usize) -> Vec<CovarianceMatrix> {
    (0..m)
        .map(|i| {
            let r = 0.2 + 0.6 * i as f64 / m.max(2) as f64;
            exponential_correlation(m, r, 1.0 + 0.1 * i as f64).unwrap()
        })
        .collect()
}

/// A generic positive definite pair for the two-user paths.
pub fn pd_pair() -> (CovarianceMatrix, CovarianceMatrix) {
    (
        random_spectrum_covariance(&[2.4, 0.7], 11).unwrap(),
        random_spectrum_covariance(&[1.8, 0.4], 12).unwrap(),
    )
}

/// Seeded unit-norm beams, one per user.
pub fn beam_set(m: usize, seed: u64) -> BeamformerSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beams: Vec<Beamformer> =
        (0..m).map(|_| random_beamformer(m, &mut rng).unwrap()).collect();
    BeamformerSet::new(beams).unwrap()
}
