//! Deterministic random-number plumbing.
//!
//! Every stochastic routine in this crate draws from a ChaCha8 generator
//! seeded by hashing a master seed together with a purpose label and a list of
//! structural coordinates (replicate index, method index, chain index, ...).
//! Two consequences:
//!
//! - results never depend on thread scheduling or evaluation order, because
//!   each unit of work owns a generator derived from its coordinates alone;
//! - distinct purposes ("problem", "chain", "slices", ...) consume
//!   non-overlapping streams even when their coordinates coincide.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

/// Derive a 32-byte seed from a master seed, a purpose label, and coordinates.
///
/// The purpose string is length-prefixed before hashing so that distinct
/// (purpose, parts) combinations cannot collide by concatenation.
pub fn derive_seed(master: u64, purpose: &str, parts: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    for part in parts {
        hasher.update(part.to_le_bytes());
    }
    hasher.finalize().into()
}

/// A ChaCha8 generator on the stream identified by (master, purpose, parts).
pub fn stream_rng(master: u64, purpose: &str, parts: &[u64]) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::from_seed(derive_seed(master, purpose, parts))
}

/// Draw a standard normal vector of length `d`.
pub fn normal_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_coordinates_same_stream() {
        let mut a = stream_rng(7, "chain", &[1, 2, 3]);
        let mut b = stream_rng(7, "chain", &[1, 2, 3]);
        let xa: Vec<f64> = (0..10).map(|_| a.sample(StandardNormal)).collect();
        let xb: Vec<f64> = (0..10).map(|_| b.sample(StandardNormal)).collect();
        assert_eq!(xa, xb, "identical coordinates must give identical streams");
    }

    #[test]
    fn different_purpose_different_stream() {
        let a = derive_seed(7, "chain", &[1]);
        let b = derive_seed(7, "slices", &[1]);
        assert_ne!(a, b);
    }

    #[test]
    fn purpose_label_is_length_prefixed() {
        // "ab" + [0x01...] must not collide with "a" + [b-ish parts]; the
        // cheap way to check the prefixing is that a label split across the
        // boundary changes the seed.
        let a = derive_seed(0, "ab", &[]);
        let b = derive_seed(0, "a", &[u64::from(b'b')]);
        assert_ne!(a, b);
    }

    #[test]
    fn normal_vector_has_expected_moments() {
        let mut rng = stream_rng(0, "test", &[]);
        let x = normal_vector(&mut rng, 100_000);
        let mean = x.mean();
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (x.len() - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean} too far from 0");
        assert!((var - 1.0).abs() < 0.02, "variance {var} too far from 1");
    }
}
