use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::DenseMatrix;

/// A reproducible random stream addressed by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id mapped onto the cipher's stream word,
/// so distinct ids give independent sequences under the same seed. Normal
/// draws use the ziggurat sampler from `rand_distr`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Matrix of i.i.d. standard normal entries, filled row by row.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    DenseMatrix::from_vec_unchecked(rows, cols, data)
}

/// Stream id for trial `trial` of the configuration identified by `canonical`:
/// the first eight bytes (little endian) of
/// `SHA-256(canonical || 0x00 || trial as u64 little endian)`.
pub fn derive_stream_id(canonical: &str, trial: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hasher.update([0u8]);
    hasher.update(trial.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}
