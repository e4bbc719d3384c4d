//! Counter-based random streams. Every particle draws from its own ChaCha
//! stream addressed by `(seed, salt, path, branch)`, so results do not depend
//! on how paths are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Branch identifiers of the particles that make up one path family.
pub mod branch {
    /// The trunk path that carries the chain of interaction times.
    pub const TRUNK: u64 = 0;
    /// First and second offspring spawned at the first interaction.
    pub const FIRST_OFFSPRING_A: u64 = 1;
    pub const FIRST_OFFSPRING_B: u64 = 2;
    /// Offspring spawned at the second interaction.
    pub const SECOND_OFFSPRING: u64 = 3;
}

/// Address of a sub-stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub salt: u64,
    pub path: u64,
    pub branch: u64,
}

impl StreamKey {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.salt.to_le_bytes());
        key[16..24].copy_from_slice(&self.path.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.branch);
        rng
    }
}
