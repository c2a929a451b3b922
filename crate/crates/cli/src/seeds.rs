//! Run seeds are hashes of the master seed and the run's identity, so that
//! adding or changing one case leaves the seeds of every other case alone.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Data,
    Split,
    Generate,
    Train,
    Projection,
}

impl Purpose {
    fn tag(self) -> &'static str {
        match self {
            Purpose::Data => "data",
            Purpose::Split => "split",
            Purpose::Generate => "generate",
            Purpose::Train => "train",
            Purpose::Projection => "projection",
        }
    }
}

/// First eight bytes (little endian) of
/// `SHA-256("copaug/<purpose>/<master>/<case>/<generation>/<training>")`.
pub fn derive_seed(master: u64, purpose: Purpose, case: &str, generation: usize, training: usize) -> u64 {
    let key = format!("copaug/{}/{master}/{case}/{generation}/{training}", purpose.tag());
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
