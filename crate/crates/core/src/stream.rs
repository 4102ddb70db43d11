//! Splittable, counter-based random streams.
//!
//! A stream is named by a master seed and a path of tags. The generator
//! for a stream is ChaCha20 keyed by SHA-256 of that name, so sibling
//! streams share no state and every (seed, path) pair yields the same
//! sequence on every platform. Workers receive their own child stream;
//! nothing is ever shared mutably.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"silab.stream.v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream `tag`; the parent is left untouched.
    pub fn derive(&self, tag: u64) -> RandomStream {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(tag);
        RandomStream {
            seed: self.seed,
            path,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut hasher = Sha256::new();
        hasher.update(DOMAIN);
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for tag in &self.path {
            hasher.update(tag.to_le_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        ChaCha20Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(s: &RandomStream, k: usize) -> Vec<u64> {
        let mut rng = s.rng();
        (0..k).map(|_| rng.random()).collect()
    }

    #[test]
    fn derivation_is_deterministic() {
        let root = RandomStream::new(42);
        assert_eq!(draws(&root.derive(1), 100), draws(&root.derive(1), 100));
    }

    #[test]
    fn siblings_differ() {
        let root = RandomStream::new(42);
        let a = draws(&root.derive(1), 100);
        let b = draws(&root.derive(2), 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn parent_unaffected_by_child() {
        let root = RandomStream::new(7);
        let before = draws(&root, 10);
        let _child = root.derive(3);
        assert_eq!(root.path(), &[] as &[u64]);
        assert_eq!(draws(&root, 10), before);
    }

    #[test]
    fn path_structure_matters() {
        // (1, 2) and (2, 1), and a parent and its child, are distinct streams.
        let root = RandomStream::new(0);
        let a = draws(&root.derive(1).derive(2), 4);
        let b = draws(&root.derive(2).derive(1), 4);
        assert_ne!(a, b);
        assert_ne!(draws(&root, 4), draws(&root.derive(0), 4));
    }

    #[test]
    fn pinned_first_draw() {
        // Reference value from an independent ChaCha20 implementation keyed
        // with SHA-256("silab.stream.v1" || 2024 || 1 || 5), all u64 LE.
        let first = draws(&RandomStream::new(2024).derive(5), 1)[0];
        assert_eq!(first, 17_312_574_174_657_646_093);
        let u: f64 = RandomStream::new(2024).rng().random();
        assert!((0.0..1.0).contains(&u));
    }
}
