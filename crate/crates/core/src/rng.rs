//! Keyed random streams.
//!
//! Every random draw in the crate comes from a stream identified by a master
//! seed and a short tuple of tags (unitary index, site index, ...). Streams are
//! independent of the order in which they are requested, so parallel workers
//! reproduce serial results bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags keeping unrelated uses of the same indices apart.
pub mod tag {
    pub const GLOBAL_UNITARY: u64 = 0x676c_6f62;
    pub const LOCAL_UNITARY: u64 = 0x6c6f_6361;
    pub const SHOTS: u64 = 0x7368_6f74;
    pub const STATE: u64 = 0x7374_6174;
    pub const CELL: u64 = 0x6365_6c6c;
    pub const OPERATOR: u64 = 0x6f70_6572;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit key from a master seed and tags.
pub fn derive(master_seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(master_seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn stream(master_seed: u64, tags: &[u64]) -> StreamRng {
    let mut key = derive(master_seed, tags);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        key = splitmix64(key);
        chunk.copy_from_slice(&key.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_replayable_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        let e: u64 = stream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, e);
    }
}
