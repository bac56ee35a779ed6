//! Counter-based random streams for reproducible parallel simulation.
//!
//! Every repetition owns two ChaCha8 streams keyed on the master seed: a
//! *policy lane* consumed by tie-breaking, exploration coins and posterior
//! samples, and a *reward lane* whose position is reset to a fixed block per
//! round. Round `t` therefore always sees the same reward noise regardless of
//! how many draws the policy made before it, which keeps policies comparable
//! under common random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved for the reward draw of a single round.
pub const WORDS_PER_ROUND: u128 = 16;

const POLICY_LANE: u64 = 0;
const REWARD_LANE: u64 = 1;

/// SplitMix64 finaliser, used to expand a 64-bit seed into key material.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(master_seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = master_seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

fn lane(master_seed: u64, repetition: u64, lane: u64) -> ChaCha8Rng {
    assert!(repetition < (1 << 63), "repetition index out of range");
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(master_seed));
    rng.set_stream((repetition << 1) | lane);
    rng
}

/// Random streams of one repetition.
#[derive(Clone, Debug)]
pub struct EpisodeStreams {
    pub policy: ChaCha8Rng,
    reward: ChaCha8Rng,
}

impl EpisodeStreams {
    pub fn new(master_seed: u64, repetition: u64) -> Self {
        Self {
            policy: lane(master_seed, repetition, POLICY_LANE),
            reward: lane(master_seed, repetition, REWARD_LANE),
        }
    }

    /// Reward stream positioned at the block reserved for `round` (1-based).
    pub fn reward_at(&mut self, round: u64) -> &mut ChaCha8Rng {
        self.reward.set_word_pos(round as u128 * WORDS_PER_ROUND);
        &mut self.reward
    }
}
