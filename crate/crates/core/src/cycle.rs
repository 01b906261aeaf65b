//! Cycle length of a round function: the least number of consecutive rounds
//! after which every output bit depends on at least two input bits, for
//! every sampled key.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cipher::{CipherSpec, RoundFunction};
use crate::error::{Error, Result};

/// Contexts per input bit when the block is too wide to enumerate.
pub const SAMPLED_CONTEXTS: usize = 1 << 12;

/// Largest block enumerated exhaustively.
pub const EXHAUSTIVE_MAX_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleLength {
    pub rounds: usize,
    /// False when no round count up to r0 met the condition; `rounds` is then r0.
    pub converged: bool,
}

/// For each input bit, the mask of output bits it was seen to flip.
fn flip_masks<F: Fn(u64) -> u64>(f: F, width: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut masks = vec![0u64; width];
    let full = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    if width <= EXHAUSTIVE_MAX_BITS {
        let table: Vec<u64> = (0..1u64 << width).map(&f).collect();
        for (i, mask) in masks.iter_mut().enumerate() {
            let e = 1u64 << (width - 1 - i);
            for s in 0..1u64 << width {
                if s & e == 0 {
                    *mask |= table[s as usize] ^ table[(s | e) as usize];
                }
            }
        }
    } else {
        for (i, mask) in masks.iter_mut().enumerate() {
            let e = 1u64 << (width - 1 - i);
            for _ in 0..SAMPLED_CONTEXTS {
                let s = rng.random::<u64>() & full;
                *mask |= f(s) ^ f(s ^ e);
            }
        }
    }
    masks
}

/// Every output bit has at least two influencing input bits.
fn every_output_mixes(masks: &[u64], width: usize) -> bool {
    (0..width).all(|j| {
        let bit = 1u64 << (width - 1 - j);
        masks.iter().filter(|m| *m & bit != 0).count() >= 2
    })
}

/// Search round counts `1..=r0`. `samples` independent key tuples are drawn
/// per round count; all of them must satisfy the condition.
pub fn detect_cycle_length<R: RoundFunction>(
    round: &R,
    spec: &CipherSpec,
    samples: usize,
    seed: u64,
) -> Result<CycleLength> {
    if samples == 0 {
        return Err(Error::BadArgument(
            "cycle detection needs at least one key sample",
        ));
    }
    let width = round.block_bits();
    let key_mask = if round.key_bits() == 64 {
        u64::MAX
    } else {
        (1u64 << round.key_bits()) - 1
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 1..=spec.rounds() {
        let mut ok = true;
        for _ in 0..samples {
            let keys: Vec<u64> = (0..t).map(|_| rng.random::<u64>() & key_mask).collect();
            let f = |s: u64| keys.iter().fold(s, |acc, &k| round.forward(acc, k));
            let masks = flip_masks(f, width, &mut rng);
            if !every_output_mixes(&masks, width) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(CycleLength {
                rounds: t,
                converged: true,
            });
        }
    }
    Ok(CycleLength {
        rounds: spec.rounds(),
        converged: false,
    })
}
