//! Turning a round-key recovery attack on round-reduced E_n into cycle-key
//! recovery for the level `n-1` cycle function.
//!
//! Plaintexts of the `n-1` cipher are padded with `y` zero bits and handed,
//! with their ciphertexts, to an oracle that returns round keys of E_n
//! reduced to `r` rounds (no whitening, no permutations). The first round's
//! tail key only lands on the cycle output, so it can be folded into the
//! cycle key; one cycle per pair then yields the pairs for the remaining
//! `r-1` rounds, and the process repeats.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::cipher::{BaseCipher, RoundFunction};
use crate::engine::{
    cycle_function, cycle_key_bits, elastic_round, ElasticParams, KeyCursor, RoundKeys,
};
use crate::error::{Error, Result};

/// Largest joint key space the brute-force oracle will walk, in bits.
pub const JOINT_SPACE_LIMIT: usize = 24;

/// `s` pairs of the level `n-1` cipher run for `rounds` cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainCipherPairSet {
    plain: Vec<BitString>,
    cipher: Vec<BitString>,
    rounds: usize,
}

impl PlainCipherPairSet {
    pub fn new(plain: Vec<BitString>, cipher: Vec<BitString>, rounds: usize) -> Result<Self> {
        if plain.is_empty() || plain.len() != cipher.len() {
            return Err(Error::BadArgument(
                "need s >= 1 matching plaintext/ciphertext pairs",
            ));
        }
        if rounds == 0 {
            return Err(Error::BadArgument("need at least one round"));
        }
        let width = plain[0].len();
        for p in plain.iter().chain(&cipher) {
            if p.len() != width {
                return Err(Error::LengthMismatch {
                    expected: width,
                    actual: p.len(),
                });
            }
        }
        Ok(Self {
            plain,
            cipher,
            rounds,
        })
    }

    /// Random plaintexts run through the level-`level` cycle function once
    /// per key in `cycle_keys`.
    pub fn generate<R: RoundFunction>(
        base: &BaseCipher<R>,
        level: u32,
        cycle_keys: &[BitString],
        s: usize,
        seed: u64,
    ) -> Result<Self> {
        let width = base.spec().block_bits() << level;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plain: Vec<BitString> = (0..s)
            .map(|_| (0..width).map(|_| rng.random::<bool>()).collect())
            .collect();
        let cipher = plain
            .iter()
            .map(|p| run_cycles(base, level, cycle_keys, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(plain, cipher, cycle_keys.len())
    }

    pub fn plain(&self) -> &[BitString] {
        &self.plain
    }

    pub fn cipher(&self) -> &[BitString] {
        &self.cipher
    }

    pub fn len(&self) -> usize {
        self.plain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plain.is_empty()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn width(&self) -> usize {
        self.plain[0].len()
    }
}

/// Apply one level-`level` cycle per key.
pub fn run_cycles<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    cycle_keys: &[BitString],
    plain: &BitString,
) -> Result<BitString> {
    let mut s = plain.clone();
    for k in cycle_keys {
        let g = cycle_key_bits(level, base.spec());
        if k.len() != g {
            return Err(Error::KeyLengthMismatch {
                expected: g,
                actual: k.len(),
            });
        }
        s = cycle_function(base, &s, level, &mut KeyCursor::new(k))?;
    }
    Ok(s)
}

/// How many pairs `cycle_keys` map correctly.
pub fn verify_cycle_keys<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    cycle_keys: &[BitString],
    pairs: &PlainCipherPairSet,
) -> Result<usize> {
    let mut ok = 0;
    for (p, c) in pairs.plain.iter().zip(&pairs.cipher) {
        if run_cycles(base, level, cycle_keys, p)? == *c {
            ok += 1;
        }
    }
    Ok(ok)
}

/// Round keys of a round-reduced E_n, first round first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoundKeySet {
    pub rounds: Vec<RoundKeys>,
}

/// Zero-padded plaintexts and ciphertexts whose tails are wildcards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedPairs {
    pub plain: Vec<BitString>,
    /// Only the leftmost bits are known; the `y` tail bits may be anything.
    pub cipher_left: Vec<BitString>,
    pub expansion: usize,
}

impl PaddedPairs {
    pub fn len(&self) -> usize {
        self.plain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plain.is_empty()
    }

    /// Whether an E_n output matches a ciphertext, ignoring the tail.
    pub fn matches(&self, index: usize, output: &BitString) -> bool {
        let left = self.cipher_left[index].len();
        output.len() == left + self.expansion
            && output
                .slice(0, left)
                .map(|o| o == self.cipher_left[index])
                .unwrap_or(false)
    }
}

pub fn pad_pairs(plain: &[BitString], cipher: &[BitString], y: usize) -> PaddedPairs {
    PaddedPairs {
        plain: plain
            .iter()
            .map(|p| p.concat(&BitString::zeros(y)))
            .collect(),
        cipher_left: cipher.to_vec(),
        expansion: y,
    }
}

/// Fold a first-round tail key into the cycle key.
///
/// With a zero tail, the round XORs `kw_prime` into the cycle output at the
/// window starting at `j`. That output difference is pushed back into the
/// cycle key: at level 0 it lands on the final round key; above, the right
/// half goes into the second inner cycle and the left half into the second
/// half-XOR key.
pub fn convert_round_key<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    kc_prime: &BitString,
    kw_prime: &BitString,
    j: usize,
) -> Result<BitString> {
    let spec = base.spec();
    let width = spec.block_bits() << level;
    let g = cycle_key_bits(level, spec);
    if kc_prime.len() != g {
        return Err(Error::KeyLengthMismatch {
            expected: g,
            actual: kc_prime.len(),
        });
    }
    if j >= width || kw_prime.len() > width {
        return Err(Error::WindowTooLarge {
            count: kw_prime.len(),
            modulus: width,
        });
    }
    let mut delta = BitString::zeros(width);
    delta.write_wrapping(j, kw_prime, width)?;
    let mut key = kc_prime.clone();
    absorb_output_xor(base, level, &mut key, 0, &delta)?;
    Ok(key)
}

fn absorb_output_xor<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    key: &mut BitString,
    at: usize,
    delta: &BitString,
) -> Result<()> {
    let spec = base.spec();
    if level == 0 {
        if spec.round_key_bits() != spec.block_bits() {
            return Err(Error::BadArgument(
                "output XOR can only be folded into a full-width final round key",
            ));
        }
        let last = at + cycle_key_bits(0, spec) - spec.round_key_bits();
        let k = key.slice(last, last + spec.block_bits())?.xor(delta)?;
        return key.write(last, &k);
    }
    let half = delta.len() / 2;
    let dl = delta.slice(0, half)?;
    let dr = delta.slice(half, delta.len())?;
    let inner = cycle_key_bits(level - 1, spec);
    // Layout: inner, k1, inner, k2.
    absorb_output_xor(base, level - 1, key, at + inner + half, &dr)?;
    let k2_at = at + 2 * inner + half;
    let k2 = key.slice(k2_at, k2_at + half)?.xor(&dl)?.xor(&dr)?;
    key.write(k2_at, &k2)
}

/// A round-key recovery attack on round-reduced E_n.
pub trait RecoveryOracle {
    /// Every key set under which each padded plaintext, run through
    /// `params.rounds()` rounds with offsets starting at `first_offset`,
    /// matches its ciphertext on the left part.
    fn recover<R: RoundFunction>(
        &mut self,
        base: &BaseCipher<R>,
        params: &ElasticParams,
        pairs: &PaddedPairs,
        first_offset: usize,
    ) -> Result<Vec<RoundKeySet>>;

    /// Operations consumed so far.
    fn op_cost(&self) -> u64;
}

/// Walks the whole joint round-key space.
#[derive(Debug, Clone)]
pub struct BruteForceOracle {
    space_bound: usize,
    ops: u64,
}

impl BruteForceOracle {
    /// Refuse per-round key spaces wider than `space_bound` bits.
    pub fn new(space_bound: usize) -> Self {
        Self {
            space_bound,
            ops: 0,
        }
    }
}

impl RecoveryOracle for BruteForceOracle {
    fn recover<R: RoundFunction>(
        &mut self,
        base: &BaseCipher<R>,
        params: &ElasticParams,
        pairs: &PaddedPairs,
        first_offset: usize,
    ) -> Result<Vec<RoundKeySet>> {
        let spec = base.spec();
        let per_round = params.round_key_bits(spec);
        if per_round > self.space_bound {
            return Err(Error::CostGuard {
                bits: per_round,
                limit: self.space_bound,
            });
        }
        let joint = per_round * params.rounds();
        if joint > JOINT_SPACE_LIMIT {
            return Err(Error::CostGuard {
                bits: joint,
                limit: JOINT_SPACE_LIMIT,
            });
        }
        let search = Search {
            base,
            params,
            pairs,
            first_offset,
            cycle_bits: cycle_key_bits(params.level() - 1, spec),
        };
        let mut found = Vec::new();
        let mut chosen = Vec::with_capacity(params.rounds());
        search.walk(&pairs.plain, &mut chosen, &mut found)?;
        self.ops += (1u64 << joint) * pairs.len() as u64;
        Ok(found)
    }

    fn op_cost(&self) -> u64 {
        self.ops
    }
}

struct Search<'a, R> {
    base: &'a BaseCipher<R>,
    params: &'a ElasticParams,
    pairs: &'a PaddedPairs,
    first_offset: usize,
    cycle_bits: usize,
}

impl<R: RoundFunction> Search<'_, R> {
    fn walk(
        &self,
        states: &[BitString],
        chosen: &mut Vec<RoundKeys>,
        found: &mut Vec<RoundKeySet>,
    ) -> Result<()> {
        let depth = chosen.len();
        if depth == self.params.rounds() {
            if states
                .iter()
                .enumerate()
                .all(|(i, s)| self.pairs.matches(i, s))
            {
                found.push(RoundKeySet {
                    rounds: chosen.clone(),
                });
            }
            return Ok(());
        }
        let y = self.params.expansion();
        let bits = self.cycle_bits + y;
        let offset = (self.first_offset + depth) % self.params.left_bits();
        for k in 0..1u64 << bits {
            let material = BitString::from_u64(k, bits);
            let keys = RoundKeys {
                cycle: material.slice(0, self.cycle_bits)?,
                tail: material.slice(self.cycle_bits, bits)?,
                offset,
            };
            let next = states
                .iter()
                .map(|s| elastic_round(self.base, self.params, s, &keys))
                .collect::<Result<Vec<_>>>()?;
            chosen.push(keys);
            self.walk(&next, chosen, found)?;
            chosen.pop();
        }
        Ok(())
    }
}

/// Work done by [`reduce`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostReport {
    pub oracle_calls: u64,
    /// Level `n-1` cycle evaluations used to advance the pairs.
    pub cycle_evaluations: u64,
    /// E_n rounds evaluated to check the chosen candidates.
    pub elastic_rounds: u64,
    pub oracle_ops: u64,
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>12}", "oracle calls", self.oracle_calls)?;
        writeln!(
            f,
            "{:<20} {:>12}",
            "cycle evaluations", self.cycle_evaluations
        )?;
        writeln!(f, "{:<20} {:>12}", "E_n rounds", self.elastic_rounds)?;
        write!(f, "{:<20} {:>12}", "oracle ops", self.oracle_ops)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub cycle_keys: Vec<BitString>,
    pub cost: CostReport,
}

/// Recover `pairs.rounds()` level `level-1` cycle keys using an oracle for
/// E_level with expansion `y`.
pub fn reduce<R: RoundFunction, O: RecoveryOracle>(
    base: &BaseCipher<R>,
    level: u32,
    y: usize,
    pairs: &PlainCipherPairSet,
    oracle: &mut O,
) -> Result<Reduction> {
    let spec = base.spec();
    let base_params = ElasticParams::new(level, y, spec)?;
    if pairs.width() != base_params.left_bits() {
        return Err(Error::LengthMismatch {
            expected: base_params.left_bits(),
            actual: pairs.width(),
        });
    }
    let r = pairs.rounds();
    let s = pairs.len() as u64;
    let mut cost = CostReport::default();
    let mut current = pairs.plain.clone();
    let mut cycle_keys = Vec::with_capacity(r);

    for step in 0..r {
        let params = base_params.with_rounds(r - step, spec);
        let padded = pad_pairs(&current, &pairs.cipher, y);
        let candidates = oracle.recover(base, &params, &padded, step)?;
        cost.oracle_calls += 1;
        let chosen = candidates
            .into_iter()
            .min()
            .ok_or(Error::ReductionFailed { round: step })?;

        for (i, p) in padded.plain.iter().enumerate() {
            let mut st = p.clone();
            for keys in &chosen.rounds {
                st = elastic_round(base, &params, &st, keys)?;
                cost.elastic_rounds += 1;
            }
            if !padded.matches(i, &st) {
                return Err(Error::ReductionFailed { round: step });
            }
        }

        let first = &chosen.rounds[0];
        let kc = convert_round_key(base, level - 1, &first.cycle, &first.tail, first.offset)?;
        current = current
            .iter()
            .map(|p| cycle_function(base, p, level - 1, &mut KeyCursor::new(&kc)))
            .collect::<Result<Vec<_>>>()?;
        cost.cycle_evaluations += s;
        cycle_keys.push(kc);
    }
    cost.oracle_ops = oracle.op_cost();
    Ok(Reduction { cycle_keys, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{sp16, sp8};

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        (0..n).map(|_| rng.random::<bool>()).collect()
    }

    #[test]
    fn padding() {
        let p = [BitString::from_u64(0xAB, 8)];
        let padded = pad_pairs(&p, &p, 2);
        assert_eq!(
            padded.plain[0],
            BitString::from_binary_str("1010101100").unwrap()
        );
        let same = pad_pairs(&p, &p, 0);
        assert_eq!(same.plain[0], p[0]);
    }

    #[test]
    fn wildcard_tail() {
        let p = [BitString::from_u64(0xAB, 8)];
        let padded = pad_pairs(&p, &p, 2);
        for tail in 0..4 {
            let out = BitString::from_u64((0xAB << 2) | tail, 10);
            assert!(padded.matches(0, &out));
        }
        assert!(!padded.matches(0, &BitString::from_u64(0xAA << 2, 10)));
    }

    #[test]
    fn conversion_examples() {
        let base = sp8();
        let kc = BitString::from_u64(0x5C, 8);
        let zero = BitString::zeros(2);
        assert_eq!(convert_round_key(&base, 0, &kc, &zero, 3).unwrap(), kc);
        let kw = BitString::from_binary_str("11").unwrap();
        let out = convert_round_key(&base, 0, &kc, &kw, 0).unwrap();
        assert_eq!(out.xor(&kc).unwrap().to_u64(), 0b1100_0000);
        let wrapped = convert_round_key(&base, 0, &kc, &kw, 7).unwrap();
        assert_eq!(wrapped.xor(&kc).unwrap().to_u64(), 0b1000_0001);
        assert!(convert_round_key(&base, 0, &kc, &kw, 8).is_err());
    }

    #[test]
    fn converted_key_reproduces_first_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (base, level) in [(sp8(), 1u32), (sp16(), 1), (sp16(), 2)] {
            let spec = *base.spec();
            for y in [1usize, 3, 8] {
                let params = ElasticParams::new(level, y, &spec).unwrap();
                let g = cycle_key_bits(level - 1, &spec);
                for _ in 0..50 {
                    let j = rng.random_range(0..params.left_bits());
                    let keys = RoundKeys {
                        cycle: random_bits(&mut rng, g),
                        tail: random_bits(&mut rng, y),
                        offset: j,
                    };
                    let p = random_bits(&mut rng, params.left_bits());
                    let out = elastic_round(&base, &params, &p.concat(&BitString::zeros(y)), &keys)
                        .unwrap();
                    let kc =
                        convert_round_key(&base, level - 1, &keys.cycle, &keys.tail, j).unwrap();
                    let cyc =
                        cycle_function(&base, &p, level - 1, &mut KeyCursor::new(&kc)).unwrap();
                    assert_eq!(out.slice(0, params.left_bits()).unwrap(), cyc);
                }
            }
        }
    }

    #[test]
    fn oracle_finds_planted_keys() {
        let base = sp8();
        let spec = *base.spec();
        let params = ElasticParams::new(1, 2, &spec)
            .unwrap()
            .with_rounds(1, &spec);
        let planted = RoundKeys {
            cycle: BitString::from_u64(0x3A, 8),
            tail: BitString::from_u64(0b10, 2),
            offset: 0,
        };
        let plain: Vec<BitString> = (0..4u64).map(|v| BitString::from_u64(v * 37, 8)).collect();
        let cipher: Vec<BitString> = plain
            .iter()
            .map(|p| {
                elastic_round(&base, &params, &p.concat(&BitString::zeros(2)), &planted)
                    .unwrap()
                    .slice(0, 8)
                    .unwrap()
            })
            .collect();
        let padded = pad_pairs(&plain, &cipher, 2);
        let mut oracle = BruteForceOracle::new(10);
        let found = oracle.recover(&base, &params, &padded, 0).unwrap();
        assert!(found.contains(&RoundKeySet {
            rounds: alloc::vec![planted]
        }));
        assert_eq!(oracle.op_cost(), 1024 * 4);
    }

    #[test]
    fn oracle_rejects_fabricated_pairs() {
        // Two equal plaintexts with different ciphertexts fit no key.
        let base = sp8();
        let spec = *base.spec();
        let params = ElasticParams::new(1, 2, &spec)
            .unwrap()
            .with_rounds(1, &spec);
        let p = BitString::from_u64(0x11, 8);
        let padded = pad_pairs(
            &[p.clone(), p],
            &[BitString::from_u64(1, 8), BitString::from_u64(2, 8)],
            2,
        );
        let found = BruteForceOracle::new(10)
            .recover(&base, &params, &padded, 0)
            .unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn oracle_space_guard() {
        let base = sp16();
        let spec = *base.spec();
        let params = ElasticParams::new(1, 8, &spec)
            .unwrap()
            .with_rounds(1, &spec);
        let padded = pad_pairs(&[BitString::zeros(16)], &[BitString::zeros(16)], 8);
        let err = BruteForceOracle::new(16).recover(&base, &params, &padded, 0);
        assert_eq!(
            err,
            Err(Error::CostGuard {
                bits: 24,
                limit: 16
            })
        );
    }

    #[test]
    fn single_round_reduction() {
        let base = sp8();
        let keys = [BitString::from_u64(0xC5, 8)];
        let pairs = PlainCipherPairSet::generate(&base, 0, &keys, 4, 21).unwrap();
        let out = reduce(&base, 1, 2, &pairs, &mut BruteForceOracle::new(10)).unwrap();
        assert_eq!(out.cycle_keys.len(), 1);
        assert_eq!(
            verify_cycle_keys(&base, 0, &out.cycle_keys, &pairs).unwrap(),
            4
        );
        assert_eq!(out.cost.oracle_calls, 1);
        assert_eq!(out.cost.cycle_evaluations, 4);
        assert_eq!(out.cost.elastic_rounds, 4);
    }

    #[test]
    fn zero_expansion_multi_round() {
        let base = sp8();
        let keys = [BitString::from_u64(0x17, 8), BitString::from_u64(0xE2, 8)];
        let pairs = PlainCipherPairSet::generate(&base, 0, &keys, 4, 22).unwrap();
        let out = reduce(&base, 1, 0, &pairs, &mut BruteForceOracle::new(8)).unwrap();
        assert_eq!(
            verify_cycle_keys(&base, 0, &out.cycle_keys, &pairs).unwrap(),
            4
        );
        assert_eq!(out.cost.oracle_calls, 2);
        assert!(out.cost.cycle_evaluations <= 8);
        assert!(out.cost.elastic_rounds <= 4 * 2 * 3 / 2);
    }

    #[test]
    fn empty_candidates_fail() {
        let base = sp8();
        let p = BitString::from_u64(3, 8);
        let pairs = PlainCipherPairSet::new(
            alloc::vec![p.clone(), p],
            alloc::vec![BitString::from_u64(1, 8), BitString::from_u64(2, 8)],
            1,
        )
        .unwrap();
        let err = reduce(&base, 1, 2, &pairs, &mut BruteForceOracle::new(10));
        assert_eq!(err, Err(Error::ReductionFailed { round: 0 }));
    }

    #[test]
    fn pair_set_validation() {
        assert!(PlainCipherPairSet::new(alloc::vec![], alloc::vec![], 1).is_err());
        let a = BitString::zeros(8);
        let b = BitString::zeros(9);
        assert!(PlainCipherPairSet::new(alloc::vec![a.clone()], alloc::vec![b], 1).is_err());
        assert!(PlainCipherPairSet::new(alloc::vec![a.clone()], alloc::vec![a], 0).is_err());
    }
}
