//! The level-n elastic cipher.
//!
//! A message of `2^(n-1) L + y` bits is processed as a left part of
//! `2^(n-1) L` bits, which goes through the level `n-1` cycle function each
//! round, and a `y`-bit tail that is key-mixed and swapped with a sliding
//! window of the cycle output. The whole round sequence is wrapped in
//! whitening and a key-dependent rotation on both ends.
//!
//! Key material is consumed strictly sequentially; see
//! [`KeyLayout`](crate::keystream::KeyLayout) for the static map of which
//! bits feed which step.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitString;
use crate::cipher::{BaseCipher, CipherSpec, RoundFunction};
use crate::error::{Error, Result};
use crate::keystream::{ExpandedKey, MasterKey};

/// Derived parameters of E_n for one message length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElasticParams {
    level: u32,
    expansion: usize,
    rounds: usize,
    left_bits: usize,
    perm_key_bits: usize,
    key_bits: usize,
}

impl ElasticParams {
    /// Pick the level for a message of `plain_len` bits.
    ///
    /// Lengths up to and including the base block length are rejected.
    pub fn for_length(plain_len: usize, spec: &CipherSpec) -> Result<Self> {
        let l = spec.block_bits();
        if plain_len <= l {
            return Err(Error::UnsupportedLength {
                len: plain_len,
                block: l,
            });
        }
        let mut level = 1u32;
        while (l << level) < plain_len {
            level += 1;
        }
        Self::new(level, plain_len - (l << (level - 1)), spec)
    }

    /// Parameters for an explicit level and expansion `y`, with the standard
    /// round count `c0 + ceil(c0 * y / 2^(n-1) L)`.
    pub fn new(level: u32, expansion: usize, spec: &CipherSpec) -> Result<Self> {
        if level == 0 {
            return Err(Error::BadArgument("elastic level must be at least 1"));
        }
        if level > 24 {
            return Err(Error::BadArgument("elastic level too large"));
        }
        let left_bits = spec.block_bits() << (level - 1);
        if expansion > left_bits {
            return Err(Error::BadArgument("expansion exceeds the left part"));
        }
        let c0 = spec.cycles();
        let rounds = c0 + (c0 * expansion).div_ceil(left_bits);
        Ok(Self::assemble(level, expansion, rounds, left_bits, spec))
    }

    /// Same level and expansion with a different number of rounds.
    ///
    /// Used for reduced-round analysis; the key length follows the round count.
    pub fn with_rounds(&self, rounds: usize, spec: &CipherSpec) -> Self {
        Self::assemble(self.level, self.expansion, rounds, self.left_bits, spec)
    }

    fn assemble(
        level: u32,
        expansion: usize,
        rounds: usize,
        left_bits: usize,
        spec: &CipherSpec,
    ) -> Self {
        let block = left_bits + expansion;
        let perm_key_bits = perm_key_bits(block);
        let mut p = Self {
            level,
            expansion,
            rounds,
            left_bits,
            perm_key_bits,
            key_bits: 0,
        };
        p.key_bits = key_length(&p, spec);
        p
    }

    /// Level n.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Expansion y: bits beyond the left part.
    pub fn expansion(&self) -> usize {
        self.expansion
    }

    /// Rounds r_n of E_n.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Width of the part fed to the cycle function, `2^(n-1) L`.
    pub fn left_bits(&self) -> usize {
        self.left_bits
    }

    /// Message (and ciphertext) length b.
    pub fn block_bits(&self) -> usize {
        self.left_bits + self.expansion
    }

    /// Bits of one key-dependent permutation key.
    pub fn perm_key_bits(&self) -> usize {
        self.perm_key_bits
    }

    /// Total expanded-key length l(K).
    pub fn key_bits(&self) -> usize {
        self.key_bits
    }

    /// Key bits consumed by one elastic round: cycle key plus tail key.
    pub fn round_key_bits(&self, spec: &CipherSpec) -> usize {
        cycle_key_bits(self.level - 1, spec) + self.expansion
    }

    /// Offset of round `i`'s key region inside the expanded key.
    pub fn round_key_offset(&self, i: usize, spec: &CipherSpec) -> usize {
        self.block_bits() + self.perm_key_bits + i * self.round_key_bits(spec)
    }
}

impl fmt::Display for ElasticParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} y={} r={} lK={}",
            self.level, self.expansion, self.rounds, self.key_bits
        )
    }
}

/// `ceil(log2(block))`, the width of one rotation key.
pub fn perm_key_bits(block: usize) -> usize {
    if block <= 1 {
        0
    } else {
        (usize::BITS - (block - 1).leading_zeros()) as usize
    }
}

/// Key bits of the level-`level` cycle function, by its recursion:
/// `g(0) = x * lkr0`, `g(m) = 2 (g(m-1) + 2^(m-1) L)`.
pub fn cycle_key_bits(level: u32, spec: &CipherSpec) -> usize {
    if level == 0 {
        spec.rounds_per_cycle() * spec.round_key_bits()
    } else {
        2 * (cycle_key_bits(level - 1, spec) + (spec.block_bits() << (level - 1)))
    }
}

/// Closed form of [`cycle_key_bits`]: `2^m g(0) + m 2^m L`.
pub fn cycle_key_bits_closed(level: u32, spec: &CipherSpec) -> usize {
    let g0 = spec.rounds_per_cycle() * spec.round_key_bits();
    (g0 << level) + ((level as usize * spec.block_bits()) << level)
}

/// Total key length:
/// `{y + 2^(n-1) [L (n-1) + lkr0 x]} r_n + 2^n L + 2y + K_perm`
/// where `K_perm` covers both permutation keys.
pub fn key_length(params: &ElasticParams, spec: &CipherSpec) -> usize {
    let n = params.level as usize;
    let y = params.expansion;
    let l = spec.block_bits();
    let half = 1usize << (n - 1);
    let per_round = y + half * (l * (n - 1) + spec.round_key_bits() * spec.rounds_per_cycle());
    per_round * params.rounds + (l << n) + 2 * y + 2 * params.perm_key_bits
}

/// Number of level-`m` rounds executed by one E_n encryption.
///
/// For `m > 0` this is `r_n 2^(n-m)`; for `m = 0` it counts base-cipher
/// rounds, `r_n 2^(n-1) x`.
pub fn rounds_at_level(params: &ElasticParams, m: u32, spec: &CipherSpec) -> Result<u64> {
    let n = params.level;
    if m > n {
        return Err(Error::LevelOutOfRange {
            requested: m,
            max: n,
        });
    }
    let rn = params.rounds as u64;
    Ok(if m == 0 {
        (rn << (n - 1)) * spec.rounds_per_cycle() as u64
    } else {
        rn << (n - m)
    })
}

/// Sequential reader over expanded-key material.
///
/// Forward reads advance from the front; backward reads (used by the
/// inverse functions) retreat from the back.
#[derive(Debug, Clone)]
pub struct KeyCursor<'a> {
    material: &'a BitString,
    front: usize,
    back: usize,
    log: Option<Vec<(usize, usize)>>,
}

impl<'a> KeyCursor<'a> {
    pub fn new(material: &'a BitString) -> Self {
        Self::range(material, 0, material.len())
    }

    /// Restrict the cursor to `start..end`.
    pub fn range(material: &'a BitString, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= material.len());
        Self {
            material,
            front: start,
            back: end,
            log: None,
        }
    }

    /// Record every non-empty read as `(offset, length)`.
    pub fn recording(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn remaining(&self) -> usize {
        self.back - self.front
    }

    pub fn position(&self) -> usize {
        self.front
    }

    pub fn reads(&self) -> &[(usize, usize)] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn take(&mut self, n: usize) -> Result<BitString> {
        self.check(n)?;
        let out = self.material.slice(self.front, self.front + n)?;
        self.note(self.front, n);
        self.front += n;
        Ok(out)
    }

    pub fn take_back(&mut self, n: usize) -> Result<BitString> {
        self.check(n)?;
        self.back -= n;
        self.note(self.back, n);
        self.material.slice(self.back, self.back + n)
    }

    fn take_u64(&mut self, n: usize) -> Result<u64> {
        Ok(self.take(n)?.to_u64())
    }

    fn take_back_u64(&mut self, n: usize) -> Result<u64> {
        Ok(self.take_back(n)?.to_u64())
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.remaining() {
            Err(Error::KeyUnderrun {
                needed: n,
                remaining: self.remaining(),
            })
        } else {
            Ok(())
        }
    }

    fn note(&mut self, at: usize, n: usize) {
        if n > 0 {
            if let Some(log) = self.log.as_mut() {
                log.push((at, n));
            }
        }
    }
}

/// Per-call execution counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Rounds executed at each level, index 0 being base-cipher rounds.
    pub rounds: Vec<u64>,
    /// Total key bits read.
    pub key_bits: usize,
    /// Every key read as `(offset, length)`, in execution order.
    pub key_reads: Vec<(usize, usize)>,
}

impl Trace {
    pub fn rounds_at(&self, level: u32) -> u64 {
        self.rounds.get(level as usize).copied().unwrap_or(0)
    }

    fn bump(&mut self, level: u32) {
        let i = level as usize;
        if self.rounds.len() <= i {
            self.rounds.resize(i + 1, 0);
        }
        self.rounds[i] += 1;
    }
}

fn check_cycle_len(state: &BitString, level: u32, spec: &CipherSpec) -> Result<()> {
    let expected = spec.block_bits() << level;
    if state.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: state.len(),
        });
    }
    Ok(())
}

/// The level-`level` cycle function on `2^level L` bits.
pub fn cycle_function<R: RoundFunction>(
    base: &BaseCipher<R>,
    state: &BitString,
    level: u32,
    keys: &mut KeyCursor<'_>,
) -> Result<BitString> {
    cycle_function_traced(base, state, level, keys, &mut Trace::default())
}

pub fn cycle_function_traced<R: RoundFunction>(
    base: &BaseCipher<R>,
    state: &BitString,
    level: u32,
    keys: &mut KeyCursor<'_>,
    trace: &mut Trace,
) -> Result<BitString> {
    let spec = base.spec();
    check_cycle_len(state, level, spec)?;
    cycle_forward(base, state, level, keys, trace)
}

fn cycle_forward<R: RoundFunction>(
    base: &BaseCipher<R>,
    state: &BitString,
    level: u32,
    keys: &mut KeyCursor<'_>,
    trace: &mut Trace,
) -> Result<BitString> {
    let spec = base.spec();
    if level == 0 {
        let mut s = state.to_u64();
        for _ in 0..spec.rounds_per_cycle() {
            s = base
                .round()
                .forward(s, keys.take_u64(spec.round_key_bits())?);
            trace.bump(0);
        }
        return Ok(BitString::from_u64(s, spec.block_bits()));
    }
    let half = state.len() / 2;
    let mut a = state.slice(0, half)?;
    let mut b = state.slice(half, state.len())?;
    for _ in 0..2 {
        a = cycle_forward(base, &a, level - 1, keys, trace)?;
        b.xor_assign(&keys.take(half)?)?;
        let t = a.clone();
        a.xor_assign(&b)?;
        b = t;
        trace.bump(level);
    }
    Ok(a.concat(&b))
}

/// Inverse of [`cycle_function`]; `keys` must end exactly where the forward
/// call's key region ends, and is consumed from the back.
pub fn cycle_function_inv<R: RoundFunction>(
    base: &BaseCipher<R>,
    state: &BitString,
    level: u32,
    keys: &mut KeyCursor<'_>,
) -> Result<BitString> {
    check_cycle_len(state, level, base.spec())?;
    cycle_inverse(base, state, level, keys)
}

fn cycle_inverse<R: RoundFunction>(
    base: &BaseCipher<R>,
    state: &BitString,
    level: u32,
    keys: &mut KeyCursor<'_>,
) -> Result<BitString> {
    let spec = base.spec();
    if level == 0 {
        let mut s = state.to_u64();
        for _ in 0..spec.rounds_per_cycle() {
            s = base
                .round()
                .inverse(s, keys.take_back_u64(spec.round_key_bits())?);
        }
        return Ok(BitString::from_u64(s, spec.block_bits()));
    }
    let half = state.len() / 2;
    let mut a = state.slice(0, half)?;
    let mut b = state.slice(half, state.len())?;
    for _ in 0..2 {
        // a = f(a') ^ b' ^ k, b = f(a')
        let mixed = a.xor(&b)?;
        let prev_b = mixed.xor(&keys.take_back(half)?)?;
        a = cycle_inverse(base, &b, level - 1, keys)?;
        b = prev_b;
    }
    Ok(a.concat(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Rotation by the key read as an integer, modulo the block length.
///
/// Stands in for the key-dependent permutation; any keyed bijection with
/// the same signature can replace it.
pub fn key_dependent_permutation(
    state: &BitString,
    key: &BitString,
    direction: Direction,
) -> BitString {
    if state.is_empty() {
        return state.clone();
    }
    let amount = (key.to_u64() % state.len() as u64) as i64;
    match direction {
        Direction::Forward => state.rotate(amount),
        Direction::Inverse => state.rotate(-amount),
    }
}

/// One round of E_n applied in place: cycle on the left part, tail key
/// addition, then the swap/exor of the tail with the window at `offset`.
fn round_forward<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    state: &mut BitString,
    offset: usize,
    keys: &mut KeyCursor<'_>,
    trace: &mut Trace,
) -> Result<()> {
    let left = params.left_bits;
    let y = params.expansion;
    let cycled = cycle_forward(base, &state.slice(0, left)?, params.level - 1, keys, trace)?;
    state.write(0, &cycled)?;
    let mut tail = state.slice(left, left + y)?;
    tail.xor_assign(&keys.take(y)?)?;
    let window = state.slice_wrapping(offset, y, left)?;
    state.xor_wrapping(offset, &tail, left)?;
    state.write(left, &window)?;
    trace.bump(params.level);
    Ok(())
}

fn round_inverse<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    state: &mut BitString,
    offset: usize,
    keys: &mut KeyCursor<'_>,
) -> Result<()> {
    let left = params.left_bits;
    let y = params.expansion;
    let window = state.slice(left, left + y)?;
    let keyed_tail = state.slice_wrapping(offset, y, left)?.xor(&window)?;
    state.write_wrapping(offset, &window, left)?;
    let tail = keyed_tail.xor(&keys.take_back(y)?)?;
    state.write(left, &tail)?;
    let uncycled = cycle_inverse(base, &state.slice(0, left)?, params.level - 1, keys)?;
    state.write(0, &uncycled)
}

/// Keys for one round of a round-reduced E_n, used by the reduction harness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoundKeys {
    /// Level `n-1` cycle key, `g(n-1)` bits.
    pub cycle: BitString,
    /// Tail key, `y` bits.
    pub tail: BitString,
    /// Swap window offset.
    pub offset: usize,
}

/// A single E_n round with explicit keys and no whitening or permutation.
pub fn elastic_round<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    state: &BitString,
    keys: &RoundKeys,
) -> Result<BitString> {
    check_block(state, params)?;
    let material = keys.cycle.concat(&keys.tail);
    if material.len() != params.round_key_bits(base.spec()) {
        return Err(Error::KeyLengthMismatch {
            expected: params.round_key_bits(base.spec()),
            actual: material.len(),
        });
    }
    if keys.offset >= params.left_bits {
        return Err(Error::BadArgument("swap offset beyond the left part"));
    }
    let mut out = state.clone();
    round_forward(
        base,
        params,
        &mut out,
        keys.offset,
        &mut KeyCursor::new(&material),
        &mut Trace::default(),
    )?;
    Ok(out)
}

pub fn elastic_round_inv<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    state: &BitString,
    keys: &RoundKeys,
) -> Result<BitString> {
    check_block(state, params)?;
    let material = keys.cycle.concat(&keys.tail);
    if material.len() != params.round_key_bits(base.spec()) {
        return Err(Error::KeyLengthMismatch {
            expected: params.round_key_bits(base.spec()),
            actual: material.len(),
        });
    }
    let mut out = state.clone();
    round_inverse(
        base,
        params,
        &mut out,
        keys.offset,
        &mut KeyCursor::new(&material),
    )?;
    Ok(out)
}

fn check_block(state: &BitString, params: &ElasticParams) -> Result<()> {
    if state.len() != params.block_bits() {
        return Err(Error::LengthMismatch {
            expected: params.block_bits(),
            actual: state.len(),
        });
    }
    Ok(())
}

fn check_key(key: &ExpandedKey, params: &ElasticParams) -> Result<()> {
    if key.material().len() != params.key_bits() {
        return Err(Error::KeyLengthMismatch {
            expected: params.key_bits(),
            actual: key.material().len(),
        });
    }
    Ok(())
}

/// Encrypt one message of exactly `params.block_bits()` bits.
pub fn encrypt<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    key: &ExpandedKey,
    plain: &BitString,
) -> Result<BitString> {
    encrypt_with(base, params, key, plain, KeyCursor::new(key.material())).map(|(c, _)| c)
}

/// [`encrypt`] plus the execution counters and the exact key read sequence.
pub fn encrypt_traced<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    key: &ExpandedKey,
    plain: &BitString,
) -> Result<(BitString, Trace)> {
    encrypt_with(
        base,
        params,
        key,
        plain,
        KeyCursor::new(key.material()).recording(),
    )
}

fn encrypt_with<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    key: &ExpandedKey,
    plain: &BitString,
    mut keys: KeyCursor<'_>,
) -> Result<(BitString, Trace)> {
    check_block(plain, params)?;
    check_key(key, params)?;
    let b = params.block_bits();
    let mut trace = Trace {
        rounds: vec![0; params.level as usize + 1],
        ..Trace::default()
    };

    let mut state = plain.xor(&keys.take(b)?)?;
    state = key_dependent_permutation(
        &state,
        &keys.take(params.perm_key_bits)?,
        Direction::Forward,
    );
    for i in 0..params.rounds {
        let offset = i % params.left_bits;
        round_forward(base, params, &mut state, offset, &mut keys, &mut trace)?;
    }
    state = key_dependent_permutation(
        &state,
        &keys.take(params.perm_key_bits)?,
        Direction::Forward,
    );
    state.xor_assign(&keys.take(b)?)?;

    trace.key_bits = keys.position();
    trace.key_reads = keys.reads().to_vec();
    debug_assert_eq!(keys.remaining(), 0);
    Ok((state, trace))
}

/// Inverse of [`encrypt`]. Each round's key region is addressed directly by
/// its offset in the expanded key and read backwards.
pub fn decrypt<R: RoundFunction>(
    base: &BaseCipher<R>,
    params: &ElasticParams,
    key: &ExpandedKey,
    cipher: &BitString,
) -> Result<BitString> {
    check_block(cipher, params)?;
    check_key(key, params)?;
    let spec = base.spec();
    let material = key.material();
    let b = params.block_bits();
    let lp = params.perm_key_bits;
    let total = params.key_bits;

    let mut state = cipher.xor(&material.slice(total - b, total)?)?;
    state = key_dependent_permutation(
        &state,
        &material.slice(total - b - lp, total - b)?,
        Direction::Inverse,
    );
    let per_round = params.round_key_bits(spec);
    for i in (0..params.rounds).rev() {
        let start = params.round_key_offset(i, spec);
        let mut keys = KeyCursor::range(material, start, start + per_round);
        round_inverse(base, params, &mut state, i % params.left_bits, &mut keys)?;
    }
    state = key_dependent_permutation(&state, &material.slice(b, b + lp)?, Direction::Inverse);
    state.xor_assign(&material.slice(0, b)?)?;
    Ok(state)
}

/// A base cipher bound to one message length and one expanded key.
#[derive(Debug, Clone)]
pub struct ElasticCipher<R> {
    base: BaseCipher<R>,
    params: ElasticParams,
    key: ExpandedKey,
}

impl<R: RoundFunction> ElasticCipher<R> {
    pub fn new(base: BaseCipher<R>, params: ElasticParams, key: ExpandedKey) -> Result<Self> {
        check_key(&key, &params)?;
        Ok(Self { base, params, key })
    }

    /// Derive parameters for `len_bits` and expand `master` to the required length.
    pub fn from_master(base: BaseCipher<R>, len_bits: usize, master: &MasterKey) -> Result<Self> {
        let params = ElasticParams::for_length(len_bits, base.spec())?;
        let key = ExpandedKey::derive(master, &params, base.spec());
        Ok(Self { base, params, key })
    }

    pub fn params(&self) -> &ElasticParams {
        &self.params
    }

    pub fn base(&self) -> &BaseCipher<R> {
        &self.base
    }

    pub fn key(&self) -> &ExpandedKey {
        &self.key
    }

    pub fn encrypt(&self, plain: &BitString) -> Result<BitString> {
        encrypt(&self.base, &self.params, &self.key, plain)
    }

    pub fn encrypt_traced(&self, plain: &BitString) -> Result<(BitString, Trace)> {
        encrypt_traced(&self.base, &self.params, &self.key, plain)
    }

    pub fn decrypt(&self, cipher: &BitString) -> Result<BitString> {
        decrypt(&self.base, &self.params, &self.key, cipher)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{sp16, sp8, SP16_ROUND};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        (0..n).map(|_| rng.random::<bool>()).collect()
    }

    #[test]
    fn params_examples() {
        let spec = *sp16().spec();
        let p = ElasticParams::for_length(24, &spec).unwrap();
        assert_eq!((p.level(), p.expansion(), p.rounds()), (1, 8, 6));
        let p = ElasticParams::for_length(32, &spec).unwrap();
        assert_eq!((p.level(), p.expansion(), p.rounds()), (1, 16, 8));
        let p = ElasticParams::for_length(33, &spec).unwrap();
        assert_eq!((p.level(), p.expansion(), p.rounds()), (2, 1, 5));
        assert_eq!(
            ElasticParams::for_length(16, &spec),
            Err(Error::UnsupportedLength { len: 16, block: 16 })
        );
    }

    #[test]
    fn key_length_examples() {
        let spec = *sp16().spec();
        let p = ElasticParams::for_length(24, &spec).unwrap();
        assert_eq!(p.perm_key_bits(), 5);
        assert_eq!(p.key_bits(), 202);
        // y = 0 at level 1: 16-bit block, 4-bit rotation keys.
        let p0 = ElasticParams::new(1, 0, &spec).unwrap();
        assert_eq!(p0.rounds(), 4);
        assert_eq!(p0.perm_key_bits(), 4);
        assert_eq!(p0.key_bits(), 16 * 4 + 32 + 8);
    }

    #[test]
    fn cycle_budget_closed_form() {
        for spec in [
            *sp16().spec(),
            *sp8().spec(),
            CipherSpec::new(12, 3, 2, 7).unwrap(),
        ] {
            for m in 0..=4 {
                assert_eq!(cycle_key_bits(m, &spec), cycle_key_bits_closed(m, &spec));
            }
        }
    }

    #[test]
    fn rounds_at_level_examples() {
        let spec = *sp16().spec();
        let p = ElasticParams::for_length(40, &spec).unwrap();
        assert_eq!((p.level(), p.rounds()), (2, 5));
        assert_eq!(rounds_at_level(&p, 1, &spec).unwrap(), 10);
        assert_eq!(rounds_at_level(&p, 0, &spec).unwrap(), 10);
        assert_eq!(rounds_at_level(&p, 2, &spec).unwrap(), 5);
        assert!(rounds_at_level(&p, 3, &spec).is_err());
    }

    #[test]
    fn level_zero_cycle_is_one_round() {
        let base = sp16();
        let s = BitString::from_u64(0x1234, 16);
        let k = BitString::from_u64(0xABCD, 16);
        let out = cycle_function(&base, &s, 0, &mut KeyCursor::new(&k)).unwrap();
        assert_eq!(out.to_u64(), SP16_ROUND.forward(0x1234, 0xABCD));
    }

    #[test]
    fn level_one_cycle_hand_trace() {
        // With all-zero keys, f is the unkeyed round; first iteration gives
        // (f(A) ^ B, f(A)), the second (f(f(A)^B) ^ f(A), f(f(A)^B)).
        let base = sp16();
        let f = |v: u64| SP16_ROUND.forward(v, 0);
        let (a, b) = (0x0123u64, 0xBEEFu64);
        let zeros = BitString::zeros(cycle_key_bits(1, base.spec()));
        let state = BitString::from_u64((a << 16) | b, 32);
        let out = cycle_function(&base, &state, 1, &mut KeyCursor::new(&zeros))
            .unwrap()
            .to_u64();
        let (a1, b1) = (f(a) ^ b, f(a));
        let (a2, b2) = (f(a1) ^ b1, f(a1));
        assert_eq!(out, (a2 << 16) | b2);
    }

    #[test]
    fn cycle_consumes_budget() {
        let base = sp16();
        for m in 0..=2u32 {
            let g = cycle_key_bits(m, base.spec());
            let material = BitString::ones(g + 7);
            let mut cur = KeyCursor::new(&material);
            let mut trace = Trace::default();
            cycle_function_traced(&base, &BitString::zeros(16 << m), m, &mut cur, &mut trace)
                .unwrap();
            assert_eq!(cur.position(), g);
            assert_eq!(g, cycle_key_bits_closed(m, base.spec()));
        }
    }

    #[test]
    fn cycle_key_underrun() {
        let base = sp16();
        let material = BitString::zeros(10);
        let err = cycle_function(
            &base,
            &BitString::zeros(16),
            0,
            &mut KeyCursor::new(&material),
        );
        assert_eq!(
            err,
            Err(Error::KeyUnderrun {
                needed: 16,
                remaining: 10
            })
        );
    }

    #[test]
    fn cycle_inverse_level0_sp8_exhaustive() {
        let base = sp8();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            let key = random_bits(&mut rng, 8);
            for s in 0..256u64 {
                let st = BitString::from_u64(s, 8);
                let c = cycle_function(&base, &st, 0, &mut KeyCursor::new(&key)).unwrap();
                let back = cycle_function_inv(&base, &c, 0, &mut KeyCursor::new(&key)).unwrap();
                assert_eq!(back, st);
            }
        }
    }

    #[test]
    fn cycle_inverse_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (base, level, cases) in [(sp8(), 1u32, 10_000), (sp16(), 2, 1_000)] {
            let g = cycle_key_bits(level, base.spec());
            for _ in 0..cases {
                let key = random_bits(&mut rng, g);
                let st = random_bits(&mut rng, base.spec().block_bits() << level);
                let c = cycle_function(&base, &st, level, &mut KeyCursor::new(&key)).unwrap();
                let back = cycle_function_inv(&base, &c, level, &mut KeyCursor::new(&key)).unwrap();
                assert_eq!(back, st);
            }
        }
    }

    #[test]
    fn permutation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_bits(&mut rng, 24);
        let zero = BitString::zeros(5);
        assert_eq!(key_dependent_permutation(&s, &zero, Direction::Forward), s);
        let b = BitString::from_u64(24, 5);
        assert_eq!(key_dependent_permutation(&s, &b, Direction::Forward), s);
        for _ in 0..100 {
            let k = random_bits(&mut rng, 5);
            let f = key_dependent_permutation(&s, &k, Direction::Forward);
            assert_eq!(key_dependent_permutation(&f, &k, Direction::Inverse), s);
        }
    }

    #[test]
    fn round_trip_and_length_preservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for len in [17usize, 24, 31, 32, 33, 47, 64, 65, 100, 128] {
            let key = MasterKey::new(&rng.random::<[u8; 8]>()).unwrap();
            let c = ElasticCipher::from_master(sp16(), len, &key).unwrap();
            let p = random_bits(&mut rng, len);
            let ct = c.encrypt(&p).unwrap();
            assert_eq!(ct.len(), len);
            assert_eq!(c.decrypt(&ct).unwrap(), p);
        }
    }

    #[test]
    fn zero_expansion_skips_swaps() {
        // y = 0: whiten, rotate, c0 plain cycles, rotate, whiten.
        let base = sp16();
        let spec = *base.spec();
        let params = ElasticParams::new(1, 0, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let material = random_bits(&mut rng, params.key_bits());
        let key = ExpandedKey::from_raw(material.clone(), &params, &spec).unwrap();
        let p = random_bits(&mut rng, 16);
        let ct = encrypt(&base, &params, &key, &p).unwrap();

        let mut k = KeyCursor::new(&material);
        let mut s = p.xor(&k.take(16).unwrap()).unwrap();
        s = key_dependent_permutation(&s, &k.take(4).unwrap(), Direction::Forward);
        for _ in 0..4 {
            s = cycle_function(&base, &s, 0, &mut k).unwrap();
        }
        s = key_dependent_permutation(&s, &k.take(4).unwrap(), Direction::Forward);
        s.xor_assign(&k.take(16).unwrap()).unwrap();
        assert_eq!(ct, s);
    }

    #[test]
    fn encrypt_rejects_bad_lengths() {
        let spec = *sp16().spec();
        let params = ElasticParams::for_length(24, &spec).unwrap();
        let key = ExpandedKey::derive(&MasterKey::new(&[1]).unwrap(), &params, &spec);
        assert!(encrypt(&sp16(), &params, &key, &BitString::zeros(23)).is_err());
        let other = ElasticParams::for_length(25, &spec).unwrap();
        let key25 = ExpandedKey::derive(&MasterKey::new(&[1]).unwrap(), &other, &spec);
        assert!(matches!(
            encrypt(&sp16(), &params, &key25, &BitString::zeros(24)),
            Err(Error::KeyLengthMismatch { .. })
        ));
    }

    #[test]
    fn corrupted_ciphertext_does_not_decrypt_to_original() {
        let key = MasterKey::new(&[9, 9, 9]).unwrap();
        let c = ElasticCipher::from_master(sp16(), 40, &key).unwrap();
        let p = BitString::zeros(40);
        let ct = c.encrypt(&p).unwrap();
        for i in 0..40 {
            let mut bad = ct.clone();
            bad.flip(i);
            assert_ne!(c.decrypt(&bad).unwrap(), p);
        }
    }

    #[test]
    fn single_round_inverse() {
        let base = sp16();
        let spec = *base.spec();
        let params = ElasticParams::for_length(70, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for offset in [0usize, 30, 63] {
            let keys = RoundKeys {
                cycle: random_bits(&mut rng, cycle_key_bits(params.level() - 1, &spec)),
                tail: random_bits(&mut rng, params.expansion()),
                offset,
            };
            let s = random_bits(&mut rng, 70);
            let out = elastic_round(&base, &params, &s, &keys).unwrap();
            assert_eq!(elastic_round_inv(&base, &params, &out, &keys).unwrap(), s);
        }
    }
}
