//! Fixed-input-length base ciphers.
//!
//! A base cipher is described by a [`CipherSpec`] and a [`RoundFunction`]
//! whose last operation is a XOR with the round key. Two toy
//! substitution-permutation instances are provided: [`sp16`] and [`sp8`].

use core::fmt;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Parameters of a base cipher E0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CipherSpec {
    block_bits: usize,
    rounds_per_cycle: usize,
    cycles: usize,
    round_key_bits: usize,
}

impl CipherSpec {
    pub fn new(
        block_bits: usize,
        rounds_per_cycle: usize,
        cycles: usize,
        round_key_bits: usize,
    ) -> Result<Self> {
        if block_bits == 0 || rounds_per_cycle == 0 || cycles == 0 || round_key_bits == 0 {
            return Err(Error::InvalidSpec(
                "all cipher parameters must be at least 1",
            ));
        }
        if block_bits > 64 || round_key_bits > 64 {
            return Err(Error::InvalidSpec(
                "block and round key must fit in 64 bits",
            ));
        }
        Ok(Self {
            block_bits,
            rounds_per_cycle,
            cycles,
            round_key_bits,
        })
    }

    /// Block length L.
    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    /// Rounds per cycle x.
    pub fn rounds_per_cycle(&self) -> usize {
        self.rounds_per_cycle
    }

    /// Number of cycles c0.
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// Total rounds r0 = c0 * x.
    pub fn rounds(&self) -> usize {
        self.cycles * self.rounds_per_cycle
    }

    /// Key bits per round.
    pub fn round_key_bits(&self) -> usize {
        self.round_key_bits
    }
}

impl fmt::Display for CipherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "block bits (L)        {}", self.block_bits)?;
        writeln!(f, "rounds per cycle (x)  {}", self.rounds_per_cycle)?;
        writeln!(f, "cycles (c0)           {}", self.cycles)?;
        writeln!(f, "rounds (r0)           {}", self.rounds())?;
        write!(f, "round key bits        {}", self.round_key_bits)
    }
}

/// One keyed round of a base cipher on blocks of at most 64 bits.
///
/// Values are right-aligned integers whose most significant used bit is
/// bit 0 of the corresponding [`BitString`].
pub trait RoundFunction {
    fn block_bits(&self) -> usize;
    fn key_bits(&self) -> usize;
    fn forward(&self, state: u64, key: u64) -> u64;
    fn inverse(&self, state: u64, key: u64) -> u64;

    fn forward_bits(&self, state: &BitString, key: &BitString) -> Result<BitString> {
        self.check(state, key)?;
        Ok(BitString::from_u64(
            self.forward(state.to_u64(), key.to_u64()),
            self.block_bits(),
        ))
    }

    fn inverse_bits(&self, state: &BitString, key: &BitString) -> Result<BitString> {
        self.check(state, key)?;
        Ok(BitString::from_u64(
            self.inverse(state.to_u64(), key.to_u64()),
            self.block_bits(),
        ))
    }

    #[doc(hidden)]
    fn check(&self, state: &BitString, key: &BitString) -> Result<()> {
        if state.len() != self.block_bits() {
            return Err(Error::LengthMismatch {
                expected: self.block_bits(),
                actual: state.len(),
            });
        }
        if key.len() != self.key_bits() {
            return Err(Error::LengthMismatch {
                expected: self.key_bits(),
                actual: key.len(),
            });
        }
        Ok(())
    }
}

impl<R: RoundFunction + ?Sized> RoundFunction for &R {
    fn block_bits(&self) -> usize {
        (**self).block_bits()
    }
    fn key_bits(&self) -> usize {
        (**self).key_bits()
    }
    fn forward(&self, state: u64, key: u64) -> u64 {
        (**self).forward(state, key)
    }
    fn inverse(&self, state: u64, key: u64) -> u64 {
        (**self).inverse(state, key)
    }
}

/// A round function paired with the cipher parameters it is used under.
#[derive(Debug, Clone)]
pub struct BaseCipher<R> {
    round: R,
    spec: CipherSpec,
}

impl<R: RoundFunction> BaseCipher<R> {
    pub fn new(round: R, spec: CipherSpec) -> Result<Self> {
        if round.block_bits() != spec.block_bits() {
            return Err(Error::InvalidSpec("round block length differs from spec"));
        }
        if round.key_bits() != spec.round_key_bits() {
            return Err(Error::InvalidSpec("round key length differs from spec"));
        }
        Ok(Self { round, spec })
    }

    pub fn round(&self) -> &R {
        &self.round
    }

    pub fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    /// Same round function under different cycle parameters.
    pub fn with_spec(&self, spec: CipherSpec) -> Result<BaseCipher<R>>
    where
        R: Clone,
    {
        BaseCipher::new(self.round.clone(), spec)
    }

    /// All r0 rounds, round keys concatenated in order.
    pub fn encrypt_block(&self, block: u64, keys: &[u64]) -> u64 {
        keys.iter().fold(block, |s, &k| self.round.forward(s, k))
    }

    pub fn decrypt_block(&self, block: u64, keys: &[u64]) -> u64 {
        keys.iter()
            .rev()
            .fold(block, |s, &k| self.round.inverse(s, k))
    }
}

/// The PRESENT 4-bit S-box.
pub const SBOX: [u8; 16] = [
    0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2,
];

const fn invert_sbox(s: [u8; 16]) -> [u8; 16] {
    let mut inv = [0u8; 16];
    let mut i = 0;
    while i < 16 {
        inv[s[i] as usize] = i as u8;
        i += 1;
    }
    inv
}

pub const SBOX_INV: [u8; 16] = invert_sbox(SBOX);

/// S-box layer, bit permutation, key XOR.
///
/// Bit `i` of the substituted state moves to position `(multiplier * i) mod width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpnRound {
    width: usize,
    multiplier: usize,
}

impl SpnRound {
    /// `multiplier` must be coprime with `width` for the permutation to be a bijection.
    pub const fn new(width: usize, multiplier: usize) -> Self {
        assert!(width.is_multiple_of(4) && width <= 64);
        Self { width, multiplier }
    }

    fn substitute(&self, state: u64, table: &[u8; 16]) -> u64 {
        (0..self.width / 4).fold(0, |acc, q| {
            let shift = 4 * q;
            acc | (u64::from(table[((state >> shift) & 0xF) as usize]) << shift)
        })
    }

    fn permute(&self, state: u64) -> u64 {
        let w = self.width;
        (0..w).fold(0, |acc, i| {
            let bit = (state >> (w - 1 - i)) & 1;
            acc | (bit << (w - 1 - (self.multiplier * i) % w))
        })
    }

    fn unpermute(&self, state: u64) -> u64 {
        let w = self.width;
        (0..w).fold(0, |acc, i| {
            let bit = (state >> (w - 1 - (self.multiplier * i) % w)) & 1;
            acc | (bit << (w - 1 - i))
        })
    }
}

impl RoundFunction for SpnRound {
    fn block_bits(&self) -> usize {
        self.width
    }

    fn key_bits(&self) -> usize {
        self.width
    }

    fn forward(&self, state: u64, key: u64) -> u64 {
        self.permute(self.substitute(state, &SBOX)) ^ key
    }

    fn inverse(&self, state: u64, key: u64) -> u64 {
        self.substitute(self.unpermute(state ^ key), &SBOX_INV)
    }
}

pub const SP16_ROUND: SpnRound = SpnRound::new(16, 5);
pub const SP8_ROUND: SpnRound = SpnRound::new(8, 3);

/// 16-bit toy SPN: x = 1, c0 = 4, 16 key bits per round.
pub fn sp16() -> BaseCipher<SpnRound> {
    BaseCipher::new(SP16_ROUND, CipherSpec::new(16, 1, 4, 16).expect("valid")).expect("consistent")
}

/// 8-bit toy SPN: x = 1, c0 = 2, 8 key bits per round.
pub fn sp8() -> BaseCipher<SpnRound> {
    BaseCipher::new(SP8_ROUND, CipherSpec::new(8, 1, 2, 8).expect("valid")).expect("consistent")
}

/// The toy ciphers selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToyCipher {
    Sp16,
    Sp8,
}

impl ToyCipher {
    pub fn base(self) -> BaseCipher<SpnRound> {
        match self {
            ToyCipher::Sp16 => sp16(),
            ToyCipher::Sp8 => sp8(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ToyCipher::Sp16 => "sp16",
            ToyCipher::Sp8 => "sp8",
        }
    }

    /// Identifier used in the container header.
    pub fn id(self) -> u8 {
        match self {
            ToyCipher::Sp16 => 1,
            ToyCipher::Sp8 => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(ToyCipher::Sp16),
            2 => Some(ToyCipher::Sp8),
            _ => None,
        }
    }
}

impl core::str::FromStr for ToyCipher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sp16" => Ok(ToyCipher::Sp16),
            "sp8" => Ok(ToyCipher::Sp8),
            _ => Err(Error::BadArgument("unknown cipher (expected sp16 or sp8)")),
        }
    }
}

impl fmt::Display for ToyCipher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Round functions with degenerate mixing, used as fixtures.
pub mod fixtures {
    use super::{RoundFunction, SBOX};

    /// Key addition only: no bit ever depends on another.
    #[derive(Debug, Clone, Copy)]
    pub struct XorOnly {
        pub width: usize,
    }

    impl RoundFunction for XorOnly {
        fn block_bits(&self) -> usize {
            self.width
        }
        fn key_bits(&self) -> usize {
            self.width
        }
        fn forward(&self, state: u64, key: u64) -> u64 {
            state ^ key
        }
        fn inverse(&self, state: u64, key: u64) -> u64 {
            state ^ key
        }
    }

    /// A Feistel round on 16 bits whose F function only touches the right
    /// half, so one round leaves the new left half as a plain copy.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct HalfFeistel16;

    fn f(half: u64) -> u64 {
        let lo = u64::from(SBOX[(half & 0xF) as usize]);
        let hi = u64::from(SBOX[((half >> 4) & 0xF) as usize]);
        (hi << 4) | lo
    }

    impl RoundFunction for HalfFeistel16 {
        fn block_bits(&self) -> usize {
            16
        }
        fn key_bits(&self) -> usize {
            8
        }
        fn forward(&self, state: u64, key: u64) -> u64 {
            let (l, r) = (state >> 8, state & 0xFF);
            (r << 8) | (l ^ f(r ^ key))
        }
        fn inverse(&self, state: u64, key: u64) -> u64 {
            let (l2, r2) = (state >> 8, state & 0xFF);
            ((r2 ^ f(l2 ^ key)) << 8) | l2
        }
    }
}
