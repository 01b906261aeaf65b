//! Key expansion.
//!
//! The expanded key is the plain RC4 keystream of a master key (standard
//! 256-entry state, no initial output dropped), truncated to the number of
//! bits the elastic cipher consumes. [`KeyLayout`] unrolls every pointer
//! advance of one encryption into a table of consumers.

use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitString;
use crate::cipher::CipherSpec;
use crate::engine::{cycle_key_bits, ElasticParams};
use crate::error::{Error, Result};

/// RC4 keystream generator.
#[derive(Clone)]
pub struct Rc4 {
    state: [u8; 256],
    i: u8,
    j: u8,
}

impl Rc4 {
    pub fn new(key: &[u8]) -> Self {
        assert!(!key.is_empty() && key.len() <= 256);
        let mut state = [0u8; 256];
        for (i, s) in state.iter_mut().enumerate() {
            *s = i as u8;
        }
        let mut j = 0u8;
        for i in 0..256 {
            j = j.wrapping_add(state[i]).wrapping_add(key[i % key.len()]);
            state.swap(i, j as usize);
        }
        Self { state, i: 0, j: 0 }
    }

    pub fn next_byte(&mut self) -> u8 {
        self.i = self.i.wrapping_add(1);
        self.j = self.j.wrapping_add(self.state[self.i as usize]);
        self.state.swap(self.i as usize, self.j as usize);
        let t = self.state[self.i as usize].wrapping_add(self.state[self.j as usize]);
        self.state[t as usize]
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_byte();
        }
    }
}

impl fmt::Debug for Rc4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Rc4 { .. }")
    }
}

/// A master key of 1 to 256 octets.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey(Vec<u8>);

impl MasterKey {
    pub fn new(bytes: &[u8]) -> Result<Self> {
        if bytes.is_empty() || bytes.len() > 256 {
            return Err(Error::InvalidMasterKey(bytes.len()));
        }
        Ok(Self(bytes.to_vec()))
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let t = text.trim();
        let t = t.strip_prefix("0x").unwrap_or(t);
        if !t.len().is_multiple_of(2) {
            return Err(Error::InvalidHex("master key needs whole octets"));
        }
        let bits = BitString::from_hex(t, t.len() * 4)?;
        Self::new(&bits.to_bytes())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterKey({} octets)", self.0.len())
    }
}

/// First `nbits` bits of the RC4 keystream for `key`.
pub fn expand(key: &MasterKey, nbits: usize) -> BitString {
    let mut bytes = alloc::vec![0u8; nbits.div_ceil(8)];
    Rc4::new(key.as_bytes()).fill(&mut bytes);
    BitString::from_bytes(&bytes, nbits).expect("sized to fit")
}

/// Which step of the encryption a key segment feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyConsumer {
    InitialWhitening,
    InitialPermutation,
    /// A base-cipher round key; `index` counts base rounds within the elastic round.
    BaseRound {
        round: usize,
        index: usize,
    },
    /// The half-width XOR inside a level-`level` cycle function; `index`
    /// counts such XORs at that level within the elastic round.
    HalfXor {
        round: usize,
        level: u32,
        index: usize,
    },
    /// The `y`-bit tail key of elastic round `round`.
    Tail {
        round: usize,
    },
    FinalPermutation,
    FinalWhitening,
}

impl fmt::Display for KeyConsumer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KeyConsumer::InitialWhitening => f.write_str("whiten-in"),
            KeyConsumer::InitialPermutation => f.write_str("perm-in"),
            KeyConsumer::BaseRound { round, index } => write!(f, "r{round}.base{index}"),
            KeyConsumer::HalfXor {
                round,
                level,
                index,
            } => write!(f, "r{round}.xor{level}.{index}"),
            KeyConsumer::Tail { round } => write!(f, "r{round}.tail"),
            KeyConsumer::FinalPermutation => f.write_str("perm-out"),
            KeyConsumer::FinalWhitening => f.write_str("whiten-out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutRecord {
    pub consumer: KeyConsumer,
    pub offset: usize,
    pub len: usize,
}

/// Contiguous, non-overlapping map of the expanded key in consumption order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLayout {
    records: Vec<LayoutRecord>,
}

impl KeyLayout {
    pub fn records(&self) -> &[LayoutRecord] {
        &self.records
    }

    /// Sum of all record lengths.
    pub fn total_bits(&self) -> usize {
        self.records.last().map_or(0, |r| r.offset + r.len)
    }

    pub fn find(&self, consumer: KeyConsumer) -> Option<&LayoutRecord> {
        self.records.iter().find(|r| r.consumer == consumer)
    }
}

struct LayoutBuilder {
    records: Vec<LayoutRecord>,
    offset: usize,
    base_index: usize,
    xor_index: Vec<usize>,
}

impl LayoutBuilder {
    fn push(&mut self, consumer: KeyConsumer, len: usize) {
        if len > 0 {
            self.records.push(LayoutRecord {
                consumer,
                offset: self.offset,
                len,
            });
            self.offset += len;
        }
    }

    fn cycle(&mut self, round: usize, level: u32, spec: &CipherSpec) {
        if level == 0 {
            for _ in 0..spec.rounds_per_cycle() {
                let index = self.base_index;
                self.base_index += 1;
                self.push(
                    KeyConsumer::BaseRound { round, index },
                    spec.round_key_bits(),
                );
            }
            return;
        }
        for _ in 0..2 {
            self.cycle(round, level - 1, spec);
            let slot = &mut self.xor_index[level as usize];
            let index = *slot;
            *slot += 1;
            self.push(
                KeyConsumer::HalfXor {
                    round,
                    level,
                    index,
                },
                spec.block_bits() << (level - 1),
            );
        }
    }
}

/// Static unrolling of the key pointer for one encryption under `params`.
pub fn layout_for(params: &ElasticParams, spec: &CipherSpec) -> KeyLayout {
    let b = params.block_bits();
    let mut lb = LayoutBuilder {
        records: Vec::new(),
        offset: 0,
        base_index: 0,
        xor_index: alloc::vec![0; params.level() as usize + 1],
    };
    lb.push(KeyConsumer::InitialWhitening, b);
    lb.push(KeyConsumer::InitialPermutation, params.perm_key_bits());
    for round in 0..params.rounds() {
        lb.base_index = 0;
        lb.xor_index.iter_mut().for_each(|c| *c = 0);
        lb.cycle(round, params.level() - 1, spec);
        lb.push(KeyConsumer::Tail { round }, params.expansion());
    }
    lb.push(KeyConsumer::FinalPermutation, params.perm_key_bits());
    lb.push(KeyConsumer::FinalWhitening, b);
    debug_assert_eq!(
        lb.offset,
        params.key_bits(),
        "layout disagrees with key length formula"
    );
    debug_assert_eq!(
        params.round_key_bits(spec),
        cycle_key_bits(params.level() - 1, spec) + params.expansion()
    );
    KeyLayout {
        records: lb.records,
    }
}

/// Expanded key material together with its layout.
#[derive(Clone, PartialEq, Eq)]
pub struct ExpandedKey {
    material: BitString,
    layout: KeyLayout,
}

impl ExpandedKey {
    /// Expand `master` to exactly the length `params` requires.
    pub fn derive(master: &MasterKey, params: &ElasticParams, spec: &CipherSpec) -> Self {
        Self {
            material: expand(master, params.key_bits()),
            layout: layout_for(params, spec),
        }
    }

    /// Use caller-supplied material (test vectors).
    pub fn from_raw(
        material: BitString,
        params: &ElasticParams,
        spec: &CipherSpec,
    ) -> Result<Self> {
        if material.len() != params.key_bits() {
            return Err(Error::KeyLengthMismatch {
                expected: params.key_bits(),
                actual: material.len(),
            });
        }
        Ok(Self {
            material,
            layout: layout_for(params, spec),
        })
    }

    pub fn material(&self) -> &BitString {
        &self.material
    }

    pub fn layout(&self) -> &KeyLayout {
        &self.layout
    }

    /// Bits of one layout record.
    pub fn segment(&self, record: &LayoutRecord) -> BitString {
        self.material
            .slice(record.offset, record.offset + record.len)
            .expect("layout covers material")
    }
}

impl fmt::Debug for ExpandedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ExpandedKey({} bits, {} segments)",
            self.material.len(),
            self.layout.records.len()
        )
    }
}

/// Text dump: the material as hex, then one line per layout record.
impl fmt::Display for ExpandedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bits {}", self.material.len())?;
        writeln!(f, "hex  {}", self.material.to_hex())?;
        writeln!(f, "{:<18} {:>8} {:>6}  bits", "consumer", "offset", "len")?;
        for r in &self.layout.records {
            writeln!(
                f,
                "{:<18} {:>8} {:>6}  {}",
                alloc::format!("{}", r.consumer),
                r.offset,
                r.len,
                self.segment(r)
            )?;
        }
        Ok(())
    }
}
