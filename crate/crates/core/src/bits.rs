//! Packed bit strings.
//!
//! Bit 0 is the leftmost bit: the most significant bit of the first octet
//! (or hex digit) of any external representation. Every index range in this
//! crate is half-open.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// An ordered sequence of bits with no padding semantics.
///
/// Storage is packed MSB-first into `u64` words; bits past `len` in the last
/// word are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        s.clear_tail();
        s
    }

    /// Build from the low `width` bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= WORD, "from_u64 width {width} exceeds 64");
        let mut s = Self::zeros(width);
        if width > 0 {
            let masked = if width == WORD {
                value
            } else {
                value & ((1u64 << width) - 1)
            };
            s.words[0] = masked << (WORD - width);
        }
        s
    }

    /// Read the whole string as an unsigned integer, bit 0 most significant.
    ///
    /// Panics if the string is longer than 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "to_u64 on {}-bit string", self.len);
        if self.len == 0 {
            0
        } else {
            self.words[0] >> (WORD - self.len)
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Parse a string of `'0'`/`'1'` characters. Whitespace and `_` are skipped.
    pub fn from_binary_str(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for c in text.chars() {
            match c {
                '0' => s.push(false),
                '1' => s.push(true),
                '_' | ' ' => {}
                _ => return Err(Error::BadArgument("binary string may only contain 0 and 1")),
            }
        }
        Ok(s)
    }

    /// Take the first `len` bits of `bytes`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: bytes.len() * 8,
            });
        }
        let mut s = Self::zeros(len);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            if i >= s.words.len() {
                break;
            }
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            s.words[i] = u64::from_be_bytes(w);
        }
        s.clear_tail();
        Ok(s)
    }

    /// Octets, right-padded with zero bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(n);
        out
    }

    /// Parse hex and keep the first `len` bits; the padding bits must be zero.
    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let digits: Vec<u8> = text
            .bytes()
            .filter(|c| !c.is_ascii_whitespace())
            .map(|c| match c {
                b'0'..=b'9' => Ok(c - b'0'),
                b'a'..=b'f' => Ok(c - b'a' + 10),
                b'A'..=b'F' => Ok(c - b'A' + 10),
                _ => Err(Error::InvalidHex("non-hex character")),
            })
            .collect::<Result<_>>()?;
        if digits.len() != len.div_ceil(4) {
            return Err(Error::InvalidHex("digit count does not match bit length"));
        }
        let mut s = Self::zeros(digits.len() * 4);
        for (i, d) in digits.iter().enumerate() {
            for b in 0..4 {
                s.set(i * 4 + b, (d >> (3 - b)) & 1 == 1);
            }
        }
        if s.slice(len, s.len())?.count_ones() != 0 {
            return Err(Error::InvalidHex("non-zero padding bits"));
        }
        s.truncate(len);
        Ok(s)
    }

    /// Lower-case hex, right-padded with zero bits to a whole digit.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let mut out = String::with_capacity(self.len.div_ceil(4));
        for d in 0..self.len.div_ceil(4) {
            let mut v = 0u8;
            for b in 0..4 {
                let i = d * 4 + b;
                v = (v << 1) | u8::from(i < self.len && self.get(i));
            }
            out.push(DIGITS[v as usize] as char);
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for {}", self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for {}", self.len);
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for {}", self.len);
        self.words[i / WORD] ^= 1u64 << (WORD - 1 - i % WORD);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn truncate(&mut self, len: usize) {
        if len < self.len {
            self.len = len;
            self.words.truncate(words_for(len));
            self.clear_tail();
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bitwise exclusive-or of two equal-length strings.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitString) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
        Ok(())
    }

    /// Bits `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<BitString> {
        if start > end || end > self.len {
            return Err(Error::OutOfRange {
                start,
                end,
                len: self.len,
            });
        }
        let len = end - start;
        let mut out = Self::zeros(len);
        let mut done = 0;
        while done < len {
            let take = (len - done).min(WORD);
            let chunk = self.read_bits(start + done, take);
            out.write_bits(done, take, chunk);
            done += take;
        }
        Ok(out)
    }

    /// Overwrite bits `start..start + src.len()` with `src`.
    pub fn write(&mut self, start: usize, src: &BitString) -> Result<()> {
        let end = start + src.len;
        if end > self.len {
            return Err(Error::OutOfRange {
                start,
                end,
                len: self.len,
            });
        }
        let mut done = 0;
        while done < src.len {
            let take = (src.len - done).min(WORD);
            let chunk = src.read_bits(done, take);
            self.write_bits(start + done, take, chunk);
            done += take;
        }
        Ok(())
    }

    /// `count` bits at positions `(start + t) mod modulus`.
    pub fn slice_wrapping(&self, start: usize, count: usize, modulus: usize) -> Result<BitString> {
        self.check_window(start, count, modulus)?;
        Ok(BitString::from_bits(
            (0..count).map(|t| self.get((start + t) % modulus)),
        ))
    }

    /// Inverse of [`slice_wrapping`](Self::slice_wrapping): writes `src` at
    /// positions `(start + t) mod modulus`.
    pub fn write_wrapping(&mut self, start: usize, src: &BitString, modulus: usize) -> Result<()> {
        self.check_window(start, src.len, modulus)?;
        for t in 0..src.len {
            self.set((start + t) % modulus, src.get(t));
        }
        Ok(())
    }

    /// XOR `src` into positions `(start + t) mod modulus`.
    pub fn xor_wrapping(&mut self, start: usize, src: &BitString, modulus: usize) -> Result<()> {
        self.check_window(start, src.len, modulus)?;
        for t in 0..src.len {
            if src.get(t) {
                self.flip((start + t) % modulus);
            }
        }
        Ok(())
    }

    fn check_window(&self, start: usize, count: usize, modulus: usize) -> Result<()> {
        if modulus > self.len {
            return Err(Error::OutOfRange {
                start: 0,
                end: modulus,
                len: self.len,
            });
        }
        if count > modulus {
            return Err(Error::WindowTooLarge { count, modulus });
        }
        if count > 0 && start >= modulus {
            return Err(Error::OutOfRange {
                start,
                end: start + count,
                len: modulus,
            });
        }
        Ok(())
    }

    /// Left rotation by `amount` (negative rotates right).
    pub fn rotate(&self, amount: i64) -> BitString {
        if self.len == 0 {
            return self.clone();
        }
        let shift = amount.rem_euclid(self.len as i64) as usize;
        if shift == 0 {
            return self.clone();
        }
        let mut out = self.slice(shift, self.len).expect("in range");
        out.extend(&self.slice(0, shift).expect("in range"));
        out
    }

    /// Append `other` to the end of `self`.
    pub fn extend(&mut self, other: &BitString) {
        let start = self.len;
        self.len += other.len;
        self.words.resize(words_for(self.len), 0);
        self.write(start, other).expect("grown to fit");
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    /// Read `count <= 64` bits starting at `start` as a right-aligned integer.
    fn read_bits(&self, start: usize, count: usize) -> u64 {
        if count == 0 {
            return 0;
        }
        let w = start / WORD;
        let off = start % WORD;
        let hi = self.words[w] << off;
        let combined = if off + count > WORD {
            hi | (self.words[w + 1] >> (WORD - off))
        } else {
            hi
        };
        combined >> (WORD - count)
    }

    /// Write the low `count <= 64` bits of `value` at `start`.
    fn write_bits(&mut self, start: usize, count: usize, value: u64) {
        if count == 0 {
            return;
        }
        let w = start / WORD;
        let off = start % WORD;
        let aligned = value << (WORD - count);
        let mask = if count == WORD {
            u64::MAX
        } else {
            ((1u64 << count) - 1) << (WORD - count)
        };
        self.words[w] = (self.words[w] & !(mask >> off)) | (aligned >> off);
        if off + count > WORD {
            let spill = off + count - WORD;
            let low_mask = u64::MAX << (WORD - spill);
            self.words[w + 1] =
                (self.words[w + 1] & !low_mask) | (aligned << (WORD - off) & low_mask);
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (WORD - rem);
            }
        }
    }
}

impl Ord for BitString {
    /// Lexicographic by bit, shorter prefix first.
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len);
        let full = common / WORD;
        for i in 0..full {
            match self.words[i].cmp(&other.words[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        let rest = common % WORD;
        if rest != 0 {
            let a = self.read_bits(full * WORD, rest);
            let b = other.read_bits(full * WORD, rest);
            match a.cmp(&b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}: ", self.len)?;
        fmt::Display::fmt(self, f)?;
        write!(f, ")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bits(iter)
    }
}
