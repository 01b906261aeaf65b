//! Diffusion measurements.
//!
//! Experiment A flips one input bit of a keyed function across every (or a
//! sample of) setting of the other input bits and tallies the four
//! before/after values of one output bit. Experiment B does the same for
//! the function followed by the elastic exor/swap with `y` extra input
//! bits. The influence matrix records, for every input/output pair, how
//! often the output flipped.
//!
//! Keys are always held fixed inside the function under test.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::cipher::{BaseCipher, RoundFunction};
use crate::engine::{
    cycle_function, elastic_round, ElasticCipher, ElasticParams, KeyCursor, RoundKeys,
};
use crate::error::{Error, Result};
use crate::keystream::ExpandedKey;

/// Widest function (in input bits) that may be enumerated exhaustively.
pub const EXHAUSTIVE_MAX_BITS: usize = 20;

/// Default contexts per input bit in sampled mode.
pub const DEFAULT_CONTEXTS: u64 = 1 << 14;

/// Default probability gap for the distinguisher.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// All `2^(w-1)` settings of the other input bits.
    Exhaustive,
    /// `contexts` random settings from a seeded generator.
    Sampled { contexts: u64, seed: u64 },
}

impl Mode {
    pub fn sampled(seed: u64) -> Self {
        Mode::Sampled {
            contexts: DEFAULT_CONTEXTS,
            seed,
        }
    }
}

/// Tallies of one output bit's value with the input bit at 0 and at 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiffusionCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl DiffusionCounts {
    pub fn contexts(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    /// n_c: contexts where the output bit changed.
    pub fn changed(&self) -> u64 {
        self.n01 + self.n10
    }

    /// n_e: contexts where it did not.
    pub fn unchanged(&self) -> u64 {
        self.n00 + self.n11
    }

    /// p_c.
    pub fn p_change(&self) -> f64 {
        self.changed() as f64 / self.contexts() as f64
    }

    /// p_e.
    pub fn p_unchanged(&self) -> f64 {
        self.unchanged() as f64 / self.contexts() as f64
    }

    /// Exactly half the contexts changed.
    pub fn is_balanced(&self) -> bool {
        2 * self.changed() == self.contexts()
    }

    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            n00: self.n00 * factor,
            n01: self.n01 * factor,
            n10: self.n10 * factor,
            n11: self.n11 * factor,
        }
    }

    /// Counts expected at an output bit that is XORed with one of `y` free
    /// tail bits, given the counts of the bit before the XOR. The tail bit
    /// is fixed per context, so a 1 swaps 00<->11 and 01<->10.
    pub fn after_tail_xor(&self, y: u32) -> Self {
        let half = 1u64 << (y - 1);
        let same = (self.n00 + self.n11) * half;
        let diff = (self.n01 + self.n10) * half;
        Self {
            n00: same,
            n01: diff,
            n10: diff,
            n11: same,
        }
    }

    fn record(&mut self, before: bool, after: bool) {
        match (before, after) {
            (false, false) => self.n00 += 1,
            (false, true) => self.n01 += 1,
            (true, false) => self.n10 += 1,
            (true, true) => self.n11 += 1,
        }
    }
}

/// Call `visit(out0, out1)` for each context, where `out0`/`out1` are the
/// outputs with input bit `i` at 0 and 1. Returns the context count.
fn for_each_flip<F, V>(f: &mut F, width: usize, i: usize, mode: Mode, mut visit: V) -> Result<u64>
where
    F: FnMut(&BitString) -> BitString,
    V: FnMut(&BitString, &BitString),
{
    if i >= width {
        return Err(Error::BadArgument("input bit index out of range"));
    }
    match mode {
        Mode::Exhaustive => {
            if width > EXHAUSTIVE_MAX_BITS {
                return Err(Error::CostGuard {
                    bits: width,
                    limit: EXHAUSTIVE_MAX_BITS,
                });
            }
            let others = width - 1;
            for ctx in 0..1u64 << others {
                let mut x = BitString::zeros(width);
                for q in 0..others {
                    let pos = if q < i { q } else { q + 1 };
                    x.set(pos, (ctx >> (others - 1 - q)) & 1 == 1);
                }
                let out0 = f(&x);
                x.set(i, true);
                let out1 = f(&x);
                visit(&out0, &out1);
            }
            Ok(1u64 << others)
        }
        Mode::Sampled { contexts, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9));
            for _ in 0..contexts {
                let mut x: BitString = (0..width).map(|_| rng.random::<bool>()).collect();
                x.set(i, false);
                let out0 = f(&x);
                x.set(i, true);
                let out1 = f(&x);
                visit(&out0, &out1);
            }
            Ok(contexts)
        }
    }
}

/// Experiment A on input bit `i` and output bit `j` of a `width`-bit function.
pub fn experiment_a<F>(
    mut f: F,
    width: usize,
    i: usize,
    j: usize,
    mode: Mode,
) -> Result<DiffusionCounts>
where
    F: FnMut(&BitString) -> BitString,
{
    let mut counts = DiffusionCounts::default();
    let mut bad_j = false;
    for_each_flip(&mut f, width, i, mode, |o0, o1| {
        if j < o0.len() {
            counts.record(o0.get(j), o1.get(j));
        } else {
            bad_j = true;
        }
    })?;
    if bad_j {
        return Err(Error::BadArgument("output bit index out of range"));
    }
    Ok(counts)
}

/// `f` on the first `width` bits, followed by the elastic exor/swap: the
/// `y` extra input bits are XORed into the output window starting at
/// `offset`, and the window's previous contents become the output tail.
pub fn with_exor_swap<F>(
    mut f: F,
    width: usize,
    y: usize,
    offset: usize,
) -> impl FnMut(&BitString) -> BitString
where
    F: FnMut(&BitString) -> BitString,
{
    move |x: &BitString| {
        let mut out = f(&x.slice(0, width).expect("input width"));
        let tail = x.slice(width, width + y).expect("input width");
        let window = out.slice_wrapping(offset, y, width).expect("window fits");
        out.xor_wrapping(offset, &tail, width).expect("window fits");
        out.extend(&window);
        out
    }
}

/// Whether output bit `j` of [`with_exor_swap`] lies in the XORed window.
pub fn in_exor_window(width: usize, y: usize, offset: usize, j: usize) -> bool {
    j < width && (j + width - offset) % width < y
}

/// Experiment B: experiment A on `f` extended by the exor/swap step, over
/// `width + y` input bits.
pub fn experiment_b<F>(
    f: F,
    width: usize,
    y: usize,
    offset: usize,
    i: usize,
    j: usize,
    mode: Mode,
) -> Result<DiffusionCounts>
where
    F: FnMut(&BitString) -> BitString,
{
    if y == 0 || y > width {
        return Err(Error::BadArgument("expansion must be in 1..=width"));
    }
    if offset >= width {
        return Err(Error::BadArgument(
            "swap offset outside the function output",
        ));
    }
    experiment_a(with_exor_swap(f, width, y, offset), width + y, i, j, mode)
}

/// Flip counts for every (input bit, output bit) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceMatrix {
    inputs: usize,
    outputs: usize,
    contexts: u64,
    flips: Vec<u64>,
}

impl InfluenceMatrix {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Contexts evaluated per input bit.
    pub fn contexts(&self) -> u64 {
        self.contexts
    }

    pub fn flips(&self, i: usize, j: usize) -> u64 {
        self.flips[i * self.outputs + j]
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.flips(i, j) as f64 / self.contexts as f64
    }

    pub fn influenced(&self, i: usize, j: usize) -> bool {
        self.flips(i, j) > 0
    }

    pub fn influenced_count(&self) -> usize {
        self.flips.iter().filter(|&&c| c > 0).count()
    }

    /// Every input bit influences every output bit.
    pub fn is_complete(&self) -> bool {
        self.flips.iter().all(|&c| c > 0)
    }

    /// Input bit i influences exactly output bit i.
    pub fn is_diagonal(&self) -> bool {
        self.inputs == self.outputs
            && (0..self.inputs)
                .all(|i| (0..self.outputs).all(|j| self.influenced(i, j) == (i == j)))
    }

    /// Every input that influences `j` under `self` also does under `later`.
    pub fn is_subset_of(&self, later: &InfluenceMatrix) -> bool {
        self.flips
            .iter()
            .zip(&later.flips)
            .all(|(&a, &b)| a == 0 || b > 0)
    }

    /// `i,j,flips,contexts` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,flips,contexts\n");
        for i in 0..self.inputs {
            for j in 0..self.outputs {
                let _ = writeln!(out, "{i},{j},{},{}", self.flips(i, j), self.contexts);
            }
        }
        out
    }

    /// One row per input bit: `#` influenced, `.` not.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.inputs {
            let _ = write!(out, "{i:>4} ");
            for j in 0..self.outputs {
                out.push(if self.influenced(i, j) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

pub fn influence_matrix<F>(mut f: F, inputs: usize, mode: Mode) -> Result<InfluenceMatrix>
where
    F: FnMut(&BitString) -> BitString,
{
    let outputs = f(&BitString::zeros(inputs)).len();
    let mut flips = vec![0u64; inputs * outputs];
    let mut contexts = 0;
    for i in 0..inputs {
        let row = &mut flips[i * outputs..(i + 1) * outputs];
        contexts = for_each_flip(&mut f, inputs, i, mode, |o0, o1| {
            let d = o0.xor(o1).expect("fixed output width");
            for (j, cell) in row.iter_mut().enumerate() {
                if d.get(j) {
                    *cell += 1;
                }
            }
        })?;
    }
    Ok(InfluenceMatrix {
        inputs,
        outputs,
        contexts,
        flips,
    })
}

/// Least `r` in `1..=max_rounds` whose function `build(r)` has a complete
/// influence matrix, or `None`.
pub fn complete_diffusion_rounds<F, G>(
    mut build: G,
    inputs: usize,
    max_rounds: usize,
    mode: Mode,
) -> Result<Option<usize>>
where
    F: FnMut(&BitString) -> BitString,
    G: FnMut(usize) -> Result<F>,
{
    if max_rounds == 0 {
        return Err(Error::BadArgument("max_rounds must be at least 1"));
    }
    for r in 1..=max_rounds {
        if influence_matrix(build(r)?, inputs, mode)?.is_complete() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

fn random_material(rng: &mut ChaCha8Rng, n: usize) -> BitString {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// `count` consecutive level-`level` cycle functions with fixed random keys
/// drawn from `seed`. Level 0 is `count` cycles of the base cipher.
pub fn cycles_fn<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    count: usize,
    seed: u64,
) -> impl FnMut(&BitString) -> BitString + '_ {
    let g = crate::engine::cycle_key_bits(level, base.spec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let material = random_material(&mut rng, g * count);
    move |x: &BitString| {
        let mut keys = KeyCursor::new(&material);
        let mut s = x.clone();
        for _ in 0..count {
            s = cycle_function(base, &s, level, &mut keys).expect("sized key material");
        }
        s
    }
}

/// E_n with `rounds` rounds (whitening and permutations included) and a
/// random expanded key drawn from `seed`.
pub fn elastic_with_rounds<R: RoundFunction + Clone>(
    base: &BaseCipher<R>,
    level: u32,
    expansion: usize,
    rounds: usize,
    seed: u64,
) -> Result<ElasticCipher<R>> {
    let spec = *base.spec();
    let params = ElasticParams::new(level, expansion, &spec)?.with_rounds(rounds, &spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = ExpandedKey::from_raw(random_material(&mut rng, params.key_bits()), &params, &spec)?;
    ElasticCipher::new(base.clone(), params, key)
}

/// `rounds` bare E_n rounds (no whitening, no permutations) with random
/// round keys drawn from `seed`; round `i` swaps at offset `i`.
pub fn elastic_rounds_fn<R: RoundFunction>(
    base: &BaseCipher<R>,
    level: u32,
    expansion: usize,
    rounds: usize,
    seed: u64,
) -> Result<impl FnMut(&BitString) -> BitString + '_> {
    let spec = *base.spec();
    let params = ElasticParams::new(level, expansion, &spec)?;
    let g = crate::engine::cycle_key_bits(level - 1, &spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<RoundKeys> = (0..rounds)
        .map(|i| RoundKeys {
            cycle: random_material(&mut rng, g),
            tail: random_material(&mut rng, expansion),
            offset: i % params.left_bits(),
        })
        .collect();
    Ok(move |x: &BitString| {
        keys.iter().fold(x.clone(), |s, k| {
            elastic_round(base, &params, &s, k).expect("sized round keys")
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// A contiguous (cyclic) run of output bits flips with probability near
    /// one half while all others deviate.
    ElasticLike {
        start: usize,
        len: usize,
    },
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguisherReport {
    pub trials: u64,
    pub threshold: f64,
    pub flip_probability: Vec<f64>,
    /// Output bits within `threshold` of 1/2.
    pub flagged: Vec<bool>,
    pub verdict: Verdict,
}

/// Estimate, per output bit, the probability that it flips when a random
/// single input bit of a random input is flipped.
pub fn distinguish<F>(
    mut blackbox: F,
    block_bits: usize,
    trials: u64,
    threshold: f64,
    seed: u64,
) -> Result<DistinguisherReport>
where
    F: FnMut(&BitString) -> BitString,
{
    if trials < 1000 {
        return Err(Error::BadArgument(
            "distinguisher needs at least 1000 trials",
        ));
    }
    if block_bits == 0 {
        return Err(Error::BadArgument("empty block"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flips = vec![0u64; 0];
    for _ in 0..trials {
        let mut x: BitString = (0..block_bits).map(|_| rng.random::<bool>()).collect();
        let i = rng.random_range(0..block_bits);
        let y0 = blackbox(&x);
        x.flip(i);
        let y1 = blackbox(&x);
        if flips.is_empty() {
            flips = vec![0; y0.len()];
        }
        let d = y0.xor(&y1)?;
        for (j, c) in flips.iter_mut().enumerate() {
            if d.get(j) {
                *c += 1;
            }
        }
    }
    let flip_probability: Vec<f64> = flips.iter().map(|&c| c as f64 / trials as f64).collect();
    let flagged: Vec<bool> = flip_probability
        .iter()
        .map(|p| (p - 0.5).abs() <= threshold)
        .collect();
    let verdict = cyclic_run(&flagged)
        .map(|(start, len)| Verdict::ElasticLike { start, len })
        .unwrap_or(Verdict::Indistinguishable);
    Ok(DistinguisherReport {
        trials,
        threshold,
        flip_probability,
        flagged,
        verdict,
    })
}

/// The single cyclic run of `true`, if the set is a non-empty proper subset
/// forming one run.
fn cyclic_run(flags: &[bool]) -> Option<(usize, usize)> {
    let n = flags.len();
    let count = flags.iter().filter(|&&f| f).count();
    if count == 0 || count == n {
        return None;
    }
    let starts: Vec<usize> = (0..n)
        .filter(|&j| flags[j] && !flags[(j + n - 1) % n])
        .collect();
    (starts.len() == 1).then(|| (starts[0], count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{sp16, sp8, SP8_ROUND};

    fn sp8_round(key: u64) -> impl FnMut(&BitString) -> BitString {
        move |x: &BitString| BitString::from_u64(SP8_ROUND.forward(x.to_u64(), key), 8)
    }

    #[test]
    fn identity_counts() {
        for i in 0..6 {
            for j in 0..6 {
                let c = experiment_a(|x: &BitString| x.clone(), 6, i, j, Mode::Exhaustive).unwrap();
                assert_eq!(c.contexts(), 32);
                assert_eq!(c.changed(), if i == j { 32 } else { 0 });
            }
        }
    }

    #[test]
    fn constant_counts() {
        let c = experiment_a(
            |_: &BitString| BitString::ones(4),
            4,
            1,
            2,
            Mode::Exhaustive,
        )
        .unwrap();
        assert_eq!((c.n01, c.n10, c.n11), (0, 0, 8));
    }

    // Frozen from tests/oracles/diffusion_counts.py (exhaustive, 128 contexts).
    #[test]
    fn sp8_round_counts_frozen() {
        let key = 0x3A;
        let c = experiment_a(sp8_round(key), 8, 0, 0, Mode::Exhaustive).unwrap();
        assert_eq!((c.n00, c.n01, c.n10, c.n11), (16, 32, 64, 16));
        let c = experiment_a(sp8_round(key), 8, 0, 1, Mode::Exhaustive).unwrap();
        assert_eq!((c.n00, c.n01, c.n10, c.n11), (0, 64, 64, 0));
    }

    #[test]
    fn exhaustive_guard() {
        let r = experiment_a(|x: &BitString| x.clone(), 21, 0, 0, Mode::Exhaustive);
        assert_eq!(
            r,
            Err(Error::CostGuard {
                bits: 21,
                limit: 20
            })
        );
    }

    #[test]
    fn exor_window_membership() {
        assert!(in_exor_window(8, 2, 7, 7));
        assert!(in_exor_window(8, 2, 7, 0));
        assert!(!in_exor_window(8, 2, 7, 1));
        assert!(!in_exor_window(8, 2, 0, 8));
    }

    #[test]
    fn exor_swap_relations_exact() {
        let (l, y) = (8usize, 2usize);
        for offset in 0..2 {
            for i in 0..l {
                for j in 0..l + y {
                    let b = experiment_b(sp8_round(0x3A), l, y, offset, i, j, Mode::Exhaustive)
                        .unwrap();
                    assert_eq!(b.contexts(), 1 << (l + y - 1));
                    let source = if j < l { j } else { (offset + j - l) % l };
                    let a = experiment_a(sp8_round(0x3A), l, i, source, Mode::Exhaustive).unwrap();
                    if in_exor_window(l, y, offset, j) {
                        assert_eq!(b, a.after_tail_xor(y as u32));
                    } else {
                        assert_eq!(b, a.scaled(1 << y));
                    }
                    // Flip probability is never changed by the exor.
                    assert_eq!(b.changed(), a.changed() << y);
                }
            }
        }
    }

    #[test]
    fn identity_matrix_is_diagonal() {
        let m = influence_matrix(|x: &BitString| x.clone(), 10, Mode::Exhaustive).unwrap();
        assert!(m.is_diagonal());
        assert!(!m.is_complete());
        assert_eq!(m.influenced_count(), 10);
        assert!(m.to_csv().starts_with("i,j,flips,contexts\n0,0,512,512\n"));
    }

    #[test]
    fn sp16_reaches_complete_diffusion() {
        let base = sp16();
        let q =
            complete_diffusion_rounds(|r| Ok(cycles_fn(&base, 0, r, 11)), 16, 4, Mode::Exhaustive)
                .unwrap();
        assert_eq!(q, Some(2));
    }

    #[test]
    fn influence_is_monotone_in_rounds() {
        let base = sp16();
        let mode = Mode::Sampled {
            contexts: 512,
            seed: 3,
        };
        let mut prev: Option<InfluenceMatrix> = None;
        for r in 1..=4 {
            let m = influence_matrix(cycles_fn(&base, 0, r, 12), 16, mode).unwrap();
            if let Some(p) = &prev {
                assert!(p.is_subset_of(&m));
            }
            prev = Some(m);
        }
    }

    #[test]
    fn identity_never_converges() {
        let r =
            complete_diffusion_rounds(|_| Ok(|x: &BitString| x.clone()), 8, 5, Mode::Exhaustive)
                .unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn tail_bits_skip_first_cycle() {
        // One bare round over SP8 with y = 4: tail inputs only reach the
        // XORed window of the left part.
        let base = sp8();
        let m = influence_matrix(
            elastic_rounds_fn(&base, 1, 4, 1, 5).unwrap(),
            12,
            Mode::Exhaustive,
        )
        .unwrap();
        for i in 8..12 {
            let hit: Vec<usize> = (0..12).filter(|&j| m.influenced(i, j)).collect();
            assert_eq!(hit, vec![i - 8]);
        }
        let m = influence_matrix(
            elastic_rounds_fn(&base, 1, 4, 6, 5).unwrap(),
            12,
            Mode::Exhaustive,
        )
        .unwrap();
        assert!(m.is_complete());
        let c = elastic_with_rounds(&base, 1, 4, 6, 5).unwrap();
        let m =
            influence_matrix(|x: &BitString| c.encrypt(x).unwrap(), 12, Mode::Exhaustive).unwrap();
        assert!(m.is_complete());
    }

    #[test]
    fn distinguisher_on_random_function() {
        // A fixed random table on 12 bits has no structure.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let table: Vec<u64> = (0..4096).map(|_| rng.random::<u64>() & 0xFFF).collect();
        let report = distinguish(
            |x: &BitString| BitString::from_u64(table[x.to_u64() as usize], 12),
            12,
            1 << 14,
            DEFAULT_THRESHOLD,
            1,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Indistinguishable);
        assert!(distinguish(|x: &BitString| x.clone(), 8, 999, 0.05, 0).is_err());
    }

    #[test]
    fn cyclic_runs() {
        assert_eq!(cyclic_run(&[false, true, true, false]), Some((1, 2)));
        assert_eq!(cyclic_run(&[true, false, false, true]), Some((3, 2)));
        assert_eq!(cyclic_run(&[true, false, true, false]), None);
        assert_eq!(cyclic_run(&[true, true]), None);
        assert_eq!(cyclic_run(&[false, false]), None);
    }
}
