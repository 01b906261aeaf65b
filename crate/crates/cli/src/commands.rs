//! Command bodies. Each returns the report text and whether the command's
//! postcondition held; `main` turns that into the exit code.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use elastic_core::cipher::{BaseCipher, CipherSpec, SpnRound};
use elastic_core::diffusion::{
    complete_diffusion_rounds, cycles_fn, distinguish, elastic_rounds_fn, elastic_with_rounds,
    influence_matrix, Mode, Verdict, EXHAUSTIVE_MAX_BITS,
};
use elastic_core::engine::{cycle_key_bits, rounds_at_level};
use elastic_core::keystream::layout_for;
use elastic_core::reduction::{
    reduce, verify_cycle_keys, BruteForceOracle, PlainCipherPairSet, RecoveryOracle,
};
use elastic_core::{BitString, ElasticCipher, ElasticParams, ExpandedKey, MasterKey, ToyCipher};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::container::{self, Header};

pub struct Report {
    pub text: String,
    pub ok: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Self { text, ok: true }
    }
}

pub enum KeySource {
    Master(MasterKey),
    /// Full expanded key as hex; for test vectors only.
    Raw(String),
}

fn build(cipher: ToyCipher, bits: usize, key: &KeySource) -> Result<ElasticCipher<SpnRound>> {
    let base = cipher.base();
    Ok(match key {
        KeySource::Master(m) => ElasticCipher::from_master(base, bits, m)?,
        KeySource::Raw(hex) => {
            let spec = *base.spec();
            let params = ElasticParams::for_length(bits, &spec)?;
            let material = BitString::from_hex(hex, params.key_bits())
                .with_context(|| format!("raw expanded key must be {} bits", params.key_bits()))?;
            let key = ExpandedKey::from_raw(material, &params, &spec)?;
            ElasticCipher::new(base, params, key)?
        }
    })
}

pub fn encrypt_bytes(cipher: ToyCipher, key: &KeySource, input: &[u8]) -> Result<Vec<u8>> {
    ensure!(!input.is_empty(), "input file is empty");
    let bits = input.len() * 8;
    let header = Header::for_payload(cipher, bits)?;
    let c = build(cipher, bits, key)?;
    let ct = c.encrypt(&BitString::from_bytes(input, bits)?)?;
    Ok(container::encode(&header, &ct))
}

pub fn decrypt_bytes(expect: Option<ToyCipher>, key: &KeySource, input: &[u8]) -> Result<Vec<u8>> {
    let (header, payload) = container::decode(input)?;
    if let Some(c) = expect {
        ensure!(
            c == header.cipher,
            "container holds {} ciphertext, --cipher says {c}",
            header.cipher
        );
    }
    let c = build(header.cipher, payload.len(), key)?;
    Ok(c.decrypt(&payload)?.to_bytes())
}

pub fn params(cipher: ToyCipher, len_bits: usize, layout: bool) -> Result<Report> {
    let base = cipher.base();
    let spec = *base.spec();
    let p = ElasticParams::for_length(len_bits, &spec)?;
    let x = spec.rounds_per_cycle() as u64;
    let half = 1u64 << (p.level() - 1);
    let mut out = String::new();
    writeln!(out, "cipher {cipher}: {spec}")?;
    writeln!(out, "{p}")?;
    writeln!(
        out,
        "left part {} bits, permutation key {} bits",
        p.left_bits(),
        p.perm_key_bits()
    )?;
    writeln!(
        out,
        "cycle key g({}) = {} bits, round key {} bits",
        p.level() - 1,
        cycle_key_bits(p.level() - 1, &spec),
        p.round_key_bits(&spec)
    )?;
    for m in (0..=p.level()).rev() {
        writeln!(out, "level-{m} rounds: {}", rounds_at_level(&p, m, &spec)?)?;
    }
    writeln!(
        out,
        "base rounds r_n 2^(n-1) x = {}, r0 2^(n-1) x = {}",
        p.rounds() as u64 * half * x,
        spec.rounds() as u64 * half * x
    )?;
    if layout {
        writeln!(out, "{:<18} {:>8} {:>6}", "consumer", "offset", "len")?;
        for r in layout_for(&p, &spec).records() {
            writeln!(
                out,
                "{:<18} {:>8} {:>6}",
                r.consumer.to_string(),
                r.offset,
                r.len
            )?;
        }
    }
    Ok(Report::ok(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Auto,
    Exhaustive,
    Sampled,
}

pub struct DiffusionArgs {
    pub cipher: ToyCipher,
    pub level: u32,
    pub rounds: usize,
    pub y: Option<usize>,
    pub mode: ModeArg,
    pub contexts: u64,
    pub seed: u64,
    pub max_rounds: usize,
    pub csv: bool,
}

fn pick_mode(arg: ModeArg, width: usize, contexts: u64, seed: u64) -> Mode {
    match arg {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Sampled => Mode::Sampled { contexts, seed },
        ModeArg::Auto if width <= EXHAUSTIVE_MAX_BITS => Mode::Exhaustive,
        ModeArg::Auto => Mode::Sampled { contexts, seed },
    }
}

fn mode_label(mode: Mode) -> String {
    match mode {
        Mode::Exhaustive => "exhaustive".into(),
        Mode::Sampled { contexts, seed } => format!("sampled, {contexts} contexts, seed {seed}"),
    }
}

/// Least number of level-`level` cycles giving complete diffusion.
fn cycle_diffusion(
    base: &BaseCipher<SpnRound>,
    level: u32,
    a: &DiffusionArgs,
) -> Result<(Option<usize>, Mode)> {
    let width = base.spec().block_bits() << level;
    let mode = pick_mode(a.mode, width, a.contexts, a.seed);
    let q = complete_diffusion_rounds(
        |r| Ok(cycles_fn(base, level, r, a.seed)),
        width,
        a.max_rounds,
        mode,
    )?;
    Ok((q, mode))
}

fn show(q: Option<usize>) -> String {
    q.map_or("not reached".into(), |q| q.to_string())
}

/// Influence matrix after `rounds` rounds plus the complete-diffusion search.
///
/// Level 0 counts cycles of the base cipher. Level m >= 1 counts bare E_m
/// rounds; whitening and the rotations only relabel or mask bits and do not
/// change which inputs reach which outputs.
pub fn diffusion(a: &DiffusionArgs) -> Result<Report> {
    ensure!(a.max_rounds >= 1, "--max-rounds must be at least 1");
    let base = a.cipher.base();
    let spec = *base.spec();
    let mut out = String::new();
    if a.level == 0 {
        let width = spec.block_bits();
        let mode = pick_mode(a.mode, width, a.contexts, a.seed);
        let m = influence_matrix(cycles_fn(&base, 0, a.rounds, a.seed), width, mode)?;
        writeln!(
            out,
            "{} cycles of {}, {}",
            a.rounds,
            a.cipher,
            mode_label(mode)
        )?;
        write_matrix(&mut out, &m, a.csv)?;
        let (q, _) = cycle_diffusion(&base, 0, a)?;
        writeln!(
            out,
            "complete diffusion after {} cycles (searched up to {})",
            show(q),
            a.max_rounds
        )?;
        return Ok(Report::ok(out));
    }
    ensure!(a.level <= 3, "--level must be 0..=3");
    let left = spec.block_bits() << (a.level - 1);
    let y = a.y.unwrap_or(left / 2);
    ensure!(y <= left, "--y must be at most {left}");
    let width = left + y;
    let mode = pick_mode(a.mode, width, a.contexts, a.seed);
    let m = influence_matrix(
        elastic_rounds_fn(&base, a.level, y, a.rounds, a.seed)?,
        width,
        mode,
    )?;
    writeln!(
        out,
        "{} rounds of E{} over {}, y={y}, {}",
        a.rounds,
        a.level,
        a.cipher,
        mode_label(mode)
    )?;
    write_matrix(&mut out, &m, a.csv)?;
    let (q, qmode) = cycle_diffusion(&base, a.level - 1, a)?;
    let e = complete_diffusion_rounds(
        |r| elastic_rounds_fn(&base, a.level, y, r, a.seed),
        width,
        a.max_rounds,
        mode,
    )?;
    writeln!(
        out,
        "level-{} cycles to complete diffusion: {} ({})",
        a.level - 1,
        show(q),
        mode_label(qmode)
    )?;
    writeln!(
        out,
        "E{} rounds to complete diffusion: {}",
        a.level,
        show(e)
    )?;
    let holds = matches!((q, e), (Some(q), Some(e)) if e <= q + 1);
    writeln!(
        out,
        "rounds <= cycles + 1: {}",
        if holds { "yes" } else { "no" }
    )?;
    Ok(Report::ok(out))
}

fn write_matrix(
    out: &mut String,
    m: &elastic_core::diffusion::InfluenceMatrix,
    csv: bool,
) -> Result<()> {
    writeln!(
        out,
        "influenced {}/{} complete {} diagonal {}",
        m.influenced_count(),
        m.inputs() * m.outputs(),
        yes(m.is_complete()),
        yes(m.is_diagonal())
    )?;
    out.push_str(&if csv { m.to_csv() } else { m.to_text() });
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub struct DistinguishArgs {
    pub cipher: ToyCipher,
    pub level: u32,
    pub y: Option<usize>,
    pub rounds: Option<usize>,
    pub base_cycles: Option<usize>,
    pub bare: bool,
    pub trials: u64,
    pub threshold: f64,
    pub seed: u64,
}

pub fn distinguish_cmd(a: &DistinguishArgs) -> Result<(Report, Verdict)> {
    ensure!((1..=3).contains(&a.level), "--level must be 1..=3");
    let mut base = a.cipher.base();
    if let Some(c) = a.base_cycles {
        let s = *base.spec();
        base = base.with_spec(CipherSpec::new(
            s.block_bits(),
            s.rounds_per_cycle(),
            c,
            s.round_key_bits(),
        )?)?;
    }
    let spec = *base.spec();
    let left = spec.block_bits() << (a.level - 1);
    let y = a.y.unwrap_or(left / 2);
    ensure!(y <= left, "--y must be at most {left}");
    let rounds = a
        .rounds
        .unwrap_or(ElasticParams::new(a.level, y, &spec)?.rounds());
    let width = left + y;
    let report = if a.bare {
        distinguish(
            elastic_rounds_fn(&base, a.level, y, rounds, a.seed)?,
            width,
            a.trials,
            a.threshold,
            a.seed,
        )?
    } else {
        let c = elastic_with_rounds(&base, a.level, y, rounds, a.seed)?;
        distinguish(
            |x: &BitString| c.encrypt(x).expect("block length"),
            width,
            a.trials,
            a.threshold,
            a.seed,
        )?
    };
    let mut out = String::new();
    writeln!(
        out,
        "E{} over {} ({} cycles), y={y}, {rounds} rounds{}, {} trials, threshold {}",
        a.level,
        a.cipher,
        spec.cycles(),
        if a.bare { " (bare)" } else { "" },
        a.trials,
        a.threshold
    )?;
    writeln!(out, "bit  p_flip  near-1/2")?;
    for (j, p) in report.flip_probability.iter().enumerate() {
        writeln!(
            out,
            "{j:>3}  {p:.4}  {}",
            if report.flagged[j] { "*" } else { "" }
        )?;
    }
    let verdict = report.verdict;
    match verdict {
        Verdict::ElasticLike { start, len } => writeln!(
            out,
            "verdict: elastic-like, window of {len} bits at {start}"
        )?,
        Verdict::Indistinguishable => writeln!(out, "verdict: indistinguishable")?,
    }
    Ok((Report::ok(out), verdict))
}

pub struct ReduceArgs {
    pub r: usize,
    pub s: usize,
    pub y: usize,
    pub seed: u64,
}

/// Micro instance: SP8 base, E1, planted cycle keys drawn from `seed`.
pub fn reduce_demo(a: &ReduceArgs) -> Result<Report> {
    ensure!(a.r >= 1 && a.s >= 1, "--r and --s must be at least 1");
    ensure!(a.y <= 8, "--y must be at most 8");
    let base = ToyCipher::Sp8.base();
    let g = cycle_key_bits(0, base.spec());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let planted: Vec<BitString> = (0..a.r)
        .map(|_| (0..g).map(|_| rng.random::<bool>()).collect())
        .collect();
    let pairs = PlainCipherPairSet::generate(&base, 0, &planted, a.s, a.seed)?;
    let mut out = String::new();
    writeln!(
        out,
        "sp8, n=1, y={}, r={}, s={}, planted cycle keys {}",
        a.y,
        a.r,
        a.s,
        hex_list(&planted)
    )?;
    let mut oracle = BruteForceOracle::new(g + a.y);
    let start = Instant::now();
    let result = reduce(&base, 1, a.y, &pairs, &mut oracle);
    let wall = start.elapsed();
    match result {
        Ok(red) => {
            let verified = verify_cycle_keys(&base, 0, &red.cycle_keys, &pairs)?;
            writeln!(
                out,
                "recovered {} cycle keys, verified {verified}/{} pairs",
                red.cycle_keys.len(),
                a.s
            )?;
            writeln!(out, "cycle keys {}", hex_list(&red.cycle_keys))?;
            writeln!(out, "{}", red.cost)?;
            writeln!(out, "{:<20} {:>12.3} s", "wall time", wall.as_secs_f64())?;
            Ok(Report {
                text: out,
                ok: verified == a.s,
            })
        }
        Err(e @ elastic_core::Error::CostGuard { .. }) => bail!(e),
        Err(e) => {
            writeln!(out, "{e}")?;
            writeln!(out, "{:<20} {:>12}", "oracle ops", oracle.op_cost())?;
            writeln!(out, "{:<20} {:>12.3} s", "wall time", wall.as_secs_f64())?;
            Ok(Report {
                text: out,
                ok: false,
            })
        }
    }
}

fn hex_list(keys: &[BitString]) -> String {
    keys.iter()
        .map(|k| k.to_hex())
        .collect::<Vec<_>>()
        .join(" ")
}
