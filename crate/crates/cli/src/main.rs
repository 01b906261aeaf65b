use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use elastic_cli::commands::{
    self, DiffusionArgs, DistinguishArgs, KeySource, ModeArg, ReduceArgs, Report,
};
use elastic_cli::vectors;
use elastic_core::diffusion::{DEFAULT_CONTEXTS, DEFAULT_THRESHOLD};
use elastic_core::{MasterKey, ToyCipher};

#[derive(Parser)]
#[command(name = "elastic", version, about = "Elastic block cipher toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CipherArg {
    Sp16,
    Sp8,
}

impl From<CipherArg> for ToyCipher {
    fn from(c: CipherArg) -> Self {
        match c {
            CipherArg::Sp16 => ToyCipher::Sp16,
            CipherArg::Sp8 => ToyCipher::Sp8,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeFlag {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(clap::Args)]
struct KeyArgs {
    /// Master key, 1 to 256 octets of hex.
    #[arg(long, required_unless_present = "raw_expanded_key")]
    key_hex: Option<String>,
    #[arg(long, hide = true, conflicts_with = "key_hex")]
    raw_expanded_key: Option<String>,
}

impl KeyArgs {
    fn source(&self) -> Result<KeySource> {
        match (&self.key_hex, &self.raw_expanded_key) {
            (_, Some(raw)) => Ok(KeySource::Raw(raw.clone())),
            (Some(hex), None) => Ok(KeySource::Master(MasterKey::from_hex(hex)?)),
            (None, None) => unreachable!("clap requires one of the key flags"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt a file into an ELCX container.
    Encrypt {
        #[arg(long, value_enum)]
        cipher: CipherArg,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Decrypt an ELCX container.
    Decrypt {
        /// Checked against the container header when given.
        #[arg(long, value_enum)]
        cipher: Option<CipherArg>,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Derived parameters, round counts and key length for one message length.
    Params {
        #[arg(long, value_enum)]
        cipher: CipherArg,
        #[arg(long)]
        len_bits: usize,
        /// Also print the expanded-key layout.
        #[arg(long)]
        layout: bool,
    },
    /// Influence matrix and complete-diffusion round search.
    Diffusion {
        #[arg(long, value_enum, default_value = "sp16")]
        cipher: CipherArg,
        /// 0 for the base cipher, m >= 1 for E_m.
        #[arg(long, default_value_t = 0)]
        level: u32,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeFlag,
        /// Rounds (cycles at level 0) for the printed matrix.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Expansion for level >= 1; defaults to half the left part.
        #[arg(long)]
        y: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CONTEXTS)]
        contexts: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_rounds: usize,
        /// Print the matrix as CSV (i,j,flips,contexts).
        #[arg(long)]
        csv: bool,
    },
    /// Flip-probability distinguisher against E_n.
    Distinguish {
        #[arg(long, value_enum, default_value = "sp16")]
        cipher: CipherArg,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long)]
        y: Option<usize>,
        /// E_n rounds; defaults to the full round count.
        #[arg(long)]
        rounds: Option<usize>,
        /// Override the base cipher's cycle count.
        #[arg(long)]
        base_cycles: Option<usize>,
        /// Drop whitening and the rotations.
        #[arg(long)]
        bare: bool,
        #[arg(long, default_value_t = 1 << 14)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the key-recovery reduction on the SP8 micro instance.
    ReduceDemo {
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 4)]
        s: usize,
        #[arg(long, default_value_t = 2)]
        y: usize,
        #[arg(long, default_value_t = 6)]
        seed: u64,
    },
    /// Write or check the JSON test-vector corpus.
    Vectors {
        /// Output path, `-` for stdout.
        #[arg(long, conflicts_with = "check")]
        emit: Option<PathBuf>,
        #[arg(long)]
        check: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::Encrypt {
            cipher,
            key,
            input,
            output,
        } => {
            let data = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let out = commands::encrypt_bytes(cipher.into(), &key.source()?, &data)?;
            fs::write(&output, &out).with_context(|| format!("writing {}", output.display()))?;
            Ok(Report {
                text: format!("wrote {} octets to {}\n", out.len(), output.display()),
                ok: true,
            })
        }
        Command::Decrypt {
            cipher,
            key,
            input,
            output,
        } => {
            let data = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let out = commands::decrypt_bytes(cipher.map(Into::into), &key.source()?, &data)?;
            fs::write(&output, &out).with_context(|| format!("writing {}", output.display()))?;
            Ok(Report {
                text: format!("wrote {} octets to {}\n", out.len(), output.display()),
                ok: true,
            })
        }
        Command::Params {
            cipher,
            len_bits,
            layout,
        } => commands::params(cipher.into(), len_bits, layout),
        Command::Diffusion {
            cipher,
            level,
            mode,
            rounds,
            y,
            contexts,
            seed,
            max_rounds,
            csv,
        } => commands::diffusion(&DiffusionArgs {
            cipher: cipher.into(),
            level,
            rounds,
            y,
            mode: match mode {
                ModeFlag::Auto => ModeArg::Auto,
                ModeFlag::Exhaustive => ModeArg::Exhaustive,
                ModeFlag::Sampled => ModeArg::Sampled,
            },
            contexts,
            seed,
            max_rounds,
            csv,
        }),
        Command::Distinguish {
            cipher,
            level,
            y,
            rounds,
            base_cycles,
            bare,
            trials,
            threshold,
            seed,
        } => commands::distinguish_cmd(&DistinguishArgs {
            cipher: cipher.into(),
            level,
            y,
            rounds,
            base_cycles,
            bare,
            trials,
            threshold,
            seed,
        })
        .map(|(r, _)| r),
        Command::ReduceDemo { r, s, y, seed } => {
            commands::reduce_demo(&ReduceArgs { r, s, y, seed })
        }
        Command::Vectors { emit, check } => match (emit, check) {
            (_, Some(path)) => {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let vs = vectors::parse(&text)?;
                let ok = vectors::check(&vs)?;
                Ok(Report {
                    text: format!("{ok}/{} vectors match\n", vs.len()),
                    ok: ok == vs.len(),
                })
            }
            (emit, None) => {
                let json = serde_json::to_string_pretty(&vectors::corpus()?)? + "\n";
                match emit {
                    Some(p) if p.as_os_str() != "-" => {
                        fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?;
                        Ok(Report {
                            text: format!("wrote {}\n", p.display()),
                            ok: true,
                        })
                    }
                    _ => Ok(Report {
                        text: json,
                        ok: true,
                    }),
                }
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{}", report.text);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
