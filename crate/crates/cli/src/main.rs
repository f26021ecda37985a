use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use scatsynth::io::LengthPolicy;
use scatsynth::{DescriptorConfig, Optimizer, SynthesisConfig};
use scatsynth_cli::commands::{self, AnalyzeArgs, SynthesizeArgs};
use scatsynth_cli::exit::{self, CheckFailed};

/// Scattering-moment descriptors of audio textures, and synthesis from them.
#[derive(Parser)]
#[command(name = "scatsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LengthArgs {
    /// Zero-pad to the next power of two instead of truncating.
    #[arg(long)]
    zero_pad: bool,
}

impl LengthArgs {
    fn policy(&self) -> LengthPolicy {
        if self.zero_pad {
            LengthPolicy::ZeroPad
        } else {
            LengthPolicy::Truncate
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute descriptors of one or more WAV files.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Descriptor configuration (JSON); defaults use the file's length.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file, or directory when several inputs are given.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        length: LengthArgs,
    },
    /// Synthesize a signal matching a descriptor file.
    Synthesize {
        descriptor: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "lma")]
        optimizer: Optimizer,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Target relative descriptor error.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        /// Fixed gradient step (gd only).
        #[arg(long)]
        step: Option<f64>,
        /// Initial damping (lma only).
        #[arg(long)]
        damping: Option<f64>,
        /// Sample rate written to the WAV header.
        #[arg(long)]
        sample_rate: Option<u32>,
    },
    /// Check the filter banks and run the invariant self-tests.
    Validate {
        #[arg(long, conflicts_with = "reference")]
        config: Option<PathBuf>,
        /// Signal length when no config file is given.
        #[arg(long, default_value_t = 1 << 14)]
        length: usize,
        /// Use the reference configuration (N = 2^17 with the extra dyadic bank).
        #[arg(long)]
        reference: bool,
        #[arg(long)]
        skip_self_test: bool,
    },
    /// Render the scalogram of a WAV file as PNG.
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        length: LengthArgs,
    },
    /// Relative distance ‖a − b‖/‖b‖ between two descriptor files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Fail (exit 4) when the distance exceeds this value.
        #[arg(long)]
        max_distance: Option<f64>,
    },
    /// Re-run a synthesis manifest and check the output is bit-identical.
    Replay {
        manifest: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<Option<DescriptorConfig>> {
    path.map(|p| commands::read_config(p)).transpose()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { inputs, config, output, length } => {
            let args = AnalyzeArgs { inputs, config: load_config(config.as_ref())?, output, policy: length.policy() };
            for (path, doc) in commands::analyze(&args)? {
                let c = &doc.counts;
                println!(
                    "{}: N={} digest={} order1={} order2={} freq={} dyadic={} mean={:.6e} variance={:.6e}",
                    path.display(),
                    doc.config.signal_length,
                    doc.digest,
                    c.order1,
                    c.order2,
                    c.freq_order2,
                    c.dyadic_order1 + c.dyadic_order2,
                    doc.metadata.mean,
                    doc.metadata.variance
                );
            }
        }
        Command::Synthesize { descriptor, output, seed, optimizer, max_iter, tol, step, damping, sample_rate } => {
            let synthesis = SynthesisConfig {
                optimizer,
                step_gamma: step,
                damping_mu: damping,
                max_iterations: max_iter,
                target_relative_error: tol,
                rng_seed: seed,
                ..SynthesisConfig::default()
            };
            let report = commands::synthesize(&SynthesizeArgs { descriptor, output, synthesis, sample_rate })?;
            let m = &report.manifest;
            println!(
                "{}: {} iterations, relative error {:.4e}, {:?}; manifest {}",
                m.outputs.wav.display(),
                m.iterations,
                m.achieved_error,
                m.stop_reason,
                report.manifest_path.display()
            );
        }
        Command::Validate { config, length, reference, skip_self_test } => {
            let cfg = if reference {
                DescriptorConfig::new(1 << 17).with_dyadic_extra(true)
            } else {
                load_config(config.as_ref())?.unwrap_or_else(|| DescriptorConfig::new(length))
            };
            let report = commands::validate(&cfg, !skip_self_test)?;
            for line in &report.lines {
                println!("{line}");
            }
            if report.failures > 0 {
                return Err(CheckFailed(format!("{} validation check(s) failed", report.failures)).into());
            }
        }
        Command::Render { input, output, config, length } => {
            commands::render(&input, load_config(config.as_ref())?.as_ref(), &output, length.policy())?;
            println!("{}", output.display());
        }
        Command::Compare { a, b, max_distance } => {
            let (da, db) = (scatsynth::io::DescriptorDocument::read(&a)?, scatsynth::io::DescriptorDocument::read(&b)?);
            let cmp = commands::compare(&da, &db)?;
            println!("distance {:.6e}", cmp.distance);
            for (block, len, d) in &cmp.blocks {
                println!("  {block:?}: {len} entries, distance {d:.6e}");
            }
            if let Some(limit) = max_distance {
                if cmp.distance.is_nan() || cmp.distance > limit {
                    return Err(CheckFailed(format!("distance {:.6e} exceeds {limit:.6e}", cmp.distance)).into());
                }
            }
        }
        Command::Replay { manifest, output } => {
            let m = commands::replay(&manifest, output)?;
            println!("replay identical: {} iterations, relative error {:.4e}", m.iterations, m.achieved_error);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::SUCCESS as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e) as u8)
        }
    }
}
