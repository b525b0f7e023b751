use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ia_lab::channel::{dof_limits, ChannelSet};
use ia_lab::csifb::{decode_csi, encode_csi, feedback_bit_count, CompressedCsi, DecodedCsi, FeedbackConfig, SnrReference};
use ia_lab::experiment::{run_experiment, threads_from_env, write_outputs, ExperimentConfig};
use ia_lab::Error;

#[derive(Parser)]
#[command(name = "ia-lab", version, about = "Interference alignment simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration.
    Run { config: PathBuf },
    /// Encode or decode compressed CSI bitstreams.
    Codec {
        #[command(subcommand)]
        op: CodecOp,
    },
    /// Print the analog-feedback DoF limits.
    Dof {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
    },
    /// Print the angle bits per reported subcarrier.
    Bits {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 7)]
        bphi: u8,
        #[arg(long, default_value_t = 9)]
        bpsi: u8,
    },
}

#[derive(clap::Args)]
struct Scale {
    /// Noise power used for the SNR report.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Reference (probing) power used for the SNR report.
    #[arg(long, default_value_t = 1.0)]
    pref: f64,
}

impl Scale {
    fn snr_reference(&self) -> SnrReference {
        SnrReference {
            noise_power: self.noise,
            reference_power: self.pref,
        }
    }
}

#[derive(Subcommand)]
enum CodecOp {
    /// Channel-set JSON -> bitstream for one receiver.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        user: usize,
        #[arg(long, default_value_t = 7)]
        bphi: u8,
        #[arg(long, default_value_t = 9)]
        bpsi: u8,
        #[arg(long, default_value_t = 1)]
        ng: usize,
        #[command(flatten)]
        scale: Scale,
        /// Also write the code in its JSON debug form.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Bitstream -> reconstructed channel JSON.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 38)]
        subcarriers: usize,
        #[command(flatten)]
        scale: Scale,
    },
}

/// Reconstructed channels as written by `codec decode`.
#[derive(Serialize)]
struct Reconstruction {
    k_users: usize,
    rows: usize,
    cols: usize,
    reported_subcarriers: Vec<usize>,
    snr_db: Vec<Vec<f64>>,
    /// Row-major `[re, im]` entries of each reconstructed concatenated channel.
    channels: Vec<Vec<[f64; 2]>>,
}

impl From<&DecodedCsi> for Reconstruction {
    fn from(d: &DecodedCsi) -> Self {
        let first = &d.channels[0];
        Reconstruction {
            k_users: d.k_users,
            rows: first.rows(),
            cols: first.cols(),
            reported_subcarriers: d.reported_subcarriers.clone(),
            snr_db: d.snr_db.clone(),
            channels: d
                .channels
                .iter()
                .map(|h| h.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

/// Which exit status a failure maps to.
enum Failure {
    Config(String),
    Write(String),
    Other(String),
}

impl Failure {
    fn config(e: Error) -> Self {
        Failure::Config(e.to_string())
    }

    fn from_runtime(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Write(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_json(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let threads = threads_from_env().map_err(Failure::config)?;
            let out = run_experiment(&cfg, threads).map_err(Failure::from_runtime)?;
            write_outputs(&out, &cfg, &cfg.output_dir)
                .map_err(|e| Failure::Write(format!("{}: {e}", cfg.output_dir.display())))?;
            println!(
                "wrote {} result rows for {} drops to {}",
                out.results.iter().map(|r| r.users.len()).sum::<usize>(),
                cfg.drops,
                cfg.output_dir.display()
            );
        }
        Command::Codec { op } => match op {
            CodecOp::Encode {
                input,
                output,
                user,
                bphi,
                bpsi,
                ng,
                scale,
                json,
            } => {
                let channels: ChannelSet = serde_json::from_slice(&read_file(&input)?)
                    .map_err(|e| Failure::Config(format!("{}: {e}", input.display())))?;
                let fb = FeedbackConfig::new(bphi, bpsi, ng);
                fb.validate("").map_err(Failure::config)?;
                let code = encode_csi(&channels, user, &fb, &scale.snr_reference()).map_err(Failure::from_runtime)?;
                let bytes = code.to_bytes().map_err(Failure::from_runtime)?;
                write_file(&output, &bytes)?;
                if let Some(path) = json {
                    let text = serde_json::to_string_pretty(&code).map_err(|e| Failure::Other(e.to_string()))?;
                    write_file(&path, (text + "\n").as_bytes())?;
                }
            }
            CodecOp::Decode {
                input,
                output,
                subcarriers,
                scale,
            } => {
                let code = CompressedCsi::from_bytes(&read_file(&input)?, subcarriers)
                    .map_err(|e| Failure::Config(format!("{}: {e}", input.display())))?;
                let decoded = decode_csi(&code, &scale.snr_reference()).map_err(Failure::from_runtime)?;
                let text = serde_json::to_string_pretty(&Reconstruction::from(&decoded))
                    .map_err(|e| Failure::Other(e.to_string()))?;
                write_file(&output, (text + "\n").as_bytes())?;
            }
        },
        Command::Dof { k, t } => {
            let d = dof_limits(k, t).map_err(Failure::config)?;
            let best = dof_limits(d.k_opt, t).map_err(Failure::config)?;
            println!("d_sum={} k_opt={} d_sum_at_k_opt={}", d.d_sum, d.k_opt, best.d_sum);
        }
        Command::Bits { k, m, bphi, bpsi } => {
            if k == 0 || m == 0 {
                return Err(Failure::Config("k and m must be positive".into()));
            }
            let (n_b, reduced) = feedback_bit_count(k, m, &FeedbackConfig::new(bphi, bpsi, 1));
            println!("n_b={n_b} reduced={reduced}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Write(msg)) => {
            eprintln!("error: cannot write output: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
