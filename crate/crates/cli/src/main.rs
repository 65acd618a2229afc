//! `ebcert`: generate channel files, analyze them, and certify or refute
//! entanglement breaking.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 numerical inconsistency,
//! 4 refuted (not entanglement breaking), 5 out of scope. With several input
//! files the largest code is returned.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ebcert_core::format::{write_channel, CertificateFile};
use ebcert_core::zoo::{
    depolarizing, random_channel, random_projection_choi_channel, random_unit_vectors,
    schur_channel, schur_complement_channel, werner_holevo, CorrelationMatrix,
    ProjectionChoiFamily,
};
use ebcert_core::{Error, KrausChannel, ToleranceConfig};
use rayon::prelude::*;

use report::{kraus_summary, process, render_text, Processed, Stage, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "ebcert", version, about = "Entanglement-breaking certificates for quantum channels")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolArgs {
    /// Relative singular-value cutoff for rank decisions
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_rank: f64,
    /// Eigenvalue clustering radius
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_eig: f64,
    /// Residual bound for verification checks
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_verify: f64,
    /// Seed for every random choice
    #[arg(long, global = true, env = "EBCERT_SEED", default_value_t = 0)]
    seed: u64,
    /// Generic-element draws before giving up
    #[arg(long, global = true, default_value_t = 8)]
    max_resample: usize,
}

impl TolArgs {
    fn config(&self) -> ToleranceConfig {
        ToleranceConfig {
            eps_rank: self.tol_rank,
            eps_eig: self.tol_eig,
            eps_verify: self.tol_verify,
            seed: self.seed,
            max_resample: self.max_resample,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Schur,
    SchurComplement,
    WernerHolevo,
    Depolarizing,
    Random,
    RandomProjectionChoi,
    Identity,
}

#[derive(Subcommand)]
enum Command {
    /// Write a channel from a named family as JSON
    Gen {
        family: Family,
        /// Input dimension
        #[arg(long)]
        n: Option<usize>,
        /// Output dimension
        #[arg(long)]
        m: Option<usize>,
        /// Dimension (werner-holevo) or Kraus count (random)
        #[arg(long)]
        d: Option<usize>,
        /// Rank of the correlation matrix (schur)
        #[arg(long)]
        rank: Option<usize>,
        /// Draw from the entanglement-breaking subfamily (random-projection-choi)
        #[arg(long)]
        eb: bool,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choi classification, complement and multiplicative-domain structure
    Analyze(Inputs),
    /// Certify or refute entanglement breaking
    Certify {
        #[command(flatten)]
        inputs: Inputs,
        /// Certificate output: a file for one input, a directory for several
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Schur normal form (V, C) of a certified channel
    NormalForm {
        #[command(flatten)]
        inputs: Inputs,
        /// Previously written certificate to verify instead of certifying again
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Inputs {
    /// Channel JSON files
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = cli.tol.config();
    if let Err(e) = tol.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    let code = match cli.command {
        Command::Gen { family, n, m, d, rank, eb, out } => {
            cmd_gen(family, GenParams { n, m, d, rank, eb }, out.as_deref(), &tol)
        }
        Command::Analyze(inputs) => batch(&inputs, Stage::Analyze, None, &tol, |_, _| Ok(())),
        Command::Certify { inputs, out } => {
            let several = inputs.files.len() > 1;
            if let (Some(dir), true) = (&out, several) {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    eprintln!("error: cannot create {}: {e}", dir.display());
                    return ExitCode::from(EXIT_INPUT as u8);
                }
            }
            batch(&inputs, Stage::Certify, None, &tol, |input, p| {
                let (Some(dest), Some(cert)) = (&out, &p.certificate) else {
                    return Ok(());
                };
                let path = if several { certificate_path(dest, input) } else { dest.clone() };
                let json = serde_json::to_string_pretty(&CertificateFile::from_certificate(cert))
                    .expect("certificate serializes");
                std::fs::write(&path, json).map_err(|e| format!("cannot write {}: {e}", path.display()))
            })
        }
        Command::NormalForm { inputs, certificate } => {
            let prior = match certificate.as_deref().map(read_certificate).transpose() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(report::exit_code(&e) as u8);
                }
            };
            batch(&inputs, Stage::NormalForm, prior.as_ref(), &tol, |_, _| Ok(()))
        }
    };
    ExitCode::from(code as u8)
}

fn certificate_path(dir: &Path, input: &Path) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dir.join(format!("{stem}.cert.json"))
}

fn read_certificate(path: &Path) -> Result<ebcert_core::EbCertificate, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let file: CertificateFile =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("certificate JSON: {e}")))?;
    file.to_certificate()
}

/// Process every input in parallel and print reports in input order.
fn batch(
    inputs: &Inputs,
    stage: Stage,
    prior: Option<&ebcert_core::EbCertificate>,
    tol: &ToleranceConfig,
    after: impl Fn(&Path, &Processed) -> Result<(), String> + Sync,
) -> i32 {
    let results: Vec<(Processed, Result<(), String>)> = inputs
        .files
        .par_iter()
        .map(|f| {
            let p = process(f, stage, prior, tol);
            let written = after(f, &p);
            (p, written)
        })
        .collect();
    let mut code = 0;
    for (_, written) in &results {
        if let Err(e) = written {
            eprintln!("error: {e}");
            code = code.max(EXIT_INPUT);
        }
    }
    match inputs.format {
        Format::Json => {
            let reports: Vec<_> = results.iter().map(|(p, _)| &p.report).collect();
            println!("{}", serde_json::to_string_pretty(&reports).expect("report serializes"));
        }
        Format::Text => {
            for (p, _) in &results {
                print!("{}", render_text(&p.report));
            }
        }
    }
    results.iter().map(|(p, _)| p.exit_code).fold(code, i32::max)
}

struct GenParams {
    n: Option<usize>,
    m: Option<usize>,
    d: Option<usize>,
    rank: Option<usize>,
    eb: bool,
}

fn require(v: Option<usize>, flag: &str) -> Result<usize, Error> {
    match v {
        Some(0) => Err(Error::Format(format!("--{flag} must be positive"))),
        Some(x) => Ok(x),
        None => Err(Error::Format(format!("missing --{flag}"))),
    }
}

fn generate(family: Family, p: &GenParams, tol: &ToleranceConfig) -> Result<KrausChannel, Error> {
    let seed = tol.seed;
    match family {
        Family::Schur => {
            let n = require(p.n, "n")?;
            let c = CorrelationMatrix::random(n, p.rank.unwrap_or(n), seed, tol)?;
            schur_channel(&c, tol)
        }
        Family::SchurComplement => {
            let (n, m) = (require(p.n, "n")?, require(p.m, "m")?);
            schur_complement_channel(&random_unit_vectors(n, m, seed), tol)
        }
        Family::WernerHolevo => werner_holevo(require(p.d.or(p.n), "d")?, tol),
        Family::Depolarizing => depolarizing(require(p.n, "n")?, tol),
        Family::Random => {
            let n = require(p.n, "n")?;
            random_channel(n, p.m.unwrap_or(n), require(p.d, "d")?, seed, tol)
        }
        Family::RandomProjectionChoi => {
            let n = require(p.n, "n")?;
            let family = if p.eb { ProjectionChoiFamily::EntanglementBreaking } else { ProjectionChoiFamily::Generic };
            random_projection_choi_channel(n, p.m.unwrap_or(n), seed, family, tol)
        }
        Family::Identity => Ok(KrausChannel::identity(require(p.n, "n")?)),
    }
}

fn cmd_gen(family: Family, p: GenParams, out: Option<&Path>, tol: &ToleranceConfig) -> i32 {
    let ch = match generate(family, &p, tol) {
        Ok(ch) => ch,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::ConstructionFailure(_) | Error::ConvergenceFailure(_) => report::EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            };
        }
    };
    let json = write_channel(&ch);
    let name = family.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
            println!("{name}: {} -> {}", kraus_summary(&ch), path.display());
        }
        None => {
            println!("{json}");
            eprintln!("{name}: {}", kraus_summary(&ch));
        }
    }
    0
}
