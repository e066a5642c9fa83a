//! `lgfm` command-line tool.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O or
//! decode failure (or no successful batch row), 3 dimension mismatch,
//! 4 too few or degenerate records for evaluation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lgfm::batch::{self, ScoreReport};
use lgfm::config::RunConfig;
use lgfm::global::make_butterworth_mask;
use lgfm::hdr_io::pfm;
use lgfm::local::GaborBank;
use lgfm::{Encoding, Error, Lgfm, Mode, OutputFormat, Pairing};

#[derive(Parser)]
#[command(name = "lgfm", version, about = "Full-reference quality metric for HDR images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one distorted image against its reference.
    Score {
        reference: PathBuf,
        distorted: PathBuf,
        #[command(flatten)]
        opts: MetricOpts,
    },
    /// Score every row of a manifest CSV (ref_path, dist_path, mos).
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        opts: MetricOpts,
        /// Worker threads; 0 uses all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit the logistic mapping and report SROCC, KROCC and RMSE.
    Eval {
        /// Batch output (CSV or JSON), or any CSV with `q` and `mos` columns.
        scores: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Write the Gabor kernels and the Butterworth mask as PFM files.
    DumpFilters {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Image size the Butterworth mask is built for.
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
    },
}

#[derive(Args)]
struct MetricOpts {
    /// TOML config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    encoding: Option<Encoding>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    pairing: Option<Pairing>,
    /// Disable the exposure mask on local features.
    #[arg(long)]
    no_mg: bool,
    /// Disable the Butterworth mask on global features.
    #[arg(long)]
    no_mb: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    Ok(cfg)
}

impl MetricOpts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        let m = &mut cfg.metric;
        if let Some(e) = self.encoding {
            m.encoding = e;
        }
        if let Some(mode) = self.mode {
            m.similarity.mode = mode;
        }
        if let Some(p) = self.pairing {
            m.similarity.pairing = p;
        }
        if self.no_mg {
            m.use_mg = false;
        }
        if self.no_mb {
            m.use_mb = false;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        cfg.metric.validate()?;
        Ok(cfg)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Score {
            reference,
            distorted,
            opts,
        } => {
            let cfg = opts.resolve()?;
            let metric = Lgfm::new(cfg.metric.clone())?;
            let score = metric.score_files(&reference, &distorted)?;
            let mut out = output(opts.out.as_deref())?;
            ScoreReport::new(score, &cfg.metric).write(&mut out, cfg.format)?;
            out.flush()?;
        }
        Command::Batch {
            manifest,
            opts,
            threads,
        } => {
            let mut cfg = opts.resolve()?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let report = batch::run_batch(&manifest, &cfg.metric, cfg.threads)?;
            let mut out = output(opts.out.as_deref())?;
            report.write(&mut out, cfg.format)?;
            out.flush()?;
            let failed = report.rows.len() - report.succeeded();
            if failed > 0 {
                eprintln!("{failed} of {} rows failed", report.rows.len());
            }
            if report.succeeded() == 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval { scores, out, format } => {
            let (records, skipped) = batch::read_scores(&scores)?;
            if skipped > 0 {
                eprintln!("skipped {skipped} rows without a score");
            }
            let report = lgfm::eval::evaluate(&records)?;
            let mut w = output(out.as_deref())?;
            match format.unwrap_or_default() {
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut w, &report)?;
                    writeln!(w)?;
                }
                OutputFormat::Csv => {
                    let g = report.gamma;
                    writeln!(
                        w,
                        "# n={} srocc={} krocc={} rmse={} gamma={},{},{},{},{}",
                        report.n, report.srocc, report.krocc, report.rmse, g[0], g[1], g[2], g[3], g[4]
                    )?;
                    writeln!(w, "image_id,q,mos,q_mapped")?;
                    for m in &report.images {
                        writeln!(w, "{},{},{},{}", m.image_id, m.q, m.mos, m.q_mapped)?;
                    }
                }
            }
            w.flush()?;
        }
        Command::DumpFilters {
            config,
            out,
            width,
            height,
        } => {
            let cfg = load_config(config.as_deref())?;
            cfg.metric.validate()?;
            std::fs::create_dir_all(&out)?;
            let bank = GaborBank::new(&cfg.metric.gabor)?;
            for (i, (k, theta)) in bank
                .kernels()
                .iter()
                .zip(&cfg.metric.gabor.orientations)
                .enumerate()
            {
                let path = out.join(format!("gabor_{i}_theta_{:.4}.pfm", theta));
                pfm::write_plane(BufWriter::new(File::create(&path)?), k)?;
            }
            let mask = make_butterworth_mask(width, height, &cfg.metric.butterworth)?;
            let path = out.join(format!("butterworth_{width}x{height}.pfm"));
            pfm::write_plane(BufWriter::new(File::create(&path)?), &mask)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::DimensionMismatch(..)) => 3,
        Some(Error::DegenerateInput(_) | Error::LengthMismatch(..)) => 4,
        Some(
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidTable(_)
            | Error::DegenerateCoefficients,
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
