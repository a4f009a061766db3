use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ecgsq::bench::{self, SweepResult, SweepSpec};
use ecgsq::corpus::{self, CorpusSource, DATA_DIR_ENV};
use ecgsq::distance::DistanceKind;
use ecgsq::gsvq::{GsvqCodebook, GsvqConfig};
use ecgsq::inlc::{BankPolicy, InlcConfig, OffsetMode};
use ecgsq::metrics::distortion_report_i16;
use ecgsq::signal::{load_wfdb_record, EcgRecord};
use ecgsq::wire::Schema;

#[derive(Parser)]
#[command(name = "ecgsq", version, about = "Lossy ECG compression benchmarks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rate-distortion sweep of one schema, as CSV.
    Sweep {
        #[arg(long)]
        schema: Schema,
        #[command(flatten)]
        input: Input,
        /// Comma-separated parameters (default: the schema's standard set).
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
        #[command(flatten)]
        inlc: InlcFlags,
        #[command(flatten)]
        output: Output,
        /// GSVQ codebook file.
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// All eight InLC variants over an eps set, as CSV.
    Variants {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// How often the fragment distance falls as fragments grow.
    Monotonicity {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "v1")]
        distance: DistanceArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a GSVQ codebook on full-length records.
    TrainCodebook {
        /// Training records (default: every record of the desk corpus source).
        #[arg(long)]
        records: Option<String>,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compress and decompress one record and print the metrics.
    Roundtrip {
        #[arg(long)]
        schema: Schema,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        param: f64,
        #[command(flatten)]
        inlc: InlcFlags,
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Also write the compressed container here.
        #[arg(long)]
        stream_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Directory, header file, or comma-separated record names under
    /// $ECGSQ_DATA_DIR (default: the desk corpus).
    #[arg(long)]
    records: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    start_s: f64,
    #[arg(long, default_value_t = 60.0)]
    dur_s: f64,
}

#[derive(Args)]
struct InlcFlags {
    #[arg(long, value_enum, default_value = "v1")]
    distance: DistanceArg,
    /// static, continuous or periodic:<seconds>.
    #[arg(long, default_value = "static")]
    bank: String,
    #[arg(long, value_enum, default_value = "go")]
    offset_mode: OffsetArg,
}

#[derive(Args)]
struct Output {
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the encode_ms and decode_ms columns.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    V1,
    V2,
}

#[derive(Clone, Copy, ValueEnum)]
enum OffsetArg {
    Go,
    Oo,
}

impl InlcFlags {
    fn config(&self) -> Result<InlcConfig> {
        let bank_policy = match self.bank.split_once(':') {
            None if self.bank == "static" => BankPolicy::Static,
            None if self.bank == "continuous" => BankPolicy::Continuous,
            Some(("periodic", s)) => BankPolicy::Periodic {
                interval_s: s.parse().with_context(|| format!("periodic interval {s:?}"))?,
            },
            _ => bail!("unknown bank policy {:?}", self.bank),
        };
        let cfg = InlcConfig {
            distance: match self.distance {
                DistanceArg::V1 => DistanceKind::V1,
                DistanceArg::V2 => DistanceKind::V2,
            },
            bank_policy,
            offset_mode: match self.offset_mode {
                OffsetArg::Go => OffsetMode::GainOffset,
                OffsetArg::Oo => OffsetMode::OffsetOnly,
            },
            ..InlcConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

fn load_input(input: &Input) -> Result<Vec<EcgRecord>> {
    match &input.records {
        None => {
            let c = corpus::desk_corpus()?;
            eprintln!("corpus: {}", c.source);
            if input.start_s != 0.0 || input.dur_s != corpus::WINDOW_S {
                eprintln!("note: --start-s/--dur-s ignored for the default desk corpus");
            }
            Ok(c.records)
        }
        Some(spec) => corpus::resolve_records(spec, data_root().as_deref())?
            .iter()
            .map(|p| {
                let r = load_wfdb_record(p)?;
                Ok(r.slice(input.start_s, input.dur_s.min(r.duration_s() - input.start_s))?)
            })
            .collect(),
    }
}

fn load_codebook(path: &Option<PathBuf>) -> Result<Option<GsvqCodebook>> {
    path.as_ref()
        .map(|p| GsvqCodebook::load(p).with_context(|| format!("loading codebook {}", p.display())))
        .transpose()
}

fn emit(result: &SweepResult, out: &Option<PathBuf>) -> Result<bool> {
    let csv = bench::to_csv(result);
    match out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    for (rec, err) in &result.failures {
        eprintln!("record {rec} failed: {err}");
    }
    Ok(result.failures.is_empty())
}

fn training_set(records: &Option<String>) -> Result<Vec<EcgRecord>> {
    match records {
        Some(spec) => Ok(corpus::resolve_records(spec, data_root().as_deref())?
            .iter()
            .map(load_wfdb_record)
            .collect::<ecgsq::Result<_>>()?),
        None => {
            let source = corpus::desk_corpus()?.source;
            eprintln!("training on: {}", match &source {
                CorpusSource::Bundled => "bundled 208x excerpt".to_string(),
                CorpusSource::MitBih(d) => format!("every record in {}", d.display()),
            });
            Ok(corpus::training_records(&source)?)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match cli.cmd {
        Cmd::Sweep {
            schema,
            input,
            params,
            inlc,
            output,
            codebook,
        } => {
            let codebook = load_codebook(&codebook)?;
            if schema == Schema::Gsvq && codebook.is_none() {
                bail!("gsvq sweeps need --codebook (see train-codebook)");
            }
            let spec = SweepSpec {
                params: params.unwrap_or_else(|| bench::default_params(schema)),
                inlc: inlc.config()?,
                timing: output.timing,
                ..SweepSpec::new(schema)
            };
            let result = bench::run_sweep(&load_input(&input)?, &spec, codebook.as_ref())?;
            emit(&result, &output.out)
        }
        Cmd::Variants { input, params, output } => {
            let eps = params.unwrap_or_else(|| bench::INLC_EPS.to_vec());
            let result = bench::run_variant_matrix(&load_input(&input)?, &eps, &InlcConfig::default(), output.timing)?;
            emit(&result, &output.out)
        }
        Cmd::Monotonicity {
            input,
            distance,
            trials,
            seed,
        } => {
            let rec = match &input.records {
                Some(_) => load_input(&input)?.remove(0),
                None => corpus::bundled_record()?,
            };
            let kind = match distance {
                DistanceArg::V1 => DistanceKind::V1,
                DistanceArg::V2 => DistanceKind::V2,
            };
            let r = bench::run_monotonicity_probe(&rec.samples, kind, trials, seed)?;
            println!("record,distance,trials,steps,non_monotone,fraction,coarse_fraction,max_violation");
            println!(
                "{},{:?},{},{},{},{},{},{}",
                rec.record_id,
                kind,
                r.trials,
                r.steps,
                r.non_monotone,
                ecgsq::metrics::format_g6(r.fraction()),
                ecgsq::metrics::format_g6(r.coarse_fraction()),
                ecgsq::metrics::format_g6(r.max_violation)
            );
            Ok(true)
        }
        Cmd::TrainCodebook { records, size, out } => {
            let recs = training_set(&records)?;
            let t = bench::train_codebook(&recs, size, &GsvqConfig::default())?;
            t.codebook.save(&out)?;
            eprintln!(
                "{} codewords of {} from {} records, final distortion {}",
                t.codebook.len(),
                t.codebook.k(),
                recs.len(),
                t.trace.last().map_or(0.0, |x| x.1)
            );
            Ok(true)
        }
        Cmd::Roundtrip {
            schema,
            input,
            param,
            inlc,
            codebook,
            stream_out,
        } => {
            let codebook = load_codebook(&codebook)?;
            let rec = load_input(&input)?.remove(0);
            let spec = SweepSpec {
                inlc: inlc.config()?,
                ..SweepSpec::new(schema)
            };
            let stream = bench::compress(&rec, &spec, param, codebook.as_ref())?;
            if let Some(p) = &stream_out {
                write_stream(p, &stream.to_bytes()?)?;
            }
            let out = stream.decompress(codebook.as_ref())?;
            let r = distortion_report_i16(&rec.samples, &out, rec.fs)?;
            let cr = ecgsq::metrics::compression_ratio(rec.len() as u64 * bench::ORIGINAL_SAMPLE_BITS, stream.total_bits() as u64)?;
            println!("record {} schema {} param {}", rec.record_id, schema, param);
            println!("messages {} bits {} cr {}", stream.messages.len(), stream.total_bits(), ecgsq::metrics::format_g6(cr));
            println!(
                "prd {} prdn {} rmse {} rmsep {} snr {} mae {} cc {}",
                r.prd,
                r.prdn,
                ecgsq::metrics::format_g6(r.rmse),
                r.rmsep,
                r.snr_db,
                ecgsq::metrics::format_g6(r.mae),
                r.cc
            );
            Ok(true)
        }
    }
}

fn write_stream(p: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
