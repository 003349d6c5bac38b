// SPDX-License-Identifier: Apache-2.0

//! `gendergap` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gendergap::aggregate::{Grouping, ThresholdScope};
use gendergap::civil::YearRange;
use gendergap::exec::Parallelism;
use gendergap::gender::MajorityRule;
use gendergap::geo::Strategy;
use gendergap::ingest::{IngestOptions, IngestStats, InputFormat};
use gendergap::refdata::{RefData, Region};
use gendergap::report::{self, AggregateOptions, PipelineConfig};
use gendergap::synth::{self, CorpusSpec};
use gendergap::{Error, Result};

/// Gender and region breakdowns of commit histories.
#[derive(Debug, Parser)]
#[command(name = "gendergap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate commit records and write the accepted ones as NDJSON.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: StageOut,
    },
    /// Add an inferred `gender` to every accepted commit.
    Classify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        refdata: RefdataArg,
        #[command(flatten)]
        majority: MajorityArg,
        #[command(flatten)]
        out: StageOut,
    },
    /// Add an inferred `region` and `method` to every accepted commit.
    Geolocate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        refdata: RefdataArg,
        #[command(flatten)]
        strategy: StrategyArg,
        #[command(flatten)]
        out: StageOut,
    },
    /// Build cells, ratios, growth fits and charts from labelled commits.
    Aggregate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        agg: AggregateArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Redraw the charts from an existing `cells.csv`.
    Report {
        /// Loess span in (0, 1].
        #[arg(long, default_value_t = 0.75)]
        span: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run every stage end to end.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        refdata: RefdataArg,
        #[command(flatten)]
        strategy: StrategyArg,
        #[command(flatten)]
        majority: MajorityArg,
        #[command(flatten)]
        agg: AggregateArgs,
        #[command(flatten)]
        out: OutDir,
        /// Execution mode: parallel or sequential.
        #[arg(long, default_value = "parallel")]
        parallelism: Parallelism,
    },
    /// Generate a synthetic corpus with its expected outputs.
    GenCorpus {
        #[command(flatten)]
        refdata: RefdataArg,
        /// Valid commits to generate.
        #[arg(long, default_value_t = 50_000)]
        commits: usize,
        /// Years covered, as FIRST:LAST.
        #[arg(long, default_value = "2000:2020")]
        years: YearRange,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Region with a last-year dip; repeatable. Default: every region.
        #[arg(long = "dip-region")]
        dip_regions: Vec<Region>,
        /// Drop of the female share in the last year of dip regions.
        #[arg(long, default_value_t = 0.06)]
        dip: f64,
        /// Author threshold the ledger assumes.
        #[arg(long, default_value_t = 5)]
        threshold: u64,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Commit stream; `-` reads standard input.
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Input format: ndjson or gitlog.
    #[arg(long, default_value = "ndjson")]
    format: InputFormat,
    /// Year window as FIRST:LAST, within 1970:2020.
    #[arg(long, default_value = "1970:2020")]
    years: YearRange,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long)]
    strict: bool,
}

impl InputArgs {
    fn options(&self) -> Result<IngestOptions> {
        if self.years.clamp_to(&YearRange::STUDY) != Some(self.years) {
            return Err(Error::Config(format!(
                "years {} outside {}",
                self.years,
                YearRange::STUDY
            )));
        }
        Ok(IngestOptions {
            format: self.format,
            strict: self.strict,
            years: self.years,
        })
    }
}

#[derive(Debug, Args)]
struct RefdataArg {
    /// Reference-data directory.
    #[arg(long, default_value = "refdata")]
    refdata: PathBuf,
}

impl RefdataArg {
    fn load(&self) -> Result<RefData> {
        Ok(RefData::load(&self.refdata)?)
    }
}

#[derive(Debug, Args)]
struct MajorityArg {
    /// Majority denominator: gendered tokens or all tokens.
    #[arg(long, default_value = "gendered")]
    majority: MajorityRule,
}

#[derive(Debug, Args)]
struct StrategyArg {
    /// Geolocation strategy: email, tzname or mixed.
    #[arg(long, default_value = "mixed")]
    strategy: Strategy,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Minimum commits for an author to count in a cell.
    #[arg(long, default_value_t = 5)]
    threshold: u64,
    /// Where the threshold applies: per group cell or per year.
    #[arg(long, default_value = "group")]
    threshold_scope: ThresholdScope,
    /// Grouping to build (offset or region); repeatable. Default: both.
    #[arg(long = "group")]
    groups: Vec<Grouping>,
    /// Loess span in (0, 1].
    #[arg(long, default_value_t = 0.75)]
    span: f64,
    /// Years for the exponential growth fit, as FIRST:LAST.
    #[arg(long, default_value = "1971:2019")]
    fit_years: YearRange,
}

impl AggregateArgs {
    fn groupings(&self) -> Vec<Grouping> {
        if self.groups.is_empty() {
            Grouping::ALL.to_vec()
        } else {
            self.groups.clone()
        }
    }
}

#[derive(Debug, Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StageOut {
    /// Write `<stage>.ndjson` into this directory instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StageOut {
    fn writer(&self, stage: &str) -> Result<(Box<dyn Write>, PathBuf)> {
        match &self.out {
            None => Ok((Box::new(BufWriter::new(io::stdout().lock())), PathBuf::from("-"))),
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|source| Error::Output {
                    path: dir.clone(),
                    source,
                })?;
                let path = dir.join(format!("{stage}.ndjson"));
                let file = File::create(&path).map_err(|source| Error::Output {
                    path: path.clone(),
                    source,
                })?;
                Ok((Box::new(BufWriter::new(file)), path))
            }
        }
    }
}

fn log_stats(stats: &IngestStats) {
    match serde_json::to_string(stats) {
        Ok(s) => log::info!("ingest: {s}"),
        Err(e) => log::warn!("could not serialize ingest stats: {e}"),
    }
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run_stage<F>(input: &InputArgs, out: &StageOut, stage: &str, f: F) -> Result<()>
where
    F: FnOnce(Box<dyn io::BufRead>, IngestOptions, Box<dyn Write>) -> Result<IngestStats>,
{
    let opts = input.options()?;
    report::check_input(&input.input)?;
    let reader = report::open_input(&input.input)?;
    let (writer, path) = out.writer(stage)?;
    let stats = f(reader, opts, writer)?;
    log_stats(&stats);
    if path != Path::new("-") {
        print_paths(&[path]);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out } => run_stage(&input, &out, "ingested", report::ingest_stage),
        Command::Classify {
            input,
            refdata,
            majority,
            out,
        } => {
            input.options()?;
            let refs = refdata.load()?;
            run_stage(&input, &out, "classified", |r, o, w| {
                report::classify_stage(r, o, &refs, majority.majority, w)
            })
        }
        Command::Geolocate {
            input,
            refdata,
            strategy,
            out,
        } => {
            input.options()?;
            let refs = refdata.load()?;
            run_stage(&input, &out, "geolocated", |r, o, w| {
                report::geolocate_stage(r, o, &refs, strategy.strategy, w)
            })
        }
        Command::Aggregate { input, agg, out } => {
            let opts = AggregateOptions {
                ingest: input.options()?,
                threshold: agg.threshold,
                threshold_scope: agg.threshold_scope,
                groupings: agg.groupings(),
                span: agg.span,
                fit_years: agg.fit_years,
                out_dir: out.out,
            };
            report::check_input(&input.input)?;
            let (stats, paths) = report::aggregate_stage(report::open_input(&input.input)?, &opts)?;
            log_stats(&stats);
            print_paths(&paths);
            Ok(())
        }
        Command::Report { span, out } => {
            if !(span > 0.0 && span <= 1.0) {
                return Err(Error::Config(format!("span {span} outside (0, 1]")));
            }
            print_paths(&report::report_stage(&out.out, span)?);
            Ok(())
        }
        Command::Pipeline {
            input,
            refdata,
            strategy,
            majority,
            agg,
            out,
            parallelism,
        } => {
            let config = PipelineConfig {
                input: input.input.clone(),
                format: input.format,
                refdata: refdata.refdata,
                strategy: strategy.strategy,
                threshold: agg.threshold,
                threshold_scope: agg.threshold_scope,
                years: input.years,
                groupings: agg.groupings(),
                majority: majority.majority,
                span: agg.span,
                fit_years: agg.fit_years,
                out_dir: out.out,
                strict: input.strict,
                parallelism,
            };
            let summary = report::run_pipeline(&config)?;
            log_stats(&summary.stats);
            print_paths(&summary.outputs);
            Ok(())
        }
        Command::GenCorpus {
            refdata,
            commits,
            years,
            seed,
            dip_regions,
            dip,
            threshold,
            out,
        } => {
            if !(0.0..1.0).contains(&dip) {
                return Err(Error::Config(format!("dip {dip} outside [0, 1)")));
            }
            if threshold == 0 {
                return Err(Error::Config("threshold must be at least 1".into()));
            }
            let refs = refdata.load()?;
            let spec = CorpusSpec {
                commits,
                years,
                seed,
                dip_regions: if dip_regions.is_empty() {
                    Region::ALL.to_vec()
                } else {
                    dip_regions
                },
                dip,
                threshold,
                ..CorpusSpec::default()
            };
            let corpus = synth::generate(&spec, &refs)?;
            print_paths(&corpus.write_all(&out.out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
