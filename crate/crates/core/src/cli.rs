//! Command-line front end.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    evaluate_clustering, median, ClusterOptions, MetricsReport, ReportFormat, RepresentativeMode, Timings,
};
use crate::codec::{compress, decompress, deserialize, serialize, CompressedDataset};
use crate::configurator::{
    configure_matrix, ConfigureOptions, GdConfig, GreedyParams, SelectTrace, DEFAULT_ALPHA, DEFAULT_LAMBDA,
};
use crate::error::{GdError, Result};
use crate::ingest::{
    forward_transform, infer_preprocessing, ingest_csv, parse_schema, ChunkLayout, CsvOptions, HeaderMode,
    PreprocessPlan, SourceType, Table,
};
use crate::synth::household_power;

#[derive(Parser, Debug)]
#[command(
    name = "gdkit",
    version,
    about = "Generalized deduplication compression and compressed-data analytics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Select base bits and write them with the preprocessing plan as JSON.
    Configure {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        csv: CsvArgs,
        #[command(flatten)]
        greedy: GreedyArgs,
    },
    /// Compress a CSV into a GDC1 container.
    Compress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Reuse a configuration written by `configure`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        csv: CsvArgs,
        #[command(flatten)]
        greedy: GreedyArgs,
    },
    /// Restore the CSV stored in a GDC1 container.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compress, serialize, read back and compare cell by cell.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
        #[command(flatten)]
        greedy: GreedyArgs,
    },
    /// Cluster on the bases and on the raw data and report CR, ADR, AR, AMI
    /// and silhouette.
    Cluster {
        /// CSV file, or a GDC1 container (`.gdc`).
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        n_init: usize,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 10_000)]
        silhouette_sample: usize,
        #[arg(long, value_enum, default_value_t = Representative::ZeroFill)]
        representative: Representative,
        /// Scale every column to zero mean and unit variance.
        #[arg(long)]
        standardize: bool,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
        #[command(flatten)]
        csv: CsvArgs,
        #[command(flatten)]
        greedy: GreedyArgs,
    },
    /// Median CR against configuration subset size, and configuration time
    /// against column count, as CSV.
    Bench {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated subset sizes.
        #[arg(long, value_delimiter = ',')]
        subset_sizes: Vec<usize>,
        /// Time configuration on the first 1..=d columns.
        #[arg(long)]
        dims: bool,
        /// Seeded runs per point.
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[command(flatten)]
        csv: CsvArgs,
        #[command(flatten)]
        greedy: GreedyArgs,
    },
    /// Write a synthetic household power CSV.
    Generate {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 12)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Representative {
    ZeroFill,
    Midpoint,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Header {
    Auto,
    Present,
    Absent,
}

#[derive(Args, Debug, Clone)]
pub struct CsvArgs {
    /// Drop rows with missing or unparsable cells instead of failing.
    #[arg(long)]
    pub skip_bad_rows: bool,
    #[arg(long, value_enum, default_value_t = Header::Auto)]
    pub header: Header,
    /// Per-column types, e.g. `int32,float64`.
    #[arg(long)]
    pub schema: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct GreedyArgs {
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Rows sampled for the greedy search.
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl CsvArgs {
    fn options(&self) -> Result<CsvOptions> {
        Ok(CsvOptions {
            skip_bad_rows: self.skip_bad_rows,
            header: match self.header {
                Header::Auto => HeaderMode::Auto,
                Header::Present => HeaderMode::Present,
                Header::Absent => HeaderMode::Absent,
            },
            schema: self.schema.as_deref().map(parse_schema).transpose()?,
        })
    }

    fn read(&self, path: &Path) -> Result<Table> {
        let ingested = ingest_csv(path, &self.options()?)?;
        if !ingested.skipped_rows.is_empty() {
            eprintln!("skipped {} bad rows", ingested.skipped_rows.len());
        }
        let types: Vec<String> = ingested.types.iter().map(SourceType::to_string).collect();
        info!(
            "{}: {} rows, types {}",
            path.display(),
            ingested.table.n_rows(),
            types.join(",")
        );
        Ok(ingested.table)
    }
}

impl GreedyArgs {
    fn options(&self) -> ConfigureOptions {
        ConfigureOptions {
            params: GreedyParams {
                lambda: self.lambda,
                alpha: self.alpha,
            },
            subset_size: self.subset,
            seed: self.seed,
        }
    }
}

/// Configuration file written by `configure` and read by `compress`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub plan: PreprocessPlan,
    pub config: GdConfig,
    pub n: usize,
    pub n_b: usize,
    pub best_cost: f64,
    pub subset_size: Option<usize>,
    pub seed: u64,
    pub trace: SelectTrace,
}

struct Compressed {
    dataset: CompressedDataset,
    configure_seconds: f64,
    compress_seconds: f64,
}

fn configure_and_compress(table: &Table, greedy: &GreedyArgs) -> Result<Compressed> {
    let started = Instant::now();
    let plan = infer_preprocessing(table)?;
    let matrix = forward_transform(table, &plan)?;
    let layout = ChunkLayout::from_plan(&plan)?;
    let selection = configure_matrix(&matrix, &layout, &greedy.options())?;
    let configure_seconds = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let dataset = compress(&matrix, &layout, &plan, &selection.config)?;
    Ok(Compressed {
        dataset,
        configure_seconds,
        compress_seconds: started.elapsed().as_secs_f64(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|source| GdError::Read {
        path: path.to_path_buf(),
        source,
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|source| GdError::Read {
        path: path.to_path_buf(),
        source,
    })?))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn is_container(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 4];
    let mut f = open(path)?;
    Ok(io::Read::read_exact(&mut f, &mut magic).is_ok() && magic == crate::codec::MAGIC)
}

fn print_summary(cd: &CompressedDataset, c: &Compressed) {
    let cr = cd
        .compression_ratio(cd.n() as u64 * cd.l_c() as u64)
        .unwrap_or(f64::NAN);
    eprintln!(
        "n={} l_c={} l_b={} n_b={} CR={:.4} ADR={:.4} configure={:.3}s compress={:.3}s",
        cd.n(),
        cd.l_c(),
        cd.l_b(),
        cd.n_b(),
        cr,
        cd.analytics_data_ratio(),
        c.configure_seconds,
        c.compress_seconds
    );
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Configure {
            input,
            output,
            csv,
            greedy,
        } => {
            let table = csv.read(&input)?;
            let plan = infer_preprocessing(&table)?;
            let matrix = forward_transform(&table, &plan)?;
            let layout = ChunkLayout::from_plan(&plan)?;
            let selection = configure_matrix(&matrix, &layout, &greedy.options())?;
            let file = ConfigFile {
                plan,
                config: selection.config,
                n: matrix.n(),
                n_b: selection.n_b,
                best_cost: selection.best_cost,
                subset_size: greedy.subset,
                seed: greedy.seed,
                trace: selection.trace,
            };
            let mut out = sink(output.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &file)?;
            writeln!(out)?;
            out.flush()?;
        }
        Command::Compress {
            input,
            output,
            config,
            csv,
            greedy,
        } => {
            let table = csv.read(&input)?;
            let c = match config {
                Some(path) => {
                    let file: ConfigFile = serde_json::from_reader(open(&path)?)?;
                    let started = Instant::now();
                    let matrix = forward_transform(&table, &file.plan)?;
                    let layout = ChunkLayout::from_plan(&file.plan)?;
                    Compressed {
                        dataset: compress(&matrix, &layout, &file.plan, &file.config)?,
                        configure_seconds: 0.0,
                        compress_seconds: started.elapsed().as_secs_f64(),
                    }
                }
                None => configure_and_compress(&table, &greedy)?,
            };
            let mut out = create(&output)?;
            serialize(&c.dataset, &mut out)?;
            out.flush()?;
            print_summary(&c.dataset, &c);
        }
        Command::Decompress { input, output } => {
            let cd = deserialize(open(&input)?)?;
            let table = decompress(&cd)?;
            table.write_csv(sink(output.as_deref())?, false)?;
        }
        Command::Verify { input, csv, greedy } => {
            let table = csv.read(&input)?;
            let c = configure_and_compress(&table, &greedy)?;
            let mut bytes = Vec::new();
            serialize(&c.dataset, &mut bytes)?;
            let restored = decompress(&deserialize(bytes.as_slice())?)?;
            print_summary(&c.dataset, &c);
            match table.first_mismatch(&restored) {
                None => println!("lossless: true"),
                Some((row, col)) => {
                    println!("lossless: false");
                    eprintln!("first mismatch at row {row}, column {col}");
                    return Ok(1);
                }
            }
        }
        Command::Cluster {
            input,
            output,
            k,
            n_init,
            max_iter,
            repeats,
            silhouette_sample,
            representative,
            standardize,
            report,
            csv,
            greedy,
        } => {
            let (cd, configure_seconds, compress_seconds) = if is_container(&input)? {
                (deserialize(open(&input)?)?, 0.0, 0.0)
            } else {
                let c = configure_and_compress(&csv.read(&input)?, &greedy)?;
                (c.dataset, c.configure_seconds, c.compress_seconds)
            };
            let options = ClusterOptions {
                k,
                n_init,
                max_iter,
                repeats,
                seed: greedy.seed,
                silhouette_sample,
                representative: match representative {
                    Representative::ZeroFill => RepresentativeMode::ZeroFill,
                    Representative::Midpoint => RepresentativeMode::Midpoint,
                },
                standardize,
            };
            let eval = evaluate_clustering::<f64>(&cd, &options)?;
            let metrics = MetricsReport {
                cr: cd.compression_ratio(cd.n() as u64 * cd.l_c() as u64)?,
                adr: cd.analytics_data_ratio(),
                ar: eval.ar,
                ami: eval.ami,
                silhouette: eval.silhouette,
                k,
                seeds: options.seeds(),
                timings: Timings {
                    configure_seconds,
                    compress_seconds,
                    cluster_compressed_seconds: eval.compressed_seconds,
                    cluster_raw_seconds: eval.raw_seconds,
                },
            };
            let mut out = sink(output.as_deref())?;
            metrics.write(&mut out, report)?;
            out.flush()?;
        }
        Command::Bench {
            input,
            output,
            subset_sizes,
            dims,
            trials,
            csv,
            greedy,
        } => {
            if subset_sizes.is_empty() && !dims {
                return Err(GdError::InvalidParameter("give --subset-sizes and/or --dims".into()));
            }
            if trials == 0 {
                return Err(GdError::InvalidParameter("trials must be positive".into()));
            }
            let table = csv.read(&input)?;
            let mut out = sink(output.as_deref())?;
            if !subset_sizes.is_empty() {
                writeln!(out, "subset_size,median_cr,full_cr,relative_difference")?;
                for row in subset_sweep(&table, &subset_sizes, trials, &greedy)? {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        row.size, row.median_cr, row.full_cr, row.relative_difference
                    )?;
                }
            }
            if dims {
                if !subset_sizes.is_empty() {
                    writeln!(out)?;
                }
                writeln!(out, "d,median_configure_seconds")?;
                for (d, secs) in dimension_sweep(&table, trials, &greedy)? {
                    writeln!(out, "{d},{secs}")?;
                }
            }
            out.flush()?;
        }
        Command::Generate {
            output,
            rows,
            cols,
            seed,
        } => {
            household_power(rows, cols, seed).write_csv(create(&output)?, true)?;
        }
    }
    Ok(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetPoint {
    pub size: usize,
    pub median_cr: f64,
    pub full_cr: f64,
    pub relative_difference: f64,
}

/// Median container CR when the greedy search sees only `size` sampled rows,
/// next to the CR of configuring on every row.
pub fn subset_sweep(table: &Table, sizes: &[usize], trials: usize, greedy: &GreedyArgs) -> Result<Vec<SubsetPoint>> {
    let plan = infer_preprocessing(table)?;
    let matrix = forward_transform(table, &plan)?;
    let layout = ChunkLayout::from_plan(&plan)?;
    let original = matrix.n() as u64 * layout.l_c() as u64;
    let cr_for = |options: &ConfigureOptions| -> Result<f64> {
        let selection = configure_matrix(&matrix, &layout, options)?;
        compress(&matrix, &layout, &plan, &selection.config)?.compression_ratio(original)
    };
    let full_cr = cr_for(&ConfigureOptions {
        subset_size: None,
        ..greedy.options()
    })?;
    sizes
        .iter()
        .map(|&size| {
            let crs = (0..trials as u64)
                .map(|t| {
                    cr_for(&ConfigureOptions {
                        subset_size: Some(size.min(matrix.n())),
                        seed: greedy.seed.wrapping_add(t),
                        ..greedy.options()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let median_cr = median(&crs);
            Ok(SubsetPoint {
                size,
                median_cr,
                full_cr,
                relative_difference: median_cr / full_cr - 1.0,
            })
        })
        .collect()
}

/// Median configuration wall time on the first `d` columns, for every `d`.
pub fn dimension_sweep(table: &Table, trials: usize, greedy: &GreedyArgs) -> Result<Vec<(usize, f64)>> {
    (1..=table.n_cols())
        .map(|d| {
            let sub = table.truncate_columns(d);
            let times = (0..trials)
                .map(|_| {
                    let started = Instant::now();
                    let plan = infer_preprocessing(&sub)?;
                    let matrix = forward_transform(&sub, &plan)?;
                    let layout = ChunkLayout::from_plan(&plan)?;
                    configure_matrix(&matrix, &layout, &greedy.options())?;
                    Ok(started.elapsed().as_secs_f64())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((d, median(&times)))
        })
        .collect()
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GDKIT_THREADS") {
        let threads: usize = v
            .parse()
            .map_err(|_| GdError::InvalidParameter(format!("GDKIT_THREADS={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| GdError::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
