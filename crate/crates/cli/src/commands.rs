use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use idse::eval::{bd_rate, output_plane, run_named_experiment, RdCurve, EXPERIMENT_NAMES};
use idse::sketch::{read_sketch, sketch_extractor, write_sketch};
use idse::{decode, load_pgm, save_pgm, Encoder, MetricConfig, ToyFeatureExtractor};

#[derive(Debug, Parser)]
#[command(name = "idse", version, about = "Block codec with sketched-Jacobian RDO")]
pub struct Cli {
    /// Worker threads for block-parallel stages (0 = all cores).
    #[arg(long, global = true, env = "IDSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FeName {
    Identity,
    #[value(name = "blur_down")]
    BlurDown,
    #[value(name = "conv_relu_conv")]
    ConvReluConv,
}

impl FeName {
    fn as_str(self) -> &'static str {
        match self {
            FeName::Identity => "identity",
            FeName::BlurDown => "blur_down",
            FeName::ConvReluConv => "conv_relu_conv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Sse,
    Idse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Quality {
    Psnr,
    Fd,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sketch the Jacobian of a toy feature extractor at an image.
    Sketch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        fe: FeName,
        /// Sketch rows.
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
        ns: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a PGM image to an IDS1 bitstream.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(i32).range(0..=63))]
        qp: i32,
        #[arg(long, value_enum, default_value_t = Metric::Sse)]
        metric: Metric,
        /// SKJ1 sketch file (required for idse).
        #[arg(long)]
        sketch: Option<PathBuf>,
        /// SSE regularization weight; 0 disables it.
        #[arg(long, default_value_t = idse::rdo::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = idse::rdo::DEFAULT_LAMBDA_C)]
        lambda_c: f64,
        /// Also report feature distance of the output under this extractor.
        #[arg(long, value_enum)]
        fe: Option<FeName>,
        #[arg(long)]
        out: PathBuf,
        /// Frame statistics followed by per-block decisions.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Decode an IDS1 bitstream to an 8-bit PGM.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the importance map diag(J^T J) of a sketch as a 16-bit PGM.
    Analyze {
        #[arg(long)]
        sketch: PathBuf,
        #[arg(long)]
        out_map: PathBuf,
    },
    /// Run a named experiment and write its tables.
    Experiment {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENT_NAMES))]
        name: String,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// BD-rate between two sets of encode stats files (one RD point each).
    Bdrate {
        #[arg(long = "ref", required = true, num_args = 1..)]
        reference: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        test: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Quality::Psnr)]
        quality: Quality,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(idse::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<idse::Error> for CliError {
    fn from(e: idse::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Sketch { input, fe, ns, seed, out } => cmd_sketch(&input, fe, ns as usize, seed, &out),
        Command::Encode {
            input,
            qp,
            metric,
            sketch,
            alpha,
            lambda_c,
            fe,
            out,
            stats,
        } => {
            let mut cfg = match metric {
                Metric::Sse => MetricConfig::sse(),
                Metric::Idse => MetricConfig::idse(),
            };
            cfg = cfg.with_alpha(alpha).with_lambda_c(lambda_c);
            if metric == Metric::Idse && sketch.is_none() {
                return Err(CliError::Usage("--metric idse requires --sketch".into()));
            }
            cmd_encode(&input, qp, cfg, sketch.as_deref(), fe, &out, stats.as_deref())
        }
        Command::Decode { input, out } => cmd_decode(&input, &out),
        Command::Analyze { sketch, out_map } => {
            let j = read_sketch(&sketch)?;
            fs::write(out_map, j.importance_map().to_pgm16())?;
            Ok(())
        }
        Command::Experiment { name, seed, out_dir } => {
            fs::create_dir_all(&out_dir)?;
            for (file, contents) in run_named_experiment(&name, seed)? {
                fs::write(out_dir.join(&file), contents)?;
                println!("{}", out_dir.join(file).display());
            }
            Ok(())
        }
        Command::Bdrate { reference, test, quality } => {
            let r = stats_curve("ref", &reference, quality)?;
            let t = stats_curve("test", &test, quality)?;
            println!("{:.4}", bd_rate(&r, &t)?);
            Ok(())
        }
    }
}

fn cmd_sketch(input: &Path, fe: FeName, ns: usize, seed: u64, out: &Path) -> CliResult {
    let x = load_pgm(input)?;
    let fe = ToyFeatureExtractor::by_name(fe.as_str(), x.width(), x.height())?;
    let j = sketch_extractor(&fe, &x, ns, seed)?;
    write_sketch(out, &j)?;
    Ok(())
}

fn cmd_encode(
    input: &Path,
    qp: i32,
    cfg: MetricConfig,
    sketch: Option<&Path>,
    fe: Option<FeName>,
    out: &Path,
    stats: Option<&Path>,
) -> CliResult {
    let x = load_pgm(input)?;
    let j = sketch.map(read_sketch).transpose()?;
    let extractor = fe
        .map(|f| ToyFeatureExtractor::by_name(f.as_str(), x.width(), x.height()))
        .transpose()?;
    let mut enc = Encoder::new(cfg);
    if let Some(j) = &j {
        j.check_grid(&x)?;
        enc = enc.with_jacobian(j);
    }
    if let Some(fe) = &extractor {
        enc = enc.with_extractor(fe);
    }
    let encoded = enc.encode(&x, qp)?;
    fs::write(out, &encoded.bitstream)?;
    if let Some(path) = stats {
        let mut s = encoded.stats.to_records();
        s.push_str(&encoded.decision.to_records());
        fs::write(path, s)?;
    }
    Ok(())
}

fn cmd_decode(input: &Path, out: &Path) -> CliResult {
    let plane = decode(&fs::read(input)?)?;
    save_pgm(out, &output_plane(&plane))?;
    Ok(())
}

/// Reads `# key=value` header lines of an encode stats file.
fn stats_value(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.trim().parse().ok())
}

fn stats_curve(label: &str, files: &[PathBuf], quality: Quality) -> CliResult<RdCurve> {
    let key = match quality {
        Quality::Psnr => "psnr",
        Quality::Fd => "feature_distance",
    };
    let mut rates = Vec::new();
    let mut values = Vec::new();
    for f in files {
        let text = fs::read_to_string(f)?;
        let missing = |k: &str| CliError::Core(idse::Error::Format(format!("{}: no '{k}' entry", f.display())));
        rates.push(stats_value(&text, "bpp").ok_or_else(|| missing("bpp"))?);
        values.push(stats_value(&text, key).ok_or_else(|| missing(key))?);
    }
    Ok(match quality {
        Quality::Psnr => RdCurve::from_pairs(label, &rates, &values)?,
        Quality::Fd => RdCurve::from_distortions(label, &rates, &values)?,
    })
}
