use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gabor_stretch::dump::{curve_csv, events_csv, grid_csv, mask_csv};
use gabor_stretch::eval::{run_table, to_csv, CaseKind};
use gabor_stretch::percussion::BandRule;
use gabor_stretch::pipeline::{analyze_percussion, plan, stretch_channels, Detection};
use gabor_stretch::wav::{read_wav, write_wav, WavAudio};
use gabor_stretch::{Error, MaskParams, Method, StretchConfig};

#[derive(Parser)]
#[command(
    name = "gabor-stretch",
    version,
    about = "Percussion-aware phase-vocoder time stretching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stretch a WAV file.
    Stretch {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Selebi)]
        method: MethodArg,
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the stretch report as JSON on stdout.
        #[arg(long)]
        report: bool,
    },
    /// Run the synthetic-signal error table.
    Bench {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 4.0])]
        alphas: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![MethodArg::Pv, MethodArg::Selebi])]
        methods: Vec<MethodArg>,
    },
    /// Write diagnostic CSVs (events, grid, mask, curve) for a WAV file.
    Inspect {
        input: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        dump: Vec<DumpKind>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Selebi)]
        method: MethodArg,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Pv,
    Selebi,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pv => Method::Pv,
            MethodArg::Selebi => Method::Selebi,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpKind {
    Events,
    Grid,
    Mask,
    Curve,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    Centered,
    Literal,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2048)]
    window_length: usize,
    #[arg(long, default_value_t = 128)]
    synthesis_hop: usize,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    theta_mag: f64,
    #[arg(long, default_value_t = 0.5)]
    theta_p_low: f64,
    #[arg(long, default_value_t = 0.75)]
    theta_p_high: f64,
    #[arg(long, value_enum, default_value_t = BandArg::Centered)]
    band_rule: BandArg,
    #[arg(long, default_value_t = 5)]
    median_kernel: usize,
    #[arg(long, default_value_t = 0.1)]
    min_prominence: f64,
    /// Channel driving event detection (default: mixdown of all channels).
    #[arg(long)]
    detect_channel: Option<usize>,
}

impl ConfigArgs {
    fn config(&self) -> gabor_stretch::Result<StretchConfig> {
        let cfg = StretchConfig {
            alpha: self.alpha,
            window_length: self.window_length,
            synthesis_hop: self.synthesis_hop,
            beta: self.beta,
            mask: MaskParams {
                theta_mag: self.theta_mag,
                theta_p_low: self.theta_p_low,
                theta_p_high: self.theta_p_high,
                band: match self.band_rule {
                    BandArg::Centered => BandRule::Centered,
                    BandArg::Literal => BandRule::Literal,
                },
            },
            median_kernel: self.median_kernel,
            min_prominence: self.min_prominence,
            channels: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn detection(&self) -> Detection {
        self.detect_channel.map_or(Detection::Mixdown, Detection::Channel)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stretch {
            input,
            output,
            method,
            config,
            report,
        } => cmd_stretch(&input, &output, method.into(), &config, report),
        Command::Bench { out, alphas, methods } => cmd_bench(&out, &alphas, &methods),
        Command::Inspect {
            input,
            dump,
            out,
            method,
            config,
        } => cmd_inspect(&input, &dump, &out, method.into(), &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum Failure {
    /// Bad input, configuration or path.
    Usage(String),
    /// The transform could not be inverted.
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<WavAudio, Failure> {
    let audio = read_wav(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if audio.frames() == 0 {
        return Err(Failure::Usage(format!("{}: no samples", path.display())));
    }
    Ok(audio)
}

fn cmd_stretch(input: &Path, output: &Path, method: Method, args: &ConfigArgs, report: bool) -> Result<(), Failure> {
    let cfg = args.config()?;
    let audio = load(input)?;
    let channels: Vec<&[f64]> = audio.channels.iter().map(Vec::as_slice).collect();
    let (stretched, rep) = match stretch_channels(&channels, &cfg, method, args.detection()) {
        Ok(r) => r,
        Err(e @ Error::FrameNotInvertible { .. }) => {
            let dump = dump_failed_grid(&channels, &cfg, method, args.detection(), output);
            return Err(Failure::Internal(format!("{e}; grid written to {dump}")));
        }
        Err(e) => return Err(e.into()),
    };
    let out = WavAudio {
        channels: stretched,
        sample_rate: audio.sample_rate,
        format: audio.format,
    };
    let clipped = write_wav(output, &out).map_err(|e| Failure::Usage(format!("{}: {e}", output.display())))?;
    if clipped > 0 {
        eprintln!("warning: {clipped} samples clipped to full scale");
    }
    if report {
        let json = serde_json::to_string_pretty(&rep).expect("report serializes");
        println!("{json}");
    }
    Ok(())
}

fn detection_signal(channels: &[&[f64]], detection: Detection) -> Result<Vec<f64>, Failure> {
    match detection {
        Detection::Channel(i) => channels.get(i).map(|c| c.to_vec()).ok_or_else(|| {
            Failure::Usage(format!(
                "detection channel {i} out of range ({} channels)",
                channels.len()
            ))
        }),
        Detection::Mixdown => {
            let n = channels.len() as f64;
            Ok((0..channels[0].len())
                .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / n)
                .collect())
        }
    }
}

fn dump_failed_grid(
    channels: &[&[f64]],
    cfg: &StretchConfig,
    method: Method,
    detection: Detection,
    output: &Path,
) -> String {
    let path = PathBuf::from(format!("{}.grid.csv", output.display()));
    let written = detection_signal(channels, detection)
        .ok()
        .and_then(|d| plan(&d, cfg, method).ok())
        .map(|p| fs::write(&path, grid_csv(&p.grid)).is_ok())
        .unwrap_or(false);
    if written {
        path.display().to_string()
    } else {
        "<unavailable>".into()
    }
}

fn cmd_bench(out: &Path, alphas: &[f64], methods: &[MethodArg]) -> Result<(), Failure> {
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 1.0)) {
        return Err(Failure::Usage(format!("stretch factor must be >= 1, got {a}")));
    }
    let mut ms: Vec<Method> = methods.iter().map(|&m| m.into()).collect();
    ms.dedup();
    let rows = run_table(&ms, &CaseKind::ALL, alphas)?;
    fs::write(out, to_csv(&rows)).map_err(|e| io_error(out, e))
}

fn cmd_inspect(input: &Path, dumps: &[DumpKind], out: &Path, method: Method, args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = args.config()?;
    let audio = load(input)?;
    let channels: Vec<&[f64]> = audio.channels.iter().map(Vec::as_slice).collect();
    let detect = detection_signal(&channels, args.detection())?;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let plan = plan(&detect, &cfg, method)?;
    let needs_analysis = dumps.iter().any(|d| matches!(d, DumpKind::Mask | DumpKind::Curve));
    let analysis = if needs_analysis {
        let mut padded = detect.clone();
        padded.resize(plan.padded_length, 0.0);
        Some(analyze_percussion(&padded, &cfg)?)
    } else {
        None
    };
    for kind in dumps {
        let (name, body) = match kind {
            DumpKind::Events => ("events.csv", events_csv(&plan.events, cfg.analysis_hop())),
            DumpKind::Grid => ("grid.csv", grid_csv(&plan.grid)),
            DumpKind::Mask => ("mask.csv", mask_csv(&analysis.as_ref().expect("analysed").mask)),
            DumpKind::Curve => ("curve.csv", curve_csv(&analysis.as_ref().expect("analysed").curve)),
        };
        let path = out.join(name);
        fs::write(&path, body).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}
