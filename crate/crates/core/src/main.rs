use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use optomech::continuation::{hysteresis_sweep, locate_folds, sweep_1d, Axis, SweepRecord, SweepResult};
use optomech::io::output::{render_records, render_summary};
use optomech::io::presets::PRESET_NAMES;
use optomech::io::{emit_records, parse_config, run_preset, OutputFormat, PresetOverrides, RunConfig};
use optomech::params::{AmplitudeConvention, Kappa2Interpretation, SignConvention};
use optomech::study::{fold_power_study, sub_unity_search};
use optomech::{solve_branches, Error, Result, StabilityRule};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Steady states and bistability of a two-cavity optomechanical system")]
struct Cli {
    /// Configuration document (TOML). Defaults to the built-in device.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; records go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    sign: Option<SignArg>,
    #[arg(long, global = true, value_enum)]
    kappa2: Option<Kappa2Arg>,
    #[arg(long, global = true, value_enum)]
    amplitude: Option<AmplitudeArg>,
    #[arg(long, global = true, value_enum)]
    rule: Option<RuleArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and classify every branch at the configured drive point.
    Solve,
    /// Run the configured [sweep].
    Sweep,
    /// Run a named figure preset.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
    },
    /// Locate folds of the [sweep] axis between its start and stop.
    Folds,
    /// Fold-power convention study and the sub-unity bistability search.
    Study,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonlines,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kappa2Arg {
    Angular,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum AmplitudeArg {
    Literal,
    Flux,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Jacobian,
    Ordering,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => "system = \"hill2012\"\n".to_string(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(s) = cli.sign {
        cfg.sign = match s {
            SignArg::Plus => SignConvention::Plus,
            SignArg::Minus => SignConvention::MinusAsPrinted,
        };
    }
    if let Some(k) = cli.kappa2 {
        cfg.kappa2 = match k {
            Kappa2Arg::Angular => Kappa2Interpretation::Angular,
            Kappa2Arg::Literal => Kappa2Interpretation::Literal,
        };
    }
    if let Some(a) = cli.amplitude {
        cfg.amplitude = match a {
            AmplitudeArg::Literal => AmplitudeConvention::Literal,
            AmplitudeArg::Flux => AmplitudeConvention::Flux,
        };
    }
    if let Some(r) = cli.rule {
        cfg.solve.rule = match r {
            RuleArg::Jacobian => StabilityRule::Jacobian,
            RuleArg::Ordering => StabilityRule::Ordering,
        };
    }
    if let Some(f) = cli.format {
        cfg.output_format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonlines => OutputFormat::JsonLines,
        };
    }
    if let Some(o) = &cli.out {
        cfg.output_path = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn write_result(cfg: &RunConfig, result: &SweepResult, notes: &[String]) -> Result<()> {
    match &cfg.output_path {
        Some(path) => {
            let bytes = emit_records(result, cfg.output_format, &cfg.solve, Path::new(path), notes)?;
            eprintln!("wrote {bytes} bytes to {path}");
        }
        None => {
            let body = render_records(result, cfg.output_format, &cfg.solve)?;
            let io = |source| Error::Io {
                path: "<stdout>".into(),
                source,
            };
            std::io::stdout().write_all(body.as_bytes()).map_err(io)?;
            eprint!("{}", render_summary(result, notes));
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("--threads: {e}")))?;
    }
    let cfg = load_config(cli)?;
    let params = cfg.system_params()?;
    match &cli.command {
        Command::Solve => {
            let drive = cfg.drive_point(&params)?;
            let branches = solve_branches(&params, &drive, &cfg.solve)?;
            if cfg.output_path.is_some() {
                let result = SweepResult {
                    axis: Axis::PowerL,
                    records: vec![SweepRecord {
                        axis_value: drive.power_l(),
                        branches: branches.clone(),
                    }],
                    folds: Vec::new(),
                    hysteresis: None,
                };
                write_result(&cfg, &result, &[])?;
            }
            println!("branch  q_s            n_p1           n_p2           stable  max_re_eig");
            for (i, b) in branches.iter().enumerate() {
                println!(
                    "{i:<7} {:<14.6e} {:<14.6e} {:<14.6e} {:<7} {:.6e}",
                    b.q_s,
                    b.n_p1,
                    b.n_p2,
                    format!("{:?}", cfg.solve.verdict(b)),
                    b.max_re_eig.unwrap_or(f64::NAN)
                );
            }
        }
        Command::Sweep => {
            let spec = cfg
                .sweep_spec(&params)?
                .ok_or_else(|| Error::Config {
                    line: 0,
                    message: "`sweep` needs a [sweep] table".into(),
                })?;
            let result = if spec.axis.is_power() {
                hysteresis_sweep(&spec, &params, &cfg.solve)?
            } else {
                sweep_1d(&spec, &params, &cfg.solve)?
            };
            write_result(&cfg, &result, &[])?;
        }
        Command::Preset { name } => {
            let overrides = match cfg.sweep {
                Some(s) => PresetOverrides {
                    range: Some((s.start, s.stop)),
                    points: Some(s.points),
                },
                None => PresetOverrides::default(),
            };
            let run = run_preset(name, &params, &cfg.solve, overrides)?;
            let out = cfg
                .output_path
                .clone()
                .unwrap_or_else(|| format!("{name}.{}", if cfg.output_format == OutputFormat::Csv { "csv" } else { "jsonl" }));
            let (paths, bytes) = run.emit(Path::new(&out), cfg.output_format, &cfg.solve)?;
            for (p, c) in paths.iter().zip(&run.curves) {
                eprintln!("{}: {} records, folds {:?}", p.display(), c.result.records.len(), c.result.folds);
                for n in &c.notes {
                    eprintln!("  note: {n}");
                }
            }
            eprintln!("wrote {bytes} bytes");
        }
        Command::Folds => {
            let sweep = cfg.sweep.ok_or_else(|| Error::Config {
                line: 0,
                message: "`folds` needs a [sweep] table for the axis and bracket".into(),
            })?;
            let base = cfg.drive_point(&params)?;
            let folds = locate_folds(&params, &base, sweep.axis, (sweep.start, sweep.stop), &cfg.solve)?;
            println!("axis = {} [{}]", sweep.axis.name(), sweep.axis.unit());
            for f in &folds {
                println!("{f:e}");
            }
        }
        Command::Study => {
            let study = fold_power_study(&cfg.solve)?;
            print!("{}", study.report());
            let lit = params.with_amplitude(AmplitudeConvention::Literal);
            let search = sub_unity_search(&lit, &cfg.solve, 1e-12, 1e-20, 2, 24)?;
            print!("{}", search.report());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
