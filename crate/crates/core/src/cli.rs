//! The `mamdi` command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{apply_overrides, emit_config, parse_with_overrides, ConfigDocument};
use crate::error::{Error, Result};
use crate::output::{self, Envelope, Format, Metadata};
use crate::params::{Heralding, SourceKind, SystemConfig};
use crate::presets::{preset, PresetKind, PresetName};
use crate::protocol_mc::validate;
use crate::rates::{evaluate, Protocol};
use crate::sweep::{
    find_crossover, rate_difference_objective, rate_objective, storage_time_curve,
    storage_time_objective, sweep, CrossoverKind, Grid, StorageCurve,
};

pub const EXIT_IO: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_BRACKET: u8 = 4;
pub const EXIT_MC_FAILURE: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "mamdi", version, about = "Key rates for memory-assisted MDI-QKD and its baselines")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Start from a figure preset (fig3, fig4, fig5, fig6a, fig6b).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Restrict a multi-curve preset to one curve, by index.
    #[arg(long, global = true)]
    pub curve: Option<usize>,
    /// Override one configuration key, e.g. `memory.coherence_time=1e-6`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Write to a file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Bb84,
    Mdi,
    MaMdiDirect,
    MaMdiIndirect,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Bb84 => Protocol::Bb84,
            ProtocolArg::Mdi => Protocol::Mdi,
            ProtocolArg::MaMdiDirect => Protocol::MaMdiDirect,
            ProtocolArg::MaMdiIndirect => Protocol::MaMdiIndirect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Single,
    Decoy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// Root of `R_first − R_second`.
    Rate,
    /// Root of `T_st − L/c`.
    StorageTime,
    /// Last distance with a positive key rate.
    Cutoff,
}

#[derive(Debug, Args)]
pub struct SourceOpt {
    /// Overrides `source.kind`.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one distance.
    Rate {
        #[arg(long, value_enum)]
        protocol: Vec<ProtocolArg>,
        #[command(flatten)]
        source: SourceOpt,
        /// Total distance in km, split evenly; defaults to the configured legs.
        #[arg(long)]
        distance: Option<f64>,
    },
    /// Key rates over a distance grid.
    Sweep {
        #[arg(long, value_enum)]
        protocol: Vec<ProtocolArg>,
        #[command(flatten)]
        source: SourceOpt,
        /// `START:STOP:STEP` in km; defaults to the preset grid.
        #[arg(long)]
        grid: Option<Grid>,
    },
    /// Bisection for a crossover or cut-off distance.
    Crossover {
        #[arg(long, value_enum, default_value_t = KindArg::Rate)]
        kind: KindArg,
        /// First protocol (rate, cutoff).
        #[arg(long, value_enum, default_value_t = ProtocolArg::MaMdiDirect)]
        protocol: ProtocolArg,
        /// Second protocol (rate).
        #[arg(long, value_enum, default_value_t = ProtocolArg::Bb84)]
        versus: ProtocolArg,
        #[command(flatten)]
        source: SourceOpt,
        /// `LO:HI` in km.
        #[arg(long, default_value = "1:1000")]
        bracket: String,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
    },
    /// Mean storage time next to `L/c` over a distance grid.
    StorageTime {
        #[arg(long)]
        grid: Option<Grid>,
    },
    /// Closed forms against the event-level Monte Carlo of the direct protocol.
    McValidate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
    },
    /// Dump a preset as TOML (or JSON with `--format json`).
    Preset {
        /// Preset name; falls back to `--preset`.
        name: Option<String>,
    },
}

/// A configuration together with the preset curve it came from, if any.
#[derive(Debug, Clone)]
struct Curve {
    label: Option<String>,
    config: SystemConfig,
    protocols: Vec<Protocol>,
}

struct Context {
    preset: Option<PresetName>,
    curves: Vec<Curve>,
    grid: Option<Vec<f64>>,
}

fn load(cli: &Cli) -> Result<Context> {
    if let Some(name) = &cli.preset {
        let name: PresetName = name.parse()?;
        let p = preset(name);
        let mut curves = p
            .curves
            .into_iter()
            .map(|c| {
                Ok(Curve {
                    label: Some(c.label),
                    config: apply_overrides(&c.config, &cli.overrides)?,
                    protocols: c.protocols,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = cli.curve {
            if i >= curves.len() {
                return Err(Error::config("curve", format!("preset {name} has {} curves", curves.len()), i));
            }
            curves = vec![curves.swap_remove(i)];
        }
        return Ok(Context {
            preset: Some(name),
            curves,
            grid: Some(p.grid),
        });
    }
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    Ok(Context {
        preset: None,
        curves: vec![Curve {
            label: None,
            config: parse_with_overrides(&text, &cli.overrides)?,
            protocols: vec![],
        }],
        grid: None,
    })
}

fn default_protocol(c: &SystemConfig) -> Protocol {
    match c.heralding {
        Heralding::Indirect => Protocol::MaMdiIndirect,
        _ => Protocol::MaMdiDirect,
    }
}

fn pick_protocols(requested: &[ProtocolArg], curve: &Curve) -> Vec<Protocol> {
    if !requested.is_empty() {
        requested.iter().map(|&p| p.into()).collect()
    } else if !curve.protocols.is_empty() {
        curve.protocols.clone()
    } else {
        vec![default_protocol(&curve.config)]
    }
}

fn with_source(mut c: SystemConfig, s: &SourceOpt) -> Result<SystemConfig> {
    if let Some(kind) = s.source {
        c.source.kind = match kind {
            SourceArg::Single => SourceKind::SinglePhoton,
            SourceArg::Decoy => SourceKind::Decoy,
        };
        c.validate()?;
    }
    Ok(c)
}

fn parse_bracket(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Parse(format!("bracket `{s}` is not LO:HI"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a = a.trim().parse::<f64>().map_err(|_| bad())?;
    let b = b.trim().parse::<f64>().map_err(|_| bad())?;
    Ok((a, b))
}

fn metadata(ctx: &Context, configs: Vec<ConfigDocument>, seed: Option<u64>, trials: Option<u64>) -> Metadata {
    Metadata {
        config: configs,
        preset: ctx.preset.map(|p| p.to_string()),
        seed,
        trials,
    }
}

fn docs(curves: &[Curve]) -> Vec<ConfigDocument> {
    curves.iter().map(|c| ConfigDocument::from(&c.config)).collect()
}

/// Runs one invocation and returns the text to emit plus whether every
/// Monte Carlo check passed.
fn render(cli: &Cli) -> Result<(String, bool)> {
    let format: Format = cli.format.into();
    let ctx = load(cli)?;
    let mut ok = true;
    let text = match &cli.command {
        Command::Rate {
            protocol,
            source,
            distance,
        } => {
            let mut points = Vec::new();
            let mut configs = Vec::new();
            for curve in &ctx.curves {
                let mut c = with_source(curve.config, source)?;
                if let Some(l) = distance {
                    c = c.with_total_distance(*l)?;
                }
                configs.push(ConfigDocument::from(&c));
                for p in pick_protocols(protocol, curve) {
                    points.push((c.geometry.total(), evaluate(&c, p)?));
                }
            }
            match format {
                Format::Csv => output::rate_table(&points).to_csv()?,
                Format::Json => output::to_json(&Envelope {
                    metadata: metadata(&ctx, configs, None, None),
                    result: points
                        .iter()
                        .map(|(l, r)| serde_json::json!({ "distance_km": l, "breakdown": r }))
                        .collect::<Vec<_>>(),
                }),
            }
        }
        Command::Sweep {
            protocol,
            source,
            grid,
        } => {
            let distances = grid_points(grid, &ctx)?;
            let protocols = pick_protocols(protocol, &ctx.curves[0]);
            let mut results = Vec::new();
            for curve in &ctx.curves {
                let c = with_source(curve.config, source)?;
                let mut s = sweep(&c, &pick_protocols(protocol, curve), &distances)?;
                s.metadata.preset = ctx.preset.map(|p| p.to_string());
                s.metadata.curve = curve.label.clone();
                results.push(s);
            }
            match format {
                Format::Csv => output::sweep_table(&protocols, &results).to_csv()?,
                Format::Json => output::to_json(&results),
            }
        }
        Command::Crossover {
            kind,
            protocol,
            versus,
            source,
            bracket,
            tol,
        } => {
            let bracket = parse_bracket(bracket)?;
            let mut reports = Vec::new();
            for curve in &ctx.curves {
                let c = with_source(curve.config, source)?;
                let (first, second) = (Protocol::from(*protocol), Protocol::from(*versus));
                let report = match kind {
                    KindArg::Rate => find_crossover(
                        CrossoverKind::RateCrossover,
                        &format!("{first} - {second}"),
                        rate_difference_objective(&c, first, second),
                        bracket,
                        *tol,
                    )?,
                    KindArg::StorageTime => find_crossover(
                        CrossoverKind::StorageTimeCrossover,
                        "storage_time - light_time",
                        storage_time_objective(&c),
                        bracket,
                        *tol,
                    )?,
                    KindArg::Cutoff => find_crossover(
                        CrossoverKind::RateCutoff,
                        &format!("{first}"),
                        rate_objective(&c, first),
                        bracket,
                        *tol,
                    )?,
                };
                reports.push((curve.label.clone(), report));
            }
            match format {
                Format::Csv => output::crossover_table(&reports).to_csv()?,
                Format::Json => output::to_json(&Envelope {
                    metadata: metadata(&ctx, docs(&ctx.curves), None, None),
                    result: reports
                        .iter()
                        .map(|(label, r)| serde_json::json!({ "curve": label, "report": r }))
                        .collect::<Vec<_>>(),
                }),
            }
        }
        Command::StorageTime { grid } => {
            let distances = grid_points(grid, &ctx)?;
            let curves = ctx
                .curves
                .iter()
                .map(|c| {
                    Ok(StorageCurve {
                        label: c.label.clone(),
                        config: ConfigDocument::from(&c.config),
                        points: storage_time_curve(&c.config, &distances)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match format {
                Format::Csv => output::storage_table(&curves).to_csv()?,
                Format::Json => output::to_json(&Envelope {
                    metadata: metadata(&ctx, vec![], None, None),
                    result: curves,
                }),
            }
        }
        Command::McValidate { seed, trials } => {
            // The event-level simulation models the directly heralded,
            // single-photon protocol; other settings are mapped onto it.
            let mut reports = Vec::new();
            let mut configs = Vec::new();
            for curve in &ctx.curves {
                let mut c = curve.config.with_heralding(Heralding::Direct);
                c.source.kind = SourceKind::SinglePhoton;
                let rep = validate(&c, *trials, *seed)?;
                ok &= rep.all_pass;
                configs.push(ConfigDocument::from(&c));
                reports.push((curve.label.clone(), rep));
            }
            match format {
                Format::Csv => output::validation_table(&reports).to_csv()?,
                Format::Json => output::to_json(&Envelope {
                    metadata: metadata(&ctx, configs, Some(*seed), Some(*trials)),
                    result: reports
                        .iter()
                        .map(|(label, r)| serde_json::json!({ "curve": label, "report": r }))
                        .collect::<Vec<_>>(),
                }),
            }
        }
        Command::Preset { name } => {
            let name: PresetName = name
                .as_deref()
                .or(cli.preset.as_deref())
                .ok_or_else(|| Error::Parse("preset name required".into()))?
                .parse()?;
            let mut p = preset(name);
            if let Some(i) = cli.curve {
                if i >= p.curves.len() {
                    return Err(Error::config("curve", format!("preset {name} has {} curves", p.curves.len()), i));
                }
                p.curves = vec![p.curves.swap_remove(i)];
            }
            for c in &mut p.curves {
                c.config = apply_overrides(&c.config, &cli.overrides)?;
            }
            match format {
                Format::Json => output::to_json(&p),
                Format::Csv => {
                    let mut s = String::new();
                    for (i, c) in p.curves.iter().enumerate() {
                        if p.curves.len() > 1 {
                            s.push_str(&format!("# curve {i}: {}\n", c.label));
                        }
                        s.push_str(&emit_config(&c.config));
                    }
                    if p.kind == PresetKind::Rate && p.curves.len() == 1 {
                        let names: Vec<String> = p.curves[0].protocols.iter().map(|p| p.to_string()).collect();
                        s.push_str(&format!("# protocols: {}\n", names.join(", ")));
                    }
                    s
                }
            }
        }
    };
    Ok((text, ok))
}

fn grid_points(grid: &Option<Grid>, ctx: &Context) -> Result<Vec<f64>> {
    match (grid, &ctx.grid) {
        (Some(g), _) => Ok(g.points()),
        (None, Some(g)) => Ok(g.clone()),
        (None, None) => Err(Error::Parse("--grid START:STOP:STEP is required without --preset".into())),
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io(_) => EXIT_IO,
        Error::Parse(_) | Error::UnknownPreset(_) => EXIT_PARSE,
        Error::Bracket { .. } => EXIT_BRACKET,
        _ => EXIT_DOMAIN,
    }
}

pub fn run(cli: &Cli) -> ExitCode {
    let result = render(cli).and_then(|(text, ok)| {
        output::write_output(cli.out.as_deref(), &text)?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("mamdi: Monte Carlo validation failed at 3 standard errors");
            ExitCode::from(EXIT_MC_FAILURE)
        }
        Err(e) => {
            eprintln!("mamdi: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn main() -> ExitCode {
    run(&Cli::parse())
}
