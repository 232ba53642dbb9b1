//! Run configuration documents.
//!
//! The format is TOML restricted to a fixed set of keys. Every frequency key
//! carries a unit suffix: `_hz` (cyclic, multiplied by 2π) or `_rad_s`
//! (angular, used as is). Powers end in `_w`. Unknown keys are rejected.
//!
//! ```toml
//! system = "hill2012"          # or an explicit [system] table
//! sign = "plus"                # "plus" | "minus"
//! kappa2 = "angular"           # "angular" | "literal"
//! amplitude = "literal"        # "literal" | "flux"
//! rule = "jacobian"            # "jacobian" | "ordering"
//!
//! [overrides]                  # only with a preset
//! g1_hz = 0.0
//!
//! [drive]
//! delta1_hz = 4e9
//! delta2_hz = 4e9
//! power_l_w = 2e-6
//! power_r_w = 1e-7
//!
//! [sweep]
//! axis = "power_l"             # delta1 | delta2 | power_l | power_r
//! start_w = 1e-12
//! stop_w = 1e-3
//! points = 400
//! direction = "both"           # up | down | both
//!
//! [tolerances]
//! imag_tol = 1e-7
//! marginal_band = 1e-9         # units of omega_m
//! ode_rel_tol = 1e-8
//!
//! [output]
//! path = "out.csv"
//! format = "csv"               # csv | jsonlines
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Range;

use toml::de::{DeTable, DeValue};
use toml::{Spanned, Table, Value};

use crate::continuation::{Axis, Direction, SweepSpec};
use crate::error::{Error, Result};
use crate::params::{
    preset_hill_params_with, AmplitudeConvention, DrivePoint, Kappa2Interpretation, SignConvention, SystemParams,
};
use crate::solver::{SolveOptions, StabilityRule};

pub const PRESET_NAME: &str = "hill2012";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonlines" => Ok(OutputFormat::JsonLines),
            other => Err(Error::InvalidArgument(format!("unknown output format `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonlines",
        }
    }
}

/// Where the device parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    /// Named preset plus angular-unit overrides keyed by field name.
    Preset {
        name: String,
        overrides: BTreeMap<String, f64>,
    },
    /// Every rate given explicitly, angular units.
    Explicit(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveConfig {
    /// rad/s; `None` means `omega_m`.
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub power_l: f64,
    pub power_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemSource,
    pub drive: DriveConfig,
    pub sweep: Option<SweepConfig>,
    pub sign: SignConvention,
    pub kappa2: Kappa2Interpretation,
    pub amplitude: AmplitudeConvention,
    pub solve: SolveOptions,
    pub output_path: Option<String>,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemSource::Preset {
                name: PRESET_NAME.into(),
                overrides: BTreeMap::new(),
            },
            drive: DriveConfig::default(),
            sweep: None,
            sign: SignConvention::Plus,
            kappa2: Kappa2Interpretation::Angular,
            amplitude: AmplitudeConvention::Literal,
            solve: SolveOptions::default(),
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

/// Rate fields of the device, in document order.
const RATE_KEYS: [&str; 9] = [
    "omega1", "omega2", "kappa1", "kappa2", "kappa_e1", "kappa_e2", "g1", "g2", "omega_m",
];

impl RunConfig {
    /// Device parameters with the conventions applied.
    pub fn system_params(&self) -> Result<SystemParams> {
        let mut p = match &self.system {
            SystemSource::Preset { overrides, .. } => {
                let mut p = preset_hill_params_with(self.kappa2);
                for (k, v) in overrides {
                    set_field(&mut p, k, *v)?;
                }
                p
            }
            SystemSource::Explicit(values) => {
                let mut p = preset_hill_params_with(self.kappa2);
                for k in RATE_KEYS.iter().chain(std::iter::once(&"q_m")) {
                    let v = values.get(*k).ok_or_else(|| Error::Config {
                        line: 0,
                        message: format!("explicit [system] is missing `{k}`"),
                    })?;
                    set_field(&mut p, k, *v)?;
                }
                p
            }
        };
        p.sign = self.sign;
        p.amplitude = self.amplitude;
        p.revalidated()
    }

    pub fn drive_point(&self, params: &SystemParams) -> Result<DrivePoint> {
        DrivePoint::new(
            params,
            self.drive.delta1.unwrap_or(params.omega_m),
            self.drive.delta2.unwrap_or(params.omega_m),
            self.drive.power_l,
            self.drive.power_r,
        )
    }

    pub fn sweep_spec(&self, params: &SystemParams) -> Result<Option<SweepSpec>> {
        let Some(s) = self.sweep else { return Ok(None) };
        let spec = SweepSpec {
            axis: s.axis,
            start: s.start,
            stop: s.stop,
            points: s.points,
            base: self.drive_point(params)?,
            direction: s.direction,
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    /// Serializes back to a document that parses to the same configuration.
    /// Frequencies are written in `_rad_s` form.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let num = |v: f64| format!("{v:e}");
        match &self.system {
            SystemSource::Preset { name, .. } => {
                let _ = writeln!(out, "system = \"{name}\"");
            }
            SystemSource::Explicit(_) => {}
        }
        let _ = writeln!(out, "sign = \"{}\"", match self.sign {
            SignConvention::Plus => "plus",
            SignConvention::MinusAsPrinted => "minus",
        });
        let _ = writeln!(out, "kappa2 = \"{}\"", match self.kappa2 {
            Kappa2Interpretation::Angular => "angular",
            Kappa2Interpretation::Literal => "literal",
        });
        let _ = writeln!(out, "amplitude = \"{}\"", match self.amplitude {
            AmplitudeConvention::Literal => "literal",
            AmplitudeConvention::Flux => "flux",
        });
        let _ = writeln!(out, "rule = \"{}\"", match self.solve.rule {
            StabilityRule::Jacobian => "jacobian",
            StabilityRule::Ordering => "ordering",
        });
        let write_rates = |out: &mut String, header: &str, values: &BTreeMap<String, f64>| {
            let _ = writeln!(out, "\n[{header}]");
            for (k, v) in values {
                if k == "q_m" {
                    let _ = writeln!(out, "q_m = {}", num(*v));
                } else {
                    let _ = writeln!(out, "{k}_rad_s = {}", num(*v));
                }
            }
        };
        match &self.system {
            SystemSource::Preset { overrides, .. } if !overrides.is_empty() => {
                write_rates(&mut out, "overrides", overrides)
            }
            SystemSource::Explicit(values) => write_rates(&mut out, "system", values),
            _ => {}
        }
        let _ = writeln!(out, "\n[drive]");
        if let Some(v) = self.drive.delta1 {
            let _ = writeln!(out, "delta1_rad_s = {}", num(v));
        }
        if let Some(v) = self.drive.delta2 {
            let _ = writeln!(out, "delta2_rad_s = {}", num(v));
        }
        let _ = writeln!(out, "power_l_w = {}", num(self.drive.power_l));
        let _ = writeln!(out, "power_r_w = {}", num(self.drive.power_r));
        if let Some(s) = self.sweep {
            let unit = if s.axis.is_power() { "w" } else { "rad_s" };
            let _ = writeln!(out, "\n[sweep]");
            let _ = writeln!(out, "axis = \"{}\"", s.axis.name());
            let _ = writeln!(out, "start_{unit} = {}", num(s.start));
            let _ = writeln!(out, "stop_{unit} = {}", num(s.stop));
            let _ = writeln!(out, "points = {}", s.points);
            let _ = writeln!(out, "direction = \"{}\"", match s.direction {
                Direction::Up => "up",
                Direction::Down => "down",
                Direction::Both => "both",
            });
        }
        let _ = writeln!(out, "\n[tolerances]");
        let _ = writeln!(out, "imag_tol = {}", num(self.solve.imag_tol));
        let _ = writeln!(out, "marginal_band = {}", num(self.solve.marginal_band));
        let _ = writeln!(out, "ode_rel_tol = {}", num(self.solve.ode_rel_tol));
        let _ = writeln!(out, "\n[output]");
        if let Some(p) = &self.output_path {
            let _ = writeln!(out, "path = {}", Value::String(p.clone()));
        }
        let _ = writeln!(out, "format = \"{}\"", self.output_format.name());
        out
    }
}

fn set_field(p: &mut SystemParams, key: &str, v: f64) -> Result<()> {
    let slot = match key {
        "omega1" => &mut p.omega1,
        "omega2" => &mut p.omega2,
        "kappa1" => &mut p.kappa1,
        "kappa2" => &mut p.kappa2,
        "kappa_e1" => &mut p.kappa_e1,
        "kappa_e2" => &mut p.kappa_e2,
        "g1" => &mut p.g1,
        "g2" => &mut p.g2,
        "omega_m" => &mut p.omega_m,
        "q_m" => &mut p.q_m,
        other => {
            return Err(Error::Config {
                line: 0,
                message: format!("unknown system field `{other}`"),
            })
        }
    };
    *slot = v;
    Ok(())
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line-aware view of the document.
struct Doc<'a> {
    text: &'a str,
    spans: BTreeMap<(String, String), Range<usize>>,
}

impl Doc<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        line_at(self.text, span.start)
    }

    fn attach(&self, section: &str, t: &Table) -> SpannedTable {
        t.iter()
            .map(|(k, v)| {
                let span = self.spans.get(&(section.to_string(), k.clone())).cloned().unwrap_or(0..0);
                (k.clone(), Spanned::new(span, v.clone()))
            })
            .collect()
    }

    fn err(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line_of(span),
            message: message.into(),
        }
    }
}

type SpannedTable = BTreeMap<String, Spanned<Value>>;

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let to_err = |e: toml::de::Error| Error::Config {
        line: e.span().map(|s| line_at(text, s.start)).unwrap_or(0),
        message: e.message().trim().to_string(),
    };
    let values: Table = toml::from_str(text).map_err(to_err)?;
    let spans = key_spans(text).map_err(to_err)?;
    let doc = Doc { text, spans };
    let root = doc.attach("", &values);
    let mut cfg = RunConfig::default();

    let mut system_preset: Option<String> = None;
    let mut explicit: Option<(Range<usize>, SpannedTable)> = None;
    let mut overrides: Option<SpannedTable> = None;

    for (key, value) in &root {
        let span = value.span();
        match key.as_str() {
            "system" => match value.get_ref() {
                Value::String(s) => {
                    if s != PRESET_NAME {
                        return Err(doc.err(span, format!("unknown preset `{s}` for key `system`")));
                    }
                    system_preset = Some(s.clone());
                }
                Value::Table(_) => explicit = Some((span.clone(), spanned_table(&doc, key, value)?)),
                _ => return Err(doc.err(span, "key `system` must be a preset name or a table")),
            },
            "overrides" => overrides = Some(spanned_table(&doc, key, value)?),
            "sign" => {
                cfg.sign = match string_value(&doc, key, value)?.as_str() {
                    "plus" => SignConvention::Plus,
                    "minus" => SignConvention::MinusAsPrinted,
                    other => return Err(doc.err(span, format!("key `sign`: expected plus|minus, got `{other}`"))),
                }
            }
            "kappa2" => {
                cfg.kappa2 = match string_value(&doc, key, value)?.as_str() {
                    "angular" => Kappa2Interpretation::Angular,
                    "literal" => Kappa2Interpretation::Literal,
                    other => {
                        return Err(doc.err(span, format!("key `kappa2`: expected angular|literal, got `{other}`")))
                    }
                }
            }
            "amplitude" => {
                cfg.amplitude = match string_value(&doc, key, value)?.as_str() {
                    "literal" => AmplitudeConvention::Literal,
                    "flux" => AmplitudeConvention::Flux,
                    other => {
                        return Err(doc.err(span, format!("key `amplitude`: expected literal|flux, got `{other}`")))
                    }
                }
            }
            "rule" => {
                cfg.solve.rule = match string_value(&doc, key, value)?.as_str() {
                    "jacobian" => StabilityRule::Jacobian,
                    "ordering" => StabilityRule::Ordering,
                    other => {
                        return Err(doc.err(span, format!("key `rule`: expected jacobian|ordering, got `{other}`")))
                    }
                }
            }
            "drive" => parse_drive(&doc, &spanned_table(&doc, key, value)?, &mut cfg)?,
            "sweep" => cfg.sweep = Some(parse_sweep(&doc, span.clone(), &spanned_table(&doc, key, value)?, cfg.kappa2)?),
            "tolerances" => parse_tolerances(&doc, &spanned_table(&doc, key, value)?, &mut cfg.solve)?,
            "output" => parse_output(&doc, &spanned_table(&doc, key, value)?, &mut cfg)?,
            other => return Err(doc.err(span, format!("unknown key `{other}`"))),
        }
    }

    // `kappa2` may appear after the system tables, so rate tables are read last.
    cfg.system = match (system_preset, explicit) {
        (Some(_), Some((span, _))) => {
            return Err(doc.err(span, "give either `system = \"hill2012\"` or a [system] table, not both"))
        }
        (None, None) => return Err(Error::Config { line: 0, message: "missing key `system`".into() }),
        (Some(name), None) => SystemSource::Preset {
            name,
            overrides: match &overrides {
                Some(t) => parse_rates(&doc, t, cfg.kappa2, false)?,
                None => BTreeMap::new(),
            },
        },
        (None, Some((_, t))) => {
            if overrides.is_some() {
                return Err(Error::Config {
                    line: 0,
                    message: "[overrides] only applies to a preset system".into(),
                });
            }
            SystemSource::Explicit(parse_rates(&doc, &t, cfg.kappa2, true)?)
        }
    };
    cfg.system_params()?;
    Ok(cfg)
}

/// Span of every key, indexed by (enclosing table, key).
fn key_spans(text: &str) -> std::result::Result<BTreeMap<(String, String), Range<usize>>, toml::de::Error> {
    fn walk(prefix: &str, t: &DeTable<'_>, out: &mut BTreeMap<(String, String), Range<usize>>) {
        for (k, v) in t.iter() {
            let name = k.get_ref().to_string();
            out.insert((prefix.to_string(), name.clone()), k.span());
            if let DeValue::Table(inner) = v.get_ref() {
                if prefix.is_empty() {
                    walk(&name, inner, out);
                }
            }
        }
    }
    let table = DeTable::parse(text)?;
    let mut out = BTreeMap::new();
    walk("", table.get_ref(), &mut out);
    Ok(out)
}

fn spanned_table(doc: &Doc, key: &str, value: &Spanned<Value>) -> Result<SpannedTable> {
    match value.get_ref() {
        Value::Table(t) => Ok(doc.attach(key, t)),
        _ => Err(doc.err(value.span(), format!("key `{key}` must be a table"))),
    }
}

fn string_value(doc: &Doc, key: &str, value: &Spanned<Value>) -> Result<String> {
    match value.get_ref() {
        Value::String(s) => Ok(s.clone()),
        _ => Err(doc.err(value.span(), format!("key `{key}` must be a string"))),
    }
}

fn number_value(doc: &Doc, key: &str, value: &Spanned<Value>) -> Result<f64> {
    let v = match value.get_ref() {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(doc.err(value.span(), format!("key `{key}` must be a number"))),
    };
    if !v.is_finite() {
        return Err(doc.err(value.span(), format!("key `{key}` must be finite")));
    }
    Ok(v)
}

/// Splits `name_hz` / `name_rad_s` into the field name and its value in rad/s.
fn frequency_key<'k>(
    doc: &Doc,
    key: &'k str,
    value: &Spanned<Value>,
    kappa2: Kappa2Interpretation,
) -> Result<Option<(&'k str, f64)>> {
    let (base, cyclic) = if let Some(b) = key.strip_suffix("_hz") {
        (b, true)
    } else if let Some(b) = key.strip_suffix("_rad_s") {
        (b, false)
    } else {
        return Ok(None);
    };
    let v = number_value(doc, key, value)?;
    let literal_kappa2 = base == "kappa2" && kappa2 == Kappa2Interpretation::Literal;
    let rad = if cyclic && !literal_kappa2 { 2.0 * PI * v } else { v };
    Ok(Some((base, rad)))
}

fn parse_rates(doc: &Doc, t: &SpannedTable, kappa2: Kappa2Interpretation, explicit: bool) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, value) in t {
        let span = value.span();
        if key == "q_m" {
            let v = number_value(doc, key, value)?;
            if v <= 0.0 {
                return Err(doc.err(span, format!("key `{key}` must be > 0")));
            }
            out.insert("q_m".to_string(), v);
            continue;
        }
        let Some((base, v)) = frequency_key(doc, key, value, kappa2)? else {
            if RATE_KEYS.contains(&key.as_str()) {
                return Err(doc.err(span, format!("key `{key}` needs a unit suffix `_hz` or `_rad_s`")));
            }
            return Err(doc.err(span, format!("unknown key `{key}`")));
        };
        if !RATE_KEYS.contains(&base) {
            return Err(doc.err(span, format!("unknown key `{key}`")));
        }
        let coupling = base == "g1" || base == "g2";
        if v < 0.0 || (!coupling && v == 0.0) {
            return Err(doc.err(span, format!("key `{key}` must be {}", if coupling { ">= 0" } else { "> 0" })));
        }
        if out.insert(base.to_string(), v).is_some() {
            return Err(doc.err(span, format!("key `{key}` duplicates `{base}`")));
        }
    }
    if explicit {
        for k in RATE_KEYS.iter().chain(std::iter::once(&"q_m")) {
            if !out.contains_key(*k) {
                return Err(Error::Config {
                    line: 0,
                    message: format!("explicit [system] is missing `{k}`"),
                });
            }
        }
    }
    Ok(out)
}

fn parse_drive(doc: &Doc, t: &SpannedTable, cfg: &mut RunConfig) -> Result<()> {
    for (key, value) in t {
        let span = value.span();
        match key.as_str() {
            "power_l_w" | "power_r_w" => {
                let v = number_value(doc, key, value)?;
                if v < 0.0 {
                    return Err(doc.err(span, format!("key `{key}` must be >= 0")));
                }
                if key == "power_l_w" {
                    cfg.drive.power_l = v;
                } else {
                    cfg.drive.power_r = v;
                }
            }
            _ => {
                // Detunings are signed; only the suffix is checked.
                let (base, cyclic) = if let Some(b) = key.strip_suffix("_hz") {
                    (b, true)
                } else if let Some(b) = key.strip_suffix("_rad_s") {
                    (b, false)
                } else if key == "delta1" || key == "delta2" {
                    return Err(doc.err(span, format!("key `{key}` needs a unit suffix `_hz` or `_rad_s`")));
                } else {
                    return Err(doc.err(span, format!("unknown key `{key}`")));
                };
                let v = number_value(doc, key, value)?;
                let v = if cyclic { 2.0 * PI * v } else { v };
                match base {
                    "delta1" => cfg.drive.delta1 = Some(v),
                    "delta2" => cfg.drive.delta2 = Some(v),
                    _ => return Err(doc.err(span, format!("unknown key `{key}`"))),
                }
            }
        }
    }
    Ok(())
}

fn parse_sweep(doc: &Doc, table_span: Range<usize>, t: &SpannedTable, _kappa2: Kappa2Interpretation) -> Result<SweepConfig> {
    let mut axis = None;
    let mut start = None;
    let mut stop = None;
    let mut points = crate::continuation::FIGURE_POINTS;
    let mut direction = Direction::Up;
    for (key, value) in t {
        let span = value.span();
        match key.as_str() {
            "axis" => {
                axis = Some(
                    string_value(doc, key, value)?
                        .parse::<Axis>()
                        .map_err(|e| doc.err(span.clone(), e.to_string()))?,
                )
            }
            "points" => match value.get_ref() {
                Value::Integer(i) if *i >= 2 => points = *i as usize,
                _ => return Err(doc.err(span, "key `points` must be an integer >= 2")),
            },
            "direction" => {
                direction = match string_value(doc, key, value)?.as_str() {
                    "up" => Direction::Up,
                    "down" => Direction::Down,
                    "both" => Direction::Both,
                    other => return Err(doc.err(span, format!("key `direction`: expected up|down|both, got `{other}`"))),
                }
            }
            k if k.starts_with("start_") || k.starts_with("stop_") => {
                let (which, unit) = k.split_once('_').unwrap();
                let v = number_value(doc, key, value)?;
                let v = match unit {
                    "w" => (v, true),
                    "hz" => (2.0 * PI * v, false),
                    "rad_s" => (v, false),
                    _ => return Err(doc.err(span, format!("unknown key `{key}`"))),
                };
                if which == "start" {
                    start = Some((v, span));
                } else {
                    stop = Some((v, span));
                }
            }
            other => return Err(doc.err(span, format!("unknown key `{other}`"))),
        }
    }
    let axis = axis.ok_or_else(|| doc.err(table_span.clone(), "[sweep] is missing `axis`"))?;
    let bound = |b: Option<((f64, bool), Range<usize>)>, name: &str| -> Result<f64> {
        let ((v, is_power), span) = b.ok_or_else(|| doc.err(table_span.clone(), format!("[sweep] is missing `{name}`")))?;
        if is_power != axis.is_power() {
            return Err(doc.err(span, format!("`{name}` unit does not match axis `{}`", axis.name())));
        }
        Ok(v)
    };
    let start = bound(start, "start")?;
    let stop = bound(stop, "stop")?;
    if start == stop {
        return Err(doc.err(table_span, "[sweep] start equals stop"));
    }
    Ok(SweepConfig {
        axis,
        start,
        stop,
        points,
        direction,
    })
}

fn parse_tolerances(doc: &Doc, t: &SpannedTable, solve: &mut SolveOptions) -> Result<()> {
    for (key, value) in t {
        let v = number_value(doc, key, value)?;
        if v <= 0.0 {
            return Err(doc.err(value.span(), format!("key `{key}` must be > 0")));
        }
        match key.as_str() {
            "imag_tol" => solve.imag_tol = v,
            "marginal_band" => solve.marginal_band = v,
            "ode_rel_tol" => solve.ode_rel_tol = v,
            other => return Err(doc.err(value.span(), format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}

fn parse_output(doc: &Doc, t: &SpannedTable, cfg: &mut RunConfig) -> Result<()> {
    for (key, value) in t {
        match key.as_str() {
            "path" => cfg.output_path = Some(string_value(doc, key, value)?),
            "format" => {
                cfg.output_format = string_value(doc, key, value)?
                    .parse()
                    .map_err(|e: Error| doc.err(value.span(), e.to_string()))?
            }
            other => return Err(doc.err(value.span(), format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}
