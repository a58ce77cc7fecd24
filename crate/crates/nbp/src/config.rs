//! Run configuration: a flat `key = value` file, overridable by flags, with
//! a stable hash of the effective settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nbp_core::battery::BatteryConfig;
use nbp_core::ivcurve::CurveWindow;
use nbp_core::pressure::{IntervalWidth, IvScale};
use nbp_core::regress::{Correction, StdErrorKind, VerdictConfig};
use nbp_core::{MaturityBucket, Moneyness, OptionType, SigmaSource, TodSlot};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{key}: {message}")]
    Value { key: String, message: String },
    #[error("{0} is required")]
    Missing(&'static str),
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Tsv,
    Json,
    Csv,
}

/// Reads `key = value` lines; `#` starts a comment, blank lines are ignored.
/// Later assignments to a key override earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, message: format!("expected key = value, found `{line}`") });
        };
        out.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_key_values(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub trades: Option<PathBuf>,
    pub spot: Option<PathBuf>,
    pub interval: IntervalWidth,
    pub sigma: SigmaSource,
    pub rate: f64,
    pub scale: IvScale,
    pub se: StdErrorKind,
    pub years: Vec<Option<(i32, i32)>>,
    pub maturities: Vec<MaturityBucket>,
    pub tods: Vec<TodSlot>,
    pub moneyness: Vec<Moneyness>,
    pub types: Vec<OptionType>,
    pub out: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
    pub curve_window: CurveWindow,
    pub level: f64,
    pub correction: Correction,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trades: None,
            spot: None,
            interval: IntervalWidth::HOUR,
            sigma: SigmaSource::Rv15,
            rate: 0.0,
            scale: IvScale::Percent,
            se: StdErrorKind::Classical,
            years: vec![None],
            maturities: vec![MaturityBucket::All],
            tods: vec![TodSlot::All],
            moneyness: vec![Moneyness::Dotm, Moneyness::Otm, Moneyness::Atm],
            types: OptionType::TRADED.to_vec(),
            out: None,
            formats: vec![ReportFormat::Tsv, ReportFormat::Json, ReportFormat::Csv],
            curve_window: CurveWindow::Weekly,
            level: 0.05,
            correction: Correction::Bonferroni,
        }
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_list<T>(key: &str, value: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let items = list(value)
        .map(|s| f(s).ok_or_else(|| bad(key, format!("unknown value `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(bad(key, "empty list"));
    }
    Ok(items)
}

fn parse_years(s: &str) -> Option<Option<(i32, i32)>> {
    if s.eq_ignore_ascii_case("all") {
        return Some(None);
    }
    match s.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (a <= b).then_some(Some((a, b)))
        }
        None => s.parse().ok().map(|y| Some((y, y))),
    }
}

fn years_label(y: Option<(i32, i32)>) -> String {
    match y {
        None => "all".into(),
        Some((a, b)) if a == b => a.to_string(),
        Some((a, b)) => format!("{a}-{b}"),
    }
}

pub fn parse_interval(s: &str) -> Option<IntervalWidth> {
    let hours: i64 = s.trim().strip_suffix('h').unwrap_or(s.trim()).parse().ok()?;
    IntervalWidth::from_hours(hours).ok()
}

pub fn parse_sigma(s: &str) -> Option<SigmaSource> {
    match s {
        "rv15" => Some(SigmaSource::Rv15),
        "rv30" => Some(SigmaSource::Rv30),
        "trade_iv" => Some(SigmaSource::TradeIv),
        _ => None,
    }
}

fn sigma_label(s: SigmaSource) -> &'static str {
    match s {
        SigmaSource::Rv15 => "rv15",
        SigmaSource::Rv30 => "rv30",
        SigmaSource::TradeIv => "trade_iv",
    }
}

pub fn parse_scale(s: &str) -> Option<IvScale> {
    match s {
        "percent" => Some(IvScale::Percent),
        "decimal" => Some(IvScale::Decimal),
        _ => None,
    }
}

pub fn parse_se(s: &str) -> Option<StdErrorKind> {
    match s {
        "classical" => Some(StdErrorKind::Classical),
        "robust" => Some(StdErrorKind::Robust),
        _ => None,
    }
}

fn parse_type(s: &str) -> Option<OptionType> {
    match s.to_ascii_lowercase().as_str() {
        "call" | "c" => Some(OptionType::Call),
        "put" | "p" => Some(OptionType::Put),
        _ => None,
    }
}

fn parse_format(s: &str) -> Option<ReportFormat> {
    match s {
        "tsv" => Some(ReportFormat::Tsv),
        "json" => Some(ReportFormat::Json),
        "csv" => Some(ReportFormat::Csv),
        _ => None,
    }
}

fn format_label(f: ReportFormat) -> &'static str {
    match f {
        ReportFormat::Tsv => "tsv",
        ReportFormat::Json => "json",
        ReportFormat::Csv => "csv",
    }
}

impl RunConfig {
    /// Applies one setting. Filter keys accept comma-separated lists.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "trades" => self.trades = Some(PathBuf::from(v)),
            "spot" => self.spot = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "interval" => self.interval = parse_interval(v).ok_or_else(|| bad(key, "expected 1h, 4h, 8h or 24h"))?,
            "sigma" => self.sigma = parse_sigma(v).ok_or_else(|| bad(key, "expected rv15, rv30 or trade_iv"))?,
            "rate" => {
                self.rate = v.parse().ok().filter(|r: &f64| r.is_finite()).ok_or_else(|| bad(key, "expected a number"))?
            }
            "scale" => self.scale = parse_scale(v).ok_or_else(|| bad(key, "expected percent or decimal"))?,
            "se" => self.se = parse_se(v).ok_or_else(|| bad(key, "expected classical or robust"))?,
            "year" | "years" => self.years = parse_list(key, v, parse_years)?,
            "maturity" => self.maturities = parse_list(key, v, MaturityBucket::parse)?,
            "tod" => self.tods = parse_list(key, v, TodSlot::parse)?,
            "moneyness" => {
                let m = parse_list(key, v, Moneyness::parse)?;
                if !m.iter().any(|k| matches!(k, Moneyness::Atm | Moneyness::Otm | Moneyness::Dotm)) {
                    return Err(bad(key, "regressions need at least one of ATM, OTM, DOTM"));
                }
                self.moneyness = m;
            }
            "type" | "types" => self.types = parse_list(key, v, parse_type)?,
            "formats" => self.formats = parse_list(key, v, parse_format)?,
            "curve_window" => {
                self.curve_window = match v {
                    "weekly" => CurveWindow::Weekly,
                    "yearly" => CurveWindow::Yearly,
                    _ => return Err(bad(key, "expected weekly or yearly")),
                }
            }
            "level" => {
                self.level = v
                    .parse()
                    .ok()
                    .filter(|l: &f64| *l > 0.0 && *l < 1.0)
                    .ok_or_else(|| bad(key, "expected a significance level in (0, 1)"))?
            }
            "correction" => {
                self.correction = match v {
                    "none" => Correction::None,
                    "bonferroni" => Correction::Bonferroni,
                    _ => return Err(bad(key, "expected none or bonferroni")),
                }
            }
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        pairs.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    /// Parses `--filters` arguments: `key=value` items separated by
    /// whitespace or `;`, e.g. `year=2019,2020;tod=asia`.
    pub fn apply_filters(&mut self, filters: &[String]) -> Result<(), ConfigError> {
        for item in filters.iter().flat_map(|f| f.split([';', ' '])).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad("filters", format!("expected key=value, found `{item}`")))?;
            match k {
                "year" | "years" | "maturity" | "tod" | "moneyness" | "type" | "types" => self.set(k, v)?,
                _ => return Err(bad("filters", format!("`{k}` is not a filter"))),
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering of every setting that affects
    /// results; output locations are excluded.
    pub fn canonical(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |items: Vec<String>| items.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "trades = {}", path(&self.trades));
        let _ = writeln!(s, "spot = {}", path(&self.spot));
        let _ = writeln!(s, "interval = {}h", self.interval.hours());
        let _ = writeln!(s, "sigma = {}", sigma_label(self.sigma));
        let _ = writeln!(s, "rate = {}", self.rate);
        let _ = writeln!(s, "scale = {}", if self.scale == IvScale::Percent { "percent" } else { "decimal" });
        let _ = writeln!(s, "se = {}", if self.se == StdErrorKind::Classical { "classical" } else { "robust" });
        let _ = writeln!(s, "years = {}", join(self.years.iter().map(|y| years_label(*y)).collect()));
        let _ = writeln!(s, "maturity = {}", join(self.maturities.iter().map(|m| m.label().to_string()).collect()));
        let _ = writeln!(s, "tod = {}", join(self.tods.iter().map(|t| t.label().to_string()).collect()));
        let _ = writeln!(s, "moneyness = {}", join(self.moneyness.iter().map(|m| m.label().to_string()).collect()));
        let _ = writeln!(s, "type = {}", join(self.types.iter().map(|t| t.label().to_string()).collect()));
        let _ = writeln!(s, "formats = {}", join(self.formats.iter().map(|f| format_label(*f).to_string()).collect()));
        let window = if self.curve_window == CurveWindow::Weekly { "weekly" } else { "yearly" };
        let _ = writeln!(s, "curve_window = {window}");
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "correction = {}", if self.correction == Correction::None { "none" } else { "bonferroni" });
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn battery(&self) -> BatteryConfig {
        BatteryConfig {
            width: self.interval,
            iv_scale: self.scale,
            se_kind: self.se,
            maturities: self.maturities.clone(),
            years: self.years.clone(),
            tods: self.tods.clone(),
            moneyness: self.moneyness.clone(),
            types: self.types.clone(),
            predictive: true,
            spillover: true,
            verdict: VerdictConfig { level: self.level, correction: self.correction, ..VerdictConfig::default() },
        }
    }

    pub fn require_inputs(&self) -> Result<(&Path, &Path), ConfigError> {
        let trades = self.trades.as_deref().ok_or(ConfigError::Missing("trades"))?;
        let spot = self.spot.as_deref().ok_or(ConfigError::Missing("spot"))?;
        Ok((trades, spot))
    }

    pub fn wants(&self, format: ReportFormat) -> bool {
        self.formats.contains(&format)
    }
}
