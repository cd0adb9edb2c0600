//! Command options, JSON config files and their resolution into explicit configs.
//!
//! Every option can come from a flag or from a flat JSON object passed with
//! `--config`; flags win. A resolved config serializes back to the same flat
//! shape, so the `# config:` line of an output file can be fed to `--config`
//! to repeat the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use ststore::decoder::DecoderMode;
use ststore::dmt::Rational;
use ststore::outage::OutageScheme;
use ststore::protocol::{ChannelMode, Scheme};

use crate::CliError;

/// SNR grid in dB: `lo:hi:step` (inclusive), a comma list, or one value.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

impl FromStr for SnrGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in SNR grid {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let grid = match parts.as_slice() {
            [lo, hi, step] => {
                let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
                if step.is_nan() || step <= 0.0 || hi < lo {
                    return Err(format!("SNR grid {s:?} needs lo <= hi and step > 0"));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| round_db(lo + i as f64 * step)).collect()
            }
            [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("SNR grid {s:?} is not lo:hi:step or a list")),
        };
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(format!("SNR grid {s:?} has non-finite values"));
        }
        Ok(SnrGrid(grid))
    }
}

fn round_db(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl Serialize for SnrGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SnrGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            One(f64),
            List(Vec<f64>),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::One(x) => Ok(SnrGrid(vec![x])),
            Repr::List(v) => Ok(SnrGrid(v)),
        }
    }
}

/// Exact non-negative rational from `a/b`, an integer or a decimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalArg(pub Rational);

impl FromStr for RationalArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let bad = || format!("{s:?} is not a rational number (use a/b or a decimal)");
        let r = if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(format!("{s:?} has a zero denominator"));
            }
            Rational::new(n, d)
        } else if let Some((int, frac)) = t.split_once('.') {
            if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let scale = 10i64.pow(frac.len() as u32);
            let neg = int.starts_with('-');
            let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
            let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let mag = whole.abs().checked_mul(scale).and_then(|x| x.checked_add(f)).ok_or_else(bad)?;
            Rational::new(if neg { -mag } else { mag }, scale)
        } else {
            Rational::from_integer(t.parse().map_err(|_| bad())?)
        };
        Ok(RationalArg(r))
    }
}

impl fmt::Display for RationalArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for RationalArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(s) => s,
            Repr::Int(i) => i.to_string(),
            Repr::Float(x) => format!("{x}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairSchemes {
    #[default]
    Pair,
    Tdma,
    Both,
}

impl RepairSchemes {
    pub fn schemes(&self) -> Vec<Scheme> {
        match self {
            RepairSchemes::Pair => vec![Scheme::Pair],
            RepairSchemes::Tdma => vec![Scheme::Tdma],
            RepairSchemes::Both => vec![Scheme::Pair, Scheme::Tdma],
        }
    }
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with default option values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CommonFile {
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Common {
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DmtArgs {
    /// Number of helpers K.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
    #[arg(long)]
    pub nt: Option<u32>,
    #[arg(long)]
    pub nr: Option<u32>,
    /// Points on the r grid.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DmtConfig {
    #[serde(rename = "K")]
    pub k: u32,
    pub nt: u32,
    pub nr: u32,
    pub grid: usize,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutageArgs {
    /// tdma, pair or full-mac.
    #[arg(long)]
    pub scheme: Option<OutageScheme>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
    /// Multiplexing gain, e.g. 1/20 or 0.05.
    #[arg(long)]
    pub r: Option<RationalArg>,
    /// Rate offset in bits per channel use.
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long = "snr-db")]
    pub snr_db: Option<SnrGrid>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutageConfig {
    pub scheme: OutageScheme,
    #[serde(rename = "K")]
    pub k: u32,
    pub r: RationalArg,
    pub offset: f64,
    pub snr_db: SnrGrid,
    pub trials: u64,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Helpers per session, 1 or 2.
    #[arg(long)]
    pub users: Option<usize>,
    /// Bits per QAM symbol.
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long = "snr-db")]
    pub snr_db: Option<SnrGrid>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// sphere or ml.
    #[arg(long)]
    pub decoder: Option<DecoderMode>,
    /// rayleigh, noiseless or identity.
    #[arg(long)]
    pub channel: Option<ChannelMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateConfig {
    pub users: usize,
    pub m: u32,
    pub snr_db: SnrGrid,
    pub trials: u64,
    pub decoder: DecoderMode,
    pub channel: ChannelMode,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RepairArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Size of the stored file in bytes.
    #[arg(long = "file-bytes")]
    pub file_bytes: Option<usize>,
    #[arg(long = "snr-db")]
    pub snr_db: Option<SnrGrid>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub decoder: Option<DecoderMode>,
    #[arg(long)]
    pub channel: Option<ChannelMode>,
    #[arg(long, value_enum)]
    pub scheme: Option<RepairSchemes>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RepairConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub m: u32,
    pub file_bytes: usize,
    pub snr_db: SnrGrid,
    pub trials: u64,
    pub decoder: DecoderMode,
    pub channel: ChannelMode,
    pub scheme: RepairSchemes,
}

/// Reads `--config` and splits it into shared and command-specific options.
fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(CommonFile, T), CliError> {
    let Some(path) = path else {
        return Ok((CommonFile::default(), T::default()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
    };
    let mut common = Map::new();
    for key in ["seed", "workers", "out", "format"] {
        if let Some(v) = map.remove(key) {
            common.insert(key.into(), v);
        }
    }
    let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
    let c: CommonFile = serde_json::from_value(Value::Object(common)).map_err(bad)?;
    let t: T = serde_json::from_value(Value::Object(map)).map_err(bad)?;
    Ok((c, t))
}

fn resolve_common(flags: &CommonArgs, file: CommonFile) -> Result<Common, CliError> {
    let workers = flags
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(Common {
        seed: flags.seed.or(file.seed).unwrap_or(0),
        workers,
        out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        format: flags.format.or(file.format).unwrap_or_default(),
    })
}

macro_rules! pick {
    ($flag:expr, $file:expr, $default:expr) => {
        $flag.clone().or($file.clone()).unwrap_or($default)
    };
}

pub fn resolve_dmt(flags: &DmtArgs, common: &CommonArgs) -> Result<(Common, DmtConfig), CliError> {
    let (cf, f): (_, DmtArgs) = load_file(common.config.as_deref())?;
    let cfg = DmtConfig {
        k: pick!(flags.k, f.k, 10),
        nt: pick!(flags.nt, f.nt, 1),
        nr: pick!(flags.nr, f.nr, 2),
        grid: pick!(flags.grid, f.grid, 101),
    };
    if (cfg.nt, cfg.nr) != (1, 2) {
        return Err(CliError::Config(format!(
            "the pair scheme curve is defined for nt = 1, nr = 2, got nt = {}, nr = {}",
            cfg.nt, cfg.nr
        )));
    }
    if cfg.k < 2 || cfg.grid < 2 {
        return Err(CliError::Config("dmt needs K >= 2 and grid >= 2".into()));
    }
    Ok((resolve_common(common, cf)?, cfg))
}

fn check_grid(grid: &SnrGrid) -> Result<(), CliError> {
    if grid.0.is_empty() {
        return Err(CliError::Config("SNR grid is empty".into()));
    }
    if grid.0.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("SNR grid must be strictly ascending".into()));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    Ok(())
}

pub fn resolve_outage(flags: &OutageArgs, common: &CommonArgs) -> Result<(Common, OutageConfig), CliError> {
    let (cf, f): (_, OutageArgs) = load_file(common.config.as_deref())?;
    let cfg = OutageConfig {
        scheme: pick!(flags.scheme, f.scheme, OutageScheme::Pair),
        k: pick!(flags.k, f.k, 10),
        r: pick!(flags.r, f.r, RationalArg(Rational::from_integer(0))),
        offset: pick!(flags.offset, f.offset, 1.0),
        snr_db: pick!(flags.snr_db, f.snr_db, SnrGrid(vec![10.0, 15.0, 20.0, 25.0])),
        trials: pick!(flags.trials, f.trials, 100_000),
    };
    check_grid(&cfg.snr_db)?;
    check_trials(cfg.trials)?;
    if !cfg.offset.is_finite() {
        return Err(CliError::Config("--offset must be finite".into()));
    }
    let common = resolve_common(common, cf)?;
    crate::commands::outage_spec(&cfg, common.seed)
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((common, cfg))
}

pub fn resolve_simulate(flags: &SimulateArgs, common: &CommonArgs) -> Result<(Common, SimulateConfig), CliError> {
    let (cf, f): (_, SimulateArgs) = load_file(common.config.as_deref())?;
    let cfg = SimulateConfig {
        users: pick!(flags.users, f.users, 2),
        m: pick!(flags.m, f.m, 2),
        snr_db: pick!(flags.snr_db, f.snr_db, SnrGrid(vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])),
        trials: pick!(flags.trials, f.trials, 10_000),
        decoder: pick!(flags.decoder, f.decoder, DecoderMode::Sphere),
        channel: pick!(flags.channel, f.channel, ChannelMode::Rayleigh),
    };
    check_grid(&cfg.snr_db)?;
    check_trials(cfg.trials)?;
    if !(1..=2).contains(&cfg.users) {
        return Err(CliError::Config(format!("--users must be 1 or 2, got {}", cfg.users)));
    }
    ststore::lift::pam_levels(cfg.m).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.decoder == DecoderMode::Ml && cfg.users as u32 * 3 * cfg.m > 24 {
        return Err(CliError::Config(format!(
            "the ml decoder scans 2^{} candidates; limit is 2^24",
            cfg.users as u32 * 3 * cfg.m
        )));
    }
    Ok((resolve_common(common, cf)?, cfg))
}

pub fn resolve_repair(flags: &RepairArgs, common: &CommonArgs) -> Result<(Common, RepairConfig), CliError> {
    let (cf, f): (_, RepairArgs) = load_file(common.config.as_deref())?;
    let cfg = RepairConfig {
        n: pick!(flags.n, f.n, 6),
        k: pick!(flags.k, f.k, 3),
        d: pick!(flags.d, f.d, 5),
        m: pick!(flags.m, f.m, 2),
        file_bytes: pick!(flags.file_bytes, f.file_bytes, 600),
        snr_db: pick!(flags.snr_db, f.snr_db, SnrGrid(vec![10.0, 15.0, 20.0, 25.0, 30.0])),
        trials: pick!(flags.trials, f.trials, 1000),
        decoder: pick!(flags.decoder, f.decoder, DecoderMode::Sphere),
        channel: pick!(flags.channel, f.channel, ChannelMode::Rayleigh),
        scheme: pick!(flags.scheme, f.scheme, RepairSchemes::Pair),
    };
    check_grid(&cfg.snr_db)?;
    check_trials(cfg.trials)?;
    let common = resolve_common(common, cf)?;
    let params = crate::commands::repair_params(&cfg, common.seed).map_err(|e| CliError::Config(e.to_string()))?;
    for s in cfg.scheme.schemes() {
        params.validate(s).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.decoder == DecoderMode::Ml && 6 * s.symbol_bits(cfg.m) > 24 {
            return Err(CliError::Config("the ml decoder search space exceeds 2^24".into()));
        }
    }
    Ok((common, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("10:25:5".parse::<SnrGrid>().unwrap().0, vec![10.0, 15.0, 20.0, 25.0]);
        assert_eq!("0:1:0.1".parse::<SnrGrid>().unwrap().0.len(), 11);
        assert_eq!("0:1:0.1".parse::<SnrGrid>().unwrap().0[3], 0.3);
        assert_eq!("30".parse::<SnrGrid>().unwrap().0, vec![30.0]);
        assert_eq!("5,7.5".parse::<SnrGrid>().unwrap().0, vec![5.0, 7.5]);
        assert!("10:5:1".parse::<SnrGrid>().is_err());
        assert!("1:2:0".parse::<SnrGrid>().is_err());
        assert!("a:b".parse::<SnrGrid>().is_err());
    }

    #[test]
    fn rationals() {
        let r = |s: &str| s.parse::<RationalArg>().unwrap().0;
        assert_eq!(r("1/20"), Rational::new(1, 20));
        assert_eq!(r("0.05"), Rational::new(1, 20));
        assert_eq!(r("0"), Rational::from_integer(0));
        assert_eq!(r(".5"), Rational::new(1, 2));
        assert_eq!(r("-1.25"), Rational::new(-5, 4));
        assert!("1/0".parse::<RationalArg>().is_err());
        assert!("x".parse::<RationalArg>().is_err());
        let json: RationalArg = serde_json::from_str("0.05").unwrap();
        assert_eq!(json.0, Rational::new(1, 20));
        assert_eq!(serde_json::to_string(&json).unwrap(), "\"1/20\"");
    }

    #[test]
    fn grid_serde_round_trip() {
        let g: SnrGrid = serde_json::from_str("\"10:20:5\"").unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, "[10.0,15.0,20.0]");
        assert_eq!(serde_json::from_str::<SnrGrid>(&text).unwrap(), g);
    }
}
