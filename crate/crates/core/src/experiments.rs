//! Replicated Monte Carlo runs: sampling, selection for a range of penalty
//! constants, oracle losses and file output.
//!
//! Replicate `r` draws its sample with the seed `replicate_seed(base, r)`, so
//! a replicate's records never depend on which thread ran it or in what
//! order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::calibrate_from_cache;
use crate::densities::{make_density, TestDensity};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::selection::{argmin_smallest, BandwidthGrid, DistanceCache};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum BRule {
    EqualToA,
    Fixed(f64),
    /// `a` from the jump of the path over `a_values`, `b = 2a`.
    Calibrate,
}

impl FromStr for BRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" => Ok(BRule::EqualToA),
            "calibrate" => Ok(BRule::Calibrate),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|b| *b >= 0.0 && b.is_finite())
                .map(BRule::Fixed)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "b must be `a`, `calibrate` or a nonnegative number, got `{v}`"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", content = "values", rename_all = "snake_case")]
pub enum BandwidthSet {
    Sim,
    Theorem,
    Explicit(Vec<f64>),
}

impl BandwidthSet {
    pub fn resolve(&self, n: usize) -> Result<BandwidthGrid> {
        match self {
            BandwidthSet::Sim => Ok(BandwidthGrid::simulation()),
            BandwidthSet::Theorem => BandwidthGrid::theorem(n),
            BandwidthSet::Explicit(h) => BandwidthGrid::new(h.clone()),
        }
    }

    /// `sim`, `theorem`, or a path to a file of bandwidths separated by
    /// whitespace or commas.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "sim" => Ok(BandwidthSet::Sim),
            "theorem" => Ok(BandwidthSet::Theorem),
            path => {
                let text = std::fs::read_to_string(path)?;
                let values = parse_number_list(&text)?;
                BandwidthGrid::new(values.clone())?;
                Ok(BandwidthSet::Explicit(values))
            }
        }
    }
}

fn parse_number_list(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: `{t}`")))
        })
        .collect()
}

/// `min:max:step`, inclusive of `max` up to rounding.
pub fn parse_a_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "a grid must be min:max:step, got `{s}`"
        )));
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("not a number: `{t}`")))
    };
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo >= 0.0 && hi >= lo && step > 0.0 && hi.is_finite()) {
        return Err(Error::Config(format!("bad a grid `{s}`")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // rounding keeps 0.1 + 2 * 0.1 printing as 0.3
    Ok((0..count)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub density_id: u8,
    pub kernel: Kernel,
    pub n: usize,
    pub replicates: usize,
    pub a_values: Vec<f64>,
    pub b_rule: BRule,
    pub bandwidth_set: BandwidthSet,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            density_id: 1,
            kernel: Kernel::Gaussian,
            n: 1000,
            replicates: 10,
            a_values: parse_a_grid("0.1:3:0.1").expect("valid literal"),
            b_rule: BRule::EqualToA,
            bandwidth_set: BandwidthSet::Sim,
            base_seed: 0,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        make_density(self.density_id)?;
        if self.n == 0 {
            return Err(Error::InvalidSampleSize);
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.a_values.is_empty() {
            return Err(Error::Config("a_values is empty".into()));
        }
        if let Some(&a) = self
            .a_values
            .iter()
            .find(|a| !(**a >= 0.0 && a.is_finite()))
        {
            return Err(Error::InvalidPenalty(a));
        }
        if self.a_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("a_values must be strictly increasing".into()));
        }
        match self.b_rule {
            BRule::Fixed(b) if !(b >= 0.0 && b.is_finite()) => {
                return Err(Error::InvalidPenalty(b))
            }
            BRule::Calibrate if self.a_values.len() < 2 => {
                return Err(Error::PathTooShort(self.a_values.len()))
            }
            _ => {}
        }
        self.bandwidth_set.resolve(self.n)?;
        Ok(())
    }

    /// Applies one `key=value` setting. Keys mirror the command line flags:
    /// `density`, `kernel`, `n`, `replicates`, `a-grid`, `a`, `b`,
    /// `bandwidths`, `seed`, `out`, `format`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let parse_int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("`{key}` expects an integer, got `{v}`")))
        };
        match key
            .trim()
            .trim_start_matches("--")
            .replace('_', "-")
            .as_str()
        {
            "density" => {
                self.density_id = u8::try_from(parse_int(value)?)
                    .map_err(|_| Error::Config(format!("bad density `{value}`")))?
            }
            "kernel" => self.kernel = value.parse()?,
            "n" => self.n = parse_int(value)? as usize,
            "replicates" => self.replicates = parse_int(value)? as usize,
            "a-grid" => self.a_values = parse_a_grid(value)?,
            "a" => self.a_values = parse_number_list(value)?,
            "b" => self.b_rule = value.parse()?,
            "bandwidths" => self.bandwidth_set = BandwidthSet::parse(value)?,
            "seed" => self.base_seed = parse_int(value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Flat `key=value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub density_id: u8,
    pub kernel: Kernel,
    pub n: usize,
    pub replicate: usize,
    pub a: f64,
    pub b: f64,
    pub selected_h: f64,
    pub oracle_h: f64,
    pub loss_selected: f64,
    pub loss_oracle: f64,
    pub ratio: f64,
    pub h_gap: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "density_id,kernel,n,replicate,a,b,selected_h,oracle_h,loss_selected,loss_oracle,ratio,h_gap,seed";

/// Seed of replicate `r`: one splitmix64 step from `base + (r + 1)·γ`.
pub fn replicate_seed(base_seed: u64, replicate: usize) -> u64 {
    let mut z = base_seed.wrapping_add(
        (replicate as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// True losses `‖f̂_h − f‖²` for every grid bandwidth.
pub fn loss_table(
    density: &TestDensity,
    cache: &DistanceCache,
    sample: &crate::estimator::Sample,
) -> Result<Vec<f64>> {
    cache
        .grid()
        .bandwidths()
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            density.true_risk_given_norm(sample, h, cache.kernel(), cache.estimate_norm_sq(i))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Parallel,
    Sequential,
}

pub fn run_replicates(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    run_replicates_with(config, Schedule::Parallel)
}

pub fn run_replicates_with(
    config: &ExperimentConfig,
    schedule: Schedule,
) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let density = make_density(config.density_id)?;
    let grid = config.bandwidth_set.resolve(config.n)?;
    let one = |r: usize| run_one(config, &density, &grid, r, schedule);
    let per_rep: Vec<Vec<ExperimentRecord>> = match schedule {
        Schedule::Parallel => (0..config.replicates)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?,
        Schedule::Sequential => (0..config.replicates).map(one).collect::<Result<_>>()?,
    };
    Ok(per_rep.into_iter().flatten().collect())
}

fn run_one(
    config: &ExperimentConfig,
    density: &TestDensity,
    grid: &BandwidthGrid,
    replicate: usize,
    schedule: Schedule,
) -> Result<Vec<ExperimentRecord>> {
    let seed = replicate_seed(config.base_seed, replicate);
    let sample = density.sample(config.n, seed)?;
    let cache = match schedule {
        Schedule::Parallel => DistanceCache::build(&sample, grid, config.kernel)?,
        Schedule::Sequential => DistanceCache::build_sequential(&sample, grid, config.kernel)?,
    };
    let losses = loss_table(density, &cache, &sample)?;
    let oracle = argmin_smallest(losses.iter().copied());
    let h = grid.bandwidths();

    let record = |a: f64, b: f64, selected: usize| {
        let (ls, lo) = (losses[selected], losses[oracle]);
        ExperimentRecord {
            density_id: config.density_id,
            kernel: config.kernel,
            n: config.n,
            replicate,
            a,
            b,
            selected_h: h[selected],
            oracle_h: h[oracle],
            loss_selected: ls,
            loss_oracle: lo,
            ratio: if ls == lo { 1.0 } else { ls / lo },
            h_gap: h[selected] - h[oracle],
            seed,
        }
    };

    match config.b_rule {
        BRule::Calibrate => {
            let cal = calibrate_from_cache(&cache, &config.a_values)?;
            Ok(vec![record(cal.a_hat, cal.b, cal.result.argmin_index)])
        }
        ref rule => config
            .a_values
            .iter()
            .map(|&a| {
                let b = match rule {
                    BRule::Fixed(b) => *b,
                    _ => a,
                };
                let sel = cache.select_two(a, b)?;
                Ok(record(a, b, sel.argmin_index))
            })
            .collect(),
    }
}

fn records_at(records: &[ExperimentRecord], a: f64) -> Result<Vec<&ExperimentRecord>> {
    let at: Vec<_> = records.iter().filter(|r| r.a == a).collect();
    if at.is_empty() {
        Err(Error::NoRecords(a))
    } else {
        Ok(at)
    }
}

/// `C₀(a)`: mean loss ratio over the replicates at `a`.
pub fn oracle_constant(records: &[ExperimentRecord], a: f64) -> Result<f64> {
    let at = records_at(records, a)?;
    Ok(at.iter().map(|r| r.ratio).sum::<f64>() / at.len() as f64)
}

/// Median selected bandwidth over the replicates at `a` (lower median for
/// an even count).
pub fn median_selected_h(records: &[ExperimentRecord], a: f64) -> Result<f64> {
    let mut h: Vec<f64> = records_at(records, a)?
        .iter()
        .map(|r| r.selected_h)
        .collect();
    h.sort_by(f64::total_cmp);
    Ok(h[(h.len() - 1) / 2])
}

/// Fraction of replicates selecting `ĥ < 3 h_min` on the theorem bandwidth
/// set.
pub fn theorem_check(
    density_id: u8,
    kernel: Kernel,
    n: usize,
    replicates: usize,
    a: f64,
    base_seed: u64,
) -> Result<f64> {
    Ok(theorem_check_many(density_id, kernel, n, replicates, &[a], base_seed)?[0])
}

/// [`theorem_check`] for several `a` on the same samples.
pub fn theorem_check_many(
    density_id: u8,
    kernel: Kernel,
    n: usize,
    replicates: usize,
    a_values: &[f64],
    base_seed: u64,
) -> Result<Vec<f64>> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let density = make_density(density_id)?;
    let grid = BandwidthGrid::theorem(n)?;
    let threshold = 3.0 * grid.h_min();
    let collapsed: Vec<Vec<bool>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sample = density.sample(n, replicate_seed(base_seed, r))?;
            let cache = DistanceCache::build(&sample, &grid, kernel)?;
            a_values
                .iter()
                .map(|&a| Ok(cache.select(a)?.selected_h < threshold))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..a_values.len())
        .map(|k| collapsed.iter().filter(|c| c[k]).count() as f64 / replicates as f64)
        .collect())
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub config: ExperimentConfig,
    pub bandwidths: Vec<f64>,
    pub records: usize,
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub data: PathBuf,
    pub metadata: PathBuf,
}

pub fn metadata_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the records to `config.output` in `config.format`, plus a
/// `<output>.meta.json` sidecar.
pub fn emit(records: &[ExperimentRecord], config: &ExperimentConfig) -> Result<Emitted> {
    let data = config
        .output
        .clone()
        .ok_or_else(|| Error::Config("no output path".into()))?;
    let mut w = BufWriter::new(File::create(&data)?);
    match config.format {
        OutputFormat::Csv => write_csv(records, &mut w)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, records)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;

    let meta = RunMetadata {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: config.clone(),
        bandwidths: config
            .bandwidth_set
            .resolve(config.n)?
            .bandwidths()
            .to_vec(),
        records: records.len(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let metadata = metadata_path(&data);
    let mut m = BufWriter::new(File::create(&metadata)?);
    serde_json::to_writer_pretty(&mut m, &meta)?;
    m.write_all(b"\n")?;
    m.flush()?;
    Ok(Emitted { data, metadata })
}
