//! Synthetic noise benchmark: corrupt a synthetic pair over a grid of noise
//! levels, run each preset, score against the reference.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::metrics::MetricReport;
use crate::pipeline::{detect, PipelineConfig, Preset};
use crate::raster::{
    add_salt_pepper, add_speckle, make_synthetic_pair, NoiseKind, NoiseSpec, Raster,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,noise_kind,level,seed,oe,pcc,kc,rmse,psnr";
pub const DEFAULT_REPEATS: usize = 5;
/// Base seed used when none is given.
pub const DEFAULT_BASE_SEED: u64 = 1;
pub const DEFAULT_SIZE: usize = 256;
pub const SALT_PEPPER_LEVELS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];
pub const SPECKLE_LEVELS: [f64; 4] = [0.10, 0.20, 0.30, 0.40];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    /// `(kind, level)` cells, each run `repeats` times.
    pub grid: Vec<(NoiseKind, f64)>,
    pub repeats: usize,
    pub base_seed: u64,
    pub size: usize,
    pub methods: Vec<(String, PipelineConfig)>,
}

impl BenchmarkPlan {
    /// Full grid, five repeats, 256x256, all three presets.
    pub fn new(base_seed: u64) -> Self {
        let grid = SALT_PEPPER_LEVELS
            .iter()
            .map(|&d| (NoiseKind::SaltPepper, d))
            .chain(SPECKLE_LEVELS.iter().map(|&v| (NoiseKind::Speckle, v)))
            .collect();
        Self {
            grid,
            repeats: DEFAULT_REPEATS,
            base_seed,
            size: DEFAULT_SIZE,
            methods: Preset::ALL
                .iter()
                .map(|p| (p.to_string(), p.config()))
                .collect(),
        }
    }

    pub fn with_methods(mut self, presets: &[Preset]) -> Self {
        self.methods = presets
            .iter()
            .map(|p| (p.to_string(), p.config()))
            .collect();
        self
    }

    pub fn with_grid(mut self, grid: Vec<(NoiseKind, f64)>) -> Self {
        self.grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() || self.grid.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark plan has no methods or no noise levels".into(),
            ));
        }
        for &(kind, level) in &self.grid {
            NoiseSpec::new(kind, level, 0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub kind: NoiseKind,
    pub level: f64,
    /// `base_seed + repeat`.
    pub seed: u64,
    /// `Err` holds the failure message of a run that produced no map.
    pub outcome: std::result::Result<MetricReport, String>,
}

/// Seed for one noise draw, `base_seed ^ h(kind, level, repeat, image)`.
pub fn noise_seed(
    base_seed: u64,
    kind: NoiseKind,
    level: f64,
    repeat: usize,
    image_index: usize,
) -> u64 {
    let mut h = splitmix(kind as u64 + 1);
    h = splitmix(h ^ level.to_bits());
    h = splitmix(h ^ repeat as u64);
    h = splitmix(h ^ image_index as u64);
    base_seed ^ h
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn corrupt(r: &Raster, kind: NoiseKind, level: f64, seed: u64) -> Result<Raster> {
    match kind {
        NoiseKind::SaltPepper => add_salt_pepper(r, level, seed),
        NoiseKind::Speckle => add_speckle(r, level, seed),
    }
}

/// Runs every (cell, repeat, method) combination. Rows come back sorted by
/// method, noise kind, level and seed, independent of scheduling.
pub fn run_benchmark(plan: &BenchmarkPlan) -> Result<Vec<BenchRow>> {
    plan.validate()?;
    let jobs: Vec<(NoiseKind, f64, usize)> = plan
        .grid
        .iter()
        .flat_map(|&(kind, level)| (0..plan.repeats).map(move |rep| (kind, level, rep)))
        .collect();

    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(kind, level, rep)| run_cell(plan, kind, level, rep))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.kind.as_str().cmp(b.kind.as_str()))
            .then(a.level.total_cmp(&b.level))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

fn run_cell(
    plan: &BenchmarkPlan,
    kind: NoiseKind,
    level: f64,
    rep: usize,
) -> Result<Vec<BenchRow>> {
    let pair = make_synthetic_pair(plan.size, plan.size, plan.base_seed)?;
    let before = corrupt(
        &pair.before,
        kind,
        level,
        noise_seed(plan.base_seed, kind, level, rep, 0),
    )?;
    let after = corrupt(
        &pair.after,
        kind,
        level,
        noise_seed(plan.base_seed, kind, level, rep, 1),
    )?;
    let seed = plan.base_seed.wrapping_add(rep as u64);
    Ok(plan
        .methods
        .iter()
        .map(|(name, config)| {
            let outcome = detect(&before, &after, config)
                .and_then(|d| MetricReport::evaluate(&d.map, &pair.reference))
                .map_err(|e| e.to_string());
            if let Err(msg) = &outcome {
                log::warn!("{name} {kind} {level} seed {seed}: {msg}");
            }
            BenchRow {
                method: name.clone(),
                kind,
                level,
                seed,
                outcome,
            }
        })
        .collect())
}

/// `%g`-style rendering with six significant digits.
pub fn format_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn kc_cell(kc: Option<f64>) -> String {
    kc.map_or_else(|| "nan".into(), format_g6)
}

/// The `oe,pcc,kc,rmse,psnr` cells of one CSV row.
pub fn metric_cells(m: &MetricReport) -> String {
    format!(
        "{},{},{},{},{}",
        format_g6(m.oe_percent),
        format_g6(m.pcc_percent),
        kc_cell(m.kc),
        format_g6(m.rmse),
        format_g6(m.psnr_db)
    )
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let prefix = format!(
            "{},{},{},{}",
            row.method,
            row.kind,
            format_g6(row.level),
            row.seed
        );
        match &row.outcome {
            Ok(m) => writeln!(out, "{prefix},{}", metric_cells(m))?,
            Err(_) => writeln!(out, "{prefix},error,error,error,error,error")?,
        }
    }
    Ok(())
}

/// Per-method averages of one noise cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAverage {
    pub method: String,
    pub kind: NoiseKind,
    pub level: f64,
    pub runs: usize,
    pub oe: f64,
    pub pcc: f64,
    /// Mean over the runs where kappa is defined; `None` if there are none.
    pub kc: Option<f64>,
    pub rmse: f64,
    pub psnr: f64,
}

/// Arithmetic means over successful runs, grouped by (kind, level, method).
/// Returns the averages and the number of excluded error rows.
pub fn averages(rows: &[BenchRow]) -> (Vec<CellAverage>, usize) {
    #[derive(Default)]
    struct Acc {
        n: usize,
        oe: f64,
        pcc: f64,
        kc: f64,
        kc_n: usize,
        rmse: f64,
        psnr: f64,
    }
    let mut groups: BTreeMap<(&str, u64, &str), (NoiseKind, f64, Acc)> = BTreeMap::new();
    let mut errors = 0;
    for row in rows {
        let Ok(m) = &row.outcome else {
            errors += 1;
            continue;
        };
        let key = (row.kind.as_str(), row.level.to_bits(), row.method.as_str());
        let (_, _, acc) = groups
            .entry(key)
            .or_insert_with(|| (row.kind, row.level, Acc::default()));
        acc.n += 1;
        acc.oe += m.oe_percent;
        acc.pcc += m.pcc_percent;
        if let Some(k) = m.kc {
            acc.kc += k;
            acc.kc_n += 1;
        }
        acc.rmse += m.rmse;
        acc.psnr += m.psnr_db;
    }
    let mut out: Vec<CellAverage> = groups
        .into_iter()
        .map(|((_, _, method), (kind, level, a))| {
            let n = a.n as f64;
            CellAverage {
                method: method.to_string(),
                kind,
                level,
                runs: a.n,
                oe: a.oe / n,
                pcc: a.pcc / n,
                kc: (a.kc_n > 0).then(|| a.kc / a.kc_n as f64),
                rmse: a.rmse / n,
                psnr: a.psnr / n,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.kind
            .as_str()
            .cmp(b.kind.as_str())
            .then(a.level.total_cmp(&b.level))
            .then(a.method.cmp(&b.method))
    });
    (out, errors)
}

/// Plain-text table: one block per noise level, one line per method.
pub fn emit_summary(rows: &[BenchRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter(
            "no benchmark rows to summarize".into(),
        ));
    }
    let (cells, errors) = averages(rows);
    let mut s = String::new();
    let header = format!(
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "method", "OE", "PCC", "KC", "RMSE", "PSNR"
    );
    let mut current: Option<(NoiseKind, u64)> = None;
    for c in &cells {
        if current != Some((c.kind, c.level.to_bits())) {
            if current.is_some() {
                s.push('\n');
            }
            let _ = writeln!(s, "{} {}", c.kind, format_g6(c.level));
            let _ = writeln!(s, "{header}");
            current = Some((c.kind, c.level.to_bits()));
        }
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            c.method,
            format_g6(c.oe),
            format_g6(c.pcc),
            kc_cell(c.kc),
            format_g6(c.rmse),
            format_g6(c.psnr)
        );
    }
    if errors > 0 {
        let _ = writeln!(s, "\n{errors} failed run(s) excluded from the averages");
    }
    Ok(s)
}
