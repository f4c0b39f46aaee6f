//! `key = value` settings: read from a file, then overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use changedet_core::benchmark::BenchmarkPlan;
use changedet_core::pipeline::{PipelineConfig, Preset};
use changedet_core::srad::Roi;

pub type Error = Box<dyn std::error::Error>;

/// Keys understood by [`Settings::pipeline`].
pub const PIPELINE_KEYS: [&str; 14] = [
    "preset",
    "di",
    "denoise",
    "classifier",
    "beta0",
    "delta",
    "max_iter",
    "energy_sign",
    "srad_iters",
    "srad_dt",
    "srad_floor",
    "srad_roi",
    "icov",
    "out",
];
/// Keys understood by [`Settings::plan`] on top of the pipeline keys.
pub const BENCH_KEYS: [&str; 4] = ["seed", "repeats", "size", "methods"];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value, got '{raw}'", n + 1))?;
            let key = k.trim().replace('-', "_");
            if !PIPELINE_KEYS.contains(&key.as_str()) && !BENCH_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key '{}'", n + 1, k.trim()).into());
            }
            map.insert(key, v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()).into())
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T>(&self, key: &str) -> Result<Option<T>, Error>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| format!("{key} = '{v}': {e}").into())
            })
            .transpose()
    }

    /// The preset's configuration with every explicit setting applied.
    pub fn pipeline(&self) -> Result<PipelineConfig, Error> {
        let preset = self.parsed::<Preset>("preset")?.unwrap_or(Preset::Proposed);
        let mut c = preset.config();
        if let Some(v) = self.parsed("di")? {
            c.di_operator = v;
        }
        if let Some(v) = self.parsed("denoise")? {
            c.denoise = v;
        }
        if let Some(v) = self.parsed("classifier")? {
            c.classifier = v;
        }
        if let Some(v) = self.parsed("beta0")? {
            c.mrffcm.beta0 = v;
        }
        if let Some(v) = self.parsed("delta")? {
            c.mrffcm.delta = v;
        }
        if let Some(v) = self.parsed("max_iter")? {
            c.mrffcm.max_iter = v;
        }
        if let Some(v) = self.parsed("energy_sign")? {
            c.mrffcm.energy_sign = v;
        }
        if let Some(v) = self.parsed("srad_iters")? {
            c.srad.iterations = v;
        }
        if let Some(v) = self.parsed("srad_dt")? {
            c.srad.dt = v;
        }
        if let Some(v) = self.parsed("srad_floor")? {
            c.srad_floor = v;
        }
        if let Some(v) = self.get("srad_roi") {
            c.srad.roi = parse_roi(v)?;
        }
        if let Some(v) = self.parsed("icov")? {
            c.srad.icov_form = v;
        }
        c.srad.validate()?;
        c.mrffcm.validate()?;
        if !(c.srad_floor > 0.0) || !c.srad_floor.is_finite() {
            return Err(format!("srad_floor {} must be positive", c.srad_floor).into());
        }
        Ok(c)
    }

    /// Benchmark plan; `methods` lists presets, otherwise a single custom
    /// configuration is run when any pipeline key was given, else all presets.
    pub fn plan(&self) -> Result<BenchmarkPlan, Error> {
        let seed = self
            .parsed("seed")?
            .unwrap_or(changedet_core::benchmark::DEFAULT_BASE_SEED);
        let mut plan = BenchmarkPlan::new(seed);
        if let Some(v) = self.parsed("repeats")? {
            plan.repeats = v;
        }
        if let Some(v) = self.parsed("size")? {
            plan.size = v;
        }
        if let Some(list) = self.get("methods") {
            let presets = list
                .split(',')
                .map(|s| s.trim().parse::<Preset>())
                .collect::<Result<Vec<_>, _>>()?;
            plan = plan.with_methods(&presets);
        } else if self
            .0
            .keys()
            .any(|k| PIPELINE_KEYS.contains(&k.as_str()) && k != "preset" && k != "out")
        {
            plan.methods = vec![("custom".to_string(), self.pipeline()?)];
        } else if let Some(p) = self.parsed::<Preset>("preset")? {
            plan = plan.with_methods(&[p]);
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// `auto` or `x,y,width,height`.
fn parse_roi(s: &str) -> Result<Roi, Error> {
    if s == "auto" {
        return Ok(Roi::Auto);
    }
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("srad_roi '{s}': {e}"))?;
    match parts[..] {
        [x, y, w, h] => Ok(Roi::Fixed(changedet_core::srad::Rect::new(x, y, w, h))),
        _ => Err(format!("srad_roi '{s}': expected auto or x,y,width,height").into()),
    }
}
