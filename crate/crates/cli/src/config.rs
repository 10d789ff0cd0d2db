//! Run configuration: a flat `key = value` file mirrored by command-line
//! flags, with flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use p2scatter::diagram::{PointQ, Region};
use p2scatter::exactalg::{parse_q, q_int, Q};
use p2scatter::invariants::ExtractConfig;
use p2scatter::stability::ChargeVector;

use crate::CliError;

/// Environment variable naming the directory of memoized charge results.
pub const CACHE_ENV: &str = "P2SCATTER_CACHE_DIR";

pub const KEYS: &[&str] = &[
    "class",
    "order",
    "region",
    "probe",
    "s_target",
    "order_slack",
    "retries",
    "x_margin",
    "markers",
    "verify_vertices",
    "svg",
    "json",
    "scale",
    "seed",
    "suite",
    "corrupt",
    "criteria",
    "cache_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub class: Option<ChargeVector>,
    pub order: Q,
    pub region: Region,
    pub probe: Option<PointQ>,
    pub s_target: Option<Q>,
    pub order_slack: Q,
    pub retries: u32,
    pub x_margin: Q,
    pub markers: bool,
    pub verify_vertices: bool,
    pub svg: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Pixels per unit in the SVG viewport.
    pub scale: Q,
    pub seed: u64,
    pub suite: String,
    pub corrupt: Option<u32>,
    /// Restricts the golden suite to these ids.
    pub criteria: Option<Vec<u32>>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExtractConfig::default();
        RunConfig {
            class: None,
            order: q_int(2),
            region: Region::new(q_int(-2), q_int(2), q_int(6)),
            probe: None,
            s_target: None,
            order_slack: e.order_slack,
            retries: e.retries,
            x_margin: e.x_margin,
            markers: e.markers,
            verify_vertices: e.verify_vertices,
            svg: None,
            json: None,
            scale: q_int(100),
            seed: 0,
            suite: "paper".into(),
            corrupt: None,
            criteria: None,
            cache_dir: None,
        }
    }
}

/// Parses a config file: one `key = value` per line, `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn triple(s: &str, what: &str) -> Result<Vec<Q>, CliError> {
    s.split(',')
        .map(|p| parse_q(p).map_err(|_| CliError::Config(format!("bad {what} {s:?}"))))
        .collect()
}

fn parse_bool(k: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("{k}: expected true or false, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("{k}: bad value {v:?}")))
}

fn rational(k: &str, v: &str) -> Result<Q, CliError> {
    parse_q(v).map_err(|_| CliError::Config(format!("{k}: bad rational {v:?}")))
}

impl RunConfig {
    /// Layers: defaults, then the environment, then the file, then flags.
    pub fn resolve(
        file: Option<&Path>,
        flags: &BTreeMap<String, String>,
    ) -> Result<RunConfig, CliError> {
        let mut merged = BTreeMap::new();
        if let Ok(dir) = std::env::var(CACHE_ENV) {
            if !dir.is_empty() {
                merged.insert("cache_dir".to_string(), dir);
            }
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            merged.extend(parse_file(&text)?);
        }
        merged.extend(flags.iter().map(|(k, v)| (k.clone(), v.clone())));
        let mut c = RunConfig::default();
        for (k, v) in &merged {
            c.set(k, v)?;
        }
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<(), CliError> {
        match k {
            "class" => {
                self.class = Some(v.parse().map_err(|_| {
                    CliError::Config(format!("class: expected r,d,chi integers, got {v:?}"))
                })?)
            }
            "order" => self.order = rational(k, v)?,
            "region" => {
                let t = triple(v, "region")?;
                if t.len() != 3 || t[0] >= t[1] {
                    return Err(CliError::Config(format!(
                        "region: expected xmin,xmax,smax with xmin < xmax, got {v:?}"
                    )));
                }
                self.region = Region::new(t[0].clone(), t[1].clone(), t[2].clone());
            }
            "probe" => {
                let t = triple(v, "probe")?;
                if t.len() != 2 {
                    return Err(CliError::Config(format!("probe: expected x,y, got {v:?}")));
                }
                self.probe = Some(PointQ::new(t[0].clone(), t[1].clone()));
            }
            "s_target" => self.s_target = Some(rational(k, v)?),
            "order_slack" => self.order_slack = rational(k, v)?,
            "retries" => self.retries = parse_num(k, v)?,
            "x_margin" => self.x_margin = rational(k, v)?,
            "markers" => self.markers = parse_bool(k, v)?,
            "verify_vertices" => self.verify_vertices = parse_bool(k, v)?,
            "svg" => self.svg = Some(v.into()),
            "json" => self.json = Some(v.into()),
            "scale" => self.scale = rational(k, v)?,
            "seed" => self.seed = parse_num(k, v)?,
            "suite" => {
                if !["paper", "properties", "all"].contains(&v) {
                    return Err(CliError::Config(format!(
                        "suite: expected paper, properties or all, got {v:?}"
                    )));
                }
                self.suite = v.into()
            }
            "corrupt" => self.corrupt = Some(parse_num(k, v)?),
            "criteria" => {
                self.criteria = Some(
                    v.split(',')
                        .map(|p| parse_num(k, p.trim()))
                        .collect::<Result<_, _>>()?,
                )
            }
            "cache_dir" => self.cache_dir = Some(v.into()),
            _ => return Err(CliError::Config(format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            probe: self.probe.clone(),
            s_target: self.s_target.clone(),
            order_slack: self.order_slack.clone(),
            retries: self.retries,
            x_margin: self.x_margin.clone(),
            markers: self.markers,
            verify_vertices: self.verify_vertices,
            cache_dir: self.cache_dir.clone(),
        }
    }

    /// Every setting as it would appear in a config file; feeding this back
    /// through [`parse_file`] reproduces the run.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        if let Some(g) = &self.class {
            put("class", format!("{},{},{}", g.r, g.d, g.chi));
        }
        put("order", self.order.to_string());
        let r = &self.region;
        put("region", format!("{},{},{}", r.xmin, r.xmax, r.smax));
        if let Some(p) = &self.probe {
            put("probe", format!("{},{}", p.x, p.y));
        }
        if let Some(s) = &self.s_target {
            put("s_target", s.to_string());
        }
        put("order_slack", self.order_slack.to_string());
        put("retries", self.retries.to_string());
        put("x_margin", self.x_margin.to_string());
        put("markers", self.markers.to_string());
        put("verify_vertices", self.verify_vertices.to_string());
        if let Some(p) = &self.svg {
            put("svg", p.display().to_string());
        }
        if let Some(p) = &self.json {
            put("json", p.display().to_string());
        }
        put("scale", self.scale.to_string());
        put("seed", self.seed.to_string());
        put("suite", self.suite.clone());
        if let Some(c) = self.corrupt {
            put("corrupt", c.to_string());
        }
        if let Some(ids) = &self.criteria {
            let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
            put("criteria", ids.join(","));
        }
        if let Some(p) = &self.cache_dir {
            put("cache_dir", p.display().to_string());
        }
        m
    }
}
