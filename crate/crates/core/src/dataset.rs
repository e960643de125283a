//! Dataset generation: instance records, generation configs, resumable JSONL
//! output and stratified train/test splits.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::hash::Hasher;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_vector_with, FeatureOptions, SymmetryFeatures};
use crate::graph::{Edge, Graph, GraphFamily};
use crate::schedule::{find_pmin_with, LinearSchedule, PminConfig, QaoaEvaluator};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest graph the depth search will accept.
pub const MAX_PMIN_QUBITS: usize = 22;

const PROFILES: [(&str, &str); 3] = [
    ("smoke", include_str!("../data/profiles/smoke.toml")),
    ("desk", include_str!("../data/profiles/desk.toml")),
    ("wide", include_str!("../data/profiles/wide.toml")),
];

/// Seed for a named sub-task, derived from a base seed.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write_u64(base);
    h.write(tag.as_bytes());
    // splitmix64 finalizer to spread the FNV state.
    let mut z = h.finish().wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub features_secs: f64,
    pub pmin_secs: f64,
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub schema_version: u32,
    pub id: String,
    /// Stratum used for splits, e.g. `cycle` or `random-3-regular`.
    pub family: String,
    pub generator: GraphFamily,
    pub n: usize,
    pub edges: Vec<Edge>,
    pub optimum_cut: usize,
    pub features: SymmetryFeatures,
    /// Two-edge deletions averaged for the `_2` features.
    pub pair_samples: usize,
    /// `None` when censored at `p_cap`.
    pub p_min: Option<usize>,
    pub ratio_achieved: f64,
    pub best_schedule: LinearSchedule,
    pub target_ratio: f64,
    pub p_start: usize,
    pub p_cap: usize,
    pub restarts: usize,
    pub search_seed: u64,
    pub reduced_backend: bool,
    pub software_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl InstanceRecord {
    pub fn censored(&self) -> bool {
        self.p_min.is_none()
    }

    pub fn graph(&self) -> Result<Graph> {
        Graph::new(self.n, self.edges.iter().copied())
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: InstanceRecord = serde_json::from_str(line)?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParams(format!(
                "record {} has schema version {}, expected {SCHEMA_VERSION}",
                rec.id, rec.schema_version
            )));
        }
        Ok(rec)
    }
}

/// One `[[families]]` entry of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    /// Inclusive vertex-count range. Ladder-type families use the even
    /// counts only.
    #[serde(default)]
    pub n: Option<[usize; 2]>,
    #[serde(default)]
    pub degree: Option<usize>,
    /// Extra edges on top of the spanning tree, trivial-aut only.
    #[serde(default)]
    pub extra: Option<usize>,
    /// Instances per size for random families.
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub shapes: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

fn default_target() -> f64 {
    0.95
}
fn default_p_start() -> usize {
    2
}
fn default_p_cap() -> usize {
    25
}
fn default_restarts() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_target")]
    pub target_ratio: f64,
    #[serde(default = "default_p_start")]
    pub p_start: usize,
    #[serde(default = "default_p_cap")]
    pub p_cap: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Cap on two-edge deletions per graph once it has more than 60 edges.
    #[serde(default)]
    pub max_pairs: Option<usize>,
    /// Store timings inside each record. Off by default so reruns are
    /// byte-identical; timings always go to the sidecar file.
    #[serde(default)]
    pub inline_timing: bool,
    pub families: Vec<FamilySpec>,
}

impl DatasetConfig {
    pub fn profile_names() -> impl Iterator<Item = &'static str> {
        PROFILES.iter().map(|(n, _)| *n)
    }

    pub fn profile(name: &str) -> Result<Self> {
        let (_, text) = PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown profile {name:?}")))?;
        Self::from_toml(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: DatasetConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DatasetConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.json` or `.toml` file, or a built-in profile by name.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if !path.exists() {
            if PROFILES.iter().any(|(n, _)| *n == spec) {
                return Self::profile(spec);
            }
            return Err(Error::Config(format!(
                "no config file or profile named {spec:?}"
            )));
        }
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p_start == 0 || self.p_cap < self.p_start {
            return Err(Error::Config(format!(
                "bad depth range {}..={}",
                self.p_start, self.p_cap
            )));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "target ratio must be in (0, 1], got {}",
                self.target_ratio
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn pmin_config(&self, search_seed: u64) -> PminConfig {
        PminConfig {
            target_ratio: self.target_ratio,
            p_start: self.p_start,
            p_cap: self.p_cap,
            restarts: self.restarts,
            seed: search_seed,
            ..PminConfig::default()
        }
    }

    /// All instances, in file order. Ids are unique.
    pub fn instances(&self) -> Result<Vec<GraphFamily>> {
        let mut out = Vec::new();
        for spec in &self.families {
            out.extend(expand_family(spec, self.seed)?);
        }
        let mut seen = HashSet::new();
        out.retain(|f| seen.insert(f.to_string()));
        Ok(out)
    }
}

fn range(spec: &FamilySpec) -> Result<std::ops::RangeInclusive<usize>> {
    let [lo, hi] = spec
        .n
        .ok_or_else(|| Error::Config(format!("family {} needs `n = [min, max]`", spec.family)))?;
    if lo > hi {
        return Err(Error::Config(format!(
            "empty range [{lo}, {hi}] for {}",
            spec.family
        )));
    }
    Ok(lo..=hi)
}

fn expand_family(spec: &FamilySpec, seed: u64) -> Result<Vec<GraphFamily>> {
    let count = spec.count.unwrap_or(1);
    let seeded = |base: GraphFamily| -> Vec<GraphFamily> {
        (0..count)
            .map(|i| {
                let tag = format!("{base}#{i}");
                base.with_seed(derive_seed(seed, &tag) % 1_000_000)
            })
            .collect()
    };
    let name = spec.family.as_str();
    Ok(match name {
        "complete" => range(spec)?.map(|n| GraphFamily::Complete { n }).collect(),
        "cycle" => range(spec)?.map(|n| GraphFamily::Cycle { n }).collect(),
        "star" => range(spec)?.map(|n| GraphFamily::Star { n }).collect(),
        "wheel" => range(spec)?.map(|n| GraphFamily::Wheel { n }).collect(),
        "ladder" | "circular-ladder" | "antiprism" => range(spec)?
            .filter(|n| n % 2 == 0)
            .map(|n| {
                let k = n / 2;
                match name {
                    "ladder" => GraphFamily::Ladder { k },
                    "circular-ladder" => GraphFamily::CircularLadder { k },
                    _ => GraphFamily::Antiprism { k },
                }
            })
            .collect(),
        "grid2d" => spec
            .shapes
            .as_ref()
            .ok_or_else(|| Error::Config("grid2d needs `shapes`".into()))?
            .iter()
            .map(|&[rows, cols]| GraphFamily::Grid2d { rows, cols })
            .collect(),
        "random-regular" => {
            let k = spec
                .degree
                .ok_or_else(|| Error::Config("random-regular needs `degree`".into()))?;
            range(spec)?
                .filter(|&n| n > k && (n * k) % 2 == 0)
                .flat_map(|n| seeded(GraphFamily::RandomRegular { n, k, seed: 0 }))
                .collect()
        }
        "trivial-aut" => {
            let extra = spec.extra.unwrap_or(0);
            range(spec)?
                .flat_map(|n| seeded(GraphFamily::TrivialAut { n, extra, seed: 0 }))
                .collect()
        }
        "hand-picked" => spec
            .names
            .as_ref()
            .ok_or_else(|| Error::Config("hand-picked needs `names`".into()))?
            .iter()
            .map(|name| GraphFamily::HandPicked { name: name.clone() })
            .collect(),
        other => return Err(Error::Config(format!("unknown family {other:?}"))),
    })
}

/// Features, optimum and p_min for one instance.
pub fn compute_record(family: &GraphFamily, cfg: &DatasetConfig) -> Result<InstanceRecord> {
    let g = family.generate()?;
    if g.n() > MAX_PMIN_QUBITS {
        return Err(Error::SizeLimit(format!(
            "{family} has {} vertices; depth search is limited to {MAX_PMIN_QUBITS}",
            g.n()
        )));
    }
    let id = family.to_string();
    let opts = FeatureOptions {
        max_pairs: cfg.max_pairs,
        seed: derive_seed(cfg.seed, &format!("{id}/pairs")),
        ..FeatureOptions::default()
    };
    let t0 = Instant::now();
    let (features, pair_samples) = feature_vector_with(&g, &opts)?;
    let t1 = Instant::now();
    let search_seed = derive_seed(cfg.seed, &format!("{id}/pmin"));
    let eval = QaoaEvaluator::new(&g)?;
    let res = find_pmin_with(&eval, &cfg.pmin_config(search_seed))?;
    let timing = Timing {
        features_secs: (t1 - t0).as_secs_f64(),
        pmin_secs: t1.elapsed().as_secs_f64(),
    };
    Ok(InstanceRecord {
        schema_version: SCHEMA_VERSION,
        id,
        family: family.stratum(),
        generator: family.clone(),
        n: g.n(),
        edges: g.edges().to_vec(),
        optimum_cut: res.optimum_cut,
        features,
        pair_samples,
        p_min: res.p_min,
        ratio_achieved: res.ratio_achieved,
        best_schedule: res.best_schedule,
        target_ratio: cfg.target_ratio,
        p_start: cfg.p_start,
        p_cap: cfg.p_cap,
        restarts: cfg.restarts,
        search_seed,
        reduced_backend: eval.is_reduced(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        timing: Some(timing),
    })
}

pub fn read_records(path: &Path) -> Result<Vec<InstanceRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            InstanceRecord::from_json_line(&line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[InstanceRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line()?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Drops a trailing partial line left by an interrupted run and returns the
/// ids already present.
fn existing_ids(path: &Path) -> Result<HashSet<String>> {
    if !path.exists() {
        return Ok(HashSet::new());
    }
    let text = std::fs::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() != text.len() {
        log::warn!("{}: dropping incomplete last line", path.display());
        std::fs::write(path, complete)?;
    }
    let mut ids = HashSet::new();
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let id = v["id"].as_str().ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "record without an id".into(),
        })?;
        ids.insert(id.to_string());
    }
    Ok(ids)
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".timing.jsonl");
    path.with_file_name(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSummary {
    pub instances: usize,
    pub already_present: usize,
    pub written: usize,
    pub censored: usize,
}

/// Computes every instance of `cfg` not yet in `out` and appends it, one
/// line per record, in config order. Instances are computed in parallel in
/// batches; a batch is written only once all of it is done, so the file is
/// the same whatever the thread count. Timings go to `<out>.timing.jsonl`.
pub fn gen_dataset(cfg: &DatasetConfig, out: &Path) -> Result<GenSummary> {
    let instances = cfg.instances()?;
    for fam in &instances {
        let n = match fam.vertex_count() {
            Some(n) => n,
            None => fam.generate()?.n(),
        };
        if n > MAX_PMIN_QUBITS {
            return Err(Error::SizeLimit(format!(
                "{fam} has {n} vertices; depth search is limited to {MAX_PMIN_QUBITS}"
            )));
        }
    }
    let have = existing_ids(out)?;
    let pending: Vec<&GraphFamily> = instances
        .iter()
        .filter(|f| !have.contains(&f.to_string()))
        .collect();
    let mut summary = GenSummary {
        instances: instances.len(),
        already_present: instances.len() - pending.len(),
        written: 0,
        censored: 0,
    };
    let mut file = OpenOptions::new().create(true).append(true).open(out)?;
    let mut timing_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(sidecar(out))?;
    let batch = rayon::current_num_threads().max(1) * 2;
    for chunk in pending.chunks(batch) {
        let records: Vec<InstanceRecord> = chunk
            .par_iter()
            .map(|fam| compute_record(fam, cfg))
            .collect::<Result<_>>()?;
        for mut rec in records {
            let timing = rec.timing;
            if !cfg.inline_timing {
                rec.timing = None;
            }
            let mut line = rec.to_json_line()?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
            if let Some(t) = timing {
                let entry = serde_json::json!({ "id": rec.id, "timing": t });
                writeln!(timing_file, "{entry}")?;
            }
            log::info!(
                "{}: p_min = {}",
                rec.id,
                rec.p_min.map_or("censored".to_string(), |p| p.to_string())
            );
            summary.written += 1;
            summary.censored += usize::from(rec.censored());
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per stratum, `round(fraction · size)` members go to the test side,
/// clamped so that a stratum with at least two members has one on each side.
pub fn stratified_split(keys: &[String], spec: &SplitSpec) -> Result<Split> {
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::InvalidParams(format!(
            "test fraction must be in [0, 1), got {}",
            spec.test_fraction
        )));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut members) in groups {
        members.shuffle(&mut rng);
        let m = members.len();
        let mut k = (spec.test_fraction * m as f64).round() as usize;
        if m >= 2 && spec.test_fraction > 0.0 {
            k = k.clamp(1, m - 1);
        }
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
