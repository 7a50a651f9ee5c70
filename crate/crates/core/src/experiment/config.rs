use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::SrelOptions;
use crate::dictlearn::DictLearnConfig;
use crate::error::{Error, Result};
use crate::graph::LaplacianKind;
use crate::partition::PdcaConfig;
use crate::scheduler::{Confidence, SchedulerConfig, TrainingSignal};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Static,
    OnlineSynthetic,
    OnlineReal,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethod {
    Proposed,
    Srel,
    Sfrob,
}

impl PartitionMethod {
    pub fn name(self) -> &'static str {
        match self {
            PartitionMethod::Proposed => "proposed",
            PartitionMethod::Srel => "srel",
            PartitionMethod::Sfrob => "sfrob",
        }
    }
}

/// Random geometric sensor graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSpec {
    pub n_nodes: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub laplacian: LaplacianKind,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec { n_nodes: 256, k_min: 2, k_max: 8, laplacian: LaplacianKind::Combinatorial }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSpec {
    /// Diffusion rate of the static heat dictionary.
    pub heat_alpha: f64,
    pub n_clusters: usize,
    /// Number of steps of the time-varying trace.
    pub duration: usize,
    /// Per-step probability that a boundary node changes cluster.
    pub drift_probability: f64,
    /// Hop radius defining boundary nodes.
    pub drift_hops: usize,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec { heat_alpha: 10.0, n_clusters: 3, duration: 64, drift_probability: 1.0, drift_hops: 2 }
    }
}

/// Latitude/longitude bounding box in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBox {
    pub name: String,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl RegionBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }

    fn new(name: &str, lat: [f64; 2], lon: [f64; 2]) -> Self {
        RegionBox { name: name.into(), lat_min: lat[0], lat_max: lat[1], lon_min: lon[0], lon_max: lon[1] }
    }

    /// Mediterranean, North Sea, Black Sea and the Northwest Atlantic coast.
    pub fn default_regions() -> Vec<RegionBox> {
        vec![
            RegionBox::new("mediterranean", [30.0, 46.0], [-6.0, 36.5]),
            RegionBox::new("north-sea", [51.0, 61.0], [-4.0, 9.0]),
            RegionBox::new("black-sea", [40.5, 47.0], [27.5, 42.0]),
            RegionBox::new("northwest-atlantic", [25.0, 50.0], [-82.0, -60.0]),
        ]
    }
}

/// Station/measurement CSVs and the subsetting protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealDataSpec {
    /// `id,lat,lon`; `None` selects the synthetic fallback.
    pub stations: Option<PathBuf>,
    /// `station_id,year,month,value`.
    pub measurements: Option<PathBuf>,
    pub regions: Vec<RegionBox>,
    pub n_sensors: usize,
    pub k: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Stations generated by the synthetic fallback.
    pub synthetic_stations: usize,
}

impl Default for RealDataSpec {
    fn default() -> Self {
        RealDataSpec {
            stations: None,
            measurements: None,
            regions: RegionBox::default_regions(),
            n_sensors: 256,
            k: 8,
            first_year: 2016,
            last_year: 2021,
            synthetic_stations: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSpec {
    pub buffer_width: usize,
    pub confidence: Confidence,
    pub training: TrainingSignal,
}

impl Default for SchedulerSpec {
    fn default() -> Self {
        let d = SchedulerConfig::default();
        SchedulerSpec { buffer_width: d.buffer_width, confidence: d.confidence, training: d.training }
    }
}

/// Top-level experiment file. Fields left out take the defaults of `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub runs: Option<usize>,
    pub n_subsets: Option<usize>,
    /// Variance of the additive measurement noise.
    pub noise_variance: Option<f64>,
    /// Static experiment: bandwidths of the bandlimited baseline reconstructions.
    pub bandwidths: Option<Vec<usize>>,
    pub methods: Option<Vec<PartitionMethod>>,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default)]
    pub real: RealDataSpec,
    #[serde(default)]
    pub pdca: PdcaConfig,
    #[serde(default)]
    pub learning: DictLearnConfig,
    #[serde(default)]
    pub scheduler: SchedulerSpec,
    #[serde(default)]
    pub srel: SrelOptions,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind,
            seed: 0,
            runs: None,
            n_subsets: None,
            noise_variance: None,
            bandwidths: None,
            methods: None,
            graph: GraphSpec::default(),
            signal: SignalSpec::default(),
            real: RealDataSpec::default(),
            pdca: PdcaConfig::default(),
            learning: DictLearnConfig::default(),
            scheduler: SchedulerSpec::default(),
            srel: SrelOptions::default(),
            output_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn runs(&self) -> usize {
        self.runs.unwrap_or(match self.kind {
            ExperimentKind::Static => 30,
            ExperimentKind::OnlineSynthetic => 10,
            ExperimentKind::OnlineReal | ExperimentKind::Ablation => 1,
        })
    }

    pub fn n_subsets(&self) -> usize {
        self.n_subsets.unwrap_or(match self.kind {
            ExperimentKind::Static => 4,
            ExperimentKind::OnlineSynthetic => 16,
            ExperimentKind::OnlineReal | ExperimentKind::Ablation => 8,
        })
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance.unwrap_or(match self.kind {
            ExperimentKind::Static | ExperimentKind::OnlineSynthetic => 1e-3,
            ExperimentKind::OnlineReal | ExperimentKind::Ablation => 0.5,
        })
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_variance().sqrt()
    }

    pub fn bandwidths(&self) -> Vec<usize> {
        self.bandwidths.clone().unwrap_or_else(|| vec![10, 32, 100, 256])
    }

    pub fn methods(&self) -> Vec<PartitionMethod> {
        self.methods
            .clone()
            .unwrap_or_else(|| vec![PartitionMethod::Proposed, PartitionMethod::Srel, PartitionMethod::Sfrob])
    }

    /// Scheduler settings shared by every method of an online experiment.
    pub fn scheduler_config(&self) -> SchedulerConfig {
        SchedulerConfig {
            n_subsets: self.n_subsets(),
            sigma: self.noise_sigma(),
            seed: self.seed,
            pdca: self.pdca.clone(),
            learning: self.learning.clone(),
            buffer_width: self.scheduler.buffer_width,
            confidence: self.scheduler.confidence,
            training: self.scheduler.training,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.runs() == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let v = self.noise_variance();
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("noise_variance must be finite and >= 0, got {v}")));
        }
        let m = self.n_subsets();
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!("n_subsets must be a power of two >= 2, got {m}")));
        }
        let g = &self.graph;
        if g.k_min == 0 || g.k_min > g.k_max || g.k_max >= g.n_nodes {
            return Err(Error::Config(format!(
                "invalid graph k range {}..={} for {} nodes",
                g.k_min, g.k_max, g.n_nodes
            )));
        }
        let n = match self.kind {
            ExperimentKind::OnlineReal | ExperimentKind::Ablation => self.real.n_sensors,
            _ => g.n_nodes,
        };
        if m > n {
            return Err(Error::Config(format!("{m} subsets for {n} nodes")));
        }
        if self.kind == ExperimentKind::Static {
            if let Some(b) = self.bandwidths().iter().find(|&&b| b == 0 || b > g.n_nodes) {
                return Err(Error::Config(format!("bandwidth {b} outside 1..={}", g.n_nodes)));
            }
        }
        let s = &self.signal;
        if !(s.heat_alpha >= 0.0 && s.heat_alpha.is_finite()) {
            return Err(Error::Config("heat_alpha must be finite and >= 0".into()));
        }
        if s.n_clusters < 2 || s.n_clusters > g.n_nodes {
            return Err(Error::Config(format!("n_clusters {} outside 2..={}", s.n_clusters, g.n_nodes)));
        }
        if s.duration == 0 {
            return Err(Error::Config("duration must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&s.drift_probability) {
            return Err(Error::Config("drift_probability must lie in [0, 1]".into()));
        }
        let r = &self.real;
        if r.stations.is_some() != r.measurements.is_some() {
            return Err(Error::Config("real.stations and real.measurements must be given together".into()));
        }
        if r.k == 0 || r.k >= r.n_sensors {
            return Err(Error::Config(format!("real.k = {} must be in [1, n_sensors)", r.k)));
        }
        if r.first_year > r.last_year {
            return Err(Error::Config("real.first_year is after real.last_year".into()));
        }
        if self.methods().is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        self.scheduler_config().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_kind_defaults() {
        let cfg = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"online-synthetic\"\n").unwrap();
        assert_eq!(cfg.n_subsets(), 16);
        assert_eq!(cfg.runs(), 10);
        assert_eq!(cfg.noise_variance(), 1e-3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"static\"\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"static\"\n[pdca]\nlipshitz = 3.0\n")
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn wrong_schema_version_rejected() {
        assert!(ExperimentConfig::from_toml_str("schema_version = 7\nkind = \"static\"\n").is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        for extra in ["n_subsets = 3", "noise_variance = -1.0", "runs = 0", "bandwidths = [0]"] {
            let text = format!("schema_version = 1\nkind = \"static\"\n{extra}\n");
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ablation);
        cfg.seed = 17;
        cfg.runs = Some(2);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
