//! Experiment configuration, read from TOML.
//!
//! ```toml
//! schemes = ["GEO", "GH", "RGH"]
//! master_seed = 7
//! xi = 5.0
//! m = 5
//! num_regions = 14
//! n_hubs = 5
//! checkpoints = [500, 2000]   # optional, see `max_size`
//! pair_mode = "auto"          # "all", "auto" or { sampled = 100000 }
//!
//! [zone_source]
//! kind = "synthetic"
//! count = 10000
//! seed = 1
//! placement = { law = "uniform" }
//!
//! [region_source]
//! kind = "partition"
//!
//! [arrival_policy]
//! kind = "randomized_proportional"
//! hubs_first = true
//!
//! [[scenarios]]
//! kind = "original"
//!
//! [[scenarios]]
//! kind = "random_links"
//! fraction = 0.2
//! trials = 20
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::zones::SyntheticZoneSpec;
use super::HarnessError;
use crate::addressing::{Scheme, SchemeConfig};
use crate::geometry::EarthConstants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoneSource {
    File { path: PathBuf },
    Synthetic(SyntheticZoneSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSource {
    /// Built-in longitude partition into `num_regions` regions.
    Partition,
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalPolicyConfig {
    DeterministicRank,
    /// Without a seed, one is derived from the master seed. `hubs_first`
    /// applies to RGH runs only.
    RandomizedProportional {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        hubs_first: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairModeConfig {
    /// All ordered pairs up to [`AUTO_ALL_PAIRS_LIMIT`] nodes, otherwise
    /// [`AUTO_SAMPLE`] sampled pairs.
    Auto,
    All,
    Sampled(usize),
}

pub const AUTO_ALL_PAIRS_LIMIT: usize = 2000;
pub const AUTO_SAMPLE: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Original,
    /// Every single-node removal, averaged.
    AllSingleNode,
    /// Every single-link removal, averaged.
    AllSingleLink,
    RandomLinks { fraction: f64, trials: usize },
}

impl ScenarioSpec {
    pub fn label(&self) -> String {
        match self {
            ScenarioSpec::Original => "original".into(),
            ScenarioSpec::AllSingleNode => "all-1-node".into(),
            ScenarioSpec::AllSingleLink => "all-1-link".into(),
            ScenarioSpec::RandomLinks { fraction, .. } => format!("random-links-{fraction}"),
        }
    }
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Geo, Scheme::Gh, Scheme::Rgh]
}
fn default_xi() -> f64 {
    SchemeConfig::DEFAULT_XI
}
fn default_m() -> usize {
    SchemeConfig::DEFAULT_M
}
fn default_num_regions() -> usize {
    SchemeConfig::DEFAULT_NUM_REGIONS
}
fn default_n_hubs() -> usize {
    SchemeConfig::DEFAULT_N_HUBS
}
fn default_region_source() -> RegionSource {
    RegionSource::Partition
}
fn default_arrival() -> ArrivalPolicyConfig {
    ArrivalPolicyConfig::DeterministicRank
}
fn default_scenarios() -> Vec<ScenarioSpec> {
    vec![ScenarioSpec::Original]
}
fn default_pair_mode() -> PairModeConfig {
    PairModeConfig::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub zone_source: ZoneSource,
    #[serde(default = "default_region_source")]
    pub region_source: RegionSource,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_num_regions")]
    pub num_regions: usize,
    #[serde(default = "default_n_hubs")]
    pub n_hubs: usize,
    #[serde(default = "default_arrival")]
    pub arrival_policy: ArrivalPolicyConfig,
    /// Network sizes to measure at. When absent: the size at which all RGH
    /// hubs are present, then doubling, ending at `max_size`.
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    /// Largest network size for default checkpoints; the zone count when
    /// absent.
    #[serde(default)]
    pub max_size: Option<usize>,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default = "default_pair_mode")]
    pub pair_mode: PairModeConfig,
    pub master_seed: u64,
    /// Let arrivals revisit zones. Stress tests only; requires explicit
    /// checkpoints or `max_size`.
    #[serde(default)]
    pub repeat_zones: bool,
    /// Replaces Earth radius and delay constants; refused unless
    /// `allow_constant_override` is set.
    #[serde(default)]
    pub constants: Option<EarthConstants>,
    #[serde(default)]
    pub allow_constant_override: bool,
    #[serde(default)]
    pub strict_progress: bool,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// A config with defaults everywhere except the zone source and seed.
    pub fn new(zone_source: ZoneSource, master_seed: u64) -> Self {
        Self {
            schemes: default_schemes(),
            zone_source,
            region_source: default_region_source(),
            xi: default_xi(),
            m: default_m(),
            num_regions: default_num_regions(),
            n_hubs: default_n_hubs(),
            arrival_policy: default_arrival(),
            checkpoints: None,
            max_size: None,
            scenarios: default_scenarios(),
            pair_mode: default_pair_mode(),
            master_seed,
            repeat_zones: false,
            constants: None,
            allow_constant_override: false,
            strict_progress: false,
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn scheme_config(&self, scheme: Scheme) -> SchemeConfig {
        SchemeConfig {
            scheme,
            xi: self.xi,
            m: self.m,
            num_regions: self.num_regions,
            n_hubs: self.n_hubs,
        }
    }

    pub fn constants(&self) -> EarthConstants {
        self.constants.unwrap_or(EarthConstants::STANDARD)
    }

    /// Checks everything that does not need the zone table.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.schemes.is_empty() {
            return fail("schemes must not be empty".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return fail(format!("scheme {s} listed twice"));
            }
        }
        self.scheme_config(Scheme::Gh)
            .validate()
            .map_err(HarnessError::Config)?;
        if let ZoneSource::Synthetic(spec) = &self.zone_source {
            spec.validate().map_err(HarnessError::Config)?;
        }
        if let Some(checkpoints) = &self.checkpoints {
            if checkpoints.is_empty() {
                return fail("checkpoints must not be empty".into());
            }
            if checkpoints[0] < 2 {
                return fail("checkpoints must be at least 2".into());
            }
            if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
                return fail("checkpoints must be strictly increasing".into());
            }
        }
        if let Some(max) = self.max_size {
            if max < 2 {
                return fail("max_size must be at least 2".into());
            }
        }
        if self.repeat_zones && self.checkpoints.is_none() && self.max_size.is_none() {
            return fail("repeat_zones needs checkpoints or max_size".into());
        }
        if self.scenarios.is_empty() {
            return fail("scenarios must not be empty".into());
        }
        for scenario in &self.scenarios {
            if let ScenarioSpec::RandomLinks { fraction, trials } = *scenario {
                if !(0.0..1.0).contains(&fraction) {
                    return fail(format!("random link fraction {fraction} outside [0, 1)"));
                }
                if trials == 0 {
                    return fail("random link scenarios need at least one trial".into());
                }
            }
        }
        if let PairModeConfig::Sampled(0) = self.pair_mode {
            return fail("sampled pair count must be positive".into());
        }
        if let Some(c) = self.constants {
            if !self.allow_constant_override && !c.is_standard() {
                return fail(
                    "constants differ from the standard values; set allow_constant_override = true"
                        .into(),
                );
            }
            let positive = |v: f64| v.is_finite() && v > 0.0;
            if !positive(c.earth_radius_km)
                || !positive(c.delay_divisor)
                || !c.delay_offset_km.is_finite()
                || c.delay_offset_km < 0.0
            {
                return fail("constants must be finite, radius and divisor positive".into());
            }
        }
        Ok(())
    }
}
