//! Experiment orchestration: grow each scheme incrementally and measure every
//! scenario at every checkpoint.

use super::arrival::{arrival_order, arrival_with_repeats, hub_complete_size, ArrivalPolicy};
use super::config::{
    ArrivalPolicyConfig, ExperimentConfig, PairModeConfig, RegionSource, ScenarioSpec, ZoneSource,
    AUTO_ALL_PAIRS_LIMIT, AUTO_SAMPLE,
};
use super::zones::{load_zones, synth_zones};
use super::{seeds, HarnessError};
use crate::addressing::{
    address_of, load_region_map, partition_regions, rank_zones_gh, rank_zones_rgh, RankTable,
    RegionMap, Scheme, SchemeConfig, Zone, ZoneTable,
};
use crate::metrics::{aggregate, evaluate, pair_ensemble, MetricsReport, PairMode};
use crate::routing::RoutingOptions;
use crate::topology::{apply_failure, enumerate_single_failures, FailureScenario, Topology};

/// Zone table and region map of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub zones: ZoneTable,
    pub regions: RegionMap,
}

pub fn load_inputs(config: &ExperimentConfig) -> Result<Inputs, HarnessError> {
    let zones = match &config.zone_source {
        ZoneSource::File { path } => load_zones(&config.resolve(path))?,
        ZoneSource::Synthetic(spec) => synth_zones(spec),
    };
    let regions = match &config.region_source {
        RegionSource::Partition => partition_regions(&zones, config.num_regions)?,
        RegionSource::File { path } => {
            let path = config.resolve(path);
            let file = std::fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
            load_region_map(std::io::BufReader::new(file), &zones)?
        }
    };
    Ok(Inputs { zones, regions })
}

/// Ranks and arrival sequence of one scheme.
#[derive(Debug, Clone)]
pub struct SchemePlan<'a> {
    pub config: SchemeConfig,
    pub ranks: Option<RankTable>,
    pub arrivals: Vec<&'a Zone>,
}

impl SchemePlan<'_> {
    /// Grows the first `n` arrivals from scratch.
    pub fn grow(&self, n: usize) -> Result<Topology, HarnessError> {
        let mut t = Topology::new(self.config.scheme);
        self.extend(&mut t, n)?;
        Ok(t)
    }

    /// Adds arrivals to `t` until it holds `n` node slots.
    pub fn extend(&self, t: &mut Topology, n: usize) -> Result<(), HarnessError> {
        if n > self.arrivals.len() {
            return Err(HarnessError::Config(format!(
                "network size {n} exceeds the {} available arrivals",
                self.arrivals.len()
            )));
        }
        for zone in &self.arrivals[t.capacity()..n] {
            let address = address_of(zone, self.ranks.as_ref(), self.config.scheme)?;
            t.add_node(zone.zone_id.clone(), address, self.config.m)?;
        }
        Ok(())
    }
}

/// `length` is only used when arrivals may repeat zones.
pub fn plan_scheme<'a>(
    inputs: &'a Inputs,
    config: &ExperimentConfig,
    scheme: Scheme,
    length: usize,
) -> Result<SchemePlan<'a>, HarnessError> {
    let scheme_config = config.scheme_config(scheme);
    let ranks = match scheme {
        Scheme::Geo => None,
        Scheme::Gh => Some(rank_zones_gh(&inputs.zones, config.xi)?),
        Scheme::Rgh => Some(rank_zones_rgh(
            &inputs.zones,
            &inputs.regions,
            config.xi,
            config.n_hubs,
        )?),
    };
    let policy = match config.arrival_policy {
        ArrivalPolicyConfig::DeterministicRank => ArrivalPolicy::DeterministicRank,
        ArrivalPolicyConfig::RandomizedProportional { seed, hubs_first } => {
            ArrivalPolicy::RandomizedProportional {
                seed: seed.unwrap_or_else(|| seeds::arrival_seed(config.master_seed)),
                hubs_first: hubs_first && scheme == Scheme::Rgh,
            }
        }
    };
    let arrivals = match (config.repeat_zones, policy) {
        (false, _) => arrival_order(&inputs.zones, ranks.as_ref(), &policy),
        (true, ArrivalPolicy::RandomizedProportional { seed, hubs_first }) => {
            arrival_with_repeats(&inputs.zones, ranks.as_ref(), length, seed, hubs_first)
        }
        (true, ArrivalPolicy::DeterministicRank) => {
            return Err(HarnessError::Config(
                "repeat_zones requires the randomized_proportional arrival policy".into(),
            ))
        }
    };
    Ok(SchemePlan {
        config: scheme_config,
        ranks,
        arrivals,
    })
}

/// Size at which every RGH hub has arrived under this config.
pub fn rgh_hub_complete_size(
    inputs: &Inputs,
    config: &ExperimentConfig,
    length: usize,
) -> Result<usize, HarnessError> {
    let plan = plan_scheme(inputs, config, Scheme::Rgh, length)?;
    let ranks = plan.ranks.as_ref().expect("RGH plans carry ranks");
    hub_complete_size(&plan.arrivals, ranks).ok_or_else(|| {
        HarnessError::Config(format!("not every RGH hub arrives within {length} nodes"))
    })
}

/// Explicit checkpoints, or the default ladder: hub-complete size, doubling,
/// capped by `max_size`.
pub fn resolve_checkpoints(
    inputs: &Inputs,
    config: &ExperimentConfig,
) -> Result<Vec<usize>, HarnessError> {
    let available = if config.repeat_zones {
        config
            .max_size
            .or_else(|| config.checkpoints.as_ref().and_then(|c| c.last().copied()))
            .expect("validated: repeat_zones has a size bound")
    } else {
        inputs.zones.len()
    };
    let max = config.max_size.unwrap_or(available);
    if max > available {
        return Err(HarnessError::Config(format!(
            "max_size {max} exceeds the {available} available zones"
        )));
    }
    let needs_hubs = config.schemes.contains(&Scheme::Rgh);
    let checkpoints = match &config.checkpoints {
        Some(explicit) => {
            let last = *explicit.last().expect("validated: non-empty");
            if last > max {
                return Err(HarnessError::Config(format!(
                    "checkpoint {last} exceeds the {max} available arrivals"
                )));
            }
            if needs_hubs {
                let hubs = rgh_hub_complete_size(inputs, config, max)?;
                if explicit[0] < hubs {
                    return Err(HarnessError::Config(format!(
                        "first checkpoint {} precedes the arrival of all RGH hubs at {hubs}",
                        explicit[0]
                    )));
                }
            }
            explicit.clone()
        }
        None => {
            let first = match rgh_hub_complete_size(inputs, config, max) {
                Ok(size) => size.max(2),
                Err(e) if needs_hubs => return Err(e),
                Err(_) => (config.num_regions * config.n_hubs).clamp(2, max),
            };
            if needs_hubs && first > max {
                return Err(HarnessError::Config(format!(
                    "all RGH hubs are present only at {first} nodes, beyond max size {max}"
                )));
            }
            let mut ladder = Vec::new();
            let mut size = first;
            while size < max {
                ladder.push(size);
                size *= 2;
            }
            ladder.push(max);
            ladder
        }
    };
    Ok(checkpoints)
}

pub fn pair_mode_for(config: &ExperimentConfig, n: usize) -> PairMode {
    let seed = seeds::pair_seed(config.master_seed, n);
    match config.pair_mode {
        PairModeConfig::All => PairMode::AllPairs,
        PairModeConfig::Sampled(count) => PairMode::Sampled { count, seed },
        PairModeConfig::Auto if n <= AUTO_ALL_PAIRS_LIMIT => PairMode::AllPairs,
        PairModeConfig::Auto => PairMode::Sampled {
            count: AUTO_SAMPLE,
            seed,
        },
    }
}

fn measure(
    t: &Topology,
    failure: &FailureScenario,
    mode: PairMode,
    options: RoutingOptions,
) -> Result<MetricsReport, HarnessError> {
    let damaged = apply_failure(t, failure)?;
    let pairs = pair_ensemble(&damaged, mode)?;
    Ok(evaluate(&damaged, &pairs, options)?)
}

/// Evaluates one scenario on a snapshot and returns the aggregated report.
pub fn run_scenario(
    t: &Topology,
    scenario: &ScenarioSpec,
    scenario_seed: u64,
    mode: PairMode,
    options: RoutingOptions,
) -> Result<MetricsReport, HarnessError> {
    let failures: Vec<FailureScenario> = match *scenario {
        ScenarioSpec::Original => vec![FailureScenario::Original],
        ScenarioSpec::AllSingleNode => enumerate_single_failures(t)
            .into_iter()
            .filter(|f| matches!(f, FailureScenario::OneNode(_)))
            .collect(),
        ScenarioSpec::AllSingleLink => enumerate_single_failures(t)
            .into_iter()
            .filter(|f| matches!(f, FailureScenario::OneLink(..)))
            .collect(),
        ScenarioSpec::RandomLinks { fraction, trials } => (0..trials)
            .map(|k| FailureScenario::RandomLinks {
                fraction,
                seed: seeds::trial_seed(scenario_seed, k),
            })
            .collect(),
    };
    if failures.is_empty() {
        return Err(HarnessError::Config(format!(
            "scenario {} has nothing to remove",
            scenario.label()
        )));
    }
    let reports = failures
        .iter()
        .map(|f| measure(t, f, mode, options))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = aggregate(&reports)?;
    report.scenario = scenario.label();
    report.seed = scenario_seed;
    report.trials = reports.len();
    Ok(report)
}

/// Runs the whole experiment, handing each report to `on_report` as soon as
/// it is ready. Schemes run in config order, then checkpoints ascending, then
/// scenarios in config order.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut on_report: impl FnMut(&MetricsReport) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let checkpoints = resolve_checkpoints(&inputs, config)?;
    let length = *checkpoints.last().expect("at least one checkpoint");
    let options = RoutingOptions {
        strict_progress: config.strict_progress,
        constants: config.constants(),
    };
    for &scheme in &config.schemes {
        let plan = plan_scheme(&inputs, config, scheme, length)?;
        let scheme_seed = seeds::scheme_seed(config.master_seed, scheme);
        let mut t = Topology::new(scheme);
        for &n in &checkpoints {
            plan.extend(&mut t, n)?;
            let mode = pair_mode_for(config, n);
            for (index, scenario) in config.scenarios.iter().enumerate() {
                let seed = seeds::scenario_seed(scheme_seed, index);
                let report = run_scenario(&t, scenario, seed, mode, options)?;
                on_report(&report)?;
            }
        }
    }
    Ok(())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsReport>, HarnessError> {
    let mut reports = Vec::new();
    run_experiment_with(config, |r| {
        reports.push(r.clone());
        Ok(())
    })?;
    Ok(reports)
}
