use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use geohyper::addressing::{partition_regions, Scheme, SchemeConfig};
use geohyper::harness::config::{ArrivalPolicyConfig, ExperimentConfig, RegionSource, ZoneSource};
use geohyper::harness::experiment::{load_inputs, plan_scheme};
use geohyper::harness::report::{emit_report, format_sig6};
use geohyper::harness::zones::write_zones;
use geohyper::harness::{load_zones, run_experiment_with, synth_zones, HarnessError};
use geohyper::harness::{Placement, SyntheticZoneSpec};
use geohyper::routing::{Outcome, RoutingContext, RoutingOptions};
use geohyper::topology::{NodeId, Topology};

#[derive(Parser)]
#[command(name = "geohyper", version, about = "Geohyperbolic greedy routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Uniform,
    Clustered,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrivalArg {
    Deterministic,
    Randomized,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Zipf-scored zone file.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        placement: PlacementArg,
        #[arg(long, default_value_t = 50)]
        clusters: usize,
        #[arg(long, default_value_t = 5.0)]
        spread_deg: f64,
        /// Score of the top zone; defaults to the zone count.
        #[arg(long)]
        top_score: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the built-in region partition of a zone file.
    Regions {
        #[arg(long)]
        zones: PathBuf,
        #[arg(long, default_value_t = SchemeConfig::DEFAULT_NUM_REGIONS)]
        num_regions: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Grow a topology and write its dump.
    Grow {
        #[arg(long)]
        zones: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        /// Number of nodes; all zones when omitted.
        #[arg(long)]
        size: Option<usize>,
        /// Region file for RGH; the built-in partition when omitted.
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long, default_value_t = SchemeConfig::DEFAULT_XI)]
        xi: f64,
        #[arg(long, default_value_t = SchemeConfig::DEFAULT_M)]
        m: usize,
        #[arg(long, default_value_t = SchemeConfig::DEFAULT_NUM_REGIONS)]
        num_regions: usize,
        #[arg(long, default_value_t = SchemeConfig::DEFAULT_N_HUBS)]
        n_hubs: usize,
        #[arg(long, value_enum, default_value = "deterministic")]
        arrival: ArrivalArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// RGH hubs arrive first (randomized arrival only).
        #[arg(long)]
        hubs_first: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Trace one greedy route through a topology dump.
    Route {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        src: usize,
        #[arg(long)]
        dst: usize,
        #[arg(long)]
        strict_progress: bool,
    },
    /// Run an experiment config and write the CSV report and manifest.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long, default_value = "report.csv")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| HarnessError::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_all(path: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    let name = path.as_deref().unwrap_or(Path::new("<stdout>"));
    let mut out = output_writer(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(name, e))
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Synth {
            count,
            seed,
            placement,
            clusters,
            spread_deg,
            top_score,
            output,
        } => {
            let placement = match placement {
                PlacementArg::Uniform => Placement::Uniform,
                PlacementArg::Clustered => Placement::Clustered {
                    clusters,
                    spread_deg,
                },
            };
            let spec = SyntheticZoneSpec {
                top_score,
                ..SyntheticZoneSpec::new(count, placement, seed)
            };
            spec.validate().map_err(HarnessError::Config)?;
            let mut buf = Vec::new();
            write_zones(&synth_zones(&spec), &mut buf).expect("writing to memory");
            write_all(&output, &String::from_utf8(buf).expect("utf-8 csv"))
        }
        Command::Regions {
            zones,
            num_regions,
            output,
        } => {
            let table = load_zones(&zones)?;
            let regions = partition_regions(&table, num_regions)?;
            write_all(&output, &regions.to_csv())
        }
        Command::Grow {
            zones,
            scheme,
            size,
            regions,
            xi,
            m,
            num_regions,
            n_hubs,
            arrival,
            seed,
            hubs_first,
            output,
        } => {
            let mut config = ExperimentConfig::new(ZoneSource::File { path: zones }, seed);
            config.schemes = vec![scheme];
            config.xi = xi;
            config.m = m;
            config.num_regions = num_regions;
            config.n_hubs = n_hubs;
            if let Some(path) = regions {
                config.region_source = RegionSource::File { path };
            }
            config.arrival_policy = match arrival {
                ArrivalArg::Deterministic => ArrivalPolicyConfig::DeterministicRank,
                ArrivalArg::Randomized => ArrivalPolicyConfig::RandomizedProportional {
                    seed: Some(seed),
                    hubs_first,
                },
            };
            config.validate()?;
            let inputs = load_inputs(&config)?;
            let n = size.unwrap_or(inputs.zones.len());
            let plan = plan_scheme(&inputs, &config, scheme, n)?;
            let topology = plan.grow(n)?;
            write_all(&output, &topology.to_dump())
        }
        Command::Route {
            topology,
            src,
            dst,
            strict_progress,
        } => {
            let file =
                std::fs::File::open(&topology).map_err(|e| HarnessError::io(&topology, e))?;
            let t = Topology::read_dump(std::io::BufReader::new(file))?;
            let options = RoutingOptions {
                strict_progress,
                ..RoutingOptions::default()
            };
            let ctx = RoutingContext::new(&t, options);
            let (src, dst) = (NodeId(src), NodeId(dst));
            let route = ctx.greedy_route(src, dst)?;
            println!("hop node distance_to_dst hop_delay_ms");
            for (i, &node) in route.path.iter().enumerate() {
                let hop_delay = match i {
                    0 => "-".to_string(),
                    _ => format_sig6(
                        ctx.link_delay(route.path[i - 1], node)
                            .expect("consecutive path nodes are linked"),
                    ),
                };
                println!("{i} {node} {} {hop_delay}", format_sig6(t.distance(node, dst)));
            }
            match route.outcome {
                Outcome::Success => println!(
                    "success hops={} delay_ms={}",
                    route.hops(),
                    format_sig6(route.delay_ms.expect("success carries a delay"))
                ),
                Outcome::Failure(reason) => println!("failure {reason:?} hops={}", route.hops()),
            }
            Ok(())
        }
        Command::Eval { config, output } => {
            let config = ExperimentConfig::from_path(&config)?;
            let mut reports = Vec::new();
            let result = run_experiment_with(&config, |r| {
                eprintln!(
                    "{} n={} {} sr={}",
                    r.scheme,
                    r.n,
                    r.scenario,
                    format_sig6(r.sr)
                );
                reports.push(r.clone());
                Ok(())
            });
            let complete = result.is_ok();
            if complete || !reports.is_empty() {
                emit_report(&reports, &config, complete, &output)?;
            }
            result
        }
    }
}
