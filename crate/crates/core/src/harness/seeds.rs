//! Hierarchical seed derivation.
//!
//! Every random stream of a run is derived from the master seed:
//!
//! ```text
//! arrival  = derive(master, "arrival", 0)
//! scheme   = derive(master, "scheme", scheme index in GEO, GH, RGH)
//! scenario = derive(scheme, "scenario", scenario index in the config)
//! trial    = derive(scenario, "trial", trial index)
//! pairs    = derive(master, "pairs", network size)
//! ```
//!
//! Arrival and pair seeds skip the scheme level so that all schemes see the
//! same arrivals and the same sampled pairs.

use crate::addressing::Scheme;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ label_hash(label)) ^ index)
}

pub fn arrival_seed(master: u64) -> u64 {
    derive(master, "arrival", 0)
}

pub fn scheme_seed(master: u64, scheme: Scheme) -> u64 {
    let index = match scheme {
        Scheme::Geo => 0,
        Scheme::Gh => 1,
        Scheme::Rgh => 2,
    };
    derive(master, "scheme", index)
}

pub fn scenario_seed(scheme_seed: u64, scenario_index: usize) -> u64 {
    derive(scheme_seed, "scenario", scenario_index as u64)
}

pub fn trial_seed(scenario_seed: u64, trial: usize) -> u64 {
    derive(scenario_seed, "trial", trial as u64)
}

pub fn pair_seed(master: u64, n: usize) -> u64 {
    derive(master, "pairs", n as u64)
}
