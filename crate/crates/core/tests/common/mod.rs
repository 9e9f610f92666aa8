#![allow(dead_code)]

use c3p_core::workload::{ChannelModel, HelperProfile, HelperSpec, PacketSizes, RuntimeScenario, RuntimeSource};
use c3p_core::SimConfig;

pub fn explicit_helpers(tapes: &[Vec<f64>]) -> Vec<HelperSpec> {
    tapes
        .iter()
        .enumerate()
        .map(|(n, t)| HelperSpec {
            profile: HelperProfile::new(n, 0.0, 1.0, RuntimeScenario::PerPacketIid, ChannelModel::Instant).unwrap(),
            runtimes: RuntimeSource::Explicit(t.clone()),
            stall_after: None,
        })
        .collect()
}

/// Zero-delay config over explicit runtime tapes.
pub fn explicit_config(tapes: &[Vec<f64>], rows: usize) -> SimConfig {
    let mut c = SimConfig::new(explicit_helpers(tapes), rows, PacketSizes::new(8.0, 8.0, 1.0).unwrap(), 0);
    c.record_events = true;
    c
}

/// Three helpers with irregular runtimes.
pub fn irregular_tape() -> Vec<Vec<f64>> {
    vec![vec![1.0, 1.0, 0.5, 1.0, 1.5], vec![1.5, 3.5], vec![3.0, 2.5]]
}

/// Three helpers taking 1, 2 and 10 seconds per row, long enough for any split.
pub fn per_row_speeds() -> Vec<Vec<f64>> {
    vec![vec![1.0; 8], vec![2.0; 8], vec![10.0; 8]]
}

pub fn sampled_helpers(profiles: &[(f64, f64)], scenario: RuntimeScenario, channel: ChannelModel) -> Vec<HelperSpec> {
    profiles
        .iter()
        .enumerate()
        .map(|(n, &(a, mu))| HelperSpec::sampled(HelperProfile::new(n, a, mu, scenario, channel).unwrap()))
        .collect()
}
