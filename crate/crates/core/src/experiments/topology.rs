//! Replicas spread over datacenters, with cheap links inside a site and
//! expensive ones between sites. Each configuration is swept over the
//! inter-site delay while the intra-site delay stays fixed.

use serde::Serialize;

use super::{sweep_scenarios, ExperimentError, LatencyReport, Workload};
use crate::registers::Algorithm;
use crate::simnet::DelayModel;

pub const D_LOCAL: u64 = 1;
pub const D_REMOTE_VALUES: [u64; 3] = [100, 200, 400];

#[derive(Clone, Debug, Serialize)]
pub struct TopologyReport {
    pub d_local: u64,
    /// ABD with all replicas in one site.
    pub abd_intra_site: LatencyReport,
    /// Causal register with one replica per site.
    pub causal_cross_site: LatencyReport,
    /// ABD with one replica per site, so every majority crosses sites.
    pub abd_spread: LatencyReport,
}

fn sweep(
    algorithm: Algorithm,
    sites: &[&str],
    seed: u64,
) -> Result<LatencyReport, ExperimentError> {
    let workload = Workload::standard();
    sweep_scenarios(algorithm.name(), seed, &D_REMOTE_VALUES, |d_remote| {
        workload
            .scenario(algorithm, DelayModel::topology(D_LOCAL, d_remote), seed)
            .sites(sites)
    })
}

pub fn topology_experiment(seed: u64) -> Result<TopologyReport, ExperimentError> {
    Ok(TopologyReport {
        d_local: D_LOCAL,
        abd_intra_site: sweep(Algorithm::Abd, &["east", "east", "east"], seed)?,
        causal_cross_site: sweep(Algorithm::Causal, &["east", "west", "asia"], seed)?,
        abd_spread: sweep(Algorithm::Abd, &["east", "west", "asia"], seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Classification;
    use crate::histories::OpKind;

    #[test]
    fn shapes() {
        let r = topology_experiment(1).unwrap();
        for op in [OpKind::Read, OpKind::Write] {
            assert_eq!(r.abd_intra_site.maxima(op), [4, 4, 4]);
            assert_eq!(r.causal_cross_site.maxima(op), [0, 0, 0]);
            assert_eq!(r.abd_spread.maxima(op), [400, 800, 1600]);
            assert_eq!(
                r.abd_spread.fit(op).classification,
                Classification::DelaySensitive
            );
            assert_eq!(
                r.abd_intra_site.fit(op).classification,
                Classification::DelayIndependent
            );
        }
    }
}
