use rand::Rng;
use serde::{Deserialize, Serialize};

use super::VirtualTime;

/// How long a single transmission attempt takes to cross a link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DelayModel {
    /// Every message takes exactly `d`.
    Fixed { d: VirtualTime },
    /// Delay drawn uniformly from `[d - u, d]`.
    Uniform { d: VirtualTime, u: VirtualTime },
    /// `d_local` between processes on the same site, `d_remote` otherwise.
    Topology {
        d_local: VirtualTime,
        d_remote: VirtualTime,
    },
}

impl DelayModel {
    pub fn fixed(d: u64) -> Self {
        DelayModel::Fixed { d: VirtualTime(d) }
    }

    pub fn uniform(d: u64, u: u64) -> Self {
        DelayModel::Uniform {
            d: VirtualTime(d),
            u: VirtualTime(u),
        }
    }

    pub fn topology(d_local: u64, d_remote: u64) -> Self {
        DelayModel::Topology {
            d_local: VirtualTime(d_local),
            d_remote: VirtualTime(d_remote),
        }
    }

    /// The nominal (maximum) delay `d`. Used to size clock skew, the default
    /// retry interval and algorithm timeouts.
    pub fn nominal(&self) -> VirtualTime {
        match *self {
            DelayModel::Fixed { d } | DelayModel::Uniform { d, .. } => d,
            DelayModel::Topology { d_remote, .. } => d_remote,
        }
    }

    /// Returns a list of `(field, problem)` pairs; empty when the model is valid.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match *self {
            DelayModel::Fixed { .. } => {}
            DelayModel::Uniform { d, u } => {
                if u > d {
                    out.push(("u", format!("uncertainty u={} exceeds delay d={}", u, d)));
                }
            }
            DelayModel::Topology { d_local, d_remote } => {
                if d_local > d_remote {
                    out.push((
                        "d_local",
                        format!("d_local={} exceeds d_remote={}", d_local, d_remote),
                    ));
                }
            }
        }
        out
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R, same_site: bool) -> VirtualTime {
        match *self {
            DelayModel::Fixed { d } => d,
            DelayModel::Uniform { d, u } => VirtualTime(rng.gen_range(d.0 - u.0..=d.0)),
            DelayModel::Topology { d_local, d_remote } => {
                if same_site {
                    d_local
                } else {
                    d_remote
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_stays_in_range() {
        let model = DelayModel::uniform(10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let t = model.sample(&mut rng, false).0;
            assert!((6..=10).contains(&t), "{t}");
        }
    }

    #[test]
    fn rejects_u_above_d() {
        let problems = DelayModel::uniform(10, 11).problems();
        assert_eq!(problems.len(), 1);
        assert_eq!(problems[0].0, "u");
        assert!(DelayModel::uniform(10, 10).problems().is_empty());
        assert_eq!(DelayModel::topology(5, 1).problems()[0].0, "d_local");
    }

    #[test]
    fn topology_picks_by_site() {
        let model = DelayModel::topology(1, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(model.sample(&mut rng, true), VirtualTime(1));
        assert_eq!(model.sample(&mut rng, false), VirtualTime(100));
        assert_eq!(model.nominal(), VirtualTime(100));
    }
}
