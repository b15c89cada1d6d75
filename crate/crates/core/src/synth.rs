//! Deterministic synthetic BGP event streams with labeled anomaly intervals.
//!
//! Two scenario families: worm-style update storms (announcement and
//! path-churn bursts) and blackout-style outages (session drops, withdrawal
//! waves, table re-exchange on recovery). Streams are reproducible byte for
//! byte from the seed; randomness comes from ChaCha8 with per-bin Poisson
//! arrival counts.

use crate::error::{Error, Result};
use crate::event::{BgpState, EventDetail, Prefix, UpdateEvent};
use crate::features::ExtractionConfig;
use crate::matrix::BinRange;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::net::{IpAddr, Ipv4Addr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Worm,
    Blackout,
}

/// What changes inside the anomaly interval. The neutral profile (all
/// multipliers 1, no drops) makes the interval statistically identical to
/// the normal period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyProfile {
    pub announce_mult: f64,
    pub withdraw_mult: f64,
    /// Multiplies the path-churn probability.
    pub churn_mult: f64,
    /// Blackout only: fraction of peers whose sessions drop.
    pub peer_drop_fraction: f64,
}

impl AnomalyProfile {
    pub fn neutral() -> Self {
        AnomalyProfile {
            announce_mult: 1.0,
            withdraw_mult: 1.0,
            churn_mult: 1.0,
            peer_drop_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub dataset_id: String,
    pub duration_bins: usize,
    pub anomaly_interval: BinRange,
    pub peer_count: usize,
    pub prefix_count: usize,
    /// Poisson mean of announcements per peer per bin.
    pub announce_rate: f64,
    /// Poisson mean of withdrawals per peer per bin.
    pub withdraw_rate: f64,
    /// Probability an announcement switches to a different path.
    pub path_churn: f64,
    /// Probability an announcement flips its attribute digest while keeping
    /// the path (duplicate-type-2 traffic).
    pub attr_flap: f64,
    pub anomaly: AnomalyProfile,
    pub bin_width: u64,
    pub start_time: u64,
    /// Start with every (peer, prefix) pair already announced (state only,
    /// no synthetic bring-up burst in bin 0).
    pub warm_start: bool,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.duration_bins == 0 || self.peer_count == 0 || self.prefix_count == 0 {
            return Err(Error::param("duration, peers and prefixes must be positive"));
        }
        if self.anomaly_interval.end >= self.duration_bins {
            return Err(Error::param("anomaly interval outside scenario duration"));
        }
        if self.announce_rate < 0.0 || self.withdraw_rate < 0.0 {
            return Err(Error::param("rates must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.anomaly.peer_drop_fraction) {
            return Err(Error::param("peer drop fraction must lie in [0, 1]"));
        }
        if self.bin_width == 0 {
            return Err(Error::param("bin width must be positive"));
        }
        Ok(())
    }

    /// Extraction settings matching this scenario's labels.
    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            bin_width: self.bin_width,
            dataset_start: Some(self.start_time),
            dataset_id: Some(self.dataset_id.clone()),
            anomaly_interval: Some(self.anomaly_interval),
            ..ExtractionConfig::default()
        }
    }
}

/// The six shipped scenario presets.
pub const PRESET_NAMES: [&str; 6] = [
    "nimda-like",
    "slammer-like",
    "codered-like",
    "eastcoast-like",
    "florida-like",
    "katrina-like",
];

/// A named preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig {
        kind: ScenarioKind::Worm,
        dataset_id: name.to_string(),
        duration_bins: 2000,
        anomaly_interval: BinRange::new(1400, 1699).expect("static range"),
        peer_count: 8,
        prefix_count: 150,
        announce_rate: 6.0,
        withdraw_rate: 1.5,
        path_churn: 0.2,
        attr_flap: 0.1,
        anomaly: AnomalyProfile::neutral(),
        bin_width: 60,
        start_time: 1_000_000_000,
        warm_start: true,
        seed: 0,
    };
    let worm = |mult: f64, churn: f64| AnomalyProfile {
        announce_mult: mult,
        withdraw_mult: 2.0,
        churn_mult: churn,
        peer_drop_fraction: 0.0,
    };
    let blackout = |drop: f64, wd: f64| AnomalyProfile {
        announce_mult: 0.5,
        withdraw_mult: wd,
        churn_mult: 1.0,
        peer_drop_fraction: drop,
    };
    let cfg = match name {
        "nimda-like" => ScenarioConfig {
            kind: ScenarioKind::Worm,
            anomaly_interval: BinRange::new(1400, 1799).expect("static"),
            anomaly: worm(15.0, 8.0),
            seed: 1101,
            ..base
        },
        "slammer-like" => ScenarioConfig {
            kind: ScenarioKind::Worm,
            anomaly_interval: BinRange::new(1450, 1699).expect("static"),
            anomaly: worm(25.0, 10.0),
            seed: 1102,
            ..base
        },
        "codered-like" => ScenarioConfig {
            kind: ScenarioKind::Worm,
            anomaly_interval: BinRange::new(1500, 1659).expect("static"),
            anomaly: worm(8.0, 5.0),
            seed: 1103,
            ..base
        },
        "eastcoast-like" => ScenarioConfig {
            kind: ScenarioKind::Blackout,
            anomaly_interval: BinRange::new(1400, 1699).expect("static"),
            anomaly: blackout(1.0, 8.0),
            seed: 1104,
            ..base
        },
        "florida-like" => ScenarioConfig {
            kind: ScenarioKind::Blackout,
            anomaly_interval: BinRange::new(1350, 1829).expect("static"),
            anomaly: blackout(0.7, 6.0),
            seed: 1105,
            ..base
        },
        "katrina-like" => ScenarioConfig {
            kind: ScenarioKind::Blackout,
            anomaly_interval: BinRange::new(1380, 1859).expect("static"),
            anomaly: blackout(0.85, 7.0),
            seed: 1106,
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}

fn peer_ip(i: usize) -> IpAddr {
    IpAddr::V4(Ipv4Addr::from(0x0a00_0001u32 + i as u32))
}

fn prefix_of(p: usize) -> Prefix {
    let addr = Ipv4Addr::from(0x0a10_0000u32 + ((p as u32) << 8));
    Prefix::new(IpAddr::V4(addr), 24).expect("static /24")
}

const PATHS_PER_PREFIX: usize = 3;

fn path_for(p: usize, k: usize) -> Vec<u32> {
    vec![64496 + k as u32, 65000 + (p % 97) as u32]
}

fn digest_for(p: usize, k: usize, flapped: bool) -> u64 {
    let base = 0x5eed_0000_0000_0000u64 ^ ((p as u64) << 8) ^ (k as u64);
    if flapped {
        base ^ 0x1
    } else {
        base
    }
}

struct PairState {
    path: usize,
    announced: bool,
}

/// Generates the event stream for a scenario. Output is timestamp-sorted
/// and identical for identical configs.
pub fn generate(config: &ScenarioConfig) -> Result<Vec<UpdateEvent>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let npeers = config.peer_count;
    let nprefixes = config.prefix_count;

    let mut pairs: Vec<Vec<PairState>> = (0..npeers)
        .map(|_| {
            (0..nprefixes)
                .map(|_| PairState {
                    path: 0,
                    announced: config.warm_start,
                })
                .collect()
        })
        .collect();
    let mut peer_up = vec![true; npeers];
    let mut dropped: Vec<usize> = Vec::new();

    let mut events = Vec::new();
    // Events collected per bin in emission order; timestamps are the sorted
    // random offsets assigned in that same order, so the wire order always
    // matches the generator's state evolution.
    let mut bin_events: Vec<UpdateEvent> = Vec::new();

    let anomaly = config.anomaly_interval;
    let is_blackout = config.kind == ScenarioKind::Blackout;

    for bin in 0..config.duration_bins {
        bin_events.clear();
        let bin_start = config.start_time + bin as u64 * config.bin_width;
        let in_anomaly = anomaly.contains(bin);
        let emit = |q: &mut Vec<UpdateEvent>, peer: usize, detail: EventDetail| {
            q.push(UpdateEvent {
                timestamp: bin_start,
                peer_ip: peer_ip(peer),
                peer_as: 64512 + peer as u32,
                detail,
            });
        };

        // Blackout onset: sessions drop and their tables are withdrawn.
        if is_blackout && bin == anomaly.start && config.anomaly.peer_drop_fraction > 0.0 {
            let n_drop = ((npeers as f64) * config.anomaly.peer_drop_fraction).ceil() as usize;
            let mut order: Vec<usize> = (0..npeers).collect();
            for i in 0..n_drop.min(npeers) {
                let j = rng.gen_range(i..npeers);
                order.swap(i, j);
            }
            dropped = order[..n_drop.min(npeers)].to_vec();
            dropped.sort_unstable();
            for &peer in &dropped {
                peer_up[peer] = false;
                emit(
                    &mut bin_events,
                    peer,
                    EventDetail::StateChange {
                        old_state: BgpState::Established,
                        new_state: BgpState::Idle,
                    },
                );
                for (p, state) in pairs[peer].iter_mut().enumerate() {
                    if state.announced {
                        state.announced = false;
                        emit(
                            &mut bin_events,
                            peer,
                            EventDetail::Withdraw { prefix: prefix_of(p) },
                        );
                    }
                }
            }
        }

        // Blackout recovery at the last anomaly bin: sessions return and
        // tables are re-exchanged, still inside the labeled interval.
        if is_blackout && bin == anomaly.end && !dropped.is_empty() {
            for &peer in &dropped {
                peer_up[peer] = true;
                emit(
                    &mut bin_events,
                    peer,
                    EventDetail::StateChange {
                        old_state: BgpState::Idle,
                        new_state: BgpState::Established,
                    },
                );
                for (p, state) in pairs[peer].iter_mut().enumerate() {
                    state.announced = true;
                    emit(
                        &mut bin_events,
                        peer,
                        EventDetail::Announce {
                            prefix: prefix_of(p),
                            as_path: path_for(p, state.path),
                            next_hop: Some(peer_ip(peer)),
                            attr_digest: digest_for(p, state.path, false),
                        },
                    );
                }
            }
            dropped.clear();
        }

        let (a_mult, w_mult, c_mult) = if in_anomaly {
            (
                config.anomaly.announce_mult,
                config.anomaly.withdraw_mult,
                config.anomaly.churn_mult,
            )
        } else {
            (1.0, 1.0, 1.0)
        };
        let churn = (config.path_churn * c_mult).min(1.0);

        for peer in 0..npeers {
            if !peer_up[peer] {
                continue;
            }
            let n_announce = poisson_draw(&mut rng, config.announce_rate * a_mult);
            for _ in 0..n_announce {
                let p = rng.gen_range(0..nprefixes);
                let flap = rng.gen::<f64>() < config.attr_flap;
                let switch = rng.gen::<f64>() < churn;
                let state = &mut pairs[peer][p];
                if switch {
                    let step = 1 + rng.gen_range(0..PATHS_PER_PREFIX - 1);
                    state.path = (state.path + step) % PATHS_PER_PREFIX;
                }
                state.announced = true;
                emit(
                    &mut bin_events,
                    peer,
                    EventDetail::Announce {
                        prefix: prefix_of(p),
                        as_path: path_for(p, state.path),
                        next_hop: Some(peer_ip(peer)),
                        attr_digest: digest_for(p, state.path, flap),
                    },
                );
            }
            let n_withdraw = poisson_draw(&mut rng, config.withdraw_rate * w_mult);
            for _ in 0..n_withdraw {
                let p = rng.gen_range(0..nprefixes);
                pairs[peer][p].announced = false;
                emit(
                    &mut bin_events,
                    peer,
                    EventDetail::Withdraw { prefix: prefix_of(p) },
                );
            }
        }

        let mut offsets: Vec<u64> = (0..bin_events.len())
            .map(|_| rng.gen_range(0..config.bin_width))
            .collect();
        offsets.sort_unstable();
        for (ev, offset) in bin_events.drain(..).zip(offsets) {
            events.push(UpdateEvent {
                timestamp: ev.timestamp + offset,
                ..ev
            });
        }
    }
    Ok(events)
}

fn poisson_draw(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::is_sorted;
    use crate::features::extract_features;
    use crate::matrix::FeatureMatrix;

    #[test]
    fn same_seed_same_bytes() {
        let config = preset("slammer-like").unwrap();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
        let log_a = crate::event::write_event_log(&a).unwrap();
        let log_b = crate::event::write_event_log(&b).unwrap();
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn streams_are_sorted_and_valid() {
        for name in PRESET_NAMES {
            let config = preset(name).unwrap();
            let events = generate(&config).unwrap();
            assert!(is_sorted(&events), "{name} not sorted");
            assert!(events.iter().all(|e| e.validate().is_ok()), "{name} invalid event");
        }
    }

    #[test]
    fn total_blackout_reaches_zero_peers_and_prefixes() {
        let mut config = preset("eastcoast-like").unwrap();
        config.anomaly.peer_drop_fraction = 1.0;
        let events = generate(&config).unwrap();
        let m: FeatureMatrix<f64> = extract_features(&events, &config.extraction_config()).unwrap();
        let reach = m.column_by_name("ReachPrefix").unwrap();
        let peers = m.column_by_name("NPeers").unwrap();
        let interval = config.anomaly_interval;
        let min_reach = interval.iter().map(|b| reach[b]).fold(f64::MAX, f64::min);
        let min_peers = interval.iter().map(|b| peers[b]).fold(f64::MAX, f64::min);
        assert_eq!(min_reach, 0.0);
        assert_eq!(min_peers, 0.0);
    }

    #[test]
    fn worm_multiplier_gives_strong_update_signal() {
        let config = preset("nimda-like").unwrap();
        assert!(config.anomaly.announce_mult >= 10.0);
        let events = generate(&config).unwrap();
        let m: FeatureMatrix<f64> = extract_features(&events, &config.extraction_config()).unwrap();
        let update = m.column_by_name("Update").unwrap();
        let interval = config.anomaly_interval;
        // Skip the warmup table exchange when profiling the normal period.
        let normal: Vec<f64> = (10..interval.start).map(|b| update[b]).collect();
        let (mu, sigma) = crate::num::mean_and_sample_std(&normal);
        let inside: Vec<f64> = interval.iter().map(|b| update[b]).collect();
        let inside_mean = inside.iter().sum::<f64>() / inside.len() as f64;
        assert!(
            inside_mean >= mu + 5.0 * sigma,
            "inside {inside_mean} vs normal {mu} +/- {sigma}"
        );
    }

    #[test]
    fn label_matches_config() {
        let config = preset("codered-like").unwrap();
        let events = generate(&config).unwrap();
        let m: FeatureMatrix<f64> = extract_features(&events, &config.extraction_config()).unwrap();
        assert_eq!(m.anomaly_interval(), Some(config.anomaly_interval));
        assert_eq!(m.meta().dataset_id.as_deref(), Some("codered-like"));
    }

    #[test]
    fn rejects_bad_interval() {
        let mut config = preset("nimda-like").unwrap();
        config.duration_bins = 100;
        assert!(generate(&config).is_err());
    }
}
