//! Property tests for the spec-level invariants: format round trips,
//! key-partition determinism of extraction, correlation invariances, and
//! the metric identities.

use bgpscope_core::event::{
    parse_event_log, write_event_log, BgpState, EventDetail, Prefix, UpdateEvent,
};
use bgpscope_core::eval::{confusion_metrics, distance_matrix, SquareMatrix};
use bgpscope_core::features::{extract_features, ExtractionConfig};
use bgpscope_core::matrix::FeatureMatrix;
use bgpscope_core::selector::{flag_outliers, majority_smooth};
use bgpscope_core::stats::pearson;
use proptest::prelude::*;
use std::net::{IpAddr, Ipv4Addr};

fn arb_prefix() -> impl Strategy<Value = Prefix> {
    (any::<u32>(), 1u8..=32).prop_map(|(addr, len)| {
        Prefix::new(IpAddr::V4(Ipv4Addr::from(addr)), len).unwrap()
    })
}

fn arb_state_pair() -> impl Strategy<Value = (BgpState, BgpState)> {
    (1u16..=6, 1u16..=6)
        .prop_filter("states differ", |(a, b)| a != b)
        .prop_map(|(a, b)| (BgpState::from_code(a).unwrap(), BgpState::from_code(b).unwrap()))
}

fn arb_event() -> impl Strategy<Value = UpdateEvent> {
    let announce = (
        arb_prefix(),
        proptest::collection::vec(1u32..1_000_000, 0..6),
        proptest::option::of(any::<u32>()),
        any::<u64>(),
    )
        .prop_map(|(prefix, as_path, nh, attr_digest)| EventDetail::Announce {
            prefix,
            as_path,
            next_hop: nh.map(|v| IpAddr::V4(Ipv4Addr::from(v))),
            attr_digest,
        });
    let withdraw = arb_prefix().prop_map(|prefix| EventDetail::Withdraw { prefix });
    let state = arb_state_pair().prop_map(|(old_state, new_state)| EventDetail::StateChange {
        old_state,
        new_state,
    });
    (
        0u64..2_000_000_000,
        any::<u32>(),
        1u32..65536,
        prop_oneof![announce, withdraw, state],
    )
        .prop_map(|(timestamp, ip, peer_as, detail)| UpdateEvent {
            timestamp,
            peer_ip: IpAddr::V4(Ipv4Addr::from(ip)),
            peer_as,
            detail,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn event_log_round_trip(events in proptest::collection::vec(arb_event(), 0..60)) {
        let text = write_event_log(&events).unwrap();
        let back = parse_event_log(&text).unwrap();
        prop_assert_eq!(&back, &events);
        // Canonical text is a fixed point.
        prop_assert_eq!(write_event_log(&back).unwrap(), text);
    }

    #[test]
    fn pearson_affine_invariance(
        base in proptest::collection::vec(-50.0f64..50.0, 10..60),
        noise in proptest::collection::vec(-50.0f64..50.0, 60),
        a in 0.1f64..10.0,
        b in -20.0f64..20.0,
    ) {
        let n = base.len();
        let x = base;
        let y: Vec<f64> = noise[..n].to_vec();
        // Skip pathologically flat draws; the 1e-12 bound presumes sane
        // conditioning.
        let (_, sx) = bgpscope_core::num::mean_and_sample_std(&x);
        let (_, sy) = bgpscope_core::num::mean_and_sample_std(&y);
        prop_assume!(sx > 1.0 && sy > 1.0);
        let r_xy = match pearson(&x, &y) {
            Ok(r) => r,
            Err(_) => return Ok(()), // constant by chance
        };
        let x_up: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r_up = pearson(&x_up, &y).unwrap();
        prop_assert!((r_up - r_xy).abs() < 1e-12);
        let x_dn: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        let r_dn = pearson(&x_dn, &y).unwrap();
        prop_assert!((r_dn + r_xy).abs() < 1e-12);
        // Symmetry is exact.
        prop_assert_eq!(pearson(&y, &x).unwrap(), r_xy);
    }

    #[test]
    fn flag_outliers_affine_invariance(
        series in proptest::collection::vec(-100.0f64..100.0, 1..80),
        mu in -10.0f64..10.0,
        sigma in 0.0f64..5.0,
        a in prop_oneof![-8.0f64..-0.05, 0.05f64..8.0],
        b in -20.0f64..20.0,
    ) {
        let mapped: Vec<f64> = series.iter().map(|v| a * v + b).collect();
        let base = flag_outliers(&series, mu, sigma);
        let moved = flag_outliers(&mapped, a * mu + b, a.abs() * sigma);
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn majority_smooth_shape(flags in proptest::collection::vec(any::<bool>(), 0..200), k in 1usize..12) {
        let blocks = majority_smooth(&flags, k);
        prop_assert_eq!(blocks.len(), flags.len().div_ceil(k));
        if k == 1 {
            prop_assert_eq!(blocks, flags);
        }
    }

    #[test]
    fn confusion_identities_hold_in_exact_arithmetic(
        outcomes in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..300),
    ) {
        let predicted: Vec<bool> = outcomes.iter().map(|(p, _)| *p).collect();
        let truth: Vec<bool> = outcomes.iter().map(|(_, t)| *t).collect();
        let m = confusion_metrics::<f64>(&predicted, &truth).unwrap();
        let total = (m.tp + m.fp + m.tn + m.fn_) as u128;
        prop_assert_eq!(total, outcomes.len() as u128);
        // Each rate is the correctly rounded value of its defining
        // rational: recomputing from the integer counts must reproduce it
        // bit for bit.
        if m.tp + m.fn_ > 0 {
            prop_assert_eq!(m.tpr, m.tp as f64 / (m.tp + m.fn_) as f64);
        } else {
            prop_assert_eq!(m.tpr, 0.0);
        }
        if m.fp + m.tn > 0 {
            prop_assert_eq!(m.fpr, m.fp as f64 / (m.fp + m.tn) as f64);
        }
        prop_assert_eq!(m.accuracy, (m.tp + m.tn) as f64 / total as f64);
        match m.precision {
            Some(p) => prop_assert_eq!(p, m.tp as f64 / (m.tp + m.fp) as f64),
            None => prop_assert_eq!(m.tp + m.fp, 0),
        }
    }

    #[test]
    fn distance_matrix_symmetry_and_permutation(
        int_cells in proptest::collection::vec(0u32..=100, 16),
        swap in (0usize..4, 0usize..4),
    ) {
        // Integer-valued cells keep every sum exact, so permutation
        // equivalence can be asserted bitwise.
        let cells: Vec<f64> = int_cells.iter().map(|&v| v as f64).collect();
        let names: Vec<String> = (0..4).map(|i| format!("e{i}")).collect();
        let am = SquareMatrix::from_parts(
            names.clone(),
            cells.iter().map(|&v| Some(v)).collect(),
        ).unwrap();
        let d = distance_matrix(&am);
        for i in 0..4 {
            prop_assert_eq!(d.get(i, i), Some(0.0));
            for j in 0..4 {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                prop_assert!(d.get(i, j).unwrap() >= 0.0);
            }
        }

        // Permuting events permutes distances identically.
        let (a, b) = swap;
        let mut perm: Vec<usize> = (0..4).collect();
        perm.swap(a, b);
        let permuted_cells: Vec<Option<f64>> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| Some(cells[perm[i] * 4 + perm[j]]))
            .collect();
        let am_p = SquareMatrix::from_parts(names, permuted_cells).unwrap();
        let d_p = distance_matrix(&am_p);
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(d_p.get(i, j), d.get(perm[i], perm[j]));
            }
        }
    }
}

/// Key-partition determinism: extracting a stream equals extracting the
/// per-key partitions and summing the per-key-decomposable columns per bin.
#[test]
fn extraction_is_key_partition_decomposable() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);

    let peers: Vec<IpAddr> = (0..4).map(|i| IpAddr::V4(Ipv4Addr::new(192, 0, 2, i + 1))).collect();
    let prefixes: Vec<Prefix> = (0..6)
        .map(|i| Prefix::new(IpAddr::V4(Ipv4Addr::new(10, i, 0, 0)), 16).unwrap())
        .collect();

    let mut events = Vec::new();
    let start = 5_000u64;
    for t in 0..600 {
        let peer = peers[rng.gen_range(0..peers.len())];
        let prefix = prefixes[rng.gen_range(0..prefixes.len())].clone();
        let detail = if rng.gen_bool(0.6) {
            EventDetail::Announce {
                prefix,
                as_path: vec![rng.gen_range(1..5) as u32 * 100],
                next_hop: Some(peer),
                attr_digest: rng.gen_range(0..3),
            }
        } else {
            EventDetail::Withdraw { prefix }
        };
        events.push(UpdateEvent {
            timestamp: start + t,
            peer_ip: peer,
            peer_as: 65000,
            detail,
        });
    }

    let config = ExtractionConfig {
        bin_width: 30,
        dataset_start: Some(start),
        ..ExtractionConfig::default()
    };
    let whole: FeatureMatrix<f64> = extract_features(&events, &config).unwrap();

    // Partition by key parity and extract each half with the same origin.
    let key_group = |e: &UpdateEvent| -> usize {
        let p = e.prefix().expect("updates only in this stream");
        (format!("{}|{p}", e.peer_ip).len() + p.len as usize) % 2
    };
    let decomposable = [
        "Announce", "Withdrawal", "Update", "AnnouPrefix", "WithdwPrefix", "UpdatedPrefix",
        "WWDup", "AADupType1", "AADupType2", "AADiff", "WADupType1", "WADupType2", "WADup",
        "WADiff", "AW",
    ];
    let mut summed = vec![vec![0.0f64; decomposable.len()]; whole.nrows()];
    for group in 0..2 {
        let part: Vec<UpdateEvent> = events
            .iter()
            .filter(|e| key_group(e) == group)
            .cloned()
            .collect();
        if part.is_empty() {
            continue;
        }
        let m: FeatureMatrix<f64> = extract_features(&part, &config).unwrap();
        for (r, key) in m.bin_keys().iter().enumerate() {
            let row = key.index as usize;
            for (c, name) in decomposable.iter().enumerate() {
                summed[row][c] += m.value(r, m.column_index(name).unwrap());
            }
        }
    }
    for (r, row) in summed.iter().enumerate() {
        for (c, name) in decomposable.iter().enumerate() {
            assert_eq!(
                whole.value(r, whole.column_index(name).unwrap()),
                row[c],
                "bin {r} column {name}"
            );
        }
    }
}
