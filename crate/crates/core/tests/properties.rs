use proptest::prelude::*;
use vrsim_core::analytics::{summary, threshold_fraction, windowed_rate, windowed_rate_by};
use vrsim_core::netsim::fragment::{
    fragment, fragment_frames, reassemble, HEADER_BYTES, MPDU_PAYLOAD,
};
use vrsim_core::netsim::{
    estimate_offset, fit_lognormal, link_transport_delay, LinkModel, LognormalFit, ReassemblyError,
};
use vrsim_core::trace::{read_trace, write_trace, Direction, Layer, TraceKind, TraceRecord};

fn record() -> impl Strategy<Value = (u64, bool, bool, u8, u32, u64, u32)> {
    (
        0u64..5_000_000,
        any::<bool>(),
        any::<bool>(),
        0u8..4,
        1u32..100_000,
        0u64..1000,
        0u32..80,
    )
}

fn to_trace(mut rows: Vec<(u64, bool, bool, u8, u32, u64, u32)>) -> Vec<TraceRecord> {
    rows.sort_by_key(|r| r.0);
    rows.into_iter()
        .map(|(t, dl, mac, k, size, id, frag)| TraceRecord {
            t_us: t,
            direction: if dl { Direction::Dl } else { Direction::Ul },
            layer: if mac { Layer::Mac } else { Layer::App },
            kind: [
                TraceKind::Video,
                TraceKind::Tracking,
                TraceKind::Cloud,
                TraceKind::Probe,
            ][k as usize],
            size_bytes: size,
            frame_id: id,
            fragment_index: mac.then_some(frag),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fragment_round_trip(n in 1u32..=1_000_000) {
        let frames = fragment_frames(7, n).unwrap();
        prop_assert_eq!(frames.len() as u32, n.div_ceil(MPDU_PAYLOAD));
        prop_assert!(frames[..frames.len() - 1].iter().all(|f| f.payload_bytes == MPDU_PAYLOAD));
        prop_assert_eq!(frames.iter().map(|f| f.payload_bytes).sum::<u32>(), n);
        let wire: u32 = frames.iter().map(|f| f.wire_bytes).sum();
        prop_assert_eq!(wire, n + HEADER_BYTES * frames.len() as u32);
        prop_assert_eq!(reassemble(&frames).unwrap(), n);
    }

    #[test]
    fn dropping_any_fragment_is_detected(n in 1401u32..200_000, pick in any::<prop::sample::Index>()) {
        let mut frames = fragment_frames(1, n).unwrap();
        let k = pick.index(frames.len());
        frames.remove(k);
        prop_assert_eq!(reassemble(&frames), Err(ReassemblyError::Missing { parent: 1, missing: k as u32 }));
    }

    #[test]
    fn nearest_rank_matches_sort_and_index(v in prop::collection::vec(-1e6f64..1e6, 1..500)) {
        let s = summary(&v).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = (0.95 * v.len() as f64).ceil() as usize;
        prop_assert_eq!(s.p95, sorted[rank.max(1) - 1]);
        prop_assert_eq!(s.min, sorted[0]);
        prop_assert_eq!(s.max, *sorted.last().unwrap());
    }

    #[test]
    fn windowed_rate_conserves_bits(rows in prop::collection::vec(record(), 0..300), w in 1u32..3000) {
        let trace = to_trace(rows);
        let window_s = f64::from(w) / 1000.0;
        for layer in [Layer::App, Layer::Mac] {
            let series = windowed_rate(&trace, layer, window_s).unwrap();
            let expected: u64 = trace.iter().filter(|r| r.layer == layer).map(|r| r.bits()).sum();
            prop_assert_eq!(series.total_bits(), expected);
            if let Some(last) = trace.iter().filter(|r| r.layer == layer).map(|r| r.t_us).max() {
                let w_us = u64::from(w) * 1000;
                prop_assert_eq!(series.samples.len() as u64, last / w_us + 1);
            }
        }
    }

    #[test]
    fn scaling_sizes_scales_rates(rows in prop::collection::vec(record(), 1..200), k in 1u32..8, thr in 1u32..100_000) {
        let trace = to_trace(rows);
        let scaled: Vec<TraceRecord> = trace.iter().map(|r| TraceRecord { size_bytes: r.size_bytes * k, ..*r }).collect();
        let a = windowed_rate_by(&trace, 1.0, |_| true).unwrap();
        let b = windowed_rate_by(&scaled, 1.0, |_| true).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            prop_assert_eq!(x.bits * u64::from(k), y.bits);
        }
        let sizes: Vec<u32> = trace.iter().map(|r| r.size_bytes).collect();
        let big: Vec<u32> = scaled.iter().map(|r| r.size_bytes).collect();
        prop_assert_eq!(threshold_fraction(&sizes, thr).unwrap(), threshold_fraction(&big, thr * k).unwrap());
    }

    #[test]
    fn trace_csv_round_trip(rows in prop::collection::vec(record(), 0..200)) {
        let trace = to_trace(rows);
        let mut a = Vec::new();
        write_trace(&mut a, &trace).unwrap();
        let back = read_trace(a.as_slice()).unwrap();
        prop_assert_eq!(&back, &trace);
        let mut b = Vec::new();
        write_trace(&mut b, &back).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn offset_error_is_half_asymmetry(
        off in -1_000_000i64..1_000_000,
        d in 0i64..100_000,
        a in -50_000i64..50_000,
        turn in 0i64..10_000,
        t1 in 0i64..1_000_000_000,
    ) {
        prop_assume!(d + a >= 0);
        let t2 = t1 + d + off;
        let t3 = t2 + turn;
        let t4 = t1 + d + turn + d + a;
        let e = estimate_offset(t1, t2, t3, t4).unwrap();
        prop_assert!((e.offset_us - off as f64 - (-a as f64 / 2.0)).abs() <= 1e-9);
        prop_assert_eq!(e.rtt_us, 2 * d + a);
    }

    #[test]
    fn corrected_legs_sum_to_rtt(off in -1_000_000i64..1_000_000, d in 0i64..100_000, span in 0i64..50_000) {
        // Symmetric paths: corrected uplink + server span + corrected downlink = client RTT.
        let t1 = 1_000;
        let t2 = t1 + d + off;
        let t3 = t2 + span;
        let t4 = t1 + d + span + d;
        let e = estimate_offset(t1, t2, t3, t4).unwrap();
        let up = (t2 as f64 - e.offset_us) - t1 as f64;
        let down = t4 as f64 - (t3 as f64 - e.offset_us);
        prop_assert_eq!(up + span as f64 + down, (t4 - t1) as f64);
    }

    #[test]
    fn lognormal_fit_recovers_sigma(sigma in 0.01f64..1.6, mean in 0.1f64..500.0) {
        let p95 = mean * (1.644_853_626_951_472_2 * sigma - 0.5 * sigma * sigma).exp();
        match fit_lognormal(mean, p95).unwrap() {
            LognormalFit::Lognormal(p) => {
                prop_assert!((p.sigma - sigma).abs() < 1e-6);
                prop_assert!((p.mean() / mean - 1.0).abs() < 1e-12);
            }
            LognormalFit::Constant(_) => prop_assert!(false, "unexpected constant"),
        }
    }

    #[test]
    fn link_delay_monotone_in_size(a in 1u32..500_000, b in 1u32..500_000) {
        let link = LinkModel::default();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(link_transport_delay(lo, &link) <= link_transport_delay(hi, &link));
    }
}

#[test]
fn ten_thousand_sizes_round_trip() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=1_000_000u32);
        let sizes = fragment(n).unwrap();
        assert_eq!(sizes.iter().sum::<u32>(), n);
        assert_eq!(reassemble(&fragment_frames(0, n).unwrap()).unwrap(), n);
    }
}
