use std::collections::HashMap;
use std::path::Path;

use vrsim_core::analytics::{mpdu_gaps, summary, AnalysisWindow, StatsSummary};
use vrsim_core::calibration::header_inflation;
use vrsim_core::netsim::{self, Stage, StageLaw, StageModels};
use vrsim_core::scenario::{load_scenario, ScenarioConfig};
use vrsim_core::trace::{Direction, Layer, TraceKind};
use vrsim_core::trafficgen::{AppFrame, AppKind};

fn scenario(name: &str, duration_s: f64) -> ScenarioConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    let mut c = load_scenario(&p).unwrap();
    c.duration_s = duration_s;
    c
}

fn constant_stages(ms: [f64; 6]) -> StageModels {
    StageModels::from_fn(|s| StageLaw::Constant { ms: ms[s.index()] })
}

#[test]
fn constant_stages_give_constant_totals() {
    let mut c = scenario("rr_h265_30.json", 5.0);
    // Render long enough that a fresh TI always exists and the floor never binds.
    c.stage_models = constant_stages([20.0, 10.0, 6.0, 12.0, 15.0, 5.0]);
    let out = netsim::run(&c).unwrap();
    assert!(out.records.len() > 300);
    // Once the first probe reply arrives, every frame sees the same offset estimate.
    let settled: Vec<f64> = out.records.iter().skip(5).map(|r| r.total_ms()).collect();
    let s = summary(&settled).unwrap();
    assert_eq!(s.min, s.max);
    assert_eq!(s.mean, s.p95);
    assert!((s.mean - 68.0).abs() < 1e-9, "{}", s.mean);
}

#[test]
fn same_seed_same_output() {
    let c = scenario("rr_h265_30.json", 8.0);
    let a = netsim::run(&c).unwrap();
    let b = netsim::run(&c).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.records, b.records);
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(netsim::run(&other).unwrap().trace, a.trace);
}

#[test]
fn frames_bind_latest_tracking_sample() {
    let c = scenario("rr_h265_30.json", 5.0);
    let out = netsim::run(&c).unwrap();
    let ti_times: Vec<(u64, u64)> = out
        .trace
        .iter()
        .filter(|r| r.layer == Layer::App && r.kind == TraceKind::Tracking)
        .map(|r| (r.t_us, r.frame_id))
        .collect();
    for rec in &out.records {
        let expected = ti_times
            .iter()
            .rev()
            .find(|(t, _)| *t <= rec.render_start_us)
            .map(|x| x.1);
        assert_eq!(rec.ti_id, expected, "frame {}", rec.frame_id);
    }
}

#[test]
fn mac_bytes_cover_every_video_frame() {
    let mut c = scenario("rr_h265_30.json", 5.0);
    c.link.fec_redundancy_factor = 1.0;
    let out = netsim::run(&c).unwrap();
    let mut payload: HashMap<u64, (u64, u32)> = HashMap::new();
    for r in out
        .trace
        .iter()
        .filter(|r| r.layer == Layer::Mac && r.kind == TraceKind::Video)
    {
        let e = payload.entry(r.frame_id).or_default();
        e.0 += u64::from(r.size_bytes);
        e.1 += 1;
    }
    for r in out
        .trace
        .iter()
        .filter(|r| r.layer == Layer::App && r.kind == TraceKind::Video)
    {
        let (wire, n) = payload[&r.frame_id];
        assert_eq!(wire, u64::from(r.size_bytes) + 42 * u64::from(n));
        assert_eq!(n, r.size_bytes.div_ceil(1400));
    }
}

#[test]
fn records_are_additive_and_p95_subadditive() {
    let c = scenario("rr_h265_30.json", 30.0);
    let out = netsim::run(&c).unwrap();
    assert!(out.records.iter().all(|r| r.is_additive()));
    let p95 = |v: Vec<f64>| summary(&v).unwrap().p95;
    let total = p95(out.records.iter().map(|r| r.total_ms()).collect());
    let sum: f64 = Stage::ALL
        .iter()
        .map(|&s| p95(out.records.iter().map(|r| r.stage_ms(s)).collect()))
        .sum();
    assert!(total < sum, "{total} vs {sum}");
}

#[test]
fn clock_offset_corrected_out_of_cross_clock_legs() {
    let mut base = scenario("rr_h265_30.json", 5.0);
    base.stage_models = constant_stages([20.0, 10.0, 6.0, 12.0, 15.0, 5.0]);
    let reference = netsim::run(&base).unwrap();

    let mut shifted = base.clone();
    shifted.clock.true_offset_us = 123_456;
    let out = netsim::run(&shifted).unwrap();
    assert!(out
        .offset_estimates
        .iter()
        .all(|e| e.offset_us == 123_456.0));
    // Before the first estimate the full offset leaks into D1/D3; afterwards it cancels.
    let late: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.render_start_us > 1_100_000)
        .collect();
    let late_ref: Vec<_> = reference
        .records
        .iter()
        .filter(|r| r.render_start_us > 1_100_000)
        .collect();
    assert_eq!(late.len(), late_ref.len());
    for (a, b) in late.iter().zip(&late_ref) {
        assert_eq!(a.stages_us, b.stages_us);
    }

    let mut asym = base.clone();
    asym.clock.path_asymmetry_us = 800;
    let out = netsim::run(&asym).unwrap();
    assert!(out.offset_estimates.iter().all(|e| e.offset_us == -400.0));
    let r = out
        .records
        .iter()
        .find(|r| r.render_start_us > 1_100_000)
        .unwrap();
    let d1 = r.stage_ms(Stage::TiUlRender);
    let d1_ref = late_ref[0].stage_ms(Stage::TiUlRender);
    assert!((d1 - d1_ref - 0.4).abs() < 1e-9, "{d1} {d1_ref}");
    assert!(r.is_additive());
}

#[test]
fn loss_discards_frames() {
    let mut c = scenario("rr_h265_30.json", 5.0);
    c.link.loss_prob = 0.01;
    let out = netsim::run(&c).unwrap();
    let video = out
        .trace
        .iter()
        .filter(|r| r.layer == Layer::App && r.kind == TraceKind::Video)
        .count();
    assert!(out.frames_lost > 0);
    assert_eq!(out.records.len() as u64 + out.frames_lost, video as u64);
}

#[test]
fn mechanistic_link_spaces_mpdus_near_forty_us() {
    let c = scenario("rr_h265_30_mechanistic.json", 10.0);
    let out = netsim::run(&c).unwrap();
    let gaps = mpdu_gaps(&out.trace, TraceKind::Video).unwrap();
    assert!(
        gaps.mass_in(0.03, 0.05) > 0.95,
        "{}",
        gaps.mass_in(0.03, 0.05)
    );
    let transport = summary(
        &out.records
            .iter()
            .map(|r| r.stage_ms(Stage::ViTransport))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert!(
        (transport.mean - 6.37).abs() / 6.37 < 0.05,
        "{}",
        transport.mean
    );
}

#[test]
fn overhead_ratio_tracks_redundancy_factor() {
    for f in [1.0, 1.1, 1.2] {
        let mut c = scenario("rr_h265_30.json", 20.0);
        c.link.fec_redundancy_factor = f;
        let out = netsim::run(&c).unwrap();
        let s = StatsSummary::compute(&out.trace, None, &AnalysisWindow::default()).unwrap();
        let ratio = s.video_rates().unwrap().overhead_ratio;
        let expected = f * header_inflation();
        assert!(
            (ratio / expected - 1.0).abs() < 0.005,
            "f={f}: {ratio} vs {expected}"
        );
    }
}

#[test]
fn single_apdu_fragment_counts() {
    let mut c = scenario("rr_h265_30.json", 1.0);
    let streams = netsim::SourceStreams {
        video: vec![AppFrame {
            id: 0,
            kind: AppKind::Video,
            gen_time_us: 0,
            size_bytes: 30_000,
        }],
        ..Default::default()
    };
    let count = |c: &ScenarioConfig| {
        let out = netsim::run_with_streams(c, &streams).unwrap();
        let mac: Vec<_> = out
            .trace
            .iter()
            .filter(|r| {
                r.layer == Layer::Mac && r.kind == TraceKind::Video && r.direction == Direction::Dl
            })
            .map(|r| r.fragment_index.unwrap())
            .collect();
        assert_eq!(out.records.len(), 1);
        mac
    };
    c.link.fec_redundancy_factor = 1.0;
    assert_eq!(count(&c), (0..22).collect::<Vec<_>>());
    c.link.fec_redundancy_factor = 1.18;
    let with_parity = count(&c);
    assert_eq!(with_parity.iter().filter(|&&i| i < 22).count(), 22);
    assert_eq!(with_parity.len(), 22 + 3);
}

#[test]
fn empty_streams_give_empty_output() {
    let c = scenario("rr_h265_30.json", 1.0);
    let out = netsim::run_with_streams(&c, &netsim::SourceStreams::default()).unwrap();
    assert!(out.records.is_empty() && out.trace.is_empty());
}
