//! Monte-Carlo checks that fitted laws regenerate the moments they were
//! fitted to.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrsim_core::analytics::{summary, threshold_fraction};
use vrsim_core::calibration::MEASURED_DELAYS;
use vrsim_core::netsim::{
    compile_law, fit_lognormal, LognormalFit, SampledLaw, Stage, StageLaw, StageSampler,
};
use vrsim_core::trafficgen::{ProfileFile, VideoSource};

const DRAWS: usize = 100_000;

fn draws(law: SampledLaw, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..DRAWS).map(|_| law.sample(&mut rng)).collect()
}

fn lognormal(mean: f64, p95: f64) -> SampledLaw {
    match fit_lognormal(mean, p95).unwrap() {
        LognormalFit::Lognormal(p) => SampledLaw::Lognormal(p),
        LognormalFit::Constant(c) => SampledLaw::Constant(c),
    }
}

#[test]
fn encode_stage_moments() {
    let s = summary(&draws(lognormal(12.01, 13.13), 1)).unwrap();
    assert!((s.mean / 12.01 - 1.0).abs() < 0.03, "{s:?}");
    assert!((s.p95 / 13.13 - 1.0).abs() < 0.03, "{s:?}");
}

#[test]
fn render_stage_moments() {
    let s = summary(&draws(lognormal(18.82, 22.93), 2)).unwrap();
    assert!((s.mean / 18.82 - 1.0).abs() < 0.03, "{s:?}");
    assert!((s.p95 / 22.93 - 1.0).abs() < 0.03, "{s:?}");
}

#[test]
fn forward_construction_over_grid() {
    for &sigma in &[0.05f64, 0.1, 0.3, 0.7, 1.2] {
        for &mean in &[0.5f64, 5.0, 70.0] {
            let p95 = mean * (1.644_853_626_951_472_2 * sigma - 0.5 * sigma * sigma).exp();
            match fit_lognormal(mean, p95).unwrap() {
                LognormalFit::Lognormal(p) => assert!((p.sigma - sigma).abs() < 1e-6),
                other => panic!("{other:?}"),
            }
        }
    }
}

/// Every lognormal stage of every measured row: the mean is always
/// reproduced, the 95th percentile wherever a lognormal can reach it.
#[test]
fn every_measured_stage() {
    for (r, row) in MEASURED_DELAYS.iter().enumerate() {
        for (stage, mp) in Stage::ALL.iter().zip(row.stages.iter()) {
            let law = StageLaw::Lognormal {
                mean_ms: mp.mean,
                p95_ms: mp.p95,
            };
            let StageSampler::Sampled(l) = compile_law(*stage, &law).unwrap() else {
                panic!()
            };
            let s = summary(&draws(l, 100 + r as u64)).unwrap();
            assert!(
                (s.mean / mp.mean - 1.0).abs() < 0.03,
                "{} {stage:?}: {s:?}",
                row.label
            );
            if fit_lognormal(mp.mean, mp.p95).is_ok() {
                assert!(
                    (s.p95 / mp.p95 - 1.0).abs() < 0.03,
                    "{} {stage:?}: {s:?}",
                    row.label
                );
            }
        }
    }
}

#[test]
fn shipped_profile_mixtures() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../profiles/measured.json");
    let file = ProfileFile::load(&path).unwrap();
    for p in &file.profiles {
        let m = p.mixture().unwrap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sizes: Vec<u32> = (0..DRAWS).map(|_| m.sample(&mut rng)).collect();
        let mean = sizes.iter().map(|&s| f64::from(s)).sum::<f64>() / DRAWS as f64;
        let frac = threshold_fraction(&sizes, p.threshold_bytes as u32).unwrap();
        assert!(
            (mean / p.mean_frame_bytes - 1.0).abs() < 0.02,
            "{}: mean {mean}",
            p.label
        );
        assert!(
            (frac - p.frac_over_threshold).abs() < 0.02,
            "{}: frac {frac}",
            p.label
        );
        assert!(
            sizes
                .iter()
                .all(|&s| s >= 1 && f64::from(s) <= p.cap_bytes()),
            "{}",
            p.label
        );
        // The source draws from the same law.
        let v: Vec<u32> = VideoSource::new(p, 3)
            .unwrap()
            .take(20_000)
            .map(|f| f.size_bytes)
            .collect();
        let vm = v.iter().map(|&s| f64::from(s)).sum::<f64>() / v.len() as f64;
        assert!(
            (vm / p.mean_frame_bytes - 1.0).abs() < 0.03,
            "{}: source mean {vm}",
            p.label
        );
    }
}
