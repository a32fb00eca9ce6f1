use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vrsim_core::analytics::{self, round_dp, AnalysisWindow, DelayTable, StatsSummary};
use vrsim_core::netsim::{self, NetsimError, RunOutput, SourceStreams};
use vrsim_core::perception::{
    eye_throughput, hmd_throughput, CompressionRange, DisplaySpec, PerceptionQuery,
    ThroughputResult,
};
use vrsim_core::scenario::{load_scenario, ConfigError, ScenarioConfig};
use vrsim_core::trace::{self, Direction, Layer, TraceRecord};
use vrsim_core::trafficgen::{fit_mixture, DEFAULT_CAP_SLACK};

use crate::{AnalyzeArgs, CalcArgs, FitArgs, Format, ReplayArgs, SimulateArgs};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn input(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        input(e)
    }
}

impl From<trace::TraceError> for CliError {
    fn from(e: trace::TraceError) -> Self {
        input(e)
    }
}

impl From<analytics::AnalyticsError> for CliError {
    fn from(e: analytics::AnalyticsError) -> Self {
        input(e)
    }
}

impl From<NetsimError> for CliError {
    fn from(e: NetsimError) -> Self {
        match e {
            NetsimError::ProbeRejected(_) => CliError::Internal(e.to_string()),
            other => input(other),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| input(format!("{what}: expected A{sep}B, got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| input(format!("{what}: {t:?} is not a number")))
    };
    Ok((num(a)?, num(b)?))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}

fn throughput_json(mode: &str, r: &ThroughputResult) -> Result<Value> {
    let mut v = serde_json::to_value(r).map_err(|e| CliError::Internal(e.to_string()))?;
    let obj = v.as_object_mut().expect("struct serializes to object");
    obj.insert("mode".into(), json!(mode));
    if let (Some(lo), Some(hi)) = (r.compressed_lo_bps, r.compressed_hi_bps) {
        obj.insert(
            "compressed_mbps".into(),
            json!([round_dp(lo / 1e6, 2), round_dp(hi / 1e6, 2)]),
        );
    }
    Ok(v)
}

pub fn calc(a: &CalcArgs) -> Result<()> {
    let compression = a
        .compression
        .as_deref()
        .map(|s| parse_pair(s, ':', "--compression"))
        .transpose()?
        .map(|(lo, hi)| CompressionRange::new(lo, hi))
        .transpose()
        .map_err(input)?;
    let v = if let Some(res) = &a.per_eye_res {
        let (w, h) = parse_pair(&res.to_lowercase(), 'x', "--per-eye-res")?;
        if w.fract() != 0.0
            || h.fract() != 0.0
            || w < 1.0
            || h < 1.0
            || w > f64::from(u32::MAX)
            || h > f64::from(u32::MAX)
        {
            return Err(input(format!(
                "--per-eye-res: pixel counts must be positive integers, got {res}"
            )));
        }
        let display = DisplaySpec::from_pixels(w as u32, h as u32, true);
        let r = hmd_throughput(&display, a.bit_depth, a.fps, compression).map_err(input)?;
        throughput_json("hmd", &r)?
    } else if let (Some(fov), Some(ppd)) = (&a.fov, &a.ppd) {
        let (fh, fv) = parse_pair(&fov.to_lowercase(), 'x', "--fov")?;
        let (ph, pv) = if ppd.contains(['x', 'X']) {
            parse_pair(&ppd.to_lowercase(), 'x', "--ppd")?
        } else {
            let p = ppd
                .parse::<f64>()
                .map_err(|_| input(format!("--ppd: {ppd:?} is not a number")))?;
            (p, p)
        };
        let q = PerceptionQuery {
            fov_h_deg: fh,
            fov_v_deg: fv,
            ppd_h: ph,
            ppd_v: pv,
            bit_depth: a.bit_depth,
            frame_rate: a.fps,
            viewing_distance_in: None,
        };
        let mut r = eye_throughput(&q).map_err(input)?;
        if let Some(c) = compression {
            r = r.with_compression(c);
        }
        throughput_json("eye", &r)?
    } else {
        return Err(input("calc needs --per-eye-res, or --fov with --ppd"));
    };
    write_out(
        None,
        &(serde_json::to_string_pretty(&v).expect("json value") + "\n"),
    )
}

fn analysis_window(config: &ScenarioConfig) -> AnalysisWindow {
    let a = &config.analysis;
    AnalysisWindow {
        from_us: a.from_s.map(|s| (s * 1e6).round() as u64),
        to_us: a.to_s.map(|s| (s * 1e6).round() as u64),
        window_s: a.window_s,
        thresholds_bytes: a.thresholds_bytes.clone(),
    }
}

fn summarize(config: &ScenarioConfig, out: &RunOutput) -> Result<StatsSummary> {
    Ok(StatsSummary::compute(
        &out.trace,
        Some((&out.records, out.frames_lost)),
        &analysis_window(config),
    )?)
}

/// `run.csv` becomes `run.3.csv` for batch member 3.
fn indexed(path: &Path, i: u32) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    path.with_file_name(name)
}

struct Outputs<'a> {
    trace: Option<&'a Path>,
    delays: Option<&'a Path>,
    summary: Option<&'a Path>,
}

fn write_run(out: &RunOutput, summary: &StatsSummary, dest: &Outputs) -> Result<()> {
    if let Some(p) = dest.trace {
        trace::write_trace_file(p, &out.trace)?;
    }
    if let Some(p) = dest.delays {
        let f = std::fs::File::create(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
        trace::write_delays(std::io::BufWriter::new(f), &out.records)?;
    }
    if let Some(p) = dest.summary {
        write_out(Some(p), &(summary.to_json() + "\n"))?;
    }
    Ok(())
}

fn load_with_overrides(
    path: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
) -> Result<ScenarioConfig> {
    let mut config = load_scenario(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(d) = duration {
        config.duration_s = d;
    }
    config.validate()?;
    Ok(config)
}

fn table_text(label: &str, records: &[netsim::DelayRecord]) -> Result<String> {
    Ok(analytics::delay_table([(label, records)])?.to_text())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let config = load_with_overrides(&a.scenario, a.seed, a.duration)?;
    let Some(n) = a.batch else {
        let out = netsim::run(&config)?;
        let summary = summarize(&config, &out)?;
        let dest = Outputs {
            trace: a.out.as_deref(),
            delays: a.delays.as_deref(),
            summary: a.summary.as_deref(),
        };
        write_run(&out, &summary, &dest)?;
        let text = if a.table {
            table_text(&config.name, &out.records)?
        } else {
            summary.to_json() + "\n"
        };
        return write_out(None, &text);
    };
    if n == 0 {
        return Err(input("--batch must be >= 1"));
    }
    let configs: Vec<ScenarioConfig> = (0..n)
        .map(|i| ScenarioConfig {
            seed: config.seed.wrapping_add(u64::from(i)),
            ..config.clone()
        })
        .collect();
    // Independent runs share nothing; fan out one thread per run.
    let results: Vec<Result<(RunOutput, StatsSummary)>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let out = netsim::run(c)?;
                    let summary = summarize(c, &out)?;
                    Ok((out, summary))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(CliError::Internal("simulation thread panicked".into()))
                })
            })
            .collect()
    });
    let mut reports = Vec::with_capacity(n as usize);
    let mut table = DelayTable { rows: Vec::new() };
    for (i, (c, r)) in configs.iter().zip(results).enumerate() {
        let (out, summary) = r?;
        let i = i as u32;
        let dest_paths = (
            a.out.as_deref().map(|p| indexed(p, i)),
            a.delays.as_deref().map(|p| indexed(p, i)),
            a.summary.as_deref().map(|p| indexed(p, i)),
        );
        let dest = Outputs {
            trace: dest_paths.0.as_deref(),
            delays: dest_paths.1.as_deref(),
            summary: dest_paths.2.as_deref(),
        };
        write_run(&out, &summary, &dest)?;
        if a.table {
            table.rows.push(analytics::DelayRow::from_records(
                &format!("{} seed {}", c.name, c.seed),
                &out.records,
            )?);
        }
        reports.push(json!({ "seed": c.seed, "summary": summary.rounded() }));
    }
    let text = if a.table {
        table.to_text()
    } else {
        serde_json::to_string_pretty(&reports).expect("json value") + "\n"
    };
    write_out(None, &text)
}

fn read_delay_file(p: &Path) -> Result<Vec<netsim::DelayRecord>> {
    let f = std::fs::File::open(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
    Ok(trace::read_delays(std::io::BufReader::new(f))?)
}

fn rates_csv(records: &[TraceRecord], window_s: f64) -> Result<String> {
    let mut out = String::from("t_s,direction,layer,bits,bits_per_s\n");
    for dir in [Direction::Dl, Direction::Ul] {
        for layer in [Layer::App, Layer::Mac] {
            let series = analytics::windowed_rate_by(records, window_s, |r| {
                r.direction == dir && r.layer == layer
            })?;
            let d = if dir == Direction::Dl { "dl" } else { "ul" };
            let l = if layer == Layer::App { "app" } else { "mac" };
            for s in &series.samples {
                out.push_str(&format!(
                    "{:.6},{d},{l},{},{:.2}\n",
                    s.t_s, s.bits, s.bits_per_s
                ));
            }
        }
    }
    Ok(out)
}

fn seconds_to_us(s: Option<f64>, flag: &str) -> Result<Option<u64>> {
    match s {
        Some(v) if !(v.is_finite() && v >= 0.0) => {
            Err(input(format!("{flag} must be >= 0, got {v}")))
        }
        Some(v) => Ok(Some((v * 1e6).round() as u64)),
        None => Ok(None),
    }
}

pub fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let records = trace::read_trace_file(&a.trace)?;
    let delays = a.delays.as_deref().map(read_delay_file).transpose()?;
    let window = AnalysisWindow {
        from_us: seconds_to_us(a.from, "--from")?,
        to_us: seconds_to_us(a.to, "--to")?,
        window_s: a.window,
        thresholds_bytes: a.thresholds.clone(),
    };
    let text = match a.format {
        Format::Json => {
            StatsSummary::compute(&records, delays.as_deref().map(|d| (d, 0)), &window)?.to_json()
                + "\n"
        }
        Format::Csv => rates_csv(&records, a.window)?,
        Format::Table => {
            let d = delays.ok_or_else(|| input("--format table needs --delays"))?;
            let label = a
                .trace
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            table_text(&label, &d)?
        }
    };
    write_out(a.out.as_deref(), &text)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let cap = match a.cap {
        Some(c) => c,
        None => {
            if !(a.target_bps > 0.0 && a.fps > 0.0) {
                return Err(input("--target-bps and --fps must be > 0"));
            }
            a.target_bps / (8.0 * a.fps) * DEFAULT_CAP_SLACK
        }
    };
    let params = fit_mixture(a.mean, a.frac, a.threshold, cap).map_err(input)?;
    let v = json!({
        "params": params,
        "cap_bytes": round_dp(cap, 2),
        "achieved_mean_bytes": round_dp(params.mean(), 2),
        "achieved_frac_over_threshold": round_dp(params.tail_mass(a.threshold), 4),
    });
    write_out(
        None,
        &(serde_json::to_string_pretty(&v).expect("json value") + "\n"),
    )
}

pub fn replay(a: &ReplayArgs) -> Result<()> {
    let config = load_with_overrides(&a.scenario, a.seed, a.duration)?;
    let streams: SourceStreams = trace::replay(&a.trace)?;
    let out = netsim::run_with_streams(&config, &streams)?;
    let summary = summarize(&config, &out)?;
    let dest = Outputs {
        trace: a.out.as_deref(),
        delays: a.delays.as_deref(),
        summary: a.summary.as_deref(),
    };
    write_run(&out, &summary, &dest)?;
    write_out(None, &(summary.to_json() + "\n"))
}
