//! Packet trace records and their CSV form.
//!
//! Header: `t_us,direction,layer,kind,size_bytes,frame_id,fragment_index`.
//! Application-layer rows leave `fragment_index` empty.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::{DelayRecord, SourceStreams, Stage};
use crate::trafficgen::{AppFrame, AppKind};

pub const TRACE_HEADER: [&str; 7] = [
    "t_us",
    "direction",
    "layer",
    "kind",
    "size_bytes",
    "frame_id",
    "fragment_index",
];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
    #[error("bad header: expected {expected:?}, got {got:?}")]
    Header { expected: String, got: String },
    #[error("line {line}: timestamp {t_us} precedes previous {prev_us}")]
    NonMonotone { line: u64, t_us: u64, prev_us: u64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    App,
    Mac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Video,
    Tracking,
    Cloud,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_us: u64,
    pub direction: Direction,
    pub layer: Layer,
    pub kind: TraceKind,
    pub size_bytes: u32,
    pub frame_id: u64,
    pub fragment_index: Option<u32>,
}

impl TraceRecord {
    pub fn app(frame: &AppFrame, direction: Direction, t_us: u64) -> Self {
        Self {
            t_us,
            direction,
            layer: Layer::App,
            kind: trace_kind(frame.kind),
            size_bytes: frame.size_bytes,
            frame_id: frame.id,
            fragment_index: None,
        }
    }

    pub fn bits(&self) -> u64 {
        u64::from(self.size_bytes) * 8
    }
}

pub fn trace_kind(kind: AppKind) -> TraceKind {
    match kind {
        AppKind::Video => TraceKind::Video,
        AppKind::Tracking => TraceKind::Tracking,
        AppKind::CloudDl | AppKind::CloudUl => TraceKind::Cloud,
        AppKind::OffsetProbe => TraceKind::Probe,
    }
}

pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> Result<(), TraceError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| TraceError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<(), TraceError> {
    let file = std::fs::File::create(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    write_trace(std::io::BufWriter::new(file), records)
}

/// Parse a trace, rejecting rows whose timestamp goes backwards. An empty
/// input (no header) is an empty trace.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(TRACE_HEADER) {
        return Err(TraceError::Header {
            expected: TRACE_HEADER.join(","),
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut records = Vec::new();
    let mut prev: Option<u64> = None;
    for row in rdr.deserialize::<TraceRecord>() {
        let rec = row.map_err(|e| TraceError::Row {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = records.len() as u64 + 2;
        if let Some(p) = prev {
            if rec.t_us < p {
                return Err(TraceError::NonMonotone {
                    line,
                    t_us: rec.t_us,
                    prev_us: p,
                });
            }
        }
        if rec.layer == Layer::Mac && rec.fragment_index.is_none() {
            return Err(TraceError::Row {
                line,
                msg: "mac record without fragment_index".into(),
            });
        }
        prev = Some(rec.t_us);
        records.push(rec);
    }
    Ok(records)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>, TraceError> {
    let file = std::fs::File::open(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_trace(std::io::BufReader::new(file))
}

/// Split app-layer records into per-source streams, keeping timestamps.
/// Probe traffic is regenerated by the clock model and skipped here.
pub fn replay_streams(records: &[TraceRecord]) -> SourceStreams {
    let mut s = SourceStreams::default();
    for r in records.iter().filter(|r| r.layer == Layer::App) {
        let (kind, bucket) = match (r.kind, r.direction) {
            (TraceKind::Video, _) => (AppKind::Video, &mut s.video),
            (TraceKind::Tracking, _) => (AppKind::Tracking, &mut s.tracking),
            (TraceKind::Cloud, Direction::Dl) => (AppKind::CloudDl, &mut s.cloud_dl),
            (TraceKind::Cloud, Direction::Ul) => (AppKind::CloudUl, &mut s.cloud_ul),
            (TraceKind::Probe, _) => continue,
        };
        bucket.push(AppFrame {
            id: r.frame_id,
            kind,
            gen_time_us: r.t_us,
            size_bytes: r.size_bytes,
        });
    }
    s
}

pub fn replay(trace_path: &Path) -> Result<SourceStreams, TraceError> {
    Ok(replay_streams(&read_trace_file(trace_path)?))
}

const DELAY_HEADER_PREFIX: [&str; 5] = [
    "frame_id",
    "ti_id",
    "render_start_us",
    "display_us",
    "size_bytes",
];

fn delay_header() -> Vec<String> {
    let mut h: Vec<String> = DELAY_HEADER_PREFIX.iter().map(|s| s.to_string()).collect();
    h.extend(Stage::ALL.iter().map(|s| format!("{}_ms", s.key())));
    h.push("total_ms".into());
    h
}

fn ms3(us: i64) -> String {
    let sign = if us < 0 { "-" } else { "" };
    let a = us.unsigned_abs();
    format!("{sign}{}.{:03}", a / 1000, a % 1000)
}

fn parse_ms3(s: &str) -> Option<i64> {
    let v: f64 = s.parse().ok()?;
    Some((v * 1000.0).round() as i64)
}

/// Per-frame delays as CSV, stage columns in ms with three decimals.
pub fn write_delays<W: Write>(out: W, records: &[DelayRecord]) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(delay_header())?;
    for r in records {
        let mut row = vec![
            r.frame_id.to_string(),
            r.ti_id.map(|t| t.to_string()).unwrap_or_default(),
            r.render_start_us.to_string(),
            r.display_us.to_string(),
            r.size_bytes.to_string(),
        ];
        row.extend(r.stages_us.iter().map(|&us| ms3(us)));
        row.push(ms3(r.total_us));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| TraceError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn read_delays<R: Read>(input: R) -> Result<Vec<DelayRecord>, TraceError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let expected = delay_header();
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(TraceError::Header {
            expected: expected.join(","),
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let bad = |col: &str| TraceError::Row {
            line,
            msg: format!("bad {col}"),
        };
        let int = |k: usize| row[k].parse::<u64>().map_err(|_| bad(&expected[k]));
        let ti_id = if row[1].is_empty() {
            None
        } else {
            Some(int(1)?)
        };
        let mut stages_us = [0i64; 6];
        for (k, v) in stages_us.iter_mut().enumerate() {
            *v = parse_ms3(&row[5 + k]).ok_or_else(|| bad(&expected[5 + k]))?;
        }
        let total_us = parse_ms3(&row[11]).ok_or_else(|| bad("total_ms"))?;
        out.push(DelayRecord {
            frame_id: int(0)?,
            ti_id,
            render_start_us: int(2)?,
            display_us: int(3)?,
            size_bytes: row[4].parse().map_err(|_| bad("size_bytes"))?,
            stages_us,
            total_us,
        });
    }
    Ok(out)
}
