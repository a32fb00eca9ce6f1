use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clock::{estimate_offset, OffsetEstimate};
use super::fragment::{fragment_frames, reassemble, MacFrame, FULL_MPDU_WIRE, MPDU_PAYLOAD};
use super::link::LinkModel;
use super::stage::{compile_law, Stage, StageSampler};
use super::NetsimError;
use crate::rng::{stream, stream_rng};
use crate::scenario::ScenarioConfig;
use crate::trace::{trace_kind, Direction, Layer, TraceRecord};
use crate::trafficgen::{cloud_source, AppFrame, AppKind, TrackingSource, VideoSource};

/// Application-layer input of a run, generated or replayed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceStreams {
    pub video: Vec<AppFrame>,
    pub tracking: Vec<AppFrame>,
    pub cloud_dl: Vec<AppFrame>,
    pub cloud_ul: Vec<AppFrame>,
}

impl SourceStreams {
    pub fn is_empty(&self) -> bool {
        self.video.is_empty()
            && self.tracking.is_empty()
            && self.cloud_dl.is_empty()
            && self.cloud_ul.is_empty()
    }
}

/// Per-frame delay breakdown, in microseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub frame_id: u64,
    /// Tracking sample the frame was rendered from.
    pub ti_id: Option<u64>,
    pub render_start_us: u64,
    pub display_us: u64,
    pub size_bytes: u32,
    /// Indexed by [`Stage::index`].
    pub stages_us: [i64; 6],
    pub total_us: i64,
}

impl DelayRecord {
    pub fn stage_ms(&self, stage: Stage) -> f64 {
        self.stages_us[stage.index()] as f64 / 1000.0
    }

    pub fn total_ms(&self) -> f64 {
        self.total_us as f64 / 1000.0
    }

    pub fn is_additive(&self) -> bool {
        self.stages_us.iter().sum::<i64>() == self.total_us
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub records: Vec<DelayRecord>,
    /// App and MAC records, stable-sorted by timestamp.
    pub trace: Vec<TraceRecord>,
    pub frames_lost: u64,
    pub offset_estimates: Vec<OffsetEstimate>,
}

/// Draw every source up to the scenario duration.
pub fn generate_streams(config: &ScenarioConfig) -> Result<SourceStreams, NetsimError> {
    let end = config.duration_us();
    let mut s = SourceStreams::default();
    if let Some(profile) = config.video_profile() {
        s.video = VideoSource::new(profile, config.seed)?
            .take_while(|f| f.gen_time_us < end)
            .collect();
    }
    if let Some((freq, payload, jitter)) = config.tracking() {
        s.tracking = TrackingSource::with_jitter(freq, payload, jitter, config.seed)?
            .take_while(|f| f.gen_time_us < end)
            .collect();
    }
    if let Some(cloud) = config.cloud() {
        let (dl, ul) = cloud_source(cloud, config.seed)?;
        s.cloud_dl = dl.take_while(|f| f.gen_time_us < end).collect();
        s.cloud_ul = ul.take_while(|f| f.gen_time_us < end).collect();
    }
    Ok(s)
}

/// Validate the scenario, generate its sources and simulate.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, NetsimError> {
    config.validate()?;
    let streams = generate_streams(config)?;
    run_with_streams(config, &streams)
}

/// Simulate with the given application streams in place of the scenario's
/// generators. Stage, loss and probe behaviour still come from `config`.
/// Empty streams give an empty output.
pub fn run_with_streams(
    config: &ScenarioConfig,
    streams: &SourceStreams,
) -> Result<RunOutput, NetsimError> {
    config.stage_models.validate()?;
    config.link.validate()?;
    config.clock.validate()?;
    if streams.is_empty() {
        return Ok(RunOutput::default());
    }
    let mut sim = Sim::new(config, streams)?;
    sim.schedule_sources();
    sim.schedule_probes(config.duration_us());
    sim.event_loop()?;
    Ok(sim.finish())
}

// Tie-break rank among events sharing a timestamp.
const RANK_UL: u8 = 0;
const RANK_RENDER: u8 = 1;
const RANK_ENCODE: u8 = 2;
const RANK_TX: u8 = 3;
const RANK_RX: u8 = 4;
const RANK_DECODE: u8 = 5;
const RANK_OVERLAY: u8 = 6;
const RANK_EYES: u8 = 7;

#[derive(Debug, Clone, Copy)]
enum Ev {
    Tracking(usize),
    CloudUl(usize),
    ProbeSend(u64),
    ProbeReply(u64),
    CloudDl(usize),
    Render(usize),
    Encode(usize),
    Tx(usize),
    Rx(usize),
    Decode(usize),
    Overlay(usize),
    Eyes(usize),
}

#[derive(Debug)]
struct Entry {
    t_us: u64,
    rank: u8,
    seq: u64,
    ev: Ev,
}

impl Entry {
    fn key(&self) -> (u64, u8, u64) {
        (self.t_us, self.rank, self.seq)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// FIFO medium: one MPDU at a time.
#[derive(Debug, Default)]
struct Medium {
    free_at_us: f64,
}

#[derive(Debug, Clone)]
struct FrameState {
    ti: Option<AppFrame>,
    origin_us: u64,
    tx_us: u64,
    rx_us: u64,
    stages_us: [i64; 6],
    clock_error_us: i64,
    received: Vec<MacFrame>,
}

struct Sim<'a> {
    config: &'a ScenarioConfig,
    streams: &'a SourceStreams,
    link: &'a LinkModel,
    queue: BinaryHeap<Reverse<Entry>>,
    seq: u64,
    samplers: [StageSampler; 6],
    stage_rngs: Vec<ChaCha8Rng>,
    loss_rng: ChaCha8Rng,
    dl: Medium,
    ul: Medium,
    fec_credit: f64,
    latest_ti: Option<AppFrame>,
    estimate: Option<OffsetEstimate>,
    frames: Vec<Option<FrameState>>,
    out: RunOutput,
}

fn ms_to_us(ms: f64) -> i64 {
    (ms * 1000.0).round().max(0.0) as i64
}

impl<'a> Sim<'a> {
    fn new(config: &'a ScenarioConfig, streams: &'a SourceStreams) -> Result<Self, NetsimError> {
        let mut samplers = [StageSampler::Link; 6];
        for stage in Stage::ALL {
            samplers[stage.index()] = compile_law(stage, config.stage_models.get(stage))?;
        }
        let stage_rngs = Stage::ALL
            .iter()
            .map(|s| stream_rng(config.seed, stream::STAGE_BASE + s.index() as u64))
            .collect();
        Ok(Self {
            config,
            streams,
            link: &config.link,
            queue: BinaryHeap::new(),
            seq: 0,
            samplers,
            stage_rngs,
            loss_rng: stream_rng(config.seed, stream::LOSS),
            dl: Medium::default(),
            ul: Medium::default(),
            fec_credit: 0.0,
            latest_ti: None,
            estimate: None,
            frames: vec![None; streams.video.len()],
            out: RunOutput::default(),
        })
    }

    fn push(&mut self, t_us: u64, rank: u8, ev: Ev) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Entry {
            t_us,
            rank,
            seq,
            ev,
        }));
    }

    fn schedule_sources(&mut self) {
        let s = self.streams;
        for (i, f) in s.tracking.iter().enumerate() {
            self.push(f.gen_time_us, RANK_UL, Ev::Tracking(i));
        }
        for (i, f) in s.cloud_ul.iter().enumerate() {
            self.push(f.gen_time_us, RANK_UL, Ev::CloudUl(i));
        }
        for (i, f) in s.cloud_dl.iter().enumerate() {
            self.push(f.gen_time_us, RANK_TX, Ev::CloudDl(i));
        }
        for (i, f) in s.video.iter().enumerate() {
            self.push(f.gen_time_us, RANK_RENDER, Ev::Render(i));
        }
    }

    fn schedule_probes(&mut self, duration_us: u64) {
        let period = (self.config.clock.probe_period_s * 1e6).round().max(1.0) as u64;
        let mut k = 0u64;
        while k * period < duration_us {
            self.push(k * period, RANK_UL, Ev::ProbeSend(k));
            k += 1;
        }
    }

    fn sample(&mut self, stage: Stage) -> Option<i64> {
        match self.samplers[stage.index()] {
            StageSampler::Sampled(law) => {
                Some(ms_to_us(law.sample(&mut self.stage_rngs[stage.index()])))
            }
            StageSampler::Link => None,
        }
    }

    fn probe_period_us(&self) -> u64 {
        (self.config.clock.probe_period_s * 1e6).round().max(1.0) as u64
    }

    fn event_loop(&mut self) -> Result<(), NetsimError> {
        while let Some(Reverse(entry)) = self.queue.pop() {
            let now = entry.t_us;
            match entry.ev {
                Ev::Tracking(i) => {
                    let f = self.streams.tracking[i];
                    self.app_record(&f, Direction::Ul, now);
                    self.send_plain(&f, Direction::Ul, now)?;
                    self.latest_ti = Some(f);
                }
                Ev::CloudUl(i) => {
                    let f = self.streams.cloud_ul[i];
                    self.app_record(&f, Direction::Ul, now);
                    self.send_plain(&f, Direction::Ul, now)?;
                }
                Ev::CloudDl(i) => {
                    let f = self.streams.cloud_dl[i];
                    self.app_record(&f, Direction::Dl, now);
                    self.send_plain(&f, Direction::Dl, now)?;
                }
                Ev::ProbeSend(k) => self.probe_send(k, now)?,
                Ev::ProbeReply(k) => self.probe_reply(k, now)?,
                Ev::Render(i) => self.render(i, now),
                Ev::Encode(i) => {
                    let d2 = self.sample(Stage::Encode).unwrap_or(0);
                    let st = self.frames[i].as_mut().expect("frame in flight");
                    st.stages_us[Stage::Encode.index()] = d2;
                    st.tx_us = now + d2 as u64;
                    let t = st.tx_us;
                    self.push(t, RANK_TX, Ev::Tx(i));
                }
                Ev::Tx(i) => self.transmit_video(i, now)?,
                Ev::Rx(i) => self.receive_video(i, now),
                Ev::Decode(i) => {
                    self.stage_then(i, now, Stage::Decode, RANK_OVERLAY, Ev::Overlay(i))
                }
                Ev::Overlay(i) => {
                    self.stage_then(i, now, Stage::RenderOverlay, RANK_EYES, Ev::Eyes(i))
                }
                Ev::Eyes(i) => self.display(i, now),
            }
        }
        Ok(())
    }

    fn app_record(&mut self, f: &AppFrame, dir: Direction, t_us: u64) {
        self.out.trace.push(TraceRecord::app(f, dir, t_us));
    }

    fn mac_record(&mut self, kind: AppKind, dir: Direction, m: &MacFrame) {
        self.out.trace.push(TraceRecord {
            t_us: m.tx_start_us,
            direction: dir,
            layer: Layer::Mac,
            kind: trace_kind(kind),
            size_bytes: m.wire_bytes,
            frame_id: m.parent_frame_id,
            fragment_index: Some(m.fragment_index),
        });
    }

    /// Queue MPDUs on a medium from `ready_us`; returns them with timing
    /// filled in.
    fn put_on_air(
        &mut self,
        dir: Direction,
        ready_us: f64,
        mut frames: Vec<MacFrame>,
    ) -> Vec<MacFrame> {
        let link = self.link;
        let medium = match dir {
            Direction::Dl => &mut self.dl,
            Direction::Ul => &mut self.ul,
        };
        let mut t = medium.free_at_us.max(ready_us);
        for m in &mut frames {
            let start = t;
            t += link.mpdu_airtime_us(m.wire_bytes);
            m.tx_start_us = start.round() as u64;
            m.tx_end_us = t.round() as u64;
        }
        medium.free_at_us = t;
        frames
    }

    /// Non-video traffic: fragmented, no redundancy, no loss.
    fn send_plain(&mut self, f: &AppFrame, dir: Direction, now: u64) -> Result<(), NetsimError> {
        let frames = fragment_frames(f.id, f.size_bytes)?;
        for m in self.put_on_air(dir, now as f64, frames) {
            self.mac_record(f.kind, dir, &m);
        }
        Ok(())
    }

    fn probe_send(&mut self, k: u64, now: u64) -> Result<(), NetsimError> {
        let c = &self.config.clock;
        let f = AppFrame {
            id: k,
            kind: AppKind::OffsetProbe,
            gen_time_us: now,
            size_bytes: c.probe_bytes,
        };
        self.app_record(&f, Direction::Ul, now);
        self.send_plain(&f, Direction::Ul, now)?;
        let reply_at = now + c.probe_one_way_us + c.server_turnaround_us;
        self.push(reply_at, RANK_TX, Ev::ProbeReply(k));
        Ok(())
    }

    fn probe_reply(&mut self, k: u64, now: u64) -> Result<(), NetsimError> {
        let c = self.config.clock.clone();
        let f = AppFrame {
            id: k,
            kind: AppKind::OffsetProbe,
            gen_time_us: now,
            size_bytes: c.probe_bytes,
        };
        self.app_record(&f, Direction::Dl, now);
        self.send_plain(&f, Direction::Dl, now)?;
        // Timestamps as each clock reads them: t1, t4 client; t2, t3 server.
        let t1 = (k * self.probe_period_us()) as i64;
        let t2 = t1 + c.probe_one_way_us as i64 + c.true_offset_us;
        let t3 = t2 + c.server_turnaround_us as i64;
        let t4 = now as i64 + c.downlink_one_way_us() as i64;
        let est = estimate_offset(t1, t2, t3, t4)?;
        self.out.offset_estimates.push(est);
        self.estimate = Some(est);
        Ok(())
    }

    fn render(&mut self, i: usize, now: u64) {
        let ti = self.latest_ti;
        let origin_us = ti.map_or(now, |t| t.gen_time_us);
        let sampled = self.sample(Stage::TiUlRender).unwrap_or(0);
        // Rendering cannot finish before it starts.
        let d1 = sampled.max((now - origin_us) as i64);
        let render_end_us = origin_us + d1 as u64;
        let est = self.estimate.map_or(0.0, |e| e.offset_us);
        let clock_error_us = (self.config.clock.true_offset_us as f64 - est).round() as i64;
        let mut stages_us = [0i64; 6];
        stages_us[Stage::TiUlRender.index()] = d1;
        self.frames[i] = Some(FrameState {
            ti,
            origin_us,
            tx_us: 0,
            rx_us: 0,
            stages_us,
            clock_error_us,
            received: Vec::new(),
        });
        let f = self.streams.video[i];
        self.app_record(&f, Direction::Dl, f.gen_time_us);
        self.push(render_end_us, RANK_ENCODE, Ev::Encode(i));
    }

    fn transmit_video(&mut self, i: usize, now: u64) -> Result<(), NetsimError> {
        let f = self.streams.video[i];
        let link = self.link;
        let mut frames = fragment_frames(f.id, f.size_bytes)?;
        let n_data = frames.len() as u32;
        let data_wire: u32 = frames.iter().map(|m| m.wire_bytes).sum();
        self.fec_credit += f64::from(data_wire) * (link.fec_redundancy_factor - 1.0);
        // Parity goes out ahead of the (possibly short) tail fragment.
        let tail = frames.pop().expect("at least one fragment");
        let mut j = 0;
        while self.fec_credit >= f64::from(FULL_MPDU_WIRE) {
            self.fec_credit -= f64::from(FULL_MPDU_WIRE);
            let mut p = MacFrame::data(f.id, n_data + j, n_data, MPDU_PAYLOAD);
            p.parity = true;
            frames.push(p);
            j += 1;
        }
        frames.push(tail);
        let sampled = self.sample(Stage::ViTransport);
        let ready = match sampled {
            Some(_) => now as f64,
            None => now as f64 + link.base_delay_us,
        };
        let frames = self.put_on_air(Direction::Dl, ready, frames);
        let burst_end = frames.last().map_or(now, |m| m.tx_end_us);
        let mut received = Vec::with_capacity(frames.len());
        for m in &frames {
            self.mac_record(AppKind::Video, Direction::Dl, m);
            let lost =
                !m.parity && link.loss_prob > 0.0 && self.loss_rng.random::<f64>() < link.loss_prob;
            if !lost {
                received.push(*m);
            }
        }
        let rx = match sampled {
            Some(d3) => burst_end.max(now + d3 as u64),
            None => burst_end,
        };
        let st = self.frames[i].as_mut().expect("frame in flight");
        st.rx_us = rx;
        st.received = received;
        self.push(rx, RANK_RX, Ev::Rx(i));
        Ok(())
    }

    fn receive_video(&mut self, i: usize, now: u64) {
        let size = self.streams.video[i].size_bytes;
        let st = self.frames[i].as_mut().expect("frame in flight");
        match reassemble(&st.received) {
            Ok(n) => {
                debug_assert_eq!(n, size);
                st.stages_us[Stage::ViTransport.index()] = (st.rx_us - st.tx_us) as i64;
                st.received = Vec::new();
                self.push(now, RANK_DECODE, Ev::Decode(i));
            }
            Err(e) => {
                log::debug!("frame {i} discarded: {e}");
                self.out.frames_lost += 1;
                self.frames[i] = None;
            }
        }
    }

    /// `stage` starts now; `next` fires when it completes.
    fn stage_then(&mut self, i: usize, now: u64, stage: Stage, rank: u8, next: Ev) {
        let d = self.sample(stage).unwrap_or(0);
        self.frames[i].as_mut().expect("frame in flight").stages_us[stage.index()] = d;
        self.push(now + d as u64, rank, next);
    }

    fn display(&mut self, i: usize, now: u64) {
        let d6 = self.sample(Stage::RenderEyes).unwrap_or(0);
        let mut st = self.frames[i].take().expect("frame in flight");
        st.stages_us[Stage::RenderEyes.index()] = d6;
        // Cross-clock legs as the endpoints would report them after offset
        // correction.
        st.stages_us[Stage::TiUlRender.index()] += st.clock_error_us;
        st.stages_us[Stage::ViTransport.index()] -= st.clock_error_us;
        let display_us = now + d6 as u64;
        let total_us = st.stages_us.iter().sum();
        debug_assert_eq!(total_us, (display_us - st.origin_us) as i64);
        let f = self.streams.video[i];
        self.out.records.push(DelayRecord {
            frame_id: f.id,
            ti_id: st.ti.map(|t| t.id),
            render_start_us: f.gen_time_us,
            display_us,
            size_bytes: f.size_bytes,
            stages_us: st.stages_us,
            total_us,
        });
    }

    fn finish(mut self) -> RunOutput {
        self.out.trace.sort_by_key(|r| r.t_us);
        self.out.records.sort_by_key(|r| r.frame_id);
        self.out
    }
}
