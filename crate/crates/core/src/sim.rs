//! Discrete-event data-layer simulator.
//!
//! Vehicles send communication requests to an RSU with `m` channels and a
//! FIFO queue. Benign arrivals are Poisson at `lambda_r`; flood profiles
//! superimpose extra Poisson traffic inside their interval; jamming profiles
//! corrupt packets, degrade signal quality and inject interference frames.
//! Each packet carries a ground-truth label given by attack-interval
//! membership of its arrival time.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::queueing::QueueParams;
use crate::rng::{stream, stream_rng};
use crate::table::{FeatureTable, TableError};
use crate::Label;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("insufficient data: {completed} completions, need at least {required}")]
    InsufficientData { completed: usize, required: usize },
    #[error("empirical metrics need an attack-free scenario with unbounded lifetime")]
    NotSteadyState,
    #[error("trace contains no packets")]
    EmptyTrace,
    #[error("invalid window length {0}")]
    InvalidWindow(f64),
    #[error("malformed trace csv at record {record}: {reason}")]
    TraceFormat { record: usize, reason: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Minimum completions accepted by [`empirical_metrics`].
pub const MIN_COMPLETIONS: usize = 1_000;

/// Column names produced by [`windowize`], in order.
pub const WINDOW_COLUMNS: [&str; 8] = [
    "arrival_count",
    "mean_wait",
    "max_wait",
    "drop_count",
    "mean_size",
    "mean_rssi",
    "mean_rel_speed",
    "busy_fraction",
];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackKind {
    /// Extra arrivals: total rate inside the interval is `multiplier * lambda_r`.
    Flood { multiplier: f64 },
    /// Each packet arriving in the interval is lost with `loss_prob`;
    /// interference frames arrive at `(burstiness - 1) * lambda_r`.
    Jam { loss_prob: f64, burstiness: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttackProfile {
    #[serde(flatten)]
    pub kind: AttackKind,
    pub start: f64,
    pub end: f64,
}

impl AttackProfile {
    pub fn flood(start: f64, end: f64, multiplier: f64) -> Self {
        Self {
            kind: AttackKind::Flood { multiplier },
            start,
            end,
        }
    }

    pub fn jam(start: f64, end: f64, loss_prob: f64, burstiness: f64) -> Self {
        Self {
            kind: AttackKind::Jam {
                loss_prob,
                burstiness,
            },
            start,
            end,
        }
    }

    /// Half-open interval membership `[start, end)`.
    pub fn covers(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Per-packet attribute distributions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrafficProfile {
    /// Upper bound of the relative vehicle speed, m/s.
    pub max_relative_speed: f64,
    pub benign_size: (u32, u32),
    pub flood_size: (u32, u32),
    pub interference_size: (u32, u32),
    /// Mean benign signal-quality score in [0, 1].
    pub rssi_mean: f64,
    pub rssi_std: f64,
}

impl Default for TrafficProfile {
    fn default() -> Self {
        Self {
            max_relative_speed: 30.0,
            benign_size: (200, 400),
            flood_size: (60, 120),
            interference_size: (20, 60),
            rssi_mean: 0.8,
            rssi_std: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scenario {
    pub params: QueueParams,
    pub duration: f64,
    pub seed: u64,
    #[serde(default)]
    pub attacks: Vec<AttackProfile>,
    /// Packets waiting longer than this are dropped; `None` means unbounded.
    #[serde(default)]
    pub message_lifetime: Option<f64>,
    pub feature_window: f64,
    /// Deterministic time added to every service, e.g. detection cost.
    #[serde(default)]
    pub service_overhead: f64,
    #[serde(default)]
    pub traffic: TrafficProfile,
}

impl Scenario {
    pub fn new(params: QueueParams, duration: f64, seed: u64) -> Self {
        Self {
            params,
            duration,
            seed,
            attacks: Vec::new(),
            message_lifetime: None,
            feature_window: duration.min(10.0),
            service_overhead: 0.0,
            traffic: TrafficProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        self.params
            .validate()
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.feature_window > 0.0 && self.feature_window <= self.duration) {
            return bad(format!(
                "feature_window {} must lie in (0, duration]",
                self.feature_window
            ));
        }
        if let Some(l) = self.message_lifetime {
            if l.is_nan() || l <= 0.0 {
                return bad(format!("message_lifetime must be positive, got {l}"));
            }
        }
        if !(self.service_overhead.is_finite() && self.service_overhead >= 0.0) {
            return bad("service_overhead must be non-negative".into());
        }
        let t = &self.traffic;
        if t.max_relative_speed.is_nan()
            || t.max_relative_speed < 0.0
            || t.benign_size.0 == 0
            || t.flood_size.0 == 0
            || t.interference_size.0 == 0
            || t.benign_size.0 > t.benign_size.1
            || t.flood_size.0 > t.flood_size.1
            || t.interference_size.0 > t.interference_size.1
            || t.rssi_std.is_nan()
            || t.rssi_std < 0.0
        {
            return bad("invalid traffic profile".into());
        }
        for (i, a) in self.attacks.iter().enumerate() {
            if !(a.start >= 0.0 && a.end > a.start && a.end <= self.duration) {
                return bad(format!(
                    "attack {i}: interval [{}, {}) outside [0, {}]",
                    a.start, a.end, self.duration
                ));
            }
            match a.kind {
                AttackKind::Flood { multiplier }
                    if !(multiplier > 1.0 && multiplier.is_finite()) =>
                {
                    return bad(format!("attack {i}: flood multiplier must exceed 1"));
                }
                AttackKind::Jam {
                    loss_prob,
                    burstiness,
                } if !(loss_prob > 0.0 && loss_prob <= 1.0)
                    || !(burstiness >= 1.0 && burstiness.is_finite()) =>
                {
                    return bad(format!(
                        "attack {i}: jam needs loss_prob in (0,1] and burstiness >= 1"
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn is_attacked_at(&self, t: f64) -> bool {
        self.attacks.iter().any(|a| a.covers(t))
    }

    fn jam_at(&self, t: f64) -> Option<f64> {
        self.attacks.iter().find_map(|a| match a.kind {
            AttackKind::Jam { loss_prob, .. } if a.covers(t) => Some(loss_prob),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub id: u64,
    pub arrival_time: f64,
    /// Absent for packets dropped before service.
    pub service_start: Option<f64>,
    pub departure_time: Option<f64>,
    pub channel: Option<u32>,
    pub size_bytes: u32,
    pub rssi_proxy: f64,
    pub relative_speed: f64,
    pub label: Label,
}

impl PacketRecord {
    pub fn is_delivered(&self) -> bool {
        self.departure_time.is_some()
    }

    pub fn wait(&self) -> Option<f64> {
        self.service_start.map(|s| s - self.arrival_time)
    }

    pub fn delay(&self) -> Option<f64> {
        self.departure_time.map(|d| d - self.arrival_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct SimStats {
    pub completed: usize,
    pub dropped: usize,
    /// Mean queueing delay of completed packets.
    pub mean_wait: f64,
    /// Time-averaged number waiting over `[0, duration]`.
    pub mean_queue_len: f64,
    /// `completed / (completed + dropped)`, 1 when no packet arrived.
    pub delivery_rate: f64,
    /// Mean `departure - arrival` of completed packets.
    pub mean_delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub scenario: Scenario,
    pub packets: Vec<PacketRecord>,
    pub stats: SimStats,
}

/// Empirical counterparts of the closed-form queue metrics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EmpiricalMetrics {
    pub completed: usize,
    pub arrival_rate: f64,
    pub t_q: f64,
    pub n_q: f64,
    pub t_total: f64,
    pub n_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    Benign,
    Flood,
    Interference,
}

struct Pending {
    time: f64,
    origin: Origin,
    size: u32,
    rssi: f64,
    speed: f64,
}

/// f64 with a total order, for the departure heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = start;
    loop {
        t += exp.sample(rng);
        if t >= end {
            break;
        }
        out.push(t);
    }
    out
}

fn attributes(
    rng: &mut ChaCha8Rng,
    traffic: &TrafficProfile,
    size_range: (u32, u32),
) -> (u32, f64, f64) {
    let size = rng.random_range(size_range.0..=size_range.1);
    let speed = rng.random::<f64>() * traffic.max_relative_speed;
    // Faster relative motion costs a little link quality.
    let fading = 0.004 * speed;
    let noise = Normal::new(0.0, traffic.rssi_std.max(1e-12))
        .expect("finite std")
        .sample(rng);
    let rssi = (traffic.rssi_mean - fading + noise).clamp(0.0, 1.0);
    (size, rssi, speed)
}

fn generate_arrivals(sc: &Scenario) -> Vec<Pending> {
    let traffic = &sc.traffic;
    let lambda = sc.params.lambda_r;
    let mut pending = Vec::new();

    let mut arr = stream_rng(sc.seed, stream::ARRIVALS);
    let mut attr = stream_rng(sc.seed, stream::ATTRIBUTES);
    for t in poisson_times(&mut arr, lambda, 0.0, sc.duration) {
        let (size, rssi, speed) = attributes(&mut attr, traffic, traffic.benign_size);
        pending.push(Pending {
            time: t,
            origin: Origin::Benign,
            size,
            rssi,
            speed,
        });
    }

    for (i, a) in sc.attacks.iter().enumerate() {
        let (rate, stream_id, origin, sizes) = match a.kind {
            AttackKind::Flood { multiplier } => (
                (multiplier - 1.0) * lambda,
                stream::FLOOD + i as u64,
                Origin::Flood,
                traffic.flood_size,
            ),
            AttackKind::Jam { burstiness, .. } => (
                (burstiness - 1.0) * lambda,
                stream::JAM_TRAFFIC + i as u64,
                Origin::Interference,
                traffic.interference_size,
            ),
        };
        let mut rng = stream_rng(sc.seed, stream_id);
        let times = poisson_times(&mut rng, rate, a.start, a.end);
        for t in times {
            let (size, rssi, speed) = attributes(&mut rng, traffic, sizes);
            pending.push(Pending {
                time: t,
                origin,
                size,
                rssi,
                speed,
            });
        }
    }

    // Stable sort keeps benign-before-attack order on exact time ties.
    pending.sort_by(|a, b| a.time.total_cmp(&b.time));
    pending
}

/// Runs one scenario to completion. Arrivals stop at `duration`; packets
/// already in the system are served (or expire) afterwards.
pub fn run(scenario: &Scenario) -> Result<TraceLog> {
    scenario.validate()?;
    let sc = scenario;
    let m = sc.params.m;
    let arrivals = generate_arrivals(sc);

    let mut jam_rng = stream_rng(sc.seed, stream::JAMMING);
    let service = Exp::new(sc.params.mu).expect("validated mu");
    let mut service_rng = stream_rng(sc.seed, stream::SERVICE);

    let mut packets: Vec<PacketRecord> = Vec::with_capacity(arrivals.len());
    for (id, p) in arrivals.iter().enumerate() {
        let mut rssi = p.rssi;
        if p.origin == Origin::Interference {
            rssi *= 0.5;
        }
        packets.push(PacketRecord {
            id: id as u64,
            arrival_time: p.time,
            service_start: None,
            departure_time: None,
            channel: None,
            size_bytes: p.size,
            rssi_proxy: rssi,
            relative_speed: p.speed,
            label: if sc.is_attacked_at(p.time) {
                Label::Attack
            } else {
                Label::Benign
            },
        });
    }

    let lifetime = sc.message_lifetime.unwrap_or(f64::INFINITY);
    let mut free: BinaryHeap<Reverse<u32>> = (0..m).map(Reverse).collect();
    let mut busy: BinaryHeap<Reverse<(Time, u64, u32)>> = BinaryHeap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut dropped = 0usize;

    // Queue-length integral over [0, duration].
    let mut area = 0.0;
    let mut last_t = 0.0;
    let horizon = sc.duration;
    let integrate = |from: f64, to: f64, len: usize, area: &mut f64| {
        let a = from.min(horizon);
        let b = to.min(horizon);
        if b > a {
            *area += (b - a) * len as f64;
        }
    };

    let mut next_arrival = 0usize;
    loop {
        let dep_t = busy.peek().map(|Reverse((t, _, _))| t.0);
        let arr_t = arrivals.get(next_arrival).map(|p| p.time);
        let now = match (dep_t, arr_t) {
            (None, None) => break,
            (Some(d), Some(a)) => d.min(a),
            (Some(d), None) => d,
            (None, Some(a)) => a,
        };

        // Expire queued packets whose lifetime ran out before `now`.
        while let Some(&head) = queue.front() {
            let expiry = packets[head].arrival_time + lifetime;
            if expiry < now {
                integrate(last_t, expiry, queue.len(), &mut area);
                last_t = expiry;
                queue.pop_front();
                dropped += 1;
            } else {
                break;
            }
        }
        integrate(last_t, now, queue.len(), &mut area);
        last_t = now;

        // Departures first on ties, then by packet id.
        let is_departure =
            matches!((dep_t, arr_t), (Some(d), Some(a)) if d <= a) || arr_t.is_none();
        if is_departure {
            let Reverse((_, _, ch)) = busy.pop().expect("peeked");
            free.push(Reverse(ch));
        } else {
            let idx = next_arrival;
            next_arrival += 1;
            let corrupted = match sc.jam_at(packets[idx].arrival_time) {
                Some(loss) => {
                    let severity = 0.3 + 0.4 * jam_rng.random::<f64>();
                    packets[idx].rssi_proxy *= 1.0 - severity;
                    jam_rng.random::<f64>() < loss
                }
                None => false,
            };
            if corrupted {
                dropped += 1;
            } else {
                queue.push_back(idx);
            }
        }

        while !queue.is_empty() && !free.is_empty() {
            let idx = queue.pop_front().expect("non-empty");
            let Reverse(ch) = free.pop().expect("non-empty");
            let s = service.sample(&mut service_rng) + sc.service_overhead;
            let p = &mut packets[idx];
            p.service_start = Some(now);
            p.departure_time = Some(now + s);
            p.channel = Some(ch);
            busy.push(Reverse((Time(now + s), p.id, ch)));
        }
    }

    let completed = packets.iter().filter(|p| p.is_delivered()).count();
    let (sum_wait, sum_delay) = packets
        .iter()
        .filter_map(|p| Some((p.wait()?, p.delay()?)))
        .fold((0.0, 0.0), |(w, d), (pw, pd)| (w + pw, d + pd));
    let mean = |s: f64| {
        if completed > 0 {
            s / completed as f64
        } else {
            0.0
        }
    };
    let total = completed + dropped;
    let stats = SimStats {
        completed,
        dropped,
        mean_wait: mean(sum_wait),
        mean_queue_len: area / horizon,
        delivery_rate: if total > 0 {
            completed as f64 / total as f64
        } else {
            1.0
        },
        mean_delay: mean(sum_delay),
    };
    Ok(TraceLog {
        scenario: sc.clone(),
        packets,
        stats,
    })
}

/// Time-average of a counting process given `(time, +1/-1)` events,
/// over `[0, horizon]`.
fn time_average(mut events: Vec<(f64, i64)>, horizon: f64) -> f64 {
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut level = 0i64;
    let mut last = 0.0;
    let mut area = 0.0;
    for (t, delta) in events {
        if t > horizon {
            break;
        }
        area += (t - last) * level as f64;
        level += delta;
        last = t;
    }
    area += (horizon - last) * level as f64;
    area / horizon
}

/// Empirical waiting time, queue length, sojourn and occupancy of an
/// attack-free trace with unbounded lifetime.
pub fn empirical_metrics(trace: &TraceLog) -> Result<EmpiricalMetrics> {
    if !trace.scenario.attacks.is_empty() || trace.scenario.message_lifetime.is_some() {
        return Err(SimError::NotSteadyState);
    }
    let served: Vec<&PacketRecord> = trace.packets.iter().filter(|p| p.is_delivered()).collect();
    if served.len() < MIN_COMPLETIONS {
        return Err(SimError::InsufficientData {
            completed: served.len(),
            required: MIN_COMPLETIONS,
        });
    }
    let n = served.len() as f64;
    let horizon = trace.scenario.duration;
    let t_q = served.iter().filter_map(|p| p.wait()).sum::<f64>() / n;
    let t_total = served.iter().filter_map(|p| p.delay()).sum::<f64>() / n;

    let mut queue_events = Vec::with_capacity(2 * served.len());
    let mut system_events = Vec::with_capacity(2 * served.len());
    for p in &served {
        let s = p.service_start.expect("served");
        let d = p.departure_time.expect("served");
        queue_events.push((p.arrival_time, 1));
        queue_events.push((s, -1));
        system_events.push((p.arrival_time, 1));
        system_events.push((d, -1));
    }
    let arrivals_in_horizon = trace
        .packets
        .iter()
        .filter(|p| p.arrival_time < horizon)
        .count();
    Ok(EmpiricalMetrics {
        completed: served.len(),
        arrival_rate: arrivals_in_horizon as f64 / horizon,
        t_q,
        n_q: time_average(queue_events, horizon),
        t_total,
        n_r: time_average(system_events, horizon),
    })
}

/// Number of windows of length `window` covering `duration`.
pub fn window_count(duration: f64, window: f64) -> usize {
    ((duration / window) - 1e-9).ceil().max(1.0) as usize
}

/// Aggregates a trace into fixed windows keyed by arrival time.
///
/// A window is labelled attack iff more than half of its packets are.
pub fn windowize(trace: &TraceLog, window: f64) -> Result<FeatureTable> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(SimError::InvalidWindow(window));
    }
    if trace.packets.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let duration = trace.scenario.duration;
    let m = f64::from(trace.scenario.params.m);
    let n = window_count(duration, window);

    #[derive(Default, Clone)]
    struct Acc {
        count: usize,
        attack: usize,
        served: usize,
        wait_sum: f64,
        wait_max: f64,
        drops: usize,
        size_sum: f64,
        rssi_sum: f64,
        speed_sum: f64,
        busy: f64,
    }
    let mut acc = vec![Acc::default(); n];
    let bounds = |w: usize| {
        let lo = w as f64 * window;
        (lo, (lo + window).min(duration))
    };

    for p in &trace.packets {
        let w = ((p.arrival_time / window).floor() as usize).min(n - 1);
        let a = &mut acc[w];
        a.count += 1;
        if p.label.is_attack() {
            a.attack += 1;
        }
        a.size_sum += f64::from(p.size_bytes);
        a.rssi_sum += p.rssi_proxy;
        a.speed_sum += p.relative_speed;
        match (p.wait(), p.departure_time) {
            (Some(wait), Some(_)) => {
                a.served += 1;
                a.wait_sum += wait;
                a.wait_max = a.wait_max.max(wait);
            }
            _ => a.drops += 1,
        }
        // Busy time is attributed to the windows the service overlaps.
        if let (Some(s), Some(d)) = (p.service_start, p.departure_time) {
            let first = ((s / window).floor() as usize).min(n - 1);
            for (k, slot) in acc.iter_mut().enumerate().skip(first) {
                let (lo, hi) = bounds(k);
                if lo >= d {
                    break;
                }
                let overlap = d.min(hi) - s.max(lo);
                if overlap > 0.0 {
                    slot.busy += overlap;
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (k, a) in acc.iter().enumerate() {
        let (lo, hi) = bounds(k);
        let c = a.count as f64;
        let per = |s: f64| if a.count > 0 { s / c } else { 0.0 };
        rows.push(vec![
            c,
            if a.served > 0 {
                a.wait_sum / a.served as f64
            } else {
                0.0
            },
            a.wait_max,
            a.drops as f64,
            per(a.size_sum),
            per(a.rssi_sum),
            per(a.speed_sum),
            (a.busy / (m * (hi - lo))).min(1.0),
        ]);
        labels.push(if 2 * a.attack > a.count {
            Label::Attack
        } else {
            Label::Benign
        });
    }
    Ok(FeatureTable::new(
        WINDOW_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
        Some(labels),
    )?)
}

pub const TRACE_HEADER: [&str; 9] = [
    "id",
    "arrival_time",
    "service_start",
    "departure_time",
    "channel",
    "size_bytes",
    "rssi_proxy",
    "relative_speed",
    "label",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one packet per row with the fixed [`TRACE_HEADER`]; absent values
/// are empty cells. Floats use the shortest round-trip representation.
pub fn write_trace_csv<W: Write>(packets: &[PacketRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for p in packets {
        w.write_record([
            p.id.to_string(),
            p.arrival_time.to_string(),
            opt(p.service_start),
            opt(p.departure_time),
            opt(p.channel),
            p.size_bytes.to_string(),
            p.rssi_proxy.to_string(),
            p.relative_speed.to_string(),
            p.label.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<PacketRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(SimError::TraceFormat {
            record: 0,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let err = |reason: String| SimError::TraceFormat {
            record: i + 1,
            reason,
        };
        let field = |j: usize| rec.get(j).unwrap_or("");
        fn req<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("cannot parse `{s}`"))
        }
        fn optional<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                req(s).map(Some)
            }
        }
        out.push(PacketRecord {
            id: req(field(0)).map_err(err)?,
            arrival_time: req(field(1)).map_err(err)?,
            service_start: optional(field(2)).map_err(err)?,
            departure_time: optional(field(3)).map_err(err)?,
            channel: optional(field(4)).map_err(err)?,
            size_bytes: req(field(5)).map_err(err)?,
            rssi_proxy: req(field(6)).map_err(err)?,
            relative_speed: req(field(7)).map_err(err)?,
            label: Label::parse(field(8))
                .ok_or_else(|| err(format!("bad label `{}`", field(8))))?,
        });
    }
    Ok(out)
}
