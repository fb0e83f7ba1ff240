//! Event loop shared by every model: one or two FCFS stations fed by
//! pre-generated arrival streams.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum JobKind {
    /// A request entering at the first station.
    Primary,
    /// Background load arriving directly at the destination station.
    Home,
}

#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub kind: JobKind,
    pub arrival: f64,
    /// Service demand at the first station (or at the destination for home jobs).
    pub service0: f64,
    /// Service demand at the destination; only used when `migrated`.
    pub service1: f64,
    pub migrated: bool,
    /// Needed the migration phase, whether or not a destination exists.
    pub took_phase2: bool,
    pub start0: f64,
    pub end0: f64,
    pub start1: f64,
    pub end1: f64,
    pub done: bool,
}

impl Job {
    pub fn primary(arrival: f64, service0: f64, migrated: bool, service1: f64) -> Self {
        Self {
            kind: JobKind::Primary,
            arrival,
            service0,
            service1,
            migrated,
            took_phase2: migrated,
            start0: f64::NAN,
            end0: f64::NAN,
            start1: f64::NAN,
            end1: f64::NAN,
            done: false,
        }
    }

    pub fn home(arrival: f64, service: f64) -> Self {
        Self {
            kind: JobKind::Home,
            ..Self::primary(arrival, f64::NAN, true, service)
        }
    }

    pub fn wait0(&self) -> f64 {
        self.start0 - self.arrival
    }

    pub fn wait1(&self) -> f64 {
        self.start1 - self.end0
    }

    pub fn completion(&self) -> f64 {
        if self.migrated {
            self.end1
        } else {
            self.end0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EventKind {
    Arrival,
    Start,
    Departure,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Arrival => "arrival",
            Self::Start => "start",
            Self::Departure => "departure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LoggedEvent {
    pub time: f64,
    pub kind: EventKind,
    pub job: usize,
    pub station: usize,
}

struct Station {
    servers: u32,
    busy: u32,
    queue: VecDeque<usize>,
}

#[derive(PartialEq)]
struct Departure {
    time: f64,
    seq: u64,
    station: usize,
    job: usize,
}

impl Eq for Departure {}

impl Ord for Departure {
    // Reversed so the max-heap pops the earliest departure first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct EngineInput {
    /// Primary jobs in arrival order, followed by home jobs in arrival order.
    pub jobs: Vec<Job>,
    pub n_primary: usize,
    pub servers0: u32,
    pub servers1: u32,
    /// Arrivals at or after this time are not admitted.
    pub cutoff: f64,
    /// Keep serving admitted jobs after `cutoff`.
    pub drain: bool,
    /// Start of the measurement window for time averages.
    pub measure_from: f64,
    pub log_events: bool,
}

pub(crate) struct EngineOutput {
    pub jobs: Vec<Job>,
    pub n_primary: usize,
    pub admitted_primary: usize,
    pub servers0: u32,
    pub measure_from: f64,
    pub cutoff: f64,
    pub t_end: f64,
    /// Integral of the number of primary jobs in the system over the window.
    pub area_in_system: f64,
    /// Integral of busy servers at the first station over the window.
    pub area_busy0: f64,
    pub in_system_at_end: usize,
    pub events: Vec<LoggedEvent>,
}

struct State {
    stations: [Station; 2],
    heap: BinaryHeap<Departure>,
    seq: u64,
    clock: f64,
    measure_from: f64,
    area_in_system: f64,
    area_busy0: f64,
    in_system: usize,
    events: Option<Vec<LoggedEvent>>,
}

impl State {
    fn advance(&mut self, t: f64) {
        debug_assert!(t >= self.clock, "event at {t} before clock {}", self.clock);
        let from = self.clock.max(self.measure_from);
        if t > from {
            let dt = t - from;
            self.area_in_system += self.in_system as f64 * dt;
            self.area_busy0 += f64::from(self.stations[0].busy) * dt;
        }
        self.clock = t;
    }

    fn log(&mut self, time: f64, kind: EventKind, job: usize, station: usize) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(LoggedEvent {
                time,
                kind,
                job,
                station,
            });
        }
    }

    fn enter(&mut self, jobs: &mut [Job], station: usize, id: usize) {
        let st = &mut self.stations[station];
        if st.busy < st.servers {
            st.busy += 1;
            self.start(jobs, station, id);
        } else {
            st.queue.push_back(id);
        }
    }

    fn start(&mut self, jobs: &mut [Job], station: usize, id: usize) {
        let t = self.clock;
        let job = &mut jobs[id];
        let service = if station == 0 {
            job.start0 = t;
            job.service0
        } else {
            job.start1 = t;
            job.service1
        };
        self.seq += 1;
        self.heap.push(Departure {
            time: t + service,
            seq: self.seq,
            station,
            job: id,
        });
        self.log(t, EventKind::Start, id, station);
    }

    fn depart(&mut self, jobs: &mut [Job], station: usize, id: usize) {
        let t = self.clock;
        self.log(t, EventKind::Departure, id, station);
        match self.stations[station].queue.pop_front() {
            Some(next) => self.start(jobs, station, next),
            None => self.stations[station].busy -= 1,
        }
        let job = &mut jobs[id];
        if station == 0 {
            job.end0 = t;
            if job.migrated {
                self.enter(jobs, 1, id);
                return;
            }
        } else {
            job.end1 = t;
        }
        job.done = true;
        if job.kind == JobKind::Primary {
            self.in_system -= 1;
        }
    }
}

pub(crate) fn run(input: EngineInput) -> EngineOutput {
    let EngineInput {
        mut jobs,
        n_primary,
        servers0,
        servers1,
        cutoff,
        drain,
        measure_from,
        log_events,
    } = input;
    let mut st = State {
        stations: [
            Station {
                servers: servers0,
                busy: 0,
                queue: VecDeque::new(),
            },
            Station {
                servers: servers1,
                busy: 0,
                queue: VecDeque::new(),
            },
        ],
        heap: BinaryHeap::new(),
        seq: 0,
        clock: 0.0,
        measure_from,
        area_in_system: 0.0,
        area_busy0: 0.0,
        in_system: 0,
        events: log_events.then(Vec::new),
    };
    let n_jobs = jobs.len();
    let (mut next_p, mut next_h) = (0usize, n_primary);
    let mut admitted_primary = 0;
    loop {
        let ta = if next_p < n_primary && jobs[next_p].arrival < cutoff {
            jobs[next_p].arrival
        } else {
            f64::INFINITY
        };
        let th = if next_h < n_jobs && jobs[next_h].arrival < cutoff {
            jobs[next_h].arrival
        } else {
            f64::INFINITY
        };
        let td = st.heap.peek().map_or(f64::INFINITY, |d| d.time);
        let t = ta.min(th).min(td);
        if t == f64::INFINITY || (!drain && t >= cutoff) {
            break;
        }
        st.advance(t);
        if td <= ta && td <= th {
            let d = st.heap.pop().expect("peeked departure");
            st.depart(&mut jobs, d.station, d.job);
        } else if ta <= th {
            let id = next_p;
            next_p += 1;
            admitted_primary += 1;
            st.in_system += 1;
            st.log(t, EventKind::Arrival, id, 0);
            st.enter(&mut jobs, 0, id);
        } else {
            let id = next_h;
            next_h += 1;
            st.log(t, EventKind::Arrival, id, 1);
            st.enter(&mut jobs, 1, id);
        }
    }
    if !drain && cutoff.is_finite() && st.clock < cutoff {
        st.advance(cutoff);
    }
    EngineOutput {
        servers0,
        measure_from,
        cutoff,
        t_end: st.clock,
        area_in_system: st.area_in_system,
        area_busy0: st.area_busy0,
        in_system_at_end: st.in_system,
        events: st.events.unwrap_or_default(),
        jobs,
        n_primary,
        admitted_primary,
    }
}
