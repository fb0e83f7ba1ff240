use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::{EngineOutput, Job, JobKind, LoggedEvent};
use super::TimeSeriesSpec;
use crate::analytic::{overload_window, SinusoidProfile};
use crate::error::{Error, Result};

/// Summary statistics of one run, over requests past the warm-up.
///
/// `mean_wait` adds the mean wait at the first station (over all requests)
/// to the mean wait at the destination (over migrated requests), matching
/// how the analytic edge wait adds its source and destination terms.
/// Per-request response times include the destination wait but not the
/// destination service.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimMetrics {
    pub mean_wait: f64,
    pub mean_wait_source: f64,
    pub mean_wait_destination: f64,
    /// Mean first-station wait of requests that had to queue.
    pub mean_wait_delayed: f64,
    pub fraction_delayed: f64,
    pub mean_service: f64,
    /// Mean time from arrival to leaving the system.
    pub mean_sojourn: f64,
    pub mean_response: f64,
    pub p95_response: f64,
    pub utilization_observed: f64,
    /// Time-average number of requests in the system.
    pub little_l: f64,
    /// Arrival rate observed over the measurement window.
    pub throughput: f64,
    pub count_arrived: u64,
    pub count_served: u64,
    pub count_migrated: u64,
    pub in_system_at_end: u64,
    pub measured_time: f64,
}

impl SimMetrics {
    pub fn migrated_fraction(&self) -> f64 {
        if self.count_served == 0 {
            0.0
        } else {
            self.count_migrated as f64 / self.count_served as f64
        }
    }
}

fn mean(sum: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn total_wait(j: &Job) -> f64 {
    if j.migrated {
        j.wait0() + j.wait1()
    } else {
        j.wait0()
    }
}

pub(crate) fn summarize(out: &EngineOutput, warm_idx: usize, rtt: f64) -> SimMetrics {
    let measured = &out.jobs[warm_idx.min(out.n_primary)..out.n_primary];
    let (mut w0, mut w1, mut wd, mut svc, mut soj) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut served, mut migrated, mut routed, mut delayed) = (0u64, 0u64, 0u64, 0u64);
    let mut responses = Vec::with_capacity(measured.len());
    for j in measured.iter().filter(|j| j.done && j.kind == JobKind::Primary) {
        served += 1;
        let wait0 = j.wait0();
        w0 += wait0;
        if wait0 > 0.0 {
            delayed += 1;
            wd += wait0;
        }
        svc += j.service0;
        soj += j.completion() - j.arrival;
        if j.took_phase2 {
            migrated += 1;
        }
        let mut response = rtt + wait0 + j.service0;
        if j.migrated {
            routed += 1;
            w1 += j.wait1();
            response += j.wait1();
        }
        responses.push(response);
    }
    if served == 0 {
        return SimMetrics {
            count_arrived: out.admitted_primary as u64,
            in_system_at_end: out.in_system_at_end as u64,
            ..SimMetrics::default()
        };
    }
    let window = (out.t_end - out.measure_from).max(0.0);
    let arrived_in_window = out.admitted_primary.saturating_sub(warm_idx) as f64;
    let mean_wait_source = mean(w0, served);
    let mean_wait_destination = mean(w1, routed);
    let response_sum: f64 = responses.iter().sum();
    SimMetrics {
        mean_wait: mean_wait_source + mean_wait_destination,
        mean_wait_source,
        mean_wait_destination,
        mean_wait_delayed: mean(wd, delayed),
        fraction_delayed: delayed as f64 / served as f64,
        mean_service: mean(svc, served),
        mean_sojourn: mean(soj, served),
        mean_response: mean(response_sum, served),
        p95_response: quantile(&mut responses, 0.95),
        utilization_observed: if window > 0.0 {
            out.area_busy0 / (window * f64::from(out.servers0))
        } else {
            0.0
        },
        little_l: if window > 0.0 { out.area_in_system / window } else { 0.0 },
        throughput: if window > 0.0 { arrived_in_window / window } else { 0.0 },
        count_arrived: out.admitted_primary as u64,
        count_served: served,
        count_migrated: migrated,
        in_system_at_end: out.in_system_at_end as u64,
        measured_time: window,
    }
}

/// Nearest-rank quantile; reorders `xs`.
pub(crate) fn quantile(xs: &mut [f64], q: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let rank = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1;
    let (_, v, _) = xs.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

/// Which requests count toward the rush-hour wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RushStatistic {
    /// Requests arriving inside the overload window.
    #[default]
    ArrivalsInWindow,
    /// Requests whose service starts inside the overload window.
    ServedInWindow,
    /// Requests arriving within half a bin of the window's end, when the
    /// fluid backlog peaks.
    AtWindowClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBin {
    /// Bin center as an offset into the cycle.
    pub t_center: f64,
    pub mean_wait: f64,
    pub mean_rate: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RushWindowStats {
    pub t1: f64,
    pub t2: f64,
    pub statistic: RushStatistic,
    pub mean_wait: f64,
    pub count: u64,
}

/// Waits and arrival rates folded onto one cycle of the sinusoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesMetrics {
    pub period: f64,
    pub bins: Vec<TimeBin>,
    pub rush_window: Option<RushWindowStats>,
}

/// Whether cycle offset `x` lies in the cyclic interval from `a` to `b`.
fn in_cyclic(x: f64, a: f64, b: f64) -> bool {
    if a <= b {
        (a..=b).contains(&x)
    } else {
        x >= a || x <= b
    }
}

fn cyclic_distance(x: f64, y: f64, period: f64) -> f64 {
    let d = (x - y).rem_euclid(period);
    d.min(period - d)
}

pub(crate) fn time_series(
    out: &EngineOutput,
    warm_idx: usize,
    profile: &SinusoidProfile,
    mu_eff: f64,
    spec: &TimeSeriesSpec,
) -> Result<TimeSeriesMetrics> {
    let period = profile.period();
    let nb = spec.bins_per_period;
    let width = period / nb as f64;
    let primary = &out.jobs[..out.n_primary];
    let measured = &primary[warm_idx.min(out.n_primary)..];
    let mut wait_sum = vec![0.0; nb];
    let mut served = vec![0u64; nb];
    let mut arrived = vec![0u64; nb];
    let bin_of = |t: f64| (((t.rem_euclid(period)) / width) as usize).min(nb - 1);
    for j in measured {
        let b = bin_of(j.arrival);
        arrived[b] += 1;
        if j.done {
            served[b] += 1;
            wait_sum[b] += total_wait(j);
        }
    }
    let start = if warm_idx == 0 || measured.is_empty() {
        0.0
    } else {
        measured[0].arrival
    };
    let end = if out.cutoff.is_finite() {
        out.cutoff
    } else {
        primary.last().map_or(0.0, |j| j.arrival)
    }
    .max(start);
    let exposure = bin_exposure(start, end, period, nb);
    let bins = (0..nb)
        .map(|b| TimeBin {
            t_center: (b as f64 + 0.5) * width,
            mean_wait: mean(wait_sum[b], served[b]),
            mean_rate: if exposure[b] > 0.0 {
                arrived[b] as f64 / exposure[b]
            } else {
                0.0
            },
            count: served[b],
        })
        .collect();

    let rush_window = match overload_window(profile, mu_eff) {
        Ok(Some(w)) => {
            let pick = |j: &&Job| match spec.rush_statistic {
                RushStatistic::ArrivalsInWindow => in_cyclic(j.arrival.rem_euclid(period), w.t1, w.t2),
                RushStatistic::ServedInWindow => in_cyclic(j.start0.rem_euclid(period), w.t1, w.t2),
                RushStatistic::AtWindowClose => cyclic_distance(j.arrival, w.t2, period) <= width / 2.0,
            };
            let (sum, n) = measured
                .iter()
                .filter(|j| j.done)
                .filter(pick)
                .fold((0.0, 0u64), |(s, n), j| (s + total_wait(j), n + 1));
            Some(RushWindowStats {
                t1: w.t1,
                t2: w.t2,
                statistic: spec.rush_statistic,
                mean_wait: mean(sum, n),
                count: n,
            })
        }
        Ok(None) => None,
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TimeSeriesMetrics {
        period,
        bins,
        rush_window,
    })
}

/// Time spent in each phase bin while the clock runs from `start` to `end`.
fn bin_exposure(start: f64, end: f64, period: f64, nb: usize) -> Vec<f64> {
    let width = period / nb as f64;
    let mut exposure = vec![0.0; nb];
    if end <= start {
        return exposure;
    }
    let full = ((end - start) / period).floor();
    for e in exposure.iter_mut() {
        *e = full * width;
    }
    let mut t = start + full * period;
    while t < end {
        let offset = t.rem_euclid(period);
        let b = ((offset / width) as usize).min(nb - 1);
        let bin_end = t + ((b + 1) as f64 * width - offset).max(0.0);
        let stop = bin_end.min(end);
        exposure[b] += stop - t;
        if stop <= t {
            break;
        }
        t = stop;
    }
    exposure
}

pub(crate) fn write_event_log(path: &Path, events: &[LoggedEvent]) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["event_time", "event_type", "request_id", "queue_id"])
        .map_err(io)?;
    for e in events {
        w.write_record([
            format!("{:.9}", e.time),
            e.kind.as_str().to_string(),
            e.job.to_string(),
            e.station.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
