use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::VmRequest;
use crate::error::{invalid, Error, Result};
use crate::workload::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyMode {
    Edge,
    Cloud,
}

/// Servers grouped into sites; a cloud is a single pooled site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub mode: TopologyMode,
    pub k_sites: u32,
    pub servers_per_site: u32,
    pub cores_per_server: u32,
}

impl Topology {
    pub fn edge(k_sites: u32, servers_per_site: u32, cores_per_server: u32) -> Self {
        Self {
            mode: TopologyMode::Edge,
            k_sites,
            servers_per_site,
            cores_per_server,
        }
    }

    pub fn cloud(servers: u32, cores_per_server: u32) -> Self {
        Self {
            mode: TopologyMode::Cloud,
            k_sites: 1,
            servers_per_site: servers,
            cores_per_server,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_sites == 0 || self.servers_per_site == 0 || self.cores_per_server == 0 {
            return Err(invalid("topology", "site, server and core counts must be >= 1"));
        }
        if self.mode == TopologyMode::Cloud && self.k_sites != 1 {
            return Err(invalid("k_sites", "a cloud is one pooled site"));
        }
        Ok(())
    }

    pub fn total_servers(&self) -> u32 {
        self.k_sites * self.servers_per_site
    }

    pub fn total_cores(&self) -> u64 {
        u64::from(self.total_servers()) * u64::from(self.cores_per_server)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Lowest-indexed server with room.
    #[default]
    FirstFit,
    /// Server left with the fewest free cores.
    BestFit,
    /// First fit, with requests that arrive at the same instant taken
    /// largest first.
    FirstFitDecreasingBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteAssign {
    /// Each VM goes to a uniformly random site.
    #[default]
    Uniform,
    /// Each VM goes to its trace `site_hint`.
    Hint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub topology: Topology,
    pub policy: Policy,
    pub placed: u64,
    pub peak_servers_used: u32,
    pub peak_cores_used: u64,
    /// Longest total queue of VMs waiting for room.
    pub rejected_or_queued: u64,
    /// VMs that could not be placed on arrival.
    pub queued_count: u64,
    /// Mean wait from arrival to placement, past the warm-up.
    pub mean_placement_delay: f64,
    /// `mean_placement_delay` divided by the mean VM lifetime.
    pub normalized_delay: f64,
    /// Set by [`edge_size_sweep`]: `|normalized_delay - cloud normalized_delay|`.
    pub relative_error_vs_cloud: Option<f64>,
    /// `(time, allocated cores / total cores)` at evenly spaced instants.
    pub utilization_timeline: Vec<(f64, f64)>,
}

/// VMs among the first `WARMUP` fraction, in arrival order, do not count
/// toward delay statistics.
const WARMUP: f64 = 0.1;
const TIMELINE_POINTS: usize = 200;

#[derive(PartialEq)]
struct Release {
    time: f64,
    seq: u64,
    vm: usize,
    site: usize,
    server: usize,
}

impl Eq for Release {}

impl Ord for Release {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Release {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Site {
    free: Vec<u32>,
    residents: Vec<u32>,
    queue: VecDeque<usize>,
}

struct Packer<'a> {
    trace: &'a [VmRequest],
    policy: Policy,
    capacity: u32,
    sites: Vec<Site>,
    releases: BinaryHeap<Release>,
    seq: u64,
    servers_used: u32,
    cores_used: u64,
    queued_now: u64,
    report: PackingReport,
    delay_sum: f64,
    delay_n: u64,
    warm_idx: usize,
    timeline: Vec<(f64, u64)>,
}

impl Packer<'_> {
    fn choose(&self, site: usize, cores: u32) -> Option<usize> {
        let free = &self.sites[site].free;
        match self.policy {
            Policy::FirstFit | Policy::FirstFitDecreasingBatch => free.iter().position(|&f| f >= cores),
            Policy::BestFit => free
                .iter()
                .enumerate()
                .filter(|(_, &f)| f >= cores)
                .min_by_key(|(_, &f)| f)
                .map(|(i, _)| i),
        }
    }

    fn try_place(&mut self, now: f64, vm: usize, site: usize) -> bool {
        let cores = self.trace[vm].cores;
        let Some(server) = self.choose(site, cores) else {
            return false;
        };
        let s = &mut self.sites[site];
        assert!(s.free[server] >= cores, "server oversubscribed");
        s.free[server] -= cores;
        if s.residents[server] == 0 {
            self.servers_used += 1;
        }
        s.residents[server] += 1;
        self.cores_used += u64::from(cores);
        self.report.placed += 1;
        self.report.peak_servers_used = self.report.peak_servers_used.max(self.servers_used);
        self.report.peak_cores_used = self.report.peak_cores_used.max(self.cores_used);
        if vm >= self.warm_idx {
            self.delay_sum += now - self.trace[vm].arrival;
            self.delay_n += 1;
        }
        self.seq += 1;
        self.releases.push(Release {
            time: now + self.trace[vm].lifetime,
            seq: self.seq,
            vm,
            site,
            server,
        });
        self.timeline.push((now, self.cores_used));
        true
    }

    fn release(&mut self, r: Release) {
        let cores = self.trace[r.vm].cores;
        let s = &mut self.sites[r.site];
        s.free[r.server] += cores;
        assert!(s.free[r.server] <= self.capacity, "released more cores than allocated");
        s.residents[r.server] -= 1;
        if s.residents[r.server] == 0 {
            self.servers_used -= 1;
        }
        self.cores_used -= u64::from(cores);
        self.timeline.push((r.time, self.cores_used));
        while let Some(&head) = self.sites[r.site].queue.front() {
            if !self.try_place(r.time, head, r.site) {
                break;
            }
            self.sites[r.site].queue.pop_front();
            self.queued_now -= 1;
        }
    }

    fn arrive(&mut self, vm: usize, site: usize) {
        let now = self.trace[vm].arrival;
        if self.sites[site].queue.is_empty() && self.try_place(now, vm, site) {
            return;
        }
        self.sites[site].queue.push_back(vm);
        self.report.queued_count += 1;
        self.queued_now += 1;
        self.report.rejected_or_queued = self.report.rejected_or_queued.max(self.queued_now);
    }
}

/// Places each VM at its site with `policy`, queueing FIFO per site when no
/// server has room, and releases its cores after its lifetime.
///
/// Requests must be sorted by arrival. Edge VMs never leave their site.
pub fn simulate_packing(
    trace: &[VmRequest],
    topology: &Topology,
    policy: Policy,
    site_assign: SiteAssign,
    stream: SeededStream,
) -> Result<PackingReport> {
    topology.validate()?;
    if let Some(v) = trace.iter().find(|v| v.cores > topology.cores_per_server) {
        return Err(Error::OversizedVm {
            id: v.id.clone(),
            cores: v.cores,
            capacity: topology.cores_per_server,
        });
    }
    if trace.windows(2).any(|w| w[1].arrival < w[0].arrival) {
        return Err(invalid("trace", "requests must be sorted by arrival"));
    }
    let k = topology.k_sites as usize;
    let mut rng = stream.rng();
    let sites_of: Vec<usize> = trace
        .iter()
        .map(|v| match (topology.mode, site_assign) {
            (TopologyMode::Cloud, _) => Ok(0),
            (TopologyMode::Edge, SiteAssign::Uniform) => Ok(rng.random_range(0..k)),
            (TopologyMode::Edge, SiteAssign::Hint) => match v.site_hint {
                Some(h) if (h as usize) < k => Ok(h as usize),
                _ => Err(Error::Config(format!("VM {} lacks a site hint below {k}", v.id))),
            },
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..trace.len()).collect();
    if policy == Policy::FirstFitDecreasingBatch {
        order.sort_by(|&a, &b| {
            trace[a]
                .arrival
                .total_cmp(&trace[b].arrival)
                .then_with(|| trace[b].cores.cmp(&trace[a].cores))
        });
    }

    let n_servers = topology.servers_per_site as usize;
    let mut p = Packer {
        trace,
        policy,
        capacity: topology.cores_per_server,
        sites: (0..k)
            .map(|_| Site {
                free: vec![topology.cores_per_server; n_servers],
                residents: vec![0; n_servers],
                queue: VecDeque::new(),
            })
            .collect(),
        releases: BinaryHeap::new(),
        seq: 0,
        servers_used: 0,
        cores_used: 0,
        queued_now: 0,
        report: PackingReport {
            topology: *topology,
            policy,
            placed: 0,
            peak_servers_used: 0,
            peak_cores_used: 0,
            rejected_or_queued: 0,
            queued_count: 0,
            mean_placement_delay: 0.0,
            normalized_delay: 0.0,
            relative_error_vs_cloud: None,
            utilization_timeline: Vec::new(),
        },
        delay_sum: 0.0,
        delay_n: 0,
        warm_idx: (WARMUP * trace.len() as f64).floor() as usize,
        timeline: Vec::new(),
    };

    let mut next = 0;
    loop {
        let ta = order.get(next).map_or(f64::INFINITY, |&i| trace[i].arrival);
        let tr = p.releases.peek().map_or(f64::INFINITY, |r| r.time);
        if ta == f64::INFINITY && tr == f64::INFINITY {
            break;
        }
        if tr <= ta {
            let r = p.releases.pop().expect("peeked release");
            p.release(r);
        } else {
            let vm = order[next];
            next += 1;
            p.arrive(vm, sites_of[vm]);
        }
    }
    assert_eq!(p.report.placed as usize, trace.len(), "every VM is placed once");
    assert_eq!(p.cores_used, 0, "every VM is released once");

    let mut report = p.report;
    report.mean_placement_delay = if p.delay_n == 0 { 0.0 } else { p.delay_sum / p.delay_n as f64 };
    let mean_life = trace.iter().map(|v| v.lifetime).sum::<f64>() / trace.len().max(1) as f64;
    report.normalized_delay = if mean_life > 0.0 {
        report.mean_placement_delay / mean_life
    } else {
        0.0
    };
    report.utilization_timeline = sample_timeline(&p.timeline, topology.total_cores());
    Ok(report)
}

fn sample_timeline(changes: &[(f64, u64)], total: u64) -> Vec<(f64, f64)> {
    let (Some(first), Some(last)) = (changes.first(), changes.last()) else {
        return Vec::new();
    };
    let (t0, t1) = (first.0, last.0);
    let mut out = Vec::with_capacity(TIMELINE_POINTS);
    let mut j = 0;
    for i in 0..TIMELINE_POINTS {
        let t = t0 + (t1 - t0) * i as f64 / (TIMELINE_POINTS - 1) as f64;
        while j + 1 < changes.len() && changes[j + 1].0 <= t {
            j += 1;
        }
        out.push((t, changes[j].1 as f64 / total as f64));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cores_per_server: u32,
    pub report: PackingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cloud: PackingReport,
    pub rows: Vec<SweepRow>,
    pub tolerance: f64,
    /// Smallest swept size whose error is within `tolerance`.
    pub equivalence_size: Option<u32>,
}

impl SweepReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.report.relative_error_vs_cloud.unwrap_or(f64::NAN))
            .collect()
    }
}

/// Packs the same trace on `cloud` and on `edge` with each per-server core
/// count in `grid`, scoring each edge size by how far its normalized
/// placement delay is from the cloud's.
#[allow(clippy::too_many_arguments)]
pub fn edge_size_sweep(
    trace: &[VmRequest],
    cloud: &Topology,
    edge: &Topology,
    grid: &[u32],
    policy: Policy,
    site_assign: SiteAssign,
    stream: SeededStream,
    tolerance: f64,
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(invalid("grid", "need at least one edge size"));
    }
    let cloud_report = simulate_packing(trace, cloud, policy, site_assign, stream)?;
    let rows = grid
        .par_iter()
        .map(|&cores| {
            let topo = Topology {
                cores_per_server: cores,
                ..*edge
            };
            let mut report = simulate_packing(trace, &topo, policy, site_assign, stream)?;
            report.relative_error_vs_cloud = Some((report.normalized_delay - cloud_report.normalized_delay).abs());
            Ok(SweepRow {
                cores_per_server: cores,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let equivalence_size = rows
        .iter()
        .find(|r| r.report.relative_error_vs_cloud.is_some_and(|e| e <= tolerance))
        .map(|r| r.cores_per_server);
    Ok(SweepReport {
        cloud: cloud_report,
        rows,
        tolerance,
        equivalence_size,
    })
}
