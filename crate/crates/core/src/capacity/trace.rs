use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::workload::{ArrivalSpec, SeededStream};

/// One VM request from a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmRequest {
    pub id: String,
    pub arrival: f64,
    pub lifetime: f64,
    pub cores: u32,
    #[serde(default)]
    pub site_hint: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub count: usize,
    pub mean_cores: f64,
    pub min_cores: u32,
    pub max_cores: u32,
    pub mean_lifetime: f64,
    /// Mean cores in use, by Little's law over the trace span.
    pub offered_cores: f64,
}

pub fn trace_summary(trace: &[VmRequest]) -> Option<TraceSummary> {
    let first = trace.first()?;
    let n = trace.len() as f64;
    let span = trace.last().map_or(0.0, |l| l.arrival - first.arrival);
    let core_seconds: f64 = trace.iter().map(|v| f64::from(v.cores) * v.lifetime).sum();
    Some(TraceSummary {
        count: trace.len(),
        mean_cores: trace.iter().map(|v| f64::from(v.cores)).sum::<f64>() / n,
        min_cores: trace.iter().map(|v| v.cores).min().unwrap_or(0),
        max_cores: trace.iter().map(|v| v.cores).max().unwrap_or(0),
        mean_lifetime: trace.iter().map(|v| v.lifetime).sum::<f64>() / n,
        offered_cores: if span > 0.0 { core_seconds / span } else { 0.0 },
    })
}

#[derive(Debug, Deserialize)]
struct Row {
    vm_id: String,
    arrival_s: f64,
    lifetime_s: f64,
    cores: u32,
    #[serde(default)]
    site_hint: Option<u32>,
}

const HEADER: [&str; 4] = ["vm_id", "arrival_s", "lifetime_s", "cores"];

/// Reads a `vm_id,arrival_s,lifetime_s,cores[,site_hint]` CSV, sorted by arrival.
pub fn load_vm_trace(path: &Path) -> Result<Vec<VmRequest>> {
    let parse = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let headers = reader.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 4 || names[..4] != HEADER || names.len() > 5 || (names.len() == 5 && names[4] != "site_hint") {
        return Err(parse(
            1,
            format!("expected header {}[,site_hint], got {}", HEADER.join(","), names.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.deserialize::<Row>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = out.len() as u64 + 2;
        if !(row.arrival_s.is_finite() && row.arrival_s >= 0.0) {
            return Err(parse(line, format!("arrival_s must be >= 0, got {}", row.arrival_s)));
        }
        if !(row.lifetime_s.is_finite() && row.lifetime_s > 0.0) {
            return Err(parse(line, format!("lifetime_s must be > 0, got {}", row.lifetime_s)));
        }
        if row.cores == 0 {
            return Err(parse(line, "cores must be >= 1".into()));
        }
        out.push(VmRequest {
            id: row.vm_id,
            arrival: row.arrival_s,
            lifetime: row.lifetime_s,
            cores: row.cores,
            site_hint: row.site_hint,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    out.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
    Ok(out)
}

pub fn write_vm_trace(path: &Path, trace: &[VmRequest]) -> Result<()> {
    let io = |message: String| Error::Io {
        path: path.to_path_buf(),
        message,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.to_string()))?;
    let hints = trace.iter().any(|v| v.site_hint.is_some());
    let mut header = HEADER.to_vec();
    if hints {
        header.push("site_hint");
    }
    w.write_record(&header).map_err(|e| io(e.to_string()))?;
    for v in trace {
        let mut rec = vec![
            v.id.clone(),
            format!("{}", v.arrival),
            format!("{}", v.lifetime),
            v.cores.to_string(),
        ];
        if hints {
            rec.push(v.site_hint.map(|h| h.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).map_err(|e| io(e.to_string()))?;
    }
    w.flush().map_err(|e| io(e.to_string()))
}

/// Poisson VM arrivals with exponential lifetimes and a discrete size mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTraceSpec {
    pub count: usize,
    pub arrival_rate: f64,
    pub mean_lifetime: f64,
    /// `(cores, probability)` pairs; probabilities are normalized.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<(u32, f64)>,
}

/// A size mix with mean 4.75 cores, minimum 2 and maximum 20, the published
/// statistics of a public cloud VM trace.
pub fn default_sizes() -> Vec<(u32, f64)> {
    vec![(2, 0.445), (4, 0.335), (8, 0.14), (16, 0.05), (20, 0.03)]
}

impl SyntheticTraceSpec {
    pub fn new(count: usize, arrival_rate: f64, mean_lifetime: f64) -> Self {
        Self {
            count,
            arrival_rate,
            mean_lifetime,
            sizes: default_sizes(),
        }
    }

    /// Arrival rate giving `rho` utilization of `total_cores` on average.
    pub fn for_utilization(count: usize, rho: f64, total_cores: f64, mean_lifetime: f64) -> Self {
        let mut spec = Self::new(count, 1.0, mean_lifetime);
        spec.arrival_rate = rho * total_cores / (spec.mean_cores() * mean_lifetime);
        spec
    }

    pub fn mean_cores(&self) -> f64 {
        let total: f64 = self.sizes.iter().map(|s| s.1).sum();
        self.sizes.iter().map(|&(c, p)| f64::from(c) * p).sum::<f64>() / total
    }
}

pub fn generate_synthetic_trace(spec: &SyntheticTraceSpec, stream: SeededStream) -> Result<Vec<VmRequest>> {
    require_positive("arrival_rate", spec.arrival_rate)?;
    require_positive("mean_lifetime", spec.mean_lifetime)?;
    if spec.sizes.is_empty() || spec.sizes.iter().any(|&(c, p)| c == 0 || !(p >= 0.0)) {
        return Err(invalid("sizes", "need (cores >= 1, probability >= 0) pairs"));
    }
    let total: f64 = spec.sizes.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(invalid("sizes", "probabilities sum to zero"));
    }
    let arrivals = ArrivalSpec::Poisson { rate: spec.arrival_rate }.times(stream.channel(0))?;
    let mut rng_life = stream.channel(1).rng();
    let mut rng_size = stream.channel(2).rng();
    Ok(arrivals
        .take(spec.count)
        .enumerate()
        .map(|(i, arrival)| {
            let u = rng_size.random::<f64>() * total;
            let mut acc = 0.0;
            let cores = spec
                .sizes
                .iter()
                .find(|&&(_, p)| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(spec.sizes.last().expect("non-empty"))
                .0;
            VmRequest {
                id: format!("vm{i}"),
                arrival,
                lifetime: crate::workload::exp_draw(&mut rng_life, 1.0 / spec.mean_lifetime),
                cores,
                site_hint: None,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    #[test]
    fn loads_and_sorts() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "vm_id,arrival_s,lifetime_s,cores\nb,2.0,1.0,4\na,1.0,3.0,2\nc,3.5,1.0,20").unwrap();
        let t = load_vm_trace(f.path()).unwrap();
        assert_eq!(t.iter().map(|v| v.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        let s = trace_summary(&t).unwrap();
        assert_eq!((s.min_cores, s.max_cores, s.count), (2, 20, 3));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "vm_id,arrival_s,lifetime_s,cores\na,1.0,1.0,2\nb,oops,1.0,2").unwrap();
        match load_vm_trace(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "vm_id,arrival_s,lifetime_s,cores\na,1.0,0.0,2").unwrap();
        assert!(matches!(load_vm_trace(f.path()), Err(Error::Parse { line: 2, .. })));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "id,arrival,lifetime,cores\na,1.0,1.0,2").unwrap();
        assert!(matches!(load_vm_trace(f.path()), Err(Error::Parse { line: 1, .. })));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "vm_id,arrival_s,lifetime_s,cores").unwrap();
        assert!(matches!(load_vm_trace(f.path()), Err(Error::EmptyTrace(_))));
    }

    #[test]
    fn synthetic_trace_statistics() {
        let spec = SyntheticTraceSpec::new(200_000, 100.0, 1.0);
        assert!((spec.mean_cores() - 4.75).abs() < 1e-12);
        let t = generate_synthetic_trace(&spec, SeededStream::new(1, 0)).unwrap();
        let s = trace_summary(&t).unwrap();
        assert!((s.mean_cores - 4.75).abs() < 0.05, "{}", s.mean_cores);
        assert_eq!((s.min_cores, s.max_cores), (2, 20));
        assert!((s.mean_lifetime - 1.0).abs() < 0.01);
    }

    #[test]
    fn round_trip() {
        let spec = SyntheticTraceSpec::new(50, 10.0, 2.0);
        let t = generate_synthetic_trace(&spec, SeededStream::new(2, 0)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_vm_trace(f.path(), &t).unwrap();
        assert_eq!(load_vm_trace(f.path()).unwrap(), t);
    }
}
