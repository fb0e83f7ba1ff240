//! Shared inputs for the benchmarks.

use edgeq_core::analytic::{QueueSpec, SinusoidProfile};
use edgeq_core::capacity::{generate_synthetic_trace, SyntheticTraceSpec, VmRequest};
use edgeq_core::workload::SeededStream;

pub fn edge_spec() -> QueueSpec {
    QueueSpec::new(20.0, 50.0, 50.0, 0.3).expect("stable")
}

pub fn rush_profile() -> SinusoidProfile {
    SinusoidProfile::from_period(16.0, 0.8, 200.0).expect("valid")
}

/// About 90% load on `servers` 64-core servers.
pub fn vm_trace(count: usize, servers: u32) -> Vec<VmRequest> {
    let spec = SyntheticTraceSpec::for_utilization(count, 0.9, f64::from(servers) * 64.0, 1.0);
    generate_synthetic_trace(&spec, SeededStream::new(0, 0)).expect("valid spec")
}
