//! Capacity equivalence between edge sites and a pooled cloud, and a
//! trace-driven VM packing simulator to check it.

mod packing;
mod trace;

use serde::{Deserialize, Serialize};

use crate::analytic::DtrpSpec;
use crate::error::{Error, Result};

pub use packing::{
    edge_size_sweep, simulate_packing, PackingReport, Policy, SiteAssign, SweepReport, SweepRow, Topology, TopologyMode,
};
pub use trace::{
    generate_synthetic_trace, load_vm_trace, trace_summary, write_vm_trace, SyntheticTraceSpec, TraceSummary, VmRequest,
};

/// Extra edge capacity needed to match a cloud at equal utilization, `1 + 1/q`.
pub fn edge_overprovision_factor(q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("packing factor q must be > 0, got {q}")));
    }
    Ok(1.0 + 1.0 / q)
}

/// Cloud capacity equivalent to an edge site of capacity `c_edge`,
/// `C_edge(1 - ρ_edge - τ/C_edge)/((1 + 1/q)(1 - ρ_cloud))`.
pub fn cloud_capacity_equivalent(c_edge: f64, rho_edge: f64, tau_edge: f64, q: f64, rho_cloud: f64) -> Result<f64> {
    if !(c_edge > 0.0 && c_edge.is_finite()) {
        return Err(Error::Domain(format!("edge capacity must be finite and > 0, got {c_edge}")));
    }
    if !(rho_edge >= 0.0 && tau_edge >= 0.0) {
        return Err(Error::Domain("edge utilization and tau must be >= 0".into()));
    }
    let edge_load = rho_edge + tau_edge / c_edge;
    if !(edge_load > 0.0 && edge_load < 1.0) {
        return Err(Error::Domain(format!(
            "rho_edge + tau/C_edge must lie in (0, 1), got {edge_load}"
        )));
    }
    if !(0.0..1.0).contains(&rho_cloud) {
        return Err(Error::Domain(format!("rho_cloud must lie in [0, 1), got {rho_cloud}")));
    }
    let factor = edge_overprovision_factor(q)?;
    Ok(c_edge * (1.0 - edge_load) / (factor * (1.0 - rho_cloud)))
}

/// Which terms of the repairman response time apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtrpMode {
    Edge,
    /// A large pool: the `1/q` and `τ/C` terms vanish.
    Cloud,
}

/// Response time of the dynamic traveling repairman model, up to the common
/// proportionality constant:
/// `gos² λ area (1 + 1/q)² / (C² v² (1 - ρ - τ/C)²)`.
pub fn dtrp_response_time(spec: &DtrpSpec, lambda: f64, mode: DtrpMode) -> Result<f64> {
    spec.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let (factor, slack) = match mode {
        DtrpMode::Edge => (edge_overprovision_factor(spec.q)?, 1.0 - spec.rho - spec.tau / spec.capacity),
        DtrpMode::Cloud => (1.0, 1.0 - spec.rho),
    };
    if !(slack > 0.0) {
        return Err(Error::Domain(format!("1 - rho - tau/C must be > 0, got {slack}")));
    }
    let c = spec.capacity * spec.velocity * slack;
    Ok(spec.gos * spec.gos * lambda * spec.area * factor * factor / (c * c))
}
