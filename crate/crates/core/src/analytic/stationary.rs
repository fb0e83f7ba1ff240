//! Stationary M/M/1-with-migration and M/M/k waiting times.

use serde::{Deserialize, Serialize};

use super::{check_stable, CloudSpec, QueueSpec};
use crate::error::{invalid, require_positive, require_probability, Result};

/// Mean waiting time at an edge site split into its two contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWait {
    /// Wait at the source server, which also performs the migration phase.
    pub source: f64,
    /// Wait at the destination site, averaged over all requests.
    pub destination: f64,
}

impl EdgeWait {
    pub fn total(&self) -> f64 {
        self.source + self.destination
    }
}

/// Which cloud waiting time to subtract in [`delta_t_bound_mmk_using`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudWaitForm {
    /// Heavy-traffic conditional wait `1/(μ(1-ρ)√k)`.
    #[default]
    QedConditional,
    /// Exact unconditional Erlang-C wait.
    ErlangC,
}

/// Source-queue term: `λ(1/μ₁² + r/μ₂² + r/(μ₁μ₂)) / (1 - λ/μ₁ - rλ/μ₂)`.
///
/// This is the same quantity as `λ(μ₂² + rμ₁² + rμ₁μ₂)/(μ₁μ₂(μ₁μ₂ - λμ₂ - rλμ₁))`
/// written so that an infinite `μ₂` evaluates to its limit.
pub(crate) fn source_term(spec: &QueueSpec) -> f64 {
    let QueueSpec { lambda, mu1, mu2, r } = *spec;
    lambda * second_moment_half(spec) / (1.0 - lambda / mu1 - r * lambda / mu2)
}

/// `E[S²]/2` for the two-phase service: `1/μ₁² + r/μ₂² + r/(μ₁μ₂)`.
pub(crate) fn second_moment_half(spec: &QueueSpec) -> f64 {
    let QueueSpec { mu1, mu2, r, .. } = *spec;
    1.0 / (mu1 * mu1) + r / (mu2 * mu2) + r / (mu1 * mu2)
}

/// Mean wait at an edge site with optional migration phase, including the
/// queueing incurred at the destination site by migrated requests.
///
/// The destination term uses `μ₁` as the destination service rate.
pub fn mm1_two_phase_wait(spec: &QueueSpec) -> Result<EdgeWait> {
    spec.validate()?;
    check_stable("edge", spec.utilization())?;
    let destination = destination_wait(spec.lambda, spec.mu1, spec.r)?;
    Ok(EdgeWait {
        source: source_term(spec),
        destination,
    })
}

/// `rλ/(μ₁(μ₁ - rλ))`, equivalently `rρ_d/(μ₁(1-ρ_d))` with `ρ_d = rλ/μ₁`.
pub fn destination_wait(lambda: f64, mu1: f64, r: f64) -> Result<f64> {
    require_positive("lambda", lambda)?;
    require_positive("mu1", mu1)?;
    require_probability("r", r)?;
    check_stable("destination", r * lambda / mu1)?;
    Ok(destination_wait_unchecked(lambda, mu1, r))
}

pub(crate) fn destination_wait_unchecked(lambda: f64, mu1: f64, r: f64) -> f64 {
    let rho_dest = r * lambda / mu1;
    rho_dest / (mu1 * (1.0 - rho_dest))
}

/// Migration service time averaged over all requests, `r/μ₂`.
pub fn migration_service_time(r: f64, mu2: f64) -> Result<f64> {
    require_probability("r", r)?;
    if !(mu2 > 0.0) {
        return Err(invalid("mu2", format!("must be > 0 or infinite, got {mu2}")));
    }
    Ok(r / mu2)
}

/// Conditional wait of delayed requests in a large M/M/k cloud,
/// `1/(μ(1-ρ)√k)`.
///
/// Conditioning on a positive wait makes this an upper bound on the
/// unconditional wait, so a bound built from it favors the cloud.
pub fn mmk_qed_wait(cloud: &CloudSpec) -> Result<f64> {
    cloud.validate()?;
    check_stable("cloud", cloud.rho_cloud)?;
    Ok(1.0 / (cloud.mu_cloud * (1.0 - cloud.rho_cloud) * f64::from(cloud.k).sqrt()))
}

/// Erlang-C probability that an arrival waits in an M/M/k queue with offered
/// load `a = λ/μ` (in servers).
pub fn erlang_c_probability(k: u32, offered: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "a cloud needs at least one server"));
    }
    let kf = f64::from(k);
    check_stable("cloud", offered / kf)?;
    if offered <= 0.0 {
        return Ok(0.0);
    }
    // Erlang-B recursion, then convert.
    let mut b = 1.0;
    for n in 1..=k {
        b = offered * b / (f64::from(n) + offered * b);
    }
    Ok(kf * b / (kf - offered * (1.0 - b)))
}

/// Exact mean wait of an M/M/k queue, `C(k, a)/(kμ(1-ρ))`.
pub fn mmk_exact_wait(cloud: &CloudSpec) -> Result<f64> {
    cloud.validate()?;
    let kf = f64::from(cloud.k);
    let c = erlang_c_probability(cloud.k, cloud.rho_cloud * kf)?;
    Ok(c / (kf * cloud.mu_cloud * (1.0 - cloud.rho_cloud)))
}

/// Exact mean wait of delayed requests in an M/M/k queue, `1/(kμ(1-ρ))`.
pub fn mmk_exact_conditional_wait(cloud: &CloudSpec) -> Result<f64> {
    cloud.validate()?;
    check_stable("cloud", cloud.rho_cloud)?;
    Ok(1.0 / (f64::from(cloud.k) * cloud.mu_cloud * (1.0 - cloud.rho_cloud)))
}

/// Threshold on `Δt = t_cloud - t_edge` above which the edge responds faster:
/// `w_edge + s_migration - w_cloud` with the heavy-traffic cloud wait.
pub fn delta_t_bound_mmk(edge: &QueueSpec, cloud: &CloudSpec) -> Result<f64> {
    delta_t_bound_mmk_using(edge, cloud, CloudWaitForm::QedConditional)
}

/// [`delta_t_bound_mmk`] with a selectable cloud waiting-time form.
pub fn delta_t_bound_mmk_using(edge: &QueueSpec, cloud: &CloudSpec, form: CloudWaitForm) -> Result<f64> {
    let w_edge = mm1_two_phase_wait(edge)?.total();
    let s_mig = migration_service_time(edge.r, edge.mu2)?;
    let w_cloud = match form {
        CloudWaitForm::QedConditional => mmk_qed_wait(cloud)?,
        CloudWaitForm::ErlangC => mmk_exact_wait(cloud)?,
    };
    Ok(w_edge + s_mig - w_cloud)
}

/// Peak capacities from the two-sigma rule for `k` sites each receiving
/// Poisson demand with mean `lambda_site`: `(k(λ + 2√λ), kλ + 2√(kλ))`.
pub fn empirical_rule_capacities(lambda_site: f64, k: u32) -> Result<(f64, f64)> {
    require_positive("lambda_site", lambda_site)?;
    if k == 0 {
        return Err(invalid("k", "need at least one site"));
    }
    let kf = f64::from(k);
    let c_edge = kf * (lambda_site + 2.0 * lambda_site.sqrt());
    let total = kf * lambda_site;
    let c_cloud = total + 2.0 * total.sqrt();
    Ok((c_edge, c_cloud))
}
