//! Closed-form latency and capacity models for edge and centralized clouds.
//!
//! Every function here is pure. Rates are per second, times in seconds,
//! angles in radians. Inputs whose utilization reaches `1 - STABILITY_GUARD`
//! are rejected rather than clamped.

mod fluid;
mod sinusoid;
mod stationary;
mod variability;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, require_probability, Result};

pub use fluid::{fluid_backlog, overload_window, rush_hour_wait, OverloadWindow, RushHour};
pub use sinusoid::{
    aggregate_cloud_profile, effective_service_rate, excess_wait_sinusoidal, peak_provisioned_utilization, psa_cloud_wait,
    response_lag, sinusoidal_offered_load, sinusoidal_wait_profile, AggregateProfile,
};
pub use stationary::{
    delta_t_bound_mmk, delta_t_bound_mmk_using, destination_wait, empirical_rule_capacities, erlang_c_probability,
    migration_service_time, mm1_two_phase_wait, mmk_exact_conditional_wait, mmk_exact_wait, mmk_qed_wait, CloudWaitForm,
    EdgeWait,
};
pub use variability::{
    delta_t_bound_ggk, gg1_two_phase_wait, ggk_cloud_wait, max_edge_arrival_scv, probability_of_wait, service_scv,
    HIGH_TRAFFIC_THRESHOLD,
};

/// Utilizations at or above `1 - STABILITY_GUARD` count as unstable.
pub const STABILITY_GUARD: f64 = 1e-9;

pub(crate) fn check_stable(what: &'static str, utilization: f64) -> Result<()> {
    if utilization.is_finite() && utilization < 1.0 - STABILITY_GUARD {
        Ok(())
    } else {
        Err(crate::Error::UnstableQueue { what, utilization })
    }
}

/// An edge site: a single server whose requests need a first service phase
/// and, with probability `r`, a second migration phase.
///
/// `mu2` may be `f64::INFINITY`, meaning migration takes no time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSpec {
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub r: f64,
}

impl QueueSpec {
    pub fn new(lambda: f64, mu1: f64, mu2: f64, r: f64) -> Result<Self> {
        let spec = Self { lambda, mu1, mu2, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("lambda", self.lambda)?;
        require_positive("mu1", self.mu1)?;
        if !(self.mu2 > 0.0) || self.mu2.is_nan() {
            return Err(invalid("mu2", format!("must be > 0 or infinite, got {}", self.mu2)));
        }
        require_probability("r", self.r)?;
        Ok(())
    }

    /// Busy fraction of the source server, `λ/μ₁ + rλ/μ₂`.
    pub fn utilization(&self) -> f64 {
        self.lambda / self.mu1 + self.r * self.lambda / self.mu2
    }

    /// Load offered to the destination site by migrated requests, `rλ/μ₁`.
    pub fn destination_utilization(&self) -> f64 {
        self.r * self.lambda / self.mu1
    }

    /// Mean total service demand `1/μ₁ + r/μ₂`.
    pub fn mean_service(&self) -> f64 {
        1.0 / self.mu1 + self.r / self.mu2
    }
}

/// A centralized cloud of `k` identical servers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    pub k: u32,
    pub mu_cloud: f64,
    pub rho_cloud: f64,
}

impl CloudSpec {
    pub fn new(k: u32, mu_cloud: f64, rho_cloud: f64) -> Result<Self> {
        let spec = Self { k, mu_cloud, rho_cloud };
        spec.validate()?;
        Ok(spec)
    }

    /// A cloud sized to carry `lambda_total` requests per second.
    pub fn for_load(k: u32, mu_cloud: f64, lambda_total: f64) -> Result<Self> {
        require_non_negative("lambda_total", lambda_total)?;
        Self::new(k, mu_cloud, lambda_total / (f64::from(k) * mu_cloud))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "a cloud needs at least one server"));
        }
        require_positive("mu_cloud", self.mu_cloud)?;
        if !(0.0..1.0).contains(&self.rho_cloud) {
            return Err(invalid("rho_cloud", format!("must lie in [0, 1), got {}", self.rho_cloud)));
        }
        Ok(())
    }

    /// Total arrival rate implied by the utilization, `ρ k μ`.
    pub fn lambda_total(&self) -> f64 {
        self.rho_cloud * f64::from(self.k) * self.mu_cloud
    }
}

/// Network round-trip times to the edge and to the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub t_edge: f64,
    pub t_cloud: f64,
}

impl NetworkSpec {
    pub fn new(t_edge: f64, t_cloud: f64) -> Result<Self> {
        require_non_negative("t_edge", t_edge)?;
        require_non_negative("t_cloud", t_cloud)?;
        Ok(Self { t_edge, t_cloud })
    }

    /// RTT advantage of the edge, `t_cloud - t_edge`.
    pub fn delta_t(&self) -> f64 {
        self.t_cloud - self.t_edge
    }

    /// Whether the edge responds faster given a bound from one of the
    /// `delta_t_bound_*` functions.
    pub fn edge_wins(&self, bound: f64) -> bool {
        self.delta_t() > bound
    }
}

/// Squared coefficients of variation of the inter-arrival and service times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariabilitySpec {
    pub ca2: f64,
    pub cs2: f64,
}

impl VariabilitySpec {
    pub const MARKOVIAN: Self = Self { ca2: 1.0, cs2: 1.0 };

    pub fn new(ca2: f64, cs2: f64) -> Result<Self> {
        require_non_negative("ca2", ca2)?;
        require_non_negative("cs2", cs2)?;
        Ok(Self { ca2, cs2 })
    }

    /// The Allen-Cunneen factor `(c_A² + c_S²)/2`.
    pub fn allen_cunneen_factor(&self) -> f64 {
        (self.ca2 + self.cs2) / 2.0
    }
}

impl Default for VariabilitySpec {
    fn default() -> Self {
        Self::MARKOVIAN
    }
}

/// First two moments of each service phase plus the migration probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMoments {
    pub mean1: f64,
    pub var1: f64,
    pub mean2: f64,
    pub var2: f64,
    pub r: f64,
}

impl PhaseMoments {
    /// Both phases exponential with the given rates.
    pub fn exponential(mu1: f64, mu2: f64, r: f64) -> Self {
        Self {
            mean1: 1.0 / mu1,
            var1: 1.0 / (mu1 * mu1),
            mean2: 1.0 / mu2,
            var2: 1.0 / (mu2 * mu2),
            r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("mean1", self.mean1)?;
        require_positive("mean2", self.mean2)?;
        require_non_negative("var1", self.var1)?;
        require_non_negative("var2", self.var2)?;
        require_probability("r", self.r)?;
        Ok(())
    }
}

/// Sinusoidal arrival rate `λ(t) = λ̄ (1 + A sin(γt + φ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidProfile {
    pub lambda_bar: f64,
    pub amplitude: f64,
    pub gamma: f64,
    #[serde(default)]
    pub phase: f64,
}

impl SinusoidProfile {
    pub fn new(lambda_bar: f64, amplitude: f64, gamma: f64) -> Result<Self> {
        Self::with_phase(lambda_bar, amplitude, gamma, 0.0)
    }

    pub fn with_phase(lambda_bar: f64, amplitude: f64, gamma: f64, phase: f64) -> Result<Self> {
        let p = Self {
            lambda_bar,
            amplitude,
            gamma,
            phase,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds a profile from a cycle length instead of an angular frequency.
    pub fn from_period(lambda_bar: f64, amplitude: f64, period: f64) -> Result<Self> {
        require_positive("period", period)?;
        Self::new(lambda_bar, amplitude, std::f64::consts::TAU / period)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("lambda_bar", self.lambda_bar)?;
        require_probability("amplitude", self.amplitude)?;
        require_positive("gamma", self.gamma)?;
        if !self.phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        Ok(())
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.lambda_bar * (1.0 + self.amplitude * (self.gamma * t + self.phase).sin())
    }

    pub fn peak_rate(&self) -> f64 {
        self.lambda_bar * (1.0 + self.amplitude)
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.gamma
    }

    /// Expected number of arrivals in `[0, t]`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let a = self.lambda_bar * self.amplitude / self.gamma;
        self.lambda_bar * t + a * (self.phase.cos() - (self.gamma * t + self.phase).cos())
    }

    /// The same profile with every rate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda_bar: self.lambda_bar * c,
            ..*self
        }
    }
}

/// Parameters of the dynamic traveling repairman capacity model.
///
/// `area` and `gos` are the service-region area and grade-of-service
/// constant; they are unrelated to a sinusoid's amplitude and frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtrpSpec {
    pub capacity: f64,
    pub rho: f64,
    pub tau: f64,
    pub q: f64,
    pub area: f64,
    pub velocity: f64,
    pub gos: f64,
}

impl DtrpSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("capacity", self.capacity)?;
        require_non_negative("rho", self.rho)?;
        require_non_negative("tau", self.tau)?;
        if !(self.q > 0.0) {
            return Err(invalid("q", format!("must be > 0 (may be infinite), got {}", self.q)));
        }
        require_positive("area", self.area)?;
        require_positive("velocity", self.velocity)?;
        require_positive("gos", self.gos)?;
        let load = self.rho + self.tau / self.capacity;
        if !(load > 0.0 && load < 1.0) {
            return Err(crate::Error::Domain(format!("rho + tau/C must lie in (0, 1), got {load}")));
        }
        Ok(())
    }
}
