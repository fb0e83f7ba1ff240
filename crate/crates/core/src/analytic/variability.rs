//! GI/G/1 and GI/G/k approximations with Allen-Cunneen style corrections.

use super::stationary::{destination_wait_unchecked, second_moment_half, source_term};
use super::{check_stable, CloudSpec, PhaseMoments, QueueSpec, VariabilitySpec};
use crate::error::{invalid, Result};

/// Utilization at and above which the high-traffic waiting probability
/// `(ρᵏ + ρ)/2` applies.
pub const HIGH_TRAFFIC_THRESHOLD: f64 = 0.7;

/// Squared coefficient of variation of `S₁ + B·S₂` with `B ~ Bernoulli(r)`:
/// `(σ₁² + rσ₂² + r(1-r)m₂²)/(m₁ + r m₂)²`.
pub fn service_scv(m: &PhaseMoments) -> Result<f64> {
    m.validate()?;
    let mean = m.mean1 + m.r * m.mean2;
    let var = m.var1 + m.r * m.var2 + m.r * (1.0 - m.r) * m.mean2 * m.mean2;
    Ok(var / (mean * mean))
}

/// Edge waiting time with general arrivals and service, scaling the Markovian
/// two-phase wait (source and destination terms) by `(c_A² + c_S²)/2`.
///
/// Source and destination sites are assumed to share the same variability.
pub fn gg1_two_phase_wait(spec: &QueueSpec, var: &VariabilitySpec) -> Result<f64> {
    spec.validate()?;
    VariabilitySpec::new(var.ca2, var.cs2)?;
    check_stable("edge", spec.utilization())?;
    check_stable("destination", spec.destination_utilization())?;
    let base = source_term(spec) + destination_wait_unchecked(spec.lambda, spec.mu1, spec.r);
    Ok(base * var.allen_cunneen_factor())
}

/// Approximate probability that an arrival to a k-server queue waits.
pub fn probability_of_wait(k: u32, rho: f64) -> f64 {
    if rho >= HIGH_TRAFFIC_THRESHOLD {
        (rho.powi(k as i32) + rho) / 2.0
    } else {
        rho.powf((f64::from(k) + 1.0) / 2.0)
    }
}

/// GI/G/k cloud wait, `P_w/(μ(1-ρ)) · (c_A² + c_S²)/(2k)`.
pub fn ggk_cloud_wait(cloud: &CloudSpec, var: &VariabilitySpec) -> Result<f64> {
    cloud.validate()?;
    VariabilitySpec::new(var.ca2, var.cs2)?;
    check_stable("cloud", cloud.rho_cloud)?;
    let rho = cloud.rho_cloud;
    let pw = probability_of_wait(cloud.k, rho);
    Ok(pw / (cloud.mu_cloud * (1.0 - rho)) * (var.ca2 + var.cs2) / (2.0 * f64::from(cloud.k)))
}

/// `Δt` threshold for GI/G/1 edge sites against a GI/G/k cloud.
pub fn delta_t_bound_ggk(
    edge: &QueueSpec,
    edge_var: &VariabilitySpec,
    cloud: &CloudSpec,
    cloud_var: &VariabilitySpec,
) -> Result<f64> {
    let w_edge = gg1_two_phase_wait(edge, edge_var)?;
    let s_mig = super::migration_service_time(edge.r, edge.mu2)?;
    let w_cloud = ggk_cloud_wait(cloud, cloud_var)?;
    Ok(w_edge + s_mig - w_cloud)
}

/// Largest arrival squared CoV for which the edge still beats the cloud:
/// `2(Δt - s_mig + w_cloud)(1 - ρ_edge) / (λ(1/μ₁² + r/μ₂² + r/(μ₁μ₂))) - c_S²`.
///
/// Negative results mean no arrival process keeps the edge competitive.
pub fn max_edge_arrival_scv(delta_t: f64, spec: &QueueSpec, s_mig: f64, w_cloud: f64, cs2: f64) -> Result<f64> {
    spec.validate()?;
    if !(delta_t.is_finite() && s_mig.is_finite() && w_cloud.is_finite()) {
        return Err(invalid("delta_t", "delta_t, s_mig and w_cloud must be finite"));
    }
    crate::error::require_non_negative("cs2", cs2)?;
    let rho = spec.utilization();
    check_stable("edge", rho)?;
    let headroom = 1.0 - rho;
    Ok(2.0 * (delta_t - s_mig + w_cloud) * headroom / (spec.lambda * second_moment_half(spec)) - cs2)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::analytic::mm1_two_phase_wait;

    fn edge(lambda: f64, r: f64) -> QueueSpec {
        QueueSpec::new(lambda, 50.0, 50.0, r).unwrap()
    }

    #[test]
    fn scv_examples() {
        assert_relative_eq!(service_scv(&PhaseMoments::exponential(3.0, 7.0, 0.0)).unwrap(), 1.0);
        assert_relative_eq!(
            service_scv(&PhaseMoments::exponential(1.0, 1.0, 0.5)).unwrap(),
            7.0 / 9.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(service_scv(&PhaseMoments::exponential(1.0, 1.0, 1.0)).unwrap(), 0.5);
    }

    #[test]
    fn gg1_markovian_and_scaling() {
        let e = edge(10.0, 0.1);
        let m = gg1_two_phase_wait(&e, &VariabilitySpec::MARKOVIAN).unwrap();
        assert_relative_eq!(m, mm1_two_phase_wait(&e).unwrap().total(), max_relative = 1e-12);
        let v = VariabilitySpec::new(3.0, 1.0).unwrap();
        assert_relative_eq!(gg1_two_phase_wait(&e, &v).unwrap(), 2.0 * m, max_relative = 1e-12);
        assert_relative_eq!(gg1_two_phase_wait(&e, &v).unwrap(), 0.013_124_02, epsilon = 1e-8);
        let plain = gg1_two_phase_wait(&edge(10.0, 0.0), &VariabilitySpec::MARKOVIAN).unwrap();
        assert_relative_eq!(plain, 10.0 / (50.0 * 40.0), max_relative = 1e-12);
    }

    #[test]
    fn ggk_examples() {
        let mk = VariabilitySpec::MARKOVIAN;
        assert_relative_eq!(
            ggk_cloud_wait(&CloudSpec::new(1, 1.0, 0.8).unwrap(), &mk).unwrap(),
            4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            ggk_cloud_wait(&CloudSpec::new(2, 1.0, 0.8).unwrap(), &mk).unwrap(),
            1.8,
            max_relative = 1e-12
        );
        let low = ggk_cloud_wait(&CloudSpec::new(4, 1.0, 0.5).unwrap(), &mk).unwrap();
        assert_relative_eq!(low, 0.5f64.powf(2.5) / 0.5 * 2.0 / 8.0, max_relative = 1e-12);
        assert_relative_eq!(low, 0.088_388_3, epsilon = 1e-7);
    }

    #[test]
    fn waiting_probability_branch_boundary() {
        assert_relative_eq!(probability_of_wait(3, 0.7), (0.7f64.powi(3) + 0.7) / 2.0);
        assert_relative_eq!(probability_of_wait(3, 0.699_999), 0.699_999f64.powf(2.0));
    }

    #[test]
    fn ggk_bound_examples() {
        let mk = VariabilitySpec::MARKOVIAN;
        let e = QueueSpec::new(0.8, 1.0, 1.0, 0.0).unwrap();
        let c = CloudSpec::new(1, 1.0, 0.8).unwrap();
        assert_relative_eq!(delta_t_bound_ggk(&e, &mk, &c, &mk).unwrap(), 0.0, epsilon = 1e-12);

        let e = edge(10.0, 0.1);
        let c = CloudSpec::new(2, 1.0, 0.8).unwrap();
        let b = delta_t_bound_ggk(&e, &mk, &c, &mk).unwrap();
        assert_relative_eq!(b, -1.791_437_99, epsilon = 5e-9);

        let bursty = VariabilitySpec::new(3.0, 1.0).unwrap();
        let b2 = delta_t_bound_ggk(&e, &bursty, &c, &mk).unwrap();
        let w = mm1_two_phase_wait(&e).unwrap().total();
        assert_relative_eq!(b2 - b, w, max_relative = 1e-9);
    }

    #[test]
    fn max_scv_examples() {
        let e = edge(10.0, 0.1);
        assert_relative_eq!(
            max_edge_arrival_scv(0.027, &e, 0.002, 0.001, 1.0).unwrap(),
            7.45,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            max_edge_arrival_scv(0.001, &e, 0.002, 0.001, 1.0).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        let hot = QueueSpec::new(49.999, 50.0, 50.0, 0.0).unwrap();
        let v = max_edge_arrival_scv(0.027, &hot, 0.0, 0.0, 1.0).unwrap();
        assert!((v + 1.0).abs() < 1e-3);
    }
}
