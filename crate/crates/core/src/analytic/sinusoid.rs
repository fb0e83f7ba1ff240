//! Sinusoidal arrivals: offered load, waiting-time profile, excess wait,
//! pointwise-stationary cloud wait and aggregation across phase-shifted sites.

use super::{check_stable, CloudSpec, SinusoidProfile};
use crate::error::{invalid, require_positive, require_probability, Error, Result};

/// `μ_eff = (1/μ₁ + r/μ₂)⁻¹ = μ₁μ₂/(μ₂ + rμ₁)`.
pub fn effective_service_rate(mu1: f64, mu2: f64, r: f64) -> Result<f64> {
    require_positive("mu1", mu1)?;
    if !(mu2 > 0.0) {
        return Err(invalid("mu2", format!("must be > 0 or infinite, got {mu2}")));
    }
    require_probability("r", r)?;
    Ok(1.0 / (1.0 / mu1 + r / mu2))
}

/// Mean occupancy of the infinite-server queue fed by `profile`,
/// `m(t) = (λ̄/μ)[1 + A/(1+β²) (sin(γt+φ) - β cos(γt+φ))]` with `β = γ/μ`.
pub fn sinusoidal_offered_load(t: f64, profile: &SinusoidProfile, mu_eff: f64) -> Result<f64> {
    profile.validate()?;
    require_positive("mu_eff", mu_eff)?;
    let beta = profile.gamma / mu_eff;
    let x = profile.gamma * t + profile.phase;
    let c = profile.amplitude / (1.0 + beta * beta);
    Ok(profile.lambda_bar / mu_eff * (1.0 + c * (x.sin() - beta * x.cos())))
}

/// Delay of the occupancy `m(t)` behind the arrival rate, `atan(γ/μ)/γ`.
///
/// With `μ = 1` this is `cot⁻¹(1/γ)/γ`.
pub fn response_lag(gamma: f64, mu_eff: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("mu_eff", mu_eff)?;
    Ok((gamma / mu_eff).atan() / gamma)
}

/// `w(t) = m(t)/(μ_eff(1 - m(t)))`, treating `m(t)` as instantaneous utilization.
pub fn sinusoidal_wait_profile(t: f64, profile: &SinusoidProfile, mu_eff: f64) -> Result<f64> {
    let m = sinusoidal_offered_load(t, profile, mu_eff)?;
    if m >= 1.0 - super::STABILITY_GUARD {
        return Err(Error::OverloadedInstant { t, load: m });
    }
    Ok(m / (mu_eff * (1.0 - m)))
}

/// Second-order excess wait caused by sinusoidal modulation,
/// `ρ²A²/(2μ(1-ρ)³(1 + (γ/μ)²))`.
///
/// Higher-order terms are dropped, so this underestimates the true excess.
pub fn excess_wait_sinusoidal(rho: f64, amplitude: f64, gamma: f64, mu_eff: f64) -> Result<f64> {
    crate::error::require_non_negative("rho", rho)?;
    require_probability("amplitude", amplitude)?;
    crate::error::require_non_negative("gamma", gamma)?;
    require_positive("mu_eff", mu_eff)?;
    check_stable("edge", rho)?;
    let beta = gamma / mu_eff;
    let headroom = 1.0 - rho;
    Ok(rho * rho * amplitude * amplitude / (2.0 * mu_eff * headroom.powi(3) * (1.0 + beta * beta)))
}

/// Pointwise-stationary cloud wait `1/(√k μ (1 - ρ(t)))` at one instant.
///
/// `cloud.rho_cloud` is ignored in favor of `rho_t`. The result overestimates
/// the time-averaged delay.
pub fn psa_cloud_wait(rho_t: f64, cloud: &CloudSpec) -> Result<f64> {
    if cloud.k == 0 {
        return Err(invalid("k", "a cloud needs at least one server"));
    }
    require_positive("mu_cloud", cloud.mu_cloud)?;
    crate::error::require_non_negative("rho_t", rho_t)?;
    if rho_t >= 1.0 - super::STABILITY_GUARD {
        return Err(Error::OverloadedInstant {
            t: f64::NAN,
            load: rho_t,
        });
    }
    Ok(1.0 / (f64::from(cloud.k).sqrt() * cloud.mu_cloud * (1.0 - rho_t)))
}

/// Mean utilization of a server provisioned for the peak of a sinusoid with
/// relative amplitude `A`, i.e. `1/(1 + A)`; at most one half when `A = 1`.
pub fn peak_provisioned_utilization(amplitude: f64) -> Result<f64> {
    require_probability("amplitude", amplitude)?;
    Ok(1.0 / (1.0 + amplitude))
}

/// Sum of the arrival rates of several edge sites, as seen by the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateProfile {
    sites: Vec<SinusoidProfile>,
}

/// Builds the aggregate cloud arrival profile from per-site sinusoids.
pub fn aggregate_cloud_profile(sites: &[SinusoidProfile]) -> Result<AggregateProfile> {
    if sites.is_empty() {
        return Err(invalid("sites", "need at least one site"));
    }
    for s in sites {
        s.validate()?;
    }
    Ok(AggregateProfile { sites: sites.to_vec() })
}

impl AggregateProfile {
    pub fn sites(&self) -> &[SinusoidProfile] {
        &self.sites
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.sites.iter().map(|s| s.rate(t)).sum()
    }

    pub fn mean_rate(&self) -> f64 {
        self.sites.iter().map(|s| s.lambda_bar).sum()
    }

    /// Samples the aggregate rate at `n` evenly spaced points in `[0, horizon)`.
    pub fn sample(&self, horizon: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = horizon * i as f64 / n as f64;
                (t, self.rate(t))
            })
            .collect()
    }

    /// The shared angular frequency, or an error naming the first mismatch.
    pub fn common_gamma(&self) -> Result<f64> {
        let first = self.sites[0].gamma;
        match self.sites.iter().find(|s| s.gamma != first) {
            Some(other) => Err(Error::IncompatiblePeriods {
                first,
                other: other.gamma,
            }),
            None => Ok(first),
        }
    }

    /// Empirical relative amplitude `(max - mean)/mean` over one common period,
    /// sampled at `samples` points.
    pub fn relative_amplitude(&self, samples: usize) -> Result<f64> {
        let gamma = self.common_gamma()?;
        Ok(self.relative_amplitude_over(std::f64::consts::TAU / gamma, samples))
    }

    /// `(max - mean)/mean` of the aggregate sampled over an explicit horizon,
    /// for sites without a common period.
    pub fn relative_amplitude_over(&self, horizon: f64, samples: usize) -> f64 {
        let mean = self.mean_rate();
        let max = self
            .sample(horizon, samples.max(1))
            .into_iter()
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        (max - mean) / mean
    }

    /// Exact relative amplitude for a common frequency: the modulus of the
    /// summed phasors `λ̄ᵢAᵢe^{iφᵢ}` divided by the summed means.
    pub fn phasor_amplitude(&self) -> Result<f64> {
        self.common_gamma()?;
        let (re, im) = self.sites.iter().fold((0.0, 0.0), |(re, im), s| {
            let w = s.lambda_bar * s.amplitude;
            (re + w * s.phase.cos(), im + w * s.phase.sin())
        });
        Ok(re.hypot(im) / self.mean_rate())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn effective_rate_examples() {
        assert_relative_eq!(effective_service_rate(50.0, 50.0, 0.0).unwrap(), 50.0);
        assert_relative_eq!(
            effective_service_rate(50.0, 50.0, 0.1).unwrap(),
            500.0 / 11.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(effective_service_rate(32.0, 32.0, 1.0).unwrap(), 16.0, max_relative = 1e-12);
        assert_relative_eq!(
            effective_service_rate(32.0, 32.0, 1.0 / 3.0).unwrap(),
            24.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn offered_load_examples() {
        let flat = SinusoidProfile::new(80.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(sinusoidal_offered_load(3.7, &flat, 100.0).unwrap(), 0.8);

        let p = SinusoidProfile::new(80.0, 0.5, TAU / 100.0).unwrap();
        let beta = TAU / 100.0 / 100.0;
        let expected = 0.8 * (1.0 - 0.5 * beta / (1.0 + beta * beta));
        let m0 = sinusoidal_offered_load(0.0, &p, 100.0).unwrap();
        assert_relative_eq!(m0, expected, max_relative = 1e-14);
        assert_relative_eq!(m0, 0.799_749, epsilon = 5e-7);

        // Slow modulation: m(t) tracks rho(1 + A sin γt).
        let slow = SinusoidProfile::new(80.0, 0.5, 1e-9).unwrap();
        let t = 0.3 / 1e-9;
        assert_relative_eq!(
            sinusoidal_offered_load(t, &slow, 100.0).unwrap(),
            0.8 * (1.0 + 0.5 * 0.3f64.sin()),
            max_relative = 1e-8
        );
    }

    #[test]
    fn lag_matches_phase_of_offered_load() {
        let mu = 20.0;
        let p = SinusoidProfile::new(10.0, 0.7, TAU / 5.0).unwrap();
        let lag = response_lag(p.gamma, mu).unwrap();
        // The peak of m(t) sits a quarter period plus the lag into the cycle.
        let t_peak = p.period() / 4.0 + lag;
        let m = |t| sinusoidal_offered_load(t, &p, mu).unwrap();
        assert!(m(t_peak) > m(t_peak - 1e-3) && m(t_peak) > m(t_peak + 1e-3));
        assert_relative_eq!(response_lag(1.0, 1.0).unwrap(), PI / 4.0);
    }

    #[test]
    fn wait_profile() {
        let flat = SinusoidProfile::new(10.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(sinusoidal_wait_profile(0.0, &flat, 20.0).unwrap(), 0.05);
        let hot = SinusoidProfile::new(19.0, 1.0, 1e-6).unwrap();
        assert!(matches!(
            sinusoidal_wait_profile(PI / 2.0 / 1e-6, &hot, 20.0),
            Err(Error::OverloadedInstant { .. })
        ));
    }

    /// Peak of `w(t)` for λ̄ = 10, μ = 20, A = 0.7, γ = 2π/100, located by a
    /// dense grid scan refined with golden-section search, checked against
    /// the closed-form peak of m(t), and frozen here.
    #[test]
    fn wait_profile_peak_regression() {
        let p = SinusoidProfile::new(10.0, 0.7, TAU / 100.0).unwrap();
        let w = |t: f64| sinusoidal_wait_profile(t, &p, 20.0).unwrap();
        let (mut best_t, mut best) = (0.0, f64::MIN);
        for i in 0..100_000 {
            let t = 100.0 * i as f64 / 100_000.0;
            if w(t) > best {
                best = w(t);
                best_t = t;
            }
        }
        let (mut a, mut b) = (best_t - 0.01, best_t + 0.01);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if w(c) > w(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let peak = w((a + b) / 2.0);
        let beta: f64 = p.gamma / 20.0;
        let m_max = 0.5 * (1.0 + 0.7 / (1.0 + beta * beta).sqrt());
        assert_relative_eq!(peak, m_max / (20.0 * (1.0 - m_max)), max_relative = 1e-9);
        assert_relative_eq!(peak, 0.283_329_495_2, max_relative = 1e-9);
    }

    #[test]
    fn excess_wait_examples() {
        assert_eq!(excess_wait_sinusoidal(0.8, 0.0, 0.1, 100.0).unwrap(), 0.0);
        assert_relative_eq!(
            excess_wait_sinusoidal(0.8, 0.5, 0.0, 100.0).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        let a = excess_wait_sinusoidal(0.8, 0.2, 0.3, 100.0).unwrap();
        let b = excess_wait_sinusoidal(0.8, 0.4, 0.3, 100.0).unwrap();
        assert_relative_eq!(b / a, 4.0, max_relative = 1e-12);
        assert!(excess_wait_sinusoidal(1.0, 0.2, 0.3, 100.0).is_err());
    }

    #[test]
    fn psa_examples() {
        assert_relative_eq!(psa_cloud_wait(0.5, &CloudSpec::new(1, 1.0, 0.0).unwrap()).unwrap(), 2.0);
        assert_relative_eq!(
            psa_cloud_wait(0.8, &CloudSpec::new(16, 50.0, 0.0).unwrap()).unwrap(),
            0.025,
            max_relative = 1e-12
        );
        assert!(psa_cloud_wait(1.0, &CloudSpec::new(16, 50.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn aggregation() {
        let base = SinusoidProfile::new(5.0, 0.6, 0.2).unwrap();
        let same = aggregate_cloud_profile(&[base; 8]).unwrap();
        assert_relative_eq!(same.mean_rate(), 40.0);
        assert_relative_eq!(same.relative_amplitude(10_000).unwrap(), 0.6, max_relative = 1e-6);
        assert_relative_eq!(same.phasor_amplitude().unwrap(), 0.6, max_relative = 1e-12);

        let anti = SinusoidProfile::with_phase(5.0, 0.6, 0.2, PI).unwrap();
        let pair = aggregate_cloud_profile(&[base, anti]).unwrap();
        for i in 0..50 {
            assert_relative_eq!(pair.rate(i as f64 * 0.37), 10.0, max_relative = 1e-12);
        }
        assert!(pair.relative_amplitude(1000).unwrap().abs() < 1e-12);

        let other = SinusoidProfile::new(5.0, 0.6, 0.3).unwrap();
        let mixed = aggregate_cloud_profile(&[base, other]).unwrap();
        assert!(matches!(
            mixed.relative_amplitude(100),
            Err(Error::IncompatiblePeriods { .. })
        ));
        assert!(mixed.relative_amplitude_over(200.0, 10_000) > 0.0);
        assert!(aggregate_cloud_profile(&[]).is_err());
    }

    #[test]
    fn peak_provisioning() {
        assert_relative_eq!(peak_provisioned_utilization(1.0).unwrap(), 0.5);
        assert!(peak_provisioned_utilization(0.3).unwrap() > 0.5);
    }
}
