//! Deterministic fluid view of a sinusoidal overload ("rush hour").

use serde::{Deserialize, Serialize};

use super::SinusoidProfile;
use crate::error::{require_positive, Error, Result};

/// The interval of a cycle during which arrivals outpace service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverloadWindow {
    pub t1: f64,
    pub t2: f64,
    pub theta: f64,
}

impl OverloadWindow {
    pub fn duration(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Backlog accumulated over one overload window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RushHour {
    pub window: OverloadWindow,
    /// `(1/γ)[(λ̄ - μ)(π - 2θ) + 2λ̄A cos θ]`, the integral of `λ(t) - μ` over the window.
    pub net_input: f64,
    /// `max(net_input, 0)`.
    pub backlog: f64,
}

/// Overload window with `θ = arcsin(μ_eff/λ̄ - 1)`, `t₁ = θ/γ`, `t₂ = (π - θ)/γ`.
///
/// Returns `None` when the peak rate does not exceed `mu_eff` (a tangent
/// peak counts as no overload). For a nonzero phase both endpoints are
/// shifted by `-φ/γ` and reduced into `[0, T)`, so `t2` may precede `t1`.
/// Arguments in `[-1, 0)` (service slower than the mean rate) are accepted
/// by analytic extension.
pub fn overload_window(profile: &SinusoidProfile, mu_eff: f64) -> Result<Option<OverloadWindow>> {
    profile.validate()?;
    require_positive("mu_eff", mu_eff)?;
    if profile.peak_rate() <= mu_eff {
        return Ok(None);
    }
    let arg = mu_eff / profile.lambda_bar - 1.0;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!("arcsin argument {arg} outside [-1, 1]")));
    }
    let theta = arg.asin();
    let g = profile.gamma;
    let (mut t1, mut t2) = (theta / g, (std::f64::consts::PI - theta) / g);
    if profile.phase != 0.0 {
        let period = profile.period();
        let shift = -profile.phase / g;
        t1 = (t1 + shift).rem_euclid(period);
        t2 = (t2 + shift).rem_euclid(period);
    }
    Ok(Some(OverloadWindow { t1, t2, theta }))
}

/// Fluid backlog built up during the overload window.
///
/// Fails with [`Error::NoOverload`] when the profile never exceeds `mu_eff`.
pub fn fluid_backlog(profile: &SinusoidProfile, mu_eff: f64) -> Result<RushHour> {
    let window = overload_window(profile, mu_eff)?.ok_or(Error::NoOverload {
        peak: profile.peak_rate(),
        mu_eff,
    })?;
    let theta = window.theta;
    let net_input = ((profile.lambda_bar - mu_eff) * (std::f64::consts::PI - 2.0 * theta)
        + 2.0 * profile.lambda_bar * profile.amplitude * theta.cos())
        / profile.gamma;
    Ok(RushHour {
        window,
        net_input,
        backlog: net_input.max(0.0),
    })
}

/// Mean rush-hour wait `backlog/μ_eff`; zero when there is no overload.
pub fn rush_hour_wait(profile: &SinusoidProfile, mu_eff: f64) -> Result<f64> {
    match fluid_backlog(profile, mu_eff) {
        Ok(rush) => Ok(rush.backlog / mu_eff),
        Err(Error::NoOverload { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = (a + b) / 2.0;
            let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f((a + b) / 2.0));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn window_examples() {
        let p = SinusoidProfile::new(16.0, 0.9, 1.0).unwrap();
        assert_eq!(overload_window(&p, 32.0).unwrap(), None);

        let p = SinusoidProfile::new(16.0, 0.7, 1.0).unwrap();
        let w = overload_window(&p, 24.0).unwrap().unwrap();
        assert_relative_eq!(w.theta, PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(w.t1, PI / 6.0, epsilon = 1e-12);
        assert_relative_eq!(w.t2, 2.617_993_877_99, epsilon = 1e-9);

        let tangent = SinusoidProfile::new(16.0, 0.5, 1.0).unwrap();
        assert_eq!(overload_window(&tangent, 24.0).unwrap(), None);

        // At full amplitude the window is where λ(t) crosses μ_eff.
        let full = SinusoidProfile::new(16.0, 1.0, 1.0).unwrap();
        let w = overload_window(&full, 24.0).unwrap().unwrap();
        assert_relative_eq!(full.rate(w.t1), 24.0, max_relative = 1e-12);
        assert_relative_eq!(full.rate(w.t2), 24.0, max_relative = 1e-12);
    }

    #[test]
    fn window_phase_shift() {
        let base = SinusoidProfile::new(16.0, 0.7, 1.0).unwrap();
        let shifted = SinusoidProfile::with_phase(16.0, 0.7, 1.0, 1.0).unwrap();
        let w0 = overload_window(&base, 24.0).unwrap().unwrap();
        let w = overload_window(&shifted, 24.0).unwrap().unwrap();
        assert_relative_eq!(w.t1, (w0.t1 - 1.0).rem_euclid(TAU), max_relative = 1e-12);
        assert_relative_eq!(w.t2, w0.t2 - 1.0, max_relative = 1e-12);
        assert!((0.0..TAU).contains(&w.t1));
    }

    #[test]
    fn backlog_examples() {
        let p = SinusoidProfile::new(16.0, 0.7, 1.0).unwrap();
        let rush = fluid_backlog(&p, 24.0).unwrap();
        let expected = -8.0 * (PI - PI / 3.0) + 22.4 * (PI / 6.0).cos();
        assert_relative_eq!(rush.net_input, expected, max_relative = 1e-12);
        assert_relative_eq!(rush.backlog, 2.643_81, epsilon = 1e-5);
        assert_relative_eq!(rush_hour_wait(&p, 24.0).unwrap(), 0.110_159, epsilon = 1e-6);

        let big = fluid_backlog(&p.scaled(10.0), 240.0).unwrap();
        assert_relative_eq!(big.net_input, 10.0 * rush.net_input, max_relative = 1e-12);
        assert_relative_eq!(rush_hour_wait(&p.scaled(10.0), 240.0).unwrap(), 0.110_159, epsilon = 1e-6);

        let calm = SinusoidProfile::new(16.0, 0.4, 1.0).unwrap();
        assert!(matches!(fluid_backlog(&calm, 24.0), Err(Error::NoOverload { .. })));
        assert_eq!(rush_hour_wait(&calm, 24.0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn backlog_matches_quadrature(
            lambda in 1.0..100.0f64,
            ratio in 1.0..1.99f64,
            excess in 0.01..1.0f64,
            gamma in 0.01..10.0f64,
        ) {
            let mu = lambda * ratio;
            let amp = ((ratio - 1.0) + excess * (2.0 - ratio)).min(1.0);
            prop_assume!(lambda * (1.0 + amp) > mu);
            let p = SinusoidProfile::new(lambda, amp, gamma).unwrap();
            let rush = fluid_backlog(&p, mu).unwrap();
            let f = |t: f64| p.rate(t) - mu;
            let q = simpson(&f, rush.window.t1, rush.window.t2, 1e-11);
            prop_assert!((q - rush.net_input).abs() <= 1e-9, "{q} vs {}", rush.net_input);
        }

        #[test]
        fn rush_wait_scale_invariant(
            lambda in 1.0..100.0f64,
            ratio in 1.0..1.99f64,
            amp in 0.0..1.0f64,
            gamma in 0.01..10.0f64,
            c in 0.01..100.0f64,
        ) {
            let p = SinusoidProfile::new(lambda, amp, gamma).unwrap();
            let a = rush_hour_wait(&p, lambda * ratio).unwrap();
            let b = rush_hour_wait(&p.scaled(c), c * lambda * ratio).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
