use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use super::exp_draw;
use crate::error::{require_non_negative, require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalFamily {
    Exponential,
    Hyperexponential2,
    Erlang,
    Deterministic,
    Lognormal,
}

/// A distribution on `[0, ∞)` described by its mean and squared CoV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalSpec {
    pub mean: f64,
    pub scv: f64,
    pub family: RenewalFamily,
}

const SCV_TOL: f64 = 1e-9;

impl RenewalSpec {
    pub fn new(family: RenewalFamily, mean: f64, scv: f64) -> Result<Self> {
        let spec = Self { mean, scv, family };
        spec.sampler()?;
        Ok(spec)
    }

    pub fn exponential(mean: f64) -> Self {
        Self {
            mean,
            scv: 1.0,
            family: RenewalFamily::Exponential,
        }
    }

    pub fn deterministic(mean: f64) -> Self {
        Self {
            mean,
            scv: 0.0,
            family: RenewalFamily::Deterministic,
        }
    }

    /// Erlang with the phase count nearest to `1/scv`. The realized
    /// variability is `1/n`, which differs from `scv` unless it is a unit
    /// fraction.
    pub fn erlang_nearest(mean: f64, scv: f64) -> Result<Self> {
        require_positive("scv", scv)?;
        let n = (1.0 / scv).round().max(1.0);
        Self::new(RenewalFamily::Erlang, mean, 1.0 / n)
    }

    /// Picks a family able to hit `scv`: deterministic, exponential, balanced
    /// hyperexponential above 1, lognormal otherwise.
    pub fn for_scv(mean: f64, scv: f64) -> Result<Self> {
        let family = if scv == 0.0 {
            RenewalFamily::Deterministic
        } else if (scv - 1.0).abs() <= SCV_TOL {
            RenewalFamily::Exponential
        } else if scv > 1.0 {
            RenewalFamily::Hyperexponential2
        } else {
            RenewalFamily::Lognormal
        };
        Self::new(family, mean, scv)
    }

    pub fn sampler(&self) -> Result<RenewalSampler> {
        require_positive("mean", self.mean)?;
        require_non_negative("scv", self.scv)?;
        let unreachable = |family| Error::UnreachableScv {
            family,
            target: self.scv,
        };
        let m = self.mean;
        match self.family {
            RenewalFamily::Exponential if (self.scv - 1.0).abs() <= SCV_TOL => Ok(RenewalSampler::Exponential { rate: 1.0 / m }),
            RenewalFamily::Exponential => Err(unreachable("exponential")),
            RenewalFamily::Deterministic if self.scv <= SCV_TOL => Ok(RenewalSampler::Deterministic(m)),
            RenewalFamily::Deterministic => Err(unreachable("deterministic")),
            RenewalFamily::Hyperexponential2 if self.scv > 1.0 => {
                let c2 = self.scv;
                let p = 0.5 * (1.0 + ((c2 - 1.0) / (c2 + 1.0)).sqrt());
                Ok(RenewalSampler::Hyperexponential2 {
                    p,
                    rate1: 2.0 * p / m,
                    rate2: 2.0 * (1.0 - p) / m,
                })
            }
            RenewalFamily::Hyperexponential2 => Err(unreachable("hyperexponential2")),
            RenewalFamily::Erlang => {
                if self.scv <= 0.0 {
                    return Err(unreachable("erlang"));
                }
                let n = (1.0 / self.scv).round();
                if n < 1.0 || (1.0 / n - self.scv).abs() > SCV_TOL * self.scv.max(1.0) {
                    return Err(unreachable("erlang"));
                }
                let gamma = Gamma::new(n, m / n).map_err(|e| Error::Domain(e.to_string()))?;
                Ok(RenewalSampler::Erlang(gamma))
            }
            RenewalFamily::Lognormal if self.scv > 0.0 => {
                let s2 = self.scv.ln_1p();
                let mu = m.ln() - s2 / 2.0;
                let ln = LogNormal::new(mu, s2.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
                Ok(RenewalSampler::Lognormal(ln))
            }
            RenewalFamily::Lognormal => Err(unreachable("lognormal")),
        }
    }
}

/// A validated, ready-to-draw renewal distribution.
#[derive(Debug, Clone, Copy)]
pub enum RenewalSampler {
    Exponential { rate: f64 },
    Hyperexponential2 { p: f64, rate1: f64, rate2: f64 },
    Erlang(Gamma<f64>),
    Deterministic(f64),
    Lognormal(LogNormal<f64>),
}

impl RenewalSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => exp_draw(rng, *rate),
            Self::Hyperexponential2 { p, rate1, rate2 } => {
                let rate = if rng.random::<f64>() < *p { *rate1 } else { *rate2 };
                exp_draw(rng, rate)
            }
            Self::Erlang(g) => g.sample(rng),
            Self::Deterministic(v) => *v,
            Self::Lognormal(d) => d.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::workload::{renewal_times, SeededStream};

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var / (mean * mean))
    }

    #[test]
    fn hyperexponential_fit() {
        let s = RenewalSpec::new(RenewalFamily::Hyperexponential2, 0.5, 4.0).unwrap();
        let RenewalSampler::Hyperexponential2 { p, rate1, rate2 } = s.sampler().unwrap() else {
            panic!("wrong sampler");
        };
        assert_relative_eq!(p, 0.887_298_334_6, epsilon = 1e-9);
        assert_relative_eq!(rate1, 2.0 * p / 0.5);
        assert_relative_eq!(rate2, 2.0 * (1.0 - p) / 0.5);
        // Balanced means: each branch carries half the mean.
        assert_relative_eq!(p / rate1, (1.0 - p) / rate2, max_relative = 1e-12);
    }

    #[test]
    fn family_scv_consistency() {
        assert!(RenewalSpec::new(RenewalFamily::Exponential, 1.0, 2.0).is_err());
        assert!(RenewalSpec::new(RenewalFamily::Hyperexponential2, 1.0, 1.0).is_err());
        assert!(matches!(
            RenewalSpec::new(RenewalFamily::Erlang, 1.0, 0.3),
            Err(Error::UnreachableScv { family: "erlang", .. })
        ));
        assert_eq!(RenewalSpec::erlang_nearest(1.0, 0.3).unwrap().scv, 1.0 / 3.0);
        assert!(RenewalSpec::new(RenewalFamily::Deterministic, 1.0, 0.5).is_err());
        assert_eq!(
            RenewalSpec::for_scv(1.0, 3.0).unwrap().family,
            RenewalFamily::Hyperexponential2
        );
    }

    #[test]
    fn deterministic_samples() {
        let xs = renewal_times(&RenewalSpec::deterministic(1.0), 100, SeededStream::new(1, 0)).unwrap();
        assert!(xs.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn sample_scv_converges() {
        let cases = [
            RenewalSpec::exponential(0.02),
            RenewalSpec::new(RenewalFamily::Hyperexponential2, 0.02, 4.0).unwrap(),
            RenewalSpec::new(RenewalFamily::Erlang, 0.02, 0.25).unwrap(),
            RenewalSpec::new(RenewalFamily::Lognormal, 0.02, 2.0).unwrap(),
            RenewalSpec::new(RenewalFamily::Lognormal, 0.02, 0.3).unwrap(),
        ];
        for (i, spec) in cases.iter().enumerate() {
            let xs = renewal_times(spec, 1_000_000, SeededStream::new(99, i as u64)).unwrap();
            let (mean, scv) = moments(&xs);
            let se = (spec.scv / xs.len() as f64).sqrt() * spec.mean;
            assert!((mean - spec.mean).abs() < 3.0 * se + 1e-15, "{spec:?}: mean {mean}");
            assert!((scv - spec.scv).abs() < 0.05 * spec.scv, "{spec:?}: scv {scv}");
        }
    }
}
