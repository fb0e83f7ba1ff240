//! Seeded arrival and service-time generators.

mod renewal;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::SinusoidProfile;
use crate::error::{invalid, require_non_negative, require_positive, Result};

pub use renewal::{RenewalFamily, RenewalSampler, RenewalSpec};

/// A reproducible random stream: a seed plus a substream selector.
///
/// Draws come from ChaCha8 (`rand_chacha` 0.9) keyed by `seed`, with
/// `stream_id` selecting the ChaCha stream, so distinct ids never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The stream of replication `i` of a batch starting at this stream.
    pub fn replication(&self, i: u64) -> Self {
        Self::new(self.seed, self.stream_id.wrapping_add(i))
    }

    /// A per-purpose channel (arrivals, service, routing, ...) of this stream.
    pub fn channel(&self, channel: u8) -> Self {
        Self::new(self.seed, (self.stream_id << 8) | u64::from(channel))
    }
}

/// An arrival process for the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum ArrivalSpec {
    Poisson { rate: f64 },
    Renewal(RenewalSpec),
    Sinusoid(SinusoidProfile),
}

impl ArrivalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Poisson { rate } => require_non_negative("rate", *rate).map(|_| ()),
            Self::Renewal(spec) => spec.sampler().map(|_| ()),
            Self::Sinusoid(p) => p.validate(),
        }
    }

    /// Long-run mean arrival rate.
    pub fn mean_rate(&self) -> f64 {
        match self {
            Self::Poisson { rate } => *rate,
            Self::Renewal(spec) => 1.0 / spec.mean,
            Self::Sinusoid(p) => p.lambda_bar,
        }
    }

    /// Unbounded, increasing sequence of arrival times starting after 0.
    /// A zero Poisson rate yields only `f64::INFINITY`.
    pub fn times(&self, stream: SeededStream) -> Result<ArrivalTimes> {
        self.validate()?;
        let kind = match self {
            Self::Poisson { rate } => ArrivalKind::Poisson(*rate),
            Self::Renewal(spec) => ArrivalKind::Renewal(spec.sampler()?),
            Self::Sinusoid(p) => ArrivalKind::Thinned(*p),
        };
        Ok(ArrivalTimes {
            kind,
            rng: stream.rng(),
            t: 0.0,
        })
    }
}

#[derive(Debug, Clone)]
enum ArrivalKind {
    Poisson(f64),
    Renewal(RenewalSampler),
    Thinned(SinusoidProfile),
}

/// Iterator over the arrival epochs of an [`ArrivalSpec`].
#[derive(Debug, Clone)]
pub struct ArrivalTimes {
    kind: ArrivalKind,
    rng: ChaCha8Rng,
    t: f64,
}

impl Iterator for ArrivalTimes {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        match &self.kind {
            ArrivalKind::Poisson(rate) => self.t += exp_draw(&mut self.rng, *rate),
            ArrivalKind::Renewal(s) => self.t += s.sample(&mut self.rng),
            ArrivalKind::Thinned(p) => {
                let peak = p.peak_rate();
                loop {
                    self.t += exp_draw(&mut self.rng, peak);
                    if self.rng.random::<f64>() * peak < p.rate(self.t) {
                        break;
                    }
                }
            }
        }
        Some(self.t)
    }
}

/// Homogeneous Poisson arrival times in `[0, horizon)`.
pub fn poisson_arrivals(lambda: f64, horizon: f64, stream: SeededStream) -> Result<Vec<f64>> {
    require_positive("lambda", lambda)?;
    require_non_negative("horizon", horizon)?;
    let times = ArrivalSpec::Poisson { rate: lambda }.times(stream)?;
    Ok(times.take_while(|&t| t < horizon).collect())
}

/// Arrival times of a Poisson process with rate `profile.rate(t)`, by
/// thinning a homogeneous process at the peak rate `λ̄(1 + A)`.
pub fn nhpp_sinusoidal(profile: &SinusoidProfile, horizon: f64, stream: SeededStream) -> Result<Vec<f64>> {
    require_non_negative("horizon", horizon)?;
    let times = ArrivalSpec::Sinusoid(*profile).times(stream)?;
    Ok(times.take_while(|&t| t < horizon).collect())
}

/// `count` independent draws from a renewal distribution.
pub fn renewal_times(spec: &RenewalSpec, count: usize, stream: SeededStream) -> Result<Vec<f64>> {
    let sampler = spec.sampler()?;
    let mut rng = stream.rng();
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

/// How per-site phase shifts are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLaw {
    /// Independent uniform phases on `[0, 2π)`.
    Uniform,
    /// Explicit phases, reused cyclically if shorter than the site count.
    Fixed(Vec<f64>),
}

/// `k` copies of `base` that differ only in phase.
pub fn phase_shifted_sites(
    k: usize,
    base: &SinusoidProfile,
    law: &PhaseLaw,
    stream: SeededStream,
) -> Result<Vec<SinusoidProfile>> {
    if k == 0 {
        return Err(invalid("k", "need at least one site"));
    }
    base.validate()?;
    let mut rng = stream.rng();
    let phases: Vec<f64> = match law {
        PhaseLaw::Uniform => (0..k).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect(),
        PhaseLaw::Fixed(list) if list.is_empty() => return Err(invalid("phases", "fixed phase list is empty")),
        PhaseLaw::Fixed(list) => list.iter().copied().cycle().take(k).collect(),
    };
    phases
        .into_iter()
        .map(|phase| SinusoidProfile::with_phase(base.lambda_bar, base.amplitude, base.gamma, phase))
        .collect()
}

/// One exponential draw by inversion; `1 - U` keeps the argument of `ln` in `(0, 1]`.
pub(crate) fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}
