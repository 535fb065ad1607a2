//! Synthetic reciprocal RSSI traces for Alice (gateway), Bob (device) and a passive Eve.
//!
//! The shared small-scale fading is a first-order Gauss-Markov (AR(1)) process in the
//! dB domain, sampled once per probe period:
//!
//! ```text
//! g[k] = a * g[k-1] + z[k],   z ~ N(0, 1),   Var(g) = 1 / (1 - a^2)
//! ```
//!
//! Alice measures `g[k]` at the uplink instant. Bob measures the downlink ack `rx_delay`
//! seconds later, modelled as a draw with correlation `a^(rx_delay / probe_period)` to
//! `g[k]`. Eve observes the uplink through a channel with correlation `eve_corr` to the
//! legitimate one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{EveSample, ProbeSample, ProbeTrace};

/// EU868 carrier wavelength in metres.
pub const EU868_WAVELENGTH: f64 = 0.3456;

/// Class A RX1 delay (EU868 default), seconds.
pub const CLASS_A_RX1_DELAY: f64 = 1.0;

/// Class A RX2 delay (EU868 default), seconds.
pub const CLASS_A_RX2_DELAY: f64 = 2.0;

/// Uplink-to-downlink lag of the calibrated indoor preset, in seconds.
pub const INDOOR_EFFECTIVE_DELAY: f64 = 0.5;

/// Sample count of the reference indoor capture.
pub const REFERENCE_SAMPLE_COUNT: usize = 22912;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_samples: usize,
    /// Seconds between uplinks.
    pub probe_period: f64,
    /// Seconds from uplink to the downlink ack (RX1 window).
    pub rx_delay: f64,
    /// Correlation of the fading process across one probe period, in `[0, 1)`.
    pub ar_coeff: f64,
    pub noise_std_alice: f64,
    pub noise_std_bob: f64,
    pub noise_std_eve: f64,
    /// Constant receiver gain offsets, dB.
    pub gain_alice: f64,
    pub gain_bob: f64,
    /// Mean received level, dBm.
    pub mean_rssi: f64,
    /// Correlation of Eve's channel with the legitimate channel, in `[-1, 1]`.
    pub eve_corr: f64,
    /// Metres between Eve and the nearest legitimate party.
    pub eve_distance: f64,
    pub wavelength: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_samples: REFERENCE_SAMPLE_COUNT,
            probe_period: 10.0,
            rx_delay: CLASS_A_RX1_DELAY,
            ar_coeff: 0.9,
            noise_std_alice: 0.0,
            noise_std_bob: 0.0,
            noise_std_eve: 0.0,
            gain_alice: 0.0,
            gain_bob: 0.0,
            mean_rssi: -100.0,
            eve_corr: 0.0,
            eve_distance: 5.0,
            wavelength: EU868_WAVELENGTH,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Ideal reciprocal link: no measurement noise and no uplink/downlink delay.
    pub fn noiseless(n_samples: usize, seed: u64) -> Self {
        SimConfig {
            n_samples,
            rx_delay: 0.0,
            seed,
            ..SimConfig::default()
        }
    }

    /// Indoor link whose difference-quantizer disagreement rate sits near 0.1165.
    ///
    /// A Gauss-Markov channel sampled every 10 s with a full 1 s RX1 lag cannot go
    /// below roughly 0.14 for the difference quantizer, so this preset uses an
    /// effective reciprocity lag of 0.5 s. The gateway sees a constant 12 dB gain.
    pub fn indoor(n_samples: usize, seed: u64) -> Self {
        SimConfig {
            n_samples,
            rx_delay: INDOOR_EFFECTIVE_DELAY,
            noise_std_alice: 0.1,
            noise_std_bob: 0.1,
            noise_std_eve: 0.1,
            gain_alice: 12.0,
            seed,
            ..SimConfig::default()
        }
    }

    /// Same link as [`SimConfig::indoor`] but with the downlink measured in RX1.
    pub fn class_a(n_samples: usize, seed: u64) -> Self {
        SimConfig {
            rx_delay: CLASS_A_RX1_DELAY,
            ..SimConfig::indoor(n_samples, seed)
        }
    }

    /// Checks the configuration, returning non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n_samples == 0 {
            return Err(Error::config("n_samples must be positive"));
        }
        if !(0.0..1.0).contains(&self.ar_coeff) {
            return Err(Error::config(format!("ar_coeff {} outside [0, 1)", self.ar_coeff)));
        }
        if !(-1.0..=1.0).contains(&self.eve_corr) {
            return Err(Error::config(format!("eve_corr {} outside [-1, 1]", self.eve_corr)));
        }
        for (name, v) in [
            ("noise_std_alice", self.noise_std_alice),
            ("noise_std_bob", self.noise_std_bob),
            ("noise_std_eve", self.noise_std_eve),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        for (name, v) in [
            ("gain_alice", self.gain_alice),
            ("gain_bob", self.gain_bob),
            ("mean_rssi", self.mean_rssi),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::config("wavelength must be positive"));
        }
        check_timing(self.probe_period, self.rx_delay)?;

        let mut warnings = Vec::new();
        if self.eve_distance <= self.wavelength / 2.0 && self.eve_corr < 1.0 {
            warnings.push(format!(
                "eve_distance {} m is within half a wavelength ({} m) but eve_corr = {}; \
                 such an observer should not be decorrelated",
                self.eve_distance,
                self.wavelength / 2.0,
                self.eve_corr
            ));
        }
        Ok(warnings)
    }

    /// Correlation between the uplink and downlink fading samples of one probe.
    pub fn reciprocity_corr(&self) -> f64 {
        self.ar_coeff.powf(self.rx_delay / self.probe_period)
    }

    /// Stationary variance of the fading process.
    pub fn fading_variance(&self) -> f64 {
        1.0 / (1.0 - self.ar_coeff * self.ar_coeff)
    }
}

fn check_timing(probe_period: f64, rx_delay: f64) -> Result<()> {
    if !(rx_delay >= 0.0 && rx_delay.is_finite()) {
        return Err(Error::config(format!("rx_delay {rx_delay} must be non-negative")));
    }
    if !(probe_period > rx_delay && probe_period.is_finite()) {
        return Err(Error::config(format!(
            "probe_period {probe_period} must exceed rx_delay {rx_delay}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeInstant {
    pub uplink_t: f64,
    pub downlink_t: f64,
}

/// Class A probing schedule: uplink `k` at `k * probe_period`, its ack `rx_delay` later.
pub fn schedule(config: &SimConfig) -> Result<Vec<ProbeInstant>> {
    check_timing(config.probe_period, config.rx_delay)?;
    Ok((0..config.n_samples)
        .map(|k| {
            let uplink_t = k as f64 * config.probe_period;
            ProbeInstant {
                uplink_t,
                downlink_t: uplink_t + config.rx_delay,
            }
        })
        .collect())
}

/// One generated link. All series share length and probe instants.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization {
    pub instants: Vec<ProbeInstant>,
    /// Latent shared fading `g` at the uplink instants.
    pub fading: Vec<f64>,
    /// Gateway RSSI of each uplink, dBm.
    pub alice: Vec<f64>,
    /// Device RSSI of each downlink ack, dBm.
    pub bob: Vec<f64>,
    /// Eavesdropper RSSI at each uplink instant, dBm.
    pub eve: Vec<f64>,
}

impl LinkRealization {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    /// Paired trace view, counters starting at 0 and timestamps at the uplink instants.
    pub fn to_trace(&self, probe_period: f64) -> ProbeTrace {
        let samples = self
            .instants
            .iter()
            .zip(self.bob.iter().zip(&self.alice))
            .enumerate()
            .map(|(k, (inst, (&dev, &gw)))| ProbeSample::paired(k as u64, inst.uplink_t, dev, gw))
            .collect();
        ProbeTrace::new(samples, probe_period).expect("simulated trace is ordered and finite")
    }

    pub fn eve_samples(&self) -> Vec<EveSample> {
        self.instants
            .iter()
            .zip(&self.eve)
            .enumerate()
            .map(|(k, (inst, &rssi_eve))| EveSample {
                uplink_counter: k as u64,
                t: inst.uplink_t,
                rssi_eve,
            })
            .collect()
    }
}

/// Independent deterministic Gaussian streams derived from one seed.
struct Streams {
    seed: u64,
}

impl Streams {
    const FADING: u64 = 0;
    const DOWNLINK: u64 = 1;
    const EVE_FADING: u64 = 2;
    const NOISE_ALICE: u64 = 3;
    const NOISE_BOB: u64 = 4;
    const NOISE_EVE: u64 = 5;

    fn gaussian(&self, stream: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        StandardNormal.sample_iter(&mut rng).take(n).collect()
    }
}

fn ar1(innovations: &[f64], a: f64) -> Vec<f64> {
    let stationary_std = (1.0 / (1.0 - a * a)).sqrt();
    let mut out = Vec::with_capacity(innovations.len());
    let mut prev = 0.0;
    for (k, &z) in innovations.iter().enumerate() {
        let g = if k == 0 { stationary_std * z } else { a * prev + z };
        out.push(g);
        prev = g;
    }
    out
}

/// Generates one link realization; identical configs give bit-identical output.
pub fn simulate(config: &SimConfig) -> Result<LinkRealization> {
    config.validate()?;
    let n = config.n_samples;
    let instants = schedule(config)?;
    let streams = Streams { seed: config.seed };
    let a = config.ar_coeff;
    let sigma = config.fading_variance().sqrt();

    let fading = ar1(&streams.gaussian(Streams::FADING, n), a);
    let eve_fading = ar1(&streams.gaussian(Streams::EVE_FADING, n), a);

    let rho = config.reciprocity_corr();
    let spread = (1.0 - rho * rho).max(0.0).sqrt() * sigma;
    let downlink: Vec<f64> = fading
        .iter()
        .zip(streams.gaussian(Streams::DOWNLINK, n))
        .map(|(&g, w)| rho * g + spread * w)
        .collect();

    let base_alice = config.mean_rssi + config.gain_alice;
    let base_bob = config.mean_rssi + config.gain_bob;
    let alice = fading
        .iter()
        .zip(streams.gaussian(Streams::NOISE_ALICE, n))
        .map(|(&g, e)| base_alice + g + config.noise_std_alice * e)
        .collect();
    let bob = downlink
        .iter()
        .zip(streams.gaussian(Streams::NOISE_BOB, n))
        .map(|(&g, e)| base_bob + g + config.noise_std_bob * e)
        .collect();

    let c = config.eve_corr;
    let c_perp = (1.0 - c * c).max(0.0).sqrt();
    let eve = fading
        .iter()
        .zip(&eve_fading)
        .zip(streams.gaussian(Streams::NOISE_EVE, n))
        .map(|((&g, &h), e)| config.mean_rssi + c * g + c_perp * h + config.noise_std_eve * e)
        .collect();

    Ok(LinkRealization {
        instants,
        fading,
        alice,
        bob,
        eve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn variance(v: &[f64]) -> f64 {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    fn correlation(x: &[f64], y: &[f64]) -> f64 {
        let (mx, my) = (mean(x), mean(y));
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
        let sy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
        cov / (sx * sy)
    }

    #[test]
    fn schedule_class_a_defaults() {
        let cfg = SimConfig {
            n_samples: 3,
            ..SimConfig::default()
        };
        let s = schedule(&cfg).unwrap();
        let up: Vec<f64> = s.iter().map(|p| p.uplink_t).collect();
        let down: Vec<f64> = s.iter().map(|p| p.downlink_t).collect();
        assert_eq!(up, vec![0.0, 10.0, 20.0]);
        assert_eq!(down, vec![1.0, 11.0, 21.0]);
    }

    #[test]
    fn schedule_zero_delay_coincides() {
        let cfg = SimConfig {
            n_samples: 4,
            rx_delay: 0.0,
            ..SimConfig::default()
        };
        assert!(schedule(&cfg).unwrap().iter().all(|p| p.uplink_t == p.downlink_t));
    }

    #[test]
    fn schedule_rejects_delay_beyond_period() {
        let cfg = SimConfig {
            n_samples: 4,
            probe_period: 1.0,
            rx_delay: 2.0,
            ..SimConfig::default()
        };
        assert!(matches!(schedule(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(simulate(&SimConfig::noiseless(0, 1)).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let base = SimConfig::noiseless(10, 1);
        for cfg in [
            SimConfig { ar_coeff: 1.0, ..base.clone() },
            SimConfig { ar_coeff: -0.1, ..base.clone() },
            SimConfig { eve_corr: 1.5, ..base.clone() },
            SimConfig { noise_std_bob: -1.0, ..base.clone() },
        ] {
            assert!(simulate(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn close_eve_with_low_corr_warns() {
        let cfg = SimConfig {
            eve_distance: 0.1,
            eve_corr: 0.2,
            ..SimConfig::noiseless(10, 1)
        };
        assert_eq!(cfg.validate().unwrap().len(), 1);
        let cfg = SimConfig { eve_corr: 1.0, ..cfg };
        assert!(cfg.validate().unwrap().is_empty());
    }

    #[test]
    fn reciprocity_limit_is_exact() {
        let link = simulate(&SimConfig::noiseless(1000, 7)).unwrap();
        assert_eq!(link.alice, link.bob);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::indoor(2000, 42);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = SimConfig { seed: 43, ..cfg.clone() };
        assert_ne!(simulate(&cfg).unwrap().alice, simulate(&other).unwrap().alice);
    }

    #[test]
    fn gain_offset_shows_in_difference() {
        let cfg = SimConfig {
            gain_alice: 20.0,
            noise_std_alice: 0.5,
            noise_std_bob: 0.5,
            ..SimConfig::default()
        };
        let link = simulate(&SimConfig { n_samples: 10_000, ..cfg }).unwrap();
        let diff: Vec<f64> = link.alice.iter().zip(&link.bob).map(|(a, b)| a - b).collect();
        assert!((mean(&diff) - 20.0).abs() < 0.1, "{}", mean(&diff));
    }

    #[test]
    fn uncorrelated_eve() {
        let cfg = SimConfig {
            n_samples: 10_000,
            ar_coeff: 0.5,
            eve_corr: 0.0,
            ..SimConfig::default()
        };
        for seed in 0..5 {
            let link = simulate(&SimConfig { seed, ..cfg.clone() }).unwrap();
            let r = correlation(&link.eve, &link.alice);
            assert!(r.abs() < 0.05, "seed {seed}: r = {r}");
        }
    }

    #[test]
    fn fully_correlated_noiseless_eve_sees_fading() {
        let cfg = SimConfig {
            eve_corr: 1.0,
            ..SimConfig::noiseless(500, 3)
        };
        let link = simulate(&cfg).unwrap();
        assert_eq!(link.eve, link.alice);
    }

    #[test]
    fn fading_is_stationary() {
        for a in [0.0, 0.5, 0.9] {
            let cfg = SimConfig {
                n_samples: 50_000,
                ar_coeff: a,
                ..SimConfig::default()
            };
            let link = simulate(&cfg).unwrap();
            let expected = cfg.fading_variance();
            let var = variance(&link.fading);
            assert!((var / expected - 1.0).abs() < 0.10, "a = {a}: {var} vs {expected}");
        }
    }

    #[test]
    fn downlink_correlation_matches_delay() {
        let cfg = SimConfig {
            n_samples: 40_000,
            ar_coeff: 0.5,
            rx_delay: 5.0,
            ..SimConfig::default()
        };
        let link = simulate(&cfg).unwrap();
        let r = correlation(&link.alice, &link.bob);
        let expected = cfg.reciprocity_corr();
        assert!((r - expected).abs() < 0.02, "{r} vs {expected}");
    }

    #[test]
    fn trace_view_round_trips_columns() {
        let link = simulate(&SimConfig::indoor(300, 5)).unwrap();
        let trace = link.to_trace(10.0);
        assert_eq!(trace.len(), 300);
        assert_eq!(trace.samples()[17].rssi_gw, Some(link.alice[17]));
        assert_eq!(trace.samples()[17].rssi_dev, Some(link.bob[17]));
        assert_eq!(link.eve_samples()[17].rssi_eve, link.eve[17]);
        assert_eq!(trace.samples()[2].t, 20.0);
    }
}
