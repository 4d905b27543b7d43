//! Synthetic monostatic UWB pulse-response scans.
//!
//! A scan is the sum of four terms sampled on the fast-time grid
//! `t_n = n * bin_duration`, with `t = 0` at the direct-path arrival:
//!
//! * the direct-path pulse centred on bin 0,
//! * static clutter echoes whose delays and amplitudes are fixed by the
//!   scenario seed and identical in every scan,
//! * an optional target echo at delay `2 r / c` with amplitude
//!   `reflectivity / r^range_exponent`, where `r` is perturbed per scan by the
//!   target's radial jitter. A person is an extended reflector, so the echo
//!   also carries weaker copies from points of the body behind the leading
//!   one,
//! * receiver noise: white Gaussian noise plus sampling-clock jitter, which
//!   offsets the instant each bin is sampled.
//!
//! Sampling jitter turns steep static returns into noise proportional to
//! their slope, which is what a motion filter cannot cancel. Strong clutter
//! therefore costs accuracy even though the clutter itself never moves.
//!
//! The pulse is a Gaussian-modulated cosine. Scans depend on range only, so
//! targets mirrored in azimuth are indistinguishable.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataType, LabeledDataset, SlowTimeHistory};
use crate::error::{Error, Result};
use crate::labeling::{to_polar, LabelScheme};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, stream_rng, tag, Rng};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pulse support is truncated at this many envelope widths.
const PULSE_SUPPORT_WIDTHS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Indoor,
    Outdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub center_frequency_ghz: f64,
    /// Standard deviation of the Gaussian envelope.
    pub width_ps: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self {
            center_frequency_ghz: 4.3,
            width_ps: 200.0,
        }
    }
}

impl PulseShape {
    #[inline]
    pub fn eval(&self, t_seconds: f64) -> f64 {
        let w = self.width_ps * 1e-12;
        let env = (-0.5 * (t_seconds / w).powi(2)).exp();
        env * (2.0 * PI * self.center_frequency_ghz * 1e9 * t_seconds).cos()
    }

    fn support_seconds(&self) -> f64 {
        PULSE_SUPPORT_WIDTHS * self.width_ps * 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub environment: Environment,
    pub n_bins: usize,
    pub bin_duration_ps: f64,
    pub clutter_amplitude: f64,
    pub clutter_path_count: usize,
    pub noise_sigma: f64,
    /// Standard deviation of the sampling instant of each bin.
    #[serde(default = "default_sampling_jitter")]
    pub sampling_jitter_ps: f64,
    pub direct_path_amplitude: f64,
    #[serde(default = "default_range_exponent")]
    pub range_exponent: f64,
    #[serde(default)]
    pub pulse: PulseShape,
    pub seed: u64,
}

fn default_range_exponent() -> f64 {
    2.0
}

fn default_sampling_jitter() -> f64 {
    4.0
}

impl Scenario {
    pub fn indoor() -> Self {
        Self {
            name: "indoor".into(),
            environment: Environment::Indoor,
            n_bins: 480,
            bin_duration_ps: 61.0,
            clutter_amplitude: 1.0,
            clutter_path_count: 12,
            noise_sigma: 0.003,
            sampling_jitter_ps: default_sampling_jitter(),
            direct_path_amplitude: 1.0,
            range_exponent: default_range_exponent(),
            pulse: PulseShape::default(),
            seed: 0x1d00,
        }
    }

    pub fn outdoor() -> Self {
        Self {
            name: "outdoor".into(),
            environment: Environment::Outdoor,
            clutter_amplitude: 0.05,
            clutter_path_count: 2,
            seed: 0x0d00,
            ..Self::indoor()
        }
    }

    pub fn bin_seconds(&self) -> f64 {
        self.bin_duration_ps * 1e-12
    }

    /// Duration of the fast-time window in seconds.
    pub fn window_seconds(&self) -> f64 {
        self.n_bins as f64 * self.bin_seconds()
    }

    /// Largest range whose round-trip delay stays inside the window.
    pub fn max_range(&self) -> f64 {
        self.window_seconds() * SPEED_OF_LIGHT / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("scenario '{}': {m}", self.name)));
        let non_negative = |v: f64| v >= 0.0 && v.is_finite();
        if self.n_bins < 64 {
            return bad(format!("n_bins must be >= 64, got {}", self.n_bins));
        }
        if !(self.bin_duration_ps > 0.0 && self.bin_duration_ps.is_finite()) {
            return bad("bin_duration_ps must be positive".into());
        }
        if !non_negative(self.clutter_amplitude) {
            return bad("clutter_amplitude must be >= 0".into());
        }
        if !non_negative(self.noise_sigma) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !non_negative(self.sampling_jitter_ps) {
            return bad("sampling_jitter_ps must be >= 0".into());
        }
        if !(self.direct_path_amplitude > 0.0 && self.direct_path_amplitude.is_finite()) {
            return bad("direct_path_amplitude must be > 0".into());
        }
        if !(self.range_exponent > 0.0 && self.range_exponent.is_finite()) {
            return bad("range_exponent must be > 0".into());
        }
        if !(self.pulse.width_ps > 0.0 && self.pulse.center_frequency_ghz > 0.0) {
            return bad("pulse width and centre frequency must be positive".into());
        }
        Ok(())
    }

    /// Static clutter reflectors `(delay_seconds, amplitude)`, a pure function
    /// of the scenario seed.
    pub fn clutter_paths(&self) -> Vec<(f64, f64)> {
        let mut rng = stream_rng(derive_seed(self.seed, &[tag("clutter")]), 0);
        let lo = 16.0_f64.min(self.n_bins as f64 / 4.0);
        let hi = self.n_bins as f64 - lo;
        (0..self.clutter_path_count)
            .map(|_| {
                let bin: f64 = rng.gen_range(lo..hi);
                let amp: f64 = rng.gen_range(0.3..1.0) * self.clutter_amplitude;
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (bin * self.bin_seconds(), sign * amp)
            })
            .collect()
    }
}

/// A reflecting point of the body behind the leading one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyScatterer {
    /// Metres beyond the target range.
    pub range_offset: f64,
    /// Amplitude relative to the leading echo.
    pub relative_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    /// Metres from the radar.
    pub range: f64,
    /// Radians from boresight, positive to the right.
    pub azimuth: f64,
    pub reflectivity: f64,
    /// Per-scan radial micro-motion, metres (standard deviation).
    pub slow_time_jitter_sigma: f64,
    #[serde(default)]
    pub scatterers: Vec<BodyScatterer>,
}

impl TargetState {
    /// A point target.
    pub fn new(range: f64, azimuth: f64, reflectivity: f64, slow_time_jitter_sigma: f64) -> Self {
        Self {
            range,
            azimuth,
            reflectivity,
            slow_time_jitter_sigma,
            scatterers: Vec::new(),
        }
    }

    /// `(x, y)` with x lateral (right positive) and y along boresight.
    pub fn cartesian(&self) -> (f64, f64) {
        (self.range * self.azimuth.sin(), self.range * self.azimuth.cos())
    }

    pub fn echo_delay(&self) -> f64 {
        2.0 * self.range / SPEED_OF_LIGHT
    }

    fn validate(&self, scenario: &Scenario) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::invalid(format!("target range must be > 0, got {}", self.range)));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.azimuth) {
            return Err(Error::invalid(format!(
                "target azimuth {} outside [-pi/2, pi/2]",
                self.azimuth
            )));
        }
        if !(self.reflectivity > 0.0 && self.reflectivity.is_finite()) {
            return Err(Error::invalid("target reflectivity must be > 0"));
        }
        if !(self.slow_time_jitter_sigma >= 0.0 && self.slow_time_jitter_sigma.is_finite()) {
            return Err(Error::invalid("target jitter must be >= 0"));
        }
        if self
            .scatterers
            .iter()
            .any(|s| !(s.range_offset >= 0.0 && s.range_offset.is_finite() && s.relative_amplitude.is_finite()))
        {
            return Err(Error::invalid("body scatterers need finite, non-negative offsets"));
        }
        if self.echo_delay() >= scenario.window_seconds() {
            return Err(Error::invalid(format!(
                "target at {:.3} m echoes outside the {:.3} m scan window",
                self.range,
                scenario.max_range()
            )));
        }
        Ok(())
    }
}

/// Population of targets placed for nonzero labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetModel {
    pub reflectivity: f64,
    /// Reflectivity is drawn uniformly from `reflectivity * (1 ± spread)`.
    pub reflectivity_spread: f64,
    pub jitter_sigma_m: f64,
    /// Reflecting points behind the leading one.
    pub body_scatterers: usize,
    /// Offsets of those points are uniform in `[0, body_depth_m)`.
    pub body_depth_m: f64,
}

impl Default for TargetModel {
    fn default() -> Self {
        Self {
            reflectivity: 1.0,
            reflectivity_spread: 0.3,
            jitter_sigma_m: 0.08,
            body_scatterers: 6,
            body_depth_m: 0.5,
        }
    }
}

impl TargetModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflectivity > 0.0
            && self.reflectivity.is_finite()
            && (0.0..1.0).contains(&self.reflectivity_spread)
            && self.jitter_sigma_m >= 0.0
            && self.jitter_sigma_m.is_finite()
            && self.body_depth_m >= 0.0
            && self.body_depth_m.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid target model {self:?}")))
        }
    }

    fn draw_scatterers(&self, rng: &mut Rng) -> Vec<BodyScatterer> {
        (0..self.body_scatterers)
            .map(|_| BodyScatterer {
                range_offset: if self.body_depth_m > 0.0 {
                    rng.gen_range(0.0..self.body_depth_m)
                } else {
                    0.0
                },
                relative_amplitude: rng.gen_range(0.2..0.8),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarScan {
    pub samples: Vec<f64>,
    pub slow_time_index: u64,
    pub scenario_id: String,
}

/// Precomputed static background (direct path plus clutter) for one scenario.
#[derive(Debug, Clone)]
pub struct ScanSynthesizer<'a> {
    scenario: &'a Scenario,
    /// `(delay, amplitude)` of the direct path followed by the clutter paths.
    statics: Vec<(f64, f64)>,
    background: Vec<f64>,
}

impl<'a> ScanSynthesizer<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut statics = vec![(0.0, scenario.direct_path_amplitude)];
        statics.extend(scenario.clutter_paths());
        let mut background = vec![0.0; scenario.n_bins];
        for &(delay, amp) in &statics {
            add_pulse(&mut background, scenario, delay, amp, None);
        }
        Ok(Self {
            scenario,
            statics,
            background,
        })
    }

    /// Static part of every scan, sampled without jitter.
    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn synthesize(
        &self,
        target: Option<&TargetState>,
        slow_time_index: u64,
        rng: &mut Rng,
    ) -> Result<RadarScan> {
        let sc = self.scenario;
        if let Some(t) = target {
            t.validate(sc)?;
        }
        let offsets: Option<Vec<f64>> = (sc.sampling_jitter_ps > 0.0).then(|| {
            let s = sc.sampling_jitter_ps * 1e-12;
            (0..sc.n_bins)
                .map(|_| -> f64 { let z: f64 = StandardNormal.sample(rng); s * z })
                .collect()
        });
        let mut samples = match &offsets {
            None => self.background.clone(),
            Some(off) => {
                let mut b = vec![0.0; sc.n_bins];
                for &(delay, amp) in &self.statics {
                    add_pulse(&mut b, sc, delay, amp, Some(off));
                }
                b
            }
        };
        if let Some(t) = target {
            let range = if t.slow_time_jitter_sigma > 0.0 {
                let jitter = Normal::new(0.0, t.slow_time_jitter_sigma)
                    .map_err(|e| Error::invalid(e.to_string()))?;
                (t.range + jitter.sample(rng)).max(f64::MIN_POSITIVE)
            } else {
                t.range
            };
            let amp = t.reflectivity / t.range.powf(sc.range_exponent);
            let delay = 2.0 * range / SPEED_OF_LIGHT;
            add_pulse(&mut samples, sc, delay, amp, offsets.as_deref());
            for s in &t.scatterers {
                let d = delay + 2.0 * s.range_offset / SPEED_OF_LIGHT;
                add_pulse(&mut samples, sc, d, amp * s.relative_amplitude, offsets.as_deref());
            }
        }
        if sc.noise_sigma > 0.0 {
            for s in samples.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *s += sc.noise_sigma * z;
            }
        }
        Ok(RadarScan {
            samples,
            slow_time_index,
            scenario_id: sc.name.clone(),
        })
    }
}

/// Add one pulse, sampling bin `n` at `n * dt + offsets[n]`.
fn add_pulse(out: &mut [f64], scenario: &Scenario, delay: f64, amplitude: f64, offsets: Option<&[f64]>) {
    let dt = scenario.bin_seconds();
    let support = scenario.pulse.support_seconds();
    let lo = ((delay - support) / dt).ceil().max(0.0) as usize;
    let hi = ((delay + support) / dt).floor();
    if hi < 0.0 || out.is_empty() {
        return;
    }
    let hi = (hi as usize).min(out.len() - 1);
    for n in lo..=hi {
        let jitter = offsets.map_or(0.0, |o| o[n]);
        out[n] += amplitude * scenario.pulse.eval(n as f64 * dt + jitter - delay);
    }
}

/// One scan for an optional target. Deterministic in the scenario seed and
/// the state of `rng`.
pub fn synthesize_scan(
    scenario: &Scenario,
    target: Option<&TargetState>,
    slow_time_index: u64,
    rng: &mut Rng,
) -> Result<RadarScan> {
    ScanSynthesizer::new(scenario)?.synthesize(target, slow_time_index, rng)
}

/// Place a target uniformly inside the zone or cell owning `label`.
pub fn place_target_for_label(
    label: u32,
    scheme: &LabelScheme,
    model: &TargetModel,
    rng: &mut Rng,
) -> Result<TargetState> {
    if label == 0 || label as usize >= scheme.n_classes() {
        return Err(Error::invalid(format!(
            "label {label} has no target position under {}",
            scheme.kind().name()
        )));
    }
    let reflectivity = model.reflectivity
        * if model.reflectivity_spread > 0.0 {
            rng.gen_range(1.0 - model.reflectivity_spread..1.0 + model.reflectivity_spread)
        } else {
            1.0
        };
    // Rejection guards the round trip against rounding at cell edges.
    for _ in 0..1000 {
        let (range, azimuth) = match scheme {
            LabelScheme::Simple4(z) => {
                let (lo, hi) = z.band(label).expect("label checked above");
                (rng.gen_range(lo..hi), rng.gen_range(-FRAC_PI_2..=FRAC_PI_2))
            }
            LabelScheme::Grid10(g) => {
                let (x0, x1, y0, y1) = g.cell_bounds(label).expect("label checked above");
                to_polar(rng.gen_range(x0..x1), rng.gen_range(y0..y1))
            }
        };
        let mut t = TargetState::new(range, azimuth, reflectivity, model.jitter_sigma_m);
        if scheme.label(Some(&t)) == label {
            t.scatterers = model.draw_scatterers(rng);
            return Ok(t);
        }
    }
    Err(Error::invalid(format!("could not place a target for label {label}")))
}

/// Generate a balanced raw dataset: `n_per_class` examples of every label,
/// class-major. Each example is a slow-time triple `(t-2, t-1, t)`; the scan
/// at `t` is the feature row and the two earlier scans are kept as history.
pub fn generate_dataset(
    scenario: &Scenario,
    scheme: &LabelScheme,
    model: &TargetModel,
    n_per_class: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_per_class < 2 {
        return Err(Error::invalid(format!("n_per_class must be >= 2, got {n_per_class}")));
    }
    scheme.validate()?;
    model.validate()?;
    let synth = ScanSynthesizer::new(scenario)?;
    if 2.0 * scheme.max_range() / SPEED_OF_LIGHT >= scenario.window_seconds() {
        return Err(Error::invalid(format!(
            "scheme reaches {:.3} m but the scan window of '{}' ends at {:.3} m",
            scheme.max_range(),
            scenario.name,
            scenario.max_range()
        )));
    }

    let n_classes = scheme.n_classes();
    let n = n_classes * n_per_class;
    let example_seed = derive_seed(seed, &[tag("examples")]);
    let rows: Vec<([Vec<f64>; 3], u32)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let label = (i / n_per_class) as u32;
            let mut rng = stream_rng(example_seed, i as u64);
            let target = if label == 0 {
                None
            } else {
                Some(place_target_for_label(label, scheme, model, &mut rng)?)
            };
            let base = 3 * i as u64;
            let t2 = synth.synthesize(target.as_ref(), base, &mut rng)?.samples;
            let t1 = synth.synthesize(target.as_ref(), base + 1, &mut rng)?.samples;
            let t0 = synth.synthesize(target.as_ref(), base + 2, &mut rng)?.samples;
            Ok(([t0, t1, t2], label))
        })
        .collect::<Result<_>>()?;

    let nb = scenario.n_bins;
    let mut frames = [Vec::with_capacity(n * nb), Vec::with_capacity(n * nb), Vec::with_capacity(n * nb)];
    let mut labels = Vec::with_capacity(n);
    for (scans, label) in rows {
        for (frame, scan) in frames.iter_mut().zip(scans.iter()) {
            frame.extend_from_slice(scan);
        }
        labels.push(label);
    }
    let [f0, f1, f2] = frames;
    Ok(LabeledDataset {
        scans: Matrix::from_vec(n, nb, f0)?,
        labels,
        scheme: scheme.kind(),
        data_type: DataType::Raw,
        scenario_id: scenario.name.clone(),
        history: Some(SlowTimeHistory {
            t1: Matrix::from_vec(n, nb, f1)?,
            t2: Matrix::from_vec(n, nb, f2)?,
        }),
    })
}
