//! Baseband envelope, slow-time motion filter and per-scan standardization.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dataset::{DataType, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Reusable FFT plans for envelopes of a fixed length.
pub struct EnvelopeDetector {
    len: usize,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl EnvelopeDetector {
    pub fn new(len: usize) -> Result<Self> {
        if len < 8 {
            return Err(Error::invalid(format!("envelope needs at least 8 samples, got {len}")));
        }
        let padded = len + len % 2;
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            padded,
            forward: planner.plan_fft_forward(padded),
            inverse: planner.plan_fft_inverse(padded),
        })
    }

    /// Complex analytic signal; odd lengths are zero-padded by one sample
    /// and truncated back.
    pub fn analytic(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        if x.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: x.len(),
            });
        }
        check_finite(x)?;
        let n = self.padded;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        self.forward.process(&mut buf);
        // keep DC and Nyquist, double positive, zero negative frequencies
        let half = n / 2;
        for (k, c) in buf.iter_mut().enumerate() {
            if k == 0 || k == half {
                continue;
            }
            *c *= if k < half { 2.0 } else { 0.0 };
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.truncate(self.len);
        buf.iter_mut().for_each(|c| *c *= scale);
        Ok(buf)
    }

    pub fn envelope(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.analytic(x)?.iter().map(|c| c.norm()).collect())
    }
}

/// Magnitude of the analytic signal computed by the FFT Hilbert method.
pub fn analytic_envelope(scan: &[f64]) -> Result<Vec<f64>> {
    EnvelopeDetector::new(scan.len())?.envelope(scan)
}

/// Second-order slow-time difference `s_t - 2 s_{t-1} + s_{t-2}` per bin.
pub fn motion_filter(scan_t: &[f64], scan_t1: &[f64], scan_t2: &[f64]) -> Result<Vec<f64>> {
    for other in [scan_t1, scan_t2] {
        if other.len() != scan_t.len() {
            return Err(Error::LengthMismatch {
                expected: scan_t.len(),
                found: other.len(),
            });
        }
    }
    Ok(scan_t
        .iter()
        .zip(scan_t1)
        .zip(scan_t2)
        .map(|((&a, &b), &c)| a - 2.0 * b + c)
        .collect())
}

/// Zero mean, unit population standard deviation.
pub fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    standardize_in_place(&mut out)?;
    Ok(out)
}

pub fn standardize_in_place(x: &mut [f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::invalid(format!("standardize needs >= 2 samples, got {}", x.len())));
    }
    check_finite(x)?;
    let sigma = population_std(x);
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::DegenerateScan);
    }
    let mu = mean(x);
    x.iter_mut().for_each(|v| *v = (*v - mu) / sigma);
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn population_std(x: &[f64]) -> f64 {
    let mu = mean(x);
    (x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Standardize every row; rows with zero variance are dropped.
/// Returns the surviving dataset and the number of dropped rows.
pub fn standardize_dataset(ds: &LabeledDataset) -> Result<(LabeledDataset, usize)> {
    let rows: Vec<Option<Vec<f64>>> = ds
        .scans
        .iter_rows()
        .map(|r| match standardize(r) {
            Ok(v) => Ok(Some(v)),
            Err(Error::DegenerateScan) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    collect_rows(ds, ds.data_type, rows)
}

fn collect_rows(
    ds: &LabeledDataset,
    data_type: DataType,
    rows: Vec<Option<Vec<f64>>>,
) -> Result<(LabeledDataset, usize)> {
    let nb = ds.n_bins();
    let mut data = Vec::with_capacity(rows.len() * nb);
    let mut labels = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for (row, &label) in rows.into_iter().zip(&ds.labels) {
        match row {
            Some(r) => {
                data.extend_from_slice(&r);
                labels.push(label);
            }
            None => dropped += 1,
        }
    }
    let n = labels.len();
    let out = LabeledDataset::new(
        Matrix::from_vec(n, nb, data)?,
        labels,
        ds.scheme,
        data_type,
        ds.scenario_id.clone(),
    )?;
    Ok((out, dropped))
}

/// Result of [`derive_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub dataset: LabeledDataset,
    /// Examples removed because the derived scan had zero variance.
    pub dropped: usize,
}

/// Turn a raw dataset (with slow-time history) into one of the three
/// representations. Examples whose derived scan is constant are dropped,
/// since they cannot be standardized.
pub fn derive_dataset(raw: &LabeledDataset, data_type: DataType) -> Result<Derived> {
    if raw.data_type != DataType::Raw {
        return Err(Error::invalid(format!(
            "derive_dataset expects raw scans, got {}",
            raw.data_type.name()
        )));
    }
    let n = raw.len();
    let rows: Vec<Vec<f64>> = match data_type {
        DataType::Raw => raw.scans.iter_rows().map(<[f64]>::to_vec).collect(),
        DataType::Baseband => {
            let det = EnvelopeDetector::new(raw.n_bins())?;
            (0..n)
                .into_par_iter()
                .map(|i| det.envelope(raw.scans.row(i)))
                .collect::<Result<_>>()?
        }
        DataType::MotionFiltered => {
            let h = raw.history.as_ref().ok_or_else(|| {
                Error::invalid("motion filtering needs the slow-time history of each example")
            })?;
            (0..n)
                .map(|i| motion_filter(raw.scans.row(i), h.t1.row(i), h.t2.row(i)))
                .collect::<Result<_>>()?
        }
    };
    let rows = rows
        .into_iter()
        .map(|r| {
            check_finite(&r)?;
            Ok((population_std(&r) > 0.0).then_some(r))
        })
        .collect::<Result<Vec<_>>>()?;
    let (dataset, dropped) = collect_rows(raw, data_type, rows)?;
    Ok(Derived { dataset, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{LabelScheme, RadialZones, SchemeKind};
    use crate::synth::{generate_dataset, Scenario, TargetModel};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tone(amp: f64, cycles: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * cycles * i as f64 / n as f64 + phase).cos())
            .collect()
    }

    #[test]
    fn zero_in_zero_out() {
        assert_eq!(analytic_envelope(&[0.0; 16]).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn integer_period_cosine_has_unit_envelope() {
        let env = analytic_envelope(&tone(1.0, 8.0, 256, 0.0)).unwrap();
        assert!(env.iter().all(|v| (v - 1.0).abs() < 1e-6));
        let env = analytic_envelope(&tone(3.0, 8.0, 256, 0.0)).unwrap();
        assert!(env.iter().all(|v| (v - 3.0).abs() < 1e-6));
    }

    #[test]
    fn envelope_matches_quadrature_tone() {
        for cycles in [1.0, 5.0, 17.0, 63.0] {
            let c = analytic_envelope(&tone(2.0, cycles, 128, 0.0)).unwrap();
            let s = analytic_envelope(&tone(2.0, cycles, 128, -PI / 2.0)).unwrap();
            for (a, b) in c.iter().zip(&s) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn analytic_imaginary_part_is_hilbert_transform() {
        let a = EnvelopeDetector::new(64).unwrap().analytic(&tone(1.0, 3.0, 64, 0.3)).unwrap();
        let q = tone(1.0, 3.0, 64, 0.3 - PI / 2.0);
        for (z, e) in a.iter().zip(&q) {
            assert!((z.im - e).abs() < 1e-9);
        }
    }

    #[test]
    fn odd_lengths_are_padded_and_short_rejected() {
        let env = analytic_envelope(&[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0]).unwrap();
        assert_eq!(env.len(), 9);
        assert!(env.iter().all(|v| *v >= 0.0));
        assert!(analytic_envelope(&[1.0; 7]).is_err());
        assert!(matches!(analytic_envelope(&[0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]), Err(Error::NonFinite(2))));
    }

    #[test]
    fn motion_filter_definition() {
        let same = [1.0, -2.0, 3.5];
        assert_eq!(motion_filter(&same, &same, &same).unwrap(), vec![0.0; 3]);
        // (a, b, c) at t-2, t-1, t
        let out = motion_filter(&[5.0], &[2.0], &[1.0]).unwrap();
        assert_eq!(out, vec![5.0 - 4.0 + 1.0]);
        assert!(motion_filter(&[1.0, 2.0], &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn standardize_known_values() {
        let out = standardize(&[2.0, 4.0, 6.0]).unwrap();
        let s = (8.0f64 / 3.0).sqrt();
        let expected = [-2.0 / s, 0.0, 2.0 / s];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out[0] + 1.22474).abs() < 1e-5);
        assert!(matches!(standardize(&[5.0, 5.0, 5.0]), Err(Error::DegenerateScan)));
        assert!(standardize(&[1.0]).is_err());
    }

    #[test]
    fn motion_filter_isolates_moving_target() {
        let mut sc = Scenario::indoor();
        sc.noise_sigma = 0.0;
        sc.sampling_jitter_ps = 0.0;
        let scheme = LabelScheme::Simple4(RadialZones::default());
        let raw = generate_dataset(&sc, &scheme, &TargetModel::default(), 2, 3).unwrap();
        let d = derive_dataset(&raw, DataType::MotionFiltered).unwrap();
        // class 0 rows are static and vanish
        assert_eq!(d.dropped, 2);
        assert!(d.dataset.labels.iter().all(|&l| l != 0));
        let h = raw.history.as_ref().unwrap();
        for (row, i) in d.dataset.scans.iter_rows().zip(2..) {
            let peak = row.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
            // energy sits where the target moved between scans
            let moved = (0..row.len())
                .filter(|&n| raw.scans.get(i, n) != h.t1.get(i, n))
                .collect::<Vec<_>>();
            assert!(moved.contains(&peak));
        }
    }

    #[test]
    fn static_scene_is_entirely_dropped() {
        let mut sc = Scenario::indoor();
        sc.noise_sigma = 0.0;
        sc.sampling_jitter_ps = 0.0;
        let scheme = LabelScheme::Simple4(RadialZones::default());
        let raw = generate_dataset(&sc, &scheme, &TargetModel::default(), 3, 3).unwrap();
        let static_rows: Vec<usize> = (0..raw.len()).filter(|&i| raw.labels[i] == 0).collect();
        let mut only_static = raw.subset(&static_rows);
        only_static.history = Some(crate::dataset::SlowTimeHistory {
            t1: raw.history.as_ref().unwrap().t1.select_rows(&static_rows),
            t2: raw.history.as_ref().unwrap().t2.select_rows(&static_rows),
        });
        let d = derive_dataset(&only_static, DataType::MotionFiltered).unwrap();
        assert_eq!(d.dataset.len(), 0);
        assert_eq!(d.dropped, 3);
    }

    #[test]
    fn derived_datasets_keep_labels_and_shape() {
        let sc = Scenario::outdoor();
        let scheme = LabelScheme::Simple4(RadialZones::default());
        let raw = generate_dataset(&sc, &scheme, &TargetModel::default(), 4, 8).unwrap();
        for dt in DataType::ALL {
            let d = derive_dataset(&raw, dt).unwrap();
            assert!(d.dataset.len() <= raw.len());
            assert_eq!(d.dataset.scheme, SchemeKind::Simple4);
            assert_eq!(d.dataset.data_type, dt);
            assert_eq!(d.dataset.labels, raw.labels);
        }
        let bb = derive_dataset(&raw, DataType::Baseband).unwrap();
        assert!(bb.dataset.scans.as_slice().iter().all(|v| *v >= 0.0));
        let raw_only = derive_dataset(&raw, DataType::Raw).unwrap();
        assert_eq!(raw_only.dataset.scans, raw.scans);
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 2..64)
            .prop_filter("non-constant", |v| population_std(v) > 1e-6)
    }

    proptest! {
        #[test]
        fn standardize_is_idempotent(x in vec_strategy()) {
            let once = standardize(&x).unwrap();
            let twice = standardize(&once).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!(mean(&once).abs() < 1e-9);
            prop_assert!((population_std(&once) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn standardize_is_affine_invariant_up_to_sign(
            x in vec_strategy(),
            a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
            b in -100.0f64..100.0,
        ) {
            let base = standardize(&x).unwrap();
            let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let out = standardize(&moved).unwrap();
            for (o, s) in out.iter().zip(&base) {
                prop_assert!((o - a.signum() * s).abs() < 1e-6);
            }
        }

        #[test]
        fn motion_filter_is_linear(
            v in prop::collection::vec(-10.0f64..10.0, 6 * 8),
        ) {
            let (x, y) = v.split_at(24);
            let (x0, x1, x2) = (&x[0..8], &x[8..16], &x[16..24]);
            let (y0, y1, y2) = (&y[0..8], &y[8..16], &y[16..24]);
            let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + q).collect::<Vec<_>>();
            let lhs = motion_filter(&add(x0, y0), &add(x1, y1), &add(x2, y2)).unwrap();
            let rhs = add(&motion_filter(x0, x1, x2).unwrap(), &motion_filter(y0, y1, y2).unwrap());
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-9);
            }
        }
    }
}
