//! Labeled scan matrices and their binary file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "UWBD"
//! 4       2     format version (u16) = 1
//! 6       1     label scheme id (u8): 0 = simple4, 1 = grid10
//! 7       1     data type id (u8): 0 = raw, 1 = baseband, 2 = motion_filtered
//! 8       8     n_examples (u64)
//! 16      8     n_bins (u64)
//! 24      2     scenario id length L (u16)
//! 26      L     scenario id, UTF-8
//! 26+L    8*n_examples*n_bins   scan matrix, row-major f64
//! ...     4*n_examples          labels, u32
//! ```
//!
//! Trailing bytes are rejected. Slow-time history is never written.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::SchemeKind;
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 4] = b"UWBD";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    Raw = 0,
    Baseband = 1,
    MotionFiltered = 2,
}

impl DataType {
    pub const ALL: [DataType; 3] = [DataType::Raw, DataType::Baseband, DataType::MotionFiltered];

    pub fn name(self) -> &'static str {
        match self {
            DataType::Raw => "raw",
            DataType::Baseband => "baseband",
            DataType::MotionFiltered => "motion_filtered",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        DataType::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn from_id(id: u8) -> Option<Self> {
        DataType::ALL.get(id as usize).copied()
    }
}

/// The two scans preceding each example's feature scan, `t-1` and `t-2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowTimeHistory {
    pub t1: Matrix,
    pub t2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub scans: Matrix,
    pub labels: Vec<u32>,
    pub scheme: SchemeKind,
    pub data_type: DataType,
    pub scenario_id: String,
    pub history: Option<SlowTimeHistory>,
}

impl LabeledDataset {
    pub fn new(
        scans: Matrix,
        labels: Vec<u32>,
        scheme: SchemeKind,
        data_type: DataType,
        scenario_id: impl Into<String>,
    ) -> Result<Self> {
        if scans.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: scans.rows(),
                found: labels.len(),
            });
        }
        Ok(Self {
            scans,
            labels,
            scheme,
            data_type,
            scenario_id: scenario_id.into(),
            history: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.scans.cols()
    }

    /// Per-class example counts indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.scheme.n_classes()];
        for &l in &self.labels {
            if let Some(c) = counts.get_mut(l as usize) {
                *c += 1;
            }
        }
        counts
    }

    /// Labels valid for the scheme, every class present at least twice and
    /// all samples finite.
    pub fn validate(&self) -> Result<()> {
        let k = self.scheme.n_classes() as u32;
        if let Some(bad) = self.labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid(format!(
                "label {bad} invalid for scheme {}",
                self.scheme.name()
            )));
        }
        for (label, &count) in self.class_counts().iter().enumerate() {
            if count < 2 {
                return Err(Error::InsufficientClass {
                    label: label as u32,
                    count,
                    required: 2,
                });
            }
        }
        if let Some(i) = self.scans.first_non_finite() {
            return Err(Error::NonFinite(i));
        }
        Ok(())
    }

    /// Subset of rows, history dropped.
    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            scans: self.scans.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            scheme: self.scheme,
            data_type: self.data_type,
            scenario_id: self.scenario_id.clone(),
            history: None,
        }
    }

    /// `<scenario>_<scheme>_<data type>`.
    pub fn id(&self) -> String {
        format!("{}_{}_{}", self.scenario_id, self.scheme.name(), self.data_type.name())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let sid = self.scenario_id.as_bytes();
        let sid_len = u16::try_from(sid.len())
            .map_err(|_| Error::invalid("scenario id longer than 65535 bytes"))?;
        let mut out =
            Vec::with_capacity(26 + sid.len() + 8 * self.scans.as_slice().len() + 4 * self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.scheme as u8);
        out.push(self.data_type as u8);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_bins() as u64).to_le_bytes());
        out.extend_from_slice(&sid_len.to_le_bytes());
        out.extend_from_slice(sid);
        for v in self.scans.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic, not a dataset file".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let scheme_id = r.take(1)?[0];
        let scheme = SchemeKind::from_id(scheme_id)
            .ok_or_else(|| Error::Format(format!("unknown scheme id {scheme_id}")))?;
        let dt_id = r.take(1)?[0];
        let data_type = DataType::from_id(dt_id)
            .ok_or_else(|| Error::Format(format!("unknown data type id {dt_id}")))?;
        let n = usize::try_from(u64::from_le_bytes(r.array()?))
            .map_err(|_| Error::Format("n_examples overflows".into()))?;
        let nb = usize::try_from(u64::from_le_bytes(r.array()?))
            .map_err(|_| Error::Format("n_bins overflows".into()))?;
        let sid_len = u16::from_le_bytes(r.array()?) as usize;
        let scenario_id = String::from_utf8(r.take(sid_len)?.to_vec())
            .map_err(|_| Error::Format("scenario id is not UTF-8".into()))?;
        let cells = n
            .checked_mul(nb)
            .filter(|c| c.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| Error::Format("matrix size exceeds file length".into()))?;
        let data = r
            .take(cells * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let labels = r
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after label vector",
                bytes.len() - r.pos
            )));
        }
        LabeledDataset::new(Matrix::from_vec(n, nb, data)?, labels, scheme, data_type, scenario_id)
    }

    /// Write atomically: a temporary sibling is renamed over `path`.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Write `bytes` to a temporary file next to `path`, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> LabeledDataset {
        let m = Matrix::from_rows(&[[1.0, -2.5], [0.0, 3.25], [f64::MIN_POSITIVE, 7.0]]).unwrap();
        LabeledDataset::new(m, vec![0, 1, 1], SchemeKind::Grid10, DataType::Baseband, "indoor")
            .unwrap()
    }

    #[test]
    fn header_layout() {
        let b = small().to_bytes().unwrap();
        assert_eq!(&b[0..4], b"UWBD");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(b[6], 1);
        assert_eq!(b[7], 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 2);
        assert_eq!(u16::from_le_bytes([b[24], b[25]]), 6);
        assert_eq!(&b[26..32], b"indoor");
        assert_eq!(b.len(), 32 + 3 * 2 * 8 + 3 * 4);
    }

    #[test]
    fn corrupt_files_rejected() {
        let b = small().to_bytes().unwrap();
        assert!(LabeledDataset::from_bytes(&b[..b.len() - 1]).is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(LabeledDataset::from_bytes(&extra).is_err());
        let mut magic = b.clone();
        magic[0] = b'X';
        assert!(LabeledDataset::from_bytes(&magic).is_err());
        let mut dt = b;
        dt[7] = 9;
        assert!(LabeledDataset::from_bytes(&dt).is_err());
    }

    #[test]
    fn validate_requires_two_per_class() {
        let m = Matrix::zeros(4, 3);
        let ds = LabeledDataset::new(m, vec![0, 0, 1, 2], SchemeKind::Simple4, DataType::Raw, "x")
            .unwrap();
        assert!(matches!(ds.validate(), Err(Error::InsufficientClass { .. })));
    }

    #[test]
    fn missing_file_is_reported() {
        let err = LabeledDataset::read_file(Path::new("/nonexistent/x.uwbd")).unwrap_err();
        assert!(matches!(err, Error::MissingInput(_)));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
            grid in any::<bool>(),
        ) {
            let data: Vec<f64> = (0..rows * cols)
                .map(|i| f64::from_bits(seed.rotate_left(i as u32) & 0x7fef_ffff_ffff_ffff))
                .collect();
            let labels = (0..rows).map(|i| (i % 4) as u32).collect();
            let scheme = if grid { SchemeKind::Grid10 } else { SchemeKind::Simple4 };
            let ds = LabeledDataset::new(
                Matrix::from_vec(rows, cols, data).unwrap(),
                labels,
                scheme,
                DataType::MotionFiltered,
                "outdoor",
            ).unwrap();
            let back = LabeledDataset::from_bytes(&ds.to_bytes().unwrap()).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
