//! Hypothesis construction: mapping a target's position (or its absence) to
//! a class label under either the radial risk-zone scheme or the 3x3 grid.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::TargetState;

/// Which hypothesis is being used. The discriminant doubles as the on-disk id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Simple4 = 0,
    Grid10 = 1,
}

impl SchemeKind {
    pub fn n_classes(self) -> usize {
        match self {
            SchemeKind::Simple4 => 4,
            SchemeKind::Grid10 => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Simple4 => "simple4",
            SchemeKind::Grid10 => "grid10",
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(SchemeKind::Simple4),
            1 => Some(SchemeKind::Grid10),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "simple4" => Some(SchemeKind::Simple4),
            "grid10" => Some(SchemeKind::Grid10),
            _ => None,
        }
    }
}

/// Radial risk bands. A target closer than `r_high` is high risk (label 1),
/// closer than `r_med` medium (2), closer than `r_low` low (3). `inner` only
/// bounds where targets are placed during synthesis so that their echo clears
/// the direct path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialZones {
    pub inner: f64,
    pub r_high: f64,
    pub r_med: f64,
    pub r_low: f64,
}

impl Default for RadialZones {
    fn default() -> Self {
        Self {
            inner: 0.3,
            r_high: 1.0,
            r_med: 2.0,
            r_low: 3.0,
        }
    }
}

impl RadialZones {
    /// `[lower, upper)` range band owned by a nonzero label.
    pub fn band(&self, label: u32) -> Option<(f64, f64)> {
        match label {
            1 => Some((self.inner, self.r_high)),
            2 => Some((self.r_high, self.r_med)),
            3 => Some((self.r_med, self.r_low)),
            _ => None,
        }
    }
}

/// 3x3 grid in front of the radar. Rows run away from the radar starting at
/// `forward_offset`; columns are centred on boresight, leftmost first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridGeometry {
    pub forward_offset: f64,
    pub cell_depth: f64,
    pub cell_width: f64,
}

impl Default for GridGeometry {
    fn default() -> Self {
        Self {
            forward_offset: 0.5,
            cell_depth: 1.0,
            cell_width: 1.0,
        }
    }
}

pub const GRID_SIDE: usize = 3;

impl GridGeometry {
    fn left_edge(&self) -> f64 {
        -(GRID_SIDE as f64) * self.cell_width / 2.0
    }

    /// Cartesian bounds `(x0, x1, y0, y1)` of the cell owning `label` (1..=9).
    pub fn cell_bounds(&self, label: u32) -> Option<(f64, f64, f64, f64)> {
        if !(1..=9).contains(&label) {
            return None;
        }
        let idx = (label - 1) as usize;
        let (row, col) = (idx / GRID_SIDE, idx % GRID_SIDE);
        let x0 = self.left_edge() + col as f64 * self.cell_width;
        let y0 = self.forward_offset + row as f64 * self.cell_depth;
        Some((x0, x0 + self.cell_width, y0, y0 + self.cell_depth))
    }

    /// Farthest range covered by the grid.
    pub fn max_range(&self) -> f64 {
        let y = self.forward_offset + GRID_SIDE as f64 * self.cell_depth;
        let x = self.left_edge();
        (x * x + y * y).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LabelScheme {
    Simple4(RadialZones),
    Grid10(GridGeometry),
}

impl LabelScheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            LabelScheme::Simple4(_) => SchemeKind::Simple4,
            LabelScheme::Grid10(_) => SchemeKind::Grid10,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.kind().n_classes()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LabelScheme::Simple4(z) => {
                let ok = z.inner > 0.0 && z.inner < z.r_high && z.r_high < z.r_med && z.r_med < z.r_low;
                if !ok || !z.r_low.is_finite() {
                    return Err(Error::invalid(format!(
                        "radial zones must satisfy 0 < inner < r_high < r_med < r_low, got {z:?}"
                    )));
                }
            }
            LabelScheme::Grid10(g) => {
                let ok = g.forward_offset > 0.0
                    && g.cell_depth > 0.0
                    && g.cell_width > 0.0
                    && g.max_range().is_finite();
                if !ok {
                    return Err(Error::invalid(format!(
                        "grid offset and cell sizes must be positive, got {g:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Label of an optional target under this scheme.
    pub fn label(&self, target: Option<&TargetState>) -> u32 {
        match self {
            LabelScheme::Simple4(z) => simple_label(target, z),
            LabelScheme::Grid10(g) => grid_label(target, g),
        }
    }

    /// Farthest range any nonzero label can occupy.
    pub fn max_range(&self) -> f64 {
        match self {
            LabelScheme::Simple4(z) => z.r_low,
            LabelScheme::Grid10(g) => g.max_range(),
        }
    }
}

/// Radial risk label: 0 none, 1 high, 2 medium, 3 low. Bands are half-open
/// `[lower, upper)`; targets at or beyond `r_low` count as absent.
pub fn simple_label(target: Option<&TargetState>, zones: &RadialZones) -> u32 {
    let Some(t) = target else { return 0 };
    let r = t.range;
    if r < zones.r_high {
        1
    } else if r < zones.r_med {
        2
    } else if r < zones.r_low {
        3
    } else {
        0
    }
}

/// Grid label `1 + row * 3 + col`, row 0 nearest the radar and col 0 on the
/// left (negative azimuth). Targets outside the grid are label 0.
pub fn grid_label(target: Option<&TargetState>, grid: &GridGeometry) -> u32 {
    let Some(t) = target else { return 0 };
    let (x, y) = t.cartesian();
    let col = ((x - grid.left_edge()) / grid.cell_width).floor();
    let row = ((y - grid.forward_offset) / grid.cell_depth).floor();
    let side = GRID_SIDE as f64;
    if !(0.0..side).contains(&col) || !(0.0..side).contains(&row) {
        return 0;
    }
    1 + row as u32 * GRID_SIDE as u32 + col as u32
}

/// Convert Cartesian `(x, y)` (x lateral, y forward) to `(range, azimuth)`.
pub fn to_polar(x: f64, y: f64) -> (f64, f64) {
    let range = x.hypot(y);
    let azimuth = x.atan2(y).clamp(-FRAC_PI_2, FRAC_PI_2);
    (range, azimuth)
}
