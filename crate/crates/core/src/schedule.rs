//! Decreasing tolerance sequences `ε_k` for the inexact solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance cap; also the tolerance used by "exact" methods.
pub const TOLERANCE_FLOOR: f64 = 1e-12;
/// First tolerance `ε_1` of every decreasing schedule.
pub const DEFAULT_SCALE: f64 = 0.1;
pub const DEFAULT_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `c · k⁻²`
    Quadratic,
    /// `c · k⁻³`
    Cubic,
    /// `c · ρ^(k − offset)`
    Exponential,
    /// The floor at every iteration.
    Exact,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Quadratic,
        ScheduleKind::Cubic,
        ScheduleKind::Exponential,
        ScheduleKind::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Quadratic => "quadratic",
            ScheduleKind::Cubic => "cubic",
            ScheduleKind::Exponential => "exponential",
            ScheduleKind::Exact => "exact",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScheduleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown schedule kind {s:?}")))
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSchedule {
    pub kind: ScheduleKind,
    pub scale: f64,
    pub ratio: f64,
    pub floor: f64,
    /// Exponent offset of the exponential kind: `ε_k = c · ρ^(k − offset)`.
    /// The default of 1 gives `ε_1 = c`; 0 gives `ε_k = c · ρ^k`.
    pub exponent_offset: i32,
}

impl ToleranceSchedule {
    pub fn new(kind: ScheduleKind) -> Self {
        Self {
            kind,
            scale: DEFAULT_SCALE,
            ratio: DEFAULT_RATIO,
            floor: TOLERANCE_FLOOR,
            exponent_offset: 1,
        }
    }

    pub fn quadratic() -> Self {
        Self::new(ScheduleKind::Quadratic)
    }

    pub fn cubic() -> Self {
        Self::new(ScheduleKind::Cubic)
    }

    pub fn exponential() -> Self {
        Self::new(ScheduleKind::Exponential)
    }

    pub fn exact() -> Self {
        Self::new(ScheduleKind::Exact)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("schedule scale must be positive, got {}", self.scale)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("schedule ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::InvalidConfig(format!("schedule floor must be positive, got {}", self.floor)));
        }
        Ok(())
    }

    /// The sequence before the floor is applied.
    pub fn raw(&self, k: usize) -> f64 {
        assert!(k >= 1, "tolerance schedules are indexed from k = 1");
        let kf = k as f64;
        match self.kind {
            ScheduleKind::Quadratic => self.scale / (kf * kf),
            ScheduleKind::Cubic => self.scale / (kf * kf * kf),
            ScheduleKind::Exponential => {
                self.scale * self.ratio.powi(k as i32 - self.exponent_offset)
            }
            ScheduleKind::Exact => self.floor,
        }
    }

    /// `ε_k = max(floor, raw(k))`.
    pub fn tolerance_at(&self, k: usize) -> f64 {
        self.raw(k).max(self.floor)
    }

    pub fn is_exact(&self) -> bool {
        self.kind == ScheduleKind::Exact
    }
}

/// Free-function form of [`ToleranceSchedule::tolerance_at`].
pub fn tolerance_at(schedule: &ToleranceSchedule, k: usize) -> f64 {
    schedule.tolerance_at(k)
}
