//! Intervention policies and the testing/containment authority.
//!
//! A [`Policy`] pairs a containment [`Measure`] with an orthogonal
//! [`TestingStrategy`]. Mobility filtering is a pure function of the agent,
//! the authority snapshot and the cycle; the authority itself only changes
//! at the daily testing hour and the lockdown review hour.

mod authority;
mod mobility;
mod spec;

use thiserror::Error;

use crate::ids::Cycle;

pub use authority::{
    apply_positive, run_daily_tests, update_dynamic_lockdown, AuthorityState, PendingResult, TestOutcome,
    QUARANTINE_HOURS,
};
pub use mobility::{allowed_destination, MobilityContext};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("unknown individual {0}")]
    UnknownIndividual(u32),
    #[error("invalid policy: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicLockdown {
    /// Cumulative deaths among a block's residents that trigger the first
    /// lock. The k-th relock needs `2 * k * death_threshold`.
    pub death_threshold: u32,
    pub lockdown_duration_hours: u64,
    pub review_interval_hours: u64,
}

impl Default for DynamicLockdown {
    fn default() -> Self {
        DynamicLockdown {
            death_threshold: 3,
            lockdown_duration_hours: 14 * 24,
            review_interval_hours: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    NoContainment,
    SchoolClosure,
    /// Everyone except essential workers stays home.
    HomeContainment,
    RealisticLockdown {
        essential_fraction: f64,
        daily_tests: u32,
        start_cycle: Cycle,
    },
    /// Household quarantined when a member tests positive.
    FamilyContainment,
    DynamicSpatialLockdown(DynamicLockdown),
    /// People at or above `min_age` stay home.
    AgeContainment {
        min_age: u8,
    },
    /// No containment before `trigger_cycle`, `inner` from then on.
    LateLockdown {
        trigger_cycle: Cycle,
        inner: Box<Measure>,
    },
}

impl Measure {
    pub fn realistic_lockdown_default() -> Self {
        Measure::RealisticLockdown {
            essential_fraction: 0.10,
            daily_tests: 20,
            start_cycle: 15 * 24,
        }
    }

    pub fn late_lockdown_default() -> Self {
        Measure::LateLockdown {
            trigger_cycle: 30 * 24,
            inner: Box::new(Measure::HomeContainment),
        }
    }

    /// The measure in force at `cycle`, with late lockdowns resolved.
    pub fn active(&self, cycle: Cycle) -> &Measure {
        match self {
            Measure::LateLockdown { trigger_cycle, inner } => {
                if cycle >= *trigger_cycle {
                    inner
                } else {
                    &Measure::NoContainment
                }
            }
            m => m,
        }
    }

    pub fn quarantines_households(&self, cycle: Cycle) -> bool {
        matches!(self.active(cycle), Measure::FamilyContainment)
    }

    pub fn dynamic_lockdown(&self, cycle: Cycle) -> Option<&DynamicLockdown> {
        match self.active(cycle) {
            Measure::DynamicSpatialLockdown(d) => Some(d),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::NoContainment => "no_containment",
            Measure::SchoolClosure => "school_closure",
            Measure::HomeContainment => "home_containment",
            Measure::RealisticLockdown { .. } => "realistic_lockdown",
            Measure::FamilyContainment => "family_containment",
            Measure::DynamicSpatialLockdown(_) => "dynamic_spatial_lockdown",
            Measure::AgeContainment { .. } => "age_containment",
            Measure::LateLockdown { .. } => "late_lockdown",
        }
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        match self {
            Measure::RealisticLockdown { essential_fraction, .. } if !(0.0..=1.0).contains(essential_fraction) => Err(
                PolicyError::Invalid(format!("essential_fraction {essential_fraction} outside [0, 1]")),
            ),
            Measure::LateLockdown { inner, .. } => {
                if matches!(**inner, Measure::LateLockdown { .. }) {
                    return Err(PolicyError::Invalid("late lockdowns cannot nest".into()));
                }
                inner.check()
            }
            _ => Ok(()),
        }
    }
}

/// Daily test budget, either absolute or scaled with population.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestBudget {
    Absolute(u32),
    PerThousand(f64),
}

impl TestBudget {
    pub fn resolve(self, population: usize) -> u32 {
        match self {
            TestBudget::Absolute(n) => n,
            TestBudget::PerThousand(r) => (r * population as f64 / 1000.0).round().max(0.0) as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestingStrategy {
    NoTesting,
    PartialTesting { daily_tests: TestBudget },
    MassTesting,
}

impl TestingStrategy {
    pub fn partial(daily_tests: u32) -> Self {
        TestingStrategy::PartialTesting {
            daily_tests: TestBudget::Absolute(daily_tests),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestingStrategy::NoTesting => "none",
            TestingStrategy::PartialTesting { .. } => "partial",
            TestingStrategy::MassTesting => "mass",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub measure: Measure,
    pub testing: TestingStrategy,
}

impl Policy {
    pub fn new(measure: Measure, testing: TestingStrategy) -> Self {
        Policy { measure, testing }
    }

    pub fn none() -> Self {
        Policy::new(Measure::NoContainment, TestingStrategy::NoTesting)
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        self.measure.check()?;
        if let TestingStrategy::PartialTesting {
            daily_tests: TestBudget::PerThousand(r),
        } = self.testing
        {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(PolicyError::Invalid(format!(
                    "per-1000 test rate {r} must be non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuarantineKind {
    Free,
    HomeQuarantine,
    BlockLockdown,
}

/// `until: None` means open-ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuarantineStatus {
    pub kind: QuarantineKind,
    pub until: Option<Cycle>,
}

impl QuarantineStatus {
    pub const fn free() -> Self {
        QuarantineStatus {
            kind: QuarantineKind::Free,
            until: None,
        }
    }

    pub fn is_confined(&self, cycle: Cycle) -> bool {
        self.kind != QuarantineKind::Free && self.until.is_none_or(|u| cycle < u)
    }

    pub fn is_home_quarantined(&self, cycle: Cycle) -> bool {
        self.kind == QuarantineKind::HomeQuarantine && self.is_confined(cycle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn late_lockdown_switches_at_trigger() {
        let m = Measure::late_lockdown_default();
        assert_eq!(m.active(719), &Measure::NoContainment);
        assert_eq!(m.active(720), &Measure::HomeContainment);
    }

    #[test]
    fn nested_late_lockdown_rejected() {
        let m = Measure::LateLockdown {
            trigger_cycle: 1,
            inner: Box::new(Measure::late_lockdown_default()),
        };
        assert!(m.check().is_err());
    }

    #[test]
    fn quarantine_window() {
        let q = QuarantineStatus {
            kind: QuarantineKind::HomeQuarantine,
            until: Some(10),
        };
        assert!(q.is_confined(9));
        assert!(!q.is_confined(10));
        assert!(!QuarantineStatus::free().is_confined(0));
    }

    #[test]
    fn per_capita_budget() {
        assert_eq!(TestBudget::PerThousand(20.0).resolve(1000), 20);
        assert_eq!(TestBudget::PerThousand(20.0).resolve(250), 5);
        assert_eq!(TestBudget::Absolute(7).resolve(1), 7);
    }
}
