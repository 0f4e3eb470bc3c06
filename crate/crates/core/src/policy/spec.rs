//! Policy files, e.g.
//!
//! ```text
//! policy = realistic_lockdown
//! policy.essential_fraction = 0.10
//! policy.daily_tests = 20
//! testing = partial
//! dynlock.death_threshold = 3
//! ```

use super::{DynamicLockdown, Measure, Policy, TestBudget, TestingStrategy};
use crate::kv::{KvError, KvFile};

const KEYS: [&str; 13] = [
    "policy",
    "policy.essential_fraction",
    "policy.daily_tests",
    "policy.start_cycle",
    "policy.min_age",
    "late.trigger_cycle",
    "late.inner",
    "testing",
    "testing.daily_tests",
    "testing.daily_tests_per_1000",
    "dynlock.death_threshold",
    "dynlock.duration_hours",
    "dynlock.review_interval_hours",
];

fn measure_named(name: &str, kv: &KvFile) -> Result<Measure, KvError> {
    Ok(match name {
        "no_containment" | "none" => Measure::NoContainment,
        "school_closure" => Measure::SchoolClosure,
        "home_containment" => Measure::HomeContainment,
        "family_containment" => Measure::FamilyContainment,
        "realistic_lockdown" => {
            let Measure::RealisticLockdown {
                mut essential_fraction,
                mut daily_tests,
                mut start_cycle,
            } = Measure::realistic_lockdown_default()
            else {
                unreachable!()
            };
            kv.set("policy.essential_fraction", &mut essential_fraction)?;
            kv.set("policy.daily_tests", &mut daily_tests)?;
            kv.set("policy.start_cycle", &mut start_cycle)?;
            Measure::RealisticLockdown {
                essential_fraction,
                daily_tests,
                start_cycle,
            }
        }
        "dynamic_spatial_lockdown" => {
            let mut d = DynamicLockdown::default();
            kv.set("dynlock.death_threshold", &mut d.death_threshold)?;
            kv.set("dynlock.duration_hours", &mut d.lockdown_duration_hours)?;
            kv.set("dynlock.review_interval_hours", &mut d.review_interval_hours)?;
            if d.review_interval_hours == 0 {
                return Err(KvError::Invalid(
                    "dynlock.review_interval_hours must be positive".into(),
                ));
            }
            Measure::DynamicSpatialLockdown(d)
        }
        "age_containment" => {
            let mut min_age = 60u8;
            kv.set("policy.min_age", &mut min_age)?;
            Measure::AgeContainment { min_age }
        }
        other => return Err(KvError::Invalid(format!("unknown policy `{other}`"))),
    })
}

impl Policy {
    pub fn from_kv(kv: &KvFile) -> Result<Policy, KvError> {
        if let Some(k) = kv.keys().find(|k| !KEYS.contains(k)) {
            return Err(KvError::UnknownKey(k.to_string()));
        }
        let name = kv.raw("policy").ok_or_else(|| KvError::Missing("policy".into()))?;
        let measure = if name == "late_lockdown" {
            let Measure::LateLockdown {
                mut trigger_cycle,
                inner,
            } = Measure::late_lockdown_default()
            else {
                unreachable!()
            };
            kv.set("late.trigger_cycle", &mut trigger_cycle)?;
            let inner = match kv.raw("late.inner") {
                Some("late_lockdown") => return Err(KvError::Invalid("late lockdowns cannot nest".into())),
                Some(n) => Box::new(measure_named(n, kv)?),
                None => inner,
            };
            Measure::LateLockdown { trigger_cycle, inner }
        } else {
            measure_named(name, kv)?
        };

        let budget = match (
            kv.get::<u32>("testing.daily_tests")?,
            kv.get::<f64>("testing.daily_tests_per_1000")?,
        ) {
            (Some(_), Some(_)) => {
                return Err(KvError::Invalid(
                    "set either testing.daily_tests or testing.daily_tests_per_1000".into(),
                ))
            }
            (Some(n), None) => Some(TestBudget::Absolute(n)),
            (None, Some(r)) => Some(TestBudget::PerThousand(r)),
            (None, None) => None,
        };
        let lockdown_tests = match &measure {
            Measure::RealisticLockdown { daily_tests, .. } => Some(*daily_tests),
            _ => None,
        };
        let testing = match kv.raw("testing") {
            Some("none") => TestingStrategy::NoTesting,
            Some("mass") => TestingStrategy::MassTesting,
            Some("partial") => TestingStrategy::PartialTesting {
                daily_tests: budget.unwrap_or(TestBudget::Absolute(lockdown_tests.unwrap_or(20))),
            },
            Some(other) => return Err(KvError::Invalid(format!("unknown testing strategy `{other}`"))),
            // A realistic lockdown comes with its own daily test budget.
            None => match lockdown_tests {
                Some(n) => TestingStrategy::PartialTesting {
                    daily_tests: budget.unwrap_or(TestBudget::Absolute(n)),
                },
                None => TestingStrategy::NoTesting,
            },
        };
        let policy = Policy { measure, testing };
        policy.check().map_err(|e| KvError::Invalid(e.to_string()))?;
        Ok(policy)
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        fn measure_entries(m: &Measure, push: &mut dyn FnMut(&str, String)) {
            match m {
                Measure::RealisticLockdown {
                    essential_fraction,
                    daily_tests,
                    start_cycle,
                } => {
                    push("policy.essential_fraction", essential_fraction.to_string());
                    push("policy.daily_tests", daily_tests.to_string());
                    push("policy.start_cycle", start_cycle.to_string());
                }
                Measure::DynamicSpatialLockdown(d) => {
                    push("dynlock.death_threshold", d.death_threshold.to_string());
                    push("dynlock.duration_hours", d.lockdown_duration_hours.to_string());
                    push("dynlock.review_interval_hours", d.review_interval_hours.to_string());
                }
                Measure::AgeContainment { min_age } => push("policy.min_age", min_age.to_string()),
                _ => {}
            }
        }
        push("policy", self.measure.name().to_string());
        if let Measure::LateLockdown { trigger_cycle, inner } = &self.measure {
            push("late.trigger_cycle", trigger_cycle.to_string());
            push("late.inner", inner.name().to_string());
            measure_entries(inner, &mut push);
        } else {
            measure_entries(&self.measure, &mut push);
        }
        push("testing", self.testing.name().to_string());
        if let TestingStrategy::PartialTesting { daily_tests } = self.testing {
            match daily_tests {
                TestBudget::Absolute(n) => push("testing.daily_tests", n.to_string()),
                TestBudget::PerThousand(r) => push("testing.daily_tests_per_1000", r.to_string()),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Policy, KvError> {
        Policy::from_kv(&KvFile::parse(text).unwrap())
    }

    #[test]
    fn realistic_lockdown_file() {
        let p =
            parse("policy = realistic_lockdown\npolicy.essential_fraction = 0.10\npolicy.daily_tests = 20\n").unwrap();
        assert_eq!(
            p.measure,
            Measure::RealisticLockdown {
                essential_fraction: 0.10,
                daily_tests: 20,
                start_cycle: 360
            }
        );
        assert_eq!(p.testing, TestingStrategy::partial(20));
    }

    #[test]
    fn late_lockdown_and_dynlock() {
        let p = parse("policy = late_lockdown\nlate.trigger_cycle = 100\nlate.inner = home_containment\ntesting = partial\ntesting.daily_tests = 5").unwrap();
        assert_eq!(
            p.measure,
            Measure::LateLockdown {
                trigger_cycle: 100,
                inner: Box::new(Measure::HomeContainment)
            }
        );
        assert_eq!(p.testing, TestingStrategy::partial(5));
        let d = parse("policy = dynamic_spatial_lockdown\ndynlock.death_threshold = 1").unwrap();
        assert_eq!(
            d.measure,
            Measure::DynamicSpatialLockdown(DynamicLockdown {
                death_threshold: 1,
                ..DynamicLockdown::default()
            })
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("testing = mass"), Err(KvError::Missing(_))));
        assert!(matches!(parse("policy = martial_law"), Err(KvError::Invalid(_))));
        assert!(matches!(parse("policy = none\nbogus = 1"), Err(KvError::UnknownKey(_))));
        assert!(parse("policy = late_lockdown\nlate.inner = late_lockdown").is_err());
        assert!(parse("policy = realistic_lockdown\npolicy.essential_fraction = 1.5").is_err());
    }

    #[test]
    fn entries_round_trip() {
        for text in [
            "policy = realistic_lockdown\npolicy.start_cycle = 5",
            "policy = late_lockdown\nlate.inner = age_containment\npolicy.min_age = 65\ntesting = mass",
            "policy = family_containment\ntesting = partial\ntesting.daily_tests_per_1000 = 12.5",
            "policy = dynamic_spatial_lockdown",
        ] {
            let p = parse(text).unwrap();
            let again = parse(&crate::kv::render(&p.to_entries())).unwrap();
            assert_eq!(p, again, "{text}");
        }
    }
}
