use super::EpiError;
use crate::kv::{KvError, KvFile};
use crate::synthpop::AgeBand;

/// Lognormal sojourn time given by its mean (hours) and log-scale sigma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Duration {
    pub mean_hours: f64,
    pub sigma: f64,
}

impl Duration {
    pub const fn new(mean_hours: f64, sigma: f64) -> Self {
        Duration { mean_hours, sigma }
    }
}

/// Environmental contamination dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentalParams {
    pub deposit_per_infectious_hour: f64,
    pub decay_per_hour: f64,
    pub env_beta: f64,
}

/// Human-to-human transmission dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionParams {
    pub beta_h: f64,
    pub asym_factor: f64,
    pub mask_factor: f64,
}

/// Hospitalization and severity. Age-banded probabilities are indexed by
/// [`AgeBand`].
#[derive(Clone, Debug, PartialEq)]
pub struct SeverityParams {
    pub latent: Duration,
    pub presym: Duration,
    pub asym: Duration,
    pub sym: Duration,
    pub hosp: Duration,
    pub icu: Duration,
    pub p_asym: [f64; 3],
    pub p_hosp: [f64; 3],
    pub p_icu: f64,
    pub p_death_icu: f64,
}

impl SeverityParams {
    pub fn p_asym(&self, band: AgeBand) -> f64 {
        self.p_asym[band as usize]
    }

    pub fn p_hosp(&self, band: AgeBand) -> f64 {
        self.p_hosp[band as usize]
    }
}

/// Testing and mask wearing.
#[derive(Clone, Debug, PartialEq)]
pub struct TestingParams {
    pub test_sensitivity: f64,
    pub test_delay_hours: u64,
    pub mask_adherence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpiParams {
    pub env: EnvironmentalParams,
    pub h2h: TransmissionParams,
    pub severity: SeverityParams,
    pub testing: TestingParams,
}

impl Default for EpiParams {
    fn default() -> Self {
        EpiParams {
            env: EnvironmentalParams {
                deposit_per_infectious_hour: 1.0,
                decay_per_hour: 0.1,
                env_beta: 0.001,
            },
            h2h: TransmissionParams {
                beta_h: 0.028,
                asym_factor: 0.55,
                mask_factor: 0.5,
            },
            severity: SeverityParams {
                latent: Duration::new(120.0, 0.5),
                presym: Duration::new(48.0, 0.5),
                asym: Duration::new(168.0, 0.5),
                sym: Duration::new(168.0, 0.5),
                hosp: Duration::new(192.0, 0.5),
                icu: Duration::new(168.0, 0.5),
                p_asym: [0.4, 0.3, 0.2],
                p_hosp: [0.01, 0.05, 0.20],
                p_icu: 0.25,
                p_death_icu: 0.5,
            },
            testing: TestingParams {
                test_sensitivity: 0.9,
                test_delay_hours: 24,
                mask_adherence: 0.0,
            },
        }
    }
}

const DURATION_NAMES: [&str; 6] = ["latent", "presym", "asym", "sym", "hosp", "icu"];

impl EpiParams {
    /// Parameters with every transmission route switched off.
    pub fn zero_transmission() -> Self {
        let mut p = EpiParams::default();
        p.h2h.beta_h = 0.0;
        p.env.env_beta = 0.0;
        p
    }

    fn durations_mut(&mut self) -> [&mut Duration; 6] {
        let s = &mut self.severity;
        [
            &mut s.latent,
            &mut s.presym,
            &mut s.asym,
            &mut s.sym,
            &mut s.hosp,
            &mut s.icu,
        ]
    }

    fn durations(&self) -> [&Duration; 6] {
        let s = &self.severity;
        [&s.latent, &s.presym, &s.asym, &s.sym, &s.hosp, &s.icu]
    }

    pub fn known_keys() -> Vec<String> {
        let mut keys: Vec<String> = [
            "env.deposit_per_infectious_hour",
            "env.decay_per_hour",
            "env.beta",
            "h2h.beta",
            "h2h.asym_factor",
            "h2h.mask_factor",
            "sev.p_asym",
            "sev.p_hosp",
            "sev.p_icu",
            "sev.p_death_icu",
            "test.sensitivity",
            "test.delay_hours",
            "test.mask_adherence",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        for name in DURATION_NAMES {
            keys.push(format!("sev.{name}_mean"));
            keys.push(format!("sev.{name}_sigma"));
        }
        keys
    }

    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<(), KvError> {
        kv.set(
            "env.deposit_per_infectious_hour",
            &mut self.env.deposit_per_infectious_hour,
        )?;
        kv.set("env.decay_per_hour", &mut self.env.decay_per_hour)?;
        kv.set("env.beta", &mut self.env.env_beta)?;
        kv.set("h2h.beta", &mut self.h2h.beta_h)?;
        kv.set("h2h.asym_factor", &mut self.h2h.asym_factor)?;
        kv.set("h2h.mask_factor", &mut self.h2h.mask_factor)?;
        for (name, d) in DURATION_NAMES.iter().zip(self.durations_mut()) {
            kv.set(&format!("sev.{name}_mean"), &mut d.mean_hours)?;
            kv.set(&format!("sev.{name}_sigma"), &mut d.sigma)?;
        }
        for (key, slot) in [
            ("sev.p_asym", &mut self.severity.p_asym),
            ("sev.p_hosp", &mut self.severity.p_hosp),
        ] {
            if let Some(v) = kv.get_list(key)? {
                *slot = v
                    .try_into()
                    .map_err(|_| KvError::Invalid(format!("{key} needs one value per age band (3)")))?;
            }
        }
        kv.set("sev.p_icu", &mut self.severity.p_icu)?;
        kv.set("sev.p_death_icu", &mut self.severity.p_death_icu)?;
        kv.set("test.sensitivity", &mut self.testing.test_sensitivity)?;
        kv.set("test.delay_hours", &mut self.testing.test_delay_hours)?;
        kv.set("test.mask_adherence", &mut self.testing.mask_adherence)?;
        Ok(())
    }

    /// Flat `key = value` lines in the same form `apply_kv` reads.
    pub fn to_entries(&self) -> Vec<(String, String)> {
        let list = |v: &[f64; 3]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut e = vec![
            (
                "env.deposit_per_infectious_hour".to_string(),
                self.env.deposit_per_infectious_hour.to_string(),
            ),
            ("env.decay_per_hour".to_string(), self.env.decay_per_hour.to_string()),
            ("env.beta".to_string(), self.env.env_beta.to_string()),
            ("h2h.beta".to_string(), self.h2h.beta_h.to_string()),
            ("h2h.asym_factor".to_string(), self.h2h.asym_factor.to_string()),
            ("h2h.mask_factor".to_string(), self.h2h.mask_factor.to_string()),
        ];
        for (name, d) in DURATION_NAMES.iter().zip(self.durations()) {
            e.push((format!("sev.{name}_mean"), d.mean_hours.to_string()));
            e.push((format!("sev.{name}_sigma"), d.sigma.to_string()));
        }
        e.push(("sev.p_asym".into(), list(&self.severity.p_asym)));
        e.push(("sev.p_hosp".into(), list(&self.severity.p_hosp)));
        e.push(("sev.p_icu".into(), self.severity.p_icu.to_string()));
        e.push(("sev.p_death_icu".into(), self.severity.p_death_icu.to_string()));
        e.push(("test.sensitivity".into(), self.testing.test_sensitivity.to_string()));
        e.push(("test.delay_hours".into(), self.testing.test_delay_hours.to_string()));
        e.push(("test.mask_adherence".into(), self.testing.mask_adherence.to_string()));
        e
    }

    pub fn check(&self) -> Result<(), EpiError> {
        let bad = |m: String| Err(EpiError::InvalidParams(m));
        let mut probs = vec![
            ("h2h.beta", self.h2h.beta_h),
            ("h2h.asym_factor", self.h2h.asym_factor),
            ("h2h.mask_factor", self.h2h.mask_factor),
            ("sev.p_icu", self.severity.p_icu),
            ("sev.p_death_icu", self.severity.p_death_icu),
            ("test.sensitivity", self.testing.test_sensitivity),
            ("test.mask_adherence", self.testing.mask_adherence),
        ];
        for b in 0..3 {
            probs.push(("sev.p_asym", self.severity.p_asym[b]));
            probs.push(("sev.p_hosp", self.severity.p_hosp[b]));
        }
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        let decay = self.env.decay_per_hour;
        if !(decay > 0.0 && decay < 1.0) {
            return bad(format!("env.decay_per_hour = {decay} must lie in (0, 1)"));
        }
        if !(self.env.deposit_per_infectious_hour >= 0.0 && self.env.env_beta >= 0.0) {
            return bad("environmental deposit and beta must be non-negative".into());
        }
        for (name, d) in DURATION_NAMES.iter().zip(self.durations()) {
            if !(d.mean_hours > 0.0 && d.mean_hours.is_finite()) || !(d.sigma >= 0.0 && d.sigma.is_finite()) {
                return bad(format!("{name} duration needs mean > 0 and sigma >= 0"));
            }
        }
        Ok(())
    }
}
