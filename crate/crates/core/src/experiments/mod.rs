//! Multi-seed policy comparisons.
//!
//! Every arm of an experiment runs on the same seeds. For a given seed the
//! region, population, agendas and initial infections are built once and
//! shared, so arms differ only through the effects of their policies.

mod chart;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::engine::RegionSource;
use crate::engine::{run_scenario, summarize, Scenario, SimConfig, SimError, Summary, TimeSeriesRecord, CSV_HEADER};
use crate::policy::{DynamicLockdown, Measure, Policy, TestingStrategy};

pub use chart::{line_chart, Series};

pub const DEFAULT_SEEDS: u64 = 10;
/// Start of the realistic lockdown in the containments experiment (day 15).
pub const REALISTIC_LOCKDOWN_START: u64 = 15 * 24;
/// Trigger of the late lockdown in the realistic-actions experiment (day 30).
pub const LATE_LOCKDOWN_TRIGGER: u64 = 30 * 24;
pub const DAILY_TESTS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentName {
    ThreeMeasures,
    Containments,
    RealisticActions,
    Custom,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::ThreeMeasures => "three_measures",
            ExperimentName::Containments => "containments",
            ExperimentName::RealisticActions => "realistic_actions",
            ExperimentName::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub label: String,
    pub policy: Policy,
}

impl Arm {
    pub fn new(label: &str, policy: Policy) -> Self {
        Arm {
            label: label.to_string(),
            policy,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub arms: Vec<Arm>,
    pub seeds: Vec<u64>,
    /// Everything but the seed and the policy.
    pub base: SimConfig,
}

pub fn default_seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, arms: Vec<Arm>, base: SimConfig) -> Self {
        ExperimentSpec {
            name,
            arms,
            seeds: default_seeds(DEFAULT_SEEDS),
            base,
        }
    }

    pub fn three_measures(base: SimConfig) -> Self {
        let arm = |label, m| Arm::new(label, Policy::new(m, TestingStrategy::NoTesting));
        ExperimentSpec::new(
            ExperimentName::ThreeMeasures,
            vec![
                arm("NoContainment", Measure::NoContainment),
                arm("SchoolClosure", Measure::SchoolClosure),
                arm("HomeContainment", Measure::HomeContainment),
            ],
            base,
        )
    }

    pub fn containments(base: SimConfig) -> Self {
        let essential_fraction = base.population.essential_worker_fraction;
        ExperimentSpec::new(
            ExperimentName::Containments,
            vec![
                Arm::new("NoContainment", Policy::none()),
                Arm::new(
                    "RealisticLockdown",
                    Policy::new(
                        Measure::RealisticLockdown {
                            essential_fraction,
                            daily_tests: DAILY_TESTS,
                            start_cycle: REALISTIC_LOCKDOWN_START,
                        },
                        TestingStrategy::partial(DAILY_TESTS),
                    ),
                ),
                Arm::new(
                    "FamilyContainment",
                    Policy::new(Measure::FamilyContainment, TestingStrategy::partial(DAILY_TESTS)),
                ),
                Arm::new(
                    "DynamicSpatialLockdown",
                    Policy::new(
                        Measure::DynamicSpatialLockdown(DynamicLockdown::default()),
                        TestingStrategy::NoTesting,
                    ),
                ),
            ],
            base,
        )
    }

    pub fn realistic_actions(base: SimConfig) -> Self {
        ExperimentSpec::new(
            ExperimentName::RealisticActions,
            vec![
                Arm::new("NoPolicy", Policy::none()),
                Arm::new(
                    "LimitedTestsLateLockdown",
                    Policy::new(
                        Measure::LateLockdown {
                            trigger_cycle: LATE_LOCKDOWN_TRIGGER,
                            inner: Box::new(Measure::HomeContainment),
                        },
                        TestingStrategy::partial(DAILY_TESTS),
                    ),
                ),
                Arm::new(
                    "MassTestingHouseholdQuarantine",
                    Policy::new(Measure::FamilyContainment, TestingStrategy::MassTesting),
                ),
                Arm::new(
                    "NoTestsRiskyStayHome",
                    Policy::new(Measure::AgeContainment { min_age: 60 }, TestingStrategy::NoTesting),
                ),
            ],
            base,
        )
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn labels(&self) -> Vec<&str> {
        self.arms.iter().map(|a| a.label.as_str()).collect()
    }

    fn config(&self, arm: usize, seed: u64) -> SimConfig {
        SimConfig {
            seed,
            policy: self.arms[arm].policy.clone(),
            ..self.base.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.arms.len() < 2 {
            return Err(SimError::Config("an experiment needs at least two arms".into()));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Config("an experiment needs at least one seed".into()));
        }
        let mut seen = BTreeSet::new();
        for arm in &self.arms {
            let ok = !arm.label.is_empty()
                && arm
                    .label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(SimError::Config(format!(
                    "arm label `{}` must be non-empty ASCII letters, digits, `_` or `-`",
                    arm.label
                )));
            }
            if !seen.insert(arm.label.as_str()) {
                return Err(SimError::Config(format!("duplicate arm label `{}`", arm.label)));
            }
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(SimError::Config("duplicate seeds".into()));
        }
        for a in 0..self.arms.len() {
            self.config(a, self.seeds[0]).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ComparisonResult {
    pub name: ExperimentName,
    pub labels: Vec<String>,
    pub seeds: Vec<u64>,
    /// `runs[arm][seed_index]`, each `n_cycles + 1` records long.
    pub runs: Vec<Vec<Vec<TimeSeriesRecord>>>,
    pub median_infected: Vec<Vec<f64>>,
    pub median_deaths: Vec<Vec<f64>>,
    /// `summaries[arm][seed_index]`.
    pub summaries: Vec<Vec<Summary>>,
}

/// Median of a non-empty sample; the mean of the middle pair for even sizes.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn elementwise_median(runs: &[Vec<TimeSeriesRecord>], metric: impl Fn(&TimeSeriesRecord) -> u32) -> Vec<f64> {
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    let mut column = vec![0.0; runs.len()];
    (0..len)
        .map(|t| {
            for (slot, run) in column.iter_mut().zip(runs) {
                *slot = f64::from(metric(&run[t]));
            }
            median(&mut column)
        })
        .collect()
}

impl ComparisonResult {
    pub fn arm(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Median over seeds of the final cumulative death count.
    pub fn median_total_deaths(&self, arm: usize) -> f64 {
        let mut v: Vec<f64> = self.summaries[arm].iter().map(|s| f64::from(s.total_deaths)).collect();
        median(&mut v)
    }

    pub fn median_peak_infected(&self, arm: usize) -> f64 {
        let mut v: Vec<f64> = self.summaries[arm]
            .iter()
            .map(|s| f64::from(s.peak_infected.0))
            .collect();
        median(&mut v)
    }

    pub fn median_peak_cycle(&self, arm: usize) -> f64 {
        let mut v: Vec<f64> = self.summaries[arm].iter().map(|s| s.peak_infected.1 as f64).collect();
        median(&mut v)
    }

    /// Merged CSV: `cycle,<arm>_infected,<arm>_cum_deaths,...` of medians.
    pub fn merged_csv(&self) -> String {
        let mut out = String::from("cycle");
        for l in &self.labels {
            let _ = write!(out, ",{l}_infected,{l}_cum_deaths");
        }
        out.push('\n');
        let len = self.median_infected.iter().map(Vec::len).min().unwrap_or(0);
        for t in 0..len {
            let _ = write!(out, "{t}");
            for a in 0..self.labels.len() {
                let _ = write!(
                    out,
                    ",{:.1},{:.1}",
                    self.median_infected[a][t], self.median_deaths[a][t]
                );
            }
            out.push('\n');
        }
        out
    }

    /// All seeds of one arm, each row prefixed with its seed.
    pub fn raw_csv(&self, arm: usize) -> String {
        let mut out = format!("seed,{CSV_HEADER}\n");
        for (seed, run) in self.seeds.iter().zip(&self.runs[arm]) {
            let mut row = String::new();
            for r in run {
                row.clear();
                crate::engine::write_csv_row(&mut row, r);
                let _ = write!(out, "{seed},{row}");
            }
        }
        out
    }
}

/// Runs every (arm, seed) pair on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ComparisonResult, SimError> {
    spec.validate()?;
    let scenarios: Vec<Scenario> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            Scenario::build(&SimConfig {
                seed,
                ..spec.base.clone()
            })
        })
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..spec.arms.len())
        .flat_map(|a| (0..spec.seeds.len()).map(move |s| (a, s)))
        .collect();
    let mut flat: Vec<Vec<TimeSeriesRecord>> = jobs
        .par_iter()
        .map(|&(a, s)| {
            log::debug!(
                "{} arm {} seed {}",
                spec.name.as_str(),
                spec.arms[a].label,
                spec.seeds[s]
            );
            run_scenario(&scenarios[s], &spec.config(a, spec.seeds[s]))
        })
        .collect::<Result<_, _>>()?;

    let n_seeds = spec.seeds.len();
    let mut runs = Vec::with_capacity(spec.arms.len());
    for _ in 0..spec.arms.len() {
        runs.push(flat.drain(..n_seeds).collect::<Vec<_>>());
    }
    let median_infected = runs
        .iter()
        .map(|r| elementwise_median(r, TimeSeriesRecord::infected))
        .collect();
    let median_deaths = runs
        .iter()
        .map(|r| elementwise_median(r, |x| x.cumulative_deaths))
        .collect();
    let summaries = runs.iter().map(|r| r.iter().map(|x| summarize(x)).collect()).collect();
    Ok(ComparisonResult {
        name: spec.name,
        labels: spec.arms.iter().map(|a| a.label.clone()).collect(),
        seeds: spec.seeds.clone(),
        runs,
        median_infected,
        median_deaths,
        summaries,
    })
}

fn entries_json(entries: Vec<(String, String)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k, Value::String(v))).collect())
}

fn config_json(base: &SimConfig) -> Value {
    let region = match &base.region {
        RegionSource::Generate(s) => json!({
            "source": "synthetic",
            "population": s.total_population,
            "blocks": s.blocks,
            "buildings": s.buildings,
            "width_m": s.width_m,
            "height_m": s.height_m,
            "grid_cell_m": s.grid_cell_m,
            "type_mix": s.mix.0.to_vec(),
        }),
        RegionSource::Load(dir) => json!({ "source": dir.display().to_string() }),
    };
    let p = &base.population;
    json!({
        "n_cycles": base.n_cycles,
        "initial_infected": base.initial_infected,
        "assert_invariants": base.assert_invariants,
        "region": region,
        "population": {
            "age_band_weights": p.age_band_weights.to_vec(),
            "household_size_pmf": p.household_size_pmf,
            "essential_worker_fraction": p.essential_worker_fraction,
            "employment_rate": p.employment_rate,
            "senior_employment_rate": p.senior_employment_rate,
            "tertiary_student_rate": p.tertiary_student_rate,
            "evening_home_p": p.agenda.evening_home_p,
            "evening_shop_p": p.agenda.evening_shop_p,
            "evening_leisure_p": p.agenda.evening_leisure_p,
            "trip_radius_m": p.agenda.trip_radius_m,
            "nearest_school_p": p.agenda.nearest_school_p,
        },
        "epi": entries_json(base.epi.to_entries()),
    })
}

/// Run metadata: tool version, full configuration, seeds, arms and summary
/// medians.
pub fn manifest(spec: &ExperimentSpec, result: &ComparisonResult) -> Value {
    let arms: Vec<Value> = spec
        .arms
        .iter()
        .enumerate()
        .map(|(a, arm)| {
            json!({
                "label": arm.label,
                "policy": entries_json(arm.policy.to_entries()),
                "median_total_deaths": result.median_total_deaths(a),
                "median_peak_infected": result.median_peak_infected(a),
                "median_peak_cycle": result.median_peak_cycle(a),
            })
        })
        .collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": spec.name.as_str(),
        "seeds": spec.seeds,
        "config": config_json(&spec.base),
        "arms": arms,
    })
}

/// Writes raw per-arm CSVs, the merged CSV, two charts and `manifest.json`.
/// Returns the paths in write order.
pub fn write_outputs(spec: &ExperimentSpec, result: &ComparisonResult, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let name = result.name.as_str();
    let mut written = Vec::new();
    let mut put = |file: String, body: &str| -> io::Result<()> {
        let path = out_dir.join(file);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for (a, label) in result.labels.iter().enumerate() {
        put(format!("{name}_{label}.csv"), &result.raw_csv(a))?;
    }
    put(format!("{name}.csv"), &result.merged_csv())?;
    for (metric, title, data) in [
        ("infected", "Infected (median over seeds)", &result.median_infected),
        (
            "cum_deaths",
            "Cumulative deaths (median over seeds)",
            &result.median_deaths,
        ),
    ] {
        let series: Vec<Series> = result
            .labels
            .iter()
            .zip(data)
            .map(|(label, values)| Series { label, values })
            .collect();
        put(
            format!("{name}_{metric}.svg"),
            &line_chart(&format!("{name}: {title}"), metric, &series),
        )?;
    }
    let mut text = serde_json::to_string_pretty(&manifest(spec, result)).map_err(io::Error::other)?;
    text.push('\n');
    put("manifest.json".into(), &text)?;
    Ok(written)
}
