use std::fmt::Write as _;

use crate::epi::Compartment;
use crate::ids::Cycle;

/// Snapshot emitted once per cycle, cycle 0 included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeSeriesRecord {
    pub cycle: Cycle,
    /// Indexed by `Compartment as usize`.
    pub counts: [u32; 9],
    /// Infections that took effect at this cycle. Cycle 0 counts the seeds.
    pub new_infections: u32,
    pub cumulative_deaths: u32,
    pub per_block_cum_deaths: Vec<u32>,
    pub tests_today: u32,
    pub locked_blocks: u32,
}

impl TimeSeriesRecord {
    pub fn count(&self, c: Compartment) -> u32 {
        self.counts[c as usize]
    }

    pub fn population(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Presymptomatic, asymptomatic, symptomatic, hospitalized and ICU.
    pub fn infected(&self) -> u32 {
        Compartment::ALL
            .into_iter()
            .filter(|c| c.is_infectious())
            .map(|c| self.count(c))
            .sum()
    }

    /// Everyone who has left the susceptible compartment.
    pub fn ever_infected(&self) -> u32 {
        self.population() - self.count(Compartment::Susceptible)
    }
}

pub const CSV_HEADER: &str = "cycle,S,L,PreSym,Asym,Sym,Hosp,ICU,R,D,new_inf,cum_deaths,tests_today,locked_blocks";

pub fn write_csv_row(out: &mut String, r: &TimeSeriesRecord) {
    let _ = write!(out, "{}", r.cycle);
    for c in r.counts {
        let _ = write!(out, ",{c}");
    }
    let _ = writeln!(
        out,
        ",{},{},{},{}",
        r.new_infections, r.cumulative_deaths, r.tests_today, r.locked_blocks
    );
}

/// The determinism artifact: integers only, LF line endings.
pub fn records_to_csv(records: &[TimeSeriesRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        write_csv_row(&mut out, r);
    }
    out
}

/// `cycle,block_id,cum_deaths`, one row per block per cycle.
pub fn block_deaths_to_csv(records: &[TimeSeriesRecord]) -> String {
    let mut out = String::from("cycle,block_id,cum_deaths\n");
    for r in records {
        for (b, d) in r.per_block_cum_deaths.iter().enumerate() {
            let _ = writeln!(out, "{},{b},{d}", r.cycle);
        }
    }
    out
}

/// Parses rows written by [`records_to_csv`]. Block deaths are not part of
/// this file and come back empty.
pub fn parse_records_csv(text: &str) -> Result<Vec<TimeSeriesRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<u64> = line
                .split(',')
                .map(|s| s.parse::<u64>().map_err(|e| format!("row {}: {e}", i + 1)))
                .collect::<Result<_, _>>()?;
            if v.len() != 14 {
                return Err(format!("row {} has {} fields", i + 1, v.len()));
            }
            let mut counts = [0u32; 9];
            for (k, c) in counts.iter_mut().enumerate() {
                *c = v[1 + k] as u32;
            }
            Ok(TimeSeriesRecord {
                cycle: v[0],
                counts,
                new_infections: v[10] as u32,
                cumulative_deaths: v[11] as u32,
                per_block_cum_deaths: Vec::new(),
                tests_today: v[12] as u32,
                locked_blocks: v[13] as u32,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    /// Peak of [`TimeSeriesRecord::infected`] and the earliest cycle it occurs.
    pub peak_infected: (u32, Cycle),
    pub total_deaths: u32,
    pub attack_rate: f64,
}

pub fn summarize(records: &[TimeSeriesRecord]) -> Summary {
    let first = records.first().expect("summarize needs at least one record");
    let last = records.last().expect("non-empty");
    let mut peak = (first.infected(), first.cycle);
    for r in records {
        if r.infected() > peak.0 {
            peak = (r.infected(), r.cycle);
        }
    }
    let population = last.population();
    Summary {
        peak_infected: peak,
        total_deaths: last.cumulative_deaths,
        attack_rate: if population == 0 {
            0.0
        } else {
            f64::from(last.ever_infected()) / f64::from(population)
        },
    }
}
