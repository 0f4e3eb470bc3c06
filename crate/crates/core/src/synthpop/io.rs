use std::fmt::Write as _;

use super::{DayKind, Individual, Sex};

/// `id,age,sex,employment,household_id,home,attachment`; attachment is empty
/// when absent.
pub fn population_to_csv(individuals: &[Individual]) -> String {
    let mut out = String::from("id,age,sex,employment,household_id,home,attachment\n");
    for i in individuals {
        let sex = match i.sex {
            Sex::F => "F",
            Sex::M => "M",
        };
        let attachment = i.attachment.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i.id, i.age, sex, i.employment, i.household_id, i.home, attachment
        );
    }
    out
}

/// `id,day_kind,hour,activity,building`, one row per slot.
pub fn agendas_to_csv(individuals: &[Individual]) -> String {
    let mut out = String::from("id,day_kind,hour,activity,building\n");
    for i in individuals {
        for kind in [DayKind::Weekday, DayKind::Weekend] {
            for (h, slot) in i.agenda.day(kind).iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    i.id,
                    kind.as_str(),
                    h,
                    slot.activity.as_str(),
                    slot.building
                );
            }
        }
    }
    out
}
