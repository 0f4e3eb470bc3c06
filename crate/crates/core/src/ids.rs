use std::fmt;

/// Simulated hour counter. Cycle 0 is Monday 00:00.
pub type Cycle = u64;

pub const HOURS_PER_DAY: Cycle = 24;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Index into `Region::buildings`.
    BuildingId
);
id_type!(
    /// Index into `Region::blocks`.
    BlockId
);
id_type!(PersonId);
id_type!(HouseholdId);

#[inline]
pub fn hour_of_day(cycle: Cycle) -> usize {
    (cycle % HOURS_PER_DAY) as usize
}

#[inline]
pub fn day_of(cycle: Cycle) -> u64 {
    cycle / HOURS_PER_DAY
}

/// Saturday and Sunday, with day 0 a Monday.
#[inline]
pub fn is_weekend(cycle: Cycle) -> bool {
    day_of(cycle) % 7 >= 5
}
