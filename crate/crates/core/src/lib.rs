//! Spatially explicit agent-based epidemic simulator.
//!
//! The crate is organised the way a run flows:
//!
//! * [`geo`] loads or synthesizes buildings, administrative blocks and a
//!   population density grid.
//! * [`synthpop`] builds individuals, households and hourly agendas on top of
//!   a [`geo::Region`].
//! * [`epi`] holds the disease state machine and the person-to-person and
//!   environmental transmission steps.
//! * [`policy`] implements intervention policies and the testing authority.
//! * [`engine`] drives the hourly loop and emits time series.
//! * [`experiments`] runs multi-seed policy comparisons and writes CSV/SVG
//!   outputs.
//!
//! Every stochastic component draws from a named substream (see [`rng`]) so
//! a run is a pure function of its configuration and seed.

pub mod cli;
pub mod engine;
pub mod epi;
pub mod experiments;
pub mod geo;
pub mod ids;
pub mod kv;
pub mod policy;
pub mod rng;
pub mod synthpop;

pub use ids::{BlockId, BuildingId, Cycle, HouseholdId, PersonId};
