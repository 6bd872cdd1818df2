//! Seeded synthetic cities and archetype-driven movement records.
//!
//! Every random draw comes from SplitMix64 streams derived from the spec
//! seed, one stream per purpose and per user.

mod city;
mod records;
mod spec;

pub use city::{generate_city, stream, SyntheticCity, ATTRACTION_RADIUS_M};
pub use records::{generate_records, synthetic_mid, SyntheticRecords, SyntheticUser, JITTER_CLAMP_M, JITTER_SIGMA_M};
pub use spec::{
    default_archetypes, ArchetypeSpec, SyntheticCitySpec, COMMUTER, HOMEBODY, RESIDENTIAL_CLASS, TOURIST,
    TOURIST_CLASSES, WANDERER,
};
