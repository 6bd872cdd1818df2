//! User feature vectors, user entropy and record entropy, plus the metric
//! and time-filter vocabulary.

mod kinds;
mod vector;

pub use kinds::{Basis, DayType, MetricKind, TimeBand, TimeFilter};
pub use vector::{
    build_user_vector, record_entropy, record_entropy_of_row, shannon_entropy, user_entropy, FeatureRow,
    UserFeatureVector,
};
