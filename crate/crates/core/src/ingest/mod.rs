//! Record parsing, source filtering, time discretization, device cleansing
//! and device-partitioned sharding.

mod cleanse;
mod record;
mod shard;

pub use cleanse::{cleanse_devices, months_spanned, CleansingWindow, DeviceSummary, DAYS_PER_MONTH};
pub use record::{
    filter_and_discretize, format_timestamp, parse_record, CleanRecord, Discretized, RawRecord, RejectKind,
    RejectedLine, Source, SLOTS_PER_DAY, SLOT_MINUTES,
};
pub use shard::{
    device_groups, fnv1a64, read_shard, shard_by_device, shard_file_name, shard_index, IngestManifest, IngestOptions,
    ShardInfo, ShardSet, INCOMPLETE_MARKER, MANIFEST_FILE,
};
