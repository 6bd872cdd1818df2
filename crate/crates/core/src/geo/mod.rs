//! City lattice, POI-class profiles and administrative divisions.

mod division;
mod lattice;
mod poi;
mod profile;

pub use division::{
    load_demographics, polygons_contain, ring_crossings, DemographicKind, Demographics, DemographicsReport, Division,
    DivisionLayer, DivisionSet, Level, Polygon, Ring,
};
pub use lattice::{BBox, Cell, CityConfig, Lattice, LocalFrame, METERS_PER_DEGREE};
pub use poi::{
    read_pois, write_pois, Poi, PoiClass, PoiKind, AREA_SIGMA_FACTOR, POINT_POI_SIGMA_M, POI_CLASS_COUNT,
    POI_CLASS_NAMES,
};
pub use profile::{
    class_weights, grid_poi_profiles, normal_pdf, normalize, GridPoiProfile, PoiIndex, ProfileGrid, PROFILE_MAGIC,
};
