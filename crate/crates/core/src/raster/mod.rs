//! Contour rasters: point diffusion of grid means, viewport math and
//! colorization.

mod choropleth;
mod diffuse;
mod palette;
mod viewport;

pub use choropleth::rasterize_divisions;
pub use diffuse::{
    adapt_radius, cone, rasterize, rasterize_field, seeds_for, DiffusionParams, ScalarRaster, Seed,
    DEFAULT_RADIUS_GRID_RADII,
};
pub use palette::{apply_color_filter, rainbow, ColorFilter, RgbaImage};
pub use viewport::{inverse_mercator_y, mercator_y, Viewport};
