use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::geo::DemographicKind;
use uf_core::raster::Viewport;
use uf_core::BBox;

use crate::error::{ApiError, ApiResult};
use crate::snapshot::CityData;

pub const MAX_RASTER_SIDE: u32 = 4096;
pub const DEFAULT_RASTER_SIDE: u32 = 512;

/// What a `metric` parameter may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Field(MetricKind),
    Demographic(DemographicKind),
    Facet,
}

impl Layer {
    pub fn parse(s: &str) -> ApiResult<Self> {
        if let Ok(m) = s.parse::<MetricKind>() {
            return Ok(Layer::Field(m));
        }
        let lower = s.to_ascii_lowercase();
        if let Some(k) = DemographicKind::parse(&lower) {
            return Ok(Layer::Demographic(k));
        }
        if lower == "facet" {
            return Ok(Layer::Facet);
        }
        Err(ApiError::not_found(format!("unknown metric {s:?}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Field(m) => m.as_str(),
            Layer::Demographic(k) => k.as_str(),
            Layer::Facet => "facet",
        }
    }
}

pub fn metric(s: &str) -> ApiResult<MetricKind> {
    match Layer::parse(s)? {
        Layer::Field(m) => Ok(m),
        other => Err(ApiError::not_found(format!("{} is not a metric field", other.name()))),
    }
}

pub fn filter(s: Option<&str>) -> ApiResult<TimeFilter> {
    match s {
        None | Some("") => Ok(TimeFilter::All),
        Some(s) => s.parse().map_err(|_| ApiError::invalid(format!("unknown time filter {s:?}"))),
    }
}

pub fn bbox(s: &str) -> ApiResult<BBox> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ApiError::invalid(format!("bbox {s:?} is not four numbers")))?;
    match v[..] {
        [a, b, c, d] => checked_bbox(BBox::new(a, b, c, d)),
        _ => Err(ApiError::invalid(format!("bbox {s:?} is not four numbers"))),
    }
}

pub fn checked_bbox(b: BBox) -> ApiResult<BBox> {
    if !b.is_valid() {
        return Err(ApiError::invalid("bbox must be finite with min < max"));
    }
    Ok(b)
}

/// Viewport over `bbox` (default: the city bbox).
pub fn viewport(
    city: &CityData,
    bbox: Option<&str>,
    width: Option<u32>,
    height: Option<u32>,
    zoom: Option<f64>,
) -> ApiResult<Viewport> {
    let b = match bbox {
        Some(s) => self::bbox(s)?,
        None => city.config.bbox,
    };
    let (w, h) = (width.unwrap_or(DEFAULT_RASTER_SIDE), height.unwrap_or(DEFAULT_RASTER_SIDE));
    if !(1..=MAX_RASTER_SIDE).contains(&w) || !(1..=MAX_RASTER_SIDE).contains(&h) {
        return Err(ApiError::invalid(format!("width and height must be in 1..={MAX_RASTER_SIDE}")));
    }
    let zoom = zoom.unwrap_or(1.0);
    let view = Viewport { bbox: b, width: w, height: h, zoom };
    if !view.is_valid() {
        return Err(ApiError::invalid("viewport needs latitudes inside the Mercator range and zoom > 0"));
    }
    if !b.intersects(&city.config.bbox) {
        return Err(ApiError::invalid("viewport does not intersect the city"));
    }
    Ok(view)
}

pub fn list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect()
}
