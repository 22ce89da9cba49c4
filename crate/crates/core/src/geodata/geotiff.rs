//! Single-band GeoTIFF terrain via [`tiff`].
//!
//! Georeferencing comes from ModelPixelScale + ModelTiepoint; nodata from the
//! GDAL_NODATA ascii tag when present. Rotated rasters (ModelTransformation)
//! are not supported.

use std::io::{Read, Seek, Write};

use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::tags::Tag;

use super::{GeoError, GridGeoref, TerrainGrid};


fn tiff_err(e: tiff::TiffError) -> GeoError {
    GeoError::Parse {
        line: 0,
        message: format!("tiff: {e}"),
    }
}

pub fn read_geotiff<R: Read + Seek>(reader: R) -> Result<TerrainGrid, GeoError> {
    let mut dec = Decoder::new(reader).map_err(tiff_err)?;
    let (width, height) = dec.dimensions().map_err(tiff_err)?;
    let colortype = dec.colortype().map_err(tiff_err)?;
    if !matches!(colortype, tiff::ColorType::Gray(_)) {
        return Err(GeoError::Unsupported(format!(
            "only single-band rasters are supported, found {colortype:?}"
        )));
    }

    if dec
        .find_tag(Tag::ModelTransformationTag)
        .map_err(tiff_err)?
        .is_some()
    {
        return Err(GeoError::Unsupported(
            "ModelTransformation georeferencing is not supported".into(),
        ));
    }
    let scale = dec
        .get_tag_f64_vec(Tag::ModelPixelScaleTag)
        .map_err(|e| GeoError::Unsupported(format!("missing ModelPixelScale tag: {e}")))?;
    let tie = dec
        .get_tag_f64_vec(Tag::ModelTiepointTag)
        .map_err(|_| GeoError::Unsupported("missing ModelTiepoint tag".into()))?;
    if scale.len() < 2 || tie.len() < 6 {
        return Err(GeoError::Unsupported("truncated georeferencing tags".into()));
    }
    let (sx, sy) = (scale[0], scale[1]);
    if sx != sy {
        return Err(GeoError::Unsupported(format!(
            "non-uniform cell size {sx} x {sy}"
        )));
    }
    let nodata = match dec.find_tag(Tag::GdalNodata).map_err(tiff_err)? {
        Some(v) => {
            let s = v.into_string().map_err(tiff_err)?;
            let s = s.trim_matches(char::from(0)).trim();
            Some(s.parse::<f64>().map_err(|_| GeoError::Parse {
                line: 0,
                message: format!("GDAL_NODATA value '{s}' is not a number"),
            })?)
        }
        None => None,
    };

    let data: Vec<f64> = match dec.read_image().map_err(tiff_err)? {
        DecodingResult::U8(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::U16(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::U32(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::I8(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::I16(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::I32(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::F32(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::F64(v) => v,
        other => {
            return Err(GeoError::Unsupported(format!(
                "unsupported sample type ({} samples)",
                decoded_len(&other)
            )))
        }
    };
    let (n_cols, n_rows) = (width as usize, height as usize);
    if data.len() != n_cols * n_rows {
        return Err(GeoError::Unsupported(format!(
            "expected {} samples, decoded {}",
            n_cols * n_rows,
            data.len()
        )));
    }
    let elevation = data
        .into_iter()
        .map(|v| match nodata {
            Some(nd) if v == nd || (nd.is_nan() && v.is_nan()) => f64::NAN,
            _ => v,
        })
        .collect();

    // Tiepoint maps raster (i, j) to model (x, y); the raster origin is the
    // upper-left corner of pixel (0, 0).
    let (ti, tj, tx, ty) = (tie[0], tie[1], tie[3], tie[4]);
    let upper_left_x = tx - ti * sx;
    let upper_left_y = ty + tj * sy;
    let origin_y = upper_left_y - n_rows as f64 * sy;
    TerrainGrid::new(upper_left_x, origin_y, sx, n_rows, n_cols, elevation)
}

fn decoded_len(r: &DecodingResult) -> usize {
    match r {
        DecodingResult::U64(v) => v.len(),
        DecodingResult::I64(v) => v.len(),
        _ => 0,
    }
}

/// Write a single-band float32 GeoTIFF with pixel-scale/tiepoint tags.
pub fn write_geotiff<W: Write + Seek>(
    writer: W,
    georef: &GridGeoref,
    values: &[f64],
    nodata: f64,
) -> Result<(), GeoError> {
    let mut enc = TiffEncoder::new(writer).map_err(tiff_err)?;
    let mut img = enc
        .new_image::<colortype::Gray32Float>(georef.n_cols as u32, georef.n_rows as u32)
        .map_err(tiff_err)?;
    let scale = [georef.cell_size, georef.cell_size, 0.0];
    let top = georef.origin_y + georef.n_rows as f64 * georef.cell_size;
    let tie = [0.0, 0.0, 0.0, georef.origin_x, top, 0.0];
    img.encoder()
        .write_tag(Tag::ModelPixelScaleTag, &scale[..])
        .map_err(tiff_err)?;
    img.encoder()
        .write_tag(Tag::ModelTiepointTag, &tie[..])
        .map_err(tiff_err)?;
    let nodata_str = format!("{nodata}");
    img.encoder()
        .write_tag(Tag::GdalNodata, nodata_str.as_str())
        .map_err(tiff_err)?;
    let data: Vec<f32> = values
        .iter()
        .map(|v| if v.is_finite() { *v as f32 } else { nodata as f32 })
        .collect();
    img.write_data(&data).map_err(tiff_err)?;
    Ok(())
}
