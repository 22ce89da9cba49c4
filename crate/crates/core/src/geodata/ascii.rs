//! ESRI ASCII grid reading and writing.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{GeoError, GridGeoref, TerrainGrid};

/// Parse an ESRI ASCII grid. Cells equal to the declared nodata value are
/// stored as NaN and marked inactive.
pub fn read_esri_ascii<R: BufRead>(reader: R) -> Result<TerrainGrid, GeoError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll: Option<(f64, bool)> = None;
    let mut yll: Option<(f64, bool)> = None;
    let mut cellsize = None;
    let mut dx = None;
    let mut dy = None;
    let mut nodata: Option<f64> = None;

    let mut values: Vec<f64> = Vec::new();
    let mut in_body = false;
    let mut expected = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| GeoError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !in_body {
            let first = trimmed.split_whitespace().next().unwrap_or("");
            let starts_numeric = first
                .chars()
                .next()
                .is_some_and(|ch| ch.is_ascii_digit() || ch == '-' || ch == '+' || ch == '.');
            if !starts_numeric {
                let mut parts = trimmed.split_whitespace();
                let key = parts.next().unwrap_or("").to_ascii_lowercase();
                let val = parts.next().ok_or_else(|| GeoError::Parse {
                    line: lineno,
                    message: format!("header key '{key}' has no value"),
                })?;
                if parts.next().is_some() {
                    return Err(GeoError::Parse {
                        line: lineno,
                        message: format!("header line '{trimmed}' has trailing tokens"),
                    });
                }
                let num = |v: &str| -> Result<f64, GeoError> {
                    v.parse::<f64>().map_err(|_| GeoError::Parse {
                        line: lineno,
                        message: format!("header '{key}' value '{v}' is not a number"),
                    })
                };
                let count = |v: &str| -> Result<usize, GeoError> {
                    v.parse::<usize>().map_err(|_| GeoError::Parse {
                        line: lineno,
                        message: format!("header '{key}' value '{v}' is not a count"),
                    })
                };
                match key.as_str() {
                    "ncols" => ncols = Some(count(val)?),
                    "nrows" => nrows = Some(count(val)?),
                    "xllcorner" => xll = Some((num(val)?, false)),
                    "xllcenter" => xll = Some((num(val)?, true)),
                    "yllcorner" => yll = Some((num(val)?, false)),
                    "yllcenter" => yll = Some((num(val)?, true)),
                    "cellsize" => cellsize = Some(num(val)?),
                    "dx" => dx = Some(num(val)?),
                    "dy" => dy = Some(num(val)?),
                    "nodata_value" => nodata = Some(num(val)?),
                    other => {
                        return Err(GeoError::Parse {
                            line: lineno,
                            message: format!("unknown header key '{other}'"),
                        })
                    }
                }
                continue;
            }
            // First data line: the header must be complete.
            let cs = match (cellsize, dx, dy) {
                (Some(cs), _, _) => cs,
                (None, Some(dx), Some(dy)) if dx == dy => dx,
                (None, Some(dx), Some(dy)) => {
                    return Err(GeoError::Unsupported(format!(
                        "non-uniform cell size dx={dx} dy={dy}"
                    )))
                }
                _ => {
                    return Err(GeoError::Parse {
                        line: lineno,
                        message: "header is missing cellsize".into(),
                    })
                }
            };
            let missing = |name: &str| GeoError::Parse {
                line: lineno,
                message: format!("header is missing {name}"),
            };
            let nc = ncols.ok_or_else(|| missing("ncols"))?;
            let nr = nrows.ok_or_else(|| missing("nrows"))?;
            xll.ok_or_else(|| missing("xllcorner"))?;
            yll.ok_or_else(|| missing("yllcorner"))?;
            cellsize = Some(cs);
            expected = nc * nr;
            values.reserve(expected);
            in_body = true;
        }
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| GeoError::Parse {
                line: lineno,
                message: format!("cell value '{tok}' is not a number"),
            })?;
            if values.len() == expected {
                return Err(GeoError::Parse {
                    line: lineno,
                    message: format!("more than {expected} cell values"),
                });
            }
            values.push(if nodata == Some(v) { f64::NAN } else { v });
        }
    }

    if !in_body {
        return Err(GeoError::Parse {
            line: 0,
            message: "no cell values found".into(),
        });
    }
    if values.len() != expected {
        return Err(GeoError::Parse {
            line: 0,
            message: format!("expected {expected} cell values, found {}", values.len()),
        });
    }
    let cs = cellsize.unwrap_or_default();
    let (x, xc) = xll.unwrap_or_default();
    let (y, yc) = yll.unwrap_or_default();
    let ox = if xc { x - 0.5 * cs } else { x };
    let oy = if yc { y - 0.5 * cs } else { y };
    TerrainGrid::new(ox, oy, cs, nrows.unwrap_or(0), ncols.unwrap_or(0), values)
}

/// Write a raster in ESRI ASCII format. Non-finite values are written as
/// `nodata`.
pub fn write_esri_ascii<W: Write>(
    mut out: W,
    georef: &GridGeoref,
    values: &[f64],
    nodata: f64,
) -> std::io::Result<()> {
    writeln!(out, "ncols {}", georef.n_cols)?;
    writeln!(out, "nrows {}", georef.n_rows)?;
    writeln!(out, "xllcorner {}", georef.origin_x)?;
    writeln!(out, "yllcorner {}", georef.origin_y)?;
    writeln!(out, "cellsize {}", georef.cell_size)?;
    writeln!(out, "NODATA_value {}", nodata)?;
    let mut line = String::new();
    for row in values.chunks(georef.n_cols) {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let v = if v.is_finite() { *v } else { nodata };
            // `{}` on f64 is the shortest string that round-trips.
            let _ = write!(line, "{v}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
