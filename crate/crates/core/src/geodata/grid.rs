use serde::{Deserialize, Serialize};

use super::GeoError;

/// Uniform raster of ground elevation, row-major with row 0 at the north edge.
///
/// `origin_x`/`origin_y` are the lower-left corner of the raster. Inactive
/// cells (nodata and building holes) are excluded from the flow domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainGrid {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub elevation: Vec<f64>,
    pub active: Vec<bool>,
}

impl TerrainGrid {
    /// Build a grid; non-finite elevations become inactive cells.
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
        elevation: Vec<f64>,
    ) -> Result<Self, GeoError> {
        let active = elevation.iter().map(|z| z.is_finite()).collect();
        let grid = Self {
            origin_x,
            origin_y,
            cell_size,
            n_rows,
            n_cols,
            elevation,
            active,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_fn(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, GeoError> {
        let mut elevation = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                elevation.push(f(r, c));
            }
        }
        Self::new(origin_x, origin_y, cell_size, n_rows, n_cols, elevation)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(GeoError::InvalidGrid(format!(
                "cell size must be positive, got {}",
                self.cell_size
            )));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(GeoError::InvalidGrid("grid has no cells".into()));
        }
        let n = self.n_rows * self.n_cols;
        if self.elevation.len() != n || self.active.len() != n {
            return Err(GeoError::InvalidGrid(format!(
                "expected {n} cells, elevation has {}, mask has {}",
                self.elevation.len(),
                self.active.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| self.active[i] && !self.elevation[i].is_finite()) {
            return Err(GeoError::InvalidGrid(format!(
                "active cell {i} has non-finite elevation"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    #[inline]
    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_cols, idx % self.n_cols)
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.cell_size
    }

    /// Map coordinates of a cell center.
    #[inline]
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + (self.n_rows as f64 - row as f64 - 0.5) * self.cell_size,
        )
    }

    /// Cell containing a map point, if inside the raster.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fc = (x - self.origin_x) / self.cell_size;
        let fr = (self.origin_y + self.height() - y) / self.cell_size;
        if fc < 0.0 || fr < 0.0 {
            return None;
        }
        let (r, c) = (fr.floor() as usize, fc.floor() as usize);
        (r < self.n_rows && c < self.n_cols).then_some((r, c))
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Indices of the up-to-8 neighbours of a cell.
    pub fn neighbours8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.row_col(idx);
        let (r, c) = (r as isize, c as isize);
        (-1isize..=1)
            .flat_map(move |dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr != 0 || dc != 0)
            .filter_map(move |(dr, dc)| {
                let (rr, cc) = (r + dr, c + dc);
                (rr >= 0 && cc >= 0 && (rr as usize) < self.n_rows && (cc as usize) < self.n_cols)
                    .then(|| rr as usize * self.n_cols + cc as usize)
            })
    }

    /// Georeferencing without the cell payload.
    pub fn georef(&self) -> GridGeoref {
        GridGeoref {
            origin_x: self.origin_x,
            origin_y: self.origin_y,
            cell_size: self.cell_size,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeoref {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}
