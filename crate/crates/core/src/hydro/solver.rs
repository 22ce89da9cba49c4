//! Explicit first-order finite-volume update of the 2D shallow-water
//! equations on the terrain grid.
//!
//! Per step: face fluxes, a positivity limiter on outgoing mass, the
//! conservative update, semi-implicit Manning friction, then rain and
//! infiltration. Work is restricted to a per-row window around wet cells.
//! Rows run in parallel; every reduction is summed per row and then in row
//! order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flux::{self, FaceFlux, SideState};
use super::{HydroError, SurfaceProperties};
use crate::geodata::TerrainGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Open,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundaries {
    pub north: EdgeKind,
    pub south: EdgeKind,
    pub east: EdgeKind,
    pub west: EdgeKind,
}

impl Boundaries {
    pub const OPEN: Self = Self::all(EdgeKind::Open);
    pub const CLOSED: Self = Self::all(EdgeKind::Wall);

    pub const fn all(kind: EdgeKind) -> Self {
        Self {
            north: kind,
            south: kind,
            east: kind,
            west: kind,
        }
    }
}

impl Default for Boundaries {
    fn default() -> Self {
        Self::OPEN
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub cfl: f64,
    /// Step used while the domain is dry, and an upper bound otherwise.
    pub dt_max: f64,
    pub dry_threshold: f64,
    pub gravity: f64,
    pub boundaries: Boundaries,
    /// Simulated time after the end of rain.
    pub drain_down_s: f64,
    /// Relative ledger closure required at the end of a run.
    pub conservation_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            dt_max: 5.0,
            dry_threshold: 1e-6,
            gravity: 9.81,
            boundaries: Boundaries::OPEN,
            drain_down_s: 3600.0,
            conservation_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), HydroError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(HydroError::Config(format!("CFL number {} outside (0, 1]", self.cfl)));
        }
        if !(self.dt_max > 0.0) || !(self.dry_threshold > 0.0) || !(self.gravity > 0.0) {
            return Err(HydroError::Config(
                "dt_max, dry_threshold and gravity must be positive".into(),
            ));
        }
        if !(self.drain_down_s >= 0.0) || !(self.conservation_tolerance > 0.0) {
            return Err(HydroError::Config("invalid drain-down or tolerance".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub h: Vec<f64>,
    /// East-positive unit discharge.
    pub qx: Vec<f64>,
    /// North-positive unit discharge.
    pub qy: Vec<f64>,
    pub t: f64,
    /// Depth infiltrated so far per cell.
    pub infiltrated: Vec<f64>,
}

impl FlowState {
    pub fn dry(n_cells: usize) -> Self {
        Self {
            h: vec![0.0; n_cells],
            qx: vec![0.0; n_cells],
            qy: vec![0.0; n_cells],
            t: 0.0,
            infiltrated: vec![0.0; n_cells],
        }
    }

    /// Still water at free-surface level `eta` over active cells.
    pub fn lake(grid: &TerrainGrid, eta: f64) -> Self {
        let mut s = Self::dry(grid.n_cells());
        for i in 0..grid.n_cells() {
            if grid.active[i] {
                s.h[i] = (eta - grid.elevation[i]).max(0.0);
            }
        }
        s
    }

    /// Water volume over active cells, summed in cell order.
    pub fn volume(&self, grid: &TerrainGrid) -> f64 {
        let a = grid.cell_area();
        self.h
            .iter()
            .zip(&grid.active)
            .filter(|(_, &act)| act)
            .map(|(h, _)| h * a)
            .sum()
    }
}

/// Rain source for one step.
#[derive(Debug, Clone, Copy)]
pub enum Rain<'a> {
    None,
    /// `weight[i] * rate` m/s.
    Field { weight: &'a [f64], rate: f64 },
    /// Explicit m/s per cell.
    PerCell(&'a [f64]),
}

impl Rain<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Rain::None => 0.0,
            Rain::Field { weight, rate } => weight[i] * rate,
            Rain::PerCell(r) => r[i],
        }
    }

    fn is_dry(&self) -> bool {
        match self {
            Rain::None => true,
            Rain::Field { rate, .. } => *rate == 0.0,
            Rain::PerCell(_) => false,
        }
    }
}

/// Volumes exchanged during one step (m³).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepVolumes {
    pub rain: f64,
    pub infiltrated: f64,
    pub outflow: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct RowSources {
    lo: usize,
    hi: usize,
    any: bool,
    rain: f64,
    infiltrated: f64,
    speed: f64,
    bad: Option<usize>,
}

/// Largest stable step for `state`: C·dx over the fastest wet-cell wave.
pub fn cfl_dt(state: &FlowState, grid: &TerrainGrid, cfl: f64, cfg: &SolverConfig) -> f64 {
    let mut speed = 0.0f64;
    for i in 0..grid.n_cells() {
        if grid.active[i] {
            speed = speed.max(cell_speed(state.h[i], state.qx[i], state.qy[i], cfg));
        }
    }
    dt_from_speed(speed, grid.cell_size, cfl, cfg)
}

/// Cube root of a positive finite number. The libm routine dominated
/// friction cost. Three Halley steps from a bit-level guess reach full
/// precision.
#[inline]
pub(crate) fn cbrt(x: f64) -> f64 {
    if !(x.is_normal() && x > 0.0) {
        return x.cbrt();
    }
    let mut t = f64::from_bits(x.to_bits() / 3 + 0x2A9F_7893_782D_A1CE);
    for _ in 0..3 {
        let t3 = t * t * t;
        t *= (t3 + 2.0 * x) / (2.0 * t3 + x);
    }
    t
}

#[inline]
fn cell_speed(h: f64, qx: f64, qy: f64, cfg: &SolverConfig) -> f64 {
    if h <= cfg.dry_threshold {
        return 0.0;
    }
    let c = (cfg.gravity * h).sqrt();
    ((qx / h).abs() + c).max((qy / h).abs() + c)
}

fn dt_from_speed(speed: f64, dx: f64, cfl: f64, cfg: &SolverConfig) -> f64 {
    if speed > 0.0 {
        (cfl * dx / speed).min(cfg.dt_max)
    } else {
        cfg.dt_max
    }
}

/// One explicit step with freshly allocated work arrays. `rain` is m/s per
/// cell. Use [`Solver`] for time loops.
pub fn step(
    state: &FlowState,
    props: &SurfaceProperties,
    grid: &TerrainGrid,
    rain: &[f64],
    dt: f64,
    cfg: &SolverConfig,
) -> Result<FlowState, HydroError> {
    let mut next = state.clone();
    let mut solver = Solver::new(grid, props, cfg)?;
    solver.prime(&next);
    solver.advance(&mut next, Rain::PerCell(rain), dt)?;
    Ok(next)
}

/// Reusable work arrays for a run on one grid.
pub struct Solver<'a> {
    grid: &'a TerrainGrid,
    props: &'a SurfaceProperties,
    cfg: &'a SolverConfig,
    xf: Vec<FaceFlux>,
    yf: Vec<FaceFlux>,
    theta: Vec<f64>,
    /// Wet column range per row.
    wet: Vec<Option<(usize, usize)>>,
    window: Vec<Option<(usize, usize)>>,
    speed: f64,
    pub max_depth: Vec<f64>,
    lazy: Option<LazyRain<'a>>,
    /// Per cell, the lazy rain depth already credited to `infiltrated`.
    settled: Vec<f64>,
    /// Velocities of wet cells, refreshed each step inside the windows.
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Dry cells that infiltrate all the rain a field can bring them are not
/// visited while they stay outside the wet window. Their rain is booked per
/// row in aggregate, and their infiltration record is caught up when they
/// are next visited.
struct LazyRain<'a> {
    weight: &'a [f64],
    max_rate: f64,
    absorbing: Vec<bool>,
    /// Prefix sums of absorbing weights, `nc + 1` entries per row.
    prefix: Vec<f64>,
    /// Active non-absorbing columns of each row.
    others: Vec<Vec<usize>>,
    /// Rain depth per unit weight absorbed lazily so far (m).
    depth: f64,
}

impl<'a> Solver<'a> {
    pub fn new(
        grid: &'a TerrainGrid,
        props: &'a SurfaceProperties,
        cfg: &'a SolverConfig,
    ) -> Result<Self, HydroError> {
        cfg.validate()?;
        props.validate(grid)?;
        let (nr, nc) = (grid.n_rows, grid.n_cols);
        Ok(Self {
            grid,
            props,
            cfg,
            xf: vec![FaceFlux::ZERO; nr * (nc + 1)],
            yf: vec![FaceFlux::ZERO; (nr + 1) * nc],
            theta: vec![1.0; nr * nc],
            wet: vec![None; nr],
            window: vec![None; nr],
            speed: 0.0,
            max_depth: vec![0.0; nr * nc],
            lazy: None,
            settled: Vec::new(),
            u: vec![0.0; nr * nc],
            v: vec![0.0; nr * nc],
        })
    }

    /// Enable lazy rain for a field whose rate never exceeds `max_rate` (m/s)
    /// and delivers at most `total_depth` (m) per unit weight over the run.
    pub fn lazy_rain(&mut self, state: &FlowState, weight: &'a [f64], max_rate: f64, total_depth: f64) {
        let grid = self.grid;
        let (nr, nc) = (grid.n_rows, grid.n_cols);
        let absorbing: Vec<bool> = (0..grid.n_cells())
            .map(|i| {
                let room = self.props.infiltration_capacity[i] - state.infiltrated[i];
                grid.active[i]
                    && weight[i] * max_rate <= self.props.infiltration_rate[i]
                    && weight[i] * total_depth * (1.0 + 1e-9) <= room
            })
            .collect();
        let mut prefix = vec![0.0; nr * (nc + 1)];
        let mut others = vec![Vec::new(); nr];
        for r in 0..nr {
            let mut acc = 0.0;
            for c in 0..nc {
                let i = r * nc + c;
                if absorbing[i] {
                    acc += weight[i];
                } else if grid.active[i] {
                    others[r].push(c);
                }
                prefix[r * (nc + 1) + c + 1] = acc;
            }
        }
        self.settled = vec![0.0; nr * nc];
        self.lazy = Some(LazyRain {
            weight,
            max_rate,
            absorbing,
            prefix,
            others,
            depth: 0.0,
        });
    }

    /// Credit lazily absorbed rain to `state.infiltrated`.
    pub fn settle(&mut self, state: &mut FlowState) {
        let Some(lazy) = &self.lazy else { return };
        for (i, done) in self.settled.iter_mut().enumerate() {
            if lazy.absorbing[i] && lazy.depth > *done {
                state.infiltrated[i] += lazy.weight[i] * (lazy.depth - *done);
                *done = lazy.depth;
            }
        }
    }

    /// Scan a state to set wet ranges, wave speed and initial max depth.
    pub fn prime(&mut self, state: &FlowState) {
        let nc = self.grid.n_cols;
        self.speed = 0.0;
        for r in 0..self.grid.n_rows {
            let mut range: Option<(usize, usize)> = None;
            for c in 0..nc {
                let i = r * nc + c;
                if !self.grid.active[i] || state.h[i] <= 0.0 {
                    continue;
                }
                range = Some(range.map_or((c, c), |(lo, _)| (lo, c)));
                self.speed = self.speed.max(cell_speed(state.h[i], state.qx[i], state.qy[i], self.cfg));
                self.max_depth[i] = self.max_depth[i].max(state.h[i]);
            }
            self.wet[r] = range;
        }
    }

    /// Stable step for the current state (valid after `prime` or `advance`).
    pub fn stable_dt(&self) -> f64 {
        dt_from_speed(self.speed, self.grid.cell_size, self.cfg.cfl, self.cfg)
    }

    fn update_windows(&mut self) {
        let nr = self.grid.n_rows;
        let nc = self.grid.n_cols;
        for r in 0..nr {
            let mut w: Option<(usize, usize)> = None;
            for rr in r.saturating_sub(1)..=(r + 1).min(nr - 1) {
                if let Some((lo, hi)) = self.wet[rr] {
                    w = Some(match w {
                        None => (lo, hi),
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                    });
                }
            }
            self.window[r] = w.map(|(lo, hi)| (lo.saturating_sub(1), (hi + 1).min(nc - 1)));
        }
    }

    /// Advance `state` by `dt`. The caller keeps `dt` at or below
    /// [`Solver::stable_dt`].
    pub fn advance(&mut self, state: &mut FlowState, rain: Rain<'_>, dt: f64) -> Result<StepVolumes, HydroError> {
        let grid = self.grid;
        let cfg = self.cfg;
        let props = self.props;
        let (nr, nc) = (grid.n_rows, grid.n_cols);
        let dx = grid.cell_size;
        let g = cfg.gravity;
        let eps = cfg.dry_threshold;
        let k = dt / dx;
        let bnd = cfg.boundaries;

        self.update_windows();
        let window = &self.window;

        // Cells outside a row's window are dry, so only window cells need
        // fresh velocities.
        {
            let (h, qx, qy) = (&state.h, &state.qx, &state.qy);
            self.u
                .par_chunks_mut(nc)
                .zip(self.v.par_chunks_mut(nc))
                .enumerate()
                .for_each(|(r, (ur, vr))| {
                    let Some((lo, hi)) = window[r] else { return };
                    for c in lo..=hi {
                        let i = r * nc + c;
                        if h[i] > eps {
                            ur[c] = qx[i] / h[i];
                            vr[c] = qy[i] / h[i];
                        }
                    }
                });
        }

        let h = &state.h;
        let z = &grid.elevation;
        let active = &grid.active;
        let (u, v) = (&self.u, &self.v);
        let side_x = |i: usize| {
            let wet = h[i] > eps;
            SideState {
                h: h[i],
                z: z[i],
                un: if wet { u[i] } else { 0.0 },
                ut: if wet { v[i] } else { 0.0 },
            }
        };
        let side_y = |i: usize| {
            let wet = h[i] > eps;
            SideState {
                h: h[i],
                z: z[i],
                un: if wet { v[i] } else { 0.0 },
                ut: if wet { u[i] } else { 0.0 },
            }
        };

        // x faces: face c of row r lies between columns c-1 and c.
        self.xf.par_chunks_mut(nc + 1).enumerate().for_each(|(r, row)| {
            let Some((lo, hi)) = window[r] else { return };
            for c in lo..=hi + 1 {
                let li = (c > 0).then(|| r * nc + c - 1).filter(|&i| active[i]);
                let ri = (c < nc).then(|| r * nc + c).filter(|&i| active[i]);
                row[c] = match (li, ri) {
                    (Some(l), Some(rt)) => flux::interior(side_x(l), side_x(rt), g),
                    (Some(l), None) if c == nc && bnd.east == EdgeKind::Open => flux::open(side_x(l), true, g),
                    (Some(l), None) => flux::wall(side_x(l), true, g),
                    (None, Some(rt)) if c == 0 && bnd.west == EdgeKind::Open => flux::open(side_x(rt), false, g),
                    (None, Some(rt)) => flux::wall(side_x(rt), false, g),
                    (None, None) => FaceFlux::ZERO,
                };
            }
        });

        // y faces: face f lies between row f-1 (north, "right") and row f
        // (south, "left"); the normal points north.
        self.yf.par_chunks_mut(nc).enumerate().for_each(|(f, row)| {
            let above = if f > 0 { window[f - 1] } else { None };
            let below = if f < nr { window[f] } else { None };
            let (lo, hi) = match (above, below) {
                (None, None) => return,
                (Some(a), None) | (None, Some(a)) => a,
                (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
            };
            for c in lo..=hi {
                let si = (f < nr).then(|| f * nc + c).filter(|&i| active[i]);
                let ni = (f > 0).then(|| (f - 1) * nc + c).filter(|&i| active[i]);
                row[c] = match (si, ni) {
                    (Some(s), Some(n)) => flux::interior(side_y(s), side_y(n), g),
                    (Some(s), None) if f == 0 && bnd.north == EdgeKind::Open => flux::open(side_y(s), true, g),
                    (Some(s), None) => flux::wall(side_y(s), true, g),
                    (None, Some(n)) if f == nr && bnd.south == EdgeKind::Open => flux::open(side_y(n), false, g),
                    (None, Some(n)) => flux::wall(side_y(n), false, g),
                    (None, None) => FaceFlux::ZERO,
                };
            }
        });

        // Positivity: scale a cell's outgoing mass so it cannot export more
        // than it holds. Both neighbours see the same scaled face flux.
        let xf = &self.xf;
        let yf = &self.yf;
        self.theta.par_chunks_mut(nc).enumerate().for_each(|(r, row)| {
            let Some((lo, hi)) = window[r] else { return };
            for c in lo..=hi {
                let i = r * nc + c;
                let xw = xf[r * (nc + 1) + c].mass;
                let xe = xf[r * (nc + 1) + c + 1].mass;
                let yn = yf[r * nc + c].mass;
                let ys = yf[(r + 1) * nc + c].mass;
                let out = (xe.max(0.0) + (-xw).max(0.0) + yn.max(0.0) + (-ys).max(0.0)) * k;
                row[c] = if out > h[i] { h[i] / out } else { 1.0 };
            }
        });

        let theta = &self.theta;
        // Effective face flux: mass and tangential momentum scaled by the donor.
        let scaled = |f: &FaceFlux, left: Option<usize>, right: Option<usize>| -> (f64, f64) {
            let donor = if f.mass > 0.0 { left } else { right };
            let th = donor.map_or(1.0, |d| theta[d]);
            (f.mass * th, f.mom_t * th)
        };

        let mut outflow_rows = vec![0.0; nr];
        {
            let FlowState { h, qx, qy, .. } = state;
            let manning = &props.manning_n;
            h.par_chunks_mut(nc)
                .zip(qx.par_chunks_mut(nc))
                .zip(qy.par_chunks_mut(nc))
                .zip(outflow_rows.par_iter_mut())
                .enumerate()
                .for_each(|(r, (((hr, qxr), qyr), out))| {
                    let Some((lo, hi)) = window[r] else { return };
                    let mut outflow = 0.0;
                    for c in lo..=hi {
                        let i = r * nc + c;
                        if !active[i] {
                            continue;
                        }
                        let west = (c > 0).then(|| i - 1);
                        let east = (c + 1 < nc).then(|| i + 1);
                        let north = (r > 0).then(|| i - nc);
                        let south = (r + 1 < nr).then(|| i + nc);
                        let fw = &xf[r * (nc + 1) + c];
                        let fe = &xf[r * (nc + 1) + c + 1];
                        let fnn = &yf[r * nc + c];
                        let fs = &yf[(r + 1) * nc + c];
                        let (mw, tw) = scaled(fw, west, Some(i));
                        let (me, te) = scaled(fe, Some(i), east);
                        let (mn, tn) = scaled(fnn, Some(i), north);
                        let (ms, ts) = scaled(fs, south, Some(i));

                        if c == 0 {
                            outflow -= mw;
                        }
                        if c + 1 == nc {
                            outflow += me;
                        }
                        if r == 0 {
                            outflow += mn;
                        }
                        if r + 1 == nr {
                            outflow -= ms;
                        }

                        let mut hh = hr[c] - k * (me - mw + mn - ms);
                        let mut ux = qxr[c] - k * (fe.mom_left - fw.mom_right + tn - ts);
                        let mut uy = qyr[c] - k * (te - tw + fnn.mom_left - fs.mom_right);
                        if hh < 0.0 {
                            hh = 0.0;
                        }
                        if hh <= eps {
                            ux = 0.0;
                            uy = 0.0;
                        } else {
                            let n = manning[i];
                            if n > 0.0 {
                                let speed = (ux * ux + uy * uy).sqrt() / hh;
                                let denom = 1.0 + dt * g * n * n * speed / (hh * cbrt(hh));
                                ux /= denom;
                                uy /= denom;
                            }
                        }
                        hr[c] = hh;
                        qxr[c] = ux;
                        qyr[c] = uy;
                    }
                    *out = outflow * dt * dx;
                });
        }

        // Sources, wet ranges and the next wave speed.
        let lazy = self.lazy.as_ref();
        let lazy_now = match (lazy, rain) {
            (Some(l), Rain::Field { weight, rate }) => std::ptr::eq(l.weight, weight) && rate <= l.max_rate,
            _ => false,
        };
        let full_rows = !rain.is_dry() && !lazy_now;
        let lazy_step = match rain {
            Rain::Field { rate, .. } if lazy_now => rate * dt,
            _ => 0.0,
        };
        let depth_before = lazy.map_or(0.0, |l| l.depth);
        let depth_after = depth_before + lazy_step;
        let t_now = state.t;
        let rows: Vec<RowSources> = {
            let FlowState {
                h,
                qx,
                qy,
                infiltrated,
                ..
            } = state;
            let rate = &props.infiltration_rate;
            let capacity = &props.infiltration_capacity;
            let mut settled_rows: Vec<&mut [f64]> = if lazy.is_some() {
                self.settled.chunks_mut(nc).collect()
            } else {
                (0..nr).map(|_| Default::default()).collect()
            };
            h.par_chunks_mut(nc)
                .zip(qx.par_chunks_mut(nc))
                .zip(qy.par_chunks_mut(nc))
                .zip(infiltrated.par_chunks_mut(nc))
                .zip(self.max_depth.par_chunks_mut(nc))
                .zip(settled_rows.par_iter_mut())
                .enumerate()
                .map(|(r, (((((hr, qxr), qyr), inf), md), settled))| {
                    let mut out = RowSources::default();
                    let win = if full_rows { Some((0, nc - 1)) } else { window[r] };
                    let mut visit = |c: usize| {
                        let i = r * nc + c;
                        if !active[i] {
                            return;
                        }
                        if let Some(l) = lazy {
                            if l.absorbing[i] {
                                if depth_before > settled[c] {
                                    inf[c] += l.weight[i] * (depth_before - settled[c]);
                                }
                                settled[c] = depth_after;
                            }
                        }
                        let mut hh = hr[c];
                        let p = rain.at(i) * dt;
                        hh += p;
                        out.rain += p;
                        let room = capacity[i] - inf[c];
                        if hh > 0.0 && room > 0.0 {
                            let loss = (rate[i] * dt).min(hh).min(room);
                            hh -= loss;
                            inf[c] += loss;
                            out.infiltrated += loss;
                        }
                        if hh <= eps {
                            qxr[c] = 0.0;
                            qyr[c] = 0.0;
                        }
                        if !(hh.is_finite() && qxr[c].is_finite() && qyr[c].is_finite()) {
                            out.bad.get_or_insert(i);
                        }
                        hr[c] = hh;
                        if hh > md[c] {
                            md[c] = hh;
                        }
                        if hh > 0.0 {
                            if !out.any {
                                out.lo = c;
                                out.any = true;
                            }
                            out.hi = c;
                            out.speed = out.speed.max(cell_speed(hh, qxr[c], qyr[c], cfg));
                        }
                    };
                    match (lazy_now, lazy) {
                        (true, Some(l)) => {
                            let others = &l.others[r];
                            let prefix = &l.prefix[r * (nc + 1)..(r + 1) * (nc + 1)];
                            let mut skipped = prefix[nc];
                            match win {
                                Some((lo, hi)) => {
                                    let split = others.partition_point(|&c| c < lo);
                                    others[..split].iter().for_each(|&c| visit(c));
                                    (lo..=hi).for_each(&mut visit);
                                    others[split..].iter().filter(|&&c| c > hi).for_each(|&c| visit(c));
                                    skipped -= prefix[hi + 1] - prefix[lo];
                                }
                                None => others.iter().for_each(|&c| visit(c)),
                            }
                            let absorbed = skipped.max(0.0) * lazy_step;
                            out.rain += absorbed;
                            out.infiltrated += absorbed;
                        }
                        _ => {
                            if let Some((lo, hi)) = win {
                                (lo..=hi).for_each(visit);
                            }
                        }
                    }
                    out
                })
                .collect()
        };
        if let Some(l) = self.lazy.as_mut() {
            l.depth = depth_after;
        }

        let area = grid.cell_area();
        let mut vols = StepVolumes::default();
        self.speed = 0.0;
        for (r, row) in rows.iter().enumerate() {
            if let Some(cell) = row.bad {
                return Err(HydroError::Divergence { cell, t: t_now + dt });
            }
            vols.rain += row.rain * area;
            vols.infiltrated += row.infiltrated * area;
            vols.outflow += outflow_rows[r];
            self.speed = self.speed.max(row.speed);
            self.wet[r] = row.any.then_some((row.lo, row.hi));
        }
        state.t += dt;
        Ok(vols)
    }
}
