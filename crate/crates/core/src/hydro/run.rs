//! Time loop for one storm scenario.

use serde::{Deserialize, Serialize};

use super::solver::{FlowState, Rain, Solver, SolverConfig};
use super::{HydroError, SurfaceProperties};
use crate::geodata::{GridGeoref, TerrainGrid, TilePartition};
use crate::storm::{CaptureSpec, Hyetograph, RainField, RainRedirection, MM_PER_H_TO_M_PER_S};

/// A labelled storm plus its rainfall modification: one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormScenario {
    pub id: String,
    pub hyetograph: Hyetograph,
    #[serde(default)]
    pub captures: Vec<CaptureSpec>,
    /// Defaults to storm duration plus the configured drain-down.
    #[serde(default)]
    pub sim_end: Option<f64>,
}

/// Mass audit of a run (m³).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeLedger {
    pub rain_in: f64,
    pub infiltrated: f64,
    pub boundary_outflow: f64,
    pub stored: f64,
    pub pond_stored: f64,
    /// Water present before the first step.
    pub initial_stored: f64,
    pub steps: u64,
}

impl VolumeLedger {
    /// |in − out − stored| relative to the water that entered.
    pub fn closure_error(&self) -> f64 {
        let supplied = self.initial_stored + self.rain_in;
        let residual = supplied - self.infiltrated - self.boundary_outflow - self.stored;
        if supplied > 0.0 {
            residual.abs() / supplied
        } else {
            residual.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDepthRaster {
    pub scenario_id: String,
    pub end_time: f64,
    pub georef: GridGeoref,
    pub depth: Vec<f64>,
}

impl MaxDepthRaster {
    pub fn zeros(scenario_id: &str, grid: &TerrainGrid) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            end_time: 0.0,
            georef: grid.georef(),
            depth: vec![0.0; grid.n_cells()],
        }
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.depth[cell]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub max_depth: MaxDepthRaster,
    pub ledger: VolumeLedger,
    pub final_state: FlowState,
}

/// Run a scenario, building the rain field from its captures.
pub fn run_scenario(
    scenario: &StormScenario,
    grid: &TerrainGrid,
    props: &SurfaceProperties,
    redirection: &RainRedirection,
    partition: &TilePartition,
    cfg: &SolverConfig,
) -> Result<(MaxDepthRaster, VolumeLedger), HydroError> {
    let field = RainField::new(grid, partition, redirection, &scenario.captures)?;
    let out = run_with_field(scenario, &field, grid, props, cfg, FlowState::dry(grid.n_cells()), None)?;
    Ok((out.max_depth, out.ledger))
}

/// Core loop. `progress` receives the simulated fraction in [0, 1].
pub fn run_with_field(
    scenario: &StormScenario,
    field: &RainField,
    grid: &TerrainGrid,
    props: &SurfaceProperties,
    cfg: &SolverConfig,
    initial: FlowState,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<RunOutput, HydroError> {
    let hyeto = &scenario.hyetograph;
    let t_end = scenario.sim_end.unwrap_or(hyeto.duration() + cfg.drain_down_s);
    if !(t_end >= hyeto.duration()) {
        return Err(HydroError::Config(format!(
            "simulation end {t_end} s precedes storm end {} s",
            hyeto.duration()
        )));
    }
    if field.weight.len() != grid.n_cells() || initial.h.len() != grid.n_cells() {
        return Err(HydroError::Config("rain field or state does not match grid".into()));
    }

    let mut state = initial;
    let mut solver = Solver::new(grid, props, cfg)?;
    solver.prime(&state);
    let max_rate = hyeto.intensity.iter().fold(0.0f64, |a, &b| a.max(b)) * MM_PER_H_TO_M_PER_S;
    solver.lazy_rain(&state, &field.weight, max_rate, hyeto.total_depth() / 1000.0);
    let mut ledger = VolumeLedger {
        initial_stored: state.volume(grid),
        ..Default::default()
    };
    let mut last_report = 0.0;

    while state.t < t_end {
        let t = state.t;
        let mut dt = solver.stable_dt().min(t_end - t);
        if let Some(b) = hyeto.next_break(t) {
            dt = dt.min(b - t);
        }
        let rate = hyeto.intensity_at(t) * MM_PER_H_TO_M_PER_S;
        let rain = if rate > 0.0 {
            Rain::Field {
                weight: &field.weight,
                rate,
            }
        } else {
            Rain::None
        };
        let v = solver.advance(&mut state, rain, dt)?;
        ledger.rain_in += v.rain;
        ledger.infiltrated += v.infiltrated;
        ledger.boundary_outflow += v.outflow;
        ledger.steps += 1;

        // Land exactly on hyetograph breaks and the end time.
        let snap = hyeto.next_break(t).into_iter().chain([t_end]);
        for b in snap {
            if (state.t - b).abs() <= 1e-9 * b.max(1.0) {
                state.t = b;
            }
        }
        if let Some(report) = progress {
            let frac = (state.t / t_end).min(1.0);
            if frac - last_report >= 0.01 || frac >= 1.0 {
                report(frac);
                last_report = frac;
            }
        }
    }

    solver.settle(&mut state);
    ledger.stored = state.volume(grid);
    let area = grid.cell_area();
    ledger.pond_stored = (0..grid.n_cells())
        .filter(|&i| grid.active[i] && props.pond[i])
        .map(|i| state.h[i] * area)
        .sum();
    let err = ledger.closure_error();
    if !(err <= cfg.conservation_tolerance) {
        return Err(HydroError::Conservation {
            relative_error: err,
            ledger: Box::new(ledger),
        });
    }
    tracing::debug!(scenario = %scenario.id, steps = ledger.steps, "run complete");

    let max_depth = MaxDepthRaster {
        scenario_id: scenario.id.clone(),
        end_time: state.t,
        georef: grid.georef(),
        depth: std::mem::take(&mut solver.max_depth),
    };
    Ok(RunOutput {
        max_depth,
        ledger,
        final_state: state,
    })
}
