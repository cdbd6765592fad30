//! Time stepping of a scenario: field update, per-cell matter update,
//! probes, snapshots and invariant monitoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridState};
use crate::noise::{
    initial_condition_2lvl, NoiseDiagnostics, NoiseModel, NoiseScheme, NoiseStream, StreamDomain,
};
use crate::propagator::{LindbladPropagator, NoiseKick, PropagatorError};
use crate::quantum::DensityMatrix;
use crate::scenario::{
    bloch_vector_metric, InitialState, ProbeQuantity, Scenario, ScenarioError, Side,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("propagator: {0}")]
    Propagator(#[from] PropagatorError),
    #[error("invariant violation: {0}")]
    Invariant(InvariantViolation),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub step: u64,
    pub time_s: f64,
    pub cell: Option<usize>,
    pub kind: String,
    pub value: f64,
}

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {:e} at step {}", self.kind, self.value, self.step)?;
        if let Some(c) = self.cell {
            write!(f, ", cell {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantLimits {
    pub trace_tolerance: f64,
    pub min_eigenvalue: f64,
}

impl Default for InvariantLimits {
    fn default() -> Self {
        Self {
            trace_tolerance: 1e-9,
            min_eigenvalue: -1e-7,
        }
    }
}

/// Extremes seen by the invariant checks so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantStats {
    pub checks: u64,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for InvariantStats {
    fn default() -> Self {
        Self {
            checks: 0,
            max_trace_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub time_s: f64,
    pub e_field: Vec<f64>,
    /// populations[level][cell]
    pub populations: Vec<Vec<f64>>,
}

/// Receiver of probe samples and snapshots.
pub trait RunSink {
    /// One value per probe, in probe order.
    fn samples(&mut self, step: u64, values: &[f64]);
    fn snapshot(&mut self, snapshot: Snapshot);
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct RecordingSink {
    pub traces: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

impl RunSink for RecordingSink {
    fn samples(&mut self, _step: u64, values: &[f64]) {
        if self.traces.len() < values.len() {
            self.traces.resize(values.len(), Vec::new());
        }
        for (t, v) in self.traces.iter_mut().zip(values) {
            t.push(*v);
        }
    }

    fn snapshot(&mut self, snapshot: Snapshot) {
        self.snapshots.push(snapshot);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub time_s: f64,
    pub noise: NoiseDiagnostics,
    pub invariants: InvariantStats,
}

#[derive(Debug, Clone, Copy)]
enum Probe {
    Node(usize),
    Facet(usize),
    Population(usize, usize),
    Ratio(usize),
    Inversion(usize),
    Polarization(usize),
}

pub struct Simulation {
    scenario: Scenario,
    pub grid: GridState,
    propagator: LindbladPropagator,
    noise: NoiseModel,
    seed: u64,
    step: u64,
    dp: Vec<f64>,
    p_new: Vec<f64>,
    /// One fluctuation stream per cell, advanced only by that cell.
    streams: Vec<NoiseStream>,
    diagnostics: NoiseDiagnostics,
    probes: Vec<Probe>,
    averaged: Vec<bool>,
    accum: Vec<f64>,
    accum_count: u64,
    pool: Option<rayon::ThreadPool>,
    stats: InvariantStats,
    limits: InvariantLimits,
}

/// Cells per rayon task.
const CHUNK: usize = 64;

impl Simulation {
    /// `threads` = 1 runs on the calling thread; 0 uses rayon's default.
    pub fn new(scenario: &Scenario, seed: u64, threads: usize) -> Result<Self, SimError> {
        scenario.validate()?;
        let system = scenario.build_system()?;
        let noise = scenario.noise_model()?;
        let dt = scenario.dt();
        let propagator = LindbladPropagator::new(&system, dt)?;
        let m = scenario.geometry.cells;
        let n_cell = scenario.n_cell();
        let n = system.num_levels();
        let mut grid = GridState::new(
            m,
            scenario.dx(),
            dt,
            scenario.material,
            scenario.boundaries.left,
            scenario.boundaries.right,
            DensityMatrix::zeros(n),
            n_cell,
        )?;
        for (k, rho) in grid.rho.iter_mut().enumerate() {
            *rho = match &scenario.initial {
                InitialState::TippedInverted => {
                    let mut s = NoiseStream::new(seed, StreamDomain::InitialState, 0, k as u64);
                    initial_condition_2lvl(n_cell, &mut s)
                }
                InitialState::Populations { populations } => {
                    DensityMatrix::from_populations(populations)
                }
            };
        }
        for k in 0..m {
            let p = propagator.polarization(grid.rho[k].data());
            grid.p_qm[k] = p;
            grid.p_qm_prev[k] = p;
        }
        let probes = scenario
            .probes
            .iter()
            .map(|p| {
                let x = p.position_m.unwrap_or(0.0);
                let cell = scenario.cell_at(x);
                match p.quantity {
                    ProbeQuantity::EField => {
                        Probe::Node(((x / scenario.dx()).round() as usize).min(m))
                    }
                    ProbeQuantity::FacetPower => Probe::Facet(match p.side {
                        Some(Side::Right) => 1,
                        _ => 0,
                    }),
                    ProbeQuantity::Population => Probe::Population(cell, p.level.unwrap_or(0)),
                    ProbeQuantity::BlochRatio => Probe::Ratio(cell),
                    ProbeQuantity::BlochInversion => Probe::Inversion(cell),
                    ProbeQuantity::Polarization => Probe::Polarization(cell),
                }
            })
            .collect::<Vec<_>>();
        let pool = if threads == 1 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| SimError::Pool(e.to_string()))?,
            )
        };
        Ok(Self {
            averaged: scenario.probes.iter().map(|p| p.average).collect(),
            accum: vec![0.0; probes.len()],
            probes,
            scenario: scenario.clone(),
            grid,
            propagator,
            noise,
            seed,
            step: 0,
            dp: vec![0.0; m],
            p_new: vec![0.0; m],
            streams: (0..m)
                .map(|k| NoiseStream::new(seed, StreamDomain::Fluctuation, 0, k as u64))
                .collect(),
            diagnostics: NoiseDiagnostics::default(),
            accum_count: 0,
            pool,
            stats: InvariantStats::default(),
            limits: InvariantLimits::default(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.grid.dt
    }

    pub fn diagnostics(&self) -> NoiseDiagnostics {
        self.diagnostics
    }

    pub fn invariant_stats(&self) -> InvariantStats {
        self.stats
    }

    pub fn set_limits(&mut self, limits: InvariantLimits) {
        self.limits = limits;
    }

    pub fn num_probes(&self) -> usize {
        self.probes.len()
    }

    /// One full step: H, E, boundaries, matter, polarization.
    pub fn step(&mut self) {
        self.grid.update_h();
        self.grid.update_e(&self.dp);
        self.grid.apply_boundaries();

        let step = self.step + 1;
        let noise_on = self.noise.scheme() != NoiseScheme::Off;
        let prop = &self.propagator;
        let model = &self.noise;
        let grid = &mut self.grid;
        let e = &grid.e_field;
        let n_cells = &grid.n_cell;
        let cell_step = |k: usize,
                         rho: &mut DensityMatrix,
                         p: &mut f64,
                         stream: &mut NoiseStream|
         -> NoiseDiagnostics {
            let ez = 0.5 * (e[k] + e[k + 1]);
            let mut diag = NoiseDiagnostics::default();
            if noise_on {
                let kick = NoiseKick {
                    model,
                    stream,
                    n_cell: n_cells[k],
                    diagnostics: &mut diag,
                };
                *p = prop.full_step(rho.data_mut(), ez, Some(kick));
            } else {
                *p = prop.full_step(rho.data_mut(), ez, None);
            }
            diag
        };
        let rho = &mut grid.rho;
        let p_new = &mut self.p_new;
        let streams = &mut self.streams;
        let diag = match &self.pool {
            None => {
                let mut d = NoiseDiagnostics::default();
                for (k, ((r, p), st)) in rho
                    .iter_mut()
                    .zip(p_new.iter_mut())
                    .zip(streams.iter_mut())
                    .enumerate()
                {
                    d.merge(&cell_step(k, r, p, st));
                }
                d
            }
            Some(pool) => pool.install(|| {
                rho.par_iter_mut()
                    .zip(p_new.par_iter_mut())
                    .zip(streams.par_iter_mut())
                    .enumerate()
                    .with_min_len(CHUNK)
                    .map(|(k, ((r, p), st))| cell_step(k, r, p, st))
                    .reduce(NoiseDiagnostics::default, |mut a, b| {
                        a.merge(&b);
                        a
                    })
            }),
        };
        self.diagnostics.merge(&diag);

        let inv_dt = 1.0 / grid.dt;
        for k in 0..grid.num_cells {
            self.dp[k] = (self.p_new[k] - grid.p_qm[k]) * inv_dt;
            grid.p_qm_prev[k] = grid.p_qm[k];
            grid.p_qm[k] = self.p_new[k];
        }
        self.step = step;
    }

    fn probe_value(&self, p: Probe) -> f64 {
        let g = &self.grid;
        match p {
            Probe::Node(k) => g.e_field[k],
            Probe::Facet(side) => g.facet_power[side] * self.scenario.geometry.cross_section_m2,
            Probe::Population(c, l) => g.rho[c].population(l),
            Probe::Ratio(c) => bloch_vector_metric(&g.rho[c]).ratio.unwrap_or(f64::NAN),
            Probe::Inversion(c) => bloch_vector_metric(&g.rho[c]).rho3,
            Probe::Polarization(c) => g.p_qm[c],
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let n = self.propagator.num_levels();
        Snapshot {
            step: self.step,
            time_s: self.time(),
            e_field: self.grid.e_field.clone(),
            populations: (0..n)
                .map(|l| self.grid.rho.iter().map(|r| r.population(l)).collect())
                .collect(),
        }
    }

    /// Checks trace, positivity and finiteness of every cell.
    pub fn check_invariants(&mut self) -> Result<(), InvariantViolation> {
        let (step, time_s) = (self.step, self.time());
        let violation = |kind: &str, cell: Option<usize>, value: f64| InvariantViolation {
            step,
            time_s,
            cell,
            kind: kind.to_string(),
            value,
        };
        if !self.grid.fields_finite() {
            return Err(violation("non-finite field", None, f64::NAN));
        }
        self.stats.checks += 1;
        for (k, rho) in self.grid.rho.iter().enumerate() {
            if !rho.is_finite() {
                return Err(violation("non-finite density matrix", Some(k), f64::NAN));
            }
            let tr = (rho.trace() - crate::C64::new(1.0, 0.0)).norm();
            let ev = rho.min_eigenvalue();
            self.stats.max_trace_error = self.stats.max_trace_error.max(tr);
            self.stats.min_eigenvalue = self.stats.min_eigenvalue.min(ev);
            if tr > self.limits.trace_tolerance {
                return Err(violation("trace error", Some(k), tr));
            }
            if ev < self.limits.min_eigenvalue {
                return Err(violation("negative eigenvalue", Some(k), ev));
            }
        }
        Ok(())
    }

    /// Advances `steps` steps, feeding probes and snapshots to `sink`.
    /// Stops at the first invariant violation; everything emitted before it
    /// stays with the sink.
    pub fn run(&mut self, steps: u64, sink: &mut dyn RunSink) -> Result<RunSummary, SimError> {
        let run = self.scenario.run;
        let dec = run.trace_decimation;
        let snaps = run.snapshot_every_steps;
        if snaps > 0 && self.step == 0 {
            sink.snapshot(self.snapshot());
        }
        let mut values = vec![0.0; self.probes.len()];
        let end = self.step + steps;
        while self.step < end {
            self.step();
            for (i, p) in self.probes.iter().enumerate() {
                if self.averaged[i] {
                    self.accum[i] += self.probe_value(*p);
                }
            }
            self.accum_count += 1;
            if self.step.is_multiple_of(dec) {
                for (i, p) in self.probes.iter().enumerate() {
                    values[i] = if self.averaged[i] {
                        let v = self.accum[i] / self.accum_count as f64;
                        self.accum[i] = 0.0;
                        v
                    } else {
                        self.probe_value(*p)
                    };
                }
                self.accum_count = 0;
                if !values.is_empty() {
                    sink.samples(self.step, &values);
                }
            }
            if snaps > 0 && (self.step.is_multiple_of(snaps) || self.step == end) {
                sink.snapshot(self.snapshot());
            }
            if self.step.is_multiple_of(run.check_every_steps) || self.step == end {
                self.check_invariants().map_err(SimError::Invariant)?;
            }
        }
        Ok(RunSummary {
            steps: self.step,
            time_s: self.time(),
            noise: self.diagnostics,
            invariants: self.stats,
        })
    }
}
