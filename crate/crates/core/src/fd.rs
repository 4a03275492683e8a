//! Finite-difference solver for the same coupled system.
//!
//! Second-order central differences in space on the FEM node sets, explicit
//! Euler in time, with every boundary and interface condition imposed through
//! a ghost node that is eliminated analytically. It shares no stepping code
//! with the FEM path; only the monitors (mass, energy) reuse the FEM norms.

use crate::assembly::FemOperators;
use crate::error::{Error, Result};
use crate::params::{derived_constants, ModelParams};
use crate::stepper::{
    initial_state, schedule_snapshots, Recorder, RunInfo, SimState, SolutionRecord, Solver, SubstepDomain,
};

/// Node layout of the difference grids: `n_s + 1` coating nodes on `[-l, 0]`
/// and `n_m + 1` media nodes on `[0, 1]`. The interface appears once on each
/// side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub n_s: usize,
    pub n_m: usize,
    pub h_s: f64,
    pub h_m: f64,
}

impl FdGrid {
    pub fn new(p: &ModelParams, n_s: usize, n_m: usize) -> Result<Self> {
        if n_s == 0 || n_m == 0 {
            return Err(Error::EmptyMesh);
        }
        Ok(FdGrid {
            n_s,
            n_m,
            h_s: p.l / n_s as f64,
            h_m: 1.0 / n_m as f64,
        })
    }
}

/// Explicit finite-difference stepper with preallocated buffers.
pub struct FdSolver {
    p: ModelParams,
    grid: FdGrid,
    dt: f64,
    next_c: Vec<f64>,
    next_c1: Vec<f64>,
}

impl FdSolver {
    pub fn new(p: &ModelParams, grid: FdGrid, dt: f64) -> Result<Self> {
        let d = derived_constants(p, grid.h_s, grid.h_m);
        let bound = d.dt_max_s.min(d.dt_max_m);
        if !(dt > 0.0) || dt > bound {
            return Err(Error::CflViolation { dt, bound });
        }
        Ok(FdSolver {
            p: *p,
            grid,
            dt,
            next_c: vec![0.0; grid.n_s + 1],
            next_c1: vec![0.0; grid.n_m + 1],
        })
    }

    /// Intracellular update, identical to the FEM one. Reads `c1` at level k.
    pub fn ode_step(&self, c2: &mut [f64], c1: &[f64]) {
        let p = &self.p;
        let decay = 1.0 - self.dt * p.da / ((1.0 - p.phi) * p.k_part);
        let uptake = self.dt * p.da / (1.0 - p.phi);
        for (v, u) in c2.iter_mut().zip(c1) {
            *v = decay * *v + uptake * u;
        }
    }

    /// One fully explicit step of all three fields.
    pub fn step(&mut self, s: &mut SimState) {
        let FdGrid { n_s, n_m, h_s, h_m } = self.grid;
        let p = self.p;
        let dt = self.dt;
        let c = &s.y0;
        let c1 = &s.y1;
        let c2 = &s.y2;

        // Coating: c_t = delta c_xx, c_x(-l) = 0, c_x(0) = P (c1(0) - c(0)).
        let k_s = p.delta / (h_s * h_s);
        let slope_0 = p.p_tilde * (c1[0] - c[n_s]);
        let next_c = &mut self.next_c;
        if n_s == 1 {
            // Both ghosts act on the same two nodes.
            next_c[0] = c[0] + dt * k_s * 2.0 * (c[1] - c[0]);
        } else {
            next_c[0] = c[0] + dt * k_s * 2.0 * (c[1] - c[0]);
            for i in 1..n_s {
                next_c[i] = c[i] + dt * k_s * (c[i - 1] - 2.0 * c[i] + c[i + 1]);
            }
        }
        next_c[n_s] = c[n_s] + dt * k_s * (2.0 * c[n_s - 1] - 2.0 * c[n_s] + 2.0 * h_s * slope_0);

        // Media: phi c1_t = c1_xx - Pe c1_x - Da c1 + Da/K c2 with
        // c1_x(0) = Pe c1(0) - dP (c(0) - c1(0)) and c1_x(1) = 0.
        let inv_h2 = 1.0 / (h_m * h_m);
        let react = |j: usize| -p.da * c1[j] + p.da / p.k_part * c2[j];
        let g0 = p.pe * c1[0] - p.transfer() * (c[n_s] - c1[0]);
        let next_c1 = &mut self.next_c1;
        let rate0 = inv_h2 * (2.0 * c1[1] - 2.0 * c1[0] - 2.0 * h_m * g0) - p.pe * g0 + react(0);
        next_c1[0] = c1[0] + dt / p.phi * rate0;
        for j in 1..n_m {
            let diff = inv_h2 * (c1[j - 1] - 2.0 * c1[j] + c1[j + 1]);
            let adv = p.pe * (c1[j + 1] - c1[j - 1]) / (2.0 * h_m);
            next_c1[j] = c1[j] + dt / p.phi * (diff - adv + react(j));
        }
        let rate_n = inv_h2 * (2.0 * c1[n_m - 1] - 2.0 * c1[n_m]) + react(n_m);
        next_c1[n_m] = c1[n_m] + dt / p.phi * rate_n;

        self.ode_step(&mut s.y2, &s.y1);
        s.y0.copy_from_slice(&self.next_c);
        s.y1.copy_from_slice(&self.next_c1);
    }
}

/// Settings of one finite-difference run.
#[derive(Debug, Clone, PartialEq)]
pub struct FdRun {
    pub n_s: usize,
    pub n_m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

/// Runs the difference scheme from the standard initial condition.
pub fn run_fd(p: &ModelParams, run: &FdRun, snapshot_times: &[f64]) -> Result<SolutionRecord> {
    run_fd_with(p, run, snapshot_times, None)
}

/// As [`run_fd`], optionally overriding the initial state.
pub fn run_fd_with(
    p: &ModelParams,
    run: &FdRun,
    snapshot_times: &[f64],
    initial: Option<SimState>,
) -> Result<SolutionRecord> {
    p.validate()?;
    if run.record_every == 0 {
        return Err(Error::config("output.record_every", "must be at least 1"));
    }
    let grid = FdGrid::new(p, run.n_s, run.n_m)?;
    // Only used for monitors and to carry the node coordinates.
    let ops = FemOperators::new(p, run.n_s, run.n_m)?;
    let cfg = crate::stepper::SchemeConfig {
        record_every: run.record_every,
        ..crate::stepper::SchemeConfig::new(crate::stepper::Variant::Monolithic, run.dt, run.t_end)
    };
    let n_steps = cfg.n_steps();
    let dt = cfg.effective_dt();
    let mut solver = FdSolver::new(p, grid, dt)?;
    let plan = schedule_snapshots(snapshot_times, dt, n_steps, run.t_end)?;

    let mut s = initial.unwrap_or_else(|| initial_state(&ops));
    if s.y0.len() != grid.n_s + 1 || s.y1.len() != grid.n_m + 1 || s.y2.len() != grid.n_m + 1 {
        return Err(Error::DimensionMismatch {
            expected: grid.n_s + 1,
            got: s.y0.len(),
        });
    }
    s.t = 0.0;
    let mut rec = Recorder::new(&ops, p, &s, plan, run.record_every, n_steps);
    rec.observe(0, &s, 0.0)?;
    for k in 1..=n_steps {
        let outflow = p.pe * dt * s.y1[grid.n_m];
        solver.step(&mut s);
        s.t = k as f64 * dt;
        rec.observe(k, &s, outflow)?;
    }
    Ok(SolutionRecord {
        info: RunInfo {
            solver: Solver::FiniteDifference,
            params: *p,
            n_s: run.n_s,
            n_m: run.n_m,
            dt,
            substep_ratio: 1,
            substep_domain: SubstepDomain::Stent,
            n_steps,
            t_end: run.t_end,
        },
        mesh_s: ops.mesh_s.clone(),
        mesh_m: ops.mesh_m.clone(),
        snapshots: rec.snapshots,
        monitors: rec.monitors,
    })
}
