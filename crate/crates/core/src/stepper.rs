//! Explicit Euler time stepping of the semi-discrete system.
//!
//! One step advances three blocks:
//!
//! ```text
//! Psi_s y0' = (Psi_s - dt A) y0 + dt dP c1(0) e_last
//! Psi_m y1' = (Psi_m - dt/phi B) y1 + dt Da/(phi K) Psi_m y2 + dt/phi dP c(0) e_first
//! y2'       = (1 - dt Da/((1-phi) K)) y2 + dt Da/(1-phi) y1
//! ```
//!
//! The variants differ only in which coupling values (`c(0)`, `c1(0)`, `y2`)
//! are taken from the old or the freshly computed level.

use serde::{Deserialize, Serialize};

use crate::assembly::{Domain, FemOperators, Mesh1D};
use crate::error::{Error, Result};
use crate::params::{derived_constants, ModelParams};
use crate::tridiag::{TridiagonalLu, TridiagonalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Every block reads level-k data only.
    Monolithic,
    /// Coating and intracellular blocks first, then the extracellular block
    /// with both fresh couplings.
    Alg1,
    /// Intracellular, then extracellular, then coating, each reading the
    /// freshest available values.
    Alg2,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Monolithic => "monolithic",
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monolithic" => Ok(Variant::Monolithic),
            "alg1" => Ok(Variant::Alg1),
            "alg2" => Ok(Variant::Alg2),
            other => Err(Error::config(
                "scheme",
                format!("unknown variant `{other}` (expected monolithic, alg1 or alg2)"),
            )),
        }
    }
}

/// Which subdomain takes `substep_ratio` smaller steps per macro step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubstepDomain {
    #[default]
    Stent,
    Media,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub variant: Variant,
    /// Macro step. Rounded down so that it divides `t_end` exactly.
    pub dt_m: f64,
    pub substep_ratio: usize,
    #[serde(default)]
    pub substep_domain: SubstepDomain,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Monitors are sampled every `record_every` macro steps (and at the end).
    pub record_every: usize,
}

impl SchemeConfig {
    pub fn new(variant: Variant, dt_m: f64, t_end: f64) -> Self {
        SchemeConfig {
            variant,
            dt_m,
            substep_ratio: 1,
            substep_domain: SubstepDomain::Stent,
            t_end,
            cfl_safety: 1.0,
            record_every: 1,
        }
    }

    /// Number of macro steps needed to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        if self.t_end <= 0.0 {
            return 0;
        }
        (self.t_end / self.dt_m * (1.0 - 1e-12)).ceil() as usize
    }

    /// Macro step actually used, `t_end / n_steps`.
    pub fn effective_dt(&self) -> f64 {
        match self.n_steps() {
            0 => self.dt_m,
            n => self.t_end / n as f64,
        }
    }

    fn substeps(&self) -> (usize, usize) {
        match self.substep_domain {
            SubstepDomain::Stent => (self.substep_ratio, 1),
            SubstepDomain::Media => (1, self.substep_ratio),
        }
    }

    /// Structural checks plus the per-subdomain explicit-Euler bound.
    pub fn check(&self, p: &ModelParams, ops: &FemOperators) -> Result<()> {
        if !(self.dt_m > 0.0) || !self.dt_m.is_finite() {
            return Err(Error::config("time.dt_m", "must be positive"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("time.t_end", "must be nonnegative"));
        }
        if self.substep_ratio == 0 {
            return Err(Error::config("time.substep_ratio", "must be at least 1"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config("time.cfl_safety", "must lie in (0, 1]"));
        }
        if self.record_every == 0 {
            return Err(Error::config("output.record_every", "must be at least 1"));
        }
        let d = derived_constants(p, ops.mesh_s.h, ops.mesh_m.h);
        let (r_s, r_m) = self.substeps();
        let bound = self.cfl_safety * (d.dt_max_s * r_s as f64).min(d.dt_max_m * r_m as f64);
        if self.dt_m > bound {
            return Err(Error::CflViolation { dt: self.dt_m, bound });
        }
        Ok(())
    }
}

/// Nodal coefficients of the three concentrations at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Coating concentration on the stent mesh; the last entry is `x = 0-`.
    pub y0: Vec<f64>,
    /// Extracellular concentration on the media mesh; the first entry is `x = 0+`.
    pub y1: Vec<f64>,
    /// Intracellular concentration on the media mesh.
    pub y2: Vec<f64>,
    pub t: f64,
}

impl SimState {
    pub fn zeros(ops: &FemOperators) -> Self {
        SimState {
            y0: vec![0.0; ops.mesh_s.n_nodes()],
            y1: vec![0.0; ops.mesh_m.n_nodes()],
            y2: vec![0.0; ops.mesh_m.n_nodes()],
            t: 0.0,
        }
    }

    /// Coating concentration at the interface.
    #[inline]
    pub fn c_at_interface(&self) -> f64 {
        *self.y0.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.y0.iter().chain(&self.y1).chain(&self.y2).all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        SimState {
            y0: self.y0.iter().map(|v| a * v).collect(),
            y1: self.y1.iter().map(|v| a * v).collect(),
            y2: self.y2.iter().map(|v| a * v).collect(),
            t: self.t,
        }
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::C => &self.y0,
            Field::C1 => &self.y1,
            Field::C2 => &self.y2,
        }
    }

    fn check_dims(&self, ops: &FemOperators) -> Result<()> {
        for (v, n) in [
            (&self.y0, ops.mesh_s.n_nodes()),
            (&self.y1, ops.mesh_m.n_nodes()),
            (&self.y2, ops.mesh_m.n_nodes()),
        ] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// The three unknown concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    C,
    C1,
    C2,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::C, Field::C1, Field::C2];

    pub fn name(self) -> &'static str {
        match self {
            Field::C => "c",
            Field::C1 => "c1",
            Field::C2 => "c2",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Field::C => Domain::Stent,
            Field::C1 | Field::C2 => Domain::Media,
        }
    }

    pub fn parse(s: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Coating filled with drug, media empty.
pub fn initial_state(ops: &FemOperators) -> SimState {
    SimState {
        y0: vec![1.0; ops.mesh_s.n_nodes()],
        ..SimState::zeros(ops)
    }
}

/// Integral of all drug present: coating, extracellular and intracellular.
pub fn total_mass(s: &SimState, ops: &FemOperators, p: &ModelParams) -> f64 {
    let integral = |m: &TridiagonalMatrix, v: &[f64]| m.apply(v).iter().sum::<f64>();
    integral(&ops.psi_s, &s.y0) + p.phi * integral(&ops.psi_m, &s.y1) + (1.0 - p.phi) * integral(&ops.psi_m, &s.y2)
}

/// Drug held in the coating.
pub fn stent_mass(s: &SimState, ops: &FemOperators) -> f64 {
    ops.psi_s.apply(&s.y0).iter().sum()
}

/// Sum of the squared L2 norms of the three concentrations.
pub fn energy(s: &SimState, ops: &FemOperators) -> f64 {
    ops.psi_s.quadratic_form(&s.y0, &s.y0)
        + ops.psi_m.quadratic_form(&s.y1, &s.y1)
        + ops.psi_m.quadratic_form(&s.y2, &s.y2)
}

/// Step kernels for fixed coating and media step sizes.
struct Integrator<'a> {
    ops: &'a FemOperators,
    p: ModelParams,
    lu_s: TridiagonalLu,
    lu_m: TridiagonalLu,
    /// `Psi_s - dt_s A`.
    explicit_s: TridiagonalMatrix,
    /// `Psi_m - dt_m/phi B`.
    explicit_m: TridiagonalMatrix,
    dt_s: f64,
    dt_m: f64,
    /// Media-step coefficients.
    coupling_c2: f64,
    source_m: f64,
    /// ODE coefficients (use the media step).
    decay_c2: f64,
    uptake_c2: f64,
    rhs_s: Vec<f64>,
    rhs_m: Vec<f64>,
    tmp_m: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(ops: &'a FemOperators, p: &ModelParams, dt_s: f64, dt_m: f64) -> Result<Self> {
        let phi = p.phi;
        Ok(Integrator {
            ops,
            p: *p,
            lu_s: ops.psi_s.factor()?,
            lu_m: ops.psi_m.factor()?,
            explicit_s: ops.psi_s.combine(1.0, &ops.mat_a, -dt_s),
            explicit_m: ops.psi_m.combine(1.0, &ops.mat_b, -dt_m / phi),
            dt_s,
            dt_m,
            coupling_c2: dt_m * p.da / (phi * p.k_part),
            source_m: dt_m / phi * p.transfer(),
            decay_c2: 1.0 - dt_m * p.da / ((1.0 - phi) * p.k_part),
            uptake_c2: dt_m * p.da / (1.0 - phi),
            rhs_s: vec![0.0; ops.mesh_s.n_nodes()],
            rhs_m: vec![0.0; ops.mesh_m.n_nodes()],
            tmp_m: vec![0.0; ops.mesh_m.n_nodes()],
        })
    }

    /// One coating step with the extracellular trace `c1_trace` held fixed.
    fn stent(&mut self, y0: &mut [f64], c1_trace: f64) {
        self.explicit_s.apply_into(y0, &mut self.rhs_s);
        let last = self.rhs_s.len() - 1;
        self.rhs_s[last] += self.dt_s * self.p.transfer() * c1_trace;
        self.lu_s.solve_in_place(&mut self.rhs_s);
        y0.copy_from_slice(&self.rhs_s);
    }

    /// Extracellular step into `self.rhs_m`; the caller commits it.
    fn media_into_rhs(&mut self, y1: &[f64], y2: &[f64], c_trace: f64) {
        self.explicit_m.apply_into(y1, &mut self.rhs_m);
        self.ops.psi_m.apply_into(y2, &mut self.tmp_m);
        for (r, t) in self.rhs_m.iter_mut().zip(&self.tmp_m) {
            *r += self.coupling_c2 * t;
        }
        self.rhs_m[0] += self.source_m * c_trace;
        self.lu_m.solve_in_place(&mut self.rhs_m);
    }

    fn media(&mut self, y1: &mut [f64], y2: &[f64], c_trace: f64) {
        self.media_into_rhs(y1, y2, c_trace);
        y1.copy_from_slice(&self.rhs_m);
    }

    fn ode(&self, y2: &mut [f64], y1: &[f64]) {
        for (c2, c1) in y2.iter_mut().zip(y1) {
            *c2 = self.decay_c2 * *c2 + self.uptake_c2 * c1;
        }
    }

    /// Media and ODE from the same level, as in the monolithic update.
    fn media_and_ode_jacobi(&mut self, y1: &mut [f64], y2: &mut [f64], c_trace: f64) {
        self.media_into_rhs(y1, y2, c_trace);
        self.ode(y2, y1);
        y1.copy_from_slice(&self.rhs_m);
    }

    /// One macro step. Returns the advective outflow `Pe * int c1(1, t) dt`
    /// accumulated over the media (sub)steps.
    fn macro_step(&mut self, variant: Variant, r_s: usize, r_m: usize, s: &mut SimState) -> f64 {
        let pe_dt = self.p.pe * self.dt_m;
        let mut outflow = 0.0;
        let last_m = s.y1.len() - 1;
        match variant {
            Variant::Monolithic => {
                let c_trace = s.c_at_interface();
                let c1_trace = s.y1[0];
                for _ in 0..r_s {
                    self.stent(&mut s.y0, c1_trace);
                }
                for _ in 0..r_m {
                    outflow += pe_dt * s.y1[last_m];
                    self.media_and_ode_jacobi(&mut s.y1, &mut s.y2, c_trace);
                }
            }
            Variant::Alg1 => {
                let c1_trace = s.y1[0];
                for _ in 0..r_s {
                    self.stent(&mut s.y0, c1_trace);
                }
                let c_trace = s.c_at_interface();
                for _ in 0..r_m {
                    outflow += pe_dt * s.y1[last_m];
                    self.ode(&mut s.y2, &s.y1);
                    self.media(&mut s.y1, &s.y2, c_trace);
                }
            }
            Variant::Alg2 => {
                let c_trace = s.c_at_interface();
                for _ in 0..r_m {
                    outflow += pe_dt * s.y1[last_m];
                    self.ode(&mut s.y2, &s.y1);
                    self.media(&mut s.y1, &s.y2, c_trace);
                }
                let c1_trace = s.y1[0];
                for _ in 0..r_s {
                    self.stent(&mut s.y0, c1_trace);
                }
            }
        }
        outflow
    }
}

fn single_step(s: &SimState, ops: &FemOperators, p: &ModelParams, dt: f64, variant: Variant) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::config("dt", "must be positive"));
    }
    s.check_dims(ops)?;
    let mut integ = Integrator::new(ops, p, dt, dt)?;
    let mut next = s.clone();
    integ.macro_step(variant, 1, 1, &mut next);
    next.t = s.t + dt;
    if !next.is_finite() {
        return Err(Error::Instability {
            step: 1,
            t: next.t,
            reason: "non-finite nodal value".into(),
        });
    }
    Ok(next)
}

/// Fully explicit step: every block reads level-k data.
pub fn step_monolithic(s: &SimState, ops: &FemOperators, p: &ModelParams, dt: f64) -> Result<SimState> {
    single_step(s, ops, p, dt, Variant::Monolithic)
}

/// Coating and intracellular updates from level k, then the extracellular
/// update with the fresh coating trace and fresh intracellular field.
pub fn step_alg1(s: &SimState, ops: &FemOperators, p: &ModelParams, dt: f64) -> Result<SimState> {
    single_step(s, ops, p, dt, Variant::Alg1)
}

/// Sequential update: intracellular, extracellular (fresh `y2`, old coating
/// trace), then coating (fresh extracellular trace).
pub fn step_alg2(s: &SimState, ops: &FemOperators, p: &ModelParams, dt: f64) -> Result<SimState> {
    single_step(s, ops, p, dt, Variant::Alg2)
}

pub fn step(variant: Variant, s: &SimState, ops: &FemOperators, p: &ModelParams, dt: f64) -> Result<SimState> {
    single_step(s, ops, p, dt, variant)
}

/// What produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Fem(Variant),
    FiniteDifference,
}

impl Solver {
    pub fn label(self) -> &'static str {
        match self {
            Solver::Fem(v) => v.name(),
            Solver::FiniteDifference => "fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub solver: Solver,
    pub params: ModelParams,
    pub n_s: usize,
    pub n_m: usize,
    pub dt: f64,
    pub substep_ratio: usize,
    pub substep_domain: SubstepDomain,
    pub n_steps: usize,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Time the caller asked for.
    pub requested: f64,
    pub step: usize,
    pub state: SimState,
}

/// Interface traces and global monitors at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSample {
    pub step: usize,
    pub t: f64,
    pub c_at_0: f64,
    pub c1_at_0: f64,
    pub c1_at_1: f64,
    pub stent_mass: f64,
    pub mass: f64,
    pub energy: f64,
    /// `M(t) - M(0) + Pe * int_0^t c1(1, s) ds` with the integral taken by
    /// the left-endpoint sum of the scheme.
    pub mass_balance_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub info: RunInfo,
    pub mesh_s: Mesh1D,
    pub mesh_m: Mesh1D,
    pub snapshots: Vec<Snapshot>,
    pub monitors: Vec<MonitorSample>,
}

impl SolutionRecord {
    pub fn interface_series(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.monitors.iter().map(|m| (m.t, m.c_at_0, m.c1_at_0, m.c1_at_1))
    }

    pub fn mass_series(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.monitors.iter().map(|m| (m.t, m.mass))
    }

    pub fn energy_series(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.monitors.iter().map(|m| (m.t, m.energy))
    }

    pub fn final_state(&self) -> Option<&SimState> {
        self.snapshots.last().map(|s| &s.state)
    }

    pub fn snapshot_at(&self, requested: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| same_time(s.requested, requested))
    }

    pub fn max_abs_mass_residual(&self) -> f64 {
        self.monitors
            .iter()
            .fold(0.0, |a, m| a.max(m.mass_balance_residual.abs()))
    }
}

pub(crate) fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Maps requested times to the nearest step index, validating the range.
pub(crate) fn schedule_snapshots(times: &[f64], dt: f64, n_steps: usize, t_end: f64) -> Result<Vec<(usize, f64)>> {
    let mut plan = Vec::with_capacity(times.len() + 1);
    for &t in times {
        if !t.is_finite() || t < 0.0 || t > t_end * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::config(
                "output.snapshot_times",
                format!("time {t} lies outside [0, {t_end}]"),
            ));
        }
        let step = if n_steps == 0 {
            0
        } else {
            ((t / dt).round() as usize).min(n_steps)
        };
        plan.push((step, t));
    }
    if !plan.iter().any(|&(_, t)| t == 0.0) {
        plan.push((0, 0.0));
    }
    plan.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    plan.dedup_by(|a, b| same_time(a.1, b.1));
    Ok(plan)
}

/// Shared bookkeeping between the FEM and FD drivers.
pub(crate) struct Recorder<'a> {
    ops: &'a FemOperators,
    p: ModelParams,
    plan: Vec<(usize, f64)>,
    next_snapshot: usize,
    record_every: usize,
    n_steps: usize,
    mass0: f64,
    energy0: f64,
    growth_rate: f64,
    outflow: f64,
    pub snapshots: Vec<Snapshot>,
    pub monitors: Vec<MonitorSample>,
}

/// Guard factor over the continuous energy bound.
const ENERGY_GUARD: f64 = 10.0;
/// Energy is also checked at least this often between recorded steps.
const GUARD_INTERVAL: usize = 64;

impl<'a> Recorder<'a> {
    pub fn new(
        ops: &'a FemOperators,
        p: &ModelParams,
        s0: &SimState,
        plan: Vec<(usize, f64)>,
        record_every: usize,
        n_steps: usize,
    ) -> Self {
        let d = derived_constants(p, ops.mesh_s.h, ops.mesh_m.h);
        Recorder {
            ops,
            p: *p,
            plan,
            next_snapshot: 0,
            record_every,
            n_steps,
            mass0: total_mass(s0, ops, p),
            energy0: energy(s0, ops),
            growth_rate: 2.0 * d.big_m,
            outflow: 0.0,
            snapshots: Vec::new(),
            monitors: Vec::new(),
        }
    }

    /// Called after reaching step `k`, with the outflow of the step that led here.
    pub fn observe(&mut self, k: usize, s: &SimState, outflow: f64) -> Result<()> {
        self.outflow += outflow;
        let recorded = k.is_multiple_of(self.record_every) || k == self.n_steps;
        if recorded || k.is_multiple_of(GUARD_INTERVAL) {
            let e = energy(s, self.ops);
            let bound = ENERGY_GUARD * self.energy0 * (self.growth_rate * s.t).exp();
            if !e.is_finite() || !s.is_finite() {
                return Err(Error::Instability {
                    step: k,
                    t: s.t,
                    reason: "non-finite nodal value".into(),
                });
            }
            if e > bound {
                return Err(Error::Instability {
                    step: k,
                    t: s.t,
                    reason: format!(
                        "energy {e:e} exceeds {ENERGY_GUARD}x the a priori bound {:e}",
                        bound / ENERGY_GUARD
                    ),
                });
            }
            if recorded {
                let mass = total_mass(s, self.ops, &self.p);
                self.monitors.push(MonitorSample {
                    step: k,
                    t: s.t,
                    c_at_0: s.c_at_interface(),
                    c1_at_0: s.y1[0],
                    c1_at_1: *s.y1.last().unwrap(),
                    stent_mass: stent_mass(s, self.ops),
                    mass,
                    energy: e,
                    mass_balance_residual: mass - self.mass0 + self.outflow,
                });
            }
        }
        while let Some(&(step, requested)) = self.plan.get(self.next_snapshot) {
            if step != k {
                break;
            }
            self.snapshots.push(Snapshot {
                requested,
                step,
                state: s.clone(),
            });
            self.next_snapshot += 1;
        }
        Ok(())
    }
}

/// Runs from the standard initial condition to `cfg.t_end`.
pub fn run_simulation(
    p: &ModelParams,
    ops: &FemOperators,
    cfg: &SchemeConfig,
    snapshot_times: &[f64],
) -> Result<SolutionRecord> {
    run_simulation_from(p, ops, cfg, snapshot_times, initial_state(ops))
}

/// As [`run_simulation`] but starting from an arbitrary state at `t = 0`.
pub fn run_simulation_from(
    p: &ModelParams,
    ops: &FemOperators,
    cfg: &SchemeConfig,
    snapshot_times: &[f64],
    initial: SimState,
) -> Result<SolutionRecord> {
    p.validate()?;
    cfg.check(p, ops)?;
    initial.check_dims(ops)?;
    let n_steps = cfg.n_steps();
    let dt = cfg.effective_dt();
    let (r_s, r_m) = cfg.substeps();
    let plan = schedule_snapshots(snapshot_times, dt, n_steps, cfg.t_end)?;

    let mut s = initial;
    s.t = 0.0;
    let mut integ = Integrator::new(ops, p, dt / r_s as f64, dt / r_m as f64)?;
    let mut rec = Recorder::new(ops, p, &s, plan, cfg.record_every, n_steps);
    rec.observe(0, &s, 0.0)?;
    for k in 1..=n_steps {
        let outflow = integ.macro_step(cfg.variant, r_s, r_m, &mut s);
        s.t = k as f64 * dt;
        rec.observe(k, &s, outflow)?;
    }

    Ok(SolutionRecord {
        info: RunInfo {
            solver: Solver::Fem(cfg.variant),
            params: *p,
            n_s: ops.mesh_s.n_elems,
            n_m: ops.mesh_m.n_elems,
            dt,
            substep_ratio: cfg.substep_ratio,
            substep_domain: cfg.substep_domain,
            n_steps,
            t_end: cfg.t_end,
        },
        mesh_s: ops.mesh_s.clone(),
        mesh_m: ops.mesh_m.clone(),
        snapshots: rec.snapshots,
        monitors: rec.monitors,
    })
}

/// Power-iteration estimate of the largest explicit-Euler step for each
/// subdomain operator, `2 / rho(Psi^-1 A)` and `2 phi / rho(Psi_m^-1 B)`.
///
/// The media operator is nonsymmetric; with the small cell Peclet numbers of
/// interest its spectrum is close to real and the estimate is sharp.
pub fn spectral_dt_bounds(ops: &FemOperators, p: &ModelParams) -> Result<(f64, f64)> {
    let rho = |op: &TridiagonalMatrix, mass: &TridiagonalMatrix| -> Result<f64> {
        let lu = mass.factor()?;
        let n = op.dim();
        // Alternating start vector overlaps the highest-frequency modes.
        let mut x: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + 0.01 * i as f64))
            .collect();
        let mut y = vec![0.0; n];
        let mut est = 0.0;
        for _ in 0..2000 {
            op.apply_into(&x, &mut y);
            lu.solve_in_place(&mut y);
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let new = ny / nx;
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / ny;
            }
            if (new - est).abs() <= 1e-10 * new {
                est = new;
                break;
            }
            est = new;
        }
        Ok(est)
    };
    let rho_s = rho(&ops.mat_a, &ops.psi_s)?;
    let rho_m = rho(&ops.mat_b, &ops.psi_m)?;
    Ok((2.0 / rho_s, 2.0 * p.phi / rho_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_ops(n_s: usize, n_m: usize) -> (ModelParams, FemOperators) {
        let p = ModelParams::paper_defaults();
        let ops = FemOperators::new(&p, n_s, n_m).unwrap();
        (p, ops)
    }

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn initial_state_monitors() {
        let (p, ops) = paper_ops(50, 25);
        let s = initial_state(&ops);
        assert!(s.y0.iter().all(|&v| v == 1.0));
        assert!(s.y1.iter().chain(&s.y2).all(|&v| v == 0.0));
        assert_relative_eq!(total_mass(&s, &ops, &p), 0.028, max_relative = 1e-13);
        assert_relative_eq!(energy(&s, &ops), 0.028, max_relative = 1e-13);
    }

    #[test]
    fn mass_of_simple_states() {
        let (p, ops) = paper_ops(10, 10);
        let zero = SimState::zeros(&ops);
        assert_eq!(total_mass(&zero, &ops, &p), 0.0);
        assert_eq!(energy(&zero, &ops), 0.0);
        let mut s = zero.clone();
        s.y1.fill(1.0);
        assert_relative_eq!(total_mass(&s, &ops, &p), 0.61, max_relative = 1e-13);
    }

    #[test]
    fn energy_is_quadratic() {
        let (_, ops) = paper_ops(8, 6);
        let mut s = initial_state(&ops);
        s.y1 = ops.mesh_m.nodes.clone();
        s.y2 = ops.mesh_m.nodes.iter().map(|x| x * x).collect();
        assert_relative_eq!(
            energy(&s.scaled(2.0), &ops),
            4.0 * energy(&s, &ops),
            max_relative = 1e-14
        );
    }

    #[test]
    fn first_monolithic_step_from_initial_state() {
        let (p, ops) = paper_ops(50, 25);
        let dt = 1.0 / 6454.0;
        let s1 = step_monolithic(&initial_state(&ops), &ops, &p, dt).unwrap();
        assert!(s1.y2.iter().all(|&v| v == 0.0));
        let mut e_first = vec![0.0; ops.mesh_m.n_nodes()];
        e_first[0] = dt / p.phi * p.transfer();
        let expect = crate::tridiag::solve_tridiagonal(&ops.psi_m, &e_first).unwrap();
        for (a, b) in s1.y1.iter().zip(&expect) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12, epsilon = 1e-18);
        }
    }

    #[test]
    fn ode_update_relaxes_to_partition_equilibrium() {
        let (p, ops) = paper_ops(4, 4);
        let integ = Integrator::new(&ops, &p, 1.0, 1.0).unwrap();
        let a = 0.3;
        let y1 = vec![a; 5];
        let mut y2 = vec![0.0; 5];
        for _ in 0..20_000 {
            integ.ode(&mut y2, &y1);
        }
        for v in y2 {
            assert_relative_eq!(v, p.k_part * a, max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let (p, ops) = paper_ops(10, 10);
        let z = SimState::zeros(&ops);
        for v in [Variant::Monolithic, Variant::Alg1, Variant::Alg2] {
            let next = step(v, &z, &ops, &p, 1e-4).unwrap();
            assert!(next.y0.iter().chain(&next.y1).chain(&next.y2).all(|&x| x == 0.0));
        }
    }

    #[test]
    fn splittings_share_their_first_stage() {
        let (p, ops) = paper_ops(50, 25);
        let s = initial_state(&ops);
        let dt = 1.0 / 6454.0;
        let mono = step_monolithic(&s, &ops, &p, dt).unwrap();
        let a1 = step_alg1(&s, &ops, &p, dt).unwrap();
        let a2 = step_alg2(&s, &ops, &p, dt).unwrap();
        assert_eq!(a1.y0, mono.y0);
        assert_eq!(a1.y2, mono.y2);
        assert_eq!(a2.y2, mono.y2);
    }

    #[test]
    fn splitting_defect_is_second_order_in_dt() {
        let (p, ops) = paper_ops(50, 25);
        // Start from a state with nonzero couplings everywhere.
        let mut s = initial_state(&ops);
        for (i, v) in s.y1.iter_mut().enumerate() {
            *v = 0.05 * (1.0 + i as f64 / 25.0);
        }
        for (i, v) in s.y2.iter_mut().enumerate() {
            *v = 0.2 * (1.0 - i as f64 / 50.0);
        }
        s.y0[50] = 0.4;
        for v in [Variant::Alg1, Variant::Alg2] {
            let defect = |dt: f64| {
                let m = step_monolithic(&s, &ops, &p, dt).unwrap();
                let a = step(v, &s, &ops, &p, dt).unwrap();
                let d: Vec<f64> = m.y1.iter().zip(&a.y1).map(|(x, y)| x - y).collect();
                let d0: Vec<f64> = m.y0.iter().zip(&a.y0).map(|(x, y)| x - y).collect();
                l2(&d) + l2(&d0)
            };
            let ratio = defect(1e-5) / defect(0.5e-5);
            assert!((ratio - 4.0).abs() < 0.2, "{v:?}: ratio {ratio}");
        }
    }

    #[test]
    fn zero_horizon_keeps_only_initial_snapshot() {
        let (p, ops) = paper_ops(10, 10);
        let cfg = SchemeConfig::new(Variant::Monolithic, 1e-4, 0.0);
        let rec = run_simulation(&p, &ops, &cfg, &[]).unwrap();
        assert_eq!(rec.snapshots.len(), 1);
        assert_eq!(rec.snapshots[0].state, initial_state(&ops));
        assert_eq!(rec.monitors.len(), 1);
    }

    #[test]
    fn unit_ratio_matches_plain_stepping_bitwise() {
        let (p, ops) = paper_ops(20, 10);
        for v in [Variant::Monolithic, Variant::Alg1, Variant::Alg2] {
            let mut cfg = SchemeConfig::new(v, 1e-3, 0.05);
            cfg.substep_ratio = 1;
            let rec = run_simulation(&p, &ops, &cfg, &[0.05]).unwrap();
            let mut s = initial_state(&ops);
            for _ in 0..cfg.n_steps() {
                s = step(v, &s, &ops, &p, cfg.effective_dt()).unwrap();
            }
            let last = rec.final_state().unwrap();
            assert_eq!(last.y0, s.y0);
            assert_eq!(last.y1, s.y1);
            assert_eq!(last.y2, s.y2);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let (p, ops) = paper_ops(50, 25);
        let cfg = SchemeConfig::new(Variant::Monolithic, 1e-3, 1.0);
        assert!(matches!(
            run_simulation(&p, &ops, &cfg, &[]),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn unstable_step_is_reported() {
        let (p, ops) = paper_ops(50, 25);
        // Passes the nominal bound but exceeds the consistent-mass spectrum.
        let mut cfg = SchemeConfig::new(Variant::Monolithic, 4.5e-4, 0.5);
        cfg.record_every = 100;
        let err = run_simulation(&p, &ops, &cfg, &[]).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn snapshots_snap_to_nearest_step() {
        let (p, ops) = paper_ops(10, 10);
        let cfg = SchemeConfig::new(Variant::Alg1, 1e-3, 0.01);
        let rec = run_simulation(&p, &ops, &cfg, &[0.0042, 0.01]).unwrap();
        let snap = rec.snapshot_at(0.0042).unwrap();
        assert_eq!(snap.step, 4);
        assert_relative_eq!(snap.state.t, 0.004, max_relative = 1e-12);
        assert!(run_simulation(&p, &ops, &cfg, &[0.02]).is_err());
    }

    #[test]
    fn literature_step_is_spectrally_stable() {
        let (p, ops) = paper_ops(50, 25);
        let (dt_s, dt_m) = spectral_dt_bounds(&ops, &p).unwrap();
        assert!(1.0 / 6454.0 < dt_m, "media bound {dt_m}");
        assert!(1.0 / 6454.0 < dt_s);
        // Consistent mass roughly triples the lumped-mass stiffness spectrum.
        assert!(dt_m < p.phi * (1.0f64 / 25.0).powi(2) / 2.0);
    }

    #[test]
    fn records_are_reproducible() {
        let (p, ops) = paper_ops(20, 10);
        let mut cfg = SchemeConfig::new(Variant::Alg2, 1e-3, 0.05);
        cfg.substep_ratio = 3;
        let a = run_simulation(&p, &ops, &cfg, &[0.02, 0.05]).unwrap();
        let b = run_simulation(&p, &ops, &cfg, &[0.02, 0.05]).unwrap();
        assert_eq!(a, b);
    }
}
