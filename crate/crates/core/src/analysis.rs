//! Error norms between runs and the refinement studies built on them.
//!
//! Runs are compared on their common snapshot times. Each field is prolonged
//! to the finer of the two (nested, uniform) meshes by P1 interpolation,
//! which is exact for the piecewise-linear solutions, and measured with that
//! mesh's mass and stiffness matrices. Time norms use the left-endpoint
//! rectangle rule over the common snapshot times.

use serde::Serialize;

use crate::assembly::{assemble_mass, assemble_stiffness, norm_with, FemOperators, Mesh1D};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::stepper::{
    initial_state, run_simulation_from, same_time, Field, SchemeConfig, SimState, SolutionRecord, Variant,
};

/// Reference norms below this are treated as zero when forming relative errors.
pub const RELATIVE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldErrors {
    /// `max_t ||e(t)||_L2`.
    pub linf_l2: f64,
    /// `(sum dt ||e(t)||_L2^2)^(1/2)`.
    pub l2_l2: f64,
    /// Same with the H1 seminorm; not reported for the intracellular field.
    pub l2_h1: Option<f64>,
    /// `max_t ||ref(t)||_L2`, the normaliser of the relative errors.
    pub ref_linf_l2: f64,
}

impl FieldErrors {
    fn relative(&self, abs: f64) -> Option<f64> {
        (self.ref_linf_l2 > RELATIVE_FLOOR).then(|| abs / self.ref_linf_l2)
    }

    pub fn rel_linf_l2(&self) -> Option<f64> {
        self.relative(self.linf_l2)
    }

    pub fn rel_l2_l2(&self) -> Option<f64> {
        self.relative(self.l2_l2)
    }

    pub fn rel_l2_h1(&self) -> Option<f64> {
        self.l2_h1.and_then(|e| self.relative(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub c: FieldErrors,
    pub c1: FieldErrors,
    pub c2: FieldErrors,
    /// Number of common snapshot times used.
    pub n_times: usize,
}

impl ErrorReport {
    pub fn field(&self, f: Field) -> &FieldErrors {
        match f {
            Field::C => &self.c,
            Field::C1 => &self.c1,
            Field::C2 => &self.c2,
        }
    }
}

/// Refinement factor from `coarse` to `fine`, if the meshes are nested.
fn nesting_factor(coarse: &Mesh1D, fine: &Mesh1D) -> Option<usize> {
    let same_interval = (coarse.a - fine.a).abs() <= 1e-14 * (1.0 + coarse.a.abs())
        && (coarse.b - fine.b).abs() <= 1e-14 * (1.0 + coarse.b.abs());
    (same_interval && fine.n_elems.is_multiple_of(coarse.n_elems)).then(|| fine.n_elems / coarse.n_elems)
}

/// P1 interpolation of coarse nodal values onto a mesh `factor` times finer.
pub fn prolong(values: &[f64], factor: usize) -> Vec<f64> {
    let n_elems = values.len() - 1;
    let mut out = Vec::with_capacity(n_elems * factor + 1);
    for e in 0..n_elems {
        let (left, right) = (values[e], values[e + 1]);
        for k in 0..factor {
            let theta = k as f64 / factor as f64;
            out.push((1.0 - theta) * left + theta * right);
        }
    }
    out.push(values[n_elems]);
    out
}

/// Injection onto a mesh `factor` times coarser.
pub fn restrict(values: &[f64], factor: usize) -> Vec<f64> {
    values.iter().step_by(factor).copied().collect()
}

/// Norm machinery on the finer mesh of one domain.
struct DomainPair {
    test_factor: usize,
    ref_factor: usize,
    mass: crate::tridiag::TridiagonalMatrix,
    stiff: crate::tridiag::TridiagonalMatrix,
}

impl DomainPair {
    fn new(test: &Mesh1D, reference: &Mesh1D) -> Result<Self> {
        let (fine, test_factor, ref_factor) = if let Some(q) = nesting_factor(test, reference) {
            (reference, q, 1)
        } else if let Some(q) = nesting_factor(reference, test) {
            (test, 1, q)
        } else {
            return Err(Error::NonNestedMeshes(format!(
                "{:?} meshes with {} and {} elements",
                test.domain, test.n_elems, reference.n_elems
            )));
        };
        Ok(DomainPair {
            test_factor,
            ref_factor,
            mass: assemble_mass(fine),
            stiff: assemble_stiffness(fine),
        })
    }

    /// (L2 error, H1 error, L2 norm of the reference).
    fn measure(&self, test: &[f64], reference: &[f64]) -> Result<(f64, f64, f64)> {
        let t = prolong(test, self.test_factor);
        let r = prolong(reference, self.ref_factor);
        let diff: Vec<f64> = t.iter().zip(&r).map(|(a, b)| a - b).collect();
        Ok((
            norm_with(&self.mass, &diff)?,
            norm_with(&self.stiff, &diff)?,
            norm_with(&self.mass, &r)?,
        ))
    }
}

/// Discrete space-time error norms of `test` against `reference`.
pub fn compare_records(test: &SolutionRecord, reference: &SolutionRecord) -> Result<ErrorReport> {
    let stent = DomainPair::new(&test.mesh_s, &reference.mesh_s)?;
    let media = DomainPair::new(&test.mesh_m, &reference.mesh_m)?;

    let mut pairs: Vec<_> = test
        .snapshots
        .iter()
        .filter_map(|s| {
            reference
                .snapshot_at(s.requested)
                .map(|r| (s.requested, &s.state, &r.state))
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoCommonSnapshots);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| same_time(a.0, b.0));

    let mut out = Vec::with_capacity(3);
    for field in Field::ALL {
        let pair = match field {
            Field::C => &stent,
            _ => &media,
        };
        let mut linf = 0.0f64;
        let mut ref_linf = 0.0f64;
        let mut l2_sq = 0.0;
        let mut h1_sq = 0.0;
        for (i, (t, ts, rs)) in pairs.iter().enumerate() {
            let (e_l2, e_h1, r_l2) = pair.measure(ts.field(field), rs.field(field))?;
            linf = linf.max(e_l2);
            ref_linf = ref_linf.max(r_l2);
            if let Some((t_next, _, _)) = pairs.get(i + 1) {
                let w = t_next - t;
                l2_sq += w * e_l2 * e_l2;
                h1_sq += w * e_h1 * e_h1;
            }
        }
        out.push(FieldErrors {
            linf_l2: linf,
            l2_l2: l2_sq.sqrt(),
            l2_h1: (field != Field::C2).then(|| h1_sq.sqrt()),
            ref_linf_l2: ref_linf,
        });
    }
    Ok(ErrorReport {
        c: out[0],
        c1: out[1],
        c2: out[2],
        n_times: pairs.len(),
    })
}

/// Observed orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn fit_rate(errors: &[f64], widths: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != widths.len() {
        return Err(Error::RateFit(format!(
            "{} errors for {} widths",
            errors.len(),
            widths.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::RateFit("need at least two levels".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::RateFit(format!("error values must be positive (got {e})")));
    }
    if widths.windows(2).any(|w| !(w[1] > 0.0 && w[1] < w[0])) {
        return Err(Error::RateFit("widths must be positive and strictly decreasing".into()));
    }
    Ok(errors
        .windows(2)
        .zip(widths.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Mesh and step of one run in a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    pub n_s: usize,
    pub n_m: usize,
    pub n_steps: usize,
}

impl Resolution {
    pub fn dt(&self, t_end: f64) -> f64 {
        t_end / self.n_steps as f64
    }
}

/// Snapshot times that lie on the step grid of `n_steps` steps (and hence on
/// every grid whose step count is a multiple of it).
pub fn aligned_times(t_end: f64, n_steps: usize, count: usize) -> Vec<f64> {
    let count = count.clamp(1, n_steps.max(1));
    let mut times: Vec<f64> = (1..=count)
        .map(|j| {
            let k = (j * n_steps + count / 2) / count;
            k as f64 * t_end / n_steps as f64
        })
        .collect();
    times.dedup();
    times
}

/// Runs one FEM configuration without CFL slack and with monitors sampled
/// sparsely; the studies only need the snapshots.
pub fn run_resolution(
    p: &ModelParams,
    res: Resolution,
    variant: Variant,
    t_end: f64,
    times: &[f64],
) -> Result<SolutionRecord> {
    run_resolution_from(p, res, variant, t_end, times, &initial_state)
}

/// [`run_resolution`] from an initial state built on the run's own mesh.
pub fn run_resolution_from(
    p: &ModelParams,
    res: Resolution,
    variant: Variant,
    t_end: f64,
    times: &[f64],
    initial: &dyn Fn(&FemOperators) -> SimState,
) -> Result<SolutionRecord> {
    let ops = FemOperators::new(p, res.n_s, res.n_m)?;
    let cfg = SchemeConfig {
        record_every: (res.n_steps / 100).max(1),
        ..SchemeConfig::new(variant, res.dt(t_end), t_end)
    };
    run_simulation_from(p, &ops, &cfg, times, initial(&ops))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceSetup {
    pub t_end: f64,
    /// Media elements on the coarsest level.
    pub n_m0: usize,
    /// Coating elements per media element count (`n_s = stent_ratio * n_m`).
    pub stent_ratio: usize,
    /// Steps on the coarsest level; quadrupled per halving of `h`.
    pub n_steps0: usize,
    /// Reference media elements as a multiple of the finest test level.
    pub reference_factor: usize,
    pub n_snapshots: usize,
}

impl ConvergenceSetup {
    /// Finest pair N_m = 20, 40 against N_m = 320, with `dt ~ h^2`.
    pub fn standard() -> Self {
        ConvergenceSetup {
            t_end: 0.1,
            n_m0: 10,
            stent_ratio: 2,
            n_steps0: 200,
            reference_factor: 8,
            n_snapshots: 50,
        }
    }

    pub fn level(&self, i: usize) -> Resolution {
        let n_m = self.n_m0 << i;
        Resolution {
            n_s: self.stent_ratio * n_m,
            n_m,
            n_steps: self.n_steps0 << (2 * i),
        }
    }

    pub fn reference(&self, levels: usize) -> Resolution {
        let finest = self.level(levels - 1);
        let f = self.reference_factor;
        Resolution {
            n_s: finest.n_s * f,
            n_m: finest.n_m * f,
            n_steps: finest.n_steps * f * f,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    /// Media mesh width per level.
    pub widths: Vec<f64>,
    pub resolutions: Vec<Resolution>,
    pub reference: Resolution,
    pub reports: Vec<ErrorReport>,
}

/// Which space-time norm a rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeNorm {
    LinfL2,
    L2L2,
    L2H1,
}

impl RateTable {
    pub fn errors(&self, field: Field, norm: TimeNorm) -> Option<Vec<f64>> {
        self.reports
            .iter()
            .map(|r| {
                let f = r.field(field);
                match norm {
                    TimeNorm::LinfL2 => Some(f.linf_l2),
                    TimeNorm::L2L2 => Some(f.l2_l2),
                    TimeNorm::L2H1 => f.l2_h1,
                }
            })
            .collect()
    }

    pub fn rates(&self, field: Field, norm: TimeNorm) -> Result<Vec<f64>> {
        let e = self
            .errors(field, norm)
            .ok_or_else(|| Error::RateFit(format!("{norm:?} not defined for {}", field.name())))?;
        fit_rate(&e, &self.widths)
    }
}

/// Monolithic runs on successively halved meshes against a much finer run.
pub fn convergence_study(p: &ModelParams, setup: &ConvergenceSetup, levels: usize) -> Result<RateTable> {
    convergence_study_from(p, setup, levels, &initial_state)
}

/// [`convergence_study`] from other initial data, given as a function of the
/// mesh so every level starts from the nodal interpolant of the same data.
pub fn convergence_study_from(
    p: &ModelParams,
    setup: &ConvergenceSetup,
    levels: usize,
    initial: &dyn Fn(&FemOperators) -> SimState,
) -> Result<RateTable> {
    if levels < 3 {
        return Err(Error::config("levels", "need at least 3 levels"));
    }
    let times = aligned_times(setup.t_end, setup.n_steps0, setup.n_snapshots);
    let reference = setup.reference(levels);
    let ref_rec = run_resolution_from(p, reference, Variant::Monolithic, setup.t_end, &times, initial)?;
    let resolutions: Vec<Resolution> = (0..levels).map(|i| setup.level(i)).collect();
    let reports = resolutions
        .iter()
        .map(|&res| {
            let rec = run_resolution_from(p, res, Variant::Monolithic, setup.t_end, &times, initial)?;
            compare_records(&rec, &ref_rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable {
        widths: resolutions.iter().map(|r| 1.0 / r.n_m as f64).collect(),
        resolutions,
        reference,
        reports,
    })
}

/// Test and reference resolutions for the fixed-configuration comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracySetup {
    pub t_end: f64,
    pub test: Resolution,
    pub reference: Resolution,
    pub reference_variant: Variant,
    pub n_snapshots: usize,
}

impl AccuracySetup {
    /// T = 1, (50, 25) elements with 6454 steps against (1000, 500) elements
    /// with 400 times as many steps.
    pub fn standard() -> Self {
        AccuracySetup {
            t_end: 1.0,
            test: Resolution {
                n_s: 50,
                n_m: 25,
                n_steps: 6454,
            },
            reference: Resolution {
                n_s: 1000,
                n_m: 500,
                n_steps: 6454 * 400,
            },
            reference_variant: Variant::Monolithic,
            n_snapshots: 100,
        }
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        aligned_times(self.t_end, self.test.n_steps, self.n_snapshots)
    }

    pub fn run_reference(&self, p: &ModelParams) -> Result<SolutionRecord> {
        run_resolution(
            p,
            self.reference,
            self.reference_variant,
            self.t_end,
            &self.snapshot_times(),
        )
    }
}

/// Coating-to-media element ratio against the relative errors it produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteppingRow {
    pub ratio: usize,
    pub resolution: Resolution,
    pub report: ErrorReport,
}

/// Runs `n_s = q * n_m` for each ratio `q` at a fixed step, using the
/// first-splitting scheme, against a precomputed reference.
pub fn stepping_study(
    p: &ModelParams,
    setup: &AccuracySetup,
    ratios: &[usize],
    reference: &SolutionRecord,
) -> Result<Vec<SteppingRow>> {
    if ratios.is_empty() || ratios.contains(&0) {
        return Err(Error::config("ratios", "need positive ratios"));
    }
    let times = setup.snapshot_times();
    ratios
        .iter()
        .map(|&q| {
            let resolution = Resolution {
                n_s: q * setup.test.n_m,
                ..setup.test
            };
            let rec = run_resolution(p, resolution, Variant::Alg1, setup.t_end, &times)?;
            Ok(SteppingRow {
                ratio: q,
                resolution,
                report: compare_records(&rec, reference)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgorithmComparison {
    pub alg1: ErrorReport,
    pub alg2: ErrorReport,
}

/// Both splittings on the same test configuration against one reference.
pub fn compare_algorithms(
    p: &ModelParams,
    setup: &AccuracySetup,
    reference: &SolutionRecord,
) -> Result<AlgorithmComparison> {
    let times = setup.snapshot_times();
    let run = |v| -> Result<ErrorReport> {
        let rec = run_resolution(p, setup.test, v, setup.t_end, &times)?;
        compare_records(&rec, reference)
    };
    Ok(AlgorithmComparison {
        alg1: run(Variant::Alg1)?,
        alg2: run(Variant::Alg2)?,
    })
}
