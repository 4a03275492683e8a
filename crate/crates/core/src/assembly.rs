//! Uniform meshes and P1 finite-element operators on the two subdomains.
//!
//! Every matrix is stored with row = test function and column = trial
//! function, so `B * y` is the Galerkin residual of the trial function with
//! coefficients `y`. For the nonsymmetric media operator this is the transpose
//! of the `B_ij = B[psi_i, psi_j]` indexing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::tridiag::TridiagonalMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Drug-loaded coating, `(-l, 0)`.
    Stent,
    /// Arterial media, `(0, 1)`.
    Media,
}

impl Domain {
    /// Single-letter tag used in CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            Domain::Stent => "s",
            Domain::Media => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub domain: Domain,
    pub a: f64,
    pub b: f64,
    pub n_elems: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_elems + 1
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Uniform partition of the coating `(-l, 0)` or the media `(0, 1)`.
///
/// `l` is ignored for the media.
pub fn build_mesh(domain: Domain, n_elems: usize, l: f64) -> Result<Mesh1D> {
    if n_elems == 0 {
        return Err(Error::EmptyMesh);
    }
    let (a, b) = match domain {
        Domain::Stent => {
            if !(l > 0.0) {
                return Err(Error::InvalidParam {
                    name: "l".into(),
                    value: l,
                    reason: "must be positive",
                });
            }
            (-l, 0.0)
        }
        Domain::Media => (0.0, 1.0),
    };
    let h = (b - a) / n_elems as f64;
    // Nodes from the left end, with the right end pinned exactly.
    let mut nodes: Vec<f64> = (0..=n_elems).map(|i| a + i as f64 * h).collect();
    nodes[n_elems] = b;
    Ok(Mesh1D {
        domain,
        a,
        b,
        n_elems,
        h,
        nodes,
    })
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh1D) -> TridiagonalMatrix {
    let h = mesh.h;
    let mut m = TridiagonalMatrix::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elems {
        m.add_to(e, e, h / 3.0);
        m.add_to(e + 1, e + 1, h / 3.0);
        m.add_to(e, e + 1, h / 6.0);
        m.add_to(e + 1, e, h / 6.0);
    }
    m
}

/// P1 stiffness matrix `(psi_i', psi_j')` with no boundary terms.
pub fn assemble_stiffness(mesh: &Mesh1D) -> TridiagonalMatrix {
    let k = 1.0 / mesh.h;
    let mut m = TridiagonalMatrix::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elems {
        m.add_to(e, e, k);
        m.add_to(e + 1, e + 1, k);
        m.add_to(e, e + 1, -k);
        m.add_to(e + 1, e, -k);
    }
    m
}

/// P1 convection matrix with entry (test j, trial i) = `(psi_i', psi_j)`.
pub fn assemble_convection(mesh: &Mesh1D) -> TridiagonalMatrix {
    let mut m = TridiagonalMatrix::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elems {
        for test in [e, e + 1] {
            m.add_to(test, e, -0.5);
            m.add_to(test, e + 1, 0.5);
        }
    }
    m
}

/// Coating operator: `delta (w', v') + delta P w(0) v(0)`.
///
/// The point term sits on the last node, `x = 0`.
pub fn assemble_a(mesh_s: &Mesh1D, p: &ModelParams) -> TridiagonalMatrix {
    let stiff = assemble_stiffness(mesh_s);
    let mut a = stiff.scaled(p.delta);
    let last = mesh_s.n_nodes() - 1;
    a.add_to(last, last, p.transfer());
    a
}

/// Media operator: `Pe (w', v) + Da (w, v) + (w', v') + (delta P + Pe) w(0) v(0)`.
pub fn assemble_b(mesh_m: &Mesh1D, p: &ModelParams) -> TridiagonalMatrix {
    let stiff = assemble_stiffness(mesh_m);
    let mass = assemble_mass(mesh_m);
    let conv = assemble_convection(mesh_m);
    let mut b = stiff.combine(1.0, &mass, p.da).combine(1.0, &conv, p.pe);
    b.add_to(0, 0, p.transfer() + p.pe);
    b
}

/// All matrices needed by the stepper and the norms, for one mesh pair.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub mesh_s: Mesh1D,
    pub mesh_m: Mesh1D,
    pub psi_s: TridiagonalMatrix,
    pub psi_m: TridiagonalMatrix,
    pub mat_a: TridiagonalMatrix,
    pub mat_b: TridiagonalMatrix,
    /// Unscaled stiffness on each mesh, for H1 seminorms.
    pub stiff_s: TridiagonalMatrix,
    pub stiff_m: TridiagonalMatrix,
}

impl FemOperators {
    pub fn new(p: &ModelParams, n_s: usize, n_m: usize) -> Result<Self> {
        let mesh_s = build_mesh(Domain::Stent, n_s, p.l)?;
        let mesh_m = build_mesh(Domain::Media, n_m, p.l)?;
        Ok(Self::from_meshes(p, mesh_s, mesh_m))
    }

    pub fn from_meshes(p: &ModelParams, mesh_s: Mesh1D, mesh_m: Mesh1D) -> Self {
        FemOperators {
            psi_s: assemble_mass(&mesh_s),
            psi_m: assemble_mass(&mesh_m),
            mat_a: assemble_a(&mesh_s, p),
            mat_b: assemble_b(&mesh_m, p),
            stiff_s: assemble_stiffness(&mesh_s),
            stiff_m: assemble_stiffness(&mesh_m),
            mesh_s,
            mesh_m,
        }
    }

    pub fn mesh(&self, domain: Domain) -> &Mesh1D {
        match domain {
            Domain::Stent => &self.mesh_s,
            Domain::Media => &self.mesh_m,
        }
    }

    pub fn mass(&self, domain: Domain) -> &TridiagonalMatrix {
        match domain {
            Domain::Stent => &self.psi_s,
            Domain::Media => &self.psi_m,
        }
    }

    pub fn stiffness(&self, domain: Domain) -> &TridiagonalMatrix {
        match domain {
            Domain::Stent => &self.stiff_s,
            Domain::Media => &self.stiff_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
    H1Semi,
}

/// L2 norm or H1 seminorm of the P1 function with nodal values `v`.
pub fn discrete_norm(v: &[f64], ops: &FemOperators, kind: NormKind, domain: Domain) -> Result<f64> {
    let m = match kind {
        NormKind::L2 => ops.mass(domain),
        NormKind::H1Semi => ops.stiffness(domain),
    };
    norm_with(m, v)
}

pub(crate) fn norm_with(m: &TridiagonalMatrix, v: &[f64]) -> Result<f64> {
    if v.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: v.len(),
        });
    }
    // Roundoff can leave a tiny negative value for near-zero vectors.
    Ok(m.quadratic_form(v, v).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn media_mesh_four_elements() {
        let m = build_mesh(Domain::Media, 4, 0.028).unwrap();
        assert_eq!(m.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.h, 0.25);
    }

    #[test]
    fn stent_mesh_two_elements() {
        let m = build_mesh(Domain::Stent, 2, 0.028).unwrap();
        assert_relative_eq!(m.h, 0.014, max_relative = 1e-15);
        assert_eq!(m.nodes[0], -0.028);
        assert_relative_eq!(m.nodes[1], -0.014, max_relative = 1e-15);
        assert_eq!(m.nodes[2], 0.0);
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(matches!(build_mesh(Domain::Media, 0, 0.028), Err(Error::EmptyMesh)));
    }

    #[test]
    fn mass_two_elements() {
        let m = assemble_mass(&build_mesh(Domain::Media, 2, 1.0).unwrap());
        let expect_diag = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in m.diag.iter().zip(expect_diag) {
            assert_relative_eq!(*a, b, max_relative = 1e-15);
        }
        for v in m.lower.iter().chain(&m.upper) {
            assert_relative_eq!(*v, 1.0 / 12.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn mass_single_element() {
        let m = assemble_mass(&build_mesh(Domain::Media, 1, 1.0).unwrap());
        assert_relative_eq!(m.get(0, 0), 1.0 / 3.0);
        assert_relative_eq!(m.get(0, 1), 1.0 / 6.0);
        assert_relative_eq!(m.get(1, 0), 1.0 / 6.0);
        assert_relative_eq!(m.get(1, 1), 1.0 / 3.0);
    }

    #[test]
    fn coating_operator_single_element() {
        let p = ModelParams::paper_defaults();
        let a = assemble_a(&build_mesh(Domain::Stent, 1, p.l).unwrap(), &p);
        let d = p.delta / p.l;
        assert_relative_eq!(d, 1.4286e-5, max_relative = 1e-4);
        assert_relative_eq!(a.get(0, 0), d, max_relative = 1e-14);
        assert_relative_eq!(a.get(0, 1), -d, max_relative = 1e-14);
        assert_relative_eq!(a.get(1, 0), -d, max_relative = 1e-14);
        assert_relative_eq!(a.get(1, 1), d + 0.018, max_relative = 1e-14);
    }

    #[test]
    fn zero_diffusivity_leaves_point_term() {
        // Not a valid parameter set; only the assembly is exercised.
        let p = ModelParams {
            delta: 0.0,
            ..ModelParams::paper_defaults()
        };
        let a = assemble_a(&build_mesh(Domain::Stent, 3, 0.028).unwrap(), &p);
        assert!(a.lower.iter().chain(&a.upper).all(|v| *v == 0.0));
        assert_eq!(a.diag, vec![0.0; 4]);
    }

    #[test]
    fn media_operator_is_nonsymmetric() {
        let p = ModelParams::paper_defaults();
        let b = assemble_b(&build_mesh(Domain::Media, 5, p.l).unwrap(), &p);
        assert!(!b.is_symmetric(1e-12));
        // Convection splits evenly around the symmetric part.
        for (l, u) in b.lower.iter().zip(&b.upper) {
            assert_relative_eq!(u - l, p.pe, max_relative = 1e-12);
        }
    }

    #[test]
    fn norms_of_simple_functions() {
        let p = ModelParams::paper_defaults();
        let ops = FemOperators::new(&p, 7, 9).unwrap();
        let ones_m = vec![1.0; 10];
        let ones_s = vec![1.0; 8];
        assert_relative_eq!(
            discrete_norm(&ones_m, &ops, NormKind::L2, Domain::Media).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        let ns = discrete_norm(&ones_s, &ops, NormKind::L2, Domain::Stent).unwrap();
        assert_relative_eq!(ns, 0.028f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(ns, 0.16733, max_relative = 1e-4);
        let slope = ops.mesh_m.nodes.clone();
        assert_relative_eq!(
            discrete_norm(&slope, &ops, NormKind::H1Semi, Domain::Media).unwrap(),
            1.0,
            max_relative = 1e-13
        );
        assert!(discrete_norm(&ones_s, &ops, NormKind::L2, Domain::Media).is_err());
    }
}
