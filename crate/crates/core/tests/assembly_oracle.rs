mod common;

use common::{max_abs_entry, max_relative_deviation, row_sums, GaussOracle};
use proptest::prelude::*;
use stentsim::assembly::{assemble_a, assemble_b, assemble_convection, assemble_mass, assemble_stiffness};
use stentsim::{build_mesh, Domain, ModelParams};

fn generic() -> ModelParams {
    ModelParams {
        delta: 0.3,
        p_tilde: 2.0,
        pe: 1.7,
        da: 0.9,
        k_part: 3.0,
        phi: 0.4,
        l: 0.5,
    }
}

#[test]
fn every_matrix_matches_quadrature() {
    for p in [ModelParams::paper_defaults(), generic()] {
        for n in 1..=64 {
            let ms = build_mesh(Domain::Stent, n, p.l).unwrap();
            let mm = build_mesh(Domain::Media, n, p.l).unwrap();
            let os = GaussOracle::new(-p.l, 0.0, n);
            let om = GaussOracle::new(0.0, 1.0, n);
            let checks = [
                ("mass_s", max_relative_deviation(&assemble_mass(&ms), &os.mass)),
                ("stiff_s", max_relative_deviation(&assemble_stiffness(&ms), &os.stiff)),
                ("mass_m", max_relative_deviation(&assemble_mass(&mm), &om.mass)),
                ("stiff_m", max_relative_deviation(&assemble_stiffness(&mm), &om.stiff)),
                ("conv_m", max_relative_deviation(&assemble_convection(&mm), &om.conv)),
                (
                    "A",
                    max_relative_deviation(&assemble_a(&ms, &p), &os.coating_operator(&p)),
                ),
                (
                    "B",
                    max_relative_deviation(&assemble_b(&mm, &p), &om.media_operator(&p)),
                ),
            ];
            for (name, dev) in checks {
                assert!(dev <= 1e-12, "{name} n={n}: relative deviation {dev:e}");
            }
        }
    }
}

#[test]
fn paper_media_operator_entries() {
    // N = 25 media elements: h = 0.04.
    let p = ModelParams::paper_defaults();
    let b = assemble_b(&build_mesh(Domain::Media, 25, p.l).unwrap(), &p);
    let h: f64 = 0.04;
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    assert!(near(
        b.get(0, 0),
        1.0 / h + p.da * h / 3.0 - p.pe / 2.0 + p.delta * p.p_tilde + p.pe
    ));
    assert!(near(b.get(5, 5), 2.0 / h + p.da * 2.0 * h / 3.0));
    assert!(near(b.get(5, 6), -1.0 / h + p.da * h / 6.0 + p.pe / 2.0));
    assert!(near(b.get(6, 5), -1.0 / h + p.da * h / 6.0 - p.pe / 2.0));
    assert!(near(b.get(25, 25), 1.0 / h + p.da * h / 3.0 + p.pe / 2.0));
}

#[test]
fn row_sum_identities() {
    for p in [ModelParams::paper_defaults(), generic()] {
        for n in 1..=64 {
            let ms = build_mesh(Domain::Stent, n, p.l).unwrap();
            let mm = build_mesh(Domain::Media, n, p.l).unwrap();
            let a = assemble_a(&ms, &p);
            let sa = row_sums(&a);
            let tol_a = 1e-13 * max_abs_entry(&a);
            for (i, v) in sa.iter().enumerate() {
                let want = if i == n { p.delta * p.p_tilde } else { 0.0 };
                assert!((v - want).abs() <= tol_a, "A n={n} row {i}: {v} vs {want}");
            }
            let b = assemble_b(&mm, &p);
            let psi_ones = row_sums(&assemble_mass(&mm));
            let tol_b = 1e-13 * max_abs_entry(&b);
            for (i, v) in row_sums(&b).iter().enumerate() {
                let mut want = p.da * psi_ones[i];
                if i == 0 {
                    want += p.delta * p.p_tilde + p.pe;
                }
                assert!((v - want).abs() <= tol_b, "B n={n} row {i}: {v} vs {want}");
            }
            // Total of the mass matrix is the interval length.
            let total: f64 = psi_ones.iter().sum();
            assert!((total - 1.0).abs() <= 1e-13);
        }
    }
}

#[test]
fn mass_matrices_spd_by_gershgorin() {
    let p = ModelParams::paper_defaults();
    for n in 1..=64 {
        for d in [Domain::Stent, Domain::Media] {
            let m = assemble_mass(&build_mesh(d, n, p.l).unwrap());
            assert!(m.is_symmetric(0.0));
            assert!(m.is_strictly_diagonally_dominant());
            assert!(m.diag.iter().chain(&m.lower).all(|v| *v > 0.0));
        }
    }
}

proptest! {
    #[test]
    fn stiffness_annihilates_constants_and_reproduces_slopes(n in 1usize..200, l in 0.001f64..2.0) {
        let mesh = build_mesh(Domain::Stent, n, l).unwrap();
        let k = assemble_stiffness(&mesh);
        let s = row_sums(&k);
        prop_assert!(s.iter().all(|v| v.abs() <= 1e-10 / mesh.h));
        // (x', psi_j') summed against x gives the boundary flux only: x^T K x = l.
        let e = k.quadratic_form(&mesh.nodes, &mesh.nodes);
        prop_assert!((e - l).abs() <= 1e-9 * (1.0 + l));
    }

    #[test]
    fn convection_of_linear_function_is_mass_row_sum(n in 1usize..200) {
        // For w = x, (w', psi_j) = integral of psi_j.
        let mesh = build_mesh(Domain::Media, n, 0.028).unwrap();
        let c = assemble_convection(&mesh).apply(&mesh.nodes);
        let m = row_sums(&assemble_mass(&mesh));
        for (a, b) in c.iter().zip(&m) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
