//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use stentsim::{ModelParams, TridiagonalMatrix};

pub type Dense = Vec<Vec<f64>>;

/// Element matrices by 2-point Gauss quadrature, accumulated densely.
///
/// Entry `[test][trial]`. The rule is exact for the cubic integrands that
/// occur, so any disagreement with the assembled matrices is a bug.
pub struct GaussOracle {
    pub mass: Dense,
    pub stiff: Dense,
    pub conv: Dense,
}

impl GaussOracle {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        let dim = n + 1;
        let mut mass = vec![vec![0.0; dim]; dim];
        let mut stiff = mass.clone();
        let mut conv = mass.clone();
        let h = (b - a) / n as f64;
        let g = 1.0 / 3f64.sqrt();
        for e in 0..n {
            for q in [-g, g] {
                // Reference coordinate in [0, 1]; avoids cancellation in x - x_e.
                let xi = 0.5 * (1.0 + q);
                let w = 0.5 * h;
                let phi = [1.0 - xi, xi];
                let dphi = [-1.0 / h, 1.0 / h];
                for (lt, test) in [e, e + 1].into_iter().enumerate() {
                    for (lr, trial) in [e, e + 1].into_iter().enumerate() {
                        mass[test][trial] += w * phi[lr] * phi[lt];
                        stiff[test][trial] += w * dphi[lr] * dphi[lt];
                        conv[test][trial] += w * dphi[lr] * phi[lt];
                    }
                }
            }
        }
        GaussOracle { mass, stiff, conv }
    }

    pub fn coating_operator(&self, p: &ModelParams) -> Dense {
        let mut a = scale(&self.stiff, p.delta);
        let last = a.len() - 1;
        a[last][last] += p.delta * p.p_tilde;
        a
    }

    pub fn media_operator(&self, p: &ModelParams) -> Dense {
        let n = self.mass.len();
        let mut b = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                b[i][j] = self.stiff[i][j] + p.da * self.mass[i][j] + p.pe * self.conv[i][j];
            }
        }
        b[0][0] += p.delta * p.p_tilde + p.pe;
        b
    }
}

pub fn scale(m: &Dense, s: f64) -> Dense {
    m.iter().map(|r| r.iter().map(|v| s * v).collect()).collect()
}

/// Largest entrywise deviation relative to the entry's size. Entries that
/// are roundoff-zero in both (below `1e-14` of the matrix scale) are skipped.
pub fn max_relative_deviation(m: &TridiagonalMatrix, oracle: &Dense) -> f64 {
    let n = oracle.len();
    assert_eq!(m.dim(), n);
    let scale = oracle.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let (got, want) = (m.get(i, j), oracle[i][j]);
            let size = got.abs().max(want.abs());
            if size <= 1e-14 * scale {
                continue;
            }
            worst = worst.max((got - want).abs() / size);
        }
    }
    worst
}

pub fn row_sums(m: &TridiagonalMatrix) -> Vec<f64> {
    m.apply(&vec![1.0; m.dim()])
}

pub fn max_abs_entry(m: &TridiagonalMatrix) -> f64 {
    m.lower
        .iter()
        .chain(&m.diag)
        .chain(&m.upper)
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Prints the one-line verdict used by the acceptance suite.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
