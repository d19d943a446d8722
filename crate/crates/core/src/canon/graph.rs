//! Graph implementations of the matrix atoms in log space.

use super::{AffineForm, ProgramBuilder};

/// Epigraph of `log λ_pf(X)` for `U = log X`, an `n×n` row-major array of
/// forms. Introduces `t` and eigenvector coordinates `ν_1..ν_{n-1}`, with
/// `ν_0` pinned to zero since the eigenvector is only defined up to scale,
/// and emits `Σ_j exp(U_ij + ν_j − t − ν_i) − 1 <= 0` for each row `i`.
/// Returns the form for `t`.
pub fn graph_pf_eigenvalue(b: &mut ProgramBuilder, u: &[AffineForm], n: usize) -> AffineForm {
    assert_eq!(u.len(), n * n, "pf_eigenvalue graph needs a square argument");
    let t = b.aux("pf_eigenvalue t");
    let mut nu = vec![AffineForm::constant(0.0)];
    for i in 1..n {
        nu.push(b.aux(format!("pf_eigenvalue nu[{i}]")));
    }
    for i in 0..n {
        let terms = (0..n)
            .map(|j| &(&(&u[i * n + j] + &nu[j]) - &t) - &nu[i])
            .collect();
        b.push_inequality(terms, AffineForm::constant(-1.0), "pf_eigenvalue");
    }
    t
}

/// Graph of `log (I − X)^{-1}` for `U = log X`. Introduces `W = log Y` and
/// emits `Σ_k exp(W_ik + U_kj − W_ij) + [i=j] exp(−W_ij) − 1 <= 0` for every
/// entry, i.e. `YX + I <= Y`. Any feasible `Y` dominates `(I − X)^{-1}`
/// entrywise, so `W` itself serves as the output.
pub fn graph_eye_minus_inv(b: &mut ProgramBuilder, u: &[AffineForm], n: usize) -> Vec<AffineForm> {
    assert_eq!(u.len(), n * n, "eye_minus_inv graph needs a square argument");
    let w: Vec<AffineForm> = (0..n * n)
        .map(|k| b.aux(format!("eye_minus_inv W[{},{}]", k / n, k % n)))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let wij = &w[i * n + j];
            let mut terms: Vec<AffineForm> = (0..n)
                .map(|k| &(&w[i * n + k] + &u[k * n + j]) - wij)
                .collect();
            if i == j {
                terms.push(-wij);
            }
            b.push_inequality(terms, AffineForm::constant(-1.0), "eye_minus_inv");
        }
    }
    w
}
