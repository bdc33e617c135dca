//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn sym_max_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Extreme eigenvalues of the symmetric 2x2 matrix `[[a, b], [b, d]]`.
pub fn eig2_sym(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Stacks per-agent vectors into one column.
pub fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut offset = 0;
    for p in parts {
        out.rows_mut(offset, p.len()).copy_from(p);
        offset += p.len();
    }
    out
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig2_matches_general_solver() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.5, 1.5, 0.7]);
        let (lo, hi) = eig2_sym(3.0, 1.5, 0.7);
        assert!((lo - sym_min_eig(&m)).abs() < 1e-12);
        assert!((hi - sym_max_eig(&m)).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, 2.0]));
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-12);
    }
}
