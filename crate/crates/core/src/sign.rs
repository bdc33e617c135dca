//! Signum-type nonlinearities and the box-constrained complementarity solve
//! used to select set-valued signum values.

use nalgebra::{DMatrix, DVector};

/// Signum with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sgn_vec(x: &DVector<f64>) -> DVector<f64> {
    x.map(sgn)
}

/// Boundary-layer approximation `x / (||x|| + eps)`.
pub fn boundary_layer(x: &DVector<f64>, eps: f64) -> DVector<f64> {
    let denom = x.norm() + eps;
    if denom == 0.0 {
        return DVector::zeros(x.len());
    }
    x / denom
}

/// Largest dimension solved by active-set enumeration; beyond it projected
/// Gauss-Seidel is used.
const ENUMERATION_LIMIT: usize = 6;

/// Finds `u` in `[-1, 1]^p` with `u in Sgn(y - B u)` componentwise, where the
/// set-valued signum is `{1}` for positive, `{-1}` for negative and `[-1, 1]`
/// at zero. For symmetric positive definite `B` this is the unique minimizer
/// of `0.5 u^T B u - y^T u` over the box.
pub fn solve_box_lcp(b: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let p = y.len();
    if p == 0 {
        return DVector::zeros(0);
    }
    if p <= ENUMERATION_LIMIT {
        if let Some(u) = enumerate_active_sets(b, y) {
            return u;
        }
    }
    projected_gauss_seidel(b, y, DVector::zeros(p))
}

fn kkt_residual(b: &DMatrix<f64>, y: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let x = y - b * u;
    let scale = 1e-10 * (1.0 + y.amax() + b.amax());
    let mut worst: f64 = 0.0;
    for k in 0..u.len() {
        let viol = if u[k] >= 1.0 {
            (-x[k]).max(0.0)
        } else if u[k] <= -1.0 {
            x[k].max(0.0)
        } else {
            x[k].abs()
        };
        worst = worst.max(viol - scale);
    }
    worst.max(0.0) + (u.amax() - 1.0).max(0.0)
}

fn enumerate_active_sets(b: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let p = y.len();
    let total = 3usize.pow(p as u32);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..total {
        // state per coordinate: 0 free, 1 pinned at +1, 2 pinned at -1
        let mut c = code;
        let mut state = vec![0u8; p];
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..p).filter(|&k| state[k] == 0).collect();
        let mut u = DVector::from_fn(p, |k, _| match state[k] {
            1 => 1.0,
            2 => -1.0,
            _ => 0.0,
        });
        if !free.is_empty() {
            let nf = free.len();
            let bff = DMatrix::from_fn(nf, nf, |a, bb| b[(free[a], free[bb])]);
            let mut rhs = DVector::from_fn(nf, |a, _| y[free[a]]);
            for k in (0..p).filter(|k| state[*k] != 0) {
                for (a, &f) in free.iter().enumerate() {
                    rhs[a] -= b[(f, k)] * u[k];
                }
            }
            let sol = match bff.lu().solve(&rhs) {
                Some(s) => s,
                None => continue,
            };
            for (a, &f) in free.iter().enumerate() {
                u[f] = sol[a];
            }
        }
        let r = kkt_residual(b, y, &u);
        if r == 0.0 {
            return Some(u);
        }
        if best.as_ref().is_none_or(|(br, _)| r < *br) {
            best = Some((r, u));
        }
    }
    best.filter(|(r, _)| *r < 1e-8).map(|(_, u)| u)
}

fn projected_gauss_seidel(b: &DMatrix<f64>, y: &DVector<f64>, mut u: DVector<f64>) -> DVector<f64> {
    let p = y.len();
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for k in 0..p {
            let diag = b[(k, k)];
            if diag <= 0.0 {
                continue;
            }
            let mut r = y[k];
            for j in 0..p {
                if j != k {
                    r -= b[(k, j)] * u[j];
                }
            }
            let next = (r / diag).clamp(-1.0, 1.0);
            change = change.max((next - u[k]).abs());
            u[k] = next;
        }
        if change < 1e-14 {
            break;
        }
    }
    u
}
