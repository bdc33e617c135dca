//! Finite-time distributed estimator of the leader's position and velocity.
//!
//! Each follower keeps `(r_i, v_i)` and runs
//! `r_i' = v_i - w1 sgn(sum_j b_ij (r_i - r_j))`,
//! `v_i' = -w2 sgn(sum_j b_ij (v_i - v_j))`,
//! where `j = 0` contributes the leader's true state.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, LEADER};
use crate::sign::sgn;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    /// Row `i` holds follower `i + 1`'s position estimate.
    pub r_hat: DMatrix<f64>,
    pub v_hat: DMatrix<f64>,
    pub omega1: f64,
    pub omega2: f64,
}

impl ObserverState {
    pub fn new(r_hat: DMatrix<f64>, v_hat: DMatrix<f64>, omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega2 > 0.0) {
            return Err(Error::invalid("observer gains omega1, omega2 must be positive"));
        }
        if r_hat.shape() != v_hat.shape() {
            return Err(Error::invalid("position and velocity estimates must share a shape"));
        }
        Ok(Self {
            r_hat,
            v_hat,
            omega1,
            omega2,
        })
    }

    /// Estimates start at each follower's own position with zero velocity.
    pub fn from_positions(q: &[DVector<f64>], omega1: f64, omega2: f64) -> Result<Self> {
        let n = q.len();
        let p = q.first().map_or(0, |v| v.len());
        let r = DMatrix::from_fn(n, p, |i, k| q[i][k]);
        Self::new(r, DMatrix::zeros(n, p), omega1, omega2)
    }

    pub fn n_followers(&self) -> usize {
        self.r_hat.nrows()
    }

    pub fn dof(&self) -> usize {
        self.r_hat.ncols()
    }

    pub fn r_row(&self, i: usize) -> DVector<f64> {
        self.r_hat.row(i).transpose()
    }

    pub fn v_row(&self, i: usize) -> DVector<f64> {
        self.v_hat.row(i).transpose()
    }
}

fn neighbor_disagreement(
    est: &DMatrix<f64>,
    leader: &DVector<f64>,
    g: &DirectedGraph,
    i: usize,
    k: usize,
) -> f64 {
    let own = est[(i, k)];
    let mut acc = 0.0;
    for (j, b) in g.neighbors(i + 1) {
        let other = if j == LEADER { leader[k] } else { est[(j - 1, k)] };
        acc += b * (own - other);
    }
    acc
}

/// Right-hand side of the observer with the signum evaluated pointwise.
pub fn observer_rhs(
    state: &ObserverState,
    g_b: &DirectedGraph,
    leader_q: &DVector<f64>,
    leader_qdot: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = state.r_hat.shape();
    let mut r_dot = state.v_hat.clone();
    let mut v_dot = DMatrix::zeros(n, p);
    for i in 0..n {
        for k in 0..p {
            r_dot[(i, k)] -= state.omega1 * sgn(neighbor_disagreement(&state.r_hat, leader_q, g_b, i, k));
            v_dot[(i, k)] = -state.omega2 * sgn(neighbor_disagreement(&state.v_hat, leader_qdot, g_b, i, k));
        }
    }
    (r_dot, v_dot)
}

/// Sufficient observer gain condition `omega2 > k_q / n`.
pub fn check_observer_gain(omega2: f64, k_q: f64, n: usize) -> bool {
    omega2 > k_q / n as f64
}

/// Earliest sample time after which both error series stay below `tol`.
pub fn detect_convergence(times: &[f64], pos_err: &[f64], vel_err: &[f64], tol: f64) -> Result<f64> {
    detect_convergence_after(times, pos_err, vel_err, tol, f64::NEG_INFINITY)
}

/// As [`detect_convergence`], considering only samples with `t >= start`.
pub fn detect_convergence_after(
    times: &[f64],
    pos_err: &[f64],
    vel_err: &[f64],
    tol: f64,
    start: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("convergence tolerance must be positive"));
    }
    if times.len() != pos_err.len() || times.len() != vel_err.len() {
        return Err(Error::invalid("error series must share the time grid"));
    }
    let first = times.partition_point(|&t| t < start);
    if first == times.len() {
        return Err(Error::NotConverged);
    }
    let mut t1 = None;
    for idx in (first..times.len()).rev() {
        if pos_err[idx] < tol && vel_err[idx] < tol {
            t1 = Some(times[idx]);
        } else {
            break;
        }
    }
    t1.ok_or(Error::NotConverged)
}

/// One step of the observer in which the signum values are chosen
/// consistently with the end-of-step estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldStep {
    pub r0: DMatrix<f64>,
    pub v0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub v1: DMatrix<f64>,
    /// Position estimate before the position correction was applied.
    pre: DMatrix<f64>,
    h: f64,
}

impl HeldStep {
    /// Estimates at fraction `theta` of the step, consistent with the
    /// held signum values.
    pub fn at(&self, theta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let dv = &self.v1 - &self.v0;
        let v = &self.v0 + &dv * theta;
        let r = &self.r0 + &self.v0 * (theta * self.h) + &dv * (0.5 * theta * theta * self.h)
            - (&self.pre - &self.r1) * theta;
        (r, v)
    }
}

fn sweep_order(g: &DirectedGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    seen[LEADER] = true;
    let mut order = Vec::with_capacity(n - 1);
    let mut frontier = std::collections::VecDeque::from([LEADER]);
    while let Some(src) = frontier.pop_front() {
        for dst in 1..n {
            if !seen[dst] && g.weight(dst, src) > 0.0 {
                seen[dst] = true;
                order.push(dst - 1);
                frontier.push_back(dst);
            }
        }
    }
    order.extend((1..n).filter(|&i| !seen[i]).map(|i| i - 1));
    order
}

/// Solves `w_i = base_i - h w sgn(sum_j b_ij (w_i - w_j))` coordinatewise by
/// Gauss-Seidel sweeps over the followers.
fn project(base: &DMatrix<f64>, leader: &DVector<f64>, g: &DirectedGraph, hw: f64, order: &[usize]) -> DMatrix<f64> {
    let (n, p) = base.shape();
    let mut w = base.clone();
    let degree: Vec<f64> = (0..n).map(|i| g.in_degree(i + 1)).collect();
    let max_sweeps = 4 * n + 8;
    for k in 0..p {
        for _ in 0..max_sweeps {
            let mut changed = false;
            for &i in order {
                if degree[i] <= 0.0 {
                    continue;
                }
                let mut pull = 0.0;
                for (j, b) in g.neighbors(i + 1) {
                    pull += b * if j == LEADER { leader[k] } else { w[(j - 1, k)] };
                }
                let center = pull / degree[i];
                let gap = base[(i, k)] - center;
                let next = if gap.abs() <= hw {
                    center
                } else {
                    base[(i, k)] - hw * sgn(gap)
                };
                if next != w[(i, k)] {
                    w[(i, k)] = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    w
}

/// Advances the observer by `h` with signum values held over the step.
pub fn held_step(
    state: &ObserverState,
    g_b: &DirectedGraph,
    leader_q_next: &DVector<f64>,
    leader_qdot_next: &DVector<f64>,
    h: f64,
) -> HeldStep {
    let order = sweep_order(g_b);
    let v1 = project(&state.v_hat, leader_qdot_next, g_b, h * state.omega2, &order);
    let pre = &state.r_hat + (&state.v_hat + &v1) * (0.5 * h);
    let r1 = project(&pre, leader_q_next, g_b, h * state.omega1, &order);
    HeldStep {
        r0: state.r_hat.clone(),
        v0: state.v_hat.clone(),
        r1,
        v1,
        pre,
        h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn pinned_single() -> DirectedGraph {
        DirectedGraph::from_edges(1, &[Edge { src: 0, dst: 1, weight: 5.0 }]).unwrap()
    }

    #[test]
    fn converged_state_is_stationary_for_the_sign_terms() {
        let q0 = DVector::from_vec(vec![0.2, -0.1]);
        let qd0 = DVector::from_vec(vec![1.0, 0.5]);
        let g = DirectedGraph::from_edges(
            2,
            &[Edge { src: 0, dst: 1, weight: 5.0 }, Edge { src: 1, dst: 2, weight: 5.0 }],
        )
        .unwrap();
        let r = DMatrix::from_fn(2, 2, |_, k| q0[k]);
        let v = DMatrix::from_fn(2, 2, |_, k| qd0[k]);
        let s = ObserverState::new(r, v.clone(), 1.0, 5.0).unwrap();
        let (rd, vd) = observer_rhs(&s, &g, &q0, &qd0);
        assert_eq!(rd, v);
        assert!(vd.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_graph_gives_free_integration() {
        let s = ObserverState::new(
            DMatrix::from_element(3, 2, 4.0),
            DMatrix::from_element(3, 2, -0.5),
            1.0,
            5.0,
        )
        .unwrap();
        let (rd, vd) = observer_rhs(&s, &DirectedGraph::empty(3), &DVector::zeros(2), &DVector::zeros(2));
        assert_eq!(rd, s.v_hat);
        assert!(vd.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pinned_follower_ahead_of_leader() {
        let q0 = DVector::from_vec(vec![0.0, 0.0]);
        let s = ObserverState::new(
            DMatrix::from_element(1, 2, 0.3),
            DMatrix::from_element(1, 2, 0.7),
            1.0,
            5.0,
        )
        .unwrap();
        let (rd, _) = observer_rhs(&s, &pinned_single(), &q0, &DVector::from_vec(vec![0.7, 0.7]));
        assert_eq!(rd, DMatrix::from_element(1, 2, 0.7 - 1.0));
    }

    #[test]
    fn gain_condition() {
        assert!(check_observer_gain(5.0, 4.0, 5));
        assert!(!check_observer_gain(0.8, 4.0, 5));
        assert!(!check_observer_gain(0.1, 10.0, 2));
    }

    #[test]
    fn convergence_detection() {
        let t: Vec<f64> = (0..=60).map(|k| k as f64 * 0.1).collect();
        let zero = vec![0.0; t.len()];
        assert_eq!(detect_convergence(&t, &zero, &zero, 1e-6).unwrap(), 0.0);
        let lin: Vec<f64> = t.iter().map(|&s| (3.0 - s).max(0.0)).collect();
        let t1 = detect_convergence(&t, &lin, &zero, 1e-6).unwrap();
        assert!((t1 - 3.0).abs() < 1e-9, "{t1}");
        let osc: Vec<f64> = t.iter().map(|&s| 1.0 + s.sin()).collect();
        assert!(matches!(detect_convergence(&t, &osc, &zero, 1e-6), Err(Error::NotConverged)));
    }

    #[test]
    fn held_step_lands_on_leader_when_close() {
        let q1 = DVector::from_vec(vec![0.1, 0.2]);
        let qd1 = DVector::from_vec(vec![0.3, 0.4]);
        let s = ObserverState::new(
            DMatrix::from_fn(1, 2, |_, k| q1[k] - 0.3 * 1e-3 + 1e-5),
            DMatrix::from_fn(1, 2, |_, k| qd1[k] - 1e-3),
            1.0,
            5.0,
        )
        .unwrap();
        let step = held_step(&s, &pinned_single(), &q1, &qd1, 1e-3);
        assert!((step.v1.row(0).transpose() - &qd1).norm() < 1e-15);
        assert!((step.r1.row(0).transpose() - &q1).norm() < 1e-15);
        let (r, v) = step.at(1.0);
        assert_eq!(r, step.r1);
        assert_eq!(v, step.v1);
        let (r, v) = step.at(0.0);
        assert_eq!(r, step.r0);
        assert_eq!(v, step.v0);
    }

    #[test]
    fn held_step_saturates_far_from_leader() {
        let s = ObserverState::new(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 1.0), 1.0, 5.0)
            .unwrap();
        let h = 0.01;
        let step = held_step(&s, &pinned_single(), &DVector::zeros(1), &DVector::zeros(1), h);
        assert!((step.v1[(0, 0)] - (1.0 - 5.0 * h)).abs() < 1e-15);
        let expect_r = 2.0 + h * (1.0 + step.v1[(0, 0)]) / 2.0 - h;
        assert!((step.r1[(0, 0)] - expect_r).abs() < 1e-15);
    }
}
