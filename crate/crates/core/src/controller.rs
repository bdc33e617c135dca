//! Model-independent tracking control laws.
//!
//! `tau_i = -eta sum_j a_ij ((q_i - q_j) + mu (q'_i - q'_j)) - beta s(x_i)` with
//! `x_i = (q_i - r_i) + mu (q'_i - v_i)` and `s` either the elementwise signum
//! or the boundary layer `x / (||x|| + eps)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::sign::{boundary_layer, sgn_vec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub mu: f64,
    pub eta: f64,
    pub beta: f64,
    /// Boundary-layer width; zero selects the exact signum.
    #[serde(default)]
    pub epsilon: f64,
}

impl GainSet {
    pub fn new(mu: f64, eta: f64, beta: f64, epsilon: f64) -> Result<Self> {
        let g = Self { mu, eta, beta, epsilon };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta = {} must exceed 1", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon = {} must be nonnegative", self.epsilon)));
        }
        Ok(())
    }

    pub fn is_continuous(&self) -> bool {
        self.epsilon > 0.0
    }
}

/// `sum_j a_ij ((q_i - q_j) + mu (q'_i - q'_j))` for graph node `node`.
/// `q` and `qdot` are indexed by graph node, leader first.
pub fn consensus_term(
    node: usize,
    g_a: &DirectedGraph,
    q: &[DVector<f64>],
    qdot: &[DVector<f64>],
    mu: f64,
) -> DVector<f64> {
    let mut acc = DVector::zeros(q[node].len());
    for (j, a) in g_a.neighbors(node) {
        acc += ((&q[node] - &q[j]) + (&qdot[node] - &qdot[j]) * mu) * a;
    }
    acc
}

pub fn sliding_variable(
    q_i: &DVector<f64>,
    qdot_i: &DVector<f64>,
    r_hat_i: &DVector<f64>,
    v_hat_i: &DVector<f64>,
    mu: f64,
) -> DVector<f64> {
    (q_i - r_hat_i) + (qdot_i - v_hat_i) * mu
}

pub fn control_discontinuous(
    node: usize,
    g_a: &DirectedGraph,
    q: &[DVector<f64>],
    qdot: &[DVector<f64>],
    r_hat_i: &DVector<f64>,
    v_hat_i: &DVector<f64>,
    gains: &GainSet,
) -> DVector<f64> {
    let lin = consensus_term(node, g_a, q, qdot, gains.mu);
    let x = sliding_variable(&q[node], &qdot[node], r_hat_i, v_hat_i, gains.mu);
    -lin * gains.eta - sgn_vec(&x) * gains.beta
}

pub fn control_continuous(
    node: usize,
    g_a: &DirectedGraph,
    q: &[DVector<f64>],
    qdot: &[DVector<f64>],
    r_hat_i: &DVector<f64>,
    v_hat_i: &DVector<f64>,
    gains: &GainSet,
) -> DVector<f64> {
    let lin = consensus_term(node, g_a, q, qdot, gains.mu);
    let x = sliding_variable(&q[node], &qdot[node], r_hat_i, v_hat_i, gains.mu);
    -lin * gains.eta - boundary_layer(&x, gains.epsilon) * gains.beta
}

/// Dispatches on `gains.epsilon`.
pub fn control(
    node: usize,
    g_a: &DirectedGraph,
    q: &[DVector<f64>],
    qdot: &[DVector<f64>],
    r_hat_i: &DVector<f64>,
    v_hat_i: &DVector<f64>,
    gains: &GainSet,
) -> DVector<f64> {
    if gains.is_continuous() {
        control_continuous(node, g_a, q, qdot, r_hat_i, v_hat_i, gains)
    } else {
        control_discontinuous(node, g_a, q, qdot, r_hat_i, v_hat_i, gains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn hand_expansion_single_pinned_agent() {
        let g = DirectedGraph::from_edges(1, &[Edge { src: 0, dst: 1, weight: 5.0 }]).unwrap();
        let q0 = v(&[0.3, -0.2]);
        let q = vec![q0.clone(), v(&[0.4, -0.2])];
        let qd = vec![v(&[1.0, 2.0]), v(&[1.0, 2.0])];
        let gains = GainSet::new(1.5, 16.0, 25.0, 0.0).unwrap();
        let tau = control_discontinuous(1, &g, &q, &qd, &q0, &qd[0], &gains);
        let first = -16.0 * 5.0 * (0.4f64 - 0.3) - 25.0;
        assert!((tau[0] - first).abs() < 1e-12);
        assert!((tau[0] + 33.0).abs() < 1e-12);
        assert_eq!(tau[1], 0.0);
    }

    #[test]
    fn synchronized_state_needs_no_effort() {
        let g = DirectedGraph::from_edges(1, &[Edge { src: 0, dst: 1, weight: 5.0 }]).unwrap();
        let q = vec![v(&[1.0, 2.0]); 2];
        let qd = vec![v(&[0.1, 0.2]); 2];
        let gains = GainSet::new(1.5, 16.0, 25.0, 0.0).unwrap();
        let tau = control_discontinuous(1, &g, &q, &qd, &q[0], &qd[0], &gains);
        assert_eq!(tau, DVector::zeros(2));
    }

    #[test]
    fn isolated_agent_gets_pure_signum() {
        let g = DirectedGraph::empty(1);
        let q = vec![v(&[0.0, 0.0]), v(&[1.0, 1.0])];
        let qd = vec![v(&[0.0, 0.0]); 2];
        let gains = GainSet::new(1.0, 2.0, 7.0, 0.0).unwrap();
        let tau = control_discontinuous(1, &g, &q, &qd, &q[0], &qd[0], &gains);
        assert_eq!(tau, v(&[-7.0, -7.0]));
    }

    #[test]
    fn gain_validation() {
        assert!(GainSet::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(GainSet::new(0.0, 2.0, 1.0, 0.0).is_err());
        assert!(GainSet::new(1.0, 2.0, 0.0, 0.0).is_err());
        assert!(GainSet::new(1.0, 2.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn continuous_term_at_origin() {
        let g = DirectedGraph::empty(1);
        let q = vec![v(&[0.0]); 2];
        let gains = GainSet::new(1.0, 2.0, 7.0, 0.5).unwrap();
        let tau = control_continuous(1, &g, &q, &q, &q[0], &q[0], &gains);
        assert_eq!(tau, v(&[0.0]));
    }
}
