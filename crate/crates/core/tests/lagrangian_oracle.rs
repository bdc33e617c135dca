//! The arm's matrices checked against energies built from link kinematics.

mod common;

use lagrange_swarm::dynamics::{forward_accel, AgentModel, Disturbance, TwoLinkArm, TwoLinkArmParams};
use nalgebra::{DMatrix, DVector, Vector2};
use proptest::prelude::*;

fn com_velocities(p: &TwoLinkArmParams, q: &[f64; 2], qd: &[f64; 2]) -> (Vector2<f64>, Vector2<f64>) {
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    let v1 = Vector2::new(-s1, c1) * (p.lc1 * qd[0]);
    let v2 = Vector2::new(-s1, c1) * (p.l1 * qd[0]) + Vector2::new(-s12, c12) * (p.lc2 * (qd[0] + qd[1]));
    (v1, v2)
}

fn kinetic(p: &TwoLinkArmParams, q: &[f64; 2], qd: &[f64; 2]) -> f64 {
    let (v1, v2) = com_velocities(p, q, qd);
    0.5 * p.m1 * v1.norm_squared()
        + 0.5 * p.i1 * qd[0] * qd[0]
        + 0.5 * p.m2 * v2.norm_squared()
        + 0.5 * p.i2 * (qd[0] + qd[1]).powi(2)
}

fn potential(p: &TwoLinkArmParams, q: &[f64; 2]) -> f64 {
    let y1 = p.lc1 * q[0].sin();
    let y2 = p.l1 * q[0].sin() + p.lc2 * (q[0] + q[1]).sin();
    p.gravity_accel * (p.m1 * y1 + p.m2 * y2)
}

/// Inertia by polarization of the (quadratic) kinetic energy.
fn oracle_inertia(p: &TwoLinkArmParams, q: &[f64; 2]) -> DMatrix<f64> {
    let e = [[1.0, 0.0], [0.0, 1.0]];
    DMatrix::from_fn(2, 2, |i, j| {
        if i == j {
            2.0 * kinetic(p, q, &e[i])
        } else {
            let both = [e[i][0] + e[j][0], e[i][1] + e[j][1]];
            kinetic(p, q, &both) - kinetic(p, q, &e[i]) - kinetic(p, q, &e[j])
        }
    })
}

/// Euler-Lagrange acceleration with every derivative taken numerically.
fn oracle_accel(p: &TwoLinkArmParams, q: &[f64; 2], qd: &[f64; 2], tau: &[f64; 2]) -> DVector<f64> {
    let h = 1e-5;
    let shift = |k: usize, d: f64| {
        let mut x = *q;
        x[k] += d;
        x
    };
    let along = |d: f64| [q[0] + d * qd[0], q[1] + d * qd[1]];
    let mdot = (oracle_inertia(p, &along(h)) - oracle_inertia(p, &along(-h))) / (2.0 * h);
    let qdv = DVector::from_column_slice(qd);
    let mut rhs = DVector::from_column_slice(tau) - mdot * &qdv;
    for k in 0..2 {
        let dt_dq = (kinetic(p, &shift(k, h), qd) - kinetic(p, &shift(k, -h), qd)) / (2.0 * h);
        let dp_dq = (potential(p, &shift(k, h)) - potential(p, &shift(k, -h))) / (2.0 * h);
        rhs[k] += dt_dq - dp_dq;
    }
    oracle_inertia(p, q).cholesky().unwrap().solve(&rhs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inertia_matches_kinetic_energy(agent in 0usize..5, q1 in -3.2f64..3.2, q2 in -3.2f64..3.2) {
        let p = common::table_agents()[agent];
        let arm = TwoLinkArm::new(p, Disturbance::None);
        let m = arm.inertia(&DVector::from_vec(vec![q1, q2]));
        let o = oracle_inertia(&p, &[q1, q2]);
        prop_assert!((m - o).amax() < 1e-12);
    }

    #[test]
    fn forward_accel_matches_euler_lagrange(
        agent in 0usize..5,
        q in prop::array::uniform2(-3.2f64..3.2),
        qd in prop::array::uniform2(-5.0f64..5.0),
        tau in prop::array::uniform2(-10.0f64..10.0),
    ) {
        let p = common::table_agents()[agent];
        let arm = TwoLinkArm::new(p, Disturbance::None);
        let got = forward_accel(
            &arm,
            &DVector::from_column_slice(&q),
            &DVector::from_column_slice(&qd),
            &DVector::from_column_slice(&tau),
            0.0,
        )
        .unwrap();
        let want = oracle_accel(&p, &q, &qd, &tau);
        let scale = 1.0 + want.amax();
        prop_assert!((got - &want).amax() < 1e-5 * scale, "want {want}");
    }

    #[test]
    fn disturbance_enters_as_negative_torque(agent in 0usize..5, t in 0.0f64..50.0) {
        let p = common::table_agents()[agent];
        let d = Disturbance::Sinusoid { index: agent + 1, rate: 0.1 };
        let with = TwoLinkArm::new(p, d.clone());
        let without = TwoLinkArm::new(p, Disturbance::None);
        let q = DVector::from_vec(vec![0.3, -0.2]);
        let qd = DVector::from_vec(vec![0.1, 0.4]);
        let zeta = d.eval(2, t);
        let a = forward_accel(&with, &q, &qd, &zeta, t).unwrap();
        let b = forward_accel(&without, &q, &qd, &DVector::zeros(2), t).unwrap();
        prop_assert!((a - b).amax() < 1e-12);
    }
}
