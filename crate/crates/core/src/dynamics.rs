//! Euler-Lagrange agent models `M(q) q'' + C(q, q') q' + g(q) + zeta(t) = tau`.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, sym_eigenvalues};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Multiplicative inflation applied to sampled bound constants.
pub const BOUND_SAFETY_FACTOR: f64 = 1.1;

pub trait AgentModel: Debug + Send + Sync {
    fn dof(&self) -> usize;
    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64>;
    fn coriolis(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DMatrix<f64>;
    fn gravity(&self, q: &DVector<f64>) -> DVector<f64>;
    fn disturbance(&self, t: f64) -> DVector<f64>;

    /// `C(q, q') q' + g(q) + zeta(t)`.
    fn bias(&self, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> DVector<f64> {
        self.coriolis(q, qdot) * qdot + self.gravity(q) + self.disturbance(t)
    }
}

/// External disturbance acting on one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Disturbance {
    #[default]
    None,
    /// `[sin(k w t), cos(k w t), sin(k w t), ...]` for agent index `k`.
    Sinusoid { index: usize, rate: f64 },
    Constant { value: Vec<f64> },
}

impl Disturbance {
    pub fn eval(&self, dof: usize, t: f64) -> DVector<f64> {
        match self {
            Disturbance::None => DVector::zeros(dof),
            Disturbance::Sinusoid { index, rate } => {
                let arg = *index as f64 * rate * t;
                DVector::from_fn(dof, |k, _| if k % 2 == 0 { arg.sin() } else { arg.cos() })
            }
            Disturbance::Constant { value } => DVector::from_fn(dof, |k, _| value.get(k).copied().unwrap_or(0.0)),
        }
    }

    /// Supremum of `||zeta(t)||` over all t.
    pub fn norm_bound(&self, dof: usize) -> f64 {
        match self {
            Disturbance::None => 0.0,
            // pairs of sin/cos contribute exactly 1 each; an odd trailing sine at most 1
            Disturbance::Sinusoid { .. } => (dof.div_ceil(2) as f64).sqrt(),
            Disturbance::Constant { .. } => self.eval(dof, 0.0).norm(),
        }
    }
}

/// Table-style parameters of a planar two-link arm with revolute joints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLinkArmParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(default = "default_gravity")]
    pub gravity_accel: f64,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl TwoLinkArmParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("lc1", self.lc1),
            ("lc2", self.lc2),
            ("I1", self.i1),
            ("I2", self.i2),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("two-link parameter {name} = {v} must be positive")));
            }
        }
        if !(self.gravity_accel.is_finite() && self.gravity_accel >= 0.0) {
            return Err(Error::invalid("gravity_accel must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLinkArm {
    pub params: TwoLinkArmParams,
    pub disturbance: Disturbance,
}

impl TwoLinkArm {
    pub fn new(params: TwoLinkArmParams, disturbance: Disturbance) -> Self {
        Self { params, disturbance }
    }

    pub fn without_gravity(mut self) -> Self {
        self.params.gravity_accel = 0.0;
        self
    }

    fn inertia_entries(&self, q2: f64) -> (f64, f64, f64) {
        let p = &self.params;
        let c2 = q2.cos();
        let m11 = p.m1 * p.lc1 * p.lc1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i1 + p.i2;
        let m12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
        let m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
        (m11, m12, m22)
    }
}

impl AgentModel for TwoLinkArm {
    fn dof(&self) -> usize {
        2
    }

    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (m11, m12, m22) = self.inertia_entries(q[1]);
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn coriolis(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let h = -p.m2 * p.l1 * p.lc2 * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[h * qdot[1], h * (qdot[0] + qdot[1]), -h * qdot[0], 0.0])
    }

    fn gravity(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let g = p.gravity_accel;
        let c12 = (q[0] + q[1]).cos();
        DVector::from_vec(vec![
            (p.m1 * p.lc1 + p.m2 * p.l1) * g * q[0].cos() + p.m2 * p.lc2 * g * c12,
            p.m2 * p.lc2 * g * c12,
        ])
    }

    fn disturbance(&self, t: f64) -> DVector<f64> {
        self.disturbance.eval(2, t)
    }

    fn bias(&self, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> DVector<f64> {
        let p = &self.params;
        let h = -p.m2 * p.l1 * p.lc2 * q[1].sin();
        let c0 = h * qdot[1] * qdot[0] + h * (qdot[0] + qdot[1]) * qdot[1];
        let c1 = -h * qdot[0] * qdot[0];
        let mut out = self.gravity(q) + self.disturbance(t);
        out[0] += c0;
        out[1] += c1;
        out
    }
}

/// Model with configuration-independent inertia and no Coriolis terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantInertia {
    pub inertia: DMatrix<f64>,
    pub gravity: DVector<f64>,
    pub disturbance: Disturbance,
}

impl ConstantInertia {
    pub fn new(inertia: DMatrix<f64>) -> Self {
        let p = inertia.nrows();
        Self {
            inertia,
            gravity: DVector::zeros(p),
            disturbance: Disturbance::None,
        }
    }

    /// `M = I`, no gravity, no disturbance.
    pub fn unit(dof: usize) -> Self {
        Self::new(DMatrix::identity(dof, dof))
    }
}

impl AgentModel for ConstantInertia {
    fn dof(&self) -> usize {
        self.inertia.nrows()
    }

    fn inertia(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.inertia.clone()
    }

    fn coriolis(&self, _q: &DVector<f64>, _qdot: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.dof(), self.dof())
    }

    fn gravity(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.gravity.clone()
    }

    fn disturbance(&self, t: f64) -> DVector<f64> {
        self.disturbance.eval(self.dof(), t)
    }
}

/// The closed set of models a scenario can instantiate.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    TwoLinkArm(TwoLinkArm),
    ConstantInertia(ConstantInertia),
}

impl AgentModel for Model {
    fn dof(&self) -> usize {
        match self {
            Model::TwoLinkArm(m) => m.dof(),
            Model::ConstantInertia(m) => m.dof(),
        }
    }
    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Model::TwoLinkArm(m) => m.inertia(q),
            Model::ConstantInertia(m) => m.inertia(q),
        }
    }
    fn coriolis(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Model::TwoLinkArm(m) => m.coriolis(q, qdot),
            Model::ConstantInertia(m) => m.coriolis(q, qdot),
        }
    }
    fn gravity(&self, q: &DVector<f64>) -> DVector<f64> {
        match self {
            Model::TwoLinkArm(m) => m.gravity(q),
            Model::ConstantInertia(m) => m.gravity(q),
        }
    }
    fn disturbance(&self, t: f64) -> DVector<f64> {
        match self {
            Model::TwoLinkArm(m) => m.disturbance(t),
            Model::ConstantInertia(m) => m.disturbance(t),
        }
    }
    fn bias(&self, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            Model::TwoLinkArm(m) => m.bias(q, qdot, t),
            Model::ConstantInertia(m) => m.bias(q, qdot, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub g: DVector<f64>,
    pub zeta: DVector<f64>,
}

pub fn eval_dynamics(model: &dyn AgentModel, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> Dynamics {
    Dynamics {
        m: model.inertia(q),
        c: model.coriolis(q, qdot),
        g: model.gravity(q),
        zeta: model.disturbance(t),
    }
}

/// `M(q)^-1 (tau - C q' - g - zeta)`.
pub fn forward_accel(
    model: &dyn AgentModel,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    tau: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let rhs = tau - model.bias(q, qdot, t);
    let chol = model.inertia(q).cholesky().ok_or(Error::SingularInertia)?;
    Ok(chol.solve(&rhs))
}

/// Scalar bounds on the network used by the gain design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Lower bound on every inertia eigenvalue.
    pub k_m_lower: f64,
    /// Upper bound on every inertia eigenvalue.
    pub k_m_upper: f64,
    /// `||C(q, q')|| <= k_c ||q'||`.
    pub k_c: f64,
    pub k_g: f64,
    pub k_zeta: f64,
    /// Bound on the stacked leader velocity.
    pub k_p: f64,
    /// Bound on the stacked leader acceleration.
    pub k_q: f64,
    /// Bound on the stacked initial position error.
    pub k_a: f64,
    /// Bound on the stacked initial velocity error.
    pub k_b: f64,
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("k_m_lower", self.k_m_lower),
            ("k_m_upper", self.k_m_upper),
            ("k_c", self.k_c),
            ("k_g", self.k_g),
            ("k_zeta", self.k_zeta),
            ("k_p", self.k_p),
            ("k_q", self.k_q),
            ("k_a", self.k_a),
            ("k_b", self.k_b),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("bound constant {name} = {v} must be positive")));
            }
        }
        if self.k_m_lower > self.k_m_upper {
            return Err(Error::invalid("k_m_lower exceeds k_m_upper"));
        }
        Ok(())
    }
}

/// Sampling region for generalized coordinates or velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    /// Euclidean ball around the origin.
    Ball { radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    fn validate(&self, dof: usize) -> Result<()> {
        match self {
            Region::Ball { radius } if *radius >= 0.0 && radius.is_finite() => Ok(()),
            Region::Ball { .. } => Err(Error::invalid("ball radius must be finite and nonnegative")),
            Region::Box { lo, hi } => {
                if lo.len() != dof || hi.len() != dof {
                    return Err(Error::invalid(format!("box bounds must have length {dof}")));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
                    return Err(Error::invalid("box needs finite lo <= hi"));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, dof: usize, rng: &mut impl Rng) -> DVector<f64> {
        match self {
            Region::Ball { radius } => loop {
                let v = DVector::from_fn(dof, |_, _| rng.gen_range(-1.0..=1.0));
                if v.norm() <= 1.0 {
                    break v * *radius;
                }
            },
            Region::Box { lo, hi } => DVector::from_fn(dof, |k, _| {
                if lo[k] == hi[k] {
                    lo[k]
                } else {
                    rng.gen_range(lo[k]..=hi[k])
                }
            }),
        }
    }
}

/// The subset of bound constants obtainable from the model alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelBounds {
    pub k_m_lower: f64,
    pub k_m_upper: f64,
    pub k_c: f64,
    pub k_g: f64,
    pub safety_factor: f64,
}

pub fn estimate_bounds(
    model: &dyn AgentModel,
    q_region: &Region,
    qdot_region: &Region,
    samples: usize,
    seed: u64,
) -> Result<ModelBounds> {
    let p = model.dof();
    q_region.validate(p)?;
    qdot_region.validate(p)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut kc: f64 = 0.0;
    let mut kg: f64 = 0.0;
    for _ in 0..samples {
        let q = q_region.sample(p, &mut rng);
        let qd = qdot_region.sample(p, &mut rng);
        let eig = sym_eigenvalues(&model.inertia(&q));
        lo = lo.min(eig[0]);
        hi = hi.max(eig[p - 1]);
        let speed = qd.norm();
        if speed > 0.0 {
            kc = kc.max(spectral_norm(&model.coriolis(&q, &qd)) / speed);
        }
        kg = kg.max(model.gravity(&q).norm());
    }
    let s = BOUND_SAFETY_FACTOR;
    Ok(ModelBounds {
        k_m_lower: lo / s,
        k_m_upper: hi * s,
        k_c: kc * s,
        k_g: kg * s,
        safety_factor: s,
    })
}

/// Largest `|x^T (M'_fd - C - C^T) x|` over unit `x`, with `M'` taken by a
/// central difference along `q'`.
pub fn check_skew(model: &dyn AgentModel, q: &DVector<f64>, qdot: &DVector<f64>, fd_step: f64) -> f64 {
    let m_plus = model.inertia(&(q + qdot * fd_step));
    let m_minus = model.inertia(&(q - qdot * fd_step));
    let mdot = (m_plus - m_minus) / (2.0 * fd_step);
    let c = model.coriolis(q, qdot);
    let s = mdot - &c - c.transpose();
    // the form only sees the symmetric part; its extreme eigenvalues give the max over unit x
    sym_eigenvalues(&s).into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Leader reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeaderTrajectory {
    /// Two-coordinate multi-harmonic reference used by the bundled scenarios.
    Harmonic,
    Stationary { position: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub qddot: DVector<f64>,
}

impl LeaderTrajectory {
    pub fn dof(&self) -> usize {
        match self {
            LeaderTrajectory::Harmonic => 2,
            LeaderTrajectory::Stationary { position } => position.len(),
        }
    }

    pub fn eval(&self, t: f64) -> LeaderState {
        match self {
            LeaderTrajectory::Harmonic => {
                let (s1, c1) = t.sin_cos();
                let (sh, ch) = (0.5 * t).sin_cos();
                let (s2, c2) = (2.0 * t).sin_cos();
                let (s3, c3) = (3.0 * t).sin_cos();
                let (s4, c4) = (4.0 * t).sin_cos();
                LeaderState {
                    q: DVector::from_vec(vec![
                        0.5 * s1 - 0.2 * sh,
                        0.4 * (2.0 * s1 + s2 / 2.0 + s3 / 3.0 + s4 / 4.0),
                    ]),
                    qdot: DVector::from_vec(vec![0.5 * c1 - 0.1 * ch, 0.4 * (2.0 * c1 + c2 + c3 + c4)]),
                    qddot: DVector::from_vec(vec![
                        -0.5 * s1 + 0.05 * sh,
                        0.4 * (-2.0 * s1 - 2.0 * s2 - 3.0 * s3 - 4.0 * s4),
                    ]),
                }
            }
            LeaderTrajectory::Stationary { position } => {
                let p = position.len();
                LeaderState {
                    q: DVector::from_column_slice(position),
                    qdot: DVector::zeros(p),
                    qddot: DVector::zeros(p),
                }
            }
        }
    }
}

/// Sampled `(k_p, k_q)` bounds on `||1_n (x) q0'||` and `||1_n (x) q0''||` over
/// `[0, horizon]`, inflated by the safety factor.
pub fn leader_bounds(traj: &LeaderTrajectory, n: usize, horizon: f64, samples: usize) -> (f64, f64) {
    let samples = samples.max(2);
    let mut vmax: f64 = 0.0;
    let mut amax: f64 = 0.0;
    for k in 0..samples {
        let t = horizon.max(0.0) * k as f64 / (samples - 1) as f64;
        let s = traj.eval(t);
        vmax = vmax.max(s.qdot.norm());
        amax = amax.max(s.qddot.norm());
    }
    let root_n = (n as f64).sqrt();
    (vmax * root_n * BOUND_SAFETY_FACTOR, amax * root_n * BOUND_SAFETY_FACTOR)
}
