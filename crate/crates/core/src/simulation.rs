//! Fixed-step integration of the follower network, the observer and the
//! leader, plus the recorded trace.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::controller::{consensus_term, sliding_variable};
use crate::dynamics::{AgentModel, LeaderState, Model};
use crate::error::{Error, Result};
use crate::graph::{GammaCertificate, LaplacianPartition};
use crate::linalg::sym_min_eig;
use crate::observer::{held_step, observer_rhs, ObserverState};
use crate::scenario::{ObserverInit, Scenario, SignHandling, Substeps};
use crate::sign::{boundary_layer, sgn_vec, solve_box_lcp};

/// Largest `h * lambda` allowed for a Runge-Kutta substep on the stiff
/// linear part; the real-axis stability limit of RK4 is about 2.78.
const STABILITY_BUDGET: f64 = 2.0;

/// One recorded sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub leader_q: Vec<f64>,
    pub leader_qdot: Vec<f64>,
    /// `q[i][k]` is coordinate `k` of follower `i + 1`.
    pub q: Vec<Vec<f64>>,
    pub qdot: Vec<Vec<f64>>,
    pub r_hat: Vec<Vec<f64>>,
    pub v_hat: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub v: f64,
    pub err_pos: Vec<f64>,
    pub err_vel: Vec<f64>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl TraceRow {
    /// Stacked `||q - 1 (x) q0||`.
    pub fn stacked_pos_err(&self) -> f64 {
        self.err_pos.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn stacked_vel_err(&self) -> f64 {
        self.err_vel.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Largest per-follower observer position error.
    pub fn observer_pos_err(&self) -> f64 {
        self.r_hat.iter().map(|r| dist(r, &self.leader_q)).fold(0.0, f64::max)
    }

    pub fn observer_vel_err(&self) -> f64 {
        self.v_hat.iter().map(|v| dist(v, &self.leader_qdot)).fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        let flat = |m: &Vec<Vec<f64>>| m.iter().flatten().all(|x| x.is_finite());
        self.t.is_finite()
            && self.v.is_finite()
            && flat(&self.q)
            && flat(&self.qdot)
            && flat(&self.r_hat)
            && flat(&self.v_hat)
            && flat(&self.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub n: usize,
    pub p: usize,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn csv_header(n: usize, p: usize) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        for k in 1..=p {
            cols.push(format!("q0_{k}"));
        }
        for k in 1..=p {
            cols.push(format!("qdot0_{k}"));
        }
        for prefix in ["q", "qdot", "rhat", "vhat", "tau"] {
            for i in 1..=n {
                for k in 1..=p {
                    cols.push(format!("{prefix}_{i}_{k}"));
                }
            }
        }
        cols.push("V".to_string());
        for i in 1..=n {
            cols.push(format!("err_pos_{i}"));
        }
        for i in 1..=n {
            cols.push(format!("err_vel_{i}"));
        }
        cols
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.n, self.p).join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields: Vec<f64> = vec![row.t];
            fields.extend(&row.leader_q);
            fields.extend(&row.leader_qdot);
            for block in [&row.q, &row.qdot, &row.r_hat, &row.v_hat, &row.tau] {
                for agent in block {
                    fields.extend(agent);
                }
            }
            fields.push(row.v);
            fields.extend(&row.err_pos);
            fields.extend(&row.err_vel);
            let line: Vec<String> = fields.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::parse("empty trace file"))?
            .split(',')
            .map(str::trim)
            .collect();
        let p = header.iter().filter(|c| c.starts_with("q0_")).count();
        let n = header.iter().filter(|c| c.starts_with("err_pos_")).count();
        let expected = Self::csv_header(n, p);
        if header != expected {
            return Err(Error::parse("trace header does not match the expected column layout"));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(format!("trace row {}: {e}", lineno + 1)))?;
            if vals.len() != expected.len() {
                return Err(Error::parse(format!(
                    "trace row {} has {} fields, expected {}",
                    lineno + 1,
                    vals.len(),
                    expected.len()
                )));
            }
            let mut it = vals.into_iter();
            let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
            let t = take(1)[0];
            let leader_q = take(p);
            let leader_qdot = take(p);
            let mut blocks: Vec<Vec<Vec<f64>>> = Vec::with_capacity(5);
            for _ in 0..5 {
                blocks.push((0..n).map(|_| take(p)).collect());
            }
            let v = take(1)[0];
            let err_pos = take(n);
            let err_vel = take(n);
            let tau = blocks.pop().unwrap();
            let v_hat = blocks.pop().unwrap();
            let r_hat = blocks.pop().unwrap();
            let qdot = blocks.pop().unwrap();
            let q = blocks.pop().unwrap();
            rows.push(TraceRow {
                t,
                leader_q,
                leader_qdot,
                q,
                qdot,
                r_hat,
                v_hat,
                tau,
                v,
                err_pos,
                err_vel,
            });
        }
        Ok(Self { n, p, rows })
    }
}

/// `V = 1/2 eta e'Xe + mu^-1 e'(Gamma (x) I)M e' + 1/2 e''(Gamma (x) I)M e'` with
/// `M` the block-diagonal inertia at the followers' current coordinates.
pub fn lyapunov_value(
    q_err: &[DVector<f64>],
    qdot_err: &[DVector<f64>],
    q: &[DVector<f64>],
    eta: f64,
    mu: f64,
    gamma: &GammaCertificate,
    part: &LaplacianPartition,
    models: &[Model],
) -> f64 {
    let n = q_err.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            let xij = gamma.gamma[i] * part.l22[(i, j)] + part.l22[(j, i)] * gamma.gamma[j];
            if xij != 0.0 {
                quad += xij * q_err[i].dot(&q_err[j]);
            }
        }
    }
    let mut v = 0.5 * eta * quad;
    for i in 0..n {
        let m = models[i].inertia(&q[i]);
        let mqd = &m * &qdot_err[i];
        v += gamma.gamma[i] * (q_err[i].dot(&mqd) / mu + 0.5 * qdot_err[i].dot(&mqd));
    }
    v
}

/// Mutable engine state at one grid time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub step: u64,
    pub q: Vec<DVector<f64>>,
    pub qdot: Vec<DVector<f64>>,
    pub observer: ObserverState,
    /// Signum values chosen on the last substep, per follower.
    pub held_sign: Vec<DVector<f64>>,
}

impl SimState {
    pub fn initial(s: &Scenario) -> Result<Self> {
        let observer = match s.observer_init {
            ObserverInit::OwnPosition => ObserverState::from_positions(&s.q0, s.omega1, s.omega2)?,
            ObserverInit::Leader => {
                let l = s.leader.eval(0.0);
                let n = s.n();
                let r = DMatrix::from_fn(n, s.dof(), |_, k| l.q[k]);
                let v = DMatrix::from_fn(n, s.dof(), |_, k| l.qdot[k]);
                ObserverState::new(r, v, s.omega1, s.omega2)?
            }
        };
        let held_sign = (0..s.n())
            .map(|i| {
                sgn_vec(&sliding_variable(
                    &s.q0[i],
                    &s.qdot0[i],
                    &observer.r_row(i),
                    &observer.v_row(i),
                    s.gains.mu,
                ))
            })
            .collect();
        Ok(Self {
            step: 0,
            q: s.q0.clone(),
            qdot: s.qdot0.clone(),
            observer,
            held_sign,
        })
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }
}

/// Number of Runge-Kutta substeps per grid step so that the stiff linear
/// feedback stays inside the RK4 stability interval.
pub fn resolve_substeps(s: &Scenario) -> u32 {
    match s.substeps {
        Substeps::Fixed(k) => k.max(1),
        Substeps::Auto(_) => {
            let lam = stiffness_estimate(s);
            ((s.dt * lam / STABILITY_BUDGET).ceil() as u32).max(1)
        }
    }
}

/// Upper estimate of the largest closed-loop eigenvalue magnitude.
pub fn stiffness_estimate(s: &Scenario) -> f64 {
    let max_degree = s
        .g_a
        .topologies()
        .iter()
        .flat_map(|g| (1..g.node_count()).map(move |i| g.in_degree(i)))
        .fold(0.0, f64::max);
    let g = &s.gains;
    let mut gain = g.eta * g.mu * max_degree;
    if g.is_continuous() {
        gain += g.beta * g.mu / g.epsilon;
    }
    let m_lo = s
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| min_inertia_eig(m, &s.q0[i]))
        .fold(f64::INFINITY, f64::min);
    gain / m_lo
}

/// Smallest inertia eigenvalue seen over a fixed sweep of configurations.
fn min_inertia_eig(model: &Model, q0: &DVector<f64>) -> f64 {
    let p = model.dof();
    let mut lo = sym_min_eig(&model.inertia(q0));
    for k in 0..64 {
        let angle = std::f64::consts::TAU * k as f64 / 64.0;
        let q = DVector::from_element(p, angle);
        lo = lo.min(sym_min_eig(&model.inertia(&q)));
    }
    lo
}

/// Per-substep frozen inputs.
struct Frame<'a> {
    s: &'a Scenario,
    g_a: &'a crate::graph::DirectedGraph,
}

impl Frame<'_> {
    /// Control input of every follower at one stage. `sign` supplies the
    /// held signum values when present.
    fn controls(
        &self,
        q: &[DVector<f64>],
        qdot: &[DVector<f64>],
        r_hat: &DMatrix<f64>,
        v_hat: &DMatrix<f64>,
        leader: &LeaderState,
        sign: Option<&[DVector<f64>]>,
    ) -> Vec<DVector<f64>> {
        let g = &self.s.gains;
        let mut nodes_q = Vec::with_capacity(q.len() + 1);
        nodes_q.push(leader.q.clone());
        nodes_q.extend(q.iter().cloned());
        let mut nodes_qd = Vec::with_capacity(q.len() + 1);
        nodes_qd.push(leader.qdot.clone());
        nodes_qd.extend(qdot.iter().cloned());
        (0..q.len())
            .map(|i| {
                let lin = consensus_term(i + 1, self.g_a, &nodes_q, &nodes_qd, g.mu) * g.eta;
                let robust = match sign {
                    Some(u) => u[i].clone(),
                    None => {
                        let r = r_hat.row(i).transpose();
                        let v = v_hat.row(i).transpose();
                        let x = sliding_variable(&q[i], &qdot[i], &r, &v, g.mu);
                        if g.is_continuous() {
                            boundary_layer(&x, g.epsilon)
                        } else {
                            sgn_vec(&x)
                        }
                    }
                };
                -lin - robust * g.beta
            })
            .collect()
    }

    fn accelerations(
        &self,
        t: f64,
        q: &[DVector<f64>],
        qdot: &[DVector<f64>],
        tau: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        q.iter()
            .enumerate()
            .map(|(i, qi)| {
                let model = &self.s.models[i];
                let rhs = &tau[i] - model.bias(qi, &qdot[i], t);
                let chol = model
                    .inertia(qi)
                    .cholesky()
                    .ok_or_else(|| Error::NumericalFailure(format!("inertia of agent {} lost definiteness", i + 1)))?;
                Ok(chol.solve(&rhs))
            })
            .collect()
    }
}

fn axpy(base: &[DVector<f64>], k: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    base.iter().zip(k).map(|(b, d)| b + d * h).collect()
}

fn rk4_combine(base: &[DVector<f64>], k: [&[DVector<f64>]; 4], h: f64) -> Vec<DVector<f64>> {
    (0..base.len())
        .map(|i| &base[i] + (&k[0][i] + &k[1][i] * 2.0 + &k[2][i] * 2.0 + &k[3][i]) * (h / 6.0))
        .collect()
}

/// Agent substep with the observer path and, optionally, the signum values
/// held fixed. Returns the end state.
fn agent_rk4(
    frame: &Frame<'_>,
    t: f64,
    h: f64,
    q: &[DVector<f64>],
    qdot: &[DVector<f64>],
    est: &dyn Fn(f64) -> (DMatrix<f64>, DMatrix<f64>),
    sign: Option<&[DVector<f64>]>,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let stage = |theta: f64, qs: &[DVector<f64>], qds: &[DVector<f64>]| -> Result<Vec<DVector<f64>>> {
        let ts = t + theta * h;
        let leader = frame.s.leader.eval(ts);
        let (r, v) = est(theta);
        let tau = frame.controls(qs, qds, &r, &v, &leader, sign);
        frame.accelerations(ts, qs, qds, &tau)
    };
    let a1 = stage(0.0, q, qdot)?;
    let v1 = qdot.to_vec();
    let q2 = axpy(q, &v1, 0.5 * h);
    let qd2 = axpy(qdot, &a1, 0.5 * h);
    let a2 = stage(0.5, &q2, &qd2)?;
    let q3 = axpy(q, &qd2, 0.5 * h);
    let qd3 = axpy(qdot, &a2, 0.5 * h);
    let a3 = stage(0.5, &q3, &qd3)?;
    let q4 = axpy(q, &qd3, h);
    let qd4 = axpy(qdot, &a3, h);
    let a4 = stage(1.0, &q4, &qd4)?;
    let q_next = rk4_combine(q, [&v1, &qd2, &qd3, &qd4], h);
    let qd_next = rk4_combine(qdot, [&a1, &a2, &a3, &a4], h);
    Ok((q_next, qd_next))
}

/// Full pointwise RK4 on agents and observer together.
fn pointwise_substep(frame: &Frame<'_>, g_b: &crate::graph::DirectedGraph, t: f64, h: f64, st: &mut SimState) -> Result<()> {
    let s = frame.s;
    let obs0 = st.observer.clone();
    let eval = |theta: f64,
                qs: &[DVector<f64>],
                qds: &[DVector<f64>],
                o: &ObserverState|
     -> Result<(Vec<DVector<f64>>, DMatrix<f64>, DMatrix<f64>)> {
        let ts = t + theta * h;
        let leader = s.leader.eval(ts);
        let tau = frame.controls(qs, qds, &o.r_hat, &o.v_hat, &leader, None);
        let acc = frame.accelerations(ts, qs, qds, &tau)?;
        let (dr, dv) = observer_rhs(o, g_b, &leader.q, &leader.qdot);
        Ok((acc, dr, dv))
    };
    let shifted = |dr: &DMatrix<f64>, dv: &DMatrix<f64>, c: f64| {
        let mut o = obs0.clone();
        o.r_hat += dr * c;
        o.v_hat += dv * c;
        o
    };
    let (a1, r1, w1) = eval(0.0, &st.q, &st.qdot, &obs0)?;
    let v1 = st.qdot.clone();
    let q2 = axpy(&st.q, &v1, 0.5 * h);
    let qd2 = axpy(&st.qdot, &a1, 0.5 * h);
    let (a2, r2, w2) = eval(0.5, &q2, &qd2, &shifted(&r1, &w1, 0.5 * h))?;
    let q3 = axpy(&st.q, &qd2, 0.5 * h);
    let qd3 = axpy(&st.qdot, &a2, 0.5 * h);
    let (a3, r3, w3) = eval(0.5, &q3, &qd3, &shifted(&r2, &w2, 0.5 * h))?;
    let q4 = axpy(&st.q, &qd3, h);
    let qd4 = axpy(&st.qdot, &a3, h);
    let (a4, r4, w4) = eval(1.0, &q4, &qd4, &shifted(&r3, &w3, h))?;
    st.q = rk4_combine(&st.q, [&v1, &qd2, &qd3, &qd4], h);
    st.qdot = rk4_combine(&st.qdot, [&a1, &a2, &a3, &a4], h);
    st.observer.r_hat = &obs0.r_hat + (&r1 + &r2 * 2.0 + &r3 * 2.0 + &r4) * (h / 6.0);
    st.observer.v_hat = &obs0.v_hat + (&w1 + &w2 * 2.0 + &w3 * 2.0 + &w4) * (h / 6.0);
    if !s.gains.is_continuous() {
        for i in 0..s.n() {
            let x = sliding_variable(
                &st.q[i],
                &st.qdot[i],
                &st.observer.r_row(i),
                &st.observer.v_row(i),
                s.gains.mu,
            );
            st.held_sign[i] = sgn_vec(&x);
        }
    }
    Ok(())
}

/// Observer advanced with held signum values; the agents are integrated
/// along the matching estimate path. For the exact signum law the agents'
/// signum values are chosen by a predictor-corrector pass so that they agree
/// with the end-of-substep sliding variable.
fn held_substep(frame: &Frame<'_>, g_b: &crate::graph::DirectedGraph, t: f64, h: f64, st: &mut SimState) -> Result<()> {
    let s = frame.s;
    let leader_end = s.leader.eval(t + h);
    let step = held_step(&st.observer, g_b, &leader_end.q, &leader_end.qdot, h);
    let est = |theta: f64| step.at(theta);
    if s.gains.is_continuous() {
        let (q, qd) = agent_rk4(frame, t, h, &st.q, &st.qdot, &est, None)?;
        st.q = q;
        st.qdot = qd;
    } else {
        let g = &s.gains;
        let prev = st.held_sign.clone();
        let (qp, qdp) = agent_rk4(frame, t, h, &st.q, &st.qdot, &est, Some(&prev))?;
        let scale = g.beta * (g.mu * h + 0.5 * h * h);
        let mut chosen = Vec::with_capacity(s.n());
        for i in 0..s.n() {
            let x_pred = sliding_variable(&qp[i], &qdp[i], &step.r1.row(i).transpose(), &step.v1.row(i).transpose(), g.mu);
            let minv = s.models[i]
                .inertia(&st.q[i])
                .try_inverse()
                .ok_or_else(|| Error::NumericalFailure(format!("inertia of agent {} is singular", i + 1)))?;
            let b = minv * scale;
            let y = &x_pred + &b * &prev[i];
            chosen.push(solve_box_lcp(&b, &y));
        }
        let (q, qd) = agent_rk4(frame, t, h, &st.q, &st.qdot, &est, Some(&chosen))?;
        st.q = q;
        st.qdot = qd;
        st.held_sign = chosen;
    }
    st.observer.r_hat = step.r1;
    st.observer.v_hat = step.v1;
    Ok(())
}

/// Advances the state by one grid step of length `s.dt` using `substeps`
/// Runge-Kutta substeps. Topologies are those in force at the start of the
/// step, which is exact because every switch lies on the grid.
pub fn step(state: &mut SimState, s: &Scenario, substeps: u32) -> Result<()> {
    let t0 = state.time(s.dt);
    let h = s.dt / substeps as f64;
    let frame = Frame {
        s,
        g_a: &s.g_a.topologies()[s.g_a.index_at(t0)],
    };
    let g_b = s.observer_graph_at(t0);
    for k in 0..substeps {
        let t = t0 + k as f64 * h;
        match s.sign_handling {
            SignHandling::Held => held_substep(&frame, &g_b, t, h, state)?,
            SignHandling::Pointwise => pointwise_substep(&frame, &g_b, t, h, state)?,
        }
    }
    state.step += 1;
    Ok(())
}

fn record(s: &Scenario, st: &SimState) -> TraceRow {
    let t = st.time(s.dt);
    let leader = s.leader.eval(t);
    let n = s.n();
    let g = &s.gains;
    let idx = s.g_a.index_at(t);
    let g_a = &s.g_a.topologies()[idx];
    let frame = Frame { s, g_a };
    let sign = if g.is_continuous() || s.sign_handling == SignHandling::Pointwise {
        None
    } else {
        Some(st.held_sign.as_slice())
    };
    let tau = frame.controls(&st.q, &st.qdot, &st.observer.r_hat, &st.observer.v_hat, &leader, sign);
    let q_err: Vec<DVector<f64>> = st.q.iter().map(|q| q - &leader.q).collect();
    let qd_err: Vec<DVector<f64>> = st.qdot.iter().map(|q| q - &leader.qdot).collect();
    let (part, cert) = &s.certificates[idx];
    let v = lyapunov_value(&q_err, &qd_err, &st.q, g.eta, g.mu, cert, part, &s.models);
    let rows = |m: &DMatrix<f64>| (0..n).map(|i| m.row(i).iter().copied().collect()).collect();
    let vecs = |v: &[DVector<f64>]| v.iter().map(|x| x.as_slice().to_vec()).collect();
    TraceRow {
        t,
        leader_q: leader.q.as_slice().to_vec(),
        leader_qdot: leader.qdot.as_slice().to_vec(),
        q: vecs(&st.q),
        qdot: vecs(&st.qdot),
        r_hat: rows(&st.observer.r_hat),
        v_hat: rows(&st.observer.v_hat),
        tau: vecs(&tau),
        v,
        err_pos: q_err.iter().map(|e| e.norm()).collect(),
        err_vel: qd_err.iter().map(|e| e.norm()).collect(),
    }
}

fn non_finite_component(row: &TraceRow) -> String {
    let checks: [(&str, &Vec<Vec<f64>>); 5] = [
        ("q", &row.q),
        ("qdot", &row.qdot),
        ("r_hat", &row.r_hat),
        ("v_hat", &row.v_hat),
        ("tau", &row.tau),
    ];
    for (name, block) in checks {
        for (i, agent) in block.iter().enumerate() {
            if agent.iter().any(|x| !x.is_finite()) {
                return format!("{name} of agent {}", i + 1);
            }
        }
    }
    "V".to_string()
}

/// Integrates `[0, t_end]` and records every `stride`-th grid sample plus
/// the final one.
pub fn run(s: &Scenario) -> Result<SimTrace> {
    let substeps = resolve_substeps(s);
    let steps = (s.t_end / s.dt).round() as u64;
    log::info!(
        "running '{}' for {steps} steps of {} s with {substeps} substeps ({:?} signum)",
        s.name,
        s.dt,
        s.sign_handling
    );
    let mut trace = SimTrace {
        n: s.n(),
        p: s.dof(),
        rows: Vec::with_capacity((steps / s.stride as u64 + 2) as usize),
    };
    let mut st = SimState::initial(s)?;
    trace.rows.push(record(s, &st));
    while st.step < steps {
        if let Err(e) = step(&mut st, s, substeps) {
            let t = st.time(s.dt);
            log::error!("integration failed at t = {t}: {e}");
            return Err(Error::NonFiniteState {
                component: e.to_string(),
                t,
                partial: Some(Box::new(trace)),
            });
        }
        let last = st.step == steps;
        if st.step % s.stride as u64 == 0 || last {
            let row = record(s, &st);
            if !row.is_finite() {
                let component = non_finite_component(&row);
                let t = row.t;
                log::error!("non-finite {component} at t = {t}");
                return Err(Error::NonFiniteState {
                    component,
                    t,
                    partial: Some(Box::new(trace)),
                });
            }
            trace.rows.push(row);
        } else if st.q.iter().chain(&st.qdot).any(|v| v.iter().any(|x| !x.is_finite())) {
            let t = st.time(s.dt);
            return Err(Error::NonFiniteState {
                component: "follower state".to_string(),
                t,
                partial: Some(Box::new(trace)),
            });
        }
    }
    Ok(trace)
}

/// Switch instants of the control signal within the horizon, each checked
/// to fall on the integration grid.
pub fn grid_switch_times(s: &Scenario) -> Vec<f64> {
    s.g_a
        .switch_times()
        .filter(|&t| t <= s.t_end)
        .inspect(|&t| {
            let k = (t / s.dt).round();
            assert!((k * s.dt - t).abs() <= 1e-9 * s.dt.max(t * 1e-3), "switch at {t} is off the grid");
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;
    use std::path::Path;

    fn scalar(t_end: f64, q0: f64, init: &str) -> Scenario {
        let text = format!(
            r#"
[leader]
kind = "stationary"
position = [0.0]

[environment]
disturbance = "none"

[[agents]]
model = "constant-inertia"
inertia = [[1.0]]
q0 = [{q0}]
qdot0 = [0.0]

[graphs]
a = [{{ edges = [[0, 1]] }}]

[gains]
mu = 1.0
eta = 2.0
beta = 0.5

[observer]
omega1 = 1.0
omega2 = 1.0
init = "{init}"

[integration]
t_end = {t_end}
stride = 1
"#
        );
        ScenarioConfig::from_toml(&text).unwrap().build(Path::new(".")).unwrap()
    }

    #[test]
    fn zero_horizon_gives_initial_sample() {
        let s = scalar(0.0, 0.7, "leader");
        let tr = run(&s).unwrap();
        assert_eq!(tr.rows.len(), 1);
        assert_eq!(tr.rows[0].q, vec![vec![0.7]]);
        assert_eq!(tr.rows[0].t, 0.0);
    }

    #[test]
    fn synchronized_manifold_is_invariant() {
        let s = scalar(1.0, 0.0, "leader");
        let tr = run(&s).unwrap();
        assert!(tr.rows.iter().all(|r| r.err_pos[0] == 0.0 && r.err_vel[0] == 0.0));
    }

    #[test]
    fn csv_roundtrip() {
        let s = scalar(0.01, 0.3, "own-position");
        let tr = run(&s).unwrap();
        let back = SimTrace::from_csv(&tr.to_csv()).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn scalar_lyapunov_collapse() {
        let s = scalar(0.0, 0.0, "leader");
        let (part, cert) = &s.certificates[0];
        let e = [DVector::from_element(1, 0.4)];
        let z = [DVector::zeros(1)];
        let v = lyapunov_value(&e, &z, &e, 2.0, 1.0, cert, part, &s.models);
        let x = 2.0 * cert.gamma[0] * part.l22[(0, 0)];
        assert!((v - 0.5 * 2.0 * x * 0.16).abs() < 1e-14);
    }

    #[test]
    fn determinism() {
        let s = scalar(0.2, 0.5, "own-position");
        assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }
}
