//! Scenario documents: the TOML form users write and the validated form the
//! engine runs.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::controller::GainSet;
use crate::design::{self, DesignInputs, GainLedger};
use crate::dynamics::{
    estimate_bounds, leader_bounds, AgentModel, BoundConstants, ConstantInertia, Disturbance, LeaderTrajectory, Model,
    Region, TwoLinkArm, TwoLinkArmParams,
};
use crate::error::{Error, Result};
use crate::graph::{laplacian, solve_gamma, DirectedGraph, Edge, GammaCertificate, LaplacianPartition, SwitchingSignal};

/// Floor substituted for bound constants that sample to zero (for example
/// gravity on a zero-gravity model), since the design needs them positive.
pub const BOUND_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub leader: LeaderTrajectory,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    pub graphs: GraphsConfig,
    pub gains: GainsConfig,
    pub observer: ObserverConfig,
    pub integration: IntegrationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blackout: Option<BlackoutConfig>,
    #[serde(default)]
    pub design: DesignConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum AgentConfig {
    TwoLinkArm {
        #[serde(flatten)]
        params: TwoLinkArmParams,
        q0: Vec<f64>,
        qdot0: Vec<f64>,
    },
    /// Configuration-independent inertia, given row-major.
    ConstantInertia {
        inertia: Vec<Vec<f64>>,
        #[serde(default)]
        gravity: Vec<f64>,
        q0: Vec<f64>,
        qdot0: Vec<f64>,
    },
}

impl AgentConfig {
    fn initial(&self) -> (&[f64], &[f64]) {
        match self {
            AgentConfig::TwoLinkArm { q0, qdot0, .. } | AgentConfig::ConstantInertia { q0, qdot0, .. } => {
                (q0, qdot0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceKind {
    /// Agent `i` receives `[sin(i w t), cos(i w t)]`.
    #[default]
    Sinusoid,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    #[serde(default)]
    pub disturbance: DisturbanceKind,
    #[serde(default = "default_disturbance_rate")]
    pub disturbance_rate: f64,
    #[serde(default = "default_true")]
    pub gravity: bool,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            disturbance: DisturbanceKind::Sinusoid,
            disturbance_rate: default_disturbance_rate(),
            gravity: true,
        }
    }
}

fn default_disturbance_rate() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// Directed edges `[src, dst]`; node 0 is the leader.
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    /// Per-edge weights; when absent every edge gets the section weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Edge-list file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphsConfig {
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Control graphs.
    pub a: Vec<GraphSpec>,
    /// Observer graphs; defaults to the control graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<GraphSpec>>,
    /// Round-robin switching period; absent means explicit schedule or a
    /// fixed first topology.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching_period: Option<f64>,
    /// Explicit `[time, index]` schedule for the control graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<(f64, usize)>>,
    /// Observer graph `i` is active whenever control graph `i` is.
    #[serde(default = "default_true")]
    pub paired: bool,
    /// Copy every leader edge of the control graph into the observer graph.
    #[serde(default = "default_true")]
    pub pin_leader: bool,
    #[serde(default)]
    pub dwell_floor: f64,
}

fn default_weight() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    #[default]
    Manual,
    /// Use the output of the gain designer.
    Designed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    #[serde(default)]
    pub mode: GainMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverInit {
    /// `r_i = q_i(0)`, `v_i = 0`.
    #[default]
    OwnPosition,
    /// Estimates start on the leader's true state.
    Leader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub omega1: f64,
    pub omega2: f64,
    #[serde(default)]
    pub init: ObserverInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SignHandling {
    /// Signum values are chosen once per substep so that they agree with
    /// the sign of the end-of-substep argument.
    #[default]
    Held,
    /// Signum evaluated at every Runge-Kutta stage.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Substeps {
    Fixed(u32),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutoTag {
    Auto,
}

impl Default for Substeps {
    fn default() -> Self {
        Substeps::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub substeps: Substeps,
    #[serde(default)]
    pub sign_handling: SignHandling,
    #[serde(default)]
    pub seed: u64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackoutConfig {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Radius of the coordinate ball over which model bounds are sampled.
    #[serde(default = "default_q_radius")]
    pub q_radius: f64,
    #[serde(default = "default_qdot_radius")]
    pub qdot_radius: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            q_radius: default_q_radius(),
            qdot_radius: default_qdot_radius(),
            samples: default_samples(),
        }
    }
}

fn default_q_radius() -> f64 {
    std::f64::consts::PI
}

fn default_qdot_radius() -> f64 {
    5.0
}

fn default_samples() -> usize {
    4000
}

/// Validated scenario ready for simulation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub models: Vec<Model>,
    pub q0: Vec<DVector<f64>>,
    pub qdot0: Vec<DVector<f64>>,
    pub leader: LeaderTrajectory,
    pub g_a: SwitchingSignal,
    /// Observer graphs, indexed like `g_a` when paired.
    pub g_b: SwitchingSignal,
    pub paired: bool,
    pub pin_leader: bool,
    pub gains: GainSet,
    pub omega1: f64,
    pub omega2: f64,
    pub observer_init: ObserverInit,
    pub blackout: Option<(f64, f64)>,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub substeps: Substeps,
    pub sign_handling: SignHandling,
    pub seed: u64,
    pub design: DesignConfig,
    /// Per control topology: Laplacian partition and diagonal scaling.
    pub certificates: Vec<(LaplacianPartition, GammaCertificate)>,
}

/// Overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, std::path::PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_toml(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.integration.dt = dt;
        }
        if let Some(e) = o.epsilon {
            self.gains.epsilon = e;
        }
        if o.mu.is_some() || o.eta.is_some() || o.beta.is_some() {
            self.gains.mode = GainMode::Manual;
        }
        if let Some(v) = o.mu {
            self.gains.mu = Some(v);
        }
        if let Some(v) = o.eta {
            self.gains.eta = Some(v);
        }
        if let Some(v) = o.beta {
            self.gains.beta = Some(v);
        }
        if let Some(s) = o.seed {
            self.integration.seed = s;
        }
        if let Some(t) = o.t_end {
            self.integration.t_end = t;
        }
    }

    /// Validates and builds the runtime scenario. Relative graph files are
    /// resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<Scenario> {
        let n = self.agents.len();
        if n == 0 {
            return Err(Error::invalid("scenario needs at least one agent"));
        }
        let p = self.leader.dof();
        if let LeaderTrajectory::Stationary { position } = &self.leader {
            if position.is_empty() || position.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("stationary leader position must be finite and nonempty"));
            }
        }
        let it = &self.integration;
        if !(it.dt > 0.0 && it.dt.is_finite()) {
            return Err(Error::invalid(format!("dt = {} must be positive", it.dt)));
        }
        if !(it.t_end >= 0.0 && it.t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end = {} must be nonnegative", it.t_end)));
        }
        if it.stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        if let Substeps::Fixed(0) = it.substeps {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        ensure_on_grid("t_end", it.t_end, it.dt)?;

        let env = &self.environment;
        let mut models = Vec::with_capacity(n);
        let mut q0 = Vec::with_capacity(n);
        let mut qdot0 = Vec::with_capacity(n);
        for (i, agent) in self.agents.iter().enumerate() {
            let disturbance = match env.disturbance {
                DisturbanceKind::Sinusoid => Disturbance::Sinusoid {
                    index: i + 1,
                    rate: env.disturbance_rate,
                },
                DisturbanceKind::None => Disturbance::None,
            };
            let model = match agent {
                AgentConfig::TwoLinkArm { params, .. } => {
                    params.validate()?;
                    let mut arm = TwoLinkArm::new(*params, disturbance);
                    if !env.gravity {
                        arm = arm.without_gravity();
                    }
                    Model::TwoLinkArm(arm)
                }
                AgentConfig::ConstantInertia { inertia, gravity, .. } => {
                    let rows = inertia.len();
                    if rows == 0 || inertia.iter().any(|r| r.len() != rows) {
                        return Err(Error::invalid(format!("agent {}: inertia must be square", i + 1)));
                    }
                    let m = nalgebra::DMatrix::from_fn(rows, rows, |r, c| inertia[r][c]);
                    if m.clone().cholesky().is_none() || (&m - m.transpose()).amax() > 1e-12 * m.amax() {
                        return Err(Error::invalid(format!(
                            "agent {}: inertia must be symmetric positive definite",
                            i + 1
                        )));
                    }
                    let mut model = ConstantInertia::new(m);
                    if !gravity.is_empty() {
                        if gravity.len() != rows {
                            return Err(Error::invalid(format!("agent {}: gravity length mismatch", i + 1)));
                        }
                        if env.gravity {
                            model.gravity = DVector::from_column_slice(gravity);
                        }
                    }
                    model.disturbance = disturbance;
                    Model::ConstantInertia(model)
                }
            };
            if model.dof() != p {
                return Err(Error::invalid(format!(
                    "agent {} has {} coordinates but the leader has {p}",
                    i + 1,
                    model.dof()
                )));
            }
            let (a, b) = agent.initial();
            if a.len() != p || b.len() != p || a.iter().chain(b).any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("agent {}: initial state must be {p} finite values", i + 1)));
            }
            models.push(model);
            q0.push(DVector::from_column_slice(a));
            qdot0.push(DVector::from_column_slice(b));
        }

        let g = &self.graphs;
        if !(g.weight > 0.0 && g.weight.is_finite()) {
            return Err(Error::invalid("graph weight must be positive"));
        }
        let a_graphs = build_graphs(&g.a, g.weight, n, base)?;
        if a_graphs.is_empty() {
            return Err(Error::invalid("need at least one control graph"));
        }
        let b_graphs = match &g.b {
            Some(specs) => build_graphs(specs, g.weight, n, base)?,
            None => a_graphs.clone(),
        };
        if b_graphs.is_empty() {
            return Err(Error::invalid("need at least one observer graph"));
        }
        if g.paired && b_graphs.len() != a_graphs.len() {
            return Err(Error::invalid(format!(
                "paired switching needs as many observer graphs ({}) as control graphs ({})",
                b_graphs.len(),
                a_graphs.len()
            )));
        }
        let schedule = match (&g.schedule, g.switching_period) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("give either switching_period or schedule, not both"));
            }
            (Some(s), None) => s.clone(),
            (None, Some(period)) => {
                if !(period > 0.0) {
                    return Err(Error::invalid("switching_period must be positive"));
                }
                ensure_on_grid("switching_period", period, it.dt)?;
                let count = (it.t_end / period).floor() as usize;
                (0..=count).map(|k| (k as f64 * period, k % a_graphs.len())).collect()
            }
            (None, None) => vec![(0.0, 0)],
        };
        for &(t, _) in &schedule {
            ensure_on_grid("switch time", t, it.dt)?;
        }
        let g_a = SwitchingSignal::new(a_graphs.clone(), schedule.clone(), g.dwell_floor)?;
        let g_b = if g.paired {
            SwitchingSignal::new(b_graphs, schedule, g.dwell_floor)?
        } else {
            SwitchingSignal::new(b_graphs, vec![(0.0, 0)], 0.0)?
        };

        let mut certificates = Vec::with_capacity(a_graphs.len());
        for (k, graph) in a_graphs.iter().enumerate() {
            let part = laplacian(graph);
            let cert = solve_gamma(&part).map_err(|e| match e {
                Error::NoSpanningTree => Error::invalid(format!(
                    "control graph {k} has no directed spanning tree rooted at the leader"
                )),
                other => other,
            })?;
            certificates.push((part, cert));
        }

        let blackout = match &self.blackout {
            None => None,
            Some(b) => {
                if !(b.start <= b.end) {
                    return Err(Error::invalid("blackout start must not exceed its end"));
                }
                ensure_on_grid("blackout start", b.start, it.dt)?;
                ensure_on_grid("blackout end", b.end, it.dt)?;
                Some((b.start, b.end))
            }
        };

        let o = &self.observer;
        if !(o.omega1 > 0.0 && o.omega2 > 0.0) {
            return Err(Error::invalid("observer gains must be positive"));
        }

        let mut scenario = Scenario {
            name: self.name.clone(),
            models,
            q0,
            qdot0,
            leader: self.leader.clone(),
            g_a,
            g_b,
            paired: g.paired,
            pin_leader: g.pin_leader,
            gains: GainSet {
                mu: 1.0,
                eta: 2.0,
                beta: 1.0,
                epsilon: self.gains.epsilon,
            },
            omega1: o.omega1,
            omega2: o.omega2,
            observer_init: o.init,
            blackout,
            dt: it.dt,
            t_end: it.t_end,
            stride: it.stride,
            substeps: it.substeps,
            sign_handling: it.sign_handling,
            seed: it.seed,
            design: self.design.clone(),
            certificates,
        };
        scenario.gains = match self.gains.mode {
            GainMode::Manual => {
                let (Some(mu), Some(eta), Some(beta)) = (self.gains.mu, self.gains.eta, self.gains.beta) else {
                    return Err(Error::invalid("manual gains need mu, eta and beta"));
                };
                GainSet::new(mu, eta, beta, self.gains.epsilon)?
            }
            GainMode::Designed => scenario.designed_gains()?.0,
        };
        scenario.gains.validate()?;
        Ok(scenario)
    }
}

fn ensure_on_grid(what: &str, t: f64, dt: f64) -> Result<()> {
    let k = (t / dt).round();
    if (t - k * dt).abs() > 1e-9 * dt.max(t.abs() * 1e-3) {
        return Err(Error::invalid(format!("{what} = {t} is not a multiple of dt = {dt}")));
    }
    Ok(())
}

fn build_graphs(specs: &[GraphSpec], weight: f64, n: usize, base: &Path) -> Result<Vec<DirectedGraph>> {
    specs
        .iter()
        .map(|spec| {
            if let Some(file) = &spec.file {
                if !spec.edges.is_empty() {
                    return Err(Error::invalid("graph gives both a file and inline edges"));
                }
                let text = std::fs::read_to_string(base.join(file))?;
                let g = DirectedGraph::parse_edge_list(&text)?;
                if g.n_followers() != n {
                    return Err(Error::invalid(format!(
                        "graph file {file} has {} followers, scenario has {n}",
                        g.n_followers()
                    )));
                }
                return Ok(g);
            }
            let weights = match &spec.weights {
                Some(w) if w.len() != spec.edges.len() => {
                    return Err(Error::invalid("weights must match edges in length"));
                }
                Some(w) => w.clone(),
                None => vec![weight; spec.edges.len()],
            };
            let edges: Vec<Edge> = spec
                .edges
                .iter()
                .zip(weights)
                .map(|(&[src, dst], weight)| Edge { src, dst, weight })
                .collect();
            DirectedGraph::from_edges(n, &edges)
        })
        .collect()
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.models.len()
    }

    pub fn dof(&self) -> usize {
        self.leader.dof()
    }

    pub fn in_blackout(&self, t: f64) -> bool {
        matches!(self.blackout, Some((a, b)) if t >= a && t < b)
    }

    /// Observer graph in force at `t`.
    pub fn observer_graph_at(&self, t: f64) -> DirectedGraph {
        if self.in_blackout(t) {
            return DirectedGraph::empty(self.n());
        }
        let idx = if self.paired { self.g_a.index_at(t) } else { self.g_b.index_at(t) };
        let g = &self.g_b.topologies()[idx];
        if self.pin_leader {
            g.with_leader_pinning(&self.g_a.topologies()[self.g_a.index_at(t)])
        } else {
            g.clone()
        }
    }

    /// Network bound constants sampled over the design box, with the
    /// initial-error bounds taken from the configured initial state.
    pub fn bound_constants(&self) -> Result<BoundConstants> {
        let n = self.n();
        let q_region = Region::Ball {
            radius: self.design.q_radius,
        };
        let qd_region = Region::Ball {
            radius: self.design.qdot_radius,
        };
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut kc: f64 = 0.0;
        let mut kg: f64 = 0.0;
        let mut kz: f64 = 0.0;
        for (i, m) in self.models.iter().enumerate() {
            let b = estimate_bounds(m, &q_region, &qd_region, self.design.samples, self.seed.wrapping_add(i as u64))?;
            lo = lo.min(b.k_m_lower);
            hi = hi.max(b.k_m_upper);
            kc = kc.max(b.k_c);
            kg = kg.max(b.k_g);
            let z = match m {
                Model::TwoLinkArm(a) => a.disturbance.norm_bound(2),
                Model::ConstantInertia(c) => c.disturbance.norm_bound(c.dof()),
            };
            kz = kz.max(z);
        }
        let root_n = (n as f64).sqrt();
        let (kp, kq) = leader_bounds(&self.leader, n, self.t_end.max(1.0), 20_001);
        let l0 = self.leader.eval(0.0);
        let ka: f64 = self.q0.iter().map(|q| (q - &l0.q).norm_squared()).sum::<f64>().sqrt();
        let kb: f64 = self.qdot0.iter().map(|q| (q - &l0.qdot).norm_squared()).sum::<f64>().sqrt();
        let s = crate::dynamics::BOUND_SAFETY_FACTOR;
        let floor = |x: f64| x.max(BOUND_FLOOR);
        Ok(BoundConstants {
            k_m_lower: lo,
            k_m_upper: hi,
            k_c: floor(kc),
            k_g: floor(kg * root_n),
            k_zeta: floor(kz * root_n),
            k_p: floor(kp),
            k_q: floor(kq),
            k_a: floor(ka * s),
            k_b: floor(kb * s),
        })
    }

    pub fn design_inputs(&self) -> Result<Vec<DesignInputs>> {
        let bounds = self.bound_constants()?;
        self.certificates
            .iter()
            .map(|(_, cert)| DesignInputs::new(bounds, cert, self.dof()))
            .collect()
    }

    /// Gains from the designer, shared across all control topologies.
    pub fn designed_gains(&self) -> Result<(GainSet, Vec<GainLedger>)> {
        design::design_gains_switching(&self.design_inputs()?, self.gains.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[leader]
kind = "stationary"
position = [0.0]

[[agents]]
model = "constant-inertia"
inertia = [[1.0]]
q0 = [1.0]
qdot0 = [0.0]

[graphs]
a = [{ edges = [[0, 1]] }]

[gains]
mu = 1.0
eta = 2.0
beta = 1.0

[observer]
omega1 = 1.0
omega2 = 1.0

[integration]
t_end = 1.0
"#;

    #[test]
    fn minimal_scenario_builds() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let s = cfg.build(Path::new(".")).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.g_a.topologies()[0].weight(1, 0), 5.0);
        assert_eq!(s.substeps, Substeps::Auto(AutoTag::Auto));
    }

    #[test]
    fn negative_dt_rejected() {
        let mut cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        cfg.integration.dt = -1e-3;
        assert!(matches!(cfg.build(Path::new(".")), Err(Error::Validation(_))));
    }

    #[test]
    fn off_grid_blackout_rejected() {
        let mut cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        cfg.blackout = Some(BlackoutConfig {
            start: 0.1234,
            end: 0.5,
        });
        assert!(cfg.build(Path::new(".")).is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        let text = MINIMAL.replace("omega2 = 1.0", "omega2 = 1.0\nomega3 = 2.0");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn fixed_substeps_parse() {
        let text = MINIMAL.replace("t_end = 1.0", "t_end = 1.0\nsubsteps = 3");
        let cfg = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.integration.substeps, Substeps::Fixed(3));
    }
}
