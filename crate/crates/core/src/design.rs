//! Gain design for the tracking controller and the ledger of every bound it
//! relies on.
//!
//! The designer fixes `beta` from the disturbance bound, `mu` from the
//! positive-definiteness thresholds, then grows `eta` geometrically until
//! the velocity-dominance condition and the region positivity conditions
//! hold. [`verify_gains`] re-derives each inequality along a separate code
//! path so that a designer bug cannot certify itself.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::controller::GainSet;
use crate::dynamics::BoundConstants;
use crate::error::{Error, Result};
use crate::graph::GammaCertificate;
use crate::linalg::{eig2_sym, sym_eigenvalues};

/// Multiplier applied to each `mu` threshold.
pub const MU_MARGIN: f64 = 1.05;
/// Multiplier applied to the `beta` threshold.
pub const BETA_MARGIN: f64 = 1.1;
/// `delta = DELTA_FRACTION * k_m_lower`.
pub const DELTA_FRACTION: f64 = 0.01;
/// Growth factor of the `eta` search.
pub const ETA_GROWTH: f64 = 1.5;
pub const ETA_START: f64 = 1.0 + 1e-3;
pub const MAX_ETA_STEPS: usize = 60;
/// Inner margins are placed at this fraction of `X1` and `Y1`.
pub const REGION_SHRINK: f64 = 0.9;
/// Floor for the sampled decay constant `a3`.
pub const A3_FLOOR: f64 = 1e-9;

const A3_ANGLE_SAMPLES: usize = 4001;

/// Network-level quantities the design depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInputs {
    pub bounds: BoundConstants,
    /// Extreme eigenvalues of `Gamma L22 + L22^T Gamma`.
    pub lambda_min_x: f64,
    pub lambda_max_x: f64,
    pub gamma_underbar: f64,
    pub n: usize,
    pub p: usize,
}

impl DesignInputs {
    pub fn new(bounds: BoundConstants, gamma: &GammaCertificate, p: usize) -> Result<Self> {
        let inputs = Self {
            bounds,
            lambda_min_x: gamma.min_eig,
            lambda_max_x: gamma.max_eig,
            gamma_underbar: gamma.gamma_underbar,
            n: gamma.gamma.len(),
            p,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !(self.lambda_min_x > 0.0 && self.lambda_max_x >= self.lambda_min_x) {
            return Err(Error::invalid("X eigenvalue bounds must satisfy 0 < min <= max"));
        }
        if !(self.gamma_underbar > 0.0 && self.gamma_underbar <= 1.0) {
            return Err(Error::invalid("gamma_underbar must lie in (0, 1]"));
        }
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("need at least one follower and one coordinate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainLedger {
    pub gains: GainSet,
    pub inputs: DesignInputs,
    pub delta: f64,
    pub mu1_star: f64,
    pub mu2_star: f64,
    pub mu3_star: f64,
    pub mu4_star: f64,
    /// Smallest `mu >= mu4*` with `phi > 0` at the ledger's `eta`.
    pub mu5_star: f64,
    /// `mu` at which the velocity-dominance condition was established.
    pub mu6_star: f64,
    /// Smallest `eta` with `phi > 0` at the ledger's `mu`.
    pub eta1_star: f64,
    /// `eta` at which the velocity-dominance condition was established.
    pub eta2_star: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Schur complements on the velocity block, used for the `Y` chain.
    pub sigma1: f64,
    pub sigma2: f64,
    pub v_bar_star: f64,
    pub v_hat_star: f64,
    pub cal_x1: f64,
    pub cal_y1: f64,
    pub cal_x: f64,
    pub cal_y: f64,
    pub vartheta: f64,
    pub varepsilon_margin: f64,
    pub xi: f64,
    pub beta_min: f64,
    pub phi: f64,
    /// Right side of the velocity-dominance condition.
    pub phi_required: f64,
    /// Smallest `b` for which the region positivity conditions can hold,
    /// optimized over the split parameter `a1`.
    pub region_b_required: f64,
    pub region_a1: f64,
    pub a3_raw: f64,
    pub a3: f64,
    pub l_mu_max: f64,
    pub l_mu_min: f64,
    pub n_mu_min: f64,
    pub n_mu_max: f64,
    /// Continuous-law decay rate `a3 / lambda_max(L_mu)`.
    pub psi: f64,
    pub kappa: f64,
    pub big_lambda: f64,
    pub dwell_min: f64,
    pub omega_radius: f64,
    pub iterations: usize,
}

impl GainLedger {
    /// Exponential rate bound `a3 / lambda_max(L_mu)` for `V`.
    pub fn decay_rate(&self) -> f64 {
        self.a3 / self.l_mu_max
    }
}

fn phi(inp: &DesignInputs, mu: f64, eta: f64) -> f64 {
    let b = &inp.bounds;
    0.5 * mu * mu * eta * inp.lambda_min_x - mu * b.k_c * b.k_p - b.k_m_upper
}

pub fn beta_threshold(b: &BoundConstants, gamma_underbar: f64) -> f64 {
    (b.k_c * b.k_p * b.k_p + xi(b)) / gamma_underbar
}

pub fn xi(b: &BoundConstants) -> f64 {
    b.k_g + b.k_zeta + b.k_m_upper * b.k_q
}

/// `sqrt(2 k_M / lambda_min(X))`.
pub fn mu4_threshold(k_m_upper: f64, lambda_min_x: f64) -> f64 {
    (2.0 * k_m_upper / lambda_min_x).sqrt()
}

/// Smallest `b` such that the region inequalities hold for some split
/// `a1` in `(e / xm, a)`; infinite when that interval is empty.
pub fn region_b_required(a: f64, c: f64, d: f64, e: f64, f: f64, cal_x: f64, xm: f64, ym: f64) -> (f64, f64) {
    let lo = e / xm;
    if !(lo < a) || xm <= 0.0 || ym <= 0.0 {
        return (f64::INFINITY, f64::NAN);
    }
    let cost = |a1: f64| {
        let y_side = e * e / (4.0 * a1 * ym * ym) + f / ym;
        let x_side = f * f / (4.0 * (a1 * xm * xm - e * xm));
        c * cal_x + d * d / (4.0 * (a - a1)) + y_side.max(x_side)
    };
    // cost is convex on the open interval; golden-section on a slightly shrunk copy
    let span = a - lo;
    let (mut l, mut r) = (lo + 1e-12 * span, a - 1e-12 * span);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = r - g * (r - l);
    let mut x2 = l + g * (r - l);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - g * (r - l);
            f1 = cost(x1);
        } else {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + g * (r - l);
            f2 = cost(x2);
        }
        if r - l <= 1e-14 * a {
            break;
        }
    }
    if f1 <= f2 {
        (f1, x1)
    } else {
        (f2, x2)
    }
}

/// `min g(x, y) / (x^2 + y^2)` over `[0, X] x [0, Y]` minus the origin, with
/// `g = a x^2 + b y^2 - d x y - c x y^2`. Along each ray the ratio is
/// affine in the radius, so scanning rays to the box boundary suffices.
fn ratio_min_over_box(a: f64, b: f64, c: f64, d: f64, cal_x: f64, cal_y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..A3_ANGLE_SAMPLES {
        let th = std::f64::consts::FRAC_PI_2 * k as f64 / (A3_ANGLE_SAMPLES - 1) as f64;
        let (s, co) = th.sin_cos();
        let reach_x = if co > 0.0 { cal_x / co } else { f64::INFINITY };
        let reach_y = if s > 0.0 { cal_y / s } else { f64::INFINITY };
        let rad = reach_x.min(reach_y);
        let val = a * co * co + b * s * s - d * co * s - c * rad * co * s * s;
        best = best.min(val);
    }
    best
}

/// Radius of the residual set reached by the boundary-layer law.
pub fn omega_radius(beta: f64, gamma_underbar: f64, n: usize, epsilon: f64, psi: f64, lambda_min_n: f64) -> f64 {
    (beta * gamma_underbar * n as f64 * epsilon / (psi * lambda_min_n)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellTime {
    pub kappa: f64,
    pub big_lambda: f64,
    pub pi_d_min: f64,
}

/// Per-topology entry `(lambda_min(N_mu), lambda_max(L_mu), a3)`.
pub fn dwell_time(entries: &[(f64, f64, f64)]) -> Result<DwellTime> {
    if entries.is_empty() {
        return Err(Error::invalid("dwell time needs at least one topology"));
    }
    if entries.iter().any(|&(n, l, a)| !(n > 0.0 && l > 0.0 && a > 0.0)) {
        return Err(Error::invalid("dwell-time inputs must be positive"));
    }
    let big_lambda = entries.iter().map(|&(_, l, a)| a / l).fold(f64::INFINITY, f64::min);
    let l_max = entries.iter().map(|e| e.1).fold(0.0, f64::max);
    let n_min = entries.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let kappa = l_max / n_min;
    Ok(DwellTime {
        kappa,
        big_lambda,
        pi_d_min: kappa.ln() / big_lambda,
    })
}

/// Evaluates every derived quantity of the design at the given gains.
pub fn evaluate_ledger(inp: &DesignInputs, gains: &GainSet) -> GainLedger {
    let b = &inp.bounds;
    let (lmin, lmax, gam) = (inp.lambda_min_x, inp.lambda_max_x, inp.gamma_underbar);
    let (mu, eta) = (gains.mu, gains.eta);
    let delta = DELTA_FRACTION * b.k_m_lower;
    let k_up = b.k_m_upper + delta;
    let k_lo = b.k_m_lower - delta;

    let mu1 = MU_MARGIN * (k_up / (2.0 * lmax)).sqrt();
    let mu2 = MU_MARGIN * (2.0 * gam * k_lo / lmin).sqrt();
    let mu3 = mu1.max(mu2);
    let mu4 = MU_MARGIN * mu4_threshold(b.k_m_upper, lmin);

    let rho1 = eta * lmax - 0.5 * k_up / (mu3 * mu3);
    let rho2 = 0.25 * eta * lmin - 0.5 * gam * k_lo / (mu3 * mu3);
    let sigma1 = 0.5 * k_up - 0.25 * k_up * k_up / (mu3 * mu3 * eta * lmax);
    let sigma2 = 0.5 * gam * k_lo - gam * gam * k_lo * k_lo / (mu3 * mu3 * eta * lmin);

    let v_bar = eta * lmax * b.k_a * b.k_a + 0.5 * k_up * b.k_b * b.k_b + k_up * b.k_a * b.k_b / mu3;
    let x1 = (v_bar / rho2).sqrt();
    let y1 = (v_bar / sigma2).sqrt();
    let v_hat = eta * lmax * x1 * x1 + 0.5 * k_up * y1 * y1 + k_up * x1 * y1 / mu3;
    let cal_x = (v_hat / rho2).sqrt();
    let cal_y = (v_hat / sigma2).sqrt();
    let vartheta = cal_x - REGION_SHRINK * x1;
    let varepsilon_margin = cal_y - REGION_SHRINK * y1;

    let xi = xi(b);
    let beta_min = beta_threshold(b, gam);
    let ph = phi(inp, mu, eta);
    let kckp = b.k_c * b.k_p;
    let phi_required = (2.0 * kckp).powi(2) / (2.0 * eta * lmin) + b.k_c * cal_x;

    let a = 0.5 * eta * lmin;
    let e = (inp.n as f64).sqrt() * gains.beta + b.k_c * b.k_p * b.k_p + xi;
    let (b_req, a1) = region_b_required(
        a,
        b.k_c,
        2.0 * kckp,
        e,
        mu * e,
        cal_x,
        cal_x - vartheta,
        cal_y - varepsilon_margin,
    );

    let mu5 = mu4.max((kckp + (kckp * kckp + 2.0 * eta * lmin * b.k_m_upper).sqrt()) / (eta * lmin));
    let eta1 = (2.0 * (mu * kckp + b.k_m_upper) / (mu * mu * lmin)).max(1.0);

    let a3_raw = ratio_min_over_box(a, ph, b.k_c, 2.0 * kckp, cal_x, cal_y) / mu;
    let a3 = a3_raw.max(A3_FLOOR);
    let (l_mu_min, l_mu_max) = eig2_sym(eta * lmax, 0.5 * k_up / mu, 0.5 * k_up);
    let (n_lo, n_hi) = eig2_sym(0.25 * eta * lmin, 0.5 * gam * k_lo / mu, 0.5 * gam * k_lo);
    let psi = a3 / l_mu_max;
    let kappa = l_mu_max / n_lo;
    let big_lambda = a3 / l_mu_max;

    GainLedger {
        gains: *gains,
        inputs: *inp,
        delta,
        mu1_star: mu1,
        mu2_star: mu2,
        mu3_star: mu3,
        mu4_star: mu4,
        mu5_star: mu5,
        mu6_star: mu,
        eta1_star: eta1,
        eta2_star: eta,
        rho1,
        rho2,
        sigma1,
        sigma2,
        v_bar_star: v_bar,
        v_hat_star: v_hat,
        cal_x1: x1,
        cal_y1: y1,
        cal_x,
        cal_y,
        vartheta,
        varepsilon_margin,
        xi,
        beta_min,
        phi: ph,
        phi_required,
        region_b_required: b_req,
        region_a1: a1,
        a3_raw,
        a3,
        l_mu_max,
        l_mu_min,
        n_mu_min: n_lo,
        n_mu_max: n_hi,
        psi,
        kappa,
        big_lambda,
        dwell_min: kappa.ln() / big_lambda,
        omega_radius: omega_radius(gains.beta, gam, inp.n, gains.epsilon, psi, n_lo),
        iterations: 0,
    }
}

fn ledger_closes(l: &GainLedger) -> bool {
    l.phi > 0.0 && l.phi > l.phi_required && l.phi > l.region_b_required && l.a3_raw > 0.0
}

/// Designs `(mu, eta, beta)` for one topology. `epsilon` is carried into the
/// returned gains and only affects the residual-set radius.
pub fn design_gains(inp: &DesignInputs, epsilon: f64) -> Result<(GainSet, GainLedger)> {
    inp.validate()?;
    let beta = BETA_MARGIN * beta_threshold(&inp.bounds, inp.gamma_underbar);
    let probe = evaluate_ledger(
        inp,
        &GainSet {
            mu: 1.0,
            eta: ETA_START,
            beta,
            epsilon,
        },
    );
    let mu = probe.mu1_star.max(probe.mu2_star).max(probe.mu3_star).max(probe.mu4_star);
    let mut eta = ETA_START;
    let mut first_positive_phi = None;
    let mut ledger = probe;
    for step in 0..MAX_ETA_STEPS {
        let gains = GainSet { mu, eta, beta, epsilon };
        ledger = evaluate_ledger(inp, &gains);
        if first_positive_phi.is_none() && ledger.phi > 0.0 {
            first_positive_phi = Some(eta);
        }
        if ledger_closes(&ledger) {
            ledger.iterations = step + 1;
            ledger.eta1_star = first_positive_phi.unwrap_or(eta);
            ledger.mu5_star = mu;
            return Ok((gains, ledger));
        }
        eta *= ETA_GROWTH;
    }
    ledger.iterations = MAX_ETA_STEPS;
    Err(Error::IterationCap {
        iterations: MAX_ETA_STEPS,
        ledger: Box::new(ledger),
    })
}

/// Designs one gain set valid on every topology: per-topology designs are
/// combined by taking the largest of each gain, then `eta` is raised until
/// every topology's ledger closes.
pub fn design_gains_switching(inputs: &[DesignInputs], epsilon: f64) -> Result<(GainSet, Vec<GainLedger>)> {
    if inputs.is_empty() {
        return Err(Error::invalid("need at least one topology"));
    }
    let mut common = GainSet {
        mu: 0.0,
        eta: 0.0,
        beta: 0.0,
        epsilon,
    };
    for inp in inputs {
        let (g, _) = design_gains(inp, epsilon)?;
        common.mu = common.mu.max(g.mu);
        common.eta = common.eta.max(g.eta);
        common.beta = common.beta.max(g.beta);
    }
    let mut ledgers = Vec::new();
    for step in 0..MAX_ETA_STEPS {
        ledgers = inputs.iter().map(|inp| evaluate_ledger(inp, &common)).collect();
        if ledgers.iter().all(ledger_closes) {
            for l in &mut ledgers {
                l.iterations = step + 1;
            }
            return Ok((common, ledgers));
        }
        common.eta *= ETA_GROWTH;
    }
    Err(Error::IterationCap {
        iterations: MAX_ETA_STEPS,
        ledger: Box::new(ledgers.swap_remove(0)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub id: String,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl InequalityCheck {
    fn strict(id: &str, description: &str, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            id: id.into(),
            description: description.into(),
            lhs,
            rhs,
            slack,
            satisfied: slack > 0.0,
        }
    }
}

fn block_2x2(a: f64, b: f64, d: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, b, d])
}

/// Re-derives every design inequality for `gains` from the raw inputs.
pub fn verify_gains(gains: &GainSet, inp: &DesignInputs) -> Vec<InequalityCheck> {
    let bc = &inp.bounds;
    let lam_lo = inp.lambda_min_x;
    let lam_hi = inp.lambda_max_x;
    let g_lo = inp.gamma_underbar;
    let d = bc.k_m_lower / 100.0;
    let m_hi = bc.k_m_upper + d;
    let m_lo = bc.k_m_lower - d;
    let mut out = Vec::new();

    let disturbance_total = bc.k_g + bc.k_zeta + bc.k_m_upper * bc.k_q;
    out.push(InequalityCheck::strict(
        "beta",
        "beta * gamma_min - k_C k_p^2 - xi > 0",
        gains.beta * g_lo,
        bc.k_c * bc.k_p.powi(2) + disturbance_total,
    ));
    out.push(InequalityCheck::strict("eta", "eta > 1", gains.eta, 1.0));

    let thresholds = [
        ("mu1", "mu above the L_mu definiteness threshold", (m_hi / (2.0 * lam_hi)).sqrt()),
        ("mu2", "mu above the N_mu definiteness threshold", (2.0 * g_lo * m_lo / lam_lo).sqrt()),
        ("mu4", "mu above sqrt(2 k_M / lambda_min(X))", (2.0 * bc.k_m_upper / lam_lo).sqrt()),
    ];
    for (id, desc, thr) in thresholds {
        out.push(InequalityCheck::strict(id, desc, gains.mu, thr));
    }

    // quadratic-form blocks, built as matrices and checked by eigenvalues
    let l_mu = block_2x2(gains.eta * lam_hi, 0.5 * m_hi / gains.mu, 0.5 * m_hi);
    let n_mu = block_2x2(0.25 * gains.eta * lam_lo, 0.5 * g_lo * m_lo / gains.mu, 0.5 * g_lo * m_lo);
    let l_eig = sym_eigenvalues(&l_mu);
    let n_eig = sym_eigenvalues(&n_mu);
    out.push(InequalityCheck::strict("L_mu", "lambda_min(L_mu) > 0", l_eig[0], 0.0));
    out.push(InequalityCheck::strict("N_mu", "lambda_min(N_mu) > 0", n_eig[0], 0.0));

    // initial-condition boxes, evaluated at the larger of the two first thresholds
    let mu3 = 1.05 * thresholds[0].2.max(thresholds[1].2);
    let l3 = block_2x2(gains.eta * lam_hi, 0.5 * m_hi / mu3, 0.5 * m_hi);
    let n3 = block_2x2(0.25 * gains.eta * lam_lo, 0.5 * g_lo * m_lo / mu3, 0.5 * g_lo * m_lo);
    let schur_x = |m: &DMatrix<f64>| m[(0, 0)] - m[(0, 1)] * m[(0, 1)] / m[(1, 1)];
    let schur_y = |m: &DMatrix<f64>| m[(1, 1)] - m[(0, 1)] * m[(0, 1)] / m[(0, 0)];
    let r1 = schur_x(&l3);
    let r2 = schur_x(&n3);
    out.push(InequalityCheck::strict("rho", "rho1(mu3*) > rho2(mu3*)", r1, r2));
    let upper_form = |x: f64, y: f64| {
        let v = nalgebra::Vector2::new(x, y);
        let m = nalgebra::Matrix2::new(l3[(0, 0)], l3[(0, 1)], l3[(0, 1)], l3[(1, 1)]);
        // cross terms enter with their magnitudes, so take both vectors nonnegative
        (v.transpose() * m * v)[(0, 0)]
    };
    let v_bar = upper_form(bc.k_a, bc.k_b);
    let x1 = (v_bar / r2).sqrt();
    let y1 = (v_bar / schur_y(&n3)).sqrt();
    let v_hat = upper_form(x1, y1);
    let big_x = (v_hat / r2).sqrt();
    let big_y = (v_hat / schur_y(&n3)).sqrt();
    let xm = REGION_SHRINK * x1;
    let ym = REGION_SHRINK * y1;
    out.push(InequalityCheck::strict("box-x", "X >= X1 (inner margin nonempty)", big_x, x1 - 1e-12 * x1));
    out.push(InequalityCheck::strict("box-y", "Y >= Y1 (inner margin nonempty)", big_y, y1 - 1e-12 * y1));
    out.push(InequalityCheck::strict("margin-x", "vartheta > X - X1", big_x - xm, big_x - x1));
    out.push(InequalityCheck::strict("margin-y", "varepsilon > Y - Y1", big_y - ym, big_y - y1));
    out.push(InequalityCheck::strict("inner-x", "X - vartheta > 0", xm, 0.0));
    out.push(InequalityCheck::strict("inner-y", "Y - varepsilon > 0", ym, 0.0));

    let kckp = bc.k_c * bc.k_p;
    let phi_v = 0.5 * gains.mu.powi(2) * gains.eta * lam_lo - gains.mu * kckp - bc.k_m_upper;
    out.push(InequalityCheck::strict("phi", "phi(mu, eta) > 0", phi_v, 0.0));
    out.push(InequalityCheck::strict(
        "velocity-dominance",
        "phi > (2 k_C k_p)^2 / (2 eta lambda_min(X)) + k_C X",
        phi_v,
        4.0 * kckp * kckp / (2.0 * gains.eta * lam_lo) + bc.k_c * big_x,
    ));

    // region positivity: scan the split parameter on a fine grid
    let a = 0.5 * gains.eta * lam_lo;
    let e = (inp.n as f64).sqrt() * gains.beta + bc.k_c * bc.k_p.powi(2) + disturbance_total;
    let f = gains.mu * e;
    let lo = e / xm;
    let mut need = f64::INFINITY;
    if lo < a {
        for k in 1..20000 {
            let a1 = lo + (a - lo) * k as f64 / 20000.0;
            let rhs = bc.k_c * big_x
                + (2.0 * kckp).powi(2) / (4.0 * (a - a1))
                + (e * e / (4.0 * a1 * ym * ym) + f / ym).max(f * f / (4.0 * (a1 * xm * xm - e * xm)));
            need = need.min(rhs);
        }
    }
    out.push(InequalityCheck::strict(
        "region",
        "phi exceeds the region positivity requirement for some split a1",
        phi_v,
        need,
    ));

    // decay constant over the box, by a plain grid
    let mut worst = f64::INFINITY;
    let m = 300;
    for i in 0..=m {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let x = big_x * i as f64 / m as f64;
            let y = big_y * j as f64 / m as f64;
            let g = a * x * x + phi_v * y * y - 2.0 * kckp * x * y - bc.k_c * x * y * y;
            worst = worst.min(g / (x * x + y * y));
        }
    }
    out.push(InequalityCheck::strict("a3", "sampled decay constant a3 > 0", worst / gains.mu, 0.0));
    out
}

pub fn all_satisfied(checks: &[InequalityCheck]) -> bool {
    checks.iter().all(|c| c.satisfied)
}

/// Half-life in seconds implied by a decay rate.
pub fn half_life(rate: f64) -> f64 {
    LN_2 / rate
}
