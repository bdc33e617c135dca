//! Post-run checks on recorded traces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::design::GainLedger;
use crate::error::{Error, Result};
use crate::observer::detect_convergence_after;
use crate::simulation::SimTrace;

/// Default tolerance for observer convergence, in coordinate units.
pub const T1_TOLERANCE: f64 = 1e-5;

/// Fraction of the horizon treated as steady state.
pub const STEADY_STATE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    /// Standard error of the fitted rate.
    pub stderr: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

/// Ratio of `V(t_a)` below which samples are treated as integration noise
/// and left out of the decay fit.
pub const NOISE_FLOOR_RATIO: f64 = 1e-9;

/// `[t_a, t_b]` with `t_b` the last sample before `V` first falls under
/// `NOISE_FLOOR_RATIO * V(t_a)`.
pub fn decay_window(trace: &SimTrace, t_a: f64) -> (f64, f64) {
    let mut rows = trace.rows.iter().filter(|r| r.t >= t_a);
    let Some(first) = rows.next() else { return (t_a, t_a) };
    let floor = NOISE_FLOOR_RATIO * first.v;
    let mut t_b = first.t;
    for r in rows {
        if r.v < floor {
            break;
        }
        t_b = r.t;
    }
    (t_a, t_b)
}

/// Least-squares fit of `ln V(t) = c - rate t` over `[t_a, t_b]`.
pub fn fit_decay_rate(trace: &SimTrace, window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1 && r.v > 0.0)
        .map(|r| (r.t, r.v.ln()))
        .collect();
    fit_log_linear(&pts, window)
}

fn fit_log_linear(pts: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let m = pts.len();
    if m < 3 {
        return Err(Error::DegenerateWindow(m));
    }
    let mf = m as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateWindow(m));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (ym + slope * (p.0 - tm));
            r * r
        })
        .sum();
    Ok(DecayFit {
        rate: -slope,
        residual: (ssr / mf).sqrt(),
        stderr: (ssr / (mf - 2.0) / sxx).sqrt(),
        t_start: window.0,
        t_end: window.1,
        samples: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaCheck {
    pub predicted_radius: f64,
    pub observed: f64,
    pub satisfied: bool,
}

/// Largest `||[q~; q~']||` over the final tenth of the horizon.
pub fn steady_state_norm(trace: &SimTrace) -> f64 {
    let Some(last) = trace.last() else { return 0.0 };
    let t0 = trace.rows[0].t;
    let start = last.t - STEADY_STATE_FRACTION * (last.t - t0);
    trace
        .rows
        .iter()
        .filter(|r| r.t >= start)
        .map(|r| r.stacked_pos_err().hypot(r.stacked_vel_err()))
        .fold(0.0, f64::max)
}

/// Compares the steady-state error norm with the residual-set radius. With
/// the exact signum the radius is zero and `tol` absorbs integration error.
pub fn check_omega(trace: &SimTrace, ledger: &GainLedger, tol: f64) -> OmegaCheck {
    let predicted_radius = if ledger.gains.is_continuous() {
        ledger.omega_radius
    } else {
        0.0
    };
    let observed = steady_state_norm(trace);
    OmegaCheck {
        predicted_radius,
        observed,
        satisfied: observed <= predicted_radius + tol,
    }
}

/// Samples with `||q~|| >= X` or `||q~'|| >= Y`.
pub fn check_boxes(trace: &SimTrace, ledger: &GainLedger) -> usize {
    trace
        .rows
        .iter()
        .filter(|r| r.stacked_pos_err() >= ledger.cal_x || r.stacked_vel_err() >= ledger.cal_y)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub name: String,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Largest per-follower position error.
    pub max_pos_err: f64,
    pub max_vel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub t1: Option<f64>,
    /// Observer convergence after the blackout ends; `t1` only looks at
    /// samples before the blackout.
    pub t1_reconnect: Option<f64>,
    pub decay: Option<DecayFit>,
    pub phases: Vec<PhaseStats>,
    pub box_violations: Option<usize>,
    pub omega: Option<OmegaCheck>,
    pub final_pos_err: f64,
    pub final_vel_err: f64,
}

/// Empirical observer convergence time within `[start, end)`.
pub fn observer_convergence(trace: &SimTrace, start: f64, end: f64, tol: f64) -> Result<f64> {
    let rows: Vec<_> = trace.rows.iter().filter(|r| r.t < end).collect();
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let pos: Vec<f64> = rows.iter().map(|r| r.observer_pos_err()).collect();
    let vel: Vec<f64> = rows.iter().map(|r| r.observer_vel_err()).collect();
    detect_convergence_after(&times, &pos, &vel, tol, start)
}

/// Phase boundaries: pre-T1, tracking, blackout, post-reconnect and steady
/// state. Empty phases are dropped; the rest partition the time axis.
pub fn phase_stats(trace: &SimTrace, t1: Option<f64>, blackout: Option<(f64, f64)>) -> Vec<PhaseStats> {
    let Some(last) = trace.last() else { return Vec::new() };
    let t0 = trace.rows[0].t;
    let t_end = last.t;
    let ss = t_end - STEADY_STATE_FRACTION * (t_end - t0);
    let (b0, b1) = blackout.unwrap_or((ss, ss));
    let clamp = |x: f64| x.clamp(t0, ss);
    let t1 = clamp(t1.unwrap_or(t_end).min(b0));
    let b0 = clamp(b0.max(t1));
    let b1 = clamp(b1.max(b0));
    let cuts = [
        ("pre-T1", t0, t1),
        ("tracking", t1, b0),
        ("blackout", b0, b1),
        ("post-reconnect", b1, ss),
        ("steady-state", ss, f64::INFINITY),
    ];
    cuts.iter()
        .filter_map(|&(name, a, b)| {
            let rows: Vec<_> = trace.rows.iter().filter(|r| r.t >= a && r.t < b).collect();
            if rows.is_empty() {
                return None;
            }
            let max_of = |f: &dyn Fn(&crate::simulation::TraceRow) -> f64| rows.iter().map(|r| f(r)).fold(0.0, f64::max);
            Some(PhaseStats {
                name: name.to_string(),
                t_start: a,
                t_end: b.min(t_end),
                samples: rows.len(),
                max_pos_err: max_of(&|r| r.err_pos.iter().copied().fold(0.0, f64::max)),
                max_vel_err: max_of(&|r| r.err_vel.iter().copied().fold(0.0, f64::max)),
            })
        })
        .collect()
}

/// Builds the report. `ledger` enables the box and residual-set checks.
pub fn analyze(trace: &SimTrace, blackout: Option<(f64, f64)>, ledger: Option<&GainLedger>) -> RunReport {
    let first_cut = blackout.map_or(f64::INFINITY, |b| b.0);
    let t1 = observer_convergence(trace, 0.0, first_cut, T1_TOLERANCE).ok();
    let t1_reconnect =
        blackout.and_then(|(_, b1)| observer_convergence(trace, b1, f64::INFINITY, T1_TOLERANCE).ok());
    let fit_start = match blackout {
        Some(_) => t1_reconnect,
        None => t1,
    };
    let decay = fit_start.and_then(|a| fit_decay_rate(trace, decay_window(trace, a)).ok());
    let (final_pos_err, final_vel_err) = trace.last().map_or((0.0, 0.0), |r| {
        (
            r.err_pos.iter().copied().fold(0.0, f64::max),
            r.err_vel.iter().copied().fold(0.0, f64::max),
        )
    });
    RunReport {
        t1,
        t1_reconnect,
        decay,
        phases: phase_stats(trace, t1, blackout),
        box_violations: ledger.map(|l| check_boxes(trace, l)),
        omega: ledger.map(|l| check_omega(trace, l, 1e-3)),
        final_pos_err,
        final_vel_err,
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("not reached".to_string(), |v| format!("{v:.3} s"));
        let _ = writeln!(s, "observer convergence T1: {}", opt(self.t1));
        if self.t1_reconnect.is_some() {
            let _ = writeln!(s, "observer reconvergence after blackout: {}", opt(self.t1_reconnect));
        }
        match &self.decay {
            Some(d) => {
                let _ = writeln!(
                    s,
                    "decay rate of V on [{:.3}, {:.3}]: {:.4} 1/s (stderr {:.2e}, rms residual {:.3e})",
                    d.t_start, d.t_end, d.rate, d.stderr, d.residual
                );
            }
            None => {
                let _ = writeln!(s, "decay rate: no usable window");
            }
        }
        let _ = writeln!(s, "{:<16}{:>10}{:>10}{:>14}{:>14}", "phase", "from", "to", "max |q~_i|", "max |q~'_i|");
        for p in &self.phases {
            let _ = writeln!(
                s,
                "{:<16}{:>10.3}{:>10.3}{:>14.4e}{:>14.4e}",
                p.name, p.t_start, p.t_end, p.max_pos_err, p.max_vel_err
            );
        }
        let _ = writeln!(s, "final position error: {:.4e}", self.final_pos_err);
        let _ = writeln!(s, "final velocity error: {:.4e}", self.final_vel_err);
        if let Some(b) = self.box_violations {
            let _ = writeln!(s, "state-box violations: {b}");
        }
        if let Some(o) = &self.omega {
            let _ = writeln!(
                s,
                "residual set: radius {:.4e}, observed {:.4e}, {}",
                o.predicted_radius,
                o.observed,
                if o.satisfied { "inside" } else { "outside" }
            );
        }
        s
    }
}
