use serde::{Deserialize, Serialize};

use super::linsolve::{LinearSolver, SolveStats, SolverConfig};
use super::{ThermalError, ThermalField, ThermalNetwork};
use crate::power::PowerTrace;

/// s
pub const DEFAULT_TIME_STEP: f64 = 1e-4;

/// Steady state of `A·T = b + sources`, solved to
/// `‖r‖∞ ≤ tolerance · max(1, ‖sources‖∞)`.
pub fn solve_steady(
    net: &ThermalNetwork,
    sources: &[f64],
    config: &SolverConfig,
) -> Result<(ThermalField, SolveStats), ThermalError> {
    check_sources(net, sources)?;
    let solver = LinearSolver::new(net.matrix.clone(), *config)?;
    let rhs: Vec<f64> = net.boundary_rhs.iter().zip(sources).map(|(b, q)| b + q).collect();
    let guess = vec![net.min_boundary_temperature(); rhs.len()];
    let (t, stats) = solver.solve_scaled(&rhs, Some(&guess), super::linsolve::norm_inf(sources))?;
    Ok((field(net, t, None), stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Keep every n-th step; the final step is always kept.
    pub record_every: usize,
    pub solver: SolverConfig,
}

impl TransientConfig {
    pub fn new(duration: f64) -> Self {
        TransientConfig { dt: DEFAULT_TIME_STEP, duration, record_every: 1, solver: SolverConfig::default() }
    }
}

/// Implicit-Euler integration of `C·dT/dt = b + P(t) − A·T`.
///
/// The power of the trace interval containing the start of each step is held
/// over the step; samples past the end of the trace repeat the last one.
/// `initial` defaults to the ambient temperature at every node.
pub fn solve_transient(
    net: &ThermalNetwork,
    trace: &PowerTrace,
    initial: Option<&[f64]>,
    config: &TransientConfig,
) -> Result<Vec<ThermalField>, ThermalError> {
    let TransientConfig { dt, duration, record_every, solver } = *config;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ThermalError::InvalidTimeStep(format!("dt = {dt} s must be positive")));
    }
    if !(duration >= dt) {
        return Err(ThermalError::InvalidTimeStep(format!("duration {duration} s is shorter than dt {dt} s")));
    }
    let n = net.node_count();
    let mut t = match initial {
        Some(init) if init.len() != n => {
            return Err(ThermalError::InvalidTimeStep(format!("initial field has {} nodes, network {n}", init.len())))
        }
        Some(init) => init.to_vec(),
        None => vec![net.ambient_temperature; n],
    };
    let c_dt: Vec<f64> = net.capacitance.iter().map(|c| c / dt).collect();
    let system = LinearSolver::new(net.matrix.add_diagonal(&c_dt), solver)?;
    let steps = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let record_every = record_every.max(1);
    let samples = trace.0.len().max(1);
    let mut cached: Option<(usize, Vec<f64>)> = None;
    let mut out = Vec::new();
    let mut rhs = vec![0.0; n];
    for k in 0..steps {
        let start = k as f64 * dt;
        let sample = ((start / trace.0.interval).floor().max(0.0) as usize).min(samples - 1);
        if cached.as_ref().map(|c| c.0) != Some(sample) {
            let powers = trace.at_time(start);
            let q = net.cell_sources(powers.iter().map(|(name, p)| (name.as_str(), *p)))?;
            cached = Some((sample, q));
        }
        let q = &cached.as_ref().expect("sources cached").1;
        for i in 0..n {
            rhs[i] = net.boundary_rhs[i] + q[i] + c_dt[i] * t[i];
        }
        let (next, _) = system.solve(&rhs, Some(&t))?;
        t = next;
        if (k + 1) % record_every == 0 || k + 1 == steps {
            out.push(field(net, t.clone(), Some((k + 1) as f64 * dt)));
        }
    }
    Ok(out)
}

fn check_sources(net: &ThermalNetwork, sources: &[f64]) -> Result<(), ThermalError> {
    if sources.len() != net.node_count() {
        return Err(ThermalError::InvalidPower(format!(
            "{} node sources for a network of {} nodes",
            sources.len(),
            net.node_count()
        )));
    }
    if let Some(i) = sources.iter().position(|q| !(*q >= 0.0 && q.is_finite())) {
        return Err(ThermalError::InvalidPower(format!("node {i} source {} W", sources[i])));
    }
    Ok(())
}

fn field(net: &ThermalNetwork, nodes: Vec<f64>, time: Option<f64>) -> ThermalField {
    ThermalField { grid: net.grid, layers: net.layer_count(), nodes, time }
}
