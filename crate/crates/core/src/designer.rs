//! Fixed-point tuning of three chimney heights towards `R = 0`, `T = 1`.
//!
//! Heights are parametrized as `h_m = pi/k + tau_m` with `t_m = tan(k tau_m)`.
//! Each step feeds the measured coefficients back through the inverse of the
//! first-order sensitivity matrix.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Display;

use num_traits::Float;
use thiserror::Error;

use crate::asymptotics::first_order;
use crate::geometry::{is_resonant, Chimney, MeshOptions, WaveguideSpec};
use crate::numeric::dense::{det3, inverse3, mat3_vec, Mat3};
use crate::numeric::C64;
use crate::pipeline::{solve_spec, PipelineError};

/// Placements with `|det M| <= DEGENERACY_TOL` are rejected.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Accepted window for `|T|` when checking that the design sits on `T = 1`.
pub const BRANCH_WINDOW: (f64, f64) = (0.999, 1.001);

#[derive(Clone, Debug, PartialEq)]
pub struct DesignConfig {
    pub k: f64,
    pub eps: f64,
    pub positions: [f64; 3],
    pub stop_tol: f64,
    pub max_iter: usize,
    /// Under-relaxation factor `0 < omega <= 1` (1 is the plain iteration).
    pub relaxation: f64,
    pub t0: [f64; 3],
}

impl DesignConfig {
    /// Symmetric placement `(-3pi/(4k), 0, 3pi/(4k))`, start at `t = 0`.
    pub fn new(k: f64, eps: f64) -> Self {
        let x = 3.0 * PI / (4.0 * k);
        Self {
            k,
            eps,
            positions: [-x, 0.0, x],
            stop_tol: 1e-9,
            max_iter: 50,
            relaxation: 1.0,
            t0: [0.0; 3],
        }
    }

    /// Half-width of the admissible `tau` box.
    pub fn tau_bound(&self) -> f64 {
        PI / (2.0 * self.k)
    }

    pub fn heights(&self, t: &[f64; 3]) -> [f64; 3] {
        let tau = tau_of(self.k, t);
        [PI / self.k + tau[0], PI / self.k + tau[1], PI / self.k + tau[2]]
    }
}

pub fn tau_of(k: f64, t: &[f64; 3]) -> [f64; 3] {
    [Float::atan(t[0]) / k, Float::atan(t[1]) / k, Float::atan(t[2]) / k]
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DesignError<E> {
    #[error("degenerate placement: |det M| = {det:e}")]
    DegeneratePlacement { det: f64 },
    #[error("invalid design config: {0}")]
    InvalidConfig(&'static str),
    #[error("fixed point diverged at iteration {iteration}: tau = {tau:?}")]
    Diverged { iteration: usize, tau: [f64; 3] },
    #[error("iteration {iteration}: chimney {index} height {height} is near a resonance")]
    NearResonant { iteration: usize, index: usize, height: f64 },
    #[error("no convergence after {} iterations (last step {:e})", .0.iteration, .0.last_step())]
    NotConverged(Box<DesignState>),
    #[error("converged on the wrong branch: |T| = {}", .0.final_transmission().norm())]
    WrongBranch(Box<DesignState>),
    #[error("coefficient evaluation failed: {0}")]
    Oracle(E),
}

/// The sensitivity matrix with rows `cos 2kx_m`, `sin 2kx_m`, `1` (columns indexed by chimney).
pub fn build_matrix(k: f64, positions: &[f64; 3]) -> Result<Mat3, f64> {
    let mut m = [[0.0; 3]; 3];
    for (j, &x) in positions.iter().enumerate() {
        m[0][j] = Float::cos(2.0 * k * x);
        m[1][j] = Float::sin(2.0 * k * x);
        m[2][j] = 1.0;
    }
    let det = det3(&m);
    if Float::abs(det) <= DEGENERACY_TOL {
        Err(det)
    } else {
        Ok(m)
    }
}

/// Closed-form determinant for equispaced placements with spacing `eta`.
pub fn equispaced_determinant(k: f64, eta: f64) -> f64 {
    2.0 * Float::sin(2.0 * k * eta) * (1.0 - Float::cos(2.0 * k * eta))
}

/// One iterate of the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub t: [f64; 3],
    pub heights: [f64; 3],
    pub s_minus: C64,
    pub s_plus: C64,
    /// `sum_m |t^{j+1}_m - t^j_m|` of the update computed from this iterate.
    pub step_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignState {
    pub iteration: usize,
    pub t_vec: [f64; 3],
    pub tau_vec: [f64; 3],
    pub heights: [f64; 3],
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// `|1 + s+|` inside [`BRANCH_WINDOW`] at the last iterate.
    pub branch_ok: bool,
    next_t: [f64; 3],
}

impl DesignState {
    pub fn last(&self) -> &IterationRecord {
        self.history.last().expect("state always holds its first iterate")
    }

    pub fn last_step(&self) -> f64 {
        self.last().step_norm
    }

    pub fn final_transmission(&self) -> C64 {
        C64::new(1.0, 0.0) + self.last().s_plus
    }

    /// `max_m |tau_m|` of the current iterate.
    pub fn tau_max(&self) -> f64 {
        self.tau_vec.iter().fold(0.0, |m, t| m.max(Float::abs(*t)))
    }
}

/// Source of `(s-, s+)` for given chimney heights.
pub trait CoefficientOracle {
    type Error: Display;
    fn coefficients(&mut self, heights: &[f64; 3]) -> Result<(C64, C64), Self::Error>;
}

/// Full finite-element evaluation at fixed mesh parameters.
#[derive(Clone, Debug)]
pub struct FemOracle {
    pub template: WaveguideSpec,
    pub positions: [f64; 3],
    pub eps: f64,
    pub options: MeshOptions,
}

impl FemOracle {
    /// Uses `template` for `k`, `L`, DtN terms and mesh size; pins the vertical
    /// cell count of every chimney to the one of the nominal height `pi/k` so
    /// the mesh topology does not jump while heights move.
    pub fn new(template: WaveguideSpec, positions: [f64; 3], eps: f64) -> Self {
        let nominal = PI / template.k;
        let cells = (Float::ceil(nominal / template.mesh_target_h - 1e-9) as usize).max(1);
        let options = MeshOptions {
            chimney_vertical_cells: Some(alloc::vec![cells; 3]),
            ..MeshOptions::default()
        };
        Self {
            template,
            positions,
            eps,
            options,
        }
    }

    pub fn spec(&self, heights: &[f64; 3]) -> WaveguideSpec {
        let chimneys = (0..3)
            .map(|m| Chimney::new(self.positions[m], heights[m], self.eps))
            .collect();
        self.template.clone().with_chimneys(chimneys)
    }
}

impl CoefficientOracle for FemOracle {
    type Error = PipelineError;
    fn coefficients(&mut self, heights: &[f64; 3]) -> Result<(C64, C64), PipelineError> {
        let solved = solve_spec(&self.spec(heights), &self.options)?;
        Ok((solved.result.s_minus, solved.result.s_plus))
    }
}

/// `eps * s1(h) + remainder`: the first-order model plus a frozen offset.
#[derive(Clone, Debug)]
pub struct FirstOrderSurrogate {
    pub k: f64,
    pub eps: f64,
    pub positions: [f64; 3],
    pub remainder: (C64, C64),
}

impl CoefficientOracle for FirstOrderSurrogate {
    type Error = crate::asymptotics::AsymptoticsError;
    fn coefficients(&mut self, heights: &[f64; 3]) -> Result<(C64, C64), Self::Error> {
        let chimneys = (0..3)
            .map(|m| Chimney::new(self.positions[m], heights[m], self.eps))
            .collect();
        let spec = WaveguideSpec::strip(self.k, 1.0, 1.0).with_chimneys(chimneys);
        let p = first_order(&spec)?;
        Ok((
            p.s1_minus * self.eps + self.remainder.0,
            p.s1_plus * self.eps + self.remainder.1,
        ))
    }
}

fn validate_config<E>(config: &DesignConfig) -> Result<Mat3, DesignError<E>> {
    if !(config.k > 0.0 && config.k < PI) {
        return Err(DesignError::InvalidConfig("k must lie in (0, pi)"));
    }
    if !(config.eps > 0.0) {
        return Err(DesignError::InvalidConfig("eps must be positive"));
    }
    if !(config.stop_tol > 0.0) {
        return Err(DesignError::InvalidConfig("stop_tol must be positive"));
    }
    if !(config.relaxation > 0.0 && config.relaxation <= 1.0) {
        return Err(DesignError::InvalidConfig("relaxation must lie in (0, 1]"));
    }
    build_matrix(config.k, &config.positions).map_err(|det| DesignError::DegeneratePlacement { det })
}

/// `t + omega * (2/eps) M^{-1} (Re(i s-), Im(i s-), Re(i s+))`.
pub fn update(config: &DesignConfig, minv: &Mat3, t: &[f64; 3], s_minus: C64, s_plus: C64) -> [f64; 3] {
    let i = C64::new(0.0, 1.0);
    let is_m = i * s_minus;
    let is_p = i * s_plus;
    let d = mat3_vec(minv, &[is_m.re, is_m.im, is_p.re]);
    let g = config.relaxation * 2.0 / config.eps;
    [t[0] + g * d[0], t[1] + g * d[1], t[2] + g * d[2]]
}

fn evaluate<O: CoefficientOracle>(
    config: &DesignConfig,
    minv: &Mat3,
    oracle: &mut O,
    iteration: usize,
    t: [f64; 3],
) -> Result<(IterationRecord, [f64; 3]), DesignError<O::Error>> {
    let tau = tau_of(config.k, &t);
    if t.iter().any(|v| !v.is_finite()) || tau.iter().any(|v| Float::abs(*v) >= config.tau_bound()) {
        return Err(DesignError::Diverged { iteration, tau });
    }
    let heights = config.heights(&t);
    for (index, &height) in heights.iter().enumerate() {
        if is_resonant(config.k, height) {
            return Err(DesignError::NearResonant {
                iteration,
                index,
                height,
            });
        }
    }
    let (s_minus, s_plus) = oracle.coefficients(&heights).map_err(DesignError::Oracle)?;
    let next = update(config, minv, &t, s_minus, s_plus);
    let step_norm = (0..3).map(|m| Float::abs(next[m] - t[m])).sum();
    Ok((
        IterationRecord {
            iteration,
            t,
            heights,
            s_minus,
            s_plus,
            step_norm,
        },
        next,
    ))
}

fn branch_ok(s_plus: C64) -> bool {
    let t = (C64::new(1.0, 0.0) + s_plus).norm();
    t >= BRANCH_WINDOW.0 && t <= BRANCH_WINDOW.1
}

/// Solves at the starting point `config.t0`.
pub fn initial_state<O: CoefficientOracle>(config: &DesignConfig, oracle: &mut O) -> Result<DesignState, DesignError<O::Error>> {
    let m = validate_config(config)?;
    let minv = inverse3(&m).ok_or(DesignError::DegeneratePlacement { det: det3(&m) })?;
    let (rec, next) = evaluate(config, &minv, oracle, 0, config.t0)?;
    Ok(DesignState {
        iteration: 0,
        t_vec: rec.t,
        tau_vec: tau_of(config.k, &rec.t),
        heights: rec.heights,
        converged: rec.step_norm <= config.stop_tol,
        branch_ok: branch_ok(rec.s_plus),
        history: alloc::vec![rec],
        next_t: next,
    })
}

/// Moves to the next iterate and re-evaluates the coefficients there.
pub fn fixed_point_step<O: CoefficientOracle>(
    config: &DesignConfig,
    state: DesignState,
    oracle: &mut O,
) -> Result<DesignState, DesignError<O::Error>> {
    let m = validate_config(config)?;
    let minv = inverse3(&m).ok_or(DesignError::DegeneratePlacement { det: det3(&m) })?;
    let iteration = state.iteration + 1;
    let (rec, next) = evaluate(config, &minv, oracle, iteration, state.next_t)?;
    let mut history = state.history;
    let converged = rec.step_norm <= config.stop_tol;
    let ok = branch_ok(rec.s_plus);
    history.push(rec);
    Ok(DesignState {
        iteration,
        t_vec: rec.t,
        tau_vec: tau_of(config.k, &rec.t),
        heights: rec.heights,
        history,
        converged,
        branch_ok: ok,
        next_t: next,
    })
}

/// Iterates until the update norm drops to `stop_tol`.
///
/// The reported iteration count is the number of updates applied: the
/// stopping test is made on the update computed from the current iterate,
/// which needs no further solve.
pub fn run_design<O: CoefficientOracle>(config: &DesignConfig, oracle: &mut O) -> Result<DesignState, DesignError<O::Error>> {
    let mut state = initial_state(config, oracle)?;
    while !state.converged {
        if state.iteration >= config.max_iter {
            return Err(DesignError::NotConverged(Box::new(state)));
        }
        state = fixed_point_step(config, state, oracle)?;
    }
    if !state.branch_ok {
        return Err(DesignError::WrongBranch(Box::new(state)));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_placement_matrix() {
        let k = 0.8 * PI;
        for p in 0..3 {
            let x = (2 * p + 1) as f64 * PI / (4.0 * k);
            let m = build_matrix(k, &[-x, 0.0, x]).unwrap();
            let sgn = if p % 2 == 0 { 1.0 } else { -1.0 };
            let expect = [[0.0, 1.0, 0.0], [-sgn, 0.0, sgn], [1.0, 1.0, 1.0]];
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m[i][j] - expect[i][j]).abs() < 1e-14, "p={p} ({i},{j})");
                }
            }
        }
        let m = build_matrix(k, &DesignConfig::new(k, 0.3).positions).unwrap();
        assert!((det3(&m) + 2.0).abs() < 1e-13);
    }

    #[test]
    fn equispaced_determinant_formula() {
        let k = 0.8 * PI;
        for eta in [0.3, 0.7, 3.0 * PI / (4.0 * k), 1.9] {
            let m = build_matrix(k, &[-eta, 0.0, eta]);
            let d = equispaced_determinant(k, eta);
            match m {
                Ok(m) => assert!((det3(&m) - d).abs() < 1e-12),
                Err(det) => assert!((det - d).abs() < 1e-12),
            }
        }
        assert!((equispaced_determinant(k, 3.0 * PI / (4.0 * k)) + 2.0).abs() < 1e-12);
        assert!(build_matrix(k, &[-PI / (2.0 * k), 0.0, PI / (2.0 * k)]).is_err());
    }

    #[test]
    fn surrogate_converges_in_one_update() {
        let k = 0.8 * PI;
        let mut cfg = DesignConfig::new(k, 0.2);
        cfg.t0 = [0.4, -0.3, 0.25];
        let mut oracle = FirstOrderSurrogate {
            k,
            eps: cfg.eps,
            positions: cfg.positions,
            remainder: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        };
        let state = run_design(&cfg, &mut oracle).unwrap();
        assert_eq!(state.iteration, 1);
        assert!(state.t_vec.iter().all(|t| t.abs() < 1e-12));
        assert!(state.last().s_minus.norm() < 1e-14 && state.last().s_plus.norm() < 1e-14);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let k = 0.8 * PI;
        let cfg = DesignConfig::new(k, 0.3);
        let mut oracle = FirstOrderSurrogate {
            k,
            eps: cfg.eps,
            positions: cfg.positions,
            remainder: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        };
        let state = run_design(&cfg, &mut oracle).unwrap();
        assert_eq!(state.iteration, 0);
        assert!(state.last().step_norm < 1e-12);
    }
}
