//! Independent finite-difference discretization of the scattering problem on
//! a uniform grid, used to cross-check the finite-element coefficients.
//!
//! Each grid node owns the quarter cells around it that lie in the domain
//! (box scheme). On straight walls this is the five-point Laplacian with
//! mirrored ghost nodes; at re-entrant junction corners the three inside
//! quadrants set the face lengths and the control area. The truncation
//! sections carry the modal map with trapezoidal (cosine-transform) overlaps
//! and the symbol of the discrete outgoing modes, `i sin(b_n delta) / delta`
//! with `cos(b_n delta) = 1 - delta^2 (k^2 - mu_n) / 2`, where `mu_n` is the
//! discrete transverse eigenvalue. The incident wave and the extraction use
//! the discrete wavenumber `b_0` as well, so a uniform strip is transparent
//! to rounding.

use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::geometry::{validate_spec, Chimney, SpecViolation, WaveguideSpec};
use crate::modal::{branch_sqrt, transverse_mode, ModalError};
use crate::numeric::band::{BandLu, FactorError};
use crate::numeric::sparse::CsrMatrix;
use crate::numeric::C64;
use crate::scattering::ScatteringResult;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FdError {
    #[error("grid spacing {delta} does not divide the unit strip height")]
    BadSpacing { delta: f64 },
    #[error("snapping moved a length by {amount} (> {tol})")]
    SnapTooLarge { amount: f64, tol: f64 },
    #[error("chimney {index} spans only {cells} cells (need 4)")]
    TooCoarse { index: usize, cells: usize },
    #[error("wavenumber {k} is not resolved by spacing {delta} (need k delta < 2)")]
    Unresolved { k: f64, delta: f64 },
    #[error("snapped spec is invalid: {0:?}")]
    InvalidSpec(Vec<SpecViolation>),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error("singular finite-difference system: {0}")]
    Factor(#[from] FactorError),
}

/// A spec moved onto the lattice `delta Z^2`, with the largest displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct SnappedSpec {
    pub spec: WaveguideSpec,
    pub delta: f64,
    pub max_snap: f64,
}

fn snap(v: f64, delta: f64) -> f64 {
    Float::round(v / delta) * delta
}

/// Snaps `L`, the common width, every left wall and every height to multiples of `delta`.
pub fn snap_spec(spec: &WaveguideSpec, delta: f64, tol: f64) -> Result<SnappedSpec, FdError> {
    let ny = Float::round(1.0 / delta);
    if !(delta > 0.0) || Float::abs(ny * delta - 1.0) > 1e-9 {
        return Err(FdError::BadSpacing { delta });
    }
    let mut out = spec.clone();
    let mut max_snap: f64 = 0.0;
    let mut track = |old: f64, new: f64| max_snap = max_snap.max(Float::abs(old - new));
    out.trunc_half_length = snap(spec.trunc_half_length, delta);
    track(spec.trunc_half_length, out.trunc_half_length);
    out.chimneys = spec
        .chimneys
        .iter()
        .map(|c| {
            let width = snap(c.width, delta);
            let left = snap(c.left(), delta);
            let height = snap(c.height, delta);
            track(c.width, width);
            track(c.left(), left);
            track(c.height, height);
            Chimney::new(left + 0.5 * width, height, width)
        })
        .collect();
    if max_snap > tol {
        return Err(FdError::SnapTooLarge { amount: max_snap, tol });
    }
    for (index, c) in out.chimneys.iter().enumerate() {
        let cells = Float::round(c.width / delta) as usize;
        if cells < 4 {
            return Err(FdError::TooCoarse { index, cells });
        }
    }
    validate_spec(&out).map_err(FdError::InvalidSpec)?;
    Ok(SnappedSpec {
        spec: out,
        delta,
        max_snap,
    })
}

/// Node layout over the rectangle union.
#[derive(Clone, Debug)]
pub struct FdGrid {
    pub delta: f64,
    pub x0: f64,
    /// Cells along x.
    pub nx: usize,
    /// Cells across the strip.
    pub ny: usize,
    /// Per chimney: first and last cell column, and cell count in height.
    chimneys: Vec<(usize, usize, usize)>,
    column_start: Vec<usize>,
    column_len: Vec<usize>,
}

impl FdGrid {
    pub fn new(spec: &SnappedSpec) -> Self {
        let delta = spec.delta;
        let l = spec.spec.trunc_half_length;
        let nx = Float::round(2.0 * l / delta) as usize;
        let ny = Float::round(1.0 / delta) as usize;
        let x0 = -l;
        let chimneys: Vec<(usize, usize, usize)> = spec
            .spec
            .chimneys
            .iter()
            .map(|c| {
                let a = Float::round((c.left() - x0) / delta) as usize;
                let b = Float::round((c.right() - x0) / delta) as usize;
                let h = Float::round(c.height / delta) as usize;
                (a, b - 1, h)
            })
            .collect();
        let mut column_start = Vec::with_capacity(nx + 1);
        let mut column_len = Vec::with_capacity(nx + 1);
        let mut total = 0;
        for i in 0..=nx {
            let extra = chimneys
                .iter()
                .filter(|&&(a, b, _)| i >= a && i <= b + 1)
                .map(|&(_, _, h)| h)
                .max()
                .unwrap_or(0);
            column_start.push(total);
            column_len.push(ny + 1 + extra);
            total += ny + 1 + extra;
        }
        Self {
            delta,
            x0,
            nx,
            ny,
            chimneys,
            column_start,
            column_len,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.column_start[self.nx] + self.column_len[self.nx]
    }

    pub fn node(&self, i: usize, j: usize) -> Option<usize> {
        if i <= self.nx && j < self.column_len[i] {
            Some(self.column_start[i] + j)
        } else {
            None
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.delta * i as f64
    }

    /// Whether cell `(i, j)` (lower-left corner at node `(i, j)`) is in the domain.
    pub fn cell_inside(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.nx {
            return false;
        }
        let (i, j) = (i as usize, j as usize);
        if j < self.ny {
            return true;
        }
        self.chimneys
            .iter()
            .any(|&(a, b, h)| i >= a && i <= b && j < self.ny + h)
    }
}

/// Result of one finite-difference solve.
#[derive(Clone, Debug)]
pub struct FdSolution {
    pub grid: FdGrid,
    pub values: Vec<C64>,
    pub result: ScatteringResult,
    pub max_snap: f64,
}

/// `(4 / delta^2) sin^2(n pi delta / 2)`: eigenvalue of the discrete
/// Neumann operator across the strip for the sampled mode `cos(n pi y)`.
pub fn discrete_transverse_eigenvalue(n: usize, delta: f64) -> f64 {
    let s = Float::sin(0.5 * n as f64 * core::f64::consts::PI * delta);
    4.0 * s * s / (delta * delta)
}

/// Symbol `i sin(b delta) / delta` of the exact discrete outgoing condition
/// for a mode with transverse eigenvalue `mu` (imaginary part never negative).
pub fn discrete_symbol(k: f64, mu: f64, delta: f64) -> C64 {
    let c = 1.0 - 0.5 * delta * delta * (k * k - mu);
    C64::new(0.0, 1.0) * branch_sqrt(C64::new(1.0 - c * c, 0.0)) / delta
}

/// Discrete axial wavenumber of the piston mode, `acos(1 - (k delta)^2 / 2) / delta`.
pub fn discrete_wavenumber(k: f64, delta: f64) -> f64 {
    Float::acos(1.0 - 0.5 * k * k * delta * delta) / delta
}

/// Solves the snapped problem with grid spacing `snapped.delta`.
pub fn fd_solve_snapped(snapped: &SnappedSpec) -> Result<FdSolution, FdError> {
    let spec = &snapped.spec;
    let grid = FdGrid::new(snapped);
    let d = grid.delta;
    let k = spec.k;
    let n = grid.n_nodes();
    if !(k > 0.0) || k * d >= 2.0 {
        return Err(FdError::Unresolved { k, delta: d });
    }
    let n_terms = spec.dtn_terms.min(grid.ny + 1);
    let symbols: Vec<C64> = (0..n_terms)
        .map(|m| discrete_symbol(k, discrete_transverse_eigenvalue(m, d), d))
        .collect();
    let kd = discrete_wavenumber(k, d);
    let incident = |x: f64| C64::from_polar(1.0 / Float::sqrt(2.0 * k), kd * x);
    let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(5 * n);
    for i in 0..=grid.nx {
        for j in 0..grid.column_len[i] {
            let p = grid.node(i, j).unwrap();
            let (ii, jj) = (i as isize, j as isize);
            let ne = grid.cell_inside(ii, jj);
            let nw = grid.cell_inside(ii - 1, jj);
            let sw = grid.cell_inside(ii - 1, jj - 1);
            let se = grid.cell_inside(ii, jj - 1);
            let area = 0.25 * d * d * (ne as u8 + nw as u8 + sw as u8 + se as u8) as f64;
            let mut diag = -k * k * area;
            let faces = [
                ((i + 1, j), ne as u8 + se as u8, i < grid.nx),
                ((i.wrapping_sub(1), j), nw as u8 + sw as u8, i > 0),
                ((i, j + 1), ne as u8 + nw as u8, true),
                ((i, j.wrapping_sub(1)), se as u8 + sw as u8, j > 0),
            ];
            for ((ni, nj), halves, ok) in faces {
                if !ok || halves == 0 {
                    continue;
                }
                if let Some(q) = grid.node(ni, nj) {
                    let c = 0.5 * halves as f64; // face length / delta
                    diag += c;
                    trip.push((p, q, C64::new(-c, 0.0)));
                }
            }
            trip.push((p, p, C64::new(diag, 0.0)));
        }
    }
    // trapezoidal weights on a section
    let ys: Vec<f64> = (0..=grid.ny).map(|j| d * j as f64).collect();
    let w: Vec<f64> = (0..=grid.ny)
        .map(|j| if j == 0 || j == grid.ny { 0.5 * d } else { d })
        .collect();
    let mut rhs = alloc::vec![C64::new(0.0, 0.0); n];
    for col in [0, grid.nx] {
        for a in 0..=grid.ny {
            let pa = grid.node(col, a).unwrap();
            for b in 0..=grid.ny {
                let pb = grid.node(col, b).unwrap();
                let mut t = C64::new(0.0, 0.0);
                for (m, &sym) in symbols.iter().enumerate() {
                    // the sampled top mode has discrete norm 2
                    let norm = if m == grid.ny { 0.5 } else { 1.0 };
                    t += sym * (norm * transverse_mode(m, ys[a]) * transverse_mode(m, ys[b]));
                }
                trip.push((pa, pb, -t * (w[a] * w[b])));
            }
        }
        if col == 0 {
            let g = symbols[0] * -2.0 * incident(grid.x(0));
            for a in 0..=grid.ny {
                rhs[grid.node(0, a).unwrap()] += g * w[a];
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, n, trip);
    let lu = BandLu::factorize(&matrix)?;
    let values = lu.solve(&rhs);
    let coefficient = |col: usize| {
        let x = grid.x(col);
        let c0: C64 = (0..=grid.ny).map(|a| values[grid.node(col, a).unwrap()] * w[a]).sum::<C64>()
            - incident(x);
        C64::from_polar(Float::sqrt(2.0 * k), -kd * Float::abs(x)) * c0
    };
    let result = ScatteringResult::new(coefficient(0), coefficient(grid.nx));
    Ok(FdSolution {
        grid,
        values,
        result,
        max_snap: snapped.max_snap,
    })
}

/// Snaps `spec` to spacing `delta` (any displacement up to half a cell) and solves.
pub fn fd_solve(spec: &WaveguideSpec, delta: f64) -> Result<FdSolution, FdError> {
    let snapped = snap_spec(spec, delta, 0.5 * delta + 1e-12)?;
    fd_solve_snapped(&snapped)
}

/// Three-level extrapolation of a complex sequence computed at spacings
/// `h, h/2, h/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Richardson {
    pub limit: C64,
    /// Observed convergence order.
    pub order: f64,
    /// Error band of the limit (three-grid convergence index, safety 1.25).
    pub error_bar: f64,
}

pub fn richardson(coarse: C64, medium: C64, fine: C64) -> Richardson {
    let d1 = (medium - coarse).norm();
    let d2 = (fine - medium).norm();
    let order = if d1 > 0.0 && d2 > 0.0 {
        Float::log2(d1 / d2)
    } else {
        f64::NAN
    };
    if !(order > 0.0) || !order.is_finite() {
        return Richardson {
            limit: fine,
            order,
            error_bar: 1.25 * d1.max(d2),
        };
    }
    let factor = 1.0 / (Float::powf(2.0, order) - 1.0);
    Richardson {
        limit: fine + (fine - medium) * factor,
        order,
        error_bar: 1.25 * d2 * factor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn pure_strip_is_transparent() {
        for (k, delta) in [(0.8 * PI, 0.1), (0.3 * PI, 0.05), (0.95 * PI, 0.025)] {
            let spec = WaveguideSpec::strip(k, 2.0, 0.1);
            let r = fd_solve(&spec, delta).unwrap().result;
            assert!(r.s_minus.norm() < 1e-12 && r.s_plus.norm() < 1e-12, "{:?}", r);
        }
    }

    #[test]
    fn discrete_symbols_approach_the_continuous_ones() {
        let k = 0.8 * PI;
        for n in 0..4 {
            let exact = C64::new(0.0, 1.0) * crate::modal::axial_wavenumber(k, n).unwrap();
            let e1 = (discrete_symbol(k, discrete_transverse_eigenvalue(n, 0.02), 0.02) - exact).norm();
            let e2 = (discrete_symbol(k, discrete_transverse_eigenvalue(n, 0.01), 0.01) - exact).norm();
            assert!((e1 / e2 - 4.0).abs() < 0.1, "n={n}: {e1} {e2}");
        }
        // evanescent modes decay
        assert!(discrete_symbol(k, discrete_transverse_eigenvalue(3, 0.05), 0.05).re < 0.0);
    }

    #[test]
    fn stencil_is_second_order_on_plane_waves() {
        let k = 0.8 * PI;
        let mut prev = f64::NAN;
        for delta in [0.1, 0.05, 0.025] {
            // interior node equation divided by the cell area
            let lap = (2.0 * (k * delta).cos() - 2.0) / (delta * delta);
            let res = (lap + k * k).abs();
            if prev.is_finite() {
                assert!((prev / res - 4.0).abs() < 0.05);
            }
            prev = res;
        }
    }

    #[test]
    fn snapping_keeps_common_width_and_reports_shift() {
        let spec = WaveguideSpec::strip(0.8 * PI, 5.01, 0.1).with_chimneys(alloc::vec![
            Chimney::new(-0.93, 1.23, 0.3),
            Chimney::new(0.91, 1.27, 0.3),
        ]);
        let s = snap_spec(&spec, 0.05, 0.03).unwrap();
        assert!(s.max_snap > 0.0 && s.max_snap <= 0.025 + 1e-12);
        for c in &s.spec.chimneys {
            assert!((c.width - 0.3).abs() < 1e-12);
            assert!(((c.left() / 0.05).round() * 0.05 - c.left()).abs() < 1e-12);
        }
        assert!(matches!(snap_spec(&spec, 0.05, 1e-3), Err(FdError::SnapTooLarge { .. })));
        assert!(matches!(snap_spec(&spec, 0.1, 1.0), Err(FdError::TooCoarse { .. })));
    }

    #[test]
    fn richardson_recovers_power_law_limit() {
        let lim = C64::new(0.3, -0.2);
        let f = |h: f64| lim + C64::new(1.0, 2.0) * h * h;
        let r = richardson(f(0.1), f(0.05), f(0.025));
        assert!((r.order - 2.0).abs() < 1e-9);
        assert!((r.limit - lim).norm() < 1e-12);
    }
}
