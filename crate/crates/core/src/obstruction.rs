//! Lower bound on the wavenumbers at which `T = 1` is impossible, from the
//! first eigenvalue of the Neumann Laplacian on a bounded piece of the guide
//! restricted to functions with zero mean on both end sections.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use thiserror::Error;

use crate::geometry::{mesh_region, BoundaryTag, Chimney, Mesh, MeshError, MeshOptions, WaveguideSpec};
use crate::modal::{ModalError, TraceProjector};
use crate::numeric::band::{BandLu, FactorError};
use crate::numeric::dense::{generalized_symmetric_eigen, DenseMatrix};
use crate::numeric::sparse::CsrMatrix;
use crate::solver::stiffness_and_mass;

/// First nonzero transverse eigenvalue of the unit strip.
pub const LAMBDA1: f64 = PI * PI;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ObstructionError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("end section missing from the mesh")]
    UntaggedEnds,
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("eigen-iteration did not converge in {iterations} steps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("Rayleigh-Ritz block lost rank")]
    Breakdown,
    #[error("truncation interval [{x_left}, {x_right}] does not contain every chimney")]
    BadTruncation { x_left: f64, x_right: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    pub block_size: usize,
    pub max_iter: usize,
    /// Relative residual `||K z - mu M z - C^T l|| / (mu ||M z||)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            block_size: 6,
            max_iter: 200,
            tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

/// Stiffness/mass pair with the two end-mean constraints.
#[derive(Clone, Debug)]
pub struct ConstrainedEigenproblem {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    /// Rows of the end-mean functionals (`int_{end} u dy`), left then right.
    pub constraints: [Vec<(usize, f64)>; 2],
    /// Saddle matrix with the left multiplier first and the right one last.
    pub saddle: CsrMatrix<f64>,
}

impl ConstrainedEigenproblem {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn constraint_values(&self, z: &[f64]) -> [f64; 2] {
        [
            self.constraints[0].iter().map(|&(i, c)| c * z[i]).sum(),
            self.constraints[1].iter().map(|&(i, c)| c * z[i]).sum(),
        ]
    }
}

/// Mesh of `[x_left, x_right] x [0, 1]` plus chimneys, ends tagged as sections.
pub fn bounded_region_mesh(
    x_left: f64,
    x_right: f64,
    chimneys: &[Chimney],
    target_h: f64,
    min_cells_across: usize,
) -> Result<Mesh, ObstructionError> {
    if chimneys
        .iter()
        .any(|c| !(c.left() > x_left && c.right() < x_right))
    {
        return Err(ObstructionError::BadTruncation { x_left, x_right });
    }
    Ok(mesh_region(
        x_left,
        x_right,
        chimneys,
        target_h,
        min_cells_across,
        &MeshOptions::default(),
    )?)
}

pub fn assemble_constrained_eigenproblem(mesh: &Mesh) -> Result<ConstrainedEigenproblem, ObstructionError> {
    let n = mesh.n_nodes();
    let (stiffness, mass) = stiffness_and_mass(mesh);
    let mut constraints: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
    for (slot, tag) in [BoundaryTag::SigmaMinus, BoundaryTag::SigmaPlus].into_iter().enumerate() {
        if !mesh.boundary_edges.iter().any(|e| e.tag == tag) {
            return Err(ObstructionError::UntaggedEnds);
        }
        let nodes = mesh.sigma_nodes(tag);
        let ys: Vec<f64> = nodes.iter().map(|&i| mesh.vertices[i][1]).collect();
        let trace = TraceProjector::new(&ys, 1)?;
        constraints[slot] = nodes
            .iter()
            .zip(trace.overlap_row(0))
            .map(|(&i, &c)| (i, c))
            .collect();
    }
    // unknowns: [left multiplier, u_0 .. u_{n-1}, right multiplier]
    let mut trip = Vec::with_capacity(stiffness.nnz() + 4 * constraints[0].len());
    for r in 0..n {
        let (cols, vals) = stiffness.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((r + 1, c + 1, v));
        }
    }
    for (slot, row) in constraints.iter().enumerate() {
        let m = if slot == 0 { 0 } else { n + 1 };
        for &(i, c) in row {
            trip.push((m, i + 1, c));
            trip.push((i + 1, m, c));
        }
    }
    let saddle = CsrMatrix::from_triplets(n + 2, n + 2, trip);
    Ok(ConstrainedEigenproblem {
        stiffness,
        mass,
        constraints,
        saddle,
    })
}

/// Smallest eigenpair with its residual diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// `M`-normalized eigenvector.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub rayleigh_quotient: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
}

/// Residual of `K z = mu M z + C^T l` minimized over the two multipliers.
fn constrained_residual(problem: &ConstrainedEigenproblem, z: &[f64], mu: f64) -> f64 {
    let kz = problem.stiffness.mul_vec(z);
    let mz = problem.mass.mul_vec(z);
    let mut r: Vec<f64> = kz.iter().zip(&mz).map(|(a, b)| a - mu * b).collect();
    let n = z.len();
    let mut c = [alloc::vec![0.0; n], alloc::vec![0.0; n]];
    for (slot, row) in problem.constraints.iter().enumerate() {
        for &(i, v) in row {
            c[slot][i] = v;
        }
    }
    // the two rows have disjoint support, so the normal equations are diagonal
    for cs in &c {
        let cc = dot(cs, cs);
        if cc > 0.0 {
            let l = dot(cs, &r) / cc;
            for (ri, ci) in r.iter_mut().zip(cs) {
                *ri -= l * ci;
            }
        }
    }
    let scale = Float::abs(mu) * Float::sqrt(dot(&mz, &mz));
    Float::sqrt(dot(&r, &r)) / scale.max(f64::MIN_POSITIVE)
}

/// Block inverse iteration on the saddle system (shift at zero) with
/// Rayleigh-Ritz on the block; iterates stay in the constrained subspace.
pub fn smallest_eigenvalue(
    problem: &ConstrainedEigenproblem,
    options: &EigenOptions,
) -> Result<Eigenpair, ObstructionError> {
    let n = problem.dim();
    let b = options.block_size.max(1).min(n.saturating_sub(2).max(1));
    let lu = BandLu::factorize(&problem.saddle)?;
    let mut seed = options.seed;
    let mut block: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| lcg(&mut seed)).collect())
        .collect();
    let mut last_residual = f64::INFINITY;
    for it in 1..=options.max_iter {
        // X = S^{-1} [M y; 0]
        let mut x: Vec<Vec<f64>> = Vec::with_capacity(b);
        for y in &block {
            let my = problem.mass.mul_vec(y);
            let mut rhs = alloc::vec![0.0; n + 2];
            rhs[1..=n].copy_from_slice(&my);
            lu.solve_in_place(&mut rhs);
            x.push(rhs[1..=n].to_vec());
        }
        let kx: Vec<Vec<f64>> = x.iter().map(|v| problem.stiffness.mul_vec(v)).collect();
        let mx: Vec<Vec<f64>> = x.iter().map(|v| problem.mass.mul_vec(v)).collect();
        let mut kr = DenseMatrix::zeros(b);
        let mut mr = DenseMatrix::zeros(b);
        for i in 0..b {
            for j in 0..b {
                kr.set(i, j, 0.5 * (dot(&x[i], &kx[j]) + dot(&x[j], &kx[i])));
                mr.set(i, j, 0.5 * (dot(&x[i], &mx[j]) + dot(&x[j], &mx[i])));
            }
        }
        let (vals, vecs) = generalized_symmetric_eigen(&kr, &mr).ok_or(ObstructionError::Breakdown)?;
        block = (0..b)
            .map(|col| {
                let mut v = alloc::vec![0.0; n];
                for (r, xr) in x.iter().enumerate() {
                    let c = vecs.at(r, col);
                    for (vi, xi) in v.iter_mut().zip(xr) {
                        *vi += c * xi;
                    }
                }
                v
            })
            .collect();
        let mu = vals[0];
        let residual = constrained_residual(problem, &block[0], mu);
        last_residual = residual;
        if residual <= options.tol {
            let z = block.swap_remove(0);
            let kz = problem.stiffness.mul_vec(&z);
            let mz = problem.mass.mul_vec(&z);
            let rq = dot(&z, &kz) / dot(&z, &mz);
            return Ok(Eigenpair {
                value: mu,
                vector: z,
                residual,
                rayleigh_quotient: rq,
                iterations: it,
            });
        }
    }
    Err(ObstructionError::NotConverged {
        iterations: options.max_iter,
        residual: last_residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionResult {
    pub mu1: f64,
    pub lambda1: f64,
    pub k_star_bound: f64,
    pub eigenvector: Vec<f64>,
    /// `max_m (pi / (2 h_m))^2`, when chimneys are present.
    pub minmax_upper: Option<f64>,
    pub x_left: f64,
    pub x_right: f64,
    pub mesh_h: f64,
    pub n_nodes: usize,
    pub residual: f64,
    pub rayleigh_quotient: f64,
    /// End-section means of the eigenvector (should vanish).
    pub end_means: [f64; 2],
}

/// `min(sqrt(mu1), pi)`.
pub fn k_star_bound(mu1: f64) -> f64 {
    Float::sqrt(mu1).min(PI)
}

pub fn minmax_upper(chimneys: &[Chimney]) -> Option<f64> {
    chimneys
        .iter()
        .map(|c| {
            let v = PI / (2.0 * c.height);
            v * v
        })
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

/// Default truncation: chimney hull widened by one strip height on each side.
pub fn default_truncation(chimneys: &[Chimney]) -> (f64, f64) {
    let left = chimneys.iter().map(|c| c.left()).fold(f64::INFINITY, f64::min);
    let right = chimneys.iter().map(|c| c.right()).fold(f64::NEG_INFINITY, f64::max);
    if chimneys.is_empty() {
        (-1.0, 1.0)
    } else {
        (left - 1.0, right + 1.0)
    }
}

/// Full pipeline on the chimneys of `spec` between `x_left` and `x_right`.
pub fn obstruction_bound(
    spec: &WaveguideSpec,
    x_left: f64,
    x_right: f64,
    options: &EigenOptions,
) -> Result<ObstructionResult, ObstructionError> {
    let mesh = bounded_region_mesh(
        x_left,
        x_right,
        &spec.chimneys,
        spec.mesh_target_h,
        spec.min_cells_across_chimney,
    )?;
    let problem = assemble_constrained_eigenproblem(&mesh)?;
    let pair = smallest_eigenvalue(&problem, options)?;
    let end_means = problem.constraint_values(&pair.vector);
    Ok(ObstructionResult {
        mu1: pair.value,
        lambda1: LAMBDA1,
        k_star_bound: k_star_bound(pair.value),
        minmax_upper: minmax_upper(&spec.chimneys),
        x_left,
        x_right,
        mesh_h: mesh.h_max(),
        n_nodes: mesh.n_nodes(),
        residual: pair.residual,
        rayleigh_quotient: pair.rayleigh_quotient,
        end_means,
        eigenvector: pair.vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip_segment(len: f64, h: f64) -> ObstructionResult {
        let spec = WaveguideSpec::strip(0.8 * PI, 10.0, h);
        obstruction_bound(&spec, -0.5 * len, 0.5 * len, &EigenOptions::default()).unwrap()
    }

    #[test]
    fn long_segment_is_limited_by_its_length() {
        let r = strip_segment(2.0, 0.1);
        assert!((r.mu1 - PI * PI / 4.0).abs() < 1e-3 * PI * PI / 4.0);
        assert!(r.end_means.iter().all(|m| m.abs() < 1e-10));
        assert!((r.k_star_bound - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn short_segment_is_limited_by_the_cross_section() {
        let r = strip_segment(0.5, 0.1);
        assert!((r.mu1 - PI * PI).abs() < 1e-3 * PI * PI);
    }

    #[test]
    fn bound_is_capped_by_pi() {
        assert_eq!(k_star_bound(2.0 * PI * PI), PI);
        assert!((k_star_bound(PI * PI / 4.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn missing_chimney_is_rejected() {
        let spec = WaveguideSpec::strip(0.8 * PI, 10.0, 0.2)
            .with_chimneys(alloc::vec![Chimney::new(3.0, 1.0, 0.2)]);
        assert!(matches!(
            obstruction_bound(&spec, -1.0, 1.0, &EigenOptions::default()),
            Err(ObstructionError::BadTruncation { .. })
        ));
    }
}
