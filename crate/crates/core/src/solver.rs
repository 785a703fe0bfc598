//! Assembly and direct solution of the truncated scattering problem for the
//! total field, with sound-hard walls and modal transparent conditions on
//! both truncation sections.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{BoundaryTag, Mesh};
use crate::modal::{dtn_galerkin, incident_wave, ModalBasis, ModalError, TraceProjector};
use crate::numeric::band::{BandLu, FactorError};
use crate::numeric::sparse::CsrMatrix;
use crate::numeric::{norm2, C64};
use crate::p2::{element_matrices, TriangleGeometry};

/// Relative residual every accepted solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

const MAX_REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolveError {
    #[error("solve failed: near-singular (pivot {pivot:e} at column {column}, scale {scale:e})")]
    NearSingular { column: usize, pivot: f64, scale: f64 },
    #[error("solve failed: {0}")]
    Factor(FactorError),
    #[error("solve failed: relative residual {residual:e} above {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("wavenumber mismatch: mesh built for k = {mesh_k}, basis has k = {basis_k}")]
    WavenumberMismatch { mesh_k: f64, basis_k: f64 },
    #[error(transparent)]
    Modal(#[from] ModalError),
}

impl From<FactorError> for SolveError {
    fn from(e: FactorError) -> Self {
        match e {
            FactorError::NearSingular { column, pivot, scale } => SolveError::NearSingular { column, pivot, scale },
            other => SolveError::Factor(other),
        }
    }
}

/// `(stiffness - k^2 mass - DtN couplings) u = f`, one unknown per mesh node.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix<C64>,
    pub rhs: Vec<C64>,
    /// Mesh node of each unknown (the identity for this discretization).
    pub dof_nodes: Vec<usize>,
    pub k: f64,
}

/// Real stiffness and mass matrices of a mesh (shared by the eigen solver).
pub fn stiffness_and_mass(mesh: &Mesh) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    let n = mesh.n_nodes();
    let mut kt = Vec::with_capacity(36 * mesh.n_elements());
    let mut mt = Vec::with_capacity(36 * mesh.n_elements());
    for (e, el) in mesh.elements.iter().enumerate() {
        let geo = TriangleGeometry::of_element(mesh, e);
        let (ke, me) = element_matrices(&geo);
        for a in 0..6 {
            for b in 0..6 {
                kt.push((el[a], el[b], ke[a][b]));
                mt.push((el[a], el[b], me[a][b]));
            }
        }
    }
    (CsrMatrix::from_triplets(n, n, kt), CsrMatrix::from_triplets(n, n, mt))
}

/// Trace projector on one truncation section of the mesh.
pub fn section_projector(mesh: &Mesh, tag: BoundaryTag, n_terms: usize) -> Result<(Vec<usize>, TraceProjector), ModalError> {
    let nodes = mesh.sigma_nodes(tag);
    let ys: Vec<f64> = nodes.iter().map(|&i| mesh.vertices[i][1]).collect();
    Ok((nodes, TraceProjector::new(&ys, n_terms)?))
}

/// Assembles the Helmholtz system on `mesh` for the wavenumber of `basis`.
pub fn assemble(mesh: &Mesh, basis: &ModalBasis) -> Result<AssembledSystem, SolveError> {
    let n = mesh.n_nodes();
    let k = basis.k;
    let k2 = k * k;
    let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(36 * mesh.n_elements() + 2 * 64 * 64);
    for (e, el) in mesh.elements.iter().enumerate() {
        let geo = TriangleGeometry::of_element(mesh, e);
        let (ke, me) = element_matrices(&geo);
        for a in 0..6 {
            for b in 0..6 {
                trip.push((el[a], el[b], C64::new(ke[a][b] - k2 * me[a][b], 0.0)));
            }
        }
    }
    let mut rhs = alloc::vec![C64::new(0.0, 0.0); n];
    for tag in [BoundaryTag::SigmaMinus, BoundaryTag::SigmaPlus] {
        let (nodes, trace) = section_projector(mesh, tag, basis.n_terms)?;
        let g = dtn_galerkin(basis, &trace);
        let m = nodes.len();
        for i in 0..m {
            for j in 0..m {
                trip.push((nodes[i], nodes[j], -g[i * m + j]));
            }
        }
        if tag == BoundaryTag::SigmaMinus {
            // d_nu w+ - T w+ = -2ik w+(-L) on the left section, zero on the right
            let amp = C64::new(0.0, -2.0 * k) * incident_wave(k, mesh.x_min());
            for (i, &node) in nodes.iter().enumerate() {
                rhs[node] += amp * trace.overlap_row(0)[i];
            }
        }
    }
    Ok(AssembledSystem {
        matrix: CsrMatrix::from_triplets(n, n, trip),
        rhs,
        dof_nodes: (0..n).collect(),
        k,
    })
}

/// Nodal complex field on a mesh.
#[derive(Clone, Debug)]
pub struct ComplexField<'m> {
    pub mesh: &'m Mesh,
    pub values: Vec<C64>,
}

impl<'m> ComplexField<'m> {
    pub fn new(mesh: &'m Mesh, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), mesh.n_nodes(), "field length must match the node count");
        Self { mesh, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Values of the strip nodes on the vertex line `x`, bottom to top.
    pub fn column(&self, x: f64) -> Option<(Vec<f64>, Vec<C64>)> {
        let nodes = self.mesh.strip_column_at(x)?;
        Some((
            nodes.iter().map(|&i| self.mesh.vertices[i][1]).collect(),
            nodes.iter().map(|&i| self.values[i]).collect(),
        ))
    }
}

/// Outcome of a solve: the field plus the diagnostics of the linear algebra.
#[derive(Clone, Debug)]
pub struct Solution<'m> {
    pub field: ComplexField<'m>,
    pub residual: f64,
    pub min_pivot: f64,
    pub refinement_steps: usize,
}

fn relative_residual(a: &CsrMatrix<C64>, x: &[C64], b: &[C64]) -> (Vec<C64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(&p, &q)| p - q).collect();
    let nb = norm2(b);
    let rel = if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) };
    (r, rel)
}

/// Factors and solves; applies iterative refinement until the residual target is met.
pub fn solve_system(system: &AssembledSystem) -> Result<(Vec<C64>, f64, f64, usize), SolveError> {
    let lu = BandLu::factorize(&system.matrix)?;
    let mut x = lu.solve(&system.rhs);
    let (mut r, mut rel) = relative_residual(&system.matrix, &x, &system.rhs);
    let mut steps = 0;
    while rel > RESIDUAL_TOL && steps < MAX_REFINEMENT_STEPS {
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        steps += 1;
        (r, rel) = relative_residual(&system.matrix, &x, &system.rhs);
    }
    if !(rel <= RESIDUAL_TOL) {
        return Err(SolveError::Residual {
            residual: rel,
            tol: RESIDUAL_TOL,
        });
    }
    Ok((x, rel, lu.min_pivot(), steps))
}

/// Solves an assembled system for the total field on `mesh`.
pub fn solve<'m>(mesh: &'m Mesh, system: &AssembledSystem) -> Result<Solution<'m>, SolveError> {
    let (x, residual, min_pivot, refinement_steps) = solve_system(system)?;
    Ok(Solution {
        field: ComplexField::new(mesh, x),
        residual,
        min_pivot,
        refinement_steps,
    })
}

/// Assemble + solve in one call.
pub fn solve_total_field<'m>(mesh: &'m Mesh, basis: &ModalBasis) -> Result<Solution<'m>, SolveError> {
    let system = assemble(mesh, basis)?;
    solve(mesh, &system)
}

/// `u_s = u - w+`, with the incident wave evaluated at every node (chimneys included).
pub fn scattered_field<'m>(total: &ComplexField<'m>, k: f64) -> ComplexField<'m> {
    let values = total
        .values
        .iter()
        .zip(&total.mesh.vertices)
        .map(|(&u, p)| u - incident_wave(k, p[0]))
        .collect();
    ComplexField::new(total.mesh, values)
}

/// Incident wave sampled at the mesh nodes.
pub fn incident_field(mesh: &Mesh, k: f64) -> ComplexField<'_> {
    ComplexField::new(mesh, mesh.vertices.iter().map(|p| incident_wave(k, p[0])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, Chimney, WaveguideSpec};
    use core::f64::consts::PI;

    #[test]
    fn rhs_lives_on_left_section_only() {
        let spec = WaveguideSpec::strip(0.8 * PI, 5.0, 0.25);
        let mesh = generate_mesh(&spec).unwrap();
        let basis = ModalBasis::new(spec.k, 20).unwrap();
        let sys = assemble(&mesh, &basis).unwrap();
        let left = mesh.sigma_nodes(BoundaryTag::SigmaMinus);
        for (i, v) in sys.rhs.iter().enumerate() {
            if !left.contains(&i) {
                assert_eq!(*v, C64::new(0.0, 0.0));
            }
        }
        // total load equals -2ik w+(-L) times the section length
        let total: C64 = sys.rhs.iter().sum();
        let expect = C64::new(0.0, -2.0 * spec.k) * incident_wave(spec.k, -5.0);
        assert!((total - expect).norm() < 1e-13);
    }

    #[test]
    fn system_is_complex_symmetric() {
        let spec = WaveguideSpec::strip(0.8 * PI, 5.0, 0.25)
            .with_chimneys(alloc::vec![Chimney::new(0.0, 1.1, 0.3)]);
        let mesh = generate_mesh(&spec).unwrap();
        let basis = ModalBasis::new(spec.k, 20).unwrap();
        let sys = assemble(&mesh, &basis).unwrap();
        assert!(sys.matrix.asymmetry() <= 1e-14 * sys.matrix.max_abs());
    }

    #[test]
    fn pure_strip_reproduces_incident_wave() {
        let spec = WaveguideSpec::strip(0.8 * PI, 2.0, 0.1);
        let mesh = generate_mesh(&spec).unwrap();
        let basis = ModalBasis::new(spec.k, 20).unwrap();
        let sol = solve_total_field(&mesh, &basis).unwrap();
        assert!(sol.residual <= RESIDUAL_TOL);
        let us = scattered_field(&sol.field, spec.k);
        let worst = us.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(worst < 1e-4, "max |u_s| = {worst}");
    }
}
