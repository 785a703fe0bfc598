//! Spec-to-coefficients convenience: mesh, assemble, solve, extract.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{generate_mesh_with, Mesh, MeshError, MeshOptions, WaveguideSpec};
use crate::modal::{ModalBasis, ModalError};
use crate::numeric::C64;
use crate::scattering::{extract, ExtractError, ScatteringResult};
use crate::solver::{assemble, solve, ComplexField, SolveError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

/// Everything produced by one scattering solve.
#[derive(Clone, Debug)]
pub struct SolvedSpec {
    pub spec: WaveguideSpec,
    pub mesh: Mesh,
    pub basis: ModalBasis,
    pub values: Vec<C64>,
    pub result: ScatteringResult,
    pub residual: f64,
}

impl SolvedSpec {
    pub fn field(&self) -> ComplexField<'_> {
        ComplexField::new(&self.mesh, self.values.clone())
    }
}

pub fn solve_spec(spec: &WaveguideSpec, options: &MeshOptions) -> Result<SolvedSpec, PipelineError> {
    let mesh = generate_mesh_with(spec, options)?;
    let basis = ModalBasis::new(spec.k, spec.dtn_terms)?;
    let system = assemble(&mesh, &basis)?;
    let (values, residual, result) = {
        let sol = solve(&mesh, &system)?;
        let result = extract(&sol.field, &basis)?;
        (sol.field.values, sol.residual, result)
    };
    Ok(SolvedSpec {
        spec: spec.clone(),
        mesh,
        basis,
        values,
        result,
        residual,
    })
}
