//! Transverse modes of the unit strip, axial wavenumbers and the truncated
//! Dirichlet-to-Neumann maps on the truncation sections.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_traits::Float;
use thiserror::Error;

use crate::numeric::quadrature::gauss_legendre_unit;
use crate::numeric::C64;
use crate::p2::edge_shape_values;

/// `|k^2 - (n pi)^2|` below this multiple of `pi^2` is treated as a cut-off.
pub const CUTOFF_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModalError {
    #[error("cut-off frequency: k = {k} coincides with mode {n}")]
    CutOff { k: f64, n: usize },
    #[error("wavenumber must be positive, got {k}")]
    NonPositiveWavenumber { k: f64 },
    #[error("at least one mode is required")]
    NoTerms,
    #[error("trace needs an odd number (>= 3) of increasing ordinates")]
    BadTrace,
}

/// `phi_0 = 1`, `phi_n = sqrt(2) cos(n pi y)`: orthonormal in `L^2(0, 1)`.
pub fn transverse_mode(n: usize, y: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        SQRT_2 * Float::cos(n as f64 * PI * y)
    }
}

/// Square root with the cut along the positive real axis: for
/// `xi = r e^{i gamma}` with `gamma in [0, 2 pi)` it returns `sqrt(r) e^{i gamma / 2}`,
/// so the imaginary part is never negative.
pub fn branch_sqrt(xi: C64) -> C64 {
    let r = xi.norm();
    let mut gamma = Float::atan2(xi.im, xi.re);
    if gamma < 0.0 {
        gamma += 2.0 * PI;
    }
    C64::from_polar(Float::sqrt(r), 0.5 * gamma)
}

/// `beta_n = sqrt(k^2 - (n pi)^2)` on the branch with `Im beta_n >= 0`.
pub fn axial_wavenumber(k: f64, n: usize) -> Result<C64, ModalError> {
    if !(k > 0.0) {
        return Err(ModalError::NonPositiveWavenumber { k });
    }
    let lambda = (n as f64 * PI) * (n as f64 * PI);
    let xi = k * k - lambda;
    if Float::abs(xi) < CUTOFF_TOL * PI * PI {
        return Err(ModalError::CutOff { k, n });
    }
    let beta = branch_sqrt(C64::new(xi, 0.0));
    // the real-axis evaluation is exact up to the sign conventions above
    Ok(if xi > 0.0 {
        C64::new(Float::sqrt(xi), 0.0)
    } else {
        C64::new(0.0, beta.im)
    })
}

/// Incident piston wave `w+(x) = (2k)^{-1/2} e^{ikx}`.
pub fn incident_wave(k: f64, x: f64) -> C64 {
    C64::from_polar(1.0 / Float::sqrt(2.0 * k), k * x)
}

/// Counter-propagating piston wave `w-(x) = (2k)^{-1/2} e^{-ikx}`.
pub fn reflected_wave(k: f64, x: f64) -> C64 {
    C64::from_polar(1.0 / Float::sqrt(2.0 * k), -k * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModalBasis {
    pub k: f64,
    pub n_terms: usize,
    /// `lambda_n = (n pi)^2`.
    pub lambdas: Vec<f64>,
    pub betas: Vec<C64>,
}

impl ModalBasis {
    pub fn new(k: f64, n_terms: usize) -> Result<Self, ModalError> {
        if n_terms == 0 {
            return Err(ModalError::NoTerms);
        }
        let mut lambdas = Vec::with_capacity(n_terms);
        let mut betas = Vec::with_capacity(n_terms);
        for n in 0..n_terms {
            lambdas.push((n as f64 * PI) * (n as f64 * PI));
            betas.push(axial_wavenumber(k, n)?);
        }
        Ok(Self {
            k,
            n_terms,
            lambdas,
            betas,
        })
    }

    /// DtN symbol `i beta_n`.
    pub fn symbol(&self, n: usize) -> C64 {
        C64::new(0.0, 1.0) * self.betas[n]
    }
}

/// Overlaps of the quadratic trace basis on a vertical section with the
/// transverse modes: `P[n][j] = int N_j phi_n dy`.
///
/// The section nodes are the ordinates of a column of the refined grid:
/// vertices at even positions, edge midpoints at odd positions.
#[derive(Clone, Debug)]
pub struct TraceProjector {
    ys: Vec<f64>,
    overlaps: Vec<Vec<f64>>,
    quad: (Vec<f64>, Vec<f64>),
}

impl TraceProjector {
    pub fn new(ys: &[f64], n_terms: usize) -> Result<Self, ModalError> {
        if ys.len() < 3 || ys.len() % 2 == 0 || ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ModalError::BadTrace);
        }
        let quad = gauss_legendre_unit((n_terms + 1).max(4));
        let mut overlaps = alloc::vec![alloc::vec![0.0; ys.len()]; n_terms];
        for e in 0..(ys.len() - 1) / 2 {
            let (a, b) = (ys[2 * e], ys[2 * e + 2]);
            let len = b - a;
            for (&t, &w) in quad.0.iter().zip(&quad.1) {
                let y = a + t * len;
                let s = edge_shape_values(t);
                for (n, row) in overlaps.iter_mut().enumerate() {
                    let phi = transverse_mode(n, y) * w * len;
                    for l in 0..3 {
                        row[2 * e + l] += s[l] * phi;
                    }
                }
            }
        }
        Ok(Self {
            ys: ys.to_vec(),
            overlaps,
            quad,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.overlaps.len()
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ys
    }

    pub fn overlap_row(&self, n: usize) -> &[f64] {
        &self.overlaps[n]
    }

    /// Modal coefficient `(v_h, phi_n)` of the piecewise quadratic trace `v`.
    pub fn coefficient(&self, n: usize, v: &[C64]) -> C64 {
        self.overlaps[n].iter().zip(v).map(|(&p, &x)| x * p).sum()
    }

    /// `int_0^1 |v_h|^2 dy` with the same edge quadrature.
    pub fn trace_norm_sq(&self, v: &[C64]) -> f64 {
        let mut acc = 0.0;
        for e in 0..(self.ys.len() - 1) / 2 {
            let len = self.ys[2 * e + 2] - self.ys[2 * e];
            for (&t, &w) in self.quad.0.iter().zip(&self.quad.1) {
                let s = edge_shape_values(t);
                let val = v[2 * e] * s[0] + v[2 * e + 1] * s[1] + v[2 * e + 2] * s[2];
                acc += w * len * val.norm_sqr();
            }
        }
        acc
    }
}

/// Galerkin matrix `G[i][j] = sum_n i beta_n P[n][i] P[n][j]` of the DtN form
/// `<T u, v>` (row-major, complex symmetric).
pub fn dtn_galerkin(basis: &ModalBasis, trace: &TraceProjector) -> Vec<C64> {
    let m = trace.len();
    let mut g = alloc::vec![C64::new(0.0, 0.0); m * m];
    for n in 0..basis.n_terms.min(trace.n_terms()) {
        let sym = basis.symbol(n);
        let p = trace.overlap_row(n);
        for i in 0..m {
            let pi = sym * p[i];
            for j in 0..m {
                g[i * m + j] += pi * p[j];
            }
        }
    }
    g
}

/// Nodal realization of the DtN map: `(D v)_i = sum_n i beta_n (v, phi_n) phi_n(y_i)`.
pub fn dtn_matrix(basis: &ModalBasis, trace: &TraceProjector) -> Vec<C64> {
    let m = trace.len();
    let mut d = alloc::vec![C64::new(0.0, 0.0); m * m];
    for n in 0..basis.n_terms.min(trace.n_terms()) {
        let sym = basis.symbol(n);
        let p = trace.overlap_row(n);
        for (i, &y) in trace.ordinates().iter().enumerate() {
            let phi = sym * transverse_mode(n, y);
            for j in 0..m {
                d[i * m + j] += phi * p[j];
            }
        }
    }
    d
}

/// Dense row-major product helper for the square matrices above.
pub fn apply_dense(a: &[C64], v: &[C64]) -> Vec<C64> {
    let m = v.len();
    (0..m)
        .map(|i| a[i * m..(i + 1) * m].iter().zip(v).map(|(&x, &y)| x * y).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(cells: usize) -> Vec<f64> {
        (0..=2 * cells).map(|i| i as f64 / (2 * cells) as f64).collect()
    }

    #[test]
    fn mode_values() {
        assert_eq!(transverse_mode(0, 0.37), 1.0);
        assert_eq!(transverse_mode(1, 0.0), SQRT_2);
        assert!((transverse_mode(2, 0.5) + SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn wavenumbers_on_branch() {
        let k = 0.8 * PI;
        assert_eq!(axial_wavenumber(k, 0).unwrap(), C64::new(k, 0.0));
        let b1 = axial_wavenumber(k, 1).unwrap();
        assert!(b1.re == 0.0 && (b1.im - 0.6 * PI).abs() < 1e-14);
        let b2 = axial_wavenumber(k, 2).unwrap();
        assert!((b2.im - PI * 3.36f64.sqrt()).abs() < 1e-13);
        assert!(matches!(axial_wavenumber(PI, 1), Err(ModalError::CutOff { n: 1, .. })));
    }

    #[test]
    fn branch_sqrt_matches_definition() {
        let z = branch_sqrt(C64::new(-4.0, 0.0));
        assert!((z - C64::new(0.0, 2.0)).norm() < 1e-15);
        let z = branch_sqrt(C64::new(0.0, -1.0));
        // gamma = 3 pi / 2 -> e^{3 i pi / 4}
        assert!((z - C64::from_polar(1.0, 0.75 * PI)).norm() < 1e-15);
    }

    #[test]
    fn piston_only_map_multiplies_constants_by_ik() {
        let k = 0.8 * PI;
        let basis = ModalBasis::new(k, 1).unwrap();
        let trace = TraceProjector::new(&uniform(5), 1).unwrap();
        let d = dtn_matrix(&basis, &trace);
        let c = C64::new(0.3, -1.2);
        let out = apply_dense(&d, &alloc::vec![c; trace.len()]);
        for v in out {
            assert!((v - C64::new(0.0, k) * c).norm() < 1e-14);
        }
    }

    #[test]
    fn dtn_form_sign_on_evanescent_traces() {
        let basis = ModalBasis::new(0.8 * PI, 20).unwrap();
        let trace = TraceProjector::new(&uniform(8), 20).unwrap();
        let g = dtn_galerkin(&basis, &trace);
        // mean-free trace
        let v: Vec<C64> = trace
            .ordinates()
            .iter()
            .map(|&y| C64::new(Float::cos(PI * y) + 0.3 * Float::cos(3.0 * PI * y), 0.2 * y * y - 0.2 / 3.0))
            .collect();
        let c0 = trace.coefficient(0, &v);
        let v: Vec<C64> = v.iter().map(|&x| x - c0).collect();
        let gv = apply_dense(&g, &v);
        let form: C64 = gv.iter().zip(&v).map(|(&a, &b)| a * b.conj()).sum();
        assert!(-form.re >= 0.0);
    }

    proptest! {
        #[test]
        fn imaginary_part_never_negative(k in 1e-3f64..(PI - 1e-3), n in 0usize..=50) {
            let b = axial_wavenumber(k, n).unwrap();
            prop_assert!(b.im >= 0.0);
            if n == 0 { prop_assert_eq!(b, C64::new(k, 0.0)); }
            else { prop_assert!(b.re == 0.0 && b.im > 0.0); }
        }
    }
}
