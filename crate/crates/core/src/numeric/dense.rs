//! Small dense kernels: 3x3 algebra and symmetric eigensolvers for
//! Rayleigh-Ritz blocks.

use alloc::vec::Vec;

use num_traits::Float;

pub type Mat3 = [[f64; 3]; 3];

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse by the adjugate; `None` when the determinant vanishes.
pub fn inverse3(m: &Mat3) -> Option<Mat3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // cofactor of (j, i)
            let r = [(j + 1) % 3, (j + 2) % 3];
            let c = [(i + 1) % 3, (i + 2) % 3];
            inv[i][j] = (m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]) / d;
        }
    }
    Some(inv)
}

pub fn mat3_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Row-major square matrix of order `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// Cyclic Jacobi for a symmetric matrix. Returns eigenvalues ascending and
/// the matching eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.n;
    let mut m = a.clone();
    let mut v = DenseMatrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += m.at(i, i) * m.at(i, i);
            for j in 0..n {
                if i != j {
                    off += m.at(i, j) * m.at(i, j);
                }
            }
        }
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + Float::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / Float::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m.at(k, p);
                    let mkq = m.at(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.at(p, k);
                    let mqk = m.at(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.at(i, i).partial_cmp(&m.at(j, j)).unwrap_or(core::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m.at(i, i)).collect();
    let mut vecs = DenseMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs.set(k, new, v.at(k, old));
        }
    }
    (vals, vecs)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.n;
    let mut l = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut d = a.at(j, j);
        for k in 0..j {
            d -= l.at(j, k) * l.at(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = Float::sqrt(d);
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

/// Solves `K y = mu M y` for symmetric `K` and SPD `M`, eigenvalues ascending,
/// eigenvectors `M`-orthonormal (columns).
pub fn generalized_symmetric_eigen(k: &DenseMatrix, m: &DenseMatrix) -> Option<(Vec<f64>, DenseMatrix)> {
    let n = k.n;
    let l = cholesky(m)?;
    // C = L^{-1} K L^{-T}
    let mut tmp = DenseMatrix::zeros(n);
    for col in 0..n {
        // forward solve L z = K[:, col]
        for i in 0..n {
            let mut s = k.at(i, col);
            for r in 0..i {
                s -= l.at(i, r) * tmp.at(r, col);
            }
            tmp.set(i, col, s / l.at(i, i));
        }
    }
    let mut c = DenseMatrix::zeros(n);
    for row in 0..n {
        for i in 0..n {
            let mut s = tmp.at(row, i);
            for r in 0..i {
                s -= l.at(i, r) * c.at(row, r);
            }
            c.set(row, i, s / l.at(i, i));
        }
    }
    // symmetrize against rounding
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (c.at(i, j) + c.at(j, i));
            c.set(i, j, avg);
            c.set(j, i, avg);
        }
    }
    let (vals, y) = symmetric_eigen(&c);
    // back-transform x = L^{-T} y
    let mut x = DenseMatrix::zeros(n);
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s = y.at(i, col);
            for r in i + 1..n {
                s -= l.at(r, i) * x.at(r, col);
            }
            x.set(i, col, s / l.at(i, i));
        }
    }
    Some((vals, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_cloaking_matrix() {
        let m = [[0.0, 1.0, 0.0], [1.0, 0.0, -1.0], [1.0, 1.0, 1.0]];
        assert_eq!(det3(&m), -2.0);
        let inv = inverse3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[i][k] * inv[k][j];
                }
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jacobi_diagonalizes() {
        let mut a = DenseMatrix::zeros(3);
        let vals = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let (ev, _) = symmetric_eigen(&a);
        let s2 = 2.0f64.sqrt();
        let expect = [2.0 - s2, 2.0, 2.0 + s2];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - x).abs() < 1e-13);
        }
    }

    #[test]
    fn generalized_problem_matches_scaled_diagonal() {
        let mut k = DenseMatrix::zeros(2);
        let mut m = DenseMatrix::zeros(2);
        k.set(0, 0, 6.0);
        k.set(1, 1, 2.0);
        m.set(0, 0, 2.0);
        m.set(1, 1, 1.0);
        let (ev, x) = generalized_symmetric_eigen(&k, &m).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        // M-normalized
        let n0 = x.at(0, 0) * x.at(0, 0) * 2.0 + x.at(1, 0) * x.at(1, 0);
        assert!((n0 - 1.0).abs() < 1e-14);
    }
}
