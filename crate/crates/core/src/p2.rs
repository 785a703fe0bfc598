//! Six-node (quadratic) Lagrange triangle on straight-sided elements.
//!
//! Local order: vertices `v0, v1, v2`, then edge midpoints `m01, m12, m20`.

use crate::geometry::Mesh;
use crate::numeric::quadrature::TRI_DEGREE4;

/// Affine data of one triangle: doubled signed area and barycentric gradients.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry {
    pub jacobian: f64,
    pub grad_lambda: [[f64; 2]; 3],
    pub origin: [f64; 2],
    pub vertices: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = p;
        let jacobian = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / jacobian;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Self {
            jacobian,
            grad_lambda,
            origin: p0,
            vertices: p,
        }
    }

    pub fn of_element(mesh: &Mesh, e: usize) -> Self {
        let el = &mesh.elements[e];
        Self::new([mesh.vertices[el[0]], mesh.vertices[el[1]], mesh.vertices[el[2]]])
    }

    pub fn area(&self) -> f64 {
        0.5 * self.jacobian
    }

    /// Barycentric coordinates of a point (may fall outside for foreign points).
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let dx = x[0] - self.origin[0];
        let dy = x[1] - self.origin[1];
        let l1 = self.grad_lambda[1][0] * dx + self.grad_lambda[1][1] * dy;
        let l2 = self.grad_lambda[2][0] * dx + self.grad_lambda[2][1] * dy;
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    /// Physical gradients of the six shape functions at barycentric point `l`.
    pub fn shape_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (slot, (a, b)) in [(0usize, 1usize), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + slot] = [
                4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
                4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
            ];
        }
        out
    }
}

/// Shape function values at barycentric point `l`.
pub fn shape_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Quadratic shape functions on an edge parametrized by `t in [0, 1]`, order `[start, mid, end]`.
pub fn edge_shape_values(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
}

/// Element stiffness `int grad N_a . grad N_b` and mass `int N_a N_b`.
pub fn element_matrices(geo: &TriangleGeometry) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let mut k = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    let area = geo.area();
    for q in TRI_DEGREE4.iter() {
        let l = [1.0 - q.l1 - q.l2, q.l1, q.l2];
        let w = q.weight * area;
        let n = shape_values(l);
        let g = geo.shape_gradients(l);
        for a in 0..6 {
            for b in a..6 {
                k[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                m[a][b] += w * n[a] * n[b];
            }
        }
    }
    for a in 0..6 {
        for b in 0..a {
            k[a][b] = k[b][a];
            m[a][b] = m[b][a];
        }
    }
    (k, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        let geo = TriangleGeometry::new([[0.3, 0.1], [1.2, 0.4], [0.5, 1.1]]);
        for l in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.8, 0.1]] {
            let s: f64 = shape_values(l).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let g = geo.shape_gradients(l);
            let gx: f64 = g.iter().map(|v| v[0]).sum();
            let gy: f64 = g.iter().map(|v| v[1]).sum();
            assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13);
        }
    }

    #[test]
    fn matrices_reproduce_quadratic_energy() {
        // u = x^2 + x y is in the P2 space; int |grad u|^2 via the matrix must be exact
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let geo = TriangleGeometry::new(p);
        let nodes = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];
        let u: [f64; 6] = core::array::from_fn(|i| nodes[i][0] * nodes[i][0] + nodes[i][0] * nodes[i][1]);
        let (k, m) = element_matrices(&geo);
        let mut energy = 0.0;
        let mut mass = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                energy += u[a] * k[a][b] * u[b];
                mass += u[a] * m[a][b] * u[b];
            }
        }
        // |grad u|^2 = (2x+y)^2 + x^2 over the unit simplex = 5/12 + 1/12... evaluated exactly:
        // int (5x^2 + 4xy + y^2) = 5/12 + 4/24 + 1/12 = 2/3
        assert!((energy - 2.0 / 3.0).abs() < 1e-14);
        // int (x^2 + x y)^2 = int x^4 + 2x^3 y + x^2 y^2 = 1/30 + 2/120 + 1/180
        assert!((mass - (1.0 / 30.0 + 1.0 / 60.0 + 1.0 / 180.0)).abs() < 1e-15);
    }

    #[test]
    fn barycentric_roundtrip() {
        let geo = TriangleGeometry::new([[0.3, 0.1], [1.2, 0.4], [0.5, 1.1]]);
        let l = [0.25, 0.35, 0.4];
        let back = geo.barycentric(geo.point(l));
        for i in 0..3 {
            assert!((back[i] - l[i]).abs() < 1e-14);
        }
    }
}
