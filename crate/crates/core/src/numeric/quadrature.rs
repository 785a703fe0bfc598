use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes come from Newton iteration on the Legendre recurrence, which is
/// accurate to a few ulps for the orders used here (well below 100).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = Float::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if Float::abs(dx) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    // ascending order
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|&t| 0.5 * t).collect(),
    )
}

/// A point of a triangle rule: barycentric `(l1, l2)` and weight (weights sum to 1).
#[derive(Clone, Copy, Debug)]
pub struct TriPoint {
    pub l1: f64,
    pub l2: f64,
    pub weight: f64,
}

const A4: f64 = 0.445_948_490_915_964_886_32;
const B4: f64 = 0.108_103_018_168_070_227_36;
const WA4: f64 = 0.223_381_589_678_011_465_70;
const C4: f64 = 0.091_576_213_509_770_743_46;
const D4: f64 = 0.816_847_572_980_458_513_08;
const WC4: f64 = 0.109_951_743_655_321_867_64;

/// Six-point degree-4 symmetric rule (exact for products of quadratics).
pub const TRI_DEGREE4: [TriPoint; 6] = [
    TriPoint { l1: A4, l2: A4, weight: WA4 },
    TriPoint { l1: B4, l2: A4, weight: WA4 },
    TriPoint { l1: A4, l2: B4, weight: WA4 },
    TriPoint { l1: C4, l2: C4, weight: WC4 },
    TriPoint { l1: D4, l2: C4, weight: WC4 },
    TriPoint { l1: C4, l2: D4, weight: WC4 },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre_unit(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(&t, &wt)| wt * t.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn triangle_rule_is_degree_four() {
        // integral over the reference triangle of l1^a l2^b = a! b! / (a+b+2)!
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let approx: f64 = TRI_DEGREE4
                    .iter()
                    .map(|p| 0.5 * p.weight * p.l1.powi(a as i32) * p.l2.powi(b as i32))
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((approx - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }
}
