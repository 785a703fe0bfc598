//! Seeded generators of admissible waveguide specs for randomized checks.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use waveguide_core::geometry::{nearest_resonance, validate_spec, Chimney, WaveguideSpec};

/// Smallest admitted distance between a height and a resonant height.
pub const RESONANCE_CLEARANCE: f64 = 0.1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn clear_height<R: Rng>(rng: &mut R, k: f64, lo: f64, hi: f64, step: Option<f64>) -> f64 {
    loop {
        let mut h = rng.gen_range(lo..hi);
        if let Some(s) = step {
            h = (h / s).round() * s;
        }
        if nearest_resonance(k, h).0 > RESONANCE_CLEARANCE {
            return h;
        }
    }
}

/// `k` in `(0.3 pi, 0.9 pi)`, one to three chimneys of a common width in
/// `[0.1, 0.3]`, heights in `[0.3, 1.8]` away from resonance, and `L` one
/// wavelength plus a little beyond the outermost chimney.
pub fn random_spec<R: Rng>(rng: &mut R, mesh_target_h: f64) -> WaveguideSpec {
    let k = PI * rng.gen_range(0.3..0.9);
    let n = rng.gen_range(1..=3);
    let width = rng.gen_range(0.1..0.3);
    let mut x = rng.gen_range(-1.5..-0.5);
    let mut chimneys = Vec::with_capacity(n);
    for _ in 0..n {
        chimneys.push(Chimney::new(x, clear_height(rng, k, 0.3, 1.8, None), width));
        x += width + rng.gen_range(0.3..1.0);
    }
    let reach = chimneys.iter().map(|c| c.x_center.abs() + c.width).fold(0.0, f64::max);
    let spec = WaveguideSpec::strip(k, reach + 2.0 * PI / k + 0.5, mesh_target_h).with_chimneys(chimneys);
    assert!(validate_spec(&spec).is_ok(), "generator produced an invalid spec");
    spec
}

/// Like [`random_spec`] but with every length on the lattice `grid`, widths
/// of four to six lattice cells, so finite differences need no snapping.
pub fn random_lattice_spec<R: Rng>(rng: &mut R, grid: f64, mesh_target_h: f64) -> WaveguideSpec {
    let k = PI * rng.gen_range(0.3..0.9);
    let n = rng.gen_range(1..=3);
    let width = grid * rng.gen_range(4..=6) as f64;
    let mut left = grid * (rng.gen_range(-1.5..-0.5) / grid).round();
    let mut chimneys = Vec::with_capacity(n);
    for _ in 0..n {
        let h = clear_height(rng, k, 0.3, 1.8, Some(grid));
        chimneys.push(Chimney::new(left + 0.5 * width, h, width));
        left += width + grid * rng.gen_range(6..=20) as f64;
    }
    let reach = chimneys.iter().map(|c| c.x_center.abs() + c.width).fold(0.0, f64::max);
    let half = grid * ((reach + 2.0 * PI / k + 0.5) / grid).ceil();
    let spec = WaveguideSpec::strip(k, half, mesh_target_h).with_chimneys(chimneys);
    assert!(validate_spec(&spec).is_ok(), "generator produced an invalid spec");
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_valid() {
        let a: Vec<_> = (0..20).map({
            let mut r = rng(3);
            move |_| random_spec(&mut r, 0.1)
        }).collect();
        let b: Vec<_> = (0..20).map({
            let mut r = rng(3);
            move |_| random_spec(&mut r, 0.1)
        }).collect();
        assert_eq!(a, b);
        let mut r = rng(5);
        for _ in 0..20 {
            let s = random_lattice_spec(&mut r, 0.05, 0.1);
            for c in &s.chimneys {
                for v in [c.left(), c.right(), c.height] {
                    assert!((v / 0.05 - (v / 0.05).round()).abs() < 1e-9);
                }
            }
        }
    }
}
