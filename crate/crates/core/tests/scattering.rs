use std::f64::consts::PI;

use proptest::prelude::*;
use waveguide_core::asymptotics::first_order;
use waveguide_core::oracle_fd::fd_solve;
use waveguide_core::pipeline::solve_spec;
use waveguide_core::scattering::{energy_identity_defects, ScatteringResult};
use waveguide_core::{Chimney, MeshOptions, WaveguideSpec};

fn solve(spec: &WaveguideSpec) -> ScatteringResult {
    solve_spec(spec, &MeshOptions::default()).unwrap().result
}

fn mirrored(spec: &WaveguideSpec) -> WaveguideSpec {
    let chimneys = spec
        .chimneys
        .iter()
        .rev()
        .map(|c| Chimney::new(-c.x_center, c.height, c.width))
        .collect();
    spec.clone().with_chimneys(chimneys)
}

#[test]
fn transmission_is_mirror_invariant() {
    let spec = WaveguideSpec::strip(0.7 * PI, 4.0, 0.05)
        .with_chimneys(vec![Chimney::new(-0.8, 0.9, 0.2), Chimney::new(0.4, 1.5, 0.2)]);
    let a = solve(&spec);
    let b = solve(&mirrored(&spec));
    assert!((a.transmission() - b.transmission()).norm() < 1e-4, "{a:?} {b:?}");
    assert!((a.reflection().norm() - b.reflection().norm()).abs() < 1e-4);
}

#[test]
fn symmetric_layout_mirrors_onto_itself() {
    let spec = WaveguideSpec::strip(0.8 * PI, 4.0, 0.1)
        .with_chimneys(vec![Chimney::new(-0.6, 1.1, 0.25), Chimney::new(0.6, 1.1, 0.25)]);
    let a = solve(&spec);
    let b = solve(&mirrored(&spec));
    assert!((a.s_minus - b.s_minus).norm() < 1e-12 && (a.s_plus - b.s_plus).norm() < 1e-12);
}

#[test]
fn thin_chimneys_follow_the_first_order_model() {
    let mut rel = Vec::new();
    for eps in [0.1, 0.05] {
        let spec = WaveguideSpec::strip(0.8 * PI, 4.0, 0.025)
            .with_chimneys(vec![Chimney::new(-0.5, 1.2, eps), Chimney::new(0.7, 0.9, eps)]);
        let s = solve(&spec);
        let p = first_order(&spec).unwrap();
        let (pm, pp) = (p.s1_minus * eps, p.s1_plus * eps);
        rel.push(((s.s_minus - pm).norm() + (s.s_plus - pp).norm()) / (pm.norm() + pp.norm()));
    }
    assert!(rel[1] < rel[0] && rel[1] < 0.3, "{rel:?}");
}

#[test]
fn finite_differences_agree_with_finite_elements() {
    let spec = WaveguideSpec::strip(0.6 * PI, 5.0, 0.05)
        .with_chimneys(vec![Chimney::new(-0.5, 1.0, 0.25), Chimney::new(0.75, 1.25, 0.25)]);
    let fem = solve_spec(
        &spec,
        &MeshOptions {
            corner_levels: 2,
            ..MeshOptions::default()
        },
    )
    .unwrap()
    .result;
    let fd = fd_solve(&spec, 0.0125).unwrap().result;
    assert!(fd.energy_defect < 1e-10);
    assert!((fem.s_minus - fd.s_minus).norm() < 2e-3, "{fem:?} {fd:?}");
    assert!((fem.s_plus - fd.s_plus).norm() < 2e-3, "{fem:?} {fd:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn overlap_coefficients_conserve_energy(
        k_over_pi in 0.2f64..0.95,
        x in -1.0f64..1.0,
        height in 0.3f64..1.8,
        width in 0.1f64..0.4,
    ) {
        let k = k_over_pi * PI;
        let t = k * height / PI;
        prop_assume!((t - t.floor() - 0.5).abs() > 0.05);
        let spec = WaveguideSpec::strip(k, 1.8 + 2.0 * PI / k, 0.2).with_chimneys(vec![Chimney::new(x, height, width)]);
        let r = solve(&spec);
        let (e, o) = energy_identity_defects(&r);
        prop_assert!(e < 1e-8 && o < 1e-8, "{e} {o}");
        prop_assert!(r.transmission().norm() <= 1.0 + 1e-8);
    }
}
