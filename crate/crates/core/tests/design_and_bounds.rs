use std::f64::consts::PI;

use waveguide_core::designer::{run_design, CoefficientOracle, DesignConfig, FemOracle};
use waveguide_core::obstruction::{obstruction_bound, EigenOptions};
use waveguide_core::pipeline::solve_spec;
use waveguide_core::{Chimney, WaveguideSpec};

#[test]
fn coarse_design_reaches_perfect_transmission_on_its_mesh() {
    let k = 0.8 * PI;
    let cfg = DesignConfig::new(k, 0.2);
    let mut oracle = FemOracle::new(WaveguideSpec::strip(k, 5.0, 0.1), cfg.positions, 0.2);
    let state = run_design(&cfg, &mut oracle).unwrap();
    assert!(state.converged && state.branch_ok);

    let (sm, sp) = oracle.coefficients(&state.heights).unwrap();
    assert!(sm.norm() < 1e-7 && sp.norm() < 1e-7, "{sm} {sp}");
    let solved = solve_spec(&oracle.spec(&state.heights), &oracle.options).unwrap();
    assert!((solved.result.transmission().norm() - 1.0).abs() < 1e-7);
    for h in state.heights {
        assert!(h > 0.0 && (h - PI / k).abs() < 0.5 * PI / k, "{h}");
    }
}

#[test]
fn eigenvalue_bound_decreases_with_a_taller_chimney() {
    let bound = |height: f64| {
        let spec = WaveguideSpec::strip(0.8 * PI, 5.0, 0.1).with_chimneys(vec![Chimney::new(0.0, height, 0.3)]);
        obstruction_bound(&spec, -1.15, 1.15, &EigenOptions::default()).unwrap()
    };
    let short = bound(0.8);
    let tall = bound(1.6);
    assert!(tall.mu1 < short.mu1, "{} {}", tall.mu1, short.mu1);
    assert!(tall.k_star_bound < PI && short.k_star_bound < PI);
    assert!(tall.residual < 1e-6);
}
