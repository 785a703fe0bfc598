//! First-order thin-chimney model of the scattering coefficients.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use thiserror::Error;

use crate::geometry::{is_resonant, WaveguideSpec};
use crate::modal::incident_wave;
use crate::numeric::C64;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("chimney {index}: height {height} is resonant")]
    ResonantHeight { index: usize, height: f64 },
    #[error("scaling fit needs at least two positive samples")]
    TooFewPoints,
}

/// Coefficients of `eps` in the expansions of `s-` and `s+`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderPrediction {
    pub s1_minus: C64,
    pub s1_plus: C64,
    /// Junction constants `a_m = -k tan(k h_m) w+(M_m) / pi`.
    pub a: Vec<C64>,
}

/// First-order coefficients for the chimneys of `spec` (the width is not used).
pub fn first_order(spec: &WaveguideSpec) -> Result<FirstOrderPrediction, AsymptoticsError> {
    let k = spec.k;
    let i = C64::new(0.0, 1.0);
    let mut sum_minus = C64::new(0.0, 0.0);
    let mut sum_plus = 0.0;
    let mut a = Vec::with_capacity(spec.chimneys.len());
    for (index, c) in spec.chimneys.iter().enumerate() {
        if is_resonant(k, c.height) {
            return Err(AsymptoticsError::ResonantHeight {
                index,
                height: c.height,
            });
        }
        let t = Float::tan(k * c.height);
        sum_minus += C64::from_polar(t, 2.0 * k * c.x_center);
        sum_plus += t;
        a.push(incident_wave(k, c.x_center) * (-k * t / PI));
    }
    // i s1 = -sum / 2
    Ok(FirstOrderPrediction {
        s1_minus: i * sum_minus * 0.5,
        s1_plus: i * (0.5 * sum_plus),
        a,
    })
}

/// Limit profile in a chimney: `v(1) = boundary_value`, `v'(1 + h) = 0`.
pub fn chimney_profile(k: f64, h: f64, boundary_value: C64, y: f64) -> Result<C64, AsymptoticsError> {
    if is_resonant(k, h) {
        return Err(AsymptoticsError::ResonantHeight { index: 0, height: h });
    }
    let s = k * (y - 1.0);
    Ok(boundary_value * (Float::cos(s) + Float::tan(k * h) * Float::sin(s)))
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit, AsymptoticsError> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (Float::ln(a), Float::ln(b)))
        .collect();
    if pts.len() < 2 {
        return Err(AsymptoticsError::TooFewPoints);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// One sample of a remainder sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemainderSample {
    pub eps: f64,
    pub s_minus: C64,
    pub s_plus: C64,
}

/// Exponents of `|s-|`, `|s+|` and `sqrt(|s-|^2 + |s+|^2)` against `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingProbe {
    pub samples: Vec<RemainderSample>,
    pub slope_minus: f64,
    pub slope_plus: f64,
    pub slope_combined: f64,
}

/// Number of trailing sweep points used by the fit.
pub const SCALING_FIT_POINTS: usize = 4;

/// Evaluates the coefficients at every `eps` (through `coefficients`) and fits
/// the last [`SCALING_FIT_POINTS`] samples, sorted by decreasing `eps`.
pub fn residual_scaling_probe<E, F>(eps: &[f64], mut coefficients: F) -> Result<Result<ScalingProbe, AsymptoticsError>, E>
where
    F: FnMut(f64) -> Result<(C64, C64), E>,
{
    let mut samples = Vec::with_capacity(eps.len());
    for &e in eps {
        let (s_minus, s_plus) = coefficients(e)?;
        samples.push(RemainderSample { eps: e, s_minus, s_plus });
    }
    Ok(fit_samples(samples))
}

/// Fit step of [`residual_scaling_probe`], usable on precomputed samples.
pub fn fit_samples(mut samples: Vec<RemainderSample>) -> Result<ScalingProbe, AsymptoticsError> {
    samples.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap_or(core::cmp::Ordering::Equal));
    let tail = &samples[samples.len().saturating_sub(SCALING_FIT_POINTS)..];
    let x: Vec<f64> = tail.iter().map(|s| s.eps).collect();
    let ym: Vec<f64> = tail.iter().map(|s| s.s_minus.norm()).collect();
    let yp: Vec<f64> = tail.iter().map(|s| s.s_plus.norm()).collect();
    let yc: Vec<f64> = tail
        .iter()
        .map(|s| Float::sqrt(s.s_minus.norm_sqr() + s.s_plus.norm_sqr()))
        .collect();
    Ok(ScalingProbe {
        slope_minus: log_log_fit(&x, &ym)?.slope,
        slope_plus: log_log_fit(&x, &yp)?.slope,
        slope_combined: log_log_fit(&x, &yc)?.slope,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chimney;
    use alloc::vec;
    use proptest::prelude::*;

    fn spec_with(k: f64, chimneys: Vec<Chimney>) -> WaveguideSpec {
        WaveguideSpec::strip(k, 20.0, 0.1).with_chimneys(chimneys)
    }

    #[test]
    fn nominal_heights_give_zero_first_order() {
        let k = 0.8 * PI;
        let x1 = 3.0 * PI / (4.0 * k);
        let spec = spec_with(
            k,
            vec![
                Chimney::new(-x1, PI / k, 0.3),
                Chimney::new(0.0, PI / k, 0.3),
                Chimney::new(x1, PI / k, 0.3),
            ],
        );
        let p = first_order(&spec).unwrap();
        assert!(p.s1_minus.norm() < 1e-15 && p.s1_plus.norm() < 1e-15);
        assert!(p.a.iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn single_chimney_with_unit_tangent() {
        let k = 0.8 * PI;
        let h = (PI + PI / 4.0) / k;
        let p = first_order(&spec_with(k, vec![Chimney::new(0.0, h, 0.1)])).unwrap();
        let i = C64::new(0.0, 1.0);
        assert!((i * p.s1_plus - C64::new(-0.5, 0.0)).norm() < 1e-14);
        assert!((i * p.s1_minus - C64::new(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn profile_boundary_values() {
        let k = 0.8 * PI;
        let b = C64::new(0.4, -0.7);
        assert_eq!(chimney_profile(k, 1.1, b, 1.0).unwrap(), b);
        let v = chimney_profile(k, PI / k, b, 1.0 + PI / k).unwrap();
        assert!((v + b).norm() < 1e-14);
        assert!(chimney_profile(k, PI / (2.0 * k), b, 1.0).is_err());
    }

    #[test]
    fn profile_satisfies_its_ode() {
        let k = 0.7 * PI;
        let h = 0.83;
        let b = C64::new(1.0, 0.5);
        let n = 5000;
        let d = h / n as f64;
        let v: Vec<C64> = (0..=n).map(|i| chimney_profile(k, h, b, 1.0 + d * i as f64).unwrap()).collect();
        for i in 1..n {
            let lap = (v[i - 1] - v[i] * 2.0 + v[i + 1]) / (d * d);
            assert!((lap + v[i] * (k * k)).norm() < 1e-6);
        }
    }

    #[test]
    fn fit_recovers_power_law() {
        let x = [0.4, 0.3, 0.2, 0.1];
        let y: Vec<f64> = x.iter().map(|&e: &f64| 3.0 * e.powf(1.5)).collect();
        let f = log_log_fit(&x, &y).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn plus_coefficient_is_purely_imaginary(
            k in 0.3f64..3.0,
            xs in proptest::collection::vec(-3.0f64..3.0, 1..4),
            hs in proptest::collection::vec(0.2f64..2.0, 3),
        ) {
            let chimneys: Vec<Chimney> = xs.iter().zip(&hs).map(|(&x, &h)| Chimney::new(x, h, 0.1)).collect();
            prop_assume!(chimneys.iter().all(|c| !is_resonant(k, c.height)));
            let p = first_order(&spec_with(k, chimneys.clone())).unwrap();
            let is1 = C64::new(0.0, 1.0) * p.s1_plus;
            prop_assert_eq!(is1.im, 0.0);
            let expect: f64 = -0.5 * chimneys.iter().map(|c| (k * c.height).tan()).sum::<f64>();
            prop_assert!((is1.re - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }

        #[test]
        fn translation_covariance(k in 0.3f64..3.0, shift in -1.0f64..1.0, h in 0.2f64..2.0) {
            prop_assume!(!is_resonant(k, h) && !is_resonant(k, h + 0.3));
            let base = vec![Chimney::new(-0.5, h, 0.1), Chimney::new(0.7, h + 0.3, 0.1)];
            let moved: Vec<Chimney> = base.iter().map(|c| Chimney::new(c.x_center + shift, c.height, c.width)).collect();
            let p0 = first_order(&spec_with(k, base)).unwrap();
            let p1 = first_order(&spec_with(k, moved)).unwrap();
            let scale = 1.0 + p0.s1_minus.norm();
            prop_assert!((p1.s1_minus - p0.s1_minus * C64::from_polar(1.0, 2.0 * k * shift)).norm() < 1e-12 * scale);
            prop_assert!((p1.s1_plus - p0.s1_plus).norm() < 1e-12 * (1.0 + p0.s1_plus.norm()));
        }
    }
}
