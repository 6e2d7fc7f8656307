//! Adaptive Dormand–Prince 5(4) integrator with exact landing on sample times.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vector-space operations the integrator needs from a state.
pub trait OdeState: Clone {
    /// `self += factor · other`
    fn add_scaled(&mut self, factor: f64, other: &Self);
    /// Largest component of `|err| / (atol + rtol·max(|a|, |b|))`.
    fn scaled_error(err: &Self, a: &Self, b: &Self, rtol: f64, atol: f64) -> f64;
}

impl OdeState for f64 {
    fn add_scaled(&mut self, factor: f64, other: &Self) {
        *self += factor * other;
    }

    fn scaled_error(err: &Self, a: &Self, b: &Self, rtol: f64, atol: f64) -> f64 {
        err.abs() / (atol + rtol * a.abs().max(b.abs()))
    }
}

impl OdeState for DMatrix<Complex64> {
    fn add_scaled(&mut self, factor: f64, other: &Self) {
        self.zip_apply(other, |x, y| *x += y * factor);
    }

    fn scaled_error(err: &Self, a: &Self, b: &Self, rtol: f64, atol: f64) -> f64 {
        err.iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(e, (x, y))| e.norm() / (atol + rtol * x.norm().max(y.norm())))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the initial derivative when `None`.
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    /// Steps below `min_step_fraction · span` abort the run.
    pub min_step_fraction: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_step: None,
            min_step_fraction: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dy/dt = rhs(t, y)` from `t0` through every time in `samples`
/// (ascending, all ≥ `t0`), calling `observe` with the state at each one.
pub fn integrate<Y, F, O>(
    mut rhs: F,
    t0: f64,
    y0: Y,
    samples: &[f64],
    settings: &IntegratorSettings,
    mut observe: O,
) -> Result<(Y, IntegrationStats)>
where
    Y: OdeState,
    F: FnMut(f64, &Y) -> Result<Y>,
    O: FnMut(f64, &Y) -> Result<()>,
{
    if samples.windows(2).any(|w| !(w[1] > w[0])) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::InvalidParameter(
            "sample times must be strictly increasing and not before t0".into(),
        ));
    }
    let mut stats = IntegrationStats::default();
    let t_end = match samples.last() {
        Some(&t) => t,
        None => return Ok((y0, stats)),
    };
    let span = t_end - t0;
    let min_step = settings.min_step_fraction * span.max(f64::MIN_POSITIVE);
    let max_step = settings.max_step.unwrap_or(f64::INFINITY).min(span.max(f64::MIN_POSITIVE));

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    stats.evaluations += 1;

    let mut h = match settings.initial_step {
        Some(h) => h,
        None => initial_step(&y, &k1, settings, span),
    }
    .min(max_step);

    let mut next = 0;
    while next < samples.len() && samples[next] <= t {
        observe(samples[next], &y)?;
        next += 1;
    }

    let mut k: Vec<Y> = Vec::with_capacity(7);
    while next < samples.len() {
        let target = samples[next];
        let remaining = target - t;
        let landing = h >= remaining * (1.0 - 1e-12);
        let step = if landing { remaining } else { h };
        if step < min_step && !landing {
            return Err(Error::StepUnderflow { t, h: step });
        }

        k.clear();
        k.push(k1.clone());
        for stage in 1..7 {
            let mut y_stage = y.clone();
            for (j, &a) in A[stage].iter().enumerate() {
                if a != 0.0 {
                    y_stage.add_scaled(step * a, &k[j]);
                }
            }
            let t_stage = if stage >= 5 { t + step } else { t + C[stage] * step };
            k.push(rhs(t_stage, &y_stage)?);
            stats.evaluations += 1;
            if stage == 6 {
                // y_stage is the fifth-order solution (FSAL)
                let mut err = k[0].clone();
                err.add_scaled(-1.0, &k[0]);
                for (j, &e) in E.iter().enumerate() {
                    if e != 0.0 {
                        err.add_scaled(step * e, &k[j]);
                    }
                }
                let norm = Y::scaled_error(&err, &y, &y_stage, settings.rtol, settings.atol);
                let factor = if !norm.is_finite() {
                    0.2
                } else if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                if norm <= 1.0 {
                    stats.accepted += 1;
                    t = if landing { target } else { t + step };
                    y = y_stage;
                    k1 = k.pop().expect("seven stages");
                    if landing {
                        observe(target, &y)?;
                        next += 1;
                        // keep the controller's step rather than the truncated landing step
                        h = h.max(step);
                    } else {
                        h = step;
                    }
                    h = (h * factor).min(max_step);
                } else {
                    stats.rejected += 1;
                    h = step * factor.min(1.0);
                    if h < min_step {
                        return Err(Error::StepUnderflow { t, h });
                    }
                }
                break;
            }
        }
    }
    Ok((y, stats))
}

fn initial_step<Y: OdeState>(y: &Y, dy: &Y, s: &IntegratorSettings, span: f64) -> f64 {
    let d0 = Y::scaled_error(y, y, y, s.rtol, s.atol);
    let d1 = Y::scaled_error(dy, y, y, s.rtol, s.atol);
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_samples() {
        let samples: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let mut seen = Vec::new();
        let (y, stats) = integrate(
            |_, y: &f64| Ok(-2.0 * y),
            0.0,
            1.0,
            &samples,
            &IntegratorSettings::default(),
            |t, y| {
                seen.push((t, *y));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), samples.len());
        for ((t, v), s) in seen.iter().zip(&samples) {
            assert_eq!(t, s);
            assert!((v - (-2.0 * t).exp()).abs() <= 1e-8 * (-2.0 * t).exp() + 1e-10);
        }
        assert!((y - (-6.0f64).exp()).abs() < 1e-9);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos(t), y(0) = 0
        let (y, _) = integrate(
            |t, _: &f64| Ok(t.cos()),
            0.0,
            0.0,
            &[5.0],
            &IntegratorSettings::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y - 5f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn rotating_complex_matrix() {
        let i = Complex64::new(0.0, 1.0);
        let y0 = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let (y, _) = integrate(
            |_, y: &DMatrix<Complex64>| Ok(y * (-i * 3.0)),
            0.0,
            y0,
            &[2.0],
            &IntegratorSettings::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        let expected = (-i * 6.0).exp();
        assert!(y.iter().all(|z| (z - expected).norm() < 1e-7));
    }

    #[test]
    fn rejects_unordered_samples() {
        let err = integrate(
            |_, y: &f64| Ok(*y),
            0.0,
            1.0,
            &[1.0, 0.5],
            &IntegratorSettings::default(),
            |_, _| Ok(()),
        );
        assert!(err.is_err());
    }

    #[test]
    fn blow_up_underflows() {
        // y' = y², y(0) = 1 diverges at t = 1
        let err = integrate(
            |_, y: &f64| Ok(y * y),
            0.0,
            1.0,
            &[2.0],
            &IntegratorSettings::default(),
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }
}
