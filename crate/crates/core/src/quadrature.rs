//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for the disk-averaged path loss oracle, the Matérn retention
//! integral and the quadrature form of the lower bound's signal expectation.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (x[1], x[3], x[5], x[7]).
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_evaluations: usize,
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self { relative, absolute: 0.0, max_evaluations: 2_000_000 }
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// error estimate drops below `max(absolute, relative * |value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut segments: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = kronrod(&mut f, a, b);
    segments.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= tol.absolute.max(tol.relative * value.abs()) {
            return Ok(Integral { value, error, evaluations });
        }
        if evaluations >= tol.max_evaluations {
            return Err(Error::NonConvergence(format!(
                "error estimate {error:.3e} above target after {evaluations} evaluations"
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, Tolerance::relative(1e-12)).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫_0^1 1/(1e-4 + x^2) dx = atan(100)/0.01
        let r = integrate(|x| 1.0 / (1e-4 + x * x), 0.0, 1.0, Tolerance::relative(1e-10)).unwrap();
        let exact = 100.0f64.atan() / 0.01;
        assert!((r.value / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let tol = Tolerance { relative: 1e-14, absolute: 0.0, max_evaluations: 100 };
        assert!(matches!(integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, tol), Err(Error::NonConvergence(_))));
    }
}
