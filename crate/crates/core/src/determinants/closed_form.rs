use num_traits::{Float, FloatConst};

use crate::error::{invalid, Result};
use crate::summation::CompensatedSum;

/// A series value with a bound on its discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub tail_bound: T,
    pub terms: usize,
}

fn positive<T: Float>(field: &'static str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite and > 0"))
    }
}

fn lit<T: Float>(x: f64) -> T {
    T::from(x).expect("representable constant")
}

/// `log Det(−d²/du² + t²)` on a circle of length `a`: `at + 2 log(1 − e^{−at})`.
pub fn circle_det_massive<T: Float>(a: T, t: T) -> Result<T> {
    positive("a", a)?;
    positive("t", t)?;
    let x = a * t;
    Ok(x + lit::<T>(2.0) * (-(-x).exp_m1()).ln())
}

/// `Σ_{k≥1} log(1 − e^{−kx})`, stopped once the tail bound
/// `e^{−(K+1)x}/(1 − e^{−x})²` drops below `tol`.
pub fn log_one_minus_exp_series<T: Float>(x: T, tol: T) -> SeriesValue<T> {
    let mut acc = CompensatedSum::new();
    let denom = (-x).exp_m1().powi(2);
    let mut k = 1usize;
    loop {
        let kx = T::from(k).expect("index") * x;
        acc.add((-(-kx).exp()).ln_1p());
        let tail = (-(kx + x)).exp() / denom;
        if tail <= tol || k > 100_000 {
            return SeriesValue {
                value: acc.value(),
                tail_bound: tail,
                terms: k,
            };
        }
        k += 1;
    }
}

/// `2Σ_{k≥1} log(1 + 2/(e^{ak/ρ} − 1))`: the Fredholm correction of the
/// circle reflection.
pub fn klein_correction_series<T: Float>(a: T, rho: T, tol: T) -> Result<SeriesValue<T>> {
    positive("a", a)?;
    positive("rho", rho)?;
    let x = a / rho;
    let two = lit::<T>(2.0);
    let mut acc = CompensatedSum::new();
    // log(1 + 2/(e^y−1)) ≤ 2e^{−y}/(1−e^{−y}) ≤ 2e^{−y}/(1−e^{−x})
    let c = two * two / (-(-x).exp_m1());
    let mut k = 1usize;
    loop {
        let y = T::from(k).expect("index") * x;
        acc.add(two * (two * (-y).exp() / (-(-y).exp_m1())).ln_1p());
        let tail = c * (-(y + x)).exp() / (-(-x).exp_m1());
        if tail <= tol || k > 100_000 {
            return Ok(SeriesValue {
                value: acc.value(),
                tail_bound: tail,
                terms: k,
            });
        }
        k += 1;
    }
}

/// `log Det* Δ` on the flat torus with periods `a` and `2πρ`.
pub fn rect_torus_det<T: Float + FloatConst>(a: T, rho: T) -> Result<T> {
    positive("a", a)?;
    positive("rho", rho)?;
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let series = log_one_minus_exp_series(lit::<T>(4.0) * pi * pi * rho / a, lit::<T>(1e-16) * T::epsilon() / lit(2.2e-16));
    Ok(two * (two * pi * rho).ln() - two * pi * pi * rho / (lit::<T>(3.0) * a) + lit::<T>(4.0) * series.value)
}

/// Closed form of `log Det* Δ` on the Klein bottle.
pub fn klein_bottle_det<T: Float + FloatConst>(a: T, rho: T) -> Result<T> {
    let torus = rect_torus_det(a, rho)?;
    let tol = lit::<T>(1e-16) * T::epsilon() / lit(2.2e-16);
    Ok(torus + klein_correction_series(a, rho, tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn massive_circle_values() {
        let v = circle_det_massive(1.0, 1.0).unwrap();
        assert!((v - (1.0 + 2.0 * (1.0 - (-1.0f64).exp()).ln())).abs() < 1e-15);
        for &(a, t) in &[(2.0, 3.0), (10.0, 1.0), (1.0, 40.0)] {
            let v: f64 = circle_det_massive(a, t).unwrap();
            assert!((v - a * t).abs() < 3.0 * (-a * t).exp());
        }
        assert!(circle_det_massive(1.0, 0.0).is_err());
        assert!(circle_det_massive(-1.0, 1.0).is_err());
    }

    #[test]
    fn torus_period_swap() {
        for &(a, rho) in &[(2.0 * PI, 1.0), (3.0, 0.7), (1.0, 5.0), (40.0, 0.1)] {
            let d1 = rect_torus_det(a, rho).unwrap();
            let d2 = rect_torus_det(2.0 * PI * rho, a / (2.0 * PI)).unwrap();
            assert!((d1 - d2).abs() < 1e-10, "a={a} rho={rho}: {d1} vs {d2}");
        }
    }

    #[test]
    fn long_torus_series_is_negative() {
        let (a, rho) = (400.0, 1.0);
        let head = 2.0 * (2.0 * PI * rho).ln() - 2.0 * PI * PI * rho / (3.0 * a);
        let d = rect_torus_det(a, rho).unwrap();
        let direct: f64 = (1..100_000)
            .map(|k| 4.0 * (1.0 - (-4.0 * PI * PI * rho * k as f64 / a).exp()).ln())
            .sum();
        assert!(d - head < 0.0);
        assert!((d - head - direct).abs() < 1e-9);
    }

    #[test]
    fn klein_minus_torus() {
        let (a, rho) = (3.0, 0.7);
        let diff = klein_bottle_det(a, rho).unwrap() - rect_torus_det(a, rho).unwrap();
        let direct: f64 = (1..200).map(|k| 2.0 * (1.0 + 2.0 / ((a * k as f64 / rho).exp() - 1.0)).ln()).sum();
        assert!((diff - direct).abs() < 1e-14);
    }

    #[test]
    fn generic_in_f32() {
        let v = rect_torus_det(2.0f32 * std::f32::consts::PI, 1.0f32).unwrap();
        let w = rect_torus_det(2.0 * PI, 1.0).unwrap();
        assert!((v as f64 - w).abs() < 1e-5);
    }
}
