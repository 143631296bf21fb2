//! Special functions needed by the Mellin-split continuation: the upper
//! incomplete gamma function for arbitrary real order and the exponential
//! integral `E1`.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const CF_MAX_ITER: usize = 5000;
const SERIES_MAX_ITER: usize = 500;

/// Gamma function (delegates to the C99 `tgamma` port in `libm`).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt` for real `a` and `x > 0`.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0, "upper_gamma needs x > 0");
    if x > a + 1.0 {
        upper_gamma_cf(a, x)
    } else if is_nonpositive_integer(a) {
        // E1 from its power series, then Γ(a,x) = (Γ(a+1,x) - x^a e^{-x}) / a downward.
        let mut g = e1_series(x);
        let mut order = 0.0;
        while order > a + 0.5 {
            g = (g - x.powf(order - 1.0) * (-x).exp()) / (order - 1.0);
            order -= 1.0;
        }
        g
    } else {
        gamma(a) - lower_gamma_series(a, x)
    }
}

/// Exponential integral `E1(x) = Γ(0, x)`.
pub fn exp_integral_e1(x: f64) -> f64 {
    upper_gamma(0.0, x)
}

fn is_nonpositive_integer(a: f64) -> bool {
    a <= 0.0 && a.fract() == 0.0
}

// Modified Lentz evaluation of the Legendre continued fraction.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln()).exp() * h
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..SERIES_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln()).exp()
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{n≥1} (-x)^n / (n n!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..SERIES_MAX_ITER {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_integral_e1(0.1) - 1.822_923_958_419_39).abs() < 1e-13);
        assert!((exp_integral_e1(5.0) - 1.148_295_591_275_326e-3).abs() < 1e-17);
    }

    #[test]
    fn order_one_is_exponential() {
        for &x in &[0.05, 0.7, 1.0, 3.0, 40.0] {
            let g = upper_gamma(1.0, x);
            let e = (-x).exp();
            assert!(((g - e) / e).abs() < 1e-14, "x={x}: {g} vs {e}");
        }
    }

    #[test]
    fn half_order_matches_erfc() {
        for &x in &[0.01, 0.3, 0.99, 1.0, 2.5, 12.0] {
            let expected = PI.sqrt() * libm::erfc(f64::sqrt(x));
            let got = upper_gamma(0.5, x);
            assert!(((got - expected) / expected).abs() < 1e-13, "x={x}: {got} vs {expected}");
        }
    }

    #[test]
    fn recurrence_holds_for_negative_orders() {
        for &a in &[-2.5, -1.5, -1.0, -0.5, 0.0, 0.5, 1.5] {
            for &x in &[0.2, 0.9, 1.1, 4.0, 15.0] {
                let lhs = upper_gamma(a + 1.0, x);
                let rhs = a * upper_gamma(a, x) + x.powf(a) * (-x).exp();
                assert!(((lhs - rhs) / lhs).abs() < 1e-12, "a={a} x={x}: {lhs} vs {rhs}");
            }
        }
    }
}
