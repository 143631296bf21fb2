//! Heat-trace (theta) representations of the explicit spectra, written down
//! from the eigenfunction lists rather than from the pull-back matrices.

use std::f64::consts::PI;

use super::theta::{RawSpectrum, ThetaFactor};
use crate::error::{require_positive, Error, Result};
use crate::spectral_model::{IsometryKind, ManifoldSpec, MappingTorusSpec};

fn factor(c: f64, sigma: f64) -> ThetaFactor {
    ThetaFactor::new(c, sigma).expect("positive frequency")
}

/// `{(2πk/a)² : k ∈ ℤ}`: circle of length `a`.
pub fn circle_of_length(a: f64) -> Result<RawSpectrum> {
    require_positive("a", a)?;
    Ok(RawSpectrum::new(format!("circle(length={a})")).with_term(1.0, &[factor(2.0 * PI / a, 0.0)]))
}

/// Scalar spectrum of a flat base.
pub fn base_spectrum(base: &ManifoldSpec) -> Result<RawSpectrum> {
    base.validate()?;
    let factors: Vec<ThetaFactor> = base.lengths().iter().map(|&l| factor(2.0 * PI / l, 0.0)).collect();
    Ok(RawSpectrum::new(base.to_string()).with_term(1.0, &factors))
}

/// `{(2πm/a)² + (n/ρ)²}`: flat torus with periods `a` and `2πρ`.
pub fn rect_torus(a: f64, rho: f64) -> Result<RawSpectrum> {
    require_positive("a", a)?;
    require_positive("rho", rho)?;
    Ok(RawSpectrum::new(format!("torus(a={a}, rho={rho})"))
        .with_term(1.0, &[factor(2.0 * PI / a, 0.0), factor(1.0 / rho, 0.0)]))
}

/// Scalar spectrum of `M × S¹(a/2π)`.
pub fn product_with_circle(base: &ManifoldSpec, a: f64) -> Result<RawSpectrum> {
    let mut s = base_spectrum(base)?.product(&circle_of_length(a)?)?;
    s.name = format!("{base} x S1(a={a})");
    Ok(s)
}

/// Klein bottle eigenvalue families: constants, `cos(2πmx/a)cos(ny/ρ)`,
/// `sin(2πmx/a)cos(ny/ρ)` (periodic in `x`) and the `sin(ny/ρ)` families with
/// half-integer `x`-frequencies. In theta form
/// `½θ_{u,0}θ_ρ + ½θ_{u,0} + ½θ_{u,½}θ_ρ − ½θ_{u,½}`.
pub fn klein_bottle(a: f64, rho: f64) -> Result<RawSpectrum> {
    require_positive("a", a)?;
    require_positive("rho", rho)?;
    let u0 = factor(2.0 * PI / a, 0.0);
    let u_half = factor(2.0 * PI / a, 0.5);
    let r = factor(1.0 / rho, 0.0);
    Ok(RawSpectrum::new(format!("klein(a={a}, rho={rho})"))
        .with_term(0.5, &[u0, r])
        .with_term(0.5, &[u0])
        .with_term(0.5, &[u_half, r])
        .with_term(-0.5, &[u_half]))
}

/// Counting functions of the unit square lattice split by the κ-classes of the
/// swap-shift: returns `(κ=0, κ=1, κ=2)` as theta polynomials in `Δ_{T²}`.
///
/// * `m+n` odd: κ = 1;
/// * diagonal `(m,m)`: κ = 0 for even `m`, κ = 2 for odd `m`;
/// * off-diagonal pairs `{(m,n),(n,m)}` with `m+n` even: one of each of κ = 0, 2.
pub fn swap_kappa_classes() -> [RawSpectrum; 3] {
    let one = factor(1.0, 0.0);
    let two0 = factor(2.0, 0.0);
    let two_half = factor(2.0, 0.5);
    let all = RawSpectrum::new("all").with_term(1.0, &[one, one]);
    // (Σ(−1)^m e^{−um²})² = (θ_{2,0} − θ_{2,½})²
    let alternating = RawSpectrum::new("alt")
        .with_term(1.0, &[two0, two0])
        .with_term(-2.0, &[two0, two_half])
        .with_term(1.0, &[two_half, two_half]);
    let even = all.clone().add(&alternating).scale(0.5);
    let odd = all.add(&alternating.scale(-1.0)).scale(0.5);
    let diag_all = RawSpectrum::new("diag").with_term(1.0, &[factor(2f64.sqrt(), 0.0)]);
    let diag_even = RawSpectrum::new("diag_even").with_term(1.0, &[factor(8f64.sqrt(), 0.0)]);
    let diag_odd = RawSpectrum::new("diag_odd").with_term(1.0, &[factor(8f64.sqrt(), 0.5)]);
    let off = even.difference(&diag_all).scale(0.5);
    [diag_even.add(&off), odd, diag_odd.add(&off)]
}

/// Scalar spectrum of the swap-shift mapping torus with interval length `a`:
/// an eigenfunction in κ-class `κ` picks up the phase `e^{iθ}` with
/// `1 − cos θ = κ`, so its `u`-frequencies are `(2π/a)(j + θ/2π)`.
pub fn swap_shift_mapping_torus(a: f64) -> Result<RawSpectrum> {
    require_positive("a", a)?;
    let c = 2.0 * PI / a;
    let [k0, k1, k2] = swap_kappa_classes();
    let along = |sigma: f64| RawSpectrum::new("u").with_term(1.0, &[factor(c, sigma)]);
    let mut s = k0
        .product(&along(0.0))?
        .add(&k1.product(&along(0.25))?)
        .add(&k2.product(&along(0.5))?);
    s.name = format!("T2_phi(a={a})");
    Ok(s)
}

/// Scalar spectrum of a mapping torus, where a closed theta form exists.
pub fn mapping_torus_scalar(spec: &MappingTorusSpec) -> Result<RawSpectrum> {
    let a = spec.interval_length();
    match (spec.isometry().kind(), spec.base()) {
        (IsometryKind::Identity, base) => product_with_circle(&base, a),
        (IsometryKind::CircleReflection, ManifoldSpec::Circle { radius }) => klein_bottle(a, radius),
        (IsometryKind::TorusSwapShift, ManifoldSpec::RectTorus { l1, .. }) if l1 == 2.0 * PI => {
            swap_shift_mapping_torus(a)
        }
        (kind, base) => Err(Error::Unsupported(format!(
            "no theta representation for {kind} on {base}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::heat_trace_dual;

    #[test]
    fn klein_list_matches_families() {
        let (a, rho) = (3.0, 0.7);
        let k = klein_bottle(a, rho).unwrap();
        let cutoff = 30.0;
        let mut expect: Vec<(f64, f64)> = vec![(0.0, 1.0)];
        let u = |m: f64| (2.0 * PI * m / a).powi(2);
        let r = |n: f64| (n / rho).powi(2);
        for m in 1..20 {
            for n in 1..20 {
                expect.push((u(m as f64) + r(n as f64), 2.0));
                expect.push((u(m as f64 - 0.5) + r(n as f64), 2.0));
            }
            expect.push((u(m as f64), 2.0));
            expect.push((r(m as f64), 1.0));
        }
        expect.retain(|e| e.0 <= cutoff);
        let total: f64 = expect.iter().map(|e| e.1).sum();
        let got = k.enumerate(cutoff).unwrap();
        let got_total: f64 = got.iter().map(|e| e.1).sum();
        assert_eq!(total, got_total);
        let tr = |l: &[(f64, f64)]| l.iter().map(|e| e.1 * (-0.3 * e.0).exp()).sum::<f64>();
        assert!((tr(&expect) - tr(&got)).abs() < 1e-12);
    }

    #[test]
    fn kappa_classes_partition_the_lattice() {
        let [k0, k1, k2] = swap_kappa_classes();
        let all = k0.clone().add(&k1).add(&k2);
        let lattice = base_spectrum(&ManifoldSpec::unit_torus()).unwrap();
        for &u in &[0.05, 0.4, 2.0] {
            let d = heat_trace_dual(&all, u) - heat_trace_dual(&lattice, u);
            assert!(d.abs() < 1e-13 * heat_trace_dual(&lattice, u), "u={u}: {d}");
        }
        // shell 2: κ0 ×1, κ2 ×3; shell 1: κ1 ×4
        let at = |s: &RawSpectrum, v: f64| {
            s.enumerate(v + 0.1).unwrap().iter().find(|e| e.0 == v).map_or(0.0, |e| e.1)
        };
        assert_eq!((at(&k0, 2.0), at(&k1, 2.0), at(&k2, 2.0)), (1.0, 0.0, 3.0));
        assert_eq!((at(&k0, 1.0), at(&k1, 1.0), at(&k2, 1.0)), (0.0, 4.0, 0.0));
        assert_eq!(at(&k0, 0.0), 1.0);
    }

    #[test]
    fn unsupported_geometry() {
        let spec = MappingTorusSpec::circle_rotation(1.0, 1.0, 0.3).unwrap();
        assert!(matches!(mapping_torus_scalar(&spec), Err(Error::Unsupported(_))));
    }
}
