//! Lefschetz data, analytic torsion and its Witten deformation.

use nalgebra::DMatrix;

use crate::determinants::{circle_det_massive, mapping_torus_det_modified};
use crate::error::{invalid, require_positive, Error, Result};
use crate::fredholm::{block_correction, finite_block_logdet, TruncationPolicy};
use crate::spectral_model::{harmonic_actions, HarmonicActionSet, MappingTorusSpec};
use crate::summation::CompensatedSum;

/// Largest admissible distance of a trace sum from an integer.
pub const INTEGRALITY_TOL: f64 = 1e-9;
/// Required agreement of the two Lefschetz-zeta pathways.
pub const ZETA_AGREEMENT_TOL: f64 = 1e-12;

fn sign(q: usize) -> f64 {
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn round_trace(s: f64) -> Result<i64> {
    let n = s.round();
    let residual = (s - n).abs();
    if residual >= INTEGRALITY_TOL {
        return Err(Error::Inconsistent {
            check: "lefschetz integrality",
            residual,
            tolerance: INTEGRALITY_TOL,
        });
    }
    Ok(n as i64)
}

/// Lefschetz numbers `L(φ^k)`, memoized along running matrix powers.
#[derive(Debug, Clone)]
pub struct LefschetzData {
    actions: HarmonicActionSet,
    powers: Vec<DMatrix<f64>>,
    numbers: Vec<i64>,
}

impl LefschetzData {
    pub fn new(actions: HarmonicActionSet) -> Self {
        let powers = actions
            .degrees
            .iter()
            .map(|h| DMatrix::identity(h.betti, h.betti))
            .collect();
        Self {
            actions,
            powers,
            numbers: Vec::new(),
        }
    }

    pub fn actions(&self) -> &HarmonicActionSet {
        &self.actions
    }

    /// `L(φ^k)` for `k ≥ 1`.
    pub fn number(&mut self, k: usize) -> Result<i64> {
        if k == 0 {
            return Err(invalid("k", "must be >= 1"));
        }
        while self.numbers.len() < k {
            let mut s = 0.0;
            for (q, (p, h)) in self.powers.iter_mut().zip(&self.actions.degrees).enumerate() {
                *p = &h.action * &*p;
                s += sign(q) * p.trace();
            }
            self.numbers.push(round_trace(s)?);
        }
        Ok(self.numbers[k - 1])
    }

    /// `L(φ), …, L(φ^n)`.
    pub fn numbers(&mut self, n: usize) -> Result<&[i64]> {
        if n > 0 {
            self.number(n)?;
        }
        Ok(&self.numbers[..n])
    }

    /// `Σ_q b_q`, a bound for every `|L(φ^k)|`.
    pub fn total_betti(&self) -> usize {
        self.actions.degrees.iter().map(|h| h.betti).sum()
    }
}

/// `L(φ^k) = Σ_q (−1)^q Tr (φ*_q)^k`, from direct matrix powers.
pub fn lefschetz_number(actions: &HarmonicActionSet, k: usize) -> Result<i64> {
    if k == 0 {
        return Err(invalid("k", "must be >= 1"));
    }
    let s: f64 = actions
        .degrees
        .iter()
        .map(|h| sign(h.degree) * h.action.clone().pow(k as u32).trace())
        .sum();
    round_trace(s)
}

/// `Σ_q (−1)^{q+1} log det(I − tA_q)`.
fn lefschetz_zeta_rational(actions: &HarmonicActionSet, t: f64) -> Result<f64> {
    let mut s = 0.0;
    for h in &actions.degrees {
        let n = h.betti;
        let m = DMatrix::identity(n, n) - &h.action * t;
        let det = m.determinant();
        if !(det > 0.0) {
            return Err(Error::Singular(format!("det(I − tA_{}) = {det}", h.degree)));
        }
        s -= sign(h.degree) * det.ln();
    }
    Ok(s)
}

/// `log ζ_φ(t) = Σ_k L(φ^k) t^k / k`, cross-checked against the rational form.
pub fn lefschetz_zeta_log(actions: &HarmonicActionSet, t: f64) -> Result<f64> {
    if !(t.abs() < 1.0) {
        return Err(invalid("t", format!("|t| must be < 1, got {t}")));
    }
    let mut data = LefschetzData::new(actions.clone());
    let bound = data.total_betti() as f64;
    let mut acc = CompensatedSum::new();
    let mut tk = 1.0;
    let mut k = 1;
    loop {
        tk *= t;
        acc.add(data.number(k)? as f64 * tk / k as f64);
        let tail = bound * (tk * t).abs() / ((k + 1) as f64 * (1.0 - t.abs()));
        if tail < 1e-16 || tk == 0.0 {
            break;
        }
        k += 1;
    }
    let series = acc.value();
    let rational = lefschetz_zeta_rational(actions, t)?;
    let residual = (series - rational).abs();
    if residual > ZETA_AGREEMENT_TOL {
        return Err(Error::Inconsistent {
            check: "lefschetz zeta series vs rational form",
            residual,
            tolerance: ZETA_AGREEMENT_TOL,
        });
    }
    Ok(series)
}

/// `log T(M_φ)` from harmonic data alone:
/// `½ log 2·χ(M) + ½ log(a²/2)·Σ(−1)^q ℓ_q + ½ Σ(−1)^q log det S_q`.
pub fn analytic_torsion(spec: &MappingTorusSpec) -> Result<f64> {
    let h = harmonic_actions(spec);
    let a = spec.interval_length();
    let chi = h.euler_characteristic() as f64;
    let ell = h.fixed_euler_characteristic() as f64;
    let mut s = 0.0;
    for d in &h.degrees {
        s += sign(d.degree) * finite_block_logdet(&d.s_block)?;
    }
    Ok(0.5 * std::f64::consts::LN_2 * chi + 0.5 * (a * a / 2.0).ln() * ell + 0.5 * s)
}

/// `log T(M_φ) = ½ Σ_q (−1)^{q+1} q log Det* Δ^q`, each determinant from the
/// gluing pathway.
pub fn torsion_from_definition(spec: &MappingTorusSpec, policy: &TruncationPolicy) -> Result<f64> {
    let m = spec.dimension();
    let mut acc = CompensatedSum::new();
    for q in 1..=m {
        let det = mapping_torus_det_modified(spec, q, policy)?;
        acc.add(0.5 * -sign(q) * q as f64 * det.value);
    }
    Ok(acc.value())
}

/// Deformed torsion `(a/2) χ(M) t − log ζ_φ(e^{−at})`.
pub fn witten_torsion(spec: &MappingTorusSpec, t: f64) -> Result<f64> {
    require_positive("t", t)?;
    let h = harmonic_actions(spec);
    let a = spec.interval_length();
    let chi = h.euler_characteristic() as f64;
    Ok(0.5 * a * chi * t - lefschetz_zeta_log(&h, (-a * t).exp())?)
}

/// Deformed torsion assembled from `½ χ(M) log Det(−d²/du² + t²)` and the
/// alternating Fredholm corrections of the harmonic blocks at shift `t²`;
/// non-harmonic blocks cancel in the alternating sum.
pub fn witten_torsion_assembled(spec: &MappingTorusSpec, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    require_positive("t", t)?;
    policy.validate()?;
    let h = harmonic_actions(spec);
    let a = spec.interval_length();
    let chi = h.euler_characteristic() as f64;
    let shift = t * t;
    let harmonic = |p: isize| -> Result<f64> {
        match h.get(p) {
            Some(d) if d.betti > 0 => block_correction(0.0, shift, a, &d.action, &d.inverse_action),
            _ => Ok(0.0),
        }
    };
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * chi * circle_det_massive(a, t)?);
    for q in 1..=spec.dimension() {
        let f = harmonic(q as isize)? + harmonic(q as isize - 1)?;
        acc.add(0.5 * -sign(q) * q as f64 * f);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::ManifoldSpec;

    fn klein() -> MappingTorusSpec {
        MappingTorusSpec::klein_bottle(3.0, 0.7).unwrap()
    }

    #[test]
    fn reflection_numbers() {
        let mut d = LefschetzData::new(harmonic_actions(&klein()));
        assert_eq!(d.numbers(6).unwrap(), &[2, 0, 2, 0, 2, 0]);
        for k in 1..=6 {
            assert_eq!(lefschetz_number(d.actions(), k).unwrap(), d.number(k).unwrap());
        }
        assert!(lefschetz_number(d.actions(), 0).is_err());
    }

    #[test]
    fn identity_numbers_are_euler() {
        let spec = MappingTorusSpec::product(ManifoldSpec::unit_torus(), 1.0).unwrap();
        let h = harmonic_actions(&spec);
        for k in 1..5 {
            assert_eq!(lefschetz_number(&h, k).unwrap(), 0);
        }
        assert_eq!(lefschetz_zeta_log(&h, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn reflection_zeta() {
        let h = harmonic_actions(&klein());
        for &t in &[-0.9, -0.1, 0.3, 0.9] {
            let z = lefschetz_zeta_log(&h, t).unwrap();
            assert!((z - ((1.0 + t) / (1.0 - t)).ln()).abs() < 1e-13);
        }
        assert!(lefschetz_zeta_log(&h, 1.0).is_err());
    }

    #[test]
    fn klein_torsion() {
        let spec = klein();
        let v = analytic_torsion(&spec).unwrap();
        assert!((v - (3.0f64 / 2.0).ln()).abs() < 1e-14);
        let w = torsion_from_definition(&spec, &TruncationPolicy::default()).unwrap();
        assert!((v - w).abs() < 1e-8, "{v} vs {w}");
    }

    #[test]
    fn rotation_torsion_vanishes() {
        let spec = MappingTorusSpec::circle_rotation(2.0, 1.0, 0.9).unwrap();
        assert!(analytic_torsion(&spec).unwrap().abs() < 1e-14);
        assert!(torsion_from_definition(&spec, &TruncationPolicy::default()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn witten_pathways() {
        let p = TruncationPolicy::default();
        for spec in [klein(), MappingTorusSpec::circle_rotation(2.0, 1.0, 0.9).unwrap(), MappingTorusSpec::t2_phi()] {
            for &t in &[0.5, 1.0, 2.0] {
                let w = witten_torsion(&spec, t).unwrap();
                let v = witten_torsion_assembled(&spec, t, &p).unwrap();
                assert!((w - v).abs() < 1e-8);
            }
        }
        let x = (-3.0f64).exp();
        assert!((witten_torsion(&klein(), 1.0).unwrap() + ((1.0 + x) / (1.0 - x)).ln()).abs() < 1e-14);
    }
}
