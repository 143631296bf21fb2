//! Eigenblocks, DtN blocks and Fredholm corrections across modules.

use std::f64::consts::PI;

use maptorus::dtn::{boundary_solution, dtn_block, dtn_zero_mode, perturbation};
use maptorus::fredholm::{fredholm_correction, fredholm_correction_for, tail_bound};
use maptorus::oracle::dtn_ode_oracle;
use maptorus::spectral_model::{
    circle_spectrum, fixed_dims, form_spectrum, harmonic_actions, kappa_spectrum, orthogonality_defect,
    torus_spectrum, SpectrumStream,
};
use maptorus::verify::random_orthogonal;
use maptorus::{finite_block_logdet, IsometryKind, IsometrySpec, ManifoldSpec, MappingTorusSpec, TruncationPolicy};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn iso(kind: IsometryKind, base: ManifoldSpec) -> IsometrySpec {
    IsometrySpec::new(kind, base).unwrap()
}

fn nu2s(s: &SpectrumStream) -> Vec<f64> {
    s.iter().map(|b| b.nu2).collect()
}

#[test]
fn circle_blocks() {
    let base = ManifoldSpec::circle(1.0).unwrap();
    let id = circle_spectrum(1.0, 0, &iso(IsometryKind::Identity, base), 4.5).unwrap();
    assert_eq!(nu2s(&id), vec![0.0, 1.0, 4.0]);
    for b in id.iter() {
        let n = b.multiplicity();
        assert_eq!(b.action, DMatrix::identity(n, n));
    }
    let refl = iso(IsometryKind::CircleReflection, base);
    let s = circle_spectrum(1.0, 0, &refl, 1.5).unwrap();
    assert_eq!(s.blocks[1].action, dmatrix![1.0, 0.0; 0.0, -1.0]);
    let one_forms = circle_spectrum(1.0, 1, &refl, 0.5).unwrap();
    assert_eq!(one_forms.len(), 1);
    assert_eq!(one_forms.blocks[0].action, dmatrix![-1.0]);
}

#[test]
fn torus_blocks() {
    let base = ManifoldSpec::unit_torus();
    let id = torus_spectrum(2.0 * PI, 2.0 * PI, 0, &iso(IsometryKind::Identity, base), 1.5).unwrap();
    assert_eq!(nu2s(&id), vec![0.0, 1.0]);
    assert_eq!(id.iter().map(|b| b.multiplicity()).collect::<Vec<_>>(), vec![1, 4]);

    let swap = iso(IsometryKind::TorusSwapShift, base);
    let s = torus_spectrum(2.0 * PI, 2.0 * PI, 0, &swap, 2.5).unwrap();
    let shell2 = s.iter().find(|b| b.nu2 == 2.0).unwrap();
    let mut kappas = kappa_spectrum(&shell2.action);
    kappas.sort_by(f64::total_cmp);
    let rounded: Vec<i64> = kappas.iter().map(|k| k.round() as i64).collect();
    assert_eq!(rounded, vec![0, 2, 2, 2]);

    let big = form_spectrum(&swap, 0, 200.0).unwrap();
    for b in big.iter() {
        let n = b.multiplicity();
        assert!(orthogonality_defect(&b.action) < 1e-12);
        assert!((&b.inverse_action - b.action.transpose()).amax() < 1e-12);
        assert!((&b.action * &b.inverse_action - &b.inverse_action * &b.action).amax() < 1e-12);
        assert!((&b.action * &b.inverse_action - DMatrix::identity(n, n)).amax() < 1e-12);
        for k in kappa_spectrum(&b.action) {
            let nearest = k.round();
            assert!((k - nearest).abs() < 1e-10 && (0.0..=2.0).contains(&nearest));
        }
    }
}

#[test]
fn shell_counts_match_lattice() {
    for &(l1, l2) in &[(2.0 * PI, 2.0 * PI), (3.0, 5.0), (1.0, 2.0 * PI)] {
        let base = ManifoldSpec::rect_torus(l1, l2).unwrap();
        for &cutoff in &[10.0, 57.3, 300.0] {
            let s = form_spectrum(&iso(IsometryKind::Identity, base), 0, cutoff).unwrap();
            let (c1, c2) = (2.0 * PI / l1, 2.0 * PI / l2);
            let r = 100i64;
            let direct = (-r..=r)
                .flat_map(|m| (-r..=r).map(move |n| (m, n)))
                .filter(|&(m, n)| (c1 * m as f64).powi(2) + (c2 * n as f64).powi(2) <= cutoff)
                .count();
            assert_eq!(s.total_dimension(), direct, "{l1}x{l2} at {cutoff}");
        }
    }
}

#[test]
fn harmonic_examples() {
    let klein = harmonic_actions(&MappingTorusSpec::klein_bottle(2.0, 1.0).unwrap());
    assert_eq!(fixed_dims(&klein), vec![(1, 1), (1, 0)]);
    assert_eq!(klein.degrees[0].s_block.nrows(), 0);
    assert_eq!(klein.degrees[1].s_block, dmatrix![2.0]);
    assert_eq!(finite_block_logdet(&klein.degrees[1].s_block).unwrap(), 2f64.ln());

    let t2 = harmonic_actions(&MappingTorusSpec::t2_phi());
    assert_eq!((t2.betti(0), t2.fixed_dim(0)), (1, 1));
    assert_eq!(t2.degrees[0].s_block.nrows(), 0);

    let id = harmonic_actions(&MappingTorusSpec::product(ManifoldSpec::unit_torus(), 1.0).unwrap());
    assert_eq!(fixed_dims(&id), vec![(1, 1), (2, 2), (1, 1)]);
}

#[test]
fn boundary_solutions() {
    let s = boundary_solution(0.0, 1.0, 1.0, &dvector![1.0], &dvector![1.0]).unwrap();
    let r = boundary_solution(1.0, 0.0, 2.0, &dvector![1.0], &dvector![0.0]).unwrap();
    for i in 0..=20 {
        let u = i as f64 / 20.0;
        assert!((s.evaluate(u)[0] - (u - 0.5).cosh() / 0.5f64.cosh()).abs() < 1e-14);
        let u2 = 2.0 * u;
        assert!((r.evaluate(u2)[0] - (2.0 - u2).sinh() / 2f64.sinh()).abs() < 1e-14);
    }
    // −ψ'' + vψ = 0 at Chebyshev points, by central differences
    let sol = boundary_solution(2.5, 0.3, 1.7, &dvector![0.4, -1.0], &dvector![2.0, 0.5]).unwrap();
    let h = 1e-4;
    for j in 0..20 {
        let u = 0.85 * (1.0 - (PI * (j as f64 + 0.5) / 20.0).cos());
        let second: DVector<f64> = (sol.evaluate(u + h) - sol.evaluate(u) * 2.0 + sol.evaluate(u - h)) / (h * h);
        let residual = -second + sol.evaluate(u) * 2.8;
        assert!(residual.amax() < 1e-6 * sol.evaluate(u).amax().max(1.0) * 100.0);
    }
}

#[test]
fn zero_mode_examples() {
    let a: f64 = 1.7;
    assert_eq!(dtn_zero_mode(a, &dmatrix![1.0], &dmatrix![1.0]).unwrap().matrix, dmatrix![0.0]);
    let refl = dtn_zero_mode(a, &dmatrix![-1.0], &dmatrix![-1.0]).unwrap().matrix;
    assert!((refl[(0, 0)] - 4.0 / a).abs() < 1e-15);
}

#[test]
fn continuity_at_zero_shift() {
    // dtn(0, ε) = zero_mode + εa(I − K/3) + O(ε²)
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = 1.3;
    let action = random_orthogonal(&mut rng, 3);
    // a rotation keeping one direction fixed
    let fixed = {
        let m = DMatrix::<f64>::identity(3, 3);
        let mut r = m.clone();
        r.view_mut((0, 0), (2, 2)).copy_from(&dmatrix![0.6, -0.8; 0.8, 0.6]);
        r
    };
    for act in [action, fixed] {
        let inv = act.transpose();
        let z = dtn_zero_mode(a, &act, &inv).unwrap().matrix;
        let k = perturbation(&act, &inv);
        let n = act.nrows();
        let mut prev = f64::INFINITY;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let d = dtn_block(0.0, eps, a, &act, &inv).unwrap().matrix;
            let predicted = &z + (DMatrix::identity(n, n) - &k / 3.0) * (eps * a);
            let err = (d - predicted).amax();
            assert!(err < 2.0 * eps * eps * a.powi(3), "eps={eps}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }
}

#[test]
fn hundred_seeded_ode_comparisons() {
    let mut rng = ChaCha8Rng::seed_from_u64(maptorus::verify::DEFAULT_SEED);
    use rand::Rng;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let action = random_orthogonal(&mut rng, n);
        let nu2 = rng.random_range(0.0..20.0);
        let shift = rng.random_range(0.01..5.0);
        let a = rng.random_range(0.2..3.0);
        let closed = dtn_block(nu2, shift, a, &action, &action.transpose()).unwrap().matrix;
        let ode = dtn_ode_oracle(nu2, shift, a, &action).unwrap();
        assert!((closed - ode).amax() < 1e-8);
    }
}

#[test]
fn fredholm_examples() {
    let p = TruncationPolicy::default();
    let (a, rho) = (3.0, 0.7);
    let refl = iso(IsometryKind::CircleReflection, ManifoldSpec::circle(rho).unwrap());
    let f = fredholm_correction_for(&refl, 0, a, 0.0, &p, true).unwrap();
    let closed: f64 = (1..200).map(|k| 2.0 * (1.0 + 2.0 / ((a * k as f64 / rho).exp() - 1.0)).ln()).sum();
    assert!((f.value - closed).abs() <= p.tail_tol);
    assert!(f.tail_bound < 1e-12);

    let id = iso(IsometryKind::Identity, ManifoldSpec::unit_torus());
    for q in 0..=2 {
        let s = form_spectrum(&id, q, 40.0).unwrap();
        let v = fredholm_correction(&s, 2.0, 0.5, &TruncationPolicy::new(40.0, 1.0).unwrap(), false).unwrap();
        assert_eq!(v.value, 0.0);
    }

    // deterministic to the bit
    let swap = iso(IsometryKind::TorusSwapShift, ManifoldSpec::unit_torus());
    let x = fredholm_correction_for(&swap, 1, 2.0 * PI, 0.3, &p, false).unwrap();
    let y = fredholm_correction_for(&swap, 1, 2.0 * PI, 0.3, &p, false).unwrap();
    assert_eq!(x.value.to_bits(), y.value.to_bits());
}

#[test]
fn tail_bounds_dominate_doubling() {
    let loose = TruncationPolicy::new(1.0, 1e6).unwrap().fixed();
    let cases = [
        (iso(IsometryKind::CircleReflection, ManifoldSpec::circle(0.7).unwrap()), 0, 3.0, 0.0),
        (iso(IsometryKind::CircleRotation { angle: 1.1 }, ManifoldSpec::circle(2.0).unwrap()), 0, 1.0, 0.4),
        (iso(IsometryKind::TorusSwapShift, ManifoldSpec::unit_torus()), 0, 2.0 * PI, 0.0),
        (iso(IsometryKind::TorusSwapShift, ManifoldSpec::unit_torus()), 1, 1.0, 1.0),
    ];
    for (i, deg, a, shift) in &cases {
        for cutoff in [2.0, 5.0, 11.0, 30.0] {
            let at = |c: f64| fredholm_correction(&form_spectrum(i, *deg, c).unwrap(), *a, *shift, &loose, true).unwrap();
            let (lo, hi) = (at(cutoff), at(2.0 * cutoff));
            assert!((hi.value - lo.value).abs() <= lo.tail_bound, "{i:?} deg {deg} cutoff {cutoff}");
        }
    }
    let base = ManifoldSpec::circle(1.0).unwrap();
    assert!(tail_bound(10.0, 50.0, 0.0, &base) < tail_bound(10.0, 5.0, 0.0, &base));
    assert!(tail_bound(10.0, 500.0, 0.0, &base) < 1e-300);
}

fn orthogonal(seed: u64, n: usize) -> DMatrix<f64> {
    random_orthogonal(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtn_spectrum_is_bracketed(seed in any::<u64>(), n in 1usize..4, nu2 in 0.0f64..30.0, shift in 0.01f64..5.0, a in 0.1f64..4.0) {
        let act = orthogonal(seed, n);
        let d = dtn_block(nu2, shift, a, &act, &act.transpose()).unwrap().matrix;
        prop_assert!((&d - d.transpose()).amax() == 0.0);
        let v: f64 = nu2 + shift;
        let x = a * v.sqrt();
        let lo = 2.0 * v.sqrt() * (x / 2.0).tanh();
        let hi = 2.0 * v.sqrt() / (x / 2.0).tanh();
        for e in d.symmetric_eigenvalues().iter() {
            prop_assert!(*e >= lo * (1.0 - 1e-12) && *e <= hi * (1.0 + 1e-12));
        }
        let id = DMatrix::identity(n, n);
        let plain = dtn_block(nu2, shift, a, &id, &id).unwrap().matrix;
        prop_assert!((plain - id * lo).amax() <= 1e-12 * lo.max(1.0));
    }

    #[test]
    fn fredholm_blocks_invariant_under_inverse(seed in any::<u64>(), n in 1usize..4, nu2 in 0.0f64..10.0, a in 0.1f64..3.0) {
        let act = orthogonal(seed, n);
        let inv = act.transpose();
        let f = maptorus::fredholm::block_correction(nu2, 0.5, a, &act, &inv).unwrap();
        let g = maptorus::fredholm::block_correction(nu2, 0.5, a, &inv, &act).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!((f - g).abs() <= 1e-14 * f.max(1.0));
    }
}
