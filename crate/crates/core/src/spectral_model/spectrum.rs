use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::manifold::{AffineAction, IsometrySpec, ManifoldSpec};
use super::binomial;
use crate::error::{invalid, Error, Result};

/// Exact label of an eigenvalue shell, so that degenerate lattice points are
/// merged without floating-point comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShellKey {
    /// Integer proportional to `ν²` (commensurable side lengths).
    Scalar(u64),
    /// `(m², n²)` on a torus with incommensurable sides.
    Pair(u64, u64),
}

/// One eigenvalue of the base Laplacian on q-forms, with the pull-back of the
/// isometry and of its inverse on the (real, orthonormal) eigenspace.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub nu2: f64,
    pub key: ShellKey,
    pub action: DMatrix<f64>,
    pub inverse_action: DMatrix<f64>,
    /// Canonical frequency vectors spanning the scalar part of the shell.
    pub frequencies: Vec<Vec<i64>>,
}

impl EigenBlock {
    pub fn multiplicity(&self) -> usize {
        self.action.nrows()
    }

    pub fn is_zero_mode(&self) -> bool {
        self.frequencies.iter().all(|m| m.iter().all(|&x| x == 0))
    }
}

/// All eigen-blocks with `ν² ≤ cutoff`, sorted by `ν²`.
#[derive(Debug, Clone)]
pub struct SpectrumStream {
    pub base: ManifoldSpec,
    pub degree: usize,
    pub frame_rank: usize,
    pub cutoff: f64,
    pub blocks: Vec<EigenBlock>,
}

impl SpectrumStream {
    pub fn iter(&self) -> std::slice::Iter<'_, EigenBlock> {
        self.blocks.iter()
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(EigenBlock::multiplicity).sum()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

impl<'a> IntoIterator for &'a SpectrumStream {
    type Item = &'a EigenBlock;
    type IntoIter = std::slice::Iter<'a, EigenBlock>;
    fn into_iter(self) -> Self::IntoIter {
        self.blocks.iter()
    }
}

pub fn circle_spectrum(
    rho: f64,
    degree: usize,
    isometry: &IsometrySpec,
    cutoff: f64,
) -> Result<SpectrumStream> {
    let base = ManifoldSpec::circle(rho)?;
    check_base(isometry, base)?;
    form_spectrum(isometry, degree, cutoff)
}

pub fn torus_spectrum(
    l1: f64,
    l2: f64,
    degree: usize,
    isometry: &IsometrySpec,
    cutoff: f64,
) -> Result<SpectrumStream> {
    let base = ManifoldSpec::rect_torus(l1, l2)?;
    check_base(isometry, base)?;
    form_spectrum(isometry, degree, cutoff)
}

fn check_base(isometry: &IsometrySpec, base: ManifoldSpec) -> Result<()> {
    if isometry.base() != base {
        return Err(Error::IsometryMismatch {
            isometry: isometry.kind().to_string(),
            base: base.to_string(),
        });
    }
    Ok(())
}

/// Spectrum of the Hodge Laplacian on `degree`-forms of the isometry's base.
pub fn form_spectrum(isometry: &IsometrySpec, degree: usize, cutoff: f64) -> Result<SpectrumStream> {
    let base = isometry.base();
    let d = base.dimension();
    if degree > d {
        return Err(Error::DegreeOutOfRange { degree, max: d });
    }
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(invalid("cutoff", format!("must be finite and non-negative, got {cutoff}")));
    }
    let phi = isometry.affine();
    let phi_inv = phi.inverse();
    let frame = frame_action(&phi, degree);
    let frame_inv = frame_action(&phi_inv, degree);
    let lengths = base.lengths();
    let keyer = ShellKeyer::new(&lengths);

    let blocks = enumerate_shells(&lengths, cutoff, &keyer)
        .into_iter()
        .map(|(key, (nu2, freqs))| {
            let s = scalar_action(&phi, &freqs);
            let s_inv = scalar_action(&phi_inv, &freqs);
            EigenBlock {
                nu2,
                key,
                action: s.kronecker(&frame),
                inverse_action: s_inv.kronecker(&frame_inv),
                frequencies: freqs,
            }
        })
        .collect::<Vec<_>>();
    let mut blocks = blocks;
    blocks.sort_by(|x, y| x.nu2.total_cmp(&y.nu2).then(x.key.cmp(&y.key)));
    Ok(SpectrumStream {
        base,
        degree,
        frame_rank: binomial(d, degree),
        cutoff,
        blocks,
    })
}

struct ShellKeyer {
    /// `(p, q)` with `(L₁/L₂)² = p/q`, when such a small fraction exists.
    ratio: Option<(u64, u64)>,
    dim: usize,
}

impl ShellKeyer {
    fn new(lengths: &[f64]) -> Self {
        let ratio = if lengths.len() == 2 {
            small_fraction((lengths[0] / lengths[1]).powi(2))
        } else {
            Some((1, 1))
        };
        Self {
            ratio,
            dim: lengths.len(),
        }
    }

    fn key(&self, m: &[i64]) -> ShellKey {
        let sq = |x: i64| (x * x) as u64;
        match (self.dim, self.ratio) {
            (1, _) => ShellKey::Scalar(sq(m[0])),
            (_, Some((p, q))) => ShellKey::Scalar(sq(m[0]) * q + sq(m[1]) * p),
            _ => ShellKey::Pair(sq(m[0]), sq(m[1])),
        }
    }
}

fn small_fraction(r: f64) -> Option<(u64, u64)> {
    (1..=1000u64).find_map(|q| {
        let p = (r * q as f64).round();
        (p >= 1.0 && (p / q as f64 - r).abs() <= 1e-12 * r).then_some((p as u64, q))
    })
}

/// First nonzero coordinate positive (the zero vector counts as canonical).
fn is_canonical(m: &[i64]) -> bool {
    m.iter().find(|&&x| x != 0).is_none_or(|&x| x > 0)
}

type Shells = BTreeMap<ShellKey, (f64, Vec<Vec<i64>>)>;

fn enumerate_shells(lengths: &[f64], cutoff: f64, keyer: &ShellKeyer) -> Shells {
    let freq = |i: usize, k: i64| 2.0 * PI * k as f64 / lengths[i];
    let bound = |i: usize| (cutoff.sqrt() * lengths[i] / (2.0 * PI)).floor() as i64;
    let slack = 1e-12 * cutoff.max(1.0);
    let mut shells: Shells = BTreeMap::new();
    let mut push = |m: Vec<i64>| {
        let nu2: f64 = m.iter().enumerate().map(|(i, &k)| freq(i, k).powi(2)).sum();
        if nu2 <= cutoff + slack && is_canonical(&m) {
            shells
                .entry(keyer.key(&m))
                .or_insert_with(|| (nu2, Vec::new()))
                .1
                .push(m);
        }
    };
    match lengths.len() {
        1 => (0..=bound(0)).for_each(|k| push(vec![k])),
        2 => {
            for k in 0..=bound(0) {
                for l in -bound(1)..=bound(1) {
                    push(vec![k, l]);
                }
            }
        }
        _ => unreachable!("bases have dimension 1 or 2"),
    }
    for (_, freqs) in shells.values_mut() {
        freqs.sort();
    }
    shells
}

/// `(cos, sin)` of `2π·turns`, exact at quarter turns.
fn cos_sin_turns(turns: f64) -> (f64, f64) {
    let r = turns.rem_euclid(1.0);
    let quarter = r * 4.0;
    if quarter == quarter.round() {
        return match quarter as i64 % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let (s, c) = (2.0 * PI * r).sin_cos();
    (c, s)
}

/// Pull-back on the real basis `(cos m·θ, sin m·θ)` of a shell; the zero
/// frequency contributes the constant function only.
fn scalar_action(phi: &AffineAction, freqs: &[Vec<i64>]) -> DMatrix<f64> {
    let zero = freqs.len() == 1 && freqs[0].iter().all(|&x| x == 0);
    if zero {
        return DMatrix::identity(1, 1);
    }
    let n = 2 * freqs.len();
    let index = |m: &[i64]| -> (usize, f64) {
        let (canon, sign) = if is_canonical(m) {
            (m.to_vec(), 1.0)
        } else {
            (m.iter().map(|x| -x).collect(), -1.0)
        };
        let pos = freqs
            .binary_search(&canon)
            .expect("isometries preserve shells");
        (pos, sign)
    };
    let mut s = DMatrix::zeros(n, n);
    for (col, m) in freqs.iter().enumerate() {
        let (cb, sb) = cos_sin_turns(phi.phase_turns(m));
        let (row, sign) = index(&phi.pull_frequency(m));
        // φ*cos(m·θ) = cos β·cos(m'·θ) − sin β·sin(m'·θ)
        s[(2 * row, 2 * col)] += cb;
        s[(2 * row + 1, 2 * col)] -= sb * sign;
        // φ*sin(m·θ) = sin β·cos(m'·θ) + cos β·sin(m'·θ)
        s[(2 * row, 2 * col + 1)] += sb;
        s[(2 * row + 1, 2 * col + 1)] += cb * sign;
    }
    s
}

/// Induced action on `Λ^q` of the parallel coframe: `φ*dθ_I = Σ_J det P[I,J] dθ_J`.
fn frame_action(phi: &AffineAction, q: usize) -> DMatrix<f64> {
    let d = phi.dim();
    let subsets = subsets(d, q);
    let n = subsets.len();
    DMatrix::from_fn(n, n, |r, c| {
        let (rows, cols) = (&subsets[c], &subsets[r]);
        let minor = DMatrix::from_fn(q, q, |i, j| phi.linear[rows[i]][cols[j]] as f64);
        if q == 0 {
            1.0
        } else {
            minor.determinant()
        }
    })
}

fn subsets(d: usize, q: usize) -> Vec<Vec<usize>> {
    (0u32..1 << d)
        .filter(|mask| mask.count_ones() as usize == q)
        .map(|mask| (0..d).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// Eigenvalues `κ ∈ [0, 2]` of `I − ½(A + Aᵀ)`.
pub fn kappa_spectrum(action: &DMatrix<f64>) -> Vec<f64> {
    let n = action.nrows();
    let k = DMatrix::identity(n, n) - (action + action.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(k)
        .eigenvalues
        .iter()
        .map(|&x| x.clamp(0.0, 2.0))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `max |AᵀA − I|`.
pub fn orthogonality_defect(action: &DMatrix<f64>) -> f64 {
    let n = action.nrows();
    (action.transpose() * action - DMatrix::identity(n, n)).amax()
}
