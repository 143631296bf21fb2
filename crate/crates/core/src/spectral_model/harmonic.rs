use nalgebra::{DMatrix, SymmetricEigen};

use super::manifold::MappingTorusSpec;
use super::spectrum::form_spectrum;

/// Clustering tolerance for the eigenvalue 1 of a pull-back.
const FIXED_TOL: f64 = 1e-10;

/// Pull-back data on `H^q(M)` for one degree.
#[derive(Debug, Clone)]
pub struct HarmonicDegree {
    pub degree: usize,
    pub action: DMatrix<f64>,
    pub inverse_action: DMatrix<f64>,
    pub betti: usize,
    pub fixed_dim: usize,
    /// `I − ½(φ* + (φ⁻¹)*)` on the orthogonal complement of the fixed
    /// subspace, written in an orthonormal eigenbasis (hence diagonal).
    pub s_block: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HarmonicActionSet {
    pub degrees: Vec<HarmonicDegree>,
}

impl HarmonicActionSet {
    /// Degree `q`, or an empty degree outside `0..=dim M`.
    pub fn get(&self, q: isize) -> Option<&HarmonicDegree> {
        usize::try_from(q).ok().and_then(|q| self.degrees.get(q))
    }

    pub fn betti(&self, q: isize) -> usize {
        self.get(q).map_or(0, |h| h.betti)
    }

    pub fn fixed_dim(&self, q: isize) -> usize {
        self.get(q).map_or(0, |h| h.fixed_dim)
    }

    pub fn base_dimension(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.degrees
            .iter()
            .map(|h| if h.degree % 2 == 0 { h.betti as i64 } else { -(h.betti as i64) })
            .sum()
    }

    /// The action set of `φ⁻¹`.
    pub fn inverse(&self) -> Self {
        let degrees = self
            .degrees
            .iter()
            .map(|h| HarmonicDegree {
                action: h.inverse_action.clone(),
                inverse_action: h.action.clone(),
                ..h.clone()
            })
            .collect();
        Self { degrees }
    }

    /// `Σ_q (−1)^q ℓ^q_φ`.
    pub fn fixed_euler_characteristic(&self) -> i64 {
        self.degrees
            .iter()
            .map(|h| if h.degree % 2 == 0 { h.fixed_dim as i64 } else { -(h.fixed_dim as i64) })
            .sum()
    }
}

pub fn harmonic_actions(spec: &MappingTorusSpec) -> HarmonicActionSet {
    let iso = spec.isometry();
    let degrees = (0..=spec.base().dimension())
        .map(|q| {
            let stream = form_spectrum(&iso, q, 0.0).expect("degree within range");
            let zero = &stream.blocks[0];
            let (fixed_dim, s_block) = split_fixed(&zero.action);
            HarmonicDegree {
                degree: q,
                action: zero.action.clone(),
                inverse_action: zero.inverse_action.clone(),
                betti: zero.multiplicity(),
                fixed_dim,
                s_block,
            }
        })
        .collect();
    HarmonicActionSet { degrees }
}

/// `(b_q, ℓ_q)` for every degree.
pub fn fixed_dims(h: &HarmonicActionSet) -> Vec<(usize, usize)> {
    h.degrees.iter().map(|d| (d.betti, d.fixed_dim)).collect()
}

fn split_fixed(action: &DMatrix<f64>) -> (usize, DMatrix<f64>) {
    let n = action.nrows();
    let k = DMatrix::identity(n, n) - (action + action.transpose()) * 0.5;
    let eig = SymmetricEigen::new(k);
    let mut positive: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|&x| x > FIXED_TOL)
        .collect();
    positive.sort_by(f64::total_cmp);
    let fixed = n - positive.len();
    (fixed, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(positive)))
}
