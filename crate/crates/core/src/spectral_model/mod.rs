//! Flat base manifolds, their isometries, and Laplace spectra on q-forms with
//! the pull-back action of the isometry on every eigenspace.
//!
//! Everything is expressed in real (cosine/sine) eigenbases so that pull-back
//! matrices are real orthogonal. Forms are handled in the parallel frame
//! `dθ_I`: on a flat torus the q-form Laplacian is the scalar Laplacian acting
//! componentwise, and an affine isometry acts by the point map tensored with
//! the induced frame map.

mod harmonic;
mod manifold;
mod spectrum;

pub use harmonic::{fixed_dims, harmonic_actions, HarmonicActionSet, HarmonicDegree};
pub use manifold::{IsometryKind, IsometrySpec, ManifoldSpec, MappingTorusSpec};
pub use spectrum::{
    circle_spectrum, form_spectrum, kappa_spectrum, orthogonality_defect, torus_spectrum,
    EigenBlock, ShellKey, SpectrumStream,
};

/// Binomial coefficient for small arguments (form-bundle ranks).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
