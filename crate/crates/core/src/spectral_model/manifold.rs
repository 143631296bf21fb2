use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};

/// A flat closed base manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ManifoldSpec {
    /// Round circle of radius `radius` (length `2π·radius`).
    Circle { radius: f64 },
    /// Rectangular flat torus with side lengths `l1`, `l2`.
    RectTorus { l1: f64, l2: f64 },
}

impl ManifoldSpec {
    pub fn circle(radius: f64) -> Result<Self> {
        require_positive("rho", radius)?;
        Ok(Self::Circle { radius })
    }

    pub fn rect_torus(l1: f64, l2: f64) -> Result<Self> {
        require_positive("l1", l1)?;
        require_positive("l2", l2)?;
        Ok(Self::RectTorus { l1, l2 })
    }

    /// The torus `S¹(1) × S¹(1)`.
    pub fn unit_torus() -> Self {
        Self::RectTorus {
            l1: 2.0 * PI,
            l2: 2.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Circle { radius } => require_positive("rho", radius),
            Self::RectTorus { l1, l2 } => {
                require_positive("l1", l1)?;
                require_positive("l2", l2)
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Circle { .. } => 1,
            Self::RectTorus { .. } => 2,
        }
    }

    /// Side lengths of the fundamental box, one per angle coordinate.
    pub fn lengths(&self) -> Vec<f64> {
        match *self {
            Self::Circle { radius } => vec![2.0 * PI * radius],
            Self::RectTorus { l1, l2 } => vec![l1, l2],
        }
    }

    /// Riemannian volume.
    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn euler_characteristic(&self) -> i64 {
        0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::RectTorus { .. } => "rect-torus",
        }
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle { radius } => write!(f, "S1(rho={radius})"),
            Self::RectTorus { l1, l2 } => write!(f, "T2({l1} x {l2})"),
        }
    }
}

/// The metric-preserving maps that can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IsometryKind {
    Identity,
    /// `ρe^{iθ} ↦ ρe^{-iθ}`.
    CircleReflection,
    /// `θ ↦ θ + angle`.
    CircleRotation { angle: f64 },
    /// `(e^{iθ}, e^{iφ}) ↦ (e^{iφ}, e^{i(θ+π)})` on a square torus.
    TorusSwapShift,
}

impl fmt::Display for IsometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::CircleReflection => write!(f, "circle-reflection"),
            Self::CircleRotation { angle } => write!(f, "circle-rotation({angle})"),
            Self::TorusSwapShift => write!(f, "torus-swap-shift"),
        }
    }
}

/// An isometry together with the base it acts on. Only metric-preserving
/// combinations can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometrySpec {
    kind: IsometryKind,
    base: ManifoldSpec,
}

impl IsometrySpec {
    pub fn new(kind: IsometryKind, base: ManifoldSpec) -> Result<Self> {
        base.validate()?;
        let mismatch = || Error::IsometryMismatch {
            isometry: kind.to_string(),
            base: base.to_string(),
        };
        match (kind, base) {
            (IsometryKind::Identity, _) => {}
            (IsometryKind::CircleReflection, ManifoldSpec::Circle { .. }) => {}
            (IsometryKind::CircleRotation { angle }, ManifoldSpec::Circle { .. }) => {
                if !angle.is_finite() {
                    return Err(invalid("angle", "must be finite"));
                }
            }
            (IsometryKind::TorusSwapShift, ManifoldSpec::RectTorus { l1, l2 }) => {
                if (l1 - l2).abs() > 1e-12 * l1.max(l2) {
                    return Err(invalid(
                        "l2",
                        format!("swap-shift needs a square torus, got {l1} x {l2}"),
                    ));
                }
            }
            _ => return Err(mismatch()),
        }
        Ok(Self { kind, base })
    }

    pub fn identity(base: ManifoldSpec) -> Result<Self> {
        Self::new(IsometryKind::Identity, base)
    }

    pub fn kind(&self) -> IsometryKind {
        self.kind
    }

    pub fn base(&self) -> ManifoldSpec {
        self.base
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, IsometryKind::Identity)
    }

    /// `+1` when orientation preserving, `-1` otherwise.
    pub fn orientation_sign(&self) -> i32 {
        self.affine().linear_det()
    }

    pub(crate) fn affine(&self) -> AffineAction {
        let d = self.base.dimension();
        match self.kind {
            IsometryKind::Identity => AffineAction::identity(d),
            IsometryKind::CircleReflection => AffineAction {
                linear: vec![vec![-1]],
                shift_turns: vec![0.0],
            },
            IsometryKind::CircleRotation { angle } => AffineAction {
                linear: vec![vec![1]],
                shift_turns: vec![angle / (2.0 * PI)],
            },
            IsometryKind::TorusSwapShift => AffineAction {
                linear: vec![vec![0, 1], vec![1, 0]],
                shift_turns: vec![0.0, 0.5],
            },
        }
    }
}

/// `θ ↦ Pθ + 2π·shift_turns` in angle coordinates, `P` a signed permutation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AffineAction {
    pub linear: Vec<Vec<i64>>,
    pub shift_turns: Vec<f64>,
}

impl AffineAction {
    pub fn identity(d: usize) -> Self {
        let linear = (0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect();
        Self {
            linear,
            shift_turns: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `Pᵀ m`: frequency of `θ ↦ e^{i m·(Pθ+β)}`.
    pub fn pull_frequency(&self, m: &[i64]) -> Vec<i64> {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| self.linear[i][j] * m[i]).sum())
            .collect()
    }

    /// Phase `m·β` in turns.
    pub fn phase_turns(&self, m: &[i64]) -> f64 {
        m.iter()
            .zip(&self.shift_turns)
            .map(|(&mi, &b)| mi as f64 * b)
            .sum()
    }

    /// `θ ↦ Pᵀθ - Pᵀβ`.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let linear: Vec<Vec<i64>> = (0..d)
            .map(|i| (0..d).map(|j| self.linear[j][i]).collect())
            .collect();
        let shift_turns = (0..d)
            .map(|i| -(0..d).map(|j| linear[i][j] as f64 * self.shift_turns[j]).sum::<f64>())
            .collect();
        Self {
            linear,
            shift_turns,
        }
    }

    pub fn linear_det(&self) -> i32 {
        match self.dim() {
            1 => self.linear[0][0] as i32,
            2 => (self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]) as i32,
            _ => unreachable!("bases have dimension 1 or 2"),
        }
    }
}

/// `M × [0, a] / (x, 0) ~ (φ(x), a)` with `φ` an isometry of the flat base `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingTorusSpec {
    base: ManifoldSpec,
    isometry: IsometrySpec,
    interval_length: f64,
}

impl MappingTorusSpec {
    pub fn new(isometry: IsometrySpec, interval_length: f64) -> Result<Self> {
        require_positive("a", interval_length)?;
        Ok(Self {
            base: isometry.base(),
            isometry,
            interval_length,
        })
    }

    /// Klein bottle: circle of radius `rho` glued by the reflection.
    pub fn klein_bottle(a: f64, rho: f64) -> Result<Self> {
        let base = ManifoldSpec::circle(rho)?;
        Self::new(IsometrySpec::new(IsometryKind::CircleReflection, base)?, a)
    }

    /// The non-product co-Kähler example: unit square torus, swap-shift, `a = 2π`.
    pub fn t2_phi() -> Self {
        let base = ManifoldSpec::unit_torus();
        Self::new(
            IsometrySpec::new(IsometryKind::TorusSwapShift, base).expect("square torus"),
            2.0 * PI,
        )
        .expect("a = 2π")
    }

    pub fn circle_rotation(a: f64, rho: f64, angle: f64) -> Result<Self> {
        let base = ManifoldSpec::circle(rho)?;
        Self::new(IsometrySpec::new(IsometryKind::CircleRotation { angle }, base)?, a)
    }

    /// `M × S¹(a/2π)`.
    pub fn product(base: ManifoldSpec, a: f64) -> Result<Self> {
        Self::new(IsometrySpec::identity(base)?, a)
    }

    pub fn base(&self) -> ManifoldSpec {
        self.base
    }

    pub fn isometry(&self) -> IsometrySpec {
        self.isometry
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }

    /// Dimension of the mapping torus (`dim M + 1`).
    pub fn dimension(&self) -> usize {
        self.base.dimension() + 1
    }
}
