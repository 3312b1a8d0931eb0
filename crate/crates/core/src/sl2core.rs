// SPDX-License-Identifier: Apache-2.0

//! Exact SL(2,R) arithmetic: Iwasawa factors, the Möbius action on the
//! projective line, Jacobians of the reference measures, additive cocycles
//! and the infinitesimal generators of the one-parameter subgroups.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|ad - bc - 1|` for a matrix to count as unimodular.
pub const UNIMODULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum Sl2Error {
    #[error("Jacobian evaluated at a pole of the Möbius map (z = {z})")]
    PoleAtZ { z: f64 },
}

/// Rotation factor of the decomposition: compact `K(θ)` or hyperbolic `K̃(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Compact,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SlMatrix {
    pub const IDENTITY: SlMatrix = SlMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn is_unimodular(&self) -> bool {
        (self.det() - 1.0).abs() < UNIMODULAR_TOL
    }

    /// Inverse of a unimodular matrix (the adjugate).
    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn mul(&self, rhs: &SlMatrix) -> SlMatrix {
        SlMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [self.a * x[0] + self.b * x[1], self.c * x[0] + self.d * x[1]]
    }

    /// Compact rotation `K(θ)`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Hyperbolic rotation `K̃(θ)`.
    pub fn hyperbolic(theta: f64) -> Self {
        let (s, c) = (theta.sinh(), theta.cosh());
        Self::new(c, s, s, c)
    }

    /// Diagonal factor `A(w) = diag(e^w, e^-w)`.
    pub fn dilation(w: f64) -> Self {
        Self::new(w.exp(), 0.0, 0.0, (-w).exp())
    }

    /// Upper unipotent factor `N(u)`.
    pub fn shear(u: f64) -> Self {
        Self::new(1.0, u, 0.0, 1.0)
    }

    /// Lower unipotent factor `N₋(u)`.
    pub fn lower_shear(u: f64) -> Self {
        Self::new(1.0, 0.0, u, 1.0)
    }
}

impl std::ops::Mul for SlMatrix {
    type Output = SlMatrix;
    fn mul(self, rhs: SlMatrix) -> SlMatrix {
        SlMatrix::mul(&self, &rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaParams {
    pub theta: f64,
    pub w: f64,
    pub u: f64,
    pub variant: Variant,
}

impl IwasawaParams {
    pub fn new(theta: f64, w: f64, u: f64, variant: Variant) -> Self {
        Self { theta, w, u, variant }
    }
}

/// Returns `K(θ)A(w)N(u)`, or `K̃(θ)A(w)N(u)` for the hyperbolic variant.
pub fn compose_iwasawa(p: &IwasawaParams) -> SlMatrix {
    let (ew, emw) = (p.w.exp(), (-p.w).exp());
    let (cr, sr, sl) = match p.variant {
        Variant::Compact => {
            let (s, c) = p.theta.sin_cos();
            (c, s, -s)
        }
        Variant::Hyperbolic => (p.theta.cosh(), p.theta.sinh(), p.theta.sinh()),
    };
    // [[cr, sl], [sr, cr]] · [[ew, ew u], [0, emw]]
    SlMatrix {
        a: cr * ew,
        b: cr * ew * p.u + sl * emw,
        c: sr * ew,
        d: sr * ew * p.u + cr * emw,
    }
}

/// A point of the real projective line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Finite(f64),
    Infinity,
}

impl Point {
    pub fn finite(self) -> Option<f64> {
        match self {
            Point::Finite(z) => Some(z),
            Point::Infinity => None,
        }
    }

    /// Angle `arctan z` in (-π/2, π/2], with ∞ sent to π/2.
    pub fn angle(self) -> f64 {
        match self {
            Point::Finite(z) => z.atan(),
            Point::Infinity => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Unit representative of the direction, `(z, 1)/√(1+z²)` or `(1, 0)`.
    pub fn unit_vector(self) -> [f64; 2] {
        match self {
            Point::Finite(z) => {
                let n = z.hypot(1.0);
                [z / n, 1.0 / n]
            }
            Point::Infinity => [1.0, 0.0],
        }
    }

    pub fn from_vector(x: [f64; 2]) -> Point {
        if x[1] == 0.0 {
            Point::Infinity
        } else {
            Point::Finite(x[0] / x[1])
        }
    }
}

/// `z ↦ (az+b)/(cz+d)` on the projective line.
pub fn mobius_apply(m: &SlMatrix, z: Point) -> Point {
    match z {
        Point::Infinity => {
            if m.c == 0.0 {
                Point::Infinity
            } else {
                Point::Finite(m.a / m.c)
            }
        }
        Point::Finite(z) => {
            let den = m.c * z + m.d;
            if den == 0.0 {
                Point::Infinity
            } else {
                Point::Finite((m.a * z + m.b) / den)
            }
        }
    }
}

/// Reference density used to define a Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JacobianKind {
    /// Flat measure dz.
    N,
    /// dz/|2z|.
    A,
    /// dz/(1+z²).
    K,
    /// dz/|z²-1|.
    Ktilde,
    /// dz/z².
    Nminus,
}

impl JacobianKind {
    pub const ALL: [JacobianKind; 5] = [
        JacobianKind::N,
        JacobianKind::A,
        JacobianKind::K,
        JacobianKind::Ktilde,
        JacobianKind::Nminus,
    ];

    pub fn density(self, z: f64) -> f64 {
        match self {
            JacobianKind::N => 1.0,
            JacobianKind::A => 1.0 / (2.0 * z).abs(),
            JacobianKind::K => 1.0 / (1.0 + z * z),
            JacobianKind::Ktilde => 1.0 / (z * z - 1.0).abs(),
            JacobianKind::Nminus => 1.0 / (z * z),
        }
    }

    /// Logarithmic derivative `ρ'(z)/ρ(z)`.
    pub fn log_density_derivative(self, z: f64) -> f64 {
        match self {
            JacobianKind::N => 0.0,
            JacobianKind::A => -1.0 / z,
            JacobianKind::K => -2.0 * z / (1.0 + z * z),
            JacobianKind::Ktilde => -2.0 * z / (z * z - 1.0),
            JacobianKind::Nminus => -2.0 / z,
        }
    }
}

/// Jacobian `J(M, z) = ρ(𝓜(z)) 𝓜'(z) / ρ(z)` of the reference measure.
///
/// Kind A is returned as a magnitude.
pub fn jacobian(kind: JacobianKind, m: &SlMatrix, z: f64) -> Result<f64, Sl2Error> {
    let num = m.a * z + m.b;
    let den = m.c * z + m.d;
    if den == 0.0 {
        return Err(Sl2Error::PoleAtZ { z });
    }
    let j = match kind {
        JacobianKind::N => 1.0 / (den * den),
        JacobianKind::A => {
            if num == 0.0 {
                return Err(Sl2Error::PoleAtZ { z });
            }
            (z / (num * den)).abs()
        }
        JacobianKind::K => (1.0 + z * z) / (num * num + den * den),
        JacobianKind::Ktilde => {
            let q = num * num - den * den;
            if q == 0.0 {
                return Err(Sl2Error::PoleAtZ { z });
            }
            (z * z - 1.0).abs() / q.abs()
        }
        JacobianKind::Nminus => {
            if num == 0.0 {
                return Err(Sl2Error::PoleAtZ { z });
            }
            z * z / (num * num)
        }
    };
    if j.is_finite() && j > 0.0 {
        Ok(j)
    } else {
        Err(Sl2Error::PoleAtZ { z })
    }
}

/// Additive cocycle `σ(M, z) = ln J(M, z)`.
pub fn cocycle(kind: JacobianKind, m: &SlMatrix, z: f64) -> Result<f64, Sl2Error> {
    jacobian(kind, m, z).map(f64::ln)
}

/// One-parameter subgroups whose generators appear in the continuum operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subgroup {
    K,
    Ktilde,
    A,
    N,
    Nminus,
}

impl Subgroup {
    pub const ALL: [Subgroup; 5] = [
        Subgroup::K,
        Subgroup::Ktilde,
        Subgroup::A,
        Subgroup::N,
        Subgroup::Nminus,
    ];

    /// Matrix generator Γ with `exp(αΓ)` the subgroup element of parameter α.
    pub fn matrix_generator(self) -> [[f64; 2]; 2] {
        match self {
            Subgroup::K => [[0.0, -1.0], [1.0, 0.0]],
            Subgroup::Ktilde => [[0.0, 1.0], [1.0, 0.0]],
            Subgroup::A => [[1.0, 0.0], [0.0, -1.0]],
            Subgroup::N => [[0.0, 1.0], [0.0, 0.0]],
            Subgroup::Nminus => [[0.0, 0.0], [1.0, 0.0]],
        }
    }

    /// Coefficients `(g₀, g₁, g₂)` of the generator function `g(z) = g₀ + g₁z + g₂z²`.
    pub fn generator_coefficients(self) -> [f64; 3] {
        match self {
            Subgroup::K => [1.0, 0.0, 1.0],
            Subgroup::Ktilde => [-1.0, 0.0, 1.0],
            Subgroup::A => [0.0, -2.0, 0.0],
            Subgroup::N => [-1.0, 0.0, 0.0],
            Subgroup::Nminus => [0.0, 0.0, 1.0],
        }
    }

    pub fn g(self, z: f64) -> f64 {
        let [c0, c1, c2] = self.generator_coefficients();
        c0 + z * (c1 + z * c2)
    }

    pub fn dg(self, z: f64) -> f64 {
        let [_, c1, c2] = self.generator_coefficients();
        c1 + 2.0 * c2 * z
    }

    pub fn d2g(self) -> f64 {
        2.0 * self.generator_coefficients()[2]
    }
}

/// Generator function of an arbitrary traceless matrix `[[p, q], [r, -p]]`,
/// from `exp(αΓ)(z) = z - α g(z) + O(α²)`.
pub fn generator_from_matrix(m: [[f64; 2]; 2]) -> [f64; 3] {
    let (p, q, r) = (m[0][0], m[0][1], m[1][0]);
    [-q, -2.0 * p, r]
}

/// Coordinates of a traceless matrix in the basis (Γ_K, Γ_A, Γ_N).
pub fn decompose_kan(m: [[f64; 2]; 2]) -> [f64; 3] {
    let (x, y, z) = (m[0][0], m[0][1], m[1][0]);
    [z, x, y + z]
}

fn commutator(x: [[f64; 2]; 2], y: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mul = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
        [
            [
                p[0][0] * q[0][0] + p[0][1] * q[1][0],
                p[0][0] * q[0][1] + p[0][1] * q[1][1],
            ],
            [
                p[1][0] * q[0][0] + p[1][1] * q[1][0],
                p[1][0] * q[0][1] + p[1][1] * q[1][1],
            ],
        ]
    };
    let a = mul(x, y);
    let b = mul(y, x);
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

/// Structure constants of `[Γ_i, Γ_j]` in the (K, A, N) basis, computed from
/// the 2×2 commutator.
pub fn derived_structure_constants(i: Subgroup, j: Subgroup) -> [f64; 3] {
    decompose_kan(commutator(i.matrix_generator(), j.matrix_generator()))
}

/// Tabulated commutation relations `[i, j] = Σ c_ijk k`, each written in the
/// basis natural for that pair.
pub fn structure_constants(i: Subgroup, j: Subgroup) -> Vec<(Subgroup, f64)> {
    use Subgroup::*;
    let direct = |i, j| -> Option<Vec<(Subgroup, f64)>> {
        match (i, j) {
            (K, A) => Some(vec![(K, 2.0), (N, 4.0)]),
            (A, N) => Some(vec![(N, 2.0)]),
            (N, K) => Some(vec![(A, 1.0)]),
            (Ktilde, A) => Some(vec![(Ktilde, 2.0), (N, -4.0)]),
            (N, Ktilde) => Some(vec![(A, 1.0)]),
            (N, Nminus) => Some(vec![(A, 1.0)]),
            (A, Nminus) => Some(vec![(Nminus, -2.0)]),
            (K, Nminus) => Some(vec![(A, -1.0)]),
            (K, Ktilde) => Some(vec![(A, -2.0)]),
            _ => None,
        }
    };
    if i == j {
        return Vec::new();
    }
    if let Some(v) = direct(i, j) {
        return v;
    }
    if let Some(v) = direct(j, i) {
        return v.into_iter().map(|(k, c)| (k, -c)).collect();
    }
    let kan = derived_structure_constants(i, j);
    vec![(K, kan[0]), (A, kan[1]), (N, kan[2])]
}

/// Wronskian `𝒲[f, g] = f g' - f' g` of two generator functions.
pub fn wronskian(i: Subgroup, j: Subgroup, z: f64) -> f64 {
    i.g(z) * j.dg(z) - i.dg(z) * j.g(z)
}

/// `𝒲[g_i, g_j](z) - Σ_k c_ijk g_k(z)`, which vanishes identically.
pub fn lie_residual(i: Subgroup, j: Subgroup, z: f64) -> f64 {
    let rhs: f64 = structure_constants(i, j).iter().map(|(k, c)| c * k.g(z)).sum();
    wronskian(i, j, z) - rhs
}

/// `h_i(z) = (g_i ρ)' / (2ρ)` for the reference density of `kind`.
pub fn h_from_density(kind: JacobianKind, i: Subgroup, z: f64) -> f64 {
    0.5 * (i.dg(z) + i.g(z) * kind.log_density_derivative(z))
}

/// Closed forms of `h_i` for every (subgroup, density) pair.
pub fn h_tabulated(kind: JacobianKind, i: Subgroup, z: f64) -> f64 {
    use JacobianKind as J;
    use Subgroup as S;
    let z2 = z * z;
    match (i, kind) {
        (S::Ktilde, J::N) => z,
        (S::Ktilde, J::A) => (z2 + 1.0) / (2.0 * z),
        (S::Ktilde, J::K) => 2.0 * z / (z2 + 1.0),
        (S::Ktilde, J::Ktilde) => 0.0,
        (S::Ktilde, J::Nminus) => 1.0 / z,
        (S::K, J::N) => z,
        (S::K, J::A) => (z2 - 1.0) / (2.0 * z),
        (S::K, J::K) => 0.0,
        (S::K, J::Ktilde) => 2.0 * z / (1.0 - z2),
        (S::K, J::Nminus) => -1.0 / z,
        (S::A, J::N) => -1.0,
        (S::A, J::A) => 0.0,
        (S::A, J::K) => (z2 - 1.0) / (z2 + 1.0),
        (S::A, J::Ktilde) => (z2 + 1.0) / (z2 - 1.0),
        (S::A, J::Nminus) => 1.0,
        (S::N, J::N) => 0.0,
        (S::N, J::A) => 1.0 / (2.0 * z),
        (S::N, J::K) => z / (z2 + 1.0),
        (S::N, J::Ktilde) => z / (z2 - 1.0),
        (S::N, J::Nminus) => 1.0 / z,
        (S::Nminus, J::N) => z,
        (S::Nminus, J::A) => z / 2.0,
        (S::Nminus, J::K) => z / (z2 + 1.0),
        (S::Nminus, J::Ktilde) => -z / (z2 - 1.0),
        (S::Nminus, J::Nminus) => 0.0,
    }
}

/// First derivative of the tabulated `h`.
pub fn dh_tabulated(kind: JacobianKind, i: Subgroup, z: f64) -> f64 {
    use JacobianKind as J;
    use Subgroup as S;
    let z2 = z * z;
    let p = (z2 + 1.0) * (z2 + 1.0);
    let m = (z2 - 1.0) * (z2 - 1.0);
    match (i, kind) {
        (S::Ktilde, J::N) | (S::K, J::N) | (S::Nminus, J::N) => 1.0,
        (S::Ktilde, J::A) => 0.5 - 0.5 / z2,
        (S::Ktilde, J::K) => 2.0 * (1.0 - z2) / p,
        (S::Ktilde, J::Nminus) | (S::N, J::Nminus) => -1.0 / z2,
        (S::K, J::A) => 0.5 + 0.5 / z2,
        (S::K, J::Ktilde) => 2.0 * (1.0 + z2) / m,
        (S::K, J::Nminus) => 1.0 / z2,
        (S::A, J::K) => 4.0 * z / p,
        (S::A, J::Ktilde) => -4.0 * z / m,
        (S::N, J::A) => -0.5 / z2,
        (S::N, J::K) | (S::Nminus, J::K) => (1.0 - z2) / p,
        (S::N, J::Ktilde) => -(z2 + 1.0) / m,
        (S::Nminus, J::A) => 0.5,
        (S::Nminus, J::Ktilde) => (z2 + 1.0) / m,
        (S::Ktilde, J::Ktilde)
        | (S::K, J::K)
        | (S::A, J::N)
        | (S::A, J::A)
        | (S::A, J::Nminus)
        | (S::N, J::N)
        | (S::Nminus, J::Nminus) => 0.0,
    }
}
