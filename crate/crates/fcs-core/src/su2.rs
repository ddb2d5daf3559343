//! Spin representations of SU(2).
//!
//! Provides the generator matrices of every finite-dimensional irreducible
//! representation, group elements by exponentiation, Clebsch-Gordan
//! coefficients in the Condon-Shortley convention with exact rational
//! arithmetic under the square root, the feasibility rule for embedding an
//! auxiliary spin into a site⊗auxiliary tensor product, and the
//! Frobenius-Schur indicator deciding when a representation admits a real
//! form (integer spins do, half-integer spins do not).
//!
//! Spins are stored as doubled integers (`twice_j`) so half-integers are
//! exact; all magnetic quantum numbers are likewise doubled (`twice_m`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::numerics::{expm, CMatrix, C64};

/// Tolerance for the internal consistency checks of the Frobenius-Schur test.
const FS_TOL: f64 = 1e-8;

/// Errors from representation-theoretic operations.
#[derive(Debug, Error)]
pub enum Su2Error {
    /// The conjugation matrix failed its defining identities; indicates a
    /// numerical breakdown rather than a user error.
    #[error("internal consistency failure in Frobenius-Schur test: {what}")]
    InternalConsistency { what: String },
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Error from parsing a [`Spin`] out of a string.
#[derive(Debug, Error)]
#[error("cannot parse {input:?} as a spin: expected a nonnegative integer or half-integer like \"1\", \"1/2\", \"0.5\"")]
pub struct ParseSpinError {
    input: String,
}

/// A spin quantum number j ∈ {0, 1/2, 1, 3/2, …}, stored exactly as 2j.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    /// Spin from its doubled value: `Spin::from_twice(3)` is j = 3/2.
    pub const fn from_twice(twice_j: u32) -> Self {
        Self { twice_j }
    }

    /// The doubled value 2j.
    pub const fn twice(self) -> u32 {
        self.twice_j
    }

    /// The value j as a float (exact for all representable spins).
    pub fn j(self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    /// Representation dimension d = 2j + 1.
    pub const fn dimension(self) -> usize {
        self.twice_j as usize + 1
    }

    /// True for integer spins (j ∈ ℤ), false for half-integers.
    pub const fn is_integer(self) -> bool {
        self.twice_j % 2 == 0
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice_j / 2)
        } else {
            write!(f, "{}/2", self.twice_j)
        }
    }
}

impl FromStr for Spin {
    type Err = ParseSpinError;

    /// Accepts `"2"`, `"3/2"`, `"1.5"`, and similar; the value must be a
    /// nonnegative integer or half-integer.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSpinError {
            input: s.to_string(),
        };
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| err())?;
            let den: u32 = den.trim().parse().map_err(|_| err())?;
            return match den {
                1 => Ok(Self::from_twice(num.checked_mul(2).ok_or_else(err)?)),
                2 => Ok(Self::from_twice(num)),
                _ => Err(err()),
            };
        }
        let v: f64 = s.parse().map_err(|_| err())?;
        if !v.is_finite() || v < 0.0 {
            return Err(err());
        }
        let doubled = v * 2.0;
        let rounded = doubled.round();
        if (doubled - rounded).abs() > 1e-9 || rounded > f64::from(u32::MAX) {
            return Err(err());
        }
        Ok(Self::from_twice(rounded as u32))
    }
}

/// A spin-j irreducible representation by its Lie-algebra generators in the
/// standard |j,m⟩ basis with m descending (row 0 ↔ m = j, row d−1 ↔ m = −j).
///
/// Invariants (established by [`make_irrep`], asserted in tests):
/// * [sx,sy] = i·sz and cyclic permutations,
/// * sz = diag(j, j−1, …, −j) exactly,
/// * sx, sz real symmetric; sy purely imaginary; all Hermitian,
/// * sx² + sy² + sz² = j(j+1)·I.
#[derive(Clone, Debug)]
pub struct Irrep {
    spin: Spin,
    sx: CMatrix,
    sy: CMatrix,
    sz: CMatrix,
}

impl Irrep {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn dimension(&self) -> usize {
        self.spin.dimension()
    }

    pub fn sx(&self) -> &CMatrix {
        &self.sx
    }

    pub fn sy(&self) -> &CMatrix {
        &self.sy
    }

    pub fn sz(&self) -> &CMatrix {
        &self.sz
    }

    /// Generators in axis order [sx, sy, sz].
    pub fn generators(&self) -> [&CMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

/// Builds the spin-j irreducible representation by the ladder construction:
/// (sz)_{mm} = m, (s±)_{m±1,m} = √(j(j+1) − m(m±1)), sx = (s₊+s₋)/2,
/// sy = (s₊−s₋)/(2i).
pub fn make_irrep(spin: Spin) -> Irrep {
    let d = spin.dimension();
    let tj = i64::from(spin.twice());
    // Row index a ↔ twice_m = 2j − 2a (descending).
    let twice_m = |a: usize| tj - 2 * a as i64;

    let mut sz = CMatrix::zeros(d, d);
    for a in 0..d {
        sz[(a, a)] = C64::new(twice_m(a) as f64 / 2.0, 0.0);
    }

    // Ladder coefficient √(j(j+1) − m(m±1)) = ½·√(2j(2j+2) − 2m(2m±2)⁄…),
    // computed from doubled values: j(j+1) − m(m+1) = (tj(tj+2) − tm(tm+2))/4.
    let raise = |tm: i64| (((tj * (tj + 2) - tm * (tm + 2)) as f64) / 4.0).sqrt();
    let lower = |tm: i64| (((tj * (tj + 2) - tm * (tm - 2)) as f64) / 4.0).sqrt();

    let mut sp = CMatrix::zeros(d, d); // s₊
    let mut sm = CMatrix::zeros(d, d); // s₋
    for a in 0..d {
        let tm = twice_m(a);
        if a > 0 {
            // s₊|j,m⟩ lands on row of m+1, which is a−1.
            sp[(a - 1, a)] = C64::new(raise(tm), 0.0);
        }
        if a + 1 < d {
            sm[(a + 1, a)] = C64::new(lower(tm), 0.0);
        }
    }

    let half = C64::new(0.5, 0.0);
    let minus_half_i = C64::new(0.0, -0.5);
    let sx = (&sp + &sm).scaled(half);
    let sy = (&sp - &sm).scaled(minus_half_i);

    Irrep { spin, sx, sy, sz }
}

/// Group element exp(−i axis·(sx, sy, sz)); unitary since the generators are
/// Hermitian.
pub fn group_element(irrep: &Irrep, axis: [f64; 3]) -> CMatrix {
    let mut gen = CMatrix::zeros(irrep.dimension(), irrep.dimension());
    for (coeff, s) in axis.iter().zip(irrep.generators()) {
        gen = &gen + &s.scaled(C64::new(0.0, -coeff));
    }
    expm(&gen).expect("generator matrix is square")
}

fn factorial(k: i64) -> BigInt {
    debug_assert!(k >= 0, "factorial of negative argument");
    let mut acc = BigInt::from(1);
    for i in 2..=k {
        acc *= i;
    }
    acc
}

/// Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | j m⟩ as a *signed square*:
/// the exact rational number sign(c)·c², so that the coefficient itself is
/// sign(q)·√|q|. All selection-rule violations (m-sum, m-range, lattice
/// parity, triangle rule) return exactly zero.
///
/// The exact representation exists because the Racah formula expresses the
/// coefficient as (rational alternating sum)·√(rational), making its square
/// rational; keeping it exact eliminates the sign errors that plague
/// floating-point Clebsch-Gordan evaluations and lets tests verify recursion
/// identities with no tolerance at all.
pub fn cg_signed_square(
    j1: Spin,
    j2: Spin,
    j: Spin,
    twice_m1: i32,
    twice_m2: i32,
    twice_m: i32,
) -> BigRational {
    let zero = BigRational::zero();
    let (tj1, tj2, tj) = (
        i64::from(j1.twice()),
        i64::from(j2.twice()),
        i64::from(j.twice()),
    );
    let (tm1, tm2, tm) = (i64::from(twice_m1), i64::from(twice_m2), i64::from(twice_m));

    // Selection rules.
    if tm1 + tm2 != tm
        || tm1.abs() > tj1
        || tm2.abs() > tj2
        || tm.abs() > tj
        || (tj1 + tm1) % 2 != 0
        || (tj2 + tm2) % 2 != 0
        || (tj + tm) % 2 != 0
    {
        return zero;
    }
    // Triangle rule, including the integrality of j1 + j2 − j.
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return zero;
    }

    let half = |x: i64| {
        debug_assert!(x % 2 == 0);
        x / 2
    };

    // Racah's closed form: the alternating sum is rational, everything else
    // sits under a single square root.
    let k_min = 0.max(-half(tj - tj2 + tm1)).max(-half(tj - tj1 - tm2));
    let k_max = half(tj1 + tj2 - tj)
        .min(half(tj1 - tm1))
        .min(half(tj2 + tm2));

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(half(tj1 + tj2 - tj) - k)
            * factorial(half(tj1 - tm1) - k)
            * factorial(half(tj2 + tm2) - k)
            * factorial(half(tj - tj2 + tm1) + k)
            * factorial(half(tj - tj1 - tm2) + k);
        let term = BigRational::new(BigInt::from(1), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return zero;
    }

    // Radicand: (2j+1) · Δ(j1,j2,j)² · product of the six m-factorials.
    let delta_sq = BigRational::new(
        factorial(half(tj1 + tj2 - tj))
            * factorial(half(tj1 - tj2 + tj))
            * factorial(half(-tj1 + tj2 + tj)),
        factorial(half(tj1 + tj2 + tj) + 1),
    );
    let m_factorials = factorial(half(tj + tm))
        * factorial(half(tj - tm))
        * factorial(half(tj1 - tm1))
        * factorial(half(tj1 + tm1))
        * factorial(half(tj2 - tm2))
        * factorial(half(tj2 + tm2));
    let radicand =
        BigRational::from(BigInt::from(tj + 1)) * delta_sq * BigRational::from(m_factorials);

    // Signed square: sign(sum) · sum² · radicand.
    let signed = &sum * &sum * radicand;
    if sum.is_negative() {
        -signed
    } else {
        signed
    }
}

/// Condon-Shortley Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | j m⟩, with the
/// magnetic numbers passed as doubled integers. Computed exactly as a signed
/// square rational and converted to float only at this boundary. Triangle or
/// selection-rule violations return 0 (not an error).
pub fn cg_coefficient(
    j1: Spin,
    j2: Spin,
    j: Spin,
    twice_m1: i32,
    twice_m2: i32,
    twice_m: i32,
) -> f64 {
    let q = cg_signed_square(j1, j2, j, twice_m1, twice_m2, twice_m);
    let magnitude = q.abs().to_f64().expect("CG square fits in f64").sqrt();
    if q.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// Feasibility of the covariant embedding: an auxiliary spin t supports a
/// site-spin-s covariant system iff t − |t − s| is a nonnegative integer,
/// i.e. iff t occurs (exactly once) in the decomposition of s ⊗ t.
///
/// Consequences: half-integer s is never feasible; integer s is feasible for
/// every t ≥ s; for t < s feasibility requires 2t − s ∈ ℤ≥0.
pub fn feasible_aux(s: Spin, t: Spin) -> bool {
    let (s2, t2) = (i64::from(s.twice()), i64::from(t.twice()));
    let k2 = t2 - (t2 - s2).abs(); // = 2·(t − |t − s|)
    k2 >= 0 && k2 % 2 == 0
}

/// The conjugation matrix C = exp(iπ·sy) used by the Frobenius-Schur test;
/// it satisfies C·v·C* = conj(v) on every group element v.
fn conjugation_matrix(irrep: &Irrep) -> CMatrix {
    expm(&irrep.sy().scaled(C64::new(0.0, std::f64::consts::PI)))
        .expect("generator matrix is square")
}

/// Frobenius-Schur indicator: +1 when the representation admits a real form
/// (integer spin), −1 when it does not (half-integer spin; quaternionic).
///
/// Computes C = exp(iπ·sy), verifies C·v·C* = conj(v) on a fixed set of group
/// elements, and classifies C as symmetric (+1) or antisymmetric (−1).
pub fn frobenius_schur(irrep: &Irrep) -> Result<i32, Su2Error> {
    let c = conjugation_matrix(irrep);
    let c_adj = c.adjoint();

    // Deterministic probe axes exercising all three generators and a mix.
    let axes: [[f64; 3]; 5] = [
        [0.7, 0.0, 0.0],
        [0.0, 1.1, 0.0],
        [0.0, 0.0, 0.4],
        [0.3, -0.8, 0.5],
        [std::f64::consts::PI, 0.2, -1.0],
    ];
    for axis in axes {
        let v = group_element(irrep, axis);
        let lhs = &(&c * &v) * &c_adj;
        let dev = lhs.max_abs_diff(&v.conjugate());
        if dev > FS_TOL {
            return Err(Su2Error::InternalConsistency {
                what: format!("C v C* deviates from conj(v) by {dev:.3e} on axis {axis:?}"),
            });
        }
    }

    let ct = c.transpose();
    let sym = ct.max_abs_diff(&c);
    let antisym = (&ct + &c).max_abs();
    if sym <= FS_TOL {
        Ok(1)
    } else if antisym <= FS_TOL {
        Ok(-1)
    } else {
        Err(Su2Error::InternalConsistency {
            what: format!(
                "C is neither symmetric nor antisymmetric (deviations {sym:.3e} / {antisym:.3e})"
            ),
        })
    }
}

/// For representations with Frobenius-Schur indicator +1, returns a unitary W
/// such that W·v·W* has real entries for every group element v; returns
/// `None` for indicator −1 (no real form exists).
///
/// Construction: the conjugation matrix C = exp(iπ·sy) is a symmetric unitary
/// coupling m ↔ −m; factoring C = Wᵀ·W with W unitary (an Autonne-Takagi
/// factorization, done here in closed form on the 2×2 blocks of each ±m pair)
/// makes conj(W·v·W*) = W·v·W* for all v, because conj(v) = C·v·C*.
pub fn real_basis(irrep: &Irrep) -> Result<Option<CMatrix>, Su2Error> {
    if frobenius_schur(irrep)? == -1 {
        return Ok(None);
    }
    let c = conjugation_matrix(irrep);
    let d = irrep.dimension();
    let mut w = CMatrix::zeros(d, d);
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i_unit = C64::new(0.0, 1.0);
    for a in 0..d {
        let partner = d - 1 - a; // index of −m for the m at index a
        if a < partner {
            // 2×2 block [[0, c],[c, 0]]: take X = √(−i·c)·(1/√2)·[[1, i],[i, 1]],
            // which is unitary and satisfies Xᵀ·X = [[0, c],[c, 0]].
            let phase = (C64::new(0.0, -1.0) * c[(partner, a)]).sqrt();
            w[(a, a)] = phase * inv_sqrt2;
            w[(a, partner)] = phase * i_unit * inv_sqrt2;
            w[(partner, a)] = phase * i_unit * inv_sqrt2;
            w[(partner, partner)] = phase * inv_sqrt2;
        } else if a == partner {
            // Central m = 0 entry: 1×1 block [c] = [w²].
            w[(a, a)] = c[(a, a)].sqrt();
        }
    }
    Ok(Some(w))
}
