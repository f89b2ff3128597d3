//! Fixed-size linear algebra on R^2 and R^4: the standard structures, symplectic
//! matrices, Lagrangian frames and exact half-integer index values.
//!
//! Conventions used throughout the crate:
//!
//! * `J0 = [[0,-1],[1,0]]` is the complex structure on R^2 = C.
//! * The symplectic form is `omega(a, b) = a^T W b` with `W = [[0,1],[-1,0]]`,
//!   i.e. `omega = dx ^ dy`. Note `W = -J0`.
//! * `I = diag(1,-1)` is complex conjugation; `Fix I` is the real axis.
//! * On R^4 = R^2 x R^2 the product form is `(-omega) + omega`, for which both the
//!   anti-graph `{(x, -Mx)}` of a symplectic `M` and the anti-diagonal
//!   `{(x, -x)}` are Lagrangian.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;

/// Default tolerance for "is this matrix symplectic".
pub const SYMPLECTIC_TOL: f64 = 1e-9;
/// Default relative tolerance for rank and intersection decisions.
pub const RANK_TOL: f64 = 1e-8;

/// An exact element of `(1/2) Z`, stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt { twice }
    }

    pub const fn from_int(value: i64) -> Self {
        HalfInt { twice: 2 * value }
    }

    /// Rounds `2 * value` to the nearest integer.
    pub fn round_from_f64(value: f64) -> Self {
        HalfInt { twice: (2.0 * value).round() as i64 }
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Numerator of the reduced fraction with denominator 1 or 2.
    pub const fn num(self) -> i64 {
        if self.is_integer() {
            self.twice / 2
        } else {
            self.twice
        }
    }

    pub const fn den(self) -> i64 {
        if self.is_integer() {
            1
        } else {
            2
        }
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Largest integer `<= self`.
    pub fn floor(self) -> i64 {
        self.twice.div_euclid(2)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.num())
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice + rhs.twice)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice - rhs.twice)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_twice(-self.twice)
    }
}

impl Mul<i64> for HalfInt {
    type Output = HalfInt;
    fn mul(self, rhs: i64) -> HalfInt {
        HalfInt::from_twice(self.twice * rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct Fraction {
    num: i64,
    den: i64,
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Fraction { num: self.num(), den: self.den() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let f = Fraction::deserialize(deserializer)?;
        match f.den {
            1 => Ok(HalfInt::from_int(f.num)),
            2 => Ok(HalfInt::from_twice(f.num)),
            d => Err(serde::de::Error::custom(format!("half-integer denominator must be 1 or 2, got {d}"))),
        }
    }
}

pub fn j0() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// Complex conjugation `I = diag(1, -1)`.
pub fn conj() -> Mat2 {
    Mat2::new(1.0, 0.0, 0.0, -1.0)
}

/// Matrix of `omega = dx ^ dy`.
pub fn omega2() -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, 0.0)
}

/// Matrix of the product form `(-omega) + omega` on R^4.
pub fn omega4() -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-omega2()));
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&omega2());
    m
}

/// Symplectic form matrix for phase-space dimension `D` (2 or 4).
pub fn omega<const D: usize>() -> SMatrix<f64, D, D> {
    match D {
        2 => SMatrix::from_fn(|i, j| omega2()[(i, j)]),
        4 => SMatrix::from_fn(|i, j| omega4()[(i, j)]),
        _ => panic!("phase space dimension must be 2 or 4"),
    }
}

/// `I_{R^{2n}}`: conjugation acting on each factor.
pub fn conj_n<const D: usize>() -> SMatrix<f64, D, D> {
    SMatrix::from_fn(|i, j| if i != j { 0.0 } else if i % 2 == 0 { 1.0 } else { -1.0 })
}

/// `exp(angle * J0)`, counterclockwise rotation.
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// `max |(M^T J0 M - J0)_{ij}|`.
pub fn symplectic_defect(m: &Mat2) -> f64 {
    (m.transpose() * j0() * m - j0()).abs().max()
}

pub fn is_symplectic(m: &Mat2) -> bool {
    symplectic_defect(m) <= SYMPLECTIC_TOL
}

/// Inverse of a 2x2 symplectic matrix (the adjugate).
pub fn symplectic_inverse(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

/// Eigenvalues of the symmetric matrix `[[a, b], [b, c]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Smallest singular value of a 1x1 or 2x2 matrix given by its entries.
pub fn sigma_min_small<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    match N {
        1 => m[(0, 0)].abs(),
        2 => {
            let fro2 = m.norm_squared();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
            // sigma_min = 2|det| / sigma_max^2 form is stable when det is tiny
            let smax2 = 0.5 * (fro2 + disc);
            if smax2 == 0.0 {
                0.0
            } else {
                det.abs() / smax2.sqrt()
            }
        }
        _ => DMatrix::from_fn(N, N, |i, j| m[(i, j)]).singular_values().min(),
    }
}

/// Modified Gram-Schmidt on the columns. Returns the orthonormal frame and the
/// smallest pivot norm encountered.
pub fn orthonormalize<const D: usize, const N: usize>(m: &SMatrix<f64, D, N>) -> (SMatrix<f64, D, N>, f64) {
    let mut q = *m;
    let mut min_pivot = f64::INFINITY;
    for j in 0..N {
        for k in 0..j {
            let proj = q.column(k).dot(&q.column(j));
            let ck = q.column(k).into_owned();
            let mut cj = q.column_mut(j);
            cj.axpy(-proj, &ck, 1.0);
        }
        let norm = q.column(j).norm();
        min_pivot = min_pivot.min(norm);
        if norm > 0.0 {
            q.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    (q, min_pivot)
}

/// A basis of a Lagrangian subspace of R^D, D = 2N, stored as columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagrangianFrame<const D: usize, const N: usize> {
    cols: SMatrix<f64, D, N>,
}

pub type LineFrame = LagrangianFrame<2, 1>;
pub type PlaneFrame = LagrangianFrame<4, 2>;

impl<const D: usize, const N: usize> LagrangianFrame<D, N> {
    /// Validates full rank and isotropy (to 1e-9 after orthonormalization).
    pub fn new(cols: SMatrix<f64, D, N>) -> Result<Self> {
        if D != 2 * N {
            return Err(Error::ShapeMismatch(format!("frame of {N} columns in R^{D}")));
        }
        let scale = cols.norm().max(f64::MIN_POSITIVE);
        let (q, pivot) = orthonormalize(&cols);
        if pivot <= RANK_TOL * scale {
            return Err(Error::InvalidInput(format!("frame is rank deficient (pivot {pivot:.3e})")));
        }
        let defect = (q.transpose() * omega::<D>() * q).abs().max();
        if defect > 1e-9 {
            return Err(Error::InvalidInput(format!("frame is not isotropic (defect {defect:.3e})")));
        }
        Ok(LagrangianFrame { cols })
    }

    pub fn new_unchecked(cols: SMatrix<f64, D, N>) -> Self {
        LagrangianFrame { cols }
    }

    pub fn columns(&self) -> &SMatrix<f64, D, N> {
        &self.cols
    }

    /// `max |F^T W F|` for the frame as stored.
    pub fn isotropy_defect(&self) -> f64 {
        (self.cols.transpose() * omega::<D>() * self.cols).abs().max()
    }

    /// `R^n = Fix I`.
    pub fn real() -> Self {
        LagrangianFrame { cols: SMatrix::from_fn(|i, j| if i == 2 * j { 1.0 } else { 0.0 }) }
    }

    /// `iR^n = Fix(-I)`.
    pub fn imaginary() -> Self {
        LagrangianFrame { cols: SMatrix::from_fn(|i, j| if i == 2 * j + 1 { 1.0 } else { 0.0 }) }
    }
}

impl LineFrame {
    /// The line `e^{angle J0} R`.
    pub fn line(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        LagrangianFrame { cols: SMatrix::<f64, 2, 1>::new(c, s) }
    }

    pub fn from_vector(v: Vec2) -> Self {
        LagrangianFrame { cols: v }
    }
}

impl PlaneFrame {
    /// The anti-diagonal `{(x, -x)}`.
    pub fn antidiagonal() -> Self {
        graph_columns(&Mat2::identity())
    }
}

fn graph_columns(m: &Mat2) -> PlaneFrame {
    let mut cols = SMatrix::<f64, 4, 2>::zeros();
    cols.fixed_view_mut::<2, 2>(0, 0).copy_from(&Mat2::identity());
    cols.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-m));
    LagrangianFrame { cols }
}

/// Anti-graph `{(x, -Mx)}` of a symplectic matrix, a Lagrangian plane in
/// `(R^4, (-omega) + omega)`; columns are `(e_j, -M e_j)`.
pub fn graph_frame(m: &Mat2) -> Result<PlaneFrame> {
    let defect = symplectic_defect(m);
    if defect > SYMPLECTIC_TOL {
        return Err(Error::NotSymplectic { defect });
    }
    Ok(graph_columns(m))
}

/// Frame columns of the anti-graph without the symplecticity check.
pub fn graph_frame_unchecked(m: &Mat2) -> PlaneFrame {
    graph_columns(m)
}

/// Dimension of `F ∩ G` for two frames given as dynamic matrices: the rank
/// deficiency of `[F | G]`, with singular values below `tol * sigma_max`
/// counted as zero.
pub fn intersection_dim_dyn(f: &DMatrix<f64>, g: &DMatrix<f64>, tol: f64) -> Result<usize> {
    if f.nrows() != g.nrows() || f.ncols() != g.ncols() || f.nrows() != 2 * f.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "frames of shape {}x{} and {}x{}",
            f.nrows(),
            f.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = f.ncols();
    let mut stacked = DMatrix::zeros(2 * n, 2 * n);
    stacked.view_mut((0, 0), (2 * n, n)).copy_from(&normalize_columns(f));
    stacked.view_mut((0, n), (2 * n, n)).copy_from(&normalize_columns(g));
    let sv = stacked.singular_values();
    let smax = sv.max();
    Ok(sv.iter().filter(|&&s| s <= tol * smax).count())
}

fn normalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let fixed = m.clone();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    // orthonormal basis of the column span so that the tolerance is scale free
    let qr = fixed.qr();
    let q = qr.q();
    out.copy_from(&q.columns(0, m.ncols()));
    out
}

/// `dim(F ∩ G)` for two Lagrangian frames of the same shape.
pub fn lagrangian_intersection_dim<const D: usize, const N: usize>(
    f: &LagrangianFrame<D, N>,
    g: &LagrangianFrame<D, N>,
    tol: f64,
) -> Result<usize> {
    let fd = DMatrix::from_fn(D, N, |i, j| f.cols[(i, j)]);
    let gd = DMatrix::from_fn(D, N, |i, j| g.cols[(i, j)]);
    intersection_dim_dyn(&fd, &gd, tol)
}

/// Number of eigenvalue-one directions of a 2x2 matrix: `dim ker(M - 1)`,
/// decided by singular values relative to `max(1, |M|)`.
pub fn kernel_dim_minus_identity(m: &Mat2, tol: f64) -> usize {
    let a = m - Mat2::identity();
    let sv = a.singular_values();
    let scale = m.norm().max(1.0);
    sv.iter().filter(|&&s| s <= tol * scale).count()
}

/// Matrix logarithm of a 2x2 symplectic matrix close to the identity, as an
/// element of sl(2). Returns `None` if `M` has a negative real eigenvalue.
pub fn sl2_log(m: &Mat2) -> Option<Mat2> {
    let half_tr = 0.5 * m.trace();
    let id = Mat2::identity();
    let (coef, _) = if half_tr > 1.0 + 1e-14 {
        let s = half_tr.acosh();
        (s / s.sinh(), s)
    } else if half_tr < 1.0 - 1e-14 {
        if half_tr <= -1.0 {
            return None;
        }
        let s = half_tr.acos();
        (s / s.sin(), s)
    } else {
        (1.0, 0.0)
    };
    Some((m - id * half_tr) * coef)
}

/// Exponential of a traceless 2x2 matrix.
pub fn sl2_exp(x: &Mat2) -> Mat2 {
    let delta = -x.determinant();
    let id = Mat2::identity();
    if delta > 1e-300 {
        let s = delta.sqrt();
        id * s.cosh() + x * (s.sinh() / s)
    } else if delta < -1e-300 {
        let s = (-delta).sqrt();
        id * s.cos() + x * (s.sin() / s)
    } else {
        id + x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halfint_fraction_form() {
        let h = HalfInt::from_twice(3);
        assert_eq!((h.num(), h.den()), (3, 2));
        assert_eq!(h.to_string(), "3/2");
        assert_eq!(HalfInt::from_int(-2).to_string(), "-2");
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"num":3,"den":2}"#);
        let back: HalfInt = serde_json::from_str(r#"{"num":-1,"den":2}"#).unwrap();
        assert_eq!(back.twice(), -1);
        assert!(serde_json::from_str::<HalfInt>(r#"{"num":1,"den":3}"#).is_err());
        assert_eq!(HalfInt::from_twice(-1).floor(), -1);
    }

    #[test]
    fn graph_of_identity_is_antidiagonal() {
        let f = graph_frame(&Mat2::identity()).unwrap();
        assert_eq!(f, PlaneFrame::antidiagonal());
    }

    #[test]
    fn graph_of_j0_columns() {
        let f = graph_frame(&j0()).unwrap();
        let c = f.columns();
        assert_eq!(c.column(0).as_slice(), &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(c.column(1).as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn graph_of_squeeze_is_isotropic() {
        let f = graph_frame(&Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert!(f.isotropy_defect() <= 1e-12);
    }

    #[test]
    fn graph_rejects_non_symplectic() {
        let err = graph_frame(&Mat2::new(2.0, 0.0, 0.0, 2.0)).unwrap_err();
        assert_eq!(err.name(), "NotSymplectic");
    }

    #[test]
    fn intersection_examples() {
        let re = LineFrame::real();
        let im = LineFrame::imaginary();
        assert_eq!(lagrangian_intersection_dim(&re, &im, RANK_TOL).unwrap(), 0);
        assert_eq!(lagrangian_intersection_dim(&re, &re, RANK_TOL).unwrap(), 1);
        let rotated = LineFrame::from_vector(rotation(0.3) * Vec2::new(1.0, 0.0));
        assert_eq!(lagrangian_intersection_dim(&re, &rotated, RANK_TOL).unwrap(), 0);
        let p = PlaneFrame::real();
        assert_eq!(lagrangian_intersection_dim(&p, &p, RANK_TOL).unwrap(), 2);
    }

    #[test]
    fn intersection_shape_mismatch() {
        let a = DMatrix::<f64>::zeros(2, 1);
        let b = DMatrix::<f64>::zeros(4, 2);
        assert_eq!(intersection_dim_dyn(&a, &b, 1e-8).unwrap_err().name(), "ShapeMismatch");
    }

    #[test]
    fn conjugation_is_antisymplectic() {
        let i2 = conj();
        assert_eq!(i2.transpose() * j0() * i2, -j0());
        let i4 = conj_n::<4>();
        assert_eq!(i4.transpose() * omega::<4>() * i4, -omega::<4>());
    }

    #[test]
    fn frame_validation() {
        assert!(LineFrame::new(SMatrix::<f64, 2, 1>::new(0.0, 0.0)).is_err());
        let not_iso = SMatrix::<f64, 4, 2>::from_column_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(PlaneFrame::new(not_iso).is_err());
        assert!(PlaneFrame::new(*PlaneFrame::real().columns()).is_ok());
    }

    #[test]
    fn sl2_log_exp_roundtrip() {
        for m in [rotation(0.4), Mat2::new(1.2, 0.3, 0.1, (1.0 + 0.03) / 1.2)] {
            let x = sl2_log(&m).unwrap();
            assert!(x.trace().abs() < 1e-14);
            assert!((sl2_exp(&x) - m).norm() < 1e-12);
        }
    }

    fn random_symplectic() -> impl Strategy<Value = Mat2> {
        (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0, 0.3f64..3.0).prop_map(|(a, b, s, e)| {
            rotation(a) * Mat2::new(e, s, 0.0, 1.0 / e) * rotation(b)
        })
    }

    proptest! {
        #[test]
        fn symplectic_has_unit_determinant(m in random_symplectic()) {
            prop_assert!(is_symplectic(&m));
            prop_assert!((m.determinant() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn graph_meets_antidiagonal_in_fixed_space(m in random_symplectic(), snap in 0u8..3) {
            // snap = 0: generic, 1: identity, 2: shear with one fixed direction
            let m = match snap {
                1 => Mat2::identity(),
                2 => Mat2::new(1.0, m[(0, 1)], 0.0, 1.0),
                _ => m,
            };
            let g = graph_frame(&m).unwrap();
            let by_rank = lagrangian_intersection_dim(&g, &PlaneFrame::antidiagonal(), RANK_TOL).unwrap();
            let by_eigen = kernel_dim_minus_identity(&m, RANK_TOL);
            prop_assert_eq!(by_rank, by_eigen);
        }
    }
}
