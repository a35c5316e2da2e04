//! Extended-real scalars and dense tropical matrices.
//!
//! `ExtReal` carries the two absorbing sentinels of the max-plus and min-plus
//! semirings: `Eps` (−∞) and `Top` (+∞). Max-plus products treat `Eps` as
//! absorbing (so `Eps + Top = Eps`), min-plus products treat `Top` as
//! absorbing (so `Top + Eps = Top`). Sentinel checks are always exact.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MmpsError, Result};

/// A real number extended with −∞ (`Eps`) and +∞ (`Top`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Eps,
    Fin(f64),
    Top,
}

pub const EPS: ExtReal = ExtReal::Eps;
pub const TOP: ExtReal = ExtReal::Top;

impl ExtReal {
    /// Maps −∞/+∞ to the sentinels; NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(MmpsError::NonFinite("NaN is not an extended real".into()))
        } else if v == f64::NEG_INFINITY {
            Ok(ExtReal::Eps)
        } else if v == f64::INFINITY {
            Ok(ExtReal::Top)
        } else {
            Ok(ExtReal::Fin(v))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Fin(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Fin(v) => Some(v),
            _ => None,
        }
    }

    /// Value as an `f64`, with the sentinels mapped to ∓∞.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Eps => f64::NEG_INFINITY,
            ExtReal::Fin(v) => v,
            ExtReal::Top => f64::INFINITY,
        }
    }

    fn from_sum(v: f64) -> Self {
        // an overflowing finite sum saturates to the matching sentinel
        ExtReal::from_f64(v).expect("sum of finite values is not NaN")
    }

    /// Max-plus multiplication `a ⊗ b`; `Eps` absorbs everything, `Top` included.
    pub fn otimes(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Eps, _) | (_, ExtReal::Eps) => ExtReal::Eps,
            (ExtReal::Top, _) | (_, ExtReal::Top) => ExtReal::Top,
            (ExtReal::Fin(a), ExtReal::Fin(b)) => ExtReal::from_sum(a + b),
        }
    }

    /// Min-plus multiplication `a ⊗' b`; `Top` absorbs everything, `Eps` included.
    pub fn otimes_min(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Top, _) | (_, ExtReal::Top) => ExtReal::Top,
            (ExtReal::Eps, _) | (_, ExtReal::Eps) => ExtReal::Eps,
            (ExtReal::Fin(a), ExtReal::Fin(b)) => ExtReal::from_sum(a + b),
        }
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::Eps => ExtReal::Top,
            ExtReal::Fin(v) => ExtReal::Fin(-v),
            ExtReal::Top => ExtReal::Eps,
        }
    }
}

impl From<f64> for ExtReal {
    /// Panics on NaN; use [`ExtReal::from_f64`] for fallible conversion.
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v).expect("NaN cannot be converted to ExtReal")
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (Eps, Eps) | (Top, Top) => Ordering::Equal,
            (Eps, _) | (_, Top) => Ordering::Less,
            (_, Eps) | (Top, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Eps => write!(f, "eps"),
            ExtReal::Top => write!(f, "top"),
            ExtReal::Fin(v) => write!(f, "{v}"),
        }
    }
}

// Interchange encoding: finite values as JSON numbers, sentinels as "eps"/"top".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Eps => s.serialize_str("eps"),
            ExtReal::Top => s.serialize_str("top"),
            ExtReal::Fin(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"eps\", \"top\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                ExtReal::from_f64(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Fin(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Fin(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v {
                    "eps" => Ok(ExtReal::Eps),
                    "top" => Ok(ExtReal::Top),
                    other => Err(E::custom(format!("unknown sentinel {other:?}"))),
                }
            }
        }
        d.deserialize_any(ExtVisitor)
    }
}

/// Which tropical semiring a diagonal or identity matrix lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// max-plus: off-diagonal entries are `Eps`
    Max,
    /// min-plus: off-diagonal entries are `Top`
    Min,
}

impl Flavor {
    pub fn zero(self) -> ExtReal {
        match self {
            Flavor::Max => ExtReal::Eps,
            Flavor::Min => ExtReal::Top,
        }
    }
}

/// Dense row-major matrix over the extended reals.
#[derive(Debug, Clone, PartialEq)]
pub struct TropMatrix {
    rows: usize,
    cols: usize,
    data: Vec<ExtReal>,
}

/// Serialized as a list of rows.
impl Serialize for TropMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(ser)
    }
}

impl TropMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<ExtReal>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MmpsError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(TropMatrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: ExtReal) -> Self {
        TropMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<ExtReal>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MmpsError::Dimension("ragged rows".into()));
        }
        TropMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Builds from plain floats, mapping ∓∞ to the sentinels.
    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let conv = rows
            .iter()
            .map(|r| r.iter().map(|&v| ExtReal::from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        TropMatrix::from_rows(conv)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> ExtReal {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: ExtReal) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[ExtReal] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[ExtReal] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<ExtReal>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Column indices of the finite entries of row `i`.
    pub fn finite_in_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.finite().map(|f| (j, f)))
    }

    pub fn finite_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_finite()).count()
    }

    /// At least one finite entry in every row.
    pub fn is_regular(&self) -> bool {
        (0..self.rows).all(|i| self.row(i).iter().any(|v| v.is_finite()))
    }

    /// Identity of the given semiring: zeros on the diagonal.
    pub fn identity(n: usize, flavor: Flavor) -> Self {
        let mut m = TropMatrix::filled(n, n, flavor.zero());
        for i in 0..n {
            m.set(i, i, ExtReal::Fin(0.0));
        }
        m
    }

    /// Max-plus matrix–vector product.
    pub fn maxplus_apply(&self, v: &[ExtReal]) -> Result<Vec<ExtReal>> {
        check_inner(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a.otimes(b))
                    .max()
                    .unwrap_or(ExtReal::Eps)
            })
            .collect())
    }

    /// Min-plus matrix–vector product.
    pub fn minplus_apply(&self, v: &[ExtReal]) -> Result<Vec<ExtReal>> {
        check_inner(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a.otimes_min(b))
                    .min()
                    .unwrap_or(ExtReal::Top)
            })
            .collect())
    }
}

fn check_inner(left_cols: usize, right_rows: usize) -> Result<()> {
    if left_cols != right_rows {
        return Err(MmpsError::Dimension(format!(
            "inner dimensions {left_cols} and {right_rows} differ"
        )));
    }
    Ok(())
}

/// `[A ⊗ C]_ij = max_k (A_ik + C_kj)`.
pub fn maxplus_mul(a: &TropMatrix, c: &TropMatrix) -> Result<TropMatrix> {
    check_inner(a.cols, c.rows)?;
    let mut out = TropMatrix::filled(a.rows, c.cols, ExtReal::Eps);
    for i in 0..a.rows {
        for j in 0..c.cols {
            let v = (0..a.cols)
                .map(|k| a.get(i, k).otimes(c.get(k, j)))
                .max()
                .unwrap_or(ExtReal::Eps);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// `[A ⊗' C]_ij = min_k (A_ik + C_kj)`.
pub fn minplus_mul(a: &TropMatrix, c: &TropMatrix) -> Result<TropMatrix> {
    check_inner(a.cols, c.rows)?;
    let mut out = TropMatrix::filled(a.rows, c.cols, ExtReal::Top);
    for i in 0..a.rows {
        for j in 0..c.cols {
            let v = (0..a.cols)
                .map(|k| a.get(i, k).otimes_min(c.get(k, j)))
                .min()
                .unwrap_or(ExtReal::Top);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Tropical diagonal matrix `d⊗(v)` or `d⊗'(v)`; its inverse is the diagonal of `-v`.
pub fn diag_tropical(v: &[f64], flavor: Flavor) -> Result<TropMatrix> {
    ensure_finite(v, "diagonal")?;
    let mut m = TropMatrix::filled(v.len(), v.len(), flavor.zero());
    for (i, &x) in v.iter().enumerate() {
        m.set(i, i, ExtReal::Fin(x));
    }
    Ok(m)
}

/// Conventional product with dimension and finiteness checks.
pub fn conv_mul(a: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_inner(a.ncols(), x.nrows())?;
    if a.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(MmpsError::NonFinite("conventional product operand".into()));
    }
    Ok(a * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KronSide {
    /// `A ⊠ 1_n`: every row repeated `n` times in place
    Right,
    /// `1_n ⊠ A`: the whole matrix stacked `n` times
    Left,
}

/// Kronecker product with a column of ones.
pub fn kron_ones(a: &DMatrix<f64>, n: usize, side: KronSide) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(MmpsError::InvalidArgument("kron_ones needs n >= 1".into()));
    }
    let r = a.nrows();
    Ok(DMatrix::from_fn(r * n, a.ncols(), |i, j| match side {
        KronSide::Right => a[(i / n, j)],
        KronSide::Left => a[(i % r, j)],
    }))
}

/// Row-major stacking of a matrix into a column.
pub fn vec_rowmajor(a: &TropMatrix) -> Vec<ExtReal> {
    a.data.clone()
}

/// Hilbert projective norm `max_i x_i - min_j x_j`.
pub fn hilbert_norm(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(MmpsError::InvalidArgument("empty vector".into()));
    }
    ensure_finite(x, "hilbert_norm")?;
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

pub(crate) fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(MmpsError::NonFinite(format!("{what}[{i}] = {}", v[i]))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: f64) -> ExtReal {
        ExtReal::Fin(v)
    }

    #[test]
    fn maxplus_two_term() {
        let a = TropMatrix::from_rows(vec![vec![f(0.0), EPS], vec![f(2.0), f(3.0)]]).unwrap();
        let c = TropMatrix::from_rows(vec![vec![f(1.0)], vec![f(0.0)]]).unwrap();
        let r = maxplus_mul(&a, &c).unwrap();
        assert_eq!(r.entries(), &[f(1.0), f(3.0)]);
    }

    #[test]
    fn maxplus_identity_is_neutral() {
        let a = TropMatrix::from_rows(vec![vec![f(1.5), EPS, f(-2.0)], vec![EPS, f(4.0), f(0.0)]])
            .unwrap();
        let id = diag_tropical(&[0.0; 3], Flavor::Max).unwrap();
        assert_eq!(maxplus_mul(&a, &id).unwrap(), a);
    }

    #[test]
    fn minplus_identity_and_min() {
        let id = TropMatrix::from_rows(vec![vec![f(0.0), TOP], vec![TOP, f(0.0)]]).unwrap();
        let v = TropMatrix::from_rows(vec![vec![f(5.0)], vec![f(7.0)]]).unwrap();
        assert_eq!(minplus_mul(&id, &v).unwrap(), v);

        let r = TropMatrix::from_rows(vec![vec![f(1.0), f(2.0)]]).unwrap();
        let z = TropMatrix::from_rows(vec![vec![f(0.0)], vec![f(0.0)]]).unwrap();
        assert_eq!(minplus_mul(&r, &z).unwrap().entries(), &[f(1.0)]);
    }

    #[test]
    fn absorption_covers_mixed_sentinels() {
        for a in [EPS, TOP, f(3.0), f(-1.0)] {
            assert_eq!(EPS.otimes(a), EPS);
            assert_eq!(a.otimes(EPS), EPS);
            assert_eq!(TOP.otimes_min(a), TOP);
            assert_eq!(a.otimes_min(TOP), TOP);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = TropMatrix::filled(2, 3, f(0.0));
        assert!(maxplus_mul(&a, &a).is_err());
        assert!(minplus_mul(&a, &a).is_err());
        assert!(a.maxplus_apply(&[f(0.0)]).is_err());
    }

    #[test]
    fn diag_inverses() {
        let v = [1.0, -2.5, 7.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let p = maxplus_mul(
            &diag_tropical(&v, Flavor::Max).unwrap(),
            &diag_tropical(&neg, Flavor::Max).unwrap(),
        )
        .unwrap();
        assert_eq!(p, TropMatrix::identity(3, Flavor::Max));
        let q = minplus_mul(
            &diag_tropical(&v, Flavor::Min).unwrap(),
            &diag_tropical(&neg, Flavor::Min).unwrap(),
        )
        .unwrap();
        assert_eq!(q, TropMatrix::identity(3, Flavor::Min));
        assert!(diag_tropical(&[f64::NAN], Flavor::Max).is_err());
    }

    #[test]
    fn conv_mul_basics() {
        let x = DMatrix::from_column_slice(2, 1, &[3.0, 2.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(conv_mul(&id, &x).unwrap(), x);
        let r = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert_eq!(conv_mul(&r, &x).unwrap()[(0, 0)], 1.0);
        let bad = DMatrix::from_row_slice(1, 2, &[f64::INFINITY, 0.0]);
        assert!(conv_mul(&bad, &x).is_err());
        assert!(conv_mul(&x, &x).is_err());
    }

    #[test]
    fn kron_ones_cases() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(kron_ones(&a, 1, KronSide::Right).unwrap(), a);
        assert_eq!(
            kron_ones(&a, 2, KronSide::Right).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0])
        );
        let col = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert_eq!(
            kron_ones(&col, 2, KronSide::Left).unwrap(),
            DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 1.0, 2.0])
        );
        assert_eq!(
            kron_ones(&col, 2, KronSide::Right).unwrap(),
            DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 2.0, 2.0])
        );
        assert!(kron_ones(&a, 0, KronSide::Left).is_err());
    }

    #[test]
    fn vec_rowmajor_stacks_rows() {
        let a = TropMatrix::from_rows(vec![vec![f(1.0), f(2.0)], vec![f(3.0), f(4.0)]]).unwrap();
        assert_eq!(vec_rowmajor(&a), vec![f(1.0), f(2.0), f(3.0), f(4.0)]);
        let row = TropMatrix::from_rows(vec![vec![f(1.0), EPS, f(3.0)]]).unwrap();
        assert_eq!(vec_rowmajor(&row), row.entries().to_vec());
    }

    #[test]
    fn vec_of_kron_duplicates_row_blocks() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron_ones(&a, 2, KronSide::Right).unwrap();
        let t = TropMatrix::new(
            4,
            2,
            (0..4)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| f(k[(i, j)]))
                .collect(),
        )
        .unwrap();
        let expected: Vec<ExtReal> = [1.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 4.0].map(f).to_vec();
        assert_eq!(vec_rowmajor(&t), expected);
    }

    #[test]
    fn hilbert_norm_cases() {
        assert_eq!(hilbert_norm(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(hilbert_norm(&[0.0, 60.0, 120.0]).unwrap(), 120.0);
        assert!(hilbert_norm(&[]).is_err());
    }

    #[test]
    fn regularity() {
        let a = TropMatrix::from_rows(vec![vec![f(1.0), EPS], vec![EPS, f(2.0)]]).unwrap();
        assert!(a.is_regular());
        let b = TropMatrix::from_rows(vec![vec![EPS, EPS]]).unwrap();
        assert!(!b.is_regular());
    }

    #[test]
    fn ordering_places_sentinels_at_the_ends() {
        let mut v = vec![TOP, f(1.0), EPS, f(-3.0)];
        v.sort();
        assert_eq!(v, vec![EPS, f(-3.0), f(1.0), TOP]);
    }

    #[test]
    fn json_encoding_of_sentinels() {
        let v = vec![EPS, f(1.25), TOP];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["eps",1.25,"top"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ExtReal>("\"inf\"").is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn finite_matrix(r: usize, c: usize) -> impl Strategy<Value = TropMatrix> {
            proptest::collection::vec(-50i32..50, r * c).prop_map(move |v| {
                TropMatrix::new(r, c, v.into_iter().map(|x| ExtReal::Fin(x as f64 / 4.0)).collect())
                    .unwrap()
            })
        }

        proptest! {
            #[test]
            fn maxplus_is_associative(a in finite_matrix(3, 4), b in finite_matrix(4, 2), c in finite_matrix(2, 3)) {
                let left = maxplus_mul(&a, &maxplus_mul(&b, &c).unwrap()).unwrap();
                let right = maxplus_mul(&maxplus_mul(&a, &b).unwrap(), &c).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn hilbert_norm_is_shift_invariant(x in proptest::collection::vec(-1e3f64..1e3, 1..10), h in -1e3f64..1e3) {
                let shifted: Vec<f64> = x.iter().map(|v| v + h).collect();
                let a = hilbert_norm(&x).unwrap();
                let b = hilbert_norm(&shifted).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }
}
