use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix6;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ring::Coefficient;
use crate::error::ExteriorError;
use crate::scalar::Real;

/// Dimension of the coframe.
pub const DIM: usize = 6;

/// A strictly increasing index tuple over the coframe, stored as a bitmask.
/// Bit `i` set means `e^{i+1}` is a factor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Blade(u8);

impl Blade {
    pub const EMPTY: Blade = Blade(0);
    pub const TOP: Blade = Blade(0b11_1111);

    #[inline]
    pub fn from_bits(bits: u8) -> Self {
        debug_assert!(bits < 64);
        Blade(bits)
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }

    /// From 0-based coframe indices; `None` on duplicates or out-of-range.
    pub fn from_indices(indices: &[usize]) -> Option<Self> {
        let mut bits = 0u8;
        for &i in indices {
            if i >= DIM || bits & (1 << i) != 0 {
                return None;
            }
            bits |= 1 << i;
        }
        Some(Blade(bits))
    }

    /// From 1-based labels as written in `e^{135}`; must be strictly increasing.
    pub fn from_labels(labels: &[usize]) -> Option<Self> {
        if labels.windows(2).any(|w| w[0] >= w[1]) || labels.iter().any(|&l| l == 0) {
            return None;
        }
        Self::from_indices(&labels.iter().map(|l| l - 1).collect::<Vec<_>>())
    }

    #[inline]
    pub fn single(i: usize) -> Self {
        Blade(1 << i)
    }

    #[inline]
    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    /// 0-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..DIM).filter(move |&i| self.0 & (1 << i) != 0)
    }

    pub fn complement(self) -> Self {
        Blade(!self.0 & Self::TOP.0)
    }

    /// `e^A ∧ e^B = sign · e^{A∪B}`, or `None` when they share a factor.
    pub fn wedge_sign(self, other: Blade) -> Option<(Blade, i8)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // count pairs (i in A, j in B) with i > j
        let mut swaps = 0u32;
        for j in other.indices() {
            swaps += (self.0 >> (j + 1)).count_ones();
        }
        let sign = if swaps % 2 == 0 { 1 } else { -1 };
        Some((Blade(self.0 | other.0), sign))
    }

    /// `ι_{e_i} e^A = sign · e^{A∖i}`, or `None` if `i ∉ A`.
    pub fn contract_sign(self, i: usize) -> Option<(Blade, i8)> {
        if !self.contains(i) {
            return None;
        }
        let below = (self.0 & ((1u8 << i) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Some((Blade(self.0 & !(1 << i)), sign))
    }

    /// All blades of the given degree, in increasing bitmask order.
    pub fn all_of_degree(k: usize) -> Vec<Blade> {
        (0u8..64).filter(|b| b.count_ones() as usize == k).map(Blade).collect()
    }

    /// Digits of the 1-based labels, e.g. `"135"`.
    pub fn label_string(self) -> String {
        self.indices().map(|i| char::from(b'1' + i as u8)).collect()
    }

    fn parse_labels(s: &str) -> Option<Self> {
        let labels: Option<Vec<usize>> = s
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect();
        Self::from_labels(&labels?)
    }
}

/// A degree-k exterior form with sparse coefficients on increasing tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<C> {
    degree: usize,
    terms: BTreeMap<Blade, C>,
}

impl<C: Coefficient> Form<C> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "form degree {degree} exceeds {DIM}");
        Form { degree, terms: BTreeMap::new() }
    }

    /// Single term `c · e^{blade}`.
    pub fn monomial(c: C, blade: Blade) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(blade, c);
        Form { degree: blade.degree(), terms }
    }

    pub fn from_terms(degree: usize, terms: impl IntoIterator<Item = (Blade, C)>) -> Self {
        let mut f = Form::zero(degree);
        for (b, c) in terms {
            assert_eq!(b.degree(), degree, "blade degree mismatch");
            f.accumulate(b, c);
        }
        f
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (Blade, &C)> {
        self.terms.iter().map(|(b, c)| (*b, c))
    }

    pub fn coefficient(&self, blade: Blade) -> Option<&C> {
        self.terms.get(&blade)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn accumulate(&mut self, blade: Blade, c: C) {
        debug_assert_eq!(blade.degree(), self.degree);
        match self.terms.get_mut(&blade) {
            Some(existing) => *existing = existing.plus(&c),
            None => {
                self.terms.insert(blade, c);
            }
        }
    }

    pub(crate) fn accumulate_signed(&mut self, blade: Blade, c: &C, sign: i8) {
        let c = if sign < 0 { c.negate() } else { c.clone() };
        self.accumulate(blade, c)
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExteriorError> {
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = self.clone();
        for (b, c) in other.terms() {
            out.accumulate(b, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExteriorError> {
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = self.clone();
        for (b, c) in other.terms() {
            out.accumulate(b, c.negate());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|c| c.negate())
    }

    pub fn scale(&self, s: C::Scalar) -> Self {
        self.map_coefficients(|c| c.scale(s))
    }

    /// Multiplies every coefficient by a ring element (a 0-form).
    pub fn times(&self, f: &C) -> Self {
        self.map_coefficients(|c| c.times(f))
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Form<D> {
        Form {
            degree: self.degree,
            terms: self.terms.iter().map(|(b, c)| (*b, f(c))).collect(),
        }
    }

    /// Drops coefficients whose sup norm is at most `tol`.
    pub fn pruned(mut self, tol: C::Scalar) -> Self {
        self.terms.retain(|_, c| !c.is_negligible(tol));
        self
    }

    /// Largest coefficient sup norm.
    pub fn max_abs(&self) -> C::Scalar {
        self.terms
            .values()
            .map(|c| c.max_abs())
            .fold(C::Scalar::zero(), |a, b| if b > a { b } else { a })
    }

    /// Sup-norm distance; forms of different degree are infinitely far apart.
    pub fn distance(&self, other: &Self) -> C::Scalar {
        match self.sub(other) {
            Ok(d) => d.max_abs(),
            Err(_) => C::Scalar::lit(f64::INFINITY),
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: C::Scalar) -> bool {
        self.degree == other.degree && self.distance(other) <= tol
    }

    /// Graded-anticommutative product.
    pub fn wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        let degree = self.degree + other.degree;
        if degree > DIM {
            return Err(ExteriorError::DegreeOverflow(self.degree, other.degree));
        }
        let mut out = Form::zero(degree);
        for (ba, ca) in self.terms() {
            for (bb, cb) in other.terms() {
                if let Some((b, sign)) = ba.wedge_sign(bb) {
                    out.accumulate_signed(b, &ca.times(cb), sign);
                }
            }
        }
        Ok(out)
    }

    /// Contraction with the frame vector `e_i` (0-based).
    pub fn interior(&self, i: usize) -> Self {
        if self.degree == 0 {
            return Form::zero(0);
        }
        let mut out = Form::zero(self.degree - 1);
        for (b, c) in self.terms() {
            if let Some((rest, sign)) = b.contract_sign(i) {
                out.accumulate_signed(rest, c, sign);
            }
        }
        out
    }

    /// Contraction with a constant vector `v = Σ v^i e_i`.
    pub fn interior_vec(&self, v: &[C::Scalar; DIM]) -> Self {
        if self.degree == 0 {
            return Form::zero(0);
        }
        let mut out = Form::zero(self.degree - 1);
        for (i, &vi) in v.iter().enumerate() {
            if vi == C::Scalar::zero() {
                continue;
            }
            for (b, c) in self.terms() {
                if let Some((rest, sign)) = b.contract_sign(i) {
                    out.accumulate_signed(rest, &c.scale(vi), sign);
                }
            }
        }
        out
    }

    /// Pullback `(A* a)(X_1..X_k) = a(A X_1, .., A X_k)`, where column `j` of
    /// `a_mat` holds the components of `A e_j`.
    pub fn pullback(&self, a_mat: &Matrix6<C::Scalar>) -> Self {
        let mut out = Form::zero(self.degree);
        let targets = Blade::all_of_degree(self.degree);
        for (b, c) in self.terms() {
            let rows: Vec<usize> = b.indices().collect();
            for &t in &targets {
                let cols: Vec<usize> = t.indices().collect();
                let m = minor_det(a_mat, &rows, &cols);
                if m != C::Scalar::zero() {
                    out.accumulate(t, c.scale(m));
                }
            }
        }
        out
    }
}

impl<T: Real> Form<T> {
    /// Constant-coefficient `c · e^{labels}` with 1-based labels.
    pub fn term(c: T, labels: &[usize]) -> Self {
        Form::monomial(c, Blade::from_labels(labels).expect("strictly increasing labels in 1..=6"))
    }

    /// Coefficient on `blade`, zero when absent.
    pub fn get(&self, blade: Blade) -> T {
        self.coefficient(blade).copied().unwrap_or_else(T::zero)
    }

    /// Coefficients on all blades of this degree, in `Blade::all_of_degree` order.
    pub fn to_dense(&self) -> Vec<T> {
        Blade::all_of_degree(self.degree).into_iter().map(|b| self.get(b)).collect()
    }

    pub fn from_dense(degree: usize, values: &[T]) -> Self {
        let blades = Blade::all_of_degree(degree);
        assert_eq!(blades.len(), values.len());
        Form::from_terms(
            degree,
            blades.into_iter().zip(values.iter().copied()).filter(|(_, v)| *v != T::zero()),
        )
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, c| acc + *c * *c).sqrt()
    }

    /// Euclidean inner product of coefficient vectors.
    pub fn coefficient_dot(&self, other: &Self) -> T {
        self.terms()
            .map(|(b, c)| *c * other.get(b))
            .fold(T::zero(), |a, b| a + b)
    }

    /// Inner product induced on `Λ^k` by the Gram matrix `g_ij = g(e_i, e_j)`.
    pub fn inner_product(&self, other: &Self, g: &Matrix6<T>) -> Result<T, ExteriorError> {
        let g_inv = checked_inverse_metric(g)?;
        self.inner_product_with_inverse(other, &g_inv)
    }

    /// As [`Form::inner_product`], with the inverse metric precomputed.
    pub fn inner_product_with_inverse(
        &self,
        other: &Self,
        g_inv: &Matrix6<T>,
    ) -> Result<T, ExteriorError> {
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch(self.degree, other.degree));
        }
        let mut acc = T::zero();
        for (ba, ca) in self.terms() {
            let rows: Vec<usize> = ba.indices().collect();
            for (bb, cb) in other.terms() {
                let cols: Vec<usize> = bb.indices().collect();
                acc += *ca * *cb * minor_det(g_inv, &rows, &cols);
            }
        }
        Ok(acc)
    }
}

/// Inverse of a symmetric positive-definite Gram matrix.
pub fn checked_inverse_metric<T: Real>(g: &Matrix6<T>) -> Result<Matrix6<T>, ExteriorError> {
    let scale = g.amax().max(T::one());
    if (g - g.transpose()).amax() > T::lit(1e-10) * scale {
        return Err(ExteriorError::BadMetric);
    }
    let chol = nalgebra::Cholesky::new(*g).ok_or(ExteriorError::BadMetric)?;
    Ok(chol.inverse())
}

/// Determinant of the submatrix with the given rows and columns.
pub fn minor_det<T: Real>(m: &Matrix6<T>, rows: &[usize], cols: &[usize]) -> T {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    match k {
        0 => T::one(),
        1 => m[(rows[0], cols[0])],
        2 => m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])],
        3 => {
            let a = |r: usize, c: usize| m[(rows[r], cols[c])];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => {
            // Gaussian elimination with partial pivoting
            let mut a = [[T::zero(); DIM]; DIM];
            for (r, &ri) in rows.iter().enumerate() {
                for (c, &ci) in cols.iter().enumerate() {
                    a[r][c] = m[(ri, ci)];
                }
            }
            let mut det = T::one();
            for col in 0..k {
                let pivot = (col..k)
                    .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                    .unwrap();
                if a[pivot][col] == T::zero() {
                    return T::zero();
                }
                if pivot != col {
                    a.swap(pivot, col);
                    det = -det;
                }
                det *= a[col][col];
                for r in col + 1..k {
                    let f = a[r][col] / a[col][col];
                    for c in col..k {
                        let v = a[col][c];
                        a[r][c] -= f * v;
                    }
                }
            }
            det
        }
    }
}

impl<T: Real> fmt::Display for Form<T> {
    /// `0.5 e^{135} - 0.5 e^{146}`; the zero form prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (b, c) in self.terms() {
            let value = c.as_f64();
            if first {
                write!(f, "{} e^{{{}}}", value, b.label_string())?;
            } else if value < 0.0 {
                write!(f, " - {} e^{{{}}}", -value, b.label_string())?;
            } else {
                write!(f, " + {} e^{{{}}}", value, b.label_string())?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Real> FromStr for Form<T> {
    type Err = ExteriorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" {
            return Ok(Form::zero(0));
        }
        let bad = || ExteriorError::Parse(s.to_string());
        let mut degree = None;
        let mut out: Option<Form<T>> = None;
        let mut sign = 1.0;
        let mut tokens = s.split_whitespace().peekable();
        while let Some(tok) = tokens.next() {
            match tok {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ => {
                    let value: f64 = tok.parse().map_err(|_| bad())?;
                    let blade_tok = tokens.next().ok_or_else(bad)?;
                    let labels = blade_tok
                        .strip_prefix("e^{")
                        .and_then(|r| r.strip_suffix('}'))
                        .ok_or_else(bad)?;
                    let blade = Blade::parse_labels(labels).ok_or_else(bad)?;
                    let k = *degree.get_or_insert(blade.degree());
                    if k != blade.degree() {
                        return Err(ExteriorError::DegreeMismatch(k, blade.degree()));
                    }
                    out.get_or_insert_with(|| Form::zero(k))
                        .accumulate(blade, T::lit(sign * value));
                    sign = 1.0;
                }
            }
        }
        out.ok_or_else(bad)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormRepr<C> {
    degree: usize,
    terms: BTreeMap<String, C>,
}

impl<C: Coefficient + Serialize> Serialize for Form<C> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FormRepr {
            degree: self.degree,
            terms: self.terms.iter().map(|(b, c)| (b.label_string(), c.clone())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, C: Coefficient + Deserialize<'de>> Deserialize<'de> for Form<C> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = FormRepr::<C>::deserialize(deserializer)?;
        if repr.degree > DIM {
            return Err(D::Error::custom("degree exceeds 6"));
        }
        let mut terms = BTreeMap::new();
        for (key, c) in repr.terms {
            let blade = Blade::parse_labels(&key)
                .ok_or_else(|| D::Error::custom(format!("bad index tuple `{key}`")))?;
            if blade.degree() != repr.degree {
                return Err(D::Error::custom(format!("tuple `{key}` has wrong length")));
            }
            terms.insert(blade, c);
        }
        Ok(Form { degree: repr.degree, terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(labels: &[usize]) -> Form<f64> {
        Form::term(1.0, labels)
    }

    #[test]
    fn basis_products() {
        assert_eq!(e(&[1]).wedge(&e(&[2])).unwrap(), e(&[1, 2]));
        assert_eq!(e(&[2]).wedge(&e(&[1])).unwrap(), e(&[1, 2]).neg());
        assert!(e(&[1]).wedge(&e(&[1])).unwrap().is_empty());
    }

    #[test]
    fn wedge_degree_overflow() {
        let err = e(&[1, 2, 3, 4]).wedge(&e(&[1, 5, 6])).unwrap_err();
        assert_eq!(err, ExteriorError::DegreeOverflow(4, 3));
    }

    #[test]
    fn interior_signs() {
        assert_eq!(e(&[1, 2]).interior(0), e(&[2]));
        assert_eq!(e(&[1, 2]).interior(1), e(&[1]).neg());
        assert_eq!(Form::<f64>::term(2.0, &[]).interior(3), Form::zero(0));
    }

    #[test]
    fn interior_vec_is_linear() {
        let a = e(&[1, 3]).add(&e(&[2, 3]).scale(2.0)).unwrap();
        let v = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        let direct = a.interior(0).add(&a.interior(1).scale(0.5)).unwrap();
        assert!(a.interior_vec(&v).approx_eq(&direct, 1e-15));
    }

    #[test]
    fn pullback_identity_and_swap() {
        let a = e(&[1, 3, 5]).add(&e(&[2, 4, 6]).scale(-3.0)).unwrap();
        assert_eq!(a.pullback(&Matrix6::identity()), a);
        // A e_1 = e_2, A e_2 = e_1: A* e^1 = e^2
        let mut swap = Matrix6::identity();
        swap[(0, 0)] = 0.0;
        swap[(1, 1)] = 0.0;
        swap[(1, 0)] = 1.0;
        swap[(0, 1)] = 1.0;
        assert_eq!(e(&[1]).pullback(&swap), e(&[2]));
        assert_eq!(e(&[1, 3]).pullback(&swap), e(&[2, 3]));
    }

    #[test]
    fn inner_product_identity_gram() {
        let g = Matrix6::identity();
        assert_eq!(e(&[1, 2]).inner_product(&e(&[1, 2]), &g).unwrap(), 1.0);
        assert_eq!(e(&[1, 2]).inner_product(&e(&[1, 3]), &g).unwrap(), 0.0);
        let mut bad = Matrix6::identity();
        bad[(0, 1)] = 0.5;
        assert_eq!(e(&[1]).inner_product(&e(&[1]), &bad), Err(ExteriorError::BadMetric));
        assert_eq!(
            e(&[1]).inner_product(&e(&[1]), &Matrix6::zeros()),
            Err(ExteriorError::BadMetric)
        );
    }

    #[test]
    fn minor_det_matches_nalgebra() {
        let m = Matrix6::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + if i == j { 4.0 } else { 0.0 });
        let all: Vec<usize> = (0..6).collect();
        assert!((minor_det(&m, &all, &all) - m.determinant()).abs() < 1e-9);
        let r = [0, 2, 3, 5];
        let c = [1, 2, 4, 5];
        let sub = nalgebra::Matrix4::from_fn(|i, j| m[(r[i], c[j])]);
        assert!((minor_det(&m, &r, &c) - sub.determinant()).abs() < 1e-9);
    }

    #[test]
    fn text_format() {
        let a = e(&[1, 3, 5]).scale(0.5).sub(&e(&[1, 4, 6]).scale(0.5)).unwrap();
        assert_eq!(a.to_string(), "0.5 e^{135} - 0.5 e^{146}");
        let back: Form<f64> = a.to_string().parse().unwrap();
        assert_eq!(back, a);
        assert_eq!(Form::<f64>::zero(3).to_string(), "0");
        assert!("1 e^{31}".parse::<Form<f64>>().is_err());
        assert!("1 e^{1} + 2 e^{12}".parse::<Form<f64>>().is_err());
    }

    #[test]
    fn json_rejects_bad_tuples() {
        let ok: Form<f64> = serde_json::from_str(r#"{"degree":2,"terms":{"12":1.5}}"#).unwrap();
        assert_eq!(ok, e(&[1, 2]).scale(1.5));
        assert!(serde_json::from_str::<Form<f64>>(r#"{"degree":2,"terms":{"21":1.0}}"#).is_err());
        assert!(serde_json::from_str::<Form<f64>>(r#"{"degree":3,"terms":{"12":1.0}}"#).is_err());
        assert!(serde_json::from_str::<Form<f64>>(r#"{"degree":2,"terms":{},"x":1}"#).is_err());
    }
}
