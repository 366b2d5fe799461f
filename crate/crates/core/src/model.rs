//! Drift families, parameter vectors and the sparsity/cone predicates.
//!
//! A drift is linear in its parameter: `b_θ(x) = φ₀(x) + Σ_j θ_j φ_j(x)`,
//! with `φ_j : ℝ^d → ℝ^d`. Parameter indices are zero-based throughout the
//! crate, so parameter `q` multiplies the field that the usual one-based
//! notation calls `φ_{q+1}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// A vector field `ℝ^d → ℝ^d`, written into the output slice.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// User-supplied vector field with its declared Lipschitz constant.
#[derive(Clone)]
pub struct CustomField {
    pub field: FieldFn,
    pub lipschitz: f64,
}

impl CustomField {
    pub fn new<F>(lipschitz: f64, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            field: Arc::new(f),
            lipschitz,
        }
    }

    /// The identically-zero field.
    pub fn zero() -> Self {
        Self::new(0.0, |_, out| out.iter_mut().for_each(|v| *v = 0.0))
    }
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum BasisFamily {
    /// `φ₀(x) = 3·s_anchor·x`, `φ_j(x) = cos((j+1)·x)` componentwise.
    Cosine { s_anchor: f64 },
    /// `p = d²`, `φ_(r,c)(x) = e_r·x_c`, `φ₀ ≡ 0`. Parameters are `vec(A)`
    /// stacked by columns, so index `c·d + r` holds `A[r][c]`.
    OuLinear,
    Custom {
        anchor: CustomField,
        fields: Vec<CustomField>,
    },
}

#[derive(Debug, Clone)]
pub struct DriftBasis {
    d: usize,
    p: usize,
    family: BasisFamily,
}

impl DriftBasis {
    pub fn cosine(d: usize, p: usize, s_anchor: f64) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(Error::InvalidInput("basis needs d ≥ 1 and p ≥ 1".into()));
        }
        if !(s_anchor > 0.0 && s_anchor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cosine anchor slope must be positive, got {s_anchor}"
            )));
        }
        Ok(Self {
            d,
            p,
            family: BasisFamily::Cosine { s_anchor },
        })
    }

    pub fn ou_linear(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("basis needs d ≥ 1".into()));
        }
        Ok(Self {
            d,
            p: d * d,
            family: BasisFamily::OuLinear,
        })
    }

    pub fn custom(d: usize, anchor: CustomField, fields: Vec<CustomField>) -> Result<Self> {
        if d == 0 || fields.is_empty() {
            return Err(Error::InvalidInput("basis needs d ≥ 1 and p ≥ 1".into()));
        }
        let bad = std::iter::once(&anchor)
            .chain(fields.iter())
            .any(|f| !(f.lipschitz >= 0.0 && f.lipschitz.is_finite()));
        if bad {
            return Err(Error::InvalidInput(
                "custom fields must declare finite nonnegative Lipschitz constants".into(),
            ));
        }
        Ok(Self {
            d,
            p: fields.len(),
            family: BasisFamily::Custom { anchor, fields },
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn is_ou_linear(&self) -> bool {
        matches!(self.family, BasisFamily::OuLinear)
    }

    /// Writes `φ₀(x)` into `out`.
    pub fn eval_anchor(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            BasisFamily::Cosine { s_anchor } => {
                let slope = 3.0 * s_anchor;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = slope * xi;
                }
            }
            BasisFamily::OuLinear => out.iter_mut().for_each(|o| *o = 0.0),
            BasisFamily::Custom { anchor, .. } => (anchor.field)(x, out),
        }
    }

    /// Writes `φ₀(x)` into `anchor` and the `d×p` feature matrix `Φ(x)` into
    /// `features`, column-major (column `j` occupies `features[j*d..(j+1)*d]`).
    pub fn eval_features(&self, x: &[f64], anchor: &mut [f64], features: &mut [f64]) {
        let d = self.d;
        self.eval_anchor(x, anchor);
        match &self.family {
            BasisFamily::Cosine { .. } => {
                for (j, col) in features.chunks_exact_mut(d).enumerate() {
                    let freq = (j + 2) as f64;
                    for (o, xi) in col.iter_mut().zip(x) {
                        *o = (freq * xi).cos();
                    }
                }
            }
            BasisFamily::OuLinear => {
                features.iter_mut().for_each(|o| *o = 0.0);
                for c in 0..d {
                    for r in 0..d {
                        features[(c * d + r) * d + r] = x[c];
                    }
                }
            }
            BasisFamily::Custom { fields, .. } => {
                for (f, col) in fields.iter().zip(features.chunks_exact_mut(d)) {
                    (f.field)(x, col);
                }
            }
        }
    }

    /// `b_θ(x)` without allocation; `theta` and `x` are assumed checked.
    pub(crate) fn drift_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let d = self.d;
        self.eval_anchor(x, out);
        match &self.family {
            BasisFamily::Cosine { .. } => {
                for (j, &t) in theta.iter().enumerate() {
                    if t == 0.0 {
                        continue;
                    }
                    let freq = (j + 2) as f64;
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += t * (freq * xi).cos();
                    }
                }
            }
            BasisFamily::OuLinear => {
                for c in 0..d {
                    let xc = x[c];
                    if xc == 0.0 {
                        continue;
                    }
                    for r in 0..d {
                        out[r] += theta[c * d + r] * xc;
                    }
                }
            }
            BasisFamily::Custom { fields, .. } => {
                let mut buf = vec![0.0; d];
                for (f, &t) in fields.iter().zip(theta) {
                    if t == 0.0 {
                        continue;
                    }
                    (f.field)(x, &mut buf);
                    for (o, v) in out.iter_mut().zip(&buf) {
                        *o += t * v;
                    }
                }
            }
        }
    }

    /// `b_θ(x) = φ₀(x) + Σ_j θ_j φ_j(x)`.
    pub fn eval_drift(&self, theta: &SparseParam, x: &[f64]) -> Result<Vec<f64>> {
        check_len("parameter length", self.p, theta.len())?;
        check_len("state dimension", self.d, x.len())?;
        let mut out = vec![0.0; self.d];
        self.drift_into(theta.values(), x, &mut out);
        Ok(out)
    }

    /// Declared Lipschitz constants `[L₀, L₁, …, L_p]`.
    pub fn lipschitz_constants(&self) -> Vec<f64> {
        match &self.family {
            BasisFamily::Cosine { s_anchor } => std::iter::once(3.0 * s_anchor)
                .chain((1..=self.p).map(|j| (j + 1) as f64))
                .collect(),
            BasisFamily::OuLinear => std::iter::once(0.0)
                .chain(std::iter::repeat_n(1.0, self.p))
                .collect(),
            BasisFamily::Custom { anchor, fields } => std::iter::once(anchor.lipschitz)
                .chain(fields.iter().map(|f| f.lipschitz))
                .collect(),
        }
    }

    /// Per-component linear-growth constants `C_j` of the parameter fields,
    /// `|φ_j^k(x)| ≤ C_j (1 + |x|)`.
    pub fn growth_constants(&self) -> Vec<f64> {
        match &self.family {
            BasisFamily::Cosine { .. } | BasisFamily::OuLinear => vec![1.0; self.p],
            BasisFamily::Custom { fields, .. } => {
                let zero = vec![0.0; self.d];
                let mut buf = vec![0.0; self.d];
                fields
                    .iter()
                    .map(|f| {
                        (f.field)(&zero, &mut buf);
                        let at_zero = buf.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                        f.lipschitz.max(at_zero)
                    })
                    .collect()
            }
        }
    }
}

/// Parameter vector with an optional declared sparsity.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseParam {
    values: Vec<f64>,
    declared_sparsity: Option<usize>,
}

impl SparseParam {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            declared_sparsity: None,
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self::new(vec![0.0; p])
    }

    /// Fails unless exactly `s` entries are nonzero.
    pub fn with_sparsity(values: Vec<f64>, s: usize) -> Result<Self> {
        let nnz = sparsity(&values, 0.0);
        if nnz != s {
            return Err(Error::InvalidInput(format!(
                "declared sparsity {s} but {nnz} entries are nonzero"
            )));
        }
        Ok(Self {
            values,
            declared_sparsity: Some(s),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn declared_sparsity(&self) -> Option<usize> {
        self.declared_sparsity
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Interaction matrix of an Ornstein–Uhlenbeck drift `b(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OUParam {
    pub a: DMatrix<f64>,
}

impl OUParam {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("interaction matrix must be square".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("interaction matrix has non-finite entries".into()));
        }
        Ok(Self { a })
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    /// Column-stacked `vec(A)`, matching the ou-linear basis ordering.
    pub fn to_vec(&self) -> Vec<f64> {
        self.a.as_slice().to_vec()
    }

    pub fn from_vec(d: usize, v: &[f64]) -> Result<Self> {
        check_len("vec(A) length", d * d, v.len())?;
        Self::new(DMatrix::from_column_slice(d, d, v))
    }
}

/// Number of entries with `|θ_j| > tau`.
pub fn sparsity(theta: &[f64], tau: f64) -> usize {
    theta.iter().filter(|v| v.abs() > tau).count()
}

/// Indices of the `s` largest-magnitude entries; equal magnitudes are taken
/// in ascending index order.
pub fn top_indices(x: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// Membership in the cone `{x ≠ 0 : ‖x‖₁ ≤ (1+c)·‖x restricted to its s largest entries‖₁}`.
pub fn cone_membership(x: &[f64], s: usize, c: f64) -> Result<bool> {
    if s == 0 || !(c > 0.0) {
        return Err(Error::InvalidInput("cone needs s ≥ 1 and c > 0".into()));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("the cone excludes the zero vector".into()));
    }
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    let head: f64 = top_indices(x, s).iter().map(|&i| x[i].abs()).sum();
    Ok(total <= (1.0 + c) * head)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_drift_examples() {
        let basis = DriftBasis::cosine(1, 1, 1.0).unwrap();
        let b = basis.eval_drift(&SparseParam::new(vec![0.0]), &[2.0]).unwrap();
        assert_eq!(b, vec![6.0]);
        let b = basis.eval_drift(&SparseParam::new(vec![1.0]), &[0.0]).unwrap();
        assert_eq!(b, vec![1.0]);
    }

    #[test]
    fn ou_linear_identity() {
        let basis = DriftBasis::ou_linear(2).unwrap();
        let a = OUParam::new(DMatrix::identity(2, 2)).unwrap();
        let b = basis
            .eval_drift(&SparseParam::new(a.to_vec()), &[3.0, -1.0])
            .unwrap();
        assert_eq!(b, vec![3.0, -1.0]);
    }

    #[test]
    fn ou_linear_matches_matrix_product() {
        let basis = DriftBasis::ou_linear(3).unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.3, 0.0, 0.0, 4.0]);
        let x = nalgebra::DVector::from_vec(vec![0.2, -1.5, 0.7]);
        let b = basis
            .eval_drift(&SparseParam::new(a.as_slice().to_vec()), x.as_slice())
            .unwrap();
        let expect = &a * &x;
        for (u, v) in b.iter().zip(expect.iter()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn drift_rejects_bad_dimensions() {
        let basis = DriftBasis::cosine(2, 3, 1.0).unwrap();
        assert!(basis.eval_drift(&SparseParam::zeros(2), &[0.0, 0.0]).is_err());
        assert!(basis.eval_drift(&SparseParam::zeros(3), &[0.0]).is_err());
    }

    #[test]
    fn cosine_lipschitz_constants() {
        let basis = DriftBasis::cosine(4, 5, 2.0).unwrap();
        assert_eq!(basis.lipschitz_constants(), vec![6.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn cone_examples() {
        assert!(cone_membership(&[3.0, 0.1], 1, 1.0).unwrap());
        assert!(!cone_membership(&[1.0, 1.0, 1.0, 1.0], 1, 1.0).unwrap());
        assert!(cone_membership(&[21.0, 0.7], 1, 1.0).unwrap());
        assert!(cone_membership(&[0.0, 0.0], 1, 1.0).is_err());
    }

    #[test]
    fn top_indices_break_ties_by_index() {
        assert_eq!(top_indices(&[1.0, -2.0, 2.0, 1.0], 2), vec![1, 2]);
        assert_eq!(top_indices(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity(&[0.0, 2.5, 0.0, -3.0], 0.0), 2);
        assert_eq!(sparsity(&[1e-12, 2.0], 1e-10), 1);
        assert_eq!(sparsity(&[0.0; 4], 0.3), 0);
    }

    #[test]
    fn declared_sparsity_enforced() {
        assert!(SparseParam::with_sparsity(vec![0.0, 1.0], 1).is_ok());
        assert!(SparseParam::with_sparsity(vec![0.0, 1.0], 2).is_err());
    }
}
