//! Local models with a one-dimensional center crossed with hyperbolic blocks,
//! and the bookkeeping needed to connect invariant curve germs across many
//! iterates of such a model.
//!
//! Everything here is polynomial with exact rational coefficients.  A model
//! map acts on a polyball `|x| ≤ α_c`, `|y|∞ ≤ α_s`, `|z|∞ ≤ α_u` as
//!
//! ```text
//! (x, y, z)  ↦  (F_c(x), Aˢ(x)·y, Aᵘ(x)·z)
//! ```
//!
//! with a scalar germ `F_c` fixing 0 and matrix polynomials `Aˢ`, `Aᵘ` whose
//! constant parts are hyperbolic (spectrum strictly inside / outside the unit
//! circle).  [`MatPoly`] supplies the matrix-polynomial arithmetic — products,
//! composition with a scalar polynomial, truncated Neumann inverses — together
//! with the seminorm `‖A‖ = Σ_k ‖A_k‖₂` used for every smallness estimate.
//! Truncation at a fixed degree is an algebra morphism, which is what makes
//! the residual checks below exact rather than approximate.
//!
//! The connecting construction takes a curve germ `t ↦ (t, ŷ(t), 0)` on the
//! stable side and `t ↦ (t, 0, ẑ(t))` on the unstable side and produces
//! polynomial correctors `P_n`, `Q_{−n}` such that the sheared maps
//! `h₋ : z ↦ z + Q_{−n}(x)` before the first step and `h₊ : y ↦ y − P_n(x)`
//! after the last carry the first curve onto the second across `n` steps of
//! the model — exactly, through the chosen jet order.  The correctors decay
//! geometrically exactly when the two rates reported by [`pinching_check`]
//! sit below 1.  [`verify_connecting`] re-transports the full jet and returns
//! the residual (identically zero when the construction applies), and refuses
//! with a hard error if the modeled orbit ever leaves the polyball.

use crate::jet::{Jet, JetError, Q};
use nalgebra::DMatrix;
use num::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, thiserror::Error)]
pub enum TakensError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("composition base mismatch: inner polynomial takes value {got} where {want} is required")]
    BaseMismatch { got: String, want: String },
    #[error("stable block has an eigenvalue of modulus {0}; the spectrum must lie strictly inside the unit circle")]
    StableSpectrum(f64),
    #[error("unstable block has an eigenvalue of modulus {0}; the spectrum must lie strictly outside the unit circle")]
    UnstableSpectrum(f64),
    #[error("rescale factor must be positive, got {0}")]
    BadScale(String),
    #[error("pinching fails: stable rate {stable}, unstable rate {unstable} (both must drop below 1)")]
    PinchingFails { stable: f64, unstable: f64 },
    #[error("curve data leaves the polyball: {0}")]
    BallViolation(String),
    #[error("modeled orbit leaves the polyball at step {step} in the {block} block")]
    OrbitExit { step: usize, block: &'static str },
    #[error("resonance within gap {gap:e}: {relation}")]
    Resonance { relation: String, gap: f64 },
    #[error("normal form needs {0}")]
    NormalFormShape(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Rational → double, sending overflow to the correctly signed infinity so
/// that norm comparisons fail loudly instead of silently.
pub(crate) fn qf(x: &Q) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

// ---------------------------------------------------------------------------
// Dense exact matrices
// ---------------------------------------------------------------------------

/// Dense matrix over the rationals.  Everything structural (products, Gaussian
/// inverses, sup norms) stays exact; only the spectral data drops to floating
/// point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    a: Vec<Q>, // row major
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            a: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m.a[i * n + i] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self, TakensError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(TakensError::Shape("ragged rows".into()));
        }
        Ok(QMat {
            rows: r,
            cols: c,
            a: rows.into_iter().flatten().collect(),
        })
    }

    /// Column vector.
    pub fn col(vals: Vec<Q>) -> Self {
        let rows = vals.len();
        QMat {
            rows,
            cols: 1,
            a: vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.a[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Q::is_zero)
    }

    fn same_shape(&self, o: &QMat) -> Result<(), TakensError> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(TakensError::Shape(format!(
                "{}×{} vs {}×{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &QMat) -> Result<QMat, TakensError> {
        self.same_shape(o)?;
        Ok(QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn sub(&self, o: &QMat) -> Result<QMat, TakensError> {
        self.same_shape(o)?;
        Ok(QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
        })
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn mul(&self, o: &QMat) -> Result<QMat, TakensError> {
        if self.cols != o.rows {
            return Err(TakensError::Shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = QMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let v = &out.a[i * o.cols + j] + &(aik * o.get(k, j));
                    out.a[i * o.cols + j] = v;
                }
            }
        }
        Ok(out)
    }

    /// Exact inverse by Gauss–Jordan elimination; `None` when the matrix is
    /// not square or not invertible.
    pub fn inverse(&self) -> Option<QMat> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.a.clone();
        let mut b = QMat::identity(n).a;
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                    b.swap(col * n + k, piv * n + k);
                }
            }
            let p = a[col * n + col].clone();
            for k in 0..n {
                a[col * n + k] = &a[col * n + k] / &p;
                b[col * n + k] = &b[col * n + k] / &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..n {
                    a[r * n + k] = &a[r * n + k] - &(&f * &a[col * n + k]);
                    b[r * n + k] = &b[r * n + k] - &(&f * &b[col * n + k]);
                }
            }
        }
        Some(QMat {
            rows: n,
            cols: n,
            a: b,
        })
    }

    /// Largest absolute entry, exact.
    pub fn sup_norm(&self) -> Q {
        self.a
            .iter()
            .map(Signed::abs)
            .fold(Q::zero(), |m, v| if v > m { v } else { m })
    }

    fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| qf(self.get(i, j)))
    }

    /// Operator 2-norm, `√λ_max(AᵀA)`, in floating point.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let m = self.to_f64();
        let gram = m.transpose() * &m;
        gram.symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, &l| acc.max(l))
            .max(0.0)
            .sqrt()
    }

    /// Moduli of the (complex) eigenvalues, in floating point.
    pub fn eigen_moduli(&self) -> Vec<f64> {
        if self.rows != self.cols || self.rows == 0 {
            return Vec::new();
        }
        self.to_f64()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Matrix polynomials
// ---------------------------------------------------------------------------

/// Matrix-valued polynomial `A(x) = Σ_k A_k (x − p)^k` around a base point
/// `p`, with uniform coefficient shape.  Trailing zero coefficients are
/// trimmed, so structural equality is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatPoly {
    base: Q,
    coeffs: Vec<QMat>,
}

impl MatPoly {
    fn normalized(base: Q, mut coeffs: Vec<QMat>) -> MatPoly {
        while coeffs.len() > 1 && coeffs.last().is_some_and(QMat::is_zero) {
            coeffs.pop();
        }
        MatPoly { base, coeffs }
    }

    pub fn new(base: Q, coeffs: Vec<QMat>) -> Result<Self, TakensError> {
        let Some(first) = coeffs.first() else {
            return Err(TakensError::Shape(
                "a matrix polynomial needs at least a constant coefficient".into(),
            ));
        };
        let (r, c) = (first.rows, first.cols);
        if coeffs.iter().any(|m| m.rows != r || m.cols != c) {
            return Err(TakensError::Shape(
                "coefficient matrices must share one shape".into(),
            ));
        }
        Ok(MatPoly::normalized(base, coeffs))
    }

    pub fn constant(base: Q, m: QMat) -> Self {
        MatPoly {
            base,
            coeffs: vec![m],
        }
    }

    pub fn zero(base: Q, rows: usize, cols: usize) -> Self {
        MatPoly::constant(base, QMat::zeros(rows, cols))
    }

    /// 1×1 polynomial from scalar coefficients, constant term first.
    pub fn scalar(base: Q, vals: Vec<Q>) -> Self {
        let coeffs = if vals.is_empty() {
            vec![QMat::zeros(1, 1)]
        } else {
            vals.into_iter()
                .map(|v| {
                    let mut m = QMat::zeros(1, 1);
                    m.set(0, 0, v);
                    m
                })
                .collect()
        };
        MatPoly::normalized(base, coeffs)
    }

    /// A germ fixing 0, reinterpreted as a 1×1 polynomial based at 0 (the
    /// constant term is zero by construction).
    pub fn from_jet(j: &Jet) -> Self {
        let mut vals = Vec::with_capacity(j.order() + 1);
        vals.push(Q::zero());
        vals.extend(j.coeffs().iter().cloned());
        MatPoly::scalar(Q::zero(), vals)
    }

    pub fn base(&self) -> &Q {
        &self.base
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].rows
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].cols
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `(x − p)^k`, zero-padded beyond the stored degree.
    pub fn coeff(&self, k: usize) -> QMat {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| QMat::zeros(self.rows(), self.cols()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(QMat::is_zero)
    }

    pub fn truncate(&self, r: usize) -> MatPoly {
        MatPoly::normalized(
            self.base.clone(),
            self.coeffs.iter().take(r + 1).cloned().collect(),
        )
    }

    fn check_base(&self, o: &MatPoly) -> Result<(), TakensError> {
        if self.base != o.base {
            return Err(TakensError::BaseMismatch {
                got: o.base.to_string(),
                want: self.base.to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, o: &MatPoly) -> Result<MatPoly, TakensError> {
        self.check_base(o)?;
        self.coeffs[0].same_shape(&o.coeffs[0])?;
        let deg = self.degree().max(o.degree());
        let coeffs = (0..=deg)
            .map(|k| self.coeff(k).add(&o.coeff(k)))
            .collect::<Result<_, _>>()?;
        Ok(MatPoly::normalized(self.base.clone(), coeffs))
    }

    pub fn sub(&self, o: &MatPoly) -> Result<MatPoly, TakensError> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> MatPoly {
        MatPoly {
            base: self.base.clone(),
            coeffs: self.coeffs.iter().map(|m| m.scale(&-Q::one())).collect(),
        }
    }

    /// Product truncated at degree `r`.
    pub fn mul_trunc(&self, o: &MatPoly, r: usize) -> Result<MatPoly, TakensError> {
        self.check_base(o)?;
        if self.cols() != o.rows() {
            return Err(TakensError::Shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows(),
                self.cols(),
                o.rows(),
                o.cols()
            )));
        }
        let deg = (self.degree() + o.degree()).min(r);
        let mut out = vec![QMat::zeros(self.rows(), o.cols()); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > deg {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j > deg {
                    break;
                }
                out[i + j] = out[i + j].add(&a.mul(b)?)?;
            }
        }
        Ok(MatPoly::normalized(self.base.clone(), out))
    }

    /// Multiply by a scalar polynomial in the same variable (coefficients
    /// constant-first, based where `self` ends up living).
    fn mul_scalar_vec(&self, u: &[Q], r: usize) -> MatPoly {
        let deg = (self.degree() + u.len().saturating_sub(1)).min(r);
        let mut out = vec![QMat::zeros(self.rows(), self.cols()); deg + 1];
        for (j, m) in self.coeffs.iter().enumerate() {
            if j > deg {
                break;
            }
            for (i, c) in u.iter().enumerate() {
                if j + i > deg {
                    break;
                }
                if c.is_zero() {
                    continue;
                }
                out[j + i] = out[j + i]
                    .add(&m.scale(c))
                    .expect("uniform shapes by construction");
            }
        }
        MatPoly::normalized(self.base.clone(), out)
    }

    /// `self ∘ inner`, truncated at degree `r`.  The inner polynomial must be
    /// scalar and must send its base point to `self`'s base point — that is
    /// the exact analogue of "the orbit lands where the next chart lives".
    pub fn compose_trunc(&self, inner: &MatPoly, r: usize) -> Result<MatPoly, TakensError> {
        if inner.rows() != 1 || inner.cols() != 1 {
            return Err(TakensError::Shape(
                "composition requires a scalar (1×1) inner polynomial".into(),
            ));
        }
        let got = inner.coeffs[0].get(0, 0).clone();
        if got != self.base {
            return Err(TakensError::BaseMismatch {
                got: got.to_string(),
                want: self.base.to_string(),
            });
        }
        let top = inner.degree().min(r);
        let mut u = vec![Q::zero(); top + 1];
        for (k, slot) in u.iter_mut().enumerate().skip(1) {
            *slot = inner.coeffs[k].get(0, 0).clone();
        }
        let mut acc = MatPoly::zero(inner.base.clone(), self.rows(), self.cols());
        for k in (0..=self.degree()).rev() {
            acc = acc.mul_scalar_vec(&u, r);
            let c0 = acc.coeffs[0].add(&self.coeffs[k])?;
            acc.coeffs[0] = c0;
        }
        Ok(MatPoly::normalized(acc.base, acc.coeffs))
    }

    /// Inverse modulo `(x − p)^{r+1}`: exact Gauss–Jordan on the constant
    /// coefficient, then a finite Neumann sum (the higher part is nilpotent
    /// modulo the truncation).
    pub fn inverse_trunc(&self, r: usize) -> Result<MatPoly, TakensError> {
        if self.rows() != self.cols() {
            return Err(TakensError::Shape(format!(
                "only square matrix polynomials invert ({}×{})",
                self.rows(),
                self.cols()
            )));
        }
        let a0inv = self.coeffs[0].inverse().ok_or_else(|| {
            TakensError::Singular("constant coefficient of the matrix polynomial".into())
        })?;
        let mut tail = self.truncate(r);
        tail.coeffs[0] = QMat::zeros(self.rows(), self.cols());
        for m in tail.coeffs.iter_mut() {
            *m = a0inv.mul(m)?;
        }
        let n = MatPoly::normalized(self.base.clone(), tail.coeffs);
        let ident = MatPoly::constant(self.base.clone(), QMat::identity(self.rows()));
        let mut acc = ident.clone();
        let mut pw = ident;
        for _ in 0..r {
            pw = pw.mul_trunc(&n, r)?.neg();
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw)?;
        }
        acc.mul_trunc(&MatPoly::constant(self.base.clone(), a0inv), r)
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, x: &Q) -> QMat {
        let dx = x - &self.base;
        let mut v = self.coeffs[self.degree()].clone();
        for k in (0..self.degree()).rev() {
            v = v
                .scale(&dx)
                .add(&self.coeffs[k])
                .expect("uniform shapes by construction");
        }
        v
    }

    /// `Σ_k ‖A_k‖₂` — submultiplicative under truncated products, and the
    /// quantity every contraction estimate in this module is phrased in.
    pub fn seminorm(&self) -> f64 {
        self.coeffs.iter().map(QMat::spectral_norm).sum()
    }

    /// Substitute `x ↦ αx` (coefficient `k` picks up `α^k`); the base point
    /// moves to `p/α`.
    fn scale_arg(&self, alpha: &Q) -> MatPoly {
        let mut pw = Q::one();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for m in &self.coeffs {
            coeffs.push(m.scale(&pw));
            pw = &pw * alpha;
        }
        MatPoly::normalized(&self.base / alpha, coeffs)
    }
}

fn jet_seminorm(j: &Jet) -> f64 {
    j.coeffs().iter().map(|c| qf(&c.abs())).sum()
}

/// `‖G∘F‖ ≤ ‖G‖ · max(1, ‖F − F(p)‖)^r`, both sides truncated at degree `r`.
/// Returns `(lhs, rhs)` so callers can see the slack; the inequality itself
/// is a theorem, not something this function decides.
pub fn seminorm_compose_bound(
    g: &MatPoly,
    f: &MatPoly,
    r: usize,
) -> Result<(f64, f64), TakensError> {
    let comp = g.compose_trunc(f, r)?;
    let lhs = comp.seminorm();
    let mut dev = f.truncate(r);
    dev.coeffs[0] = QMat::zeros(1, 1);
    let rhs = g.truncate(r).seminorm() * dev.seminorm().max(1.0).powi(r as i32);
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// The model map
// ---------------------------------------------------------------------------

/// Skew model `(x, y, z) ↦ (F_c(x), Aˢ(x)y, Aᵘ(x)z)` on a polyball, with a
/// scalar center germ and hyperbolic matrix blocks of size at most 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TakensMap {
    ball: (Q, Q, Q),
    center: Jet,
    stable: MatPoly,
    unstable: MatPoly,
}

impl TakensMap {
    pub fn new(
        ball: (Q, Q, Q),
        center: Jet,
        stable: MatPoly,
        unstable: MatPoly,
    ) -> Result<Self, TakensError> {
        if !ball.0.is_positive() || !ball.1.is_positive() || !ball.2.is_positive() {
            return Err(TakensError::Shape("polyball radii must be positive".into()));
        }
        for (name, block) in [("stable", &stable), ("unstable", &unstable)] {
            if block.rows() != block.cols() {
                return Err(TakensError::Shape(format!(
                    "{name} block must be square, got {}×{}",
                    block.rows(),
                    block.cols()
                )));
            }
            if block.rows() > 3 {
                return Err(TakensError::Shape(format!(
                    "{name} block size {} exceeds 3",
                    block.rows()
                )));
            }
            if !block.base().is_zero() {
                return Err(TakensError::Shape(format!(
                    "{name} block must be based at the fixed point (base 0)"
                )));
            }
        }
        for m in stable.coeff(0).eigen_moduli() {
            if m >= 1.0 {
                return Err(TakensError::StableSpectrum(m));
            }
        }
        for m in unstable.coeff(0).eigen_moduli() {
            if m <= 1.0 {
                return Err(TakensError::UnstableSpectrum(m));
            }
        }
        Ok(TakensMap {
            ball,
            center,
            stable,
            unstable,
        })
    }

    pub fn ball(&self) -> &(Q, Q, Q) {
        &self.ball
    }

    pub fn center(&self) -> &Jet {
        &self.center
    }

    pub fn stable(&self) -> &MatPoly {
        &self.stable
    }

    pub fn unstable(&self) -> &MatPoly {
        &self.unstable
    }

    /// `(d_c, d_s, d_u)`; the center is always a line.
    pub fn dims(&self) -> (usize, usize, usize) {
        (1, self.stable.rows(), self.unstable.rows())
    }

    /// The center germ re-expressed at order `r` (zero-padded or truncated —
    /// the stored coefficients are the germ, so this is lossless up to the
    /// requested order).
    pub fn center_at(&self, r: usize) -> Jet {
        Jet::new(r, self.center.coeffs().to_vec()).expect("center germ is invertible")
    }

    /// Conjugate by `x ↦ αx`, `α > 0`: the center germ becomes
    /// `α⁻¹F_c(αx)`, the blocks become `A(αx)`, and the center radius grows
    /// to `α_c/α`.  Since nonlinear coefficients shrink like powers of `α`,
    /// this is the standard way to make a map satisfy the pinching bounds.
    pub fn rescale(&self, alpha: &Q) -> Result<TakensMap, TakensError> {
        if !alpha.is_positive() {
            return Err(TakensError::BadScale(alpha.to_string()));
        }
        let mut pw = Q::one();
        let mut coeffs = Vec::with_capacity(self.center.order());
        for c in self.center.coeffs() {
            coeffs.push(c * &pw);
            pw = &pw * alpha;
        }
        Ok(TakensMap {
            ball: (
                &self.ball.0 / alpha,
                self.ball.1.clone(),
                self.ball.2.clone(),
            ),
            center: Jet::new(self.center.order(), coeffs)?,
            stable: self.stable.scale_arg(alpha),
            unstable: self.unstable.scale_arg(alpha),
        })
    }
}

/// See [`TakensMap::rescale`].
pub fn rescale_conjugacy(map: &TakensMap, alpha: &Q) -> Result<TakensMap, TakensError> {
    map.rescale(alpha)
}

// ---------------------------------------------------------------------------
// Pinching
// ---------------------------------------------------------------------------

/// The two contraction rates of the connecting construction.  Both sitting
/// strictly below 1 is exactly the hypothesis under which the correctors of
/// [`connecting_correctors`] decay geometrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchingReport {
    /// `‖Aˢ‖ · max(1, ‖F_c⁻¹‖)^r`
    pub stable_rate: f64,
    /// `‖(Aᵘ)⁻¹‖ · max(1, ‖F_c‖)^r`
    pub unstable_rate: f64,
}

impl PinchingReport {
    pub fn passes(&self) -> bool {
        self.stable_rate < 1.0 && self.unstable_rate < 1.0
    }
}

/// Compute the pinching rates at truncation order `r`.  Fails hard if the
/// unstable block degenerates anywhere on the sampled center interval — a
/// singular `Aᵘ(x)` would make the backward transport meaningless rather
/// than merely slow.
pub fn pinching_check(map: &TakensMap, r: usize) -> Result<PinchingReport, TakensError> {
    if r == 0 {
        return Err(TakensError::Shape("truncation order must be ≥ 1".into()));
    }
    let ac = &map.ball.0;
    let half = ac / Q::from_integer(2.into());
    for x in [Q::zero(), ac.clone(), -ac.clone(), half.clone(), -half] {
        if map.unstable.eval(&x).inverse().is_none() {
            return Err(TakensError::Singular(format!(
                "unstable block is not invertible at x = {x}"
            )));
        }
    }
    let fc = map.center_at(r);
    let fci = fc.invert()?;
    Ok(PinchingReport {
        stable_rate: map.stable.truncate(r).seminorm() * jet_seminorm(&fci).max(1.0).powi(r as i32),
        unstable_rate: map.unstable.truncate(r).inverse_trunc(r)?.seminorm()
            * jet_seminorm(&fc).max(1.0).powi(r as i32),
    })
}

// ---------------------------------------------------------------------------
// Connecting two curve germs
// ---------------------------------------------------------------------------

/// A stable-side curve germ `t ↦ (t, ŷ(t), 0)` and an unstable-side curve
/// germ `t ↦ (t, 0, ẑ(t))` over the center line of one model map, with the
/// base points inside the polyball.
#[derive(Debug, Clone)]
pub struct ConnectingProblem {
    map: TakensMap,
    stable_curve: MatPoly,
    unstable_curve: MatPoly,
}

impl ConnectingProblem {
    pub fn new(
        map: TakensMap,
        stable_curve: MatPoly,
        unstable_curve: MatPoly,
    ) -> Result<Self, TakensError> {
        let (_, ds, du) = map.dims();
        for (name, curve, d) in [
            ("stable", &stable_curve, ds),
            ("unstable", &unstable_curve, du),
        ] {
            if curve.rows() != d || curve.cols() != 1 {
                return Err(TakensError::Shape(format!(
                    "{name} curve must be a {d}×1 polynomial, got {}×{}",
                    curve.rows(),
                    curve.cols()
                )));
            }
            if !curve.base().is_zero() {
                return Err(TakensError::Shape(format!(
                    "{name} curve must be parameterized around t = 0"
                )));
            }
        }
        let y0 = stable_curve.coeff(0).sup_norm();
        if y0 > map.ball.1 {
            return Err(TakensError::BallViolation(format!(
                "stable curve starts at sup-norm {y0}, outside the radius {}",
                map.ball.1
            )));
        }
        let z0 = unstable_curve.coeff(0).sup_norm();
        if z0 > map.ball.2 {
            return Err(TakensError::BallViolation(format!(
                "unstable curve starts at sup-norm {z0}, outside the radius {}",
                map.ball.2
            )));
        }
        Ok(ConnectingProblem {
            map,
            stable_curve,
            unstable_curve,
        })
    }

    pub fn map(&self) -> &TakensMap {
        &self.map
    }

    pub fn stable_curve(&self) -> &MatPoly {
        &self.stable_curve
    }

    pub fn unstable_curve(&self) -> &MatPoly {
        &self.unstable_curve
    }
}

/// Correctors `(P_n, Q_{−n})` at truncation order `r`, by the exact
/// recursions
///
/// ```text
/// P_0 = ŷ,   P_{k+1} = (Aˢ · P_k) ∘ F_c⁻¹
/// Q_0 = ẑ,   Q_{k+1} = (Aᵘ)⁻¹ · (Q_k ∘ F_c)
/// ```
///
/// so that `P_n(0) = Aˢ(0)ⁿ ŷ(0)` and `Q_{−n}(0) = Aᵘ(0)⁻ⁿ ẑ(0)` hold on the
/// nose, and `‖P_n‖`, `‖Q_{−n}‖` decay at the pinching rates.  Refuses maps
/// that fail the pinching bounds — without them the norms may grow and the
/// construction proves nothing.
pub fn connecting_correctors(
    problem: &ConnectingProblem,
    n: usize,
    r: usize,
) -> Result<(MatPoly, MatPoly), TakensError> {
    let report = pinching_check(&problem.map, r)?;
    if !report.passes() {
        return Err(TakensError::PinchingFails {
            stable: report.stable_rate,
            unstable: report.unstable_rate,
        });
    }
    let fc = MatPoly::from_jet(&problem.map.center_at(r));
    let fci = MatPoly::from_jet(&problem.map.center_at(r).invert()?);
    let a_s = problem.map.stable.truncate(r);
    let au_inv = problem.map.unstable.truncate(r).inverse_trunc(r)?;
    let mut p = problem.stable_curve.truncate(r);
    let mut q = problem.unstable_curve.truncate(r);
    for _ in 0..n {
        p = a_s.mul_trunc(&p, r)?.compose_trunc(&fci, r)?;
        q = au_inv.mul_trunc(&q.compose_trunc(&fc, r)?, r)?;
    }
    Ok((p, q))
}

/// What is left after transporting the entry-corrected stable curve through
/// `n` steps and subtracting the exit-corrected target curve.  All three
/// components vanish identically when the construction applies.
#[derive(Debug, Clone)]
pub struct ConnectingResidual {
    pub center: MatPoly,
    pub stable: MatPoly,
    pub unstable: MatPoly,
}

impl ConnectingResidual {
    pub fn is_zero(&self) -> bool {
        self.center.is_zero() && self.stable.is_zero() && self.unstable.is_zero()
    }
}

/// Transport the corrected curve and return the exact jet residual against
/// the target curve.  Audits the base-point orbit against the polyball first
/// and reports the step at which it would escape; geometry failures are
/// errors, not small numbers.
pub fn verify_connecting(
    problem: &ConnectingProblem,
    n: usize,
    r: usize,
) -> Result<ConnectingResidual, TakensError> {
    verify_connecting_partial(problem, n, r, true, true)
}

/// [`verify_connecting`] with the entry shear (`z += Q_{−n}(x)`) and the exit
/// shear (`y −= P_n(x)`) individually switchable — turning one off shows the
/// residual the corrector was responsible for cancelling.
pub fn verify_connecting_partial(
    problem: &ConnectingProblem,
    n: usize,
    r: usize,
    apply_entry: bool,
    apply_exit: bool,
) -> Result<ConnectingResidual, TakensError> {
    let (p_n, q_n) = connecting_correctors(problem, n, r)?;
    let map = &problem.map;
    let (_, ds, du) = map.dims();

    // Exact audit of the base-point orbit (t = 0: the center coordinate stays
    // at the fixed point, the hyperbolic parts move by the constant blocks).
    let as0 = map.stable.coeff(0);
    let au0 = map.unstable.coeff(0);
    let mut y = problem.stable_curve.coeff(0);
    let mut z = if apply_entry {
        q_n.coeff(0)
    } else {
        QMat::zeros(du, 1)
    };
    for step in 0..=n {
        if y.sup_norm() > map.ball.1 {
            return Err(TakensError::OrbitExit {
                step,
                block: "stable",
            });
        }
        if z.sup_norm() > map.ball.2 {
            return Err(TakensError::OrbitExit {
                step,
                block: "unstable",
            });
        }
        if step < n {
            y = as0.mul(&y)?;
            z = au0.mul(&z)?;
        }
    }

    // Exact jet transport.  Truncation commutes with products and with
    // composition by the center germ, so every line below is the full
    // Taylor expansion of the corresponding smooth object.
    let fc = map.center_at(r);
    let mut c = Jet::new(r, vec![Q::one()])?;
    let mut ys = problem.stable_curve.truncate(r);
    let mut zs = if apply_entry {
        q_n.clone()
    } else {
        MatPoly::zero(Q::zero(), du, 1)
    };
    let _ = ds;
    for _ in 0..n {
        let cm = MatPoly::from_jet(&c);
        ys = map
            .stable
            .truncate(r)
            .compose_trunc(&cm, r)?
            .mul_trunc(&ys, r)?;
        zs = map
            .unstable
            .truncate(r)
            .compose_trunc(&cm, r)?
            .mul_trunc(&zs, r)?;
        c = fc.compose(&c)?;
    }
    let cm = MatPoly::from_jet(&c);
    if apply_exit {
        ys = ys.sub(&p_n.compose_trunc(&cm, r)?)?;
    }
    let target = problem.unstable_curve.truncate(r).compose_trunc(&cm, r)?;
    let center_ref = MatPoly::from_jet(&fc.pow(n as i64)?);
    Ok(ConnectingResidual {
        center: cm.sub(&center_ref)?,
        stable: ys,
        unstable: zs.sub(&target)?,
    })
}
