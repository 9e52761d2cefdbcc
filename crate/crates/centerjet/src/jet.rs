//! Truncated jets of one-dimensional germs fixing 0, with exact rational
//! coefficients.
//!
//! A [`Jet`] of order `K` stores the coefficients `c_1..c_K` of a germ
//! `F(t) = c_1 t + c_2 t² + … + c_K t^K` with `c_1 ≠ 0`, i.e. the germ of a
//! local diffeomorphism at the origin considered modulo `o(t^K)`. Everything
//! here is exact: flatness claims are coefficient equalities, not tolerance
//! checks, which is the point of keeping the arithmetic in ℚ.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::fmt;
use std::str::FromStr;

pub type Q = BigRational;

/// Shorthand for an exact rational from an integer pair.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an exact rational from an integer.
pub fn qi(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum JetError {
    #[error("jet orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("germ is not invertible: leading coefficient is zero")]
    NonInvertible,
    #[error("operation needs order >= {need}, jet has order {has}")]
    InsufficientOrder { need: usize, has: usize },
    #[error("signature is only defined for 1-flat germs (leading coefficient 1)")]
    NotOneFlat,
    #[error("flow embedding needs a positive leading coefficient")]
    Orientation,
    #[error("no exact rational {0}-th root of the leading coefficient; use an integer time or a 1-flat germ")]
    NoExactRoot(u64),
    #[error("flow time must be rational p/q with q != 0")]
    BadFlowTime,
    #[error("cannot parse jet: {0}")]
    Parse(String),
}

/// Sign pair (τ_A, τ_S) attached to a 1-flat germ or a transition map.
///
/// Values are −1, 0, +1. The pair is a conjugacy invariant only in the
/// 1-flat case, which is why [`Jet::signature`] refuses other germs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignPair {
    pub tau_a: i8,
    pub tau_s: i8,
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: i8| match v {
            1 => "+",
            -1 => "-",
            _ => "0",
        };
        write!(f, "({}, {})", s(self.tau_a), s(self.tau_s))
    }
}

// ---------------------------------------------------------------------------
// polynomial helpers on coefficient vectors without constant term
// (v[0] is the coefficient of t^1); every product is truncated at `ord` terms
// ---------------------------------------------------------------------------

fn ptrim(v: &mut Vec<Q>, ord: usize) {
    v.truncate(ord);
    while v.len() < ord {
        v.push(Q::zero());
    }
}

fn pmul(a: &[Q], b: &[Q], ord: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); ord];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            let d = i + j + 1; // degrees are (i+1)+(j+1), slot is degree-1
            if d >= ord {
                break;
            }
            out[d] += ai * bj;
        }
    }
    out
}

/// `outer(inner(t))` truncated; both are constant-free coefficient vectors.
fn pcompose(outer: &[Q], inner: &[Q], ord: usize) -> Vec<Q> {
    // Horner from the top: acc = (…(c_K · inner + c_{K-1}) · inner …) — but the
    // constant-free representation makes plain power accumulation clearer.
    let mut out = vec![Q::zero(); ord];
    let mut pw: Vec<Q> = inner.to_vec(); // inner^1
    ptrim(&mut pw, ord);
    for (k, ck) in outer.iter().enumerate() {
        if !ck.is_zero() {
            for (d, pd) in pw.iter().enumerate() {
                out[d] += ck * pd;
            }
        }
        if k + 1 < outer.len() {
            pw = pmul(&pw, inner, ord);
        }
    }
    out
}

// ---------------------------------------------------------------------------

/// Exact truncated germ of a local diffeomorphism fixing 0.
#[derive(Clone, PartialEq, Eq)]
pub struct Jet {
    c: Vec<Q>, // c[0] = c_1, guaranteed nonzero; len = order
}

impl Jet {
    /// Build from `c_1..c_k` coefficients (padded with zeros up to `order`).
    pub fn new(order: usize, coeffs: Vec<Q>) -> Result<Self, JetError> {
        assert!(order >= 1, "jet order must be at least 1");
        if coeffs.is_empty() || coeffs[0].is_zero() {
            return Err(JetError::NonInvertible);
        }
        let mut c = coeffs;
        ptrim(&mut c, order);
        Ok(Jet { c })
    }

    /// Convenience constructor from integer pairs `(num, den)` for `c_1..`.
    pub fn from_pairs(order: usize, pairs: &[(i64, i64)]) -> Self {
        Jet::new(order, pairs.iter().map(|&(n, d)| q(n, d)).collect()).expect("valid jet literal")
    }

    pub fn identity(order: usize) -> Self {
        let mut c = vec![Q::zero(); order];
        c[0] = Q::one();
        Jet { c }
    }

    pub fn linear(order: usize, lambda: Q) -> Result<Self, JetError> {
        Jet::new(order, vec![lambda])
    }

    pub fn order(&self) -> usize {
        self.c.len()
    }

    /// Coefficient of `t^k` (1-based: `coeff(1)` is the multiplier).
    pub fn coeff(&self, k: usize) -> &Q {
        &self.c[k - 1]
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn multiplier(&self) -> &Q {
        &self.c[0]
    }

    pub fn is_identity(&self) -> bool {
        self.c[0].is_one() && self.c[1..].iter().all(Q::is_zero)
    }

    /// `self ∘ inner`, exactly, truncated at the common order.
    pub fn compose(&self, inner: &Jet) -> Result<Jet, JetError> {
        if self.order() != inner.order() {
            return Err(JetError::OrderMismatch(self.order(), inner.order()));
        }
        Ok(Jet {
            c: pcompose(&self.c, &inner.c, self.order()),
        })
    }

    /// Compositional inverse: `compose(self, invert(self))` is the identity
    /// jet exactly, at every order up to K.
    pub fn invert(&self) -> Result<Jet, JetError> {
        let ord = self.order();
        let c1 = &self.c[0];
        if c1.is_zero() {
            return Err(JetError::NonInvertible);
        }
        // order-by-order: with G = Σ b_k t^k, [t^m](F∘G) must match id.
        let mut b = vec![Q::zero(); ord];
        b[0] = Q::one() / c1;
        for m in 2..=ord {
            // compose using the b known so far (b_m = 0 slot); the t^m
            // coefficient is linear in b_m with factor c_1.
            let partial = Jet { c: b.clone() };
            let comp = pcompose(&self.c, &partial.c, ord);
            let mismatch = -&comp[m - 1];
            b[m - 1] = mismatch / c1;
        }
        Ok(Jet { c: b })
    }

    /// `H^{-1} ∘ self ∘ H`.
    pub fn conjugate(&self, h: &Jet) -> Result<Jet, JetError> {
        let hinv = h.invert()?;
        hinv.compose(self)?.compose(h)
    }

    /// `self^m` under composition; negative `m` goes through the inverse.
    pub fn pow(&self, m: i64) -> Result<Jet, JetError> {
        let base = if m < 0 { self.invert()? } else { self.clone() };
        let mut e = m.unsigned_abs();
        let mut acc = Jet::identity(self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.compose(&sq)?;
            }
        }
        Ok(acc)
    }

    /// Nonlinearity `A = F''(0)/F'(0) = 2c₂/c₁` and Schwarzian
    /// `S = F'''/F' − (3/2)(F''/F')² = 6c₃/c₁ − 6(c₂/c₁)²`.
    pub fn invariants_as(&self) -> Result<(Q, Q), JetError> {
        if self.order() < 3 {
            return Err(JetError::InsufficientOrder {
                need: 3,
                has: self.order(),
            });
        }
        let r2 = &self.c[1] / &self.c[0];
        let r3 = &self.c[2] / &self.c[0];
        let a = qi(2) * &r2;
        let s = qi(6) * r3 - qi(6) * &r2 * &r2;
        Ok((a, s))
    }

    pub fn nonlinearity(&self) -> Result<Q, JetError> {
        Ok(self.invariants_as()?.0)
    }

    pub fn schwarzian(&self) -> Result<Q, JetError> {
        Ok(self.invariants_as()?.1)
    }

    /// 0 if the multiplier differs from 1; otherwise the largest `k ≤ K` with
    /// `c_2 = … = c_k = 0` (so 1 means the quadratic term is present, K means
    /// the jet is the identity).
    pub fn flat_order(&self) -> usize {
        if !self.c[0].is_one() {
            return 0;
        }
        let mut k = 1;
        while k < self.order() && self.c[k].is_zero() {
            k += 1;
        }
        k
    }

    /// (sgn A, sgn S); only defined for 1-flat germs, where the pair is a
    /// conjugacy invariant.
    pub fn signature(&self) -> Result<SignPair, JetError> {
        if self.flat_order() < 1 {
            return Err(JetError::NotOneFlat);
        }
        let (a, s) = self.invariants_as()?;
        let sgn = |v: &Q| -> i8 {
            if v.is_zero() {
                0
            } else if v.is_positive() {
                1
            } else {
                -1
            }
        };
        Ok(SignPair {
            tau_a: sgn(&a),
            tau_s: sgn(&s),
        })
    }

    // -- flow embedding -----------------------------------------------------

    /// Jet Koenigs conjugation: the unique `ψ = t + p₂t² + …` with
    /// `ψ ∘ self = λ·ψ` at jet level, requiring multiplier `λ ∉ {0, ±1}`
    /// (then `λ^m ≠ λ` for all 2 ≤ m ≤ K and the triangular solve is exact).
    pub fn koenigs_conjugator(&self) -> Result<Jet, JetError> {
        let ord = self.order();
        let lam = self.c[0].clone();
        if lam.is_one() || lam.is_zero() || (-&lam).is_one() {
            return Err(JetError::NonInvertible);
        }
        let mut p = vec![Q::zero(); ord];
        p[0] = Q::one();
        for m in 2..=ord {
            let partial = Jet { c: p.clone() };
            let lhs = pcompose(&partial.c, &self.c, ord); // ψ∘F with p_m = 0
            // [t^m](ψ∘F) = p_m λ^m + lhs_m; want = λ p_m
            let lam_m = num::pow::pow(lam.clone(), m);
            p[m - 1] = &lhs[m - 1] / (&lam - lam_m);
        }
        Ok(Jet { c: p })
    }

    /// The vector-field coefficients `v` (with `v₁ = 0`) whose time-1 jet
    /// flow is `self`; requires a 1-flat germ. Exact formal logarithm.
    fn formal_log(&self) -> Vec<Q> {
        debug_assert!(self.c[0].is_one());
        let ord = self.order();
        let id = Jet::identity(ord);
        let mut v: Vec<Q> = self
            .c
            .iter()
            .zip(id.c.iter())
            .map(|(a, b)| a - b)
            .collect();
        // fixed-point refinement: each pass corrects one more order exactly
        for _ in 0..ord {
            let flowed = flow_of_field(&v, &Q::one(), ord);
            for k in 0..ord {
                let diff = &self.c[k] - &flowed[k];
                v[k] += diff;
            }
        }
        v
    }

    /// `Φ^μ` with `Φ^0 = id`, `Φ^1 = self`, and `Φ^a ∘ Φ^b = Φ^{a+b}` exactly
    /// at jet level.
    ///
    /// Exactness domain: any rational `μ` for 1-flat germs (formal
    /// logarithm); for multiplier `λ ≠ 1` the call succeeds when `λ^μ` is
    /// rational, i.e. when `λ` has an exact `q`-th rational root for
    /// `μ = p/q` (then the flow is the Koenigs conjugate of `t ↦ λ^μ t`).
    pub fn flow_embed(&self, mu: &Q) -> Result<Jet, JetError> {
        if !self.c[0].is_positive() {
            return Err(JetError::Orientation);
        }
        if self.c[0].is_one() {
            let v = self.formal_log();
            return Ok(Jet {
                c: flow_of_field(&v, mu, self.order()),
            });
        }
        // multiplier λ ≠ 1: λ^μ must be exactly rational
        let lam_mu = rational_pow(&self.c[0], mu)?;
        let psi = self.koenigs_conjugator()?;
        let lin = Jet::linear(self.order(), lam_mu)?;
        // Φ^μ = ψ^{-1} ∘ (λ^μ t) ∘ ψ
        psi.invert()?.compose(&lin)?.compose(&psi)
    }

    /// First `deg` coefficients as a polynomial germ: the degree-`deg`
    /// Taylor truncation of the jet.
    pub fn poly_truncate(&self, deg: usize) -> PolyGerm {
        PolyGerm::new(self.c.iter().take(deg).cloned().collect())
    }

    /// `|c₁ − 1| + Σ_{k≥2} |c_k|` — coefficient-sum distance from the
    /// identity jet, the norm used for corrector boxes.
    pub fn dist_to_identity(&self) -> Q {
        let mut d = (&self.c[0] - Q::one()).abs();
        for c in &self.c[1..] {
            d += c.abs();
        }
        d
    }

    // -- serialization -------------------------------------------------------

    /// Plain-text form `jet(K)[c1, c2, ...]` with exact `p/q` literals.
    pub fn serialize(&self) -> String {
        format!("{self}")
    }
}

/// `Σ_{j≥0} μ^j/j! · D_v^j(id)`, truncated: the time-`μ` jet flow of the
/// field `v(t)∂_t` with `v₁ = 0` (each `D_v` raises degree, so the series
/// terminates within the truncation order).
pub(crate) fn flow_of_field(v: &[Q], mu: &Q, ord: usize) -> Vec<Q> {
    let mut id = vec![Q::zero(); ord];
    id[0] = Q::one();
    let mut term = id.clone(); // D_v^j(id)/j! · μ^j, starting at j=0
    let mut out = id;
    for j in 1..=ord {
        // D_v(term) = v · term'
        let mut dterm = vec![Q::zero(); ord];
        for (i, ti) in term.iter().enumerate() {
            if ti.is_zero() {
                continue;
            }
            let degree = qi((i + 1) as i64);
            for (k, vk) in v.iter().enumerate() {
                // v slot k is degree k+1; term' slot i has degree i
                let d = i + k + 1; // (i) + (k+1) is the resulting degree; slot d-1... see below
                if d > ord {
                    break;
                }
                dterm[d - 1] += vk * ti * &degree;
            }
        }
        let scale = mu / qi(j as i64);
        term = dterm.iter().map(|x| x * &scale).collect();
        if term.iter().all(Q::is_zero) {
            break;
        }
        for (o, t) in out.iter_mut().zip(term.iter()) {
            *o += t;
        }
    }
    out
}

/// Exact `x^μ` for rational `x > 0`, `μ = p/q`: succeeds only when the `q`-th
/// root of `x` is rational.
fn rational_pow(x: &Q, mu: &Q) -> Result<Q, JetError> {
    let p = mu.numer().clone();
    let qden = mu.denom().clone();
    if qden.is_zero() {
        return Err(JetError::BadFlowTime);
    }
    let qq: u64 = (&qden)
        .try_into()
        .map_err(|_| JetError::NoExactRoot(u64::MAX))?;
    let root = if qq == 1 {
        x.clone()
    } else {
        let rn = x.numer().nth_root(qq as u32);
        let rd = x.denom().nth_root(qq as u32);
        let cand = Q::new(rn, rd);
        if &(num::pow::pow(cand.clone(), qq as usize)) != x {
            return Err(JetError::NoExactRoot(qq));
        }
        cand
    };
    // integer power p (may be negative)
    let pe: i64 = (&p).try_into().map_err(|_| JetError::NoExactRoot(qq))?;
    let mut r = num::pow::pow(root.clone(), pe.unsigned_abs() as usize);
    if pe < 0 {
        r = Q::one() / r;
    }
    Ok(r)
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "jet({})[", self.order())?;
        for (i, c) in self.c.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Jet {
    type Err = JetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let body = s
            .strip_prefix("jet(")
            .ok_or_else(|| JetError::Parse(format!("expected jet(K)[...], got {s:?}")))?;
        let (ord_s, rest) = body
            .split_once(')')
            .ok_or_else(|| JetError::Parse("missing ')'".into()))?;
        let order: usize = ord_s
            .trim()
            .parse()
            .map_err(|_| JetError::Parse(format!("bad order {ord_s:?}")))?;
        let rest = rest.trim();
        let inner = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| JetError::Parse("missing [...]".into()))?;
        let mut coeffs = Vec::new();
        for tok in inner.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            coeffs.push(parse_rational(tok)?);
        }
        Jet::new(order, coeffs)
    }
}

/// Parse `p`, `p/q`, or decimal-free signed integers as exact rationals.
pub fn parse_rational(tok: &str) -> Result<Q, JetError> {
    let tok = tok.trim();
    let mk_err = || JetError::Parse(format!("bad rational {tok:?}"));
    if let Some((n, d)) = tok.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| mk_err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| mk_err())?;
        if d.is_zero() {
            return Err(mk_err());
        }
        Ok(Q::new(n, d))
    } else {
        let n = BigInt::from_str(tok).map_err(|_| mk_err())?;
        Ok(Q::from(n))
    }
}

// ---------------------------------------------------------------------------

/// Polynomial germ `P(t) = a_1 t + … + a_r t^r` (no invertibility demand);
/// the home of the corrector polynomials and of `‖·‖_r`.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyGerm {
    a: Vec<Q>, // a[0] = a_1
}

impl PolyGerm {
    pub fn new(coeffs: Vec<Q>) -> Self {
        PolyGerm { a: coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        PolyGerm {
            a: vec![Q::zero(); degree],
        }
    }

    pub fn identity(degree: usize) -> Self {
        let mut a = vec![Q::zero(); degree.max(1)];
        a[0] = Q::one();
        PolyGerm { a }
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.a
    }

    /// `‖P‖_r = |a_1| + … + |a_r|`.
    pub fn norm(&self) -> Q {
        self.a.iter().map(|x| x.abs()).sum()
    }

    /// `‖P − id‖`: how far the corrector is from the identity.
    pub fn dist_to_identity(&self) -> Q {
        let mut s = Q::zero();
        for (i, ai) in self.a.iter().enumerate() {
            if i == 0 {
                s += (ai - Q::one()).abs();
            } else {
                s += ai.abs();
            }
        }
        s
    }

    pub fn add(&self, other: &PolyGerm) -> PolyGerm {
        let n = self.a.len().max(other.a.len());
        let get = |v: &[Q], i: usize| v.get(i).cloned().unwrap_or_else(Q::zero);
        PolyGerm {
            a: (0..n).map(|i| get(&self.a, i) + get(&other.a, i)).collect(),
        }
    }

    pub fn as_jet(&self, order: usize) -> Result<Jet, JetError> {
        Jet::new(order, self.a.clone())
    }
}

impl fmt::Display for PolyGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "poly[")?;
        for (i, c) in self.a.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for PolyGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PolyGerm {
    type Err = JetError;

    /// Inverse of `Display`: `poly[a1, a2, ...]` with rational literals.
    fn from_str(s: &str) -> Result<Self, JetError> {
        let s = s.trim();
        let inner = s
            .strip_prefix("poly[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| JetError::Parse(format!("expected poly[...], got `{s}`")))?
            .trim();
        if inner.is_empty() {
            return Ok(PolyGerm::new(Vec::new()));
        }
        let a = inner
            .split(',')
            .map(|tok| parse_rational(tok.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyGerm::new(a))
    }
}
