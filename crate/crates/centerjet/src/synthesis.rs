//! Flatness-raising composition of 1D germs.
//!
//! Given eight k-flat germs `F_1..F_8` (jets with multiplier 1 and no terms
//! of degree 2..k) and eight connector germs `G_1..G_8`, the goal is to pick
//! small polynomial correctors `H_i` near the identity and exponents
//! `n_i ≥ N` so that the interleaved product
//!
//! ```text
//!     F̄ = G_8 ∘ (H_8∘F_8)^{n_8} ∘ … ∘ G_1 ∘ (H_1∘F_1)^{n_1}
//! ```
//!
//! is (k+1)-flat — one order flatter than the inputs. The even slots absorb
//! the connectors: `H_{2j}` is the degree-k Taylor polynomial of a fractional
//! flow power of `Φ_j = G_{2j}^{-1}∘G_{2j-1}^{-1}`, which makes each block
//! `G_{2j}∘(H_{2j}∘F_{2j})^{n_{2j}}∘G_{2j-1}` exactly k-flat. The odd slots
//! then cancel the residual degree-(k+1) data of the even part `F̂`, with a
//! mechanism that depends on k:
//!
//! * **k = 1** — nonlinearity `A` and Schwarzian `S` are additive on 1-flat
//!   germs, so killing `A` is a two-unknown integer problem with one rational
//!   correction `H_1 = t + h₂t²`; a strict inequality between the `|S/A|`
//!   ratios of `F_1` and `F_3` lets the same search fix the sign of `S(F̄)`
//!   to agree with `S(F_1)`. See [`solve_two_flat`].
//! * **k = 2** — the cubic coefficient is additive on 2-flat germs; the
//!   corrector is `H_1 = t + h₃t³` and the search is the same lattice walk
//!   one degree up. See [`solve_three_flat`].
//! * **k ≥ 3** — additivity alone cannot reach a target with the wrong sign,
//!   so the correctors implement a commutator: with `X = (ε/2)t²∂` and
//!   `Y = b·t^k∂`, the product `exp(X)^n exp(Y)^n exp(−X)^n exp(−Y)^n` is
//!   `t + s·n²·b·t^{k+1}` **exactly** at this jet order (the group of jets
//!   truncated past k+1 makes every higher bracket vanish), so `n²` leverage
//!   drives an arbitrarily large top coefficient with `|b| < ε`. See
//!   [`solve_higher_flat`].
//!
//! Everything is exact rational arithmetic; every returned composite is
//! re-verified by independent jet composition rather than trusted from the
//! bookkeeping that found it.

use crate::jet::{self, parse_rational, q, qi, Jet, JetError, PolyGerm, Q};
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Default corrector box: `‖H − id‖ < 1/100`.
pub fn default_box() -> Q {
    q(1, 100)
}

/// Default iteration budget per exponent search.
pub const DEFAULT_CAP: i64 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    /// An input inequality or shape requirement fails; the message names it.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A precondition holds non-strictly where strictness is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An exponent search ran out of budget before satisfying the box.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    /// An exact re-verification failed. Reaching this is a bug, not bad
    /// input; it exists so results are checked rather than trusted.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("cannot parse synthesis data: {0}")]
    Parse(String),
}

// --------------------------------------------------------------------------
// problem / result types

/// An octuple flatness-raising problem: the germs, their connectors, the
/// exponent floor `N = n_min`, and the corrector box.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    /// Flatness order of the inputs; the composite gains one.
    pub k: usize,
    /// `F_1..F_8`, each k-flat, all the same jet order.
    pub f: Vec<Jet>,
    /// `G_1..G_8`, orientation-preserving connectors.
    pub g: Vec<Jet>,
    /// Every returned exponent is ≥ this floor.
    pub n_min: i64,
    /// Strict bound ε on `‖H_i − id‖` for every corrector.
    pub corrector_box: Q,
    /// Iteration budget per exponent search.
    pub cap: i64,
}

impl SynthesisProblem {
    pub fn new(k: usize, f: Vec<Jet>, g: Vec<Jet>, n_min: i64) -> Result<Self, SynthError> {
        let p = SynthesisProblem {
            k,
            f,
            g,
            n_min,
            corrector_box: default_box(),
            cap: DEFAULT_CAP,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_box(mut self, eps: Q) -> Self {
        self.corrector_box = eps;
        self
    }

    pub fn with_cap(mut self, cap: i64) -> Self {
        self.cap = cap;
        self
    }

    /// Common jet order of all sixteen germs.
    pub fn order(&self) -> usize {
        self.f[0].order()
    }

    fn all_identity(&self) -> bool {
        self.f.iter().chain(self.g.iter()).all(Jet::is_identity)
    }

    /// Checks every structural requirement, naming the first failure.
    ///
    /// The all-identity octuple is accepted for every k even though its
    /// sign products are 0 rather than negative: it synthesizes trivially,
    /// so the sign preconditions are not needed there.
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.k < 1 {
            return Err(SynthError::Precondition("k must be >= 1".into()));
        }
        if self.f.len() != 8 || self.g.len() != 8 {
            return Err(SynthError::Precondition(format!(
                "need exactly 8 germs and 8 connectors, got {} and {}",
                self.f.len(),
                self.g.len()
            )));
        }
        let ord = self.f[0].order();
        let need = 3.max(self.k + 1);
        if ord < need {
            return Err(SynthError::Precondition(format!(
                "jet order {ord} too small for k = {}: need at least {need}",
                self.k
            )));
        }
        for (i, j) in self.f.iter().chain(self.g.iter()).enumerate() {
            if j.order() != ord {
                return Err(SynthError::Precondition(format!(
                    "all jets must share one order: slot {i} has {}, expected {ord}",
                    j.order()
                )));
            }
        }
        if self.n_min < 1 {
            return Err(SynthError::Precondition(format!(
                "n_min must be >= 1, got {}",
                self.n_min
            )));
        }
        if !self.corrector_box.is_positive() {
            return Err(SynthError::Precondition("corrector box must be > 0".into()));
        }
        if self.cap < 1 {
            return Err(SynthError::Precondition(format!(
                "search cap must be >= 1, got {}",
                self.cap
            )));
        }
        for (i, gi) in self.g.iter().enumerate() {
            if !gi.multiplier().is_positive() {
                return Err(SynthError::Precondition(format!(
                    "connector G{} must preserve orientation (got multiplier {})",
                    i + 1,
                    gi.multiplier()
                )));
            }
        }
        if self.all_identity() {
            return Ok(());
        }
        for (i, fi) in self.f.iter().enumerate() {
            if fi.flat_order() < self.k {
                return Err(SynthError::Precondition(format!(
                    "F{} must be {}-flat, its flat order is {}",
                    i + 1,
                    self.k,
                    fi.flat_order()
                )));
            }
        }
        match self.k {
            1 => check_order_one_signs(&self.f[0], &self.f[2])?,
            2 => {
                let q13 = self.f[0].coeff(3);
                let q23 = self.f[2].coeff(3);
                if !(q13 * q23).is_negative() {
                    return Err(SynthError::Precondition(format!(
                        "need S(F1)·S(F3) < 0, i.e. opposite cubic signs; got cubics {q13} and {q23}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Line-oriented text form; [`SynthesisProblem::parse`] inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# flatness-raising problem\n");
        s.push_str(&format!("k = {}\n", self.k));
        s.push_str(&format!("n_min = {}\n", self.n_min));
        s.push_str(&format!("box = {}\n", self.corrector_box));
        s.push_str(&format!("cap = {}\n", self.cap));
        for (i, f) in self.f.iter().enumerate() {
            s.push_str(&format!("F{} = {}\n", i + 1, f));
        }
        for (i, g) in self.g.iter().enumerate() {
            s.push_str(&format!("G{} = {}\n", i + 1, g));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let kv = parse_kv(text)?;
        let get = |key: &str| {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| SynthError::Parse(format!("missing key `{key}`")))
        };
        let k: usize = get("k")?
            .parse()
            .map_err(|e| SynthError::Parse(format!("k: {e}")))?;
        let n_min: i64 = match kv.iter().find(|(k, _)| k == "n_min") {
            Some((_, v)) => v
                .parse()
                .map_err(|e| SynthError::Parse(format!("n_min: {e}")))?,
            None => 10,
        };
        let corrector_box = match kv.iter().find(|(k, _)| k == "box") {
            Some((_, v)) => parse_rational(v)?,
            None => default_box(),
        };
        let cap: i64 = match kv.iter().find(|(k, _)| k == "cap") {
            Some((_, v)) => v
                .parse()
                .map_err(|e| SynthError::Parse(format!("cap: {e}")))?,
            None => DEFAULT_CAP,
        };
        let mut f = Vec::with_capacity(8);
        let mut g = Vec::with_capacity(8);
        for i in 1..=8 {
            f.push(get(&format!("F{i}"))?.parse::<Jet>()?);
        }
        for i in 1..=8 {
            g.push(get(&format!("G{i}"))?.parse::<Jet>()?);
        }
        let p = SynthesisProblem {
            k,
            f,
            g,
            n_min,
            corrector_box,
            cap,
        };
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for SynthesisProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Correctors, exponents, and the certified composite of one synthesis.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// `H_1..H_8`; degree ≤ k+1, each within the corrector box.
    pub h: Vec<PolyGerm>,
    /// `n_1..n_8`, each ≥ the problem's `n_min`.
    pub n: Vec<i64>,
    /// The synthesized germ, stored as the even part composed with the odd
    /// part. It agrees with the fully interleaved product
    /// `G_8∘(H_8∘F_8)^{n_8}∘…∘G_1∘(H_1∘F_1)^{n_1}` through degree k+1 —
    /// k-flat jets are central modulo `o(t^{k+1})`, so regrouping complete
    /// k-flat blocks cannot change any coefficient up to that degree — and
    /// every claim made about the composite lives at or below k+1.
    pub composite: Jet,
    /// Verified flatness order of `composite` (≥ k+1).
    pub flat_order: usize,
}

impl SynthesisResult {
    /// Line-oriented text form; [`SynthesisResult::parse`] inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# flatness-raising result\n");
        s.push_str(&format!("flat_order = {}\n", self.flat_order));
        let ns: Vec<String> = self.n.iter().map(|n| n.to_string()).collect();
        s.push_str(&format!("n = [{}]\n", ns.join(", ")));
        for (i, h) in self.h.iter().enumerate() {
            s.push_str(&format!("H{} = {}\n", i + 1, h));
        }
        s.push_str(&format!("composite = {}\n", self.composite));
        s
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let kv = parse_kv(text)?;
        let get = |key: &str| {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| SynthError::Parse(format!("missing key `{key}`")))
        };
        let flat_order: usize = get("flat_order")?
            .parse()
            .map_err(|e| SynthError::Parse(format!("flat_order: {e}")))?;
        let nlist = get("n")?;
        let inner = nlist
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| SynthError::Parse(format!("n: expected [..], got `{nlist}`")))?;
        let n = inner
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SynthError::Parse(format!("n: {e}")))?;
        if n.len() != 8 {
            return Err(SynthError::Parse(format!(
                "n: expected 8 exponents, got {}",
                n.len()
            )));
        }
        let mut h = Vec::with_capacity(8);
        for i in 1..=8 {
            h.push(get(&format!("H{i}"))?.parse::<PolyGerm>()?);
        }
        let composite = get("composite")?.parse::<Jet>()?;
        Ok(SynthesisResult {
            h,
            n,
            composite,
            flat_order,
        })
    }
}

impl fmt::Display for SynthesisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_kv(text: &str) -> Result<Vec<(String, String)>, SynthError> {
    let mut kv = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            SynthError::Parse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        kv.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(kv)
}

// --------------------------------------------------------------------------
// even slots

/// Correctors and exponents for the even slots, plus the certified blocks.
#[derive(Debug, Clone)]
pub struct EvenInterpolators {
    /// `H_2, H_4, H_6, H_8` (degree-k Taylor truncations of flow powers).
    pub h: Vec<PolyGerm>,
    /// `n_2, n_4, n_6, n_8`.
    pub n: Vec<i64>,
    /// The blocks `G_{2j}∘(H_{2j}∘F_{2j})^{n_{2j}}∘G_{2j-1}`, each k-flat.
    pub blocks: Vec<Jet>,
}

/// For each pair of connectors `(G_{2j-1}, G_{2j})` finds the smallest
/// `n ≥ n_min` whose corrector `H_{2j} = Taylor_k(Φ_j^{1/n})`,
/// `Φ_j = G_{2j}^{-1}∘G_{2j-1}^{-1}`, lands strictly inside the box, then
/// certifies the resulting block k-flat by exact composition.
///
/// Why this works: `H_{2j}` carries the exact k-jet of `Φ_j^{1/n}`, and
/// `F_{2j}` is k-flat, so at the k-jet level `(H_{2j}∘F_{2j})^n = Φ_j` and
/// the block collapses to `G_{2j}∘Φ_j∘G_{2j-1} = id`.
///
/// Connectors whose product has an irrational fractional flow power at every
/// candidate `n` (any multiplier that is not an exact rational n-th power)
/// simply exhaust the search; 1-flat connectors always succeed once
/// `n > ‖Φ_j − id‖/ε`-ish, since the flow coefficients scale like `1/n`.
pub fn even_interpolators(p: &SynthesisProblem) -> Result<EvenInterpolators, SynthError> {
    p.validate()?;
    let ord = p.order();
    let eps = &p.corrector_box;
    let mut out = EvenInterpolators {
        h: Vec::with_capacity(4),
        n: Vec::with_capacity(4),
        blocks: Vec::with_capacity(4),
    };
    for j in 1..=4 {
        let hi = &p.g[2 * j - 1]; // G_{2j}
        let lo = &p.g[2 * j - 2]; // G_{2j-1}
        let phi = hi.invert()?.compose(&lo.invert()?)?;
        let mut found = None;
        for n in p.n_min..p.n_min.saturating_add(p.cap) {
            let root = match phi.flow_embed(&q(1, n)) {
                Ok(f) => f,
                // this n has no exact fractional power; the next may
                Err(JetError::NoExactRoot(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let h = root.poly_truncate(p.k);
            if h.dist_to_identity() < *eps {
                found = Some((h, n));
                break;
            }
        }
        let (h, n) = found.ok_or_else(|| {
            SynthError::SearchExhausted(format!(
                "even slot {}: no exponent in [{}, {}) brings the corrector inside {}",
                2 * j,
                p.n_min,
                p.n_min.saturating_add(p.cap),
                eps
            ))
        })?;
        let hf = h.as_jet(ord)?.compose(&p.f[2 * j - 1])?;
        let block = hi.compose(&hf.pow(n)?)?.compose(lo)?;
        if block.flat_order() < p.k {
            return Err(SynthError::Verification(format!(
                "even block {} is not {}-flat: {}",
                2 * j,
                p.k,
                block
            )));
        }
        out.h.push(h);
        out.n.push(n);
        out.blocks.push(block);
    }
    Ok(out)
}

// --------------------------------------------------------------------------
// odd-slot solvers

fn check_order_one_signs(f1: &Jet, f3: &Jet) -> Result<(), SynthError> {
    let (a1, s1) = f1.invariants_as()?;
    let (a3, s3) = f3.invariants_as()?;
    if f1.flat_order() < 1 || f3.flat_order() < 1 {
        return Err(SynthError::Precondition(
            "F1 and F3 must be 1-flat".into(),
        ));
    }
    if !(&a1 * &a3).is_negative() {
        return Err(SynthError::Precondition(format!(
            "need A(F1)·A(F3) < 0, got ({a1})·({a3})"
        )));
    }
    if !(&s1 * &s3).is_negative() {
        return Err(SynthError::Precondition(format!(
            "need S(F1)·S(F3) < 0, got ({s1})·({s3})"
        )));
    }
    let r1 = (&s1 / &a1).abs();
    let r3 = (&s3 / &a3).abs();
    if r1 == r3 {
        return Err(SynthError::Degenerate(format!(
            "|S/A| ratios coincide ({r1}); the sign of S cannot be steered"
        )));
    }
    if r1 < r3 {
        return Err(SynthError::Precondition(format!(
            "need |S(F1)/A(F1)| > |S(F3)/A(F3)|, got {r1} < {r3}"
        )));
    }
    Ok(())
}

/// Integer candidates near a rational target, closest first (ties to the
/// smaller), truncating toward zero like the plain integer cast.
fn exponent_candidates(real: &Q, lo: i64) -> Vec<i64> {
    let t = match real.trunc().to_integer().to_i64() {
        Some(v) => v,
        None => return Vec::new(),
    };
    let mut cs = vec![t, t.saturating_add(1), t.saturating_sub(1)];
    cs.sort_by(|a, b| {
        let da = (qi(*a) - real).abs();
        let db = (qi(*b) - real).abs();
        da.cmp(&db).then(a.cmp(b))
    });
    cs.retain(|m| *m >= lo);
    cs
}

/// k = 1 odd-slot solve: finds `H = t + h₂t²`, `m`, `n` with
///
/// ```text
///     A(F3^n ∘ (H∘F1)^m) + α = 0              (exactly)
///     S(F1) · ( S(F3^n ∘ (H∘F1)^m) + β ) > 0
/// ```
///
/// Both `A` and `S` are additive over composition of 1-flat germs, so the
/// first equation is `n·A(F3) + m·(A(F1) + 2h₂) + α = 0`: scan `n` upward,
/// take the integers `m` nearest `−(α + n·A(F3))/A(F1)`, and absorb the
/// rounding error into `h₂ = −(α + n·A(F3) + m·A(F1))/(2m)`, which shrinks
/// like `1/m`. The `S` inequality then holds for all large solutions because
/// `|S(F1)/A(F1)| > |S(F3)/A(F3)|` makes the `m`-term dominate with the sign
/// of `S(F1)`; the scan simply continues until it does. The returned triple
/// is re-verified by exact jet composition before it is returned.
pub fn solve_two_flat(
    f1: &Jet,
    f3: &Jet,
    alpha: &Q,
    beta: &Q,
    n_min: i64,
    corrector_box: &Q,
    cap: i64,
) -> Result<(PolyGerm, i64, i64), SynthError> {
    check_order_one_signs(f1, f3)?;
    let (a1, s1) = f1.invariants_as()?;
    let (a3, s3) = f3.invariants_as()?;
    let sgn = if s1.is_positive() { qi(1) } else { qi(-1) };
    let m_lo = n_min.max(1);
    for n in n_min..n_min.saturating_add(cap) {
        let m_real = -(alpha + qi(n) * &a3) / &a1;
        for m in exponent_candidates(&m_real, m_lo) {
            let h2 = -(alpha + qi(n) * &a3 + qi(m) * &a1) / (qi(2) * qi(m));
            if h2.abs() >= *corrector_box {
                continue;
            }
            let s_block = qi(n) * &s3 + qi(m) * (&s1 - qi(6) * &h2 * &h2) + beta;
            if (&sgn * &s_block).is_positive() {
                let h = PolyGerm::new(vec![Q::one(), h2]);
                verify_two_flat(f1, f3, &h, m, n, alpha, beta, &s1)?;
                return Ok((h, m, n));
            }
        }
    }
    Err(SynthError::SearchExhausted(format!(
        "no (m, n) with n in [{n_min}, {}) meets the box {corrector_box}",
        n_min.saturating_add(cap)
    )))
}

fn verify_two_flat(
    f1: &Jet,
    f3: &Jet,
    h: &PolyGerm,
    m: i64,
    n: i64,
    alpha: &Q,
    beta: &Q,
    s1: &Q,
) -> Result<(), SynthError> {
    let ord = f1.order();
    let odd = f3.pow(n)?.compose(&h.as_jet(ord)?.compose(f1)?.pow(m)?)?;
    let (a, s) = odd.invariants_as()?;
    if !(a + alpha).is_zero() {
        return Err(SynthError::Verification(
            "nonlinearity bookkeeping disagrees with exact composition".into(),
        ));
    }
    if !(s1 * (s + beta)).is_positive() {
        return Err(SynthError::Verification(
            "Schwarzian sign disagrees with exact composition".into(),
        ));
    }
    Ok(())
}

/// k = 2 odd-slot solve: finds `H = t + h₃t³`, `m`, `n` with
/// `F3^n ∘ (H∘F1)^m = t + γt³` exactly through degree 3.
///
/// Cubic coefficients are additive on 2-flat germs, so the equation is
/// `m·(q₁ + h₃) + n·q₂ = γ` with `q_i` the cubic coefficients. The best
/// integer `n` leaves a defect at most `|q₂|/2`, so any
/// `m ≥ |q₂|/(2ε)` admits `|h₃| ≤ ε`: jump straight to that `m` and scan a
/// short window. Requires `q₁·q₂ < 0` so the walk moves `n` upward.
pub fn solve_three_flat(
    f1: &Jet,
    f3: &Jet,
    gamma: &Q,
    n_min: i64,
    corrector_box: &Q,
    cap: i64,
) -> Result<(PolyGerm, i64, i64), SynthError> {
    for (name, f) in [("F1", f1), ("F3", f3)] {
        if f.flat_order() < 2 {
            return Err(SynthError::Precondition(format!(
                "{name} must be 2-flat, its flat order is {}",
                f.flat_order()
            )));
        }
    }
    let q13 = f1.coeff(3).clone();
    let q23 = f3.coeff(3).clone();
    if !(&q13 * &q23).is_negative() {
        return Err(SynthError::Precondition(format!(
            "need opposite cubic signs, got {q13} and {q23}"
        )));
    }
    let r = q23.abs() / (qi(2) * corrector_box);
    let m_floor = r.floor().to_integer().to_i64().ok_or_else(|| {
        SynthError::SearchExhausted("required m exceeds the integer range".into())
    })?;
    let m_star = n_min.max(1).max(m_floor);
    for m in m_star..m_star.saturating_add(cap) {
        let n_real = (gamma - qi(m) * &q13) / &q23;
        for n in exponent_candidates(&n_real, n_min) {
            let h3 = (gamma - qi(m) * &q13 - qi(n) * &q23) / qi(m);
            if h3.abs() >= *corrector_box {
                continue;
            }
            let h = PolyGerm::new(vec![Q::one(), Q::zero(), h3]);
            verify_three_flat(f1, f3, &h, m, n, gamma)?;
            return Ok((h, m, n));
        }
    }
    Err(SynthError::SearchExhausted(format!(
        "no (m, n) with m in [{m_star}, {}) meets the box {corrector_box}",
        m_star.saturating_add(cap)
    )))
}

fn verify_three_flat(
    f1: &Jet,
    f3: &Jet,
    h: &PolyGerm,
    m: i64,
    n: i64,
    gamma: &Q,
) -> Result<(), SynthError> {
    let ord = f1.order();
    let odd = f3.pow(n)?.compose(&h.as_jet(ord)?.compose(f1)?.pow(m)?)?;
    if !odd.coeff(2).is_zero() || odd.coeff(3) != gamma {
        return Err(SynthError::Verification(
            "cubic bookkeeping disagrees with exact composition".into(),
        ));
    }
    Ok(())
}

/// `ceil(sqrt(v))` over the nonnegative rationals, as an integer.
fn isqrt_ceil(v: &Q) -> BigInt {
    if !v.is_positive() {
        return BigInt::zero();
    }
    let n = v.numer() * v.denom();
    let mut s = n.sqrt();
    if &s * &s < n {
        s += 1;
    }
    // ceil(s / denom); denom is positive after normalization
    (&s + (v.denom() - BigInt::one())) / v.denom()
}

/// Time-1 map of the polynomial field `Σ v[i]·t^{i+1}·∂`.
fn exp_field(v: &[Q], ord: usize) -> Result<Jet, JetError> {
    Jet::new(ord, jet::flow_of_field(v, &Q::one(), ord))
}

/// The pure corrector product `R4^n∘R3^n∘R2^n∘R1^n` for the commutator
/// scheme, along with the four correctors.
fn commutator_product(
    a: &Q,
    b: &Q,
    k: usize,
    n: i64,
    ord: usize,
) -> Result<(Jet, [Jet; 4]), SynthError> {
    let mut xv = vec![Q::zero(); ord];
    xv[1] = a.clone();
    let mut yv = vec![Q::zero(); ord];
    yv[k - 1] = b.clone();
    let r4 = exp_field(&xv, ord)?;
    let r2 = r4.invert()?;
    let r3 = exp_field(&yv, ord)?;
    let r1 = r3.invert()?;
    let p = r4
        .pow(n)?
        .compose(&r3.pow(n)?)?
        .compose(&r2.pow(n)?)?
        .compose(&r1.pow(n)?)?;
    Ok((p, [r1, r2, r3, r4]))
}

/// k ≥ 3 odd-slot solve: finds correctors `R_1..R_4` in the box and one
/// exponent `n` with `(R_4∘Q_4)^n∘…∘(R_1∘Q_1)^n = t + α·t^{k+1}` exactly
/// through degree k+1.
///
/// The `Q_i` are k-flat, hence central modulo `o(t^{k+1})`: they contribute
/// `n·Σq_i` to the top coefficient (their degree-(k+1) coefficients `q_i`)
/// and commute with everything else. The correctors form the commutator
/// `exp(X)^n exp(Y)^n exp(−X)^n exp(−Y)^n` with `X = (ε/2)t²∂`,
/// `Y = b·t^k∂`, whose top coefficient is exactly `s·n²·b` for a constant
/// `s` (one bracket `[X, Y]` survives the truncation; all higher brackets
/// land past degree k+1). `s` is measured by one probe and the exact
/// quadratic law is checked at a second point before being used. Solving
/// `n·Σq_i + s·n²·b = α` for the smallest feasible `n ≥ n_min` is then a
/// quadratic inequality: jump near its positive root and walk up until
/// `|b| = |α − n·Σq_i|/(|s|n²)` enters the box.
///
/// Two additive shortcuts return identity correctors: `α = Σq_i = 0`
/// (already flat), and `α/Σq_i` a feasible integer (the raw powers land on
/// the target without any commutator).
pub fn solve_higher_flat(
    qs: &[Jet],
    alpha: &Q,
    k: usize,
    n_min: i64,
    corrector_box: &Q,
    cap: i64,
) -> Result<(Vec<PolyGerm>, i64), SynthError> {
    if k < 3 {
        return Err(SynthError::Precondition(format!(
            "commutator scheme needs k >= 3, got {k}"
        )));
    }
    if qs.len() != 4 {
        return Err(SynthError::Precondition(format!(
            "need exactly 4 germs, got {}",
            qs.len()
        )));
    }
    let ord = qs[0].order();
    if ord < k + 1 {
        return Err(SynthError::Precondition(format!(
            "jet order {ord} cannot see degree {}",
            k + 1
        )));
    }
    for (i, f) in qs.iter().enumerate() {
        if f.order() != ord {
            return Err(SynthError::Precondition(format!(
                "Q{} has order {}, expected {ord}",
                i + 1,
                f.order()
            )));
        }
        if f.flat_order() < k {
            return Err(SynthError::Precondition(format!(
                "Q{} must be {}-flat, its flat order is {}",
                i + 1,
                k,
                f.flat_order()
            )));
        }
    }
    if n_min < 1 {
        return Err(SynthError::Precondition(format!(
            "n_min must be >= 1, got {n_min}"
        )));
    }
    let identity_result = |n: i64| -> Result<(Vec<PolyGerm>, i64), SynthError> {
        verify_higher_flat(qs, &[Jet::identity(ord), Jet::identity(ord), Jet::identity(ord), Jet::identity(ord)], n, k, alpha)?;
        Ok((vec![PolyGerm::identity(1); 4], n))
    };
    let qsum: Q = qs.iter().map(|f| f.coeff(k + 1).clone()).sum();
    // additive shortcuts: the raw powers may already land on the target
    if qsum.is_zero() {
        if alpha.is_zero() {
            return identity_result(n_min);
        }
    } else {
        let n0 = alpha / &qsum;
        if n0.is_integer() {
            if let Some(n0) = n0.to_integer().to_i64() {
                if n0 >= n_min {
                    return identity_result(n0);
                }
            }
        }
    }
    // probe the commutator response and certify the quadratic law
    let a = corrector_box / qi(2);
    let (p1, _) = commutator_product(&a, &Q::one(), k, n_min, ord)?;
    for d in 2..=k {
        if !p1.coeff(d).is_zero() {
            return Err(SynthError::Verification(format!(
                "commutator probe is not {k}-flat at degree {d}"
            )));
        }
    }
    let s = p1.coeff(k + 1) / (qi(n_min) * qi(n_min));
    if s.is_zero() {
        return Err(SynthError::Verification(
            "commutator response vanished; the bracket cannot be degenerate".into(),
        ));
    }
    let (p2, _) = commutator_product(&a, &Q::one(), k, n_min + 3, ord)?;
    if *p2.coeff(k + 1) != &s * qi(n_min + 3) * qi(n_min + 3) {
        return Err(SynthError::Verification(
            "commutator response is not exactly quadratic in n".into(),
        ));
    }
    // smallest n with |α − n·Σq| ≤ ε|s|n²: jump near the positive root of
    // ε|s|n² − |Σq|n − |α|, then walk
    let es = corrector_box * s.abs();
    let disc = &qsum * &qsum + qi(4) * &es * alpha.abs();
    let root = Q::from_integer(isqrt_ceil(&disc));
    let jump = ((qsum.abs() + root) / (qi(2) * &es)).floor().to_integer() - BigInt::from(2);
    let n_try = BigInt::from(n_min).max(jump).to_i64().ok_or_else(|| {
        SynthError::SearchExhausted("required exponent exceeds the integer range".into())
    })?;
    for n in n_try..n_try.saturating_add(cap) {
        let target = alpha - qi(n) * &qsum;
        let b = &target / (&s * qi(n) * qi(n));
        if b.abs() >= *corrector_box {
            continue;
        }
        if target.is_zero() {
            return identity_result(n);
        }
        let (p, rs) = commutator_product(&a, &b, k, n, ord)?;
        if p.coeff(k + 1) != &target {
            return Err(SynthError::Verification(
                "commutator product missed its exact target".into(),
            ));
        }
        if rs.iter().any(|r| r.dist_to_identity() >= *corrector_box) {
            continue;
        }
        verify_higher_flat(qs, &rs, n, k, alpha)?;
        let polys = rs.iter().map(|r| r.poly_truncate(k + 1)).collect();
        return Ok((polys, n));
    }
    Err(SynthError::SearchExhausted(format!(
        "no n in [{n_try}, {}) meets the box {corrector_box}",
        n_try.saturating_add(cap)
    )))
}

fn verify_higher_flat(
    qs: &[Jet],
    rs: &[Jet; 4],
    n: i64,
    k: usize,
    alpha: &Q,
) -> Result<(), SynthError> {
    let ord = qs[0].order();
    let mut core = Jet::identity(ord);
    for (r, f) in rs.iter().zip(qs.iter()) {
        core = r.compose(f)?.pow(n)?.compose(&core)?;
    }
    for d in 2..=k {
        if !core.coeff(d).is_zero() {
            return Err(SynthError::Verification(format!(
                "core is not {k}-flat at degree {d}"
            )));
        }
    }
    if core.coeff(k + 1) != alpha {
        return Err(SynthError::Verification(format!(
            "core top coefficient {} does not match the target {alpha}",
            core.coeff(k + 1)
        )));
    }
    Ok(())
}

// --------------------------------------------------------------------------
// assembly

/// Solves one full octuple problem and certifies the result.
///
/// Dispatch: k = 1 goes to [`solve_two_flat`] with
/// `α = A(F̂) + N·(A(F_5)+A(F_7))` and the same expression in `S` for `β`
/// (the even part `F̂` plus the two odd slots that stay at the floor
/// exponent); k = 2 goes to [`solve_three_flat`] with `γ = −β/6` (the
/// Schwarzian of a 2-flat germ is six times its cubic coefficient); k ≥ 3
/// goes to [`solve_higher_flat`] with `α` cancelling the degree-(k+1)
/// coefficient of `F̂`. The composite is then built by independent jet
/// composition and its flatness — and for k = 1 the sign agreement
/// `S(F̄)·S(F_1) > 0` — is checked exactly before returning.
pub fn synthesize(p: &SynthesisProblem) -> Result<SynthesisResult, SynthError> {
    p.validate()?;
    let ord = p.order();
    if p.all_identity() {
        return Ok(SynthesisResult {
            h: vec![PolyGerm::identity(1); 8],
            n: vec![p.n_min; 8],
            composite: Jet::identity(ord),
            flat_order: ord,
        });
    }
    let even = even_interpolators(p)?;
    let fhat = even.blocks[3]
        .compose(&even.blocks[2])?
        .compose(&even.blocks[1])?
        .compose(&even.blocks[0])?;
    if fhat.flat_order() < p.k {
        return Err(SynthError::Verification(format!(
            "even part lost flatness: {fhat}"
        )));
    }
    let (f1, f3, f5, f7) = (&p.f[0], &p.f[2], &p.f[4], &p.f[6]);
    let nq = qi(p.n_min);
    let id_poly = PolyGerm::identity(1);
    // odd-slot correctors and exponents, low to high
    let (odd_h, odd_n): ([PolyGerm; 4], [i64; 4]) = match p.k {
        1 => {
            let (a_hat, s_hat) = fhat.invariants_as()?;
            let alpha = a_hat + &nq * (f5.nonlinearity()? + f7.nonlinearity()?);
            let beta = s_hat + &nq * (f5.schwarzian()? + f7.schwarzian()?);
            let (h1, m, n) =
                solve_two_flat(f1, f3, &alpha, &beta, p.n_min, &p.corrector_box, p.cap)?;
            (
                [h1, id_poly.clone(), id_poly.clone(), id_poly],
                [m, n, p.n_min, p.n_min],
            )
        }
        2 => {
            let s_hat = fhat.schwarzian()?;
            let beta = s_hat + &nq * (f5.schwarzian()? + f7.schwarzian()?);
            let gamma = -beta / qi(6);
            let (h1, m, n) =
                solve_three_flat(f1, f3, &gamma, p.n_min, &p.corrector_box, p.cap)?;
            (
                [h1, id_poly.clone(), id_poly.clone(), id_poly],
                [m, n, p.n_min, p.n_min],
            )
        }
        k => {
            let alpha = -fhat.coeff(k + 1);
            let quad = [f1.clone(), f3.clone(), f5.clone(), f7.clone()];
            let (rs, n) =
                solve_higher_flat(&quad, &alpha, k, p.n_min, &p.corrector_box, p.cap)?;
            let mut it = rs.into_iter();
            let arr = [
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
            ];
            (arr, [n; 4])
        }
    };
    // core = (H7∘F7)^{n7} ∘ (H5∘F5)^{n5} ∘ (H3∘F3)^{n3} ∘ (H1∘F1)^{n1}
    let mut core = Jet::identity(ord);
    for (i, slot) in [0usize, 2, 4, 6].iter().enumerate() {
        let hf = odd_h[i].as_jet(ord)?.compose(&p.f[*slot])?;
        core = hf.pow(odd_n[i])?.compose(&core)?;
    }
    let composite = fhat.compose(&core)?;
    let fo = composite.flat_order();
    if fo < p.k + 1 {
        return Err(SynthError::Verification(format!(
            "composite is only {fo}-flat, expected at least {}",
            p.k + 1
        )));
    }
    if p.k == 1 {
        let s_bar = composite.schwarzian()?;
        let s1 = f1.schwarzian()?;
        if !(s_bar * s1).is_positive() {
            return Err(SynthError::Verification(
                "composite Schwarzian sign does not follow S(F1)".into(),
            ));
        }
    }
    let h = vec![
        odd_h[0].clone(),
        even.h[0].clone(),
        odd_h[1].clone(),
        even.h[1].clone(),
        odd_h[2].clone(),
        even.h[2].clone(),
        odd_h[3].clone(),
        even.h[3].clone(),
    ];
    let n = vec![
        odd_n[0], even.n[0], odd_n[1], even.n[1], odd_n[2], even.n[2], odd_n[3], even.n[3],
    ];
    Ok(SynthesisResult {
        h,
        n,
        composite,
        flat_order: fo,
    })
}

/// The literal interleaved product
/// `G_8∘(H_8∘F_8)^{n_8}∘…∘G_1∘(H_1∘F_1)^{n_1}` for a solved problem.
///
/// [`SynthesisResult::composite`] regroups the same factors; the two agree
/// exactly through degree k+1 (tested), which is where all claims live.
pub fn interleaved_composite(
    p: &SynthesisProblem,
    r: &SynthesisResult,
) -> Result<Jet, JetError> {
    let ord = p.order();
    let mut acc = Jet::identity(ord);
    for i in 0..8 {
        let hf = r.h[i].as_jet(ord)?.compose(&p.f[i])?;
        acc = hf.pow(r.n[i])?.compose(&acc)?;
        acc = p.g[i].compose(&acc)?;
    }
    Ok(acc)
}

// --------------------------------------------------------------------------
// dilation helpers and the bundled chain

/// Conjugation by the dilation `t ↦ c·t`: scales the degree-j coefficient
/// by `c^{j-1}`. Exact, and an isometry of all flatness orders.
pub fn rescale(f: &Jet, c: &Q) -> Result<Jet, JetError> {
    if c.is_zero() {
        return Err(JetError::NonInvertible);
    }
    let mut factor = Q::one();
    let coeffs = f
        .coeffs()
        .iter()
        .map(|a| {
            let out = a * &factor;
            factor *= c;
            out
        })
        .collect();
    Jet::new(f.order(), coeffs)
}

/// Dilates so the first post-identity coefficient lands in `(1/4, 1]`,
/// returning the rescaled jet and the dyadic factor used. Keeps chained
/// syntheses numerically tame without leaving ℚ. Identity jets pass
/// through unchanged.
pub fn normalize_lead(f: &Jet) -> (Jet, Q) {
    if f.is_identity() {
        return (f.clone(), Q::one());
    }
    let fo = f.flat_order();
    if fo == 0 {
        // multiplier ≠ 1: nothing to normalize against
        return (f.clone(), Q::one());
    }
    let lead = f.coeff(fo + 1).abs();
    let mut c = Q::one();
    let half = q(1, 2);
    let two = qi(2);
    let pow_fo = |c: &Q| num::pow::pow(c.clone(), fo);
    while &lead * pow_fo(&c) > Q::one() {
        c *= &half;
    }
    while &lead * pow_fo(&c) <= q(1, 4) {
        c *= &two;
    }
    (rescale(f, &c).expect("dyadic factor is nonzero"), c)
}

/// One stage of [`bundled_chain`]: the problem that was solved, its result,
/// and the dilation applied to the previous composite to build the inputs.
#[derive(Debug, Clone)]
pub struct ChainStage {
    pub problem: SynthesisProblem,
    pub result: SynthesisResult,
    pub rescale_factor: Q,
}

fn bundled_connector_scale(k: usize) -> Q {
    // fresh 1-flat connectors each stage: flip sign at stage 2, then halve
    match k {
        1 => Q::one(),
        2 => qi(-1),
        _ => {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            qi(sign) / Q::from_integer(BigInt::from(2u32).pow((k - 2) as u32))
        }
    }
}

fn bundled_problem_at(k: usize, f: Vec<Jet>, ord: usize) -> Result<SynthesisProblem, SynthError> {
    let gs = [
        q(1, 2),
        q(-1, 3),
        q(1, 5),
        q(-1, 7),
        q(1, 11),
        q(-1, 13),
        q(1, 17),
        q(-1, 19),
    ];
    let scale = bundled_connector_scale(k);
    let g = gs
        .iter()
        .map(|gi| {
            let mut c = vec![Q::zero(); ord];
            c[0] = Q::one();
            c[1] = gi * &scale;
            Jet::new(ord, c).map_err(SynthError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SynthesisProblem::new(k, f, g, 10)
}

/// The bundled 1-flat octuple: a fixed problem whose odd slots satisfy the
/// k = 1 sign requirements with room to spare, used by the chain demo and
/// the command-line tool.
pub fn bundled_octuple() -> SynthesisProblem {
    bundled_octuple_at_order(6)
}

fn bundled_octuple_at_order(ord: usize) -> SynthesisProblem {
    let f1 = Jet::from_pairs(ord, &[(1, 1), (1, 1), (-10, 1)]); // A = 2,  S = −66
    let f3 = Jet::from_pairs(ord, &[(1, 1), (-1, 1), (2, 1)]); // A = −2, S = 6
    let f5 = Jet::from_pairs(ord, &[(1, 1), (1, 1)]); // A = 2,  S = −6
    let fill = Jet::from_pairs(ord, &[(1, 1), (1, 1), (1, 1)]);
    let f = vec![
        f1,
        fill.clone(),
        f3,
        fill.clone(),
        f5.clone(),
        fill.clone(),
        f5,
        fill,
    ];
    bundled_problem_at(1, f, ord).expect("bundled octuple is a valid problem")
}

/// Runs the bundled octuple through successive syntheses until the
/// composite is `target_flat`-flat, feeding each stage's (normalized)
/// output into the next as prescribed: stage 2 pairs the output with its
/// own inverse to recover opposite Schwarzian signs, later stages use
/// eight copies directly.
///
/// `target_flat` must be at least 2; jet order grows with the target so the
/// final flatness is still visible.
pub fn bundled_chain(target_flat: usize) -> Result<Vec<ChainStage>, SynthError> {
    if target_flat < 2 {
        return Err(SynthError::Precondition(
            "chain target must be at least 2-flat".into(),
        ));
    }
    let ord = 6.max(target_flat + 2);
    let mut stages: Vec<ChainStage> = Vec::new();
    let mut prev: Option<Jet> = None;
    for k in 1..target_flat {
        let (problem, factor) = match k {
            1 => (bundled_octuple_at_order(ord), Q::one()),
            2 => {
                let (fs, c) = normalize_lead(prev.as_ref().unwrap());
                let finv = fs.invert()?;
                let f = vec![
                    fs.clone(),
                    fs.clone(),
                    finv,
                    fs.clone(),
                    fs.clone(),
                    fs.clone(),
                    fs.clone(),
                    fs,
                ];
                (bundled_problem_at(2, f, ord)?, c)
            }
            k => {
                let (fs, c) = normalize_lead(prev.as_ref().unwrap());
                (bundled_problem_at(k, vec![fs; 8], ord)?, c)
            }
        };
        let result = synthesize(&problem)?;
        prev = Some(result.composite.clone());
        stages.push(ChainStage {
            problem,
            result,
            rescale_factor: factor,
        });
    }
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jet6(pairs: &[(i64, i64)]) -> Jet {
        Jet::from_pairs(6, pairs)
    }

    fn ident_jets(ord: usize, count: usize) -> Vec<Jet> {
        vec![Jet::identity(ord); count]
    }

    // an octuple whose odd slots satisfy the k = 1 sign requirements
    fn sign_valid_octuple(ord: usize) -> Vec<Jet> {
        let f1 = Jet::from_pairs(ord, &[(1, 1), (1, 1), (-10, 1)]);
        let f3 = Jet::from_pairs(ord, &[(1, 1), (-1, 1), (2, 1)]);
        vec![
            f1.clone(),
            f1.clone(),
            f3,
            f1.clone(),
            f1.clone(),
            f1.clone(),
            f1.clone(),
            f1,
        ]
    }

    // -- solve_two_flat ------------------------------------------------------

    #[test]
    fn two_flat_zero_offsets() {
        // A(F1) = 2, S(F1) = −66; A(F3) = −2, S(F3) = 6; α = β = 0.
        let f1 = jet6(&[(1, 1), (1, 1), (-10, 1)]);
        let f3 = jet6(&[(1, 1), (-1, 1), (2, 1)]);
        let (h, m, n) =
            solve_two_flat(&f1, &f3, &qi(0), &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!((m, n), (10, 10));
        assert_eq!(h.coeffs(), &[qi(1), qi(0)][..]);
        // exact composition: A vanishes, S takes F1's (negative) sign
        let odd = f3
            .pow(n)
            .unwrap()
            .compose(&h.as_jet(6).unwrap().compose(&f1).unwrap().pow(m).unwrap())
            .unwrap();
        let (a, s) = odd.invariants_as().unwrap();
        assert!(a.is_zero());
        assert!(s.is_negative());
    }

    #[test]
    fn two_flat_constructed_cancellation() {
        // α = −(m·A(F1) + n·A(F3)) for (m, n) = (30, 10) → identity corrector.
        let f1 = jet6(&[(1, 1), (1, 1), (-10, 1)]);
        let f3 = jet6(&[(1, 1), (-1, 1), (2, 1)]);
        let alpha = qi(-(30 * 2 - 10 * 2));
        let (h, m, n) =
            solve_two_flat(&f1, &f3, &alpha, &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!((m, n), (30, 10));
        assert!(h.dist_to_identity().is_zero());
    }

    #[test]
    fn two_flat_inverse_pair_is_degenerate() {
        let f1 = jet6(&[(1, 1), (1, 1), (-10, 1)]);
        let f3 = f1.invert().unwrap();
        let err =
            solve_two_flat(&f1, &f3, &qi(0), &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap_err();
        assert!(matches!(err, SynthError::Degenerate(_)), "{err}");
    }

    #[test]
    fn two_flat_same_signs_rejected() {
        let f1 = jet6(&[(1, 1), (1, 1), (-10, 1)]);
        let err =
            solve_two_flat(&f1, &f1, &qi(0), &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap_err();
        let msg = format!("{err}");
        assert!(matches!(err, SynthError::Precondition(_)), "{msg}");
        assert!(msg.contains("A(F1)"), "{msg}");
    }

    // -- solve_three_flat ----------------------------------------------------

    #[test]
    fn three_flat_symmetric_cancellation() {
        // t+t³ against t−t³ with γ = 0: equal exponents, identity corrector.
        let f1 = jet6(&[(1, 1), (0, 1), (1, 1)]);
        let f3 = jet6(&[(1, 1), (0, 1), (-1, 1)]);
        let (h, m, n) =
            solve_three_flat(&f1, &f3, &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!((m, n), (50, 50));
        assert!(h.dist_to_identity().is_zero());
    }

    #[test]
    fn three_flat_exact_cubic_target() {
        let f1 = jet6(&[(1, 1), (0, 1), (1, 1)]);
        let f3 = jet6(&[(1, 1), (0, 1), (-2, 1)]);
        let gamma = q(1, 6);
        let (h, m, n) =
            solve_three_flat(&f1, &f3, &gamma, 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!((m, n), (100, 50));
        assert_eq!(h.coeffs()[2], q(1, 600));
        let odd = f3
            .pow(n)
            .unwrap()
            .compose(&h.as_jet(6).unwrap().compose(&f1).unwrap().pow(m).unwrap())
            .unwrap();
        assert!(odd.coeff(2).is_zero());
        assert_eq!(*odd.coeff(3), gamma);
    }

    #[test]
    fn three_flat_same_signs_rejected() {
        let f1 = jet6(&[(1, 1), (0, 1), (1, 1)]);
        let f3 = jet6(&[(1, 1), (0, 1), (2, 1)]);
        let err =
            solve_three_flat(&f1, &f3, &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap_err();
        assert!(matches!(err, SynthError::Precondition(_)), "{err}");
    }

    #[test]
    fn three_flat_exponent_floor_is_monotone() {
        let f1 = jet6(&[(1, 1), (0, 1), (1, 1)]);
        let f3 = jet6(&[(1, 1), (0, 1), (-2, 1)]);
        for n_min in [10, 200, 5000] {
            let (_, m, n) =
                solve_three_flat(&f1, &f3, &q(1, 6), n_min, &q(1, 100), DEFAULT_CAP).unwrap();
            assert!(m >= n_min && n >= n_min, "floor {n_min} gave ({m}, {n})");
        }
    }

    // -- solve_higher_flat ---------------------------------------------------

    fn monomial_quad(k: usize, ord: usize) -> Vec<Jet> {
        // Q_i = t + q_i t^{k+1} with the bundled coefficient list
        [q(1, 3), q(-1, 7), q(2, 5), q(1, 9)]
            .into_iter()
            .map(|qq| {
                let mut c = vec![Q::zero(); ord];
                c[0] = Q::one();
                c[k] = qq;
                Jet::new(ord, c).unwrap()
            })
            .collect()
    }

    #[test]
    fn higher_flat_identity_inputs() {
        let qs = ident_jets(5, 4);
        let (rs, n) = solve_higher_flat(&qs, &qi(0), 3, 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!(n, 10);
        assert!(rs.iter().all(|r| r.dist_to_identity().is_zero()));
    }

    #[test]
    fn higher_flat_additive_target() {
        // α = 17·Σq_i: the raw seventeenth powers land exactly on target.
        let qs = monomial_quad(3, 5);
        let qsum: Q = qs.iter().map(|f| f.coeff(4).clone()).sum();
        let alpha = qi(17) * &qsum;
        let (rs, n) = solve_higher_flat(&qs, &alpha, 3, 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!(n, 17);
        assert!(rs.iter().all(|r| r.dist_to_identity().is_zero()));
    }

    #[test]
    fn higher_flat_commutator_k3_schedule() {
        let qs = monomial_quad(3, 5);
        let alpha = q(-3, 11);
        let (rs, n) = solve_higher_flat(&qs, &alpha, 3, 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!(n, 17013);
        // R3 = exp(b·t³∂) carries b as its cubic coefficient; b is positive
        // because the composition-group bracket flips the field bracket
        assert_eq!(
            rs[2].coeffs()[2],
            Q::new(551460640.into(), 66861141039i64.into())
        );
        let eps = q(1, 100);
        for r in &rs {
            assert!(r.dist_to_identity() < eps);
        }
        // independent recomposition of (R4 Q4)^n … (R1 Q1)^n
        let mut core = Jet::identity(5);
        for (r, f) in rs.iter().zip(qs.iter()) {
            core = r.as_jet(5).unwrap().compose(f).unwrap().pow(n).unwrap().compose(&core).unwrap();
        }
        assert!(core.coeff(2).is_zero() && core.coeff(3).is_zero());
        assert_eq!(*core.coeff(4), alpha);
    }

    #[test]
    fn higher_flat_commutator_k4_schedule() {
        let qs = monomial_quad(4, 6);
        let (rs, n) = solve_higher_flat(&qs, &q(-3, 11), 4, 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!(n, 8505);
        let mut core = Jet::identity(6);
        for (r, f) in rs.iter().zip(qs.iter()) {
            core = r.as_jet(6).unwrap().compose(f).unwrap().pow(n).unwrap().compose(&core).unwrap();
        }
        assert!((2..=4).all(|d| core.coeff(d).is_zero()));
        assert_eq!(*core.coeff(5), q(-3, 11));
    }

    #[test]
    fn higher_flat_random_quadruple() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let qs: Vec<Jet> = (0..4)
                .map(|_| {
                    let mut c = vec![Q::zero(); 5];
                    c[0] = Q::one();
                    // random nonzero degree-4 and degree-5 data
                    c[3] = q(rng.gen_range(-9..=9).max(1), rng.gen_range(1..=9));
                    c[4] = q(rng.gen_range(-9..=9), rng.gen_range(1..=9));
                    Jet::new(5, c).unwrap()
                })
                .collect();
            let (rs, n) =
                solve_higher_flat(&qs, &qi(0), 3, 10, &q(1, 100), DEFAULT_CAP).unwrap();
            let mut core = Jet::identity(5);
            for (r, f) in rs.iter().zip(qs.iter()) {
                core = r.as_jet(5).unwrap().compose(f).unwrap().pow(n).unwrap().compose(&core).unwrap();
            }
            assert!(core.coeff(2).is_zero() && core.coeff(3).is_zero());
            assert!(core.coeff(4).is_zero());
        }
    }

    #[test]
    fn higher_flat_tiny_box_exhausts() {
        // a 10⁻¹³ box needs n ~ 10²⁶, far past the integer range
        let qs = monomial_quad(3, 5);
        let eps = Q::new(1.into(), 10_000_000_000_000i64.into());
        let err = solve_higher_flat(&qs, &q(-3, 11), 3, 10, &eps, DEFAULT_CAP).unwrap_err();
        assert!(matches!(err, SynthError::SearchExhausted(_)), "{err}");
    }

    #[test]
    fn two_flat_tiny_cap_exhausts() {
        // α = 361/3 pushes the first feasible n to 77; a window of 30
        // starting at 10 never reaches it
        let f1 = jet6(&[(1, 1), (1, 1), (-10, 1)]);
        let f3 = jet6(&[(1, 1), (-1, 1), (2, 1)]);
        let err =
            solve_two_flat(&f1, &f3, &q(361, 3), &qi(0), 10, &q(1, 100), 30).unwrap_err();
        assert!(matches!(err, SynthError::SearchExhausted(_)), "{err}");
        let (_, m, n) =
            solve_two_flat(&f1, &f3, &q(361, 3), &qi(0), 10, &q(1, 100), DEFAULT_CAP).unwrap();
        assert_eq!((m, n), (17, 77));
    }

    // -- even interpolators --------------------------------------------------

    #[test]
    fn even_slots_identity_connectors() {
        let p = SynthesisProblem::new(1, sign_valid_octuple(6), ident_jets(6, 8), 10).unwrap();
        let even = even_interpolators(&p).unwrap();
        assert_eq!(even.n, vec![10, 10, 10, 10]);
        assert!(even.h.iter().all(|h| h.dist_to_identity().is_zero()));
    }

    #[test]
    fn even_slots_inverse_pair_connector() {
        let mut g = ident_jets(6, 8);
        g[0] = Jet::from_pairs(6, &[(2, 1)]); // G1 = 2t
        g[1] = Jet::from_pairs(6, &[(1, 2)]); // G2 = t/2
        let p = SynthesisProblem::new(1, sign_valid_octuple(6), g, 10).unwrap();
        let even = even_interpolators(&p).unwrap();
        assert_eq!(even.n[0], 10);
        assert!(even.h[0].dist_to_identity().is_zero());
        assert!(even.blocks[0].flat_order() >= 1);
    }

    #[test]
    fn even_slots_random_connectors_stay_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f2 = jet6(&[(1, 1), (0, 1), (1, 1)]); // 2-flat
        let f = vec![
            f2.clone(),
            f2.clone(),
            jet6(&[(1, 1), (0, 1), (-1, 1)]),
            f2.clone(),
            f2.clone(),
            f2.clone(),
            f2.clone(),
            f2,
        ];
        let g: Vec<Jet> = (0..8)
            .map(|_| {
                jet6(&[
                    (1, 1),
                    (rng.gen_range(-5..=5), rng.gen_range(1..=7)),
                    (rng.gen_range(-5..=5), rng.gen_range(1..=7)),
                ])
            })
            .collect();
        let p = SynthesisProblem::new(2, f, g, 10).unwrap();
        let even = even_interpolators(&p).unwrap();
        for (i, b) in even.blocks.iter().enumerate() {
            assert!(b.flat_order() >= 2, "block {i}: {b}");
        }
        for h in &even.h {
            assert!(h.dist_to_identity() < q(1, 100));
        }
    }

    #[test]
    fn even_slot_corrector_norm_decays_with_floor() {
        let f2 = jet6(&[(1, 1), (0, 1), (1, 1)]);
        let f = vec![
            f2.clone(),
            f2.clone(),
            jet6(&[(1, 1), (0, 1), (-1, 1)]),
            f2.clone(),
            f2.clone(),
            f2.clone(),
            f2.clone(),
            f2,
        ];
        let g: Vec<Jet> = (1..=8).map(|i| jet6(&[(1, 1), (1, i)])).collect();
        let mut last = qi(1);
        for n_min in [200, 1000, 5000] {
            let p = SynthesisProblem::new(2, f.clone(), g.clone(), n_min).unwrap();
            let even = even_interpolators(&p).unwrap();
            let worst = even
                .h
                .iter()
                .map(|h| h.dist_to_identity())
                .max()
                .unwrap();
            assert!(worst < last, "floor {n_min}: {worst} !< {last}");
            last = worst;
        }
    }

    #[test]
    fn even_slots_exhaust_on_irrational_root() {
        // Φ_1 = t/2 has no rational n-th root of its multiplier past n = 1
        let mut g = ident_jets(6, 8);
        g[0] = Jet::from_pairs(6, &[(2, 1)]);
        let p = SynthesisProblem::new(1, sign_valid_octuple(6), g, 10)
            .unwrap()
            .with_cap(100);
        let err = even_interpolators(&p).unwrap_err();
        assert!(matches!(err, SynthError::SearchExhausted(_)), "{err}");
    }

    // -- synthesize ----------------------------------------------------------

    #[test]
    fn synthesize_identity_octuple() {
        for k in [1, 2, 3, 4] {
            let p = SynthesisProblem::new(k, ident_jets(6, 8), ident_jets(6, 8), 10).unwrap();
            let r = synthesize(&p).unwrap();
            assert!(r.composite.is_identity());
            assert!(r.flat_order >= k + 1);
            assert_eq!(r.n, vec![10; 8]);
        }
    }

    #[test]
    fn synthesize_rejects_bad_signs() {
        let mut p = bundled_octuple();
        p.f[2] = p.f[0].clone(); // same signs on both active odd slots
        let err = synthesize(&p).unwrap_err();
        assert!(matches!(err, SynthError::Precondition(_)), "{err}");
    }

    #[test]
    fn synthesize_bundled_octuple_schedule() {
        let p = bundled_octuple();
        let r = synthesize(&p).unwrap();
        assert_eq!(r.n, vec![25, 10, 85, 10, 10, 10, 10, 10]);
        assert_eq!(
            r.h[0].coeffs()[1],
            Q::new((-2366603).into(), 242492250.into())
        );
        assert_eq!(r.flat_order, 2);
        // S(F̄)·S(F_1) > 0, exactly
        let s_bar = r.composite.schwarzian().unwrap();
        let s1 = p.f[0].schwarzian().unwrap();
        assert!((s_bar * s1).is_positive());
    }

    #[test]
    fn synthesize_bookkeeping_matches_composition() {
        // A(F̄) decomposes exactly into the even part plus the pinned odd
        // slots plus the solved odd block.
        let p = bundled_octuple();
        let r = synthesize(&p).unwrap();
        let even = even_interpolators(&p).unwrap();
        let fhat = even.blocks[3]
            .compose(&even.blocks[2])
            .unwrap()
            .compose(&even.blocks[1])
            .unwrap()
            .compose(&even.blocks[0])
            .unwrap();
        let odd = p.f[2]
            .pow(r.n[2])
            .unwrap()
            .compose(
                &r.h[0]
                    .as_jet(6)
                    .unwrap()
                    .compose(&p.f[0])
                    .unwrap()
                    .pow(r.n[0])
                    .unwrap(),
            )
            .unwrap();
        let lhs = r.composite.nonlinearity().unwrap();
        let rhs = fhat.nonlinearity().unwrap()
            + qi(10)
                * (p.f[4].nonlinearity().unwrap() + p.f[6].nonlinearity().unwrap())
            + odd.nonlinearity().unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn interleaved_product_agrees_through_top_degree() {
        let p = bundled_octuple();
        let r = synthesize(&p).unwrap();
        let inter = interleaved_composite(&p, &r).unwrap();
        for d in 1..=p.k + 1 {
            assert_eq!(inter.coeff(d), r.composite.coeff(d), "degree {d}");
        }
    }

    // -- the chain -----------------------------------------------------------

    #[test]
    fn chain_reaches_four_flat() {
        let stages = bundled_chain(4).unwrap();
        assert_eq!(stages.len(), 3);

        let s1 = &stages[0];
        assert_eq!(s1.result.n, vec![25, 10, 85, 10, 10, 10, 10, 10]);
        assert_eq!(s1.result.flat_order, 2);

        let s2 = &stages[1];
        assert_eq!(s2.rescale_factor, q(1, 16));
        assert_eq!((s2.result.n[0], s2.result.n[2]), (41, 109));
        assert_eq!(s2.result.flat_order, 3);
        // the inverse trick: slot 3 is the exact inverse of slot 1
        assert_eq!(
            s2.problem.f[2],
            s2.problem.f[0].invert().unwrap()
        );

        let s3 = &stages[2];
        assert_eq!(s3.rescale_factor, q(1, 2));
        assert_eq!(s3.result.n[0], 95731);
        assert!(s3.result.flat_order >= 4);

        // interleaved agreement at the commutator stage as well
        let inter = interleaved_composite(&s3.problem, &s3.result).unwrap();
        for d in 1..=4 {
            assert_eq!(inter.coeff(d), s3.result.composite.coeff(d), "degree {d}");
        }
    }

    #[test]
    fn chain_normalization_is_a_dilation() {
        let f = jet6(&[(1, 1), (0, 1), (48, 1), (5, 1)]);
        let (g, c) = normalize_lead(&f);
        assert_eq!(c, q(1, 8));
        assert_eq!(*g.coeff(3), qi(48) * q(1, 64));
        assert_eq!(rescale(&g, &(qi(1) / &c)).unwrap(), f);
    }

    // -- serialization -------------------------------------------------------

    #[test]
    fn problem_round_trip() {
        let p = bundled_octuple();
        let text = p.to_text();
        let q2 = SynthesisProblem::parse(&text).unwrap();
        assert_eq!(q2.to_text(), text);
        assert_eq!(q2.k, 1);
        assert_eq!(q2.n_min, 10);
    }

    #[test]
    fn result_round_trip() {
        let r = synthesize(&bundled_octuple()).unwrap();
        let text = r.to_text();
        let r2 = SynthesisResult::parse(&text).unwrap();
        assert_eq!(r2.to_text(), text);
        assert_eq!(r2.composite, r.composite);
        assert_eq!(r2.n, r.n);
    }
}
