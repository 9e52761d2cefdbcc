//! Periodic-point counting in skew products over a symbolic base.
//!
//! The objects here are maps `F(ω, t) = (σω, g_{ω₀}(t))`: a shift σ on a
//! space of symbol sequences, driving one circle diffeomorphism per symbol.
//! Periodic orbits of `F` sort themselves by itinerary: a period-`n` orbit
//! sits over a period-`n` word `w`, and its fiber coordinates are fixed
//! points of the *return map* `g_{w_{n-1}} ∘ … ∘ g_{w_0}`. Counting periodic
//! points therefore factors into three independent problems —
//!
//! * enumerate the admissible period-`n` words (one representative per
//!   rotation class, since rotations give conjugate return maps with the
//!   same number of fixed points),
//! * build each return map as a composition and locate its fixed points,
//! * aggregate, weighting each representative by its rotation-orbit size.
//!
//! All aggregation is integer arithmetic over a deterministically ordered
//! word list, so totals do not depend on how many threads share the work.
//!
//! Two deliberately non-generic constructions round the module out. A
//! *factory* perturbation plants `a + 1` evenly spaced hyperbolic fixed
//! points inside a flat chart; its multiplier margins have a closed rational
//! form, which matters because for large `a` they fall below anything
//! floating point can see — the counts stay exact while the map itself
//! becomes numerically indistinguishable from the identity. And a *blender*
//! pair of interval contractions is checked for the covering property with
//! directed rounding, then searched backwards for words steering a point
//! into an arbitrarily small target — the mechanism that makes tiny targets
//! reachable at every scale.

use num::bigint::BigInt;
use num::{BigRational, BigUint, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::jet::{Jet, Q};
use crate::map1d::{
    find_fixed_points, poly_eval, ComposedMap1D, Domain, FixedPointScan, Map1DError, SmoothMap1D,
};

#[derive(Debug, Error)]
pub enum SkewError {
    #[error("a symbolic base needs at least one symbol")]
    EmptyBase,
    #[error("the transition matrix must be square with one row per symbol")]
    BadTransition,
    #[error("a toral model needs |det| = 1 and |trace| > 2, got det {det} and trace {trace}")]
    NotHyperbolicToral { det: i64, trace: i64 },
    #[error("{got} fiber maps for {want} symbols")]
    FiberArity { got: usize, want: usize },
    #[error("all fiber maps must live on one common circle")]
    FiberDomain,
    #[error("symbol {symbol} is outside the base's alphabet of {count}")]
    UnknownSymbol { symbol: u8, count: usize },
    #[error("the word breaks a transition rule at position {at}")]
    NotAdmissible { at: usize },
    #[error("the scan could not isolate fixed points near [{lo}, {hi}]")]
    Unresolved { lo: f64, hi: f64 },
    #[error("no growth data to classify")]
    EmptySeries,
    #[error("parameter out of range: {0}")]
    Precondition(String),
    #[error("the perturbed map stops being a diffeomorphism: derivative {value:.3e} at {at:.6}")]
    NotDiffeo { at: f64, value: f64 },
    #[error("the germ is only {has}-flat where {need}-flat is required")]
    NotFlatEnough { need: usize, has: usize },
    #[error("a blender map is not monotone on the core: derivative {value:.3e} at {at:.6}")]
    NotMonotone { at: f64, value: f64 },
    #[error("no multiplier balance with exponent sum up to {cap}")]
    SearchExhausted { cap: usize },
    #[error(transparent)]
    Map(#[from] Map1DError),
}

// ---------------------------------------------------------------------------
// symbolic bases and word enumeration
// ---------------------------------------------------------------------------

/// A shift space driving the fibers: finitely many symbols with a 0/1
/// transition rule (all-ones for the full shift), optionally tagged with a
/// hyperbolic 2×2 integer matrix when the base is meant to model a torus
/// automorphism and periodic points should be counted geometrically.
#[derive(Debug, Clone)]
pub struct SymbolicBase {
    symbols: usize,
    transition: Vec<Vec<bool>>,
    toral: Option<[[i64; 2]; 2]>,
}

impl SymbolicBase {
    pub fn full_shift(symbols: usize) -> Result<Self, SkewError> {
        if symbols == 0 || symbols > u8::MAX as usize {
            return Err(SkewError::EmptyBase);
        }
        Ok(SymbolicBase {
            symbols,
            transition: vec![vec![true; symbols]; symbols],
            toral: None,
        })
    }

    /// A subshift of finite type: `transition[i][j]` says whether symbol `j`
    /// may follow symbol `i`.
    pub fn subshift(transition: Vec<Vec<bool>>) -> Result<Self, SkewError> {
        let m = transition.len();
        if m == 0 || m > u8::MAX as usize {
            return Err(SkewError::EmptyBase);
        }
        if transition.iter().any(|row| row.len() != m) {
            return Err(SkewError::BadTransition);
        }
        Ok(SymbolicBase {
            symbols: m,
            transition,
            toral: None,
        })
    }

    /// Attach a torus automorphism as the geometric model of the base. The
    /// matrix must be area-preserving up to sign and hyperbolic; from then
    /// on [`periodic_point_count`](Self::periodic_point_count) counts its
    /// actual periodic points instead of symbol words.
    pub fn with_toral_model(mut self, b: [[i64; 2]; 2]) -> Result<Self, SkewError> {
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let trace = b[0][0] + b[1][1];
        if det.abs() != 1 || trace.abs() <= 2 {
            return Err(SkewError::NotHyperbolicToral { det, trace });
        }
        self.toral = Some(b);
        Ok(self)
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols
    }

    fn step_allowed(&self, from: u8, to: u8) -> bool {
        self.transition[from as usize][to as usize]
    }

    /// Check the transitions along `word` (consecutive pairs only; closing
    /// the loop is the enumerator's business).
    pub fn admissible(&self, word: &[u8]) -> Result<(), SkewError> {
        for &s in word {
            if (s as usize) >= self.symbols {
                return Err(SkewError::UnknownSymbol {
                    symbol: s,
                    count: self.symbols,
                });
            }
        }
        for (i, pair) in word.windows(2).enumerate() {
            if !self.step_allowed(pair[0], pair[1]) {
                return Err(SkewError::NotAdmissible { at: i });
            }
        }
        Ok(())
    }

    /// How many period-`n` points the base has, exactly.
    ///
    /// With a toral model this is `|det(Bⁿ − I)|`; symbolically it is the
    /// trace of the n-th power of the transition matrix, which for the full
    /// shift collapses to `mⁿ`. Exact integer arithmetic throughout — these
    /// numbers are the yardstick every growth claim is measured against.
    pub fn periodic_point_count(&self, n: usize) -> BigUint {
        if let Some(b) = self.toral {
            let bn = mat2_pow(&b, n);
            let one = BigInt::one();
            let det = (&bn[0][0] - &one) * (&bn[1][1] - &one) - &bn[0][1] * &bn[1][0];
            return det.abs().to_biguint().expect("|det| is non-negative");
        }
        let m = self.symbols;
        let mut power = vec![vec![BigUint::zero(); m]; m];
        for (i, row) in power.iter_mut().enumerate() {
            row[i] = BigUint::one();
        }
        let step: Vec<Vec<BigUint>> = self
            .transition
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| if b { BigUint::one() } else { BigUint::zero() })
                    .collect()
            })
            .collect();
        for _ in 0..n {
            power = mat_mul_big(&power, &step);
        }
        (0..m).map(|i| power[i][i].clone()).sum()
    }

    /// Enumerate the admissible period-`n` words, one representative per
    /// rotation class, in lexicographic order of the representative (the
    /// smallest rotation). Each carries its primitive period, which is also
    /// the size of its rotation orbit — so orbit sizes summed over the
    /// output recover [`periodic_point_count`](Self::periodic_point_count).
    pub fn periodic_words(&self, n: usize) -> Vec<PeriodicWord> {
        let m = self.symbols as u8;
        if n == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut word = vec![0u8; n];
        'outer: loop {
            if self.cyclically_admissible(&word) && is_minimal_rotation(&word) {
                out.push(PeriodicWord {
                    primitive_period: primitive_period(&word),
                    word: word.clone(),
                });
            }
            let mut k = n;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                if word[k] + 1 < m {
                    word[k] += 1;
                    for w in word.iter_mut().skip(k + 1) {
                        *w = 0;
                    }
                    break;
                }
            }
        }
        out
    }

    fn cyclically_admissible(&self, word: &[u8]) -> bool {
        let n = word.len();
        (0..n).all(|i| self.step_allowed(word[i], word[(i + 1) % n]))
    }
}

/// One rotation class of period-`n` itineraries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicWord {
    /// lexicographically smallest rotation, length `n`
    pub word: Vec<u8>,
    /// smallest `p` with `w[i] = w[i+p mod n]`; divides `n`
    pub primitive_period: usize,
}

impl PeriodicWord {
    /// Number of distinct rotations — the count of base points this class
    /// stands for.
    pub fn orbit_size(&self) -> usize {
        self.primitive_period
    }
}

fn is_minimal_rotation(word: &[u8]) -> bool {
    let n = word.len();
    (1..n).all(|r| {
        for i in 0..n {
            let a = word[i];
            let b = word[(i + r) % n];
            if a != b {
                return a < b;
            }
        }
        true
    })
}

fn primitive_period(word: &[u8]) -> usize {
    let n = word.len();
    for p in 1..n {
        if n % p == 0 && (0..n).all(|i| word[i] == word[(i + p) % n]) {
            return p;
        }
    }
    n
}

fn mat2_pow(b: &[[i64; 2]; 2], n: usize) -> [[BigInt; 2]; 2] {
    let big = |v: i64| BigInt::from(v);
    let mut acc = [
        [big(1), big(0)],
        [big(0), big(1)],
    ];
    for _ in 0..n {
        let a = acc;
        acc = [
            [
                &a[0][0] * big(b[0][0]) + &a[0][1] * big(b[1][0]),
                &a[0][0] * big(b[0][1]) + &a[0][1] * big(b[1][1]),
            ],
            [
                &a[1][0] * big(b[0][0]) + &a[1][1] * big(b[1][0]),
                &a[1][0] * big(b[0][1]) + &a[1][1] * big(b[1][1]),
            ],
        ];
    }
    acc
}

fn mat_mul_big(a: &[Vec<BigUint>], b: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let m = a.len();
    let mut out = vec![vec![BigUint::zero(); m]; m];
    for i in 0..m {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] += aik * &b[k][j];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// the skew product and its return maps
// ---------------------------------------------------------------------------

/// One fiber slot: either an ordinary circle diffeomorphism or a factory
/// perturbation, kept as its own variant because the factory knows its fixed
/// points symbolically when they sit below floating-point resolution.
pub enum Fiber {
    Map(Box<dyn SmoothMap1D>),
    Factory(FactoryMap),
}

impl Fiber {
    pub fn map<M: SmoothMap1D + 'static>(m: M) -> Self {
        Fiber::Map(Box::new(m))
    }

    pub fn as_map(&self) -> &dyn SmoothMap1D {
        match self {
            Fiber::Map(b) => b.as_ref(),
            Fiber::Factory(f) => f,
        }
    }
}

/// A symbolic base driving one orientation-preserving circle map per symbol,
/// all on the same circle.
pub struct SkewProduct {
    base: SymbolicBase,
    fibers: Vec<Fiber>,
    circle: f64,
}

impl SkewProduct {
    pub fn new(base: SymbolicBase, fibers: Vec<Fiber>) -> Result<Self, SkewError> {
        if fibers.len() != base.symbol_count() {
            return Err(SkewError::FiberArity {
                got: fibers.len(),
                want: base.symbol_count(),
            });
        }
        let mut circle = None;
        for f in &fibers {
            match f.as_map().domain() {
                Domain::Circle { length } if circle.is_none() || circle == Some(length) => {
                    circle = Some(length);
                }
                _ => return Err(SkewError::FiberDomain),
            }
            if !f.as_map().orientation_preserving() {
                return Err(SkewError::FiberDomain);
            }
        }
        Ok(SkewProduct {
            base,
            fibers,
            circle: circle.expect("at least one fiber"),
        })
    }

    pub fn base(&self) -> &SymbolicBase {
        &self.base
    }

    pub fn fiber(&self, symbol: u8) -> &dyn SmoothMap1D {
        self.fibers[symbol as usize].as_map()
    }

    pub fn circle_length(&self) -> f64 {
        self.circle
    }

    fn factory(&self, symbol: u8) -> Option<&FactoryMap> {
        match &self.fibers[symbol as usize] {
            Fiber::Factory(f) => Some(f),
            Fiber::Map(_) => None,
        }
    }
}

/// The fiber return map along `word`: the fiber of `word[0]` acts first.
/// Concatenation matches composition the same way around —
/// `fiber_return(w1 ++ w2)` is `fiber_return(w2)` after `fiber_return(w1)`.
pub fn fiber_return<'a>(
    skew: &'a SkewProduct,
    word: &[u8],
) -> Result<ComposedMap1D<'a>, SkewError> {
    skew.base.admissible(word)?;
    let factors: Vec<&dyn SmoothMap1D> = word.iter().map(|&s| skew.fiber(s)).collect();
    Ok(ComposedMap1D::new(factors)?)
}

/// Fixed points of one return map, with the curvature pair (A, S) of the
/// map at each of them — the jet data behind every convexity or Schwarzian
/// argument about how many fixed points a family can have.
pub struct FiberFixedPoints {
    pub scan: FixedPointScan,
    /// `(A, S) = (f″/f′, f‴/f′ − 3/2 (f″/f′)²)` at each scanned point
    pub invariants: Vec<(f64, f64)>,
}

pub fn count_fiber_fixed_points(
    map: &dyn SmoothMap1D,
    region: Option<(f64, f64)>,
    tol: f64,
) -> Result<FiberFixedPoints, SkewError> {
    let scan = find_fixed_points(map, region, tol)?;
    let invariants = scan
        .points
        .iter()
        .map(|p| {
            let j = map.jet3(p.x);
            let a = j[2] / j[1];
            (a, j[3] / j[1] - 1.5 * a * a)
        })
        .collect();
    Ok(FiberFixedPoints { scan, invariants })
}

/// Grid certificate for a curvature sign along return maps: samples
/// `window`, transports third-order jets along `word`, and records the worst
/// nonlinearity and Schwarzian seen over the samples whose whole forward
/// orbit stays inside `stay_within`. Samples that escape are *absorbed* —
/// they left the region the certificate speaks about and are counted
/// separately rather than silently dropped.
pub struct RegionCertificate {
    pub checked: usize,
    pub absorbed: usize,
    pub min_nonlinearity: f64,
    pub max_schwarzian: f64,
}

pub fn certify_region(
    skew: &SkewProduct,
    word: &[u8],
    window: (f64, f64),
    stay_within: (f64, f64),
    samples: usize,
) -> Result<RegionCertificate, SkewError> {
    if word.is_empty() {
        return Err(Map1DError::EmptyWord.into());
    }
    skew.base.admissible(word)?;
    if samples < 2 || !(window.0 < window.1) {
        return Err(SkewError::Precondition(
            "need at least two samples over a nonempty window".into(),
        ));
    }
    let mut cert = RegionCertificate {
        checked: 0,
        absorbed: 0,
        min_nonlinearity: f64::INFINITY,
        max_schwarzian: f64::NEG_INFINITY,
    };
    for k in 0..samples {
        let x = window.0 + (window.1 - window.0) * k as f64 / (samples - 1) as f64;
        let mut jet = [x, 1.0, 0.0, 0.0];
        let mut inside = true;
        for &s in word {
            let g = skew.fiber(s).jet3(jet[0]);
            jet = chain3(&g, &jet);
            if !(stay_within.0 <= jet[0] && jet[0] <= stay_within.1) {
                inside = false;
                break;
            }
        }
        if !inside {
            cert.absorbed += 1;
            continue;
        }
        let a = jet[2] / jet[1];
        let s = jet[3] / jet[1] - 1.5 * a * a;
        cert.min_nonlinearity = cert.min_nonlinearity.min(a);
        cert.max_schwarzian = cert.max_schwarzian.max(s);
        cert.checked += 1;
    }
    Ok(cert)
}

/// Third-order chain rule: jet of `g ∘ f` from the jet of `g` at `f(x)` and
/// the jet of `f` at `x`.
fn chain3(g: &[f64; 4], f: &[f64; 4]) -> [f64; 4] {
    [
        g[0],
        g[1] * f[1],
        g[2] * f[1] * f[1] + g[1] * f[2],
        g[3] * f[1] * f[1] * f[1] + 3.0 * g[2] * f[1] * f[2] + g[1] * f[3],
    ]
}

// ---------------------------------------------------------------------------
// growth series
// ---------------------------------------------------------------------------

/// Exact per-period census of the skew product's periodic points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthRow {
    pub period: usize,
    /// admissible period-n itineraries (base points, not rotation classes)
    pub words: u64,
    /// rotation classes actually evaluated
    pub classes: u64,
    pub fixed_points: u64,
    pub hyperbolic: u64,
    pub non_hyperbolic: u64,
    /// largest single-word count seen this period
    pub max_per_fiber: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthSeries {
    pub rows: Vec<GrowthRow>,
    /// first period *not* computed when the work budget ran out
    pub truncated_at: Option<usize>,
}

/// Cap on the number of return-map scans a growth run may spend.
#[derive(Debug, Clone, Copy)]
pub struct GrowthBudget {
    pub max_scans: u64,
}

impl Default for GrowthBudget {
    fn default() -> Self {
        GrowthBudget { max_scans: 200_000 }
    }
}

/// Count fixed points of every return map up to period `n_max`, optionally
/// restricted to `region` of the fiber circle.
///
/// Representatives of each rotation class are evaluated once (in parallel —
/// the per-word work is independent) and weighted by orbit size; since the
/// word list is deterministically ordered and all aggregation is integer,
/// the result is identical for any thread count. A word made of one
/// repeated symbol whose fiber is a [`FactoryMap`] is counted symbolically
/// on the full circle: a monotone circle map with fixed points has rotation
/// number zero, so its n-th power has exactly the fixed points of the map
/// itself, at every period — and the factory knows that set by construction
/// even when its multipliers sit far below floating-point resolution.
pub fn growth_series(
    skew: &SkewProduct,
    n_max: usize,
    region: Option<(f64, f64)>,
    budget: &GrowthBudget,
) -> Result<GrowthSeries, SkewError> {
    if n_max == 0 {
        return Err(SkewError::Precondition("n_max must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut truncated_at = None;
    let mut spent = 0u64;
    for n in 1..=n_max {
        let reps = skew.base.periodic_words(n);
        if spent + reps.len() as u64 > budget.max_scans {
            truncated_at = Some(n);
            break;
        }
        spent += reps.len() as u64;
        let per_word: Result<Vec<(u64, u64, u64)>, SkewError> = reps
            .par_iter()
            .map(|rep| word_fixed_point_counts(skew, &rep.word, region))
            .collect();
        let per_word = per_word?;
        let mut row = GrowthRow {
            period: n,
            words: 0,
            classes: reps.len() as u64,
            fixed_points: 0,
            hyperbolic: 0,
            non_hyperbolic: 0,
            max_per_fiber: 0,
        };
        for (rep, &(count, hyp, nonhyp)) in reps.iter().zip(&per_word) {
            let orbit = rep.orbit_size() as u64;
            row.words += orbit;
            row.fixed_points += orbit * count;
            row.hyperbolic += orbit * hyp;
            row.non_hyperbolic += orbit * nonhyp;
            row.max_per_fiber = row.max_per_fiber.max(count);
        }
        rows.push(row);
    }
    Ok(GrowthSeries { rows, truncated_at })
}

fn word_fixed_point_counts(
    skew: &SkewProduct,
    word: &[u8],
    region: Option<(f64, f64)>,
) -> Result<(u64, u64, u64), SkewError> {
    if region.is_none() {
        if let Some(&first) = word.first() {
            if word.iter().all(|&s| s == first) {
                if let Some(factory) = skew.factory(first) {
                    // Fix(gⁿ) = Fix(g) for a monotone circle map with fixed
                    // points, and every designed point is hyperbolic with an
                    // exactly nonzero rational margin.
                    let count = factory
                        .designed_fixed_point_count()
                        .ok_or(Map1DError::Degenerate)?;
                    return Ok((count, count, 0));
                }
            }
        }
    }
    let ret = fiber_return(skew, word)?;
    let scan = find_fixed_points(&ret, region, 1e-8)?;
    if let Some(w) = scan.warnings.first() {
        return Err(SkewError::Unresolved { lo: w.lo, hi: w.hi });
    }
    let hyp = scan.points.iter().filter(|p| p.hyperbolic).count() as u64;
    let total = scan.points.len() as u64;
    Ok((total, hyp, total - hyp))
}

/// Verdict of [`classify_growth`]: either the totals stay within a constant
/// multiple of `rateⁿ`, or some period breaks far out of that envelope.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthClass {
    BoundedExponential { constant: f64, rate: f64 },
    Exceeds { witness_period: usize },
}

/// Fit the series against `C · rateⁿ` and report the first period that
/// escapes. The constant is fitted robustly as the median of the ratios
/// `total_n / rateⁿ`; a period counts as escaping when its ratio exceeds ten
/// times that fit — an injected super-exponential leaf overshoots any such
/// window, while an honest bounded family never strays an order of
/// magnitude from its own median.
pub fn classify_growth(series: &GrowthSeries, rate: f64) -> Result<GrowthClass, SkewError> {
    if series.rows.is_empty() {
        return Err(SkewError::EmptySeries);
    }
    if !(rate > 0.0) {
        return Err(SkewError::Precondition("rate must be positive".into()));
    }
    let ratios: Vec<f64> = series
        .rows
        .iter()
        .map(|r| r.fixed_points as f64 / rate.powi(r.period as i32))
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let threshold = 10.0 * median;
    for (row, &ratio) in series.rows.iter().zip(&ratios) {
        if ratio > threshold {
            return Ok(GrowthClass::Exceeds {
                witness_period: row.period,
            });
        }
    }
    let constant = sorted.last().copied().unwrap_or(0.0);
    Ok(GrowthClass::BoundedExponential { constant, rate })
}

// ---------------------------------------------------------------------------
// factory perturbation
// ---------------------------------------------------------------------------

/// A circle map with `a + 1` designed fixed points at `t = jδ/a` on the
/// chart `[0, δ]`, displacement exactly `ε · ∏ⱼ (t − jδ/a)` there, and a
/// single cubic return bridge on the rest of the circle.
///
/// The multiplier margins at the designed points have the closed rational
/// form `±ε (δ/a)ᵃ j!(a−j)!` — kept exact because already for moderate `a`
/// they drop below the resolution of `1.0 + x` in floating point. Parity is
/// part of the design: right of the chart the displacement leaves positive;
/// approaching the chart from the left it arrives with the sign `(−1)ᵃ`, so
/// for even `a` the bridge is forced through one extra transversal zero and
/// the circle carries `a + 2` fixed points, while for odd `a` it carries
/// exactly `a + 1`.
pub struct FactoryMap {
    a: usize,
    eps: Q,
    delta: Q,
    epsf: f64,
    deltaf: f64,
    length: f64,
    roots: Vec<f64>,
    /// displacement coefficients in `s = t − δ`, valid on `[δ, L]`
    bridge: Vec<f64>,
    degenerate: bool,
}

/// Plant `a + 1` evenly spaced hyperbolic fixed points inside the chart of
/// an `r`-flat germ.
///
/// The germ certifies the budget: replacing an `O(t^{r+1})` displacement on
/// a chart of size `δ` by the designed product is a perturbation below the
/// `C^r` scale the flat point left free, so the construction demands
/// `flat_order(flat) ≥ r`. With `ε = 0` the perturbation vanishes and the
/// result is flagged degenerate: the map is the unchanged flat fiber, whose
/// fixed points are not isolated and not counted.
pub fn flat_fiber_perturb(
    flat: &Jet,
    r: usize,
    a: usize,
    eps: Q,
    delta: Q,
    length: f64,
) -> Result<FactoryMap, SkewError> {
    if flat.flat_order() < r {
        return Err(SkewError::NotFlatEnough {
            need: r,
            has: flat.flat_order(),
        });
    }
    if a == 0 {
        return Err(SkewError::Precondition(
            "the factory needs at least one interval, a ≥ 1".into(),
        ));
    }
    if eps.is_negative() {
        return Err(SkewError::Precondition("ε must be non-negative".into()));
    }
    let deltaf = delta.to_f64().unwrap_or(f64::NAN);
    let epsf = eps.to_f64().unwrap_or(f64::NAN);
    if !(delta.is_positive() && deltaf.is_finite() && length.is_finite() && deltaf < length) {
        return Err(SkewError::Precondition(
            "need 0 < δ < circle length".into(),
        ));
    }

    let roots: Vec<f64> = (0..=a)
        .map(|j| j as f64 * deltaf / a as f64)
        .collect();
    let degenerate = eps.is_zero();

    // Endpoint slopes of the chart displacement: d′(δ) = ε (δ/a)ᵃ a! > 0 and
    // d′(0) = (−1)ᵃ ε (δ/a)ᵃ a!. The bridge is the cubic through value 0 and
    // these slopes at both seams; its closed form has exactly one interior
    // zero (at the bridge midpoint) when the seam slopes share a sign — even
    // `a` — and none otherwise.
    let mut slope = epsf;
    for k in 1..=a {
        slope *= k as f64 * deltaf / a as f64;
    }
    let d_at_delta = slope;
    let d_at_zero = if a % 2 == 0 { slope } else { -slope };
    let w = length - deltaf;
    let bridge = vec![
        0.0,
        d_at_delta,
        -(d_at_zero + 2.0 * d_at_delta) / w,
        (d_at_zero + d_at_delta) / (w * w),
    ];

    let map = FactoryMap {
        a,
        eps,
        delta,
        epsf,
        deltaf,
        length,
        roots,
        bridge,
        degenerate,
    };

    // A diffeomorphism check over both the chart and the bridge; the bumps
    // scale with ε, so a careless ε drives 1 + d′ through zero.
    for k in 0..=4096 {
        let t = deltaf * k as f64 / 4096.0;
        let d1 = map.chart_jet(t)[1];
        if 1.0 + d1 <= 0.0 {
            return Err(SkewError::NotDiffeo {
                at: t,
                value: 1.0 + d1,
            });
        }
    }
    let db = [map.bridge[1], 2.0 * map.bridge[2], 3.0 * map.bridge[3]];
    for k in 0..=1024 {
        let s = w * k as f64 / 1024.0;
        let d1 = poly_eval(&db, s);
        if 1.0 + d1 <= 0.0 {
            return Err(SkewError::NotDiffeo {
                at: deltaf + s,
                value: 1.0 + d1,
            });
        }
    }
    Ok(map)
}

impl FactoryMap {
    pub fn interval_count(&self) -> usize {
        self.a
    }

    /// `true` when ε = 0: the flat fiber was returned unchanged and carries
    /// no isolated fixed-point set to count.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// The designed fixed points `jδ/a`, in order.
    pub fn designed_roots(&self) -> &[f64] {
        &self.roots
    }

    /// The chart `[0, δ]` the perturbation lives on.
    pub fn chart(&self) -> (f64, f64) {
        (0.0, self.deltaf)
    }

    /// Where the parity zero of the bridge sits (even `a` only).
    pub fn bridge_crossing(&self) -> Option<f64> {
        (!self.degenerate && self.a % 2 == 0).then(|| 0.5 * (self.deltaf + self.length))
    }

    /// Total fixed points on the circle: the `a + 1` designed ones plus the
    /// bridge's parity zero when `a` is even. `None` when degenerate.
    pub fn designed_fixed_point_count(&self) -> Option<u64> {
        (!self.degenerate).then(|| self.a as u64 + 1 + u64::from(self.a % 2 == 0))
    }

    /// Exact multiplier margin `f′(jδ/a) − 1 = ε ∏_{i≠j} (jδ/a − iδ/a)`,
    /// computed as the closed form `(−1)^{a−j} ε (δ/a)ᵃ j!(a−j)!`.
    pub fn multiplier_margin(&self, j: usize) -> Q {
        assert!(j <= self.a, "designed roots are indexed 0..=a");
        let step = &self.delta / BigRational::from_integer(BigInt::from(self.a as i64));
        let mut margin = &self.eps * num::pow(step, self.a);
        margin *= BigRational::from_integer(factorial(j) * factorial(self.a - j));
        if (self.a - j) % 2 == 1 {
            margin = -margin;
        }
        margin
    }

    /// The uniform lower bound `ε δᵃ / (2aᵃ)` every margin beats, since
    /// `j!(a−j)! ≥ 1`.
    pub fn margin_lower_bound(&self) -> Q {
        let step = &self.delta / BigRational::from_integer(BigInt::from(self.a as i64));
        &self.eps * num::pow(step, self.a) / BigRational::from_integer(BigInt::from(2))
    }

    /// Displacement jet `[d, d′, d″, d‴]` on the chart via the factored
    /// product — sums of reciprocals off the roots, an explicit exclusion
    /// product near them — so accuracy at the designed points does not decay
    /// with `a` the way an expanded polynomial's would.
    fn chart_jet(&self, t: f64) -> [f64; 4] {
        let spacing = self.deltaf / self.a as f64;
        let mut nearest = 0usize;
        let mut best = f64::INFINITY;
        for (j, &r) in self.roots.iter().enumerate() {
            let d = (t - r).abs();
            if d < best {
                best = d;
                nearest = j;
            }
        }
        if best <= spacing * 1e-6 {
            // exclusion product around the nearest root
            let (mut q0, mut s1, mut s2, mut s3) = (1.0f64, 0.0f64, 0.0f64, 0.0f64);
            for (i, &r) in self.roots.iter().enumerate() {
                if i == nearest {
                    continue;
                }
                let u = t - r;
                q0 *= u;
                let inv = 1.0 / u;
                s1 += inv;
                s2 += inv * inv;
                s3 += inv * inv * inv;
            }
            let q1 = q0 * s1;
            let q2 = q0 * (s1 * s1 - s2);
            let q3 = q0 * (s1 * s1 * s1 - 3.0 * s1 * s2 + 2.0 * s3);
            let u = t - self.roots[nearest];
            [
                self.epsf * u * q0,
                self.epsf * (q0 + u * q1),
                self.epsf * (2.0 * q1 + u * q2),
                self.epsf * (3.0 * q2 + u * q3),
            ]
        } else {
            let (mut p, mut s1, mut s2, mut s3) = (1.0f64, 0.0f64, 0.0f64, 0.0f64);
            for &r in &self.roots {
                let u = t - r;
                p *= u;
                let inv = 1.0 / u;
                s1 += inv;
                s2 += inv * inv;
                s3 += inv * inv * inv;
            }
            [
                self.epsf * p,
                self.epsf * p * s1,
                self.epsf * p * (s1 * s1 - s2),
                self.epsf * p * (s1 * s1 * s1 - 3.0 * s1 * s2 + 2.0 * s3),
            ]
        }
    }

    fn disp_jet(&self, x: f64) -> [f64; 4] {
        let t = x.rem_euclid(self.length);
        if t <= self.deltaf {
            self.chart_jet(t)
        } else {
            let s = t - self.deltaf;
            let b = &self.bridge;
            [
                poly_eval(b, s),
                poly_eval(&[b[1], 2.0 * b[2], 3.0 * b[3]], s),
                poly_eval(&[2.0 * b[2], 6.0 * b[3]], s),
                6.0 * b[3],
            ]
        }
    }
}

impl SmoothMap1D for FactoryMap {
    fn domain(&self) -> Domain {
        Domain::Circle {
            length: self.length,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        x + self.disp_jet(x)[0]
    }

    fn jet3(&self, x: f64) -> [f64; 4] {
        let d = self.disp_jet(x);
        [x + d[0], 1.0 + d[1], d[2], d[3]]
    }

    fn displacement(&self, x: f64) -> f64 {
        self.disp_jet(x)[0]
    }
}

fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k as i64);
    }
    acc
}

// ---------------------------------------------------------------------------
// blender: covering check and word search
// ---------------------------------------------------------------------------

/// A pair of interval contractions with overlapping images — the
/// one-dimensional shadow of a blender: two fiber branches whose images
/// jointly cover the core with interior overlap, so that iterated
/// preimages can steer into arbitrarily small targets.
pub struct BlenderSpec {
    plus: Box<dyn SmoothMap1D>,
    minus: Box<dyn SmoothMap1D>,
    core: (f64, f64),
    region: (f64, f64),
}

impl BlenderSpec {
    pub fn new(
        plus: Box<dyn SmoothMap1D>,
        minus: Box<dyn SmoothMap1D>,
        core: (f64, f64),
        region: (f64, f64),
    ) -> Result<Self, SkewError> {
        let dom = plus.domain();
        if dom != minus.domain() {
            return Err(SkewError::Precondition(
                "both branches must live on one interval".into(),
            ));
        }
        let ok = matches!(dom, Domain::Interval { .. })
            && region.0 < region.1
            && core.0 <= core.1
            && region.0 <= core.0
            && core.1 <= region.1;
        if !ok {
            return Err(SkewError::Precondition(
                "need interval branches with core ⊂ region".into(),
            ));
        }
        Ok(BlenderSpec {
            plus,
            minus,
            core,
            region,
        })
    }

    pub fn plus(&self) -> &dyn SmoothMap1D {
        self.plus.as_ref()
    }

    pub fn minus(&self) -> &dyn SmoothMap1D {
        self.minus.as_ref()
    }

    pub fn core(&self) -> (f64, f64) {
        self.core
    }

    pub fn region(&self) -> (f64, f64) {
        self.region
    }

    fn branch(&self, symbol: u8) -> &dyn SmoothMap1D {
        if symbol == 0 {
            self.plus()
        } else {
            self.minus()
        }
    }
}

/// What [`blender_covering_check`] established, endpoint data included.
#[derive(Debug, Clone, Copy)]
pub struct CoveringReport {
    /// the open images of the core jointly cover the closed core
    pub covered: bool,
    /// images and preimages of the middle-thirds core stay strictly inside
    /// the open core
    pub auxiliary_ok: bool,
    pub plus_image: (f64, f64),
    pub minus_image: (f64, f64),
}

impl CoveringReport {
    pub fn passes(&self) -> bool {
        self.covered && self.auxiliary_ok
    }
}

/// Verify the covering property of a blender pair with directed rounding:
/// image intervals are shrunk inward before the covering comparison and
/// widened outward before the inclusion comparisons, so a `true` is a
/// certificate, not an artifact of rounding. Both branches must be
/// monotone on the core — checked by sampling, refused otherwise.
pub fn blender_covering_check(spec: &BlenderSpec) -> Result<CoveringReport, SkewError> {
    for map in [spec.plus(), spec.minus()] {
        for k in 0..=512 {
            let x = spec.core.0 + (spec.core.1 - spec.core.0) * k as f64 / 512.0;
            let d = map.jet3(x)[1];
            if d <= 0.0 {
                return Err(SkewError::NotMonotone { at: x, value: d });
            }
        }
    }
    let (a, b) = spec.core;
    let plus_image = (spec.plus().eval(a), spec.plus().eval(b));
    let minus_image = (spec.minus().eval(a), spec.minus().eval(b));

    let covered = if a == b {
        // degenerate core: a single point is covered exactly when both
        // branches fix it (to rounding)
        (plus_image.0 - a).abs() <= ulps(a, 4.0) && (minus_image.0 - a).abs() <= ulps(a, 4.0)
    } else {
        // inner enclosures of the open images
        let inner = |im: (f64, f64)| (nudge_up(nudge_up(im.0)), nudge_down(nudge_down(im.1)));
        let (i1, i2) = {
            let (p, m) = (inner(plus_image), inner(minus_image));
            if p.0 <= m.0 {
                (p, m)
            } else {
                (m, p)
            }
        };
        (i1.0 < a && i1.1 > b) || (i1.0 < a && i2.1 > b && i1.1 > i2.0)
    };

    // middle-thirds inclusions, both forward and backward
    let span = b - a;
    let inner_interval = (a + span / 6.0 * 2.0, b - span / 6.0 * 2.0);
    let mut auxiliary_ok = true;
    for map in [spec.plus(), spec.minus()] {
        let fwd = (map.eval(inner_interval.0), map.eval(inner_interval.1));
        auxiliary_ok &= nudge_down(fwd.0) > a && nudge_up(fwd.1) < b;
        let back = (
            monotone_preimage(map, inner_interval.0, spec.region),
            monotone_preimage(map, inner_interval.1, spec.region),
        );
        if let (Some(lo), Some(hi)) = back {
            auxiliary_ok &= nudge_down(lo) > a && nudge_up(hi) < b;
        } else {
            auxiliary_ok = false;
        }
    }

    Ok(CoveringReport {
        covered,
        auxiliary_ok,
        plus_image,
        minus_image,
    })
}

/// Search for a word of branches steering `y0` into `target`.
///
/// The search pulls the target back through the branch inverses, greedily
/// keeping the wider preimage (with a proximity tie-break when the widths
/// are within ten percent), clipped to the invariant hull spanned by the
/// two branch fixed points. Every answer is certified forward before being
/// returned: the orbit must stay inside the declared region and land in the
/// target. An exhausted depth cap is a `None`, not an error — the word may
/// simply need more depth.
pub fn tangle_search(
    spec: &BlenderSpec,
    y0: f64,
    target: (f64, f64),
    depth_cap: usize,
) -> Result<Option<Vec<u8>>, SkewError> {
    if !(target.0 < target.1) {
        return Err(SkewError::Precondition("empty target interval".into()));
    }
    let report = blender_covering_check(spec)?;
    if !report.passes() {
        return Err(SkewError::Precondition(
            "the pair does not cover its core".into(),
        ));
    }

    // invariant hull: between the two branch fixed points
    let mut fps = Vec::new();
    for map in [spec.plus(), spec.minus()] {
        let scan = find_fixed_points(map, None, 1e-8)?;
        if scan.points.len() != 1 {
            return Err(SkewError::Precondition(
                "each branch must have a single fixed point".into(),
            ));
        }
        fps.push(scan.points[0].x);
    }
    let hull = (fps[0].min(fps[1]), fps[0].max(fps[1]));

    let mut cur = (target.0.max(hull.0), target.1.min(hull.1));
    if !(cur.0 < cur.1) {
        return Ok(None);
    }
    let mut reversed: Vec<u8> = Vec::new();
    loop {
        if cur.0 <= y0 && y0 <= cur.1 {
            let word: Vec<u8> = reversed.iter().rev().copied().collect();
            return Ok(certify_forward(spec, y0, target, &word).then_some(word));
        }
        if reversed.len() == depth_cap {
            return Ok(None);
        }
        let mut candidates: Vec<(u8, (f64, f64))> = Vec::new();
        for symbol in [0u8, 1u8] {
            let map = spec.branch(symbol);
            let lo = monotone_preimage_clamped(map, cur.0, spec.region);
            let hi = monotone_preimage_clamped(map, cur.1, spec.region);
            let pulled = (lo.max(hull.0), hi.min(hull.1));
            if pulled.0 < pulled.1 {
                candidates.push((symbol, pulled));
            }
        }
        if candidates.is_empty() {
            return Ok(None);
        }
        // widest preimage first…
        candidates.sort_by(|x, y| (y.1 .1 - y.1 .0).total_cmp(&(x.1 .1 - x.1 .0)));
        let (mut sym, mut pick) = candidates[0];
        if let Some(&(s2, c2)) = candidates.get(1) {
            // …unless the runner-up is nearly as wide and centered nearer y0
            let nearly_as_wide = (c2.1 - c2.0) >= 0.9 * (pick.1 - pick.0);
            let closer = (0.5 * (c2.0 + c2.1) - y0).abs() < (0.5 * (pick.0 + pick.1) - y0).abs();
            if nearly_as_wide && closer {
                sym = s2;
                pick = c2;
            }
        }
        reversed.push(sym);
        cur = pick;
    }
}

fn certify_forward(spec: &BlenderSpec, y0: f64, target: (f64, f64), word: &[u8]) -> bool {
    let mut x = y0;
    for &s in word {
        if !(spec.region.0 < x && x < spec.region.1) {
            return false;
        }
        x = spec.branch(s).eval(x);
    }
    target.0 - 1e-9 <= x && x <= target.1 + 1e-9
}

/// Preimage of `y` under an increasing map, by bisection over `bracket`.
fn monotone_preimage(map: &dyn SmoothMap1D, y: f64, bracket: (f64, f64)) -> Option<f64> {
    let (mut lo, mut hi) = bracket;
    if map.eval(lo) > y || map.eval(hi) < y {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if map.eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn monotone_preimage_clamped(map: &dyn SmoothMap1D, y: f64, bracket: (f64, f64)) -> f64 {
    if map.eval(bracket.0) > y {
        return bracket.0;
    }
    if map.eval(bracket.1) < y {
        return bracket.1;
    }
    monotone_preimage(map, y, bracket).unwrap_or(bracket.0)
}

fn nudge_up(x: f64) -> f64 {
    // next representable toward +∞ (hand-rolled: stable next_up needs a
    // newer compiler than this crate promises)
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn nudge_down(x: f64) -> f64 {
    -nudge_up(-x)
}

fn ulps(x: f64, k: f64) -> f64 {
    k * (nudge_up(x.abs().max(1e-300)) - x.abs().max(1e-300))
}

// ---------------------------------------------------------------------------
// multiplier balancing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceResult {
    pub m1: usize,
    pub m2: usize,
    /// the achieved `m1 ln λ1 + m2 ln λ2 + ln μ`
    pub defect: f64,
}

/// Smallest exponent pair making a product of multipliers nearly neutral:
/// the least `m1 + m2` with `|m1 ln λ1 + m2 ln λ2 + ln μ| < tol`.
///
/// Continued-fraction convergents of `ln λ1 / |ln λ2|` point at the best
/// rational trade-offs and give an early candidate; an ascending brute-force
/// sweep over the exponent sum then proves minimality (the convergents know
/// nothing about μ). No hit with `m1 + m2 ≤ cap` is an error, not a silent
/// best-effort answer.
pub fn balance_multipliers(
    lambda1: f64,
    lambda2: f64,
    mu: f64,
    tol: f64,
    cap: usize,
) -> Result<BalanceResult, SkewError> {
    if !(lambda1 > 1.0 && lambda2 > 0.0 && lambda2 < 1.0 && mu > 0.0 && tol > 0.0 && cap >= 2) {
        return Err(SkewError::Precondition(
            "need λ1 > 1, λ2 ∈ (0,1), μ > 0, tol > 0, cap ≥ 2".into(),
        ));
    }
    let l1 = lambda1.ln();
    let l2 = lambda2.ln();
    let lm = mu.ln();
    let defect = |m1: usize, m2: usize| m1 as f64 * l1 + m2 as f64 * l2 + lm;

    let mut sweep_to = cap;
    for (p, q) in convergents(l1 / -l2, 24) {
        let (m1, m2) = (q as usize, p as usize);
        if m1 >= 1 && m2 >= 1 && m1 + m2 <= cap && defect(m1, m2).abs() < tol {
            sweep_to = sweep_to.min(m1 + m2);
        }
    }
    for s in 2..=sweep_to {
        let mut best: Option<(usize, usize, f64)> = None;
        for m1 in 1..s {
            let d = defect(m1, s - m1);
            if d.abs() < tol && best.map_or(true, |(_, _, bd)| d.abs() < bd.abs()) {
                best = Some((m1, s - m1, d));
            }
        }
        if let Some((m1, m2, defect)) = best {
            return Ok(BalanceResult { m1, m2, defect });
        }
    }
    Err(SkewError::SearchExhausted { cap })
}

/// Continued-fraction convergents `p/q` of a positive real, best first to
/// worst; `(p, q)` pairs in lowest terms.
pub fn convergents(x: f64, count: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if !(x.is_finite() && x >= 0.0) {
        return out;
    }
    let (mut p0, mut q0) = (1u64, 0u64);
    let (mut p1, mut q1) = (x.floor() as u64, 1u64);
    out.push((p1, q1));
    let mut frac = x - x.floor();
    for _ in 1..count {
        if frac.abs() < 1e-12 {
            break;
        }
        let a = 1.0 / frac;
        let ai = a.floor();
        frac = a - ai;
        let ai = ai as u64;
        let (p2, q2) = (
            match ai.checked_mul(p1).and_then(|v| v.checked_add(p0)) {
                Some(v) => v,
                None => break,
            },
            match ai.checked_mul(q1).and_then(|v| v.checked_add(q0)) {
                Some(v) => v,
                None => break,
            },
        );
        out.push((p2, q2));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

// ---------------------------------------------------------------------------
// cone invariance
// ---------------------------------------------------------------------------

/// A three-direction linear model at each fiber point: base expansion and
/// contraction rates, a uniform shear bound coupling the blocks, and the
/// fiber map supplying the center derivative. The differential at a sample
/// `y` is taken to be
///
/// ```text
///         ⎡ μᵤ  c   0    ⎤
/// D(y) =  ⎢ c   μₛ  c    ⎥     (unstable, stable, center)
///         ⎣ 0   c   f′(y)⎦
/// ```
pub struct ConeModel {
    pub base_expansion: f64,
    pub base_contraction: f64,
    pub shear: f64,
    pub fiber: Box<dyn SmoothMap1D>,
}

#[derive(Debug, Clone, Copy)]
pub struct ConeWitness {
    pub y: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ConeReport {
    pub invariant: bool,
    pub min_margin: f64,
    pub witness: Option<ConeWitness>,
}

/// Push the boundary of the center-unstable cone of opening `alpha` through
/// the model differential at `grid` fiber samples and check strict
/// inclusion: the image's stable component must stay below `alpha` times
/// its center-unstable norm, with the worst slack reported as the margin.
pub fn cone_invariance_check(
    model: &ConeModel,
    alpha: f64,
    grid: usize,
) -> Result<ConeReport, SkewError> {
    if !(model.base_expansion > 1.0
        && model.base_contraction > 0.0
        && model.base_contraction < 1.0
        && model.shear >= 0.0
        && alpha > 0.0
        && grid >= 1)
    {
        return Err(SkewError::Precondition(
            "need μᵤ > 1, μₛ ∈ (0,1), shear ≥ 0, α > 0, grid ≥ 1".into(),
        ));
    }
    let (lo, hi) = match model.fiber.domain() {
        Domain::Circle { length } => (0.0, length),
        Domain::Interval { lo, hi } => (lo, hi),
    };
    let (mu, ms, c) = (model.base_expansion, model.base_contraction, model.shear);
    let mut min_margin = f64::INFINITY;
    let mut witness = None;
    for k in 0..=grid {
        let y = lo + (hi - lo) * k as f64 / grid as f64;
        let fp = model.fiber.jet3(y)[1];
        for dir in 0..64 {
            let theta = std::f64::consts::PI * dir as f64 / 32.0;
            let (vu, vc) = (theta.cos(), theta.sin());
            for vs in [alpha, -alpha] {
                let wu = mu * vu + c * vs;
                let ws = c * vu + ms * vs + c * vc;
                let wc = c * vs + fp * vc;
                let margin = alpha - ws.abs() / wu.hypot(wc);
                if margin < min_margin {
                    min_margin = margin;
                    if margin <= 0.0 {
                        witness = Some(ConeWitness { y, margin });
                    }
                }
            }
        }
    }
    Ok(ConeReport {
        invariant: min_margin > 0.0,
        min_margin,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{q, qi};
    use crate::map1d::{jet_consistency_error, ExprMap1D, PieceSpec, PiecewisePoly};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Circle map on ℝ/1ℤ with hyperbolic fixed points where the tent
    /// displacement crosses zero.
    fn tent_map(zeros: (f64, f64)) -> PiecewisePoly {
        // displacement: down through zeros.0 on the first half, up through
        // zeros.1 on the second, seam-periodic by symmetry
        let (z1, z2) = zeros;
        assert!(0.0 < z1 && z1 < 0.5 && 0.5 < z2 && z2 < 1.0 && (z2 - 0.5 - z1).abs() < 0.4);
        let slope = 0.2;
        let p1 = PieceSpec::from_displacement(0.0, 0.5, vec![slope * z1, -slope]);
        let d_half = slope * z1 - slope * 0.5;
        let p2 = PieceSpec::from_displacement(0.5, 1.0, vec![d_half - slope * 0.5, slope]);
        let map = PiecewisePoly::circle(1.0, vec![p1, p2]).expect("valid tent");
        let scan = find_fixed_points(&map, None, 1e-8).expect("tent scan");
        assert_eq!(scan.points.len(), 2);
        map
    }

    #[test]
    fn base_counts_follow_the_three_counting_conventions() {
        let full = SymbolicBase::full_shift(3).unwrap();
        assert_eq!(full.periodic_point_count(2), BigUint::from(9u32));
        assert_eq!(full.periodic_point_count(10), BigUint::from(59049u32));

        let diag = SymbolicBase::subshift(vec![
            vec![true, false, false, false],
            vec![false, true, false, false],
            vec![false, false, true, false],
            vec![false, false, false, true],
        ])
        .unwrap();
        for n in 1..=7 {
            assert_eq!(diag.periodic_point_count(n), BigUint::from(4u32));
        }

        let toral = SymbolicBase::full_shift(2)
            .unwrap()
            .with_toral_model([[2, 1], [1, 1]])
            .unwrap();
        assert_eq!(toral.periodic_point_count(1), BigUint::from(1u32));
        assert_eq!(toral.periodic_point_count(2), BigUint::from(5u32));
        assert_eq!(toral.periodic_point_count(3), BigUint::from(16u32));
        assert_eq!(toral.periodic_point_count(4), BigUint::from(45u32));

        assert!(matches!(
            SymbolicBase::full_shift(2)
                .unwrap()
                .with_toral_model([[1, 1], [0, 1]]),
            Err(SkewError::NotHyperbolicToral { .. })
        ));
        assert!(matches!(
            SymbolicBase::full_shift(0),
            Err(SkewError::EmptyBase)
        ));
    }

    #[test]
    fn rotation_class_representatives_partition_the_periodic_points() {
        let full2 = SymbolicBase::full_shift(2).unwrap();
        let words: Vec<Vec<u8>> = full2.periodic_words(2).iter().map(|w| w.word.clone()).collect();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(
            full2
                .periodic_words(2)
                .iter()
                .map(|w| w.orbit_size())
                .collect::<Vec<_>>(),
            vec![1, 2, 1]
        );

        // no symbol may repeat → no odd-period words at all
        let hop = SymbolicBase::subshift(vec![vec![false, true], vec![true, false]]).unwrap();
        assert!(hop.periodic_words(3).is_empty());
        assert_eq!(hop.periodic_point_count(3), BigUint::zero());
        assert_eq!(hop.periodic_words(2).len(), 1);

        let full3 = SymbolicBase::full_shift(3).unwrap();
        for n in 1..=8 {
            let total: u64 = full3
                .periodic_words(n)
                .iter()
                .map(|w| w.orbit_size() as u64)
                .sum();
            assert_eq!(BigUint::from(total), full3.periodic_point_count(n));
            for w in full3.periodic_words(n) {
                assert_eq!(n % w.primitive_period, 0);
            }
        }
    }

    #[test]
    fn fiber_returns_compose_in_application_order() {
        let base = SymbolicBase::full_shift(2).unwrap();
        let skew = SkewProduct::new(
            base,
            vec![
                Fiber::map(tent_map((0.25, 0.75))),
                Fiber::map(tent_map((0.3, 0.7))),
            ],
        )
        .unwrap();

        let word = [0u8, 1, 1, 0];
        let ret = fiber_return(&skew, &word).unwrap();
        for k in 0..17 {
            let x = k as f64 / 17.0;
            let by_hand = word
                .iter()
                .fold(x, |acc, &s| skew.fiber(s).eval(acc));
            assert!((ret.eval(x) - by_hand).abs() < 1e-14);
        }

        // concatenation law
        let (w1, w2) = ([0u8, 1], [1u8, 0]);
        let r1 = fiber_return(&skew, &w1).unwrap();
        let r2 = fiber_return(&skew, &w2).unwrap();
        let glued = ComposedMap1D::new(vec![&r1 as &dyn SmoothMap1D, &r2]).unwrap();
        let whole = fiber_return(&skew, &[0, 1, 1, 0]).unwrap();
        for k in 0..11 {
            let x = 0.05 + 0.09 * k as f64;
            assert!((glued.eval(x) - whole.eval(x)).abs() < 1e-14);
        }

        // transported jets agree with finite differences — checked on smooth
        // fibers, where centered differences are trustworthy everywhere
        let tau = std::f64::consts::TAU;
        let smooth = SkewProduct::new(
            SymbolicBase::full_shift(2).unwrap(),
            vec![
                Fiber::map(
                    ExprMap1D::new("x + sin(x)/20", Domain::Circle { length: tau }).unwrap(),
                ),
                Fiber::map(
                    ExprMap1D::new("x + sin(x)/15", Domain::Circle { length: tau }).unwrap(),
                ),
            ],
        )
        .unwrap();
        let smooth_ret = fiber_return(&smooth, &[0, 1, 1, 0]).unwrap();
        let xs: Vec<f64> = (0..40).map(|k| 0.01 + tau * k as f64 / 41.0).collect();
        // h must be coarse enough that the third-difference numerator beats
        // the rounding noise of O(1) evaluations
        assert!(jet_consistency_error(&smooth_ret, &xs, 2e-3) < 1e-6);

        assert!(matches!(
            fiber_return(&skew, &[]),
            Err(SkewError::Map(Map1DError::EmptyWord))
        ));
        assert!(matches!(
            fiber_return(&skew, &[0, 7]),
            Err(SkewError::UnknownSymbol { symbol: 7, .. })
        ));
        let hop = SymbolicBase::subshift(vec![vec![false, true], vec![true, false]]).unwrap();
        let hop_skew = SkewProduct::new(
            hop,
            vec![
                Fiber::map(tent_map((0.25, 0.75))),
                Fiber::map(tent_map((0.3, 0.7))),
            ],
        )
        .unwrap();
        assert!(matches!(
            fiber_return(&hop_skew, &[0, 0]),
            Err(SkewError::NotAdmissible { at: 0 })
        ));
    }

    #[test]
    fn identical_fibers_make_growth_a_multiple_of_the_word_count() {
        let base = SymbolicBase::full_shift(2).unwrap();
        let skew = SkewProduct::new(
            base,
            vec![
                Fiber::map(tent_map((0.25, 0.75))),
                Fiber::map(tent_map((0.25, 0.75))),
            ],
        )
        .unwrap();

        let series = growth_series(&skew, 5, None, &GrowthBudget::default()).unwrap();
        assert!(series.truncated_at.is_none());
        for row in &series.rows {
            let words = 2u64.pow(row.period as u32);
            assert_eq!(row.words, words);
            assert_eq!(row.fixed_points, 2 * words);
            assert_eq!(row.hyperbolic, row.fixed_points);
            assert_eq!(row.non_hyperbolic, 0);
            assert_eq!(row.max_per_fiber, 2);
        }

        // identical totals regardless of the thread count
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| growth_series(&skew, 5, None, &GrowthBudget::default()))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| growth_series(&skew, 5, None, &GrowthBudget::default()))
            .unwrap();
        assert_eq!(single, series);
        assert_eq!(four, series);

        // a starved budget truncates explicitly and keeps the finished rows
        let starved = growth_series(&skew, 5, None, &GrowthBudget { max_scans: 5 })
            .unwrap();
        assert_eq!(starved.truncated_at, Some(3));
        assert_eq!(starved.rows.len(), 2);

        let class = classify_growth(&series, 2.0).unwrap();
        match class {
            GrowthClass::BoundedExponential { constant, rate } => {
                assert!((constant - 2.0).abs() < 1e-12);
                assert_eq!(rate, 2.0);
            }
            other => panic!("expected a bounded fit, got {other:?}"),
        }
        assert!(matches!(
            classify_growth(&GrowthSeries { rows: vec![], truncated_at: None }, 2.0),
            Err(SkewError::EmptySeries)
        ));
    }

    #[test]
    fn factory_roots_margins_and_parity() {
        let flat = Jet::identity(6);
        for a in 1..=10usize {
            let f = flat_fiber_perturb(&flat, 4, a, q(1, 10), q(1, 10), 10.0).unwrap();
            assert!(!f.is_degenerate());

            // margins: direct exclusion product in exact arithmetic must
            // reproduce the closed form, and beat the uniform bound
            let bound = f.margin_lower_bound();
            for j in 0..=a {
                let mut direct = q(1, 10);
                for i in (0..=a).filter(|&i| i != j) {
                    direct *= (q(j as i64, a as i64) - q(i as i64, a as i64)) * q(1, 10);
                }
                let closed = f.multiplier_margin(j);
                assert_eq!(direct, closed, "margin mismatch at a={a}, j={j}");
                let abs = if closed.is_negative() { -closed } else { closed };
                assert!(abs > bound);
            }

            // numeric roots land on jδ/a to 1e-12 over the chart (brackets
            // tightened well past the target so the midpoint noise is gone)
            let tight = crate::map1d::ScanOptions {
                bisect_tol: 1e-14,
                ..Default::default()
            };
            let scan =
                crate::map1d::find_fixed_points_with(&f, Some((-0.001, 0.101)), &tight).unwrap();
            assert_eq!(scan.points.len(), a + 1, "chart count at a={a}");
            for (p, r) in scan.points.iter().zip(f.designed_roots()) {
                assert!(
                    (p.x - r).abs() <= 1e-12,
                    "root error {:.3e} at a={a}",
                    (p.x - r).abs()
                );
            }
            if a <= 3 {
                // margins are still above float resolution here — the scan
                // itself must certify hyperbolicity
                assert!(scan.points.iter().all(|p| p.hyperbolic));
            }
        }

        // whole-circle counts include the parity zero of the bridge
        for a in [1usize, 2, 3, 5, 6] {
            let f = flat_fiber_perturb(&flat, 4, a, q(1, 10), q(1, 10), 10.0).unwrap();
            let counted = count_fiber_fixed_points(&f, None, 1e-10).unwrap();
            assert_eq!(
                counted.scan.points.len() as u64,
                f.designed_fixed_point_count().unwrap(),
                "circle count at a={a}"
            );
            if a % 2 == 0 {
                let cross = f.bridge_crossing().unwrap();
                assert!(counted
                    .scan
                    .points
                    .iter()
                    .any(|p| (p.x - cross).abs() < 1e-6));
            } else {
                assert!(f.bridge_crossing().is_none());
            }
        }

        // a = 1 multipliers: 1 + ε(∓δ)
        let f1 = flat_fiber_perturb(&flat, 4, 1, q(1, 10), q(1, 10), 10.0).unwrap();
        assert_eq!(f1.multiplier_margin(0), q(-1, 100));
        assert_eq!(f1.multiplier_margin(1), q(1, 100));
        let scan1 = find_fixed_points(&f1, Some((-0.001, 0.101)), 1e-8).unwrap();
        assert!((scan1.points[0].multiplier - 0.99).abs() < 1e-9);
        assert!((scan1.points[1].multiplier - 1.01).abs() < 1e-9);

        // a = 5 on the circle: exactly six
        let f5 = flat_fiber_perturb(&flat, 4, 5, q(1, 10), q(1, 10), 10.0).unwrap();
        assert_eq!(f5.designed_fixed_point_count(), Some(6));

        // ε = 0 is the unchanged flat fiber, flagged
        let f0 = flat_fiber_perturb(&flat, 4, 3, Q::zero(), q(1, 10), 10.0).unwrap();
        assert!(f0.is_degenerate());
        assert_eq!(f0.designed_fixed_point_count(), None);

        // a germ that is not flat enough is refused
        let bumpy = Jet::new(4, vec![qi(1), Q::zero(), qi(1), Q::zero()]).unwrap();
        assert!(matches!(
            flat_fiber_perturb(&bumpy, 3, 2, q(1, 10), q(1, 10), 10.0),
            Err(SkewError::NotFlatEnough { need: 3, has: 2 })
        ));

        // an ε violent enough to fold the chart is refused
        assert!(matches!(
            flat_fiber_perturb(&flat, 4, 1, qi(500), q(1, 10), 10.0),
            Err(SkewError::NotDiffeo { .. })
        ));
    }

    #[test]
    fn injected_factory_leaf_dominates_and_flips_classification() {
        let base = SymbolicBase::full_shift(2).unwrap();
        let tent = tent_map((0.25, 0.75));
        let plain = SkewProduct::new(
            base.clone(),
            vec![Fiber::map(tent.clone()), Fiber::map(tent_map((0.25, 0.75)))],
        );
        let plain = plain.unwrap();
        let plain_series = growth_series(&plain, 10, None, &GrowthBudget::default()).unwrap();
        assert!(matches!(
            classify_growth(&plain_series, 2.0).unwrap(),
            GrowthClass::BoundedExponential { .. }
        ));

        // same base, but the second fiber now carries 1001 designed points
        // (+ the parity zero): the period-1 leaf alone dwarfs the base rate
        let flat = Jet::identity(6);
        let factory = flat_fiber_perturb(&flat, 4, 1000, q(1, 10), q(1, 10), 1.0).unwrap();
        assert_eq!(factory.designed_fixed_point_count(), Some(1002));
        let injected = SkewProduct::new(
            base,
            vec![Fiber::map(tent), Fiber::Factory(factory)],
        )
        .unwrap();
        let series = growth_series(&injected, 10, None, &GrowthBudget::default()).unwrap();
        for row in &series.rows {
            let words = 2u64.pow(row.period as u32);
            // every mixed word sees the factory as flat (below resolution);
            // only the pure factory word carries the designed count
            assert_eq!(row.fixed_points, 2 * (words - 1) + 1002, "period {}", row.period);
        }
        assert_eq!(
            classify_growth(&series, 2.0).unwrap(),
            GrowthClass::Exceeds { witness_period: 1 }
        );
    }

    fn affine_interval(c: f64, shift: f64) -> Box<dyn SmoothMap1D> {
        // x ↦ c·x + shift on the standard blender window
        let piece = PieceSpec::new(-4.2, 4.2, vec![shift, c]);
        Box::new(PiecewisePoly::interval(-4.2, 4.2, vec![piece]).unwrap())
    }

    fn standard_blender() -> BlenderSpec {
        BlenderSpec::new(
            affine_interval(0.99, -0.04), // 0.99(x+4) − 4, fixed point −4
            affine_interval(0.99, 0.04),  // 0.99(x−4) + 4, fixed point +4
            (-3.0, 3.0),
            (-4.2, 4.2),
        )
        .unwrap()
    }

    #[test]
    fn covering_check_certifies_the_standard_pair() {
        let report = blender_covering_check(&standard_blender()).unwrap();
        assert!(report.covered && report.auxiliary_ok && report.passes());
        assert!((report.plus_image.0 - -3.01).abs() < 1e-12);
        assert!((report.plus_image.1 - 2.93).abs() < 1e-12);
        assert!((report.minus_image.0 - -2.93).abs() < 1e-12);
        assert!((report.minus_image.1 - 3.01).abs() < 1e-12);

        // contraction 0.4 leaves a hole in the middle
        let weak = BlenderSpec::new(
            affine_interval(0.4, -2.4),
            affine_interval(0.4, 2.4),
            (-3.0, 3.0),
            (-4.2, 4.2),
        )
        .unwrap();
        let report = blender_covering_check(&weak).unwrap();
        assert!(!report.covered);

        // a degenerate point core is covered exactly when both branches fix it
        let fixed = BlenderSpec::new(
            affine_interval(0.99, 0.0),
            affine_interval(0.98, 0.0),
            (0.0, 0.0),
            (-4.2, 4.2),
        )
        .unwrap();
        assert!(blender_covering_check(&fixed).unwrap().covered);

        struct Folding;
        impl SmoothMap1D for Folding {
            fn domain(&self) -> Domain {
                Domain::Interval { lo: -4.2, hi: 4.2 }
            }
            fn eval(&self, x: f64) -> f64 {
                -0.5 * x
            }
            fn jet3(&self, x: f64) -> [f64; 4] {
                [-0.5 * x, -0.5, 0.0, 0.0]
            }
            fn orientation_preserving(&self) -> bool {
                false
            }
        }
        let folding = BlenderSpec::new(
            Box::new(Folding),
            affine_interval(0.99, 0.04),
            (-3.0, 3.0),
            (-4.2, 4.2),
        )
        .unwrap();
        assert!(matches!(
            blender_covering_check(&folding),
            Err(SkewError::NotMonotone { .. })
        ));
    }

    #[test]
    fn pullback_words_reach_small_targets() {
        let spec = standard_blender();

        // a deterministic target hard against the lower hull end
        let word = tangle_search(&spec, 0.0, (-3.99, -3.98), 2000)
            .unwrap()
            .expect("the deep target is reachable");
        println!("deep-target word length: {}", word.len());
        assert!(word.len() <= 1200);
        let mut x = 0.0;
        for &s in &word {
            x = spec.branch(s).eval(x);
        }
        assert!((-3.99..=-3.98).contains(&x));

        // random small targets all over the core
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut deepest = 0usize;
        for _ in 0..60 {
            let lo = rng.gen_range(-3.0..2.99);
            let target = (lo, lo + 0.01);
            let y0 = rng.gen_range(-3.0..3.0);
            let word = tangle_search(&spec, y0, target, 2000)
                .unwrap()
                .expect("targets inside the core are reachable");
            deepest = deepest.max(word.len());
        }
        println!("deepest random pullback: {deepest}");
        assert!(deepest <= 1200);

        // a target outside the hull cannot be hit
        assert_eq!(tangle_search(&spec, 0.0, (5.0, 6.0), 500).unwrap(), None);

        // a cap too small is a polite None, not an error
        assert_eq!(
            tangle_search(&spec, 2.9, (-2.0, -1.99), 10).unwrap(),
            None
        );
    }

    #[test]
    fn multiplier_balance_matches_the_convergent_structure() {
        let r = balance_multipliers(2.0, 1.0 / 3.0, 1.0, 0.02, 200).unwrap();
        assert_eq!((r.m1, r.m2), (19, 12));
        assert!((r.defect.abs() - 0.013_556).abs() < 1e-5);

        // the pair sits among the convergents of ln2/ln3
        let cs = convergents(2f64.ln() / 3f64.ln(), 10);
        assert!(cs.contains(&(12, 19)));

        let exact = balance_multipliers(2.0, 0.5, 1.0, 1e-9, 10).unwrap();
        assert_eq!((exact.m1, exact.m2), (1, 1));
        assert_eq!(exact.defect, 0.0);

        // a neutral correction factor barely shifts the balance
        let with_mu = balance_multipliers(2.0, 1.0 / 3.0, 31.0 / 30.0, 0.02, 200).unwrap();
        assert_eq!((with_mu.m1, with_mu.m2), (19, 12));
        assert!((with_mu.defect - 0.019_234).abs() < 1e-5);

        assert!(matches!(
            balance_multipliers(2.0, 1.0 / 3.0, 1.0, 1e-9, 10),
            Err(SkewError::SearchExhausted { cap: 10 })
        ));
        assert!(matches!(
            balance_multipliers(0.5, 0.5, 1.0, 0.1, 10),
            Err(SkewError::Precondition(_))
        ));
    }

    #[test]
    fn cone_margins_detect_domination() {
        let tame = ConeModel {
            base_expansion: 2.0,
            base_contraction: 0.5,
            shear: 0.0,
            fiber: Box::new(tent_map((0.25, 0.75))),
        };
        let report = cone_invariance_check(&tame, 0.3, 64).unwrap();
        assert!(report.invariant && report.min_margin > 0.0 && report.witness.is_none());

        // fiber slopes dipping under the base contraction break domination
        let steep = PiecewisePoly::circle(
            1.0,
            vec![
                PieceSpec::from_displacement(0.0, 0.5, vec![0.7 * 0.25, -0.7]),
                PieceSpec::from_displacement(0.5, 1.0, vec![0.7 * 0.25 - 0.7, 0.7]),
            ],
        )
        .unwrap();
        let spread = ConeModel {
            base_expansion: 2.0,
            base_contraction: 0.5,
            shear: 0.0,
            fiber: Box::new(steep),
        };
        let report = cone_invariance_check(&spread, 0.3, 64).unwrap();
        assert!(!report.invariant);
        let w = report.witness.expect("a failing sample is named");
        assert!(w.margin <= 0.0);

        // widening the cone only helps once a shear eats part of the gap
        let sheared = |alpha: f64| {
            let model = ConeModel {
                base_expansion: 2.0,
                base_contraction: 0.5,
                shear: 0.02,
                fiber: Box::new(tent_map((0.25, 0.75))),
            };
            cone_invariance_check(&model, alpha, 32).unwrap().min_margin
        };
        let margins: Vec<f64> = [0.1, 0.2, 0.4, 0.8].iter().map(|&a| sheared(a)).collect();
        assert!(margins.windows(2).all(|w| w[1] > w[0]), "margins {margins:?}");
    }

    #[test]
    fn scan_counts_agree_with_a_crude_independent_counter() {
        // the crude counter knows nothing about adaptive refinement or
        // Newton polish: displacement signs on a fixed fine grid
        fn crude_count(map: &dyn SmoothMap1D, cells: usize) -> usize {
            let len = map.domain().length();
            let reduce = |x: f64| {
                let r = map.displacement(x).rem_euclid(len);
                if r > len / 2.0 {
                    r - len
                } else {
                    r
                }
            };
            let mut count = 0;
            let mut prev = reduce(0.0);
            for k in 1..=cells {
                let x = len * k as f64 / cells as f64;
                let cur = reduce(x);
                if prev == 0.0 {
                    count += 1;
                } else if prev * cur < 0.0 {
                    count += 1;
                }
                prev = cur;
            }
            count
        }

        let base = SymbolicBase::full_shift(2).unwrap();
        let skew = SkewProduct::new(
            base,
            vec![
                Fiber::map(tent_map((0.25, 0.75))),
                Fiber::map(tent_map((0.3, 0.7))),
            ],
        )
        .unwrap();
        for n in 1..=4 {
            for rep in skew.base().periodic_words(n) {
                let ret = fiber_return(&skew, &rep.word).unwrap();
                let scan = find_fixed_points(&ret, None, 1e-8).unwrap();
                assert_eq!(
                    scan.points.len(),
                    crude_count(&ret, 1 << 14),
                    "word {:?}",
                    rep.word
                );
            }
        }
    }

    #[test]
    fn region_certificates_track_orbits() {
        let base = SymbolicBase::full_shift(2).unwrap();
        let skew = SkewProduct::new(
            base,
            vec![
                Fiber::map(tent_map((0.25, 0.75))),
                Fiber::map(tent_map((0.3, 0.7))),
            ],
        )
        .unwrap();

        // near the attracting point the whole orbit stays put
        let cert = certify_region(&skew, &[0, 1, 0], (0.2, 0.3), (0.0, 0.5), 41).unwrap();
        assert_eq!(cert.absorbed, 0);
        assert_eq!(cert.checked, 41);
        assert!(cert.min_nonlinearity.is_finite() && cert.max_schwarzian.is_finite());

        // a tight corridor absorbs the samples that drift out of it
        let tight = certify_region(&skew, &[0, 1, 0], (0.2, 0.3), (0.21, 0.285), 41).unwrap();
        assert!(tight.absorbed > 0);
        assert_eq!(tight.checked + tight.absorbed, 41);

        assert!(certify_region(&skew, &[], (0.2, 0.3), (0.0, 0.5), 41).is_err());
    }
}
