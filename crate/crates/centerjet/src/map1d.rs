//! One-dimensional maps with cubic jets: piecewise-polynomial circle and
//! interval maps, expression-defined maps, compositions, and a verified
//! fixed-point scan.
//!
//! Circle maps of degree one are stored on a fundamental window `[w, w+L)`
//! and satisfy `f(u+L) = f(u) + L`; pieces may carry a constant `wrap`
//! offset (a multiple of `L`) so that raw values stay near the window, the
//! same bookkeeping a hand computation would use. All displacement logic
//! reduces mod `L`, so wraps never influence fixed-point location or
//! composition.
//!
//! The fixed-point scan brackets transversal crossings of the displacement
//! on a node grid, bisects to high precision, polishes with Newton steps,
//! and re-runs at doubled density until two consecutive densities agree.
//! Cells where the displacement dips toward zero without crossing trigger
//! further doubling; a dip that never resolves (a tangency, or a pair
//! tighter than the densest grid) is reported as a cluster warning rather
//! than silently dropped or invented.

use crate::expr::{DiffChain, ExprError};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum Map1DError {
    #[error("pieces must tile the domain: {0}")]
    Coverage(String),
    #[error("map is discontinuous at {at} (gap {gap:.3e})")]
    Discontinuous { at: f64, gap: f64 },
    #[error("derivative is not positive at {at} (value {value:.6e})")]
    NonMonotone { at: f64, value: f64 },
    #[error("composition factors live on different domains")]
    DomainMismatch,
    #[error("empty composition word")]
    EmptyWord,
    #[error("scan region [{lo}, {hi}] is invalid for this domain")]
    BadRegion { lo: f64, hi: f64 },
    #[error("displacement vanishes on a positive fraction of the grid; fixed points are not isolated")]
    Degenerate,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Where a map lives: a circle `ℝ/Lℤ` or a plain interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Circle { length: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Domain {
    pub fn length(&self) -> f64 {
        match self {
            Domain::Circle { length } => *length,
            Domain::Interval { lo, hi } => hi - lo,
        }
    }
}

/// A map of the line or circle exposing value and first three derivatives.
///
/// `jet3` must be consistent with `eval` (finite-difference checks are the
/// loader's job; [`jet_consistency_error`] measures the defect). Implementors
/// are immutable and shareable across threads.
pub trait SmoothMap1D: Sync {
    fn domain(&self) -> Domain;
    fn eval(&self, x: f64) -> f64;
    /// `[f(x), f′(x), f″(x), f‴(x)]`.
    fn jet3(&self, x: f64) -> [f64; 4];
    /// Whether the map was certified orientation-preserving at construction.
    fn orientation_preserving(&self) -> bool {
        true
    }
    /// `f(x) − x`, overridable so maps that know their displacement in
    /// closed form can avoid the cancellation in `eval(x) − x`. Near-flat
    /// maps have displacements far below the rounding floor of `eval`, so
    /// the fixed-point scan relies on this hook for its accuracy.
    fn displacement(&self, x: f64) -> f64 {
        self.eval(x) - x
    }
}

// ---------------------------------------------------------------------------
// piecewise polynomials

/// One polynomial piece on `[lo, hi]`: `f(u) = Σ coeffs[k]·u^k + wrap`.
#[derive(Debug, Clone)]
pub struct PieceSpec {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
    pub wrap: f64,
    /// displacement coefficients (`f(u) − u`, wrap excluded) when the piece
    /// was given in displacement form; `None` derives them from `coeffs`.
    /// Near-identity pieces should supply these: folding a ~10⁻⁸ linear
    /// displacement coefficient into `1 + c₁` and subtracting the 1 back
    /// out costs ~10⁻¹⁶ absolutely, which is the difference between
    /// locating flat-map fixed points to 10⁻¹³ and to 10⁻⁹.
    pub disp: Option<Vec<f64>>,
}

impl PieceSpec {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        PieceSpec {
            lo,
            hi,
            coeffs,
            wrap: 0.0,
            disp: None,
        }
    }

    pub fn wrapped(lo: f64, hi: f64, coeffs: Vec<f64>, wrap: f64) -> Self {
        PieceSpec {
            lo,
            hi,
            coeffs,
            wrap,
            disp: None,
        }
    }

    /// Build a piece from its displacement polynomial: `f(u) = u + d(u)`.
    pub fn from_displacement(lo: f64, hi: f64, disp: Vec<f64>) -> Self {
        let mut coeffs = disp.clone();
        if coeffs.len() < 2 {
            coeffs.resize(2, 0.0);
        }
        coeffs[1] += 1.0;
        PieceSpec {
            lo,
            hi,
            coeffs,
            wrap: 0.0,
            disp: Some(disp),
        }
    }
}

#[derive(Debug, Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    wrap: f64,
    /// coefficient arrays of the value and first three derivatives
    d: [Vec<f64>; 4],
    /// coefficients of `f(u) − u` (wrap not included), kept separately so
    /// tiny displacements evaluate without cancellation against `u`
    dcoef: Vec<f64>,
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

/// Monic polynomial with the given roots, by convolution.
pub fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut acc = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; acc.len() + 1];
        for (k, c) in acc.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= r * c;
        }
        acc = next;
    }
    acc
}

/// Minimum of a polynomial on `[lo, hi]`: exact via the vertex for degree
/// ≤ 2, dense sampling (4097 nodes) above that. Returns `(min, argmin)`.
fn poly_min_on(coeffs: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (poly_eval(coeffs, lo), lo);
    let mut consider = |x: f64| {
        let v = poly_eval(coeffs, x);
        if v < best.0 {
            best = (v, x);
        }
    };
    consider(hi);
    if coeffs.len() <= 3 {
        // at most quadratic: interior extremum only at the vertex
        if coeffs.len() == 3 && coeffs[2] != 0.0 {
            let vertex = -coeffs[1] / (2.0 * coeffs[2]);
            if vertex > lo && vertex < hi {
                consider(vertex);
            }
        }
    } else {
        let n = 4096;
        for i in 1..n {
            consider(lo + (hi - lo) * i as f64 / n as f64);
        }
    }
    best
}

/// Piecewise-polynomial map, continuous (mod the circle) and certified to
/// have positive derivative on every piece.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    domain: Domain,
    window: f64,
    pieces: Vec<Piece>,
}

impl PiecewisePoly {
    pub fn circle(length: f64, pieces: Vec<PieceSpec>) -> Result<Self, Map1DError> {
        Self::build(Domain::Circle { length }, pieces)
    }

    pub fn interval(lo: f64, hi: f64, pieces: Vec<PieceSpec>) -> Result<Self, Map1DError> {
        let built = Self::build(Domain::Interval { lo, hi }, pieces)?;
        let (w0, w1) = (built.window, built.pieces.last().unwrap().hi);
        if (w0 - lo).abs() > 1e-9 || (w1 - hi).abs() > 1e-9 {
            return Err(Map1DError::Coverage(format!(
                "pieces span [{w0}, {w1}], domain is [{lo}, {hi}]"
            )));
        }
        Ok(built)
    }

    fn build(domain: Domain, specs: Vec<PieceSpec>) -> Result<Self, Map1DError> {
        if specs.is_empty() {
            return Err(Map1DError::Coverage("no pieces given".into()));
        }
        let mut specs = specs;
        specs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let window = specs[0].lo;
        let scale = domain.length();

        // contiguity
        for w in specs.windows(2) {
            if (w[0].hi - w[1].lo).abs() > 1e-9 * scale.max(1.0) {
                return Err(Map1DError::Coverage(format!(
                    "gap between piece ending at {} and piece starting at {}",
                    w[0].hi, w[1].lo
                )));
            }
        }
        if let Domain::Circle { length } = domain {
            let span = specs.last().unwrap().hi - window;
            if (span - length).abs() > 1e-9 * length {
                return Err(Map1DError::Coverage(format!(
                    "pieces span {span}, circle length is {length}"
                )));
            }
        }

        let pieces: Vec<Piece> = specs
            .into_iter()
            .map(|s| {
                let PieceSpec {
                    lo,
                    hi,
                    coeffs,
                    wrap,
                    disp,
                } = s;
                let d1 = poly_derivative(&coeffs);
                let d2 = poly_derivative(&d1);
                let d3 = poly_derivative(&d2);
                let dcoef = disp.unwrap_or_else(|| {
                    let mut d = coeffs.clone();
                    if d.len() < 2 {
                        d.resize(2, 0.0);
                    }
                    d[1] -= 1.0;
                    d
                });
                Piece {
                    lo,
                    hi,
                    wrap,
                    d: [coeffs, d1, d2, d3],
                    dcoef,
                }
            })
            .collect();

        // continuity at interior knots and (for circles) at the seam,
        // measured as distance to the nearest multiple of L on a circle
        let gap_of = |a: f64, b: f64| -> f64 {
            let diff = b - a;
            match domain {
                Domain::Circle { length } => {
                    let m = (diff / length).round();
                    (diff - m * length).abs()
                }
                Domain::Interval { .. } => diff.abs(),
            }
        };
        for w in pieces.windows(2) {
            let left = poly_eval(&w[0].d[0], w[0].hi) + w[0].wrap;
            let right = poly_eval(&w[1].d[0], w[1].lo) + w[1].wrap;
            let gap = gap_of(left, right);
            if gap > 1e-9 * scale.max(1.0) {
                return Err(Map1DError::Discontinuous {
                    at: w[0].hi,
                    gap,
                });
            }
        }
        if let Domain::Circle { length } = domain {
            let last = pieces.last().unwrap();
            let first = &pieces[0];
            let end = poly_eval(&last.d[0], last.hi) + last.wrap;
            let start = poly_eval(&first.d[0], first.lo) + first.wrap + length;
            let gap = gap_of(end, start);
            if gap > 1e-9 * length {
                return Err(Map1DError::Discontinuous {
                    at: last.hi,
                    gap,
                });
            }
        }

        // positive derivative piece by piece
        for p in &pieces {
            let (min, at) = poly_min_on(&p.d[1], p.lo, p.hi);
            if min <= 0.0 {
                return Err(Map1DError::NonMonotone { at, value: min });
            }
        }

        Ok(PiecewisePoly {
            domain,
            window,
            pieces,
        })
    }

    /// Fundamental window `[w, w+L)` for circles, the interval otherwise.
    pub fn window(&self) -> (f64, f64) {
        match self.domain {
            Domain::Circle { length } => (self.window, self.window + length),
            Domain::Interval { lo, hi } => (lo, hi),
        }
    }

    fn reduce(&self, x: f64) -> f64 {
        match self.domain {
            Domain::Circle { length } => {
                let mut u = self.window + (x - self.window).rem_euclid(length);
                if u >= self.window + length {
                    u = self.window;
                }
                u
            }
            Domain::Interval { .. } => x,
        }
    }

    fn piece_at(&self, u: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.hi < u);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }
}

impl SmoothMap1D for PiecewisePoly {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn eval(&self, x: f64) -> f64 {
        let u = self.reduce(x);
        let p = self.piece_at(u);
        poly_eval(&p.d[0], u) + p.wrap
    }

    fn jet3(&self, x: f64) -> [f64; 4] {
        let u = self.reduce(x);
        let p = self.piece_at(u);
        [
            poly_eval(&p.d[0], u) + p.wrap,
            poly_eval(&p.d[1], u),
            poly_eval(&p.d[2], u),
            poly_eval(&p.d[3], u),
        ]
    }

    fn displacement(&self, x: f64) -> f64 {
        // f(x) − x = f(u) − u for a degree-one map, and the wrap is a
        // multiple of L the caller normalizes away
        let u = self.reduce(x);
        let p = self.piece_at(u);
        poly_eval(&p.dcoef, u) + p.wrap
    }
}

// ---------------------------------------------------------------------------
// expression-defined maps

/// A map given by a source expression, differentiated symbolically.
///
/// Circle expressions are evaluated on the representative in `[0, L)`.
/// Monotonicity is not decidable symbolically, so the constructor samples
/// the derivative and refuses a nonpositive value.
pub struct ExprMap1D {
    source: String,
    chain: DiffChain,
    domain: Domain,
}

impl ExprMap1D {
    pub fn new(source: &str, domain: Domain) -> Result<Self, Map1DError> {
        let chain: DiffChain = source.parse()?;
        let map = ExprMap1D {
            source: source.to_string(),
            chain,
            domain,
        };
        let (lo, hi) = match domain {
            Domain::Circle { length } => (0.0, length),
            Domain::Interval { lo, hi } => (lo, hi),
        };
        for i in 0..=512 {
            let x = lo + (hi - lo) * i as f64 / 512.0;
            let d = map.chain.d1.eval(x);
            if d.is_finite() && d <= 0.0 {
                return Err(Map1DError::NonMonotone { at: x, value: d });
            }
        }
        Ok(map)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for ExprMap1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprMap1D({:?} on {:?})", self.source, self.domain)
    }
}

impl SmoothMap1D for ExprMap1D {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn eval(&self, x: f64) -> f64 {
        let u = match self.domain {
            Domain::Circle { length } => x.rem_euclid(length),
            Domain::Interval { .. } => x,
        };
        self.chain.f.eval(u)
    }

    fn jet3(&self, x: f64) -> [f64; 4] {
        let u = match self.domain {
            Domain::Circle { length } => x.rem_euclid(length),
            Domain::Interval { .. } => x,
        };
        self.chain.jet3(u)
    }
}

// ---------------------------------------------------------------------------
// composition

/// Composite `f_n ∘ … ∘ f_1`; `factors[0]` is applied first. Jets are
/// transported by the chain rule through third order.
pub struct ComposedMap1D<'a> {
    factors: Vec<&'a dyn SmoothMap1D>,
    domain: Domain,
}

impl<'a> ComposedMap1D<'a> {
    pub fn new(factors: Vec<&'a dyn SmoothMap1D>) -> Result<Self, Map1DError> {
        let first = factors.first().ok_or(Map1DError::EmptyWord)?;
        let domain = first.domain();
        if factors.iter().any(|f| f.domain() != domain) {
            return Err(Map1DError::DomainMismatch);
        }
        Ok(ComposedMap1D { factors, domain })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

impl SmoothMap1D for ComposedMap1D<'_> {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn eval(&self, x: f64) -> f64 {
        self.factors.iter().fold(x, |v, f| f.eval(v))
    }

    fn jet3(&self, x: f64) -> [f64; 4] {
        let mut j = [x, 1.0, 0.0, 0.0];
        for f in &self.factors {
            let o = f.jet3(j[0]);
            j = [
                o[0],
                o[1] * j[1],
                o[2] * j[1] * j[1] + o[1] * j[2],
                o[3] * j[1] * j[1] * j[1] + 3.0 * o[2] * j[1] * j[2] + o[1] * j[3],
            ];
        }
        j
    }
}

/// Scaled defect between `jet3` and centered finite differences of `eval`
/// at the given points — the loader-side consistency check.
pub fn jet_consistency_error(map: &dyn SmoothMap1D, xs: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        let j = map.jet3(x);
        let (fp, fm) = (map.eval(x + h), map.eval(x - h));
        let (fpp, fmm) = (map.eval(x + 2.0 * h), map.eval(x - 2.0 * h));
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * map.eval(x) + fm) / (h * h);
        let d3 = (fpp - 2.0 * fp + 2.0 * fm - fmm) / (2.0 * h * h * h);
        for (approx, exact) in [(d1, j[1]), (d2, j[2]), (d3, j[3])] {
            let scale = exact.abs().max(1.0);
            worst = worst.max((approx - exact).abs() / scale);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// fixed points

/// A located fixed point with its multiplier. `hyperbolic` is false when
/// the multiplier sits within the scan tolerance of 1 — such points are
/// reported, never dropped.
#[derive(Debug, Clone, Copy)]
pub struct FixedPoint1D {
    pub x: f64,
    pub multiplier: f64,
    pub hyperbolic: bool,
}

impl FixedPoint1D {
    pub fn attracting(&self) -> bool {
        self.multiplier.abs() < 1.0
    }
}

/// An interval the scan could not resolve: the displacement approaches
/// zero there without a transversal crossing at the densest grid tried.
#[derive(Debug, Clone, Copy)]
pub struct ClusterWarning {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct FixedPointScan {
    pub points: Vec<FixedPoint1D>,
    /// final grid density (cells over the scan region)
    pub cells_used: usize,
    pub warnings: Vec<ClusterWarning>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// starting grid density
    pub min_cells: usize,
    /// densest grid before giving up on an unresolved dip
    pub max_cells: usize,
    /// bisection stops when the bracket is this narrow
    pub bisect_tol: f64,
    /// |multiplier − 1| below this tags the point non-hyperbolic
    pub hyperbolic_tol: f64,
    /// a candidate root must bring |displacement| below this
    pub residual_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            min_cells: 1 << 12,
            max_cells: 1 << 18,
            bisect_tol: 1e-12,
            hyperbolic_tol: 1e-8,
            residual_tol: 1e-9,
        }
    }
}

/// Locate the fixed points of `map` inside `region` (default: one
/// fundamental window of a circle, the whole interval otherwise).
///
/// The displacement `f(x) − x` is reduced to `(−L/2, L/2]` on circles, so
/// wrapped representations cannot create or hide roots. Only transversal
/// crossings are counted as fixed points; dips that might conceal a
/// tangency or an unresolvably tight pair surface as [`ClusterWarning`]s.
pub fn find_fixed_points(
    map: &dyn SmoothMap1D,
    region: Option<(f64, f64)>,
    tol: f64,
) -> Result<FixedPointScan, Map1DError> {
    let opts = ScanOptions {
        hyperbolic_tol: tol,
        ..ScanOptions::default()
    };
    find_fixed_points_with(map, region, &opts)
}

pub fn find_fixed_points_with(
    map: &dyn SmoothMap1D,
    region: Option<(f64, f64)>,
    opts: &ScanOptions,
) -> Result<FixedPointScan, Map1DError> {
    let domain = map.domain();
    let (lo, hi, full_circle) = match (region, domain) {
        (Some((a, b)), _) if a < b => (a, b, false),
        (Some((a, b)), _) => return Err(Map1DError::BadRegion { lo: a, hi: b }),
        (None, Domain::Circle { length }) => (0.0, length, true),
        (None, Domain::Interval { lo, hi }) => (lo, hi, false),
    };

    let circle_len = match domain {
        Domain::Circle { length } => Some(length),
        Domain::Interval { .. } => None,
    };
    let disp = |x: f64| -> f64 {
        let raw = map.displacement(x);
        match circle_len {
            Some(len) => {
                // a value already in (−L/2, L/2] must pass through verbatim:
                // rem_euclid's round trip through ±L flushes displacements
                // below an ulp of L to exact zero, which widens every root
                // into a dead zone
                if raw > -len / 2.0 && raw <= len / 2.0 {
                    return raw;
                }
                let r = raw.rem_euclid(len);
                if r > len / 2.0 {
                    r - len
                } else {
                    r
                }
            }
            None => raw,
        }
    };

    let mut cells = opts.min_cells;
    let node = |i: usize, cells: usize| lo + (hi - lo) * i as f64 / cells as f64;
    let mut vals: Vec<f64> = (0..=cells).map(|i| disp(node(i, cells))).collect();

    let zero_nodes = vals.iter().filter(|v| **v == 0.0).count();
    if zero_nodes * 10 > vals.len() {
        return Err(Map1DError::Degenerate);
    }

    let extract = |vals: &[f64], cells: usize| -> (Vec<f64>, Vec<(f64, f64)>) {
        let width = (hi - lo) / cells as f64;
        let mut roots = Vec::new();
        let mut dips = Vec::new();
        for i in 0..=cells {
            let x = node(i, cells);
            if vals[i] == 0.0 {
                // exact node zero; on a full circle the last node repeats the first
                if !(full_circle && i == cells) {
                    roots.push(x);
                }
                continue;
            }
            if i == cells {
                break;
            }
            let (a, b) = (vals[i], vals[i + 1]);
            if a * b < 0.0 {
                // transversal crossing: bisect, then polish
                let (mut xl, mut xr, mut dl) = (x, node(i + 1, cells), a);
                while xr - xl > opts.bisect_tol {
                    let xm = 0.5 * (xl + xr);
                    let dm = disp(xm);
                    if dm == 0.0 {
                        xl = xm;
                        xr = xm;
                        break;
                    }
                    if dl * dm < 0.0 {
                        xr = xm;
                    } else {
                        xl = xm;
                        dl = dm;
                    }
                }
                let mut best = 0.5 * (xl + xr);
                let mut best_res = disp(best).abs();
                let mut y = best;
                for _ in 0..6 {
                    let j = map.jet3(y);
                    let denom = j[1] - 1.0;
                    if denom.abs() < 1e-14 {
                        break;
                    }
                    y -= disp(y) / denom;
                    if !(x - width..=x + 2.0 * width).contains(&y) {
                        break;
                    }
                    let r = disp(y).abs();
                    if r < best_res {
                        best_res = r;
                        best = y;
                    }
                }
                if best_res <= opts.residual_tol {
                    roots.push(best);
                }
            }
        }
        // dips: a strict local minimum of |d| with uniform sign whose value
        // is within one node-step of zero could hide a pair or a tangency
        for i in 1..cells {
            let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
            if a == 0.0 || b == 0.0 || c == 0.0 {
                continue;
            }
            if a.signum() == b.signum()
                && b.signum() == c.signum()
                && b.abs() < a.abs()
                && b.abs() < c.abs()
            {
                let step = (a - b).abs().max((c - b).abs());
                if b.abs() < step {
                    dips.push((node(i - 1, cells), node(i + 1, cells)));
                }
            }
        }
        (roots, dips)
    };

    let (mut roots, mut dips) = extract(&vals, cells);
    loop {
        if cells >= opts.max_cells {
            // give up: report what we have plus the unresolved intervals
            let warnings = merge_intervals(&dips);
            return Ok(finish(map, roots, cells, warnings, opts));
        }
        // refine by inserting midpoints
        let mut refined = Vec::with_capacity(2 * cells + 1);
        for i in 0..cells {
            refined.push(vals[i]);
            refined.push(disp(node(2 * i + 1, 2 * cells)));
        }
        refined.push(vals[cells]);
        cells *= 2;
        vals = refined;

        let (fine_roots, fine_dips) = extract(&vals, cells);
        let width_coarse = 2.0 * (hi - lo) / cells as f64;
        let stable = fine_dips.is_empty()
            && dips.is_empty()
            && fine_roots.len() == roots.len()
            && fine_roots
                .iter()
                .zip(&roots)
                .all(|(a, b)| (a - b).abs() <= width_coarse);
        roots = fine_roots;
        dips = fine_dips;
        if stable {
            return Ok(finish(map, roots, cells, Vec::new(), opts));
        }
    }
}

fn merge_intervals(raw: &[(f64, f64)]) -> Vec<ClusterWarning> {
    let mut sorted: Vec<(f64, f64)> = raw.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<ClusterWarning> = Vec::new();
    for (a, b) in sorted {
        match out.last_mut() {
            Some(last) if a <= last.hi => last.hi = last.hi.max(b),
            _ => out.push(ClusterWarning { lo: a, hi: b }),
        }
    }
    out
}

fn finish(
    map: &dyn SmoothMap1D,
    mut roots: Vec<f64>,
    cells: usize,
    warnings: Vec<ClusterWarning>,
    opts: &ScanOptions,
) -> FixedPointScan {
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * map.domain().length().max(1.0));
    let points = roots
        .into_iter()
        .map(|x| {
            let multiplier = map.jet3(x)[1];
            FixedPoint1D {
                x,
                multiplier,
                hyperbolic: (multiplier - 1.0).abs() >= opts.hyperbolic_tol,
            }
        })
        .collect();
    FixedPointScan {
        points,
        cells_used: cells,
        warnings,
    }
}

// ---------------------------------------------------------------------------
// cubic Hermite bridges

/// Cubic on `[x0, x1]` with prescribed endpoint values and derivatives,
/// returned as plain power-basis coefficients (plus an optional wrap).
pub fn hermite_piece(
    x0: f64,
    x1: f64,
    v0: f64,
    d0: f64,
    v1: f64,
    d1: f64,
    wrap: f64,
) -> PieceSpec {
    let h = x1 - x0;
    // coefficients in s = (u − x0)/h
    let (s0, s1, s2, s3) = (
        v0,
        h * d0,
        -3.0 * v0 + 3.0 * v1 - 2.0 * h * d0 - h * d1,
        2.0 * v0 - 2.0 * v1 + h * d0 + h * d1,
    );
    // substitute s = (u − x0)/h: first scale, then shift
    let scaled = [s0, s1 / h, s2 / (h * h), s3 / (h * h * h)];
    let coeffs = shift_poly(&scaled, x0);
    PieceSpec::wrapped(x0, x1, coeffs, wrap)
}

/// Rewrite `p(u − c)` as a polynomial in `u`.
fn shift_poly(coeffs: &[f64], c: f64) -> Vec<f64> {
    // Horner in (u − c): acc(u) ← acc(u)·(u − c) + coeff
    let mut acc: Vec<f64> = Vec::new();
    for &ck in coeffs.iter().rev() {
        let mut next = vec![0.0; acc.len() + 1];
        for (k, a) in acc.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= c * a;
        }
        next[0] += ck;
        acc = next;
    }
    acc
}

/// Exact minimum of the Hermite derivative on the bridge: the derivative is
/// quadratic in `s`, so the candidates are the endpoints and the vertex.
pub fn hermite_min_derivative(x0: f64, x1: f64, v0: f64, d0: f64, v1: f64, d1: f64) -> f64 {
    let h = x1 - x0;
    let delta = (v1 - v0) / h;
    // p′(s)/1 in x-units: c + b·s + a·s²
    let c = d0;
    let b = 6.0 * delta - 4.0 * d0 - 2.0 * d1;
    let a = 3.0 * (d0 + d1) - 6.0 * delta;
    let mut m = c.min(c + b + a);
    if a != 0.0 {
        let s = -b / (2.0 * a);
        if (0.0..=1.0).contains(&s) {
            m = m.min(c + b * s + a * s * s);
        }
    }
    m
}
