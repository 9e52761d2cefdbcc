//! Linearizing charts at hyperbolic fixed points, and the transition data
//! carried by an orbit running from a repeller to an attractor.
//!
//! Around a fixed point p with multiplier λ > 0, λ ≠ 1 there is a unique
//! coordinate ψ with ψ(p) = 0 and ψ′(p) = 1 in which the map acts by
//! multiplication: ψ(f(x)) = λ·ψ(x). Its Taylor coefficients are rational
//! in the jet of f at p; this module computes them through third order,
//! certifies a neighbourhood on which a numeric evaluator for ψ settles,
//! and transports third-order derivative data along orbits so the chart
//! can be read far from p itself.
//!
//! Given a repelling point p₋, an attracting point p₊, and a point q whose
//! backward orbit enters the chart at p₋ while its forward orbit enters the
//! chart at p₊, the charts compose into the transition germ T = ψ₊ ∘ ψ₋⁻¹
//! read at ζ = ψ₋(q). Its nonlinearity A = T″/T′ and Schwarzian derivative
//! S = T‴/T′ − (3/2)(T″/T′)² depend on the choice of q, but only through
//! exact geometric factors: replacing q by f(q) scales A by 1/λ₋ and S by
//! 1/λ₋², so the *signs* of A and S are invariants of the connecting orbit.
//! [`Linearizer::signature_stability`] probes that sign pair by recomputing
//! it along the orbit and at a halved tolerance.

use crate::jet::SignPair;
use crate::map1d::{Domain, FixedPoint1D, SmoothMap1D};
use thiserror::Error;

/// Entry radius for value transport: orbits are followed until they come
/// this close to the chart center, where the cubic chart polynomial takes
/// over. Value truncation error is O(u⁴) at entry offset u.
const ENTER_VALUE: f64 = 1e-3;

/// Entry radius for derivative transport. The third derivative-coefficient
/// of the truncated chart is off by O(u) at entry offset u, so reading
/// Schwarzian data to ~1e−6 needs a far deeper handoff than values do.
const ENTER_JET: f64 = 1e-9;

/// Cap on transported orbit length before a point is declared disconnected.
const MAX_STEPS: usize = 200_000;

const NEWTON_ITERS: usize = 60;

/// Multipliers within this distance of 1 have no hyperbolic chart.
const HYPERBOLIC_TOL: f64 = 1e-8;

/// Relative threshold for the settling check inside radius certification:
/// extending a transport by one step must not move the chart value by more
/// than this, or the linearizing limit has not stabilised at that point.
const STABILIZE_TOL: f64 = 1e-6;

/// Samples per side of the center when certifying a radius.
const SAMPLES: usize = 8;

#[derive(Debug, Error)]
pub enum LinearizeError {
    #[error("x = {x} is not fixed: |f(x) − x| = {residual:.3e}")]
    NotFixed { x: f64, residual: f64 },
    #[error("multiplier {multiplier} at x = {x} is too close to 1 to linearize")]
    NonHyperbolic { x: f64, multiplier: f64 },
    #[error("multiplier {multiplier} at x = {x} is not positive; only orientation-preserving germs are handled")]
    NotOrientationPreserving { x: f64, multiplier: f64 },
    #[error("expected a repelling point, found multiplier {multiplier} at x = {x}")]
    ExpectedRepeller { x: f64, multiplier: f64 },
    #[error("expected an attracting point, found multiplier {multiplier} at x = {x}")]
    ExpectedAttractor { x: f64, multiplier: f64 },
    #[error("orbit of {from} made {steps} steps without entering the chart at {toward}")]
    DoesNotConnect { from: f64, toward: f64, steps: usize },
    #[error("orbit of {from} left the domain after {steps} steps, at x = {x}")]
    LeftDomain { from: f64, x: f64, steps: usize },
    #[error("no preimage found near y = {near}")]
    NoPreimage { near: f64 },
    #[error("no neighbourhood of {center} could be certified: {why}")]
    NoValidity { center: f64, why: String },
}

/// Derivative data (g′, g″/2, g‴/6) of a germ at a point — the Taylor
/// coefficients of x ↦ g(base + x) − g(base) through order three.
pub type Jet3 = [f64; 3];

/// Taylor coefficients of outer ∘ inner at the point where `inner` is based.
pub fn compose3(outer: Jet3, inner: Jet3) -> Jet3 {
    let [d1, d2, d3] = outer;
    let [c1, c2, c3] = inner;
    [
        d1 * c1,
        d1 * c2 + d2 * c1 * c1,
        d1 * c3 + 2.0 * d2 * c1 * c2 + d3 * c1 * c1 * c1,
    ]
}

/// Taylor coefficients of the inverse germ, based at the image point.
pub fn invert3(t: Jet3) -> Jet3 {
    let [c1, c2, c3] = t;
    [
        1.0 / c1,
        -c2 / c1.powi(3),
        (2.0 * c2 * c2 - c1 * c3) / c1.powi(5),
    ]
}

/// A = g″/g′ in triple form.
pub fn nonlinearity3(t: Jet3) -> f64 {
    2.0 * t[1] / t[0]
}

/// S = g‴/g′ − (3/2)(g″/g′)² in triple form.
pub fn schwarzian3(t: Jet3) -> f64 {
    6.0 * t[2] / t[0] - 6.0 * (t[1] / t[0]).powi(2)
}

/// Post-compose with u ↦ a·u.
fn scale3(t: Jet3, a: f64) -> Jet3 {
    [a * t[0], a * t[1], a * t[2]]
}

/// Triple of the cubic chart polynomial u + p₂u² + p₃u³ re-based at offset d.
fn chart_jet_at(p2: f64, p3: f64, d: f64) -> Jet3 {
    [
        1.0 + 2.0 * p2 * d + 3.0 * p3 * d * d,
        p2 + 3.0 * p3 * d,
        p3,
    ]
}

fn deadband_sign(v: f64, tol: f64) -> i8 {
    if v.abs() < 10.0 * tol {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// A truncated linearizing coordinate ψ(x) ≈ u + p₂u² + p₃u³, u = x − center,
/// together with the neighbourhood on which its numeric extension settled.
///
/// `radius` is the certified half-width: on |x − center| ≤ radius every
/// sampled orbit reached the chart, the transported value stabilised, and the
/// conjugacy defect |ψ(f(x)) − λψ(x)| stayed below the tolerance it was
/// certified with; `residual` is the largest defect actually observed.
#[derive(Debug, Clone)]
pub struct KoenigsChart {
    pub center: f64,
    pub multiplier: f64,
    pub p2: f64,
    pub p3: f64,
    /// 2 for a quadratic chart (p₃ = 0), 3 for the full cubic chart.
    pub order: usize,
    pub radius: f64,
    pub residual: f64,
}

impl KoenigsChart {
    pub fn attracting(&self) -> bool {
        self.multiplier < 1.0
    }

    /// Chart polynomial at local offset u.
    fn local(&self, u: f64) -> f64 {
        u * (1.0 + u * (self.p2 + u * self.p3))
    }
}

/// Transition data of a connecting orbit, read in linearizing coordinates.
///
/// `jet` is the derivative triple (T′, T″/2, T‴/6) of T = ψ₊ ∘ ψ₋⁻¹ at
/// `coordinate` = ψ₋(q). The sign pair is taken with a deadband: a value
/// smaller than ten times the working tolerance counts as zero.
#[derive(Debug, Clone)]
pub struct HeteroclinicRecord {
    pub source: KoenigsChart,
    pub target: KoenigsChart,
    /// The connecting point the data was read at.
    pub at: f64,
    /// ψ₋(q), the evaluation point of the transition germ.
    pub coordinate: f64,
    pub jet: Jet3,
    pub nonlinearity: f64,
    pub schwarzian: f64,
    pub signs: SignPair,
    pub forward_steps: usize,
    pub backward_steps: usize,
}

/// Outcome of probing a transition signature for robustness.
///
/// `records` holds the transition data recomputed at f^j(q) for j = −3..3
/// (index j + 3; the middle entry is the base point). `stable` requires all
/// seven sign pairs and the halved-tolerance pair to agree and to contain no
/// zero — a zero sign means the quantity sits inside the deadband, where its
/// sign is not trustworthy.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub records: Vec<(i32, HeteroclinicRecord)>,
    pub refined_signs: SignPair,
    pub stable: bool,
}

impl StabilityReport {
    pub fn base(&self) -> &HeteroclinicRecord {
        &self.records[3].1
    }
}

/// Chart builder and orbit transporter for one fixed map.
pub struct Linearizer<'a> {
    map: &'a dyn SmoothMap1D,
    tol: f64,
}

impl<'a> Linearizer<'a> {
    /// `tol` is the certification tolerance for conjugacy defects and the
    /// scale of the sign deadband (a signature component below 10·tol reads
    /// as zero).
    pub fn new(map: &'a dyn SmoothMap1D, tol: f64) -> Self {
        Linearizer {
            map,
            tol: tol.max(f64::EPSILON),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Build the linearizing chart at a scanned fixed point. `order` selects
    /// the quadratic (2) or cubic (3) chart polynomial. The validity radius
    /// is grown outward from the center until a sample fails to settle,
    /// leaves the domain, or stops connecting to the chart.
    pub fn chart(&self, p: &FixedPoint1D, order: usize) -> Result<KoenigsChart, LinearizeError> {
        assert!((2..=3).contains(&order), "chart order must be 2 or 3");
        let j = self.map.jet3(p.x);
        let residual = self.offset(j[0], p.x);
        if residual.abs() > 1e-8 * 1.0_f64.max(p.x.abs()) {
            return Err(LinearizeError::NotFixed {
                x: p.x,
                residual: residual.abs(),
            });
        }
        let lam = j[1];
        if lam <= 0.0 {
            return Err(LinearizeError::NotOrientationPreserving {
                x: p.x,
                multiplier: lam,
            });
        }
        if (lam - 1.0).abs() <= HYPERBOLIC_TOL || !p.hyperbolic {
            return Err(LinearizeError::NonHyperbolic {
                x: p.x,
                multiplier: lam,
            });
        }
        // Taylor coefficients of f centered at p: λu + f₂u² + f₃u³.
        let f2 = j[2] / 2.0;
        let f3 = j[3] / 6.0;
        // Matching coefficients in ψ(f(x)) = λψ(x) order by order:
        //   λp₂ = f₂ + p₂λ²          λp₃ = f₃ + 2λf₂p₂ + p₃λ³
        let p2 = f2 / (lam - lam * lam);
        let p3 = if order == 3 {
            (2.0 * lam * f2 * p2 + f3) / (lam - lam.powi(3))
        } else {
            0.0
        };
        let mut chart = KoenigsChart {
            center: p.x,
            multiplier: lam,
            p2,
            p3,
            order,
            radius: 0.0,
            residual: 0.0,
        };
        self.certify(&mut chart)?;
        Ok(chart)
    }

    /// Numeric extension of the chart: transport x along the orbit (forward
    /// for an attracting chart, backward through preimages for a repelling
    /// one) until it enters the chart polynomial's range, then undo the
    /// accumulated multiplier powers.
    pub fn eval(&self, chart: &KoenigsChart, x: f64) -> Result<f64, LinearizeError> {
        // The deeper of the two transport depths is the more accurate value.
        Ok(self.eval_settled(chart, x)?.1)
    }

    /// Transition germ T = ψ₊ ∘ ψ₋⁻¹ at ζ = ψ₋(q), with both charts built
    /// (and certified) from the given fixed points.
    pub fn transition(
        &self,
        repelling: &FixedPoint1D,
        attracting: &FixedPoint1D,
        q: f64,
    ) -> Result<HeteroclinicRecord, LinearizeError> {
        let (source, target) = self.chart_pair(repelling, attracting)?;
        self.transition_with(&source, &target, q)
    }

    /// Transition germ between two already-built charts. `source` must be
    /// repelling and `target` attracting.
    pub fn transition_with(
        &self,
        source: &KoenigsChart,
        target: &KoenigsChart,
        q: f64,
    ) -> Result<HeteroclinicRecord, LinearizeError> {
        if source.multiplier <= 1.0 {
            return Err(LinearizeError::ExpectedRepeller {
                x: source.center,
                multiplier: source.multiplier,
            });
        }
        if target.multiplier >= 1.0 {
            return Err(LinearizeError::ExpectedAttractor {
                x: target.center,
                multiplier: target.multiplier,
            });
        }
        // ψ₊ = λ₊^{−n} · chart ∘ f^n near q, so its triple is the chart
        // triple at the entry offset composed onto the orbit triple.
        let (xs, fwd, nf) = self.forward(target, q, ENTER_JET)?;
        let us = self.offset(xs, target.center);
        let psi_s = scale3(
            compose3(chart_jet_at(target.p2, target.p3, us), fwd),
            target.multiplier.powi(-(nf as i32)),
        );
        // ψ₋ = λ₋^{n} · chart ∘ f^{−n} on the repelling side.
        let (xu, bwd, nb, (xv, nv)) = self.backward(source, q, ENTER_JET)?;
        let uu = self.offset(xu, source.center);
        let lam_pow = source.multiplier.powi(nb as i32);
        let psi_u = scale3(
            compose3(chart_jet_at(source.p2, source.p3, uu), bwd),
            lam_pow,
        );
        debug_assert!(psi_u[0] > 0.0 && psi_s[0] > 0.0);
        let t = compose3(psi_s, invert3(psi_u));
        let a = nonlinearity3(t);
        let s = schwarzian3(t);
        Ok(HeteroclinicRecord {
            source: source.clone(),
            target: target.clone(),
            at: q,
            coordinate: source.multiplier.powi(nv as i32)
                * source.local(self.offset(xv, source.center)),
            jet: t,
            nonlinearity: a,
            schwarzian: s,
            signs: SignPair {
                tau_a: deadband_sign(a, self.tol),
                tau_s: deadband_sign(s, self.tol),
            },
            forward_steps: nf,
            backward_steps: nb,
        })
    }

    /// Probe the signature signs of a connecting orbit: recompute the
    /// transition data at f^j(q) for j = −3..3 and once more at half the
    /// tolerance, and demand that every sign pair agree with the base pair
    /// and contain no deadband zero.
    ///
    /// A degenerate-but-consistent signature (say S ≡ 0, as for any Möbius
    /// map) is reported as `stable: false`, not as an error: the transition
    /// data is perfectly well defined, its sign just carries no information.
    pub fn signature_stability(
        &self,
        repelling: &FixedPoint1D,
        attracting: &FixedPoint1D,
        q: f64,
    ) -> Result<StabilityReport, LinearizeError> {
        let (source, target) = self.chart_pair(repelling, attracting)?;
        let mut points = [q; 7];
        for j in 1..=3 {
            points[3 + j] = self.map.eval(points[3 + j - 1]);
            let prev = points[3 - j + 1];
            let guess = source.center + self.offset(prev, source.center) / source.multiplier;
            points[3 - j] = self.preimage(prev, guess)?;
        }
        let mut records = Vec::with_capacity(7);
        for (idx, &qj) in points.iter().enumerate() {
            records.push((idx as i32 - 3, self.transition_with(&source, &target, qj)?));
        }
        let refined = Linearizer {
            map: self.map,
            tol: self.tol / 2.0,
        }
        .transition_with(&source, &target, q)?;
        let base = records[3].1.signs;
        let stable = base.tau_a != 0
            && base.tau_s != 0
            && records.iter().all(|(_, r)| r.signs == base)
            && refined.signs == base;
        Ok(StabilityReport {
            records,
            refined_signs: refined.signs,
            stable,
        })
    }

    fn chart_pair(
        &self,
        repelling: &FixedPoint1D,
        attracting: &FixedPoint1D,
    ) -> Result<(KoenigsChart, KoenigsChart), LinearizeError> {
        if repelling.multiplier <= 1.0 {
            return Err(LinearizeError::ExpectedRepeller {
                x: repelling.x,
                multiplier: repelling.multiplier,
            });
        }
        if attracting.multiplier >= 1.0 || attracting.multiplier <= 0.0 {
            return Err(LinearizeError::ExpectedAttractor {
                x: attracting.x,
                multiplier: attracting.multiplier,
            });
        }
        Ok((self.chart(repelling, 3)?, self.chart(attracting, 3)?))
    }

    /// Signed offset x − c, respecting the wrap on circle domains.
    fn offset(&self, x: f64, c: f64) -> f64 {
        match self.map.domain() {
            Domain::Circle { length } => {
                let mut d = (x - c).rem_euclid(length);
                if d > length / 2.0 {
                    d -= length;
                }
                d
            }
            Domain::Interval { .. } => x - c,
        }
    }

    fn contains(&self, x: f64) -> bool {
        match self.map.domain() {
            Domain::Circle { .. } => true,
            Domain::Interval { lo, hi } => x >= lo && x <= hi,
        }
    }

    fn triple_at(&self, x: f64) -> Jet3 {
        let j = self.map.jet3(x);
        [j[1], j[2] / 2.0, j[3] / 6.0]
    }

    /// Follow the forward orbit of q until it comes within `enter` of the
    /// chart center, accumulating the derivative triple of the composed map.
    /// Returns (entry point, triple of f^n at q, n).
    fn forward(
        &self,
        chart: &KoenigsChart,
        q: f64,
        enter: f64,
    ) -> Result<(f64, Jet3, usize), LinearizeError> {
        let mut x = q;
        let mut acc = [1.0, 0.0, 0.0];
        let mut n = 0usize;
        loop {
            if self.offset(x, chart.center).abs() <= enter {
                return Ok((x, acc, n));
            }
            if n >= MAX_STEPS {
                return Err(LinearizeError::DoesNotConnect {
                    from: q,
                    toward: chart.center,
                    steps: n,
                });
            }
            if !self.contains(x) {
                return Err(LinearizeError::LeftDomain { from: q, x, steps: n });
            }
            acc = compose3(self.triple_at(x), acc);
            let xn = self.map.eval(x);
            // A stalled orbit has settled at some other fixed point; catching
            // it here is much cheaper than running out the step budget.
            if (xn - x).abs() <= 4.0 * f64::EPSILON * 1.0_f64.max(x.abs()) {
                return Err(LinearizeError::DoesNotConnect {
                    from: q,
                    toward: chart.center,
                    steps: n,
                });
            }
            x = xn;
            n += 1;
        }
    }

    /// Backward counterpart of [`forward`]: follow preimages until entry,
    /// accumulating the derivative triple of f^{−n} at q. Also returns the
    /// orbit state when it first came within [`ENTER_VALUE`] of the center —
    /// chart *values* are best read there, before the per-step solver noise
    /// (absolute, ~1e−15) grows large relative to the shrinking offset.
    fn backward(
        &self,
        chart: &KoenigsChart,
        q: f64,
        enter: f64,
    ) -> Result<(f64, Jet3, usize, (f64, usize)), LinearizeError> {
        let mut x = q;
        let mut acc = [1.0, 0.0, 0.0];
        let mut n = 0usize;
        let mut mark = None;
        loop {
            let u = self.offset(x, chart.center);
            if mark.is_none() && u.abs() <= ENTER_VALUE {
                mark = Some((x, n));
            }
            if u.abs() <= enter {
                return Ok((x, acc, n, mark.unwrap_or((x, n))));
            }
            if n >= MAX_STEPS {
                return Err(LinearizeError::DoesNotConnect {
                    from: q,
                    toward: chart.center,
                    steps: n,
                });
            }
            if !self.contains(x) {
                return Err(LinearizeError::LeftDomain { from: q, x, steps: n });
            }
            let guess = chart.center + u / chart.multiplier;
            let xp = self.preimage(x, guess)?;
            if (xp - x).abs() <= 4.0 * f64::EPSILON * 1.0_f64.max(x.abs()) {
                return Err(LinearizeError::DoesNotConnect {
                    from: q,
                    toward: chart.center,
                    steps: n,
                });
            }
            acc = compose3(invert3(self.triple_at(xp)), acc);
            x = xp;
            n += 1;
        }
    }

    /// Solve f(z) = y by Newton iteration from `guess`, clamped to the
    /// domain. The maps handled here are monotone, so the solution is simple
    /// whenever it exists inside the domain.
    fn preimage(&self, y: f64, guess: f64) -> Result<f64, LinearizeError> {
        let scale = 1.0_f64.max(y.abs());
        let mut z = guess;
        if let Domain::Interval { lo, hi } = self.map.domain() {
            z = z.clamp(lo, hi);
        }
        let mut best = (f64::INFINITY, z);
        for _ in 0..NEWTON_ITERS {
            let j = self.map.jet3(z);
            let r = self.offset(j[0], y);
            if r.abs() < best.0 {
                best = (r.abs(), z);
            }
            if r.abs() <= 1e-15 * scale {
                return Ok(z);
            }
            if j[1] <= 1e-14 {
                break;
            }
            z -= r / j[1];
            if let Domain::Interval { lo, hi } = self.map.domain() {
                z = z.clamp(lo, hi);
            }
        }
        if best.0 <= 1e-12 * scale {
            Ok(best.1)
        } else {
            Err(LinearizeError::NoPreimage { near: y })
        }
    }

    /// Chart value at two consecutive transport depths: (entry value, value
    /// one step deeper). Their difference measures how well the linearizing
    /// limit has settled at x.
    fn eval_settled(&self, chart: &KoenigsChart, x: f64) -> Result<(f64, f64), LinearizeError> {
        if chart.attracting() {
            let (xe, _, n) = self.forward(chart, x, ENTER_VALUE)?;
            let v0 = chart.multiplier.powi(-(n as i32)) * chart.local(self.offset(xe, chart.center));
            let xd = self.map.eval(xe);
            let v1 =
                chart.multiplier.powi(-(n as i32) - 1) * chart.local(self.offset(xd, chart.center));
            Ok((v0, v1))
        } else {
            let (xe, _, n, _) = self.backward(chart, x, ENTER_VALUE)?;
            let u = self.offset(xe, chart.center);
            let v0 = chart.multiplier.powi(n as i32) * chart.local(u);
            let xd = self.preimage(xe, chart.center + u / chart.multiplier)?;
            let v1 =
                chart.multiplier.powi(n as i32 + 1) * chart.local(self.offset(xd, chart.center));
            Ok((v0, v1))
        }
    }

    /// Grow the validity radius outward until a certificate fails, the
    /// domain runs out, or the orbit samples stop connecting.
    fn certify(&self, chart: &mut KoenigsChart) -> Result<(), LinearizeError> {
        let cap = match self.map.domain() {
            Domain::Circle { length } => length / 2.0,
            Domain::Interval { lo, hi } => (chart.center - lo).min(hi - chart.center),
        };
        if cap <= 0.0 {
            return Err(LinearizeError::NoValidity {
                center: chart.center,
                why: "the point sits on the domain boundary".into(),
            });
        }
        let mut r = cap.min(1e-3);
        let mut sup;
        let mut shrinks = 0;
        loop {
            match self.sample_residual(chart, r) {
                Ok(s) => {
                    sup = s;
                    break;
                }
                Err(e) => {
                    shrinks += 1;
                    if shrinks > 24 {
                        return Err(LinearizeError::NoValidity {
                            center: chart.center,
                            why: e.to_string(),
                        });
                    }
                    r /= 4.0;
                }
            }
        }
        while r < cap {
            let next = (r * 4.0).min(cap);
            match self.sample_residual(chart, next) {
                Ok(s) => {
                    r = next;
                    sup = s;
                }
                Err(_) => {
                    // the jump was ×4; half of it may still certify
                    let half = (r * 2.0).min(cap);
                    if half > r {
                        if let Ok(s) = self.sample_residual(chart, half) {
                            r = half;
                            sup = s;
                        }
                    }
                    break;
                }
            }
        }
        chart.radius = r;
        chart.residual = sup;
        Ok(())
    }

    /// Check the chart on 2·SAMPLES points spread over |x − c| ≤ r: each must
    /// connect, settle, and satisfy the conjugacy identity ψ(f(x)) = λψ(x)
    /// to within the working tolerance. Returns the largest defect seen.
    fn sample_residual(&self, chart: &KoenigsChart, r: f64) -> Result<f64, LinearizeError> {
        let mut sup = 0.0f64;
        for i in 1..=SAMPLES {
            let u = r * i as f64 / SAMPLES as f64;
            for side in [-1.0, 1.0] {
                let x = chart.center + side * u;
                if !self.contains(x) {
                    continue;
                }
                let (v0, v1) = self.eval_settled(chart, x)?;
                if (v1 - v0).abs() > STABILIZE_TOL * 1.0_f64.max(v0.abs()) {
                    return Err(LinearizeError::NoValidity {
                        center: chart.center,
                        why: format!("linearizing limit has not settled at x = {x}"),
                    });
                }
                let fx = self.map.eval(x);
                let psi_fx = self.eval(chart, fx)?;
                let defect = (psi_fx - chart.multiplier * v1).abs()
                    / 1.0_f64.max((chart.multiplier * v1).abs());
                if defect > self.tol {
                    return Err(LinearizeError::NoValidity {
                        center: chart.center,
                        why: format!("conjugacy defect {defect:.3e} at x = {x}"),
                    });
                }
                sup = sup.max(defect);
            }
        }
        Ok(sup)
    }
}
