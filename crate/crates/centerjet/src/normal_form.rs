//! Polynomial normal form for germs with one neutral center direction: strip
//! every monomial that is not part of the skew model shape
//! `(F_c(x), Aˢ(x)y, Aᵘ(x)z)` by solving homological equations, one degree at
//! a time.
//!
//! A [`MultiJet`] is a polynomial map germ in the variables `(x, y₁…, z₁…)`
//! fixing the origin, with exact rational coefficients.  When its linear part
//! is diagonal with a center multiplier of exactly 1, stable multipliers
//! strictly inside and unstable multipliers strictly outside the unit circle,
//! [`normal_form_reduce`] conjugates away every monomial the model shape has
//! no slot for.  Removing the coefficient `c` of a degree-`m` monomial `w^e`
//! from coordinate `j` costs a polynomial change of variables with the same
//! monomial and coefficient `c / (λ^e − λ_j)`; the denominator is an exact
//! rational number, and the reduction refuses (naming the offending relation)
//! whenever it comes within a declared gap of zero — those are the resonances
//! where the model shape genuinely cannot be reached.
//!
//! Everything is exact, so the round trip `h ∘ g ∘ h⁻¹` reproduces the input
//! identically through the working degree.

use crate::jet::{Jet, Q};
use crate::takens::{qf, MatPoly, QMat, TakensError, TakensMap};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;

type Terms = BTreeMap<Vec<u8>, Q>;

/// Polynomial map germ fixing the origin of `(x, y₁…y_ds, z₁…z_du)`, one
/// exponent-indexed coefficient table per output coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiJet {
    ds: usize,
    du: usize,
    coords: Vec<Terms>,
}

fn degree(expo: &[u8]) -> usize {
    expo.iter().map(|&e| e as usize).sum()
}

fn term_mul(a: &Terms, b: &Terms, k: usize) -> Terms {
    let mut out = Terms::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            if degree(ea) + degree(eb) > k {
                continue;
            }
            let expo: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let c = ca * cb;
            let slot = out.entry(expo).or_insert_with(Q::zero);
            *slot = &*slot + &c;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

impl MultiJet {
    pub fn zero(ds: usize, du: usize) -> Self {
        let nv = 1 + ds + du;
        MultiJet {
            ds,
            du,
            coords: vec![Terms::new(); nv],
        }
    }

    pub fn identity(ds: usize, du: usize) -> Self {
        let mut m = MultiJet::zero(ds, du);
        let nv = m.nvars();
        for i in 0..nv {
            let mut e = vec![0u8; nv];
            e[i] = 1;
            m.coords[i].insert(e, Q::one());
        }
        m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.ds, self.du)
    }

    pub fn nvars(&self) -> usize {
        1 + self.ds + self.du
    }

    /// Set one coefficient.  Constant terms are rejected — these are germs
    /// fixing the origin, so the zero exponent has no slot.
    pub fn set(&mut self, coord: usize, expo: &[u8], v: Q) {
        assert_eq!(expo.len(), self.nvars(), "exponent arity");
        assert!(degree(expo) > 0, "germs fix the origin; no constant terms");
        if v.is_zero() {
            self.coords[coord].remove(expo);
        } else {
            self.coords[coord].insert(expo.to_vec(), v);
        }
    }

    pub fn term(&self, coord: usize, expo: &[u8]) -> Q {
        self.coords[coord].get(expo).cloned().unwrap_or_else(Q::zero)
    }

    /// Iterate `(coordinate, exponent, coefficient)` over all stored terms.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &Vec<u8>, &Q)> {
        self.coords
            .iter()
            .enumerate()
            .flat_map(|(j, t)| t.iter().map(move |(e, c)| (j, e, c)))
    }

    pub fn truncate(&self, k: usize) -> MultiJet {
        let mut out = self.clone();
        for t in out.coords.iter_mut() {
            t.retain(|e, _| degree(e) <= k);
        }
        out
    }

    pub fn add(&self, o: &MultiJet) -> MultiJet {
        let mut out = self.clone();
        for (j, t) in o.coords.iter().enumerate() {
            for (e, c) in t {
                let slot = out.coords[j].entry(e.clone()).or_insert_with(Q::zero);
                *slot = &*slot + c;
            }
            out.coords[j].retain(|_, c| !c.is_zero());
        }
        out
    }

    pub fn sub(&self, o: &MultiJet) -> MultiJet {
        let mut neg = o.clone();
        for t in neg.coords.iter_mut() {
            for c in t.values_mut() {
                *c = -&*c;
            }
        }
        self.add(&neg)
    }

    /// Linear part as an exact matrix (rows = output coordinates).
    pub fn linear_matrix(&self) -> QMat {
        let nv = self.nvars();
        let mut m = QMat::zeros(nv, nv);
        for (j, t) in self.coords.iter().enumerate() {
            for (e, c) in t {
                if degree(e) == 1 {
                    let i = e.iter().position(|&x| x == 1).unwrap();
                    m.set(j, i, c.clone());
                }
            }
        }
        m
    }

    /// `self ∘ inner`, truncated at total degree `k`.  Both germs fix the
    /// origin, so the composition does too.
    pub fn compose(&self, inner: &MultiJet, k: usize) -> MultiJet {
        assert_eq!(self.dims(), inner.dims(), "variable layout");
        let nv = self.nvars();
        // powers[i][p] = (inner coordinate i)^p, truncated
        let mut powers: Vec<Vec<Terms>> = inner
            .coords
            .iter()
            .map(|t| {
                let mut one = Terms::new();
                one.insert(vec![0u8; nv], Q::one());
                vec![one, t.clone()]
            })
            .collect();
        let mut out = MultiJet::zero(self.ds, self.du);
        for (j, t) in self.coords.iter().enumerate() {
            for (e, c) in t {
                if degree(e) > k {
                    continue;
                }
                let mut prod = Terms::new();
                prod.insert(vec![0u8; nv], c.clone());
                for (i, &pow) in e.iter().enumerate() {
                    let pow = pow as usize;
                    if pow == 0 {
                        continue;
                    }
                    while powers[i].len() <= pow {
                        let next = term_mul(powers[i].last().unwrap(), &powers[i][1], k);
                        powers[i].push(next);
                    }
                    prod = term_mul(&prod, &powers[i][pow], k);
                    if prod.is_empty() {
                        break;
                    }
                }
                for (e, c) in prod {
                    let slot = out.coords[j].entry(e).or_insert_with(Q::zero);
                    *slot = &*slot + &c;
                }
            }
        }
        for t in out.coords.iter_mut() {
            t.retain(|_, c| !c.is_zero());
        }
        out
    }

    /// Compositional inverse through total degree `k`: exact linear solve for
    /// the linear part, then the contraction `G ← L⁻¹(id − H∘G)` where `H` is
    /// the higher-order part — each pass fixes one more degree.
    pub fn inverse(&self, k: usize) -> Result<MultiJet, TakensError> {
        let linv = self.linear_matrix().inverse().ok_or_else(|| {
            TakensError::NormalFormShape("an invertible linear part".into())
        })?;
        let nv = self.nvars();
        let mut linv_mj = MultiJet::zero(self.ds, self.du);
        for j in 0..nv {
            for i in 0..nv {
                let c = linv.get(j, i);
                if !c.is_zero() {
                    let mut e = vec![0u8; nv];
                    e[i] = 1;
                    linv_mj.coords[j].insert(e, c.clone());
                }
            }
        }
        let mut higher = self.truncate(k);
        for t in higher.coords.iter_mut() {
            t.retain(|e, _| degree(e) > 1);
        }
        let ident = MultiJet::identity(self.ds, self.du);
        let mut g = linv_mj.clone();
        for _ in 0..k {
            let hg = higher.compose(&g, k);
            g = linv_mj.compose(&ident.sub(&hg), k);
        }
        Ok(g)
    }
}

fn var_name(i: usize, ds: usize, du: usize) -> String {
    if i == 0 {
        "x".into()
    } else if i <= ds {
        if ds == 1 {
            "y".into()
        } else {
            format!("y{i}")
        }
    } else if du == 1 {
        "z".into()
    } else {
        format!("z{}", i - ds)
    }
}

fn monomial_name(expo: &[u8], ds: usize, du: usize) -> String {
    let mut parts = Vec::new();
    for (i, &e) in expo.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = var_name(i, ds, du);
        if e == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join("·")
}

/// Is this monomial part of the model shape?  Center line: pure powers of
/// `x`.  Stable lines: `x^k·y_j`.  Unstable lines: `x^k·z_j`.
fn allowed(coord: usize, expo: &[u8], ds: usize) -> bool {
    let ysum: usize = expo[1..1 + ds].iter().map(|&e| e as usize).sum();
    let zsum: usize = expo[1 + ds..].iter().map(|&e| e as usize).sum();
    if coord == 0 {
        ysum == 0 && zsum == 0
    } else if coord <= ds {
        zsum == 0 && ysum == 1
    } else {
        ysum == 0 && zsum == 1
    }
}

/// The outcome of a reduction: the polynomial change of variables `h`, the
/// reduced jet `g = h⁻¹ ∘ f ∘ h`, and the same data repackaged as a skew
/// model over the unit polyball.
#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub change: MultiJet,
    pub normal_jet: MultiJet,
    pub map: TakensMap,
}

/// Conjugate `f` into the model shape degree by degree, through total degree
/// `k_max`.  Divisors closer than `gap` to zero are resonances and abort the
/// reduction with the offending relation spelled out.
pub fn normal_form_reduce(
    f: &MultiJet,
    k_max: usize,
    gap: f64,
) -> Result<NormalFormResult, TakensError> {
    if k_max == 0 {
        return Err(TakensError::NormalFormShape(
            "a working degree of at least 1".into(),
        ));
    }
    let (ds, du) = f.dims();
    let nv = f.nvars();
    let lin = f.linear_matrix();
    for j in 0..nv {
        for i in 0..nv {
            if i != j && !lin.get(j, i).is_zero() {
                return Err(TakensError::NormalFormShape(format!(
                    "a diagonal linear part; found {} in the {} coordinate",
                    var_name(i, ds, du),
                    var_name(j, ds, du)
                )));
            }
        }
    }
    let lambda: Vec<Q> = (0..nv).map(|i| lin.get(i, i).clone()).collect();
    if !lambda[0].is_one() {
        return Err(TakensError::NormalFormShape(format!(
            "a center multiplier of exactly 1, got {}",
            lambda[0]
        )));
    }
    let one = Q::one();
    for (i, l) in lambda.iter().enumerate().skip(1) {
        if i <= ds {
            if l.is_zero() || l.abs() >= one {
                return Err(TakensError::NormalFormShape(format!(
                    "stable multipliers strictly inside the unit circle, got {} for {}",
                    l,
                    var_name(i, ds, du)
                )));
            }
        } else if l.abs() <= one {
            return Err(TakensError::NormalFormShape(format!(
                "unstable multipliers strictly outside the unit circle, got {} for {}",
                l,
                var_name(i, ds, du)
            )));
        }
    }

    let mut g = f.truncate(k_max);
    let mut change = MultiJet::identity(ds, du);
    for m in 2..=k_max {
        let mut h = MultiJet::identity(ds, du);
        let mut any = false;
        for (j, expo, c) in g.terms() {
            if degree(expo) != m || allowed(j, expo, ds) {
                continue;
            }
            let mut lam_e = Q::one();
            for (i, &e) in expo.iter().enumerate() {
                for _ in 0..e {
                    lam_e = &lam_e * &lambda[i];
                }
            }
            let denom = &lam_e - &lambda[j];
            if qf(&denom.abs()) <= gap {
                return Err(TakensError::Resonance {
                    relation: format!(
                        "the coefficient of {} in the {} coordinate needs the divisor \
                         λ^e − λ = {} − {} = {}",
                        monomial_name(expo, ds, du),
                        var_name(j, ds, du),
                        lam_e,
                        lambda[j],
                        denom
                    ),
                    gap,
                });
            }
            h.coords[j].insert(expo.clone(), c / &denom);
            any = true;
        }
        if any {
            let hinv = h.inverse(k_max)?;
            g = hinv.compose(&g.compose(&h, k_max), k_max);
            change = change.compose(&h, k_max);
        }
    }

    // Repackage the reduced jet as a skew model.  By construction only the
    // model-shape monomials are left, so this extraction is lossless.
    debug_assert!(g.terms().all(|(j, e, _)| allowed(j, e, ds)));
    let mut center = vec![Q::zero(); k_max];
    for (e, c) in &g.coords[0] {
        center[degree(e) - 1] = c.clone();
    }
    let center = Jet::new(k_max, center)?;
    let block = |offset: usize, d: usize| -> Result<MatPoly, TakensError> {
        let top = k_max.saturating_sub(1);
        let mut mats = vec![QMat::zeros(d, d); top + 1];
        for i in 0..d {
            for (e, c) in &g.coords[offset + i] {
                let k = e[0] as usize;
                let j = (0..d).find(|&j| e[offset + j] == 1).unwrap();
                mats[k].set(i, j, c.clone());
            }
        }
        MatPoly::new(Q::zero(), mats)
    };
    let stable = block(1, ds)?;
    let unstable = block(1 + ds, du)?;
    let map = TakensMap::new(
        (Q::one(), Q::one(), Q::one()),
        center,
        stable,
        unstable,
    )?;
    Ok(NormalFormResult {
        change,
        normal_jet: g,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{q, qi};

    fn e(parts: &[(usize, u8)], nv: usize) -> Vec<u8> {
        let mut out = vec![0u8; nv];
        for &(i, p) in parts {
            out[i] = p;
        }
        out
    }

    #[test]
    fn already_reduced_input_needs_no_change() {
        // (x + x², y/2 + xy, 2z + x²z) is the model shape on the nose
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(1));
        f.set(0, &e(&[(0, 2)], 3), qi(1));
        f.set(1, &e(&[(1, 1)], 3), q(1, 2));
        f.set(1, &e(&[(0, 1), (1, 1)], 3), q(1, 4));
        f.set(2, &e(&[(2, 1)], 3), qi(2));
        f.set(2, &e(&[(0, 2), (2, 1)], 3), q(1, 3));

        let out = normal_form_reduce(&f, 3, 1e-6).unwrap();
        assert_eq!(out.change, MultiJet::identity(1, 1));
        assert_eq!(out.normal_jet, f);
        assert_eq!(out.map.center(), &Jet::new(3, vec![qi(1), qi(1)]).unwrap());
        assert_eq!(out.map.stable().coeff(0), QMat::from_rows(vec![vec![q(1, 2)]]).unwrap());
        assert_eq!(out.map.stable().coeff(1), QMat::from_rows(vec![vec![q(1, 4)]]).unwrap());
        assert_eq!(out.map.unstable().coeff(2), QMat::from_rows(vec![vec![q(1, 3)]]).unwrap());
    }

    #[test]
    fn removable_terms_are_removed_and_the_change_round_trips() {
        // (x + x², y/2 + x²): the pure x² in the stable line is not part of
        // the shape, and 1 − 1/2 keeps the divisor safely away from zero
        let mut f = MultiJet::zero(1, 0);
        f.set(0, &e(&[(0, 1)], 2), qi(1));
        f.set(0, &e(&[(0, 2)], 2), qi(1));
        f.set(1, &e(&[(1, 1)], 2), q(1, 2));
        f.set(1, &e(&[(0, 2)], 2), qi(1));

        let out = normal_form_reduce(&f, 3, 1e-6).unwrap();

        // the reduced stable line is pure: y/2, nothing else through degree 3
        let mut expected = MultiJet::zero(1, 0);
        expected.set(0, &e(&[(0, 1)], 2), qi(1));
        expected.set(0, &e(&[(0, 2)], 2), qi(1));
        expected.set(1, &e(&[(1, 1)], 2), q(1, 2));
        assert_eq!(out.normal_jet, expected);

        // degree 2 contributes y + 2x², whose conjugation leaves −4x³ for
        // the degree-3 pass to clean with an extra −8x³
        let mut change = MultiJet::zero(1, 0);
        change.set(0, &e(&[(0, 1)], 2), qi(1));
        change.set(1, &e(&[(1, 1)], 2), qi(1));
        change.set(1, &e(&[(0, 2)], 2), qi(2));
        change.set(1, &e(&[(0, 3)], 2), qi(-8));
        assert_eq!(out.change, change);

        // exact round trip: h ∘ g ∘ h⁻¹ = f through the working degree
        let hinv = out.change.inverse(3).unwrap();
        let back = out.change.compose(&out.normal_jet.compose(&hinv, 3), 3);
        assert_eq!(back, f.truncate(3));

        // the degenerate unstable block (no z directions) still packages up
        assert_eq!(out.map.dims(), (1, 1, 0));
        assert_eq!(out.map.stable().coeff(0), QMat::from_rows(vec![vec![q(1, 2)]]).unwrap());
    }

    #[test]
    fn resonant_divisors_are_named_not_divided() {
        // λ_y·λ_z = 1 = λ_x: the yz term in the center line cannot be removed
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(1));
        f.set(0, &e(&[(1, 1), (2, 1)], 3), qi(1));
        f.set(1, &e(&[(1, 1)], 3), q(1, 2));
        f.set(2, &e(&[(2, 1)], 3), qi(2));

        match normal_form_reduce(&f, 2, 1e-6) {
            Err(TakensError::Resonance { relation, .. }) => {
                assert!(relation.contains("y·z"), "{relation}");
                assert!(relation.contains("x coordinate"), "{relation}");
            }
            other => panic!("expected a resonance, got {other:?}"),
        }
    }

    #[test]
    fn shape_preconditions_are_enforced() {
        // off-diagonal linear term
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(1));
        f.set(1, &e(&[(1, 1)], 3), q(1, 2));
        f.set(1, &e(&[(0, 1)], 3), q(1, 3));
        f.set(2, &e(&[(2, 1)], 3), qi(2));
        assert!(matches!(
            normal_form_reduce(&f, 2, 1e-6),
            Err(TakensError::NormalFormShape(m)) if m.contains("diagonal")
        ));

        // center multiplier must be exactly 1
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(2));
        f.set(1, &e(&[(1, 1)], 3), q(1, 2));
        f.set(2, &e(&[(2, 1)], 3), qi(2));
        assert!(matches!(
            normal_form_reduce(&f, 2, 1e-6),
            Err(TakensError::NormalFormShape(m)) if m.contains("center multiplier")
        ));

        // a neutral "stable" multiplier is neither stable nor unstable
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(1));
        f.set(1, &e(&[(1, 1)], 3), qi(1));
        f.set(2, &e(&[(2, 1)], 3), qi(2));
        assert!(matches!(
            normal_form_reduce(&f, 2, 1e-6),
            Err(TakensError::NormalFormShape(m)) if m.contains("inside the unit circle")
        ));
    }

    #[test]
    fn multijet_inverse_round_trips() {
        let mut h = MultiJet::zero(1, 0);
        h.set(0, &e(&[(0, 1)], 2), qi(1));
        h.set(0, &e(&[(1, 2)], 2), qi(1)); // x + y²
        h.set(1, &e(&[(1, 1)], 2), qi(1));
        h.set(1, &e(&[(0, 3)], 2), qi(1)); // y + x³

        let hinv = h.inverse(4).unwrap();
        let ident = MultiJet::identity(1, 0);
        assert_eq!(h.compose(&hinv, 4), ident);
        assert_eq!(hinv.compose(&h, 4), ident);
    }

    #[test]
    fn mixed_quadratics_across_blocks_reduce_cleanly() {
        // y² in the center line, xz in the stable line, y·z in the unstable
        // line: all removable, with divisors 1/4 − 1, 1/2·1 − ... etc.
        let mut f = MultiJet::zero(1, 1);
        f.set(0, &e(&[(0, 1)], 3), qi(1));
        f.set(0, &e(&[(1, 2)], 3), qi(1));
        f.set(1, &e(&[(1, 1)], 3), q(1, 2));
        f.set(1, &e(&[(0, 1), (2, 1)], 3), qi(1));
        f.set(2, &e(&[(2, 1)], 3), qi(3));
        f.set(2, &e(&[(1, 1), (2, 1)], 3), qi(1));

        let out = normal_form_reduce(&f, 2, 1e-6).unwrap();
        assert_eq!(out.normal_jet.term(0, &e(&[(1, 2)], 3)), qi(0));
        assert_eq!(out.normal_jet.term(1, &e(&[(0, 1), (2, 1)], 3)), qi(0));
        assert_eq!(out.normal_jet.term(2, &e(&[(1, 1), (2, 1)], 3)), qi(0));

        // divisors: λ_y² − λ_x = 1/4 − 1 = −3/4 → coefficient −4/3, etc.
        assert_eq!(out.change.term(0, &e(&[(1, 2)], 3)), q(-4, 3));

        let hinv = out.change.inverse(2).unwrap();
        let back = out.change.compose(&out.normal_jet.compose(&hinv, 2), 2);
        assert_eq!(back, f.truncate(2));
    }
}
