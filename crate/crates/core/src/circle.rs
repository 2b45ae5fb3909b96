//! Points of the shifted circle `q + 2πk/n` with exact rational `q`, the
//! sector relations `S_j`, cuts, sector unfolding into coloured chains,
//! realizability of abstract local-order constraints and the Ṡ(2) graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{FraisseError, Result};
use crate::structure::{is_partial_iso, permute, Elem, FiniteStructure, Signature};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| FraisseError::Parse(format!("bad numerator in `{s}`")))?;
    let d: BigInt = d.parse().map_err(|_| FraisseError::Parse(format!("bad denominator in `{s}`")))?;
    if d.is_zero() {
        return Err(FraisseError::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(n, d))
}

pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Partial sum of the arctangent series for `1/x` with `terms` terms.
fn atan_inv_partial(x: i64, terms: usize) -> BigRational {
    let mut sum = BigRational::zero();
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut pow = x.clone();
    for k in 0..terms {
        let term = BigRational::new(BigInt::one(), BigInt::from(2 * k as i64 + 1) * &pow);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        pow *= &x2;
    }
    sum
}

/// Rational enclosure of π. Level 0 is `[223/71, 22/7]`; level `L ≥ 1` uses
/// `L` and `L + 1` terms of Machin's formula, intersected with level 0.
pub fn pi_enclosure(level: usize) -> (BigRational, BigRational) {
    let seed = (rat(223, 71), rat(22, 7));
    if level == 0 {
        return seed;
    }
    let a = atan_inv_partial(5, level);
    let a2 = atan_inv_partial(5, level + 1);
    let b = atan_inv_partial(239, level);
    let b2 = atan_inv_partial(239, level + 1);
    let (a_lo, a_hi) = if a < a2 { (a, a2) } else { (a2, a) };
    let (b_lo, b_hi) = if b < b2 { (b, b2) } else { (b2, b) };
    let sixteen = rat(16, 1);
    let four = rat(4, 1);
    let lo = &sixteen * &a_lo - &four * &b_hi;
    let hi = &sixteen * &a_hi - &four * &b_lo;
    (lo.max(seed.0), hi.min(seed.1))
}

/// The real number `r + π s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiNum {
    pub r: BigRational,
    pub s: BigRational,
}

impl PiNum {
    pub fn new(r: BigRational, s: BigRational) -> Self {
        PiNum { r, s }
    }

    pub fn zero() -> Self {
        PiNum { r: BigRational::zero(), s: BigRational::zero() }
    }

    pub fn pi_multiple(s: BigRational) -> Self {
        PiNum { r: BigRational::zero(), s }
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero() && self.s.is_zero()
    }

    /// Exact sign; π is irrational, so a quantity with `s ≠ 0` is never zero
    /// and the interval refinement terminates.
    pub fn sign(&self) -> Ordering {
        if self.s.is_zero() {
            return self.r.cmp(&BigRational::zero());
        }
        for level in 0.. {
            let (lo, hi) = pi_enclosure(level);
            let (a, b) = if self.s.is_positive() {
                (&self.r + &self.s * &lo, &self.r + &self.s * &hi)
            } else {
                (&self.r + &self.s * &hi, &self.r + &self.s * &lo)
            };
            if a.is_positive() {
                return Ordering::Greater;
            }
            if b.is_negative() {
                return Ordering::Less;
            }
        }
        unreachable!()
    }

    pub fn sub(&self, o: &PiNum) -> PiNum {
        PiNum { r: &self.r - &o.r, s: &self.s - &o.s }
    }

    pub fn add(&self, o: &PiNum) -> PiNum {
        PiNum { r: &self.r + &o.r, s: &self.s + &o.s }
    }

    pub fn scale(&self, c: &BigRational) -> PiNum {
        PiNum { r: &self.r * c, s: &self.s * c }
    }

    pub fn cmp_to(&self, o: &PiNum) -> Ordering {
        self.sub(o).sign()
    }

    pub fn to_f64(&self) -> f64 {
        self.r.to_f64().unwrap_or(f64::NAN) + std::f64::consts::PI * self.s.to_f64().unwrap_or(f64::NAN)
    }

    /// Representative in `[0, 2π)`.
    pub fn normalized(&self) -> PiNum {
        let two_pi = PiNum::pi_multiple(rat(2, 1));
        let est = (self.to_f64() / (2.0 * std::f64::consts::PI)).floor();
        let mut m = BigInt::from(est as i64);
        loop {
            let shifted = self.sub(&two_pi.scale(&BigRational::from_integer(m.clone())));
            if shifted.sign() == Ordering::Less {
                m -= 1;
            } else if shifted.cmp_to(&two_pi) != Ordering::Less {
                m += 1;
            } else {
                return shifted;
            }
        }
    }

    /// A rational strictly between `self` and `other` (assumed `self < other`).
    pub fn rational_between(&self, other: &PiNum) -> BigRational {
        let mid = self.add(other).scale(&rat(1, 2));
        for level in 0.. {
            let (lo, hi) = pi_enclosure(level);
            let pi_mid = (lo + hi) / rat(2, 1);
            let q = &mid.r + &mid.s * &pi_mid;
            let qn = PiNum::new(q.clone(), BigRational::zero());
            if self.cmp_to(&qn) == Ordering::Less && qn.cmp_to(other) == Ordering::Less {
                return q;
            }
        }
        unreachable!()
    }
}

/// The point `q + 2πk/n` of the circle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint {
    pub q: BigRational,
    pub k: u32,
    pub n: u32,
}

impl CirclePoint {
    pub fn new(q: BigRational, k: u32, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(FraisseError::pre("need at least 2 sectors"));
        }
        if k >= n {
            return Err(FraisseError::pre(format!("sector shift {k} out of range for n={n}")));
        }
        Ok(CirclePoint { q, k, n })
    }

    pub fn at(q: BigRational, n: u32) -> Self {
        CirclePoint { q, k: 0, n }
    }

    /// `v^{↑j}`: rotation by `2πj/n`.
    pub fn up(&self, j: u32) -> CirclePoint {
        CirclePoint { q: self.q.clone(), k: (self.k + j) % self.n, n: self.n }
    }

    pub fn angle(&self) -> PiNum {
        PiNum::new(self.q.clone(), rat(2 * self.k as i64, self.n as i64))
    }

    /// Whether the two points differ by a rotation through a multiple of `2π/n`.
    pub fn shift_related(&self, other: &CirclePoint) -> bool {
        self.q == other.q
    }
}

/// Anticlockwise angle from `u` to `v`, in `[0, 2π)`.
pub fn alpha(u: &CirclePoint, v: &CirclePoint) -> PiNum {
    v.angle().sub(&u.angle()).normalized()
}

fn sector_bound(j: u32, n: u32) -> PiNum {
    PiNum::pi_multiple(rat(2 * j as i64, n as i64))
}

/// Sign of `α(u, v) − 2πj/n`.
pub fn angle_compare(u: &CirclePoint, v: &CirclePoint, j: u32) -> Result<Ordering> {
    if u.n != v.n {
        return Err(FraisseError::pre("points live on different sector counts"));
    }
    Ok(alpha(u, v).cmp_to(&sector_bound(j, u.n)))
}

/// The `j` with `S_j(u, v)`, or `None` when the angle is a multiple of `2π/n`.
pub fn sector_of(u: &CirclePoint, v: &CirclePoint) -> Option<u32> {
    let a = alpha(u, v);
    for j in 0..u.n {
        let lo = a.cmp_to(&sector_bound(j, u.n));
        if lo == Ordering::Equal {
            return None;
        }
        if lo == Ordering::Greater && a.cmp_to(&sector_bound(j + 1, u.n)) == Ordering::Less {
            return Some(j);
        }
    }
    None
}

pub fn local_order_signature(n: u32) -> Arc<Signature> {
    let rels: Vec<(String, usize)> = (0..n).map(|j| (format!("S{j}"), 2)).collect();
    Signature::new(rels, vec![]).expect("distinct names")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalOrderConfig {
    pub n: u32,
    pub points: Vec<CirclePoint>,
}

impl LocalOrderConfig {
    pub fn new(n: u32, points: Vec<CirclePoint>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &points {
            if p.n != n {
                return Err(FraisseError::pre("point with a different sector count"));
            }
            if !seen.insert(p.clone()) {
                return Err(FraisseError::pre("repeated point"));
            }
        }
        Ok(LocalOrderConfig { n, points })
    }

    /// Closure under all shifts `↑k`, ascending by angle.
    pub fn hat(&self) -> Vec<CirclePoint> {
        let mut all: BTreeSet<CirclePoint> = BTreeSet::new();
        for p in &self.points {
            for j in 0..self.n {
                all.insert(p.up(j));
            }
        }
        let mut v: Vec<(PiNum, CirclePoint)> = all.into_iter().map(|p| (p.angle().normalized(), p)).collect();
        v.sort_by(|a, b| a.0.cmp_to(&b.0));
        v.into_iter().map(|(_, p)| p).collect()
    }
}

/// The induced `L°_n`-structure; element `i` is `c.points[i]`.
pub fn eval_relation(c: &LocalOrderConfig) -> FiniteStructure {
    let mut s = FiniteStructure::on(local_order_signature(c.n), 0..c.points.len() as Elem);
    for (i, u) in c.points.iter().enumerate() {
        for (k, v) in c.points.iter().enumerate() {
            if i != k {
                if let Some(j) = sector_of(u, v) {
                    s.put(j as usize, &[i as Elem, k as Elem]);
                }
            }
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub from: CirclePoint,
    pub to: CirclePoint,
}

/// All cuts of the shift closure, anticlockwise from the least angle.
pub fn cuts_of_hat(c: &LocalOrderConfig) -> Result<Vec<Cut>> {
    if c.points.is_empty() {
        return Err(FraisseError::pre("cuts need a nonempty configuration"));
    }
    let hat = c.hat();
    Ok((0..hat.len())
        .map(|i| Cut { from: hat[i].clone(), to: hat[(i + 1) % hat.len()].clone() })
        .collect())
}

/// A rational-argument point strictly inside the open arc of `cut`.
pub fn point_in_cut(cut: &Cut) -> CirclePoint {
    let lo = cut.from.angle();
    let width = alpha(&cut.from, &cut.to);
    let width = if width.is_zero() { PiNum::pi_multiple(rat(2, 1)) } else { width };
    let hi = lo.add(&width);
    let q = lo.rational_between(&hi);
    let n = cut.from.n;
    let p = CirclePoint::at(q, n);
    // keep q in a canonical window so equal angles give equal points
    let norm = p.angle().normalized();
    debug_assert!(norm.s.is_zero());
    CirclePoint::at(norm.r, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionRecipe {
    pub b0: CirclePoint,
    pub b1: CirclePoint,
    pub verified: bool,
}

fn shifted_image(
    src: &LocalOrderConfig,
    tgt: &LocalOrderConfig,
    f: &BTreeMap<Elem, Elem>,
    p: &CirclePoint,
) -> Option<CirclePoint> {
    let (i, base) = src.points.iter().enumerate().find(|(_, b)| b.q == p.q)?;
    let shift = (p.k + src.n - base.k) % src.n;
    let img = f.get(&(i as Elem))?;
    Some(tgt.points[*img as usize].up(shift))
}

/// Extends the partial isomorphism `f: src → tgt` by a point of `cut` mapped to
/// a point of `image_cut`, and re-verifies the extended map.
pub fn extend_in_cut(
    src: &LocalOrderConfig,
    tgt: &LocalOrderConfig,
    f: &BTreeMap<Elem, Elem>,
    cut: &Cut,
    image_cut: &Cut,
) -> Result<ExtensionRecipe> {
    let from = shifted_image(src, tgt, f, &cut.from);
    let to = shifted_image(src, tgt, f, &cut.to);
    if from.as_ref() != Some(&image_cut.from) || to.as_ref() != Some(&image_cut.to) {
        return Err(FraisseError::pre("image cut does not match the image of the cut"));
    }
    let b0 = point_in_cut(cut);
    let b1 = point_in_cut(image_cut);
    let mut s2 = src.clone();
    s2.points.push(b0.clone());
    let mut t2 = tgt.clone();
    t2.points.push(b1.clone());
    let mut map = f.clone();
    map.insert(src.points.len() as Elem, tgt.points.len() as Elem);
    let verified = LocalOrderConfig::new(src.n, s2.points.clone()).is_ok()
        && LocalOrderConfig::new(tgt.n, t2.points.clone()).is_ok()
        && is_partial_iso(&eval_relation(&s2), &eval_relation(&t2), &map);
    Ok(ExtensionRecipe { b0, b1, verified })
}

/// An `n`-coloured finite chain, listed in increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColouredChain {
    pub n: u32,
    /// (configuration index, colour, landed point) in increasing order.
    pub entries: Vec<(Elem, u32, CirclePoint)>,
}

impl ColouredChain {
    pub fn position(&self, id: Elem) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == id)
    }

    pub fn colour(&self, id: Elem) -> Option<u32> {
        self.entries.iter().find(|e| e.0 == id).map(|e| e.1)
    }

    /// `S_j(v, w)` predicted from order and colours.
    pub fn predicted_sector(&self, v: Elem, w: Elem) -> Option<u32> {
        let (pv, pw) = (self.position(v)?, self.position(w)?);
        let (cv, cw) = (self.colour(v)? as i64, self.colour(w)? as i64);
        let n = self.n as i64;
        let j = if pv < pw { cv - cw } else { cv - cw - 1 };
        Some(j.rem_euclid(n) as u32)
    }
}

/// Rotates every point of `c` other than `a` into the sector `⟨a, a^{↑1}⟩`;
/// the rotation index is the colour.
pub fn sector_unfold(a: &CirclePoint, c: &LocalOrderConfig) -> Result<ColouredChain> {
    if a.k != 0 {
        return Err(FraisseError::pre("the base point must have rational argument"));
    }
    let width = sector_bound(1, c.n);
    let mut entries: Vec<(PiNum, Elem, u32, CirclePoint)> = Vec::new();
    for (i, v) in c.points.iter().enumerate() {
        if v == a {
            continue;
        }
        if v.shift_related(a) {
            return Err(FraisseError::pre("point is a sector copy of the base point"));
        }
        let mut placed = None;
        for j in 0..c.n {
            let landed = v.up(j);
            let al = alpha(a, &landed);
            if al.cmp_to(&width) == Ordering::Less {
                placed = Some((al, j, landed));
                break;
            }
        }
        let (al, j, landed) = placed.expect("some shift lands in the first sector");
        entries.push((al, i as Elem, j, landed));
    }
    entries.sort_by(|x, y| x.0.cmp_to(&y.0));
    Ok(ColouredChain { n: c.n, entries: entries.into_iter().map(|(_, i, j, p)| (i, j, p)).collect() })
}

/// Inverse of `sector_unfold` on configurations of rational-argument points.
pub fn sector_fold(chain: &ColouredChain) -> Vec<(Elem, CirclePoint)> {
    chain
        .entries
        .iter()
        .map(|(i, j, p)| (*i, p.up((chain.n - j % chain.n) % chain.n)))
        .collect()
}

/// Whether `f` preserves chain order and colours on its domain.
pub fn chain_map_preserves(chain: &ColouredChain, f: &BTreeMap<Elem, Elem>) -> bool {
    for (&x, &fx) in f {
        if chain.colour(x) != chain.colour(fx) || chain.colour(x).is_none() {
            return false;
        }
        for (&y, &fy) in f {
            if x != y && (chain.position(x) < chain.position(y)) != (chain.position(fx) < chain.position(fy)) {
                return false;
            }
        }
    }
    true
}

/// One refuted branch: an anticlockwise order with a contradictory cycle of
/// difference constraints (`(u, v, c, strict)` meaning `y_u − y_v < c` or `≤ c`,
/// in units of `2π/n`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchRefutation {
    pub order: Vec<Elem>,
    pub cycle: Vec<(Elem, Elem, i64, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Realizability {
    Realized(BTreeMap<Elem, CirclePoint>),
    Unsat(Vec<BranchRefutation>),
}

#[derive(Clone, Debug)]
struct Constraint {
    u: usize,
    v: usize,
    c: i64,
    strict: bool,
}

/// Bellman-Ford on `y_u − y_v ≤ c − ε·strict`. Returns potentials or a
/// negative cycle.
fn solve_difference(nodes: usize, cons: &[Constraint]) -> std::result::Result<Vec<BigRational>, Vec<usize>> {
    let eps = rat(1, nodes as i64 + 1);
    let weight = |k: &Constraint| {
        let c = BigRational::from_integer(BigInt::from(k.c));
        if k.strict {
            c - &eps
        } else {
            c
        }
    };
    let mut dist = vec![BigRational::zero(); nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    let mut last = None;
    for _ in 0..=nodes {
        last = None;
        for (idx, k) in cons.iter().enumerate() {
            // edge v → u with weight w: dist[u] ≤ dist[v] + w
            let cand = &dist[k.v] + weight(k);
            if cand < dist[k.u] {
                dist[k.u] = cand;
                pred[k.u] = Some(idx);
                last = Some(k.u);
            }
        }
        if last.is_none() {
            return Ok(dist);
        }
    }
    let mut x = last.expect("still relaxing");
    for _ in 0..nodes {
        x = cons[pred[x].expect("relaxed node has a predecessor")].v;
    }
    let start = x;
    let mut cycle = Vec::new();
    loop {
        let idx = pred[x].expect("on cycle");
        cycle.push(idx);
        x = cons[idx].v;
        if x == start {
            break;
        }
    }
    cycle.reverse();
    Err(cycle)
}

/// Decides whether an abstract `L°_n`-structure is realized by points of the
/// circle, branching over anticlockwise orders (at most 8 elements).
pub fn circle_realizable(s: &FiniteStructure, n: u32) -> Result<Realizability> {
    if s.signature().relations().len() != n as usize || s.signature().relations().iter().any(|r| r.arity != 2) {
        return Err(FraisseError::SignatureMismatch(format!("expected {n} binary sector relations")));
    }
    let elems = s.elems();
    let m = elems.len();
    if m > 8 {
        return Err(FraisseError::pre("at most 8 points are supported"));
    }
    if m == 0 {
        return Ok(Realizability::Realized(BTreeMap::new()));
    }
    // sector[u][v] = Some(j) when S_j(u, v)
    let mut sector: Vec<Vec<Option<u32>>> = vec![vec![None; m]; m];
    for j in 0..n {
        for t in s.tuples(j as usize) {
            let u = elems.iter().position(|&e| e == t[0]).unwrap();
            let v = elems.iter().position(|&e| e == t[1]).unwrap();
            if u == v {
                return Err(FraisseError::pre("sector relations must be irreflexive"));
            }
            if sector[u][v].is_some() {
                return Err(FraisseError::pre("two sector relations on one ordered pair"));
            }
            sector[u][v] = Some(j);
        }
    }
    for u in 0..m {
        for v in 0..m {
            if u == v {
                continue;
            }
            match (sector[u][v], sector[v][u]) {
                (Some(j), Some(j2)) if j2 == n - 1 - j => {}
                (None, None) => {}
                _ => {
                    return Err(FraisseError::pre(format!(
                        "inconsistent converse relations between {} and {}",
                        elems[u], elems[v]
                    )))
                }
            }
        }
    }
    let n_i = n as i64;
    let unrelated: Vec<(usize, usize)> =
        (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).filter(|&(u, v)| sector[u][v].is_none()).collect();
    let mut refutations = Vec::new();
    let mut rest: Vec<usize> = (1..m).collect();
    let mut solution: Option<(Vec<usize>, Vec<BigRational>)> = None;
    permute(&mut rest, 0, &mut |perm| {
        if solution.is_some() {
            return;
        }
        let mut order = vec![0usize];
        order.extend_from_slice(perm);
        let mut pos = vec![0usize; m];
        for (i, &x) in order.iter().enumerate() {
            pos[x] = i;
        }
        let mut base = Vec::new();
        for w in order.windows(2) {
            base.push(Constraint { u: w[0], v: w[1], c: 0, strict: true });
        }
        base.push(Constraint { u: order[m - 1], v: order[0], c: n_i, strict: true });
        base.push(Constraint { u: order[0], v: order[m - 1], c: 0, strict: false });
        for u in 0..m {
            for v in 0..m {
                if let Some(j) = sector[u][v] {
                    let wrap = if pos[v] > pos[u] { 0 } else { n_i };
                    // j < y_v − y_u + wrap < j + 1
                    base.push(Constraint { u: v, v: u, c: j as i64 + 1 - wrap, strict: true });
                    base.push(Constraint { u, v, c: wrap - j as i64, strict: true });
                }
            }
        }
        // unrelated pairs sit at an exact multiple of 2π/n; branch over it
        let mut choice = vec![1i64; unrelated.len()];
        loop {
            let mut cons = base.clone();
            for (k, &(u, v)) in unrelated.iter().enumerate() {
                let wrap = if pos[v] > pos[u] { 0 } else { n_i };
                let t = choice[k] - wrap;
                cons.push(Constraint { u: v, v: u, c: t, strict: false });
                cons.push(Constraint { u, v, c: -t, strict: false });
            }
            match solve_difference(m, &cons) {
                Ok(mut y) => {
                    let shift = y[0].clone();
                    for yi in y.iter_mut() {
                        *yi -= &shift;
                    }
                    solution = Some((order.clone(), y));
                    return;
                }
                Err(cycle) => refutations.push(BranchRefutation {
                    order: order.iter().map(|&i| elems[i]).collect(),
                    cycle: cycle
                        .iter()
                        .map(|&i| (elems[cons[i].u], elems[cons[i].v], cons[i].c, cons[i].strict))
                        .collect(),
                }),
            }
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < n_i {
                    break;
                }
                choice[k] = 1;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    });
    let Some((_, y)) = solution else {
        return Ok(Realizability::Unsat(refutations));
    };
    // classes of shift-related points share the rational part
    let mut rep: Vec<usize> = (0..m).collect();
    for &(u, v) in &unrelated {
        let (ru, rv) = (rep[u], rep[v]);
        for r in rep.iter_mut() {
            if *r == rv {
                *r = ru;
            }
        }
    }
    for level in 0.. {
        let (lo, hi) = pi_enclosure(level);
        let pi_mid = (lo + hi) / rat(2, 1);
        let mut points = BTreeMap::new();
        for i in 0..m {
            let r = rep[i];
            let q = &y[r] * rat(2, n_i) * &pi_mid;
            let offset = (&y[i] - &y[r]).to_integer();
            let k = offset.to_i64().expect("small offset").rem_euclid(n_i) as u32;
            points.insert(elems[i], CirclePoint { q, k, n });
        }
        let config = LocalOrderConfig::new(n, points.values().cloned().collect());
        if let Ok(config) = config {
            let got = eval_relation(&config);
            let ids: BTreeMap<Elem, Elem> = points.keys().enumerate().map(|(i, &e)| (i as Elem, e)).collect();
            if got.relabel(&ids).ok().as_ref() == Some(s) {
                return Ok(Realizability::Realized(points));
            }
        }
        if level > 200 {
            return Err(FraisseError::SearchFailed("rational realization did not stabilise".into()));
        }
    }
    unreachable!()
}

/// The Ṡ(2) oriented graph on a configuration closed under `↑1`:
/// `u → v` iff `α(u, v) < π`, antipodes unrelated.
pub fn sdd2_edges(c: &LocalOrderConfig) -> Result<FiniteStructure> {
    if c.n != 2 {
        return Err(FraisseError::pre("Ṡ(2) needs n = 2"));
    }
    let set: BTreeSet<&CirclePoint> = c.points.iter().collect();
    if c.points.iter().any(|p| !set.contains(&p.up(1))) {
        return Err(FraisseError::pre("configuration not closed under ↑1"));
    }
    let mut s = FiniteStructure::on(Signature::of(&[("E", 2)], &[]), 0..c.points.len() as Elem);
    let pi = PiNum::pi_multiple(rat(1, 1));
    for (i, u) in c.points.iter().enumerate() {
        for (k, v) in c.points.iter().enumerate() {
            if i != k && alpha(u, v).cmp_to(&pi) == Ordering::Less {
                s.put(0, &[i as Elem, k as Elem]);
            }
        }
    }
    Ok(s)
}

/// The map `v ↦ v^{↑1}` as a permutation of configuration indices.
pub fn sdd2_sigma(c: &LocalOrderConfig) -> BTreeMap<Elem, Elem> {
    c.points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let img = p.up(1);
            c.points.iter().position(|x| *x == img).map(|k| (i as Elem, k as Elem))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CircleWitness {
    pub n: u32,
    pub q: BigRational,
    pub a: LocalOrderConfig,
    pub f_a: BTreeMap<Elem, Elem>,
    pub b: LocalOrderConfig,
    pub f_b: BTreeMap<Elem, Elem>,
    /// For each `l`, the cycle plus a point `b` with `S_l(b, a_k)` for all `k`.
    pub obstructions: Vec<FiniteStructure>,
}

/// A rational in `((2π/n)(n−1)/n, 2π/n)`: `2` for n = 2, `19/10` for n = 3,
/// and an enclosure midpoint otherwise.
pub fn witness_angle(n: u32) -> BigRational {
    match n {
        2 => rat(2, 1),
        3 => rat(19, 10),
        _ => {
            let lo = PiNum::pi_multiple(rat(2 * (n as i64 - 1), (n * n) as i64));
            let hi = PiNum::pi_multiple(rat(2, n as i64));
            lo.rational_between(&hi)
        }
    }
}

/// Two partial automorphisms of the local order with no joint embedding:
/// the cyclic shift of `a_k = kq` (k ≤ n) and the identity on one point.
pub fn no_dense_conjugacy_witness(n: u32) -> Result<CircleWitness> {
    if n < 2 {
        return Err(FraisseError::pre("need n ≥ 2"));
    }
    let q = witness_angle(n);
    let points: Vec<CirclePoint> =
        (0..=n).map(|k| CirclePoint::at(&q * rat(k as i64, 1), n).angle().normalized()).map(|p| {
            debug_assert!(p.s.is_zero());
            CirclePoint::at(p.r, n)
        }).collect();
    let a = LocalOrderConfig::new(n, points)?;
    let f_a: BTreeMap<Elem, Elem> = (0..=n).map(|k| (k as Elem, ((k + 1) % (n + 1)) as Elem)).collect();
    let sa = eval_relation(&a);
    if !is_partial_iso(&sa, &sa, &f_a) {
        return Err(FraisseError::violation("cyclic shift is not a partial isomorphism"));
    }
    let b = LocalOrderConfig::new(n, vec![CirclePoint::at(BigRational::zero(), n)])?;
    let f_b: BTreeMap<Elem, Elem> = [(0, 0)].into();
    let mut obstructions = Vec::new();
    let bid = n + 1;
    for l in 0..n {
        let mut o = FiniteStructure::on(sa.signature().clone(), 0..=bid);
        for r in 0..n as usize {
            for t in sa.tuples(r) {
                o.put(r, &t);
            }
        }
        for k in 0..=n {
            o.put(l as usize, &[bid, k]);
            o.put((n - 1 - l) as usize, &[k, bid]);
        }
        obstructions.push(o);
    }
    Ok(CircleWitness { n, q, a, f_a, b, f_b, obstructions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(q: i64, k: u32, n: u32) -> CirclePoint {
        CirclePoint::new(rat(q, 1), k, n).unwrap()
    }

    #[test]
    fn pi_enclosures_shrink_and_contain_pi() {
        let mut prev = rat(1, 1);
        for level in 0..8 {
            let (lo, hi) = pi_enclosure(level);
            assert!(lo.to_f64().unwrap() <= std::f64::consts::PI);
            assert!(hi.to_f64().unwrap() >= std::f64::consts::PI);
            let w = &hi - &lo;
            assert!(w <= prev);
            prev = w;
        }
    }

    #[test]
    fn angle_compare_examples() {
        let u = pt(0, 0, 2);
        let v = pt(1, 0, 2);
        assert_eq!(angle_compare(&u, &v, 0).unwrap(), Ordering::Greater);
        assert_eq!(angle_compare(&u, &v, 1).unwrap(), Ordering::Less);
        assert_eq!(sector_of(&u, &v), Some(0));
        let w = v.up(1);
        assert_eq!(angle_compare(&v, &w, 1).unwrap(), Ordering::Equal);
        assert_eq!(sector_of(&v, &w), None);
        let far = pt(4, 0, 2);
        assert_eq!(sector_of(&u, &far), Some(1));
    }

    #[test]
    fn witness_triple_relations() {
        let c = LocalOrderConfig::new(2, vec![pt(0, 0, 2), pt(2, 0, 2), pt(4, 0, 2)]).unwrap();
        let s = eval_relation(&c);
        assert_eq!(s.tuples(0), vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
        assert_eq!(eval_relation(&LocalOrderConfig::new(2, vec![pt(0, 0, 2)]).unwrap()).tuple_count(0), 0);
        let anti = LocalOrderConfig::new(2, vec![pt(1, 0, 2), pt(1, 1, 2)]).unwrap();
        let sa = eval_relation(&anti);
        assert_eq!(sa.tuple_count(0) + sa.tuple_count(1), 0);
    }

    #[test]
    fn cut_counts() {
        let one = LocalOrderConfig::new(2, vec![pt(0, 0, 2)]).unwrap();
        let cuts = cuts_of_hat(&one).unwrap();
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0], Cut { from: pt(0, 0, 2), to: pt(0, 1, 2) });
        let two = LocalOrderConfig::new(2, vec![pt(0, 0, 2), pt(1, 0, 2)]).unwrap();
        assert_eq!(cuts_of_hat(&two).unwrap().len(), 4);
        let tri = LocalOrderConfig::new(2, vec![pt(0, 0, 2), pt(2, 0, 2), pt(4, 0, 2)]).unwrap();
        assert_eq!(cuts_of_hat(&tri).unwrap().len(), 6);
    }

    #[test]
    fn extension_inside_cuts() {
        let c = LocalOrderConfig::new(2, vec![pt(0, 0, 2), pt(1, 0, 2)]).unwrap();
        let id: BTreeMap<Elem, Elem> = [(0, 0), (1, 1)].into();
        for cut in cuts_of_hat(&c).unwrap() {
            let rec = extend_in_cut(&c, &c, &id, &cut, &cut).unwrap();
            assert!(rec.verified);
        }
        let shifted = LocalOrderConfig::new(
            2,
            c.points.iter().map(|p| CirclePoint::new(&p.q + rat(1, 3), p.k, 2).unwrap()).collect(),
        )
        .unwrap();
        let cut = &cuts_of_hat(&c).unwrap()[1];
        let image = Cut {
            from: CirclePoint::new(&cut.from.q + rat(1, 3), cut.from.k, 2).unwrap(),
            to: CirclePoint::new(&cut.to.q + rat(1, 3), cut.to.k, 2).unwrap(),
        };
        assert!(extend_in_cut(&c, &shifted, &id, cut, &image).unwrap().verified);
        let wrong = cuts_of_hat(&c).unwrap()[2].clone();
        assert!(extend_in_cut(&c, &c, &id, cut, &wrong).is_err());
    }

    #[test]
    fn unfolding_examples() {
        let a = pt(0, 0, 2);
        let c = LocalOrderConfig::new(2, vec![pt(2, 0, 2), pt(4, 0, 2)]).unwrap();
        let chain = sector_unfold(&a, &c).unwrap();
        assert_eq!(chain.entries[0].0, 1);
        assert_eq!(chain.entries[0].1, 1);
        assert_eq!(chain.entries[1].0, 0);
        assert_eq!(chain.entries[1].1, 0);
        let folded: BTreeMap<Elem, CirclePoint> = sector_fold(&chain).into_iter().collect();
        assert_eq!(folded[&0], c.points[0]);
        assert_eq!(folded[&1], c.points[1]);
        let empty = LocalOrderConfig::new(2, vec![]).unwrap();
        assert!(sector_unfold(&a, &empty).unwrap().entries.is_empty());
    }

    #[test]
    fn realizability_of_witnesses() {
        for n in [2u32, 3] {
            let w = no_dense_conjugacy_witness(n).unwrap();
            let sa = eval_relation(&w.a);
            match circle_realizable(&sa, n).unwrap() {
                Realizability::Realized(points) => {
                    let cfg = LocalOrderConfig::new(n, points.values().cloned().collect()).unwrap();
                    assert_eq!(eval_relation(&cfg), sa);
                }
                Realizability::Unsat(_) => panic!("witness cycle must be realizable"),
            }
            for o in &w.obstructions {
                assert!(matches!(circle_realizable(o, n).unwrap(), Realizability::Unsat(_)));
            }
        }
        let empty = FiniteStructure::new(local_order_signature(2));
        assert_eq!(circle_realizable(&empty, 2).unwrap(), Realizability::Realized(BTreeMap::new()));
    }

    #[test]
    fn shift_related_pairs_are_realized_as_copies() {
        let c = LocalOrderConfig::new(3, vec![pt(1, 0, 3), pt(1, 2, 3), pt(2, 0, 3)]).unwrap();
        let s = eval_relation(&c);
        let Realizability::Realized(points) = circle_realizable(&s, 3).unwrap() else { panic!() };
        assert_eq!(points[&0].q, points[&1].q);
    }

    #[test]
    fn sdd2_example() {
        let c = LocalOrderConfig::new(2, vec![pt(0, 0, 2), pt(1, 0, 2), pt(0, 1, 2), pt(1, 1, 2)]).unwrap();
        let g = sdd2_edges(&c).unwrap();
        assert!(g.holds(0, &[0, 1]));
        assert!(g.holds(0, &[1, 2]));
        assert!(g.holds(0, &[2, 3]));
        assert!(g.holds(0, &[3, 0]));
        assert!(!g.holds(0, &[0, 2]) && !g.holds(0, &[2, 0]));
        let sigma = sdd2_sigma(&c);
        assert!(is_partial_iso(&g, &g, &sigma));
    }

    #[test]
    fn chain_predicts_sectors() {
        let a = pt(0, 0, 3);
        let pts = vec![pt(1, 0, 3), pt(5, 0, 3), pt(3, 0, 3), pt(-2, 0, 3)];
        let c = LocalOrderConfig::new(3, pts).unwrap();
        let chain = sector_unfold(&a, &c).unwrap();
        let s = eval_relation(&c);
        for v in 0..4 {
            for w in 0..4 {
                if v != w {
                    let j = chain.predicted_sector(v, w).unwrap();
                    assert!(s.holds(j as usize, &[v, w]), "{v} {w} {j}");
                }
            }
        }
    }
}
