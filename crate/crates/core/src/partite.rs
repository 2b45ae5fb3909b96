//! ω-partite tournaments: part partitions, the semigeneric parity condition,
//! 3-in-4 and strong amalgamation, and the ρ-expansion with its independence
//! relation and canonical amalgam.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::error::{FraisseError, Result};
use crate::hyper::check_amalgam_inputs;
use crate::structure::{Elem, FiniteStructure, Signature};

/// Index of the edge relation `→` in every oriented-graph signature here.
pub const EDGE: usize = 0;

pub fn arrow_signature() -> Arc<Signature> {
    Signature::of(&[("E", 2)], &[])
}

pub fn rho_signature() -> Arc<Signature> {
    Signature::of(&[("E", 2)], &["rho"])
}

pub fn rho_sigma_signature() -> Arc<Signature> {
    Signature::of(&[("E", 2)], &["rho", "sigma"])
}

/// `Some(true)` for `u → v`, `Some(false)` for `v → u`, `None` for `u ⊥ v`.
pub fn d(s: &FiniteStructure, u: Elem, v: Elem) -> Option<bool> {
    if s.holds(EDGE, &[u, v]) {
        Some(true)
    } else if s.holds(EDGE, &[v, u]) {
        Some(false)
    } else {
        None
    }
}

pub fn perp(s: &FiniteStructure, u: Elem, v: Elem) -> bool {
    u != v && d(s, u, v).is_none()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parts {
    pub parts: Vec<Vec<Elem>>,
    pub part_of: BTreeMap<Elem, usize>,
}

impl Parts {
    pub fn part(&self, x: Elem) -> &[Elem] {
        &self.parts[self.part_of[&x]]
    }

    pub fn same(&self, x: Elem, y: Elem) -> bool {
        self.part_of.get(&x) == self.part_of.get(&y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartiteViolation {
    Loop(Elem),
    TwoWay(Elem, Elem),
    /// `u ⊥ w ⊥ v` with an edge between `u` and `v`.
    NotEquivalence(Elem, Elem, Elem),
    /// `{u, u'}` and `{v, v'}` separated pairs with an odd out-edge count.
    Parity([Elem; 4]),
}

/// Derives the ⊥-classes, checking that `→` is an oriented graph and ⊥ an
/// equivalence relation.
pub fn partite_parts(s: &FiniteStructure) -> std::result::Result<Parts, PartiteViolation> {
    for t in s.tuples(EDGE) {
        if t[0] == t[1] {
            return Err(PartiteViolation::Loop(t[0]));
        }
        if s.holds(EDGE, &[t[1], t[0]]) {
            return Err(PartiteViolation::TwoWay(t[0].min(t[1]), t[0].max(t[1])));
        }
    }
    let elems = s.elems();
    let mut part_of: BTreeMap<Elem, usize> = BTreeMap::new();
    let mut parts: Vec<Vec<Elem>> = Vec::new();
    for &x in &elems {
        if part_of.contains_key(&x) {
            continue;
        }
        let idx = parts.len();
        let mut comp = vec![x];
        let mut queue = VecDeque::from([x]);
        part_of.insert(x, idx);
        while let Some(y) = queue.pop_front() {
            for &z in &elems {
                if !part_of.contains_key(&z) && perp(s, y, z) {
                    part_of.insert(z, idx);
                    comp.push(z);
                    queue.push_back(z);
                }
            }
        }
        comp.sort_unstable();
        for (i, &u) in comp.iter().enumerate() {
            for &v in &comp[i + 1..] {
                if !perp(s, u, v) {
                    // some ⊥-path of length two closes on an edge
                    return Err(not_equivalence_witness(s, &comp).unwrap_or(PartiteViolation::NotEquivalence(u, x, v)));
                }
            }
        }
        parts.push(comp);
    }
    Ok(Parts { parts, part_of })
}

fn not_equivalence_witness(s: &FiniteStructure, comp: &[Elem]) -> Option<PartiteViolation> {
    for &w in comp {
        let nbrs: Vec<Elem> = comp.iter().copied().filter(|&z| perp(s, w, z)).collect();
        for (i, &u) in nbrs.iter().enumerate() {
            for &v in &nbrs[i + 1..] {
                if !perp(s, u, v) {
                    return Some(PartiteViolation::NotEquivalence(u, w, v));
                }
            }
        }
    }
    None
}

/// Out-edge count from `{u, u2}` to `{v, v2}` is even.
pub fn parity_ok(s: &FiniteStructure, u: Elem, u2: Elem, v: Elem, v2: Elem) -> bool {
    let c = [(u, v), (u, v2), (u2, v), (u2, v2)].iter().filter(|(x, y)| s.holds(EDGE, &[*x, *y])).count();
    c % 2 == 0
}

pub fn check_semigeneric(s: &FiniteStructure) -> std::result::Result<Parts, PartiteViolation> {
    let parts = partite_parts(s)?;
    let big: Vec<&Vec<Elem>> = parts.parts.iter().filter(|p| p.len() >= 2).collect();
    for (i, p) in big.iter().enumerate() {
        for q in &big[i + 1..] {
            for (a, &u) in p.iter().enumerate() {
                for &u2 in &p[a + 1..] {
                    for (b, &v) in q.iter().enumerate() {
                        for &v2 in &q[b + 1..] {
                            if !parity_ok(s, u, u2, v, v2) {
                                return Err(PartiteViolation::Parity([u, u2, v, v2]));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(parts)
}

/// Checks only the conditions involving `x`, assuming `s` minus `x` is valid.
pub fn semigeneric_ok_at(s: &FiniteStructure, x: Elem) -> bool {
    if s.holds(EDGE, &[x, x]) {
        return false;
    }
    let elems = s.elems();
    let mut mine = vec![x];
    for &y in &elems {
        if y == x {
            continue;
        }
        match (s.holds(EDGE, &[x, y]), s.holds(EDGE, &[y, x])) {
            (true, true) => return false,
            (false, false) => mine.push(y),
            _ => {}
        }
    }
    // ⊥-class of x must be closed and cliquish
    for (i, &u) in mine.iter().enumerate() {
        for &v in &mine[i + 1..] {
            if !perp(s, u, v) {
                return false;
            }
        }
    }
    if mine.len() == 1 {
        return true;
    }
    let mine_set: BTreeSet<Elem> = mine.iter().copied().collect();
    let mut seen: BTreeSet<Elem> = mine_set.clone();
    for &y in &elems {
        if seen.contains(&y) {
            continue;
        }
        let q: Vec<Elem> = elems.iter().copied().filter(|&z| z == y || perp(s, y, z)).collect();
        if q.iter().any(|z| mine_set.contains(z)) {
            return false;
        }
        seen.extend(q.iter().copied());
        for &u2 in &mine[1..] {
            for (b, &v) in q.iter().enumerate() {
                for &v2 in &q[b + 1..] {
                    if !parity_ok(s, x, u2, v, v2) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Blocks of `∼_{P,v}`: `u ∼ u'` iff `d(uv) = d(u'v)`.
pub fn part_equiv(s: &FiniteStructure, part: &[Elem], v: Elem) -> Result<Vec<Vec<Elem>>> {
    if part.contains(&v) {
        return Err(FraisseError::pre("v must lie outside the part"));
    }
    let mut out_b = Vec::new();
    let mut in_b = Vec::new();
    for &u in part {
        match d(s, u, v) {
            Some(true) => out_b.push(u),
            Some(false) => in_b.push(u),
            None => return Err(FraisseError::pre("v must be adjacent to the part")),
        }
    }
    Ok([out_b, in_b].into_iter().filter(|b| !b.is_empty()).collect())
}

/// The unique orientation of `bc` given a two-part base with `b ⊥ P` and
/// `c ⊥ Q`; `s` holds everything except the `bc` pair. Returns `d(bc)`.
pub fn amalgam_3in4(s: &FiniteStructure, b: Elem, c: Elem) -> Result<bool> {
    let base: Vec<Elem> = s.elems().into_iter().filter(|&x| x != b && x != c).collect();
    let a = s.induced(base.iter().copied());
    let parts = check_semigeneric(&a).map_err(|v| FraisseError::violation(format!("base: {v:?}")))?;
    if parts.parts.len() != 2 {
        return Err(FraisseError::pre("base must have exactly two parts"));
    }
    let with = |x: Elem| {
        let mut e = base.clone();
        e.push(x);
        s.induced(e)
    };
    check_semigeneric(&with(b)).map_err(|v| FraisseError::violation(format!("A ∪ {{b}}: {v:?}")))?;
    check_semigeneric(&with(c)).map_err(|v| FraisseError::violation(format!("A ∪ {{c}}: {v:?}")))?;
    let u = base.iter().copied().find(|&u| perp(s, u, b)).ok_or_else(|| FraisseError::pre("b must be ⊥ to a part"))?;
    let v = base.iter().copied().find(|&v| perp(s, v, c)).ok_or_else(|| FraisseError::pre("c must be ⊥ to a part"))?;
    if parts.same(u, v) {
        return Err(FraisseError::pre("b and c must join different parts"));
    }
    let duc = d(s, u, c).expect("different parts");
    let dbv = d(s, b, v).expect("different parts");
    let duv = d(s, u, v).expect("different parts");
    let dbc = if dbv == duv { duc } else { !duc };
    let mut full = s.clone();
    if dbc {
        full.put(EDGE, &[b, c]);
    } else {
        full.put(EDGE, &[c, b]);
    }
    check_semigeneric(&full).map_err(|v| FraisseError::violation(format!("3-in-4 output: {v:?}")))?;
    Ok(dbc)
}

/// Strong amalgam for the semigeneric class (and its ρ/σ expansions, whose
/// functions are copied from the factors). Mixed pairs are decided one at a
/// time: ⊥ when a decided point is ⊥ to both, forced by 3-in-4 when ⊥-partners
/// of both are known, else `prefs` (`(b, c, true)` = `b → c`) or `b → c`.
pub fn semigeneric_amalgam_with_prefs(
    a: &FiniteStructure,
    b: &FiniteStructure,
    c: &FiniteStructure,
    prefs: &[(Elem, Elem, bool)],
) -> Result<FiniteStructure> {
    check_amalgam_inputs(a, b, c)?;
    let bv: Vec<Elem> = b.universe().difference(a.universe()).copied().collect();
    let cv: Vec<Elem> = c.universe().difference(a.universe()).copied().collect();
    let bset: BTreeSet<Elem> = bv.iter().copied().collect();
    let cset: BTreeSet<Elem> = cv.iter().copied().collect();
    let mut out = b.clone();
    out.absorb(c);
    let pref_map: BTreeMap<(Elem, Elem), bool> = prefs.iter().map(|&(x, y, o)| ((x, y), o)).collect();
    let mut order: Vec<(Elem, Elem)> = Vec::new();
    for &(x, y, _) in prefs {
        if !bset.contains(&x) || !cset.contains(&y) {
            return Err(FraisseError::pre(format!("preference ({x}, {y}) is not a mixed pair")));
        }
        order.push((x, y));
    }
    for &x in &bv {
        for &y in &cv {
            order.push((x, y));
        }
    }
    let mut decided: BTreeSet<(Elem, Elem)> = BTreeSet::new();
    let av = a.elems();
    for (x, y) in order {
        if decided.contains(&(x, y)) {
            continue;
        }
        let known = |u: Elem, v: Elem| -> bool {
            let ub = !cset.contains(&u);
            let uc = !bset.contains(&u);
            let vb = !cset.contains(&v);
            let vc = !bset.contains(&v);
            (ub && vb)
                || (uc && vc)
                || (bset.contains(&u) && cset.contains(&v) && decided.contains(&(u, v)))
                || (cset.contains(&u) && bset.contains(&v) && decided.contains(&(v, u)))
        };
        // points whose relations to both x and y are known
        let ys: Vec<Elem> = av
            .iter()
            .copied()
            .chain(cv.iter().copied().filter(|&z| z != y && decided.contains(&(x, z))))
            .chain(bv.iter().copied().filter(|&z| z != x && decided.contains(&(z, y))))
            .collect();
        let choice = if ys.iter().any(|&z| perp(&out, z, x) && perp(&out, z, y)) {
            None
        } else {
            let mut forced = None;
            'search: for &u in ys.iter().filter(|&&u| perp(&out, u, x)) {
                for &v in ys.iter().filter(|&&v| perp(&out, v, y)) {
                    if !known(u, v) {
                        continue;
                    }
                    if let Some(duv) = d(&out, u, v) {
                        let duy = d(&out, u, y).expect("no common witness");
                        let dxv = d(&out, x, v).expect("no common witness");
                        forced = Some(if dxv == duv { duy } else { !duy });
                        break 'search;
                    }
                }
            }
            Some(forced.unwrap_or_else(|| pref_map.get(&(x, y)).copied().unwrap_or(true)))
        };
        match choice {
            Some(true) => out.put(EDGE, &[x, y]),
            Some(false) => out.put(EDGE, &[y, x]),
            None => {}
        }
        decided.insert((x, y));
    }
    Ok(out)
}

pub fn strong_amalgam_semigeneric(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<FiniteStructure> {
    let out = semigeneric_amalgam_with_prefs(a, b, c, &[])?;
    check_semigeneric(&out).map_err(|v| FraisseError::violation(format!("amalgam output: {v:?}")))?;
    Ok(out)
}

/// Checks that `rho` (and `sigma`, if present) pick one point per part.
pub fn check_rho(s: &FiniteStructure) -> std::result::Result<Parts, String> {
    let parts = check_semigeneric(s).map_err(|v| format!("{v:?}"))?;
    let rho = s.signature().func("rho").ok_or("no rho symbol")?;
    let sigma = s.signature().func("sigma");
    for p in &parts.parts {
        let r = s.fn_value(rho, p[0]).ok_or_else(|| format!("rho undefined at {}", p[0]))?;
        if !p.contains(&r) {
            return Err(format!("rho({}) = {r} leaves the part", p[0]));
        }
        if let Some(&x) = p.iter().find(|&&x| s.fn_value(rho, x) != Some(r)) {
            return Err(format!("rho not constant on the part of {x}"));
        }
        if let Some(sg) = sigma {
            let t = s.fn_value(sg, p[0]).ok_or_else(|| format!("sigma undefined at {}", p[0]))?;
            if !p.contains(&t) || t == r {
                return Err(format!("sigma({}) = {t} must be a second point of the part", p[0]));
            }
            if let Some(&x) = p.iter().find(|&&x| s.fn_value(sg, x) != Some(t)) {
                return Err(format!("sigma not constant on the part of {x}"));
            }
        }
    }
    Ok(parts)
}

/// Incremental form of `check_rho` for a newly added point.
pub fn rho_ok_at(s: &FiniteStructure, x: Elem) -> bool {
    if !semigeneric_ok_at(s, x) {
        return false;
    }
    let rho = s.signature().func("rho").expect("rho symbol");
    let sigma = s.signature().func("sigma");
    let mut part: Vec<Elem> = s.elems().into_iter().filter(|&y| y == x || perp(s, x, y)).collect();
    part.sort_unstable();
    let r = match s.fn_value(rho, x) {
        Some(r) if part.contains(&r) => r,
        _ => return false,
    };
    if part.iter().any(|&y| s.fn_value(rho, y) != Some(r)) {
        return false;
    }
    if let Some(sg) = sigma {
        let t = match s.fn_value(sg, x) {
            Some(t) if part.contains(&t) && t != r => t,
            _ => return false,
        };
        if part.iter().any(|&y| s.fn_value(sg, y) != Some(t)) {
            return false;
        }
    }
    true
}

fn meets(s: &FiniteStructure, x: Elem, a: &BTreeSet<Elem>) -> bool {
    a.contains(&x) || a.iter().any(|&y| perp(s, x, y))
}

/// `B ⫝_A C` for the ρ-expansion; all three sets are closed under `rho` first.
pub fn srho_independent(s: &FiniteStructure, a: &BTreeSet<Elem>, b: &BTreeSet<Elem>, c: &BTreeSet<Elem>) -> bool {
    let rho = s.signature().func("rho").expect("rho symbol");
    let a = s.closure(a.iter().copied());
    let b = s.closure(b.iter().copied());
    let c = s.closure(c.iter().copied());
    let bs: Vec<Elem> = b.difference(&a).copied().collect();
    let cs: Vec<Elem> = c.difference(&a).copied().collect();
    if bs.iter().any(|x| c.contains(x) && !a.contains(x)) {
        return false;
    }
    for &x in &bs {
        let x_in = meets(s, x, &a);
        for &y in &cs {
            let y_in = meets(s, y, &a);
            let ok = match (x_in, y_in) {
                (false, false) => d(s, x, y) == Some(true),
                (true, false) => d(s, x, y) == d(s, s.fn_value(rho, x).expect("total"), y),
                (false, true) => d(s, x, y) == d(s, x, s.fn_value(rho, y).expect("total")),
                (true, true) => true,
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// The amalgam of `B` and `C` over `A` satisfying the ρ-independence clauses;
/// pairs with both parts meeting `A` are ⊥ or forced by parity through `ρ`.
pub fn srho_canonical_amalgam(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<FiniteStructure> {
    srho_canonical_amalgam_with(a, b, c, &[])
}

/// As [`srho_canonical_amalgam`], except that a preference `(b, c, false)`
/// turns the fresh-part default around to `c → b`.
pub fn srho_canonical_amalgam_with(
    a: &FiniteStructure,
    b: &FiniteStructure,
    c: &FiniteStructure,
    prefs: &[(Elem, Elem, bool)],
) -> Result<FiniteStructure> {
    check_amalgam_inputs(a, b, c)?;
    let pref: BTreeMap<(Elem, Elem), bool> = prefs.iter().map(|&(x, y, o)| ((x, y), o)).collect();
    let rho = b.signature().func("rho").ok_or_else(|| FraisseError::SignatureMismatch("no rho symbol".into()))?;
    let bv: Vec<Elem> = b.universe().difference(a.universe()).copied().collect();
    let cv: Vec<Elem> = c.universe().difference(a.universe()).copied().collect();
    let mut out = b.clone();
    out.absorb(c);
    let aset = a.universe().clone();
    for &x in &bv {
        let rx = b.fn_value(rho, x).ok_or_else(|| FraisseError::pre("rho must be total"))?;
        let x_in = aset.contains(&rx);
        for &y in &cv {
            let ry = c.fn_value(rho, y).ok_or_else(|| FraisseError::pre("rho must be total"))?;
            let y_in = aset.contains(&ry);
            let dir = match (x_in, y_in) {
                (false, false) => Some(pref.get(&(x, y)).copied().unwrap_or(true)),
                (true, false) => d(c, rx, y),
                (false, true) => d(b, x, ry),
                (true, true) if rx == ry => None,
                (true, true) => {
                    // parity on {x, ρx} × {y, ρy}
                    let dxr = d(b, x, ry).expect("different parts");
                    let drx = d(c, rx, y).expect("different parts");
                    let drr = d(a, rx, ry).expect("different parts");
                    Some(dxr ^ drx ^ drr)
                }
            };
            match dir {
                Some(true) => out.put(EDGE, &[x, y]),
                Some(false) => out.put(EDGE, &[y, x]),
                None => {}
            }
        }
    }
    check_rho(&out).map_err(|e| FraisseError::violation(format!("srho amalgam output: {e}")))?;
    Ok(out)
}

/// The directed 4-cycle `v0 → v1 → v2 → v3 → v0`.
pub fn directed_four_cycle() -> FiniteStructure {
    let mut s = FiniteStructure::on(arrow_signature(), 0..4);
    for i in 0..4 {
        s.put(EDGE, &[i, (i + 1) % 4]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cycle_parity() {
        let s = directed_four_cycle();
        let parts = check_semigeneric(&s).unwrap();
        assert_eq!(parts.parts, vec![vec![0, 2], vec![1, 3]]);
        let mut bad = s.clone();
        bad.remove_tuple(EDGE, &[0, 1]);
        bad.put(EDGE, &[1, 0]);
        assert!(matches!(check_semigeneric(&bad), Err(PartiteViolation::Parity(_))));
        let mut tour = FiniteStructure::on(arrow_signature(), 0..3);
        tour.put(EDGE, &[0, 1]);
        tour.put(EDGE, &[1, 2]);
        tour.put(EDGE, &[2, 0]);
        assert!(check_semigeneric(&tour).is_ok());
        let mut path = FiniteStructure::on(arrow_signature(), 0..3);
        path.put(EDGE, &[0, 1]);
        assert!(matches!(check_semigeneric(&path), Err(PartiteViolation::NotEquivalence(..))));
        for x in 0..4 {
            assert!(semigeneric_ok_at(&s, x));
            assert!(!semigeneric_ok_at(&bad, x));
        }
    }

    #[test]
    fn part_equivalence() {
        let s = directed_four_cycle();
        assert_eq!(part_equiv(&s, &[0, 2], 1).unwrap(), vec![vec![0], vec![2]]);
        assert_eq!(part_equiv(&s, &[0, 2], 3).unwrap(), vec![vec![2], vec![0]]);
        let mut t = FiniteStructure::on(arrow_signature(), 0..3);
        t.put(EDGE, &[2, 0]);
        t.put(EDGE, &[2, 1]);
        assert_eq!(part_equiv(&t, &[0, 1], 2).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn three_in_four_examples() {
        // u=0 ∈ P, v=1 ∈ Q, b=2 ⊥ u, c=3 ⊥ v
        let mut s = FiniteStructure::on(arrow_signature(), 0..4);
        s.put(EDGE, &[0, 1]);
        s.put(EDGE, &[2, 1]);
        s.put(EDGE, &[0, 3]);
        assert!(amalgam_3in4(&s, 2, 3).unwrap());
        let mut s2 = FiniteStructure::on(arrow_signature(), 0..4);
        s2.put(EDGE, &[0, 1]);
        s2.put(EDGE, &[1, 2]);
        s2.put(EDGE, &[0, 3]);
        assert!(!amalgam_3in4(&s2, 2, 3).unwrap());
    }

    #[test]
    fn amalgam_perp_witness() {
        let b = FiniteStructure::on(arrow_signature(), [0, 1]);
        let a = FiniteStructure::on(arrow_signature(), [0]);
        let c = FiniteStructure::on(arrow_signature(), [0, 2]);
        let out = strong_amalgam_semigeneric(&a, &b, &c).unwrap();
        assert!(perp(&out, 1, 2));
        let empty = FiniteStructure::new(arrow_signature());
        let b1 = FiniteStructure::on(arrow_signature(), [1]);
        let c1 = FiniteStructure::on(arrow_signature(), [2]);
        let out = strong_amalgam_semigeneric(&empty, &b1, &c1).unwrap();
        assert_eq!(d(&out, 1, 2), Some(true));
    }

    fn rho_structure() -> FiniteStructure {
        // parts {0, 1} (red 0) and {2} (red 2); 0 → 2, 2 → 1
        let mut s = FiniteStructure::on(rho_signature(), 0..3);
        s.put(EDGE, &[0, 2]);
        s.put(EDGE, &[2, 1]);
        for (x, y) in [(0, 0), (1, 0), (2, 2)] {
            s.set_fn(0, x, y).unwrap();
        }
        s
    }

    #[test]
    fn rho_checks_and_independence() {
        let s = rho_structure();
        assert!(check_rho(&s).is_ok());
        let mut bad = s.clone();
        bad.set_fn(0, 1, 1).unwrap();
        assert!(check_rho(&bad).is_err());
        let set = |v: &[Elem]| v.iter().copied().collect::<BTreeSet<Elem>>();
        // fresh parts over ∅: 0's part {0,1} and 2's part
        assert!(srho_independent(&s, &set(&[]), &set(&[0]), &set(&[2])));
        assert!(!srho_independent(&s, &set(&[]), &set(&[2]), &set(&[0])));
        // b = 1 in an A-part: d(1,2) = false, d(ρ1 = 0, 2) = true → fails
        assert!(!srho_independent(&s, &set(&[0]), &set(&[1]), &set(&[2])));
        assert!(srho_independent(&s, &set(&[0]), &set(&[0]), &set(&[2])));
    }

    #[test]
    fn srho_amalgam_forced_parity() {
        // A: parts {0} and {1}, 0 → 1; B adds 2 ⊥ 0 (ρ=0), C adds 3 ⊥ 1 (ρ=1)
        let sig = rho_signature();
        let mut a = FiniteStructure::on(sig.clone(), [0, 1]);
        a.put(EDGE, &[0, 1]);
        a.set_fn(0, 0, 0).unwrap();
        a.set_fn(0, 1, 1).unwrap();
        let mut b = a.clone();
        b.add_elem(2);
        b.set_fn(0, 2, 0).unwrap();
        b.put(EDGE, &[1, 2]);
        let mut c = a.clone();
        c.add_elem(3);
        c.set_fn(0, 3, 1).unwrap();
        c.put(EDGE, &[0, 3]);
        let out = srho_canonical_amalgam(&a, &b, &c).unwrap();
        assert!(check_rho(&out).is_ok());
        assert!(parity_ok(&out, 0, 2, 1, 3));
        let set = |v: &[Elem]| v.iter().copied().collect::<BTreeSet<Elem>>();
        assert!(srho_independent(&out, &set(&[0, 1]), &set(&[0, 1, 2]), &set(&[0, 1, 3])));
    }
}
