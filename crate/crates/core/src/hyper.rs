//! Sign maps of (multi-)hypertournaments, their class checks, the
//! product-formula amalgam, stabiliser reducts and H₄-freeness.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{FraisseError, Result};
use crate::structure::{find_embedding, permute, search_extensions, Elem, FiniteStructure, Signature};

/// Sign of a permutation of `0..n` given as its image list.
pub fn perm_sign(sigma: &[usize]) -> Result<i8> {
    let n = sigma.len();
    let mut seen = vec![false; n];
    for &x in sigma {
        if x >= n || seen[x] {
            return Err(FraisseError::pre(format!("{sigma:?} is not a permutation")));
        }
        seen[x] = true;
    }
    let mut visited = vec![false; n];
    let mut sign = 1i8;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !visited[x] {
            visited[x] = true;
            x = sigma[x];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    Ok(sign)
}

/// Sign of the permutation sorting `t` (entries distinct), or `None` on repeats.
pub fn sorting_sign(t: &[Elem]) -> Option<i8> {
    let mut inversions = 0usize;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            match t[i].cmp(&t[j]) {
                std::cmp::Ordering::Greater => inversions += 1,
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    Some(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

/// An alternating ±1 map on tuples of distinct elements, stored on ascending
/// representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMap {
    pub arity: usize,
    pub values: BTreeMap<Vec<Elem>, i8>,
}

impl SignMap {
    pub fn new(arity: usize) -> Self {
        SignMap { arity, values: BTreeMap::new() }
    }

    pub fn value(&self, t: &[Elem]) -> Option<i8> {
        let eps = sorting_sign(t)?;
        let mut asc = t.to_vec();
        asc.sort_unstable();
        self.values.get(&asc).map(|v| v * eps)
    }

    pub fn set(&mut self, t: &[Elem], sign: i8) -> Result<()> {
        let eps = sorting_sign(t).ok_or_else(|| FraisseError::pre("repeated entries"))?;
        let mut asc = t.to_vec();
        asc.sort_unstable();
        self.values.insert(asc, sign * eps);
        Ok(())
    }
}

/// Adds the Alt-orbit of orderings of the ascending tuple `asc` on which the
/// sign map takes value +1, given that the ascending order has sign `sign`.
pub fn put_orbit(s: &mut FiniteStructure, r: usize, asc: &[Elem], sign: i8) {
    let mut perm: Vec<usize> = (0..asc.len()).collect();
    let mut buf = vec![0; asc.len()];
    permute(&mut perm, 0, &mut |p| {
        if perm_sign(p).unwrap() == sign {
            for (i, &j) in p.iter().enumerate() {
                buf[i] = asc[j];
            }
            s.put(r, &buf);
        }
    });
}

/// Sign of the ascending tuple `asc` read off the relation, if exactly one
/// Alt-orbit is present.
pub fn orbit_sign(s: &FiniteStructure, r: usize, asc: &[Elem]) -> Option<i8> {
    let mut even = 0usize;
    let mut odd = 0usize;
    let mut total = 0usize;
    let mut perm: Vec<usize> = (0..asc.len()).collect();
    let mut buf = vec![0; asc.len()];
    permute(&mut perm, 0, &mut |p| {
        total += 1;
        for (i, &j) in p.iter().enumerate() {
            buf[i] = asc[j];
        }
        if s.holds(r, &buf) {
            if perm_sign(p).unwrap() == 1 {
                even += 1;
            } else {
                odd += 1;
            }
        }
    });
    let half = total / 2;
    match (even, odd) {
        (e, 0) if e == half => Some(1),
        (0, o) if o == half => Some(-1),
        _ => None,
    }
}

/// Sign value of an arbitrary tuple of distinct elements read off the relation
/// (assumes the relation is alternating on that set).
pub fn rel_sign(s: &FiniteStructure, r: usize, t: &[Elem]) -> i8 {
    if s.holds(r, t) {
        1
    } else {
        -1
    }
}

/// Calls `f` on every ascending `k`-subset of `elems` (which must be sorted).
pub fn for_each_subset(elems: &[Elem], k: usize, f: &mut dyn FnMut(&[Elem])) {
    let mut buf = Vec::with_capacity(k);
    fn rec(elems: &[Elem], start: usize, k: usize, buf: &mut Vec<Elem>, f: &mut dyn FnMut(&[Elem])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        let need = k - buf.len();
        for i in start..elems.len() {
            if elems.len() - i < need {
                break;
            }
            buf.push(elems[i]);
            rec(elems, i + 1, k, buf, f);
            buf.pop();
        }
    }
    rec(elems, 0, k, &mut buf, f);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HtVerdict {
    Valid(SignMap),
    /// An `n`-subset (ascending) whose orderings in the relation are not one Alt-orbit.
    Violation(Vec<Elem>),
}

impl HtVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, HtVerdict::Valid(_))
    }
}

pub fn check_hypertournament_at(s: &FiniteStructure, r: usize) -> Result<HtVerdict> {
    let n = s.signature().arity(r);
    if n < 2 {
        return Err(FraisseError::pre("hypertournament arity must be at least 2"));
    }
    for t in s.tuples(r) {
        if sorting_sign(&t).is_none() {
            return Err(FraisseError::pre(format!("tuple {t:?} has repeated entries")));
        }
    }
    let elems = s.elems();
    let mut map = SignMap::new(n);
    let mut bad: Option<Vec<Elem>> = None;
    for_each_subset(&elems, n, &mut |asc| {
        if bad.is_some() {
            return;
        }
        match orbit_sign(s, r, asc) {
            Some(sign) => {
                map.values.insert(asc.to_vec(), sign);
            }
            None => bad = Some(asc.to_vec()),
        }
    });
    Ok(match bad {
        Some(b) => HtVerdict::Violation(b),
        None => HtVerdict::Valid(map),
    })
}

pub fn check_hypertournament(s: &FiniteStructure, relation: &str, n: usize) -> Result<HtVerdict> {
    let r = s
        .signature()
        .rel(relation)
        .ok_or_else(|| FraisseError::UnknownSymbol(relation.into()))?;
    let arity = s.signature().arity(r);
    if arity != n {
        return Err(FraisseError::Arity { name: relation.into(), expected: n, got: arity });
    }
    check_hypertournament_at(s, r)
}

pub fn hypertournament_from_sign_fn(
    universe: impl IntoIterator<Item = Elem>,
    n: usize,
    f: &dyn Fn(&[Elem]) -> i8,
) -> FiniteStructure {
    let mut s = FiniteStructure::on(Signature::of(&[("R", n)], &[]), universe);
    let elems = s.elems();
    let mut reps = Vec::new();
    for_each_subset(&elems, n, &mut |asc| reps.push(asc.to_vec()));
    for asc in reps {
        let sign = f(&asc);
        put_orbit(&mut s, 0, &asc, sign);
    }
    s
}

/// Index set with arities and an optional distinguished binary index δ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSpec {
    pub arities: Vec<usize>,
    pub delta: Option<usize>,
}

impl MultiSpec {
    pub fn new(arities: Vec<usize>, delta: Option<usize>) -> Result<Self> {
        if arities.is_empty() || arities.iter().any(|&a| a < 2) {
            return Err(FraisseError::pre("arities must all be at least 2"));
        }
        if let Some(d) = delta {
            if arities.get(d) != Some(&2) {
                return Err(FraisseError::pre("the distinguished index must have arity 2"));
            }
        }
        Ok(MultiSpec { arities, delta })
    }

    /// `(2, 3)` style spec whose first binary index is distinguished.
    pub fn with_first_binary_delta(arities: Vec<usize>) -> Result<Self> {
        let delta = arities.iter().position(|&a| a == 2);
        Self::new(arities, delta)
    }

    pub fn signature(&self) -> Arc<Signature> {
        let rels: Vec<(String, usize)> =
            self.arities.iter().enumerate().map(|(i, &a)| (format!("R{i}"), a)).collect();
        Signature::new(rels, vec![]).expect("generated names are distinct")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiVerdict {
    Valid(Vec<SignMap>),
    Violation { index: usize, subset: Vec<Elem> },
}

impl MultiVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, MultiVerdict::Valid(_))
    }
}

pub fn check_multi(s: &FiniteStructure, spec: &MultiSpec) -> Result<MultiVerdict> {
    if s.signature().relations().len() != spec.arities.len() {
        return Err(FraisseError::SignatureMismatch("relation count differs from the arity list".into()));
    }
    let mut maps = Vec::new();
    for (i, &a) in spec.arities.iter().enumerate() {
        if s.signature().arity(i) != a {
            return Err(FraisseError::SignatureMismatch(format!("index {i} has arity {}", s.signature().arity(i))));
        }
        match check_hypertournament_at(s, i)? {
            HtVerdict::Valid(m) => maps.push(m),
            HtVerdict::Violation(subset) => return Ok(MultiVerdict::Violation { index: i, subset }),
        }
    }
    Ok(MultiVerdict::Valid(maps))
}

/// Checks that `b` and `c` share exactly the universe of `a` and agree with it there.
pub fn check_amalgam_inputs(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<()> {
    let common: BTreeSet<Elem> = b.universe().intersection(c.universe()).copied().collect();
    if common != *a.universe() {
        return Err(FraisseError::pre("B ∩ C must equal A"));
    }
    if !b.agrees_on(a) || !c.agrees_on(a) {
        return Err(FraisseError::pre("B and C disagree on A"));
    }
    Ok(())
}

/// Ascending subsets of size `k` of `a ∪ bs ∪ cs` meeting both `bs` and `cs`
/// (all three sorted and pairwise disjoint).
pub fn for_each_mixed_subset(a: &[Elem], bs: &[Elem], cs: &[Elem], k: usize, f: &mut dyn FnMut(&[Elem])) {
    let bset: BTreeSet<Elem> = bs.iter().copied().collect();
    let mut rest: Vec<Elem> = a.iter().chain(bs.iter()).copied().collect();
    rest.sort_unstable();
    let mut buf = Vec::with_capacity(k);
    for kc in 1..k {
        for_each_subset(cs, kc, &mut |csub| {
            for_each_subset(&rest, k - kc, &mut |rsub| {
                if rsub.iter().any(|x| bset.contains(x)) {
                    buf.clear();
                    buf.extend_from_slice(csub);
                    buf.extend_from_slice(rsub);
                    buf.sort_unstable();
                    f(&buf);
                }
            });
        });
    }
}

fn split(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> (Vec<Elem>, Vec<Elem>, Vec<Elem>) {
    let av = a.elems();
    let bv: Vec<Elem> = b.universe().difference(a.universe()).copied().collect();
    let cv: Vec<Elem> = c.universe().difference(a.universe()).copied().collect();
    (av, bv, cv)
}

/// Product-formula amalgam with every mixed δ-pair oriented from the B side to
/// the C side, except where `overrides[(b, c)] == false` (then c → b).
pub fn canonical_amalgam_delta_with(
    spec: &MultiSpec,
    a: &FiniteStructure,
    b: &FiniteStructure,
    c: &FiniteStructure,
    overrides: &BTreeMap<(Elem, Elem), bool>,
) -> Result<FiniteStructure> {
    let d = spec.delta.ok_or_else(|| FraisseError::pre("spec has no distinguished binary index"))?;
    check_amalgam_inputs(a, b, c)?;
    let (av, bv, cv) = split(a, b, c);
    let mut out = b.clone();
    out.absorb(c);
    for &x in &bv {
        for &y in &cv {
            if overrides.get(&(x, y)).copied().unwrap_or(true) {
                out.put(d, &[x, y]);
            } else {
                out.put(d, &[y, x]);
            }
        }
    }
    let delta_sign = |s: &FiniteStructure, u: Elem, v: Elem| rel_sign(s, d, &[u, v]);
    for (i, &n) in spec.arities.iter().enumerate() {
        if i == d {
            continue;
        }
        let mut mixed = Vec::new();
        for_each_mixed_subset(&av, &bv, &cv, n, &mut |asc| mixed.push(asc.to_vec()));
        for asc in mixed {
            let mut sign = 1i8;
            for m in 0..n {
                for m2 in m + 1..n {
                    sign *= delta_sign(&out, asc[m], asc[m2]);
                }
            }
            put_orbit(&mut out, i, &asc, sign);
        }
    }
    Ok(out)
}

pub fn canonical_amalgam_delta(
    spec: &MultiSpec,
    a: &FiniteStructure,
    b: &FiniteStructure,
    c: &FiniteStructure,
) -> Result<FiniteStructure> {
    canonical_amalgam_delta_with(spec, a, b, c, &BTreeMap::new())
}

/// Strong amalgam that orients every mixed subset by +1 on its ascending
/// representative; valid for any index set.
pub fn free_completion_amalgam(
    spec: &MultiSpec,
    a: &FiniteStructure,
    b: &FiniteStructure,
    c: &FiniteStructure,
) -> Result<FiniteStructure> {
    check_amalgam_inputs(a, b, c)?;
    let (av, bv, cv) = split(a, b, c);
    let mut out = b.clone();
    out.absorb(c);
    for (i, &n) in spec.arities.iter().enumerate() {
        let mut mixed = Vec::new();
        for_each_mixed_subset(&av, &bv, &cv, n, &mut |asc| mixed.push(asc.to_vec()));
        for asc in mixed {
            put_orbit(&mut out, i, &asc, 1);
        }
    }
    Ok(out)
}

/// Strong amalgam for H₄-free 3-hypertournaments. New points are added one at
/// a time; for each pair (b, c) every point `x` already related to both gets
/// the edge (x, b, c).
pub fn w_amalgam(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<FiniteStructure> {
    check_amalgam_inputs(a, b, c)?;
    if b.signature().relations().len() != 1 || b.signature().arity(0) != 3 {
        return Err(FraisseError::SignatureMismatch("expected one ternary relation".into()));
    }
    let (av, bv, cv) = split(a, b, c);
    let mut out = b.clone();
    out.absorb(c);
    for (j, &y) in cv.iter().enumerate() {
        for (i, &x) in bv.iter().enumerate() {
            let known = av.iter().chain(cv[..j].iter()).chain(bv[..i].iter());
            for &z in known {
                let mut asc = [z, x, y];
                let eps = sorting_sign(&asc).expect("distinct");
                asc.sort_unstable();
                put_orbit(&mut out, 0, &asc, eps);
            }
        }
    }
    Ok(out)
}

/// The four-point 3-hypertournament H₄.
pub fn h4() -> FiniteStructure {
    let mut s = FiniteStructure::on(Signature::of(&[("R", 3)], &[]), 0..4);
    for t in [[0, 1, 3], [1, 2, 3], [2, 0, 3], [0, 2, 1]] {
        for k in 0..3 {
            let rot = [t[k], t[(k + 1) % 3], t[(k + 2) % 3]];
            s.put(0, &rot);
        }
    }
    s
}

/// An embedding of H₄ into `s`, if one exists.
pub fn check_h4_free(s: &FiniteStructure) -> Option<BTreeMap<Elem, Elem>> {
    let h = h4().relabel_signature(s.signature().clone());
    find_embedding(&h, s)
}

/// An embedding of H₄ into `s` whose image contains `x`, if one exists.
pub fn h4_through(s: &FiniteStructure, x: Elem) -> Option<BTreeMap<Elem, Elem>> {
    let h = h4().relabel_signature(s.signature().clone());
    for v in 0..4 {
        let start: BTreeMap<Elem, Elem> = [(v, x)].into();
        if !crate::structure::is_partial_iso(&h, s, &start) {
            continue;
        }
        let todo: Vec<Elem> = (0..4).filter(|&u| u != v).collect();
        let mut found = None;
        search_extensions(&h, s, &start, &todo, &mut |m| {
            found = Some(m.clone());
            false
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

impl FiniteStructure {
    /// Same data over a signature with identical arities but possibly different names.
    pub fn relabel_signature(&self, sig: Arc<Signature>) -> FiniteStructure {
        let mut out = FiniteStructure::on(sig.clone(), self.elems());
        for r in 0..self.signature().relations().len() {
            for t in self.tuples(r) {
                out.put(r, &t);
            }
        }
        for f in 0..self.fn_count() {
            for (x, y) in self.fn_map(f).clone() {
                out.set_fn(f, x, y).expect("same universe");
            }
        }
        out
    }
}

/// Name of the reduct relation for the parameter tuple `u`.
pub fn reduct_name(u: &[Elem]) -> String {
    let mut name = String::from("R");
    for e in u {
        name.push('_');
        name.push_str(&e.to_string());
    }
    name
}

/// The reduct of an `n`-hypertournament to the complement of `params`
/// (|params| = n − 2), with one relation per subset of `params` ordered by
/// `orderings` (ascending identifiers when absent).
pub fn stabiliser_reduct(
    s: &FiniteStructure,
    relation: &str,
    params: &[Elem],
    orderings: Option<&BTreeMap<BTreeSet<Elem>, Vec<Elem>>>,
) -> Result<(FiniteStructure, MultiSpec)> {
    let r = s
        .signature()
        .rel(relation)
        .ok_or_else(|| FraisseError::UnknownSymbol(relation.into()))?;
    let n = s.signature().arity(r);
    if params.len() + 2 != n {
        return Err(FraisseError::pre(format!("need {} parameters, got {}", n - 2, params.len())));
    }
    s.check_elems(params.iter().copied())?;
    let mut sorted_params = params.to_vec();
    sorted_params.sort_unstable();
    let mut tuples_u: Vec<Vec<Elem>> = Vec::new();
    for k in (0..=params.len()).rev() {
        for_each_subset(&sorted_params, k, &mut |sub| {
            let key: BTreeSet<Elem> = sub.iter().copied().collect();
            let u = orderings.and_then(|o| o.get(&key)).cloned().unwrap_or_else(|| sub.to_vec());
            tuples_u.push(u);
        });
    }
    let rels: Vec<(String, usize)> = tuples_u.iter().map(|u| (reduct_name(u), n - u.len())).collect();
    let arities: Vec<usize> = rels.iter().map(|(_, a)| *a).collect();
    let sig = Signature::new(rels, vec![])?;
    let rest: Vec<Elem> = s.universe().iter().copied().filter(|e| !params.contains(e)).collect();
    let mut out = FiniteStructure::on(sig, rest.iter().copied());
    let mut buf = Vec::with_capacity(n);
    for (i, u) in tuples_u.iter().enumerate() {
        let k = n - u.len();
        crate::structure::for_each_tuple(&rest, k, &mut |v| {
            if sorting_sign(v).is_some() {
                buf.clear();
                buf.extend_from_slice(u);
                buf.extend_from_slice(v);
                if s.holds(r, &buf) {
                    out.put(i, v);
                }
            }
            true
        });
    }
    let spec = MultiSpec::with_first_binary_delta(arities)?;
    Ok((out, spec))
}

/// A finite structure with a partial map on it.
pub type PartialMap = (FiniteStructure, BTreeMap<Elem, Elem>);

/// Two partial automorphisms of `T_n` with no joint embedding: a transposition
/// of two points and the identity on `n − 2` further points.
pub fn tn_dense_conjugacy_witness(n: usize) -> Result<(PartialMap, PartialMap)> {
    if n < 3 {
        return Err(FraisseError::pre("the transposition witness needs n ≥ 3"));
    }
    let sig = Signature::of(&[("R", n)], &[]);
    let a = FiniteStructure::on(sig.clone(), 0..2);
    let fa: BTreeMap<Elem, Elem> = [(0, 1), (1, 0)].into();
    let b = FiniteStructure::on(sig, 0..(n as Elem - 2));
    let fb: BTreeMap<Elem, Elem> = b.universe().iter().map(|&e| (e, e)).collect();
    Ok(((a, fa), (b, fb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{enumerate_embeddings, find_isomorphism};

    #[test]
    fn permutation_signs() {
        assert_eq!(perm_sign(&[0, 1, 2]).unwrap(), 1);
        assert_eq!(perm_sign(&[1, 0, 2]).unwrap(), -1);
        assert_eq!(perm_sign(&[1, 2, 0]).unwrap(), 1);
        assert!(perm_sign(&[0, 0, 1]).is_err());
        assert!(perm_sign(&[0, 3]).is_err());
    }

    #[test]
    fn h4_is_a_hypertournament() {
        assert!(check_hypertournament(&h4(), "R", 3).unwrap().is_valid());
    }

    #[test]
    fn both_orbits_present_is_a_violation() {
        let mut s = FiniteStructure::on(Signature::of(&[("R", 3)], &[]), 0..3);
        s.add("R", &[0, 1, 2]).unwrap();
        s.add("R", &[1, 0, 2]).unwrap();
        assert_eq!(check_hypertournament(&s, "R", 3).unwrap(), HtVerdict::Violation(vec![0, 1, 2]));
        let empty = FiniteStructure::on(Signature::of(&[("R", 3)], &[]), 0..4);
        assert!(!check_hypertournament(&empty, "R", 3).unwrap().is_valid());
        let mut rep = FiniteStructure::on(Signature::of(&[("R", 3)], &[]), 0..3);
        rep.add("R", &[0, 0, 1]).unwrap();
        assert!(check_hypertournament(&rep, "R", 3).is_err());
    }

    #[test]
    fn sign_function_round_trip() {
        let s = hypertournament_from_sign_fn(0..4, 3, &|_| 1);
        let HtVerdict::Valid(map) = check_hypertournament(&s, "R", 3).unwrap() else { panic!() };
        assert!(map.values.values().all(|&v| v == 1));
        let h = h4();
        let HtVerdict::Valid(hmap) = check_hypertournament(&h, "R", 3).unwrap() else { panic!() };
        let rebuilt = hypertournament_from_sign_fn(0..4, 3, &|t| hmap.values[t]);
        assert!(find_isomorphism(&rebuilt, &h).is_some());
        assert_eq!(hmap.value(&[1, 0, 3]), Some(-hmap.values[&vec![0, 1, 3]]));
    }

    #[test]
    fn multi_checks() {
        let spec = MultiSpec::with_first_binary_delta(vec![2, 3]).unwrap();
        let mut s = FiniteStructure::on(spec.signature(), 0..3);
        s.add("R0", &[0, 1]).unwrap();
        s.add("R0", &[1, 2]).unwrap();
        s.add("R0", &[2, 0]).unwrap();
        put_orbit(&mut s, 1, &[0, 1, 2], -1);
        assert!(check_multi(&s, &spec).unwrap().is_valid());
        s.add("R0", &[1, 0]).unwrap();
        assert!(!check_multi(&s, &spec).unwrap().is_valid());
        assert!(MultiSpec::new(vec![3], Some(0)).is_err());
    }

    #[test]
    fn product_formula_example() {
        let spec = MultiSpec::with_first_binary_delta(vec![2, 3]).unwrap();
        let sig = spec.signature();
        let a = FiniteStructure::on(sig.clone(), [0]);
        let mut b = FiniteStructure::on(sig.clone(), [0, 1]);
        b.add("R0", &[0, 1]).unwrap();
        let mut c = FiniteStructure::on(sig.clone(), [0, 2]);
        c.add("R0", &[2, 0]).unwrap();
        let d = canonical_amalgam_delta(&spec, &a, &b, &c).unwrap();
        assert!(d.holds(0, &[1, 2]));
        let r3 = orbit_sign(&d, 1, &[0, 1, 2]).unwrap();
        assert_eq!(r3, -1);
        assert!(check_multi(&d, &spec).unwrap().is_valid());
        // empty base, singletons: no ternary tuples
        let e = FiniteStructure::new(sig.clone());
        let b1 = FiniteStructure::on(sig.clone(), [5]);
        let c1 = FiniteStructure::on(sig.clone(), [6]);
        let d1 = canonical_amalgam_delta(&spec, &e, &b1, &c1).unwrap();
        assert!(d1.holds(0, &[5, 6]));
        assert_eq!(d1.tuple_count(1), 0);
    }

    #[test]
    fn stabiliser_reducts() {
        let t3 = hypertournament_from_sign_fn(0..5, 3, &|t| if (t[0] + t[1] + t[2]) % 2 == 0 { 1 } else { -1 });
        let (red, spec) = stabiliser_reduct(&t3, "R", &[0], None).unwrap();
        assert!(check_multi(&red, &spec).unwrap().is_valid());
        assert_eq!(red.holds(0, &[1, 2]), t3.holds(0, &[0, 1, 2]));
        let t4 = hypertournament_from_sign_fn(0..8, 4, &|t| if (t[0] * 3 + t[1] + t[2] * t[3]) % 3 == 0 { 1 } else { -1 });
        let (red4, spec4) = stabiliser_reduct(&t4, "R", &[0, 1], None).unwrap();
        assert_eq!(spec4.arities, vec![2, 3, 3, 4]);
        assert!(check_multi(&red4, &spec4).unwrap().is_valid());
        let t2 = hypertournament_from_sign_fn(0..4, 2, &|_| 1);
        let (red2, _) = stabiliser_reduct(&t2, "R", &[], None).unwrap();
        assert_eq!(red2.tuples(0), t2.tuples(0));
        assert!(stabiliser_reduct(&t3, "R", &[0, 1], None).is_err());
    }

    #[test]
    fn h4_freeness() {
        assert!(check_h4_free(&h4()).is_some());
        let small = hypertournament_from_sign_fn(0..3, 3, &|_| -1);
        assert!(check_h4_free(&small).is_none());
        assert!(!enumerate_embeddings(&h4(), &h4()).unwrap().is_empty());
    }

    #[test]
    fn w_amalgam_avoids_h4() {
        let sig = Signature::of(&[("R", 3)], &[]);
        let mut found = 0;
        // all 3-point bases, all one-point extensions on both sides
        for base_sign in [1i8, -1] {
            let a = hypertournament_from_sign_fn(0..3, 3, &|_| base_sign);
            for mask_b in 0..8u32 {
                for mask_c in 0..8u32 {
                    let mk = |x: Elem, mask: u32| {
                        let mut s = a.clone();
                        s.add_elem(x);
                        let pairs = [[0, 1], [0, 2], [1, 2]];
                        for (k, p) in pairs.iter().enumerate() {
                            let sign = if mask >> k & 1 == 1 { 1 } else { -1 };
                            put_orbit(&mut s, 0, &[p[0], p[1], x], sign);
                        }
                        s
                    };
                    let b = mk(3, mask_b);
                    let c = mk(4, mask_c);
                    if check_h4_free(&b).is_some() || check_h4_free(&c).is_some() {
                        continue;
                    }
                    let d = w_amalgam(&a, &b, &c).unwrap();
                    assert_eq!(d.signature(), &sig);
                    assert!(check_hypertournament(&d, "R", 3).unwrap().is_valid());
                    assert!(check_h4_free(&d).is_none());
                    found += 1;
                }
            }
        }
        assert!(found > 0);
    }
}
