//! The supported Fraïssé classes behind one interface: membership, incremental
//! membership at a new point, one-point extensions and strong amalgamation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{FraisseError, Result};
use crate::hyper::{
    canonical_amalgam_delta_with, check_amalgam_inputs, check_h4_free, check_multi, for_each_subset,
    free_completion_amalgam, h4_through, orbit_sign, put_orbit, w_amalgam, MultiSpec, MultiVerdict,
};
use crate::partite::{
    arrow_signature, check_rho, check_semigeneric, rho_ok_at, rho_sigma_signature, rho_signature,
    semigeneric_amalgam_with_prefs, semigeneric_ok_at, EDGE,
};
use crate::structure::{canonical_code, enumerate_embeddings, is_partial_iso, Elem, FiniteStructure, Signature};
use crate::zoo::{
    check_dn, check_f_class, colour, coloured_signature, dn_amalgam_with_prefs, dn_ok_at, f_amalgam_with_prefs, f_ok_at,
    set_colour,
};

/// `(b, c, true)` asks for the distinguished binary relation to hold from `b`
/// to `c` when the amalgam leaves the pair unforced.
pub type Prefs = [(Elem, Elem, bool)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassKind {
    /// `n`-hypertournaments on relation `R`; `n = 2` is the random tournament.
    Hyper(usize),
    /// Multi-hypertournaments with a distinguished binary index.
    Multi(MultiSpec),
    /// `n`-coloured linear orders on relation `L` with colours `C0..`.
    ColouredOrder(usize),
    Graph,
    Semigeneric,
    Srho,
    SrhoSigma,
    /// Labelled `n`-partite tournaments.
    Dn(usize),
    /// Double-partite tournaments (parts of size ≤ 2).
    F,
    /// H₄-free 3-hypertournaments.
    W,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSpec {
    pub kind: ClassKind,
    sig: Arc<Signature>,
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn coloured_order_signature(n: usize) -> Arc<Signature> {
    let mut rels = vec![("L".to_string(), 2)];
    rels.extend((0..n).map(|i| (format!("C{i}"), 1)));
    Signature::new(rels, vec![]).expect("distinct names")
}

impl ClassSpec {
    pub fn new(kind: ClassKind) -> Result<Self> {
        let sig = match &kind {
            ClassKind::Hyper(n) if *n >= 2 => Signature::of(&[("R", *n)], &[]),
            ClassKind::Hyper(_) => return Err(FraisseError::pre("hypertournament arity must be at least 2")),
            ClassKind::Multi(spec) => {
                if spec.delta.is_none() {
                    return Err(FraisseError::pre("multi-hypertournament class needs a distinguished binary index"));
                }
                spec.signature()
            }
            ClassKind::ColouredOrder(n) if *n >= 1 => coloured_order_signature(*n),
            ClassKind::ColouredOrder(_) => return Err(FraisseError::pre("need at least one colour")),
            ClassKind::Graph => Signature::of(&[("E", 2)], &[]),
            ClassKind::Semigeneric | ClassKind::F => arrow_signature(),
            ClassKind::Srho => rho_signature(),
            ClassKind::SrhoSigma => rho_sigma_signature(),
            ClassKind::Dn(n) if *n >= 1 => coloured_signature(*n),
            ClassKind::Dn(_) => return Err(FraisseError::pre("need at least one label")),
            ClassKind::W => Signature::of(&[("R", 3)], &[]),
        };
        Ok(ClassSpec { kind, sig })
    }

    /// Parses names such as `t2`, `t3`, `t23`, `multi:2,3,3`, `q1`, `q2`, `graph`,
    /// `semigeneric`, `srho`, `srhosigma`, `d3`, `f`, `w`.
    pub fn parse(name: &str) -> Result<Self> {
        let n = name.trim().to_ascii_lowercase();
        let num = |s: &str| s.parse::<usize>().map_err(|_| FraisseError::Parse(format!("unknown class `{name}`")));
        let kind = match n.as_str() {
            "graph" | "random-graph" => ClassKind::Graph,
            "semigeneric" | "s" => ClassKind::Semigeneric,
            "srho" => ClassKind::Srho,
            "srhosigma" => ClassKind::SrhoSigma,
            "f" => ClassKind::F,
            "w" => ClassKind::W,
            "t23" => ClassKind::Multi(MultiSpec::with_first_binary_delta(vec![2, 3])?),
            _ if n.starts_with("multi:") => {
                let ar: Vec<usize> = n[6..].split(',').map(num).collect::<Result<_>>()?;
                ClassKind::Multi(MultiSpec::with_first_binary_delta(ar)?)
            }
            _ if n.starts_with("tn:") => ClassKind::Hyper(num(&n[3..])?),
            _ if n.starts_with('t') => ClassKind::Hyper(num(&n[1..])?),
            _ if n.starts_with("qn:") => ClassKind::ColouredOrder(num(&n[3..])?),
            _ if n.starts_with('q') => ClassKind::ColouredOrder(num(&n[1..])?),
            _ if n.starts_with("dn:") => ClassKind::Dn(num(&n[3..])?),
            _ if n.starts_with('d') => ClassKind::Dn(num(&n[1..])?),
            _ => return Err(FraisseError::Parse(format!("unknown class `{name}`"))),
        };
        Self::new(kind)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ClassKind::Hyper(n) => format!("t{n}"),
            ClassKind::Multi(spec) if spec.arities == [2, 3] => "t23".into(),
            ClassKind::Multi(spec) => {
                format!("multi:{}", spec.arities.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","))
            }
            ClassKind::ColouredOrder(n) => format!("q{n}"),
            ClassKind::Graph => "graph".into(),
            ClassKind::Semigeneric => "semigeneric".into(),
            ClassKind::Srho => "srho".into(),
            ClassKind::SrhoSigma => "srhosigma".into(),
            ClassKind::Dn(n) => format!("d{n}"),
            ClassKind::F => "f".into(),
            ClassKind::W => "w".into(),
        }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    /// Index of the binary relation that preferences refer to.
    pub fn pref_relation(&self) -> usize {
        match &self.kind {
            ClassKind::Multi(spec) => spec.delta.expect("checked at construction"),
            _ => 0,
        }
    }

    pub fn check(&self, s: &FiniteStructure) -> std::result::Result<(), String> {
        if **s.signature() != *self.sig {
            return Err(format!("signature does not match class {}", self.name()));
        }
        s.validate().map_err(|e| e.to_string())?;
        match &self.kind {
            ClassKind::Hyper(n) => match check_multi(s, &MultiSpec::new(vec![*n], None).expect("n ≥ 2")) {
                Ok(MultiVerdict::Valid(_)) => Ok(()),
                Ok(MultiVerdict::Violation { subset, .. }) => Err(format!("subset {subset:?} is not one orbit")),
                Err(e) => Err(e.to_string()),
            },
            ClassKind::Multi(spec) => match check_multi(s, spec) {
                Ok(MultiVerdict::Valid(_)) => Ok(()),
                Ok(MultiVerdict::Violation { index, subset }) => {
                    Err(format!("relation R{index}: subset {subset:?} is not one orbit"))
                }
                Err(e) => Err(e.to_string()),
            },
            ClassKind::W => {
                match check_multi(s, &MultiSpec::new(vec![3], None).expect("valid")) {
                    Ok(MultiVerdict::Valid(_)) => {}
                    Ok(MultiVerdict::Violation { subset, .. }) => {
                        return Err(format!("subset {subset:?} is not one orbit"))
                    }
                    Err(e) => return Err(e.to_string()),
                }
                match check_h4_free(s) {
                    Some(m) => Err(format!("contains H4 at {:?}", m.values().collect::<Vec<_>>())),
                    None => Ok(()),
                }
            }
            ClassKind::ColouredOrder(_) => {
                let elems = s.elems();
                for &x in &elems {
                    if !self.order_ok_at(s, x) {
                        return Err(format!("order or colour fails at {x}"));
                    }
                }
                Ok(())
            }
            ClassKind::Graph => {
                for t in s.tuples(0) {
                    if t[0] == t[1] || !s.holds(0, &[t[1], t[0]]) {
                        return Err(format!("edge {t:?} is a loop or not symmetric"));
                    }
                }
                Ok(())
            }
            ClassKind::Semigeneric => check_semigeneric(s).map(|_| ()).map_err(|v| format!("{v:?}")),
            ClassKind::Srho | ClassKind::SrhoSigma => check_rho(s).map(|_| ()),
            ClassKind::Dn(_) => check_dn(s).map(|_| ()),
            ClassKind::F => check_f_class(s).map(|_| ()),
        }
    }

    pub fn is_member(&self, s: &FiniteStructure) -> bool {
        self.check(s).is_ok()
    }

    fn order_ok_at(&self, s: &FiniteStructure, x: Elem) -> bool {
        if colour(s, x).is_none() {
            return false;
        }
        if s.holds(0, &[x, x]) {
            return false;
        }
        let lt = |a: Elem, b: Elem| s.holds(0, &[a, b]);
        for &y in s.universe() {
            if y == x {
                continue;
            }
            if lt(x, y) == lt(y, x) {
                return false;
            }
            for &z in s.universe() {
                if z == x || z == y {
                    continue;
                }
                if (lt(x, y) && lt(y, z) && !lt(x, z))
                    || (lt(y, x) && lt(x, z) && !lt(y, z))
                    || (lt(y, z) && lt(z, x) && !lt(y, x))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Class conditions involving `x`, assuming they hold on the rest.
    pub fn ok_at(&self, s: &FiniteStructure, x: Elem) -> bool {
        match &self.kind {
            ClassKind::Hyper(_) | ClassKind::Multi(_) | ClassKind::W => {
                let others: Vec<Elem> = s.elems().into_iter().filter(|&y| y != x).collect();
                for r in 0..self.sig.relations().len() {
                    let k = self.sig.arity(r);
                    let mut ok = true;
                    let mut buf = Vec::with_capacity(k);
                    for_each_subset(&others, k - 1, &mut |sub| {
                        if !ok {
                            return;
                        }
                        buf.clear();
                        buf.extend_from_slice(sub);
                        buf.push(x);
                        buf.sort_unstable();
                        if orbit_sign(s, r, &buf).is_none() {
                            ok = false;
                        }
                    });
                    if !ok {
                        return false;
                    }
                }
                !matches!(self.kind, ClassKind::W) || h4_through(s, x).is_none()
            }
            ClassKind::ColouredOrder(_) => self.order_ok_at(s, x),
            ClassKind::Graph => {
                !s.holds(0, &[x, x]) && s.universe().iter().all(|&y| s.holds(0, &[x, y]) == s.holds(0, &[y, x]))
            }
            ClassKind::Semigeneric => semigeneric_ok_at(s, x),
            ClassKind::Srho | ClassKind::SrhoSigma => rho_ok_at(s, x),
            ClassKind::Dn(_) => dn_ok_at(s, x),
            ClassKind::F => f_ok_at(s, x),
        }
    }

    /// All class-valid extensions of `base` (a member) generated by one new
    /// point `x = base.fresh()`; for ρ-expansions the closure may add the
    /// part's distinguished points as further fresh elements. Returned with
    /// the new point.
    pub fn one_point_extensions(&self, base: &FiniteStructure) -> Vec<(FiniteStructure, Elem)> {
        let x = base.fresh();
        let elems = base.elems();
        let mut out: Vec<FiniteStructure> = Vec::new();
        match &self.kind {
            ClassKind::Hyper(_) | ClassKind::Multi(_) | ClassKind::W => {
                // every (k−1)-subset of the base gets an orbit sign per relation
                let mut slots: Vec<(usize, Vec<Elem>)> = Vec::new();
                for r in 0..self.sig.relations().len() {
                    for_each_subset(&elems, self.sig.arity(r) - 1, &mut |sub| {
                        let mut t = sub.to_vec();
                        t.push(x);
                        slots.push((r, t));
                    });
                }
                for mask in 0u64..(1u64 << slots.len()) {
                    let mut e = base.clone();
                    e.add_elem(x);
                    for (i, (r, t)) in slots.iter().enumerate() {
                        put_orbit(&mut e, *r, t, if mask >> i & 1 == 1 { -1 } else { 1 });
                    }
                    out.push(e);
                }
            }
            ClassKind::ColouredOrder(n) => {
                let mut sorted = elems.clone();
                sorted.sort_by(|&a, &b| {
                    if a == b {
                        std::cmp::Ordering::Equal
                    } else if base.holds(0, &[a, b]) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                });
                for slot in 0..=sorted.len() {
                    for c in 0..*n {
                        let mut e = base.clone();
                        e.add_elem(x);
                        e.put(c + 1, &[x]);
                        for (i, &y) in sorted.iter().enumerate() {
                            if i < slot {
                                e.put(0, &[y, x]);
                            } else {
                                e.put(0, &[x, y]);
                            }
                        }
                        out.push(e);
                    }
                }
            }
            ClassKind::Graph => {
                for mask in 0u64..(1u64 << elems.len()) {
                    let mut e = base.clone();
                    e.add_elem(x);
                    for (i, &y) in elems.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            e.put(0, &[x, y]);
                            e.put(0, &[y, x]);
                        }
                    }
                    out.push(e);
                }
            }
            ClassKind::Semigeneric | ClassKind::F => {
                for_each_orientation(&elems, &mut |dirs| {
                    let mut e = base.clone();
                    e.add_elem(x);
                    orient(&mut e, x, &elems, dirs);
                    out.push(e);
                });
            }
            ClassKind::Dn(n) => {
                for c in 0..*n {
                    let others: Vec<Elem> = elems.iter().copied().filter(|&y| colour(base, y) != Some(c)).collect();
                    for mask in 0u64..(1u64 << others.len()) {
                        let mut e = base.clone();
                        set_colour(&mut e, x, c);
                        for (i, &y) in others.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                e.put(EDGE, &[y, x]);
                            } else {
                                e.put(EDGE, &[x, y]);
                            }
                        }
                        out.push(e);
                    }
                }
            }
            ClassKind::Srho | ClassKind::SrhoSigma => {
                out = self.rho_extensions(base, x, &elems);
            }
        }
        out.into_iter().filter(|e| self.is_member(e)).map(|e| (e, x)).collect()
    }

    fn rho_extensions(&self, base: &FiniteStructure, x: Elem, elems: &[Elem]) -> Vec<FiniteStructure> {
        let with_sigma = matches!(self.kind, ClassKind::SrhoSigma);
        let mut out = Vec::new();
        // roles of the part's distinguished points when x opens a new part:
        // (rho is x, sigma is x) with helpers filling the rest
        let fresh_roles: Vec<(bool, bool)> =
            if with_sigma { vec![(true, false), (false, true), (false, false)] } else { vec![(true, false), (false, false)] };
        for_each_orientation(elems, &mut |dirs| {
            let mut e = base.clone();
            e.add_elem(x);
            orient(&mut e, x, elems, dirs);
            if let Some(i) = dirs.iter().position(|&dd| dd == 0) {
                let y = elems[i];
                e.set_fn(0, x, base.fn_value(0, y).expect("total")).expect("known");
                if with_sigma {
                    e.set_fn(1, x, base.fn_value(1, y).expect("total")).expect("known");
                }
                out.push(e);
                return;
            }
            for &(x_rho, x_sigma) in &fresh_roles {
                let helpers = usize::from(!x_rho) + usize::from(with_sigma && !x_sigma);
                let ids: Vec<Elem> = (1..=helpers as Elem).map(|k| x + k).collect();
                // helpers sit in x's part; their edges to the base range over all choices
                let combos = 1u64 << (helpers * elems.len());
                for mask in 0..combos {
                    let mut f = e.clone();
                    for (h, &hid) in ids.iter().enumerate() {
                        f.add_elem(hid);
                        for (i, &y) in elems.iter().enumerate() {
                            if mask >> (h * elems.len() + i) & 1 == 1 {
                                f.put(EDGE, &[y, hid]);
                            } else {
                                f.put(EDGE, &[hid, y]);
                            }
                        }
                    }
                    let mut it = ids.iter().copied();
                    let rho_pt = if x_rho { x } else { it.next().expect("helper") };
                    let sigma_pt = if with_sigma { Some(if x_sigma { x } else { it.next().expect("helper") }) } else { None };
                    let part: Vec<Elem> = std::iter::once(x).chain(ids.iter().copied()).collect();
                    for &p in &part {
                        f.set_fn(0, p, rho_pt).expect("known");
                        if let Some(sp) = sigma_pt {
                            f.set_fn(1, p, sp).expect("known");
                        }
                    }
                    out.push(f);
                }
            }
        });
        out
    }

    pub fn amalgam(&self, a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<FiniteStructure> {
        self.amalgam_with_prefs(a, b, c, &[])
    }

    /// Strong amalgam of `b` and `c` over `a`, honouring `prefs` on pairs the
    /// class leaves unforced.
    pub fn amalgam_with_prefs(
        &self,
        a: &FiniteStructure,
        b: &FiniteStructure,
        c: &FiniteStructure,
        prefs: &Prefs,
    ) -> Result<FiniteStructure> {
        match &self.kind {
            ClassKind::Hyper(2) => {
                let spec = MultiSpec::new(vec![2], Some(0))?;
                canonical_amalgam_delta_with(&spec, a, b, c, &pref_map(prefs))
            }
            ClassKind::Hyper(n) => free_completion_amalgam(&MultiSpec::new(vec![*n], None)?, a, b, c),
            ClassKind::Multi(spec) => canonical_amalgam_delta_with(spec, a, b, c, &pref_map(prefs)),
            ClassKind::W => w_amalgam(a, b, c),
            ClassKind::ColouredOrder(_) => order_amalgam(a, b, c, prefs),
            ClassKind::Graph => {
                check_amalgam_inputs(a, b, c)?;
                let mut out = b.clone();
                out.absorb(c);
                for &(x, y, on) in prefs {
                    if on {
                        out.put(0, &[x, y]);
                        out.put(0, &[y, x]);
                    }
                }
                Ok(out)
            }
            ClassKind::Semigeneric | ClassKind::Srho | ClassKind::SrhoSigma => {
                semigeneric_amalgam_with_prefs(a, b, c, prefs)
            }
            ClassKind::Dn(_) => dn_amalgam_with_prefs(a, b, c, prefs),
            ClassKind::F => f_amalgam_with_prefs(a, b, c, prefs),
        }
    }

    /// Representatives of all members on exactly `size` points, up to isomorphism,
    /// built by iterated one-point extension.
    pub fn members_of_size(&self, size: usize) -> Vec<FiniteStructure> {
        let mut level = vec![FiniteStructure::new(self.sig.clone())];
        for _ in 0..size {
            let mut seen = BTreeSet::new();
            let mut next = Vec::new();
            for s in &level {
                for (e, _) in self.one_point_extensions(s) {
                    if e.len() > size {
                        continue;
                    }
                    let (norm, _) = e.normalized();
                    if seen.insert(canonical_code(&norm, &BTreeMap::new())) {
                        next.push(norm);
                    }
                }
            }
            level = next;
        }
        level.into_iter().filter(|s| s.len() == size).collect()
    }
}

fn pref_map(prefs: &Prefs) -> BTreeMap<(Elem, Elem), bool> {
    prefs.iter().map(|&(x, y, o)| ((x, y), o)).collect()
}

/// Orientation vectors over `elems`: 0 = ⊥, 1 = x → y, 2 = y → x.
fn for_each_orientation(elems: &[Elem], f: &mut dyn FnMut(&[u8])) {
    let mut dirs = vec![0u8; elems.len()];
    loop {
        f(&dirs);
        let mut i = 0;
        while i < dirs.len() {
            dirs[i] += 1;
            if dirs[i] < 3 {
                break;
            }
            dirs[i] = 0;
            i += 1;
        }
        if i == dirs.len() {
            return;
        }
    }
}

fn orient(e: &mut FiniteStructure, x: Elem, elems: &[Elem], dirs: &[u8]) {
    for (i, &y) in elems.iter().enumerate() {
        match dirs[i] {
            1 => e.put(EDGE, &[x, y]),
            2 => e.put(EDGE, &[y, x]),
            _ => {}
        }
    }
}

/// Merge of two coloured chains over a common subchain: new points in the same
/// gap of `A` go B-side first unless a preference says otherwise.
fn order_amalgam(a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure, prefs: &Prefs) -> Result<FiniteStructure> {
    check_amalgam_inputs(a, b, c)?;
    let pref = pref_map(prefs);
    let mut out = b.clone();
    out.absorb(c);
    let av = a.elems();
    for &x in b.universe().difference(a.universe()) {
        for &y in c.universe().difference(a.universe()) {
            let split_lt = av.iter().any(|&z| b.holds(0, &[x, z]) && c.holds(0, &[z, y]));
            let split_gt = av.iter().any(|&z| c.holds(0, &[y, z]) && b.holds(0, &[z, x]));
            let lt = if split_lt {
                true
            } else if split_gt {
                false
            } else {
                pref.get(&(x, y)).copied().unwrap_or(true)
            };
            if lt {
                out.put(0, &[x, y]);
            } else {
                out.put(0, &[y, x]);
            }
        }
    }
    Ok(out)
}

/// Result of searching for a stationarity obstruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    /// Candidate completions of the left type against the right set.
    pub candidates: Vec<FiniteStructure>,
    /// Symmetries of (base, left, right) as maps on base ∪ right.
    pub symmetries: Vec<BTreeMap<Elem, Elem>>,
    /// `(candidate, symmetry, image candidate)` for each candidate.
    pub moves: Vec<(usize, usize, usize)>,
    /// The point realizing the left type inside each candidate.
    pub point: Elem,
}

/// Looks for an obstruction to an invariant stationary choice: every class-valid
/// completion of `left` (a one-point extension of `m|base`, new point `x`)
/// against `m|right` over the base is moved by some symmetry of the data.
pub fn stationarity_obstruction_search(
    class: &ClassSpec,
    m: &FiniteStructure,
    base: &BTreeSet<Elem>,
    left: &FiniteStructure,
    x: Elem,
    right: &BTreeSet<Elem>,
) -> Result<Option<Obstruction>> {
    let whole: BTreeSet<Elem> = base.union(right).copied().collect();
    let w = m.induced(whole.iter().copied());
    if w.len() != whole.len() {
        return Err(FraisseError::pre("base ∪ right must be closed"));
    }
    if left.induced(base.iter().copied()) != m.induced(base.iter().copied()) || !left.contains(x) || base.contains(&x) {
        return Err(FraisseError::pre("left must extend the base by the point x"));
    }
    if left.len() != base.len() + 1 {
        return Err(FraisseError::pre("left must add exactly one point"));
    }
    let xx = w.fresh();
    let mut ren: BTreeMap<Elem, Elem> = base.iter().map(|&e| (e, e)).collect();
    ren.insert(x, xx);
    let left_r = left.relabel(&ren)?;
    let mut left_dom: Vec<Elem> = base.iter().copied().collect();
    left_dom.push(xx);
    let candidates: Vec<FiniteStructure> = class
        .one_point_extensions(&w)
        .into_iter()
        .filter(|(e, p)| *p == xx && e.len() == w.len() + 1 && e.induced(left_dom.iter().copied()) == left_r)
        .map(|(e, _)| e)
        .collect();
    let symmetries: Vec<BTreeMap<Elem, Elem>> = enumerate_embeddings(&w, &w)?
        .into_iter()
        .map(|p| p.map)
        .filter(|map| {
            base.iter().all(|e| base.contains(&map[e]))
                && right.iter().all(|e| right.contains(&map[e]))
                && {
                    let mut lm: BTreeMap<Elem, Elem> = base.iter().map(|e| (*e, map[e])).collect();
                    lm.insert(xx, xx);
                    is_partial_iso(&left_r, &left_r, &lm)
                }
        })
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut moves = Vec::new();
    for (ci, cand) in candidates.iter().enumerate() {
        let mut found = None;
        for (si, sym) in symmetries.iter().enumerate() {
            let mut full = sym.clone();
            full.insert(xx, xx);
            if !is_partial_iso(cand, cand, &full) {
                let image = cand.relabel(&full)?;
                let ii = candidates.iter().position(|k| *k == image).ok_or_else(|| {
                    FraisseError::violation("image of a candidate under a symmetry is not a candidate")
                })?;
                found = Some((ci, si, ii));
                break;
            }
        }
        match found {
            Some(mv) => moves.push(mv),
            None => return Ok(None),
        }
    }
    Ok(Some(Obstruction { candidates, symmetries, moves, point: xx }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partite::directed_four_cycle;

    #[test]
    fn parse_names_round_trip() {
        for name in ["t2", "t3", "t23", "q1", "q2", "graph", "semigeneric", "srho", "srhosigma", "d3", "f", "w"] {
            assert_eq!(ClassSpec::parse(name).unwrap().name(), name);
        }
        assert!(ClassSpec::parse("nope").is_err());
    }

    #[test]
    fn small_member_counts() {
        // tournaments on 3 points: the 3-cycle and the linear order
        assert_eq!(ClassSpec::parse("t2").unwrap().members_of_size(3).len(), 2);
        // 3-hypertournaments on 4 points up to isomorphism
        let t3 = ClassSpec::parse("t3").unwrap().members_of_size(4);
        assert!(!t3.is_empty());
        // H₄ is excluded from W
        let w = ClassSpec::parse("w").unwrap().members_of_size(4);
        assert!(w.len() < t3.len());
        assert_eq!(ClassSpec::parse("q2").unwrap().members_of_size(2).len(), 4);
        assert_eq!(ClassSpec::parse("graph").unwrap().members_of_size(3).len(), 4);
    }

    #[test]
    fn extensions_are_members() {
        for name in ["t2", "t3", "t23", "q2", "graph", "semigeneric", "srho", "srhosigma", "d3", "f", "w"] {
            let class = ClassSpec::parse(name).unwrap();
            for base in class.members_of_size(2) {
                let exts = class.one_point_extensions(&base);
                assert!(!exts.is_empty(), "{name}");
                for (e, x) in exts {
                    assert!(class.is_member(&e), "{name}");
                    assert!(class.ok_at(&e, x), "{name}");
                }
            }
        }
    }

    #[test]
    fn four_cycle_obstruction() {
        let class = ClassSpec::parse("semigeneric").unwrap();
        let m = directed_four_cycle();
        let base: BTreeSet<Elem> = [0, 2].into();
        let right: BTreeSet<Elem> = [1, 3].into();
        let mut left = m.induced([0, 2]);
        left.add_elem(9);
        let ob = stationarity_obstruction_search(&class, &m, &base, &left, 9, &right).unwrap().unwrap();
        assert_eq!(ob.candidates.len(), 2);
        assert_eq!(ob.moves.len(), 2);
        let (_, si, img) = ob.moves[0];
        assert_eq!(img, 1);
        assert_eq!(ob.symmetries[si], [(0, 2), (1, 3), (2, 0), (3, 1)].into());
    }

    #[test]
    fn random_tournament_has_no_obstruction() {
        let class = ClassSpec::parse("t2").unwrap();
        for m in class.members_of_size(3) {
            for (e, x) in class.one_point_extensions(&m.induced([0])) {
                let ob = stationarity_obstruction_search(&class, &m, &[0].into(), &e, x, &[1, 2].into()).unwrap();
                assert!(ob.is_none());
            }
        }
        let m = class.members_of_size(2).remove(0);
        let (e, x) = class.one_point_extensions(&m.induced([0, 1]))[0].clone();
        assert!(stationarity_obstruction_search(&class, &m, &[0, 1].into(), &e, x, &BTreeSet::new()).unwrap().is_none());
    }
}
