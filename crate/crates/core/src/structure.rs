//! Finite relational structures with unary total functions, quantifier-free
//! types, embeddings and partial isomorphisms.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::BuildHasherDefault;
use std::fmt;
use std::sync::Arc;

use crate::error::{FraisseError, Result};

/// Element identifier. Identifiers are opaque; every enumeration in the crate
/// runs in ascending identifier order.
pub type Elem = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelSym {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    relations: Vec<RelSym>,
    functions: Vec<String>,
}

impl Signature {
    pub fn new(relations: Vec<(String, usize)>, functions: Vec<String>) -> Result<Arc<Self>> {
        let mut seen = BTreeSet::new();
        for (name, arity) in &relations {
            if *arity == 0 {
                return Err(FraisseError::pre(format!("relation `{name}` has arity 0")));
            }
            if !seen.insert(name.clone()) {
                return Err(FraisseError::pre(format!("duplicate symbol `{name}`")));
            }
        }
        for name in &functions {
            if !seen.insert(name.clone()) {
                return Err(FraisseError::pre(format!("duplicate symbol `{name}`")));
            }
        }
        Ok(Arc::new(Signature {
            relations: relations
                .into_iter()
                .map(|(name, arity)| RelSym { name, arity })
                .collect(),
            functions,
        }))
    }

    /// Builds a fixed signature; panics on duplicate names, so only use with literals.
    pub fn of(relations: &[(&str, usize)], functions: &[&str]) -> Arc<Self> {
        Self::new(
            relations.iter().map(|(n, a)| (n.to_string(), *a)).collect(),
            functions.iter().map(|f| f.to_string()).collect(),
        )
        .expect("literal signature is well formed")
    }

    pub fn relations(&self) -> &[RelSym] {
        &self.relations
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn rel(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn func(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f == name)
    }

    pub fn arity(&self, r: usize) -> usize {
        self.relations[r].arity
    }
}

type PackedSet = HashSet<u128, BuildHasherDefault<DefaultHasher>>;

/// Tuples of arity at most four are packed into a `u128`; the packing is
/// order preserving, so sorting the keys gives lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
enum TupleSet {
    Packed(PackedSet),
    Wide(BTreeSet<Vec<Elem>>),
}

fn pack(t: &[Elem]) -> u128 {
    t.iter().fold(0u128, |acc, &e| (acc << 32) | e as u128)
}

fn unpack(mut k: u128, arity: usize) -> Vec<Elem> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = (k & 0xffff_ffff) as Elem;
        k >>= 32;
    }
    out
}

impl TupleSet {
    fn new(arity: usize) -> Self {
        if arity <= 4 {
            TupleSet::Packed(PackedSet::default())
        } else {
            TupleSet::Wide(BTreeSet::new())
        }
    }

    fn insert(&mut self, t: &[Elem]) -> bool {
        match self {
            TupleSet::Packed(s) => s.insert(pack(t)),
            TupleSet::Wide(s) => s.insert(t.to_vec()),
        }
    }

    fn remove(&mut self, t: &[Elem]) -> bool {
        match self {
            TupleSet::Packed(s) => s.remove(&pack(t)),
            TupleSet::Wide(s) => s.remove(t),
        }
    }

    fn contains(&self, t: &[Elem]) -> bool {
        match self {
            TupleSet::Packed(s) => s.contains(&pack(t)),
            TupleSet::Wide(s) => s.contains(t),
        }
    }

    fn len(&self) -> usize {
        match self {
            TupleSet::Packed(s) => s.len(),
            TupleSet::Wide(s) => s.len(),
        }
    }

    /// Visits every tuple in no particular order.
    fn for_each(&self, arity: usize, f: &mut dyn FnMut(&[Elem])) {
        match self {
            TupleSet::Packed(s) => {
                let mut buf = [0 as Elem; 4];
                for &k in s {
                    let mut k = k;
                    for slot in buf[..arity].iter_mut().rev() {
                        *slot = (k & 0xffff_ffff) as Elem;
                        k >>= 32;
                    }
                    f(&buf[..arity]);
                }
            }
            TupleSet::Wide(s) => s.iter().for_each(|t| f(t)),
        }
    }

    fn to_vecs(&self, arity: usize) -> Vec<Vec<Elem>> {
        match self {
            TupleSet::Packed(s) => {
                let mut keys: Vec<u128> = s.iter().copied().collect();
                keys.sort_unstable();
                keys.into_iter().map(|k| unpack(k, arity)).collect()
            }
            TupleSet::Wide(s) => s.iter().cloned().collect(),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    sig: Arc<Signature>,
    universe: BTreeSet<Elem>,
    rels: Vec<TupleSet>,
    funcs: Vec<BTreeMap<Elem, Elem>>,
}

impl fmt::Debug for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("FiniteStructure");
        d.field("universe", &self.universe);
        for (i, r) in self.sig.relations.iter().enumerate() {
            d.field(&r.name, &self.tuples(i));
        }
        for (i, name) in self.sig.functions.iter().enumerate() {
            d.field(name, &self.funcs[i]);
        }
        d.finish()
    }
}

impl FiniteStructure {
    pub fn new(sig: Arc<Signature>) -> Self {
        let rels = sig.relations.iter().map(|r| TupleSet::new(r.arity)).collect();
        let funcs = vec![BTreeMap::new(); sig.functions.len()];
        FiniteStructure { sig, universe: BTreeSet::new(), rels, funcs }
    }

    pub fn on(sig: Arc<Signature>, universe: impl IntoIterator<Item = Elem>) -> Self {
        let mut s = Self::new(sig);
        s.universe.extend(universe);
        s
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn universe(&self) -> &BTreeSet<Elem> {
        &self.universe
    }

    pub fn elems(&self) -> Vec<Elem> {
        self.universe.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn contains(&self, e: Elem) -> bool {
        self.universe.contains(&e)
    }

    /// Least identifier strictly above every element.
    pub fn fresh(&self) -> Elem {
        self.universe.iter().next_back().map_or(0, |m| m + 1)
    }

    pub fn add_elem(&mut self, e: Elem) -> bool {
        self.universe.insert(e)
    }

    pub fn add_tuple(&mut self, r: usize, t: &[Elem]) -> Result<()> {
        let sym = self
            .sig
            .relations
            .get(r)
            .ok_or_else(|| FraisseError::UnknownSymbol(format!("relation #{r}")))?;
        if sym.arity != t.len() {
            return Err(FraisseError::Arity { name: sym.name.clone(), expected: sym.arity, got: t.len() });
        }
        if let Some(&e) = t.iter().find(|e| !self.universe.contains(e)) {
            return Err(FraisseError::UnknownElement(e));
        }
        self.rels[r].insert(t);
        Ok(())
    }

    pub fn add(&mut self, name: &str, t: &[Elem]) -> Result<()> {
        let r = self.sig.rel(name).ok_or_else(|| FraisseError::UnknownSymbol(name.into()))?;
        self.add_tuple(r, t)
    }

    /// Inserts without validation; callers guarantee arity and membership.
    pub(crate) fn put(&mut self, r: usize, t: &[Elem]) {
        debug_assert_eq!(t.len(), self.sig.relations[r].arity);
        self.rels[r].insert(t);
    }

    pub fn remove_tuple(&mut self, r: usize, t: &[Elem]) -> bool {
        self.rels[r].remove(t)
    }

    pub fn holds(&self, r: usize, t: &[Elem]) -> bool {
        self.rels[r].contains(t)
    }

    pub fn holds_named(&self, name: &str, t: &[Elem]) -> bool {
        self.sig.rel(name).is_some_and(|r| self.holds(r, t))
    }

    pub fn tuples(&self, r: usize) -> Vec<Vec<Elem>> {
        self.rels[r].to_vecs(self.sig.relations[r].arity)
    }

    pub fn tuple_count(&self, r: usize) -> usize {
        self.rels[r].len()
    }

    pub fn set_fn(&mut self, f: usize, x: Elem, y: Elem) -> Result<()> {
        if f >= self.funcs.len() {
            return Err(FraisseError::UnknownSymbol(format!("function #{f}")));
        }
        for e in [x, y] {
            if !self.universe.contains(&e) {
                return Err(FraisseError::UnknownElement(e));
            }
        }
        self.funcs[f].insert(x, y);
        Ok(())
    }

    pub fn fn_value(&self, f: usize, x: Elem) -> Option<Elem> {
        self.funcs[f].get(&x).copied()
    }

    pub fn fn_map(&self, f: usize) -> &BTreeMap<Elem, Elem> {
        &self.funcs[f]
    }

    pub fn fn_count(&self) -> usize {
        self.funcs.len()
    }

    /// Closure of `seed` under all function symbols.
    pub fn closure(&self, seed: impl IntoIterator<Item = Elem>) -> BTreeSet<Elem> {
        let mut out: BTreeSet<Elem> = BTreeSet::new();
        let mut stack: Vec<Elem> = seed.into_iter().collect();
        while let Some(x) = stack.pop() {
            if !out.insert(x) {
                continue;
            }
            for f in &self.funcs {
                if let Some(&y) = f.get(&x) {
                    if !out.contains(&y) {
                        stack.push(y);
                    }
                }
            }
        }
        out
    }

    pub fn check_elems(&self, es: impl IntoIterator<Item = Elem>) -> Result<()> {
        for e in es {
            if !self.universe.contains(&e) {
                return Err(FraisseError::UnknownElement(e));
            }
        }
        Ok(())
    }

    /// Substructure generated by `set`.
    pub fn induced(&self, set: impl IntoIterator<Item = Elem>) -> FiniteStructure {
        let keep = self.closure(set);
        let mut out = FiniteStructure::on(self.sig.clone(), keep.iter().copied());
        let keep_vec: Vec<Elem> = keep.iter().copied().collect();
        for (r, sym) in self.sig.relations.iter().enumerate() {
            let candidates = (keep_vec.len() as f64).powi(sym.arity as i32);
            if candidates <= self.rels[r].len() as f64 {
                for_each_tuple(&keep_vec, sym.arity, &mut |t| {
                    if self.rels[r].contains(t) {
                        out.rels[r].insert(t);
                    }
                    true
                });
            } else {
                let dst = &mut out.rels[r];
                self.rels[r].for_each(sym.arity, &mut |t| {
                    if t.iter().all(|e| keep.contains(e)) {
                        dst.insert(t);
                    }
                });
            }
        }
        for (f, map) in self.funcs.iter().enumerate() {
            for &x in &keep {
                if let Some(&y) = map.get(&x) {
                    out.funcs[f].insert(x, y);
                }
            }
        }
        out
    }

    /// `sub` is exactly the substructure of `self` on `sub`'s universe.
    pub fn agrees_on(&self, sub: &FiniteStructure) -> bool {
        if self.sig != sub.sig || !sub.universe.is_subset(&self.universe) {
            return false;
        }
        for (r, sym) in self.sig.relations.iter().enumerate() {
            let mut ok = true;
            sub.rels[r].for_each(sym.arity, &mut |t| ok &= self.rels[r].contains(t));
            if !ok {
                return false;
            }
            let want = sub.rels[r].len();
            let keep: Vec<Elem> = sub.universe.iter().copied().collect();
            let mut count = 0;
            if (keep.len() as f64).powi(sym.arity as i32) <= self.rels[r].len() as f64 {
                for_each_tuple(&keep, sym.arity, &mut |t| {
                    if self.rels[r].contains(t) {
                        count += 1;
                    }
                    count <= want
                });
            } else {
                self.rels[r].for_each(sym.arity, &mut |t| {
                    if t.iter().all(|e| sub.universe.contains(e)) {
                        count += 1;
                    }
                });
            }
            if count != want {
                return false;
            }
        }
        self.funcs.iter().zip(&sub.funcs).all(|(f, g)| sub.universe.iter().all(|x| f.get(x) == g.get(x)))
    }

    /// The structure with `pts` and every tuple touching them removed.
    pub fn without(&self, pts: &[Elem]) -> FiniteStructure {
        let mut out = self.clone();
        let gone: BTreeSet<Elem> = pts.iter().copied().collect();
        let rest: Vec<Elem> = self.universe.difference(&gone).copied().collect();
        let special: Vec<Elem> = gone.iter().copied().filter(|e| self.universe.contains(e)).collect();
        for (r, sym) in self.sig.relations.iter().enumerate() {
            let dst = &mut out.rels[r];
            if dst.len() == 0 {
                continue;
            }
            for_each_touching(&rest, &special, sym.arity, &mut |t| {
                dst.remove(t);
                true
            });
        }
        for f in out.funcs.iter_mut() {
            f.retain(|x, y| !gone.contains(x) && !gone.contains(y));
        }
        for e in &special {
            out.universe.remove(e);
        }
        out
    }

    /// Checks tuple membership and totality of functions.
    pub fn validate(&self) -> Result<()> {
        for (r, sym) in self.sig.relations.iter().enumerate() {
            for t in self.rels[r].to_vecs(sym.arity) {
                self.check_elems(t.iter().copied())?;
            }
        }
        for (f, map) in self.funcs.iter().enumerate() {
            for &x in &self.universe {
                match map.get(&x) {
                    Some(y) if self.universe.contains(y) => {}
                    Some(y) => return Err(FraisseError::UnknownElement(*y)),
                    None => {
                        return Err(FraisseError::pre(format!(
                            "function `{}` undefined at {x}",
                            self.sig.functions[f]
                        )))
                    }
                }
            }
            if let Some((&x, _)) = map.iter().find(|(x, _)| !self.universe.contains(x)) {
                return Err(FraisseError::UnknownElement(x));
            }
        }
        Ok(())
    }

    /// Renames elements; `map` must be injective on the universe.
    pub fn relabel(&self, map: &BTreeMap<Elem, Elem>) -> Result<FiniteStructure> {
        let image: BTreeSet<Elem> = self
            .universe
            .iter()
            .map(|e| map.get(e).copied().ok_or(FraisseError::UnknownElement(*e)))
            .collect::<Result<_>>()?;
        if image.len() != self.universe.len() {
            return Err(FraisseError::pre("relabelling is not injective"));
        }
        let mut out = FiniteStructure::on(self.sig.clone(), image);
        for (r, sym) in self.sig.relations.iter().enumerate() {
            for t in self.rels[r].to_vecs(sym.arity) {
                let mapped: Vec<Elem> = t.iter().map(|e| map[e]).collect();
                out.rels[r].insert(&mapped);
            }
        }
        for (f, fm) in self.funcs.iter().enumerate() {
            for (x, y) in fm {
                out.funcs[f].insert(map[x], map[y]);
            }
        }
        Ok(out)
    }

    /// Adds the elements, tuples and function values of `other` (same signature).
    pub fn absorb(&mut self, other: &FiniteStructure) {
        debug_assert_eq!(*self.sig, *other.sig);
        self.universe.extend(other.universe.iter().copied());
        for (r, sym) in self.sig.relations.iter().enumerate() {
            for t in other.rels[r].to_vecs(sym.arity) {
                self.rels[r].insert(&t);
            }
        }
        for (f, fm) in other.funcs.iter().enumerate() {
            for (x, y) in fm {
                self.funcs[f].insert(*x, *y);
            }
        }
    }

    /// Copy of `self` with universe renumbered to `0..len` in ascending order.
    pub fn normalized(&self) -> (FiniteStructure, BTreeMap<Elem, Elem>) {
        let map: BTreeMap<Elem, Elem> =
            self.universe.iter().enumerate().map(|(i, &e)| (e, i as Elem)).collect();
        (self.relabel(&map).expect("enumeration map is a bijection"), map)
    }
}

/// Calls `f` on every tuple of length `r` over `all` (lexicographic in the
/// order of `all`); stops early when `f` returns false. Returns false iff stopped.
pub fn for_each_tuple(all: &[Elem], r: usize, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
    let mut buf = vec![0; r];
    fn rec(all: &[Elem], buf: &mut [Elem], pos: usize, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        if pos == buf.len() {
            return f(buf);
        }
        for &e in all {
            buf[pos] = e;
            if !rec(all, buf, pos + 1, f) {
                return false;
            }
        }
        true
    }
    rec(all, &mut buf, 0, f)
}

/// Calls `f` on every tuple of length `r` over `plain ∪ special` that contains
/// at least one element of `special`. The two slices must be disjoint.
pub fn for_each_touching(
    plain: &[Elem],
    special: &[Elem],
    r: usize,
    f: &mut dyn FnMut(&[Elem]) -> bool,
) -> bool {
    let all: Vec<Elem> = special.iter().chain(plain.iter()).copied().collect();
    let mut buf = vec![0; r];
    // The first special entry sits at position `p`.
    fn rec(
        plain: &[Elem],
        special: &[Elem],
        all: &[Elem],
        p: usize,
        buf: &mut [Elem],
        pos: usize,
        f: &mut dyn FnMut(&[Elem]) -> bool,
    ) -> bool {
        if pos == buf.len() {
            return f(buf);
        }
        let pool = match pos.cmp(&p) {
            std::cmp::Ordering::Less => plain,
            std::cmp::Ordering::Equal => special,
            std::cmp::Ordering::Greater => all,
        };
        for &e in pool {
            buf[pos] = e;
            if !rec(plain, special, all, p, buf, pos + 1, f) {
                return false;
            }
        }
        true
    }
    for p in 0..r {
        if !rec(plain, special, &all, p, &mut buf, 0, f) {
            return false;
        }
    }
    true
}

/// A term of a quantifier-free type: a parameter, a tuple position (the first
/// position carrying that element), or a point reached by applying functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Param(Elem),
    Var(u32),
    Derived(u32),
}

/// Canonical quantifier-free type of a tuple over a parameter set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QfType {
    pub params: Vec<Elem>,
    pub positions: Vec<Term>,
    pub derived: u32,
    pub facts: Vec<(usize, Vec<Term>)>,
    pub values: Vec<(usize, Term, Term)>,
}

impl QfType {
    pub fn arity(&self) -> usize {
        self.positions.len()
    }

    /// True when no position is a parameter.
    pub fn is_exterior(&self) -> bool {
        self.positions.iter().all(|t| !matches!(t, Term::Param(_)))
    }

    /// Renames the parameters along `map`.
    pub fn transport(&self, map: &BTreeMap<Elem, Elem>) -> Result<QfType> {
        let tr = |t: &Term| -> Result<Term> {
            Ok(match t {
                Term::Param(e) => Term::Param(*map.get(e).ok_or(FraisseError::UnknownElement(*e))?),
                other => *other,
            })
        };
        let mut params: Vec<Elem> = self
            .params
            .iter()
            .map(|e| map.get(e).copied().ok_or(FraisseError::UnknownElement(*e)))
            .collect::<Result<_>>()?;
        params.sort_unstable();
        let positions = self.positions.iter().map(tr).collect::<Result<_>>()?;
        let mut facts: Vec<(usize, Vec<Term>)> = self
            .facts
            .iter()
            .map(|(r, ts)| Ok((*r, ts.iter().map(tr).collect::<Result<Vec<_>>>()?)))
            .collect::<Result<_>>()?;
        facts.sort();
        let mut values: Vec<(usize, Term, Term)> = self
            .values
            .iter()
            .map(|(f, a, b)| Ok((*f, tr(a)?, tr(b)?)))
            .collect::<Result<_>>()?;
        values.sort();
        Ok(QfType { params, positions, derived: self.derived, facts, values })
    }
}

/// Quantifier-free type of `tuple` over (the closure of) `params`.
pub fn qftp(s: &FiniteStructure, tuple: &[Elem], params: impl IntoIterator<Item = Elem>) -> Result<QfType> {
    let params: Vec<Elem> = params.into_iter().collect();
    s.check_elems(params.iter().copied())?;
    s.check_elems(tuple.iter().copied())?;
    let pset = s.closure(params);
    let mut term: BTreeMap<Elem, Term> = pset.iter().map(|&e| (e, Term::Param(e))).collect();
    let mut order: Vec<Elem> = Vec::new();
    let mut positions = Vec::with_capacity(tuple.len());
    for (i, &e) in tuple.iter().enumerate() {
        let t = *term.entry(e).or_insert_with(|| {
            order.push(e);
            Term::Var(i as u32)
        });
        positions.push(t);
    }
    let mut derived = 0u32;
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for f in 0..s.fn_count() {
            if let Some(y) = s.fn_value(f, x) {
                term.entry(y).or_insert_with(|| {
                    order.push(y);
                    derived += 1;
                    Term::Derived(derived - 1)
                });
            }
        }
    }
    let plain: Vec<Elem> = pset.iter().copied().collect();
    let mut facts = Vec::new();
    for (r, sym) in s.sig.relations.iter().enumerate() {
        for_each_touching(&plain, &order, sym.arity, &mut |t| {
            if s.holds(r, t) {
                facts.push((r, t.iter().map(|e| term[e]).collect()));
            }
            true
        });
    }
    facts.sort();
    let mut values = Vec::new();
    for &x in &order {
        for f in 0..s.fn_count() {
            if let Some(y) = s.fn_value(f, x) {
                values.push((f, term[&x], term[&y]));
            }
        }
    }
    values.sort();
    Ok(QfType { params: plain, positions, derived, facts, values })
}

/// Whether `map ∪ {v ↦ w}` still preserves and reflects all relations and
/// function values among `dom ∪ {v}`, given that `map` (with domain `dom`) does.
pub fn consistent_step(
    src: &FiniteStructure,
    tgt: &FiniteStructure,
    map: &BTreeMap<Elem, Elem>,
    dom: &[Elem],
    v: Elem,
    w: Elem,
) -> bool {
    if map.contains_key(&v) {
        return false;
    }
    for (f, fm) in src.funcs.iter().enumerate() {
        let fv = fm.get(&v).copied();
        let fw = tgt.funcs[f].get(&w).copied();
        let expect = match fv {
            Some(x) if x == v => Some(w),
            Some(x) => map.get(&x).copied(),
            None => None,
        };
        if let Some(e) = expect {
            if fw != Some(e) {
                return false;
            }
        } else if let Some(y) = fw {
            // Reflection: f(w) lands on the image side only if f(v) does.
            if y == w || map.values().any(|&m| m == y) {
                return false;
            }
        }
        for &u in dom {
            let fu = fm.get(&u).copied();
            let fmu = tgt.funcs[f].get(&map[&u]).copied();
            if (fu == Some(v)) != (fmu == Some(w)) {
                return false;
            }
        }
    }
    let mut order: Vec<usize> = (0..src.sig.relations.len()).collect();
    order.sort_by_key(|&r| src.sig.relations[r].arity);
    let mut mapped = Vec::new();
    for r in order {
        let arity = src.sig.relations[r].arity;
        let ok = for_each_touching(dom, &[v], arity, &mut |t| {
            mapped.clear();
            mapped.extend(t.iter().map(|e| if *e == v { w } else { map[e] }));
            src.holds(r, t) == tgt.holds(r, &mapped)
        });
        if !ok {
            return false;
        }
    }
    true
}

/// Checks that `map` is an injective partial map preserving and reflecting all
/// relations and function values on its domain.
pub fn is_partial_iso(src: &FiniteStructure, tgt: &FiniteStructure, map: &BTreeMap<Elem, Elem>) -> bool {
    let mut acc = BTreeMap::new();
    let mut dom = Vec::new();
    let mut image = BTreeSet::new();
    for (&v, &w) in map {
        if !src.contains(v) || !tgt.contains(w) || !image.insert(w) {
            return false;
        }
        if !consistent_step(src, tgt, &acc, &dom, v, w) {
            return false;
        }
        acc.insert(v, w);
        dom.push(v);
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialIso {
    pub source: Arc<FiniteStructure>,
    pub target: Arc<FiniteStructure>,
    pub map: BTreeMap<Elem, Elem>,
}

impl PartialIso {
    pub fn new(source: Arc<FiniteStructure>, target: Arc<FiniteStructure>, map: BTreeMap<Elem, Elem>) -> Result<Self> {
        if source.sig != target.sig {
            return Err(FraisseError::SignatureMismatch("partial isomorphism endpoints".into()));
        }
        if !is_partial_iso(&source, &target, &map) {
            return Err(FraisseError::violation("map is not a partial isomorphism"));
        }
        Ok(PartialIso { source, target, map })
    }

    pub fn domain(&self) -> Vec<Elem> {
        self.map.keys().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<Elem> {
        self.map.values().copied().collect()
    }

    pub fn inverse(&self) -> PartialIso {
        PartialIso {
            source: self.target.clone(),
            target: self.source.clone(),
            map: self.map.iter().map(|(a, b)| (*b, *a)).collect(),
        }
    }

    pub fn is_total(&self) -> bool {
        self.map.len() == self.source.len()
    }
}

/// All targets `w` for which `p ∪ {v ↦ w}` is a partial isomorphism.
pub fn extend_partial_iso(p: &PartialIso, v: Elem) -> Result<Vec<Elem>> {
    if !p.source.contains(v) {
        return Err(FraisseError::UnknownElement(v));
    }
    if p.map.contains_key(&v) {
        return Err(FraisseError::pre(format!("{v} already in the domain")));
    }
    let dom = p.domain();
    let image = p.image();
    Ok(p
        .target
        .universe()
        .iter()
        .copied()
        .filter(|w| !image.contains(w) && consistent_step(&p.source, &p.target, &p.map, &dom, v, *w))
        .collect())
}

/// Backtracking over injective extensions of `start` to `todo`, in
/// lexicographic order. `f` returns false to stop.
pub fn search_extensions(
    src: &FiniteStructure,
    tgt: &FiniteStructure,
    start: &BTreeMap<Elem, Elem>,
    todo: &[Elem],
    f: &mut dyn FnMut(&BTreeMap<Elem, Elem>) -> bool,
) -> bool {
    let mut map = start.clone();
    let mut dom: Vec<Elem> = map.keys().copied().collect();
    let mut used: BTreeSet<Elem> = map.values().copied().collect();
    let cands: Vec<Elem> = tgt.universe().iter().copied().collect();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        src: &FiniteStructure,
        tgt: &FiniteStructure,
        map: &mut BTreeMap<Elem, Elem>,
        dom: &mut Vec<Elem>,
        used: &mut BTreeSet<Elem>,
        cands: &[Elem],
        todo: &[Elem],
        f: &mut dyn FnMut(&BTreeMap<Elem, Elem>) -> bool,
    ) -> bool {
        let Some((&v, rest)) = todo.split_first() else {
            return f(map);
        };
        for &w in cands {
            if used.contains(&w) || !consistent_step(src, tgt, map, dom, v, w) {
                continue;
            }
            map.insert(v, w);
            dom.push(v);
            used.insert(w);
            let go_on = rec(src, tgt, map, dom, used, cands, rest, f);
            map.remove(&v);
            dom.pop();
            used.remove(&w);
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(src, tgt, &mut map, &mut dom, &mut used, &cands, todo, f)
}

/// All embeddings of `a` into `b`, in lexicographic order of image tuples.
pub fn enumerate_embeddings(a: &FiniteStructure, b: &FiniteStructure) -> Result<Vec<PartialIso>> {
    if a.sig != b.sig {
        return Err(FraisseError::SignatureMismatch("embedding endpoints".into()));
    }
    let sa = Arc::new(a.clone());
    let sb = Arc::new(b.clone());
    let mut out = Vec::new();
    let todo = a.elems();
    search_extensions(a, b, &BTreeMap::new(), &todo, &mut |m| {
        out.push(PartialIso { source: sa.clone(), target: sb.clone(), map: m.clone() });
        true
    });
    Ok(out)
}

/// Result of [`equalizing_tuple_search`].
#[derive(Clone, Debug)]
pub enum Equalizer {
    /// `tuple` lives in `structure`, which is `s` plus the `added` new points.
    Found { structure: FiniteStructure, tuple: Vec<Elem>, added: Vec<Elem> },
    /// Nothing found with at most `bound` new points; not a proof of absence.
    Exhausted { bound: usize, nodes: usize },
}

/// Looks for distinct `c̄` of length `len`, outside `ā ∪ b̄`, with
/// `qftp(ā c̄) = qftp(b̄ c̄)`, using existing points and up to `k` points added
/// through `extender` (which returns one-point extensions with their new point).
pub fn equalizing_tuple_search(
    s: &FiniteStructure,
    a: &[Elem],
    b: &[Elem],
    len: usize,
    k: usize,
    extender: &mut dyn FnMut(&FiniteStructure) -> Vec<(FiniteStructure, Elem)>,
) -> Result<Equalizer> {
    s.check_elems(a.iter().chain(b).copied())?;
    if a.len() != b.len() {
        return Err(FraisseError::pre("tuples must have equal length"));
    }
    if a.iter().any(|x| b.contains(x)) {
        return Err(FraisseError::pre("tuples must be disjoint"));
    }
    struct Search<'a> {
        a: &'a [Elem],
        b: &'a [Elem],
        len: usize,
        k: usize,
        nodes: usize,
        extender: &'a mut dyn FnMut(&FiniteStructure) -> Vec<(FiniteStructure, Elem)>,
    }
    impl Search<'_> {
        fn equal(&self, s: &FiniteStructure, c: &[Elem]) -> bool {
            let ta: Vec<Elem> = self.a.iter().chain(c).copied().collect();
            let tb: Vec<Elem> = self.b.iter().chain(c).copied().collect();
            qftp(s, &ta, []).ok() == qftp(s, &tb, []).ok()
        }

        fn go(&mut self, s: &FiniteStructure, c: &mut Vec<Elem>, added: &mut Vec<Elem>) -> Option<FiniteStructure> {
            self.nodes += 1;
            if c.len() == self.len {
                return Some(s.clone());
            }
            for e in s.elems() {
                if self.a.contains(&e) || self.b.contains(&e) || c.contains(&e) {
                    continue;
                }
                c.push(e);
                if self.equal(s, c) {
                    if let Some(done) = self.go(s, c, added) {
                        return Some(done);
                    }
                }
                c.pop();
            }
            if added.len() < self.k {
                for (ext, x) in (self.extender)(s) {
                    c.push(x);
                    added.push(x);
                    if self.equal(&ext, c) {
                        if let Some(done) = self.go(&ext, c, added) {
                            return Some(done);
                        }
                    }
                    added.pop();
                    c.pop();
                }
            }
            None
        }
    }
    let mut search = Search { a, b, len, k, nodes: 0, extender };
    if !search.equal(s, &[]) {
        // the empty tuple already fails, so no c̄ can help
        return Ok(Equalizer::Exhausted { bound: k, nodes: 0 });
    }
    let mut c = Vec::new();
    let mut added = Vec::new();
    Ok(match search.go(s, &mut c, &mut added) {
        Some(structure) => Equalizer::Found { structure, tuple: c, added },
        None => Equalizer::Exhausted { bound: k, nodes: search.nodes },
    })
}

/// First embedding of `a` into `b`, if any.
pub fn find_embedding(a: &FiniteStructure, b: &FiniteStructure) -> Option<BTreeMap<Elem, Elem>> {
    let mut found = None;
    let todo = a.elems();
    search_extensions(a, b, &BTreeMap::new(), &todo, &mut |m| {
        found = Some(m.clone());
        false
    });
    found
}

pub fn find_isomorphism(a: &FiniteStructure, b: &FiniteStructure) -> Option<BTreeMap<Elem, Elem>> {
    if a.len() != b.len() || a.sig != b.sig {
        return None;
    }
    find_embedding(a, b)
}

/// Isomorphism-invariant code of `s` with extra vertex colours: equal codes
/// iff there is a colour-preserving isomorphism. Colour refinement followed by
/// individualisation of the first non-singleton cell.
pub fn canonical_code(s: &FiniteStructure, colours: &BTreeMap<Elem, u32>) -> Vec<u64> {
    let elems = s.elems();
    let pos: BTreeMap<Elem, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let rels: Vec<Vec<Vec<usize>>> = (0..s.sig.relations.len())
        .map(|r| s.tuples(r).iter().map(|t| t.iter().map(|e| pos[e]).collect()).collect())
        .collect();
    let fns: Vec<Vec<Option<usize>>> = (0..s.fn_count())
        .map(|f| elems.iter().map(|&e| s.fn_value(f, e).and_then(|y| pos.get(&y).copied())).collect())
        .collect();
    let init: Vec<u32> = elems.iter().map(|e| colours.get(e).copied().unwrap_or(0)).collect();
    let ctx = Canon { rels, fns, init };
    let root = ctx.refine(ranks(&ctx.init));
    let mut best = None;
    ctx.search(root, &mut best);
    let mut code = vec![elems.len() as u64];
    code.extend(best.unwrap_or_default());
    code
}

fn ranks<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let mut distinct: Vec<T> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    keys.iter().map(|k| distinct.binary_search(k).unwrap() as u32).collect()
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn class_count(col: &[u32]) -> usize {
    col.iter().collect::<BTreeSet<_>>().len()
}

struct Canon {
    rels: Vec<Vec<Vec<usize>>>,
    fns: Vec<Vec<Option<usize>>>,
    init: Vec<u32>,
}

impl Canon {
    /// Splits cells by hashed neighbourhood signatures until stable. Any
    /// invariant splitting rule is sound here; leaves are encoded exactly.
    fn refine(&self, mut col: Vec<u32>) -> Vec<u32> {
        let n = col.len();
        let mut pairs: Vec<(usize, u64)> = Vec::new();
        loop {
            pairs.clear();
            for (r, ts) in self.rels.iter().enumerate() {
                for t in ts {
                    let th = t.iter().fold(mix(r as u64), |h, &x| mix(h ^ col[x] as u64));
                    for (i, &e) in t.iter().enumerate() {
                        pairs.push((e, mix(th ^ (i as u64) << 40)));
                    }
                }
            }
            let base = self.rels.len() as u64;
            for (f, map) in self.fns.iter().enumerate() {
                let tag = mix(base + f as u64);
                for (x, y) in map.iter().enumerate() {
                    match y {
                        Some(y) => {
                            pairs.push((x, mix(tag ^ col[*y] as u64)));
                            pairs.push((*y, mix(tag ^ 1 << 50 ^ col[x] as u64)));
                        }
                        None => pairs.push((x, mix(tag ^ 1 << 51))),
                    }
                }
            }
            pairs.sort_unstable();
            let mut sig: Vec<(u32, u64)> = col.iter().map(|&c| (c, 0)).collect();
            for &(e, h) in &pairs {
                sig[e].1 = mix(sig[e].1 ^ h);
            }
            let next = ranks(&sig);
            if class_count(&next) == class_count(&col) {
                return next;
            }
            col = next;
            debug_assert!(col.len() == n);
        }
    }

    fn search(&self, col: Vec<u32>, best: &mut Option<Vec<u64>>) {
        let n = col.len();
        let mut sizes = vec![0usize; n];
        for &c in &col {
            sizes[c as usize] += 1;
        }
        let Some(target) = (0..n).find(|&c| sizes[c] > 1) else {
            let code = self.encode(&col);
            if best.as_ref().is_none_or(|b| code < *b) {
                *best = Some(code);
            }
            return;
        };
        for e in (0..n).filter(|&e| col[e] as usize == target) {
            let split: Vec<u32> =
                col.iter().enumerate().map(|(x, &c)| 2 * c + (c as usize == target && x != e) as u32).collect();
            self.search(self.refine(ranks(&split)), best);
        }
    }

    /// Code under the discrete labelling `lab`.
    fn encode(&self, lab: &[u32]) -> Vec<u64> {
        let mut by_label = vec![0u64; lab.len()];
        for (e, &l) in lab.iter().enumerate() {
            by_label[l as usize] = self.init[e] as u64;
        }
        let mut code = by_label;
        for ts in &self.rels {
            let mut lt: Vec<Vec<u32>> = ts.iter().map(|t| t.iter().map(|&x| lab[x]).collect()).collect();
            lt.sort();
            code.push(u64::MAX);
            code.push(lt.len() as u64);
            for t in lt {
                code.extend(t.iter().map(|&x| x as u64));
            }
        }
        for map in &self.fns {
            let mut vals: Vec<(u64, u64)> = map
                .iter()
                .enumerate()
                .map(|(x, y)| (lab[x] as u64, y.map_or(u64::MAX, |y| lab[y] as u64)))
                .collect();
            vals.sort();
            code.push(u64::MAX);
            for (x, y) in vals {
                code.push(x);
                code.push(y);
            }
        }
        code
    }
}

/// Heap-style recursive enumeration of all permutations of `v[k..]`.
pub fn permute<T: Clone>(v: &mut Vec<T>, k: usize, f: &mut dyn FnMut(&[T])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digraph(n: u32, edges: &[(u32, u32)]) -> FiniteStructure {
        let mut s = FiniteStructure::on(Signature::of(&[("E", 2)], &[]), 0..n);
        for &(a, b) in edges {
            s.add("E", &[a, b]).unwrap();
        }
        s
    }

    #[test]
    fn single_point_type_over_empty_set_has_no_facts() {
        let s = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let t = qftp(&s, &[0], []).unwrap();
        assert!(t.facts.is_empty());
        assert_eq!(t, qftp(&s, &[2], []).unwrap());
    }

    #[test]
    fn points_with_the_same_edges_to_the_base_share_a_type() {
        let s = digraph(4, &[(0, 2), (0, 3), (1, 2), (1, 3), (0, 1)]);
        let t0 = qftp(&s, &[0], [2, 3]).unwrap();
        let t1 = qftp(&s, &[1], [2, 3]).unwrap();
        assert_eq!(t0, t1);
        let swap: BTreeMap<Elem, Elem> = [(0, 1), (2, 2), (3, 3)].into();
        let sub = s.induced([0, 2, 3]);
        assert!(is_partial_iso(&sub, &s, &swap));
    }

    #[test]
    fn edge_direction_separates_types() {
        // path 0 -> 2 -> 1
        let s = digraph(3, &[(0, 2), (2, 1)]);
        assert_ne!(qftp(&s, &[0], [2]).unwrap(), qftp(&s, &[1], [2]).unwrap());
    }

    #[test]
    fn unknown_elements_are_rejected() {
        let s = digraph(2, &[]);
        assert_eq!(qftp(&s, &[7], []), Err(FraisseError::UnknownElement(7)));
    }

    #[test]
    fn embedding_counts() {
        let tri = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let point = digraph(1, &[]);
        assert_eq!(enumerate_embeddings(&point, &tri).unwrap().len(), 3);
        let edge = digraph(2, &[(0, 1)]);
        assert_eq!(enumerate_embeddings(&edge, &tri).unwrap().len(), 3);
        let anti = digraph(2, &[]);
        assert!(enumerate_embeddings(&edge, &anti).unwrap().is_empty());
        let other = FiniteStructure::new(Signature::of(&[("R", 2)], &[]));
        assert!(enumerate_embeddings(&other, &tri).is_err());
    }

    #[test]
    fn extending_a_partial_iso_of_the_three_cycle() {
        let tri = Arc::new(digraph(3, &[(0, 1), (1, 2), (2, 0)]));
        let p = PartialIso::new(tri.clone(), tri.clone(), [(0, 1)].into()).unwrap();
        assert_eq!(extend_partial_iso(&p, 1).unwrap(), vec![2]);
        let empty = PartialIso::new(tri.clone(), tri.clone(), BTreeMap::new()).unwrap();
        assert_eq!(extend_partial_iso(&empty, 0).unwrap(), vec![0, 1, 2]);
        assert!(extend_partial_iso(&p, 0).is_err());
    }

    #[test]
    fn closure_and_function_types() {
        let sig = Signature::of(&[("E", 2)], &["rho"]);
        let mut s = FiniteStructure::on(sig, 0..4);
        for (x, y) in [(0, 0), (1, 0), (2, 2), (3, 2)] {
            s.set_fn(0, x, y).unwrap();
        }
        s.add("E", &[0, 2]).unwrap();
        s.add("E", &[1, 2]).unwrap();
        s.add("E", &[0, 3]).unwrap();
        s.add("E", &[1, 3]).unwrap();
        s.validate().unwrap();
        assert_eq!(s.closure([1]), [0, 1].into());
        let t1 = qftp(&s, &[1], []).unwrap();
        assert_eq!(t1.derived, 1);
        assert_eq!(t1, qftp(&s, &[3], []).unwrap());
        assert_ne!(qftp(&s, &[1, 3], []).unwrap(), qftp(&s, &[3, 1], []).unwrap());
        let sub = s.induced([3]);
        assert_eq!(sub.elems(), vec![2, 3]);
    }

    #[test]
    fn packed_and_wide_tuples_round_trip() {
        let sig = Signature::of(&[("R", 3), ("W", 5)], &[]);
        let mut s = FiniteStructure::on(sig, [1, 70000, 5]);
        s.add("R", &[70000, 1, 5]).unwrap();
        s.add("W", &[1, 5, 70000, 5, 1]).unwrap();
        assert_eq!(s.tuples(0), vec![vec![70000, 1, 5]]);
        assert!(s.holds(1, &[1, 5, 70000, 5, 1]));
        assert!(s.add("R", &[1, 2, 5]).is_err());
        assert!(s.add("R", &[1, 5]).is_err());
    }

    #[test]
    fn canonical_code_detects_isomorphism() {
        let a = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let b = digraph(3, &[(1, 0), (0, 2), (2, 1)]);
        let c = digraph(3, &[(0, 1), (1, 2), (0, 2)]);
        let none = BTreeMap::new();
        assert_eq!(canonical_code(&a, &none), canonical_code(&b, &none));
        assert_ne!(canonical_code(&a, &none), canonical_code(&c, &none));
        assert!(find_isomorphism(&a, &b).is_some());
        assert!(find_isomorphism(&a, &c).is_none());
    }

    #[test]
    fn transported_types_match_images() {
        let s = digraph(4, &[(0, 1), (2, 3), (0, 2), (3, 0), (1, 2), (1, 3)]);
        // 0->1 and 2->3 edges; map 0↦2, 1↦3 is a partial iso.
        let t = qftp(&s, &[1], [0]).unwrap();
        let moved = t.transport(&[(0, 2)].into()).unwrap();
        assert_eq!(moved, qftp(&s, &[3], [2]).unwrap());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn equal_types_iff_identity_plus_swap_is_partial_iso(
            edges in proptest::collection::vec((0u32..6, 0u32..6), 0..15),
            a in 0u32..6, b in 0u32..6,
        ) {
            let edges: Vec<(u32, u32)> = edges.into_iter().filter(|(x, y)| x != y).collect();
            let s = digraph(6, &edges);
            let params = [4u32, 5];
            prop_assume!(!params.contains(&a) && !params.contains(&b));
            let same = qftp(&s, &[a], params).unwrap() == qftp(&s, &[b], params).unwrap();
            let map: BTreeMap<Elem, Elem> = [(a, b), (4, 4), (5, 5)].into();
            prop_assert_eq!(same, is_partial_iso(&s, &s, &map));
        }
    }

    #[test]
    fn equalizer_for_two_points_in_t3_needs_two_new_points() {
        let spec = crate::classes::ClassSpec::parse("t3").unwrap();
        let s = FiniteStructure::on(spec.signature().clone(), [0, 1]);
        let mut ext = |m: &FiniteStructure| spec.one_point_extensions(m);
        match equalizing_tuple_search(&s, &[0], &[1], 2, 2, &mut ext).unwrap() {
            Equalizer::Found { structure, tuple, added } => {
                assert_eq!(added, tuple);
                assert!(spec.is_member(&structure));
                let ta = qftp(&structure, &[0, tuple[0], tuple[1]], []).unwrap();
                let tb = qftp(&structure, &[1, tuple[0], tuple[1]], []).unwrap();
                assert_eq!(ta, tb);
            }
            other => panic!("{other:?}"),
        }
        // one new point is not enough for a pair
        assert!(matches!(
            equalizing_tuple_search(&s, &[0], &[1], 2, 1, &mut ext).unwrap(),
            Equalizer::Exhausted { bound: 1, .. }
        ));
    }

    #[test]
    fn empty_equalizer_when_types_already_agree() {
        let s = digraph(3, &[(0, 1)]);
        let mut none = |_: &FiniteStructure| Vec::new();
        match equalizing_tuple_search(&s, &[0], &[2], 0, 0, &mut none).unwrap() {
            Equalizer::Found { tuple, added, .. } => assert!(tuple.is_empty() && added.is_empty()),
            other => panic!("{other:?}"),
        }
        assert!(equalizing_tuple_search(&s, &[0], &[0], 0, 0, &mut none).is_err());
        // 0 → 1 but 2 has no edge to 1
        assert!(matches!(
            equalizing_tuple_search(&s, &[0], &[2], 1, 0, &mut none).unwrap(),
            Equalizer::Exhausted { .. }
        ));
    }
}
