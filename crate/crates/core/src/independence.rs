//! Stationary weak independence relations: the predicates, their canonical
//! amalgams, and finite audits of the axioms on windows of lazy limits.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::classes::{ClassKind, ClassSpec};
use crate::error::{FraisseError, Result};
use crate::hyper::for_each_subset;
use crate::limit::LazyLimit;
use crate::partite::srho_canonical_amalgam_with;
use crate::structure::{canonical_code, is_partial_iso, permute, Elem, FiniteStructure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwirKind {
    FreeAmalgam,
    RationalsOrder,
    RandomTournament,
    MultiHypertournamentDelta,
    Srho,
    LabelledPartite,
}

impl SwirKind {
    pub const ALL: [SwirKind; 6] = [
        SwirKind::FreeAmalgam,
        SwirKind::RationalsOrder,
        SwirKind::RandomTournament,
        SwirKind::MultiHypertournamentDelta,
        SwirKind::Srho,
        SwirKind::LabelledPartite,
    ];

    pub fn parse(s: &str) -> Result<SwirKind> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "free-amalgam" | "free" => SwirKind::FreeAmalgam,
            "rationals-order" | "rationals" => SwirKind::RationalsOrder,
            "random-tournament" | "tournament" => SwirKind::RandomTournament,
            "multi-hypertournament-delta" | "delta" | "t23" => SwirKind::MultiHypertournamentDelta,
            "srho" => SwirKind::Srho,
            "labelled-partite" | "dn" => SwirKind::LabelledPartite,
            _ => return Err(FraisseError::Parse(format!("unknown independence relation `{s}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SwirKind::FreeAmalgam => "free-amalgam",
            SwirKind::RationalsOrder => "rationals-order",
            SwirKind::RandomTournament => "random-tournament",
            SwirKind::MultiHypertournamentDelta => "multi-hypertournament-delta",
            SwirKind::Srho => "srho",
            SwirKind::LabelledPartite => "labelled-partite",
        }
    }

    pub fn default_class(&self) -> ClassSpec {
        let name = match self {
            SwirKind::FreeAmalgam => "graph",
            SwirKind::RationalsOrder => "q1",
            SwirKind::RandomTournament => "t2",
            SwirKind::MultiHypertournamentDelta => "t23",
            SwirKind::Srho => "srho",
            SwirKind::LabelledPartite => "d3",
        };
        ClassSpec::parse(name).expect("built-in class")
    }

    fn accepts(&self, kind: &ClassKind) -> bool {
        matches!(
            (self, kind),
            (SwirKind::FreeAmalgam, ClassKind::Graph)
                | (SwirKind::RationalsOrder, ClassKind::ColouredOrder(_))
                | (SwirKind::RandomTournament, ClassKind::Hyper(2))
                | (SwirKind::MultiHypertournamentDelta, ClassKind::Multi(_))
                | (SwirKind::Srho, ClassKind::Srho)
                | (SwirKind::LabelledPartite, ClassKind::Dn(_))
        )
    }
}

/// `B ⫝_A C` iff `B ∖ A` and `C ∖ A` are disjoint and the structure on
/// `ABC` is the canonical amalgam of `AB` and `AC` over `A`.
#[derive(Clone, Debug)]
pub struct Predicate {
    pub kind: SwirKind,
    pub class: ClassSpec,
    /// The unforced `b`–`c` clause reads identifiers instead of sides.
    pub mutated: bool,
}

impl Predicate {
    pub fn new(kind: SwirKind) -> Self {
        Predicate { kind, class: kind.default_class(), mutated: false }
    }

    pub fn with_class(kind: SwirKind, class: ClassSpec) -> Result<Self> {
        if !kind.accepts(&class.kind) {
            return Err(FraisseError::pre(format!("{} does not live on class {}", kind.name(), class.name())));
        }
        Ok(Predicate { kind, class, mutated: false })
    }

    /// Same relation with the default orientation clause replaced by `b → c iff b < c`.
    pub fn mutate(&self) -> Self {
        Predicate { mutated: true, ..self.clone() }
    }

    pub fn name(&self) -> String {
        if self.mutated {
            format!("{}(mutated)", self.kind.name())
        } else {
            self.kind.name().to_string()
        }
    }

    /// Canonical amalgam of `b` and `c` over `a`.
    pub fn op(&self, a: &FiniteStructure, b: &FiniteStructure, c: &FiniteStructure) -> Result<FiniteStructure> {
        let mut prefs = Vec::new();
        if self.mutated {
            for &x in b.universe().difference(a.universe()) {
                for &y in c.universe().difference(a.universe()) {
                    prefs.push((x, y, x < y));
                }
            }
        }
        match self.kind {
            SwirKind::Srho => srho_canonical_amalgam_with(a, b, c, &prefs),
            _ => self.class.amalgam_with_prefs(a, b, c, &prefs),
        }
    }

    /// `B ⫝_A C` in `m`; the sets are closed under functions first.
    pub fn eval(&self, m: &FiniteStructure, a: &[Elem], b: &[Elem], c: &[Elem]) -> Result<bool> {
        let a = m.closure(a.iter().copied());
        let ab = m.closure(a.iter().chain(b).copied());
        let ac = m.closure(a.iter().chain(c).copied());
        self.eval_closed(m, &a, &ab, &ac)
    }

    fn eval_closed(
        &self,
        m: &FiniteStructure,
        a: &BTreeSet<Elem>,
        ab: &BTreeSet<Elem>,
        ac: &BTreeSet<Elem>,
    ) -> Result<bool> {
        if ab.difference(a).any(|x| ac.contains(x)) {
            return Ok(false);
        }
        let sa = m.induced(a.iter().copied());
        let sb = m.induced(ab.iter().copied());
        let sc = m.induced(ac.iter().copied());
        self.matches_op(&sa, &sb, &sc, &m.induced(ab.union(ac).copied()))
    }

    fn matches_op(
        &self,
        sa: &FiniteStructure,
        sb: &FiniteStructure,
        sc: &FiniteStructure,
        whole: &FiniteStructure,
    ) -> Result<bool> {
        match self.op(sa, sb, sc) {
            Ok(o) => Ok(o == *whole),
            // a corrupted clause may ask for an invalid structure; nothing matches it
            Err(_) if self.mutated => Ok(false),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    /// Generators of `A`.
    pub a: usize,
    /// Generators of `B` outside `A`.
    pub b: usize,
    /// Generators of `C` outside `A`.
    pub c: usize,
    /// Points sampled from the limit.
    pub universe: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { a: 2, b: 2, c: 2, universe: 12 }
    }
}

impl WindowSpec {
    /// Parses `a,b,c` or `a,b,c,universe`.
    pub fn parse(s: &str) -> Result<WindowSpec> {
        let v: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| FraisseError::Parse(format!("bad window `{s}`"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [a, b, c] => Ok(WindowSpec { a, b, c, ..WindowSpec::default() }),
            [a, b, c, universe] => Ok(WindowSpec { a, b, c, universe }),
            _ => Err(FraisseError::Parse(format!("bad window `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

/// A failed axiom instance. `sets` and `map` are read per axiom; see
/// [`revalidate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub axiom: String,
    pub sets: Vec<Vec<Elem>>,
    pub map: Vec<(Elem, Elem)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub instances: usize,
    pub status: Status,
    pub failures: Vec<Certificate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub swir: String,
    pub class: String,
    pub seed: u64,
    pub stage: usize,
    pub window: WindowSpec,
    pub points: Vec<Elem>,
    pub floor: usize,
    pub axioms: Vec<AxiomResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.axioms.iter().all(|a| a.status == Status::Pass)
    }

    pub fn axiom(&self, name: &str) -> Option<&AxiomResult> {
        self.axioms.iter().find(|a| a.axiom == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Certificate> {
        self.axioms.iter().flat_map(|a| a.failures.iter())
    }
}

const KEEP_FAILURES: usize = 8;

struct Tally {
    name: &'static str,
    instances: usize,
    failures: Vec<Certificate>,
    failed: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, instances: 0, failures: Vec::new(), failed: 0 }
    }

    fn hit(&mut self, ok: bool, cert: impl FnOnce() -> Certificate) {
        self.instances += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < KEEP_FAILURES {
                self.failures.push(cert());
            }
        }
    }

    fn finish(self, floor: usize) -> AxiomResult {
        let status = if self.failed > 0 {
            Status::Fail
        } else if self.instances < floor {
            Status::Vacuous
        } else {
            Status::Pass
        };
        AxiomResult { axiom: self.name.to_string(), instances: self.instances, status, failures: self.failures }
    }
}

fn v(s: &BTreeSet<Elem>) -> Vec<Elem> {
    s.iter().copied().collect()
}

/// An extension `cl(A ∪ gens)` of a base inside the window.
#[derive(Clone, Debug)]
struct Opt {
    id: usize,
    gens: Vec<Elem>,
}

/// Interned closed sets of a window with memoized predicate values.
struct Window<'p> {
    pred: &'p Predicate,
    w: FiniteStructure,
    pts: Vec<Elem>,
    sets: Vec<BTreeSet<Elem>>,
    ids: HashMap<Vec<Elem>, usize>,
    memo: HashMap<(usize, usize, usize), bool>,
    unions: HashMap<(usize, usize), usize>,
    subs: HashMap<usize, FiniteStructure>,
}

impl<'p> Window<'p> {
    fn new(pred: &'p Predicate, m: &FiniteStructure, pts: Vec<Elem>) -> Self {
        let w = m.induced(pts.iter().copied());
        Window { pred, w, pts, sets: Vec::new(), ids: HashMap::new(), memo: HashMap::new(), unions: HashMap::new(), subs: HashMap::new() }
    }

    fn intern(&mut self, s: BTreeSet<Elem>) -> usize {
        let key = v(&s);
        if let Some(&i) = self.ids.get(&key) {
            return i;
        }
        self.sets.push(s);
        self.ids.insert(key, self.sets.len() - 1);
        self.sets.len() - 1
    }

    fn close(&mut self, seed: impl IntoIterator<Item = Elem>) -> usize {
        let s = self.w.closure(seed);
        self.intern(s)
    }

    fn union(&mut self, x: usize, y: usize) -> usize {
        let key = (x.min(y), x.max(y));
        if let Some(&u) = self.unions.get(&key) {
            return u;
        }
        let s: BTreeSet<Elem> = self.sets[x].union(&self.sets[y]).copied().collect();
        let u = self.close(s);
        self.unions.insert(key, u);
        u
    }

    /// `B ⫝_A C` for any three interned sets.
    fn ev(&mut self, a: usize, b: usize, c: usize) -> Result<bool> {
        let ab = self.union(a, b);
        let ac = self.union(a, c);
        if let Some(&r) = self.memo.get(&(a, ab, ac)) {
            return Ok(r);
        }
        let r = if self.sets[ab].difference(&self.sets[a]).any(|x| self.sets[ac].contains(x)) {
            false
        } else {
            let abc = self.union(ab, ac);
            for id in [a, ab, ac, abc] {
                self.sub(id);
            }
            self.pred.matches_op(&self.subs[&a], &self.subs[&ab], &self.subs[&ac], &self.subs[&abc])?
        };
        self.memo.insert((a, ab, ac), r);
        Ok(r)
    }

    fn sub(&mut self, id: usize) -> &FiniteStructure {
        if !self.subs.contains_key(&id) {
            let s = self.w.induced(self.sets[id].iter().copied());
            self.subs.insert(id, s);
        }
        &self.subs[&id]
    }

    fn bases(&mut self, max: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        let pts = self.pts.clone();
        for k in 0..=max.min(pts.len()) {
            let mut subs = Vec::new();
            for_each_subset(&pts, k, &mut |s| subs.push(s.to_vec()));
            for s in subs {
                out.insert(self.close(s));
            }
        }
        let mut out: Vec<usize> = out.into_iter().collect();
        out.sort_by_key(|&i| (self.sets[i].len(), v(&self.sets[i])));
        out
    }

    /// Proper extensions `cl(A ∪ S)` with `S` outside `A`, `1 ≤ |S| ≤ max`,
    /// each with a minimal generating set.
    fn options(&mut self, a: usize, max: usize) -> Vec<Opt> {
        let outside: Vec<Elem> = self.pts.iter().copied().filter(|x| !self.sets[a].contains(x)).collect();
        let mut seen: BTreeMap<usize, Vec<Elem>> = BTreeMap::new();
        for k in 1..=max.min(outside.len()) {
            let mut subs = Vec::new();
            for_each_subset(&outside, k, &mut |s| subs.push(s.to_vec()));
            for s in subs {
                let id = self.close(self.sets[a].iter().copied().chain(s.iter().copied()).collect::<Vec<_>>());
                seen.entry(id).or_insert(s);
            }
        }
        let mut out: Vec<Opt> = seen.into_iter().map(|(id, gens)| Opt { id, gens }).collect();
        out.sort_by_key(|o| (o.gens.len(), o.gens.clone()));
        out
    }

    /// Code of the window restricted to the union of `groups`, colouring each
    /// element by the set of groups containing it.
    fn key(&mut self, ids: &[usize]) -> Vec<u64> {
        let all = ids[1..].iter().fold(ids[0], |u, &i| self.union(u, i));
        let groups: Vec<&BTreeSet<Elem>> = ids.iter().map(|&i| &self.sets[i]).collect();
        let colours: BTreeMap<Elem, u32> = self.sets[all]
            .iter()
            .map(|&e| (e, groups.iter().enumerate().filter(|(_, g)| g.contains(&e)).fold(0u32, |c, (i, _)| c | 1 << i)))
            .collect();
        self.sub(all);
        canonical_code(&self.subs[&all], &colours)
    }

    /// Code of `x` over the points of `fixed`, each of which keeps its own colour.
    fn key_over(&self, fixed: &BTreeSet<Elem>, x: &BTreeSet<Elem>) -> Vec<u64> {
        let all: BTreeSet<Elem> = fixed.union(x).copied().collect();
        let s = self.w.induced(all.iter().copied());
        let colours: BTreeMap<Elem, u32> =
            all.iter().map(|&e| (e, fixed.iter().position(|&f| f == e).map_or(0, |i| i as u32 + 1))).collect();
        canonical_code(&s, &colours)
    }
}

/// Bijections `x ∖ base → y ∖ base` that together with the identity on `base`
/// are isomorphisms.
fn isos_over(w: &FiniteStructure, base: &BTreeSet<Elem>, x: &BTreeSet<Elem>, y: &BTreeSet<Elem>) -> Vec<BTreeMap<Elem, Elem>> {
    let xs: Vec<Elem> = x.difference(base).copied().collect();
    let mut ys: Vec<Elem> = y.difference(base).copied().collect();
    if xs.len() != ys.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    permute(&mut ys, 0, &mut |p| {
        let mut m: BTreeMap<Elem, Elem> = base.iter().map(|&e| (e, e)).collect();
        m.extend(xs.iter().copied().zip(p.iter().copied()));
        if is_partial_iso(w, w, &m) {
            out.push(m);
        }
    });
    out
}

fn cert(axiom: &str, sets: &[&BTreeSet<Elem>], map: Option<&BTreeMap<Elem, Elem>>) -> Certificate {
    Certificate {
        axiom: axiom.to_string(),
        sets: sets.iter().map(|s| v(s)).collect(),
        map: map.map(|m| m.iter().map(|(a, b)| (*a, *b)).collect()).unwrap_or_default(),
    }
}

/// Audits the axioms on a seeded window of the limit. Existence is checked
/// first on a seeded sample of window triples (this may extend the limit);
/// everything else is exhaustive over the window.
pub fn audit_axioms(
    pred: &Predicate,
    limit: &mut LazyLimit,
    window: WindowSpec,
    floor: usize,
    seed: u64,
) -> Result<AuditReport> {
    if pred.class != *limit.spec() {
        return Err(FraisseError::pre("predicate and limit use different classes"));
    }
    let pts = limit.sample_window(window.universe, seed);
    let stage = limit.stage();
    let mut win = Window::new(pred, limit.current(), pts.clone());

    // enumerate base/extension options once
    let bases = win.bases(window.a);
    let mut opts: Vec<(usize, Vec<Opt>, Vec<Opt>)> = Vec::new();
    for &a in &bases {
        let bo = win.options(a, window.b);
        let co = win.options(a, window.c);
        opts.push((a, bo, co));
    }

    // existence, before anything reads the window
    let mut lex = Tally::new("LEx");
    let mut rex = Tally::new("REx");
    let mut triples: Vec<(usize, usize, usize)> = Vec::new();
    for (a, bo, co) in &opts {
        for b in bo {
            for c in co {
                triples.push((*a, b.id, c.id));
            }
        }
    }
    let mut rng = limit.rng(seed ^ 0xe7);
    triples.shuffle(&mut rng);
    let ex_n = triples.len().min(2 * floor.max(1));
    for &(a, b, c) in &triples[..ex_n] {
        let (sa, sb, sc) = (win.sets[a].clone(), win.sets[b].clone(), win.sets[c].clone());
        match existence_instance(pred, limit, &sa, &sb, &sc, false) {
            Ok(ok) => rex.hit(ok, || cert("REx", &[&sa, &sb, &sc], None)),
            Err(e) if e.is_budget() => return Err(e),
            Err(_) => rex.hit(false, || cert("REx", &[&sa, &sb, &sc], None)),
        }
        match existence_instance(pred, limit, &sa, &sb, &sc, true) {
            Ok(ok) => lex.hit(ok, || cert("LEx", &[&sa, &sb, &sc], None)),
            Err(e) if e.is_budget() => return Err(e),
            Err(_) => lex.hit(false, || cert("LEx", &[&sa, &sb, &sc], None)),
        }
    }

    let mut disj = Tally::new("disjointness");
    let mut base_triv = Tally::new("base-triviality");
    let mut inv = Tally::new("Inv");
    let mut lsta = Tally::new("LSta");
    let mut rsta = Tally::new("RSta");
    let mut lmon = Tally::new("LMon");
    let mut rmon = Tally::new("RMon");
    let mut ltr = Tally::new("LTr");
    let mut rtr = Tally::new("RTr");
    let mut inv_seen: HashMap<Vec<u64>, (bool, usize, usize, usize)> = HashMap::new();

    for (a, bo, co) in &opts {
        let a = *a;
        let sa = win.sets[a].clone();
        let mut ind = vec![vec![false; co.len()]; bo.len()];
        for (bi, b) in bo.iter().enumerate() {
            let r = win.ev(a, b.id, a)?;
            base_triv.hit(r, || cert("base-triviality", &[&sa, &win.sets[b.id]], None));
            for (ci, c) in co.iter().enumerate() {
                let r = win.ev(a, b.id, c.id)?;
                ind[bi][ci] = r;
                let (sb, sc) = (&win.sets[b.id], &win.sets[c.id]);
                if r {
                    let ok = sb.difference(&sa).all(|x| !sc.contains(x));
                    disj.hit(ok, || cert("disjointness", &[&sa, sb, sc], None));
                }
                let key = win.key(&[a, b.id, c.id]);
                let (sb, sc) = (&win.sets[b.id], &win.sets[c.id]);
                match inv_seen.get(&key) {
                    Some(&(r0, a0, b0, c0)) => {
                        let (s0a, s0b, s0c) = (&win.sets[a0], &win.sets[b0], &win.sets[c0]);
                        inv.hit(r0 == r, || cert("Inv", &[s0a, s0b, s0c, &sa, sb, sc], None));
                    }
                    None => {
                        inv_seen.insert(key, (r, a, b.id, c.id));
                    }
                }
            }
        }
        // LSta: independent B of one type over A have one type over AC
        for (ci, c) in co.iter().enumerate() {
            let sc = win.sets[c.id].clone();
            let mut groups: HashMap<Vec<u64>, usize> = HashMap::new();
            for (bi, b) in bo.iter().enumerate() {
                if !ind[bi][ci] {
                    continue;
                }
                let sb = win.sets[b.id].clone();
                let key = win.key_over(&sa, &sb);
                let Some(&rep) = groups.get(&key) else {
                    groups.insert(key, bi);
                    continue;
                };
                let sr = win.sets[bo[rep].id].clone();
                for sigma in isos_over(&win.w, &sa, &sr, &sb) {
                    let mut full = sigma.clone();
                    full.extend(sc.iter().map(|&e| (e, e)));
                    let ok = is_partial_iso(&win.w, &win.w, &full);
                    lsta.hit(ok, || cert("LSta", &[&sa, &sr, &sb, &sc], Some(&sigma)));
                }
            }
        }
        // RSta: independent C of one type over A have one type over AB
        for (bi, b) in bo.iter().enumerate() {
            let sb = win.sets[b.id].clone();
            let mut groups: HashMap<Vec<u64>, usize> = HashMap::new();
            for (ci, c) in co.iter().enumerate() {
                if !ind[bi][ci] {
                    continue;
                }
                let sc = win.sets[c.id].clone();
                let key = win.key_over(&sa, &sc);
                let Some(&rep) = groups.get(&key) else {
                    groups.insert(key, ci);
                    continue;
                };
                let sr = win.sets[co[rep].id].clone();
                for sigma in isos_over(&win.w, &sa, &sr, &sc) {
                    let mut full = sigma.clone();
                    full.extend(sb.iter().map(|&e| (e, e)));
                    let ok = is_partial_iso(&win.w, &win.w, &full);
                    rsta.hit(ok, || cert("RSta", &[&sa, &sb, &sr, &sc], Some(&sigma)));
                }
            }
        }
        // Mon and Tr through splits of a two-generator extension E = CD
        for b in bo {
            for e in co.iter().filter(|o| o.gens.len() >= 2) {
                for (i, &g) in e.gens.iter().enumerate() {
                    let rest: Vec<Elem> = e.gens.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
                    let c = win.close(sa.iter().copied().chain([g]));
                    let d = win.close(sa.iter().copied().chain(rest.iter().copied()));
                    let whole = win.ev(a, b.id, e.id)?;
                    let part = win.ev(a, b.id, c)?;
                    let over = win.ev(c, b.id, d)?;
                    let (sb, sc, sd, se) = (&win.sets[b.id], &win.sets[c], &win.sets[d], &win.sets[e.id]);
                    if whole {
                        rmon.hit(part && over, || cert("RMon", &[&sa, sb, sc, sd, se], None));
                    }
                    if part && over {
                        rtr.hit(whole, || cert("RTr", &[&sa, sb, sc, sd, se], None));
                    }
                }
            }
        }
        for e in bo.iter().filter(|o| o.gens.len() >= 2) {
            for c in co {
                for (i, &g) in e.gens.iter().enumerate() {
                    let rest: Vec<Elem> = e.gens.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
                    let b = win.close(sa.iter().copied().chain([g]));
                    let d = win.close(sa.iter().copied().chain(rest.iter().copied()));
                    let whole = win.ev(a, e.id, c.id)?;
                    let part = win.ev(a, b, c.id)?;
                    let over = win.ev(b, d, c.id)?;
                    let (sb, sc, sd, se) = (&win.sets[b], &win.sets[c.id], &win.sets[d], &win.sets[e.id]);
                    if whole {
                        lmon.hit(part && over, || cert("LMon", &[&sa, sb, sc, sd, se], None));
                    }
                    if part && over {
                        ltr.hit(whole, || cert("LTr", &[&sa, sb, sc, sd, se], None));
                    }
                }
            }
        }
    }

    let axioms = [lex, rex, lsta, rsta, lmon, rmon, ltr, rtr, inv, disj, base_triv]
        .into_iter()
        .map(|t| t.finish(floor))
        .collect();
    Ok(AuditReport {
        swir: pred.name(),
        class: pred.class.name(),
        seed,
        stage,
        window,
        points: pts,
        floor,
        axioms,
    })
}

/// One existence instance: for `left == false`, find `C′ ≡_A C` with
/// `B ⫝_A C′`; for `left == true`, find `B′ ≡_A B` with `B′ ⫝_A C`. The
/// canonical amalgam is realized in the limit, extending it if needed.
fn existence_instance(
    pred: &Predicate,
    limit: &mut LazyLimit,
    a: &BTreeSet<Elem>,
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    left: bool,
) -> Result<bool> {
    let (keep, moved) = if left { (c, b) } else { (b, c) };
    let m = limit.current();
    let fresh = m.fresh();
    let mv: Vec<Elem> = moved.difference(a).copied().collect();
    let mut ren: BTreeMap<Elem, Elem> = a.iter().map(|&e| (e, e)).collect();
    for (i, &x) in mv.iter().enumerate() {
        ren.insert(x, fresh + i as Elem);
    }
    let sa = m.induced(a.iter().copied());
    let sk = m.induced(keep.iter().copied());
    let smv = m.induced(moved.iter().copied()).relabel(&ren)?;
    let d = if left { pred.op(&sa, &smv, &sk)? } else { pred.op(&sa, &sk, &smv)? };
    let base: Vec<Elem> = keep.iter().copied().collect();
    let new: Vec<Elem> = mv.iter().map(|x| ren[x]).collect();
    limit.begin_query();
    let real = limit.realize(&base, &d, &new, &BTreeSet::new())?;
    let img: BTreeSet<Elem> = a.iter().copied().chain(new.iter().map(|x| real[x])).collect();
    let m = limit.current();
    // same type over A as the original
    let mut back: BTreeMap<Elem, Elem> = a.iter().map(|&e| (e, e)).collect();
    for &x in &mv {
        back.insert(x, real[&ren[&x]]);
    }
    if !is_partial_iso(m, m, &back) {
        return Ok(false);
    }
    let av = v(a);
    if left {
        pred.eval(m, &av, &v(&img), &v(keep))
    } else {
        pred.eval(m, &av, &v(keep), &v(&img))
    }
}

/// Re-evaluates a certificate against `m`; true iff the failure reproduces.
pub fn revalidate(pred: &Predicate, m: &FiniteStructure, c: &Certificate) -> Result<bool> {
    let s = &c.sets;
    let ev = |a: &Vec<Elem>, b: &Vec<Elem>, cc: &Vec<Elem>| pred.eval(m, a, b, cc);
    let need = |n: usize| {
        if s.len() < n {
            Err(FraisseError::pre(format!("{} certificate needs {n} sets", c.axiom)))
        } else {
            Ok(())
        }
    };
    Ok(match c.axiom.as_str() {
        "base-triviality" => {
            need(2)?;
            !ev(&s[0], &s[1], &s[0])?
        }
        "disjointness" => {
            need(3)?;
            ev(&s[0], &s[1], &s[2])? && s[1].iter().any(|x| !s[0].contains(x) && s[2].contains(x))
        }
        "Inv" => {
            need(6)?;
            ev(&s[0], &s[1], &s[2])? != ev(&s[3], &s[4], &s[5])?
        }
        "LSta" | "RSta" => {
            need(4)?;
            let map: BTreeMap<Elem, Elem> = c.map.iter().copied().collect();
            let (ind1, ind2, other) = if c.axiom == "LSta" {
                (ev(&s[0], &s[1], &s[3])?, ev(&s[0], &s[2], &s[3])?, &s[3])
            } else {
                (ev(&s[0], &s[1], &s[2])?, ev(&s[0], &s[1], &s[3])?, &s[1])
            };
            let mut full = map.clone();
            full.extend(other.iter().map(|&e| (e, e)));
            ind1 && ind2 && is_partial_iso(m, m, &map) && !is_partial_iso(m, m, &full)
        }
        "RMon" | "RTr" => {
            need(5)?;
            let whole = ev(&s[0], &s[1], &s[4])?;
            let part = ev(&s[0], &s[1], &s[2])?;
            let over = ev(&s[2], &s[1], &s[3])?;
            if c.axiom == "RMon" {
                whole && !(part && over)
            } else {
                part && over && !whole
            }
        }
        "LMon" | "LTr" => {
            need(5)?;
            let whole = ev(&s[0], &s[4], &s[2])?;
            let part = ev(&s[0], &s[1], &s[2])?;
            let over = ev(&s[1], &s[3], &s[2])?;
            if c.axiom == "LMon" {
                whole && !(part && over)
            } else {
                part && over && !whole
            }
        }
        "freeness" => {
            need(4)?;
            ev(&s[0], &s[1], &s[2])? && !ev(&s[3], &s[1], &s[2])?
        }
        "symmetry" => {
            need(3)?;
            ev(&s[0], &s[1], &s[2])? != ev(&s[0], &s[2], &s[1])?
        }
        // existence failures are about the limit, not a finite configuration
        _ => return Err(FraisseError::pre(format!("{} certificates cannot be re-evaluated standalone", c.axiom))),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub swir: String,
    pub seed: u64,
    pub window: WindowSpec,
    pub points: Vec<Elem>,
    pub instances: usize,
    pub holds: bool,
    pub counterexamples: usize,
    /// Failing instances, smallest first.
    pub examples: Vec<Certificate>,
}

/// Raw generator sets `cl(S)` with `1 ≤ |S| ≤ max`, as sets not containing `A`.
fn raw_sets(win: &mut Window, max: usize) -> Vec<usize> {
    let pts = win.pts.clone();
    let mut out = BTreeSet::new();
    for k in 1..=max.min(pts.len()) {
        let mut subs = Vec::new();
        for_each_subset(&pts, k, &mut |s| subs.push(s.to_vec()));
        for s in subs {
            out.insert(win.close(s));
        }
    }
    let mut out: Vec<usize> = out.into_iter().collect();
    out.sort_by_key(|&i| (win.sets[i].len(), v(&win.sets[i])));
    out
}

/// `B ⫝_A C` implies `B ⫝_{A′} C` for every closed `A′` with `(BC) ∩ A ⊆ A′ ⊆ A`.
pub fn audit_freeness(pred: &Predicate, limit: &LazyLimit, window: WindowSpec, seed: u64) -> Result<PropertyReport> {
    let pts = limit.sample_window(window.universe, seed);
    let mut win = Window::new(pred, limit.current(), pts.clone());
    let bases = win.bases(window.a);
    let bs = raw_sets(&mut win, window.b);
    let cs = raw_sets(&mut win, window.c);
    let mut instances = 0;
    let mut count = 0;
    let mut examples = Vec::new();
    for &a in &bases {
        let sa = win.sets[a].clone();
        let av = v(&sa);
        // closed subsets of A
        let mut subs: Vec<usize> = Vec::new();
        for k in 0..=av.len() {
            let mut ss = Vec::new();
            for_each_subset(&av, k, &mut |s| ss.push(s.to_vec()));
            for s in ss {
                let set: BTreeSet<Elem> = s.into_iter().collect();
                if win.w.closure(set.iter().copied()) == set {
                    subs.push(win.intern(set));
                }
            }
        }
        for &b in &bs {
            if win.sets[b].is_subset(&sa) {
                continue;
            }
            for &c in &cs {
                if win.sets[c].is_subset(&sa) || !win.ev(a, b, c)? {
                    continue;
                }
                let meet: BTreeSet<Elem> = win.sets[b].union(&win.sets[c]).filter(|x| sa.contains(x)).copied().collect();
                for &a2 in &subs {
                    if a2 == a || !meet.is_subset(&win.sets[a2]) {
                        continue;
                    }
                    instances += 1;
                    if !win.ev(a2, b, c)? {
                        count += 1;
                        if examples.len() < KEEP_FAILURES {
                            examples.push(cert("freeness", &[&sa, &win.sets[b], &win.sets[c], &win.sets[a2]], None));
                        }
                    }
                }
            }
        }
    }
    Ok(PropertyReport {
        property: "freeness".into(),
        swir: pred.name(),
        seed,
        window,
        points: pts,
        instances,
        holds: count == 0,
        counterexamples: count,
        examples,
    })
}

/// `B ⫝_A C ⇔ C ⫝_A B` over the window.
pub fn audit_symmetry(pred: &Predicate, limit: &LazyLimit, window: WindowSpec, seed: u64) -> Result<PropertyReport> {
    let pts = limit.sample_window(window.universe, seed);
    let mut win = Window::new(pred, limit.current(), pts.clone());
    let bases = win.bases(window.a);
    let mut instances = 0;
    let mut count = 0;
    let mut examples = Vec::new();
    for a in bases {
        let bo = win.options(a, window.b.max(window.c));
        for b in &bo {
            for c in &bo {
                let r1 = win.ev(a, b.id, c.id)?;
                let r2 = win.ev(a, c.id, b.id)?;
                if r1 || r2 {
                    instances += 1;
                }
                if r1 != r2 {
                    count += 1;
                    if examples.len() < KEEP_FAILURES {
                        let (sa, sb, sc) = (&win.sets[a], &win.sets[b.id], &win.sets[c.id]);
                        let ex = if r1 { cert("symmetry", &[sa, sb, sc], None) } else { cert("symmetry", &[sa, sc, sb], None) };
                        examples.push(ex);
                    }
                }
            }
        }
    }
    Ok(PropertyReport {
        property: "symmetry".into(),
        swir: pred.name(),
        seed,
        window,
        points: pts,
        instances,
        holds: count == 0,
        counterexamples: count,
        examples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partite::srho_independent;
    use crate::zoo::dn_independent;

    fn chain(n: u32) -> FiniteStructure {
        let class = ClassSpec::parse("q1").unwrap();
        let mut s = FiniteStructure::on(class.signature().clone(), 0..n);
        for i in 0..n {
            s.add("C0", &[i]).unwrap();
            for j in i + 1..n {
                s.add("L", &[i, j]).unwrap();
            }
        }
        s
    }

    #[test]
    fn rationals_between_clause() {
        let p = Predicate::new(SwirKind::RationalsOrder);
        let q = chain(4);
        assert!(p.eval(&q, &[2], &[1], &[3]).unwrap());
        assert!(!p.eval(&q, &[], &[3], &[1]).unwrap());
        assert!(p.eval(&q, &[2], &[3], &[1]).unwrap());
    }

    #[test]
    fn random_tournament_forward_edges() {
        let p = Predicate::new(SwirKind::RandomTournament);
        let mut t = FiniteStructure::on(p.class.signature().clone(), 0..3);
        t.add("R", &[0, 1]).unwrap();
        t.add("R", &[0, 2]).unwrap();
        t.add("R", &[2, 1]).unwrap();
        assert!(p.eval(&t, &[], &[0], &[1, 2]).unwrap());
        assert!(!p.eval(&t, &[], &[1, 2], &[0]).unwrap());
        assert!(p.eval(&t, &[0], &[2], &[1]).unwrap());
    }

    #[test]
    fn op_equality_matches_clause_predicates() {
        for (kind, name) in [(SwirKind::Srho, "srho"), (SwirKind::LabelledPartite, "d3")] {
            let l = LazyLimit::build(ClassSpec::parse(name).unwrap(), 60, 0).unwrap();
            let m = l.current();
            let p = Predicate::new(kind);
            let pts = l.sample_window(7, 1);
            let mut agree = 0;
            for &a in &pts {
                for &b in &pts {
                    for &c in &pts {
                        let (sa, sb, sc) = (m.closure([a]), m.closure([a, b]), m.closure([a, c]));
                        let clause = match kind {
                            SwirKind::Srho => srho_independent(m, &sa, &sb, &sc),
                            _ => dn_independent(m, &sa, &sb, &sc),
                        };
                        assert_eq!(p.eval(m, &[a], &[b], &[c]).unwrap(), clause, "{name} {a} {b} {c}");
                        agree += 1;
                    }
                }
            }
            assert!(agree > 0);
        }
    }

    #[test]
    fn small_audit_passes_and_mutation_fails() {
        let p = Predicate::new(SwirKind::RandomTournament);
        let mut l = LazyLimit::build(p.class.clone(), 120, 0).unwrap();
        let w = WindowSpec { universe: 8, ..WindowSpec::default() };
        let rep = audit_axioms(&p, &mut l, w, 20, 0).unwrap();
        assert!(rep.passed(), "{:?}", rep.axioms.iter().map(|a| (&a.axiom, a.instances, a.status)).collect::<Vec<_>>());
        let bad = p.mutate();
        let rep = audit_axioms(&bad, &mut l, w, 20, 0).unwrap();
        let sta_or_mon: Vec<&Certificate> =
            rep.failures().filter(|c| ["LSta", "RSta", "LMon", "RMon"].contains(&c.axiom.as_str())).collect();
        assert!(!sta_or_mon.is_empty());
        for c in sta_or_mon {
            assert!(revalidate(&bad, l.current(), c).unwrap(), "{c:?}");
        }
    }

    #[test]
    fn symmetry_and_freeness_small() {
        let w = WindowSpec { universe: 7, ..WindowSpec::default() };
        let free = Predicate::new(SwirKind::FreeAmalgam);
        let l = LazyLimit::build(free.class.clone(), 80, 0).unwrap();
        assert!(audit_symmetry(&free, &l, w, 0).unwrap().holds);
        assert!(audit_freeness(&free, &l, w, 0).unwrap().holds);
        let rt = Predicate::new(SwirKind::RandomTournament);
        let l = LazyLimit::build(rt.class.clone(), 80, 0).unwrap();
        let rep = audit_symmetry(&rt, &l, w, 0).unwrap();
        assert!(!rep.holds);
        assert!(revalidate(&rt, l.current(), &rep.examples[0]).unwrap());
        let q = Predicate::new(SwirKind::RationalsOrder);
        let l = LazyLimit::build(q.class.clone(), 80, 0).unwrap();
        let rep = audit_freeness(&q, &l, w, 0).unwrap();
        assert!(!rep.holds);
        let ex = &rep.examples[0];
        assert!(revalidate(&q, l.current(), ex).unwrap());
        let m = l.current();
        let (a, b, c) = (ex.sets[0][0], ex.sets[1][0], ex.sets[2][0]);
        assert!(ex.sets[3].is_empty());
        assert!(m.holds(0, &[a, b]) && m.holds(0, &[c, a]), "shape b > a > c");
    }
}
