//! Lazily grown approximations of Fraïssé limits, and lazily defined
//! automorphisms hosted on them.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classes::ClassSpec;
use crate::error::{FraisseError, Result};
use crate::hyper::for_each_subset;
use crate::structure::{consistent_step, for_each_touching, is_partial_iso, search_extensions, Elem, FiniteStructure};

/// Extension caps. `FRAISSE_BUDGET` overrides them as `query` or `query,construction`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub per_query: usize,
    pub per_construction: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { per_query: 64, per_construction: 4096 }
    }
}

impl Budget {
    pub fn from_env() -> Result<Budget> {
        match std::env::var("FRAISSE_BUDGET") {
            Ok(v) => Budget::parse(&v),
            Err(_) => Ok(Budget::default()),
        }
    }

    pub fn parse(v: &str) -> Result<Budget> {
        let nums: Vec<usize> = v
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| FraisseError::Parse(format!("bad budget `{v}`"))))
            .collect::<Result<_>>()?;
        match nums[..] {
            [q] => Ok(Budget { per_query: q, per_construction: Budget::default().per_construction.max(q) }),
            [q, c] => Ok(Budget { per_query: q, per_construction: c }),
            _ => Err(FraisseError::Parse(format!("bad budget `{v}`"))),
        }
    }
}

/// Realize `ext` over the identity on `base`; `new` lists the points of
/// `ext` outside `base`, the realized point first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionProblem {
    pub base: Vec<Elem>,
    pub ext: FiniteStructure,
    pub new: Vec<Elem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepOutcome {
    /// The dequeued problem already had a realization.
    Existing(Elem),
    /// The structure was extended; the realizing point.
    Extended(Elem),
    /// Nothing left to schedule.
    Idle,
}

pub type AutoId = usize;

#[derive(Clone, Debug)]
enum Auto {
    Identity,
    Base { fwd: BTreeMap<Elem, Elem>, bwd: BTreeMap<Elem, Elem> },
    Inv(AutoId),
    /// `Comp(a, b)` is `a ∘ b`: apply `b` first.
    Comp(AutoId, AutoId),
}

#[derive(Clone, Debug)]
pub struct LazyLimit {
    spec: ClassSpec,
    current: FiniteStructure,
    seed: u64,
    stage: usize,
    base_gen: usize,
    pending_bases: VecDeque<Vec<Elem>>,
    seen_bases: HashSet<Vec<Elem>>,
    problems: VecDeque<ExtensionProblem>,
    scheduled: usize,
    budget: Budget,
    spent_query: usize,
    spent_construction: usize,
    autos: Vec<Auto>,
}

impl LazyLimit {
    pub fn new(spec: ClassSpec, seed: u64) -> Self {
        let current = FiniteStructure::new(spec.signature().clone());
        let mut l = LazyLimit {
            spec,
            current,
            seed,
            stage: 0,
            base_gen: 2,
            pending_bases: VecDeque::new(),
            seen_bases: HashSet::new(),
            problems: VecDeque::new(),
            scheduled: 0,
            budget: Budget::default(),
            spent_query: 0,
            spent_construction: 0,
            autos: Vec::new(),
        };
        l.queue_base(Vec::new());
        l
    }

    /// Limit after `steps` dequeued extension problems.
    pub fn build(spec: ClassSpec, steps: usize, seed: u64) -> Result<Self> {
        let mut l = LazyLimit::new(spec, seed);
        l.run(steps)?;
        Ok(l)
    }

    /// Starts from a given member instead of the empty structure.
    pub fn from_structure(spec: ClassSpec, s: FiniteStructure, seed: u64) -> Result<Self> {
        spec.check(&s).map_err(FraisseError::Violation)?;
        let mut l = LazyLimit::new(spec, seed);
        l.current = s;
        for p in l.current.elems() {
            l.schedule_point(p);
        }
        Ok(l)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn spec(&self) -> &ClassSpec {
        &self.spec
    }

    pub fn current(&self) -> &FiniteStructure {
        &self.current
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn scheduled(&self) -> usize {
        self.scheduled
    }

    pub fn pending(&self) -> usize {
        self.problems.len()
    }

    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn queue_base(&mut self, base: Vec<Elem>) {
        if self.seen_bases.insert(base.clone()) {
            self.pending_bases.push_back(base);
        }
    }

    /// Queues every base generated by `p` with fewer than `base_gen` earlier points.
    fn schedule_point(&mut self, p: Elem) {
        let earlier: Vec<Elem> = self.current.elems().into_iter().filter(|&q| q < p).collect();
        let mut gens: Vec<Vec<Elem>> = Vec::new();
        for k in 0..self.base_gen {
            for_each_subset(&earlier, k, &mut |sub| {
                let mut g = sub.to_vec();
                g.push(p);
                gens.push(g);
            });
        }
        for g in gens {
            let base: Vec<Elem> = self.current.closure(g).into_iter().collect();
            self.queue_base(base);
        }
    }

    fn next_problem(&mut self) -> Option<ExtensionProblem> {
        while self.problems.is_empty() {
            let base = self.pending_bases.pop_front()?;
            let bs = self.current.induced(base.iter().copied());
            let mut exts = self.spec.one_point_extensions(&bs);
            exts.sort_by_key(|(e, _)| e.len());
            for (e, x) in exts {
                let mut new: Vec<Elem> = e.universe().difference(bs.universe()).copied().collect();
                new.retain(|&y| y != x);
                new.insert(0, x);
                self.problems.push_back(ExtensionProblem { base: base.clone(), ext: e, new });
                self.scheduled += 1;
            }
        }
        self.problems.pop_front()
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let Some(pr) = self.next_problem() else {
            return Ok(StepOutcome::Idle);
        };
        self.stage += 1;
        if let Some(m) = self.find_realization(&pr.base, &pr.ext, &pr.new, &BTreeSet::new()) {
            return Ok(StepOutcome::Existing(m[&pr.new[0]]));
        }
        let m = self.extend_unmetered(&pr.base, &pr.ext, &pr.new)?;
        Ok(StepOutcome::Extended(m[&pr.new[0]]))
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Least realization (lexicographic on images of `new`) avoiding `avoid`.
    pub fn find_realization(
        &self,
        base: &[Elem],
        ext: &FiniteStructure,
        new: &[Elem],
        avoid: &BTreeSet<Elem>,
    ) -> Option<BTreeMap<Elem, Elem>> {
        let start: BTreeMap<Elem, Elem> = base.iter().map(|&e| (e, e)).collect();
        let mut found = None;
        search_extensions(ext, &self.current, &start, new, &mut |m| {
            if new.iter().any(|v| avoid.contains(&m[v])) {
                return true;
            }
            found = Some(m.clone());
            false
        });
        found
    }

    /// Reset the per-query counter.
    pub fn begin_query(&mut self) {
        self.spent_query = 0;
    }

    /// Reset both counters.
    pub fn begin_construction(&mut self) {
        self.spent_query = 0;
        self.spent_construction = 0;
    }

    fn charge(&mut self, context: &str) -> Result<()> {
        if self.spent_query >= self.budget.per_query {
            return Err(FraisseError::BudgetExhausted { spent: self.spent_query, context: format!("query: {context}") });
        }
        if self.spent_construction >= self.budget.per_construction {
            return Err(FraisseError::BudgetExhausted {
                spent: self.spent_construction,
                context: format!("construction: {context}"),
            });
        }
        self.spent_query += 1;
        self.spent_construction += 1;
        Ok(())
    }

    /// Realizes the problem, extending the structure when no realization
    /// avoiding `avoid` exists. Extensions count against the budget.
    pub fn realize(
        &mut self,
        base: &[Elem],
        ext: &FiniteStructure,
        new: &[Elem],
        avoid: &BTreeSet<Elem>,
    ) -> Result<BTreeMap<Elem, Elem>> {
        if let Some(m) = self.find_realization(base, ext, new, avoid) {
            return Ok(m);
        }
        self.charge("realize")?;
        self.extend_unmetered(base, ext, new)
    }

    /// Amalgamates a fresh copy of `ext` with the current structure over `base`.
    pub fn extend(&mut self, base: &[Elem], ext: &FiniteStructure, new: &[Elem]) -> Result<BTreeMap<Elem, Elem>> {
        self.charge("extend")?;
        self.extend_unmetered(base, ext, new)
    }

    fn extend_unmetered(&mut self, base: &[Elem], ext: &FiniteStructure, new: &[Elem]) -> Result<BTreeMap<Elem, Elem>> {
        self.amalgamate(base, ext, new, &[])
    }

    /// As [`LazyLimit::extend`] with amalgam preferences given in the ids of `ext`
    /// for the new side and of the current structure for the old side; the pair
    /// order is `(old, new)`.
    pub fn extend_with_prefs(
        &mut self,
        base: &[Elem],
        ext: &FiniteStructure,
        new: &[Elem],
        prefs: &[(Elem, Elem, bool)],
    ) -> Result<BTreeMap<Elem, Elem>> {
        self.charge("extend")?;
        self.amalgamate(base, ext, new, prefs)
    }

    fn amalgamate(
        &mut self,
        base: &[Elem],
        ext: &FiniteStructure,
        new: &[Elem],
        prefs: &[(Elem, Elem, bool)],
    ) -> Result<BTreeMap<Elem, Elem>> {
        let expect: BTreeSet<Elem> = base.iter().chain(new).copied().collect();
        if *ext.universe() != expect {
            return Err(FraisseError::pre("extension must live on base ∪ new"));
        }
        // agreement with the current structure is checked by the amalgam
        let a = ext.without(new);
        let fresh = self.current.fresh();
        let mut ren: BTreeMap<Elem, Elem> = base.iter().map(|&e| (e, e)).collect();
        for (i, &v) in new.iter().enumerate() {
            ren.insert(v, fresh + i as Elem);
        }
        let c = ext.relabel(&ren)?;
        let prefs: Vec<(Elem, Elem, bool)> =
            prefs.iter().filter_map(|&(o, n, d)| ren.get(&n).map(|&nn| (o, nn, d))).collect();
        let out = self.spec.amalgam_with_prefs(&a, &self.current, &c, &prefs)?;
        for i in 0..new.len() {
            let p = fresh + i as Elem;
            if !self.spec.ok_at(&out, p) {
                return Err(FraisseError::violation(format!("amalgam output invalid at new point {p}")));
            }
        }
        self.current = out;
        for i in 0..new.len() {
            self.schedule_point(fresh + i as Elem);
        }
        Ok(ren.into_iter().filter(|(k, _)| new.contains(k)).collect())
    }

    // ---- lazy automorphisms ----

    pub fn identity(&mut self) -> AutoId {
        self.autos.push(Auto::Identity);
        self.autos.len() - 1
    }

    /// A lazy automorphism extending the finite partial isomorphism `seed`.
    pub fn new_auto(&mut self, mut seed: BTreeMap<Elem, Elem>) -> Result<AutoId> {
        // function values of the seed are forced
        loop {
            let mut add = Vec::new();
            for (&a, &b) in &seed {
                for f in 0..self.current.fn_count() {
                    if let (Some(fa), Some(fb)) = (self.current.fn_value(f, a), self.current.fn_value(f, b)) {
                        if !seed.contains_key(&fa) {
                            add.push((fa, fb));
                        }
                    }
                }
            }
            if add.is_empty() {
                break;
            }
            seed.extend(add);
        }
        if !is_partial_iso(&self.current, &self.current, &seed) {
            return Err(FraisseError::pre("seed map is not a partial isomorphism"));
        }
        let bwd = seed.iter().map(|(a, b)| (*b, *a)).collect();
        self.autos.push(Auto::Base { fwd: seed, bwd });
        let id = self.autos.len() - 1;
        // close the domain and image under the functions
        let pts: Vec<Elem> = match &self.autos[id] {
            Auto::Base { fwd, .. } => fwd.iter().flat_map(|(a, b)| [*a, *b]).collect(),
            _ => unreachable!(),
        };
        for p in pts {
            for q in self.current.closure([p]) {
                self.apply_inner(id, q, false)?;
                self.apply_inner(id, q, true)?;
            }
        }
        Ok(id)
    }

    pub fn inverse(&mut self, g: AutoId) -> AutoId {
        self.autos.push(Auto::Inv(g));
        self.autos.len() - 1
    }

    /// `a ∘ b`.
    pub fn compose(&mut self, a: AutoId, b: AutoId) -> AutoId {
        self.autos.push(Auto::Comp(a, b));
        self.autos.len() - 1
    }

    /// `[g, h] = g⁻¹h⁻¹gh`, acting as `x ↦ g⁻¹(h⁻¹(g(h(x))))`.
    pub fn commutator(&mut self, g: AutoId, h: AutoId) -> AutoId {
        let gi = self.inverse(g);
        let hi = self.inverse(h);
        let gh = self.compose(g, h);
        let hgh = self.compose(hi, gh);
        self.compose(gi, hgh)
    }

    pub fn apply(&mut self, g: AutoId, v: Elem) -> Result<Elem> {
        self.begin_query();
        self.apply_inner(g, v, false)
    }

    pub fn apply_inv(&mut self, g: AutoId, v: Elem) -> Result<Elem> {
        self.begin_query();
        self.apply_inner(g, v, true)
    }

    pub fn apply_tuple(&mut self, g: AutoId, t: &[Elem]) -> Result<Vec<Elem>> {
        self.begin_query();
        t.iter().map(|&v| self.apply_inner(g, v, false)).collect()
    }

    pub fn apply_inv_tuple(&mut self, g: AutoId, t: &[Elem]) -> Result<Vec<Elem>> {
        self.begin_query();
        t.iter().map(|&v| self.apply_inner(g, v, true)).collect()
    }

    /// Value already fixed for a base automorphism, without extending.
    pub fn defined(&self, g: AutoId, v: Elem, inverse: bool) -> Option<Elem> {
        match &self.autos[g] {
            Auto::Identity => Some(v),
            Auto::Base { fwd, bwd } => if inverse { bwd } else { fwd }.get(&v).copied(),
            Auto::Inv(h) => self.defined(*h, v, !inverse),
            Auto::Comp(a, b) => {
                let (first, second) = if inverse { (*a, *b) } else { (*b, *a) };
                let m = self.defined(first, v, inverse)?;
                self.defined(second, m, inverse)
            }
        }
    }

    /// Forward map of a base automorphism.
    pub fn base_map(&self, g: AutoId) -> Option<&BTreeMap<Elem, Elem>> {
        match &self.autos[g] {
            Auto::Base { fwd, .. } => Some(fwd),
            _ => None,
        }
    }

    fn apply_inner(&mut self, g: AutoId, v: Elem, inverse: bool) -> Result<Elem> {
        if !self.current.contains(v) {
            return Err(FraisseError::UnknownElement(v));
        }
        match self.autos[g].clone() {
            Auto::Identity => Ok(v),
            Auto::Inv(h) => self.apply_inner(h, v, !inverse),
            Auto::Comp(a, b) => {
                let (first, second) = if inverse { (a, b) } else { (b, a) };
                let m = self.apply_inner(first, v, inverse)?;
                self.apply_inner(second, m, inverse)
            }
            Auto::Base { fwd, bwd } => {
                let (map, _) = if inverse { (&bwd, &fwd) } else { (&fwd, &bwd) };
                if let Some(&w) = map.get(&v) {
                    return Ok(w);
                }
                // function values first so the domain stays closed
                for u in self.current.closure([v]) {
                    if u != v {
                        self.apply_inner(g, u, inverse)?;
                    }
                }
                let w = self.choose_image(g, v, inverse)?;
                self.assign_unchecked(g, v, w, inverse);
                Ok(w)
            }
        }
    }

    fn maps(&self, g: AutoId, inverse: bool) -> (&BTreeMap<Elem, Elem>, &BTreeMap<Elem, Elem>) {
        match &self.autos[g] {
            Auto::Base { fwd, bwd } => {
                if inverse {
                    (bwd, fwd)
                } else {
                    (fwd, bwd)
                }
            }
            _ => panic!("not a base automorphism"),
        }
    }

    fn assign_unchecked(&mut self, g: AutoId, v: Elem, w: Elem, inverse: bool) {
        if let Auto::Base { fwd, bwd } = &mut self.autos[g] {
            if inverse {
                bwd.insert(v, w);
                fwd.insert(w, v);
            } else {
                fwd.insert(v, w);
                bwd.insert(w, v);
            }
        }
    }

    /// Least `w` outside the image with `map ∪ {v ↦ w}` a partial isomorphism,
    /// extending the structure when none exists.
    fn choose_image(&mut self, g: AutoId, v: Elem, inverse: bool) -> Result<Elem> {
        let (map, _) = self.maps(g, inverse);
        let dom: Vec<Elem> = map.keys().copied().collect();
        let image: BTreeSet<Elem> = map.values().copied().collect();
        for &w in self.current.universe() {
            if !image.contains(&w) && consistent_step(&self.current, &self.current, map, &dom, v, w) {
                return Ok(w);
            }
        }
        let (ext, x) = self.transported_point(map, v)?;
        let base: Vec<Elem> = image.iter().copied().collect();
        self.charge("lazy automorphism image")?;
        let m = self.extend_unmetered(&base, &ext, &[x])?;
        let w = m[&x];
        let (map, _) = self.maps(g, inverse);
        let dom: Vec<Elem> = map.keys().copied().collect();
        if !consistent_step(&self.current, &self.current, map, &dom, v, w) {
            return Err(FraisseError::violation("extension did not realize the transported type"));
        }
        Ok(w)
    }

    /// The structure on `image(map) ∪ {x}` carrying the type of `v` over
    /// `dom(map)` transported along `map`. `x` is one above the current maximum.
    fn transported_point(&self, map: &BTreeMap<Elem, Elem>, v: Elem) -> Result<(FiniteStructure, Elem)> {
        let x = self.current.fresh();
        let image: Vec<Elem> = map.values().copied().collect();
        let mut ext = self.current.induced(image.iter().copied());
        ext.add_elem(x);
        let dom: Vec<Elem> = map.keys().copied().collect();
        let sig = self.current.signature().clone();
        let tr = |e: Elem| if e == v { x } else { map[&e] };
        for r in 0..sig.relations().len() {
            let mut hits = Vec::new();
            for_each_touching(&dom, &[v], sig.arity(r), &mut |t| {
                if self.current.holds(r, t) {
                    hits.push(t.iter().map(|&e| tr(e)).collect::<Vec<_>>());
                }
                true
            });
            for t in hits {
                ext.put(r, &t);
            }
        }
        for f in 0..self.current.fn_count() {
            if let Some(y) = self.current.fn_value(f, v) {
                let ty = if y == v {
                    x
                } else {
                    *map.get(&y).ok_or_else(|| FraisseError::pre("domain not closed under functions"))?
                };
                ext.set_fn(f, x, ty)?;
            }
        }
        Ok((ext, x))
    }

    /// Fixes `g(v) = w` for a base automorphism after checking the extension
    /// is still a partial isomorphism. Function values must already agree.
    pub fn assign(&mut self, g: AutoId, v: Elem, w: Elem) -> Result<()> {
        let (map, inv) = self.maps(g, false);
        if let Some(&old) = map.get(&v) {
            return if old == w { Ok(()) } else { Err(FraisseError::pre(format!("{v} already maps to {old}"))) };
        }
        if inv.contains_key(&w) {
            return Err(FraisseError::pre(format!("{w} is already an image")));
        }
        let dom: Vec<Elem> = map.keys().copied().collect();
        if !consistent_step(&self.current, &self.current, map, &dom, v, w) {
            return Err(FraisseError::violation(format!("{v} ↦ {w} breaks the partial isomorphism")));
        }
        self.assign_unchecked(g, v, w, false);
        Ok(())
    }

    /// Assigns a tuple map, closing under functions pointwise.
    pub fn assign_tuple(&mut self, g: AutoId, from: &[Elem], to: &[Elem]) -> Result<()> {
        let fc = self.current.fn_count();
        for (&v, &w) in from.iter().zip(to) {
            for f in 0..fc {
                if let (Some(fv), Some(fw)) = (self.current.fn_value(f, v), self.current.fn_value(f, w)) {
                    if fv != v {
                        self.assign(g, fv, fw)?;
                    }
                }
            }
            self.assign(g, v, w)?;
        }
        Ok(())
    }

    /// Forward and backward maps agree and preserve the structure.
    pub fn check_auto(&self, g: AutoId) -> bool {
        match &self.autos[g] {
            Auto::Base { fwd, bwd } => {
                fwd.len() == bwd.len()
                    && fwd.iter().all(|(a, b)| bwd.get(b) == Some(a))
                    && is_partial_iso(&self.current, &self.current, fwd)
            }
            _ => true,
        }
    }

    /// The first `n` points of a seeded random sample, closed under functions.
    pub fn sample_window(&self, n: usize, salt: u64) -> Vec<Elem> {
        let mut rng = self.rng(salt);
        let mut all = self.current.elems();
        all.shuffle(&mut rng);
        let mut out = BTreeSet::new();
        for p in all {
            if out.len() >= n {
                break;
            }
            let cl = self.current.closure([p]);
            if out.len() + cl.difference(&out).count() <= n {
                out.extend(cl);
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionReport {
    pub class: String,
    pub k: usize,
    pub window: Vec<Elem>,
    pub bases: usize,
    pub problems: usize,
    pub realized_existing: usize,
    pub realized_by_extension: usize,
    pub failures: Vec<String>,
    pub size_before: usize,
    pub size_after: usize,
}

impl ExtensionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.problems > 0
    }
}

/// Checks that every one-point extension of every closed subset of size ≤ `k`
/// of a sampled window is realized, or becomes realized within the budget.
pub fn verify_extension_property(limit: &mut LazyLimit, k: usize, window: usize, budget: Budget) -> Result<ExtensionReport> {
    let win = limit.sample_window(window, 0x5eed);
    let size_before = limit.current().len();
    let mut bases: BTreeSet<Vec<Elem>> = BTreeSet::new();
    for j in 0..=k.min(win.len()) {
        for_each_subset(&win, j, &mut |sub| {
            let cl: Vec<Elem> = limit.current().closure(sub.iter().copied()).into_iter().collect();
            if cl.len() <= k {
                bases.insert(cl);
            }
        });
    }
    let saved = limit.budget;
    limit.budget = budget;
    limit.begin_construction();
    let mut rep = ExtensionReport {
        class: limit.spec().name(),
        k,
        window: win,
        bases: bases.len(),
        problems: 0,
        realized_existing: 0,
        realized_by_extension: 0,
        failures: Vec::new(),
        size_before,
        size_after: 0,
    };
    for base in &bases {
        let bs = limit.current().induced(base.iter().copied());
        for (ext, x) in limit.spec().one_point_extensions(&bs) {
            rep.problems += 1;
            let mut new: Vec<Elem> = ext.universe().difference(bs.universe()).copied().collect();
            new.retain(|&y| y != x);
            new.insert(0, x);
            if limit.find_realization(base, &ext, &new, &BTreeSet::new()).is_some() {
                rep.realized_existing += 1;
                continue;
            }
            limit.begin_query();
            match limit.realize(base, &ext, &new, &BTreeSet::new()) {
                Ok(m) => {
                    let ok = is_partial_iso(&ext, limit.current(), &base.iter().map(|&e| (e, e)).chain(m).collect());
                    if ok && limit.spec().ok_at(limit.current(), limit.current().fresh() - 1) {
                        rep.realized_by_extension += 1;
                    } else {
                        rep.failures.push(format!("base {base:?}: realization failed re-check"));
                    }
                }
                Err(e) => rep.failures.push(format!("base {base:?}: {e}")),
            }
        }
    }
    limit.budget = saved;
    rep.size_after = limit.current().len();
    Ok(rep)
}
