//! Automorphisms of a lazy limit that move types maximally.
//!
//! Moved realisations of exterior types, the two commutator constructions
//! with their witness logs, the per-type witness search, and the joint
//! embedding check for partial automorphisms.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::classes::{ClassKind, ClassSpec};
use crate::error::{FraisseError, Result};
use crate::independence::{Predicate, SwirKind};
use crate::limit::{AutoId, LazyLimit};
use crate::partite::{perp, srho_canonical_amalgam_with};
use crate::structure::{canonical_code, enumerate_embeddings, is_partial_iso, search_extensions, Elem, FiniteStructure};

const EXISTING_CAP: usize = 32;
const EXISTING_LAZY: usize = 4;
const FRESH_TRIES: usize = 8;

/// A type over `base` presented by a structure on `base ∪ new`; the tuple
/// is `new` in order. Base and full universe are closed under functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExteriorType {
    pub base: Vec<Elem>,
    pub ext: FiniteStructure,
    pub new: Vec<Elem>,
}

impl ExteriorType {
    pub fn new(base: Vec<Elem>, ext: FiniteStructure, new: Vec<Elem>) -> Result<Self> {
        let b: BTreeSet<Elem> = base.iter().copied().collect();
        let n: BTreeSet<Elem> = new.iter().copied().collect();
        if b.len() != base.len() || n.len() != new.len() || !b.is_disjoint(&n) {
            return Err(FraisseError::pre("type needs distinct base and tuple points"));
        }
        if *ext.universe() != b.union(&n).copied().collect::<BTreeSet<_>>() {
            return Err(FraisseError::pre("type structure must live on base ∪ tuple"));
        }
        if ext.closure(base.iter().copied()) != b {
            return Err(FraisseError::pre("type base is not closed"));
        }
        Ok(ExteriorType { base, ext, new })
    }

    /// The type of `tuple` over `base` in `m`.
    pub fn of(m: &FiniteStructure, base: &[Elem], tuple: &[Elem]) -> Result<Self> {
        m.check_elems(base.iter().chain(tuple).copied())?;
        let all: BTreeSet<Elem> = base.iter().chain(tuple).copied().collect();
        if m.closure(all.iter().copied()) != all {
            return Err(FraisseError::pre("base ∪ tuple is not closed"));
        }
        ExteriorType::new(base.to_vec(), m.induced(all), tuple.to_vec())
    }

    pub fn len(&self) -> usize {
        self.new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new.is_empty()
    }

    /// Canonical code with every base point in its own colour.
    pub fn code(&self) -> Vec<u64> {
        let colours: BTreeMap<Elem, u32> = self.base.iter().enumerate().map(|(i, &a)| (a, i as u32 + 1)).collect();
        canonical_code(&self.ext, &colours)
    }

    /// `tuple` (aligned with `new`) realises the type in `m`.
    pub fn realised_by(&self, m: &FiniteStructure, tuple: &[Elem]) -> bool {
        if tuple.len() != self.new.len() || tuple.iter().any(|&t| !m.contains(t)) {
            return false;
        }
        let all: BTreeSet<Elem> = self.base.iter().chain(tuple).copied().collect();
        if all.len() != self.base.len() + tuple.len() || m.closure(all.iter().copied()) != all {
            return false;
        }
        let mut map: BTreeMap<Elem, Elem> = self.base.iter().map(|&a| (a, a)).collect();
        map.extend(self.new.iter().copied().zip(tuple.iter().copied()));
        is_partial_iso(&self.ext, m, &map)
    }

    /// Moves the base along `map`; tuple labels are renumbered from `start`.
    pub fn transport(&self, map: &BTreeMap<Elem, Elem>, start: Elem) -> Result<Self> {
        let mut ren = BTreeMap::new();
        for &a in &self.base {
            ren.insert(a, *map.get(&a).ok_or(FraisseError::UnknownElement(a))?);
        }
        let new: Vec<Elem> = (0..self.new.len()).map(|i| start + i as Elem).collect();
        ren.extend(self.new.iter().copied().zip(new.iter().copied()));
        let base = self.base.iter().map(|a| ren[a]).collect();
        ExteriorType::new(base, self.ext.relabel(&ren)?, new)
    }

    /// Tuple labels grouped so each group is closed over the base and the
    /// groups before it.
    fn chunks(&self) -> Vec<Vec<Elem>> {
        let mut placed: BTreeSet<Elem> = self.base.iter().copied().collect();
        let mut out = Vec::new();
        for &x in &self.new {
            if placed.contains(&x) {
                continue;
            }
            let cl = self.ext.closure(placed.iter().copied().chain([x]));
            let chunk: Vec<Elem> = self.new.iter().copied().filter(|y| cl.contains(y) && !placed.contains(y)).collect();
            placed.extend(chunk.iter().copied());
            out.push(chunk);
        }
        out
    }
}

/// Types of tuples of at most `max_len` window points over closed window
/// subsets of size at most `max_base`, one per type, ordered by base size,
/// tuple size and code.
pub fn window_types(m: &FiniteStructure, window: &[Elem], max_base: usize, max_len: usize) -> Vec<ExteriorType> {
    let win: Vec<Elem> = m.closure(window.iter().copied()).into_iter().collect();
    let mut bases: BTreeSet<Vec<Elem>> = BTreeSet::new();
    for k in 0..=max_base {
        crate::hyper::for_each_subset(&win, k, &mut |s| {
            let a = m.closure(s.iter().copied());
            if a.len() <= max_base {
                bases.insert(a.into_iter().collect());
            }
        });
    }
    let mut seen = BTreeSet::new();
    // sort key (base size, length, code, base), then the type
    type Keyed = (usize, usize, Vec<u64>, Vec<Elem>, ExteriorType);
    let mut out: Vec<Keyed> = Vec::new();
    for a in &bases {
        let rest: Vec<Elem> = win.iter().copied().filter(|x| !a.contains(x)).collect();
        for k in 1..=max_len {
            crate::hyper::for_each_subset(&rest, k, &mut |t| {
                let all = m.closure(a.iter().chain(t).copied());
                let new: Vec<Elem> = all.iter().copied().filter(|x| !a.contains(x)).collect();
                if new.len() > max_len {
                    return;
                }
                let Ok(ty) = ExteriorType::of(m, a, &new) else { return };
                let code = ty.code();
                if seen.insert((a.clone(), code.clone())) {
                    out.push((a.len(), new.len(), code, a.clone(), ty));
                }
            });
        }
    }
    out.sort_by(|x, y| (x.0, x.1, &x.2, &x.3).cmp(&(y.0, y.1, &y.2, &y.3)));
    out.into_iter().map(|t| t.4).collect()
}

/// A lazy automorphism sending the first point to another point generating a
/// closure of the same size, in a different part where parts exist.
pub fn moving_auto(limit: &mut LazyLimit) -> Result<AutoId> {
    let m = limit.current();
    let e = m.elems();
    let pairs: Vec<(Elem, Elem)> = e
        .iter()
        .flat_map(|&u| e.iter().map(move |&w| (u, w)))
        .filter(|&(u, w)| u != w && !same_part(m, u, w) && m.closure([u]).len() == m.closure([w]).len())
        .collect();
    for (u, w) in pairs {
        match limit.new_auto([(u, w)].into()) {
            Ok(g) => return Ok(g),
            Err(FraisseError::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(FraisseError::SearchFailed("no pair of points with matching closures".into()))
}

fn same_part(m: &FiniteStructure, x: Elem, y: Elem) -> bool {
    x == y || perp(m, x, y)
}

fn partite(spec: &ClassSpec) -> bool {
    matches!(spec.kind, ClassKind::Semigeneric | ClassKind::Srho | ClassKind::SrhoSigma)
}

/// One chunk of a type to realise over the points placed so far.
struct Chunk {
    base: Vec<Elem>,
    ext: FiniteStructure,
    temps: Vec<Elem>,
}

fn chunk_problem(m: &FiniteStructure, ty: &ExteriorType, placed: &BTreeMap<Elem, Elem>, chunk: &[Elem]) -> Result<Chunk> {
    let start = m.fresh().max(ty.ext.fresh());
    let mut ren: BTreeMap<Elem, Elem> = ty.base.iter().map(|&a| (a, a)).collect();
    ren.extend(placed.iter().map(|(&l, &e)| (l, e)));
    let base: Vec<Elem> = ren.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let temps: Vec<Elem> = (0..chunk.len()).map(|i| start + i as Elem).collect();
    ren.extend(chunk.iter().copied().zip(temps.iter().copied()));
    let keys: Vec<Elem> = ren.keys().copied().collect();
    let ext = ty.ext.induced(keys).relabel(&ren)?;
    Ok(Chunk { base, ext, temps })
}

/// Realisations in the current structure avoiding `avoid`, at most `cap`.
fn existing(m: &FiniteStructure, base: &[Elem], ext: &FiniteStructure, new: &[Elem], avoid: &BTreeSet<Elem>, cap: usize) -> Vec<Vec<Elem>> {
    let start: BTreeMap<Elem, Elem> = base.iter().map(|&e| (e, e)).collect();
    let mut out = Vec::new();
    search_extensions(ext, m, &start, new, &mut |map| {
        let t: Vec<Elem> = new.iter().map(|v| map[v]).collect();
        if !t.iter().any(|x| avoid.contains(x)) {
            out.push(t);
        }
        out.len() < cap
    });
    out
}

fn fresh(limit: &mut LazyLimit, base: &[Elem], ext: &FiniteStructure, new: &[Elem], prefs: &[(Elem, Elem, bool)]) -> Result<Vec<Elem>> {
    let m = limit.extend_with_prefs(base, ext, new, prefs)?;
    Ok(new.iter().map(|v| m[v]).collect())
}

/// A point moved by `g` (as `(u, gu)`), the `skip`-th such outside `forbid`,
/// evaluating `g` lazily when too few are known.
fn moved_pair(limit: &mut LazyLimit, g: AutoId, forbid: &dyn Fn(&FiniteStructure, Elem) -> bool, skip: usize) -> Result<Option<(Elem, Elem)>> {
    let mut seen = 0;
    let elems = limit.current().elems();
    let mut lazy = Vec::new();
    for &u in &elems {
        if forbid(limit.current(), u) {
            continue;
        }
        match limit.defined(g, u, false) {
            Some(gu) if gu != u && !forbid(limit.current(), gu) => {
                if seen == skip {
                    return Ok(Some((u, gu)));
                }
                seen += 1;
            }
            Some(_) => {}
            None => lazy.push(u),
        }
    }
    for u in lazy.into_iter().take(4 * (skip + 1)) {
        let gu = limit.apply(g, u)?;
        if gu != u && !forbid(limit.current(), gu) {
            if seen == skip {
                return Ok(Some((u, gu)));
            }
            seen += 1;
        }
    }
    Ok(None)
}

/// A part moved off itself by `g`, certified by a point `t` with `gt` in
/// another part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MovedPart {
    pub t: Elem,
    pub gt: Elem,
}

/// `count` distinct parts `P` with `gP ≠ P` whose points (and images) avoid
/// the parts of `avoid`. Known ones come first; further parts are made by
/// adding a point `w` with `u, u′, gu → w → gu′` for a moved `u` and `u′ ⊥ u`.
pub fn find_moved_parts(limit: &mut LazyLimit, g: AutoId, count: usize, avoid: &BTreeSet<Elem>) -> Result<Vec<MovedPart>> {
    if !partite(limit.spec()) {
        return Err(FraisseError::pre("parts exist only in ω-partite classes"));
    }
    let clear = |m: &FiniteStructure, x: Elem, chosen: &[MovedPart]| {
        !avoid.iter().any(|&a| same_part(m, x, a))
            && !chosen.iter().any(|p| same_part(m, x, p.t) || same_part(m, x, p.gt))
    };
    let mut out: Vec<MovedPart> = Vec::new();
    for t in limit.current().elems() {
        if out.len() >= count {
            return Ok(out);
        }
        let m = limit.current();
        if let Some(gt) = limit.defined(g, t, false) {
            if !same_part(m, t, gt) && clear(m, t, &out) && clear(m, gt, &out) {
                out.push(MovedPart { t, gt });
            }
        }
    }
    let empty = FiniteStructure::new(limit.spec().signature().clone());
    let mut proto = limit.spec().one_point_extensions(&empty);
    // prefer a prototype whose part already has a second point, so later
    // preferences can pin orientation against two points of the part
    proto.sort_by_key(|(e, _)| std::cmp::Reverse(e.len()));
    let Some((pext, px)) = proto.into_iter().next() else {
        return Err(FraisseError::SearchFailed("class has no one-point structure".into()));
    };
    let pnew: Vec<Elem> = pext.elems();
    let mut attempt = 0;
    while out.len() < count {
        if attempt >= FRESH_TRIES * count {
            return Err(FraisseError::SearchFailed(format!("found {} of {count} moved parts", out.len())));
        }
        let pivot = moved_pair(limit, g, &|_, _| false, attempt)?;
        attempt += 1;
        let Some((u, gu)) = pivot else { continue };
        let partner = limit.current().elems().into_iter().find(|&y| perp(limit.current(), u, y));
        let Some(u2) = partner else { continue };
        let gu2 = limit.apply(g, u2)?;
        let prefs = [(u, px, true), (u2, px, true), (gu, px, true), (gu2, px, false)];
        let w = fresh(limit, &[], &pext, &pnew, &prefs)?[pnew.iter().position(|&v| v == px).unwrap()];
        let gw = limit.apply(g, w)?;
        let m = limit.current();
        if !same_part(m, w, gw) && clear(m, w, &out) && clear(m, gw, &out) {
            out.push(MovedPart { t: w, gt: gw });
        }
    }
    Ok(out)
}

/// Bookkeeping while a moved realisation is assembled chunk by chunk.
struct Placement<'a> {
    g: AutoId,
    v: &'a BTreeSet<Elem>,
    /// `Some(U ∪ V)` in general-position mode.
    uv: Option<BTreeSet<Elem>>,
    /// Labels whose part meets no base point.
    fresh_part: BTreeSet<Elem>,
    placed: BTreeMap<Elem, Elem>,
    image: BTreeMap<Elem, Elem>,
}

impl Placement<'_> {
    /// Tries `cand` for `chunk`; keeps it when the conditions still hold.
    fn accept(&mut self, limit: &mut LazyLimit, chunk: &[Elem], cand: &[Elem]) -> Result<bool> {
        let mut placed = self.placed.clone();
        let mut image = self.image.clone();
        for (&l, &x) in chunk.iter().zip(cand) {
            if self.v.contains(&x) || image.values().any(|&y| y == x) {
                return Ok(false);
            }
            placed.insert(l, x);
        }
        for &x in cand {
            let gx = limit.apply(self.g, x)?;
            image.insert(x, gx);
        }
        let tuple: BTreeSet<Elem> = placed.values().copied().collect();
        if image.values().any(|y| tuple.contains(y) || self.v.contains(y)) {
            return Ok(false);
        }
        if let Some(uv) = &self.uv {
            let m = limit.current();
            for (l, b) in &placed {
                if !self.fresh_part.contains(l) {
                    continue;
                }
                let gb = image[b];
                if tuple.iter().any(|&y| same_part(m, y, gb)) {
                    return Ok(false);
                }
                if uv.iter().any(|&w| same_part(m, *b, w) || same_part(m, gb, w)) {
                    return Ok(false);
                }
            }
        }
        self.placed = placed;
        self.image = image;
        Ok(true)
    }

    /// Amalgam preferences steering the chunk's first point off its `g`-image.
    fn prefs(&self, limit: &mut LazyLimit, ch: &Chunk, label: Elem, attempt: usize) -> Result<Vec<(Elem, Elem, bool)>> {
        let y = ch.temps[0];
        let base: BTreeSet<Elem> = ch.base.iter().copied().collect();
        if self.uv.is_none() {
            let Some((u, gu)) = moved_pair(limit, self.g, &|_, x| base.contains(&x), attempt)? else {
                return Ok(Vec::new());
            };
            return Ok(ch.temps.iter().flat_map(|&t| [(u, t, true), (gu, t, false)]).collect());
        }
        let mut avoid: BTreeSet<Elem> = base.clone();
        avoid.extend(self.uv.iter().flatten().copied());
        avoid.extend(self.image.values().copied());
        let parts = find_moved_parts(limit, self.g, attempt + 1, &avoid)?;
        let p = parts[attempt];
        let mut prefs = vec![(p.t, y, false), (p.gt, y, true)];
        if self.fresh_part.contains(&label) {
            let m = limit.current();
            if let Some(t2) = m.elems().into_iter().find(|&z| perp(m, z, p.t)) {
                let gt2 = limit.apply(self.g, t2)?;
                prefs = vec![(p.t, y, false), (t2, y, false), (p.gt, y, false), (gt2, y, true)];
            }
        }
        Ok(prefs)
    }
}

fn realise_moved(limit: &mut LazyLimit, g: AutoId, v: &BTreeSet<Elem>, q: &ExteriorType, general: bool) -> Result<Vec<Elem>> {
    if limit.current().induced(q.base.iter().copied()) != q.ext.induced(q.base.iter().copied()) {
        return Err(FraisseError::pre("type base does not match the limit"));
    }
    let uv = general.then(|| q.base.iter().chain(v).copied().collect::<BTreeSet<Elem>>());
    let fresh_part = if general {
        q.new.iter().copied().filter(|&x| !q.base.iter().any(|&u| same_part(&q.ext, x, u))).collect()
    } else {
        BTreeSet::new()
    };
    let mut st = Placement { g, v, uv, fresh_part, placed: BTreeMap::new(), image: BTreeMap::new() };
    for chunk in q.chunks() {
        let ch = chunk_problem(limit.current(), q, &st.placed, &chunk)?;
        let mut avoid: BTreeSet<Elem> = v.clone();
        avoid.extend(st.image.values().copied());
        let cands = existing(limit.current(), &ch.base, &ch.ext, &ch.temps, &avoid, EXISTING_CAP);
        let (known, lazy): (Vec<_>, Vec<_>) =
            cands.into_iter().partition(|c| c.iter().all(|&x| limit.defined(g, x, false).is_some()));
        let mut done = false;
        for c in known.iter().chain(lazy.iter().take(EXISTING_LAZY)) {
            if st.accept(limit, &chunk, c)? {
                done = true;
                break;
            }
        }
        let mut attempt = 0;
        while !done && attempt < FRESH_TRIES {
            let prefs = st.prefs(limit, &ch, chunk[0], attempt)?;
            let ch = chunk_problem(limit.current(), q, &st.placed, &chunk)?;
            let prefs: Vec<_> = prefs.into_iter().map(|(o, _, d)| (o, ch.temps[0], d)).collect();
            let prefs: Vec<_> = if general { prefs } else { ch.temps.iter().flat_map(|&t| prefs.iter().map(move |&(o, _, d)| (o, t, d))).collect() };
            let c = fresh(limit, &ch.base, &ch.ext, &ch.temps, &prefs)?;
            done = st.accept(limit, &chunk, &c)?;
            attempt += 1;
        }
        if !done {
            return Err(FraisseError::SearchFailed(format!(
                "no realisation of the type over {:?} moved by the automorphism",
                q.base
            )));
        }
    }
    Ok(q.new.iter().map(|l| st.placed[l]).collect())
}

/// `b̄ ⊨ q` with `b̄ ∩ gb̄ = ∅` and `(b̄ ∪ gb̄) ∩ V = ∅`, realised chunk by
/// chunk; fresh points are pinned between some `u` and `gu ≠ u` so that `g`
/// cannot fix them.
pub fn realisation_disjoint(limit: &mut LazyLimit, g: AutoId, v: &BTreeSet<Elem>, q: &ExteriorType) -> Result<Vec<Elem>> {
    realise_moved(limit, g, v, q, false)
}

/// `b̄ ⊨ p` (over `U = p.base`) with `b̄ ∩ gb̄ = ∅`, `(b̄ ∪ gb̄) ∩ V = ∅`, and
/// for every `x_i ∼ U`: `b̄ ∼ gb_i` and `{b_i, gb_i} ∼ UV`.
pub fn realize_in_general_position(limit: &mut LazyLimit, g: AutoId, v: &BTreeSet<Elem>, p: &ExteriorType) -> Result<Vec<Elem>> {
    if !partite(limit.spec()) {
        return Err(FraisseError::pre("general position is defined for ω-partite classes"));
    }
    realise_moved(limit, g, v, p, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    R,
    L,
}

/// Which of `f` and `f⁻¹` carries a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Via {
    Forward,
    Inverse,
}

/// A logged witness: `tuple ⫝_base image` for `R`, `image ⫝_base tuple` for `L`,
/// where `image` is the tuple moved by the commutator or its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub stage: usize,
    pub ty: usize,
    pub side: Side,
    pub via: Via,
    pub base: Vec<Elem>,
    pub tuple: Vec<Elem>,
    pub image: Vec<Elem>,
    pub c: Vec<Elem>,
    pub d: Vec<Elem>,
    pub holds: bool,
}

impl Witness {
    fn sides(&self) -> (&[Elem], &[Elem]) {
        match self.side {
            Side::R => (&self.tuple, &self.image),
            Side::L => (&self.image, &self.tuple),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    Free,
    Srho,
}

/// Output of a commutator construction: `f = [g, h]`.
#[derive(Clone, Debug)]
pub struct Commutator {
    pub g: AutoId,
    pub h: AutoId,
    pub f: AutoId,
    pub construction: Construction,
    pub pred: Predicate,
    pub types: Vec<ExteriorType>,
    pub log: Vec<Witness>,
}

impl Commutator {
    /// Appends `ty` to the schedule and runs its stage.
    pub fn run_stage(&mut self, limit: &mut LazyLimit, ty: ExteriorType) -> Result<()> {
        let ti = self.types.len();
        let stage = self.stages();
        self.types.push(ty);
        let run = |c: &Commutator, limit: &mut LazyLimit| -> Result<[Witness; 2]> {
            match c.construction {
                Construction::Free => {
                    let gi = limit.inverse(c.g);
                    Ok([free_right(limit, c, stage, ti)?, free_left(limit, c, gi, stage, ti)?])
                }
                Construction::Srho => {
                    Ok([srho_part(limit, c, stage, ti, Side::R)?, srho_part(limit, c, stage, ti, Side::L)?])
                }
            }
        };
        let ws = run(self, limit).map_err(|e| stage_error(e, stage, &self.types[ti]))?;
        self.log.extend(ws);
        Ok(())
    }

    pub fn mode(&self) -> MoveMode {
        match self.construction {
            Construction::Free => MoveMode::InverseLeft,
            Construction::Srho => MoveMode::SameLeft,
        }
    }

    /// Re-checks every logged witness against the current maps and structure.
    pub fn revalidate(&self, limit: &LazyLimit) -> Result<Vec<bool>> {
        self.log.iter().map(|w| revalidate_witness(limit, &self.pred, self.f, &self.types, w)).collect()
    }

    pub fn stages(&self) -> usize {
        self.log.iter().map(|w| w.stage + 1).max().unwrap_or(0)
    }
}

/// The witness still realises its type, its image still matches the map,
/// and the independence holds.
pub fn revalidate_witness(limit: &LazyLimit, pred: &Predicate, f: AutoId, types: &[ExteriorType], w: &Witness) -> Result<bool> {
    let m = limit.current();
    let Some(ty) = types.get(w.ty) else { return Ok(false) };
    if ty.base != w.base || !ty.realised_by(m, &w.tuple) {
        return Ok(false);
    }
    let inverse = w.via == Via::Inverse;
    for (&x, &y) in w.tuple.iter().zip(&w.image) {
        if limit.defined(f, x, inverse) != Some(y) {
            return Ok(false);
        }
    }
    let (l, r) = w.sides();
    pred.eval(m, &w.base, l, r)
}

fn is_free(kind: SwirKind) -> bool {
    matches!(
        kind,
        SwirKind::FreeAmalgam | SwirKind::RandomTournament | SwirKind::MultiHypertournamentDelta | SwirKind::LabelledPartite
    )
}

fn moves_something(limit: &LazyLimit, g: AutoId) -> bool {
    limit.base_map(g).is_some_and(|m| m.iter().any(|(a, b)| a != b))
}

fn dom(limit: &LazyLimit, h: AutoId) -> Vec<Elem> {
    limit.base_map(h).map(|m| m.keys().copied().collect()).unwrap_or_default()
}

/// Brings `v_i`, `A`, `gA`, `[g,h]^{±1}A` and `g[g,h]A` into the domain of `h`.
fn prepare(limit: &mut LazyLimit, g: AutoId, h: AutoId, f: AutoId, i: usize, base: &[Elem]) -> Result<()> {
    let elems = limit.current().elems();
    if let Some(&v) = elems.get(i) {
        limit.apply(h, v)?;
        limit.apply_inv(h, v)?;
    }
    let fa = limit.apply_tuple(f, base)?;
    let fia = limit.apply_inv_tuple(f, base)?;
    for &x in base.iter().chain(&fa).chain(&fia) {
        limit.apply(h, x)?;
    }
    for &x in base.iter().chain(&fa) {
        let gx = limit.apply(g, x)?;
        limit.apply(h, gx)?;
    }
    Ok(())
}

/// `d̄ ⊨ h⁻¹·tp(target / h(dom h))` with `other ⫝_{dom h} d̄` (when
/// `other_left`) or `d̄ ⫝_{dom h} other`, realised over `dom h ∪ other`.
fn pull_back(limit: &mut LazyLimit, pred: &Predicate, h: AutoId, target: &[Elem], other: &[Elem], other_left: bool) -> Result<Vec<Elem>> {
    let hmap = limit.base_map(h).cloned().unwrap_or_default();
    let w: Vec<Elem> = hmap.keys().copied().collect();
    let hw: Vec<Elem> = hmap.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let inv: BTreeMap<Elem, Elem> = hmap.iter().map(|(&a, &b)| (b, a)).collect();
    let m = limit.current();
    let ty = ExteriorType::of(m, &hw, target)?.transport(&inv, m.fresh())?;
    let wo: Vec<Elem> = m.closure(w.iter().chain(other).copied()).into_iter().collect();
    let mw = m.induced(w.iter().copied());
    let mo = m.induced(wo.iter().copied());
    let out = if other_left { pred.op(&mw, &mo, &ty.ext)? } else { pred.op(&mw, &ty.ext, &mo)? };
    let r = limit.realize(&wo, &out, &ty.new, &BTreeSet::new())?;
    Ok(ty.new.iter().map(|l| r[l]).collect())
}

fn transported(limit: &LazyLimit, h: AutoId, u: &[Elem], tuple: &[Elem]) -> Result<(ExteriorType, BTreeSet<Elem>)> {
    let hmap = limit.base_map(h).cloned().unwrap_or_default();
    let m = limit.current();
    let ty = ExteriorType::of(m, u, tuple)?.transport(&hmap, m.fresh())?;
    let hu = ty.base.iter().copied().collect();
    Ok((ty, hu))
}

/// Stage producing `b̄ ⫝_A [g,h]b̄` in a class with a free relation.
fn free_right(limit: &mut LazyLimit, c: &Commutator, stage: usize, ti: usize) -> Result<Witness> {
    let ty = &c.types[ti];
    prepare(limit, c.g, c.h, c.f, 2 * stage, &ty.base)?;
    let u = dom(limit, c.h);
    let uset: BTreeSet<Elem> = u.iter().copied().collect();
    let b = realisation_disjoint(limit, c.g, &uset, ty)?;
    let (tyc, hu) = transported(limit, c.h, &u, &b)?;
    let cc = realisation_disjoint(limit, c.g, &hu, &tyc)?;
    limit.assign_tuple(c.h, &b, &cc)?;
    let gb = limit.apply_tuple(c.g, &b)?;
    let gc = limit.apply_tuple(c.g, &cc)?;
    let d = pull_back(limit, &c.pred, c.h, &gc, &gb, true)?;
    limit.assign_tuple(c.h, &d, &gc)?;
    let image = limit.apply_tuple(c.f, &b)?;
    let holds = c.pred.eval(limit.current(), &ty.base, &b, &image)?;
    Ok(Witness { stage, ty: ti, side: Side::R, via: Via::Forward, base: ty.base.clone(), tuple: b, image, c: cc, d, holds })
}

/// Stage producing `[g,h]⁻¹b̄ ⫝_A b̄`: here `h(gb̄) = c̄` and `h⁻¹(g⁻¹c̄) = d̄`
/// with `d̄ ⫝ b̄` over the domain of `h`.
fn free_left(limit: &mut LazyLimit, c: &Commutator, gi: AutoId, stage: usize, ti: usize) -> Result<Witness> {
    let ty = &c.types[ti];
    prepare(limit, c.g, c.h, c.f, 2 * stage + 1, &ty.base)?;
    let u = dom(limit, c.h);
    let uset: BTreeSet<Elem> = u.iter().copied().collect();
    let b = realisation_disjoint(limit, c.g, &uset, ty)?;
    let e = limit.apply_tuple(c.g, &b)?;
    let (tye, hu) = transported(limit, c.h, &u, &e)?;
    let cc = realisation_disjoint(limit, gi, &hu, &tye)?;
    limit.assign_tuple(c.h, &e, &cc)?;
    let gic = limit.apply_inv_tuple(c.g, &cc)?;
    let d = pull_back(limit, &c.pred, c.h, &gic, &b, false)?;
    limit.assign_tuple(c.h, &d, &gic)?;
    let image = limit.apply_inv_tuple(c.f, &b)?;
    let holds = c.pred.eval(limit.current(), &ty.base, &image, &b)?;
    Ok(Witness { stage, ty: ti, side: Side::L, via: Via::Inverse, base: ty.base.clone(), tuple: b, image, c: cc, d, holds })
}

/// Stage of the `S_ρ` construction: `b̄ ⫝_A [g,h]b̄` for `R`, `[g,h]b̄ ⫝_A b̄`
/// for `L`.
fn srho_part(limit: &mut LazyLimit, c: &Commutator, stage: usize, ti: usize, side: Side) -> Result<Witness> {
    let ty = &c.types[ti];
    let step = 2 * stage + usize::from(side == Side::L);
    prepare(limit, c.g, c.h, c.f, step, &ty.base)?;
    let u = dom(limit, c.h);
    let uset: BTreeSet<Elem> = u.iter().copied().collect();
    let m = limit.current();
    let rho = m.signature().func("rho").ok_or_else(|| FraisseError::SignatureMismatch("no rho symbol".into()))?;

    // the type over U: canonical over A, and for fresh-part points
    // w → [g,h]r (R) or w ← [g,h]r (L) for each representative r of a part
    // of A missing [g,h]⁻¹A
    let fia: Vec<Elem> = ty.base.iter().map(|&a| limit.defined(c.f, a, true).unwrap_or(a)).collect();
    let reps: BTreeSet<Elem> = ty.base.iter().filter_map(|&a| m.fn_value(rho, a)).collect();
    let start = m.fresh().max(ty.ext.fresh());
    let ren: BTreeMap<Elem, Elem> =
        ty.base.iter().map(|&a| (a, a)).chain(ty.new.iter().enumerate().map(|(i, &x)| (x, start + i as Elem))).collect();
    let pext = ty.ext.relabel(&ren)?;
    let temps: Vec<Elem> = ty.new.iter().map(|x| ren[x]).collect();
    let mut prefs = Vec::new();
    for &r in &reps {
        if fia.iter().any(|&z| same_part(m, r, z)) {
            continue;
        }
        let Some(fr) = limit.defined(c.f, r, false) else { continue };
        for &x in &temps {
            if !ty.base.iter().any(|&a| same_part(&pext, x, a)) {
                prefs.push((fr, x, side == Side::L));
            }
        }
    }
    let over_u = srho_canonical_amalgam_with(&m.induced(ty.base.iter().copied()), &m.induced(u.iter().copied()), &pext, &prefs)?;
    let p1 = ExteriorType::new(u.clone(), over_u, temps)?;

    let b = realize_in_general_position(limit, c.g, &uset, &p1)?;
    let (tyc, hu) = transported(limit, c.h, &u, &b)?;
    let cc = realize_in_general_position(limit, c.g, &hu, &tyc)?;
    limit.assign_tuple(c.h, &b, &cc)?;
    let gb = limit.apply_tuple(c.g, &b)?;
    let gc = limit.apply_tuple(c.g, &cc)?;
    let d = pull_back(limit, &c.pred, c.h, &gc, &gb, side == Side::R)?;
    limit.assign_tuple(c.h, &d, &gc)?;
    let image = limit.apply_tuple(c.f, &b)?;
    let m = limit.current();
    let holds = match side {
        Side::R => c.pred.eval(m, &ty.base, &b, &image)?,
        Side::L => c.pred.eval(m, &ty.base, &image, &b)?,
    };
    Ok(Witness { stage, ty: ti, side, via: Via::Forward, base: ty.base.clone(), tuple: b, image, c: cc, d, holds })
}

fn start_commutator(
    limit: &mut LazyLimit,
    construction: Construction,
    pred: Predicate,
    g: AutoId,
    types: Vec<ExteriorType>,
    stages: usize,
) -> Result<Commutator> {
    if pred.class != *limit.spec() {
        return Err(FraisseError::pre("predicate and limit live on different classes"));
    }
    if !moves_something(limit, g) {
        return Err(FraisseError::pre("g must be a non-identity base automorphism"));
    }
    if types.len() < stages {
        return Err(FraisseError::pre(format!("{stages} stages need {stages} types, have {}", types.len())));
    }
    limit.begin_construction();
    let h = limit.new_auto(BTreeMap::new())?;
    let f = limit.commutator(g, h);
    let mut c = Commutator { g, h, f, construction, pred, types: Vec::new(), log: Vec::new() };
    for ty in types.into_iter().take(stages) {
        c.run_stage(limit, ty)?;
    }
    Ok(c)
}

/// Builds `h` through stages handling `types[0..stages]`; each stage logs a
/// witness for `[g,h]` (right) and for `[g,h]⁻¹` (left).
pub fn free_swir_commutator(
    limit: &mut LazyLimit,
    pred: &Predicate,
    g: AutoId,
    types: Vec<ExteriorType>,
    stages: usize,
) -> Result<Commutator> {
    if !is_free(pred.kind) || pred.mutated {
        return Err(FraisseError::pre(format!("{} is not a free relation", pred.name())));
    }
    start_commutator(limit, Construction::Free, pred.clone(), g, types, stages)
}

/// The alternating construction on `S_ρ`: each stage is an `R` half then an
/// `L` half for the same type, both witnessed by `[g,h]`.
pub fn srho_commutator(limit: &mut LazyLimit, g: AutoId, types: Vec<ExteriorType>, stages: usize) -> Result<Commutator> {
    if limit.spec().kind != ClassKind::Srho {
        return Err(FraisseError::pre("the construction needs an S_ρ limit"));
    }
    let pred = Predicate::with_class(SwirKind::Srho, limit.spec().clone())?;
    start_commutator(limit, Construction::Srho, pred, g, types, stages)
}

fn stage_error(e: FraisseError, stage: usize, ty: &ExteriorType) -> FraisseError {
    let at = format!("stage {stage}, type of {} point(s) over {:?}", ty.len(), ty.base);
    match e {
        FraisseError::BudgetExhausted { spent, context } => {
            FraisseError::BudgetExhausted { spent, context: format!("{context} ({at})") }
        }
        FraisseError::SearchFailed(s) => FraisseError::SearchFailed(format!("{s} ({at})")),
        other => other,
    }
}

/// Which map the left witness uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveMode {
    /// `b̄ ⫝ fb̄` and `f⁻¹b̄ ⫝ b̄`.
    InverseLeft,
    /// `b̄ ⫝ fb̄` and `fb̄ ⫝ b̄`.
    SameLeft,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SideVerdict {
    pub found: bool,
    pub tuple: Vec<Elem>,
    pub image: Vec<Elem>,
    pub source: String,
    pub tried: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeVerdict {
    pub index: usize,
    pub base: Vec<Elem>,
    pub size: usize,
    pub right: SideVerdict,
    pub left: SideVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MovesReport {
    pub predicate: String,
    pub class: String,
    pub mode: MoveMode,
    pub types: Vec<TypeVerdict>,
    pub passed: bool,
}

impl MovesReport {
    pub fn failures(&self) -> impl Iterator<Item = &TypeVerdict> {
        self.types.iter().filter(|t| !t.right.found || !t.left.found)
    }
}

fn lazy_map(limit: &mut LazyLimit, f: AutoId, t: &[Elem], inverse: bool) -> Result<Vec<Elem>> {
    if inverse {
        limit.apply_inv_tuple(f, t)
    } else {
        limit.apply_tuple(f, t)
    }
}

/// Looks for `b̄ ⊨ ty` with `b̄ ⫝_A φb̄` (`left = false`) or `φb̄ ⫝_A b̄`,
/// `φ = f` or `f⁻¹`: logged witnesses, then realisations whose image is
/// already known, then fresh realisations `b̄` and fresh `z̄ ⊨ φ·ty` with
/// `b̄ = φ⁻¹z̄`, each plain and pinned so that `φ` moves it.
#[allow(clippy::too_many_arguments)]
fn search_side(
    limit: &mut LazyLimit,
    pred: &Predicate,
    f: AutoId,
    ty: &ExteriorType,
    inverse: bool,
    left: bool,
    hints: &[&Witness],
) -> Result<SideVerdict> {
    let mut tried = 0;
    let mut check = |limit: &LazyLimit, b: &[Elem], img: &[Elem]| -> Result<bool> {
        tried += 1;
        let (l, r) = if left { (img, b) } else { (b, img) };
        pred.eval(limit.current(), &ty.base, l, r)
    };
    let verdict = |b: Vec<Elem>, img: Vec<Elem>, source: &str, tried: usize| SideVerdict {
        found: true,
        tuple: b,
        image: img,
        source: source.to_string(),
        tried,
    };
    for w in hints {
        let via_ok = (w.via == Via::Inverse) == inverse;
        let side_ok = (w.side == Side::L) == left;
        if !via_ok || !side_ok || w.base != ty.base || !ty.realised_by(limit.current(), &w.tuple) {
            continue;
        }
        let img: Option<Vec<Elem>> = w.tuple.iter().map(|&x| limit.defined(f, x, inverse)).collect();
        if let Some(img) = img {
            if check(limit, &w.tuple, &img)? {
                return Ok(verdict(w.tuple.clone(), img, "log", tried));
            }
        }
    }
    let cands = existing(limit.current(), &ty.base, &ty.ext, &ty.new, &BTreeSet::new(), 64);
    for b in &cands {
        let img: Option<Vec<Elem>> = b.iter().map(|&x| limit.defined(f, x, inverse)).collect();
        if let Some(img) = img {
            if check(limit, b, &img)? {
                return Ok(verdict(b.clone(), img, "existing", tried));
            }
        }
    }
    limit.begin_construction();
    let phi = if inverse { limit.inverse(f) } else { f };
    let phi_inv = if inverse { f } else { limit.inverse(f) };
    // (pull back through φ, pin off the fixed points of φ)
    let order: [(bool, bool); 4] = if left {
        [(true, false), (true, true), (false, false), (false, true)]
    } else {
        [(false, false), (false, true), (true, false), (true, true)]
    };
    for (pulled, pinned) in order {
        let realise = |limit: &mut LazyLimit, auto: AutoId, t: &ExteriorType| -> Result<Option<Vec<Elem>>> {
            if !pinned {
                return fresh(limit, &t.base, &t.ext, &t.new, &[]).map(Some);
            }
            match realisation_disjoint(limit, auto, &BTreeSet::new(), t) {
                Ok(b) => Ok(Some(b)),
                Err(FraisseError::SearchFailed(_)) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let (b, img) = if pulled {
            let fa = limit.apply_tuple(phi, &ty.base)?;
            let map: BTreeMap<Elem, Elem> = ty.base.iter().copied().zip(fa).collect();
            let m = limit.current();
            let moved = ty.transport(&map, m.fresh().max(ty.ext.fresh()))?;
            let Some(z) = realise(limit, phi_inv, &moved)? else { continue };
            (limit.apply_tuple(phi_inv, &z)?, z)
        } else {
            let Some(b) = realise(limit, phi, ty)? else { continue };
            let img = limit.apply_tuple(phi, &b)?;
            (b, img)
        };
        if !ty.realised_by(limit.current(), &b) {
            return Err(FraisseError::violation("automorphism moved a realisation off its type"));
        }
        if check(limit, &b, &img)? {
            return Ok(verdict(b, img, "fresh", tried));
        }
    }
    for b in cands.iter().take(EXISTING_LAZY) {
        let img = lazy_map(limit, f, b, inverse)?;
        if check(limit, b, &img)? {
            return Ok(verdict(b.clone(), img, "existing", tried));
        }
    }
    Ok(SideVerdict { found: false, tuple: Vec::new(), image: Vec::new(), source: String::new(), tried })
}

/// For every type, searches an `R`-witness for `f` and an `L`-witness for
/// `f⁻¹` or `f` (by `mode`), trying `hints` first.
pub fn moves_maximally_verify(
    limit: &mut LazyLimit,
    f: AutoId,
    pred: &Predicate,
    types: &[ExteriorType],
    hints: &[Witness],
    mode: MoveMode,
) -> Result<MovesReport> {
    if pred.class != *limit.spec() {
        return Err(FraisseError::pre("predicate and limit live on different classes"));
    }
    let mut out = Vec::new();
    for (i, ty) in types.iter().enumerate() {
        let hs: Vec<&Witness> = hints.iter().filter(|w| w.base == ty.base).collect();
        let right = search_side(limit, pred, f, ty, false, false, &hs)?;
        let left = search_side(limit, pred, f, ty, mode == MoveMode::InverseLeft, true, &hs)?;
        out.push(TypeVerdict { index: i, base: ty.base.clone(), size: ty.len(), right, left });
    }
    let passed = out.iter().all(|t| t.right.found && t.left.found);
    Ok(MovesReport { predicate: pred.name(), class: pred.class.name(), mode, types: out, passed })
}

/// [`moves_maximally_verify`] for a constructed commutator; a type with no
/// witness yet is scheduled as a further stage of the construction and
/// checked again against the new log entries.
pub fn verify_commutator(limit: &mut LazyLimit, c: &mut Commutator, types: &[ExteriorType]) -> Result<MovesReport> {
    let mut rep = moves_maximally_verify(limit, c.f, &c.pred.clone(), types, &c.log, c.mode())?;
    for v in rep.types.iter_mut() {
        if v.right.found && v.left.found {
            continue;
        }
        let ty = &types[v.index];
        let before = c.log.len();
        c.run_stage(limit, ty.clone())?;
        let fresh_log: Vec<&Witness> = c.log[before..].iter().collect();
        let left_inverse = c.mode() == MoveMode::InverseLeft;
        if !v.right.found {
            v.right = search_side(limit, &c.pred, c.f, ty, false, false, &fresh_log)?;
            v.right.source = format!("stage/{}", v.right.source);
        }
        if !v.left.found {
            v.left = search_side(limit, &c.pred, c.f, ty, left_inverse, true, &fresh_log)?;
            v.left.source = format!("stage/{}", v.left.source);
        }
    }
    rep.passed = rep.types.iter().all(|t| t.right.found && t.left.found);
    Ok(rep)
}

/// A partial automorphism of a finite structure.
pub type PartialAuto = (FiniteStructure, BTreeMap<Elem, Elem>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JepOutcome {
    /// `(C, f_C)` with embeddings of `A` and `B` (disjoint images) commuting
    /// with the partial automorphisms.
    Joint { c: FiniteStructure, fc: BTreeMap<Elem, Elem>, ea: BTreeMap<Elem, Elem>, eb: BTreeMap<Elem, Elem> },
    /// Nothing up to `bound` points; `candidates` embedding pairs were checked.
    Exhausted { bound: usize, candidates: usize, note: Option<String> },
}

/// Searches members `C` up to `bound` points, up to isomorphism, for
/// disjoint embeddings of `A` and `B` whose transported maps together form a
/// partial automorphism of `C`.
pub fn kr_jep_check(spec: &ClassSpec, a: &PartialAuto, b: &PartialAuto, bound: usize) -> Result<JepOutcome> {
    for (s, f) in [a, b] {
        if !spec.is_member(s) {
            return Err(FraisseError::pre("structure is not in the class"));
        }
        if !is_partial_iso(s, s, f) || f.values().any(|v| !s.contains(*v)) {
            return Err(FraisseError::pre("map is not a partial automorphism"));
        }
    }
    let mut candidates = 0;
    for n in (a.0.len() + b.0.len()).max(1)..=bound {
        for c in spec.members_of_size(n) {
            let eas = enumerate_embeddings(&a.0, &c)?;
            let ebs = enumerate_embeddings(&b.0, &c)?;
            for ea in &eas {
                let ia = ea.image();
                for eb in &ebs {
                    if eb.image().iter().any(|x| ia.contains(x)) {
                        continue;
                    }
                    candidates += 1;
                    let mut fc = BTreeMap::new();
                    for (x, y) in &a.1 {
                        fc.insert(ea.map[x], ea.map[y]);
                    }
                    for (x, y) in &b.1 {
                        fc.insert(eb.map[x], eb.map[y]);
                    }
                    if is_partial_iso(&c, &c, &fc) {
                        return Ok(JepOutcome::Joint { c: c.clone(), fc, ea: ea.map.clone(), eb: eb.map.clone() });
                    }
                }
            }
        }
    }
    let note = match spec.kind {
        ClassKind::Hyper(k) if k >= 3 && a.0.len() + b.0.len() <= k => Some(format!(
            "every {k}-set carries an orientation preserved exactly by Alt_{k}; an odd permutation of the joint images is \
             never a partial automorphism, so {} points already decide",
            a.0.len() + b.0.len()
        )),
        _ => None,
    };
    Ok(JepOutcome::Exhausted { bound, candidates, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::tn_dense_conjugacy_witness;

    fn moved_auto(limit: &mut LazyLimit) -> AutoId {
        let e = limit.current().elems();
        let m = limit.current();
        let (u, w) = e
            .iter()
            .flat_map(|&u| e.iter().map(move |&w| (u, w)))
            .find(|&(u, w)| u != w && m.closure([u]).len() == 1 && m.closure([w]).len() == 1)
            .unwrap();
        limit.new_auto([(u, w)].into()).unwrap()
    }

    #[test]
    fn one_type_over_nothing_gets_a_moved_point() {
        let mut l = LazyLimit::build(ClassSpec::parse("t2").unwrap(), 40, 1).unwrap();
        let g = moved_auto(&mut l);
        let ext = FiniteStructure::on(l.spec().signature().clone(), [1000]);
        let q = ExteriorType::new(vec![], ext, vec![1000]).unwrap();
        let v: BTreeSet<Elem> = l.current().elems().into_iter().take(10).collect();
        let b = realisation_disjoint(&mut l, g, &v, &q).unwrap();
        let gb = l.apply(g, b[0]).unwrap();
        assert_ne!(gb, b[0]);
        assert!(!v.contains(&b[0]) && !v.contains(&gb));
    }

    #[test]
    fn huge_avoid_set_forces_extension() {
        let mut l = LazyLimit::build(ClassSpec::parse("t23").unwrap(), 60, 2).unwrap();
        let g = moved_auto(&mut l);
        let win = l.sample_window(3, 0);
        let types = window_types(l.current(), &win, 2, 2);
        let v: BTreeSet<Elem> = l.current().universe().clone();
        let q = types.last().unwrap();
        let b = realisation_disjoint(&mut l, g, &v, q).unwrap();
        assert!(q.realised_by(l.current(), &b));
        for &x in &b {
            assert!(!v.contains(&x));
            let gx = l.apply(g, x).unwrap();
            assert!(!b.contains(&gx) && !v.contains(&gx));
        }
    }

    #[test]
    fn window_types_are_distinct_and_ordered() {
        let l = LazyLimit::build(ClassSpec::parse("t2").unwrap(), 30, 0).unwrap();
        let win = l.sample_window(3, 0);
        let types = window_types(l.current(), &win, 2, 2);
        assert!(!types.is_empty());
        for w in types.windows(2) {
            assert!((w[0].base.len(), w[0].len()) <= (w[1].base.len(), w[1].len()));
        }
        // over the empty base a tournament has one 1-type and one 2-set type
        assert_eq!(types.iter().filter(|t| t.base.is_empty()).count(), 2);
    }

    #[test]
    fn general_position_in_srho() {
        let mut l = LazyLimit::build(ClassSpec::parse("srho").unwrap(), 80, 3).unwrap();
        let m = l.current();
        let e = m.elems();
        let (u, w) = e
            .iter()
            .flat_map(|&u| e.iter().map(move |&w| (u, w)))
            .find(|&(u, w)| m.closure([u]).len() == 2 && m.closure([w]).len() == 2 && !same_part(m, u, w))
            .unwrap();
        let g = l.new_auto([(u, w)].into()).unwrap();
        let win = l.sample_window(4, 1);
        let types = window_types(l.current(), &win, 2, 2);
        for ty in types.iter().take(6) {
            let v: BTreeSet<Elem> = ty.base.iter().copied().collect();
            let b = realize_in_general_position(&mut l, g, &v, ty).unwrap();
            assert!(ty.realised_by(l.current(), &b));
            let gb = l.apply_tuple(g, &b).unwrap();
            assert!(gb.iter().all(|x| !b.contains(x)));
        }
        let parts = find_moved_parts(&mut l, g, 3, &BTreeSet::new()).unwrap();
        assert_eq!(parts.len(), 3);
        for p in parts {
            assert!(!same_part(l.current(), p.t, p.gt));
        }
    }

    #[test]
    fn free_commutator_witnesses_hold() {
        let spec = ClassSpec::parse("t23").unwrap();
        let mut l = LazyLimit::build(spec.clone(), 80, 0).unwrap();
        let g = moved_auto(&mut l);
        let win = l.sample_window(3, 0);
        let types = window_types(l.current(), &win, 2, 2);
        let pred = Predicate::with_class(SwirKind::MultiHypertournamentDelta, spec).unwrap();
        let mut c = free_swir_commutator(&mut l, &pred, g, types.clone(), 2).unwrap();
        assert_eq!(c.log.len(), 4);
        assert!(c.log.iter().all(|w| w.holds), "{:?}", c.log);
        assert!(c.revalidate(&l).unwrap().iter().all(|&b| b));
        assert!(l.check_auto(c.h));
        let rep = verify_commutator(&mut l, &mut c, &types[..4]).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn identity_g_is_rejected_and_identity_f_fails() {
        let spec = ClassSpec::parse("t2").unwrap();
        let mut l = LazyLimit::build(spec.clone(), 30, 0).unwrap();
        let id = l.identity();
        let pred = Predicate::with_class(SwirKind::RandomTournament, spec).unwrap();
        let types = window_types(l.current(), &l.sample_window(2, 0), 1, 1);
        assert!(free_swir_commutator(&mut l, &pred, id, types.clone(), 1).is_err());
        let rep = moves_maximally_verify(&mut l, id, &pred, &types, &[], MoveMode::InverseLeft).unwrap();
        assert!(!rep.passed);
        assert!(rep.types.iter().all(|t| !t.right.found));
    }

    #[test]
    fn srho_commutator_witnesses_hold() {
        let mut l = LazyLimit::build(ClassSpec::parse("srho").unwrap(), 80, 0).unwrap();
        let m = l.current();
        let e = m.elems();
        let (u, w) = e
            .iter()
            .flat_map(|&u| e.iter().map(move |&w| (u, w)))
            .find(|&(u, w)| m.closure([u]).len() == 2 && m.closure([w]).len() == 2 && !same_part(m, u, w))
            .unwrap();
        let g = l.new_auto([(u, w)].into()).unwrap();
        let types = window_types(l.current(), &l.sample_window(3, 0), 2, 2);
        let mut c = srho_commutator(&mut l, g, types.clone(), 2).unwrap();
        assert_eq!(c.log.len(), 4);
        assert!(c.log.iter().all(|w| w.holds), "{:?}", c.log);
        assert!(c.revalidate(&l).unwrap().iter().all(|&b| b));
        let rep = verify_commutator(&mut l, &mut c, &types[..3]).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn jep_for_tournament_identities_and_t3_swap() {
        let t2 = ClassSpec::parse("t2").unwrap();
        let one = FiniteStructure::on(t2.signature().clone(), [0]);
        let id: BTreeMap<Elem, Elem> = [(0, 0)].into();
        match kr_jep_check(&t2, &(one.clone(), id.clone()), &(one, id), 3).unwrap() {
            JepOutcome::Joint { c, fc, .. } => {
                assert_eq!(c.len(), 2);
                assert!(is_partial_iso(&c, &c, &fc));
            }
            other => panic!("{other:?}"),
        }
        let t3 = ClassSpec::parse("t3").unwrap();
        let ((a, fa), (b, fb)) = tn_dense_conjugacy_witness(3).unwrap();
        let sig = t3.signature().clone();
        let a = a.relabel_signature(sig.clone());
        let b = b.relabel_signature(sig);
        match kr_jep_check(&t3, &(a, fa), &(b, fb), 4).unwrap() {
            JepOutcome::Exhausted { candidates, note, .. } => {
                assert!(candidates > 0);
                assert!(note.unwrap().contains("Alt_3"));
            }
            other => panic!("{other:?}"),
        }
    }
}
