//! Transversals of semigeneric structures and the red-blue constructions that
//! build a generic transversal against a lazy automorphism, stage by stage.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use crate::classes::{ClassKind, ClassSpec};
use crate::error::{FraisseError, Result};
use crate::limit::{AutoId, LazyLimit};
use crate::moves::{realisation_disjoint, realize_in_general_position, ExteriorType};
use crate::partite::{check_semigeneric, directed_four_cycle, parity_ok, partite_parts, perp, EDGE};
use crate::structure::{canonical_code, is_partial_iso, Elem, FiniteStructure};

/// Largest subobject whose red-blue extensions get scheduled.
pub const SUBOBJECT_BOUND: usize = 4;
const PART_TRIES: usize = 8;

/// `c` with two transversals `t` and `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransversalTriple {
    pub c: FiniteStructure,
    pub t: BTreeSet<Elem>,
    pub u: BTreeSet<Elem>,
}

impl TransversalTriple {
    pub fn empty(c: FiniteStructure) -> Self {
        TransversalTriple { c, t: BTreeSet::new(), u: BTreeSet::new() }
    }

    /// Membership in the class of triples: `c` semigeneric, `t` and `u`
    /// disjoint transversals.
    pub fn check(&self) -> std::result::Result<(), String> {
        let parts = check_semigeneric(&self.c).map_err(|v| format!("{v:?}"))?;
        if !self.t.is_disjoint(&self.u) {
            return Err("transversals intersect".into());
        }
        for p in &parts.parts {
            for (name, set) in [("T", &self.t), ("U", &self.u)] {
                let hits = p.iter().filter(|x| set.contains(x)).count();
                if hits != 1 {
                    return Err(format!("{name} meets part {p:?} in {hits} points"));
                }
            }
        }
        if !self.t.iter().chain(&self.u).all(|&x| self.c.contains(x)) {
            return Err("transversal point outside the structure".into());
        }
        Ok(())
    }

    fn colours(&self) -> BTreeMap<Elem, u32> {
        self.c.elems().into_iter().map(|x| (x, u32::from(self.t.contains(&x)) + 2 * u32::from(self.u.contains(&x)))).collect()
    }
}

/// A red-blue extension of the subobject on `base`: one new part `{r, b}`
/// with `r` joining T and `b` joining U.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedBlueProblem {
    pub base: TransversalTriple,
    pub target: TransversalTriple,
    pub r: Elem,
    pub b: Elem,
    pub code: Vec<u64>,
}

impl RedBlueProblem {
    pub fn subobject(&self) -> Vec<Elem> {
        self.base.c.elems()
    }
}

fn problem_code(target: &TransversalTriple, r: Elem, b: Elem) -> Vec<u64> {
    let mut col = target.colours();
    col.insert(r, 4);
    col.insert(b, 5);
    canonical_code(&target.c, &col)
}

/// Subobjects of `t` on at most `bound` points: unions of parts, each
/// keeping its T and U point plus any of its other points.
fn subobjects(t: &TransversalTriple, bound: usize) -> Result<Vec<Vec<Elem>>> {
    let parts = partite_parts(&t.c).map_err(|v| FraisseError::violation(format!("{v:?}")))?;
    let mut options: Vec<Vec<Vec<Elem>>> = Vec::new();
    for p in &parts.parts {
        let core: Vec<Elem> = p.iter().copied().filter(|x| t.t.contains(x) || t.u.contains(x)).collect();
        let extra: Vec<Elem> = p.iter().copied().filter(|x| !core.contains(x)).collect();
        let mut opts = Vec::new();
        for mask in 0u64..(1 << extra.len().min(16)) {
            let mut s = core.clone();
            s.extend(extra.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x));
            if s.len() <= bound {
                s.sort_unstable();
                opts.push(s);
            }
        }
        options.push(opts);
    }
    let mut out = Vec::new();
    fn rec(options: &[Vec<Vec<Elem>>], i: usize, acc: &mut Vec<Elem>, bound: usize, out: &mut Vec<Vec<Elem>>) {
        if i == options.len() {
            let mut s = acc.clone();
            s.sort_unstable();
            out.push(s);
            return;
        }
        rec(options, i + 1, acc, bound, out);
        for o in &options[i] {
            if acc.len() + o.len() <= bound {
                let n = acc.len();
                acc.extend(o);
                rec(options, i + 1, acc, bound, out);
                acc.truncate(n);
            }
        }
    }
    rec(&options, 0, &mut Vec::new(), bound, &mut out);
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    Ok(out)
}

/// Red-blue extensions of the subobjects of `t` with at most `bound` points,
/// one per isomorphism type, skipping codes in `seen` (which is updated).
pub fn red_blue_enumerate_new(t: &TransversalTriple, bound: usize, seen: &mut HashSet<Vec<u64>>) -> Result<Vec<RedBlueProblem>> {
    t.check().map_err(FraisseError::pre)?;
    let mut out = Vec::new();
    for s in subobjects(t, bound)? {
        let base = TransversalTriple {
            c: t.c.induced(s.iter().copied()),
            t: s.iter().copied().filter(|x| t.t.contains(x)).collect(),
            u: s.iter().copied().filter(|x| t.u.contains(x)).collect(),
        };
        let r = t.c.fresh();
        let b = r + 1;
        let parts = partite_parts(&base.c).map_err(|v| FraisseError::violation(format!("{v:?}")))?;
        for mask in 0u64..(1u64 << (2 * s.len())) {
            let mut c = base.c.clone();
            c.add_elem(r);
            c.add_elem(b);
            for (i, &x) in s.iter().enumerate() {
                for (j, y) in [r, b].into_iter().enumerate() {
                    let pair = if mask >> (2 * i + j) & 1 == 1 { [y, x] } else { [x, y] };
                    c.add_tuple(EDGE, &pair)?;
                }
            }
            let ok = parts.parts.iter().all(|p| {
                p.iter().enumerate().all(|(i, &q)| p[i + 1..].iter().all(|&q2| parity_ok(&c, r, b, q, q2)))
            });
            if !ok {
                continue;
            }
            let mut target = TransversalTriple { c, t: base.t.clone(), u: base.u.clone() };
            target.t.insert(r);
            target.u.insert(b);
            let code = problem_code(&target, r, b);
            if seen.insert(code.clone()) {
                out.push(RedBlueProblem { base: base.clone(), target, r, b, code });
            }
        }
    }
    Ok(out)
}

/// All red-blue extensions of subobjects of `t` up to isomorphism.
pub fn red_blue_enumerate(t: &TransversalTriple, bound: usize) -> Result<Vec<RedBlueProblem>> {
    red_blue_enumerate_new(t, bound, &mut HashSet::new())
}

/// A lazy automorphism rotating a fresh directed 4-cycle, which swaps its two
/// parts.
pub fn part_swapping_auto(limit: &mut LazyLimit) -> Result<AutoId> {
    let cyc = directed_four_cycle();
    let map = limit.extend(&[], &cyc, &[0, 1, 2, 3])?;
    let v: Vec<Elem> = (0..4).map(|i| map[&i]).collect();
    limit.new_auto((0..4).map(|i| (v[i], v[(i + 1) % 4])).collect())
}

fn same_part(m: &FiniteStructure, x: Elem, y: Elem) -> bool {
    x == y || perp(m, x, y)
}

/// Least point of `v`'s part passing `ok`, adding points moved by `g` to
/// the part when none qualifies.
fn part_point(limit: &mut LazyLimit, g: AutoId, v: Elem, ok: &mut dyn FnMut(&mut LazyLimit, Elem) -> Result<bool>) -> Result<Elem> {
    let members: Vec<Elem> = limit.current().elems().into_iter().filter(|&x| same_part(limit.current(), x, v)).collect();
    for &x in &members {
        if ok(limit, x)? {
            return Ok(x);
        }
    }
    let mut ext = limit.current().induced([v]);
    let x = ext.fresh().max(v + 1);
    ext.add_elem(x);
    let ty = ExteriorType::new(vec![v], ext.clone(), vec![x])?;
    let mut tried: BTreeSet<Elem> = members.into_iter().collect();
    for _ in 0..PART_TRIES {
        let y = match realisation_disjoint(limit, g, &tried, &ty) {
            Ok(c) => c[0],
            Err(FraisseError::SearchFailed(_)) => limit.extend(&[v], &ext, &[x])?[&x],
            Err(e) => return Err(e),
        };
        if ok(limit, y)? {
            return Ok(y);
        }
        tried.insert(y);
    }
    Err(FraisseError::SearchFailed(format!("no qualifying point in the part of {v}")))
}

fn image(limit: &mut LazyLimit, g: AutoId, set: &BTreeSet<Elem>, inverse: bool) -> Result<BTreeSet<Elem>> {
    set.iter().map(|&x| if inverse { limit.apply_inv(g, x) } else { limit.apply(g, x) }).collect()
}

/// The type over `base` of the new part of `p`, amalgamated with the limit
/// over the subobject.
fn problem_type(limit: &LazyLimit, base: &BTreeSet<Elem>, p: &RedBlueProblem) -> Result<(ExteriorType, Elem, Elem)> {
    let cur = limit.current().induced(base.iter().copied());
    let sub = p.subobject();
    if !sub.iter().all(|x| base.contains(x)) {
        return Err(FraisseError::pre("red-blue problem lies outside the chain"));
    }
    let hi = limit.current().fresh().max(p.target.c.fresh());
    let ren: BTreeMap<Elem, Elem> = sub.iter().map(|&x| (x, x)).chain([(p.r, hi), (p.b, hi + 1)]).collect();
    let target = p.target.c.relabel(&ren)?;
    let spec = limit.spec();
    let ext = spec.amalgam(&p.base.c, &target, &cur)?;
    Ok((ExteriorType::new(base.iter().copied().collect(), ext, vec![hi, hi + 1])?, hi, hi + 1))
}

fn one_point(ty: &ExteriorType, keep: Elem) -> Result<ExteriorType> {
    let ext = ty.ext.induced(ty.base.iter().copied().chain([keep]));
    ExteriorType::new(ty.base.clone(), ext, vec![keep])
}

fn closure_set(limit: &mut LazyLimit, g: AutoId, a: &BTreeSet<Elem>) -> Result<BTreeSet<Elem>> {
    // gA ∪ g⁻¹A ∪ g²A keeps the new part, its image and its preimage off A, gA, g⁻¹A
    let ga = image(limit, g, a, false)?;
    let gia = image(limit, g, a, true)?;
    let gga = image(limit, g, &ga, false)?;
    Ok(ga.into_iter().chain(gia).chain(gga).collect())
}

/// Stage checks; `None` where a check does not apply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageChecks {
    pub membership: bool,
    pub covers_enumeration: bool,
    pub image_conditions: bool,
    pub schedule_complete: bool,
    pub problem_realised: Option<bool>,
}

impl StageChecks {
    pub fn all(&self) -> bool {
        self.membership && self.covers_enumeration && self.image_conditions && self.schedule_complete && self.problem_realised != Some(false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageLog {
    pub stage: usize,
    pub v: Elem,
    pub case: String,
    /// `(chain, problem index, r, b)` for each solved red-blue problem.
    pub solved: Vec<(usize, usize, Elem, Elem)>,
    pub a: Vec<Elem>,
    pub t: Vec<Elem>,
    /// Second transversal of each chain (`U`, and `W` for the double construction).
    pub others: Vec<Vec<Elem>>,
    pub scheduled: Vec<usize>,
    pub checks: StageChecks,
}

#[derive(Clone, Debug)]
struct Chain {
    u: BTreeSet<Elem>,
    schedule: Vec<RedBlueProblem>,
    seen: HashSet<Vec<u64>>,
    solved: Vec<(usize, Elem, Elem)>,
}

impl Chain {
    fn new() -> Result<Self> {
        let mut seen = HashSet::new();
        let empty = TransversalTriple::empty(FiniteStructure::new(crate::partite::arrow_signature()));
        let schedule = red_blue_enumerate_new(&empty, 0, &mut seen)?;
        Ok(Chain { u: BTreeSet::new(), schedule, seen, solved: Vec::new() })
    }

    fn triple(&self, m: &FiniteStructure, a: &BTreeSet<Elem>, t: &BTreeSet<Elem>) -> TransversalTriple {
        TransversalTriple { c: m.induced(a.iter().copied()), t: t.clone(), u: self.u.clone() }
    }

    fn extend_schedule(&mut self, tr: &TransversalTriple) -> Result<()> {
        let more = red_blue_enumerate_new(tr, SUBOBJECT_BOUND, &mut self.seen)?;
        self.schedule.extend(more);
        Ok(())
    }

    fn schedule_complete(&self, tr: &TransversalTriple) -> Result<bool> {
        let all = red_blue_enumerate(tr, SUBOBJECT_BOUND)?;
        let listed = self.schedule.iter().all(|p| {
            let sub = p.subobject();
            sub.iter().all(|x| tr.c.contains(*x))
                && tr.c.induced(sub.iter().copied()) == p.base.c
                && sub.iter().all(|x| tr.t.contains(x) == p.base.t.contains(x) && tr.u.contains(x) == p.base.u.contains(x))
        });
        Ok(listed && all.iter().all(|p| self.seen.contains(&p.code)))
    }

    fn realised(&self, m: &FiniteStructure, a: &BTreeSet<Elem>, t: &BTreeSet<Elem>, idx: usize, r: Elem, b: Elem) -> bool {
        let p = &self.schedule[idx];
        let map: BTreeMap<Elem, Elem> = p.subobject().into_iter().map(|x| (x, x)).chain([(p.r, r), (p.b, b)]).collect();
        a.contains(&r) && a.contains(&b) && t.contains(&r) && self.u.contains(&b) && is_partial_iso(&p.target.c, m, &map)
    }
}

/// Audited run of one of the transversal constructions.
#[derive(Clone, Debug, Serialize)]
pub struct TransversalRun {
    pub mode: String,
    pub stages: Vec<StageLog>,
    pub a: Vec<Elem>,
    pub t: Vec<Elem>,
    pub others: Vec<Vec<Elem>>,
    pub passed: bool,
}

fn require_semigeneric(limit: &mut LazyLimit, g: AutoId) -> Result<()> {
    if limit.spec().kind != ClassKind::Semigeneric {
        return Err(FraisseError::pre("transversal constructions run in the semigeneric limit"));
    }
    let moved = limit.base_map(g).is_some_and(|m| m.iter().any(|(x, y)| x != y));
    if !moved {
        return Err(FraisseError::pre("the automorphism must move a point"));
    }
    Ok(())
}

fn stage_err(stage: usize, e: FraisseError) -> FraisseError {
    match e {
        FraisseError::SearchFailed(m) => FraisseError::SearchFailed(format!("{m} (stage {stage})")),
        other => other,
    }
}

/// Builds `(A_n, T_n, U_n)` for `n ≤ steps` so that `U_n` tracks `gT_n` and
/// each stage solves the next scheduled red-blue problem.
pub fn generic_transversal_vs_image(limit: &mut LazyLimit, g: AutoId, steps: usize) -> Result<TransversalRun> {
    require_semigeneric(limit, g)?;
    let mut a: BTreeSet<Elem> = BTreeSet::new();
    let mut t: BTreeSet<Elem> = BTreeSet::new();
    let mut ch = Chain::new()?;
    let mut stages = Vec::new();
    for n in 1..=steps {
        let log = step2_stage(limit, g, n, &mut a, &mut t, &mut ch).map_err(|e| stage_err(n, e))?;
        stages.push(log);
    }
    let passed = stages.iter().all(|s| s.checks.all());
    Ok(TransversalRun {
        mode: "step2".into(),
        stages,
        a: a.into_iter().collect(),
        t: t.into_iter().collect(),
        others: vec![ch.u.into_iter().collect()],
        passed,
    })
}

fn fixes_part(limit: &mut LazyLimit, g: AutoId, v: Elem) -> Result<bool> {
    let gv = limit.apply(g, v)?;
    Ok(same_part(limit.current(), gv, v))
}

fn step2_stage(limit: &mut LazyLimit, g: AutoId, n: usize, a: &mut BTreeSet<Elem>, t: &mut BTreeSet<Elem>, ch: &mut Chain) -> Result<StageLog> {
    let v = limit.current().elems()[n - 1];
    let case;
    if a.iter().any(|&x| same_part(limit.current(), x, v)) {
        case = "part present".to_string();
        a.insert(v);
    } else if fixes_part(limit, g, v)? {
        case = "part fixed".to_string();
        let w = part_point(limit, g, v, &mut |l, x| Ok(l.apply(g, x)? != x))?;
        let gw = limit.apply(g, w)?;
        a.extend([w, gw, v]);
        t.insert(w);
        ch.u.insert(gw);
    } else {
        let m = limit.current().clone();
        let in_p = |x: &Elem| same_part(&m, *x, v);
        let gi_u: BTreeSet<Elem> = image(limit, g, &ch.u, true)?;
        let g_t: BTreeSet<Elem> = image(limit, g, t, false)?;
        let x = gi_u.iter().copied().find(in_p);
        let y = g_t.iter().copied().find(in_p);
        let (r, b);
        match (x, y) {
            (Some(x), Some(y)) => {
                r = x;
                b = y;
            }
            (Some(x), None) => {
                r = x;
                let g_tr: BTreeSet<Elem> = g_t.iter().copied().chain([limit.apply(g, r)?]).collect();
                b = part_point(limit, g, v, &mut |l, z| Ok(z != r && !g_tr.contains(&l.apply_inv(g, z)?)))?;
            }
            (None, Some(y)) => {
                b = y;
                let gi_ub: BTreeSet<Elem> = gi_u.iter().copied().chain([limit.apply_inv(g, b)?]).collect();
                r = part_point(limit, g, v, &mut |l, z| Ok(z != b && !gi_ub.contains(&l.apply(g, z)?)))?;
            }
            (None, None) => {
                r = part_point(limit, g, v, &mut |l, z| Ok(!gi_u.contains(&l.apply(g, z)?)))?;
                let g_tr: BTreeSet<Elem> = g_t.iter().copied().chain([limit.apply(g, r)?]).collect();
                b = part_point(limit, g, v, &mut |l, z| Ok(z != r && !g_tr.contains(&l.apply_inv(g, z)?)))?;
            }
        }
        case = format!("part moved ({}, {})", if x.is_some() { "r from g⁻¹U" } else { "r chosen" }, if y.is_some() { "b from gT" } else { "b chosen" });
        a.extend([r, b, v]);
        t.insert(r);
        ch.u.insert(b);
    }
    // red-blue problem n−1 over Ã
    let idx = n - 1;
    let prob = ch.schedule[idx].clone();
    let (ty, hr, hb) = problem_type(limit, a, &prob)?;
    let avoid = closure_set(limit, g, a)?;
    let rt = realize_in_general_position(limit, g, &avoid, &one_point(&ty, hr)?)?[0];
    let gr = limit.apply(g, rt)?;
    let z = limit.current().fresh().max(hb + 1);
    let ren: BTreeMap<Elem, Elem> = ty.ext.elems().into_iter().map(|x| (x, if x == hr { rt } else if x == hb { z } else { x })).collect();
    let bt_ext = ty.ext.relabel(&ren)?;
    let mut bt = None;
    let base_b: Vec<Elem> = a.iter().copied().chain([rt]).collect();
    for _ in 0..PART_TRIES {
        let y = limit.extend(&base_b, &bt_ext, &[z])?[&z];
        if limit.apply_inv(g, y)? != gr {
            bt = Some(y);
            break;
        }
    }
    let bt = bt.ok_or_else(|| FraisseError::SearchFailed("no blue point off the red image".into()))?;
    a.extend([rt, bt]);
    t.insert(rt);
    ch.u.insert(bt);
    ch.solved.push((idx, rt, bt));
    let m = limit.current().clone();
    let tr = ch.triple(&m, a, t);
    let membership = tr.check().is_ok();
    let covers = (0..n).all(|k| a.contains(&m.elems()[k]));
    let g_t = image(limit, g, t, false)?;
    let gi_u = image(limit, g, &ch.u, true)?;
    let image_conditions =
        g_t.intersection(a).all(|x| ch.u.contains(x)) && gi_u.intersection(a).all(|x| t.contains(x)) && g_t.is_disjoint(&gi_u);
    let realised = ch.realised(&m, a, t, idx, rt, bt);
    if membership {
        ch.extend_schedule(&tr)?;
    }
    let complete = membership && ch.schedule_complete(&tr)?;
    Ok(StageLog {
        stage: n,
        v,
        case,
        solved: vec![(0, idx, rt, bt)],
        a: a.iter().copied().collect(),
        t: t.iter().copied().collect(),
        others: vec![ch.u.iter().copied().collect()],
        scheduled: vec![ch.schedule.len()],
        checks: StageChecks {
            membership,
            covers_enumeration: covers,
            image_conditions,
            schedule_complete: complete,
            problem_realised: Some(realised),
        },
    })
}

/// Builds `(A_n, T_n, U_n)` and `(A_n, T_n, W_n)` for `n ≤ steps` so that `W_n`
/// tracks `gU_n`, solving one red-blue problem of each chain per stage.
pub fn double_transversal(limit: &mut LazyLimit, g: AutoId, steps: usize) -> Result<TransversalRun> {
    require_semigeneric(limit, g)?;
    let mut a: BTreeSet<Elem> = BTreeSet::new();
    let mut t: BTreeSet<Elem> = BTreeSet::new();
    let mut cu = Chain::new()?;
    let mut cw = Chain::new()?;
    let mut stages = Vec::new();
    for n in 1..=steps {
        let log = step3_stage(limit, g, n, &mut a, &mut t, &mut cu, &mut cw).map_err(|e| stage_err(n, e))?;
        stages.push(log);
    }
    let passed = stages.iter().all(|s| s.checks.all());
    Ok(TransversalRun {
        mode: "step3".into(),
        stages,
        a: a.into_iter().collect(),
        t: t.into_iter().collect(),
        others: vec![cu.u.into_iter().collect(), cw.u.into_iter().collect()],
        passed,
    })
}

/// Realises problem `idx` of `ch` as `(r, b)` in general position over `a`.
fn solve_general(limit: &mut LazyLimit, g: AutoId, a: &BTreeSet<Elem>, ch: &Chain, idx: usize) -> Result<(Elem, Elem)> {
    let prob = ch.schedule[idx].clone();
    let (ty, _, _) = problem_type(limit, a, &prob)?;
    let avoid = closure_set(limit, g, a)?;
    let got = realize_in_general_position(limit, g, &avoid, &ty)?;
    Ok((got[0], got[1]))
}

#[allow(clippy::too_many_arguments)]
fn step3_stage(
    limit: &mut LazyLimit,
    g: AutoId,
    n: usize,
    a: &mut BTreeSet<Elem>,
    t: &mut BTreeSet<Elem>,
    cu: &mut Chain,
    cw: &mut Chain,
) -> Result<StageLog> {
    let v = limit.current().elems()[n - 1];
    let case;
    if a.iter().any(|&x| same_part(limit.current(), x, v)) {
        case = "part present".to_string();
        a.insert(v);
    } else {
        let (b, b2);
        let gv = limit.apply(g, v)?;
        if same_part(limit.current(), gv, v) {
            case = "part fixed".to_string();
            b = v;
            b2 = limit.apply(g, b)?;
        } else {
            let m = limit.current().clone();
            let in_p = |x: &Elem| same_part(&m, *x, v);
            let gi_w = image(limit, g, &cw.u, true)?;
            let g_u = image(limit, g, &cu.u, false)?;
            let x = gi_w.iter().copied().find(in_p);
            let y = g_u.iter().copied().find(in_p);
            b = x.unwrap_or(v);
            b2 = y.unwrap_or(v);
            case = format!("part moved ({}, {})", if x.is_some() { "b from g⁻¹W" } else { "b chosen" }, if y.is_some() { "b′ from gU" } else { "b′ chosen" });
        }
        let r = part_point(limit, g, v, &mut |_, z| Ok(z != b && z != b2))?;
        a.extend([v, r, b, b2]);
        t.insert(r);
        cu.u.insert(b);
        cw.u.insert(b2);
    }
    let idx = n - 1;
    // first chain: (r̃, b̃) in general position, then b̃′ in the same part
    let (rt, bt) = solve_general(limit, g, a, cu, idx)?;
    let gbt = limit.apply(g, bt)?;
    let bt2 = part_point(limit, g, rt, &mut |l, z| Ok(z != rt && l.apply_inv(g, z)? != gbt))?;
    a.extend([rt, bt, bt2]);
    t.insert(rt);
    cu.u.insert(bt);
    cw.u.insert(bt2);
    cu.solved.push((idx, rt, bt));
    // second chain over Â
    let (rh, bh2) = solve_general(limit, g, a, cw, idx)?;
    let gibh2 = limit.apply_inv(g, bh2)?;
    let bh = part_point(limit, g, rh, &mut |l, z| Ok(z != rh && l.apply(g, z)? != gibh2))?;
    a.extend([rh, bh, bh2]);
    t.insert(rh);
    cu.u.insert(bh);
    cw.u.insert(bh2);
    cw.solved.push((idx, rh, bh2));

    let m = limit.current().clone();
    let tu = cu.triple(&m, a, t);
    let tw = cw.triple(&m, a, t);
    let membership = tu.check().is_ok() && tw.check().is_ok();
    let covers = (0..n).all(|k| a.contains(&m.elems()[k]));
    let g_u = image(limit, g, &cu.u, false)?;
    let gi_w = image(limit, g, &cw.u, true)?;
    let image_conditions = g_u.intersection(a).all(|x| cw.u.contains(x)) && gi_w.intersection(a).all(|x| cu.u.contains(x));
    let realised = cu.realised(&m, a, t, idx, rt, bt) && cw.realised(&m, a, t, idx, rh, bh2);
    if membership {
        cu.extend_schedule(&tu)?;
        cw.extend_schedule(&tw)?;
    }
    let complete = membership && cu.schedule_complete(&tu)? && cw.schedule_complete(&tw)?;
    Ok(StageLog {
        stage: n,
        v,
        case,
        solved: vec![(0, idx, rt, bt), (1, idx, rh, bh2)],
        a: a.iter().copied().collect(),
        t: t.iter().copied().collect(),
        others: vec![cu.u.iter().copied().collect(), cw.u.iter().copied().collect()],
        scheduled: vec![cu.schedule.len(), cw.schedule.len()],
        checks: StageChecks {
            membership,
            covers_enumeration: covers,
            image_conditions,
            schedule_complete: complete,
            problem_realised: Some(realised),
        },
    })
}

/// The limit the constructions run in.
pub fn semigeneric_limit(steps: usize, seed: u64) -> Result<LazyLimit> {
    LazyLimit::build(ClassSpec::new(ClassKind::Semigeneric)?, steps, seed)
}
