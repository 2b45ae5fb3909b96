//! `fraisse`: command-line access to the structure, class, limit and audit
//! library. Every run prints one JSON report; the exit code is 0 on success,
//! 1 on an audited failure, 2 on usage or input errors and 3 when a search
//! budget ran out.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fraisse_core::circle::{circle_realizable, eval_relation, no_dense_conjugacy_witness, LocalOrderConfig, Realizability};
use fraisse_core::classes::{stationarity_obstruction_search, ClassKind, ClassSpec};
use fraisse_core::error::FraisseError;
use fraisse_core::hyper::tn_dense_conjugacy_witness;
use fraisse_core::independence::{audit_axioms, audit_freeness, audit_symmetry, revalidate, Predicate, SwirKind, WindowSpec};
use fraisse_core::json::{structure_from_str, CirclePointJson, CircleWitnessJson, StructureJson};
use fraisse_core::limit::{verify_extension_property, AutoId, Budget, LazyLimit};
use fraisse_core::moves::{free_swir_commutator, kr_jep_check, moving_auto, srho_commutator, verify_commutator, window_types, JepOutcome};
use fraisse_core::partite::directed_four_cycle;
use fraisse_core::structure::{Elem, FiniteStructure};
use fraisse_core::transversal::{double_transversal, generic_transversal_vs_image, part_swapping_auto};
use fraisse_core::zoo::{p3_attach_apex, p3_equivariance_audit, p3_twist, p3_untwist};

#[derive(Parser, Debug)]
#[command(name = "fraisse", version, about = "Amalgamation classes, lazy limits and independence audits")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Leave the timing field out of the report.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check membership of a structure in a class.
    CheckClass {
        #[arg(long)]
        class: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Strong amalgam of B and C over A.
    Amalgamate {
        #[arg(long)]
        class: String,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        c: PathBuf,
    },
    /// Audit an independence relation on a window of a limit.
    SwirAudit {
        #[arg(long)]
        swir: String,
        /// Class of the limit; defaults to the relation's own class.
        #[arg(long)]
        class: Option<String>,
        #[arg(long, default_value_t = 200)]
        stage: usize,
        /// `a,b,c` or `a,b,c,universe`.
        #[arg(long, default_value = "2,2,2")]
        window: String,
        /// Instances each axiom needs before it counts as passed.
        #[arg(long, default_value_t = 50)]
        floor: usize,
        #[arg(long, value_enum, default_value_t = Property::Axioms)]
        property: Property,
        /// Audit the relation with one clause flipped.
        #[arg(long)]
        mutate: bool,
    },
    /// Build or verify a lazy limit.
    Limit {
        #[command(subcommand)]
        action: LimitAction,
    },
    /// Lazy automorphisms of a limit.
    Auto {
        #[command(subcommand)]
        action: AutoAction,
    },
    /// Transversal constructions in the semigeneric limit.
    Transversal {
        #[arg(long, value_enum)]
        mode: TransversalMode,
        /// Extension steps used to build the limit first.
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        stages: usize,
    },
    /// Local orders on the circle.
    Circle {
        #[command(subcommand)]
        action: CircleAction,
    },
    /// Witness generation.
    Witness {
        #[command(subcommand)]
        action: WitnessAction,
    },
    /// Build a commutator moving almost maximally and verify it on window types.
    MaximalMoves {
        /// `t23` (or another free class, with `--swir`) or `srho`.
        #[arg(long, default_value = "t23")]
        class: String,
        #[arg(long)]
        swir: Option<String>,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        stages: usize,
        #[arg(long, default_value_t = 2)]
        max_base: usize,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
    },
    /// Twist, untwist and apex attachment for 3-coloured posets.
    P3 {
        #[command(subcommand)]
        action: P3Action,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Property {
    Axioms,
    Freeness,
    Symmetry,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransversalMode {
    Step2,
    Step3,
}

#[derive(Subcommand, Debug)]
enum LimitAction {
    Build {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Include the built structure in the report.
        #[arg(long)]
        structure: bool,
    },
    Verify {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        window: usize,
    },
}

#[derive(clap::Args, Debug)]
struct AutoArgs {
    #[arg(long)]
    class: String,
    #[arg(long, default_value_t = 60)]
    steps: usize,
    /// Seed map `u:v,u:v`; a moving pair is chosen when absent.
    #[arg(long)]
    map: Option<String>,
    /// Points to map.
    #[arg(long, value_delimiter = ',')]
    points: Vec<Elem>,
}

#[derive(Subcommand, Debug)]
enum AutoAction {
    /// Extend a seed map to the points and check the result.
    Extend(AutoArgs),
    /// Images (or preimages) of the points.
    Apply {
        #[command(flatten)]
        args: AutoArgs,
        #[arg(long)]
        inverse: bool,
    },
    /// Images of the points under `[g, h]`.
    Commutator {
        #[command(flatten)]
        args: AutoArgs,
        /// Seed map of `h`.
        #[arg(long)]
        with: String,
    },
}

#[derive(Subcommand, Debug)]
enum CircleAction {
    /// Decide whether a structure is realised by points of the circle.
    Realize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand, Debug)]
enum WitnessAction {
    /// Pairs of partial automorphisms with no joint embedding: `t3`, `t4`, ... or `s2`, `s3`, ...
    NoDenseConjugacy {
        #[arg(long)]
        structure: String,
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
    /// Data with no invariant stationary completion.
    Stationarity {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 4)]
        max_points: usize,
    },
}

#[derive(Subcommand, Debug)]
enum P3Action {
    Twist {
        #[arg(long)]
        input: PathBuf,
    },
    Untwist {
        #[arg(long)]
        input: PathBuf,
    },
    Apex {
        #[arg(long)]
        input: PathBuf,
    },
    /// Exhaustive equivariance audit on small posets.
    Audit {
        #[arg(long, default_value_t = 4)]
        max_points: usize,
    },
}

/// What a command found: `passed` decides the exit code.
struct Outcome {
    passed: bool,
    result: Value,
}

impl Outcome {
    fn new(passed: bool, result: Value) -> Self {
        Outcome { passed, result }
    }
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Lib(FraisseError),
}

impl From<FraisseError> for CliError {
    fn from(e: FraisseError) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Lib(e) if e.is_budget() => 3,
            CliError::Lib(FraisseError::Violation(_) | FraisseError::SearchFailed(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_structure(path: &Path) -> CliResult<FiniteStructure> {
    Ok(structure_from_str(&read(path)?)?)
}

fn class(name: &str) -> CliResult<ClassSpec> {
    Ok(ClassSpec::parse(name)?)
}

fn parse_map(s: &str) -> CliResult<BTreeMap<Elem, Elem>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p.split_once(':').ok_or_else(|| FraisseError::Parse(format!("bad map entry `{p}`")))?;
            let num = |t: &str| t.trim().parse::<Elem>().map_err(|_| FraisseError::Parse(format!("bad element `{t}`")));
            Ok((num(x)?, num(y)?))
        })
        .collect()
}

fn structure_json(s: &FiniteStructure) -> Value {
    serde_json::to_value(StructureJson::of(s)).expect("structures serialise")
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialise")
}

fn map_json(m: &BTreeMap<Elem, Elem>) -> Value {
    json!(m.iter().map(|(x, y)| (x.to_string(), *y)).collect::<BTreeMap<_, _>>())
}

fn built_limit(spec: ClassSpec, steps: usize, seed: u64, budget: Budget) -> CliResult<LazyLimit> {
    let mut l = LazyLimit::new(spec, seed).with_budget(budget);
    l.run(steps)?;
    Ok(l)
}

fn check_class(name: &str, input: &Path) -> CliResult<Outcome> {
    let spec = class(name)?;
    let s = read_structure(input)?;
    Ok(match spec.check(&s) {
        Ok(()) => Outcome::new(true, json!({"class": spec.name(), "member": true, "points": s.len()})),
        Err(reason) => Outcome::new(false, json!({"class": spec.name(), "member": false, "certificate": reason})),
    })
}

fn amalgamate(name: &str, a: &Path, b: &Path, c: &Path) -> CliResult<Outcome> {
    let spec = class(name)?;
    let (a, b, c) = (read_structure(a)?, read_structure(b)?, read_structure(c)?);
    for (label, s) in [("A", &a), ("B", &b), ("C", &c)] {
        if let Err(reason) = spec.check(s) {
            return Err(FraisseError::pre(format!("{label} is not in {}: {reason}", spec.name())).into());
        }
    }
    let d = spec.amalgam(&a, &b, &c)?;
    let member = spec.check(&d);
    let strong = d.len() + a.len() == b.len() + c.len();
    let embeds = d.agrees_on(&b) && d.agrees_on(&c);
    Ok(Outcome::new(
        member.is_ok() && strong && embeds,
        json!({
            "class": spec.name(),
            "member": member.is_ok(),
            "reason": member.err(),
            "strong": strong,
            "embeds": embeds,
            "amalgam": structure_json(&d),
        }),
    ))
}

#[allow(clippy::too_many_arguments)]
fn swir_audit(
    swir: &str,
    class_name: Option<&str>,
    stage: usize,
    window: &str,
    floor: usize,
    property: Property,
    mutate: bool,
    seed: u64,
    budget: Budget,
) -> CliResult<Outcome> {
    let kind = SwirKind::parse(swir)?;
    let spec = match class_name {
        Some(n) => class(n)?,
        None => kind.default_class(),
    };
    let mut pred = Predicate::with_class(kind, spec.clone())?;
    if mutate {
        pred = pred.mutate();
    }
    let window = WindowSpec::parse(window)?;
    let mut l = built_limit(spec, stage, seed, budget)?;
    let (passed, mut report, certs) = match property {
        Property::Axioms => {
            let rep = audit_axioms(&pred, &mut l, window, floor, seed)?;
            let certs: Vec<_> = rep.failures().cloned().collect();
            (rep.passed(), to_json(&rep), certs)
        }
        Property::Freeness | Property::Symmetry => {
            let rep = match property {
                Property::Freeness => audit_freeness(&pred, &l, window, seed)?,
                _ => audit_symmetry(&pred, &l, window, seed)?,
            };
            (rep.holds, to_json(&rep), rep.examples.clone())
        }
    };
    // existence certificates name a missing extension and have no standalone check
    let revalidated: Vec<Option<bool>> = certs.iter().map(|c| revalidate(&pred, l.current(), c).ok()).collect();
    report["revalidated"] = json!(revalidated);
    report["predicate"] = json!(pred.name());
    Ok(Outcome::new(passed, report))
}

fn limit_cmd(action: &LimitAction, seed: u64, budget: Budget) -> CliResult<Outcome> {
    match action {
        LimitAction::Build { class: c, steps, structure } => {
            let spec = class(c)?;
            let l = built_limit(spec.clone(), *steps, seed, budget)?;
            let member = spec.check(l.current());
            let mut out = json!({
                "class": spec.name(),
                "steps": steps,
                "points": l.current().len(),
                "scheduled": l.scheduled(),
                "pending": l.pending(),
                "member": member.is_ok(),
            });
            if *structure {
                out["structure"] = structure_json(l.current());
            }
            Ok(Outcome::new(member.is_ok(), out))
        }
        LimitAction::Verify { class: c, steps, k, window } => {
            let mut l = built_limit(class(c)?, *steps, seed, budget)?;
            let rep = verify_extension_property(&mut l, *k, *window, budget)?;
            Ok(Outcome::new(rep.passed(), to_json(&rep)))
        }
    }
}

fn seed_auto(l: &mut LazyLimit, map: Option<&str>) -> CliResult<AutoId> {
    match map {
        Some(m) => Ok(l.new_auto(parse_map(m)?)?),
        None => Ok(moving_auto(l)?),
    }
}

fn auto_cmd(action: &AutoAction, seed: u64, budget: Budget) -> CliResult<Outcome> {
    let args = match action {
        AutoAction::Extend(a) | AutoAction::Apply { args: a, .. } | AutoAction::Commutator { args: a, .. } => a,
    };
    let mut l = built_limit(class(&args.class)?, args.steps, seed, budget)?;
    let g = seed_auto(&mut l, args.map.as_deref())?;
    let (f, inverse) = match action {
        AutoAction::Extend(_) => (g, false),
        AutoAction::Apply { inverse, .. } => (g, *inverse),
        AutoAction::Commutator { with, .. } => {
            let h = l.new_auto(parse_map(with)?)?;
            (l.commutator(g, h), false)
        }
    };
    let mut images = BTreeMap::new();
    for &p in &args.points {
        if !l.current().contains(p) {
            return Err(FraisseError::UnknownElement(p).into());
        }
        let y = if inverse { l.apply_inv(f, p)? } else { l.apply(f, p)? };
        images.insert(p, y);
    }
    let consistent = l.check_auto(g) && l.check_auto(f);
    Ok(Outcome::new(
        consistent,
        json!({
            "class": l.spec().name(),
            "base_map": l.base_map(g).map(map_json),
            "inverse": inverse,
            "images": map_json(&images),
            "consistent": consistent,
            "points": l.current().len(),
        }),
    ))
}

fn transversal_cmd(mode: TransversalMode, steps: usize, stages: usize, seed: u64, budget: Budget) -> CliResult<Outcome> {
    let mut l = built_limit(ClassSpec::new(ClassKind::Semigeneric)?, steps, seed, budget)?;
    let g = part_swapping_auto(&mut l)?;
    let run = match mode {
        TransversalMode::Step2 => generic_transversal_vs_image(&mut l, g, stages)?,
        TransversalMode::Step3 => double_transversal(&mut l, g, stages)?,
    };
    let consistent = l.check_auto(g);
    let mut out = to_json(&run);
    out["automorphism_consistent"] = json!(consistent);
    Ok(Outcome::new(run.passed && consistent, out))
}

fn circle_cmd(action: &CircleAction) -> CliResult<Outcome> {
    let CircleAction::Realize { input, n } = action;
    let s = read_structure(input)?;
    Ok(match circle_realizable(&s, *n)? {
        Realizability::Realized(points) => {
            let ids: Vec<Elem> = points.keys().copied().collect();
            let cfg = LocalOrderConfig::new(*n, points.values().cloned().collect())?;
            // the configuration numbers its points 0.., so compare after relabelling
            let back: BTreeMap<Elem, Elem> = ids.iter().enumerate().map(|(i, &x)| (i as Elem, x)).collect();
            let rechecked = eval_relation(&cfg).relabel(&back)? == s;
            let pts: BTreeMap<String, CirclePointJson> = points.iter().map(|(k, p)| (k.to_string(), CirclePointJson::of(p))).collect();
            Outcome::new(rechecked, json!({"realizable": true, "points": pts, "rechecked": rechecked}))
        }
        Realizability::Unsat(branches) => {
            let refutations: Vec<Value> = branches
                .iter()
                .map(|b| {
                    json!({
                        "order": b.order,
                        "cycle": b.cycle.iter().map(|&(u, v, c, strict)| json!({"u": u, "v": v, "c": c, "strict": strict})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Outcome::new(false, json!({"realizable": false, "refutations": refutations}))
        }
    })
}

fn witness_cmd(action: &WitnessAction) -> CliResult<Outcome> {
    match action {
        WitnessAction::NoDenseConjugacy { structure, bound } => {
            let name = structure.trim().to_ascii_lowercase();
            let num = |s: &str| s.parse::<usize>().map_err(|_| CliError::Lib(FraisseError::Parse(format!("unknown structure `{structure}`"))));
            if let Some(n) = name.strip_prefix('s') {
                let n = num(n)?;
                let w = no_dense_conjugacy_witness(n as u32)?;
                let cycle_ok = matches!(circle_realizable(&eval_relation(&w.a), w.n)?, Realizability::Realized(_));
                let unsat = w
                    .obstructions
                    .iter()
                    .map(|o| Ok(matches!(circle_realizable(o, w.n)?, Realizability::Unsat(_))))
                    .collect::<Result<Vec<bool>, FraisseError>>()?;
                let ok = cycle_ok && unsat.iter().all(|&b| b);
                Ok(Outcome::new(
                    ok,
                    json!({"witness": CircleWitnessJson::of(&w), "cycle_realizable": cycle_ok, "obstructions_unsat": unsat}),
                ))
            } else if let Some(n) = name.strip_prefix('t') {
                let spec = class(&name)?;
                let ((a, fa), (b, fb)) = tn_dense_conjugacy_witness(num(n)?)?;
                let sig = spec.signature().clone();
                let (a, b) = (a.relabel_signature(sig.clone()), b.relabel_signature(sig));
                let outcome = kr_jep_check(&spec, &(a.clone(), fa.clone()), &(b.clone(), fb.clone()), *bound)?;
                let pair = json!({"a": structure_json(&a), "f_a": map_json(&fa), "b": structure_json(&b), "f_b": map_json(&fb)});
                Ok(match outcome {
                    JepOutcome::Exhausted { bound, candidates, note } => Outcome::new(
                        true,
                        json!({"pair": pair, "exhausted": {"bound": bound, "candidates": candidates, "note": note}}),
                    ),
                    JepOutcome::Joint { c, fc, ea, eb } => Outcome::new(
                        false,
                        json!({"pair": pair, "joint": {"c": structure_json(&c), "f_c": map_json(&fc), "e_a": map_json(&ea), "e_b": map_json(&eb)}}),
                    ),
                })
            } else {
                Err(FraisseError::Parse(format!("unknown structure `{structure}`")).into())
            }
        }
        WitnessAction::Stationarity { class: c, max_points } => stationarity(&class(c)?, *max_points),
    }
}

/// First obstruction over members of at most `max_points` points, with the
/// base one or two points and the rest on the right; the semigeneric
/// 4-cycle is tried first.
fn stationarity(spec: &ClassSpec, max_points: usize) -> CliResult<Outcome> {
    let mut searched = 0usize;
    let mut candidates: Vec<FiniteStructure> = Vec::new();
    if matches!(spec.kind, ClassKind::Semigeneric) && max_points >= 4 {
        candidates.push(directed_four_cycle());
    }
    for n in 2..=max_points {
        candidates.extend(spec.members_of_size(n));
    }
    for m in &candidates {
        let elems = m.elems();
        for mask in 1u32..(1 << elems.len()) {
            let base: BTreeSet<Elem> = elems.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
            if base.len() > 2 || base.len() == elems.len() || m.closure(base.iter().copied()) != base {
                continue;
            }
            let right: BTreeSet<Elem> = elems.iter().copied().filter(|x| !base.contains(x)).collect();
            for (left, x) in spec.one_point_extensions(&m.induced(base.iter().copied())) {
                searched += 1;
                if let Some(ob) = stationarity_obstruction_search(spec, m, &base, &left, x, &right)? {
                    return Ok(Outcome::new(
                        true,
                        json!({
                            "class": spec.name(),
                            "searched": searched,
                            "structure": structure_json(m),
                            "base": base,
                            "right": right,
                            "left": structure_json(&left),
                            "point": ob.point,
                            "candidates": ob.candidates.iter().map(structure_json).collect::<Vec<_>>(),
                            "symmetries": ob.symmetries.iter().map(map_json).collect::<Vec<_>>(),
                            "moves": ob.moves,
                        }),
                    ));
                }
            }
        }
    }
    Ok(Outcome::new(false, json!({"class": spec.name(), "searched": searched, "obstruction": null})))
}

#[allow(clippy::too_many_arguments)]
fn maximal_moves(
    class_name: &str,
    swir: Option<&str>,
    steps: usize,
    window: usize,
    stages: usize,
    max_base: usize,
    max_len: usize,
    seed: u64,
    budget: Budget,
) -> CliResult<Outcome> {
    let spec = class(class_name)?;
    let mut l = built_limit(spec.clone(), steps, seed, budget)?;
    let g = moving_auto(&mut l)?;
    let win = l.sample_window(window, seed);
    let types = window_types(l.current(), &win, max_base, max_len);
    let mut c = if spec.kind == ClassKind::Srho {
        srho_commutator(&mut l, g, types.clone(), stages)?
    } else {
        let kind = match swir {
            Some(s) => SwirKind::parse(s)?,
            None => SwirKind::MultiHypertournamentDelta,
        };
        free_swir_commutator(&mut l, &Predicate::with_class(kind, spec.clone())?, g, types.clone(), stages)?
    };
    let rep = verify_commutator(&mut l, &mut c, &types)?;
    // checked after verification so that stages it added are covered too
    let log_ok = c.revalidate(&l)?;
    let logs_valid = log_ok.iter().all(|&b| b);
    let passed = logs_valid && rep.passed && l.check_auto(c.h);
    Ok(Outcome::new(
        passed,
        json!({
            "class": spec.name(),
            "window": win,
            "types": types.len(),
            "stages": stages,
            "log": to_json(&c.log),
            "log_revalidated": log_ok,
            "verification": to_json(&rep),
            "points": l.current().len(),
        }),
    ))
}

fn p3_cmd(action: &P3Action) -> CliResult<Outcome> {
    Ok(match action {
        P3Action::Twist { input } => Outcome::new(true, json!({"twist": structure_json(&p3_twist(&read_structure(input)?)?)})),
        P3Action::Untwist { input } => Outcome::new(true, json!({"untwist": structure_json(&p3_untwist(&read_structure(input)?)?)})),
        P3Action::Apex { input } => {
            let (g, v) = p3_attach_apex(&p3_twist(&read_structure(input)?)?)?;
            Outcome::new(true, json!({"graph": structure_json(&g), "apex": v}))
        }
        P3Action::Audit { max_points } => {
            let a = p3_equivariance_audit(*max_points)?;
            Outcome::new(a.passed(), to_json(&a))
        }
    })
}

fn dispatch(cli: &Cli, budget: Budget) -> CliResult<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::CheckClass { class, input } => check_class(class, input),
        Command::Amalgamate { class, a, b, c } => amalgamate(class, a, b, c),
        Command::SwirAudit { swir, class, stage, window, floor, property, mutate } => {
            swir_audit(swir, class.as_deref(), *stage, window, *floor, *property, *mutate, seed, budget)
        }
        Command::Limit { action } => limit_cmd(action, seed, budget),
        Command::Auto { action } => auto_cmd(action, seed, budget),
        Command::Transversal { mode, steps, stages } => transversal_cmd(*mode, *steps, *stages, seed, budget),
        Command::Circle { action } => circle_cmd(action),
        Command::Witness { action } => witness_cmd(action),
        Command::MaximalMoves { class, swir, steps, window, stages, max_base, max_len } => {
            maximal_moves(class, swir.as_deref(), *steps, *window, *stages, *max_base, *max_len, seed, budget)
        }
        Command::P3 { action } => p3_cmd(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let budget = Budget::from_env();
    let mut report = json!({
        "command": args,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
    });
    let code = match budget.map_err(CliError::from).and_then(|b| {
        report["budget"] = to_json(&b);
        dispatch(&cli, b)
    }) {
        Ok(out) => {
            report["passed"] = json!(out.passed);
            report["result"] = out.result;
            if out.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            report["passed"] = json!(false);
            report["error"] = json!(e.message());
            eprintln!("fraisse: {}", e.message());
            e.exit_code()
        }
    };
    if !cli.no_timing {
        report["timing_ms"] = json!(started.elapsed().as_millis() as u64);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serialises");
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("fraisse: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    ExitCode::from(code)
}
