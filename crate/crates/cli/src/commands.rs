//! One function per subcommand. Each returns the exit code on success.

use std::path::Path;

use graham_core::anticonc::{
    bound_cor13, bound_cor42, bound_lemma41, bound_thm12, check_lemma43_inequality,
    empirical_constant, mc_chain_probability, mc_max_point_probability, mc_slice_histogram,
    BoundConstants,
};
use graham_core::fourier::FourierLab;
use graham_core::oracles::{chain_probability_exact, max_point_probability, slice_distribution};
use graham_core::repair::{CandidateRule, Fallback};
use graham_core::rng::stream;
use graham_core::sampling::{random_nonzero_set, shuffle};
use graham_core::{construct_valid_ordering, Error, OrderingState, PrimeModulus, RepairConfig, Residue};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::cli::*;
use crate::error::{CliError, CliResult};
use crate::io::{
    json_biguint, json_bytes, json_rational, json_u64, to_json, write_atomic, OutTarget, SetFile,
};
use crate::record::Recorder;

/// Stream index reserved for drawing random sets, so that it never
/// coincides with the per-chunk or per-attempt streams.
pub const SET_STREAM: u64 = u64::MAX;

pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Order(a) => order(a),
        Command::Verify(a) => verify(a),
        Command::Maxprob(a) => maxprob(a),
        Command::Chain(a) => chain(a),
        Command::Fourier(a) => fourier(a),
        Command::Sweep(a) => sweep(a),
        Command::Lemmas(a) => lemmas(a),
        Command::Events(a) => events(a),
    }
}

/// The given seed, or a fresh one that is announced on stderr and recorded.
fn resolve_seed(seed: Option<u64>, rec: &mut Recorder) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    });
    rec.seed(seed);
    seed
}

fn check_prime_flag(flag: Option<u64>, file: &SetFile) -> CliResult<()> {
    match flag {
        Some(p) if p != file.modulus.get() => Err(CliError::Usage(format!(
            "--prime {p} does not match p = {} in the input file",
            file.modulus
        ))),
        _ => Ok(()),
    }
}

fn load_file(path: &Path, rec: &mut Recorder, ordering: bool, allow_zero: bool) -> CliResult<SetFile> {
    let bytes = crate::io::read_file(path)?;
    rec.input(path, &bytes);
    rec.param(if ordering { "ordering_file" } else { "set_file" }, path.display().to_string());
    let keys: &[&str] = if ordering { &["ordering", "elements"] } else { &["elements"] };
    crate::io::parse_set_bytes(path, &bytes, keys, allow_zero)
}

fn random_set(prime: Option<u64>, size: usize, seed: u64, rec: &mut Recorder) -> CliResult<SetFile> {
    let p = prime.ok_or_else(|| CliError::Usage("--random-size requires --prime".into()))?;
    let modulus = PrimeModulus::new(p)?;
    rec.param("prime", p);
    rec.param("random_size", size);
    let elements = random_nonzero_set(modulus, size, &mut stream(seed, SET_STREAM))?;
    Ok(SetFile { modulus, elements })
}

/// Loads or draws the set. The seed is resolved only when a random set
/// needs it, or when `needs_seed` says the command itself is randomized.
fn load_set(
    args: &SetArgs,
    seed: Option<u64>,
    needs_seed: bool,
    rec: &mut Recorder,
) -> CliResult<(SetFile, Option<u64>)> {
    rec.param("allow_zero", args.allow_zero);
    if let Some(path) = &args.set_file {
        let file = load_file(path, rec, false, args.allow_zero)?;
        check_prime_flag(args.prime, &file)?;
        let seed = needs_seed.then(|| resolve_seed(seed, rec));
        return Ok((file, seed));
    }
    let size = args.random_size.expect("clap enforces one source");
    let seed = resolve_seed(seed, rec);
    Ok((random_set(args.prime, size, seed, rec)?, Some(seed)))
}

fn parse_constants(s: &str) -> CliResult<BoundConstants> {
    if s == "paper" {
        return Ok(BoundConstants::paper());
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(BoundConstants::empirical(v)),
        _ => Err(CliError::Usage(format!(
            "--constants expects `paper` or a non-negative number, got {s:?}"
        ))),
    }
}

fn usage_from_core(flag: &str, e: Error) -> CliError {
    match e {
        Error::BadSize(_) | Error::BadSizes(_) | Error::EpsRange(_) | Error::TooLarge(_)
        | Error::BudgetExceeded(_) => CliError::Usage(format!("{flag}: {e}")),
        other => other.into(),
    }
}

fn values(set: &[Residue]) -> Vec<Value> {
    set.iter().map(|r| json_u64(r.value())).collect()
}

fn order(a: OrderArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("order");
    let (file, seed) = load_set(&a.set, a.seed, true, &mut rec)?;
    let seed = seed.expect("order is randomized");
    let config = RepairConfig {
        window: a.window,
        max_restarts: a.max_restarts,
        fallback: match a.fallback {
            FallbackArg::Backtrack => Fallback::Backtrack,
            FallbackArg::None => Fallback::None,
        },
        backtrack_threshold: a.backtrack_threshold,
        rng_seed: seed,
        candidate_rule: match a.candidate_rule {
            CandidateArg::First => CandidateRule::First,
            CandidateArg::Random => CandidateRule::Random,
        },
        allow_zero: a.set.allow_zero,
    };
    rec.param("config", &config);
    let p = file.modulus.get();
    let (ordering, report, code) = match construct_valid_ordering(&file.elements, &config) {
        Ok((ordering, report)) => (Value::Array(values(&ordering)), report, 0),
        Err(Error::Failed(report)) => {
            eprintln!("no valid ordering found");
            (Value::Null, *report, 1)
        }
        Err(e) => return Err(usage_from_core("--window", e)),
    };
    let payload = json!({
        "p": json_u64(p),
        "set": values(&file.elements),
        "seed": seed.to_string(),
        "ordering": ordering,
        "report": to_json(&report),
    });
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&payload))?;
    Ok(code)
}

fn verify(a: VerifyArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("verify");
    let file = load_file(&a.ordering_file, &mut rec, true, a.allow_zero)?;
    check_prime_flag(a.prime, &file)?;
    let state = OrderingState::new(file.modulus, &file.elements, a.allow_zero)?;
    let bad = state.bad_endpoints();
    let valid = bad.is_empty();
    let payload = json!({
        "p": json_u64(file.modulus.get()),
        "n": file.elements.len(),
        "valid": valid,
        "bad_endpoints": bad.positions,
    });
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&payload))?;
    if !valid {
        eprintln!("invalid: {} repeated partial sums", bad.len());
    }
    Ok(if valid { 0 } else { 1 })
}

fn write_counts_csv(path: &Path, counts: &[Value]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(["z", "count"]).map_err(io_err)?;
    for (z, c) in counts.iter().enumerate() {
        let c = match c {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        w.write_record([z.to_string(), c]).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

fn maxprob(a: MaxprobArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("maxprob");
    let mc = a.mode == Mode::Mc;
    let (file, seed) = load_set(&a.set, a.seed, mc, &mut rec)?;
    rec.param("m", a.m);
    rec.param("mode", a.mode.name());
    let (p, n, m) = (file.modulus.get(), file.elements.len(), a.m);
    let lemma41 = bound_lemma41(n, m).map_err(|e| usage_from_core("--m", e))?;
    let mut payload = Map::new();
    payload.insert("p".into(), json_u64(p));
    payload.insert("n".into(), json!(n));
    payload.insert("m".into(), json!(m));
    payload.insert("mode".into(), json!(a.mode.name()));
    let counts: Vec<Value> = match a.mode {
        Mode::Exact => {
            let dist = slice_distribution(&file.elements, m).map_err(|e| usage_from_core("--m", e))?;
            let (prob, argmax) = max_point_probability(&dist);
            payload.insert("max_prob_num".into(), crate::io::json_bigint(prob.numer()));
            payload.insert("max_prob_den".into(), crate::io::json_bigint(prob.denom()));
            payload.insert("max_prob".into(), json!(prob.to_f64()));
            payload.insert("argmax_z".into(), json_u64(argmax));
            dist.counts.iter().map(json_biguint).collect()
        }
        Mode::Mc => {
            let seed = seed.expect("mc is randomized");
            rec.param("trials", a.trials);
            let hist = mc_slice_histogram(&file.elements, m, a.trials, seed)
                .map_err(|e| usage_from_core("--trials", e))?;
            let est = mc_max_point_probability(&file.elements, m, a.trials, seed)?;
            payload.insert("estimate".into(), json!(est.estimate));
            payload.insert("std_error".into(), json!(est.std_error));
            payload.insert("argmax_z".into(), json!(est.argmax));
            payload.insert("trials".into(), json_u64(a.trials));
            payload.insert("seed".into(), json!(seed.to_string()));
            hist.into_iter().map(json_u64).collect()
        }
    };
    payload.insert("bound_lemma41".into(), json_rational(&lemma41));
    if let Some(path) = &a.counts_csv {
        write_counts_csv(path, &counts)?;
        rec.output(path);
        payload.insert("counts_csv_path".into(), json!(path.display().to_string()));
    }
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&Value::Object(payload)))?;
    Ok(0)
}

fn chain(a: ChainArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("chain");
    let mc = a.mode == Mode::Mc;
    let (file, seed) = load_set(&a.set, a.seed, mc, &mut rec)?;
    let constants = parse_constants(&a.constants)?;
    rec.param("sizes", &a.sizes);
    rec.param("targets", a.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>());
    rec.param("mode", a.mode.name());
    rec.param("constants", constants.mode);
    let targets: Vec<Residue> = a.targets.iter().map(|&t| file.modulus.residue(t)).collect();
    let (p, n) = (file.modulus.get(), file.elements.len());
    let bound = bound_cor42(p, n, &a.sizes, &constants).map_err(|e| usage_from_core("--sizes", e))?;
    let mut payload = Map::new();
    payload.insert("p".into(), json_u64(p));
    payload.insert("n".into(), json!(n));
    payload.insert("sizes".into(), json!(a.sizes));
    payload.insert("targets".into(), Value::Array(values(&targets)));
    payload.insert("mode".into(), json!(a.mode.name()));
    match a.mode {
        Mode::Exact => {
            let prob = chain_probability_exact(&file.elements, &a.sizes, &targets)
                .map_err(|e| usage_from_core("--sizes", e))?;
            payload.insert("probability".into(), json_rational(&prob));
            payload.insert("estimate".into(), json!(prob.to_f64()));
        }
        Mode::Mc => {
            let seed = seed.expect("mc is randomized");
            rec.param("trials", a.trials);
            let est = mc_chain_probability(&file.elements, &a.sizes, &targets, a.trials, seed)
                .map_err(|e| usage_from_core("--sizes", e))?;
            payload.insert("estimate".into(), json!(est.estimate));
            payload.insert("std_error".into(), json!(est.std_error));
            payload.insert("trials".into(), json_u64(a.trials));
            payload.insert("seed".into(), json!(seed.to_string()));
        }
    }
    payload.insert("bound_cor42".into(), json!(bound));
    payload.insert("constants".into(), to_json(&constants.mode));
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&Value::Object(payload)))?;
    Ok(0)
}

/// `a/b`, or `10t/m` which stands for 10t/m at each level t.
fn parse_delta(s: &str, t: u64, m: usize) -> CliResult<(u64, u64)> {
    if s == "10t/m" {
        return Ok((10 * t, m as u64));
    }
    let bad = || CliError::Usage(format!("--delta expects `a/b` or `10t/m`, got {s:?}"));
    let (num, den) = s.split_once('/').ok_or_else(bad)?;
    let num: u64 = num.trim().parse().map_err(|_| bad())?;
    let den: u64 = den.trim().parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(bad());
    }
    Ok((num, den))
}

const CHECKS: [&str; 5] = ["est-Psi", "Bt", "Q-lower", "Q-dual", "sumset"];

fn fourier(a: FourierArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("fourier");
    let (file, _) = load_set(&a.set, a.seed, false, &mut rec)?;
    for c in &a.checks {
        if !CHECKS.contains(&c.as_str()) {
            return Err(CliError::Usage(format!(
                "--checks: unknown check {c:?}, expected one of {}",
                CHECKS.join(", ")
            )));
        }
    }
    for d in &a.delta {
        parse_delta(d, 1, a.m.max(1))?;
    }
    rec.param("m", a.m);
    rec.param("t", &a.t);
    rec.param("checks", &a.checks);
    rec.param("delta", &a.delta);
    rec.param("k", &a.k);
    let mut lab = FourierLab::new(&file.elements, a.m).map_err(|e| usage_from_core("--m", e))?;
    let wants = |name: &str| a.checks.iter().any(|c| c == name);
    let mut reports = Vec::new();
    // every check except the B_t size bound is unconditional
    let mut unconditional_ok = true;
    let mut push = |reports: &mut Vec<Value>, name: &str, holds: bool, witnesses: Value, tags: Value, detail: Value| {
        if name != "Bt" && !holds {
            unconditional_ok = false;
        }
        reports.push(json!({
            "check": name,
            "holds": holds,
            "witnesses": witnesses,
            "tags": tags,
            "detail": detail,
        }));
    };
    for &t in &a.t {
        if t == 0 {
            return Err(CliError::Usage("--t: levels must be at least 1".into()));
        }
        if wants("est-Psi") {
            let r = lab.check_est_psi(t);
            let witnesses = to_json(&r.violations);
            push(&mut reports, "est-Psi", r.holds, witnesses, to_json(&r.tags), json!({"t": t, "checked": r.checked}));
        }
        if wants("Bt") {
            let r = lab.check_b_t_bound(t);
            push(&mut reports, "Bt", r.holds, json!([]), to_json(&r.tags), json!({"t": t, "size": r.size, "bound": r.bound}));
        }
        if wants("Q-lower") {
            let r = lab.check_lower_bound_q(t).map_err(|e| usage_from_core("--checks Q-lower", e))?;
            push(&mut reports, "Q-lower", r.holds, json!([]), json!([]), to_json(&r));
        }
        if wants("Q-dual") {
            let r = lab.check_dual_est(t).map_err(|e| usage_from_core("--checks Q-dual", e))?;
            push(&mut reports, "Q-dual", r.holds, json!([]), json!([]), to_json(&r));
        }
        if wants("sumset") {
            for d in &a.delta {
                let delta = parse_delta(d, t, a.m)?;
                for &k in &a.k {
                    let r = lab
                        .check_sumset(t, delta, k)
                        .map_err(|e| usage_from_core("--checks sumset", e))?;
                    let witnesses = json!(r.witnesses);
                    push(&mut reports, "sumset", r.holds, witnesses, json!([]), to_json(&r));
                }
            }
        }
    }
    let mut payload = json!({
        "p": json_u64(file.modulus.get()),
        "n": file.elements.len(),
        "m": a.m,
        "checks": reports,
        "unconditional_hold": unconditional_ok,
    });
    if a.level_sets {
        let mut deltas = Vec::new();
        for d in &a.delta {
            for &t in &a.t {
                deltas.push(parse_delta(d, t, a.m)?);
            }
        }
        deltas.sort_unstable();
        deltas.dedup();
        let sets = lab.level_sets(&a.t, &deltas, None).map_err(|e| usage_from_core("--level-sets", e))?;
        payload["level_sets"] = to_json(&sets);
    }
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&payload))?;
    Ok(if unconditional_ok { 0 } else { 1 })
}

pub const SWEEP_HEADER: [&str; 12] = [
    "p", "n", "m", "mode", "estimate", "std_error", "bound_thm12", "bound_cor13", "bound_lemma41",
    "C_emp", "seed", "trials",
];

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn sweep(a: SweepArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("sweep");
    let mc = a.mode == Mode::Mc;
    let (file, seed) = load_set(&a.set, a.seed, mc, &mut rec)?;
    rec.param("m_list", &a.m_list);
    rec.param("mode", a.mode.name());
    rec.param("eps", a.eps);
    rec.param("constants", &a.constants);
    if mc {
        rec.param("trials", a.trials);
    }
    let (p, n) = (file.modulus.get(), file.elements.len());
    for &m in &a.m_list {
        bound_lemma41(n, m).map_err(|e| usage_from_core("--m-list", e))?;
    }
    let fit = a.constants == "fit";
    let fixed = if fit { None } else { Some(parse_constants(&a.constants)?) };
    let estimate = |m: usize| -> CliResult<(f64, f64)> {
        match seed.filter(|_| mc) {
            Some(seed) => {
                let est = mc_max_point_probability(&file.elements, m, a.trials, seed)?;
                Ok((est.estimate, est.std_error))
            }
            None => {
                let dist = slice_distribution(&file.elements, m)?;
                let (prob, _) = max_point_probability(&dist);
                Ok((prob.to_f64().unwrap_or(f64::NAN), 0.0))
            }
        }
    };
    // MC estimates parallelize inside; exact rows run side by side
    let rows: Vec<(usize, f64, f64)> = if mc {
        a.m_list.iter().map(|&m| estimate(m).map(|(e, s)| (m, e, s))).collect::<CliResult<_>>()?
    } else {
        a.m_list.par_iter().map(|&m| estimate(m).map(|(e, s)| (m, e, s))).collect::<CliResult<_>>()?
    };
    let c_emp: Vec<Option<f64>> = rows
        .iter()
        .map(|&(m, est, _)| empirical_constant(p, n, m, est).ok())
        .collect();
    let constants = match fixed {
        Some(c) => c,
        None => BoundConstants::empirical(c_emp.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))),
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::io("<csv>", std::io::Error::other(e));
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for (&(m, est, se), c) in rows.iter().zip(&c_emp) {
        let lemma41 = bound_lemma41(n, m).expect("checked above").to_f64().unwrap_or(f64::NAN);
        let cor13 = bound_cor13(p, n, m, a.eps, &constants).map(fmt_f64).unwrap_or_default();
        w.write_record([
            p.to_string(),
            n.to_string(),
            m.to_string(),
            a.mode.name().to_string(),
            fmt_f64(est),
            fmt_f64(se),
            fmt_f64(bound_thm12(p, n, m, &constants)),
            cor13,
            fmt_f64(lemma41),
            c.map(fmt_f64).unwrap_or_default(),
            seed.map(|s| s.to_string()).unwrap_or_default(),
            if mc { a.trials.to_string() } else { "0".into() },
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("<csv>", std::io::Error::other(e.to_string())))?;
    rec.param("resolved_constants", constants.mode);
    rec.finish(&OutTarget::parse(&a.out), &bytes)?;
    Ok(0)
}

fn lemmas(a: LemmasArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("lemmas");
    rec.param("primes", &a.primes);
    rec.param("n_list", &a.n_list);
    rec.param("k_list", &a.k_list);
    rec.param("ck", &a.ck);
    let constants: Vec<BoundConstants> = a.ck.iter().map(|s| parse_constants(s)).collect::<CliResult<_>>()?;
    let mut grid = Vec::new();
    for &p in &a.primes {
        PrimeModulus::new(p)?;
        for &n in &a.n_list {
            for &k in &a.k_list {
                for c in &constants {
                    grid.push((p, n, k, *c));
                }
            }
        }
    }
    let checks: Vec<Value> = grid
        .par_iter()
        .map(|&(p, n, k, c)| {
            let check = check_lemma43_inequality(p, n, k, &c).map_err(|e| usage_from_core("--n-list", e))?;
            let mut v = to_json(&check);
            v["constants"] = to_json(&c.mode);
            Ok(v)
        })
        .collect::<CliResult<_>>()?;
    let violations = checks.iter().filter(|c| c["violated"] == json!(true)).count();
    let payload = json!({ "checks": checks, "violations": violations });
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&payload))?;
    Ok(if violations == 0 { 0 } else { 1 })
}

fn events(a: EventsArgs) -> CliResult<i32> {
    let mut rec = Recorder::start("events");
    rec.param("d", a.d);
    rec.param("allow_zero", a.allow_zero);
    let mut order = if let Some(path) = &a.ordering_file {
        let file = load_file(path, &mut rec, true, a.allow_zero)?;
        check_prime_flag(a.prime, &file)?;
        file
    } else {
        let set = SetArgs {
            prime: a.prime,
            set_file: a.set_file.clone(),
            random_size: a.random_size,
            allow_zero: a.allow_zero,
        };
        let (mut file, seed) = load_set(&set, a.seed, true, &mut rec)?;
        let seed = seed.expect("shuffling is randomized");
        file.elements.sort_unstable();
        let start = usize::from(file.elements.first().is_some_and(|r| r.is_zero()));
        shuffle(&mut file.elements[start..], &mut stream(seed, 0));
        file
    };
    if order.elements.is_empty() {
        return Err(CliError::Usage("the ordering is empty".into()));
    }
    let state = OrderingState::new(order.modulus, &order.elements, a.allow_zero)?;
    let flags = state.detect_bad_events(a.d);
    let payload = json!({
        "p": json_u64(order.modulus.get()),
        "n": order.elements.len(),
        "d": a.d,
        "ordering": values(&std::mem::take(&mut order.elements)),
        "bad_endpoints": state.bad_endpoints().positions,
        "flags": to_json(&flags),
        "any": flags.any(),
    });
    rec.finish(&OutTarget::parse(&a.out), &json_bytes(&payload))?;
    Ok(0)
}
