//! One function per subcommand. Each returns the full output document;
//! printing happens in `main`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ctmdp_core::rational::{format_rational, to_f64};
use ctmdp_core::synthesis::{capped_preamble, check_saddle_with_budget, synth_enumerate_with_budget, GreedyContext};
use ctmdp_core::{
    check_greed_bound, determinise, estimate, evaluate, is_uniform, parse_model,
    parse_model_unchecked, serialize_model, step_bounded, synth_uniform_dp, uniformise,
    CtmdpModel, EvalOptions, Evaluation, Loc, Rational, Scheduler, SynthesisResult, Synthesized, ValueInterval,
};
use serde_json::{json, Map, Value};

use crate::args::{EvalArgs, Format, MethodArg, ModelArgs};

/// Terms summed explicitly when checking a greed bound before falling back
/// to the geometric remainder.
const CHECK_HORIZON: u64 = 100_000;

/// A rejected argument combination that clap cannot express; reported with
/// exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_model(args: &ModelArgs) -> Result<CtmdpModel> {
    let text = read(&args.model)?;
    let model = parse_model(&text).with_context(|| format!("in {}", args.model.display()))?;
    let model = if args.absorb_goal { model.absorb_goal() } else { model };
    model.ensure_valid().with_context(|| format!("in {}", args.model.display()))?;
    Ok(model)
}

fn load_scheduler(path: &Path, model: &CtmdpModel) -> Result<Scheduler> {
    let scheduler = Scheduler::from_document(&read(path)?, model).with_context(|| format!("in {}", path.display()))?;
    scheduler.check(model).with_context(|| format!("in {}", path.display()))?;
    Ok(scheduler)
}

fn eval_options(eval: &EvalArgs) -> EvalOptions {
    EvalOptions { epsilon: eval.epsilon, exact_steps: eval.exact_steps }
}

fn interval_json(v: &ValueInterval) -> Value {
    json!({ "lo": v.lo, "hi": v.hi })
}

fn interval_text(v: &ValueInterval) -> String {
    format!("[{}, {}]", v.lo, v.hi)
}

fn rational_json(r: &Rational) -> Value {
    json!({ "value": format_rational(r) })
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

fn non_goal(model: &CtmdpModel) -> impl Fn(Loc) -> bool + '_ {
    move |l| !model.is_goal(l)
}

/// The report and whether the model is valid.
pub fn validate(args: &ModelArgs) -> Result<(String, bool)> {
    let text = read(&args.model)?;
    let model = parse_model_unchecked(&text).with_context(|| format!("in {}", args.model.display()))?;
    let model = if args.absorb_goal { model.absorb_goal() } else { model };
    let violations = model.validate();
    let out = match args.format {
        Format::Json => pretty(&json!({
            "valid": violations.is_empty(),
            "locations": model.num_locations(),
            "actions": model.num_actions(),
            "transitions": model.transitions().len(),
            "uniform_rate": is_uniform(&model).map(|r| rational_json(&r)),
            "violations": violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = format!(
                "model {}: {} locations, {} actions, {} transitions\n",
                model.name(),
                model.num_locations(),
                model.num_actions(),
                model.transitions().len()
            );
            match is_uniform(&model) {
                Some(r) => writeln!(s, "uniform with rate {}", format_rational(&r))?,
                None => writeln!(s, "not uniform (maximal exit rate {})", format_rational(&model.max_exit_rate()))?,
            }
            if violations.is_empty() {
                s.push_str("valid");
            } else {
                for v in &violations {
                    writeln!(s, "violation: {v}")?;
                }
                s.truncate(s.trim_end().len());
            }
            s
        }
    };
    Ok((out, violations.is_empty()))
}

pub fn uniformise_cmd(args: &ModelArgs, prune: bool) -> Result<String> {
    let model = load_model(args)?;
    let u = uniformise(&model);
    let uniform = if prune { u.pruned_model() } else { u.uniform_model };
    let document = serialize_model(&uniform);
    Ok(match args.format {
        Format::Text => document,
        Format::Json => {
            let model: Value = serde_json::from_str(&document)?;
            pretty(&json!({ "rate": rational_json(&u.rate), "model": model }))
        }
    })
}

pub fn greedy(args: &ModelArgs) -> Result<String> {
    let model = load_model(args)?;
    let ctx = GreedyContext::new(&model);
    let a = &ctx.analysis;
    let shown: Vec<Loc> = (0..model.num_locations()).filter(|&l| !model.is_goal(l)).collect();
    let act = |x: usize| model.action_id(x).to_string();
    let loc = |l: Loc| model.location_id(l).to_string();
    let vector = |l: Loc| a.sup_vectors[l].0.iter().map(format_rational).collect::<Vec<_>>();

    Ok(match args.format {
        Format::Json => {
            let mut greedy = Map::new();
            let mut sets = Map::new();
            let mut sup = Map::new();
            for &l in &shown {
                greedy.insert(loc(l), json!(act(ctx.standard_greedy[l])));
                sets.insert(loc(l), json!(a.greedy_actions[l].iter().map(|&x| act(x)).collect::<Vec<_>>()));
                sup.insert(loc(l), json!(vector(l)));
            }
            pretty(&json!({
                "rate": rational_json(&ctx.rate),
                "uniform": is_uniform(&model).is_some(),
                "depth": a.depth,
                "mu": a.discriminator.as_ref().map(rational_json),
                "greedy": greedy,
                "greedy_sets": sets,
                "sup_vectors": sup,
            }))
        }
        Format::Text => {
            let mut s = String::new();
            if is_uniform(&model).is_none() {
                writeln!(s, "analysed on the uniformisation (rate {})", format_rational(&ctx.rate))?;
            } else {
                writeln!(s, "uniform rate {}", format_rational(&ctx.rate))?;
            }
            writeln!(s, "depth = {}", a.depth)?;
            match &a.discriminator {
                Some(mu) => writeln!(s, "mu = {}", format_rational(mu))?,
                None => writeln!(s, "mu = none (every enabled action is greedy)")?,
            }
            let pairs: Vec<String> =
                shown.iter().map(|&l| format!("{} -> {}", loc(l), act(ctx.standard_greedy[l]))).collect();
            writeln!(s, "greedy: {}", pairs.join(", "))?;
            for &l in &shown {
                let set: Vec<String> = a.greedy_actions[l].iter().map(|&x| act(x)).collect();
                writeln!(s, "  {}: greedy set {{{}}}, d = ({})", loc(l), set.join(", "), vector(l).join(", "))?;
            }
            s.truncate(s.trim_end().len());
            s
        }
    })
}

pub fn bound(args: &ModelArgs, time: &Rational) -> Result<String> {
    let model = load_model(args)?;
    let ctx = GreedyContext::new(&model);
    let mu = ctx.analysis.discriminator.as_ref();
    let b = ctx_bound(&ctx, time)?;
    let lambda_t = &ctx.rate * time;
    let verified = mu.map(|mu| check_greed_bound(&lambda_t, mu, b.refined, CHECK_HORIZON));
    Ok(match args.format {
        Format::Json => pretty(&json!({
            "rate": rational_json(&ctx.rate),
            "time": rational_json(time),
            "mu": mu.map(rational_json),
            "coarse": b.coarse,
            "refined": b.refined,
            "refined_verified": verified,
        })),
        Format::Text => {
            let mut s = format!("rate = {}, t = {}\n", format_rational(&ctx.rate), format_rational(time));
            match mu {
                Some(mu) => writeln!(s, "mu = {}", format_rational(mu))?,
                None => writeln!(s, "mu = none (standard greedy scheduler is optimal from step 0)")?,
            }
            write!(s, "coarse = {}, refined = {}", b.coarse, b.refined)?;
            if let Some(ok) = verified {
                write!(s, "\nrefined bound passes the tail check: {ok}")?;
            }
            s
        }
    })
}

fn ctx_bound(ctx: &GreedyContext, time: &Rational) -> Result<ctmdp_core::GreedBound> {
    Ok(ctmdp_core::greed_bound(&ctx.rate, ctx.analysis.discriminator.as_ref(), time)?)
}

fn evaluation_report(format: Format, e: &Evaluation, extra: &[(&str, Value)]) -> String {
    match format {
        Format::Json => {
            let mut doc = json!({
                "value": interval_json(&e.value),
                "rate": e.rate,
                "lambda_t": e.lambda_t,
                "n_max": e.n_max,
                "truncation": e.truncation,
                "rounding_slack": e.rounding_slack,
            });
            for (k, v) in extra {
                doc[*k] = v.clone();
            }
            pretty(&doc)
        }
        Format::Text => {
            let mut s = format!("value = {}\n", interval_text(&e.value));
            let _ = write!(
                s,
                "uniform rate {}, lambda*t = {}, truncation point {}, truncation mass {:e}",
                e.rate, e.lambda_t, e.n_max, e.truncation
            );
            for (k, v) in extra {
                let _ = write!(s, "\n{k} = {v}");
            }
            s
        }
    }
}

pub fn evaluate_cmd(args: &ModelArgs, eval: &EvalArgs, scheduler: &Path) -> Result<String> {
    let model = load_model(args)?;
    let s = load_scheduler(scheduler, &model)?;
    let e = evaluate(&model, &s, to_f64(&eval.time), &eval_options(eval))?;
    Ok(evaluation_report(args.format, &e, &[]))
}

pub fn step_bounded_cmd(args: &ModelArgs, eval: &EvalArgs, scheduler: &Path, steps: usize) -> Result<String> {
    let model = load_model(args)?;
    let s = load_scheduler(scheduler, &model)?;
    let e = step_bounded(&model, &s, to_f64(&eval.time), steps, &eval_options(eval))
        .context("step-bounded reachability needs a uniform model (see `uniformise`)")?;
    Ok(evaluation_report(args.format, &e, &[("steps", json!(steps))]))
}

pub fn simulate(
    args: &ModelArgs,
    time: &Rational,
    scheduler: &Path,
    samples: u64,
    seed: u64,
    confidence: f64,
) -> Result<String> {
    let model = load_model(args)?;
    let s = load_scheduler(scheduler, &model)?;
    let est = estimate(&model, &s, to_f64(time), samples, seed, confidence)?;
    let ci = ValueInterval { lo: est.lo(), hi: est.hi() };
    Ok(match args.format {
        Format::Json => pretty(&json!({
            "mean": { "value": est.mean },
            "interval": interval_json(&ci),
            "half_width": est.half_width,
            "confidence": est.confidence,
            "samples": est.samples,
            "seed": est.seed,
        })),
        Format::Text => format!(
            "mean = {}\n{}% interval = {}\nsamples = {}, seed = {}",
            est.mean,
            est.confidence * 100.0,
            interval_text(&ci),
            est.samples,
            est.seed
        ),
    })
}

fn scheduler_json(model: &CtmdpModel, synthesized: &Synthesized) -> Result<Value> {
    Ok(match synthesized {
        Synthesized::Scheduler(s) => serde_json::from_str(&s.to_document(model))?,
        Synthesized::Strategies(p) => json!({
            "max": serde_json::from_str::<Value>(&p.max_strategy.to_document_filtered(model, |l| {
                model.player(l) == ctmdp_core::Player::Max
            }))?,
            "min": serde_json::from_str::<Value>(&p.min_strategy.to_document_filtered(model, |l| {
                model.player(l) == ctmdp_core::Player::Min
            }))?,
        }),
    })
}

fn synthesis_report(model: &CtmdpModel, format: Format, r: &SynthesisResult) -> Result<String> {
    let combined = r.scheduler.combined();
    Ok(match format {
        Format::Json => pretty(&json!({
            "value": interval_json(&r.value),
            "method": r.method.as_str(),
            "preamble_depth": r.preamble_depth,
            "greed_bound": { "coarse": r.greed_bound_used.coarse, "refined": r.greed_bound_used.refined },
            "ties": r.ties,
            "notes": r.notes,
            "scheduler": scheduler_json(model, &r.scheduler)?,
        })),
        Format::Text => {
            let mut s = format!("value = {}\n", interval_text(&r.value));
            writeln!(
                s,
                "method = {}, preamble = {}, greed bound: coarse = {}, refined = {}",
                r.method.as_str(),
                r.preamble_depth,
                r.greed_bound_used.coarse,
                r.greed_bound_used.refined
            )?;
            writeln!(s, "ties = {}", r.ties)?;
            for note in &r.notes {
                writeln!(s, "note: {note}")?;
            }
            writeln!(s, "tail: {}", combined.describe_tail(model, non_goal(model)))?;
            s.push_str(&combined.to_document(model));
            s
        }
    })
}

pub fn synthesize(
    args: &ModelArgs,
    eval: &EvalArgs,
    method: Option<MethodArg>,
    preamble: Option<usize>,
    budget: u128,
    output: Option<&Path>,
) -> Result<String> {
    let model = load_model(args)?;
    let t = to_f64(&eval.time);
    let uniform = is_uniform(&model).is_some();
    let method = method.unwrap_or(if uniform { MethodArg::Dp } else { MethodArg::Enumerate });
    let result = match method {
        MethodArg::Dp => {
            if preamble.is_some() {
                return Err(UsageError("--preamble applies to --method enumerate only".into()).into());
            }
            if !uniform {
                bail!("the dp method needs a uniform model; use --method enumerate or uniformise first");
            }
            synth_uniform_dp(&model, t, eval.epsilon)?
        }
        MethodArg::Enumerate => {
            let (depth, note) = default_preamble(&model, &eval.time, preamble, budget)?;
            let mut r = synth_enumerate_with_budget(&model, t, eval.epsilon, depth, budget)?;
            r.notes.extend(note);
            r
        }
    };
    if let Some(path) = output {
        fs::write(path, result.scheduler.combined().to_document(&model))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    synthesis_report(&model, args.format, &result)
}

/// The requested preamble, or the refined greed bound capped by the
/// candidate budget, with a note when the cap applied.
fn default_preamble(
    model: &CtmdpModel,
    time: &Rational,
    wanted: Option<usize>,
    budget: u128,
) -> Result<(usize, Option<String>)> {
    if let Some(p) = wanted {
        return Ok((p, None));
    }
    let ctx = GreedyContext::new(model);
    let refined = ctx_bound(&ctx, time)?.refined as usize;
    let depth = capped_preamble(model, refined, budget);
    let note = (depth < refined)
        .then(|| format!("preamble capped at {depth} (refined greed bound {refined}) by the candidate budget {budget}"));
    Ok((depth, note))
}

pub fn saddle(args: &ModelArgs, eval: &EvalArgs, preamble: Option<usize>, budget: u128) -> Result<String> {
    let model = load_model(args)?;
    let (depth, note) = default_preamble(&model, &eval.time, preamble, budget)?;
    let r = check_saddle_with_budget(&model, to_f64(&eval.time), depth, eval.epsilon, budget)?;
    Ok(match args.format {
        Format::Json => pretty(&json!({
            "sup_inf": interval_json(&r.sup_inf),
            "inf_sup": interval_json(&r.inf_sup),
            "gap": r.gap(),
            "preamble": depth,
            "notes": note.into_iter().collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = format!(
                "sup_inf = {}\ninf_sup = {}\ngap = {:e}, preamble = {}",
                interval_text(&r.sup_inf),
                interval_text(&r.inf_sup),
                r.gap(),
                depth
            );
            if let Some(note) = note {
                write!(s, "\nnote: {note}")?;
            }
            s
        }
    })
}

pub fn determinise_cmd(args: &ModelArgs, eval: &EvalArgs, scheduler: &Path, output: Option<&Path>) -> Result<String> {
    let model = load_model(args)?;
    let s = load_scheduler(scheduler, &model)?;
    let d = determinise(&model, &s, to_f64(&eval.time), eval.epsilon)?;
    let document = d.scheduler.to_document(&model);
    if let Some(path) = output {
        fs::write(path, &document).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(match args.format {
        Format::Json => pretty(&json!({
            "replaced": d.replaced,
            "value_before": interval_json(&d.value_before),
            "value_after": interval_json(&d.value_after),
            "scheduler": serde_json::from_str::<Value>(&document)?,
        })),
        Format::Text => format!(
            "replaced {} randomized decision(s)\nvalue before = {}\nvalue after = {}\n{}",
            d.replaced,
            interval_text(&d.value_before),
            interval_text(&d.value_after),
            document
        ),
    })
}
