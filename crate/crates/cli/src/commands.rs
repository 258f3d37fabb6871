use advsample::adversary::{make_adversary, BuiltAdversary, ElementAdversary};
use advsample::coupling::{
    couple_res_uni, couple_uni_ber, exact_mean_mismatch, reservoir_marginal_exact, res_uni_experiment, uni_ber_experiment,
};
use advsample::cover::{
    self as cover, count_traces, coverage_estimate, noisy_labels, parse_rational, regret_study, run_dynamic_set, run_mw,
    run_soa, set_mistakes, soa_tree_duel,
};
use advsample::dimension::{dim_report, ldim, shattered_tree, vcdim, Littlestone};
use advsample::family::{binomial_up_to, ProjectivePlane};
use advsample::game::{app_error, discrepancy, frac_f64, frac_string, quantile, sweep as run_sweep, Transcript};
use advsample::rng::trial_seed;
use advsample::sampler::{make_sampler, KeepPattern};
use advsample::{
    build_family, run_game, AdversaryKind, AdversarySpec, Error, ExperimentConfig, FamilySpec, Limits, Metric,
    SamplerScheme, SchemeKind, SetFamily, StreamFamily, Thresholds,
};
use serde_json::{json, Value};

use crate::spec::{parse_adversary, parse_family, parse_list, resolve_stream};
use crate::{
    CliResult, DimArgs, FractionalArgs, Format, GameArgs, IndexForArgs, LearnerArgs, LowerBoundArgs, RegretArgs,
    Rendered, ResMarginalArgs, ResUniArgs, StreamArgs, SweepArgs, UniBerArgs, Variant,
};

fn report(command: &str, config: impl serde::Serialize, body: Value) -> CliResult<Rendered> {
    let mut doc = json!({ "command": command, "config": serde_json::to_value(config)? });
    if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
        doc.extend(body);
    }
    Ok(Rendered::Json(doc))
}

fn family_from(text: &str, seed: u64) -> CliResult<SetFamily> {
    Ok(build_family(&parse_family(text)?, seed)?)
}

fn family_summary(f: &SetFamily) -> Value {
    json!({ "label": f.label(), "domain_size": f.domain_size(), "sets": f.len() })
}

pub fn dim(a: &DimArgs) -> CliResult<Rendered> {
    let f = family_from(&a.family, a.seed)?;
    let r = dim_report(&f, a.witness)?;
    report("dim", a, json!({ "family": family_summary(&f), "ldim": r.ldim, "vcdim": r.vcdim, "witness": r.witness }))
}

fn transcript_json<T: std::fmt::Display>(tr: &Transcript<T>) -> Value {
    json!({
        "stream": tr.stream.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "decisions": tr.decisions,
        "sample": tr.sample,
    })
}

fn metrics_json<T, F: StreamFamily<T> + ?Sized>(f: &F, tr: &Transcript<T>) -> CliResult<Value> {
    let app = app_error(f, tr);
    Ok(json!({
        "app": app.map_or_else(|| "undefined".to_string(), |r| frac_string(&r)),
        "disc": discrepancy(f, &tr.stream, &tr.sample)?,
    }))
}

pub fn game(a: &GameArgs) -> CliResult<Rendered> {
    let family = a.family.as_deref().map(|t| family_from(t, a.seed)).transpose()?;
    let scheme = SamplerScheme::parse(&a.sampler, a.n)?;
    let spec = parse_adversary(&a.adversary, a.n, family.as_ref(), a.seed)?;
    let mut sampler = make_sampler(scheme, a.seed)?;
    let body = match make_adversary(&spec)? {
        BuiltAdversary::Dyadic(mut adv) => {
            let tr = run_game(&mut sampler, &mut adv, a.n)?;
            json!({ "transcript": transcript_json(&tr), "metrics": metrics_json(&Thresholds, &tr)? })
        }
        BuiltAdversary::Element(mut adv) => {
            let f = family.ok_or_else(|| Error::InvalidSpec("this adversary needs --family".into()))?;
            let tr = run_game(&mut sampler, &mut adv, a.n)?;
            json!({ "transcript": transcript_json(&tr), "metrics": metrics_json(&f, &tr)? })
        }
    };
    report("game", a, body)
}

fn parse_metrics(text: &str) -> CliResult<Vec<Metric>> {
    text.split(',')
        .map(|m| match m.trim() {
            "app" => Ok(Metric::App),
            "disc" => Ok(Metric::Disc),
            "net" => Ok(Metric::Net),
            other => Err(Error::Parse(format!("unknown metric {other:?}")).into()),
        })
        .collect()
}

pub fn sweep(a: &SweepArgs) -> CliResult<Rendered> {
    let family_spec = a.family.as_deref().map(parse_family).transpose()?;
    let family = family_spec.as_ref().map(|s| build_family(s, a.seed)).transpose()?;
    let scheme = SamplerScheme::parse(&a.sampler, a.n)?;
    let adversary = parse_adversary(&a.adversary, a.n, family.as_ref(), a.seed)?;
    let net = a
        .net
        .as_deref()
        .map(|t| -> CliResult<(usize, usize)> {
            match parse_list(t)?.as_slice() {
                [hi, lo] => Ok((*hi, *lo)),
                _ => Err(Error::Parse("--net takes m_hi,m_lo".into()).into()),
            }
        })
        .transpose()?;
    let config = ExperimentConfig {
        family: family_spec,
        sampler: scheme.kind,
        adversary,
        n: a.n,
        trials: a.trials,
        seed: a.seed,
        metrics: parse_metrics(&a.metrics)?,
        eps: a.eps,
        net,
        jobs: a.jobs,
        record_timing: a.timing,
    };
    let rep = run_sweep(&config)?;
    match a.format {
        Format::Csv => Ok(Rendered::Text(rep.to_csv())),
        Format::Report => report("sweep", a, json!({ "report": rep })),
    }
}

fn stream_setup(a: &StreamArgs) -> CliResult<(SetFamily, Vec<advsample::Element>)> {
    let f = family_from(&a.family, a.seed)?;
    let stream = resolve_stream(&f, a.stream.as_deref(), a.random_stream, a.seed)?;
    Ok((f, stream))
}

pub fn traces(a: &StreamArgs) -> CliResult<Rendered> {
    let (f, stream) = stream_setup(a)?;
    let mut engine = Littlestone::new(&f)?;
    let root = engine.root();
    let d = engine.ldim(root).max(0) as u64;
    let count = count_traces(&mut engine, &stream, &Limits::default())?;
    report(
        "cover traces",
        a,
        json!({
            "family": family_summary(&f),
            "n": stream.len(),
            "ldim": d,
            "traces": count,
            "bound": binomial_up_to(stream.len() as u64, d).to_string(),
        }),
    )
}

pub fn index_for_cmd(a: &IndexForArgs) -> CliResult<Rendered> {
    let (f, stream) = stream_setup(&a.stream)?;
    let mut engine = Littlestone::new(&f)?;
    let root = engine.root();
    let d = engine.ldim(root);
    let index = cover::index_for(&mut engine, a.set, &stream)?;
    let run = run_dynamic_set(&mut engine, &index, &stream)?;
    let target = f.set(a.set)?;
    let expected: Vec<usize> = (0..stream.len()).filter(|&t| target.contains(stream[t].index())).collect();
    report(
        "cover index-for",
        a,
        json!({
            "ldim": d,
            "index": index,
            "trace": run.trace,
            "expected": expected,
            "exact": run.trace == expected,
        }),
    )
}

pub fn fractional(a: &FractionalArgs) -> CliResult<Rendered> {
    let (f, stream) = stream_setup(&a.stream)?;
    let eps = parse_rational(&a.eps)?;
    let est = coverage_estimate(&f, a.set, &stream, eps, a.threshold, a.trials, a.stream.seed)?;
    report("cover fractional", a, json!({ "estimate": est }))
}

fn learner_rounds(a: &LearnerArgs) -> CliResult<usize> {
    Ok(a.rounds.ok_or("--rounds is required unless --duel is given")?)
}

pub fn soa(a: &LearnerArgs) -> CliResult<Rendered> {
    let f = family_from(&a.family, a.seed)?;
    let mut engine = Littlestone::new(&f)?;
    let root = engine.root();
    let d = engine.ldim(root);
    let (labeled, run) = if a.duel {
        soa_tree_duel(&mut engine)?
    } else {
        let labeled = noisy_labels(&f, learner_rounds(a)?, parse_rational(&a.noise)?, a.seed)?;
        let run = run_soa(&mut engine, &labeled)?;
        (labeled, run)
    };
    let best = set_mistakes(&f, &labeled).into_iter().min().unwrap_or(0);
    report(
        "cover soa",
        a,
        json!({ "ldim": d, "rounds": labeled.len(), "mistakes": run.mistakes, "best_set_mistakes": best }),
    )
}

pub fn mw(a: &LearnerArgs) -> CliResult<Rendered> {
    let f = family_from(&a.family, a.seed)?;
    let mut engine = Littlestone::new(&f)?;
    let labeled = noisy_labels(&f, learner_rounds(a)?, parse_rational(&a.noise)?, a.seed)?;
    let run = run_mw(&mut engine, &labeled, a.eta, a.seed, &Limits::default())?;
    let bound = 2.0 * (run.rounds as f64 * run.ln_experts).sqrt();
    report("cover mw", a, json!({ "run": run, "reference_bound": bound }))
}

pub fn uni_ber(a: &UniBerArgs) -> CliResult<Rendered> {
    let p = parse_rational(&a.p)?;
    let mut body = if a.trace {
        json!({ "trace": couple_uni_ber(a.k, p, a.seed)? })
    } else {
        json!({ "summary": uni_ber_experiment(a.k, p, a.trials, a.seed)? })
    };
    if a.exact {
        let mean = exact_mean_mismatch(a.k, p)?;
        body["exact_mean_mismatch"] = json!(format!("{}/{}", mean.numer(), mean.denom()));
    }
    report("couple uni-ber", a, body)
}

pub fn res_uni(a: &ResUniArgs) -> CliResult<Rendered> {
    let body = if a.trace {
        json!({ "trace": couple_res_uni(a.n, a.k, a.seed)? })
    } else {
        json!({ "summary": res_uni_experiment(a.n, a.k, a.trials, a.seed)? })
    };
    report("couple res-uni", a, body)
}

pub fn res_marginal(a: &ResMarginalArgs) -> CliResult<Rendered> {
    let dist = reservoir_marginal_exact(a.n, a.k)?;
    let total = dist.total();
    report(
        "couple res-marginal",
        a,
        json!({
            "entries": dist.entries(),
            "total": format!("{}/{}", total.numer(), total.denom()),
            "uniform": dist.is_uniform(),
        }),
    )
}

/// Whether some set realizes "contains `x_t` exactly when `x_t` was discarded".
fn discarded_witness(f: &SetFamily, tr: &Transcript<advsample::Element>) -> bool {
    f.iter().any(|s| {
        tr.stream
            .iter()
            .zip(&tr.decisions)
            .all(|(x, fb)| s.contains(x.index()) != fb.kept)
    })
}

fn tree_games(f: &SetFamily, depth: usize, k: usize, trials: usize, seed: u64) -> CliResult<Value> {
    let tree = shattered_tree(f, depth)?
        .ok_or_else(|| Error::InvalidSpec(format!("{} shatters no tree of depth {depth}", f.label())))?;
    let spec = AdversarySpec::new(AdversaryKind::Tree { tree }, depth);
    let scheme = SamplerScheme::new(SchemeKind::Uniform { k }, depth)?;
    let mut witnessed = 0;
    let mut apps = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let mut sampler = make_sampler(scheme, trial_seed(seed, i))?;
        let mut adv = match make_adversary(&spec)? {
            BuiltAdversary::Element(ElementAdversary::Tree(t)) => t,
            _ => unreachable!(),
        };
        let tr = run_game(&mut sampler, &mut adv, depth)?;
        witnessed += usize::from(discarded_witness(f, &tr));
        if let Some(app) = app_error(f, &tr) {
            apps.push(frac_f64(&app));
        }
    }
    apps.sort_by(f64::total_cmp);
    Ok(json!({
        "depth": depth,
        "k": k,
        "trials": trials,
        "witnessed": witnessed,
        "guaranteed_error": format!("{}/{}", depth - k, depth),
        "min_app": apps.first(),
        "median_app": quantile(&apps, 0.5),
    }))
}

pub fn lower_bound(a: &LowerBoundArgs) -> CliResult<Rendered> {
    let body = match a.variant {
        Variant::Tree => {
            let d = a.d;
            let k = a.k.unwrap_or(d / 2);
            let f = build_family(&FamilySpec::Powerset { m: d }, a.seed)?;
            let tree = shattered_tree(&f, d)?.expect("power sets shatter depth d");
            let spec = AdversarySpec::new(AdversaryKind::Tree { tree }, d);
            let mut pattern_witnessed = 0;
            for mask in 0u64..1 << d {
                let mut sampler = KeepPattern::from_mask(d, mask);
                let mut adv = match make_adversary(&spec)? {
                    BuiltAdversary::Element(ElementAdversary::Tree(t)) => t,
                    _ => unreachable!(),
                };
                let tr = run_game(&mut sampler, &mut adv, d)?;
                pattern_witnessed += usize::from(discarded_witness(&f, &tr));
            }
            json!({
                "patterns": 1u64 << d,
                "patterns_witnessed": pattern_witnessed,
                "uniform": tree_games(&f, d, k, a.trials, a.seed)?,
            })
        }
        Variant::Bsearch => {
            let n = a.n;
            let k = a.k.unwrap_or(n / 4);
            let config = ExperimentConfig {
                family: None,
                sampler: SchemeKind::Uniform { k },
                adversary: AdversarySpec::new(AdversaryKind::BinarySearch, n),
                n,
                trials: a.trials,
                seed: a.seed,
                metrics: vec![Metric::App],
                eps: None,
                net: None,
                jobs: None,
                record_timing: false,
            };
            let rep = run_sweep(&config)?;
            let floor = 1.0 - (k as f64 + 1.0) / n as f64;
            let hits = rep
                .trials
                .iter()
                .filter(|r| r.numeric.is_some_and(|v| v >= floor - 1e-12))
                .count();
            let s = rep.summary(Metric::App).expect("app selected");
            json!({
                "n": n,
                "k": k,
                "trials": a.trials,
                "guaranteed_error": format!("{}/{}", n - k - 1, n),
                "witnessed": hits,
                "min_app": s.min,
                "median_app": s.median,
            })
        }
        Variant::Halflines => {
            let plane = ProjectivePlane::new(a.p)?;
            let pts = plane.point_count();
            let mut pairs_ok = true;
            for i in 0..pts {
                for j in i + 1..pts {
                    let on = plane.lines.iter().filter(|l| l.contains(i) && l.contains(j)).count();
                    pairs_ok &= on == 1;
                }
            }
            let f = build_family(&FamilySpec::HalfLines { p: a.p, seed: None }, a.seed)?;
            let mut max_meet = 0;
            for (i, s) in f.sets().iter().enumerate() {
                for t in &f.sets()[i + 1..] {
                    max_meet = max_meet.max(s.and_count(t));
                }
            }
            json!({
                "p": a.p,
                "points": pts,
                "lines": plane.lines.len(),
                "pairs_on_one_line": pairs_ok,
                "max_halfline_intersection": max_meet,
                "ldim": ldim(&f)?,
                "vcdim": vcdim(&f)?,
            })
        }
        Variant::RandomFamily => {
            let f = build_family(
                &FamilySpec::RandomHalfsets { n: a.n, count: a.count, seed: None, keep_duplicates: false },
                a.seed,
            )?;
            let d = ldim(&f)?;
            let depth = d.max(0) as usize;
            let k = a.k.unwrap_or(depth / 2).min(depth);
            json!({
                "family": family_summary(&f),
                "ldim": d,
                "vcdim": vcdim(&f)?,
                "games": if depth > 0 { tree_games(&f, depth, k, a.trials, a.seed)? } else { Value::Null },
            })
        }
    };
    report("lower-bound", a, body)
}

pub fn regret(a: &RegretArgs) -> CliResult<Rendered> {
    let f = family_from(&a.family, a.seed)?;
    let noise = parse_rational(&a.noise)?;
    let rows = parse_list(&a.rounds)?
        .into_iter()
        .map(|t| {
            let s = regret_study(&f, t, a.seeds, noise, a.seed)?;
            let bound = 2.0 * (t as f64 * s.ln_experts).sqrt();
            Ok(json!({ "summary": s, "reference_bound": bound }))
        })
        .collect::<CliResult<Vec<Value>>>()?;
    report("regret", a, json!({ "family": family_summary(&f), "horizons": rows }))
}
