//! Acceptance suite. Prints one PASS/FAIL line per criterion; all rank
//! comparisons are exact integer equality, runtime limits are wall-clock
//! bounds on the whole criterion.

mod common;

use std::time::{Duration, Instant};

use anet_core::inference::enumerate_rank;
use anet_core::{
    augment_all, expand_network, fixtures, serialize_network, unfold, verify_marginals, Engine, Evidence, Family,
    Formula, Kind, Network, Rank, Variable,
};
use common::{all_atoms, node_name, random_evidence, random_network, random_row, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_a11e;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn r(k: u64) -> Rank {
    Rank::finite(k)
}

fn oracle(net: &Network, ev: &Evidence, node: &str, value: &str) -> Rank {
    enumerate_rank(net, ev, &Formula::is(node, value)).unwrap()
}

/// The expanded engine table: (turn_key, suppressor, inertia) → engine_running.
const EXPANDED_ENGINE: [(&str, &str, &str, &str); 8] = [
    ("true", "ω^0", "true", "true"),
    ("true", "ω^0", "false", "true"),
    ("true", "ω^2", "true", "true"),
    ("true", "ω^2", "false", "false"),
    ("false", "ω^0", "true", "true"),
    ("false", "ω^0", "false", "false"),
    ("false", "ω^2", "true", "true"),
    ("false", "ω^2", "false", "false"),
];

fn expanded_engine() -> Outcome {
    let mut expanded = expand_network(&fixtures::engine(), &["engine_running"]).map_err(|e| e.to_string())?;
    expanded.description = Some("The engine network with engine_running expanded into the suppressor model.".into());
    let text = serialize_network(&expanded);
    check(text == fixtures::ENGINE_EXPANDED, || "serialization differs from the golden file".into())?;

    let f = expanded.family("engine_running").unwrap();
    check(f.rows.len() == 8, || format!("{} rows", f.rows.len()))?;
    for (key, s, i, out) in EXPANDED_ENGINE {
        let row = format!("turn_key={key},S(engine_running)={s},I(engine_running)={i}");
        let idx = (0..f.rows.len()).find(|&k| expanded.row_label(f, k) == row).unwrap();
        let forced: Vec<&str> = ["false", "true"]
            .into_iter()
            .zip(&f.rows[idx])
            .filter(|(_, k)| k.is_zero())
            .map(|(v, _)| v)
            .collect();
        check(forced == [out], || format!("{row} gives {forced:?}, expected {out}"))?;
        check(f.rows[idx].iter().all(|k| k.is_zero() || k.is_infinite()), || format!("{row} not 0/inf"))?;
    }
    Ok("8 rows, byte-exact".into())
}

fn marginal_equivalence() -> Outcome {
    check(verify_marginals(&fixtures::engine(), "engine_running").unwrap(), || "engine family".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let families = 200;
    for case in 0..families {
        let k = rng.gen_range(0..=3);
        let mut net = Network::new();
        for p in 0..k {
            net.add_variable(Variable::binary_event(node_name(p)));
            net.set_family(Family::prior(node_name(p), vec![Rank::ZERO; 2]));
        }
        let parents: Vec<String> = (0..k).map(node_name).collect();
        let rows = (0..1 << k).map(|_| random_row(&mut rng, 2, 5, 0.0)).collect();
        net.add_variable(Variable::binary_event("child"));
        net.set_family(Family::new("child", parents, rows));
        check(verify_marginals(&net, "child").unwrap(), || {
            format!("random family {case}: {:?}", net.family("child").unwrap().rows)
        })?;
    }
    Ok(format!("engine family + {families} random families"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let networks = 100;
    let mut comparisons = 0;
    for case in 0..networks {
        let nodes = if case % 4 == 0 { 12 } else { rng.gen_range(2..=12) };
        let net = random_network(&mut rng, Shape::plain(nodes));
        let ev = random_evidence(&mut rng, &net, 0.25);
        let engine = Engine::new(&net).unwrap();
        for (node, value) in all_atoms(&net) {
            let ve = engine.posterior(&ev, &node).unwrap().rank(&value).unwrap();
            let bf = oracle(&net, &ev, &node, &value);
            check(ve == bf, || format!("network {case}, {node}={value}: elimination {ve}, enumeration {bf}"))?;
            comparisons += 1;
        }
    }
    Ok(format!("{networks} networks, {comparisons} node values"))
}

fn run_scenario(net: &Network, text: &str) -> (anet_core::TemporalNetwork, Evidence, anet_core::Report) {
    let sc = fixtures::scenario(text);
    let tn = sc.unfold(net).unwrap();
    let ev = sc.evidence(&tn).unwrap();
    let report = sc.run(net).unwrap();
    (tn, ev, report)
}

fn engine_negative() -> Outcome {
    let (tn, ev, report) = run_scenario(&fixtures::engine(), fixtures::ENGINE_STALLED);
    let p = &report.posteriors[0];
    let k = p.rank("true").unwrap();
    check(p.node == "engine_running@3", || p.node.clone())?;
    check(k == r(1), || format!("κ(running@3) = {k}, pinned 1"))?;
    check(oracle(tn.network(), &ev, "engine_running@3", "true") == k, || "oracle disagrees".into())?;
    Ok(format!("κ(engine_running@3 | ev) = {k}"))
}

fn engine_positive() -> Outcome {
    let (tn, ev, report) = run_scenario(&fixtures::engine(), fixtures::ENGINE_STARTED);
    check(report.posteriors.len() == 4, || "expected slices 0..=3".into())?;
    let mut degrees = Vec::new();
    for p in &report.posteriors {
        let believed = p.believed();
        check(believed.is_some_and(|(v, _)| v == "true"), || format!("{}: {:?}", p.node, p.ranks))?;
        let k = p.rank("false").unwrap();
        check(oracle(tn.network(), &ev, &p.node, "false") == k, || format!("{}: oracle disagrees", p.node))?;
        degrees.push(k.to_string());
    }
    Ok(format!("running believed at 0..=3, κ(not running) = [{}]", degrees.join(", ")))
}

fn ysp_projection() -> Outcome {
    let (tn, ev, report) = run_scenario(&fixtures::ysp(), fixtures::YSP_PROJECTION);
    let p = report.posteriors.iter().find(|p| p.node == "alive@2").unwrap();
    let (dead, alive) = (p.rank("false").unwrap(), p.rank("true").unwrap());
    check(dead.is_zero(), || format!("κ(alive⁻@2) = {dead}"))?;
    check(alive >= r(1), || format!("κ(alive⁺@2) = {alive}"))?;
    check(alive == r(1), || format!("κ(alive⁺@2) = {alive}, pinned 1"))?;
    check(oracle(tn.network(), &ev, "alive@2", "true") == alive, || "oracle disagrees".into())?;
    Ok(format!("alive@2 = {{false: {dead}, true: {alive}}}"))
}

fn ysp_abduction() -> Outcome {
    let (tn, ev, report) = run_scenario(&fixtures::ysp(), fixtures::YSP_ABDUCTION);
    let loaded = report.posteriors.iter().find(|p| p.node == "loaded_gun@2").unwrap();
    check(loaded.believed().is_some_and(|(v, _)| v == "false"), || {
        format!("loaded_gun@2 = {:?}", loaded.ranks)
    })?;
    check(oracle(tn.network(), &ev, "loaded_gun@2", "true") == loaded.rank("true").unwrap(), || {
        "oracle disagrees on loaded_gun@2".into()
    })?;

    let x = &report.explanations[0];
    let ranked = |a: &str, b: &str| {
        x.ranked
            .iter()
            .find(|(v, _)| v[0] == a && v[1] == b)
            .map(|&(_, k)| k)
            .unwrap()
    };
    let (early, late) = (ranked("false", "idle"), ranked("idle", "false"));
    check(early == late, || format!("unload at 1: {early}, at 2: {late}"))?;
    let best: Vec<Vec<&str>> = x.best.iter().map(|b| b.iter().map(String::as_str).collect()).collect();
    check(best == [vec!["false", "idle"], vec!["idle", "false"]], || format!("best = {best:?}"))?;

    let idle = ranked("idle", "idle");
    check(idle > Rank::ZERO, || format!("κ(no unloading) = {idle}"))?;
    check(idle == r(1), || format!("κ(no unloading) = {idle}, pinned 1"))?;
    let mut none = Evidence::new();
    none.set("do_loaded_gun@1", "idle");
    none.set("do_loaded_gun@2", "idle");
    let bf = enumerate_rank(tn.network(), &ev, &Formula::conjunction(none.iter())).unwrap();
    check(bf == idle, || format!("oracle gives κ(no unloading) = {bf}"))?;
    Ok(format!(
        "loaded_gun@2 believed false ({}), unload@1 = unload@2 = {early}, κ(all idle) = {idle}",
        loaded.rank("true").unwrap()
    ))
}

fn intervention_screening() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let networks = 100;
    let (mut forced, mut recovered) = (0, 0);
    for case in 0..networks {
        let nodes = rng.gen_range(2..=9);
        let net = random_network(&mut rng, Shape { controllable: 0.5, ..Shape::plain(nodes) });
        let augmented = augment_all(&net).unwrap();
        let engine = Engine::new(&augmented).unwrap();

        for var in net.variables().filter(|v| v.is_controllable()) {
            let value = var.values[rng.gen_range(0..2)].clone();
            let upstream = ancestors(&net, &var.name);
            let mut ev = Evidence::new();
            for (n, v) in random_evidence(&mut rng, &net, 0.5).iter() {
                if upstream.contains(n) {
                    ev.set(n, v);
                }
            }
            for (p, v) in &var.control.as_ref().unwrap().preconditions {
                ev.set(p.clone(), v.clone());
            }
            ev.set(format!("do_{}", var.name), value.clone());
            if engine.evidence_rank(&ev).unwrap().is_infinite() {
                continue;
            }
            let post = engine.posterior(&ev, &var.name).unwrap();
            for (v, k) in &post.ranks {
                let expected = if *v == value { Rank::ZERO } else { Rank::INFINITY };
                check(*k == expected, || format!("network {case}: {} = {v} has rank {k}", var.name))?;
                check(oracle(&augmented, &ev, &var.name, v) == expected, || {
                    format!("network {case}: oracle disagrees on {}", var.name)
                })?;
            }
            forced += 1;
        }

        let ev = random_evidence(&mut rng, &net, 0.3);
        let mut idle = ev.clone();
        for var in net.variables().filter(|v| v.is_controllable()) {
            idle.set(format!("do_{}", var.name), "idle");
        }
        let plain = Engine::new(&net).unwrap();
        for (node, value) in all_atoms(&net) {
            let a = plain.posterior(&ev, &node).unwrap().rank(&value);
            let b = engine.posterior(&idle, &node).unwrap().rank(&value);
            check(a == b, || format!("network {case}: {node}={value} {a:?} vs idle {b:?}"))?;
            check(oracle(&augmented, &idle, &node, &value) == a.unwrap(), || {
                format!("network {case}: oracle disagrees on idle {node}")
            })?;
        }
        recovered += 1;
    }
    check(forced >= 50, || format!("only {forced} interventions exercised"))?;
    Ok(format!("{forced} interventions forced, {recovered} idle networks recovered"))
}

fn persistence_calibration() -> Outcome {
    let horizon = 6;
    for p in 1..=3 {
        let var = Variable {
            kind: Kind::Persistence { flip_surprise: r(p) },
            ..Variable::binary_event("e")
        };
        let net = Network::new().with(var, Family::prior("e", vec![Rank::ZERO; 2]));
        let tn = unfold(&net, horizon).unwrap();
        let engine = Engine::new(tn.network()).unwrap();
        let ev: Evidence = [("e@0", "true")].into_iter().collect();
        for t in 1..=horizon {
            let node = format!("e@{t}");
            let k = engine.posterior(&ev, &node).unwrap().rank("false").unwrap();
            check(k == r(p), || format!("p = {p}: κ(e⁻@{t}) = {k}"))?;
            check(oracle(tn.network(), &ev, &node, "false") == k, || format!("p = {p}, t = {t}: oracle"))?;
        }
    }
    Ok(format!("κ(e⁻@t) = p for p in 1..=3, t in 1..={horizon}"))
}

fn ancestors(net: &Network, node: &str) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    let mut stack = vec![node.to_string()];
    while let Some(n) = stack.pop() {
        for p in &net.family(&n).unwrap().parents {
            if out.insert(p.clone()) {
                stack.push(p.clone());
            }
        }
    }
    out
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        ("expanded engine reproduction", expanded_engine, Duration::from_secs(1)),
        ("expansion marginal equivalence", marginal_equivalence, Duration::from_secs(10)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("engine, negative direction", engine_negative, Duration::from_secs(5)),
        ("engine, positive direction", engine_positive, Duration::from_secs(5)),
        ("ysp projection", ysp_projection, Duration::from_secs(5)),
        ("ysp abduction", ysp_abduction, Duration::from_secs(5)),
        ("intervention screening", intervention_screening, Duration::from_secs(60)),
        ("persistence calibration", persistence_calibration, Duration::from_secs(10)),
    ];

    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > limit => Err(format!("{detail}; took {took:.2?} > {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<32} {detail} [{took:.2?} < {limit:?}]"),
            Err(why) => {
                println!("FAIL  {name:<32} {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
