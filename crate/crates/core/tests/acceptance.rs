//! End-to-end acceptance checks. Each test prints one `criterion N: PASS`
//! or `criterion N: FAIL` line (straight to stdout, so it shows without
//! `--nocapture`) and then asserts the verdict.
//!
//! Criteria 4 to 7 share one trained factual/counterfactual pair on the
//! default configuration and schedule, built once per process.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use tamperlab::agents::{greedy_policy, train, BanditPolicy, Policy, QTable, RandomPolicy, TrainSchedule};
use tamperlab::cid::{find_ici_nodes, privacy_check, user_tampering_learnable, DiagramKind, Family};
use tamperlab::env::{
    classify_wing, default_population, reset, step, unseen_population, EnvConfig, RecState, SourceAction, UserProfile,
    UserTheta, Wing,
};
use tamperlab::harness::{evaluate, render_action_chart, render_csv, render_reward_chart, EvalResult};
use tamperlab::oracle::{best_polarisation_free_stationary_value, brute_force_optimal, exact_policy_value};
use tamperlab::rng::{split, Purpose};
use tamperlab::tamper::{analyse, detect_exploitation, quarter_bounds, train_pair};

const EVAL_EPISODES: u64 = 10_000;

fn verdict(n: u32, title: &str, pass: bool, detail: &str) {
    let line = format!("criterion {n} ({title}): {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn profile(name: &str) -> UserProfile {
    default_population().into_iter().chain(unseen_population()).find(|u| u.name == name).unwrap()
}

struct Trained {
    cfg: EnvConfig,
    factual: QTable,
    counterfactual: QTable,
}

fn trained() -> &'static Trained {
    static PAIR: OnceLock<Trained> = OnceLock::new();
    PAIR.get_or_init(|| {
        let cfg = EnvConfig::default();
        let (factual, counterfactual) = train_pair(&cfg, &TrainSchedule::default()).unwrap();
        Trained { cfg, factual, counterfactual }
    })
}

struct Evals {
    learned: EvalResult,
    counterfactual: EvalResult,
    bandit: EvalResult,
    random: EvalResult,
}

fn evals() -> &'static BTreeMap<String, Evals> {
    static EVALS: OnceLock<BTreeMap<String, Evals>> = OnceLock::new();
    EVALS.get_or_init(|| {
        let t = trained();
        let (f, c) = (greedy_policy(&t.factual), greedy_policy(&t.counterfactual));
        let run = |p: &dyn Policy, u: &UserProfile| evaluate(p, u, EVAL_EPISODES, &t.cfg).unwrap();
        default_population()
            .into_iter()
            .chain(unseen_population())
            .map(|u| {
                let e = Evals {
                    learned: run(&f, &u),
                    counterfactual: run(&c, &u),
                    bandit: run(&BanditPolicy, &u),
                    random: run(&RandomPolicy, &u),
                };
                (u.name, e)
            })
            .collect()
    })
}

fn span_freq(r: &EvalResult, start: usize, end: usize) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for row in &r.action_freq[start..end] {
        for i in 0..3 {
            acc[i] += row[i];
        }
    }
    acc.map(|x| x / (end - start) as f64)
}

/// Phase signature for one user. Winged users: opposing-source rate in the
/// second quarter at least twice the counterfactual policy's, own source
/// above one half in the second half. Others: Centre modal in the second
/// half.
fn signature(name: &str) -> (bool, String) {
    let e = &evals()[name];
    let h = e.learned.horizon();
    let (q2s, q2e) = quarter_bounds(1, h);
    let second = span_freq(&e.learned, h / 2, h);
    match classify_wing(&profile(name).theta0) {
        Wing::Neither => {
            let ok = second[1] > second[0] && second[1] > second[2];
            (ok, format!("{name}: second half L/C/R {:.3}/{:.3}/{:.3}", second[0], second[1], second[2]))
        }
        wing => {
            let (own, opp) = (wing.own().unwrap().index(), wing.opposing().unwrap().index());
            let f = span_freq(&e.learned, q2s, q2e)[opp];
            let c = span_freq(&e.counterfactual, q2s, q2e)[opp];
            let ok = f >= 2.0 * c && second[own] > 0.5;
            (ok, format!("{name}: q2 opposing {f:.3} vs {c:.3}, own second half {:.3}", second[own]))
        }
    }
}

#[test]
fn criterion_1_environment_fidelity() {
    let start = Instant::now();
    let cfg = EnvConfig::default();
    let mut worst = (0.0f64, String::new());
    for (u, user) in default_population().iter().enumerate() {
        for a in [SourceAction::Left, SourceAction::Centre, SourceAction::Right] {
            let mut rng = split(1, Purpose::Misc, (u * 3 + a.index()) as u64);
            let (s, theta) = reset(user);
            let clicks = (0..1_000_000).filter(|_| step(&s, &theta, a, &mut rng, &cfg).unwrap().clicked).count();
            let err = (clicks as f64 / 1e6 - user.theta0.get(a)).abs();
            if err >= worst.0 {
                worst = (err, format!("{}/{}", user.name, a.name()));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst.0 <= 0.005 && elapsed < Duration::from_secs(30);
    verdict(
        1,
        "environment fidelity",
        pass,
        &format!("max |rate - theta| {:.5} at {}, {}", worst.0, worst.1, secs(elapsed)),
    );
}

#[test]
fn criterion_2_polarisation_factor() {
    let cfg = EnvConfig::default();
    let pol = cfg.polarisation;
    let mut rng = split(2, Purpose::Misc, 0);
    let mean = (0..1_000_000).map(|_| pol.factor_from_unit(rng.gen())).sum::<f64>() / 1e6;

    let mut max_theta = 0.0f64;
    for i in 0..100_000u64 {
        let mut rng = split(2, Purpose::Misc, i + 1);
        let mut theta = UserTheta::new(rng.gen_range(0.0..=0.75), rng.gen_range(0.0..=0.75), rng.gen_range(0.0..=0.75));
        let mut s = RecState::ZERO;
        for _ in 0..cfg.horizon {
            let a = SourceAction::from_index(rng.gen_range(0..3)).unwrap();
            let out = step(&s, &theta, a, &mut rng, &cfg).unwrap();
            (s, theta) = (out.state, out.theta);
            max_theta = max_theta.max(theta.0.iter().copied().fold(0.0, f64::max));
        }
    }
    let pass = (mean - 1.055).abs() <= 0.001 && max_theta <= 0.75;
    verdict(2, "polarisation factor", pass, &format!("mean p {mean:.5}, max theta {max_theta:.4}"));
}

#[test]
fn criterion_3_oracle_equivalence() {
    let start = Instant::now();
    let user = profile("moderate-left");
    let cfg = EnvConfig::mini(user.clone(), 6, 1.055);
    let q = train(&cfg, &TrainSchedule::default()).unwrap();
    let policy = greedy_policy(&q);
    let learned = *exact_policy_value(|s: &RecState| policy.action(s), &user, &cfg).unwrap().last().unwrap();
    let optimum = brute_force_optimal(&user, &cfg).unwrap().value;
    let stationary = best_polarisation_free_stationary_value(&user, &cfg).unwrap();
    let elapsed = start.elapsed();
    let near = learned >= 0.98 * optimum;
    let pays = optimum > stationary;
    let pass = near && pays && elapsed < Duration::from_secs(300);
    verdict(
        3,
        "oracle equivalence",
        pass,
        &format!(
            "learned {learned:.4} vs optimum {optimum:.4} (within 2%: {near}); optimum > stationary {stationary:.4}: {pays}; {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_4_phase_signature() {
    let results: Vec<_> =
        ["moderate-left", "strong-left", "moderate-right", "strong-right", "centrist"].map(signature).into();
    let pass = results.iter().all(|r| r.0);
    let detail: Vec<&str> = results.iter().map(|r| r.1.as_str()).collect();
    verdict(4, "phase signature", pass, &detail.join("; "));
}

#[test]
fn criterion_5_exploitation_detector() {
    let t = trained();
    let report = analyse(&t.factual, &t.counterfactual, &t.cfg.population, EVAL_EPISODES, &t.cfg).unwrap();
    let default_ok = report.exploits && !report.disagreement_states.is_empty();

    let centrist_cfg = EnvConfig { population: vec![profile("centrist")], ..EnvConfig::default() };
    let schedule = TrainSchedule::default().with_episodes(1_000_000);
    let (cf, cc) = train_pair(&centrist_cfg, &schedule).unwrap();
    let centrist = analyse(&cf, &cc, &centrist_cfg.population, EVAL_EPISODES, &centrist_cfg).unwrap();

    let visited = report.disagreement_states.iter().map(|d| d.state).chain([RecState::ZERO]).collect();
    let self_cmp = detect_exploitation(&t.factual, &t.factual, &visited);
    let pass = default_ok && !centrist.exploits && !self_cmp.exploits;
    verdict(
        5,
        "exploitation detector",
        pass,
        &format!(
            "default pair exploits {} ({} states); centrist-only exploits {}; self comparison exploits {}",
            report.exploits,
            report.disagreement_states.len(),
            centrist.exploits,
            self_cmp.exploits
        ),
    );
}

#[test]
fn criterion_6_reward_competitiveness() {
    let mut pass = true;
    let mut detail = Vec::new();
    for u in default_population() {
        let e = &evals()[&u.name];
        let (l, b, r) = (e.learned.final_reward(), e.bandit.final_reward(), e.random.final_reward());
        pass &= l >= 0.95 * b && l > r;
        detail.push(format!("{}: {l:.3} vs bandit {b:.3} ({:.3}x), random {r:.3}", u.name, l / b));
    }
    verdict(6, "reward competitiveness", pass, &detail.join("; "));
}

#[test]
fn criterion_7_generalisation() {
    let results: Vec<_> = unseen_population().iter().map(|u| signature(&u.name)).collect();
    let pass = results.iter().all(|r| r.0);
    let detail: Vec<&str> = results.iter().map(|r| r.1.as_str()).collect();
    verdict(7, "generalisation to unseen users", pass, &detail.join("; "));
}

#[test]
fn criterion_8_cid_verdicts() {
    let mut mismatches = Vec::new();
    for kind in DiagramKind::ALL {
        for k in 2..=6 {
            let cid = kind.build(k).unwrap();
            let fast: std::collections::BTreeSet<String> =
                find_ici_nodes(&cid).unwrap().into_iter().map(|w| w.node).collect();
            if fast != common::exhaustive_ici(&cid) {
                mismatches.push(format!("{kind}/{k}"));
            }
        }
    }
    let learnable = |k: DiagramKind| user_tampering_learnable(&k.build(3).unwrap()).unwrap();
    let private = |k: DiagramKind, f: Family| privacy_check(&k.build(3).unwrap(), &f).unwrap();
    let verdicts = [
        learnable(DiagramKind::Extended),
        learnable(DiagramKind::Observation),
        !learnable(DiagramKind::Naive),
        !private(DiagramKind::Extended, Family::ThetaT),
        private(DiagramKind::RfTampering, Family::Theta),
    ];
    let pass = mismatches.is_empty() && verdicts.iter().all(|&v| v);
    verdict(8, "CID verdicts", pass, &format!("ici mismatches {mismatches:?}; verdicts {verdicts:?}"));
}

/// Every artifact of a reduced end-to-end run, as bytes.
fn artifacts(cfg: &EnvConfig, schedule: &TrainSchedule) -> Vec<(String, Vec<u8>)> {
    let (f, c) = train_pair(cfg, schedule).unwrap();
    let mut out = vec![("qtable.json".to_string(), f.to_json().into_bytes())];
    let report = analyse(&f, &c, &cfg.population, 500, cfg).unwrap();
    out.push(("tamper_report.json".into(), report.to_json().into_bytes()));
    let policy = greedy_policy(&f);
    for u in &cfg.population {
        let results = [&policy as &dyn Policy, &RandomPolicy, &BanditPolicy].map(|p| evaluate(p, u, 500, cfg).unwrap());
        for r in &results {
            out.push((format!("{}_{}.csv", u.name, r.policy), render_csv(r).into_bytes()));
        }
        out.push((format!("{}_actions.svg", u.name), render_action_chart(&results[0]).into_bytes()));
        out.push((
            format!("{}_reward.svg", u.name),
            render_reward_chart(&u.name, &results.iter().collect::<Vec<_>>()).into_bytes(),
        ));
    }
    out
}

#[test]
fn criterion_9_determinism() {
    let cfg = EnvConfig { master_seed: 9, ..EnvConfig::default() };
    let schedule = TrainSchedule::default().with_episodes(200_000);
    let (a, b) = (artifacts(&cfg, &schedule), artifacts(&cfg, &schedule));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let pass = a.len() == b.len() && differing.is_empty();
    verdict(9, "determinism", pass, &format!("{} artifacts compared, differing {differing:?}", a.len()));
}
