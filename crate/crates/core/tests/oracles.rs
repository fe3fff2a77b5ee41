//! Cross-checks between independent implementations: graph queries against
//! path enumeration, Monte Carlo evaluation against exact expectations.

mod common;

use std::collections::BTreeSet;

use common::exhaustive_ici;
use tamperlab::agents::{FixedPolicy, Policy};
use tamperlab::cid::{find_ici_nodes, DiagramKind, EdgeKind, NodeKind};
use tamperlab::env::{default_population, EnvConfig, RecState, SourceAction, UserProfile};
use tamperlab::harness::{evaluate, render_csv};
use tamperlab::oracle::{brute_force_optimal, exact_policy_value};

fn user(name: &str) -> UserProfile {
    default_population().into_iter().find(|u| u.name == name).unwrap()
}

#[test]
fn ici_matches_path_enumeration() {
    for kind in DiagramKind::ALL {
        for k in 2..=6 {
            let cid = kind.build(k).unwrap();
            let fast: BTreeSet<String> = find_ici_nodes(&cid).unwrap().into_iter().map(|w| w.node).collect();
            assert_eq!(fast, exhaustive_ici(&cid), "{kind} k={k}");
        }
    }
}

#[test]
fn witnesses_walk_causal_edges() {
    for kind in DiagramKind::ALL {
        let cid = kind.build(5).unwrap();
        for w in find_ici_nodes(&cid).unwrap() {
            for path in &w.paths {
                assert_eq!(cid.node(&path[0]).unwrap().kind, NodeKind::Decision);
                assert_eq!(cid.node(path.last().unwrap()).unwrap().kind, NodeKind::Utility);
                assert!(path.contains(&w.node));
                assert!(path.windows(2).all(|p| cid.has_edge(&p[0], &p[1], EdgeKind::Causal)), "{path:?}");
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact_values() {
    let profile = user("moderate-left");
    let mut cfg = EnvConfig::mini(profile.clone(), 10, 1.08);
    cfg.master_seed = 5;
    for a in [SourceAction::Left, SourceAction::Centre, SourceAction::Right] {
        let policy = FixedPolicy(a);
        let exact = exact_policy_value(|_: &RecState| a, &profile, &cfg).unwrap();
        let mc = evaluate(&policy, &profile, 40_000, &cfg).unwrap();
        for (t, want) in exact.iter().enumerate() {
            let tol = mc.cum_reward_ci95[t].max(1e-3) * 1.5;
            assert!(
                (mc.cum_reward_mean[t] - want).abs() <= tol,
                "{} t={t}: {} vs {want}",
                policy.tag(),
                mc.cum_reward_mean[t]
            );
        }
    }
}

#[test]
fn optimum_dominates_fixed_policies() {
    for name in ["strong-left", "centrist", "moderate-right"] {
        let profile = user(name);
        let cfg = EnvConfig::mini(profile.clone(), 9, 1.1);
        let best = brute_force_optimal(&profile, &cfg).unwrap();
        let own = exact_policy_value(best.policy(), &profile, &cfg).unwrap();
        assert!((own.last().unwrap() - best.value).abs() < 1e-9);
        for a in [SourceAction::Left, SourceAction::Centre, SourceAction::Right] {
            let v = *exact_policy_value(|_: &RecState| a, &profile, &cfg).unwrap().last().unwrap();
            assert!(v <= best.value + 1e-12, "{name} {a:?}: {v} > {}", best.value);
        }
    }
}

#[test]
fn csv_matches_evaluation() {
    let profile = user("centrist");
    let cfg = EnvConfig::mini(profile.clone(), 6, 1.055);
    let result = evaluate(&FixedPolicy(SourceAction::Centre), &profile, 500, &cfg).unwrap();
    let text = render_csv(&result);
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    for (t, row) in rows.iter().enumerate() {
        assert_eq!(row[..4], [t as f64, 0.0, 1.0, 0.0]);
        assert_eq!(row[4], result.cum_reward_mean[t]);
        assert_eq!(row[5], result.cum_reward_ci95[t]);
    }
}
