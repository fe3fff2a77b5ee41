use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use tamperlab::agents::{greedy_policy, train, BanditPolicy, Policy, QTable, RandomPolicy};
use tamperlab::cid::{find_ici_nodes, privacy_check, user_tampering_learnable, DiagramKind, Family};
use tamperlab::env::{default_population, unseen_population, EnvConfig, PolarisationConfig, UserProfile};
use tamperlab::harness::{compare, emit_csv, emit_svg_charts, RunConfig, RunManifest};
use tamperlab::oracle::{best_polarisation_free_stationary_value, brute_force_optimal};
use tamperlab::tamper::{analyse, train_pair_with, ExplorationMode};

use crate::{Cli, Command, Failure, GlobalArgs, OUT_ENV};

const ORACLE_PROFILE: &str = "moderate-left";
const ORACLE_HORIZON: u32 = 6;
const ORACLE_FACTOR: f64 = 1.055;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Train => cmd_train(g),
        Command::Evaluate { qtable, unseen } => cmd_evaluate(g, qtable, *unseen),
        Command::DetectTampering { eval_episodes, independent_exploration, unseen } => {
            let mode = if *independent_exploration { ExplorationMode::Independent } else { ExplorationMode::Frozen };
            cmd_detect(g, *eval_episodes, mode, *unseen)
        }
        Command::Oracle { profile, horizon, p } => cmd_oracle(g, profile.as_deref(), *horizon, *p),
        Command::Cid { builder, timesteps } => cmd_cid(*builder, *timesteps),
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.env.master_seed = seed;
    }
    Ok(cfg)
}

fn out_root(g: &GlobalArgs) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => g.out.clone(),
    }
}

fn run_dir(g: &GlobalArgs, command: &str, seed: u64) -> Result<PathBuf, Failure> {
    let name = g.run_id.clone().unwrap_or_else(|| format!("{command}-s{seed}"));
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(Failure::Usage(format!("invalid run id '{name}'")));
    }
    let dir = out_root(g).join(name);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn finish(mut manifest: RunManifest, dir: &Path) -> Result<(), Failure> {
    manifest.finish();
    manifest.save(&dir.join("manifest.json"))?;
    say(&format!("wrote {}\n", dir.display()));
    Ok(())
}

fn cmd_train(g: &GlobalArgs) -> Result<(), Failure> {
    let mut cfg = load_config(g)?;
    if let Some(n) = g.episodes {
        cfg.schedule.episodes = n;
    }
    let dir = run_dir(g, "train", cfg.env.master_seed)?;
    let mut manifest = RunManifest::start("train", &cfg.env);
    manifest.schedule = Some(cfg.schedule);
    let q = train(&cfg.env, &cfg.schedule)?;
    q.save(&dir.join("qtable.json"))?;
    manifest.record_output("qtable.json");
    say(&format!("trained {} episodes, {} states\n", cfg.schedule.episodes, q.len()));
    finish(manifest, &dir)
}

fn profiles(cfg: &EnvConfig, unseen: bool) -> Vec<UserProfile> {
    let mut users = cfg.population.clone();
    if unseen {
        users.extend(
            unseen_population().into_iter().filter(|u| !users.iter().any(|p| p.name == u.name)).collect::<Vec<_>>(),
        );
    }
    users
}

fn cmd_evaluate(g: &GlobalArgs, qtable: &Path, unseen: bool) -> Result<(), Failure> {
    let cfg = load_config(g)?;
    let episodes = g.episodes.unwrap_or(cfg.eval_episodes);
    if episodes == 0 {
        return Err(Failure::Usage("evaluation needs at least one episode".into()));
    }
    let q = QTable::load(qtable).with_context(|| format!("loading {}", qtable.display()))?;
    let dir = run_dir(g, "evaluate", cfg.env.master_seed)?;
    let mut manifest = RunManifest::start("evaluate", &cfg.env);
    manifest.eval_episodes = Some(episodes);

    let learned = greedy_policy(&q);
    let policies: [&dyn Policy; 3] = [&learned, &RandomPolicy, &BanditPolicy];
    let comparison = compare(&profiles(&cfg.env, unseen), &policies, episodes, &cfg.env)?;
    for r in &comparison.results {
        let path = dir.join(format!("{}_{}.csv", r.profile, r.policy));
        emit_csv(r, &path)?;
        manifest.record_output(file_name(&path));
    }
    for path in emit_svg_charts(&comparison.results, &dir.join(""))? {
        manifest.record_output(file_name(&path));
    }
    let table = comparison.summary_table();
    std::fs::write(dir.join("summary.txt"), &table).context("writing summary")?;
    manifest.record_output("summary.txt");
    say(&table);
    finish(manifest, &dir)
}

fn cmd_detect(g: &GlobalArgs, eval_episodes: Option<u64>, mode: ExplorationMode, unseen: bool) -> Result<(), Failure> {
    let mut cfg = load_config(g)?;
    if let Some(n) = g.episodes {
        cfg.schedule.episodes = n;
    }
    let episodes = eval_episodes.unwrap_or(cfg.eval_episodes);
    if episodes == 0 {
        return Err(Failure::Usage("evaluation needs at least one episode".into()));
    }
    let dir = run_dir(g, "detect-tampering", cfg.env.master_seed)?;
    let mut manifest = RunManifest::start("detect-tampering", &cfg.env);
    manifest.schedule = Some(cfg.schedule);
    manifest.eval_episodes = Some(episodes);

    let (factual, counterfactual) = train_pair_with(&cfg.env, &cfg.schedule, mode)?;
    factual.save(&dir.join("qtable.json"))?;
    counterfactual.save(&dir.join("qtable_counterfactual.json"))?;
    let report = analyse(&factual, &counterfactual, &profiles(&cfg.env, unseen), episodes, &cfg.env)?;
    report.save(&dir.join("tamper_report.json"))?;
    for name in ["qtable.json", "qtable_counterfactual.json", "tamper_report.json"] {
        manifest.record_output(name);
    }
    say(&format!("exploits: {} ({} disagreement states)\n", report.exploits, report.disagreement_states.len()));
    finish(manifest, &dir)
}

fn find_profile(name: &str, cfg: &EnvConfig) -> Option<UserProfile> {
    cfg.population.iter().cloned().chain(default_population()).chain(unseen_population()).find(|p| p.name == name)
}

fn cmd_oracle(g: &GlobalArgs, profile: Option<&str>, horizon: Option<u32>, p: Option<f64>) -> Result<(), Failure> {
    let mut cfg = match &g.config {
        Some(_) => load_config(g)?.env,
        None => {
            let user = find_profile(ORACLE_PROFILE, &EnvConfig::default()).expect("built-in user");
            EnvConfig::mini(user, ORACLE_HORIZON, ORACLE_FACTOR)
        }
    };
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    if let Some(p) = p {
        cfg.polarisation =
            PolarisationConfig { enabled: cfg.polarisation.enabled, ..PolarisationConfig::deterministic(p) };
    }
    let user = match profile {
        Some(name) => find_profile(name, &cfg).ok_or_else(|| Failure::Usage(format!("unknown profile '{name}'")))?,
        None => cfg.population[0].clone(),
    };
    cfg.population = vec![user.clone()];
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let solution = brute_force_optimal(&user, &cfg)?;
    let stationary = best_polarisation_free_stationary_value(&user, &cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "profile: {}", user.name);
    let _ = writeln!(text, "horizon: {}", cfg.horizon);
    let _ = writeln!(text, "optimal value: {}", solution.value);
    let _ = writeln!(text, "best polarisation-free stationary value: {stationary}");
    let _ = writeln!(text, "states: {}", solution.state_count());
    let _ = writeln!(text, "# state opposing_count action value");
    for (s, a, v) in solution.sorted_entries() {
        let _ = writeln!(text, "{} {} {} {}", s.rec, s.opposing_count, a.name(), v);
    }
    say(&text);

    let dir = run_dir(g, "oracle", cfg.master_seed)?;
    let mut manifest = RunManifest::start("oracle", &cfg);
    std::fs::write(dir.join("oracle.txt"), &text).context("writing oracle dump")?;
    manifest.record_output("oracle.txt");
    finish(manifest, &dir)
}

fn cmd_cid(builder: DiagramKind, timesteps: usize) -> Result<(), Failure> {
    let cid = builder.build(timesteps).map_err(|e| Failure::Usage(e.to_string()))?;
    say(&cid.dump());
    let ici = find_ici_nodes(&cid).map_err(anyhow::Error::from)?;
    let nodes: Vec<&str> = ici.iter().map(|w| w.node.as_str()).collect();
    say(&format!("ici: {}\n", nodes.join(" ")));
    for w in &ici {
        for path in &w.paths {
            say(&format!("  {}: {}\n", w.node, path.join(" -> ")));
        }
    }
    let learnable = user_tampering_learnable(&cid).map_err(anyhow::Error::from)?;
    say(&format!("user tampering: {}\n", if learnable { "LEARNABLE" } else { "NOT LEARNABLE" }));
    let mut checked = false;
    for family in [Family::ThetaT, Family::Theta] {
        if cid.nodes().any(|n| n.family == family) {
            checked = true;
            let private = privacy_check(&cid, &family).map_err(anyhow::Error::from)?;
            say(&format!("privacy {}: {}\n", family.symbol(), if private { "SATISFIED" } else { "VIOLATED" }));
        }
    }
    if !checked {
        say("privacy: no preference nodes\n");
    }
    Ok(())
}

/// Writes to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
