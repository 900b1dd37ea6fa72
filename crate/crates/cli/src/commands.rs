use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use jbw_core::baselines::{GreedyAgent, RandomAgent};
use jbw_core::bench::bench_generation;
use jbw_core::env::{EnvBatch, EnvObservation, Environment, ObservationSpec};
use jbw_core::metrics::{reward_rate, write_metrics_csv};
use jbw_core::reward::{parse_schedule, DslError, RewardExpr, RewardSchedule};
use jbw_core::{presets, Action, Simulator, WorldConfig};
use jbw_server::{CoreOptions, Endpoints, ServerCore};

use crate::actions;
use crate::{AgentKind, BenchArgs, Failure, ReplayArgs, RewardArgs, RunArgs, ServeArgs, WorldArgs};

const DEFAULT_REWARD: &str = "Collect[JellyBean]";

fn load_config(world: &WorldArgs) -> Result<WorldConfig, Failure> {
    let mut config = presets::load(&world.config).map_err(|e| Failure::Config(format!("config `{}`: {e}", world.config)))?;
    if let Some(seed) = world.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_save(path: &Path) -> Result<Simulator, Failure> {
    Simulator::load_from(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn dsl_failure(text: &str, e: &DslError) -> Failure {
    let line_start = text[..text.char_indices().nth(e.position).map_or(text.len(), |(i, _)| i)].rfind('\n').map_or(0, |i| i + 1);
    let column = text[line_start..].chars().take(e.position - text[..line_start].chars().count()).count();
    let line = text[line_start..].lines().next().unwrap_or("");
    Failure::Config(format!("reward: {e}\n  {line}\n  {}^", " ".repeat(column)))
}

fn schedule_text(args: &RewardArgs) -> Result<Option<String>, Failure> {
    match (&args.schedule, &args.reward) {
        (Some(s), _) => match s.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path).map(Some).map_err(|e| Failure::Config(format!("schedule file {path}: {e}"))),
            None => Ok(Some(s.clone())),
        },
        (None, Some(r)) => Ok(Some(r.clone())),
        (None, None) => Ok(None),
    }
}

fn parse_schedule_for(text: &str, config: &WorldConfig) -> Result<RewardSchedule, Failure> {
    parse_schedule(text.trim(), config).map_err(|e| dsl_failure(text.trim(), &e))
}

fn entry_path(path: &Path, i: usize, n: usize) -> PathBuf {
    if n == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    path.with_file_name(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

enum Policy {
    Greedy(GreedyAgent),
    Random(RandomAgent),
}

impl Policy {
    fn act(&mut self, obs: &EnvObservation) -> Action {
        match self {
            Policy::Greedy(g) => g.act(obs.vision.as_ref().expect("greedy runs with vision")),
            Policy::Random(r) => r.act(),
        }
    }
}

/// Greedy defaults from the first schedule stage: walk to the first
/// positively rewarded item, steer around negatively rewarded ones.
fn greedy_targets(schedule: &RewardSchedule, args: &RunArgs) -> Result<(String, Vec<String>), Failure> {
    let terms = schedule.stages()[0].terms();
    let collect = |positive: bool| {
        terms.iter().filter_map(move |t| match t {
            RewardExpr::Collect(name, v) if (*v > 0.0) == positive && *v != 0.0 => Some(name.clone()),
            _ => None,
        })
    };
    let target = match &args.target {
        Some(t) => t.clone(),
        None => collect(true).next().ok_or_else(|| Failure::Usage("the greedy agent needs --target: the reward has no positive Collect term".into()))?,
    };
    let avoid = if args.avoid.is_empty() { collect(false).collect() } else { args.avoid.clone() };
    Ok((target, avoid))
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    if args.agent == AgentKind::External {
        return Err(Failure::Usage("external agents connect over the network; start a world with `jbw serve`".into()));
    }
    if args.steps == 0 || args.window == 0 || args.batch == 0 || args.stride == 0 {
        return Err(Failure::Usage("--steps, --window, --stride and --batch must be at least 1".into()));
    }
    if args.load.is_some() && args.batch > 1 {
        return Err(Failure::Usage("--load resumes a single world; it cannot be combined with --batch".into()));
    }
    let spec = if args.agent == AgentKind::Greedy { ObservationSpec::VISION } else { ObservationSpec::NONE };
    let text = schedule_text(&args.reward)?.unwrap_or_else(|| DEFAULT_REWARD.to_string());

    let (mut batch, config, schedule) = match &args.load {
        Some(path) => {
            let sim = load_save(path)?;
            let config = sim.config().clone();
            let schedule = parse_schedule_for(&text, &config)?;
            let env = Environment::from_simulator(sim, Arc::new(schedule.clone()), spec).map_err(|e| Failure::Config(e.to_string()))?;
            (EnvBatch::from_entries(vec![env]), config, schedule)
        }
        None => {
            let config = load_config(&args.world)?;
            let schedule = parse_schedule_for(&text, &config)?;
            let batch = EnvBatch::new(&config, schedule.clone(), args.batch, spec).map_err(|e| Failure::Runtime(e.to_string()))?;
            (batch, config, schedule)
        }
    };

    let mut policies = Vec::with_capacity(batch.len());
    for i in 0..batch.len() {
        let seed = config.seed.wrapping_add(i as u64) ^ 0x9E37_79B9_7F4A_7C15;
        policies.push(match args.agent {
            AgentKind::Greedy => {
                let (target, avoid) = greedy_targets(&schedule, &args)?;
                let avoid: Vec<&str> = avoid.iter().map(String::as_str).collect();
                let g = GreedyAgent::for_config(&config, &target, &avoid, seed)
                    .ok_or_else(|| Failure::Config(format!("unknown item type among `{target}`, {avoid:?}")))?;
                Policy::Greedy(g)
            }
            _ => Policy::Random(RandomAgent::new(config.agent.action_space.clone(), config.item_count() as u32, seed)),
        });
    }

    let start_times: Vec<u64> = batch.entries().iter().map(Environment::time).collect();
    let mut observations = batch.observe().map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut logs: Vec<Vec<Action>> = vec![Vec::new(); if args.log.is_some() { batch.len() } else { 0 }];
    let clock = Instant::now();
    for _ in 0..args.steps {
        let chosen: Vec<Action> = policies.iter_mut().zip(&observations).map(|(p, o)| p.act(o)).collect();
        let outcomes = batch.step(&chosen).map_err(|e| Failure::Runtime(e.to_string()))?;
        observations = outcomes.into_iter().map(|o| o.observation).collect();
        for (log, &a) in logs.iter_mut().zip(&chosen) {
            log.push(a);
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();

    let n = batch.len();
    for (i, env) in batch.entries().iter().enumerate() {
        let csv_path = entry_path(&args.out, i, n);
        let file = File::create(&csv_path).map_err(|e| Failure::Runtime(format!("{}: {e}", csv_path.display())))?;
        write_metrics_csv(BufWriter::new(file), start_times[i], env.rewards(), args.window, args.stride)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", csv_path.display())))?;
        write_file(&entry_path(&args.save, i, n), &env.simulator().save())?;
        if let Some(log) = &args.log {
            write_file(&entry_path(log, i, n), actions::render(&logs[i]).as_bytes())?;
        }
        let total: f64 = env.rewards().iter().sum();
        let rate = reward_rate(env.rewards(), args.window).last().copied().unwrap_or(0.0);
        println!(
            "entry {i}: seed {} time {} total_reward {total} final_reward_rate {rate} digest {}",
            env.simulator().config().seed,
            env.time(),
            env.simulator().digest()
        );
    }
    println!("steps {} elapsed {elapsed:.3}s steps_per_second {:.1}", args.steps * n as u64, (args.steps * n as u64) as f64 / elapsed.max(1e-9));
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    if args.patches == 0 {
        return Err(Failure::Usage("--patches must be at least 1".into()));
    }
    let mut config = load_config(&args.world)?;
    if let Some(k) = args.mh_iterations {
        config.mh_iterations = k;
    }
    let report = bench_generation(&config, args.patches);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    println!("patches {}  mh_iterations {}  patch_size {}", report.patches, config.mh_iterations, config.patch_size);
    println!("seconds {:.3}  patches_per_second {:.2}", report.seconds, report.patches_per_second);
    for s in &report.items_per_patch {
        println!("  {:<12} {:>10.2} ± {:.2}", s.name, s.mean, s.std_dev);
    }
    Ok(())
}

fn socket(host: &str, port: u16) -> Result<SocketAddr, Failure> {
    (host, port)
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| Failure::Usage(format!("cannot resolve {host}:{port}")))
}

pub fn serve(args: ServeArgs) -> Result<(), Failure> {
    let sim = match &args.load {
        Some(path) => load_save(path)?,
        None => Simulator::new(load_config(&args.world)?),
    };
    let schedule = schedule_text(&args.reward)?.map(|t| parse_schedule_for(&t, sim.config())).transpose()?;
    let options = CoreOptions { grace: Duration::from_secs(args.grace), save_dir: args.save_dir.clone(), schedule, ..CoreOptions::default() };
    let core = ServerCore::new(sim, options).map_err(|e| Failure::Config(e.to_string()))?;
    let endpoints = Endpoints { tcp: socket(&args.host, args.port)?, ws: Some(socket(&args.host, args.ws_port)?) };

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let sim = runtime.block_on(async {
        let handle = jbw_server::serve(core, endpoints).await.map_err(|e| Failure::Runtime(format!("bind: {e}")))?;
        println!("listening tcp={} ws={}", handle.tcp_addr, handle.ws_addr.expect("ws endpoint requested"));
        let _ = std::io::stdout().flush();
        tokio::signal::ctrl_c().await.map_err(|e| Failure::Runtime(e.to_string()))?;
        Ok::<_, Failure>(handle.shutdown().await)
    })?;
    sim.save_to(&args.save).map_err(|e| Failure::Runtime(format!("{}: {e}", args.save.display())))?;
    println!("saved {} at time {} digest {}", args.save.display(), sim.time(), sim.digest());
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Result<(), Failure> {
    let mut sim = match &args.load {
        Some(path) => load_save(path)?,
        None => Simulator::new(load_config(&args.world)?),
    };
    let text = std::fs::read_to_string(&args.actions).map_err(|e| Failure::Config(format!("{}: {e}", args.actions.display())))?;
    let log = actions::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", args.actions.display())))?;
    let agent = match sim.agent_count() {
        0 => sim.add_agent().map_err(|e| Failure::Runtime(e.to_string()))?,
        1 => sim.agents().next().expect("one agent").id,
        n => return Err(Failure::Config(format!("replay drives a single agent; the save has {n}"))),
    };
    for (k, &a) in log.iter().enumerate() {
        sim.request_action(agent, a).map_err(|e| Failure::Runtime(format!("action {}: {e}", k + 1)))?;
    }
    println!("time {}", sim.time());
    println!("digest {}", sim.digest());
    Ok(())
}
