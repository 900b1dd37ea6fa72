//! Acceptance suite: one PASS/FAIL line per primary criterion. Run with
//! `cargo test -p jbw-core --test acceptance -- --nocapture` to see the report.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use common::{check_scent_schedule, enumerate, piecewise_box, sample_histogram, tiny_config, total_variation};
use jbw_core::baselines::{GreedyAgent, RandomAgent};
use jbw_core::bench::bench_generation;
use jbw_core::env::{Environment, ObservationSpec};
use jbw_core::perception::{fov_factor, occlusion_factor, DiffusionKernel};
use jbw_core::reward::{parse_schedule, RewardExpr, RewardSchedule};
use jbw_core::testing::empty_world;
use jbw_core::{presets, Action, Direction, Pcg32, Position, Simulator, WorldConfig};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn preset(name: &str) -> WorldConfig {
    presets::by_name(name).expect("known preset").expect("preset parses")
}

fn point_process() -> Check {
    let start = Instant::now();
    let config = tiny_config(3, r#"[{"name": "A", "scent": [1], "color": [1], "intensity": "Constant[0]",
        "interactions": {"A": "PiecewiseBox[2,5,1,-2]"}}]"#);
    let exact = enumerate(3, 1, |items| {
        let mut e = 0.0;
        for (i, a) in items.iter().enumerate() {
            for (j, b) in items.iter().enumerate() {
                if i != j {
                    e += piecewise_box(a.0, b.0, 2.0, 5.0, 1.0, -2.0);
                }
            }
        }
        e
    });
    let sampled = sample_histogram(&config, &[], 500_000, 10_000, 10, 7);
    let tv = total_variation(&exact, &sampled);
    let secs = start.elapsed().as_secs_f64();
    ensure(tv < 0.05 && secs < 60.0, format!("TV {tv:.4} (< 0.05) over 2^9 configurations, 5e5 samples in {secs:.1} s (< 60 s)"))
}

fn scent() -> Check {
    let schedules = 100;
    for seed in 0..schedules {
        catch_unwind(|| check_scent_schedule(1000 + seed)).map_err(|_| format!("schedule {seed} disagrees with dense iteration"))?;
    }
    let k = DiffusionKernel::cached(0.4, 0.14);
    let closed = 1.0 / (1.0 - 0.4 - 4.0 * 0.14);

    // End to end: one persistent item, scent summed over the kernel window.
    let mut config = empty_world(32, r#"["TurnLeft"]"#, 360.0);
    config.item_types[0].scent = vec![1.0, 0.0, 0.0];
    let mut sim = Simulator::new(config);
    let id = sim.spawn_agent_at(Position::new(0, 0), Direction::North).unwrap();
    let r = k.radius();
    sim.generate_around(Position::ORIGIN, 2 * r + 2);
    assert!(sim.place_item(Position::new(0, 0), 0));
    for _ in 0..1000 {
        sim.request_action(id, Action::TurnLeft).unwrap();
    }
    let mut total = 0.0;
    for y in -r..=r {
        for x in -r..=r {
            total += sim.scent_at(Position::new(x, y)).unwrap()[0];
        }
    }
    ensure(
        (k.mass(u64::MAX) - closed).abs() < 1e-6 && (total - closed).abs() < 1e-6,
        format!("{schedules} schedules x {} steps within 1e-9; persistent unit source mass {total:.9} vs 1/(1-λ-4α) = {closed}", common::SCENT_STEPS),
    )
}

fn vision() -> Check {
    let mut worst: f64 = 0.0;
    for d in Direction::ALL {
        for x in -8i64..=8 {
            for y in -8i64..=8 {
                worst = worst.max((fov_factor(360.0, Position::new(x, y), d) - 1.0).abs());
            }
        }
    }
    for k in 1..=8 {
        worst = worst.max(fov_factor(180.0, Position::new(0, -k), Direction::North).abs());
        worst = worst.max((fov_factor(180.0, Position::new(k, 0), Direction::North) - 0.5).abs());
        worst = worst.max((fov_factor(180.0, Position::new(-k, 0), Direction::North) - 0.5).abs());
    }
    let collinear = [
        occlusion_factor(Position::new(4, 0), &[(Position::new(2, 0), 1.0)]),
        occlusion_factor(Position::new(0, -5), &[(Position::new(0, -1), 1.0)]),
        occlusion_factor(Position::new(3, 3), &[(Position::new(1, 1), 1.0)]),
    ];
    ensure(
        worst <= 1e-12 && collinear.iter().all(|&f| f == 0.0),
        format!("fov 360/180 analytic cases max error {worst:e}; collinear o=1 occluders give {collinear:?}"),
    )
}

/// Cross-platform anchors: the digest after 10^4 random steps, frozen from
/// this implementation. Any other platform must reproduce them bit for bit.
const FROZEN_DIGESTS: [(&str, &str); 3] = [
    ("table2_3", "fd48e1c6ca9892bc42a692be4593caa1cae6262f023343108e4718b54a93b478"),
    ("table4_5", "0ef029d9b871617c37c319308c44a1558295ce4cfec985a104b638ff61863d18"),
    ("table6_7", "e8ac29822b54a0dd344126bcb9758fd469526b32719873428e92ffe171a28b7a"),
];

fn replay(sim: &mut Simulator, id: jbw_core::AgentId, actions: &[Action]) {
    for &a in actions {
        sim.request_action(id, a).unwrap().expect("single agent completes the turn");
    }
}

fn determinism() -> Check {
    let steps = 10_000;
    let mut details = Vec::new();
    for (name, frozen) in FROZEN_DIGESTS {
        let config = preset(name);
        let mut policy = RandomAgent::new(config.agent.action_space.clone(), config.item_count() as u32, 42);
        let actions: Vec<Action> = (0..steps).map(|_| policy.act()).collect();

        let run = || {
            let mut sim = Simulator::new(config.clone());
            let id = sim.add_agent().unwrap();
            replay(&mut sim, id, &actions);
            sim.digest()
        };
        let (a, b) = (run(), run());

        let mut sim = Simulator::new(config.clone());
        let id = sim.add_agent().unwrap();
        replay(&mut sim, id, &actions[..steps / 2]);
        let bytes = sim.save();
        drop(sim);
        let mut resumed = Simulator::load(&bytes).map_err(|e| format!("{name}: load failed: {e}"))?;
        replay(&mut resumed, id, &actions[steps / 2..]);
        let c = resumed.digest();

        if a != b || a != c {
            return Err(format!("{name}: run {a}, rerun {b}, save/load at {} {c}", steps / 2));
        }
        if a != frozen {
            return Err(format!("{name}: digest {a} differs from the frozen cross-platform value {frozen}"));
        }
        details.push(format!("{name} {}", &a[..12]));
    }
    Ok(format!("{steps}-step runs: rerun and midpoint save/load identical, frozen digests match ({})", details.join(", ")))
}

fn greedy_windows(seed: u64, windows: usize) -> Vec<f64> {
    let mut config = preset("table2_3");
    config.seed = seed;
    let schedule = parse_schedule("Collect[JellyBean]", &config).unwrap();
    let mut env = Environment::new(config.clone(), Arc::new(schedule), ObservationSpec::VISION).unwrap();
    let mut agent = GreedyAgent::for_config(&config, "JellyBean", &[], seed ^ 0x9E37_79B9_7F4A_7C15).unwrap();
    let mut obs = env.observe().unwrap();
    let mut out = vec![0.0; windows];
    for t in 0..windows * 100_000 {
        let o = env.step(agent.act(obs.vision.as_ref().unwrap())).unwrap();
        out[t / 100_000] += o.reward / 100_000.0;
        obs = o.observation;
    }
    out
}

fn wall_trap() -> Result<usize, String> {
    // A short wall between the agent and a jelly bean. With opaque walls the
    // far wall cells look empty, the planned path runs through them and the
    // agent walks into the wall repeatedly; see-through walls never do that.
    let walls = [(-5, -2), (-4, -2), (-4, -1), (-3, -1)];
    let jelly = Position::new(-5, -6);
    let run = |occlusion: f64| {
        let mut config = empty_world(32, r#"["MoveForward","TurnLeft","TurnRight"]"#, 360.0);
        config.item_types[2].occlusion = occlusion;
        let mut sim = Simulator::new(config.clone());
        let id = sim.spawn_agent_at(Position::ORIGIN, Direction::North).unwrap();
        sim.generate_around(Position::ORIGIN, 40);
        for (x, y) in walls {
            assert!(sim.place_item(Position::new(x, y), 2));
        }
        assert!(sim.place_item(jelly, 0));
        let mut agent = GreedyAgent::for_config(&config, "JellyBean", &[], 1).unwrap();
        let (mut streak, mut longest, mut into_wall) = (0, 0, 0);
        for _ in 0..300 {
            let tr = sim.request_action(id, agent.act(&sim.vision(id).unwrap())).unwrap().unwrap().remove(0);
            if tr.items_collected[0] > 0 {
                break;
            }
            if tr.action == Action::MoveForward && !tr.moved {
                let ahead = tr.position + tr.direction.forward();
                into_wall += walls.contains(&(ahead.x, ahead.y)) as usize;
                streak += 1;
                longest = longest.max(streak);
            } else {
                streak = 0;
            }
        }
        (longest, into_wall)
    };
    let (longest, into_wall) = run(1.0);
    let (clear_longest, _) = run(0.0);
    if longest >= 3 && into_wall >= 3 && clear_longest == 0 {
        Ok(longest)
    } else {
        Err(format!("occluded: {longest} consecutive blocked moves ({into_wall} into the wall); transparent: {clear_longest}"))
    }
}

fn greedy() -> Check {
    // Mean over independent runs, as for the reported curves; six 100k-step
    // windows, the first one is warm-up.
    let seeds = 4;
    let windows = 6;
    let mut mean = vec![0.0; windows];
    let mut per_run = Vec::new();
    for seed in 0..seeds {
        let w = greedy_windows(seed, windows);
        for (m, v) in mean.iter_mut().zip(&w) {
            *m += v / seeds as f64;
        }
        per_run.push(w);
    }
    let last = &mean[windows - 5..];
    let avg = last.iter().sum::<f64>() / 5.0;
    let drift = last.iter().map(|v| (v - avg).abs() / avg).fold(0.0, f64::max);
    let final_rate = mean[windows - 1];
    let trap = wall_trap();
    let per_run_drift: Vec<String> = per_run
        .iter()
        .map(|w| {
            let l = &w[windows - 5..];
            let a = l.iter().sum::<f64>() / 5.0;
            format!("{:.0}%", 100.0 * l.iter().map(|v| (v - a).abs() / a).fold(0.0, f64::max))
        })
        .collect();
    let detail = format!(
        "final 100k-window rate {final_rate:.4} over {seeds} runs, last 5 windows {:?}, max deviation {:.1}% (< 20%; per run {}); wall trap: {}",
        last.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
        100.0 * drift,
        per_run_drift.join(" "),
        match &trap {
            Ok(n) => format!("{n} consecutive blocked moves into an occluded wall, none without occlusion"),
            Err(e) => format!("not reproduced ({e})"),
        }
    );
    ensure(final_rate > 0.0 && drift < 0.2 && trap.is_ok(), detail)
}

fn throughput() -> Check {
    let config = preset("table2_3");
    let report = bench_generation(&config, 20);
    ensure(
        report.patches_per_second >= 1.0,
        format!("{:.1} patches/s on table2_3 ({}x{}, {} MH iterations, single thread; >= 1.0)", report.patches_per_second, config.patch_size, config.patch_size, config.mh_iterations),
    )
}

fn random_expr_text(rng: &mut Pcg32) -> String {
    let items = ["JellyBean", "Banana", "Onion", "Wall", "Tree", "Truffle"];
    let terms = 1 + rng.below(5);
    let mut parts = Vec::new();
    for _ in 0..terms {
        let value = match rng.below(3) {
            0 => None,
            1 => Some(rng.below(11) as f64 - 5.0),
            _ => Some((rng.next_f64() - 0.5) * 2e6),
        };
        let pad = " ".repeat(rng.below(3) as usize);
        let item = items[rng.below(items.len() as u32) as usize];
        let v = |prefix: &str| value.map(|v| format!("{prefix}{pad}{v}{pad}")).unwrap_or_default();
        parts.push(match (rng.below(4), value) {
            (0, None) => "Action".to_string(),
            (0, Some(_)) => format!("Action[{}]", v("")),
            (1, None) => "Explore".to_string(),
            (1, Some(_)) => format!("Explore{pad}[{}]", v("")),
            (2, _) => format!("Collect[{pad}{item}{}]", v(",")),
            _ => format!("Avoid[{item}{pad}{}]", v(",")),
        });
    }
    parts.join(&format!("{}&{}", " ".repeat(rng.below(2) as usize), " ".repeat(rng.below(2) as usize)))
}

fn dsl() -> Check {
    let config = preset("table2_3");
    let mut rng = Pcg32::from_seed(2024);
    let n = 10_000;
    for _ in 0..n {
        let text = random_expr_text(&mut rng);
        let parsed = RewardExpr::parse(&text).map_err(|e| format!("`{text}`: {e}"))?;
        let printed = parsed.to_string();
        let reparsed = RewardExpr::parse(&printed).map_err(|e| format!("printed `{printed}`: {e}"))?;
        if reparsed != parsed || reparsed.to_string() != printed {
            return Err(format!("`{text}` printed as `{printed}` does not round-trip"));
        }
        let stages = 1 + rng.below(3);
        let schedule_text = format!(
            "Cyclical({})",
            (0..stages).map(|_| format!("{} : {}", random_expr_text(&mut rng), 1 + rng.below(200_000))).collect::<Vec<_>>().join("; ")
        );
        let schedule = parse_schedule(&schedule_text, &config).map_err(|e| format!("`{schedule_text}`: {e}"))?;
        if parse_schedule(&schedule.to_string(), &config).ok().as_ref() != Some(&schedule) {
            return Err(format!("schedule `{schedule_text}` does not round-trip"));
        }
    }
    let s = parse_schedule("Cyclical(Collect[JellyBean] & Avoid[Onion] : 100000; Avoid[JellyBean] & Collect[Onion] : 100000)", &config).unwrap();
    let (a, b) = match &s {
        RewardSchedule::Cyclical(stages) => (&stages[0].0, &stages[1].0),
        _ => return Err("not parsed as Cyclical".into()),
    };
    let expected = [(0, a), (99_999, a), (100_000, b), (200_000, a)];
    for (t, want) in expected {
        if s.at(t) != want {
            return Err(format!("Cyclical at {t} returned `{}`", s.at(t)));
        }
    }
    Ok(format!("{n} fuzzed expressions and schedules print/parse idempotent; Cyclical correct at 0, 99999, 100000, 200000"))
}

fn endurance() -> Check {
    let config = preset("table2_3");
    let mut sim = Simulator::new(config.clone());
    let id = sim.add_agent().unwrap();
    let mut policy = RandomAgent::new(config.agent.action_space.clone(), config.item_count() as u32, 9);
    let steps = 1_000_000u64;
    let (mut min, mut max) = (Position::ORIGIN, Position::ORIGIN);
    let mut longest_log = 0;
    for k in 0..steps {
        let tr = sim.request_action(id, policy.act()).unwrap().expect("turn completes").remove(0);
        if sim.time() != k + 1 || tr.time != k + 1 {
            return Err(format!("time {} after {} steps", sim.time(), k + 1));
        }
        min = Position::new(min.x.min(tr.position.x), min.y.min(tr.position.y));
        max = Position::new(max.x.max(tr.position.x), max.y.max(tr.position.y));
        longest_log = longest_log.max(sim.scent_log().len());
    }
    // Patches: only those within generation reach of the visited box, plus
    // one ring of sampling context.
    let p = config.patch_size as i64;
    let reach = sim.generation_radius() + p;
    let lo = Position::new(min.x - reach, min.y - reach).patch(config.patch_size);
    let hi = Position::new(max.x + reach, max.y + reach).patch(config.patch_size);
    let patch_bound = ((hi.x - lo.x + 1) * (hi.y - lo.y + 1)) as usize;
    let patches = sim.map().patches().count();
    // Retired scent sources: at most two per step (a move and a collection),
    // kept for tau_max steps past the last compaction.
    let tau = DiffusionKernel::cached(config.scent_decay, config.scent_diffusion).tau_max() as usize;
    let log_bound = 2 * (tau + 256 + 1);
    ensure(
        patches <= patch_bound && longest_log <= log_bound,
        format!(
            "{steps} random steps, time monotone; {patches} patches (bound {patch_bound} from the visited box {min}..{max}); scent log peak {longest_log} (bound {log_bound})"
        ),
    )
}

fn learning_curves() -> Check {
    // The deep-RL curves themselves are not reproduced; the environment side
    // of every case study must load and run.
    let cases = [
        ("table2_3", "Collect[JellyBean]"),
        ("table2_3_occlusion", "Collect[JellyBean]"),
        ("table4_5", "Collect[JellyBean]"),
        ("table6_7", "Collect[JellyBean] & Avoid[Onion]"),
        ("table6_7_occlusion", "Collect[JellyBean] & Avoid[Onion]"),
        ("table2_3", "Cyclical(Collect[JellyBean] & Avoid[Onion] : 100000; Avoid[JellyBean] & Collect[Onion] : 100000)"),
    ];
    for (name, schedule) in cases {
        let config = preset(name);
        let schedule = parse_schedule(schedule, &config).map_err(|e| format!("{name}: {e}"))?;
        let mut env = Environment::new(config.clone(), Arc::new(schedule), ObservationSpec::FULL).map_err(|e| format!("{name}: {e}"))?;
        let mut policy = RandomAgent::new(config.agent.action_space.clone(), config.item_count() as u32, 5);
        for _ in 0..200 {
            env.step(policy.act()).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    Ok("all six case-study worlds and schedules load and run with vision and scent; the PPO/LSTM curves themselves are NOT REPRODUCED (deep-RL training at scale)".into())
}

#[test]
fn primary_criteria() {
    let criteria: [(&str, Criterion); 9] = [
        ("point-process correctness", point_process),
        ("scent equivalence", scent),
        ("vision geometry", vision),
        ("determinism and persistence", determinism),
        ("greedy baseline behavior", greedy),
        ("generation throughput", throughput),
        ("reward DSL and schedules", dsl),
        ("endurance", endurance),
        ("case-study environments", learning_curves),
    ];
    let mut failed = Vec::new();
    let _ = writeln!(std::io::stdout());
    for (name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        // written to the stdout handle directly so the lines survive test output capture
        let line = match result {
            Ok(detail) => format!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed.push(name);
                format!("FAIL  {name}: {detail} [{secs:.1} s]")
            }
        };
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
