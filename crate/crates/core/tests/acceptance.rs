//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion fails for a reason other than the known LIS delay gap, which is
//! reported as FAIL and checked against its characterization instead.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use radio_aqt::adversary::{
    check_admissibility, script_sis_reactive_instability, script_tie_blocking, InjectionEvent, TieScriptKind,
};
use radio_aqt::analysis::{
    check_bounds, detect_instability, lis_bounds, lis_fixed_point, lis_transit_bound_at, BoundParams, StabilityVerdict,
};
use radio_aqt::campaign::{bound_case, round_robin_case, BoundCase};
use radio_aqt::engine::{run, ExecutionConfig, HearingControl, SuccessModel};
use radio_aqt::oracle::{
    certify_link_latency, certify_node_latency, certify_schedule_link_latency, OracleSchedule, ScriptedSchedule,
    TransmitterArray,
};
use radio_aqt::rational::BigRational;
use radio_aqt::scenario::{NetworkKind, Overrides, Scenario};
use radio_aqt::scheduling::{ArbitraryRule, PermanentRule, Policy, TieBreak};
use radio_aqt::{NetworkGraph, Rate};
use sha2::{Digest, Sha256};

const CAMPAIGN_SEEDS: u64 = 100;
const CAMPAIGN_HORIZON: u64 = 2000;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

/// A criterion either passes or fails; `expected_failure` marks the failures
/// whose characterization held, so they do not fail the suite.
struct Outcome {
    passed: bool,
    detail: String,
    expected_failure: bool,
}

impl Outcome {
    fn pass_if(passed: bool, detail: String) -> Self {
        Self { passed, detail, expected_failure: false }
    }
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = script_sis_reactive_instability(4, 4, 10).expect("script builds");
    let config = ExecutionConfig {
        graph: s.graph.clone(),
        injections: s.events.clone(),
        policy: Policy::Sis,
        tie: TieBreak::Arbitrary(ArbitraryRule::FixedId),
        oracle: OracleSchedule::Scripted(s.schedule.clone()),
        hearing: HearingControl::Reactive,
        success: SuccessModel::ScriptedLinks,
        horizon: s.horizon,
        seed: 0,
    };
    let trace = run(&config).expect("script runs");
    let elapsed = start.elapsed();
    let totals = trace.totals();
    let at: Vec<usize> = s.checkpoints.iter().map(|&c| totals[c as usize]).collect();
    let increments: Vec<i64> =
        std::iter::once(at[0] as i64).chain(at.windows(2).map(|w| w[1] as i64 - w[0] as i64)).collect();
    let exact = increments.iter().all(|&d| d == 4) && at.len() == 10;
    let rate = Rate::new(1, 8).unwrap();
    let admissible = check_admissibility(&s.events, rate, 4, s.horizon).passed();
    let certified = certify_link_latency(&trace, 6).passed();
    Outcome::pass_if(
        exact && admissible && certified && elapsed < Duration::from_secs(1),
        format!(
            "iteration-end totals {at:?}, increments all 4: {exact}, admissible at r=1/8 b=4: {admissible}, \
             link latency 6 certified: {certified}, {} ms",
            elapsed.as_millis()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let s = tie_blocking_config();
    let trace = run(&s).expect("tie script runs");
    let elapsed = start.elapsed();
    let delivered = trace.deliveries();
    let always_two = trace.rounds.iter().all(|r| r.total == 2 && r.delivered.is_empty());
    Outcome::pass_if(
        delivered == 0 && always_two && trace.rounds.len() == 1000 && elapsed < Duration::from_secs(1),
        format!(
            "{} rounds, {delivered} deliveries, 2 packets queued every round: {always_two}, {} ms",
            trace.rounds.len(),
            elapsed.as_millis()
        ),
    )
}

fn tie_blocking_config() -> ExecutionConfig {
    let s = script_tie_blocking(1000, TieScriptKind::Blocking).expect("script builds");
    ExecutionConfig {
        graph: s.graph,
        injections: s.events,
        policy: Policy::Lis,
        tie: TieBreak::Arbitrary(ArbitraryRule::Scripted(s.tie_script.expect("tie script"))),
        oracle: OracleSchedule::Scripted(s.schedule),
        hearing: HearingControl::Reactive,
        success: SuccessModel::ScriptedLinks,
        horizon: s.horizon,
        seed: 0,
    }
}

/// Outcome of one campaign run, with the oracle and adversary preconditions
/// checked on the run itself.
struct CampaignRun {
    seed: u64,
    params: BoundParams,
    preconditions: bool,
    queue: bool,
    delay: bool,
    observed_delay: u64,
    delay_bound: BigRational,
    /// Both bounds evaluated with one more hop than the longest simple path.
    shifted: bool,
}

fn campaign(policy: Policy, hearing: HearingControl, tie: impl Fn(u64) -> TieBreak) -> Vec<CampaignRun> {
    (0..CAMPAIGN_SEEDS)
        .map(|seed| {
            let BoundCase { config, params, .. } =
                bound_case(seed, policy, hearing, tie(seed), CAMPAIGN_HORIZON).expect("case builds");
            let OracleSchedule::Scripted(schedule) = &config.oracle else {
                unreachable!("campaigns use scripted oracles")
            };
            let static_ok =
                certify_schedule_link_latency(schedule, &config.graph.links(), params.h, CAMPAIGN_HORIZON).passed();
            let admissible = check_admissibility(&config.injections, params.r, params.b, CAMPAIGN_HORIZON).passed();
            let trace = run(&config).expect("case runs");
            let traced_ok = certify_link_latency(&trace, params.h).passed();
            let report = check_bounds(&trace, policy, params).expect("bounds defined");
            let shifted =
                check_bounds(&trace, policy, BoundParams { d: params.d + 1, ..params }).expect("bounds defined");
            CampaignRun {
                seed,
                params,
                preconditions: static_ok && admissible && traced_ok && config.graph.node_count() <= 8,
                queue: report.queue_pass,
                delay: report.delay_pass,
                observed_delay: report.observed_max_delay,
                delay_bound: report.delay_bound,
                shifted: shifted.passed(),
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let runs = campaign(Policy::Sis, HearingControl::Proactive, |_| TieBreak::Arbitrary(ArbitraryRule::FixedId));
    let pre = runs.iter().filter(|r| r.preconditions).count();
    let queue = runs.iter().filter(|r| r.queue).count();
    let delay = runs.iter().filter(|r| r.delay).count();
    let n = runs.len();
    Outcome::pass_if(
        pre == n && queue == n && delay == n,
        format!("{n} runs: preconditions {pre}/{n}, queue <= k_d {queue}/{n}, delay bound {delay}/{n}"),
    )
}

/// path 0-1-2 with the forward links up in even rounds and the reverse links
/// in odd rounds (latency 2), one packet injected at round 0 for the whole
/// path, no further injections.
fn lis_counterexample() -> (u64, BigRational, bool) {
    let graph = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
    let mut schedule = ScriptedSchedule::periodic(2);
    schedule.set_up(0, (0, 1));
    schedule.set_up(0, (1, 2));
    schedule.set_up(1, (1, 0));
    schedule.set_up(1, (2, 1));
    let certified = certify_schedule_link_latency(&schedule, &graph.links(), 2, 100).passed();
    let config = ExecutionConfig {
        graph,
        injections: vec![InjectionEvent::new(0, vec![0, 1, 2])],
        policy: Policy::Lis,
        tie: TieBreak::Arbitrary(ArbitraryRule::FixedId),
        oracle: OracleSchedule::Scripted(schedule),
        hearing: HearingControl::Proactive,
        success: SuccessModel::ScriptedLinks,
        horizon: 100,
        seed: 0,
    };
    let trace = run(&config).unwrap();
    let params = BoundParams { b: 1, r: Rate::ZERO, h: 2, d: 2 };
    let admissible = check_admissibility(&config.injections, params.r, params.b, 100).passed();
    let bound = lis_bounds(params).unwrap().delay;
    (trace.max_delay(), bound, certified && admissible && certify_link_latency(&trace, 2).passed())
}

/// The delay bound with `d` taken as the edge count of the longest simple
/// path undercounts by one hop. The criterion is reported as is; the suite
/// only accepts the failure when every violation is a delay violation, the
/// queue bound holds everywhere, one more hop makes every run pass, and the
/// hand-built counterexample exceeds the bound.
fn lis_criterion(runs: Vec<CampaignRun>) -> Outcome {
    let n = runs.len();
    let pre = runs.iter().filter(|r| r.preconditions).count();
    let queue = runs.iter().filter(|r| r.queue).count();
    let delay = runs.iter().filter(|r| r.delay).count();
    let shifted = runs.iter().filter(|r| r.shifted).count();
    let worst: Vec<String> = runs
        .iter()
        .filter(|r| !r.delay)
        .take(4)
        .map(|r| {
            format!(
                "seed {} (b={} r={} h={} d={}: delay {} > {})",
                r.seed, r.params.b, r.params.r, r.params.h, r.params.d, r.observed_delay, r.delay_bound
            )
        })
        .collect();
    let (cx_delay, cx_bound, cx_valid) = lis_counterexample();
    let cx_holds = cx_valid && BigRational::from_integer((cx_delay as i64).into()) > cx_bound;
    let passed = pre == n && queue == n && delay == n;
    let characterized = !passed && pre == n && queue == n && shifted == n && cx_holds;
    let mut detail = format!(
        "{n} runs: preconditions {pre}/{n}, queue bound {queue}/{n}, delay bound {delay}/{n}; \
         with one extra hop {shifted}/{n}; path counterexample delay {cx_delay} > {cx_bound}: {cx_holds}"
    );
    if !worst.is_empty() {
        detail.push_str(&format!("; e.g. {}", worst.join(", ")));
    }
    Outcome { passed, detail, expected_failure: characterized }
}

fn criterion_4() -> Outcome {
    lis_criterion(campaign(Policy::Lis, HearingControl::Proactive, |_| TieBreak::Arbitrary(ArbitraryRule::FixedId)))
}

fn criterion_5() -> Outcome {
    lis_criterion(campaign(Policy::Lis, HearingControl::Reactive, |seed| {
        TieBreak::Permanent(PermanentRule::Seeded { seed })
    }))
}

fn criterion_6() -> Outcome {
    let horizon = 2000;
    let mut parts = Vec::new();
    let mut all = true;
    for policy in [Policy::Sis, Policy::Lis] {
        let mut bounded = 0;
        let mut pre = 0;
        for seed in 0..50 {
            let tie = TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed });
            let case = round_robin_case(seed, policy, tie, horizon).expect("case builds");
            let n = case.config.graph.node_count() as u64;
            let trace = run(&case.config).expect("case runs");
            let admissible =
                check_admissibility(&case.config.injections, case.spec.rate, case.spec.burstiness, horizon).passed();
            if admissible
                && case.spec.rate.numer() * n <= case.spec.rate.denom()
                && certify_node_latency(&trace, n).passed()
            {
                pre += 1;
            }
            let report = detect_instability(&trace.totals(), &case.checkpoints, 0.5).expect("checkpoints valid");
            if report.verdict == StabilityVerdict::Bounded {
                bounded += 1;
            }
        }
        all &= bounded == 50 && pre == 50;
        parts.push(format!("{policy}: bounded {bounded}/50, preconditions {pre}/50"));
    }
    Outcome::pass_if(all, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let mut rows = Vec::new();
    let mut all = true;
    let mut unstable = false;
    let mut count = 0;
    for path in scenario_files() {
        let scenario = Scenario::load(&path, Overrides::default()).expect("bundled scenario loads");
        if scenario.file.kind() != NetworkKind::Wireline {
            continue;
        }
        count += 1;
        let outcome = scenario.execute().expect("scenario runs");
        let eq = outcome.report.equivalence.as_ref().is_some_and(|v| v.passed());
        all &= eq && scenario.horizon >= 10_000;
        unstable |= eq && outcome.report.observed == "growth";
        rows.push(format!(
            "{} ({} rounds, {}): {}",
            outcome.report.name,
            scenario.horizon,
            outcome.report.observed,
            if eq { "match" } else { "diverged" }
        ));
    }
    Outcome::pass_if(
        all && unstable && count >= 5,
        format!("{count} wireline scenarios, one unstable: {unstable}; {}", rows.join("; ")),
    )
}

fn criterion_8() -> Outcome {
    let rates = [(0, 1), (1, 10), (1, 7), (1, 5), (1, 4), (2, 7), (1, 3), (1, 2), (3, 4), (1, 1)];
    let mut tuples = 0;
    let mut holds = 0;
    for b in 1..=5u64 {
        for &(p, q) in &rates {
            let r = Rate::new(p, q).unwrap();
            for h in 1..=4u64 {
                for d in 1..=6u64 {
                    tuples += 1;
                    let params = BoundParams { b, r, h, d };
                    // recomputed here rather than taken from the library
                    let rr = BigRational::new((p as i64).into(), (q as i64).into());
                    let a = (BigRational::from_integer((b as i64).into()) + &rr)
                        * BigRational::from_integer(((h * (d - 1)) as i64).into())
                        + BigRational::from_integer(1.into());
                    let one = BigRational::from_integer(1.into());
                    if lis_fixed_point(params) == a && lis_transit_bound_at(&a, params) + one == a {
                        holds += 1;
                    }
                }
            }
        }
    }
    Outcome::pass_if(
        tuples >= 1000 && holds == tuples,
        format!("identity exact on {holds}/{tuples} (b, r, h, d) tuples"),
    )
}

/// Every node of an `n`-path keeps a one-hop packet queue full.
fn saturated_round_robin(n: usize) -> ExecutionConfig {
    let edges: Vec<_> = (0..n - 1).map(|v| (v, v + 1)).collect();
    let graph = NetworkGraph::new(n, &edges).unwrap();
    let injections = (0..150)
        .flat_map(|_| (0..n).map(move |v| InjectionEvent::new(0, vec![v, if v + 1 < n { v + 1 } else { v - 1 }])))
        .collect();
    ExecutionConfig {
        graph,
        injections,
        policy: Policy::Fifo,
        tie: TieBreak::Arbitrary(ArbitraryRule::FixedId),
        oracle: OracleSchedule::RoundRobin,
        hearing: HearingControl::Reactive,
        success: SuccessModel::RadioCollision,
        horizon: 100,
        seed: 0,
    }
}

fn criterion_9() -> Outcome {
    let mut rr = true;
    for n in 2..=8usize {
        let trace = run(&saturated_round_robin(n)).unwrap();
        rr &= certify_node_latency(&trace, n as u64).passed() && !certify_node_latency(&trace, n as u64 - 1).passed();
    }
    let mut built = 0;
    let mut verified = 0;
    for n in 1..=8usize {
        for seed in 0..50 {
            let t = TransmitterArray::greedy(n, seed).expect("greedy builds");
            built += 1;
            if t.verify().passed() {
                verified += 1;
            }
        }
    }
    Outcome::pass_if(
        rr && verified == built,
        format!("round robin passes at h=n and fails at h=n-1 for n=2..8: {rr}; greedy transmitters verified {verified}/{built}"),
    )
}

fn criterion_10() -> Outcome {
    let mut same = 0;
    let mut total = 0;
    for path in scenario_files() {
        let digest = || {
            let scenario = Scenario::load(&path, Overrides::default()).expect("bundled scenario loads");
            let outcome = scenario.execute().expect("scenario runs");
            let mut bytes = outcome.trace.to_jsonl();
            if let Some(w) = &outcome.wireline {
                bytes.extend(serde_json::to_vec(w).expect("wireline trace serializes"));
            }
            hex::encode(Sha256::digest(&bytes))
        };
        total += 1;
        if digest() == digest() {
            same += 1;
        }
    }
    Outcome::pass_if(
        total >= 10 && same == total,
        format!("{same}/{total} scenarios byte-identical on rerun (sha-256)"),
    )
}

fn scenario_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .expect("scenarios directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    files
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "SIS reactive instability script", criterion_1),
        (2, "arbitrary-tie blocking", criterion_2),
        (3, "SIS proactive bounds", criterion_3),
        (4, "LIS proactive bounds", criterion_4),
        (5, "LIS reactive bounds, permanent ties", criterion_5),
        (6, "round-robin reactive stability", criterion_6),
        (7, "wireline equivalence", criterion_7),
        (8, "LIS fixed-point identity", criterion_8),
        (9, "oracle certifications", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let mut lines = Vec::new();
    let mut unexpected = Vec::new();
    for (id, title, f) in criteria {
        let start = Instant::now();
        let o = f();
        let line = Line { id, title, passed: o.passed, detail: o.detail, elapsed: start.elapsed() };
        println!(
            "[{}] criterion {:>2} {}: {} ({:.2} s)",
            if line.passed { "PASS" } else { "FAIL" },
            line.id,
            line.title,
            line.detail,
            line.elapsed.as_secs_f64()
        );
        if !o.passed && !o.expected_failure {
            unexpected.push(id);
        }
        lines.push(line);
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    let known: Vec<u32> = lines.iter().filter(|l| !l.passed && !unexpected.contains(&l.id)).map(|l| l.id).collect();
    println!("acceptance: {passed}/{} criteria pass; failing with matching characterization: {known:?}", lines.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
