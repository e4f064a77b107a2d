//! Scenario files: a TOML description of one run and the checks applied to
//! it.
//!
//! A radio scenario names a graph, an adversary, a protocol (policy, ties,
//! oracle, hearing control, success model), the run length and the analyses.
//! A wireline scenario (`graph.kind = "wireline"`) lists directed links and
//! explicit injections; running it simulates the wireline network, builds
//! the equivalent radio network, runs that too and compares the two
//! executions queue by queue.
//!
//! Syntax and schema errors carry the line and column reported by the TOML
//! parser. Semantic errors are located by looking up the offending key in the
//! parsed document.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{
    check_admissibility, random_path_pool, script_sis_reactive_instability, script_tie_blocking, Admissibility,
    AdversarySpec, CyclicAdversary, InjectionEvent, ScriptedScenario, StochasticAdversary, TieScriptKind,
};
use crate::analysis::{
    check_bounds, compare_equivalent_traces, detect_instability, equivalent_network, even_checkpoints,
    simulate_wireline, transform_injections, BoundParams, BoundReport, EquivalenceMap, EquivalenceVerdict,
    StabilityReport, StabilityVerdict, WirelineInjection, WirelineTrace,
};
use crate::engine::{run, ExecutionConfig, ExecutionTrace, HearingControl, SuccessModel};
use crate::model::{longest_simple_path_length, Link, NetworkGraph, NodeId, PathLengthMode, WirelineGraph};
use crate::oracle::{
    certify_link_latency, certify_node_latency, latency_schedule, LatencyClaim, LatencyScheduleOptions, LatencyVerdict,
    OracleSchedule, RegularityClass, ScriptedRound, ScriptedSchedule, TransmitterArray,
};
use crate::rational::Rate;
use crate::rng::mix;
use crate::scheduling::{ArbitraryRule, PermanentRule, Policy, TieBreak};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// The total queue stays bounded.
    Stable,
    /// The total queue grows at every checkpoint.
    Growth,
    /// Packets stay queued and nothing is ever delivered.
    Blocked,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Stable => "stable",
            Expectation::Growth => "growth",
            Expectation::Blocked => "blocked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    #[default]
    Radio,
    Wireline,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Radio => "radio",
            NetworkKind::Wireline => "wireline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default)]
    pub kind: NetworkKind,
    pub nodes: usize,
    /// Undirected edges for radio networks, directed links for wireline ones.
    #[serde(default)]
    pub edges: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Injections listed in the file.
    #[default]
    Explicit,
    /// Random token-bucket injections over a path pool.
    Stochastic,
    /// Deterministic token-bucket injections cycling through a path pool.
    Cyclic,
    /// A built-in construction that also supplies graph and oracle.
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptName {
    SisReactiveInstability,
    TieBlocking,
    TieFavorable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionEntry {
    pub round: u64,
    pub path: Vec<NodeId>,
}

/// `count` packets along `path` at rounds `start`, `start + every`, ... up
/// to `until` (exclusive, default the horizon).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicEntry {
    #[serde(default)]
    pub start: u64,
    pub every: u64,
    #[serde(default = "one")]
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<u64>,
    pub path: Vec<NodeId>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    /// Declared rate, checked by the admissibility analysis.
    pub rate: Rate,
    pub burstiness: u64,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub injections: Vec<InjectionEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<PeriodicEntry>,
    /// Path pool for the stochastic and cyclic strategies; random simple
    /// paths when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<NodeId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_hops: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts_per_round: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    #[default]
    FixedId,
    SeededRandom,
    Scripted,
    Permanent,
    PermanentSeeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    WorkConserving,
    RoundRobin,
    Transmitter,
    Scripted,
    /// Random scripted schedule with link latency `protocol.latency`.
    LatencySchedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleRoundEntry {
    pub round: u64,
    #[serde(default)]
    pub permitted: Vec<NodeId>,
    #[serde(default)]
    pub up: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    /// Claimed link latency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<u64>,
    #[serde(default)]
    pub regular: bool,
    #[serde(default)]
    pub rounds: Vec<ScheduleRoundEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub policy: Policy,
    #[serde(default)]
    pub tie: TieMode,
    /// Seed for seeded tie modes; the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleMode>,
    /// Rows of `0`/`1` for the transmitter oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmitter: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hearing: Option<HearingControl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<SuccessModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Required unless a script supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLengthSetting {
    #[default]
    Exact,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Link,
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "yes")]
    pub admissibility: bool,
    /// Compare observed maxima with the closed-form bounds of the policy.
    #[serde(default)]
    pub bounds: bool,
    /// Latency used by bounds and certifications; the oracle's claim when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<u64>,
    #[serde(default)]
    pub path_length: PathLengthSetting,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certify: Vec<Certification>,
    #[serde(default = "default_slope")]
    pub slope_threshold: f64,
    /// Required difference between the totals at consecutive checkpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_increment: Option<u64>,
}

fn yes() -> bool {
    true
}

fn default_slope() -> f64 {
    0.5
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            admissibility: true,
            bounds: false,
            latency: None,
            path_length: PathLengthSetting::Exact,
            certify: Vec::new(),
            slope_threshold: default_slope(),
            checkpoint_increment: None,
        }
    }
}

/// Written by the transform: radio node `i` stands for `links[i]` of the
/// source network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceManifest {
    pub source: String,
    pub links: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Header,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
    pub adversary: AdversarySection,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceManifest>,
}

impl ScenarioFile {
    /// Parses and schema-checks `src`; `origin` names it in error messages.
    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Scenario(format!("{origin}: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(format!("cannot serialize scenario: {e}")))
    }

    pub fn kind(&self) -> NetworkKind {
        self.graph.as_ref().map(|g| g.kind).unwrap_or_default()
    }
}

/// Command-line overrides applied on top of the `[run]` section.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
}

/// Maps key paths of the source document to `origin:line:column`.
struct Locator<'a> {
    origin: &'a str,
    src: &'a str,
    doc: Option<toml::Spanned<toml::de::DeTable<'a>>>,
}

impl<'a> Locator<'a> {
    fn new(origin: &'a str, src: &'a str) -> Self {
        Self { origin, src, doc: toml::de::DeTable::parse(src).ok() }
    }

    /// Byte offset of the value at `path`; numeric segments index arrays.
    /// Falls back to the deepest key found.
    fn offset(&self, path: &[&str]) -> Option<usize> {
        let doc = self.doc.as_ref()?;
        let mut table = doc.get_ref();
        let mut value: Option<&toml::Spanned<toml::de::DeValue<'a>>> = None;
        let mut best = None;
        for seg in path {
            let next = match value.map(|v| v.get_ref()) {
                None => table.iter().find(|(k, _)| k.get_ref() == seg).map(|(_, v)| v),
                Some(toml::de::DeValue::Table(t)) => t.iter().find(|(k, _)| k.get_ref() == seg).map(|(_, v)| v),
                Some(toml::de::DeValue::Array(a)) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
                Some(_) => None,
            };
            match next {
                Some(v) => {
                    best = Some(v.span().start);
                    if let toml::de::DeValue::Table(t) = v.get_ref() {
                        table = t;
                    }
                    value = Some(v);
                }
                None => break,
            }
        }
        best
    }

    fn error(&self, path: &[&str], msg: impl std::fmt::Display) -> Error {
        let key = path.join(".");
        match self.offset(path) {
            Some(off) => {
                let before = &self.src[..off.min(self.src.len())];
                let line = before.matches('\n').count() + 1;
                let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                Error::Scenario(format!("{}:{line}:{col}: {key}: {msg}", self.origin))
            }
            None => Error::Scenario(format!("{}: {key}: {msg}", self.origin)),
        }
    }
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub spec: AdversarySpec,
    pub horizon: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub enum Body {
    Radio(RadioRun),
    Wireline(WirelineRun),
}

#[derive(Debug, Clone)]
pub struct RadioRun {
    pub config: ExecutionConfig,
    /// Latency for bounds and certifications, if known.
    pub latency: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct WirelineRun {
    pub graph: WirelineGraph,
    pub injections: Vec<WirelineInjection>,
    pub policy: Policy,
    pub tie: TieBreak,
    pub map: EquivalenceMap,
    /// The equivalent radio execution.
    pub radio: ExecutionConfig,
}

impl Scenario {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self> {
        let src = fs::read_to_string(path)?;
        Self::from_source(&src, &path.display().to_string(), overrides)
    }

    pub fn from_source(src: &str, origin: &str, overrides: Overrides) -> Result<Self> {
        let file = ScenarioFile::parse(src, origin)?;
        let loc = Locator::new(origin, src);
        resolve(file, &loc, overrides)
    }

    /// Runs the scenario and evaluates every requested check.
    pub fn execute(&self) -> Result<Outcome> {
        match &self.body {
            Body::Radio(r) => self.execute_radio(r),
            Body::Wireline(w) => self.execute_wireline(w),
        }
    }

    fn execute_radio(&self, r: &RadioRun) -> Result<Outcome> {
        let trace = run(&r.config)?;
        let a = &self.file.analysis;
        let mut checks = Vec::new();
        if a.admissibility {
            checks.push(admissibility_check(&r.config.injections, self.spec, self.horizon));
        }
        let mut bounds = None;
        if a.bounds {
            let h = r.latency.ok_or_else(|| Error::Scenario("bounds need a latency".into()))?;
            let mode = match a.path_length {
                PathLengthSetting::Exact => PathLengthMode::default(),
                PathLengthSetting::UpperBound => PathLengthMode::UpperBound,
            };
            let d = longest_simple_path_length(&r.config.graph, mode)? as u64;
            let params = BoundParams { b: self.spec.burstiness, r: self.spec.rate, h, d };
            let report = check_bounds(&trace, r.config.policy, params)?;
            checks.push(Check::new("bounds", report.passed(), report.summary()));
            bounds = Some(report);
        }
        for c in a.certify.iter().collect::<BTreeSet<_>>() {
            let h = r.latency.ok_or_else(|| Error::Scenario("certification needs a latency".into()))?;
            let (name, verdict) = match c {
                Certification::Link => ("link_latency", certify_link_latency(&trace, h)),
                Certification::Node => ("node_latency", certify_node_latency(&trace, h)),
            };
            let detail = match &verdict {
                LatencyVerdict::Pass => format!("every ready window of {h} rounds served"),
                LatencyVerdict::Fail { subject, start, end } => {
                    format!("{subject:?} not served in rounds {start}..={end} (h = {h})")
                }
            };
            checks.push(Check::new(name, verdict.passed(), detail));
        }
        let totals = trace.totals();
        self.finish(&totals, trace.deliveries(), checks, bounds, None, trace, None)
    }

    fn execute_wireline(&self, w: &WirelineRun) -> Result<Outcome> {
        let wire = simulate_wireline(&w.graph, &w.injections, w.policy, w.tie.clone(), self.horizon)?;
        let radio = run(&w.radio)?;
        let mut checks = Vec::new();
        if self.file.analysis.admissibility {
            // a wireline adversary is constrained per link
            let events: Vec<InjectionEvent> = w
                .injections
                .iter()
                .map(|i| Ok(InjectionEvent::new(i.round, crate::analysis::route_links(&w.graph, &i.route)?)))
                .collect::<Result<_>>()?;
            checks.push(admissibility_check(&events, self.spec, self.horizon));
        }
        let verdict = compare_equivalent_traces(&wire, &radio, &w.map)?;
        let detail = match &verdict {
            EquivalenceVerdict::Pass { rounds, packets } => {
                format!("{packets} packets in equivalent queues for all {rounds} rounds")
            }
            EquivalenceVerdict::Diverged { round, queue, packet } => {
                format!("packet {packet} leaves equivalence at round {round} (queue {queue})")
            }
        };
        checks.push(Check::new("equivalence", verdict.passed(), detail));
        let delivered = wire.packets.iter().filter(|p| p.delivery_round.is_some()).count();
        let totals = wire.totals.clone();
        self.finish(&totals, delivered, checks, None, Some(verdict), radio, Some(wire))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        totals: &[usize],
        delivered: usize,
        mut checks: Vec<Check>,
        bounds: Option<BoundReport>,
        equivalence: Option<EquivalenceVerdict>,
        trace: ExecutionTrace,
        wireline: Option<WirelineTrace>,
    ) -> Result<Outcome> {
        let a = &self.file.analysis;
        let stability = if self.checkpoints.len() >= 3 {
            Some(detect_instability(totals, &self.checkpoints, a.slope_threshold)?)
        } else {
            None
        };
        let checkpoint_totals: Vec<usize> = self.checkpoints.iter().map(|&c| totals[c as usize]).collect();
        if let Some(inc) = a.checkpoint_increment {
            let ok = checkpoint_totals.windows(2).all(|w| w[1] as i64 - w[0] as i64 == inc as i64);
            checks.push(Check::new(
                "checkpoint_increment",
                ok,
                format!("totals at checkpoints {checkpoint_totals:?}, expected steps of {inc}"),
            ));
        }
        let first_injection = trace.packets.iter().map(|p| p.injection_round).min();
        let blocked = delivered == 0 && first_injection.is_some_and(|t0| totals[t0 as usize..].iter().all(|&q| q > 0));
        let observed = if blocked {
            "blocked"
        } else {
            stability.as_ref().map_or("unknown", |s| match s.verdict {
                StabilityVerdict::Growth => "growth",
                StabilityVerdict::Bounded => "stable",
                StabilityVerdict::Inconclusive => "inconclusive",
            })
        };
        if let Some(expect) = self.file.scenario.expect {
            let ok = expect.name() == observed;
            let detail = match &stability {
                Some(s) => format!(
                    "expected {}, observed {observed} (slope {:.3}/checkpoint, halves {} vs {}, {delivered} delivered)",
                    expect.name(),
                    s.slope_per_checkpoint,
                    s.first_half_max,
                    s.second_half_max
                ),
                None => format!("expected {}, observed {observed} ({delivered} delivered)", expect.name()),
            };
            checks.push(Check::new("expectation", ok, detail));
        }
        let report = ScenarioReport {
            name: self.file.scenario.name.clone(),
            kind: self.file.kind(),
            seed: self.seed,
            horizon: self.horizon,
            expect: self.file.scenario.expect,
            observed: observed.to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            injected: trace.packets.len(),
            delivered,
            max_total: totals.iter().copied().max().unwrap_or(0),
            checkpoints: self.checkpoints.clone(),
            checkpoint_totals,
            stability,
            bounds,
            equivalence,
        };
        Ok(Outcome { report, trace, wireline })
    }
}

fn admissibility_check(events: &[InjectionEvent], spec: AdversarySpec, horizon: u64) -> Check {
    let v = check_admissibility(events, spec.rate, spec.burstiness, horizon);
    let detail = match &v {
        Admissibility::Pass => format!("{} injections within r = {}, b = {}", events.len(), spec.rate, spec.burstiness),
        Admissibility::Fail { start, end, node, count } => {
            format!(
                "{count} packets cross {node} in rounds {start}..={end}, above r = {}, b = {}",
                spec.rate, spec.burstiness
            )
        }
    };
    Check::new("admissibility", v.passed(), detail)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub kind: NetworkKind,
    pub seed: u64,
    pub horizon: u64,
    pub expect: Option<Expectation>,
    /// `stable`, `growth`, `blocked`, `inconclusive`, or `unknown` without
    /// enough checkpoints.
    pub observed: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub injected: usize,
    pub delivered: usize,
    pub max_total: usize,
    pub checkpoints: Vec<u64>,
    pub checkpoint_totals: Vec<usize>,
    pub stability: Option<StabilityReport>,
    pub bounds: Option<BoundReport>,
    pub equivalence: Option<EquivalenceVerdict>,
}

impl ScenarioReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "scenario {} ({}, seed {}, {} rounds): observed {}, {} injected, {} delivered, max total queue {}\n",
            self.name,
            self.kind.name(),
            self.seed,
            self.horizon,
            self.observed,
            self.injected,
            self.delivered,
            self.max_total
        );
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        s.push_str(if self.passed { "verdict: PASS\n" } else { "verdict: FAIL\n" });
        s
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ScenarioReport,
    /// The radio execution (for wireline scenarios, the equivalent one).
    pub trace: ExecutionTrace,
    pub wireline: Option<WirelineTrace>,
}

impl Outcome {
    /// Writes `trace.jsonl`, `metrics.csv`, `report.json`, plus `bounds.csv`
    /// when bounds were checked and `wireline_metrics.csv` for wireline runs.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.trace.write_jsonl(std::io::BufWriter::new(fs::File::create(dir.join("trace.jsonl"))?))?;
        self.trace.write_metrics_csv(std::io::BufWriter::new(fs::File::create(dir.join("metrics.csv"))?))?;
        let mut report = fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut report, &self.report)?;
        report.write_all(b"\n")?;
        if let Some(b) = &self.report.bounds {
            let mode = self.trace.meta.hearing.as_str();
            fs::write(
                dir.join("bounds.csv"),
                format!("{}\n{}\n", BoundReport::CSV_HEADER, b.csv_row(&self.report.name, mode)),
            )?;
        }
        if let Some(w) = &self.wireline {
            let mut out = std::io::BufWriter::new(fs::File::create(dir.join("wireline_metrics.csv"))?);
            let links = w.queue_sizes.first().map_or(0, Vec::len);
            let header: Vec<String> = (0..links).map(|e| format!("link{e}")).collect();
            writeln!(out, "round,Q_total{}{}", if links > 0 { "," } else { "" }, header.join(","))?;
            for (t, (total, sizes)) in w.totals.iter().zip(&w.queue_sizes).enumerate() {
                let cols: Vec<String> = sizes.iter().map(usize::to_string).collect();
                writeln!(out, "{t},{total}{}{}", if links > 0 { "," } else { "" }, cols.join(","))?;
            }
            out.flush()?;
        }
        Ok(())
    }
}

fn resolve(file: ScenarioFile, loc: &Locator<'_>, overrides: Overrides) -> Result<Scenario> {
    let adv = &file.adversary;
    let spec = AdversarySpec::new(adv.rate, adv.burstiness).map_err(|e| loc.error(&["adversary", "burstiness"], e))?;
    let seed = overrides.seed.unwrap_or(file.run.seed);
    check_strategy_fields(&file, loc)?;

    let script = match adv.strategy {
        Strategy::Script => Some(build_script(&file, loc, overrides.horizon)?),
        _ => None,
    };
    let horizon = match (overrides.horizon, file.run.horizon, &script) {
        (Some(h), _, _) | (None, Some(h), _) => h,
        (None, None, Some(s)) => s.horizon,
        (None, None, None) => return Err(loc.error(&["run"], "horizon is required")),
    };
    if horizon == 0 {
        return Err(loc.error(&["run", "horizon"], "horizon must be positive"));
    }
    let checkpoints: Vec<u64> = match (&file.run.checkpoints, &script) {
        (Some(c), _) => c.clone(),
        (None, Some(s)) if s.checkpoints.iter().filter(|&&c| c < horizon).count() >= 3 => {
            s.checkpoints.iter().copied().filter(|&c| c < horizon).collect()
        }
        (None, _) => even_checkpoints(horizon, 10),
    };
    if let Some(&c) = checkpoints.iter().find(|&&c| c >= horizon) {
        return Err(loc.error(&["run", "checkpoints"], format!("checkpoint {c} is not below the horizon {horizon}")));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(loc.error(&["run", "checkpoints"], "checkpoints must be strictly increasing"));
    }
    let needs_checkpoints = matches!(file.scenario.expect, Some(Expectation::Stable | Expectation::Growth))
        || file.analysis.checkpoint_increment.is_some();
    if needs_checkpoints && checkpoints.len() < 3 {
        return Err(loc.error(&["run", "checkpoints"], "stability analysis needs at least 3 checkpoints"));
    }
    if !(file.analysis.slope_threshold.is_finite()) {
        return Err(loc.error(&["analysis", "slope_threshold"], "must be a finite number"));
    }

    let body = match file.kind() {
        NetworkKind::Radio => Body::Radio(resolve_radio(&file, loc, script, horizon, seed)?),
        NetworkKind::Wireline => Body::Wireline(resolve_wireline(&file, loc, horizon, seed)?),
    };
    Ok(Scenario { file, spec, horizon, seed, checkpoints, body })
}

/// Rejects strategy-specific keys used with the wrong strategy.
fn check_strategy_fields(file: &ScenarioFile, loc: &Locator<'_>) -> Result<()> {
    let a = &file.adversary;
    let present: [(&str, bool, &[Strategy]); 10] = [
        ("injections", !a.injections.is_empty(), &[Strategy::Explicit]),
        ("periodic", !a.periodic.is_empty(), &[Strategy::Explicit]),
        ("paths", a.paths.is_some(), &[Strategy::Stochastic, Strategy::Cyclic]),
        ("pool_size", a.pool_size.is_some(), &[Strategy::Stochastic, Strategy::Cyclic]),
        ("max_hops", a.max_hops.is_some(), &[Strategy::Stochastic, Strategy::Cyclic]),
        ("attempts_per_round", a.attempts_per_round.is_some(), &[Strategy::Stochastic]),
        ("attempt_prob", a.attempt_prob.is_some(), &[Strategy::Stochastic]),
        ("script", a.script.is_some(), &[Strategy::Script]),
        ("k", a.k.is_some(), &[Strategy::Script]),
        ("iterations", a.iterations.is_some(), &[Strategy::Script]),
    ];
    for (key, set, allowed) in present {
        if set && !allowed.contains(&a.strategy) {
            return Err(loc.error(&["adversary", key], format!("not used by the {:?} strategy", a.strategy)));
        }
    }
    if file.kind() == NetworkKind::Wireline && a.strategy != Strategy::Explicit {
        return Err(loc.error(&["adversary", "strategy"], "wireline scenarios take explicit injections only"));
    }
    Ok(())
}

fn build_script(file: &ScenarioFile, loc: &Locator<'_>, horizon: Option<u64>) -> Result<ScriptedScenario> {
    let a = &file.adversary;
    if file.graph.is_some() {
        return Err(loc.error(&["graph"], "script scenarios bring their own graph"));
    }
    let name = a.script.ok_or_else(|| loc.error(&["adversary"], "the script strategy needs `script`"))?;
    let horizon = horizon.or(file.run.horizon);
    let s = match name {
        ScriptName::SisReactiveInstability => {
            let k = a.k.ok_or_else(|| loc.error(&["adversary"], "sis_reactive_instability needs `k`"))?;
            let iterations =
                a.iterations.ok_or_else(|| loc.error(&["adversary"], "sis_reactive_instability needs `iterations`"))?;
            script_sis_reactive_instability(k, a.burstiness, iterations).map_err(|e| loc.error(&["adversary"], e))?
        }
        ScriptName::TieBlocking | ScriptName::TieFavorable => {
            if a.k.is_some() || a.iterations.is_some() {
                return Err(loc.error(&["adversary"], "tie scripts take no `k` or `iterations`"));
            }
            let rounds = horizon.ok_or_else(|| loc.error(&["run"], "tie scripts need `run.horizon`"))?;
            let kind = if name == ScriptName::TieBlocking { TieScriptKind::Blocking } else { TieScriptKind::Favorable };
            script_tie_blocking(rounds, kind).map_err(|e| loc.error(&["run", "horizon"], e))?
        }
    };
    Ok(s)
}

fn tie_break(p: &ProtocolSection, seed: u64, script: Option<&ScriptedScenario>, loc: &Locator<'_>) -> Result<TieBreak> {
    let tie_seed = p.tie_seed.unwrap_or(seed);
    Ok(match p.tie {
        TieMode::FixedId => TieBreak::Arbitrary(ArbitraryRule::FixedId),
        TieMode::SeededRandom => TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed: tie_seed }),
        TieMode::Permanent => TieBreak::Permanent(PermanentRule::FixedId),
        TieMode::PermanentSeeded => TieBreak::Permanent(PermanentRule::Seeded { seed: tie_seed }),
        TieMode::Scripted => match script.and_then(|s| s.tie_script.clone()) {
            Some(t) => TieBreak::Arbitrary(ArbitraryRule::Scripted(t)),
            None => return Err(loc.error(&["protocol", "tie"], "scripted ties need a script that provides them")),
        },
    })
}

fn edge_list(g: &GraphSection) -> Vec<Link> {
    g.edges.iter().map(|e| (e[0], e[1])).collect()
}

fn resolve_radio(
    file: &ScenarioFile,
    loc: &Locator<'_>,
    script: Option<ScriptedScenario>,
    horizon: u64,
    seed: u64,
) -> Result<RadioRun> {
    let p = &file.protocol;
    let a = &file.adversary;
    let graph = match (&file.graph, &script) {
        (_, Some(s)) => s.graph.clone(),
        (Some(g), None) => {
            for (i, e) in g.edges.iter().enumerate() {
                if let Some(&v) = e.iter().find(|&&v| v >= g.nodes) {
                    return Err(loc.error(&["graph", "edges", &i.to_string()], format!("node {v} out of range")));
                }
            }
            NetworkGraph::new(g.nodes, &edge_list(g)).map_err(|e| loc.error(&["graph"], e))?
        }
        (None, None) => return Err(loc.error(&[], "missing [graph] section")),
    };
    let n = graph.node_count();
    if n == 0 {
        return Err(loc.error(&["graph", "nodes"], "graph needs at least one node"));
    }
    let tie = tie_break(p, seed, script.as_ref(), loc)?;

    let oracle = match (p.oracle, &script) {
        (None | Some(OracleMode::Scripted), Some(s)) if p.schedule.is_none() => {
            OracleSchedule::Scripted(s.schedule.clone())
        }
        (None, _) => return Err(loc.error(&["protocol"], "`oracle` is required")),
        (Some(OracleMode::WorkConserving), _) => OracleSchedule::WorkConserving,
        (Some(OracleMode::RoundRobin), _) => OracleSchedule::RoundRobin,
        (Some(OracleMode::Transmitter), _) => {
            let rows = p
                .transmitter
                .as_ref()
                .ok_or_else(|| loc.error(&["protocol"], "transmitter oracle needs `transmitter` rows"))?;
            let array: TransmitterArray =
                rows.join("\n").parse().map_err(|e| loc.error(&["protocol", "transmitter"], e))?;
            OracleSchedule::Transmitter(array)
        }
        (Some(OracleMode::Scripted), _) => {
            let s = p
                .schedule
                .as_ref()
                .ok_or_else(|| loc.error(&["protocol"], "scripted oracle needs [protocol.schedule]"))?;
            OracleSchedule::Scripted(scripted_schedule(s, loc)?)
        }
        (Some(OracleMode::LatencySchedule), _) => {
            let h = p.latency.ok_or_else(|| loc.error(&["protocol"], "latency_schedule needs `latency`"))?;
            if h == 0 {
                return Err(loc.error(&["protocol", "latency"], "latency must be positive"));
            }
            let opts = LatencyScheduleOptions::default();
            OracleSchedule::Scripted(
                latency_schedule(&graph, h, horizon, mix(&[seed, 0x6c6174]), opts)
                    .map_err(|e| loc.error(&["protocol", "latency"], e))?,
            )
        }
    };
    oracle.validate(&graph).map_err(|e| loc.error(&["protocol", "oracle"], e))?;
    let hearing = p.hearing.ok_or_else(|| loc.error(&["protocol"], "`hearing` is required"))?;
    let success = match (p.success, &oracle) {
        (Some(s), _) => s,
        (None, OracleSchedule::Scripted(_)) => SuccessModel::ScriptedLinks,
        (None, _) => SuccessModel::RadioCollision,
    };

    let injections = match a.strategy {
        Strategy::Script => script.as_ref().expect("script strategy has a script").events.clone(),
        Strategy::Explicit => {
            explicit_events(a, horizon)?.into_iter().map(|(round, path)| InjectionEvent::new(round, path)).collect()
        }
        Strategy::Stochastic | Strategy::Cyclic => {
            let spec = AdversarySpec::new(a.rate, a.burstiness)?;
            let pool = match &a.paths {
                Some(paths) => paths.clone(),
                None => {
                    let d = longest_simple_path_length(&graph, PathLengthMode::default())
                        .or_else(|_| longest_simple_path_length(&graph, PathLengthMode::UpperBound))?;
                    let max_hops = a.max_hops.unwrap_or(d).max(1);
                    random_path_pool(&graph, a.pool_size.unwrap_or(3 * n), max_hops, mix(&[seed, 0x706f6f6c]))
                }
            };
            if pool.is_empty() {
                return Err(loc.error(&["adversary"], "no usable paths in the pool"));
            }
            if let Some((i, _)) = pool
                .iter()
                .enumerate()
                .find(|(_, path)| !crate::model::validate_itinerary(&graph, path) || path.len() < 2)
            {
                return Err(
                    loc.error(&["adversary", "paths", &i.to_string()], "not a walk of at least one hop in the graph")
                );
            }
            if a.strategy == Strategy::Cyclic {
                CyclicAdversary::new(spec, n, pool)?.generate(horizon)
            } else {
                let prob = a.attempt_prob.unwrap_or(0.9);
                StochasticAdversary::new(spec, n, pool, mix(&[seed, 0x696e6a]), a.attempts_per_round.unwrap_or(2), prob)
                    .map_err(|e| loc.error(&["adversary"], e))?
                    .generate(horizon)
            }
        }
    };
    let injections: Vec<InjectionEvent> = injections.into_iter().filter(|e| e.round < horizon).collect();
    check_explicit_paths(a, loc, |path| crate::model::validate_itinerary(&graph, path))?;

    let config = ExecutionConfig { graph, injections, policy: p.policy, tie, oracle, hearing, success, horizon, seed };
    config.validate().map_err(|e| loc.error(&["adversary"], e))?;
    let latency =
        file.analysis.latency.or_else(|| config.oracle.claimed_latency(config.graph.node_count()).map(|c| c.h));
    if file.analysis.bounds && !matches!(p.policy, Policy::Sis | Policy::Lis) {
        return Err(loc.error(&["analysis", "bounds"], format!("no closed-form bounds for {}", p.policy)));
    }
    if (file.analysis.bounds || !file.analysis.certify.is_empty()) && latency.is_none() {
        return Err(loc.error(&["analysis"], "bounds and certifications need `latency` or an oracle that claims one"));
    }
    Ok(RadioRun { config, latency })
}

/// Explicit and periodic injections as `(round, path)`, sorted by round
/// with explicit entries first within a round.
fn explicit_events(a: &AdversarySection, horizon: u64) -> Result<Vec<(u64, Vec<NodeId>)>> {
    let mut out: Vec<(u64, usize, Vec<NodeId>)> = a.injections.iter().map(|i| (i.round, 0, i.path.clone())).collect();
    for (k, p) in a.periodic.iter().enumerate() {
        if p.every == 0 {
            return Err(Error::Scenario(format!("adversary.periodic[{k}]: `every` must be positive")));
        }
        let end = p.until.unwrap_or(horizon).min(horizon);
        let mut t = p.start;
        while t < end {
            for _ in 0..p.count {
                out.push((t, k + 1, p.path.clone()));
            }
            t += p.every;
        }
    }
    out.sort_by_key(|&(t, k, _)| (t, k));
    Ok(out.into_iter().map(|(t, _, path)| (t, path)).collect())
}

fn check_explicit_paths(a: &AdversarySection, loc: &Locator<'_>, valid: impl Fn(&[NodeId]) -> bool) -> Result<()> {
    for (i, inj) in a.injections.iter().enumerate() {
        if inj.path.len() < 2 || !valid(&inj.path) {
            return Err(loc.error(
                &["adversary", "injections", &i.to_string(), "path"],
                format!("{:?} is not a route of at least one hop", inj.path),
            ));
        }
    }
    for (i, p) in a.periodic.iter().enumerate() {
        if p.every == 0 {
            return Err(loc.error(&["adversary", "periodic", &i.to_string(), "every"], "must be positive"));
        }
        if p.path.len() < 2 || !valid(&p.path) {
            return Err(loc.error(
                &["adversary", "periodic", &i.to_string(), "path"],
                format!("{:?} is not a route of at least one hop", p.path),
            ));
        }
    }
    Ok(())
}

fn scripted_schedule(s: &ScheduleSection, loc: &Locator<'_>) -> Result<ScriptedSchedule> {
    let mut sched = match s.period {
        Some(0) => return Err(loc.error(&["protocol", "schedule", "period"], "period must be positive")),
        Some(p) => ScriptedSchedule::periodic(p),
        None => ScriptedSchedule::new(),
    };
    if let Some(h) = s.latency {
        let class = if s.regular { RegularityClass::Regular } else { RegularityClass::LinkLatencyOnly };
        sched = sched.with_claim(LatencyClaim { h, class });
    }
    let mut seen = BTreeSet::new();
    for (i, r) in s.rounds.iter().enumerate() {
        if !seen.insert(r.round) {
            return Err(loc.error(
                &["protocol", "schedule", "rounds", &i.to_string()],
                format!("round {} listed twice", r.round),
            ));
        }
        let mut entry = ScriptedRound { permitted: r.permitted.iter().copied().collect(), up: BTreeSet::new() };
        for l in &r.up {
            entry.permitted.insert(l[0]);
            entry.up.insert((l[0], l[1]));
        }
        sched.insert(r.round, entry);
    }
    Ok(sched)
}

fn resolve_wireline(file: &ScenarioFile, loc: &Locator<'_>, horizon: u64, seed: u64) -> Result<WirelineRun> {
    let g = file.graph.as_ref().expect("wireline kind implies a graph section");
    for (i, e) in g.edges.iter().enumerate() {
        if let Some(&v) = e.iter().find(|&&v| v >= g.nodes) {
            return Err(loc.error(&["graph", "edges", &i.to_string()], format!("node {v} out of range")));
        }
    }
    let graph = WirelineGraph::new(g.nodes, &edge_list(g)).map_err(|e| loc.error(&["graph", "edges"], e))?;
    let p = &file.protocol;
    for (key, set) in [
        ("oracle", p.oracle.is_some()),
        ("transmitter", p.transmitter.is_some()),
        ("latency", p.latency.is_some()),
        ("schedule", p.schedule.is_some()),
        ("hearing", p.hearing.is_some()),
        ("success", p.success.is_some()),
    ] {
        if set {
            return Err(loc.error(&["protocol", key], "wireline scenarios take only `policy`, `tie` and `tie_seed`"));
        }
    }
    if file.analysis.bounds || !file.analysis.certify.is_empty() {
        return Err(loc.error(&["analysis"], "bounds and certifications apply to radio scenarios"));
    }
    check_explicit_paths(&file.adversary, loc, |route| crate::analysis::route_links(&graph, route).is_ok())?;
    let tie = tie_break(p, seed, None, loc)?;
    let injections: Vec<WirelineInjection> = explicit_events(&file.adversary, horizon)?
        .into_iter()
        .filter(|(t, _)| *t < horizon)
        .map(|(round, route)| WirelineInjection { round, route })
        .collect();
    let (radio_graph, map) = equivalent_network(&graph).map_err(|e| loc.error(&["graph", "edges"], e))?;
    let radio_injections = transform_injections(&graph, &map, &injections).map_err(|e| loc.error(&["adversary"], e))?;
    let radio = ExecutionConfig {
        graph: radio_graph,
        injections: radio_injections,
        policy: p.policy,
        tie: tie.clone(),
        oracle: OracleSchedule::WorkConserving,
        hearing: HearingControl::Reactive,
        success: SuccessModel::InterferenceFree,
        horizon,
        seed,
    };
    Ok(WirelineRun { graph, injections, policy: p.policy, tie, map, radio })
}

/// The equivalent radio scenario of a wireline scenario: one node per link,
/// a work-conserving oracle, interference-free hearing, and every route
/// rewritten as the sequence of its links plus one absorbing hop.
///
/// The absorbing hop adds a node to each itinerary, so the radio file does
/// not repeat the admissibility check; the wireline one applies per link.
pub fn transform(file: &ScenarioFile) -> Result<ScenarioFile> {
    let g = match &file.graph {
        Some(g) if g.kind == NetworkKind::Wireline => g,
        _ => return Err(Error::Scenario("transform needs a wireline scenario".into())),
    };
    let wire = WirelineGraph::new(g.nodes, &edge_list(g))?;
    let (radio, map) = equivalent_network(&wire)?;
    let a = &file.adversary;
    if a.strategy != Strategy::Explicit {
        return Err(Error::Scenario("wireline scenarios take explicit injections only".into()));
    }
    let rewrite = |route: &[NodeId]| -> Result<Vec<NodeId>> {
        let inj = WirelineInjection { round: 0, route: route.to_vec() };
        Ok(transform_injections(&wire, &map, &[inj])?.remove(0).itinerary)
    };
    let injections = a
        .injections
        .iter()
        .map(|i| Ok(InjectionEntry { round: i.round, path: rewrite(&i.path)? }))
        .collect::<Result<Vec<_>>>()?;
    let periodic = a
        .periodic
        .iter()
        .map(|p| Ok(PeriodicEntry { path: rewrite(&p.path)?, ..p.clone() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioFile {
        scenario: Header {
            name: format!("{}-radio", file.scenario.name),
            description: Some(format!("equivalent radio network of wireline scenario {}", file.scenario.name)),
            expect: file.scenario.expect,
        },
        graph: Some(GraphSection {
            kind: NetworkKind::Radio,
            nodes: radio.node_count(),
            edges: radio.edges().into_iter().map(|(u, w)| [u, w]).collect(),
        }),
        adversary: AdversarySection { injections, periodic, ..a.clone() },
        protocol: ProtocolSection {
            policy: file.protocol.policy,
            tie: file.protocol.tie,
            tie_seed: file.protocol.tie_seed,
            oracle: Some(OracleMode::WorkConserving),
            transmitter: None,
            latency: None,
            schedule: None,
            hearing: Some(HearingControl::Reactive),
            success: Some(SuccessModel::InterferenceFree),
        },
        run: file.run.clone(),
        analysis: AnalysisSection { admissibility: false, ..file.analysis.clone() },
        equivalence: Some(EquivalenceManifest {
            source: file.scenario.name.clone(),
            links: wire.links().iter().map(|&(u, w)| [u, w]).collect(),
        }),
    })
}
