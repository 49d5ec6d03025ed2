//! Experiment scenarios: a TOML grid expanded into concrete runs.
//!
//! A scenario sweeps protocols, cluster sizes, fault fractions and seeds
//! over one shared parameter set. Fractions convert to node counts by
//! rounding to nearest, and the faulty nodes are always the highest ids,
//! so node 0 (the all-pairs baseline's fixed proposer) stays honest and
//! grids of different sizes remain comparable.

use serde::Deserialize;

use crate::cti::GenerationProfile;
use crate::domain::{AttributeKey, ProtocolParams, SimTime};
use crate::faults::{BehaviorKind, BehaviorSpec};
use crate::sim::{NetworkSpec, ProtocolKind, RunSpec, StopRule, WorkloadSpec};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("config parse failed: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown preset {name:?}; available: {available}")]
    UnknownPreset { name: String, available: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Identifier carried into every output row and file name.
    pub scenario: String,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    pub workload: WorkloadConfig,
    /// Behavior template stamped onto the faulty nodes of each grid cell.
    /// Required whenever any fault fraction is positive.
    #[serde(default)]
    pub faults: Option<FaultConfig>,
    pub stop: StopConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub protocols: Vec<String>,
    pub nodes: Vec<u32>,
    #[serde(default = "default_fractions")]
    pub fault_fraction: Vec<f64>,
    pub seeds: SeedSpec,
}

fn default_fractions() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range(SeedRange),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

impl SeedSpec {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(xs) => xs.clone(),
            SeedSpec::Range(r) => (r.start..r.start + r.count).collect(),
        }
    }
}

/// Mirror of [`ProtocolParams`] where every field is optional in the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub r_init: f64,
    pub r_thld: f64,
    pub reputation_weight: f64,
    pub posterior_threshold: f64,
    pub election_timeout: [u64; 2],
    pub heartbeat_interval: u64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        ParamsConfig {
            r_init: p.r_init,
            r_thld: p.r_thld,
            reputation_weight: p.reputation_weight,
            posterior_threshold: p.posterior_threshold,
            election_timeout: [p.election_timeout.0, p.election_timeout.1],
            heartbeat_interval: p.heartbeat_interval,
        }
    }
}

impl ParamsConfig {
    pub fn build(&self) -> ProtocolParams {
        ProtocolParams {
            r_init: self.r_init,
            r_thld: self.r_thld,
            reputation_weight: self.reputation_weight,
            posterior_threshold: self.posterior_threshold,
            election_timeout: (self.election_timeout[0], self.election_timeout[1]),
            heartbeat_interval: self.heartbeat_interval,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Inclusive one-way delay bounds in sim ms.
    pub latency: [u64; 2],
    pub drop_probability: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let n = NetworkSpec::default();
        NetworkConfig { latency: [n.latency.0, n.latency.1], drop_probability: n.drop_probability }
    }
}

impl NetworkConfig {
    pub fn build(&self) -> NetworkSpec {
        NetworkSpec {
            latency: (self.latency[0], self.latency[1]),
            drop_probability: self.drop_probability,
            partitions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub proposals: u64,
    pub inter_arrival: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub kind: String,
    #[serde(default)]
    pub activation_time: u64,
    #[serde(default)]
    pub false_report_probability: f64,
    #[serde(default)]
    pub attribute_corruption_count: usize,
}

impl FaultConfig {
    fn build(&self) -> BehaviorSpec {
        BehaviorSpec {
            kind: BehaviorKind::parse(&self.kind).expect("validated"),
            activation_time: SimTime(self.activation_time),
            false_report_probability: self.false_report_probability,
            attribute_corruption_count: self.attribute_corruption_count,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    pub max_time: u64,
    #[serde(default)]
    pub target_commits: Option<u64>,
}

/// One fully specified grid cell, ready for the simulator.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub scenario: String,
    pub protocol: ProtocolKind,
    pub nodes: u32,
    pub fault_fraction: f64,
    pub seed: u64,
    pub spec: RunSpec,
}

/// Nearest-count conversion of a fraction into faulty nodes.
#[must_use]
pub fn fault_count(fraction: f64, nodes: u32) -> u32 {
    (fraction * f64::from(nodes) + 0.5).floor() as u32
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full structural check; every later `expect` in `plan` is backed by a
    /// rule here.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        if !valid_id(&self.scenario) {
            return fail(format!(
                "scenario name {:?} must be non-empty [a-z0-9_-]",
                self.scenario
            ));
        }
        if self.grid.protocols.is_empty() {
            return fail("grid.protocols is empty".into());
        }
        for p in &self.grid.protocols {
            if ProtocolKind::parse(p).is_none() {
                return fail(format!("unknown protocol {p:?} (por, cft, bft)"));
            }
        }
        if self.grid.nodes.is_empty() {
            return fail("grid.nodes is empty".into());
        }
        for &n in &self.grid.nodes {
            if n < 3 {
                return fail(format!("cluster size {n} below minimum 3"));
            }
        }
        let seeds = self.grid.seeds.expand();
        if seeds.is_empty() {
            return fail("grid.seeds expands to nothing".into());
        }
        if let SeedSpec::Range(r) = &self.grid.seeds {
            if r.start.checked_add(r.count).is_none() {
                return fail("grid.seeds range overflows".into());
            }
        }
        if self.grid.fault_fraction.is_empty() {
            return fail("grid.fault_fraction is empty".into());
        }
        for &f in &self.grid.fault_fraction {
            if !(0.0..1.0).contains(&f) {
                return fail(format!("fault_fraction {f} outside [0, 1)"));
            }
            for &n in &self.grid.nodes {
                if f > 0.0 && fault_count(f, n) >= n {
                    return fail(format!(
                        "fault_fraction {f} leaves no honest node at size {n}"
                    ));
                }
            }
        }
        let any_faulty = self.grid.fault_fraction.iter().any(|&f| fault_count_possible(f, &self.grid.nodes));
        match &self.faults {
            None if any_faulty => {
                return fail("positive fault_fraction requires a [faults] table".into());
            }
            Some(t) => {
                let Some(kind) = BehaviorKind::parse(&t.kind) else {
                    return fail(format!(
                        "unknown fault kind {:?} (honest, false_reporter, crash_stop, tampering_leader)",
                        t.kind
                    ));
                };
                if kind == BehaviorKind::Honest {
                    return fail("fault kind honest is a no-op; drop the [faults] table".into());
                }
                if let Err(e) = t.build().validate(AttributeKey::ALL.len()) {
                    return fail(e);
                }
            }
            None => {}
        }
        let violations = self.params.build().validate();
        if !violations.is_empty() {
            return fail(violations.join("; "));
        }
        if self.network.latency[0] > self.network.latency[1] {
            return fail(format!(
                "network.latency [{}, {}] must be ordered",
                self.network.latency[0], self.network.latency[1]
            ));
        }
        if !(0.0..1.0).contains(&self.network.drop_probability) {
            return fail(format!(
                "network.drop_probability {} outside [0, 1)",
                self.network.drop_probability
            ));
        }
        if self.workload.proposals == 0 {
            return fail("workload.proposals must be positive".into());
        }
        if self.workload.inter_arrival == 0 {
            return fail("workload.inter_arrival must be positive".into());
        }
        if self.stop.max_time == 0 {
            return fail("stop.max_time must be positive".into());
        }
        if self.stop.target_commits == Some(0) {
            return fail("stop.target_commits must be positive when set".into());
        }
        Ok(())
    }

    /// Cartesian expansion: protocol x nodes x fraction x seed, in file
    /// order with seeds innermost. Stable, so row order survives reruns.
    pub fn plan(&self) -> Vec<PlannedRun> {
        let seeds = self.grid.seeds.expand();
        let params = self.params.build();
        let network = self.network.build();
        let mut runs = Vec::new();
        for proto in &self.grid.protocols {
            let protocol = ProtocolKind::parse(proto).expect("validated");
            for &n in &self.grid.nodes {
                for &fraction in &self.grid.fault_fraction {
                    let count = fault_count(fraction, n);
                    let mut behaviors = vec![BehaviorSpec::honest(); n as usize];
                    if count > 0 {
                        let tpl = self.faults.as_ref().expect("validated").build();
                        for i in (n - count)..n {
                            behaviors[i as usize] = tpl.clone();
                        }
                    }
                    for &seed in &seeds {
                        runs.push(PlannedRun {
                            scenario: self.scenario.clone(),
                            protocol,
                            nodes: n,
                            fault_fraction: fraction,
                            seed,
                            spec: RunSpec {
                                protocol,
                                nodes: n,
                                seed,
                                params: params.clone(),
                                network: network.clone(),
                                workload: WorkloadSpec {
                                    proposals: self.workload.proposals,
                                    inter_arrival: self.workload.inter_arrival,
                                },
                                behaviors: behaviors.clone(),
                                profile: GenerationProfile::default(),
                                stop: StopRule {
                                    max_time: self.stop.max_time,
                                    target_commits: self.stop.target_commits,
                                },
                                collect_traces: false,
                            },
                        });
                    }
                }
            }
        }
        runs
    }
}

fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

fn fault_count_possible(fraction: f64, nodes: &[u32]) -> bool {
    fraction > 0.0 && nodes.iter().any(|&n| fault_count(fraction, n) > 0)
}

/// Built-in scenario files covering the standard study grid.
pub const PRESETS: &[(&str, &str)] = &[
    ("qod_thld10_w5", include_str!("../presets/qod_thld10_w5.toml")),
    ("qod_thld10_w15", include_str!("../presets/qod_thld10_w15.toml")),
    ("qod_thld20_w5", include_str!("../presets/qod_thld20_w5.toml")),
    ("qod_thld20_w15", include_str!("../presets/qod_thld20_w15.toml")),
    ("latency_vs_size", include_str!("../presets/latency_vs_size.toml")),
    ("throughput_vs_size", include_str!("../presets/throughput_vs_size.toml")),
    ("message_complexity", include_str!("../presets/message_complexity.toml")),
    ("byzantine_tolerance", include_str!("../presets/byzantine_tolerance.toml")),
    ("crash_tolerance", include_str!("../presets/crash_tolerance.toml")),
    ("reputation_convergence", include_str!("../presets/reputation_convergence.toml")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let Some((_, text)) = PRESETS.iter().find(|(n, _)| *n == name) else {
        return Err(ScenarioError::UnknownPreset {
            name: name.to_string(),
            available: PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        });
    };
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "smoke"

[grid]
protocols = ["por"]
nodes = [5]
seeds = [42]

[workload]
proposals = 10
inter_arrival = 400

[stop]
max_time = 60000
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.params.build(), ProtocolParams::default());
        assert_eq!(cfg.network.build(), NetworkSpec::default());
        let plan = cfg.plan();
        assert_eq!(plan.len(), 1);
        let run = &plan[0];
        assert_eq!(run.protocol, ProtocolKind::Por);
        assert_eq!(run.nodes, 5);
        assert_eq!(run.seed, 42);
        assert_eq!(run.fault_fraction, 0.0);
        assert!(run.spec.behaviors.iter().all(|b| b.kind == BehaviorKind::Honest));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("[workload]", "typo_key = 3\n[workload]");
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)), "{err}");
    }

    #[test]
    fn grid_expansion_order_and_size() {
        let text = r#"
scenario = "grid"

[grid]
protocols = ["por", "cft"]
nodes = [4, 7]
fault_fraction = [0.0, 0.25]
seeds = { start = 1, count = 3 }

[workload]
proposals = 5
inter_arrival = 300

[faults]
kind = "false_reporter"
false_report_probability = 0.5
attribute_corruption_count = 2

[stop]
max_time = 10000
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        let plan = cfg.plan();
        assert_eq!(plan.len(), 2 * 2 * 2 * 3);
        // Seeds vary fastest, protocols slowest.
        assert_eq!(plan[0].seed, 1);
        assert_eq!(plan[1].seed, 2);
        assert_eq!((plan[0].protocol, plan[0].nodes, plan[0].fault_fraction), (ProtocolKind::Por, 4, 0.0));
        assert_eq!(plan.last().unwrap().protocol, ProtocolKind::Cft);
        // 0.25 of 7 rounds to 2 faulty nodes on the top ids.
        let cell = plan
            .iter()
            .find(|r| r.nodes == 7 && r.fault_fraction > 0.0)
            .unwrap();
        let faulty: Vec<usize> = cell
            .spec
            .behaviors
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind != BehaviorKind::Honest)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(faulty, vec![5, 6]);
    }

    #[test]
    fn fault_counts_round_to_nearest() {
        assert_eq!(fault_count(0.0, 10), 0);
        assert_eq!(fault_count(0.1, 5), 1);
        assert_eq!(fault_count(0.2, 5), 1);
        assert_eq!(fault_count(0.3, 5), 2);
        assert_eq!(fault_count(0.444, 9), 4);
        assert_eq!(fault_count(0.476, 21), 10);
    }

    #[test]
    fn positive_fraction_without_fault_table_is_invalid() {
        let text = MINIMAL.replace("seeds = [42]", "seeds = [42]\nfault_fraction = [0.3]");
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("[faults]"), "{err}");
    }

    #[test]
    fn parameter_violations_surface_verbatim() {
        let text = MINIMAL.replace(
            "[workload]",
            "[params]\nr_thld = 80.0\nr_init = 20.0\n\n[workload]",
        );
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("r_thld 80 exceeds r_init 20"), "{err}");
    }

    #[test]
    fn seed_range_and_list_agree() {
        let range = SeedSpec::Range(SeedRange { start: 5, count: 4 });
        assert_eq!(range.expand(), vec![5, 6, 7, 8]);
        let list = SeedSpec::List(vec![5, 6, 7, 8]);
        assert_eq!(list.expand(), range.expand());
    }

    #[test]
    fn every_preset_parses_and_plans() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap_or_else(|e| panic!("preset {name}: {e}"));
            assert_eq!(&cfg.scenario, name, "file name matches scenario id");
            let plan = cfg.plan();
            assert!(!plan.is_empty(), "preset {name} plans nothing");
            for run in &plan {
                assert!(run.spec.behaviors.len() == run.nodes as usize);
            }
        }
        assert!(matches!(
            preset("no_such"),
            Err(ScenarioError::UnknownPreset { .. })
        ));
    }

    #[test]
    fn honest_fault_kind_is_rejected() {
        let text = MINIMAL.replace(
            "[workload]",
            "[faults]\nkind = \"honest\"\n\n[workload]",
        );
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("no-op"), "{err}");
    }

    #[test]
    fn oversized_fraction_is_rejected() {
        let text = MINIMAL.replace(
            "seeds = [42]",
            "seeds = [42]\nfault_fraction = [0.95]",
        );
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("no honest node"), "{err}");
    }
}
