//! Cost scenarios on the `(7, 3)` example code and multi-generation
//! repair simulations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{fmt_sig, int, msr_point, rat, repair_gamma, to_f64, CapacityError, Rational, SystemParams};
use crate::exactcode::{
    collaborative_repair, collect, encode_object, progressive_repair_with_digests, Behavior, ExactCodeError,
    FragmentDigestTable, NodeBlock, ObjectMatrix, RepairOptions, RepairReport,
};
use crate::galois::{Field, GaloisError, RsCode};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("generation {generation}: {source}")]
    Repair {
        generation: usize,
        #[source]
        source: ExactCodeError,
    },
    #[error(transparent)]
    ExactCode(#[from] ExactCodeError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The six repair-cost columns: selfish and polluting adversaries, each
/// absent, as a newcomer, or as a live node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostScenario {
    SelfishNone,
    SelfishNewcomer,
    SelfishLive,
    PollutingNone,
    PollutingNewcomer,
    PollutingLive,
}

impl CostScenario {
    pub const ALL: [CostScenario; 6] = [
        CostScenario::SelfishNone,
        CostScenario::SelfishNewcomer,
        CostScenario::SelfishLive,
        CostScenario::PollutingNone,
        CostScenario::PollutingNewcomer,
        CostScenario::PollutingLive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostScenario::SelfishNone => "selfish-none",
            CostScenario::SelfishNewcomer => "selfish-newcomer",
            CostScenario::SelfishLive => "selfish-live",
            CostScenario::PollutingNone => "polluting-none",
            CostScenario::PollutingNewcomer => "polluting-newcomer",
            CostScenario::PollutingLive => "polluting-live",
        }
    }

    /// Column heading in the published tables.
    pub fn label(self) -> &'static str {
        match self {
            CostScenario::SelfishNone => "selfish: l0=L0=0",
            CostScenario::SelfishNewcomer => "selfish: l0=1, L0=0",
            CostScenario::SelfishLive => "selfish: l0=0, L0=1",
            CostScenario::PollutingNone => "polluting: b0=B0=0",
            CostScenario::PollutingNewcomer => "polluting: b0=1, B0=0",
            CostScenario::PollutingLive => "polluting: b0=0, B0=1",
        }
    }

    /// Published `(beta, beta', gamma, d)`.
    pub fn published(self) -> (Rational, Rational, Rational, usize) {
        match self {
            CostScenario::SelfishNone | CostScenario::PollutingNone => (rat(1, 2), rat(1, 2), int(2), 3),
            CostScenario::SelfishNewcomer | CostScenario::PollutingNewcomer => (int(1), int(0), int(3), 3),
            CostScenario::SelfishLive => (rat(3, 4), rat(1, 2), int(2), 3),
            CostScenario::PollutingLive => (rat(1, 2), rat(1, 2), int(3), 5),
        }
    }
}

impl fmt::Display for CostScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostScenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CostScenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_string()))
    }
}

/// Costs measured from one repair of nodes 1 and 2 with nodes 3..=7 live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostRecord {
    pub scenario: CostScenario,
    pub beta: Rational,
    pub beta_prime: Rational,
    pub gamma: Rational,
    pub effective_d: usize,
    /// Whether the honest newcomers' blocks came out bit-identical.
    pub exact: bool,
    pub report: RepairReport,
}

pub fn run_cost_scenario(scenario: CostScenario) -> Result<CostRecord, ScenarioError> {
    let code = RsCode::example();
    let obj = ObjectMatrix::random(code.field(), 2, 3, &mut ChaCha8Rng::seed_from_u64(2012));
    let blocks = encode_object(&obj, &code)?;
    let failed = [1usize, 2];
    let live: Vec<NodeBlock> = blocks[2..].to_vec();
    let mut adv = BTreeMap::new();
    let mut opts = RepairOptions::default();
    match scenario {
        CostScenario::SelfishNone | CostScenario::PollutingNone => {}
        CostScenario::SelfishNewcomer => {
            adv.insert(2, Behavior::Selfish);
        }
        CostScenario::PollutingNewcomer => {
            adv.insert(2, Behavior::Polluting);
        }
        CostScenario::SelfishLive => {
            // Both newcomers try the same silent node plus two distinct ones.
            adv.insert(3, Behavior::Selfish);
            opts.contacts = BTreeMap::from([(1, vec![3, 4, 5]), (2, vec![3, 6, 7])]);
        }
        CostScenario::PollutingLive => {
            adv.insert(3, Behavior::Polluting);
            opts.assumed_polluters = 1;
        }
    }
    let (repaired, report) = collaborative_repair(&code, &live, &failed, &adv, &opts)?;
    let exact = repaired
        .iter()
        .filter(|b| adv.get(&b.node_id).copied().unwrap_or_default() == Behavior::Honest)
        .all(|b| *b == blocks[b.node_id - 1]);
    Ok(CostRecord {
        scenario,
        beta: report.beta_av(),
        beta_prime: report.beta_prime(),
        gamma: report.gamma(),
        effective_d: report.effective_d(),
        exact,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    #[default]
    None,
    Digests,
}

fn default_m() -> u8 {
    8
}

/// Simulation input, read from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub kappa: usize,
    pub t: usize,
    #[serde(default = "default_m")]
    pub m: u8,
    pub generations: usize,
    /// Failed ids per generation. Empty means a seeded uniform schedule over
    /// nodes that are not adversarial.
    #[serde(default)]
    pub schedule: Vec<Vec<usize>>,
    /// Behavior of whichever node holds each id, in every generation.
    #[serde(default)]
    pub behaviors: BTreeMap<usize, Behavior>,
    #[serde(default)]
    pub mitigation: Mitigation,
    /// Without digests: whether newcomers decode over extra contacts
    /// (provisioning for `assumed_polluters`) or trust answers blindly.
    #[serde(default)]
    pub detection: bool,
    #[serde(default)]
    pub assumed_polluters: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.t == 0 || self.kappa == 0 {
            return bad("t and kappa must be positive".into());
        }
        if self.n < self.kappa + self.t {
            return bad(format!("n={} leaves fewer than kappa={} live nodes", self.n, self.kappa));
        }
        let field = Field::new(self.m)?;
        if self.n >= field.order() {
            return bad(format!("n={} needs a field larger than GF(2^{})", self.n, self.m));
        }
        if let Some(id) = self.behaviors.keys().find(|&&id| id == 0 || id > self.n) {
            return bad(format!("behavior for unknown node {id}"));
        }
        if !self.schedule.is_empty() && self.schedule.len() != self.generations {
            return bad(format!(
                "schedule has {} entries for {} generations",
                self.schedule.len(),
                self.generations
            ));
        }
        for (g, ids) in self.schedule.iter().enumerate() {
            let distinct: BTreeSet<_> = ids.iter().collect();
            if ids.len() != self.t || distinct.len() != self.t || ids.iter().any(|&i| i == 0 || i > self.n) {
                return bad(format!("generation {}: need {} distinct ids in 1..={}", g + 1, self.t, self.n));
            }
        }
        if self.schedule.is_empty() && self.honest_ids().len() < self.t {
            return bad("not enough non-adversarial nodes to schedule failures".into());
        }
        Ok(())
    }

    fn honest_ids(&self) -> Vec<usize> {
        (1..=self.n)
            .filter(|id| self.behaviors.get(id).copied().unwrap_or_default() == Behavior::Honest)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub repaired: Vec<usize>,
    /// Nodes whose stored block differs from the true encoding.
    pub polluted_blocks: usize,
    pub beta_av: Rational,
    pub beta_prime: Rational,
    pub gamma: Rational,
    pub gamma_analytic: Rational,
    pub total_transfer: usize,
    pub reconstruction_ok: bool,
}

pub const STATS_HEADER: &str =
    "generation,repaired,polluted_blocks,beta_av,beta_prime,gamma,gamma_analytic,total_transfer,reconstruction_ok";

impl GenerationStats {
    pub fn csv_row(&self) -> String {
        let ids: Vec<String> = self.repaired.iter().map(ToString::to_string).collect();
        let num = |r: &Rational| fmt_sig(to_f64(r), 9);
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.generation,
            ids.join(";"),
            self.polluted_blocks,
            num(&self.beta_av),
            num(&self.beta_prime),
            num(&self.gamma),
            num(&self.gamma_analytic),
            self.total_transfer,
            self.reconstruction_ok
        )
    }
}

pub fn write_stats_csv<W: Write>(stats: &[GenerationStats], mut out: W) -> io::Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    for s in stats {
        writeln!(out, "{}", s.csv_row())?;
    }
    Ok(())
}

/// Repair cost per node at the minimum storage point with `d = kappa`.
pub fn analytic_gamma(kappa: usize, t: usize) -> Result<Rational, ScenarioError> {
    let p = SystemParams::new(kappa as u32, kappa as u32, t as u32, int((t * kappa) as i128));
    let p = p.clone().at(&msr_point(&p)?);
    Ok(repair_gamma(&p) / p.unit())
}

/// Runs `cfg.generations` rounds of failure and repair. Pollution is
/// tracked against the true encoding, which is never shown to the repair.
pub fn simulate_generations(cfg: &ScenarioConfig) -> Result<Vec<GenerationStats>, ScenarioError> {
    cfg.validate()?;
    let field = Field::new(cfg.m)?;
    let code = RsCode::new(field, cfg.n, cfg.kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let obj = ObjectMatrix::random(field, cfg.t, cfg.kappa, &mut rng);
    let truth = encode_object(&obj, &code)?;
    let digests = FragmentDigestTable::from_blocks(0, cfg.kappa, &truth);
    let gamma_analytic = analytic_gamma(cfg.kappa, cfg.t)?;
    let honest = cfg.honest_ids();
    let collectors: Vec<usize> = honest.iter().copied().take(cfg.kappa).collect();

    let mut stored: BTreeMap<usize, NodeBlock> = truth.iter().map(|b| (b.node_id, b.clone())).collect();
    let mut stats = Vec::with_capacity(cfg.generations);
    for generation in 1..=cfg.generations {
        let failed: Vec<usize> = match cfg.schedule.get(generation - 1) {
            Some(ids) => ids.clone(),
            None => {
                let mut ids: Vec<usize> = sample(&mut rng, honest.len(), cfg.t).into_iter().map(|i| honest[i]).collect();
                ids.sort_unstable();
                ids
            }
        };
        let live: Vec<NodeBlock> = stored
            .values()
            .filter(|b| !failed.contains(&b.node_id))
            .cloned()
            .collect();
        let opts = RepairOptions {
            assumed_polluters: cfg.assumed_polluters,
            detection: cfg.detection,
            seed: cfg.seed ^ (generation as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..RepairOptions::default()
        };
        let result = match cfg.mitigation {
            Mitigation::None => collaborative_repair(&code, &live, &failed, &cfg.behaviors, &opts),
            Mitigation::Digests => {
                progressive_repair_with_digests(&code, &live, &failed, &cfg.behaviors, &digests, 0, &opts)
            }
        };
        let (repaired, report) = result.map_err(|source| ScenarioError::Repair { generation, source })?;
        for b in repaired {
            stored.insert(b.node_id, b);
        }
        let polluted_blocks = truth.iter().filter(|b| stored[&b.node_id] != **b).count();
        let sample_blocks: Vec<NodeBlock> = collectors.iter().map(|id| stored[id].clone()).collect();
        let reconstruction_ok = collect(&code, &sample_blocks).is_ok_and(|o| o == obj);
        stats.push(GenerationStats {
            generation,
            repaired: failed,
            polluted_blocks,
            beta_av: report.beta_av(),
            beta_prime: report.beta_prime(),
            gamma: report.gamma(),
            gamma_analytic,
            total_transfer: report.total_transfer(),
            reconstruction_ok,
        });
    }
    Ok(stats)
}
