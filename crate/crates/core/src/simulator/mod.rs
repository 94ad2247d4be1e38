//! Round-based driver for the grouping protocol.
//!
//! One round is one slot tick. Each round samples presence (under
//! [`ChurnMode::Sampled`]), lets every group with an online representative
//! explore, then lets groups run the grouping phase in ascending id order.
//! A run converges once no merge has happened for a full window of rounds.

mod overlay;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::availability::{
    alpha_availability, generate_diurnal, group_vector, AvailabilityError, AvailabilityVector, GeneratorParams,
    SlotIndex, DEFAULT_SLOTS,
};
use crate::ids::{GroupId, PeerId};
use crate::metrics::Metric;
use crate::protocol::{MergeOutcome, ProtocolError, ProtocolParams, World};

pub use overlay::random_overlay;

const TAG_PEAKS: u64 = 0x7065_616b;
const TAG_VECTORS: u64 = 0x7665_6374;
const TAG_OVERLAY: u64 = 0x6f76_6572;
const TAG_RUN: u64 = 0x7275_6e73;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("overlay infeasible: {0}")]
    TopologyInfeasible(String),
    #[error("no convergence after {rounds} rounds")]
    NoConvergence { rounds: u64 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Availability(#[from] AvailabilityError),
}

/// SplitMix64 finaliser; used to derive independent seeds.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn derive(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// How groups are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Eq2,
    Eq3,
    Random,
}

impl Scheme {
    pub fn metric(self) -> Option<Metric> {
        match self {
            Scheme::Eq2 => Some(Metric::RatioExponent),
            Scheme::Eq3 => Some(Metric::AlphaUtility),
            Scheme::Random => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Eq2 => "eq2",
            Scheme::Eq3 => "eq3",
            Scheme::Random => "random",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eq2" => Ok(Scheme::Eq2),
            "eq3" => Ok(Scheme::Eq3),
            "random" => Ok(Scheme::Random),
            other => Err(format!("unknown metric `{other}` (expected eq2, eq3 or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChurnMode {
    /// Every peer is online every round.
    Idealized,
    /// Each peer is online with its base availability for the current slot.
    Sampled,
}

impl ChurnMode {
    pub fn name(self) -> &'static str {
        match self {
            ChurnMode::Idealized => "idealized",
            ChurnMode::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for ChurnMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "idealized" => Ok(ChurnMode::Idealized),
            "sampled" => Ok(ChurnMode::Sampled),
            other => Err(format!("unknown churn mode `{other}` (expected idealized or sampled)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub peer_count: usize,
    pub slots: usize,
    pub degree_min: usize,
    pub degree_max: usize,
    pub knowncount: usize,
    pub max_group_size: usize,
    pub scheme: Scheme,
    /// Seeds the population and the overlay.
    pub seed: u64,
    /// Selects the run-time random stream (churn draws, random baseline).
    pub stream: u64,
    pub churn: ChurnMode,
    /// Quiet rounds needed to declare convergence; `None` means one day.
    pub convergence_window: Option<u64>,
    pub max_rounds: u64,
    pub min_contribution: f64,
    pub generator: GeneratorParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            peer_count: 10_000,
            slots: DEFAULT_SLOTS,
            degree_min: 5,
            degree_max: 10,
            knowncount: 10,
            max_group_size: 6,
            scheme: Scheme::Eq2,
            seed: 0,
            stream: 0,
            churn: ChurnMode::Idealized,
            convergence_window: None,
            max_rounds: 1000,
            min_contribution: 0.0,
            generator: GeneratorParams::default(),
        }
    }
}

impl SimConfig {
    pub fn slot_length_hours(&self) -> f64 {
        24.0 / self.slots as f64
    }

    pub fn window(&self) -> u64 {
        self.convergence_window.unwrap_or(self.slots as u64)
    }

    pub fn protocol_params(&self) -> ProtocolParams {
        ProtocolParams {
            metric: self.scheme.metric().unwrap_or(Metric::RatioExponent),
            knowncount: self.knowncount,
            max_group_size: self.max_group_size,
            min_contribution: self.min_contribution,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.slots < 1 {
            return bad("slots must be at least 1".into());
        }
        if self.degree_min < 1 || self.degree_min > self.degree_max || self.degree_max >= self.peer_count {
            return bad(format!(
                "need 1 <= degree_min ({}) <= degree_max ({}) < peers ({})",
                self.degree_min, self.degree_max, self.peer_count
            ));
        }
        if self.max_group_size < 2 {
            return bad("max_group_size must be at least 2".into());
        }
        if self.knowncount < 1 {
            return bad("knowncount must be at least 1".into());
        }
        if self.window() < 1 {
            return bad("convergence_window must be at least 1".into());
        }
        if !self.min_contribution.is_finite() {
            return bad("min_contribution must be finite".into());
        }
        self.generator.validate()?;
        Ok(())
    }

    /// Maximum number of messages one round may produce: each group
    /// exchanges a request and a reply with at most `size * degree_max`
    /// neighbour groups and sends at most `knowncount` invitations, each
    /// answered once.
    pub fn message_ceiling(&self, groups: usize) -> u64 {
        (groups as u64) * 2 * (self.max_group_size as u64 * self.degree_max as u64 + self.knowncount as u64)
    }
}

/// Population and overlay for `cfg`, every peer a singleton group.
pub fn build_world(cfg: &SimConfig) -> Result<World, SimError> {
    cfg.validate()?;
    let mut peak_rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, TAG_PEAKS));
    let vectors = (0..cfg.peer_count)
        .map(|i| {
            let peak = SlotIndex::new(peak_rng.random_range(0..cfg.slots), cfg.slots)?;
            generate_diurnal(
                derive(cfg.seed, TAG_VECTORS ^ mix64(i as u64)),
                peak,
                cfg.slots,
                &cfg.generator,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut overlay_rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, TAG_OVERLAY));
    let adjacency = random_overlay(cfg.peer_count, cfg.degree_min, cfg.degree_max, &mut overlay_rng)?
        .into_iter()
        .map(|list| list.into_iter().map(PeerId).collect())
        .collect();
    Ok(World::new(vectors, adjacency, cfg.protocol_params())?)
}

/// Peak slot each peer was generated with, in peer order.
pub fn peak_slots(cfg: &SimConfig) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, TAG_PEAKS));
    (0..cfg.peer_count).map(|_| rng.random_range(0..cfg.slots)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: u64,
    pub slot: usize,
    pub merges: Vec<MergeOutcome>,
    pub messages: u64,
    pub active_groups: usize,
}

impl RoundReport {
    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub id: GroupId,
    pub members: Vec<PeerId>,
    pub vector: AvailabilityVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheme: Scheme,
    pub seed: u64,
    pub slots: usize,
    pub max_group_size: usize,
    pub peer_count: usize,
    /// First round of the final quiet window.
    pub rounds_to_convergence: u64,
    pub rounds_run: u64,
    pub converged: bool,
    pub merge_count_per_round: Vec<usize>,
    pub messages_per_round: Vec<u64>,
    pub total_messages: u64,
    pub group_size_histogram: BTreeMap<usize, usize>,
    pub groups: Vec<GroupRecord>,
    /// Every slot value of every final group vector, groups in id order.
    pub one_availability: Vec<f64>,
    /// Probability of at least two members online, same layout.
    pub two_availability: Vec<f64>,
}

impl RunMetrics {
    fn from_groups(cfg: &SimConfig, world: &World, groups: Vec<GroupRecord>) -> Result<RunMetrics, SimError> {
        let mut hist = BTreeMap::new();
        let mut one = Vec::with_capacity(groups.len() * cfg.slots);
        let mut two = Vec::with_capacity(groups.len() * cfg.slots);
        for g in &groups {
            *hist.entry(g.members.len()).or_insert(0) += 1;
            let roster: Vec<&AvailabilityVector> = g.members.iter().map(|p| &world.peer(*p).base_vector).collect();
            for k in 0..cfg.slots {
                let slot = SlotIndex::new(k, cfg.slots)?;
                one.push(g.vector.get(slot));
                two.push(alpha_availability(roster.iter().copied(), 2, slot)?);
            }
        }
        Ok(RunMetrics {
            scheme: cfg.scheme,
            seed: cfg.seed,
            slots: cfg.slots,
            max_group_size: cfg.max_group_size,
            peer_count: world.peers().len(),
            rounds_to_convergence: 0,
            rounds_run: 0,
            converged: true,
            merge_count_per_round: Vec::new(),
            messages_per_round: Vec::new(),
            total_messages: 0,
            group_size_histogram: hist,
            groups,
            one_availability: one,
            two_availability: two,
        })
    }

    pub fn ensure_converged(&self) -> Result<(), SimError> {
        if self.converged {
            Ok(())
        } else {
            Err(SimError::NoConvergence {
                rounds: self.rounds_run,
            })
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

/// A world plus the clock and random stream that drive it.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    world: World,
    rng: ChaCha8Rng,
    round: u64,
    prepared: bool,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Simulation, SimError> {
        let world = build_world(&cfg)?;
        Ok(Simulation::with_world(cfg, world))
    }

    pub fn with_world(cfg: SimConfig, world: World) -> Simulation {
        let rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, TAG_RUN ^ mix64(cfg.stream)));
        Simulation {
            cfg,
            world,
            rng,
            round: 0,
            prepared: false,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn into_world(self) -> World {
        self.world
    }

    /// Index of the next round to execute.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn current_slot(&self) -> usize {
        (self.round % self.cfg.slots as u64) as usize
    }

    /// Samples presence for the upcoming round. Called implicitly by
    /// [`Simulation::run_round`]; exposed so callers can inspect who is
    /// offline before the round executes.
    pub fn begin_round(&mut self) {
        if self.prepared {
            return;
        }
        match self.cfg.churn {
            ChurnMode::Idealized => self.world.set_all_online(),
            ChurnMode::Sampled => {
                let slot = self.current_slot();
                let online = self
                    .world
                    .peers()
                    .iter()
                    .map(|p| self.rng.random::<f64>() < p.base_vector.as_slice()[slot])
                    .collect();
                self.world.set_online(online);
            }
        }
        self.prepared = true;
    }

    pub fn run_round(&mut self) -> Result<RoundReport, SimError> {
        self.begin_round();
        let slot = self.current_slot();
        let before = self.world.stats().total();
        let ids = self.world.group_ids();
        let active_groups = ids.iter().filter(|g| self.world.has_representative(**g)).count();
        for id in &ids {
            if self.world.group(*id).is_some() {
                self.world.explore_group(*id)?;
            }
        }
        let mut merges = Vec::new();
        for id in self.world.group_ids() {
            if self.world.group(id).is_none() {
                continue;
            }
            let outcome = self.world.make_group(id)?;
            if matches!(outcome, MergeOutcome::Merged { .. }) {
                merges.push(outcome);
            }
        }
        self.world.end_round();
        let report = RoundReport {
            round: self.round,
            slot,
            merges,
            messages: self.world.stats().total() - before,
            active_groups,
        };
        self.round += 1;
        self.prepared = false;
        Ok(report)
    }

    /// Runs rounds until `window` consecutive rounds pass without a merge
    /// or `max_rounds` is reached. Non-convergence is reported through
    /// [`RunMetrics::converged`].
    pub fn run_to_convergence(&mut self) -> Result<RunMetrics, SimError> {
        self.run_to_convergence_with(|_, _| {})
    }

    /// As [`Simulation::run_to_convergence`], calling `observe` after every
    /// round.
    pub fn run_to_convergence_with<F>(&mut self, mut observe: F) -> Result<RunMetrics, SimError>
    where
        F: FnMut(&RoundReport, &World),
    {
        let window = self.cfg.window();
        let mut quiet = 0;
        let mut quiet_since = self.round;
        let mut merges = Vec::new();
        let mut messages = Vec::new();
        let mut converged = false;
        let start = self.round;
        while self.round - start < self.cfg.max_rounds {
            let report = self.run_round()?;
            observe(&report, &self.world);
            merges.push(report.merge_count());
            messages.push(report.messages);
            if report.merges.is_empty() {
                if quiet == 0 {
                    quiet_since = report.round;
                }
                quiet += 1;
                if quiet >= window {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let mut metrics = RunMetrics::from_groups(&self.cfg, &self.world, self.group_records())?;
        metrics.rounds_to_convergence = if quiet > 0 {
            quiet_since - start
        } else {
            self.round - start
        };
        metrics.rounds_run = self.round - start;
        metrics.converged = converged;
        metrics.total_messages = messages.iter().sum();
        metrics.merge_count_per_round = merges;
        metrics.messages_per_round = messages;
        Ok(metrics)
    }

    fn group_records(&self) -> Vec<GroupRecord> {
        self.world
            .groups()
            .map(|g| GroupRecord {
                id: g.id,
                members: g.members.iter().map(|m| m.peer).collect(),
                vector: g.vector.clone(),
            })
            .collect()
    }
}

/// Baseline: shuffle the peers with the run stream and cut them into groups
/// of `max_group_size`, the last group taking the remainder.
pub fn random_grouping(world: &World, cfg: &SimConfig) -> Result<RunMetrics, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, TAG_RUN ^ mix64(cfg.stream)));
    let mut order: Vec<PeerId> = world.peers().iter().map(|p| p.id).collect();
    order.shuffle(&mut rng);
    let groups = order
        .chunks(cfg.max_group_size)
        .enumerate()
        .map(|(i, chunk)| {
            let vector = group_vector(chunk.iter().map(|p| &world.peer(*p).base_vector))?;
            Ok(GroupRecord {
                id: GroupId(i as u64),
                members: chunk.to_vec(),
                vector,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let mut metrics = RunMetrics::from_groups(cfg, world, groups)?;
    metrics.scheme = Scheme::Random;
    Ok(metrics)
}

/// Builds the world for `cfg` and runs the configured scheme.
pub fn run(cfg: &SimConfig) -> Result<RunMetrics, SimError> {
    let world = build_world(cfg)?;
    match cfg.scheme {
        Scheme::Random => random_grouping(&world, cfg),
        Scheme::Eq2 | Scheme::Eq3 => Simulation::with_world(cfg.clone(), world).run_to_convergence(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(peers: usize, seed: u64) -> SimConfig {
        SimConfig {
            peer_count: peers,
            degree_min: 2,
            degree_max: 3,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn tiny_world_constraints() {
        let cfg = small(10, 3);
        let w = build_world(&cfg).unwrap();
        assert_eq!(w.peers().len(), 10);
        assert_eq!(w.group_count(), 10);
        for p in w.peers() {
            assert!((2..=3).contains(&p.neighbors.len()));
        }
        assert!(w.check_invariants().is_empty());
    }

    #[test]
    fn world_is_deterministic() {
        let cfg = small(50, 11);
        let a = build_world(&cfg).unwrap();
        let b = build_world(&cfg).unwrap();
        assert_eq!(a.peers(), b.peers());
        let c = build_world(&small(50, 12)).unwrap();
        assert_ne!(a.peers(), c.peers());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(10, 0);
        cfg.degree_max = 10;
        assert!(matches!(build_world(&cfg), Err(SimError::InvalidConfig(_))));
        let mut cfg = small(10, 0);
        cfg.max_group_size = 1;
        assert!(build_world(&cfg).is_err());
        let mut cfg = small(5, 0);
        cfg.degree_min = 3;
        cfg.degree_max = 3;
        assert!(matches!(build_world(&cfg), Err(SimError::TopologyInfeasible(_))));
    }

    #[test]
    fn peaks_are_uniform() {
        let cfg = SimConfig {
            peer_count: 10_000,
            seed: 77,
            ..SimConfig::default()
        };
        let mut counts = vec![0usize; cfg.slots];
        for p in peak_slots(&cfg) {
            counts[p] += 1;
        }
        let expected = cfg.peer_count as f64 / cfg.slots as f64;
        let sigma = (cfg.peer_count as f64 * (1.0 / 12.0) * (11.0 / 12.0)).sqrt();
        for c in &counts {
            assert!((*c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        // 99.9th percentile of chi-square with 11 degrees of freedom
        assert!(chi2 < 31.26, "chi2 = {chi2}");
    }

    fn uniform_world(n: usize, scheme: Scheme) -> Simulation {
        let cfg = SimConfig {
            peer_count: n,
            degree_min: 2,
            degree_max: 4,
            scheme,
            max_rounds: 60,
            ..SimConfig::default()
        };
        let adj = random_overlay(n, 2, 4, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap()
            .into_iter()
            .map(|l| l.into_iter().map(PeerId).collect())
            .collect();
        let world = World::new(
            vec![AvailabilityVector::uniform(0.4, 12); n],
            adj,
            cfg.protocol_params(),
        )
        .unwrap();
        Simulation::with_world(cfg, world)
    }

    #[test]
    fn identical_patterns_never_merge_under_ratio_metric() {
        let mut sim = uniform_world(30, Scheme::Eq2);
        let m = sim.run_to_convergence().unwrap();
        assert!(m.converged);
        assert_eq!(m.merge_count_per_round.iter().sum::<usize>(), 0);
        assert_eq!(m.group_count(), 30);
    }

    #[test]
    fn identical_patterns_still_merge_under_utility_metric() {
        let mut sim = uniform_world(30, Scheme::Eq3);
        let m = sim.run_to_convergence().unwrap();
        assert!(m.merge_count_per_round.iter().sum::<usize>() > 0);
    }

    #[test]
    fn complementary_pair_merges_in_first_round() {
        let cfg = SimConfig {
            peer_count: 2,
            degree_min: 1,
            degree_max: 1,
            ..SimConfig::default()
        };
        let mut a = vec![0.1; 12];
        a[..6].iter_mut().for_each(|x| *x = 0.9);
        let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        let world = World::new(
            vec![AvailabilityVector::new(a).unwrap(), AvailabilityVector::new(b).unwrap()],
            vec![vec![PeerId(1)], vec![PeerId(0)]],
            cfg.protocol_params(),
        )
        .unwrap();
        let mut sim = Simulation::with_world(cfg, world);
        let r = sim.run_round().unwrap();
        assert_eq!(r.merge_count(), 1);
        assert_eq!(sim.world().group_count(), 1);
    }

    #[test]
    fn already_merged_world_is_quiet() {
        let cfg = SimConfig {
            peer_count: 2,
            degree_min: 1,
            degree_max: 1,
            max_group_size: 2,
            ..SimConfig::default()
        };
        let mut world = World::new(
            vec![
                AvailabilityVector::uniform(0.3, 12),
                AvailabilityVector::uniform(0.7, 12),
            ],
            vec![vec![PeerId(1)], vec![PeerId(0)]],
            cfg.protocol_params(),
        )
        .unwrap();
        world.merge_group(GroupId(0), GroupId(1)).unwrap();
        world.end_round();
        let mut sim = Simulation::with_world(cfg.clone(), world);
        let m = sim.run_to_convergence().unwrap();
        assert!(m.converged);
        assert_eq!(m.rounds_to_convergence, 0);
        assert_eq!(m.rounds_run, cfg.window());
        assert_eq!(m.group_size_histogram.get(&2), Some(&1));
    }

    #[test]
    fn random_grouping_sizes() {
        let mut cfg = small(12, 5);
        cfg.max_group_size = 4;
        cfg.scheme = Scheme::Random;
        let w = build_world(&cfg).unwrap();
        let m = random_grouping(&w, &cfg).unwrap();
        let sizes: Vec<usize> = m.groups.iter().map(|g| g.members.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4]);
        assert_eq!(m.rounds_to_convergence, 0);

        let mut cfg = small(13, 5);
        cfg.max_group_size = 4;
        let w = build_world(&cfg).unwrap();
        let m = random_grouping(&w, &cfg).unwrap();
        let sizes: Vec<usize> = m.groups.iter().map(|g| g.members.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4, 1]);
        assert_eq!(m, random_grouping(&w, &cfg).unwrap());
        let total: usize = m.group_size_histogram.iter().map(|(s, c)| s * c).sum();
        assert_eq!(total, 13);
    }

    #[test]
    fn desk_run_is_deterministic_and_consistent() {
        let cfg = SimConfig {
            peer_count: 200,
            seed: 9,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg.clone()).unwrap();
        let mut prev_groups = sim.world().group_count();
        let a = sim
            .run_to_convergence_with(|r, w| {
                assert!(w.check_invariants().is_empty(), "round {}", r.round);
                assert!(r.messages <= cfg.message_ceiling(prev_groups));
                prev_groups = w.group_count();
            })
            .unwrap();
        assert!(a.converged);
        assert_eq!(*a.merge_count_per_round.last().unwrap(), 0);
        let total: usize = a.group_size_histogram.iter().map(|(s, c)| s * c).sum();
        assert_eq!(total, 200);
        assert_eq!(a.one_availability.len(), a.group_count() * 12);
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn offline_groups_are_untouched_under_sampling() {
        let cfg = SimConfig {
            peer_count: 200,
            seed: 4,
            churn: ChurnMode::Sampled,
            max_rounds: 48,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg).unwrap();
        for _ in 0..48 {
            sim.begin_round();
            let offline: Vec<_> = sim
                .world()
                .groups()
                .filter(|g| !sim.world().has_representative(g.id))
                .cloned()
                .collect();
            sim.run_round().unwrap();
            for g in offline {
                assert_eq!(sim.world().group(g.id), Some(&g));
            }
            assert!(sim.world().check_invariants().is_empty());
        }
    }

    #[test]
    fn mix64_spreads_seeds() {
        assert_ne!(mix64(0), mix64(1));
        assert_eq!(mix64(42), mix64(42));
    }
}
