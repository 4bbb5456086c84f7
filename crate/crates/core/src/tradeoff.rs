//! Worst-case min-cut over data-collector partitions and adversary
//! placements, and numerical minimization of repair bandwidth against
//! storage.
//!
//! The worst case is found by dynamic programming over
//! `(groups so far, nodes so far, adversary budget used)`. The program is
//! compiled once per configuration and can then be evaluated in exact
//! rationals or in `f64`, which is what the optimizer uses.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{
    mbr_point, to_f64, AdversaryKind, CapacityError, CapacityValue, CutScalar, CutTerm,
    GroupPartition, Rational, SystemParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TradeoffError {
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionMode {
    /// Minimize over every composition of `k` into parts `1..=t`.
    WorstCase,
    /// Minimize over compositions into exactly `g` parts.
    Fixed(u32),
}

/// Adversary counts with the per-group placement left to the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryBudget {
    pub kind: AdversaryKind,
    pub among_live: u32,
    pub per_group_max: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase<T> {
    pub value: T,
    pub partition: GroupPartition,
    pub allocation: Vec<u32>,
}

/// Compiled search space for one `(k, d, t, adversary, mode)`.
#[derive(Debug, Clone)]
pub struct CutProgram {
    k: u32,
    t: u32,
    total: u32,
    cap: u32,
    kind: AdversaryKind,
    groups: Option<u32>,
    d: u32,
    live_loss: u32,
}

impl CutProgram {
    pub fn new(
        p: &SystemParams,
        adv: Option<&AdversaryBudget>,
        mode: PartitionMode,
    ) -> Result<Self, TradeoffError> {
        p.validate()?;
        let (kind, among_live, cap, total) = match adv {
            Some(a) => (a.kind, a.among_live, a.per_group_max, a.total),
            None => (AdversaryKind::Selfish, 0, 0, 0),
        };
        let live_loss = kind.weight() * among_live;
        if live_loss > p.d {
            return Err(CapacityError::InvalidAdversary(format!(
                "{live_loss} live links lost exceeds d={}",
                p.d
            ))
            .into());
        }
        let groups = match mode {
            PartitionMode::WorstCase => None,
            PartitionMode::Fixed(g) => {
                if g == 0 || g > p.k || p.k > g * p.t {
                    return Err(TradeoffError::Infeasible(format!(
                        "cannot split k={} into {g} groups of size 1..={}",
                        p.k, p.t
                    )));
                }
                Some(g)
            }
        };
        Ok(CutProgram {
            k: p.k,
            t: p.t,
            total,
            cap,
            kind,
            groups,
            d: p.d,
            live_loss,
        })
    }

    fn term(&self, prefix: u32, u: u32, a: u32) -> CutTerm {
        CutTerm::new(self.d, self.t, prefix, u, self.live_loss, self.kind.weight() * a)
    }

    // Admissible (u, a) moves from `prefix` with `used` budget spent.
    fn moves(&self, prefix: u32, used: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let max_u = self.t.min(self.k - prefix);
        let max_a = self.cap.min(self.total - used);
        let selfish = self.kind == AdversaryKind::Selfish;
        (1..=max_u).flat_map(move |u| {
            let a_hi = if selfish { max_a.min(self.t - u) } else { max_a };
            (0..=a_hi).map(move |a| (u, a))
        })
    }

    fn layers(&self) -> usize {
        self.groups.map_or(1, |g| g as usize + 1)
    }

    fn idx(&self, layer: usize, s: u32, b: u32) -> usize {
        (layer * (self.k as usize + 1) + s as usize) * (self.total as usize + 1) + b as usize
    }

    // Prefix sums reachable at `layer` that can still complete to k.
    fn prefix_range(&self, layer: usize) -> std::ops::RangeInclusive<u32> {
        match self.groups {
            None => 0..=self.k,
            Some(g) => {
                let i = layer as u32;
                let rest = g - i;
                let lo = i.max(self.k.saturating_sub(rest * self.t));
                let hi = (i * self.t).min(self.k - rest);
                lo..=hi
            }
        }
    }

    fn next_layer(&self, layer: usize) -> usize {
        if self.groups.is_some() {
            layer + 1
        } else {
            0
        }
    }

    /// Minimum capacity and a minimizing witness, or `None` when no
    /// partition admits a feasible allocation.
    pub fn evaluate<T: CutScalar>(&self, alpha: T, beta: T, beta_prime: T) -> Option<WorstCase<T>> {
        let value = self.table(alpha, beta, beta_prime);
        let start = value[self.idx(0, 0, 0)]?;
        // Forward walk choosing the smallest (u, a) that attains the optimum.
        let mut partition = Vec::new();
        let mut allocation = Vec::new();
        let (mut layer, mut s, mut b) = (0usize, 0u32, 0u32);
        let mut remaining = start;
        while s < self.k {
            let next = self.next_layer(layer);
            let (u, a, rest) = self
                .moves(s, b)
                .filter_map(|(u, a)| {
                    let tail = value[self.idx(next, s + u, b + a)]?;
                    let v = self.term(s, u, a).eval(alpha, beta, beta_prime) + tail;
                    Some((u, a, v, tail))
                })
                .find(|&(_, _, v, _)| v.approx_le(remaining))
                .map(|(u, a, _, tail)| (u, a, tail))
                .expect("optimal move exists");
            partition.push(u);
            allocation.push(a);
            remaining = rest;
            layer = next;
            s += u;
            b += a;
        }
        Some(WorstCase {
            value: start,
            partition: GroupPartition::new(partition, self.k, self.t).expect("valid by construction"),
            allocation,
        })
    }

    /// Minimum capacity only.
    pub fn min_capacity<T: CutScalar>(&self, alpha: T, beta: T, beta_prime: T) -> Option<T> {
        let Some(g) = self.groups else {
            let value = self.table(alpha, beta, beta_prime);
            return value[self.idx(0, 0, 0)];
        };
        // Two rolling layers; only prefix sums reachable at a layer are
        // ever written or read.
        let width = self.total as usize + 1;
        let at = |s: u32, b: u32| s as usize * width + b as usize;
        let mut next: Vec<Option<T>> = vec![None; (self.k as usize + 1) * width];
        let mut cur = next.clone();
        next[at(self.k, self.total)] = Some(T::from_count(0));
        for layer in (0..g as usize).rev() {
            let reachable = self.prefix_range(layer + 1);
            for s in self.prefix_range(layer) {
                for b in 0..=self.total {
                    let mut best: Option<T> = None;
                    for (u, a) in self.moves(s, b) {
                        if !reachable.contains(&(s + u)) {
                            continue;
                        }
                        let Some(tail) = next[at(s + u, b + a)] else {
                            continue;
                        };
                        let v = self.term(s, u, a).eval(alpha, beta, beta_prime) + tail;
                        if best.is_none_or(|cur| v < cur) {
                            best = Some(v);
                        }
                    }
                    cur[at(s, b)] = best;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        next[at(0, 0)]
    }

    // value[layer, s, b] = cheapest completion from that state.
    fn table<T: CutScalar>(&self, alpha: T, beta: T, beta_prime: T) -> Vec<Option<T>> {
        let layers = self.layers();
        let mut value: Vec<Option<T>> = vec![None; layers * (self.k as usize + 1) * (self.total as usize + 1)];
        let terminal = layers - 1;
        value[self.idx(terminal, self.k, self.total)] = Some(T::from_count(0));
        let order: Vec<usize> = if self.groups.is_some() {
            (0..terminal).rev().collect()
        } else {
            vec![0]
        };
        for layer in order {
            let next = self.next_layer(layer);
            for s in self.prefix_range(layer).rev() {
                if s == self.k {
                    continue;
                }
                for b in (0..=self.total).rev() {
                    let mut best: Option<T> = None;
                    for (u, a) in self.moves(s, b) {
                        let Some(tail) = value[self.idx(next, s + u, b + a)] else {
                            continue;
                        };
                        let v = self.term(s, u, a).eval(alpha, beta, beta_prime) + tail;
                        if best.is_none_or(|cur| v < cur) {
                            best = Some(v);
                        }
                    }
                    value[self.idx(layer, s, b)] = best;
                }
            }
        }
        value
    }
}

/// Minimum over admissible partitions (and adversary placements) of the
/// applicable cut bound at `p`'s operating point.
pub fn worst_case_capacity(
    p: &SystemParams,
    adv: Option<&AdversaryBudget>,
    mode: PartitionMode,
) -> Result<WorstCase<CapacityValue>, TradeoffError> {
    let program = CutProgram::new(p, adv, mode)?;
    program
        .evaluate::<Rational>(p.alpha, p.beta, p.beta_prime)
        .ok_or_else(|| TradeoffError::Infeasible("no admissible partition and allocation".into()))
}

/// One point on a storage/bandwidth curve, normalized by `B/k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha_norm: f64,
    pub beta_norm: f64,
    pub beta_prime_norm: f64,
    pub gamma_norm: f64,
    pub witness_partition: GroupPartition,
    pub witness_allocation: Vec<u32>,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_GRID_POINTS: usize = 64;

// Feasibility slack used inside the search; well inside the 1e-9 contract.
const SEARCH_SLACK: f64 = 1e-12;

struct Search<'a> {
    program: &'a CutProgram,
    alpha: f64,
    target: f64,
}

impl Search<'_> {
    fn feasible(&self, beta: f64, beta_prime: f64) -> bool {
        self.program
            .min_capacity(self.alpha, beta, beta_prime)
            .is_some_and(|c| c >= self.target)
    }

    // Smallest x in [0, hi] with pred(x), assuming pred is monotone and pred(hi).
    fn bisect(&self, hi: f64, width: f64, pred: impl Fn(f64) -> bool) -> f64 {
        if pred(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, hi);
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn min_beta_prime(&self, beta: f64, width: f64) -> Option<f64> {
        if !self.feasible(beta, self.alpha) {
            return None;
        }
        Some(self.bisect(self.alpha, width, |bp| self.feasible(beta, bp)))
    }
}

/// Minimizes `gamma = d beta + (t - 1) beta'` subject to the worst-case cut
/// reaching `B`, at storage `alpha_norm` (in units of `B/k`).
///
/// The feasible `(beta, beta')` set is convex, so the smallest feasible
/// `beta'` is a convex function of `beta` and `gamma` along it is minimized
/// by golden-section search; each evaluation bisects on `beta'`. Neither
/// bandwidth ever needs to exceed `alpha`.
pub fn optimize_gamma(
    p: &SystemParams,
    adv: Option<&AdversaryBudget>,
    alpha_norm: f64,
    mode: PartitionMode,
    tol: f64,
) -> Result<CurvePoint, TradeoffError> {
    let program = CutProgram::new(p, adv, mode)?;
    optimize_with(&program, p, alpha_norm, tol)
}

fn optimize_with(
    program: &CutProgram,
    p: &SystemParams,
    alpha_norm: f64,
    tol: f64,
) -> Result<CurvePoint, TradeoffError> {
    if !(alpha_norm.is_finite() && alpha_norm > 0.0) {
        return Err(TradeoffError::Infeasible(format!("alpha={alpha_norm} is not positive")));
    }
    // Work in normalized units: B/k = 1, so B = k.
    let object = p.k as f64;
    let search = Search {
        program,
        alpha: alpha_norm,
        target: object * (1.0 - SEARCH_SLACK),
    };
    if !search.feasible(alpha_norm, alpha_norm) {
        return Err(TradeoffError::Infeasible(format!(
            "alpha={alpha_norm} (normalized) cannot reach B under this model"
        )));
    }
    let width = alpha_norm * (tol * 1e-6).max(1e-14);
    let d = p.d as f64;
    let coll = (p.t - 1) as f64;
    let gamma_at = |beta: f64| -> Option<(f64, f64)> {
        let bp = search.min_beta_prime(beta, width)?;
        Some((d * beta + coll * bp, bp))
    };

    let lo = search.bisect(alpha_norm, width, |b| search.feasible(b, alpha_norm));
    let (mut a, mut b) = (lo, alpha_norm);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |x: f64| gamma_at(x).map_or(f64::INFINITY, |(g, _)| g);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while b - a > width {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2);
        }
    }
    // Compare the bracket with its ends; piecewise-linear optima often sit
    // exactly at the lower end.
    let (beta, (gamma, beta_prime)) = [lo, a, 0.5 * (a + b), b]
        .into_iter()
        .filter_map(|x| gamma_at(x).map(|g| (x, g)))
        .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
        .expect("upper end of bracket is feasible");

    let witness = program
        .evaluate(alpha_norm, beta, beta_prime)
        .expect("point is feasible");
    debug_assert!(witness.value >= object * (1.0 - 1e-9));
    Ok(CurvePoint {
        alpha_norm,
        beta_norm: beta,
        beta_prime_norm: beta_prime,
        gamma_norm: gamma,
        witness_partition: witness.partition,
        witness_allocation: witness.allocation,
    })
}

/// `points` evenly spaced storage values from `B/k` to the MBR storage.
pub fn default_alpha_grid(p: &SystemParams, points: usize) -> Result<Vec<f64>, TradeoffError> {
    let unit = p.unit();
    let hi = to_f64(&(mbr_point(p)?.alpha / unit));
    Ok(linspace(1.0, hi, points))
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub params: SystemParams,
    pub adversary: Option<AdversaryBudget>,
    /// Normalized storage values.
    pub alpha_grid: Vec<f64>,
    pub partition_mode: PartitionMode,
    pub tolerance: f64,
}

impl SweepConfig {
    pub fn new(
        params: SystemParams,
        adversary: Option<AdversaryBudget>,
        partition_mode: PartitionMode,
    ) -> Result<Self, TradeoffError> {
        let alpha_grid = default_alpha_grid(&params, DEFAULT_GRID_POINTS)?;
        Ok(SweepConfig {
            params,
            adversary,
            alpha_grid,
            partition_mode,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_grid(mut self, alpha_grid: Vec<f64>) -> Self {
        self.alpha_grid = alpha_grid;
        self
    }
}

/// One optimized point per feasible grid value, in grid order. Infeasible
/// grid values are logged and skipped.
pub fn sweep_curve(cfg: &SweepConfig) -> Result<Vec<CurvePoint>, TradeoffError> {
    let program = CutProgram::new(&cfg.params, cfg.adversary.as_ref(), cfg.partition_mode)?;
    let mut grid = cfg.alpha_grid.clone();
    grid.sort_by(f64::total_cmp);
    let results: Vec<_> = grid
        .par_iter()
        .map(|&alpha| (alpha, optimize_with(&program, &cfg.params, alpha, cfg.tolerance)))
        .collect();
    let mut points = Vec::with_capacity(results.len());
    for (alpha, r) in results {
        match r {
            Ok(pt) => points.push(pt),
            Err(TradeoffError::Infeasible(why)) => warn!("skipping alpha={alpha}: {why}"),
            Err(e) => return Err(e),
        }
    }
    Ok(points)
}
