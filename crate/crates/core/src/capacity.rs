//! Closed-form min-cut capacities and characteristic operating points.
//!
//! Everything here is exact rational arithmetic. Bandwidth coefficients that
//! would go negative (more groups than remaining live nodes, more adversaries
//! than collaborators) are clamped at zero.

use std::fmt;
use std::ops::{Add, Mul};

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = Ratio<i128>;

/// A capacity in data units.
pub type CapacityValue = Rational;

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: impl Into<i128>) -> Rational {
    Rational::from_integer(n.into())
}

/// Renders `p/q`, or just `p` for integers.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Decimal rendering with `digits` significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapacityError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid adversary profile: {0}")]
    InvalidAdversary(String),
    #[error("group {group}: u={u} exceeds t - l = {t} - {l}")]
    InfeasibleAllocation { group: usize, u: u32, l: u32, t: u32 },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// The storage network `(n, k, d, t, B)` plus an operating point
/// `(alpha, beta, beta')`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: u32,
    pub k: u32,
    pub d: u32,
    pub t: u32,
    pub object_size: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_prime: Rational,
}

impl SystemParams {
    /// Parameters with a zero operating point; `n` defaults to `d + t`.
    pub fn new(k: u32, d: u32, t: u32, object_size: Rational) -> Self {
        SystemParams {
            n: d + t,
            k,
            d,
            t,
            object_size,
            alpha: Rational::zero(),
            beta: Rational::zero(),
            beta_prime: Rational::zero(),
        }
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn at(mut self, point: &OperatingPoint) -> Self {
        self.alpha = point.alpha;
        self.beta = point.beta;
        self.beta_prime = point.beta_prime;
        self
    }

    pub fn with_point(mut self, alpha: Rational, beta: Rational, beta_prime: Rational) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.beta_prime = beta_prime;
        self
    }

    /// `B / k`, the normalization unit used for reporting.
    pub fn unit(&self) -> Rational {
        self.object_size / int(self.k)
    }

    pub fn validate(&self) -> Result<(), CapacityError> {
        let bad = |msg: String| Err(CapacityError::InvalidParams(msg));
        if self.k == 0 || self.t == 0 {
            return bad(format!("k={} and t={} must be positive", self.k, self.t));
        }
        if self.d < self.k {
            return bad(format!("d={} < k={}", self.d, self.k));
        }
        if self.k + self.t > self.n {
            return bad(format!("k={} > n - t = {} - {}", self.k, self.n, self.t));
        }
        for (name, v) in [
            ("B", &self.object_size),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("beta'", &self.beta_prime),
        ] {
            if v.is_negative() {
                return bad(format!("{name} = {} is negative", fmt_rational(v)));
            }
        }
        Ok(())
    }
}

/// `(alpha, beta, beta')` in data units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_prime: Rational,
}

impl OperatingPoint {
    pub fn normalized(&self, unit: Rational) -> OperatingPoint {
        OperatingPoint {
            alpha: self.alpha / unit,
            beta: self.beta / unit,
            beta_prime: self.beta_prime / unit,
        }
    }
}

/// Sizes `u_0, ..., u_{g-1}` of the generations a data collector touches.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<u32>,
}

impl GroupPartition {
    pub fn new(groups: Vec<u32>, k: u32, t: u32) -> Result<Self, CapacityError> {
        if let Some((i, &u)) = groups.iter().enumerate().find(|(_, &u)| u == 0 || u > t) {
            return Err(CapacityError::InvalidPartition(format!(
                "u_{i} = {u} outside 1..={t}"
            )));
        }
        let sum: u32 = groups.iter().sum();
        if sum != k {
            return Err(CapacityError::InvalidPartition(format!(
                "group sizes sum to {sum}, expected k={k}"
            )));
        }
        Ok(GroupPartition { groups })
    }

    /// `k` groups of one node each.
    pub fn singletons(k: u32) -> Self {
        GroupPartition {
            groups: vec![1; k as usize],
        }
    }

    /// Groups of size `t` (last group takes the remainder).
    pub fn full_groups(k: u32, t: u32) -> Self {
        let mut groups = vec![t; (k / t) as usize];
        if !k.is_multiple_of(t) {
            groups.push(k % t);
        }
        GroupPartition { groups }
    }

    pub fn groups(&self) -> &[u32] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl fmt::Display for GroupPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.groups.iter().map(u32::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryKind {
    Selfish,
    Polluting,
}

impl AdversaryKind {
    /// Each polluter costs two equations (its own plus one to outvote it).
    pub fn weight(self) -> u32 {
        match self {
            AdversaryKind::Selfish => 1,
            AdversaryKind::Polluting => 2,
        }
    }
}

/// Adversary counts: `among_live` per generation (L0 or B0), the per-group
/// counts among newcomers (l_i or b_i) with their cap, and their total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryProfile {
    pub kind: AdversaryKind,
    pub among_live: u32,
    pub per_group: Vec<u32>,
    pub per_group_max: u32,
    pub total: u32,
}

impl AdversaryProfile {
    pub fn new(
        kind: AdversaryKind,
        among_live: u32,
        per_group: Vec<u32>,
        per_group_max: u32,
    ) -> Result<Self, CapacityError> {
        if let Some((i, &l)) = per_group
            .iter()
            .enumerate()
            .find(|(_, &l)| l > per_group_max)
        {
            return Err(CapacityError::InvalidAdversary(format!(
                "group {i} has {l} adversaries, cap is {per_group_max}"
            )));
        }
        let total = per_group.iter().sum();
        Ok(AdversaryProfile {
            kind,
            among_live,
            per_group,
            per_group_max,
            total,
        })
    }

    pub fn selfish(among_live: u32, per_group: Vec<u32>, per_group_max: u32) -> Result<Self, CapacityError> {
        Self::new(AdversaryKind::Selfish, among_live, per_group, per_group_max)
    }

    pub fn polluting(among_live: u32, per_group: Vec<u32>, per_group_max: u32) -> Result<Self, CapacityError> {
        Self::new(AdversaryKind::Polluting, among_live, per_group, per_group_max)
    }

    /// No adversaries over `g` groups.
    pub fn none(kind: AdversaryKind, g: usize) -> Self {
        AdversaryProfile {
            kind,
            among_live: 0,
            per_group: vec![0; g],
            per_group_max: 0,
            total: 0,
        }
    }
}

/// Numeric types the cut terms can be evaluated in.
pub trait CutScalar: Copy + PartialOrd + Add<Output = Self> + Mul<Output = Self> {
    fn from_count(c: i64) -> Self;

    /// `self <= other`, up to rounding for inexact scalars.
    fn approx_le(self, other: Self) -> bool {
        self <= other
    }
}

impl CutScalar for Rational {
    fn from_count(c: i64) -> Self {
        int(c)
    }
}

impl CutScalar for f64 {
    fn from_count(c: i64) -> Self {
        c as f64
    }

    fn approx_le(self, other: Self) -> bool {
        self <= other + 1e-12 * (1.0 + other.abs())
    }
}

/// Integer shape of one cut term, independent of the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutTerm {
    pub nodes: u32,
    pub beta_coef: i64,
    pub beta_prime_coef: i64,
}

impl CutTerm {
    /// Term for a group of `u` nodes after `prefix` earlier nodes, with
    /// `live_loss` live links and `coll_loss` collaborator links lost.
    pub fn new(d: u32, t: u32, prefix: u32, u: u32, live_loss: u32, coll_loss: u32) -> Self {
        CutTerm {
            nodes: u,
            beta_coef: (d as i64 - live_loss as i64 - prefix as i64).max(0),
            beta_prime_coef: (t as i64 - coll_loss as i64 - u as i64).max(0),
        }
    }

    pub fn eval<T: CutScalar>(&self, alpha: T, beta: T, beta_prime: T) -> T {
        let flow = T::from_count(self.beta_coef) * beta + T::from_count(self.beta_prime_coef) * beta_prime;
        let per_node = if flow < alpha { flow } else { alpha };
        T::from_count(self.nodes as i64) * per_node
    }
}

fn check_partition(p: &SystemParams, part: &GroupPartition) -> Result<(), CapacityError> {
    GroupPartition::new(part.groups.clone(), p.k, p.t).map(|_| ())
}

fn sum_terms(
    p: &SystemParams,
    part: &GroupPartition,
    live_loss: u32,
    coll_loss: impl Fn(usize) -> u32,
) -> Rational {
    let mut prefix = 0;
    let mut total = Rational::zero();
    for (i, &u) in part.groups.iter().enumerate() {
        let term = CutTerm::new(p.d, p.t, prefix, u, live_loss, coll_loss(i));
        total += term.eval(p.alpha, p.beta, p.beta_prime);
        prefix += u;
    }
    total
}

/// `sum_{i<k} min{alpha, (d - i) beta}`; collaboration is ignored.
pub fn mincut_single(p: &SystemParams) -> Result<CapacityValue, CapacityError> {
    let single = SystemParams { t: 1, ..p.clone() };
    single.validate()?;
    Ok(sum_terms(&single, &GroupPartition::singletons(p.k), 0, |_| 0))
}

/// `sum_i u_i min{alpha, (d - sum_{j<i} u_j) beta + (t - u_i) beta'}`.
pub fn mincut_collab(p: &SystemParams, part: &GroupPartition) -> Result<CapacityValue, CapacityError> {
    p.validate()?;
    check_partition(p, part)?;
    Ok(sum_terms(p, part, 0, |_| 0))
}

fn check_adversary(
    p: &SystemParams,
    part: &GroupPartition,
    adv: &AdversaryProfile,
    expected: AdversaryKind,
) -> Result<(), CapacityError> {
    if adv.kind != expected {
        return Err(CapacityError::InvalidAdversary(format!(
            "expected a {expected:?} profile, got {:?}",
            adv.kind
        )));
    }
    if adv.per_group.len() != part.len() {
        return Err(CapacityError::InvalidAdversary(format!(
            "{} per-group counts for {} groups",
            adv.per_group.len(),
            part.len()
        )));
    }
    if adv.per_group.iter().any(|&l| l > adv.per_group_max) {
        return Err(CapacityError::InvalidAdversary("per-group count above its cap".into()));
    }
    if adv.per_group.iter().sum::<u32>() != adv.total {
        return Err(CapacityError::InvalidAdversary(format!(
            "per-group counts do not sum to total {}",
            adv.total
        )));
    }
    let live_loss = adv.kind.weight() * adv.among_live;
    if live_loss > p.d {
        return Err(CapacityError::InvalidAdversary(format!(
            "{} x {} live adversaries exceed d={}",
            adv.kind.weight(),
            adv.among_live,
            p.d
        )));
    }
    Ok(())
}

/// Upper bound on resiliency capacity with selfish nodes.
pub fn capacity_selfish(
    p: &SystemParams,
    part: &GroupPartition,
    adv: &AdversaryProfile,
) -> Result<CapacityValue, CapacityError> {
    p.validate()?;
    check_partition(p, part)?;
    check_adversary(p, part, adv, AdversaryKind::Selfish)?;
    for (i, (&u, &l)) in part.groups.iter().zip(&adv.per_group).enumerate() {
        if u + l > p.t {
            return Err(CapacityError::InfeasibleAllocation { group: i, u, l, t: p.t });
        }
    }
    Ok(sum_terms(p, part, adv.among_live, |i| adv.per_group[i]))
}

/// Upper bound on resiliency capacity with polluting nodes.
pub fn capacity_polluting(
    p: &SystemParams,
    part: &GroupPartition,
    adv: &AdversaryProfile,
) -> Result<CapacityValue, CapacityError> {
    p.validate()?;
    check_partition(p, part)?;
    check_adversary(p, part, adv, AdversaryKind::Polluting)?;
    Ok(sum_terms(p, part, 2 * adv.among_live, |i| 2 * adv.per_group[i]))
}

/// Dispatches on the profile kind.
pub fn capacity_under(
    p: &SystemParams,
    part: &GroupPartition,
    adv: &AdversaryProfile,
) -> Result<CapacityValue, CapacityError> {
    match adv.kind {
        AdversaryKind::Selfish => capacity_selfish(p, part, adv),
        AdversaryKind::Polluting => capacity_polluting(p, part, adv),
    }
}

/// Minimum storage point: `alpha = B/k`, `beta = beta' = (B/k) / (d - k + t)`.
pub fn msr_point(p: &SystemParams) -> Result<OperatingPoint, CapacityError> {
    if p.k == 0 || p.d < p.k {
        return Err(CapacityError::InvalidParams(format!("need 0 < k <= d, got k={} d={}", p.k, p.d)));
    }
    let denom = p.d as i128 - p.k as i128 + p.t as i128;
    if denom <= 0 {
        return Err(CapacityError::InvalidParams(format!("d - k + t = {denom} <= 0")));
    }
    let unit = p.unit();
    let beta = unit / int(denom);
    Ok(OperatingPoint {
        alpha: unit,
        beta,
        beta_prime: beta,
    })
}

/// Minimum bandwidth point.
pub fn mbr_point(p: &SystemParams) -> Result<OperatingPoint, CapacityError> {
    if p.k == 0 || p.d < p.k {
        return Err(CapacityError::InvalidParams(format!("need 0 < k <= d, got k={} d={}", p.k, p.d)));
    }
    let denom = 2 * p.d as i128 - p.k as i128 + p.t as i128;
    if denom <= 0 {
        return Err(CapacityError::InvalidParams(format!("2d - k + t = {denom} <= 0")));
    }
    let unit = p.unit();
    Ok(OperatingPoint {
        alpha: unit * int(2 * p.d as i128 + p.t as i128 - 1) / int(denom),
        beta: unit * int(2) / int(denom),
        beta_prime: unit / int(denom),
    })
}

/// Per-node repair bandwidth `gamma = d beta + (t - 1) beta'`.
pub fn repair_gamma(p: &SystemParams) -> Rational {
    int(p.d) * p.beta + int(p.t - 1) * p.beta_prime
}

/// Minimum storage once polluters may also lie to the data collector:
/// `B / (k - 2 B0)`. Only surfaced, not analysed further.
pub fn shifted_min_storage(p: &SystemParams, polluters_among_live: u32) -> Result<Rational, CapacityError> {
    let denom = p.k as i128 - 2 * polluters_among_live as i128;
    if denom <= 0 {
        return Err(CapacityError::Infeasible(format!(
            "k - 2 B0 = {denom} leaves no usable nodes"
        )));
    }
    Ok(p.object_size / int(denom))
}

/// Minimum-storage bandwidth bounds with selfish nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MsrSelfishBounds {
    /// Smallest feasible beta for the given allocation; `None` when
    /// `(k + L) / t` is not an integer or the allocation has a different
    /// number of groups.
    pub beta_min_exact: Option<Rational>,
    pub beta_range: (Rational, Rational),
    /// `None` when `l_max >= t - 1`: no collaborative flow remains.
    pub beta_prime_range: Option<(Rational, Rational)>,
}

pub fn msr_selfish_bounds(p: &SystemParams, adv: &AdversaryProfile) -> Result<MsrSelfishBounds, CapacityError> {
    if adv.kind != AdversaryKind::Selfish {
        return Err(CapacityError::InvalidAdversary("expected a selfish profile".into()));
    }
    if adv.among_live > p.d {
        return Err(CapacityError::InvalidAdversary(format!(
            "L0={} exceeds d={}",
            adv.among_live, p.d
        )));
    }
    if adv.per_group_max >= p.t {
        return Err(CapacityError::InvalidAdversary(format!(
            "l_max={} must be below t={}",
            adv.per_group_max, p.t
        )));
    }
    let unit = p.unit();
    let (d, k, t) = (p.d as i128, p.k as i128, p.t as i128);
    let live = d - adv.among_live as i128;
    let lmax = adv.per_group_max as i128;
    let positive = |x: i128, what: &str| {
        if x > 0 {
            Ok(int(x))
        } else {
            Err(CapacityError::Infeasible(format!("{what} = {x} <= 0")))
        }
    };
    let lo_den = positive(live - k + t, "(d - L0) - k + t")?;
    let hi_den = positive(live - k + t - lmax, "(d - L0) - k + t - l_max")?;
    let beta_range = (unit / lo_den, unit / hi_den);

    let total = adv.total as i128;
    let beta_min_exact = if (k + total) % t == 0 && adv.per_group.len() as i128 == (k + total) / t {
        let last = *adv.per_group.last().expect("at least one group") as i128;
        Some(unit / positive(live - k + t - last, "(d - L0) - k + t - l_last")?)
    } else {
        None
    };

    let beta_prime_range = if t - lmax - 1 > 0 {
        let lb = unit * int(t - lmax - 1) / (hi_den * int(t - 1));
        let ub = unit * int(t - 1) / (lo_den * int(t - lmax - 1));
        Some((lb, ub))
    } else {
        None
    };

    Ok(MsrSelfishBounds {
        beta_min_exact,
        beta_range,
        beta_prime_range,
    })
}
