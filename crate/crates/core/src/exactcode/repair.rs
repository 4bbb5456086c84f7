//! Two-phase collaborative repair: newcomers download row projections from
//! live nodes, decode their rows, then exchange projections with peers.
//!
//! Newcomer `failed[r]` is responsible for row `r` of `O`. Newcomers that
//! refuse to collaborate (selfish, or polluting when detection is on) repair
//! alone; their rows are adopted by the collaborating newcomers, who need
//! them for their own blocks anyway.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExactCodeError, FragmentDigestTable, NodeBlock};
use crate::capacity::{int, rat, Rational};
use crate::galois::{rs_decode, Field, FieldMatrix, GaloisError, RsCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    #[default]
    Honest,
    /// Never answers requests and never helps peers.
    Selfish,
    /// Answers every request with a wrong symbol.
    Polluting,
}

/// What a newcomer does when one of its contacts does not answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfishLivePolicy {
    /// Keep to nodes that answered: obtain the missing projections through
    /// peers whose responders cover other columns.
    #[default]
    Relay,
    /// Contact further live nodes, lowest id first.
    ContactNew,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOptions {
    /// Contact order per newcomer id; unlisted newcomers use lowest ids.
    pub contacts: BTreeMap<usize, Vec<usize>>,
    pub selfish_live: SelfishLivePolicy,
    /// Polluters a newcomer provisions for without digests: it contacts
    /// `kappa + 2 * assumed_polluters` nodes and decodes.
    pub assumed_polluters: usize,
    /// When false, responses are trusted blindly and polluting newcomers
    /// take part in the exchange.
    pub detection: bool,
    pub seed: u64,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            contacts: BTreeMap::new(),
            selfish_live: SelfishLivePolicy::Relay,
            assumed_polluters: 0,
            detection: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferKind {
    /// Live node to newcomer.
    Download,
    /// Newcomer forwarding a downloaded piece to a peer.
    Relay,
    /// Newcomer sending a projection of one of its decoded rows.
    Exchange,
}

/// One piece moved over one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub row: usize,
    pub kind: TransferKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NewcomerCost {
    pub node_id: usize,
    pub behavior: Behavior,
    pub contacted: usize,
    pub responders: usize,
    pub downloads: usize,
    pub received: usize,
}

/// Transfer log of one repair round with per-newcomer costs derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairReport {
    /// Pieces per `B/k` unit; equals `t` in this construction.
    pub t: usize,
    pub transfers: Vec<Transfer>,
    pub newcomers: Vec<NewcomerCost>,
}

impl RepairReport {
    fn build(t: usize, transfers: Vec<Transfer>, meta: Vec<(usize, Behavior, usize, usize)>) -> Self {
        let newcomers = meta
            .into_iter()
            .map(|(node_id, behavior, contacted, responders)| {
                let into = transfers.iter().filter(|x| x.to == node_id);
                let downloads = into.clone().filter(|x| x.kind == TransferKind::Download).count();
                let received = into.filter(|x| x.kind != TransferKind::Download).count();
                NewcomerCost {
                    node_id,
                    behavior,
                    contacted,
                    responders,
                    downloads,
                    received,
                }
            })
            .collect();
        RepairReport { t, transfers, newcomers }
    }

    pub fn total_transfer(&self) -> usize {
        self.transfers.len()
    }

    fn honest(&self) -> impl Iterator<Item = &NewcomerCost> {
        self.newcomers.iter().filter(|c| c.behavior == Behavior::Honest)
    }

    fn mean(&self, f: impl Fn(&NewcomerCost) -> Rational) -> Rational {
        let values: Vec<Rational> = self.honest().map(f).collect();
        if values.is_empty() {
            return int(0);
        }
        let n = values.len() as i128;
        values.into_iter().sum::<Rational>() / int(n)
    }

    /// Mean over honest newcomers of pieces per responding contact, in `B/k`.
    pub fn beta_av(&self) -> Rational {
        let unit = self.t as i128;
        self.mean(|c| {
            if c.responders == 0 {
                int(0)
            } else {
                rat(c.downloads as i128, c.responders as i128 * unit)
            }
        })
    }

    /// Mean over honest newcomers of pieces received per peer, in `B/k`.
    pub fn beta_prime(&self) -> Rational {
        if self.t < 2 {
            return int(0);
        }
        let per = (self.t as i128 - 1) * self.t as i128;
        self.mean(|c| rat(c.received as i128, per))
    }

    /// Mean over honest newcomers of all pieces received, in `B/k`.
    pub fn gamma(&self) -> Rational {
        let unit = self.t as i128;
        self.mean(|c| rat((c.downloads + c.received) as i128, unit))
    }

    /// Largest number of responding live nodes any honest newcomer used.
    pub fn effective_d(&self) -> usize {
        self.honest().map(|c| c.responders).max().unwrap_or(0)
    }
}

struct Ctx<'a> {
    code: &'a RsCode,
    field: Field,
    t: usize,
    live: BTreeMap<usize, &'a NodeBlock>,
    failed: &'a [usize],
    adv: &'a BTreeMap<usize, Behavior>,
    opts: &'a RepairOptions,
    rng: ChaCha8Rng,
    log: Vec<Transfer>,
}

struct Group {
    members: Vec<usize>,
    rows: BTreeMap<usize, Vec<usize>>,
}

// Per newcomer: row -> observed (position, value) points.
type Points = BTreeMap<usize, Vec<(usize, u16)>>;

impl<'a> Ctx<'a> {
    fn new(
        code: &'a RsCode,
        live: &'a [NodeBlock],
        failed: &'a [usize],
        adv: &'a BTreeMap<usize, Behavior>,
        opts: &'a RepairOptions,
    ) -> Result<Self, ExactCodeError> {
        let t = failed.len();
        let invalid = |m: String| Err(ExactCodeError::InvalidInput(m));
        if t == 0 {
            return invalid("no failed nodes".into());
        }
        let mut map = BTreeMap::new();
        for b in live {
            super::check_node(code, b.node_id)?;
            if b.payload.len() != t {
                return invalid(format!("node {} stores {} symbols, expected t={t}", b.node_id, b.payload.len()));
            }
            if map.insert(b.node_id, b).is_some() {
                return invalid(format!("node {} listed twice", b.node_id));
            }
        }
        let mut seen = BTreeSet::new();
        for &f in failed {
            super::check_node(code, f)?;
            if map.contains_key(&f) || !seen.insert(f) {
                return invalid(format!("failed node {f} is live or repeated"));
            }
        }
        if map.len() < code.kappa() {
            return Err(ExactCodeError::InsufficientData {
                needed: code.kappa(),
                available: map.len(),
            });
        }
        Ok(Ctx {
            code,
            field: code.field(),
            t,
            live: map,
            failed,
            adv,
            opts,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            log: Vec::new(),
        })
    }

    fn behavior(&self, id: usize) -> Behavior {
        self.adv.get(&id).copied().unwrap_or_default()
    }

    fn corrupt(&mut self, v: u16) -> u16 {
        let order = self.field.order() as u16;
        let delta = self.rng.gen_range(1..order);
        v ^ delta
    }

    fn log(&mut self, from: usize, to: usize, row: usize, kind: TransferKind) {
        self.log.push(Transfer { from, to, row, kind });
    }

    // Live node `from` answers `to`'s request for its row-`row` symbol.
    fn fetch(&mut self, from: usize, to: usize, row: usize) -> u16 {
        self.log(from, to, row, TransferKind::Download);
        let v = self.live[&from].payload[row].value();
        if self.behavior(from) == Behavior::Polluting {
            self.corrupt(v)
        } else {
            v
        }
    }

    // Newcomer `from` sends a value it computed or holds.
    fn send(&mut self, from: usize, to: usize, row: usize, kind: TransferKind, v: u16) -> u16 {
        self.log(from, to, row, kind);
        if self.behavior(from) == Behavior::Polluting {
            self.corrupt(v)
        } else {
            v
        }
    }

    fn contact_order(&self, newcomer: usize) -> Vec<usize> {
        let mut order: Vec<usize> = self
            .opts
            .contacts
            .get(&newcomer)
            .into_iter()
            .flatten()
            .copied()
            .filter(|id| self.live.contains_key(id))
            .unique()
            .collect();
        let rest: Vec<usize> = self.live.keys().copied().filter(|id| !order.contains(id)).collect();
        order.extend(rest);
        order
    }

    fn responds(&self, id: usize) -> bool {
        self.behavior(id) != Behavior::Selfish
    }

    fn collaborates(&self, id: usize) -> bool {
        match self.behavior(id) {
            Behavior::Honest => true,
            Behavior::Selfish => false,
            Behavior::Polluting => !self.opts.detection,
        }
    }

    fn groups(&self) -> Vec<Group> {
        let members: Vec<usize> = self.failed.iter().copied().filter(|&f| self.collaborates(f)).collect();
        let mut groups = Vec::new();
        if !members.is_empty() {
            let mut rows: BTreeMap<usize, Vec<usize>> = members.iter().map(|&m| (m, Vec::new())).collect();
            let mut orphan = 0;
            for (r, &f) in self.failed.iter().enumerate() {
                let owner = if rows.contains_key(&f) {
                    f
                } else {
                    orphan += 1;
                    members[(orphan - 1) % members.len()]
                };
                rows.get_mut(&owner).expect("member").push(r);
            }
            groups.push(Group { members, rows });
        }
        for &f in self.failed.iter().filter(|&&f| !self.collaborates(f)) {
            groups.push(Group {
                members: vec![f],
                rows: BTreeMap::from([(f, (0..self.t).collect())]),
            });
        }
        groups
    }

    fn column(&self, node: usize) -> Vec<u16> {
        self.code.column(node - 1)
    }

    fn interpolate(&self, points: &[(usize, u16)]) -> Result<Vec<u16>, ExactCodeError> {
        let kappa = self.code.kappa();
        let pos: Vec<usize> = points[..kappa].iter().map(|p| p.0).collect();
        let vals: Vec<u16> = points[..kappa].iter().map(|p| p.1).collect();
        let observed = FieldMatrix::from_values(self.field, 1, kappa, vals)?;
        Ok(self.code.interpolate(&pos, &observed)?.values().to_vec())
    }

    fn decode_row(&self, points: &[(usize, u16)]) -> Result<Vec<u16>, ExactCodeError> {
        let kappa = self.code.kappa();
        if points.len() < kappa {
            return Err(ExactCodeError::RepairFailure(format!(
                "{} equations for a row of {kappa} unknowns",
                points.len()
            )));
        }
        if !self.opts.detection || points.len() == kappa {
            return self.interpolate(points);
        }
        let received: Vec<_> = points
            .iter()
            .map(|&(p, v)| (p, Some(self.field.raw_elem(v))))
            .collect();
        match rs_decode(self.code, &received) {
            Ok(row) => Ok(row.iter().map(|e| e.value()).collect()),
            Err(GaloisError::DecodeFailure { available, radius, closest }) => Err(ExactCodeError::RepairFailure(
                format!("row decoding failed: {available} responses, radius {radius}, closest candidate off by {closest}"),
            )),
            Err(e) => Err(e.into()),
        }
    }

    fn meta(&self, id: usize, contacted: usize, responders: usize) -> (usize, Behavior, usize, usize) {
        (id, self.behavior(id), contacted, responders)
    }
}

/// Exact repair of `failed` (their ids are reused by the newcomers).
pub fn collaborative_repair(
    code: &RsCode,
    live: &[NodeBlock],
    failed: &[usize],
    adv: &BTreeMap<usize, Behavior>,
    opts: &RepairOptions,
) -> Result<(Vec<NodeBlock>, RepairReport), ExactCodeError> {
    let mut ctx = Ctx::new(code, live, failed, adv, opts)?;
    let mut values: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
    let mut meta = Vec::new();
    for group in ctx.groups() {
        run_group(&mut ctx, &group, &mut values, &mut meta)?;
    }
    finish(ctx, values, meta)
}

fn finish(
    ctx: Ctx<'_>,
    values: BTreeMap<usize, Vec<u16>>,
    mut meta: Vec<(usize, Behavior, usize, usize)>,
) -> Result<(Vec<NodeBlock>, RepairReport), ExactCodeError> {
    let blocks = ctx
        .failed
        .iter()
        .map(|&f| NodeBlock {
            node_id: f,
            payload: values[&f].iter().map(|&v| ctx.field.raw_elem(v)).collect(),
        })
        .collect();
    meta.sort_by_key(|m| ctx.failed.iter().position(|&f| f == m.0));
    let report = RepairReport::build(ctx.t, ctx.log, meta);
    Ok((blocks, report))
}

fn run_group(
    ctx: &mut Ctx<'_>,
    group: &Group,
    values: &mut BTreeMap<usize, Vec<u16>>,
    meta: &mut Vec<(usize, Behavior, usize, usize)>,
) -> Result<(), ExactCodeError> {
    let kappa = ctx.code.kappa();
    let wanted = if ctx.opts.detection && ctx.opts.assumed_polluters > 0 {
        (kappa + 2 * ctx.opts.assumed_polluters).min(ctx.live.len())
    } else {
        kappa
    };

    let mut contacts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut responders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &m in &group.members {
        let order = ctx.contact_order(m);
        let c: Vec<usize> = order[..wanted].to_vec();
        responders.insert(m, c.iter().copied().filter(|&j| ctx.responds(j)).collect());
        contacts.insert(m, c);
    }

    let union: BTreeSet<usize> = responders.values().flatten().copied().collect();
    let lacking = |r: &BTreeMap<usize, Vec<usize>>| r.values().any(|v| v.len() < kappa);
    if lacking(&responders) && (ctx.opts.selfish_live == SelfishLivePolicy::ContactNew || union.len() < kappa) {
        for &m in &group.members {
            let order = ctx.contact_order(m);
            let (c, r) = (contacts.get_mut(&m).unwrap(), responders.get_mut(&m).unwrap());
            for j in order {
                if r.len() >= kappa {
                    break;
                }
                if !c.contains(&j) {
                    c.push(j);
                    if ctx.responds(j) {
                        r.push(j);
                    }
                }
            }
            if r.len() < kappa {
                return Err(ExactCodeError::RepairFailure(format!(
                    "newcomer {m}: only {} of {} live nodes respond, need {kappa}",
                    r.len(),
                    ctx.live.len()
                )));
            }
        }
    }

    // Relay plan: (beneficiary, column, helper).
    let union: BTreeSet<usize> = responders.values().flatten().copied().collect();
    let mut relays = Vec::new();
    let mut load: HashMap<usize, usize> = HashMap::new();
    for &m in &group.members {
        let own = &responders[&m];
        let need = kappa.saturating_sub(own.len());
        for j in union.iter().copied().filter(|j| !own.contains(j)).take(need) {
            let helper = group
                .members
                .iter()
                .copied()
                .filter(|&p| p != m && responders[&p].contains(&j))
                .min_by_key(|p| (load.get(p).copied().unwrap_or(0), *p))
                .expect("column comes from some peer");
            *load.entry(helper).or_default() += group.rows[&m].len();
            relays.push((m, j, helper));
        }
    }

    // Phase 1: downloads.
    let mut points: BTreeMap<usize, Points> = BTreeMap::new();
    for &m in &group.members {
        let mut pts = Points::new();
        for &j in &responders[&m] {
            for &r in &group.rows[&m] {
                let v = ctx.fetch(j, m, r);
                pts.entry(r).or_default().push((j - 1, v));
            }
        }
        points.insert(m, pts);
    }
    for &(m, j, helper) in &relays {
        for &r in &group.rows[&m] {
            let v = ctx.fetch(j, helper, r);
            let v = ctx.send(helper, m, r, TransferKind::Relay, v);
            points.get_mut(&m).unwrap().entry(r).or_default().push((j - 1, v));
        }
    }

    // Decode owned rows.
    let mut decoded: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
    for &m in &group.members {
        for &r in &group.rows[&m] {
            let row = ctx.decode_row(&points[&m][&r]).map_err(|e| match e {
                ExactCodeError::RepairFailure(why) => ExactCodeError::RepairFailure(format!("newcomer {m}: {why}")),
                e => e,
            })?;
            decoded.insert(r, row);
        }
    }

    // Phase 2: exchange.
    for &m in &group.members {
        values.insert(m, vec![0; ctx.t]);
    }
    for &m in &group.members {
        for &r in &group.rows[&m] {
            for &p in &group.members {
                let v = ctx.field.dot_raw(&decoded[&r], &ctx.column(p));
                let v = if p == m { v } else { ctx.send(m, p, r, TransferKind::Exchange, v) };
                values.get_mut(&p).unwrap()[r] = v;
            }
        }
    }
    for &m in &group.members {
        meta.push(ctx.meta(m, contacts[&m].len(), responders[&m].len()));
    }
    Ok(())
}

// Safety valve on the joint candidate search per contact count.
const MAX_COMBINATIONS: usize = 1 << 16;

/// Repair that checks every regenerated block against `digests`, starting
/// from `kappa` contacts and adding one live node at a time on failure.
/// Every candidate row interpolated from `kappa` of the answers received so
/// far is considered, most-supported first.
pub fn progressive_repair_with_digests(
    code: &RsCode,
    live: &[NodeBlock],
    failed: &[usize],
    adv: &BTreeMap<usize, Behavior>,
    digests: &FragmentDigestTable,
    object_id: u64,
    opts: &RepairOptions,
) -> Result<(Vec<NodeBlock>, RepairReport), ExactCodeError> {
    let opts = RepairOptions {
        detection: true,
        ..opts.clone()
    };
    let mut ctx = Ctx::new(code, live, failed, adv, &opts)?;
    for &f in failed {
        if digests.get(object_id, f).is_none() {
            return Err(ExactCodeError::InvalidInput(format!("no digest for node {f}")));
        }
    }
    let mut values: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
    let mut meta = Vec::new();
    for group in ctx.groups() {
        run_group_verified(&mut ctx, &group, digests, object_id, &mut values, &mut meta)?;
    }
    finish(ctx, values, meta)
}

fn candidates(ctx: &Ctx<'_>, points: &[(usize, u16)]) -> Result<Vec<Vec<u16>>, ExactCodeError> {
    let kappa = ctx.code.kappa();
    let columns: Vec<Vec<u16>> = points.iter().map(|p| ctx.code.column(p.0)).collect();
    let mut found: Vec<(Vec<u16>, usize)> = Vec::new();
    let mut seen = HashSet::new();
    for subset in (0..points.len()).combinations(kappa) {
        let chosen: Vec<(usize, u16)> = subset.iter().map(|&i| points[i]).collect();
        let row = ctx.interpolate(&chosen)?;
        if !seen.insert(row.clone()) {
            continue;
        }
        let support = columns
            .iter()
            .zip(points)
            .filter(|(g, p)| ctx.field.dot_raw(&row, g) == p.1)
            .count();
        found.push((row, support));
    }
    // Stable: ties keep subset order.
    found.sort_by_key(|c| std::cmp::Reverse(c.1));
    Ok(found.into_iter().map(|c| c.0).collect())
}

fn run_group_verified(
    ctx: &mut Ctx<'_>,
    group: &Group,
    digests: &FragmentDigestTable,
    object_id: u64,
    values: &mut BTreeMap<usize, Vec<u16>>,
    meta: &mut Vec<(usize, Behavior, usize, usize)>,
) -> Result<(), ExactCodeError> {
    let kappa = ctx.code.kappa();
    let orders: BTreeMap<usize, Vec<usize>> = group.members.iter().map(|&m| (m, ctx.contact_order(m))).collect();
    let owner: BTreeMap<usize, usize> = group
        .rows
        .iter()
        .flat_map(|(&m, rows)| rows.iter().map(move |&r| (r, m)))
        .collect();
    let rows: Vec<usize> = owner.keys().copied().collect();
    let mut points: BTreeMap<usize, Vec<(usize, u16)>> = rows.iter().map(|&r| (r, Vec::new())).collect();
    let mut sent: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut responders: BTreeMap<usize, usize> = BTreeMap::new();
    let mut tried = 0usize;

    for c in kappa..=ctx.live.len() {
        // Ask the newly added contact of each member.
        for &m in &group.members {
            let j = orders[&m][c - 1];
            if c == kappa {
                for &j in &orders[&m][..kappa - 1] {
                    fetch_rows(ctx, group, m, j, &mut points, &mut responders);
                }
            }
            fetch_rows(ctx, group, m, j, &mut points, &mut responders);
        }
        if rows.iter().any(|r| points[r].len() < kappa) {
            continue;
        }
        let cands: Vec<Vec<Vec<u16>>> = rows
            .iter()
            .map(|r| candidates(ctx, &points[r]))
            .collect::<Result<_, _>>()?;
        let total: usize = cands.iter().map(Vec::len).try_fold(1usize, |a, n| a.checked_mul(n)).unwrap_or(usize::MAX);
        for combo in (0..total.min(MAX_COMBINATIONS)).map(|i| unrank(i, &cands)) {
            tried += 1;
            let mut blocks: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
            for &p in &group.members {
                let g = ctx.column(p);
                let mut payload = vec![0u16; ctx.t];
                for (slot, &r) in rows.iter().enumerate() {
                    let cand = combo[slot];
                    payload[r] = ctx.field.dot_raw(&cands[slot][cand], &g);
                    let m = owner[&r];
                    if m != p && sent.insert((r, cand, p)) {
                        ctx.log(m, p, r, TransferKind::Exchange);
                    }
                }
                blocks.insert(p, payload);
            }
            let ok = group.members.iter().all(|&p| {
                let block = NodeBlock {
                    node_id: p,
                    payload: blocks[&p].iter().map(|&v| ctx.field.raw_elem(v)).collect(),
                };
                digests.verify(object_id, &block)
            });
            if ok {
                for &m in &group.members {
                    meta.push(ctx.meta(m, c, responders.get(&m).copied().unwrap_or(0)));
                }
                values.extend(blocks);
                return Ok(());
            }
        }
    }
    Err(ExactCodeError::RepairFailure(format!(
        "newcomers {:?}: no digest-verified block after contacting all {} live nodes ({tried} candidate combinations)",
        group.members,
        ctx.live.len()
    )))
}

fn fetch_rows(
    ctx: &mut Ctx<'_>,
    group: &Group,
    m: usize,
    j: usize,
    points: &mut BTreeMap<usize, Vec<(usize, u16)>>,
    responders: &mut BTreeMap<usize, usize>,
) {
    if !ctx.responds(j) {
        return;
    }
    *responders.entry(m).or_default() += 1;
    for &r in &group.rows[&m] {
        let v = ctx.fetch(j, m, r);
        points.get_mut(&r).unwrap().push((j - 1, v));
    }
}

// Mixed-radix index into the candidate product, first row slowest.
fn unrank(mut i: usize, cands: &[Vec<Vec<u16>>]) -> Vec<usize> {
    let mut out = vec![0; cands.len()];
    for (slot, c) in cands.iter().enumerate().rev() {
        out[slot] = i % c.len();
        i /= c.len();
    }
    out
}
