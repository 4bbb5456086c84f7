//! One test per acceptance criterion. Each prints a single PASS/FAIL line.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use crgc_core::capacity::{
    capacity_polluting, capacity_selfish, capacity_under, int, mbr_point, mincut_collab, mincut_single,
    msr_point, msr_selfish_bounds, rat, repair_gamma, AdversaryKind, AdversaryProfile, CapacityError,
    GroupPartition, Rational, SystemParams,
};
use crgc_core::exactcode::{
    collaborative_repair, collect, collect_robust, encode_object, progressive_repair_with_digests, Behavior,
    Collected, FragmentDigestTable, NodeBlock, ObjectMatrix, RepairOptions,
};
use crgc_core::galois::{Field, FieldElement, RsCode};
use crgc_core::scenarios::{run_cost_scenario, CostScenario};
use crgc_core::tradeoff::{
    linspace, optimize_gamma, sweep_curve, worst_case_capacity, AdversaryBudget, CurvePoint, PartitionMode,
    SweepConfig, TradeoffError,
};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: u32,
    name: &'static str,
    start: Instant,
    limit: Duration,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, name: &'static str, limit_secs: u64) -> Self {
        Criterion {
            id,
            name,
            start: Instant::now(),
            limit: Duration::from_secs(limit_secs),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(self) {
        let elapsed = self.start.elapsed();
        let mut failed: Vec<String> = self.checks.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect();
        if elapsed > self.limit {
            failed.push(format!("took {elapsed:.2?}"));
        }
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        let detail = if failed.is_empty() {
            String::new()
        } else {
            format!(" -- failed: {}", failed.join("; "))
        };
        // Written to the raw handle so the line survives output capture.
        let _ = writeln!(
            std::io::stderr(),
            "ACCEPTANCE {:>2} {}: {verdict} ({} checks, {elapsed:.2?}, limit {:?}){detail}",
            self.id,
            self.name,
            self.checks.len(),
            self.limit
        );
        assert!(failed.is_empty(), "criterion {} failed: {}", self.id, failed.join("; "));
    }
}

fn crgc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crgc")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8"))
}

fn show(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[test]
fn criterion_01_table_fidelity() {
    let mut c = Criterion::new(1, "cost tables reproduced as measured transfers", 1);
    let published: [(CostScenario, Rational, Rational, Rational, usize); 6] = [
        (CostScenario::SelfishNone, rat(1, 2), rat(1, 2), int(2), 3),
        (CostScenario::SelfishNewcomer, int(1), int(0), int(3), 3),
        (CostScenario::SelfishLive, rat(3, 4), rat(1, 2), int(2), 3),
        (CostScenario::PollutingNone, rat(1, 2), rat(1, 2), int(2), 3),
        (CostScenario::PollutingNewcomer, int(1), int(0), int(3), 3),
        (CostScenario::PollutingLive, rat(1, 2), rat(1, 2), int(3), 5),
    ];
    for (s, b, bp, g, d) in published {
        let rec = run_cost_scenario(s).expect("scenario runs");
        let got = (rec.beta, rec.beta_prime, rec.gamma);
        c.check(
            format!(
                "{s}: measured ({}, {}, {}) vs ({}, {}, {})",
                show(&got.0),
                show(&got.1),
                show(&got.2),
                show(&b),
                show(&bp),
                show(&g)
            ),
            got == (b, bp, g),
        );
        if s == CostScenario::PollutingLive {
            c.check(format!("{s}: effective d {} vs 5", rec.effective_d), rec.effective_d == d);
        }
        c.check(format!("{s}: exact repair"), rec.exact);
    }
    c.finish();
}

#[test]
fn criterion_02_example_fidelity() {
    let mut c = Criterion::new(2, "worked example encode/collect/repair", 1);
    let field = Field::gf8();
    let w = field.primitive();
    c.check("w^3 = w + 1", w.pow(3) == w.add(&field.one()).unwrap());
    let code = RsCode::example();
    let g = code.generator();
    let printed: [[u16; 7]; 3] = [
        [0b001; 7],
        [0b010, 0b100, 0b011, 0b110, 0b111, 0b101, 0b001],
        [0b100, 0b110, 0b101, 0b010, 0b011, 0b111, 0b001],
    ];
    c.check("generator matches the printed G", (0..3).all(|r| g.row(r) == printed[r]));
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut all_subsets = true;
    let mut eight_units = true;
    let mut identical = true;
    for _ in 0..10 {
        let obj = ObjectMatrix::random(field, 2, 3, &mut rng);
        let blocks = encode_object(&obj, &code).unwrap();
        let ok = blocks.iter().cloned().combinations(3).filter(|s| collect(&code, s).unwrap() == obj).count();
        all_subsets &= ok == 35;
        let (repaired, report) =
            collaborative_repair(&code, &blocks[2..], &[1, 2], &BTreeMap::new(), &RepairOptions::default()).unwrap();
        let lost: usize = repaired.iter().map(|b| b.payload.len()).sum();
        eight_units &= report.total_transfer() == 8 && lost == 4;
        identical &= repaired.iter().all(|b| *b == blocks[b.node_id - 1]);
    }
    c.check("all 35 three-node subsets recover O", all_subsets);
    c.check("8 units transferred for 4 lost", eight_units);
    c.check("repaired blocks bit-identical", identical);
    c.finish();
}

#[test]
fn criterion_03_closed_form_endpoints() {
    let mut c = Criterion::new(3, "MSR/MBR endpoints and optimizer", 10);
    let (d, k, b) = (48i128, 32i128, int(32));
    for t in [1i128, 4, 8] {
        let p = SystemParams::new(k as u32, d as u32, t as u32, b);
        let unit = b / int(k);
        let msr = msr_point(&p).unwrap();
        let want_msr = (unit, unit / int(d - k + t), unit / int(d - k + t));
        c.check(format!("t={t} MSR"), (msr.alpha, msr.beta, msr.beta_prime) == want_msr);
        let mbr = mbr_point(&p).unwrap();
        let den = int(2 * d - k + t);
        let want_mbr = (unit * int(2 * d + t - 1) / den, int(2) * unit / den, unit / den);
        c.check(format!("t={t} MBR"), (mbr.alpha, mbr.beta, mbr.beta_prime) == want_mbr);
        c.check(format!("t={t} MBR gamma = alpha"), repair_gamma(&p.clone().at(&mbr)) == mbr.alpha);

        let msr_gamma = (int(d) * want_msr.1 + int(t - 1) * want_msr.2) / unit;
        let opt = optimize_gamma(&p, None, 1.0, PartitionMode::WorstCase, 1e-4).unwrap();
        let rel = (opt.gamma_norm - msr_gamma.to_f64()).abs() / msr_gamma.to_f64();
        c.check(format!("t={t} optimizer at MSR alpha, rel err {rel:.2e}"), rel < 1e-3);
        let mbr_alpha = (want_mbr.0 / unit).to_f64();
        let opt = optimize_gamma(&p, None, mbr_alpha, PartitionMode::WorstCase, 1e-4).unwrap();
        let rel = (opt.gamma_norm - mbr_alpha).abs() / mbr_alpha;
        c.check(format!("t={t} optimizer at MBR alpha, rel err {rel:.2e}"), rel < 1e-3);
    }
    let (code, out) = crgc(&["bounds", "--d", "48", "--k", "32", "--t", "4", "--B", "32", "--point", "msr"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    c.check(
        "cli bounds reports alpha=1, beta=beta'=1/20",
        code == 0 && v["alpha"] == "1" && v["beta"] == "1/20" && v["beta_prime"] == "1/20",
    );
    c.finish();
}

trait ToF64 {
    fn to_f64(&self) -> f64;
}

impl ToF64 for Rational {
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

#[test]
fn criterion_04_selfish_msr_bounds() {
    let mut c = Criterion::new(4, "selfish MSR bounds", 1);
    let p = SystemParams::new(32, 48, 4, int(32));
    let adv = AdversaryProfile::selfish(1, vec![], 1).unwrap();
    let b = msr_selfish_bounds(&p, &adv).unwrap();
    c.check("beta in [1/19, 1/18]", b.beta_range == (rat(1, 19), rat(1, 18)));
    c.check("beta' in [2/54, 3/38]", b.beta_prime_range == Some((rat(2, 54), rat(3, 38))));
    let zero = msr_selfish_bounds(&p, &AdversaryProfile::selfish(1, vec![], 0).unwrap()).unwrap();
    c.check(
        "lmax=0 collapses to beta=beta'=1/19",
        zero.beta_range == (rat(1, 19), rat(1, 19)) && zero.beta_prime_range == Some((rat(1, 19), rat(1, 19))),
    );
    let top = msr_selfish_bounds(&p, &AdversaryProfile::selfish(1, vec![], 3).unwrap()).unwrap();
    c.check("lmax=t-1 flags beta' infeasible", top.beta_prime_range.is_none());
    c.finish();
}

fn sweep(t: u32, adv: Option<AdversaryBudget>, mode: PartitionMode, grid: &[f64]) -> (Vec<CurvePoint>, Duration) {
    let start = Instant::now();
    let cfg = SweepConfig::new(SystemParams::new(32, 48, t, int(32)), adv, mode)
        .unwrap()
        .with_grid(grid.to_vec());
    (sweep_curve(&cfg).unwrap(), start.elapsed())
}

// Returns (common points, violations) of gamma(hi) >= gamma(lo).
fn dominance(hi: &[CurvePoint], lo: &[CurvePoint]) -> (usize, usize) {
    let mut common = 0;
    let mut bad = 0;
    for h in hi {
        if let Some(l) = lo.iter().find(|l| l.alpha_norm == h.alpha_norm) {
            common += 1;
            // Both sides are optimized to well under 1e-6 relative.
            if h.gamma_norm < l.gamma_norm * (1.0 - 1e-6) {
                bad += 1;
            }
        }
    }
    (common, bad)
}

#[test]
fn criterion_05_figure_shapes() {
    let mut c = Criterion::new(5, "trade-off curve shapes", 6 * 120);
    let limit = Duration::from_secs(120);
    let grid1 = linspace(1.0, (mbr_point(&SystemParams::new(32, 48, 1, int(32))).unwrap().alpha).to_f64(), 64);
    let (c1, e1) = sweep(1, None, PartitionMode::WorstCase, &grid1);
    let (c4, e4) = sweep(4, None, PartitionMode::WorstCase, &grid1);
    let (c8, e8) = sweep(8, None, PartitionMode::WorstCase, &grid1);
    let (n, bad) = dominance(&c1, &c4);
    c.check(format!("gamma(t=1) >= gamma(t=4) on {n}/64 points, {bad} violations"), n == 64 && bad == 0);
    let (n, bad) = dominance(&c4, &c8);
    c.check(format!("gamma(t=4) >= gamma(t=8) on {n}/64 points, {bad} violations"), n == 64 && bad == 0);

    let grid4 = linspace(1.0, (mbr_point(&SystemParams::new(32, 48, 4, int(32))).unwrap().alpha).to_f64(), 64);
    let g32 = PartitionMode::Fixed(32);
    let budget = |kind, total| Some(AdversaryBudget { kind, among_live: 1, per_group_max: 1, total });
    let (base, eb) = sweep(4, None, g32, &grid4);
    let (s16, es16) = sweep(4, budget(AdversaryKind::Selfish, 16), g32, &grid4);
    let (s32, es32) = sweep(4, budget(AdversaryKind::Selfish, 32), g32, &grid4);
    let (p16, ep16) = sweep(4, budget(AdversaryKind::Polluting, 16), g32, &grid4);
    let (p32, ep32) = sweep(4, budget(AdversaryKind::Polluting, 32), g32, &grid4);
    let (n, bad) = dominance(&s16, &base);
    c.check(format!("gamma(L=16) >= baseline on {n} points, {bad} violations"), n > 0 && bad == 0);
    let (n, bad) = dominance(&s32, &s16);
    c.check(format!("gamma(L=32) >= gamma(L=16) on {n} points, {bad} violations"), n > 0 && bad == 0);
    let (n, bad) = dominance(&p16, &s16);
    c.check(format!("polluting B=16 >= selfish L=16 on {n} points, {bad} violations"), n > 0 && bad == 0);
    let (n, bad) = dominance(&p32, &s32);
    c.check(format!("polluting B=32 >= selfish L=32 on {n} points, {bad} violations"), n > 0 && bad == 0);
    for (what, e) in [
        ("t=1", e1),
        ("t=4", e4),
        ("t=8", e8),
        ("g=32 baseline", eb),
        ("L=16", es16),
        ("L=32", es32),
        ("B=16", ep16),
        ("B=32", ep32),
    ] {
        c.check(format!("sweep {what} took {e:.2?}"), e < limit);
    }

    // The command-line curve for L=32 dominates the one for L=16.
    let args = |total: &str| {
        vec![
            "tradeoff", "--d", "48", "--k", "32", "--t", "4", "--adversary", "selfish", "--L0", "1", "--lmax", "1",
            "--Ltotal", total, "--fixed-g", "32",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let run = |total: &str| {
        let a = args(total);
        let (code, out) = crgc(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("alpha_norm,beta_norm,beta_prime_norm,gamma_norm,partition"));
        lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[3].parse::<f64>().unwrap())
            })
            .collect::<Vec<_>>()
    };
    let (hi, lo) = (run("32"), run("16"));
    let ok = hi.len() == lo.len()
        && hi.iter().zip(&lo).all(|(h, l)| h.0 == l.0 && h.1 >= l.1 * (1.0 - 1e-6));
    c.check("cli L=32 curve dominates L=16 curve", ok);
    c.finish();
}

fn compositions(k: u32, t: u32, parts: Option<u32>) -> Vec<Vec<u32>> {
    if k == 0 {
        return if parts.is_none_or(|g| g == 0) { vec![vec![]] } else { vec![] };
    }
    if parts == Some(0) {
        return vec![];
    }
    let mut out = Vec::new();
    for u in 1..=t.min(k) {
        for mut rest in compositions(k - u, t, parts.map(|g| g - 1)) {
            rest.insert(0, u);
            out.push(rest);
        }
    }
    out
}

fn placements(groups: usize, cap: u32, total: u32) -> Vec<Vec<u32>> {
    if groups == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for a in 0..=cap.min(total) {
        for mut rest in placements(groups - 1, cap, total - a) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

#[test]
fn criterion_06_oracle_equivalence() {
    let mut c = Criterion::new(6, "DP equals brute-force enumeration", 60);
    let points = [(int(1), rat(1, 3), rat(1, 6)), (rat(3, 2), rat(1, 2), rat(2, 5)), (int(1), rat(1, 7), int(1))];
    let mut cases = 0usize;
    let mut mismatches = Vec::new();
    for k in 1..=8u32 {
        for t in 1..=4u32 {
            for d in [k, k + 2] {
                for &(a, b, bp) in &points {
                    let p = SystemParams::new(k, d, t, int(k as i128)).with_point(a, b, bp);
                    let mut modes = vec![None];
                    modes.extend((1..=k).filter(|g| k <= g * t).map(Some));
                    for kind in [AdversaryKind::Selfish, AdversaryKind::Polluting] {
                        for among_live in 0..=1u32 {
                            if kind.weight() * among_live > d {
                                continue;
                            }
                            for cap in 0..=2u32 {
                                for total in 0..=4u32 {
                                    for &g in &modes {
                                        let adv = AdversaryBudget { kind, among_live, per_group_max: cap, total };
                                        let mut best: Option<Rational> = None;
                                        for comp in compositions(k, t, g) {
                                            let part = GroupPartition::new(comp.clone(), k, t).unwrap();
                                            for alloc in placements(comp.len(), cap, total) {
                                                let prof =
                                                    AdversaryProfile::new(kind, among_live, alloc, cap).unwrap();
                                                match capacity_under(&p, &part, &prof) {
                                                    Ok(v) => best = Some(best.map_or(v, |x| x.min(v))),
                                                    Err(CapacityError::InfeasibleAllocation { .. }) => {}
                                                    Err(e) => panic!("{e}"),
                                                }
                                            }
                                        }
                                        let mode = g.map_or(PartitionMode::WorstCase, PartitionMode::Fixed);
                                        let got = worst_case_capacity(&p, Some(&adv), mode);
                                        let same = match (&best, &got) {
                                            (Some(x), Ok(wc)) => *x == wc.value,
                                            (None, Err(TradeoffError::Infeasible(_))) => true,
                                            _ => false,
                                        };
                                        if !same && mismatches.len() < 3 {
                                            mismatches.push(format!("k={k} t={t} d={d} {adv:?} {mode:?}"));
                                        }
                                        cases += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    c.check(format!("{cases} configurations, mismatches {mismatches:?}"), mismatches.is_empty());
    c.check("thousands of cases", cases >= 1000);
    c.finish();
}

#[test]
fn criterion_07_reduction_identities() {
    let mut c = Criterion::new(7, "reduction identities over random draws", 10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=40u32);
        let t = rng.gen_range(1..=8u32);
        let d = k + rng.gen_range(0..=20u32);
        let mut r = || rat(rng.gen_range(0..=60), rng.gen_range(1..=30));
        let (a, b, bp) = (r(), r(), r());
        let p = SystemParams::new(k, d, t, int(k as i128)).with_point(a, b, bp);
        let mut groups = Vec::new();
        let mut left = k;
        while left > 0 {
            let u = rng.gen_range(1..=t.min(left));
            groups.push(u);
            left -= u;
        }
        let part = GroupPartition::new(groups, k, t).unwrap();
        let g = part.len();
        let clean = mincut_collab(&p, &part).unwrap();
        let s = capacity_selfish(&p, &part, &AdversaryProfile::none(AdversaryKind::Selfish, g)).unwrap();
        let q = capacity_polluting(&p, &part, &AdversaryProfile::none(AdversaryKind::Polluting, g)).unwrap();
        let p1 = SystemParams::new(k, d, 1, int(k as i128)).with_point(a, b, bp);
        let single = mincut_collab(&p1, &GroupPartition::singletons(k)).unwrap() == mincut_single(&p1).unwrap();
        if s != clean || q != clean || !single {
            failures += 1;
        }
    }
    c.check(format!("{failures} of 1000 draws violate an identity"), failures == 0);
    c.finish();
}

#[test]
fn criterion_08_rs_decoding_radius() {
    let mut c = Criterion::new(8, "RS decoding radius for (7,3) over GF(8)", 30);
    let code = RsCode::example();
    let field = code.field();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let word = |rng: &mut ChaCha8Rng| -> (Vec<FieldElement>, Vec<FieldElement>) {
        let msg: Vec<FieldElement> = (0..3).map(|_| field.elem(rng.gen_range(0..8)).unwrap()).collect();
        let cw = code.encode(&msg).unwrap();
        (msg, cw)
    };
    let corrupt = |rng: &mut ChaCha8Rng, cw: &[FieldElement], ns: usize, nb: usize| {
        let pos = rand::seq::index::sample(rng, 7, ns + nb).into_vec();
        let mut rx: Vec<(usize, Option<FieldElement>)> = cw.iter().copied().map(Some).enumerate().collect();
        for &p in &pos[..ns] {
            rx[p].1 = None;
        }
        for &p in &pos[ns..] {
            let v = cw[p].value() ^ rng.gen_range(1..8);
            rx[p].1 = Some(field.elem(v).unwrap());
        }
        rx
    };
    for ns in 0..=4usize {
        for nb in 0..=2usize {
            if ns + 2 * nb > 4 {
                continue;
            }
            let ok = (0..200)
                .filter(|_| {
                    let (msg, cw) = word(&mut rng);
                    code.decode(&corrupt(&mut rng, &cw, ns, nb)).is_ok_and(|m| m == msg)
                })
                .count();
            c.check(format!("ns={ns} nb={nb}: {ok}/200 decoded"), ok == 200);
        }
    }
    // ns + 2 nb = 5: one erasure, two errors.
    let mut flagged = 0;
    let mut wrong = 0;
    for _ in 0..200 {
        let (msg, cw) = word(&mut rng);
        match code.decode(&corrupt(&mut rng, &cw, 1, 2)) {
            Err(_) => flagged += 1,
            Ok(m) if m != msg => wrong += 1,
            Ok(_) => {}
        }
    }
    c.check(format!("beyond radius: {flagged}/200 flagged, {wrong} silently wrong"), wrong == 0 && flagged > 0);
    c.finish();
}

fn example_blocks(seed: u64) -> (RsCode, Vec<NodeBlock>) {
    let code = RsCode::example();
    let obj = ObjectMatrix::random(code.field(), 2, 3, &mut ChaCha8Rng::seed_from_u64(seed));
    let blocks = encode_object(&obj, &code).unwrap();
    (code, blocks)
}

#[test]
fn criterion_09_digest_mitigation() {
    let mut c = Criterion::new(9, "digest-verified progressive repair", 5);
    let mut worst_one = 0;
    let mut ok_one = true;
    let mut ok_two = true;
    let mut flagged_collect = true;
    for seed in 0..10 {
        let (code, blocks) = example_blocks(seed);
        let table = FragmentDigestTable::from_blocks(0, 3, &blocks);
        let live = &blocks[2..];
        for polluters in (3..=7usize).combinations(1).chain((3..=7usize).combinations(2)) {
            let adv: BTreeMap<usize, Behavior> = polluters.iter().map(|&p| (p, Behavior::Polluting)).collect();
            let opts = RepairOptions { seed, ..RepairOptions::default() };
            let res = progressive_repair_with_digests(&code, live, &[1, 2], &adv, &table, 0, &opts);
            let good = res.as_ref().is_ok_and(|(r, _)| r[..] == blocks[..2]);
            if polluters.len() == 1 {
                ok_one &= good;
                if let Ok((_, rep)) = &res {
                    worst_one = worst_one.max(rep.newcomers.iter().map(|n| n.contacted).max().unwrap());
                }
            } else {
                ok_two &= good;
                // Without digests, majority collection is defeated but flagged.
                let mut rx: Vec<NodeBlock> = live.to_vec();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for b in rx.iter_mut().filter(|b| polluters.contains(&b.node_id)) {
                    let r = rng.gen_range(0..2);
                    let v = b.payload[r].value() ^ rng.gen_range(1..8);
                    b.payload[r] = code.field().elem(v).unwrap();
                }
                flagged_collect &= matches!(collect_robust(&code, &rx, 2).unwrap(), Collected::Ambiguous { .. });
            }
        }
    }
    c.check("1 polluter: verified repair", ok_one);
    c.check(format!("1 polluter: at most {worst_one} live nodes contacted (<= 4)"), worst_one <= 4);
    c.check("2 polluters: verified repair", ok_two);
    c.check("2 polluters without digests: collection ambiguous", flagged_collect);
    c.finish();
}

#[test]
fn criterion_10_simulation_invariants() {
    let mut c = Criterion::new(10, "simulation reproducibility and pollution tracking", 30);
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let write = |name: &str, mitigation: &str| {
        let path = dir.join(name);
        std::fs::write(
            &path,
            format!(
                r#"{{"n": 7, "kappa": 3, "t": 2, "generations": 32,
                    "behaviors": {{"1": "polluting"}}, "mitigation": "{mitigation}", "seed": 2024}}"#
            ),
        )
        .unwrap();
        path
    };
    let naive = write("acceptance_naive.json", "none");
    let guarded = write("acceptance_digests.json", "digests");
    let run = |p: &std::path::Path| crgc(&["simulate", "--config", p.to_str().unwrap()]);
    let (c1, a) = run(&naive);
    let (c2, b) = run(&naive);
    c.check("exit codes 0", c1 == 0 && c2 == 0);
    c.check("identical runs are byte-identical", a == b && !a.is_empty());
    let column = |csv: &str, name: &str| -> Vec<String> {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let i = header.iter().position(|h| *h == name).unwrap();
        lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
    };
    let polluted: Vec<usize> = column(&a, "polluted_blocks").iter().map(|v| v.parse().unwrap()).collect();
    c.check(format!("32 generations reported ({})", polluted.len()), polluted.len() == 32);
    c.check(
        format!("polluted blocks non-decreasing without mitigation (final {:?})", polluted.last()),
        polluted.windows(2).all(|w| w[1] >= w[0]) && polluted.last() > Some(&0),
    );
    let (c3, g) = run(&guarded);
    let clean: Vec<usize> = column(&g, "polluted_blocks").iter().map(|v| v.parse().unwrap()).collect();
    c.check(
        "polluted blocks identically zero with digests",
        c3 == 0 && clean.len() == 32 && clean.iter().all(|&v| v == 0),
    );
    c.finish();
}
