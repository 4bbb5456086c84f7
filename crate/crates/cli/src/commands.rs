use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use crgc_core::capacity::{
    fmt_rational, fmt_sig, int, mbr_point, mincut_collab, mincut_single, msr_point, msr_selfish_bounds,
    repair_gamma, shifted_min_storage, AdversaryKind, AdversaryProfile, GroupPartition, OperatingPoint,
    Rational, SystemParams,
};
use crgc_core::exactcode::{collaborative_repair, collect, encode_object, ExactCodeError, ObjectMatrix, RepairOptions};
use crgc_core::galois::RsCode;
use crgc_core::scenarios::{run_cost_scenario, simulate_generations, write_stats_csv, CostScenario, ScenarioConfig};
use crgc_core::tradeoff::{
    default_alpha_grid, linspace, sweep_curve, worst_case_capacity, AdversaryBudget, PartitionMode, SweepConfig,
    TradeoffError,
};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{AdversaryArg, AdversaryArgs, BoundsArgs, DemoArgs, PointArg, SimulateArgs, SystemArgs, TradeoffArgs};

fn echo(command: &str, resolved: Value) {
    eprintln!("{}", json!({ "command": command, "resolved": resolved }));
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn system_params(a: &SystemArgs) -> Result<SystemParams> {
    let mut p = SystemParams::new(a.k, a.d, a.t, a.object_size);
    if let Some(n) = a.n {
        p = p.with_n(n);
    }
    p.validate()?;
    Ok(p)
}

fn system_json(p: &SystemParams) -> Value {
    json!({ "n": p.n, "k": p.k, "d": p.d, "t": p.t, "B": fmt_rational(&p.object_size) })
}

fn budget(a: &AdversaryArgs) -> Option<AdversaryBudget> {
    a.adversary.map(|kind| AdversaryBudget {
        kind: match kind {
            AdversaryArg::Selfish => AdversaryKind::Selfish,
            AdversaryArg::Polluting => AdversaryKind::Polluting,
        },
        among_live: a.l0,
        per_group_max: a.lmax,
        total: a.ltotal,
    })
}

fn mode(a: &AdversaryArgs) -> PartitionMode {
    a.fixed_g.map_or(PartitionMode::WorstCase, PartitionMode::Fixed)
}

fn adversary_json(a: &AdversaryArgs) -> Value {
    json!({
        "adversary": a.adversary.map(|k| format!("{k:?}").to_lowercase()),
        "L0": a.l0,
        "lmax": a.lmax,
        "Ltotal": a.ltotal,
        "fixed_g": a.fixed_g,
    })
}

pub fn bounds(a: &BoundsArgs) -> Result<()> {
    let base = system_params(&a.system)?;
    let msr = msr_point(&base)?;
    let mbr = mbr_point(&base)?;
    let point = match a.point {
        PointArg::Msr => msr,
        PointArg::Mbr => mbr,
    };
    let p = base.clone().at(&point);
    let adv = budget(&a.adversary);
    echo(
        "bounds",
        json!({
            "system": system_json(&base),
            "point": format!("{:?}", a.point).to_lowercase(),
            "adversary": adversary_json(&a.adversary),
            "raw": a.raw,
        }),
    );

    let unit = if a.raw { int(1) } else { base.unit() };
    let show = |r: Rational| fmt_rational(&(r / unit));
    let point_json = |pt: &OperatingPoint| {
        let q = base.clone().at(pt);
        json!({
            "alpha": show(pt.alpha),
            "beta": show(pt.beta),
            "beta_prime": show(pt.beta_prime),
            "gamma": show(repair_gamma(&q)),
        })
    };
    let wc = worst_case_capacity(&p, adv.as_ref(), mode(&a.adversary))?;
    let mut out = json!({
        "units": if a.raw { "raw" } else { "B/k" },
        "point": format!("{:?}", a.point).to_lowercase(),
        "alpha": show(p.alpha),
        "beta": show(p.beta),
        "beta_prime": show(p.beta_prime),
        "gamma": show(repair_gamma(&p)),
        "msr": point_json(&msr),
        "mbr": point_json(&mbr),
        "capacity": {
            "mincut_single": show(mincut_single(&p)?),
            "all_singletons": show(mincut_collab(&p, &GroupPartition::singletons(p.k))?),
            "full_groups": show(mincut_collab(&p, &GroupPartition::full_groups(p.k, p.t))?),
            "worst_case": show(wc.value),
            "witness_partition": wc.partition.to_string(),
            "witness_allocation": wc.allocation.iter().join("-"),
            "reaches_B": wc.value >= p.object_size,
        },
    });
    if let Some(adv) = adv {
        match adv.kind {
            AdversaryKind::Selfish => {
                let profile = selfish_profile(&base, &adv);
                let b = msr_selfish_bounds(&base, &profile)?;
                out["selfish_msr_bounds"] = json!({
                    "beta_min_exact": b.beta_min_exact.map(show),
                    "beta_range": [show(b.beta_range.0), show(b.beta_range.1)],
                    "beta_prime_range": b.beta_prime_range.map(|(lo, hi)| [show(lo), show(hi)]),
                    "beta_prime_feasible": b.beta_prime_range.is_some(),
                });
            }
            AdversaryKind::Polluting => {
                out["shifted_min_storage"] = json!(show(shifted_min_storage(&base, adv.among_live)?));
            }
        }
    }
    let mut w = sink(None)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&out)?)?;
    w.flush()?;
    Ok(())
}

// Groups of size t - l_i covering k + L nodes when that divides evenly,
// adversaries packed from the front.
fn selfish_profile(p: &SystemParams, adv: &AdversaryBudget) -> AdversaryProfile {
    let (k, t, total) = (p.k, p.t, adv.total);
    let mut per_group = Vec::new();
    if (k + total) % t == 0 && adv.per_group_max > 0 {
        let g = (k + total) / t;
        let mut left = total;
        for _ in 0..g {
            let l = left.min(adv.per_group_max);
            per_group.push(l);
            left -= l;
        }
        if left > 0 {
            per_group.clear();
        }
    }
    AdversaryProfile {
        kind: AdversaryKind::Selfish,
        among_live: adv.among_live,
        per_group,
        per_group_max: adv.per_group_max,
        total,
    }
}

pub fn tradeoff(a: &TradeoffArgs) -> Result<()> {
    let p = system_params(&a.system)?;
    let adv = budget(&a.adversary);
    let hi = match a.alpha_max {
        Some(hi) => hi,
        None => *default_alpha_grid(&p, 2)?.last().expect("two points"),
    };
    let grid = linspace(a.alpha_min, hi, a.points);
    echo(
        "tradeoff",
        json!({
            "system": system_json(&p),
            "adversary": adversary_json(&a.adversary),
            "points": a.points,
            "alpha_min": a.alpha_min,
            "alpha_max": hi,
            "tol": a.tol,
        }),
    );
    let cfg = SweepConfig {
        params: p,
        adversary: adv,
        alpha_grid: grid,
        partition_mode: mode(&a.adversary),
        tolerance: a.tol,
    };
    let curve = sweep_curve(&cfg)?;
    if curve.is_empty() {
        return Err(TradeoffError::Infeasible("no storage value on the grid reaches B".into()).into());
    }
    let mut w = sink(a.output.as_deref())?;
    writeln!(w, "alpha_norm,beta_norm,beta_prime_norm,gamma_norm,partition")?;
    for c in &curve {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig(c.alpha_norm, 9),
            fmt_sig(c.beta_norm, 9),
            fmt_sig(c.beta_prime_norm, 9),
            fmt_sig(c.gamma_norm, 9),
            c.witness_partition
        )?;
    }
    w.flush()?;
    Ok(())
}

fn bits(v: u16, width: usize) -> String {
    format!("{v:0width$b}")
}

pub fn exact_demo(a: &DemoArgs) -> Result<()> {
    echo("exact-demo", json!({ "seed": a.seed }));
    let code = RsCode::example();
    let field = code.field();
    let width = field.exponent() as usize;
    let obj = ObjectMatrix::random(field, 2, 3, &mut ChaCha8Rng::seed_from_u64(a.seed));
    let blocks = encode_object(&obj, &code)?;
    let mut w = sink(None)?;

    writeln!(w, "GF(2^3) with w^3 = w + 1 (polynomial {:#b}), elements as bit strings", field.primitive_poly())?;
    writeln!(w, "generator G:")?;
    let g = code.generator();
    for r in 0..g.rows() {
        writeln!(w, "  {}", g.row(r).iter().map(|&v| bits(v, width)).join(" "))?;
    }
    writeln!(w, "object O (t=2 rows, kappa=3 columns, B=6 units):")?;
    for r in 0..obj.t() {
        writeln!(w, "  {}", obj.matrix().row(r).iter().map(|&v| bits(v, width)).join(" "))?;
    }
    writeln!(w, "stored blocks O g_i:")?;
    for b in &blocks {
        writeln!(
            w,
            "  node {}: {}",
            b.node_id,
            b.payload.iter().map(|e| bits(e.value(), width)).join(" ")
        )?;
    }

    let subsets = blocks.iter().cloned().combinations(3).collect_vec();
    let good = subsets.iter().filter(|s| collect(&code, s).is_ok_and(|o| o == obj)).count();
    writeln!(w, "collection: {good}/{} choices of 3 nodes recover O", subsets.len())?;

    let failed = [1usize, 2];
    let live = blocks[2..].to_vec();
    let (repaired, report) =
        collaborative_repair(&code, &live, &failed, &Default::default(), &RepairOptions::default())?;
    writeln!(w, "repair of nodes 1 and 2 from nodes 3, 4, 5:")?;
    for x in &report.transfers {
        writeln!(w, "  {:>2} -> {:>2}  row {}  {:?}", x.from, x.to, x.row + 1, x.kind)?;
    }
    let lost: usize = repaired.iter().map(|b| b.payload.len()).sum();
    writeln!(
        w,
        "{} units transferred to replenish {lost} units",
        report.total_transfer()
    )?;
    writeln!(
        w,
        "per newcomer (normalized by B/k = 2): beta = {}, beta' = {}, gamma = {}",
        fmt_rational(&report.beta_av()),
        fmt_rational(&report.beta_prime()),
        fmt_rational(&report.gamma())
    )?;
    let exact = repaired.iter().all(|b| *b == blocks[b.node_id - 1]);
    writeln!(w, "repaired blocks identical to lost blocks: {exact}")?;
    w.flush()?;
    if !exact || good != subsets.len() {
        return Err(ExactCodeError::RepairFailure("example did not round-trip".into()).into());
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    echo("simulate", serde_json::to_value(&cfg)?);
    let stats = simulate_generations(&cfg)?;
    let mut w = sink(a.output.as_deref())?;
    write_stats_csv(&stats, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn tables() -> Result<()> {
    echo("tables", json!({ "code": "(7,3) over GF(8)", "t": 2, "d": 3, "failed": [1, 2] }));
    let mut w = sink(None)?;
    writeln!(
        w,
        "{:<24} {:>6} {:>6} {:>6} {:>3}   {:>6} {:>6} {:>6} {:>3}   match",
        "scenario", "beta", "beta'", "gamma", "d", "beta", "beta'", "gamma", "d"
    )?;
    writeln!(w, "{:<24} {:^29}   {:^29}", "", "measured", "published")?;
    for s in CostScenario::ALL {
        let rec = run_cost_scenario(s)?;
        let (b, bp, g, d) = s.published();
        let matches = (rec.beta, rec.beta_prime, rec.gamma, rec.effective_d) == (b, bp, g, d);
        writeln!(
            w,
            "{:<24} {:>6} {:>6} {:>6} {:>3}   {:>6} {:>6} {:>6} {:>3}   {}",
            s.label(),
            fmt_rational(&rec.beta),
            fmt_rational(&rec.beta_prime),
            fmt_rational(&rec.gamma),
            rec.effective_d,
            fmt_rational(&b),
            fmt_rational(&bp),
            fmt_rational(&g),
            d,
            if matches { "yes" } else { "NO" }
        )?;
    }
    w.flush()?;
    Ok(())
}
