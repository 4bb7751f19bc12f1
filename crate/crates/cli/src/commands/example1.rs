use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use sotlab_core::ot::{
    build_example1, enumerate_oracle_weights, map_distortion, Example1Conditions, Example1Instance, Example1Variant,
    TransportPlan,
};
use sotlab_core::GroundCost;

use crate::config::{Example1Config, ExperimentConfig, SweepConfig};
use crate::error::{CliError, Result};
use crate::workspace::{write_file, write_json, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Experiment config; its `example1` section provides defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    ptilde1: Option<f64>,
    /// Comma-separated ground costs: `l2` (squared) and `l<q>` with q in [0, 1].
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<String>>,
    /// Cross-check every plan against exhaustive vertex enumeration.
    #[arg(long)]
    oracle: bool,
    /// Use the uncorrected clean atom `x2 = [-a, -b, ..., -b]`.
    #[arg(long)]
    literal: bool,
    /// Emit `sweep.csv` over the (a, b, m, q) grid.
    #[arg(long)]
    sweep: bool,
    #[arg(long, value_delimiter = ',')]
    sweep_a: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sweep_b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sweep_m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sweep_q: Option<Vec<f64>>,
    /// Output directory (relative paths go under the output root).
    #[arg(long, default_value = "out/example1")]
    out: PathBuf,
}

fn resolve(args: &Args, base: Option<Example1Config>) -> Example1Config {
    let mut cfg = base.unwrap_or_default();
    if let Some(v) = args.a {
        cfg.a = v;
    }
    if let Some(v) = args.b {
        cfg.b = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.p1 {
        cfg.p1 = v;
    }
    if let Some(v) = args.ptilde1 {
        cfg.ptilde1 = v;
    }
    if let Some(v) = &args.costs {
        cfg.costs = v.clone();
    }
    cfg.oracle |= args.oracle;
    cfg.literal |= args.literal;
    let wants_sweep = args.sweep || args.sweep_a.is_some() || args.sweep_b.is_some() || args.sweep_m.is_some() || args.sweep_q.is_some();
    if wants_sweep || cfg.sweep.is_some() {
        let mut sweep = cfg.sweep.take().unwrap_or_default();
        if let Some(v) = &args.sweep_a {
            sweep.a = v.clone();
        }
        if let Some(v) = &args.sweep_b {
            sweep.b = v.clone();
        }
        if let Some(v) = &args.sweep_m {
            sweep.m = v.clone();
        }
        if let Some(v) = &args.sweep_q {
            sweep.q = v.clone();
        }
        cfg.sweep = Some(sweep);
    }
    cfg
}

pub(crate) fn parse_cost(label: &str) -> Result<GroundCost> {
    let cost = match label.trim() {
        "l2" => GroundCost::SquaredL2,
        other => {
            let q = other
                .strip_prefix('l')
                .and_then(|q| q.parse::<f64>().ok())
                .ok_or_else(|| CliError::Validation(format!("unknown cost {other:?}; use l2 or l<q> with q in [0, 1]")))?;
            GroundCost::Lq { q }
        }
    };
    cost.validate()?;
    Ok(cost)
}

#[derive(Debug, Clone, Serialize)]
struct CostResult {
    cost: String,
    q: Option<f64>,
    total_cost: f64,
    plan: Vec<Vec<f64>>,
    /// `["x1", "x2", ...]` per `y` atom, or `"non-deterministic plan"`.
    map: serde_json::Value,
    map_distortion: f64,
    recovers_inverse: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

#[derive(Debug, Clone, Serialize)]
struct OracleCheck {
    total_cost: f64,
    agreement: String,
}

fn map_labels(plan: &TransportPlan) -> Option<Vec<String>> {
    plan.induced_map().map(|m| {
        m.into_iter().map(|t| t.map_or_else(|| "none".to_string(), |j| format!("x{}", j + 1))).collect()
    })
}

fn check_oracle(inst: &Example1Instance, ground: &GroundCost, plan: &TransportPlan) -> Result<OracleCheck> {
    let oracle = enumerate_oracle_weights(&inst.py, &inst.px, &inst.cost_matrix(ground)?)?;
    let same_cost = (oracle.total_cost - plan.total_cost).abs() <= 1e-9;
    let same_plan = oracle.pi.iter().zip(&plan.pi).all(|(a, b)| (a - b).abs() <= 1e-12);
    let agreement = match (same_cost, same_plan) {
        (true, true) => "exact".to_string(),
        (true, false) => "equal cost, different optimal plan".to_string(),
        (false, _) => format!("mismatch (solver {}, oracle {})", plan.total_cost, oracle.total_cost),
    };
    Ok(OracleCheck { total_cost: oracle.total_cost, agreement })
}

fn solve_cost(inst: &Example1Instance, label: &str, oracle: bool) -> Result<CostResult> {
    let ground = parse_cost(label)?;
    let plan = inst.solve(&ground)?;
    let distortion = map_distortion(&plan, inst)?;
    let map = match map_labels(&plan) {
        Some(m) => json!(m),
        None => json!("non-deterministic plan"),
    };
    Ok(CostResult {
        cost: ground.label(),
        q: match ground {
            GroundCost::Lq { q } => Some(q),
            _ => None,
        },
        total_cost: plan.total_cost,
        recovers_inverse: distortion.abs() <= 1e-12,
        oracle: if oracle { Some(check_oracle(inst, &ground, &plan)?) } else { None },
        plan: plan.rows_as_vecs(),
        map,
        map_distortion: distortion,
    })
}

fn condition_notes(conditions: &[Example1Conditions]) -> Vec<String> {
    let mut notes = Vec::new();
    if let Some(c) = conditions.first() {
        if !c.l2_prefers_small_spread {
            notes.push("condition a^2 > m b^2 violated: the l2 plan is not expected to mis-pair".to_string());
        }
    }
    for c in conditions {
        if !c.lq_prefers_sparse {
            notes.push(format!("condition a^q < m b^q violated for q={}", c.q));
        }
    }
    notes
}

fn sweep_csv(sweep: &SweepConfig, p1: f64, ptilde1: f64, variant: Example1Variant) -> Result<String> {
    let mut out = String::from("a,b,m,q,l2_prefers_small_spread,lq_prefers_sparse,l2_distortion,lq_distortion,recovers_inverse\n");
    for &a in &sweep.a {
        for &b in &sweep.b {
            for &m in &sweep.m {
                for &q in &sweep.q {
                    let inst = build_example1(a, b, m, p1, ptilde1, &[q], variant)?;
                    let l2 = map_distortion(&inst.solve(&GroundCost::SquaredL2)?, &inst)?;
                    let lq_cost = GroundCost::Lq { q };
                    lq_cost.validate()?;
                    let lq = map_distortion(&inst.solve(&lq_cost)?, &inst)?;
                    let c = inst.conditions[0];
                    let _ = writeln!(
                        out,
                        "{a},{b},{m},{q},{},{},{l2},{lq},{}",
                        c.l2_prefers_small_spread,
                        c.lq_prefers_sparse,
                        lq.abs() <= 1e-12
                    );
                }
            }
        }
    }
    Ok(out)
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("example1");
    let config = ExperimentConfig::load(args.config.as_deref().map(|p| ws.input(p)).as_deref())?;
    let cfg = resolve(&args, config.example1);
    let variant = if cfg.literal { Example1Variant::Literal } else { Example1Variant::SignCorrected };
    let qs: Vec<f64> = cfg
        .costs
        .iter()
        .map(|c| parse_cost(c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|g| match g {
            GroundCost::Lq { q } => Some(q),
            _ => None,
        })
        .collect();
    let inst = build_example1(cfg.a, cfg.b, cfg.m, cfg.p1, cfg.ptilde1, &qs, variant)?;
    let results = cfg.costs.iter().map(|c| solve_cost(&inst, c, cfg.oracle)).collect::<Result<Vec<_>>>()?;
    let notes = condition_notes(&inst.conditions);

    let mut text = format!(
        "Example 1: a={} b={} m={} p1={} ptilde1={} ({})\n",
        cfg.a,
        cfg.b,
        cfg.m,
        cfg.p1,
        cfg.ptilde1,
        if cfg.literal { "literal atoms" } else { "sign-corrected atoms" }
    );
    let mut csv = String::from("cost,q,total_cost,map,map_distortion,recovers_inverse\n");
    for r in &results {
        let map = match &r.map {
            serde_json::Value::Array(v) => {
                v.iter().enumerate().map(|(k, t)| format!("y{}->{}", k + 1, t.as_str().unwrap_or("?"))).collect::<Vec<_>>().join(" ")
            }
            other => other.as_str().unwrap_or_default().to_string(),
        };
        let _ = writeln!(
            text,
            "cost {}: plan {map} | transport cost {:.12} | map distortion {:.12}{}",
            r.cost,
            r.total_cost,
            r.map_distortion,
            if r.recovers_inverse { " | recovers the inverse" } else { "" }
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.cost,
            r.q.map(|q| q.to_string()).unwrap_or_default(),
            r.total_cost,
            map,
            r.map_distortion,
            r.recovers_inverse
        );
    }
    let mut oracle_failed = false;
    if cfg.oracle {
        let bad: Vec<String> = results
            .iter()
            .filter_map(|r| r.oracle.as_ref().filter(|o| o.agreement != "exact").map(|o| format!("{}: {}", r.cost, o.agreement)))
            .collect();
        if bad.is_empty() {
            text.push_str("oracle agreement: exact\n");
        } else {
            oracle_failed = true;
            let _ = writeln!(text, "oracle agreement: FAILED ({})", bad.join("; "));
        }
    }
    for n in &notes {
        let _ = writeln!(text, "{n}");
    }
    print!("{text}");

    let out = ws.output(&args.out);
    let report = json!({
        "instance": {
            "a": cfg.a, "b": cfg.b, "m": cfg.m, "p1": cfg.p1, "ptilde1": cfg.ptilde1,
            "variant": variant,
            "x": inst.x, "y": inst.y, "py": inst.py, "px": inst.px,
            "conditions": inst.conditions,
        },
        "results": results,
        "condition_notes": notes,
    });
    write_json(&out.join("example1.json"), &report)?;
    write_file(&out.join("example1.csv"), csv)?;
    if let Some(sweep) = &cfg.sweep {
        write_file(&out.join("sweep.csv"), sweep_csv(sweep, cfg.p1, cfg.ptilde1, variant)?)?;
    }
    let resolved = ExperimentConfig { example1: Some(cfg), ..Default::default() };
    record.finish(&out, &resolved, json!({ "config": args.config }))?;
    if oracle_failed {
        return Err(CliError::Numerical("solver and oracle disagree".into()));
    }
    Ok(())
}
