//! Markdown and JSON rendering. Probabilities are shown as 4-decimal
//! roundings, angles in degrees.

use std::fmt::Write as _;

use num_complex::Complex64;
use qrel_core::estimation::{ChiSquareResult, FitReport, SequentialProbabilities};
use qrel_core::hilbert::Matrix2c;
use qrel_core::io::ModelDocument;
use qrel_core::quantumness::{
    CommutatorEntry, EffectCell, EffectTable, EffectTables, LtpReport, Negativity,
    WignerDistribution,
};
use qrel_core::simulator::{CascadeStage, StageCounts};
use serde_json::{json, Value};

pub fn round4(x: f64) -> f64 {
    let v = (x * 1e4).round() / 1e4;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn p4(x: f64) -> String {
    format!("{:.4}", round4(x))
}

fn opt4(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), p4)
}

fn deg(x: f64) -> String {
    let v = (x * 100.0).round() / 100.0;
    format!("{:.2}", if v == 0.0 { 0.0 } else { v })
}

/// Markdown table cells must not contain bare pipes.
fn cell(label: &str) -> String {
    label.replace('|', "\\|")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn chi_md(c: Option<ChiSquareResult>) -> String {
    match c {
        None => "n/a".into(),
        Some(c) => format!(
            "chi2 = {:.4}, p = {}{}",
            c.statistic,
            p4(c.p_value),
            if c.significant { " *" } else { "" }
        ),
    }
}

fn chi_json(c: Option<ChiSquareResult>) -> Value {
    match c {
        None => Value::Null,
        Some(c) => json!({
            "statistic": round4(c.statistic),
            "p_value": round4(c.p_value),
            "alpha": c.alpha,
            "significant": c.significant,
        }),
    }
}

/// Everything the `report` command shows for one query.
pub struct QueryReport {
    pub agg: SequentialProbabilities,
    pub fit: FitReport,
    pub effects: EffectTables,
    pub ltp: LtpReport,
    pub wigner: WignerDistribution,
    pub negativity: Negativity,
    pub commutators: Vec<CommutatorEntry>,
}

const JOINT_LABELS: [&str; 7] = [
    "P(T+)",
    "P(U+,T+)",
    "P(R+,T+)",
    "P(R+,U+,T+)",
    "P(R+,U-,T+)",
    "P(U+,R+,T+)",
    "P(U+,R-,T+)",
];

fn joints(agg: &SequentialProbabilities) -> [Option<f64>; 7] {
    [
        agg.p_t_pos.map(|e| e.value),
        agg.p_u_pos_t_pos(),
        agg.p_r_pos_t_pos(),
        agg.p_r_pos_u_pos_t_pos(),
        agg.p_r_pos_u_neg_t_pos(),
        agg.p_u_pos_r_pos_t_pos(),
        agg.p_u_pos_r_neg_t_pos(),
    ]
}

pub fn parameters_md(out: &mut String, agg: &SequentialProbabilities, fit: &FitReport) {
    let p = fit.model.params();
    out.push_str("### Parameters\n\n| ");
    for label in JOINT_LABELS {
        let _ = write!(out, "{label} | ");
    }
    out.push_str("t^2 | u^2 | r^2 | theta_r (deg) |\n|");
    out.push_str(&"---|".repeat(JOINT_LABELS.len() + 4));
    out.push_str("\n| ");
    for j in joints(agg) {
        let _ = write!(out, "{} | ", opt4(j));
    }
    let _ = writeln!(
        out,
        "{} | {} | {} | {} |\n",
        p4(p.t().powi(2)),
        p4(p.u().powi(2)),
        p4(p.r().powi(2)),
        deg(p.theta_r_deg())
    );
    let _ = writeln!(
        out,
        "- cos(theta_r) before clamping: {}\n- feasible: {}\n- degenerate phase: {}",
        p4(fit.cos_theta_raw),
        yes_no(fit.feasible),
        yes_no(fit.degenerate_phase)
    );
    if let Some(res) = fit.residual_tru_third_step {
        let _ = writeln!(out, "- TRU third-step residual: {}", p4(res));
    }
    for note in &fit.notes {
        let _ = writeln!(out, "- note: {note}");
    }
    out.push('\n');
}

pub fn parameters_json(agg: &SequentialProbabilities, fit: &FitReport) -> Value {
    let p = fit.model.params();
    let probabilities: serde_json::Map<String, Value> = JOINT_LABELS
        .iter()
        .zip(joints(agg))
        .map(|(k, v)| (k.to_string(), v.map_or(Value::Null, |x| json!(round4(x)))))
        .collect();
    json!({
        "probabilities": probabilities,
        "t2": round4(p.t().powi(2)),
        "u2": round4(p.u().powi(2)),
        "r2": round4(p.r().powi(2)),
        "theta_r_deg": round4(p.theta_r_deg()),
        "cos_theta_raw": round4(fit.cos_theta_raw),
        "feasible": fit.feasible,
        "degenerate_phase": fit.degenerate_phase,
        "residual_tru_third_step": fit.residual_tru_third_step.map(round4),
        "notes": fit.notes,
        "model": ModelDocument::from_model(&fit.model),
    })
}

fn effect_md(out: &mut String, title: &str, table: &EffectTable) {
    let _ = writeln!(
        out,
        "### {title}\n\n| probability | value | vs baseline |\n|---|---|---|"
    );
    let row = |out: &mut String, c: &EffectCell, base: bool| {
        let cmp = if base {
            "baseline".to_string()
        } else {
            chi_md(c.versus_baseline)
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            cell(c.label),
            p4(c.estimate.value),
            cmp
        );
    };
    row(out, &table.baseline, true);
    row(out, &table.given_positive, false);
    row(out, &table.given_negative, false);
    out.push('\n');
}

fn effect_json(table: &EffectTable) -> Value {
    let c = |c: &EffectCell| {
        json!({
            "label": c.label,
            "value": round4(c.estimate.value),
            "counts": c.estimate.counts,
            "versus_baseline": chi_json(c.versus_baseline),
        })
    };
    json!([
        c(&table.baseline),
        c(&table.given_positive),
        c(&table.given_negative)
    ])
}

pub fn effects_md(out: &mut String, e: &EffectTables) {
    effect_md(
        out,
        "Effect of Understandability on Reliability",
        &e.reliability,
    );
    effect_md(
        out,
        "Effect of Reliability on Understandability",
        &e.understandability,
    );
}

pub fn ltp_md(out: &mut String, ltp: &LtpReport) {
    let _ = writeln!(
        out,
        "### Law of total probability\n\n\
         | P(R+,U+,T+) + P(R+,U-,T+) | P(R+,T+) | delta | model interference | significance |\n\
         |---|---|---|---|---|\n\
         | {} | {} | {} | {} | {} |\n",
        p4(ltp.p_ltp_sum),
        p4(ltp.p_direct),
        p4(ltp.delta),
        p4(ltp.model_interference),
        chi_md(ltp.significance)
    );
}

pub fn ltp_json(ltp: &LtpReport) -> Value {
    json!({
        "p_ltp_sum": round4(ltp.p_ltp_sum),
        "p_direct": round4(ltp.p_direct),
        "delta": round4(ltp.delta),
        "model_interference": round4(ltp.model_interference),
        "significance": chi_json(ltp.significance),
    })
}

pub fn wigner_md(out: &mut String, t2: f64, w: &WignerDistribution, n: &Negativity) {
    let _ = writeln!(
        out,
        "### Wigner function (t^2 = {})\n\n| | column 1 | column 2 |\n|---|---|---|\n\
         | row 1 | {} | {} |\n| row 2 | {} | {} |\n\n\
         - r_x = {}, r_z = {}\n- negative entries: {} (minimum {})\n",
        p4(t2),
        p4(w.w[0][0]),
        p4(w.w[0][1]),
        p4(w.w[1][0]),
        p4(w.w[1][1]),
        p4(w.r_x),
        p4(w.r_z),
        yes_no(n.has_negative),
        p4(n.min_entry)
    );
}

pub fn wigner_json(t2: f64, w: &WignerDistribution, n: &Negativity) -> Value {
    json!({
        "t2": round4(t2),
        "w": w.w.map(|row| row.map(round4)),
        "r_x": round4(w.r_x),
        "r_z": round4(w.r_z),
        "has_negative": n.has_negative,
        "min_entry": round4(n.min_entry),
    })
}

fn pair_label(c: &CommutatorEntry) -> String {
    format!("[{},{}]", c.pair.0.letter(), c.pair.1.letter())
}

pub fn commutators_md(out: &mut String, entries: &[CommutatorEntry]) {
    out.push_str("### Commutators\n\n| pair | Frobenius norm | commutes |\n|---|---|---|\n");
    for c in entries {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            pair_label(c),
            p4(c.frobenius_norm),
            yes_no(c.commutes)
        );
    }
    out.push('\n');
}

pub fn commutators_json(entries: &[CommutatorEntry]) -> Value {
    entries
        .iter()
        .map(|c| json!({"pair": pair_label(c), "frobenius_norm": round4(c.frobenius_norm), "commutes": c.commutes}))
        .collect()
}

pub fn report_md(r: &QueryReport) -> String {
    let mut out = format!("## Query {}\n\n", r.agg.query_id);
    parameters_md(&mut out, &r.agg, &r.fit);
    effects_md(&mut out, &r.effects);
    ltp_md(&mut out, &r.ltp);
    let t2 = r.fit.model.params().t().powi(2);
    wigner_md(&mut out, t2, &r.wigner, &r.negativity);
    commutators_md(&mut out, &r.commutators);
    out
}

pub fn report_json(r: &QueryReport) -> Value {
    let t2 = r.fit.model.params().t().powi(2);
    json!({
        "query_id": r.agg.query_id,
        "parameters": parameters_json(&r.agg, &r.fit),
        "effects": {
            "reliability": effect_json(&r.effects.reliability),
            "understandability": effect_json(&r.effects.understandability),
        },
        "ltp": ltp_json(&r.ltp),
        "wigner": wigner_json(t2, &r.wigner, &r.negativity),
        "commutators": commutators_json(&r.commutators),
    })
}

pub fn complex(z: Complex64) -> String {
    if z.im.abs() < 5e-5 {
        p4(z.re)
    } else {
        let arg = z.arg().to_degrees();
        let sign = if arg < 0.0 { "-" } else { "" };
        format!("{} e^({sign}i {} deg)", p4(z.norm()), deg(arg.abs()))
    }
}

pub fn matrix_md(name: &str, m: &Matrix2c) -> String {
    format!(
        "| {name} | column 1 | column 2 |\n|---|---|---|\n| row 1 | {} | {} |\n| row 2 | {} | {} |\n",
        complex(m.get(0, 0)),
        complex(m.get(0, 1)),
        complex(m.get(1, 0)),
        complex(m.get(1, 1))
    )
}

pub fn matrix_json(m: &Matrix2c) -> Value {
    let z = |z: Complex64| json!({"re": round4(z.re), "im": round4(z.im)});
    json!([
        [z(m.get(0, 0)), z(m.get(0, 1))],
        [z(m.get(1, 0)), z(m.get(1, 1))]
    ])
}

pub fn cascade_md(stages: &[CascadeStage], counts: &[StageCounts], shots: u64) -> String {
    let mut out = String::from("| stage | axis | + | - | passed |\n|---|---|---|---|---|\n");
    for (i, (s, c)) in stages.iter().zip(counts).enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            s.label,
            c.positive,
            c.negative,
            c.passed
        );
    }
    if shots == 1 {
        let _ = writeln!(out, "\ntrajectory: {}", trajectory(stages, counts));
    }
    out
}

/// Path of a single particle, read off one-shot counts.
pub fn trajectory(stages: &[CascadeStage], counts: &[StageCounts]) -> String {
    let mut steps = Vec::new();
    for (s, c) in stages.iter().zip(counts) {
        if c.entered() == 0 {
            break;
        }
        let sign = if c.positive == 1 { '+' } else { '-' };
        let blocked = if c.passed == 0 { " (blocked)" } else { "" };
        steps.push(format!("{}{sign}{blocked}", s.label));
    }
    steps.join(" -> ")
}
