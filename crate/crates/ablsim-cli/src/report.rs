//! Output documents. Machine mode prints one pretty JSON document per run;
//! the `kind` tag tells consumers which fields to expect. Human mode renders
//! the same data as text with probabilities at twelve decimals.

use ablsim::hilbert::OutcomeProb;
use ablsim::montecarlo::{EstimateReport, Z_LIMIT};
use ablsim::presets::{MixtureDemo, ReferenceTable};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Forward and two-time probabilities of one experiment. Emitted by both the
/// preset and file paths so a faithful scenario file reproduces the preset
/// document byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub d3_present: bool,
    /// Which-way observable name, present iff the circuit has a coupler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<String>,
    pub forward: Vec<OutcomeProb>,
    /// `Prob(click | detector)` per detector, present iff the circuit has a
    /// coupler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditionals: Option<Vec<OutcomeProb>>,
}

/// Click/no-click distribution conditioned on one final outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub scenario: String,
    pub intermediate: String,
    pub condition: String,
    pub distribution: Vec<OutcomeProb>,
}

/// The built-in comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub all_match: bool,
    pub table: ReferenceTable,
}

/// Sampling run compared against the closed forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub d3_present: bool,
    pub estimate: EstimateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportDocument {
    Scenario(ScenarioReport),
    Conditional(ConditionalReport),
    Table(TableReport),
    Verify(VerifyReport),
    Decompose(MixtureDemo),
}

impl ReportDocument {
    /// Pretty JSON plus a trailing newline. Printing, parsing, and printing
    /// again yields identical bytes.
    pub fn machine(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report documents always serialize");
        text.push('\n');
        text
    }

    pub fn human(&self) -> String {
        match self {
            ReportDocument::Scenario(r) => human_scenario(r),
            ReportDocument::Conditional(r) => human_conditional(r),
            ReportDocument::Table(r) => human_table(r),
            ReportDocument::Verify(r) => human_verify(r),
            ReportDocument::Decompose(r) => human_decompose(r),
        }
    }
}

fn coupler_line(present: bool) -> &'static str {
    if present {
        "which-way coupler: present"
    } else {
        "which-way coupler: absent"
    }
}

fn push_rows(out: &mut String, rows: &[OutcomeProb], fmt: impl Fn(&str) -> String) {
    let width = rows.iter().map(|r| fmt(&r.outcome).len()).max().unwrap_or(0);
    for row in rows {
        let _ = writeln!(
            out,
            "  {:<width$} = {:.12}",
            fmt(&row.outcome),
            row.probability
        );
    }
}

fn human_scenario(r: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", r.scenario);
    let _ = writeln!(out, "{}", coupler_line(r.d3_present));
    let _ = writeln!(out, "forward probabilities:");
    push_rows(&mut out, &r.forward, |o| format!("Prob({o})"));
    if let (Some(name), Some(conditionals)) = (&r.intermediate, &r.conditionals) {
        let _ = writeln!(out, "two-time click conditionals:");
        push_rows(&mut out, conditionals, |o| format!("Prob({name} | {o})"));
    }
    out
}

fn human_conditional(r: &ConditionalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", r.scenario);
    let _ = writeln!(
        out,
        "{} distribution given final outcome {}:",
        r.intermediate, r.condition
    );
    push_rows(&mut out, &r.distribution, |o| {
        format!("Prob({o} | {})", r.condition)
    });
    out
}

fn human_table(r: &TableReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "reference probabilities ({} rows)", r.table.rows.len());
    let section_width = r
        .table
        .rows
        .iter()
        .map(|row| row.section.len())
        .max()
        .unwrap_or(0);
    let mut last_section = "";
    for row in &r.table.rows {
        if row.section != last_section {
            let _ = writeln!(out);
            last_section = &row.section;
        }
        let status = if row.matches { "ok  " } else { "FAIL" };
        let _ = writeln!(
            out,
            "{status}  {:<section_width$}  {} = {:.12}  expected {}",
            row.section, row.quantity, row.computed, row.expected
        );
        if let Some(note) = &row.fallacy {
            let _ = writeln!(
                out,
                "      FALLACY: mixes {} conditionals with {} marginals; \
                 the coupled circuit gives {:.12} directly",
                note.conditionals_from, note.marginals_from, note.direct
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "all rows match: {}",
        if r.all_match { "yes" } else { "NO" }
    );
    out
}

fn human_verify(r: &VerifyReport) -> String {
    let mut out = String::new();
    let e = &r.estimate;
    let _ = writeln!(out, "scenario: {}", e.scenario);
    let _ = writeln!(out, "{}", coupler_line(r.d3_present));
    let _ = writeln!(out, "shots: {}, seed: {}", e.shots, e.seed);
    let width = e.rows.iter().map(|row| row.quantity.len()).max().unwrap_or(0);
    for row in &e.rows {
        let _ = writeln!(
            out,
            "  {:<width$}  freq {:.12}  analytic {:.12}  z {:+.3}  ({} / {})",
            row.quantity, row.frequency, row.analytic, row.z, row.successes, row.trials
        );
    }
    if !e.joint_counts.is_empty() {
        let _ = writeln!(out, "joint counts:");
        for jc in &e.joint_counts {
            let _ = writeln!(
                out,
                "  {:<9} + {:<6} {}",
                jc.intermediate.label(),
                jc.final_outcome,
                jc.count
            );
        }
    }
    let _ = writeln!(out, "max |z| = {:.3} (limit {})", e.max_abs_z, Z_LIMIT);
    let _ = writeln!(out, "pass: {}", if e.pass { "yes" } else { "NO" });
    out
}

fn human_decompose(r: &MixtureDemo) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "total-probability mixture for {}", r.target);
    let _ = writeln!(out, "scenario: {}", r.variant.scenario_name());
    let conditionals = if r.published_conditional {
        "published claim for the first detector, computed elsewhere (coupler present)"
    } else {
        "computed with the coupler present"
    };
    let _ = writeln!(out, "conditionals: {conditionals}");
    let _ = writeln!(out, "marginals: coupler {}", r.marginal_source);
    let width = r.terms.iter().map(|t| t.outcome.len()).max().unwrap_or(0);
    for term in &r.terms {
        let _ = writeln!(
            out,
            "  {:<width$}  conditional {:.12}  x  marginal {:.12}  =  {:.12}",
            term.outcome, term.conditional, term.marginal, term.product
        );
    }
    let _ = writeln!(out, "mixture = {:.12}", r.mixture);
    let _ = writeln!(out, "direct  = {:.12}", r.direct);
    let _ = writeln!(
        out,
        "consistent: {}",
        if r.consistent { "yes" } else { "no" }
    );
    if r.fallacy {
        let _ = writeln!(
            out,
            "note: the ingredients describe different arrangements, so no agreement is owed"
        );
    }
    out
}
