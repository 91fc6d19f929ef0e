//! Trajectory sampling for a [`Scenario`]: draw the which-way click by the
//! Born rule at the coupler, collapse, run the rest of the circuit, draw the
//! final detector, and compare the resulting frequencies against the closed
//! forms.
//!
//! Sampling is reproducible by construction: trajectory `t` of a run with
//! seed `s` uses stream `t` of a counter-based generator seeded with `s`, so
//! the sample depends only on `(seed, shots)` and never on how the
//! trajectories are partitioned among workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{born_probabilities, collapse, Operator, IMPOSSIBLE_TOL};
use crate::scenario::{Scenario, CLICK};

/// Frequencies must sit within this many analytic standard errors.
pub const Z_LIMIT: f64 = 4.0;

/// Outcome of the which-way record in one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClickOutcome {
    Click,
    NoClick,
}

impl ClickOutcome {
    pub fn label(self) -> &'static str {
        match self {
            ClickOutcome::Click => "click",
            ClickOutcome::NoClick => "no-click",
        }
    }
}

/// One sampled history: the which-way record (absent when the circuit has no
/// coupler) and the final detector outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub intermediate: Option<ClickOutcome>,
    pub final_outcome: String,
}

struct Branch {
    intermediate: Option<ClickOutcome>,
    prob: f64,
    /// Conditional final-outcome distribution given this branch; `None` when
    /// the branch itself is unreachable.
    finals: Option<Vec<f64>>,
}

/// A compiled scenario ready for repeated sampling. The state entering the
/// coupler is the same in every shot, so the branch probabilities and the
/// per-branch final distributions are computed once up front; each trajectory
/// then consumes one uniform draw per measurement, exactly as the step-by-step
/// projective dynamics would.
pub struct Sampler {
    branches: Vec<Branch>,
    final_labels: Vec<String>,
}

impl Sampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let final_meas = scenario.final_measurement();
        let final_labels: Vec<String> = final_meas
            .outcomes()
            .iter()
            .map(|(l, _)| l.clone())
            .collect();
        let unitaries = scenario.circuit().unitaries();
        let branches = match (scenario.circuit().coupler_index(), scenario.intermediate_measurement()) {
            (Some(k), Some(intermediate)) => {
                let mut mid = scenario.initial().clone();
                for u in &unitaries[..=k] {
                    mid = u.apply(&mid)?;
                }
                let mut suffix = Operator::identity(mid.space());
                for u in &unitaries[k + 1..] {
                    suffix = u.compose(&suffix)?;
                }
                born_probabilities(&mid, intermediate)?
                    .into_iter()
                    .map(|(label, prob)| {
                        let outcome = if label == CLICK {
                            ClickOutcome::Click
                        } else {
                            ClickOutcome::NoClick
                        };
                        let finals = if prob < IMPOSSIBLE_TOL {
                            None
                        } else {
                            let (_, collapsed) =
                                collapse(&mid, intermediate.projector(&label)?)?;
                            let after = suffix.apply(&collapsed)?;
                            Some(
                                born_probabilities(&after, final_meas)?
                                    .into_iter()
                                    .map(|(_, p)| p)
                                    .collect(),
                            )
                        };
                        Ok(Branch {
                            intermediate: Some(outcome),
                            prob,
                            finals,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            _ => {
                let final_state = scenario.run()?;
                vec![Branch {
                    intermediate: None,
                    prob: 1.0,
                    finals: Some(
                        born_probabilities(&final_state, final_meas)?
                            .into_iter()
                            .map(|(_, p)| p)
                            .collect(),
                    ),
                }]
            }
        };
        Ok(Sampler {
            branches,
            final_labels,
        })
    }

    pub fn final_labels(&self) -> &[String] {
        &self.final_labels
    }

    /// Draws one trajectory: one uniform per measurement, intermediate first.
    pub fn sample(&self, rng: &mut impl Rng) -> Trajectory {
        let branch = if self.branches.len() == 1 {
            &self.branches[0]
        } else {
            let u: f64 = rng.gen();
            pick(self.branches.iter().map(|b| b.prob), u, |i| {
                self.branches[i].finals.is_some()
            })
            .map(|i| &self.branches[i])
            .expect("branch probabilities sum to 1")
        };
        let finals = branch
            .finals
            .as_ref()
            .expect("unreachable branches are never selected");
        let u: f64 = rng.gen();
        let idx = pick(finals.iter().copied(), u, |_| true)
            .expect("final probabilities sum to 1");
        Trajectory {
            intermediate: branch.intermediate,
            final_outcome: self.final_labels[idx].clone(),
        }
    }
}

/// First index whose cumulative probability exceeds `u`, skipping entries
/// below [`IMPOSSIBLE_TOL`] or rejected by `valid`; falls back to the last
/// acceptable entry when `u` lands in accumulated rounding dust.
fn pick(
    probs: impl Iterator<Item = f64>,
    u: f64,
    valid: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut cum = 0.0;
    let mut last_valid = None;
    for (i, p) in probs.enumerate() {
        if p < IMPOSSIBLE_TOL || !valid(i) {
            continue;
        }
        cum += p;
        last_valid = Some(i);
        if u < cum {
            return Some(i);
        }
    }
    last_valid
}

/// Samples a single trajectory of `scenario` with the caller's generator.
pub fn sample_trajectory(scenario: &Scenario, rng: &mut impl Rng) -> Result<Trajectory> {
    Ok(Sampler::new(scenario)?.sample(rng))
}

/// One estimated quantity with its analytic reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    /// `Prob(D1)` for marginals, `Prob(D3|D1)` for conditionals.
    pub quantity: String,
    pub successes: u64,
    pub trials: u64,
    pub frequency: f64,
    pub analytic: f64,
    /// Empirical standard error √(f(1−f)/n); 0 when there were no trials.
    pub std_error: f64,
    /// (f − p)/√(p(1−p)/n) against the analytic p; 0 when the null standard
    /// error vanishes (p ∈ {0, 1} forces f = p) or there were no trials.
    pub z: f64,
}

/// Joint tally of (which-way record, final outcome) over a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCount {
    pub intermediate: ClickOutcome,
    pub final_outcome: String,
    pub count: u64,
}

/// Full sampling report: every final-outcome marginal (plus the click
/// marginal and per-detector click conditionals when a coupler is present)
/// with z-scores against the closed forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub scenario: String,
    pub shots: u64,
    pub seed: u64,
    pub rows: Vec<EstimateRow>,
    /// Present only for coupled circuits; covers every final outcome,
    /// including never-hit ones, so the counts add up exactly.
    pub joint_counts: Vec<JointCount>,
    pub max_abs_z: f64,
    /// True iff every |z| ≤ [`Z_LIMIT`].
    pub pass: bool,
}

#[derive(Clone)]
struct Counts {
    final_counts: Vec<u64>,
    click_and_final: Vec<u64>,
    clicks: u64,
}

impl Counts {
    fn new(n: usize) -> Self {
        Counts {
            final_counts: vec![0; n],
            click_and_final: vec![0; n],
            clicks: 0,
        }
    }

    fn record(&mut self, idx: usize, clicked: Option<ClickOutcome>) {
        self.final_counts[idx] += 1;
        if clicked == Some(ClickOutcome::Click) {
            self.click_and_final[idx] += 1;
            self.clicks += 1;
        }
    }

    fn merge(&mut self, other: &Counts) {
        for (a, b) in self.final_counts.iter_mut().zip(&other.final_counts) {
            *a += b;
        }
        for (a, b) in self.click_and_final.iter_mut().zip(&other.click_and_final) {
            *a += b;
        }
        self.clicks += other.clicks;
    }
}

fn run_chunk(sampler: &Sampler, template: &ChaCha8Rng, range: std::ops::Range<u64>) -> Counts {
    let mut counts = Counts::new(sampler.final_labels.len());
    let mut label_index = std::collections::HashMap::new();
    for (i, l) in sampler.final_labels.iter().enumerate() {
        label_index.insert(l.as_str(), i);
    }
    for t in range {
        let mut rng = template.clone();
        rng.set_stream(t);
        let trajectory = sampler.sample(&mut rng);
        let idx = label_index[trajectory.final_outcome.as_str()];
        counts.record(idx, trajectory.intermediate);
    }
    counts
}

fn z_score(successes: u64, trials: u64, analytic: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let f = successes as f64 / trials as f64;
    let null_var = analytic * (1.0 - analytic) / trials as f64;
    if null_var <= 0.0 {
        return 0.0;
    }
    (f - analytic) / null_var.sqrt()
}

fn estimate_row(quantity: String, successes: u64, trials: u64, analytic: f64) -> EstimateRow {
    let frequency = if trials == 0 {
        0.0
    } else {
        successes as f64 / trials as f64
    };
    let std_error = if trials == 0 {
        0.0
    } else {
        (frequency * (1.0 - frequency) / trials as f64).sqrt()
    };
    EstimateRow {
        quantity,
        successes,
        trials,
        frequency,
        analytic,
        std_error,
        z: z_score(successes, trials, analytic),
    }
}

/// Samples `shots` trajectories (split across `workers` threads) and compares
/// every reported frequency against its closed form. The report is a pure
/// function of `(scenario, shots, seed)`.
pub fn estimate(scenario: &Scenario, shots: u64, seed: u64, workers: usize) -> Result<EstimateReport> {
    if shots == 0 {
        return Err(Error::EmptySample);
    }
    let sampler = Sampler::new(scenario)?;
    let analytic_forward = scenario.forward_probabilities()?;
    let analytic_conditionals = if scenario.d3_present() {
        scenario.abl_conditionals()?
    } else {
        Vec::new()
    };
    let template = ChaCha8Rng::seed_from_u64(seed);

    let workers = workers.max(1).min(shots.max(1) as usize);
    let mut totals = Counts::new(sampler.final_labels.len());
    if workers == 1 {
        totals = run_chunk(&sampler, &template, 0..shots);
    } else {
        let chunk = shots.div_ceil(workers as u64);
        let results = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers as u64 {
                let start = w * chunk;
                let end = (start + chunk).min(shots);
                let sampler = &sampler;
                let template = &template;
                handles.push(scope.spawn(move || run_chunk(sampler, template, start..end)));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler threads do not panic"))
                .collect::<Vec<_>>()
        });
        for counts in &results {
            totals.merge(counts);
        }
    }

    let label_index = |label: &str| {
        sampler
            .final_labels
            .iter()
            .position(|l| l == label)
    };
    let mut rows = Vec::new();
    for (label, analytic) in &analytic_forward {
        let successes = match label_index(label) {
            Some(idx) => totals.final_counts[idx],
            // the click marginal is not a final outcome
            None => totals.clicks,
        };
        rows.push(estimate_row(
            format!("Prob({label})"),
            successes,
            shots,
            *analytic,
        ));
    }
    let target = scenario.intermediate_name();
    for (detector, analytic) in &analytic_conditionals {
        let idx = label_index(detector).expect("conditionals are per detector");
        rows.push(estimate_row(
            format!("Prob({target}|{detector})"),
            totals.click_and_final[idx],
            totals.final_counts[idx],
            *analytic,
        ));
    }
    let joint_counts = if scenario.d3_present() {
        sampler
            .final_labels
            .iter()
            .enumerate()
            .flat_map(|(idx, label)| {
                [
                    JointCount {
                        intermediate: ClickOutcome::Click,
                        final_outcome: label.clone(),
                        count: totals.click_and_final[idx],
                    },
                    JointCount {
                        intermediate: ClickOutcome::NoClick,
                        final_outcome: label.clone(),
                        count: totals.final_counts[idx] - totals.click_and_final[idx],
                    },
                ]
            })
            .collect()
    } else {
        Vec::new()
    };
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(EstimateReport {
        scenario: scenario.name().to_string(),
        shots,
        seed,
        rows,
        joint_counts,
        max_abs_z,
        pass: max_abs_z <= Z_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{build_scenario, D1Variant};

    #[test]
    fn reports_are_reproducible_for_a_fixed_seed() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let a = estimate(&s, 20_000, 7, 1).unwrap();
        let b = estimate(&s, 20_000, 7, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let s = build_scenario(true, D1Variant::PlusMinus).unwrap();
        let single = estimate(&s, 10_000, 42, 1).unwrap();
        let multi = estimate(&s, 10_000, 42, 4).unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn different_seeds_draw_different_samples() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let a = estimate(&s, 1_000, 1, 1).unwrap();
        let b = estimate(&s, 1_000, 2, 1).unwrap();
        assert_ne!(a.joint_counts, b.joint_counts);
    }

    #[test]
    fn uncoupled_trajectories_have_no_intermediate_outcome() {
        use rand::SeedableRng;
        let s = build_scenario(false, D1Variant::Subspace).unwrap();
        let sampler = Sampler::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = sampler.sample(&mut rng);
            assert_eq!(t.intermediate, None);
            assert!(["D1", "D2", "none"].contains(&t.final_outcome.as_str()));
        }
    }

    #[test]
    fn frequencies_track_the_closed_forms() {
        for variant in [D1Variant::Subspace, D1Variant::PlusMinus] {
            let s = build_scenario(true, variant).unwrap();
            let report = estimate(&s, 200_000, 2024, 4).unwrap();
            assert!(
                report.pass,
                "max |z| = {} for {variant:?}",
                report.max_abs_z
            );
            let expected_rows = match variant {
                D1Variant::Subspace => 5,  // D1, D2, D3 marginals + two conditionals
                D1Variant::PlusMinus => 7, // four marginals + three conditionals
            };
            assert_eq!(report.rows.len(), expected_rows);
        }
    }

    #[test]
    fn joint_counts_tie_marginals_and_conditionals_together() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let report = estimate(&s, 50_000, 5, 2).unwrap();
        let clicks_by_joint: u64 = report
            .joint_counts
            .iter()
            .filter(|j| j.intermediate == ClickOutcome::Click)
            .map(|j| j.count)
            .sum();
        let click_row = report
            .rows
            .iter()
            .find(|r| r.quantity == "Prob(D3)")
            .unwrap();
        assert_eq!(click_row.successes, clicks_by_joint);
        assert_eq!(click_row.trials, 50_000);
        let d1_row = report.rows.iter().find(|r| r.quantity == "Prob(D1)").unwrap();
        let d1_cond = report
            .rows
            .iter()
            .find(|r| r.quantity == "Prob(D3|D1)")
            .unwrap();
        assert_eq!(d1_cond.trials, d1_row.successes);
        let d1_click_joint = report
            .joint_counts
            .iter()
            .find(|j| j.intermediate == ClickOutcome::Click && j.final_outcome == "D1")
            .unwrap();
        assert_eq!(d1_cond.successes, d1_click_joint.count);
        let total: u64 = report
            .joint_counts
            .iter()
            .map(|j| j.count)
            .sum();
        assert_eq!(total, 50_000);
    }

    #[test]
    fn a_single_shot_yields_a_well_formed_report() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let report = estimate(&s, 1, 11, 1).unwrap();
        for row in &report.rows {
            assert!(row.frequency == 0.0 || row.frequency == 1.0);
            assert!(row.z.is_finite());
            assert!(row.std_error == 0.0);
        }
    }

    #[test]
    fn zero_shots_are_rejected() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        assert_eq!(estimate(&s, 0, 1, 1).unwrap_err(), Error::EmptySample);
    }
}
