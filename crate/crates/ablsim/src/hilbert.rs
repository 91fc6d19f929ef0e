//! Small dense linear algebra over a labeled finite-dimensional Hilbert space.
//!
//! Basis vectors are named (`"a"`, `"c⊗anc1"`, ...) rather than numbered, so
//! states and operators can be written and inspected in the same vocabulary
//! the optics layer uses for interferometer arms. Dimensions stay tiny (ten or
//! less in practice), so everything is a dense row-major matrix and no care is
//! taken to be clever, only to be exact about invariants and tolerances.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity, idempotence, unitarity, orthogonality and completeness checks.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Born-rule outputs must sum to 1 within this.
pub const PROB_SUM_TOL: f64 = 1e-10;
/// States with norm below this are rejected as zero.
pub const ZERO_NORM_TOL: f64 = 1e-12;
/// Non-normalizing constructors require the norm to be within this of 1.
pub const STATE_NORM_TOL: f64 = 1e-9;
/// Gram-Schmidt residuals with norm below this are dropped as dependent.
pub const SPAN_DROP_TOL: f64 = 1e-10;
/// Probabilities below this count as impossible (collapse targets, ABL denominators).
pub const IMPOSSIBLE_TOL: f64 = 1e-14;
/// Projector traces are compared to integers within this (rank, completeness of outcomes).
pub const RANK_TOL: f64 = 1e-10;

/// An ordered list of unique basis labels. Cloning is cheap; equality means
/// "same labels in the same order", which is what every cross-object check
/// in this crate relies on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    labels: Arc<[String]>,
}

impl Space {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Space {
            labels: labels.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Basis state |label⟩.
    pub fn basis_state(&self, label: &str) -> Result<StateVector> {
        let idx = self.index_of(label)?;
        let mut amps = vec![C64::from(0.0); self.dim()];
        amps[idx] = C64::from(1.0);
        Ok(StateVector {
            space: self.clone(),
            amps,
        })
    }

    /// Composite space with labels `"left⊗right"`, right factor varying fastest.
    pub fn tensor(&self, other: &Space) -> Space {
        let mut labels = Vec::with_capacity(self.dim() * other.dim());
        for l in self.labels.iter() {
            for r in other.labels.iter() {
                labels.push(format!("{l}⊗{r}"));
            }
        }
        Space {
            labels: labels.into(),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels.join(", "))
    }
}

/// A vector over a [`Space`]. Values built by [`StateVector::new`] are unit
/// vectors; operator application and projection return raw vectors whose
/// squared norm carries probability weight and which are deliberately NOT
/// renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: Space,
    amps: Vec<C64>,
}

impl StateVector {
    /// Builds a state from amplitudes in basis order. With `normalize` the
    /// amplitudes are rescaled to unit norm; without it the norm must already
    /// be within [`STATE_NORM_TOL`] of 1. A norm below [`ZERO_NORM_TOL`] is
    /// rejected either way.
    pub fn new(space: Space, amps: Vec<C64>, normalize: bool) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "amplitude list vs space",
                expected: space.dim(),
                got: amps.len(),
            });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let norm = norm_sqr.sqrt();
        if norm < ZERO_NORM_TOL {
            return Err(Error::ZeroState { norm_sqr });
        }
        let amps = if normalize {
            amps.into_iter().map(|a| a / norm).collect()
        } else {
            if (norm - 1.0).abs() > STATE_NORM_TOL {
                return Err(Error::NotNormalized { norm_sqr });
            }
            amps
        };
        Ok(StateVector { space, amps })
    }

    /// Builds a state from sparse `(label, amplitude)` pairs; unlisted labels
    /// get amplitude zero. Repeated labels accumulate.
    pub fn from_components(space: &Space, components: &[(&str, C64)], normalize: bool) -> Result<Self> {
        let mut amps = vec![C64::from(0.0); space.dim()];
        for (label, amp) in components {
            amps[space.index_of(label)?] += *amp;
        }
        StateVector::new(space.clone(), amps, normalize)
    }

    /// Raw constructor for internal results that may be unnormalized (but not
    /// dimension-mismatched).
    pub(crate) fn raw(space: Space, amps: Vec<C64>) -> Self {
        debug_assert_eq!(space.dim(), amps.len());
        StateVector { space, amps }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, label: &str) -> Result<C64> {
        Ok(self.amps[self.space.index_of(label)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("inner product"));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Rescales to unit norm.
    pub fn normalized(&self) -> Result<StateVector> {
        let norm = self.norm();
        if norm < ZERO_NORM_TOL {
            return Err(Error::ZeroState {
                norm_sqr: norm * norm,
            });
        }
        Ok(StateVector::raw(
            self.space.clone(),
            self.amps.iter().map(|a| a / norm).collect(),
        ))
    }

    /// The raw rescaling `factor·|self⟩`, deliberately NOT renormalized.
    pub fn scaled(&self, factor: C64) -> StateVector {
        StateVector::raw(
            self.space.clone(),
            self.amps.iter().map(|a| a * factor).collect(),
        )
    }

    /// |self⟩⊗|other⟩ on the composite space.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let space = self.space.tensor(&other.space);
        let mut amps = Vec::with_capacity(space.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector::raw(space, amps)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, amp) in self.space.labels().iter().zip(&self.amps) {
            if amp.norm() < 1e-15 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|{label}⟩", amp.re, amp.im)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Dense linear operator on a [`Space`], stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    mat: Vec<C64>,
}

impl Operator {
    pub fn identity(space: &Space) -> Operator {
        let d = space.dim();
        let mut mat = vec![C64::from(0.0); d * d];
        for i in 0..d {
            mat[i * d + i] = C64::from(1.0);
        }
        Operator {
            space: space.clone(),
            mat,
        }
    }

    pub fn zero(space: &Space) -> Operator {
        let d = space.dim();
        Operator {
            space: space.clone(),
            mat: vec![C64::from(0.0); d * d],
        }
    }

    /// Builds an operator entrywise from `f(row, col)`.
    pub fn from_fn(space: &Space, f: impl Fn(usize, usize) -> C64) -> Operator {
        let d = space.dim();
        let mut mat = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                mat.push(f(i, j));
            }
        }
        Operator {
            space: space.clone(),
            mat,
        }
    }

    pub fn from_rows(space: &Space, rows: Vec<Vec<C64>>) -> Result<Operator> {
        let d = space.dim();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                context: "rows vs space",
                expected: d,
                got: rows.iter().map(|r| r.len()).max().unwrap_or(rows.len()),
            });
        }
        Ok(Operator {
            space: space.clone(),
            mat: rows.into_iter().flatten().collect(),
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[row * self.dim() + col]
    }

    pub(crate) fn set_entry(&mut self, row: usize, col: usize, value: C64) {
        let d = self.dim();
        self.mat[row * d + col] = value;
    }

    /// Matrix-vector product. The result is NOT renormalized; callers that
    /// feed in unit vectors and unitary operators get unit vectors back.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.space != state.space {
            return Err(Error::SpaceMismatch("operator application"));
        }
        let d = self.dim();
        let out = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.mat[i * d + j] * state.amps[j])
                    .sum::<C64>()
            })
            .collect();
        Ok(StateVector::raw(self.space.clone(), out))
    }

    /// `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch("operator composition"));
        }
        let d = self.dim();
        let mut mat = vec![C64::from(0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.mat[i * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    mat[i * d + j] += a * rhs.mat[k * d + j];
                }
            }
        }
        Ok(Operator {
            space: self.space.clone(),
            mat,
        })
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim();
        Operator::from_fn(&self.space, |i, j| self.mat[j * d + i].conj())
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch("operator addition"));
        }
        Ok(Operator {
            space: self.space.clone(),
            mat: self
                .mat
                .iter()
                .zip(&rhs.mat)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch("operator subtraction"));
        }
        Ok(Operator {
            space: self.space.clone(),
            mat: self
                .mat
                .iter()
                .zip(&rhs.mat)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Kronecker product; row/column index `(i, j)` of the factors maps to
    /// `i * other.dim() + j`, matching [`Space::tensor`] label order.
    pub fn tensor(&self, other: &Operator) -> Operator {
        let space = self.space.tensor(&other.space);
        let (da, db) = (self.dim(), other.dim());
        Operator::from_fn(&space, |i, j| {
            let (ia, ib) = (i / db, i % db);
            let (ja, jb) = (j / db, j % db);
            self.mat[ia * da + ja] * other.mat[ib * db + jb]
        })
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.mat[i * d + i]).sum()
    }

    /// Largest entrywise magnitude of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> Result<f64> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch("operator comparison"));
        }
        Ok(self
            .mat
            .iter()
            .zip(&rhs.mat)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entrywise magnitude of U†U − I (0 for exact unitaries).
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().compose(self).expect("same space");
        gram.max_abs_diff(&Operator::identity(&self.space))
            .expect("same space")
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.adjoint().max_abs_diff(self).expect("same space")
    }

    /// Largest entrywise magnitude of A² − A (0 for exact idempotents).
    pub fn idempotence_defect(&self) -> f64 {
        let sq = self.compose(self).expect("same space");
        sq.max_abs_diff(self).expect("same space")
    }

    /// Errors with [`Error::NotUnitary`] unless U†U = I within [`STRUCTURAL_TOL`].
    pub fn require_unitary(&self) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(())
    }
}

/// Orthogonal projector, validated Hermitian and idempotent on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: Operator,
}

impl Projector {
    /// Wraps an operator after checking P = P† and P² = P within
    /// [`STRUCTURAL_TOL`].
    pub fn new(op: Operator) -> Result<Self> {
        if op.hermiticity_defect() > STRUCTURAL_TOL {
            return Err(Error::NotAProjector("hermiticity"));
        }
        if op.idempotence_defect() > STRUCTURAL_TOL {
            return Err(Error::NotAProjector("idempotence"));
        }
        Ok(Projector { op })
    }

    /// Projector onto the span of `vectors`: Σ|eᵢ⟩⟨eᵢ| over the Gram-Schmidt
    /// basis of the span. Dependent vectors are fine; they are dropped.
    pub fn from_vectors(vectors: &[StateVector]) -> Result<Self> {
        let basis = orthonormalize(vectors)?;
        let space = basis[0].space().clone();
        let mut op = Operator::zero(&space);
        let d = space.dim();
        for e in &basis {
            for i in 0..d {
                for j in 0..d {
                    let v = op.entry(i, j) + e.amps[i] * e.amps[j].conj();
                    op.set_entry(i, j, v);
                }
            }
        }
        Ok(Projector { op })
    }

    /// Rank-1 projector |label⟩⟨label|.
    pub fn onto_label(space: &Space, label: &str) -> Result<Self> {
        let idx = space.index_of(label)?;
        let mut op = Operator::zero(space);
        op.set_entry(idx, idx, C64::from(1.0));
        Ok(Projector { op })
    }

    /// Rank-1 projector |ψ⟩⟨ψ| for a unit vector ψ.
    pub fn onto_state(state: &StateVector) -> Result<Self> {
        Projector::from_vectors(std::slice::from_ref(state))
    }

    /// I − P, the projector onto the orthogonal complement.
    pub fn complement(&self) -> Projector {
        let id = Operator::identity(self.op.space());
        Projector {
            op: id.sub(&self.op).expect("same space"),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn space(&self) -> &Space {
        self.op.space()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.op.apply(state)
    }

    /// Subspace dimension, read off the trace (exact integer within [`RANK_TOL`]).
    pub fn rank(&self) -> usize {
        self.op.trace().re.round() as usize
    }

    pub fn is_rank_one(&self) -> bool {
        (self.op.trace().re - 1.0).abs() <= RANK_TOL
    }

    /// P ⊗ Q on the composite space.
    pub fn tensor(&self, other: &Projector) -> Projector {
        Projector {
            op: self.op.tensor(&other.op),
        }
    }
}

/// Modified Gram-Schmidt. Returns an orthonormal basis of the span, dropping
/// inputs whose residual norm falls below [`SPAN_DROP_TOL`]; an empty result
/// (all inputs dependent or zero) is [`Error::EmptySpan`].
pub fn orthonormalize(vectors: &[StateVector]) -> Result<Vec<StateVector>> {
    let space = match vectors.first() {
        Some(v) => v.space().clone(),
        None => return Err(Error::EmptySpan),
    };
    let mut basis: Vec<StateVector> = Vec::new();
    for v in vectors {
        if *v.space() != space {
            return Err(Error::SpaceMismatch("orthonormalize"));
        }
        let mut residual = v.clone();
        for e in &basis {
            let overlap = e.inner(&residual)?;
            for (r, b) in residual.amps.iter_mut().zip(&e.amps) {
                *r -= overlap * b;
            }
        }
        let norm = residual.norm();
        if norm < SPAN_DROP_TOL {
            continue;
        }
        basis.push(StateVector::raw(
            space.clone(),
            residual.amps.iter().map(|a| a / norm).collect(),
        ));
    }
    if basis.is_empty() {
        return Err(Error::EmptySpan);
    }
    Ok(basis)
}

/// A projective measurement: named orthogonal projectors that sum to the
/// identity. Outcomes keep their construction order.
#[derive(Clone, Debug)]
pub struct Measurement {
    name: String,
    outcomes: Vec<(String, Projector)>,
}

impl Measurement {
    /// Validates mutual orthogonality (‖PᵢPⱼ‖max ≤ [`STRUCTURAL_TOL`]) and
    /// completeness (‖ΣPᵢ − I‖max ≤ [`STRUCTURAL_TOL`]).
    pub fn new(name: impl Into<String>, outcomes: Vec<(String, Projector)>) -> Result<Self> {
        let name = name.into();
        if outcomes.is_empty() {
            return Err(Error::InvalidMeasurement(format!(
                "{name}: no outcomes"
            )));
        }
        let space = outcomes[0].1.space().clone();
        for (i, (label, proj)) in outcomes.iter().enumerate() {
            if *proj.space() != space {
                return Err(Error::InvalidMeasurement(format!(
                    "{name}: outcome {label:?} lives on a different space"
                )));
            }
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for i in 0..outcomes.len() {
            for j in (i + 1)..outcomes.len() {
                let prod = outcomes[i].1.op().compose(outcomes[j].1.op())?;
                let defect = prod.max_abs_diff(&Operator::zero(&space))?;
                if defect > STRUCTURAL_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "{name}: outcomes {:?} and {:?} overlap (orthogonality defect {defect:.3e})",
                        outcomes[i].0, outcomes[j].0
                    )));
                }
            }
        }
        let mut sum = Operator::zero(&space);
        for (_, proj) in &outcomes {
            sum = sum.add(proj.op())?;
        }
        let defect = sum.max_abs_diff(&Operator::identity(&space))?;
        if defect > STRUCTURAL_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "{name}: projectors do not resolve the identity (completeness defect {defect:.3e})"
            )));
        }
        Ok(Measurement { name, outcomes })
    }

    /// Two-outcome measurement {P, I − P}.
    pub fn binary(
        name: impl Into<String>,
        label: impl Into<String>,
        proj: Projector,
        complement_label: impl Into<String>,
    ) -> Result<Self> {
        let complement = proj.complement();
        Measurement::new(
            name,
            vec![
                (label.into(), proj),
                (complement_label.into(), complement),
            ],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Space {
        self.outcomes[0].1.space()
    }

    pub fn outcomes(&self) -> &[(String, Projector)] {
        &self.outcomes
    }

    pub fn projector(&self, outcome: &str) -> Result<&Projector> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == outcome)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::UnknownLabel(outcome.to_string()))
    }

    /// Complete means maximally fine: every outcome projector is rank 1
    /// (trace within [`RANK_TOL`] of 1). Coarser measurements are valid but
    /// reveal only a subspace.
    pub fn is_complete(&self) -> bool {
        self.outcomes
            .iter()
            .all(|(_, p)| (p.op().trace().re - 1.0).abs() <= RANK_TOL)
    }
}

/// Born rule: probability ‖Pᵢ|ψ⟩‖² per outcome, in outcome order. The state
/// must be normalized; the probabilities are checked to sum to 1 within
/// [`PROB_SUM_TOL`].
pub fn born_probabilities(state: &StateVector, meas: &Measurement) -> Result<Vec<(String, f64)>> {
    if state.space() != meas.space() {
        return Err(Error::SpaceMismatch("Born rule"));
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::NotNormalized {
            norm_sqr: norm * norm,
        });
    }
    let mut probs = Vec::with_capacity(meas.outcomes.len());
    let mut total = 0.0;
    for (label, proj) in &meas.outcomes {
        let p = proj.apply(state)?.norm_sqr();
        total += p;
        probs.push((label.clone(), p));
    }
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidMeasurement(format!(
            "{}: probabilities sum to {total}, not 1",
            meas.name
        )));
    }
    Ok(probs)
}

/// Projects and renormalizes: returns (‖P|ψ⟩‖², P|ψ⟩ / ‖P|ψ⟩‖). An outcome
/// with probability below [`IMPOSSIBLE_TOL`] cannot be collapsed onto.
pub fn collapse(state: &StateVector, proj: &Projector) -> Result<(f64, StateVector)> {
    if state.space() != proj.space() {
        return Err(Error::SpaceMismatch("collapse"));
    }
    let projected = proj.apply(state)?;
    let p = projected.norm_sqr();
    if p < IMPOSSIBLE_TOL {
        return Err(Error::ImpossibleOutcome {
            outcome: "projection".to_string(),
            probability: p,
        });
    }
    let scale = p.sqrt();
    Ok((
        p,
        StateVector::raw(
            projected.space.clone(),
            projected.amps.iter().map(|a| a / scale).collect(),
        ),
    ))
}

/// Serializable `(outcome, probability)` row used across reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProb {
    pub outcome: String,
    pub probability: f64,
}

impl OutcomeProb {
    pub fn rows(pairs: &[(String, f64)]) -> Vec<OutcomeProb> {
        pairs
            .iter()
            .map(|(outcome, probability)| OutcomeProb {
                outcome: outcome.clone(),
                probability: *probability,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn modes() -> Space {
        Space::new(["a", "c", "d"]).unwrap()
    }

    #[test]
    fn space_rejects_duplicates_and_empty() {
        assert_eq!(
            Space::new(["a", "a"]).unwrap_err(),
            Error::DuplicateLabel("a".into())
        );
        assert_eq!(Space::new(Vec::<String>::new()).unwrap_err(), Error::EmptySpace);
    }

    #[test]
    fn make_state_normalizes_when_asked() {
        let s = modes();
        let v = StateVector::new(
            s.clone(),
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            true,
        )
        .unwrap();
        assert!(close(v.amp("a").unwrap().re, 1.0 / 2f64.sqrt(), 1e-15));
        assert!(close(v.norm_sqr(), 1.0, 1e-15));
    }

    #[test]
    fn make_state_rejects_unnormalized_without_flag() {
        let s = modes();
        let err = StateVector::new(
            s,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn make_state_rejects_zero() {
        let s = modes();
        let err = StateVector::new(
            s,
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            true,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroState { .. }));
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_the_left_slot() {
        let s = Space::new(["0", "1"]).unwrap();
        let v = StateVector::new(s.clone(), vec![c(0.0, 1.0), c(0.0, 0.0)], false).unwrap();
        let w = s.basis_state("0").unwrap();
        assert_eq!(v.inner(&w).unwrap(), c(0.0, -1.0));
        assert_eq!(w.inner(&v).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn unknown_label_is_reported() {
        let s = modes();
        assert_eq!(
            s.index_of("q").unwrap_err(),
            Error::UnknownLabel("q".into())
        );
    }

    /// (1/√2)|a⟩ + (1/2)|c⟩ + (1/2)|d⟩, the inner-interferometer state the
    /// optics tests revisit.
    fn psi_acd() -> StateVector {
        let s = modes();
        StateVector::from_components(
            &s,
            &[
                ("a", c(1.0 / 2f64.sqrt(), 0.0)),
                ("c", c(0.5, 0.0)),
                ("d", c(0.5, 0.0)),
            ],
            false,
        )
        .unwrap()
    }

    #[test]
    fn projection_keeps_the_watched_component() {
        let p_c = Projector::onto_label(&modes(), "c").unwrap();
        let out = p_c.apply(&psi_acd()).unwrap();
        assert_eq!(out.amp("a").unwrap(), c(0.0, 0.0));
        assert!(close(out.amp("c").unwrap().re, 0.5, 1e-15));
        assert_eq!(out.amp("d").unwrap(), c(0.0, 0.0));
        assert!(close(out.norm_sqr(), 0.25, 1e-15));
    }

    #[test]
    fn identity_application_is_a_no_op() {
        let v = psi_acd();
        let out = Operator::identity(v.space()).apply(&v).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn apply_rejects_foreign_spaces() {
        let other = Space::new(["x", "y"]).unwrap();
        let v = other.basis_state("x").unwrap();
        let id = Operator::identity(&modes());
        assert_eq!(
            id.apply(&v).unwrap_err(),
            Error::SpaceMismatch("operator application")
        );
    }

    #[test]
    fn projector_from_vectors_spans_and_is_idempotent() {
        let s = modes();
        let plus = StateVector::from_components(
            &s,
            &[("a", c(1.0, 0.0)), ("c", c(1.0, 0.0))],
            true,
        )
        .unwrap();
        let p = Projector::from_vectors(&[s.basis_state("a").unwrap(), plus.clone()]).unwrap();
        assert_eq!(p.rank(), 2);
        assert!(p.op().hermiticity_defect() <= STRUCTURAL_TOL);
        assert!(p.op().idempotence_defect() <= STRUCTURAL_TOL);
        // span{|a⟩, |a⟩+|c⟩} = span{|a⟩, |c⟩}: both project to themselves
        let back = p.apply(&plus).unwrap();
        assert!(close(back.inner(&plus).unwrap().re, 1.0, 1e-12));
        assert!(close(p.apply(&s.basis_state("d").unwrap()).unwrap().norm_sqr(), 0.0, 1e-24));
    }

    #[test]
    fn projector_from_vectors_drops_dependent_inputs() {
        let s = modes();
        let a = s.basis_state("a").unwrap();
        let also_a = StateVector::new(
            s.clone(),
            vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)],
            false,
        )
        .unwrap();
        // same ray twice: rank stays 1
        let p = Projector::from_vectors(&[a.clone(), also_a]).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.is_rank_one());
    }

    #[test]
    fn projector_from_vectors_rejects_empty_span() {
        assert_eq!(
            Projector::from_vectors(&[]).unwrap_err(),
            Error::EmptySpan
        );
    }

    #[test]
    fn orthonormalize_produces_an_orthonormal_basis() {
        let s = modes();
        let v1 = StateVector::from_components(&s, &[("a", c(1.0, 0.0)), ("c", c(1.0, 0.0))], true)
            .unwrap();
        let v2 = StateVector::from_components(&s, &[("a", c(1.0, 0.0)), ("d", c(2.0, 0.0))], true)
            .unwrap();
        let basis = orthonormalize(&[v1, v2]).unwrap();
        assert_eq!(basis.len(), 2);
        for (i, e) in basis.iter().enumerate() {
            assert!(close(e.norm_sqr(), 1.0, 1e-13));
            for f in &basis[..i] {
                assert!(f.inner(e).unwrap().norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_projector_from_state_matches_label_projector() {
        let s = modes();
        let p1 = Projector::onto_state(&s.basis_state("c").unwrap()).unwrap();
        let p2 = Projector::onto_label(&s, "c").unwrap();
        assert!(p1.op().max_abs_diff(p2.op()).unwrap() <= 1e-15);
    }

    #[test]
    fn measurement_requires_orthogonality() {
        let s = modes();
        let p_a = Projector::onto_label(&s, "a").unwrap();
        let overlap = Projector::from_vectors(&[StateVector::from_components(
            &s,
            &[("a", c(1.0, 0.0)), ("c", c(1.0, 0.0))],
            true,
        )
        .unwrap()])
        .unwrap();
        let err = Measurement::new("bad", vec![("x".into(), p_a), ("y".into(), overlap)]).unwrap_err();
        assert!(matches!(err, Error::InvalidMeasurement(_)));
    }

    #[test]
    fn measurement_requires_completeness() {
        let s = modes();
        let p_a = Projector::onto_label(&s, "a").unwrap();
        let p_c = Projector::onto_label(&s, "c").unwrap();
        let err = Measurement::new("bad", vec![("a".into(), p_a), ("c".into(), p_c)]).unwrap_err();
        assert!(matches!(err, Error::InvalidMeasurement(_)));
    }

    #[test]
    fn completeness_predicate_means_all_rank_one() {
        let s = modes();
        let p_a = Projector::onto_label(&s, "a").unwrap();
        let fine = Measurement::new(
            "fine",
            vec![
                ("a".into(), p_a.clone()),
                ("c".into(), Projector::onto_label(&s, "c").unwrap()),
                ("d".into(), Projector::onto_label(&s, "d").unwrap()),
            ],
        )
        .unwrap();
        assert!(fine.is_complete());
        let coarse = Measurement::binary("coarse", "a", p_a, "rest").unwrap();
        assert!(!coarse.is_complete());
    }

    #[test]
    fn born_probabilities_on_a_basis_state() {
        let s = modes();
        let meas = Measurement::binary(
            "watch-c",
            "c",
            Projector::onto_label(&s, "c").unwrap(),
            "not-c",
        )
        .unwrap();
        let probs = born_probabilities(&s.basis_state("c").unwrap(), &meas).unwrap();
        assert_eq!(probs[0].0, "c");
        assert!(close(probs[0].1, 1.0, 1e-15));
        assert!(close(probs[1].1, 0.0, 1e-15));
    }

    #[test]
    fn born_probabilities_split_the_inner_state_one_quarter_three_quarters() {
        let s = modes();
        let meas = Measurement::binary(
            "watch-c",
            "c",
            Projector::onto_label(&s, "c").unwrap(),
            "not-c",
        )
        .unwrap();
        let probs = born_probabilities(&psi_acd(), &meas).unwrap();
        assert!(close(probs[0].1, 0.25, 1e-12));
        assert!(close(probs[1].1, 0.75, 1e-12));
        let total: f64 = probs.iter().map(|(_, p)| p).sum();
        assert!(close(total, 1.0, PROB_SUM_TOL));
    }

    #[test]
    fn born_probabilities_reject_unnormalized_states() {
        let s = modes();
        let meas = Measurement::binary(
            "watch-c",
            "c",
            Projector::onto_label(&s, "c").unwrap(),
            "not-c",
        )
        .unwrap();
        let unnorm = StateVector::raw(s, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            born_probabilities(&unnorm, &meas).unwrap_err(),
            Error::NotNormalized { .. }
        ));
    }

    #[test]
    fn collapse_onto_certain_outcome_returns_the_state() {
        let s = modes();
        let a = s.basis_state("a").unwrap();
        let (p, post) = collapse(&a, &Projector::onto_label(&s, "a").unwrap()).unwrap();
        assert!(close(p, 1.0, 1e-15));
        assert_eq!(post, a);
    }

    #[test]
    fn collapse_renormalizes_the_projected_branch() {
        let s = modes();
        let (p, post) = collapse(&psi_acd(), &Projector::onto_label(&s, "c").unwrap()).unwrap();
        assert!(close(p, 0.25, 1e-15));
        assert!(close(post.amp("c").unwrap().re, 1.0, 1e-15));
        assert!(close(post.norm_sqr(), 1.0, 1e-15));
    }

    #[test]
    fn collapse_onto_impossible_outcome_fails() {
        let s = modes();
        let a = s.basis_state("a").unwrap();
        let err = collapse(&a, &Projector::onto_label(&s, "d").unwrap()).unwrap_err();
        assert!(matches!(err, Error::ImpossibleOutcome { .. }));
    }

    #[test]
    fn tensor_ordering_puts_the_right_factor_fastest() {
        let left = Space::new(["p", "q"]).unwrap();
        let right = Space::new(["0", "1"]).unwrap();
        let prod = left.tensor(&right);
        assert_eq!(prod.labels(), ["p⊗0", "p⊗1", "q⊗0", "q⊗1"]);
        let v = left
            .basis_state("q")
            .unwrap()
            .tensor(&right.basis_state("1").unwrap());
        assert_eq!(v.amp("q⊗1").unwrap(), c(1.0, 0.0));
        assert!(close(v.norm_sqr(), 1.0, 1e-15));
    }

    #[test]
    fn operator_tensor_matches_state_tensor() {
        let left = Space::new(["p", "q"]).unwrap();
        let right = Space::new(["0", "1"]).unwrap();
        // X on the left factor, identity on the right
        let x = Operator::from_rows(
            &left,
            vec![
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ],
        )
        .unwrap();
        let lifted = x.tensor(&Operator::identity(&right));
        let v = left
            .basis_state("p")
            .unwrap()
            .tensor(&right.basis_state("1").unwrap());
        let out = lifted.apply(&v).unwrap();
        assert_eq!(out.amp("q⊗1").unwrap(), c(1.0, 0.0));
        assert_eq!(out.amp("p⊗1").unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn unitarity_defect_flags_non_unitaries() {
        let s = Space::new(["0", "1"]).unwrap();
        let mut op = Operator::identity(&s);
        op.set_entry(0, 0, c(2.0, 0.0));
        assert!(op.unitarity_defect() > 1.0);
        assert!(matches!(op.require_unitary(), Err(Error::NotUnitary(_))));
        assert!(Operator::identity(&s).unitarity_defect() <= 1e-15);
    }
}
