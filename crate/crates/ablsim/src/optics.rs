//! Interferometer building blocks: spatial modes, 50/50 beam splitters, a
//! nondemolition which-way coupler, and detectors that watch one or more
//! output modes.
//!
//! The particle space is spanned by named arm modes. When a which-way coupler
//! is present the full space is particle ⊗ ancilla, where the two-level
//! ancilla starts in its no-click state and flips exactly when the particle
//! passes the watched mode. All element unitaries act on the full space.

use crate::error::{Error, Result};
use crate::hilbert::{Operator, Projector, Space, StateVector, C64};

/// Mode bookkeeping for one interferometer: the particle arm labels plus an
/// optional two-level which-way ancilla.
#[derive(Clone, Debug)]
pub struct ModeRegistry {
    particle: Space,
    ancilla: Option<Space>,
    full: Space,
}

impl ModeRegistry {
    /// Registry without a which-way ancilla: full space = particle space.
    pub fn new<I, S>(modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let particle = Space::new(modes)?;
        Ok(ModeRegistry {
            full: particle.clone(),
            particle,
            ancilla: None,
        })
    }

    /// Registry with a two-level ancilla labeled `(no_click, click)`, in that
    /// order, so the ancilla ground state is the first basis vector.
    pub fn with_ancilla<I, S>(modes: I, no_click: &str, click: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let particle = Space::new(modes)?;
        let ancilla = Space::new([no_click, click])?;
        let full = particle.tensor(&ancilla);
        Ok(ModeRegistry {
            particle,
            ancilla: Some(ancilla),
            full,
        })
    }

    pub fn particle_space(&self) -> &Space {
        &self.particle
    }

    /// The space circuit unitaries act on: particle ⊗ ancilla when an ancilla
    /// exists, otherwise the particle space itself.
    pub fn space(&self) -> &Space {
        &self.full
    }

    pub fn ancilla_space(&self) -> Option<&Space> {
        self.ancilla.as_ref()
    }

    pub fn has_ancilla(&self) -> bool {
        self.ancilla.is_some()
    }

    /// Lifts a particle-space operator to the full space (⊗ identity).
    pub fn lift_operator(&self, op: &Operator) -> Result<Operator> {
        if op.space() != &self.particle {
            return Err(Error::SpaceMismatch("lift expects a particle-space operator"));
        }
        Ok(match &self.ancilla {
            Some(anc) => op.tensor(&Operator::identity(anc)),
            None => op.clone(),
        })
    }

    /// Lifts a particle-space projector to the full space (⊗ identity).
    pub fn lift_projector(&self, proj: &Projector) -> Result<Projector> {
        if proj.space() != &self.particle {
            return Err(Error::SpaceMismatch("lift expects a particle-space projector"));
        }
        Ok(match &self.ancilla {
            Some(anc) => {
                let id = Projector::new(Operator::identity(anc))?;
                proj.tensor(&id)
            }
            None => proj.clone(),
        })
    }

    /// Embeds a particle state into the full space, the ancilla starting in
    /// its no-click state.
    pub fn embed_state(&self, particle: &StateVector) -> Result<StateVector> {
        if particle.space() != &self.particle {
            return Err(Error::SpaceMismatch("embed expects a particle-space state"));
        }
        Ok(match &self.ancilla {
            Some(anc) => {
                let ground = anc.basis_state(anc.label(0))?;
                particle.tensor(&ground)
            }
            None => particle.clone(),
        })
    }
}

/// A 50/50 beam splitter sending `in1 → (out1 + out2)/√2` and
/// `in2 → (out1 − out2)/√2`. The output pair must either reuse the input
/// pair (in-place mixing, possibly swapped) or be disjoint from it; when
/// disjoint the reverse amplitudes are filled in so the element stays unitary
/// and self-inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeamSplitter {
    pub in1: String,
    pub in2: String,
    pub out1: String,
    pub out2: String,
}

/// One element in an interferometer, applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitElement {
    BeamSplitter(BeamSplitter),
    /// Flips the ancilla iff the particle occupies `mode`.
    WhichWayCoupler { mode: String },
}

/// Full-space unitary of a beam splitter.
pub fn beam_splitter_unitary(registry: &ModeRegistry, bs: &BeamSplitter) -> Result<Operator> {
    let particle = beam_splitter_particle(registry, bs)?;
    registry.lift_operator(&particle)
}

/// Particle-space unitary of a beam splitter (no ancilla factor).
pub fn beam_splitter_particle(registry: &ModeRegistry, bs: &BeamSplitter) -> Result<Operator> {
    let space = registry.particle_space();
    let i1 = space.index_of(&bs.in1)?;
    let i2 = space.index_of(&bs.in2)?;
    let o1 = space.index_of(&bs.out1)?;
    let o2 = space.index_of(&bs.out2)?;
    if i1 == i2 {
        return Err(Error::InvalidElement(format!(
            "beam splitter input modes must differ (got {:?} twice)",
            bs.in1
        )));
    }
    if o1 == o2 {
        return Err(Error::InvalidElement(format!(
            "beam splitter output modes must differ (got {:?} twice)",
            bs.out1
        )));
    }
    let ins = [i1, i2];
    let outs = [o1, o2];
    let shared = outs.iter().filter(|o| ins.contains(o)).count();
    let disjoint = match shared {
        0 => true,
        2 => false,
        _ => {
            return Err(Error::InvalidElement(format!(
                "beam splitter outputs ({:?}, {:?}) must reuse both input modes or neither",
                bs.out1, bs.out2
            )))
        }
    };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut op = Operator::identity(space);
    for col in [i1, i2, o1, o2] {
        for row in 0..space.dim() {
            op.set_entry(row, col, C64::from(0.0));
        }
    }
    // column = image of the basis vector entering that port
    op.set_entry(o1, i1, C64::from(r));
    op.set_entry(o2, i1, C64::from(r));
    op.set_entry(o1, i2, C64::from(r));
    op.set_entry(o2, i2, C64::from(-r));
    if disjoint {
        op.set_entry(i1, o1, C64::from(r));
        op.set_entry(i2, o1, C64::from(r));
        op.set_entry(i1, o2, C64::from(r));
        op.set_entry(i2, o2, C64::from(-r));
    }
    op.require_unitary()?;
    Ok(op)
}

/// Full-space unitary of the which-way coupler: |mode⟩|x⟩ → |mode⟩|x ⊕ 1⟩,
/// identity on every other arm.
pub fn which_way_unitary(registry: &ModeRegistry, watched_mode: &str) -> Result<Operator> {
    let ancilla = registry.ancilla_space().ok_or(Error::NoAncilla)?;
    let watched = registry.particle_space().index_of(watched_mode)?;
    let da = ancilla.dim();
    let full = registry.space();
    let mut op = Operator::zero(full);
    for p in 0..registry.particle_space().dim() {
        for a in 0..da {
            let col = p * da + a;
            let row = if p == watched { p * da + (1 - a) } else { col };
            op.set_entry(row, col, C64::from(1.0));
        }
    }
    op.require_unitary()?;
    Ok(op)
}

/// An ordered interferometer over one [`ModeRegistry`]. Element unitaries are
/// computed and validated up front.
#[derive(Clone, Debug)]
pub struct Circuit {
    registry: ModeRegistry,
    elements: Vec<CircuitElement>,
    unitaries: Vec<Operator>,
}

impl Circuit {
    pub fn new(registry: ModeRegistry, elements: Vec<CircuitElement>) -> Result<Self> {
        let unitaries = elements
            .iter()
            .map(|e| element_unitary(&registry, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit {
            registry,
            elements,
            unitaries,
        })
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    /// Full-space unitaries, one per element, in application order.
    pub fn unitaries(&self) -> &[Operator] {
        &self.unitaries
    }

    /// Index of the first which-way coupler, if any.
    pub fn coupler_index(&self) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| matches!(e, CircuitElement::WhichWayCoupler { .. }))
    }

    pub fn coupler_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::WhichWayCoupler { .. }))
            .count()
    }

    /// Mode watched by the first coupler, if any.
    pub fn watched_mode(&self) -> Option<&str> {
        self.elements.iter().find_map(|e| match e {
            CircuitElement::WhichWayCoupler { mode } => Some(mode.as_str()),
            _ => None,
        })
    }
}

/// Full-space unitary for one element.
pub fn element_unitary(registry: &ModeRegistry, element: &CircuitElement) -> Result<Operator> {
    match element {
        CircuitElement::BeamSplitter(bs) => beam_splitter_unitary(registry, bs),
        CircuitElement::WhichWayCoupler { mode } => which_way_unitary(registry, mode),
    }
}

/// Applies every element in order to a normalized full-space state.
pub fn run_circuit(initial: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    if initial.space() != circuit.registry.space() {
        return Err(Error::SpaceMismatch("circuit input state"));
    }
    let norm = initial.norm();
    if (norm - 1.0).abs() > crate::hilbert::STATE_NORM_TOL {
        return Err(Error::NotNormalized {
            norm_sqr: norm * norm,
        });
    }
    let mut state = initial.clone();
    for u in &circuit.unitaries {
        state = u.apply(&state)?;
    }
    Ok(state)
}

/// A detector that fires when the particle ends in the span of `generators`
/// (particle-space vectors; they need not be orthogonal or normalized).
#[derive(Clone, Debug)]
pub struct DetectorSpec {
    pub name: String,
    pub generators: Vec<StateVector>,
}

impl DetectorSpec {
    pub fn new(name: impl Into<String>, generators: Vec<StateVector>) -> Self {
        DetectorSpec {
            name: name.into(),
            generators,
        }
    }
}

/// Full-space projector for a detector: span projector on the particle
/// factor, identity on the ancilla (a click does not read the ancilla out).
pub fn detector_projector(registry: &ModeRegistry, spec: &DetectorSpec) -> Result<Projector> {
    for g in &spec.generators {
        if g.space() != registry.particle_space() {
            return Err(Error::SpaceMismatch("detector generators"));
        }
    }
    let particle = Projector::from_vectors(&spec.generators)?;
    registry.lift_projector(&particle)
}

/// Particle-space projector for a detector.
pub fn detector_projector_particle(registry: &ModeRegistry, spec: &DetectorSpec) -> Result<Projector> {
    for g in &spec.generators {
        if g.space() != registry.particle_space() {
            return Err(Error::SpaceMismatch("detector generators"));
        }
    }
    Projector::from_vectors(&spec.generators)
}

/// Full-space projector onto "the which-way detector clicked":
/// identity ⊗ |click⟩⟨click|.
pub fn d3_click_projector(registry: &ModeRegistry) -> Result<Projector> {
    let ancilla = registry.ancilla_space().ok_or(Error::NoAncilla)?;
    let click = Projector::onto_label(ancilla, ancilla.label(1))?;
    let id = Projector::new(Operator::identity(registry.particle_space()))?;
    Ok(id.tensor(&click))
}
