//! Loss evaluation: closed-form tangents, the coupling form factor and two
//! independent evaluators of the general dissipation functional.

pub mod closed_form;
pub mod form_factor;
mod golden_rule;
pub mod quadrature;
mod real_space;
mod sources;

use std::collections::BTreeMap;
use std::fmt;

pub use closed_form::{
    embedded_slab_tan_delta, interface_tan_delta, junction_tan_delta, substrate_tan_delta, SubstrateVariant,
};
pub use form_factor::{form_factor, FormFactor};
pub use golden_rule::golden_rule_loss;
pub use real_space::{real_space_loss, real_space_loss_with};

use crate::error::{Error, Result};
use crate::geometry::{ElementKind, ModeShape, StackProfile};
use crate::materials::ThermalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluator {
    ClosedForm,
    GoldenRule,
    RealSpace,
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evaluator::ClosedForm => "closed_form",
            Evaluator::GoldenRule => "golden_rule",
            Evaluator::RealSpace => "real_space",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionKind {
    /// Self term of one element.
    Element,
    /// Cross term 2Re(a_i a_j*) between two coherently emitting elements.
    Interference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    /// Element label, or `a*b` for an interference term.
    pub label: String,
    pub kind: ContributionKind,
    pub participation: Option<f64>,
    /// Effective loss tangent value/participation, where defined.
    pub tan_delta: Option<f64>,
    /// Contribution to 1/Q.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub inverse_q: f64,
    /// Exhaustive: the values sum to `inverse_q`.
    pub breakdown: Vec<Contribution>,
    pub evaluator: Evaluator,
}

impl LossResult {
    pub fn zero(evaluator: Evaluator) -> Self {
        LossResult {
            inverse_q: 0.0,
            breakdown: Vec::new(),
            evaluator,
        }
    }

    pub fn contribution(&self, label: &str) -> Option<&Contribution> {
        self.breakdown.iter().find(|c| c.label == label)
    }

    /// Sum of the self terms only.
    pub fn incoherent_sum(&self) -> f64 {
        self.breakdown
            .iter()
            .filter(|c| c.kind == ContributionKind::Element)
            .map(|c| c.value)
            .sum()
    }
}

/// Self and cross terms gathered per element index.
#[derive(Debug)]
pub(crate) struct Accumulator {
    own: Vec<f64>,
    cross: BTreeMap<(usize, usize), f64>,
}

impl Accumulator {
    pub fn new(n: usize) -> Self {
        Accumulator {
            own: vec![0.0; n],
            cross: BTreeMap::new(),
        }
    }

    pub fn add_self(&mut self, i: usize, value: f64) {
        self.own[i] += value;
    }

    pub fn add_cross(&mut self, i: usize, j: usize, value: f64) {
        let key = if i < j { (i, j) } else { (j, i) };
        *self.cross.entry(key).or_insert(0.0) += value;
    }

    pub fn finish(self, labels: &[String], participation: &[Option<f64>], evaluator: Evaluator) -> LossResult {
        let mut breakdown: Vec<Contribution> = self
            .own
            .iter()
            .enumerate()
            .map(|(i, &value)| {
                let f = participation[i];
                Contribution {
                    label: labels[i].clone(),
                    kind: ContributionKind::Element,
                    participation: f,
                    tan_delta: f.filter(|f| *f > 0.0).map(|f| value / f),
                    value,
                }
            })
            .collect();
        breakdown.extend(self.cross.into_iter().map(|((i, j), value)| Contribution {
            label: format!("{}*{}", labels[i], labels[j]),
            kind: ContributionKind::Interference,
            participation: None,
            tan_delta: None,
            value,
        }));
        LossResult {
            inverse_q: breakdown.iter().map(|c| c.value).sum(),
            breakdown,
            evaluator,
        }
    }
}

/// Incoherent sum of the closed-form tangents, each weighted by the
/// element's participation. Slabs use the substrate form with its
/// interference factor; bulk contributes nothing.
pub fn closed_form_loss(profile: &StackProfile, mode: &ModeShape, state: &ThermalState) -> Result<LossResult> {
    if matches!(mode, ModeShape::Sampled(_)) {
        return Err(Error::Unsupported("closed forms need an analytic mode shape".into()));
    }
    let labels = sources::unique_labels(profile);
    let participation: Vec<Option<f64>> = profile
        .elements()
        .iter()
        .map(|e| sources::participation(profile, mode, e))
        .collect();
    let mut acc = Accumulator::new(labels.len());
    for (i, el) in profile.elements().iter().enumerate() {
        let f = participation[i].unwrap_or(0.0);
        let tan = match &el.kind {
            ElementKind::Interface {
                g,
                thickness,
                minus,
                plus,
                permittivity,
                ..
            } => interface_tan_delta(*thickness, *g, minus, plus, *permittivity, state)?,
            ElementKind::Slab { g, z_lo, z_hi, host } => {
                substrate_tan_delta(z_hi - z_lo, *g, host, state, SubstrateVariant::Exact)?
            }
            ElementKind::Bulk { .. } => 0.0,
            ElementKind::Junction { g, volume, host, .. } => junction_tan_delta(*g, *volume, host, state)?,
        };
        acc.add_self(i, f * tan);
    }
    Ok(acc.finish(&labels, &participation, Evaluator::ClosedForm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ANGSTROM;
    use crate::geometry::{build_stack, Orientation, PiezoElement};
    use crate::materials::{Database, Medium};

    #[test]
    fn closed_form_single_interface_is_f_times_tan() {
        let db = Database::builtin();
        let al = db.material("Al").unwrap().clone();
        let el = PiezoElement::interface(0.73, 2.03 * ANGSTROM, 0.0, Orientation::Plus, al.clone().into(), Medium::Vacuum)
            .with_label("MV");
        let p = build_stack(vec![el], 1e-12, 1e-8).unwrap();
        let s = ThermalState::reference();
        let r = closed_form_loss(&p, &ModeShape::Uniform, &s).unwrap();
        let f = 1e-8 * 2.03 * ANGSTROM / 1e-12;
        let tan = interface_tan_delta(2.03 * ANGSTROM, 0.73, &al.into(), &Medium::Vacuum, crate::constants::EPSILON_0, &s)
            .unwrap();
        assert!((r.inverse_q / (f * tan) - 1.0).abs() < 1e-14);
        let c = r.contribution("MV").unwrap();
        assert!((c.tan_delta.unwrap() / tan - 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_labels_are_numbered() {
        let s = Database::builtin().material("Al2O3").unwrap().clone();
        let mk = |z| {
            PiezoElement::interface(0.1, 1e-10, z, Orientation::Plus, s.clone().into(), s.clone().into()).with_label("X")
        };
        let p = build_stack(vec![mk(1e-6), mk(0.0)], 1e-12, 1e-8).unwrap();
        assert_eq!(sources::unique_labels(&p), vec!["X_1", "X_2"]);
    }
}
