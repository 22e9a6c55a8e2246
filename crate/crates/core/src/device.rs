//! Device roll-ups: participation-ratio loss budgets, T1, and microstrip
//! interference spectra.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{require_positive, Error, Result};
use crate::geometry::{ModeShape, StackProfile};
use crate::loss::{golden_rule_loss, interface_tan_delta, junction_tan_delta, substrate_tan_delta, SubstrateVariant};
use crate::materials::{interface_permittivity, Database, PiezoKind, Provenance, ThermalState};
use crate::units::{Dimension, QuantityText};

/// Loss model of one budget region.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    /// Interface pairing such as `Al/vacuum`, in either order.
    Interface { pair: String },
    /// Junction entry such as `Al/Al2O3/Al`; `volume` overrides V_J.
    Junction { pair: String, volume: Option<f64> },
    /// Substrate entry (or its host material); `thickness` overrides L.
    Substrate {
        pair: String,
        thickness: Option<f64>,
        averaged: bool,
    },
    /// A loss tangent given directly.
    Fixed { tan_delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: String,
    pub participation: f64,
    pub model: LossModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationBudget {
    pub regions: Vec<Region>,
    pub state: ThermalState,
}

const PARTICIPATION_SLACK: f64 = 1e-12;

impl ParticipationBudget {
    pub fn new(regions: Vec<Region>, state: ThermalState) -> Result<Self> {
        let b = ParticipationBudget { regions, state };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        for r in &self.regions {
            let f = r.participation;
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "region '{}': participation {f} outside [0, 1]",
                    r.label
                )));
            }
            if let LossModel::Fixed { tan_delta } = r.model {
                if !tan_delta.is_finite() {
                    return Err(Error::invalid(format!("region '{}': tan_delta must be finite", r.label)));
                }
            }
            total += f;
        }
        if total > 1.0 + PARTICIPATION_SLACK {
            return Err(Error::invalid(format!("participation ratios sum to {total}, above 1")));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let file: BudgetFile = toml::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        file.into_budget(context)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetFile {
    state: Option<StateRecord>,
    #[serde(default)]
    region: Vec<RegionRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    frequency: Option<QuantityText>,
    temperature: Option<QuantityText>,
    photon_number: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionRecord {
    label: String,
    participation: f64,
    model: String,
    pair: Option<String>,
    volume: Option<QuantityText>,
    thickness: Option<QuantityText>,
    averaged: Option<bool>,
    tan_delta: Option<f64>,
}

impl BudgetFile {
    fn into_budget(self, context: &str) -> Result<ParticipationBudget> {
        let reference = ThermalState::reference();
        let state = match self.state {
            None => reference,
            Some(s) => {
                let f = match s.frequency {
                    Some(q) => q.to_si(Dimension::Frequency)?,
                    None => reference.omega / (2.0 * std::f64::consts::PI),
                };
                let t = match s.temperature {
                    Some(q) => q.to_si(Dimension::Temperature)?,
                    None => reference.temperature,
                };
                ThermalState::from_frequency(f, t, s.photon_number.unwrap_or(reference.photon_number))?
            }
        };
        let regions = self
            .region
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.into_region(context, i))
            .collect::<Result<Vec<_>>>()?;
        ParticipationBudget::new(regions, state)
    }
}

impl RegionRecord {
    fn into_region(self, context: &str, index: usize) -> Result<Region> {
        let err = |msg: String| Error::Parse {
            context: format!("{context}, region {} ('{}')", index + 1, self.label),
            message: msg,
        };
        let pair = || self.pair.clone().ok_or_else(|| err(format!("model '{}' needs 'pair'", self.model)));
        let unused = |field: &str, present: bool| {
            if present {
                Err(err(format!("field '{field}' does not apply to model '{}'", self.model)))
            } else {
                Ok(())
            }
        };
        let model = match self.model.as_str() {
            "interface" => {
                unused("volume", self.volume.is_some())?;
                unused("thickness", self.thickness.is_some())?;
                unused("averaged", self.averaged.is_some())?;
                unused("tan_delta", self.tan_delta.is_some())?;
                LossModel::Interface { pair: pair()? }
            }
            "junction" => {
                unused("thickness", self.thickness.is_some())?;
                unused("averaged", self.averaged.is_some())?;
                unused("tan_delta", self.tan_delta.is_some())?;
                LossModel::Junction {
                    pair: pair()?,
                    volume: self.volume.as_ref().map(|q| q.to_si(Dimension::Volume)).transpose()?,
                }
            }
            "substrate" => {
                unused("volume", self.volume.is_some())?;
                unused("tan_delta", self.tan_delta.is_some())?;
                LossModel::Substrate {
                    pair: pair()?,
                    thickness: self.thickness.as_ref().map(|q| q.to_si(Dimension::Length)).transpose()?,
                    averaged: self.averaged.unwrap_or(true),
                }
            }
            "fixed" => {
                unused("pair", self.pair.is_some())?;
                unused("volume", self.volume.is_some())?;
                unused("thickness", self.thickness.is_some())?;
                unused("averaged", self.averaged.is_some())?;
                LossModel::Fixed {
                    tan_delta: self.tan_delta.ok_or_else(|| err("model 'fixed' needs 'tan_delta'".into()))?,
                }
            }
            other => {
                return Err(err(format!(
                    "unknown model '{other}'; expected interface, junction, substrate or fixed"
                )))
            }
        };
        Ok(Region {
            label: self.label,
            participation: self.participation,
            model,
        })
    }
}

/// Loss tangent of a region model and the provenance of the entry used.
pub fn region_tan_delta(db: &Database, model: &LossModel, state: &ThermalState) -> Result<(f64, Option<Provenance>)> {
    match model {
        LossModel::Fixed { tan_delta } => Ok((*tan_delta, None)),
        LossModel::Interface { pair } => {
            let (a, b) = pair.split_once('/').ok_or_else(|| {
                Error::invalid(format!("interface pair '{pair}' must look like 'A/B'"))
            })?;
            let (entry, _) = db.interface(a.trim(), b.trim())?;
            let PiezoKind::Interface {
                thickness,
                material1,
                material2,
            } = &entry.kind
            else {
                unreachable!("interface lookup returns interface entries")
            };
            let (m1, m2) = (db.medium(material1)?, db.medium(material2)?);
            let eps = interface_permittivity(&m1, &m2);
            Ok((interface_tan_delta(*thickness, entry.g, &m1, &m2, eps, state)?, Some(entry.provenance)))
        }
        LossModel::Junction { pair, volume } => {
            let entry = db.piezo(pair)?;
            let PiezoKind::Junction {
                volume: stored, barrier, ..
            } = &entry.kind
            else {
                return Err(Error::invalid(format!("'{pair}' is a {} entry, not a junction", entry.kind_name())));
            };
            let barrier = db.material(barrier)?;
            let v = volume.unwrap_or(*stored);
            Ok((junction_tan_delta(entry.g, v, barrier, state)?, Some(entry.provenance)))
        }
        LossModel::Substrate {
            pair,
            thickness,
            averaged,
        } => {
            let (entry, host) = db.substrate(pair)?;
            let PiezoKind::Substrate { thickness: stored, .. } = &entry.kind else {
                unreachable!("substrate lookup returns substrate entries")
            };
            let variant = if *averaged {
                SubstrateVariant::Averaged
            } else {
                SubstrateVariant::Exact
            };
            let l = thickness.unwrap_or(*stored);
            Ok((substrate_tan_delta(l, entry.g, host, state, variant)?, Some(entry.provenance)))
        }
    }
}

/// Qubit relaxation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum T1 {
    /// Seconds.
    Finite(f64),
    /// No loss at all: T1 is infinite.
    NoLoss,
    /// Net emission into the mode (n_a < n_B); the value is 1/|rate| in
    /// seconds.
    Gain(f64),
}

impl T1 {
    pub fn from_rate(rate: f64) -> Self {
        match rate.partial_cmp(&0.0) {
            Some(Ordering::Greater) => T1::Finite(1.0 / rate),
            Some(Ordering::Less) => T1::Gain(-1.0 / rate),
            _ => T1::NoLoss,
        }
    }

    pub fn seconds(self) -> Option<f64> {
        match self {
            T1::Finite(s) => Some(s),
            _ => None,
        }
    }

    pub fn micros(self) -> Option<f64> {
        self.seconds().map(|s| s * 1e6)
    }
}

impl fmt::Display for T1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            T1::Finite(s) => write!(f, "{:.6e} us", s * 1e6),
            T1::NoLoss => f.write_str("infinite (no loss)"),
            T1::Gain(s) => write!(f, "gain, time constant {:.6e} us", s * 1e6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionContribution {
    pub label: String,
    pub participation: f64,
    pub tan_delta: f64,
    /// f·tanδ.
    pub value: f64,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1Report {
    pub inverse_q: f64,
    /// 1/T1 = Ω·(1/Q), s⁻¹.
    pub relaxation_rate: f64,
    pub t1: T1,
    /// Sorted by contribution, largest first.
    pub contributions: Vec<RegionContribution>,
    pub dominant: Option<String>,
}

/// Incoherent participation-weighted sum 1/Q = Σ f_i tanδ_i and the
/// resulting T1.
pub fn t1_budget(db: &Database, budget: &ParticipationBudget) -> Result<T1Report> {
    budget.validate()?;
    let state = &budget.state;
    let mut contributions = budget
        .regions
        .iter()
        .map(|r| {
            let (tan, provenance) = region_tan_delta(db, &r.model, state)?;
            Ok(RegionContribution {
                label: r.label.clone(),
                participation: r.participation,
                tan_delta: tan,
                value: r.participation * tan,
                provenance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inverse_q: f64 = contributions.iter().map(|c| c.value).sum();
    contributions.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.label.cmp(&b.label)));
    let dominant = contributions.first().filter(|c| c.value > 0.0).map(|c| c.label.clone());
    let relaxation_rate = state.omega * inverse_q;
    Ok(T1Report {
        inverse_q,
        relaxation_rate,
        t1: T1::from_rate(relaxation_rate),
        contributions,
        dominant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Frequency sweep in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn linear(from: f64, to: f64, points: usize) -> Self {
        Sweep {
            from,
            to,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        require_positive("sweep start frequency", self.from)?;
        require_positive("sweep end frequency", self.to)?;
        if self.to <= self.from {
            return Err(Error::invalid(format!(
                "sweep end {} Hz must exceed start {} Hz",
                self.to, self.from
            )));
        }
        if self.points < 2 {
            return Err(Error::invalid("a sweep needs at least 2 points"));
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    return self.to;
                }
                let u = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.from + u * (self.to - self.from),
                    Spacing::Log => self.from * (self.to / self.from).powf(u),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub frequency: f64,
    pub inverse_q: f64,
    /// Aligned with [`Spectrum::labels`].
    pub contributions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Self-term labels followed by interference labels (`a*b`).
    pub labels: Vec<String>,
    pub points: Vec<SpectrumPoint>,
}

/// Golden-rule 1/Q of a labelled stack across a frequency sweep, with
/// interference between its planar elements. `participation` assigns
/// ratios by label (elements sharing a label split it). Points are
/// evaluated in parallel unless `parallel` is false; the output does not
/// depend on it.
pub fn microstrip_spectrum(
    profile: &StackProfile,
    participation: &[(&str, f64)],
    sweep: &Sweep,
    state: &ThermalState,
    parallel: bool,
) -> Result<Spectrum> {
    let profile = profile.with_participations(participation)?;
    let freqs = sweep.frequencies()?;
    let eval = |f: &f64| -> Result<(f64, crate::loss::LossResult)> {
        let s = state.with_omega(2.0 * std::f64::consts::PI * f)?;
        Ok((*f, golden_rule_loss(&profile, &ModeShape::Uniform, &s)?))
    };
    let results: Vec<_> = if parallel {
        freqs.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        freqs.iter().map(eval).collect::<Result<_>>()?
    };
    let labels: Vec<String> = results
        .first()
        .map(|(_, r)| r.breakdown.iter().map(|c| c.label.clone()).collect())
        .unwrap_or_default();
    let points = results
        .into_iter()
        .map(|(frequency, r)| SpectrumPoint {
            frequency,
            inverse_q: r.inverse_q,
            contributions: r.breakdown.iter().map(|c| c.value).collect(),
        })
        .collect();
    Ok(Spectrum { labels, points })
}

/// Period (in the units of `x`) of the oscillation in `y` over a uniform
/// grid `x`, or `None` if no periodic component is found.
///
/// `y/x` is taken to remove the linear growth of interface loss, a quadratic
/// trend is subtracted, and the first autocorrelation maximum after the
/// first zero crossing is refined by a parabola through its neighbours.
pub fn oscillation_period(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 8 || y.len() != n {
        return None;
    }
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| b / a).collect();
    let resid = detrend_quadratic(x, &r);
    let energy: f64 = resid.iter().map(|v| v * v).sum();
    let level = r.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    if !energy.is_finite() || (energy / n as f64).sqrt() <= 1e-9 * level {
        return None;
    }
    let max_lag = n / 2;
    let ac: Vec<f64> = (0..=max_lag)
        .map(|lag| {
            let s: f64 = (0..n - lag).map(|i| resid[i] * resid[i + lag]).sum();
            s / (n - lag) as f64
        })
        .collect();
    let first_negative = ac.iter().position(|&v| v < 0.0)?;
    let mut best = None;
    for lag in first_negative.max(1)..max_lag {
        if ac[lag] > ac[lag - 1] && ac[lag] >= ac[lag + 1] && ac[lag] > 0.0 {
            best = Some(lag);
            break;
        }
    }
    let lag = best?;
    let (a, b, c) = (ac[lag - 1], ac[lag], ac[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((lag as f64 + shift) * dx)
}

fn detrend_quadratic(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mid = x.iter().sum::<f64>() / n;
    let scale = x.iter().map(|v| (v - mid).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let u: Vec<f64> = x.iter().map(|v| (v - mid) / scale).collect();
    // Normal equations for y ≈ c0 + c1 u + c2 u².
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (ui, yi) in u.iter().zip(y) {
        let basis = [1.0, *ui, ui * ui];
        for r in 0..3 {
            rhs[r] += basis[r] * yi;
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(m, rhs);
    u.iter()
        .zip(y)
        .map(|(ui, yi)| yi - (coef[0] + coef[1] * ui + coef[2] * ui * ui))
        .collect()
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        b.swap(col, pivot);
        if m[col][col] == 0.0 {
            return [0.0; 3];
        }
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (x, p) in m[row].iter_mut().zip(pivot).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}
