//! Material constants, the piezoelectric coefficient database, and the
//! thermal-occupation arithmetic shared by every loss evaluator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::constants::{C_LIGHT, EPSILON_0, HBAR, K_B};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::units::{Dimension, QuantityText};

const BUILTIN_DATABASE: &str = include_str!("../data/materials.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Handbook,
    Estimated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Paper => "paper",
            Provenance::Handbook => "handbook",
            Provenance::Estimated => "estimated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialClass {
    Metal,
    Dielectric,
}

/// Acoustic and dielectric constants of one medium, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub class: MaterialClass,
    /// kg/m³
    pub mass_density: f64,
    /// Longitudinal sound velocity, m/s.
    pub sound_velocity: f64,
    pub rel_permittivity: f64,
    pub provenance: Provenance,
}

impl Material {
    pub fn new(
        name: impl Into<String>,
        class: MaterialClass,
        mass_density: f64,
        sound_velocity: f64,
        rel_permittivity: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        let m = Material {
            name: name.into(),
            class,
            mass_density,
            sound_velocity,
            rel_permittivity,
            provenance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("mass density", self.mass_density)?;
        require_positive("sound velocity", self.sound_velocity)?;
        if !(self.rel_permittivity.is_finite() && self.rel_permittivity >= 1.0) {
            return Err(Error::invalid(format!(
                "relative permittivity of {} must be >= 1, got {}",
                self.name, self.rel_permittivity
            )));
        }
        // The energy shell needs phonons slower than light in the medium.
        let c_medium = C_LIGHT / self.rel_permittivity.sqrt();
        if self.sound_velocity >= c_medium {
            return Err(Error::invalid(format!(
                "sound velocity of {} ({} m/s) must be below the speed of light in the medium",
                self.name, self.sound_velocity
            )));
        }
        Ok(())
    }

    /// Absolute permittivity ε = ε_r·ε₀, F/m.
    pub fn permittivity(&self) -> f64 {
        self.rel_permittivity * EPSILON_0
    }

    /// Acoustic weight ρ·v³ that sets the phonon emission rate into this medium.
    pub fn acoustic_stiffness(&self) -> f64 {
        self.mass_density * self.sound_velocity.powi(3)
    }

    pub fn is_dielectric(&self) -> bool {
        self.class == MaterialClass::Dielectric
    }
}

/// Either side of an interface. Vacuum carries no phonon channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    Vacuum,
    Material(Material),
}

impl Medium {
    pub fn material(&self) -> Option<&Material> {
        match self {
            Medium::Vacuum => None,
            Medium::Material(m) => Some(m),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Medium::Vacuum => "vacuum",
            Medium::Material(m) => &m.name,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Medium::Vacuum)
    }
}

impl From<Material> for Medium {
    fn from(m: Material) -> Self {
        Medium::Material(m)
    }
}

/// Permittivity used for an interface: ε₀ for metal/vacuum, otherwise the
/// permittivity of the dielectric involved (the larger one if both are).
pub fn interface_permittivity(side1: &Medium, side2: &Medium) -> f64 {
    [side1, side2]
        .iter()
        .filter_map(|m| m.material())
        .filter(|m| m.is_dielectric())
        .map(Material::permittivity)
        .fold(EPSILON_0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PiezoKind {
    /// g(r) = g_I t_I δ(z) ẑ, normal pointing from `material1` to `material2`.
    Interface {
        thickness: f64,
        material1: String,
        material2: String,
    },
    /// |g(r)| = g_B inside a film of thickness L.
    Substrate { thickness: f64, host: String },
    /// g(r) = g_I V_J δ(r) ẑ.
    Junction {
        volume: f64,
        barrier: String,
        electrode: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiezoEntry {
    pub name: String,
    pub kind: PiezoKind,
    /// Coefficient magnitude, C/m².
    pub g: f64,
    pub provenance: Provenance,
}

impl PiezoEntry {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PiezoKind::Interface { .. } => "interface",
            PiezoKind::Substrate { .. } => "substrate",
            PiezoKind::Junction { .. } => "junction",
        }
    }
}

/// Result of a generic name lookup.
#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Material(Material),
    Piezo(PiezoEntry),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatabaseFile {
    #[serde(default)]
    material: Vec<MaterialRecord>,
    #[serde(default)]
    piezo: Vec<PiezoRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRecord {
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    class: MaterialClass,
    mass_density: f64,
    sound_velocity: f64,
    rel_permittivity: f64,
    provenance: Provenance,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiezoRecord {
    name: String,
    kind: String,
    g: f64,
    provenance: Provenance,
    thickness: Option<QuantityText>,
    volume: Option<QuantityText>,
    material1: Option<String>,
    material2: Option<String>,
    host: Option<String>,
    barrier: Option<String>,
    electrode: Option<String>,
}

/// Read-only material database.
#[derive(Debug, Clone)]
pub struct Database {
    materials: BTreeMap<String, Material>,
    aliases: BTreeMap<String, String>,
    piezo: BTreeMap<String, PiezoEntry>,
}

impl Database {
    /// The database shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_DATABASE, "built-in database")
            .expect("built-in database is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let file: DatabaseFile = toml::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        let mut db = Database {
            materials: BTreeMap::new(),
            aliases: BTreeMap::new(),
            piezo: BTreeMap::new(),
        };
        for rec in file.material {
            let m = Material::new(
                rec.name.clone(),
                rec.class,
                rec.mass_density,
                rec.sound_velocity,
                rec.rel_permittivity,
                rec.provenance,
            )?;
            if rec.name.eq_ignore_ascii_case("vacuum") {
                return Err(Error::Configuration("'vacuum' is reserved".into()));
            }
            for alias in rec.aliases {
                db.aliases.insert(alias, rec.name.clone());
            }
            if db.materials.insert(rec.name.clone(), m).is_some() {
                return Err(Error::Configuration(format!("duplicate material '{}'", rec.name)));
            }
        }
        for rec in file.piezo {
            let entry = db.piezo_from_record(rec, context)?;
            if db.piezo.contains_key(&entry.name) {
                return Err(Error::Configuration(format!("duplicate piezo entry '{}'", entry.name)));
            }
            db.piezo.insert(entry.name.clone(), entry);
        }
        Ok(db)
    }

    fn piezo_from_record(&self, rec: PiezoRecord, context: &str) -> Result<PiezoEntry> {
        let field = |name: &str, v: Option<String>| {
            v.ok_or_else(|| Error::Parse {
                context: format!("{context}: piezo '{}'", rec.name),
                message: format!("missing field '{name}'"),
            })
        };
        let quantity = |name: &str, v: &Option<QuantityText>, dim| -> Result<f64> {
            let q = v.as_ref().ok_or_else(|| Error::Parse {
                context: format!("{context}: piezo '{}'", rec.name),
                message: format!("missing field '{name}'"),
            })?;
            require_positive(name, q.to_si(dim)?)
        };
        require_non_negative("g", rec.g)?;
        let kind = match rec.kind.as_str() {
            "interface" => {
                let material1 = field("material1", rec.material1.clone())?;
                let material2 = field("material2", rec.material2.clone())?;
                self.medium(&material1)?;
                self.medium(&material2)?;
                PiezoKind::Interface {
                    thickness: quantity("thickness", &rec.thickness, Dimension::Length)?,
                    material1,
                    material2,
                }
            }
            "substrate" => {
                let host = field("host", rec.host.clone())?;
                self.material(&host)?;
                PiezoKind::Substrate {
                    thickness: quantity("thickness", &rec.thickness, Dimension::Length)?,
                    host,
                }
            }
            "junction" => {
                let barrier = field("barrier", rec.barrier.clone())?;
                let electrode = field("electrode", rec.electrode.clone())?;
                self.material(&barrier)?;
                self.material(&electrode)?;
                PiezoKind::Junction {
                    volume: quantity("volume", &rec.volume, Dimension::Volume)?,
                    barrier,
                    electrode,
                }
            }
            other => {
                return Err(Error::Parse {
                    context: format!("{context}: piezo '{}'", rec.name),
                    message: format!("unknown kind '{other}'"),
                })
            }
        };
        Ok(PiezoEntry {
            name: rec.name,
            kind,
            g: rec.g,
            provenance: rec.provenance,
        })
    }

    pub fn material(&self, name: &str) -> Result<&Material> {
        let key = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.materials.get(key).ok_or_else(|| Error::NotFound {
            kind: "material",
            name: name.to_string(),
            available: self.materials.keys().cloned().collect(),
        })
    }

    /// Like [`Database::material`] but also accepts `vacuum`.
    pub fn medium(&self, name: &str) -> Result<Medium> {
        if name.eq_ignore_ascii_case("vacuum") {
            Ok(Medium::Vacuum)
        } else {
            self.material(name).cloned().map(Medium::Material)
        }
    }

    pub fn piezo(&self, name: &str) -> Result<&PiezoEntry> {
        self.piezo.get(name).ok_or_else(|| Error::NotFound {
            kind: "piezo entry",
            name: name.to_string(),
            available: self.piezo.keys().cloned().collect(),
        })
    }

    /// Finds the interface entry for the pair `a/b` in either order. The
    /// returned orientation is +1 when the stored normal points from `a` to
    /// `b`, −1 when the entry was found reversed.
    pub fn interface(&self, a: &str, b: &str) -> Result<(&PiezoEntry, f64)> {
        let direct = format!("{a}/{b}");
        let reversed = format!("{b}/{a}");
        let found = |name: &str| {
            self.piezo
                .get(name)
                .filter(|e| matches!(e.kind, PiezoKind::Interface { .. }))
        };
        if let Some(e) = found(&direct) {
            Ok((e, 1.0))
        } else if let Some(e) = found(&reversed) {
            Ok((e, -1.0))
        } else {
            Err(Error::NotFound {
                kind: "interface pairing",
                name: direct,
                available: self
                    .piezo
                    .values()
                    .filter(|e| matches!(e.kind, PiezoKind::Interface { .. }))
                    .map(|e| e.name.clone())
                    .collect(),
            })
        }
    }

    /// Substrate entry by its name or by its host material's name, together
    /// with the host.
    pub fn substrate(&self, name: &str) -> Result<(&PiezoEntry, &Material)> {
        let entry = match self.piezo.get(name) {
            Some(e) => e,
            None => {
                let host = self.material(name).ok().map(|m| m.name.as_str());
                self.piezo
                    .values()
                    .find(|p| matches!(&p.kind, PiezoKind::Substrate { host: h, .. } if Some(h.as_str()) == host))
                    .ok_or_else(|| Error::NotFound {
                        kind: "substrate entry",
                        name: name.to_string(),
                        available: self
                            .piezo
                            .values()
                            .filter(|p| matches!(p.kind, PiezoKind::Substrate { .. }))
                            .map(|p| p.name.clone())
                            .collect(),
                    })?
            }
        };
        let PiezoKind::Substrate { host, .. } = &entry.kind else {
            return Err(Error::invalid(format!("'{name}' is a {} entry, not a substrate", entry.kind_name())));
        };
        Ok((entry, self.material(host)?))
    }

    /// Looks a name up among materials first, then piezo entries.
    pub fn lookup(&self, name: &str) -> Result<Entry> {
        if let Ok(m) = self.material(name) {
            return Ok(Entry::Material(m.clone()));
        }
        if let Some(p) = self.piezo.get(name) {
            return Ok(Entry::Piezo(p.clone()));
        }
        Err(Error::NotFound {
            kind: "material or piezo entry",
            name: name.to_string(),
            available: self.names(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.materials.keys().chain(self.piezo.keys()).cloned().collect()
    }

    pub fn materials(&self) -> impl Iterator<Item = &Material> {
        self.materials.values()
    }

    pub fn piezo_entries(&self) -> impl Iterator<Item = &PiezoEntry> {
        self.piezo.values()
    }
}

/// Bose occupation n_B(Ω, T) = 1/(exp(ħΩ/k_BT) − 1); exactly zero at T = 0.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    require_positive("angular frequency", omega)?;
    require_non_negative("temperature", temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Drive and bath conditions for a loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    /// Angular photon frequency Ω, rad/s.
    pub omega: f64,
    /// Phonon bath temperature, K.
    pub temperature: f64,
    /// Photon occupation n_a.
    pub photon_number: f64,
}

impl ThermalState {
    pub fn new(omega: f64, temperature: f64, photon_number: f64) -> Result<Self> {
        require_positive("angular frequency", omega)?;
        require_non_negative("temperature", temperature)?;
        require_non_negative("photon number", photon_number)?;
        Ok(ThermalState {
            omega,
            temperature,
            photon_number,
        })
    }

    /// Builds a state from an ordinary frequency in Hz.
    pub fn from_frequency(frequency_hz: f64, temperature: f64, photon_number: f64) -> Result<Self> {
        Self::new(2.0 * std::f64::consts::PI * frequency_hz, temperature, photon_number)
    }

    /// Ω/2π = 10 GHz, T = 10 mK, n_a = 1.
    pub fn reference() -> Self {
        Self::from_frequency(10e9, 10e-3, 1.0).expect("valid reference state")
    }

    /// The same bath with the drive occupation set to n_B, i.e. thermal equilibrium.
    pub fn at_equilibrium(self) -> Result<Self> {
        Ok(ThermalState {
            photon_number: self.bose()?,
            ..self
        })
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self::new(omega, self.temperature, self.photon_number)
    }

    pub fn bose(&self) -> Result<f64> {
        bose_occupation(self.omega, self.temperature)
    }

    pub fn prefactor(&self) -> Result<f64> {
        thermal_prefactor(self)
    }
}

/// (n_a − n_B)/(n_a + 1/2). Negative when the bath is hotter than the drive.
pub fn thermal_prefactor(state: &ThermalState) -> Result<f64> {
    let n_b = state.bose()?;
    Ok((state.photon_number - n_b) / (state.photon_number + 0.5))
}
