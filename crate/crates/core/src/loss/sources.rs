//! Emitters shared by the golden-rule and real-space evaluators.
//!
//! Planar elements (interfaces and slabs) radiate along ±z into the
//! connected run of material they sit in ("channel"). Junctions and every
//! element of a sampled mode are treated as 3D point sources grouped by
//! host medium; groups are incoherent with each other and with the planar
//! channels.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ElementKind, ModeShape, PiezoElement, StackProfile};
use crate::loss::form_factor::{sampled_sources, PointSources};
use crate::loss::quadrature::MIN_NODES_PER_WAVELENGTH;
use crate::materials::{Material, Medium};

/// Emission of one planar element in one direction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Emission {
    pub segment: usize,
    /// ρv³ of the medium the phonon is launched into.
    pub stiffness: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PlanarSource {
    pub index: usize,
    /// Real amplitude c_e: √(A|ψ|²/V_a) or √(f/size)·sign.
    pub scale: f64,
    pub permittivity: f64,
    /// Emission towards −z and +z.
    pub emission: [Option<Emission>; 2],
    /// Ω/v inside a slab; unused for interfaces.
    pub local_k: f64,
}

pub(crate) const DIRECTIONS: [f64; 2] = [-1.0, 1.0];

/// Coherent set of point sources in one host.
#[derive(Debug, Clone)]
pub(crate) struct PointGroup {
    pub host: Material,
    /// Per element: positions and complex weights w (already divided by
    /// √(εV_a)).
    pub members: Vec<(usize, PointSources)>,
}

impl PointGroup {
    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        let mut n = 0.0;
        for (_, pts) in &self.members {
            for (r, _) in pts {
                for a in 0..3 {
                    c[a] += r[a];
                }
                n += 1.0;
            }
        }
        if n > 0.0 {
            c.map(|x| x / n)
        } else {
            c
        }
    }

    /// Largest distance of a source from the centroid.
    pub fn radius(&self) -> f64 {
        let c = self.centroid();
        self.members
            .iter()
            .flat_map(|(_, p)| p.iter())
            .map(|(r, _)| ((r[0] - c[0]).powi(2) + (r[1] - c[1]).powi(2) + (r[2] - c[2]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Sources {
    pub planar: Vec<PlanarSource>,
    pub groups: Vec<PointGroup>,
    pub participation: Vec<Option<f64>>,
    pub labels: Vec<String>,
}

/// Labels unique within the profile: repeated labels get `_1`, `_2`, ...
/// in stack order.
pub(crate) fn unique_labels(profile: &StackProfile) -> Vec<String> {
    let raw: Vec<String> = profile
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| e.display_label(i))
        .collect();
    let mut seen = std::collections::HashMap::<&str, usize>::new();
    raw.iter()
        .map(|l| {
            if raw.iter().filter(|x| *x == l).count() > 1 {
                let n = seen.entry(l.as_str()).or_insert(0);
                *n += 1;
                format!("{l}_{n}")
            } else {
                l.clone()
            }
        })
        .collect()
}

/// Geometric participation of an element: its override, or its share of
/// the mode intensity.
pub(crate) fn participation(profile: &StackProfile, mode: &ModeShape, el: &PiezoElement) -> Option<f64> {
    if let Some(f) = el.participation {
        return Some(f);
    }
    match (&el.kind, mode) {
        (_, ModeShape::Sampled(_)) => None,
        (ElementKind::Bulk { .. }, _) => None,
        (ElementKind::Junction { volume, position, .. }, _) => {
            Some(mode.z_component(*position).norm_sqr() * volume / profile.cavity_volume)
        }
        (_, _) => Some(profile.area * el.size() / profile.cavity_volume),
    }
}

fn side_medium(el: &PiezoElement, s: f64) -> Option<&Medium> {
    match &el.kind {
        ElementKind::Interface { minus, plus, .. } => Some(if s < 0.0 { minus } else { plus }),
        _ => None,
    }
}

fn prepare_planar(
    profile: &StackProfile,
    index: usize,
    el: &PiezoElement,
    omega: f64,
) -> Result<Option<PlanarSource>> {
    let media = profile.media();
    let scale = match el.participation {
        Some(f) => (f / el.size()).sqrt() * el.field_sign,
        None => (profile.area / profile.cavity_volume).sqrt(),
    };
    let (z, local_k, host) = match &el.kind {
        ElementKind::Interface { z, .. } => (*z, 0.0, None),
        ElementKind::Slab { z_lo, host, .. } => (*z_lo, omega / host.sound_velocity, Some(host)),
        ElementKind::Bulk { .. } => return Ok(None),
        ElementKind::Junction { .. } => unreachable!("junctions are point sources"),
    };
    let mut emission = [None, None];
    for (slot, s) in emission.iter_mut().zip(DIRECTIONS) {
        let medium = match host {
            Some(h) => h,
            None => match side_medium(el, s).and_then(|m| m.material()) {
                Some(m) => m,
                None => continue,
            },
        };
        let segment = match host {
            Some(_) => media.segment_at(z, 1.0),
            None => media.segment_at(z, s),
        };
        let Some(segment) = segment else {
            return Err(Error::Configuration(format!(
                "element '{}' emits into a vacuum layer of the medium map",
                el.display_label(index)
            )));
        };
        *slot = Some(Emission {
            segment,
            stiffness: medium.acoustic_stiffness(),
        });
    }
    Ok(Some(PlanarSource {
        index,
        scale,
        permittivity: el.permittivity(),
        emission,
        local_k,
    }))
}

fn add_to_group(groups: &mut Vec<PointGroup>, host: &Material, index: usize, pts: PointSources) {
    match groups.iter_mut().find(|g| g.host.name == host.name) {
        Some(g) => g.members.push((index, pts)),
        None => groups.push(PointGroup {
            host: host.clone(),
            members: vec![(index, pts)],
        }),
    }
}

/// Common acoustic medium for a sampled mode: the homogeneous medium of
/// the stack, or the shared host of a junction-only profile.
fn sampled_host(profile: &StackProfile) -> Result<Material> {
    if let [Medium::Material(m)] = profile.media().media() {
        return Ok(m.clone());
    }
    let mut host: Option<&Material> = None;
    for e in profile.elements() {
        match &e.kind {
            ElementKind::Junction { host: h, .. } if host.is_none_or(|x| x.name == h.name) => host = Some(h),
            _ => {
                return Err(Error::Unsupported(
                    "sampled modes need a homogeneous, non-vacuum medium".into(),
                ))
            }
        }
    }
    host.cloned()
        .ok_or_else(|| Error::Unsupported("sampled modes need a homogeneous, non-vacuum medium".into()))
}

pub(crate) fn prepare(profile: &StackProfile, mode: &ModeShape, omega: f64) -> Result<Sources> {
    let labels = unique_labels(profile);
    let participation = profile
        .elements()
        .iter()
        .map(|e| participation(profile, mode, e))
        .collect();
    let mut planar = Vec::new();
    let mut groups = Vec::new();
    let inv_va = profile.cavity_volume.recip();

    if let ModeShape::Sampled(field) = mode {
        if profile.elements().iter().any(|e| e.participation.is_some()) {
            return Err(Error::Configuration(
                "participation ratios cannot be combined with a sampled mode".into(),
            ));
        }
        let host = sampled_host(profile)?;
        let wavelength = 2.0 * std::f64::consts::PI * host.sound_velocity / omega;
        let spacing = field.max_spacing();
        if wavelength / spacing < MIN_NODES_PER_WAVELENGTH {
            return Err(Error::Resolution {
                spacing,
                wavelength,
                samples_per_wavelength: wavelength / spacing,
            });
        }
        for (index, pts) in sampled_sources(profile, field) {
            let eps = profile.elements()[index].permittivity();
            let k = (inv_va / eps).sqrt();
            let pts = pts.into_iter().map(|(r, w)| (r, w * k)).collect();
            add_to_group(&mut groups, &host, index, pts);
        }
        return Ok(Sources {
            planar,
            groups,
            participation,
            labels,
        });
    }

    if let ModeShape::PlaneWaveTransverse { q_perp } = mode {
        let q = q_perp[0].hypot(q_perp[1]);
        for el in profile.elements() {
            if let ElementKind::Bulk { host, g } = &el.kind {
                if *g > 0.0 && q >= omega / host.sound_velocity {
                    return Err(Error::Unsupported(
                        "photon wavevector reaches the phonon shell; bulk emission is not finite".into(),
                    ));
                }
            }
        }
    }

    for (index, el) in profile.elements().iter().enumerate() {
        match &el.kind {
            ElementKind::Junction {
                g,
                volume,
                position,
                host,
            } => {
                let amp = match el.participation {
                    Some(f) => Complex64::new((f / volume).sqrt() * el.field_sign, 0.0),
                    None => mode.z_component(*position) * inv_va.sqrt(),
                };
                let w = amp * (g * volume / host.permittivity().sqrt());
                add_to_group(&mut groups, host, index, vec![(*position, w)]);
            }
            _ => {
                if let Some(src) = prepare_planar(profile, index, el, omega)? {
                    planar.push(src);
                }
            }
        }
    }
    Ok(Sources {
        planar,
        groups,
        participation,
        labels,
    })
}
