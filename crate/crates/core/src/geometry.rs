//! Piezoelectric profiles g(r) for layered stacks and point junctions, and
//! photon mode shapes ψ(r).
//!
//! Stacks are quasi-one-dimensional: planar elements are infinite in the
//! transverse plane (area `A` per profile) and vary only along the stack axis
//! ẑ. Point junctions sit at a 3D position and radiate into the full sphere.

use num_complex::Complex64;

use crate::constants::C_LIGHT;
use crate::error::{require_finite, require_positive, Error, Result};
use crate::materials::{interface_permittivity, Database, Material, Medium, PiezoKind};

/// Direction of the interface normal relative to ẑ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }

    pub fn from_sign(sign: f64) -> Self {
        if sign < 0.0 {
            Orientation::Minus
        } else {
            Orientation::Plus
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    /// g_B between `z_lo` and `z_hi`.
    Slab {
        g: f64,
        z_lo: f64,
        z_hi: f64,
        host: Material,
    },
    /// g_B filling all space.
    Bulk { g: f64, host: Material },
    /// g_I t_I δ(z − z₀) ẑ·orientation. `minus`/`plus` are the media below
    /// and above the plane; `permittivity` is the ε used for this interface.
    Interface {
        g: f64,
        thickness: f64,
        z: f64,
        orientation: Orientation,
        minus: Medium,
        plus: Medium,
        permittivity: f64,
    },
    /// g_I V_J δ(r − r₀) ẑ.
    Junction {
        g: f64,
        volume: f64,
        position: [f64; 3],
        host: Material,
    },
}

/// One term of g(r), optionally labelled and optionally carrying a
/// participation ratio that replaces the geometric mode intensity at the
/// element (see [`PiezoElement::with_participation`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PiezoElement {
    pub kind: ElementKind,
    pub label: Option<String>,
    pub participation: Option<f64>,
    /// Sign of ψ·ẑ at the element; only used together with `participation`.
    pub field_sign: f64,
}

impl PiezoElement {
    fn new(kind: ElementKind) -> Self {
        PiezoElement {
            kind,
            label: None,
            participation: None,
            field_sign: 1.0,
        }
    }

    pub fn slab(g: f64, z_lo: f64, z_hi: f64, host: Material) -> Self {
        Self::new(ElementKind::Slab { g, z_lo, z_hi, host })
    }

    pub fn bulk(g: f64, host: Material) -> Self {
        Self::new(ElementKind::Bulk { g, host })
    }

    /// Interface delta with ε chosen from the two sides.
    pub fn interface(
        g: f64,
        thickness: f64,
        z: f64,
        orientation: Orientation,
        minus: Medium,
        plus: Medium,
    ) -> Self {
        let permittivity = interface_permittivity(&minus, &plus);
        Self::new(ElementKind::Interface {
            g,
            thickness,
            z,
            orientation,
            minus,
            plus,
            permittivity,
        })
    }

    /// Interface delta built from a database pairing. `below` and `above`
    /// name the media on either side of the plane at `z`; the orientation
    /// follows the entry's material1 → material2 convention.
    pub fn interface_from_db(db: &Database, below: &str, above: &str, z: f64) -> Result<Self> {
        let (entry, sign) = db.interface(below, above).map_err(|e| match e {
            Error::NotFound { name, .. } => {
                Error::Configuration(format!("no interface coefficient for pairing '{name}'"))
            }
            other => other,
        })?;
        let PiezoKind::Interface { thickness, .. } = entry.kind else {
            unreachable!("interface lookup returns interface entries")
        };
        let mut el = Self::interface(
            entry.g,
            thickness,
            z,
            Orientation::from_sign(sign),
            db.medium(below)?,
            db.medium(above)?,
        );
        el.label = Some(entry.name.clone());
        Ok(el)
    }

    pub fn junction(g: f64, volume: f64, position: [f64; 3], host: Material) -> Self {
        Self::new(ElementKind::Junction {
            g,
            volume,
            position,
            host,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Fixes the element's participation ratio f. The evaluators then use
    /// f/size (size = t_I, slab width or V_J) in place of |ψ|²·A/V_a
    /// (planar) or |ψ|²/V_a (junction), with `field_sign` as the sign of ψ.
    pub fn with_participation(mut self, ratio: f64, field_sign: f64) -> Self {
        self.participation = Some(ratio);
        self.field_sign = field_sign.signum();
        self
    }

    /// Position along the stack axis used for ordering.
    pub fn z_key(&self) -> f64 {
        match &self.kind {
            ElementKind::Slab { z_lo, .. } => *z_lo,
            ElementKind::Bulk { .. } => f64::NEG_INFINITY,
            ElementKind::Interface { z, .. } => *z,
            ElementKind::Junction { position, .. } => position[2],
        }
    }

    /// Size that converts a participation ratio into an intensity: t_I,
    /// slab width, or V_J. Infinite for bulk.
    pub fn size(&self) -> f64 {
        match &self.kind {
            ElementKind::Slab { z_lo, z_hi, .. } => z_hi - z_lo,
            ElementKind::Bulk { .. } => f64::INFINITY,
            ElementKind::Interface { thickness, .. } => *thickness,
            ElementKind::Junction { volume, .. } => *volume,
        }
    }

    pub fn permittivity(&self) -> f64 {
        match &self.kind {
            ElementKind::Slab { host, .. }
            | ElementKind::Bulk { host, .. }
            | ElementKind::Junction { host, .. } => host.permittivity(),
            ElementKind::Interface { permittivity, .. } => *permittivity,
        }
    }

    pub fn is_planar(&self) -> bool {
        !matches!(self.kind, ElementKind::Junction { .. })
    }

    /// The piezo coefficient magnitude g.
    pub fn coefficient(&self) -> f64 {
        match &self.kind {
            ElementKind::Slab { g, .. }
            | ElementKind::Bulk { g, .. }
            | ElementKind::Interface { g, .. }
            | ElementKind::Junction { g, .. } => *g,
        }
    }

    pub fn display_label(&self, index: usize) -> String {
        self.label.clone().unwrap_or_else(|| {
            let kind = match self.kind {
                ElementKind::Slab { .. } => "slab",
                ElementKind::Bulk { .. } => "bulk",
                ElementKind::Interface { .. } => "interface",
                ElementKind::Junction { .. } => "junction",
            };
            format!("{kind}{index}")
        })
    }

    fn validate(&self) -> Result<()> {
        let g = self.coefficient();
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::invalid(format!("piezo coefficient must be finite and >= 0, got {g}")));
        }
        if let Some(f) = self.participation {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(format!("participation ratio {f} outside [0, 1]")));
            }
        }
        match &self.kind {
            ElementKind::Slab { z_lo, z_hi, .. } => {
                require_finite("slab z_lo", *z_lo)?;
                require_finite("slab z_hi", *z_hi)?;
                if z_hi <= z_lo {
                    return Err(Error::invalid(format!("empty slab [{z_lo}, {z_hi}]")));
                }
            }
            ElementKind::Bulk { .. } => {
                if self.participation.is_some() {
                    return Err(Error::invalid("bulk elements cannot carry a participation ratio"));
                }
            }
            ElementKind::Interface {
                thickness,
                z,
                minus,
                plus,
                permittivity,
                ..
            } => {
                require_positive("interface thickness", *thickness)?;
                require_finite("interface z", *z)?;
                require_positive("interface permittivity", *permittivity)?;
                if minus.is_vacuum() && plus.is_vacuum() {
                    return Err(Error::invalid("interface with vacuum on both sides"));
                }
            }
            ElementKind::Junction {
                volume, position, ..
            } => {
                require_positive("junction volume", *volume)?;
                for c in position {
                    require_finite("junction position", *c)?;
                }
            }
        }
        Ok(())
    }
}

/// Medium occupying each interval of the stack axis. `media[i]` fills
/// `(boundaries[i-1], boundaries[i])`, with the outer media extending to ±∞.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumMap {
    boundaries: Vec<f64>,
    media: Vec<Medium>,
    // Connected run of non-vacuum layers each layer belongs to.
    segments: Vec<Option<usize>>,
}

impl MediumMap {
    pub fn homogeneous(medium: Medium) -> Self {
        Self::new(Vec::new(), vec![medium]).expect("single layer is valid")
    }

    pub fn new(boundaries: Vec<f64>, media: Vec<Medium>) -> Result<Self> {
        if media.len() != boundaries.len() + 1 {
            return Err(Error::invalid(format!(
                "medium map needs {} media for {} boundaries, got {}",
                boundaries.len() + 1,
                boundaries.len(),
                media.len()
            )));
        }
        for b in &boundaries {
            require_finite("medium boundary", *b)?;
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("medium boundaries must be strictly increasing"));
        }
        let mut segments = Vec::with_capacity(media.len());
        let mut next = 0;
        let mut prev_vacuum = true;
        for m in &media {
            if m.is_vacuum() {
                segments.push(None);
                prev_vacuum = true;
            } else {
                if prev_vacuum {
                    next += 1;
                }
                segments.push(Some(next - 1));
                prev_vacuum = false;
            }
        }
        Ok(MediumMap {
            boundaries,
            media,
            segments,
        })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn media(&self) -> &[Medium] {
        &self.media
    }

    /// Layer index just above (`side > 0`) or just below (`side < 0`) `z`.
    pub fn layer_index(&self, z: f64, side: f64) -> usize {
        if side > 0.0 {
            self.boundaries.partition_point(|&b| b <= z)
        } else {
            self.boundaries.partition_point(|&b| b < z)
        }
    }

    pub fn medium_at(&self, z: f64, side: f64) -> &Medium {
        &self.media[self.layer_index(z, side)]
    }

    pub fn segment_at(&self, z: f64, side: f64) -> Option<usize> {
        self.segments[self.layer_index(z, side)]
    }

    /// Acoustic optical path ∫₀^z Ω/v(z′) dz′. Vacuum layers add nothing.
    pub fn phase(&self, z: f64, omega: f64) -> f64 {
        let (lo, hi, sign) = if z >= 0.0 { (0.0, z, 1.0) } else { (z, 0.0, -1.0) };
        if lo == hi {
            return 0.0;
        }
        let mut total = 0.0;
        let mut start = f64::NEG_INFINITY;
        for (i, m) in self.media.iter().enumerate() {
            let end = self.boundaries.get(i).copied().unwrap_or(f64::INFINITY);
            let a = start.max(lo);
            let b = end.min(hi);
            if b > a {
                if let Medium::Material(mat) = m {
                    total += (b - a) * omega / mat.sound_velocity;
                }
            }
            start = end;
        }
        sign * total
    }

    pub fn is_homogeneous(&self) -> bool {
        self.media.len() == 1
    }
}

/// Validated piezoelectric profile of a device stack.
#[derive(Debug, Clone, PartialEq)]
pub struct StackProfile {
    elements: Vec<PiezoElement>,
    media: MediumMap,
    /// Cavity volume V_a, m³.
    pub cavity_volume: f64,
    /// Transverse area A, m².
    pub area: f64,
}

impl StackProfile {
    pub fn elements(&self) -> &[PiezoElement] {
        &self.elements
    }

    pub fn media(&self) -> &MediumMap {
        &self.media
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Returns a copy with participation ratios assigned to labelled
    /// elements. Elements sharing a label split the ratio equally.
    pub fn with_participations(&self, ratios: &[(&str, f64)]) -> Result<StackProfile> {
        let mut out = self.clone();
        for (label, f) in ratios {
            let count = out
                .elements
                .iter()
                .filter(|e| e.label.as_deref() == Some(*label))
                .count();
            if count == 0 {
                return Err(Error::Configuration(format!("no element labelled '{label}'")));
            }
            for e in out.elements.iter_mut().filter(|e| e.label.as_deref() == Some(*label)) {
                e.participation = Some(f / count as f64);
            }
        }
        for e in &out.elements {
            e.validate()?;
        }
        Ok(out)
    }

    /// ∫|g(r)|dz of the planar elements: Σ g_B·width + Σ g_I·t_I (C/m).
    pub fn planar_weight(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match &e.kind {
                ElementKind::Slab { g, z_lo, z_hi, .. } => g * (z_hi - z_lo),
                ElementKind::Interface { g, thickness, .. } => g * thickness,
                ElementKind::Bulk { g, .. } if *g > 0.0 => f64::INFINITY,
                _ => 0.0,
            })
            .sum()
    }
}

/// Validates and sorts `elements`, deriving the medium map from the
/// interfaces (or from the common slab host when there are none).
pub fn build_stack(elements: Vec<PiezoElement>, cavity_volume: f64, area: f64) -> Result<StackProfile> {
    for e in &elements {
        e.validate()?;
    }
    let mut elements = elements;
    sort_elements(&mut elements);
    let media = derive_media(&elements)?;
    finish_stack(elements, media, cavity_volume, area)
}

/// Like [`build_stack`] with an explicit medium map.
pub fn build_stack_with_media(
    elements: Vec<PiezoElement>,
    media: MediumMap,
    cavity_volume: f64,
    area: f64,
) -> Result<StackProfile> {
    for e in &elements {
        e.validate()?;
    }
    let mut elements = elements;
    sort_elements(&mut elements);
    finish_stack(elements, media, cavity_volume, area)
}

fn sort_elements(elements: &mut [PiezoElement]) {
    elements.sort_by(|a, b| a.z_key().total_cmp(&b.z_key()));
}

fn finish_stack(
    elements: Vec<PiezoElement>,
    media: MediumMap,
    cavity_volume: f64,
    area: f64,
) -> Result<StackProfile> {
    require_positive("cavity volume", cavity_volume)?;
    require_positive("area", area)?;
    check_overlaps(&elements)?;
    check_media(&elements, &media)?;
    Ok(StackProfile {
        elements,
        media,
        cavity_volume,
        area,
    })
}

fn check_overlaps(elements: &[PiezoElement]) -> Result<()> {
    let mut extents: Vec<(f64, f64)> = elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::Slab { z_lo, z_hi, .. } => Some((*z_lo, *z_hi)),
            ElementKind::Bulk { .. } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            _ => None,
        })
        .collect();
    extents.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in extents.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Overlap(w[0].0, w[0].1, w[1].0, w[1].1));
        }
    }
    Ok(())
}

fn same_medium(a: &Medium, b: &Medium) -> bool {
    a.name() == b.name()
}

fn check_media(elements: &[PiezoElement], media: &MediumMap) -> Result<()> {
    for e in elements {
        match &e.kind {
            ElementKind::Interface { z, minus, plus, .. } => {
                for (side, declared) in [(-1.0, minus), (1.0, plus)] {
                    let mapped = media.medium_at(*z, side);
                    // A vacuum side may belong to a laterally offset surface
                    // that shares the plane with a buried interface.
                    if !declared.is_vacuum() && !same_medium(declared, mapped) {
                        return Err(Error::Configuration(format!(
                            "interface at z={z:e} declares {} on its {} side but the stack has {}",
                            declared.name(),
                            if side > 0.0 { "upper" } else { "lower" },
                            mapped.name()
                        )));
                    }
                }
            }
            ElementKind::Slab { z_lo, z_hi, host, .. } => {
                let lo = media.layer_index(*z_lo, 1.0);
                let hi = media.layer_index(*z_hi, -1.0);
                if lo != hi || media.media()[lo].name() != host.name {
                    return Err(Error::Configuration(format!(
                        "slab [{z_lo:e}, {z_hi:e}] must lie inside a single {} layer",
                        host.name
                    )));
                }
            }
            ElementKind::Bulk { host, .. } => {
                if !media.is_homogeneous() || media.media()[0].name() != host.name {
                    return Err(Error::Configuration(
                        "bulk element requires a homogeneous medium of its host".into(),
                    ));
                }
            }
            ElementKind::Junction { .. } => {}
        }
    }
    Ok(())
}

fn merge_side<'a>(sides: impl Iterator<Item = &'a Medium>, z: f64) -> Result<Medium> {
    let mut found: Option<&Medium> = None;
    for m in sides.filter(|m| !m.is_vacuum()) {
        match found {
            Some(f) if !same_medium(f, m) => {
                return Err(Error::Configuration(format!(
                    "coplanar interfaces at z={z:e} disagree ({} vs {}); supply the medium map explicitly",
                    f.name(),
                    m.name()
                )))
            }
            _ => found = Some(m),
        }
    }
    Ok(found.cloned().unwrap_or(Medium::Vacuum))
}

fn derive_media(elements: &[PiezoElement]) -> Result<MediumMap> {
    let interfaces: Vec<(f64, &Medium, &Medium)> = elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::Interface { z, minus, plus, .. } => Some((*z, minus, plus)),
            _ => None,
        })
        .collect();

    if interfaces.is_empty() {
        let mut host: Option<&Material> = None;
        for e in elements {
            if let ElementKind::Slab { host: h, .. } | ElementKind::Bulk { host: h, .. } = &e.kind {
                match host {
                    Some(prev) if prev.name != h.name => {
                        return Err(Error::Configuration(
                            "slabs in different hosts need an explicit medium map".into(),
                        ))
                    }
                    _ => host = Some(h),
                }
            }
        }
        return Ok(MediumMap::homogeneous(
            host.cloned().map(Medium::Material).unwrap_or(Medium::Vacuum),
        ));
    }

    let mut boundaries = Vec::new();
    let mut media = Vec::new();
    let mut i = 0;
    while i < interfaces.len() {
        let z = interfaces[i].0;
        let j = i + interfaces[i..].iter().take_while(|x| x.0 == z).count();
        let group = &interfaces[i..j];
        let below = merge_side(group.iter().map(|x| x.1), z)?;
        let above = merge_side(group.iter().map(|x| x.2), z)?;
        if let Some(prev) = media.last() {
            if !same_medium(prev, &below) {
                return Err(Error::Configuration(format!(
                    "medium below the interface at z={z:e} ({}) differs from the medium above the \
                     previous interface ({}); supply the medium map explicitly",
                    below.name(),
                    prev.name()
                )));
            }
        } else {
            media.push(below);
        }
        boundaries.push(z);
        media.push(above);
        i = j;
    }
    MediumMap::new(boundaries, media)
}

/// Microstrip cross-section dimensions, all in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrostripGeometry {
    /// Strip width W.
    pub width: f64,
    /// Dielectric thickness d between strip and ground plane.
    pub separation: f64,
    pub metal_thickness: f64,
}

/// Labels used for the microstrip interface classes.
pub const LABEL_MV: &str = "MV";
pub const LABEL_DM: &str = "DM";
pub const LABEL_DV: &str = "DV";

/// Quasi-1D microstrip stack along the axis through the strip:
///
/// ```text
///   z > t        vacuum
///   0 < z < t    metal strip          MV delta at z = t
///  -d < z < 0    dielectric           DM (strip) and DV (exposed surface) at z = 0
///   z < -d       metal ground plane   DM delta at z = -d
/// ```
///
/// The exposed dielectric surface beside the strip shares the z = 0 plane.
/// Area and cavity volume are per metre of line (A = W·1 m, V_a = W·d·1 m);
/// spectra assign participation ratios per label, which supersede them.
pub fn microstrip_profile(
    db: &Database,
    geometry: MicrostripGeometry,
    metal: &Material,
    dielectric: &Material,
) -> Result<StackProfile> {
    let MicrostripGeometry {
        width,
        separation,
        metal_thickness,
    } = geometry;
    require_positive("strip width", width)?;
    require_positive("dielectric thickness", separation)?;
    require_positive("metal thickness", metal_thickness)?;

    let m = metal.name.as_str();
    let d = dielectric.name.as_str();
    let relabel = |e: PiezoElement, label: &str, sign: f64| {
        let mut e = e.with_label(label);
        e.field_sign = sign;
        e
    };
    // E points out of the strip top and from the strip towards the ground
    // plane inside the dielectric.
    let elements = vec![
        relabel(PiezoElement::interface_from_db(db, m, "vacuum", metal_thickness)?, LABEL_MV, 1.0),
        relabel(PiezoElement::interface_from_db(db, d, m, 0.0)?, LABEL_DM, -1.0),
        relabel(PiezoElement::interface_from_db(db, d, "vacuum", 0.0)?, LABEL_DV, -1.0),
        relabel(PiezoElement::interface_from_db(db, m, d, -separation)?, LABEL_DM, -1.0),
    ];
    let media = MediumMap::new(
        vec![-separation, 0.0, metal_thickness],
        vec![
            Medium::Material(metal.clone()),
            Medium::Material(dielectric.clone()),
            Medium::Material(metal.clone()),
            Medium::Vacuum,
        ],
    )?;
    build_stack_with_media(elements, media, width * separation, width)
}

/// Electric field sampled on a regular rectilinear grid. Each sample stands
/// for the cell of volume Δx·Δy·Δz centred on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub shape: [usize; 3],
    /// Row-major (x slowest, z fastest) vector samples.
    pub values: Vec<[Complex64; 3]>,
}

impl SampledField {
    pub fn new(
        origin: [f64; 3],
        spacing: [f64; 3],
        shape: [usize; 3],
        values: Vec<[Complex64; 3]>,
    ) -> Result<Self> {
        for s in spacing {
            require_positive("grid spacing", s)?;
        }
        for o in origin {
            require_finite("grid origin", o)?;
        }
        if shape.contains(&0) {
            return Err(Error::invalid("grid must have at least one sample per axis"));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::invalid(format!(
                "grid {:?} needs {} samples, got {}",
                shape,
                shape.iter().product::<usize>(),
                values.len()
            )));
        }
        if values.iter().flatten().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("field samples must be finite"));
        }
        Ok(SampledField {
            origin,
            spacing,
            shape,
            values,
        })
    }

    /// Builds a field by evaluating `f` at every grid point.
    pub fn from_fn(
        origin: [f64; 3],
        spacing: [f64; 3],
        shape: [usize; 3],
        f: impl Fn([f64; 3]) -> [Complex64; 3],
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(shape.iter().product());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    values.push(f(Self::point(origin, spacing, [i, j, k])));
                }
            }
        }
        Self::new(origin, spacing, shape, values)
    }

    fn point(origin: [f64; 3], spacing: [f64; 3], idx: [usize; 3]) -> [f64; 3] {
        [
            origin[0] + idx[0] as f64 * spacing[0],
            origin[1] + idx[1] as f64 * spacing[1],
            origin[2] + idx[2] as f64 * spacing[2],
        ]
    }

    pub fn position(&self, idx: [usize; 3]) -> [f64; 3] {
        Self::point(self.origin, self.spacing, idx)
    }

    pub fn index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// ∫|E|² d³r by the cell-sum rule.
    pub fn energy_integral(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * self.cell_volume()
    }

    fn scaled(&self, factor: f64) -> SampledField {
        SampledField {
            values: self
                .values
                .iter()
                .map(|v| [v[0] * factor, v[1] * factor, v[2] * factor])
                .collect(),
            ..self.clone()
        }
    }

    /// Multilinear interpolation of the z component; zero outside the grid.
    pub fn interpolate_z(&self, r: [f64; 3]) -> Complex64 {
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let u = (r[a] - self.origin[a]) / self.spacing[a];
            let n = self.shape[a];
            if n == 1 {
                if u.abs() > 1e-9 {
                    return Complex64::new(0.0, 0.0);
                }
                base[a] = 0;
                frac[a] = 0.0;
                continue;
            }
            if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
                return Complex64::new(0.0, 0.0);
            }
            let u = u.clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                if self.shape[a] == 1 {
                    if bit == 1 {
                        w = 0.0;
                    }
                    idx[a] = 0;
                    continue;
                }
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += self.values[self.index(idx)][2] * w;
            }
        }
        acc
    }
}

/// Photon mode shape function ψ(r).
#[derive(Debug, Clone, PartialEq)]
pub enum ModeShape {
    /// ψ = ẑ everywhere.
    Uniform,
    /// ψ = e^{i q⊥·r⊥} ẑ with q⊥ in the transverse (x, y) plane, rad/m.
    PlaneWaveTransverse { q_perp: [f64; 2] },
    /// Normalised sampled field.
    Sampled(SampledField),
}

impl ModeShape {
    /// Photon-like transverse wave at angular frequency Ω in a medium of
    /// relative permittivity ε_r, travelling along x.
    pub fn photon_plane_wave(omega: f64, rel_permittivity: f64) -> Self {
        ModeShape::PlaneWaveTransverse {
            q_perp: [omega * rel_permittivity.sqrt() / C_LIGHT, 0.0],
        }
    }

    /// ψ·ẑ at `r`.
    pub fn z_component(&self, r: [f64; 3]) -> Complex64 {
        match self {
            ModeShape::Uniform => Complex64::new(1.0, 0.0),
            ModeShape::PlaneWaveTransverse { q_perp } => {
                Complex64::from_polar(1.0, q_perp[0] * r[0] + q_perp[1] * r[1])
            }
            ModeShape::Sampled(f) => f.interpolate_z(r),
        }
    }

    pub fn transverse_wavevector(&self) -> [f64; 2] {
        match self {
            ModeShape::PlaneWaveTransverse { q_perp } => *q_perp,
            _ => [0.0, 0.0],
        }
    }
}

/// Applies the multimode substitution ψ = E/√(2∫|E|²d³r / V_a), so that
/// ∫|ψ|²d³r = V_a/2 on the sample grid.
pub fn normalize_mode(raw: &SampledField, cavity_volume: f64) -> Result<ModeShape> {
    require_positive("cavity volume", cavity_volume)?;
    let energy = raw.energy_integral();
    if energy == 0.0 {
        return Err(Error::Degenerate("field is zero everywhere".into()));
    }
    let scale = (2.0 * energy / cavity_volume).sqrt().recip();
    let field = raw.scaled(scale);
    let check = field.energy_integral() / cavity_volume;
    debug_assert!((check - 0.5).abs() < 1e-12, "normalisation drifted: {check}");
    Ok(ModeShape::Sampled(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ANGSTROM, MICRON};
    use proptest::prelude::*;

    fn db() -> Database {
        Database::builtin()
    }

    fn mat(name: &str) -> Material {
        db().material(name).unwrap().clone()
    }

    #[test]
    fn single_interface_profile() {
        let e = PiezoElement::interface_from_db(&db(), "Al", "vacuum", 0.0).unwrap();
        let p = build_stack(vec![e], 1e-12, 1e-8).unwrap();
        assert_eq!(p.elements().len(), 1);
        assert_eq!(p.media().boundaries(), &[0.0]);
        assert_eq!(p.media().media()[0].name(), "Al");
        assert!(p.media().media()[1].is_vacuum());
    }

    #[test]
    fn substrate_slab_profile() {
        let l = 1000.0 * ANGSTROM;
        let p = build_stack(vec![PiezoElement::slab(0.09, -l, 0.0, mat("SiO2"))], 1e-12, 1e-8).unwrap();
        assert!(p.media().is_homogeneous());
        match &p.elements()[0].kind {
            ElementKind::Slab { z_lo, z_hi, g, .. } => assert_eq!((*z_lo, *z_hi, *g), (-l, 0.0, 0.09)),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn delta_pair_profile_is_sorted() {
        let s = mat("Al2O3");
        let d = 2.0 * MICRON;
        let el = |z| PiezoElement::interface(0.1, 2e-10, z, Orientation::Plus, s.clone().into(), s.clone().into());
        let p = build_stack(vec![el(0.0), el(-d)], 1e-12, 1e-8).unwrap();
        let zs: Vec<f64> = p.elements().iter().map(|e| e.z_key()).collect();
        assert_eq!(zs, vec![-d, 0.0]);
        assert_eq!(zs[1] - zs[0], d);
    }

    #[test]
    fn overlapping_slabs_rejected() {
        let q = mat("SiO2");
        let r = build_stack(
            vec![PiezoElement::slab(1.0, 0.0, 2.0, q.clone()), PiezoElement::slab(1.0, 1.0, 3.0, q)],
            1.0,
            1.0,
        );
        assert!(matches!(r, Err(Error::Overlap(..))));
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        let q = mat("SiO2");
        assert!(build_stack(vec![PiezoElement::slab(1.0, f64::NAN, 0.0, q.clone())], 1.0, 1.0).is_err());
        let e = PiezoElement::interface(1.0, 1e-10, f64::INFINITY, Orientation::Plus, q.into(), Medium::Vacuum);
        assert!(build_stack(vec![e], 1.0, 1.0).is_err());
        assert!(build_stack(vec![], 0.0, 1.0).is_err());
    }

    #[test]
    fn microstrip_has_three_interface_classes() {
        let db = db();
        let geo = MicrostripGeometry {
            width: 20.0 * MICRON,
            separation: 2.0 * MICRON,
            metal_thickness: 0.2 * MICRON,
        };
        let p = microstrip_profile(&db, geo, &mat("Al"), &mat("Al2O3")).unwrap();
        let mut labels: Vec<&str> = p.elements().iter().filter_map(|e| e.label.as_deref()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels, vec!["DM", "DV", "MV"]);
        let dm: Vec<&PiezoElement> = p.elements().iter().filter(|e| e.label.as_deref() == Some("DM")).collect();
        assert_eq!(dm.len(), 2);
        assert_eq!(dm[1].z_key() - dm[0].z_key(), 2.0 * MICRON);
        // Bottom interface runs dielectric -> metal downwards, so its normal flips.
        match (&dm[0].kind, &dm[1].kind) {
            (
                ElementKind::Interface { orientation: bottom, g, .. },
                ElementKind::Interface { orientation: top, .. },
            ) => {
                assert_eq!(*bottom, Orientation::Minus);
                assert_eq!(*top, Orientation::Plus);
                assert_eq!(*g, 0.06);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn microstrip_unknown_pairing_is_configuration_error() {
        let r = microstrip_profile(
            &db(),
            MicrostripGeometry {
                width: 1e-5,
                separation: 1e-6,
                metal_thickness: 1e-7,
            },
            &mat("Nb"),
            &mat("Al2O3"),
        );
        assert!(matches!(r, Err(Error::Configuration(_))), "{r:?}");
    }

    #[test]
    fn coplanar_conflict_needs_explicit_map() {
        let al: Medium = mat("Al").into();
        let nb: Medium = mat("Nb").into();
        let s: Medium = mat("Al2O3").into();
        let a = PiezoElement::interface(0.1, 1e-10, 0.0, Orientation::Plus, s.clone(), al);
        let b = PiezoElement::interface(0.1, 1e-10, 0.0, Orientation::Plus, s, nb);
        assert!(matches!(build_stack(vec![a, b], 1.0, 1.0), Err(Error::Configuration(_))));
    }

    #[test]
    fn phase_accumulates_per_layer() {
        let al = mat("Al");
        let s = mat("Al2O3");
        let map = MediumMap::new(vec![0.0, 1e-6], vec![s.clone().into(), al.clone().into(), Medium::Vacuum]).unwrap();
        let w = 1e10;
        assert!((map.phase(2e-6, w) - w * 1e-6 / al.sound_velocity).abs() < 1e-15);
        assert!((map.phase(-1e-6, w) + w * 1e-6 / s.sound_velocity).abs() < 1e-15);
        assert_eq!(map.segment_at(0.5e-6, 1.0), Some(0));
        assert_eq!(map.segment_at(-1.0, 1.0), Some(0));
        assert_eq!(map.segment_at(2e-6, 1.0), None);
    }

    #[test]
    fn uniform_field_normalises_to_inverse_sqrt2() {
        let shape = [3, 4, 5];
        let spacing = [1e-6, 2e-6, 0.5e-6];
        let e0 = 3.7;
        let f = SampledField::from_fn([0.0; 3], spacing, shape, |_| {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(e0, 0.0)]
        })
        .unwrap();
        let v_a = f.cell_volume() * 60.0;
        let ModeShape::Sampled(psi) = normalize_mode(&f, v_a).unwrap() else { panic!() };
        for v in &psi.values {
            assert!((v[2].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_samples_keep_constant_modulus() {
        let k = 2.0e5;
        let f = SampledField::from_fn([0.0; 3], [1e-6; 3], [6, 2, 3], |r| {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::from_polar(2.0, k * r[0])]
        })
        .unwrap();
        let ModeShape::Sampled(psi) = normalize_mode(&f, 1e-15).unwrap() else { panic!() };
        let m0 = psi.values[0][2].norm();
        for v in &psi.values {
            assert!((v[2].norm() - m0).abs() < 1e-12 * m0);
        }
    }

    #[test]
    fn zero_field_is_degenerate() {
        let f = SampledField::new([0.0; 3], [1.0; 3], [1, 1, 2], vec![[Complex64::new(0.0, 0.0); 3]; 2]).unwrap();
        assert!(matches!(normalize_mode(&f, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn interpolation_is_exact_for_linear_fields() {
        let f = SampledField::from_fn([0.0; 3], [1.0, 2.0, 0.5], [3, 3, 4], |r| {
            [Complex64::default(), Complex64::default(), Complex64::new(1.0 + r[0] - 2.0 * r[1] + 3.0 * r[2], r[2])]
        })
        .unwrap();
        let v = f.interpolate_z([0.3, 1.7, 0.9]);
        assert!((v.re - (1.0 + 0.3 - 3.4 + 2.7)).abs() < 1e-12);
        assert!((v.im - 0.9).abs() < 1e-12);
        assert_eq!(f.interpolate_z([5.0, 0.0, 0.0]), Complex64::default());
    }

    proptest! {
        // Independent quadrature oracle: explicit triple loop over the grid.
        #[test]
        fn random_field_normalises_to_half(
            seed in proptest::collection::vec(-1.0f64..1.0, 2 * 3 * 4 * 3 * 2),
            dx in 1e-7f64..1e-5,
            v_a in 1e-18f64..1e-9,
        ) {
            let shape = [2, 3, 4];
            let mut values = Vec::new();
            for c in seed.chunks(6) {
                values.push([
                    Complex64::new(c[0], c[1]),
                    Complex64::new(c[2], c[3]),
                    Complex64::new(c[4], c[5]),
                ]);
            }
            prop_assume!(values.iter().flatten().any(|c| c.norm() > 1e-3));
            let f = SampledField::new([0.0; 3], [dx, 2.0 * dx, 0.5 * dx], shape, values).unwrap();
            let ModeShape::Sampled(psi) = normalize_mode(&f, v_a).unwrap() else { panic!() };
            let mut sum = 0.0;
            for i in 0..2 { for j in 0..3 { for k in 0..4 {
                let v = psi.values[psi.index([i, j, k])];
                sum += v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr();
            }}}
            let integral = sum * dx * 2.0 * dx * 0.5 * dx;
            prop_assert!((integral / v_a - 0.5).abs() < 1e-12);
        }

        // Piezo weight by brute-force midpoint quadrature of |g(z)| with
        // deltas added at their strengths.
        #[test]
        fn planar_weight_matches_quadrature(
            widths in proptest::collection::vec(1e-8f64..1e-6, 1..4),
            gs in proptest::collection::vec(0.0f64..1.0, 4),
            gi in 0.0f64..1.0,
            t in 1e-10f64..5e-10,
        ) {
            let q = mat("SiO2");
            let mut els = Vec::new();
            let mut z = 0.0;
            let mut spans = Vec::new();
            for (w, g) in widths.iter().zip(&gs) {
                els.push(PiezoElement::slab(*g, z, z + w, q.clone()));
                spans.push((z, z + w, *g));
                z += w + 1e-7;
            }
            els.push(PiezoElement::interface(gi, t, -1e-7, Orientation::Plus, q.clone().into(), q.clone().into()));
            let p = build_stack(els, 1.0, 1.0).unwrap();
            let n = 20000;
            let (a, b) = (-2e-7, z);
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let x = a + (i as f64 + 0.5) * h;
                for (lo, hi, g) in &spans {
                    if x >= *lo && x < *hi { acc += g * h; }
                }
            }
            acc += gi * t;
            let w = p.planar_weight();
            prop_assert!((w - acc).abs() <= 8.0 * h + 1e-12 * w);
        }
    }
}
