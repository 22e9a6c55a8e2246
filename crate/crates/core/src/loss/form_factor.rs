//! Coupling form factor F(k) = ∫d³r g(r)·ψ(r) e^{−ik·r}.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ElementKind, ModeShape, PiezoElement, SampledField, StackProfile};
use crate::loss::quadrature::MIN_NODES_PER_WAVELENGTH;

/// Positions and complex weights of point sources.
pub(crate) type PointSources = Vec<([f64; 3], Complex64)>;

/// Value of the form factor at one wavevector. For planar elements against
/// a transverse plane wave the transverse integral is a Kronecker delta
/// (k⊥ = q⊥) times the area A; `momentum_conserved` records whether the
/// requested k satisfies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormFactor {
    /// C·m for dimensionless ψ.
    pub value: Complex64,
    pub wavevector: [f64; 3],
    pub momentum_conserved: bool,
}

/// 1D transform of one planar element, ∫ g(z) e^{−i s φ(z)} dz, where `phase`
/// is the accumulated phase φ(z) and `local_k` its slope inside a slab.
/// Orientation signs are included; the mode amplitude is not.
pub(crate) fn planar_transform(
    element: &PiezoElement,
    s: f64,
    phase: impl Fn(f64) -> f64,
    local_k: f64,
) -> Complex64 {
    match &element.kind {
        ElementKind::Interface {
            g,
            thickness,
            z,
            orientation,
            ..
        } => Complex64::from_polar(orientation.sign() * g * thickness, -s * phase(*z)),
        ElementKind::Slab { g, z_lo, z_hi, .. } => {
            let w = z_hi - z_lo;
            let start = Complex64::from_polar(*g, -s * phase(*z_lo));
            let x = s * local_k * w;
            if x == 0.0 {
                start * w
            } else {
                // (1 − e^{−ix}) / (i s k)
                start * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -x))
                    / Complex64::new(0.0, s * local_k)
            }
        }
        // Transform is δ(k_z − q_z); nothing off the photon's own momentum.
        ElementKind::Bulk { .. } => Complex64::default(),
        ElementKind::Junction { .. } => unreachable!("junctions are not planar"),
    }
}

/// Each axis must hold at least ten samples per wavelength of the k
/// component along it.
fn check_resolution(field: &SampledField, k: [f64; 3]) -> Result<()> {
    for (a, &ka) in k.iter().enumerate() {
        if ka == 0.0 {
            continue;
        }
        let wavelength = 2.0 * std::f64::consts::PI / ka.abs();
        let spacing = field.spacing[a];
        let samples = wavelength / spacing;
        if samples < MIN_NODES_PER_WAVELENGTH {
            return Err(Error::Resolution {
                spacing,
                wavelength,
                samples_per_wavelength: samples,
            });
        }
    }
    Ok(())
}

/// Point sources g·ψ·dV (C·m) of every element on a sampled mode grid,
/// grouped by element index.
pub(crate) fn sampled_sources(
    profile: &StackProfile,
    field: &SampledField,
) -> Vec<(usize, PointSources)> {
    let [nx, ny, nz] = field.shape;
    let area = field.spacing[0] * field.spacing[1];
    let dv = field.cell_volume();
    let mut out = Vec::new();
    for (idx, el) in profile.elements().iter().enumerate() {
        let mut pts = Vec::new();
        match &el.kind {
            ElementKind::Interface {
                g,
                thickness,
                z,
                orientation,
                ..
            } => {
                let strength = orientation.sign() * g * thickness * area;
                for i in 0..nx {
                    for j in 0..ny {
                        let p = field.position([i, j, 0]);
                        let r = [p[0], p[1], *z];
                        let psi = field.interpolate_z(r);
                        if psi != Complex64::default() {
                            pts.push((r, psi * strength));
                        }
                    }
                }
            }
            ElementKind::Slab { g, z_lo, z_hi, .. } => {
                for i in 0..nx {
                    for j in 0..ny {
                        for k in 0..nz {
                            let r = field.position([i, j, k]);
                            if r[2] >= *z_lo && r[2] < *z_hi {
                                pts.push((r, field.values[field.index([i, j, k])][2] * (g * dv)));
                            }
                        }
                    }
                }
            }
            ElementKind::Bulk { g, .. } => {
                for i in 0..nx {
                    for j in 0..ny {
                        for k in 0..nz {
                            let r = field.position([i, j, k]);
                            pts.push((r, field.values[field.index([i, j, k])][2] * (g * dv)));
                        }
                    }
                }
            }
            ElementKind::Junction {
                g,
                volume,
                position,
                ..
            } => {
                let psi = field.interpolate_z(*position);
                pts.push((*position, psi * (g * volume)));
            }
        }
        out.push((idx, pts));
    }
    out
}

fn norm3(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Evaluates the coupling form factor of `profile` against `mode` at `k`.
///
/// Analytic for uniform and transverse plane-wave modes; cell-sum
/// quadrature on the sample grid for sampled modes, which must resolve
/// the requested wavelength with at least ten samples.
pub fn form_factor(profile: &StackProfile, mode: &ModeShape, k: [f64; 3]) -> Result<FormFactor> {
    for c in k {
        if !c.is_finite() {
            return Err(Error::invalid("wavevector must be finite"));
        }
    }
    match mode {
        ModeShape::Sampled(field) => {
            check_resolution(field, k)?;
            let value = sampled_sources(profile, field)
                .iter()
                .flat_map(|(_, pts)| pts.iter())
                .map(|(r, w)| w * Complex64::from_polar(1.0, -(k[0] * r[0] + k[1] * r[1] + k[2] * r[2])))
                .sum();
            Ok(FormFactor {
                value,
                wavevector: k,
                momentum_conserved: true,
            })
        }
        ModeShape::Uniform | ModeShape::PlaneWaveTransverse { .. } => {
            let q = mode.transverse_wavevector();
            let tol = 1e-12 * (norm3(k) + q[0].abs() + q[1].abs()).max(f64::MIN_POSITIVE);
            let conserved = (k[0] - q[0]).abs() <= tol && (k[1] - q[1]).abs() <= tol;
            let mut value = Complex64::default();
            for el in profile.elements() {
                match &el.kind {
                    ElementKind::Junction { g, volume, position, .. } => {
                        let psi = mode.z_component(*position);
                        let phase = k[0] * position[0] + k[1] * position[1] + k[2] * position[2];
                        value += psi * Complex64::from_polar(g * volume, -phase);
                    }
                    ElementKind::Bulk { g, .. } if conserved && k[2] == 0.0 && *g > 0.0 => {
                        return Err(Error::invalid(
                            "bulk form factor is a delta function at k = q and has no finite value there",
                        ));
                    }
                    _ if conserved => {
                        value += profile.area * planar_transform(el, 1.0, |z| k[2] * z, k[2]);
                    }
                    _ => {}
                }
            }
            Ok(FormFactor {
                value,
                wavevector: k,
                momentum_conserved: conserved,
            })
        }
    }
}
