//! Real-space evaluator: the double integral over r, r′ with the sinc
//! kernel, with the transverse integral done analytically.
//!
//! For planar elements ∫d²ρ sinc(K|r − r′|) = 2π cos(KΔz)/K², which splits
//! into the two propagation directions e^{∓iKΔz}; in a layered stack KΔz
//! becomes the accumulated phase Φ(z) − Φ(z′) and the pair couples only
//! through a channel both elements launch into.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::OscillatoryQuadrature;
use super::sources::{self, PlanarSource, PointGroup, DIRECTIONS};
use super::{Accumulator, Evaluator, LossResult};
use crate::error::Result;
use crate::geometry::{ElementKind, MediumMap, ModeShape, PiezoElement, StackProfile};
use crate::materials::ThermalState;

/// 1/Q by direct evaluation of the double integral, with default
/// quadrature settings.
pub fn real_space_loss(profile: &StackProfile, mode: &ModeShape, state: &ThermalState) -> Result<LossResult> {
    real_space_loss_with(profile, mode, state, &OscillatoryQuadrature::default())
}

/// As [`real_space_loss`] with explicit quadrature settings. `abs_tol` is
/// ignored; each pair uses `rel_tol` times the product of the two
/// elements' ∫|g|dz as its absolute floor.
pub fn real_space_loss_with(
    profile: &StackProfile,
    mode: &ModeShape,
    state: &ThermalState,
    quad: &OscillatoryQuadrature,
) -> Result<LossResult> {
    let theta = state.prefactor()?;
    let omega = state.omega;
    let src = sources::prepare(profile, mode, omega)?;
    let mut acc = Accumulator::new(src.labels.len());

    let pref = omega * theta / 4.0;
    for (d, s) in DIRECTIONS.into_iter().enumerate() {
        let mut channels: BTreeMap<usize, Vec<(&PlanarSource, f64)>> = BTreeMap::new();
        for p in &src.planar {
            if let Some(em) = p.emission[d] {
                let amp = p.scale / (p.permittivity * em.stiffness).sqrt();
                channels.entry(em.segment).or_default().push((p, amp));
            }
        }
        for members in channels.values() {
            for (n, (pi, ai)) in members.iter().enumerate() {
                for (pj, aj) in &members[n..] {
                    let ei = &profile.elements()[pi.index];
                    let ej = &profile.elements()[pj.index];
                    let mut q = *quad;
                    q.abs_tol = quad.rel_tol * weight(ei) * weight(ej);
                    let i = pair_integral(ei, ej, s, profile.media(), omega, &q)?;
                    let value = pref * ai * aj * i.re;
                    if pi.index == pj.index {
                        acc.add_self(pi.index, value);
                    } else {
                        acc.add_cross(pi.index, pj.index, 2.0 * value);
                    }
                }
            }
        }
    }

    for group in &src.groups {
        point_group(group, omega, theta, &mut acc);
    }
    Ok(acc.finish(&src.labels, &src.participation, Evaluator::RealSpace))
}

fn weight(el: &PiezoElement) -> f64 {
    match &el.kind {
        ElementKind::Interface { g, thickness, .. } => g * thickness,
        ElementKind::Slab { g, z_lo, z_hi, .. } => g * (z_hi - z_lo),
        _ => 0.0,
    }
}

/// Planar element as a 1D source: a point strength or a uniform density.
enum Line {
    Point { z: f64, strength: f64 },
    Span { lo: f64, hi: f64, density: f64, wavelength: f64 },
}

fn line(el: &PiezoElement, omega: f64) -> Line {
    match &el.kind {
        ElementKind::Interface {
            g,
            thickness,
            z,
            orientation,
            ..
        } => Line::Point {
            z: *z,
            strength: orientation.sign() * g * thickness,
        },
        ElementKind::Slab { g, z_lo, z_hi, host } => Line::Span {
            lo: *z_lo,
            hi: *z_hi,
            density: *g,
            wavelength: 2.0 * PI * host.sound_velocity / omega,
        },
        _ => unreachable!("only interfaces and slabs are planar sources"),
    }
}

/// ∫∫ g_i(z) g_j(z′) e^{−is(Φ(z) − Φ(z′))} dz dz′.
fn pair_integral(
    ei: &PiezoElement,
    ej: &PiezoElement,
    s: f64,
    media: &MediumMap,
    omega: f64,
    quad: &OscillatoryQuadrature,
) -> Result<Complex64> {
    let phi = |z: f64| media.phase(z, omega);
    let kernel = |z: f64, zp: f64| Complex64::from_polar(1.0, -s * (phi(z) - phi(zp)));
    Ok(match (line(ei, omega), line(ej, omega)) {
        (Line::Point { z, strength: a }, Line::Point { z: zp, strength: b }) => kernel(z, zp) * (a * b),
        (Line::Point { z, strength: a }, Line::Span { lo, hi, density, wavelength }) => {
            quad.integrate(|zp| kernel(z, zp), lo, hi, wavelength)? * (a * density)
        }
        (Line::Span { lo, hi, density, wavelength }, Line::Point { z: zp, strength: b }) => {
            quad.integrate(|z| kernel(z, zp), lo, hi, wavelength)? * (density * b)
        }
        (
            Line::Span { lo, hi, density: a, wavelength: la },
            Line::Span { lo: lo2, hi: hi2, density: b, wavelength: lb },
        ) => quad.integrate_2d(kernel, (lo, hi), (lo2, hi2), la.min(lb))? * (a * b),
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn point_group(group: &PointGroup, omega: f64, theta: f64, acc: &mut Accumulator) {
    let v = group.host.sound_velocity;
    let k = omega / v;
    let pref = omega.powi(3) * theta / (4.0 * PI * group.host.mass_density * v.powi(5));
    let pair = |a: &[([f64; 3], Complex64)], b: &[([f64; 3], Complex64)]| -> Complex64 {
        let mut total = Complex64::default();
        for (ra, wa) in a {
            for (rb, wb) in b {
                let dist = ((ra[0] - rb[0]).powi(2) + (ra[1] - rb[1]).powi(2) + (ra[2] - rb[2]).powi(2)).sqrt();
                total += wa * wb.conj() * sinc(k * dist);
            }
        }
        total
    };
    for (n, (i, pts_i)) in group.members.iter().enumerate() {
        acc.add_self(*i, pref * pair(pts_i, pts_i).re);
        for (j, pts_j) in &group.members[n + 1..] {
            acc.add_cross(*i, *j, pref * 2.0 * pair(pts_i, pts_j).re);
        }
    }
}
