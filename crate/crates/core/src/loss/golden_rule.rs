//! Golden-rule evaluator: |F|² integrated over the phonon energy shell.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::form_factor::planar_transform;
use super::quadrature::sphere_rule;
use super::sources::{self, PointGroup, Sources, DIRECTIONS};
use super::{Accumulator, Evaluator, LossResult};
use crate::error::Result;
use crate::geometry::{ModeShape, StackProfile};
use crate::materials::ThermalState;

/// 1/Q from Fermi's golden rule.
///
/// Planar elements emit along k_z = ±Ω/v only, so the shell integral
/// reduces to a sum over the two directions and the material channels they
/// launch into; elements sharing a channel interfere. Point junctions (and
/// sampled modes) use the full 4π shell.
pub fn golden_rule_loss(profile: &StackProfile, mode: &ModeShape, state: &ThermalState) -> Result<LossResult> {
    let theta = state.prefactor()?;
    let omega = state.omega;
    let src = sources::prepare(profile, mode, omega)?;
    let mut acc = Accumulator::new(src.labels.len());
    planar(&src, profile, omega, theta, &mut acc);
    for group in &src.groups {
        point_group(group, omega, theta, &mut acc);
    }
    Ok(acc.finish(&src.labels, &src.participation, Evaluator::GoldenRule))
}

fn planar(src: &Sources, profile: &StackProfile, omega: f64, theta: f64, acc: &mut Accumulator) {
    let media = profile.media();
    let pref = omega * theta / 4.0;
    for (d, s) in DIRECTIONS.into_iter().enumerate() {
        let mut channels: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for p in &src.planar {
            let Some(em) = p.emission[d] else { continue };
            let el = &profile.elements()[p.index];
            let t = planar_transform(el, s, |z| media.phase(z, omega), p.local_k);
            let a = t * (p.scale / (p.permittivity * em.stiffness).sqrt());
            channels.entry(em.segment).or_default().push((p.index, a));
        }
        for amps in channels.values() {
            for (n, (i, ai)) in amps.iter().enumerate() {
                acc.add_self(*i, pref * ai.norm_sqr());
                for (j, aj) in &amps[n + 1..] {
                    acc.add_cross(*i, *j, pref * 2.0 * (ai * aj.conj()).re);
                }
            }
        }
    }
}

fn point_group(group: &PointGroup, omega: f64, theta: f64, acc: &mut Accumulator) {
    let v = group.host.sound_velocity;
    let k = omega / v;
    let c = group.centroid();
    let n_theta = (k * group.radius()).ceil() as usize + 16;
    let rule = sphere_rule(n_theta, 2 * n_theta);
    let m = group.members.len();
    let mut own = vec![0.0; m];
    let mut cross = vec![0.0; m * m];
    let mut f = vec![Complex64::default(); m];
    for (dir, w) in &rule {
        for (slot, (_, pts)) in f.iter_mut().zip(&group.members) {
            *slot = pts
                .iter()
                .map(|(r, amp)| {
                    let phase = k * (dir[0] * (r[0] - c[0]) + dir[1] * (r[1] - c[1]) + dir[2] * (r[2] - c[2]));
                    amp * Complex64::from_polar(1.0, -phase)
                })
                .sum();
        }
        for a in 0..m {
            own[a] += w * f[a].norm_sqr();
            for b in a + 1..m {
                cross[a * m + b] += w * 2.0 * (f[a] * f[b].conj()).re;
            }
        }
    }
    let pref = omega.powi(3) * theta / (16.0 * PI * PI * group.host.mass_density * v.powi(5));
    for a in 0..m {
        acc.add_self(group.members[a].0, pref * own[a]);
        for b in a + 1..m {
            acc.add_cross(group.members[a].0, group.members[b].0, pref * cross[a * m + b]);
        }
    }
}
