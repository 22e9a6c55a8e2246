//! Closed-form intrinsic loss tangents for substrates, interfaces and
//! small junctions.

use std::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::materials::{Material, Medium, ThermalState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubstrateVariant {
    /// With the interference factor sin²(ΩL/v).
    Exact,
    /// sin² replaced by its average 1/2.
    Averaged,
}

/// Loss tangent of a piezoelectric film of thickness L:
///
/// tanδ_S = g_B²(n_a − n_B) / (2ερv(n_a + ½)ΩL) · S, with S = sin²(ΩL/v)
/// or ½ for [`SubstrateVariant::Averaged`].
pub fn substrate_tan_delta(
    thickness: f64,
    g_bulk: f64,
    host: &Material,
    state: &ThermalState,
    variant: SubstrateVariant,
) -> Result<f64> {
    require_positive("substrate thickness", thickness)?;
    require_non_negative("g_B", g_bulk)?;
    let omega = state.omega;
    let v = host.sound_velocity;
    let s = match variant {
        SubstrateVariant::Exact => (omega * thickness / v).sin().powi(2),
        SubstrateVariant::Averaged => 0.5,
    };
    Ok(g_bulk * g_bulk * state.prefactor()? * s
        / (2.0 * host.permittivity() * host.mass_density * v * omega * thickness))
}

/// Loss tangent of a film of thickness L embedded in an unbounded medium of
/// the same material, as obtained by evaluating the general functional
/// directly: 2g_B²(n_a − n_B) sin²(ΩL/2v) / (ερv(n_a + ½)ΩL).
///
/// The averaged variant replaces sin² by ½. This differs from
/// [`substrate_tan_delta`] in the oscillation argument and, after
/// averaging, by a factor of four; both are kept so the difference stays
/// visible.
pub fn embedded_slab_tan_delta(
    thickness: f64,
    g_bulk: f64,
    host: &Material,
    state: &ThermalState,
    variant: SubstrateVariant,
) -> Result<f64> {
    require_positive("slab thickness", thickness)?;
    require_non_negative("g_B", g_bulk)?;
    let omega = state.omega;
    let v = host.sound_velocity;
    let s = match variant {
        SubstrateVariant::Exact => (omega * thickness / (2.0 * v)).sin().powi(2),
        SubstrateVariant::Averaged => 0.5,
    };
    Ok(2.0 * g_bulk * g_bulk * state.prefactor()? * s
        / (host.permittivity() * host.mass_density * v * omega * thickness))
}

/// Loss tangent of an interface delta g_I t_I δ(z):
///
/// tanδ_I = t_I Ω g_I² (n_a − n_B) / (4ε(n_a + ½)) · Σ_sides 1/(ρ_i v_i³).
///
/// Vacuum sides carry no phonons and drop out of the sum.
pub fn interface_tan_delta(
    thickness: f64,
    g_interface: f64,
    side1: &Medium,
    side2: &Medium,
    permittivity: f64,
    state: &ThermalState,
) -> Result<f64> {
    require_positive("interface thickness", thickness)?;
    require_non_negative("g_I", g_interface)?;
    require_positive("permittivity", permittivity)?;
    if side1.is_vacuum() && side2.is_vacuum() {
        return Err(Error::invalid("interface needs at least one material side"));
    }
    let acoustic: f64 = [side1, side2]
        .iter()
        .filter_map(|m| m.material())
        .map(|m| 1.0 / m.acoustic_stiffness())
        .sum();
    Ok(thickness * state.omega * g_interface * g_interface * state.prefactor()? * acoustic
        / (4.0 * permittivity))
}

/// Loss tangent of a junction small against the phonon wavelength:
///
/// tanδ_J = Ω³ g_I² V_J (n_a − n_B) / (4πρv⁵ε(n_a + ½)), barrier constants.
pub fn junction_tan_delta(
    g_interface: f64,
    volume: f64,
    barrier: &Material,
    state: &ThermalState,
) -> Result<f64> {
    require_positive("junction volume", volume)?;
    require_non_negative("g_I", g_interface)?;
    let omega = state.omega;
    Ok(omega.powi(3) * g_interface * g_interface * volume * state.prefactor()?
        / (4.0
            * PI
            * barrier.mass_density
            * barrier.sound_velocity.powi(5)
            * barrier.permittivity()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ANGSTROM, EPSILON_0};
    use crate::materials::Database;

    fn state() -> ThermalState {
        ThermalState::reference()
    }

    fn mat(name: &str) -> Material {
        Database::builtin().material(name).unwrap().clone()
    }

    #[test]
    fn sio2_substrate_averaged_is_order_4e_4() {
        let t = substrate_tan_delta(1000.0 * ANGSTROM, 0.09, &mat("SiO2"), &state(), SubstrateVariant::Averaged)
            .unwrap();
        assert!(t > 4e-4 / 3.0 && t < 4e-4 * 3.0, "{t}");
    }

    #[test]
    fn substrate_node_vanishes() {
        let q = mat("SiO2");
        let s = state();
        let l = std::f64::consts::PI * q.sound_velocity / s.omega;
        let t = substrate_tan_delta(l, 0.09, &q, &s, SubstrateVariant::Exact).unwrap();
        assert!(t.abs() < 1e-30, "{t}");
    }

    #[test]
    fn averaged_substrate_halves_with_double_thickness() {
        let q = mat("SiO2");
        let a = substrate_tan_delta(1e-7, 0.09, &q, &state(), SubstrateVariant::Averaged).unwrap();
        let b = substrate_tan_delta(2e-7, 0.09, &q, &state(), SubstrateVariant::Averaged).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn substrate_thin_film_limits_agree() {
        // Both forms share the small-ΩL limit g²θΩL/(2ερv³).
        let q = mat("SiO2");
        let s = state();
        let l = 1e-10;
        let a = substrate_tan_delta(l, 0.09, &q, &s, SubstrateVariant::Exact).unwrap();
        let b = embedded_slab_tan_delta(l, 0.09, &q, &s, SubstrateVariant::Exact).unwrap();
        assert!((a / b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interface_table_values() {
        let s = state();
        let al = Medium::Material(mat("Al"));
        let nb = Medium::Material(mat("Nb"));
        let t = interface_tan_delta(2.03 * ANGSTROM, 0.73, &al, &Medium::Vacuum, EPSILON_0, &s).unwrap();
        assert!(t > 2e-4 / 3.0 && t < 6e-4, "{t}");
        let t = interface_tan_delta(1.65 * ANGSTROM, 0.18, &nb, &Medium::Vacuum, EPSILON_0, &s).unwrap();
        assert!(t > 5e-6 / 3.0 && t < 1.5e-5, "{t}");
        let t = interface_tan_delta(1.65 * ANGSTROM, 0.0, &nb, &Medium::Vacuum, EPSILON_0, &s).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn interface_needs_a_material_side() {
        let r = interface_tan_delta(1e-10, 0.1, &Medium::Vacuum, &Medium::Vacuum, EPSILON_0, &state());
        assert!(r.is_err());
    }

    #[test]
    fn junction_table_value_and_scaling() {
        let s = state();
        let sapphire = mat("Al2O3");
        let t = junction_tan_delta(0.06, 2e8 * 1e-30, &sapphire, &s).unwrap();
        assert!(t > 1e-7 / 3.0 && t < 3e-7, "{t}");
        let s2 = s.with_omega(2.0 * s.omega).unwrap();
        let t2 = junction_tan_delta(0.06, 2e8 * 1e-30, &sapphire, &s2).unwrap();
        assert!((t2 / t - 8.0).abs() < 1e-9);
        assert!(junction_tan_delta(0.06, 0.0, &sapphire, &s).is_err());
    }
}
