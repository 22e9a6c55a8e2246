//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use piezoloss::constants::ANGSTROM;
use piezoloss::device::{microstrip_spectrum, oscillation_period, t1_budget, ParticipationBudget, Sweep, T1};
use piezoloss::geometry::{
    build_stack, build_stack_with_media, microstrip_profile, MediumMap, MicrostripGeometry, ModeShape, Orientation,
    PiezoElement, StackProfile,
};
use piezoloss::loss::{
    closed_form_loss, golden_rule_loss, interface_tan_delta, junction_tan_delta, real_space_loss,
    substrate_tan_delta, SubstrateVariant,
};
use piezoloss::materials::{
    bose_occupation, interface_permittivity, thermal_prefactor, Database, Material, Medium, PiezoKind, ThermalState,
};

fn report(id: &str, what: &str, ok: bool, detail: String) {
    println!("[acceptance {id}] {what}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance {id} failed: {what}: {detail}");
}

fn db() -> Database {
    Database::builtin()
}

fn mat(name: &str) -> Material {
    db().material(name).unwrap().clone()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within_factor(x: f64, target: f64, factor: f64) -> bool {
    x >= target / factor && x <= target * factor
}

fn interface_tan(db: &Database, pair: &str, s: &ThermalState) -> f64 {
    let e = db.piezo(pair).unwrap();
    let PiezoKind::Interface {
        thickness,
        material1,
        material2,
    } = &e.kind
    else {
        panic!("{pair} is not an interface")
    };
    let (a, b) = (db.medium(material1).unwrap(), db.medium(material2).unwrap());
    let eps = interface_permittivity(&a, &b);
    interface_tan_delta(*thickness, e.g, &a, &b, eps, s).unwrap()
}

fn junction_tan(db: &Database, name: &str, s: &ThermalState) -> f64 {
    let e = db.piezo(name).unwrap();
    let PiezoKind::Junction { volume, barrier, .. } = &e.kind else {
        panic!("{name} is not a junction")
    };
    junction_tan_delta(e.g, *volume, db.material(barrier).unwrap(), s).unwrap()
}

fn substrate_tan(db: &Database, name: &str, s: &ThermalState, variant: SubstrateVariant) -> f64 {
    let (e, host) = db.substrate(name).unwrap();
    let PiezoKind::Substrate { thickness, .. } = e.kind else {
        panic!("{name} is not a substrate")
    };
    substrate_tan_delta(thickness, e.g, host, s, variant).unwrap()
}

#[test]
fn criterion_1_table_of_loss_tangents() {
    let start = Instant::now();
    let db = db();
    let s = ThermalState::reference();
    let avg = SubstrateVariant::Averaged;
    let rows = [
        ("Al/vacuum", interface_tan(&db, "Al/vacuum", &s), 2e-4, 3.0),
        ("Nb/vacuum", interface_tan(&db, "Nb/vacuum", &s), 5e-6, 3.0),
        ("Al2O3/vacuum", interface_tan(&db, "Al2O3/vacuum", &s), 1e-7, 3.0),
        ("Al2O3/Al", interface_tan(&db, "Al2O3/Al", &s), 1e-7, 3.0),
        ("Al/Al2O3/Al", junction_tan(&db, "Al/Al2O3/Al", &s), 1e-7, 3.0),
        ("SiO2 substrate", substrate_tan(&db, "SiO2_substrate", &s, avg), 4e-4, 3.0),
        ("Nb/Nb2O5/Nb", junction_tan(&db, "Nb/Nb2O5/Nb", &s), 4e-4, 10.0),
        ("Nb2O5 substrate", substrate_tan(&db, "Nb2O5_substrate", &s, avg), 1e-3, 10.0),
    ];
    let elapsed = start.elapsed().as_secs_f64();
    let mut ok = elapsed < 1.0;
    let mut detail = Vec::new();
    for (name, value, target, factor) in rows {
        let good = within_factor(value, target, factor);
        ok &= good;
        detail.push(format!("{name} {value:.3e} vs {target:.0e} x{factor}{}", if good { "" } else { " OUT" }));
    }
    detail.push(format!("{elapsed:.3} s"));
    report("1", "loss tangent table within factor 3 (10 for estimates), < 1 s", ok, detail.join("; "));
}

fn random_profile(host: &Material, picks: &[f64], layered: bool) -> StackProfile {
    if layered {
        let geo = MicrostripGeometry {
            width: 5e-6 + picks[0] * 5e-5,
            separation: 5e-7 + picks[1] * 5e-6,
            metal_thickness: 5e-8 + picks[2] * 2e-7,
        };
        return microstrip_profile(&db(), geo, &mat("Al"), &mat("Al2O3"))
            .unwrap()
            .with_participations(&[("MV", picks[3] * 1e-4), ("DV", picks[4] * 1e-3), ("DM", picks[5] * 1e-2)])
            .unwrap();
    }
    let mut els = Vec::new();
    let n_delta = (picks[0] * 4.0) as usize;
    for i in 0..n_delta {
        let o = if picks[i + 1] > 0.5 { Orientation::Plus } else { Orientation::Minus };
        els.push(PiezoElement::interface(
            picks[i + 4],
            2e-10,
            (picks[i + 1] - 0.5) * 6e-6,
            o,
            host.clone().into(),
            host.clone().into(),
        ));
    }
    if picks[7] > 0.3 {
        els.push(PiezoElement::slab(picks[8], -6e-6, -6e-6 + 1e-8 + picks[9] * 2e-6, host.clone()));
    }
    if picks[10] > 0.5 {
        els.push(PiezoElement::junction(picks[11], 1e-22, [picks[12] * 1e-6, 0.0, 0.0], host.clone()));
    }
    build_stack_with_media(els, MediumMap::homogeneous(host.clone().into()), 1e-12, 1e-8).unwrap()
}

#[test]
fn criterion_2_detailed_balance() {
    let hosts = [mat("Al2O3"), mat("SiO2"), mat("Nb2O5")];
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = (
        proptest::collection::vec(0.0f64..1.0, 13),
        0usize..3,
        any::<bool>(),
        any::<bool>(),
        1e9f64..2e10,
        1e-3f64..1.0,
    );
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |(picks, h, layered, plane, f, t)| {
        let p = random_profile(&hosts[h], &picks, layered);
        let s = ThermalState::from_frequency(f, t, 0.0).unwrap().at_equilibrium().unwrap();
        let mode = if plane {
            ModeShape::photon_plane_wave(s.omega, hosts[h].rel_permittivity)
        } else {
            ModeShape::Uniform
        };
        for r in [
            golden_rule_loss(&p, &mode, &s).unwrap(),
            real_space_loss(&p, &mode, &s).unwrap(),
            closed_form_loss(&p, &mode, &s).unwrap(),
        ] {
            worst.set(worst.get().max(r.inverse_q.abs()));
            prop_assert!(r.inverse_q.abs() <= 1e-12, "{:?} gave {}", r.evaluator, r.inverse_q);
        }
        Ok(())
    });
    let ok = result.is_ok();
    report(
        "2",
        "detailed balance, 1000 random instances x 3 evaluators",
        ok,
        match result {
            Ok(()) => format!("max |1/Q| = {:e}", worst.get()),
            Err(e) => e.to_string(),
        },
    );
}

#[test]
fn criterion_3_bulk_zero_loss() {
    let s = ThermalState::reference();
    let mut config = Config::with_cases(200);
    config.failure_persistence = None;
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let names = ["Al2O3", "SiO2", "Nb2O5"];
    let result = runner.run(&(0usize..3, 1e-3f64..1.0, 0.0f64..0.999, 0.0f64..(2.0 * PI), 1e9f64..2e10), |(m, g, frac, angle, f)| {
        let host = mat(names[m]);
        let s = s.with_omega(2.0 * PI * f).unwrap();
        let q = frac * s.omega / host.sound_velocity;
        let mode = ModeShape::PlaneWaveTransverse {
            q_perp: [q * angle.cos(), q * angle.sin()],
        };
        let p = build_stack(vec![PiezoElement::bulk(g, host)], 1e-9, 1e-6).unwrap();
        let r = golden_rule_loss(&p, &mode, &s).unwrap();
        prop_assert_eq!(r.inverse_q, 0.0);
        Ok(())
    });
    report("3", "bulk medium with plane-wave photon is lossless", result.is_ok(), format!("{result:?}"));
}

fn averaged_slab_from_evaluator(l: f64, g: f64, host: &Material, f: f64) -> f64 {
    // Average Ω·(1/Q) over one period of the slab oscillation, Δ(Ω) = 2πv/L,
    // then express it at Ω₀. Uniform midpoints are exact for sin².
    let omega0 = 2.0 * PI * 10e9;
    let period = 2.0 * PI * host.sound_velocity / l;
    let n = 64;
    let p = build_stack(vec![PiezoElement::slab(g, -l, 0.0, host.clone()).with_participation(f, 1.0)], 1.0, 1.0)
        .unwrap();
    let mut acc = 0.0;
    for i in 0..n {
        let omega = omega0 + (i as f64 + 0.5) / n as f64 * period;
        let s = ThermalState::new(omega, 0.0, 1.0).unwrap();
        acc += omega * golden_rule_loss(&p, &ModeShape::Uniform, &s).unwrap().inverse_q;
    }
    acc / n as f64 / omega0
}

#[test]
fn criterion_4a_golden_rule_vs_real_space() {
    let start = Instant::now();
    let s = ThermalState::reference();
    let sap = mat("Al2O3");
    let quartz = mat("SiO2");
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for l in [1e-7, 4.4e-7, 1.9e-6, 7.3e-6] {
        cases.push((format!("slab {l:e}"), build_stack(vec![PiezoElement::slab(0.09, -l, 0.0, quartz.clone())], 1e-12, 1e-8).unwrap()));
    }
    cases.push((
        "delta".into(),
        build_stack(
            vec![PiezoElement::interface(0.73, 2.03 * ANGSTROM, 0.0, Orientation::Plus, mat("Al").into(), Medium::Vacuum)],
            1e-12,
            1e-8,
        )
        .unwrap(),
    ));
    for sep in [3e-7, 1.3e-6, 4.1e-6] {
        let mk = |z| PiezoElement::interface(0.16, 2.17 * ANGSTROM, z, Orientation::Plus, sap.clone().into(), sap.clone().into());
        cases.push((
            format!("delta pair {sep:e}"),
            build_stack_with_media(vec![mk(0.0), mk(sep)], MediumMap::homogeneous(sap.clone().into()), 1e-12, 1e-8).unwrap(),
        ));
    }
    for dx in [0.0, 2e-7, 1.5e-6] {
        let j = |x| PiezoElement::junction(0.06, 2e-22, [x, 0.0, 0.0], sap.clone());
        let els = if dx == 0.0 { vec![j(0.0)] } else { vec![j(0.0), j(dx)] };
        cases.push((format!("junctions {dx:e}"), build_stack(els, 1e-15, 1e-9).unwrap()));
    }
    for (name, p) in &cases {
        let g = golden_rule_loss(p, &ModeShape::Uniform, &s).unwrap().inverse_q;
        let r = real_space_loss(p, &ModeShape::Uniform, &s).unwrap().inverse_q;
        let d = rel(g, r);
        assert!(d.is_finite(), "{name}");
        worst = worst.max(d);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "4a",
        "golden-rule and real-space evaluators agree within 1%",
        worst <= 0.01 && elapsed < 30.0,
        format!("{} geometries, worst rel diff {worst:.2e}, {elapsed:.2} s", cases.len()),
    );
}

#[test]
fn criterion_4b_interface_and_junction_closed_forms() {
    let s = ThermalState::reference();
    let al = mat("Al");
    let sap = mat("Al2O3");
    let (va, a) = (1e-12, 1e-8);
    let t = 2.03 * ANGSTROM;
    let p = build_stack(
        vec![PiezoElement::interface(0.73, t, 0.0, Orientation::Plus, al.clone().into(), Medium::Vacuum)],
        va,
        a,
    )
    .unwrap();
    let expect_i = t * a / va * interface_tan_delta(t, 0.73, &al.into(), &Medium::Vacuum, interface_permittivity(&mat("Al").into(), &Medium::Vacuum), &s).unwrap();
    let vj = 2e8 * ANGSTROM.powi(3);
    let pj = build_stack(vec![PiezoElement::junction(0.06, vj, [0.0; 3], sap.clone())], 1e-15, 1e-9).unwrap();
    let expect_j = vj / 1e-15 * junction_tan_delta(0.06, vj, &sap, &s).unwrap();
    let mut worst: f64 = 0.0;
    for (p, e) in [(&p, expect_i), (&pj, expect_j)] {
        worst = worst.max(rel(golden_rule_loss(p, &ModeShape::Uniform, &s).unwrap().inverse_q, e));
        worst = worst.max(rel(real_space_loss(p, &ModeShape::Uniform, &s).unwrap().inverse_q, e));
    }
    report("4b", "interface and junction match their closed forms to 1e-6", worst <= 1e-6, format!("worst rel diff {worst:.2e}"));
}

#[test]
fn criterion_4c_slab_matches_averaged_substrate_form() {
    let quartz = mat("SiO2");
    let s = ThermalState::reference();
    let l = 1000.0 * ANGSTROM;
    let f = 1e-3;
    let general = averaged_slab_from_evaluator(l, 0.09, &quartz, f);
    let closed = f * substrate_tan_delta(l, 0.09, &quartz, &s, SubstrateVariant::Averaged).unwrap();
    let d = rel(general, closed);
    report(
        "4c",
        "period-averaged slab loss matches averaged substrate closed form to 1e-6",
        d <= 1e-6,
        format!("evaluator {general:.6e}, closed form {closed:.6e}, ratio {:.6}", general / closed),
    );
}

#[test]
fn criterion_5_scaling_laws() {
    let db = db();
    let s1 = ThermalState::reference();
    let s2 = s1.with_omega(2.0 * s1.omega).unwrap();
    let avg = SubstrateVariant::Averaged;
    let ratios = [
        ("interface", interface_tan(&db, "Al/vacuum", &s2) / interface_tan(&db, "Al/vacuum", &s1), 2.0),
        ("junction", junction_tan(&db, "Al/Al2O3/Al", &s2) / junction_tan(&db, "Al/Al2O3/Al", &s1), 8.0),
        (
            "substrate",
            substrate_tan(&db, "SiO2_substrate", &s2, avg) / substrate_tan(&db, "SiO2_substrate", &s1, avg),
            0.5,
        ),
    ];
    let ok = ratios.iter().all(|(_, r, e)| rel(*r, *e) <= 1e-9);
    let detail = ratios.iter().map(|(n, r, _)| format!("{n} {r:.12}")).collect::<Vec<_>>().join(", ");
    report("5", "frequency-doubling ratios 2, 8, 1/2 to 1e-9", ok, detail);
}

#[test]
fn criterion_6_design_a_budget() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/design_a.toml");
    let budget = ParticipationBudget::from_path(path).unwrap();
    let r = t1_budget(&db(), &budget).unwrap();
    let t1_us = match r.t1 {
        T1::Finite(s) => s * 1e6,
        other => panic!("unexpected {other:?}"),
    };
    let ok = (1e-9..=4e-9).contains(&r.inverse_q)
        && (5e3..=1.2e4).contains(&t1_us)
        && r.dominant.as_deref() == Some("MV")
        && r.relaxation_rate == budget.state.omega * r.inverse_q;
    report(
        "6",
        "design-A budget: 1/Q in [1e-9, 4e-9], T1 in [5e3, 1.2e4] us, metal/vacuum dominant",
        ok,
        format!("1/Q = {:.3e}, T1 = {t1_us:.0} us, dominant {:?}", r.inverse_q, r.dominant),
    );
}

fn microstrip_period(separation: f64, from: f64, to: f64, points: usize) -> Option<f64> {
    let geo = MicrostripGeometry {
        width: 2e-5,
        separation,
        metal_thickness: 1e-7,
    };
    let p = microstrip_profile(&db(), geo, &mat("Al"), &mat("Al2O3")).unwrap();
    let spec = microstrip_spectrum(
        &p,
        &[("MV", 6.5e-6), ("DV", 2.9e-4), ("DM", 2.9e-3)],
        &Sweep::linear(from, to, points),
        &ThermalState::reference(),
        true,
    )
    .unwrap();
    let x: Vec<f64> = spec.points.iter().map(|p| p.frequency).collect();
    let y: Vec<f64> = spec.points.iter().map(|p| p.inverse_q).collect();
    oscillation_period(&x, &y)
}

#[test]
fn criterion_7_interference_spectrum() {
    let v = mat("Al2O3").sound_velocity;
    let bracket = |d: f64| (v / (2.0 * d) * 0.9, v / d * 1.1);

    let d = 2e-6;
    let p_small = microstrip_period(d, 1e9, 2e10, 400);
    let (lo, hi) = bracket(d);
    let ok_small = p_small.is_some_and(|p| p >= lo && p <= hi);

    let d_big = 1e-3;
    let p_big = microstrip_period(d_big, 5.0e9, 5.1e9, 2001);
    let (lo_b, hi_b) = bracket(d_big);
    let quoted = 5e6;
    let ok_big = p_big.is_some_and(|p| p >= lo_b && p <= hi_b && quoted >= p / 2.0 * 0.9 && quoted <= p * 1.1);

    report(
        "7",
        "microstrip 1/Q oscillates with period in [v/2d*0.9, v/d*1.1]; 1 mm period consistent with 5 MHz",
        ok_small && ok_big,
        format!(
            "d=2um period {:?} Hz in [{lo:.3e}, {hi:.3e}]; d=1mm period {:?} Hz in [{lo_b:.3e}, {hi_b:.3e}]",
            p_small, p_big
        ),
    );
}

#[test]
fn criterion_8_thermal_occupation() {
    let nb = bose_occupation(2.0 * PI * 10e9, 10e-3).unwrap();
    let theta = thermal_prefactor(&ThermalState::reference()).unwrap();
    let ok = nb < 1e-20 && (theta - 2.0 / 3.0).abs() <= 1e-20;
    report("8", "n_B(10 GHz, 10 mK) < 1e-20 and prefactor 2/3", ok, format!("n_B = {nb:e}, prefactor = {theta:.17}"));
}

#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_piezoloss");
    let run = |serial: bool| {
        let mut cmd = Command::new(bin);
        cmd.args(["spectrum", "--from", "1GHz", "--to", "20GHz", "--points", "300"]);
        if serial {
            cmd.arg("--serial");
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run(false);
    let b = run(false);
    let c = run(true);
    let ok = a == b && a == c && !a.is_empty();
    report(
        "9",
        "identical spectrum invocations give byte-identical CSV, parallel and serial",
        ok,
        format!("{} bytes", a.len()),
    );
}
