//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::device::{microstrip_spectrum, t1_budget, ParticipationBudget, Spacing, Spectrum, Sweep};
use crate::error::{Error, Result};
use crate::geometry::{microstrip_profile, MicrostripGeometry, LABEL_DM, LABEL_DV, LABEL_MV};
use crate::loss::{interface_tan_delta, junction_tan_delta, substrate_tan_delta, SubstrateVariant};
use crate::materials::{interface_permittivity, Database, Material, MaterialClass, Medium, PiezoKind, ThermalState};
use crate::units::{parse_quantity, Dimension};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_ACCURACY: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "piezoloss", version, about = "Piezoelectric loss tangents, T1 budgets and interference spectra")]
pub struct Cli {
    /// Material database to use instead of the built-in one.
    #[arg(long, global = true, value_name = "PATH")]
    pub materials_file: Option<PathBuf>,
    /// Output format (default: table, or csv for spectrum).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List materials and piezoelectric coefficients.
    Materials,
    /// Evaluate one closed-form loss tangent.
    #[command(subcommand)]
    TanDelta(TanDelta),
    /// Sweep 1/Q of a microstrip across frequency.
    Spectrum(SpectrumArgs),
    /// Participation-ratio loss budget and T1 from a TOML file.
    Budget {
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Thermal {
    /// Photon frequency Ω/2π.
    #[arg(long, default_value = "10GHz")]
    pub freq: String,
    #[command(flatten)]
    pub bath: Bath,
}

#[derive(Debug, Args)]
pub struct Bath {
    /// Bath temperature.
    #[arg(long, default_value = "10mK")]
    pub temp: String,
    /// Photon occupation n_a.
    #[arg(long, default_value_t = 1.0)]
    pub na: f64,
}

#[derive(Debug, Subcommand)]
pub enum TanDelta {
    /// Interface delta layer, e.g. --pair Al/vacuum.
    Interface {
        #[arg(long)]
        pair: String,
        /// Override g_I (C/m²).
        #[arg(long = "gI")]
        g_interface: Option<f64>,
        #[command(flatten)]
        thermal: Thermal,
    },
    /// Small junction, e.g. --pair Al/Al2O3/Al.
    Junction {
        #[arg(long)]
        pair: String,
        /// Junction volume V_J (e.g. 2e8A3).
        #[arg(long)]
        vj: Option<String>,
        #[arg(long = "gI")]
        g_interface: Option<f64>,
        #[command(flatten)]
        thermal: Thermal,
    },
    /// Piezoelectric film, by entry (SiO2_substrate) or host material.
    Substrate {
        #[arg(long)]
        pair: String,
        /// Override g_B (C/m²).
        #[arg(long = "gB")]
        g_bulk: Option<f64>,
        /// Film thickness L.
        #[arg(long)]
        length: Option<String>,
        /// Keep the sin² interference factor instead of its average.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        thermal: Thermal,
    },
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Strip width W.
    #[arg(long, default_value = "20um")]
    pub width: String,
    /// Dielectric thickness d.
    #[arg(long, default_value = "2um")]
    pub separation: String,
    #[arg(long, default_value = "100nm")]
    pub metal_thickness: String,
    #[arg(long, default_value = "Al")]
    pub metal: String,
    #[arg(long, default_value = "Al2O3")]
    pub dielectric: String,
    #[arg(long, default_value_t = 6.5e-6)]
    pub f_mv: f64,
    #[arg(long, default_value_t = 2.9e-4)]
    pub f_dv: f64,
    #[arg(long, default_value_t = 2.9e-3)]
    pub f_dm: f64,
    #[arg(long, default_value = "1GHz")]
    pub from: String,
    #[arg(long, default_value = "20GHz")]
    pub to: String,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Logarithmic frequency spacing.
    #[arg(long)]
    pub log: bool,
    /// Evaluate points on one thread.
    #[arg(long)]
    pub serial: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub bath: Bath,
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotFound { .. } => EXIT_NOT_FOUND,
        Error::Io { .. } => EXIT_IO,
        Error::Accuracy { .. } => EXIT_ACCURACY,
        Error::InvalidInput(_)
        | Error::Overlap(..)
        | Error::Degenerate(_)
        | Error::Configuration(_)
        | Error::Resolution { .. }
        | Error::Unsupported(_)
        | Error::Parse { .. } => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(path: &str) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_string(),
        source,
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let db = match &cli.materials_file {
        Some(p) => Database::from_path(p)?,
        None => Database::builtin(),
    };
    let text = match &cli.command {
        Command::Materials => materials(&db, cli.format.unwrap_or(Format::Table)),
        Command::TanDelta(t) => tan_delta(&db, t, cli.format.unwrap_or(Format::Table))?,
        Command::Spectrum(a) => {
            let spectrum = spectrum(&db, a)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => spectrum_csv(&spectrum),
                Format::Table => spectrum_table(&spectrum),
            };
            if let Some(path) = &a.output {
                write_file(path, &text)?;
                return Ok(());
            }
            text
        }
        Command::Budget { file } => budget(&db, file, cli.format.unwrap_or(Format::Table))?,
    };
    out.write_all(text.as_bytes()).map_err(io_err("<stdout>"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn state(freq: &str, bath: &Bath) -> Result<ThermalState> {
    ThermalState::from_frequency(
        parse_quantity(freq, Dimension::Frequency)?,
        parse_quantity(&bath.temp, Dimension::Temperature)?,
        bath.na,
    )
}

/// Left-aligned columns separated by two spaces.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                if i + 1 == r.len() {
                    cell.clone()
                } else {
                    format!("{cell:<w$}", w = widths[i])
                }
            })
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",") + "\n").collect()
}

fn render(rows: &[Vec<String>], format: Format) -> String {
    match format {
        Format::Csv => csv(rows),
        Format::Table => table(rows),
    }
}

fn class_name(c: MaterialClass) -> &'static str {
    match c {
        MaterialClass::Metal => "metal",
        MaterialClass::Dielectric => "dielectric",
    }
}

fn materials(db: &Database, format: Format) -> String {
    let mut rows = vec![[
        "name",
        "kind",
        "mass_density_kg_m3",
        "sound_velocity_m_s",
        "rel_permittivity",
        "g_c_m2",
        "size_si",
        "details",
        "provenance",
    ]
    .map(String::from)
    .to_vec()];
    for m in db.materials() {
        rows.push(vec![
            m.name.clone(),
            class_name(m.class).into(),
            format!("{:e}", m.mass_density),
            format!("{:e}", m.sound_velocity),
            format!("{:e}", m.rel_permittivity),
            String::new(),
            String::new(),
            String::new(),
            m.provenance.to_string(),
        ]);
    }
    for p in db.piezo_entries() {
        let (size, details) = match &p.kind {
            PiezoKind::Interface {
                thickness,
                material1,
                material2,
            } => (*thickness, format!("{material1}->{material2}")),
            PiezoKind::Substrate { thickness, host } => (*thickness, format!("host {host}")),
            PiezoKind::Junction {
                volume,
                barrier,
                electrode,
            } => (*volume, format!("barrier {barrier} electrode {electrode}")),
        };
        rows.push(vec![
            p.name.clone(),
            p.kind_name().into(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:e}", p.g),
            format!("{size:e}"),
            details,
            p.provenance.to_string(),
        ]);
    }
    render(&rows, format)
}

fn describe(m: &Material) -> String {
    format!(
        "{} ({}): rho={:e} kg/m3 v={:e} m/s eps_r={:e} [{}]",
        m.name,
        class_name(m.class),
        m.mass_density,
        m.sound_velocity,
        m.rel_permittivity,
        m.provenance
    )
}

fn describe_medium(db: &Database, name: &str) -> Result<String> {
    Ok(match db.medium(name)? {
        Medium::Vacuum => "vacuum".into(),
        Medium::Material(m) => describe(&m),
    })
}

fn tan_delta(db: &Database, cmd: &TanDelta, format: Format) -> Result<String> {
    let mut rows: Vec<Vec<String>> = vec![vec!["quantity".into(), "value".into()]];
    let mut push = |k: &str, v: String| rows.push(vec![k.to_string(), v]);
    let (s, tan) = match cmd {
        TanDelta::Interface {
            pair,
            g_interface,
            thermal,
        } => {
            let s = state(&thermal.freq, &thermal.bath)?;
            let (a, b) = pair
                .split_once('/')
                .ok_or_else(|| Error::invalid(format!("interface pair '{pair}' must look like 'A/B'")))?;
            let (entry, _) = db.interface(a.trim(), b.trim())?;
            let mut entry = entry.clone();
            if let Some(g) = g_interface {
                entry.g = *g;
            }
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
            push("model", "interface".into());
            push("entry", format!("{} [{}]", entry.name, entry.provenance));
            push("material1", describe_medium(db, material1)?);
            push("material2", describe_medium(db, material2)?);
            push("g_I_c_m2", format!("{:e}", entry.g));
            push("t_I_m", format!("{thickness:e}"));
            push("epsilon_f_m", format!("{eps:e}"));
            let tan = interface_tan_delta(*thickness, entry.g, &m1, &m2, eps, &s)?;
            (s, tan)
        }
        TanDelta::Junction {
            pair,
            vj,
            g_interface,
            thermal,
        } => {
            let s = state(&thermal.freq, &thermal.bath)?;
            let entry = db.piezo(pair)?;
            let PiezoKind::Junction {
                volume,
                barrier,
                electrode,
            } = &entry.kind
            else {
                return Err(Error::invalid(format!("'{pair}' is a {} entry, not a junction", entry.kind_name())));
            };
            let v = match vj {
                Some(t) => parse_quantity(t, Dimension::Volume)?,
                None => *volume,
            };
            let g = g_interface.unwrap_or(entry.g);
            let barrier = db.material(barrier)?;
            push("model", "junction".into());
            push("entry", format!("{} [{}]", entry.name, entry.provenance));
            push("barrier", describe(barrier));
            push("electrode", describe_medium(db, electrode)?);
            push("g_I_c_m2", format!("{g:e}"));
            push("v_j_m3", format!("{v:e}"));
            let tan = junction_tan_delta(g, v, barrier, &s)?;
            (s, tan)
        }
        TanDelta::Substrate {
            pair,
            g_bulk,
            length,
            exact,
            thermal,
        } => {
            let s = state(&thermal.freq, &thermal.bath)?;
            let (entry, host) = db.substrate(pair)?;
            let PiezoKind::Substrate { thickness: stored, .. } = entry.kind else {
                unreachable!("substrate lookup returns substrate entries")
            };
            let l = match length {
                Some(t) => parse_quantity(t, Dimension::Length)?,
                None => stored,
            };
            let g = g_bulk.unwrap_or(entry.g);
            let variant = if *exact {
                SubstrateVariant::Exact
            } else {
                SubstrateVariant::Averaged
            };
            push("model", format!("substrate ({})", if *exact { "exact" } else { "averaged" }));
            push("entry", format!("{} [{}]", entry.name, entry.provenance));
            push("host", describe(host));
            push("g_B_c_m2", format!("{g:e}"));
            push("L_m", format!("{l:e}"));
            let tan = substrate_tan_delta(l, g, host, &s, variant)?;
            (s, tan)
        }
    };
    push("frequency_hz", format!("{:e}", s.omega / (2.0 * std::f64::consts::PI)));
    push("temperature_k", format!("{:e}", s.temperature));
    push("photon_number", format!("{:e}", s.photon_number));
    push("bose_occupation", format!("{:e}", s.bose()?));
    push("tan_delta", format!("{tan:e}"));
    Ok(render(&rows, format))
}

fn spectrum(db: &Database, a: &SpectrumArgs) -> Result<Spectrum> {
    let geometry = MicrostripGeometry {
        width: parse_quantity(&a.width, Dimension::Length)?,
        separation: parse_quantity(&a.separation, Dimension::Length)?,
        metal_thickness: parse_quantity(&a.metal_thickness, Dimension::Length)?,
    };
    let profile = microstrip_profile(db, geometry, db.material(&a.metal)?, db.material(&a.dielectric)?)?;
    let sweep = Sweep {
        from: parse_quantity(&a.from, Dimension::Frequency)?,
        to: parse_quantity(&a.to, Dimension::Frequency)?,
        points: a.points,
        spacing: if a.log { Spacing::Log } else { Spacing::Linear },
    };
    let template = state(&a.from, &a.bath)?;
    microstrip_spectrum(
        &profile,
        &[(LABEL_MV, a.f_mv), (LABEL_DV, a.f_dv), (LABEL_DM, a.f_dm)],
        &sweep,
        &template,
        !a.serial,
    )
}

fn spectrum_rows(s: &Spectrum) -> Vec<Vec<String>> {
    let mut header = vec!["frequency_hz".to_string(), "inverse_q".to_string()];
    header.extend(s.labels.iter().map(|l| format!("contrib_{l}")));
    let mut rows = vec![header];
    for p in &s.points {
        let mut row = vec![format!("{:e}", p.frequency), format!("{:e}", p.inverse_q)];
        row.extend(p.contributions.iter().map(|v| format!("{v:e}")));
        rows.push(row);
    }
    rows
}

/// CSV with header `frequency_hz,inverse_q,contrib_<label>...`. Self and
/// interference columns sum to `inverse_q`.
pub fn spectrum_csv(s: &Spectrum) -> String {
    csv(&spectrum_rows(s))
}

fn spectrum_table(s: &Spectrum) -> String {
    table(&spectrum_rows(s))
}

fn budget(db: &Database, file: &Path, format: Format) -> Result<String> {
    let budget = ParticipationBudget::from_path(file)?;
    let report = t1_budget(db, &budget)?;
    let mut rows = vec![["label", "participation", "tan_delta", "contribution", "provenance"]
        .map(String::from)
        .to_vec()];
    for c in &report.contributions {
        rows.push(vec![
            c.label.clone(),
            format!("{:e}", c.participation),
            format!("{:e}", c.tan_delta),
            format!("{:e}", c.value),
            c.provenance.map(|p| p.to_string()).unwrap_or_else(|| "fixed".into()),
        ]);
    }
    let f_total: f64 = budget.regions.iter().map(|r| r.participation).sum();
    let t1_us = report
        .t1
        .micros()
        .map(|v| format!("{v:e}"))
        .unwrap_or_else(|| report.t1.to_string());
    Ok(match format {
        Format::Csv => {
            rows.push(vec![
                "total".into(),
                format!("{f_total:e}"),
                String::new(),
                format!("{:e}", report.inverse_q),
                String::new(),
            ]);
            rows.push(vec!["t1_us".into(), String::new(), String::new(), t1_us, String::new()]);
            csv(&rows)
        }
        Format::Table => {
            let mut s = table(&rows);
            s.push_str(&format!(
                "total: 1/Q = {:e}, T1 = {}, dominant = {}\n",
                report.inverse_q,
                match report.t1.micros() {
                    Some(us) => format!("{us:.4e} us"),
                    None => report.t1.to_string(),
                },
                report.dominant.as_deref().unwrap_or("none")
            ));
            s
        }
    })
}
