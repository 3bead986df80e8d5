//! Case configuration: a flat `key = value` text format with
//! `[section]` headers, chosen for diffability and zero-dependency
//! parsing. Unknown sections or keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::dg::{InterfaceFlux, SchemeConfig, VolumeMode};
use crate::error::SolverError;
use crate::mesh::Warp;
use crate::physics::{AdvDiffCoeffs, GasParams, Viscosity1d};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    AdvDiff1d,
    Burgers1d,
    Nse3d,
}

impl Equation {
    pub fn is_one_dimensional(self) -> bool {
        !matches!(self, Equation::Nse3d)
    }

    pub fn name(self) -> &'static str {
        match self {
            Equation::AdvDiff1d => "advdiff1d",
            Equation::Burgers1d => "burgers1d",
            Equation::Nse3d => "nse3d",
        }
    }
}

#[derive(Debug, Clone)]
pub enum MeshSpec {
    Box3d {
        extent: [f64; 3],
        elements: [usize; 3],
        warp: Warp,
    },
    File3d(PathBuf),
    Line1d {
        length: f64,
        elements: usize,
        periodic: bool,
    },
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// Periodic Taylor-Green vortex at the configured Mach number.
    TaylorGreen,
    /// Density perturbation advected by a constant background.
    DensityWave {
        amplitude: f64,
        velocity: [f64; 3],
        pressure: f64,
    },
    /// `offset + amplitude sin(k x)` data with wavenumber `2 pi mode / L` (1D).
    ManufacturedSine {
        amplitude: f64,
        offset: f64,
        mode: usize,
    },
    /// Uniform state (free-stream and audit cases).
    Constant {
        rho: f64,
        velocity: [f64; 3],
        pressure: f64,
    },
    /// Nodal values from a snapshot file.
    Table(PathBuf),
}

/// Fully validated case description.
#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub equation: Equation,
    pub degree: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub cadence: f64,
    pub out_dir: PathBuf,
    pub deterministic: bool,
    pub seed: u64,
    pub rk_scheme: String,
    pub mesh: MeshSpec,
    pub scheme: SchemeConfig,
    pub gas: GasParams,
    pub initial: InitialCondition,
    pub advdiff: Option<AdvDiffCoeffs>,
    pub burgers_viscosity: f64,
    /// Verbatim text the configuration was parsed from, echoed into
    /// reports for provenance.
    pub source_text: String,
}

/// FNV-1a 64-bit content hash used to tag reports.
pub fn content_hash(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections, SolverError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(SolverError::Config(format!(
                    "line {}: malformed section header `{raw}`",
                    line_no + 1
                )));
            }
            current = line[1..line.len() - 1].trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(SolverError::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                line_no + 1
            )));
        };
        if current.is_empty() {
            return Err(SolverError::Config(format!(
                "line {}: `{key}` appears before any [section]",
                line_no + 1
            )));
        }
        let previous = sections
            .get_mut(&current)
            .unwrap()
            .insert(key.trim().to_string(), value.trim().to_string());
        if previous.is_some() {
            return Err(SolverError::Config(format!(
                "line {}: duplicate key `{}` in [{current}]",
                line_no + 1,
                key.trim()
            )));
        }
    }
    Ok(sections)
}

/// Typed accessor over one section that records which keys were read,
/// so leftovers can be rejected.
struct SectionReader<'a> {
    name: &'a str,
    entries: Option<&'a BTreeMap<String, String>>,
    consumed: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn new(sections: &'a Sections, name: &'a str) -> Self {
        Self {
            name,
            entries: sections.get(name),
            consumed: Vec::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.consumed.push(key.to_string());
        self.entries
            .and_then(|map| map.get(key))
            .map(|s| s.as_str())
    }

    fn required(&mut self, key: &str) -> Result<&'a str, SolverError> {
        let name = self.name;
        self.raw(key)
            .ok_or_else(|| SolverError::Config(format!("[{name}] is missing `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, SolverError> {
        let name = self.name;
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| {
                SolverError::Config(format!("[{name}] {key} = `{text}` cannot be parsed"))
            }),
        }
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, SolverError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn f64_maybe_inf(&mut self, key: &str, default: f64) -> Result<f64, SolverError> {
        match self.raw(key) {
            None => Ok(default),
            Some("inf") | Some("infinity") => Ok(f64::INFINITY),
            Some(text) => text.parse().map_err(|_| {
                SolverError::Config(format!("{key} = `{text}` is not a number or `inf`"))
            }),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, SolverError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(SolverError::Config(format!(
                "{key} = `{other}` is not a boolean"
            ))),
        }
    }

    fn triple(&mut self, key: &str) -> Result<Option<[f64; 3]>, SolverError> {
        let name = self.name;
        match self.raw(key) {
            None => Ok(None),
            Some(text) => {
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(SolverError::Config(format!(
                        "[{name}] {key} needs three values"
                    )));
                }
                let mut out = [0.0; 3];
                for (slot, part) in out.iter_mut().zip(&parts) {
                    *slot = part.parse().map_err(|_| {
                        SolverError::Config(format!("[{name}] {key}: bad number `{part}`"))
                    })?;
                }
                Ok(Some(out))
            }
        }
    }

    fn finish(self) -> Result<(), SolverError> {
        if let Some(entries) = self.entries {
            for key in entries.keys() {
                if !self.consumed.iter().any(|c| c == key) {
                    return Err(SolverError::Config(format!(
                        "unknown key `{key}` in [{}]",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

impl CaseConfig {
    pub fn from_text(text: &str) -> Result<Self, SolverError> {
        let sections = parse_sections(text)?;
        for name in sections.keys() {
            if !matches!(
                name.as_str(),
                "case" | "mesh" | "scheme" | "gas" | "initial" | "advdiff" | "burgers"
            ) {
                return Err(SolverError::Config(format!("unknown section [{name}]")));
            }
        }

        let mut case = SectionReader::new(&sections, "case");
        let equation = match case.required("equation")? {
            "advdiff1d" => Equation::AdvDiff1d,
            "burgers1d" => Equation::Burgers1d,
            "nse3d" => Equation::Nse3d,
            other => {
                return Err(SolverError::Config(format!(
                    "equation must be advdiff1d, burgers1d or nse3d, got `{other}`"
                )))
            }
        };
        let degree: usize = case
            .parse("degree")?
            .ok_or_else(|| SolverError::Config("[case] is missing `degree`".into()))?;
        if degree == 0 {
            return Err(SolverError::Config("degree must be at least 1".into()));
        }
        let t_end: f64 = case.parse_or("t_end", 0.0)?;
        if t_end < 0.0 {
            return Err(SolverError::Config("t_end must be nonnegative".into()));
        }
        let cfl: f64 = case.parse_or("cfl", 0.5)?;
        if !(cfl > 0.0) {
            return Err(SolverError::Config("cfl must be positive".into()));
        }
        let cadence: f64 = case.parse_or("cadence", 0.1)?;
        if !(cadence > 0.0) {
            return Err(SolverError::Config("cadence must be positive".into()));
        }
        let out_dir = PathBuf::from(case.raw("out").unwrap_or("out"));
        let deterministic = case.bool_or("deterministic", true)?;
        let seed: u64 = case.parse_or("seed", 0)?;
        let rk_scheme = case.raw("rk").unwrap_or("lserk54").to_string();
        if crate::time::RkScheme::by_name(&rk_scheme).is_none() {
            return Err(SolverError::Config(format!(
                "unknown Runge-Kutta scheme `{rk_scheme}`"
            )));
        }
        case.finish()?;

        let mut mesh_section = SectionReader::new(&sections, "mesh");
        let mesh = if equation.is_one_dimensional() {
            let length: f64 = mesh_section.parse_or("length", 2.0 * std::f64::consts::PI)?;
            let elements: usize = mesh_section.parse_or("elements", 4)?;
            let periodic = mesh_section.bool_or("periodic", true)?;
            mesh_section.finish()?;
            MeshSpec::Line1d {
                length,
                elements,
                periodic,
            }
        } else {
            match mesh_section.raw("source").unwrap_or("box") {
                "box" => {
                    let extent = mesh_section
                        .triple("extent")?
                        .unwrap_or([2.0 * std::f64::consts::PI; 3]);
                    let elements_f = mesh_section.triple("elements")?.unwrap_or([2.0; 3]);
                    let mut elements = [0usize; 3];
                    for (e, f) in elements.iter_mut().zip(elements_f) {
                        if f < 1.0 || f.fract() != 0.0 {
                            return Err(SolverError::Config(
                                "mesh elements must be positive integers".into(),
                            ));
                        }
                        *e = f as usize;
                    }
                    let warp = match mesh_section.raw("warp").unwrap_or("none") {
                        "none" => Warp::None,
                        "sine" => Warp::Sine {
                            amplitude: mesh_section.parse_or("warp_amplitude", 0.1)?,
                        },
                        other => {
                            return Err(SolverError::Config(format!(
                                "warp must be `none` or `sine`, got `{other}`"
                            )))
                        }
                    };
                    // consume the amplitude key even for warp = none
                    let _ = mesh_section.raw("warp_amplitude");
                    mesh_section.finish()?;
                    MeshSpec::Box3d {
                        extent,
                        elements,
                        warp,
                    }
                }
                "file" => {
                    let path = PathBuf::from(mesh_section.required("file")?);
                    mesh_section.finish()?;
                    MeshSpec::File3d(path)
                }
                other => {
                    return Err(SolverError::Config(format!(
                        "mesh source must be `box` or `file`, got `{other}`"
                    )))
                }
            }
        };

        let mut scheme_section = SectionReader::new(&sections, "scheme");
        let volume = match scheme_section
            .raw("volume")
            .unwrap_or("entropy_conservative")
        {
            "entropy_conservative" | "ec" => VolumeMode::EntropyConservative,
            "standard" => VolumeMode::Standard,
            other => {
                return Err(SolverError::Config(format!(
                    "volume mode must be entropy_conservative or standard, got `{other}`"
                )))
            }
        };
        let interface = match scheme_section.raw("interface") {
            None => {
                if equation == Equation::AdvDiff1d {
                    InterfaceFlux::Upwind
                } else {
                    InterfaceFlux::Ec
                }
            }
            Some("ec") => InterfaceFlux::Ec,
            Some("ec_diss") => InterfaceFlux::EcDissipation,
            Some("upwind") => InterfaceFlux::Upwind,
            Some("central") => InterfaceFlux::Central,
            Some(other) => {
                return Err(SolverError::Config(format!(
                    "interface must be ec, ec_diss, upwind or central, got `{other}`"
                )))
            }
        };
        let sigma: f64 = scheme_section.parse_or("sigma", 1.0)?;
        if !(0.0..=1.0).contains(&sigma) {
            return Err(SolverError::Config("sigma must be in [0, 1]".into()));
        }
        scheme_section.finish()?;
        match equation {
            Equation::Nse3d | Equation::Burgers1d => {
                if matches!(interface, InterfaceFlux::Upwind | InterfaceFlux::Central) {
                    return Err(SolverError::Config(
                        "upwind/central interface fluxes are for advdiff1d only".into(),
                    ));
                }
            }
            Equation::AdvDiff1d => {
                if matches!(interface, InterfaceFlux::Ec | InterfaceFlux::EcDissipation) {
                    return Err(SolverError::Config(
                        "advdiff1d takes interface = upwind or central".into(),
                    ));
                }
            }
        }
        let scheme = SchemeConfig {
            volume,
            interface,
            sigma,
            suppress_viscous_interface: false,
        };

        let mut gas_section = SectionReader::new(&sections, "gas");
        let gas = GasParams {
            gamma: gas_section.parse_or("gamma", 1.4)?,
            reynolds: gas_section.f64_maybe_inf("reynolds", f64::INFINITY)?,
            prandtl: gas_section.parse_or("prandtl", 0.72)?,
            mach: gas_section.parse_or("mach", 0.1)?,
            mu: gas_section.parse_or("mu", 1.0)?,
        };
        gas_section.finish()?;
        gas.validate()?;

        let mut initial_section = SectionReader::new(&sections, "initial");
        let initial = match initial_section.raw("name").unwrap_or("constant") {
            "taylor_green" => InitialCondition::TaylorGreen,
            "density_wave" => InitialCondition::DensityWave {
                amplitude: initial_section.parse_or("amplitude", 0.2)?,
                velocity: initial_section
                    .triple("velocity")?
                    .unwrap_or([0.3, 0.2, 0.1]),
                pressure: initial_section.parse_or("pressure", 1.0)?,
            },
            "manufactured_sine" => InitialCondition::ManufacturedSine {
                amplitude: initial_section.parse_or("amplitude", 1.0)?,
                offset: initial_section.parse_or("offset", 0.0)?,
                mode: initial_section.parse_or("mode", 1)?,
            },
            "constant" => InitialCondition::Constant {
                rho: initial_section.parse_or("rho", 1.0)?,
                velocity: initial_section
                    .triple("velocity")?
                    .unwrap_or([0.0, 0.0, 0.0]),
                pressure: initial_section.parse_or("pressure", 1.0)?,
            },
            "table" => InitialCondition::Table(PathBuf::from(initial_section.required("table")?)),
            other => {
                return Err(SolverError::Config(format!(
                    "unknown initial condition `{other}`"
                )))
            }
        };
        initial_section.finish()?;
        match (&initial, equation) {
            (InitialCondition::TaylorGreen | InitialCondition::DensityWave { .. }, eq)
                if eq.is_one_dimensional() =>
            {
                return Err(SolverError::Config(
                    "taylor_green/density_wave initial data are 3D only".into(),
                ));
            }
            (InitialCondition::ManufacturedSine { .. }, Equation::Nse3d) => {
                return Err(SolverError::Config(
                    "manufactured_sine initial data is 1D only".into(),
                ));
            }
            _ => {}
        }

        let mut advdiff_section = SectionReader::new(&sections, "advdiff");
        let advdiff = if equation == Equation::AdvDiff1d {
            let a: f64 = advdiff_section.parse_or("a", 1.0)?;
            let diffusivity = match advdiff_section.raw("b").unwrap_or("const") {
                "const" => Viscosity1d::Constant(advdiff_section.parse_or("b_value", 1.0)?),
                "sine" => Viscosity1d::Sine {
                    offset: advdiff_section.parse_or("b_offset", 1.0)?,
                    amplitude: advdiff_section.parse_or("b_amplitude", 0.5)?,
                },
                other => {
                    return Err(SolverError::Config(format!(
                        "diffusivity must be `const` or `sine`, got `{other}`"
                    )))
                }
            };
            // consume optional keys regardless of the chosen branch
            let _ = advdiff_section.raw("b_value");
            let _ = advdiff_section.raw("b_offset");
            let _ = advdiff_section.raw("b_amplitude");
            advdiff_section.finish()?;
            Some(AdvDiffCoeffs::new(a, diffusivity)?)
        } else {
            advdiff_section.finish()?;
            None
        };

        let mut burgers_section = SectionReader::new(&sections, "burgers");
        let burgers_viscosity: f64 = burgers_section.parse_or("viscosity", 0.0)?;
        if burgers_viscosity < 0.0 {
            return Err(SolverError::Config(
                "burgers viscosity must be nonnegative".into(),
            ));
        }
        burgers_section.finish()?;

        Ok(CaseConfig {
            equation,
            degree,
            t_end,
            cfl,
            cadence,
            out_dir,
            deterministic,
            seed,
            rk_scheme,
            mesh,
            scheme,
            gas,
            initial,
            advdiff,
            burgers_viscosity,
            source_text: text.to_string(),
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, SolverError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}
