//! Scenario files: TOML with the sections `[grid]`, `[set]`, `[map]` and
//! `[run]`. Unknown keys are rejected, and `key.path=value` overrides are
//! applied to the parsed table before it is checked.

use std::path::Path;

use serde::Deserialize;

use crate::driver::{Scenario, Tolerances};
use crate::mergelyan::{CP1Map, RationalMap, SampledMap};
use crate::planar_sets::{GridSpec, Primitive, SetDescriptor};
use crate::target_cp1::{estimate_constants, CP1Point, Spray, DEFAULT_CONSTANT_SAMPLES};
use crate::{Error, Result, C64};

/// Real line (as a strip one cell row on each side) together with the
/// closed unit disc, `f = z` on the disc with a bounded extension along the
/// line, `ε = 0.1` and three steps.
pub const STRIP_DISC: &str = r#"[grid]
window = 6.0
spacing = 0.1

[set]
shapes = ["disc r=1", "hline y=0 width=0.2"]

[map]
kind = "saturated"

[run]
epsilon = 0.1
steps = 3
seed = 7
"#;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub window: f64,
    pub spacing: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SetSection {
    /// Shapes such as `"disc x=0 y=0 r=1"`; the set is their union.
    pub shapes: Vec<String>,
}

/// Initial map.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    /// `1 / (z - at)`
    Pole { at: [f64; 2] },
    /// `num(z) / den(z)`, coefficients `[re, im]` in increasing degree.
    Rational { num: Vec<[f64; 2]>, den: Vec<[f64; 2]> },
    /// `Φ(x) + i y Φ'(x)` with `Φ(x) = x` on `[-1, 1]` and
    /// `sign(x)(1 + tanh(|x| - 1))` outside: `z` on the unit disc, bounded
    /// along the real axis.
    Saturated,
    /// A constant; `infinity = true` for the point at infinity.
    Constant {
        #[serde(default)]
        value: [f64; 2],
        #[serde(default)]
        infinity: bool,
    },
    /// A map in the rational text format, relative to the scenario file.
    File { path: String },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub epsilon: f64,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_degree: Option<usize>,
    #[serde(default)]
    pub max_retries: Option<usize>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub parameter_radius: Option<f64>,
    #[serde(default)]
    pub branch_tolerance: Option<f64>,
    #[serde(default)]
    pub relax_iterations: Option<usize>,
    #[serde(default)]
    pub c_divisor: Option<f64>,
    /// Samples used to estimate the spray constants.
    #[serde(default)]
    pub spray_samples: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub grid: GridSection,
    pub set: SetSection,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub run: Option<RunSection>,
    #[serde(skip)]
    pub base_dir: Option<std::path::PathBuf>,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("the key was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Set `a.b.c = value` in a table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ScenarioFile {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("scenario: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut sc = Self::parse(&text, overrides)?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        Ok(sc)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.window, self.grid.spacing).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn set(&self) -> Result<SetDescriptor> {
        let prims = self
            .set
            .shapes
            .iter()
            .map(|s| s.parse::<Primitive>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if prims.is_empty() {
            return Err(Error::Config("[set] needs at least one shape".into()));
        }
        Ok(SetDescriptor::new(prims))
    }

    pub fn map(&self, grid: &GridSpec) -> Result<CP1Map> {
        let spec = self.map.as_ref().ok_or_else(|| Error::Config("missing [map] section".into()))?;
        let c = |v: &[f64; 2]| C64::new(v[0], v[1]);
        Ok(match spec {
            MapSpec::Identity => RationalMap::identity().into(),
            MapSpec::Pole { at } => {
                RationalMap::from_coefficients(vec![C64::new(1.0, 0.0)], vec![-c(at), C64::new(1.0, 0.0)])?.into()
            }
            MapSpec::Rational { num, den } => {
                RationalMap::from_coefficients(num.iter().map(c).collect(), den.iter().map(c).collect())
                    .map_err(|e| Error::Config(e.to_string()))?
                    .into()
            }
            MapSpec::Saturated => SampledMap::from_fn(*grid, saturated).into(),
            MapSpec::Constant { value, infinity } => {
                let p = if *infinity { CP1Point::infinity() } else { CP1Point::from_chart(c(value)) };
                RationalMap::constant(&p).into()
            }
            MapSpec::File { path } => {
                let p = self.base_dir.as_deref().unwrap_or(Path::new(".")).join(path);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                RationalMap::from_text(&text).map_err(|e| Error::Config(e.to_string()))?.into()
            }
        })
    }

    /// Full driver scenario; `seed` replaces the file's seed when given.
    pub fn scenario(&self, seed: Option<u64>) -> Result<Scenario> {
        let run = self.run.as_ref().ok_or_else(|| Error::Config("missing [run] section".into()))?;
        let grid = self.grid()?;
        let d = Tolerances::default();
        let tolerances = Tolerances {
            max_degree: run.max_degree.unwrap_or(d.max_degree),
            max_retries: run.max_retries.unwrap_or(d.max_retries),
            r0: run.r0.unwrap_or(d.r0),
            parameter_radius: run.parameter_radius.unwrap_or(d.parameter_radius),
            branch_tolerance: run.branch_tolerance.unwrap_or(d.branch_tolerance),
            relax_iterations: run.relax_iterations.unwrap_or(d.relax_iterations),
            c_divisor: run.c_divisor.unwrap_or(d.c_divisor),
        };
        let seed = seed.unwrap_or(run.seed);
        let spray = match run.spray_samples {
            Some(n) => estimate_constants(n, seed),
            None if seed == 0 => Spray::default(),
            None => estimate_constants(DEFAULT_CONSTANT_SAMPLES, seed),
        };
        let sc = Scenario {
            grid,
            set: self.set()?,
            f: self.map(&grid)?,
            epsilon: run.epsilon,
            steps: run.steps,
            seed,
            tolerances,
            spray,
        };
        sc.validate()?;
        Ok(sc)
    }
}

/// `Φ(x) + i y Φ'(x)`, see [`MapSpec::Saturated`].
pub fn saturated(z: C64) -> CP1Point {
    let (x, y) = (z.re, z.im);
    let (p, dp) = if x.abs() <= 1.0 {
        (x, 1.0)
    } else {
        let t = (x.abs() - 1.0).tanh();
        (x.signum() * (1.0 + t), 1.0 - t * t)
    };
    CP1Point::from_chart(C64::new(p, y * dp))
}
