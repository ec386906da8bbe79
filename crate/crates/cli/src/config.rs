//! Job configuration: INI or JSON text, overridden by `--section.key value` flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use cknet_core::backlund::AlphaSlice;

/// Raw `section → key → value` table, sorted for stable echoing.
pub type Table = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "surface",
        &["k_sign", "profile", "theta_step", "kappa", "j0", "a", "b", "j_min", "j_max", "perturb", "perturb_j"],
    ),
    ("rotation", &["theta", "k0", "k_count"]),
    ("backlund", &["mode", "alpha", "alpha_im", "n0", "p", "slice", "y_max", "seed"]),
    ("output", &["mesh", "report"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Trig,
    Hyp,
    Elliptic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub k_sign: i32,
    pub kind: ProfileKind,
    /// Elliptic step `Θ`, or the angle (trig) / rapidity (hyp) step.
    pub theta_step: Option<f64>,
    pub kappa: f64,
    pub j0: i32,
    pub a: f64,
    pub b: f64,
    pub j_range: Option<(i32, i32)>,
    /// Shift of `b` at `perturb_j`.
    pub perturb: Option<(i32, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub theta: f64,
    pub k0: Option<u32>,
    pub k_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    None,
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Real(f64),
    /// `α = π/2 + iy`.
    Imaginary(f64),
    Search {
        n0: u32,
        p: u32,
        slice: AlphaSlice,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backlund {
    pub mode: Mode,
    pub alpha: Option<AlphaChoice>,
    /// Phase of the seed `s̃(j_min, 0) = e^{i·seed}`.
    pub seed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub mesh: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub surface: Surface,
    pub rotation: Rotation,
    pub backlund: Backlund,
    pub output: Output,
    /// The merged table, echoed into reports.
    pub table: Table,
}

/// Parse INI (`[section]` + `key = value`) or, when the text starts with `{`, JSON.
pub fn parse_text(text: &str) -> Result<Table, ConfigError> {
    if text.trim_start().starts_with('{') {
        return parse_json(text);
    }
    let ini = ini::Ini::load_from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
    let mut t = Table::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if props.iter().next().is_some() {
                return err("config: keys outside a section");
            }
            continue;
        };
        let entry = t.entry(section.to_string()).or_default();
        for (k, v) in props.iter() {
            entry.insert(k.to_string(), v.to_string());
        }
    }
    Ok(t)
}

fn parse_json(text: &str) -> Result<Table, ConfigError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
    let obj = v.as_object().ok_or_else(|| ConfigError("config: top level must be an object".into()))?;
    let mut t = Table::new();
    for (section, body) in obj {
        let body =
            body.as_object().ok_or_else(|| ConfigError(format!("config: section {section} must be an object")))?;
        let entry = t.entry(section.clone()).or_default();
        for (k, v) in body {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                _ => return err(format!("config: {section}.{k} must be a scalar")),
            };
            entry.insert(k.clone(), s);
        }
    }
    Ok(t)
}

pub fn read_file(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse_text(&text)
}

/// Apply `--section.key value` pairs.
pub fn apply_overrides(t: &mut Table, args: &[String]) -> Result<(), ConfigError> {
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            return err(format!("unexpected argument {flag}"));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k, v.to_string()),
            None => (key, it.next().ok_or_else(|| ConfigError(format!("missing value for --{key}")))?.clone()),
        };
        let (section, name) =
            key.split_once('.').ok_or_else(|| ConfigError(format!("flag --{key} must be --section.key")))?;
        t.entry(section.to_string()).or_default().insert(name.to_string(), value);
    }
    Ok(())
}

struct Reader<'a> {
    t: &'a Table,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.t.get(section).and_then(|s| s.get(key)).map(|s| s.trim()).filter(|s| !s.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError(format!("{section}.{key}: cannot parse {v:?}"))),
        }
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parse(section, key)?;
        if v.is_some_and(|v| !v.is_finite()) {
            return err(format!("{section}.{key} must be finite"));
        }
        Ok(v)
    }
}

fn check_keys(t: &Table) -> Result<(), ConfigError> {
    for (section, keys) in t {
        let Some((_, allowed)) = KEYS.iter().find(|(s, _)| s == section) else {
            return err(format!("unknown section [{section}]"));
        };
        for k in keys.keys() {
            if !allowed.contains(&k.as_str()) {
                return err(format!("unknown key {section}.{k}"));
            }
        }
    }
    Ok(())
}

/// Validate a merged table into a [`JobConfig`].
pub fn validate(t: Table) -> Result<JobConfig, ConfigError> {
    check_keys(&t)?;
    let r = Reader { t: &t };

    let k_sign: i32 = r.parse("surface", "k_sign")?.unwrap_or(-1);
    if k_sign != 1 && k_sign != -1 {
        return err("surface.k_sign must be 1 or -1");
    }
    let kind = match r.raw("surface", "profile").unwrap_or("elliptic") {
        "trig" => ProfileKind::Trig,
        "hyp" => ProfileKind::Hyp,
        "elliptic" => ProfileKind::Elliptic,
        other => return err(format!("surface.profile: unknown kind {other:?}")),
    };
    match (kind, k_sign) {
        (ProfileKind::Trig, -1) => return err("surface.profile = trig needs k_sign = 1"),
        (ProfileKind::Hyp, 1) => return err("surface.profile = hyp needs k_sign = -1"),
        _ => {}
    }
    let kappa = r.f64("surface", "kappa")?.unwrap_or(1.0);
    if !(kappa > 0.0) {
        return err("surface.kappa must be positive");
    }
    let j0: i32 = r.parse("surface", "j0")?.unwrap_or(4);
    if j0 < 2 {
        return err("surface.j0 must be at least 2");
    }
    let theta_step = r.f64("surface", "theta_step")?;
    if theta_step.is_some_and(|v| v == 0.0) {
        return err("surface.theta_step must be nonzero");
    }
    if kind != ProfileKind::Elliptic && theta_step.is_none() {
        return err("surface.theta_step is required for trig and hyp profiles");
    }
    let j_range = match (r.parse::<i32>("surface", "j_min")?, r.parse::<i32>("surface", "j_max")?) {
        (Some(a), Some(b)) if a < b => Some((a, b)),
        (Some(_), Some(_)) => return err("surface.j_min must be below surface.j_max"),
        (None, None) => None,
        _ => return err("surface.j_min and surface.j_max go together"),
    };
    if kind != ProfileKind::Elliptic && j_range.is_none() {
        return err("surface.j_min and surface.j_max are required for trig and hyp profiles");
    }
    let perturb = match (r.f64("surface", "perturb")?, r.parse::<i32>("surface", "perturb_j")?) {
        (Some(e), j) => Some((j.unwrap_or(0), e)),
        (None, Some(_)) => return err("surface.perturb_j needs surface.perturb"),
        (None, None) => None,
    };
    let surface = Surface {
        k_sign,
        kind,
        theta_step,
        kappa,
        j0,
        a: r.f64("surface", "a")?.unwrap_or(if kind == ProfileKind::Trig { kappa } else { 0.0 }),
        b: r.f64("surface", "b")?.unwrap_or(0.0),
        j_range,
        perturb,
    };

    let k0: Option<u32> = r.parse("rotation", "k0")?;
    let theta = match (r.f64("rotation", "theta")?, k0) {
        (Some(th), Some(k0)) => {
            if (th - 2.0 * PI / k0 as f64).abs() > 1e-12 {
                return err(format!("rotation.theta = {th} contradicts rotation.k0 = {k0}"));
            }
            th
        }
        (Some(th), None) => th,
        (None, Some(k0)) => 2.0 * PI / k0 as f64,
        (None, None) => return err("one of rotation.theta, rotation.k0 is required"),
    };
    if k0.is_some_and(|k| k < 3) || theta == 0.0 || theta.abs() >= PI {
        return err("rotation angle must lie in (−π, 0) ∪ (0, π); k0 must be at least 3");
    }
    let k_count: usize = r.parse("rotation", "k_count")?.unwrap_or(match k0 {
        Some(k) => k as usize + 1,
        None => 8,
    });
    if k_count < 2 {
        return err("rotation.k_count must be at least 2");
    }
    let rotation = Rotation { theta, k0, k_count };

    let mode = match r.raw("backlund", "mode").unwrap_or("none") {
        "none" => Mode::None,
        "single" => Mode::Single,
        "double" => Mode::Double,
        other => return err(format!("backlund.mode: unknown mode {other:?}")),
    };
    let n0: Option<u32> = r.parse("backlund", "n0")?;
    let alpha = match (r.f64("backlund", "alpha")?, r.f64("backlund", "alpha_im")?, n0) {
        (Some(a), None, None) => {
            if a == 0.0 || a.abs() >= PI {
                return err("backlund.alpha must lie in (−π, 0) ∪ (0, π)");
            }
            Some(AlphaChoice::Real(a))
        }
        (None, Some(y), None) => {
            if y == 0.0 {
                return err("backlund.alpha_im must be nonzero");
            }
            Some(AlphaChoice::Imaginary(y))
        }
        (None, None, Some(n0)) => {
            let p: u32 = r.parse("backlund", "p")?.unwrap_or(1);
            let y_max = r.f64("backlund", "y_max")?.unwrap_or(3.0);
            let slice = match r.raw("backlund", "slice").unwrap_or("real") {
                "real" => AlphaSlice::Real,
                "imaginary" => AlphaSlice::Imaginary { y_max },
                other => return err(format!("backlund.slice: unknown slice {other:?}")),
            };
            Some(AlphaChoice::Search { n0, p, slice })
        }
        (None, None, None) => None,
        _ => return err("give exactly one of backlund.alpha, backlund.alpha_im, backlund.n0"),
    };
    if mode == Mode::Single && matches!(alpha, Some(AlphaChoice::Imaginary(_))) {
        return err("a single transform needs real alpha");
    }
    let backlund = Backlund { mode, alpha, seed: r.f64("backlund", "seed")?.unwrap_or(0.0) };

    let output = Output {
        mesh: r.raw("output", "mesh").map(PathBuf::from),
        report: r.raw("output", "report").map(PathBuf::from),
    };
    Ok(JobConfig { surface, rotation, backlund, output, table: t })
}

/// Read the optional config file, apply flag overrides and validate.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<JobConfig, ConfigError> {
    let mut t = match path {
        Some(p) => read_file(p)?,
        None => Table::new(),
    };
    apply_overrides(&mut t, overrides)?;
    validate(t)
}
