//! Plain-text experiment configuration.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, keys are
//! case-sensitive.  Coefficient profiles are written as
//!
//! ```text
//! const:<v>                      constant value
//! constexp:<base>,<amp>,<rate>   base + amp * exp(-rate r)
//! zero                           identically zero (Gamma only)
//! table:<path>                   CSV table "r,value", monotone cubic
//! ```
//!
//! Tabulated profiles clamp to their end values outside the table.  Every
//! numeric key is validated here; errors carry the offending line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::RadialGeometry;
use crate::interp::MonotoneCubic;
use crate::profile::{CoefficientProfile, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Solve,
    Energy,
    Zeros,
    Green,
    Resolvent,
    SmallSol,
    DualVar,
    Strichartz,
    Sweep,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => ExperimentKind::Solve,
            "energy" => ExperimentKind::Energy,
            "zeros" => ExperimentKind::Zeros,
            "green" => ExperimentKind::Green,
            "resolvent" => ExperimentKind::Resolvent,
            "smallsol" => ExperimentKind::SmallSol,
            "dualvar" => ExperimentKind::DualVar,
            "strichartz" => ExperimentKind::Strichartz,
            "sweep" => ExperimentKind::Sweep,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Energy => "energy",
            ExperimentKind::Zeros => "zeros",
            ExperimentKind::Green => "green",
            ExperimentKind::Resolvent => "resolvent",
            ExperimentKind::SmallSol => "smallsol",
            ExperimentKind::DualVar => "dualvar",
            ExperimentKind::Strichartz => "strichartz",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

/// Parsed key/value pairs with their line numbers, in file order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub entries: Vec<(String, String, usize)>,
}

impl RawConfig {
    pub fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, v, _)| (k.clone(), v.clone()))
            .collect()
    }
}

/// Syntax pass: split into key = value entries.  Never panics on malformed
/// input; unknown keys are caught later by the experiment builder.
pub fn parse_config(text: &str) -> Result<RawConfig> {
    let mut entries = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::config(line_no, "empty key"));
        }
        if value.is_empty() {
            return Err(Error::config(line_no, format!("empty value for key {key:?}")));
        }
        entries.push((key.to_string(), value.to_string(), line_no));
    }
    Ok(RawConfig { entries })
}

/// Parse a tabulated profile: CSV with the mandatory header "r,value".
pub fn parse_profile_table(text: &str) -> Result<MonotoneCubic> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::config(1, "empty table"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["r", "value"] {
        return Err(Error::config(
            1,
            format!("table header must be \"r,value\", got {header:?}"),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (a, b) = (fields.next(), fields.next());
        if fields.next().is_some() {
            return Err(Error::config(line_no, "too many fields"));
        }
        let parse = |s: Option<&str>| -> Result<f64> {
            let s = s
                .ok_or_else(|| Error::config(line_no, "missing field"))?
                .trim();
            s.parse::<f64>()
                .map_err(|_| Error::config(line_no, format!("not a number: {s:?}")))
        };
        let (x, y) = (parse(a)?, parse(b)?);
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::config(line_no, "non-finite table entry"));
        }
        xs.push(x);
        ys.push(y);
    }
    MonotoneCubic::new(xs, ys).map_err(|e| Error::config(0, e.to_string()))
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub geometry: RadialGeometry,
    pub coeffs: CoefficientProfile,
    pub dim: u32,
    pub lambda: f64,
    pub gamma0: f64,
    pub r_max: f64,
    pub tol: f64,
    pub seed: u64,
    pub grid_n: usize,
    pub max_iter: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub r_exponents: Vec<f64>,
    pub radii: Vec<f64>,
    pub sweep_gamma0: Vec<f64>,
    pub sweep_p: Vec<f64>,
    pub bump_center: f64,
    pub bump_width: f64,
    pub pq: (f64, f64),
    pub check_convolution: bool,
    pub echo: BTreeMap<String, String>,
}

pub fn load_config(path: &Path) -> Result<(RawConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let raw = parse_config(&text)?;
    let base = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((raw, base))
}

/// Build and validate the experiment; `base_dir` anchors table paths and
/// `kind_override` comes from the CLI subcommand.
pub fn build_experiment(
    raw: &RawConfig,
    base_dir: &Path,
    kind_override: Option<ExperimentKind>,
) -> Result<ExperimentConfig> {
    let kind = match (raw.get("experiment"), kind_override) {
        (Some((v, line)), over) => {
            let parsed = ExperimentKind::parse(v)
                .ok_or_else(|| Error::config(line, format!("unknown experiment kind {v:?}")))?;
            if let Some(o) = over {
                if o != parsed {
                    return Err(Error::config(
                        line,
                        format!(
                            "config says experiment = {} but the subcommand is {}",
                            parsed.name(),
                            o.name()
                        ),
                    ));
                }
            }
            parsed
        }
        (None, Some(o)) => o,
        (None, None) => return Err(Error::config(0, "missing key: experiment")),
    };

    let f64_key = |key: &str, default: Option<f64>| -> Result<f64> {
        match raw.get(key) {
            Some((v, line)) => v
                .parse::<f64>()
                .map_err(|_| Error::config(line, format!("key {key}: not a number: {v:?}")))
                .and_then(|x| {
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::config(line, format!("key {key}: non-finite value")))
                    }
                }),
            None => default.ok_or_else(|| Error::config(0, format!("missing key: {key}"))),
        }
    };
    let list_key = |key: &str, default: &[f64]| -> Result<Vec<f64>> {
        match raw.get(key) {
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(line, format!("key {key}: bad entry {s:?}")))
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    };

    let geometry = match raw.get("geometry") {
        Some(("hyperbolic", line)) => {
            let dim = f64_key("dim", Some(3.0))? as u32;
            if dim < 2 {
                return Err(Error::config(line, "hyperbolic model needs dim >= 2"));
            }
            RadialGeometry::hyperbolic(dim)
        }
        Some(("euclidean", line)) => {
            let dim = f64_key("dim", Some(3.0))? as u32;
            if dim < 2 {
                return Err(Error::config(line, "euclidean model needs dim >= 2"));
            }
            RadialGeometry::euclidean(dim)
        }
        Some(("damekricci", line)) => {
            let m = f64_key("m", None)? as u32;
            let k = f64_key("k", None)? as u32;
            if m < 1 || k < 1 {
                return Err(Error::config(line, "Damek-Ricci model needs m, k >= 1"));
            }
            RadialGeometry::damek_ricci(m, k)
        }
        Some((other, line)) => {
            return Err(Error::config(
                line,
                format!("unknown geometry {other:?} (hyperbolic | euclidean | damekricci)"),
            ))
        }
        None => RadialGeometry::hyperbolic(3),
    };
    let dim = geometry.dimension().unwrap_or(3);

    let lambda = f64_key("lambda", Some(1.0))?;
    let p = f64_key("p", Some(3.0))?;

    let profile_key = |key: &str| -> Result<Option<RadialProfile>> {
        match raw.get(key) {
            None => Ok(None),
            Some((spec, line)) => parse_profile_spec(spec, base_dir, line).map(Some),
        }
    };
    let gamma = profile_key("Gamma")?.unwrap_or(RadialProfile::Zero);
    let coeffs = match profile_key("V")? {
        Some(v) => {
            let mut c = CoefficientProfile::new(v, gamma, p)?;
            if raw.get("lambda").is_some() {
                c.lambda = Some(lambda);
            }
            c
        }
        None => CoefficientProfile::helmholtz(&geometry, lambda, gamma, p)?,
    };

    let r_max = f64_key("r_max", Some(30.0))?;
    let tol = f64_key("tol", Some(1e-10))?;
    if !(r_max > 0.0) {
        return Err(Error::config(0, format!("r_max must be positive, got {r_max}")));
    }
    if !(tol > 1e-14 && tol < 1e-2) {
        return Err(Error::config(
            0,
            format!("tol must lie in (1e-14, 1e-2), got {tol}"),
        ));
    }
    let radii = list_key("radii", &[10.0, 20.0, 30.0, 40.0])?;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::config(
            0,
            "key radii must be a positive increasing list".to_string(),
        ));
    }
    let r_exponents = list_key("r_exponents", &[2.0, 2.1, 2.5, 3.0, 4.0])?;
    if r_exponents.is_empty() || r_exponents.iter().any(|&e| e < 1.0) {
        return Err(Error::config(
            0,
            "key r_exponents must be a nonempty list of values >= 1".to_string(),
        ));
    }
    let grid_n = f64_key("grid_n", Some(4000.0))? as usize;
    if grid_n < 16 {
        return Err(Error::config(0, "key grid_n must be at least 16".to_string()));
    }
    let epsilon = f64_key("epsilon", Some(1e-3))?;
    if epsilon < 0.0 {
        return Err(Error::config(0, "key epsilon must be nonnegative".to_string()));
    }
    let bump_width = f64_key("bump_width", Some(0.8))?;
    if !(bump_width > 0.0) {
        return Err(Error::config(0, "key bump_width must be positive".to_string()));
    }
    let sweep_gamma0 = list_key("sweep_gamma0", &[1e-3, 1e-2, 0.1, 1.0, 10.0])?;
    let sweep_p = list_key("sweep_p", &[2.5, 3.0, 4.0])?;
    if sweep_gamma0.is_empty() || sweep_p.is_empty() || sweep_p.iter().any(|&x| x <= 2.0) {
        return Err(Error::config(
            0,
            "sweep lists must be nonempty with every p > 2".to_string(),
        ));
    }

    Ok(ExperimentConfig {
        kind,
        geometry,
        coeffs,
        dim,
        lambda,
        gamma0: f64_key("gamma0", Some(1.0))?,
        r_max,
        tol,
        seed: f64_key("seed", Some(0.0))? as u64,
        grid_n,
        max_iter: f64_key("max_iter", Some(50.0))? as usize,
        epsilon,
        mu: f64_key("mu", Some(0.1))?,
        r_exponents,
        radii,
        sweep_gamma0,
        sweep_p,
        bump_center: f64_key("bump_center", Some(2.0))?,
        bump_width,
        pq: {
            let v = list_key("pq", &[1.5, 6.0])?;
            if v.len() != 2 {
                return Err(Error::config(0, "key pq needs exactly two entries"));
            }
            (v[0], v[1])
        },
        check_convolution: matches!(raw.get("check_convolution"), Some(("true", _))),
        echo: raw.echo(),
    })
}

fn parse_profile_spec(spec: &str, base_dir: &Path, line: usize) -> Result<RadialProfile> {
    if spec == "zero" {
        return Ok(RadialProfile::Zero);
    }
    if let Some(v) = spec.strip_prefix("const:") {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::config(line, format!("const profile: bad number {v:?}")))?;
        return Ok(RadialProfile::Constant(x));
    }
    if let Some(v) = spec.strip_prefix("constexp:") {
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::config(
                line,
                "constexp profile needs base,amp,rate".to_string(),
            ));
        }
        let nums: Result<Vec<f64>> = parts
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::config(line, format!("constexp: bad number {s:?}")))
            })
            .collect();
        let nums = nums?;
        return Ok(RadialProfile::ConstPlusExp {
            base: nums[0],
            amp: nums[1],
            rate: nums[2],
        });
    }
    if let Some(path) = spec.strip_prefix("table:") {
        let full = base_dir.join(path.trim());
        let text = std::fs::read_to_string(&full).map_err(|e| {
            Error::config(line, format!("table {}: {e}", full.display()))
        })?;
        return Ok(RadialProfile::Table(parse_profile_table(&text)?));
    }
    Err(Error::config(
        line,
        format!("unknown profile spec {spec:?} (const:|constexp:|table:|zero)"),
    ))
}
