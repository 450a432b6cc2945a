use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::builtin::{LinearInteraction, SuperlinearInteraction};
use crate::model::Model;
use crate::noise::{Coupling, MarkDistribution, NoisePlan};
use crate::schemes::SchemeKind;

/// Built-in problem and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelChoice {
    /// [`LinearInteraction`] with drift rate, volatility and jump scale.
    Example1 {
        drift_rate: f64,
        volatility: f64,
        jump_scale: f64,
    },
    /// [`SuperlinearInteraction`].
    Example2,
}

impl ModelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ModelChoice::Example1 { .. } => "example1",
            ModelChoice::Example2 => "example2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strong,
    Weak,
    Both,
}

impl Mode {
    pub fn strong(self) -> bool {
        matches!(self, Mode::Strong | Mode::Both)
    }

    pub fn weak(self) -> bool {
        matches!(self, Mode::Weak | Mode::Both)
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Strong => "strong",
            Mode::Weak => "weak",
            Mode::Both => "both",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(Mode::Strong),
            "weak" => Ok(Mode::Weak),
            "both" => Ok(Mode::Both),
            _ => Err(Error::config(format!("unknown mode {s:?} (strong, weak, both)"))),
        }
    }
}

/// What the coarse solutions are compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// The same scheme on the dyadic grid with `2^r` steps, driven by the
    /// same noise.
    FineGrid(u32),
    /// Exact mean from the moment equations; linear model, weak mode only.
    MomentOracle,
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "moment_oracle" {
            return Ok(Reference::MomentOracle);
        }
        let r = s
            .strip_prefix("fine_grid(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::config(format!("unknown reference {s:?} (fine_grid(r), moment_oracle)")))?;
        let r = r
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("fine_grid exponent {r:?} is not an integer")))?;
        Ok(Reference::FineGrid(r))
    }
}

impl std::fmt::Display for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reference::FineGrid(r) => write!(f, "fine_grid({r})"),
            Reference::MomentOracle => f.write_str("moment_oracle"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Report,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "report" => Ok(Format::Report),
            _ => Err(Error::config(format!("unknown format {s:?} (csv, report)"))),
        }
    }
}

/// A convergence study.
///
/// Text form: one `key = value` per line, `#` starts a comment. Keys:
///
/// | key | meaning | default |
/// |-----|---------|---------|
/// | `model` | `example1` or `example2` | `example1` |
/// | `a`, `b`, `c` | drift rate, volatility, jump scale of `example1` | 1.25, 0.75, 0.25 |
/// | `intensity` | jump rate | 1.0 |
/// | `mark_low`, `mark_high` | uniform mark law | -0.5, 0.5 |
/// | `x0` | initial value of the law particles | 0.1 |
/// | `X0` | initial value of the target chains | 0.1 |
/// | `horizon` | terminal time | 1.0 |
/// | `steps` | `16,32,64` or a doubling range `16..256` | `16..256` |
/// | `m_law` | law particles | 500 |
/// | `m_err` | target replications | 500 |
/// | `seed` | run seed | 1 |
/// | `scheme` | `euler`, `strong1`, `weak2`, `compensated_euler` | `euler` |
/// | `mode` | `strong`, `weak`, `both` | `both` |
/// | `reference` | `fine_grid(r)` or `moment_oracle` | `fine_grid(12)` |
/// | `output` | output path, stdout if absent | |
/// | `format` | `csv` or `report` | `csv` |
/// | `threads` | worker threads, all cores if absent | |
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub intensity: f64,
    pub mark_low: f64,
    pub mark_high: f64,
    pub law_x0: f64,
    pub target_x0: f64,
    pub horizon: f64,
    pub steps: Vec<usize>,
    pub m_law: usize,
    pub m_err: usize,
    pub seed: u64,
    pub scheme: SchemeKind,
    pub mode: Mode,
    pub reference: Reference,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelChoice::Example1 {
                drift_rate: LinearInteraction::DRIFT_RATE,
                volatility: LinearInteraction::VOLATILITY,
                jump_scale: LinearInteraction::JUMP_SCALE,
            },
            intensity: 1.0,
            mark_low: -0.5,
            mark_high: 0.5,
            law_x0: 0.1,
            target_x0: 0.1,
            horizon: 1.0,
            steps: vec![16, 32, 64, 128, 256],
            m_law: 500,
            m_err: 500,
            seed: 1,
            scheme: SchemeKind::Euler,
            mode: Mode::Both,
            reference: Reference::FineGrid(12),
            output: None,
            format: Format::Csv,
            threads: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {value:?}")))
}

fn parse_steps(value: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = value.split_once("..") {
        let (lo, hi): (usize, usize) = (parse_num("steps", lo.trim())?, parse_num("steps", hi.trim())?);
        if lo == 0 || hi < lo {
            return Err(Error::config(format!("steps: empty range {value:?}")));
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            out.push(n);
            n *= 2;
        }
        return Ok(out);
    }
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num("steps", s))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let (mut a, mut b, mut c) = (None, None, None);
        let mut model = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model" => model = Some(value.to_string()),
                "a" => a = Some(parse_num(key, value)?),
                "b" => b = Some(parse_num(key, value)?),
                "c" => c = Some(parse_num(key, value)?),
                "intensity" => cfg.intensity = parse_num(key, value)?,
                "mark_low" => cfg.mark_low = parse_num(key, value)?,
                "mark_high" => cfg.mark_high = parse_num(key, value)?,
                "x0" => cfg.law_x0 = parse_num(key, value)?,
                "X0" => cfg.target_x0 = parse_num(key, value)?,
                "horizon" => cfg.horizon = parse_num(key, value)?,
                "steps" => cfg.steps = parse_steps(value)?,
                "m_law" => cfg.m_law = parse_num(key, value)?,
                "m_err" => cfg.m_err = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "scheme" => cfg.scheme = value.parse()?,
                "mode" => cfg.mode = value.parse()?,
                "reference" => cfg.reference = value.parse()?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "format" => cfg.format = value.parse()?,
                "threads" => cfg.threads = Some(parse_num(key, value)?),
                other => return Err(Error::config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        cfg.model = match model.as_deref().unwrap_or("example1") {
            "example1" => ModelChoice::Example1 {
                drift_rate: a.unwrap_or(LinearInteraction::DRIFT_RATE),
                volatility: b.unwrap_or(LinearInteraction::VOLATILITY),
                jump_scale: c.unwrap_or(LinearInteraction::JUMP_SCALE),
            },
            "example2" => {
                if a.or(b).or(c).is_some() {
                    return Err(Error::config("keys a, b, c only apply to example1"));
                }
                ModelChoice::Example2
            }
            other => return Err(Error::config(format!("unknown model {other:?} (example1, example2)"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        if self.steps.is_empty() {
            return bad("steps: at least one resolution is required".into());
        }
        if self.steps.contains(&0) {
            return bad("steps: resolutions must be positive".into());
        }
        if self.steps.windows(2).any(|w| w[0] >= w[1]) {
            return bad("steps: resolutions must be strictly increasing".into());
        }
        if self.m_law == 0 || self.m_err == 0 {
            return bad("m_law and m_err must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return bad(format!("intensity {} must be finite and >= 0", self.intensity));
        }
        MarkDistribution::uniform(self.mark_low, self.mark_high).map_err(|e| Error::config(e.to_string()))?;
        if !(self.law_x0.is_finite() && self.target_x0.is_finite()) {
            return bad("x0 and X0 must be finite".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        match self.reference {
            Reference::FineGrid(r) => {
                if r == 0 || r > 24 {
                    return bad(format!("fine_grid({r}): exponent must lie in 1..=24"));
                }
                if let Some(n) = self.steps.iter().find(|&&n| (1usize << r) % n != 0) {
                    return bad(format!("steps: {n} does not divide 2^{r}"));
                }
            }
            Reference::MomentOracle => {
                if !matches!(self.model, ModelChoice::Example1 { .. }) {
                    return bad("moment_oracle is only available for example1".into());
                }
                if self.mode != Mode::Weak {
                    return bad("moment_oracle gives means only; set mode = weak".into());
                }
            }
        }
        let model = self.build_model();
        self.scheme.check(model.as_ref()).map_err(|e| Error::config(e.to_string()))
    }

    pub fn marks(&self) -> MarkDistribution {
        MarkDistribution::Uniform {
            low: self.mark_low,
            high: self.mark_high,
        }
    }

    pub fn linear_model(&self) -> Option<LinearInteraction> {
        match self.model {
            ModelChoice::Example1 {
                drift_rate,
                volatility,
                jump_scale,
            } => Some(LinearInteraction {
                drift_rate,
                volatility,
                jump_scale,
                intensity: self.intensity,
                marks: self.marks(),
            }),
            ModelChoice::Example2 => None,
        }
    }

    pub fn build_model(&self) -> Box<dyn Model> {
        match self.linear_model() {
            Some(m) => Box::new(m),
            None => Box::new(SuperlinearInteraction {
                intensity: self.intensity,
                marks: self.marks(),
            }),
        }
    }

    pub fn noise_plan(&self) -> NoisePlan {
        NoisePlan {
            intensity: self.intensity,
            horizon: self.horizon,
            marks: self.marks(),
            coupling: match self.reference {
                Reference::FineGrid(r) => Coupling::FineGrid(r),
                Reference::MomentOracle => Coupling::Independent,
            },
        }
    }

    /// Canonical text form; parses back to the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model = {}", self.model.name());
        if let ModelChoice::Example1 {
            drift_rate,
            volatility,
            jump_scale,
        } = self.model
        {
            let _ = writeln!(s, "a = {drift_rate}\nb = {volatility}\nc = {jump_scale}");
        }
        let steps: Vec<String> = self.steps.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "intensity = {}", self.intensity);
        let _ = writeln!(s, "mark_low = {}\nmark_high = {}", self.mark_low, self.mark_high);
        let _ = writeln!(s, "x0 = {}\nX0 = {}", self.law_x0, self.target_x0);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "steps = {}", steps.join(","));
        let _ = writeln!(s, "m_law = {}\nm_err = {}", self.m_law, self.m_err);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "reference = {}", self.reference);
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        let _ = writeln!(
            s,
            "format = {}",
            match self.format {
                Format::Csv => "csv",
                Format::Report => "report",
            }
        );
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads = {t}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        assert_eq!(ExperimentConfig::parse("# nothing\n\n").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn full_file() {
        let text = "model = example2\nintensity = 1.0 # rate\nx0 = 0.15\nX0 = 0.05\nsteps = 8..128\n\
                    m_law = 100\nm_err = 200\nseed = 42\nscheme = weak2\nmode = weak\nreference = fine_grid(10)\n\
                    format = report\nthreads = 2\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.model, ModelChoice::Example2);
        assert_eq!(cfg.steps, vec![8, 16, 32, 64, 128]);
        assert_eq!((cfg.law_x0, cfg.target_x0), (0.15, 0.05));
        assert_eq!(cfg.scheme, SchemeKind::Weak2);
        assert_eq!(cfg.reference, Reference::FineGrid(10));
        assert_eq!(cfg.format, Format::Report);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "colour = blue",
            "steps = ",
            "steps = 16,8",
            "steps = 3\nreference = fine_grid(4)",
            "m_law = 0",
            "model = example3",
            "model = example2\na = 1",
            "reference = moment_oracle",
            "reference = moment_oracle\nmode = weak\nmodel = example2",
            "reference = fine_grid(x)",
            "scheme = rk4",
            "intensity = -1",
            "mark_low = 1\nmark_high = 0",
            "no equals sign",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text:?}");
        }
        assert!(ExperimentConfig::parse("reference = moment_oracle\nmode = weak").is_ok());
    }
}
