//! Parsing of the shared flags: behaviors, named models, targets, levels and
//! constraint modes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use randcert::bell::{Behavior, BellExpression, BinaryCorrelators, Scenario};
use randcert::digp::{GuessingProblem, Target};
use randcert::npa::Level;
use randcert::quantum::{
    cglmp_behavior, cglmp_expression, chsh_noise_behavior, i1beta_expression,
    partial_entangled_behavior,
};
use randcert::solver::SolverSettings;

/// Where the behavior comes from.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Behavior file (JSON, correlator JSON or CSV; see `convert`).
    #[arg(long, conflicts_with = "model")]
    pub behavior: Option<PathBuf>,
    /// Named model: chsh-noise, partial, cglmp, uniform, pr-box.
    #[arg(long)]
    pub model: Option<String>,
    /// Visibility for chsh-noise and partial.
    #[arg(long)]
    pub v: Option<f64>,
    /// Schmidt angle θ in radians for partial.
    #[arg(long, conflicts_with = "theta_frac")]
    pub theta: Option<f64>,
    /// θ as a fraction of π, written `27/200pi`.
    #[arg(long)]
    pub theta_frac: Option<String>,
    /// State parameter for cglmp.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl Source {
    pub fn behavior(&self) -> Result<Behavior> {
        match (&self.behavior, &self.model) {
            (Some(path), _) => read_behavior(path, None),
            (None, Some(name)) => model_behavior(name, self),
            (None, None) => bail!("give --behavior <file> or --model <name>"),
        }
    }

    fn theta(&self) -> Result<f64> {
        match (&self.theta, &self.theta_frac) {
            (Some(t), _) => Ok(*t),
            (None, Some(f)) => parse_theta_frac(f),
            (None, None) => bail!("model partial needs --theta or --theta-frac"),
        }
    }
}

pub fn model_behavior(name: &str, src: &Source) -> Result<Behavior> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| anyhow!("model {name} needs --{flag}"));
    Ok(match name {
        "chsh-noise" => chsh_noise_behavior(src.v.unwrap_or(1.0))?,
        "partial" | "partial-entangled" => {
            partial_entangled_behavior(src.theta()?, src.v.unwrap_or(1.0))?
        }
        "cglmp" => cglmp_behavior(need(src.alpha, "alpha")?)?,
        "uniform" => Behavior::uniform(Scenario::chsh()),
        "pr-box" => Behavior::pr_box(),
        other => bail!("unknown model {other:?}"),
    })
}

/// `27/200pi` → 27π/200; a bare fraction without `pi` is read the same way.
pub fn parse_theta_frac(text: &str) -> Result<f64> {
    let body = text.trim().trim_end_matches("pi").trim_end_matches('π');
    let (num, den) = body
        .split_once('/')
        .ok_or_else(|| anyhow!("expected p/q or p/qpi, got {text:?}"))?;
    let (num, den): (f64, f64) = (num.trim().parse()?, den.trim().parse()?);
    if den == 0.0 {
        bail!("zero denominator in {text:?}");
    }
    Ok(num / den * PI)
}

/// `local:x` or `global:x,y`, 1-based.
pub fn parse_target(text: &str) -> Result<Target> {
    let one = |s: &str| -> Result<usize> {
        let v: usize = s.trim().parse().with_context(|| format!("bad input index {s:?}"))?;
        if v == 0 {
            bail!("inputs are numbered from 1");
        }
        Ok(v - 1)
    };
    match text.split_once(':') {
        Some(("local", x)) => Ok(Target::Local { x: one(x)? }),
        Some(("global", xy)) => {
            let (x, y) = xy
                .split_once(',')
                .ok_or_else(|| anyhow!("expected global:x,y, got {text:?}"))?;
            Ok(Target::Global { x: one(x)?, y: one(y)? })
        }
        _ => bail!("expected local:x or global:x,y, got {text:?}"),
    }
}

pub fn format_target(t: &Target) -> String {
    match *t {
        Target::Local { x } => format!("local:{}", x + 1),
        Target::Global { x, y } => format!("global:{},{}", x + 1, y + 1),
    }
}

pub fn parse_level(text: &str) -> Result<Level> {
    text.parse::<Level>()
        .map_err(|e| anyhow!("bad level {text:?}: {e}"))
}

/// Built-in expression names, or a BellExpression JSON file.
pub fn expression(spec: &str) -> Result<BellExpression> {
    Ok(match spec {
        "chsh" => BellExpression::chsh(),
        "cglmp" => cglmp_expression(),
        s if s.starts_with("i1beta:") => i1beta_expression(s["i1beta:".len()..].parse()?)?,
        path => BellExpression::from_json(
            &std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        )?,
    })
}

/// `full` or `bell:<expr>[=<value>][,…]`. A missing value is read off `p`.
pub fn problem(
    mode: &str,
    p: Option<&Behavior>,
    target: Target,
    level: Level,
) -> Result<GuessingProblem> {
    if mode == "full" {
        let p = p.ok_or_else(|| anyhow!("full mode needs a behavior"))?;
        return Ok(GuessingProblem::full(p.clone(), target, level));
    }
    let list = mode
        .strip_prefix("bell:")
        .ok_or_else(|| anyhow!("expected full or bell:<expr>=<value>, got {mode:?}"))?;
    let mut constraints = Vec::new();
    for item in list.split(',') {
        let (name, value) = match item.rsplit_once('=') {
            Some((n, v)) => (n, Some(v.trim().parse::<f64>()?)),
            None => (item, None),
        };
        let f = expression(name.trim())?;
        let value = match (value, p) {
            (Some(v), _) => v,
            (None, Some(p)) => f.value(p)?,
            (None, None) => bail!("no value for {name} and no behavior to read it from"),
        };
        constraints.push((f, value));
    }
    Ok(GuessingProblem::bell_values(constraints, target, level))
}

pub fn settings(tol: Option<f64>) -> Result<SolverSettings> {
    let mut s = SolverSettings::from_env()?;
    if let Some(t) = tol {
        s = s.with_tol(t);
        s.reduced_tol = s.reduced_tol.max(t);
    }
    Ok(s)
}

/// Behavior file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Full table `{scenario, p[a][b][x][y], normalized}`.
    Json,
    /// ±1 correlators `{mean_a, mean_b, corr}`.
    Correlators,
    /// Rows `a,b,x,y,p` with 1-based labels after a header naming the
    /// scenario `nx,ny,da,db`.
    Csv,
}

impl Format {
    pub fn guess(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

pub fn read_behavior(path: &Path, format: Option<Format>) -> Result<Behavior> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let format = format.unwrap_or_else(|| Format::guess(path));
    let p = match format {
        Format::Json => match Behavior::from_json(&text) {
            Ok(p) => p,
            // a correlator file also ends in .json
            Err(e) => serde_json::from_str::<BinaryCorrelators>(&text)
                .map_err(|_| e)?
                .to_behavior()?,
        },
        Format::Correlators => serde_json::from_str::<BinaryCorrelators>(&text)?.to_behavior()?,
        Format::Csv => behavior_from_csv(&text)?,
    };
    Ok(p)
}

fn behavior_from_csv(text: &str) -> Result<Behavior> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = rdr.records();
    let head = rows.next().ok_or_else(|| anyhow!("empty CSV"))??;
    let dims: Vec<usize> = head
        .iter()
        .map(|f| f.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .context("first row must be nx,ny,da,db")?;
    let [nx, ny, da, db] = dims[..] else {
        bail!("first row must be nx,ny,da,db");
    };
    let s = Scenario::new(nx, ny, da, db)?;
    let mut p = Behavior::zeros(s);
    let mut seen = vec![false; s.dim()];
    for row in rows {
        let row = row?;
        if row.len() != 5 {
            bail!("expected a,b,x,y,p rows, got {} fields", row.len());
        }
        let idx: Vec<usize> = (0..4)
            .map(|i| row[i].trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()?;
        let (a, b, x, y) = (idx[0], idx[1], idx[2], idx[3]);
        if a == 0 || b == 0 || x == 0 || y == 0 || a > da || b > db || x > nx || y > ny {
            bail!("label out of range in row {:?}", row);
        }
        let i = s.index(a - 1, b - 1, x - 1, y - 1);
        if seen[i] {
            bail!("duplicate row for {a},{b},{x},{y}");
        }
        seen[i] = true;
        p.set(a - 1, b - 1, x - 1, y - 1, row[4].trim().parse()?);
    }
    if seen.iter().any(|s| !s) {
        bail!("CSV does not list every (a,b,x,y)");
    }
    Ok(p)
}

pub fn write_behavior(p: &Behavior, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => p.to_json()?,
        Format::Correlators => {
            serde_json::to_string_pretty(&BinaryCorrelators::from_behavior(p)?)?
        }
        Format::Csv => {
            let s = p.scenario();
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            w.write_record([s.inputs_a(), s.inputs_b(), s.outputs_a(), s.outputs_b()].map(|v| v.to_string()))?;
            for (a, b, x, y) in s.entries() {
                w.write_record([
                    (a + 1).to_string(),
                    (b + 1).to_string(),
                    (x + 1).to_string(),
                    (y + 1).to_string(),
                    p.get(a, b, x, y).to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    })
}
