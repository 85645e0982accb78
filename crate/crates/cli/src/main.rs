mod input;
mod plot;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use randcert::bell::{min_entropy, EXTERNAL_TOL};
use randcert::certificates::{extract_certificate, rescale_to_named_form, Certificate};
use randcert::digp::{assemble_primal, solve_with, GuessingProblem};
use randcert::ns::{assemble_ns, ns_certificate, ns_solve_with};
use randcert::solver::export_sdpa;
use randcert::Error;

use input::{Format, Source};
use sweep::{Experiment, SweepSpec};

#[derive(Parser)]
#[command(name = "randcert", version, about = "Device-independent randomness certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct ProblemArgs {
    #[command(flatten)]
    source: Source,
    /// Guessed output: local:x or global:x,y (inputs numbered from 1).
    #[arg(long, default_value = "local:1")]
    target: String,
    /// NPA level, e.g. 2 or 1+AB.
    #[arg(long, default_value = "2")]
    level: String,
    /// full, or bell:<expr>[=<value>][,…] with expr a file or chsh, cglmp, i1beta:<β>.
    #[arg(long, default_value = "full")]
    mode: String,
    /// Use the no-signaling linear program instead of the NPA relaxation.
    #[arg(long)]
    ns: bool,
    /// Solver tolerance (overrides the settings file).
    #[arg(long)]
    tol: Option<f64>,
}

impl ProblemArgs {
    fn problem(&self) -> Result<GuessingProblem> {
        let p = if self.source.behavior.is_some() || self.source.model.is_some() {
            Some(self.source.behavior()?)
        } else {
            None
        };
        input::problem(
            &self.mode,
            p.as_ref(),
            input::parse_target(&self.target)?,
            input::parse_level(&self.level)?,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check normalization, no-signaling and positivity of a behavior.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = EXTERNAL_TOL)]
        tol: f64,
    },
    /// Convert a behavior between file formats.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        from: Option<Format>,
        #[arg(long, value_enum)]
        to: Option<Format>,
    },
    /// Solve one guessing-probability instance.
    Solve {
        #[command(flatten)]
        args: ProblemArgs,
        /// Write the Solution JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the conic program in SDPA sparse format.
        #[arg(long)]
        export_sdpa: Option<PathBuf>,
    },
    /// Sweep a model parameter and tabulate G and certificate bounds.
    Sweep {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Visibility of the partially entangled family.
        #[arg(long, default_value_t = 0.99)]
        v: f64,
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Comma-separated modes: full, ns, chsh-only, i1beta-only, both, cglmp-only.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
        #[arg(long)]
        tol: Option<f64>,
        /// CSV output (stdout if absent).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG plot of G against the parameter.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Extract and verify the dual certificate of an instance, or tabulate
    /// the CHSH-template coefficients over a visibility sweep.
    Certificate {
        #[command(flatten)]
        args: ProblemArgs,
        /// Shift the certificate by its worst margin if it does not verify.
        #[arg(long)]
        tighten: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Visibility range from:to:step for the chsh-noise family.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn validate(source: &Source, tol: f64) -> Result<ExitCode> {
    let p = source.behavior()?;
    let r = p.validate_normalized(tol);
    println!("scenario: {}", p.scenario());
    println!("{r}");
    Ok(if r.passes { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn convert(input: &Path, output: &Path, from: Option<Format>, to: Option<Format>) -> Result<ExitCode> {
    let p = input::read_behavior(input, from)?;
    let text = input::write_behavior(&p, to.unwrap_or_else(|| Format::guess(output)))?;
    std::fs::write(output, text)?;
    Ok(ExitCode::SUCCESS)
}

fn solve_cmd(args: &ProblemArgs, out: Option<&Path>, sdpa: Option<&Path>) -> Result<ExitCode> {
    let gp = args.problem()?;
    let settings = input::settings(args.tol)?;
    if let Some(path) = sdpa {
        let program = if args.ns { assemble_ns(&gp)?.0 } else { assemble_primal(&gp)? };
        std::fs::write(path, export_sdpa(&program))?;
    }
    let result = if args.ns { ns_solve_with(&gp, &settings) } else { solve_with(&gp, &settings) };
    let sol = match result {
        Ok(s) => s,
        Err(Error::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    write_or_print(out, &sol.to_json()?)?;
    eprintln!(
        "G = {:.9}  H_min = {:.6} bits  status {:?}  ({} blocks, link residual {:.1e})",
        sol.value,
        min_entropy(sol.value.clamp(f64::MIN_POSITIVE, 1.0))?,
        sol.report.status,
        sol.blocks.len(),
        sol.link_residual
    );
    Ok(ExitCode::SUCCESS)
}

fn certificate_for(args: &ProblemArgs, gp: &GuessingProblem, tighten: bool) -> Result<Certificate> {
    let settings = input::settings(args.tol)?;
    let mut c = if args.ns {
        ns_certificate(&ns_solve_with(gp, &settings)?, gp)?
    } else {
        extract_certificate(&solve_with(gp, &settings)?, gp)?
    };
    c.verify_with(&settings)?;
    if tighten && !c.verified {
        c = c.tightened()?;
    }
    Ok(c)
}

fn certificate_cmd(args: &ProblemArgs, tighten: bool, out: Option<&Path>) -> Result<ExitCode> {
    let gp = args.problem()?;
    let c = certificate_for(args, &gp, tighten)?;
    write_or_print(out, &c.to_json()?)?;
    eprintln!(
        "bound {:.9}  verified {}  worst margin {:.2e}",
        c.bound,
        c.verified,
        c.margins.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    );
    if let Ok(form) = rescale_to_named_form(&c) {
        eprintln!(
            "template fit: alpha {:.6} beta {:.6} f11 {:.6} f22 {:.6} residual {:.2e}",
            form.alpha, form.beta, form.f11, form.f22, form.residual
        );
    }
    Ok(if c.verified { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn certificate_sweep(
    args: &ProblemArgs,
    range: &str,
    csv_path: Option<&Path>,
    plot_path: Option<&Path>,
) -> Result<ExitCode> {
    use rayon::prelude::*;
    let parts: Vec<f64> = range
        .split(':')
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .context("expected --sweep from:to:step")?;
    let [from, to, step] = parts[..] else {
        bail!("expected --sweep from:to:step");
    };
    let target = input::parse_target(&args.target)?;
    let level = input::parse_level(&args.level)?;
    let settings = input::settings(args.tol)?;
    let rows: Vec<Result<(f64, randcert::certificates::NamedForm, f64)>> = sweep::grid(from, to, step)?
        .par_iter()
        .map(|&v| {
            let gp = GuessingProblem::full(
                randcert::quantum::chsh_noise_behavior(v)?,
                target,
                level.clone(),
            );
            let c = extract_certificate(&solve_with(&gp, &settings)?, &gp)?;
            Ok((v, rescale_to_named_form(&c)?, c.bound))
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["v", "f11", "f22", "alpha", "beta", "residual", "bound"])?;
    let (mut f11, mut f22) = (Vec::new(), Vec::new());
    for r in rows {
        let (v, form, bound) = r?;
        f11.push((v, form.f11));
        f22.push((v, form.f22));
        w.write_record(
            [v, form.f11, form.f22, form.alpha, form.beta, form.residual, bound].map(|x| x.to_string()),
        )?;
    }
    write_or_print(csv_path, &String::from_utf8(w.into_inner()?)?)?;
    if let Some(path) = plot_path {
        plot::line_chart(
            path,
            "Optimal Bell expression coefficients",
            "v",
            "coefficient",
            &[("f11".into(), f11), ("f22".into(), f22)],
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    experiment: Experiment,
    range: (Option<f64>, Option<f64>, Option<f64>),
    v: f64,
    level: Option<&str>,
    target: Option<&str>,
    modes: Option<Vec<String>>,
    tol: Option<f64>,
    csv_path: Option<&Path>,
    plot_path: Option<&Path>,
) -> Result<ExitCode> {
    let (f0, t0, s0) = experiment.default_range();
    let spec = SweepSpec {
        experiment,
        grid: sweep::grid(range.0.unwrap_or(f0), range.1.unwrap_or(t0), range.2.unwrap_or(s0))?,
        v,
        level: level.map(input::parse_level).transpose()?.unwrap_or_else(|| experiment.default_level()),
        target: target.map(input::parse_target).transpose()?.unwrap_or_else(|| experiment.default_target()),
        modes: modes.unwrap_or_else(|| experiment.default_modes()),
    };
    eprintln!("sweep: {}", sweep::describe(&spec));
    let rows = sweep::run(&spec, &input::settings(tol)?)?;
    write_or_print(csv_path, &sweep::to_csv(&spec, &rows)?)?;
    if let Some(path) = plot_path {
        let series: Vec<plot::Series> = spec
            .modes
            .iter()
            .map(|m| {
                let pts = rows
                    .iter()
                    .filter(|r| &r.mode == m)
                    .filter_map(|r| Some((r.parameter, r.value?)))
                    .collect();
                (m.clone(), pts)
            })
            .collect();
        plot::line_chart(path, &format!("{experiment:?}"), experiment.parameter_name(), "G", &series)?;
    }
    let failed = rows.iter().filter(|r| r.value.is_none()).count();
    if failed > 0 {
        eprintln!("{failed} grid points failed; see the status column");
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { source, tol } => validate(&source, tol),
        Command::Convert { input, output, from, to } => convert(&input, &output, from, to),
        Command::Solve { args, out, export_sdpa } => {
            solve_cmd(&args, out.as_deref(), export_sdpa.as_deref())
        }
        Command::Sweep { experiment, from, to, step, v, level, target, modes, tol, csv, plot } => {
            sweep_cmd(
                experiment,
                (from, to, step),
                v,
                level.as_deref(),
                target.as_deref(),
                modes,
                tol,
                csv.as_deref(),
                plot.as_deref(),
            )
        }
        Command::Certificate { args, tighten, out, sweep, csv, plot } => match sweep {
            Some(range) => certificate_sweep(&args, &range, csv.as_deref(), plot.as_deref()),
            None => certificate_cmd(&args, tighten, out.as_deref()),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
