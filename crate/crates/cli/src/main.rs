//! `circsym` batch front end.
//!
//! Exit codes: 0 success, 1 error, 2 a check failed, 64 usage error,
//! 65 malformed field file.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circsym::corpus::{build, ExampleName, ExampleSpec};
use circsym::functional::{
    check_ps, evaluate, verify_density_identities, DensityOptions, IntegrandSpec, Window,
};
use circsym::geometry::check_perimeter_inequality;
use circsym::grid::{extend_by_zero, ScalarField};
use circsym::io::{read_field_file, write_field_file};
use circsym::rigidity::{check_rigidity, RigidityOptions};
use circsym::symmetrize::{
    distribution, rearranged, rearranged_restricted, restricted_distribution,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "circsym",
    version,
    about = "Circular symmetrization on polar grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a worked example field.
    Example {
        #[arg(long)]
        name: ExampleName,
        /// Parameter override `key=value` (nr, ntheta, a, delta, gamma).
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the analytic values as JSON.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Circular rearrangement `v_μ` (or `w_{μ′}` with --restricted).
    Symmetrize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        restricted: bool,
    },
    /// Distribution table as CSV (`r,y,t,mu,alpha`).
    Mu {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        restricted: bool,
    },
    /// Evaluate a functional on a window.
    Functional {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compare the functional of `v_μ` with that of `u₀`.
    CheckPs {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        window: WindowArgs,
        /// Absolute tolerance; self-calibrated when omitted.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Windowed perimeter inequality for an indicator field.
    Perimeter {
        #[arg(long)]
        set: PathBuf,
        /// Radial window `a,b`; repeat for several windows.
        #[arg(long = "rwindow", value_parser = parse_pair)]
        rwindows: Vec<(f64, f64)>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Equality-case diagnostics.
    CheckRigidity {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        /// Orthogonal-fit residual below which the equality is rigid.
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        /// Threshold intervals of the α lattice.
        #[arg(long, default_value_t = 256)]
        nt: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check the distribution-derivative identities.
    VerifyDensities {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 128)]
        nt: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// `dirichlet:p=<p>`, `aniso:w1=..,w2=..,w3=..,p=..` or `abs-tangential`.
    #[arg(long, default_value = "dirichlet:p=2")]
    integrand: String,
    /// `const:<c>` or `radial-power:q=<q>`.
    #[arg(long, default_value = "const:1")]
    weight: String,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long, value_parser = parse_pair)]
    rwindow: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair)]
    ywindow: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair)]
    twindow: Option<(f64, f64)>,
}

impl WindowArgs {
    fn window(&self) -> Window {
        Window {
            r: self.rwindow,
            y: self.ywindow,
            t: self.twindow,
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `key=value`, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug)]
enum Outcome {
    Ok,
    CheckFailed,
}

#[derive(Serialize)]
struct FunctionalReport<'a> {
    value: f64,
    integrand: &'a str,
    weight: &'a str,
    window: Window,
}

fn read(path: &Path) -> circsym::Result<ScalarField> {
    read_field_file(path)
}

/// Writes `text` to `path`, or to stdout when no path is given; a closed
/// stdout pipe is not an error.
fn emit(text: &str, path: Option<&Path>) -> circsym::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        },
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> circsym::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    emit(&(text + "\n"), path)
}

fn distinct(input: &Path, out: &Path) -> circsym::Result<()> {
    if input == out {
        return Err(circsym::Error::Parameter(
            "input and output paths must differ".into(),
        ));
    }
    Ok(())
}

fn verdict(holds: bool) -> Outcome {
    if holds {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    }
}

fn run(cmd: Command) -> circsym::Result<Outcome> {
    match cmd {
        Command::Example {
            name,
            params,
            out,
            meta,
        } => {
            let mut spec = ExampleSpec::new(name);
            for (k, v) in params {
                spec = spec.with_param(&k, v)?;
            }
            let ex = build(&spec)?;
            write_field_file(&ex.u, &out)?;
            if let Some(m) = meta {
                emit_json(&ex.expected, Some(&m))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Symmetrize {
            input,
            out,
            restricted,
        } => {
            distinct(&input, &out)?;
            let u = read(&input)?;
            let v = if restricted {
                rearranged_restricted(&u)?
            } else {
                rearranged(&u)?
            };
            write_field_file(&v, &out)?;
            Ok(Outcome::Ok)
        }
        Command::Mu {
            input,
            out,
            restricted,
        } => {
            let u = read(&input)?;
            let table = if restricted {
                restricted_distribution(&u)
            } else {
                distribution(&extend_by_zero(&u)?)
            };
            std::fs::write(out, table.to_csv())?;
            Ok(Outcome::Ok)
        }
        Command::Functional {
            input,
            spec,
            window,
            json,
        } => {
            let u = read(&input)?;
            let s = IntegrandSpec::parse(&spec.integrand, &spec.weight)?;
            let w = window.window();
            let value = evaluate(&u, &s, &w)?;
            emit_json(
                &FunctionalReport {
                    value,
                    integrand: &spec.integrand,
                    weight: &spec.weight,
                    window: w,
                },
                json.as_deref(),
            )?;
            Ok(Outcome::Ok)
        }
        Command::CheckPs {
            input,
            spec,
            window,
            tol,
            json,
        } => {
            let u = read(&input)?;
            let s = IntegrandSpec::parse(&spec.integrand, &spec.weight)?;
            let rep = check_ps(&u, &s, &window.window(), tol)?;
            emit_json(&rep, json.as_deref())?;
            Ok(verdict(rep.holds))
        }
        Command::Perimeter {
            set,
            rwindows,
            tol,
            csv,
        } => {
            let e = read(&set)?;
            let windows: Vec<Window> = if rwindows.is_empty() {
                vec![Window::full()]
            } else {
                rwindows
                    .iter()
                    .map(|&(a, b)| Window::radial(a, b))
                    .collect()
            };
            let rep = check_perimeter_inequality(&e, &windows, tol)?;
            let mut text = String::from("rmin,rmax,p_e,p_es,margin,tol,holds\n");
            for row in &rep.rows {
                let (a, b) = row.window.r.unwrap_or((e.grid().rmin, e.grid().rmax));
                text.push_str(&format!(
                    "{a:e},{b:e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    row.p_e, row.p_es, row.margin, row.tol, row.holds
                ));
            }
            emit(&text, csv.as_deref())?;
            Ok(verdict(rep.holds))
        }
        Command::CheckRigidity {
            input,
            spec,
            threshold,
            nt,
            json,
        } => {
            let u = read(&input)?;
            let s = IntegrandSpec::parse(&spec.integrand, &spec.weight)?;
            let opts = RigidityOptions {
                threshold,
                nt,
                ..RigidityOptions::default()
            };
            let rep = check_rigidity(&u, &s, &opts)?;
            emit_json(&rep, json.as_deref())?;
            // the verdict is a finding; only a failed inequality is a failed check
            Ok(verdict(rep.ps.holds))
        }
        Command::VerifyDensities { input, nt, json } => {
            let u = read(&input)?;
            let rep = verify_density_identities(
                &u,
                &DensityOptions {
                    nt,
                    ..DensityOptions::default()
                },
            )?;
            emit_json(&rep, json.as_deref())?;
            Ok(verdict(rep.holds))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CIRCSYM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("CIRCSYM_THREADS=`{v}` is not a positive integer"))?;
    if n == 0 {
        return Err("CIRCSYM_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(64);
    }
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e @ circsym::Error::Parse { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(65)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
