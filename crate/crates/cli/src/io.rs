use relosc_core::coefficients::Coefficients;
use relosc_core::problem::{SLProblem, TruncationSchedule};
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input: exit 2.
    Usage(String),
    /// The computation itself failed: exit 1.
    Compute(relosc_core::error::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<relosc_core::error::Error> for CliError {
    fn from(e: relosc_core::error::Error) -> Self {
        CliError::Compute(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn load_problem(path: &Path) -> CliResult<SLProblem> {
    SLProblem::from_json(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn load_coefficients(path: &Path) -> CliResult<Coefficients> {
    let c: Coefficients =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    c.validate().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(c)
}

/// `geometric:x0,factor,steps` with left end `a`.
pub fn parse_schedule(spec: &str, a: f64, b: f64) -> CliResult<TruncationSchedule> {
    let bad = || CliError::Usage(format!("schedule must look like geometric:x0,factor,steps, got {spec:?}"));
    let rest = spec.strip_prefix("geometric:").ok_or_else(bad)?;
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let x0: f64 = parts[0].parse().map_err(|_| bad())?;
    let factor: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    let s = TruncationSchedule::geometric(a, x0, factor, steps, 3);
    s.validate(a, b).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

/// Schedule from `--schedule`, else `--xmax` (xmax/16 doubling to xmax), else
/// the problem's own; regular problems get the fixed schedule.
pub fn schedule_for(p: &SLProblem, spec: Option<&str>, xmax: Option<f64>) -> CliResult<TruncationSchedule> {
    if let Some(s) = spec {
        return parse_schedule(s, p.a(), p.b());
    }
    if let Some(x) = xmax {
        let s = TruncationSchedule::geometric(p.a(), x / 16.0, 2.0, 4, 3);
        s.validate(p.a(), p.b()).map_err(|e| CliError::Usage(format!("--xmax {x}: {e}")))?;
        return Ok(s);
    }
    p.schedule().map_err(|_| CliError::Usage("singular problem: give --xmax or --schedule".into()))
}

/// Writes CSV through `f` to `path`.
pub fn write_csv(path: &Path, f: impl FnOnce(BufWriter<File>) -> relosc_core::error::Result<()>) -> CliResult<String> {
    let file = File::create(path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
    f(BufWriter::new(file))?;
    Ok(path.display().to_string())
}
