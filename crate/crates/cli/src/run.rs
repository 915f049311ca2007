//! Argument resolution and one library call per subcommand.

use std::fs;
use std::io::{BufReader, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use sqapprox::lattice::{CoeffVector, LatticeError, SieveConfig};
use sqapprox::measure::{
    bc_statistics, box_counting_dimension, hausdorff_sum, khintchine_sum, union_measure_over_c,
    windowed_union_measure, GridSpec, MeasureError, SampleRule,
};
use sqapprox::strips::{solutions_at_point, ApproxFunction, Ball, Region, StripError};
use sqapprox::wave::{
    resonance_scan, solve_wave, FourierField, Quantity, ResonanceScanConfig, WaveError, WaveParams,
};

use crate::args::{
    BallArgs, BcArgs, BoxdimArgs, Cli, Command, DichotomyArgs, GlobalArgs, GridArgs, MeasureArgs,
    PeriodArgs, ScanArgs, SolutionsArgs, WaveSolveArgs,
};
use crate::output::{render, Cell, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Wave(WaveError),
    #[error("resonance: {0}")]
    Resonance(WaveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<WaveError> for CliError {
    fn from(e: WaveError) -> Self {
        match e {
            WaveError::ResonantMode { .. } | WaveError::NearResonance { .. } => Self::Resonance(e),
            WaveError::Io(io) => Self::Io(io),
            other => Self::Wave(other),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Replaces every field of `value` named in `overrides`, consuming those keys.
fn overlay<T: Serialize + DeserializeOwned>(value: &T, overrides: &mut Map<String, Value>) -> Result<T> {
    let mut v = serde_json::to_value(value).map_err(|e| usage(e.to_string()))?;
    if let Value::Object(fields) = &mut v {
        for (k, slot) in fields.iter_mut() {
            if let Some(o) = overrides.remove(k) {
                *slot = o;
            }
        }
    }
    serde_json::from_value(v).map_err(|e| usage(format!("config: {e}")))
}

fn read_config(path: &str) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path)?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(usage("config must be a JSON object")),
        Err(e) => Err(usage(format!("config {path}: {e}"))),
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| usage(format!("bad {what} entry {p:?}"))))
        .collect()
}

fn parse_range(s: &str, what: &str) -> Result<(u64, u64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("{what} must be lo:hi, got {s:?}")))?;
    let p = |t: &str| t.trim().parse::<u64>().map_err(|_| usage(format!("bad {what} {s:?}")));
    Ok((p(lo)?, p(hi)?))
}

/// `pow:<v>` or `table:<path>`.
pub fn parse_psi(s: &str) -> Result<ApproxFunction> {
    match s.split_once(':') {
        Some(("pow", v)) => {
            let v: f64 = v.parse().map_err(|_| usage(format!("bad exponent in {s:?}")))?;
            Ok(ApproxFunction::power_law(v)?)
        }
        Some(("table", path)) => Ok(ApproxFunction::from_csv_path(path)?),
        _ => Err(usage(format!("psi must be pow:<v> or table:<path>, got {s:?}"))),
    }
}

fn parse_grid(g: &GridArgs) -> Result<GridSpec> {
    let sample = match g.sample.as_str() {
        "row-exact" => SampleRule::RowExact,
        "cell-center" => SampleRule::CellCenter,
        s => match s.strip_prefix("subsample:").map(str::parse::<u32>) {
            Some(Ok(k)) => SampleRule::Subsample(k),
            _ => return Err(usage(format!("unknown sample rule {s:?}"))),
        },
    };
    Ok(GridSpec::new(g.resolution, sample)?)
}

fn parse_ball(b: &BallArgs, n: usize) -> Result<Ball> {
    let center = match &b.center {
        Some(c) => parse_list(c, "center")?,
        None => vec![0.5; n],
    };
    if center.len() != n {
        return Err(usage(format!("center has {} coordinates, n = {n}", center.len())));
    }
    Ok(Ball::new(center, b.radius, b.eps)?)
}

fn parse_params(p: &PeriodArgs) -> Result<WaveParams> {
    let beta: Quantity = p.beta.parse()?;
    match (&p.alphas, &p.deltas) {
        (Some(a), None) => Ok(WaveParams::from_periods(&parse_list(a, "alpha")?, &beta)?),
        (None, Some(d)) => Ok(WaveParams::from_deltas(&parse_list(d, "delta")?, &beta)?),
        _ => Err(usage("give exactly one of --alphas and --deltas")),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library results serialize")
}

fn coord_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn with_columns(mut r: Report, lead: Vec<String>, rest: &[&str]) -> Report {
    r.columns = lead.into_iter().chain(rest.iter().map(|s| s.to_string())).collect();
    r
}

pub fn solutions(a: &SolutionsArgs) -> Result<Report> {
    let x: Vec<f64> = parse_list(&a.x, "x")?;
    if x.len() != a.n {
        return Err(usage(format!("--x has {} coordinates, n = {}", x.len(), a.n)));
    }
    let psi = parse_psi(&a.psi)?;
    let sols = solutions_at_point(&x, &psi, a.h_max)?;
    let mut r = with_columns(Report::new(to_json(&sols), &[]), coord_columns("a", a.n), &["c", "error"]);
    for s in &sols {
        let mut row: Vec<Cell> = s.a.coords().iter().map(|&c| c.into()).collect();
        row.push(s.c.into());
        row.push(s.error.into());
        r.row(row);
    }
    Ok(r)
}

pub fn dichotomy(a: &DichotomyArgs) -> Result<Report> {
    let psi = parse_psi(&a.psi)?;
    let rep = match a.s {
        Some(s) => hausdorff_sum(&psi, a.n, s, a.h_max)?,
        None => khintchine_sum(&psi, a.n, a.h_max)?,
    };
    let mut r = Report::new(to_json(&rep), &["h", "sum"]);
    r.note("verdict_hint", format!("{:?}", rep.verdict_hint));
    for p in &rep.partial_sums {
        r.row(vec![p.h.into(), p.sum.into()]);
    }
    for p in &rep.hausdorff_sums {
        r.row(vec![p.h.into(), p.sum.into()]);
    }
    Ok(r)
}

fn parse_region(a: &MeasureArgs) -> Result<Region> {
    match a.region.as_str() {
        "ball" => Ok(Region::Ball(parse_ball(&a.ball, a.n)?)),
        "cube" => Ok(Region::UnitCube { n: a.n }),
        "shaved" => Ok(Region::shaved(a.ball.eps, a.n)?),
        s => Err(usage(format!("region must be ball, cube or shaved, got {s:?}"))),
    }
}

pub fn measure(a: &MeasureArgs) -> Result<Report> {
    let psi = parse_psi(&a.psi)?;
    let grid = parse_grid(&a.grid)?;
    let mut r = match (&a.a, &a.window) {
        (Some(v), None) => {
            let v = CoeffVector::new(parse_list(v, "a")?)?;
            let ball = parse_ball(&a.ball, a.n)?;
            let rep = union_measure_over_c(&v, &psi, &ball, &grid)?;
            let mut r = Report::new(
                to_json(&rep),
                &["value", "min_thickness", "cell_width", "coarse_warning", "lower", "upper", "within"],
            );
            let e = &rep.estimate;
            r.row(vec![
                e.value.into(),
                e.min_thickness.into(),
                e.cell_width.into(),
                e.coarse_warning.into(),
                rep.lower.into(),
                rep.upper.into(),
                rep.within.into(),
            ]);
            r
        }
        (None, Some(w)) => {
            let (lo, hi) = parse_range(w, "window")?;
            let region = parse_region(a)?;
            let e = windowed_union_measure(&psi, lo, hi, &region, &grid)?;
            let mut r = Report::new(
                to_json(&e),
                &["value", "min_thickness", "cell_width", "coarse_warning", "region_volume"],
            );
            r.row(vec![
                e.value.into(),
                e.min_thickness.into(),
                e.cell_width.into(),
                e.coarse_warning.into(),
                region.volume().into(),
            ]);
            r
        }
        _ => return Err(usage("give exactly one of --a and --window")),
    };
    if r.result["coarse_warning"] == json!(true) || r.result["estimate"]["coarse_warning"] == json!(true) {
        r.warn("some strip is thinner than two grid cells");
    }
    Ok(r)
}

pub fn bc(a: &BcArgs) -> Result<Report> {
    let psi = parse_psi(&a.psi)?;
    let grid = parse_grid(&a.grid)?;
    let ball = parse_ball(&a.ball, a.n)?;
    let st = bc_statistics(a.h_max, &psi, &ball, &grid, &SieveConfig::default())?;
    let mut r = Report::new(
        to_json(&st),
        &["h_max", "vectors", "s1", "s2", "ratio", "ball_volume", "coarse_warning"],
    );
    r.row(vec![
        st.h_max.into(),
        st.vectors.into(),
        st.s1.into(),
        st.s2.into(),
        st.ratio.unwrap_or(f64::NAN).into(),
        st.ball_volume.into(),
        st.coarse_warning.into(),
    ]);
    if st.coarse_warning {
        r.warn("some strip is thinner than two grid cells");
    }
    Ok(r)
}

fn ladder(lo: u64, hi: u64) -> Result<Vec<u32>> {
    if lo == 0 || hi < lo || hi > u32::MAX as u64 {
        return Err(usage(format!("bad resolution range {lo}:{hi}")));
    }
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi {
        out.push(r as u32);
        r *= 2;
    }
    if *out.last().expect("lo <= hi") as u64 != hi {
        return Err(usage(format!("{hi} is not {lo} times a power of two")));
    }
    Ok(out)
}

pub fn boxdim(a: &BoxdimArgs) -> Result<Report> {
    let psi = parse_psi(&a.psi)?;
    let window = parse_range(&a.window, "window")?;
    let (lo, hi) = parse_range(&a.resolutions, "res")?;
    let rep = box_counting_dimension(&psi, a.n, window, &ladder(lo, hi)?)?;
    let mut r = Report::new(
        to_json(&rep),
        &["resolution", "rho", "boxes", "thick_fraction", "used_in_fit", "residual"],
    );
    r.note("slope", format!("{:.16e}", rep.slope));
    for p in &rep.points {
        r.row(vec![
            p.resolution.into(),
            p.rho.into(),
            p.boxes.into(),
            p.thick_fraction.into(),
            p.used_in_fit.into(),
            p.residual.unwrap_or(f64::NAN).into(),
        ]);
    }
    if rep.fitted_all {
        r.warn("no two resolutions passed the thickness filter; all points were fitted");
    }
    Ok(r)
}

fn field_rows(field: &FourierField) -> (Value, Vec<Vec<Cell>>) {
    let mut modes = Vec::new();
    let mut rows = Vec::new();
    for (m, v) in field.iter() {
        modes.push(json!({"a": m.a, "b": m.b, "re": v.re, "im": v.im}));
        let mut row: Vec<Cell> = m.a.iter().map(|&x| x.into()).collect();
        row.extend([Cell::from(m.b), v.re.into(), v.im.into()]);
        rows.push(row);
    }
    (Value::Array(modes), rows)
}

pub fn wave_solve(a: &WaveSolveArgs) -> Result<Report> {
    let params = parse_params(&a.periods)?;
    let file = fs::File::open(&a.input)?;
    let f = FourierField::read_jsonl(BufReader::new(file), Some(params.dim()))?;
    let u = solve_wave(&f, &params, a.min_denominator)?;
    let (modes, rows) = field_rows(&u);
    let r = Report::new(modes, &[]);
    let mut r = with_columns(r, coord_columns("a", params.dim()), &["b", "re", "im"]);
    r.rows = rows;
    Ok(r)
}

pub fn scan(a: &ScanArgs) -> Result<Report> {
    let params = parse_params(&a.periods)?;
    let cfg = ResonanceScanConfig::new(a.c, a.w, a.h_max)?;
    let hits = resonance_scan(&params, &cfg)?;
    let r = Report::new(to_json(&hits), &[]);
    let mut r = with_columns(r, coord_columns("a", params.dim()), &["b", "d", "exact_zero", "margin"]);
    for h in &hits {
        let mut row: Vec<Cell> = h.a.iter().map(|&x| x.into()).collect();
        row.extend([Cell::from(h.b), h.d.into(), h.exact_zero.into(), h.margin.into()]);
        r.row(row);
    }
    Ok(r)
}

/// Runs the command and returns the exit code.
pub fn execute(cli: Cli) -> Result<u8> {
    let mut overrides = match &cli.global.config {
        Some(p) => read_config(p)?,
        None => Map::new(),
    };
    let global: GlobalArgs = overlay(&cli.global, &mut overrides)?;
    if let Some(t) = global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    macro_rules! resolved {
        ($args:expr, $f:ident) => {{
            let a = overlay($args, &mut overrides)?;
            check_consumed(&overrides)?;
            (to_json(&a), $f(&a)?)
        }};
    }
    let (args_json, report) = match &cli.command {
        Command::Solutions(a) => resolved!(a, solutions),
        Command::Dichotomy(a) => resolved!(a, dichotomy),
        Command::Measure(a) => resolved!(a, measure),
        Command::Bc(a) => resolved!(a, bc),
        Command::Boxdim(a) => resolved!(a, boxdim),
        Command::WaveSolve(a) => resolved!(a, wave_solve),
        Command::Scan(a) => resolved!(a, scan),
    };
    let config = json!({
        "seed": global.seed,
        "threads": global.threads,
        "strict": global.strict,
        "format": global.format,
        "args": args_json,
    });
    let text = render(&report, cli.command.name(), &config, global.format);
    match &global.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if global.strict && !report.warnings.is_empty() { 4 } else { 0 })
}

fn check_consumed(overrides: &Map<String, Value>) -> Result<()> {
    match overrides.keys().next() {
        Some(k) => Err(usage(format!("unknown config key {k:?}"))),
        None => Ok(()),
    }
}
