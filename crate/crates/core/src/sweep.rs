//! Parameter sweeps and grid serialization: flat key-value run
//! configuration, deterministic parallel evaluation over 1–2 axes, and
//! a '#'-commented CSV grid format that round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::analysis::reflection_scaled;
use crate::engine::transmission;
use crate::error::{Error, Result};
use crate::geometry::PotentialSpec;
use crate::oracle::{brute_force_transmission, chain_from_layout, MAX_ORACLE_STAGE};

pub const ORACLE_TOLERANCE: f64 = 1e-9;
const GRID_MAGIC: &str = "# svc-scatter grid v1";

/// Which scattering quantity a sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Transmission,
    Reflection,
    /// R with the height renormalized to V_G, divided by V₀².
    ReflectionScaled,
}

impl Quantity {
    pub fn parse(s: &str) -> Option<Quantity> {
        match s {
            "T" => Some(Quantity::Transmission),
            "R" => Some(Quantity::Reflection),
            "R_scaled" => Some(Quantity::ReflectionScaled),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Transmission => "T",
            Quantity::Reflection => "R",
            Quantity::ReflectionScaled => "R_scaled",
        }
    }
}

/// A sweep axis: a linear range over a continuous parameter, or an
/// explicit stage list (stages are discrete and small, never a range
/// with a step).
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    K { min: f64, max: f64, count: usize },
    Rho { min: f64, max: f64, count: usize },
    N { min: f64, max: f64, count: usize },
    Stages(Vec<u32>),
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Axis::K { count, .. } | Axis::Rho { count, .. } | Axis::N { count, .. } => *count,
            Axis::Stages(list) => list.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::K { .. } => "k",
            Axis::Rho { .. } => "rho",
            Axis::N { .. } => "n",
            Axis::Stages(_) => "G",
        }
    }

    /// Value of the axis at grid index i (stage axes return the stage
    /// as an exact small integer in f64).
    pub fn value(&self, i: usize) -> f64 {
        match self {
            Axis::K { min, max, count }
            | Axis::Rho { min, max, count }
            | Axis::N { min, max, count } => {
                if *count == 1 {
                    *min
                } else {
                    min + (max - min) * i as f64 / (*count - 1) as f64
                }
            }
            Axis::Stages(list) => list[i] as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Axis::K { min, max, count }
            | Axis::Rho { min, max, count }
            | Axis::N { min, max, count } => {
                *count >= 2 && min.is_finite() && max.is_finite() && max > min
            }
            Axis::Stages(list) => list.len() >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "axis {} needs count >= 2 and an increasing finite range",
                self.name()
            )))
        }
    }

    fn render(&self) -> String {
        match self {
            Axis::K { min, max, count }
            | Axis::Rho { min, max, count }
            | Axis::N { min, max, count } => {
                format!("{} {:.16e} {:.16e} {}", self.name(), min, max, count)
            }
            Axis::Stages(list) => {
                let items: Vec<String> = list.iter().map(|g| g.to_string()).collect();
                format!("G {}", items.join(","))
            }
        }
    }

    fn parse(text: &str) -> Option<Axis> {
        let mut parts = text.split_whitespace();
        let name = parts.next()?;
        if name == "G" {
            let list: Option<Vec<u32>> = parts
                .next()?
                .split(',')
                .map(|s| s.trim().parse().ok())
                .collect();
            if parts.next().is_some() {
                return None;
            }
            return Some(Axis::Stages(list?));
        }
        let min: f64 = parts.next()?.parse().ok()?;
        let max: f64 = parts.next()?.parse().ok()?;
        let count: usize = parts.next()?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        match name {
            "k" => Some(Axis::K { min, max, count }),
            "rho" => Some(Axis::Rho { min, max, count }),
            "n" => Some(Axis::N { min, max, count }),
            _ => None,
        }
    }
}

/// Everything a sweep run needs: base potential, fixed k when k is not
/// an axis, 1–2 axes, quantity, and validation knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: PotentialSpec,
    pub k_fixed: Option<f64>,
    pub axes: Vec<Axis>,
    pub quantity: Quantity,
    pub oracle_check: bool,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSpec(format!(
                "sweep needs 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        for pair in self.axes.windows(2) {
            if pair[0].name() == pair[1].name() {
                return Err(Error::InvalidSpec(format!(
                    "both axes sweep {}",
                    pair[0].name()
                )));
            }
        }
        let has_k_axis = self.axes.iter().any(|a| matches!(a, Axis::K { .. }));
        match (has_k_axis, self.k_fixed) {
            (false, None) => {
                return Err(Error::InvalidSpec(
                    "no k axis and no fixed k given".into(),
                ))
            }
            (true, Some(_)) => {
                return Err(Error::InvalidSpec(
                    "fixed k conflicts with a k axis".into(),
                ))
            }
            _ => {}
        }
        if let Some(k) = self.k_fixed {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidSpec(format!("fixed k must be > 0, got {k}")));
            }
        }
        if self.oracle_check {
            let max_stage = self
                .axes
                .iter()
                .filter_map(|a| match a {
                    Axis::Stages(list) => list.iter().copied().max(),
                    _ => None,
                })
                .max()
                .unwrap_or(self.spec.stage);
            if max_stage > MAX_ORACLE_STAGE {
                return Err(Error::InvalidSpec(format!(
                    "oracle_check requires G <= {MAX_ORACLE_STAGE}, got G = {max_stage}"
                )));
            }
        }
        Ok(())
    }
}

/// A completed sweep: the config that produced it plus the row-major
/// value grid (first axis indexes rows).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub config: RunConfig,
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn rows(&self) -> usize {
        self.config.axes[0].len()
    }

    pub fn cols(&self) -> usize {
        self.config.axes.get(1).map_or(1, Axis::len)
    }
}

/// (spec, E) realizing one grid cell.
fn cell_inputs(config: &RunConfig, row: usize, col: usize) -> Result<(PotentialSpec, f64)> {
    let mut spec = config.spec.clone();
    let mut k = config.k_fixed;
    let indices = [row, col];
    for (axis, &i) in config.axes.iter().zip(&indices) {
        let v = axis.value(i);
        match axis {
            Axis::K { .. } => k = Some(v),
            Axis::Rho { .. } => spec.rho = v,
            Axis::N { .. } => spec.n = v,
            Axis::Stages(_) => spec.stage = v as u32,
        }
    }
    spec.validate().map_err(|e| {
        Error::InvalidSpec(format!("axis point (row {row}, col {col}): {e}"))
    })?;
    let k = k.expect("validated config fixes k");
    Ok((spec, k * k))
}

fn evaluate_cell(config: &RunConfig, row: usize, col: usize) -> Result<f64> {
    let (spec, e) = cell_inputs(config, row, col)?;
    let value = match config.quantity {
        Quantity::Transmission => transmission(&spec, e)?.t,
        Quantity::Reflection => transmission(&spec, e)?.r,
        Quantity::ReflectionScaled => reflection_scaled(&spec, e)?,
    };
    if config.oracle_check {
        let layout = crate::geometry::build_layout(&spec)?;
        let chain = chain_from_layout(&layout)?;
        let closed = transmission(&spec, e)?.t;
        let brute = brute_force_transmission(&chain, spec.height, e)?.t;
        let delta = (closed - brute).abs();
        if delta >= ORACLE_TOLERANCE {
            return Err(Error::OracleMismatch {
                k: e.sqrt(),
                delta,
                rho: spec.rho,
                n: spec.n,
                stage: spec.stage,
                v: spec.height,
                l: spec.span,
            });
        }
    }
    Ok(value)
}

/// Evaluates the grid in parallel. Results are gathered by index, so
/// identical configs always produce identical value vectors regardless
/// of scheduling.
pub fn run_sweep(config: &RunConfig) -> Result<SweepGrid> {
    config.validate()?;
    let rows = config.axes[0].len();
    let cols = config.axes.get(1).map_or(1, Axis::len);
    let values: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| evaluate_cell(config, idx / cols, idx % cols))
        .collect::<Result<_>>()?;
    Ok(SweepGrid {
        config: config.clone(),
        values,
    })
}

/// Parses the flat key-value config format. Lines are `key = value`;
/// blank lines and '#' comments are skipped. Unknown keys are errors
/// (typos should not silently fall back to defaults).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_builder(text)?.finish()
}

/// Like parse_config but stops before validation, so CLI overrides can
/// still be applied on top.
pub fn parse_config_builder(text: &str) -> Result<ConfigBuilder> {
    let mut builder = ConfigBuilder::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Config {
            msg: format!("expected `key = value`, got {line:?}"),
            line: Some(idx + 1),
        })?;
        builder
            .set(key.trim(), value.trim())
            .map_err(|msg| Error::Config {
                msg,
                line: Some(idx + 1),
            })?;
    }
    Ok(builder)
}

/// Applies a `key=value` override on top of a parsed config (the CLI
/// `--set` flag).
pub fn apply_override(builder: &mut ConfigBuilder, assignment: &str) -> Result<()> {
    let (key, value) = assignment.split_once('=').ok_or(Error::Config {
        msg: format!("override must be `key=value`, got {assignment:?}"),
        line: None,
    })?;
    builder
        .set(key.trim(), value.trim())
        .map_err(|msg| Error::Config { msg, line: None })
}

/// Accumulates config keys; `finish` checks completeness and validity.
#[derive(Debug, Default, Clone)]
pub struct ConfigBuilder {
    rho: Option<f64>,
    n: Option<f64>,
    stage: Option<u32>,
    height: Option<f64>,
    span: Option<f64>,
    poly: Option<Vec<f64>>,
    k_fixed: Option<f64>,
    axes: Vec<Axis>,
    quantity: Option<Quantity>,
    oracle_check: bool,
    seed: u64,
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(key: &str, value: &str) -> std::result::Result<f64, String> {
            value
                .parse()
                .map_err(|_| format!("key `{key}`: not a number: {value:?}"))
        }
        match key {
            "rho" => self.rho = Some(num(key, value)?),
            "n" => self.n = Some(num(key, value)?),
            "G" => {
                self.stage = Some(
                    value
                        .parse()
                        .map_err(|_| format!("key `G`: not a stage: {value:?}"))?,
                )
            }
            "V" => self.height = Some(num(key, value)?),
            "L" => self.span = Some(num(key, value)?),
            "poly" => {
                let coeffs: std::result::Result<Vec<f64>, _> = value
                    .split(',')
                    .map(|s| num("poly", s.trim()))
                    .collect();
                self.poly = Some(coeffs?);
            }
            "k" => self.k_fixed = Some(num(key, value)?),
            "axis1" | "axis2" => {
                let axis = Axis::parse(value)
                    .ok_or(format!("key `{key}`: bad axis spec: {value:?}"))?;
                let slot = if key == "axis1" { 0 } else { 1 };
                while self.axes.len() <= slot {
                    // placeholder replaced below; axis2 before axis1 is legal
                    self.axes.push(Axis::Stages(vec![]));
                }
                self.axes[slot] = axis;
            }
            "quantity" => {
                self.quantity = Some(
                    Quantity::parse(value)
                        .ok_or(format!("key `quantity`: expected T, R or R_scaled, got {value:?}"))?,
                )
            }
            "oracle_check" => {
                self.oracle_check = value
                    .parse()
                    .map_err(|_| format!("key `oracle_check`: expected true/false, got {value:?}"))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("key `seed`: not an integer: {value:?}"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Just the potential, for subcommands that need no sweep axes.
    pub fn finish_spec(&self) -> Result<PotentialSpec> {
        let missing = |what: &str| Error::Config {
            msg: format!("missing required key `{what}`"),
            line: None,
        };
        let spec = PotentialSpec::new(
            self.rho.ok_or_else(|| missing("rho"))?,
            self.n.ok_or_else(|| missing("n"))?,
            self.stage.ok_or_else(|| missing("G"))?,
            self.height.ok_or_else(|| missing("V"))?,
            self.span.ok_or_else(|| missing("L"))?,
        )?;
        match &self.poly {
            Some(coeffs) => spec.with_exponent_poly(coeffs.clone()),
            None => Ok(spec),
        }
    }

    pub fn finish(self) -> Result<RunConfig> {
        let spec = self.finish_spec()?;
        let config = RunConfig {
            spec,
            k_fixed: self.k_fixed,
            axes: self.axes,
            quantity: self.quantity.unwrap_or(Quantity::Transmission),
            oracle_check: self.oracle_check,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Renders the grid file: '#' metadata (every spec field, axis
/// definitions, artifact version), then one CSV row per first-axis
/// value. 17 significant digits throughout, so values round-trip
/// bit-exactly. The timestamp line is omitted when `reproducible`.
pub fn render_grid(grid: &SweepGrid, reproducible: bool) -> String {
    let c = &grid.config;
    let mut out = String::new();
    out.push_str(GRID_MAGIC);
    out.push('\n');
    if !reproducible {
        let _ = writeln!(out, "# generated_unix = {}", unix_time_now());
    }
    let _ = writeln!(out, "# quantity = {}", c.quantity.label());
    let _ = writeln!(out, "# rho = {:.16e}", c.spec.rho);
    let _ = writeln!(out, "# n = {:.16e}", c.spec.n);
    let _ = writeln!(out, "# G = {}", c.spec.stage);
    let _ = writeln!(out, "# V = {:.16e}", c.spec.height);
    let _ = writeln!(out, "# L = {:.16e}", c.spec.span);
    if let Some(poly) = &c.spec.exponent_poly {
        let items: Vec<String> = poly.iter().map(|a| format!("{a:.16e}")).collect();
        let _ = writeln!(out, "# poly = {}", items.join(","));
    }
    if let Some(k) = c.k_fixed {
        let _ = writeln!(out, "# k = {k:.16e}");
    }
    for (i, axis) in c.axes.iter().enumerate() {
        let _ = writeln!(out, "# axis{} = {}", i + 1, axis.render());
    }
    let _ = writeln!(out, "# oracle_check = {}", c.oracle_check);
    let _ = writeln!(out, "# seed = {}", c.seed);
    let cols = grid.cols();
    for row in grid.values.chunks(cols) {
        let items: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&items.join(","));
        out.push('\n');
    }
    out
}

fn unix_time_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_grid(grid: &SweepGrid, path: &Path, reproducible: bool) -> Result<()> {
    std::fs::write(path, render_grid(grid, reproducible)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Inverse of write_grid. Malformed lines are reported with their
/// 1-based line number.
pub fn read_grid(path: &Path) -> Result<SweepGrid> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_grid(&text, &path.display().to_string())
}

pub fn parse_grid(text: &str, path: &str) -> Result<SweepGrid> {
    let fail = |line: usize, msg: String| Error::GridParse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == GRID_MAGIC => {}
        other => {
            return Err(fail(
                1,
                format!(
                    "expected header {GRID_MAGIC:?}, got {:?}",
                    other.map(|(_, l)| l).unwrap_or("")
                ),
            ))
        }
    }
    let mut builder = ConfigBuilder::default();
    let mut values = Vec::new();
    let mut data_cols = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if let Some(meta) = raw.strip_prefix('#') {
            if !values.is_empty() {
                return Err(fail(line_no, "metadata after data rows".into()));
            }
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| fail(line_no, format!("bad metadata line {raw:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "generated_unix" {
                continue;
            }
            builder
                .set(key, value)
                .map_err(|msg| fail(line_no, msg))?;
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| fail(line_no, format!("bad value: {e}")))?;
        match data_cols {
            None => data_cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(fail(
                    line_no,
                    format!("row has {} columns, expected {c}", row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
    }
    let config = builder.finish().map_err(|e| fail(1, e.to_string()))?;
    let rows = config.axes[0].len();
    let cols = config.axes.get(1).map_or(1, Axis::len);
    if values.len() != rows * cols {
        return Err(fail(
            1,
            format!(
                "grid has {} values, axes imply {rows}x{cols}",
                values.len()
            ),
        ));
    }
    if data_cols != Some(cols) {
        return Err(fail(
            1,
            format!("rows have {data_cols:?} columns, axes imply {cols}"),
        ));
    }
    Ok(SweepGrid { config, values })
}
