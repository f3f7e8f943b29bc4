//! Deterministic experiment runner for the `dnls-core` laboratory.
//!
//! One subcommand per module family: `simulate` (pseudospectral solver),
//! `gauge-check` (gauge round trip and conservation), `norms` (norm report
//! for a spatial field file), `classify` (exhaustive frequency-interaction
//! reports), `kernels` (resonance kernel tables and bound fits), `fixpoint`
//! (para-controlled runs), `divisors` (exact counting experiments), and
//! `probe` (seeded operator-constant sweeps).
//!
//! Every artifact starts with a header echoing the tool version and the
//! fully resolved configuration; re-running the same configuration produces
//! byte-identical files (atomic rename, no partial outputs). Exit codes:
//! 0 success, 2 validation or assertion failure, 3 numeric failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use dnls_core::duhamel::{eta_profile, kernel_bound_fit, kernel_k};
use dnls_core::gauge::{gauge_forward, gauge_inverse};
use dnls_core::interactions::{verify_prop23, verify_prop24, Multiplier, TripleClass};
use dnls_core::norms::{fl_norm, ladder, ParameterLadder};
use dnls_core::number_theory::{
    count_system_solutions, divisors_in_ball_eis, divisors_in_ball_eis_naive, divisors_in_ball_z,
    divisors_in_ball_z_naive, growth_fit, identity_all_plus, identity_mixed_first,
    identity_mixed_last, EisensteinInt, SystemSpec,
};
use dnls_core::paracontrolled::picard_solve_w;
use dnls_core::probes::{ey_bound_probe, trilinear_probe};
use dnls_core::report::{json_lines, write_atomic, CsvTable, NormRecord};
use dnls_core::rng::stream;
use dnls_core::solver::{exact_plane_wave, integrate_dnls, IntegratorConfig};
use dnls_core::spectral::SpectralField;
use rand::Rng;

const TOOL: &str = concat!("dnls ", env!("CARGO_PKG_VERSION"));

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Fully resolved run configuration. Defaults are chosen so every
/// subcommand completes in seconds on one core; flags override file values.
#[derive(Debug, Clone)]
struct RunConfig {
    n_max: usize,
    dt: f64,
    t_end: f64,
    p0: f64,
    delta: f64,
    big_a: f64,
    seed: u64,
    out: PathBuf,
    multiplier: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_max: 16,
            dt: 1.0 / 32.0,
            t_end: 1.0,
            p0: 4.0,
            delta: 0.01,
            big_a: 1.0,
            seed: 7,
            out: PathBuf::from("out"),
            multiplier: "unit".into(),
        }
    }
}

#[derive(Debug)]
enum RunError {
    /// Bad input or a failed artifact-level assertion → exit 2.
    Check(String),
    /// A numeric failure propagated from the core → exit 3 when the core
    /// error is numeric or a divergence, 2 otherwise.
    Core(dnls_core::Error),
}

impl From<dnls_core::Error> for RunError {
    fn from(e: dnls_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Check(m) => write!(f, "{m}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Check(_) => 2,
            RunError::Core(e) => match e {
                dnls_core::Error::Numeric { .. } | dnls_core::Error::Divergence { .. } => 3,
                _ => 2,
            },
        }
    }
}

fn check(msg: impl Into<String>) -> RunError {
    RunError::Check(msg.into())
}

/// Parse a line-oriented `key = value` configuration file. `#` starts a
/// comment; unknown keys are rejected by name.
fn parse_config_file(text: &str, cfg: &mut RunConfig) -> Result<(), RunError> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| check(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| check(format!("line {}: {key}: {what}", lineno + 1));
        match key {
            "n_max" => cfg.n_max = value.parse().map_err(|_| bad("not a positive integer"))?,
            "dt" => cfg.dt = value.parse().map_err(|_| bad("not a number"))?,
            "T" => cfg.t_end = value.parse().map_err(|_| bad("not a number"))?,
            "p0" => cfg.p0 = value.parse().map_err(|_| bad("not a number"))?,
            "delta" => cfg.delta = value.parse().map_err(|_| bad("not a number"))?,
            "A" => cfg.big_a = value.parse().map_err(|_| bad("not a number"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("not an unsigned integer"))?,
            "out" => cfg.out = PathBuf::from(value),
            "multiplier" => cfg.multiplier = value.to_string(),
            other => return Err(check(format!("unknown configuration key `{other}`"))),
        }
    }
    Ok(())
}

/// Validate the resolved configuration against the module preconditions
/// before any computation runs.
fn validate(cfg: &RunConfig) -> Result<ParameterLadder, RunError> {
    if cfg.n_max == 0 {
        return Err(check("n_max: must be at least 1"));
    }
    if !(cfg.dt > 0.0) {
        return Err(check(format!("dt: must be positive, got {}", cfg.dt)));
    }
    if !(cfg.t_end > 0.0) {
        return Err(check(format!("T: must be positive, got {}", cfg.t_end)));
    }
    ladder(cfg.p0, cfg.delta, cfg.big_a)
        .map_err(|e| check(format!("p0/delta/A: {e}")))
}

/// Header lines echoed verbatim into every artifact.
fn echo(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("tool = {TOOL}"),
        format!("n_max = {}", cfg.n_max),
        format!("dt = {}", cfg.dt),
        format!("T = {}", cfg.t_end),
        format!("p0 = {}", cfg.p0),
        format!("delta = {}", cfg.delta),
        format!("A = {}", cfg.big_a),
        format!("seed = {}", cfg.seed),
        format!("multiplier = {}", cfg.multiplier),
    ]
}

/// Load a cubic multiplier: `unit`, or a file of `k k1 k2 k3 re im` lines
/// (`#` comments); unlisted frequency tuples default to 1.
fn load_multiplier(source: &str) -> Result<Multiplier, RunError> {
    if source == "unit" {
        return Ok(Multiplier::unit(3));
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| check(format!("multiplier file {source}: {e}")))?;
    let mut table: HashMap<(i64, i64, i64, i64), Complex64> = HashMap::new();
    let mut bound = 1.0f64;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(check(format!(
                "multiplier file line {}: expected `k k1 k2 k3 re im`",
                lineno + 1
            )));
        }
        let bad = || check(format!("multiplier file line {}: malformed entry", lineno + 1));
        let mut ints = [0i64; 4];
        for (slot, part) in ints.iter_mut().zip(&parts[..4]) {
            *slot = part.parse().map_err(|_| bad())?;
        }
        let re: f64 = parts[4].parse().map_err(|_| bad())?;
        let im: f64 = parts[5].parse().map_err(|_| bad())?;
        let value = Complex64::new(re, im);
        bound = bound.max(value.norm());
        table.insert((ints[0], ints[1], ints[2], ints[3]), value);
    }
    Ok(Multiplier::custom(3, bound, move |k, ks| {
        table
            .get(&(k, ks[0], ks[1], ks[2]))
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0))
    }))
}

fn write_csv(path: &Path, table: &CsvTable, comments: &[String]) -> Result<(), RunError> {
    let body = table.to_string_with_comments(comments);
    write_atomic(path, body.as_bytes())?;
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(name = "dnls", version, about = "Deterministic dnls-core experiments")]
struct Cli {
    /// Configuration file (`key = value`, `#` comments); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "T", global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    p0: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long = "A", global = true)]
    big_a: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cubic multiplier: `unit` or a sparse table file.
    #[arg(long, global = true)]
    multiplier: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a plane-wave preset and compare against the exact orbit.
    Simulate {
        /// Plane-wave amplitude.
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        /// Plane-wave frequency.
        #[arg(long, default_value_t = 1)]
        mode: i64,
    },
    /// Gauge round trip and conservation on seeded smooth data.
    GaugeCheck,
    /// Fourier–Lebesgue norm report for a spatial field file (`k re im`).
    Norms {
        #[arg(long)]
        field: PathBuf,
    },
    /// Exhaustive interaction-triple and chained-pair classification.
    Classify {
        /// Frequency radius for the triple partition.
        #[arg(long, default_value_t = 64)]
        radius: i64,
        /// Frequency radius for the chained-pair cases.
        #[arg(long, default_value_t = 24)]
        chain_radius: i64,
    },
    /// Resonance kernel tables and fitted bound constants.
    Kernels {
        #[arg(long, default_value_t = 64.0)]
        half_extent: f64,
        #[arg(long, default_value_t = 96)]
        n_side: usize,
    },
    /// Para-controlled fixed point: inner contraction and outer Picard.
    Fixpoint {
        /// Data amplitude.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Exact divisor counting: fast vs naive, identities, growth fit.
    Divisors {
        #[arg(long, default_value_t = 200)]
        queries: usize,
    },
    /// Seeded operator-constant sweeps.
    Probe {
        /// Comma-separated n_max sweep.
        #[arg(long, default_value = "8,16")]
        n_max_list: String,
        /// Comma-separated Lebesgue exponents for the trilinear sweep.
        #[arg(long, default_value = "2")]
        p_list: String,
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| check(format!("config file {}: {e}", path.display())))?;
        parse_config_file(&text, &mut cfg)?;
    }
    if let Some(v) = cli.n_max {
        cfg.n_max = v;
    }
    if let Some(v) = cli.dt {
        cfg.dt = v;
    }
    if let Some(v) = cli.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = cli.p0 {
        cfg.p0 = v;
    }
    if let Some(v) = cli.delta {
        cfg.delta = v;
    }
    if let Some(v) = cli.big_a {
        cfg.big_a = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.multiplier {
        cfg.multiplier = v.clone();
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_simulate(cfg: &RunConfig, amplitude: f64, mode: i64) -> Result<(), RunError> {
    let int_cfg = IntegratorConfig::new(cfg.n_max, cfg.dt, cfg.t_end)?;
    let a = Complex64::new(amplitude, 0.0);
    let u0 = exact_plane_wave(a, mode, cfg.n_max, 0.0);
    let u = integrate_dnls(&u0, &int_cfg)?;
    let mut table = CsvTable::new(&["t", "max_mode_error"]);
    let mut max_err = 0.0f64;
    for i in 0..u.n_t() {
        let t = u.time(i);
        let err = u.slice(i).sub(&exact_plane_wave(a, mode, cfg.n_max, t)).sup_mode();
        max_err = max_err.max(err);
        table.push(vec![fmt(t), fmt(err)]);
    }
    let mut comments = echo(cfg);
    comments.push(format!("amplitude = {amplitude}"));
    comments.push(format!("mode = {mode}"));
    comments.push(format!("max_error = {}", fmt(max_err)));
    write_csv(&cfg.out.join("simulate.csv"), &table, &comments)?;
    if max_err > 1e-6 {
        return Err(check(format!(
            "plane-wave error {max_err:.3e} exceeds the 1e-6 budget"
        )));
    }
    Ok(())
}

fn cmd_gauge_check(cfg: &RunConfig) -> Result<(), RunError> {
    let int_cfg = IntegratorConfig::new(cfg.n_max, cfg.dt, cfg.t_end)?;
    // The gauge phase widens the spectrum, so the data band must leave
    // headroom inside the representation width for the round trip to close.
    let mut rng = stream(cfg.seed, "cli-gauge-check");
    let band = (cfg.n_max / 3).max(1);
    let narrow = SpectralField::random_smooth(band, 0.1, &mut rng);
    let u0 = SpectralField::from_fn(cfg.n_max, |k| {
        if k.unsigned_abs() as usize <= band {
            narrow.mode(k)
        } else {
            Complex64::default()
        }
    });
    let u = integrate_dnls(&u0, &int_cfg)?;
    let (v, _) = gauge_forward(&u)?;
    let (back, _) = gauge_inverse(&v)?;
    let mass0 = u.slice(0).l2_squared();
    let mut table = CsvTable::new(&["t", "roundtrip_rel", "l2_rel", "mass_rel"]);
    let (mut worst_rt, mut worst_l2, mut worst_mass) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..u.n_t() {
        let s = u.slice(i);
        let sup = s.sup_mode().max(1e-300);
        let rt = back.slice(i).sub(s).sup_mode() / sup;
        let l2 = (v.slice(i).l2_squared() - s.l2_squared()).abs() / s.l2_squared();
        let mass = (s.l2_squared() - mass0).abs() / mass0;
        worst_rt = worst_rt.max(rt);
        worst_l2 = worst_l2.max(l2);
        worst_mass = worst_mass.max(mass);
        table.push(vec![fmt(u.time(i)), fmt(rt), fmt(l2), fmt(mass)]);
    }
    let mut comments = echo(cfg);
    comments.push(format!("worst_roundtrip_rel = {}", fmt(worst_rt)));
    comments.push(format!("worst_l2_rel = {}", fmt(worst_l2)));
    comments.push(format!("worst_mass_rel = {}", fmt(worst_mass)));
    write_csv(&cfg.out.join("gauge_check.csv"), &table, &comments)?;
    if worst_rt > 1e-10 || worst_l2 > 1e-10 {
        return Err(check(format!(
            "gauge round trip {worst_rt:.3e} / L2 drift {worst_l2:.3e} exceed 1e-10"
        )));
    }
    Ok(())
}

fn cmd_norms(cfg: &RunConfig, l: &ParameterLadder, field_path: &Path) -> Result<(), RunError> {
    let text = std::fs::read_to_string(field_path)
        .map_err(|e| check(format!("field file {}: {e}", field_path.display())))?;
    let mut modes: HashMap<i64, Complex64> = HashMap::new();
    let mut width = 1i64;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || check(format!("field file line {}: expected `k re im`", lineno + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let k: i64 = parts[0].parse().map_err(|_| bad())?;
        let re: f64 = parts[1].parse().map_err(|_| bad())?;
        let im: f64 = parts[2].parse().map_err(|_| bad())?;
        modes.insert(k, Complex64::new(re, im));
        width = width.max(k.abs());
    }
    let f = SpectralField::from_fn(width as usize, |k| {
        modes.get(&k).copied().unwrap_or_default()
    });
    let mut records = Vec::new();
    for &(sigma, p) in &[
        (0.0, 2.0),
        (0.5, 2.0),
        (2.0, 2.0),
        (0.5, l.p0),
        (2.0, l.p0),
    ] {
        records.push(NormRecord {
            space: "FL".into(),
            s: sigma,
            b: None,
            p,
            q: None,
            value: fl_norm(&f, sigma, p),
            grid_meta: format!("spatial n_max={width}"),
        });
    }
    let header: String = echo(cfg)
        .iter()
        .map(|line| format!("# {line}\n"))
        .collect();
    let body = format!("{header}{}", json_lines(&records)?);
    write_atomic(&cfg.out.join("norms.jsonl"), body.as_bytes())?;
    Ok(())
}

fn cmd_classify(cfg: &RunConfig, radius: i64, chain_radius: i64) -> Result<(), RunError> {
    if radius < 1 || chain_radius < 1 {
        return Err(check("classification radii must be at least 1"));
    }
    let rep = verify_prop23(radius);
    let mut triples = CsvTable::new(&["radius", "total", "n", "h", "l", "s", "overlaps", "violations"]);
    triples.push(vec![
        rep.radius.to_string(),
        rep.total.to_string(),
        rep.class_counts[0].to_string(),
        rep.class_counts[1].to_string(),
        rep.class_counts[2].to_string(),
        rep.class_counts[3].to_string(),
        rep.overlaps.len().to_string(),
        rep.violations.len().to_string(),
    ]);
    write_csv(&cfg.out.join("classify_triples.csv"), &triples, &echo(cfg))?;

    let chain = verify_prop24(chain_radius);
    let mut chains = CsvTable::new(&["case", "count", "max_ratio", "witness"]);
    for (i, s) in chain.stats.iter().enumerate() {
        chains.push(vec![
            format!("case_{}", i + 1),
            s.count.to_string(),
            fmt(s.max_ratio),
            format!("{:?}", s.witness),
        ]);
    }
    chains.push(vec![
        "case_3_chain".into(),
        chain.case3.count.to_string(),
        fmt(chain.case3.max_ratio),
        format!("{:?}", chain.case3.witness),
    ]);
    let mut comments = echo(cfg);
    comments.push(format!("chain_radius = {}", chain.radius));
    comments.push(format!("case3_k5_ratio = {}", fmt(chain.case3_k5_ratio)));
    comments.push(format!("violations = {}", chain.violations.len()));
    write_csv(&cfg.out.join("classify_chains.csv"), &chains, &comments)?;

    if !rep.overlaps.is_empty() || !rep.violations.is_empty() || !chain.violations.is_empty() {
        return Err(check(format!(
            "classification violations: {} overlaps, {} triple, {} chain",
            rep.overlaps.len(),
            rep.violations.len(),
            chain.violations.len()
        )));
    }
    Ok(())
}

fn cmd_kernels(cfg: &RunConfig, half_extent: f64, n_side: usize) -> Result<(), RunError> {
    let eta = eta_profile();
    let mut comments = echo(cfg);
    comments.push(format!("eta_hat_residual = {}", fmt(eta.residual_hat)));
    comments.push(format!("eta_hilbert_residual = {}", fmt(eta.residual_hilbert)));

    let mut table = CsvTable::new(&["sigma", "lambda", "re", "im"]);
    for &sigma in &[0.5, 1.0, 2.0] {
        let mut lambda = -16.0;
        while lambda <= 16.0 + 1e-12 {
            let k = kernel_k(lambda, sigma)?;
            table.push(vec![fmt(sigma), fmt(lambda), fmt(k.re), fmt(k.im)]);
            lambda += 0.5;
        }
    }
    write_csv(&cfg.out.join("kernel_table.csv"), &table, &comments)?;

    let mut fits = CsvTable::new(&["delta", "c_k", "c_y", "c_x0", "c_xplus"]);
    for &delta in &[2.0, 8.0, 32.0, 128.0] {
        let rep = kernel_bound_fit(delta, half_extent, n_side)?;
        fits.push(vec![fmt(rep.delta), fmt(rep.c_k), fmt(rep.c_y), fmt(rep.c_x0), fmt(rep.c_xplus)]);
    }
    write_csv(&cfg.out.join("kernel_fit.csv"), &fits, &echo(cfg))?;
    Ok(())
}

fn cmd_fixpoint(cfg: &RunConfig, l: &ParameterLadder, epsilon: f64) -> Result<(), RunError> {
    if !(epsilon > 0.0) {
        return Err(check("epsilon must be positive"));
    }
    let m3 = load_multiplier(&cfg.multiplier)?;
    let m5 = Multiplier::unit(5);
    let mut rng = stream(cfg.seed, "cli-fixpoint");
    let profile = SpectralField::random_smooth(cfg.n_max, epsilon, &mut rng);
    let v0 = dnls_core::gauge::gauge_data(&profile)?;
    let (pair, z_bounds) =
        picard_solve_w(&v0, l, 0.5, 1e-8, 12, &m3, &m5, None, cfg.dt)?;
    let mut table = CsvTable::new(&["iteration", "contraction_ratio", "z_bound"]);
    let n = pair.ratios.len().max(z_bounds.len());
    for i in 0..n {
        table.push(vec![
            (i + 1).to_string(),
            pair.ratios.get(i).map(|&r| fmt(r)).unwrap_or_default(),
            z_bounds.get(i).map(|&z| fmt(z)).unwrap_or_default(),
        ]);
    }
    let mut comments = echo(cfg);
    comments.push(format!("epsilon = {epsilon}"));
    comments.push(format!("residual = {}", fmt(pair.residual)));
    write_csv(&cfg.out.join("fixpoint.csv"), &table, &comments)?;
    if pair.residual > 1e-8 {
        return Err(check(format!(
            "inner fixed-point residual {:.3e} exceeds 1e-8",
            pair.residual
        )));
    }
    Ok(())
}

fn cmd_divisors(cfg: &RunConfig, queries: usize) -> Result<(), RunError> {
    let mut rng = stream(cfg.seed, "cli-divisors");
    let mut mismatches = 0usize;
    for _ in 0..queries {
        let k: i128 = rng.gen_range(1..=10_000);
        let q: i128 = rng.gen_range(-10_000..=10_000);
        let rho: f64 = rng.gen_range(0.05..1.0);
        if divisors_in_ball_z(k, q, rho)? != divisors_in_ball_z_naive(k, q, rho)? {
            mismatches += 1;
        }
    }
    let mut eis_mismatches = 0usize;
    for _ in 0..queries.div_ceil(10) {
        let k = EisensteinInt::new(rng.gen_range(-30..=30), rng.gen_range(-30..=30));
        if k.is_zero() {
            continue;
        }
        let q = EisensteinInt::new(rng.gen_range(-30..=30), rng.gen_range(-30..=30));
        let rho: f64 = rng.gen_range(0.05..1.0);
        if divisors_in_ball_eis(&k, &q, rho)? != divisors_in_ball_eis_naive(&k, &q, rho)? {
            eis_mismatches += 1;
        }
    }
    let mut identity_failures = 0usize;
    for _ in 0..queries {
        let (a, b, c) = (
            rng.gen_range(-2000..=2000i128),
            rng.gen_range(-2000..=2000i128),
            rng.gen_range(-2000..=2000i128),
        );
        let (l1, r1) = identity_mixed_first(b + c - a, a, b, c);
        let (l2, r2) = identity_mixed_last(a + b - c, a, b, c);
        let (l3, r3) = identity_all_plus(a + b + c, a, b, c);
        if l1 != r1 || l2 != r2 || l3 != r3 {
            identity_failures += 1;
        }
    }
    // Worst no-pairing solution count per dyadic scale, from planted
    // witnesses; the fitted log-log slope should stay near zero.
    let mut points = Vec::new();
    let mut table = CsvTable::new(&["shell", "worst_count"]);
    for j in 7..=12u32 {
        let n = 1i64 << j;
        let mut worst = 0u64;
        for _ in 0..6 {
            let a = rng.gen_range(2 * n..4 * n - 1);
            let b = rng.gen_range(n..2 * n - 1);
            let c = rng.gen_range(n / 2..n - 1).max(1);
            let lin = a as i128 - b as i128 + c as i128;
            let quad = -(a as i128).pow(2) + (b as i128).pow(2) - (c as i128).pow(2);
            let spec = SystemSpec::new([1, -1, 1], lin, quad, [2 * n, n, (n / 2).max(1)])
                .map_err(RunError::Core)?;
            worst = worst.max(count_system_solutions(&spec).0);
        }
        points.push((n as f64, worst as f64));
        table.push(vec![n.to_string(), worst.to_string()]);
    }
    let slope = growth_fit(&points)?;
    let mut comments = echo(cfg);
    comments.push(format!("queries = {queries}"));
    comments.push(format!("z_mismatches = {mismatches}"));
    comments.push(format!("eis_mismatches = {eis_mismatches}"));
    comments.push(format!("identity_failures = {identity_failures}"));
    comments.push(format!("growth_slope = {}", fmt(slope)));
    write_csv(&cfg.out.join("divisors.csv"), &table, &comments)?;
    if mismatches + eis_mismatches + identity_failures > 0 || slope > 0.2 {
        return Err(check(format!(
            "divisor experiments failed: {mismatches}+{eis_mismatches} mismatches, \
             {identity_failures} identity failures, slope {slope:.3}"
        )));
    }
    Ok(())
}

fn cmd_probe(
    cfg: &RunConfig,
    l: &ParameterLadder,
    n_max_list: &str,
    p_list: &str,
    samples: usize,
) -> Result<(), RunError> {
    let n_values: Vec<usize> = n_max_list
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| check(format!("bad n_max entry `{s}`"))))
        .collect::<Result<_, _>>()?;
    let p_values: Vec<f64> = p_list
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| check(format!("bad p entry `{s}`"))))
        .collect::<Result<_, _>>()?;
    let header: String = echo(cfg).iter().map(|line| format!("# {line}\n")).collect();

    let tri = trilinear_probe(&p_values, &n_values, samples, cfg.seed, cfg.delta)?;
    write_atomic(
        &cfg.out.join("probe_trilinear.csv"),
        format!("{header}{}", tri.to_csv()).as_bytes(),
    )?;
    for (star, name) in [(TripleClass::N, "probe_ey_n.csv"), (TripleClass::L, "probe_ey_l.csv")] {
        let rep = ey_bound_probe(star, &n_values, samples, cfg.seed, l)?;
        write_atomic(&cfg.out.join(name), format!("{header}{}", rep.to_csv()).as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> Result<RunConfig, (Option<RunConfig>, RunError)> {
    let cfg = resolve_config(cli).map_err(|e| (None, e))?;
    let l = validate(&cfg).map_err(|e| (Some(cfg.clone()), e))?;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| (Some(cfg.clone()), check(format!("output directory: {e}"))))?;
    let outcome = match &cli.command {
        Command::Simulate { amplitude, mode } => cmd_simulate(&cfg, *amplitude, *mode),
        Command::GaugeCheck => cmd_gauge_check(&cfg),
        Command::Norms { field } => cmd_norms(&cfg, &l, field),
        Command::Classify { radius, chain_radius } => cmd_classify(&cfg, *radius, *chain_radius),
        Command::Kernels { half_extent, n_side } => cmd_kernels(&cfg, *half_extent, *n_side),
        Command::Fixpoint { epsilon } => cmd_fixpoint(&cfg, &l, *epsilon),
        Command::Divisors { queries } => cmd_divisors(&cfg, *queries),
        Command::Probe { n_max_list, p_list, samples } => {
            cmd_probe(&cfg, &l, n_max_list, p_list, samples.to_owned())
        }
    };
    match outcome {
        Ok(()) => Ok(cfg),
        Err(e) => Err((Some(cfg), e)),
    }
}

fn json_escape(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => "\\\"".chars().collect::<Vec<_>>(),
            '\\' => "\\\\".chars().collect(),
            '\n' => "\\n".chars().collect(),
            c => vec![c],
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err((cfg, e)) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            if let Some(cfg) = cfg {
                // Machine-readable error record next to the artifacts.
                let record = format!(
                    "{{\"error\":\"{}\",\"exit_code\":{code}}}\n",
                    json_escape(&e.to_string())
                );
                if std::fs::create_dir_all(&cfg.out).is_ok() {
                    let _ = write_atomic(&cfg.out.join("error.jsonl"), record.as_bytes());
                }
            }
            ExitCode::from(code)
        }
    }
}
