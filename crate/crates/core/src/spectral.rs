//! Truncated Fourier representation of 2π-periodic complex fields and of
//! spacetime fields on a uniform time grid, with the transform conventions
//! used throughout the laboratory:
//!
//! * spatial transform  û(k) = (1/2π) ∫ e^{-ikx} u(x) dx,
//! * free flow          e^{it∂_x²} acting as e^{-ik²t} on mode k,
//! * twisted transform  ũ(k, λ) = û(k, λ - k²) realized as time quadrature
//!   of e^{-iλt} · e^{ik²t} · û(k, t).

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn fft_inplace(buf: &mut [Complex64], inverse: bool) {
    let len = buf.len();
    let fft = FFT_CACHE.with(|c| {
        c.borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    });
    fft.process(buf);
}

/// Japanese bracket ⟨x⟩ = √(1 + x²).
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Truncated spatial Fourier representation of a periodic complex field.
///
/// Modes are stored for k ∈ [-n_max, n_max].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n_max: usize,
    modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(n_max: usize) -> Self {
        SpectralField {
            n_max,
            modes: vec![Complex64::new(0.0, 0.0); 2 * n_max + 1],
        }
    }

    pub fn from_fn(n_max: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let mut out = Self::zero(n_max);
        for k in -(n_max as i64)..=(n_max as i64) {
            *out.mode_mut(k) = f(k);
        }
        out
    }

    /// Single mode k with the given amplitude.
    pub fn single_mode(n_max: usize, k: i64, amplitude: Complex64) -> Self {
        let mut out = Self::zero(n_max);
        *out.mode_mut(k) = amplitude;
        out
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mode(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.modes[(k + self.n_max as i64) as usize]
        }
    }

    pub fn mode_mut(&mut self, k: i64) -> &mut Complex64 {
        assert!(k.unsigned_abs() as usize <= self.n_max, "mode out of range");
        &mut self.modes[(k + self.n_max as i64) as usize]
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.n_max as i64;
        self.modes.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    /// Forward transform of samples on a uniform 2π-periodic grid.
    ///
    /// The grid length determines the truncation radius via
    /// n_max = (len - 2) / 2, so the round-trip invariant holds.
    pub fn forward_transform(samples: &[Complex64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "forward_transform needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let len = samples.len();
        let n_max = (len - 2) / 2;
        let mut buf = samples.to_vec();
        fft_inplace(&mut buf, false);
        // DFT with 1/N scaling matches (1/2π) ∫ e^{-ikx} u dx on the grid.
        let scale = 1.0 / len as f64;
        let mut out = Self::zero(n_max);
        for k in -(n_max as i64)..=(n_max as i64) {
            let idx = k.rem_euclid(len as i64) as usize;
            *out.mode_mut(k) = buf[idx] * scale;
        }
        Ok(out)
    }

    /// Samples of Σ_k f̂(k) e^{ikx} on a uniform grid of the given size.
    pub fn inverse_transform(&self, grid_size: usize) -> Result<Vec<Complex64>> {
        if grid_size < 2 * self.n_max + 2 {
            return Err(Error::invalid(format!(
                "grid size {} would alias modes of a field with n_max {}; need at least {}",
                grid_size,
                self.n_max,
                2 * self.n_max + 2
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
        for (k, c) in self.modes() {
            let idx = k.rem_euclid(grid_size as i64) as usize;
            buf[idx] = c;
        }
        fft_inplace(&mut buf, true);
        Ok(buf)
    }

    /// Split into (mean, mean-free part): P₀f and P_{≠0}f.
    pub fn project(&self) -> (Complex64, SpectralField) {
        let mean = self.mode(0);
        let mut rest = self.clone();
        *rest.mode_mut(0) = Complex64::new(0.0, 0.0);
        (mean, rest)
    }

    /// Unique mean-zero antiderivative of the mean-free part:
    /// mode k ↦ f̂(k)/(ik) for k ≠ 0, mode 0 ↦ 0.
    pub fn antiderivative_mean_free(&self) -> SpectralField {
        SpectralField::from_fn(self.n_max, |k| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.mode(k) / Complex64::new(0.0, k as f64)
            }
        })
    }

    /// Spatial derivative: mode k ↦ ik·f̂(k).
    pub fn derivative(&self) -> SpectralField {
        SpectralField::from_fn(self.n_max, |k| self.mode(k) * Complex64::new(0.0, k as f64))
    }

    /// Free Schrödinger flow e^{it∂_x²}: mode k multiplied by e^{-ik²t}.
    pub fn linear_flow(&self, t: f64) -> SpectralField {
        SpectralField::from_fn(self.n_max, |k| {
            let phase = -(k * k) as f64 * t;
            self.mode(k) * Complex64::from_polar(1.0, phase)
        })
    }

    /// Complex conjugate of the physical-space function: modes reversed and conjugated.
    pub fn conj_field(&self) -> SpectralField {
        SpectralField::from_fn(self.n_max, |k| self.mode(-k).conj())
    }

    /// ℓ² sum Σ_k |f̂(k)|², which equals (1/2π)∫|u|² dx by Parseval.
    pub fn l2_squared(&self) -> f64 {
        self.modes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, c: Complex64) -> SpectralField {
        SpectralField {
            n_max: self.n_max,
            modes: self.modes.iter().map(|m| m * c).collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let n = self.n_max.max(other.n_max);
        SpectralField::from_fn(n, |k| self.mode(k) + other.mode(k))
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let n = self.n_max.max(other.n_max);
        SpectralField::from_fn(n, |k| self.mode(k) - other.mode(k))
    }

    /// Largest mode amplitude.
    pub fn sup_mode(&self) -> f64 {
        self.modes.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Truncate (or zero-pad) to a new radius.
    pub fn truncated(&self, n_max: usize) -> SpectralField {
        SpectralField::from_fn(n_max, |k| self.mode(k))
    }

    /// Random smooth field: Gaussian-decaying spectrum with random phases,
    /// scaled so the largest mode has the given amplitude.
    pub fn random_smooth(n_max: usize, amplitude: f64, rng: &mut impl Rng) -> SpectralField {
        let k0 = (n_max as f64 / 4.0).max(1.0);
        let mut f = SpectralField::from_fn(n_max, |k| {
            let mag = (-((k as f64) / k0).powi(2)).exp();
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            let re: f64 = rng.gen::<f64>() - 0.5;
            Complex64::from_polar(mag * (0.5 + re.abs()), phase)
        });
        let sup = f.sup_mode();
        if sup > 0.0 {
            f = f.scale(Complex64::new(amplitude / sup, 0.0));
        }
        f
    }
}

/// Uniform grid in the modulation variable λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl LambdaGrid {
    /// Default grid for kernel work: wide and coarse, tails handled analytically.
    pub const DEFAULT: LambdaGrid = LambdaGrid {
        min: -4096.0,
        max: 4096.0,
        step: 0.25,
    };

    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(max > min) {
            return Err(Error::invalid(format!(
                "lambda grid must satisfy max > min and step > 0, got [{min}, {max}] step {step}"
            )));
        }
        Ok(LambdaGrid { min, max, step })
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.value(i))
    }
}

/// Twisted (modulation-variable) representation: ũ(k, λ) per mode on a λ grid.
#[derive(Debug, Clone)]
pub struct TwistedField {
    pub n_max: usize,
    pub grid: LambdaGrid,
    /// data[mode index][lambda index], mode index = k + n_max.
    pub data: Vec<Vec<Complex64>>,
    /// Quadrature tolerance declared at construction.
    pub quad_tol: f64,
}

impl TwistedField {
    pub fn value(&self, k: i64, lambda_index: usize) -> Complex64 {
        self.data[(k + self.n_max as i64) as usize][lambda_index]
    }

    pub fn row(&self, k: i64) -> &[Complex64] {
        &self.data[(k + self.n_max as i64) as usize]
    }
}

/// Spectral field sampled on a uniform time grid, optionally carrying a
/// twisted representation.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    n_max: usize,
    t_start: f64,
    dt: f64,
    slices: Vec<SpectralField>,
    twisted: Option<TwistedField>,
}

impl SpaceTimeField {
    pub fn new(t_start: f64, dt: f64, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::invalid("spacetime field needs at least one slice"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("time step must be positive"));
        }
        let n_max = slices[0].n_max();
        if slices.iter().any(|s| s.n_max() != n_max) {
            return Err(Error::invalid("all slices must share n_max"));
        }
        Ok(SpaceTimeField {
            n_max,
            t_start,
            dt,
            slices,
            twisted: None,
        })
    }

    pub fn from_fn(
        n_max: usize,
        t_start: f64,
        dt: f64,
        n_t: usize,
        mut f: impl FnMut(f64, i64) -> Complex64,
    ) -> Self {
        let slices = (0..n_t)
            .map(|i| {
                let t = t_start + i as f64 * dt;
                SpectralField::from_fn(n_max, |k| f(t, k))
            })
            .collect();
        SpaceTimeField::new(t_start, dt, slices).expect("valid grid")
    }

    pub fn zero(n_max: usize, t_start: f64, dt: f64, n_t: usize) -> Self {
        Self::from_fn(n_max, t_start, dt, n_t, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + (self.slices.len() - 1) as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_t(&self) -> usize {
        self.slices.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn slice(&self, i: usize) -> &SpectralField {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    /// Index of the grid point closest to t; error if t lies outside the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t_start) / self.dt;
        if x < -1e-9 || x > (self.slices.len() - 1) as f64 + 1e-9 {
            return Err(Error::invalid(format!(
                "time {t} outside grid [{}, {}]",
                self.t_start,
                self.t_end()
            )));
        }
        Ok(x.round().clamp(0.0, (self.slices.len() - 1) as f64) as usize)
    }

    pub fn map_slices(&self, mut f: impl FnMut(f64, &SpectralField) -> SpectralField) -> Self {
        let slices = self
            .slices
            .iter()
            .enumerate()
            .map(|(i, s)| f(self.time(i), s))
            .collect();
        SpaceTimeField::new(self.t_start, self.dt, slices).expect("same grid")
    }

    pub fn add(&self, other: &SpaceTimeField) -> SpaceTimeField {
        assert!(self.compatible_grid(other), "incompatible time grids");
        self.map_slices(|t, s| {
            let i = other.index_of(t).unwrap();
            s.add(other.slice(i))
        })
    }

    pub fn sub(&self, other: &SpaceTimeField) -> SpaceTimeField {
        assert!(self.compatible_grid(other), "incompatible time grids");
        self.map_slices(|t, s| {
            let i = other.index_of(t).unwrap();
            s.sub(other.slice(i))
        })
    }

    pub fn scale(&self, c: Complex64) -> SpaceTimeField {
        self.map_slices(|_, s| s.scale(c))
    }

    pub fn compatible_grid(&self, other: &SpaceTimeField) -> bool {
        (self.t_start - other.t_start).abs() < 1e-12
            && (self.dt - other.dt).abs() < 1e-15
            && self.slices.len() == other.slices.len()
    }

    /// sup over (k, t) of the mode amplitudes.
    pub fn sup_mode(&self) -> f64 {
        self.slices.iter().map(|s| s.sup_mode()).fold(0.0, f64::max)
    }

    /// Time trace of one mode.
    pub fn mode_trace(&self, k: i64) -> Vec<Complex64> {
        self.slices.iter().map(|s| s.mode(k)).collect()
    }

    pub fn twisted(&self) -> Option<&TwistedField> {
        self.twisted.as_ref()
    }

    pub fn with_twisted(mut self, tw: TwistedField) -> Self {
        self.twisted = Some(tw);
        self
    }

    /// Compute the twisted representation ũ(k, λ) on the given λ grid by
    /// composite-trapezoid time quadrature of e^{-iλt} e^{ik²t} û(k, t),
    /// with the 1/2π time-transform normalization.
    ///
    /// The field must be compactly supported inside the time grid (apply a
    /// cutoff first); quadrature tolerance is estimated as the step-doubling
    /// residual of the trapezoid rule on the roughest mode.
    pub fn twist(&self, grid: LambdaGrid) -> Result<TwistedField> {
        // Resolution guard: the grid must resolve oscillations e^{-iλt} at the
        // extreme λ against the declared time step.
        let lam_abs = grid.min.abs().max(grid.max.abs());
        if lam_abs * self.dt > std::f64::consts::PI {
            return Err(Error::invalid(format!(
                "lambda grid extent {lam_abs} is not resolved by time step {}",
                self.dt
            )));
        }
        let n_t = self.n_t();
        let norm = self.dt / std::f64::consts::TAU;
        let mut data = Vec::with_capacity(2 * self.n_max + 1);
        for k in -(self.n_max as i64)..=(self.n_max as i64) {
            let ksq = (k * k) as f64;
            // Pre-twist the trace by e^{ik²t} with trapezoid end weights folded in.
            let weighted: Vec<Complex64> = (0..n_t)
                .map(|i| {
                    let t = self.time(i);
                    let w = if i == 0 || i == n_t - 1 { 0.5 } else { 1.0 };
                    self.slices[i].mode(k) * Complex64::from_polar(1.0, ksq * t) * (w * norm)
                })
                .collect();
            let row: Vec<Complex64> = grid
                .values()
                .map(|lam| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, &c) in weighted.iter().enumerate() {
                        let t = self.time(i);
                        acc += c * Complex64::from_polar(1.0, -lam * t);
                    }
                    acc
                })
                .collect();
            data.push(row);
        }
        // Quadrature tolerance: compare against half-resolution trapezoid on mode 0.
        let quad_tol = self.twist_residual_estimate(&grid);
        Ok(TwistedField {
            n_max: self.n_max,
            grid,
            data,
            quad_tol,
        })
    }

    fn twist_residual_estimate(&self, grid: &LambdaGrid) -> f64 {
        // Trapezoid error estimate from step doubling at the worst λ, mode 0.
        let n_t = self.n_t();
        if n_t < 5 {
            return f64::INFINITY;
        }
        let lam = grid.min.abs().max(grid.max.abs());
        let norm = self.dt / std::f64::consts::TAU;
        let mut full = Complex64::new(0.0, 0.0);
        let mut half = Complex64::new(0.0, 0.0);
        for i in 0..n_t {
            let t = self.time(i);
            let w = if i == 0 || i == n_t - 1 { 0.5 } else { 1.0 };
            let v = self.slices[i].mode(0) * Complex64::from_polar(1.0, -lam * t);
            full += v * (w * norm);
            if i % 2 == 0 {
                let wh = if i == 0 || i >= n_t - 2 { 0.5 } else { 1.0 };
                half += v * (wh * 2.0 * norm);
            }
        }
        (full - half).norm() / 3.0
    }

    /// Reconstruct the physical-time representation from a twisted one:
    /// û(k, t) = e^{-ik²t} ∫ ũ(k, λ) e^{iλt} dλ (trapezoid on the λ grid).
    pub fn untwist(
        tw: &TwistedField,
        t_start: f64,
        dt: f64,
        n_t: usize,
    ) -> Result<SpaceTimeField> {
        let n_max = tw.n_max;
        let n_l = tw.grid.len();
        let slices: Vec<SpectralField> = (0..n_t)
            .map(|i| {
                let t = t_start + i as f64 * dt;
                SpectralField::from_fn(n_max, |k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, lam) in tw.grid.values().enumerate() {
                        let w = if j == 0 || j == n_l - 1 { 0.5 } else { 1.0 };
                        acc += tw.value(k, j) * Complex64::from_polar(1.0, lam * t) * w;
                    }
                    acc * tw.grid.step * Complex64::from_polar(1.0, -(k * k) as f64 * t)
                })
            })
            .collect();
        SpaceTimeField::new(t_start, dt, slices)
    }
}

// ---------------------------------------------------------------------------
// Serialization: versioned plain-text format.
//
//   dnls-field v1 n_max=<N>
//   k re im           (one line per mode)
//
// Spacetime fields extend the header with the time grid and write one block
// per time sample, each introduced by a `t <index>` line.
// ---------------------------------------------------------------------------

fn write_modes(w: &mut impl Write, f: &SpectralField) -> Result<()> {
    for (k, c) in f.modes() {
        writeln!(w, "{} {:.17e} {:.17e}", k, c.re, c.im)?;
    }
    Ok(())
}

pub fn write_field(w: &mut impl Write, f: &SpectralField) -> Result<()> {
    writeln!(w, "dnls-field v1 n_max={}", f.n_max())?;
    write_modes(w, f)
}

pub fn write_spacetime(w: &mut impl Write, f: &SpaceTimeField) -> Result<()> {
    writeln!(
        w,
        "dnls-field v1 n_max={} t_start={:.17e} t_end={:.17e} dt={:.17e}",
        f.n_max(),
        f.t_start(),
        f.t_end(),
        f.dt()
    )?;
    for i in 0..f.n_t() {
        writeln!(w, "t {}", i)?;
        write_modes(w, f.slice(i))?;
    }
    Ok(())
}

struct Header {
    n_max: usize,
    time: Option<(f64, f64, f64)>,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut parts = line.split_whitespace();
    let magic = parts.next().unwrap_or("");
    let version = parts.next().unwrap_or("");
    if magic != "dnls-field" || version != "v1" {
        return Err(Error::Parse(format!("unrecognized header: {line}")));
    }
    let mut n_max = None;
    let mut t_start = None;
    let mut t_end = None;
    let mut dt = None;
    for kv in parts {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field: {kv}")))?;
        match key {
            "n_max" => n_max = Some(value.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
            "t_start" => t_start = Some(value.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?),
            "t_end" => t_end = Some(value.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?),
            "dt" => dt = Some(value.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?),
            other => return Err(Error::Parse(format!("unknown header key: {other}"))),
        }
    }
    let n_max = n_max.ok_or_else(|| Error::Parse("header missing n_max".into()))?;
    let time = match (t_start, t_end, dt) {
        (Some(a), Some(b), Some(d)) => Some((a, b, d)),
        (None, None, None) => None,
        _ => return Err(Error::Parse("incomplete time grid in header".into())),
    };
    Ok(Header { n_max, time })
}

fn parse_mode_line(line: &str, f: &mut SpectralField) -> Result<()> {
    let mut it = line.split_whitespace();
    let k: i64 = it
        .next()
        .ok_or_else(|| Error::Parse("empty mode line".into()))?
        .parse()
        .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
    let re: f64 = it
        .next()
        .ok_or_else(|| Error::Parse("mode line missing re".into()))?
        .parse()
        .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
    let im: f64 = it
        .next()
        .ok_or_else(|| Error::Parse("mode line missing im".into()))?
        .parse()
        .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
    *f.mode_mut(k) = Complex64::new(re, im);
    Ok(())
}

pub fn read_field(r: &mut impl BufRead) -> Result<SpectralField> {
    let mut lines = r.lines();
    let header = parse_header(
        &lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??,
    )?;
    let mut f = SpectralField::zero(header.n_max);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        parse_mode_line(&line, &mut f)?;
    }
    Ok(f)
}

pub fn read_spacetime(r: &mut impl BufRead) -> Result<SpaceTimeField> {
    let mut lines = r.lines();
    let header = parse_header(
        &lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??,
    )?;
    let (t_start, _t_end, dt) = header
        .time
        .ok_or_else(|| Error::Parse("header lacks a time grid".into()))?;
    let mut slices: Vec<SpectralField> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("t ") {
            let idx: usize = rest
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
            if idx != slices.len() {
                return Err(Error::Parse(format!(
                    "time blocks out of order: expected {}, found {idx}",
                    slices.len()
                )));
            }
            slices.push(SpectralField::zero(header.n_max));
        } else {
            let f = slices
                .last_mut()
                .ok_or_else(|| Error::Parse("mode line before first time block".into()))?;
            parse_mode_line(trimmed, f)?;
        }
    }
    SpaceTimeField::new(t_start, dt, slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn phys_grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| std::f64::consts::TAU * j as f64 / n as f64).collect()
    }

    #[test]
    fn constant_function_transforms_to_mode_zero() {
        let samples: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); 16];
        let f = SpectralField::forward_transform(&samples).unwrap();
        assert_relative_eq!(f.mode(0).re, 1.0, max_relative = 1e-14);
        for (k, c) in f.modes() {
            if k != 0 {
                assert!(c.norm() < 1e-14, "mode {k} should vanish");
            }
        }
    }

    #[test]
    fn single_exponential_is_mode_one() {
        let samples: Vec<Complex64> = phys_grid(16)
            .iter()
            .map(|&x| Complex64::from_polar(1.0, x))
            .collect();
        let f = SpectralField::forward_transform(&samples).unwrap();
        assert_relative_eq!(f.mode(1).re, 1.0, max_relative = 1e-13);
        assert!(f.mode(0).norm() < 1e-13);
        assert!(f.mode(-1).norm() < 1e-13);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            SpectralField::forward_transform(&[]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn round_trip_recovers_random_smooth_field() {
        let mut rng = crate::rng::stream(1, "spectral-roundtrip");
        let f = SpectralField::random_smooth(20, 1.0, &mut rng);
        let samples = f.inverse_transform(64).unwrap();
        let g = SpectralField::forward_transform(&samples).unwrap();
        let num: f64 = f.sub(&g.truncated(20)).l2_squared();
        let den: f64 = f.l2_squared();
        assert!((num / den).sqrt() < 1e-12);
    }

    #[test]
    fn inverse_transform_rejects_undersized_grid() {
        let f = SpectralField::zero(8);
        assert!(f.inverse_transform(17).is_err());
        assert!(f.inverse_transform(18).is_ok());
    }

    #[test]
    fn inverse_of_single_modes() {
        let f = SpectralField::single_mode(4, 0, Complex64::new(2.5, -1.0));
        for s in f.inverse_transform(12).unwrap() {
            assert_relative_eq!(s.re, 2.5, max_relative = 1e-13);
            assert_relative_eq!(s.im, -1.0, max_relative = 1e-13);
        }
        let g = SpectralField::single_mode(4, 1, Complex64::new(1.0, 0.0));
        let samples = g.inverse_transform(12).unwrap();
        for (j, s) in samples.iter().enumerate() {
            let x = std::f64::consts::TAU * j as f64 / 12.0;
            assert_relative_eq!(s.re, x.cos(), epsilon = 1e-13);
            assert_relative_eq!(s.im, x.sin(), epsilon = 1e-13);
        }
    }

    #[test]
    fn projection_splits_and_reassembles() {
        let f = SpectralField::single_mode(4, 0, Complex64::new(5.0, 0.0));
        let (mean, rest) = f.project();
        assert_eq!(mean, Complex64::new(5.0, 0.0));
        assert_eq!(rest.l2_squared(), 0.0);

        let g = SpectralField::single_mode(4, 3, Complex64::new(1.0, 0.0));
        let (mean, rest) = g.project();
        assert_eq!(mean, Complex64::new(0.0, 0.0));
        assert_eq!(rest, g);

        let mut rng = crate::rng::stream(2, "spectral-project");
        let h = SpectralField::random_smooth(10, 1.0, &mut rng);
        let (mean, rest) = h.project();
        let back = rest.add(&SpectralField::single_mode(10, 0, mean));
        assert_eq!(back, h);
    }

    #[test]
    fn antiderivative_examples() {
        let f = SpectralField::single_mode(4, 1, Complex64::new(1.0, 0.0));
        let g = f.antiderivative_mean_free();
        assert_relative_eq!(g.mode(1).im, -1.0, max_relative = 1e-15);
        assert_relative_eq!(g.mode(1).re, 0.0, epsilon = 1e-15);

        let c = SpectralField::single_mode(4, 0, Complex64::new(3.0, 0.0));
        assert_eq!(c.antiderivative_mean_free().l2_squared(), 0.0);

        // Differentiating the antiderivative recovers the mean-free part.
        let mut rng = crate::rng::stream(3, "spectral-antider");
        let h = SpectralField::random_smooth(12, 1.0, &mut rng);
        let (_, mean_free) = h.project();
        let diff = h.antiderivative_mean_free().derivative().sub(&mean_free);
        assert!(diff.sup_mode() < 1e-13);
    }

    #[test]
    fn linear_flow_phases_and_isometry() {
        let f = SpectralField::single_mode(4, 2, Complex64::new(1.0, 0.0));
        assert_eq!(f.linear_flow(0.0), f);
        let g = f.linear_flow(std::f64::consts::FRAC_PI_4);
        assert_relative_eq!(g.mode(2).re, -1.0, max_relative = 1e-14);
        assert!(g.mode(2).im.abs() < 1e-14);

        let mut rng = crate::rng::stream(4, "spectral-flow");
        let h = SpectralField::random_smooth(12, 1.0, &mut rng);
        let flowed = h.linear_flow(0.37);
        for (k, c) in h.modes() {
            assert_relative_eq!(c.norm(), flowed.mode(k).norm(), epsilon = 1e-15);
        }
    }

    #[test]
    fn parseval_on_sample_grid() {
        let mut rng = crate::rng::stream(5, "spectral-parseval");
        let f = SpectralField::random_smooth(16, 1.0, &mut rng);
        let n = 64;
        let samples = f.inverse_transform(n).unwrap();
        let phys: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert_relative_eq!(f.l2_squared(), phys, max_relative = 1e-10);
    }

    #[test]
    fn serialization_round_trips() {
        let mut rng = crate::rng::stream(6, "spectral-serialize");
        let f = SpectralField::random_smooth(6, 0.8, &mut rng);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let g = read_field(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);

        let st = SpaceTimeField::from_fn(3, -1.0, 0.5, 5, |t, k| {
            Complex64::new(t * k as f64, t + k as f64)
        });
        let mut buf = Vec::new();
        write_spacetime(&mut buf, &st).unwrap();
        let back = read_spacetime(&mut buf.as_slice()).unwrap();
        assert!(back.compatible_grid(&st));
        for i in 0..st.n_t() {
            assert_eq!(st.slice(i), back.slice(i));
        }
    }

    #[test]
    fn twist_of_free_evolution_is_k_independent() {
        // Mode trace φ(t) e^{-ik²t}: after twisting the λ-profile is φ̂(λ).
        let phi = crate::duhamel::CutoffProfile::standard();
        let n_max = 16;
        let dt = 1.0 / 128.0;
        let n_t = 513; // covers [-2, 2]
        let field = SpaceTimeField::from_fn(n_max, -2.0, dt, n_t, |t, k| {
            Complex64::from_polar(phi.eval(t), -((k * k) as f64) * t)
        });
        let grid = LambdaGrid::new(-32.0, 32.0, 0.5).unwrap();
        let tw = field.twist(grid).unwrap();
        let reference = tw.row(0).to_vec();
        for k in [-16i64, -7, 3, 16] {
            for (a, b) in tw.row(k).iter().zip(reference.iter()) {
                assert!((a - b).norm() < 1e-9, "twist profile must not depend on k");
            }
        }
    }

    #[test]
    fn twist_untwist_round_trip() {
        let phi = crate::duhamel::CutoffProfile::standard();
        let n_max = 4;
        let dt = 1.0 / 64.0;
        let n_t = 257;
        let mut rng = crate::rng::stream(8, "spectral-twist");
        let data = SpectralField::random_smooth(n_max, 1.0, &mut rng);
        let field = SpaceTimeField::from_fn(n_max, -2.0, dt, n_t, |t, k| {
            data.mode(k) * Complex64::from_polar(phi.eval(t), -((k * k) as f64) * t)
        });
        let grid = LambdaGrid::new(-100.0, 100.0, 0.25).unwrap();
        let tw = field.twist(grid).unwrap();
        let back = SpaceTimeField::untwist(&tw, -2.0, dt, n_t).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..n_t {
            worst = worst.max(field.slice(i).sub(back.slice(i)).sup_mode());
        }
        assert!(worst < 1e-3, "round trip residual {worst}");
    }

    #[test]
    fn twist_rejects_unresolved_grid() {
        let field = SpaceTimeField::zero(2, -2.0, 0.25, 17);
        let grid = LambdaGrid::new(-100.0, 100.0, 1.0).unwrap();
        assert!(field.twist(grid).is_err());
    }

    #[test]
    fn zero_field_twists_to_zero() {
        let field = SpaceTimeField::zero(2, -2.0, 1.0 / 64.0, 257);
        let grid = LambdaGrid::new(-10.0, 10.0, 0.5).unwrap();
        let tw = field.twist(grid).unwrap();
        for k in -2i64..=2 {
            assert!(tw.row(k).iter().all(|c| c.norm() == 0.0));
        }
    }
}
