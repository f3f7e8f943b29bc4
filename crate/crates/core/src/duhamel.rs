//! The Duhamel operator I, its smooth time truncation 𝓘, and the splitting
//! of I∘C_* into a resonance-weighted part E^Y and its complement E^X.
//!
//! Time-domain definitions (per output mode k, Δ = k² + k₁² − k₂² − k₃²):
//!
//! * IF(t)   = ∫₀ᵗ e^{−i(t−s)k²} F̂(s, k) ds,
//! * 𝓘F(t)  = φ(t) · I(φ(s)F)(t)  with the smooth plateau cutoff φ,
//! * E^Y(t)  = Σ k₁M₃ ∫₀ᵗ e^{−i(t−s)k²} η(Δ(t−s)) · conj(v̂₁)v̂₂v̂₃ ds,
//! * E^X     = I∘C_* − E^Y, truncated versions wrap with φ as for 𝓘.
//!
//! Here η is the analytic inverse transform of a two-Gaussian profile η̂
//! built so that η̂(1) = 0 and Hη̂(1) = 1 (H = principal-value convolution
//! by 1/ξ); the first condition kills the resonance μ = Δ in the complement
//! kernel, the second makes the weighted kernel match 1/μ there.
//!
//! On the twisted (modulation) side the same operators act through integral
//! kernels built from φ̂, Hφ̂, η̂ and Hη̂; all kernel integrals are evaluated
//! by trapezoid quadrature with symmetric principal-value excision around
//! μ = 0 (half-widths 0.1/0.05/0.025) and Richardson extrapolation. The
//! complement kernel splits further into a "small" part X⁰ and a remainder
//! X⁺ by indicator regions in (λ, σ); the split is exact by construction
//! (X⁺ := X − X⁰).

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::interactions::{
    classify_triple, resonance_delta, v3_triples, CubicKind, Multiplier, TripleClass,
};
use crate::norms::{xsb_norm_twisted, NormSpec, ParameterLadder};
use crate::spectral::{bracket, LambdaGrid, SpaceTimeField, SpectralField, TwistedField};

/// Excision half-widths for principal-value quadrature, largest first.
pub const PV_EXCISIONS: [f64; 3] = [0.1, 0.05, 0.025];
/// Base grid step for principal-value and kernel quadrature; every excision
/// half-width is an integer multiple of it.
const PV_STEP: f64 = 0.0125;
/// Effective half-support of φ̂ used to window the μ integrals: beyond this
/// the transform has decayed below the quadrature noise floor.
const MU_WINDOW: f64 = 100.0;
/// Number of time samples in the transform table (power of two for the FFT).
const FT_SAMPLES: usize = 1 << 16;
/// Time step of the transform table; table extent is π/FT_DT ≈ 402.
const FT_DT: f64 = 1.0 / 128.0;
/// Two-Gaussian model for η̂: exp(−((ξ−c)/w)²) at these centers and width.
const ETA_CENTERS: [f64; 2] = [0.5, 1.5];
const ETA_WIDTH: f64 = 0.5;
/// η̂ is negligible outside [−ETA_HAT_SUPPORT, ETA_HAT_SUPPORT].
const ETA_HAT_SUPPORT: f64 = 8.0;
/// |η(t)| is negligible for |t| beyond this (Gaussian envelope e^{−t²/16}).
const ETA_TIME_DECAY: f64 = 24.0;
/// A resonance group is time-resolved when |Δ|·dt stays below this; faster
/// groups oscillate between grid points and are integrated by the
/// resonance asymptotics instead of the trapezoid rule.
const RESOLVED_DELTA_DT: f64 = 2.0;
/// Extent and step of the tabulated Hη̂; moment tail beyond.
const ETA_HILBERT_EXTENT: f64 = 64.0;
const ETA_HILBERT_STEP: f64 = 1.0 / 16.0;

// ---------------------------------------------------------------------------
// The smooth plateau cutoff φ and its scaled family φ_T(t) = φ(t/T).
// ---------------------------------------------------------------------------

/// Smooth partition glue: s(0⁺) = 0, s(1⁻) = 1, s(x) + s(1−x) = 1, C^∞.
fn glue(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// Smooth cutoff equal to 1 on |t| ≤ T, 0 on |t| ≥ 2T, C^∞ in between.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    scale: f64,
}

impl CutoffProfile {
    /// The unit-scale cutoff: plateau |t| ≤ 1, support |t| < 2.
    pub fn standard() -> Self {
        CutoffProfile { scale: 1.0 }
    }

    /// Scaled cutoff φ_T(t) = φ(t/T).
    pub fn scaled(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid(format!(
                "cutoff scale must be positive, got {scale}"
            )));
        }
        Ok(CutoffProfile { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (t / self.scale).abs();
        if x <= 1.0 {
            1.0
        } else if x >= 2.0 {
            0.0
        } else {
            glue(2.0 - x)
        }
    }
}

// ---------------------------------------------------------------------------
// Tabulated transforms of the unit cutoff: φ̂ (even) and Hφ̂ (odd).
//
// φ̂(λ) = (1/2π)∫φ(t)e^{−iλt}dt, computed by one long FFT; since every
// derivative of φ vanishes at the ends of its support, the trapezoid sum is
// superalgebraically accurate. Hφ̂ is obtained from the time-side identity
// Hφ̂(σ) = (1/2π)∫ iπ·sgn(t)·φ(t) e^{−iσt} dt, and its tail is exactly 1/σ
// because all higher moments of φ̂ vanish (φ ≡ 1 near t = 0).
// ---------------------------------------------------------------------------

struct ProfileTables {
    step: f64,
    extent: f64,
    phi_hat: Vec<f64>,
    /// Hφ̂ on a coarser half-line grid (Hφ̂ is smooth on unit scale).
    hilbert_step: f64,
    hilbert_extent: f64,
    hilbert_phi_hat: Vec<f64>,
}

static TABLES: OnceLock<ProfileTables> = OnceLock::new();

fn build_tables() -> ProfileTables {
    let phi = CutoffProfile::standard();
    let n = FT_SAMPLES;
    let span = n as f64 * FT_DT;
    let t0 = -span / 2.0;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);

    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(phi.eval(t0 + j as f64 * FT_DT), 0.0))
        .collect();
    fft.process(&mut buf);
    let norm = FT_DT / std::f64::consts::TAU;
    let phi_hat: Vec<f64> = (0..=n / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (buf[m] * norm * sign).re
        })
        .collect();
    let step = std::f64::consts::TAU / span;
    let extent = step * (n / 2) as f64;

    // Hφ̂ by principal-value quadrature of the tabulated φ̂. The coarse
    // half-line grid suffices because Hφ̂ varies on unit scale; the table
    // reaches past the effective support of φ̂, beyond which the tail is
    // exactly 1/σ (all higher moments of φ̂ vanish since φ ≡ 1 near 0).
    let phi_local = |x: f64| -> f64 {
        if x.abs() >= extent - 2.0 * step {
            0.0
        } else {
            interp_half_table(&phi_hat, step, 1.0, x)
        }
    };
    let hilbert_step = 1.0 / 16.0;
    let hilbert_extent = MU_WINDOW + 20.0;
    let n_h = (hilbert_extent / hilbert_step).round() as usize;
    let hilbert_phi_hat: Vec<f64> = (0..=n_h)
        .map(|j| {
            let sigma = j as f64 * hilbert_step;
            pv_quadrature(|u| phi_local(sigma - u), sigma + MU_WINDOW + 5.0).value
        })
        .collect();

    ProfileTables {
        step,
        extent,
        phi_hat,
        hilbert_step,
        hilbert_extent,
        hilbert_phi_hat,
    }
}

fn tables() -> &'static ProfileTables {
    TABLES.get_or_init(build_tables)
}

/// Four-point Lagrange interpolation of a half-line table with the given
/// parity (+1 even, −1 odd); `fallback` supplies values beyond the table.
fn interp_half_table(table: &[f64], step: f64, parity: f64, x: f64) -> f64 {
    let ax = x.abs();
    let a = ax / step;
    let i = a.floor() as i64;
    let u = a - i as f64;
    let get = |j: i64| -> f64 {
        if j < 0 {
            parity * table.get((-j) as usize).copied().unwrap_or(0.0)
        } else {
            table.get(j as usize).copied().unwrap_or(0.0)
        }
    };
    let (f_m1, f0, f1, f2) = (get(i - 1), get(i), get(i + 1), get(i + 2));
    let v = f_m1 * (-u * (u - 1.0) * (u - 2.0) / 6.0)
        + f0 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0)
        + f1 * (-(u + 1.0) * u * (u - 2.0) / 2.0)
        + f2 * ((u + 1.0) * u * (u - 1.0) / 6.0);
    if x < 0.0 {
        parity * v
    } else {
        v
    }
}

/// φ̂(λ) for the unit cutoff (real and even); zero beyond the table extent,
/// where the transform has decayed below double-precision noise.
pub fn phi_hat(lambda: f64) -> f64 {
    let t = tables();
    if lambda.abs() >= t.extent - 2.0 * t.step {
        return 0.0;
    }
    interp_half_table(&t.phi_hat, t.step, 1.0, lambda)
}

/// Hφ̂(σ) = PV ∫ φ̂(y)/(σ−y) dy (real and odd); exactly 1/σ beyond the table.
pub fn hilbert_phi_hat(sigma: f64) -> f64 {
    let t = tables();
    if sigma.abs() >= t.hilbert_extent - 2.0 * t.hilbert_step {
        return 1.0 / sigma;
    }
    interp_half_table(&t.hilbert_phi_hat, t.hilbert_step, -1.0, sigma)
}

// ---------------------------------------------------------------------------
// Principal-value quadrature
// ---------------------------------------------------------------------------

/// Result of a principal-value quadrature: the Richardson-extrapolated value
/// and the disagreement between the two extrapolation levels.
#[derive(Debug, Clone, Copy)]
pub struct PvValue {
    pub value: f64,
    pub disagreement: f64,
}

fn pv_quadrature_c(f: impl Fn(f64) -> Complex64, half_width: f64) -> (Complex64, f64) {
    let n = (half_width / PV_STEP).round().max(16.0) as i64;
    // Ring sums g(j·h) + g(−j·h) for the excision shells, |j| = 1..8,
    // where g(u) = f(u)/u; the main sum covers |j| > 8.
    let g = |j: i64| {
        let u = j as f64 * PV_STEP;
        f(u) / u
    };
    let mut main = Complex64::new(0.0, 0.0);
    for j in 9..n {
        main += g(j) + g(-j);
    }
    main += (g(n) + g(-n)) * 0.5;
    let ring: Vec<Complex64> = (1..=8).map(|j| g(j) + g(-j)).collect();
    // Trapezoid over |u| ≥ h with half weight at the excision boundary;
    // excision indices 2, 4, 8 give h = 0.025, 0.05, 0.1.
    let excised = |jh: usize| -> Complex64 {
        let mut acc = main;
        for (j, r) in ring.iter().enumerate() {
            let idx = j + 1;
            if idx > jh {
                acc += r;
            } else if idx == jh {
                acc += r * 0.5;
            }
        }
        acc * PV_STEP
    };
    let i_fine = excised(2);
    let i_mid = excised(4);
    let i_coarse = excised(8);
    // Two Richardson levels: the excised integral misses 2h·g(0) + O(h³)
    // around the pole, so 2I(h/2) − I(h) removes the linear term and the
    // 8:1 combination removes the cubic one.
    let a1 = i_fine * 2.0 - i_mid;
    let a2 = i_mid * 2.0 - i_coarse;
    let value = (a1 * 8.0 - a2) / 7.0;
    (value, (value - a1).norm())
}

/// PV ∫_{−L}^{L} f(u)/u du by symmetric excision (half-widths 0.1, 0.05,
/// 0.025 on a step-0.0125 grid) with Richardson extrapolation in the
/// excision width.
pub fn pv_quadrature(f: impl Fn(f64) -> f64, half_width: f64) -> PvValue {
    let (v, d) = pv_quadrature_c(|u| Complex64::new(f(u), 0.0), half_width);
    PvValue {
        value: v.re,
        disagreement: d,
    }
}

// ---------------------------------------------------------------------------
// The resonance profile η
// ---------------------------------------------------------------------------

/// Two-Gaussian resonance profile: η̂ = α·g₁ + β·g₂ with the cancellation
/// pair η̂(1) = 0, Hη̂(1) = 1. η itself is analytic (Gaussian envelope with
/// two complex carriers); Hη̂ is tabulated with a moment-expansion tail.
#[derive(Debug, Clone)]
pub struct EtaProfile {
    pub alpha: f64,
    pub beta: f64,
    pub centers: [f64; 2],
    pub width: f64,
    /// |η̂(1)| of the returned profile.
    pub residual_hat: f64,
    /// |Hη̂(1) − 1| of the returned profile.
    pub residual_hilbert: f64,
    /// Worst Richardson disagreement seen while building the Hilbert table.
    pub pv_disagreement: f64,
    hilbert_table: Vec<f64>,
    moments: [f64; 3],
}

fn gaussian(x: f64, center: f64, width: f64) -> f64 {
    let z = (x - center) / width;
    (-z * z).exp()
}

impl EtaProfile {
    /// η̂(ξ).
    pub fn hat(&self, xi: f64) -> f64 {
        self.alpha * gaussian(xi, self.centers[0], self.width)
            + self.beta * gaussian(xi, self.centers[1], self.width)
    }

    /// Hη̂(ξ) = PV ∫ η̂(y)/(ξ−y) dy: cubic interpolation of the build-time
    /// table, moment tail m₀/ξ + m₁/ξ² + m₂/ξ³ beyond its extent.
    pub fn hat_hilbert(&self, xi: f64) -> f64 {
        let extent = ETA_HILBERT_EXTENT - 2.0 * ETA_HILBERT_STEP;
        if xi.abs() >= extent {
            let [m0, m1, m2] = self.moments;
            return m0 / xi + m1 / (xi * xi) + m2 / (xi * xi * xi);
        }
        // The table is not symmetric; index from the left edge.
        let a = (xi + ETA_HILBERT_EXTENT) / ETA_HILBERT_STEP;
        let i = a.floor() as i64;
        let u = a - i as f64;
        let get = |j: i64| self.hilbert_table.get(j.max(0) as usize).copied().unwrap_or(0.0);
        let (f_m1, f0, f1, f2) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        f_m1 * (-u * (u - 1.0) * (u - 2.0) / 6.0)
            + f0 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0)
            + f1 * (-(u + 1.0) * u * (u - 2.0) / 2.0)
            + f2 * ((u + 1.0) * u * (u - 1.0) / 6.0)
    }

    /// η(t) = ∫ η̂(ξ) e^{iξt} dξ, analytic for the Gaussian model:
    /// each Gaussian contributes √π·w·e^{ict}e^{−w²t²/4}.
    pub fn eta_time(&self, t: f64) -> Complex64 {
        let w = self.width;
        let envelope = std::f64::consts::PI.sqrt() * w * (-w * w * t * t / 4.0).exp();
        let carrier = |c: f64| Complex64::from_polar(1.0, c * t);
        (carrier(self.centers[0]) * self.alpha + carrier(self.centers[1]) * self.beta) * envelope
    }

    /// η′(t), analytic: each Gaussian contributes the factor (ic − w²t/2).
    pub fn eta_time_derivative(&self, t: f64) -> Complex64 {
        let w = self.width;
        let envelope = std::f64::consts::PI.sqrt() * w * (-w * w * t * t / 4.0).exp();
        let term = |c: f64, coef: f64| {
            Complex64::from_polar(coef, c * t) * Complex64::new(-w * w * t / 2.0, c)
        };
        (term(self.centers[0], self.alpha) + term(self.centers[1], self.beta)) * envelope
    }
}

/// Hilbert transform of a single build Gaussian at x, by principal-value
/// quadrature when the pole meets the support and by direct quadrature of
/// g(v)/(x−v) otherwise.
fn hilbert_gaussian(x: f64, center: f64, width: f64) -> PvValue {
    let support = center.abs() + 6.0 * width;
    if x.abs() > support + 4.0 {
        // Pole far from the support: plain trapezoid over the support.
        let lo = center - 6.0 * width;
        let hi = center + 6.0 * width;
        let n = ((hi - lo) / PV_STEP).ceil() as usize;
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for j in 0..=n {
            let v = lo + j as f64 * h;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * gaussian(v, center, width) / (x - v);
        }
        PvValue {
            value: acc * h,
            disagreement: 0.0,
        }
    } else {
        pv_quadrature(|u| gaussian(x - u, center, width), x.abs() + support + 2.0)
    }
}

/// Build the two-Gaussian η̂ by solving the 2×2 system for the cancellation
/// pair η̂(1) = 0, Hη̂(1) = 1, then tabulate Hη̂.
pub fn build_eta() -> Result<EtaProfile> {
    let [c1, c2] = ETA_CENTERS;
    let w = ETA_WIDTH;
    if (c1 - c2).abs() < 1e-9 {
        return Err(Error::invalid(
            "degenerate resonance profile: Gaussian centers must be distinct",
        ));
    }
    let g1 = gaussian(1.0, c1, w);
    let g2 = gaussian(1.0, c2, w);
    let h1 = hilbert_gaussian(1.0, c1, w);
    let h2 = hilbert_gaussian(1.0, c2, w);
    // [g1 g2; Hg1 Hg2]·[α β]ᵗ = [0 1]ᵗ.
    let det = g1 * h2.value - g2 * h1.value;
    if det.abs() < 1e-12 {
        return Err(Error::numeric(
            "resonance profile system is singular",
            format!("det = {det:.3e}"),
        ));
    }
    let alpha = -g2 / det;
    let beta = g1 / det;

    let mut pv_disagreement = h1.disagreement.max(h2.disagreement);
    let n = (2.0 * ETA_HILBERT_EXTENT / ETA_HILBERT_STEP).round() as usize;
    let mut hilbert_table = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let x = -ETA_HILBERT_EXTENT + j as f64 * ETA_HILBERT_STEP;
        let a = hilbert_gaussian(x, c1, w);
        let b = hilbert_gaussian(x, c2, w);
        pv_disagreement = pv_disagreement.max(a.disagreement).max(b.disagreement);
        hilbert_table.push(alpha * a.value + beta * b.value);
    }

    let sqrt_pi_w = std::f64::consts::PI.sqrt() * w;
    let m = |c: f64, n: u32| match n {
        0 => sqrt_pi_w,
        1 => c * sqrt_pi_w,
        _ => (c * c + w * w / 2.0) * sqrt_pi_w,
    };
    let moments = [
        alpha * m(c1, 0) + beta * m(c2, 0),
        alpha * m(c1, 1) + beta * m(c2, 1),
        alpha * m(c1, 2) + beta * m(c2, 2),
    ];

    let profile = EtaProfile {
        alpha,
        beta,
        centers: ETA_CENTERS,
        width: w,
        residual_hat: (alpha * g1 + beta * g2).abs(),
        residual_hilbert: (alpha * h1.value + beta * h2.value - 1.0).abs(),
        pv_disagreement,
        hilbert_table,
        moments,
    };
    Ok(profile)
}

static ETA: OnceLock<EtaProfile> = OnceLock::new();

/// The shared resonance profile (built once; the fixed centers are distinct,
/// so construction cannot fail).
pub fn eta_profile() -> &'static EtaProfile {
    ETA.get_or_init(|| build_eta().expect("fixed two-Gaussian profile is solvable"))
}

// ---------------------------------------------------------------------------
// The Duhamel operator and its smooth truncation
// ---------------------------------------------------------------------------

/// IF on every grid point, by cumulative trapezoid in the pre-twisted
/// variable e^{ik²t}F̂(k, t) from t = 0 outwards in both directions.
pub fn duhamel_field(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let i0 = f.index_of(0.0)?;
    let n_t = f.n_t();
    let n_max = f.n_max();
    let dt = f.dt();
    let mut data = vec![vec![Complex64::new(0.0, 0.0); n_t]; 2 * n_max + 1];
    for k in -(n_max as i64)..=(n_max as i64) {
        let ksq = (k * k) as f64;
        let g: Vec<Complex64> = (0..n_t)
            .map(|i| f.slice(i).mode(k) * Complex64::from_polar(1.0, ksq * f.time(i)))
            .collect();
        let row = &mut data[(k + n_max as i64) as usize];
        for i in (i0 + 1)..n_t {
            row[i] = row[i - 1] + (g[i - 1] + g[i]) * (dt / 2.0);
        }
        for i in (0..i0).rev() {
            row[i] = row[i + 1] - (g[i] + g[i + 1]) * (dt / 2.0);
        }
        // Euler–Maclaurin endpoint correction: removes the O(dt²) trapezoid
        // error −(dt²/12)(g′(t) − g′(0)), with g′ from second-order
        // differences of the pre-twisted trace.
        if n_t >= 3 {
            let gd = |i: usize| -> Complex64 {
                if i == 0 {
                    (g[0] * -3.0 + g[1] * 4.0 - g[2]) / (2.0 * dt)
                } else if i == n_t - 1 {
                    (g[i] * 3.0 - g[i - 1] * 4.0 + g[i - 2]) / (2.0 * dt)
                } else {
                    (g[i + 1] - g[i - 1]) / (2.0 * dt)
                }
            };
            let gd0 = gd(i0);
            for (i, c) in row.iter_mut().enumerate() {
                if i != i0 {
                    *c -= (gd(i) - gd0) * (dt * dt / 12.0);
                }
            }
        }
        for (i, c) in row.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, -ksq * f.time(i));
        }
    }
    let slices = (0..n_t)
        .map(|i| {
            SpectralField::from_fn(n_max, |k| data[(k + n_max as i64) as usize][i])
        })
        .collect();
    SpaceTimeField::new(f.t_start(), f.dt(), slices)
}

/// IF(t) = ∫₀ᵗ e^{−i(t−s)k²} F̂(s, k) ds per mode, t on the grid of F.
pub fn duhamel_apply(f: &SpaceTimeField, t: f64) -> Result<SpectralField> {
    let i = f.index_of(t)?;
    let field = duhamel_field(f)?;
    Ok(field.slice(i).clone())
}

fn require_truncation_coverage(f: &SpaceTimeField) -> Result<()> {
    if f.t_start() > -2.0 + 1e-9 || f.t_end() < 2.0 - 1e-9 {
        return Err(Error::invalid(format!(
            "time grid [{}, {}] must cover the cutoff support [-2, 2]",
            f.t_start(),
            f.t_end()
        )));
    }
    Ok(())
}

/// 𝓘F(t) = φ(t) · I(φ(s)F)(t); the grid must cover [−2, 2].
pub fn truncated_duhamel(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    require_truncation_coverage(f)?;
    let phi = CutoffProfile::standard();
    let inner = f.map_slices(|t, s| s.scale(Complex64::new(phi.eval(t), 0.0)));
    let integrated = duhamel_field(&inner)?;
    Ok(integrated.map_slices(|t, s| s.scale(Complex64::new(phi.eval(t), 0.0))))
}

// ---------------------------------------------------------------------------
// E^Y and E^X in the time domain
// ---------------------------------------------------------------------------

/// 𝓘 of a cubic interaction sum, evaluated per resonance group so that
/// groups oscillating faster than the grid (|Δ|·dt beyond the resolution
/// limit) are integrated by parts instead of by the trapezoid rule:
/// ∫₀ᵗ e^{iΔs}·(slow) ds → (amp(t) − amp(0)) / (iΔ),
/// which is the correct O(1/Δ) value for modulation-limited data where the
/// plain cumulative trapezoid would return a spurious O(dt·amp).
pub fn truncated_duhamel_cubic(
    kind: CubicKind,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
) -> Result<SpaceTimeField> {
    require_shared_grid(v1, v2, v3)?;
    require_truncation_coverage(v1)?;
    if m.arity() != 3 {
        return Err(Error::invalid("the trilinear terms need an arity-3 multiplier"));
    }
    let star = match kind {
        CubicKind::Full => None,
        CubicKind::Class(c) => Some(c),
    };
    let phi = CutoffProfile::standard();
    let i0 = v1.index_of(0.0)?;
    let n_t = v1.n_t();
    let n_max = v1.n_max();
    let dt = v1.dt();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n_t]; 2 * n_max + 1];
    for k in -(n_max as i64)..=(n_max as i64) {
        let row = &mut out[(k + n_max as i64) as usize];
        for (delta, amp) in delta_groups(star, k, v1, v2, v3, m, true) {
            if (delta as f64 * dt).abs() > RESOLVED_DELTA_DT {
                let factor = Complex64::new(0.0, -1.0) / (delta as f64);
                let amp0 = amp[i0];
                for (i, slot) in row.iter_mut().enumerate() {
                    if i != i0 {
                        *slot += (amp[i] - amp0) * factor;
                    }
                }
                continue;
            }
            // Resolved group: cumulative trapezoid with the Euler–Maclaurin
            // endpoint correction, as in the assembled-forcing integrator.
            let mut cum = vec![Complex64::new(0.0, 0.0); n_t];
            for i in (i0 + 1)..n_t {
                cum[i] = cum[i - 1] + (amp[i - 1] + amp[i]) * (dt / 2.0);
            }
            for i in (0..i0).rev() {
                cum[i] = cum[i + 1] - (amp[i] + amp[i + 1]) * (dt / 2.0);
            }
            if n_t >= 3 {
                let ad = |i: usize| -> Complex64 {
                    if i == 0 {
                        (amp[0] * -3.0 + amp[1] * 4.0 - amp[2]) / (2.0 * dt)
                    } else if i == n_t - 1 {
                        (amp[i] * 3.0 - amp[i - 1] * 4.0 + amp[i - 2]) / (2.0 * dt)
                    } else {
                        (amp[i + 1] - amp[i - 1]) / (2.0 * dt)
                    }
                };
                let ad0 = ad(i0);
                for (i, c) in cum.iter_mut().enumerate() {
                    if i != i0 {
                        *c -= (ad(i) - ad0) * (dt * dt / 12.0);
                    }
                }
            }
            for (slot, c) in row.iter_mut().zip(cum) {
                *slot += c;
            }
        }
        let ksq = (k * k) as f64;
        for (i, c) in row.iter_mut().enumerate() {
            let t = v1.time(i);
            *c *= Complex64::from_polar(phi.eval(t), -ksq * t);
        }
    }
    SpaceTimeField::new(
        v1.t_start(),
        dt,
        (0..n_t)
            .map(|i| SpectralField::from_fn(n_max, |k| out[(k + n_max as i64) as usize][i]))
            .collect(),
    )
}

fn require_yx_class(star: TripleClass) -> Result<()> {
    match star {
        TripleClass::N | TripleClass::L => Ok(()),
        other => Err(Error::invalid(format!(
            "the Y/X splitting is defined for the N and L classes only, got {}",
            other.label()
        ))),
    }
}

fn require_shared_grid(v1: &SpaceTimeField, v2: &SpaceTimeField, v3: &SpaceTimeField) -> Result<()> {
    if !v1.compatible_grid(v2) || !v1.compatible_grid(v3) {
        return Err(Error::invalid("inputs must share the time grid"));
    }
    if v2.n_max() != v1.n_max() || v3.n_max() != v1.n_max() {
        return Err(Error::invalid("inputs must share the frequency truncation"));
    }
    Ok(())
}

/// Per-Δ interaction amplitudes for one output mode: A_Δ(s) is the sum over
/// class triples with that Δ of k₁M₃·conj(v̂₁)v̂₂v̂₃(s), pre-twisted by
/// e^{ik²s} so the oscillatory Duhamel factor separates from the Δ kernel.
fn delta_groups(
    star: Option<TripleClass>,
    k: i64,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
    cutoff_inner: bool,
) -> BTreeMap<i64, Vec<Complex64>> {
    let phi = CutoffProfile::standard();
    let n_t = v1.n_t();
    let radius = v1.n_max() as i64;
    let ksq = (k * k) as f64;
    let mut groups: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (k1, k2, k3) in v3_triples(k, radius) {
        let class = classify_triple(k, k1, k2, k3).expect("enumerated triple");
        if star.is_some_and(|s| class != s) {
            continue;
        }
        let delta = resonance_delta(k, k1, k2, k3) as i64;
        let coeff = Complex64::new(k1 as f64, 0.0) * m.eval(k, &[k1, k2, k3]);
        if coeff.norm_sqr() == 0.0 {
            continue;
        }
        let entry = groups
            .entry(delta)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n_t]);
        for (i, slot) in entry.iter_mut().enumerate() {
            let t = v1.time(i);
            let prod = v1.slice(i).mode(k1).conj()
                * v2.slice(i).mode(k2)
                * v3.slice(i).mode(k3);
            if prod.norm_sqr() == 0.0 {
                continue;
            }
            let inner = if cutoff_inner { phi.eval(t) } else { 1.0 };
            *slot += coeff * prod * (inner * Complex64::from_polar(1.0, ksq * t));
        }
    }
    groups.retain(|_, a| a.iter().any(|c| c.norm_sqr() > 0.0));
    groups
}

/// The resonance-weighted trilinear term: per output mode k,
/// Σ_{class triples} k₁M₃ ∫₀ᵗ e^{−i(t−s)k²} η(Δ(t−s)) conj(v̂₁)v̂₂v̂₃ ds,
/// wrapped as φ(t)·E^Y(φ(s)v₁, v₂, v₃) when `truncated` is set.
pub fn ey_apply(
    star: TripleClass,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
    truncated: bool,
) -> Result<SpaceTimeField> {
    require_yx_class(star)?;
    require_shared_grid(v1, v2, v3)?;
    if m.arity() != 3 {
        return Err(Error::invalid("the trilinear terms need an arity-3 multiplier"));
    }
    if truncated {
        require_truncation_coverage(v1)?;
    }
    let eta = eta_profile();
    let phi = CutoffProfile::standard();
    let i0 = v1.index_of(0.0)?;
    let n_t = v1.n_t();
    let n_max = v1.n_max();
    let dt = v1.dt();

    // η(Δ·d·dt) and η′(Δ·d·dt) per lag index d, shared across output modes.
    type LagTables = (Vec<Complex64>, Vec<Complex64>);
    let mut eta_kernels: HashMap<i64, LagTables> = HashMap::new();

    let mut out = vec![vec![Complex64::new(0.0, 0.0); n_t]; 2 * n_max + 1];
    for k in -(n_max as i64)..=(n_max as i64) {
        let groups = delta_groups(Some(star), k, v1, v2, v3, m, truncated);
        let row = &mut out[(k + n_max as i64) as usize];
        for (delta, amp) in groups {
            if (delta as f64 * dt).abs() > RESOLVED_DELTA_DT {
                // Under-resolved group: the grid can only represent
                // modulation-limited data, whose group amplitude is
                // e^{iΔs}·(slow); then ∫₀ᵗ η(Δ(t−s)) amp(s) ds tends to
                // amp(t)·(πη̂(1) − iHη̂(1))/Δ = −i·amp(t)/Δ by the defining
                // normalization of η, for either sign of Δ.
                let factor = Complex64::new(0.0, -1.0) / (delta as f64);
                for (i, slot) in row.iter_mut().enumerate() {
                    if i != i0 {
                        *slot += amp[i] * factor;
                    }
                }
                continue;
            }
            let (ker, kerp) = eta_kernels.entry(delta).or_insert_with(|| {
                (0..n_t)
                    .map(|d| {
                        let x = delta as f64 * d as f64 * dt;
                        if x.abs() > ETA_TIME_DECAY {
                            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
                        } else {
                            (eta.eta_time(x), eta.eta_time_derivative(x))
                        }
                    })
                    .unzip()
            });
            // s-derivative of the amplitude by second-order differences, for
            // the trapezoid endpoint correction below.
            let ampd: Vec<Complex64> = if n_t < 3 {
                vec![Complex64::new(0.0, 0.0); n_t]
            } else {
                (0..n_t)
                    .map(|j| {
                        if j == 0 {
                            (amp[0] * -3.0 + amp[1] * 4.0 - amp[2]) / (2.0 * dt)
                        } else if j == n_t - 1 {
                            (amp[j] * 3.0 - amp[j - 1] * 4.0 + amp[j - 2]) / (2.0 * dt)
                        } else {
                            (amp[j + 1] - amp[j - 1]) / (2.0 * dt)
                        }
                    })
                    .collect()
            };
            // Integrand in s at fixed t_i: f(s) = η(Δ(t_i−s))·amp(s); the
            // real-coefficient profile gives η(−x) = conj(η(x)) and hence
            // η′(−x) = −conj(η′(x)).
            let eta_at = |i: usize, j: usize| {
                let kv = ker[i.abs_diff(j)];
                if i >= j {
                    kv
                } else {
                    kv.conj()
                }
            };
            let f_prime = |i: usize, j: usize| {
                let kp = kerp[i.abs_diff(j)];
                let kp = if i >= j { kp } else { -kp.conj() };
                kp * (-(delta as f64)) * amp[j] + eta_at(i, j) * ampd[j]
            };
            for (i, slot) in row.iter_mut().enumerate() {
                if i == i0 {
                    continue;
                }
                let (lo, hi, sign) = if i >= i0 { (i0, i, 1.0) } else { (i, i0, -1.0) };
                let mut acc = Complex64::new(0.0, 0.0);
                for j in lo..=hi {
                    let kv = eta_at(i, j);
                    if kv.norm_sqr() == 0.0 {
                        continue;
                    }
                    let w = if j == lo || j == hi { 0.5 } else { 1.0 };
                    acc += kv * amp[j] * w;
                }
                // Euler–Maclaurin endpoint correction removes the O(dt²)
                // trapezoid error, whose constant grows with the carrier
                // frequency of η(Δ·).
                let correction = (f_prime(i, hi) - f_prime(i, lo)) * (-dt * dt / 12.0);
                *slot += (acc * dt + correction) * sign;
            }
        }
        let ksq = (k * k) as f64;
        for (i, c) in row.iter_mut().enumerate() {
            let t = v1.time(i);
            let outer = if truncated { phi.eval(t) } else { 1.0 };
            *c *= Complex64::from_polar(outer, -ksq * t);
        }
    }
    SpaceTimeField::new(
        v1.t_start(),
        dt,
        (0..n_t)
            .map(|i| SpectralField::from_fn(n_max, |k| out[(k + n_max as i64) as usize][i]))
            .collect(),
    )
}

/// Which realization of the complement term to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExSplit {
    /// φ(t)·E^X(φ(s)v₁, v₂, v₃) in the time domain, as 𝓘C_* − 𝓔^Y.
    Whole,
    /// The "small" kernel piece X⁰ on the modulation side.
    X0,
    /// The remainder kernel piece X⁺ on the modulation side.
    XPlus,
}

/// The complement term E^X = I∘C_* − E^Y (truncated wrapping throughout).
/// `Whole` is exact by construction in the time domain; `X0`/`XPlus` are
/// evaluated through the modulation-side kernels and carry their twisted
/// representation (the attached time slices are the untwisted reconstruction).
pub fn ex_apply(
    star: TripleClass,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
    split: ExSplit,
) -> Result<SpaceTimeField> {
    require_yx_class(star)?;
    require_shared_grid(v1, v2, v3)?;
    require_truncation_coverage(v1)?;
    match split {
        ExSplit::Whole => {
            let whole = truncated_duhamel_cubic(CubicKind::Class(star), v1, v2, v3, m)?;
            let ey = ey_apply(star, v1, v2, v3, m, true)?;
            Ok(whole.sub(&ey))
        }
        ExSplit::X0 => apply_by_kernels(star, v1, v2, v3, m, KernelPart::X0),
        ExSplit::XPlus => apply_by_kernels(star, v1, v2, v3, m, KernelPart::XPlus),
    }
}

// ---------------------------------------------------------------------------
// Modulation-side kernels
// ---------------------------------------------------------------------------

/// One evaluation of the kernel family at (Δ, λ, σ): the full truncated
/// Duhamel kernel K, the resonance-weighted kernel Y, the complement
/// X = K − Y, and its split X = X⁰ + X⁺ (both identities exact by
/// construction).
#[derive(Debug, Clone, Copy)]
pub struct KernelSplit {
    pub k: Complex64,
    pub y: Complex64,
    pub x: Complex64,
    pub x0: Complex64,
    pub x_plus: Complex64,
    pub pv_disagreement: f64,
}

/// Building-block μ integrals for one (Δ, λ, σ): computed in a single pass
/// over a common μ grid so the kernel identities hold exactly.
struct KernelIntegrals {
    /// PV ∫ φ̂(λ−μ) φ̂(μ−σ) / μ dμ.
    pv: f64,
    /// ∫ φ̂(λ−μ) φ̂(μ−σ) · Hη̂(μ/Δ)/Δ dμ.
    heta: f64,
    /// ∫ φ̂(λ−μ) · η̂(μ/Δ)/|Δ| · Hφ̂(μ−σ) dμ.
    eta: f64,
    disagreement: f64,
}

fn kernel_integrals(delta: Option<f64>, lambda: f64, sigma: f64, step: f64) -> KernelIntegrals {
    let eta = eta_profile();
    // Window where φ̂(λ−μ)·(second factor) is non-negligible.
    let lo = ((lambda - MU_WINDOW) / step).floor() as i64;
    let hi = ((lambda + MU_WINDOW) / step).ceil() as i64;
    // Second φ̂ factor restricts the pv/heta terms further.
    let lo2 = lo.max(((sigma - MU_WINDOW) / step).floor() as i64);
    let hi2 = hi.min(((sigma + MU_WINDOW) / step).ceil() as i64);

    let jh: [i64; 3] = [
        (PV_EXCISIONS[2] / step).round() as i64,
        (PV_EXCISIONS[1] / step).round() as i64,
        (PV_EXCISIONS[0] / step).round() as i64,
    ];
    let max_ring = jh[2];
    let pole_inside = lo2 < -max_ring && hi2 > max_ring;

    let mut pv_main = 0.0;
    let mut ring = vec![0.0; (max_ring + 1) as usize];
    let mut pv_plain = 0.0;
    let mut heta = 0.0;
    for j in lo2..=hi2 {
        let mu = j as f64 * step;
        let both = phi_hat(lambda - mu) * phi_hat(mu - sigma);
        if let Some(d) = delta {
            heta += both * eta.hat_hilbert(mu / d) / d;
        }
        if j == 0 {
            continue;
        }
        let g = both / mu;
        if pole_inside {
            if j.abs() <= max_ring {
                ring[j.unsigned_abs() as usize] += g;
            } else {
                pv_main += g;
            }
        } else {
            pv_plain += g;
        }
    }
    let (pv, disagreement) = if pole_inside {
        let excised = |h_idx: i64| -> f64 {
            let mut acc = pv_main;
            for (idx, r) in ring.iter().enumerate().skip(1) {
                let idx = idx as i64;
                if idx > h_idx {
                    acc += r;
                } else if idx == h_idx {
                    acc += r * 0.5;
                }
            }
            acc * step
        };
        let i_fine = excised(jh[0]);
        let i_mid = excised(jh[1]);
        let i_coarse = excised(jh[2]);
        let a1 = 2.0 * i_fine - i_mid;
        let a2 = 2.0 * i_mid - i_coarse;
        let value = (8.0 * a1 - a2) / 7.0;
        (value, (value - a1).abs())
    } else {
        (pv_plain * step, 0.0)
    };

    let mut eta_term = 0.0;
    if let Some(d) = delta {
        // η̂(μ/Δ) lives on μ ∈ Δ·[−support, support].
        let s_lo = (-ETA_HAT_SUPPORT * d.abs() / step).floor() as i64;
        let s_hi = (ETA_HAT_SUPPORT * d.abs() / step).ceil() as i64;
        for j in lo.max(s_lo)..=hi.min(s_hi) {
            let mu = j as f64 * step;
            eta_term += phi_hat(lambda - mu) * eta.hat(mu / d) / d.abs()
                * hilbert_phi_hat(mu - sigma);
        }
        eta_term *= step;
    }

    KernelIntegrals {
        pv,
        heta: heta * step,
        eta: eta_term,
        disagreement,
    }
}

const KERNEL_PV_TOL: f64 = 1e-4;

fn kernel_k_with_step(lambda: f64, sigma: f64, step: f64) -> Result<Complex64> {
    let ints = kernel_integrals(None, lambda, sigma, step);
    if ints.disagreement > KERNEL_PV_TOL {
        return Err(Error::numeric(
            "principal-value quadrature did not converge",
            format!(
                "lambda {lambda}, sigma {sigma}, Richardson disagreement {:.3e}",
                ints.disagreement
            ),
        ));
    }
    let t3 = phi_hat(lambda) * hilbert_phi_hat(sigma);
    Ok(Complex64::new(0.0, 1.0) * (t3 - ints.pv))
}

/// The kernel of the truncated Duhamel operator on the modulation side:
/// X(𝓘F)(k, λ) = ∫ K(λ, σ) F̃(k, σ) dσ with
/// K(λ, σ) = i·[φ̂(λ)Hφ̂(σ) − PV∫ φ̂(λ−μ)φ̂(μ−σ)/μ dμ].
pub fn kernel_k(lambda: f64, sigma: f64) -> Result<Complex64> {
    kernel_k_with_step(lambda, sigma, PV_STEP)
}

/// [`kernel_k`] at a caller-chosen μ step, for refinement studies.
#[doc(hidden)]
pub fn kernel_k_fine(lambda: f64, sigma: f64, step: f64) -> Complex64 {
    kernel_k_with_step(lambda, sigma, step).expect("refinement evaluation")
}

/// The kernel family at resonance parameter Δ: K, the resonance-weighted
/// part Y, and the complement split X = X⁰ + X⁺ per the indicator regions
/// ⟨σ⟩ ≥ ⟨Δ⟩ (for the weighted principal-value summand) and
/// ⟨λ−σ⟩ ≥ ⟨σ−Δ⟩ (for the rank-one summand); the mixed η̂·Hφ̂ summand
/// goes entirely to X⁺.
pub fn kernel_split(delta: f64, lambda: f64, sigma: f64) -> Result<KernelSplit> {
    if delta == 0.0 {
        return Err(Error::invalid("the Y/X kernels need a nonzero resonance parameter"));
    }
    let ints = kernel_integrals(Some(delta), lambda, sigma, PV_STEP);
    if ints.disagreement > KERNEL_PV_TOL {
        return Err(Error::numeric(
            "principal-value quadrature did not converge",
            format!(
                "delta {delta}, lambda {lambda}, sigma {sigma}, disagreement {:.3e}",
                ints.disagreement
            ),
        ));
    }
    let i = Complex64::new(0.0, 1.0);
    let t3 = i * phi_hat(lambda) * hilbert_phi_hat(sigma);
    let k = t3 - i * ints.pv;
    let y = -i * (ints.heta + ints.eta);
    let x = k - y;
    let t1 = -i * (ints.pv - ints.heta);
    let ind_sigma = bracket(sigma) >= bracket(delta);
    let ind_rank_one = bracket(lambda - sigma) >= bracket(sigma - delta);
    let mut x0 = Complex64::new(0.0, 0.0);
    if ind_sigma {
        x0 += t1;
    }
    if ind_rank_one {
        x0 += t3;
    }
    Ok(KernelSplit {
        k,
        y,
        x,
        x0,
        x_plus: x - x0,
        pv_disagreement: ints.disagreement,
    })
}

/// Which kernel component an operator application should return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPart {
    Full,
    Y,
    X0,
    XPlus,
}

/// Apply one kernel component to a σ-profile: out(λ) = ∫ Kpart(λ, σ) p̂(σ) dσ,
/// evaluated in separable form (σ-convolutions first, then the λ-side
/// convolution with φ̂ and the principal-value factor).
pub fn kernel_apply(
    delta: Option<f64>,
    sigma: &LambdaGrid,
    p_hat: &[Complex64],
    lambda: &LambdaGrid,
    part: KernelPart,
) -> Result<Vec<Complex64>> {
    if p_hat.len() != sigma.len() {
        return Err(Error::invalid("σ grid / profile length mismatch"));
    }
    if delta.is_none() && part != KernelPart::Full {
        return Err(Error::invalid(
            "the Y/X kernel components need a resonance parameter",
        ));
    }
    if delta == Some(0.0) {
        return Err(Error::invalid("the Y/X kernels need a nonzero resonance parameter"));
    }
    let eta = eta_profile();
    // Finer μ step than the pointwise kernels: operator outputs are compared
    // as differences of same-size terms, which halves the error budget.
    let step = PV_STEP / 2.0;
    let wsig = sigma.step;
    let i = Complex64::new(0.0, 1.0);

    // μ grid: everything the λ-side φ̂ window can reach.
    let mu_lo = ((lambda.min - MU_WINDOW) / step).floor() as i64;
    let mu_hi = ((lambda.max + MU_WINDOW) / step).ceil() as i64;
    let n_mu = (mu_hi - mu_lo + 1) as usize;

    // σ-side convolutions on the μ grid.
    let mut conv_phi = vec![Complex64::new(0.0, 0.0); n_mu]; // φ̂ ∗ p̂
    let mut conv_phi_res = vec![Complex64::new(0.0, 0.0); n_mu]; // with ⟨σ⟩ ≥ ⟨Δ⟩
    let mut conv_h = vec![Complex64::new(0.0, 0.0); n_mu]; // Hφ̂ ∗ p̂
    let bracket_delta = delta.map(bracket).unwrap_or(0.0);
    let sigma_vals: Vec<f64> = sigma.values().collect();
    for (jm, slot) in conv_phi.iter_mut().enumerate() {
        let mu = (mu_lo + jm as i64) as f64 * step;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut acc_res = Complex64::new(0.0, 0.0);
        let mut acc_h = Complex64::new(0.0, 0.0);
        for (js, &sv) in sigma_vals.iter().enumerate() {
            let p = p_hat[js];
            if p.norm_sqr() == 0.0 {
                continue;
            }
            acc_h += p * hilbert_phi_hat(mu - sv);
            if (mu - sv).abs() <= MU_WINDOW {
                let w = p * phi_hat(mu - sv);
                acc += w;
                if bracket(sv) >= bracket_delta {
                    acc_res += w;
                }
            }
        }
        *slot = acc * wsig;
        conv_phi_res[jm] = acc_res * wsig;
        conv_h[jm] = acc_h * wsig;
    }
    let scale: f64 = conv_phi.iter().map(|c| c.norm()).fold(0.0, f64::max);

    // Rank-one σ sums for the φ̂(λ)·Hφ̂(σ) summand.
    let s_h_full: Complex64 = sigma_vals
        .iter()
        .zip(p_hat.iter())
        .map(|(&sv, &p)| p * hilbert_phi_hat(sv))
        .sum::<Complex64>()
        * wsig;

    let jh: [i64; 3] = [
        (PV_EXCISIONS[2] / step).round() as i64,
        (PV_EXCISIONS[1] / step).round() as i64,
        (PV_EXCISIONS[0] / step).round() as i64,
    ];
    let max_ring = jh[2];

    let mut out = Vec::with_capacity(lambda.len());
    let mut worst = 0.0f64;
    for lv in lambda.values() {
        let w_lo = mu_lo.max(((lv - MU_WINDOW) / step).floor() as i64);
        let w_hi = mu_hi.min(((lv + MU_WINDOW) / step).ceil() as i64);
        let pole_inside = w_lo < -max_ring && w_hi > max_ring;

        let mut pv_main = Complex64::new(0.0, 0.0);
        let mut pv_main_res = Complex64::new(0.0, 0.0);
        let mut ring = vec![Complex64::new(0.0, 0.0); (max_ring + 1) as usize];
        let mut ring_res = vec![Complex64::new(0.0, 0.0); (max_ring + 1) as usize];
        let mut heta = Complex64::new(0.0, 0.0);
        let mut heta_res = Complex64::new(0.0, 0.0);
        let mut eta_term = Complex64::new(0.0, 0.0);
        for j in w_lo..=w_hi {
            let mu = j as f64 * step;
            let ph = phi_hat(lv - mu);
            if ph == 0.0 {
                continue;
            }
            let idx = (j - mu_lo) as usize;
            let g = conv_phi[idx];
            let g_res = conv_phi_res[idx];
            if let Some(d) = delta {
                let hfac = eta.hat_hilbert(mu / d) / d;
                heta += g * (ph * hfac);
                heta_res += g_res * (ph * hfac);
                let efac = eta.hat(mu / d) / d.abs();
                if efac != 0.0 {
                    eta_term += conv_h[idx] * (ph * efac);
                }
            }
            if j != 0 {
                let gv = g * (ph / mu);
                let gv_res = g_res * (ph / mu);
                if pole_inside && j.abs() <= max_ring {
                    ring[j.unsigned_abs() as usize] += gv;
                    ring_res[j.unsigned_abs() as usize] += gv_res;
                } else {
                    pv_main += gv;
                    pv_main_res += gv_res;
                }
            }
        }
        let pv_pair = |main: Complex64, ring: &[Complex64]| -> (Complex64, f64) {
            if !pole_inside {
                return (main * step, 0.0);
            }
            let excised = |h_idx: i64| -> Complex64 {
                let mut acc = main;
                for (idx, r) in ring.iter().enumerate().skip(1) {
                    let idx = idx as i64;
                    if idx > h_idx {
                        acc += r;
                    } else if idx == h_idx {
                        acc += r * 0.5;
                    }
                }
                acc * step
            };
            let a1 = excised(jh[0]) * 2.0 - excised(jh[1]);
            let a2 = excised(jh[1]) * 2.0 - excised(jh[2]);
            let value = (a1 * 8.0 - a2) / 7.0;
            (value, (value - a1).norm())
        };
        let (pv, dis) = pv_pair(pv_main, &ring);
        let (pv_res, dis_res) = pv_pair(pv_main_res, &ring_res);
        worst = worst.max(dis).max(dis_res);

        let phl = phi_hat(lv);
        let t3_full = i * phl * s_h_full;
        let full = t3_full - i * pv;
        let value = match part {
            KernelPart::Full => full,
            KernelPart::Y => -i * (heta * step + eta_term * step),
            KernelPart::X0 | KernelPart::XPlus => {
                let y = -i * (heta * step + eta_term * step);
                let x = full - y;
                let d = delta.expect("checked above");
                let t3_res: Complex64 = sigma_vals
                    .iter()
                    .zip(p_hat.iter())
                    .filter(|&(&sv, _)| bracket(lv - sv) >= bracket(sv - d))
                    .map(|(&sv, &p)| p * hilbert_phi_hat(sv))
                    .sum::<Complex64>()
                    * wsig;
                let x0 = -i * (pv_res - heta_res * step) + i * phl * t3_res;
                if part == KernelPart::X0 {
                    x0
                } else {
                    x - x0
                }
            }
        };
        out.push(value);
    }
    if worst > KERNEL_PV_TOL * (1.0 + scale) {
        return Err(Error::numeric(
            "principal-value quadrature did not converge in kernel application",
            format!("worst Richardson disagreement {worst:.3e}, profile scale {scale:.3e}"),
        ));
    }
    Ok(out)
}

/// Twisted transform of a scalar time series at output mode k:
/// p̂(σ) = (dt/2π) Σ_j w_j e^{−iσt_j} e^{ik²t_j} P(t_j).
fn series_twist(
    series: &[Complex64],
    t_start: f64,
    dt: f64,
    ksq: f64,
    grid: &LambdaGrid,
) -> Result<Vec<Complex64>> {
    let lam_abs = grid.min.abs().max(grid.max.abs());
    if lam_abs * dt > std::f64::consts::PI {
        return Err(Error::invalid(format!(
            "σ grid extent {lam_abs} is not resolved by time step {dt}"
        )));
    }
    let n_t = series.len();
    let norm = dt / std::f64::consts::TAU;
    let weighted: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let t = t_start + j as f64 * dt;
            let w = if j == 0 || j == n_t - 1 { 0.5 } else { 1.0 };
            c * Complex64::from_polar(w * norm, ksq * t)
        })
        .collect();
    Ok(grid
        .values()
        .map(|sv| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &c) in weighted.iter().enumerate() {
                let t = t_start + j as f64 * dt;
                acc += c * Complex64::from_polar(1.0, -sv * t);
            }
            acc
        })
        .collect())
}

/// Frequency-side evaluation of 𝓔^Y or the 𝓔^X pieces: per output mode and
/// per Δ group, twist the interaction amplitude and apply the kernel
/// component, accumulating on a shared λ grid; the returned field carries
/// the twisted representation and untwisted time slices.
fn apply_by_kernels(
    star: TripleClass,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
    part: KernelPart,
) -> Result<SpaceTimeField> {
    // The raw interaction amplitudes must be compactly supported inside the
    // grid for the twisted transforms to make sense.
    let sup = v1.sup_mode().max(v2.sup_mode()).max(v3.sup_mode());
    for f in [v1, v2, v3] {
        let edge = f.slice(0).sup_mode().max(f.slice(f.n_t() - 1).sup_mode());
        if edge > 1e-8 * sup {
            return Err(Error::State(
                "kernel-side evaluation needs inputs vanishing at the time-grid boundary".into(),
            ));
        }
    }
    let n_max = v1.n_max();
    let radius = n_max as i64;

    // Collect Δ groups for all modes first to size the shared grids.
    let mut per_mode: Vec<(i64, BTreeMap<i64, Vec<Complex64>>)> = Vec::new();
    let mut delta_min = 0i64;
    let mut delta_max = 0i64;
    for k in -radius..=radius {
        let groups = delta_groups_untwisted(star, k, v1, v2, v3, m);
        for &d in groups.keys() {
            delta_min = delta_min.min(d);
            delta_max = delta_max.max(d);
        }
        per_mode.push((k, groups));
    }
    let pad = 48.0;
    let lambda = LambdaGrid::new(
        (delta_min as f64).min(0.0) - pad - 16.0,
        (delta_max as f64).max(0.0) + pad + 16.0,
        0.25,
    )?;

    let n_l = lambda.len();
    let mut data = vec![vec![Complex64::new(0.0, 0.0); n_l]; 2 * n_max + 1];
    let mut quad_tol = 0.0f64;
    for (k, groups) in per_mode {
        let ksq = (k * k) as f64;
        let row = &mut data[(k + radius) as usize];
        for (delta, amp) in groups {
            let sigma = LambdaGrid::new(delta as f64 - pad, delta as f64 + pad, 0.25)?;
            let p_hat = series_twist(&amp, v1.t_start(), v1.dt(), ksq, &sigma)?;
            let applied = kernel_apply(Some(delta as f64), &sigma, &p_hat, &lambda, part)?;
            for (slot, v) in row.iter_mut().zip(applied) {
                *slot += v;
            }
            quad_tol = quad_tol.max(1e-6);
        }
    }
    let tw = TwistedField {
        n_max,
        grid: lambda,
        data,
        quad_tol,
    };
    let field = SpaceTimeField::untwist(&tw, v1.t_start(), v1.dt(), v1.n_t())?;
    Ok(field.with_twisted(tw))
}

/// Like [`delta_groups`] but without the inner cutoff and pre-twist; the
/// kernel representation absorbs both cutoffs, so the σ profile is the
/// twisted transform of the raw product (pre-twist applied in
/// [`series_twist`]).
fn delta_groups_untwisted(
    star: TripleClass,
    k: i64,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
) -> BTreeMap<i64, Vec<Complex64>> {
    let n_t = v1.n_t();
    let radius = v1.n_max() as i64;
    let mut groups: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (k1, k2, k3) in v3_triples(k, radius) {
        if classify_triple(k, k1, k2, k3).expect("enumerated triple") != star {
            continue;
        }
        let delta = resonance_delta(k, k1, k2, k3) as i64;
        let coeff = Complex64::new(k1 as f64, 0.0) * m.eval(k, &[k1, k2, k3]);
        if coeff.norm_sqr() == 0.0 {
            continue;
        }
        let entry = groups
            .entry(delta)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n_t]);
        for (i, slot) in entry.iter_mut().enumerate() {
            *slot += coeff
                * v1.slice(i).mode(k1).conj()
                * v2.slice(i).mode(k2)
                * v3.slice(i).mode(k3);
        }
    }
    groups.retain(|_, a| a.iter().any(|c| c.norm_sqr() > 0.0));
    groups
}

/// Frequency-side evaluation of 𝓔^Y through the kernel representation,
/// for cross-checking the time-domain [`ey_apply`].
pub fn ey_apply_by_kernels(
    star: TripleClass,
    v1: &SpaceTimeField,
    v2: &SpaceTimeField,
    v3: &SpaceTimeField,
    m: &Multiplier,
) -> Result<SpaceTimeField> {
    require_yx_class(star)?;
    require_shared_grid(v1, v2, v3)?;
    apply_by_kernels(star, v1, v2, v3, m, KernelPart::Y)
}

/// Frequency-side evaluation of 𝓘F through the kernel K, for cross-checking
/// [`truncated_duhamel`]; F must vanish at the time-grid boundary.
pub fn truncated_duhamel_by_kernel(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let sup = f.sup_mode();
    let edge = f.slice(0).sup_mode().max(f.slice(f.n_t() - 1).sup_mode());
    if sup > 0.0 && edge > 1e-8 * sup {
        return Err(Error::State(
            "kernel-side evaluation needs inputs vanishing at the time-grid boundary".into(),
        ));
    }
    let pad = 48.0;
    let lambda = LambdaGrid::new(-pad - 16.0, pad + 16.0, 0.25)?;
    let sigma = LambdaGrid::new(-pad, pad, 0.25)?;
    let n_max = f.n_max();
    let mut data = Vec::with_capacity(2 * n_max + 1);
    let mut quad_tol = 0.0f64;
    for k in -(n_max as i64)..=(n_max as i64) {
        let ksq = (k * k) as f64;
        let series = f.mode_trace(k);
        if series.iter().all(|c| c.norm_sqr() == 0.0) {
            data.push(vec![Complex64::new(0.0, 0.0); lambda.len()]);
            continue;
        }
        let p_hat = series_twist(&series, f.t_start(), f.dt(), ksq, &sigma)?;
        data.push(kernel_apply(None, &sigma, &p_hat, &lambda, KernelPart::Full)?);
        quad_tol = quad_tol.max(1e-6);
    }
    let tw = TwistedField {
        n_max,
        grid: lambda,
        data,
        quad_tol,
    };
    let field = SpaceTimeField::untwist(&tw, f.t_start(), f.dt(), f.n_t())?;
    Ok(field.with_twisted(tw))
}

// ---------------------------------------------------------------------------
// Kernel bound fits
// ---------------------------------------------------------------------------

/// Fitted constants for the kernel decay bounds over a (λ, σ) grid at one Δ:
/// each is the maximum of |kernel| over its model envelope, with the decay
/// degree B = 4 in the superpolynomial slots.
#[derive(Debug, Clone, Copy)]
pub struct KernelBoundReport {
    pub delta: f64,
    pub c_k: f64,
    pub c_y: f64,
    pub c_x0: f64,
    pub c_xplus: f64,
}

const BOUND_DEGREE: i32 = 4;

/// Evaluate the kernel family over an equispaced (λ, σ) grid and fit the
/// bound constants.
pub fn kernel_bound_fit(delta: f64, half_extent: f64, n_side: usize) -> Result<KernelBoundReport> {
    if n_side < 2 {
        return Err(Error::invalid("bound fit needs at least a 2×2 grid"));
    }
    let mut rep = KernelBoundReport {
        delta,
        c_k: 0.0,
        c_y: 0.0,
        c_x0: 0.0,
        c_xplus: 0.0,
    };
    let coord = |i: usize| -half_extent + 2.0 * half_extent * i as f64 / (n_side - 1) as f64;
    let bd = bracket(delta);
    for il in 0..n_side {
        let lv = coord(il);
        let bl = bracket(lv);
        for is in 0..n_side {
            let sv = coord(is);
            let bs = bracket(sv);
            let bls = bracket(lv - sv);
            let split = kernel_split(delta, lv, sv)?;
            let env_k = (bl.powi(-BOUND_DEGREE) + bls.powi(-BOUND_DEGREE)) / bs;
            rep.c_k = rep.c_k.max(split.k.norm() / env_k);
            let min_dl = (1.0 / bd).min(1.0 / bl);
            let env_y = min_dl / bls;
            rep.c_y = rep.c_y.max(split.y.norm() / env_y);
            let mut env_x0 = 0.0;
            if bs >= bd {
                env_x0 += 1.0 / (bl.powi(BOUND_DEGREE) * bd);
            }
            if bls >= bracket(sv - delta) {
                env_x0 += min_dl * min_dl;
            }
            if env_x0 > 0.0 {
                rep.c_x0 = rep.c_x0.max(split.x0.norm() / env_x0);
            }
            let min_ds = (1.0 / bd).min(1.0 / bs);
            let bsd = bracket(sv - delta);
            let mut env_xp = bsd / (bls.powi(BOUND_DEGREE) * bs) * min_ds;
            if bs < bd {
                env_xp += 1.0 / (bl.powi(BOUND_DEGREE) * bs);
            }
            if bls < bsd {
                env_xp += bsd / bls * min_dl * min_dl;
            }
            rep.c_xplus = rep.c_xplus.max(split.x_plus.norm() / env_xp);
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Time-localization gain probe
// ---------------------------------------------------------------------------

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    (denom.abs() > 1e-12).then(|| (n * sxy - sx * sy) / denom)
}

/// Localization gain: the ratio ‖φ_T·u‖_{Y₀} / ‖u‖_{Y₁} over a list of
/// localization scales T, fitted to a power T^θ; returns the log-log slope
/// θ̂. Requires u(0) = 0 — otherwise no gain is possible and the input is
/// rejected.
pub fn localization_gain_probe(
    u: &SpaceTimeField,
    t_values: &[f64],
    ladder: &ParameterLadder,
    grid: LambdaGrid,
) -> Result<f64> {
    if t_values.len() < 2 {
        return Err(Error::invalid("need at least two localization scales"));
    }
    let i0 = u.index_of(0.0)?;
    let sup = u.sup_mode();
    if sup == 0.0 {
        return Err(Error::invalid("zero field has no localization exponent"));
    }
    if u.slice(i0).sup_mode() > 1e-8 * sup {
        return Err(Error::invalid(
            "localization gain requires a field vanishing at t = 0",
        ));
    }
    let y1 = xsb_norm_twisted(&u.twist(grid)?, &NormSpec::y1(ladder))?;
    if y1 == 0.0 {
        return Err(Error::invalid("input has zero reference norm"));
    }
    let mut points = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let phi_t = CutoffProfile::scaled(t)?;
        let localized = u.map_slices(|s, f| f.scale(Complex64::new(phi_t.eval(s), 0.0)));
        let y0 = xsb_norm_twisted(&localized.twist(grid)?, &NormSpec::y0(ladder))?;
        points.push((t, y0 / y1));
    }
    log_log_slope(&points)
        .ok_or_else(|| Error::numeric("localization slope fit failed", format!("{points:?}")))
}
