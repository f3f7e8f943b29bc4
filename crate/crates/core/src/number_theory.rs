//! Exact divisor counting in ℤ and in the Eisenstein integers ℤ[ω],
//! ω = e^{2πi/3}, together with solution counting for the sign-constrained
//! quadratic system
//!
//!   ±a ± b ± c = ℓ,   ∓a² ∓ b² ∓ c² = m,
//!
//! where each square carries the sign opposite to its linear term. Counting
//! proceeds by brute force with pairing exclusion; the divisor-in-ball
//! queries are validated against naive full enumerations, and the observed
//! growth of solution counts in the dyadic shell size is summarized by a
//! fitted log-log slope.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Eisenstein integers
// ---------------------------------------------------------------------------

/// An element a + bω of ℤ[ω], ω = e^{2πi/3}, stored in the basis (1, ω)
/// with ω² = −1 − ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EisensteinInt {
    pub a: i128,
    pub b: i128,
}

impl EisensteinInt {
    pub const ZERO: EisensteinInt = EisensteinInt { a: 0, b: 0 };
    pub const ONE: EisensteinInt = EisensteinInt { a: 1, b: 0 };
    /// ω itself.
    pub const OMEGA: EisensteinInt = EisensteinInt { a: 0, b: 1 };

    pub fn new(a: i128, b: i128) -> Self {
        EisensteinInt { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Algebraic norm N(a + bω) = a² − ab + b², which also equals the
    /// squared complex modulus |a + bω|².
    pub fn norm(&self) -> i128 {
        self.a * self.a - self.a * self.b + self.b * self.b
    }

    /// Complex conjugate: ω̄ = ω², so conj(a + bω) = (a − b) − bω.
    pub fn conj(&self) -> Self {
        EisensteinInt::new(self.a - self.b, -self.b)
    }

    pub fn neg(&self) -> Self {
        EisensteinInt::new(-self.a, -self.b)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        EisensteinInt::new(self.a + rhs.a, self.b + rhs.b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        EisensteinInt::new(self.a - rhs.a, self.b - rhs.b)
    }

    /// The six units of ℤ[ω]: ±1, ±ω, ±(1 + ω) — exactly the norm-1
    /// elements.
    pub fn units() -> [EisensteinInt; 6] {
        [
            EisensteinInt::new(1, 0),
            EisensteinInt::new(-1, 0),
            EisensteinInt::new(0, 1),
            EisensteinInt::new(0, -1),
            EisensteinInt::new(1, 1),
            EisensteinInt::new(-1, -1),
        ]
    }

    /// Complex modulus of the embedding a + bω ∈ ℂ.
    pub fn modulus(&self) -> f64 {
        (self.norm() as f64).sqrt()
    }
}

/// Ring product using ω² = −1 − ω:
/// (a + bω)(c + dω) = (ac − bd) + (ad + bc − bd)ω.
pub fn eis_mul(x: &EisensteinInt, y: &EisensteinInt) -> EisensteinInt {
    EisensteinInt::new(
        x.a * y.a - x.b * y.b,
        x.a * y.b + x.b * y.a - x.b * y.b,
    )
}

/// Euclidean division: returns (q, r) with x = q·y + r and N(r) < N(y).
///
/// ℤ[ω] is norm-Euclidean: writing x·conj(y)/N(y) = p/N + (q/N)ω exactly
/// and rounding both rational coordinates to nearest integers leaves a
/// remainder of norm at most (3/4)·N(y).
pub fn eis_divrem(x: &EisensteinInt, y: &EisensteinInt) -> Result<(EisensteinInt, EisensteinInt)> {
    if y.is_zero() {
        return Err(Error::invalid("division by zero in Z[omega]"));
    }
    let n = y.norm();
    let num = eis_mul(x, &y.conj());
    let q = EisensteinInt::new(round_div(num.a, n), round_div(num.b, n));
    let r = x.sub(&eis_mul(&q, y));
    debug_assert!(r.norm() < n, "Euclidean property violated");
    Ok((q, r))
}

/// Nearest-integer division of p by positive n (ties toward +∞).
fn round_div(p: i128, n: i128) -> i128 {
    debug_assert!(n > 0);
    (2 * p + n).div_euclid(2 * n)
}

/// Exact divisibility test in ℤ[ω].
pub fn eis_divides(d: &EisensteinInt, k: &EisensteinInt) -> bool {
    if d.is_zero() {
        return k.is_zero();
    }
    eis_divrem(k, d).map(|(_, r)| r.is_zero()).unwrap_or(false)
}

// ---------------------------------------------------------------------------
// Divisors in a ball
// ---------------------------------------------------------------------------

/// All integer divisors r of k (both signs) with |r − q| ≤ ρ, by trial
/// division up to √|k|.
pub fn divisors_in_ball_z(k: i128, q: i128, rho: f64) -> Result<Vec<i128>> {
    if k == 0 {
        return Err(Error::invalid("divisor counting requires k != 0"));
    }
    let ka = k.unsigned_abs() as i128;
    let mut out = Vec::new();
    let mut d = 1i128;
    while d * d <= ka {
        if ka % d == 0 {
            for r in [d, -d, ka / d, -(ka / d)] {
                if ((r - q) as f64).abs() <= rho && !out.contains(&r) {
                    out.push(r);
                }
            }
        }
        d += 1;
    }
    out.sort_unstable();
    Ok(out)
}

/// Naive oracle: test every nonzero r with |r| ≤ |k|.
pub fn divisors_in_ball_z_naive(k: i128, q: i128, rho: f64) -> Result<Vec<i128>> {
    if k == 0 {
        return Err(Error::invalid("divisor counting requires k != 0"));
    }
    let ka = k.unsigned_abs() as i128;
    let mut out = Vec::new();
    for r in -ka..=ka {
        if r != 0 && ka % r.abs() == 0 && ((r - q) as f64).abs() <= rho {
            out.push(r);
        }
    }
    Ok(out)
}

/// All divisors r ∈ ℤ[ω] of k (unit multiples included) with complex
/// distance |r − q| ≤ ρ: enumerate the lattice ball N(r) ≤ N(k) and keep
/// the exact divisors inside the query ball.
pub fn divisors_in_ball_eis(
    k: &EisensteinInt,
    q: &EisensteinInt,
    rho: f64,
) -> Result<Vec<EisensteinInt>> {
    if k.is_zero() {
        return Err(Error::invalid("divisor counting requires k != 0"));
    }
    let nk = k.norm();
    // |r| ≤ √N(k); in coordinates |b|·(√3/2) ≤ |r| and |a − b/2| ≤ |r|.
    let bound = (nk as f64).sqrt().ceil() as i128 + 1;
    let mut out = Vec::new();
    for b in -2 * bound..=2 * bound {
        for a in -2 * bound..=2 * bound {
            let r = EisensteinInt::new(a, b);
            if r.is_zero() || r.norm() > nk {
                continue;
            }
            let dist2 = r.sub(q).norm() as f64;
            if dist2.sqrt() <= rho && eis_divides(&r, k) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// Naive oracle for the Eisenstein case: identical ball enumeration with
/// divisibility checked through a full multiplication table scan.
pub fn divisors_in_ball_eis_naive(
    k: &EisensteinInt,
    q: &EisensteinInt,
    rho: f64,
) -> Result<Vec<EisensteinInt>> {
    if k.is_zero() {
        return Err(Error::invalid("divisor counting requires k != 0"));
    }
    let nk = k.norm();
    let bound = (nk as f64).sqrt().ceil() as i128 + 1;
    let mut out = Vec::new();
    for b in -2 * bound..=2 * bound {
        for a in -2 * bound..=2 * bound {
            let r = EisensteinInt::new(a, b);
            if r.is_zero() || r.norm() > nk {
                continue;
            }
            if (r.sub(q).norm() as f64).sqrt() > rho {
                continue;
            }
            // r divides k iff some cofactor s with N(s)·N(r) = N(k)
            // satisfies r·s = k; scan the cofactor ball.
            if nk % r.norm() != 0 {
                continue;
            }
            let ns = nk / r.norm();
            let sb = (ns as f64).sqrt().ceil() as i128 + 1;
            let mut hit = false;
            'scan: for d in -2 * sb..=2 * sb {
                for c in -2 * sb..=2 * sb {
                    let s = EisensteinInt::new(c, d);
                    if eis_mul(&r, &s) == *k {
                        hit = true;
                        break 'scan;
                    }
                }
            }
            if hit {
                out.push(r);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The sign-constrained quadratic system
// ---------------------------------------------------------------------------

/// The system  s₁a + s₂b + s₃c = ℓ,  −s₁a² − s₂b² − s₃c² = m  with
/// s_j ∈ {±1} (each square carries the sign opposite to its linear term),
/// counted over dyadic shells N_j ≤ |x| < 2N_j.
#[derive(Debug, Clone, Copy)]
pub struct SystemSpec {
    pub signs: [i8; 3],
    /// Linear constant ℓ.
    pub lin: i128,
    /// Quadratic constant m.
    pub quad: i128,
    /// Dyadic shell floors (N₁, N₂, N₃).
    pub shells: [i64; 3],
}

impl SystemSpec {
    pub fn new(signs: [i8; 3], lin: i128, quad: i128, shells: [i64; 3]) -> Result<Self> {
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        if shells.iter().any(|&n| n < 1) {
            return Err(Error::invalid("shell floors must be >= 1"));
        }
        Ok(SystemSpec { signs, lin, quad, shells })
    }

    fn in_shell(x: i64, n: i64) -> bool {
        let ax = x.abs();
        ax >= n && ax < 2 * n
    }
}

/// Exact brute-force count of no-pairing solutions of the system, plus the
/// witness list. A pairing is a pair of equal values whose linear terms
/// carry opposite signs; such solutions are excluded per the counting
/// lemma's hypothesis.
pub fn count_system_solutions(spec: &SystemSpec) -> (u64, Vec<(i64, i64, i64)>) {
    let [s1, s2, s3] = spec.signs.map(|s| s as i128);
    let [n1, n2, n3] = spec.shells;
    let mut witnesses = Vec::new();
    let shell_iter = |n: i64| (n..2 * n).flat_map(|v| [v, -v]);
    for a in shell_iter(n1) {
        for b in shell_iter(n2) {
            // The linear equation determines c.
            let c128 = s3 * (spec.lin - s1 * a as i128 - s2 * b as i128);
            let c = match i64::try_from(c128) {
                Ok(c) => c,
                Err(_) => continue,
            };
            if !SystemSpec::in_shell(c, n3) {
                continue;
            }
            let quad = -s1 * (a as i128).pow(2) - s2 * (b as i128).pow(2)
                - s3 * (c as i128).pow(2);
            if quad != spec.quad {
                continue;
            }
            // Pairing exclusion: equal values with opposite linear signs.
            let vals = [a, b, c];
            let signs = [s1, s2, s3];
            let paired = (0..3).any(|i| {
                ((i + 1)..3).any(|j| vals[i] == vals[j] && signs[i] == -signs[j])
            });
            if !paired {
                witnesses.push((a, b, c));
            }
        }
    }
    (witnesses.len() as u64, witnesses)
}

/// Least-squares slope of log(count) vs log(N) over at least four scales;
/// zero counts are clamped to one (an empty shell cannot witness growth).
pub fn growth_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "growth fit needs at least 4 scales, got {}",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, c)| (n.ln(), c.max(1.0).ln()))
        .collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::invalid("growth fit scales are degenerate"));
    }
    Ok((m * sxy - sx * sy) / denom)
}

// ---------------------------------------------------------------------------
// The three factorization identities behind the counting argument
// ---------------------------------------------------------------------------

/// For b + c − a = ℓ: returns (2(ℓ−b)(ℓ−c), ℓ² − (b² + c² − a²)), which
/// agree identically.
pub fn identity_mixed_first(l: i128, a: i128, b: i128, c: i128) -> (i128, i128) {
    (2 * (l - b) * (l - c), l * l - (b * b + c * c - a * a))
}

/// For a + b − c = ℓ: returns (2(b−c)(ℓ−b), ℓ² − (a² + b² − c²)), which
/// agree identically.
pub fn identity_mixed_last(l: i128, a: i128, b: i128, c: i128) -> (i128, i128) {
    (2 * (b - c) * (l - b), l * l - (a * a + b * b - c * c))
}

/// For a + b + c = ℓ, with u = 3a − ℓ and v = 3b − ℓ: returns
/// (2(u² + uv + v²), 9(a² + b² + c²) − 3ℓ²), which agree identically —
/// note the factor 2, and that u² + uv + v² = (u − ωv)(u − ω²v) factors
/// in ℤ[ω].
pub fn identity_all_plus(l: i128, a: i128, b: i128, c: i128) -> (i128, i128) {
    let u = 3 * a - l;
    let v = 3 * b - l;
    (
        2 * (u * u + u * v + v * v),
        9 * (a * a + b * b + c * c) - 3 * l * l,
    )
}
