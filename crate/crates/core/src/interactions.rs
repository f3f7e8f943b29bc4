//! Frequency-interaction combinatorics for the gauged cubic and quintic
//! nonlinearities: the constraint sets 𝕍₃ and 𝕍₅, the four-way splitting
//! of cubic triples into high / low / semi-resonant / nonresonant classes,
//! the resonance factor Δ, exhaustive verification of the structural
//! inequalities each class satisfies (including chained pairs of triples),
//! and the pairing / index-selection rule for quintic tuples.
//!
//! All class thresholds (2⁻²⁰ and friends) are evaluated as exact
//! cross-multiplied integer comparisons in 128-bit arithmetic; no floating
//! point enters any classification.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{bracket, SpectralField};

/// Class of a cubic interaction triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TripleClass {
    /// High: the smallest input frequency is comparable to the output.
    H,
    /// Low: both small inputs are tiny compared to the output.
    L,
    /// Semi-resonant: k₃ tiny against k but not against k₁.
    S,
    /// Nonresonant remainder.
    N,
}

impl TripleClass {
    pub const ALL: [TripleClass; 4] = [TripleClass::H, TripleClass::L, TripleClass::S, TripleClass::N];

    pub fn label(&self) -> &'static str {
        match self {
            TripleClass::H => "H",
            TripleClass::L => "L",
            TripleClass::S => "S",
            TripleClass::N => "N",
        }
    }
}

/// Membership in 𝕍₃: k₂ + k₃ − k₁ = k and either (|k₂| ≥ |k₃| and
/// k ∉ {k₂, k₃}) or the diagonal triple (k, k, k).
pub fn in_v3(k: i64, k1: i64, k2: i64, k3: i64) -> bool {
    if k2 + k3 - k1 != k {
        return false;
    }
    (k2.abs() >= k3.abs() && k != k2 && k != k3) || (k1 == k && k2 == k && k3 == k)
}

/// Raw class conditions as exact integer comparisons:
/// H: |k₃|·2²⁰ ≥ |k|;  L: |k₂|·2²⁰ < |k|;  S: |k₁| ≤ |k₃|·2¹⁰ and |k₃|·2²⁰ < |k|.
fn class_flags(k: i64, k1: i64, k2: i64, k3: i64) -> (bool, bool, bool) {
    let (k, k1, k2, k3) = (k as i128, k1 as i128, k2 as i128, k3 as i128);
    let h = (k3.abs() << 20) >= k.abs();
    let l = (k2.abs() << 20) < k.abs();
    let s = k1.abs() <= (k3.abs() << 10) && (k3.abs() << 20) < k.abs();
    (h, l, s)
}

/// Classify a 𝕍₃ triple into exactly one of the four classes.
///
/// The three defining conditions are provably pairwise exclusive on 𝕍₃;
/// the remainder is N. Exhaustive disjointness is re-checked empirically
/// by [`verify_prop23`].
pub fn classify_triple(k: i64, k1: i64, k2: i64, k3: i64) -> Result<TripleClass> {
    if !in_v3(k, k1, k2, k3) {
        return Err(Error::invalid(format!(
            "({k1}, {k2}, {k3}) with output {k} is not a valid interaction triple"
        )));
    }
    let (h, l, s) = class_flags(k, k1, k2, k3);
    debug_assert!(
        (h as u8 + l as u8 + s as u8) <= 1,
        "class overlap at k={k} ({k1},{k2},{k3})"
    );
    Ok(if h {
        TripleClass::H
    } else if l {
        TripleClass::L
    } else if s {
        TripleClass::S
    } else {
        TripleClass::N
    })
}

/// Resonance factor Δ = k² + k₁² − k₂² − k₃²; on 𝕍₃ it factors as
/// 2(k − k₂)(k − k₃), which is asserted whenever the constraint holds.
pub fn resonance_delta(k: i64, k1: i64, k2: i64, k3: i64) -> i128 {
    let (ki, k1i, k2i, k3i) = (k as i128, k1 as i128, k2 as i128, k3 as i128);
    let delta = ki * ki + k1i * k1i - k2i * k2i - k3i * k3i;
    if k2 + k3 - k1 == k {
        debug_assert_eq!(delta, 2 * (ki - k2i) * (ki - k3i));
    }
    delta
}

/// A fully described cubic interaction triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubicTriple {
    pub k: i64,
    pub k1: i64,
    pub k2: i64,
    pub k3: i64,
    pub class: TripleClass,
    pub delta: i128,
    pub diagonal: bool,
}

impl CubicTriple {
    pub fn new(k: i64, k1: i64, k2: i64, k3: i64) -> Result<Self> {
        let class = classify_triple(k, k1, k2, k3)?;
        Ok(CubicTriple {
            k,
            k1,
            k2,
            k3,
            class,
            delta: resonance_delta(k, k1, k2, k3),
            diagonal: k1 == k && k2 == k && k3 == k,
        })
    }
}

/// Enumerate all 𝕍₃ triples with output k and all frequencies bounded by
/// `radius`, in lexicographic (k₂, k₃) order.
pub fn v3_triples(k: i64, radius: i64) -> impl Iterator<Item = (i64, i64, i64)> {
    (-radius..=radius).flat_map(move |k2| {
        (-radius..=radius).filter_map(move |k3| {
            let k1 = k2 + k3 - k;
            if k1.abs() <= radius && in_v3(k, k1, k2, k3) {
                Some((k1, k2, k3))
            } else {
                None
            }
        })
    })
}

// ---------------------------------------------------------------------------
// Multipliers
// ---------------------------------------------------------------------------

type MultiplierFn = Arc<dyn Fn(i64, &[i64]) -> Complex64 + Send + Sync>;

/// A pluggable interaction coefficient M(k, k₁, …, k_arity) with a declared
/// uniform bound. The default is the unit multiplier M ≡ 1; all shipped
/// estimates assume only |M| ≤ bound.
#[derive(Clone)]
pub struct Multiplier {
    arity: usize,
    bound: f64,
    rule: Option<MultiplierFn>,
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multiplier")
            .field("arity", &self.arity)
            .field("bound", &self.bound)
            .field("custom", &self.rule.is_some())
            .finish()
    }
}

impl Multiplier {
    /// Unit multiplier of the given arity (3 or 5).
    pub fn unit(arity: usize) -> Self {
        assert!(arity == 3 || arity == 5, "multiplier arity must be 3 or 5");
        Multiplier { arity, bound: 1.0, rule: None }
    }

    pub fn custom(
        arity: usize,
        bound: f64,
        rule: impl Fn(i64, &[i64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        assert!(arity == 3 || arity == 5, "multiplier arity must be 3 or 5");
        Multiplier { arity, bound, rule: Some(Arc::new(rule)) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_unit(&self) -> bool {
        self.rule.is_none()
    }

    pub fn eval(&self, k: i64, ks: &[i64]) -> Complex64 {
        debug_assert_eq!(ks.len(), self.arity);
        match &self.rule {
            None => Complex64::new(1.0, 0.0),
            Some(f) => {
                let v = f(k, ks);
                debug_assert!(
                    v.norm() <= self.bound * (1.0 + 1e-12),
                    "multiplier exceeded its declared bound at k={k}, ks={ks:?}"
                );
                v
            }
        }
    }
}

/// Which part of the cubic nonlinearity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicKind {
    Full,
    Class(TripleClass),
}

/// Cubic interaction sum: output mode k is
/// Σ_{𝕍₃} k₁ · M(k, k₁, k₂, k₃) · conj(v̂₁(k₁)) v̂₂(k₂) v̂₃(k₃),
/// restricted to one class or summed over all of them.
///
/// The full sum is assembled as H + L + S + N from per-class accumulators
/// filled in a single lexicographic (k₂, k₃) pass, so the four-way
/// partition identity holds bit-exactly by construction.
pub fn cubic_apply(
    kind: CubicKind,
    v1: &SpectralField,
    v2: &SpectralField,
    v3: &SpectralField,
    m: &Multiplier,
) -> Result<SpectralField> {
    if m.arity() != 3 {
        return Err(Error::invalid(format!(
            "cubic sum needs an arity-3 multiplier, got arity {}",
            m.arity()
        )));
    }
    let n = v1.n_max();
    if v2.n_max() != n || v3.n_max() != n {
        return Err(Error::invalid("all cubic inputs must share n_max"));
    }
    let radius = n as i64;
    let mut out = SpectralField::zero(n);
    for k in -radius..=radius {
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for (k1, k2, k3) in v3_triples(k, radius) {
            let class = classify_triple(k, k1, k2, k3).expect("enumerated triple is in V3");
            let term = Complex64::new(k1 as f64, 0.0)
                * m.eval(k, &[k1, k2, k3])
                * v1.mode(k1).conj()
                * v2.mode(k2)
                * v3.mode(k3);
            let idx = TripleClass::ALL.iter().position(|c| *c == class).unwrap();
            acc[idx] += term;
        }
        *out.mode_mut(k) = match kind {
            CubicKind::Full => ((acc[0] + acc[1]) + acc[2]) + acc[3],
            CubicKind::Class(c) => acc[TripleClass::ALL.iter().position(|x| *x == c).unwrap()],
        };
    }
    Ok(out)
}

/// Quintic interaction sum over k₁ − k₂ + k₃ − k₄ + k₅ = k:
/// M(k, k₁..k₅) · v̂₁(k₁) conj(v̂₂(k₂)) v̂₃(k₃) conj(v̂₄(k₄)) v̂₅(k₅),
/// by direct summation within the truncation.
pub fn quintic_apply(vs: [&SpectralField; 5], m: &Multiplier) -> Result<SpectralField> {
    if m.arity() != 5 {
        return Err(Error::invalid(format!(
            "quintic sum needs an arity-5 multiplier, got arity {}",
            m.arity()
        )));
    }
    let n = vs[0].n_max();
    if vs.iter().any(|v| v.n_max() != n) {
        return Err(Error::invalid("all quintic inputs must share n_max"));
    }
    let r = n as i64;
    if m.is_unit() {
        // With M ≡ 1 the sum is a plain 5-fold convolution: evaluate the
        // pointwise product v₁conj(v₂)v₃conj(v₄)v₅ on a grid wide enough
        // that no quintic frequency (≤ 5n) aliases back into the band.
        let grid = (6 * n + 1).next_power_of_two().max(16);
        let samples: Vec<Vec<Complex64>> = vs
            .iter()
            .map(|v| v.inverse_transform(grid))
            .collect::<Result<_>>()?;
        let prod: Vec<Complex64> = (0..grid)
            .map(|i| {
                samples[0][i]
                    * samples[1][i].conj()
                    * samples[2][i]
                    * samples[3][i].conj()
                    * samples[4][i]
            })
            .collect();
        return Ok(SpectralField::forward_transform(&prod)?.truncated(n));
    }
    let mut out = SpectralField::zero(n);
    for k in -r..=r {
        let mut acc = Complex64::new(0.0, 0.0);
        for k1 in -r..=r {
            let a1 = vs[0].mode(k1);
            if a1.norm_sqr() == 0.0 {
                continue;
            }
            for k2 in -r..=r {
                let a2 = vs[1].mode(k2).conj();
                if a2.norm_sqr() == 0.0 {
                    continue;
                }
                let a12 = a1 * a2;
                for k3 in -r..=r {
                    let a3 = vs[2].mode(k3);
                    if a3.norm_sqr() == 0.0 {
                        continue;
                    }
                    let a123 = a12 * a3;
                    for k4 in -r..=r {
                        let k5 = k - k1 + k2 - k3 + k4;
                        if k5.abs() > r {
                            continue;
                        }
                        let a45 = vs[3].mode(k4).conj() * vs[4].mode(k5);
                        if a45.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mul = if m.is_unit() {
                            Complex64::new(1.0, 0.0)
                        } else {
                            m.eval(k, &[k1, k2, k3, k4, k5])
                        };
                        acc += a123 * a45 * mul;
                    }
                }
            }
        }
        *out.mode_mut(k) = acc;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exhaustive structural verification of the class inequalities
// ---------------------------------------------------------------------------

/// Result of an exhaustive structural check over all triples with
/// frequencies bounded by K.
#[derive(Debug, Clone)]
pub struct TripleReport {
    pub radius: i64,
    pub total: u64,
    pub class_counts: [u64; 4],
    /// Triples where more than one class condition fired (must be empty).
    pub overlaps: Vec<(i64, i64, i64, i64)>,
    /// Violations of the per-class structural inequalities, with a note.
    pub violations: Vec<String>,
    /// Max of |k₁|(⟨k₁⟩⟨k₂⟩⟨k₃⟩)^{-1/2}·⟨k⟩^{1/2} over classes H ∪ S.
    pub max_ratio_hs: f64,
    /// Extremes of |Δ|/(⟨k⟩⟨k₁⟩) over classes L ∪ N.
    pub min_ratio_ln: f64,
    pub max_ratio_ln: f64,
}

/// Check every 𝕍₃ triple with |k|, |k_j| ≤ K against the structural
/// inequalities its class must satisfy:
///
/// * H: |k₂| ≥ |k₃| ≥ 2⁻²⁰|k|;
/// * L: |k|/2 ≤ |k₁| ≤ 2|k| and min(|k|,|k₁|) ≥ 2¹⁸ max(|k₂|,|k₃|);
/// * S: |k|/2 ≤ |k₂| ≤ 2|k|, |k| ≥ 2²⁰|k₃| and |k₃| ≥ 2⁻¹⁰|k₁|;
/// * N: |k₂| ≥ 2⁻²² max(|k|,|k₁|) and min(|k|,|k₁|) ≥ 2¹⁰|k₃|;
///
/// plus the exact factorization Δ = 2(k−k₂)(k−k₃), the high/semi weight
/// ratio, and the resonance-size ratio on L ∪ N.
pub fn verify_prop23(radius: i64) -> TripleReport {
    assert!(radius >= 1);
    let mut rep = TripleReport {
        radius,
        total: 0,
        class_counts: [0; 4],
        overlaps: Vec::new(),
        violations: Vec::new(),
        max_ratio_hs: 0.0,
        min_ratio_ln: f64::INFINITY,
        max_ratio_ln: 0.0,
    };
    for k in -radius..=radius {
        for (k1, k2, k3) in v3_triples(k, radius) {
            rep.total += 1;
            let (h, l, s) = class_flags(k, k1, k2, k3);
            if (h as u8 + l as u8 + s as u8) > 1 {
                rep.overlaps.push((k, k1, k2, k3));
                continue;
            }
            let class = classify_triple(k, k1, k2, k3).unwrap();
            rep.class_counts[TripleClass::ALL.iter().position(|c| *c == class).unwrap()] += 1;

            let (ki, k1i, k2i, k3i) = (k as i128, k1 as i128, k2 as i128, k3 as i128);
            let (ak, a1, a2, a3) = (ki.abs(), k1i.abs(), k2i.abs(), k3i.abs());

            // Exact factorization of the resonance factor.
            let delta = resonance_delta(k, k1, k2, k3);
            if delta != 2 * (ki - k2i) * (ki - k3i) {
                rep.violations
                    .push(format!("delta factorization failed at k={k} ({k1},{k2},{k3})"));
            }

            let ok = match class {
                TripleClass::H => a2 >= a3 && (a3 << 20) >= ak,
                TripleClass::L => {
                    ak <= 2 * a1 && a1 <= 2 * ak && a1.min(ak) >= (a2.max(a3) << 18)
                }
                TripleClass::S => {
                    ak <= 2 * a2 && a2 <= 2 * ak && ak >= (a3 << 20) && (a3 << 10) >= a1
                }
                TripleClass::N => {
                    (a2 << 22) >= ak.max(a1) && a1.min(ak) >= (a3 << 10)
                }
            };
            if !ok {
                rep.violations.push(format!(
                    "class {} structure failed at k={k} ({k1},{k2},{k3})",
                    class.label()
                ));
            }

            match class {
                TripleClass::H | TripleClass::S => {
                    let ratio = a1 as f64
                        / (bracket(k1 as f64) * bracket(k2 as f64) * bracket(k3 as f64)).sqrt()
                        * bracket(k as f64).sqrt();
                    rep.max_ratio_hs = rep.max_ratio_hs.max(ratio);
                }
                TripleClass::L | TripleClass::N => {
                    let ratio =
                        delta.unsigned_abs() as f64 / (bracket(k as f64) * bracket(k1 as f64));
                    rep.min_ratio_ln = rep.min_ratio_ln.min(ratio);
                    rep.max_ratio_ln = rep.max_ratio_ln.max(ratio);
                }
            }
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// Chained pairs of triples
// ---------------------------------------------------------------------------

/// Case labels for chained pairs of interaction triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainCase {
    C1a,
    C1bI,
    C1bII,
    C2a,
    C2bI,
    C2bII,
}

impl ChainCase {
    pub const ALL: [ChainCase; 6] = [
        ChainCase::C1a,
        ChainCase::C1bI,
        ChainCase::C1bII,
        ChainCase::C2a,
        ChainCase::C2bI,
        ChainCase::C2bII,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ChainCase::C1a => "1a",
            ChainCase::C1bI => "1b-i",
            ChainCase::C1bII => "1b-ii",
            ChainCase::C2a => "2a",
            ChainCase::C2bI => "2b-i",
            ChainCase::C2bII => "2b-ii",
        }
    }
}

/// Per-case tally of a chained-pair sweep.
#[derive(Debug, Clone, Copy, Default)]
pub struct CaseStats {
    pub count: u64,
    pub max_ratio: f64,
    pub witness: (i64, i64, i64, i64, i64, i64),
}

impl CaseStats {
    fn record(&mut self, ratio: f64, witness: (i64, i64, i64, i64, i64, i64)) {
        self.count += 1;
        if ratio > self.max_ratio {
            self.max_ratio = ratio;
            self.witness = witness;
        }
    }
}

/// Report of the chained-pair verification.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub radius: i64,
    pub stats: [CaseStats; 6],
    /// Joint bound for second-generation resonances:
    /// max of β·⟨k⟩·min(⟨k₃+k₄⟩, ⟨k₃−k₄⟩) over both-low/nonresonant chains.
    pub case3: CaseStats,
    /// max of ⟨k₅⟩/⟨k⟩ over the same chains.
    pub case3_k5_ratio: f64,
    pub violations: Vec<String>,
}

/// Second triples (k₃, k₄, k₅) with k₄ + k₅ − k₃ = k′ whose class relative
/// to output k′ is L or N, all frequencies bounded by `radius`.
fn second_triples_ln(kp: i64, radius: i64) -> Vec<(i64, i64, i64, TripleClass)> {
    v3_triples(kp, radius)
        .filter_map(|(k3, k4, k5)| {
            let class = classify_triple(kp, k3, k4, k5).unwrap();
            matches!(class, TripleClass::L | TripleClass::N).then_some((k3, k4, k5, class))
        })
        .collect()
}

/// Exhaustively verify the structural claims for chained pairs
///
///   k₂ + k′ − k₁ = k with (k₁, k₂, k′) classed against k, and
///   k₄ + k₅ − k₃ = k′ with (k₃, k₄, k₅) classed against k′,
///
/// where the second class is L or N. With Δ = k² + k₁² − k′² − k₂²,
/// Δ′ = k′² + k₃² − k₄² − k₅², α = |k₁||k₃|/⟨Δ⟩, β = α/⟨Δ′⟩ and
/// γ = |k₁||k₃|/⟨Δ′⟩:
///
/// * first class H or S: case (1b) iff the class is H and |k₁| ≥ 2⁴⁰|k′|,
///   else (1a). The dichotomy bounds γ only up to the 2⁴⁰ threshold, so the
///   raw γ grows with the radius until the split engages; what is recorded
///   is the scale-free certificate γ·⟨k′⟩/⟨k₁⟩ ≲ 1 implied by the
///   resonance factorization |Δ′| ~ ⟨k′⟩⟨k₃⟩. (1b) splits on |k₃| vs
///   2³⁰|k′| with near-pairing structure checked exactly;
/// * both classes in {L, N}: case (2b) iff the second class is N and
///   |k₃| ≥ 2⁴⁰|k|, else (2a) with the analogous scale-free form
///   α·⟨k⟩/⟨k₃⟩ recorded; (2b) splits on |k₁| vs 2³⁰|k|;
/// * additionally, for both-in-{L,N} chains, the joint bound
///   β·⟨k⟩·⟨±k₃±k₄⟩ ≲ 1 and ⟨k⟩ ≳ ⟨k₅⟩ are recorded as max ratios.
pub fn verify_prop24(radius: i64) -> ChainReport {
    assert!(radius >= 1);
    let mut rep = ChainReport {
        radius,
        stats: [CaseStats::default(); 6],
        case3: CaseStats::default(),
        case3_k5_ratio: 0.0,
        violations: Vec::new(),
    };

    // Precompute the (rare) L/N second triples per intermediate frequency.
    let seconds: Vec<Vec<(i64, i64, i64, TripleClass)>> = (-radius..=radius)
        .map(|kp| second_triples_ln(kp, radius))
        .collect();
    let idx_of = |kp: i64| (kp + radius) as usize;

    for k in -radius..=radius {
        for (k1, k2, kp) in v3_triples(k, radius) {
            let first = classify_triple(k, k1, k2, kp).unwrap();
            let list = &seconds[idx_of(kp)];
            if list.is_empty() {
                continue;
            }
            let delta = resonance_delta(k, k1, kp, k2);
            let bd = bracket(delta as f64);
            for &(k3, k4, k5, second) in list {
                let deltap = resonance_delta(kp, k3, k4, k5);
                let bdp = bracket(deltap as f64);
                let prod13 = (k1.abs() as f64) * (k3.abs() as f64);
                let alpha = prod13 / bd;
                let beta = prod13 / (bd * bdp);
                let gamma = prod13 / bdp;
                let witness = (k, k1, k2, kp, k3, k4);
                let (a1, a2, a3u, a4, a5, ak) = (
                    k1.unsigned_abs() as i128,
                    k2.unsigned_abs() as i128,
                    k3.unsigned_abs() as i128,
                    k4.unsigned_abs() as i128,
                    k5.unsigned_abs() as i128,
                    k.unsigned_abs() as i128,
                );
                let akp = kp.unsigned_abs() as i128;

                match first {
                    TripleClass::H | TripleClass::S => {
                        let case_1b = first == TripleClass::H && a1 >= (akp << 40);
                        if !case_1b {
                            let scale_free = gamma * bracket(kp as f64) / bracket(k1 as f64);
                            rep.stats[0].record(scale_free, witness);
                        } else {
                            let sub_i = second == TripleClass::L
                                || (second == TripleClass::N && a3u <= (akp << 30));
                            // Structural claims common to both subcases.
                            if !(a1 <= 2 * a2 && a2 <= 2 * a1) {
                                rep.violations.push(format!(
                                    "near-pairing |k1|~|k2| failed in case 1b at {witness:?}"
                                ));
                            }
                            if sub_i {
                                if a1 < (a3u.max(a4).max(a5) << 5) {
                                    rep.violations.push(format!(
                                        "dominance |k1| >= 2^5 max(k3..k5) failed at {witness:?}"
                                    ));
                                }
                                if k1 == k2 {
                                    rep.violations
                                        .push(format!("k1 = k2 in case 1b-i at {witness:?}"));
                                }
                                let top = a3u.max(a4).max(a5);
                                let ok_max = match second {
                                    TripleClass::L => top == a3u,
                                    _ => top == a3u || top == a4,
                                };
                                if !ok_max {
                                    rep.violations.push(format!(
                                        "max position among k3..k5 wrong in case 1b-i at {witness:?}"
                                    ));
                                }
                                let denom = bracket(k3 as f64)
                                    .max(bracket(k4 as f64))
                                    .max(bracket(k5 as f64))
                                    .max(bracket(k as f64));
                                rep.stats[1].record(gamma * denom / bracket(k1 as f64), witness);
                            } else {
                                if !(a3u <= 2 * a4 && a4 <= 2 * a3u) {
                                    rep.violations.push(format!(
                                        "near-pairing |k3|~|k4| failed in case 1b-ii at {witness:?}"
                                    ));
                                }
                                if a1 < (ak.max(a5) << 5) {
                                    rep.violations.push(format!(
                                        "dominance |k1| >= 2^5 max(|k|,|k5|) failed at {witness:?}"
                                    ));
                                }
                                let pm12 = bracket((k1 + k2) as f64).min(bracket((k1 - k2) as f64));
                                let denom = bracket(k as f64).max(bracket(k5 as f64)).max(pm12);
                                rep.stats[2].record(alpha * denom / bracket(k1 as f64), witness);
                            }
                        }
                    }
                    TripleClass::L | TripleClass::N => {
                        let case_2b = second == TripleClass::N && a3u >= (ak << 40);
                        if !case_2b {
                            let scale_free = alpha * bracket(k as f64) / bracket(k3 as f64);
                            rep.stats[3].record(scale_free, witness);
                        } else {
                            let sub_i = first == TripleClass::L
                                || (first == TripleClass::N && a1 <= (ak << 30));
                            if !(a3u <= 2 * a4 && a4 <= 2 * a3u) {
                                rep.violations.push(format!(
                                    "near-pairing |k3|~|k4| failed in case 2b at {witness:?}"
                                ));
                            }
                            if sub_i {
                                if a3u < (a1.max(a2).max(a5) << 5) {
                                    rep.violations.push(format!(
                                        "dominance |k3| >= 2^5 max(k1,k2,k5) failed at {witness:?}"
                                    ));
                                }
                                if k3 == k4 {
                                    rep.violations
                                        .push(format!("k3 = k4 in case 2b-i at {witness:?}"));
                                }
                                let top = a1.max(a2).max(a5);
                                let ok_max = match first {
                                    TripleClass::L => top == a1,
                                    _ => top == a1 || top == a2,
                                };
                                if !ok_max {
                                    rep.violations.push(format!(
                                        "max position among k1,k2,k5 wrong in case 2b-i at {witness:?}"
                                    ));
                                }
                                let denom = bracket(k1 as f64)
                                    .max(bracket(k2 as f64))
                                    .max(bracket(k5 as f64))
                                    .max(bracket(k as f64));
                                rep.stats[4].record(gamma * denom / bracket(k3 as f64), witness);
                            } else {
                                if !(a1 <= 2 * a2 && a2 <= 2 * a1) {
                                    rep.violations.push(format!(
                                        "near-pairing |k1|~|k2| failed in case 2b-ii at {witness:?}"
                                    ));
                                }
                                if a3u < (ak.max(a5) << 5) {
                                    rep.violations.push(format!(
                                        "dominance |k3| >= 2^5 max(|k|,|k5|) failed at {witness:?}"
                                    ));
                                }
                                if ak == a5 {
                                    rep.violations
                                        .push(format!("|k| = |k5| in case 2b-ii at {witness:?}"));
                                }
                                let denom = bracket(k as f64).max(bracket(k5 as f64));
                                rep.stats[5].record(alpha * denom / bracket(k3 as f64), witness);
                            }
                        }
                        // Joint second-generation bound for both-in-{L,N} chains.
                        let pm34 = bracket((k3 + k4) as f64).min(bracket((k3 - k4) as f64));
                        rep.case3.record(beta * bracket(k as f64) * pm34, witness);
                        rep.case3_k5_ratio = rep
                            .case3_k5_ratio
                            .max(bracket(k5 as f64) / bracket(k as f64));
                    }
                }
            }
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// Quintic tuples: pairing detection and index selection
// ---------------------------------------------------------------------------

/// Signs of the five frequencies in the constraint k₁ − k₂ + k₃ − k₄ + k₅ = k.
const QUINTIC_SIGNS: [i64; 5] = [1, -1, 1, -1, 1];

/// A quintic interaction tuple with its pairings and the selected index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuinticTuple {
    pub k: i64,
    pub ks: [i64; 5],
    /// All pairs (i, j), 1-based, i < j, with k_i = k_j and opposite signs.
    pub pairings: Vec<(usize, usize)>,
    /// The selected index, 1-based.
    pub chosen: usize,
}

impl QuinticTuple {
    pub fn new(k: i64, ks: [i64; 5]) -> Result<Self> {
        let sum: i64 = ks.iter().zip(QUINTIC_SIGNS).map(|(&kj, s)| s * kj).sum();
        if sum != k {
            return Err(Error::invalid(format!(
                "tuple {ks:?} does not satisfy the alternating-sum constraint for k={k}"
            )));
        }
        let (pairings, chosen) = pairing_and_index(&ks);
        Ok(QuinticTuple { k, ks, pairings, chosen })
    }

    /// Witnessed lower-bound constant: |k_chosen| / |k| (None when k = 0).
    pub fn dominance_ratio(&self) -> Option<f64> {
        (self.k != 0).then(|| self.ks[self.chosen - 1].abs() as f64 / self.k.abs() as f64)
    }
}

fn argmax_abs(ks: &[i64; 5], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &i in &candidates[1..] {
        if ks[i - 1].abs() > ks[best - 1].abs() {
            best = i;
        }
    }
    best
}

/// Pairing detection and index selection for a quintic tuple.
///
/// A pairing (i, j) is recorded when k_i = k_j and the two positions carry
/// opposite signs in the alternating sum. Selection: with no pairing, pick
/// the index of maximal |k_i|; with one pairing, pick the maximal |k_i|
/// among the remaining three unless those contain a pairing themselves, in
/// which case pick the single leftover index. Ties break to the smallest
/// index; pairings are scanned in lexicographic order.
pub fn pairing_and_index(ks: &[i64; 5]) -> (Vec<(usize, usize)>, usize) {
    let mut pairings = Vec::new();
    for i in 1..=5usize {
        for j in (i + 1)..=5 {
            if ks[i - 1] == ks[j - 1] && QUINTIC_SIGNS[i - 1] != QUINTIC_SIGNS[j - 1] {
                pairings.push((i, j));
            }
        }
    }
    let chosen = if pairings.is_empty() {
        argmax_abs(ks, &[1, 2, 3, 4, 5])
    } else {
        let (a, b) = pairings[0];
        let rest: Vec<usize> = (1..=5).filter(|&i| i != a && i != b).collect();
        let inner: Option<(usize, usize)> = {
            let mut found = None;
            'outer: for (x, &i) in rest.iter().enumerate() {
                for &j in &rest[x + 1..] {
                    if ks[i - 1] == ks[j - 1] && QUINTIC_SIGNS[i - 1] != QUINTIC_SIGNS[j - 1] {
                        found = Some((i, j));
                        break 'outer;
                    }
                }
            }
            found
        };
        match inner {
            None => argmax_abs(ks, &rest),
            Some((i, j)) => *rest.iter().find(|&&x| x != i && x != j).unwrap(),
        }
    };
    (pairings, chosen)
}
