//! Right-lateral sequences, discrete convolution and step distribution
//! functions.
//!
//! A right-lateral sequence vanishes below a left extremity `offset` and is
//! stored as the finite coefficient window starting there. Sequences with
//! infinite support (Poisson weights and the like) enter truncated; the
//! constructor records the dropped tail mass so downstream consumers can
//! flag results built from lossy inputs.


use crate::error::DeconvError;
use crate::scalar::Scalar;
use crate::Result;

/// Magnitudes below this are trimmed by [`RightLateralSeq::normalize`].
pub const TRIM_TOL: f64 = 1e-15;
/// Tail mass above this marks a sequence as lossily truncated.
pub const TAIL_FLAG_TOL: f64 = 1e-12;
/// Largest target index accepted by the composition enumeration oracle.
pub const COMPOSITION_CAP: i64 = 20;

/// A complex-valued sequence supported on `{offset, offset+1, …}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RightLateralSeq<T> {
    offset: i64,
    coeffs: Vec<T>,
    tail_mass: f64,
}

impl<T: Scalar> RightLateralSeq<T> {
    /// Sequence with the given left extremity and coefficient window.
    pub fn new(offset: i64, coeffs: Vec<T>) -> Self {
        RightLateralSeq {
            offset,
            coeffs,
            tail_mass: 0.0,
        }
    }

    /// As [`Self::new`], recording the mass dropped by truncation.
    pub fn with_tail_mass(offset: i64, coeffs: Vec<T>, tail_mass: f64) -> Self {
        RightLateralSeq {
            offset,
            coeffs,
            tail_mass,
        }
    }

    /// The Dirac sequence `δ₀`, neutral element of discrete convolution.
    pub fn dirac() -> Self {
        RightLateralSeq::new(0, vec![T::one()])
    }

    /// Sequence with no explicit coefficients (the zero sequence).
    pub fn empty() -> Self {
        RightLateralSeq::new(0, Vec::new())
    }

    /// Index of the first possibly-nonzero term.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when no coefficients are stored.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stored coefficient window.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Mass dropped when the sequence was truncated.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// True when the recorded truncation loss is above [`TAIL_FLAG_TOL`].
    pub fn tail_flagged(&self) -> bool {
        self.tail_mass > TAIL_FLAG_TOL
    }

    /// Value at index `z`; zero outside the stored window.
    pub fn value_at(&self, z: i64) -> T {
        let k = z - self.offset;
        if k < 0 || k as usize >= self.coeffs.len() {
            T::zero()
        } else {
            self.coeffs[k as usize].clone()
        }
    }

    /// Largest index with a stored coefficient, if any.
    pub fn last_index(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.offset + self.coeffs.len() as i64 - 1)
        }
    }

    /// Trims trailing coefficients with magnitude below [`TRIM_TOL`].
    pub fn normalize(mut self) -> Self {
        while let Some(c) = self.coeffs.last() {
            if c.modulus() < TRIM_TOL {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        self
    }

    /// Drops all coefficients at indices above `zmax`.
    pub fn truncated(mut self, zmax: i64) -> Self {
        if self.offset > zmax {
            self.coeffs.clear();
            return self;
        }
        let keep = (zmax - self.offset + 1) as usize;
        self.coeffs.truncate(keep);
        self
    }

    /// Sum of coefficient magnitudes.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(Scalar::modulus).sum()
    }

    /// Largest coefficient magnitude.
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(Scalar::modulus).fold(0.0, f64::max)
    }

    /// Partial sums `Σ_{z ≤ offset+k}`, indexed by the coefficient window.
    pub fn prefix_sums(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.coeffs
            .iter()
            .map(|c| {
                acc += c.clone();
                acc.clone()
            })
            .collect()
    }

    /// Elementwise sum; offsets may differ.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let lo = self.offset.min(other.offset);
        let hi = self.last_index().unwrap().max(other.last_index().unwrap());
        let mut coeffs = vec![T::zero(); (hi - lo + 1) as usize];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let z = lo + k as i64;
            *c = self.value_at(z) + other.value_at(z);
        }
        RightLateralSeq::with_tail_mass(lo, coeffs, self.tail_mass + other.tail_mass)
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.clone() * factor.clone())
            .collect();
        RightLateralSeq::with_tail_mass(
            self.offset,
            coeffs,
            self.tail_mass * factor.modulus(),
        )
    }
}

/// Discrete convolution `(a ∗ b)(ℓ) = Σ_z a(ℓ−z) b(z)`.
///
/// The result starts at `a.offset + b.offset` with `len(a)+len(b)−1`
/// coefficients; empty input yields empty output.
pub fn conv<T: Scalar>(a: &RightLateralSeq<T>, b: &RightLateralSeq<T>) -> RightLateralSeq<T> {
    if a.is_empty() || b.is_empty() {
        return RightLateralSeq::empty();
    }
    let mut coeffs = vec![T::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.coeffs.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coeffs.iter().enumerate() {
            coeffs[i + j] += ai.clone() * bj.clone();
        }
    }
    let tail = a.tail_mass * (b.l1_norm() + b.tail_mass) + b.tail_mass * a.l1_norm();
    RightLateralSeq::with_tail_mass(a.offset + b.offset, coeffs, tail)
}

/// `j`-th convolution power of `u`, truncated to indices `≤ zmax`.
///
/// `j = 0` yields the Dirac sequence.
pub fn conv_power<T: Scalar>(u: &RightLateralSeq<T>, j: u32, zmax: i64) -> RightLateralSeq<T> {
    if j == 0 {
        return RightLateralSeq::dirac().truncated(zmax);
    }
    // Intermediate truncation is only sound once no negative offsets can
    // feed mass back below zmax.
    let stepwise_truncate = u.offset >= 0;
    let mut acc = u.clone();
    if stepwise_truncate {
        acc = acc.truncated(zmax);
    }
    for _ in 1..j {
        acc = conv(&acc, u);
        if stepwise_truncate {
            acc = acc.truncated(zmax);
        }
    }
    acc.truncated(zmax)
}

/// Number of compositions of `l` into `j` positive parts.
pub fn composition_count(j: u32, l: i64) -> Result<u64> {
    if l > COMPOSITION_CAP {
        return Err(DeconvError::EnumerationCap {
            requested: l,
            cap: COMPOSITION_CAP,
        });
    }
    if j == 0 || l < j as i64 {
        return Ok(0);
    }
    let mut count = 0u64;
    enumerate_compositions(j, l, &mut |_| count += 1);
    Ok(count)
}

/// Brute-force value of `u^{∗j}(ℓ)` as a sum of products over all
/// compositions of `ℓ` into `j` positive parts.
///
/// Requires `u` supported on the positive integers; rejects targets above
/// [`COMPOSITION_CAP`] since the enumeration grows combinatorially.
pub fn conv_power_oracle<T: Scalar>(u: &RightLateralSeq<T>, j: u32, l: i64) -> Result<T> {
    if l > COMPOSITION_CAP {
        return Err(DeconvError::EnumerationCap {
            requested: l,
            cap: COMPOSITION_CAP,
        });
    }
    if j == 0 {
        return Err(DeconvError::invalid("composition oracle needs j ≥ 1"));
    }
    for z in u.offset..=0 {
        if u.value_at(z).modulus() > 0.0 {
            return Err(DeconvError::invalid(
                "composition oracle needs support on the positive integers",
            ));
        }
    }
    let mut sum = T::zero();
    enumerate_compositions(j, l, &mut |parts| {
        let mut prod = T::one();
        for &p in parts {
            prod *= u.value_at(p);
        }
        sum += prod;
    });
    Ok(sum)
}

fn enumerate_compositions(j: u32, l: i64, visit: &mut impl FnMut(&[i64])) {
    let mut parts = Vec::with_capacity(j as usize);
    fn rec(j_left: u32, l_left: i64, parts: &mut Vec<i64>, visit: &mut impl FnMut(&[i64])) {
        if j_left == 1 {
            if l_left >= 1 {
                parts.push(l_left);
                visit(parts);
                parts.pop();
            }
            return;
        }
        // Leave at least one unit per remaining part.
        let max_here = l_left - (j_left as i64 - 1);
        for z in 1..=max_here {
            parts.push(z);
            rec(j_left - 1, l_left - z, parts, visit);
            parts.pop();
        }
    }
    if j >= 1 && l >= j as i64 {
        rec(j, l, &mut parts, visit);
    }
}

/// Alternating binomial transform `B{p}(ℓ) = Σ_{k≤ℓ} C(ℓ,k)(−1)^k p(k)`.
///
/// Output has the same length as the input. The transform is an involution.
///
/// Panics if `p.offset ≠ 0`.
pub fn binom_transform<T: Scalar>(p: &RightLateralSeq<T>) -> RightLateralSeq<T> {
    assert_eq!(p.offset(), 0, "binomial transform expects offset 0");
    let n = p.len();
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let mut acc = T::zero();
        // C(ℓ,k) by Pascal-row recurrence, sign folded in.
        let mut c = 1i128;
        for (k, pk) in p.coeffs.iter().take(l + 1).enumerate() {
            let coeff = T::from_i64(c as i64);
            let term = coeff * pk.clone();
            if k % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
            c = c * (l as i128 - k as i128) / (k as i128 + 1);
        }
        out.push(acc);
    }
    RightLateralSeq::with_tail_mass(0, out, p.tail_mass)
}

/// Step distribution function `Θ{p}(ξ) = Σ_{z ≤ ⌊ξ/scale⌋} p(z)` induced by
/// a right-lateral sequence on the lattice `scale·ℤ`.
#[derive(Debug, Clone)]
pub struct StepDf<T> {
    seq: RightLateralSeq<T>,
    scale: f64,
}

impl<T: Scalar> StepDf<T> {
    /// Step d.f. on the unit lattice.
    pub fn new(seq: RightLateralSeq<T>) -> Self {
        StepDf { seq, scale: 1.0 }
    }

    /// Step d.f. on the lattice with span `scale > 0`.
    pub fn with_scale(seq: RightLateralSeq<T>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(DeconvError::invalid("step d.f. scale must be positive"));
        }
        Ok(StepDf { seq, scale })
    }

    /// Underlying sequence.
    pub fn seq(&self) -> &RightLateralSeq<T> {
        &self.seq
    }

    /// Lattice span.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Evaluates the step d.f. at `ξ`: the partial sum up to `⌊ξ/scale⌋`.
///
/// Returns zero when `⌊ξ/scale⌋` lies below the sequence offset.
pub fn theta_eval<T: Scalar>(df: &StepDf<T>, xi: f64) -> T {
    let m = (xi / df.scale).floor();
    theta_of_seq(&df.seq, m as i64)
}

/// Partial sum `Σ_{z ≤ m}` of a sequence (the step d.f. on the integers).
pub fn theta_of_seq<T: Scalar>(seq: &RightLateralSeq<T>, m: i64) -> T {
    if seq.is_empty() || m < seq.offset {
        return T::zero();
    }
    let upto = ((m - seq.offset + 1) as usize).min(seq.len());
    let mut acc = T::zero();
    for c in &seq.coeffs[..upto] {
        acc += c.clone();
    }
    acc
}

/// Largest absolute coefficient difference between two sequences.
pub fn max_abs_diff<T: Scalar>(a: &RightLateralSeq<T>, b: &RightLateralSeq<T>) -> f64 {
    let lo = a.offset.min(b.offset);
    let hi = a
        .last_index()
        .unwrap_or(lo)
        .max(b.last_index().unwrap_or(lo));
    let mut worst = 0.0f64;
    for z in lo..=hi {
        worst = worst.max((a.value_at(z) - b.value_at(z)).modulus());
    }
    worst
}

/// Compares sequences with mixed tolerance `max(abs, rel·max sup-norm)`.
pub fn seq_approx_eq<T: Scalar>(
    a: &RightLateralSeq<T>,
    b: &RightLateralSeq<T>,
    abs_tol: f64,
    rel_tol: f64,
) -> bool {
    let scale = a.sup_norm().max(b.sup_norm());
    max_abs_diff(a, b) <= abs_tol.max(rel_tol * scale)
}
