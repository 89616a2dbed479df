//! Inverse sequences for discrete deconvolution.
//!
//! For a single-index noise sequence `u` with `u(0) ≠ 0`, the complement
//! sequence `ü₊ = δ₀ − u/u(0)` has cancelling convolution powers, and the
//! finite Neumann sum `γ{ü₊}(z) = Σ_{j≤z} ü₊^{∗j}(z)` is the convolution
//! inverse of `u/u(0)`. For index-dependent noise `p(ℓ,z)` the analogue is
//! the triangular table `β{p̈₊}(ℓ,z)`, built from non-commuting powers of
//! the double sequence.
//!
//! The production path for `γ` is the O(z²) back-substitution recurrence
//! obtained from the identity representation; the definitional sum of
//! convolution powers stays available as an independent oracle.

use std::sync::Arc;


use crate::dist::factorial;
use crate::error::DeconvError;
use crate::scalar::Scalar;
use crate::seq::{conv_power, RightLateralSeq};
use crate::Result;

/// Complement sequence `ü₊(z) = δ₀({z}) − u(z)/u(0)`.
///
/// The result has `ü₊(0) = 0` and `ü₊(z) = −u(z)/u(0)` for `z ≥ 1`.
pub fn u_plus<T: Scalar>(u: &RightLateralSeq<T>) -> Result<RightLateralSeq<T>> {
    let u0 = leading_coefficient(u)?;
    let mut coeffs = vec![T::zero(); u.len().max(1)];
    for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = -(u.value_at(k as i64) / u0.clone());
    }
    Ok(RightLateralSeq::with_tail_mass(0, coeffs, u.tail_mass()))
}

fn leading_coefficient<T: Scalar>(u: &RightLateralSeq<T>) -> Result<T> {
    if u.offset() != 0 {
        return Err(DeconvError::invalid(
            "noise sequence must start at index 0",
        ));
    }
    let u0 = u.value_at(0);
    if u0.is_zero() {
        return Err(DeconvError::SingularLeading { index: 0 });
    }
    Ok(u0)
}

/// Inverse sequence `γ{ü₊}(z)` for `z = 0..=zmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable<T> {
    values: Vec<T>,
}

impl<T: Scalar> GammaTable<T> {
    /// Table from precomputed values (`values[z] = γ(z)`).
    pub fn from_values(values: Vec<T>) -> Self {
        GammaTable { values }
    }

    /// Largest tabulated index.
    pub fn zmax(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    /// `γ(z)`; zero below 0, panics above the tabulated range.
    pub fn at(&self, z: i64) -> T {
        if z < 0 {
            T::zero()
        } else {
            self.values[z as usize].clone()
        }
    }

    /// Tabulated values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// View as a right-lateral sequence starting at 0.
    pub fn as_seq(&self) -> RightLateralSeq<T> {
        RightLateralSeq::new(0, self.values.clone())
    }
}

/// Inverse sequence by the back-substitution recurrence
/// `γ(0) = 1`, `γ(z) = −u(0)⁻¹ Σ_{k<z} u(z−k) γ(k)`.
pub fn gamma<T: Scalar>(u: &RightLateralSeq<T>, zmax: usize) -> Result<GammaTable<T>> {
    let u0 = leading_coefficient(u)?;
    let len = u.len() as i64;
    let mut values = Vec::with_capacity(zmax + 1);
    values.push(T::one());
    for z in 1..=zmax as i64 {
        let mut acc = T::zero();
        // u(z−k) vanishes outside 1 ≤ z−k ≤ len−1.
        let k_lo = (z - (len - 1)).max(0);
        for k in k_lo..z {
            acc += u.value_at(z - k) * values[k as usize].clone();
        }
        values.push(-(acc / u0.clone()));
    }
    Ok(GammaTable { values })
}

/// Definitional route: `γ(z) = Σ_{j=0}^{z} ü₊^{∗j}(z)`.
///
/// O(zmax³); retained as the independent oracle for [`gamma`].
pub fn gamma_from_powers<T: Scalar>(
    u: &RightLateralSeq<T>,
    zmax: usize,
) -> Result<GammaTable<T>> {
    let up = u_plus(u)?;
    let mut values = vec![T::zero(); zmax + 1];
    // Powers with j > z cancel, so j runs to zmax at most.
    for j in 0..=zmax as u32 {
        let vs = conv_power(&up, j, zmax as i64);
        for (z, v) in values.iter_mut().enumerate() {
            *v += vs.value_at(z as i64);
        }
    }
    Ok(GammaTable { values })
}

/// Two-index noise sequence `p(ℓ, z)` with per-`ℓ` support in `{0,…,ℓ}`.
#[derive(Clone)]
pub struct DoubleSeq<T> {
    provider: Arc<dyn Fn(i64, i64) -> T + Send + Sync>,
    lmax: i64,
}

impl<T: Scalar> DoubleSeq<T> {
    /// Double sequence from a provider closure, capped at `lmax`.
    pub fn from_fn(lmax: i64, f: impl Fn(i64, i64) -> T + Send + Sync + 'static) -> Self {
        DoubleSeq {
            provider: Arc::new(f),
            lmax,
        }
    }

    /// Single-index reduction `p(ℓ, z) = u(z)`.
    pub fn from_single(u: RightLateralSeq<T>, lmax: i64) -> Self {
        DoubleSeq::from_fn(lmax, move |_, z| u.value_at(z))
    }

    /// Dense triangular rows: `rows[ℓ][z]` for `0 ≤ z ≤ ℓ`.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let lmax = rows.len() as i64 - 1;
        DoubleSeq::from_fn(lmax, move |l, z| {
            rows.get(l as usize)
                .and_then(|row| row.get(z as usize))
                .cloned()
                .unwrap_or_else(T::zero)
        })
    }

    /// Index cap.
    pub fn lmax(&self) -> i64 {
        self.lmax
    }

    /// `p(ℓ, z)`, zero outside `0 ≤ z ≤ ℓ ≤ lmax`.
    pub fn value(&self, l: i64, z: i64) -> T {
        if l < 0 || l > self.lmax || z < 0 || z > l {
            T::zero()
        } else {
            (self.provider)(l, z)
        }
    }
}

/// Triangular inverse table `β(ℓ, z)` for `0 ≤ z ≤ ℓ ≤ lmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> BetaTable<T> {
    /// Largest row index.
    pub fn lmax(&self) -> i64 {
        self.rows.len() as i64 - 1
    }

    /// `β(ℓ, z)`; zero for `z < 0`, panics outside the triangle.
    pub fn at(&self, l: i64, z: i64) -> T {
        if z < 0 {
            return T::zero();
        }
        self.rows[l as usize][z as usize].clone()
    }

    /// Row `β(ℓ, ·)` as a right-lateral sequence.
    pub fn row_seq(&self, l: i64) -> RightLateralSeq<T> {
        RightLateralSeq::new(0, self.rows[l as usize].clone())
    }
}

/// Layer-by-layer powers of a double-sequence kernel:
/// `K^{∗0}(ℓ,z) = δ₀({z})`,
/// `K^{∗j}(ℓ,z) = Σ_{z₁} K(ℓ,z₁) K^{∗(j−1)}(ℓ−z₁, z−z₁)`.
///
/// Returns `[j][ℓ][z]` for `0 ≤ z ≤ ℓ ≤ lmax`, `0 ≤ j ≤ jmax`.
fn double_powers<T: Scalar>(
    kernel: &impl Fn(i64, i64) -> T,
    lmax: usize,
    jmax: usize,
) -> Vec<Vec<Vec<T>>> {
    let mut layers = Vec::with_capacity(jmax + 1);
    let mut base = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let mut row = vec![T::zero(); l + 1];
        row[0] = T::one();
        base.push(row);
    }
    layers.push(base);
    for j in 1..=jmax {
        let prev = &layers[j - 1];
        let mut layer = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let mut row = vec![T::zero(); l + 1];
            for (z, cell) in row.iter_mut().enumerate() {
                let mut acc = T::zero();
                for z1 in 0..=z {
                    let k = kernel(l as i64, z1 as i64);
                    if k.is_zero() {
                        continue;
                    }
                    acc += k * prev[l - z1][z - z1].clone();
                }
                *cell = acc;
            }
            layer.push(row);
        }
        layers.push(layer);
    }
    layers
}

fn normalized_complement<T: Scalar>(p: &DoubleSeq<T>, lmax: usize) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax as i64 {
        let p0 = p.value(l, 0);
        if p0.is_zero() {
            return Err(DeconvError::SingularLeading { index: l });
        }
        let mut row = vec![T::zero(); l as usize + 1];
        for (z, cell) in row.iter_mut().enumerate().skip(1) {
            *cell = -(p.value(l, z as i64) / p0.clone());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Inverse table `β{p̈₊}(ℓ,z) = Σ_{j=0}^{z} p̈₊^{∗j}(ℓ,z)` by dynamic
/// programming over the power index, stopping early once a whole layer
/// cancels.
///
/// Fails with the offending `ℓ` when `p(ℓ,0) = 0` inside the requested
/// range.
pub fn beta<T: Scalar>(p: &DoubleSeq<T>, lmax: usize) -> Result<BetaTable<T>> {
    let comp = normalized_complement(p, lmax)?;
    let kernel = |l: i64, z: i64| -> T {
        if l < 0 || l as usize > lmax || z < 0 || z > l {
            T::zero()
        } else {
            comp[l as usize][z as usize].clone()
        }
    };

    let mut acc: Vec<Vec<T>> = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let mut row = vec![T::zero(); l + 1];
        row[0] = T::one();
        acc.push(row);
    }
    // prev holds p̈₊^{∗j}; the power cancels below z = j, so j ≤ lmax.
    let mut prev: Vec<Vec<T>> = acc.clone();
    for j in 1..=lmax {
        let mut layer = Vec::with_capacity(lmax + 1);
        let mut all_zero = true;
        for l in 0..=lmax {
            let mut row = vec![T::zero(); l + 1];
            for (z, cell) in row.iter_mut().enumerate() {
                if z < j {
                    continue;
                }
                let mut s = T::zero();
                for z1 in 1..=z {
                    let k = kernel(l as i64, z1 as i64);
                    if k.is_zero() {
                        continue;
                    }
                    s += k * prev[l - z1][z - z1].clone();
                }
                if !s.is_zero() {
                    all_zero = false;
                }
                *cell = s;
            }
            layer.push(row);
        }
        for l in 0..=lmax {
            for z in 0..=l {
                acc[l][z] += layer[l][z].clone();
            }
        }
        prev = layer;
        if all_zero {
            break;
        }
    }
    Ok(BetaTable { rows: acc })
}

/// Direct partial sum `α{p̈₊}(ℓ, z, x) = Σ_{j=0}^{⌊x⌋} p̈₊^{∗j}(ℓ, z)`.
pub fn alpha_direct<T: Scalar>(p: &DoubleSeq<T>, l: i64, z: i64, x: f64) -> Result<T> {
    if l < 0 || z < 0 || x < 0.0 {
        return Ok(T::zero());
    }
    let lmax = l.max(z) as usize;
    let comp = normalized_complement(p, lmax)?;
    let jmax = (x.floor() as usize).min(z as usize);
    let layers = double_powers(
        &|l2: i64, z2: i64| {
            if l2 < 0 || l2 as usize > lmax || z2 < 0 || z2 > l2 {
                T::zero()
            } else {
                comp[l2 as usize][z2 as usize].clone()
            }
        },
        lmax,
        jmax,
    );
    let mut acc = T::zero();
    for layer in &layers {
        acc += layer[l as usize][z as usize].clone();
    }
    Ok(acc)
}

/// Alternative route for `α` through the binomial identity:
/// `α{p̈₊}(ℓ, z, x) = Σ_{k=0}^{⌊x⌋} C(⌊x⌋+1, k+1) (−1)^k p̈^{∗k}(ℓ, z)`,
/// with `p̈(ℓ,z) = p(ℓ,z)/p(ℓ,0)`. Cross-check path only; the direct
/// partial sum is the production route.
pub fn alpha_binomial_check<T: Scalar>(p: &DoubleSeq<T>, l: i64, z: i64, x: f64) -> Result<T> {
    if l < 0 || z < 0 || x < 0.0 {
        return alpha_direct(p, l, z, x);
    }
    let lmax = l.max(z) as usize;
    // p̈ keeps its leading term, so its powers do not cancel: all k ≤ ⌊x⌋
    // contribute.
    let mut norm = Vec::with_capacity(lmax + 1);
    for l2 in 0..=lmax as i64 {
        let p0 = p.value(l2, 0);
        if p0.is_zero() {
            return Err(DeconvError::SingularLeading { index: l2 });
        }
        let mut row = vec![T::zero(); l2 as usize + 1];
        for (z2, cell) in row.iter_mut().enumerate() {
            *cell = p.value(l2, z2 as i64) / p0.clone();
        }
        norm.push(row);
    }
    let m = x.floor() as usize;
    let layers = double_powers(
        &|l2: i64, z2: i64| {
            if l2 < 0 || l2 as usize > lmax || z2 < 0 || z2 > l2 {
                T::zero()
            } else {
                norm[l2 as usize][z2 as usize].clone()
            }
        },
        lmax,
        m,
    );
    let mut acc = T::zero();
    // C(m+1, k+1), updated along k; exact in i64 at the sizes used here.
    let mut c = m as i64 + 1;
    for (k, layer) in layers.iter().enumerate() {
        let coeff = T::from_i64(if k % 2 == 0 { c } else { -c });
        acc += coeff * layer[l as usize][z as usize].clone();
        // C(m+1, k+2) from C(m+1, k+1).
        c = c * (m as i64 - k as i64) / (k as i64 + 2);
    }
    Ok(acc)
}

/// Closed-form inverse sequences for the classical noise families.
pub mod closed_form {
    use super::*;

    /// Bernoulli weights `(u₀, u₁)`: `γ(z) = (−u₁/u₀)^z`.
    pub fn bernoulli<T: Scalar>(u0: T, u1: T, zmax: usize) -> GammaTable<T> {
        let ratio = -(u1 / u0);
        let mut values = Vec::with_capacity(zmax + 1);
        let mut cur = T::one();
        for _ in 0..=zmax {
            values.push(cur.clone());
            cur *= ratio.clone();
        }
        GammaTable::from_values(values)
    }

    /// Geometric weights `u(z) = u(1−u)^z`: `γ = δ₀ − (1−u)δ₁`.
    pub fn geometric(u: f64, zmax: usize) -> GammaTable<f64> {
        let mut values = vec![0.0; zmax + 1];
        values[0] = 1.0;
        if zmax >= 1 {
            values[1] = -(1.0 - u);
        }
        GammaTable::from_values(values)
    }

    /// Poisson weights with rate `λ`: `γ(z) = (−λ)^z / z!`.
    pub fn poisson(lambda: f64, zmax: usize) -> GammaTable<f64> {
        let values = (0..=zmax)
            .map(|z| (-lambda).powi(z as i32) / factorial(z as u64))
            .collect();
        GammaTable::from_values(values)
    }

    /// Flat weights on `{0,…,K}`.
    ///
    /// The generating function of the inverse is
    /// `1/(1 + x + … + x^K) = (1 − x) Σ_k x^{(K+1)k}`, so
    /// `γ(z) = +1` for `z ≡ 0`, `−1` for `z ≡ 1 (mod K+1)`, else `0`:
    /// periodic and bounded, but not absolutely summable.
    pub fn uniform(k: usize, zmax: usize) -> GammaTable<f64> {
        let period = k + 1;
        let values = (0..=zmax)
            .map(|z| match z % period {
                0 => 1.0,
                1 => -1.0,
                _ => 0.0,
            })
            .collect();
        GammaTable::from_values(values)
    }
}
