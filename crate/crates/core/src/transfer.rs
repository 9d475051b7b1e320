//! Transfer matrix of a single rectangular barrier and free-space phase
//! composition, valid above, below, and at the barrier energy.
//!
//! Units: ħ = 2m = 1, so k = √E and κ = √(E - V). The matrix relates
//! plane-wave amplitudes left of the barrier to those on its right in
//! the convention where det M = 1 and T = 1/(1 + |M₁₂|²).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// |κ·width| threshold below which the κ → 0 series path is taken.
const SERIES_THRESHOLD: f64 = 1e-4;

/// 2×2 complex transfer matrix. Physical constructions are unimodular;
/// for real potentials m22 = conj(m11) and m21 = conj(m12).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self {
        m11: Complex64::new(1.0, 0.0),
        m12: Complex64::new(0.0, 0.0),
        m21: Complex64::new(0.0, 0.0),
        m22: Complex64::new(1.0, 0.0),
    };

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Largest element magnitude; used for scaled composition in long chains.
    pub fn max_norm(&self) -> f64 {
        self.m11
            .norm()
            .max(self.m12.norm())
            .max(self.m21.norm())
            .max(self.m22.norm())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            m11: self.m11 * factor,
            m12: self.m12 * factor,
            m21: self.m21 * factor,
            m22: self.m22 * factor,
        }
    }

    /// Transmission probability 1/(1 + |m12|²) of this matrix.
    pub fn transmission(&self) -> f64 {
        1.0 / (1.0 + self.m12.norm_sqr())
    }
}

/// Matrix product in left-to-right spatial order: `compose(a, b)` is the
/// matrix of the region whose left part is `a` and right part is `b`.
pub fn compose(a: &TransferMatrix, b: &TransferMatrix) -> TransferMatrix {
    TransferMatrix {
        m11: a.m11 * b.m11 + a.m12 * b.m21,
        m12: a.m11 * b.m12 + a.m12 * b.m22,
        m21: a.m21 * b.m11 + a.m22 * b.m21,
        m22: a.m21 * b.m12 + a.m22 * b.m22,
    }
}

impl std::ops::Mul for TransferMatrix {
    type Output = TransferMatrix;
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        compose(&self, &rhs)
    }
}

/// Free and in-barrier wave numbers with the derived ratios.
#[derive(Debug, Clone, Copy)]
pub struct WaveNumbers {
    /// Free wave number k = √E.
    pub k: f64,
    /// In-barrier wave number κ = √(E - V), principal branch
    /// (positive imaginary part below the barrier).
    pub kappa: Complex64,
    /// τ = k/κ.
    pub tau: Complex64,
    /// ε₊ = (τ + τ⁻¹)/2.
    pub eps_plus: Complex64,
    /// ε₋ = (τ - τ⁻¹)/2.
    pub eps_minus: Complex64,
}

/// Wave numbers for incident energy `e` against barrier height `v`.
/// Rejects E ≤ 0 (no propagating incident wave). τ and ε± are left as
/// NaN-free only when κ ≠ 0; `barrier_matrix` avoids them near κ = 0.
pub fn wave_numbers(e: f64, v: f64) -> Result<WaveNumbers> {
    if !(e > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "incident energy must be positive, got {e}"
        )));
    }
    let k = e.sqrt();
    let kappa = if e >= v {
        Complex64::new((e - v).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (v - e).sqrt())
    };
    let tau = Complex64::new(k, 0.0) / kappa;
    let eps_plus = 0.5 * (tau + tau.inv());
    let eps_minus = 0.5 * (tau - tau.inv());
    Ok(WaveNumbers {
        k,
        kappa,
        tau,
        eps_plus,
        eps_minus,
    })
}

/// Transfer matrix of a rectangular barrier of the given height and
/// width placed at the origin:
///
/// ```text
/// m11 = (cos κw - i ε₊ sin κw) e^{ikw}      m12 = i ε₋ sin κw
/// m21 = -i ε₋ sin κw                         m22 = (cos κw + i ε₊ sin κw) e^{-ikw}
/// ```
///
/// Near κ = 0 the products ε± sin κw are 0·∞ forms; they are evaluated
/// through the Taylor series of sin(κw)/κ and cos(κw) in κ²w² (κ² = E - V
/// is real), which keeps the result smooth across E = V.
pub fn barrier_matrix(e: f64, v: f64, width: f64) -> Result<TransferMatrix> {
    if !(e > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "incident energy must be positive, got {e}"
        )));
    }
    if !(width >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "barrier width must be non-negative, got {width}"
        )));
    }
    if width == 0.0 {
        return Ok(TransferMatrix::IDENTITY);
    }
    let k = e.sqrt();
    let kappa_sq = e - v;
    let (cos_kw, eps_p_sin, eps_m_sin) = if kappa_sq.abs().sqrt() * width < SERIES_THRESHOLD {
        // z = (κw)², |z| < 1e-8: four series terms give full f64 accuracy
        let z = kappa_sq * width * width;
        let sinc = width * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0);
        let cos = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0;
        // ε± sin κw = (k/2)(sin κw / κ) ± (κ²/2k)(sin κw / κ)
        let a = 0.5 * k * sinc;
        let b = 0.5 * kappa_sq * sinc / k;
        (
            Complex64::new(cos, 0.0),
            Complex64::new(a + b, 0.0),
            Complex64::new(a - b, 0.0),
        )
    } else {
        let wn = wave_numbers(e, v)?;
        let arg = wn.kappa * width;
        (arg.cos(), wn.eps_plus * arg.sin(), wn.eps_minus * arg.sin())
    };
    let i = Complex64::i();
    let free = Complex64::new(0.0, k * width).exp();
    Ok(TransferMatrix {
        m11: (cos_kw - i * eps_p_sin) * free,
        m12: i * eps_m_sin,
        m21: -i * eps_m_sin,
        m22: (cos_kw + i * eps_p_sin) * free.conj(),
    })
}

/// Phase matrix advancing the composition frame by `width` of free space:
/// diag(e^{-ikw}, e^{ikw}). Interleaving these with `barrier_matrix`
/// results (each followed by its own width phase) reproduces the exact
/// chain matrix up to an overall diagonal phase, which leaves |m12| and
/// the transmission unchanged.
pub fn gap_matrix(k: f64, width: f64) -> TransferMatrix {
    let phase = Complex64::new(0.0, -k * width).exp();
    TransferMatrix {
        m11: phase,
        m12: Complex64::new(0.0, 0.0),
        m21: Complex64::new(0.0, 0.0),
        m22: phase.conj(),
    }
}
