//! Closed-form transmission through SVC(ρ, n) via the super-periodic
//! formalism: Chebyshev polynomials of the second kind, the recursive
//! Bloch-phase sequence Ω₁…Ω_G, and the stage-G transmission
//!
//! ```text
//! T_G(k) = 1 / (1 + 4^G ε₋² sin²(κ l_G) Π_q Ω_q²)
//! ```
//!
//! evaluated per energy in O(G²) operations, against the oracle's O(2^G).

use crate::error::{Error, Result};
use crate::geometry::{build_scales, PotentialSpec, SegmentLayout};
use crate::transfer::{barrier_matrix, TransferMatrix};

/// (k, T, R) with T + R = 1. `log10_t` is always populated; when the
/// interference product overflows f64, `t` underflows toward 0 and
/// `underflowed` marks that `log10_t` carries the real magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub k: f64,
    pub t: f64,
    pub r: f64,
    pub log10_t: f64,
    pub underflowed: bool,
}

impl ScatteringPoint {
    /// Point from the interference strength x where T = 1/(1+x).
    pub(crate) fn from_strength(k: f64, x: f64) -> Self {
        debug_assert!(x >= 0.0);
        let t = 1.0 / (1.0 + x);
        ScatteringPoint {
            k,
            t,
            r: x / (1.0 + x),
            log10_t: t.log10(),
            underflowed: false,
        }
    }

    /// Point from ln(x) for x too large to represent: T ≈ 1/x.
    pub(crate) fn from_ln_strength(k: f64, ln_x: f64) -> Self {
        let log10_t = -ln_x / std::f64::consts::LN_10;
        let t = 10f64.powf(log10_t);
        ScatteringPoint {
            k,
            t,
            r: 1.0 - t,
            log10_t,
            underflowed: true,
        }
    }
}

/// Product accumulator that renormalizes its mantissa into (1e-150, 1e150)
/// so chains like 4^G Π Ω² survive far past f64 range.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledProduct {
    mant: f64,
    ln_scale: f64,
    rescaled: bool,
}

impl ScaledProduct {
    pub fn one() -> Self {
        ScaledProduct {
            mant: 1.0,
            ln_scale: 0.0,
            rescaled: false,
        }
    }

    /// Multiply by |v|.
    pub fn mul_abs(&mut self, v: f64) {
        self.mant *= v.abs();
        if self.mant != 0.0 && !(1e-150..1e150).contains(&self.mant) {
            self.ln_scale += self.mant.ln();
            self.mant = 1.0;
            self.rescaled = true;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    /// The plain f64 value when no rescaling happened.
    pub fn direct(&self) -> Option<f64> {
        (!self.rescaled).then_some(self.mant)
    }

    pub fn ln(&self) -> f64 {
        self.ln_scale + self.mant.ln()
    }
}

/// Chebyshev polynomial of the second kind by the three-term recursion
/// U_{j+1} = 2x U_j - U_{j-1}, with U₋₁ = 0 for recursion convenience.
pub fn chebyshev_u(n: i64, x: f64) -> f64 {
    assert!(n >= -1, "chebyshev_u requires N >= -1, got {n}");
    if n == -1 {
        return 0.0;
    }
    let mut prev = 0.0; // U_{-1}
    let mut cur = 1.0; // U_0
    for _ in 0..n {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    cur
}

/// Geometric phase length γ₁(q) = -(l_G + d_{G-q+1}), always negative.
///
/// Evaluated both as the spacing sum Σ_{p<q} s_p - s_q and as the closed
/// gap form; disagreement beyond rounding signals a layout bug.
pub fn gamma1(layout: &SegmentLayout, q: u32) -> Result<f64> {
    let g_max = layout.stage();
    if q == 0 || q > g_max {
        return Err(Error::OutOfRange(format!(
            "gamma1 level q={q} outside 1..={g_max}"
        )));
    }
    let sum_form: f64 = (1..q).map(|p| layout.spacings[(p - 1) as usize]).sum::<f64>()
        - layout.spacings[(q - 1) as usize];
    let closed = -(layout.unit_width() + layout.gaps[(g_max - q) as usize]);
    let tol = 1e-12 * layout.spec.span.max(1.0);
    if (sum_form - closed).abs() > tol {
        return Err(Error::Inconsistent(format!(
            "gamma1({q}) sum form {sum_form} != closed form {closed}"
        )));
    }
    Ok(closed)
}

/// Geometric phase length γ₂(q, r) = d_{G-r+1} - d_{G-q+1} for r < q;
/// negative whenever the gaps decrease with stage.
pub fn gamma2(layout: &SegmentLayout, q: u32, r: u32) -> Result<f64> {
    let g_max = layout.stage();
    if r == 0 || r >= q || q > g_max {
        return Err(Error::OutOfRange(format!(
            "gamma2 levels (q={q}, r={r}) must satisfy 1 <= r < q <= {g_max}"
        )));
    }
    Ok(layout.gaps[(g_max - r) as usize] - layout.gaps[(g_max - q) as usize])
}

/// The Bloch-phase sequence of a stage-G layout at one energy.
#[derive(Debug, Clone)]
pub struct BlochSequence {
    /// Ω₁…Ω_G.
    pub omega: Vec<f64>,
    /// Phase of the unit-cell m22.
    pub theta: f64,
    /// |m22| of the unit cell.
    pub m22_abs: f64,
    /// γ₁(1)…γ₁(G).
    pub gamma1: Vec<f64>,
    /// The unit-cell barrier matrix (width l_G, height V).
    pub unit: TransferMatrix,
}

/// Computes Ω₁…Ω_G by the recursion
///
/// ```text
/// Ω_q = 2^{q-1} |m22| cos(θ - kγ₁(q)) Π_{p=1}^{q-1} Ω_p
///       - Σ_{r=1}^{q-1} 2^{q-r-1} cos(kγ₂(q,r)) Π_{p=r+1}^{q-1} Ω_p
/// ```
///
/// with θ = arg(m22) of the stage-G unit-cell barrier.
pub fn bloch_sequence(layout: &SegmentLayout, e: f64) -> Result<BlochSequence> {
    let spec = &layout.spec;
    let unit = barrier_matrix(e, spec.height, layout.unit_width())?;
    let k = e.sqrt();
    let theta = unit.m22.arg();
    let m22_abs = unit.m22.norm();
    let g_max = layout.stage();
    let mut omega = Vec::with_capacity(g_max as usize);
    let mut g1 = Vec::with_capacity(g_max as usize);
    let mut prefix = 1.0f64; // Π_{p=1}^{q-1} Ω_p
    for q in 1..=g_max {
        let gq = gamma1(layout, q)?;
        g1.push(gq);
        let lead = 2f64.powi(q as i32 - 1) * m22_abs * (theta - k * gq).cos() * prefix;
        let mut sum = 0.0;
        let mut suffix = 1.0f64; // Π_{p=r+1}^{q-1} Ω_p, built from r = q-1 downward
        for r in (1..q).rev() {
            sum += 2f64.powi((q - r - 1) as i32) * (k * gamma2(layout, q, r)?).cos() * suffix;
            suffix *= omega[(r - 1) as usize];
        }
        let w = lead - sum;
        omega.push(w);
        prefix *= w;
    }
    Ok(BlochSequence {
        omega,
        theta,
        m22_abs,
        gamma1: g1,
        unit,
    })
}

/// Closed-form transmission of the stage-G SVC(ρ, n) potential at
/// incident energy E = k². The below-barrier factor ε₋² sin²(κ l_G) is
/// evaluated as |m12|² in complex arithmetic, so one code path covers
/// E < V, E = V and E > V.
pub fn transmission(spec: &PotentialSpec, e: f64) -> Result<ScatteringPoint> {
    let layout = build_scales(spec)?;
    transmission_with_layout(&layout, e)
}

/// Same as [`transmission`] but reusing a prebuilt layout across a grid.
pub fn transmission_with_layout(layout: &SegmentLayout, e: f64) -> Result<ScatteringPoint> {
    let k = e.sqrt();
    if layout.stage() == 0 {
        let unit = barrier_matrix(e, layout.spec.height, layout.spec.span)?;
        return Ok(ScatteringPoint::from_strength(k, unit.m12.norm_sqr()));
    }
    let bloch = bloch_sequence(layout, e)?;
    let m12_sqr = bloch.unit.m12.norm_sqr();
    strength_to_point(k, m12_sqr, bloch.omega.iter().map(|&w| 2.0 * w))
}

/// Transmission of a general super-periodic potential of order G built
/// from `unit`, with per-level repetition counts N_j and Bloch phases
/// Ω_j: T = 1/(1 + [|m12| Π_j U_{N_j - 1}(Ω_j)]²).
pub fn transmission_general_spp(
    unit: &TransferMatrix,
    repetitions: &[u32],
    omega: &[f64],
) -> Result<f64> {
    if repetitions.len() != omega.len() {
        return Err(Error::OutOfRange(format!(
            "repetition and Bloch-phase lists differ in length: {} vs {}",
            repetitions.len(),
            omega.len()
        )));
    }
    let factors = repetitions
        .iter()
        .zip(omega)
        .map(|(&n, &w)| chebyshev_u(n as i64 - 1, w));
    let point = strength_to_point(f64::NAN, unit.m12.norm_sqr(), factors)?;
    Ok(point.t)
}

/// T = 1/(1 + m12_sqr · Π factors²) with overflow-safe accumulation.
fn strength_to_point(
    k: f64,
    m12_sqr: f64,
    factors: impl Iterator<Item = f64>,
) -> Result<ScatteringPoint> {
    let mut product = ScaledProduct::one();
    for f in factors {
        product.mul_abs(f);
    }
    if product.is_zero() || m12_sqr == 0.0 {
        return Ok(ScatteringPoint::from_strength(k, 0.0));
    }
    if let Some(p) = product.direct() {
        let x = m12_sqr * p * p;
        if x.is_finite() {
            return Ok(ScatteringPoint::from_strength(k, x));
        }
    }
    Ok(ScatteringPoint::from_ln_strength(
        k,
        m12_sqr.ln() + 2.0 * product.ln(),
    ))
}
