//! Brute-force ground truth: direct multiplication of all 2^G barrier
//! matrices interleaved with gap phases. Deliberately naive (O(2^G) per
//! energy) and built from the explicit interval list, never from the
//! closed-form scales, so geometry bugs and engine bugs stay independent.

use crate::engine::ScatteringPoint;
use crate::error::{Error, Result};
use crate::geometry::SegmentLayout;
use crate::transfer::{barrier_matrix, compose, gap_matrix, TransferMatrix};

/// Oracle stage cap: 2^14 barrier matrices per energy.
pub const MAX_ORACLE_STAGE: u32 = 14;

/// Alternating barrier/gap widths, left to right. Leading and trailing
/// free space is excluded (transmission is translation invariant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainElement {
    Barrier(f64),
    Gap(f64),
}

/// Explicit scattering chain realized from the interval list.
#[derive(Debug, Clone)]
pub struct BarrierChain {
    pub elements: Vec<ChainElement>,
    /// Distance from the first barrier's left edge to the last one's right edge.
    pub total_span: f64,
}

impl BarrierChain {
    pub fn barrier_measure(&self) -> f64 {
        self.elements
            .iter()
            .filter_map(|e| match e {
                ChainElement::Barrier(w) => Some(*w),
                ChainElement::Gap(_) => None,
            })
            .sum()
    }

    pub fn reversed(&self) -> BarrierChain {
        BarrierChain {
            elements: self.elements.iter().rev().copied().collect(),
            total_span: self.total_span,
        }
    }
}

/// Reads the interval list off a layout into an alternating chain.
pub fn chain_from_layout(layout: &SegmentLayout) -> Result<BarrierChain> {
    if layout.intervals.is_empty() {
        return Err(Error::OutOfRange(
            "layout has no enumerated intervals; build it with build_layout".into(),
        ));
    }
    let mut elements = Vec::with_capacity(layout.intervals.len() * 2 - 1);
    let mut prev_end = None;
    for iv in &layout.intervals {
        if let Some(end) = prev_end {
            elements.push(ChainElement::Gap(iv.start - end));
        }
        elements.push(ChainElement::Barrier(iv.width()));
        prev_end = Some(iv.end);
    }
    let total_span = prev_end.unwrap() - layout.intervals[0].start;
    Ok(BarrierChain {
        elements,
        total_span,
    })
}

/// Full chain matrix with running renormalization. Returns the
/// normalized matrix and ln of the factor divided out.
fn composed_chain(chain: &BarrierChain, v: f64, e: f64) -> Result<(TransferMatrix, f64)> {
    let k = e.sqrt();
    let mut total = TransferMatrix::IDENTITY;
    let mut ln_scale = 0.0f64;
    for element in &chain.elements {
        let m = match *element {
            // a barrier is its origin-frame matrix followed by its own
            // width of frame advance, so gaps enter with gap width alone
            ChainElement::Barrier(w) => compose(&barrier_matrix(e, v, w)?, &gap_matrix(k, w)),
            ChainElement::Gap(w) => gap_matrix(k, w),
        };
        total = compose(&total, &m);
        let norm = total.max_norm();
        if !norm.is_finite() {
            return Err(Error::Inconsistent(format!(
                "chain matrix overflowed at k={k}, V={v} despite renormalization"
            )));
        }
        if norm > 1e140 {
            total = total.scale(1.0 / norm);
            ln_scale += norm.ln();
        }
    }
    Ok((total, ln_scale))
}

/// Direct transmission by composing every element of the chain.
/// Deep-tunneling products that exceed f64 range surface as an
/// underflowed point carrying log₁₀T, never as an exact zero.
pub fn brute_force_transmission(chain: &BarrierChain, v: f64, e: f64) -> Result<ScatteringPoint> {
    let k = e.sqrt();
    let (total, ln_scale) = composed_chain(chain, v, e)?;
    let m12_abs = total.m12.norm();
    if ln_scale == 0.0 {
        let x = m12_abs * m12_abs;
        if x.is_finite() {
            return Ok(ScatteringPoint::from_strength(k, x));
        }
    }
    if m12_abs == 0.0 {
        return Ok(ScatteringPoint::from_strength(k, 0.0));
    }
    Ok(ScatteringPoint::from_ln_strength(
        k,
        2.0 * (m12_abs.ln() + ln_scale),
    ))
}

/// Determinant drift of the composed chain, |det - 1|. The product of
/// unimodular factors; drift beyond ~1e-9 over 2^10 elements indicates
/// a composition bug.
pub fn chain_det_drift(chain: &BarrierChain, v: f64, e: f64) -> Result<f64> {
    let (total, ln_scale) = composed_chain(chain, v, e)?;
    // det scales as the square of the divided-out factor
    let det = total.det() * (2.0 * ln_scale).exp();
    Ok((det - 1.0).norm())
}
