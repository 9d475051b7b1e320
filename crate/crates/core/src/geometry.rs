//! Geometry of the SVC(ρ, n) potential.
//!
//! At stage `g` the central fraction `ρ^{-exponent(g)}` of every remaining
//! segment is removed, leaving `2^G` barriers of identical width `l_G`.
//! The default exponent is `gⁿ`; an optional polynomial `a₀ + a₁g + …`
//! replaces it, which covers the general-Cantor (n = 0), SVC(ρ) (n = 1)
//! and polynomial-exponent families with one code path.

use crate::error::{Error, Result};

/// Stage cap for explicit interval enumeration (2^G intervals).
pub const MAX_ENUMERATED_STAGE: u32 = 20;

/// The five defining parameters of an SVC(ρ, n) potential instance,
/// plus the optional exponent-polynomial override.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    /// Removal scale factor; must exceed 1.
    pub rho: f64,
    /// Power of the stage index in the removal exponent. Ignored when
    /// `exponent_poly` is set.
    pub n: f64,
    /// Number of midpoint-removal iterations.
    pub stage: u32,
    /// Barrier height in the ħ = 2m = 1 convention (negative for wells).
    pub height: f64,
    /// Total span of the stage-0 barrier.
    pub span: f64,
    /// Optional coefficients a₀…a_m; exponent(g) = a₀ + a₁g + … + a_m gᵐ.
    pub exponent_poly: Option<Vec<f64>>,
}

impl PotentialSpec {
    pub fn new(rho: f64, n: f64, stage: u32, height: f64, span: f64) -> Result<Self> {
        let spec = Self {
            rho,
            n,
            stage,
            height,
            span,
            exponent_poly: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_exponent_poly(mut self, coeffs: Vec<f64>) -> Result<Self> {
        self.exponent_poly = Some(coeffs);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 1.0) {
            return Err(Error::InvalidSpec(format!(
                "rho must be a real number greater than 1, got {}",
                self.rho
            )));
        }
        if !(self.span > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "span L must be positive, got {}",
                self.span
            )));
        }
        if !self.height.is_finite() || !self.n.is_finite() || !self.rho.is_finite() {
            return Err(Error::InvalidSpec("parameters must be finite".into()));
        }
        if let Some(p) = &self.exponent_poly {
            if p.is_empty() || p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSpec(
                    "exponent polynomial must be non-empty with finite coefficients".into(),
                ));
            }
        }
        Ok(())
    }

    /// Removal exponent at stage `g`: `gⁿ` by default, else the polynomial.
    pub fn exponent(&self, g: u32) -> f64 {
        match &self.exponent_poly {
            Some(coeffs) => {
                let x = g as f64;
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            None => (g as f64).powf(self.n),
        }
    }

    /// Fraction `ρ^{-exponent(g)}` removed from each segment at stage `g`.
    pub fn removal_fraction(&self, g: u32) -> f64 {
        self.rho.powf(-self.exponent(g))
    }
}

/// Finite q-Pochhammer symbol `(x; y)_p = Π_{j=0}^{p-1} (1 - x·yʲ)`.
///
/// For n = 1 the segment length reduces to
/// `l_G = L/2^G · (1/ρ; 1/ρ)_G`.
pub fn q_pochhammer(x: f64, y: f64, p: u32) -> f64 {
    let mut product = 1.0;
    let mut power = 1.0;
    for _ in 0..p {
        product *= 1.0 - x * power;
        power *= y;
    }
    product
}

/// Segment length `l_g = L/2^g · Π_{j=1}^{g} (1 - ρ^{-exponent(j)})`.
///
/// Returns `L` for `g = 0`. Fails when any factor leaves (0, 1], which
/// happens when exponent(j) ≤ 0 makes the removal fraction reach 1.
pub fn segment_length(spec: &PotentialSpec, g: u32) -> Result<f64> {
    spec.validate()?;
    if g > spec.stage {
        return Err(Error::OutOfRange(format!(
            "segment stage g={g} exceeds spec stage G={}",
            spec.stage
        )));
    }
    let mut len = spec.span;
    for j in 1..=g {
        let factor = 1.0 - spec.removal_fraction(j);
        if !(factor > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "removal fraction at stage {j} is {} >= 1 (exponent {}); segments degenerate",
                spec.removal_fraction(j),
                spec.exponent(j)
            )));
        }
        len *= 0.5 * factor;
    }
    Ok(len)
}

/// A half-open barrier interval `[start, end)` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Explicit geometry of a stage-G layout: segment lengths `l₀…l_G`,
/// gap widths `d₁…d_G`, super-period spacings `s₁…s_G`, and (when
/// enumerated) the `2^G` barrier intervals.
#[derive(Debug, Clone)]
pub struct SegmentLayout {
    pub spec: PotentialSpec,
    /// `lengths[g]` = l_g, g = 0…G.
    pub lengths: Vec<f64>,
    /// `gaps[g-1]` = d_g = l_{g-1}·ρ^{-exponent(g)}, g = 1…G.
    pub gaps: Vec<f64>,
    /// `spacings[p-1]` = s_p = l_{G+1-p} + l_{G-p}·ρ^{-exponent(G+1-p)}, p = 1…G.
    pub spacings: Vec<f64>,
    /// The 2^G barrier intervals, sorted left to right. Empty when the
    /// layout was built without enumeration (large G closed-form path).
    pub intervals: Vec<Interval>,
}

impl SegmentLayout {
    pub fn stage(&self) -> u32 {
        self.spec.stage
    }

    /// Unit-cell width l_G.
    pub fn unit_width(&self) -> f64 {
        *self.lengths.last().unwrap()
    }

    /// Gap width d_g, 1-based.
    pub fn gap(&self, g: u32) -> Result<f64> {
        if g == 0 || g > self.stage() {
            return Err(Error::OutOfRange(format!(
                "gap index g={g} outside 1..={}",
                self.stage()
            )));
        }
        Ok(self.gaps[(g - 1) as usize])
    }

    /// Super-period spacing s_p, 1-based.
    pub fn spacing(&self, p: u32) -> Result<f64> {
        if p == 0 || p > self.stage() {
            return Err(Error::OutOfRange(format!(
                "spacing index p={p} outside 1..={}",
                self.stage()
            )));
        }
        Ok(self.spacings[(p - 1) as usize])
    }

    /// Total barrier measure, 2^G · l_G by construction.
    pub fn barrier_measure(&self) -> f64 {
        2f64.powi(self.stage() as i32) * self.unit_width()
    }
}

fn scales(spec: &PotentialSpec) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let g_max = spec.stage;
    let mut lengths = Vec::with_capacity(g_max as usize + 1);
    lengths.push(spec.span);
    let mut gaps = Vec::with_capacity(g_max as usize);
    for g in 1..=g_max {
        // segment_length validates the factor sign for us, but doing the
        // recursion here avoids re-multiplying the whole product per stage
        let frac = spec.removal_fraction(g);
        if !(1.0 - frac > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "removal fraction at stage {g} is {frac} >= 1 (exponent {}); segments degenerate",
                spec.exponent(g)
            )));
        }
        let prev = lengths[(g - 1) as usize];
        gaps.push(prev * frac);
        lengths.push(0.5 * prev * (1.0 - frac));
    }
    let mut spacings = Vec::with_capacity(g_max as usize);
    for p in 1..=g_max {
        let l_a = lengths[(g_max + 1 - p) as usize];
        let l_b = lengths[(g_max - p) as usize];
        spacings.push(l_a + l_b * spec.removal_fraction(g_max + 1 - p));
    }
    Ok((lengths, gaps, spacings))
}

/// Closed-form layout: scales only, no interval enumeration. No stage cap.
pub fn build_scales(spec: &PotentialSpec) -> Result<SegmentLayout> {
    spec.validate()?;
    let (lengths, gaps, spacings) = scales(spec)?;
    Ok(SegmentLayout {
        spec: spec.clone(),
        lengths,
        gaps,
        spacings,
        intervals: Vec::new(),
    })
}

/// Full layout with the 2^G barrier intervals generated by midpoint
/// removal. Intervals are split symmetrically (`[a, a+l_g)` and
/// `[b-l_g, b)`) so the interval set is exactly invariant under
/// `x ↦ L - x`.
pub fn build_layout(spec: &PotentialSpec) -> Result<SegmentLayout> {
    spec.validate()?;
    if spec.stage > MAX_ENUMERATED_STAGE {
        return Err(Error::StageTooLarge(spec.stage, MAX_ENUMERATED_STAGE));
    }
    let (lengths, gaps, spacings) = scales(spec)?;
    let mut starts = vec![0.0f64];
    for g in 1..=spec.stage {
        let parent = lengths[(g - 1) as usize];
        let child = lengths[g as usize];
        let mut next = Vec::with_capacity(starts.len() * 2);
        for &a in &starts {
            next.push(a);
            next.push(a + parent - child);
        }
        starts = next;
    }
    let unit = *lengths.last().unwrap();
    let intervals = starts
        .into_iter()
        .map(|a| Interval {
            start: a,
            end: a + unit,
        })
        .collect();
    Ok(SegmentLayout {
        spec: spec.clone(),
        lengths,
        gaps,
        spacings,
        intervals,
    })
}

/// Super-period spacing s_p from the closed forms, cross-checked:
/// the direct form `l_{G+1-p} + l_{G-p}·ρ^{-exponent(G+1-p)}` must agree
/// with the equivalent `(l_{G-p}/2)(1 + ρ^{-exponent(G+1-p)})` to within
/// rounding, otherwise the layout recursion is broken.
pub fn spacing(spec: &PotentialSpec, p: u32) -> Result<f64> {
    if p == 0 || p > spec.stage {
        return Err(Error::OutOfRange(format!(
            "spacing index p={p} outside 1..={}",
            spec.stage
        )));
    }
    let layout = build_scales(spec)?;
    let direct = layout.spacings[(p - 1) as usize];
    let frac = spec.removal_fraction(spec.stage + 1 - p);
    let half_form = 0.5 * layout.lengths[(spec.stage - p) as usize] * (1.0 + frac);
    let tol = 1e-12 * spec.span.max(1.0);
    if (direct - half_form).abs() > tol {
        return Err(Error::Inconsistent(format!(
            "spacing forms disagree at p={p}: {direct} vs {half_form}"
        )));
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(rho: f64, n: f64, stage: u32, v: f64, l: f64) -> PotentialSpec {
        PotentialSpec::new(rho, n, stage, v, l).unwrap()
    }

    #[test]
    fn segment_length_direct_substitution() {
        let s = spec(2.0, 1.0, 1, 1.0, 10.0);
        assert_relative_eq!(segment_length(&s, 1).unwrap(), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn segment_length_middle_thirds() {
        let s = spec(3.0, 0.0, 2, 1.0, 1.0);
        assert_relative_eq!(
            segment_length(&s, 2).unwrap(),
            1.0 / 9.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn segment_length_exponential_rho_frozen() {
        // (1/8)*10*(1-e^-1)(1-e^-4)(1-e^-9), evaluated at 40 digits
        let s = spec(std::f64::consts::E, 2.0, 3, 1.0, 10.0);
        assert_relative_eq!(
            segment_length(&s, 3).unwrap(),
            0.7755828573315908,
            max_relative = 1e-14
        );
    }

    #[test]
    fn segment_length_rejects_rho_at_most_one() {
        assert!(PotentialSpec::new(1.0, 1.0, 2, 1.0, 1.0).is_err());
        assert!(PotentialSpec::new(0.5, 1.0, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn q_pochhammer_small_cases() {
        assert_relative_eq!(q_pochhammer(0.5, 0.5, 1), 0.5);
        assert_relative_eq!(q_pochhammer(0.5, 0.5, 2), 0.375);
        assert_eq!(q_pochhammer(123.4, -5.6, 0), 1.0);
    }

    #[test]
    fn layout_single_stage_quarter_removed() {
        let layout = build_layout(&spec(4.0, 1.0, 1, 1.0, 1.0)).unwrap();
        assert_eq!(layout.intervals.len(), 2);
        assert_relative_eq!(layout.intervals[0].start, 0.0);
        assert_relative_eq!(layout.intervals[0].end, 0.375, max_relative = 1e-15);
        assert_relative_eq!(layout.intervals[1].start, 0.625, max_relative = 1e-15);
        assert_relative_eq!(layout.intervals[1].end, 1.0, max_relative = 1e-15);
        assert_relative_eq!(layout.gap(1).unwrap(), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn layout_cantor_thirds_stage_two() {
        let layout = build_layout(&spec(3.0, 0.0, 2, 1.0, 1.0)).unwrap();
        let expected = [
            (0.0, 1.0 / 9.0),
            (2.0 / 9.0, 1.0 / 3.0),
            (2.0 / 3.0, 7.0 / 9.0),
            (8.0 / 9.0, 1.0),
        ];
        assert_eq!(layout.intervals.len(), 4);
        for (iv, (a, b)) in layout.intervals.iter().zip(expected) {
            assert_relative_eq!(iv.start, a, max_relative = 1e-14, epsilon = 1e-15);
            assert_relative_eq!(iv.end, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn layout_measure_matches_product_formula() {
        let s = spec(2.0, 2.0, 3, 1.0, 10.0);
        let layout = build_layout(&s).unwrap();
        let measure: f64 = layout.intervals.iter().map(|iv| iv.width()).sum();
        let expected = 8.0 * segment_length(&s, 3).unwrap();
        assert_relative_eq!(measure, expected, max_relative = 1e-13);
    }

    #[test]
    fn spacing_trivial_cases() {
        assert_relative_eq!(
            spacing(&spec(4.0, 1.0, 1, 1.0, 1.0), 1).unwrap(),
            0.625,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            spacing(&spec(3.0, 0.0, 2, 1.0, 1.0), 2).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn spacing_dual_forms_agree() {
        // frozen from a 40-digit evaluation of both Eq.-style closed forms
        let s = spec(2.0, 2.0, 4, 1.0, 10.0);
        assert_relative_eq!(spacing(&s, 3).unwrap(), 1.328125, max_relative = 1e-14);
    }

    #[test]
    fn spacing_rejects_out_of_range() {
        let s = spec(2.0, 1.0, 3, 1.0, 1.0);
        assert!(spacing(&s, 0).is_err());
        assert!(spacing(&s, 4).is_err());
    }

    #[test]
    fn layout_rejects_degenerate_exponent() {
        // exponent poly fixed at 0 => removal fraction rho^0 = 1
        let s = spec(2.0, 1.0, 2, 1.0, 1.0)
            .with_exponent_poly(vec![0.0])
            .unwrap();
        assert!(build_layout(&s).is_err());
    }

    #[test]
    fn stage_cap_enforced_for_enumeration_only() {
        let s = spec(2.0, 1.0, 21, 1.0, 1.0);
        assert!(matches!(
            build_layout(&s),
            Err(Error::StageTooLarge(21, MAX_ENUMERATED_STAGE))
        ));
        assert!(build_scales(&s).is_ok());
    }

    #[test]
    fn spacing_measured_from_intervals() {
        let s = spec(2.7, 1.3, 4, 1.0, 7.0);
        let layout = build_layout(&s).unwrap();
        // s_p is the distance between the left edges of the first two
        // copies of the level-(p-1) sub-block
        for p in 1..=4u32 {
            let block = 1usize << (p - 1);
            let measured = layout.intervals[block].start - layout.intervals[0].start;
            assert_relative_eq!(
                measured,
                layout.spacing(p).unwrap(),
                max_relative = 1e-12,
                epsilon = 1e-12 * 7.0
            );
        }
    }
}
