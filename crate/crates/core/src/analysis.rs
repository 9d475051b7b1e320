//! Derived phenomenology: transmission-resonance detection, saturation
//! of T with the power n, area-preserving height renormalization, and
//! the 1/k² reflection-scaling envelope.

use rayon::prelude::*;

use crate::engine::{transmission, transmission_with_layout};
use crate::error::{Error, Result};
use crate::geometry::{build_scales, segment_length, PotentialSpec};

const GOLDEN_INV: f64 = 0.618_033_988_749_894_8;

/// A detected transmission resonance: peak position and the distance
/// between the two threshold crossings around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub k_center: f64,
    pub width: f64,
}

#[derive(Debug, Clone)]
pub struct ResonanceList {
    pub resonances: Vec<Resonance>,
    pub threshold: f64,
    /// Set when every scanned point clears the threshold (e.g. V = 0);
    /// the single entry then spans the whole scan range.
    pub trivially_transparent: bool,
}

/// Least-squares fit of log₁₀R against log₁₀k.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub k_range: (f64, f64),
}

/// Stage-G height V_G = L·V₀/(2^G·l_G) keeping the total barrier area
/// V_G·2^G·l_G equal to V₀·L.
pub fn renormalized_height(spec: &PotentialSpec) -> Result<f64> {
    let l_g = segment_length(spec, spec.stage)?;
    Ok(spec.height * spec.span / (2f64.powi(spec.stage as i32) * l_g))
}

/// The spec with its height replaced by the area-preserving V_G.
pub fn renormalized_spec(spec: &PotentialSpec) -> Result<PotentialSpec> {
    let mut renorm = spec.clone();
    renorm.height = renormalized_height(spec)?;
    Ok(renorm)
}

/// R_G(k)/V₀² with the barrier height renormalized to V_G. Computed
/// from the exact engine; the asymptotic L²/(4k²)·ΠΩ² form is a test
/// target, not the implementation.
pub fn reflection_scaled(spec: &PotentialSpec, e: f64) -> Result<f64> {
    if spec.height == 0.0 {
        return Ok(0.0);
    }
    let renorm = renormalized_spec(spec)?;
    let point = transmission(&renorm, e)?;
    Ok(point.r / (spec.height * spec.height))
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

/// Envelope slope of the scaled reflection over [k_min, k_max].
///
/// R is evaluated on a log-spaced grid, the range is split into
/// log-equal windows, and the fit runs on the per-window maxima:
/// resonance dips in R are orders of magnitude deep and would dominate
/// a raw fit, while the scaling claim concerns the upper envelope.
/// Windowing keeps the envelope sampling uniform in log k; raw local
/// maxima would crowd the fit toward high k where oscillations are
/// dense.
pub fn fit_scaling(spec: &PotentialSpec, k_min: f64, k_max: f64, points: usize) -> Result<ScalingFit> {
    if points < 50 {
        return Err(Error::OutOfRange(format!(
            "scaling fit needs at least 50 points, got {points}"
        )));
    }
    if !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::OutOfRange(format!(
            "scaling fit needs 0 < k_min < k_max, got [{k_min}, {k_max}]"
        )));
    }
    let renorm = renormalized_spec(spec)?;
    let layout = build_scales(&renorm)?;
    let v0_sq = spec.height * spec.height;
    let log_step = (k_max / k_min).ln() / (points - 1) as f64;
    let values: Vec<(f64, f64)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let k = k_min * (log_step * i as f64).exp();
            let r = transmission_with_layout(&layout, k * k).map(|p| p.r / v0_sq)?;
            Ok((k, r))
        })
        .collect::<Result<_>>()?;
    let windows = (points / 100).clamp(8, 32);
    let per_window = points / windows;
    let mut ks = Vec::new();
    let mut rs = Vec::new();
    for chunk in values.chunks(per_window) {
        let best = chunk
            .iter()
            .filter(|(_, r)| *r > 0.0 && r.is_finite())
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some(&(k, r)) = best {
            ks.push(k.log10());
            rs.push(r.log10());
        }
    }
    if ks.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable envelope maxima over [{k_min}, {k_max}]",
            ks.len()
        )));
    }
    let (slope, intercept, r_squared) = linear_fit(&ks, &rs);
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        k_range: (k_min, k_max),
    })
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut a = hi - GOLDEN_INV * (hi - lo);
    let mut b = lo + GOLDEN_INV * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN_INV * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN_INV * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Bisection for the k where T crosses `threshold` between `below`
/// (T < threshold) and `above` (T >= threshold).
fn bisect_crossing(f: &impl Fn(f64) -> f64, mut below: f64, mut above: f64, threshold: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (below + above);
        if mid == below || mid == above {
            break;
        }
        if f(mid) >= threshold {
            above = mid;
        } else {
            below = mid;
        }
        if (above - below).abs() < 1e-13 * above.abs().max(1.0) {
            break;
        }
    }
    0.5 * (below + above)
}

/// Scans T on a uniform k-grid, then refines every above-threshold
/// bracket: golden-section maximization locates the peak to ~1e-8
/// relative and bisection of the two threshold crossings gives the
/// width. Resonances here are far narrower than any practical grid, so
/// the scan grid bounds the brackets rather than resolving the peaks.
pub fn find_resonances(
    spec: &PotentialSpec,
    k_min: f64,
    k_max: f64,
    threshold: f64,
    grid: usize,
) -> Result<ResonanceList> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::OutOfRange(format!(
            "resonance threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if grid < 2 || !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::OutOfRange(format!(
            "resonance scan needs k_max > k_min > 0 and grid >= 2, got [{k_min}, {k_max}] x {grid}"
        )));
    }
    let layout = build_scales(spec)?;
    let step = (k_max - k_min) / (grid - 1) as f64;
    let ts: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let k = k_min + step * i as f64;
            Ok(transmission_with_layout(&layout, k * k)?.t)
        })
        .collect::<Result<_>>()?;
    if ts.iter().all(|&t| t >= threshold) {
        return Ok(ResonanceList {
            resonances: vec![Resonance {
                k_center: 0.5 * (k_min + k_max),
                width: k_max - k_min,
            }],
            threshold,
            trivially_transparent: true,
        });
    }
    let t_of = |k: f64| {
        transmission_with_layout(&layout, k * k)
            .map(|p| p.t)
            .unwrap_or(0.0)
    };
    let mut resonances = Vec::new();
    let mut i = 0;
    while i < grid {
        if ts[i] < threshold {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < grid && ts[i] >= threshold {
            i += 1;
        }
        let run_end = i - 1;
        let lo = if run_start == 0 { k_min } else { k_min + step * (run_start - 1) as f64 };
        let hi = if run_end == grid - 1 { k_max } else { k_min + step * (run_end + 1) as f64 };
        let tol = 1e-8 * hi.abs().max(1.0);
        let (mut k_peak, mut t_peak) = golden_section_max(&t_of, lo, hi, tol);
        // narrow peaks can defeat a single unimodal search; fall back to
        // the best grid sample of the run if refinement lost it
        let (best_idx, &best_t) = ts[run_start..=run_end]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if best_t > t_peak {
            let kb = k_min + step * (run_start + best_idx) as f64;
            let half = 0.5 * step;
            let refined =
                golden_section_max(&t_of, (kb - half).max(k_min), (kb + half).min(k_max), tol);
            if refined.1 > best_t {
                (k_peak, t_peak) = refined;
            } else {
                (k_peak, t_peak) = (kb, best_t);
            }
        }
        if t_peak < threshold {
            continue;
        }
        let left = if run_start == 0 && ts[0] >= threshold {
            k_min
        } else {
            bisect_crossing(&t_of, lo, k_peak, threshold)
        };
        let right = if run_end == grid - 1 && ts[grid - 1] >= threshold {
            k_max
        } else {
            // bisect with roles flipped: walk from the peak outward
            let mut below = hi;
            let mut above = k_peak;
            for _ in 0..200 {
                let mid = 0.5 * (below + above);
                if mid == below || mid == above {
                    break;
                }
                if t_of(mid) >= threshold {
                    above = mid;
                } else {
                    below = mid;
                }
            }
            0.5 * (below + above)
        };
        resonances.push(Resonance {
            k_center: k_peak,
            width: right - left,
        });
    }
    Ok(ResonanceList {
        resonances,
        threshold,
        trivially_transparent: false,
    })
}

/// Sup over the k-grid of |T(n = n_a) - T(n = n_b)| for the base spec.
/// The sup-norm is the sensitive detector here: resonances are sharp
/// and any integral norm would wash them out.
pub fn saturation_metric(
    spec_base: &PotentialSpec,
    n_a: f64,
    n_b: f64,
    k_grid: &[f64],
) -> Result<f64> {
    if !(n_a > 0.0 && n_b > 0.0) {
        return Err(Error::OutOfRange(format!(
            "saturation powers must be positive, got ({n_a}, {n_b})"
        )));
    }
    let mut spec_a = spec_base.clone();
    spec_a.n = n_a;
    spec_a.exponent_poly = None;
    let mut spec_b = spec_a.clone();
    spec_b.n = n_b;
    let layout_a = build_scales(&spec_a)?;
    let layout_b = build_scales(&spec_b)?;
    let sup = k_grid
        .par_iter()
        .map(|&k| {
            let ta = transmission_with_layout(&layout_a, k * k)?.t;
            let tb = transmission_with_layout(&layout_b, k * k)?.t;
            Ok((ta - tb).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(rho: f64, n: f64, stage: u32, v: f64, l: f64) -> PotentialSpec {
        PotentialSpec::new(rho, n, stage, v, l).unwrap()
    }

    #[test]
    fn renormalized_height_stage_zero_unchanged() {
        let s = spec(2.0, 1.0, 0, 10.0, 3.0);
        assert_relative_eq!(renormalized_height(&s).unwrap(), 10.0);
    }

    #[test]
    fn renormalized_height_cantor_value() {
        let s = spec(3.0, 0.0, 2, 10.0, 1.0);
        assert_relative_eq!(renormalized_height(&s).unwrap(), 22.5, max_relative = 1e-13);
    }

    #[test]
    fn area_invariance() {
        for (rho, n, stage) in [(2.0, 1.0, 5u32), (1.6, -0.4, 3), (3.3, 2.0, 8)] {
            let s = spec(rho, n, stage, 7.0, 4.0);
            let vg = renormalized_height(&s).unwrap();
            let area = vg * 2f64.powi(stage as i32) * segment_length(&s, stage).unwrap();
            assert_relative_eq!(area, 7.0 * 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn reflection_scaled_zero_height() {
        let s = spec(2.0, 1.0, 3, 0.0, 1.0);
        assert_eq!(reflection_scaled(&s, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn reflection_scaled_bounded_envelope_at_large_k() {
        // R·k² stays bounded over two decades of k
        let s = spec(2.5, 1.0, 4, 10.0, 1.0);
        let mut max_rk2 = 0.0f64;
        for i in 0..400 {
            let k = 100.0 * (100f64).powf(i as f64 / 399.0);
            let r = reflection_scaled(&s, k * k).unwrap();
            max_rk2 = max_rk2.max(r * k * k);
        }
        assert!(max_rk2.is_finite() && max_rk2 > 0.0);
        assert!(max_rk2 < 10.0, "R k^2 envelope unexpectedly large: {max_rk2}");
    }

    #[test]
    fn single_barrier_scaling_slope_is_minus_four() {
        // one barrier at k >> sqrt(V): R ~ V^2 sin^2(kappa L)/(4 k^2 kappa^2),
        // so the sin^2 = 1 envelope falls off as k^-4
        let s = spec(2.0, 1.0, 0, 10.0, 1.0);
        let fit = fit_scaling(&s, 40.0, 1000.0, 4000).unwrap();
        assert!(
            (-4.05..=-3.95).contains(&fit.slope),
            "slope {} outside [-4.05, -3.95]",
            fit.slope
        );
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn fit_rejects_too_few_points() {
        let s = spec(2.0, 1.0, 0, 10.0, 1.0);
        assert!(fit_scaling(&s, 40.0, 1000.0, 10).is_err());
    }

    #[test]
    fn resonance_finder_trivially_transparent() {
        let s = spec(2.0, 1.0, 2, 0.0, 10.0);
        let list = find_resonances(&s, 2.0, 5.0, 0.999, 100).unwrap();
        assert!(list.trivially_transparent);
        assert_eq!(list.resonances.len(), 1);
        assert_relative_eq!(list.resonances[0].width, 3.0);
    }

    #[test]
    fn single_barrier_resonances_at_textbook_positions() {
        // T = 1 exactly at kappa*L = m*pi, i.e. k = sqrt(V + (m pi / L)^2)
        let v = 10.0;
        let l = 2.0;
        // scan stops at 6.5, where T dips below threshold, so the m = 4
        // resonance at k = 7.03 cannot leak in through its tail
        let s = spec(2.0, 1.0, 0, v, l);
        let list = find_resonances(&s, 3.3, 6.5, 0.99, 2000).unwrap();
        assert!(!list.trivially_transparent);
        let expected: Vec<f64> = (1..=4)
            .map(|m| (v + (m as f64 * std::f64::consts::PI / l).powi(2)).sqrt())
            .filter(|k| (3.3..6.5).contains(k))
            .collect();
        assert_eq!(list.resonances.len(), expected.len());
        for (found, want) in list.resonances.iter().zip(&expected) {
            assert_relative_eq!(found.k_center, *want, max_relative = 1e-6);
            assert!(found.width > 0.0);
        }
    }

    #[test]
    fn resonance_centers_reproduce_threshold() {
        let s = spec(std::f64::consts::E, 1.0, 2, 10.0, 10.0);
        let list = find_resonances(&s, 2.0, 5.0, 0.995, 4000).unwrap();
        assert!(!list.resonances.is_empty());
        for r in &list.resonances {
            let t = transmission(&s, r.k_center * r.k_center).unwrap().t;
            assert!(t >= 0.995, "reported center k={} has T={}", r.k_center, t);
            assert!(r.width > 0.0);
        }
    }

    #[test]
    fn saturation_metric_identical_powers_is_zero() {
        let s = spec(1.5, 1.0, 3, 10.0, 100.0);
        let grid: Vec<f64> = (0..100).map(|i| 2.0 + 8.0 * i as f64 / 99.0).collect();
        assert_eq!(saturation_metric(&s, 2.0, 2.0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn saturation_metric_decreases_for_large_powers() {
        let s = spec(1.5, 1.0, 3, 10.0, 100.0);
        let grid: Vec<f64> = (0..500).map(|i| 2.0 + 8.0 * i as f64 / 499.0).collect();
        let low = saturation_metric(&s, 1.0, 3.0, &grid).unwrap();
        let high = saturation_metric(&s, 8.0, 10.0, &grid).unwrap();
        assert!(high < low, "metric(8,10)={high} not below metric(1,3)={low}");
    }

    #[test]
    fn saturation_approaches_two_block_limit() {
        // exponent -> infinity: stages beyond the first remove nothing,
        // so the layout tends to two blocks of width l1 at the span ends
        let l = 10.0;
        let rho = 2.0;
        let v = 10.0;
        let s = spec(rho, 12.0, 3, v, l);
        let l1 = 0.5 * l * (1.0 - 1.0 / rho);
        let limit = spec(rho, 1.0, 1, v, l);
        let mut sup = 0.0f64;
        for i in 0..400 {
            let k: f64 = 1.5 + 6.0 * i as f64 / 399.0;
            let t = transmission(&s, k * k).unwrap().t;
            let t_limit = transmission(&limit, k * k).unwrap().t;
            sup = sup.max((t - t_limit).abs());
        }
        assert!(l1 > 0.0);
        assert!(sup < 1e-3, "sup deviation from limit layout: {sup}");
    }
}
