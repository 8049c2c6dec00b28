//! Set and function transformations used by the optimizer and by the
//! symmetry-breaking constructions: bathtub thresholding of a field at a
//! prescribed volume, two-sided monotone rearrangement in 1D, Schwarz
//! rearrangement of radial sets, the half-to-whole stretch map of the unit
//! ball, and the radius solve for a cap meeting the boundary circle
//! orthogonally.

use crate::assembly::Weight;
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Union of disjoint concentric rings {r : r_lo ≤ r < r_hi} inside the
/// centered ball of radius `domain_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRings {
    pub rings: Vec<[f64; 2]>,
    pub domain_radius: f64,
}

impl RadialRings {
    pub fn new(rings: Vec<[f64; 2]>, domain_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0) {
            return Err(Error::invalid("domain radius must be positive"));
        }
        let mut prev_hi = 0.0;
        for &[lo, hi] in &rings {
            if !(0.0 <= lo && lo < hi && hi <= domain_radius + 1e-12 * domain_radius) {
                return Err(Error::invalid(format!("bad ring [{lo}, {hi}) in radius {domain_radius}")));
            }
            if lo < prev_hi {
                return Err(Error::invalid(format!("ring [{lo}, {hi}) overlaps its predecessor")));
            }
            prev_hi = hi;
        }
        Ok(RadialRings { rings, domain_radius })
    }

    /// Centered ball of the given radius.
    pub fn ball(r0: f64, domain_radius: f64) -> Result<Self> {
        RadialRings::new(vec![[0.0, r0]], domain_radius)
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        self.rings.iter().any(|&[lo, hi]| r >= lo && r < hi)
    }

    /// N-volume in closed form, Σ ω_N (r_hi^N − r_lo^N).
    pub fn nvolume(&self, n_dim: u32) -> f64 {
        unit_ball_volume(n_dim)
            * self
                .rings
                .iter()
                .map(|&[lo, hi]| hi.powi(n_dim as i32) - lo.powi(n_dim as i32))
                .sum::<f64>()
    }
}

/// Volume of the unit ball in R^N (ω_N = ω_{N−2}·2π/N).
pub fn unit_ball_volume(n_dim: u32) -> f64 {
    match n_dim {
        0 => 1.0,
        1 => 2.0,
        n => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Piece of disk: E = B(p, r_c) ∩ B(0, R) with |p| = √(R² + r_c²), which
/// makes the two circles meet orthogonally. The cap center sits on the
/// positive x-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskCap {
    pub domain_radius: f64,
    pub cap_radius: f64,
}

impl DiskCap {
    pub fn new(domain_radius: f64, cap_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0 && cap_radius > 0.0) {
            return Err(Error::invalid("disk cap radii must be positive"));
        }
        Ok(DiskCap { domain_radius, cap_radius })
    }

    /// Distance from the domain center to the cap center.
    pub fn center_distance(&self) -> f64 {
        (self.domain_radius.powi(2) + self.cap_radius.powi(2)).sqrt()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let d = self.center_distance();
        let dx = p[0] - d;
        dx * dx + p[1] * p[1] < self.cap_radius * self.cap_radius
    }

    /// Exact area of E: R²·arcsin(r_c/√(R²+r_c²)) + r_c²·arcsin(R/√(R²+r_c²)) − r_c·R.
    pub fn area(&self) -> f64 {
        cap_area(self.domain_radius, self.cap_radius)
    }
}

fn cap_area(r_dom: f64, r_cap: f64) -> f64 {
    let hyp = (r_dom * r_dom + r_cap * r_cap).sqrt();
    r_dom * r_dom * (r_cap / hyp).asin() + r_cap * r_cap * (r_dom / hyp).asin() - r_cap * r_dom
}

/// Solve for the cap radius r_c with |E| = c·πR². The area is increasing
/// in r_c and saturates at πR²/2, so a solution requires c < 1/2.
pub fn cap_radius_from_fraction(r_dom: f64, c: f64) -> Result<DiskCap> {
    if !(r_dom > 0.0) {
        return Err(Error::invalid("domain radius must be positive"));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("volume fraction must lie in (0,1), got {c}")));
    }
    let target = c * std::f64::consts::PI * r_dom * r_dom;
    if c >= 0.5 {
        return Err(Error::invalid(format!(
            "an orthogonal cap covers less than half the disk; c = {c} is unreachable"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 10.0 * r_dom * c / (1.0 - c);
    let mut grow = 0;
    while cap_area(r_dom, hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::numeric("cap radius bracket expansion failed"));
        }
    }
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if cap_area(r_dom, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DiskCap::new(r_dom, 0.5 * (lo + hi))
}

/// Greedy selection by decreasing element score until the cumulative
/// measure first reaches `target_volume`; ties broken by ascending element
/// index. Returns the mask, the score of the last element taken (the
/// threshold α), and the selected volume.
pub fn select_by_element_scores(
    mesh: &Mesh,
    scores: &[f64],
    target_volume: f64,
) -> (Vec<bool>, f64, f64) {
    assert_eq!(scores.len(), mesh.n_elements());
    let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected = vec![false; mesh.n_elements()];
    let mut volume = 0.0;
    let mut alpha = f64::INFINITY;
    for &e in &order {
        selected[e] = true;
        volume += mesh.element_measure[e];
        alpha = scores[e];
        if volume >= target_volume {
            break;
        }
    }
    (selected, alpha, volume)
}

/// Greedy bathtub step: select elements by decreasing centroid value of
/// `phi` until the cumulative measure first reaches `target_volume`.
/// Returns the bang-bang weight of the selection and the threshold α.
pub fn bathtub_threshold(
    mesh: &Mesh,
    phi: &[f64],
    target_volume: f64,
    kappa: f64,
) -> Result<(Weight, f64)> {
    let total = mesh.total_measure();
    if !(target_volume > 0.0 && target_volume < total) {
        return Err(Error::invalid(format!(
            "target volume {target_volume} outside (0, {total})"
        )));
    }
    let values = mesh.centroid_values(phi);
    let (selected, alpha, _) = select_by_element_scores(mesh, &values, target_volume);
    let weight = Weight::bang_bang(mesh, kappa, &selected)?;
    Ok((weight, alpha))
}

/// Two-sided monotone rearrangement of per-element (value, measure) pairs:
/// positions 0..=peak are reordered so values ascend, positions after the
/// peak so values descend. Equimeasurable on each side by construction.
pub fn monotone_two_sided_1d(
    values: &[f64],
    measures: &[f64],
    peak_index: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != measures.len() {
        return Err(Error::invalid("values/measures length mismatch"));
    }
    if peak_index >= values.len() {
        return Err(Error::invalid(format!(
            "peak index {peak_index} out of range {}",
            values.len()
        )));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(measures.iter().copied()).collect();
    let (left, right) = pairs.split_at_mut(peak_index + 1);
    left.sort_by(|a, b| a.0.total_cmp(&b.0));
    right.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs.into_iter().unzip())
}

/// Schwarz rearrangement of a radial set: the centered ball with the same
/// N-volume, r₀ = (Σ (r_hi^N − r_lo^N))^(1/N).
pub fn schwarz_radial(rings: &RadialRings, n_dim: u32) -> RadialRings {
    let power: f64 = rings
        .rings
        .iter()
        .map(|&[lo, hi]| hi.powi(n_dim as i32) - lo.powi(n_dim as i32))
        .sum();
    let r0 = power.powf(1.0 / n_dim as f64);
    RadialRings {
        rings: vec![[0.0, r0]],
        domain_radius: rings.domain_radius,
    }
}

/// The stretched set Ê on the unit disk: (x₁, x') ∈ Ê iff
/// ((x₁ + f(x'))/2, x') ∈ E with f(x') = √(1 − |x'|²). Membership is
/// analytic (never interpolated), so indicator weights built from it stay
/// sharp.
#[derive(Debug, Clone)]
pub struct StretchedSet {
    rings: RadialRings,
}

/// Build the stretch of a radially symmetric set; the domain must be the
/// unit ball.
pub fn stretch_disk(rings: &RadialRings) -> Result<StretchedSet> {
    if (rings.domain_radius - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "stretch map is defined on the unit ball, got radius {}",
            rings.domain_radius
        )));
    }
    Ok(StretchedSet { rings: rings.clone() })
}

impl StretchedSet {
    /// Membership of a point of the closed unit ball in Ê.
    pub fn contains(&self, p: [f64; 2]) -> Result<bool> {
        let rr = p[0] * p[0] + p[1] * p[1];
        if rr > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "point ({}, {}) lies outside the closed unit ball",
                p[0], p[1]
            )));
        }
        let f = (1.0 - p[1] * p[1]).max(0.0).sqrt();
        let x1 = 0.5 * (p[0] + f);
        let r = (x1 * x1 + p[1] * p[1]).sqrt();
        Ok(self.rings.contains_radius(r))
    }
}
