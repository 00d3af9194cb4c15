//! Nonlocal means denoising with patch-distance weights.
//!
//! The distance between the patches around two pixels is the mean squared
//! difference over the `(2 delta + 1)^2 - 1` non-center offsets (the center
//! term is removed, which makes the noisy distance an unbiased estimate of
//! the clean distance plus `2 sigma^2`). Weights are either hard (indicator
//! of the distance against a threshold) or tapered (clipped exponential of
//! the excess over the noise floor), and the reference/candidate patches
//! can be read from the clean image at two oracle levels:
//!
//! * `none`: both patches noisy, threshold `2 sigma^2 + t`;
//! * `semi`: clean reference patch against noisy candidates, threshold
//!   `sigma^2 + t`;
//! * `full`: clean against clean, threshold `t`.
//!
//! # Acceleration
//!
//! For a fixed candidate offset `(a, b)` the distances for *all* reference
//! pixels are box sums of one squared-difference image, so each offset
//! costs `O(n^2)` via a prefix-sum table over a periodically extended copy
//! (duplicate-and-shift). Offsets are processed in deterministic batches:
//! contributions are computed in parallel but always accumulated in offset
//! order with row-major summation, so results do not depend on the number
//! of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;
use crate::noise::{context, standard_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Hard,
    Tapered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleLevel {
    None,
    Semi,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Candidates are all `n^2` pixels.
    Full,
    /// Candidates within a wrapped square window of the given halfwidth.
    Window(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlmParams {
    /// Patch half-size.
    pub delta: usize,
    /// Threshold slack added to the noise floor (hard weights).
    pub t: f64,
    /// Noise standard deviation the weights assume.
    pub sigma: f64,
    pub weight_kind: WeightKind,
    pub oracle: OracleLevel,
    pub search: SearchMode,
    /// Upper bound on tapered weights.
    pub taper_alpha: f64,
    /// Squared bandwidth of the tapered weight.
    pub taper_bandwidth: f64,
}

impl NlmParams {
    /// The rate-achieving parameter rule: `delta = max(1, ceil(2 (ln n)^(1/2
    /// + epsilon)))` and `t = 2 sigma^2 / (ln n)^(epsilon/2)`, hard weights
    /// over the full image.
    pub fn defaults(n: usize, epsilon: f64, sigma: f64) -> NlmParams {
        let ln = (n as f64).ln();
        let delta = (2.0 * ln.powf(0.5 + epsilon)).ceil().max(1.0) as usize;
        NlmParams {
            delta,
            t: 2.0 * sigma * sigma / ln.powf(0.5 * epsilon),
            sigma,
            weight_kind: WeightKind::Hard,
            oracle: OracleLevel::None,
            search: SearchMode::Full,
            taper_alpha: 1.0,
            taper_bandwidth: 2.0 / ln,
        }
    }

    /// Tapered-weight rule: `delta = ceil(2 ln n)` and bandwidth `2 / ln n`,
    /// so a unit clean distance produces mean weight near `n^(-1/2)`.
    pub fn tapered_defaults(n: usize, sigma: f64) -> NlmParams {
        let ln = (n as f64).ln();
        NlmParams {
            delta: (2.0 * ln).ceil().max(1.0) as usize,
            t: 0.0,
            sigma,
            weight_kind: WeightKind::Tapered,
            oracle: OracleLevel::None,
            search: SearchMode::Full,
            taper_alpha: 1.0,
            taper_bandwidth: 2.0 / ln,
        }
    }

    /// Number of non-center patch offsets.
    pub fn rho_sq(&self) -> f64 {
        let side = 2 * self.delta + 1;
        (side * side - 1) as f64
    }

    /// The part of the expected noisy distance contributed by noise alone:
    /// `2 sigma^2`, `sigma^2`, or 0 depending on the oracle level.
    pub fn center_bias(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.oracle {
            OracleLevel::None => 2.0 * s2,
            OracleLevel::Semi => s2,
            OracleLevel::Full => 0.0,
        }
    }

    /// Hard-weight acceptance threshold (noise floor plus slack).
    pub fn hard_threshold(&self) -> f64 {
        self.center_bias() + self.t
    }

    /// Parameter-rule sanity flags: positive slack and `delta <= n^0.3`.
    pub fn check_assumptions(&self, n: usize) -> AssumptionReport {
        AssumptionReport {
            delta_fits: 2 * self.delta + 1 <= n,
            threshold_positive: self.t > 0.0,
            delta_below_n03: (self.delta as f64) <= (n as f64).powf(0.3),
        }
    }

    #[inline]
    fn weight(&self, d_sq: f64, threshold: f64) -> f64 {
        match self.weight_kind {
            WeightKind::Hard => {
                if d_sq <= threshold {
                    1.0
                } else {
                    0.0
                }
            }
            WeightKind::Tapered => {
                let excess = (d_sq - self.center_bias()).max(0.0);
                let scaled = excess / self.taper_bandwidth;
                // exp(-40) < 1e-17: indistinguishable from zero downstream
                if scaled > 40.0 {
                    0.0
                } else {
                    self.taper_alpha.min((-scaled).exp())
                }
            }
        }
    }
}

/// Validator flags for the parameter-rule assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    pub delta_fits: bool,
    pub threshold_positive: bool,
    pub delta_below_n03: bool,
}

/// Patch distance between the neighborhoods of `(i, j)` in `ref_img` and
/// `(m, l)` in `cand_img`: mean squared difference over the non-center
/// offsets, with periodic wrapping. `delta` must be at least 1.
pub fn patch_distance(
    ref_img: &ImageGrid,
    cand_img: &ImageGrid,
    i: usize,
    j: usize,
    m: usize,
    l: usize,
    delta: usize,
) -> f64 {
    assert!(delta >= 1, "patch halfwidth must be at least 1");
    let d = delta as isize;
    let side = 2 * delta + 1;
    let rho_sq = (side * side - 1) as f64;
    let (i, j, m, l) = (i as isize, j as isize, m as isize, l as isize);
    let mut sum = 0.0;
    for q in -d..=d {
        for p in -d..=d {
            let va = ref_img.get_wrapped(i + p, j + q);
            let vb = cand_img.get_wrapped(m + p, l + q);
            let diff = va - vb;
            sum += diff * diff;
        }
    }
    let center = ref_img.get_wrapped(i, j) - cand_img.get_wrapped(m, l);
    (sum - center * center) / rho_sq
}

fn check_denoise_inputs(
    noisy: &ImageGrid,
    clean: Option<&ImageGrid>,
    params: &NlmParams,
) -> Result<()> {
    let n = noisy.n();
    if params.delta < 1 {
        return Err(domain("patch halfwidth must be at least 1"));
    }
    if 2 * params.delta + 1 > n {
        return Err(Error::DeltaTooLarge {
            delta: params.delta,
            n,
        });
    }
    if params.oracle != OracleLevel::None {
        match clean {
            None => return Err(Error::MissingCleanImage),
            Some(c) if c.n() != n => {
                return Err(domain("clean and noisy grids differ in size"))
            }
            _ => {}
        }
    }
    if params.weight_kind == WeightKind::Tapered
        && !(params.taper_bandwidth > 0.0 && params.taper_alpha > 0.0)
    {
        return Err(domain("tapered weights need positive alpha and bandwidth"));
    }
    if let SearchMode::Window(w) = params.search {
        if w < 1 {
            return Err(Error::WindowTooSmall);
        }
    }
    Ok(())
}

fn candidate_offsets(n: usize, search: SearchMode) -> Vec<(usize, usize)> {
    match search {
        SearchMode::Window(w) if 2 * w + 1 < n => {
            let wi = w as isize;
            let mut offsets = Vec::with_capacity((2 * w + 1) * (2 * w + 1));
            for db in -wi..=wi {
                for da in -wi..=wi {
                    offsets.push((
                        da.rem_euclid(n as isize) as usize,
                        db.rem_euclid(n as isize) as usize,
                    ));
                }
            }
            offsets
        }
        _ => {
            let mut offsets = Vec::with_capacity(n * n);
            for b in 0..n {
                for a in 0..n {
                    offsets.push((a, b));
                }
            }
            offsets
        }
    }
}

/// Per-thread scratch reused across offsets.
struct OffsetScratch {
    /// Window sums over the horizontal patch extent, per pixel.
    row_win: Vec<f64>,
    /// 1D prefix over one periodically extended row.
    row_prefix: Vec<f64>,
    /// Sliding vertical window sums for the current output row.
    col_win: Vec<f64>,
}

impl OffsetScratch {
    fn new(n: usize, delta: usize) -> Self {
        OffsetScratch {
            row_win: vec![0.0; n * n],
            row_prefix: vec![0.0; n + 2 * delta + 1],
            col_win: vec![0.0; n],
        }
    }
}

/// Weighted patch average over the search set.
///
/// In the hard modes the self weight is 1 whenever the self-distance passes
/// (always, except for rare noise excursions in semi-oracle mode); if every
/// weight is zero the noisy value is passed through unchanged.
pub fn nlm_denoise(
    noisy: &ImageGrid,
    clean: Option<&ImageGrid>,
    params: &NlmParams,
) -> Result<ImageGrid> {
    check_denoise_inputs(noisy, clean, params)?;
    let n = noisy.n();
    let (ref_img, cand_img): (&ImageGrid, &ImageGrid) = match params.oracle {
        OracleLevel::None => (noisy, noisy),
        OracleLevel::Semi => (clean.unwrap(), noisy),
        OracleLevel::Full => (clean.unwrap(), clean.unwrap()),
    };
    let offsets = candidate_offsets(n, params.search);
    let threshold = params.hard_threshold();
    let ydata = noisy.data();

    let mut num = vec![0.0; n * n];
    let mut den = vec![0.0; n * n];
    // Weight buffers for one batch of offsets, allocated once.
    let batch_size = (2 * rayon::current_num_threads()).max(4).min(offsets.len());
    let mut pool: Vec<Vec<f64>> = (0..batch_size).map(|_| vec![0.0; n * n]).collect();
    for batch in offsets.chunks(batch_size) {
        batch
            .par_iter()
            .zip(pool.par_iter_mut())
            .for_each_init(
                || OffsetScratch::new(n, params.delta),
                |scratch, (&(a, b), weights)| {
                    offset_weights(ref_img, cand_img, params, threshold, a, b, scratch, weights);
                },
            );
        // Accumulate in offset order (parallel over output rows) so the
        // result is independent of thread scheduling.
        num.par_chunks_mut(n)
            .zip(den.par_chunks_mut(n))
            .enumerate()
            .for_each(|(j, (num_row, den_row))| {
                for (k, &(a, b)) in batch.iter().enumerate() {
                    let weights = &pool[k][j * n..(j + 1) * n];
                    let jb = j + b - if j + b >= n { n } else { 0 };
                    let yrow = &ydata[jb * n..(jb + 1) * n];
                    let mut ia = a;
                    for i in 0..n {
                        num_row[i] += weights[i] * yrow[ia];
                        den_row[i] += weights[i];
                        ia += 1;
                        if ia == n {
                            ia = 0;
                        }
                    }
                }
            });
    }

    let mut out = ImageGrid::zeros(n);
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            out.set(
                i,
                j,
                if den[idx] > 0.0 {
                    num[idx] / den[idx]
                } else {
                    noisy.get(i, j)
                },
            );
        }
    }
    Ok(out)
}

/// Weights of every reference pixel against the candidate at offset
/// `(a, b)`.
///
/// Patch sums decompose separably: a 1D prefix along each periodically
/// extended row gives the horizontal window sums, and a sliding window
/// down the rows (vectorized across columns) gives the full box sums. The
/// center term is recomputed pointwise and removed.
fn offset_weights(
    ref_img: &ImageGrid,
    cand_img: &ImageGrid,
    params: &NlmParams,
    threshold: f64,
    a: usize,
    b: usize,
    scratch: &mut OffsetScratch,
    weights: &mut [f64],
) {
    let n = ref_img.n();
    let delta = params.delta;
    let side = 2 * delta + 1;
    let rho_sq = params.rho_sq();
    let rdata = ref_img.data();
    let cdata = cand_img.data();

    // Horizontal pass: row_win(i, j) = sum over p of sq((i+p) mod n, j)
    // where sq(i, j) = (ref(i, j) - cand((i+a) mod n, (j+b) mod n))^2.
    let prefix = &mut scratch.row_prefix;
    for j in 0..n {
        let jb = j + b - if j + b >= n { n } else { 0 };
        let rrow = &rdata[j * n..(j + 1) * n];
        let crow = &cdata[jb * n..(jb + 1) * n];
        prefix[0] = 0.0;
        let mut src = n - delta; // extended coordinate -delta, wrapped
        let mut src_a = (src + a) % n;
        for u in 0..n + 2 * delta {
            let diff = rrow[src] - crow[src_a];
            prefix[u + 1] = prefix[u] + diff * diff;
            src += 1;
            if src == n {
                src = 0;
            }
            src_a += 1;
            if src_a == n {
                src_a = 0;
            }
        }
        let wrow = &mut scratch.row_win[j * n..(j + 1) * n];
        for i in 0..n {
            wrow[i] = prefix[i + side] - prefix[i];
        }
    }

    // Vertical pass: slide the (2 delta + 1)-row window down the image,
    // updating every column at once; subtract the center term and weigh.
    let col_win = &mut scratch.col_win;
    col_win.fill(0.0);
    for q in 0..side {
        let row = (n - delta + q) % n;
        let wrow = &scratch.row_win[row * n..(row + 1) * n];
        for i in 0..n {
            col_win[i] += wrow[i];
        }
    }
    for j in 0..n {
        if j > 0 {
            let enter = (j + delta) % n;
            let leave = (j + n - delta - 1) % n;
            let enter_row = &scratch.row_win[enter * n..(enter + 1) * n];
            let leave_row = &scratch.row_win[leave * n..(leave + 1) * n];
            for i in 0..n {
                col_win[i] += enter_row[i] - leave_row[i];
            }
        }
        let jb = j + b - if j + b >= n { n } else { 0 };
        let rrow = &rdata[j * n..(j + 1) * n];
        let crow = &cdata[jb * n..(jb + 1) * n];
        let wrow = &mut weights[j * n..(j + 1) * n];
        let mut ia = a;
        for i in 0..n {
            let center = rrow[i] - crow[ia];
            let d_sq = (col_win[i] - center * center) / rho_sq;
            wrow[i] = params.weight(d_sq, threshold);
            ia += 1;
            if ia == n {
                ia = 0;
            }
        }
    }
}

/// Quadratic-time reference implementation used to validate the
/// accelerated path: every pair goes through [`patch_distance`] directly.
pub fn nlm_denoise_reference(
    noisy: &ImageGrid,
    clean: Option<&ImageGrid>,
    params: &NlmParams,
) -> Result<ImageGrid> {
    check_denoise_inputs(noisy, clean, params)?;
    let n = noisy.n();
    let (ref_img, cand_img): (&ImageGrid, &ImageGrid) = match params.oracle {
        OracleLevel::None => (noisy, noisy),
        OracleLevel::Semi => (clean.unwrap(), noisy),
        OracleLevel::Full => (clean.unwrap(), clean.unwrap()),
    };
    let offsets = candidate_offsets(n, params.search);
    let threshold = params.hard_threshold();
    let mut out = ImageGrid::zeros(n);
    for j in 0..n {
        for i in 0..n {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(a, b) in &offsets {
                let m = (i + a) % n;
                let l = (j + b) % n;
                let d_sq = patch_distance(ref_img, cand_img, i, j, m, l, params.delta);
                let weight = params.weight(d_sq, threshold);
                num += weight * noisy.get(m, l);
                den += weight;
            }
            out.set(i, j, if den > 0.0 { num / den } else { noisy.get(i, j) });
        }
    }
    Ok(out)
}

/// Monte Carlo mean (and standard error) of `weight(noisy distance)` for a
/// synthetic patch pair at clean distance `true_dist_sq` under independent
/// `N(0, sigma^2)` noise on both patches.
pub fn mc_mean_weight(
    true_dist_sq: f64,
    sigma: f64,
    delta: usize,
    weight: impl Fn(f64) -> f64,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(delta >= 1);
    let side = 2 * delta + 1;
    let elems = side * side;
    let center = elems / 2;
    let rho_sq = (elems - 1) as f64;
    let gap = true_dist_sq.sqrt();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for k in 0..trials {
        let mut dist = 0.0;
        for e in 0..elems {
            if e == center {
                continue;
            }
            let za = standard_normal(seed, context::PATCH_MC, k as u64, 2 * e as u64);
            let zb = standard_normal(seed, context::PATCH_MC, k as u64, 2 * e as u64 + 1);
            let diff = sigma * za - gap - sigma * zb;
            dist += diff * diff;
        }
        let w = weight(dist / rho_sq);
        sum += w;
        sumsq += w * w;
    }
    let mean = sum / trials as f64;
    let var = (sumsq / trials as f64 - mean * mean).max(0.0);
    (mean, (var / trials as f64).sqrt())
}

/// Monte Carlo estimate of the probability that the noisy distance between
/// two patches at the given clean distance stays at or below `threshold`.
pub fn pass_probability(
    true_dist_sq: f64,
    sigma: f64,
    delta: usize,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 1000 {
        return Err(domain("pass_probability needs at least 1000 trials"));
    }
    let (mean, _) = mc_mean_weight(
        true_dist_sq,
        sigma,
        delta,
        |d_sq| if d_sq <= threshold { 1.0 } else { 0.0 },
        trials,
        seed,
    );
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::EdgeContour;
    use crate::horizon::render;
    use crate::noise::{add_noise, NoiseSpec};

    fn half_image(n: usize) -> ImageGrid {
        render(&EdgeContour::constant(0.5).unwrap(), n).unwrap()
    }

    fn hard_params(delta: usize, t: f64, sigma: f64, oracle: OracleLevel) -> NlmParams {
        NlmParams {
            delta,
            t,
            sigma,
            weight_kind: WeightKind::Hard,
            oracle,
            search: SearchMode::Full,
            taper_alpha: 1.0,
            taper_bandwidth: 1.0,
        }
    }

    #[test]
    fn defaults_follow_the_rule() {
        let p = NlmParams::defaults(1024, 0.5, 1.0);
        assert_eq!(p.delta, 14);
        assert!((p.t - 1.2326041636199387).abs() < 1e-12);
        let p = NlmParams::defaults(64, 0.1, 0.5);
        assert_eq!(p.delta, 5);
        assert!((p.t - 0.4656087880839585).abs() < 1e-12);
        // epsilon -> 0: the slack approaches 2 sigma^2
        let p = NlmParams::defaults(3, 1e-9, 1.0);
        assert_eq!(p.delta, 3);
        assert!((p.t - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tapered_defaults_hit_the_b4_scale() {
        let p = NlmParams::tapered_defaults(55, 1.0);
        assert_eq!(p.delta, 9);
        assert!((p.taper_bandwidth - 0.4990850292584237).abs() < 1e-12);
        // weight at the noise floor is 1, one unit above is ~ n^{-1/2}
        assert_eq!(p.weight(p.center_bias(), f64::NAN), 1.0);
        let w = p.weight(p.center_bias() + 1.0, f64::NAN);
        assert!((w - 55.0f64.powf(-0.5)).abs() < 1e-3);
    }

    #[test]
    fn assumption_flags() {
        let p = NlmParams::defaults(64, 0.1, 0.5);
        let rep = p.check_assumptions(64);
        assert!(rep.delta_fits);
        assert!(rep.threshold_positive);
        // delta = 5 > 64^0.3 ~ 3.5
        assert!(!rep.delta_below_n03);
        assert!(p.check_assumptions(256).delta_fits);
    }

    #[test]
    fn patch_distance_basics() {
        let img = half_image(16);
        assert_eq!(patch_distance(&img, &img, 3, 3, 3, 3, 2), 0.0);
        // all-zero patch against all-one patch at delta = 1
        let zeros = ImageGrid::zeros(8);
        let ones = ImageGrid::from_fn(8, |_, _| 1.0);
        assert!((patch_distance(&zeros, &ones, 4, 4, 4, 4, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn patch_distance_is_symmetric_within_one_image() {
        let img = add_noise(&half_image(16), &NoiseSpec::new(0.5, 77, 0).unwrap());
        for &(i, j, m, l) in &[(2, 3, 9, 12), (0, 0, 15, 15), (5, 8, 5, 9)] {
            let ab = patch_distance(&img, &img, i, j, m, l, 2);
            let ba = patch_distance(&img, &img, m, l, i, j, 2);
            assert!((ab - ba).abs() < 1e-15);
        }
    }

    #[test]
    fn clean_distance_structure_across_the_edge() {
        // On the half-plane image the distance is controlled by the row
        // distance: cross-edge neighbors differ in 5r - 1 of 24 non-center
        // offsets (center removal spares one), same-side rows in 5r.
        let img = half_image(16);
        let j_above = 8;
        let d = |l: usize| patch_distance(&img, &img, 4, j_above, 10, l, 2);
        assert!((d(7) - 4.0 / 24.0).abs() < 1e-12); // cross, one row
        assert!((d(9) - 5.0 / 24.0).abs() < 1e-12); // same side, one row
        assert!((d(6) - 9.0 / 24.0).abs() < 1e-12); // cross, two rows
        assert!((d(10) - 10.0 / 24.0).abs() < 1e-12); // same side, two rows
        assert!((d(4) - 14.0 / 24.0).abs() < 1e-12); // deep cross side
        // a patch wrapped across the torus seam sees the second edge
        assert!((d(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_oracle_on_constant_image_is_global_mean() {
        let clean = ImageGrid::from_fn(12, |_, _| 0.4);
        let noisy = add_noise(&clean, &NoiseSpec::new(0.5, 3, 0).unwrap());
        let out = nlm_denoise(&noisy, Some(&clean), &hard_params(2, 0.1, 0.5, OracleLevel::Full))
            .unwrap();
        let mean = noisy.mean();
        for v in out.data() {
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn full_oracle_weight_structure_on_half_plane() {
        // t = 0.25 at delta = 2: interior same-side candidates are at clean
        // distance 0 and pass; every cross-side candidate of an interior
        // reference differs in at least 7 of 24 offsets and fails.
        let clean = half_image(16);
        let t = 0.25;
        let delta = 2;
        let interior_ref = (3usize, 12usize); // patch fully above the edge
        for m in 0..16 {
            for l in 0..16 {
                let d = patch_distance(&clean, &clean, interior_ref.0, interior_ref.1, m, l, delta);
                let cross_side = clean.get(m, l) >= 0.5;
                if cross_side {
                    assert!(d >= 7.0 / 24.0 - 1e-12, "({m},{l}): {d}");
                    assert!(d > t);
                }
                let cand_interior = l >= 8 + delta && l + delta < 16;
                if cand_interior {
                    assert!(d <= t, "({m},{l}): {d}");
                }
            }
        }
    }

    #[test]
    fn vanishing_noise_recovers_the_clean_image() {
        // With sigma ~ 0 and t below the smallest nonzero clean distance
        // (2 delta / rho^2 = 1/6 at delta = 2) only same-row candidates
        // pass, so the estimate collapses onto the clean values.
        let clean = half_image(16);
        let noisy = add_noise(&clean, &NoiseSpec::new(1e-12, 8, 0).unwrap());
        let out = nlm_denoise(&noisy, None, &hard_params(2, 0.1, 1e-12, OracleLevel::None)).unwrap();
        for j in 0..16 {
            for i in 0..16 {
                assert!((out.get(i, j) - clean.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn oracle_without_clean_image_is_rejected() {
        let noisy = half_image(8);
        for oracle in [OracleLevel::Semi, OracleLevel::Full] {
            assert!(matches!(
                nlm_denoise(&noisy, None, &hard_params(1, 0.1, 0.5, oracle)),
                Err(Error::MissingCleanImage)
            ));
        }
    }

    #[test]
    fn window_and_delta_validation() {
        let noisy = half_image(8);
        let mut p = hard_params(4, 0.1, 0.5, OracleLevel::None);
        assert!(matches!(
            nlm_denoise(&noisy, None, &p),
            Err(Error::DeltaTooLarge { .. })
        ));
        p.delta = 1;
        p.search = SearchMode::Window(0);
        assert!(matches!(
            nlm_denoise(&noisy, None, &p),
            Err(Error::WindowTooSmall)
        ));
    }

    #[test]
    fn accelerated_matches_reference() {
        let clean = half_image(16);
        let noisy = add_noise(&clean, &NoiseSpec::new(0.6, 19, 0).unwrap());
        let mut cases = vec![
            hard_params(2, 0.3, 0.6, OracleLevel::None),
            hard_params(2, 0.3, 0.6, OracleLevel::Semi),
            hard_params(3, 0.2, 0.6, OracleLevel::Full),
        ];
        let mut tapered = hard_params(2, 0.0, 0.6, OracleLevel::None);
        tapered.weight_kind = WeightKind::Tapered;
        tapered.taper_bandwidth = 0.5;
        cases.push(tapered);
        let mut windowed = hard_params(2, 0.3, 0.6, OracleLevel::None);
        windowed.search = SearchMode::Window(3);
        cases.push(windowed);
        for params in cases {
            let fast = nlm_denoise(&noisy, Some(&clean), &params).unwrap();
            let slow = nlm_denoise_reference(&noisy, Some(&clean), &params).unwrap();
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-10, "{params:?}");
            }
        }
    }

    #[test]
    fn output_is_a_convex_combination() {
        let clean = half_image(16);
        let noisy = add_noise(&clean, &NoiseSpec::new(1.0, 23, 0).unwrap());
        let out = nlm_denoise(&noisy, None, &hard_params(2, 0.5, 1.0, OracleLevel::None)).unwrap();
        let (lo, hi) = (noisy.min_value(), noisy.max_value());
        for v in out.data() {
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    #[test]
    fn pass_probability_examples() {
        // threshold at infinity always passes
        let p = pass_probability(0.7, 1.0, 2, f64::INFINITY, 1000, 1).unwrap();
        assert_eq!(p, 1.0);
        // concentrated patches at distance zero nearly always pass
        let p = pass_probability(0.0, 0.5, 8, 2.0 * 0.25 + 0.2, 2000, 2).unwrap();
        assert!(p > 0.95, "{p}");
        // unit clean distance almost never passes a noise-floor threshold
        let p = pass_probability(1.0, 0.5, 8, 2.0 * 0.25, 10_000, 3).unwrap();
        assert!(p < 0.01, "{p}");
        assert!(pass_probability(0.0, 0.5, 2, 1.0, 10, 4).is_err());
    }
}
