//! The twenty trajectory measures.
//!
//! Each measure approximates a property of the unknown underlying function
//! from its samples: integrals use the trapezoidal rule, derivatives use the
//! stencils in [`crate::trajectory`].
//!
//! | id  | measure                                        | `(a, b)` scaling |
//! |-----|------------------------------------------------|------------------|
//! | m1  | maximum                                        | (1, 0)           |
//! | m2  | minimum                                        | (1, 0)           |
//! | m3  | range                                          | (1, 0)           |
//! | m4  | mean                                           | (1, 0)           |
//! | m5  | standard deviation                             | (1, 0)           |
//! | m6  | slope of the best affine approximation         | (1, -1)          |
//! | m7  | intercept of the best affine approximation     | (1, 0)           |
//! | m8  | proportion of variance explained by the line   | (0, 0)           |
//! | m9  | rate of crossings of the line                  | (0, -1)          |
//! | m10 | net variation per unit time                    | (1, -1)          |
//! | m11 | late-minus-early variation contrast            | (1, 0)           |
//! | m12 | total variation per unit time                  | (1, -1)          |
//! | m13 | spikiness                                      | (0, 0)           |
//! | m14 | maximum of the first derivative                | (1, -1)          |
//! | m15 | minimum of the first derivative                | (1, -1)          |
//! | m16 | standard deviation of the first derivative     | (1, -1)          |
//! | m17 | net variation of the first derivative per time | (1, -2)          |
//! | m18 | maximum of the second derivative               | (1, -2)          |
//! | m19 | minimum of the second derivative               | (1, -2)          |
//! | m20 | standard deviation of the second derivative    | (1, -2)          |
//!
//! Scaling values by `α₁` and times by `α₂` multiplies a measure by `α₁^a α₂^b`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::trajectory::{
    derivative_stencil, trapezoid, trapezoid_mean, DerivativeProfile, DerivativeWeighting,
    Trajectory,
};

pub const MEASURE_COUNT: usize = 20;

const NAMES: [&str; MEASURE_COUNT] = [
    "m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9", "m10", "m11", "m12", "m13", "m14",
    "m15", "m16", "m17", "m18", "m19", "m20",
];

const DESCRIPTIONS: [&str; MEASURE_COUNT] = [
    "maximum",
    "minimum",
    "range",
    "mean",
    "standard deviation",
    "slope of best affine approximation",
    "intercept of best affine approximation",
    "variance explained by affine approximation",
    "rate of crossings of affine approximation",
    "net variation per unit time",
    "late vs early variation contrast",
    "total variation per unit time",
    "spikiness",
    "maximum of first derivative",
    "minimum of first derivative",
    "standard deviation of first derivative",
    "net variation of first derivative per unit time",
    "maximum of second derivative",
    "minimum of second derivative",
    "standard deviation of second derivative",
];

const SCALING: [(i32, i32); MEASURE_COUNT] = [
    (1, 0),
    (1, 0),
    (1, 0),
    (1, 0),
    (1, 0),
    (1, -1),
    (1, 0),
    (0, 0),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, -1),
    (0, 0),
    (1, -1),
    (1, -1),
    (1, -1),
    (1, -2),
    (1, -2),
    (1, -2),
    (1, -2),
];

/// One of the twenty measures, `m1`..`m20`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasureId(u8);

impl MeasureId {
    /// `number` is the 1-based measure number.
    pub const fn new(number: u8) -> Option<Self> {
        if number >= 1 && number as usize <= MEASURE_COUNT {
            Some(Self(number))
        } else {
            None
        }
    }

    pub const fn number(self) -> u8 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn as_str(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn description(self) -> &'static str {
        DESCRIPTIONS[self.index()]
    }

    /// Exponents `(a, b)` with `m[α₁y, α₂t] = α₁^a α₂^b m[y, t]`.
    pub fn scaling_exponents(self) -> (i32, i32) {
        SCALING[self.index()]
    }

    /// Unchanged when a constant is added to every value.
    pub fn is_vertically_invariant(self) -> bool {
        !matches!(self.0, 1 | 2 | 4 | 7)
    }

    /// Unchanged when a constant is added to every time.
    pub fn is_horizontally_invariant(self) -> bool {
        self.0 != 7
    }

    pub fn all() -> impl Iterator<Item = MeasureId> {
        (1..=MEASURE_COUNT as u8).map(MeasureId)
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(s.trim()))
            .map(|i| MeasureId(i as u8 + 1))
            .ok_or(Error::InvalidParameter("unknown measure id"))
    }
}

/// A subset of the twenty measures, iterated in id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MeasureSet(u32);

impl MeasureSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    pub const fn all() -> Self {
        Self((1 << MEASURE_COUNT) - 1)
    }

    /// Everything except the position-dependent measures m1, m2, m4, m7.
    pub const fn shape_only() -> Self {
        Self(Self::all().0 & !(1 | 1 << 1 | 1 << 3 | 1 << 6))
    }

    pub fn insert(&mut self, id: MeasureId) {
        self.0 |= 1 << id.index();
    }

    pub fn remove(&mut self, id: MeasureId) {
        self.0 &= !(1 << id.index());
    }

    pub fn contains(self, id: MeasureId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    fn contains_any(self, numbers: &[u8]) -> bool {
        numbers.iter().any(|&k| self.0 & (1 << (k - 1)) != 0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = MeasureId> {
        MeasureId::all().filter(move |id| self.contains(*id))
    }
}

impl FromIterator<MeasureId> for MeasureSet {
    fn from_iter<I: IntoIterator<Item = MeasureId>>(iter: I) -> Self {
        let mut set = MeasureSet::empty();
        for id in iter {
            set.insert(id);
        }
        set
    }
}

/// Options shared by all measure computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    pub weighting: DerivativeWeighting,
    /// Split time `t*` for m11; `None` uses `(t_1 + t_N) / 2`.
    pub midpoint: Option<f64>,
    /// Half-width of the band around the mean treated as "on the mean" by m13.
    /// Zero means exact floating-point equality.
    pub mean_tolerance: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            weighting: DerivativeWeighting::Proximity,
            midpoint: None,
            mean_tolerance: 0.0,
        }
    }
}

/// Values of the selected measures for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    values: [Option<f64>; MEASURE_COUNT],
    /// Observation time used as the split for m11, when m11 was computed.
    pub midpoint_used: Option<f64>,
}

impl MeasureVector {
    pub fn get(&self, id: MeasureId) -> Option<f64> {
        self.values[id.index()]
    }

    pub fn computed_mask(&self) -> MeasureSet {
        MeasureId::all()
            .filter(|id| self.values[id.index()].is_some())
            .collect()
    }

    /// Computed values in id order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    fn set(&mut self, number: u8, value: f64) {
        self.values[number as usize - 1] = Some(value);
    }
}

/// Best affine approximation under the trapezoid-discretised L² objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// m1..m5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicMeasures {
    pub max: f64,
    pub min: f64,
    pub range: f64,
    pub mean: f64,
    pub sd: f64,
}

/// m6..m8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMeasures {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// m10..m12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationMeasures {
    pub net: f64,
    pub contrast: f64,
    pub total: f64,
    /// Observation time closest to the requested split.
    pub midpoint_used: f64,
}

/// Max, min and standard deviation of a derivative profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileStats {
    pub max: f64,
    pub min: f64,
    pub sd: f64,
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&y| y == values[0])
}

/// m4, the trapezoid mean of the values over `[t_1, t_N]`.
pub fn trajectory_mean(traj: &Trajectory) -> f64 {
    let y = traj.values();
    if is_constant(y) {
        return y[0];
    }
    // shift by y_1 so large offsets do not swamp the increments
    let shifted: Vec<f64> = y.iter().map(|v| v - y[0]).collect();
    y[0] + trapezoid_mean(traj.times(), &shifted)
}

/// m1..m5.
pub fn basic_measures(traj: &Trajectory) -> BasicMeasures {
    let y = traj.values();
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = trajectory_mean(traj);
    let sd = if max == min {
        0.0
    } else {
        let sq: Vec<f64> = y.iter().map(|v| (v - mean) * (v - mean)).collect();
        libm::sqrt(trapezoid_mean(traj.times(), &sq))
    };
    BasicMeasures {
        max,
        min,
        range: max - min,
        mean,
        sd,
    }
}

/// Closed-form minimiser of the trapezoid-discretised squared distance between
/// the trajectory and a line.
///
/// The sums are evaluated in coordinates shifted by `(t_1, y_1)`; the
/// minimiser is equivariant under that shift, and it keeps the cancellation in
/// the numerator and denominator small when times or values carry a large
/// offset. `fitted` and `residuals` are evaluated in the same shifted frame.
pub fn affine_fit(traj: &Trajectory) -> Result<AffineFit> {
    let t = traj.times();
    let y = traj.values();
    let (t0, y0) = (t[0], y[0]);
    let s: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let z: Vec<f64> = y.iter().map(|v| v - y0).collect();
    let span = s[s.len() - 1];

    let (mut sum_t, mut sum_y, mut sum_tt, mut sum_ty) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..s.len() - 1 {
        let dt = s[j + 1] - s[j];
        sum_t += 0.5 * (s[j] + s[j + 1]) * dt;
        sum_y += 0.5 * (z[j] + z[j + 1]) * dt;
        sum_tt += 0.5 * (s[j] * s[j] + s[j + 1] * s[j + 1]) * dt;
        sum_ty += 0.5 * (s[j] * z[j] + s[j + 1] * z[j + 1]) * dt;
    }
    let denominator = sum_tt - sum_t * sum_t / span;
    if !(denominator > f64::EPSILON * span * span * span) {
        return Err(Error::DegenerateTimeSpread);
    }
    let slope = (sum_ty - sum_t * sum_y / span) / denominator;
    let shifted_intercept = (sum_y - slope * sum_t) / span;

    let fitted_shifted: Vec<f64> = s.iter().map(|sj| shifted_intercept + slope * sj).collect();
    let residuals = z
        .iter()
        .zip(&fitted_shifted)
        .map(|(zj, fj)| zj - fj)
        .collect();
    Ok(AffineFit {
        slope,
        intercept: y0 + shifted_intercept - slope * t0,
        fitted: fitted_shifted.iter().map(|f| y0 + f).collect(),
        residuals,
    })
}

/// m6..m8. `basic` must come from the same trajectory as `fit`.
pub fn affine_measures(traj: &Trajectory, fit: &AffineFit, basic: &BasicMeasures) -> AffineMeasures {
    let r_squared = if basic.sd == 0.0 {
        1.0
    } else {
        let y0 = traj.values()[0];
        let offset = basic.mean - y0;
        let sq: Vec<f64> = fit
            .fitted
            .iter()
            .map(|f| {
                let d = (f - y0) - offset;
                d * d
            })
            .collect();
        let explained = trapezoid(traj.times(), &sq) / traj.span();
        (explained / (basic.sd * basic.sd)).clamp(0.0, 1.0)
    };
    AffineMeasures {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared,
    }
}

/// Residuals this small relative to the largest |y| are treated as zero by m9.
const RESIDUAL_ZERO_RELATIVE: f64 = 1e-10;

/// m9: sign changes of the residuals (skipping zeros) per unit time.
pub fn crossing_rate(traj: &Trajectory, fit: &AffineFit) -> f64 {
    let scale = traj.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero = RESIDUAL_ZERO_RELATIVE * scale;
    let sign = |r: f64| {
        if r > zero {
            1i8
        } else if r < -zero {
            -1
        } else {
            0
        }
    };
    let signs: Vec<i8> = fit.residuals.iter().map(|&r| sign(r)).collect();
    let mut crossings = 0usize;
    let mut next_nonzero = 0i8;
    // walk backwards so each position knows the next nonzero sign after it
    for j in (0..signs.len()).rev() {
        if j + 1 < signs.len() && signs[j] != 0 && signs[j] * next_nonzero < 0 {
            crossings += 1;
        }
        if signs[j] != 0 {
            next_nonzero = signs[j];
        }
    }
    crossings as f64 / traj.span()
}

/// m10..m12.
///
/// The contrast is `y_N - 2 y_m + y_1`, the expansion of
/// `[y_N - y_m] - [y_m - y_1]`, where `t_m` is the observation closest to the
/// split time (ties go to the earlier observation).
pub fn variation_measures(traj: &Trajectory, midpoint: Option<f64>) -> Result<VariationMeasures> {
    let t = traj.times();
    let y = traj.values();
    let n = y.len();
    let (start, end) = (t[0], t[n - 1]);
    let span = end - start;
    let split = match midpoint {
        Some(m) if !(m > start && m < end) => {
            return Err(Error::MidpointOutOfRange {
                midpoint: m,
                start,
                end,
            })
        }
        Some(m) => m,
        None => 0.5 * (start + end),
    };
    let tie = 1e-12 * span;
    let mut best = 0;
    for j in 1..n {
        if (t[j] - split).abs() < (t[best] - split).abs() - tie {
            best = j;
        }
    }
    let total: f64 = y.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(VariationMeasures {
        net: (y[n - 1] - y[0]) / span,
        contrast: y[n - 1] - 2.0 * y[best] + y[0],
        total: total / span,
        midpoint_used: t[best],
    })
}

/// m13: `(|S+| - |S-|) / (|S+| + |S-|)` from the time attributed to the
/// trajectory being above and below its mean `mean`.
///
/// An observation strictly off the mean owns the half-intervals on both of its
/// sides. An observation on the mean (within `tolerance`) gives each adjacent
/// half-interval to the side its neighbour lies on.
pub fn spikiness(traj: &Trajectory, mean: f64, tolerance: f64) -> f64 {
    let t = traj.times();
    let y = traj.values();
    let n = y.len();
    if is_constant(y) {
        return 0.0;
    }
    let side = |j: usize| {
        let d = y[j] - mean;
        if d > tolerance {
            1i8
        } else if d < -tolerance {
            -1
        } else {
            0
        }
    };
    let (mut above, mut below) = (0.0, 0.0);
    let mut credit = |s: i8, width: f64| match s {
        1 => above += width,
        -1 => below += width,
        _ => {}
    };
    for j in 0..n {
        let left = if j > 0 { 0.5 * (t[j] - t[j - 1]) } else { 0.0 };
        let right = if j + 1 < n { 0.5 * (t[j + 1] - t[j]) } else { 0.0 };
        match side(j) {
            0 => {
                if j > 0 {
                    credit(side(j - 1), left);
                }
                if j + 1 < n {
                    credit(side(j + 1), right);
                }
            }
            s => credit(s, left + right),
        }
    }
    let total = above + below;
    if total == 0.0 {
        0.0
    } else {
        (above - below) / total
    }
}

/// Max, min and spread of a derivative profile. The centring mean is the
/// left Riemann sum `sum_{j<N} d_j Δt_j / (t_N - t_1)`; the spread is the
/// square root of the trapezoid mean of squared deviations.
pub fn profile_stats(times: &[f64], d: &[f64]) -> ProfileStats {
    let span = times[times.len() - 1] - times[0];
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let centre: f64 = times
        .windows(2)
        .zip(d)
        .map(|(w, dj)| dj * (w[1] - w[0]))
        .sum::<f64>()
        / span;
    // a profile flat to within roundoff has no spread
    let sd = if max - min <= 1e-12 * max.abs().max(min.abs()) {
        0.0
    } else {
        let sq: Vec<f64> = d.iter().map(|v| (v - centre) * (v - centre)).collect();
        libm::sqrt(trapezoid(times, &sq) / span)
    };
    ProfileStats { max, min, sd }
}

/// m14..m17 as `(stats, net)`.
pub fn derivative_measures(traj: &Trajectory, profile: &DerivativeProfile) -> (ProfileStats, f64) {
    let d = &profile.d1;
    let net = (d[d.len() - 1] - d[0]) / traj.span();
    (profile_stats(traj.times(), d), net)
}

/// m18..m20.
pub fn second_derivative_measures(traj: &Trajectory, profile: &DerivativeProfile) -> ProfileStats {
    profile_stats(traj.times(), &profile.d2)
}

/// Computes exactly the selected measures, sharing intermediate results.
pub fn compute_measure_vector(
    traj: &Trajectory,
    selection: MeasureSet,
    config: &MeasureConfig,
) -> Result<MeasureVector> {
    compute(traj, selection, config).map_err(|e| e.in_trajectory(traj.id()))
}

fn compute(traj: &Trajectory, sel: MeasureSet, config: &MeasureConfig) -> Result<MeasureVector> {
    if sel.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut out = MeasureVector {
        values: [None; MEASURE_COUNT],
        midpoint_used: None,
    };
    let want = |k: u8| sel.contains(MeasureId(k));

    let basic = basic_measures(traj);
    for (k, v) in [
        (1, basic.max),
        (2, basic.min),
        (3, basic.range),
        (4, basic.mean),
        (5, basic.sd),
    ] {
        if want(k) {
            out.set(k, v);
        }
    }

    if sel.contains_any(&[6, 7, 8, 9]) {
        let fit = affine_fit(traj)?;
        let affine = affine_measures(traj, &fit, &basic);
        for (k, v) in [(6, affine.slope), (7, affine.intercept), (8, affine.r_squared)] {
            if want(k) {
                out.set(k, v);
            }
        }
        if want(9) {
            out.set(9, crossing_rate(traj, &fit));
        }
    }

    if sel.contains_any(&[10, 11, 12]) {
        let midpoint = if want(11) { config.midpoint } else { None };
        let var = variation_measures(traj, midpoint)?;
        if want(10) {
            out.set(10, var.net);
        }
        if want(11) {
            out.set(11, var.contrast);
            out.midpoint_used = Some(var.midpoint_used);
        }
        if want(12) {
            out.set(12, var.total);
        }
    }

    if want(13) {
        out.set(13, spikiness(traj, basic.mean, config.mean_tolerance));
    }

    if sel.contains_any(&[14, 15, 16, 17, 18, 19, 20]) {
        let d1 = derivative_stencil(traj.times(), traj.values(), config.weighting);
        let (first, net) = if sel.contains_any(&[14, 15, 16, 17]) {
            let stats = profile_stats(traj.times(), &d1);
            (Some(stats), (d1[d1.len() - 1] - d1[0]) / traj.span())
        } else {
            (None, 0.0)
        };
        if let Some(stats) = first {
            for (k, v) in [(14, stats.max), (15, stats.min), (16, stats.sd), (17, net)] {
                if want(k) {
                    out.set(k, v);
                }
            }
        }
        if sel.contains_any(&[18, 19, 20]) {
            let d2 = derivative_stencil(traj.times(), &d1, config.weighting);
            let stats = profile_stats(traj.times(), &d2);
            for (k, v) in [(18, stats.max), (19, stats.min), (20, stats.sd)] {
                if want(k) {
                    out.set(k, v);
                }
            }
        }
    }
    Ok(out)
}
