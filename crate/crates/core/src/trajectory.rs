//! Trajectory representation and the numerical primitives the measures share:
//! trapezoidal quadrature and finite-difference derivative stencils on
//! non-uniform grids.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Shortest trajectory accepted; the second-derivative stencil needs an interior point.
pub const MIN_LENGTH: usize = 3;

/// One individual's observations: strictly increasing times and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        check_samples(&times, &values, MIN_LENGTH).map_err(|e| e.in_trajectory(&id))?;
        Ok(Self { id, times, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Always false for a validated trajectory.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t_N - t_1`.
    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Same observation times, new values. The caller guarantees finiteness.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.times.len());
        Self {
            id: self.id.clone(),
            times: self.times.clone(),
            values,
        }
    }

    pub(crate) fn with_times(&self, times: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), self.values.len());
        Self {
            id: self.id.clone(),
            times,
            values: self.values.clone(),
        }
    }
}

/// Validates raw parallel sequences into an anonymous [`Trajectory`].
pub fn validate_trajectory(times: &[f64], values: &[f64]) -> Result<Trajectory> {
    check_samples(times, values, MIN_LENGTH)?;
    Ok(Trajectory {
        id: String::new(),
        times: times.to_vec(),
        values: values.to_vec(),
    })
}

fn check_samples(times: &[f64], values: &[f64], min: usize) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            times: times.len(),
            values: values.len(),
        });
    }
    if times.len() < min {
        return Err(Error::TooShort {
            len: times.len(),
            min,
        });
    }
    if let Some(index) = times
        .iter()
        .zip(values)
        .position(|(t, y)| !t.is_finite() || !y.is_finite())
    {
        return Err(Error::NonFiniteValue { index });
    }
    if let Some(j) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneTimes { index: j + 1 });
    }
    Ok(())
}

/// Trapezoidal rule `sum_j (G_j + G_{j+1}) / 2 * (t_{j+1} - t_j)`.
///
/// Exact for piecewise-linear `G` with knots at the sample times.
pub fn trapezoid_integral(times: &[f64], samples: &[f64]) -> Result<f64> {
    check_samples(times, samples, 2)?;
    Ok(trapezoid(times, samples))
}

/// Unchecked trapezoidal rule over already-validated samples.
pub(crate) fn trapezoid(times: &[f64], samples: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(samples.windows(2))
        .map(|(t, g)| 0.5 * (g[0] + g[1]) * (t[1] - t[0]))
        .sum()
}

/// Trapezoid integral divided by the span `t_N - t_1`.
pub(crate) fn trapezoid_mean(times: &[f64], samples: &[f64]) -> f64 {
    trapezoid(times, samples) / (times[times.len() - 1] - times[0])
}

/// How the one-sided differences at an interior point are blended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeWeighting {
    /// The closer neighbour's one-sided difference gets the larger weight:
    /// `D_j = (dt_right * D_left + dt_left * D_right) / (dt_left + dt_right)`.
    /// Exact on quadratics at interior points of any grid.
    #[default]
    Proximity,
    /// The weights as printed in the original derivation,
    /// `w_j^± = |t_j - t_{j±1}| / (t_{j+1} - t_{j-1})`, which favour the farther
    /// neighbour. First-order on non-uniform grids; kept for comparison runs.
    Literal,
}

/// First-derivative stencil applied to arbitrary samples on a validated grid.
///
/// Endpoints use the forward (`j = 1`) and backward (`j = N`) difference.
pub(crate) fn derivative_stencil(
    times: &[f64],
    samples: &[f64],
    weighting: DerivativeWeighting,
) -> Vec<f64> {
    let n = times.len();
    debug_assert!(n >= 2 && samples.len() == n);
    let slope = |i: usize| (samples[i + 1] - samples[i]) / (times[i + 1] - times[i]);
    let mut out = Vec::with_capacity(n);
    out.push(slope(0));
    for j in 1..n - 1 {
        let left = slope(j - 1);
        let right = slope(j);
        let dt_left = times[j] - times[j - 1];
        let dt_right = times[j + 1] - times[j];
        let width = times[j + 1] - times[j - 1];
        let (w_left, w_right) = match weighting {
            DerivativeWeighting::Proximity => (dt_right / width, dt_left / width),
            DerivativeWeighting::Literal => (dt_left / width, dt_right / width),
        };
        out.push(w_left * left + w_right * right);
    }
    out.push(slope(n - 2));
    out
}

/// First-derivative approximations `D_1..D_N`.
pub fn first_derivative(traj: &Trajectory, weighting: DerivativeWeighting) -> Vec<f64> {
    derivative_stencil(&traj.times, &traj.values, weighting)
}

/// Second-derivative approximations `D²_1..D²_N`: the first-derivative stencil
/// applied to `(t_j, D_j)`.
pub fn second_derivative(traj: &Trajectory, weighting: DerivativeWeighting) -> Vec<f64> {
    let d1 = first_derivative(traj, weighting);
    derivative_stencil(&traj.times, &d1, weighting)
}

/// First and second derivative approximations of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeProfile {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl DerivativeProfile {
    pub fn of(traj: &Trajectory, weighting: DerivativeWeighting) -> Self {
        let d1 = first_derivative(traj, weighting);
        let d2 = derivative_stencil(&traj.times, &d1, weighting);
        Self { d1, d2 }
    }
}

/// Subtracts the trapezoid mean (measure m4) from every value.
pub fn center_vertically(traj: &Trajectory) -> Trajectory {
    let mean = crate::measures::trajectory_mean(traj);
    traj.with_values(traj.values.iter().map(|y| y - mean).collect())
}

/// Subtracts the first observation time from every time.
pub fn shift_horizontally(traj: &Trajectory) -> Trajectory {
    let t0 = traj.first_time();
    traj.with_times(traj.times.iter().map(|t| t - t0).collect())
}
