//! Three-group synthetic trajectories and agreement scores against reference
//! labels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::trajectory::Trajectory;

/// Parameters of [`generate_three_group`].
///
/// Every trajectory is `a + g(t)` on equidistant times in `[0, 1]`, with the
/// intercept `a` drawn from the same range in all groups so the groups overlap
/// vertically and differ only in shape:
///
/// | group | `g(t)` |
/// |-------|--------|
/// | 1 | `b·t` (linear growth) |
/// | 2 | `c·𝟙(t ≥ τ)`, `τ = step_location ± step_jitter` (one step) |
/// | 3 | `d·t²` (slow quadratic growth) |
///
/// `separation` multiplies the amplitudes `b`, `c` and `d` and so sets how far
/// shape dominates the intercept spread.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_per_group: usize,
    pub n_obs: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub separation: f64,
    pub intercept: (f64, f64),
    pub slope: (f64, f64),
    pub step_height: (f64, f64),
    pub step_location: f64,
    pub step_jitter: f64,
    pub curvature: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_per_group: 15,
            n_obs: 10,
            seed: 0,
            noise_sd: 0.0,
            separation: 1.0,
            intercept: (0.0, 2.0),
            slope: (1.0, 2.0),
            step_height: (1.0, 2.0),
            step_location: 0.5,
            step_jitter: 0.15,
            curvature: (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub trajectories: Vec<Trajectory>,
    /// Reference group of each trajectory, contiguous from 1.
    pub labels: Vec<usize>,
    pub generator: Option<GeneratorConfig>,
}

fn uniform<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Linear, step and quadratic groups of `n_per_group` trajectories each.
///
/// Trajectory `i` (0-based, in output order) draws from stream `i` of `seed`.
pub fn generate_three_group(config: &GeneratorConfig) -> Result<LabeledDataset> {
    if config.n_per_group < 2 {
        return Err(Error::InvalidParameter("n_per_group must be at least 2"));
    }
    if config.n_obs < 3 {
        return Err(Error::InvalidParameter("n_obs must be at least 3"));
    }
    let noise = Normal::new(0.0, config.noise_sd)
        .map_err(|_| Error::InvalidParameter("noise_sd must be finite and non-negative"))?;
    let last = (config.n_obs - 1) as f64;
    let times: Vec<f64> = (0..config.n_obs).map(|j| j as f64 / last).collect();

    let mut trajectories = Vec::with_capacity(3 * config.n_per_group);
    let mut labels = Vec::with_capacity(3 * config.n_per_group);
    for group in 1..=3usize {
        for member in 0..config.n_per_group {
            let index = trajectories.len();
            let mut rng = stream_rng(config.seed, index as u64);
            let a = uniform(&mut rng, config.intercept);
            let mut values: Vec<f64> = match group {
                1 => {
                    let b = config.separation * uniform(&mut rng, config.slope);
                    times.iter().map(|t| a + b * t).collect()
                }
                2 => {
                    let c = config.separation * uniform(&mut rng, config.step_height);
                    let jitter = (config.step_jitter, config.step_jitter);
                    let tau = config.step_location + uniform(&mut rng, (-jitter.0, jitter.1));
                    times.iter().map(|&t| if t >= tau { a + c } else { a }).collect()
                }
                _ => {
                    let d = config.separation * uniform(&mut rng, config.curvature);
                    times.iter().map(|t| a + d * t * t).collect()
                }
            };
            if config.noise_sd > 0.0 {
                for v in &mut values {
                    *v += noise.sample(&mut rng);
                }
            }
            let id = format!("g{group}-{:02}", member + 1);
            trajectories.push(Trajectory::new(id, times.clone(), values)?);
            labels.push(group);
        }
    }
    Ok(LabeledDataset {
        trajectories,
        labels,
        generator: Some(config.clone()),
    })
}

/// Agreement between found clusters and reference groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Distinct reference labels, ascending (table rows).
    pub reference_labels: Vec<usize>,
    /// Distinct found labels, ascending (table columns).
    pub found_labels: Vec<usize>,
    /// `contingency[r][c]` counts points with reference row `r` and found column `c`.
    pub contingency: Vec<Vec<usize>>,
    /// Optimal one-to-one `(reference, found)` label pairs.
    pub matching: Vec<(usize, usize)>,
    /// Points covered by `matching`.
    pub matched: usize,
    pub accuracy: f64,
    pub ari: f64,
}

fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut d = labels.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// Maximum-weight matching of rows to columns of a non-negative table
/// (Hungarian algorithm with potentials on the padded square cost matrix).
/// Returns, for each row, its matched column if that column exists.
pub fn max_weight_assignment(table: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    let m = rows.max(cols);
    if m == 0 {
        return Vec::new();
    }
    let top = table.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            top - table[i][j] as i64
        } else {
            top
        }
    };
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=m {
        let i = owner[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

fn pairs(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from a contingency table.
pub fn adjusted_rand_index(contingency: &[Vec<usize>]) -> f64 {
    let n: usize = contingency.iter().flatten().sum();
    let index: f64 = contingency.iter().flatten().map(|&c| pairs(c)).sum();
    let row_pairs: f64 = contingency.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols = contingency.first().map_or(0, Vec::len);
    let col_pairs: f64 = (0..cols)
        .map(|j| pairs(contingency.iter().map(|r| r[j]).sum()))
        .sum();
    let expected = row_pairs * col_pairs / pairs(n);
    let max_index = 0.5 * (row_pairs + col_pairs);
    if max_index == expected {
        // both partitions trivial (all singletons or one block): agreement is total
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}

/// Contingency table, best-matching accuracy and adjusted Rand index.
pub fn evaluate(found: &[usize], reference: &[usize]) -> Result<Evaluation> {
    if found.len() != reference.len() {
        return Err(Error::LengthMismatch {
            times: reference.len(),
            values: found.len(),
        });
    }
    if found.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let reference_labels = distinct(reference);
    let found_labels = distinct(found);
    let mut contingency = vec![vec![0usize; found_labels.len()]; reference_labels.len()];
    for (r, f) in reference.iter().zip(found) {
        let row = reference_labels.binary_search(r).unwrap_or_default();
        let col = found_labels.binary_search(f).unwrap_or_default();
        contingency[row][col] += 1;
    }
    let assignment = max_weight_assignment(&contingency);
    let mut matching = Vec::new();
    let mut matched = 0;
    for (row, col) in assignment.iter().enumerate() {
        if let Some(col) = *col {
            matching.push((reference_labels[row], found_labels[col]));
            matched += contingency[row][col];
        }
    }
    Ok(Evaluation {
        accuracy: matched as f64 / found.len() as f64,
        ari: adjusted_rand_index(&contingency),
        reference_labels,
        found_labels,
        contingency,
        matching,
        matched,
    })
}
