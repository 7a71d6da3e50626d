//! Brute-force ground truth for small instances.

use std::collections::BinaryHeap;

use itertools::Itertools;
use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{tsp_distance_qubo, BitString, QuboProblem};
use crate::error::{Error, Result};
use crate::instance::{fleet_plan, generate_random_tsp, CvrpInstance, TspInstance};

pub const MAX_TSP_CITIES: usize = 12;
pub const MAX_SPECTRUM_DIM: usize = 26;
pub const FULL_SPECTRUM_DIM: usize = 20;
pub const DEFAULT_TOP_K: usize = 1024;
pub const MAX_PMIN_CITIES: usize = 6;
pub const MAX_CVRP_CUSTOMERS: usize = 8;
/// Ground-state bitstrings kept per spectrum.
pub const MAX_GROUND_STATES: usize = 1024;

/// Energy tolerance used to merge numerically equal levels.
pub fn level_tol(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

fn check_tsp_size(inst: &TspInstance, limit: usize, what: &'static str) -> Result<()> {
    if inst.n() > limit {
        return Err(Error::BoundExceeded {
            what,
            actual: inst.n(),
            limit,
        });
    }
    Ok(())
}

/// Calls `f` with every tour `[0, ...]`, both directions included.
pub fn for_each_tour<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut tour = Vec::with_capacity(n);
    for perm in (1..n).permutations(n - 1) {
        tour.clear();
        tour.push(0);
        tour.extend_from_slice(&perm);
        f(&tour);
    }
}

/// Optimal tour (starting at city 0) and its length.
///
/// Only tours with `tour[1] < tour[n-1]` are scanned, in lexicographic order,
/// so the returned tour is the lexicographically smallest optimum.
pub fn optimal_tsp(inst: &TspInstance) -> Result<(Vec<usize>, f64)> {
    check_tsp_size(inst, MAX_TSP_CITIES, "TSP cities")?;
    let n = inst.n();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_tour(n, |tour| {
        if tour[1] > tour[n - 1] {
            return;
        }
        let len = inst.tour_length(tour);
        match &best {
            Some((_, b)) if len >= b - level_tol(*b) => {}
            _ => best = Some((tour.to_vec(), len)),
        }
    });
    Ok(best.expect("n >= 3 has at least one tour"))
}

/// Lowest energies of a QUBO together with its ground states, gap and width.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub dim: usize,
    /// Ascending; all `2^dim` energies when `complete`, otherwise the lowest `k`.
    pub energies: Vec<f64>,
    pub complete: bool,
    /// Basis states within tolerance of the minimum, at most `MAX_GROUND_STATES`.
    pub ground_states: Vec<BitString>,
    pub ground_degeneracy: u64,
    pub min: f64,
    /// Lowest level strictly above `min`; `None` for a single-level spectrum.
    pub first_excited: Option<f64>,
    pub max: f64,
}

impl Spectrum {
    pub fn gap(&self) -> Option<f64> {
        self.first_excited.map(|e1| e1 - self.min)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Full spectrum up to `FULL_SPECTRUM_DIM` variables, lowest `DEFAULT_TOP_K` above that.
pub fn enumerate_spectrum(qubo: &QuboProblem) -> Result<Spectrum> {
    let k = if qubo.dim() <= FULL_SPECTRUM_DIM {
        usize::MAX
    } else {
        DEFAULT_TOP_K
    };
    enumerate_spectrum_top_k(qubo, k)
}

/// Streams all `2^dim` energies keeping only the `k` lowest.
pub fn enumerate_spectrum_top_k(qubo: &QuboProblem, k: usize) -> Result<Spectrum> {
    let dim = qubo.dim();
    if dim > MAX_SPECTRUM_DIM {
        return Err(Error::BoundExceeded {
            what: "spectrum dimension",
            actual: dim,
            limit: MAX_SPECTRUM_DIM,
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("top-k needs k >= 1".into()));
    }
    let total = 1u64 << dim;
    let keep_all = (k as u64) >= total;
    let mut all = Vec::new();
    let mut heap: BinaryHeap<OrderedFloat<f64>> = BinaryHeap::new();
    let mut min = f64::INFINITY;
    let mut first_excited = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut ground: Vec<u64> = Vec::new();
    let mut degeneracy = 0u64;
    qubo.for_each_energy(|idx, e| {
        if keep_all {
            all.push(e);
        } else if heap.len() < k {
            heap.push(OrderedFloat(e));
        } else if e < heap.peek().unwrap().0 {
            heap.pop();
            heap.push(OrderedFloat(e));
        }
        max = max.max(e);
        if min.is_infinite() || e < min - level_tol(min) {
            if min.is_finite() {
                first_excited = min;
            }
            min = e;
            ground.clear();
            ground.push(idx);
            degeneracy = 1;
        } else if e <= min + level_tol(min) {
            degeneracy += 1;
            if ground.len() < MAX_GROUND_STATES {
                ground.push(idx);
            }
        } else if e < first_excited {
            first_excited = e;
        }
    });
    let mut energies = if keep_all {
        all
    } else {
        heap.into_iter().map(|v| v.0).collect()
    };
    energies.sort_by(f64::total_cmp);
    ground.sort_unstable();
    Ok(Spectrum {
        dim,
        energies,
        complete: keep_all,
        ground_states: ground.into_iter().map(|i| BitString::from_index(i, dim)).collect(),
        ground_degeneracy: degeneracy,
        min,
        first_excited: first_excited.is_finite().then_some(first_excited),
        max,
    })
}

/// Mixer single-flip gap matched by the ground-state-gap strategy.
pub const MIXER_GAP: f64 = 2.0;

/// Factor `c` such that `qubo.scaled(c)` has ground-state gap 2.
pub fn scaling_ground_state_gap(qubo: &QuboProblem) -> Result<f64> {
    scaling_from_gap(&enumerate_spectrum(qubo)?)
}

pub fn scaling_from_gap(spec: &Spectrum) -> Result<f64> {
    let gap = spec
        .gap()
        .ok_or_else(|| Error::Degenerate("fully degenerate spectrum has no gap".into()))?;
    Ok(MIXER_GAP / gap)
}

/// Factor `c` such that `qubo.scaled(c)` has the spectral width `2q` of the X mixer.
pub fn scaling_spectral_width(qubo: &QuboProblem) -> Result<f64> {
    scaling_from_width(&enumerate_spectrum(qubo)?)
}

pub fn scaling_from_width(spec: &Spectrum) -> Result<f64> {
    let w = spec.width();
    if w <= level_tol(spec.max) {
        return Err(Error::Degenerate("zero spectral width".into()));
    }
    Ok(2.0 * spec.dim as f64 / w)
}

/// Smallest penalty for which the QUBO minimum is a feasible tour.
///
/// With `E = s (d(x) + P v(x))`, the minimum is feasible iff
/// `d(x) + P v(x) >= L_opt` for every infeasible `x`, so
/// `P_min = max(0, max_x (L_opt - d(x)) / v(x))`. One Gray-code pass over the
/// distance model tracks `d(x)`, while row and column counts track `v(x)`.
pub fn p_min(inst: &TspInstance) -> Result<f64> {
    check_tsp_size(inst, MAX_PMIN_CITIES, "P_min cities")?;
    let (_, l_opt) = optimal_tsp(inst)?;
    let n = inst.n();
    let m = n - 1;
    let dq = tsp_distance_qubo(inst);
    let mut rows = vec![0i64; m];
    let mut cols = vec![0i64; m];
    // Empty assignment: every row and column short by one.
    let mut v = 2 * m as i64;
    let max_v = 2 * m * m.max(2) * m.max(2) + 1;
    let mut min_d = vec![f64::INFINITY; max_v];
    let mut prev = 0u64;
    dq.for_each_energy(|idx, d| {
        let flip = idx ^ prev;
        if flip != 0 {
            let k = m * m - 1 - flip.trailing_zeros() as usize;
            let (r, c) = (k / m, k % m);
            if idx & flip != 0 {
                v += 2 * rows[r] - 1 + 2 * cols[c] - 1;
                rows[r] += 1;
                cols[c] += 1;
            } else {
                v += 3 - 2 * rows[r] + 3 - 2 * cols[c];
                rows[r] -= 1;
                cols[c] -= 1;
            }
            prev = idx;
        }
        if v > 0 {
            let slot = &mut min_d[v as usize];
            if d < *slot {
                *slot = d;
            }
        }
    });
    let mut best = 0.0f64;
    for (vv, &d) in min_d.iter().enumerate().skip(1) {
        if d.is_finite() {
            best = best.max((l_opt - d) / vv as f64);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminEntry {
    pub n: usize,
    pub seed: u64,
    pub p_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminReport {
    pub entries: Vec<PminEntry>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Entries above `mean + 3 std`.
    pub outliers: usize,
}

impl PminReport {
    pub fn from_entries(entries: Vec<PminEntry>) -> Self {
        let k = entries.len().max(1) as f64;
        let mean = entries.iter().map(|e| e.p_min).sum::<f64>() / k;
        let var = entries.iter().map(|e| (e.p_min - mean).powi(2)).sum::<f64>() / k;
        let std = var.sqrt();
        let outliers = entries.iter().filter(|e| e.p_min > mean + 3.0 * std).count();
        Self {
            entries,
            mean,
            std,
            outliers,
        }
    }
}

/// `count` random instances per size with integer distances in `[low, high]`.
pub fn pmin_statistics_range(
    sizes: &[usize],
    count: usize,
    seed: u64,
    low: f64,
    high: f64,
) -> Result<PminReport> {
    if let Some(&n) = sizes.iter().find(|&&n| n > MAX_PMIN_CITIES) {
        return Err(Error::BoundExceeded {
            what: "P_min cities",
            actual: n,
            limit: MAX_PMIN_CITIES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| (0..count).map(move |_| n))
        .map(|n| (n, rng.gen()))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(n, s)| {
            let inst = generate_random_tsp(n, s, low, high)?;
            Ok(PminEntry {
                n,
                seed: s,
                p_min: p_min(&inst)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PminReport::from_entries(entries))
}

/// Distances uniform in `[10, 50]`.
pub fn pmin_statistics(sizes: &[usize], count: usize, seed: u64) -> Result<PminReport> {
    pmin_statistics_range(sizes, count, seed, 10.0, 50.0)
}

/// Length ratio `c` and feasibility `f` of the uniform superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBaseline {
    pub c: f64,
    pub f: f64,
}

pub fn uniform_baseline(inst: &TspInstance) -> Result<UniformBaseline> {
    check_tsp_size(inst, MAX_TSP_CITIES, "TSP cities")?;
    let n = inst.n();
    let (_, l_opt) = optimal_tsp(inst)?;
    let (mut sum, mut count) = (0.0, 0u64);
    for_each_tour(n, |t| {
        sum += inst.tour_length(t);
        count += 1;
    });
    let m = (n - 1) as i32;
    let f = count as f64 / 2f64.powi(m * m);
    let mean = sum / count as f64;
    let c = if mean == 0.0 { 1.0 } else { l_opt / mean };
    Ok(UniformBaseline { c, f })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvrpSolution {
    /// Customer sequences; the depot is implicit at both ends.
    pub routes: Vec<Vec<usize>>,
    pub length: f64,
}

/// Exact CVRP with at most the fleet-plan number of vehicles.
pub fn solve_cvrp_exact(inst: &CvrpInstance) -> Result<CvrpSolution> {
    solve_cvrp_exact_with(inst, fleet_plan(inst).vehicles)
}

/// Held-Karp route cost per customer subset, then a set-partition DP over at
/// most `max_routes` capacity-feasible subsets.
pub fn solve_cvrp_exact_with(inst: &CvrpInstance, max_routes: usize) -> Result<CvrpSolution> {
    let n = inst.customers();
    if n > MAX_CVRP_CUSTOMERS {
        return Err(Error::BoundExceeded {
            what: "CVRP customers",
            actual: n,
            limit: MAX_CVRP_CUSTOMERS,
        });
    }
    let full = (1usize << n) - 1;
    // hk[mask][j]: shortest depot -> mask -> customer j+1 path.
    let mut hk = vec![vec![f64::INFINITY; n]; full + 1];
    let mut parent = vec![vec![usize::MAX; n]; full + 1];
    for j in 0..n {
        hk[1 << j][j] = inst.dist(0, j + 1);
    }
    for mask in 1..=full {
        for j in 0..n {
            let cur = hk[mask][j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = cur + inst.dist(j + 1, k + 1);
                if cand < hk[next][k] {
                    hk[next][k] = cand;
                    parent[next][k] = j;
                }
            }
        }
    }
    let load = |mask: usize| -> u64 {
        (0..n)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| inst.demand(j + 1) as u64)
            .sum()
    };
    let cap = inst.capacity() as u64;
    let mut route_cost = vec![f64::INFINITY; full + 1];
    let mut route_end = vec![usize::MAX; full + 1];
    for mask in 1..=full {
        if load(mask) > cap {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let c = hk[mask][j] + inst.dist(j + 1, 0);
                if c < route_cost[mask] {
                    route_cost[mask] = c;
                    route_end[mask] = j;
                }
            }
        }
    }
    // best[r][mask]: cover `mask` with exactly r routes.
    let mut best = vec![vec![f64::INFINITY; full + 1]; max_routes + 1];
    let mut choice = vec![vec![0usize; full + 1]; max_routes + 1];
    best[0][0] = 0.0;
    for r in 1..=max_routes {
        for mask in 1..=full {
            // The route containing the lowest customer of `mask` is chosen here.
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            let mut sub = rest;
            loop {
                let part = sub | low;
                let c = route_cost[part] + best[r - 1][mask ^ part];
                if c < best[r][mask] {
                    best[r][mask] = c;
                    choice[r][mask] = part;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    let (r_best, &length) = best
        .iter()
        .enumerate()
        .map(|(r, row)| (r, &row[full]))
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least the zero-route row");
    if !length.is_finite() {
        return Err(Error::Infeasible(format!(
            "no partition into at most {max_routes} routes respects capacity {}",
            inst.capacity()
        )));
    }
    let mut routes = Vec::new();
    let (mut r, mut mask) = (r_best, full);
    while r > 0 {
        let part = choice[r][mask];
        let mut seq = Vec::new();
        let (mut m, mut j) = (part, route_end[part]);
        while j != usize::MAX {
            seq.push(j + 1);
            let pj = parent[m][j];
            m &= !(1 << j);
            j = pj;
        }
        seq.reverse();
        routes.push(seq);
        mask ^= part;
        r -= 1;
    }
    routes.sort();
    Ok(CvrpSolution { routes, length })
}
