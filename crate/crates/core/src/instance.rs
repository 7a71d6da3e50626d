//! Problem instances: symmetric distance matrices, TSP and CVRP instances,
//! fleet sizing, and the instance JSON format.
//!
//! Instance JSON:
//!
//! ```json
//! {"name": "...", "nodes": 4, "depot": 0, "distances": [[0.0, 1.0, ...], ...],
//!  "demands": [0, 1, ...], "capacity": 10}
//! ```
//!
//! `demands` and `capacity` are optional for pure TSP files. An optional
//! `note` string carries provenance (for example for completed reference
//! instances).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric matrix with zero diagonal and nonnegative finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "distances[{i}][{i}] = {} is not zero",
                    self.get(i, i)
                )));
            }
            for j in 0..n {
                let d = self.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "distances[{i}][{j}] = {d} is not a nonnegative finite number"
                    )));
                }
                if d != self.get(j, i) {
                    return Err(Error::InvalidInstance(format!(
                        "asymmetric distances: [{i}][{j}] = {d} but [{j}][{i}] = {}",
                        self.get(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Restriction to `nodes`, in the given order.
    pub fn submatrix(&self, nodes: &[usize]) -> Self {
        let k = nodes.len();
        let mut data = Vec::with_capacity(k * k);
        for &a in nodes {
            for &b in nodes {
                data.push(self.get(a, b));
            }
        }
        Self { n: k, data }
    }

    /// Multiplies every entry by `factor` (must be nonnegative).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|d| d * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    pub name: String,
    distances: DistanceMatrix,
    pub note: Option<String>,
}

impl TspInstance {
    pub fn new(name: impl Into<String>, distances: DistanceMatrix) -> Result<Self> {
        if distances.len() < 3 {
            return Err(Error::InvalidInstance(format!(
                "a TSP instance needs at least 3 nodes, got {}",
                distances.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            distances,
            note: None,
        })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(name, DistanceMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.distances.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distances.get(i, j)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    /// Closed tour length; `tour` lists every node once, the return edge is implied.
    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        let k = tour.len();
        (0..k).map(|i| self.dist(tour[i], tour[(i + 1) % k])).sum()
    }

    /// Same instance with every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            name: self.name.clone(),
            distances: self.distances.scaled(factor),
            note: self.note.clone(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// CVRP instance. Node 0 is the depot; customers are nodes `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvrpInstance {
    pub name: String,
    distances: DistanceMatrix,
    demands: Vec<u32>,
    capacity: u32,
    pub note: Option<String>,
}

impl CvrpInstance {
    pub fn new(
        name: impl Into<String>,
        distances: DistanceMatrix,
        demands: Vec<u32>,
        capacity: u32,
    ) -> Result<Self> {
        if distances.len() < 2 {
            return Err(Error::InvalidInstance(
                "a CVRP instance needs a depot and at least one customer".into(),
            ));
        }
        if demands.len() != distances.len() {
            return Err(Error::InvalidInstance(format!(
                "{} demands for {} nodes",
                demands.len(),
                distances.len()
            )));
        }
        if capacity == 0 {
            return Err(Error::InvalidInstance("capacity must be positive".into()));
        }
        if demands[0] != 0 {
            return Err(Error::InvalidInstance(format!(
                "depot demand must be 0, got {}",
                demands[0]
            )));
        }
        for (v, &d) in demands.iter().enumerate().skip(1) {
            if d == 0 {
                return Err(Error::InvalidInstance(format!(
                    "customer {v} has zero demand"
                )));
            }
            if d > capacity {
                return Err(Error::InvalidInstance(format!(
                    "customer {v} demand {d} exceeds capacity {capacity}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            distances,
            demands,
            capacity,
            note: None,
        })
    }

    /// Number of customers (nodes excluding the depot).
    pub fn customers(&self) -> usize {
        self.distances.len() - 1
    }

    pub fn nodes(&self) -> usize {
        self.distances.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distances.get(i, j)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn demand(&self, v: usize) -> u32 {
        self.demands[v]
    }

    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().map(|&d| d as u64).sum()
    }

    /// The whole graph viewed as a TSP (requires at least 3 nodes).
    pub fn as_tsp(&self) -> Result<TspInstance> {
        let mut t = TspInstance::new(self.name.clone(), self.distances.clone())?;
        t.note = self.note.clone();
        Ok(t)
    }
}

/// Vehicle count `K` and per-vehicle time horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetPlan {
    pub vehicles: usize,
    pub horizon: usize,
}

/// `K = ceil(total demand / C)`, `T = n` (one vehicle visiting every customer).
pub fn fleet_plan(inst: &CvrpInstance) -> FleetPlan {
    let c = inst.capacity() as u64;
    let k = inst.total_demand().div_ceil(c).max(1);
    FleetPlan {
        vehicles: k as usize,
        horizon: inst.customers(),
    }
}

/// TSP over the depot followed by `customers` (in the given order), with the
/// induced distance submatrix.
pub fn extract_cluster_tsp(inst: &CvrpInstance, customers: &[usize]) -> Result<TspInstance> {
    if customers.is_empty() {
        return Err(Error::InvalidArgument("empty customer subset".into()));
    }
    let mut nodes = Vec::with_capacity(customers.len() + 1);
    nodes.push(0);
    for &c in customers {
        if c == 0 || c >= inst.nodes() {
            return Err(Error::InvalidArgument(format!(
                "unknown customer index {c} (instance has customers 1..={})",
                inst.customers()
            )));
        }
        if nodes.contains(&c) {
            return Err(Error::InvalidArgument(format!("customer {c} listed twice")));
        }
        nodes.push(c);
    }
    let name = format!(
        "{}-cluster-{}",
        inst.name,
        customers
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("_")
    );
    let mut t = TspInstance::new(name, inst.distances().submatrix(&nodes))?;
    t.note = inst.note.clone();
    Ok(t)
}

/// Random symmetric instance with integer distances drawn uniformly from
/// `[ceil(low), floor(high)]`.
pub fn generate_random_tsp(n: usize, seed: u64, low: f64, high: f64) -> Result<TspInstance> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n = {n}, need n >= 3")));
    }
    if !(low > 0.0 && low <= high && high.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "invalid distance range [{low}, {high}]"
        )));
    }
    let lo = low.ceil() as i64;
    let hi = high.floor() as i64;
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "range [{low}, {high}] contains no integer"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = rng.gen_range(lo..=hi) as f64;
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    TspInstance::from_rows(format!("random-n{n}-s{seed}"), &rows)
}

/// Points uniform in `[0, side]^2`, distances rounded to the nearest integer.
/// Rounding keeps the triangle inequality up to one unit.
pub fn generate_euclidean_tsp(n: usize, seed: u64, side: f64) -> Result<TspInstance> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n = {n}, need n >= 3")));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid side length {side}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
        .collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2))
                .sqrt()
                .round();
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    TspInstance::from_rows(format!("euclid-n{n}-s{seed}"), &rows)
}

// Published routes of the 11-node example: (from, to, weight).
const FIG1_EDGES: [(usize, usize, f64); 13] = [
    (0, 1, 10.0),
    (1, 2, 21.0),
    (2, 3, 33.0),
    (3, 4, 42.0),
    (4, 5, 47.0),
    (5, 0, 38.0),
    (0, 6, 31.0),
    (6, 7, 45.0),
    (7, 8, 20.0),
    (8, 0, 30.0),
    (0, 9, 42.0),
    (9, 10, 15.0),
    (10, 0, 30.0),
];
const FIG1_DEMANDS: [u32; 11] = [0, 1, 3, 2, 2, 2, 5, 2, 1, 5, 5];
const FIG1_CAPACITY: u32 = 10;

pub const COMPLETION_NOTE: &str = "completion: published route edges keep their printed \
weights, all other pairs are shortest-path distances through published edges; \
this is not an original distance matrix";

fn shortest_path_completion(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// The 11-node, capacity-10 example with the shortest-path completion.
pub fn fig1_instance() -> CvrpInstance {
    let rows = shortest_path_completion(11, &FIG1_EDGES);
    let dm = DistanceMatrix::from_rows(&rows).expect("completion is a valid metric");
    let mut inst = CvrpInstance::new("fig1", dm, FIG1_DEMANDS.to_vec(), FIG1_CAPACITY)
        .expect("reference demands are valid");
    inst.note = Some(COMPLETION_NOTE.into());
    inst
}

/// Customers of the highlighted 6-node cycle, in route order.
pub const FIG1_BLUE_CUSTOMERS: [usize; 5] = [1, 2, 3, 4, 5];

/// Depot plus the first `n - 1` customers of the highlighted cycle (n in 3..=6).
pub fn fig1_blue(n: usize) -> Result<TspInstance> {
    if !(3..=6).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "fig1-blue subinstances have 3..=6 nodes, got {n}"
        )));
    }
    let full = fig1_instance();
    let mut t = extract_cluster_tsp(&full, &FIG1_BLUE_CUSTOMERS[..n - 1])?;
    t.name = format!("fig1-blue-n{n}");
    Ok(t)
}

// ---------------------------------------------------------------- JSON I/O

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub nodes: usize,
    pub depot: usize,
    pub distances: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InstanceFile {
    fn check_header(&self) -> Result<()> {
        if self.depot != 0 {
            return Err(Error::InvalidInstance(format!(
                "depot must be node 0, got {}",
                self.depot
            )));
        }
        if self.nodes != self.distances.len() {
            return Err(Error::InvalidInstance(format!(
                "\"nodes\" is {} but the matrix has {} rows",
                self.nodes,
                self.distances.len()
            )));
        }
        Ok(())
    }

    pub fn to_cvrp(&self) -> Result<CvrpInstance> {
        self.check_header()?;
        let (Some(demands), Some(capacity)) = (&self.demands, self.capacity) else {
            return Err(Error::InvalidInstance(
                "CVRP instance requires \"demands\" and \"capacity\"".into(),
            ));
        };
        let dm = DistanceMatrix::from_rows(&self.distances)?;
        let mut inst = CvrpInstance::new(self.name.clone(), dm, demands.clone(), capacity)?;
        inst.note = self.note.clone();
        Ok(inst)
    }

    pub fn to_tsp(&self) -> Result<TspInstance> {
        self.check_header()?;
        let mut t = TspInstance::from_rows(self.name.clone(), &self.distances)?;
        t.note = self.note.clone();
        Ok(t)
    }

    pub fn from_cvrp(inst: &CvrpInstance) -> Self {
        Self {
            name: inst.name.clone(),
            nodes: inst.nodes(),
            depot: 0,
            distances: inst.distances().rows(),
            demands: Some(inst.demands().to_vec()),
            capacity: Some(inst.capacity()),
            note: inst.note.clone(),
        }
    }

    pub fn from_tsp(inst: &TspInstance) -> Self {
        Self {
            name: inst.name.clone(),
            nodes: inst.n(),
            depot: 0,
            distances: inst.distances().rows(),
            demands: None,
            capacity: None,
            note: inst.note.clone(),
        }
    }

    /// Canonical serialization: pretty-printed, fixed key order, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance is serializable");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<CvrpInstance> {
    InstanceFile::read(path)?.to_cvrp()
}

pub fn load_tsp(path: impl AsRef<Path>) -> Result<TspInstance> {
    InstanceFile::read(path)?.to_tsp()
}

pub fn save_instance(inst: &CvrpInstance, path: impl AsRef<Path>) -> Result<()> {
    InstanceFile::from_cvrp(inst).write(path)
}

pub fn save_tsp(inst: &TspInstance, path: impl AsRef<Path>) -> Result<()> {
    InstanceFile::from_tsp(inst).write(path)
}
