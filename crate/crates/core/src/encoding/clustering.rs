use super::{slack_bits, BitString, QuboBuilder, QuboProblem, Variable, VariableMap, Weights};
use crate::error::{Error, Result};
use crate::instance::{fleet_plan, CvrpInstance};

/// Multiple-knapsack clustering model with `K` from the fleet plan.
///
/// `H = P1 * sum_k (load_k + slack_k - C)^2 + P2 * sum_v (1 - sum_k x[k][v])^2
///    + P3 * sum_k sum_{u != v} D_uv x[k][u] x[k][v]` with `P3 = p * K / n`.
/// The last sum runs over ordered pairs, so every unordered pair counts twice.
pub fn build_clustering_qubo(inst: &CvrpInstance, p1: f64, p2: f64, p: f64) -> Result<QuboProblem> {
    for (name, w) in [("P1", p1), ("P2", p2), ("p", p)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {w} must be > 0")));
        }
    }
    let n = inst.customers();
    let k_count = fleet_plan(inst).vehicles;
    let p3 = p * k_count as f64 / n as f64;
    let bits = slack_bits(inst.capacity());
    let map = VariableMap::Clustering {
        customers: n,
        clusters: k_count,
        slack_bits: bits,
    };
    let x = |cluster: usize, customer: usize| {
        map.index(Variable::Assign { cluster, customer })
            .expect("in range")
    };
    let mut b = QuboBuilder::new(map.dim());
    for k in 0..k_count {
        let mut terms: Vec<(usize, f64)> = (1..=n).map(|v| (x(k, v), inst.demand(v) as f64)).collect();
        for bit in 0..bits {
            let i = map.index(Variable::Slack { group: k, bit }).expect("in range");
            terms.push((i, (1u64 << bit) as f64));
        }
        b.squared(p1, -(inst.capacity() as f64), &terms);
    }
    for v in 1..=n {
        let terms: Vec<_> = (0..k_count).map(|k| (x(k, v), -1.0)).collect();
        b.squared(p2, 1.0, &terms);
    }
    for k in 0..k_count {
        for u in 1..=n {
            for v in u + 1..=n {
                b.quadratic(x(k, u), x(k, v), 2.0 * p3 * inst.dist(u, v));
            }
        }
    }
    Ok(b.finish(
        map,
        Weights {
            scaling: 1.0,
            penalties: vec![p1, p2, p3],
        },
    ))
}

/// Customer groups per knapsack plus slack values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Vec<usize>>,
    pub slack: Vec<u64>,
}

impl Clustering {
    pub fn loads(&self, inst: &CvrpInstance) -> Vec<u64> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&v| inst.demand(v) as u64).sum())
            .collect()
    }

    /// Sum over clusters and ordered customer pairs of their distance.
    pub fn intra_distance(&self, inst: &CvrpInstance) -> f64 {
        self.clusters
            .iter()
            .map(|c| {
                let mut s = 0.0;
                for (a, &u) in c.iter().enumerate() {
                    for &v in &c[a + 1..] {
                        s += 2.0 * inst.dist(u, v);
                    }
                }
                s
            })
            .sum()
    }

    /// Every customer in exactly one cluster and slack equal to `C - load`.
    pub fn is_feasible(&self, inst: &CvrpInstance) -> bool {
        let mut seen = vec![0u32; inst.nodes()];
        for c in &self.clusters {
            for &v in c {
                if v == 0 || v >= inst.nodes() {
                    return false;
                }
                seen[v] += 1;
            }
        }
        let cap = inst.capacity() as u64;
        seen.iter().skip(1).all(|&c| c == 1)
            && self
                .loads(inst)
                .iter()
                .zip(&self.slack)
                .all(|(&l, &s)| l <= cap && l + s == cap)
    }

    pub fn encode(&self, map: &VariableMap) -> Result<BitString> {
        let VariableMap::Clustering {
            clusters,
            slack_bits,
            ..
        } = *map
        else {
            return Err(Error::InvalidArgument("not a clustering variable map".into()));
        };
        if self.clusters.len() != clusters || self.slack.len() != clusters {
            return Err(Error::LengthMismatch {
                expected: clusters,
                actual: self.clusters.len(),
            });
        }
        let mut x = BitString::zeros(map.dim());
        for (k, members) in self.clusters.iter().enumerate() {
            for &customer in members {
                let i = map
                    .index(Variable::Assign { cluster: k, customer })
                    .ok_or_else(|| Error::InvalidArgument(format!("customer {customer} out of range")))?;
                x.set(i, true);
            }
            for bit in 0..slack_bits {
                if (self.slack[k] >> bit) & 1 == 1 {
                    x.set(map.index(Variable::Slack { group: k, bit }).unwrap(), true);
                }
            }
        }
        Ok(x)
    }
}

/// Reads cluster membership; `None` unless every customer sits in exactly one cluster.
pub fn decode_clustering(x: &BitString, map: &VariableMap) -> Result<Option<Clustering>> {
    let VariableMap::Clustering {
        customers,
        clusters,
        slack_bits,
    } = *map
    else {
        return Err(Error::InvalidArgument("not a clustering variable map".into()));
    };
    if x.len() != map.dim() {
        return Err(Error::LengthMismatch {
            expected: map.dim(),
            actual: x.len(),
        });
    }
    let mut groups = vec![Vec::new(); clusters];
    for customer in 1..=customers {
        let on: Vec<usize> = (0..clusters)
            .filter(|&cluster| x.get(map.index(Variable::Assign { cluster, customer }).unwrap()))
            .collect();
        if on.len() != 1 {
            return Ok(None);
        }
        groups[on[0]].push(customer);
    }
    let slack = (0..clusters)
        .map(|k| {
            (0..slack_bits)
                .filter(|&bit| x.get(map.index(Variable::Slack { group: k, bit }).unwrap()))
                .map(|bit| 1u64 << bit)
                .sum()
        })
        .collect();
    Ok(Some(Clustering {
        clusters: groups,
        slack,
    }))
}
