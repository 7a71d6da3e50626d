use super::{slack_bits, BitString, QuboBuilder, QuboProblem, Variable, VariableMap, Weights};
use crate::error::{Error, Result};
use crate::instance::{CvrpInstance, FleetPlan};

/// Full-route CVRP model.
///
/// Variables `x[k][t][v]` say that vehicle `k` is at node `v` (0 = depot)
/// during time step `t` in `1..=T`. Every vehicle starts and ends at the depot
/// on two pinned boundary steps around the `T` free steps, so edges to and from
/// the boundary fold into linear terms. Slack bits `y[k][b]` encode `C - load`
/// in binary.
///
/// `H = H_obj + P1 * H_C1 + P2 * H_C2 + P3 * H_C3` with
/// * `H_obj`: total distance of consecutive steps, boundary depots included,
/// * `H_C1`: every customer visited exactly once over all vehicles and steps,
/// * `H_C2`: every vehicle at exactly one node per step,
/// * `H_C3`: `(load_k + slack_k - C)^2` per vehicle.
pub fn build_cvrp_qubo(
    inst: &CvrpInstance,
    plan: FleetPlan,
    p1: f64,
    p2: f64,
    p3: f64,
) -> Result<QuboProblem> {
    for (name, p) in [("P1", p1), ("P2", p2), ("P3", p3)] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {p} must be > 0")));
        }
    }
    let n = inst.customers();
    let (k_count, t_count) = (plan.vehicles, plan.horizon);
    if k_count == 0 || t_count == 0 {
        return Err(Error::InvalidArgument(format!(
            "fleet plan {plan:?} needs at least one vehicle and one step"
        )));
    }
    if (k_count as u64) * (inst.capacity() as u64) < inst.total_demand() {
        return Err(Error::InvalidArgument(format!(
            "{k_count} vehicles of capacity {} cannot carry total demand {}",
            inst.capacity(),
            inst.total_demand()
        )));
    }
    if k_count * t_count < n {
        return Err(Error::InvalidArgument(format!(
            "{k_count} vehicles x {t_count} steps cannot visit {n} customers"
        )));
    }
    let bits = slack_bits(inst.capacity());
    let map = VariableMap::Cvrp {
        customers: n,
        horizon: t_count,
        vehicles: k_count,
        slack_bits: bits,
    };
    let x = |vehicle: usize, node: usize, time: usize| {
        map.index(Variable::Visit {
            vehicle,
            node,
            time,
        })
        .expect("in range")
    };
    let y = |group: usize, bit: usize| map.index(Variable::Slack { group, bit }).expect("in range");
    let mut b = QuboBuilder::new(map.dim());

    for k in 0..k_count {
        for v in 0..=n {
            b.linear(x(k, v, 1), inst.dist(0, v));
            b.linear(x(k, v, t_count), inst.dist(v, 0));
        }
        for t in 1..t_count {
            for v in 0..=n {
                for w in 0..=n {
                    if v != w {
                        b.quadratic(x(k, v, t), x(k, w, t + 1), inst.dist(v, w));
                    }
                }
            }
        }
    }
    for v in 1..=n {
        let terms: Vec<_> = (0..k_count)
            .flat_map(|k| (1..=t_count).map(move |t| (k, t)))
            .map(|(k, t)| (x(k, v, t), -1.0))
            .collect();
        b.squared(p1, 1.0, &terms);
    }
    for k in 0..k_count {
        for t in 1..=t_count {
            let terms: Vec<_> = (0..=n).map(|v| (x(k, v, t), -1.0)).collect();
            b.squared(p2, 1.0, &terms);
        }
    }
    for k in 0..k_count {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for t in 1..=t_count {
            for v in 1..=n {
                terms.push((x(k, v, t), inst.demand(v) as f64));
            }
        }
        for bit in 0..bits {
            terms.push((y(k, bit), (1u64 << bit) as f64));
        }
        b.squared(p3, -(inst.capacity() as f64), &terms);
    }
    Ok(b.finish(
        map,
        Weights {
            scaling: 1.0,
            penalties: vec![p1, p2, p3],
        },
    ))
}

/// Per-vehicle node sequences over the free steps `1..=T` plus slack values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvrpAssignment {
    /// `timelines[k][t-1]` is the node of vehicle `k` at step `t`.
    pub timelines: Vec<Vec<usize>>,
    pub slack: Vec<u64>,
}

impl CvrpAssignment {
    /// Total distance including the pinned depot start and end of every vehicle.
    pub fn length(&self, inst: &CvrpInstance) -> f64 {
        self.timelines
            .iter()
            .map(|tl| {
                let mut prev = 0;
                let mut len = 0.0;
                for &v in tl.iter().chain(std::iter::once(&0)) {
                    len += inst.dist(prev, v);
                    prev = v;
                }
                len
            })
            .sum()
    }

    pub fn loads(&self, inst: &CvrpInstance) -> Vec<u64> {
        self.timelines
            .iter()
            .map(|tl| tl.iter().map(|&v| inst.demand(v) as u64).sum())
            .collect()
    }

    /// Each customer exactly once, loads within capacity, slack = C - load.
    pub fn is_feasible(&self, inst: &CvrpInstance) -> bool {
        let mut seen = vec![0u32; inst.nodes()];
        for tl in &self.timelines {
            for &v in tl {
                seen[v] += 1;
            }
        }
        let visits_ok = seen.iter().skip(1).all(|&c| c == 1);
        let cap = inst.capacity() as u64;
        let loads_ok = self
            .loads(inst)
            .iter()
            .zip(&self.slack)
            .all(|(&l, &s)| l <= cap && l + s == cap);
        visits_ok && loads_ok
    }

    /// Customer routes per vehicle, depot stays removed.
    pub fn routes(&self) -> Vec<Vec<usize>> {
        self.timelines
            .iter()
            .map(|tl| tl.iter().copied().filter(|&v| v != 0).collect())
            .collect()
    }

    pub fn encode(&self, map: &VariableMap) -> Result<BitString> {
        let VariableMap::Cvrp {
            horizon,
            vehicles,
            slack_bits,
            ..
        } = *map
        else {
            return Err(Error::InvalidArgument("not a CVRP variable map".into()));
        };
        if self.timelines.len() != vehicles || self.slack.len() != vehicles {
            return Err(Error::LengthMismatch {
                expected: vehicles,
                actual: self.timelines.len(),
            });
        }
        let mut x = BitString::zeros(map.dim());
        for (k, tl) in self.timelines.iter().enumerate() {
            if tl.len() != horizon {
                return Err(Error::LengthMismatch {
                    expected: horizon,
                    actual: tl.len(),
                });
            }
            for (t, &node) in tl.iter().enumerate() {
                let i = map
                    .index(Variable::Visit {
                        vehicle: k,
                        node,
                        time: t + 1,
                    })
                    .ok_or_else(|| Error::InvalidArgument(format!("node {node} out of range")))?;
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

/// Reads per-step nodes; `None` when some vehicle/step is not one-hot.
pub fn decode_cvrp(x: &BitString, map: &VariableMap) -> Result<Option<CvrpAssignment>> {
    let VariableMap::Cvrp {
        customers,
        horizon,
        vehicles,
        slack_bits,
    } = *map
    else {
        return Err(Error::InvalidArgument("not a CVRP variable map".into()));
    };
    if x.len() != map.dim() {
        return Err(Error::LengthMismatch {
            expected: map.dim(),
            actual: x.len(),
        });
    }
    let mut timelines = Vec::with_capacity(vehicles);
    let mut slack = Vec::with_capacity(vehicles);
    for vehicle in 0..vehicles {
        let mut tl = Vec::with_capacity(horizon);
        for time in 1..=horizon {
            let on: Vec<usize> = (0..=customers)
                .filter(|&node| {
                    x.get(
                        map.index(Variable::Visit {
                            vehicle,
                            node,
                            time,
                        })
                        .unwrap(),
                    )
                })
                .collect();
            if on.len() != 1 {
                return Ok(None);
            }
            tl.push(on[0]);
        }
        timelines.push(tl);
        let s = (0..slack_bits)
            .filter(|&bit| x.get(map.index(Variable::Slack { group: vehicle, bit }).unwrap()))
            .map(|bit| 1u64 << bit)
            .sum();
        slack.push(s);
    }
    Ok(Some(CvrpAssignment { timelines, slack }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{fleet_plan, DistanceMatrix};

    fn toy3() -> CvrpInstance {
        let rows = vec![
            vec![0.0, 4.0, 5.0, 6.0],
            vec![4.0, 0.0, 3.0, 7.0],
            vec![5.0, 3.0, 0.0, 2.0],
            vec![6.0, 7.0, 2.0, 0.0],
        ];
        CvrpInstance::new("toy3", DistanceMatrix::from_rows(&rows).unwrap(), vec![0, 2, 3, 4], 10)
            .unwrap()
    }

    #[test]
    fn three_customer_dims() {
        let inst = toy3();
        let plan = fleet_plan(&inst);
        assert_eq!(plan, FleetPlan { vehicles: 1, horizon: 3 });
        let q = build_cvrp_qubo(&inst, plan, 50.0, 50.0, 5.0).unwrap();
        assert_eq!(slack_bits(10), 4);
        assert_eq!(q.dim(), 4 * 3 + 4);
    }

    #[test]
    fn feasible_assignment_has_zero_constraint_energy() {
        let inst = toy3();
        let plan = fleet_plan(&inst);
        let q = build_cvrp_qubo(&inst, plan, 50.0, 60.0, 7.0).unwrap();
        let a = CvrpAssignment {
            timelines: vec![vec![1, 2, 3]],
            slack: vec![1],
        };
        assert!(a.is_feasible(&inst));
        let x = a.encode(q.varmap()).unwrap();
        let e = q.energy(&x).unwrap();
        assert!((e - a.length(&inst)).abs() < 1e-9, "{e}");
        assert_eq!(a.length(&inst), 4.0 + 3.0 + 2.0 + 6.0);
        assert_eq!(decode_cvrp(&x, q.varmap()).unwrap(), Some(a));
    }

    #[test]
    fn wrong_slack_is_penalized_by_p3() {
        let inst = toy3();
        let q = build_cvrp_qubo(&inst, fleet_plan(&inst), 50.0, 60.0, 7.0).unwrap();
        let good = CvrpAssignment {
            timelines: vec![vec![1, 2, 3]],
            slack: vec![1],
        };
        let bad = CvrpAssignment {
            slack: vec![3],
            ..good.clone()
        };
        let de = q.energy(&bad.encode(q.varmap()).unwrap()).unwrap()
            - q.energy(&good.encode(q.varmap()).unwrap()).unwrap();
        assert!((de - 7.0 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_plan_rejected() {
        let inst = toy3();
        let plan = FleetPlan { vehicles: 1, horizon: 2 };
        assert!(build_cvrp_qubo(&inst, plan, 1.0, 1.0, 1.0).is_err());
        let dm = DistanceMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let heavy = CvrpInstance::new("h", dm, vec![0, 8, 8], 10).unwrap();
        assert!(build_cvrp_qubo(&heavy, FleetPlan { vehicles: 1, horizon: 2 }, 1.0, 1.0, 1.0).is_err());
        assert!(build_cvrp_qubo(&inst, fleet_plan(&inst), 0.0, 1.0, 1.0).is_err());
    }
}
