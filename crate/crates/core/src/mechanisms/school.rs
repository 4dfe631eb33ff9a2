use std::sync::Arc;

use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};
use crate::preference::Profile;

/// Capacities and strict priorities of the schools (the objects).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchoolSpec {
    instance: Arc<Instance>,
    capacities: Vec<usize>,
    priorities: Vec<Vec<usize>>,
    // rank[s][i]: position of student i in school s's priority, 0 = highest
    rank: Vec<Vec<usize>>,
}

impl SchoolSpec {
    pub fn new(
        instance: Arc<Instance>,
        capacities: Vec<usize>,
        priorities: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let (n, m) = (instance.num_agents(), instance.num_objects());
        if capacities.len() != m || priorities.len() != m {
            return Err(Error::InvalidSpec(format!(
                "need a capacity and a priority for each of the {m} schools"
            )));
        }
        let total: usize = capacities.iter().sum();
        if total < n {
            return Err(Error::InvalidSpec(format!(
                "total capacity {total} is below the number of students {n}"
            )));
        }
        let mut rank = Vec::with_capacity(m);
        for (s, order) in priorities.iter().enumerate() {
            let mut r = vec![usize::MAX; n];
            if order.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "priority of {} does not rank every student",
                    instance.object_name(s)
                )));
            }
            for (k, &i) in order.iter().enumerate() {
                if i >= n || r[i] != usize::MAX {
                    return Err(Error::InvalidSpec(format!(
                        "priority of {} is not a permutation of the students",
                        instance.object_name(s)
                    )));
                }
                r[i] = k;
            }
            rank.push(r);
        }
        Ok(SchoolSpec {
            instance,
            capacities,
            priorities,
            rank,
        })
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn priorities(&self) -> &[Vec<usize>] {
        &self.priorities
    }

    /// True when `i` has higher priority than `j` at school `s`.
    pub fn outranks(&self, s: usize, i: usize, j: usize) -> bool {
        self.rank[s][i] < self.rank[s][j]
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::school(self.instance.clone(), self.capacities.clone())
            .expect("validated capacities cover every student")
    }

    /// Same priorities with different capacities.
    pub fn with_capacities(&self, capacities: Vec<usize>) -> Result<Self> {
        Self::new(self.instance.clone(), capacities, self.priorities.clone())
    }

    /// Students at `x` who are outranked at their school by at least
    /// `capacity` students holding the same school.
    fn rejected(&self, x: &Allocation) -> AgentSet {
        let n = x.len();
        (0..n)
            .filter(|&i| {
                let s = x.get(i);
                let ahead = (0..n)
                    .filter(|&j| x.get(j) == s && self.outranks(s, j, i))
                    .count();
                ahead >= self.capacities[s]
            })
            .collect()
    }
}

/// Cumulative deferred acceptance. Returns the final allocation and the
/// allocation of applications in every round, the last being the final
/// allocation.
pub fn cumulative_da(spec: &SchoolSpec, p: &Profile) -> (Allocation, Vec<Allocation>) {
    let mut x = p.tops();
    let mut rounds = vec![x.clone()];
    loop {
        let rejected = spec.rejected(&x);
        if rejected.is_empty() {
            return (x, rounds);
        }
        for i in rejected.iter() {
            let next = p
                .get(i)
                .next_below(x.get(i))
                .expect("total capacity covers every student");
            x.set(i, next);
        }
        rounds.push(x.clone());
    }
}

/// Rejected students compromise: `α(x)` holds every student with at least
/// `q` higher-priority students at the same school.
pub fn da_alpha(spec: &SchoolSpec) -> CompromiserAssignment {
    CompromiserAssignment::from_fn(spec.constraint(), |x| spec.rejected(x))
        .expect("over-capacity schools always reject someone")
}

/// Immediate acceptance (the Boston mechanism).
pub fn immediate_acceptance(spec: &SchoolSpec, p: &Profile) -> Allocation {
    let n = p.len();
    let m = spec.instance.num_objects();
    let mut seats = spec.capacities.clone();
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    for t in 0..m {
        let mut applicants: Vec<Vec<usize>> = vec![Vec::new(); m];
        for i in (0..n).filter(|&i| assigned[i].is_none()) {
            let s = p.get(i).ranking().nth(t).unwrap();
            applicants[s].push(i);
        }
        for (s, mut apps) in applicants.into_iter().enumerate() {
            apps.sort_by_key(|&i| spec.rank[s][i]);
            for i in apps.into_iter().take(seats[s]) {
                assigned[i] = Some(s);
                seats[s] -= 1;
            }
        }
        if assigned.iter().all(Option::is_some) {
            break;
        }
    }
    Allocation::new(assigned.into_iter().map(|s| s.expect("total capacity covers every student")))
}
