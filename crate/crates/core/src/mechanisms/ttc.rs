use std::sync::Arc;

use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};
use crate::preference::Profile;

/// Initial ownership: agent `i` owns object `object_of[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endowment {
    instance: Arc<Instance>,
    object_of: Vec<usize>,
    owner_of: Vec<usize>,
}

impl Endowment {
    pub fn new(instance: Arc<Instance>, object_of: Vec<usize>) -> Result<Self> {
        let n = instance.num_agents();
        if instance.num_objects() != n || object_of.len() != n {
            return Err(Error::InvalidSpec(
                "an endowment needs exactly one object per agent".into(),
            ));
        }
        let mut owner_of = vec![usize::MAX; n];
        for (i, &o) in object_of.iter().enumerate() {
            if o >= n || owner_of[o] != usize::MAX {
                return Err(Error::InvalidSpec("endowment is not a bijection".into()));
            }
            owner_of[o] = i;
        }
        Ok(Endowment {
            instance,
            object_of,
            owner_of,
        })
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn object_of(&self, agent: usize) -> usize {
        self.object_of[agent]
    }

    pub fn owner_of(&self, object: usize) -> usize {
        self.owner_of[object]
    }

    pub fn objects(&self) -> &[usize] {
        &self.object_of
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::house(self.instance.clone()).expect("one object per agent")
    }
}

/// Marks the nodes of the functional graph `succ` that lie on a cycle.
fn on_cycle(succ: &[usize]) -> Vec<bool> {
    let n = succ.len();
    let mut cyclic = vec![false; n];
    let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
    for start in 0..n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = succ[v];
        }
        if state[v] == 1 {
            let pos = path.iter().position(|&u| u == v).unwrap();
            for &u in &path[pos..] {
                cyclic[u] = true;
            }
        }
        for u in path {
            state[u] = 2;
        }
    }
    cyclic
}

/// Top trading cycles from the endowment.
pub fn ttc(e: &Endowment, p: &Profile) -> Allocation {
    let n = e.object_of.len();
    let mut remaining = vec![true; n];
    let mut x = Allocation::new(vec![0; n]);
    let mut left = n;
    while left > 0 {
        // Removed agents point to themselves so they never join a cycle with
        // the active ones.
        let succ: Vec<usize> = (0..n)
            .map(|i| {
                if !remaining[i] {
                    return i;
                }
                let o = p
                    .get(i)
                    .ranking()
                    .find(|&o| remaining[e.owner_of[o]])
                    .expect("an active agent still owns their object");
                e.owner_of[o]
            })
            .collect();
        let cyclic = on_cycle(&succ);
        for i in (0..n).filter(|&i| remaining[i] && cyclic[i]) {
            x.set(i, e.object_of[succ[i]]);
        }
        for i in 0..n {
            if remaining[i] && cyclic[i] {
                remaining[i] = false;
                left -= 1;
            }
        }
    }
    x
}

/// Agents off every cycle of the pointer graph `i → owner(x_i)` who point
/// into a cycle.
pub fn ttc_pointer_compromisers(e: &Endowment, x: &Allocation) -> AgentSet {
    let succ: Vec<usize> = x.iter().map(|o| e.owner_of[o]).collect();
    let cyclic = on_cycle(&succ);
    (0..succ.len())
        .filter(|&i| !cyclic[i] && cyclic[succ[i]])
        .collect()
}

pub fn ttc_alpha(e: &Endowment) -> CompromiserAssignment {
    CompromiserAssignment::from_fn(e.constraint(), |x| ttc_pointer_compromisers(e, x))
        .expect("the pointer graph of an infeasible allocation has a tree node feeding a cycle")
}
