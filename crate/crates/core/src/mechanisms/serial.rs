use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};
use crate::preference::Profile;

/// The order in which dictators choose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictatorOrder(Vec<usize>);

impl DictatorOrder {
    pub fn new(inst: &Instance, order: Vec<usize>) -> Result<Self> {
        let n = inst.num_agents();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::InvalidSpec(format!(
                "dictator order lists {} agents, expected {n}",
                order.len()
            )));
        }
        for &i in &order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSpec("dictator order is not a permutation".into()));
            }
        }
        Ok(DictatorOrder(order))
    }

    pub fn identity(n: usize) -> Self {
        DictatorOrder((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }
}

/// Each dictator in turn takes their favourite object that can still be
/// completed to a feasible allocation.
pub fn serial_dictatorship(c: &Constraint, order: &DictatorOrder, p: &Profile) -> Allocation {
    let inst = c.instance();
    let mut alive: Vec<u32> = c.feasible_codes().collect();
    let mut x = Allocation::new(vec![0; inst.num_agents()]);
    for &i in order.order() {
        let pick = p
            .get(i)
            .ranking()
            .find(|&o| alive.iter().any(|&code| inst.object_at(code, i) == o))
            .expect("surviving feasible allocations are nonempty");
        alive.retain(|&code| inst.object_at(code, i) == pick);
        x.set(i, pick);
    }
    x
}

/// `α(μ)` is the first dictator whose choice, together with the choices of
/// the dictators before them, cannot be completed feasibly.
pub fn sd_alpha(c: &Constraint, order: &DictatorOrder) -> CompromiserAssignment {
    let inst = c.instance().clone();
    let feasible: Vec<u32> = c.feasible_codes().collect();
    CompromiserAssignment::from_fn(c.clone(), |mu| {
        let mut alive = feasible.clone();
        for &i in order.order() {
            alive.retain(|&code| inst.object_at(code, i) == mu.get(i));
            if alive.is_empty() {
                return AgentSet::singleton(i);
            }
        }
        unreachable!("infeasible allocation has a first incompatible dictator")
    })
    .expect("sd cells are singletons on infeasible allocations")
}
