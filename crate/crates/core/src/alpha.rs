//! Local compromiser assignments.

use std::fmt;
use std::sync::Arc;

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};

/// A map from allocations to agent sets that is empty exactly on the
/// feasible allocations of its constraint.
#[derive(Clone, PartialEq, Eq)]
pub struct CompromiserAssignment {
    constraint: Constraint,
    cells: Vec<AgentSet>,
}

impl CompromiserAssignment {
    /// Builds an assignment from one agent set per allocation code.
    ///
    /// Fails with [`Error::MissingCell`] on an empty infeasible cell and
    /// with [`Error::CellOnFeasible`] on a nonempty feasible one.
    pub(crate) fn from_cells_unchecked(constraint: Constraint, cells: Vec<AgentSet>) -> Self {
        debug_assert_eq!(cells.len(), constraint.instance().num_allocations());
        CompromiserAssignment { constraint, cells }
    }

    pub fn new(constraint: Constraint, cells: Vec<AgentSet>) -> Result<Self> {
        let inst = constraint.instance().clone();
        if cells.len() != inst.num_allocations() {
            return Err(Error::InvalidConstraint(format!(
                "{} cells for {} allocations",
                cells.len(),
                inst.num_allocations()
            )));
        }
        let all = inst.all_agents();
        for (code, cell) in cells.iter().enumerate() {
            let key = || inst.allocation_key(&inst.decode(code as u32));
            if !cell.is_subset(all) {
                return Err(Error::UnknownAgent(format!("in cell {}", key())));
            }
            match (constraint.is_feasible(code as u32), cell.is_empty()) {
                (true, false) => return Err(Error::CellOnFeasible(key())),
                (false, true) => return Err(Error::MissingCell(key())),
                _ => {}
            }
        }
        Ok(CompromiserAssignment { constraint, cells })
    }

    /// Builds an assignment by evaluating `cell` on every infeasible
    /// allocation.
    pub fn from_fn<F>(constraint: Constraint, mut cell: F) -> Result<Self>
    where
        F: FnMut(&Allocation) -> AgentSet,
    {
        let inst = constraint.instance().clone();
        let cells = (0..inst.num_allocations() as u32)
            .map(|c| {
                if constraint.is_feasible(c) {
                    AgentSet::EMPTY
                } else {
                    cell(&inst.decode(c))
                }
            })
            .collect();
        Self::new(constraint, cells)
    }

    /// Treats an arbitrary map `A → 2^N` as an assignment for the constraint
    /// it implies: allocations with empty cells are the feasible ones.
    pub fn from_implied_cells(instance: Arc<Instance>, cells: Vec<AgentSet>) -> Result<Self> {
        let feasible = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(k, _)| k as u32);
        let constraint = Constraint::from_codes(instance, feasible)?;
        Self::new(constraint, cells)
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn instance(&self) -> &Arc<Instance> {
        self.constraint.instance()
    }

    pub fn cell(&self, code: u32) -> AgentSet {
        self.cells[code as usize]
    }

    pub fn cell_of(&self, x: &Allocation) -> AgentSet {
        self.cell(self.instance().encode(x))
    }

    pub fn cells(&self) -> &[AgentSet] {
        &self.cells
    }

    pub fn is_feasible(&self, code: u32) -> bool {
        self.constraint.is_feasible(code)
    }

    /// Pointwise union; both assignments must share a constraint.
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_same_constraint(other)?;
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a.union(*b))
            .collect();
        Self::new(self.constraint.clone(), cells)
    }

    /// Pointwise inclusion `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.cells.len() == other.cells.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.is_subset(*b))
    }

    /// Same assignment with one cell replaced.
    pub fn with_cell(&self, code: u32, cell: AgentSet) -> Result<Self> {
        let mut cells = self.cells.clone();
        cells[code as usize] = cell;
        Self::new(self.constraint.clone(), cells)
    }

    pub fn check_same_constraint(&self, other: &Self) -> Result<()> {
        if self.constraint != other.constraint {
            return Err(Error::InstanceMismatch(
                "compromiser assignments are over different constraints".into(),
            ));
        }
        Ok(())
    }

    /// Infeasible codes with their cells, in code order.
    pub fn infeasible_cells(&self) -> impl Iterator<Item = (u32, AgentSet)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(k, c)| (k as u32, *c))
    }
}

impl fmt::Debug for CompromiserAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inst = self.instance();
        let mut map = f.debug_map();
        for (code, cell) in self.infeasible_cells() {
            map.entry(
                &inst.allocation_key(&inst.decode(code)),
                &inst.agent_names(cell),
            );
        }
        map.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn social2() -> Constraint {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b"]).unwrap());
        Constraint::social(inst).unwrap()
    }

    #[test]
    fn validates_cells() {
        let c = social2();
        // codes: (a,a)=0 (b,a)=1 (a,b)=2 (b,b)=3; infeasible 1 and 2
        let ok = vec![
            AgentSet::EMPTY,
            AgentSet::singleton(0),
            AgentSet::singleton(1),
            AgentSet::EMPTY,
        ];
        assert!(CompromiserAssignment::new(c.clone(), ok.clone()).is_ok());

        let mut missing = ok.clone();
        missing[2] = AgentSet::EMPTY;
        assert!(matches!(
            CompromiserAssignment::new(c.clone(), missing),
            Err(Error::MissingCell(k)) if k == "a,b"
        ));

        let mut on_feasible = ok;
        on_feasible[0] = AgentSet::singleton(0);
        assert!(matches!(
            CompromiserAssignment::new(c, on_feasible),
            Err(Error::CellOnFeasible(k)) if k == "a,a"
        ));
    }

    #[test]
    fn union_and_subset() {
        let c = social2();
        let a = CompromiserAssignment::from_fn(c.clone(), |_| AgentSet::singleton(0)).unwrap();
        let b = CompromiserAssignment::from_fn(c, |_| AgentSet::singleton(1)).unwrap();
        let u = a.union(&b).unwrap();
        assert!(a.is_subset_of(&u) && b.is_subset_of(&u));
        assert_eq!(u.cell(1), AgentSet::from_agents([0, 1]));
        assert_eq!(a.union(&a).unwrap(), a);
    }

    #[test]
    fn implied_constraint() {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b"]).unwrap());
        let cells = vec![
            AgentSet::EMPTY,
            AgentSet::singleton(0),
            AgentSet::singleton(1),
            AgentSet::EMPTY,
        ];
        let a = CompromiserAssignment::from_implied_cells(inst.clone(), cells).unwrap();
        assert_eq!(a.constraint(), &Constraint::social(inst.clone()).unwrap());
        assert!(CompromiserAssignment::from_implied_cells(inst, vec![AgentSet::singleton(0); 4]).is_err());
    }
}
