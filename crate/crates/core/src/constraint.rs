//! Feasibility constraints `C ⊆ O^n` and their named generators.

use std::collections::BTreeSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance, Suballocation};

/// How a constraint was built. Every non-explicit generator regenerates the
/// identical feasible set from its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Explicit,
    /// All agents hold distinct objects.
    House,
    /// At most `capacities[o]` agents hold object `o`.
    School { capacities: Vec<usize> },
    /// All agents hold the same object.
    Social,
    /// Objects are agents; `x[x[i]] = i` for every agent.
    OneSided,
    /// Objects are agents split into two sides; matches cross sides or are
    /// self-matches.
    TwoSided { men: AgentSet, women: AgentSet },
}

impl Generator {
    pub fn kind(&self) -> &'static str {
        match self {
            Generator::Explicit => "explicit",
            Generator::House => "house",
            Generator::School { .. } => "school",
            Generator::Social => "social",
            Generator::OneSided => "one_sided",
            Generator::TwoSided { .. } => "two_sided",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    instance: Arc<Instance>,
    feasible: FixedBitSet,
    generator: Generator,
}

impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.instance == other.instance && self.feasible == other.feasible
    }
}

impl Eq for Constraint {}

impl Constraint {
    fn from_bits(instance: Arc<Instance>, feasible: FixedBitSet, generator: Generator) -> Result<Self> {
        if feasible.count_ones(..) == 0 {
            return Err(Error::InvalidConstraint("no feasible allocation".into()));
        }
        Ok(Constraint {
            instance,
            feasible,
            generator,
        })
    }

    fn from_predicate<F>(instance: Arc<Instance>, generator: Generator, pred: F) -> Result<Self>
    where
        F: Fn(&Allocation) -> bool,
    {
        let size = instance.num_allocations();
        let mut bits = FixedBitSet::with_capacity(size);
        for code in 0..size as u32 {
            if pred(&instance.decode(code)) {
                bits.insert(code as usize);
            }
        }
        Self::from_bits(instance, bits, generator)
    }

    /// Constraint whose feasible set is exactly `feasible`.
    pub fn explicit<I>(instance: Arc<Instance>, feasible: I) -> Result<Self>
    where
        I: IntoIterator<Item = Allocation>,
    {
        let mut bits = FixedBitSet::with_capacity(instance.num_allocations());
        for x in feasible {
            instance.validate(&x)?;
            bits.insert(instance.encode(&x) as usize);
        }
        Self::from_bits(instance, bits, Generator::Explicit)
    }

    /// Explicit constraint from allocation codes.
    pub fn from_codes<I>(instance: Arc<Instance>, codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = u32>,
    {
        let size = instance.num_allocations();
        let mut bits = FixedBitSet::with_capacity(size);
        for c in codes {
            if c as usize >= size {
                return Err(Error::InvalidConstraint(format!("code {c} out of range")));
            }
            bits.insert(c as usize);
        }
        Self::from_bits(instance, bits, Generator::Explicit)
    }

    /// Every allocation feasible.
    pub fn unconstrained(instance: Arc<Instance>) -> Self {
        let mut bits = FixedBitSet::with_capacity(instance.num_allocations());
        bits.insert_range(..);
        Self::from_bits(instance, bits, Generator::Explicit).expect("nonempty")
    }

    pub fn house(instance: Arc<Instance>) -> Result<Self> {
        if instance.num_objects() < instance.num_agents() {
            return Err(Error::InvalidConstraint(
                "house allocation needs at least as many objects as agents".into(),
            ));
        }
        Self::from_predicate(instance, Generator::House, |x| {
            let mut seen = 0u64;
            x.iter().all(|o| {
                let fresh = seen >> o & 1 == 0;
                seen |= 1 << o;
                fresh
            })
        })
    }

    pub fn school(instance: Arc<Instance>, capacities: Vec<usize>) -> Result<Self> {
        if capacities.len() != instance.num_objects() {
            return Err(Error::InvalidConstraint(format!(
                "{} capacities for {} objects",
                capacities.len(),
                instance.num_objects()
            )));
        }
        if capacities.iter().sum::<usize>() < instance.num_agents() {
            return Err(Error::InvalidConstraint(
                "total capacity is below the number of agents".into(),
            ));
        }
        let caps = capacities.clone();
        Self::from_predicate(instance, Generator::School { capacities }, move |x| {
            let mut count = vec![0usize; caps.len()];
            for o in x.iter() {
                count[o] += 1;
            }
            count.iter().zip(&caps).all(|(c, q)| c <= q)
        })
    }

    pub fn social(instance: Arc<Instance>) -> Result<Self> {
        Self::from_predicate(instance, Generator::Social, |x| {
            x.iter().all(|o| o == x.get(0))
        })
    }

    pub fn one_sided(instance: Arc<Instance>) -> Result<Self> {
        check_objects_are_agents(&instance)?;
        Self::from_predicate(instance, Generator::OneSided, |x| {
            (0..x.len()).all(|i| x.get(x.get(i)) == i)
        })
    }

    pub fn two_sided(instance: Arc<Instance>, men: AgentSet, women: AgentSet) -> Result<Self> {
        check_objects_are_agents(&instance)?;
        if !men.intersection(women).is_empty() || men.union(women) != instance.all_agents() {
            return Err(Error::InvalidConstraint(
                "men and women must partition the agents".into(),
            ));
        }
        Self::from_predicate(instance, Generator::TwoSided { men, women }, move |x| {
            (0..x.len()).all(|k| {
                let p = x.get(k);
                let side_ok = p == k
                    || (men.contains(k) && women.contains(p))
                    || (women.contains(k) && men.contains(p));
                side_ok && x.get(p) == k
            })
        })
    }

    /// Rebuilds the constraint from its generator's parameters.
    pub fn regenerate(&self) -> Result<Constraint> {
        let inst = self.instance.clone();
        match &self.generator {
            Generator::Explicit => Ok(self.clone()),
            Generator::House => Self::house(inst),
            Generator::School { capacities } => Self::school(inst, capacities.clone()),
            Generator::Social => Self::social(inst),
            Generator::OneSided => Self::one_sided(inst),
            Generator::TwoSided { men, women } => Self::two_sided(inst, *men, *women),
        }
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn feasible_set(&self) -> &FixedBitSet {
        &self.feasible
    }

    pub fn is_feasible(&self, code: u32) -> bool {
        self.feasible.contains(code as usize)
    }

    pub fn contains(&self, x: &Allocation) -> bool {
        self.is_feasible(self.instance.encode(x))
    }

    pub fn num_feasible(&self) -> usize {
        self.feasible.count_ones(..)
    }

    pub fn feasible_codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.feasible.ones().map(|c| c as u32)
    }

    pub fn infeasible_codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.feasible.zeroes().map(|c| c as u32)
    }

    pub fn num_infeasible(&self) -> usize {
        self.instance.num_allocations() - self.num_feasible()
    }

    /// Feasible suballocations for the agents in `agents`.
    pub fn project(&self, agents: AgentSet) -> BTreeSet<Suballocation> {
        self.feasible_codes()
            .map(|c| Suballocation::restrict(&self.instance.decode(c), agents))
            .collect()
    }

    /// Feasible complete extensions of `nu`, in code order.
    pub fn extend(&self, nu: &Suballocation) -> Vec<Allocation> {
        self.feasible_codes()
            .map(|c| self.instance.decode(c))
            .filter(|x| nu.is_extended_by(x))
            .collect()
    }

    /// Whether `nu` has at least one feasible complete extension.
    pub fn is_extendable(&self, nu: &Suballocation) -> bool {
        self.feasible_codes()
            .any(|c| nu.is_extended_by(&self.instance.decode(c)))
    }
}

fn check_objects_are_agents(inst: &Instance) -> Result<()> {
    if inst.agents() != inst.objects() {
        return Err(Error::InvalidConstraint(
            "matching constraints need objects named exactly as the agents, in the same order"
                .into(),
        ));
    }
    Ok(())
}
