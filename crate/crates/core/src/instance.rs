//! Agents, objects, allocations and the small set types shared by every
//! other module.
//!
//! Allocations are identified by a mixed-radix code with base `|O|`, agent 0
//! being the least significant digit. All sets of allocations elsewhere in
//! the crate are bitsets over these codes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_AGENTS: usize = 32;
pub const MAX_OBJECTS: usize = 64;
/// Largest allocation space `|O|^n` accepted by [`Instance::new`].
pub const MAX_ALLOCATIONS: usize = 1 << 24;

/// A set of agents, stored as a bitmask over agent indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AgentSet(pub u32);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn singleton(agent: usize) -> Self {
        AgentSet(1 << agent)
    }

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            AgentSet(u32::MAX)
        } else {
            AgentSet((1u32 << n) - 1)
        }
    }

    pub fn from_agents<I: IntoIterator<Item = usize>>(agents: I) -> Self {
        agents
            .into_iter()
            .fold(AgentSet::EMPTY, |s, a| s.with(a))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, agent: usize) -> bool {
        self.0 >> agent & 1 == 1
    }

    pub fn with(self, agent: usize) -> Self {
        AgentSet(self.0 | 1 << agent)
    }

    pub fn without(self, agent: usize) -> Self {
        AgentSet(self.0 & !(1 << agent))
    }

    pub fn union(self, other: Self) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest agent in the set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> AgentIter {
        AgentIter(self.0)
    }

    /// All subsets of `self` (including the empty set and `self`), in
    /// increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = AgentSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(AgentSet(cur))
        })
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct AgentIter(u32);

impl Iterator for AgentIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let a = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(a)
    }
}

impl FromIterator<usize> for AgentSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        AgentSet::from_agents(iter)
    }
}

/// A set of objects, stored as a bitmask over object indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ObjectSet(pub u64);

impl ObjectSet {
    pub const EMPTY: ObjectSet = ObjectSet(0);

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, object: usize) -> bool {
        self.0 >> object & 1 == 1
    }

    pub fn with(self, object: usize) -> Self {
        ObjectSet(self.0 | 1 << object)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let o = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(o)
        })
    }
}

impl fmt::Debug for ObjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ObjectSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(ObjectSet::EMPTY, |s, o| s.with(o))
    }
}

/// A total assignment of one object index per agent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Allocation(Vec<u8>);

impl Allocation {
    pub fn new<I: IntoIterator<Item = usize>>(objects: I) -> Self {
        Allocation(objects.into_iter().map(|o| o as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> usize {
        self.0[agent] as usize
    }

    pub fn set(&mut self, agent: usize, object: usize) {
        self.0[agent] = object as u8;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&o| o as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, o) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")")
    }
}

/// Agents in coordinates where `x` and `y` disagree.
pub fn diff(x: &Allocation, y: &Allocation) -> AgentSet {
    x.iter()
        .zip(y.iter())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i)
        .collect()
}

/// A partial allocation: an object for every agent in `domain`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Suballocation {
    objects: Vec<Option<u8>>,
}

impl Suballocation {
    pub fn empty(n: usize) -> Self {
        Suballocation {
            objects: vec![None; n],
        }
    }

    pub fn restrict(x: &Allocation, agents: AgentSet) -> Self {
        Suballocation {
            objects: (0..x.len())
                .map(|i| agents.contains(i).then(|| x.get(i) as u8))
                .collect(),
        }
    }

    pub fn with(mut self, agent: usize, object: usize) -> Self {
        self.objects[agent] = Some(object as u8);
        self
    }

    pub fn domain(&self) -> AgentSet {
        self.objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn get(&self, agent: usize) -> Option<usize> {
        self.objects[agent].map(usize::from)
    }

    /// True when `x` agrees with every assigned coordinate.
    pub fn is_extended_by(&self, x: &Allocation) -> bool {
        self.objects
            .iter()
            .enumerate()
            .all(|(i, o)| o.map_or(true, |o| x.get(i) == o as usize))
    }
}

/// The agents and objects of a problem, in declaration order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instance {
    agents: Vec<String>,
    objects: Vec<String>,
    num_allocations: usize,
    radix: Vec<u32>,
}

impl Instance {
    pub fn new<A, O>(agents: A, objects: O) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        O: IntoIterator,
        O::Item: Into<String>,
    {
        let agents: Vec<String> = agents.into_iter().map(Into::into).collect();
        let objects: Vec<String> = objects.into_iter().map(Into::into).collect();
        if agents.is_empty() {
            return Err(Error::InvalidInstance("no agents".into()));
        }
        if objects.is_empty() {
            return Err(Error::InvalidInstance("no objects".into()));
        }
        if agents.len() > MAX_AGENTS {
            return Err(Error::InvalidInstance(format!(
                "{} agents exceeds the limit of {MAX_AGENTS}",
                agents.len()
            )));
        }
        if objects.len() > MAX_OBJECTS {
            return Err(Error::InvalidInstance(format!(
                "{} objects exceeds the limit of {MAX_OBJECTS}",
                objects.len()
            )));
        }
        check_unique("agent", &agents)?;
        check_unique("object", &objects)?;
        let m = objects.len() as u128;
        let needed = m.pow(agents.len() as u32);
        if needed > MAX_ALLOCATIONS as u128 {
            return Err(Error::Budget {
                what: "allocation space |O|^n",
                needed,
                budget: MAX_ALLOCATIONS as u128,
            });
        }
        let radix = (0..agents.len())
            .map(|i| (m as u32).pow(i as u32))
            .collect();
        Ok(Instance {
            num_allocations: needed as usize,
            agents,
            objects,
            radix,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_allocations(&self) -> usize {
        self.num_allocations
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn agent_name(&self, agent: usize) -> &str {
        &self.agents[agent]
    }

    pub fn object_name(&self, object: usize) -> &str {
        &self.objects[object]
    }

    pub fn agent_index(&self, name: &str) -> Result<usize> {
        self.agents
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn object_index(&self, name: &str) -> Result<usize> {
        self.objects
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| Error::UnknownObject(name.to_string()))
    }

    pub fn all_agents(&self) -> AgentSet {
        AgentSet::full(self.num_agents())
    }

    pub fn encode(&self, x: &Allocation) -> u32 {
        debug_assert_eq!(x.len(), self.num_agents());
        x.iter().zip(&self.radix).map(|(o, r)| o as u32 * r).sum()
    }

    pub fn decode(&self, code: u32) -> Allocation {
        Allocation::new((0..self.num_agents()).map(|i| self.object_at(code, i)))
    }

    /// Object held by `agent` in the allocation with the given code.
    pub fn object_at(&self, code: u32, agent: usize) -> usize {
        (code / self.radix[agent] % self.num_objects() as u32) as usize
    }

    /// Code of the allocation obtained by giving `agent` the object `object`.
    pub fn with_object(&self, code: u32, agent: usize, object: usize) -> u32 {
        let r = self.radix[agent];
        let old = code / r % self.num_objects() as u32;
        code - old * r + object as u32 * r
    }

    pub fn diff_codes(&self, x: u32, y: u32) -> AgentSet {
        let m = self.num_objects() as u32;
        let (mut x, mut y) = (x, y);
        let mut out = 0u32;
        for i in 0..self.num_agents() {
            if x % m != y % m {
                out |= 1 << i;
            }
            x /= m;
            y /= m;
        }
        AgentSet(out)
    }

    pub fn validate(&self, x: &Allocation) -> Result<()> {
        if x.len() != self.num_agents() {
            return Err(Error::InvalidInstance(format!(
                "allocation has {} entries, expected {}",
                x.len(),
                self.num_agents()
            )));
        }
        if let Some(o) = x.iter().find(|&o| o >= self.num_objects()) {
            return Err(Error::UnknownObject(format!("#{o}")));
        }
        Ok(())
    }

    /// Comma-joined object names, e.g. `"a,a,b"`.
    pub fn allocation_key(&self, x: &Allocation) -> String {
        x.iter()
            .map(|o| self.object_name(o))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_allocation_key(&self, key: &str) -> Result<Allocation> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        self.parse_allocation(&parts)
    }

    pub fn parse_allocation<S: AsRef<str>>(&self, names: &[S]) -> Result<Allocation> {
        if names.len() != self.num_agents() {
            return Err(Error::Parse(format!(
                "allocation has {} entries, expected {}",
                names.len(),
                self.num_agents()
            )));
        }
        names
            .iter()
            .map(|s| self.object_index(s.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(Allocation::new)
    }

    pub fn agent_names(&self, set: AgentSet) -> Vec<String> {
        set.iter().map(|i| self.agents[i].clone()).collect()
    }

    pub fn object_names(&self, x: &Allocation) -> Vec<String> {
        x.iter().map(|o| self.objects[o].clone()).collect()
    }
}

fn check_unique(kind: &str, names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::InvalidInstance(format!("empty {kind} name")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidInstance(format!("duplicate {kind} `{name}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc3() -> Instance {
        Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap()
    }

    #[test]
    fn encoding_is_little_endian_in_agents() {
        let inst = abc3();
        assert_eq!(inst.encode(&Allocation::new([1, 0, 0])), 1);
        assert_eq!(inst.encode(&Allocation::new([0, 0, 1])), 9);
        assert_eq!(inst.decode(26), Allocation::new([2, 2, 2]));
        for code in 0..27 {
            assert_eq!(inst.encode(&inst.decode(code)), code);
        }
    }

    #[test]
    fn with_object_rewrites_one_digit() {
        let inst = abc3();
        let x = inst.encode(&Allocation::new([0, 1, 2]));
        let y = inst.with_object(x, 1, 0);
        assert_eq!(inst.decode(y), Allocation::new([0, 0, 2]));
    }

    #[test]
    fn diff_examples() {
        let x = Allocation::new([0, 0, 0]);
        let y = Allocation::new([1, 0, 0]);
        assert_eq!(diff(&x, &y), AgentSet::singleton(0));
        assert_eq!(diff(&x, &x), AgentSet::EMPTY);
        let abc = Allocation::new([0, 1, 2]);
        let cba = Allocation::new([2, 1, 0]);
        assert_eq!(diff(&abc, &cba), AgentSet::from_agents([0, 2]));
        let inst = abc3();
        assert_eq!(
            inst.diff_codes(inst.encode(&abc), inst.encode(&cba)),
            AgentSet::from_agents([0, 2])
        );
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(Instance::new(Vec::<String>::new(), ["a"]).is_err());
        assert!(Instance::new(["1"], Vec::<String>::new()).is_err());
        assert!(Instance::new(["1", "1"], ["a"]).is_err());
        assert!(matches!(
            Instance::new((0..13).map(|i| i.to_string()), ["a", "b", "c", "d"]),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn subsets_enumerates_all() {
        let s = AgentSet::from_agents([0, 2, 3]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|t| t.is_subset(s)));
        assert_eq!(subs[0], AgentSet::EMPTY);
        assert_eq!(*subs.last().unwrap(), s);
    }

    #[test]
    fn allocation_keys_round_trip() {
        let inst = abc3();
        let x = inst.parse_allocation_key("a,a,b").unwrap();
        assert_eq!(x, Allocation::new([0, 0, 1]));
        assert_eq!(inst.allocation_key(&x), "a,a,b");
        assert!(inst.parse_allocation_key("a,z,b").is_err());
        assert!(inst.parse_allocation_key("a,b").is_err());
    }
}
