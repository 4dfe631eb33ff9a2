//! The local priority algorithm, mechanism tables, and marginal mechanisms.

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};
use crate::preference::{Preference, Profile, ProfileSpace};
use crate::verdict::{Verdict, Witness};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub allocation: Allocation,
    /// Agents who compromise at this allocation; empty at a feasible end.
    pub compromisers: AgentSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub profile: Profile,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn allocations(&self) -> impl Iterator<Item = &Allocation> + '_ {
        self.steps.iter().map(|s| &s.allocation)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &Allocation {
        &self.steps.last().expect("trace has a first step").allocation
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Final { allocation: Allocation, trace: Trace },
    /// `agent` had no object left below their current one after `step`
    /// allocations had been visited.
    Exhausted {
        agent: usize,
        step: usize,
        trace: Trace,
    },
}

impl Outcome {
    pub fn trace(&self) -> &Trace {
        match self {
            Outcome::Final { trace, .. } | Outcome::Exhausted { trace, .. } => trace,
        }
    }

    pub fn allocation(&self) -> Option<&Allocation> {
        match self {
            Outcome::Final { allocation, .. } => Some(allocation),
            Outcome::Exhausted { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Exhaustion {
    pub agent: usize,
    pub step: usize,
}

fn step_cap(inst: &Instance) -> usize {
    inst.num_agents() * (inst.num_objects() - 1) + 1
}

/// Runs the algorithm on allocation codes without recording a trace.
pub(crate) fn descend<'a, F>(
    alpha: &CompromiserAssignment,
    pref: F,
    objects: &mut [u8],
) -> std::result::Result<u32, Exhaustion>
where
    F: Fn(usize) -> &'a Preference,
{
    let inst = alpha.instance();
    let cap = step_cap(inst);
    for (i, o) in objects.iter_mut().enumerate() {
        *o = pref(i).top() as u8;
    }
    let mut code = encode_objects(inst, objects);
    let mut step = 1;
    loop {
        let cell = alpha.cell(code);
        if cell.is_empty() {
            return Ok(code);
        }
        for i in cell.iter() {
            if pref(i).next_below(objects[i] as usize).is_none() {
                return Err(Exhaustion { agent: i, step });
            }
        }
        for i in cell.iter() {
            let next = pref(i).next_below(objects[i] as usize).unwrap();
            objects[i] = next as u8;
            code = inst.with_object(code, i, next);
        }
        step += 1;
        assert!(step <= cap, "local priority run exceeded {cap} steps");
    }
}

fn encode_objects(inst: &Instance, objects: &[u8]) -> u32 {
    let m = inst.num_objects() as u32;
    objects.iter().rev().fold(0, |acc, &o| acc * m + o as u32)
}

/// Executes the local priority algorithm for `alpha` at `p`, recording
/// every allocation visited.
pub fn run_lp(alpha: &CompromiserAssignment, p: &Profile) -> Result<Outcome> {
    let inst = alpha.instance();
    p.validate(inst)?;
    let cap = step_cap(inst);
    let mut x = p.tops();
    let mut steps = Vec::new();
    loop {
        let cell = alpha.cell_of(&x);
        steps.push(TraceStep {
            allocation: x.clone(),
            compromisers: cell,
        });
        if cell.is_empty() {
            let trace = Trace {
                profile: p.clone(),
                steps,
            };
            return Ok(Outcome::Final {
                allocation: x,
                trace,
            });
        }
        if let Some(agent) = cell.iter().find(|&i| p.get(i).next_below(x.get(i)).is_none()) {
            let step = steps.len();
            let trace = Trace {
                profile: p.clone(),
                steps,
            };
            return Ok(Outcome::Exhausted { agent, step, trace });
        }
        for i in cell.iter() {
            x.set(i, p.get(i).next_below(x.get(i)).unwrap());
        }
        assert!(steps.len() < cap, "local priority run exceeded {cap} steps");
    }
}

/// A feasible mechanism given extensionally: one outcome code per profile
/// index of the instance's profile space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismTable {
    constraint: Constraint,
    space: Arc<ProfileSpace>,
    outcomes: Vec<u32>,
}

impl MechanismTable {
    pub fn new(constraint: Constraint, space: Arc<ProfileSpace>, outcomes: Vec<u32>) -> Result<Self> {
        let inst = constraint.instance();
        if space.num_agents() != inst.num_agents() || space.num_objects() != inst.num_objects() {
            return Err(Error::InstanceMismatch(
                "profile space does not match the constraint's instance".into(),
            ));
        }
        if outcomes.len() != space.len() {
            return Err(Error::InvalidSpec(format!(
                "{} outcomes for {} profiles",
                outcomes.len(),
                space.len()
            )));
        }
        if let Some(k) = outcomes.iter().position(|&c| !constraint.is_feasible(c)) {
            return Err(Error::InvalidSpec(format!(
                "outcome {} at profile {} is infeasible",
                inst.allocation_key(&inst.decode(outcomes[k])),
                space.profile(k).display(inst)
            )));
        }
        Ok(MechanismTable {
            constraint,
            space,
            outcomes,
        })
    }

    /// Tabulates an arbitrary mechanism given as a function of the profile.
    pub fn from_fn<F>(constraint: Constraint, f: F) -> Result<Self>
    where
        F: Fn(&Profile) -> Allocation + Sync,
    {
        let inst = constraint.instance().clone();
        let space = Arc::new(ProfileSpace::new(&inst)?);
        let outcomes: Vec<u32> = (0..space.len())
            .into_par_iter()
            .map(|k| inst.encode(&f(&space.profile(k))))
            .collect();
        Self::new(constraint, space, outcomes)
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn instance(&self) -> &Arc<Instance> {
        self.constraint.instance()
    }

    pub fn space(&self) -> &Arc<ProfileSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[u32] {
        &self.outcomes
    }

    pub fn code(&self, index: usize) -> u32 {
        self.outcomes[index]
    }

    pub fn outcome(&self, index: usize) -> Allocation {
        self.instance().decode(self.outcomes[index])
    }

    pub fn outcome_of(&self, p: &Profile) -> Result<Allocation> {
        p.validate(self.instance())?;
        Ok(self.outcome(self.space.index(p)))
    }

    pub fn profile(&self, index: usize) -> Profile {
        self.space.profile(index)
    }

    /// Allocation codes chosen at some profile.
    pub fn image(&self) -> FixedBitSet {
        let mut image = FixedBitSet::with_capacity(self.instance().num_allocations());
        for &c in &self.outcomes {
            image.insert(c as usize);
        }
        image
    }

    pub fn image_constraint(&self) -> Constraint {
        Constraint::from_codes(self.instance().clone(), self.image().ones().map(|c| c as u32))
            .expect("image of a total table is nonempty")
    }

    /// The same table judged against a different constraint containing its
    /// image.
    pub fn with_constraint(&self, constraint: Constraint) -> Result<Self> {
        Self::new(constraint, self.space.clone(), self.outcomes.clone())
    }
}

fn first_witness<T, F>(len: usize, f: F) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync,
{
    (0..len)
        .into_par_iter()
        .filter_map(|k| f(k).map(|t| (k, t)))
        .find_first(|_| true)
}

fn run_index(
    alpha: &CompromiserAssignment,
    space: &ProfileSpace,
    index: usize,
    objects: &mut [u8],
) -> std::result::Result<u32, Exhaustion> {
    descend(alpha, |i| space.pref(space.digit(index, i)), objects)
}

/// Checks that `alpha` never exhausts an agent; the witness is the first
/// exhausting profile in index order.
pub fn is_implementable(alpha: &CompromiserAssignment) -> Result<Verdict> {
    let space = ProfileSpace::new(alpha.instance())?;
    Ok(implementability(alpha, &space))
}

pub(crate) fn implementability(alpha: &CompromiserAssignment, space: &ProfileSpace) -> Verdict {
    let n = space.num_agents();
    let hit = first_witness(space.len(), |k| {
        let mut objects = vec![0u8; n];
        run_index(alpha, space, k, &mut objects).err()
    });
    Verdict::from_witness(hit.map(|(k, e)| Witness::Exhausted {
        profile: space.profile(k),
        agent: e.agent,
        step: e.step,
    }))
}

/// The local priority mechanism of `alpha` as a table.
pub fn tabulate(alpha: &CompromiserAssignment) -> Result<MechanismTable> {
    let space = Arc::new(ProfileSpace::new(alpha.instance())?);
    tabulate_in(alpha, space)
}

pub fn tabulate_in(alpha: &CompromiserAssignment, space: Arc<ProfileSpace>) -> Result<MechanismTable> {
    let n = space.num_agents();
    let results: Vec<std::result::Result<u32, Exhaustion>> = (0..space.len())
        .into_par_iter()
        .map_init(|| vec![0u8; n], |objects, k| run_index(alpha, &space, k, objects))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => outcomes.push(c),
            Err(e) => {
                let inst = alpha.instance();
                return Err(Error::NotImplementable {
                    profile: space.profile(k).display(inst),
                    agent: inst.agent_name(e.agent).to_string(),
                    step: e.step,
                });
            }
        }
    }
    Ok(MechanismTable {
        constraint: alpha.constraint().clone(),
        space,
        outcomes,
    })
}

/// Sequential tabulation returning `None` on exhaustion; used by searches
/// that tabulate many assignments.
pub(crate) fn try_tabulate(alpha: &CompromiserAssignment, space: &Arc<ProfileSpace>) -> Option<MechanismTable> {
    let mut objects = vec![0u8; space.num_agents()];
    let mut outcomes = Vec::with_capacity(space.len());
    for k in 0..space.len() {
        outcomes.push(run_index(alpha, space, k, &mut objects).ok()?);
    }
    Some(MechanismTable {
        constraint: alpha.constraint().clone(),
        space: space.clone(),
        outcomes,
    })
}

/// Pointwise comparison of two tables over the same instance.
pub fn mechanisms_equal(f: &MechanismTable, g: &MechanismTable) -> Result<Verdict> {
    if f.instance() != g.instance() {
        return Err(Error::InstanceMismatch("tables over different instances".into()));
    }
    let first = f.outcomes.iter().zip(&g.outcomes).position(|(a, b)| a != b);
    Ok(Verdict::from_witness(first.map(|k| Witness::TableMismatch {
        profile: f.profile(k),
        left: f.outcome(k),
        right: g.outcome(k),
    })))
}

/// True when the allocations of `short` are a suffix of those of `long`.
pub fn is_truncation(long: &Trace, short: &Trace) -> bool {
    let a: Vec<_> = long.allocations().collect();
    let b: Vec<_> = short.allocations().collect();
    b.len() <= a.len() && a[a.len() - b.len()..] == b[..]
}

/// Sizes of the upper contour sets of each agent's object.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RankVector(pub Vec<usize>);

impl RankVector {
    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &RankVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

pub fn rank_vector(p: &Profile, x: &Allocation) -> RankVector {
    RankVector(crate::preference::upper_counts(p, x))
}

/// The mechanism induced on the agents without a fixed preference.
///
/// `fixed[i]` is `Some` for every agent held fixed. The result lives on a
/// sub-instance whose agents are the free ones, in declaration order, and
/// its constraint is the image of the marginal map.
pub fn marginal(f: &MechanismTable, fixed: &[Option<Preference>]) -> Result<MechanismTable> {
    let inst = f.instance();
    let n = inst.num_agents();
    if fixed.len() != n {
        return Err(Error::InvalidSpec(format!(
            "marginal needs {n} entries, got {}",
            fixed.len()
        )));
    }
    let m = inst.num_objects();
    if let Some(p) = fixed.iter().flatten().find(|p| p.len() != m) {
        return Err(Error::InvalidPreference(format!(
            "fixed preference ranks {} objects, expected {m}",
            p.len()
        )));
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    if free.is_empty() {
        return Err(Error::InvalidSpec("marginal needs at least one free agent".into()));
    }
    let sub = Arc::new(Instance::new(
        free.iter().map(|&i| inst.agent_name(i).to_string()),
        inst.objects().iter().cloned(),
    )?);
    let space = Arc::new(ProfileSpace::new(&sub)?);
    let outcomes: Vec<u32> = (0..space.len())
        .map(|k| {
            let digits = space.digits(k);
            let mut full: Vec<usize> = (0..n)
                .map(|i| fixed[i].as_ref().map_or(0, |p| p.lex_rank()))
                .collect();
            for (j, &i) in free.iter().enumerate() {
                full[i] = digits[j];
            }
            let x = f.instance().decode(f.code(f.space().index_of_digits(&full)));
            sub.encode(&Allocation::new(free.iter().map(|&i| x.get(i))))
        })
        .collect();
    let image: Vec<u32> = {
        let mut v = outcomes.clone();
        v.sort_unstable();
        v.dedup();
        v
    };
    let constraint = Constraint::from_codes(sub, image)?;
    MechanismTable::new(constraint, space, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pref(m: usize, r: &[usize]) -> Preference {
        assert_eq!(r.len(), m);
        Preference::new(r.iter().copied()).unwrap()
    }

    fn two_by_two_exhausting() -> CompromiserAssignment {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b"]).unwrap());
        let c = Constraint::explicit(inst, [Allocation::new([0, 1])]).unwrap();
        CompromiserAssignment::from_fn(c, |_| AgentSet::singleton(0)).unwrap()
    }

    #[test]
    fn exhausted_run() {
        let alpha = two_by_two_exhausting();
        let p = Profile::uniform(2, pref(2, &[0, 1]));
        match run_lp(&alpha, &p).unwrap() {
            Outcome::Exhausted { agent, step, trace } => {
                assert_eq!((agent, step), (0, 2));
                assert_eq!(trace.len(), 2);
                assert_eq!(trace.last(), &Allocation::new([1, 0]));
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        let v = is_implementable(&alpha).unwrap();
        assert!(!v.holds);
        let Some(Witness::Exhausted { profile, .. }) = &v.witness else {
            panic!()
        };
        assert_eq!(profile.tops(), Allocation::new([0, 0]));
        assert_eq!(v.witness.unwrap().recheck_alpha(&alpha), Some(true));
        assert!(matches!(tabulate(&alpha), Err(Error::NotImplementable { .. })));
    }

    #[test]
    fn unconstrained_is_identity_on_tops() {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b", "c"]).unwrap());
        let alpha = CompromiserAssignment::from_fn(Constraint::unconstrained(inst), |_| {
            unreachable!()
        })
        .unwrap();
        assert!(is_implementable(&alpha).unwrap().holds);
        let f = tabulate(&alpha).unwrap();
        for k in 0..f.len() {
            assert_eq!(f.outcome(k), f.profile(k).tops());
        }
        let p = f.profile(7);
        assert_eq!(run_lp(&alpha, &p).unwrap().trace().len(), 1);
    }

    #[test]
    fn fast_path_matches_traced_run() {
        let inst = Arc::new(Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap());
        let c = Constraint::house(inst).unwrap();
        let alpha = CompromiserAssignment::from_fn(c, |x| {
            // lowest-indexed agent among those sharing an object with someone earlier
            let mut set = AgentSet::EMPTY;
            for i in 0..x.len() {
                if (0..i).any(|j| x.get(j) == x.get(i)) {
                    set = set.with(i);
                }
            }
            set
        })
        .unwrap();
        let f = tabulate(&alpha).unwrap();
        for k in 0..f.len() {
            let out = run_lp(&alpha, &f.profile(k)).unwrap();
            assert_eq!(out.allocation(), Some(&f.outcome(k)));
        }
    }

    #[test]
    fn truncation() {
        let a = Allocation::new([0, 0]);
        let b = Allocation::new([1, 0]);
        let p = Profile::uniform(2, Preference::identity(2));
        let mk = |xs: &[&Allocation]| Trace {
            profile: p.clone(),
            steps: xs
                .iter()
                .map(|x| TraceStep {
                    allocation: (*x).clone(),
                    compromisers: AgentSet::EMPTY,
                })
                .collect(),
        };
        let long = mk(&[&a, &b]);
        assert!(is_truncation(&long, &long));
        assert!(is_truncation(&long, &mk(&[&b])));
        assert!(!is_truncation(&long, &mk(&[&b, &a])));
        assert!(!is_truncation(&mk(&[&b]), &long));
    }

    #[test]
    fn rank_vector_example() {
        let p = Profile::uniform(3, Preference::identity(3));
        assert_eq!(rank_vector(&p, &Allocation::new([2, 1, 1])).0, vec![2, 1, 1]);
        assert_eq!(rank_vector(&p, &p.tops()).0, vec![0, 0, 0]);
    }

    #[test]
    fn marginal_of_everything_is_the_table() {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b"]).unwrap());
        let c = Constraint::social(inst).unwrap();
        let f = MechanismTable::from_fn(c, |p| Allocation::new([p.get(0).top(); 2])).unwrap();
        let g = marginal(&f, &[None, None]).unwrap();
        assert_eq!(g.outcomes(), f.outcomes());
        let h = marginal(&f, &[None, Some(Preference::identity(2))]).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.instance().agents(), ["1"]);
        assert_eq!(h.outcome(0), Allocation::new([0]));
        assert_eq!(h.outcome(1), Allocation::new([1]));
    }
}
