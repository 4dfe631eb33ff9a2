//! Exact brute-force oracles for incentive and efficiency axioms, and the
//! test of whether a mechanism is a local priority mechanism.

use rayon::prelude::*;

use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::engine::{mechanisms_equal, tabulate, MechanismTable};
use crate::error::{Error, Result};
use crate::instance::{diff, AgentSet, Allocation, Instance};
use crate::preference::{Profile, ProfileSpace};
use crate::verdict::{bottom_rank_tops, Verdict, Witness};

/// Which coalitions the group strategy-proofness check tries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GspMode {
    /// Single agents and pairs.
    #[default]
    Pairs,
    /// Every nonempty coalition.
    Exhaustive,
}

/// Precomputed lookups shared by the sweeps.
struct Sweep<'a> {
    f: &'a MechanismTable,
    space: &'a ProfileSpace,
    inst: &'a Instance,
    n: usize,
    // rank[d][o]: position of object o in ranking number d
    rank: Vec<Vec<u8>>,
}

impl<'a> Sweep<'a> {
    fn new(f: &'a MechanismTable) -> Self {
        let space = f.space().as_ref();
        let m = space.num_objects();
        let rank = space
            .prefs()
            .iter()
            .map(|p| (0..m).map(|o| p.rank(o) as u8).collect())
            .collect();
        Sweep {
            f,
            space,
            inst: f.instance().as_ref(),
            n: space.num_agents(),
            rank,
        }
    }

    fn obj(&self, index: usize, agent: usize) -> usize {
        self.inst.object_at(self.f.code(index), agent)
    }

    /// Rank, under agent `i`'s preference at profile `truth`, of the object
    /// `i` receives at profile `at`.
    fn rank_at(&self, truth: usize, i: usize, at: usize) -> u8 {
        self.rank[self.space.digit(truth, i)][self.obj(at, i)]
    }

    fn first<T, F>(&self, check: F) -> Option<T>
    where
        T: Send,
        F: Fn(usize) -> Option<T> + Sync + Send,
    {
        (0..self.space.len())
            .into_par_iter()
            .filter_map(check)
            .find_first(|_| true)
    }

    /// Looks for a profitable joint misreport of `coalition` at `index`.
    fn coalition_deviation(&self, index: usize, coalition: &[usize]) -> Option<usize> {
        let np = self.space.num_prefs();
        let truthful = self.f.code(index);
        let mut digits = vec![0usize; coalition.len()];
        loop {
            let mut k = index;
            for (&i, &d) in coalition.iter().zip(&digits) {
                k = self.space.with_digit(k, i, d);
            }
            if k != index && self.f.code(k) != truthful {
                let mut strict = false;
                let mut weak = true;
                for &i in coalition {
                    let (a, b) = (self.rank_at(index, i, k), self.rank_at(index, i, index));
                    weak &= a <= b;
                    strict |= a < b;
                }
                if weak && strict {
                    return Some(k);
                }
            }
            // odometer, last member fastest
            let mut pos = coalition.len();
            loop {
                if pos == 0 {
                    return None;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < np {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    fn manipulation(&self, index: usize, coalition: AgentSet, report: usize) -> Witness {
        Witness::Manipulation {
            profile: self.space.profile(index),
            coalition,
            report: self.space.profile(report),
            truthful: self.f.outcome(index),
            manipulated: self.f.outcome(report),
        }
    }
}

fn coalitions(n: usize, max_size: usize) -> Vec<AgentSet> {
    let mut all: Vec<AgentSet> = AgentSet::full(n)
        .subsets()
        .filter(|s| !s.is_empty() && s.len() <= max_size)
        .collect();
    all.sort_by_key(|s| (s.len(), s.bits()));
    all
}

fn deviation_check(f: &MechanismTable, max_size: usize) -> Verdict {
    let sw = Sweep::new(f);
    let coals: Vec<(AgentSet, Vec<usize>)> = coalitions(sw.n, max_size)
        .into_iter()
        .map(|c| (c, c.iter().collect()))
        .collect();
    let hit = sw.first(|index| {
        coals.iter().find_map(|(set, members)| {
            sw.coalition_deviation(index, members)
                .map(|report| (index, *set, report))
        })
    });
    Verdict::from_witness(hit.map(|(index, set, report)| sw.manipulation(index, set, report)))
}

/// No agent gains by misreporting alone.
pub fn is_strategy_proof(f: &MechanismTable) -> Verdict {
    deviation_check(f, 1)
}

/// No coalition has a joint misreport that weakly helps every member and
/// strictly helps one.
pub fn is_group_strategy_proof(f: &MechanismTable, mode: GspMode) -> Verdict {
    let max = match mode {
        GspMode::Pairs => 2,
        GspMode::Exhaustive => f.instance().num_agents(),
    };
    deviation_check(f, max)
}

/// No agent can change someone else's object without changing their own.
pub fn is_nonbossy(f: &MechanismTable) -> Verdict {
    let sw = Sweep::new(f);
    let np = sw.space.num_prefs();
    let hit = sw.first(|index| {
        (0..sw.n).find_map(|i| {
            (0..np).find_map(|d| {
                let k = sw.space.with_digit(index, i, d);
                let bossy = sw.f.code(k) != sw.f.code(index) && sw.obj(k, i) == sw.obj(index, i);
                bossy.then_some((i, k))
            })
        }).map(|(i, k)| (index, i, k))
    });
    Verdict::from_witness(hit.map(|(index, agent, k)| Witness::Bossy {
        profile: sw.space.profile(index),
        agent,
        report: sw.space.profile(k),
        truthful: f.outcome(index),
        manipulated: f.outcome(k),
    }))
}

/// Whenever every agent's lower contour set at the chosen object weakly
/// grows, the outcome stays put.
pub fn is_maskin_monotonic(f: &MechanismTable) -> Verdict {
    let sw = Sweep::new(f);
    let np = sw.space.num_prefs();
    let m = sw.space.num_objects();
    // compatible[d][o]: rankings whose lower contour at o contains that of d
    let lower: Vec<Vec<u64>> = sw
        .space
        .prefs()
        .iter()
        .map(|p| (0..m).map(|o| p.lower_contour(o).0).collect())
        .collect();
    let compatible: Vec<Vec<Vec<usize>>> = (0..np)
        .map(|d| {
            (0..m)
                .map(|o| {
                    (0..np)
                        .filter(|&e| lower[d][o] & !lower[e][o] == 0)
                        .collect()
                })
                .collect()
        })
        .collect();
    let hit = sw.first(|index| {
        let x = sw.f.code(index);
        let choices: Vec<&Vec<usize>> = (0..sw.n)
            .map(|i| &compatible[sw.space.digit(index, i)][sw.obj(index, i)])
            .collect();
        // rankings are listed in increasing order, so the first hit in this
        // odometer is the smallest profile index
        let mut pos = vec![0usize; sw.n];
        loop {
            let digits: Vec<usize> = (0..sw.n).map(|i| choices[i][pos[i]]).collect();
            let k = sw.space.index_of_digits(&digits);
            if sw.f.code(k) != x {
                return Some((index, k));
            }
            let mut i = sw.n;
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                pos[i] += 1;
                if pos[i] < choices[i].len() {
                    break;
                }
                pos[i] = 0;
            }
        }
    });
    Verdict::from_witness(hit.map(|(index, k)| Witness::Maskin {
        profile: sw.space.profile(index),
        transformed: sw.space.profile(k),
        before: f.outcome(index),
        after: f.outcome(k),
    }))
}

/// No feasible allocation in `c` Pareto improves on any outcome.
pub fn is_pareto_efficient(f: &MechanismTable, c: &Constraint) -> Result<Verdict> {
    if c.instance() != f.instance() {
        return Err(Error::InstanceMismatch("constraint and table differ".into()));
    }
    let sw = Sweep::new(f);
    let feasible: Vec<u32> = c.feasible_codes().collect();
    let inst = sw.inst;
    let hit = sw.first(|index| {
        let x = sw.f.code(index);
        let ranks: Vec<&Vec<u8>> = (0..sw.n).map(|i| &sw.rank[sw.space.digit(index, i)]).collect();
        feasible
            .iter()
            .copied()
            .find(|&y| {
                y != x
                    && (0..sw.n).all(|i| {
                        ranks[i][inst.object_at(y, i)] <= ranks[i][inst.object_at(x, i)]
                    })
            })
            .map(|y| (index, y))
    });
    Ok(Verdict::from_witness(hit.map(|(index, y)| Witness::Pareto {
        profile: sw.space.profile(index),
        outcome: f.outcome(index),
        dominating: inst.decode(y),
    })))
}

fn tops_code(sw: &Sweep<'_>, index: usize) -> u32 {
    let m = sw.space.num_objects();
    let block = sw.space.num_prefs() / m;
    (0..sw.n)
        .rev()
        .fold(0u32, |acc, i| acc * m as u32 + (sw.space.digit(index, i) / block) as u32)
}

/// Whenever the top-choice vector is in the image, it is chosen.
pub fn check_unanimity(f: &MechanismTable) -> Verdict {
    let sw = Sweep::new(f);
    let image = f.image();
    let hit = sw.first(|index| {
        let t = tops_code(&sw, index);
        (image.contains(t as usize) && f.code(index) != t).then_some(index)
    });
    Verdict::from_witness(hit.map(|index| Witness::Unanimity {
        profile: f.profile(index),
        outcome: f.outcome(index),
    }))
}

/// For every top-choice vector `μ`, the agents who never receive `μ_i` at
/// any profile with those tops. Indexed by allocation code.
pub fn fixed_compromiser_map(f: &MechanismTable) -> Vec<AgentSet> {
    let sw = Sweep::new(f);
    let inst = sw.inst;
    let mut fixed = vec![inst.all_agents(); inst.num_allocations()];
    for index in 0..sw.space.len() {
        let mu = tops_code(&sw, index);
        fixed[mu as usize] = fixed[mu as usize].intersection(inst.diff_codes(mu, f.code(index)));
    }
    fixed
}

/// `⋂ {i : f(≻)_i ≠ μ_i}` over the profiles `≻` whose tops are `μ`.
pub fn fixed_compromisers(f: &MechanismTable, mu: &Allocation) -> Result<AgentSet> {
    f.instance().validate(mu)?;
    let space = f.space();
    Ok(space
        .indices_with_tops(mu)
        .into_iter()
        .fold(f.instance().all_agents(), |acc, k| {
            acc.intersection(diff(&f.outcome(k), mu))
        }))
}

/// A short list of profiles with tops `mu` whose disagreement sets already
/// intersect to the empty set, if the full intersection is empty.
fn emptying_certificate(f: &MechanismTable, mu: &Allocation) -> Option<Vec<usize>> {
    let mut common = f.instance().all_agents();
    let mut chosen = Vec::new();
    for k in f.space().indices_with_tops(mu) {
        let next = common.intersection(diff(&f.outcome(k), mu));
        if next != common {
            chosen.push(k);
            common = next;
            if common.is_empty() {
                return Some(chosen);
            }
        }
    }
    None
}

/// Every allocation outside the image has a nonempty set of fixed
/// compromisers.
pub fn check_fixed_compromiser(f: &MechanismTable) -> Verdict {
    let fixed = fixed_compromiser_map(f);
    let image = f.image();
    let inst = f.instance();
    let hit = (0..inst.num_allocations() as u32)
        .find(|&c| !image.contains(c as usize) && fixed[c as usize].is_empty());
    Verdict::from_witness(hit.map(|c| {
        let mu = inst.decode(c);
        let chosen = emptying_certificate(f, &mu).expect("intersection is empty");
        Witness::FixedCompromiser {
            mu,
            profiles: chosen.iter().map(|&k| f.profile(k)).collect(),
            outcomes: chosen.iter().map(|&k| f.outcome(k)).collect(),
        }
    }))
}

/// Refutes the fixed compromiser condition for a mechanism too large to
/// tabulate, from a list of profiles with tops `mu`.
///
/// `mu` must be infeasible under `c`, a constraint containing every outcome
/// of the mechanism, so that it lies outside the image. Returns the
/// witness when the disagreement sets of `profiles` already intersect to the
/// empty set, and `None` when these profiles do not settle the question.
pub fn refute_fixed_compromiser<F>(
    c: &Constraint,
    mechanism: F,
    mu: &Allocation,
    profiles: &[Profile],
) -> Result<Option<Witness>>
where
    F: Fn(&Profile) -> Allocation,
{
    let inst = c.instance();
    inst.validate(mu)?;
    if c.contains(mu) {
        return Err(Error::InvalidSpec(format!(
            "{} is feasible, so it may lie in the image",
            inst.allocation_key(mu)
        )));
    }
    let mut common = inst.all_agents();
    let mut outcomes = Vec::with_capacity(profiles.len());
    for p in profiles {
        p.validate(inst)?;
        if p.tops() != *mu {
            return Err(Error::InvalidSpec(format!(
                "profile {} does not have tops {}",
                p.display(inst),
                inst.allocation_key(mu)
            )));
        }
        let x = mechanism(p);
        if !c.contains(&x) {
            return Err(Error::InvalidSpec(format!(
                "mechanism chose infeasible {}",
                inst.allocation_key(&x)
            )));
        }
        common = common.intersection(diff(&x, mu));
        outcomes.push(x);
    }
    Ok(common.is_empty().then(|| Witness::FixedCompromiser {
        mu: mu.clone(),
        profiles: profiles.to_vec(),
        outcomes,
    }))
}

/// For every `μ` outside the image and every profile with tops `μ`,
/// bottom-ranking `μ_i` for the fixed compromisers `i` keeps the outcome.
pub fn check_compromiser_invariance(f: &MechanismTable) -> Verdict {
    let fixed = fixed_compromiser_map(f);
    let image = f.image();
    let sw = Sweep::new(f);
    let bottom: Vec<usize> = sw
        .space
        .prefs()
        .iter()
        .map(|p| p.with_bottom(p.top()).lex_rank())
        .collect();
    let hit = sw.first(|index| {
        let mu = tops_code(&sw, index);
        if image.contains(mu as usize) {
            return None;
        }
        let k = fixed[mu as usize].iter().fold(index, |k, i| {
            sw.space.with_digit(k, i, bottom[sw.space.digit(index, i)])
        });
        (f.code(k) != f.code(index)).then_some((index, mu, k))
    });
    Verdict::from_witness(hit.map(|(index, mu, k)| {
        let profile = f.profile(index);
        let compromisers = fixed[mu as usize];
        debug_assert_eq!(bottom_rank_tops(&profile, compromisers), f.profile(k));
        Witness::CompromiserInvariance {
            mu: sw.inst.decode(mu),
            profile,
            compromisers,
            transformed: f.profile(k),
            before: f.outcome(index),
            after: f.outcome(k),
        }
    }))
}

/// The canonical assignment over the image of `f`: each allocation outside
/// the image maps to its fixed compromisers.
pub fn derive_alpha(f: &MechanismTable) -> Result<CompromiserAssignment> {
    let image = f.image_constraint();
    let fixed = fixed_compromiser_map(f);
    let cells = (0..fixed.len())
        .map(|c| {
            if image.is_feasible(c as u32) {
                AgentSet::EMPTY
            } else {
                fixed[c]
            }
        })
        .collect();
    CompromiserAssignment::new(image, cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Unanimity,
    FixedCompromiser,
    CompromiserInvariance,
    /// The derived assignment fails to reproduce the table. Never expected;
    /// reported rather than assumed away.
    Reproduction,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Unanimity => "unanimity",
            Condition::FixedCompromiser => "fixed_compromiser",
            Condition::CompromiserInvariance => "compromiser_invariance",
            Condition::Reproduction => "reproduction",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalPriorityReport {
    pub verdict: Verdict,
    pub failed: Option<Condition>,
    /// The inducing assignment when the table is a local priority mechanism.
    pub alpha: Option<CompromiserAssignment>,
    /// Allocations feasible under the table's declared constraint that no
    /// profile reaches; the test itself works with the image.
    pub unreachable: Vec<Allocation>,
}

impl LocalPriorityReport {
    fn failure(condition: Condition, verdict: Verdict, unreachable: Vec<Allocation>) -> Self {
        LocalPriorityReport {
            verdict,
            failed: Some(condition),
            alpha: None,
            unreachable,
        }
    }
}

/// Checks unanimity, the fixed compromiser condition and compromiser
/// invariance, then confirms that the derived assignment reproduces `f`.
pub fn is_local_priority(f: &MechanismTable) -> Result<LocalPriorityReport> {
    let image = f.image();
    let inst = f.instance();
    let unreachable: Vec<Allocation> = f
        .constraint()
        .feasible_codes()
        .filter(|&c| !image.contains(c as usize))
        .map(|c| inst.decode(c))
        .collect();
    for (condition, check) in [
        (Condition::Unanimity, check_unanimity as fn(&MechanismTable) -> Verdict),
        (Condition::FixedCompromiser, check_fixed_compromiser),
        (Condition::CompromiserInvariance, check_compromiser_invariance),
    ] {
        let v = check(f);
        if !v.holds {
            return Ok(LocalPriorityReport::failure(condition, v, unreachable));
        }
    }
    let alpha = derive_alpha(f)?;
    let g = match tabulate(&alpha) {
        Ok(g) => g,
        Err(Error::NotImplementable { .. }) => {
            let v = crate::engine::is_implementable(&alpha)?;
            return Ok(LocalPriorityReport::failure(Condition::Reproduction, v, unreachable));
        }
        Err(e) => return Err(e),
    };
    let v = mechanisms_equal(&g, f)?;
    if !v.holds {
        return Ok(LocalPriorityReport::failure(Condition::Reproduction, v, unreachable));
    }
    Ok(LocalPriorityReport {
        verdict: Verdict::pass(),
        failed: None,
        alpha: Some(alpha),
        unreachable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn house3() -> Constraint {
        let inst = Arc::new(Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap());
        Constraint::house(inst).unwrap()
    }

    #[test]
    fn constant_mechanism_is_not_efficient() {
        let c = house3();
        let f = MechanismTable::from_fn(c.clone(), |_| Allocation::new([0, 1, 2])).unwrap();
        let v = is_pareto_efficient(&f, &c).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.as_ref().unwrap().recheck_table(&f), Some(true));
        // a constant mechanism cannot be manipulated
        assert!(is_group_strategy_proof(&f, GspMode::Exhaustive).holds);
        assert!(is_nonbossy(&f).holds);
        assert!(is_maskin_monotonic(&f).holds);
        // its image is a single point, so everything else is a fixed compromise
        assert!(check_unanimity(&f).holds);
    }

    #[test]
    fn tops_code_matches_profile() {
        let c = house3();
        let f = MechanismTable::from_fn(c, |_| Allocation::new([0, 1, 2])).unwrap();
        let sw = Sweep::new(&f);
        for k in (0..f.len()).step_by(7) {
            assert_eq!(sw.inst.decode(tops_code(&sw, k)), f.profile(k).tops());
        }
    }

    #[test]
    fn dictatorship_of_agent_two() {
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b", "c"]).unwrap());
        let c = Constraint::social(inst).unwrap();
        let f = MechanismTable::from_fn(c.clone(), |p| Allocation::new([p.get(1).top(); 2])).unwrap();
        assert!(is_group_strategy_proof(&f, GspMode::Pairs).holds);
        assert!(is_pareto_efficient(&f, &c).unwrap().holds);
        let report = is_local_priority(&f).unwrap();
        assert!(report.verdict.holds);
        let alpha = report.alpha.unwrap();
        for (_, cell) in alpha.infeasible_cells() {
            assert_eq!(cell, AgentSet::singleton(0));
        }
        assert_eq!(
            fixed_compromisers(&f, &Allocation::new([0, 1])).unwrap(),
            AgentSet::singleton(0)
        );
    }

    #[test]
    fn worst_choice_is_manipulable() {
        // each agent receives their second choice, no constraint beyond that
        let inst = Arc::new(Instance::new(["1", "2"], ["a", "b", "c"]).unwrap());
        let c = Constraint::unconstrained(inst);
        let f = MechanismTable::from_fn(c, |p| {
            Allocation::new((0..2).map(|i| p.get(i).tau(2).unwrap()))
        })
        .unwrap();
        let v = is_strategy_proof(&f);
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.recheck_table(&f), Some(true));
        let Witness::Manipulation { coalition, .. } = w else { panic!() };
        assert_eq!(coalition.len(), 1);
        assert!(!is_maskin_monotonic(&f).holds);
        let lp = is_local_priority(&f).unwrap();
        assert_eq!(lp.failed, Some(Condition::Unanimity));
    }
}
