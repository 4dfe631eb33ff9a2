//! Forward and backward consistency of compromiser assignments, the
//! connectivity search behind backward consistency, and checks of the
//! statements relating consistency to the induced mechanisms.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;

use crate::alpha::CompromiserAssignment;
use crate::axioms::{derive_alpha, is_group_strategy_proof, is_nonbossy, is_pareto_efficient, GspMode};
use crate::constraint::Constraint;
use crate::engine::{implementability, mechanisms_equal, tabulate, tabulate_in, try_tabulate, MechanismTable};
use crate::enumerate::{enumerate_each, EnumerationOptions, EnumerationSummary};
use crate::error::{Error, Result};
use crate::instance::{diff, AgentSet, Allocation, Instance};
use crate::mechanisms::{sd_alpha, DictatorOrder};
use crate::preference::{next_permutation, ProfileSpace};
use crate::verdict::{Hypothesis, Report, Verdict, Witness};

/// Which allocations `x′` backward consistency quantifies over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reading {
    /// Every allocation; a feasible `x′` is a violation because its cell is
    /// empty.
    #[default]
    Strict,
    /// Infeasible allocations only.
    Relaxed,
}

impl Reading {
    pub fn name(self) -> &'static str {
        match self {
            Reading::Strict => "strict",
            Reading::Relaxed => "relaxed",
        }
    }
}

impl std::str::FromStr for Reading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Reading::Strict),
            "relaxed" => Ok(Reading::Relaxed),
            other => Err(Error::Parse(format!("unknown reading `{other}`"))),
        }
    }
}

/// Codes of the allocations that agree with `x` outside `agents`, in
/// increasing code order.
pub(crate) fn variations(inst: &Instance, x: u32, agents: AgentSet) -> Vec<u32> {
    let mut out = vec![x];
    for i in agents.iter() {
        out = out
            .into_iter()
            .flat_map(|c| (0..inst.num_objects()).map(move |o| (c, o)))
            .map(|(c, o)| inst.with_object(c, i, o))
            .collect();
    }
    out.sort_unstable();
    out
}

/// Cells that `α(y)` must contain for forward consistency at `x`, for every
/// `y` whose difference from `x` lies inside `α(x)`.
pub(crate) fn forward_requirements(
    inst: &Instance,
    x: u32,
    ax: AgentSet,
) -> impl Iterator<Item = (u32, AgentSet)> + '_ {
    variations(inst, x, ax).into_iter().filter_map(move |y| {
        let need = ax.difference(inst.diff_codes(x, y));
        (y != x && !need.is_empty()).then_some((y, need))
    })
}

/// For every infeasible `x` and every `y` with `d(x,y) ⊆ α(x)`, requires
/// `α(x) − d(x,y) ⊆ α(y)`.
pub fn is_forward_consistent(alpha: &CompromiserAssignment) -> Verdict {
    let inst = alpha.instance();
    let infeasible: Vec<(u32, AgentSet)> = alpha.infeasible_cells().collect();
    let hit = infeasible.par_iter().find_map_first(|&(x, ax)| {
        forward_requirements(inst, x, ax).find_map(|(y, need)| {
            let missing = need.difference(alpha.cell(y));
            (!missing.is_empty()).then_some((x, y, missing))
        })
    });
    Verdict::from_witness(hit.map(|(x, y, missing)| Witness::Forward {
        x: inst.decode(x),
        y: inst.decode(y),
        missing,
    }))
}

/// Checks the defining clauses of an `agent`-connecting sequence directly on
/// the sequence: at least two allocations, the first move is `agent` alone,
/// every move is a nonempty subset of the current compromisers, and no agent
/// returns to an object they have left.
pub fn is_valid_connecting_path(alpha: &CompromiserAssignment, path: &[Allocation], agent: usize) -> bool {
    if path.len() < 2 {
        return false;
    }
    if diff(&path[0], &path[1]) != AgentSet::singleton(agent) {
        return false;
    }
    for w in path.windows(2) {
        let d = diff(&w[0], &w[1]);
        if d.is_empty() || !d.is_subset(alpha.cell_of(&w[0])) {
            return false;
        }
    }
    let n = path[0].len();
    (0..n).all(|j| {
        let seq: Vec<usize> = path.iter().map(|z| z.get(j)).collect();
        (0..seq.len()).all(|t| {
            (0..t).all(|r| seq[r] != seq[t] || (r..t).all(|s| seq[s] == seq[t]))
        })
    })
}

#[inline]
pub(crate) fn abandoned_bit(m: usize, agent: usize, object: usize) -> u128 {
    1u128 << (agent * m + object)
}

/// Calls `f(y, abandoned′)` for every acyclic move from allocation `z`: a
/// nonempty subset of `cell` moves, each mover to an object that is neither
/// current nor previously abandoned.
pub(crate) fn for_each_move<F>(inst: &Instance, z: u32, abandoned: u128, cell: AgentSet, mut f: F)
where
    F: FnMut(u32, u128),
{
    let m = inst.num_objects();
    for movers in cell.subsets().filter(|s| !s.is_empty()) {
        let agents: Vec<usize> = movers.iter().collect();
        let options: Vec<Vec<usize>> = agents
            .iter()
            .map(|&j| {
                let cur = inst.object_at(z, j);
                (0..m)
                    .filter(|&o| o != cur && abandoned & abandoned_bit(m, j, o) == 0)
                    .collect()
            })
            .collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let mut left = abandoned;
        for &j in &agents {
            left |= abandoned_bit(m, j, inst.object_at(z, j));
        }
        let mut pos = vec![0usize; agents.len()];
        'odometer: loop {
            let mut y = z;
            for (k, &j) in agents.iter().enumerate() {
                y = inst.with_object(y, j, options[k][pos[k]]);
            }
            f(y, left);
            let mut k = agents.len();
            loop {
                if k == 0 {
                    break 'odometer;
                }
                k -= 1;
                pos[k] += 1;
                if pos[k] < options[k].len() {
                    break;
                }
                pos[k] = 0;
            }
        }
    }
}

pub(crate) fn check_state_width(inst: &Instance) -> Result<()> {
    let bits = inst.num_agents() * inst.num_objects();
    if bits > 128 {
        return Err(Error::Budget {
            what: "connectivity search state (agents × objects bits)",
            needed: bits as u128,
            budget: 128,
        });
    }
    Ok(())
}

/// Breadth-first search over (allocation, abandoned objects) states.
///
/// Abandoned objects are packed as one bit per (agent, object) pair.
struct ConnectSearch<'a> {
    alpha: &'a CompromiserAssignment,
    inst: &'a Instance,
    m: usize,
    states: Vec<(u32, u128, usize)>,
    seen: HashMap<(u32, u128), ()>,
}

const ROOT: usize = usize::MAX;

impl<'a> ConnectSearch<'a> {
    fn new(alpha: &'a CompromiserAssignment) -> Result<Self> {
        let inst = alpha.instance().as_ref();
        check_state_width(inst)?;
        Ok(ConnectSearch {
            alpha,
            inst,
            m: inst.num_objects(),
            states: Vec::new(),
            seen: HashMap::new(),
        })
    }

    fn push(&mut self, code: u32, abandoned: u128, parent: usize) -> bool {
        if self.seen.insert((code, abandoned), ()).is_some() {
            return false;
        }
        self.states.push((code, abandoned, parent));
        true
    }

    /// Explores every state reachable from `x` with a first move by `i`.
    /// Returns, for each allocation reached, the first state reaching it.
    fn run(&mut self, x: u32, i: usize) -> Vec<(u32, usize)> {
        self.states.clear();
        self.seen.clear();
        let mut first_hit: HashMap<u32, usize> = HashMap::new();
        if !self.alpha.cell(x).contains(i) {
            return Vec::new();
        }
        let xi = self.inst.object_at(x, i);
        for o in (0..self.m).filter(|&o| o != xi) {
            let z = self.inst.with_object(x, i, o);
            self.push(z, abandoned_bit(self.m, i, xi), ROOT);
        }
        let mut head = 0;
        while head < self.states.len() {
            let (z, abandoned, _) = self.states[head];
            first_hit.entry(z).or_insert(head);
            let cell = self.alpha.cell(z);
            if !cell.is_empty() {
                self.expand(head, z, abandoned, cell);
            }
            head += 1;
        }
        let mut hits: Vec<(u32, usize)> = first_hit.into_iter().collect();
        hits.sort_unstable();
        hits
    }

    fn expand(&mut self, id: usize, z: u32, abandoned: u128, cell: AgentSet) {
        let mut next = Vec::new();
        for_each_move(self.inst, z, abandoned, cell, |y, left| next.push((y, left)));
        for (y, left) in next {
            self.push(y, left, id);
        }
    }

    fn path(&self, x: u32, mut id: usize) -> Vec<Allocation> {
        let mut codes = Vec::new();
        while id != ROOT {
            codes.push(self.states[id].0);
            id = self.states[id].2;
        }
        codes.push(x);
        codes.reverse();
        codes.into_iter().map(|c| self.inst.decode(c)).collect()
    }
}

/// Looks for an acyclic sequence from `x` to `y` whose first move is agent
/// `i` alone and whose every later move is a nonempty set of current
/// compromisers.
pub fn i_connected(
    alpha: &CompromiserAssignment,
    x: &Allocation,
    y: &Allocation,
    i: usize,
) -> Result<Option<Vec<Allocation>>> {
    let inst = alpha.instance();
    inst.validate(x)?;
    inst.validate(y)?;
    if i >= inst.num_agents() {
        return Err(Error::UnknownAgent(format!("#{i}")));
    }
    let (xc, yc) = (inst.encode(x), inst.encode(y));
    if alpha.is_feasible(xc) || alpha.is_feasible(yc) {
        return Err(Error::InvalidSpec(
            "connectivity is defined between infeasible allocations".into(),
        ));
    }
    let mut search = ConnectSearch::new(alpha)?;
    let hits = search.run(xc, i);
    Ok(hits
        .iter()
        .find(|&&(z, _)| z == yc)
        .map(|&(_, id)| search.path(xc, id)))
}

/// Infeasible allocations `i`-connected to `x`, each with one connecting
/// sequence.
pub fn connected_from(
    alpha: &CompromiserAssignment,
    x: &Allocation,
    i: usize,
) -> Result<Vec<(Allocation, Vec<Allocation>)>> {
    let inst = alpha.instance();
    let xc = inst.encode(x);
    let mut search = ConnectSearch::new(alpha)?;
    let hits = search.run(xc, i);
    Ok(hits
        .into_iter()
        .filter(|&(z, _)| !alpha.is_feasible(z))
        .map(|(z, id)| (inst.decode(z), search.path(xc, id)))
        .collect())
}

/// For every agent `i` and infeasible `i`-connected `x`, `y`: every `x′`
/// with `d(x,x′) ⊆ α(y)` and `i ∉ d(x,x′)` has `i ∈ α(x′)`.
pub fn is_backward_consistent(alpha: &CompromiserAssignment, reading: Reading) -> Result<Verdict> {
    let inst = alpha.instance();
    ConnectSearch::new(alpha)?;
    let starts: Vec<(u32, usize)> = alpha
        .infeasible_cells()
        .flat_map(|(x, ax)| ax.iter().map(move |i| (x, i)))
        .collect();
    let hit = starts.par_iter().find_map_first(|&(x, i)| {
        let mut search = ConnectSearch::new(alpha).expect("checked above");
        let hits = search.run(x, i);
        hits.iter().find_map(|&(y, id)| {
            if alpha.is_feasible(y) {
                return None;
            }
            let free = alpha.cell(y).without(i);
            variations(inst, x, free)
                .into_iter()
                .find(|&xp| {
                    let counts = reading == Reading::Strict || !alpha.is_feasible(xp);
                    counts && !alpha.cell(xp).contains(i)
                })
                .map(|xp| (x, i, y, search.path(x, id), xp))
        })
    });
    Ok(Verdict::from_witness(hit.map(|(x, i, y, path, xp)| {
        Witness::Backward {
            agent: i,
            x: inst.decode(x),
            y: inst.decode(y),
            path,
            x_prime: inst.decode(xp),
        }
    })))
}

fn cell_subset_verdict(small: &CompromiserAssignment, large: &CompromiserAssignment) -> Verdict {
    let inst = small.instance();
    let hit = (0..inst.num_allocations() as u32)
        .find(|&c| !small.cell(c).is_subset(large.cell(c)));
    Verdict::from_witness(hit.map(|c| Witness::Cell {
        x: inst.decode(c),
        left: small.cell(c),
        right: large.cell(c),
    }))
}

/// For an implementable, forward consistent `alpha` and a pointwise smaller
/// `sub` over the same constraint, confirms that `sub` is implementable and
/// induces the same mechanism.
pub fn verify_subset_equivalence(alpha: &CompromiserAssignment, sub: &CompromiserAssignment) -> Result<Report> {
    alpha.check_same_constraint(sub)?;
    let space = ProfileSpace::new(alpha.instance())?;
    let hypotheses = vec![
        Hypothesis {
            name: "implementable",
            verdict: implementability(alpha, &space),
        },
        Hypothesis {
            name: "forward_consistent",
            verdict: is_forward_consistent(alpha),
        },
        Hypothesis {
            name: "pointwise_subset",
            verdict: cell_subset_verdict(sub, alpha),
        },
    ];
    let conclusion = if !hypotheses[0].verdict.holds {
        Verdict::pass()
    } else {
        let v = implementability(sub, &space);
        if v.holds {
            mechanisms_equal(&tabulate(sub)?, &tabulate(alpha)?)?
        } else {
            v
        }
    };
    Ok(Report {
        hypotheses,
        conclusion,
    })
}

/// For two assignments inducing the same group strategy-proof mechanism,
/// confirms that their pointwise union induces it as well.
pub fn verify_union_closure(alpha: &CompromiserAssignment, other: &CompromiserAssignment) -> Result<Report> {
    alpha.check_same_constraint(other)?;
    let space = ProfileSpace::new(alpha.instance())?;
    let imp_a = implementability(alpha, &space);
    let imp_b = implementability(other, &space);
    let mut hypotheses = vec![
        Hypothesis {
            name: "implementable",
            verdict: if imp_a.holds { imp_b } else { imp_a },
        },
    ];
    if !hypotheses[0].verdict.holds {
        return Ok(Report {
            hypotheses,
            conclusion: Verdict::pass(),
        });
    }
    let f = tabulate(alpha)?;
    let g = tabulate(other)?;
    hypotheses.push(Hypothesis {
        name: "same_mechanism",
        verdict: mechanisms_equal(&f, &g)?,
    });
    hypotheses.push(Hypothesis {
        name: "group_strategy_proof",
        verdict: is_group_strategy_proof(&f, GspMode::Pairs),
    });
    let union = alpha.union(other)?;
    let v = implementability(&union, &space);
    let conclusion = if v.holds {
        mechanisms_equal(&tabulate(&union)?, &f)?
    } else {
        v
    };
    Ok(Report {
        hypotheses,
        conclusion,
    })
}

/// A consistent, implementable assignment whose mechanism fails a conclusion
/// of the theorem.
#[derive(Clone, Debug)]
pub struct TheoremFailure {
    pub alpha: CompromiserAssignment,
    pub property: &'static str,
    pub witness: Witness,
}

#[derive(Clone, Debug)]
pub struct TheoremHarness {
    pub reading: Reading,
    pub summary: EnumerationSummary,
    /// Distinct mechanisms checked for group strategy-proofness and Pareto
    /// efficiency.
    pub mechanisms_checked: usize,
    pub failures: Vec<TheoremFailure>,
}

impl TheoremHarness {
    pub fn holds(&self) -> bool {
        self.summary.complete && self.failures.is_empty()
    }
}

fn gsp_mode(inst: &Instance) -> GspMode {
    if inst.num_agents() <= 3 {
        GspMode::Exhaustive
    } else {
        GspMode::Pairs
    }
}

/// Enumerates every consistent implementable assignment on `c` and checks
/// that each induced mechanism is group strategy-proof and Pareto efficient.
pub fn theorem_harness(c: &Constraint, reading: Reading, max_nodes: u64) -> Result<TheoremHarness> {
    let opts = EnumerationOptions {
        reading,
        max_nodes,
        ..Default::default()
    };
    let mode = gsp_mode(c.instance());
    let mut verdicts: HashMap<Vec<u32>, (Verdict, Verdict)> = HashMap::new();
    let mut failures = Vec::new();
    let mut error = None;
    let (_, summary) = enumerate_each(c, &opts, |e| {
        let key = e.table.outcomes().to_vec();
        if !verdicts.contains_key(&key) {
            let gsp = is_group_strategy_proof(&e.table, mode);
            let pe = match is_pareto_efficient(&e.table, c) {
                Ok(v) => v,
                Err(err) => {
                    error = Some(err);
                    return ControlFlow::Break(());
                }
            };
            verdicts.insert(key.clone(), (gsp, pe));
        }
        let (gsp, pe) = &verdicts[&key];
        for (property, v) in [("group_strategy_proof", gsp), ("pareto_efficient", pe)] {
            if let Some(w) = &v.witness {
                failures.push(TheoremFailure {
                    alpha: e.alpha.clone(),
                    property,
                    witness: w.clone(),
                });
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(err) = error {
        return Err(err);
    }
    Ok(TheoremHarness {
        reading,
        summary,
        mechanisms_checked: verdicts.len(),
        failures,
    })
}

/// An implementable assignment whose mechanism is Pareto efficient but
/// bossy, hence not group strategy-proof.
#[derive(Clone, Debug)]
pub struct PeNotGsp {
    pub alpha: CompromiserAssignment,
    pub table: MechanismTable,
    pub bossy: Witness,
}

/// Searches the implementable assignments on each constraint, forward
/// consistent ones first and then all of them, for a Pareto efficient but
/// bossy mechanism. `max_nodes` bounds each enumeration.
pub fn find_pe_not_gsp(constraints: &[Constraint], max_nodes: u64) -> Result<Option<PeNotGsp>> {
    for c in constraints {
        for forward in [true, false] {
            let opts = EnumerationOptions {
                require_forward: forward,
                require_backward: false,
                dedupe_by_mechanism: true,
                max_nodes,
                ..Default::default()
            };
            let mut found = None;
            let mut error = None;
            enumerate_each(c, &opts, |e| {
                let pe = match is_pareto_efficient(&e.table, c) {
                    Ok(v) => v,
                    Err(err) => {
                        error = Some(err);
                        return ControlFlow::Break(());
                    }
                };
                if !pe.holds {
                    return ControlFlow::Continue(());
                }
                match is_nonbossy(&e.table).witness {
                    Some(w) if w.recheck_table(&e.table) == Some(true) => {
                        found = Some(PeNotGsp {
                            alpha: e.alpha,
                            table: e.table,
                            bossy: w,
                        });
                        ControlFlow::Break(())
                    }
                    _ => ControlFlow::Continue(()),
                }
            })?;
            if let Some(err) = error {
                return Err(err);
            }
            if found.is_some() {
                return Ok(found);
            }
        }
    }
    Ok(None)
}

/// An assignment whose mechanism is group strategy-proof although the
/// assignment violates backward consistency under the relaxed reading, and
/// hence under the strict one too.
#[derive(Clone, Debug)]
pub struct GspBackwardViolation {
    pub alpha: CompromiserAssignment,
    pub table: MechanismTable,
    pub violation: Witness,
}

#[derive(Clone, Debug)]
pub struct BackwardSearch {
    pub found: Option<GspBackwardViolation>,
    /// Candidate assignments examined.
    pub examined: u64,
    pub exhausted_budget: bool,
}

/// Looks for a group strategy-proof local priority mechanism induced by an
/// assignment that fails backward consistency.
///
/// On each constraint the serial dictatorships, one per agent order, supply
/// group strategy-proof tables. For each table the maximal assignment is
/// derived from it; that assignment and every single-cell shrinking of it
/// that still induces the same table are tested for a backward violation.
pub fn find_gsp_backward_violation(constraints: &[Constraint], budget: u64) -> Result<BackwardSearch> {
    let mut examined = 0u64;
    for c in constraints {
        let inst = c.instance();
        check_state_width(inst)?;
        let space = Arc::new(ProfileSpace::new(inst)?);
        let mut order: Vec<usize> = (0..inst.num_agents()).collect();
        let mut orders = vec![order.clone()];
        while next_permutation(&mut order) {
            orders.push(order.clone());
        }
        let mut tables_seen = HashSet::new();
        for order in orders {
            let order = DictatorOrder::new(inst, order)?;
            let sd = tabulate_in(&sd_alpha(c, &order), space.clone())?;
            if !tables_seen.insert(sd.outcomes().to_vec()) {
                continue;
            }
            if !is_group_strategy_proof(&sd, gsp_mode(inst)).holds {
                continue;
            }
            let top = derive_alpha(&sd)?;
            let mut candidates = vec![top.clone()];
            for (x, cell) in top.infeasible_cells() {
                for sub in cell.subsets().filter(|s| !s.is_empty() && *s != cell) {
                    candidates.push(top.with_cell(x, sub)?);
                }
            }
            for alpha in candidates {
                if examined >= budget {
                    return Ok(BackwardSearch {
                        found: None,
                        examined,
                        exhausted_budget: true,
                    });
                }
                examined += 1;
                let v = is_backward_consistent(&alpha, Reading::Relaxed)?;
                let Some(violation) = v.witness else {
                    continue;
                };
                let Some(table) = try_tabulate(&alpha, &space) else {
                    continue;
                };
                if table.outcomes() != sd.outcomes() {
                    continue;
                }
                if violation.recheck_alpha(&alpha) == Some(true) {
                    return Ok(BackwardSearch {
                        found: Some(GspBackwardViolation {
                            alpha,
                            table,
                            violation,
                        }),
                        examined,
                        exhausted_budget: false,
                    });
                }
            }
        }
    }
    Ok(BackwardSearch {
        found: None,
        examined,
        exhausted_budget: false,
    })
}
