//! Exhaustive enumeration of consistent, implementable compromiser
//! assignments on small constraints, with relabeling symmetry and
//! mechanism-level deduplication.
//!
//! Cells are decided depth first in increasing allocation code. Forward
//! requirements propagate as lower bounds on undecided cells. Backward
//! consistency is tracked incrementally: every decided pair `(x, i)` with
//! `i ∈ α(x)` owns a connectivity search that advances through decided cells
//! and parks at undecided ones until they are decided.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::alpha::CompromiserAssignment;
use crate::consistency::{
    abandoned_bit, check_state_width, for_each_move, forward_requirements, variations, Reading,
};
use crate::constraint::Constraint;
use crate::engine::{try_tabulate, MechanismTable};
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Instance};
use crate::preference::ProfileSpace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub reading: Reading,
    pub require_forward: bool,
    pub require_backward: bool,
    pub quotient_symmetry: bool,
    pub dedupe_by_mechanism: bool,
    /// Maximum number of search nodes (cell decisions) before giving up.
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            reading: Reading::Strict,
            require_forward: true,
            require_backward: true,
            quotient_symmetry: false,
            dedupe_by_mechanism: false,
            max_nodes: 200_000_000,
            time_limit: None,
        }
    }
}

/// A relabeling: agent `i` becomes `agents[i]` and object `o` becomes
/// `objects[o]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relabeling {
    pub agents: Vec<usize>,
    pub objects: Vec<usize>,
}

impl Relabeling {
    pub fn identity(n: usize, m: usize) -> Self {
        Relabeling {
            agents: (0..n).collect(),
            objects: (0..m).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.agents.iter().enumerate().all(|(i, &j)| i == j)
            && self.objects.iter().enumerate().all(|(o, &p)| o == p)
    }

    pub fn apply_code(&self, inst: &Instance, x: u32) -> u32 {
        let mut y = 0;
        for i in 0..inst.num_agents() {
            y = inst.with_object(y, self.agents[i], self.objects[inst.object_at(x, i)]);
        }
        y
    }

    pub fn apply_agents(&self, s: AgentSet) -> AgentSet {
        s.iter().map(|i| self.agents[i]).collect()
    }

    /// `(g·α)(g x) = g(α(x))` as a dense cell vector.
    fn apply_cells(&self, inst: &Instance, cells: &[AgentSet]) -> Vec<AgentSet> {
        let mut out = vec![AgentSet::EMPTY; cells.len()];
        for (x, &s) in cells.iter().enumerate() {
            out[self.apply_code(inst, x as u32) as usize] = self.apply_agents(s);
        }
        out
    }
}

/// The relabelings that map the feasible set of a constraint onto itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub relabelings: Vec<Relabeling>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.relabelings.len()
    }
}

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..k {
        for rest in permutations(k - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|v| if v >= first { v + 1 } else { v }));
            out.push(p);
        }
    }
    out
}

const MAX_RELABELINGS: u128 = 1 << 20;

pub fn constraint_symmetries(c: &Constraint) -> Result<SymmetryGroup> {
    let inst = c.instance();
    let (n, m) = (inst.num_agents(), inst.num_objects());
    let factorial = |k: usize| (1..=k as u128).product::<u128>();
    let pairs = factorial(n) * factorial(m);
    if pairs > MAX_RELABELINGS {
        return Err(Error::Budget {
            what: "relabeling sweep",
            needed: pairs,
            budget: MAX_RELABELINGS,
        });
    }
    let feasible: Vec<u32> = c.feasible_codes().collect();
    let agent_perms = permutations(n);
    let object_perms = permutations(m);
    let mut relabelings = Vec::new();
    for a in &agent_perms {
        for o in &object_perms {
            let g = Relabeling {
                agents: a.clone(),
                objects: o.clone(),
            };
            if feasible.iter().all(|&x| c.is_feasible(g.apply_code(inst, x))) {
                relabelings.push(g);
            }
        }
    }
    Ok(SymmetryGroup { relabelings })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumerationSummary {
    /// Consistent implementable assignments found, before quotienting or
    /// deduplication.
    pub count: u64,
    /// Orbits under the symmetry group among those assignments.
    pub orbit_count: u64,
    /// Distinct mechanisms among those assignments.
    pub mechanism_count: u64,
    /// Partial assignments abandoned because of a violated requirement.
    pub pruned_nodes: u64,
    /// Completed assignments rejected because the algorithm gets stuck.
    pub not_implementable: u64,
    pub nodes: u64,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct Enumerated {
    pub alpha: CompromiserAssignment,
    /// Size of the orbit of `alpha` under the symmetry group.
    pub orbit_size: usize,
    pub table: MechanismTable,
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub items: Vec<Enumerated>,
    pub group: SymmetryGroup,
    pub summary: EnumerationSummary,
}

#[derive(Clone, Copy)]
enum Undo {
    Seen(u32, u32, u128),
    Pending(u32),
    Required(u32, AgentSet),
    Cell(u32),
}

struct Conflict;

struct Search<'a> {
    c: &'a Constraint,
    inst: &'a Instance,
    n: usize,
    opts: &'a EnumerationOptions,
    order: Vec<u32>,
    options: Vec<Vec<AgentSet>>,
    cells: Vec<AgentSet>,
    required: Vec<AgentSet>,
    seen: HashSet<(u32, u32, u128)>,
    pending: Vec<Vec<(u32, u128)>>,
    trail: Vec<Undo>,
    space: Arc<ProfileSpace>,
    group: &'a SymmetryGroup,
    mechanisms: HashSet<Vec<u32>>,
    sink: &'a mut dyn FnMut(Enumerated) -> ControlFlow<()>,
    summary: EnumerationSummary,
    started: Instant,
    stopped: bool,
}

impl<'a> Search<'a> {
    fn feasible(&self, x: u32) -> bool {
        self.c.is_feasible(x)
    }

    fn decided(&self, x: u32) -> bool {
        !self.cells[x as usize].is_empty()
    }

    fn require(&mut self, y: u32, need: AgentSet) -> std::result::Result<(), Conflict> {
        let old = self.required[y as usize];
        let new = old.union(need);
        if new == old {
            return Ok(());
        }
        if !self.options[y as usize].iter().any(|&s| new.is_subset(s)) {
            return Err(Conflict);
        }
        self.trail.push(Undo::Required(y, old));
        self.required[y as usize] = new;
        Ok(())
    }

    /// Requirement that a decided cell, or a lower bound on an undecided
    /// one, contains `need`.
    fn demand(&mut self, y: u32, need: AgentSet, feasible_ok: bool) -> std::result::Result<(), Conflict> {
        if self.feasible(y) {
            return if feasible_ok { Ok(()) } else { Err(Conflict) };
        }
        if self.decided(y) {
            return if need.is_subset(self.cells[y as usize]) {
                Ok(())
            } else {
                Err(Conflict)
            };
        }
        self.require(y, need)
    }

    fn mark(&mut self, sid: u32, z: u32, abandoned: u128, queue: &mut Vec<(u32, u32, u128)>) {
        if self.seen.insert((sid, z, abandoned)) {
            self.trail.push(Undo::Seen(sid, z, abandoned));
            queue.push((sid, z, abandoned));
        }
    }

    /// Advances connectivity searches from the queued states.
    fn advance(&mut self, mut queue: Vec<(u32, u32, u128)>) -> std::result::Result<(), Conflict> {
        let n = self.n as u32;
        let relaxed = self.opts.reading == Reading::Relaxed;
        while let Some((sid, z, abandoned)) = queue.pop() {
            if self.feasible(z) {
                continue;
            }
            if !self.decided(z) {
                self.pending[z as usize].push((sid, abandoned));
                self.trail.push(Undo::Pending(z));
                continue;
            }
            let (x, i) = (sid / n, (sid % n) as usize);
            let cell = self.cells[z as usize];
            for xp in variations(self.inst, x, cell.without(i)) {
                self.demand(xp, AgentSet::singleton(i), relaxed)?;
            }
            let mut next = Vec::new();
            for_each_move(self.inst, z, abandoned, cell, |y, left| next.push((y, left)));
            for (y, left) in next {
                self.mark(sid, y, left, &mut queue);
            }
        }
        Ok(())
    }

    fn decide(&mut self, x: u32, s: AgentSet) -> std::result::Result<(), Conflict> {
        self.trail.push(Undo::Cell(x));
        self.cells[x as usize] = s;
        if self.opts.require_forward {
            let reqs: Vec<(u32, AgentSet)> = forward_requirements(self.inst, x, s).collect();
            for (y, need) in reqs {
                self.demand(y, need, false)?;
            }
        }
        if self.opts.require_backward {
            let n = self.n as u32;
            let mut queue: Vec<(u32, u32, u128)> = self.pending[x as usize]
                .iter()
                .map(|&(sid, a)| (sid, x, a))
                .collect();
            let m = self.inst.num_objects();
            for i in s.iter() {
                let sid = x * n + i as u32;
                let xi = self.inst.object_at(x, i);
                for o in (0..m).filter(|&o| o != xi) {
                    let z = self.inst.with_object(x, i, o);
                    self.mark(sid, z, abandoned_bit(m, i, xi), &mut queue);
                }
            }
            self.advance(queue)?;
        }
        Ok(())
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Seen(sid, z, a) => {
                    self.seen.remove(&(sid, z, a));
                }
                Undo::Pending(z) => {
                    self.pending[z as usize].pop();
                }
                Undo::Required(y, old) => self.required[y as usize] = old,
                Undo::Cell(x) => self.cells[x as usize] = AgentSet::EMPTY,
            }
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.summary.nodes >= self.opts.max_nodes {
            self.stopped = true;
        }
        if let Some(limit) = self.opts.time_limit {
            if self.summary.nodes % 1024 == 0 && self.started.elapsed() > limit {
                self.stopped = true;
            }
        }
        self.stopped
    }

    fn dfs(&mut self, depth: usize) {
        if depth == self.order.len() {
            self.complete();
            return;
        }
        let x = self.order[depth];
        let req = self.required[x as usize];
        let candidates: Vec<AgentSet> = self.options[x as usize]
            .iter()
            .copied()
            .filter(|&s| req.is_subset(s))
            .collect();
        for s in candidates {
            if self.stopped || self.out_of_budget() {
                return;
            }
            self.summary.nodes += 1;
            let mark = self.trail.len();
            match self.decide(x, s) {
                Ok(()) => self.dfs(depth + 1),
                Err(Conflict) => self.summary.pruned_nodes += 1,
            }
            self.undo_to(mark);
        }
    }

    /// Orbit size, or `None` when some relabeling gives a smaller cell vector.
    fn orbit(&self) -> Option<usize> {
        let mut stabilizer = 0;
        let mut minimal = true;
        for g in &self.group.relabelings {
            let image = g.apply_cells(self.inst, &self.cells);
            match image.iter().map(|s| s.bits()).cmp(self.cells.iter().map(|s| s.bits())) {
                std::cmp::Ordering::Less => minimal = false,
                std::cmp::Ordering::Equal => stabilizer += 1,
                std::cmp::Ordering::Greater => {}
            }
        }
        minimal.then(|| self.group.order() / stabilizer)
    }

    fn complete(&mut self) {
        let alpha = CompromiserAssignment::from_cells_unchecked(self.c.clone(), self.cells.clone());
        let Some(table) = try_tabulate(&alpha, &self.space) else {
            self.summary.not_implementable += 1;
            return;
        };
        self.summary.count += 1;
        let orbit = self.orbit();
        if orbit.is_some() {
            self.summary.orbit_count += 1;
        }
        let fresh = self.mechanisms.insert(table.outcomes().to_vec());
        if fresh {
            self.summary.mechanism_count += 1;
        }
        if self.opts.quotient_symmetry && orbit.is_none() {
            return;
        }
        if self.opts.dedupe_by_mechanism && !fresh {
            return;
        }
        let item = Enumerated {
            alpha,
            orbit_size: orbit.unwrap_or(0),
            table,
        };
        if (self.sink)(item).is_break() {
            self.stopped = true;
        }
    }
}

/// Cell values allowed at `x` before any other cell is decided: with forward
/// consistency, every allocation differing from `x` on a nonempty proper part
/// of the cell must be infeasible, since its own cell is empty.
fn static_options(c: &Constraint, x: u32, forward: bool) -> Vec<AgentSet> {
    let inst = c.instance();
    AgentSet::full(inst.num_agents())
        .subsets()
        .filter(|s| !s.is_empty())
        .filter(|&s| {
            !forward
                || variations(inst, x, s)
                    .into_iter()
                    .all(|y| !c.is_feasible(y) || inst.diff_codes(x, y) == s)
        })
        .collect()
}

/// Enumerates every implementable assignment on `c` that satisfies the
/// requested consistency conditions, in lexicographic order of cell vectors.
pub fn enumerate_consistent(c: &Constraint, opts: &EnumerationOptions) -> Result<Enumeration> {
    let mut items = Vec::new();
    let (group, summary) = enumerate_each(c, opts, |e| {
        items.push(e);
        ControlFlow::Continue(())
    })?;
    Ok(Enumeration {
        items,
        group,
        summary,
    })
}

/// Streaming form of [`enumerate_consistent`]: `visit` sees each emitted
/// assignment in order and may stop the search, which then reports itself
/// incomplete.
pub fn enumerate_each<F>(
    c: &Constraint,
    opts: &EnumerationOptions,
    mut visit: F,
) -> Result<(SymmetryGroup, EnumerationSummary)>
where
    F: FnMut(Enumerated) -> ControlFlow<()>,
{
    if opts.max_nodes == 0 || opts.time_limit == Some(Duration::ZERO) {
        return Err(Error::InvalidSpec("enumeration budget must be positive".into()));
    }
    let inst = c.instance().as_ref();
    if opts.require_backward {
        check_state_width(inst)?;
    }
    let space = Arc::new(ProfileSpace::new(c.instance())?);
    let group = constraint_symmetries(c)?;
    let size = inst.num_allocations();
    let mut options = vec![Vec::new(); size];
    let order: Vec<u32> = c.infeasible_codes().collect();
    for &x in &order {
        let mut opt = static_options(c, x, opts.require_forward);
        opt.sort_by_key(|s| s.bits());
        options[x as usize] = opt;
    }
    let mut search = Search {
        c,
        inst,
        n: inst.num_agents(),
        opts,
        order,
        options,
        cells: vec![AgentSet::EMPTY; size],
        required: vec![AgentSet::EMPTY; size],
        seen: HashSet::new(),
        pending: vec![Vec::new(); size],
        trail: Vec::new(),
        space,
        group: &group,
        mechanisms: HashSet::new(),
        sink: &mut visit,
        summary: EnumerationSummary::default(),
        started: Instant::now(),
        stopped: false,
    };
    search.dfs(0);
    let mut summary = search.summary;
    summary.complete = !search.stopped;
    Ok((group, summary))
}

/// Groups enumerated assignments by the mechanism they induce.
pub fn by_mechanism(items: &[Enumerated]) -> HashMap<Vec<u32>, Vec<usize>> {
    let mut out: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (k, e) in items.iter().enumerate() {
        out.entry(e.table.outcomes().to_vec()).or_default().push(k);
    }
    out
}
