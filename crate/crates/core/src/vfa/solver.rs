// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Worklist solver for the inclusion constraints.
//!
//! Nodes are processed FIFO and only their newly added locations (the delta)
//! are pushed along edges. Load and store constraints add copy edges lazily
//! as their pointer operand's set grows. Seeding follows constraint creation
//! order, so the run is deterministic.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::constraints::{Constraint, ConstraintSet};
use super::{AbstractLoc, Node};

/// Least solution of a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointsToSolution {
    sets: BTreeMap<Node, BTreeSet<AbstractLoc>>,
}

impl PointsToSolution {
    pub fn from_sets(sets: BTreeMap<Node, BTreeSet<AbstractLoc>>) -> Self {
        let sets = sets.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        PointsToSolution { sets }
    }

    pub fn points_to(&self, node: &Node) -> &BTreeSet<AbstractLoc> {
        static EMPTY: BTreeSet<AbstractLoc> = BTreeSet::new();
        self.sets.get(node).unwrap_or(&EMPTY)
    }

    /// Non-empty sets in node order.
    pub fn iter(&self) -> impl Iterator<Item = (&Node, &BTreeSet<AbstractLoc>)> {
        self.sets.iter()
    }

    pub fn node_count(&self) -> usize {
        self.sets.len()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    Copy(usize),
    Field(usize, u32),
}

struct Solver<'a> {
    cs: &'a ConstraintSet,
    ids: BTreeMap<Node, usize>,
    nodes: Vec<Node>,
    pts: Vec<BTreeSet<AbstractLoc>>,
    pending: Vec<BTreeSet<AbstractLoc>>,
    edges: Vec<Vec<Edge>>,
    edge_set: HashSet<(usize, Edge)>,
    loads: Vec<Vec<usize>>,
    stores: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
}

impl<'a> Solver<'a> {
    fn id(&mut self, node: Node) -> usize {
        if let Some(&i) = self.ids.get(&node) {
            return i;
        }
        let i = self.nodes.len();
        self.ids.insert(node, i);
        self.nodes.push(node);
        self.pts.push(BTreeSet::new());
        self.pending.push(BTreeSet::new());
        self.edges.push(Vec::new());
        self.loads.push(Vec::new());
        self.stores.push(Vec::new());
        self.queued.push(false);
        i
    }

    fn add(&mut self, dst: usize, locs: impl IntoIterator<Item = AbstractLoc>) {
        let mut grew = false;
        for loc in locs {
            if self.pts[dst].insert(loc) {
                self.pending[dst].insert(loc);
                grew = true;
            }
        }
        if grew && !self.queued[dst] {
            self.queued[dst] = true;
            self.queue.push_back(dst);
        }
    }

    fn apply_edge(&self, edge: Edge, locs: &BTreeSet<AbstractLoc>) -> (usize, Vec<AbstractLoc>) {
        match edge {
            Edge::Copy(t) => (t, locs.iter().copied().collect()),
            Edge::Field(t, off) => (t, locs.iter().map(|l| self.cs.field(*l, off)).collect()),
        }
    }

    fn add_edge(&mut self, src: usize, edge: Edge) {
        if !self.edge_set.insert((src, edge)) {
            return;
        }
        self.edges[src].push(edge);
        let all = self.pts[src].clone();
        if !all.is_empty() {
            let (t, locs) = self.apply_edge(edge, &all);
            self.add(t, locs);
        }
    }

    fn run(&mut self) {
        while let Some(n) = self.queue.pop_front() {
            self.queued[n] = false;
            let delta = std::mem::take(&mut self.pending[n]);
            if delta.is_empty() {
                continue;
            }
            for loc in &delta {
                for slot in self.cs.expand(*loc).collect::<Vec<_>>() {
                    let mem = self.id(Node::Mem(slot));
                    for dst in self.loads[n].clone() {
                        self.add_edge(mem, Edge::Copy(dst));
                    }
                    for src in self.stores[n].clone() {
                        self.add_edge(src, Edge::Copy(mem));
                    }
                }
            }
            for edge in self.edges[n].clone() {
                let (t, locs) = self.apply_edge(edge, &delta);
                self.add(t, locs);
            }
        }
    }
}

pub fn solve_points_to(cs: &ConstraintSet) -> PointsToSolution {
    let mut s = Solver {
        cs,
        ids: BTreeMap::new(),
        nodes: Vec::new(),
        pts: Vec::new(),
        pending: Vec::new(),
        edges: Vec::new(),
        edge_set: HashSet::new(),
        loads: Vec::new(),
        stores: Vec::new(),
        queue: VecDeque::new(),
        queued: Vec::new(),
    };
    for c in &cs.constraints {
        match c {
            Constraint::AddrOf { dst, loc } => {
                let d = s.id(*dst);
                s.add(d, [*loc]);
            }
            Constraint::Copy { dst, src } => {
                let (d, src) = (s.id(*dst), s.id(*src));
                s.add_edge(src, Edge::Copy(d));
            }
            Constraint::Field { dst, src, offset } => {
                let (d, src) = (s.id(*dst), s.id(*src));
                s.add_edge(src, Edge::Field(d, *offset));
            }
            Constraint::Load { dst, ptr } => {
                let (d, p) = (s.id(*dst), s.id(*ptr));
                s.loads[p].push(d);
                s.requeue_all(p);
            }
            Constraint::Store { ptr, src } => {
                let (p, src) = (s.id(*ptr), s.id(*src));
                s.stores[p].push(src);
                s.requeue_all(p);
            }
        }
    }
    s.run();
    let sets = s
        .nodes
        .iter()
        .zip(s.pts)
        .map(|(n, set)| (*n, set))
        .collect();
    PointsToSolution::from_sets(sets)
}

impl Solver<'_> {
    /// A complex constraint registered after `p` already has locations must
    /// see all of them, not only the next delta.
    fn requeue_all(&mut self, p: usize) {
        if self.pts[p].is_empty() {
            return;
        }
        let all = self.pts[p].clone();
        self.pending[p].extend(all);
        if !self.queued[p] {
            self.queued[p] = true;
            self.queue.push_back(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_source, SourceProgram};
    use crate::ir::{lower, AllocSiteId, FuncIdx, Inst, IrProgram, Reg};
    use crate::vfa::build_constraints;

    fn solve(text: &str) -> (IrProgram, PointsToSolution) {
        let p = lower(&check_source(&SourceProgram::new("t.mc", text)).unwrap()).unwrap();
        let sol = solve_points_to(&build_constraints(&p));
        (p, sol)
    }

    fn site(p: &IrProgram, name: &str) -> AllocSiteId {
        p.alloc_sites.iter().find(|s| s.name == name).unwrap().id
    }

    /// Points-to set of the pointer loaded by the use site reading `target`.
    fn loaded_pointer(
        p: &IrProgram,
        sol: &PointsToSolution,
        target: &str,
    ) -> BTreeSet<AbstractLoc> {
        let main = p.main;
        let dest: Reg = p
            .function(main)
            .insts()
            .find_map(|i| match i {
                Inst::Load {
                    dest, target: t, ..
                } if t == target => Some(*dest),
                _ => None,
            })
            .unwrap();
        sol.points_to(&Node::Reg(FuncIdx(main.0), dest)).clone()
    }

    #[test]
    fn single_target() {
        let (p, sol) = solve("void main() { int x; int* p; p = &x; *p = 1; }");
        let x = site(&p, "x");
        assert_eq!(
            loaded_pointer(&p, &sol, "p"),
            BTreeSet::from([AbstractLoc::new(x, 0)])
        );
    }

    #[test]
    fn field_target() {
        let (p, sol) = solve(
            "struct S { int a[4]; int k; }; void main() { struct S s; int* q; q = &s.k; *q = 2; }",
        );
        let s = site(&p, "s");
        assert_eq!(
            loaded_pointer(&p, &sol, "q"),
            BTreeSet::from([AbstractLoc::new(s, 1)])
        );
    }

    #[test]
    fn flow_insensitive_union() {
        let (p, sol) =
            solve("void main(int c) { int x; int y; int* p; if (c) p = &x; else p = &y; *p = 1; }");
        let (x, y) = (site(&p, "x"), site(&p, "y"));
        assert_eq!(
            loaded_pointer(&p, &sol, "p"),
            BTreeSet::from([AbstractLoc::new(x, 0), AbstractLoc::new(y, 0)])
        );
    }

    #[test]
    fn heap_field_through_pointer_chain() {
        let (p, sol) = solve(
            "struct H { int a; char b; int* c; };\n\
             struct H* make() { return malloc(sizeof(struct H)); }\n\
             void main() { struct H* h; int** q; h = make(); q = &h->c; *q = &h->a; print(*h->c); }",
        );
        let heap = p
            .alloc_sites
            .iter()
            .find(|s| s.name == "malloc")
            .unwrap()
            .id;
        assert_eq!(
            loaded_pointer(&p, &sol, "q"),
            BTreeSet::from([AbstractLoc::new(heap, 2)])
        );
        assert_eq!(
            loaded_pointer(&p, &sol, "h->c"),
            BTreeSet::from([AbstractLoc::new(heap, 0)])
        );
    }

    #[test]
    fn deterministic() {
        let text = "struct N { struct N* next; int v; }; void main() { struct N a; struct N b; a.next = &b; b.next = &a; print(a.next->next->v); }";
        let (_, s1) = solve(text);
        let (_, s2) = solve(text);
        assert_eq!(s1, s2);
    }
}
