// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random memory-safe MiniC programs.
//!
//! Every generated program keeps its pointers valid: struct pointers always
//! address a live node, `q` always addresses a live int, array indices are
//! constants or a bounded loop counter, and heap nodes are freed only after
//! their last use. Programs are therefore defined for every input, which
//! makes them usable both as semantic references and as soundness probes.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const PRELUDE: &str = "\
struct Node { int val; char tag; int arr[3]; struct Node* next; };
struct Pair { struct Node n; int w[2]; int* link; };
int g0;
int gtab[4];
struct Node gnode;

int helper(struct Node* p, int v) {
  p->val = p->val + v;
  return p->val;
}

struct Node* pick(struct Node* a, struct Node* b, int c) {
  if (c < 0) return a;
  return b;
}

int* slot(struct Pair* p, int i) {
  return &p->w[i];
}

void main(int in0, int in1) {
  int i0; int i1; char c0; int k;
  struct Node s0; struct Node s1; struct Pair pr;
  struct Node* p0; struct Node* p1; int* q; int** qq;
  p0 = &s0; p1 = &s1; q = &i0; qq = &q;
  s0.next = &s1; s1.next = &s0; gnode.next = &gnode; pr.n.next = &s0;
  pr.link = &g0;
";

struct Gen {
    rng: StdRng,
    out: String,
    indent: usize,
    in_loop: bool,
}

/// A random program taking two int inputs.
pub fn random_program(seed: u64, statements: usize) -> String {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        out: PRELUDE.to_string(),
        indent: 1,
        in_loop: false,
    };
    for _ in 0..statements {
        g.stmt(0);
    }
    g.line("print(i0 + i1 + s0.val + s1.val + g0);");
    g.out.push_str("}\n");
    g.out
}

impl Gen {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn index(&mut self, bound: u32) -> String {
        if self.in_loop && bound >= 3 && self.rng.gen_bool(0.5) {
            "k".to_string()
        } else {
            self.rng.gen_range(0..bound).to_string()
        }
    }

    fn int_lvalue(&mut self) -> String {
        let (a, b, c) = (self.index(3), self.index(2), self.index(4));
        match self.rng.gen_range(0..13) {
            0 => "i0".into(),
            1 => "i1".into(),
            2 => "s0.val".into(),
            3 => format!("s1.arr[{a}]"),
            4 => "p0->val".into(),
            5 => format!("p1->arr[{a}]"),
            6 => "*q".into(),
            7 => format!("pr.n.arr[{a}]"),
            8 => format!("pr.w[{b}]"),
            9 => format!("gtab[{c}]"),
            10 => "g0".into(),
            11 => "**qq".into(),
            _ => "*pr.link".into(),
        }
    }

    fn char_lvalue(&mut self) -> String {
        self.pick(&["c0", "s0.tag", "p0->tag", "gnode.tag"]).into()
    }

    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => self.rng.gen_range(-9..20).to_string(),
            1 => self.pick(&["in0", "in1"]).into(),
            2 => self.char_lvalue(),
            3 => "p0->next->val".into(),
            _ => self.int_lvalue(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.atom();
        }
        let l = self.expr(depth - 1);
        match self.rng.gen_range(0..5) {
            0 => format!("({l} + {})", self.expr(depth - 1)),
            1 => format!("({l} - {})", self.expr(depth - 1)),
            2 => format!("({l} * {})", self.rng.gen_range(-3..4)),
            3 => format!("({l} / {})", self.pick(&["1", "2", "3", "-2", "7"])),
            _ => format!("-{l}"),
        }
    }

    fn int_pointer(&mut self) -> String {
        let (a, b, c) = (self.index(3), self.index(2), self.index(4));
        match self.rng.gen_range(0..9) {
            0 => "&i0".into(),
            1 => "&i1".into(),
            2 => "&s0.val".into(),
            3 => format!("&p0->arr[{a}]"),
            4 => format!("&pr.w[{b}]"),
            5 => format!("slot(&pr, {b})"),
            6 => format!("&gtab[{c}]"),
            7 => "&g0".into(),
            _ => "pr.link".into(),
        }
    }

    fn node_pointer(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => "&s0".into(),
            1 => "&s1".into(),
            2 => "&gnode".into(),
            3 => "&pr.n".into(),
            4 => "p1->next".into(),
            _ => {
                let e = self.expr(1);
                format!("pick(p0, p1, {e})")
            }
        }
    }

    fn stmt(&mut self, depth: u32) {
        let choice = self.rng.gen_range(0..14);
        match choice {
            0..=3 => {
                let (l, r) = (self.int_lvalue(), self.expr(2));
                self.line(&format!("{l} = {r};"));
            }
            4 => {
                let (l, r) = (self.char_lvalue(), self.expr(1));
                self.line(&format!("{l} = {r};"));
            }
            5 => {
                let (l, r) = (self.pick(&["p0", "p1"]), self.node_pointer());
                self.line(&format!("{l} = {r};"));
            }
            6 => {
                let r = self.int_pointer();
                let l = self.pick(&["q", "pr.link", "*qq"]);
                self.line(&format!("{l} = {r};"));
            }
            7 => {
                let e = self.expr(1);
                let l = self.int_lvalue();
                let p = self.pick(&["p0", "p1", "&s0"]);
                self.line(&format!("{l} = helper({p}, {e});"));
            }
            8 => {
                let e = self.expr(2);
                self.line(&format!("print({e});"));
            }
            9 => {
                let v = self.expr(1);
                self.line("p0 = malloc(sizeof(struct Node));");
                self.line("p0->next = &s1;");
                self.line(&format!("p0->val = {v};"));
            }
            10 => {
                let v = self.expr(1);
                self.line("p1 = malloc(sizeof(struct Node));");
                self.line("p1->next = p0;");
                self.line(&format!("p1->arr[1] = {v};"));
                self.line("i1 = i1 + p1->arr[1] + p1->next->val;");
                self.line("free(p1);");
                self.line("p1 = &s1;");
            }
            11 if depth < 2 => {
                let (l, r) = (self.expr(1), self.expr(1));
                let op = self.pick(&["<", "<=", "==", "!=", ">"]);
                self.line(&format!("if ({l} {op} {r}) {{"));
                self.block(depth + 1);
                if self.rng.gen_bool(0.5) {
                    self.line("} else {");
                    self.block(depth + 1);
                }
                self.line("}");
            }
            12 if depth < 2 && !self.in_loop => {
                let n = self.rng.gen_range(1..4);
                self.line("k = 0;");
                self.line(&format!("while (k < {n}) {{"));
                self.in_loop = true;
                self.block(depth + 1);
                self.indent += 1;
                self.line("k = k + 1;");
                self.indent -= 1;
                self.in_loop = false;
                self.line("}");
            }
            _ => {
                let (i, v) = (self.index(3), self.expr(1));
                self.line(&format!("s0.arr[{i}] = {v};"));
            }
        }
    }

    fn block(&mut self, depth: u32) {
        self.indent += 1;
        let n = self.rng.gen_range(1..4);
        for _ in 0..n {
            self.stmt(depth);
        }
        self.indent -= 1;
    }
}
