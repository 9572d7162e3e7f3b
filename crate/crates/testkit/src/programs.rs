// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small hand-written programs covering each constraint form.

/// (name, source); each lowers to at most 50 IR instructions.
pub const SMALL: &[(&str, &str)] = &[
    ("scalar_rewrite", "int x; void main() { x = 1; x = 2; print(x); }"),
    ("no_stores", "int x; int y; void main() { print(x + y); }"),
    (
        "address_of",
        "void main() { int x; int* p; p = &x; *p = 1; print(x); }",
    ),
    (
        "field_address",
        "struct S { int a[4]; int k; }; void main() { struct S s; int* q; q = &s.k; *q = 2; print(s.k); }",
    ),
    (
        "branch_union",
        "void main(int c) { int x; int y; int* p; if (c) p = &x; else p = &y; *p = 1; print(x); }",
    ),
    (
        "intra_struct_overflow",
        "struct S { int a[4]; int k; }; void main(int i, int v) { struct S s; s.a[i] = v; s.k = 7; print(s.k); }",
    ),
    (
        "pointer_to_pointer",
        "void main() { int x; int* y; int** p; p = &y; *p = &x; **p = 5; print(x); }",
    ),
    (
        "heap_field",
        "struct H { int a; int b; int c; }; void main() { struct H* h; int* q; h = malloc(sizeof(struct H)); h->a = 1; h->c = 3; q = &h->c; print(*q); }",
    ),
    (
        "heap_via_function",
        "struct H { int a; char b; int* c; }; struct H* make() { return malloc(sizeof(struct H)); }\n\
         void main() { struct H* h; h = make(); h->c = &h->a; *h->c = 4; print(h->a); }",
    ),
    (
        "nested_struct",
        "struct In { int x; int y; }; struct Out { struct In a; int z; };\n\
         void main() { struct Out o; o.a.x = 1; o.a.y = 2; o.z = 3; print(o.a.x + o.a.y + o.z); }",
    ),
    (
        "cyclic_list",
        "struct N { struct N* next; int v; }; void main() { struct N a; struct N b; a.next = &b; b.next = &a; b.v = 9; print(a.next->next->next->v); }",
    ),
    (
        "pointer_param",
        "void set(int* p, int v) { *p = v; } void main() { int x; int y; set(&x, 1); set(&y, 2); print(x + y); }",
    ),
    (
        "returned_pointer",
        "int g; int h; int* choose(int c) { if (c) return &g; return &h; } void main(int c) { int* p; p = choose(c); *p = 3; print(g); }",
    ),
    (
        "global_pointer",
        "int x; int* gp; void main() { gp = &x; *gp = 6; print(x); }",
    ),
    (
        "global_initializer",
        "int x = 5; int y = 7; void main() { print(x * y); }",
    ),
    (
        "array_of_structs",
        "struct P { int x; int y; }; void main(int i) { struct P ps[3]; ps[i].y = 2; ps[0].x = 1; print(ps[1].y); }",
    ),
    (
        "heap_array",
        "void main(int n) { int* a; a = malloc(sizeof(int) * 4); a[n] = 3; print(a[0]); }",
    ),
    (
        "char_fields",
        "struct C { char t; int v; char u; }; void main() { struct C c; c.t = 65; c.v = 300; c.u = c.t; print(c.u + c.v); }",
    ),
    (
        "free_and_reuse",
        "struct A { int x; int y; }; void main() { struct A* a; struct A* b; a = malloc(sizeof(struct A)); a->x = 1; free(a); b = malloc(sizeof(struct A)); b->y = 2; print(b->y); }",
    ),
    (
        "pointer_in_struct",
        "struct R { int* p; int k; }; void main() { int v; struct R r; r.p = &v; *r.p = 8; r.k = 1; print(v + r.k); }",
    ),
    (
        "swap_pointers",
        "void main() { int x; int y; int* p; int* q; int* t; p = &x; q = &y; t = p; p = q; q = t; *p = 1; *q = 2; print(x - y); }",
    ),
    (
        "deref_chain_store",
        "struct N { struct N* next; int v; }; void main() { struct N a; struct N b; a.next = &b; a.next->v = 4; print(b.v); }",
    ),
    (
        "loop_counter",
        "void main(int n) { int i; int s; i = 0; s = 0; while (i < n) { s = s + i; i = i + 1; } print(s); }",
    ),
    (
        "address_of_array_element",
        "void main(int i) { int a[4]; int* p; p = &a[i]; *p = 7; print(a[2]); }",
    ),
    (
        "field_of_pointer_param",
        "struct S { int a; int b; }; void bump(struct S* s) { s->b = s->b + 1; } void main() { struct S s; bump(&s); bump(&s); print(s.b + s.a); }",
    ),
];
