// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for MiniC.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse(source: &SourceProgram) -> Result<Ast, ParseError> {
    let tokens = tokenize(&source.text)?;
    let mut parser = Parser { tokens, cursor: 0 };
    parser.program()
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.cursor + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.cursor].pos
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError::new(
            self.pos(),
            format!("expected {what}, found {}", self.peek().describe()),
        )
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.bump().pos;
                Ok((name, pos))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn program(&mut self) -> PResult<Ast> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(Ast { items })
    }

    fn starts_type(&self) -> bool {
        matches!(
            self.peek(),
            Tok::KwInt | Tok::KwChar | Tok::Void | Tok::Struct
        )
    }

    fn item(&mut self) -> PResult<Item> {
        let pos = self.pos();
        if *self.peek() == Tok::Struct
            && matches!(self.peek_at(1), Tok::Ident(_))
            && *self.peek_at(2) == Tok::LBrace
        {
            return self.struct_decl().map(Item::Struct);
        }
        if !self.starts_type() {
            return Err(self.unexpected("a declaration"));
        }
        let base = self.base_type()?;
        let (name, _) = self.ident("a name")?;
        if *self.peek() == Tok::LParen {
            return self.function(base, name, pos).map(Item::Function);
        }
        let decl = self.var_decl_rest(base, name, pos)?;
        Ok(Item::Global(decl))
    }

    fn struct_decl(&mut self) -> PResult<StructDecl> {
        let pos = self.expect(Tok::Struct, "`struct`")?;
        let (name, _) = self.ident("a struct name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::RBrace {
            let fpos = self.pos();
            if !self.starts_type() {
                return Err(self.unexpected("a field type"));
            }
            let base = self.base_type()?;
            let (fname, _) = self.ident("a field name")?;
            let ty = self.array_suffix(base)?;
            self.expect(Tok::Semi, "`;`")?;
            fields.push(FieldDecl {
                name: fname,
                ty,
                pos: fpos,
            });
        }
        if fields.is_empty() {
            return Err(ParseError::new(
                self.pos(),
                "struct must declare at least one field",
            ));
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(StructDecl { name, fields, pos })
    }

    /// Scalar or struct type followed by any number of `*`.
    fn base_type(&mut self) -> PResult<TypeExpr> {
        let mut ty = match self.bump().tok {
            Tok::KwInt => TypeExpr::Int,
            Tok::KwChar => TypeExpr::Char,
            Tok::Void => TypeExpr::Void,
            Tok::Struct => {
                let (name, _) = self.ident("a struct name")?;
                TypeExpr::Struct(name)
            }
            _ => {
                self.cursor -= 1;
                return Err(self.unexpected("a type"));
            }
        };
        while self.eat(&Tok::Star) {
            ty = TypeExpr::Pointer(Box::new(ty));
        }
        Ok(ty)
    }

    fn array_suffix(&mut self, base: TypeExpr) -> PResult<TypeExpr> {
        let mut dims = Vec::new();
        while self.eat(&Tok::LBracket) {
            let pos = self.pos();
            let n = match self.bump().tok {
                Tok::Int(n) if n > 0 => n as u32,
                _ => return Err(ParseError::new(pos, "expected a positive array length")),
            };
            self.expect(Tok::RBracket, "`]`")?;
            dims.push(n);
        }
        Ok(dims
            .into_iter()
            .rev()
            .fold(base, |ty, n| TypeExpr::Array(Box::new(ty), n)))
    }

    fn var_decl_rest(&mut self, base: TypeExpr, name: String, pos: Pos) -> PResult<VarDecl> {
        let ty = self.array_suffix(base)?;
        let init = if self.eat(&Tok::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(VarDecl {
            name,
            ty,
            init,
            pos,
        })
    }

    fn function(&mut self, ret: TypeExpr, name: String, pos: Pos) -> PResult<Function> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() == Tok::Void && *self.peek_at(1) == Tok::RParen {
            self.bump();
        }
        if *self.peek() != Tok::RParen {
            loop {
                let ppos = self.pos();
                if !self.starts_type() {
                    return Err(self.unexpected("a parameter type"));
                }
                let ty = self.base_type()?;
                let (pname, _) = self.ident("a parameter name")?;
                params.push(Param {
                    name: pname,
                    ty,
                    pos: ppos,
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block_body()?;
        Ok(Function {
            name,
            ret,
            params,
            body,
            pos,
        })
    }

    fn block_body(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek() {
            Tok::KwInt | Tok::KwChar | Tok::Struct | Tok::Void => {
                let base = self.base_type()?;
                let (name, _) = self.ident("a variable name")?;
                StmtKind::Decl(self.var_decl_rest(base, name, pos)?)
            }
            Tok::LBrace => StmtKind::Block(self.block_body()?),
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then = Box::new(self.stmt()?);
                let els = if self.eat(&Tok::Else) {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                StmtKind::If(cond, then, els)
            }
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                StmtKind::While(cond, Box::new(self.stmt()?))
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::Free | Tok::Print => {
                let is_free = self.bump().tok == Tok::Free;
                self.expect(Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                if is_free {
                    StmtKind::Free(e)
                } else {
                    StmtKind::Print(e)
                }
            }
            _ => {
                let lhs = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let rhs = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign(lhs, rhs)
                } else {
                    self.expect(Tok::Semi, "`;` or `=`")?;
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.equality()
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Self) -> PResult<Expr>,
        ops: &[(Tok, BinOp)],
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.peek() == tok {
                    let pos = self.bump().pos;
                    let rhs = next(self)?;
                    lhs = Expr {
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                        pos,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn equality(&mut self) -> PResult<Expr> {
        self.binary_level(
            Self::relational,
            &[(Tok::EqEq, BinOp::Eq), (Tok::Ne, BinOp::Ne)],
        )
    }

    fn relational(&mut self) -> PResult<Expr> {
        self.binary_level(
            Self::additive,
            &[
                (Tok::Lt, BinOp::Lt),
                (Tok::Le, BinOp::Le),
                (Tok::Gt, BinOp::Gt),
                (Tok::Ge, BinOp::Ge),
            ],
        )
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_level(
            Self::multiplicative,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
        )
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_level(
            Self::unary,
            &[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div)],
        )
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let wrap = |kind: fn(Box<Expr>) -> ExprKind, inner: Expr| Expr {
            kind: kind(Box::new(inner)),
            pos,
        };
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(wrap(ExprKind::Neg, self.unary()?))
            }
            Tok::Amp => {
                self.bump();
                Ok(wrap(ExprKind::AddrOf, self.unary()?))
            }
            Tok::Star => {
                self.bump();
                Ok(wrap(ExprKind::Deref, self.unary()?))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let (f, _) = self.ident("a field name")?;
                    e = Expr {
                        kind: ExprKind::Field(Box::new(e), f),
                        pos,
                    };
                }
                Tok::Arrow => {
                    self.bump();
                    let (f, _) = self.ident("a field name")?;
                    e = Expr {
                        kind: ExprKind::Arrow(Box::new(e), f),
                        pos,
                    };
                }
                Tok::LBracket => {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    e = Expr {
                        kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                        pos,
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::IntLit(v)
            }
            Tok::Char(c) => {
                self.bump();
                ExprKind::CharLit(c)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    ExprKind::Call(name, args)
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(e);
            }
            Tok::Malloc => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                self.expect(Tok::Sizeof, "`sizeof`")?;
                self.expect(Tok::LParen, "`(`")?;
                if !self.starts_type() {
                    return Err(self.unexpected("a type"));
                }
                let ty = self.base_type()?;
                self.expect(Tok::RParen, "`)`")?;
                let count = if self.eat(&Tok::Star) {
                    Some(Box::new(self.unary()?))
                } else {
                    None
                };
                self.expect(Tok::RParen, "`)`")?;
                ExprKind::Malloc { ty, count }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr { kind, pos })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<Ast, ParseError> {
        parse(&SourceProgram::new("test.mc", text))
    }

    #[test]
    fn minimal_program() {
        let ast = parse_str("int x; void main(){ x = 1; }").unwrap();
        assert_eq!(ast.items.len(), 2);
        match &ast.items[0] {
            Item::Global(g) => assert_eq!(g.name, "x"),
            other => panic!("expected global, got {other:?}"),
        }
        match &ast.items[1] {
            Item::Function(f) => {
                assert_eq!(f.body.len(), 1);
                assert!(matches!(f.body[0].kind, StmtKind::Assign(..)));
            }
            other => panic!("expected function, got {other:?}"),
        }
    }

    #[test]
    fn struct_with_array_field() {
        let ast = parse_str("struct S { int a[4]; int k; };").unwrap();
        let Item::Struct(s) = &ast.items[0] else {
            panic!("expected struct")
        };
        assert_eq!(s.fields.len(), 2);
        assert_eq!(s.fields[0].ty, TypeExpr::Array(Box::new(TypeExpr::Int), 4));
        assert_eq!(s.fields[1].name, "k");
    }

    #[test]
    fn missing_initializer_points_at_semicolon() {
        let err = parse_str("int x = ;").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 9));
        assert!(err.message.contains("expected an expression"), "{err}");
    }

    #[test]
    fn precedence_and_postfix() {
        let ast = parse_str("void main(){ x = *p->q[2] + 3 * 4 < 5; }").unwrap();
        let Item::Function(f) = &ast.items[0] else {
            panic!()
        };
        let StmtKind::Assign(_, rhs) = &f.body[0].kind else {
            panic!()
        };
        let ExprKind::Binary(BinOp::Lt, lhs, _) = &rhs.kind else {
            panic!("comparison should bind loosest: {rhs:?}")
        };
        let ExprKind::Binary(BinOp::Add, deref, _) = &lhs.kind else {
            panic!()
        };
        assert!(matches!(deref.kind, ExprKind::Deref(_)));
    }

    #[test]
    fn malloc_forms() {
        let ast =
            parse_str("void main(){ p = malloc(sizeof(struct S)); q = malloc(sizeof(int) * n); }")
                .unwrap();
        let Item::Function(f) = &ast.items[0] else {
            panic!()
        };
        let StmtKind::Assign(_, rhs) = &f.body[1].kind else {
            panic!()
        };
        assert!(matches!(
            &rhs.kind,
            ExprKind::Malloc {
                ty: TypeExpr::Int,
                count: Some(_)
            }
        ));
    }
}
