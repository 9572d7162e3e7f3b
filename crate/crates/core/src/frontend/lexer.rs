// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Char(u8),
    // keywords
    Struct,
    KwInt,
    KwChar,
    Void,
    If,
    Else,
    While,
    Return,
    Malloc,
    Sizeof,
    Free,
    Print,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Amp,
    Dot,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Char(c) => format!("character literal {:?}", *c as char),
            Tok::Eof => "end of file".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Struct => "struct",
            Tok::KwInt => "int",
            Tok::KwChar => "char",
            Tok::Void => "void",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Malloc => "malloc",
            Tok::Sizeof => "sizeof",
            Tok::Free => "free",
            Tok::Print => "print",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Amp => "&",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Ident(_) | Tok::Int(_) | Tok::Char(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos::new(line, col);
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            col += (i - start) as u32;
            let tok = match word {
                "struct" => Tok::Struct,
                "int" => Tok::KwInt,
                "char" => Tok::KwChar,
                "void" => Tok::Void,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                "return" => Tok::Return,
                "malloc" => Tok::Malloc,
                "sizeof" => Tok::Sizeof,
                "free" => Tok::Free,
                "print" => Tok::Print,
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            col += (i - start) as u32;
            let value: i64 = text[start..i]
                .parse()
                .ok()
                .filter(|v| *v <= i32::MAX as i64)
                .ok_or_else(|| ParseError::new(pos, "integer literal out of range"))?;
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        if c == b'\'' {
            let (value, len) = match (bytes.get(i + 1), bytes.get(i + 2), bytes.get(i + 3)) {
                (Some(b'\\'), Some(esc), Some(b'\'')) => {
                    let v = match esc {
                        b'n' => b'\n',
                        b't' => b'\t',
                        b'0' => 0,
                        b'\\' => b'\\',
                        b'\'' => b'\'',
                        _ => {
                            return Err(ParseError::new(pos, "unknown escape in character literal"))
                        }
                    };
                    (v, 4)
                }
                (Some(&ch), Some(b'\''), _) if ch != b'\\' && ch != b'\n' && ch.is_ascii() => {
                    (ch, 3)
                }
                _ => return Err(ParseError::new(pos, "malformed character literal")),
            };
            i += len;
            col += len as u32;
            out.push(Token {
                tok: Tok::Char(value),
                pos,
            });
            continue;
        }

        let next = bytes.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            (b'<', Some(b'=')) => (Tok::Le, 2),
            (b'>', Some(b'=')) => (Tok::Ge, 2),
            (b'=', Some(b'=')) => (Tok::EqEq, 2),
            (b'!', Some(b'=')) => (Tok::Ne, 2),
            (b'-', Some(b'>')) => (Tok::Arrow, 2),
            (b'{', _) => (Tok::LBrace, 1),
            (b'}', _) => (Tok::RBrace, 1),
            (b'(', _) => (Tok::LParen, 1),
            (b')', _) => (Tok::RParen, 1),
            (b'[', _) => (Tok::LBracket, 1),
            (b']', _) => (Tok::RBracket, 1),
            (b';', _) => (Tok::Semi, 1),
            (b',', _) => (Tok::Comma, 1),
            (b'=', _) => (Tok::Assign, 1),
            (b'+', _) => (Tok::Plus, 1),
            (b'-', _) => (Tok::Minus, 1),
            (b'*', _) => (Tok::Star, 1),
            (b'/', _) => (Tok::Slash, 1),
            (b'<', _) => (Tok::Lt, 1),
            (b'>', _) => (Tok::Gt, 1),
            (b'&', _) => (Tok::Amp, 1),
            (b'.', _) => (Tok::Dot, 1),
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(pos, format!("unexpected character {ch:?}")));
            }
        };
        i += len;
        col += len as u32;
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos::new(line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_comments() {
        let toks = tokenize("p->x <= 3; // trailing\nq != 'a'").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("p".into()),
                Tok::Arrow,
                Tok::Ident("x".into()),
                Tok::Le,
                Tok::Int(3),
                Tok::Semi,
                Tok::Ident("q".into()),
                Tok::Ne,
                Tok::Char(b'a'),
                Tok::Eof
            ]
        );
        assert_eq!(toks[6].pos, Pos::new(2, 1));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x = 1 @ 2;").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 7));
    }
}
