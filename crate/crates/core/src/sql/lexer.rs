//! Hand-written tokenizer. Tracks 1-based line/column for error messages
//! and skips `--` comments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Minus,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Semi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn syntax_error(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        message: message.into(),
    }
}

pub fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            tokens.push(Token {
                tok: $tok,
                line: $line,
                col: $col,
            })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => advance(&mut i, &mut line, &mut col),
            '-' if i + 1 < chars.len() && chars[i + 1] == '-' => {
                // Line comment.
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            ',' => {
                push!(Tok::Comma, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '.' => {
                push!(Tok::Dot, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '(' => {
                push!(Tok::LParen, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            ')' => {
                push!(Tok::RParen, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '*' => {
                push!(Tok::Star, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '-' => {
                push!(Tok::Minus, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            ';' => {
                push!(Tok::Semi, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '=' => {
                push!(Tok::Eq, tline, tcol);
                advance(&mut i, &mut line, &mut col);
            }
            '<' => {
                advance(&mut i, &mut line, &mut col);
                if i < chars.len() && chars[i] == '=' {
                    advance(&mut i, &mut line, &mut col);
                    push!(Tok::Le, tline, tcol);
                } else {
                    push!(Tok::Lt, tline, tcol);
                }
            }
            '>' => {
                advance(&mut i, &mut line, &mut col);
                if i < chars.len() && chars[i] == '=' {
                    advance(&mut i, &mut line, &mut col);
                    push!(Tok::Ge, tline, tcol);
                } else {
                    push!(Tok::Gt, tline, tcol);
                }
            }
            '\'' => {
                advance(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(syntax_error(tline, tcol, "unterminated string literal"));
                    }
                    if chars[i] == '\'' {
                        advance(&mut i, &mut line, &mut col);
                        break;
                    }
                    if chars[i] == '\n' {
                        return Err(syntax_error(tline, tcol, "unterminated string literal"));
                    }
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                push!(Tok::Str(s), tline, tcol);
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                let mut is_float = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    is_float = true;
                    s.push('.');
                    advance(&mut i, &mut line, &mut col);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_float = true;
                        while i < j {
                            s.push(chars[i]);
                            advance(&mut i, &mut line, &mut col);
                        }
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            s.push(chars[i]);
                            advance(&mut i, &mut line, &mut col);
                        }
                    }
                }
                if is_float {
                    let v: f64 = s
                        .parse()
                        .map_err(|_| syntax_error(tline, tcol, format!("bad number '{s}'")))?;
                    push!(Tok::Float(v), tline, tcol);
                } else {
                    let v: i64 = s
                        .parse()
                        .map_err(|_| syntax_error(tline, tcol, format!("bad number '{s}'")))?;
                    push!(Tok::Int(v), tline, tcol);
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                push!(Tok::Ident(s), tline, tcol);
            }
            other => {
                return Err(syntax_error(tline, tcol, format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("SELECT a\nFROM t").unwrap();
        assert_eq!(toks[0].line, 1);
        assert_eq!(toks[0].col, 1);
        assert_eq!(toks[2].line, 2);
        assert_eq!(toks[2].col, 1);
    }

    #[test]
    fn operators_and_literals() {
        let toks = tokenize("a <= 1.5 AND b >= 'x' -- trailing\n< > = 2e3").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert!(matches!(kinds[1], Tok::Le));
        assert!(matches!(kinds[2], Tok::Float(v) if *v == 1.5));
        assert!(matches!(kinds[5], Tok::Ge));
        assert!(matches!(kinds[6], Tok::Str(s) if s == "x"));
        assert!(matches!(kinds[7], Tok::Lt));
        assert!(matches!(kinds[8], Tok::Gt));
        assert!(matches!(kinds[10], Tok::Float(v) if *v == 2000.0));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("WHERE a = 'oops").is_err());
    }
}
