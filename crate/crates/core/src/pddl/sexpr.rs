//! Minimal s-expression reader for PDDL text.
//!
//! Comments (`;` to end of line) are dropped and every symbol is folded to
//! lowercase before it reaches the structural parsers.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Symbol(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Symbol(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Symbol(..) => None,
        }
    }

    /// The leading symbol of a list, e.g. `:action` for `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(Pos),
    Close(Pos),
    Symbol(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find(';') {
            Some(cut) => &raw_line[..cut],
            None => raw_line,
        };
        let mut current = String::new();
        let mut start = Pos { line: 0, col: 0 };
        for (col_idx, ch) in line.chars().enumerate() {
            let pos = Pos {
                line: line_idx + 1,
                col: col_idx + 1,
            };
            if ch == '(' || ch == ')' || ch.is_whitespace() {
                if !current.is_empty() {
                    tokens.push(Token::Symbol(std::mem::take(&mut current), start));
                }
                match ch {
                    '(' => tokens.push(Token::Open(pos)),
                    ')' => tokens.push(Token::Close(pos)),
                    _ => {}
                }
            } else {
                if current.is_empty() {
                    start = pos;
                }
                current.extend(ch.to_lowercase());
            }
        }
        if !current.is_empty() {
            tokens.push(Token::Symbol(current, start));
        }
    }
    tokens
}

/// Reads exactly one top-level expression; trailing tokens are an error.
pub fn read(text: &str) -> Result<SExpr, PddlError> {
    let tokens = tokenize(text);
    let mut idx = 0;
    let expr = read_expr(&tokens, &mut idx)?;
    if let Some(tok) = tokens.get(idx) {
        let pos = token_pos(tok);
        return Err(PddlError::syntax(
            pos,
            "unexpected content after top-level expression",
        ));
    }
    Ok(expr)
}

fn token_pos(tok: &Token) -> Pos {
    match tok {
        Token::Open(p) | Token::Close(p) | Token::Symbol(_, p) => *p,
    }
}

fn read_expr(tokens: &[Token], idx: &mut usize) -> Result<SExpr, PddlError> {
    let Some(tok) = tokens.get(*idx) else {
        return Err(PddlError::syntax(
            Pos { line: 0, col: 0 },
            "unexpected end of input",
        ));
    };
    *idx += 1;
    match tok {
        Token::Symbol(s, p) => Ok(SExpr::Symbol(s.clone(), *p)),
        Token::Close(p) => Err(PddlError::syntax(*p, "unbalanced ')'")),
        Token::Open(p) => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*idx) {
                    None => return Err(PddlError::syntax(*p, "unclosed '('")),
                    Some(Token::Close(_)) => {
                        *idx += 1;
                        return Ok(SExpr::List(items, *p));
                    }
                    Some(_) => items.push(read_expr(tokens, idx)?),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_comments_and_folds_case() {
        let e = read("(Define ; comment (ignored\n (Domain MAZE))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("define"));
        assert_eq!(items[1].as_list().unwrap()[1].as_symbol(), Some("maze"));
    }

    #[test]
    fn reports_position_of_unbalanced_paren() {
        let err = read("(a\n  b))").unwrap_err();
        match err {
            PddlError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unclosed_list_is_an_error() {
        assert!(read("(a (b c)").is_err());
    }
}
