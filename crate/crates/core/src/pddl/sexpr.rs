//! Minimal s-expression reader with source positions.

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head symbol of a list, lowercased by the reader already.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }
}

/// Parses exactly one top-level list. Symbols are lowercased (PDDL is
/// case-insensitive) and `;` starts a comment running to end of line.
pub fn parse(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader {
        chars: text.chars().collect(),
        idx: 0,
        line: 1,
        col: 1,
    };
    reader.skip_ws();
    if reader.peek().is_none() {
        return Err(PddlError::Syntax {
            pos: reader.pos(),
            msg: "empty input".into(),
        });
    }
    let expr = reader.expr()?;
    reader.skip_ws();
    if reader.peek().is_some() {
        return Err(PddlError::Syntax {
            pos: reader.pos(),
            msg: "trailing input after top-level expression".into(),
        });
    }
    if expr.as_list().is_none() {
        return Err(PddlError::Syntax {
            pos: expr.pos(),
            msg: "expected '('".into(),
        });
    }
    Ok(expr)
}

struct Reader {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<Sexpr, PddlError> {
        self.skip_ws();
        let start = self.pos();
        match self.peek() {
            None => Err(PddlError::Syntax {
                pos: start,
                msg: "unexpected end of input".into(),
            }),
            Some(')') => Err(PddlError::Syntax {
                pos: start,
                msg: "unexpected ')'".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(PddlError::Syntax {
                                pos: self.pos(),
                                msg: format!("unclosed '(' opened at {start}"),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.expr()?),
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Sexpr::Atom(sym, start))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_comments() {
        let e = parse("(a (B c) ; note\n d)").unwrap();
        let l = e.as_list().unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l[1].head(), Some("b"));
        assert_eq!(l[2].pos(), Pos { line: 2, col: 2 });
    }

    #[test]
    fn empty_input_fails_at_origin() {
        match parse("") {
            Err(PddlError::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 1, col: 1 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbalanced_input() {
        assert!(parse("(a (b)").is_err());
        assert!(parse("(a))").is_err());
        assert!(parse("atom").is_err());
    }
}
