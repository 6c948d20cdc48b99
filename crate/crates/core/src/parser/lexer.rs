use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
    NotEq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::NotEq => "`!=`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut pos = Pos { line: 1, col: 1 };
    let bump = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            bump(c, &mut pos);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                bump(c, &mut pos);
            }
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                    bump(c, &mut pos);
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), start));
        } else if c.is_ascii_digit() || c == '.' {
            let mut s = String::new();
            let mut seen_dot = false;
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || (c == '.' && !seen_dot) {
                    seen_dot |= c == '.';
                    s.push(c);
                    chars.next();
                    bump(c, &mut pos);
                } else {
                    break;
                }
            }
            if s == "." {
                return Err(ParseError::Syntax {
                    line: start.line,
                    col: start.col,
                    found: "`.`".into(),
                    expected: "a number".into(),
                });
            }
            out.push((Tok::Number(s), start));
        } else if c == '!' {
            chars.next();
            bump(c, &mut pos);
            if chars.peek() == Some(&'=') {
                chars.next();
                bump('=', &mut pos);
                out.push((Tok::NotEq, start));
            } else {
                return Err(ParseError::Syntax {
                    line: start.line,
                    col: start.col,
                    found: "`!`".into(),
                    expected: "`!=`".into(),
                });
            }
        } else if "+-*/^(){};=".contains(c) {
            chars.next();
            bump(c, &mut pos);
            out.push((Tok::Sym(c), start));
        } else {
            return Err(ParseError::Syntax {
                line: start.line,
                col: start.col,
                found: format!("`{c}`"),
                expected: "a token".into(),
            });
        }
    }
    out.push((Tok::Eof, pos));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("d x1 = 0.5*x2; # note\nassume a != 0;").unwrap();
        assert_eq!(toks[0].0, Tok::Ident("d".into()));
        assert_eq!(toks[3].0, Tok::Number("0.5".into()));
        let ne = toks.iter().find(|(t, _)| *t == Tok::NotEq).unwrap();
        assert_eq!(ne.1, Pos { line: 2, col: 10 });
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(matches!(tokenize("x @ y"), Err(ParseError::Syntax { col: 3, .. })));
        assert!(tokenize("a ! b").is_err());
    }
}
