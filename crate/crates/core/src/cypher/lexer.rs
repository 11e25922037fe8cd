use super::CypherError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Backtick-quoted identifier; never a keyword.
    Quoted(String),
    Str(String),
    Int(i64),
    Real(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Dash,
    Lt,
    Gt,
    Eq,
    Ne,
    Le,
    Ge,
    Star,
    Semi,
    Pipe,
    Plus,
    Other(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Byte offset into the query text.
    pub pos: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, CypherError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let single = |t: Tok| Token { tok: t, pos: start };
        match c {
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            '[' => out.push(single(Tok::LBracket)),
            ']' => out.push(single(Tok::RBracket)),
            '{' => out.push(single(Tok::LBrace)),
            '}' => out.push(single(Tok::RBrace)),
            ':' => out.push(single(Tok::Colon)),
            ',' => out.push(single(Tok::Comma)),
            '-' => out.push(single(Tok::Dash)),
            '*' => out.push(single(Tok::Star)),
            ';' => out.push(single(Tok::Semi)),
            '|' => out.push(single(Tok::Pipe)),
            '+' => out.push(single(Tok::Plus)),
            '=' => out.push(single(Tok::Eq)),
            '<' => match bytes.get(i + 1) {
                Some(b'>') => {
                    out.push(single(Tok::Ne));
                    i += 1;
                }
                Some(b'=') => {
                    out.push(single(Tok::Le));
                    i += 1;
                }
                _ => out.push(single(Tok::Lt)),
            },
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(single(Tok::Ge));
                    i += 1;
                } else {
                    out.push(single(Tok::Gt));
                }
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(single(Tok::Ne));
                i += 1;
            }
            '.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => out.push(single(Tok::Dot)),
            '\'' | '"' => {
                let (s, end) = lex_string(src, i, c)?;
                out.push(Token {
                    tok: Tok::Str(s),
                    pos: start,
                });
                i = end;
                continue;
            }
            '`' => {
                let mut name = String::new();
                let mut j = i + 1;
                loop {
                    match src[j..].chars().next() {
                        None => {
                            return Err(CypherError::Syntax {
                                position: start,
                                expected: "closing backtick".into(),
                            })
                        }
                        Some('`') if src[j + 1..].starts_with('`') => {
                            name.push('`');
                            j += 2;
                        }
                        Some('`') => {
                            j += 1;
                            break;
                        }
                        Some(ch) => {
                            name.push(ch);
                            j += ch.len_utf8();
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Quoted(name),
                    pos: start,
                });
                i = j;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let (tok, end) = lex_number(src, i)?;
                out.push(Token { tok, pos: start });
                i = end;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while let Some(ch) = src[j..].chars().next() {
                    if ch.is_alphanumeric() || ch == '_' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(src[i..j].to_string()),
                    pos: start,
                });
                i = j;
                continue;
            }
            other => out.push(single(Tok::Other(other))),
        }
        i += c.len_utf8();
    }
    Ok(out)
}

fn lex_string(src: &str, start: usize, quote: char) -> Result<(String, usize), CypherError> {
    let mut s = String::new();
    let mut chars = src[start + 1..].char_indices();
    while let Some((off, ch)) = chars.next() {
        match ch {
            c if c == quote => return Ok((s, start + 1 + off + 1)),
            '\\' => match chars.next() {
                Some((_, 'n')) => s.push('\n'),
                Some((_, 't')) => s.push('\t'),
                Some((_, 'r')) => s.push('\r'),
                Some((_, other)) => s.push(other),
                None => break,
            },
            c => s.push(c),
        }
    }
    Err(CypherError::Syntax {
        position: start,
        expected: format!("closing {quote}"),
    })
}

fn lex_number(src: &str, start: usize) -> Result<(Tok, usize), CypherError> {
    let b = src.as_bytes();
    let mut j = start;
    while j < b.len() && b[j].is_ascii_digit() {
        j += 1;
    }
    let mut is_real = false;
    if j < b.len() && b[j] == b'.' && b.get(j + 1).is_some_and(u8::is_ascii_digit) {
        is_real = true;
        j += 1;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
    }
    if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
        let mut k = j + 1;
        if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
            k += 1;
        }
        if k < b.len() && b[k].is_ascii_digit() {
            is_real = true;
            while k < b.len() && b[k].is_ascii_digit() {
                k += 1;
            }
            j = k;
        }
    }
    let text = &src[start..j];
    let bad = || CypherError::Syntax {
        position: start,
        expected: "number".into(),
    };
    if is_real {
        text.parse::<f64>()
            .map(|x| (Tok::Real(x), j))
            .map_err(|_| bad())
    } else {
        match text.parse::<i64>() {
            Ok(i) => Ok((Tok::Int(i), j)),
            Err(_) => text
                .parse::<f64>()
                .map(|x| (Tok::Real(x), j))
                .map_err(|_| bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_comparisons() {
        assert_eq!(
            toks("<-[r]-> <> <= >= !="),
            [
                Tok::Lt,
                Tok::Dash,
                Tok::LBracket,
                Tok::Ident("r".into()),
                Tok::RBracket,
                Tok::Dash,
                Tok::Gt,
                Tok::Ne,
                Tok::Le,
                Tok::Ge,
                Tok::Ne
            ]
        );
    }

    #[test]
    fn literals() {
        assert_eq!(
            toks(r#"'it\'s' "two" 3 0.25 1e3 .5"#),
            [
                Tok::Str("it's".into()),
                Tok::Str("two".into()),
                Tok::Int(3),
                Tok::Real(0.25),
                Tok::Real(1000.0),
                Tok::Real(0.5)
            ]
        );
        assert_eq!(
            toks("n.soc_dos_gap"),
            [
                Tok::Ident("n".into()),
                Tok::Dot,
                Tok::Ident("soc_dos_gap".into())
            ]
        );
        assert_eq!(toks("`odd name`"), [Tok::Quoted("odd name".into())]);
    }

    #[test]
    fn unterminated_string() {
        assert!(matches!(
            tokenize("MATCH (n {name: 'x})"),
            Err(CypherError::Syntax { position: 16, .. })
        ));
    }
}
