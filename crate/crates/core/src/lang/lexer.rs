use super::ast::Span;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Extern,
    Weak,
    If,
    Else,
    Return,
    Null,
    KwInt,
    KwStr,
    KwHandle,
    KwFnRef,
    KwVoid,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Assign,
    EqEq,
    NotEq,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Int(k) => format!("integer `{k}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Extern => "extern",
            Tok::Weak => "weak",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Return => "return",
            Tok::Null => "null",
            Tok::KwInt => "int",
            Tok::KwStr => "str",
            Tok::KwHandle => "handle",
            Tok::KwFnRef => "fnref",
            Tok::KwVoid => "void",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "extern" => Tok::Extern,
        "weak" => Tok::Weak,
        "if" => Tok::If,
        "else" => Tok::Else,
        "return" => Tok::Return,
        "null" => Tok::Null,
        "int" => Tok::KwInt,
        "str" => Tok::KwStr,
        "handle" => Tok::KwHandle,
        "fnref" => Tok::KwFnRef,
        "void" => Tok::KwVoid,
        _ => return None,
    })
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let syntax = |line, col, message: String| LangError::Syntax { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let tok = keyword(&word).unwrap_or(Tok::Ident(word));
                out.push(Token { tok, span });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(syntax(
                        line,
                        col,
                        format!("malformed number `{text}{}`", chars[i]),
                    ));
                }
                let k = text.parse::<i64>().map_err(|_| {
                    syntax(
                        span.line,
                        span.col,
                        format!("integer `{text}` out of range"),
                    )
                })?;
                out.push(Token {
                    tok: Tok::Int(k),
                    span,
                });
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(syntax(
                                span.line,
                                span.col,
                                "unterminated string literal".into(),
                            ))
                        }
                        Some('"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('0') => '\0',
                                Some('\\') => '\\',
                                Some('"') => '"',
                                other => {
                                    let shown = other.map(|c| c.to_string()).unwrap_or_default();
                                    return Err(syntax(
                                        line,
                                        col,
                                        format!("unknown escape `\\{shown}`"),
                                    ));
                                }
                            };
                            s.push(esc);
                            i += 2;
                            col += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    span,
                });
            }
            _ => {
                let two = chars.get(i + 1).copied();
                let (tok, n) = match (c, two) {
                    ('=', Some('=')) => (Tok::EqEq, 2),
                    ('!', Some('=')) => (Tok::NotEq, 2),
                    ('=', _) => (Tok::Assign, 1),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    ('{', _) => (Tok::LBrace, 1),
                    ('}', _) => (Tok::RBrace, 1),
                    (';', _) => (Tok::Semi, 1),
                    (',', _) => (Tok::Comma, 1),
                    ('+', _) => (Tok::Plus, 1),
                    ('-', _) => (Tok::Minus, 1),
                    _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
                };
                advance(n, &mut i, &mut col);
                out.push(Token { tok, span });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn keywords_operators_and_comments() {
        assert_eq!(
            toks("weak extern int f(); // trailing\nx == y != 3"),
            vec![
                Tok::Weak,
                Tok::Extern,
                Tok::KwInt,
                Tok::Ident("f".into()),
                Tok::LParen,
                Tok::RParen,
                Tok::Semi,
                Tok::Ident("x".into()),
                Tok::EqEq,
                Tok::Ident("y".into()),
                Tok::NotEq,
                Tok::Int(3),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            toks(r#""a\n\"b\"""#),
            vec![Tok::Str("a\n\"b\"".into()), Tok::Eof]
        );
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let t = tokenize("int\n  foo").unwrap();
        assert_eq!(t[1].span, Span::new(2, 3));
    }

    #[test]
    fn errors_carry_position() {
        assert!(matches!(
            tokenize("x @"),
            Err(LangError::Syntax {
                line: 1,
                col: 3,
                ..
            })
        ));
        assert!(matches!(
            tokenize("\"abc"),
            Err(LangError::Syntax {
                line: 1,
                col: 1,
                ..
            })
        ));
        assert!(matches!(
            tokenize("99999999999999999999"),
            Err(LangError::Syntax { .. })
        ));
    }
}
