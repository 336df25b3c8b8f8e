use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Number(f64),
    Ident(String),
    Output,
    LParen,
    RParen,
    Comma,
    Plus,
    Star,
    Equals,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Output => "`output`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Equals => "`=`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
    /// 1-based.
    pub line: usize,
    pub col: usize,
}

/// Splits source text into tokens. `#` starts a comment running to end of
/// line. A `-` immediately followed by a digit or `.` begins a negative
/// number literal (the language has no subtraction operator).
pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;

    while i < bytes.len() {
        let c = bytes[i];
        let col = src[line_start..i].chars().count() + 1;
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' | b')' | b',' | b'+' | b'*' | b'=' => {
                let kind = match c {
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    b',' => TokenKind::Comma,
                    b'+' => TokenKind::Plus,
                    b'*' => TokenKind::Star,
                    _ => TokenKind::Equals,
                };
                out.push(Token {
                    kind,
                    start: i,
                    end: i + 1,
                    line,
                    col,
                });
                i += 1;
            }
            b'0'..=b'9' | b'.' | b'-' => {
                let start = i;
                if c == b'-' {
                    i += 1;
                    if !matches!(bytes.get(i), Some(b'0'..=b'9' | b'.')) {
                        return Err(DslError::parse(line, col, "`-` must begin a number literal"));
                    }
                }
                let mut seen_digit = false;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                    seen_digit = true;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                        seen_digit = true;
                    }
                }
                if !seen_digit {
                    return Err(DslError::parse(line, col, "malformed number literal"));
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| DslError::parse(line, col, format!("bad number `{text}`")))?;
                if !value.is_finite() {
                    return Err(DslError::parse(line, col, "number literal out of range"));
                }
                out.push(Token {
                    kind: TokenKind::Number(value),
                    start,
                    end: i,
                    line,
                    col,
                });
            }
            c if c == b'_' || c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                let word = &src[start..i];
                let kind = if word == "output" {
                    TokenKind::Output
                } else {
                    TokenKind::Ident(word.to_string())
                };
                out.push(Token {
                    kind,
                    start,
                    end: i,
                    line,
                    col,
                });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(DslError::parse(
                    line,
                    col,
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn numbers_and_comments() {
        assert_eq!(
            kinds("x = -1.5 * .25 # trailing\noutput x"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Equals,
                TokenKind::Number(-1.5),
                TokenKind::Star,
                TokenKind::Number(0.25),
                TokenKind::Output,
                TokenKind::Ident("x".into()),
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("a = 1\n  output a").unwrap();
        let out = &toks[3];
        assert_eq!((out.line, out.col), (2, 3));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            tokenize("output $"),
            Err(DslError::Parse { line: 1, col: 8, .. })
        ));
        assert!(tokenize("a = - 1").is_err());
        assert!(tokenize("a = .").is_err());
        assert!(tokenize("é").is_err());
    }
}
