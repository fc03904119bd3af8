use super::AstError;

#[derive(Clone, Debug, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Number(String),
    Str,
    Char,
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(super) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

// Longest first, so a prefix scan finds the maximal operator. Operators
// starting with `>` are lexed one character at a time so that nested generic
// arguments close cleanly; the parser rejoins adjacent ones.
const PUNCTS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", ">", "<",
    "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

fn err(offset: usize, message: impl Into<String>) -> AstError {
    AstError::Parse {
        offset,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub(super) fn lex(src: &str) -> Result<Vec<Token>, AstError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
        } else if rest.starts_with("//") {
            i += rest.find('\n').unwrap_or(rest.len());
        } else if let Some(body) = rest.strip_prefix("/*") {
            let end = body
                .find("*/")
                .ok_or_else(|| err(i, "unterminated comment"))?;
            i += end + 4;
        } else if rest.starts_with("\"\"\"") {
            return Err(err(i, "text blocks are not supported"));
        } else if c == '"' || c == '\'' {
            let mut j = i + 1;
            loop {
                match bytes.get(j) {
                    None | Some(b'\n') => return Err(err(i, "unterminated literal")),
                    Some(b'\\') => j += 2,
                    Some(&b) if b == c as u8 => break,
                    Some(_) => j += 1,
                }
            }
            out.push(Token {
                tok: if c == '"' { Tok::Str } else { Tok::Char },
                offset: i,
            });
            i = j + 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let hex = rest.starts_with("0x") || rest.starts_with("0X");
            let mut j = i;
            while let Some(&b) = bytes.get(j) {
                let exp_sign = (b == b'+' || b == b'-')
                    && j > i
                    && matches!(bytes[j - 1], b'e' | b'E' | b'p' | b'P')
                    && (!hex || matches!(bytes[j - 1], b'p' | b'P'));
                if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Number(src[i..j].to_string()),
                offset: i,
            });
            i = j;
        } else if is_ident_start(c) {
            let len: usize = rest
                .chars()
                .take_while(|&c| is_ident_char(c))
                .map(char::len_utf8)
                .sum();
            out.push(Token {
                tok: Tok::Ident(rest[..len].to_string()),
                offset: i,
            });
            i += len;
        } else if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            out.push(Token {
                tok: Tok::Punct(p),
                offset: i,
            });
            i += p.len();
        } else {
            return Err(err(i, format!("unexpected character {c:?}")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: src.len(),
    });
    Ok(out)
}
