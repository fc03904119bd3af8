//! Pulls commented method declarations out of whole Java files.

/// A method (or constructor) and the block comment right before it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedMethod {
    pub comment: String,
    pub source: String,
}

const NOT_METHOD_WORDS: &[&str] = &[
    "class",
    "interface",
    "enum",
    "record",
    "if",
    "for",
    "while",
    "switch",
    "return",
    "new",
    "throw",
    "else",
    "do",
    "try",
    "catch",
    "synchronized",
];

/// Finds every block comment followed by a method or constructor
/// declaration. Abstract methods end at their `;`; others run to the brace
/// that closes the body. Comments inside an extracted body are not searched.
pub fn extract_methods(file_text: &str) -> Vec<ExtractedMethod> {
    let b = file_text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i..].starts_with(b"/*") {
            let end = block_comment_end(b, i);
            let comment = &file_text[i..end];
            let start = skip_space(b, end);
            match declaration(b, start) {
                Some(stop) => {
                    out.push(ExtractedMethod {
                        comment: comment.to_string(),
                        source: file_text[start..stop].to_string(),
                    });
                    i = stop;
                }
                None => i = end,
            }
        } else {
            i = skip_token(b, i);
        }
    }
    out
}

fn block_comment_end(b: &[u8], i: usize) -> usize {
    let mut j = i + 2;
    while j + 1 < b.len() && !(b[j] == b'*' && b[j + 1] == b'/') {
        j += 1;
    }
    (j + 2).min(b.len())
}

/// Skips whitespace and line comments.
fn skip_space(b: &[u8], mut i: usize) -> usize {
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if b[i..].starts_with(b"//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else {
            return i;
        }
    }
}

/// Index past one lexical unit: a string, text block, char literal, line
/// comment, block comment, or single byte.
fn skip_token(b: &[u8], i: usize) -> usize {
    let rest = &b[i..];
    if rest.starts_with(b"\"\"\"") {
        let mut j = i + 3;
        while j < b.len() && !(b[j..].starts_with(b"\"\"\"") && b[j - 1] != b'\\') {
            j += 1;
        }
        (j + 3).min(b.len())
    } else if rest[0] == b'"' || rest[0] == b'\'' {
        let q = rest[0];
        let mut j = i + 1;
        while j < b.len() && b[j] != q && b[j] != b'\n' {
            j += if b[j] == b'\\' { 2 } else { 1 };
        }
        (j + 1).min(b.len())
    } else if rest.starts_with(b"//") {
        let mut j = i;
        while j < b.len() && b[j] != b'\n' {
            j += 1;
        }
        j
    } else if rest.starts_with(b"/*") {
        block_comment_end(b, i)
    } else {
        i + 1
    }
}

/// End of the method declaration starting at `start`, if it is one.
fn declaration(b: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut i = start;
    while i < b.len() {
        match b[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'=' | b'}' if depth == 0 => return None,
            b';' if depth == 0 => return header_ok(&b[start..i]).then_some(i + 1),
            b'{' if depth == 0 => return header_ok(&b[start..i]).then(|| matching_brace(b, i)),
            b'/' if b[i..].starts_with(b"/*") => return None,
            _ => {}
        }
        i = skip_token(b, i);
    }
    None
}

fn is_ident_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

/// Index past any leading `@Name` or `@Name(...)` annotations.
fn skip_annotations(b: &[u8], mut i: usize) -> usize {
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= b.len() || b[i] != b'@' {
            return i;
        }
        i += 1;
        while i < b.len() && (is_ident_byte(b[i]) || b[i] == b'.') {
            i += 1;
        }
        let mut k = i;
        while k < b.len() && b[k].is_ascii_whitespace() {
            k += 1;
        }
        if k < b.len() && b[k] == b'(' {
            let mut depth = 0;
            while k < b.len() {
                match b[k] {
                    b'(' => depth += 1,
                    b')' => depth -= 1,
                    _ => {}
                }
                k = skip_token(b, k);
                if depth == 0 {
                    break;
                }
            }
            i = k;
        }
    }
}

/// A method header: after annotations, a name directly before the first
/// `(`, and no keyword that starts a type, statement, or expression.
fn header_ok(header: &[u8]) -> bool {
    let rest = &header[skip_annotations(header, 0)..];
    let Some(open) = rest.iter().position(|&c| c == b'(') else {
        return false;
    };
    let name_part = String::from_utf8_lossy(&rest[..open]);
    name_part
        .trim_end()
        .bytes()
        .last()
        .is_some_and(is_ident_byte)
        && !name_part
            .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
            .any(|w| NOT_METHOD_WORDS.contains(&w))
}

fn matching_brace(b: &[u8], open: usize) -> usize {
    let mut depth = 0;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            _ => {}
        }
        i = skip_token(b, i);
    }
    b.len()
}
