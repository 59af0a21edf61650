//! Tokenizer for Java source text.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Str,
    TextBlock,
    Char,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: u32,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is(&self, s: &str) -> bool {
        self.text == s && self.kind != TokKind::Str && self.kind != TokKind::Char
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub message: String,
}

// `>>`, `>>>` and their assignment forms are left as separate `>` tokens so
// that nested generic closers lex uniformly; the expression parser rejoins them.
const PUNCTS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*",
    "/", "&", "|", "^", "%",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start_line = line;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError {
                        line: start_line,
                        message: "unterminated block comment".into(),
                    });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let start_line = line;
        if c == b'"' && src[i..].starts_with("\"\"\"") {
            i += 3;
            loop {
                if i >= bytes.len() {
                    return Err(LexError {
                        line: start_line,
                        message: "unterminated text block".into(),
                    });
                }
                if bytes[i] == b'\\' {
                    i += 2;
                    continue;
                }
                if src[i..].starts_with("\"\"\"") {
                    i += 3;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            toks.push(Token {
                kind: TokKind::TextBlock,
                text: src[start..i].to_string(),
                line: start_line,
                start,
                end: i,
            });
            continue;
        }
        if c == b'"' || c == b'\'' {
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(LexError {
                            line: start_line,
                            message: "unterminated literal".into(),
                        })
                    }
                    Some(b'\\') => i += 2,
                    Some(&b) if b == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            toks.push(Token {
                kind: if c == b'"' { TokKind::Str } else { TokKind::Char },
                text: src[start..i].to_string(),
                line: start_line,
                start,
                end: i,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = scan_number(bytes, i);
            toks.push(Token {
                kind: TokKind::Number,
                text: src[start..i].to_string(),
                line: start_line,
                start,
                end: i,
            });
            continue;
        }
        if c == b'_' || c == b'$' || c.is_ascii_alphabetic() || c >= 0x80 {
            while i < bytes.len() {
                let b = bytes[i];
                if b == b'_' || b == b'$' || b.is_ascii_alphanumeric() || b >= 0x80 {
                    i += 1;
                } else {
                    break;
                }
            }
            toks.push(Token {
                kind: TokKind::Ident,
                text: src[start..i].to_string(),
                line: start_line,
                start,
                end: i,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                toks.push(Token {
                    kind: TokKind::Punct,
                    text: (*p).to_string(),
                    line: start_line,
                    start,
                    end: i,
                });
            }
            None => {
                return Err(LexError {
                    line,
                    message: format!("unexpected character {:?}", src[i..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(toks)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X' | b'b' | b'B')) {
        i += 2;
        while i < bytes.len() && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'_') {
            i += 1;
        }
    } else {
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
        } else if i < bytes.len()
            && bytes[i] == b'.'
            && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphabetic() || *b == b'.')
        {
            i += 1;
        }
        if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
            let mut j = i + 1;
            if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                i = j;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
    }
    if i < bytes.len() && matches!(bytes[i], b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
        i += 1;
    }
    i
}
