//! A small C-like lexer producing bag-of-token input.
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`, numbers are `[0-9][A-Za-z0-9_.]*`
//! (greedy, never validated), string and char literals collapse to `<STR>`
//! and `<CHR>`, and comments and whitespace are dropped. Punctuation is
//! split by maximal munch over the two-character operators in
//! [`MULTI_CHAR_OPS`]; anything else becomes a single-character token.

pub const STRING_TOKEN: &str = "<STR>";
pub const CHAR_TOKEN: &str = "<CHR>";

pub const MULTI_CHAR_OPS: [&str; 16] = [
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "->", "<<", ">>", "+=", "-=", "*=", "/=", "::",
];

/// Tokens plus a flag set when a string, char literal or block comment ran
/// to end of input unterminated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexed {
    pub tokens: Vec<String>,
    pub unterminated: bool,
}

pub fn tokenize(source: &str) -> Vec<String> {
    tokenize_with_diagnostics(source).tokens
}

pub fn tokenize_with_diagnostics(source: &str) -> Lexed {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Lexed::default();
    let mut i = 0;
    let n = chars.len();

    while i < n {
        let c = chars[i];
        let next = chars.get(i + 1).copied();

        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && next == Some('/') {
            while i < n && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && next == Some('*') {
            i += 2;
            loop {
                if i + 1 >= n {
                    out.unterminated = true;
                    i = n;
                    break;
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < n && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.tokens.push(chars[start..i].iter().collect());
        } else if c.is_ascii_digit() {
            let start = i;
            while i < n && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            out.tokens.push(chars[start..i].iter().collect());
        } else if c == '"' || c == '\'' {
            let (end, closed) = skip_literal(&chars, i + 1, c);
            if !closed {
                out.unterminated = true;
            }
            i = end;
            out.tokens.push(if c == '"' { STRING_TOKEN } else { CHAR_TOKEN }.to_string());
        } else if let Some(op) = next.and_then(|d| two_char_op(c, d)) {
            out.tokens.push(op.to_string());
            i += 2;
        } else {
            out.tokens.push(c.to_string());
            i += 1;
        }
    }
    out
}

/// Returns the index just past the closing quote and whether it was found.
fn skip_literal(chars: &[char], mut i: usize, quote: char) -> (usize, bool) {
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            c if c == quote => return (i + 1, true),
            _ => i += 1,
        }
    }
    (chars.len(), false)
}

fn two_char_op(a: char, b: char) -> Option<&'static str> {
    MULTI_CHAR_OPS.iter().copied().find(|op| {
        let mut it = op.chars();
        it.next() == Some(a) && it.next() == Some(b)
    })
}
