use tracemap_core::{Ip, Prefix};

use crate::PennyError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Newline,
    Ident(String),
    Number(i64),
    IpLit(Ip),
    PrefixLit(Prefix),
    Str(String),
    // keywords
    While,
    If,
    Else,
    For,
    In,
    Return,
    OnTime,
    StartTime,
    Nowait,
    CurrTime,
    Local,
    Gmt,
    Relative,
    // punctuation / operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PlusPlus,
    MinusMinus,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(text: &str) -> Result<Vec<Spanned>, PennyError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let err = |line: usize, col: usize, msg: String| PennyError::Lex { line, col, msg };

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Spanned {
                tok: $tok,
                line: $line,
                col: $col,
            })
        };
    }

    while i < bytes.len() {
        let (tl, tc) = (line, col);
        let c = bytes[i] as char;
        match c {
            '\n' => {
                push!(Tok::Newline, tl, tc);
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                // comment to end of line
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                    col += 1;
                }
            }
            '(' => {
                push!(Tok::LParen, tl, tc);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Tok::RParen, tl, tc);
                i += 1;
                col += 1;
            }
            '{' => {
                push!(Tok::LBrace, tl, tc);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Tok::RBrace, tl, tc);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Tok::Comma, tl, tc);
                i += 1;
                col += 1;
            }
            ':' => {
                push!(Tok::Colon, tl, tc);
                i += 1;
                col += 1;
            }
            '"' => {
                i += 1;
                col += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() || bytes[i] == b'\n' {
                        return Err(err(tl, tc, "unterminated string".into()));
                    }
                    match bytes[i] as char {
                        '"' => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        '\\' => {
                            if i + 1 >= bytes.len() {
                                return Err(err(tl, tc, "unterminated escape".into()));
                            }
                            let esc = bytes[i + 1] as char;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                '"' => '"',
                                '\\' => '\\',
                                other => {
                                    return Err(err(
                                        line,
                                        col,
                                        format!("unknown escape `\\{other}`"),
                                    ))
                                }
                            });
                            i += 2;
                            col += 2;
                        }
                        ch => {
                            s.push(ch);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                push!(Tok::Str(s), tl, tc);
            }
            '+' => {
                if bytes.get(i + 1) == Some(&b'+') {
                    push!(Tok::PlusPlus, tl, tc);
                    i += 2;
                    col += 2;
                } else if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::PlusAssign, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Plus, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    push!(Tok::MinusMinus, tl, tc);
                    i += 2;
                    col += 2;
                } else if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::MinusAssign, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Minus, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '*' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::StarAssign, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Star, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '/' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::SlashAssign, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Slash, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Le, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Lt, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Ge, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Gt, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::EqEq, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Assign, tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Ne, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    return Err(err(tl, tc, "stray `!`".into()));
                }
            }
            c if c.is_ascii_digit() => {
                // NUMBER, or dotted-quad IP, optionally followed by
                // /len making a prefix literal
                let start = i;
                let mut dots = 0;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.')
                {
                    if bytes[i] == b'.' {
                        // a dot not followed by a digit ends the literal
                        if !bytes
                            .get(i + 1)
                            .map(|b| (*b as char).is_ascii_digit())
                            .unwrap_or(false)
                        {
                            break;
                        }
                        dots += 1;
                    }
                    i += 1;
                    col += 1;
                }
                let lit = &text[start..i];
                if dots == 0 {
                    let n: i64 = lit
                        .parse()
                        .map_err(|_| err(tl, tc, format!("bad number `{lit}`")))?;
                    push!(Tok::Number(n), tl, tc);
                } else if dots == 3 {
                    let ip: Ip = lit
                        .parse()
                        .map_err(|_| err(tl, tc, format!("bad IP literal `{lit}`")))?;
                    // immediately-following /NN makes this a prefix literal
                    if bytes.get(i) == Some(&b'/')
                        && bytes
                            .get(i + 1)
                            .map(|b| (*b as char).is_ascii_digit())
                            .unwrap_or(false)
                    {
                        let len_start = i + 1;
                        let mut j = len_start;
                        while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            j += 1;
                        }
                        let len: u8 = text[len_start..j]
                            .parse()
                            .map_err(|_| err(tl, tc, "bad prefix length".into()))?;
                        if len > 32 {
                            return Err(err(tl, tc, "prefix length out of range".into()));
                        }
                        // script prefix literals mask unaligned bases down
                        let prefix = Prefix::containing(ip, len);
                        col += j - i;
                        i = j;
                        push!(Tok::PrefixLit(prefix), tl, tc);
                    } else {
                        push!(Tok::IpLit(ip), tl, tc);
                    }
                } else {
                    return Err(err(tl, tc, format!("malformed literal `{lit}`")));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                    col += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "while" => Tok::While,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "for" => Tok::For,
                    "in" => Tok::In,
                    "return" => Tok::Return,
                    "onTime" => Tok::OnTime,
                    "startTime" => Tok::StartTime,
                    "nowait" => Tok::Nowait,
                    "currTime" => Tok::CurrTime,
                    "local" => Tok::Local,
                    "gmt" => Tok::Gmt,
                    "relative" => Tok::Relative,
                    _ => Tok::Ident(word.to_string()),
                };
                push!(tok, tl, tc);
            }
            other => {
                return Err(err(tl, tc, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}
