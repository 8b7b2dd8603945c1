use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{Num, Zero};

use super::{Loc, VerilogError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// `width` is `None` for unsized decimals.
    Number {
        width: Option<u32>,
        value: BigUint,
    },
    Sym(&'static str),
    /// Valid Verilog outside the subset; reported when the parser reaches it
    /// so that earlier constructs are diagnosed first.
    Unsupported(String),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

/// Operators the subset accepts.
const SYMBOLS: &[&str] = &[
    "<<", ">>", "==", "!=", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "#", ".", "?", "~", "&", "|", "^", "+", "-",
    "*", "<",
];

/// Operators that are valid Verilog but outside the subset; longest first.
const UNSUPPORTED_SYMBOLS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "**", "<=", ">=", "&&", "||", "~^", "^~", "->", ">", "!", "/", "%", "@", "$",
    "'",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, VerilogError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let loc_at = |i: usize, line: u32, line_start: usize| Loc::new(line, (i - line_start) as u32 + 1);

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let loc = loc_at(i, line, line_start);
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(end) = src[i + 2..].find("*/") else {
                return Err(VerilogError::Syntax {
                    loc,
                    message: "unterminated block comment".into(),
                });
            };
            for &b in &bytes[i..i + 2 + end + 2] {
                if b == b'\n' {
                    line += 1;
                }
            }
            let stop = i + 2 + end + 2;
            if let Some(nl) = src[i..stop].rfind('\n') {
                line_start = i + nl + 1;
            }
            i = stop;
            continue;
        }
        if c == b'`' {
            let word: String = src[i..].chars().take_while(|c| !c.is_whitespace()).collect();
            return Err(VerilogError::Unsupported { loc, construct: word });
        }
        if c == b'"' {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "string literal".into(),
            });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                loc,
            });
            continue;
        }
        if c == b'\\' {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "escaped identifier".into(),
            });
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
            let digits: String = src[start..i].chars().filter(|&c| c != '_').collect();
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'\'' {
                let width: u32 = digits.parse().map_err(|_| VerilogError::Syntax {
                    loc,
                    message: "literal width too large".into(),
                })?;
                let (value, next) = based_literal(src, j + 1, loc)?;
                i = next;
                if width == 0 {
                    return Err(VerilogError::Syntax {
                        loc,
                        message: "zero-width literal".into(),
                    });
                }
                if value.bits() > u64::from(width) {
                    return Err(VerilogError::Syntax {
                        loc,
                        message: alloc::format!("literal value does not fit in {width} bits"),
                    });
                }
                out.push(Token {
                    tok: Tok::Number {
                        width: Some(width),
                        value,
                    },
                    loc,
                });
            } else {
                let value = BigUint::from_str_radix(&digits, 10).unwrap_or_else(|_| BigUint::zero());
                out.push(Token {
                    tok: Tok::Number { width: None, value },
                    loc,
                });
            }
            continue;
        }
        let rest = &src[i..];
        if let Some(op) = UNSUPPORTED_SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            // `<=`/`>=` and friends must not shadow the supported `<<`/`>>`/`<`
            let supported = SYMBOLS.iter().filter(|s| rest.starts_with(**s)).max_by_key(|s| s.len());
            if supported.is_none_or(|s| s.len() < op.len()) {
                let construct = if *op == "'" { "unsized based literal" } else { op };
                out.push(Token {
                    tok: Tok::Unsupported(construct.to_string()),
                    loc,
                });
                break;
            }
        }
        match SYMBOLS.iter().filter(|s| rest.starts_with(**s)).max_by_key(|s| s.len()) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), loc });
                i += s.len();
            }
            None => {
                return Err(VerilogError::Syntax {
                    loc,
                    message: alloc::format!("unexpected character `{}`", rest.chars().next().unwrap()),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: loc_at(i, line, line_start),
    });
    Ok(out)
}

/// Parses the part after `'`: base letter and digits.
fn based_literal(src: &str, mut i: usize, loc: Loc) -> Result<(BigUint, usize), VerilogError> {
    let bytes = src.as_bytes();
    let Some(&base) = bytes.get(i) else {
        return Err(VerilogError::Syntax {
            loc,
            message: "truncated literal".into(),
        });
    };
    let radix = match base.to_ascii_lowercase() {
        b'b' => 2,
        b'h' => 16,
        b'd' => 10,
        b'o' => 8,
        b's' => {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "signed literal".into(),
            })
        }
        _ => {
            return Err(VerilogError::Syntax {
                loc,
                message: "bad literal base".into(),
            })
        }
    };
    i += 1;
    while i < bytes.len() && bytes[i] == b' ' {
        i += 1;
    }
    let start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'?') {
        i += 1;
    }
    let digits: String = src[start..i].chars().filter(|&c| c != '_').collect();
    if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
        return Err(VerilogError::Unsupported {
            loc,
            construct: "x/z literal".into(),
        });
    }
    let value = BigUint::from_str_radix(&digits, radix).map_err(|_| VerilogError::Syntax {
        loc,
        message: alloc::format!("bad digits `{digits}` for base {radix}"),
    })?;
    if digits.is_empty() {
        return Err(VerilogError::Syntax {
            loc,
            message: "literal has no digits".into(),
        });
    }
    Ok((value, i))
}
