//! Shared text grammar for coefficient and initial-data specs.
//!
//! ```text
//! spec  := item (';' item)* [';']
//! item  := name '=' number | name '(' [arg (',' arg)*] ')'
//! arg   := name '=' value
//! value := number | '(' number ',' number ')' | '"' text '"'
//! ```
//!
//! Whitespace is insignificant outside quoted strings.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Value {
    Number(f64),
    Pair([f64; 2]),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Item {
    Assign { name: String, value: f64 },
    Call { name: String, args: Vec<(String, Value)> },
}

fn split_top_level(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let (mut depth, mut quoted, mut start) = (0i32, false, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '(' if !quoted => depth += 1,
            ')' if !quoted => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced `)` in `{s}`")));
                }
            }
            c if c == sep && !quoted && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if quoted || depth != 0 {
        return Err(Error::Parse(format!("unterminated string or parenthesis in `{s}`")));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("expected a number, got `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite number `{}`", s.trim())));
    }
    Ok(v)
}

fn parse_value(s: &str) -> Result<Value> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('"') {
        let text = inner.strip_suffix('"').ok_or_else(|| Error::Parse(format!("unterminated string {s}")))?;
        return Ok(Value::Text(text.to_string()));
    }
    if let Some(inner) = s.strip_prefix('(') {
        let inner = inner.strip_suffix(')').ok_or_else(|| Error::Parse(format!("unterminated tuple {s}")))?;
        let parts = split_top_level(inner, ',')?;
        return match parts.as_slice() {
            [a, b] => Ok(Value::Pair([parse_number(a)?, parse_number(b)?])),
            [a] => Ok(Value::Number(parse_number(a)?)),
            _ => Err(Error::Parse(format!("tuples hold at most two numbers, got `{s}`"))),
        };
    }
    Ok(Value::Number(parse_number(s)?))
}

fn check_name(name: &str) -> Result<&str> {
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Parse(format!("bad identifier `{name}`")));
    }
    Ok(name)
}

pub(crate) fn parse_items(text: &str) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for raw in split_top_level(text, ';')? {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let paren = raw.find('(');
        let eq = raw.find('=');
        let is_call = match (paren, eq) {
            (Some(p), Some(e)) => p < e,
            (Some(_), None) => true,
            _ => false,
        };
        if is_call {
            let p = paren.unwrap_or_default();
            let name = check_name(&raw[..p])?.to_string();
            let body = raw[p + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("`{raw}` must end with `)`")))?;
            let mut args = Vec::new();
            for arg in split_top_level(body, ',')? {
                if arg.trim().is_empty() {
                    continue;
                }
                let (k, v) = arg
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("argument `{}` must be key=value", arg.trim())))?;
                let key = check_name(k)?.to_string();
                if args.iter().any(|(existing, _)| *existing == key) {
                    return Err(Error::Parse(format!("duplicate argument `{key}` in `{name}`")));
                }
                args.push((key, parse_value(v)?));
            }
            items.push(Item::Call { name, args });
        } else {
            let (k, v) = raw
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `name=value` or `name(...)`, got `{raw}`")))?;
            items.push(Item::Assign { name: check_name(k)?.to_string(), value: parse_number(v)? });
        }
    }
    Ok(items)
}

/// Typed access to the arguments of one call item.
pub(crate) struct Args<'a> {
    call: &'a str,
    args: &'a [(String, Value)],
    used: Vec<bool>,
}

impl<'a> Args<'a> {
    pub(crate) fn new(call: &'a str, args: &'a [(String, Value)]) -> Self {
        Self { call, args, used: vec![false; args.len()] }
    }

    fn take(&mut self, key: &str) -> Option<&'a Value> {
        let i = self.args.iter().position(|(k, _)| k == key)?;
        self.used[i] = true;
        Some(&self.args[i].1)
    }

    pub(crate) fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(Value::Number(v)) => Ok(*v),
            Some(_) => Err(Error::Parse(format!("`{key}` in `{}` must be a number", self.call))),
            None => default.ok_or_else(|| Error::Parse(format!("`{}` requires `{key}`", self.call))),
        }
    }

    pub(crate) fn point(&mut self, key: &str, default: Option<[f64; 2]>) -> Result<[f64; 2]> {
        match self.take(key) {
            Some(Value::Number(v)) => Ok([*v, 0.0]),
            Some(Value::Pair(p)) => Ok(*p),
            Some(_) => Err(Error::Parse(format!("`{key}` in `{}` must be a number or pair", self.call))),
            None => default.ok_or_else(|| Error::Parse(format!("`{}` requires `{key}`", self.call))),
        }
    }

    pub(crate) fn text(&mut self, key: &str) -> Result<String> {
        match self.take(key) {
            Some(Value::Text(t)) => Ok(t.clone()),
            Some(_) => Err(Error::Parse(format!("`{key}` in `{}` must be a quoted string", self.call))),
            None => Err(Error::Parse(format!("`{}` requires `{key}`", self.call))),
        }
    }

    pub(crate) fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(Error::Parse(format!("unknown argument `{}` in `{}`", self.args[i].0, self.call))),
            None => Ok(()),
        }
    }
}

pub(crate) fn fmt_point(p: [f64; 2]) -> String {
    if p[1] == 0.0 {
        format!("{}", p[0])
    } else {
        format!("({}, {})", p[0], p[1])
    }
}

pub(crate) fn fmt_call(name: &str, args: &[(&str, String)]) -> String {
    let mut s = format!("{name}(");
    for (i, (k, v)) in args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{k}={v}");
    }
    s.push(')');
    s
}
