//! Update/query command streams.
//!
//! One command per line: `U <id> <value>` (hard evidence), `S <id> <l0> …`
//! (soft likelihood) or `Q <id>`. `#` starts a comment; blank lines are
//! skipped.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Hard { target: String, value: usize },
    Soft { target: String, likelihood: Vec<f64> },
    Query { target: String },
}

impl Command {
    pub fn target(&self) -> &str {
        match self {
            Command::Hard { target, .. } | Command::Soft { target, .. } | Command::Query { target } => target,
        }
    }
}

/// A command with its 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    pub line: usize,
    pub command: Command,
}

pub fn parse_stream(text: &str) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("line {line}: {msg}: `{}`", raw.trim()));
        let mut words = body.split_whitespace();
        let kind = words.next().expect("nonempty");
        let target = words.next().ok_or_else(|| err("missing node id"))?.to_string();
        let rest: Vec<&str> = words.collect();
        let command = match kind {
            "U" => match rest.as_slice() {
                [v] => Command::Hard {
                    target,
                    value: v.parse().map_err(|_| err("bad value index"))?,
                },
                _ => return Err(err("expected `U <id> <value>`")),
            },
            "S" => {
                if rest.is_empty() {
                    return Err(err("expected likelihood values"));
                }
                let likelihood = rest
                    .iter()
                    .map(|w| w.parse::<f64>().map_err(|_| err("bad likelihood")))
                    .collect::<Result<_>>()?;
                Command::Soft { target, likelihood }
            }
            "Q" if rest.is_empty() => Command::Query { target },
            "Q" => return Err(err("expected `Q <id>`")),
            _ => return Err(err("unknown command")),
        };
        ops.push(Op { line, command });
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let ops = parse_stream("# header\nU e 0\n\nS f 0.3 0.7  # soft\nQ u\n").unwrap();
        assert_eq!(ops.len(), 3);
        assert_eq!(ops[0], Op { line: 2, command: Command::Hard { target: "e".into(), value: 0 } });
        assert_eq!(ops[1].command, Command::Soft { target: "f".into(), likelihood: vec![0.3, 0.7] });
        assert_eq!(ops[2].command.target(), "u");
        for bad in ["X a", "U a", "U a b", "Q", "Q a b", "S a", "S a x"] {
            assert!(matches!(parse_stream(bad), Err(Error::Parse(_))), "{bad}");
        }
    }
}
