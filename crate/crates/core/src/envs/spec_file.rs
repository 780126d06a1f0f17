//! Plain-text format for [`TabularMdpSpec`].
//!
//! ```text
//! # comment
//! gamma 0.9
//! absorbing 2            # zero or more state ids
//! start 0                # optional, default 0
//! noise uniform 1.0      # optional default for rows: none | uniform W | gaussian SD
//! 0 0 1:1:0              # s a  next:prob:mean_reward ...
//! 0 1 2:0.5:1 1:0.5:0
//! 1 0 2:1:0.1 noise uniform 1
//! ```
//!
//! Header keywords must precede the rows. Rows may appear in any order but
//! every state `0..S` needs actions `0..A_s` without gaps. An absorbing state
//! with no rows gets a single zero-reward self-loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::tabular::{Outcome, RewardNoise, StateAction, TabularMdpSpec};
use crate::error::{Error, Result};

pub fn load_spec(path: &Path) -> Result<TabularMdpSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, &path.display().to_string())
}

pub fn parse_spec(text: &str, origin: &str) -> Result<TabularMdpSpec> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut gamma = None;
    let mut absorbing = Vec::new();
    let mut start = 0;
    let mut default_noise = RewardNoise::None;
    let mut rows: BTreeMap<(usize, usize), (usize, StateAction)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        let is_row = head.chars().all(|c| c.is_ascii_digit());
        if !is_row && !rows.is_empty() {
            return Err(err(lineno, format!("header `{head}` after transition rows")));
        }
        match head {
            "gamma" => {
                let v = tokens.next().ok_or_else(|| err(lineno, "gamma needs a value".into()))?;
                gamma = Some(parse_num::<f64>(v).map_err(|m| err(lineno, m))?);
            }
            "absorbing" => {
                for t in tokens.by_ref() {
                    absorbing.push(parse_num::<usize>(t).map_err(|m| err(lineno, m))?);
                }
            }
            "start" => {
                let v = tokens.next().ok_or_else(|| err(lineno, "start needs a state id".into()))?;
                start = parse_num::<usize>(v).map_err(|m| err(lineno, m))?;
            }
            "noise" => {
                let rest: Vec<&str> = tokens.by_ref().collect();
                default_noise = parse_noise(&rest).map_err(|m| err(lineno, m))?;
            }
            _ if is_row => {
                let s = parse_num::<usize>(head).map_err(|m| err(lineno, m))?;
                let a = tokens
                    .next()
                    .ok_or_else(|| err(lineno, "row needs an action index".into()))
                    .and_then(|t| parse_num::<usize>(t).map_err(|m| err(lineno, m)))?;
                let mut outcomes = Vec::new();
                let mut noise = default_noise;
                while let Some(t) = tokens.next() {
                    if t == "noise" {
                        let rest: Vec<&str> = tokens.by_ref().collect();
                        noise = parse_noise(&rest).map_err(|m| err(lineno, m))?;
                        break;
                    }
                    outcomes.push(parse_outcome(t).map_err(|m| err(lineno, m))?);
                }
                if outcomes.is_empty() {
                    return Err(err(lineno, format!("({s}, {a}) lists no successors")));
                }
                if rows.insert((s, a), (lineno, StateAction { outcomes, noise })).is_some() {
                    return Err(err(lineno, format!("duplicate row for ({s}, {a})")));
                }
            }
            other => return Err(err(lineno, format!("unknown keyword `{other}`"))),
        }
        if let Some(extra) = tokens.next() {
            return Err(err(lineno, format!("unexpected token `{extra}`")));
        }
    }

    let gamma = gamma.ok_or_else(|| err(0, "missing `gamma` header".into()))?;
    let max_row_state = rows.keys().map(|&(s, _)| s).max();
    let max_ref = rows
        .values()
        .flat_map(|(_, sa)| sa.outcomes.iter().map(|o| o.next_state))
        .chain(absorbing.iter().copied())
        .chain(std::iter::once(start))
        .chain(max_row_state)
        .max()
        .unwrap_or(0);
    let state_count = max_ref + 1;

    let mut table: Vec<Vec<StateAction>> = vec![Vec::new(); state_count];
    for ((s, a), (lineno, sa)) in rows {
        if a != table[s].len() {
            return Err(err(
                lineno,
                format!("state {s} action {a} follows action {} (gap)", table[s].len() as isize - 1),
            ));
        }
        table[s].push(sa);
    }
    for (s, row) in table.iter_mut().enumerate() {
        if row.is_empty() {
            if absorbing.contains(&s) {
                row.push(StateAction {
                    outcomes: vec![Outcome {
                        next_state: s,
                        probability: 1.0,
                        reward: 0.0,
                    }],
                    noise: RewardNoise::None,
                });
            } else {
                return Err(err(0, format!("state {s} has no rows")));
            }
        }
    }
    let spec = TabularMdpSpec {
        rows: table,
        gamma,
        absorbing,
        start,
    };
    spec.validate()?;
    Ok(spec)
}

/// Serialises a spec in the format accepted by [`parse_spec`]; floats use
/// 17 significant digits so the round trip is exact.
pub fn write_spec(spec: &TabularMdpSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gamma {}", fmt17(spec.gamma));
    let ids: Vec<String> = spec.absorbing.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "absorbing {}", ids.join(" "));
    let _ = writeln!(out, "start {}", spec.start);
    for (s, row) in spec.rows.iter().enumerate() {
        for (a, sa) in row.iter().enumerate() {
            let _ = write!(out, "{s} {a}");
            for o in &sa.outcomes {
                let _ = write!(out, " {}:{}:{}", o.next_state, fmt17(o.probability), fmt17(o.reward));
            }
            match sa.noise {
                RewardNoise::None => {}
                RewardNoise::Uniform { half_width } => {
                    let _ = write!(out, " noise uniform {}", fmt17(half_width));
                }
                RewardNoise::Gaussian { std } => {
                    let _ = write!(out, " noise gaussian {}", fmt17(std));
                }
            }
            out.push('\n');
        }
    }
    out
}

fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn parse_num<T: std::str::FromStr>(t: &str) -> std::result::Result<T, String> {
    t.parse::<T>().map_err(|_| format!("cannot parse `{t}`"))
}

fn parse_outcome(t: &str) -> std::result::Result<Outcome, String> {
    let parts: Vec<&str> = t.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected next:prob:reward, got `{t}`"));
    }
    Ok(Outcome {
        next_state: parse_num(parts[0])?,
        probability: parse_num(parts[1])?,
        reward: parse_num(parts[2])?,
    })
}

fn parse_noise(tokens: &[&str]) -> std::result::Result<RewardNoise, String> {
    match tokens {
        ["none"] => Ok(RewardNoise::None),
        ["uniform", w] => Ok(RewardNoise::Uniform {
            half_width: parse_num(w)?,
        }),
        ["gaussian", sd] => Ok(RewardNoise::Gaussian { std: parse_num(sd)? }),
        _ => Err(format!("bad noise descriptor `{}`", tokens.join(" "))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{random_mdp, value_iteration, SimpleMdpConfig};

    const TOY: &str = "\
# the two-state toy problem with mu = 0.1
gamma 1
absorbing 2
start 0
0 0 1:1:0
0 1 2:1:0
1 0 2:1:0.1 noise uniform 1
1 1 2:1:0.1 noise uniform 1
";

    #[test]
    fn parses_toy_and_solves() {
        let spec = parse_spec(TOY, "toy").unwrap();
        assert_eq!(spec.action_counts(), vec![2, 2, 1]);
        assert_eq!(spec.rows[1][0].noise, RewardNoise::Uniform { half_width: 1.0 });
        let vi = value_iteration(&spec, 1e-12).unwrap();
        assert!((vi.q[0][0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_exact() {
        for spec in [random_mdp(5, 3, 3, 0.9, 3).unwrap(), SimpleMdpConfig::with_mu(-0.1).to_tabular()] {
            let text = write_spec(&spec);
            assert_eq!(parse_spec(&text, "rt").unwrap(), spec);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "gamma 0.9\n0 0 1:1:0\n0 2 1:1:0\n1 0 1:1:0\n";
        match parse_spec(bad, "bad.mdp") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(path, "bad.mdp");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_spec("0 0 0:1:0\n", "x").is_err());
        assert!(parse_spec("gamma 0.5\n0 0 0:0.5:0\n", "x").is_err());
        assert!(parse_spec("gamma 0.5\n0 0 0:1:0\ngamma 0.4\n", "x").is_err());
        assert!(parse_spec("gamma 0.5\nbogus 1\n", "x").is_err());
        assert!(parse_spec("gamma 0.5\n0 0 0:1:0 noise cauchy 1\n", "x").is_err());
    }
}
