//! Line-oriented run configuration.
//!
//! ```text
//! # availability example
//! N = 3
//! v = 1.0
//! c = 0.05
//! theta = 0, 0, 0.9, 0.1
//! lambda = 0.3
//! delta:
//! 1, 0, 0
//! 0, 0.8, 0.2
//! 0, 0, 1
//! ```
//!
//! Several `key=value` pairs may share a line when separated by
//! whitespace. Rows of a `delta:` block hold one technology each.

use crate::error::{CliError, CliResult};
use availsearch_core::extensions::hetero::HeterogeneityConfig;
use availsearch_core::extensions::noisy::{validate_tech, NoisyTech, TechViolation};
use availsearch_core::pricing::MarketConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub market: MarketConfig,
    pub costless_share: Option<f64>,
    pub tech: Option<NoisyTech>,
}

impl RunConfig {
    pub fn heterogeneity(&self) -> CliResult<HeterogeneityConfig> {
        let lambda = self
            .costless_share
            .ok_or_else(|| CliError::Validation("lambda-missing".into()))?;
        Ok(HeterogeneityConfig::new(self.market.clone(), lambda)?)
    }

    pub fn noisy_tech(&self) -> CliResult<&NoisyTech> {
        self.tech
            .as_ref()
            .ok_or_else(|| CliError::Validation("delta-missing".into()))
    }
}

#[derive(Debug)]
struct Token {
    key: String,
    value: String,
    column: usize,
    value_column: usize,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits a line into `key=value` tokens, tolerating blanks around `=`
/// and `,`. Columns are 1-based positions in the original line.
fn tokenize(line: &str, line_no: usize) -> CliResult<Vec<Token>> {
    let chars: Vec<char> = line.chars().collect();
    let mut compact = Vec::new();
    for (i, &ch) in chars.iter().enumerate() {
        if ch.is_whitespace() {
            let prev = chars[..i].iter().rev().find(|c| !c.is_whitespace());
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(prev, Some('=') | Some(',')) || matches!(next, Some('=') | Some(',')) {
                continue;
            }
        }
        compact.push((ch, i + 1));
    }
    let mut tokens = Vec::new();
    for word in compact
        .split(|(c, _)| c.is_whitespace())
        .filter(|w| !w.is_empty())
    {
        let column = word[0].1;
        let Some(eq) = word.iter().position(|(c, _)| *c == '=') else {
            return Err(parse_error(line_no, column, "expected key=value"));
        };
        let key: String = word[..eq].iter().map(|(c, _)| c).collect();
        if key.is_empty() {
            return Err(parse_error(line_no, column, "missing key before '='"));
        }
        let value: String = word[eq + 1..].iter().map(|(c, _)| c).collect();
        let value_column = word.get(eq + 1).map_or(word[eq].1 + 1, |(_, col)| *col);
        if value.is_empty() {
            return Err(parse_error(
                line_no,
                value_column,
                format!("missing value for {key}"),
            ));
        }
        tokens.push(Token {
            key,
            value,
            column,
            value_column,
        });
    }
    Ok(tokens)
}

fn number(text: &str, line: usize, column: usize) -> CliResult<f64> {
    let x: f64 = text
        .parse()
        .map_err(|_| parse_error(line, column, format!("not a number: {text:?}")))?;
    if !x.is_finite() {
        return Err(parse_error(line, column, format!("not finite: {text:?}")));
    }
    Ok(x)
}

fn number_list(text: &str, line: usize, column: usize) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    let mut col = column;
    for part in text.split(',') {
        out.push(number(part.trim(), line, col)?);
        col += part.chars().count() + 1;
    }
    Ok(out)
}

fn is_matrix_row(line: &str) -> bool {
    !line.is_empty()
        && line.chars().all(|c| {
            c.is_ascii_digit()
                || matches!(c, '.' | ',' | '-' | '+' | 'e' | 'E')
                || c.is_whitespace()
        })
}

fn matrix_row(line: &str, line_no: usize) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line
        .char_indices()
        .chain(std::iter::once((line.len(), ' ')))
    {
        let sep = ch == ',' || ch.is_whitespace();
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(number(&line[s..i], line_no, line[..s].chars().count() + 1)?);
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}

fn violation_name(v: &TechViolation) -> &'static str {
    match v {
        TechViolation::Shape { .. } => "delta-shape",
        TechViolation::Negative { .. } => "delta-negative",
        TechViolation::RowSum { .. } => "delta-row-sum",
        TechViolation::BelowDiagonal { .. } => "delta-support",
        TechViolation::Dominance { .. } => "delta-dominance",
        TechViolation::Convexity { .. } => "delta-convexity",
    }
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let mut firms = None;
    let mut valuation = None;
    let mut cost = None;
    let mut theta = None;
    let mut lambda = None;
    let mut delta: Option<Vec<Vec<f64>>> = None;
    let mut in_matrix = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            in_matrix = false;
            continue;
        }
        if in_matrix && is_matrix_row(trimmed) {
            let row = matrix_row(content, line_no)?;
            delta.get_or_insert_with(Vec::new).push(row);
            continue;
        }
        in_matrix = false;
        if trimmed == "delta:" {
            if delta.is_some() {
                return Err(parse_error(line_no, 1, "duplicate delta block"));
            }
            delta = Some(Vec::new());
            in_matrix = true;
            continue;
        }
        for token in tokenize(content, line_no)? {
            let (line, col) = (line_no, token.value_column);
            let slot_taken = match token.key.as_str() {
                "N" => {
                    let n = number(&token.value, line, col)?;
                    if n.fract() != 0.0 || n < 0.0 {
                        return Err(parse_error(line, col, "N must be a non-negative integer"));
                    }
                    firms.replace(n as usize).is_some()
                }
                "v" => valuation
                    .replace(number(&token.value, line, col)?)
                    .is_some(),
                "c" => cost.replace(number(&token.value, line, col)?).is_some(),
                "theta" => theta
                    .replace(number_list(&token.value, line, col)?)
                    .is_some(),
                "lambda" => lambda.replace(number(&token.value, line, col)?).is_some(),
                other => {
                    return Err(parse_error(
                        line,
                        token.column,
                        format!("unknown key {other:?}"),
                    ))
                }
            };
            if slot_taken {
                return Err(parse_error(
                    line,
                    token.column,
                    format!("duplicate key {:?}", token.key),
                ));
            }
        }
    }

    let missing = |key: &str| parse_error(last_line + 1, 1, format!("missing key {key:?}"));
    let market = MarketConfig::new(
        firms.ok_or_else(|| missing("N"))?,
        valuation.ok_or_else(|| missing("v"))?,
        cost.ok_or_else(|| missing("c"))?,
        theta.ok_or_else(|| missing("theta"))?,
    )?;
    if let Some(share) = lambda {
        HeterogeneityConfig::new(market.clone(), share)?;
    }
    let tech = match delta {
        Some(rows) => {
            let tech = NoisyTech::new(rows);
            if let Some(v) = validate_tech(&tech, market.firms()).first() {
                return Err(CliError::Validation(violation_name(v).into()));
            }
            Some(tech)
        }
        None => None,
    };
    Ok(RunConfig {
        market,
        costless_share: lambda,
        tech,
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text for a config; numbers use shortest round-trip form.
pub fn render_config(config: &RunConfig) -> String {
    let m = &config.market;
    let mut out = format!(
        "N = {}\nv = {}\nc = {}\ntheta = {}\n",
        m.firms(),
        m.valuation(),
        m.search_cost(),
        join(m.theta().weights())
    );
    if let Some(lambda) = config.costless_share {
        out.push_str(&format!("lambda = {lambda}\n"));
    }
    if let Some(tech) = &config.tech {
        out.push_str("delta:\n");
        for row in tech.rows() {
            out.push_str(&join(row));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_example() {
        let cfg = parse_config("N=3 v=1.0 c=0.05 theta=0,0,0.9,0.1").unwrap();
        assert_eq!(cfg.market.firms(), 3);
        assert_eq!(cfg.market.search_cost(), 0.05);
        assert_eq!(cfg.market.theta().weights(), &[0.0, 0.0, 0.9, 0.1]);
        assert!(cfg.tech.is_none() && cfg.costless_share.is_none());
    }

    #[test]
    fn spaced_lines_and_comments() {
        let text = "# example\nN = 3   # firms\n v = 1\nc = 0.05\ntheta = 0 , 0, 0.9 ,0.1\n\nlambda = 0.3\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.costless_share, Some(0.3));
        assert!(cfg.heterogeneity().is_ok());
    }

    #[test]
    fn theta_sum_is_validation_error() {
        let err = parse_config("N=3 v=1 c=0.05 theta=0,0,0.89,0.1").unwrap_err();
        assert_eq!(err.to_string(), "validation-error: theta-sum");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn errors_point_at_the_offending_token() {
        match parse_config("N=3\nv=1 c=abc\n").unwrap_err() {
            CliError::Parse { line, column, .. } => assert_eq!((line, column), (2, 7)),
            e => panic!("{e}"),
        }
        match parse_config("N=3\nv=1\nfoo = 2\n").unwrap_err() {
            CliError::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("foo"));
            }
            e => panic!("{e}"),
        }
        match parse_config("N=3 N=4").unwrap_err() {
            CliError::Parse { column, .. } => assert_eq!(column, 5),
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse_config("N=3 v=1 c=0.1").unwrap_err(),
            CliError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("N=3 v").unwrap_err(),
            CliError::Parse { column: 5, .. }
        ));
        assert!(matches!(
            parse_config("N=2.5 v=1 c=0 theta=0,0,1").unwrap_err(),
            CliError::Parse { .. }
        ));
    }

    #[test]
    fn delta_block() {
        let text = "N=3 v=1 c=0.03 theta=0,0,0.9,0.1\ndelta:\n0.8, 0.2, 0\n0 0.8 0.2\n0, 0, 1\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.noisy_tech().unwrap().reveal(2, 3), 0.2);
        let bad = "N=3 v=1 c=0.03 theta=0,0,0.9,0.1\ndelta:\n0.8, 0.2, 0\n0, 0.9, 0\n0, 0, 1\n";
        assert_eq!(
            parse_config(bad).unwrap_err().to_string(),
            "validation-error: delta-row-sum"
        );
        let short = "N=3 v=1 c=0.03 theta=0,0,0.9,0.1\ndelta:\n1, 0, 0\n";
        assert_eq!(
            parse_config(short).unwrap_err().to_string(),
            "validation-error: delta-shape"
        );
    }

    #[test]
    fn lambda_range_checked() {
        let err = parse_config("N=3 v=1 c=0.03 theta=0,0,0.9,0.1 lambda=1").unwrap_err();
        assert_eq!(err.to_string(), "validation-error: lambda");
    }

    #[test]
    fn render_is_canonical() {
        let cfg = parse_config("N=3 v=1.0 c=0.05 theta=0,0,0.9,0.1").unwrap();
        assert_eq!(
            render_config(&cfg),
            "N = 3\nv = 1\nc = 0.05\ntheta = 0, 0, 0.9, 0.1\n"
        );
    }
}
