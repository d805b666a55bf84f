//! JSON problem files: expression strings for `f`, `g = 0`, and `h >= 0`.

use serde::{Deserialize, Serialize};
use vpa_core::extreal::Ext;
use vpa_core::{Polynomial, Problem, ReferencePoint};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub objectives: Vec<String>,
    #[serde(default)]
    pub equalities: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ybar: Option<Vec<Ext>>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem file: {}", e)))
    }

    /// Parses every expression, reporting the first failure with a caret
    /// under the offending character.
    pub fn to_problem(&self) -> Result<Problem, CliError> {
        let parse_group = |name: &str, exprs: &[String]| -> Result<Vec<Polynomial>, CliError> {
            exprs
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    Polynomial::parse(s, self.n).map_err(|e| {
                        CliError::Input(format!(
                            "{}[{}]: {}\n  {}\n  {}^",
                            name,
                            i,
                            e,
                            s,
                            " ".repeat(e.position)
                        ))
                    })
                })
                .collect()
        };
        let objectives = parse_group("objectives", &self.objectives)?;
        let equalities = parse_group("equalities", &self.equalities)?;
        let inequalities = parse_group("inequalities", &self.inequalities)?;
        Problem::new(self.n, objectives, equalities, inequalities).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn reference_point(&self) -> Option<Vec<f64>> {
        self.ybar.as_ref().map(|v| v.iter().map(|e| e.0).collect())
    }
}

/// Comma-separated finite coordinates, as given to `--at`.
pub fn parse_point(text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let x: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("--at: `{}` is not a finite number", t.trim())))
        })
        .collect::<Result<_, _>>()?;
    if x.len() != n {
        return Err(CliError::Input(format!("--at: expected {} coordinates, got {}", n, x.len())));
    }
    Ok(x)
}

/// Comma-separated reference values; `+inf` is allowed.
pub fn parse_ybar(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            vpa_core::extreal::parse_token(t)
                .filter(|v| *v != f64::NEG_INFINITY)
                .ok_or_else(|| CliError::Input(format!("--ybar: `{}` is neither a number nor +inf", t.trim())))
        })
        .collect()
}

/// `--ybar` wins over the file; all `+inf` when neither is given.
pub fn resolve_ybar(file: &ProblemFile, flag: Option<&str>, p: usize) -> Result<ReferencePoint, CliError> {
    let values = match flag {
        Some(s) => Some(parse_ybar(s)?),
        None => file.reference_point(),
    };
    match values {
        None => Ok(ReferencePoint::unbounded(p)),
        Some(v) if v.len() != p => Err(CliError::Input(format!(
            "ybar has {} entries but the problem has {} objectives",
            v.len(),
            p
        ))),
        Some(v) => ReferencePoint::new(v).map_err(|e| CliError::Input(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_file_with_infinite_ybar() {
        let f = ProblemFile::from_json(r#"{"n": 1, "objectives": ["x1^2", "x1"], "ybar": ["+inf", 3]}"#).unwrap();
        let prob = f.to_problem().unwrap();
        assert_eq!(prob.p(), 2);
        let y = resolve_ybar(&f, None, 2).unwrap();
        assert_eq!(y.values(), &[f64::INFINITY, 3.0]);
        let y = resolve_ybar(&f, Some("1,+inf"), 2).unwrap();
        assert_eq!(y.values(), &[1.0, f64::INFINITY]);
    }

    #[test]
    fn expression_error_points_at_character() {
        let f = ProblemFile::from_json(r#"{"n": 2, "objectives": ["x1 + * x2"]}"#).unwrap();
        let CliError::Input(msg) = f.to_problem().unwrap_err() else {
            panic!("expected an input error")
        };
        assert!(msg.starts_with("objectives[0]: "), "{}", msg);
        assert!(msg.contains("position"), "{}", msg);
        assert!(msg.ends_with("^"));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_points() {
        assert!(ProblemFile::from_json(r#"{"n": 1, "objectives": ["x1"], "extra": 1}"#).is_err());
        assert!(parse_point("1,2", 3).is_err());
        assert!(parse_point("1,nan", 2).is_err());
        assert_eq!(parse_point(" 1, -2.5e1", 2).unwrap(), vec![1.0, -25.0]);
        assert!(parse_ybar("-inf").is_err());
    }
}
