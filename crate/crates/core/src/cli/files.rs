//! File formats: code specifications (TOML), symbol sequences and the run
//! manifest embedded in every output.
//!
//! A code specification:
//!
//! ```toml
//! label = "GF(5) example"
//! field_p = 5
//! A = [[0]]
//! B = [[1, 2]]
//! C = [[4]]
//! D = [[1, 3]]
//!
//! # optional: G(z) as rows of coefficient lists, lowest degree first
//! [generator]
//! P = [[[1], [4, 1]], [[3], [0, 1]]]
//! Q = [[[1], []]]
//! row_permutation = [0, 1, 2]
//! ```
//!
//! `A`, `B` and `C` may be empty for a memoryless code. The generator rows
//! are stacked as `(P; Q)`; row `i` of the `(y; u)` layout is stacked row
//! `row_permutation[i]`.
//!
//! A sequence file holds a header line `p n k T` followed by `T + 1` lines of
//! `n` integers, each symbol written as `y` then `u`. Blank lines and text
//! after `#` are ignored.

use serde::{Deserialize, Serialize};

use crate::conv_system::{ConvCode, PolyGenerator, SymbolSeq};
use crate::gf_linalg::{FPolyMatrix, Field};
use crate::{Error, Result};

/// Contents of a code specification file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub field_p: u32,
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<i64>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<i64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<Vec<i64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<i64>>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_permutation: Option<Vec<usize>>,
}

/// A validated code with the spec it came from.
#[derive(Clone, Debug)]
pub struct LoadedCode {
    pub spec: CodeSpecFile,
    pub code: ConvCode,
    pub generator: Option<PolyGenerator>,
}

/// 1-based line of `pos` in `src`.
fn line_of(src: &str, pos: usize) -> usize {
    src[..pos.min(src.len())].matches('\n').count() + 1
}

/// Line on which `key` is assigned, or 1 when it does not appear.
fn key_line(src: &str, key: &str) -> usize {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || l.trim_end() == format!("[{key}]")
        })
        .map_or(1, |i| i + 1)
}

impl CodeSpecFile {
    pub fn parse(src: &str, source_name: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.span().map_or(1, |s| line_of(src, s.start)),
            message: e.message().trim().to_string(),
        })
    }

    /// Parses and validates, reporting problems against the offending field.
    pub fn load(src: &str, source_name: &str) -> Result<LoadedCode> {
        let spec = Self::parse(src, source_name)?;
        let at = |key: &str, err: Error| Error::Parse {
            source_name: source_name.to_string(),
            line: key_line(src, key),
            message: format!("{key}: {err}"),
        };
        let field = Field::new(spec.field_p).map_err(|e| at("field_p", e))?;
        if spec.d.is_empty() {
            return Err(at("D", Error::Dimension("D needs at least one row".into())));
        }
        let delta = spec.a.len();
        let code = ConvCode::from_rows(field, &spec.a, &spec.b, &spec.c, &spec.d, delta).map_err(
            |e| {
                let key = match &e {
                    Error::NotControllable { .. } => "B",
                    Error::NotObservable { .. } => "C",
                    _ => "A",
                };
                at(key, e)
            },
        )?;
        let generator = match &spec.generator {
            Some(g) => {
                let mut rows = g.p.clone();
                rows.extend(g.q.iter().cloned());
                let gen = FPolyMatrix::from_coeff_rows(field, &rows)
                    .and_then(|m| PolyGenerator::new(m, g.row_permutation.clone()))
                    .map_err(|e| at("generator", e))?;
                if !code.verify_realization(&gen).map_err(|e| at("generator", e))? {
                    return Err(at(
                        "generator",
                        Error::InvalidParams(
                            "P(z) Q(z)^-1 differs from the transfer function of (A, B, C, D)"
                                .into(),
                        ),
                    ));
                }
                Some(gen)
            }
            None => None,
        };
        Ok(LoadedCode {
            spec,
            code,
            generator,
        })
    }

    pub fn read(path: &std::path::Path) -> Result<LoadedCode> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::load(&src, &path.display().to_string())
    }

    /// Spec describing `code` (without a generator).
    pub fn from_code(code: &ConvCode, label: Option<String>) -> Self {
        let rows = |m: &crate::gf_linalg::FMatrix| -> Vec<Vec<i64>> {
            m.to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(i64::from).collect())
                .collect()
        };
        Self {
            label,
            field_p: code.field().order(),
            a: rows(code.a()),
            b: rows(code.b()),
            c: rows(code.c()),
            d: rows(code.d()),
            generator: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }
}

/// Parses a sequence file.
pub fn parse_sequence(src: &str, source_name: &str) -> Result<SymbolSeq> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rows = src.lines().enumerate().filter_map(|(i, l)| {
        let content = l.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    });
    let (hline, header) = rows
        .next()
        .ok_or_else(|| err(1, "missing header `p n k T`".into()))?;
    let nums = |line: usize, text: &str| -> Result<Vec<u64>> {
        text.split_whitespace()
            .map(|w| {
                w.parse::<u64>()
                    .map_err(|_| err(line, format!("`{w}` is not a non-negative integer")))
            })
            .collect()
    };
    let h = nums(hline, header)?;
    let [p, n, k, t_last] = h[..] else {
        return Err(err(hline, format!("header needs 4 integers `p n k T`, found {}", h.len())));
    };
    let field = Field::new(p as u32).map_err(|e| err(hline, e.to_string()))?;
    let (n, k, t_last) = (n as usize, k as usize, t_last as usize);
    if k >= n {
        return Err(err(hline, format!("need k < n, got n = {n}, k = {k}")));
    }
    let mut symbols = Vec::with_capacity(t_last + 1);
    for (line, text) in rows {
        let vals = nums(line, text)?;
        if vals.len() != n {
            return Err(err(line, format!("symbol has {} entries, expected n = {n}", vals.len())));
        }
        if let Some(v) = vals.iter().find(|&&v| v >= p) {
            return Err(err(line, format!("{v} is not an element of GF({p})")));
        }
        symbols.push(vals.into_iter().map(|v| v as u32).collect::<Vec<_>>());
    }
    if symbols.len() != t_last + 1 {
        return Err(err(
            hline,
            format!("header announces T = {t_last} ({} symbols), found {}", t_last + 1, symbols.len()),
        ));
    }
    SymbolSeq::from_symbols(field, n - k, k, &symbols)
}

/// Renders a sequence file; `comments` become leading `#` lines.
pub fn write_sequence(seq: &SymbolSeq, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&format!(
        "{} {} {} {}\n",
        seq.field().order(),
        seq.n(),
        seq.inputs(),
        seq.len().saturating_sub(1)
    ));
    for t in 0..seq.len() {
        let line: Vec<String> = seq.symbol(t).iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses an input file: one line of `k` integers per time step.
pub fn parse_inputs(src: &str, source_name: &str, field: Field, k: usize) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::new();
    for (i, l) in src.lines().enumerate() {
        let content = l.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message,
        };
        let vals: Vec<u32> = content
            .split_whitespace()
            .map(|w| match w.parse::<u32>() {
                Ok(v) if v < field.order() => Ok(v),
                _ => Err(err(format!("`{w}` is not an element of GF({})", field.order()))),
            })
            .collect::<Result<_>>()?;
        if vals.len() != k {
            return Err(err(format!("input has {} entries, expected k = {k}", vals.len())));
        }
        out.push(vals);
    }
    Ok(out)
}

/// Provenance record written into every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub budget: u64,
    pub parameters: serde_json::Value,
}

const MANIFEST_PREFIX: &str = "manifest ";

impl RunManifest {
    pub fn new(command: &str, seed: u64, budget: u64, parameters: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            budget,
            parameters,
        }
    }

    /// Single-line form used in comment preambles.
    pub fn comment_line(&self) -> String {
        format!(
            "{MANIFEST_PREFIX}{}",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }

    /// Finds a manifest in a structured report, a CSV preamble or a
    /// sequence file.
    pub fn extract(src: &str, source_name: &str) -> Result<Self> {
        if let Ok(doc) = serde_json::from_str::<serde_json::Value>(src) {
            if let Some(m) = doc.get("manifest") {
                return serde_json::from_value(m.clone()).map_err(|e| Error::Parse {
                    source_name: source_name.to_string(),
                    line: 1,
                    message: format!("manifest: {e}"),
                });
            }
        }
        for (i, line) in src.lines().enumerate() {
            if let Some(json) = line
                .trim_start()
                .strip_prefix('#')
                .map(str::trim_start)
                .and_then(|l| l.strip_prefix(MANIFEST_PREFIX))
            {
                return serde_json::from_str(json).map_err(|e| Error::Parse {
                    source_name: source_name.to_string(),
                    line: i + 1,
                    message: format!("manifest: {e}"),
                });
            }
        }
        Err(Error::Parse {
            source_name: source_name.to_string(),
            line: 1,
            message: "no run manifest found".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F5: &str = r#"
field_p = 5
A = [[0]]
B = [[1, 2]]
C = [[4]]
D = [[1, 3]]

[generator]
P = [[[1], [4, 1]], [[3], [0, 1]]]
Q = [[[1], []]]
"#;

    #[test]
    fn loads_a_spec_with_generator() {
        let loaded = CodeSpecFile::load(F5, "f5").unwrap();
        assert_eq!((loaded.code.n(), loaded.code.k(), loaded.code.delta()), (3, 2, 1));
        assert!(loaded.generator.is_some());
    }

    #[test]
    fn reports_lines_and_fields() {
        let bad = F5.replace("C = [[4]]", "C = [[0]]");
        match CodeSpecFile::load(&bad, "bad") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.starts_with("C:"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = F5.replace("[[3], [0, 1]]", "[[3], [1, 1]]");
        match CodeSpecFile::load(&bad, "bad") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 8);
                assert!(message.starts_with("generator:"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = F5.replace("B = [[1, 2]]", "B = [[1, x]]");
        assert!(matches!(CodeSpecFile::load(&bad, "bad"), Err(Error::Parse { line: 4, .. })));
        let bad = F5.replace("field_p = 5", "field_p = 6");
        assert!(matches!(CodeSpecFile::load(&bad, "bad"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn memoryless_spec() {
        let loaded = CodeSpecFile::load("field_p = 2\nD = [[1], [1]]\n", "rep").unwrap();
        assert_eq!((loaded.code.n(), loaded.code.delta()), (3, 0));
        let round = CodeSpecFile::load(&loaded.spec.to_toml(), "rt").unwrap();
        assert_eq!(round.spec, loaded.spec);
    }

    #[test]
    fn sequence_round_trip() {
        let f = Field::new(5).unwrap();
        let seq = SymbolSeq::from_symbols(f, 1, 2, &[vec![1, 2, 3], vec![0, 4, 0]]).unwrap();
        let text = write_sequence(&seq, &["hello".into()]);
        assert!(text.starts_with("# hello\n5 3 2 1\n"));
        assert_eq!(parse_sequence(&text, "s").unwrap(), seq);
    }

    #[test]
    fn sequence_errors_carry_lines() {
        let cases = [
            ("5 3 2 1\n1 2 3\n", 1),
            ("5 3 2 0\n1 2\n", 2),
            ("5 3 2 0\n1 2 7\n", 2),
            ("4 3 2 0\n1 2 3\n", 1),
            ("# c\n5 3 2 0\n1 x 3\n", 3),
        ];
        for (src, expected) in cases {
            match parse_sequence(src, "s") {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn manifest_extraction() {
        let m = RunManifest::new("simulate", 7, 100, serde_json::json!({"a": 1}));
        let csv = format!("# {}\ntrial,seed\n", m.comment_line());
        assert_eq!(RunManifest::extract(&csv, "c").unwrap(), m);
        let json = serde_json::json!({"manifest": m, "report": {}}).to_string();
        assert_eq!(RunManifest::extract(&json, "j").unwrap(), m);
        assert!(RunManifest::extract("nothing", "n").is_err());
    }
}
