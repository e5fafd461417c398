//! File formats: plain text for sequences and draws, JSON for structured
//! artifacts, CSV for plot feeds. Exact rationals are always serialized
//! as `"p/q"` strings in verification-bearing files; every format
//! round-trips without precision loss.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridMode, GridParameters, IndexPartition, SweepoutReport};
use crate::random::{DensityRow, RandomDraw, ThinningResult};
use crate::sequences::IntegerSequence;
use crate::torus::{RotationVector, UnitRational};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Renders a rational as `"p/q"` (lowest terms, denominator always
/// present: `"3/1"`, not `"3"`).
pub fn rational_to_string(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p/q"` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: Integer = num.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: Integer = den.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if den == 0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::from((num, den)))
}

// ---------------------------------------------------------------- sequences

/// Writes a sequence file: header `# start_index=<n0>`, then one decimal
/// integer per line.
pub fn write_sequence(path: &Path, seq: &IntegerSequence) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&format!("# start_index={}\n", seq.start_index()));
    for term in seq.terms() {
        out.push_str(&term.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_sequence(path: &Path) -> Result<IntegerSequence, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty sequence file"))?;
    let start_index: u64 = header
        .strip_prefix("# start_index=")
        .ok_or_else(|| parse_err(path, "missing '# start_index=' header"))?
        .trim()
        .parse()
        .map_err(|e| parse_err(path, format!("bad start_index: {e}")))?;
    let terms: Vec<Integer> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<Integer>()
                .map_err(|e| parse_err(path, format!("bad term {l:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    IntegerSequence::new(start_index, terms)
        .map_err(|e| parse_err(path, format!("invalid sequence: {e}")))
}

// --------------------------------------------------------------- draw files

/// Writes a draw file: `# seed=<s> eta=<p/q> n_start=<n> t_max=<t>`, then
/// one selected index per line. `eta` echoes the profile used (or `1/1`
/// for non-Theorem-3 profiles).
pub fn write_draw(path: &Path, draw: &RandomDraw, eta: &Rational) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&format!(
        "# seed={} eta={} n_start={} t_max={}\n",
        draw.seed,
        rational_to_string(eta),
        draw.n_start,
        draw.t_max
    ));
    for n in &draw.selected {
        out.push_str(&n.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_draw(path: &Path) -> Result<(RandomDraw, Rational), IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty draw file"))?
        .strip_prefix("# ")
        .ok_or_else(|| parse_err(path, "missing draw header"))?
        .to_string();
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for part in header.split_whitespace() {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_err(path, format!("bad header field {part:?}")))?;
        fields.insert(k, v);
    }
    let get = |key: &str| -> Result<&str, IoError> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| parse_err(path, format!("missing header field {key}")))
    };
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|e| parse_err(path, format!("bad seed: {e}")))?;
    let eta = parse_rational(get("eta")?).map_err(|m| parse_err(path, m))?;
    let n_start: u64 = get("n_start")?
        .parse()
        .map_err(|e| parse_err(path, format!("bad n_start: {e}")))?;
    let t_max: u64 = get("t_max")?
        .parse()
        .map_err(|e| parse_err(path, format!("bad t_max: {e}")))?;
    let selected: Vec<u64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<u64>()
                .map_err(|e| parse_err(path, format!("bad index {l:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    Ok((
        RandomDraw {
            seed,
            n_start,
            t_max,
            selected,
        },
        eta,
    ))
}

// ----------------------------------------------------------- thinning files

/// Writes a thinning file: a `# head_len=` header and the four sections
/// `[B]`, `[D]`, `[E]`, `[truncated]`, one index per line each.
pub fn write_thinning(path: &Path, result: &ThinningResult) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&format!("# head_len={}\n", result.head_len));
    for (name, list) in [
        ("B", &result.b),
        ("D", &result.d),
        ("E", &result.e),
        ("truncated", &result.truncated),
    ] {
        out.push_str(&format!("[{name}]\n"));
        for n in list {
            out.push_str(&n.to_string());
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_thinning(path: &Path) -> Result<ThinningResult, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut head_len = None;
    let mut sections: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("# head_len=") {
            head_len = Some(
                v.parse::<usize>()
                    .map_err(|e| parse_err(path, format!("bad head_len: {e}")))?,
            );
        } else if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = Some(name.to_string());
            sections.entry(name.to_string()).or_default();
        } else {
            let section = current
                .as_ref()
                .ok_or_else(|| parse_err(path, "index before any section header"))?;
            let n: u64 = line
                .parse()
                .map_err(|e| parse_err(path, format!("bad index {line:?}: {e}")))?;
            sections.get_mut(section).unwrap().push(n);
        }
    }
    let mut take = |name: &str| -> Result<Vec<u64>, IoError> {
        sections
            .remove(name)
            .ok_or_else(|| parse_err(path, format!("missing section [{name}]")))
    };
    Ok(ThinningResult {
        b: take("B")?,
        d: take("D")?,
        e: take("E")?,
        head_len: head_len.ok_or_else(|| parse_err(path, "missing '# head_len=' header"))?,
        truncated: take("truncated")?,
    })
}

// ------------------------------------------------------------ grid artifact

/// On-disk form of a planned and solved grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridArtifact {
    /// All rationals as "p/q" strings.
    pub eta: String,
    pub epsilon: String,
    pub c: String,
    pub q: u64,
    pub k: u64,
    pub mode: String,
    pub block_length: u64,
    pub n1: u64,
    pub n_total: u64,
    /// Blocks as closed `[lo, hi]` index pairs.
    pub blocks: Vec<(u64, u64)>,
    /// Rotation coordinates as "p/q" strings.
    pub rotation: Vec<String>,
    /// Path of the sequence file the grid was built from.
    pub sequence_file: String,
    /// Cube enumeration convention; always "mixed-radix-le"
    /// (coordinate 1 is the fastest-varying digit).
    pub enumeration: String,
}

impl GridArtifact {
    pub fn from_parts(
        params: &GridParameters,
        partition: &IndexPartition,
        rotation: &RotationVector,
        sequence_file: &str,
    ) -> Self {
        GridArtifact {
            eta: rational_to_string(&params.eta),
            epsilon: rational_to_string(&params.epsilon),
            c: rational_to_string(&params.c),
            q: params.q,
            k: params.k,
            mode: match params.mode {
                GridMode::Full => "full".to_string(),
                GridMode::Demo => "demo".to_string(),
            },
            block_length: params.block_length,
            n1: params.n1,
            n_total: partition.n_total,
            blocks: partition.blocks.clone(),
            rotation: rotation
                .coords()
                .iter()
                .map(|r| rational_to_string(r.value()))
                .collect(),
            sequence_file: sequence_file.to_string(),
            enumeration: "mixed-radix-le".to_string(),
        }
    }

    pub fn parameters(&self) -> Result<GridParameters, String> {
        Ok(GridParameters {
            eta: parse_rational(&self.eta)?,
            epsilon: parse_rational(&self.epsilon)?,
            c: parse_rational(&self.c)?,
            q: self.q,
            k: self.k,
            mode: match self.mode.as_str() {
                "full" => GridMode::Full,
                "demo" => GridMode::Demo,
                other => return Err(format!("unknown mode {other:?}")),
            },
            block_length: self.block_length,
            n1: self.n1,
        })
    }

    pub fn partition(&self) -> IndexPartition {
        IndexPartition {
            n_total: self.n_total,
            k: self.k,
            blocks: self.blocks.clone(),
        }
    }

    pub fn rotation_vector(&self) -> Result<RotationVector, String> {
        let coords = self
            .rotation
            .iter()
            .map(|s| parse_rational(s).map(UnitRational::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RotationVector::new(coords))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

// -------------------------------------------------------------------- CSVs

/// Per-cube CSV: one row per cube with the extremes of the sampled block
/// averages (for plotting).
pub fn write_cube_csv(path: &Path, report: &SweepoutReport) -> Result<(), IoError> {
    let mut out = String::from("cube_index,q_vector,pass,min_sampled_average,max_sampled_average\n");
    for cube in &report.cube_reports {
        let averages: Vec<Rational> = cube
            .sampled_averages
            .iter()
            .map(|s| parse_rational(s).expect("report rationals well-formed"))
            .collect();
        let (min, max) = match (averages.iter().min(), averages.iter().max()) {
            (Some(min), Some(max)) => (rational_to_string(min), rational_to_string(max)),
            _ => ("".to_string(), "".to_string()),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cube.cube_index,
            cube.q_vector
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            cube.pass,
            min,
            max
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Density CSV: columns `t, A_t, B_t, ratio_num, ratio_den`.
pub fn write_density_csv(path: &Path, rows: &[DensityRow]) -> Result<(), IoError> {
    let mut out = String::from("t,A_t,B_t,ratio_num,ratio_den\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.t, row.a_count, row.b_count, row.ratio_num, row.ratio_den
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_density_csv(path: &Path) -> Result<Vec<DensityRow>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty density csv"))?;
    if header != "t,A_t,B_t,ratio_num,ratio_den" {
        return Err(parse_err(path, "unexpected density csv header"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != 5 {
                return Err(parse_err(path, format!("bad row {l:?}")));
            }
            let parse = |s: &str| -> Result<u64, IoError> {
                s.trim()
                    .parse()
                    .map_err(|e| parse_err(path, format!("bad cell {s:?}: {e}")))
            };
            Ok(DensityRow {
                t: parse(cells[0])?,
                a_count: parse(cells[1])?,
                b_count: parse(cells[2])?,
                ratio_num: parse(cells[3])?,
                ratio_den: parse(cells[4])?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- manifest

/// Run manifest emitted alongside every CLI output. The timestamp and
/// duration are the only non-reproducible fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub duration_ms: u128,
    pub timestamp_unix_ms: u128,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_ms: 0,
            timestamp_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_json(path, self)
    }
}

/// Writes `text` to `path` atomically enough for our purposes (single
/// writer), creating parent directories.
pub fn ensure_parent_and_write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn rational_round_trip() {
        for s in ["3/4", "0/1", "22/7", "123456789123456789/1000000007"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(rational_to_string(&q), s);
        }
        assert_eq!(parse_rational("5").unwrap(), Rational::from(5));
        // canonicalization
        assert_eq!(rational_to_string(&parse_rational("2/4").unwrap()), "1/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn sequence_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let seq =
            IntegerSequence::new(3, [20u32, 54, 148, 403, 1096].map(Integer::from).to_vec())
                .unwrap();
        write_sequence(&path, &seq).unwrap();
        let back = read_sequence(&path).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn sequence_rejects_missing_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        fs::write(&path, "1\n2\n3\n").unwrap();
        assert!(matches!(read_sequence(&path), Err(IoError::Parse { .. })));
    }

    #[test]
    fn draw_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("draw.txt");
        let draw = RandomDraw {
            seed: 42,
            n_start: 16,
            t_max: 1000,
            selected: vec![17, 300, 999],
        };
        let eta = Rational::from((1, 2));
        write_draw(&path, &draw, &eta).unwrap();
        let (back, back_eta) = read_draw(&path).unwrap();
        assert_eq!(back, draw);
        assert_eq!(back_eta, eta);
    }

    #[test]
    fn thinning_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("thin.txt");
        let result = ThinningResult {
            b: vec![3, 5, 100, 900],
            d: vec![200, 300],
            e: vec![400, 401],
            head_len: 2,
            truncated: vec![990, 995],
        };
        write_thinning(&path, &result).unwrap();
        assert_eq!(read_thinning(&path).unwrap(), result);
    }

    #[test]
    fn density_csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("density.csv");
        let rows = vec![
            DensityRow {
                t: 100,
                a_count: 10,
                b_count: 7,
                ratio_num: 7,
                ratio_den: 10,
            },
            DensityRow {
                t: 1000,
                a_count: 50,
                b_count: 31,
                ratio_num: 31,
                ratio_den: 50,
            },
        ];
        write_density_csv(&path, &rows).unwrap();
        assert_eq!(read_density_csv(&path).unwrap(), rows);
    }

    #[test]
    fn manifest_serializes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let manifest = RunManifest::new("gen-seq")
            .param("kind", "paper")
            .param("eta", "1/1");
        manifest.write(&path).unwrap();
        let back: RunManifest = read_json(&path).unwrap();
        assert_eq!(back.subcommand, "gen-seq");
        assert_eq!(back.parameters["kind"], "paper");
    }
}
