//! Flat `key = value` model configs and CSV/JSON artifact writers.
//!
//! Every artifact starts with a header holding the tool version and the
//! resolved config. CSV headers are `#` comment lines; JSON artifacts wrap the
//! payload as `{"header": .., "result": ..}`. CSV floats are written with 17
//! significant digits so they round-trip exactly.

use std::io::Write;

use serde::Serialize;

use crate::criteria::ChiScan;
use crate::error::{Error, Result};
use crate::fast_orbit::{FastOrbit, SingularConfiguration};
use crate::full_sim::Trajectory;
use crate::model::{Family, ModelParams, ModelSpec};

pub const CONFIG_KEYS: [&str; 7] = ["family", "r", "k", "c", "m", "a", "b"];

/// Model parameters with every field optional, so config files and command
/// line flags can be layered before validation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PartialParams {
    pub family: Option<Family>,
    pub r: Option<f64>,
    pub k: Option<f64>,
    pub c: Option<f64>,
    pub m: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl PartialParams {
    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: PartialParams) -> PartialParams {
        PartialParams {
            family: over.family.or(self.family),
            r: over.r.or(self.r),
            k: over.k.or(self.k),
            c: over.c.or(self.c),
            m: over.m.or(self.m),
            a: over.a.or(self.a),
            b: over.b.or(self.b),
        }
    }

    /// Fills defaulted fields and reports the first missing required one.
    pub fn resolve(self) -> Result<ModelParams> {
        let missing = |key: &str| Error::InvalidParameter(format!("missing required key `{key}`"));
        let family = self.family.ok_or_else(|| missing("family"))?;
        if family == Family::Custom {
            return Err(Error::InvalidParameter(
                "family `custom` cannot be built from a config file".into(),
            ));
        }
        Ok(ModelParams {
            family,
            r: self.r.ok_or_else(|| missing("r"))?,
            k: self.k.ok_or_else(|| missing("k"))?,
            c: self.c.ok_or_else(|| missing("c"))?,
            m: self.m.ok_or_else(|| missing("m"))?,
            a: self.a.ok_or_else(|| missing("a"))?,
            b: self.b.unwrap_or(0.0),
        })
    }
}

impl From<ModelParams> for PartialParams {
    fn from(p: ModelParams) -> Self {
        PartialParams {
            family: Some(p.family),
            r: Some(p.r),
            k: Some(p.k),
            c: Some(p.c),
            m: Some(p.m),
            a: Some(p.a),
            b: Some(p.b),
        }
    }
}

/// Parses a number written in plain decimal notation: optional sign, digits,
/// optional fraction. Exponents, `inf` and `nan` are rejected.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return None;
    }
    s.parse().ok()
}

/// Parses a config file. Blank lines and lines starting with `#` are skipped.
/// Errors carry the 1-based line number.
pub fn parse_config(text: &str) -> Result<PartialParams> {
    let mut out = PartialParams::default();
    let mut seen = [false; CONFIG_KEYS.len()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| Error::Config { line, msg };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{trimmed}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let slot = CONFIG_KEYS
            .iter()
            .position(|&k| k == key)
            .ok_or_else(|| err(format!("unknown key `{key}`")))?;
        if seen[slot] {
            return Err(err(format!("duplicate key `{key}`")));
        }
        seen[slot] = true;
        if key == "family" {
            out.family = Some(
                Family::from_key(value).ok_or_else(|| err(format!("unknown family `{value}`")))?,
            );
            continue;
        }
        let v = parse_decimal(value)
            .ok_or_else(|| err(format!("`{key}` needs a decimal number, got `{value}`")))?;
        let field = match key {
            "r" => &mut out.r,
            "k" => &mut out.k,
            "c" => &mut out.c,
            "m" => &mut out.m,
            "a" => &mut out.a,
            _ => &mut out.b,
        };
        *field = Some(v);
    }
    Ok(out)
}

/// Reads a config file and validates it into a model.
pub fn load_model(text: &str) -> Result<ModelSpec> {
    ModelSpec::new(parse_config(text)?.resolve()?)
}

/// Writes `params` as a config file that [`parse_config`] reads back exactly.
/// `f64`'s `Display` is the shortest round-tripping decimal and never uses an
/// exponent.
pub fn format_config(params: &ModelParams) -> String {
    let mut s = format!("family = {}\n", params.family.key());
    for (key, v) in [
        ("r", params.r),
        ("k", params.k),
        ("c", params.c),
        ("m", params.m),
        ("a", params.a),
        ("b", params.b),
    ] {
        s.push_str(&format!("{key} = {v}\n"));
    }
    s
}

/// Provenance block written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub model: Option<ModelParams>,
    /// Command specific settings, in a fixed order.
    #[serde(serialize_with = "pairs_as_map")]
    pub settings: Vec<(String, String)>,
    pub notes: Vec<String>,
}

fn pairs_as_map<S: serde::Serializer>(pairs: &[(String, String)], ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = ser.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

impl Header {
    pub fn new(tool: &str, version: &str, command: &str, model: Option<ModelParams>) -> Header {
        Header {
            tool: tool.into(),
            version: version.into(),
            command: command.into(),
            model,
            settings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Header {
        self.settings.push((key.into(), value.to_string()));
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Header {
        self.notes.push(note.into());
        self
    }

    pub fn write_csv_comment<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# {} {}", self.tool, self.version)?;
        writeln!(w, "# command = {}", self.command)?;
        if let Some(p) = &self.model {
            for line in format_config(p).lines() {
                writeln!(w, "# {line}")?;
            }
        }
        for (k, v) in &self.settings {
            writeln!(w, "# {k} = {v}")?;
        }
        for n in &self.notes {
            writeln!(w, "# note: {n}")?;
        }
        Ok(())
    }
}

pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<W: Write + ?Sized, const N: usize>(
    w: &mut W,
    header: &Header,
    columns: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> std::io::Result<()> {
    header.write_csv_comment(w)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| csv_float(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Columns `y, x` along the fast orbit, increasing in `y`.
pub fn write_fast_orbit_csv<W: Write + ?Sized>(w: &mut W, header: &Header, orbit: &FastOrbit) -> std::io::Result<()> {
    write_rows(w, header, ["y", "x"], orbit.samples.iter().map(|&(y, x)| [y, x]))
}

/// Columns `y, x` around the closed loop Γ: the fast orbit followed by the
/// slow segment back down the axis.
pub fn write_configuration_csv<W: Write + ?Sized>(
    w: &mut W,
    header: &Header,
    config: &SingularConfiguration,
) -> std::io::Result<()> {
    write_rows(w, header, ["y", "x"], config.closed_loop().into_iter().map(|(x, y)| [y, x]))
}

pub fn write_trajectory_csv<W: Write + ?Sized>(w: &mut W, header: &Header, traj: &Trajectory) -> std::io::Result<()> {
    write_rows(
        w,
        header,
        ["t", "x", "y", "u"],
        traj.samples.iter().map(|s| [s.t, s.x(), s.y, s.u]),
    )
}

pub fn write_chi_scan_csv<W: Write + ?Sized>(w: &mut W, header: &Header, scan: &ChiScan) -> std::io::Result<()> {
    write_rows(
        w,
        header,
        ["x0", "chi", "lambda"],
        scan.samples.iter().map(|s| [s.x0, s.chi, s.lambda]),
    )
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a Header,
    result: &'a T,
}

/// Pretty JSON `{"header": .., "result": ..}` with a trailing newline.
/// Non-finite floats become `null`.
pub fn write_json<W: Write + ?Sized, T: Serialize>(w: &mut W, header: &Header, result: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, &Wrapped { header, result })?;
    writeln!(w)
}
