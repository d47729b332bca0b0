//! Plain-text formats: correspondence files, rig files and KITTI pose lines.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, QuadMatch, Rigid3, StereoRig};

fn parse_error(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

/// Strips a trailing `#` comment and surrounding whitespace.
fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Reads one match per line: `uˡᵢ vˡᵢ uʳᵢ vʳᵢ uˡᵢ₊₁ vˡᵢ₊₁ uʳᵢ₊₁ vʳᵢ₊₁`.
/// Blank lines and `#` comments are ignored.
pub fn read_correspondences<R: BufRead>(r: R, source_name: &str) -> Result<Vec<QuadMatch>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let body = content(&line);
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 8 {
            return Err(parse_error(
                source_name,
                i + 1,
                format!("expected 8 values, found {}", toks.len()),
            ));
        }
        let mut a = [0.0; 8];
        for (slot, tok) in a.iter_mut().zip(&toks) {
            let v: f64 = tok
                .parse()
                .map_err(|e| parse_error(source_name, i + 1, format!("'{tok}': {e}")))?;
            if !v.is_finite() {
                return Err(parse_error(source_name, i + 1, format!("non-finite value '{tok}'")));
            }
            *slot = v;
        }
        out.push(QuadMatch::from_array(&a));
    }
    Ok(out)
}

pub fn read_correspondence_file(path: &Path) -> Result<Vec<QuadMatch>> {
    let f = fs::File::open(path)?;
    read_correspondences(BufReader::new(f), &path.display().to_string())
}

pub fn write_correspondences<W: Write>(mut w: W, matches: &[QuadMatch]) -> Result<()> {
    for q in matches {
        let a = q.to_array();
        let fields: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", fields.join(" "))?;
    }
    Ok(())
}

/// Reads `key=value` lines with keys `f`, `cu`, `cv` and `baseline`.
pub fn read_rig<R: BufRead>(r: R, source_name: &str) -> Result<StereoRig> {
    let mut vals: [Option<f64>; 4] = [None; 4];
    const KEYS: [&str; 4] = ["f", "cu", "cv", "baseline"];
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let body = content(&line);
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| parse_error(source_name, i + 1, "expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        let slot = KEYS
            .iter()
            .position(|&key| key == k)
            .ok_or_else(|| parse_error(source_name, i + 1, format!("unknown key '{k}'")))?;
        if vals[slot].is_some() {
            return Err(parse_error(source_name, i + 1, format!("duplicate key '{k}'")));
        }
        let x: f64 = v
            .parse()
            .map_err(|e| parse_error(source_name, i + 1, format!("'{v}': {e}")))?;
        vals[slot] = Some(x);
    }
    let get = |i: usize| vals[i].ok_or_else(|| parse_error(source_name, 0, format!("missing key '{}'", KEYS[i])));
    StereoRig::new(CameraIntrinsics::new(get(0)?, get(1)?, get(2)?)?, get(3)?)
}

pub fn read_rig_file(path: &Path) -> Result<StereoRig> {
    let f = fs::File::open(path)?;
    read_rig(BufReader::new(f), &path.display().to_string())
}

pub fn write_rig<W: Write>(mut w: W, rig: &StereoRig) -> Result<()> {
    let k = rig.intrinsics;
    writeln!(w, "f={}\ncu={}\ncv={}\nbaseline={}", k.f, k.cu, k.cv, rig.baseline)?;
    Ok(())
}

/// C `%.9e` formatting: nine fractional digits and a signed exponent of at
/// least two digits.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.9e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// The twelve row-major entries of the upper 3×4 block of a pose.
pub fn format_pose(pose: &Rigid3) -> String {
    let m = pose.to_matrix();
    let mut fields = Vec::with_capacity(12);
    for r in 0..3 {
        for c in 0..4 {
            fields.push(format_sci(m[(r, c)]));
        }
    }
    fields.join(" ")
}

/// Parses a KITTI pose line back into a rigid motion.
pub fn parse_pose(line: &str, source_name: &str, line_no: usize) -> Result<Rigid3> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_error(source_name, line_no, e.to_string()))?;
    if vals.len() != 12 {
        return Err(parse_error(source_name, line_no, format!("expected 12 values, found {}", vals.len())));
    }
    let mut m = nalgebra::Matrix4::identity();
    for r in 0..3 {
        for c in 0..4 {
            m[(r, c)] = vals[4 * r + c];
        }
    }
    // Nine printed digits cannot keep R orthonormal to the default tolerance,
    // so the nearest rotation is taken.
    let r = m.fixed_view::<3, 3>(0, 0).into_owned();
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let rot = u * v_t;
    if rot.determinant() < 0.0 {
        return Err(parse_error(source_name, line_no, "rotation block is a reflection"));
    }
    if (rot - r).amax() > 1e-6 {
        return Err(parse_error(source_name, line_no, "rotation block is not orthonormal"));
    }
    Rigid3::new(rot, m.fixed_view::<3, 1>(0, 3).into_owned())
}
