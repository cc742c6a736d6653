//! JSON-lines stream files.
//!
//! The first line is a header `{"d":..,"T":..,"instance_space":..,"target_radius":..}`
//! and each following line is one round `{"x":[..],"y":[..]}`. Blank lines are
//! ignored and an empty file is an empty stream.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Example, InstanceSpace, Stream, StreamHeader};
use crate::error::{Error, Result};
use crate::hilbert::HVector;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses and validates a stream. Errors name the offending line, or the
/// offending round for ball violations.
pub fn parse_stream(text: &str) -> Result<Stream> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((header_line, header_text)) = lines.next() else {
        return Ok(Stream {
            header: StreamHeader {
                d: 0,
                horizon: 0,
                instance_space: InstanceSpace::L2Unit,
                target_radius: 0.0,
            },
            rounds: Vec::new(),
        });
    };
    let header: StreamHeader =
        serde_json::from_str(header_text).map_err(|e| parse_error(header_line, format!("header: {e}")))?;
    let mut rounds = Vec::new();
    let mut last_line = header_line;
    for (line, text) in lines {
        last_line = line;
        let record: Record = serde_json::from_str(text).map_err(|e| parse_error(line, e.to_string()))?;
        if record.x.len() != header.d || record.y.len() != header.d {
            return Err(parse_error(
                line,
                format!(
                    "expected vectors of length {}, got x: {}, y: {}",
                    header.d,
                    record.x.len(),
                    record.y.len()
                ),
            ));
        }
        let x = HVector::new(record.x).map_err(|e| parse_error(line, e.to_string()))?;
        let y = HVector::new(record.y).map_err(|e| parse_error(line, e.to_string()))?;
        rounds.push(Example::new(x, y));
    }
    if rounds.len() != header.horizon {
        return Err(parse_error(
            last_line,
            format!("header declares {} rounds, found {}", header.horizon, rounds.len()),
        ));
    }
    let stream = Stream { header, rounds };
    stream.validate()?;
    Ok(stream)
}

pub fn read_stream(path: &Path) -> Result<Stream> {
    parse_stream(&fs::read_to_string(path)?)
}

/// Writes the header and one line per round. Floats use the shortest
/// round-trip representation, so reading the output back is bit-exact.
pub fn write_stream<W: Write>(stream: &Stream, mut out: W) -> io::Result<()> {
    serde_json::to_writer(&mut out, &stream.header)?;
    out.write_all(b"\n")?;
    for ex in &stream.rounds {
        let record = Record {
            x: ex.x.as_slice().to_vec(),
            y: ex.y.as_slice().to_vec(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
