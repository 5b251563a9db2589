//! Instance file format.
//!
//! ```text
//! RMNK1\n
//! n=<n> k=<k> m=2 rho=<rho> seed=<seed>\n
//! n*k link positions, u64 little-endian, bit-major
//! per objective: n * 2^(k+1) table values, f64 little-endian, bit-major
//! ```

use std::io::{BufRead, Read, Write};

use super::{Instance, InstanceParams, OBJECTIVES};
use crate::error::{Error, Result};

pub const MAGIC: &str = "RMNK1";

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_line(r: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(format_err("truncated header"));
    }
    line.pop();
    Ok(line)
}

fn parse_header(line: &str) -> Result<InstanceParams> {
    let mut fields = line.split(' ').map(|f| f.split_once('='));
    let mut next = |key: &str| -> Result<&str> {
        match fields.next() {
            Some(Some((k, v))) if k == key => Ok(v),
            _ => Err(format_err(format!("expected `{key}=` in header `{line}`"))),
        }
    };
    let bad = |what: &str| format_err(format!("bad {what} in header `{line}`"));
    let n = next("n")?.parse().map_err(|_| bad("n"))?;
    let k = next("k")?.parse().map_err(|_| bad("k"))?;
    let m: usize = next("m")?.parse().map_err(|_| bad("m"))?;
    let rho = next("rho")?.parse().map_err(|_| bad("rho"))?;
    let seed = next("seed")?.parse().map_err(|_| bad("seed"))?;
    if m != OBJECTIVES {
        return Err(format_err(format!("only m = 2 is supported, got {m}")));
    }
    Ok(InstanceParams { n, k, rho, seed })
}

impl Instance {
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let p = &self.params;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "n={} k={} m={} rho={} seed={}", p.n, p.k, OBJECTIVES, p.rho, p.seed)?;
        for &l in &self.links {
            w.write_all(&(l as u64).to_le_bytes())?;
        }
        for table in &self.tables {
            for v in table {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: impl Read) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        if read_line(&mut r)? != MAGIC {
            return Err(format_err("missing RMNK1 magic"));
        }
        let params = parse_header(&read_line(&mut r)?)?;
        params.validate()?;
        let InstanceParams { n, k, .. } = params;

        let mut word = [0u8; 8];
        let mut links = Vec::with_capacity(n);
        for _ in 0..n {
            let mut list = Vec::with_capacity(k);
            for _ in 0..k {
                r.read_exact(&mut word)?;
                let l = u64::from_le_bytes(word);
                list.push(usize::try_from(l).map_err(|_| format_err("link out of range"))?);
            }
            links.push(list);
        }
        let rows = params.rows();
        let mut tables: [Vec<Vec<f64>>; OBJECTIVES] = Default::default();
        for per_bit in tables.iter_mut() {
            for _ in 0..n {
                let mut table = Vec::with_capacity(rows);
                for _ in 0..rows {
                    r.read_exact(&mut word)?;
                    table.push(f64::from_le_bytes(word));
                }
                per_bit.push(table);
            }
        }
        if r.read(&mut word)? != 0 {
            return Err(format_err("trailing bytes after instance data"));
        }
        Self::from_parts(params, links, tables)
    }

    /// CSV view of the instance: one row per link and per table entry.
    ///
    /// Columns: `section,objective,position,index,value`. Link rows leave
    /// `objective` empty and carry the linked position in `value`.
    pub fn write_text(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["section", "objective", "position", "index", "value"])?;
        for owner in 0..self.n() {
            for (i, l) in self.links_of(owner).iter().enumerate() {
                out.write_record(["link", "", &owner.to_string(), &i.to_string(), &l.to_string()])?;
            }
        }
        for objective in 0..OBJECTIVES {
            for owner in 0..self.n() {
                for (row, v) in self.table(objective, owner).iter().enumerate() {
                    out.write_record([
                        "table",
                        &(objective + 1).to_string(),
                        &owner.to_string(),
                        &row.to_string(),
                        &v.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}
