//! MatrixMarket reading and writing (`coordinate real` matrices and
//! `array real` vectors).

use std::io::{BufRead, Write};

use super::{CsrMatrix, LinalgError};

pub fn write_matrix<W: Write>(a: &CsrMatrix, mut out: W) -> Result<(), LinalgError> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        for (c, v) in a.row(r) {
            writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_vector<W: Write>(v: &[f64], mut out: W) -> Result<(), LinalgError> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.17e}")?;
    }
    Ok(())
}

fn err(msg: impl Into<String>) -> LinalgError {
    LinalgError::MatrixMarket(msg.into())
}

/// Header fields and the remaining non-comment lines.
fn parse_header<R: BufRead>(input: R) -> Result<(Vec<String>, Vec<String>), LinalgError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| err("empty input"))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(err(format!("bad header `{header}`")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(err(format!("unsupported field type `{}`", fields[3])));
    }
    let mut body = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('%') {
            body.push(t.to_string());
        }
    }
    Ok((fields, body))
}

fn parse_nums<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>, LinalgError> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| err(format!("cannot parse `{s}`"))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(err(format!("expected {n} fields in `{line}`")));
    }
    Ok(v)
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<CsrMatrix, LinalgError> {
    let (fields, body) = parse_header(input)?;
    if fields[2] != "coordinate" {
        return Err(err("only coordinate matrices are supported"));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(format!("unsupported symmetry `{other}`"))),
    };
    let size = body.first().ok_or_else(|| err("missing size line"))?;
    let dims: Vec<usize> = parse_nums(size, 3)?;
    let (n_rows, n_cols, nnz) = (dims[0], dims[1], dims[2]);
    if body.len() - 1 != nnz {
        return Err(err(format!("expected {nnz} entries, found {}", body.len() - 1)));
    }
    let mut t = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for line in &body[1..] {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(format!("bad entry `{line}`")));
        }
        let r: usize = parts[0].parse().map_err(|_| err(format!("bad row in `{line}`")))?;
        let c: usize = parts[1].parse().map_err(|_| err(format!("bad column in `{line}`")))?;
        let v: f64 = parts[2].parse().map_err(|_| err(format!("bad value in `{line}`")))?;
        if r == 0 || c == 0 {
            return Err(err("indices are 1-based"));
        }
        t.push((r - 1, c - 1, v));
        if symmetric && r != c {
            t.push((c - 1, r - 1, v));
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &t)
}

pub fn read_vector<R: BufRead>(input: R) -> Result<Vec<f64>, LinalgError> {
    let (fields, body) = parse_header(input)?;
    if fields[2] != "array" {
        return Err(err("vectors must use the array format"));
    }
    let dims: Vec<usize> = parse_nums(body.first().ok_or_else(|| err("missing size line"))?, 2)?;
    if dims[1] != 1 || body.len() - 1 != dims[0] {
        return Err(err("expected a single column"));
    }
    body[1..].iter().map(|l| parse_nums::<f64>(l, 1).map(|v| v[0])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let a = CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.5), (2, 1, -1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&a, &mut buf).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn vector_roundtrip() {
        let v = vec![1.0, -2.0e-9, std::f64::consts::PI];
        let mut buf = Vec::new();
        write_vector(&v, &mut buf).unwrap();
        assert_eq!(read_vector(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn symmetric_input_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn malformed_input() {
        assert!(read_matrix("garbage".as_bytes()).is_err());
        assert!(read_matrix("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n".as_bytes()).is_err());
        assert!(read_matrix("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n".as_bytes()).is_err());
    }
}
