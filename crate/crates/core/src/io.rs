//! CSV readers for samples, point clouds, regression data, item banks,
//! response matrices and grouped data, plus path writers.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Result, StatError};
use crate::glm::{IrtItem, IrtItemBank};
use crate::regression::DesignMatrix;
use crate::stochastic::{BrownianPath, GbmPath};

fn reader<R: Read>(r: R, has_headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .flexible(false)
        .comment(Some(b'#'))
        .from_reader(r)
}

fn parse_field(s: &str, line: u64, col: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| StatError::Parse(format!("line {line}, column {}: '{s}' is not a number", col + 1)))
}

/// All rows as numbers; a non-numeric first row is taken as a header and skipped.
fn numeric_rows<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = reader(r, false);
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        rows.push(rec.iter().enumerate().map(|(c, f)| parse_field(f, line, c)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(rows)
}

/// Single-column sample.
pub fn read_sample<R: Read>(r: R) -> Result<Vec<f64>> {
    let rows = numeric_rows(r)?;
    if let Some(bad) = rows.iter().find(|row| row.len() != 1) {
        return Err(StatError::Parse(format!("expected one column, found {}", bad.len())));
    }
    Ok(rows.into_iter().map(|row| row[0]).collect())
}

/// One point per row.
pub fn read_points<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let rows = numeric_rows(r)?;
    if rows.is_empty() {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    let d = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Header required, first column `y`; remaining columns are predictors.
pub fn read_regression<R: Read>(r: R, intercept: bool) -> Result<(DesignMatrix, Vec<f64>)> {
    let mut rd = reader(r, true);
    let headers: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if headers.first().map(String::as_str) != Some("y") {
        return Err(StatError::Parse("first column must be named 'y'".into()));
    }
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals = rec.iter().enumerate().map(|(c, f)| parse_field(f, line, c)).collect::<Result<Vec<f64>>>()?;
        y.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    let design = DesignMatrix::from_rows(&rows, intercept)?;
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push("intercept".into());
    }
    names.extend(headers[1..].iter().cloned());
    Ok((design.with_names(names)?, y))
}

/// Columns `a,b`.
pub fn read_item_bank<R: Read>(r: R) -> Result<IrtItemBank> {
    let mut rd = reader(r, true);
    let headers: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| StatError::Parse(format!("item bank needs a '{name}' column")))
    };
    let (ia, ib) = (pos("a")?, pos("b")?);
    let mut items = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        items.push(IrtItem { a: parse_field(&rec[ia], line, ia)?, b: parse_field(&rec[ib], line, ib)? });
    }
    IrtItemBank::new(items)
}

/// One examinee per row of 0/1 values.
pub fn read_responses<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let rows = numeric_rows(r)?;
    if rows.iter().flatten().any(|&v| v != 0.0 && v != 1.0) {
        return Err(StatError::Parse("responses must be 0 or 1".into()));
    }
    Ok(rows)
}

/// A `group` label column and one numeric column; groups in order of first appearance.
pub fn read_groups<R: Read>(r: R) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rd = reader(r, true);
    let headers: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if headers.len() != 2 {
        return Err(StatError::Parse("grouped data needs a 'group' column and one value column".into()));
    }
    let gi = headers
        .iter()
        .position(|h| h == "group")
        .ok_or_else(|| StatError::Parse("grouped data needs a 'group' column".into()))?;
    let vi = 1 - gi;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let v = parse_field(&rec[vi], line, vi)?;
        let label = &rec[gi];
        match groups.iter_mut().find(|g| g.0 == label) {
            Some(g) => g.1.push(v),
            None => groups.push((label.to_string(), vec![v])),
        }
    }
    Ok(groups)
}

/// `t,b1,...,bd`
pub fn write_brownian_csv<W: Write>(path: &BrownianPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim).map(|c| format!("b{c}")));
    w.write_record(&header)?;
    for (j, t) in path.grid.times().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(path.row(j).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,s`
pub fn write_gbm_csv<W: Write>(path: &GbmPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "s"])?;
    for (t, s) in path.grid.times().iter().zip(&path.values) {
        w.write_record([t.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::stochastic::{brownian_sample, TimeGrid};

    #[test]
    fn sample_with_and_without_header() {
        assert_eq!(read_sample("x\n1\n2.5\n".as_bytes()).unwrap(), vec![1.0, 2.5]);
        assert_eq!(read_sample("1\n2.5\n".as_bytes()).unwrap(), vec![1.0, 2.5]);
        assert!(read_sample("1,2\n".as_bytes()).is_err());
        let err = read_sample("1\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, StatError::Parse(m) if m.contains("line 2")));
    }

    #[test]
    fn regression_layout() {
        let (d, y) = read_regression("y,age,dose\n1,20,0.5\n2,30,0.1\n3,25,0.7\n".as_bytes(), true).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
        assert_eq!(d.ncols(), 3);
        assert_eq!(d.names(), &["intercept", "age", "dose"]);
        let (d, _) = read_regression("y,age\n1,20\n2,30\n".as_bytes(), false).unwrap();
        assert_eq!(d.ncols(), 1);
        assert!(read_regression("age,y\n1,2\n".as_bytes(), true).is_err());
    }

    #[test]
    fn items_groups_responses() {
        let bank = read_item_bank("b,a\n0.5,1.2\n-1,0.8\n".as_bytes()).unwrap();
        assert_eq!(bank.items[0], IrtItem { a: 1.2, b: 0.5 });
        assert!(read_item_bank("a,b\n-1,0\n".as_bytes()).is_err());
        let g = read_groups("group,value\nA,1\nB,2\nA,3\n".as_bytes()).unwrap();
        assert_eq!(g, vec![("A".into(), vec![1.0, 3.0]), ("B".into(), vec![2.0])]);
        assert_eq!(read_responses("1,0,1\n0,0,1\n".as_bytes()).unwrap().len(), 2);
        assert!(read_responses("1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn brownian_csv_shape() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let p = brownian_sample(&g, 2, &mut RandomStream::new(1)).unwrap();
        let mut buf = Vec::new();
        write_brownian_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,b1,b2");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0,0,0");
    }
}
