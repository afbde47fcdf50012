use std::fmt::Write as _;
use std::io::Write;

use super::{AnalysisError, CorrelationMatrix, Projection2D};
use crate::features::format_value;

/// Correlation CSV with rows and columns permuted into `order`.
pub fn write_correlation_csv<W: Write>(writer: W, corr: &CorrelationMatrix, order: &[usize]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["feature".to_string()];
    header.extend(order.iter().map(|&i| corr.names[i].clone()));
    w.write_record(&header)?;
    for &i in order {
        let mut rec = vec![corr.names[i].clone()];
        rec.extend(order.iter().map(|&j| format_value(corr.values[i][j])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `corpusId,x,y,cluster,hardness`; missing columns are left empty.
pub fn write_projection_csv<W: Write>(
    writer: W,
    corpus_ids: &[String],
    projection: &Projection2D,
    clusters: Option<&[usize]>,
    hardness: Option<&[usize]>,
) -> Result<(), AnalysisError> {
    if corpus_ids.len() != projection.coords.len() {
        return Err(AnalysisError::InvalidInput("corpus ids do not match the projection".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["corpusId", "x", "y", "cluster", "hardness"])?;
    for (i, id) in corpus_ids.iter().enumerate() {
        let [x, y] = projection.coords[i];
        let opt = |v: Option<&[usize]>| v.and_then(|v| v.get(i)).map(|c| c.to_string()).unwrap_or_default();
        w.write_record([id.clone(), format_value(x), format_value(y), opt(clusters), opt(hardness)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub group: usize,
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static labelled scatter plot, one colour per group.
pub fn scatter_svg(points: &[ScatterPoint], title: &str, legend: &str) -> String {
    let (w, h, m) = (640.0, 480.0, 40.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let sx = |x: f64| m + (x - x0) / span(x0, x1) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / span(y0, y1) * (h - 2.0 * m);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    for p in points {
        let (cx, cy) = (sx(p.x), sy(p.y));
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{}"><title>{}</title></circle>"#,
            PALETTE[p.group % PALETTE.len()],
            escape(&p.label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="9">{}</text>"#,
            cx + 6.0,
            cy - 4.0,
            escape(&p.label)
        );
    }
    let mut groups: Vec<usize> = points.iter().map(|p| p.group).collect();
    groups.sort_unstable();
    groups.dedup();
    for (row, g) in groups.iter().enumerate() {
        let y = 40.0 + 14.0 * row as f64;
        let _ = writeln!(out, r#"<circle cx="{}" cy="{y}" r="4" fill="{}"/>"#, w - 90.0, PALETTE[g % PALETTE.len()]);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10">{} {g}</text>"#,
            w - 80.0,
            y + 3.0,
            escape(legend)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{pca2, pearson_corr, ward_order};

    #[test]
    fn correlation_csv_follows_order() {
        let rows = vec![vec![1.0, 2.0, 0.5], vec![2.0, 4.1, 0.1], vec![3.0, 5.9, 0.9]];
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let c = pearson_corr(&names, &rows).unwrap();
        let order = ward_order(&c);
        let mut buf = Vec::new();
        write_correlation_csv(&mut buf, &c, &order).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').skip(1).collect();
        let expect: Vec<&str> = order.iter().map(|&i| names[i].as_str()).collect();
        assert_eq!(header, expect);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn projection_csv_and_svg() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0], vec![0.0, 1.0]];
        let p = pca2(&rows).unwrap();
        let ids: Vec<String> = (0..4).map(|i| format!("c<{i}>")).collect();
        let mut buf = Vec::new();
        write_projection_csv(&mut buf, &ids, &p, Some(&[0, 0, 1, 1]), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",0,"));
        let pts: Vec<ScatterPoint> =
            ids.iter().zip(&p.coords).map(|(id, c)| ScatterPoint { label: id.clone(), x: c[0], y: c[1], group: 0 }).collect();
        let svg = scatter_svg(&pts, "corpora", "cluster");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 4 + 1);
        assert!(svg.contains("c&lt;0&gt;"));
    }
}
