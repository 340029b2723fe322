//! Standalone SVG heatmap of a confusion matrix.

use std::fmt::Write as _;
use std::path::Path;

use super::metrics::ConfusionMatrix;
use crate::error::Result;
use crate::io;

const CELL: u32 = 120;
const MARGIN: u32 = 90;

/// Linear blend from white (0) to a dark blue (max cell).
fn cell_color(count: u64, max: u64) -> (u8, u8, u8) {
    let t = if max == 0 { 0.0 } else { count as f64 / max as f64 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

pub fn confusion_svg(m: &ConfusionMatrix, title: &str) -> String {
    let names = ["fake", "real"];
    let size = MARGIN + 2 * CELL + 20;
    let max = m.max_cell();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN + CELL,
        escape(title)
    );
    for (r, row) in m.0.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            let x = MARGIN + c as u32 * CELL;
            let y = MARGIN / 2 + r as u32 * CELL;
            let (red, green, blue) = cell_color(count, max);
            let dark = max > 0 && count * 2 > max;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({red},{green},{blue})" stroke="black"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" font-size="18" fill="{}">{count}</text>"#,
                x + CELL / 2,
                y + CELL / 2,
                if dark { "white" } else { "black" }
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle" font-size="13">{name}</text>"#,
            MARGIN - 8,
            MARGIN / 2 + i as u32 * CELL + CELL / 2
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{name}</text>"#,
            MARGIN + i as u32 * CELL + CELL / 2,
            MARGIN / 2 + 2 * CELL + 18
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle" font-size="13">actual</text>"#,
        MARGIN / 2 + CELL,
        MARGIN / 2 + CELL
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">predicted</text>"#,
        MARGIN + CELL,
        size - 4
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_confusion_svg(m: &ConfusionMatrix, title: &str, path: &Path) -> Result<()> {
    io::write_atomic(path, confusion_svg(m, title).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fills(svg: &str) -> Vec<String> {
        let doc = roxmltree::Document::parse(svg).expect("well-formed XML");
        doc.descendants()
            .filter(|n| n.has_tag_name("rect") && n.attribute("stroke").is_some())
            .map(|n| n.attribute("fill").unwrap().to_string())
            .collect()
    }

    #[test]
    fn four_cells_with_counts() {
        let svg = confusion_svg(&ConfusionMatrix([[3, 0], [0, 2]]), "LSA <dev> & test");
        assert_eq!(fills(&svg).len(), 4);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
        for label in ["3", "0", "2", "LSA <dev> & test"] {
            assert!(texts.contains(&label), "{label}");
        }
    }

    #[test]
    fn zero_matrix_is_uniform() {
        let f = fills(&confusion_svg(&ConfusionMatrix::default(), "empty"));
        assert!(f.iter().all(|c| c == "rgb(255,255,255)"));
    }

    #[test]
    fn scale_endpoints() {
        assert_eq!(cell_color(0, 10), (255, 255, 255));
        assert_eq!(cell_color(10, 10), (8, 48, 107));
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cm.svg");
        render_confusion_svg(&ConfusionMatrix([[1, 2], [3, 4]]), "x", &p).unwrap();
        assert!(std::fs::read_to_string(p).unwrap().starts_with("<svg"));
    }
}
