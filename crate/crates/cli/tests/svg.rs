use goar_cli::{render_svg, Plot, Series};

fn plot(series: Vec<Series>) -> Plot {
    Plot {
        title: "a < b & c".into(),
        x_label: "level".into(),
        y_label: "accuracy".into(),
        series,
    }
}

fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed svg");
    doc.descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .map(|n| {
            n.attribute("points")
                .unwrap()
                .split_whitespace()
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn flat_curve_is_one_horizontal_polyline() {
    let svg = render_svg(&plot(vec![Series {
        label: "flat".into(),
        points: (0..6).map(|i| (i as f64 * 0.2, 0.5)).collect(),
    }]))
    .unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 1);
    let ys: Vec<f64> = lines[0].iter().map(|p| p.1).collect();
    assert_eq!(ys.len(), 6);
    assert!(ys.iter().all(|&y| y == ys[0]));
    let xs: Vec<f64> = lines[0].iter().map(|p| p.0).collect();
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn one_polyline_per_series_and_escaped_text() {
    let series = (0..3)
        .map(|k| Series {
            label: format!("m<{k}>"),
            points: vec![(0.0, k as f64), (1.0, 1.0 + k as f64)],
        })
        .collect();
    let svg = render_svg(&plot(series)).unwrap();
    assert_eq!(polylines(&svg).len(), 3);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc.descendants().any(|n| n.text() == Some("a < b & c")));
    assert!(doc.descendants().any(|n| n.text() == Some("m<2>")));
}

#[test]
fn higher_values_are_drawn_higher() {
    let svg = render_svg(&plot(vec![Series {
        label: "rising".into(),
        points: vec![(0.0, 0.0), (1.0, 1.0)],
    }]))
    .unwrap();
    let line = &polylines(&svg)[0];
    assert!(line[1].1 < line[0].1);
}

#[test]
fn rendering_is_deterministic() {
    let p = plot(vec![Series {
        label: "s".into(),
        points: vec![(0.0, 0.3), (0.5, 0.1), (1.0, 0.9)],
    }]);
    assert_eq!(render_svg(&p).unwrap(), render_svg(&p).unwrap());
}

#[test]
fn empty_or_non_finite_plots_are_errors() {
    assert!(render_svg(&plot(vec![])).is_err());
    let nan = Series {
        label: "nan".into(),
        points: vec![(0.0, f64::NAN)],
    };
    assert!(render_svg(&plot(vec![nan])).is_err());
}
