//! SVG rendering of a solution, circles colored by contact count.

use std::fmt::Write as _;

use crate::instance::{contact_counts, Solution};

/// Fill colors for 0, 1, ..., 5 and 6-or-more contacts.
pub const PALETTE: [&str; 7] = [
    "#d9d9d9", "#fde0c5", "#facba6", "#f59e72", "#ea6f5a", "#c44f8a", "#5b3f8c",
];

pub fn contact_color(count: usize) -> &'static str {
    PALETTE[count.min(PALETTE.len() - 1)]
}

/// SVG 1.1 document with the container, every unit circle and a fill keyed
/// to the number of circles within `2 + eps`. The view box is
/// `[-R-1, R+1]^2`; y points up as in the layout coordinates.
pub fn render_svg(solution: &Solution, eps: f64) -> String {
    let r = solution.radius;
    let counts = contact_counts(&solution.layout, eps);
    let side = 2.0 * (r + 1.0);
    let stroke = side / 800.0;
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" viewBox=\"{} {} {} {}\">",
        num(-r - 1.0),
        num(-r - 1.0),
        num(side),
        num(side)
    );
    let _ = writeln!(
        svg,
        "<circle cx=\"0\" cy=\"0\" r=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{}\"/>",
        num(r),
        num(2.0 * stroke)
    );
    for ((x, y), count) in solution.layout.centers().zip(&counts) {
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"1\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"{}\" data-contacts=\"{}\"/>",
            num(x),
            num(-y),
            contact_color(*count),
            num(stroke),
            count
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    // Avoid "-0.000000".
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{hexagonal_seven, Layout};

    #[test]
    fn hexagon_center_uses_six_contact_color() {
        let s = Solution::new(hexagonal_seven(), 3.0);
        let svg = render_svg(&s, 1e-10);
        let first = svg.lines().find(|l| l.contains("r=\"1\"")).unwrap();
        assert!(first.contains(PALETTE[6]));
        assert!(first.contains("data-contacts=\"6\""));
        assert_eq!(svg.matches("data-contacts=\"3\"").count(), 6);
        assert_eq!(svg, render_svg(&s, 1e-10));
    }

    #[test]
    fn single_circle() {
        let s = Solution::new(Layout::from_points(&[(0.0, 0.0)]).unwrap(), 1.0);
        let svg = render_svg(&s, 1e-10);
        assert_eq!(svg.matches("r=\"1\"").count(), 1);
        assert!(svg.contains(PALETTE[0]));
        assert!(svg.contains("viewBox=\"-2.000000 -2.000000 4.000000 4.000000\""));
    }
}
