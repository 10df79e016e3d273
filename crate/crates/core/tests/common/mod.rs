#![allow(dead_code)]

use prgr::{LabelMap, Rng};

/// Density of χ²₅.
pub fn chi2_5_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // 2^{5/2} Γ(5/2) = 3 √(2π)
    x.powf(1.5) * (-x / 2.0).exp() / (3.0 * (2.0 * std::f64::consts::PI).sqrt())
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive(f, a, m, l, tol / 2.0, depth - 1) + adaptive(f, m, b, r, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let whole = simpson(&f, a, b);
    adaptive(&f, a, b, whole, tol, 50)
}

/// Standard normal draw by Box-Muller.
pub fn normal(rng: &mut Rng) -> f64 {
    let u1 = 1.0 - rng.uniform();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_labels(rng: &mut Rng, w: usize, h: usize, classes: u64) -> LabelMap {
    LabelMap::new(w, h, (0..w * h).map(|_| rng.below(classes) as u32).collect()).unwrap()
}

/// Brute-force metrics used as oracles.
pub mod oracle {
    use prgr::LabelMap;

    pub fn iou(pred: &LabelMap, gt: &LabelMap, class: u32, region: Option<&[bool]>) -> f64 {
        let (mut i, mut u) = (0, 0);
        for j in 0..gt.len() {
            if gt.get(j) == LabelMap::IGNORE || region.is_some_and(|r| !r[j]) {
                continue;
            }
            let (p, g) = (pred.get(j) == class, gt.get(j) == class);
            if p && g {
                i += 1;
            }
            if p || g {
                u += 1;
            }
        }
        if u == 0 {
            1.0
        } else {
            i as f64 / u as f64
        }
    }

    /// Pixels within Chebyshev distance `band` of a pixel whose 4-neighbor differs in gt.
    pub fn band(gt: &LabelMap, band: usize) -> Vec<bool> {
        let (w, h) = (gt.width() as isize, gt.height() as isize);
        let at = |x: isize, y: isize| gt.get((y * w + x) as usize);
        let is_edge = |x: isize, y: isize| {
            [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0 && ny >= 0 && nx < w && ny < h && at(nx, ny) != at(x, y)
            })
        };
        let b = band as isize;
        (0..w * h)
            .map(|j| {
                let (x, y) = (j % w, j / w);
                (-b..=b).any(|dy| {
                    (-b..=b).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        nx >= 0 && ny >= 0 && nx < w && ny < h && is_edge(nx, ny)
                    })
                })
            })
            .collect()
    }

    fn contour(m: &[bool], w: usize, h: usize) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !m[y * w + x] {
                    continue;
                }
                let inside = |dx: isize, dy: isize| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && m[ny as usize * w + nx as usize]
                };
                if !(inside(1, 0) && inside(-1, 0) && inside(0, 1) && inside(0, -1)) {
                    out.push((x as isize, y as isize));
                }
            }
        }
        out
    }

    pub fn boundary_f(pred: &[bool], gt: &[bool], w: usize, h: usize, tol: usize) -> f64 {
        let (pb, gb) = (contour(pred, w, h), contour(gt, w, h));
        if pb.is_empty() && gb.is_empty() {
            return 1.0;
        }
        if pb.is_empty() || gb.is_empty() {
            return 0.0;
        }
        let t = tol as isize;
        let near = |a: (isize, isize), set: &[(isize, isize)]| {
            set.iter().any(|b| (a.0 - b.0).abs() <= t && (a.1 - b.1).abs() <= t)
        };
        let p = pb.iter().filter(|&&a| near(a, &gb)).count() as f64 / pb.len() as f64;
        let r = gb.iter().filter(|&&a| near(a, &pb)).count() as f64 / gb.len() as f64;
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}
