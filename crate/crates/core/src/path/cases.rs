//! The two junction tables of the path rules and local fixtures that realise each row.

use serde::Serialize;

use crate::geometry::PlanePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    pub fn sign(self) -> i8 {
        match self {
            Dir::Up | Dir::Right => 1,
            Dir::Down | Dir::Left => -1,
        }
    }

    fn vertical(s: i8) -> Dir {
        if s > 0 {
            Dir::Up
        } else {
            Dir::Down
        }
    }

    fn horizontal(s: i8) -> Dir {
        if s > 0 {
            Dir::Right
        } else {
            Dir::Left
        }
    }
}

/// Leaving a type-+1 critical point vertically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CritCase {
    pub map_dir: Dir,
    pub facing: Dir,
    pub flow: Dir,
    pub approach: Dir,
    pub vertical: Dir,
}

/// Turning onto a component after a vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VertCase {
    pub map_dir: Dir,
    pub vertical: Dir,
    pub flow: Dir,
    pub travel: Dir,
}

pub fn crit_table() -> [CritCase; 8] {
    use Dir::*;
    let row = |map_dir, facing, flow, approach, vertical| CritCase { map_dir, facing, flow, approach, vertical };
    [
        row(Up, Right, Right, Up, Down),
        row(Up, Right, Right, Down, Down),
        row(Up, Right, Left, Up, Up),
        row(Up, Right, Left, Down, Up),
        row(Down, Left, Right, Up, Down),
        row(Down, Left, Right, Down, Down),
        row(Down, Left, Left, Up, Up),
        row(Down, Left, Left, Down, Up),
    ]
}

pub fn vert_table() -> [VertCase; 8] {
    use Dir::*;
    let row = |map_dir, vertical, flow, travel| VertCase { map_dir, vertical, flow, travel };
    [
        row(Up, Up, Right, Left),
        row(Up, Up, Left, Right),
        row(Up, Down, Right, Right),
        row(Up, Down, Left, Left),
        row(Down, Up, Right, Right),
        row(Down, Up, Left, Left),
        row(Down, Down, Right, Left),
        row(Down, Down, Left, Right),
    ]
}

impl CritCase {
    /// Direction the rules prescribe: `v = -f`.
    pub fn rule_vertical(&self) -> Dir {
        Dir::vertical(-self.flow.sign())
    }
}

impl VertCase {
    /// Direction the rules prescribe: `t = -u'·v·f`.
    pub fn rule_travel(&self) -> Dir {
        Dir::horizontal(-self.map_dir.sign() * self.vertical.sign() * self.flow.sign())
    }
}

/// Type `c'·u'` of the critical point a leg ends on, given the rules `v = -f`, `t = -u'·v·f`
/// and `c' = t`.
pub fn path_algebra_terminal_type(flow: i8, u_next: i8) -> i8 {
    let v = -flow;
    let t = -u_next * v * flow;
    t * u_next
}

/// A local picture: the path through a junction, its image and the box it spans.
#[derive(Debug, Clone)]
pub struct CaseFixture {
    pub path: Vec<PlanePoint>,
    pub image: Vec<PlanePoint>,
    pub bbox: [f64; 4],
}

const LAMBDA: f64 = 0.3;
const MU: f64 = 0.1;
const CURV: f64 = 0.8;
const SAMPLES: usize = 400;

fn image(pts: &[PlanePoint], d1: impl Fn(f64, f64) -> f64, u: i8) -> Vec<PlanePoint> {
    pts.iter()
        .map(|p| PlanePoint::new(p.x + d1(p.x, p.y), p.y + MU * u as f64))
        .collect()
}

/// Parabolic fold `c·x + k·y² = 0` with its tip at the origin; `Δ₁ = λ·f·(c·x + k·y²)`.
/// The path approaches the tip along the fold and leaves along the vertical in `vertical`.
pub fn crit_case_fixture(case: &CritCase, vertical: Dir) -> CaseFixture {
    let c = case.facing.sign() as f64;
    let f = case.flow.sign() as f64;
    let a = case.approach.sign() as f64;
    let v = vertical.sign() as f64;
    let mut path = Vec::with_capacity(2 * SAMPLES + 1);
    // approaching upwards means arriving from below
    for i in 0..SAMPLES {
        let y = -a * (1.0 - i as f64 / SAMPLES as f64);
        path.push(PlanePoint::new(-c * CURV * y * y, y));
    }
    for i in 0..=SAMPLES {
        path.push(PlanePoint::new(0.0, v * i as f64 / SAMPLES as f64));
    }
    let img = image(&path, |x, y| LAMBDA * f * (c * x + CURV * y * y), case.map_dir.sign());
    CaseFixture { path, image: img, bbox: [-1.0, 1.0, -1.0, 1.0] }
}

/// Vertical arriving at the line `y = slope·x` from the side opposite `v`, then running along it
/// in `travel`. `Δ₁ = λ·f·(-v)·(y - slope·x)` has the outer-flow sign on the arrival side.
pub fn vert_case_fixture(case: &VertCase, travel: Dir, slope: f64) -> CaseFixture {
    let v = case.vertical.sign() as f64;
    let f = case.flow.sign() as f64;
    let t = travel.sign() as f64;
    let mut path = Vec::with_capacity(2 * SAMPLES + 1);
    for i in 0..SAMPLES {
        path.push(PlanePoint::new(0.0, -v * (1.0 - i as f64 / SAMPLES as f64)));
    }
    for i in 0..=SAMPLES {
        let x = t * i as f64 / SAMPLES as f64;
        path.push(PlanePoint::new(x, slope * x));
    }
    let img = image(&path, |x, y| LAMBDA * f * (-v) * (y - slope * x), case.map_dir.sign());
    CaseFixture { path, image: img, bbox: [-1.0, 1.0, -1.0, 1.0] }
}
