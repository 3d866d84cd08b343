//! Sutherland–Hodgman polygon clipping as a pipeline: one stage per clipper
//! edge, vertices streamed through `+{ !vec2.goto0, end }`.

use sessio::types::{end, goto0, select, send, val, Dual, Eps, Goto0, Offer, Recv, Select, Send};
use sessio::{Branch, Result, Session, TraceLog, Vector2};

use crate::parallel::pipeline;

/// A directed edge of a convex clipper; its left side is inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipEdge {
    pub from: Vector2,
    pub to: Vector2,
}

impl ClipEdge {
    pub fn new(from: Vector2, to: Vector2) -> Self {
        debug_assert!(from != to, "degenerate clip edge");
        ClipEdge { from, to }
    }

    /// Points on the edge's line count as inside.
    pub fn inside(&self, p: Vector2) -> bool {
        (self.to - self.from).cross(p - self.from) >= 0.0
    }

    /// Where segment `a`-`b` crosses the edge's line. Only called when
    /// exactly one endpoint is inside, so the denominator is never zero.
    pub fn intersection(&self, a: Vector2, b: Vector2) -> Vector2 {
        let dir = self.to - self.from;
        let c1 = dir.cross(a - self.from);
        let c2 = dir.cross(b - self.from);
        let t = c1 / (c1 - c2);
        Vector2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
    }
}

/// Vertices emitted for the segment `from -> to` against one edge.
pub fn clip_segment((from, to): (Vector2, Vector2), edge: &ClipEdge) -> Vec<Vector2> {
    match (edge.inside(from), edge.inside(to)) {
        (true, true) => vec![to],
        (true, false) => vec![edge.intersection(from, to)],
        (false, true) => vec![edge.intersection(from, to), to],
        (false, false) => vec![],
    }
}

/// Twice the signed area; positive for counter-clockwise polygons.
pub fn signed_area2(poly: &[Vector2]) -> f64 {
    (0..poly.len())
        .map(|i| poly[i].cross(poly[(i + 1) % poly.len()]))
        .sum()
}

/// The clipper's edges, oriented counter-clockwise so "inside" is the
/// polygon's interior whichever way the vertices were listed.
pub fn edges_of(clipper: &[Vector2]) -> Vec<ClipEdge> {
    let mut pts = clipper.to_vec();
    if signed_area2(&pts) < 0.0 {
        pts.reverse();
    }
    (0..pts.len())
        .map(|i| ClipEdge::new(pts[i], pts[(i + 1) % pts.len()]))
        .collect()
}

pub type VertexStream = Select<Send<Vector2, Goto0>, Eps>;
pub type VertexSink = Offer<Recv<Vector2, Goto0>, Eps>;

pub fn protocol() -> Dual<VertexStream, VertexSink> {
    select(send(val::<Vector2>(), goto0()), end())
}

fn forward(
    next: Session<VertexStream, VertexStream>,
    points: Vec<Vector2>,
) -> Result<Session<VertexStream, VertexStream>> {
    points
        .into_iter()
        .try_fold(next, |n, p| n.select_left()?.send(p)?.goto())
}

/// One pipeline stage: clips the incoming vertex stream against `edge`.
pub fn stage(
    mut prev: Session<VertexSink, VertexSink>,
    mut next: Session<VertexStream, VertexStream>,
    edge: ClipEdge,
) -> Result<()> {
    let mut first = None;
    let mut to = Vector2::default();
    loop {
        match prev.branch()? {
            Branch::Left(k) => {
                let (vertex, k) = k.receive()?;
                prev = k.goto()?;
                let from = to;
                to = vertex;
                if first.is_none() {
                    first = Some(vertex);
                } else {
                    next = forward(next, clip_segment((from, to), &edge))?;
                }
            }
            Branch::Right(k) => {
                k.close()?;
                if let Some(first) = first {
                    next = forward(next, clip_segment((to, first), &edge))?;
                }
                return next.select_right()?.close();
            }
        }
    }
}

/// Clips `subject` by the convex polygon `clipper` (at least 3 vertices).
pub fn run_clip(subject: &[Vector2], clipper: &[Vector2]) -> Result<Vec<Vector2>> {
    run_clip_traced(subject, clipper, &TraceLog::new(), &TraceLog::new())
}

/// [`run_clip`], recording the feeding side of the input session into
/// `input` and the collecting side of the output session into `output`.
pub fn run_clip_traced(
    subject: &[Vector2],
    clipper: &[Vector2],
    input_trace: &TraceLog,
    output_trace: &TraceLog,
) -> Result<Vec<Vector2>> {
    assert!(clipper.len() >= 3, "clipper needs at least three vertices");
    let (input, mut output) = pipeline(&protocol(), edges_of(clipper), |prev, next, edge| {
        if let Err(e) = stage(prev, next, edge) {
            log::error!("clip stage failed: {e}");
        }
    })?;
    input.record_into(input_trace);
    output.record_into(output_trace);
    let subject = subject.to_vec();
    let feeder = std::thread::spawn(move || -> Result<()> {
        forward(input, subject)?.select_right()?.close()
    });
    let mut out = Vec::new();
    loop {
        match output.branch()? {
            Branch::Left(k) => {
                let (v, k) = k.receive()?;
                out.push(v);
                output = k.goto()?;
            }
            Branch::Right(k) => {
                k.close()?;
                break;
            }
        }
    }
    feeder
        .join()
        .map_err(|_| sessio::SessionError::Spawn("feeder panicked".into()))??;
    Ok(out)
}

/// Parses one `x y` pair per line; blank lines and `#` comments are skipped.
pub fn parse_polygon(text: &str) -> std::result::Result<Vec<Vector2>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) if x.is_finite() && y.is_finite() => Ok(Vector2::new(x, y)),
                _ => Err(format!("bad vertex line {l:?}")),
            }
        })
        .collect()
}
