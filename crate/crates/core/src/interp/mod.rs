//! Linear interpolation baseline: Delaunay triangulation of the training
//! positions and phase-aligned barycentric blending of the three vertex
//! CSI tensors around each query point.

mod blend;

pub use blend::{barycentric, phase_aligned_blend, BarycentricCoords, Blend, BlendOptions, MIN_TRIANGLE_AREA};

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spade::handles::{FixedFaceHandle, InnerTag};
use spade::{DelaunayTriangulation, HasPosition, Point2, PositionInTriangulation, Triangulation};

use crate::csi::{CsiDataset, CsiTensor, Datapoint};
use crate::error::{Error, Result};

/// Tolerance on barycentric coordinates when a query lands just outside
/// the hull.
const EDGE_TOLERANCE: f64 = 1e-9;

/// What to do with queries outside the convex hull of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    Error,
    #[default]
    NearestNeighbor,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Delaunay interpolant over a training set.
pub struct Interpolant {
    triangulation: DelaunayTriangulation<Site>,
    train: CsiDataset,
    pub fallback: Fallback,
    pub options: BlendOptions,
}

/// How an interpolated tensor was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Blend of three training points (dataset indices) with these weights.
    Triangle { vertices: [usize; 3], coords: BarycentricCoords, iterations: usize },
    /// Query coincides with a training position.
    Vertex(usize),
    /// Outside the hull; copy of the closest training point.
    NearestNeighbor(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub csi: CsiTensor,
    pub source: Source,
}

impl Interpolated {
    pub fn is_fallback(&self) -> bool {
        matches!(self.source, Source::NearestNeighbor(_))
    }
}

/// Triangulates the training positions. Repeated positions keep their first
/// occurrence.
pub fn build_interpolant(train: &CsiDataset, fallback: Fallback) -> Result<Interpolant> {
    let mut seen = HashSet::new();
    let mut sites = Vec::with_capacity(train.len());
    for (index, p) in train.points.iter().enumerate() {
        if seen.insert((p.position[0].to_bits(), p.position[1].to_bits())) {
            sites.push(Site { position: Point2::new(p.position[0], p.position[1]), index });
        }
    }
    if sites.len() < 3 {
        return Err(Error::TooFewPoints(sites.len()));
    }
    let triangulation = DelaunayTriangulation::<Site>::bulk_load_stable(sites)
        .map_err(|e| Error::NonFinite(format!("cannot triangulate positions: {e:?}")))?;
    if triangulation.num_inner_faces() == 0 {
        return Err(Error::Collinear);
    }
    Ok(Interpolant { triangulation, train: train.clone(), fallback, options: BlendOptions::default() })
}

impl Interpolant {
    pub fn train(&self) -> &CsiDataset {
        &self.train
    }

    /// Triangles as training-set indices, counter-clockwise.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.triangulation
            .inner_faces()
            .map(|f| f.vertices().map(|v| v.data().index))
            .collect()
    }

    fn face_vertices(&self, face: FixedFaceHandle<InnerTag>) -> [usize; 3] {
        self.triangulation.face(face).vertices().map(|v| v.data().index)
    }

    fn blend_face(&self, vertices: [usize; 3], x: [f64; 2], coords: Option<BarycentricCoords>) -> Result<Interpolated> {
        let pos = vertices.map(|i| self.train.points[i].position);
        let coords = match coords {
            Some(c) => c,
            None => match barycentric(pos, x) {
                Ok(c) => c,
                // Sliver triangle: use its closest vertex.
                Err(Error::DegenerateTriangle(_)) => {
                    let nearest = *vertices
                        .iter()
                        .min_by(|&&a, &&b| dist2(self.train.points[a].position, x).total_cmp(&dist2(self.train.points[b].position, x)))
                        .unwrap();
                    return Ok(Interpolated { csi: self.train.points[nearest].csi.clone(), source: Source::Vertex(nearest) });
                }
                Err(e) => return Err(e),
            },
        };
        let h = vertices.map(|i| &self.train.points[i].csi);
        let blend = phase_aligned_blend(h, &coords, self.options)?;
        Ok(Interpolated { csi: blend.csi, source: Source::Triangle { vertices, coords, iterations: blend.iterations } })
    }

    fn nearest(&self, x: [f64; 2]) -> usize {
        self.triangulation
            .nearest_neighbor(Point2::new(x[0], x[1]))
            .map(|v| v.data().index)
            .expect("triangulation has vertices")
    }

    pub fn interpolate_at(&self, x: [f64; 2]) -> Result<Interpolated> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFinite(format!("query {x:?}")));
        }
        let t = &self.triangulation;
        match t.locate(Point2::new(x[0], x[1])) {
            PositionInTriangulation::OnVertex(v) => {
                let i = t.vertex(v).data().index;
                Ok(Interpolated { csi: self.train.points[i].csi.clone(), source: Source::Vertex(i) })
            }
            PositionInTriangulation::OnFace(f) => self.blend_face(self.face_vertices(f), x, None),
            PositionInTriangulation::OnEdge(e) => {
                let edge = t.directed_edge(e);
                let face = edge.face().as_inner().or_else(|| edge.rev().face().as_inner()).expect("edge borders a triangle");
                self.blend_face(self.face_vertices(face.fix()), x, None)
            }
            PositionInTriangulation::OutsideOfConvexHull(e) => {
                // Within rounding of a hull edge counts as inside.
                if let Some(face) = t.directed_edge(e).rev().face().as_inner() {
                    let vertices = self.face_vertices(face.fix());
                    let pos = vertices.map(|i| self.train.points[i].position);
                    if let Ok(c) = barycentric(pos, x) {
                        if c.is_inside(EDGE_TOLERANCE) {
                            return self.blend_face(vertices, x, Some(c));
                        }
                    }
                }
                match self.fallback {
                    Fallback::Error => Err(Error::OutsideHull(x[0], x[1])),
                    Fallback::NearestNeighbor => {
                        let i = self.nearest(x);
                        Ok(Interpolated { csi: self.train.points[i].csi.clone(), source: Source::NearestNeighbor(i) })
                    }
                }
            }
            PositionInTriangulation::NoTriangulation => Err(Error::TooFewPoints(t.num_vertices())),
        }
    }

    /// Interpolates at every position, in parallel, into a dataset.
    pub fn interpolate_dataset(&self, positions: &[[f64; 2]]) -> Result<(CsiDataset, Vec<Source>)> {
        let results = positions.par_iter().map(|&x| self.interpolate_at(x)).collect::<Result<Vec<_>>>()?;
        let mut sources = Vec::with_capacity(results.len());
        let mut points = Vec::with_capacity(results.len());
        for (r, &x) in results.into_iter().zip(positions) {
            sources.push(r.source);
            points.push(Datapoint::new(r.csi, x)?);
        }
        let mut ds = CsiDataset::new(self.train.geometry, points)?;
        ds.provenance.insert("generator".into(), "interpolation".into());
        Ok((ds, sources))
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}
