//! Triangulated closed hyperbolic surfaces.
//!
//! A mesh carries only intrinsic data: triangle combinatorics and hyperbolic
//! edge lengths. Corner angles come from the hyperbolic law of cosines, face
//! areas from the angle defect, and each face gets an exact Poincaré-disk
//! chart centered inside it. The chart is what every discrete operator
//! downstream (scalar Dirichlet form, bundle dbar stencil) is built on, so
//! the scalar and bundle discretizations stay algebraically consistent.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hyp;

pub type C64 = Complex64;

/// Real-valued function on mesh vertices (conformal exponent `u`, test
/// functions, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField {
            values: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField { values: vec![c; n] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Exact Poincaré chart of one face, centered near its barycenter.
///
/// `pos` are the three vertices in the chart, `wirtinger` the affine-fit
/// weights extracting the dbar coefficient of vertex data, `delta` the
/// weight-one frame rotation taking a coefficient in the vertex frame to the
/// chart frame (radially parallel from the chart center).
#[derive(Debug, Clone)]
pub struct FaceChart {
    pub pos: [C64; 3],
    pub wirtinger: [C64; 3],
    pub delta: [f64; 3],
}

/// Triangulated closed surface with intrinsic hyperbolic metric.
#[derive(Debug, Clone)]
pub struct HyperbolicMesh {
    pub genus: usize,
    pub n_vertices: usize,
    /// Counter-clockwise triangles. Halfedge `h = 3*f + i` runs from
    /// `faces[f][i]` to `faces[f][(i+1)%3]`.
    pub faces: Vec<[usize; 3]>,
    pub twin: Vec<usize>,
    /// Hyperbolic length per halfedge (twin-symmetric by construction).
    pub length: Vec<f64>,
    /// Interior angle at the tail vertex of each halfedge, inside its face.
    pub corner: Vec<f64>,
    pub face_area: Vec<f64>,
    /// Lumped vertex mass: one third of the incident face areas.
    pub vertex_weight: Vec<f64>,
    /// Outgoing halfedges per vertex, in counter-clockwise order.
    pub vertex_out: Vec<Vec<usize>>,
    /// Direction angle of each halfedge at its tail, in the normalized
    /// (sums to exactly 2*pi) angular coordinate of the vertex.
    pub atlas: Vec<f64>,
    /// 2*pi minus the measured angle sum, per vertex.
    pub angle_defect: Vec<f64>,
    pub chart: Vec<FaceChart>,
    /// Fundamental-domain layout per face corner (generator meshes only).
    pub corner_pos: Option<Vec<[C64; 3]>>,
    /// Representative disk position per vertex (generator meshes only).
    pub vertex_pos: Option<Vec<C64>>,
    pub generated: bool,
}

impl HyperbolicMesh {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_halfedges(&self) -> usize {
        3 * self.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_halfedges() / 2
    }

    pub fn tail(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    pub fn head(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.length.iter().fold(0.0, |m, &l| m.max(l))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// Mean of the three vertex values of `u` on face `f`.
    pub fn face_mean(&self, u: &ScalarField, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        (u.values[a] + u.values[b] + u.values[c]) / 3.0
    }

    /// Assemble a mesh from combinatorics plus an edge-length callback.
    ///
    /// `twins` may be supplied explicitly (the generator does, since the
    /// coarse octagon quotients contain parallel edges that vertex pairs
    /// cannot distinguish); otherwise they are matched by directed vertex
    /// pairs, which is what the vertex-pair-keyed file format supports.
    ///
    /// `edge_length(halfedge, tail, head)` is invoked once per edge on the
    /// canonical halfedge (the one with the smaller index); the twin inherits
    /// the value, so twin symmetry is exact.
    fn assemble(
        genus: usize,
        n_vertices: usize,
        faces: Vec<[usize; 3]>,
        corner_pos: Option<Vec<[C64; 3]>>,
        generated: bool,
        vertex_pos: Option<Vec<C64>>,
        twins: Option<Vec<usize>>,
        edge_length: impl Fn(usize, usize, usize) -> Result<f64>,
    ) -> Result<HyperbolicMesh> {
        let nh = 3 * faces.len();
        let tail = |h: usize| faces[h / 3][h % 3];
        let head = |h: usize| faces[h / 3][(h % 3 + 1) % 3];

        let twin = match twins {
            Some(t) => {
                if t.len() != nh || (0..nh).any(|h| t[h] >= nh || t[t[h]] != h || t[h] == h) {
                    return Err(Error::structural("invalid twin table"));
                }
                t
            }
            None => {
                let mut by_dir: HashMap<(usize, usize), usize> = HashMap::new();
                for h in 0..nh {
                    if by_dir.insert((tail(h), head(h)), h).is_some() {
                        return Err(Error::Structural {
                            message: format!(
                                "non-manifold mesh: directed edge ({}, {}) appears twice",
                                tail(h),
                                head(h)
                            ),
                            offenders: vec![tail(h), head(h)],
                        });
                    }
                }
                let mut twin = vec![usize::MAX; nh];
                for h in 0..nh {
                    match by_dir.get(&(head(h), tail(h))) {
                        Some(&t) => twin[h] = t,
                        None => {
                            return Err(Error::Structural {
                                message: format!(
                                    "boundary or non-manifold edge ({}, {}): no twin halfedge",
                                    tail(h),
                                    head(h)
                                ),
                                offenders: vec![tail(h), head(h)],
                            })
                        }
                    }
                }
                twin
            }
        };

        // lengths, canonical halfedge computes
        let mut length = vec![0.0f64; nh];
        for h in 0..nh {
            if h < twin[h] {
                let l = edge_length(h, tail(h), head(h))?;
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::structural(format!(
                        "edge ({}, {}) has non-positive length {l}",
                        tail(h),
                        head(h)
                    )));
                }
                length[h] = l;
                length[twin[h]] = l;
            }
        }

        // corner angles and areas
        let mut corner = vec![0.0f64; nh];
        let mut face_area = vec![0.0f64; faces.len()];
        for f in 0..faces.len() {
            let l = [length[3 * f], length[3 * f + 1], length[3 * f + 2]];
            // angle at corner i sits between sides i and i+2, opposite side i+1
            for i in 0..3 {
                corner[3 * f + i] = hyp::corner_angle(l[(i + 1) % 3], l[i], l[(i + 2) % 3]);
            }
            face_area[f] =
                std::f64::consts::PI - corner[3 * f] - corner[3 * f + 1] - corner[3 * f + 2];
        }

        // lumped vertex mass
        let mut vertex_weight = vec![0.0f64; n_vertices];
        for f in 0..faces.len() {
            for &v in &faces[f] {
                vertex_weight[v] += face_area[f] / 3.0;
            }
        }

        // counter-clockwise vertex stars. Rotating ccw around the tail of h
        // is twin(prev(h)).
        let prev = |h: usize| 3 * (h / 3) + (h % 3 + 2) % 3;
        let mut some_out = vec![usize::MAX; n_vertices];
        for h in 0..nh {
            some_out[tail(h)] = h;
        }
        let mut out_count = vec![0usize; n_vertices];
        for h in 0..nh {
            out_count[tail(h)] += 1;
        }
        let mut vertex_out = vec![Vec::new(); n_vertices];
        let mut atlas = vec![0.0f64; nh];
        let mut angle_defect = vec![0.0f64; n_vertices];
        for v in 0..n_vertices {
            let h0 = some_out[v];
            if h0 == usize::MAX {
                return Err(Error::Structural {
                    message: format!("isolated vertex {v}"),
                    offenders: vec![v],
                });
            }
            let mut ring = Vec::new();
            let mut angles = Vec::new();
            let mut h = h0;
            let mut acc = 0.0;
            loop {
                ring.push(h);
                angles.push(acc);
                acc += corner[h];
                h = twin[prev(h)];
                if h == h0 {
                    break;
                }
                if ring.len() > nh {
                    return Err(Error::Structural {
                        message: format!("vertex {v} star does not close"),
                        offenders: vec![v],
                    });
                }
            }
            if out_count[v] != ring.len() {
                return Err(Error::Structural {
                    message: format!("vertex {v} has a disconnected star (non-manifold)"),
                    offenders: vec![v],
                });
            }
            angle_defect[v] = hyp::TWO_PI - acc;
            // normalized angular coordinate so the atlas closes exactly
            let scale = hyp::TWO_PI / acc;
            for (h, a) in ring.iter().zip(&angles) {
                atlas[*h] = a * scale;
            }
            vertex_out[v] = ring;
        }

        let mut mesh = HyperbolicMesh {
            genus,
            n_vertices,
            faces,
            twin,
            length,
            corner,
            face_area,
            vertex_weight,
            vertex_out,
            atlas,
            angle_defect,
            chart: Vec::new(),
            corner_pos,
            vertex_pos,
            generated,
        };
        mesh.chart = (0..mesh.n_faces()).map(|f| mesh.build_chart(f)).collect();
        Ok(mesh)
    }

    /// Exact hyperbolic chart of face `f`, centered at the image of the
    /// chart-triangle barycenter.
    fn build_chart(&self, f: usize) -> FaceChart {
        let l01 = self.length[3 * f];
        let l20 = self.length[3 * f + 2];
        // provisional chart centered at vertex 0
        let w0 = C64::new(0.0, 0.0);
        let w1 = C64::new((l01 / 2.0).tanh(), 0.0);
        let a0 = self.corner[3 * f];
        let w2 = C64::from_polar((l20 / 2.0).tanh(), a0);
        // re-center at the Euclidean mean (a point inside the triangle)
        let c = (w0 + w1 + w2) / 3.0;
        let pos = [
            hyp::to_origin(c, w0),
            hyp::to_origin(c, w1),
            hyp::to_origin(c, w2),
        ];
        // affine Wirtinger weights: W_j = (w_{j+1} - w_{j+2}) / (4 i A_euc)
        let area2 = ((pos[1] - pos[0]).conj() * (pos[2] - pos[0])).im; // 2 A_euc
        let denom = C64::new(0.0, 2.0 * area2);
        let wirtinger = [
            (pos[1] - pos[2]) / denom,
            (pos[2] - pos[0]) / denom,
            (pos[0] - pos[1]) / denom,
        ];
        // frame rotations vertex -> chart, computed off the face's own edges
        let mut delta = [0.0f64; 3];
        for i in 0..3 {
            let h = 3 * f + i;
            let dir_chart = hyp::direction(pos[i], pos[(i + 1) % 3]);
            delta[i] = dir_chart - self.atlas[h];
        }
        FaceChart {
            pos,
            wirtinger,
            delta,
        }
    }

    /// Complex dbar coefficient of the affine interpolant of scalar vertex
    /// data over face `f`, in the chart's unit form frame.
    pub fn scalar_dbar_face(&self, f: usize, v: &ScalarField) -> C64 {
        let ch = &self.chart[f];
        let [a, b, c] = self.faces[f];
        let q = ch.wirtinger[0] * v.values[a]
            + ch.wirtinger[1] * v.values[b]
            + ch.wirtinger[2] * v.values[c];
        q / 2.0
    }
}

/// Discrete Dirichlet pairing `∫ ∇v1 · ∇v2 dA` from per-face chart
/// gradients of the piecewise-affine interpolants.
pub fn laplacian_quadratic_form(
    mesh: &HyperbolicMesh,
    v1: &ScalarField,
    v2: &ScalarField,
) -> Result<f64> {
    if v1.len() != mesh.n_vertices || v2.len() != mesh.n_vertices {
        return Err(Error::Domain(format!(
            "field length {} / {} does not match vertex count {}",
            v1.len(),
            v2.len(),
            mesh.n_vertices
        )));
    }
    let mut acc = 0.0;
    for f in 0..mesh.n_faces() {
        let ch = &mesh.chart[f];
        let area2 = ((ch.pos[1] - ch.pos[0]).conj() * (ch.pos[2] - ch.pos[0])).im;
        if !(area2 > 0.0) {
            return Err(Error::numerical(format!(
                "degenerate chart triangle on face {f}"
            )));
        }
        let q1 = mesh.scalar_dbar_face(f, v1);
        let q2 = mesh.scalar_dbar_face(f, v2);
        acc += mesh.face_area[f] * 4.0 * (q1.conj() * q2).re;
    }
    Ok(acc)
}

/// Triplets of the stiffness matrix K with `v^T K w` equal to the Dirichlet
/// pairing.
pub fn stiffness_triplets(mesh: &HyperbolicMesh) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(9 * mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let ch = &mesh.chart[f];
        let vs = mesh.faces[f];
        for i in 0..3 {
            for j in 0..3 {
                let kij = mesh.face_area[f] * (ch.wirtinger[i].conj() * ch.wirtinger[j]).re;
                t.push((vs[i], vs[j], kij));
            }
        }
    }
    t
}

/// Lumped-mass integral `Σ_v weight_v f_v`.
pub fn integrate(mesh: &HyperbolicMesh, f: &ScalarField) -> Result<f64> {
    if f.len() != mesh.n_vertices {
        return Err(Error::Domain(format!(
            "field length {} does not match vertex count {}",
            f.len(),
            mesh.n_vertices
        )));
    }
    Ok(mesh
        .vertex_weight
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * v)
        .sum())
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Per-invariant diagnostic for a mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub euler_characteristic: i64,
    pub euler_ok: bool,
    pub total_area: f64,
    pub area_mismatch: f64,
    pub area_ok: bool,
    pub worst_angle_defect: f64,
    pub angle_ok: bool,
    pub triangle_violations: Vec<usize>,
    pub nonpositive_areas: Vec<usize>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

/// Angle-sum tolerance for generated meshes.
pub const MESH_ANGLE_TOL_GENERATED: f64 = 1e-9;
/// Angle-sum warning threshold for loaded meshes.
pub const MESH_ANGLE_WARN_LOADED: f64 = 1e-3;
/// Angle-sum rejection threshold for loaded meshes.
pub const MESH_ANGLE_REJECT_LOADED: f64 = 1e-1;
pub const MESH_AREA_TOL: f64 = 1e-8;

/// Check every mesh invariant and report measured defects.
pub fn validate_mesh(mesh: &HyperbolicMesh) -> MeshReport {
    let chi = mesh.euler_characteristic();
    let euler_ok = chi == 2 - 2 * mesh.genus as i64;

    let total_area = mesh.total_area();
    let target = 4.0 * std::f64::consts::PI * (mesh.genus as f64 - 1.0);
    let area_mismatch = (total_area - target).abs();

    let worst_angle_defect = mesh
        .angle_defect
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));

    let mut triangle_violations = Vec::new();
    let mut nonpositive_areas = Vec::new();
    for f in 0..mesh.n_faces() {
        let l = [
            mesh.length[3 * f],
            mesh.length[3 * f + 1],
            mesh.length[3 * f + 2],
        ];
        if !hyp::triangle_inequality(l[0], l[1], l[2]) {
            triangle_violations.push(f);
        }
        if !(mesh.face_area[f] > 0.0) {
            nonpositive_areas.push(f);
        }
    }

    let angle_tol = if mesh.generated {
        MESH_ANGLE_TOL_GENERATED
    } else {
        MESH_ANGLE_REJECT_LOADED
    };
    let mut warnings = Vec::new();
    if !mesh.generated && worst_angle_defect > MESH_ANGLE_WARN_LOADED {
        warnings.push(format!(
            "angle-sum defect {worst_angle_defect:.3e} exceeds warning threshold {MESH_ANGLE_WARN_LOADED:.0e}"
        ));
    }
    let angle_ok = worst_angle_defect <= angle_tol;
    // cone defects curve the metric away from area 4*pi*(g-1); scale the
    // acceptable mismatch with the measured defect for loaded meshes
    let area_tol = if mesh.generated {
        MESH_AREA_TOL
    } else {
        MESH_AREA_TOL + worst_angle_defect * mesh.n_vertices as f64
    };
    let area_ok = area_mismatch <= area_tol;

    let passed = euler_ok
        && area_ok
        && angle_ok
        && triangle_violations.is_empty()
        && nonpositive_areas.is_empty();
    MeshReport {
        euler_characteristic: chi,
        euler_ok,
        total_area,
        area_mismatch,
        area_ok,
        worst_angle_defect,
        angle_ok,
        triangle_violations,
        nonpositive_areas,
        warnings,
        passed,
    }
}

// ---------------------------------------------------------------------------
// Generator: regular octagon with opposite-side pairings, genus 2
// ---------------------------------------------------------------------------

const PARAM_FULL: u32 = 1 << 30;

/// Point identity during subdivision, before quotient identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum PKey {
    Center,
    /// Octagon corner instance 0..8.
    Corner(u8),
    /// On boundary side `side` (0..8), at parameter num/PARAM_FULL from
    /// corner `side` to corner `side+1`.
    Side { side: u8, num: u32 },
    /// On the spoke from the center to corner `spoke`, at num/PARAM_FULL.
    Spoke { spoke: u8, num: u32 },
    /// Interior point created during subdivision.
    Inner(u32),
}

/// Vertex identity after the side pairings (side i glued to side i+4
/// orientation-reversing; all corners identified).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VKey {
    Center,
    Corner,
    Side { side: u8, num: u32 },
    Spoke { spoke: u8, num: u32 },
    Inner(u32),
}

fn canonical(p: PKey) -> VKey {
    match p {
        PKey::Center => VKey::Center,
        PKey::Corner(_) => VKey::Corner,
        PKey::Side { side, num } => {
            if side < 4 {
                VKey::Side { side, num }
            } else {
                VKey::Side {
                    side: side - 4,
                    num: PARAM_FULL - num,
                }
            }
        }
        PKey::Spoke { spoke, num } => VKey::Spoke { spoke, num },
        PKey::Inner(id) => VKey::Inner(id),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ETag {
    Side(u8),
    Spoke(u8),
    Inner,
}

#[derive(Debug, Clone)]
struct GenTri {
    pts: [(PKey, C64); 3],
    /// Tag of edge (i, i+1).
    etag: [ETag; 3],
}

fn boundary_param(tag: ETag, p: PKey) -> u32 {
    match (tag, p) {
        (ETag::Side(s), PKey::Corner(j)) => {
            if j == s {
                0
            } else {
                PARAM_FULL
            }
        }
        (ETag::Side(_), PKey::Side { num, .. }) => num,
        (ETag::Spoke(_), PKey::Center) => 0,
        (ETag::Spoke(_), PKey::Corner(_)) => PARAM_FULL,
        (ETag::Spoke(_), PKey::Spoke { num, .. }) => num,
        _ => unreachable!("point off its tagged edge"),
    }
}

/// Edge identity in the quotient, including the side pairings. Twins are
/// matched on these keys because the coarse quotients contain parallel
/// edges (two distinct edges with the same vertex pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    Side { side: u8, lo: u32, hi: u32 },
    Spoke { spoke: u8, lo: u32, hi: u32 },
    Inner { a: PKey, b: PKey },
}

/// (key, runs-forward) for the halfedge from `ka` to `kb` with tag `tag`.
fn edge_key_oriented(ka: PKey, kb: PKey, tag: ETag) -> (EdgeKey, bool) {
    match tag {
        ETag::Side(s) => {
            let (mut pa, mut pb) = (boundary_param(tag, ka), boundary_param(tag, kb));
            let side = s % 4;
            if s >= 4 {
                pa = PARAM_FULL - pa;
                pb = PARAM_FULL - pb;
            }
            let fwd = pa < pb;
            let (lo, hi) = if fwd { (pa, pb) } else { (pb, pa) };
            (EdgeKey::Side { side, lo, hi }, fwd)
        }
        ETag::Spoke(s) => {
            let (pa, pb) = (boundary_param(tag, ka), boundary_param(tag, kb));
            let fwd = pa < pb;
            let (lo, hi) = if fwd { (pa, pb) } else { (pb, pa) };
            (EdgeKey::Spoke { spoke: s, lo, hi }, fwd)
        }
        ETag::Inner => {
            let fwd = ka < kb;
            let (a, b) = if fwd { (ka, kb) } else { (kb, ka) };
            (EdgeKey::Inner { a, b }, fwd)
        }
    }
}

fn subdivide(tris: &[GenTri], inner_counter: &mut u32) -> Vec<GenTri> {
    let mut cache: HashMap<(PKey, PKey, ETag), (PKey, C64)> = HashMap::new();
    let mut out = Vec::with_capacity(4 * tris.len());
    for t in tris {
        let mut mids = [(PKey::Center, C64::new(0.0, 0.0)); 3];
        for i in 0..3 {
            let (ka, pa) = t.pts[i];
            let (kb, pb) = t.pts[(i + 1) % 3];
            let tag = t.etag[i];
            let key = if ka <= kb {
                (ka, kb, tag)
            } else {
                (kb, ka, tag)
            };
            let entry = cache.entry(key).or_insert_with(|| {
                let pos = hyp::midpoint(pa, pb);
                let k = match tag {
                    ETag::Side(s) => PKey::Side {
                        side: s,
                        num: (boundary_param(tag, ka) + boundary_param(tag, kb)) / 2,
                    },
                    ETag::Spoke(s) => PKey::Spoke {
                        spoke: s,
                        num: (boundary_param(tag, ka) + boundary_param(tag, kb)) / 2,
                    },
                    ETag::Inner => {
                        let id = *inner_counter;
                        *inner_counter += 1;
                        PKey::Inner(id)
                    }
                };
                (k, pos)
            });
            mids[i] = *entry;
        }
        let p = &t.pts;
        let tg = &t.etag;
        out.push(GenTri {
            pts: [p[0], mids[0], mids[2]],
            etag: [tg[0], ETag::Inner, tg[2]],
        });
        out.push(GenTri {
            pts: [p[1], mids[1], mids[0]],
            etag: [tg[1], ETag::Inner, tg[0]],
        });
        out.push(GenTri {
            pts: [p[2], mids[2], mids[1]],
            etag: [tg[2], ETag::Inner, tg[1]],
        });
        out.push(GenTri {
            pts: [mids[0], mids[1], mids[2]],
            etag: [ETag::Inner, ETag::Inner, ETag::Inner],
        });
    }
    out
}

/// Generate the genus-2 surface obtained from the regular hyperbolic
/// octagon (vertex angle pi/4) with opposite sides identified, subdivided
/// `level` times by geodesic midpoints inside the Poincaré disk.
pub fn generate_genus2_mesh(level: u32) -> Result<HyperbolicMesh> {
    if level > 7 {
        return Err(Error::Resource(format!(
            "refinement level {level} exceeds the supported maximum 7"
        )));
    }
    // regular {8,8} octagon: corner Euclidean radius 2^(-1/4)
    let r8 = 2.0f64.powf(-0.25);
    let corners: Vec<C64> = (0..8)
        .map(|j| C64::from_polar(r8, (2.0 * j as f64 + 1.0) * std::f64::consts::PI / 8.0))
        .collect();

    let mut tris: Vec<GenTri> = (0..8)
        .map(|j| {
            let jn = (j + 1) % 8;
            GenTri {
                pts: [
                    (PKey::Center, C64::new(0.0, 0.0)),
                    (PKey::Corner(j as u8), corners[j]),
                    (PKey::Corner(jn as u8), corners[jn]),
                ],
                etag: [
                    ETag::Spoke(j as u8),
                    ETag::Side(j as u8),
                    ETag::Spoke(jn as u8),
                ],
            }
        })
        .collect();

    let mut inner_counter = 0u32;
    for _ in 0..level {
        tris = subdivide(&tris, &mut inner_counter);
    }

    // quotient identification
    let mut vid: HashMap<VKey, usize> = HashMap::new();
    let mut vertex_pos: Vec<C64> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(tris.len());
    let mut corner_positions: Vec<[C64; 3]> = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut tri = [0usize; 3];
        let mut cp = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let (k, pos) = t.pts[i];
            let n = vid.len();
            let idx = *vid.entry(canonical(k)).or_insert_with(|| {
                vertex_pos.push(pos);
                n
            });
            tri[i] = idx;
            cp[i] = pos;
        }
        faces.push(tri);
        corner_positions.push(cp);
    }
    let n_vertices = vid.len();

    // twins from edge identities (the coarse levels have parallel edges)
    let mut by_key: HashMap<EdgeKey, Vec<(usize, bool)>> = HashMap::new();
    for (f, t) in tris.iter().enumerate() {
        for i in 0..3 {
            let (key, fwd) = edge_key_oriented(t.pts[i].0, t.pts[(i + 1) % 3].0, t.etag[i]);
            by_key.entry(key).or_default().push((3 * f + i, fwd));
        }
    }
    let mut twins = vec![usize::MAX; 3 * tris.len()];
    for (key, hs) in &by_key {
        if hs.len() != 2 || hs[0].1 == hs[1].1 {
            return Err(Error::structural(format!(
                "generator produced a non-manifold edge {key:?}"
            )));
        }
        twins[hs[0].0] = hs[1].0;
        twins[hs[1].0] = hs[0].0;
    }

    let cp = corner_positions.clone();
    HyperbolicMesh::assemble(
        2,
        n_vertices,
        faces,
        Some(corner_positions),
        true,
        Some(vertex_pos),
        Some(twins),
        move |h, _tail, _head| {
            let f = h / 3;
            let i = h % 3;
            Ok(hyp::dist(cp[f][i], cp[f][(i + 1) % 3]))
        },
    )
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MeshFile {
    genus: usize,
    vertices: usize,
    faces: Vec<[usize; 3]>,
    edge_lengths: std::collections::BTreeMap<String, f64>,
}

fn edge_key(a: usize, b: usize) -> String {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    format!("{lo}-{hi}")
}

/// Canonical serialization of a mesh (used both for files and hashing).
///
/// The vertex-pair-keyed format cannot express parallel edges, which the
/// octagon quotient has below subdivision level 2; those meshes are rejected.
pub fn mesh_to_json(mesh: &HyperbolicMesh) -> Result<String> {
    let mut edge_lengths = std::collections::BTreeMap::new();
    for h in 0..mesh.n_halfedges() {
        if h < mesh.twin[h] {
            let key = edge_key(mesh.tail(h), mesh.head(h));
            if edge_lengths.insert(key, mesh.length[h]).is_some() {
                return Err(Error::Domain(format!(
                    "mesh has parallel edges between vertices {} and {}; \
                     the vertex-pair file format cannot represent it",
                    mesh.tail(h),
                    mesh.head(h)
                )));
            }
        }
    }
    let file = MeshFile {
        genus: mesh.genus,
        vertices: mesh.n_vertices,
        faces: mesh.faces.clone(),
        edge_lengths,
    };
    Ok(serde_json::to_string_pretty(&file).expect("mesh serialization cannot fail"))
}

/// Parse a mesh from its structured-text form, rejecting meshes whose
/// angle-sum defect exceeds the hard threshold.
pub fn mesh_from_json(text: &str) -> Result<HyperbolicMesh> {
    let file: MeshFile = serde_json::from_str(text)?;
    if file.genus < 2 {
        return Err(Error::structural(format!(
            "genus {} < 2: surface does not admit a hyperbolic metric",
            file.genus
        )));
    }
    for (f, tri) in file.faces.iter().enumerate() {
        for &v in tri {
            if v >= file.vertices {
                return Err(Error::Structural {
                    message: format!("face {f} references vertex {v} out of range"),
                    offenders: vec![f],
                });
            }
        }
    }
    let lengths = file.edge_lengths;
    let mesh = HyperbolicMesh::assemble(
        file.genus,
        file.vertices,
        file.faces,
        None,
        false,
        None,
        None,
        |_h, a, b| {
            lengths
                .get(&edge_key(a, b))
                .copied()
                .ok_or_else(|| Error::structural(format!("missing edge length for edge ({a}, {b})")))
        },
    )?;
    let worst = mesh.angle_defect.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if worst > MESH_ANGLE_REJECT_LOADED {
        return Err(Error::structural(format!(
            "angle-sum defect {worst:.3e} exceeds rejection threshold {MESH_ANGLE_REJECT_LOADED:.0e}; \
             the surface is too far from hyperbolic"
        )));
    }
    Ok(mesh)
}

/// SHA-256 of the canonical serialization.
pub fn mesh_hash(mesh: &HyperbolicMesh) -> String {
    // hash the canonical file form when it exists, else a canonical dump
    let text = mesh_to_json(mesh).unwrap_or_else(|_| {
        let mut parts = vec![format!("genus={};v={}", mesh.genus, mesh.n_vertices)];
        for (f, tri) in mesh.faces.iter().enumerate() {
            parts.push(format!(
                "f{}={},{},{};l={:.17e},{:.17e},{:.17e}",
                f,
                tri[0],
                tri[1],
                tri[2],
                mesh.length[3 * f],
                mesh.length[3 * f + 1],
                mesh.length[3 * f + 2]
            ));
        }
        parts.join(";")
    });
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex_string(&hasher.finalize())
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn euler_characteristic_genus2() {
        let mesh = generate_genus2_mesh(0).unwrap();
        assert_eq!(mesh.euler_characteristic(), -2);
        assert_eq!(mesh.n_vertices, 2);
        assert_eq!(mesh.n_faces(), 8);
        assert_eq!(mesh.n_edges(), 12);
    }

    #[test]
    fn gauss_bonnet_all_levels() {
        for level in 0..4 {
            let mesh = generate_genus2_mesh(level).unwrap();
            assert_relative_eq!(mesh.total_area(), 4.0 * PI, epsilon = 1e-8);
            let wsum: f64 = mesh.vertex_weight.iter().sum();
            assert_relative_eq!(wsum, 4.0 * PI, epsilon = 1e-8);
        }
    }

    #[test]
    fn refinement_grows_vertices_and_shrinks_edges() {
        // independent count oracle: F = 8*4^L, E = 12*4^L, V = E - F - 2
        let mut prev_v = 0usize;
        let mut prev_h = f64::INFINITY;
        for level in 0..4u32 {
            let mesh = generate_genus2_mesh(level).unwrap();
            let f = 8 * 4usize.pow(level);
            let e = 12 * 4usize.pow(level);
            assert_eq!(mesh.n_faces(), f);
            assert_eq!(mesh.n_edges(), e);
            assert_eq!(mesh.n_vertices, e - f - 2);
            assert!(mesh.n_vertices > prev_v);
            let h = mesh.max_edge_length();
            assert!(h < prev_h);
            prev_v = mesh.n_vertices;
            prev_h = h;
        }
    }

    #[test]
    fn generated_mesh_validates() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let report = validate_mesh(&mesh);
        assert!(report.passed, "{report:?}");
        assert!(report.worst_angle_defect <= MESH_ANGLE_TOL_GENERATED);
    }

    #[test]
    fn corrupted_mesh_reports_failure() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let mut file: MeshFile = serde_json::from_str(&mesh_to_json(&mesh).unwrap()).unwrap();
        let key = file.edge_lengths.keys().next().unwrap().clone();
        *file.edge_lengths.get_mut(&key).unwrap() *= 2.0;
        let text = serde_json::to_string(&file).unwrap();
        match mesh_from_json(&text) {
            Ok(bad) => {
                let report = validate_mesh(&bad);
                assert!(!report.passed);
                assert!(
                    !report.triangle_violations.is_empty()
                        || report.worst_angle_defect > MESH_ANGLE_WARN_LOADED
                );
            }
            Err(_) => {} // rejection is also an acceptable outcome
        }
    }

    #[test]
    fn loaded_mesh_with_small_defect_warns() {
        // perturb one edge slightly: small defect should warn, not reject
        let mesh = generate_genus2_mesh(2).unwrap();
        let mut file: MeshFile = serde_json::from_str(&mesh_to_json(&mesh).unwrap()).unwrap();
        let key = file.edge_lengths.keys().nth(3).unwrap().clone();
        *file.edge_lengths.get_mut(&key).unwrap() *= 1.0 + 2e-3;
        let text = serde_json::to_string(&file).unwrap();
        let loaded = mesh_from_json(&text).expect("small defect must load");
        let report = validate_mesh(&loaded);
        assert!(report.worst_angle_defect > 1e-5);
        assert!(report.worst_angle_defect < MESH_ANGLE_REJECT_LOADED);
    }

    #[test]
    fn mesh_roundtrip_preserves_hash() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let text = mesh_to_json(&mesh).unwrap();
        let loaded = mesh_from_json(&text).unwrap();
        assert_eq!(mesh_hash(&mesh), mesh_hash(&loaded));
        assert_relative_eq!(loaded.total_area(), 4.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn laplacian_kernel_and_psd() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let ones = ScalarField::constant(mesh.n_vertices, 3.7);
        let mut rng = crate::linalg::rng_from_seed(9);
        let v =
            ScalarField::from_values(crate::linalg::random_real_vec(&mut rng, mesh.n_vertices));
        let q = laplacian_quadratic_form(&mesh, &ones, &v).unwrap();
        assert!(q.abs() < 1e-12, "constants must be annihilated, got {q}");
        let qq = laplacian_quadratic_form(&mesh, &v, &v).unwrap();
        assert!(qq >= 0.0);
        let w =
            ScalarField::from_values(crate::linalg::random_real_vec(&mut rng, mesh.n_vertices));
        let a = laplacian_quadratic_form(&mesh, &v, &w).unwrap();
        let b = laplacian_quadratic_form(&mesh, &w, &v).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_matches_per_face_gradient_oracle() {
        // independent dense assembly: per-face chart gradients of hat
        // functions, computed from scratch via the rotated-edge formula
        let mesh = generate_genus2_mesh(2).unwrap();
        let n = mesh.n_vertices;
        let mut dense = vec![vec![0.0f64; n]; n];
        for f in 0..mesh.n_faces() {
            let ch = &mesh.chart[f];
            let p = ch.pos;
            let a2 = ((p[1] - p[0]).conj() * (p[2] - p[0])).im;
            let grads: Vec<[f64; 2]> = (0..3)
                .map(|i| {
                    let e = p[(i + 2) % 3] - p[(i + 1) % 3];
                    [-e.im / a2, e.re / a2]
                })
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    let dot = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
                    dense[mesh.faces[f][i]][mesh.faces[f][j]] += mesh.face_area[f] * dot / 4.0;
                }
            }
        }
        let mut rng = crate::linalg::rng_from_seed(21);
        let v = ScalarField::from_values(crate::linalg::random_real_vec(&mut rng, n));
        let w = ScalarField::from_values(crate::linalg::random_real_vec(&mut rng, n));
        let via_form = laplacian_quadratic_form(&mesh, &v, &w).unwrap();
        let mut via_dense = 0.0;
        for i in 0..n {
            for j in 0..n {
                via_dense += v.values[i] * dense[i][j] * w.values[j];
            }
        }
        assert_relative_eq!(via_form, via_dense, max_relative = 1e-10);
    }

    #[test]
    fn integrate_constant_is_total_area() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let one = ScalarField::constant(mesh.n_vertices, 1.0);
        assert_relative_eq!(integrate(&mesh, &one).unwrap(), 4.0 * PI, epsilon = 1e-8);
        let zero = ScalarField::zeros(mesh.n_vertices);
        assert_eq!(integrate(&mesh, &zero).unwrap(), 0.0);
    }

    fn bump(z: C64) -> f64 {
        let s2 = z.norm_sqr() / (0.6 * 0.6);
        if s2 < 1.0 {
            (1.0 - s2).powi(3)
        } else {
            0.0
        }
    }

    #[test]
    fn integrate_matches_face_midpoint_quadrature_on_smooth_field() {
        let mut prev_err = f64::INFINITY;
        for level in [1u32, 2, 3] {
            let mesh = generate_genus2_mesh(level).unwrap();
            let pos = mesh.vertex_pos.as_ref().unwrap();
            let f = ScalarField::from_values(pos.iter().map(|&z| bump(z)).collect());
            let lumped = integrate(&mesh, &f).unwrap();
            let cp = mesh.corner_pos.as_ref().unwrap();
            let mid: f64 = (0..mesh.n_faces())
                .map(|fi| {
                    let c = (cp[fi][0] + cp[fi][1] + cp[fi][2]) / 3.0;
                    mesh.face_area[fi] * bump(c)
                })
                .sum();
            let err = (lumped - mid).abs();
            assert!(err < prev_err || err < 1e-10);
            prev_err = err;
        }
        assert!(prev_err < 2e-2);
    }

    #[test]
    fn dirichlet_energy_converges_to_analytic_value() {
        // conformal invariance: E(f) = 2 pi Int_0^1 f'(s)^2 s ds = 1.2 pi for
        // the cubic bump of Euclidean radius 0.6
        let exact = 1.2 * PI;
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for level in [2u32, 3, 4] {
            let mesh = generate_genus2_mesh(level).unwrap();
            let pos = mesh.vertex_pos.as_ref().unwrap();
            let f = ScalarField::from_values(pos.iter().map(|&z| bump(z)).collect());
            let e = laplacian_quadratic_form(&mesh, &f, &f).unwrap();
            errs.push((e - exact).abs());
            hs.push(mesh.max_edge_length());
        }
        let order = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
        assert!(
            order >= 1.0,
            "convergence order {order:.2} below 1 (errors {errs:?})"
        );
    }

    #[test]
    fn spectral_gap_stable_under_refinement() {
        let mut gaps = Vec::new();
        for level in [2u32, 3] {
            let mesh = generate_genus2_mesh(level).unwrap();
            let n = mesh.n_vertices;
            let mut k = nalgebra::DMatrix::<f64>::zeros(n, n);
            for (i, j, v) in stiffness_triplets(&mesh) {
                k[(i, j)] += v;
            }
            let (vals, _) = crate::linalg::sym_eigs_with_vectors(&k, &mesh.vertex_weight);
            assert!(vals[0].abs() < 1e-10, "lowest eigenvalue must be 0");
            assert!(vals[1] > 0.0);
            gaps.push(vals[1]);
        }
        let rel = (gaps[1] - gaps[0]).abs() / gaps[1];
        assert!(
            rel < 0.10,
            "spectral gap drifted {rel:.3} across levels: {gaps:?}"
        );
    }

    #[test]
    fn level_guard() {
        assert!(matches!(generate_genus2_mesh(8), Err(Error::Resource(_))));
    }

    #[test]
    fn scalar_dbar_energy_identity() {
        // Q(v,v) == 4 * sum_f area * |dbar v|_f^2, exactly
        let mesh = generate_genus2_mesh(2).unwrap();
        let mut rng = crate::linalg::rng_from_seed(33);
        let v =
            ScalarField::from_values(crate::linalg::random_real_vec(&mut rng, mesh.n_vertices));
        let q = laplacian_quadratic_form(&mesh, &v, &v).unwrap();
        let e: f64 = (0..mesh.n_faces())
            .map(|f| mesh.face_area[f] * 4.0 * mesh.scalar_dbar_face(f, &v).norm_sqr())
            .sum();
        assert_relative_eq!(q, e, max_relative = 1e-14);
    }
}
