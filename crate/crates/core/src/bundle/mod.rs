//! Discrete calculus on the line bundle `E = (T^{1,0})^{(k-1)}`.
//!
//! The connection is the (k-1)-st power of the intrinsic Levi-Civita
//! transport of tangent frames, so each face carries curvature exactly
//! `-(k-1) * area`. Sections are stored per vertex and E-valued (0,1)-forms
//! per face, both in metric-orthonormal frames, so pointwise norms are plain
//! moduli. The dbar stencil takes the three vertex coefficients into the
//! face's exact Poincaré chart (frame rotation + the real radial gauge of the
//! parallel frames) and reads off the antilinear coefficient of the affine
//! interpolant. Its adjoint is exact with respect to the stated quadratures,
//! which is what makes the optimality residuals downstream meaningful at the
//! 1e-11 level.

mod basis;

pub use basis::{holomorphic_basis, holomorphic_basis_with_spectrum, BasisSpectrum};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mesh_hash, HyperbolicMesh};
use crate::hyp;
use crate::linalg::{self, CsrC};

pub type C64 = Complex64;

/// Section of E: one complex coefficient per vertex in the orthonormal
/// vertex frame, so `||eta||` pointwise is `|coef|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub coef: Vec<C64>,
}

/// E-valued (0,1)-form: one complex coefficient per face in the orthonormal
/// face-chart frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FormE {
    pub coef: Vec<C64>,
}

/// Section of E* tensor K_X (a k-differential): one complex coefficient per
/// face.
#[derive(Debug, Clone, PartialEq)]
pub struct KDifferential {
    pub coef: Vec<C64>,
}

macro_rules! field_impl {
    ($t:ident) => {
        impl $t {
            pub fn zeros(n: usize) -> Self {
                $t {
                    coef: vec![C64::new(0.0, 0.0); n],
                }
            }

            pub fn len(&self) -> usize {
                self.coef.len()
            }

            pub fn is_empty(&self) -> bool {
                self.coef.is_empty()
            }

            pub fn scale(&self, s: C64) -> Self {
                $t {
                    coef: self.coef.iter().map(|z| z * s).collect(),
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                $t {
                    coef: self
                        .coef
                        .iter()
                        .zip(&other.coef)
                        .map(|(a, b)| a + b)
                        .collect(),
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                $t {
                    coef: self
                        .coef
                        .iter()
                        .zip(&other.coef)
                        .map(|(a, b)| a - b)
                        .collect(),
                }
            }

            pub fn sup_norm(&self) -> f64 {
                self.coef.iter().fold(0.0, |m, z| m.max(z.norm()))
            }

            pub fn is_finite(&self) -> bool {
                self.coef.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }
        }
    };
}

field_impl!(Section);
field_impl!(FormE);
field_impl!(KDifferential);

/// Discrete unitary connection on E and the assembled dbar operator.
#[derive(Debug, Clone)]
pub struct BundleData {
    pub k: u32,
    /// Weight-one Levi-Civita transport angle per halfedge (tail frame to
    /// head frame), exactly antisymmetric under twin.
    pub levi_civita: Vec<f64>,
    /// Weight-(k-1) transport angle per halfedge, wrapped to (-pi, pi],
    /// exactly antisymmetric under twin.
    pub transport: Vec<f64>,
    /// The dbar operator as an F x V complex matrix.
    pub dbar_matrix: CsrC,
}

/// Build the connection and dbar stencil for `E = (T^{1,0})^{(k-1)}`.
pub fn build_bundle(mesh: &HyperbolicMesh, k: u32) -> Result<BundleData> {
    if k < 2 {
        return Err(Error::Domain(format!("bundle weight k = {k} must be >= 2")));
    }
    let nh = mesh.n_halfedges();
    let m = (k - 1) as f64;
    let mut levi_civita = vec![0.0f64; nh];
    let mut transport = vec![0.0f64; nh];
    for h in 0..nh {
        let t = mesh.twin[h];
        if h < t {
            // transport along h: a direction with atlas angle phi at the tail
            // arrives with atlas angle phi + r at the head
            let r = hyp::wrap_angle(mesh.atlas[t] + std::f64::consts::PI - mesh.atlas[h]);
            levi_civita[h] = r;
            levi_civita[t] = -r;
            let rk = hyp::wrap_angle(m * r);
            transport[h] = rk;
            transport[t] = -rk;
        }
    }
    let dbar_matrix = assemble_dbar_matrix(mesh, k as i64 - 1);
    Ok(BundleData {
        k,
        levi_civita,
        transport,
        dbar_matrix,
    })
}

/// Assemble the F x V dbar matrix for sections of weight `m` (tensor power
/// of T^{1,0}; negative m means powers of the canonical bundle).
///
/// Entry (f, j): 0.5 * W_j * exp(i m delta_j) * (1 - |w_j|^2)^m, where W are
/// the affine Wirtinger weights of the face chart, delta the frame rotation
/// into the chart, and the last factor the radial gauge of the parallel
/// frames of weight m.
pub(crate) fn assemble_dbar_matrix(mesh: &HyperbolicMesh, m: i64) -> CsrC {
    let mut triplets = Vec::with_capacity(3 * mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let ch = &mesh.chart[f];
        for j in 0..3 {
            let gauge = (1.0 - ch.pos[j].norm_sqr()).powi(m as i32);
            let phase = C64::from_polar(1.0, m as f64 * ch.delta[j]);
            let val = 0.5 * ch.wirtinger[j] * phase * gauge;
            triplets.push((f, mesh.faces[f][j], val));
        }
    }
    CsrC::from_triplets(mesh.n_faces(), mesh.n_vertices, triplets)
}

/// dbar of a section, one coefficient per face.
pub fn dbar(mesh: &HyperbolicMesh, bundle: &BundleData, eta: &Section) -> Result<FormE> {
    if eta.len() != mesh.n_vertices {
        return Err(Error::Domain(format!(
            "section length {} does not match vertex count {}",
            eta.len(),
            mesh.n_vertices
        )));
    }
    Ok(FormE {
        coef: bundle.dbar_matrix.matvec(&eta.coef),
    })
}

/// Adjoint of dbar with a positive per-face weight: the unique section
/// `zeta` with `<beta, dbar l>_{area * weight} = <zeta, l>_{vertex mass}`
/// for every section `l`.
pub fn dbar_adjoint(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    beta: &FormE,
    face_weight: &[f64],
) -> Result<Section> {
    if beta.len() != mesh.n_faces() || face_weight.len() != mesh.n_faces() {
        return Err(Error::Domain(
            "form or weight length does not match face count".into(),
        ));
    }
    let weighted: Vec<C64> = (0..mesh.n_faces())
        .map(|f| beta.coef[f] * (mesh.face_area[f] * face_weight[f]))
        .collect();
    let mut coef = bundle.dbar_matrix.adjoint_matvec(&weighted);
    for (v, z) in coef.iter_mut().enumerate() {
        *z /= mesh.vertex_weight[v];
    }
    Ok(Section { coef })
}

/// Hodge star `*_E`: conjugate-linear isometry from E-valued (0,1)-forms to
/// k-differentials. In the aligned orthonormal frames it is plain
/// conjugation, so the pairing identity `∫ *b1 ∧ b2 = <b1, b2> dA` holds
/// exactly componentwise.
pub fn hodge_star_e(beta: &FormE) -> KDifferential {
    KDifferential {
        coef: beta.coef.iter().map(|z| z.conj()).collect(),
    }
}

/// Inverse Hodge star.
pub fn hodge_star_inv(q: &KDifferential) -> FormE {
    FormE {
        coef: q.coef.iter().map(|z| z.conj()).collect(),
    }
}

/// `∫ alpha ∧ beta` for a k-differential and an E-valued (0,1)-form.
pub fn wedge_integral(mesh: &HyperbolicMesh, alpha: &KDifferential, beta: &FormE) -> C64 {
    (0..mesh.n_faces())
        .map(|f| alpha.coef[f] * beta.coef[f] * mesh.face_area[f])
        .sum()
}

/// Hermitian products (conjugate-linear in the first slot).
pub fn section_inner(mesh: &HyperbolicMesh, a: &Section, b: &Section) -> C64 {
    (0..mesh.n_vertices)
        .map(|v| a.coef[v].conj() * b.coef[v] * mesh.vertex_weight[v])
        .sum()
}

pub fn form_inner(mesh: &HyperbolicMesh, a: &FormE, b: &FormE) -> C64 {
    (0..mesh.n_faces())
        .map(|f| a.coef[f].conj() * b.coef[f] * mesh.face_area[f])
        .sum()
}

pub fn form_inner_weighted(mesh: &HyperbolicMesh, w: &[f64], a: &FormE, b: &FormE) -> C64 {
    (0..mesh.n_faces())
        .map(|f| a.coef[f].conj() * b.coef[f] * mesh.face_area[f] * w[f])
        .sum()
}

pub fn kdiff_inner(mesh: &HyperbolicMesh, a: &KDifferential, b: &KDifferential) -> C64 {
    (0..mesh.n_faces())
        .map(|f| a.coef[f].conj() * b.coef[f] * mesh.face_area[f])
        .sum()
}

pub fn section_norm(mesh: &HyperbolicMesh, a: &Section) -> f64 {
    section_inner(mesh, a, a).re.sqrt()
}

pub fn form_norm(mesh: &HyperbolicMesh, a: &FormE) -> f64 {
    form_inner(mesh, a, a).re.sqrt()
}

pub fn kdiff_norm(mesh: &HyperbolicMesh, a: &KDifferential) -> f64 {
    kdiff_inner(mesh, a, a).re.sqrt()
}

/// Weight-one holonomy angle of a face: the wrapped sum of its three
/// Levi-Civita transport angles. Equals minus the face area.
pub fn face_holonomy1(_mesh: &HyperbolicMesh, bundle: &BundleData, f: usize) -> f64 {
    hyp::wrap_angle(
        bundle.levi_civita[3 * f] + bundle.levi_civita[3 * f + 1] + bundle.levi_civita[3 * f + 2],
    )
}

/// Total weight-(k-1) holonomy: per-face angles are wrapped first, then
/// scaled and accumulated, so the Chern-Weil total is not reduced mod 2*pi.
pub fn total_holonomy(mesh: &HyperbolicMesh, bundle: &BundleData) -> f64 {
    let m = (bundle.k - 1) as f64;
    (0..mesh.n_faces())
        .map(|f| m * face_holonomy1(mesh, bundle, f))
        .sum()
}

/// Linear-solver configuration for the SPD systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    ConjugateGradient,
}

/// Hodge decomposition: `beta = beta0 + dbar(eta0)` with `dbar* beta0 = 0`
/// for the unit-weight adjoint. Solvable because dbar has trivial kernel.
pub fn harmonic_projection(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    beta: &FormE,
) -> Result<(FormE, Section)> {
    harmonic_projection_with(mesh, bundle, beta, SolverKind::Direct)
}

pub fn harmonic_projection_with(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    beta: &FormE,
    solver: SolverKind,
) -> Result<(FormE, Section)> {
    let ones = vec![1.0f64; mesh.n_faces()];
    let eta0 = solve_normal_equations(mesh, bundle, beta, &ones, solver)?;
    let d_eta = dbar(mesh, bundle, &eta0)?;
    let beta0 = beta.sub(&d_eta);
    Ok((beta0, eta0))
}

/// Solve `(D^H A_w D) eta = D^H A_w beta`, the optimality system of
/// `min_eta ∫ ||beta - dbar eta||^2 w dA` up to sign conventions.
///
/// Used by the harmonic projection (unit weight) and the convex partial
/// minimization in the functional module (weight `e^{(k-1)u}`, with `beta`
/// replaced by `-beta0`).
pub(crate) fn solve_normal_equations(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    beta: &FormE,
    face_weight: &[f64],
    solver: SolverKind,
) -> Result<Section> {
    let d = &bundle.dbar_matrix;
    let aw: Vec<f64> = (0..mesh.n_faces())
        .map(|f| mesh.face_area[f] * face_weight[f])
        .collect();
    let weighted: Vec<C64> = (0..mesh.n_faces())
        .map(|f| beta.coef[f] * aw[f])
        .collect();
    let rhs = d.adjoint_matvec(&weighted);
    let rhs_norm = linalg::cnorm(&rhs);
    if rhs_norm == 0.0 {
        return Ok(Section::zeros(mesh.n_vertices));
    }
    let sol = match solver {
        SolverKind::Direct => {
            let gram = d.gram_weighted_dense(&aw);
            let mut x = linalg::solve_hpd_direct(&gram, &rhs)?;
            // iterative refinement until the relative residual clears 1e-12
            for _ in 0..3 {
                let gx = gram_apply(d, &aw, &x);
                let r: Vec<C64> = rhs.iter().zip(&gx).map(|(b, g)| b - g).collect();
                if linalg::cnorm(&r) <= 1e-13 * rhs_norm {
                    break;
                }
                let dx = linalg::solve_hpd_direct(&gram, &r)?;
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
            }
            x
        }
        SolverKind::ConjugateGradient => {
            let diag = gram_diagonal(d, &aw);
            linalg::solve_hpd_cg(
                mesh.n_vertices,
                |x| gram_apply(d, &aw, x),
                &diag,
                &rhs,
                1e-13,
                20 * mesh.n_vertices + 200,
            )?
        }
    };
    // verify the relative residual the contract promises
    let gx = gram_apply(d, &aw, &sol);
    let res: f64 = linalg::cnorm(
        &rhs.iter()
            .zip(&gx)
            .map(|(b, g)| b - g)
            .collect::<Vec<C64>>(),
    );
    if res > 1e-11 * rhs_norm {
        return Err(Error::numerical(format!(
            "normal-equation solve stalled: relative residual {:.3e} (weight range [{:.3e}, {:.3e}])",
            res / rhs_norm,
            face_weight.iter().cloned().fold(f64::INFINITY, f64::min),
            face_weight.iter().cloned().fold(0.0, f64::max),
        )));
    }
    Ok(Section { coef: sol })
}

fn gram_apply(d: &CsrC, aw: &[f64], x: &[C64]) -> Vec<C64> {
    let mut dx = d.matvec(x);
    for (f, z) in dx.iter_mut().enumerate() {
        *z *= aw[f];
    }
    d.adjoint_matvec(&dx)
}

fn gram_diagonal(d: &CsrC, aw: &[f64]) -> Vec<f64> {
    let mut diag = vec![0.0f64; d.ncols];
    for r in 0..d.nrows {
        for k in d.row_ptr[r]..d.row_ptr[r + 1] {
            diag[d.col_idx[k]] += aw[r] * d.values[k].norm_sqr();
        }
    }
    diag
}

/// The section representing the linear functional `l -> Σ_f area_f q_f (dbar l)_f`
/// against the vertex-mass inner product (conjugate-linear first slot).
pub(crate) fn weak_section_from_pairing(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    per_face: &[C64],
) -> Section {
    let d = &bundle.dbar_matrix;
    let mut t = vec![C64::new(0.0, 0.0); mesh.n_vertices];
    for f in 0..mesh.n_faces() {
        let qf = per_face[f] * mesh.face_area[f];
        for idx in d.row_ptr[f]..d.row_ptr[f + 1] {
            t[d.col_idx[idx]] += qf * d.values[idx];
        }
    }
    Section {
        coef: t
            .iter()
            .enumerate()
            .map(|(v, z)| z.conj() / mesh.vertex_weight[v])
            .collect(),
    }
}

/// Smallest eigenvalue of the unit-weight `dbar* dbar` with respect to the
/// lumped vertex mass. Strictly positive; approaches `k - 1` under
/// refinement.
pub fn bochner_constant(mesh: &HyperbolicMesh, bundle: &BundleData) -> Result<f64> {
    if mesh.n_vertices > 2500 {
        return Err(Error::Resource(format!(
            "dense eigensolve guard: {} vertices is above the supported 2500",
            mesh.n_vertices
        )));
    }
    let gram = bundle.dbar_matrix.gram_weighted_dense(&mesh.face_area);
    let vals = linalg::hermitian_eigs_ascending(&gram, &mesh.vertex_weight);
    let lam = vals[0];
    if !(lam > 0.0) {
        return Err(Error::numerical(format!(
            "dbar* dbar is not positive definite: smallest eigenvalue {lam:.3e}"
        )));
    }
    Ok(lam)
}

/// Number of independent harmonic representatives obtained by projecting the
/// star-inverses of the holomorphic basis; the numerical nullity of dbar*
/// restricted to the smooth harmonic candidates.
pub fn harmonic_dimension(
    mesh: &HyperbolicMesh,
    bundle: &BundleData,
    basis: &[KDifferential],
) -> Result<usize> {
    let mut projected = Vec::new();
    for s in basis {
        let (b0, _) = harmonic_projection(mesh, bundle, &hodge_star_inv(s))?;
        projected.push(b0);
    }
    let d = projected.len();
    let mut gram = nalgebra::DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            gram[(i, j)] = form_inner(mesh, &projected[i], &projected[j]);
        }
    }
    let vals = linalg::hermitian_eigs_ascending(&gram, &vec![1.0; d]);
    let max = vals.last().copied().unwrap_or(0.0);
    Ok(vals.iter().filter(|&&v| v > 1e-8 * max).count())
}

// ---------------------------------------------------------------------------
// Serialization of bundle-valued fields
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Section,
    Form,
    KDifferential,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    mesh_hash: String,
    k: u32,
    frame_version: u32,
    kind: FieldKind,
    values: Vec<(f64, f64)>,
}

pub const FRAME_VERSION: u32 = 1;

fn field_to_json(mesh: &HyperbolicMesh, k: u32, kind: FieldKind, coef: &[C64]) -> String {
    let file = FieldFile {
        mesh_hash: mesh_hash(mesh),
        k,
        frame_version: FRAME_VERSION,
        kind,
        values: coef.iter().map(|z| (z.re, z.im)).collect(),
    };
    serde_json::to_string_pretty(&file).expect("field serialization cannot fail")
}

fn field_from_json(
    mesh: &HyperbolicMesh,
    k: u32,
    kind: FieldKind,
    expected_len: usize,
    text: &str,
) -> Result<Vec<C64>> {
    let file: FieldFile = serde_json::from_str(text)?;
    if file.kind != kind {
        return Err(Error::Domain(format!(
            "field kind mismatch: expected {kind:?}, file holds {:?}",
            file.kind
        )));
    }
    if file.frame_version != FRAME_VERSION {
        return Err(Error::Domain(format!(
            "frame convention version {} unsupported (expected {FRAME_VERSION})",
            file.frame_version
        )));
    }
    if file.k != k {
        return Err(Error::Domain(format!(
            "field was written for k = {}, requested k = {k}",
            file.k
        )));
    }
    if file.mesh_hash != mesh_hash(mesh) {
        return Err(Error::Domain(
            "field was written for a different mesh (hash mismatch)".into(),
        ));
    }
    if file.values.len() != expected_len {
        return Err(Error::Domain(format!(
            "field length {} does not match expected {expected_len}",
            file.values.len()
        )));
    }
    Ok(file
        .values
        .iter()
        .map(|&(re, im)| C64::new(re, im))
        .collect())
}

impl Section {
    pub fn to_json(&self, mesh: &HyperbolicMesh, k: u32) -> String {
        field_to_json(mesh, k, FieldKind::Section, &self.coef)
    }

    pub fn from_json(mesh: &HyperbolicMesh, k: u32, text: &str) -> Result<Self> {
        Ok(Section {
            coef: field_from_json(mesh, k, FieldKind::Section, mesh.n_vertices, text)?,
        })
    }
}

impl FormE {
    pub fn to_json(&self, mesh: &HyperbolicMesh, k: u32) -> String {
        field_to_json(mesh, k, FieldKind::Form, &self.coef)
    }

    pub fn from_json(mesh: &HyperbolicMesh, k: u32, text: &str) -> Result<Self> {
        Ok(FormE {
            coef: field_from_json(mesh, k, FieldKind::Form, mesh.n_faces(), text)?,
        })
    }
}

impl KDifferential {
    pub fn to_json(&self, mesh: &HyperbolicMesh, k: u32) -> String {
        field_to_json(mesh, k, FieldKind::KDifferential, &self.coef)
    }

    pub fn from_json(mesh: &HyperbolicMesh, k: u32, text: &str) -> Result<Self> {
        Ok(KDifferential {
            coef: field_from_json(mesh, k, FieldKind::KDifferential, mesh.n_faces(), text)?,
        })
    }
}

pub fn random_section(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Section {
    Section {
        coef: linalg::random_complex_vec(rng, n),
    }
}

pub fn random_form(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> FormE {
    FormE {
        coef: linalg::random_complex_vec(rng, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_genus2_mesh;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn transport_antisymmetry_exact() {
        let mesh = generate_genus2_mesh(2).unwrap();
        for k in [2u32, 3, 5] {
            let bundle = build_bundle(&mesh, k).unwrap();
            for h in 0..mesh.n_halfedges() {
                let t = mesh.twin[h];
                assert_eq!(bundle.transport[h], -bundle.transport[t]);
                assert_eq!(bundle.levi_civita[h], -bundle.levi_civita[t]);
            }
        }
    }

    #[test]
    fn face_holonomy_equals_minus_area() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let bundle = build_bundle(&mesh, 2).unwrap();
        for f in 0..mesh.n_faces() {
            let hol = face_holonomy1(&mesh, &bundle, f);
            assert!(
                (hol + mesh.face_area[f]).abs() < 1e-10,
                "face {f}: holonomy {hol} vs -area {}",
                -mesh.face_area[f]
            );
        }
    }

    #[test]
    fn chern_weil_total_holonomy() {
        let mesh = generate_genus2_mesh(2).unwrap();
        for (k, expect) in [(2u32, -4.0 * PI), (3, -8.0 * PI), (4, -12.0 * PI)] {
            let bundle = build_bundle(&mesh, k).unwrap();
            assert_relative_eq!(total_holonomy(&mesh, &bundle), expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn dbar_of_zero_is_zero() {
        let mesh = generate_genus2_mesh(1).unwrap();
        let bundle = build_bundle(&mesh, 2).unwrap();
        let out = dbar(&mesh, &bundle, &Section::zeros(mesh.n_vertices)).unwrap();
        assert!(out.sup_norm() == 0.0);
    }

    #[test]
    fn dbar_kernel_is_trivial() {
        // no global holomorphic sections of E: smallest singular value of
        // dbar is strictly positive and not small
        let mesh = generate_genus2_mesh(2).unwrap();
        for k in [2u32, 3] {
            let bundle = build_bundle(&mesh, k).unwrap();
            let lam = bochner_constant(&mesh, &bundle).unwrap();
            assert!(
                lam > 0.5 * (k as f64 - 1.0),
                "k={k}: smallest eigenvalue {lam} unexpectedly small"
            );
        }
    }

    #[test]
    fn dbar_exact_on_chart_antiholomorphic_monomial() {
        // build a section matching eta_hat(w) = conj(w) in the chart of one
        // face; the stencil must return the analytic Wirtinger coefficient
        // 2^(m-1) exactly there
        for level in [1u32, 2] {
            let mesh = generate_genus2_mesh(level).unwrap();
            for k in [2u32, 3, 4] {
                let bundle = build_bundle(&mesh, k).unwrap();
                let m = (k - 1) as i32;
                let f = mesh.n_faces() / 2;
                let ch = &mesh.chart[f];
                let mut eta = Section::zeros(mesh.n_vertices);
                for j in 0..3 {
                    let w = ch.pos[j];
                    let lam_w = 2.0 / (1.0 - w.norm_sqr());
                    // c_tilde = eta_hat * lambda^m, then undo frame rotation
                    let c_tilde = w.conj() * lam_w.powi(m);
                    let c_vertex = c_tilde * C64::from_polar(1.0, -(m as f64) * ch.delta[j]);
                    eta.coef[mesh.faces[f][j]] = c_vertex;
                }
                let out = dbar(&mesh, &bundle, &eta).unwrap();
                let expect = 2.0f64.powi(m - 1);
                assert!(
                    (out.coef[f] - expect).norm() < 1e-12 * expect,
                    "k={k}, level={level}: got {}, want {expect}",
                    out.coef[f]
                );
            }
        }
    }

    #[test]
    fn adjoint_identity_random_pairs() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let bundle = build_bundle(&mesh, 3).unwrap();
        let mut rng = linalg::rng_from_seed(17);
        for trial in 0..20 {
            let beta = random_form(&mut rng, mesh.n_faces());
            let l = random_section(&mut rng, mesh.n_vertices);
            let w: Vec<f64> = (0..mesh.n_faces())
                .map(|f| (0.3 * ((f + trial) as f64).sin()).exp())
                .collect();
            let dl = dbar(&mesh, &bundle, &l).unwrap();
            let lhs = form_inner_weighted(&mesh, &w, &beta, &dl);
            let zeta = dbar_adjoint(&mesh, &bundle, &beta, &w).unwrap();
            let rhs = section_inner(&mesh, &zeta, &l);
            assert!(
                (lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()),
                "trial {trial}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn adjoint_of_zero() {
        let mesh = generate_genus2_mesh(1).unwrap();
        let bundle = build_bundle(&mesh, 2).unwrap();
        let w = vec![1.0; mesh.n_faces()];
        let z = dbar_adjoint(&mesh, &bundle, &FormE::zeros(mesh.n_faces()), &w).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn hodge_star_isometry_and_conjugate_linearity() {
        let mesh = generate_genus2_mesh(1).unwrap();
        let mut rng = linalg::rng_from_seed(5);
        let beta = random_form(&mut rng, mesh.n_faces());
        let star = hodge_star_e(&beta);
        for f in 0..mesh.n_faces() {
            assert_relative_eq!(star.coef[f].norm(), beta.coef[f].norm(), epsilon = 1e-15);
        }
        let i_beta = beta.scale(C64::new(0.0, 1.0));
        let star_i = hodge_star_e(&i_beta);
        let minus_i_star = hodge_star_e(&beta).scale(C64::new(0.0, -1.0));
        for f in 0..mesh.n_faces() {
            assert!((star_i.coef[f] - minus_i_star.coef[f]).norm() < 1e-15);
        }
        // round trip
        let back = hodge_star_inv(&star);
        for f in 0..mesh.n_faces() {
            assert_eq!(back.coef[f], beta.coef[f]);
        }
    }

    #[test]
    fn hodge_star_pairing_identity() {
        // ∫ *b1 ∧ b2 == <b1, b2>_A against independent componentwise sums
        let mesh = generate_genus2_mesh(2).unwrap();
        let mut rng = linalg::rng_from_seed(7);
        for _ in 0..50 {
            let b1 = random_form(&mut rng, mesh.n_faces());
            let b2 = random_form(&mut rng, mesh.n_faces());
            let lhs = wedge_integral(&mesh, &hodge_star_e(&b1), &b2);
            let rhs: C64 = (0..mesh.n_faces())
                .map(|f| b1.coef[f].conj() * b2.coef[f] * mesh.face_area[f])
                .sum();
            assert!((lhs - rhs).norm() <= 1e-14 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn harmonic_projection_kills_exact_forms() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let bundle = build_bundle(&mesh, 2).unwrap();
        let mut rng = linalg::rng_from_seed(11);
        let eta = random_section(&mut rng, mesh.n_vertices);
        let beta = dbar(&mesh, &bundle, &eta).unwrap();
        let (b0, eta0) = harmonic_projection(&mesh, &bundle, &beta).unwrap();
        assert!(form_norm(&mesh, &b0) <= 1e-10 * form_norm(&mesh, &beta));
        // the recovered potential matches (trivial kernel)
        let diff = eta0.sub(&eta);
        assert!(section_norm(&mesh, &diff) <= 1e-9 * section_norm(&mesh, &eta));
    }

    #[test]
    fn harmonic_projection_idempotent_and_decomposes() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let bundle = build_bundle(&mesh, 3).unwrap();
        let mut rng = linalg::rng_from_seed(13);
        for _ in 0..20 {
            let beta = random_form(&mut rng, mesh.n_faces());
            let (b0, eta0) = harmonic_projection(&mesh, &bundle, &beta).unwrap();
            // decomposition
            let recon = b0.add(&dbar(&mesh, &bundle, &eta0).unwrap());
            assert!(form_norm(&mesh, &recon.sub(&beta)) <= 1e-10 * form_norm(&mesh, &beta));
            // dbar* b0 = 0 (unit weight)
            let ones = vec![1.0; mesh.n_faces()];
            let z = dbar_adjoint(&mesh, &bundle, &b0, &ones).unwrap();
            assert!(section_norm(&mesh, &z) <= 1e-10 * form_norm(&mesh, &beta));
            // idempotence
            let (b00, _) = harmonic_projection(&mesh, &bundle, &b0).unwrap();
            assert!(form_norm(&mesh, &b00.sub(&b0)) <= 1e-10 * form_norm(&mesh, &b0));
        }
    }

    #[test]
    fn direct_and_cg_projections_agree() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let bundle = build_bundle(&mesh, 2).unwrap();
        let mut rng = linalg::rng_from_seed(19);
        let beta = random_form(&mut rng, mesh.n_faces());
        let (b0_d, _) =
            harmonic_projection_with(&mesh, &bundle, &beta, SolverKind::Direct).unwrap();
        let (b0_c, _) =
            harmonic_projection_with(&mesh, &bundle, &beta, SolverKind::ConjugateGradient)
                .unwrap();
        assert!(form_norm(&mesh, &b0_d.sub(&b0_c)) <= 1e-9 * form_norm(&mesh, &b0_d));
    }

    #[test]
    fn field_serialization_round_trip() {
        let mesh = generate_genus2_mesh(2).unwrap();
        let mut rng = linalg::rng_from_seed(23);
        let s = random_section(&mut rng, mesh.n_vertices);
        let text = s.to_json(&mesh, 3);
        let back = Section::from_json(&mesh, 3, &text).unwrap();
        assert_eq!(s, back);
        // wrong k is rejected
        assert!(Section::from_json(&mesh, 2, &text).is_err());
        // wrong kind is rejected
        assert!(FormE::from_json(&mesh, 3, &text).is_err());
    }

    #[test]
    fn k_guard() {
        let mesh = generate_genus2_mesh(1).unwrap();
        assert!(build_bundle(&mesh, 1).is_err());
    }
}

/// Exposed for spectrum diagnostics in examples/tests.
#[doc(hidden)]
pub fn test_dbar_matrix(mesh: &HyperbolicMesh, m: i64) -> CsrC {
    assemble_dbar_matrix(mesh, m)
}

/// Exposed for diagnostics: (vertex, position, frame rotation) of a patch.
#[doc(hidden)]
pub fn test_develop_patch(mesh: &HyperbolicMesh, f: usize, target: usize) -> Vec<(usize, C64, f64)> {
    basis::develop_patch(mesh, f, target)
        .into_iter()
        .map(|p| (p.vertex, p.w, p.delta))
        .collect()
}

/// Exposed for diagnostics: vertex-representation kernel vectors of the
/// weight(-k) patch operator.
#[doc(hidden)]
pub fn test_kernel_vertex_vectors(mesh: &HyperbolicMesh, k: u32) -> crate::error::Result<Vec<Vec<C64>>> {
    basis::kernel_vertex_vectors(mesh, k)
}
