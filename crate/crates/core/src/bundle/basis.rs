//! Holomorphic k-differential bases.
//!
//! A k-differential is a section of `E* ⊗ K_X`, a tensor power of weight
//! `-k`. Around any point the surface is exactly a Poincaré disk, and the
//! pullback of a holomorphic differential to a developed patch, expressed in
//! the radially parallel frame with its real gauge divided out, is an honest
//! holomorphic function of the chart coordinate. The basis is therefore the
//! numerical kernel of the "local holomorphy defect" operator: develop a
//! patch around every face by exact hyperbolic layout, gauge the vertex
//! samples, and take the residual of a weighted least-squares fit by a
//! holomorphic polynomial. True differentials are annihilated to the
//! polynomial truncation error, which is what opens the large singular-value
//! gap the rank detection needs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::HyperbolicMesh;
use crate::hyp;
use crate::linalg;

use super::{kdiff_inner, weak_section_from_pairing, KDifferential, Section};

type C64 = Complex64;

/// One developed sample point of a patch.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PatchPoint {
    pub vertex: usize,
    pub w: C64,
    /// Weight-one frame rotation: vertex frame -> patch chart frame.
    pub delta: f64,
}

/// Develop vertices around face `f` into its exact chart by breadth-first
/// layout until at least `target` vertices are placed.
pub(crate) fn develop_patch(mesh: &HyperbolicMesh, f0: usize, target: usize) -> Vec<PatchPoint> {
    let nv = mesh.n_vertices;
    let nf = mesh.n_faces();
    let mut placed: Vec<Option<(C64, f64)>> = vec![None; nv];
    let mut order: Vec<usize> = Vec::new();
    let ch = &mesh.chart[f0];
    for i in 0..3 {
        let v = mesh.faces[f0][i];
        if placed[v].is_none() {
            placed[v] = Some((ch.pos[i], ch.delta[i]));
            order.push(v);
        }
    }
    let mut face_seen = vec![false; nf];
    face_seen[f0] = true;
    let mut queue = std::collections::VecDeque::new();
    for i in 0..3 {
        let g = mesh.twin[3 * f0 + i] / 3;
        if !face_seen[g] {
            face_seen[g] = true;
            queue.push_back(g);
        }
    }
    while let Some(g) = queue.pop_front() {
        // place the (at most one) missing vertex of g
        let vs = mesh.faces[g];
        let missing: Vec<usize> = (0..3).filter(|&i| placed[vs[i]].is_none()).collect();
        if missing.len() == 1 {
            let u = missing[0];
            let p = (u + 1) % 3; // predecessor in ccw order
            let q = (u + 2) % 3;
            if let (Some((wp, _)), Some((wq, _))) = (placed[vs[p]], placed[vs[q]]) {
                // interior corner at p spans ccw from edge p->q to edge p->x
                let dir = hyp::direction(wp, wq) + mesh.corner[3 * g + p];
                let l_px = mesh.length[3 * g + u]; // edge between x and p
                let wx = hyp::exp_map(wp, dir, l_px);
                // frame rotation from the edge x -> p
                let delta = hyp::direction(wx, wp) - mesh.atlas[3 * g + u];
                placed[vs[u]] = Some((wx, delta));
                order.push(vs[u]);
            }
        } else if missing.len() > 1 {
            // cannot place yet; requeue after neighbors
            queue.push_back(g);
            continue;
        }
        if order.len() >= target {
            break;
        }
        for i in 0..3 {
            let n = mesh.twin[3 * g + i] / 3;
            if !face_seen[n] {
                face_seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    order
        .into_iter()
        .map(|v| {
            let (w, delta) = placed[v].unwrap();
            PatchPoint {
                vertex: v,
                w,
                delta,
            }
        })
        .collect()
}

/// Fit degree and sample count policy by mesh size.
fn fit_policy(n_vertices: usize) -> (usize, usize) {
    let deg = if n_vertices >= 600 {
        11
    } else if n_vertices >= 150 {
        10
    } else if n_vertices >= 40 {
        7
    } else {
        4
    };
    let target = ((2.6 * (deg + 1) as f64).ceil() as usize).max(16);
    (deg, target.min(n_vertices))
}

/// Per-face local-fit data: selected vertices, sample scalings, residual
/// projector, and the evaluation row recovering the fitted center value.
struct PatchFit {
    vertices: Vec<usize>,
    /// g_v = sqrt(weight) * phase * gauge, sample = g_v * section[v].
    scaling: Vec<C64>,
    /// Projector onto the orthogonal complement of the polynomial span.
    residual: DMatrix<C64>,
    /// a0 = eval^H . samples gives the fitted value at the chart center.
    eval: Vec<C64>,
}

fn build_patch_fit(mesh: &HyperbolicMesh, f: usize, weight_m: i64, deg: usize, target: usize) -> PatchFit {
    let pts = develop_patch(mesh, f, target);
    let p = pts.len();
    let wmax = pts.iter().fold(0.0f64, |m, pt| m.max(pt.w.norm()));
    let mut scaling = Vec::with_capacity(p);
    let mut vertices = Vec::with_capacity(p);
    for pt in &pts {
        let s = pt.w.norm() / (wmax * 1.05);
        let omega = (1.0 - s * s).powi(2);
        let gauge = (1.0 - pt.w.norm_sqr()).powi(weight_m as i32);
        let phase = C64::from_polar(1.0, weight_m as f64 * pt.delta);
        scaling.push(omega.sqrt() * phase * gauge);
        vertices.push(pt.vertex);
    }
    // weighted Vandermonde
    let ncoef = deg + 1;
    let mut v = DMatrix::<C64>::zeros(p, ncoef);
    for (i, pt) in pts.iter().enumerate() {
        let s = pt.w.norm() / (wmax * 1.05);
        let omega_sqrt = (1.0 - s * s);
        let mut pw = C64::new(1.0, 0.0);
        for t in 0..ncoef {
            v[(i, t)] = pw * omega_sqrt;
            pw *= pt.w;
        }
    }
    let qr = v.clone().qr();
    let q = qr.q();
    let r = qr.r();
    // residual projector I - Q Q^H
    let mut residual = DMatrix::<C64>::identity(p, p);
    residual -= &q * q.adjoint();
    // evaluation row: a = R^{-1} Q^H s, value = a_0 = e0^T R^{-1} Q^H s
    // solve R^T y = e0, then eval^H = y^T Q^H, i.e. eval = conj(Q y*)...
    // do it concretely: row vector r0 = e0^T R^{-1}; then a0 = r0 (Q^H s)
    let n = ncoef;
    let mut r0 = vec![C64::new(0.0, 0.0); n];
    // e0^T R^{-1}: solve z^T R = e0^T  =>  R^T z = e0 (R upper triangular)
    // forward substitution on R^T (lower triangular)
    for i in 0..n {
        let mut acc = if i == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        for j in 0..i {
            acc -= r[(j, i)] * r0[j];
        }
        r0[i] = acc / r[(i, i)];
    }
    // a0 = sum_t r0[t] (Q^H s)_t = sum_i (sum_t r0[t] conj(Q[i,t])) s_i
    let eval: Vec<C64> = (0..p)
        .map(|i| (0..n).map(|t| r0[t] * q[(i, t)].conj()).sum())
        .collect();
    PatchFit {
        vertices,
        scaling,
        residual,
        eval,
    }
}

/// Spectrum diagnostics from the basis computation.
#[derive(Debug, Clone)]
pub struct BasisSpectrum {
    /// Smallest singular values of the holomorphy-defect operator, ascending.
    pub sigma: Vec<f64>,
    /// Expected complex kernel dimension (2k-1)(g-1).
    pub expected_dim: usize,
    /// sigma[expected_dim] / sigma[expected_dim - 1].
    pub gap_ratio: f64,
}

struct BasisComputation {
    fits: Vec<PatchFit>,
    kernel: Vec<Vec<C64>>,
    spectrum: BasisSpectrum,
}

fn compute_kernel(mesh: &HyperbolicMesh, k: u32, enforce_gap: bool) -> Result<BasisComputation> {
    if k < 2 {
        return Err(Error::Domain(format!("k = {k} must be >= 2")));
    }
    if mesh.genus < 2 {
        return Err(Error::Domain("genus must be >= 2".into()));
    }
    let nv = mesh.n_vertices;
    if nv > 2500 {
        return Err(Error::Resource(format!(
            "dense basis computation guard: {nv} vertices is above the supported 2500"
        )));
    }
    let d = (2 * k as usize - 1) * (mesh.genus - 1);
    let (deg, target) = fit_policy(nv);
    let weight_m = -(k as i64);

    let fits: Vec<PatchFit> = (0..mesh.n_faces())
        .map(|f| build_patch_fit(mesh, f, weight_m, deg, target))
        .collect();

    // global defect Gram N = sum_f G^H R G, scaled by face area so the
    // measure is quadrature-consistent
    let mut gram = DMatrix::<C64>::zeros(nv, nv);
    for (f, fit) in fits.iter().enumerate() {
        let p = fit.vertices.len();
        let a = mesh.face_area[f];
        for i in 0..p {
            let gi = fit.scaling[i].conj() * a;
            for j in 0..p {
                gram[(fit.vertices[i], fit.vertices[j])] +=
                    gi * fit.residual[(i, j)] * fit.scaling[j];
            }
        }
    }

    // generalized spectrum of (N, M): embed and take eigenvectors
    let mass = &mesh.vertex_weight;
    let mut scaled = gram.clone();
    for i in 0..nv {
        for j in 0..nv {
            scaled[(i, j)] /= (mass[i] * mass[j]).sqrt();
        }
    }
    let embedded = linalg::embed_real(&scaled);
    let mass1 = vec![1.0f64; 2 * nv];
    let (vals, vecs) = linalg::sym_eigs_with_vectors(&embedded, &mass1);

    // singular values: sqrt of the (doubled) eigenvalues, one per pair
    let sigma: Vec<f64> = vals
        .iter()
        .step_by(2)
        .take(d + 4)
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    if sigma.len() <= d {
        return Err(Error::numerical(
            "mesh too small to resolve the holomorphic space".to_string(),
        ));
    }
    let gap_ratio = sigma[d] / sigma[d - 1].max(1e-300);
    let spectrum = BasisSpectrum {
        sigma: sigma.clone(),
        expected_dim: d,
        gap_ratio,
    };
    if enforce_gap && gap_ratio < 1e3 {
        return Err(Error::numerical(format!(
            "discretization too coarse: singular-value gap ratio {:.3e} < 1e3 at dimension {d}; spectrum {:?}",
            gap_ratio,
            &sigma[..sigma.len().min(d + 3)]
        )));
    }

    // kernel vectors: the 2d smallest embedded eigenvectors span the
    // d-complex-dimensional kernel; de-embed and orthonormalize over C
    let mut candidates: Vec<Vec<C64>> = Vec::new();
    for t in 0..(2 * d) {
        let col = vecs.column(t);
        let mut z: Vec<C64> = (0..nv).map(|i| C64::new(col[i], col[i + nv])).collect();
        // undo the mass scaling: vectors of (N, M) problem
        for i in 0..nv {
            z[i] /= mass[i].sqrt();
        }
        candidates.push(z);
    }
    let mut kernel: Vec<Vec<C64>> = Vec::new();
    let minner = |a: &[C64], b: &[C64]| -> C64 {
        (0..nv).map(|i| a[i].conj() * b[i] * mass[i]).sum()
    };
    for cand in candidates {
        let mut z = cand;
        for kv in &kernel {
            let c = minner(kv, &z);
            for i in 0..nv {
                z[i] -= c * kv[i];
            }
        }
        let n = minner(&z, &z).re.sqrt();
        if n > 0.3 {
            for zi in z.iter_mut() {
                *zi /= n;
            }
            kernel.push(z);
            if kernel.len() == d {
                break;
            }
        }
    }
    if kernel.len() != d {
        return Err(Error::numerical(format!(
            "kernel extraction found {} complex directions, expected {d}",
            kernel.len()
        )));
    }
    Ok(BasisComputation {
        fits,
        kernel,
        spectrum,
    })
}

/// Orthonormal basis of holomorphic k-differentials, with spectrum
/// diagnostics.
pub fn holomorphic_basis_with_spectrum(
    mesh: &HyperbolicMesh,
    k: u32,
) -> Result<(Vec<KDifferential>, BasisSpectrum)> {
    let BasisComputation {
        fits,
        kernel,
        spectrum,
    } = compute_kernel(mesh, k, true)?;

    // per-face values by evaluating each local fit at its chart center
    let mut raw: Vec<KDifferential> = Vec::new();
    for z in &kernel {
        let coef: Vec<C64> = fits
            .iter()
            .map(|fit| {
                fit.vertices
                    .iter()
                    .zip(&fit.scaling)
                    .zip(&fit.eval)
                    .map(|((&v, &g), &e)| e * g * z[v])
                    .sum()
            })
            .collect();
        raw.push(KDifferential { coef });
    }

    // orthonormalize in the face-mass inner product and fix phases
    let mut basis: Vec<KDifferential> = Vec::new();
    for mut q in raw {
        for b in &basis {
            let c = kdiff_inner(mesh, b, &q);
            for f in 0..q.coef.len() {
                q.coef[f] -= c * b.coef[f];
            }
        }
        let n = kdiff_inner(mesh, &q, &q).re.sqrt();
        if n <= 1e-10 {
            return Err(Error::numerical(
                "basis orthonormalization lost rank".to_string(),
            ));
        }
        for z in q.coef.iter_mut() {
            *z /= n;
        }
        // deterministic phase: largest entry real positive
        let mut best = 0usize;
        for f in 1..q.coef.len() {
            if q.coef[f].norm() > q.coef[best].norm() {
                best = f;
            }
        }
        let phase = q.coef[best] / q.coef[best].norm();
        for z in q.coef.iter_mut() {
            *z /= phase;
        }
        basis.push(q);
    }
    Ok((basis, spectrum))
}

/// Vertex-space kernel vectors (diagnostic hook).
pub(crate) fn kernel_vertex_vectors(mesh: &HyperbolicMesh, k: u32) -> Result<Vec<Vec<C64>>> {
    compute_kernel(mesh, k, false).map(|c| c.kernel)
}

/// Orthonormal basis of the numerical kernel of dbar on k-differentials.
pub fn holomorphic_basis(mesh: &HyperbolicMesh, k: u32) -> Result<Vec<KDifferential>> {
    holomorphic_basis_with_spectrum(mesh, k).map(|(b, _)| b)
}



/// Weak holomorphicity defect of a per-face k-differential: the section
/// `zeta` representing `l -> ∫ q ∧ dbar l` against the vertex mass. Zero
/// exactly when `q` pairs to zero with every exact form, which is the
/// discrete meaning of `dbar q = 0`.
pub fn weak_dbar_defect(
    mesh: &HyperbolicMesh,
    bundle: &super::BundleData,
    q: &KDifferential,
) -> Section {
    weak_section_from_pairing(mesh, bundle, &q.coef)
}
