use donaldson::geometry::*;
use donaldson::linalg;
use num_complex::Complex64 as C64;
use donaldson::hyp;
use nalgebra::DMatrix;

// LSQ-quadratic dbar stencil over the 1-ring of each face.
fn main() {
    for level in [2u32, 3] {
        let mesh = generate_genus2_mesh(level).unwrap();
        let nf = mesh.n_faces();
        print!("level {level}:");
        for m in [1i64, 2, 3] {
            let mut trip = Vec::new();
            for f in 0..nf {
                // develop the 1-ring: all vertices of faces sharing a vertex with f
                let pts = donaldson::bundle::test_develop_patch(&mesh, f, 12);
                let n = pts.len();
                let wmax = pts.iter().fold(0.0f64, |a, p| a.max(p.1.norm()));
                let mut a = DMatrix::<C64>::zeros(n, 6);
                let mut omega = vec![0.0f64; n];
                for (i, p) in pts.iter().enumerate() {
                    let w = p.1;
                    let s = w.norm() / (1.05 * wmax);
                    omega[i] = (1.0 - s * s).powi(2).max(1e-6);
                    let b = [C64::new(1.0,0.0), w, w.conj(), w*w, w*w.conj(), w.conj()*w.conj()];
                    for t in 0..6 { a[(i, t)] = b[t] * omega[i].sqrt(); }
                }
                // LSQ: coefficients = (A^H A)^{-1} A^H (sqrt(omega) c); dbar row = row 2
                let ata = a.adjoint() * &a;
                let inv = match ata.try_inverse() { Some(i) => i, None => continue };
                // row for coefficient of wbar (index 2)
                for (i, p) in pts.iter().enumerate() {
                    let mut v = C64::new(0.0, 0.0);
                    for t in 0..6 { v += inv[(2, t)] * a[(i, t)].conj(); }
                    v *= omega[i].sqrt();
                    let gauge = (1.0 - p.1.norm_sqr()).powi(m as i32);
                    let phase = C64::from_polar(1.0, m as f64 * p.2);
                    trip.push((f, p.0, v * phase * gauge / C64::new(2f64.sqrt(), 0.0)));
                }
            }
            let d = linalg::CsrC::from_triplets(nf, mesh.n_vertices, trip);
            let gram = d.gram_weighted_dense(&mesh.face_area);
            let vals = linalg::hermitian_eigs_ascending(&gram, &mesh.vertex_weight);
            print!("  m={m}: {:.4} (ratio {:.4})", vals[0], vals[0]/m as f64);
        }
        println!();
    }
}
