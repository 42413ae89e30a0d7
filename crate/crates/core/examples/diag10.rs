use donaldson::geometry::*;
use num_complex::Complex64 as C64;
use nalgebra::DMatrix;

fn main() {
    let mesh = generate_genus2_mesh(3).unwrap();
    for k in [2u32, 3] {
        let m = k as i64; // conj of weight -k basis element is weight +k... 
        // NOTE: conj of weight -k is weight +k; eigenvalue m = k
        let kernels = donaldson::bundle::test_kernel_vertex_vectors(&mesh, k).unwrap();
        let s = &kernels[0];
        let nv = mesh.n_vertices;
        // E_true = m * ||s||^2 (exact continuum identity, conj field)
        let snorm2: f64 = (0..nv).map(|v| s[v].norm_sqr()*mesh.vertex_weight[v]).sum();
        let e_true = m as f64 * snorm2;
        // E_disc via current affine dbar at weight m on conj(s)
        let d = donaldson::bundle::test_dbar_matrix(&mesh, m);
        let psi: Vec<C64> = s.iter().map(|z| z.conj()).collect();
        let dpsi = d.matvec(&psi);
        // Hodge factor 2: current matrix lacks it
        let e_disc: f64 = 2.0*(0..mesh.n_faces()).map(|f| dpsi[f].norm_sqr()*mesh.face_area[f]).sum::<f64>();
        // E_ideal: one-point quadrature with EXACT S'(0) per face from deg-8 fits
        let mut e_ideal = 0.0;
        for f in 0..mesh.n_faces() {
            let pts = donaldson::bundle::test_develop_patch(&mesh, f, 40);
            let deg = 8usize;
            let n = deg + 1;
            let mut ata = DMatrix::<C64>::zeros(n, n);
            let mut atb = nalgebra::DVector::<C64>::zeros(n);
            for &(v, w, delta) in &pts {
                let gauge = (1.0 - w.norm_sqr()).powi(-(k as i32));
                let phase = C64::from_polar(1.0, -(k as f64) * delta);
                let b = phase * gauge * s[v];
                let mut row = vec![C64::new(1.0,0.0); n];
                for t in 1..n { row[t] = row[t-1]*w; }
                for i in 0..n {
                    for j in 0..n { ata[(i,j)] += row[i].conj()*row[j]; }
                    atb[i] += row[i].conj()*b;
                }
            }
            let coefs = ata.lu().solve(&atb).unwrap();
            // pointwise || dbar conj(s) ||(center) = |S'(0)|/2, Hodge x2 in energy
            e_ideal += 2.0 * mesh.face_area[f] * (coefs[1].norm()/2.0).powi(2);
        }
        println!("k={k} (m={m}): E_true {:.5}  E_ideal {:.5} ({:.4})  E_disc {:.5} ({:.4})",
            e_true, e_ideal, e_ideal/e_true, e_disc, e_disc/e_true);
    }
}
