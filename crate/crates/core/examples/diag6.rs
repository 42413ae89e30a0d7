use donaldson::geometry::*;
use num_complex::Complex64 as C64;

fn main() {
    let mesh = generate_genus2_mesh(3).unwrap();
    let m = 2i64; // conj of weight -2 holomorphic
    let kernels = donaldson::bundle::test_kernel_vertex_vectors(&mesh, 2).unwrap();
    let s = &kernels[0];
    let d = donaldson::bundle::test_dbar_matrix(&mesh, m);
    let psi: Vec<C64> = s.iter().map(|v| v.conj()).collect();
    let dpsi = d.matvec(&psi);

    for f in [50usize, 200, 400] {
        // local fit of the holomorphic rep S(w) around face f from s-samples
        let pts = donaldson::bundle::test_develop_patch(&mesh, f, 40);
        // gauge for weight -2: c_hat = e^{i(-2)delta} (1-|w|^2)^{-2} s_v
        let mut rows: Vec<Vec<C64>> = Vec::new();
        let mut rhs: Vec<C64> = Vec::new();
        let deg = 8;
        for &(v, w, delta) in &pts {
            let gauge = (1.0 - w.norm_sqr()).powi(-2);
            let phase = C64::from_polar(1.0, -2.0 * delta);
            rhs.push(phase * gauge * s[v]);
            let mut row = Vec::new();
            let mut pw = C64::new(1.0, 0.0);
            for _ in 0..=deg { row.push(pw); pw *= w; }
            rows.push(row);
        }
        // normal equations for the polynomial coefficients
        let n = deg + 1;
        let mut ata = nalgebra::DMatrix::<C64>::zeros(n, n);
        let mut atb = nalgebra::DVector::<C64>::zeros(n);
        for (row, b) in rows.iter().zip(&rhs) {
            for i in 0..n {
                for j in 0..n { ata[(i,j)] += row[i].conj()*row[j]; }
                atb[i] += row[i].conj()*b;
            }
        }
        let coefs = ata.lu().solve(&atb).unwrap();
        // S(w) = sum coefs[t] w^t ; S'(0) = coefs[1]
        // prediction: discrete D_m(conj s)_f should be 0.5 * conj(S'(0))
        // (c_hat of conj s = (1-|w|^2)^{2m'}... as derived: = conj(S(w)))
        let pred = 0.5 * coefs[1].conj();
        println!("face {f}: discrete {:.6e}  pred-from-S'(0) {:.6e}  ratio {:.4}",
            dpsi[f].norm(), pred.norm(), dpsi[f].norm()/pred.norm().max(1e-300));
    }
}
