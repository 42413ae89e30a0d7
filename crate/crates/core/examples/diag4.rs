use donaldson::geometry::*;
use donaldson::linalg;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn main() {
    let mesh = generate_genus2_mesh(3).unwrap();
    let m = 1i64;
    let d = donaldson::bundle::test_dbar_matrix(&mesh, m);
    let gram = d.gram_weighted_dense(&mesh.face_area);
    let nv = mesh.n_vertices;
    // generalized eig with vectors via embedding
    let mut scaled = gram.clone();
    for i in 0..nv { for j in 0..nv {
        scaled[(i,j)] /= (mesh.vertex_weight[i]*mesh.vertex_weight[j]).sqrt();
    }}
    let emb = linalg::embed_real(&scaled);
    let (vals, vecs) = linalg::sym_eigs_with_vectors(&emb, &vec![1.0; 2*nv]);
    println!("lowest eigenvalues: {:?}", &vals.iter().take(6).map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    for which in [0usize, 2] {
        let col = vecs.column(which);
        let z: Vec<C64> = (0..nv).map(|i| C64::new(col[i], col[i+nv]) / mesh.vertex_weight[i].sqrt()).collect();
        // edge-roughness: mean |transported difference| over edges / mean |z|
        let bundle = donaldson::bundle::build_bundle(&mesh, (m+1) as u32).unwrap();
        let mut rough = 0.0; let mut count = 0usize;
        for h in 0..mesh.n_halfedges() {
            let (a, b) = (mesh.tail(h), mesh.head(h));
            let t = C64::from_polar(1.0, bundle.transport[h]);
            rough += (t*z[a] - z[b]).norm() / mesh.length[h];
            count += 1;
        }
        rough /= count as f64;
        let amp = z.iter().map(|v| v.norm()).sum::<f64>() / nv as f64;
        println!("eigvec #{which} (lam={:.4}): covariant edge-roughness/|z| = {:.3}", vals[which], rough/amp);
    }
    // Rayleigh quotient of a SMOOTHED random field as control
    let mut rng = linalg::rng_from_seed(2);
    let mut z = linalg::random_complex_vec(&mut rng, nv);
    // crude smoothing: average transported neighbors several times
    let bundle = donaldson::bundle::build_bundle(&mesh, 2).unwrap();
    for _ in 0..40 {
        let mut nz = z.clone();
        for v in 0..nv {
            let mut acc = z[v]; let mut n = 1.0;
            for &h in &mesh.vertex_out[v] {
                let w = mesh.head(h);
                let t = C64::from_polar(1.0, -bundle.transport[h]);
                acc += t*z[w]; n += 1.0;
            }
            nz[v] = acc / n;
        }
        z = nz;
    }
    let gz = {
        let zv = nalgebra::DVector::from_column_slice(&z);
        let g: nalgebra::DVector<C64> = &gram * zv;
        g
    };
    let num: f64 = (0..nv).map(|i| (z[i].conj()*gz[i]).re).sum();
    let den: f64 = (0..nv).map(|i| z[i].norm_sqr()*mesh.vertex_weight[i]).sum();
    println!("smoothed-random Rayleigh quotient: {:.4}", num/den);
    let _ = DMatrix::<f64>::zeros(1,1);
}
