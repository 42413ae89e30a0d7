use donaldson::geometry::*;
use donaldson::linalg;
use num_complex::Complex64 as C64;

fn main() {
    let mesh = generate_genus2_mesh(3).unwrap();
    let nv = mesh.n_vertices;
    // vertex-representation kernel vectors of weight -2 (holomorphic K^2)
    let kernels = donaldson::bundle::test_kernel_vertex_vectors(&mesh, 2).unwrap();
    println!("got {} kernel vectors", kernels.len());
    let m = 2i64;
    let d = donaldson::bundle::test_dbar_matrix(&mesh, m);
    for (i, z) in kernels.iter().enumerate() {
        let psi: Vec<C64> = z.iter().map(|v| v.conj()).collect();
        let dpsi = d.matvec(&psi);
        let num: f64 = (0..mesh.n_faces()).map(|f| dpsi[f].norm_sqr()*mesh.face_area[f]).sum();
        let den: f64 = (0..nv).map(|v| psi[v].norm_sqr()*mesh.vertex_weight[v]).sum();
        println!("conj(kernel {i}): Rayleigh at m=2 -> {:.4} (continuum expectation {})", num/den, m);
    }
}
