use donaldson::geometry::*;
use donaldson::linalg;

fn main() {
    // smallest eigenvalues of dbar^* dbar at tensor weight m, vs vertex mass
    for level in [2u32, 3] {
        let mesh = generate_genus2_mesh(level).unwrap();
        println!("level {level} (V={}):", mesh.n_vertices);
        for m in [-2i64, -1, 0, 1, 2] {
            let d = donaldson::bundle::test_dbar_matrix(&mesh, m);
            let gram = d.gram_weighted_dense(&mesh.face_area);
            let vals = linalg::hermitian_eigs_ascending(&gram, &mesh.vertex_weight);
            println!("  m={m:+}: {:?}", vals.iter().take(5).map(|x| format!("{x:.4}")).collect::<Vec<_>>());
        }
    }
}
