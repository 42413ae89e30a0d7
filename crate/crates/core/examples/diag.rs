use donaldson::bundle::*;
use donaldson::geometry::*;

fn main() {
    for level in [2u32, 3] {
        let mesh = generate_genus2_mesh(level).unwrap();
        println!("== level {level}: V={} F={} h={:.3}", mesh.n_vertices, mesh.n_faces(), mesh.max_edge_length());
        for k in [2u32, 3] {
            let bundle = build_bundle(&mesh, k).unwrap();
            match bochner_constant(&mesh, &bundle) {
                Ok(l) => println!("  k={k}: bochner lambda_min = {l:.6}  (target {}, ratio {:.4})", k-1, l/(k as f64-1.0)),
                Err(e) => println!("  k={k}: bochner error {e}"),
            }
            match holomorphic_basis_with_spectrum(&mesh, k) {
                Ok((b, s)) => println!("  k={k}: basis dim {} gap {:.3e} sigma {:?}", b.len(), s.gap_ratio, s.sigma.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>()),
                Err(e) => println!("  k={k}: basis error: {e}"),
            }
        }
    }
}
