use donaldson::geometry::*;
use donaldson::linalg;
use num_complex::Complex64 as C64;
use donaldson::hyp;
use nalgebra::DMatrix;

// 6-point quadratic-exact dbar stencil prototype.
fn main() {
    for level in [2u32, 3, 4] {
        let mesh = generate_genus2_mesh(level).unwrap();
        let nf = mesh.n_faces();
        print!("level {level}:");
        for m in [1i64, 2, 3] {
            let mut trip = Vec::new();
            for f in 0..nf {
                let ch = &mesh.chart[f];
                // collect 6 points: face corners (vertex, pos, delta) + opposite corners
                let mut pts: Vec<(usize, C64, f64)> = (0..3)
                    .map(|i| (mesh.faces[f][i], ch.pos[i], ch.delta[i]))
                    .collect();
                for i in 0..3 {
                    let ht = mesh.twin[3*f+i];
                    let g = ht / 3;
                    // neighbor face g contains edge (head(h), tail(h)) = (b, a)
                    let b_idx = ht % 3; // tail of ht in face g is b = head of h
                    let x_local = (b_idx + 2) % 3; // opposite vertex index in g
                    let x = mesh.faces[g][x_local];
                    if pts.iter().any(|p| p.0 == x) { continue; }
                    let wa = ch.pos[i];
                    let wb = ch.pos[(i+1)%3];
                    // at vertex b in face g: interior corner from edge b->a ccw to b->x
                    let corner_b = mesh.corner[ht];
                    let dir = hyp::direction(wb, wa) + corner_b;
                    let l_bx = mesh.length[3*g + (b_idx+2)%3]; // edge (x,b): halfedge index x->b is b_idx+2
                    let wx = hyp::exp_map(wb, dir, l_bx);
                    let delta_x = hyp::direction(wx, wb) - mesh.atlas[3*g + (b_idx+2)%3];
                    pts.push((x, wx, delta_x));
                }
                if pts.len() < 6 {
                    // fallback affine
                    for j in 0..3 {
                        let gauge = (1.0-ch.pos[j].norm_sqr()).powi(m as i32);
                        let phase = C64::from_polar(1.0, m as f64 * ch.delta[j]);
                        trip.push((f, mesh.faces[f][j], ch.wirtinger[j]*phase*gauge/C64::new(2f64.sqrt(),0.0)));
                    }
                    continue;
                }
                // solve for stencil row: sum V_j p(w_j) = d/dwbar p (0) for p in basis
                let n = pts.len().min(6);
                let basis = |w: C64| [C64::new(1.0,0.0), w, w.conj(), w*w, w*w.conj(), w.conj()*w.conj()];
                let mut a = DMatrix::<C64>::zeros(6, n);
                for (j, p) in pts.iter().take(n).enumerate() {
                    let b = basis(p.1);
                    for t in 0..6 { a[(t, j)] = b[t]; }
                }
                // target: derivative wrt wbar at 0 of each basis fn: [0,0,1,0,0,0]
                let rhs = nalgebra::DVector::from_vec(vec![
                    C64::new(0.0,0.0), C64::new(0.0,0.0), C64::new(1.0,0.0),
                    C64::new(0.0,0.0), C64::new(0.0,0.0), C64::new(0.0,0.0)]);
                let sol = a.clone().lu().solve(&rhs);
                let v = match sol { Some(v) => v, None => { continue; } };
                for (j, p) in pts.iter().take(n).enumerate() {
                    let gauge = (1.0-p.1.norm_sqr()).powi(m as i32);
                    let phase = C64::from_polar(1.0, m as f64 * p.2);
                    // output: q/2 * sqrt(2) Hodge
                    trip.push((f, p.0, v[j]*phase*gauge/C64::new(2f64.sqrt(),0.0)));
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
