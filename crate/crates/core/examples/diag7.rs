use donaldson::geometry::*;
use donaldson::linalg;
use num_complex::Complex64 as C64;
use donaldson::hyp;

// Experiment: stencil accuracy vs chart-center choice.
// Variants: 0 = barycenter (current), 1 = kill gamma2 = sum W wbar^2,
// 2 = kill gammaT = sum W |w|^2, 3 = kill 0.5*(both, least squares)
fn build_variant(mesh: &HyperbolicMesh, f: usize, variant: usize) -> ([C64;3], [C64;3], [f64;3]) {
    let l01 = mesh.length[3*f];
    let l20 = mesh.length[3*f+2];
    let w0 = C64::new(0.0,0.0);
    let w1 = C64::new((l01/2.0).tanh(), 0.0);
    let a0 = mesh.corner[3*f];
    let w2 = C64::from_polar((l20/2.0).tanh(), a0);
    let mut c = (w0+w1+w2)/3.0;
    let mut pos = [w0,w1,w2];
    for _iter in 0..6 {
        pos = [hyp::to_origin(c,w0), hyp::to_origin(c,w1), hyp::to_origin(c,w2)];
        let area2 = ((pos[1]-pos[0]).conj()*(pos[2]-pos[0])).im;
        let den = C64::new(0.0, 2.0*area2);
        let w: Vec<C64> = (0..3).map(|j| (pos[(j+1)%3]-pos[(j+2)%3])/den).collect();
        let g2: C64 = (0..3).map(|j| w[j]*pos[j].conj()*pos[j].conj()).sum();
        let gt: C64 = (0..3).map(|j| w[j]*pos[j].norm_sqr()).sum();
        let delta = match variant {
            0 => C64::new(0.0,0.0),
            1 => g2.conj()/2.0,
            2 => gt,
            _ => (g2.conj()/2.0 + gt)/2.0,
        };
        if delta.norm() < 1e-15 { break; }
        // move the center by delta in the CURRENT chart
        c = hyp::from_origin(c, delta);
    }
    pos = [hyp::to_origin(c,w0), hyp::to_origin(c,w1), hyp::to_origin(c,w2)];
    let area2 = ((pos[1]-pos[0]).conj()*(pos[2]-pos[0])).im;
    let den = C64::new(0.0, 2.0*area2);
    let wir = [ (pos[1]-pos[2])/den, (pos[2]-pos[0])/den, (pos[0]-pos[1])/den ];
    let mut delta_fr = [0.0;3];
    for i in 0..3 {
        let h = 3*f+i;
        delta_fr[i] = hyp::direction(pos[i], pos[(i+1)%3]) - mesh.atlas[h];
    }
    (pos, wir, delta_fr)
}

fn main() {
    let mesh = generate_genus2_mesh(3).unwrap();
    let nf = mesh.n_faces();
    for m in [1i64, 2, 3] {
        print!("m={m}: ");
        for variant in 0..4 {
            // assemble dbar with sqrt(2) Hodge factor and variant charts
            let mut trip = Vec::new();
            for f in 0..nf {
                let (pos, wir, dfr) = build_variant(&mesh, f, variant);
                for j in 0..3 {
                    let gauge = (1.0-pos[j].norm_sqr()).powi(m as i32);
                    let phase = C64::from_polar(1.0, m as f64 * dfr[j]);
                    trip.push((f, mesh.faces[f][j], wir[j]*phase*gauge/C64::new(2f64.sqrt(),0.0)));
                }
            }
            let d = linalg::CsrC::from_triplets(nf, mesh.n_vertices, trip);
            let gram = d.gram_weighted_dense(&mesh.face_area);
            let vals = linalg::hermitian_eigs_ascending(&gram, &mesh.vertex_weight);
            print!(" v{variant}: {:.4} (ratio {:.4})", vals[0], vals[0]/m as f64);
        }
        println!();
    }
}
