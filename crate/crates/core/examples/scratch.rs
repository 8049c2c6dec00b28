// temporary debugging playground; removed before release
use eigenshape_core::assembly::*;
use eigenshape_core::eigen::*;
use eigenshape_core::mesh::*;
use eigenshape_core::optimize::*;
use eigenshape_core::rearrange::*;
use eigenshape_core::sparse::CsrMatrix;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "rect" => rect_random(),
        "sweep" => sweep_flatness(),
        "drift" => drift_1d(),
        "seeds" => seeds_2048(),
        "table" => disk_table(),
        "stretch" => stretch_margin(),
        "radial" => radial_match(),
        _ => println!("usage: scratch <rect|sweep|drift|seeds|table|stretch|radial>"),
    }
}

fn disk_table() {
    let r_dom = 1.0 / std::f64::consts::PI.sqrt();
    let kappa = 0.5;
    let paper_lambda = [80.2483, 49.5896, 34.6791, 25.6912, 19.7057, 15.3542, 12.0286];
    let cs = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];
    let t0 = std::time::Instant::now();
    let mesh64 = gen_disk(r_dom, 64).unwrap();
    let ops64 = assemble_operators(&mesh64).unwrap();
    let mesh128 = gen_disk(r_dom, 128).unwrap();
    let ops128 = assemble_operators(&mesh128).unwrap();
    println!("mesh+assembly: {:?}", t0.elapsed());
    for (i, &c) in cs.iter().enumerate() {
        let cap = cap_radius_from_fraction(r_dom, c).unwrap();
        let t = std::time::Instant::now();
        let w64 = weight_from_descriptor(&mesh64, Descriptor::DiskCap(cap), kappa).unwrap();
        let l64 = principal_eigen(&mesh64, &ops64, &w64, BoundaryCondition::NEUMANN).unwrap().lambda;
        let w128 = weight_from_descriptor(&mesh128, Descriptor::DiskCap(cap), kappa).unwrap();
        let r128 = principal_eigen(&mesh128, &ops128, &w128, BoundaryCondition::NEUMANN).unwrap();
        let l128 = r128.lambda;
        let extrap = (4.0 * l128 - l64) / 3.0;
        let rel = (extrap - paper_lambda[i]).abs() / paper_lambda[i];
        println!(
            "c {c:4}: rc {:7.4} l64 {l64:9.4} l128 {l128:9.4} extrap {extrap:9.4} paper {:9.4} rel {rel:.2e} iters {} ({:?})",
            cap.cap_radius, paper_lambda[i], r128.iters, t.elapsed()
        );
    }
}

fn stretch_margin() {
    let kappa = 0.5;
    for c in [0.1f64, 0.2, 0.3] {
        let t = std::time::Instant::now();
        let mesh = gen_disk(1.0, 128).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        let r0 = c.sqrt();
        let ball = RadialRings::ball(r0, 1.0).unwrap();
        let w_ball = weight_from_descriptor(&mesh, Descriptor::RadialRings(ball.clone()), kappa).unwrap();
        let l_ball = principal_eigen(&mesh, &ops, &w_ball, BoundaryCondition::NEUMANN).unwrap().lambda;
        let stretched = stretch_disk(&ball).unwrap();
        let w_hat = weight_from_predicate(&mesh, kappa, |p| stretched.contains(p).unwrap_or(false)).unwrap();
        let l_hat = principal_eigen(&mesh, &ops, &w_hat, BoundaryCondition::NEUMANN).unwrap().lambda;
        let radial = radial_eigen(2, &ball, kappa, BoundaryCondition::NEUMANN, 4000).unwrap().lambda;
        println!(
            "c {c}: l_ball {l_ball:.5} (radial {radial:.5}) l_hat {l_hat:.5} ratio {:.4} vs 0.75 ({:?})",
            l_hat / l_ball,
            t.elapsed()
        );
    }
}

fn radial_match() {
    let kappa = 0.5;
    let rings = RadialRings::new(vec![[0.2, 0.35], [0.6, 0.75]], 1.0).unwrap();
    let mesh = gen_disk(1.0, 96).unwrap();
    let ops = assemble_operators(&mesh).unwrap();
    for beta in [0.0, 1.0, 10.0] {
        let bc = BoundaryCondition::Robin(beta);
        let t = std::time::Instant::now();
        let w = weight_from_descriptor(&mesh, Descriptor::RadialRings(rings.clone()), kappa).unwrap();
        let two_d = principal_eigen(&mesh, &ops, &w, bc).unwrap();
        let radial = radial_eigen(2, &rings, kappa, bc, 6000).unwrap();
        // angular variance over mesh rings
        let mut worst: f64 = 0.0;
        let n_rings = 96usize;
        let mut start = 1usize;
        for i in 1..=n_rings {
            let count = 6 * i;
            let vals = &two_d.phi[start..start + count];
            let mean = vals.iter().sum::<f64>() / count as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
            if mean.abs() > 1e-12 {
                worst = worst.max(var / (mean * mean));
            }
            start += count;
        }
        println!(
            "beta {beta}: 2d {:.6} radial {:.6} rel {:.2e} max-ang-var {worst:.2e} ({:?})",
            two_d.lambda,
            radial.lambda,
            (two_d.lambda - radial.lambda).abs() / radial.lambda,
            t.elapsed()
        );
    }
}

fn rect_random() {
    let mesh = gen_rectangle(1.0, 1.0, 24, 24).unwrap();
    let ops = assemble_operators(&mesh).unwrap();
    let trace = optimize_threshold(
        &mesh,
        &ops,
        BoundaryCondition::NEUMANN,
        0.5,
        0.2,
        &InitSeed::RandomBalanced(3),
        &OptimizeOptions::default(),
    );
    match trace {
        Ok(t) => println!("ok: lambda {} stop {:?}", t.final_lambda(), t.stop),
        Err(e) => println!("ERROR: {e}"),
    }
    // replay the first iterations manually to find the stalling probe
    let target = 0.2 * mesh.total_measure();
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let noise: Vec<f64> = (0..mesh.n_elements()).map(|_| rng.gen::<f64>()).collect();
    // replicate the 3-pass smoothing
    let mut vertex_elems: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for (e, vs) in mesh.elements().enumerate() {
        for &v in vs {
            vertex_elems[v].push(e);
        }
    }
    let mut cur = noise;
    for _ in 0..3 {
        let mut next = vec![0.0; cur.len()];
        for (e, vs) in mesh.elements().enumerate() {
            let (mut acc, mut cnt) = (0.0, 0usize);
            for &v in vs {
                for &e2 in &vertex_elems[v] {
                    acc += cur[e2];
                    cnt += 1;
                }
            }
            next[e] = acc / cnt as f64;
        }
        cur = next;
    }
    let (sel, _, _) = select_by_element_scores(&mesh, &cur, target);
    let mut w = Weight::bang_bang(&mesh, 0.5, &sel).unwrap();
    for it in 0..12 {
        let m = weighted_mass(&mesh, &w).unwrap();
        // dense spectrum of the pencil at a few lambdas around the expected root
        let r = principal_eigen(&mesh, &ops, &w, BoundaryCondition::NEUMANN);
        match &r {
            Ok(r) => println!("iter {it}: lambda {} margin {:.2e} iters {}", r.lambda, r.positivity_margin, r.iters),
            Err(e) => {
                println!("iter {it}: ERROR {e}");
                for lam in [10.0, 20.0, 40.0, 80.0] {
                    let g = CsrMatrix::linear_combination(&[(1.0, &ops.k), (-lam, &m)]);
                    let eigs = dense_lowest(&g, &ops.m0, 4);
                    println!("   lam {lam}: lowest {eigs:?}");
                }
                return;
            }
        }
        let r = r.unwrap();
        let (next, _) = bathtub_threshold(&mesh, &r.phi, target, 0.5).unwrap();
        if next.selected() == w.selected() {
            println!("fixed point at iter {it}");
            return;
        }
        w = next;
    }
}

fn dense_lowest(g: &CsrMatrix, m0: &CsrMatrix, k: usize) -> Vec<f64> {
    use nalgebra::DMatrix;
    let n = g.n();
    let mut gd = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in g.triplets() {
        gd[(i, j)] += v;
    }
    let mut md = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in m0.triplets() {
        md[(i, j)] += v;
    }
    let chol = md.cholesky().unwrap();
    let l = chol.l();
    let linv_g = l.solve_lower_triangular(&gd).unwrap();
    let a = l.solve_lower_triangular(&linv_g.transpose()).unwrap();
    let sym = (&a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(k);
    ev
}

fn dense_smallest_ref(g: &CsrMatrix, m0: &CsrMatrix) -> f64 {
    use nalgebra::DMatrix;
    let n = g.n();
    let mut gd = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in g.triplets() {
        gd[(i, j)] += v;
    }
    let mut md = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in m0.triplets() {
        md[(i, j)] += v;
    }
    let chol = md.cholesky().unwrap();
    let l = chol.l();
    let linv_g = l.solve_lower_triangular(&gd).unwrap();
    let a = l.solve_lower_triangular(&linv_g.transpose()).unwrap();
    let sym = (&a + a.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn sweep_flatness() {
    for factor in [10.0, 1.2] {
        let (kappa, c) = (0.5, 0.3);
        let bs = beta_star(kappa, c).unwrap();
        let bc = BoundaryCondition::Robin(factor * bs);
        println!("beta = {factor} * beta_star:");
        let (sweep, _) = sweep_intervals_1d(kappa, c, bc, 15).unwrap();
        for (a, l) in &sweep {
            println!("  a {a:6.4}  lambda {l:.10}");
        }
    }
}

fn seeds_2048() {
    for kappa in [0.5, 1.0, 2.0] {
        for c in [0.2, 0.5] {
            let bs = beta_star(kappa, c).unwrap();
            let mesh = gen_interval(2048).unwrap();
            let ops = assemble_operators(&mesh).unwrap();
            for (label, factor) in [("1.2", 1.2), ("0.8", 0.8)] {
                let bc = BoundaryCondition::Robin(factor * bs);
                let mut best: Option<(f64, Vec<bool>, &str)> = None;
                for (name, seed) in [
                    ("half", InitSeed::HalfDomain),
                    ("ball", InitSeed::CenteredBall),
                    ("rand", InitSeed::RandomBalanced(42)),
                ] {
                    let t = optimize_threshold(&mesh, &ops, bc, kappa, c, &seed, &OptimizeOptions::default());
                    match t {
                        Ok(t) => {
                            let l = t.final_lambda();
                            if best.as_ref().map_or(true, |(b, _, _)| l < *b) {
                                best = Some((l, t.final_weight.selected(), name));
                            }
                        }
                        Err(e) => println!("  seed {name} failed: {e}"),
                    }
                }
                let (l, sel, name) = best.unwrap();
                let xs: Vec<f64> = (0..2048).filter(|&e| sel[e]).map(|e| mesh.centroid(e)[0]).collect();
                let (lo, hi) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                let contiguous = xs.len() == ((hi - lo) / (1.0 / 2048.0)).round() as usize + 1;
                println!(
                    "kappa {kappa} c {c} beta {label}b*: best {name} lambda {l:.6} support [{lo:.5},{hi:.5}] contig {contiguous}"
                );
            }
        }
    }
}

fn drift_1d() {
    let (kappa, c) = (0.5, 0.3);
    let bs = beta_star(kappa, c).unwrap();
    let mesh = gen_interval(256).unwrap();
    let ops = assemble_operators(&mesh).unwrap();
    let trace = optimize_threshold(
        &mesh,
        &ops,
        BoundaryCondition::Robin(10.0 * bs),
        kappa,
        c,
        &InitSeed::RandomBalanced(7),
        &OptimizeOptions::default(),
    )
    .unwrap();
    println!("stop {:?} after {} iters", trace.stop, trace.rows.len());
    for r in &trace.rows {
        println!("  k {:3} lambda {:.12} alpha {:.6} change {:.6}", r.iter, r.lambda, r.alpha, r.set_change);
    }
    let sel = trace.final_weight.selected();
    let xs: Vec<f64> = (0..mesh.n_elements()).filter(|&e| sel[e]).map(|e| mesh.centroid(e)[0]).collect();
    println!("support [{:.4}, {:.4}]", xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}
