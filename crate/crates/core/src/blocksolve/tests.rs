use super::*;
use crate::assembly::{assemble, AssemblyStats};
use crate::linalg::dense_solve;
use crate::mesh::{generate_unit_mesh, CellKind, Mesh};
use crate::problem::{boundary_data, DppParameters, ManufacturedSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(f: Formulation, kind: CellKind, n: usize, params: &DppParameters) -> (Mesh, BlockSystem) {
    let mesh = generate_unit_mesh(kind.dim(), kind, n).unwrap();
    let bcs = boundary_data(&ManufacturedSolution::for_dim(kind.dim()), &mesh).unwrap();
    let s = assemble(f, &mesh, params, &bcs).unwrap();
    (mesh, s)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn config(method: Method, rtol: f64) -> SolverConfig {
    SolverConfig::for_method(method).with_rtol(rtol)
}

fn direct(s: &BlockSystem) -> Vec<f64> {
    let (k, f) = monolithic_view(s).unwrap();
    dense_solve(&k, &f).unwrap()
}

#[test]
fn identity_like_system_converges_at_once() {
    let n = 5;
    let id = CsrMatrix::identity(n);
    let zero = CsrMatrix::zeros(n, n);
    let s = BlockSystem {
        formulation: Formulation::CgVms,
        cell_kind: CellKind::Tri,
        dim: 2,
        uu: [id.clone(), id.clone()],
        up: [zero.clone(), zero.clone()],
        pu: [zero.clone(), zero.clone()],
        pp: [id.clone(), id.clone()],
        pp12: zero.clone(),
        pp21: zero,
        rhs_u: [vec![1.0; n], vec![2.0; n]],
        rhs_p: [vec![3.0; n], vec![-1.0; n]],
        stats: AssemblyStats::default(),
    };
    for m in Method::ALL {
        let r = solve(&s, &config(m, 1e-10)).unwrap();
        assert_eq!(r.stats.iterations, 1, "{m}");
        assert!(rel_diff(&r.x, &s.global_rhs()) < 1e-12);
    }
}

#[test]
fn both_methods_match_direct_solves() {
    let params = DppParameters::paper_2d();
    let cases =
        [(Formulation::Hdiv, CellKind::Tri), (Formulation::CgVms, CellKind::Quad), (Formulation::DgVms, CellKind::Tri)];
    for (f, kind) in cases {
        let (_, s) = system(f, kind, 4, &params);
        let exact = direct(&s);
        let mut sols = Vec::new();
        for m in Method::ALL {
            let r = solve(&s, &config(m, 1e-7)).unwrap();
            assert!(r.stats.converged);
            assert!(rel_diff(&r.x, &exact) < 1e-6, "{f} {m}: {}", rel_diff(&r.x, &exact));
            let tight = solve(&s, &config(m, 1e-10)).unwrap();
            sols.push(tight.x);
        }
        assert!(rel_diff(&sols[0], &sols[1]) < 1e-6, "{f}");
    }
}

#[test]
fn methods_agree_without_exchange() {
    // the manufactured data divide by β, so drive the decoupled system with random loads
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut params = DppParameters::paper_2d();
    params.beta = 0.0;
    for f in Formulation::ALL {
        let mesh = generate_unit_mesh(2, CellKind::Quad, 4).unwrap();
        let bcs = boundary_data(&ManufacturedSolution::ConstantPressure { dim: 2, value: 0.0 }, &mesh).unwrap();
        let mut s = assemble(f, &mesh, &params, &bcs).unwrap();
        for v in s.rhs_u.iter_mut().chain(s.rhs_p.iter_mut()).flatten() {
            *v = rng.random_range(-1.0..1.0);
        }
        let a = solve(&s, &config(Method::Scale, 1e-11)).unwrap();
        let b = solve(&s, &config(Method::Field, 1e-11)).unwrap();
        assert!(rel_diff(&a.x, &b.x) < 1e-8, "{f}");
        let (ia, ib) = (a.stats.iterations as f64, b.stats.iterations as f64);
        assert!(ia <= 2.0 * ib + 2.0 && ib <= 2.0 * ia + 2.0, "{f}: {ia} vs {ib}");
    }
}

#[test]
fn scale_split_on_decoupled_networks_matches_separate_solves() {
    let params = DppParameters::paper_2d();
    let (_, mut s) = system(Formulation::CgVms, CellKind::Tri, 6, &params);
    let n_p = s.pp12.n_rows();
    s.pp12 = CsrMatrix::zeros(n_p, n_p);
    s.pp21 = CsrMatrix::zeros(n_p, n_p);
    let cfg = config(Method::Scale, 1e-9);
    let coupled = solve(&s, &cfg).unwrap();

    // each network on its own, preconditioned by the same per-network Schur split
    let PcSpec::FieldSplit(root) = &cfg.pc else { panic!() };
    let mut iters = Vec::new();
    let mut parts = Vec::new();
    for net in 0..2 {
        let fields = [Field::velocity(net), Field::pressure(net)];
        let k = s.sub_block(&fields, &fields).unwrap();
        let rhs: Vec<f64> = fields.iter().flat_map(|&f| s.rhs(f).to_vec()).collect();
        let sizes: Vec<usize> = fields.iter().map(|&f| s.field_size(f)).collect();
        let pc = PcNode::build(&root.children[net], &k, &sizes).unwrap();
        let opts = GmresOptions { rtol: 1e-9, ..Default::default() };
        let (x, st) = gmres(&k, &pc, &rhs, None, &opts).unwrap();
        iters.push(st.iterations);
        parts.push(x);
    }
    let sets = s.index_sets();
    let mut joined = vec![0.0; s.n_dofs()];
    for net in 0..2 {
        let (u, p) = (sets[2 * net].clone(), sets[2 * net + 1].clone());
        joined[u.clone()].copy_from_slice(&parts[net][..u.len()]);
        joined[p].copy_from_slice(&parts[net][u.len()..]);
    }
    assert!(rel_diff(&coupled.x, &joined) < 1e-7);
    let it = coupled.stats.iterations;
    assert!(it >= *iters.iter().max().unwrap() && it <= iters.iter().sum(), "{it} vs {iters:?}");
}

#[test]
fn preconditioners_are_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = DppParameters::paper_2d();
    let (_, s) = system(Formulation::DgVms, CellKind::Quad, 3, &params);
    for pc in [build_scale_split(&s).unwrap(), build_field_split(&s).unwrap()] {
        let n = pc.dim();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -2.3);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let mut zx = vec![0.0; n];
        let mut zy = vec![0.0; n];
        let mut zm = vec![0.0; n];
        pc.apply(&x, &mut zx);
        pc.apply(&y, &mut zy);
        pc.apply(&mix, &mut zm);
        let lin: Vec<f64> = zx.iter().zip(&zy).map(|(p, q)| a * p + b * q).collect();
        assert!(rel_diff(&zm, &lin) < 1e-10);
    }
}

#[test]
fn constant_pressure_patch_is_exact() {
    let params = DppParameters::paper_2d();
    for kind in [CellKind::Tri, CellKind::Quad] {
        let mesh = generate_unit_mesh(2, kind, 4).unwrap();
        let bcs = boundary_data(&ManufacturedSolution::ConstantPressure { dim: 2, value: 2.0 }, &mesh).unwrap();
        for f in Formulation::ALL {
            let s = assemble(f, &mesh, &params, &bcs).unwrap();
            for m in Method::ALL {
                let r = solve(&s, &config(m, 1e-12)).unwrap();
                assert!(r.solution.u.iter().flatten().all(|v| v.abs() < 1e-10));
                assert!(r.solution.p.iter().flatten().all(|v| (v - 2.0).abs() < 1e-10));
            }
        }
    }
}

#[test]
fn preconditioning_reduces_iterations() {
    let params = DppParameters::paper_2d();
    for f in Formulation::ALL {
        let (_, s) = system(f, CellKind::Tri, 4, &params);
        let plain = SolverConfig { pc: PcSpec::None, ..config(Method::Scale, 1e-7) };
        // unpreconditioned DG may exhaust the iteration cap, which still counts
        let none = match solve(&s, &plain) {
            Ok(r) => r.stats.iterations,
            Err(Error::NotConverged(r)) => r.stats.iterations,
            Err(e) => panic!("{e}"),
        };
        for m in Method::ALL {
            let with = solve(&s, &config(m, 1e-7)).unwrap().stats.iterations;
            assert!(with < none, "{f} {m}: {with} vs {none}");
        }
    }
}

#[test]
fn non_convergence_is_reported() {
    let params = DppParameters::paper_2d();
    let (_, s) = system(Formulation::Hdiv, CellKind::Tri, 4, &params);
    let cfg = SolverConfig { max_iter: 1, ..config(Method::Field, 1e-12) };
    match solve(&s, &cfg) {
        Err(Error::NotConverged(r)) => {
            assert!(!r.stats.converged);
            assert_eq!(r.stats.iterations, 1);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn report_formats() {
    let params = DppParameters::paper_2d();
    let (_, s) = system(Formulation::Hdiv, CellKind::Quad, 3, &params);
    let r = solve(&s, &config(Method::Scale, 1e-8)).unwrap();
    let kv = r.key_values();
    assert!(kv.contains(&format!("ksp={}\n", r.stats.iterations)));
    assert!(kv.contains("converged=true"));
    assert_eq!(r.csv_row().split(',').count(), SolveReport::CSV_HEADER.split(',').count());
    let t = r.timings;
    assert!(t.total >= t.assembly + t.solve - 1e-12);
}

#[test]
fn mismatched_split_is_an_error() {
    let params = DppParameters::paper_2d();
    let (_, s) = system(Formulation::Hdiv, CellKind::Quad, 2, &params);
    let (k, _) = monolithic_view(&s).unwrap();
    let pc = SolverConfig::for_method(Method::Field).pc;
    assert!(PcNode::build(&pc, &k, &[k.n_rows()]).is_err());
}
