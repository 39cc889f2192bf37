mod common;

use common::{dense, dense_ladder, expm_anti_hermitian, max_abs_diff};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use vqe_core::fci::{fci_solve, sector_matrix, SectorBasis};
use vqe_core::fermion::{
    build_hamiltonian, jordan_wigner, normal_order, number_operator, parse_fcidump, realize_generator, write_fcidump,
    ExcitationGenerator, FermionOperator, MolecularIntegrals, Provenance,
};
use vqe_core::statevector::{SparseOperator, Statevector};
use vqe_core::vqe::molecular_hamiltonian;

fn one(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn ladder(p: usize, creation: bool) -> FermionOperator {
    let mut f = FermionOperator::new();
    f.push(vec![(p, creation)], one(1.0));
    f
}

fn dense_fermion(f: &FermionOperator, n: usize) -> DMatrix<Complex64> {
    let d = 1 << n;
    let mut m = DMatrix::identity(d, d) * f.constant;
    for (ops, c) in &f.terms {
        let mut t = DMatrix::identity(d, d);
        for &(p, cr) in ops {
            t *= dense_ladder(p, n, cr);
        }
        m += t * *c;
    }
    m
}

/// `{a_p, a_q^+} = delta_pq` and `{a_p, a_q} = 0` on every pair of four modes.
#[test]
fn anticommutation_relations_are_exhaustive_on_four_modes() {
    let n = 4;
    let id = DMatrix::<Complex64>::identity(16, 16);
    let zero = DMatrix::<Complex64>::zeros(16, 16);
    for p in 0..n {
        for q in 0..n {
            for (cp, cq) in [(false, true), (false, false), (true, true)] {
                let a = dense(&jordan_wigner(&ladder(p, cp), n).unwrap());
                let b = dense(&jordan_wigner(&ladder(q, cq), n).unwrap());
                let anti = &a * &b + &b * &a;
                let expect = if p == q && cp != cq { &id } else { &zero };
                assert!(max_abs_diff(&anti, expect) < 1e-14, "p={p} q={q} {cp} {cq}");
            }
        }
    }
}

#[test]
fn ladder_images_match_kronecker_construction() {
    for n in 1..=4 {
        for p in 0..n {
            for cr in [false, true] {
                let jw = dense(&jordan_wigner(&ladder(p, cr), n).unwrap());
                assert!(max_abs_diff(&jw, &dense_ladder(p, n, cr)) < 1e-14);
            }
        }
    }
}

#[test]
fn occupation_projector() {
    let mut f = FermionOperator::new();
    f.push(vec![(0, true), (0, false)], one(1.0));
    let q = jordan_wigner(&f, 1).unwrap();
    let expect = DMatrix::from_row_slice(2, 2, &[one(0.0), one(0.0), one(0.0), one(1.0)]);
    assert!(max_abs_diff(&dense(&q), &expect) < 1e-15);
}

#[test]
fn hopping_on_three_modes_matches_dense() {
    let mut f = FermionOperator::new();
    f.push(vec![(2, true), (0, false)], one(1.0));
    f.push(vec![(0, true), (2, false)], one(1.0));
    let q = jordan_wigner(&f, 3).unwrap();
    assert!(max_abs_diff(&dense(&q), &dense_fermion(&f, 3)) < 1e-14);
}

fn product_strategy() -> impl Strategy<Value = FermionOperator> {
    prop::collection::vec(
        (prop::collection::vec((0..3usize, any::<bool>()), 1..=4), -1.0..1.0f64, -1.0..1.0f64),
        1..=4,
    )
    .prop_map(|terms| {
        let mut f = FermionOperator::new();
        for (ops, re, im) in terms {
            f.push(ops, Complex64::new(re, im));
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arbitrary_products_map_like_dense_ladders(f in product_strategy()) {
        let q = jordan_wigner(&f, 3).unwrap();
        prop_assert!(max_abs_diff(&dense(&q), &dense_fermion(&f, 3)) < 1e-12);
    }

    #[test]
    fn normal_ordering_preserves_the_operator(f in product_strategy()) {
        let no = normal_order(&f);
        prop_assert!(max_abs_diff(&dense_fermion(&no, 3), &dense_fermion(&f, 3)) < 1e-12);
        for (ops, _) in &no.terms {
            let first_ann = ops.iter().position(|(_, c)| !c).unwrap_or(ops.len());
            prop_assert!(ops[first_ann..].iter().all(|(_, c)| !c));
        }
    }

    #[test]
    fn fcidump_round_trip(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3usize);
        let mut mi = MolecularIntegrals::zeros("rt", n, rng.gen_range(0..=n), rng.gen_range(0..=n)).unwrap();
        mi.e_core = rng.gen_range(-2.0..2.0);
        for p in 0..n {
            for q in 0..=p {
                mi.set_h1(p, q, rng.gen_range(-1.0..1.0));
                for r in 0..n {
                    for s in 0..=r {
                        mi.set_h2(p, q, r, s, rng.gen_range(-1.0..1.0));
                    }
                }
            }
        }
        let back = parse_fcidump(&write_fcidump(&mi)).unwrap();
        prop_assert_eq!((back.n_spatial, back.n_alpha, back.n_beta), (n, mi.n_alpha, mi.n_beta));
        prop_assert!((back.e_core - mi.e_core).abs() < 1e-12);
        for p in 0..n {
            for q in 0..n {
                prop_assert!((back.h1(p, q) - mi.h1(p, q)).abs() < 1e-12);
                for r in 0..n {
                    for s in 0..n {
                        prop_assert!((back.h2(p, q, r, s) - mi.h2(p, q, r, s)).abs() < 1e-12);
                    }
                }
            }
        }
        back.check_symmetry(1e-10).unwrap();
    }
}

#[test]
fn hamiltonian_is_hermitian_and_conserves_number() {
    let mi = common::integrals("h4_sto3g_0.900");
    let h = molecular_hamiltonian(&mi).unwrap();
    let d = dense(&h);
    assert!(max_abs_diff(&d, &d.adjoint()) < 1e-12);
    let n = dense(&jordan_wigner(&number_operator(8), 8).unwrap());
    assert!(max_abs_diff(&(&d * &n), &(&n * &d)) < 1e-12);
}

#[test]
fn h2_sector_block_is_the_fci_matrix() {
    let mi = common::integrals("h2_sto3g_0.735");
    assert_eq!((mi.n_spatial, mi.n_electrons()), (2, 2));
    assert_eq!(mi.n_alpha, mi.n_beta);
    let h = molecular_hamiltonian(&mi).unwrap();
    let d = dense(&h);
    let sector = SectorBasis::new(2, 1, 1).unwrap();
    let basis = sector.basis();
    let block = DMatrix::from_fn(basis.len(), basis.len(), |i, j| d[(basis[i] as usize, basis[j] as usize)]);
    let sparse = SparseOperator::from_qubit_operator(&h, &sector.subspace()).unwrap();
    assert!(max_abs_diff(&block, &sector_matrix(&sparse)) < 1e-12);
    let direct = block.map(|v| v.re).symmetric_eigenvalues();
    let mut direct: Vec<f64> = direct.iter().copied().collect();
    direct.sort_by(f64::total_cmp);
    let fci: Vec<f64> = fci_solve(&h, &sector, 4).unwrap().iter().map(|e| e.energy).collect();
    for (a, b) in direct.iter().zip(&fci) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn fixture_regression_constants_agree_with_the_oracle() {
    let m = common::manifest();
    let mut checked = 0;
    for e in &m.fixtures {
        let mi = m.load_integrals(e).unwrap();
        mi.check_symmetry(1e-10).unwrap();
        let h = molecular_hamiltonian(&mi).unwrap();
        let sector = SectorBasis::new(mi.n_spatial, mi.n_alpha, mi.n_beta).unwrap();
        let hf = Statevector::hf_state(mi.n_spin_orbitals(), mi.hf_occupation()).unwrap();
        let e_hf = hf.expectation(&h).unwrap().re;
        if let Some(ref_hf) = e.hf_energy {
            assert!((e_hf - ref_hf).abs() < 1e-8, "{}: HF {e_hf} vs {ref_hf}", e.label);
        }
        if let Some(ref_fci) = e.fci_ground_energy {
            let e0 = fci_solve(&h, &sector, 1).unwrap()[0].energy;
            assert!((e0 - ref_fci).abs() < 1e-8, "{}: FCI {e0} vs {ref_fci}", e.label);
            assert!(e0 <= e_hf + 1e-12);
            checked += 1;
        }
    }
    assert!(checked >= 50, "only {checked} fixtures carry FCI constants");
}

#[test]
fn lih_correlation_energy_is_positive() {
    let mi = common::integrals("lih_sto3g_1.400");
    let h = molecular_hamiltonian(&mi).unwrap();
    let hf = Statevector::hf_state(mi.n_spin_orbitals(), mi.hf_occupation()).unwrap();
    let e_hf = hf.expectation(&h).unwrap().re;
    let sector = SectorBasis::new(mi.n_spatial, mi.n_alpha, mi.n_beta).unwrap();
    let e0 = fci_solve(&h, &sector, 1).unwrap()[0].energy;
    assert!(e_hf - e0 > 1e-4);
}

#[test]
fn h2o_reference_energy_matches_hf() {
    let m = common::manifest();
    let e = m.get("h2o_sto3g_0.950").unwrap();
    let mi = m.load_integrals(e).unwrap();
    assert_eq!(mi.n_spin_orbitals(), 14);
    assert_eq!(mi.hf_occupation(), (1 << 10) - 1);
    let h = build_hamiltonian(&mi);
    let q = jordan_wigner(&h, 14).unwrap();
    let hf = Statevector::hf_state(14, mi.hf_occupation()).unwrap();
    assert!((hf.expectation(&q).unwrap().re - e.hf_energy.unwrap()).abs() < 1e-8);
}

#[test]
fn single_excitation_generator_is_anti_hermitian_and_unitary() {
    let g = ExcitationGenerator::fermionic(vec![0], vec![2], Provenance::Uccsd);
    let a = realize_generator(&g, 4).unwrap();
    assert!(a.is_anti_hermitian(1e-14));
    let d = dense(&a);
    let u = expm_anti_hermitian(&d, 0.7);
    assert!(max_abs_diff(&(u.adjoint() * &u), &DMatrix::identity(16, 16)) < 1e-12);
}

#[test]
fn spin_violating_generator_is_rejected() {
    // creators alpha, alpha; annihilators alpha, beta
    let g = ExcitationGenerator::fermionic(vec![0, 1], vec![2, 4], Provenance::Generalized);
    assert!(!g.is_spin_conserving());
    assert!(realize_generator(&g, 6).is_err());
}

#[test]
fn h2_double_spans_the_two_determinant_space() {
    let g = ExcitationGenerator::fermionic(vec![0, 1], vec![2, 3], Provenance::Uccsd);
    let d = dense(&realize_generator(&g, 4).unwrap());
    for theta in [0.1, 0.8, 2.0] {
        let u = expm_anti_hermitian(&d, theta);
        let col = u.column(0b0011);
        let weight = col[0b0011].norm_sqr() + col[0b1100].norm_sqr();
        assert!((weight - 1.0).abs() < 1e-12);
        assert!((col[0b0011].norm() - theta.cos().abs()).abs() < 1e-12);
    }
}
