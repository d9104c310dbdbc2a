import numpy as np
import pytest

from qrfm import blockenc as be
from qrfm.ledger import ResourceLedger
from qrfm.oracles import CollocationGrid, random_feature_spec
from qrfm.pipeline import (KappaCapExceeded, PipelineConfig, UnsupportedActivation, activation_encoding,
                           affine_encoding, boundary_weight_from, build_derivative_be, build_feature_be,
                           build_system_be, dilate, dilation_block_encoding, encoded_oracles,
                           recover_solution_state, resource_report, run_qrfm, solve_qlsp_semantic,
                           tiny_entry_oracle, tiny_oracles)
from qrfm.problems import helmholtz_problem
from qrfm.rfm import (assemble_feature_matrix, assemble_system, default_penalties, feature_derivative_matrix,
                      operator_matrix, solve_coefficients, unit_penalties)


def classical_state(problem, grid, spec, penalties=None):
    sys = assemble_system(problem, spec, grid, unit_penalties(grid) if penalties is None else penalties)
    v = solve_coefficients(sys)
    u = assemble_feature_matrix(spec, grid) @ v
    return u / np.linalg.norm(u), u


def rect_encoding(a, queries=None):
    """Encoded-tier wrapper for a rectangular matrix on a 2**d register."""
    d = int(np.ceil(np.log2(max(a.shape))))
    return be.BlockEncoding(np.linalg.norm(a, 2), 0, d, encoded=a, block_rows=np.arange(a.shape[0]),
                            block_cols=np.arange(a.shape[1]), queries=queries or {})


def fidelity(a, b):
    return abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(mode="analog")
    with pytest.raises(ValueError):
        PipelineConfig(eps=0.5)
    with pytest.raises(ValueError):
        PipelineConfig(ux="polar")


@pytest.mark.parametrize("ux", ["coordinate", "cyclic"])
def test_affine_encoding_tiny_vs_classical(ux):
    grid, u_x, u_w, u_b, spec = tiny_oracles(2, 2, 3, ux)
    aff = affine_encoding(u_x, u_w, u_b)
    expect = (np.outer(grid.points, spec.w) + spec.b[None, :]).ravel()
    assert np.allclose(np.real(aff.encoded), expect, atol=1e-12)
    assert be.encoding_error(aff) <= 1e-10
    assert np.isclose(aff.alpha, u_x.alpha + 1.0)


@pytest.mark.parametrize("act", ["sin", "cos", "tanh"])
def test_feature_be_matches_classical(act):
    grid = CollocationGrid.uniform_grid(4)
    spec = random_feature_spec(3, 1, act, alpha_w=5.0)
    f = build_feature_be(grid, spec, 1e-8)
    phi = assemble_feature_matrix(spec, grid)
    assert np.max(np.abs(np.real(f.encoded).reshape(grid.N, -1) - phi)) <= 1e-7
    assert f.alpha == 1.0


@pytest.mark.parametrize("act", ["sin", "tanh"])
def test_second_derivative_be(act):
    grid = CollocationGrid.uniform_grid(3)
    spec = random_feature_spec(2, 4, act, alpha_w=3.0)
    d2 = build_derivative_be(grid, spec, 1e-9, 2)
    expect = feature_derivative_matrix(spec, grid, 2)
    assert np.max(np.abs(np.real(d2.encoded).reshape(grid.N, -1) - expect)) <= 1e-6


def test_circuit_mode_tanh_needs_fallback():
    grid = CollocationGrid.uniform_grid(2)
    spec = random_feature_spec(1, 0, "tanh", alpha_w=2.0)
    aff = affine_encoding(*encoded_oracles(grid, spec))
    with pytest.raises(UnsupportedActivation):
        activation_encoding(aff, spec, 1e-6, mode="circuit")
    out = activation_encoding(aff, spec, 1e-6, mode="circuit", allow_fallback=True)
    assert np.max(np.abs(np.real(out.encoded).reshape(4, 2) - assemble_feature_matrix(spec, grid))) <= 1e-5


def test_circuit_mode_sin_matches_semantic():
    grid = CollocationGrid.uniform_grid(3)
    spec = random_feature_spec(2, 0, "sin", alpha_w=2.0)
    aff = affine_encoding(*encoded_oracles(grid, spec))
    a = activation_encoding(aff, spec, 1e-8, mode="circuit")
    b = activation_encoding(aff, spec, 1e-8, mode="semantic")
    assert np.max(np.abs(a.encoded - b.encoded)) <= 1e-7


@pytest.mark.parametrize("act", ["sin", "tanh"])
@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 2)])
def test_tiny_entry_oracle_matches_classical(act, n, m):
    o_a, spec, grid = tiny_entry_oracle(n, m, 5, act, alpha_w=3.0)
    a = operator_matrix(spec, grid, 2.0)
    a[[0, -1]] = assemble_feature_matrix(spec, grid.points[[0, -1]])
    assert be.encoding_error(o_a) <= 1e-10
    assert np.max(np.abs(np.real(o_a.encoded).reshape(grid.N, -1) - a)) <= 1e-10
    lifted = be.oracle_to_be(o_a, n, m)
    assert np.max(np.abs(be.extract_block(lifted) - a)) <= 1e-9


def test_system_encoding_matches_classical_matrix():
    p = helmholtz_problem(2.0)
    grid = CollocationGrid.uniform_grid(4)
    spec = random_feature_spec(3, 2, "tanh", alpha_w=6.0)
    enc = build_system_be(p, grid, spec, 1e-9)
    sys = assemble_system(p, spec, grid, unit_penalties(grid))
    assert np.max(np.abs(np.real(enc.a_be.dense()) - sys.A)) <= 1e-6
    assert enc.a_amp.alpha >= 1.0


def test_dilate_spectrum(rng):
    a = rng.standard_normal((6, 4))
    d = dilate(a, np.ones(6))
    s = np.linalg.svd(a / np.linalg.norm(a, 2), compute_uv=False)
    w = np.sort(np.linalg.eigvalsh(d.A_tilde))
    expect = np.sort(np.concatenate([s, -s, np.zeros(2 * 6 - 2 * s.size)]))
    assert np.allclose(w, expect, atol=1e-12)
    assert np.isclose(d.kappa_est, s[0] / s[-1])


def test_dilate_rejects_zero():
    with pytest.raises(ValueError):
        dilate(np.zeros((2, 2)), np.ones(2))


def test_dilation_block_encoding_tiny(rng):
    o_a, spec, grid = tiny_entry_oracle(1, 1, 2, "sin", alpha_w=2.0)
    a_be = be.oracle_to_be(o_a, 1, 1)
    dil = dilation_block_encoding(a_be)
    a = np.real(a_be.dense())
    expect = np.block([[np.zeros((2, 2)), a], [a.T, np.zeros((2, 2))]])
    assert np.max(np.abs(be.extract_block(dil) - expect)) <= 1e-10


@pytest.mark.parametrize("kappa", [2.0, 10.0, 50.0])
def test_qlsp_matches_pseudo_inverse(rng, kappa):
    u, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    v, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    s = np.geomspace(1, 1 / kappa, 4)
    a = u[:, :4] @ np.diag(s) @ v.T
    f = rng.standard_normal(8)
    f /= np.linalg.norm(f)
    q = solve_qlsp_semantic(rect_encoding(a), f, eps=1e-6, use_polynomial=True)
    ref = np.linalg.pinv(a) @ f
    assert fidelity(q.v_state, ref) >= 1 - 1e-6
    assert np.isclose(q.xi, np.linalg.norm(np.linalg.pinv(a / q.scale) @ f), rtol=1e-4)
    assert q.polynomial


def test_qlsp_direct_path_is_exact(rng):
    a = rng.standard_normal((8, 4))
    f = rng.standard_normal(8)
    f /= np.linalg.norm(f)
    q = solve_qlsp_semantic(rect_encoding(a), f, use_polynomial=False)
    ref = np.linalg.pinv(a) @ f
    assert fidelity(q.v_state, ref) >= 1 - 1e-12
    assert np.isclose(q.xi, np.linalg.norm(np.linalg.pinv(a / q.scale) @ f))


def test_qlsp_kappa_cap(rng):
    a = np.diag([1.0, 1e-4])
    with pytest.raises(KappaCapExceeded) as info:
        solve_qlsp_semantic(be.from_matrix(a), np.array([1.0, 0.0]), kappa_cap=100.0)
    assert info.value.kappa > 100


def test_qlsp_ledger_charges(rng):
    a = rng.standard_normal((4, 4))
    ledger = ResourceLedger()
    enc = be.from_matrix(a, queries={"U_x": 1, "U_w": 2})
    q = solve_qlsp_semantic(enc, np.array([1.0, 0, 0, 0]), ledger=ledger)
    assert ledger.queries["U_x"] == q.degree * q.rounds
    assert ledger.queries["U_w"] == 2 * q.degree * q.rounds
    assert ledger.queries["U_f"] == 2 * q.rounds + 1
    assert ledger.notes["kappa"] == pytest.approx(q.kappa)


def test_recover_state_is_normalized_feature_image(rng):
    grid = CollocationGrid.uniform_grid(3)
    spec = random_feature_spec(2, 0, "sin", alpha_w=2.0)
    f = build_feature_be(grid, spec, 1e-10)
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    s = recover_solution_state(f, v, grid.N)
    u = assemble_feature_matrix(spec, grid) @ v
    assert np.allclose(s.amplitudes * s.norm_factor, u, atol=1e-8)
    assert np.isclose(np.linalg.norm(s.amplitudes), 1.0)


@pytest.mark.parametrize("act", ["sin", "tanh"])
@pytest.mark.parametrize("m", [3, 5])
def test_run_qrfm_matches_classical(act, m):
    p = helmholtz_problem(2.0)
    grid = CollocationGrid.uniform_grid(6)
    spec = random_feature_spec(m, 17, act, alpha_w=20.0)
    res = run_qrfm(p, grid, spec)
    ref_state, ref_u = classical_state(p, grid, spec)
    assert fidelity(res.state.amplitudes, ref_state) >= 1 - 1e-6
    assert np.max(np.abs(res.u - ref_u)) <= 1e-4 * max(1.0, np.max(np.abs(ref_u)))


def test_run_qrfm_with_default_penalties():
    p = helmholtz_problem(2.0)
    grid = CollocationGrid.uniform_grid(5)
    spec = random_feature_spec(4, 3, "sin", alpha_w=10.0)
    lam = default_penalties(grid)
    res = run_qrfm(p, grid, spec, penalties=lam)
    ref_state, _ = classical_state(p, grid, spec, lam)
    assert fidelity(res.state.amplitudes, ref_state) >= 1 - 1e-6


def test_boundary_weight_validation():
    grid = CollocationGrid.uniform_grid(3)
    assert boundary_weight_from(None, grid) == 1.0
    assert np.isclose(boundary_weight_from(default_penalties(grid), grid), np.sqrt(8))
    bad = np.ones(8)
    bad[3] = 2.0
    with pytest.raises(ValueError):
        boundary_weight_from(bad, grid)
    bad = np.ones(8)
    bad[0] = 2.0
    with pytest.raises(ValueError):
        boundary_weight_from(bad, grid)


def test_resource_report_fields():
    p = helmholtz_problem(2.0)
    grid = CollocationGrid.uniform_grid(4)
    spec = random_feature_spec(3, 0, "sin", alpha_w=5.0)
    ledger = ResourceLedger()
    run_qrfm(p, grid, spec, ledger=ledger)
    rep = resource_report(ledger, 4, 3, 1e-6)
    assert rep["components"]["log_inv_eps"] == 20
    assert rep["components"]["poly_mn"] == 12
    assert rep["components"]["sqrt_mn"] == int(np.ceil(ledger.notes["alpha_A"] - 1e-12))
    assert all(rep["queries"][k] > 0 for k in ("U_x", "U_w", "U_b", "U_f"))
    assert rep["ancilla_watermark"] > 0
