"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run under pytest (lines are printed with capture disabled) or directly with
``python tests/test_acceptance.py``.
"""
import os
import sys
import time

import numpy as np
import pytest
import scipy.linalg as sla

sys.path.insert(0, os.path.dirname(__file__))

from conftest import model_zoo, random_kraus  # noqa: E402
from fourcorners.asymptotics import (  # noqa: E402
    asymptotic_space,
    drazin_inverse,
    dual_basis,
    embed_channel,
    extract_channel,
    kraus_superop,
)
from fourcorners.cli import parse_range  # noqa: E402
from fourcorners.corners import CORNERS, corner_projectors, model_gaps, nondecaying_projector, validate_proposition1  # noqa: E402
from fourcorners.geometry import (  # noqa: E402
    ParameterFamily,
    Path,
    adiabatic_connection,
    adiabatic_propagate,
    curvature,
    fubini_study,
    holonomy_operator,
    metric_tensor,
    path_length,
    qgt,
    steady_frame,
)
from fourcorners.lindblad import build_generator  # noqa: E402
from fourcorners.models import (  # noqa: E402
    cat_pair,
    coherent_state,
    four_level,
    qubit_pure_family,
    random_hermitian,
    random_unique_model,
    thermal_qubit,
    two_photon,
)
from fourcorners.opspace import commutator_superop, devectorize, vectorize  # noqa: E402
from fourcorners.response import Perturbation, effective_hamiltonian_W  # noqa: E402


def _unit(k, l, n=4):
    X = np.zeros((n, n), dtype=complex)
    X[k, l] = 1.0
    return X


PAIRS = [(k, l) for k in range(2) for l in range(2)]


def criterion_1():
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        sp = asymptotic_space(four_level(alpha))
        J = dual_basis(sp, [_unit(k, l) for k, l in PAIRS])
        for (k, l), X in zip(PAIRS, J):
            want = _unit(k, l) + _unit(k + 2, l + 2) / (1 + 2 * alpha**2 * (k != l))
            worst = max(worst, float(np.max(np.abs(X - want))))
    return worst < 1e-8, f"max entry deviation {worst:.1e}", 1.0


def criterion_2():
    # The reference denominators 1 + i beta (-1)^l are the components of the
    # bra <<J|, i.e. the entrywise conjugate of the matrix J.
    worst = 0.0
    for beta in (0.5, 1.0):
        sp = asymptotic_space(four_level(0.0, beta))
        J = dual_basis(sp, [_unit(k, l) for k, l in PAIRS])
        for (k, l), X in zip(PAIRS, J):
            den = 1 + 1j * beta * (-1) ** l * (k != l)
            bra = np.conj(X)
            want = _unit(k, l) + _unit(k + 2, l + 2) / den
            worst = max(worst, float(np.max(np.abs(bra - want))))
    return worst < 1e-8, f"max entry deviation {worst:.1e} (bra components)", 1.0


def criterion_3():
    rng = np.random.default_rng(2024)
    dev = pdev = 0.0
    for _ in range(20):
        d_in, d_out = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        K = random_kraus(rng, d_in, d_out, n=int(rng.integers(1, 4)))
        kappa = float(rng.uniform(0.5, 2.0))
        m = embed_channel(K, kappa)
        target = kraus_superop(K)
        dev = max(dev, float(np.max(np.abs(extract_channel(m, d_out) - target))))
        E = sla.expm(30.0 / kappa * build_generator(m))
        N = m.dim
        for j in range(d_in):
            for i in range(d_in):
                Y = devectorize(E @ vectorize(_unit(d_out + i, d_out + j, N)))
                want = devectorize(target @ vectorize(_unit(i, j, d_in)))
                pdev = max(pdev, float(np.max(np.abs(Y[:d_out, :d_out] - want))))
    return dev < 1e-9 and pdev < 1e-6, f"extract {dev:.1e}, propagation {pdev:.1e}", 30.0


def criterion_4():
    alphas = parse_range("0:3:0.05")
    margin, sep_fail, parent_dev, n_pre = np.inf, [], 0.0, 0
    for a in alphas:
        g = model_gaps(two_photon(a, 60))
        margin = min(margin, g.delta_edg - g.delta_dg)
        if a >= 1.75 - 1e-12 and not g.delta_edg - g.delta_dg > 0.05 * g.delta_edg:
            sep_fail.append(a)
        if g.precondition:
            n_pre += 1
            parent_dev = max(parent_dev, abs(g.parent_gap - g.delta_edg) / g.delta_edg)
    ok = len(alphas) == 61 and margin >= -1e-9 and not sep_fail and parent_dev < 0.02 and n_pre > 0
    detail = (f"{len(alphas)} points, min(edg-dg) {margin:.2e}, separation failures {sep_fail}, "
              f"parent/edg rel dev {parent_dev:.1e} on {n_pre} points")
    return ok, detail, 600.0


def criterion_5():
    N, r, c, a0 = 40, 0.5, -2.0, 2.0
    fam = ParameterFamily(lambda x: cat_pair(a0, c + r * np.exp(1j * x[0]), N), 1, projector="dark")
    path = Path(lambda s: np.array([2 * np.pi * s]), closed=True)
    k0, k1 = coherent_state(a0, N), coherent_state(c + r, N)
    out = holonomy_operator(fam, path, 800, apply_to=[np.outer(k1, k0.conj())])[0]
    phase = float(np.angle(k1.conj() @ out @ k0))
    want = 2 * np.pi * r * r
    rel = abs(abs(phase) - want) / want
    return rel < 0.05, f"phase {phase:.6f}, 2 x area {want:.6f}, rel err {rel:.1e}", 600.0


def criterion_6():
    fam = ParameterFamily(lambda x: qubit_pure_family(x[0], x[1]), 2)
    ket = lambda y: np.array([np.cos(y[0] / 2), np.exp(1j * y[1]) * np.sin(y[0] / 2)])  # noqa: E731
    rng = np.random.default_rng(6)
    mdev = cmax = 0.0
    for _ in range(5):
        x = np.array([rng.uniform(0.3, 2.8), rng.uniform(0, 2 * np.pi)])
        mdev = max(mdev, float(np.max(np.abs(metric_tensor(fam, x) - fubini_study(ket, x)))))
        for a in range(2):
            cmax = max(cmax, float(np.max(np.abs(adiabatic_connection(fam, x, a)))))
    th = ParameterFamily(lambda x: thermal_qubit(1.0 + 0.3 * x[0], 0.5 + 0.2 * x[1]), 2)
    tmax = float(np.max(np.abs(metric_tensor(th, np.array([0.1, 0.3])))))
    ok = mdev < 1e-6 and cmax < 1e-9 and tmax < 1e-9
    return ok, f"metric-FS {mdev:.1e}, connection {cmax:.1e}, thermal metric {tmax:.1e}", 60.0


def _geometry_family(seed):
    rng = np.random.default_rng(seed)
    G1, G2 = random_hermitian(4 if seed % 2 == 0 else 3, rng), None
    G2 = random_hermitian(G1.shape[0], rng)
    U = lambda x: sla.expm(-1j * (x[0] * G1 + x[1] * G2))  # noqa: E731
    if seed % 2 == 0:
        alpha = float(rng.uniform(0.0, 1.0))
        fam = ParameterFamily(lambda x: four_level(alpha, 0.0, basis=U(x)), 2)
    else:
        m0 = random_unique_model(rng, r=2, q=1, rotate=False)
        fam = ParameterFamily(lambda x: m0.conjugated(U(x)), 2)
    x0 = rng.uniform(-0.5, 0.5, size=2)
    rad = float(rng.uniform(0.1, 0.3))
    return fam, x0, rad, rng


def criterion_7():
    n = 50
    stats = {}

    def record(key, val):
        stats[key] = max(stats.get(key, 0.0), float(val))

    # algebraic suites over the random model zoo (DFS, unique, NS)
    zoo = [z for s in range(17) for z in model_zoo(7000 + s)]
    rng = np.random.default_rng(7)
    for name, m, _ in zoo[:max(n, 51)]:
        L = build_generator(m)
        cp = nondecaying_projector(L)
        record("prop1", validate_proposition1(m, cp)["max_residual"])
        A = rng.normal(size=(m.dim, m.dim)) + 1j * rng.normal(size=(m.dim, m.dim))
        record("partition", np.max(np.abs(sum(cp.project(A, c) for c in CORNERS) - A)))
        sp = asymptotic_space(m)
        K, Jk = sp.psi_kets, sp.j_kets
        record("biorth", np.max(np.abs(Jk.conj().T @ K - np.eye(len(sp)))))
        Vs = -1j * commutator_superop(random_hermitian(m.dim, rng))
        for k in sp.steady_index:
            rho = vectorize(sp.Psi[k])
            record("noleak", np.linalg.norm(cp.proj_LR @ Vs @ rho))
            record("cleanleak", np.linalg.norm(sp.Pinf @ Vs @ rho - sp.Ppsi @ Vs @ sp.Ppsi @ rho))
        D = drazin_inverse(L, sp)
        Q = np.eye(L.shape[0]) - sp.Pinf
        record("drazin", max(np.max(np.abs(L @ D - Q)), np.max(np.abs(D @ L - Q)), np.max(np.abs(D @ sp.Pinf))))
        _, rh = effective_hamiltonian_W(sp, Perturbation(random_hermitian(m.dim, rng)), m)
        f = rng.normal(size=(m.dim, m.dim)) + 1j * rng.normal(size=(m.dim, m.dim))
        _, rj = effective_hamiltonian_W(sp, Perturbation(jump_deltas=((0, f),)), m)
        record("W_fail", (not rh["unitary"]) + (not rj["unitary"]))

    # geometric suites over random parameter families
    for seed in range(n):
        fam, x0, rad, grng = _geometry_family(seed)
        M = metric_tensor(fam, x0)
        w = grng.normal(size=(100, 2))
        record("psd", max(0.0, -np.min(np.einsum("ia,ab,ib->i", w, M, w))))
        F = curvature(fam, x0, 0, 1)
        record("qgt_curv", np.max(np.abs(qgt(fam, x0, 0, 1) - qgt(fam, x0, 1, 0) - F)))
        path = Path(lambda s, x0=x0, rad=rad: x0 + rad * np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)]),
                    closed=True)
        U = holonomy_operator(fam, path, 200)
        f0 = steady_frame(fam, path.curve(0))
        record("unitary", np.max(np.abs(np.linalg.norm(U @ f0.Psi, axis=0) - np.linalg.norm(f0.Psi, axis=0))))
        record("bound", np.linalg.norm(U, 2) - np.exp(path_length(fam, path, 200)))

    limits = {"prop1": 1e-9, "partition": 1e-12, "noleak": 1e-9, "cleanleak": 1e-9, "biorth": 1e-9,
              "drazin": 1e-8, "W_fail": 0.5, "unitary": 1e-6, "qgt_curv": 1e-5, "psd": 1e-10, "bound": 1e-6}
    bad = [k for k, lim in limits.items() if not stats[k] < lim]
    detail = ", ".join(f"{k} {stats[k]:.1e}" for k in limits)
    return not bad, f"{n}+ cases each; {detail}" + (f"; failing {bad}" if bad else ""), 300.0


def criterion_8():
    rng = np.random.default_rng(7)
    G = random_hermitian(4, rng)
    w, V = np.linalg.eigh(G)
    Uf = lambda th: (V * np.exp(-1j * th * w)) @ V.conj().T  # noqa: E731
    fam = ParameterFamily(lambda x: four_level(0.0, 0.0, basis=Uf(x[0])), 1)
    d_edg = model_gaps(fam.model(np.array([0.0]))).delta_edg
    path = Path(lambda s: np.array([s]))
    psi = Uf(0.0)[:, :2]
    rho0 = psi @ np.array([[0.6, 0.3 - 0.2j], [0.3 + 0.2j, 0.4]]) @ psi.conj().T
    res = [adiabatic_propagate(fam, path, c / d_edg, rho0, n_steps=200) for c in (50, 100, 200)]
    devs = [r.deviation for r in res]
    r1, r2 = devs[0] / devs[1], devs[1] / devs[2]
    gain = res[1].deviation / res[1].corrected_deviation
    ok = 1.6 <= r1 <= 2.4 and 1.6 <= r2 <= 2.4 and gain >= 5
    detail = (f"deviations {devs[0]:.3e}, {devs[1]:.3e}, {devs[2]:.3e}; ratios {r1:.2f}, {r2:.2f}; "
              f"first-order gain {gain:.1f}x at T = 100/Delta_edg")
    return ok, detail, 300.0


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


def _evaluate(i):
    t = time.perf_counter()
    ok, detail, budget = CRITERIA[i - 1]()
    dt = time.perf_counter() - t
    in_time = dt < budget
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} criterion {i}: {detail}; runtime {dt:.1f}s (budget {budget:.0f}s)"
    return ok and in_time, line


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i, capsys):
    ok, line = _evaluate(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_evaluate(i) for i in range(1, len(CRITERIA) + 1)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
