"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import csv
import math
import re
import sys
import time

import numpy as np
import pytest
from scipy.special import erfcx

from ksqueue.cli import main as cli_main
from ksqueue.fracops import MeshSpec, relaxation_residual
from ksqueue.generator import TABLE1_QUEUE, classical_transient_oracle
from ksqueue.mc import SimConfig, default_times, replication_rng, run_simulation, sample_Z_many
from ksqueue.solver import (
    consistency_report,
    laplace_symbol_transient,
    mean_curve,
    paper_closed_form_pn,
    transient,
)
from ksqueue.specfun import (
    Exponential,
    KilbasSaigo,
    KSParams,
    MittagLeffler,
    ks_eval,
    ks_eval_many,
    ks_moments,
    ml_eval,
)

SWEEP = [KSParams(1.0, 0.0), KSParams(0.8, 0.0), KSParams(0.8, 0.2), KSParams(0.6, 0.2)]
TIMES = default_times()
N_MAX = 200


def report(number: int, ok: bool, title: str, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    print(line)
    try:
        from conftest import ACCEPTANCE_LINES
    except ImportError:  # run outside pytest's rootdir
        return
    ACCEPTANCE_LINES.append(line)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_01_special_case_reductions():
    xs = np.linspace(0.0, 20.0, 401)
    with Timer() as tm:
        errs = {}
        for a in (0.5, 0.8):
            ks = ks_eval_many(KSParams(a, 0.0), xs)
            ml = np.array([ml_eval(a, x) for x in xs])
            errs[a] = float(np.max(np.abs(ks - ml)))
        err_exp = float(np.max(np.abs(ks_eval_many(KSParams(1.0, 0.0), xs) - np.exp(-xs))))
    ok = errs[0.5] < 1e-10 and errs[0.8] < 1e-10 and err_exp < 1e-12 and tm.elapsed < 5
    report(1, ok, "special-case reductions",
           f"KS-ML max err a=0.5 {errs[0.5]:.2e}, a=0.8 {errs[0.8]:.2e}; KS(1,0)-exp {err_exp:.2e}; {tm.elapsed:.2f}s")
    assert ok


def test_02_mittag_leffler_identity():
    with Timer() as tm:
        rel = [abs(ml_eval(0.5, x) - erfcx(x)) / erfcx(x) for x in (0.1, 0.5, 1.0, 2.0, 5.0)]
    ok = max(rel) < 1e-10 and tm.elapsed < 1
    report(2, ok, "E_1/2(-x) = exp(x^2) erfc(x)", f"max rel err {max(rel):.2e}; {tm.elapsed:.3f}s")
    assert ok


def test_03_eigenfunction_relation():
    with Timer() as tm:
        out = {}
        for ks in (KSParams(0.8, 0.2), KSParams(0.6, 0.2)):
            res = [relaxation_residual(ks, 0.2, MeshSpec(0.1, 10.0, n)).max_residual for n in (512, 1024, 2048, 4096)]
            out[(ks.alpha, ks.gamma)] = [res[i] / res[i + 1] for i in range(3)]
    ok = all(min(r) >= 1.5 for r in out.values()) and tm.elapsed < 30
    detail = "; ".join(f"({a:g},{g:g}) ratios " + ", ".join(f"{x:.2f}" for x in r) for (a, g), r in out.items())
    report(3, ok, "relaxation residual refinement", f"{detail}; {tm.elapsed:.1f}s")
    assert ok


def test_04_classical_oracle_equivalence():
    with Timer() as tm:
        a = transient(Exponential(), TABLE1_QUEUE, N_MAX, TIMES)
        b = classical_transient_oracle(TABLE1_QUEUE, N_MAX, TIMES)
        err = float(np.max(np.abs(a.probs - b.probs)))
    ok = err < 1e-8 and tm.elapsed < 10
    report(4, ok, "spectral-exp vs uniformization", f"max |diff| {err:.2e}; {tm.elapsed:.2f}s")
    assert ok


def test_05_normalization():
    with Timer() as tm:
        worst_sum, worst_min = 0.0, 0.0
        for ks in SWEEP:
            tab = transient(KilbasSaigo(ks), TABLE1_QUEUE, N_MAX, TIMES)
            worst_sum = max(worst_sum, float(np.max(np.abs(tab.column_sums - 1.0))))
            worst_min = min(worst_min, tab.min_raw)
    ok = worst_sum <= 1e-6 and worst_min >= -1e-9 and tm.elapsed < 60
    report(5, ok, "SpectralKS normalization", f"max |sum-1| {worst_sum:.2e}, min raw entry {worst_min:.2e}; {tm.elapsed:.1f}s")
    assert ok


def test_06_laplace_cross_check():
    t = TIMES[TIMES >= 0.08]
    with Timer() as tm:
        a = laplace_symbol_transient(TABLE1_QUEUE, 0.8, N_MAX, t)
        b = transient(MittagLeffler(0.8), TABLE1_QUEUE, N_MAX, t)
        err = float(np.max(np.abs(a.probs[:, :36] - b.probs[:, :36])))
    ok = err < 1e-5 and tm.elapsed < 60
    report(6, ok, "LaplaceSymbol vs SpectralML (beta=0.8)", f"max |diff| n<=35 {err:.2e}; {tm.elapsed:.1f}s")
    assert ok


def test_07_stationary_ordering():
    t = [5.0, 20.0]
    dev = {}
    dev["classical"] = np.abs(classical_transient_oracle(TABLE1_QUEUE, N_MAX, t).probs[:, 0] - 0.2)
    for ks in (KSParams(0.8, 0.2), KSParams(0.6, 0.2)):
        dev[(ks.alpha, ks.gamma)] = np.abs(transient(KilbasSaigo(ks), TABLE1_QUEUE, N_MAX, t).probs[:, 0] - 0.2)
    c, k1, k2 = dev["classical"], dev[(0.8, 0.2)], dev[(0.6, 0.2)]
    ordered = c[1] < k1[1] < k2[1]
    decreasing = all(v[1] < v[0] for v in dev.values())
    ok = ordered and decreasing
    report(7, ok, "relaxation ordering toward 1-rho",
           f"|p0(20)-0.2| classical {c[1]:.4f} < KS(0.8,0.2) {k1[1]:.4f} < KS(0.6,0.2) {k2[1]:.4f}; "
           f"t=5 values {c[0]:.4f}, {k1[0]:.4f}, {k2[0]:.4f}")
    assert ok


def test_08_paper_closed_form_audit():
    ks = KSParams(0.8, 0.2)
    total = math.fsum(paper_closed_form_pn(TABLE1_QUEUE, ks, n, 0.0) for n in range(N_MAX + 1))
    expect = 5.0 * (1.0 - 0.8**201)
    rep = consistency_report(TABLE1_QUEUE, ks, N_MAX, [0.0, 1.0, 5.0, 20.0])
    flagged = rep.paper_normalization_flag and any(line.startswith("FLAG") for line in rep.lines())
    ok = abs(total - expect) < 1e-9 and flagged
    report(8, ok, "closed-form normalization audit",
           f"sum at t=0 {total!r} vs {expect!r}; report flag {'raised' if flagged else 'missing'}")
    assert ok


def test_09_sampler_gate():
    with Timer() as tm:
        z = sample_Z_many(SimConfig(ks=KSParams(0.5, 0.0)), replication_rng(20260117, 0, stream=2), 100_000)
        se = z.std(ddof=1) / math.sqrt(z.size)
        mean_ok = abs(z.mean() - 2 / math.sqrt(math.pi)) <= 3.5 * se

        ks = KSParams(0.6, 0.2)
        w = sample_Z_many(SimConfig(ks=ks), replication_rng(20260117, 1, stream=2), 100_000)
        lt = []
        for x in (0.5, 2.0):
            e = np.exp(-x * w)
            lt.append(abs(e.mean() - ks_eval(ks, x)) / (e.std(ddof=1) / math.sqrt(e.size)))
        m = ks_moments(ks, 4)
        mom = [abs(np.mean(w**k) / m[k] - 1) for k in range(1, 5)]
    ok = mean_ok and max(lt) <= 3.5 and max(mom) <= 0.02 and tm.elapsed < 60
    report(9, ok, "sampler checks",
           f"StableInverse E[Z] z-score {abs(z.mean() - 2 / math.sqrt(math.pi)) / se:.2f}; "
           f"InverseCDF Laplace z-scores {lt[0]:.2f}, {lt[1]:.2f}; moment rel errs "
           + ", ".join(f"{v:.4f}" for v in mom) + f"; {tm.elapsed:.1f}s")
    assert ok


def _band(est, se, ref):
    return np.abs(est - ref) <= 3.5 * se


def test_10_monte_carlo_vs_deterministic():
    lines, ok = [], True
    with Timer() as tm:
        for ks in (KSParams(1.0, 0.0), KSParams(0.8, 0.2)):
            cfg = SimConfig(ks=ks)
            res = run_simulation(cfg)
            det = transient(KilbasSaigo(ks), TABLE1_QUEUE, N_MAX, cfg.times)
            snap = transient(KilbasSaigo(ks), TABLE1_QUEUE, N_MAX, [cfg.t_star]).probs[0, :16]
            f0 = _band(res.p0_mean, res.p0_se, det.probs[:, 0]).mean()
            fm = _band(res.mean_mean, res.mean_se, mean_curve(det)).mean()
            # bins with no hits have a plug-in SE of 0; use the binomial SE under the reference there
            se = res.snapshot_se[:16].copy()
            empty = res.snapshot_p[:16] == 0
            se[empty] = np.sqrt(snap[empty] * (1 - snap[empty]) / cfg.replications)
            fs = _band(res.snapshot_p[:16], se, snap)
            ok &= f0 >= 0.95 and fm >= 0.95 and bool(fs.all())
            lines.append(f"({ks.alpha:g},{ks.gamma:g}) p0 {f0:.3f}, mean {fm:.3f}, snapshot {int(fs.sum())}/16"
                         f" ({int(empty.sum())} empty bins)")
    ok &= tm.elapsed < 120
    report(10, ok, "Monte Carlo within 3.5 SE of SpectralKS", "; ".join(lines) + f"; {tm.elapsed:.1f}s")
    assert ok


def _csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_11_figure_artifacts(tmp_path, capsys):
    codes = [cli_main(["figures", fig, "--out-dir", str(tmp_path)]) for fig in ("p0", "pn", "mean")]
    capsys.readouterr()
    files = all((tmp_path / f"fig_{f}.{ext}").exists() for f in ("p0", "pn", "mean") for ext in ("svg", "csv"))
    ref = {}
    for fig in ("p0", "mean"):
        m = re.search(r'class="reference" data-value="([^"]+)"', (tmp_path / f"fig_{fig}.svg").read_text())
        ref[fig] = float(m.group(1)) if m else math.nan
    rho = TABLE1_QUEUE.rho
    ref_ok = abs(ref["p0"] - (1 - rho)) < 1e-12 and abs(ref["mean"] - rho / (1 - rho)) < 1e-12
    header, rows = _csv(tmp_path / "fig_pn.csv")
    cols = {h: np.array([float(r[i]) for r in rows]) for i, h in enumerate(header)}
    tail = {lab: cols[f"SpectralKS alpha={lab}"][10:].sum() for lab in ("1 gamma=0", "0.8 gamma=0.2", "0.6 gamma=0.2")}
    broader = tail["0.8 gamma=0.2"] > tail["1 gamma=0"]
    ok = codes == [0, 0, 0] and files and ref_ok and broader
    report(11, ok, "figure artifacts",
           f"reference lines {ref['p0']!r}, {ref['mean']!r}; mass on n>=10 at t*=8: classical "
           f"{tail['1 gamma=0']:.5f}, KS(0.8,0.2) {tail['0.8 gamma=0.2']:.5f} "
           f"(KS(0.6,0.2) {tail['0.6 gamma=0.2']:.5f})")
    assert ok


def test_12_determinism(tmp_path, capsys):
    names = ("p0_curve.csv", "snapshot.csv", "mean_curve.csv", "moments.csv")
    same, differ = True, True
    for a, g in (("1", "0"), ("0.8", "0.2")):
        base = ["simulate", "--alpha", a, "--gamma", g]
        cli_main(base + ["--out-dir", str(tmp_path / f"{a}-1")])
        cli_main(base + ["--out-dir", str(tmp_path / f"{a}-2")])
        cli_main(base + ["--seed", "20260118", "--out-dir", str(tmp_path / f"{a}-3")])
        same &= all((tmp_path / f"{a}-1" / n).read_bytes() == (tmp_path / f"{a}-2" / n).read_bytes() for n in names)
        differ &= (tmp_path / f"{a}-1" / "p0_curve.csv").read_bytes() != (tmp_path / f"{a}-3" / "p0_curve.csv").read_bytes()
    capsys.readouterr()
    ok = same and differ
    report(12, ok, "simulate determinism", f"identical reruns {same}; seed change alters output {differ}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
