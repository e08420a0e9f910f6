import json
import math
import pathlib

import numpy as np
import pytest

import blorbit

ROOT = pathlib.Path(__file__).resolve().parents[2]


def small_beam(**over):
    cfg = json.loads((ROOT / "configs" / "beam.json").read_text())
    cfg.update(M=6, eta=0.1)
    cfg.pop("selection", None)
    cfg.update(over)
    return cfg


def test_frequencies_and_normal_form():
    s = blorbit.Session(small_beam())
    omega, Omega = s.frequencies()
    assert len(omega) == 2 and len(Omega) == 6
    assert omega[0] == pytest.approx(math.sqrt(2.0))
    A = np.asarray(s.A)
    pattern = np.array([[3 / omega[0] ** 2, 4 / (omega[0] * omega[1])],
                        [4 / (omega[0] * omega[1]), 3 / omega[1] ** 2]])
    c = A[0, 0] / pattern[0, 0]
    assert np.allclose(A, c * pattern, rtol=1e-10, atol=0)
    assert all(r["ratio"] <= 1e-10 for r in s.audit() if r["order"] <= 5)
    assert "A" in json.loads(s.normal_form_json())


def test_selection_and_range_solve():
    s = blorbit.Session(small_beam())
    sel = s.select_torus()
    eta = sel["eta"]
    assert eta ** -2 <= sel["T"] <= 2 * eta ** -2
    assert np.allclose(np.asarray(sel["omega_tilde"]) * sel["T"], 2 * np.pi * np.asarray(sel["k"]), atol=1e-9)
    p = s.solve([0.0, 0.3])
    assert p["converged"] and p["contraction"] < 1
    assert np.isfinite(p["S"])


def test_config_errors_carry_the_field():
    cfg = small_beam()
    del cfg["eta"]
    with pytest.raises(RuntimeError, match="eta"):
        blorbit.Session(cfg)
    with pytest.raises(RuntimeError):
        blorbit.Session(small_beam()).solve([0.0])
