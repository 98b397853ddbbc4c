from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from ghz_sagnac.errors import CapacityError, DomainError
from ghz_sagnac.sweep import (
    Axis,
    ResultTable,
    SweepSpec,
    choose_operating_point,
    fock_histogram,
    fringe_phase_rate,
    parity_scan,
    phase_diagram,
    precision_scaling,
    qfi_scaling,
    run,
)


def rows_by(table, **match):
    idx = {k: table.columns.index(k) for k in match}
    return [r for r in table.rows if all(r[i] == pytest.approx(match[k]) for k, i in idx.items())]


def test_axis_parse_and_values():
    ax = Axis.parse("omega_s", "0:1:5")
    assert ax.values() == [0.0, 0.25, 0.5, 0.75, 1.0]
    log = Axis.parse("N", "2:16:4:log")
    assert log.log and log.values() == [2, 4, 8, 16]
    assert Axis.parse("N", "1:3:9").values() == [1, 2, 3]
    assert str(log) == "2:16:4:log"


@pytest.mark.parametrize(
    "name, text",
    [("omega_s", "0:1"), ("omega_s", "0:1:1"), ("omega_s", "a:b:c"), ("theta", "0:1:3"),
     ("omega_p", "0:1:5:log"), ("N", "0:4:3"), ("omega_s", "0:1:3:cubic")],
)
def test_axis_validation(name, text):
    with pytest.raises(DomainError):
        Axis.parse(name, text)


def test_spec_validation():
    for kwargs in (dict(command="plot"), dict(engine="magic"), dict(workers=0), dict(n_particles=0), dict(branch="x")):
        with pytest.raises(DomainError):
            SweepSpec(**{"command": "qfi-scaling", **kwargs})
    with pytest.raises(DomainError):
        SweepSpec("qfi-scaling").axis("N")


def test_table_is_rectangular_and_round_trips():
    with pytest.raises(ValueError):
        ResultTable(["a", "b"], [[1, 2], [3]])
    table = ResultTable(["n", "x", "y"], [[1, math.pi, None], [2, 1e-20, 1 / 3]], {"k": "v"})
    text = table.to_csv()
    assert text.startswith("# k=v\n")
    assert "3.14159265359" in text and "0.333333333333" in text
    back = ResultTable.from_csv(text)
    assert back.columns == table.columns and back.metadata == {"k": "v"}
    assert back.rows[0][2] is None and back.rows[1][0] == 2


def test_phase_diagram_spot_checks():
    spec = SweepSpec("phase-diagram", axes=(Axis("omega_s", 0, 1, 11), Axis("omega_p", 0, 1, 21)))
    table = phase_diagram(spec)
    assert table.columns == ["omega_s", "omega_p", "F0_up", "F0_down"]
    assert len(table.rows) == 11 * 21
    (row,) = rows_by(table, omega_s=0.1, omega_p=0.5)
    assert row[2] == 1.0 and row[3] == 1.0
    (row,) = rows_by(table, omega_s=0.1, omega_p=0.6)
    assert row[2] == pytest.approx(math.exp(-0.245), abs=1e-12)
    for row in rows_by(table, omega_s=0.0):
        assert row[2] == row[3]
    assert table.metadata["skipped_points"] == "11"
    for row in rows_by(table, omega_p=0.0):
        assert row[2] is None and row[3] is None


def test_phase_diagram_bright_lines():
    spec = SweepSpec("phase-diagram", axes=(Axis("omega_s", 0, 1, 5), Axis("omega_p", 0.25, 0.5, 2)))
    for row in phase_diagram(spec).rows:
        assert row[2] == pytest.approx(1.0, abs=1e-15) and row[3] == pytest.approx(1.0, abs=1e-15)


def test_fock_histogram_examples():
    flat = fock_histogram(SweepSpec("fock-histogram", omega_s=(0.1,), omega_p=(0.5,), nmax=5))
    assert flat.column("n") == list(range(6))
    np.testing.assert_allclose(flat.column("F_n"), [1, 0, 0, 0, 0, 0], atol=1e-30)
    dist = fock_histogram(SweepSpec("fock-histogram", omega_s=(0.1,), omega_p=(0.6,), nmax=5))
    lam = 0.245
    np.testing.assert_allclose(dist.column("F_n"), [math.exp(-lam) * lam**n / math.factorial(n) for n in range(6)],
                               rtol=1e-12)
    assert sum(dist.column("F_n")) <= 1
    down = fock_histogram(SweepSpec("fock-histogram", omega_s=(0.1,), omega_p=(0.6,), nmax=5, branch="down"))
    assert down.column("F_n")[0] != dist.column("F_n")[0]


def test_fock_histogram_capacity():
    with pytest.raises(CapacityError):
        fock_histogram(SweepSpec("fock-histogram", nmax=10**6))


def test_qfi_scaling_table():
    spec = SweepSpec("qfi-scaling", axes=(Axis("N", 2, 16, 4, True),), omega_p=(0.5, 0.55, 0.6))
    table = qfi_scaling(spec)
    assert table.columns == ["omega_s", "omega_p", "N", "F_Q_exact", "F_Q_truncated", "F_Q_coherent_spin", "disagree"]
    meta = table.metadata
    assert float(meta["slope.F_Q_exact[omega_s=0.1;omega_p=0.5]"]) == pytest.approx(2, abs=1e-3)
    assert float(meta["slope.F_Q_coherent_spin[omega_s=0.1;omega_p=0.5]"]) == pytest.approx(1, abs=1e-3)
    for wp in ("0.55", "0.6"):
        assert 1.98 <= float(meta[f"slope.F_Q_exact[omega_s=0.1;omega_p={wp}]"]) <= 2.02
    flags = {(r[1], r[2]): r[-1] for r in table.rows}
    assert all(flags[(0.5, n)] == 0 for n in (2, 4, 8, 16))
    assert all(flags[(0.6, n)] == 1 for n in (2, 4, 8, 16))


def test_qfi_scaling_n5_row():
    spec = SweepSpec("qfi-scaling", axes=(Axis("N", 1, 5, 5),), engine="exact")
    table = qfi_scaling(spec)
    assert "F_Q_truncated" not in table.columns and "disagree" not in table.columns
    (row,) = rows_by(table, N=5)
    assert row[table.columns.index("F_Q_exact")] == pytest.approx(986.96, abs=5e-3)


def test_parity_scan_bright_line():
    spec = SweepSpec("parity-scan", axes=(Axis("omega_s", 0, 1, 201),), omega_p=(0.5,), n_particles=5)
    table = parity_scan(spec)
    ws = np.array(table.column("omega_s"))
    np.testing.assert_allclose(table.column("P_exact"), -np.cos(10 * np.pi * ws), atol=1e-12)
    deltas = [d for d in table.column("delta_omega_exact") if d is not None]
    assert len(deltas) > 150
    np.testing.assert_allclose(deltas, 1 / (10 * math.pi), rtol=1e-9)
    empty = [w for w, d in zip(ws, table.column("delta_omega_exact")) if d is None]
    assert all(abs(math.sin(10 * math.pi * w)) < 1e-6 for w in empty)
    assert table.column("P_exact")[0] == -1
    assert not any(table.column("disagree"))


def test_parity_scan_contrast_off_line():
    spec = SweepSpec("parity-scan", axes=(Axis("omega_s", 0, 1, 101),), omega_p=(0.55,), n_particles=5)
    table = parity_scan(spec)
    assert max(abs(p) for p in table.column("P_exact")) < 1
    assert any(table.column("disagree"))


def test_fringe_phase_rate():
    # phi_down - phi_up falls as omega_s grows
    assert fringe_phase_rate(0.5) == pytest.approx(-2 * math.pi, rel=1e-12)
    assert fringe_phase_rate(0.6) == pytest.approx(-2 * (math.pi - 0.6 * math.sin(math.pi / 0.6)), rel=1e-12)


def test_operating_point_keeps_margin():
    ns = [1, 2, 4, 8, 16, 32, 64]
    ws = choose_operating_point(ns, 0.5)
    rate = fringe_phase_rate(0.5)
    for n in ns:
        phase = (n * rate * ws) % math.pi
        assert min(phase, math.pi - phase) >= 0.3
    with pytest.raises(DomainError):
        choose_operating_point(range(1, 200), 0.5)


def test_precision_scaling_table():
    spec = SweepSpec("precision-scaling", axes=(Axis("N", 1, 64, 7, True),), omega_s=())
    table = precision_scaling(spec)
    meta = table.metadata
    assert float(meta["slope.delta_omega_ghz"]) == pytest.approx(-1, abs=1e-2)
    assert float(meta["slope.delta_omega_csstate"]) == pytest.approx(-0.5, abs=1e-2)
    assert "operating_point" in meta and meta["spec.omega_s"] != "auto"
    assert not any(k.startswith("row_error") for k in meta)
    for n, ghz, css, bound in table.rows:
        assert ghz >= bound - 1e-9
        assert css >= ghz


def test_body_independent_of_workers():
    spec = SweepSpec("parity-scan", axes=(Axis("omega_s", 0, 1, 41),), omega_p=(0.5, 0.6))
    assert run(spec).body() == run(replace(spec, workers=3)).body()


def test_grid_capacity():
    spec = SweepSpec("phase-diagram", axes=(Axis("omega_s", 0, 1, 1001), Axis("omega_p", 0, 1, 1001)))
    with pytest.raises(CapacityError):
        run(spec)
