import numpy as np
import pytest

from jumpvar.errors import JumpVarError
from jumpvar.synthetic import business_days, generate_synthetic, read_truth, write_truth


def _scenario(jumps=(), **extra):
    return {"start": "2021-03-01", "n_days": 400,
            "assets": [{"id": "a", "s0": 200.0, "mu": 0.0, "sigma": 0.01,
                        "jumps": [{"day": d, "size": s} for d, s in jumps]}], **extra}


def test_no_jumps_gives_empty_truth(tmp_path):
    panel, truth = generate_synthetic(_scenario(), 1)
    assert truth == []
    write_truth(tmp_path / "t.csv", truth)
    assert (tmp_path / "t.csv").read_text() == "asset,jump_date,jump_index,J\n"


def test_truth_echoes_scenario(tmp_path):
    panel, truth = generate_synthetic(_scenario([(300, -15.0), (100, 20.0)]), 2)
    assert [(t.jump_index, t.J) for t in truth] == [(100, 20.0), (300, -15.0)]
    assert truth[0].jump_date == panel[0].dates[100]
    write_truth(tmp_path / "t.csv", truth)
    assert read_truth(tmp_path / "t.csv") == truth


def test_deterministic_in_seed():
    a, _ = generate_synthetic(_scenario([(100, 20.0)], missing_rate=0.05), 7)
    b, _ = generate_synthetic(_scenario([(100, 20.0)], missing_rate=0.05), 7)
    c, _ = generate_synthetic(_scenario([(100, 20.0)], missing_rate=0.05), 8)
    assert np.array_equal(a[0].prices, b[0].prices, equal_nan=True)
    assert not np.array_equal(a[0].prices, c[0].prices, equal_nan=True)


def test_missing_cells_spare_endpoints_and_jump_days():
    panel, _ = generate_synthetic(_scenario([(100, 20.0)], missing_rate=0.3), 3)
    p = panel[0].prices
    assert np.isnan(p).sum() > 50
    assert not np.isnan(p[[0, 99, 100, -1]]).any()


def test_business_days():
    d = business_days("2021-03-06", 3)  # a Saturday
    assert [str(x) for x in d] == ["2021-03-08", "2021-03-09", "2021-03-10"]


def test_bad_scenarios():
    with pytest.raises(JumpVarError):
        generate_synthetic(_scenario([(0, 1.0)]), 0)
    with pytest.raises(JumpVarError, match="non-positive"):
        generate_synthetic(_scenario([(10, -500.0)]), 0)
