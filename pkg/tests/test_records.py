"""Tests for run-record CSV writers and the curve reader."""
import numpy as np

from dynaq.engine import IterationReport
from dynaq.records import (
    AREA_HEADER,
    CURVE_HEADER,
    FRACTION_HEADER,
    WILCOXON_HEADER,
    RunWriter,
    _cell,
    read_curves,
    write_areas,
    write_wilcoxon,
)


def _report(t, labeled, f1, **kw):
    return IterationReport(t=t, labeled_size=labeled, f1_eval=f1,
                           alpha_anomalous=0.5, alpha_uncertain=0.5,
                           alpha_random=0.0, **kw)


class TestCell:
    def test_conventions(self):
        assert _cell(None) == ""
        assert _cell(True) == "1"
        assert _cell(False) == "0"
        assert _cell(np.int64(3)) == "3"
        assert _cell(0.25) == "0.25"
        assert _cell(np.float64(0.1)) == "0.1"
        assert _cell("jas.main") == "jas.main"

    def test_float_round_trips(self):
        v = 0.1 + 0.2
        assert float(_cell(v)) == v
        assert float(_cell(np.float64(v))) == v


class TestRunWriter:
    def test_round_trip(self, tmp_path):
        with RunWriter(tmp_path) as w:
            w.write_report(0, "jas.main", _report(
                0, 125, 0.5, delta_a=0.1, delta_z=-0.2, factor=1.01,
                n_anomalous=10, n_uncertain=10, n_dual=2, n_random=20,
                batch_size=40))
            w.write_report(0, "jas.main", _report(
                1, 165, 0.625, n_anomalous=20, n_uncertain=20, n_dual=0,
                n_random=0, batch_size=40))
            w.write_report(1, "jas.rand", _report(0, 125, 0.375))

        curves = read_curves(tmp_path / "learning_curves.csv")
        assert set(curves) == {(0, "jas.main"), (1, "jas.rand")}
        main = curves[(0, "jas.main")]
        assert main.t.tolist() == [0, 1]
        assert main.labeled.tolist() == [125, 165]
        assert main.metric.tolist() == [0.5, 0.625]
        assert curves[(1, "jas.rand")].metric.tolist() == [0.375]

    def test_headers_and_empty_cells(self, tmp_path):
        with RunWriter(tmp_path) as w:
            w.write_report(0, "jas.basic", _report(0, 125, None))
        curve_lines = (tmp_path / "learning_curves.csv").read_text().splitlines()
        frac_lines = (tmp_path / "fractions.csv").read_text().splitlines()
        assert curve_lines[0] == ",".join(CURVE_HEADER)
        assert frac_lines[0] == ",".join(FRACTION_HEADER)
        # f1 None and unset batch fields serialize as empty cells
        assert curve_lines[1] == "0,jas.basic,0,125,"
        assert frac_lines[1].endswith(",,,,,,,,")

    def test_reader_sorts_by_iteration(self, tmp_path):
        with RunWriter(tmp_path) as w:
            w.write_report(0, "m", _report(2, 205, 0.7))
            w.write_report(0, "m", _report(0, 125, 0.5))
            w.write_report(0, "m", _report(1, 165, 0.6))
        curve = read_curves(tmp_path / "learning_curves.csv")[(0, "m")]
        assert curve.t.tolist() == [0, 1, 2]
        assert curve.metric.tolist() == [0.5, 0.6, 0.7]

    def test_byte_stable(self, tmp_path):
        def emit(d):
            with RunWriter(d) as w:
                w.write_report(0, "m", _report(
                    0, 125, 1 / 3, delta_a=2 / 3, factor=1.0000001,
                    n_random=40, batch_size=40))
        emit(tmp_path / "a")
        emit(tmp_path / "b")
        for fname in ("learning_curves.csv", "fractions.csv"):
            assert (tmp_path / "a" / fname).read_bytes() \
                == (tmp_path / "b" / fname).read_bytes()


class TestTables:
    def test_areas(self, tmp_path):
        p = tmp_path / "areas.csv"
        write_areas([(0, "jas.main", 9, 485, 0.75),
                     (0, "jas.rand", 9, 485, np.float64(0.5))], p)
        lines = p.read_text().splitlines()
        assert lines[0] == ",".join(AREA_HEADER)
        assert lines[1] == "0,jas.main,9,485,0.75"
        assert lines[2] == "0,jas.rand,9,485,0.5"

    def test_wilcoxon(self, tmp_path):
        p = tmp_path / "wilcoxon.csv"
        write_wilcoxon([(9, 485, "jas.main", "jas.rand", 5, 0.03125, True),
                        (9, 485, "jas.main", "jas.basic", 3, None, False)], p)
        lines = p.read_text().splitlines()
        assert lines[0] == ",".join(WILCOXON_HEADER)
        assert lines[1] == "9,485,jas.main,jas.rand,5,0.03125,1"
        assert lines[2] == "9,485,jas.main,jas.basic,3,,0"
