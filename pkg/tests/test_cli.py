import csv
import io as stdio
import math

import pytest

from cdcount import ColoringInstance, potts
from cdcount.cli import main, sci
from cdcount.io import format_edges, format_lcol, format_mrf, parse_lcol, parse_mrf

from instances import cycle, path


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sci():
    assert sci(math.log(650.0)) == "6.50000000000e+2"
    assert sci(0.0) == "1.00000000000e+0"
    assert sci(math.log(123456.789012345)) == "1.23456789012e+5"
    # twelve significant digits round this one up a decade
    assert sci(math.log(9.999999999999e5)) == "1.00000000000e+6"
    assert sci(-math.inf) == "0"


class TestCheck:
    def test_in_regime(self, capsys, write):
        f = write("a.lcol", format_lcol(ColoringInstance.full(path(2), 26)))
        code, out, _ = run(capsys, "check", f)
        assert code == 0
        assert "epsilon0: 0.05703213458" in out and "epsilon: 0.004163123794" in out

    def test_beta_fails(self, capsys, write):
        f = write("a.lcol", format_lcol(ColoringInstance.full(path(2), 26)))
        code, _, err = run(capsys, "check", f, "--alpha", "3", "--beta", "15")
        assert code == 1
        assert "beta condition failed" in err

    def test_malformed(self, capsys, write):
        code, _, err = run(capsys, "check", write("bad.lcol", "p lcol two 3\n"))
        assert code == 2 and "line 1" in err

    def test_mrf(self, capsys, write):
        f = write("m.mrf.json", format_mrf(potts(cycle(4), 2, 0.03)))
        code, out, _ = run(capsys, "check", f)
        assert code == 0 and "gamma: 0.9605761037" in out


class TestExact:
    def test_k2(self, capsys, write):
        code, out, _ = run(capsys, "exact", write("k2.lcol", "p lcol 2 3\ne 1 2\n"))
        assert code == 0 and "Z = 6\n" in out

    def test_potts_zero(self, capsys, write):
        f = write("p.mrf.json", format_mrf(potts(path(5), 2, 0.0)))
        code, out, _ = run(capsys, "exact", f)
        assert code == 0 and "Z = 32.0" in out

    def test_budget(self, capsys, write):
        code, out, _ = run(capsys, "gen", "--kind", "random-triangle-free", "--nodes", "30",
                           "--q", "26", "--seed", "1")
        assert code == 0
        code, _, err = run(capsys, "exact", write("r.lcol", out))
        assert code == 3 and "induced width" in err


class TestCount:
    def test_edge(self, capsys, write):
        f = write("e.lcol", format_lcol(ColoringInstance.full(path(2), 26)))
        code, out, _ = run(capsys, "count", f, "--depth", "2")
        assert code == 0
        line = next(l for l in out.splitlines() if l.startswith("log Z_hat"))
        assert math.exp(float(line.split("=")[1])) == pytest.approx(650, rel=1e-9)
        assert "Z_hat = 6.50000000000e+2" in out

    def test_potts_cycle(self, capsys, write):
        f = write("c.mrf.json", format_mrf(potts(cycle(6), 2, 0.03)))
        code, out, _ = run(capsys, "count", f, "--depth", "10", "--exact")
        assert code == 0
        rel = float(next(l for l in out.splitlines() if l.startswith("rel_err")).split(":")[1])
        assert rel <= 0.01

    def test_out_of_regime(self, capsys, write):
        f = write("o.lcol", format_lcol(ColoringInstance.full(path(3), 5)))
        code, _, _ = run(capsys, "count", f, "--depth", "2")
        assert code == 1
        code, out, _ = run(capsys, "count", f, "--depth", "2", "--force")
        assert code == 0 and "note:" in out

    def test_gamma_failing_mrf_needs_force(self, capsys, write):
        f = write("h.mrf.json", format_mrf(potts(cycle(4), 2, 0.5)))
        assert run(capsys, "count", f, "--depth", "3")[0] == 1
        assert run(capsys, "count", f, "--depth", "3", "--force")[0] == 0

    def test_threads_and_memo_deterministic(self, capsys, write):
        f = write("c.lcol", format_lcol(ColoringInstance.full(cycle(5), 26)))
        outs = []
        for extra in ([], ["--threads", "8"], ["--memo"]):
            code, out, _ = run(capsys, "count", f, "--depth", "3", *extra)
            assert code == 0
            outs.append([l for l in out.splitlines() if l.startswith("log Z_hat")])
        assert outs[0] == outs[1] == outs[2]


class TestConverge:
    def _rows(self, out):
        return list(csv.DictReader(stdio.StringIO(out)))

    def test_header_and_single_node(self, capsys, write):
        f = write("s.lcol", "p lcol 1 26\n")
        code, out, _ = run(capsys, "converge", f, "--max-depth", "3")
        assert code == 0
        assert out.splitlines()[0] == "d,max_abs_log_marginal_err,log_z_hat,rel_err_vs_exact,bound"
        assert [float(r["max_abs_log_marginal_err"]) for r in self._rows(out)] == [0.0] * 4

    def test_path5_under_bound(self, capsys, write):
        f = write("p.lcol", format_lcol(ColoringInstance.full(path(5), 26)))
        code, out, _ = run(capsys, "converge", f, "--max-depth", "4")
        rows = self._rows(out)
        assert code == 0 and len(rows) == 5
        assert all(float(r["max_abs_log_marginal_err"]) <= float(r["bound"]) for r in rows)

    def test_mrf_converges(self, capsys, write):
        f = write("c.mrf.json", format_mrf(potts(cycle(5), 2, 0.03)))
        code, out, _ = run(capsys, "converge", f, "--max-depth", "6")
        rows = self._rows(out)
        assert code == 0
        assert float(rows[-1]["rel_err_vs_exact"]) <= float(rows[0]["rel_err_vs_exact"])


class TestGen:
    def test_cycle(self, capsys):
        code, out, _ = run(capsys, "gen", "--kind", "cycle", "--nodes", "4", "--q", "3")
        inst = parse_lcol(out)
        assert code == 0
        assert inst.graph == cycle(4) and inst == ColoringInstance.full(cycle(4), 3)

    def test_deterministic(self, capsys):
        argv = ["gen", "--kind", "random-triangle-free", "--nodes", "12", "--max-degree", "3",
                "--q", "40", "--list-size", "30", "--seed", "12345678901234567890"]
        a = run(capsys, *argv)[1]
        b = run(capsys, *argv)[1]
        assert a == b and a
        inst = parse_lcol(a)
        assert inst.graph.max_degree <= 3
        assert format_lcol(inst, comment=a.splitlines()[0][2:]) == a

    def test_in_regime_infeasible(self, capsys):
        code, _, err = run(capsys, "gen", "--kind", "path", "--nodes", "5", "--q", "20",
                           "--in-regime")
        assert code == 1 and "q=20" in err
        assert run(capsys, "gen", "--kind", "path", "--nodes", "5", "--q", "26",
                   "--in-regime")[0] == 0


class TestPotts:
    def test_verdict(self, capsys, write):
        f = write("g.txt", format_edges(cycle(5)))
        code, out, err = run(capsys, "potts", f, "--q", "2", "--b", "0.03")
        assert code == 0 and "passes (γ≈0.9606)" in err
        m = parse_mrf(out)
        assert m.f[(0, 1)][0, 0] == pytest.approx(math.exp(0.03))

    def test_zero_and_infinite(self, capsys, write):
        f = write("g.txt", format_edges(path(3)))
        code, out, _ = run(capsys, "potts", f, "--q", "3", "--b", "0")
        assert code == 0 and all((m == 1).all() for m in parse_mrf(out).f.values())
        assert run(capsys, "potts", f, "--q", "2", "--b", "inf")[0] != 0

    def test_parse_error(self, capsys, write):
        assert run(capsys, "potts", write("g.txt", "p edge 3\n"), "--q", "2", "--b", "0")[0] == 2
