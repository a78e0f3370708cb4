import io
import json
from fractions import Fraction

import pytest

from germlab.utils.cli import EXIT_OK, EXIT_PARSE, EXIT_SEMANTIC, run_command, verdict_line

ORDER_DEFS = "a: pl { k(j) = j^2 }\nb: pl { k(j) = 2*j }\n"


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), stdout=out)
    return code, out.getvalue()


def write_sample(tmp_path, fn, j_max, name="sample.csv", symmetric=True):
    rows = ["x_num,x_den,f_num,f_den", "0,1,0,1"]
    for j in range(1, j_max + 1):
        points = [Fraction(1, j), Fraction(-1, j)] if symmetric else [Fraction(1, j)]
        for x in points:
            v = Fraction(fn(x))
            rows.append(f"{x.numerator},{x.denominator},{v.numerator},{v.denominator}")
    path = tmp_path / name
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


def test_verdict_line_layout():
    assert verdict_line("MIXED", None, 10, lhs="a") == "VERDICT kind=MIXED witness=- horizon=10 lhs=a"


def test_compare_horizon_mode(germ_file):
    path = germ_file(ORDER_DEFS)
    code, out = run("compare", path, "a", "b", "--horizon", "1000", "--mode", "horizon")
    assert code == EXIT_OK
    assert out == "VERDICT kind=HOLDS_UPTO_LT witness=3 horizon=1000 lhs=a rhs=b\n"


def test_compare_certified(germ_file):
    path = germ_file(ORDER_DEFS)
    code, out = run("compare", path, "a", "b", "--horizon", "1000")
    assert code == EXIT_OK
    assert out == "VERDICT kind=CERTIFIED_LT witness=3 horizon=1000 lhs=a rhs=b certified=true\n"


def test_compare_reports_ordered_labels(germ_file):
    path = germ_file(ORDER_DEFS)
    _, out = run("compare", path, "b", "a", "--horizon", "1000", "--mode", "horizon")
    assert out == "VERDICT kind=HOLDS_UPTO_LT witness=3 horizon=1000 lhs=a rhs=b\n"


def test_output_is_deterministic(germ_file):
    path = germ_file(ORDER_DEFS)
    assert run("compare", path, "a", "b", "--horizon", "500") == run("compare", path, "a", "b", "--horizon", "500")


def test_config_file_sets_horizon(germ_file, tmp_path):
    path = germ_file(ORDER_DEFS)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"order_settings": {"horizon": 50, "compare_mode": "horizon"}}), encoding="utf-8")
    code, out = run("compare", path, "a", "b", "--config", str(config))
    assert code == EXIT_OK
    assert out == "VERDICT kind=HOLDS_UPTO_LT witness=3 horizon=50 lhs=a rhs=b\n"


def test_eval_csv(germ_file):
    code, out = run("eval", germ_file(ORDER_DEFS), "a", "--range", "1..5", "--format", "csv")
    assert code == EXIT_OK
    assert out == "j,num,den\n1,1,1\n2,1,4\n3,1,9\n4,1,16\n5,1,25\n"


def test_eval_lines_default_range(germ_file):
    _, out = run("eval", germ_file(ORDER_DEFS), "b")
    lines = out.splitlines()
    assert len(lines) == 10
    assert lines[0] == "j=1 value=1/2"
    assert lines[-1] == "j=10 value=1/20"


def test_validate_invalid_generator(germ_file):
    code, out = run("validate", germ_file("x: pl { k(j) = j - 5 }\n"), "x", "--horizon", "50")
    assert code == EXIT_OK
    assert out.startswith("VERDICT kind=INVALID witness=1 horizon=50 subject=x ")


def test_validate_valid_germ(germ_file):
    _, out = run("validate", germ_file(ORDER_DEFS), "a", "--horizon", "100")
    assert out.startswith("VERDICT kind=VALID witness=- horizon=100 subject=a tier=STRICT_MONOTONE_CONTINUOUS_INTENT")


def test_equal(germ_file):
    path = germ_file("a: pl { k(j) = j }\nb: table { start = 1; [5]; tail k(j) = j }\n")
    _, out = run("equal", path, "a", "b", "--horizon", "100")
    assert out == "VERDICT kind=EQUAL_FROM witness=2 horizon=100 lhs=a rhs=b\n"


def test_triage(germ_file):
    path = germ_file("r: rat { v(j) = 1/j^2 }\ns: rat { v(j) = 1/j }\n")
    _, out = run("triage", path, "r", "s", "--prefix", "100")
    assert out == "VERDICT kind=ALL_FREE_ULTRAFILTERS witness=2 horizon=100 lhs=r rhs=s lt=99 eq=1 gt=0\n"


def test_class(germ_file):
    path = germ_file("a: rat { v(j) = 1/j^2 }\nb: rat { v(j) = 1/j }\n")
    _, out = run("class", path, "a", "b", "--nmax", "64", "--horizon", "1000")
    assert out == "VERDICT kind=LOWER_CLASS witness=- horizon=1000 lhs=a rhs=b nmax=64\n"


def test_member(germ_file):
    path = germ_file("g: rat { v(j) = 1/j^2 }\nt: pl { k(j) = j }\n")
    _, out = run("member", path, "g", "t", "--horizon", "100")
    assert out == "VERDICT kind=HOLDS_UPTO_LT witness=2 horizon=100 lhs=norm(g) rhs=t member=true\n"


def test_norm_of_sample(tmp_path):
    path = write_sample(tmp_path, lambda x: x * x, 5)
    code, out = run("norm", path, "--format", "csv")
    assert code == EXIT_OK
    assert out == "j,num,den\n1,1,1\n2,1,4\n3,1,9\n4,1,16\n5,1,25\n"


def test_norm_of_zero_sample(tmp_path):
    path = write_sample(tmp_path, lambda x: 0, 5, name="flat.csv")
    _, out = run("norm", path)
    assert out == "VERDICT kind=ZERO_GERM witness=- horizon=5 subject=flat\n"


def test_oscillation(tmp_path, germ_file):
    sample = write_sample(tmp_path, lambda x: x, 12)
    _, out = run("oscillation", sample, germ_file("s: pl { k(j) = j }\n"), "s", "--range", "1..2")
    assert out == "j=1 value=1/1\nj=2 value=1/2\n"


def test_continuity_of_jump(tmp_path, germ_file):
    sample = write_sample(tmp_path, lambda x: x + 1 if x > 0 else x, 60)
    path = germ_file("rho: pl { k(j) = j^2 }\n")
    code, out = run("continuity", sample, path, "rho", "--start", "2", "--horizon", "5")
    assert code == EXIT_OK
    assert out.startswith("VERDICT kind=DISCONTINUOUS_WITNESS witness=- horizon=5 subject=rho floor=")


def test_continuity_of_jump_with_default_window(tmp_path):
    sample = write_sample(tmp_path, lambda x: x + Fraction(1, 2) if x > 0 else x, 60)
    code, out = run("continuity", sample, "--horizon", "20")
    assert code == EXIT_OK
    assert out.startswith("VERDICT kind=DISCONTINUOUS_WITNESS witness=- horizon=20 subject=j floor=")


def test_continuity_of_identity(tmp_path):
    sample = write_sample(tmp_path, lambda x: x, 60)
    _, out = run("continuity", sample, "--horizon", "10")
    assert out.startswith("VERDICT kind=CONTINUOUS_AT_HORIZON")


def test_witness(germ_file):
    path = germ_file("a: pl { k(j) = j }\nb: pl { k(j) = 2*j }\n")
    _, out = run("witness", path, "a", "b", "--horizon", "100", "--range", "1..3")
    assert out.splitlines() == [
        "VERDICT kind=WITNESS witness=1 horizon=100 subject=p* members=2",
        "j=1 value=1/2",
        "j=2 value=1/6",
        "j=3 value=1/9",
    ]


def test_triangle(germ_file):
    path = germ_file("f: pl { k(j) = j }\ng: pl { k(j) = j }\nh: pl { k(j) = j^2 }\n")
    _, out = run("triangle", path, "f", "g", "h", "--horizon", "200")
    assert out == "VERDICT kind=HOLDS_AT_HORIZON witness=- horizon=200 f=f g=g h=h\n"


def test_format(germ_file):
    _, out = run("format", germ_file("a:pl{k(j)=j^2+1}\nb: a . a\n"))
    assert out == "a: pl { k(j) = j^2 + 1 }\nb: (a . a)\n"


def test_converge_scalar_net(tmp_path):
    net = tmp_path / "scalar.net"
    net.write_text(
        "\n".join(
            [
                "poset: n1 < n2, n2 < n3",
                "f: pl { k(j) = j }",
                "p: pl { k(j) = j^2 }",
                "g1: scale(1, f)",
                "g2: scale(1/2, f)",
                "g3: scale(1/3, f)",
                "node n1 = g1",
                "node n2 = g2",
                "node n3 = g3",
                "target = zero",
                "tests = p",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    code, out = run("converge", str(net), "--horizon", "200")
    assert code == EXIT_OK
    assert out.splitlines() == [
        "VERDICT kind=FAILS witness=2 horizon=200 test=p failures=n1:n1@2;n2:n2@3;n3:n3@4",
        "VERDICT kind=FAILS witness=- horizon=200 tests=1",
    ]


def test_converge_with_sample_nodes(tmp_path):
    write_sample(tmp_path, lambda x: x * x, 40, name="sq.csv")
    net = tmp_path / "samples.net"
    net.write_text(
        "poset: a < b\nsample s = sq.csv\nnode a = s\nnode b = s\np: pl { k(j) = j }\ntests = p\n",
        encoding="utf-8",
    )
    _, out = run("converge", str(net), "--horizon", "40")
    assert out.splitlines()[0] == "VERDICT kind=CONVERGES witness=2 horizon=40 test=p d0=a"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["compare"],
        ["no-such-command"],
    ],
)
def test_usage_errors_exit_with_parse_code(argv):
    assert run(*argv)[0] == EXIT_PARSE


def test_syntax_error_exit_code(germ_file):
    assert run("compare", germ_file("a: pl { k(j) = }\n"), "a", "a")[0] == EXIT_PARSE


def test_unknown_germ_exit_code(germ_file):
    assert run("compare", germ_file(ORDER_DEFS), "a", "nope")[0] == EXIT_SEMANTIC


def test_missing_file_exit_code(tmp_path):
    assert run("eval", str(tmp_path / "missing.germ"), "a")[0] == EXIT_SEMANTIC


def test_bad_sample_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n0,0\n", encoding="utf-8")
    assert run("norm", str(path))[0] == EXIT_PARSE
