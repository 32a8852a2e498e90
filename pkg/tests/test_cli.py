import json
import random

import pytest
from helpers import hyperdet_zero_instance

from bmalg import scalars
from bmalg.cli import main
from bmalg.core import Hypermatrix, Matrix
from bmalg.inverse import random_pair
from bmalg.products import delta_t, kronecker_delta
from bmalg.rank import delta_sum

RAT = scalars.rational()
GF2 = scalars.gf(2)


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_prod_delta(tmp_path):
    d = kronecker_delta(3, RAT)
    f = write_json(tmp_path, "d.json", d.to_json())
    out = str(tmp_path / "out.json")
    assert main(["prod", f, f, f, "--out", out]) == 0
    assert Hypermatrix.from_json(read_json(out)).equals(d)


def test_prod_background_gives_outer_product(tmp_path):
    rng = random.Random(0)
    a0 = Hypermatrix.random((2, 2, 2), RAT, rng)
    a1 = Hypermatrix.random((2, 2, 2), RAT, rng)
    a2 = Hypermatrix.random((2, 2, 2), RAT, rng)
    bg = delta_t(2, 1, RAT)
    files = [
        write_json(tmp_path, f"{n}.json", h.to_json())
        for n, h in [("a0", a0), ("a1", a1), ("a2", a2), ("bg", bg)]
    ]
    out = str(tmp_path / "out.json")
    code = main(["prod", files[0], files[1], files[2], "--background", files[3],
                 "--out", out])
    assert code == 0
    from bmalg.products import outer_product_at

    assert Hypermatrix.from_json(read_json(out)).equals(
        outer_product_at(a0, a1, a2, 1)
    )


def test_prod_conformability_exit_code(tmp_path):
    rng = random.Random(1)
    a0 = Hypermatrix.random((2, 3, 2), RAT, rng)
    a1 = Hypermatrix.random((2, 2, 2), RAT, rng)  # wrong contracted dim
    a2 = Hypermatrix.random((3, 2, 2), RAT, rng)
    files = [
        write_json(tmp_path, f"x{i}.json", h.to_json())
        for i, h in enumerate([a0, a1, a2])
    ]
    assert main(["prod", *files]) == 3


def test_prod_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    d = write_json(tmp_path, "d.json", kronecker_delta(2, RAT).to_json())
    assert main(["prod", str(bad), d, d]) == 2


def test_rank_min_bound_and_exhaustive(tmp_path):
    target = delta_sum(2, 2, GF2)
    f = write_json(tmp_path, "t.json", target.to_json())
    out = str(tmp_path / "min.json")
    assert main(["rank", f, "--strategy", "min-bound", "--out", out]) == 0
    assert read_json(out)["r"] == 2
    out2 = str(tmp_path / "ex.json")
    assert main(["rank", f, "--strategy", "exhaustive-gf", "--out", out2]) == 0
    assert read_json(out2)["r"] == 1


def test_rank_pipeline_and_domain_guard(tmp_path):
    rng = random.Random(2)
    b = Hypermatrix.random((3, 3, 3), scalars.complex_doubles(), rng, nonzero=True)
    f = write_json(tmp_path, "b.json", b.to_json())
    out = str(tmp_path / "cert.json")
    assert main(["rank", f, "--strategy", "generic-pipeline", "--out", out]) == 0
    cert = read_json(out)
    assert cert["r"] == 2
    assert cert["residual"] < 1e-8

    rational_file = write_json(
        tmp_path, "r.json", Hypermatrix.random((2, 2, 2), RAT, rng).to_json()
    )
    assert main(["rank", rational_file, "--strategy", "generic-pipeline"]) == 2


def test_rank_budget_exit(tmp_path):
    a = Hypermatrix.random((3, 3, 3), scalars.gf(5), random.Random(3))
    f = write_json(tmp_path, "a.json", a.to_json())
    assert main(["rank", f, "--strategy", "exhaustive-gf", "--budget", "10"]) == 4


def test_dependence_two_slice_exact(tmp_path):
    # all-nonzero 2x2x2 with vanishing hyperdeterminant: witness emitted
    rng = random.Random(4)
    b = hyperdet_zero_instance(rng)
    f = write_json(tmp_path, "b.json", b.to_json())
    out = str(tmp_path / "dep.json")
    assert main(["dependence", "--hyper", f, "--out", out]) == 0
    report = read_json(out)
    assert report["dependent"] is True
    assert report["method"] == "exact-ratio"
    assert report["witness"]["residual"] == 0.0

    generic = Hypermatrix.random((2, 2, 2), RAT, rng, nonzero=True)
    from bmalg.rank import hyperdet_2x2x2

    assert hyperdet_2x2x2(generic) != 0
    f2 = write_json(tmp_path, "g.json", generic.to_json())
    out2 = str(tmp_path / "dep2.json")
    assert main(["dependence", "--hyper", f2, "--out", out2]) == 0
    assert read_json(out2)["dependent"] is False


def test_dependence_family_gf(tmp_path):
    m = Matrix.from_function(2, 2, GF2, lambda *_: 1)
    fam = {"matrices": [m.to_json(), m.to_json()]}
    f = write_json(tmp_path, "fam.json", fam)
    out = str(tmp_path / "out.json")
    assert main(["dependence", "--family", f, "--out", out]) == 0
    report = read_json(out)
    assert report["dependent"] is True
    assert report["method"] == "exhaustive"


def test_inverse_pair_roundtrip(tmp_path):
    rng = random.Random(5)
    pair = random_pair(2, 2, 2, RAT, rng)
    f = write_json(tmp_path, "pair.json", pair.to_json())
    out = str(tmp_path / "inv.json")
    assert main(["inverse-pair", f, "--out", out]) == 0
    report = read_json(out)
    assert report["invertible"] is True
    assert report["diagnostics"]["sandwich_residual"] == 0.0

    zeroed = Hypermatrix.from_function(
        (2, 2, 2), RAT, lambda i, t, k: 0 if t == 0 else pair.a[i, t, k]
    )
    broken = {"A": zeroed.to_json(), "B": pair.b.to_json()}
    f2 = write_json(tmp_path, "broken.json", broken)
    out2 = str(tmp_path / "inv2.json")
    assert main(["inverse-pair", f2, "--out", out2]) == 0
    report2 = read_json(out2)
    assert report2["invertible"] is False
    assert report2["diagnostics"]["singular_block"] == [0, 0]


def test_nullity_command(tmp_path):
    target = delta_sum(2, 1, GF2)
    f = write_json(tmp_path, "t.json", target.to_json())
    out = str(tmp_path / "nul.json")
    assert main(["nullity", f, "--strategy", "direct-search", "--out", out]) == 0
    assert read_json(out)["nullity"] == 1
    out2 = str(tmp_path / "nul2.json")
    assert main(["nullity", f, "--strategy", "via-rank", "--out", out2]) == 0
    assert read_json(out2)["nullity"] == 1


def test_verify_command(capsys):
    assert main(["verify", "core", "--seed", "1"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.strip().splitlines()]
    assert all(res["passed"] for res in lines)
    assert main(["verify", "nosuchsuite"]) == 2


def test_determinism_same_seed_same_bytes(tmp_path):
    rng = random.Random(6)
    b = Hypermatrix.random((3, 3, 3), scalars.complex_doubles(), rng, nonzero=True)
    f = write_json(tmp_path, "b.json", b.to_json())
    out1 = tmp_path / "c1.json"
    out2 = tmp_path / "c2.json"
    assert main(["rank", f, "--strategy", "generic-pipeline", "--seed", "7",
                 "--out", str(out1)]) == 0
    assert main(["rank", f, "--strategy", "generic-pipeline", "--seed", "7",
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_domain_cast_flag(tmp_path):
    # an integer-entried rational file analyzed over GF(2) and over complex
    target = delta_sum(2, 2, RAT)
    f = write_json(tmp_path, "t.json", target.to_json())
    out = str(tmp_path / "gf.json")
    assert main(["rank", f, "--strategy", "exhaustive-gf", "--domain", "gf:2",
                 "--out", out]) == 0
    assert read_json(out)["r"] == 1

    rng = random.Random(7)
    b = Hypermatrix.random((3, 3, 3), RAT, rng, nonzero=True)
    f2 = write_json(tmp_path, "b.json", b.to_json())
    out2 = str(tmp_path / "pipe.json")
    assert main(["rank", f2, "--strategy", "generic-pipeline", "--domain",
                 "complex", "--tol", "1e-9", "--out", out2]) == 0
    assert read_json(out2)["r"] == 2

    # complex entries cannot be cast back to an exact domain
    c = Hypermatrix.random((2, 2, 2), scalars.complex_doubles(), rng)
    f3 = write_json(tmp_path, "c.json", c.to_json())
    assert main(["rank", f3, "--strategy", "min-bound", "--domain", "rational"]) == 2

    # bad domain strings are parse errors
    assert main(["rank", f, "--strategy", "min-bound", "--domain", "gf:6"]) == 2
