import math

import pytest

from dilutegas import read_configurations
from dilutegas.cli import main, read_manifest
from dilutegas.specfile import build_model, parse_spec
from dilutegas import SpecError, StepFunction


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture
def wr_spec(tmp_path):
    return write(tmp_path, "wr.spec", "# lattice WR\nfamily = discrete-wr\nlam = 0.05\nk = 1\nd = 2\n")


def test_spec_parser_rejects_unknown_keys():
    with pytest.raises(SpecError):
        parse_spec("family = discrete-wr\nradius = 2\n")
    with pytest.raises(SpecError):
        parse_spec("family = ising\n")
    with pytest.raises(SpecError):
        parse_spec("family = discrete-wr\nlam = x\n")


def test_spec_builds_every_family():
    specs = [
        "family = discrete-wr\nlam_plus = 0.1\nlam_minus = 0.2\nk = 2",
        "family = continuum-wr\nlam = 0.1\nr = 0.5",
        "family = shrunken-wr\nlam = 0.1\nr0 = 0.5\neps = 0.25",
        "family = generalized-wr\nlam = 0.1\nh = 0.5:inf\nj_plus = 0.2:1, 0.4:0.5",
        "family = thin-rods\nlam = 0.1\nhalf_length = 0.5\norientation = 0:0.5, 1.5707963267948966:0.5\nlattice = true",
        "family = peierls\nbeta = 1.0\nlmax = 6",
    ]
    for text in specs:
        model = build_model(parse_spec(text))
        assert model.model_hash() == build_model(parse_spec(text)).model_hash()
    gen = build_model(parse_spec(specs[3]))
    assert gen.h(0.3) == math.inf and gen.j_plus(0.3) == 0.5 and isinstance(gen.j_minus, StepFunction)
    assert build_model(parse_spec("family = discrete-wr\nlam = 0.1\ndelta_E = -0.5")).delta_E == -0.5


def test_coeff(wr_spec, tmp_path, capsys):
    assert main(["coeff", wr_spec]) == 0
    out = capsys.readouterr().out
    assert "5.0000000000000000e-01" in out and "heavily diluted" in out
    rods = write(tmp_path, "rods.spec", "family = thin-rods\nlam = 0.1\nhalf_length = 0.5\n")
    assert main(["coeff", rods]) == 0
    assert format(0.8 * 0.25 / math.pi, ".16e")[:12] in capsys.readouterr().out
    zero = write(tmp_path, "zero.spec", "family = discrete-wr\nlam = 0\n")
    assert main(["coeff", zero, "--strict"]) == 0
    hot = write(tmp_path, "hot.spec", "family = discrete-wr\nlam = 0.5\n")
    assert main(["coeff", hot]) == 0
    assert main(["coeff", hot, "--strict"]) == 3


def test_sample_writes_output_and_one_manifest(wr_spec, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sample", wr_spec, "--window", "0,0:3,3", "--replicas", "6", "--seed", "9", "--out", str(out)]) == 0
    records = read_configurations(out.read_text())
    assert [r for r, _, _ in records] == list(range(6))
    manifests = list(tmp_path.glob("s.csv*.manifest"))
    assert len(manifests) == 1
    fields = read_manifest(manifests[0])
    assert fields["seed"] == "9" and fields["replicas"] == "6" and "clan_size_histogram" in fields
    first = out.read_text()
    assert main(["sample", wr_spec, "--window", "0,0:3,3", "--replicas", "6", "--seed", "9", "--out", str(out)]) == 0
    assert out.read_text() == first


def test_sample_parallel_matches_serial(wr_spec, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sample", wr_spec, "--window", "0,0:2,2", "--replicas", "8", "--seed", "3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_text() == b.read_text()


def test_zero_replicas(wr_spec, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["sample", wr_spec, "--window", "0,0:3,3", "--replicas", "0", "--out", str(out)]) == 0
    assert out.read_text().strip() == "replica,eps,coords,mark,multiplicity"


def test_exit_codes(wr_spec, tmp_path):
    assert main([]) == 1
    assert main(["sample", wr_spec]) == 1
    assert main(["sample", wr_spec, "--window", "nonsense", "--out", str(tmp_path / "x")]) == 1
    assert main(["coeff", str(tmp_path / "missing.spec")]) == 1
    crowded = write(tmp_path, "crowded.spec", "family = discrete-wr\nlam = 0.2\n")
    assert main(["sample", crowded, "--window", "0,0:9,9", "--replicas", "3", "--cap", "2", "--out", str(tmp_path / "c")]) == 2


def test_couple(tmp_path):
    spec = write(tmp_path, "c.spec", "family = shrunken-wr\nlam = 0.1\nr0 = 0.5\n")
    out, rep = tmp_path / "k.csv", tmp_path / "k.rep"
    args = ["couple", spec, "--family", "wr-discretization", "--eps-grid", "0.5,0.25,0.125,0", "--window", "0,0:1,1"]
    assert main(args + ["--replicas", "4", "--out", str(out), "--report", str(rep)]) == 0
    records = read_configurations(out.read_text())
    assert {e for _, e, _ in records} == {0.5, 0.25, 0.125, 0.0}
    assert rep.read_text().splitlines()[0] == "replica,eps_star,negligible"
    assert "eps_grid" in read_manifest(str(out) + ".manifest")
    wr = write(tmp_path, "w.spec", "family = discrete-wr\nlam = 0.05\n")
    assert main(["couple", wr, "--family", "wr-fugacity", "--window", "0,0:2,2", "--out", str(tmp_path / "f.csv")]) == 0
    assert main(["couple", wr, "--family", "wr-discretization", "--window", "0,0:2,2", "--out", str(tmp_path / "g.csv")]) == 1


def test_contours_table(capsys):
    assert main(["contours", "--lmax", "8", "--beta", "1.0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1:4] == ["4 1", "6 2", "8 9"]
    assert any(line.startswith("peierls_sum") for line in out)
    assert main(["contours", "--lmax", "7"]) == 1


def test_validate_oracle_wr(capsys):
    main(["validate", "oracle-wr", "--samples", "3000"])
    out = capsys.readouterr().out
    assert out.startswith("tv")


def test_dynamics(wr_spec, tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dynamics", wr_spec, "--volume", "0,0:1,1", "--horizon", "3", "--seed", "2", "--start", "exact", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "time,kind,coords,mark"
    times = [float(r.split(",")[0]) for r in rows[1:]]
    assert times == sorted(times)
    assert (tmp_path / "d.csv.manifest").exists()
