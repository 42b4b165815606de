import pytest

from flexsched import Instance
from flexsched.analysis import complexity
from flexsched.ingest import (
    GenerationError,
    ParseError,
    generate,
    load_directory,
    max_edges,
    parse_native,
    parse_psplib,
    read_instance,
    write_native,
)

from conftest import REF4_NATIVE

PSPLIB_4 = """\
************************************************************************
file with basedata            : tiny.bas
initial value random generator: 12345
************************************************************************
projects                      :  1
jobs (incl. supersource/sink ):  4
horizon                       :  5
RESOURCES
  - renewable                 :  1   R
  - nonrenewable              :  0   N
  - doubly constrained        :  0   D
************************************************************************
PROJECT INFORMATION:
pronr.  #jobs rel.date duedate tardcost  MPM-Time
    1      2      0        5        1        5
************************************************************************
PRECEDENCE RELATIONS:
jobnr.    #modes  #successors   successors
   1        1          2           2   3
   2        1          1           4
   3        1          1           4
   4        1          0
************************************************************************
REQUESTS/DURATIONS:
jobnr. mode duration  R 1
------------------------------------------------------------------------
  1      1     0       0
  2      1     3       4
  3      1     2       3
  4      1     0       0
************************************************************************
RESOURCEAVAILABILITIES:
  R 1
    7
************************************************************************
"""


def test_parse_psplib_small():
    inst = parse_psplib(PSPLIB_4, "tiny")
    assert inst.edges == ((0, 1), (0, 2), (1, 3), (2, 3))
    assert inst.durations.tolist() == [0, 3, 2, 0]
    assert inst.name == "tiny"


def test_parse_psplib_missing_section():
    start = PSPLIB_4.index("REQUESTS/DURATIONS")
    end = PSPLIB_4.index("RESOURCEAVAILABILITIES")
    with pytest.raises(ParseError) as exc:
        parse_psplib(PSPLIB_4[:start] + PSPLIB_4[end:])
    assert exc.value.kind == "missing-section"


def test_parse_psplib_malformed_line_number():
    bad = PSPLIB_4.replace("   2        1          1           4", "   2        1          2           4")
    with pytest.raises(ParseError) as exc:
        parse_psplib(bad)
    assert exc.value.kind == "malformed-line"
    assert exc.value.line == 20


def test_parse_psplib_job_count():
    bad = PSPLIB_4.replace("jobs (incl. supersource/sink ):  4", "jobs (incl. supersource/sink ):  5")
    with pytest.raises(ParseError) as exc:
        parse_psplib(bad)
    assert exc.value.kind == "inconsistent-job-count"


def test_native_roundtrip(ref4):
    assert parse_native(REF4_NATIVE, "REF4") == ref4
    assert write_native(ref4) == REF4_NATIVE
    frac = Instance([0.5, 2, 1.25], [(0, 2)], name="x")
    assert parse_native(write_native(frac), "x") == frac


def test_native_count_mismatch():
    with pytest.raises(ParseError) as exc:
        parse_native("2 1\n0 1\n1 1\n0 5")
    assert exc.value.kind == "count-mismatch"
    with pytest.raises(ParseError) as exc:
        parse_native("2 2\n0 1\n1 1\n0 1")
    assert exc.value.kind == "count-mismatch"


def test_native_malformed_and_cycle():
    with pytest.raises(ParseError) as exc:
        parse_native("2 1\n0 x\n1 1\n0 1")
    assert exc.value.kind == "malformed-line" and exc.value.line == 2
    with pytest.raises(ParseError) as exc:
        parse_native("2 2\n0 1\n1 1\n0 1\n1 0")
    assert exc.value.kind == "invalid-instance"


def test_read_and_load_directory(tmp_path):
    (tmp_path / "b.txt").write_text(REF4_NATIVE)
    (tmp_path / "a.txt").write_text("1 0\n0 5\n")
    (tmp_path / "c.sm").write_text(PSPLIB_4)
    (tmp_path / "notes.md").write_text("ignored")
    names = [i.name for i in load_directory(tmp_path, "native")]
    assert names == ["a", "b"]
    assert [i.name for i in load_directory(tmp_path, "psplib")] == ["c"]
    (tmp_path / "bad.txt").write_text("2 1\n0 1\n1 1\n0 5")
    with pytest.raises(ParseError) as exc:
        read_instance(tmp_path / "bad.txt")
    assert "bad.txt" in str(exc.value)


def test_generate_complexity_levels():
    for c in (63, 100, 137):
        inst = generate(122, c, (1, 10), seed=7)
        assert inst.n_tasks == 122
        assert complexity(inst) == c
        assert inst.durations.min() >= 1 and inst.durations.max() <= 10


def test_generate_edge_cases():
    inst = generate(4, 4, (1, 1), seed=3)
    assert inst.n_edges == 6 == max_edges(4)
    chain = generate(2, 1, (1, 10), seed=3)
    assert chain.edges == ((0, 1),)
    with pytest.raises(GenerationError, match="infeasible-edge-count"):
        generate(4, 5, (1, 1), seed=0)
    with pytest.raises(GenerationError, match="infeasible-edge-count"):
        generate(5, 0, (1, 1), seed=0)


def test_generate_is_deterministic():
    a = generate(30, 12, (1, 10), seed=11, index=2)
    b = generate(30, 12, (1, 10), seed=11, index=2)
    c = generate(30, 12, (1, 10), seed=11, index=3)
    assert a == b and write_native(a) == write_native(b)
    assert a != c


def test_generated_instances_are_connected_single_source_sink():
    for i in range(20):
        inst = generate(40, 1 + i, (1, 10), seed=5, index=i)
        assert inst.sources.tolist() == [0]
        assert inst.sinks.tolist() == [39]
